use std::env;
use std::path::{Path, PathBuf};

const SEARCH_DIRS: &[&str] = &[
    "/usr/lib/x86_64-linux-gnu",
    "/usr/lib/aarch64-linux-gnu",
    "/usr/lib64",
    "/usr/lib",
    "/usr/local/lib",
    "/opt/homebrew/lib",
];

fn main() {
    println!("cargo:rerun-if-env-changed=LZ4_LIB_DIR");

    let mut dirs: Vec<PathBuf> = Vec::new();
    if let Ok(dir) = env::var("LZ4_LIB_DIR") {
        dirs.push(PathBuf::from(dir));
    }
    dirs.extend(SEARCH_DIRS.iter().map(PathBuf::from));

    for dir in &dirs {
        if has_any(dir, &["liblz4.so", "liblz4.dylib", "liblz4.a"]) {
            println!("cargo:rustc-link-search=native={}", dir.display());
            println!("cargo:rustc-link-lib=lz4");
            return;
        }
    }
    // Fall back to the versioned soname.
    for dir in &dirs {
        if has_any(dir, &["liblz4.so.1"]) {
            println!("cargo:rustc-link-search=native={}", dir.display());
            println!("cargo:rustc-link-lib=dylib:+verbatim=liblz4.so.1");
            return;
        }
    }
    panic!("liblz4 not found; install liblz4 or set LZ4_LIB_DIR");
}

fn has_any(dir: &Path, names: &[&str]) -> bool {
    names.iter().any(|n| dir.join(n).exists())
}
