use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn basket(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_basket"))
        .args(args)
        .output()
        .expect("spawn basket")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_verify_read() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("j.cbkt");
    let out = basket(&[
        "gen",
        "--profile",
        "jagged",
        "--set",
        "events=300",
        "--codec",
        "lz4",
        "--level",
        "1",
        "--precond",
        "bitshuffle",
        "-o",
        p(&file),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = basket(&["verify", p(&file)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("0 failed"));

    let out = basket(&["read", "--summary", p(&file)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).starts_with("300 entries\njagged_0:[u32]\n"));

    let out = basket(&["read", p(&file), "--branch", "jagged_2"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).lines().count(), 301);
}

#[test]
fn verify_reports_corruption_with_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("f.cbkt");
    let out = basket(&[
        "gen",
        "--set",
        "events=64",
        "--set",
        "branches=2",
        "--codec",
        "store",
        "--level",
        "0",
        "-o",
        p(&file),
    ]);
    assert_eq!(code(&out), 0);
    let mut bytes = fs::read(&file).unwrap();
    // inside the first record's body: past magic, schema and record/frame headers
    let at = bytes.len() / 3;
    bytes[at] ^= 0x40;
    fs::write(&file, &bytes).unwrap();
    let out = basket(&["verify", "--quiet", p(&file)]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn csv_write_read_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("in.csv");
    let text = "id:u16,hits:[u8],e:u64\n1,5 6,18446744073709551615\n2,,0\n772,7,9\n";
    fs::write(&csv, text).unwrap();
    let file = dir.path().join("t.cbkt");
    for codec in ["store", "deflate", "lz4", "lz4hc", "zstd"] {
        let out = basket(&[
            "write",
            p(&csv),
            "--codec",
            codec,
            "--precond",
            "shuffle",
            "-o",
            p(&file),
        ]);
        assert_eq!(
            code(&out),
            0,
            "{codec}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        let out = basket(&["read", p(&file)]);
        assert_eq!(stdout(&out), text, "{codec}");
    }
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&basket(&["frobnicate"])), 2);
    assert_eq!(
        code(&basket(&["gen", "--profile", "no-such-profile", "-o", "x"])),
        2
    );
    assert_eq!(code(&basket(&["gen", "--level", "10", "-o", "x"])), 2);
    assert_eq!(
        code(&basket(&[
            "gen",
            "--set",
            "kind=jagged",
            "--set",
            "lambda=0",
            "-o",
            "x"
        ])),
        2
    );

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("bad.csv");
    fs::write(&csv, "x:i32\n1\n").unwrap();
    assert_eq!(
        code(&basket(&["write", p(&csv), "-o", p(&dir.path().join("o"))])),
        2
    );
    assert_eq!(
        code(&basket(&["bench", "--reps", "2", "--set", "events=10"])),
        2
    );
}

#[test]
fn io_errors_exit_3() {
    assert_eq!(code(&basket(&["verify", "/nonexistent/file.cbkt"])), 3);
    assert_eq!(code(&basket(&["read", "/nonexistent/file.cbkt"])), 3);
    assert_eq!(
        code(&basket(&["write", "/nonexistent/in.csv", "-o", "/tmp/x"])),
        3
    );
    assert_eq!(
        code(&basket(&[
            "gen",
            "--set",
            "events=5",
            "-o",
            "/nonexistent/dir/out.cbkt"
        ])),
        3
    );
}

#[test]
fn bench_csv_report() {
    let out = basket(&[
        "bench",
        "--set",
        "events=200",
        "--codecs",
        "store,lz4,zstd",
        "--levels",
        "1,9",
        "--precond",
        "none,shuffle",
        "--reps",
        "3",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "dataset,codec,level,precond,unc_bytes,comp_bytes,ratio,comp_MBps,decomp_MBps,reps,status"
    );
    let rows: Vec<&str> = lines.collect();
    // store once per preconditioner, then 2 codecs x 2 levels x 2 preconditioners
    assert_eq!(rows.len(), 2 + 8);
    for row in &rows {
        let f: Vec<&str> = row.split(',').collect();
        assert_eq!(f[10], "ok");
        let ratio = f[4].parse::<f64>().unwrap() / f[5].parse::<f64>().unwrap();
        assert_eq!(f[6], format!("{ratio:.6}"));
        assert!(ratio >= 1.0);
        if f[1] == "store" {
            assert_eq!(f[6], "1.000000");
        }
    }
    // informational checks go to stderr for csv output
    assert!(String::from_utf8_lossy(&out.stderr).contains("zstd-ratio-vs-deflate"));
}

#[test]
fn bench_from_file_markdown() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("f.cbkt");
    assert_eq!(
        code(&basket(&["gen", "--set", "events=100", "-o", p(&file)])),
        0
    );
    let report = dir.path().join("r.md");
    let out = basket(&[
        "bench",
        "--file",
        p(&file),
        "--codecs",
        "deflate,lz4",
        "--levels",
        "1,6,9",
        "--precond",
        "none",
        "--reps",
        "3",
        "--format",
        "markdown",
        "-o",
        p(&report),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let md = fs::read_to_string(&report).unwrap();
    assert!(md.starts_with("| dataset | codec |"));
    assert!(md.contains("| f.cbkt | deflate | 9 | none |"));
    assert!(md.contains("Shape checks (informational)"));
}

#[test]
fn train_dict_and_use_it() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples");
    fs::create_dir(&samples).unwrap();
    for i in 0..200 {
        let body = format!(
            "{{\"run\":{},\"lumi\":{},\"trigger\":\"HLT_Mu{}\",\"flags\":[1,0,1]}}",
            1000 + i % 9,
            i,
            i % 4
        )
        .repeat(6);
        fs::write(samples.join(format!("s{i:03}")), body).unwrap();
    }
    let dict = dir.path().join("d.bin");
    let out = basket(&["train-dict", p(&samples), "--size", "4096", "-o", p(&dict)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(&fs::read(&dict).unwrap()[..4], b"CBKD");

    let file = dir.path().join("with_dict.cbkt");
    let out = basket(&[
        "gen",
        "--set",
        "events=100",
        "--codec",
        "zstd",
        "--dict",
        p(&dict),
        "--basket-bytes",
        "256",
        "-o",
        p(&file),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&basket(&["verify", p(&file)])), 0);

    // too few samples for the requested size
    let out = basket(&[
        "train-dict",
        p(&samples),
        "--size",
        "1000000",
        "-o",
        p(&dict),
    ]);
    assert_eq!(code(&out), 2);
    // lz4hc takes no dictionary
    let out = basket(&[
        "gen",
        "--set",
        "events=10",
        "--codec",
        "lz4hc",
        "--dict",
        p(&dict),
        "-o",
        p(&file),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn dict_sweep_reports_each_size() {
    let out = basket(&["dict-sweep", "--baskets", "1200", "--sizes", "1024,4096"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("target_size,dict_bytes"));
    for l in &lines[1..] {
        let f: Vec<&str> = l.split(',').collect();
        assert_eq!(f[6], "ok");
        assert!(f[4].parse::<u64>().unwrap() < f[3].parse::<u64>().unwrap());
    }
}

#[test]
fn profile_file() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("p.conf");
    fs::write(&profile, "# small jagged\nkind=jagged\nevents=50\nbranches=2\nlambda=1.5\nwidth=2\nvalues=uniform\nseed=3\n").unwrap();
    let file = dir.path().join("p.cbkt");
    let out = basket(&["gen", "--profile", p(&profile), "-o", p(&file)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = basket(&["read", "--summary", p(&file)]);
    assert_eq!(stdout(&out), "50 entries\njagged_0:[u16]\njagged_1:[u16]\n");
}
