//! Minimal binding to the system liblz4 block API.

use std::os::raw::{c_char, c_int, c_void};
use std::ptr::NonNull;

/// Lowest and highest LZ4-HC compression levels (`LZ4HC_CLEVEL_MIN`/`MAX`).
pub const HC_LEVEL_MIN: i32 = 3;
pub const HC_LEVEL_MAX: i32 = 12;

/// Largest block the LZ4 API accepts (`LZ4_MAX_INPUT_SIZE`).
pub const MAX_INPUT_SIZE: usize = 0x7E00_0000;

/// LZ4 only keeps the last 64 KiB of a dictionary.
const MAX_DICT: usize = 64 * 1024;

#[repr(C)]
struct Lz4Stream {
    _private: [u8; 0],
}

extern "C" {
    fn LZ4_versionNumber() -> c_int;
    fn LZ4_compressBound(input_size: c_int) -> c_int;
    fn LZ4_compress_fast(
        src: *const c_char,
        dst: *mut c_char,
        src_size: c_int,
        dst_capacity: c_int,
        acceleration: c_int,
    ) -> c_int;
    fn LZ4_compress_HC(
        src: *const c_char,
        dst: *mut c_char,
        src_size: c_int,
        dst_capacity: c_int,
        compression_level: c_int,
    ) -> c_int;
    fn LZ4_decompress_safe_usingDict(
        src: *const c_char,
        dst: *mut c_char,
        compressed_size: c_int,
        dst_capacity: c_int,
        dict_start: *const c_char,
        dict_size: c_int,
    ) -> c_int;
    fn LZ4_createStream() -> *mut Lz4Stream;
    fn LZ4_freeStream(stream: *mut Lz4Stream) -> c_int;
    fn LZ4_loadDict(stream: *mut Lz4Stream, dictionary: *const c_char, dict_size: c_int) -> c_int;
    fn LZ4_compress_fast_continue(
        stream: *mut Lz4Stream,
        src: *const c_char,
        dst: *mut c_char,
        src_size: c_int,
        dst_capacity: c_int,
        acceleration: c_int,
    ) -> c_int;
}

/// Library version as `major*10000 + minor*100 + release`.
pub fn version_number() -> i32 {
    unsafe { LZ4_versionNumber() }
}

struct Stream(NonNull<Lz4Stream>);

impl Stream {
    fn new() -> Option<Self> {
        NonNull::new(unsafe { LZ4_createStream() }).map(Stream)
    }
}

impl Drop for Stream {
    fn drop(&mut self) {
        unsafe {
            LZ4_freeStream(self.0.as_ptr());
        }
    }
}

fn dict_tail(dict: &[u8]) -> &[u8] {
    &dict[dict.len().saturating_sub(MAX_DICT)..]
}

fn bound(len: usize) -> Option<usize> {
    if len > MAX_INPUT_SIZE {
        return None;
    }
    let b = unsafe { LZ4_compressBound(len as c_int) };
    (b > 0).then_some(b as usize)
}

/// Encoding of an empty block: one token with no literals and no match.
const EMPTY_BLOCK: [u8; 1] = [0];

fn run(src: &[u8], f: impl FnOnce(*mut c_char, c_int) -> c_int) -> Option<Vec<u8>> {
    // Empty input is encoded directly, without calling liblz4.
    if src.is_empty() {
        return Some(EMPTY_BLOCK.to_vec());
    }
    let cap = bound(src.len())?;
    let mut out = vec![0u8; cap];
    let written = f(out.as_mut_ptr().cast(), cap as c_int);
    if written <= 0 {
        return None;
    }
    out.truncate(written as usize);
    Some(out)
}

/// Fast-mode block compression, optionally primed with a dictionary.
pub fn compress_fast(src: &[u8], acceleration: i32, dict: Option<&[u8]>) -> Option<Vec<u8>> {
    match dict {
        None => run(src, |dst, cap| unsafe {
            LZ4_compress_fast(
                src.as_ptr().cast(),
                dst,
                src.len() as c_int,
                cap,
                acceleration,
            )
        }),
        Some(dict) => {
            let dict = dict_tail(dict);
            let stream = Stream::new()?;
            unsafe {
                LZ4_loadDict(stream.0.as_ptr(), dict.as_ptr().cast(), dict.len() as c_int);
            }
            run(src, |dst, cap| unsafe {
                LZ4_compress_fast_continue(
                    stream.0.as_ptr(),
                    src.as_ptr().cast(),
                    dst,
                    src.len() as c_int,
                    cap,
                    acceleration,
                )
            })
        }
    }
}

/// High-compression block compression.
pub fn compress_hc(src: &[u8], level: i32) -> Option<Vec<u8>> {
    run(src, |dst, cap| unsafe {
        LZ4_compress_HC(src.as_ptr().cast(), dst, src.len() as c_int, cap, level)
    })
}

/// Decodes a block that must expand to exactly `expected_len` bytes.
pub fn decompress(src: &[u8], expected_len: usize, dict: Option<&[u8]>) -> Option<Vec<u8>> {
    if src.len() > MAX_INPUT_SIZE || expected_len > MAX_INPUT_SIZE {
        return None;
    }
    if expected_len == 0 {
        return (src == EMPTY_BLOCK).then(Vec::new);
    }
    let dict = dict.map(dict_tail).unwrap_or(&[]);
    let mut out = vec![0u8; expected_len];
    let n = unsafe {
        LZ4_decompress_safe_usingDict(
            src.as_ptr().cast(),
            out.as_mut_ptr().cast(),
            src.len() as c_int,
            expected_len as c_int,
            dict.as_ptr().cast::<c_void>().cast(),
            dict.len() as c_int,
        )
    };
    (n >= 0 && n as usize == expected_len).then_some(out)
}
