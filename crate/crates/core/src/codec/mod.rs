//! Pluggable block compression.
//!
//! A payload goes through three steps: its adler32 is taken, the
//! preconditioner is applied, and the result is handed to the backend at the
//! level given by [`map_level`]. If the backend does not shrink the
//! preconditioned bytes the block is stored verbatim instead, so a block body
//! is never longer than its payload.

mod block;
mod dictionary;
pub mod lz4;

use std::fmt;
use std::io;
use std::str::FromStr;
use std::sync::Arc;

use flate2::{Compress, Compression, Decompress, FlushCompress, FlushDecompress, Status};
use thiserror::Error;

pub use block::{CompressedBlock, FrameError, HEADER_LEN};
pub use dictionary::{train_dictionary, Dictionary, DictionaryTable, DEFAULT_DICTIONARY_SIZE};

use crate::checksum::adler32;
use crate::precondition::{Preconditioner, PreconditionerKind};

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("invalid compression level {0} (expected 0..=9)")]
    InvalidLevel(u8),
    #[error("payload of {0} bytes exceeds the 4 GiB block limit")]
    PayloadTooLarge(usize),
    #[error("preconditioner stride must be at least 1")]
    InvalidStride,
    #[error("codec {0} does not accept a dictionary")]
    DictionaryNotSupported(CodecId),
    #[error("checksum mismatch: header {expected:#010x}, payload {actual:#010x}")]
    ChecksumMismatch { expected: u32, actual: u32 },
    #[error("corrupt block body: {0}")]
    CorruptBody(String),
    #[error("unknown codec tag {0}")]
    UnknownCodec(u8),
    #[error("unknown preconditioner tag {0}")]
    UnknownPreconditioner(u8),
    #[error("block needs dictionary {0:#010x}, which was not supplied")]
    MissingDictionary(u32),
    #[error("dictionary training needs at least {needed} samples / bytes, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("dictionary training failed: {0}")]
    TrainingFailed(String),
    #[error("invalid dictionary: {0}")]
    InvalidDictionary(String),
    #[error("{0} backend failed: {1}")]
    Backend(CodecId, String),
}

/// Compression backend. The discriminant is the 1-byte wire tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CodecId {
    Store = 0,
    Deflate = 1,
    Lz4 = 2,
    Lz4Hc = 3,
    Zstd = 4,
}

impl CodecId {
    pub const ALL: [CodecId; 5] = [
        CodecId::Store,
        CodecId::Deflate,
        CodecId::Lz4,
        CodecId::Lz4Hc,
        CodecId::Zstd,
    ];

    pub fn tag(self) -> u8 {
        self as u8
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            CodecId::Store => "store",
            CodecId::Deflate => "deflate",
            CodecId::Lz4 => "lz4",
            CodecId::Lz4Hc => "lz4hc",
            CodecId::Zstd => "zstd",
        }
    }

    /// Backends that accept a preset dictionary.
    pub fn accepts_dictionary(self) -> bool {
        matches!(self, CodecId::Deflate | CodecId::Lz4 | CodecId::Zstd)
    }
}

impl fmt::Display for CodecId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CodecId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "store" | "none" => Ok(CodecId::Store),
            "deflate" | "zlib" => Ok(CodecId::Deflate),
            "lz4" => Ok(CodecId::Lz4),
            "lz4hc" | "lz4-hc" => Ok(CodecId::Lz4Hc),
            "zstd" => Ok(CodecId::Zstd),
            other => Err(format!("unknown codec `{other}`")),
        }
    }
}

/// User-facing compression level: 0 disables compression, 1 is fastest,
/// 9 favours ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Level(u8);

impl Level {
    pub const STORE: Level = Level(0);
    pub const FASTEST: Level = Level(1);
    pub const BEST: Level = Level(9);

    pub fn new(level: u8) -> Result<Self, CodecError> {
        if level > 9 {
            return Err(CodecError::InvalidLevel(level));
        }
        Ok(Level(level))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = Level> {
        (0..=9).map(Level)
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Backend parameter a (codec, level) pair resolves to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendLevel {
    Store,
    Deflate(u32),
    Lz4Acceleration(i32),
    Lz4Hc(i32),
    Zstd(i32),
}

/// Maps a 0–9 level onto the backend's own parameter.
///
/// Deflate uses the level as is. LZ4 levels 1..9 become acceleration 9..1.
/// LZ4-HC levels spread linearly over the HC range, and zstd level `k` becomes
/// `round(19k/9)`. Level 0 is always [`BackendLevel::Store`].
pub fn map_level(codec: CodecId, level: u8) -> Result<BackendLevel, CodecError> {
    let k = Level::new(level)?.get() as i32;
    if k == 0 {
        return Ok(BackendLevel::Store);
    }
    Ok(match codec {
        CodecId::Store => BackendLevel::Store,
        CodecId::Deflate => BackendLevel::Deflate(k as u32),
        CodecId::Lz4 => BackendLevel::Lz4Acceleration(10 - k),
        CodecId::Lz4Hc => {
            let span = lz4::HC_LEVEL_MAX - lz4::HC_LEVEL_MIN;
            // round-half-up of min + (k-1)*span/8 in integers
            BackendLevel::Lz4Hc(lz4::HC_LEVEL_MIN + ((k - 1) * span * 2 + 8) / 16)
        }
        CodecId::Zstd => BackendLevel::Zstd(((k * 19 * 2 + 9) / 18).max(1)),
    })
}

/// How one payload is to be compressed.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionSettings {
    codec: CodecId,
    level: Level,
    preconditioner: Preconditioner,
    dictionary: Option<Arc<Dictionary>>,
}

impl CompressionSettings {
    /// Level 0 forces the store codec.
    pub fn new(codec: CodecId, level: Level) -> Self {
        let codec = if level == Level::STORE {
            CodecId::Store
        } else {
            codec
        };
        Self {
            codec,
            level,
            preconditioner: Preconditioner::None,
            dictionary: None,
        }
    }

    pub fn store() -> Self {
        Self::new(CodecId::Store, Level::STORE)
    }

    pub fn with_preconditioner(mut self, preconditioner: Preconditioner) -> Self {
        self.preconditioner = preconditioner;
        self
    }

    pub fn with_dictionary(mut self, dictionary: Arc<Dictionary>) -> Result<Self, CodecError> {
        if !self.codec.accepts_dictionary() {
            return Err(CodecError::DictionaryNotSupported(self.codec));
        }
        self.dictionary = Some(dictionary);
        Ok(self)
    }

    pub fn codec(&self) -> CodecId {
        self.codec
    }

    pub fn level(&self) -> Level {
        self.level
    }

    pub fn preconditioner(&self) -> Preconditioner {
        self.preconditioner
    }

    pub fn dictionary(&self) -> Option<&Arc<Dictionary>> {
        self.dictionary.as_ref()
    }

    /// Copy of these settings with the preconditioner stride replaced.
    pub fn for_stride(&self, stride: u8) -> Self {
        Self {
            preconditioner: self.preconditioner.restride(stride),
            ..self.clone()
        }
    }

    /// Same settings with the preconditioner family swapped.
    pub fn with_preconditioner_kind(self, kind: PreconditionerKind, stride: u8) -> Self {
        self.with_preconditioner(kind.with_stride(stride))
    }
}

fn backend_err(codec: CodecId) -> impl Fn(String) -> CodecError {
    move |msg| CodecError::Backend(codec, msg)
}

fn deflate(input: &[u8], level: u32, dict: Option<&[u8]>) -> Result<Vec<u8>, CodecError> {
    let err = backend_err(CodecId::Deflate);
    let mut c = Compress::new(Compression::new(level), false);
    if let Some(d) = dict {
        c.set_dictionary(d).map_err(|e| err(e.to_string()))?;
    }
    let mut out = Vec::with_capacity(input.len() + input.len() / 16 + 64);
    loop {
        let consumed = c.total_in() as usize;
        let status = c
            .compress_vec(&input[consumed..], &mut out, FlushCompress::Finish)
            .map_err(|e| err(e.to_string()))?;
        match status {
            Status::StreamEnd => return Ok(out),
            Status::Ok | Status::BufError => out.reserve(out.capacity().max(64)),
        }
    }
}

fn inflate(input: &[u8], expected: usize, dict: Option<&[u8]>) -> Result<Vec<u8>, CodecError> {
    let mut d = Decompress::new(false);
    if let Some(dict) = dict {
        d.set_dictionary(dict)
            .map_err(|e| CodecError::CorruptBody(e.to_string()))?;
    }
    // One byte of headroom detects overlong streams.
    let mut out = Vec::with_capacity(expected + 1);
    loop {
        let (before_in, before_out) = (d.total_in(), d.total_out());
        let status = d
            .decompress_vec(
                &input[before_in as usize..],
                &mut out,
                FlushDecompress::Finish,
            )
            .map_err(|e| CodecError::CorruptBody(e.to_string()))?;
        if out.len() > expected {
            return Err(CodecError::CorruptBody(
                "deflate stream longer than header".into(),
            ));
        }
        match status {
            Status::StreamEnd => break,
            _ if d.total_in() == before_in && d.total_out() == before_out => {
                return Err(CodecError::CorruptBody("truncated deflate stream".into()))
            }
            _ => {}
        }
    }
    Ok(out)
}

fn zstd_compress(input: &[u8], level: i32, dict: Option<&[u8]>) -> Result<Vec<u8>, CodecError> {
    let err = |e: io::Error| CodecError::Backend(CodecId::Zstd, e.to_string());
    let mut c = match dict {
        Some(d) => zstd::bulk::Compressor::with_dictionary(level, d),
        None => zstd::bulk::Compressor::new(level),
    }
    .map_err(err)?;
    c.compress(input).map_err(err)
}

fn zstd_decompress(
    input: &[u8],
    expected: usize,
    dict: Option<&[u8]>,
) -> Result<Vec<u8>, CodecError> {
    let err = |e: io::Error| CodecError::CorruptBody(e.to_string());
    let mut d = match dict {
        Some(d) => zstd::bulk::Decompressor::with_dictionary(d),
        None => zstd::bulk::Decompressor::new(),
    }
    .map_err(err)?;
    d.decompress(input, expected).map_err(err)
}

fn encode_body(
    codec: CodecId,
    backend: BackendLevel,
    input: &[u8],
    dict: Option<&[u8]>,
) -> Result<Option<Vec<u8>>, CodecError> {
    let lz4_failed = || CodecError::Backend(codec, "liblz4 returned an error".into());
    Ok(match backend {
        BackendLevel::Store => None,
        BackendLevel::Deflate(level) => Some(deflate(input, level, dict)?),
        BackendLevel::Lz4Acceleration(acc) => {
            Some(lz4::compress_fast(input, acc, dict).ok_or_else(lz4_failed)?)
        }
        BackendLevel::Lz4Hc(level) => Some(lz4::compress_hc(input, level).ok_or_else(lz4_failed)?),
        BackendLevel::Zstd(level) => Some(zstd_compress(input, level, dict)?),
    })
}

/// Compresses `payload` into a self-describing block.
pub fn compress_block(
    payload: &[u8],
    settings: &CompressionSettings,
) -> Result<CompressedBlock, CodecError> {
    let uncompressed_len =
        u32::try_from(payload.len()).map_err(|_| CodecError::PayloadTooLarge(payload.len()))?;
    let pre = settings.preconditioner;
    if pre != Preconditioner::None && pre.stride() == 0 {
        return Err(CodecError::InvalidStride);
    }
    let checksum = adler32(payload);
    let conditioned = pre.apply(payload);

    let codec = settings.codec;
    let backend = map_level(codec, settings.level.get())?;
    let dict = settings.dictionary.as_deref();
    let encoded = encode_body(codec, backend, &conditioned, dict.map(|d| d.bytes()))?;

    let (codec, dict_id, body) = match encoded {
        Some(body) if body.len() < conditioned.len() => (codec, dict.map_or(0, |d| d.id()), body),
        _ => (CodecId::Store, 0, conditioned),
    };
    Ok(CompressedBlock {
        codec_tag: codec.tag(),
        level: settings.level.get(),
        precond_tag: pre.kind().tag(),
        stride: pre.stride(),
        dict_id,
        uncompressed_len,
        checksum,
        body,
    })
}

/// Restores the original payload of `block`, verifying its checksum.
pub fn decompress_block(
    block: &CompressedBlock,
    dictionaries: &DictionaryTable,
) -> Result<Vec<u8>, CodecError> {
    let codec =
        CodecId::from_tag(block.codec_tag).ok_or(CodecError::UnknownCodec(block.codec_tag))?;
    let kind = PreconditionerKind::from_tag(block.precond_tag)
        .ok_or(CodecError::UnknownPreconditioner(block.precond_tag))?;
    if kind != PreconditionerKind::None && block.stride == 0 {
        return Err(CodecError::InvalidStride);
    }
    let dict = match block.dict_id {
        0 => None,
        id => Some(
            dictionaries
                .get(id)
                .ok_or(CodecError::MissingDictionary(id))?,
        ),
    };
    let dict_bytes = dict.map(|d| d.bytes());
    let expected = block.uncompressed_len as usize;

    let conditioned = match codec {
        CodecId::Store => {
            if block.body.len() != expected {
                return Err(CodecError::CorruptBody(format!(
                    "stored body is {} bytes, header says {expected}",
                    block.body.len()
                )));
            }
            block.body.clone()
        }
        CodecId::Deflate => inflate(&block.body, expected, dict_bytes)?,
        CodecId::Lz4 | CodecId::Lz4Hc => lz4::decompress(&block.body, expected, dict_bytes)
            .ok_or_else(|| CodecError::CorruptBody("lz4 block failed to decode".into()))?,
        CodecId::Zstd => zstd_decompress(&block.body, expected, dict_bytes)?,
    };
    if conditioned.len() != expected {
        return Err(CodecError::CorruptBody(format!(
            "decoded {} bytes, header says {expected}",
            conditioned.len()
        )));
    }
    let payload = kind.with_stride(block.stride).invert(&conditioned);
    let actual = adler32(&payload);
    if actual != block.checksum {
        return Err(CodecError::ChecksumMismatch {
            expected: block.checksum,
            actual,
        });
    }
    Ok(payload)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(codec: CodecId, level: u8) -> CompressionSettings {
        CompressionSettings::new(codec, Level::new(level).unwrap())
    }

    fn empty() -> DictionaryTable {
        DictionaryTable::default()
    }

    #[test]
    fn level_mapping_examples() {
        assert_eq!(
            map_level(CodecId::Deflate, 6).unwrap(),
            BackendLevel::Deflate(6)
        );
        assert_eq!(map_level(CodecId::Zstd, 9).unwrap(), BackendLevel::Zstd(19));
        for codec in CodecId::ALL {
            assert_eq!(map_level(codec, 0).unwrap(), BackendLevel::Store);
        }
        assert!(matches!(
            map_level(CodecId::Lz4, 10),
            Err(CodecError::InvalidLevel(10))
        ));
    }

    #[test]
    fn level_mapping_tables() {
        // Expected values from the real-valued formulas, rounded half up.
        let zstd: Vec<i32> = (1..=9)
            .map(|k| (k as f64 * 19.0 / 9.0 + 0.5).floor() as i32)
            .collect();
        let hc: Vec<i32> = (1..=9)
            .map(|k| (3.0 + (k as f64 - 1.0) * 9.0 / 8.0 + 0.5).floor() as i32)
            .collect();
        assert_eq!(zstd, vec![2, 4, 6, 8, 11, 13, 15, 17, 19]);
        assert_eq!(hc, vec![3, 4, 5, 6, 8, 9, 10, 11, 12]);
        for k in 1..=9u8 {
            let i = (k - 1) as usize;
            assert_eq!(
                map_level(CodecId::Zstd, k).unwrap(),
                BackendLevel::Zstd(zstd[i])
            );
            assert_eq!(
                map_level(CodecId::Lz4Hc, k).unwrap(),
                BackendLevel::Lz4Hc(hc[i])
            );
            assert_eq!(
                map_level(CodecId::Lz4, k).unwrap(),
                BackendLevel::Lz4Acceleration(10 - k as i32)
            );
            assert_eq!(
                map_level(CodecId::Deflate, k).unwrap(),
                BackendLevel::Deflate(k as u32)
            );
        }
    }

    #[test]
    fn level_zero_forces_store() {
        let s = settings(CodecId::Zstd, 0);
        assert_eq!(s.codec(), CodecId::Store);
        let block = compress_block(&[5u8; 1000], &s).unwrap();
        assert_eq!(block.codec_tag, CodecId::Store.tag());
        assert_eq!(block.body, vec![5u8; 1000]);
    }

    #[test]
    fn empty_payload_is_stored() {
        for codec in CodecId::ALL {
            let block = compress_block(&[], &settings(codec, 5)).unwrap();
            assert_eq!(block.codec_tag, 0);
            assert_eq!(block.uncompressed_len, 0);
            assert_eq!(block.checksum, 1);
            assert!(decompress_block(&block, &empty()).unwrap().is_empty());
        }
    }

    #[test]
    fn constant_input_deflates_small() {
        let payload = vec![0xAA; 64 * 1024];
        let block = compress_block(&payload, &settings(CodecId::Deflate, 1)).unwrap();
        assert_eq!(block.codec_tag, CodecId::Deflate.tag());
        assert!(block.body.len() < 655, "{} bytes", block.body.len());
        assert_eq!(decompress_block(&block, &empty()).unwrap(), payload);
    }

    #[test]
    fn dictionary_rejected_for_store_and_hc() {
        let dict = Arc::new(Dictionary::new(7, vec![1; 32], CodecId::Zstd).unwrap());
        assert!(matches!(
            settings(CodecId::Lz4Hc, 3).with_dictionary(dict.clone()),
            Err(CodecError::DictionaryNotSupported(CodecId::Lz4Hc))
        ));
        assert!(settings(CodecId::Zstd, 0)
            .with_dictionary(dict.clone())
            .is_err());
        for codec in [CodecId::Deflate, CodecId::Lz4, CodecId::Zstd] {
            assert!(settings(codec, 1).with_dictionary(dict.clone()).is_ok());
        }
    }

    #[test]
    fn missing_dictionary() {
        let block = CompressedBlock {
            codec_tag: CodecId::Zstd.tag(),
            level: 5,
            precond_tag: 0,
            stride: 0,
            dict_id: 7,
            uncompressed_len: 4,
            checksum: 0,
            body: vec![0; 4],
        };
        assert!(matches!(
            decompress_block(&block, &empty()),
            Err(CodecError::MissingDictionary(7))
        ));
    }

    #[test]
    fn unknown_tags() {
        let mut block = compress_block(b"abcdefgh", &CompressionSettings::store()).unwrap();
        block.codec_tag = 9;
        assert!(matches!(
            decompress_block(&block, &empty()),
            Err(CodecError::UnknownCodec(9))
        ));
        block.codec_tag = 0;
        block.precond_tag = 3;
        assert!(matches!(
            decompress_block(&block, &empty()),
            Err(CodecError::UnknownPreconditioner(3))
        ));
    }

    #[test]
    fn stored_body_flip_is_a_checksum_mismatch() {
        let mut block = compress_block(b"0123456789", &CompressionSettings::store()).unwrap();
        block.body[3] ^= 0x40;
        assert!(matches!(
            decompress_block(&block, &empty()),
            Err(CodecError::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn zero_stride_rejected() {
        let s =
            settings(CodecId::Lz4, 1).with_preconditioner(Preconditioner::Shuffle { stride: 0 });
        assert!(matches!(
            compress_block(&[1, 2, 3], &s),
            Err(CodecError::InvalidStride)
        ));
    }

    #[test]
    fn codec_names_parse() {
        for codec in CodecId::ALL {
            assert_eq!(codec.name().parse::<CodecId>(), Ok(codec));
            assert_eq!(CodecId::from_tag(codec.tag()), Some(codec));
        }
        assert_eq!(CodecId::from_tag(5), None);
    }
}
