//! On-disk container: schema, dictionaries, compressed basket records and an
//! index, bracketed by magic numbers. See `FORMAT.md` at the repository root
//! for the byte layout.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use thiserror::Error;

use crate::codec::{
    compress_block, decompress_block, CodecError, CodecId, CompressedBlock, CompressionSettings,
    Dictionary, DictionaryTable, FrameError,
};
use crate::column::{
    basketize, deserialize_column, Basket, BranchDescriptor, Column, ColumnError, ElementKind,
    Schema, Tree, Width, OFFSET_WIDTH,
};

pub const MAGIC: [u8; 8] = *b"CBKT\0\x01\0\0";

/// Index offset (8 bytes) plus trailing magic (8 bytes).
const TRAILER_LEN: usize = 16;
const RECORD_HEADER_LEN: usize = 14;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a basket container (bad magic)")]
    BadMagic,
    #[error("file truncated: {0}")]
    TruncatedFile(String),
    #[error("checksum mismatch: header {expected:#010x}, payload {actual:#010x}")]
    ChecksumMismatch { expected: u32, actual: u32 },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("corrupt index: {0}")]
    CorruptIndex(String),
    #[error("malformed file: {0}")]
    Malformed(String),
    #[error("dictionary id {0:#010x} used by two different dictionaries")]
    DuplicateDictionary(u32),
    #[error(transparent)]
    Codec(CodecError),
    #[error(transparent)]
    Column(#[from] ColumnError),
}

impl From<CodecError> for ContainerError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::ChecksumMismatch { expected, actual } => {
                ContainerError::ChecksumMismatch { expected, actual }
            }
            other => ContainerError::Codec(other),
        }
    }
}

/// Per-branch totals over the emitted blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchSummary {
    pub name: String,
    pub baskets: usize,
    pub uncompressed_bytes: u64,
    pub compressed_bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WriteSummary {
    pub bytes_written: u64,
    pub branches: Vec<BranchSummary>,
}

impl WriteSummary {
    pub fn uncompressed_bytes(&self) -> u64 {
        self.branches.iter().map(|b| b.uncompressed_bytes).sum()
    }

    pub fn compressed_bytes(&self) -> u64 {
        self.branches.iter().map(|b| b.compressed_bytes).sum()
    }
}

fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_be_bytes());
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_be_bytes());
}

fn put_u64(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.to_be_bytes());
}

fn kind_tag(kind: ElementKind) -> u8 {
    match kind {
        ElementKind::FixedScalar(_) => 0,
        ElementKind::JaggedArray(_) => 1,
    }
}

/// Serializes `tree` into container bytes. `settings` holds one entry per
/// branch; each branch's preconditioner stride is replaced by its element
/// width for the data region and by 4 for the offset region.
pub fn encode(
    tree: &Tree,
    settings: &[CompressionSettings],
    target_basket_bytes: usize,
) -> Result<(Vec<u8>, WriteSummary), ContainerError> {
    let schema = tree.schema();
    if settings.len() != schema.len() {
        return Err(ContainerError::SchemaMismatch(format!(
            "{} settings for {} branches",
            settings.len(),
            schema.len()
        )));
    }
    let n_branches = u16::try_from(schema.len())
        .map_err(|_| ContainerError::SchemaMismatch("more than 65535 branches".into()))?;

    let mut dictionaries = DictionaryTable::new();
    for s in settings {
        if let Some(d) = s.dictionary() {
            if !dictionaries.insert(Arc::clone(d)) {
                return Err(ContainerError::DuplicateDictionary(d.id()));
            }
        }
    }

    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);

    put_u16(&mut out, n_branches);
    for b in schema.branches() {
        let name = b.name.as_bytes();
        let len = u16::try_from(name.len()).map_err(|_| {
            ContainerError::SchemaMismatch(format!("branch name `{}` is too long", b.name))
        })?;
        put_u16(&mut out, len);
        out.extend_from_slice(name);
        out.push(kind_tag(b.element));
        out.push(b.element.width().bytes() as u8);
    }
    put_u64(&mut out, tree.n_entries() as u64);

    put_u32(&mut out, dictionaries.len() as u32);
    for d in dictionaries.iter() {
        put_u32(&mut out, d.id());
        out.push(d.trained_for().tag());
        put_u32(&mut out, d.bytes().len() as u32);
        out.extend_from_slice(d.bytes());
    }

    let mut index: Vec<Vec<u64>> = Vec::with_capacity(schema.len());
    let mut summaries = Vec::with_capacity(schema.len());
    for (b, ((branch, column), s)) in schema
        .branches()
        .iter()
        .zip(tree.columns())
        .zip(settings)
        .enumerate()
    {
        let mut summary = BranchSummary {
            name: branch.name.clone(),
            baskets: 0,
            uncompressed_bytes: 0,
            compressed_bytes: 0,
        };
        let mut offsets = Vec::new();
        let baskets = if column.is_empty() {
            Vec::new()
        } else {
            basketize(column, branch, target_basket_bytes)?
        };
        let data_settings = s.for_stride(branch.element.width().bytes() as u8);
        let offset_settings = s.for_stride(OFFSET_WIDTH as u8);
        for basket in &baskets {
            offsets.push(out.len() as u64);
            put_u16(&mut out, b as u16);
            put_u64(&mut out, basket.first_entry);
            put_u32(&mut out, basket.n_entries);
            let mut blocks = vec![compress_block(&basket.data, &data_settings)?];
            if let Some(raw) = &basket.offsets {
                blocks.push(compress_block(raw, &offset_settings)?);
            }
            for block in &blocks {
                summary.uncompressed_bytes += u64::from(block.uncompressed_len);
                summary.compressed_bytes += u64::from(block.compressed_len());
                block.encode_into(&mut out);
            }
            summary.baskets += 1;
        }
        index.push(offsets);
        summaries.push(summary);
    }

    let index_offset = out.len() as u64;
    for offsets in &index {
        put_u32(&mut out, offsets.len() as u32);
        for &o in offsets {
            put_u64(&mut out, o);
        }
    }
    put_u64(&mut out, index_offset);
    out.extend_from_slice(&MAGIC);

    let summary = WriteSummary {
        bytes_written: out.len() as u64,
        branches: summaries,
    };
    Ok((out, summary))
}

pub fn write_file(
    path: impl AsRef<Path>,
    tree: &Tree,
    settings: &[CompressionSettings],
    target_basket_bytes: usize,
) -> Result<WriteSummary, ContainerError> {
    let (bytes, summary) = encode(tree, settings, target_basket_bytes)?;
    fs::write(path, bytes)?;
    Ok(summary)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    /// Reads may not go past this position.
    end: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], pos: usize, end: usize) -> Self {
        Self { bytes, pos, end }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ContainerError> {
        if self.end - self.pos.min(self.end) < n {
            return Err(ContainerError::TruncatedFile(format!(
                "{what} at byte {} needs {n} bytes",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8, ContainerError> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16, ContainerError> {
        Ok(u16::from_be_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, ContainerError> {
        Ok(u32::from_be_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, ContainerError> {
        Ok(u64::from_be_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn block(&mut self, what: &str) -> Result<CompressedBlock, ContainerError> {
        match CompressedBlock::decode(&self.bytes[self.pos..self.end]) {
            Ok((block, used)) => {
                self.pos += used;
                Ok(block)
            }
            Err(FrameError::Truncated { needed, available }) => {
                Err(ContainerError::TruncatedFile(format!(
                    "{what} at byte {} needs {needed} bytes, {available} left",
                    self.pos
                )))
            }
        }
    }
}

/// Everything outside the basket records.
struct Layout {
    schema: Schema,
    n_entries: u64,
    dictionaries: DictionaryTable,
    records_start: usize,
    index_offset: usize,
    index: Vec<Vec<u64>>,
}

fn parse_layout(bytes: &[u8]) -> Result<Layout, ContainerError> {
    if bytes.len() < MAGIC.len() || bytes[..MAGIC.len()] != MAGIC {
        return Err(ContainerError::BadMagic);
    }
    if bytes.len() < MAGIC.len() + TRAILER_LEN || bytes[bytes.len() - MAGIC.len()..] != MAGIC {
        return Err(ContainerError::TruncatedFile(
            "trailing magic missing".into(),
        ));
    }
    let trailer = bytes.len() - TRAILER_LEN;
    let index_offset = u64::from_be_bytes(bytes[trailer..trailer + 8].try_into().unwrap());

    let mut r = Reader::new(bytes, MAGIC.len(), trailer);
    let n_branches = r.u16("branch count")?;
    let mut branches = Vec::with_capacity(n_branches as usize);
    for _ in 0..n_branches {
        let len = r.u16("branch name length")? as usize;
        let name = std::str::from_utf8(r.take(len, "branch name")?)
            .map_err(|_| ContainerError::Malformed("branch name is not UTF-8".into()))?
            .to_string();
        let kind = r.u8("element kind")?;
        let width = Width::try_from(r.u8("element width")?)?;
        let element = match kind {
            0 => ElementKind::FixedScalar(width),
            1 => ElementKind::JaggedArray(width),
            other => {
                return Err(ContainerError::Malformed(format!(
                    "unknown element kind {other}"
                )))
            }
        };
        branches.push(BranchDescriptor::new(name, element)?);
    }
    let schema = Schema::new(branches)?;
    let n_entries = r.u64("entry count")?;

    let n_dicts = r.u32("dictionary count")?;
    let mut dictionaries = DictionaryTable::new();
    for _ in 0..n_dicts {
        let id = r.u32("dictionary id")?;
        let codec = r.u8("dictionary codec")?;
        let codec = CodecId::from_tag(codec).ok_or(CodecError::UnknownCodec(codec))?;
        let len = r.u32("dictionary length")? as usize;
        let dict = Dictionary::new(id, r.take(len, "dictionary bytes")?.to_vec(), codec)?;
        if !dictionaries.insert(Arc::new(dict)) {
            return Err(ContainerError::DuplicateDictionary(id));
        }
    }
    if dictionaries.len() != n_dicts as usize {
        return Err(ContainerError::Malformed("dictionary listed twice".into()));
    }
    let records_start = r.pos;

    let index_offset = usize::try_from(index_offset)
        .ok()
        .filter(|&o| o >= records_start && o <= trailer)
        .ok_or_else(|| {
            ContainerError::CorruptIndex(format!("index offset {index_offset} is out of range"))
        })?;
    let mut r = Reader::new(bytes, index_offset, trailer);
    let mut index = Vec::with_capacity(schema.len());
    for _ in 0..schema.len() {
        let count = r.u32("index record count")? as usize;
        let mut offsets = Vec::with_capacity(count.min(trailer / 8));
        for _ in 0..count {
            offsets.push(r.u64("index entry")?);
        }
        index.push(offsets);
    }
    if r.pos != trailer {
        return Err(ContainerError::CorruptIndex(format!(
            "{} unexpected bytes after the index",
            trailer - r.pos
        )));
    }
    Ok(Layout {
        schema,
        n_entries,
        dictionaries,
        records_start,
        index_offset,
        index,
    })
}

/// Fixed part of a basket record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RecordHeader {
    pub branch: u16,
    pub first_entry: u64,
    pub n_entries: u32,
}

/// Parses and decodes the record at `offset`, which the index lists under
/// `branch`. Returns the header, decoded entries and the record end.
fn load_record(
    bytes: &[u8],
    layout: &Layout,
    branch: usize,
    offset: u64,
) -> (
    Option<RecordHeader>,
    Result<(Column, usize), ContainerError>,
) {
    let start = match usize::try_from(offset).ok().filter(|&o| {
        o >= layout.records_start
            && o.checked_add(RECORD_HEADER_LEN)
                .is_some_and(|e| e <= layout.index_offset)
    }) {
        Some(s) => s,
        None => {
            return (
                None,
                Err(ContainerError::CorruptIndex(format!(
                    "record offset {offset} is outside the record region"
                ))),
            )
        }
    };
    let mut r = Reader::new(bytes, start, layout.index_offset);
    let header = (|| -> Result<RecordHeader, ContainerError> {
        Ok(RecordHeader {
            branch: r.u16("record branch")?,
            first_entry: r.u64("record first entry")?,
            n_entries: r.u32("record entry count")?,
        })
    })();
    let header = match header {
        Ok(h) => h,
        Err(e) => return (None, Err(e)),
    };
    if header.branch as usize != branch {
        return (
            Some(header),
            Err(ContainerError::CorruptIndex(format!(
                "index lists record at {offset} under branch {branch}, record says {}",
                header.branch
            ))),
        );
    }
    let descriptor = &layout.schema.branches()[branch];
    let body = (|| -> Result<(Column, usize), ContainerError> {
        let data_block = r.block("data block")?;
        let offsets_block = if descriptor.element.is_jagged() {
            Some(r.block("offsets block")?)
        } else {
            None
        };
        let data = decompress_block(&data_block, &layout.dictionaries)?;
        let offsets = offsets_block
            .map(|b| decompress_block(&b, &layout.dictionaries))
            .transpose()?;
        let basket = Basket {
            first_entry: header.first_entry,
            n_entries: header.n_entries,
            data,
            offsets,
        };
        Ok((deserialize_column(&basket, descriptor)?, r.pos))
    })();
    (Some(header), body)
}

/// Parses container bytes back into a tree.
pub fn decode(bytes: &[u8]) -> Result<Tree, ContainerError> {
    let layout = parse_layout(bytes)?;
    let mut columns = Vec::with_capacity(layout.schema.len());
    for (b, descriptor) in layout.schema.branches().iter().enumerate() {
        let mut column = match descriptor.element {
            ElementKind::FixedScalar(_) => Column::Scalars(Vec::new()),
            ElementKind::JaggedArray(_) => Column::Arrays(Vec::new()),
        };
        for &offset in &layout.index[b] {
            let (header, result) = load_record(bytes, &layout, b, offset);
            let (part, _) = result?;
            let header = header.expect("decoded record has a header");
            if header.first_entry != column.len() as u64 {
                return Err(ContainerError::CorruptIndex(format!(
                    "branch `{}`: record starts at entry {}, expected {}",
                    descriptor.name,
                    header.first_entry,
                    column.len()
                )));
            }
            match (&mut column, part) {
                (Column::Scalars(a), Column::Scalars(p)) => a.extend(p),
                (Column::Arrays(a), Column::Arrays(p)) => a.extend(p),
                _ => unreachable!("deserialize_column follows the branch kind"),
            }
        }
        if column.len() as u64 != layout.n_entries {
            return Err(ContainerError::CorruptIndex(format!(
                "branch `{}` holds {} entries, schema says {}",
                descriptor.name,
                column.len(),
                layout.n_entries
            )));
        }
        columns.push(column);
    }
    Ok(Tree::new(layout.schema, columns)?)
}

pub fn read_file(path: impl AsRef<Path>) -> Result<Tree, ContainerError> {
    decode(&fs::read(path)?)
}

/// Outcome for one basket record.
#[derive(Debug)]
pub struct RecordCheck {
    pub branch: usize,
    /// Position of the record within its branch's index list.
    pub ordinal: usize,
    pub file_offset: u64,
    pub header: Option<RecordHeader>,
    pub error: Option<ContainerError>,
}

impl RecordCheck {
    pub fn passed(&self) -> bool {
        self.error.is_none()
    }
}

/// Result of [`verify_file`]. Problems are collected, never raised.
#[derive(Debug, Default)]
pub struct VerifyReport {
    /// Set when the file could not be parsed far enough to check records.
    pub fatal: Option<ContainerError>,
    pub records: Vec<RecordCheck>,
    pub index_problems: Vec<String>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.fatal.is_none()
            && self.index_problems.is_empty()
            && self.records.iter().all(RecordCheck::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RecordCheck> {
        self.records.iter().filter(|r| !r.passed())
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(e) = &self.fatal {
            return writeln!(f, "FAIL  file: {e}");
        }
        for r in &self.records {
            let span = r
                .header
                .map(|h| {
                    format!(
                        "entries {}..{}",
                        h.first_entry,
                        h.first_entry + u64::from(h.n_entries)
                    )
                })
                .unwrap_or_else(|| "entries ?".into());
            match &r.error {
                None => writeln!(
                    f,
                    "ok    branch {} record {} @{} {span}",
                    r.branch, r.ordinal, r.file_offset
                )?,
                Some(e) => writeln!(
                    f,
                    "FAIL  branch {} record {} @{} {span}: {e}",
                    r.branch, r.ordinal, r.file_offset
                )?,
            }
        }
        for p in &self.index_problems {
            writeln!(f, "FAIL  index: {p}")?;
        }
        let failed = self.failures().count();
        writeln!(
            f,
            "{} records, {} failed, {} index problems",
            self.records.len(),
            failed,
            self.index_problems.len()
        )
    }
}

/// Checks every record's checksums and the index's coverage of the entries.
pub fn verify_bytes(bytes: &[u8]) -> VerifyReport {
    let layout = match parse_layout(bytes) {
        Ok(l) => l,
        Err(e) => {
            return VerifyReport {
                fatal: Some(e),
                ..Default::default()
            }
        }
    };
    let mut report = VerifyReport::default();
    let mut spans: Vec<(usize, usize)> = Vec::new();
    for (b, descriptor) in layout.schema.branches().iter().enumerate() {
        let mut next_entry = 0u64;
        for (ordinal, &offset) in layout.index[b].iter().enumerate() {
            let (header, result) = load_record(bytes, &layout, b, offset);
            if let Some(h) = header {
                if h.first_entry != next_entry {
                    report.index_problems.push(format!(
                        "branch `{}` record {ordinal}: starts at entry {}, expected {next_entry}",
                        descriptor.name, h.first_entry
                    ));
                }
                next_entry = h.first_entry + u64::from(h.n_entries);
            }
            let error = match result {
                Ok((column, end)) => {
                    spans.push((offset as usize, end));
                    match header {
                        Some(h) if column.len() as u64 != u64::from(h.n_entries) => {
                            Some(ContainerError::Malformed("entry count mismatch".into()))
                        }
                        _ => None,
                    }
                }
                Err(e) => Some(e),
            };
            report.records.push(RecordCheck {
                branch: b,
                ordinal,
                file_offset: offset,
                header,
                error,
            });
        }
        if next_entry != layout.n_entries {
            report.index_problems.push(format!(
                "branch `{}` covers {next_entry} entries, schema says {}",
                descriptor.name, layout.n_entries
            ));
        }
    }
    spans.sort_unstable();
    for pair in spans.windows(2) {
        if pair[1].0 < pair[0].1 {
            report.index_problems.push(format!(
                "records at {} and {} overlap",
                pair[0].0, pair[1].0
            ));
        }
    }
    report
}

/// Reads `path` and verifies it. Never modifies the file.
pub fn verify_file(path: impl AsRef<Path>) -> VerifyReport {
    match fs::read(path) {
        Ok(bytes) => verify_bytes(&bytes),
        Err(e) => VerifyReport {
            fatal: Some(e.into()),
            ..Default::default()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::Level;
    use crate::precondition::Preconditioner;

    fn tree() -> Tree {
        let schema = Schema::new(vec![
            BranchDescriptor::fixed("n", Width::W4).unwrap(),
            BranchDescriptor::jagged("pt", Width::W2).unwrap(),
        ])
        .unwrap();
        let n: Vec<u64> = (0..500).map(|i| i % 17).collect();
        let pt: Vec<Vec<u64>> = (0..500)
            .map(|i| (0..i % 4).map(|k| k * 100 + i).collect())
            .collect();
        Tree::new(schema, vec![Column::Scalars(n), Column::Arrays(pt)]).unwrap()
    }

    fn settings(codec: CodecId, level: u8) -> Vec<CompressionSettings> {
        vec![CompressionSettings::new(codec, Level::new(level).unwrap()); 2]
    }

    #[test]
    fn roundtrip_each_codec() {
        let t = tree();
        for codec in CodecId::ALL {
            let (bytes, summary) = encode(&t, &settings(codec, 5), 256).unwrap();
            assert_eq!(summary.bytes_written as usize, bytes.len());
            assert_eq!(decode(&bytes).unwrap(), t, "{codec}");
            assert!(verify_bytes(&bytes).is_clean());
        }
    }

    #[test]
    fn summary_matches_blocks() {
        let t = tree();
        let (_, summary) = encode(&t, &settings(CodecId::Store, 0), 1 << 20).unwrap();
        assert_eq!(summary.branches[0].uncompressed_bytes, 500 * 4);
        assert_eq!(summary.branches[0].compressed_bytes, 500 * 4);
        assert_eq!(summary.branches[1].baskets, 1);
        assert_eq!(summary.uncompressed_bytes(), summary.compressed_bytes());
    }

    #[test]
    fn mismatched_settings() {
        let t = tree();
        assert!(matches!(
            encode(&t, &settings(CodecId::Lz4, 1)[..1], 1024),
            Err(ContainerError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn bad_magic_and_truncation() {
        let (bytes, _) = encode(&tree(), &settings(CodecId::Deflate, 6), 512).unwrap();
        assert!(matches!(decode(&[]), Err(ContainerError::BadMagic)));
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(matches!(decode(&wrong), Err(ContainerError::BadMagic)));
        assert!(matches!(
            decode(&bytes[..bytes.len() / 2]),
            Err(ContainerError::TruncatedFile(_))
        ));
        assert!(matches!(
            verify_bytes(&[]).fatal,
            Some(ContainerError::BadMagic)
        ));
    }

    #[test]
    fn corrupt_index_offset() {
        let (mut bytes, _) = encode(&tree(), &settings(CodecId::Lz4, 1), 512).unwrap();
        let at = bytes.len() - 16;
        bytes[at..at + 8].copy_from_slice(&u64::MAX.to_be_bytes());
        assert!(matches!(
            decode(&bytes),
            Err(ContainerError::CorruptIndex(_))
        ));
    }

    #[test]
    fn flipped_stored_byte_is_localized() {
        let t = tree();
        let s = vec![
            CompressionSettings::store()
                .with_preconditioner(Preconditioner::Shuffle { stride: 1 });
            2
        ];
        let (bytes, _) = encode(&t, &s, 256).unwrap();
        let layout = parse_layout(&bytes).unwrap();
        // first body byte of the third record of branch 0
        let target = layout.index[0][2] as usize + RECORD_HEADER_LEN + 20;
        let mut bad = bytes.clone();
        bad[target] ^= 1;
        let report = verify_bytes(&bad);
        let failures: Vec<_> = report.failures().collect();
        assert_eq!(failures.len(), 1);
        assert_eq!((failures[0].branch, failures[0].ordinal), (0, 2));
        assert!(matches!(
            failures[0].error,
            Some(ContainerError::ChecksumMismatch { .. })
        ));
        assert!(report.index_problems.is_empty());
        assert!(matches!(
            decode(&bad),
            Err(ContainerError::ChecksumMismatch { .. })
        ));
    }

    #[test]
    fn dictionaries_are_stored_once() {
        let dict =
            Arc::new(Dictionary::new(99, b"0123456789abcdef".repeat(8), CodecId::Zstd).unwrap());
        let s: Vec<_> = settings(CodecId::Zstd, 3)
            .into_iter()
            .map(|s| s.with_dictionary(dict.clone()).unwrap())
            .collect();
        let t = tree();
        let (bytes, _) = encode(&t, &s, 256).unwrap();
        let layout = parse_layout(&bytes).unwrap();
        assert_eq!(layout.dictionaries.len(), 1);
        assert_eq!(decode(&bytes).unwrap(), t);
    }

    #[test]
    fn conflicting_dictionaries_rejected() {
        let a = Arc::new(Dictionary::new(5, vec![1; 16], CodecId::Zstd).unwrap());
        let b = Arc::new(Dictionary::new(5, vec![2; 16], CodecId::Zstd).unwrap());
        let s = vec![
            CompressionSettings::new(CodecId::Zstd, Level::FASTEST)
                .with_dictionary(a)
                .unwrap(),
            CompressionSettings::new(CodecId::Zstd, Level::FASTEST)
                .with_dictionary(b)
                .unwrap(),
        ];
        assert!(matches!(
            encode(&tree(), &s, 256),
            Err(ContainerError::DuplicateDictionary(5))
        ));
    }
}
