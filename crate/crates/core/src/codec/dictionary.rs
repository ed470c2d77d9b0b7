use std::collections::BTreeMap;
use std::sync::Arc;

use super::{CodecError, CodecId};
use crate::checksum::adler32;

/// Default trained dictionary size.
pub const DEFAULT_DICTIONARY_SIZE: usize = 16 * 1024;

const MIN_SAMPLES: usize = 8;
const MIN_DICT_LEN: usize = 8;
const ZSTD_DICT_MAGIC: u32 = 0xEC30_A437;
const BLOB_MAGIC: &[u8; 4] = b"CBKD";

/// Preset dictionary shared by compressor and decompressor.
#[derive(Clone, PartialEq, Eq)]
pub struct Dictionary {
    id: u32,
    bytes: Vec<u8>,
    trained_for: CodecId,
}

impl std::fmt::Debug for Dictionary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Dictionary")
            .field("id", &format_args!("{:#010x}", self.id))
            .field("len", &self.bytes.len())
            .field("trained_for", &self.trained_for)
            .finish()
    }
}

impl Dictionary {
    pub fn new(id: u32, bytes: Vec<u8>, trained_for: CodecId) -> Result<Self, CodecError> {
        if id == 0 {
            return Err(CodecError::InvalidDictionary("id 0 is reserved".into()));
        }
        if bytes.len() < MIN_DICT_LEN {
            return Err(CodecError::InvalidDictionary(format!(
                "{} bytes, need at least {MIN_DICT_LEN}",
                bytes.len()
            )));
        }
        Ok(Self {
            id,
            bytes,
            trained_for,
        })
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn trained_for(&self) -> CodecId {
        self.trained_for
    }

    /// Standalone file form: `"CBKD"`, id (u32 BE), codec tag, length
    /// (u32 BE), bytes.
    pub fn to_blob(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(13 + self.bytes.len());
        out.extend_from_slice(BLOB_MAGIC);
        out.extend_from_slice(&self.id.to_be_bytes());
        out.push(self.trained_for.tag());
        out.extend_from_slice(&(self.bytes.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.bytes);
        out
    }

    pub fn from_blob(blob: &[u8]) -> Result<Self, CodecError> {
        let bad = |m: &str| CodecError::InvalidDictionary(m.to_string());
        if blob.len() < 13 || &blob[..4] != BLOB_MAGIC {
            return Err(bad("not a dictionary blob"));
        }
        let id = u32::from_be_bytes(blob[4..8].try_into().unwrap());
        let codec = CodecId::from_tag(blob[8]).ok_or_else(|| bad("unknown codec tag"))?;
        let len = u32::from_be_bytes(blob[9..13].try_into().unwrap()) as usize;
        if blob.len() != 13 + len {
            return Err(bad("length field does not match blob size"));
        }
        Self::new(id, blob[13..].to_vec(), codec)
    }
}

/// Dictionaries available to a decompressor, keyed by id.
#[derive(Debug, Clone, Default)]
pub struct DictionaryTable {
    by_id: BTreeMap<u32, Arc<Dictionary>>,
}

impl DictionaryTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a dictionary. Returns false if a different dictionary already
    /// holds the same id.
    pub fn insert(&mut self, dict: Arc<Dictionary>) -> bool {
        match self.by_id.get(&dict.id()) {
            Some(existing) => existing.bytes() == dict.bytes(),
            None => {
                self.by_id.insert(dict.id(), dict);
                true
            }
        }
    }

    pub fn get(&self, id: u32) -> Option<&Dictionary> {
        self.by_id.get(&id).map(Arc::as_ref)
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }

    /// Dictionaries in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = &Arc<Dictionary>> {
        self.by_id.values()
    }
}

impl FromIterator<Arc<Dictionary>> for DictionaryTable {
    fn from_iter<I: IntoIterator<Item = Arc<Dictionary>>>(iter: I) -> Self {
        let mut table = Self::new();
        for d in iter {
            table.insert(d);
        }
        table
    }
}

/// Trains a dictionary of at most `target_size` bytes from `samples` with
/// the zstd trainer. The result also works as a preset dictionary for
/// deflate and LZ4.
///
/// Requires at least 8 samples totalling at least `4 * target_size` bytes.
pub fn train_dictionary<S: AsRef<[u8]>>(
    samples: &[S],
    target_size: usize,
    codec: CodecId,
) -> Result<Dictionary, CodecError> {
    if !codec.accepts_dictionary() {
        return Err(CodecError::DictionaryNotSupported(codec));
    }
    if samples.len() < MIN_SAMPLES {
        return Err(CodecError::InsufficientSamples {
            needed: MIN_SAMPLES,
            got: samples.len(),
        });
    }
    let total: usize = samples.iter().map(|s| s.as_ref().len()).sum();
    if total < 4 * target_size {
        return Err(CodecError::InsufficientSamples {
            needed: 4 * target_size,
            got: total,
        });
    }
    let bytes = zstd::dict::from_samples(samples, target_size)
        .map_err(|e| CodecError::TrainingFailed(e.to_string()))?;
    if bytes.len() < MIN_DICT_LEN || bytes.len() > target_size {
        return Err(CodecError::TrainingFailed(format!(
            "trainer produced {} bytes for a {target_size}-byte target",
            bytes.len()
        )));
    }
    let id = dictionary_id(&bytes);
    Dictionary::new(id, bytes, codec)
}

/// The id zstd embeds in its dictionary header, or the adler32 of the bytes
/// for raw-content dictionaries.
fn dictionary_id(bytes: &[u8]) -> u32 {
    let le = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let id = if bytes.len() >= 8 && le(0) == ZSTD_DICT_MAGIC {
        le(4)
    } else {
        adler32(bytes)
    };
    id.max(1)
}
