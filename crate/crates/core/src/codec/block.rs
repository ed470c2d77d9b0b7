use thiserror::Error;

/// Size of the fixed frame header preceding every block body.
pub const HEADER_LEN: usize = 20;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("block frame truncated: need {needed} bytes, {available} available")]
    Truncated { needed: usize, available: usize },
}

/// One framed compression unit.
///
/// Wire layout, all integers big-endian:
///
/// | offset | size | field              |
/// |--------|------|--------------------|
/// | 0      | 1    | codec tag          |
/// | 1      | 1    | level              |
/// | 2      | 1    | preconditioner tag |
/// | 3      | 1    | stride             |
/// | 4      | 4    | dictionary id      |
/// | 8      | 4    | uncompressed length|
/// | 12     | 4    | compressed length  |
/// | 16     | 4    | adler32 of payload |
/// | 20     | n    | body               |
///
/// Tags are kept raw. Frames with unknown codecs or preconditioners parse
/// and are rejected at decompression time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompressedBlock {
    pub codec_tag: u8,
    pub level: u8,
    pub precond_tag: u8,
    pub stride: u8,
    pub dict_id: u32,
    pub uncompressed_len: u32,
    pub checksum: u32,
    pub body: Vec<u8>,
}

impl CompressedBlock {
    pub fn compressed_len(&self) -> u32 {
        self.body.len() as u32
    }

    /// Header plus body.
    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.body.len()
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.reserve(self.encoded_len());
        out.extend_from_slice(&[self.codec_tag, self.level, self.precond_tag, self.stride]);
        out.extend_from_slice(&self.dict_id.to_be_bytes());
        out.extend_from_slice(&self.uncompressed_len.to_be_bytes());
        out.extend_from_slice(&self.compressed_len().to_be_bytes());
        out.extend_from_slice(&self.checksum.to_be_bytes());
        out.extend_from_slice(&self.body);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.encode_into(&mut out);
        out
    }

    /// Parses one frame from the front of `bytes`, returning it with the
    /// number of bytes consumed.
    pub fn decode(bytes: &[u8]) -> Result<(Self, usize), FrameError> {
        if bytes.len() < HEADER_LEN {
            return Err(FrameError::Truncated {
                needed: HEADER_LEN,
                available: bytes.len(),
            });
        }
        let be = |at: usize| {
            u32::from_be_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
        };
        let compressed_len = be(12) as usize;
        let total = HEADER_LEN + compressed_len;
        if bytes.len() < total {
            return Err(FrameError::Truncated {
                needed: total,
                available: bytes.len(),
            });
        }
        let block = CompressedBlock {
            codec_tag: bytes[0],
            level: bytes[1],
            precond_tag: bytes[2],
            stride: bytes[3],
            dict_id: be(4),
            uncompressed_len: be(8),
            checksum: be(16),
            body: bytes[HEADER_LEN..total].to_vec(),
        };
        Ok((block, total))
    }
}
