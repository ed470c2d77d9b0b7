//! Shuffle and BitShuffle preconditioners.
//!
//! Both transforms treat the input as `n = len / stride` elements of `stride`
//! bytes and transpose them so that bytes (or bits) of equal significance end
//! up next to each other. Any trailing `len % stride` bytes are copied through
//! unchanged, so both transforms are total and length preserving.
//!
//! BitShuffle numbers bits most-significant first within each byte. It only
//! transposes the largest multiple of eight elements; the remaining `n % 8`
//! elements are copied through like the trailing bytes.

use std::fmt;
use std::str::FromStr;

/// Preconditioner applied to a payload before compression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Preconditioner {
    #[default]
    None,
    Shuffle {
        stride: u8,
    },
    BitShuffle {
        stride: u8,
    },
}

/// Preconditioner family without a stride; the stride is filled in from the
/// element width of whatever region is being compressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum PreconditionerKind {
    #[default]
    None,
    Shuffle,
    BitShuffle,
}

impl PreconditionerKind {
    pub const ALL: [PreconditionerKind; 3] = [
        PreconditionerKind::None,
        PreconditionerKind::Shuffle,
        PreconditionerKind::BitShuffle,
    ];

    pub fn with_stride(self, stride: u8) -> Preconditioner {
        match self {
            PreconditionerKind::None => Preconditioner::None,
            PreconditionerKind::Shuffle => Preconditioner::Shuffle { stride },
            PreconditionerKind::BitShuffle => Preconditioner::BitShuffle { stride },
        }
    }

    /// Wire tag: 0 none, 1 shuffle, 2 bitshuffle.
    pub fn tag(self) -> u8 {
        match self {
            PreconditionerKind::None => 0,
            PreconditionerKind::Shuffle => 1,
            PreconditionerKind::BitShuffle => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(PreconditionerKind::None),
            1 => Some(PreconditionerKind::Shuffle),
            2 => Some(PreconditionerKind::BitShuffle),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PreconditionerKind::None => "none",
            PreconditionerKind::Shuffle => "shuffle",
            PreconditionerKind::BitShuffle => "bitshuffle",
        }
    }
}

impl fmt::Display for PreconditionerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PreconditionerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(PreconditionerKind::None),
            "shuffle" => Ok(PreconditionerKind::Shuffle),
            "bitshuffle" => Ok(PreconditionerKind::BitShuffle),
            other => Err(format!("unknown preconditioner `{other}`")),
        }
    }
}

impl Preconditioner {
    pub fn kind(self) -> PreconditionerKind {
        match self {
            Preconditioner::None => PreconditionerKind::None,
            Preconditioner::Shuffle { .. } => PreconditionerKind::Shuffle,
            Preconditioner::BitShuffle { .. } => PreconditionerKind::BitShuffle,
        }
    }

    /// Stride in bytes; 0 for [`Preconditioner::None`].
    pub fn stride(self) -> u8 {
        match self {
            Preconditioner::None => 0,
            Preconditioner::Shuffle { stride } | Preconditioner::BitShuffle { stride } => stride,
        }
    }

    /// Same family with a different stride.
    pub fn restride(self, stride: u8) -> Self {
        self.kind().with_stride(stride)
    }

    pub fn apply(self, input: &[u8]) -> Vec<u8> {
        match self {
            Preconditioner::None => input.to_vec(),
            Preconditioner::Shuffle { stride } => shuffle(input, stride.into()),
            Preconditioner::BitShuffle { stride } => bitshuffle(input, stride.into()),
        }
    }

    pub fn invert(self, input: &[u8]) -> Vec<u8> {
        match self {
            Preconditioner::None => input.to_vec(),
            Preconditioner::Shuffle { stride } => unshuffle(input, stride.into()),
            Preconditioner::BitShuffle { stride } => bitunshuffle(input, stride.into()),
        }
    }
}

/// Byte transpose: output byte `j*n + i` is input byte `i*stride + j`.
///
/// # Panics
///
/// Panics if `stride` is zero.
pub fn shuffle(input: &[u8], stride: usize) -> Vec<u8> {
    assert!(stride >= 1, "shuffle stride must be at least 1");
    let n = input.len() / stride;
    let body = n * stride;
    let mut out = vec![0u8; input.len()];
    for (i, element) in input[..body].chunks_exact(stride).enumerate() {
        for (j, &byte) in element.iter().enumerate() {
            out[j * n + i] = byte;
        }
    }
    out[body..].copy_from_slice(&input[body..]);
    out
}

/// Inverse of [`shuffle`].
///
/// # Panics
///
/// Panics if `stride` is zero.
pub fn unshuffle(input: &[u8], stride: usize) -> Vec<u8> {
    assert!(stride >= 1, "shuffle stride must be at least 1");
    let n = input.len() / stride;
    let body = n * stride;
    let mut out = vec![0u8; input.len()];
    for (i, element) in out[..body].chunks_exact_mut(stride).enumerate() {
        for (j, byte) in element.iter_mut().enumerate() {
            *byte = input[j * n + i];
        }
    }
    out[body..].copy_from_slice(&input[body..]);
    out
}

/// Transposes an 8x8 bit matrix held as eight bytes, MSB first: bit `c` of
/// row `r` becomes bit `r` of row `c`.
#[inline]
fn transpose8(rows: [u8; 8]) -> [u8; 8] {
    let mut x = u64::from_be_bytes(rows);
    let t = (x ^ (x >> 7)) & 0x00AA_00AA_00AA_00AA;
    x ^= t ^ (t << 7);
    let t = (x ^ (x >> 14)) & 0x0000_CCCC_0000_CCCC;
    x ^= t ^ (t << 14);
    let t = (x ^ (x >> 28)) & 0x0000_0000_F0F0_F0F0;
    x ^= t ^ (t << 28);
    x.to_be_bytes()
}

/// Bit transpose. For the first `m = 8 * floor(n / 8)` elements, output bit
/// `j*m + i` is input bit `i*(8*stride) + j`.
///
/// # Panics
///
/// Panics if `stride` is zero.
pub fn bitshuffle(input: &[u8], stride: usize) -> Vec<u8> {
    assert!(stride >= 1, "bitshuffle stride must be at least 1");
    let m = (input.len() / stride) & !7;
    let body = m * stride;
    let plane_len = m / 8;
    let mut out = vec![0u8; input.len()];
    for group in 0..plane_len {
        let base = group * 8 * stride;
        for k in 0..stride {
            let mut rows = [0u8; 8];
            for (r, row) in rows.iter_mut().enumerate() {
                *row = input[base + r * stride + k];
            }
            for (t, byte) in transpose8(rows).into_iter().enumerate() {
                out[(k * 8 + t) * plane_len + group] = byte;
            }
        }
    }
    out[body..].copy_from_slice(&input[body..]);
    out
}

/// Inverse of [`bitshuffle`].
///
/// # Panics
///
/// Panics if `stride` is zero.
pub fn bitunshuffle(input: &[u8], stride: usize) -> Vec<u8> {
    assert!(stride >= 1, "bitshuffle stride must be at least 1");
    let m = (input.len() / stride) & !7;
    let body = m * stride;
    let plane_len = m / 8;
    let mut out = vec![0u8; input.len()];
    for group in 0..plane_len {
        let base = group * 8 * stride;
        for k in 0..stride {
            let mut planes = [0u8; 8];
            for (t, plane) in planes.iter_mut().enumerate() {
                *plane = input[(k * 8 + t) * plane_len + group];
            }
            for (r, byte) in transpose8(planes).into_iter().enumerate() {
                out[base + r * stride + k] = byte;
            }
        }
    }
    out[body..].copy_from_slice(&input[body..]);
    out
}
