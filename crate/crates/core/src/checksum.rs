//! Adler-32.

const MOD_ADLER: u32 = 65521;

/// Largest n such that 255·n·(n+1)/2 + (n+1)·(MOD_ADLER−1) fits in a u32, so
/// both sums can be accumulated over a block before reducing.
pub const NMAX: usize = 5552;

/// Adler-32 of `data`. Sums are reduced once per [`NMAX`]-byte block.
pub fn adler32(data: &[u8]) -> u32 {
    Adler32::new().update(data).finish()
}

/// Incremental Adler-32 state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Adler32 {
    a: u32,
    b: u32,
}

impl Default for Adler32 {
    fn default() -> Self {
        Self::new()
    }
}

impl Adler32 {
    pub fn new() -> Self {
        Self { a: 1, b: 0 }
    }

    pub fn update(mut self, data: &[u8]) -> Self {
        for block in data.chunks(NMAX) {
            let (mut a, mut b) = (self.a, self.b);
            let mut quads = block.chunks_exact(4);
            for q in &mut quads {
                a += u32::from(q[0]);
                b += a;
                a += u32::from(q[1]);
                b += a;
                a += u32::from(q[2]);
                b += a;
                a += u32::from(q[3]);
                b += a;
            }
            for &byte in quads.remainder() {
                a += u32::from(byte);
                b += a;
            }
            self.a = a % MOD_ADLER;
            self.b = b % MOD_ADLER;
        }
        self
    }

    pub fn finish(self) -> u32 {
        (self.b << 16) | self.a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(data: &[u8]) -> u32 {
        let (mut a, mut b) = (1u64, 0u64);
        for &x in data {
            a = (a + x as u64) % 65521;
            b = (b + a) % 65521;
        }
        ((b << 16) | a) as u32
    }

    #[test]
    fn fixed_vectors() {
        assert_eq!(adler32(b""), 1);
        assert_eq!(adler32(&[0]), 0x0001_0001);
        assert_eq!(adler32(b"Wikipedia"), 0x11E6_0398);
    }

    #[test]
    fn block_boundaries_worst_case() {
        for len in [NMAX - 1, NMAX, NMAX + 1, 3 * NMAX + 7] {
            let data = vec![0xFF; len];
            assert_eq!(adler32(&data), naive(&data), "len {len}");
        }
    }

    #[test]
    fn nmax_is_the_overflow_bound() {
        let bound = |n: u64| 255 * n * (n + 1) / 2 + (n + 1) * (65521 - 1);
        assert!(bound(NMAX as u64) <= u32::MAX as u64);
        assert!(bound(NMAX as u64 + 1) > u32::MAX as u64);
    }

    #[test]
    fn incremental_matches_one_shot() {
        let data: Vec<u8> = (0..20_000u32).map(|i| (i * 31 % 251) as u8).collect();
        let split = Adler32::new()
            .update(&data[..777])
            .update(&data[777..])
            .finish();
        assert_eq!(split, adler32(&data));
    }
}
