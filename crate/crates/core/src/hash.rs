const FNV_OFFSET: u64 = 0xCBF2_9CE4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01B3;

/// FNV-1a (64-bit) over a byte slice.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    Fnv1a64::default().bytes(bytes).finish()
}

/// Streaming FNV-1a (64-bit); words are fed as their little-endian bytes.
#[derive(Clone, Copy, Debug)]
pub struct Fnv1a64(u64);

impl Default for Fnv1a64 {
    fn default() -> Self {
        Fnv1a64(FNV_OFFSET)
    }
}

impl Fnv1a64 {
    pub fn bytes(mut self, bytes: &[u8]) -> Self {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(FNV_PRIME);
        }
        self
    }

    pub fn word(self, word: u64) -> Self {
        self.bytes(&word.to_le_bytes())
    }

    pub fn words(self, words: &[u64]) -> Self {
        words.iter().fold(self, |h, &w| h.word(w))
    }

    pub fn finish(self) -> u64 {
        self.0
    }
}
