//! Stable hashing: FNV-1a for surrogate selection, SHA-256 for content addressing.

use sha2::{Digest, Sha256};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// Separator written between fields so that ("ab","c") and ("a","bc") hash apart.
const FIELD_SEPARATOR: u8 = 0x1f;

/// 64-bit FNV-1a over a sequence of length-delimited fields.
#[derive(Debug, Clone)]
pub struct Fnv1a {
    state: u64,
}

impl Default for Fnv1a {
    fn default() -> Self {
        Fnv1a { state: FNV_OFFSET }
    }
}

impl Fnv1a {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn write(&mut self, bytes: &[u8]) -> &mut Self {
        for &b in bytes {
            self.state ^= u64::from(b);
            self.state = self.state.wrapping_mul(FNV_PRIME);
        }
        self
    }

    /// Writes a field followed by the unit separator.
    pub fn field(&mut self, bytes: &[u8]) -> &mut Self {
        self.write(bytes).write(&[FIELD_SEPARATOR])
    }

    pub fn finish(&self) -> u64 {
        self.state
    }
}

/// Selection hash used by every surrogate draw:
/// FNV-1a over `seed (8 bytes LE) 0x1f patient_id 0x1f slot 0x1f source 0x1f`.
pub fn selection_hash(seed: u64, patient_id: &str, slot: &str, source: &str) -> u64 {
    Fnv1a::new()
        .field(&seed.to_le_bytes())
        .field(patient_id.as_bytes())
        .field(slot.as_bytes())
        .field(source.as_bytes())
        .finish()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv1a_reference_vectors() {
        // Published FNV-1a 64-bit test vectors.
        assert_eq!(Fnv1a::new().finish(), 0xcbf29ce484222325);
        assert_eq!(Fnv1a::new().write(b"a").finish(), 0xaf63dc4c8601ec8c);
        assert_eq!(Fnv1a::new().write(b"foobar").finish(), 0x85944171f73967e8);
    }

    #[test]
    fn fields_are_delimited() {
        let a = Fnv1a::new().field(b"ab").field(b"c").finish();
        let b = Fnv1a::new().field(b"a").field(b"bc").finish();
        assert_ne!(a, b);
    }

    #[test]
    fn sha256_empty() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
