use std::collections::{BTreeSet, HashMap};

use sha2::{Digest, Sha256};

use super::{AisError, Result};

/// MMSIs are nine-digit identifiers.
pub const MMSI_LIMIT: u64 = 1_000_000_000;

/// Keyed hash of an MMSI, truncated to 32 bits.
pub fn anonymize_mmsi(mmsi: u64, salt: &[u8]) -> Result<u32> {
    if mmsi >= MMSI_LIMIT {
        return Err(AisError::MmsiOutOfRange(mmsi));
    }
    let mut hasher = Sha256::new();
    hasher.update(salt);
    hasher.update((mmsi as u32).to_be_bytes());
    let digest = hasher.finalize();
    Ok(u32::from_be_bytes([digest[0], digest[1], digest[2], digest[3]]))
}

/// Collision-free id assignment over a known set of MMSIs.
///
/// If two MMSIs hash to the same id under the base salt, the salt is
/// extended with a round counter and the whole set is rehashed.
#[derive(Debug, Clone)]
pub struct Anonymizer {
    salt: Vec<u8>,
    ids: HashMap<u32, u32>,
}

impl Anonymizer {
    pub fn build<I>(mmsis: I, salt: &[u8]) -> Result<Self>
    where
        I: IntoIterator<Item = u64>,
    {
        let unique: BTreeSet<u64> = mmsis.into_iter().collect();
        if let Some(&bad) = unique.iter().find(|&&m| m >= MMSI_LIMIT) {
            return Err(AisError::MmsiOutOfRange(bad));
        }
        let mut round = 0u32;
        loop {
            let effective = if round == 0 {
                salt.to_vec()
            } else {
                let mut s = salt.to_vec();
                s.extend_from_slice(format!(":resalt{round}").as_bytes());
                s
            };
            let mut ids = HashMap::with_capacity(unique.len());
            let mut seen = std::collections::HashSet::with_capacity(unique.len());
            let mut collided = false;
            for &m in &unique {
                let id = anonymize_mmsi(m, &effective)?;
                if !seen.insert(id) {
                    collided = true;
                    break;
                }
                ids.insert(m as u32, id);
            }
            if !collided {
                return Ok(Self {
                    salt: effective,
                    ids,
                });
            }
            round += 1;
        }
    }

    pub fn id(&self, mmsi: u32) -> Option<u32> {
        self.ids.get(&mmsi).copied()
    }

    /// Salt actually in use after any collision rounds.
    pub fn effective_salt(&self) -> &[u8] {
        &self.salt
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn deterministic_per_salt() {
        let a = anonymize_mmsi(316_001_234, b"salt").unwrap();
        assert_eq!(a, anonymize_mmsi(316_001_234, b"salt").unwrap());
        assert_ne!(a, anonymize_mmsi(316_001_234, b"other").unwrap());
    }

    #[test]
    fn out_of_range() {
        assert_eq!(
            anonymize_mmsi(1_000_000_000, b""),
            Err(AisError::MmsiOutOfRange(1_000_000_000))
        );
    }

    #[test]
    fn injective_over_large_corpus() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mmsis: Vec<u64> = (0..100_000).map(|_| rng.gen_range(0..MMSI_LIMIT)).collect();
        let anon = Anonymizer::build(mmsis.iter().copied(), b"corpus").unwrap();
        let unique: BTreeSet<u64> = mmsis.iter().copied().collect();
        let ids: BTreeSet<u32> = unique.iter().map(|&m| anon.id(m as u32).unwrap()).collect();
        assert_eq!(ids.len(), unique.len());
    }
}
