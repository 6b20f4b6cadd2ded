//! Binary checkpoints of a running iteration.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      4 bytes  "C2CK"
//! version    u16
//! family     u8       13 or 23
//! p          u32
//! N          u64
//! steps      u64      iterations taken from the minimal chain
//! vector     N bytes
//! seq_len    u64
//! sequence   seq_len bytes, c2 values from the first n
//! seq_hash   u64      rolling hash of the sequence
//! checksum   u64      hash of everything above
//! ```

use std::hash::Hasher;
use std::io::{Read, Write};
use std::path::Path;

use fnv::FnvHasher;
use thiserror::Error;

use super::{Family, TransferSystem};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"C2CK";
pub const CHECKPOINT_VERSION: u16 = 1;

const HASH_KEY: u64 = 0x6332_5f73_6571_7565;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u16),
    #[error("unknown family tag {0}")]
    Family(u8),
    #[error("truncated checkpoint")]
    Truncated,
    #[error("{0} trailing bytes after checkpoint")]
    Trailing(usize),
    #[error("checksum mismatch")]
    Checksum,
    #[error("sequence hash mismatch")]
    HashMismatch,
    #[error("value {value} out of range for p = {p}")]
    Value { value: u8, p: u32 },
    #[error("checkpoint is for {found}, system is {expected}")]
    Mismatch { expected: String, found: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Rolling hash of the emitted c2 values.
pub(crate) struct RollingHash(FnvHasher);

impl RollingHash {
    pub fn new() -> Self {
        RollingHash(FnvHasher::with_key(HASH_KEY))
    }

    pub fn over(seq: &[u8]) -> Self {
        let mut h = Self::new();
        h.0.write(seq);
        h
    }

    pub fn push(&mut self, v: u8) {
        self.0.write_u8(v);
    }

    pub fn value(&self) -> u64 {
        self.0.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Checkpoint {
    pub family: Family,
    pub p: u32,
    pub states: u64,
    pub steps: u64,
    pub vector: Vec<u8>,
    pub sequence: Vec<u8>,
    pub sequence_hash: u64,
}

struct Reader<'a> {
    data: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.data.len() < n {
            return Err(CheckpointError::Truncated);
        }
        let (a, b) = self.data.split_at(n);
        self.data = b;
        Ok(a)
    }

    fn u8(&mut self) -> Result<u8, CheckpointError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, CheckpointError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    /// A length-prefixed or fixed-length byte run, bounded by what is left
    /// so a corrupt length cannot trigger a huge allocation.
    fn bytes(&mut self, n: u64) -> Result<Vec<u8>, CheckpointError> {
        let n = usize::try_from(n).map_err(|_| CheckpointError::Truncated)?;
        Ok(self.take(n)?.to_vec())
    }
}

fn checksum(data: &[u8]) -> u64 {
    let mut h = FnvHasher::with_key(HASH_KEY);
    h.write(data);
    h.finish()
}

impl Checkpoint {
    /// A checkpoint with the sequence hash filled in.
    pub fn new(family: Family, p: u32, vector: Vec<u8>, sequence: Vec<u8>) -> Self {
        let sequence_hash = RollingHash::over(&sequence).value();
        Checkpoint { family, p, states: vector.len() as u64, steps: sequence.len() as u64, vector, sequence, sequence_hash }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.vector.len() + self.sequence.len());
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.push(self.family.tag());
        out.extend_from_slice(&self.p.to_le_bytes());
        out.extend_from_slice(&self.states.to_le_bytes());
        out.extend_from_slice(&self.steps.to_le_bytes());
        out.extend_from_slice(&self.vector);
        out.extend_from_slice(&(self.sequence.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.sequence);
        out.extend_from_slice(&self.sequence_hash.to_le_bytes());
        let sum = checksum(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn decode(data: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Reader { data };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u16()?;
        if version != CHECKPOINT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let tag = r.u8()?;
        let family = Family::from_tag(tag).ok_or(CheckpointError::Family(tag))?;
        let p = r.u32()?;
        let states = r.u64()?;
        let steps = r.u64()?;
        let vector = r.bytes(states)?;
        let seq_len = r.u64()?;
        let sequence = r.bytes(seq_len)?;
        let sequence_hash = r.u64()?;
        let body = data.len() - r.data.len();
        let sum = r.u64()?;
        if !r.data.is_empty() {
            return Err(CheckpointError::Trailing(r.data.len()));
        }
        if checksum(&data[..body]) != sum {
            return Err(CheckpointError::Checksum);
        }
        for &value in vector.iter().chain(&sequence) {
            if p < 2 || value as u32 >= p {
                return Err(CheckpointError::Value { value, p });
            }
        }
        Ok(Checkpoint { family, p, states, steps, vector, sequence, sequence_hash })
    }

    pub fn write_to(&self, path: &Path) -> Result<(), CheckpointError> {
        // Write beside the target and rename so a crash never leaves a
        // half-written checkpoint behind.
        let tmp = path.with_extension("tmp");
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&self.encode())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<Self, CheckpointError> {
        let mut data = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut data)?;
        Self::decode(&data)
    }

    pub(crate) fn check_matches(&self, sys: &TransferSystem) -> Result<(), CheckpointError> {
        let found = format!("{} p={} N={}", self.family, self.p, self.states);
        let expected = format!("{} p={} N={}", sys.family(), sys.p(), sys.len());
        if found != expected || self.vector.len() != sys.len() || self.steps != self.sequence.len() as u64 {
            return Err(CheckpointError::Mismatch { expected, found });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        Checkpoint {
            family: Family::C23,
            p: 3,
            states: 4,
            steps: 3,
            vector: vec![0, 1, 2, 1],
            sequence: vec![2, 2, 0],
            sequence_hash: RollingHash::over(&[2, 2, 0]).value(),
        }
    }

    #[test]
    fn round_trip() {
        let ck = sample();
        assert_eq!(Checkpoint::decode(&ck.encode()).unwrap(), ck);
    }

    #[test]
    fn corruption_is_caught() {
        let bytes = sample().encode();
        for i in 0..bytes.len() {
            let mut bad = bytes.clone();
            bad[i] ^= 0x40;
            assert!(Checkpoint::decode(&bad).is_err(), "flip at byte {i}");
        }
        assert!(matches!(Checkpoint::decode(&bytes[..bytes.len() - 1]), Err(CheckpointError::Truncated)));
    }

    #[test]
    fn rolling_hash_is_incremental() {
        let mut h = RollingHash::new();
        for v in [1, 0, 1, 1] {
            h.push(v);
        }
        assert_eq!(h.value(), RollingHash::over(&[1, 0, 1, 1]).value());
    }
}
