//! Word-level compression.
//!
//! A 64-bit word whose `k` most significant bits are all equal is stored as
//! its low `65 - k` bits (the top one acting as a sign bit). The `k - 1`
//! freed positions at the top of the word are handed back to the caller as a
//! reclaimed field; this module never interprets them.

use thiserror::Error;

use crate::codec::MemoryLine;

pub const MIN_K: u8 = 2;
pub const MAX_K: u8 = 17;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WlcError {
    #[error("k must lie in {MIN_K}..={MAX_K}, got {0}")]
    BadK(u8),
    #[error("word {0:#018x} is not compressible at k={1}")]
    NotCompressible(u64, u8),
    #[error("reclaimed value {0:#x} does not fit in {1} bits")]
    ReclaimedOverflow(u64, u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct WlcConfig {
    k: u8,
}

impl WlcConfig {
    pub fn new(k: u8) -> Result<WlcConfig, WlcError> {
        if (MIN_K..=MAX_K).contains(&k) {
            Ok(WlcConfig { k })
        } else {
            Err(WlcError::BadK(k))
        }
    }

    pub fn k(self) -> u8 {
        self.k
    }

    pub fn reclaimed_bits(self) -> u32 {
        self.k as u32 - 1
    }

    /// Width of the kept low part, sign bit included.
    pub fn payload_bits(self) -> u32 {
        65 - self.k as u32
    }
}

#[inline]
fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// A compressed word: the payload plus a caller-owned reclaimed field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CompressedWord {
    payload: u64,
    reclaimed: u64,
}

impl CompressedWord {
    pub fn payload(&self) -> u64 {
        self.payload
    }

    pub fn reclaimed(&self) -> u64 {
        self.reclaimed
    }

    pub fn with_reclaimed(self, value: u64, cfg: WlcConfig) -> Result<CompressedWord, WlcError> {
        if value & !low_mask(cfg.reclaimed_bits()) != 0 {
            return Err(WlcError::ReclaimedOverflow(value, cfg.reclaimed_bits()));
        }
        Ok(CompressedWord { reclaimed: value, ..self })
    }

    /// Physical layout: reclaimed field in the top `k - 1` bits, payload
    /// below it.
    pub fn to_stored(self, cfg: WlcConfig) -> u64 {
        (self.reclaimed << cfg.payload_bits()) | self.payload
    }

    pub fn from_stored(stored: u64, cfg: WlcConfig) -> CompressedWord {
        CompressedWord {
            payload: stored & low_mask(cfg.payload_bits()),
            reclaimed: stored >> cfg.payload_bits(),
        }
    }
}

/// True iff bits `63 ..= 64-k` are all zeros or all ones.
pub fn word_compressible(word: u64, cfg: WlcConfig) -> bool {
    let top = word >> (64 - cfg.k as u32);
    top == 0 || top == low_mask(cfg.k as u32)
}

pub fn line_compressible(line: &MemoryLine, cfg: WlcConfig) -> bool {
    line.words().iter().all(|&w| word_compressible(w, cfg))
}

/// Largest `k` in `MIN_K..=MAX_K` at which the line compresses, if any.
pub fn max_compressible_k(line: &MemoryLine) -> Option<u8> {
    // monotone in k, so the first failure ends the scan
    (MIN_K..=MAX_K)
        .take_while(|&k| line_compressible(line, WlcConfig { k }))
        .last()
}

pub fn compress_word(word: u64, cfg: WlcConfig) -> Result<CompressedWord, WlcError> {
    if !word_compressible(word, cfg) {
        return Err(WlcError::NotCompressible(word, cfg.k));
    }
    Ok(CompressedWord { payload: word & low_mask(cfg.payload_bits()), reclaimed: 0 })
}

/// Sign-extends the payload's top bit over the `k` most significant bits.
pub fn decompress_word(cw: CompressedWord, cfg: WlcConfig) -> u64 {
    let p = cfg.payload_bits();
    let payload = cw.payload & low_mask(p);
    if payload >> (p - 1) & 1 == 1 {
        payload | !low_mask(p)
    } else {
        payload
    }
}
