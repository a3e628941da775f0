use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::model::{CellState, Symbol};

pub const LINE_BITS: usize = 512;
pub const LINE_BYTES: usize = LINE_BITS / 8;
pub const WORDS_PER_LINE: usize = 8;
pub const CELLS_PER_LINE: usize = LINE_BITS / 2;
pub const CELLS_PER_WORD: usize = 32;

#[derive(Debug, Error, PartialEq)]
pub enum ParseLineError {
    #[error("expected {expected} hex characters, got {got}")]
    Length { expected: usize, got: usize },
    #[error("invalid hex: {0}")]
    Hex(#[from] hex::FromHexError),
    #[error("expected {expected} cell states, got {got}")]
    CellCount { expected: usize, got: usize },
    #[error("invalid cell state character {0:?}")]
    CellChar(char),
    #[error("malformed cell dump: {0}")]
    Dump(String),
}

/// A 512-bit memory line as eight 64-bit words.
///
/// Symbols are numbered big-endian: symbol 0 is bits 63..62 of word 0,
/// symbol 31 is bits 1..0 of word 0, symbol 32 is bits 63..62 of word 1.
/// The hex and byte forms use the same order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MemoryLine {
    words: [u64; WORDS_PER_LINE],
}

impl MemoryLine {
    pub const ZERO: MemoryLine = MemoryLine { words: [0; WORDS_PER_LINE] };

    pub const fn from_words(words: [u64; WORDS_PER_LINE]) -> MemoryLine {
        MemoryLine { words }
    }

    pub fn words(&self) -> &[u64; WORDS_PER_LINE] {
        &self.words
    }

    pub fn word(&self, i: usize) -> u64 {
        self.words[i]
    }

    #[inline]
    pub fn symbol(&self, cell: usize) -> Symbol {
        let shift = 62 - 2 * (cell % CELLS_PER_WORD);
        Symbol::from_low_bits(self.words[cell / CELLS_PER_WORD] >> shift)
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        (0..CELLS_PER_LINE).map(|c| self.symbol(c)).collect()
    }

    pub fn from_symbols(symbols: &[Symbol]) -> MemoryLine {
        assert_eq!(symbols.len(), CELLS_PER_LINE, "a line holds {CELLS_PER_LINE} symbols");
        let mut words = [0u64; WORDS_PER_LINE];
        for (c, s) in symbols.iter().enumerate() {
            words[c / CELLS_PER_WORD] |= (s.bits() as u64) << (62 - 2 * (c % CELLS_PER_WORD));
        }
        MemoryLine { words }
    }

    pub fn to_bytes(&self) -> [u8; LINE_BYTES] {
        let mut out = [0u8; LINE_BYTES];
        for (chunk, w) in out.chunks_exact_mut(8).zip(self.words) {
            chunk.copy_from_slice(&w.to_be_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8; LINE_BYTES]) -> MemoryLine {
        let mut words = [0u64; WORDS_PER_LINE];
        for (w, chunk) in words.iter_mut().zip(bytes.chunks_exact(8)) {
            *w = u64::from_be_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        MemoryLine { words }
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_bytes())
    }

    pub fn from_hex(s: &str) -> Result<MemoryLine, ParseLineError> {
        let s = s.trim();
        let s = s.strip_prefix("0x").unwrap_or(s);
        if s.len() != 2 * LINE_BYTES {
            return Err(ParseLineError::Length { expected: 2 * LINE_BYTES, got: s.len() });
        }
        let mut bytes = [0u8; LINE_BYTES];
        hex::decode_to_slice(s, &mut bytes)?;
        Ok(MemoryLine::from_bytes(&bytes))
    }

    pub fn complement(&self) -> MemoryLine {
        MemoryLine { words: self.words.map(|w| !w) }
    }

    pub fn xor(&self, other: &MemoryLine) -> MemoryLine {
        let mut words = self.words;
        for (w, o) in words.iter_mut().zip(other.words) {
            *w ^= o;
        }
        MemoryLine { words }
    }
}

impl fmt::Debug for MemoryLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MemoryLine({})", self.to_hex())
    }
}

impl fmt::Display for MemoryLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for MemoryLine {
    type Err = ParseLineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MemoryLine::from_hex(s)
    }
}

/// Which part of a physical line a cell belongs to, for cost breakdowns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Data,
    Aux,
    Flag,
}

/// Physical cell vector of one line: data cells, then auxiliary cells, then
/// the optional compression flag.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct EncodedLine {
    data: Vec<CellState>,
    aux: Vec<CellState>,
    flag: Option<CellState>,
    // leading cells of every 32-cell word that carry reclaimed aux bits
    embedded_aux: u8,
}

/// Cell counts of an [`EncodedLine`], used to validate prior state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Shape {
    pub data: usize,
    pub aux: usize,
    pub flag: bool,
}

impl Shape {
    pub fn cells(&self) -> usize {
        self.data + self.aux + self.flag as usize
    }
}

impl EncodedLine {
    pub fn new(data: Vec<CellState>, aux: Vec<CellState>, flag: Option<CellState>) -> EncodedLine {
        EncodedLine { data, aux, flag, embedded_aux: 0 }
    }

    pub(crate) fn with_embedded_aux(mut self, cells_per_word: u8) -> EncodedLine {
        self.embedded_aux = cells_per_word;
        self
    }

    /// All cells in state S1.
    pub fn reset(shape: Shape) -> EncodedLine {
        EncodedLine::new(
            vec![CellState::S1; shape.data],
            vec![CellState::S1; shape.aux],
            shape.flag.then_some(CellState::S1),
        )
    }

    pub fn data(&self) -> &[CellState] {
        &self.data
    }

    pub fn aux(&self) -> &[CellState] {
        &self.aux
    }

    pub fn flag(&self) -> Option<CellState> {
        self.flag
    }

    pub fn shape(&self) -> Shape {
        Shape { data: self.data.len(), aux: self.aux.len(), flag: self.flag.is_some() }
    }

    pub fn len(&self) -> usize {
        self.shape().cells()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Leading cells per data word that hold reclaimed auxiliary bits (zero
    /// for lines stored uncompressed).
    pub fn embedded_aux_cells(&self) -> usize {
        self.embedded_aux as usize
    }

    /// Physical cell vector in adjacency order.
    pub fn cells(&self) -> Vec<CellState> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.data);
        out.extend_from_slice(&self.aux);
        out.extend(self.flag);
        out
    }

    /// Region of each cell in [`cells`](Self::cells) order. Data cells that
    /// carry embedded auxiliary bits (including a cell shared between an aux
    /// bit and a payload bit) are labelled [`Region::Aux`].
    pub fn regions(&self) -> Vec<Region> {
        let mut out = Vec::with_capacity(self.len());
        out.extend((0..self.data.len()).map(|i| {
            if i % CELLS_PER_WORD < self.embedded_aux as usize {
                Region::Aux
            } else {
                Region::Data
            }
        }));
        out.extend(std::iter::repeat_n(Region::Aux, self.aux.len()));
        out.extend(self.flag.map(|_| Region::Flag));
        out
    }

    /// Compact dump: `D:<digits>;A:<digits>;F:<digit or ->`, one digit
    /// `1..4` per state.
    pub fn to_dump(&self) -> String {
        let digits = |cells: &[CellState]| cells.iter().map(|c| c.digit()).collect::<String>();
        format!(
            "D:{};A:{};F:{}",
            digits(&self.data),
            digits(&self.aux),
            self.flag.map_or('-', CellState::digit)
        )
    }

    /// Parses [`to_dump`](Self::to_dump) output. The embedded-aux labelling is
    /// not part of the dump and comes back as zero.
    pub fn from_dump(s: &str) -> Result<EncodedLine, ParseLineError> {
        let mut parts = s.trim().split(';');
        let mut field = |tag: &str| -> Result<&str, ParseLineError> {
            parts
                .next()
                .and_then(|p| p.strip_prefix(tag))
                .ok_or_else(|| ParseLineError::Dump(format!("missing {tag} field")))
        };
        let states = |text: &str| -> Result<Vec<CellState>, ParseLineError> {
            text.chars().map(|c| CellState::from_digit(c).ok_or(ParseLineError::CellChar(c))).collect()
        };
        let data = states(field("D:")?)?;
        let aux = states(field("A:")?)?;
        let flag = match field("F:")? {
            "-" => None,
            f if f.chars().count() == 1 => Some(states(f)?[0]),
            f => return Err(ParseLineError::Dump(format!("bad flag field {f:?}"))),
        };
        Ok(EncodedLine::new(data, aux, flag))
    }
}

impl fmt::Debug for EncodedLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "EncodedLine({})", self.to_dump())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_numbering_is_big_endian() {
        let mut words = [0u64; 8];
        words[0] = 0b01 << 62 | 0b11;
        words[1] = 0b10 << 62;
        let line = MemoryLine::from_words(words);
        assert_eq!(line.symbol(0), Symbol::S01);
        assert_eq!(line.symbol(31), Symbol::S11);
        assert_eq!(line.symbol(32), Symbol::S10);
        assert_eq!(MemoryLine::from_symbols(&line.symbols()), line);
    }

    #[test]
    fn hex_matches_bytes_and_words() {
        let mut words = [0u64; 8];
        words[0] = 0x0123_4567_89AB_CDEF;
        let line = MemoryLine::from_words(words);
        let hex = line.to_hex();
        assert!(hex.starts_with("0123456789abcdef0000"));
        assert_eq!(hex.len(), 128);
        assert_eq!(hex.parse::<MemoryLine>().unwrap(), line);
        assert_eq!(MemoryLine::from_hex("00"), Err(ParseLineError::Length { expected: 128, got: 2 }));
        assert!(matches!(MemoryLine::from_hex(&"zz".repeat(64)), Err(ParseLineError::Hex(_))));
    }

    #[test]
    fn dump_round_trip() {
        let line = EncodedLine::new(vec![CellState::S1, CellState::S4], vec![CellState::S2], Some(CellState::S3));
        assert_eq!(line.to_dump(), "D:14;A:2;F:3");
        assert_eq!(EncodedLine::from_dump(&line.to_dump()).unwrap(), line);
        let bare = EncodedLine::new(vec![CellState::S2], vec![], None);
        assert_eq!(EncodedLine::from_dump("D:2;A:;F:-").unwrap(), bare);
        assert!(EncodedLine::from_dump("D:15;A:;F:-").is_err());
        assert!(EncodedLine::from_dump("D:1").is_err());
    }

    #[test]
    fn regions_follow_embedded_aux() {
        let line = EncodedLine::reset(Shape { data: 256, aux: 0, flag: true }).with_embedded_aux(3);
        let regions = line.regions();
        assert_eq!(regions.len(), 257);
        assert_eq!(regions.iter().filter(|&&r| r == Region::Aux).count(), 24);
        assert_eq!(regions[32..35], [Region::Aux; 3]);
        assert_eq!(regions[35], Region::Data);
        assert_eq!(regions[256], Region::Flag);
    }
}
