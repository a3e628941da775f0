//! Coset coding inside word-level-compressed lines.
//!
//! When all eight words of a line compress at depth `k`, each word is stored
//! as `[reclaimed field | payload]` (see [`crate::wlc`]). The reclaimed field
//! holds the coset selections for that word's payload blocks and is written
//! with the default mapping so the decoder can read it first. Payload blocks
//! are `g` bits wide, aligned at bit 0; the top block is cut short by the
//! reclaimed field. When `k` is even, the payload's top bit shares a cell
//! with the last reclaimed bit and is written with the default mapping too.
//!
//! A flag cell marks the line as compressed (S1) or raw (S2). Raw lines use
//! the default mapping throughout.

use super::plain::{decode_baseline, encode_baseline};
use super::{CodecError, EncodedLine, MemoryLine, SchemeKind, Selection, SideInfo};
use super::{CELLS_PER_LINE, CELLS_PER_WORD, WORDS_PER_LINE};
use crate::model::{default_map, default_unmap, table_candidate, AuxCode, CandidateTable, CellState, CosetCandidate};
use crate::model::{Energy, EnergyModel, Symbol};
use crate::wlc::{compress_word, decompress_word, line_compressible, CompressedWord, WlcConfig};

pub(crate) const FLAG_COMPRESSED: CellState = CellState::S1;
pub(crate) const FLAG_RAW: CellState = CellState::S2;

/// Cell-level layout of one compressed 64-bit word.
///
/// Cells are numbered within the word from the top: cell `t` holds bits
/// `63-2t` and `62-2t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordLayout {
    wlc: WlcConfig,
    granularity: u32,
    fixed: Vec<usize>,
    blocks: Vec<Vec<usize>>,
}

impl WordLayout {
    pub fn new(wlc: WlcConfig, granularity: u32) -> WordLayout {
        let payload = wlc.payload_bits();
        let nblocks = payload.div_ceil(granularity) as usize;
        let mut fixed = Vec::new();
        let mut blocks = vec![Vec::new(); nblocks];
        for t in 0..CELLS_PER_WORD {
            let lo = 62 - 2 * t as u32;
            if lo + 1 >= payload {
                fixed.push(t);
            } else {
                blocks[nblocks - 1 - (lo / granularity) as usize].push(t);
            }
        }
        WordLayout { wlc, granularity, fixed, blocks }
    }

    pub fn wlc(&self) -> WlcConfig {
        self.wlc
    }

    pub fn granularity(&self) -> u32 {
        self.granularity
    }

    /// Cells written with the default mapping: all reclaimed bits, plus the
    /// payload sign bit when it shares a cell with them.
    pub fn fixed_cells(&self) -> &[usize] {
        &self.fixed
    }

    /// Coset-coded cells of each payload block, most significant block first.
    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn has_shared_cell(&self) -> bool {
        self.wlc.payload_bits() % 2 == 1
    }

    /// Reclaimed bits a scheme needs per word.
    pub fn aux_bits_needed(&self, code: CodeBits) -> u32 {
        code.group + code.per_block * self.blocks.len() as u32
    }
}

/// Selection-field widths of a WLC scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodeBits {
    pub group: u32,
    pub per_block: u32,
}

#[derive(Clone, Debug)]
pub(crate) enum Mode {
    Restricted,
    MultiObjective,
    Unrestricted(CandidateTable),
}

impl Mode {
    pub(crate) fn for_kind(kind: SchemeKind) -> Mode {
        match kind {
            SchemeKind::Wlcrc => Mode::Restricted,
            SchemeKind::WlcrcMultiObjective => Mode::MultiObjective,
            SchemeKind::Wlc4Cosets => Mode::Unrestricted(CandidateTable::four_cosets()),
            SchemeKind::Wlc3Cosets => Mode::Unrestricted(CandidateTable::three_cosets()),
            other => panic!("{other} is not a WLC scheme"),
        }
    }

    pub(crate) fn code_bits(&self) -> CodeBits {
        match self {
            Mode::Restricted | Mode::MultiObjective => CodeBits { group: 1, per_block: 1 },
            Mode::Unrestricted(_) => CodeBits { group: 0, per_block: 2 },
        }
    }
}

#[derive(Clone, Debug)]
pub struct WlcCosets {
    mode: Mode,
    layout: WordLayout,
    threshold: f64,
    candidates: Vec<CosetCandidate>,
    // unrestricted: 2-bit code recording each candidate
    codes: Vec<u8>,
}

/// Choices for one word: reclaimed field value and candidate index per block.
#[derive(Clone, Debug, PartialEq, Eq)]
struct WordChoice {
    reclaimed: u64,
    picks: Vec<usize>,
}

impl WlcCosets {
    pub(crate) fn new(mode: Mode, wlc: WlcConfig, granularity: u32, threshold: f64) -> WlcCosets {
        let (candidates, codes) = match &mode {
            Mode::Restricted | Mode::MultiObjective => ((1..=3).map(table_candidate).collect(), Vec::new()),
            Mode::Unrestricted(table) => {
                // the code is the default-mapped symbol of the candidate's aux
                // state, so C1..C4 land on S1..S4 in the reclaimed cells
                let codes = table
                    .aux_codes()
                    .iter()
                    .map(|code| match code {
                        AuxCode::Single(s) => default_unmap(*s).bits(),
                        AuxCode::Pair(..) => panic!("WLC tables use single-cell codes"),
                    })
                    .collect();
                (table.candidates().to_vec(), codes)
            }
        };
        WlcCosets { mode, layout: WordLayout::new(wlc, granularity), threshold, candidates, codes }
    }

    pub fn layout(&self) -> &WordLayout {
        &self.layout
    }

    fn reclaimed_bits(&self) -> u32 {
        self.layout.wlc.reclaimed_bits()
    }

    #[inline]
    fn symbol_at(stored: u64, t: usize) -> Symbol {
        Symbol::from_low_bits(stored >> (62 - 2 * t))
    }

    fn word_cells(&self, payload: u64, choice: &WordChoice) -> [CellState; CELLS_PER_WORD] {
        let stored = (choice.reclaimed << self.layout.wlc.payload_bits()) | payload;
        let mut cells = [CellState::S1; CELLS_PER_WORD];
        for &t in &self.layout.fixed {
            cells[t] = default_map(Self::symbol_at(stored, t));
        }
        for (block, &pick) in self.layout.blocks.iter().zip(&choice.picks) {
            let cand = &self.candidates[pick];
            for &t in block {
                cells[t] = cand.state_of(Self::symbol_at(stored, t));
            }
        }
        cells
    }

    fn restricted_choice(&self, costs: &[Vec<Energy>], group: u8) -> WordChoice {
        let a = self.reclaimed_bits();
        let other = 1 + group as usize;
        let mut reclaimed = (group as u64) << (a - 1);
        let mut picks = Vec::with_capacity(costs.len());
        for (j, c) in costs.iter().enumerate() {
            let sel = c[other] < c[0];
            reclaimed |= (sel as u64) << (a - 2 - j as u32);
            picks.push(if sel { other } else { 0 });
        }
        WordChoice { reclaimed, picks }
    }

    fn choose(&self, payload: u64, old: &[CellState], model: &EnergyModel) -> WordChoice {
        let stored_payload = payload;
        let costs: Vec<Vec<Energy>> = self
            .layout
            .blocks
            .iter()
            .map(|block| {
                self.candidates
                    .iter()
                    .map(|cand| {
                        block
                            .iter()
                            .map(|&t| model.transition(old[t], cand.state_of(Self::symbol_at(stored_payload, t))))
                            .sum()
                    })
                    .collect()
            })
            .collect();

        match &self.mode {
            Mode::Unrestricted(_) => {
                let a = self.reclaimed_bits();
                let mut reclaimed = 0u64;
                let mut picks = Vec::with_capacity(costs.len());
                for (j, c) in costs.iter().enumerate() {
                    let best = (0..c.len()).fold(0, |b, i| if c[i] < c[b] { i } else { b });
                    reclaimed |= (self.codes[best] as u64) << (a - 2 - 2 * j as u32);
                    picks.push(best);
                }
                WordChoice { reclaimed, picks }
            }
            Mode::Restricted | Mode::MultiObjective => {
                let group_cost = |other: usize| -> Energy { costs.iter().map(|c| c[0].min(c[other])).sum() };
                let (c12, c13) = (group_cost(1), group_cost(2));
                let by_energy = u8::from(c13 < c12);
                if matches!(self.mode, Mode::MultiObjective) && self.threshold > 0.0 {
                    let diff = c12.centi_pj().abs_diff(c13.centi_pj()) as f64;
                    let max = c12.max(c13).centi_pj() as f64;
                    if diff < self.threshold * max {
                        let options = [0u8, 1].map(|g| {
                            let choice = self.restricted_choice(&costs, g);
                            let updated = self
                                .word_cells(payload, &choice)
                                .iter()
                                .zip(old)
                                .filter(|(n, o)| n != o)
                                .count();
                            (updated, [c12, c13][g as usize], g, choice)
                        });
                        let [a, b] = options;
                        let pick = if (b.0, b.1, b.2) < (a.0, a.1, a.2) { b } else { a };
                        return pick.3;
                    }
                }
                self.restricted_choice(&costs, by_energy)
            }
        }
    }

    pub fn encode(&self, new: &MemoryLine, old: &EncodedLine, model: &EnergyModel) -> EncodedLine {
        let wlc = self.layout.wlc;
        if !line_compressible(new, wlc) {
            let raw = encode_baseline(new);
            return EncodedLine::new(raw.data().to_vec(), Vec::new(), Some(FLAG_RAW));
        }
        let mut data = Vec::with_capacity(CELLS_PER_LINE);
        for (i, &word) in new.words().iter().enumerate() {
            let payload = compress_word(word, wlc).expect("line is compressible").payload();
            let old_word = &old.data()[i * CELLS_PER_WORD..(i + 1) * CELLS_PER_WORD];
            let choice = self.choose(payload, old_word, model);
            data.extend(self.word_cells(payload, &choice));
        }
        EncodedLine::new(data, Vec::new(), Some(FLAG_COMPRESSED)).with_embedded_aux(self.layout.fixed.len() as u8)
    }

    fn parse_reclaimed(&self, reclaimed: u64, word: usize) -> Result<(Option<u8>, Vec<usize>), CodecError> {
        let a = self.reclaimed_bits();
        let nb = self.layout.blocks.len() as u32;
        let (group, picks, used) = match self.mode {
            Mode::Restricted | Mode::MultiObjective => {
                let group = (reclaimed >> (a - 1) & 1) as u8;
                let picks = (0..nb)
                    .map(|j| if reclaimed >> (a - 2 - j) & 1 == 1 { 1 + group as usize } else { 0 })
                    .collect();
                (Some(group), picks, 1 + nb)
            }
            Mode::Unrestricted(_) => {
                let picks = (0..nb)
                    .map(|j| {
                        let code = (reclaimed >> (a - 2 - 2 * j) & 0b11) as u8;
                        self.codes.iter().position(|&c| c == code).ok_or_else(|| {
                            CodecError::MalformedAux(format!("word {word} block {j}: code {code:02b} is unassigned"))
                        })
                    })
                    .collect::<Result<_, _>>()?;
                (None, picks, 2 * nb)
            }
        };
        if reclaimed & ((1u64 << (a - used)) - 1) != 0 {
            return Err(CodecError::MalformedAux(format!("word {word}: unused reclaimed bits are set")));
        }
        Ok((group, picks))
    }

    /// Reads one word's cells back into `(word, group, picks)`.
    fn decode_word(&self, cells: &[CellState], word: usize) -> Result<(u64, Option<u8>, Vec<usize>), CodecError> {
        let wlc = self.layout.wlc;
        let mut stored = 0u64;
        for &t in &self.layout.fixed {
            stored |= (default_unmap(cells[t]).bits() as u64) << (62 - 2 * t);
        }
        let (group, picks) = self.parse_reclaimed(stored >> wlc.payload_bits(), word)?;
        for (block, &pick) in self.layout.blocks.iter().zip(&picks) {
            let cand = &self.candidates[pick];
            for &t in block {
                stored |= (cand.symbol_of(cells[t]).bits() as u64) << (62 - 2 * t);
            }
        }
        Ok((decompress_word(CompressedWord::from_stored(stored, wlc), wlc), group, picks))
    }

    fn compressed(&self, enc: &EncodedLine) -> Result<bool, CodecError> {
        match enc.flag() {
            Some(FLAG_COMPRESSED) => Ok(true),
            Some(FLAG_RAW) => Ok(false),
            Some(other) => Err(CodecError::BadFlag(other)),
            None => unreachable!("shape checked by caller"),
        }
    }

    pub fn decode(&self, enc: &EncodedLine) -> Result<MemoryLine, CodecError> {
        if !self.compressed(enc)? {
            return Ok(decode_baseline(enc));
        }
        let mut words = [0u64; WORDS_PER_LINE];
        for (i, w) in words.iter_mut().enumerate() {
            *w = self.decode_word(&enc.data()[i * CELLS_PER_WORD..(i + 1) * CELLS_PER_WORD], i)?.0;
        }
        Ok(MemoryLine::from_words(words))
    }

    pub fn side_info(&self, enc: &EncodedLine) -> Result<SideInfo, CodecError> {
        if !self.compressed(enc)? {
            return Ok(SideInfo::Plain);
        }
        let mut out = Vec::new();
        for i in 0..WORDS_PER_LINE {
            let base = i * CELLS_PER_WORD;
            let (_, group, picks) = self.decode_word(&enc.data()[base..base + CELLS_PER_WORD], i)?;
            for (block, pick) in self.layout.blocks.iter().zip(picks) {
                out.push(Selection {
                    cells: block.iter().map(|t| base + t).collect(),
                    candidate: self.candidates[pick],
                    group,
                });
            }
        }
        Ok(SideInfo::Blocks(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{Codec, SchemeConfig};
    use CellState::*;

    fn layout(k: u8, g: u32) -> WordLayout {
        WordLayout::new(WlcConfig::new(k).unwrap(), g)
    }

    #[test]
    fn wlcrc16_blocks_match_bit_ranges() {
        let l = layout(6, 16);
        assert_eq!(l.fixed_cells(), &[0, 1, 2]);
        assert!(l.has_shared_cell());
        // b57..b48 (five cells) then b47..b32, b31..b16, b15..b0
        assert_eq!(l.blocks()[0], (3..8).collect::<Vec<_>>());
        assert_eq!(l.blocks()[1], (8..16).collect::<Vec<_>>());
        assert_eq!(l.blocks()[2], (16..24).collect::<Vec<_>>());
        assert_eq!(l.blocks()[3], (24..32).collect::<Vec<_>>());
        assert_eq!(l.aux_bits_needed(CodeBits { group: 1, per_block: 1 }), 5);
    }

    #[test]
    fn other_granularities() {
        let l8 = layout(9, 8);
        assert_eq!(l8.fixed_cells().len(), 4);
        assert_eq!(l8.blocks().len(), 7);
        assert!(l8.blocks().iter().all(|b| b.len() == 4));
        let l32 = layout(4, 32);
        assert_eq!(l32.blocks().len(), 2);
        assert_eq!(l32.blocks()[0].len(), 14);
        let l64 = layout(3, 64);
        assert_eq!(l64.blocks().len(), 1);
        assert_eq!(l64.blocks()[0].len(), 31);
        assert_eq!(layout(5, 32).aux_bits_needed(CodeBits { group: 0, per_block: 2 }), 4);
    }

    #[test]
    fn all_zero_line_costs_only_nothing() {
        let m = EnergyModel::default();
        let codec = Codec::new(SchemeConfig::parse("wlcrc-16").unwrap()).unwrap();
        let enc = codec.encode(&MemoryLine::ZERO, &codec.initial(), &m).unwrap();
        assert_eq!(enc.len(), 257);
        assert_eq!(enc.flag(), Some(S1));
        assert!(enc.data().iter().all(|&c| c == S1));
        let SideInfo::Blocks(sel) = codec.side_info(&enc).unwrap() else { panic!() };
        assert_eq!(sel.len(), 32);
        assert!(sel.iter().all(|s| s.group == Some(0) && s.candidate.id() == 1));
    }

    #[test]
    fn incompressible_line_is_written_raw() {
        let m = EnergyModel::default();
        let codec = Codec::new(SchemeConfig::parse("wlcrc-16").unwrap()).unwrap();
        let mut words = [0u64; 8];
        words[2] = 0x4000_0000_0000_0000;
        let line = MemoryLine::from_words(words);
        let enc = codec.encode(&line, &codec.initial(), &m).unwrap();
        assert_eq!(enc.flag(), Some(S2));
        assert_eq!(enc.data(), encode_baseline(&line).data());
        assert_eq!(enc.embedded_aux_cells(), 0);
        assert_eq!(codec.side_info(&enc).unwrap(), SideInfo::Plain);
        assert_eq!(codec.decode(&enc).unwrap(), line);
    }

    #[test]
    fn bad_flag_is_a_decode_error() {
        let codec = Codec::new(SchemeConfig::parse("wlcrc-16").unwrap()).unwrap();
        let enc = EncodedLine::new(vec![S1; 256], vec![], Some(S3));
        assert_eq!(codec.decode(&enc), Err(CodecError::BadFlag(S3)));
    }

    #[test]
    fn wlc3_rejects_unassigned_code() {
        let codec = Codec::new(SchemeConfig::parse("wlc+3cosets-32").unwrap()).unwrap();
        let mut data = vec![S1; 256];
        data[0] = S4; // code 01 is not used by the three-candidate table
        assert!(matches!(codec.decode(&EncodedLine::new(data, vec![], Some(S1))), Err(CodecError::MalformedAux(_))));
    }

    #[test]
    fn wlc4_codes_map_candidates_to_states() {
        let codec = Codec::new(SchemeConfig::parse("wlc+4cosets-32").unwrap()).unwrap();
        let l = codec.word_layout().unwrap();
        assert_eq!(l.wlc().k(), 5);
        assert_eq!(l.fixed_cells(), &[0, 1]);
        let Some(SideInfo::Blocks(_)) = codec.side_info(&codec.initial()).ok() else { panic!() };
        // reclaimed cells S3, S2 select C3 for the top block and C2 for the other
        let mut data = vec![S1; 256];
        data[0] = S3;
        data[1] = S2;
        let SideInfo::Blocks(sel) = codec.side_info(&EncodedLine::new(data, vec![], Some(S1))).unwrap() else {
            panic!()
        };
        assert_eq!(sel[0].candidate.id(), 3);
        assert_eq!(sel[1].candidate.id(), 2);
    }
}
