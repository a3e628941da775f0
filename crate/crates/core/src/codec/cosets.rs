//! Block coset coding over the whole 512-bit line with separate auxiliary
//! cells: unrestricted table cosets and the line-restricted C1/C2 | C1/C3
//! variant.

use super::{pack_bits, unpack_bits, CodecError, EncodedLine, MemoryLine, Selection, CELLS_PER_LINE};
use crate::model::{table_candidate, AuxCode, CandidateTable, CellState, CosetCandidate, Energy, EnergyModel, Symbol};

fn block_cost(
    new: &MemoryLine,
    old: &[CellState],
    cells: std::ops::Range<usize>,
    cand: &CosetCandidate,
    model: &EnergyModel,
) -> Energy {
    cells.map(|c| model.transition(old[c], cand.state_of(new.symbol(c)))).sum()
}

/// Index of the first minimum.
fn argmin(costs: impl IntoIterator<Item = Energy>) -> usize {
    let mut best: Option<(Energy, usize)> = None;
    for (i, c) in costs.into_iter().enumerate() {
        if best.is_none_or(|(b, _)| c < b) {
            best = Some((c, i));
        }
    }
    best.expect("non-empty").1
}

#[derive(Clone, Debug)]
pub struct TableCosets {
    table: CandidateTable,
    cells_per_block: usize,
}

impl TableCosets {
    pub fn new(table: CandidateTable, granularity: u32) -> TableCosets {
        TableCosets { table, cells_per_block: granularity as usize / 2 }
    }

    fn blocks(&self) -> usize {
        CELLS_PER_LINE / self.cells_per_block
    }

    fn block_cells(&self, b: usize) -> std::ops::Range<usize> {
        b * self.cells_per_block..(b + 1) * self.cells_per_block
    }

    pub fn aux_cells(&self) -> usize {
        self.blocks() * self.table.aux_cells()
    }

    /// Per block, the candidate with the lowest data-cell energy; lowest id
    /// on ties. Aux cells are not part of the selection cost.
    pub fn encode(&self, new: &MemoryLine, old: &EncodedLine, model: &EnergyModel) -> EncodedLine {
        let mut data = Vec::with_capacity(CELLS_PER_LINE);
        let mut aux = Vec::with_capacity(self.aux_cells());
        for b in 0..self.blocks() {
            let cells = self.block_cells(b);
            let best = argmin(
                self.table
                    .candidates()
                    .iter()
                    .map(|cand| block_cost(new, old.data(), cells.clone(), cand, model)),
            );
            let cand = self.table.candidate(best);
            data.extend(cells.map(|c| cand.state_of(new.symbol(c))));
            self.table.aux_codes()[best].write_into(&mut aux);
        }
        EncodedLine::new(data, aux, None)
    }

    fn candidate_indices(&self, enc: &EncodedLine) -> Result<Vec<usize>, CodecError> {
        let width = self.table.aux_cells();
        enc.aux()
            .chunks(width)
            .enumerate()
            .map(|(b, cells)| {
                let code = match *cells {
                    [a] => AuxCode::Single(a),
                    [a, b] => AuxCode::Pair(a, b),
                    _ => unreachable!("aux codes are one or two cells"),
                };
                self.table.lookup_aux(code).ok_or_else(|| {
                    CodecError::MalformedAux(format!("block {b}: {code:?} is not a {} code", self.table.name()))
                })
            })
            .collect()
    }

    pub fn decode(&self, enc: &EncodedLine) -> Result<MemoryLine, CodecError> {
        let idx = self.candidate_indices(enc)?;
        let symbols: Vec<Symbol> = enc
            .data()
            .iter()
            .enumerate()
            .map(|(c, &s)| self.table.candidate(idx[c / self.cells_per_block]).symbol_of(s))
            .collect();
        Ok(MemoryLine::from_symbols(&symbols))
    }

    pub fn selections(&self, enc: &EncodedLine) -> Result<Vec<Selection>, CodecError> {
        Ok(self
            .candidate_indices(enc)?
            .into_iter()
            .enumerate()
            .map(|(b, i)| Selection { cells: self.block_cells(b).collect(), candidate: *self.table.candidate(i), group: None })
            .collect())
    }
}

/// The two candidate groups of the restricted schemes, indexed by group bit.
pub(crate) fn group_members(group: u8) -> [CosetCandidate; 2] {
    [table_candidate(1), table_candidate(2 + group)]
}

#[derive(Clone, Debug)]
pub struct RestrictedLine {
    cells_per_block: usize,
}

impl RestrictedLine {
    pub fn new(granularity: u32) -> RestrictedLine {
        RestrictedLine { cells_per_block: granularity as usize / 2 }
    }

    fn blocks(&self) -> usize {
        CELLS_PER_LINE / self.cells_per_block
    }

    /// One group bit plus one selection bit per block.
    pub fn aux_bits(&self) -> usize {
        1 + self.blocks()
    }

    pub fn aux_cells(&self) -> usize {
        self.aux_bits().div_ceil(2)
    }

    /// Costs the whole line under C1/C2 and under C1/C3 and keeps the
    /// cheaper group (C1/C2 on ties); within a group C1 wins ties.
    pub fn encode(&self, new: &MemoryLine, old: &EncodedLine, model: &EnergyModel) -> EncodedLine {
        let cands = [table_candidate(1), table_candidate(2), table_candidate(3)];
        let costs: Vec<[Energy; 3]> = (0..self.blocks())
            .map(|b| {
                let cells = b * self.cells_per_block..(b + 1) * self.cells_per_block;
                cands.each_ref().map(|c| block_cost(new, old.data(), cells.clone(), c, model))
            })
            .collect();
        let group_cost = |other: usize| -> Energy { costs.iter().map(|c| c[0].min(c[other])).sum() };
        let group = u8::from(group_cost(2) < group_cost(1));
        let other = 1 + group as usize;

        let mut bits = vec![group == 1];
        let mut data = Vec::with_capacity(CELLS_PER_LINE);
        for (b, c) in costs.iter().enumerate() {
            let sel = c[other] < c[0];
            bits.push(sel);
            let cand = &cands[if sel { other } else { 0 }];
            data.extend((b * self.cells_per_block..(b + 1) * self.cells_per_block).map(|i| cand.state_of(new.symbol(i))));
        }
        let mut aux = Vec::with_capacity(self.aux_cells());
        pack_bits(&bits, &mut aux);
        EncodedLine::new(data, aux, None)
    }

    fn choices(&self, enc: &EncodedLine) -> Result<(u8, Vec<bool>), CodecError> {
        let (bits, pad) = unpack_bits(enc.aux(), self.aux_bits());
        if pad {
            return Err(CodecError::MalformedAux("non-zero padding bit".into()));
        }
        Ok((bits[0] as u8, bits[1..].to_vec()))
    }

    pub fn decode(&self, enc: &EncodedLine) -> Result<MemoryLine, CodecError> {
        let (group, sels) = self.choices(enc)?;
        let members = group_members(group);
        let symbols: Vec<Symbol> = enc
            .data()
            .iter()
            .enumerate()
            .map(|(c, &s)| members[sels[c / self.cells_per_block] as usize].symbol_of(s))
            .collect();
        Ok(MemoryLine::from_symbols(&symbols))
    }

    pub fn selections(&self, enc: &EncodedLine) -> Result<Vec<Selection>, CodecError> {
        let (group, sels) = self.choices(enc)?;
        let members = group_members(group);
        Ok(sels
            .iter()
            .enumerate()
            .map(|(b, &s)| Selection {
                cells: (b * self.cells_per_block..(b + 1) * self.cells_per_block).collect(),
                candidate: members[s as usize],
                group: Some(group),
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{Codec, SchemeConfig, SideInfo};
    use CellState::*;

    #[test]
    fn four_cosets_ties_pick_lowest_id() {
        let m = EnergyModel::default();
        let codec = Codec::new(SchemeConfig::parse("4cosets-16").unwrap()).unwrap();
        let mut words = [0u64; 8];
        words[0] = 0xFFFF << 48;
        let enc = codec.encode(&MemoryLine::from_words(words), &codec.initial(), &m).unwrap();
        assert!(enc.data()[..8].iter().all(|&c| c == S1));
        assert_eq!(enc.aux()[0], S2, "C2 recorded as S2");
        let SideInfo::Blocks(sel) = codec.side_info(&enc).unwrap() else { panic!() };
        assert_eq!(sel[0].candidate.id(), 2);
        assert_eq!(sel[1].candidate.id(), 1);
    }

    #[test]
    fn three_cosets_rejects_s4_aux() {
        let codec = Codec::new(SchemeConfig::parse("3cosets-64").unwrap()).unwrap();
        let mut aux = vec![S1; 8];
        aux[5] = S4;
        let bad = EncodedLine::new(vec![S1; 256], aux, None);
        assert!(matches!(codec.decode(&bad), Err(CodecError::MalformedAux(_))));
    }

    #[test]
    fn six_cosets_decode_uses_recorded_candidate() {
        let codec = Codec::new(SchemeConfig::parse("6cosets-512").unwrap()).unwrap();
        let table = CandidateTable::six_cosets();
        // combination index 3 is (S2, S2)
        let enc = EncodedLine::new(vec![S1; 256], vec![S2, S2], None);
        let expected = table.candidate(3).symbol_of(S1);
        assert!(codec.decode(&enc).unwrap().symbols().iter().all(|&s| s == expected));
        let bad = EncodedLine::new(vec![S1; 256], vec![S4, S4], None);
        assert!(codec.decode(&bad).is_err());
    }

    #[test]
    fn restricted_line_layout_and_tie() {
        let m = EnergyModel::default();
        let codec = Codec::new(SchemeConfig::parse("3-r-cosets-16").unwrap()).unwrap();
        assert_eq!(codec.shape().aux, 17);
        let r = RestrictedLine::new(16);
        assert_eq!(r.aux_bits(), 33);
        let enc = codec.encode(&MemoryLine::ZERO, &codec.initial(), &m).unwrap();
        assert_eq!(enc, codec.initial());
        let SideInfo::Blocks(sel) = codec.side_info(&enc).unwrap() else { panic!() };
        assert_eq!(sel.len(), 32);
        assert!(sel.iter().all(|s| s.group == Some(0) && s.candidate.id() == 1));
        // padding bit set
        let mut aux = vec![S1; 17];
        aux[16] = S4;
        assert!(codec.decode(&EncodedLine::new(vec![S1; 256], aux, None)).is_err());
    }
}
