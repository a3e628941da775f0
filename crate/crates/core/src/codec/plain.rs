//! Schemes that keep the default mapping and transform the data bits:
//! baseline, Flip-N-Write and XOR-mask cosets.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{pack_bits, unpack_bits, EncodedLine, MemoryLine, CELLS_PER_LINE, WORDS_PER_LINE};
use crate::model::{default_map, default_unmap, CellState, Energy, EnergyModel, Symbol};

pub fn encode_baseline(new: &MemoryLine) -> EncodedLine {
    let data = (0..CELLS_PER_LINE).map(|c| default_map(new.symbol(c))).collect();
    EncodedLine::new(data, Vec::new(), None)
}

pub fn decode_baseline(enc: &EncodedLine) -> MemoryLine {
    let symbols: Vec<Symbol> = enc.data().iter().map(|&c| default_unmap(c)).collect();
    MemoryLine::from_symbols(&symbols)
}

#[derive(Clone, Debug)]
pub struct Fnw {
    blocks: usize,
    cells_per_block: usize,
}

impl Fnw {
    pub fn new(granularity: u32) -> Fnw {
        let cells_per_block = granularity as usize / 2;
        Fnw { blocks: CELLS_PER_LINE / cells_per_block, cells_per_block }
    }

    pub fn aux_cells(&self) -> usize {
        self.blocks.div_ceil(2)
    }

    pub fn flips(&self, aux: &[CellState]) -> Vec<bool> {
        unpack_bits(aux, self.blocks).0
    }

    fn block_cost(&self, new: &MemoryLine, old: &EncodedLine, block: usize, flip: bool, model: &EnergyModel) -> Energy {
        let mask = if flip { 0b11 } else { 0 };
        self.block_cells(block)
            .map(|c| {
                let s = Symbol::from_low_bits((new.symbol(c).bits() ^ mask) as u64);
                model.transition(old.data()[c], default_map(s))
            })
            .sum()
    }

    fn block_cells(&self, block: usize) -> std::ops::Range<usize> {
        block * self.cells_per_block..(block + 1) * self.cells_per_block
    }

    /// Blocks sharing an aux cell are decided jointly, since their flip bits
    /// are written as one symbol. Ties keep as many previous flip bits as
    /// possible, then prefer fewer complemented blocks.
    pub fn encode(&self, new: &MemoryLine, old: &EncodedLine, model: &EnergyModel) -> EncodedLine {
        let prev = self.flips(old.aux());
        let mut flips = Vec::with_capacity(self.blocks);
        for (cell, pair) in (0..self.blocks).collect::<Vec<_>>().chunks(2).enumerate() {
            let costs: Vec<[Energy; 2]> = pair
                .iter()
                .map(|&b| [false, true].map(|f| self.block_cost(new, old, b, f, model)))
                .collect();
            let mut best: Option<((Energy, usize, u8), Vec<bool>)> = None;
            for combo in 0..(1u8 << pair.len()) {
                let choice: Vec<bool> = (0..pair.len()).map(|i| combo >> (pair.len() - 1 - i) & 1 == 1).collect();
                let mut bits = choice.clone();
                bits.resize(2, false);
                let aux_state = default_map(Symbol::from_low_bits(((bits[0] as u64) << 1) | bits[1] as u64));
                let data: Energy = choice.iter().zip(&costs).map(|(&f, c)| c[f as usize]).sum();
                let energy = data + model.transition(old.aux()[cell], aux_state);
                let changes = choice.iter().zip(&prev[pair[0]..]).filter(|(a, b)| a != b).count();
                let key = (energy, changes, combo);
                if best.as_ref().is_none_or(|(k, _)| key < *k) {
                    best = Some((key, choice));
                }
            }
            flips.extend(best.expect("at least one combination").1);
        }

        let mut data = Vec::with_capacity(CELLS_PER_LINE);
        for (b, &flip) in flips.iter().enumerate() {
            let mask = if flip { 0b11 } else { 0 };
            data.extend(
                self.block_cells(b)
                    .map(|c| default_map(Symbol::from_low_bits((new.symbol(c).bits() ^ mask) as u64))),
            );
        }
        let mut aux = Vec::with_capacity(self.aux_cells());
        pack_bits(&flips, &mut aux);
        EncodedLine::new(data, aux, None)
    }

    pub fn decode(&self, enc: &EncodedLine) -> MemoryLine {
        let flips = self.flips(enc.aux());
        let symbols: Vec<Symbol> = enc
            .data()
            .iter()
            .enumerate()
            .map(|(c, &state)| {
                let mask = if flips[c / self.cells_per_block] { 0b11 } else { 0 };
                Symbol::from_low_bits((default_unmap(state).bits() ^ mask) as u64)
            })
            .collect();
        MemoryLine::from_symbols(&symbols)
    }
}

pub const XOR_MASK_COUNT: usize = 16;
pub(crate) const XOR_AUX_CELLS: usize = 2;
/// Seed of the default FlipMin-style mask set.
pub const XOR_MASK_SEED: u64 = 0x464c_4950_4d49_4e00;

/// Sixteen 512-bit masks: mask 0 is all zero, masks 1..16 are drawn from a
/// ChaCha8 stream seeded with [`XOR_MASK_SEED`].
pub fn default_xor_masks() -> [MemoryLine; XOR_MASK_COUNT] {
    let mut rng = ChaCha8Rng::seed_from_u64(XOR_MASK_SEED);
    let mut masks = [MemoryLine::ZERO; XOR_MASK_COUNT];
    for m in masks.iter_mut().skip(1) {
        let mut words = [0u64; WORDS_PER_LINE];
        words.iter_mut().for_each(|w| *w = rng.next_u64());
        *m = MemoryLine::from_words(words);
    }
    masks
}

#[derive(Clone, Debug)]
pub struct XorCoset {
    masks: [MemoryLine; XOR_MASK_COUNT],
}

impl XorCoset {
    pub fn new(masks: [MemoryLine; XOR_MASK_COUNT]) -> XorCoset {
        XorCoset { masks }
    }

    pub fn masks(&self) -> &[MemoryLine; XOR_MASK_COUNT] {
        &self.masks
    }

    pub fn index(aux: &[CellState]) -> usize {
        aux.iter().fold(0, |acc, &c| acc << 2 | default_unmap(c).bits() as usize)
    }

    fn aux_for(index: usize) -> [CellState; XOR_AUX_CELLS] {
        [index >> 2, index & 0b11].map(|bits| default_map(Symbol::from_low_bits(bits as u64)))
    }

    /// Picks the mask minimizing data plus index-cell energy; lowest index on
    /// ties.
    pub fn encode(&self, new: &MemoryLine, old: &EncodedLine, model: &EnergyModel) -> EncodedLine {
        let mut best = (Energy::ZERO, 0);
        for (i, mask) in self.masks.iter().enumerate() {
            let masked = new.xor(mask);
            let mut cost: Energy = (0..CELLS_PER_LINE)
                .map(|c| model.transition(old.data()[c], default_map(masked.symbol(c))))
                .sum();
            for (o, n) in old.aux().iter().zip(Self::aux_for(i)) {
                cost += model.transition(*o, n);
            }
            if i == 0 || cost < best.0 {
                best = (cost, i);
            }
        }
        let index = best.1;
        let mut enc = encode_baseline(&new.xor(&self.masks[index]));
        enc = EncodedLine::new(enc.data().to_vec(), Self::aux_for(index).to_vec(), None);
        enc
    }

    pub fn decode(&self, enc: &EncodedLine) -> MemoryLine {
        decode_baseline(enc).xor(&self.masks[Self::index(enc.aux())])
    }
}
