//! Cell alphabet, write-energy and write-disturbance models, and the coset
//! candidate tables shared by every codec.
//!
//! A 4-level cell stores one 2-bit [`Symbol`] as one of four resistance
//! states. States are numbered by the energy needed to program them, so
//! `S1 < S2 < S3 < S4`.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("energy for {0} must be finite and non-negative, got {1}")]
    NegativeEnergy(&'static str, f64),
    #[error("scaled SET energies must be nondecreasing in state order ({0} < {1})")]
    NonMonotoneEnergy(CellState, CellState),
    #[error("scale factor must be finite and positive, got {0}")]
    BadScale(f64),
    #[error("disturbance rate for {0} must lie in [0, 1], got {1}")]
    BadRate(CellState, f64),
    #[error("the lowest-resistance state S2 is immune to disturbance; rate must be 0, got {0}")]
    S2NotImmune(f64),
    #[error("coset mapping is not a permutation of the four states: {0:?}")]
    NotAPermutation([CellState; 4]),
    #[error("candidate table has {0} candidates but {1} auxiliary codes")]
    AuxCountMismatch(usize, usize),
    #[error("auxiliary codes are not pairwise distinct")]
    DuplicateAux,
    #[error("reading model config: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing model config: {0}")]
    Parse(#[from] toml::de::Error),
}

/// A 2-bit data pattern, stored as `hi << 1 | lo`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Symbol(u8);

impl Symbol {
    pub const S00: Symbol = Symbol(0b00);
    pub const S01: Symbol = Symbol(0b01);
    pub const S10: Symbol = Symbol(0b10);
    pub const S11: Symbol = Symbol(0b11);
    pub const ALL: [Symbol; 4] = [Symbol::S00, Symbol::S01, Symbol::S10, Symbol::S11];

    /// Returns `None` for values above `0b11`.
    pub const fn new(bits: u8) -> Option<Symbol> {
        if bits < 4 {
            Some(Symbol(bits))
        } else {
            None
        }
    }

    /// Takes the two low bits of `bits`.
    #[inline]
    pub const fn from_low_bits(bits: u64) -> Symbol {
        Symbol((bits & 0b11) as u8)
    }

    #[inline]
    pub const fn bits(self) -> u8 {
        self.0
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02b}", self.0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02b}", self.0)
    }
}

/// Resistance state of a cell, ordered by programming energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
#[repr(u8)]
pub enum CellState {
    /// RESET (highest resistance); the initial state of every cell.
    #[default]
    S1 = 0,
    /// Lowest resistance, reached with one SET pulse.
    S2 = 1,
    S3 = 2,
    S4 = 3,
}

impl CellState {
    pub const ALL: [CellState; 4] = [CellState::S1, CellState::S2, CellState::S3, CellState::S4];

    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn from_index(i: usize) -> Option<CellState> {
        match i {
            0 => Some(CellState::S1),
            1 => Some(CellState::S2),
            2 => Some(CellState::S3),
            3 => Some(CellState::S4),
            _ => None,
        }
    }

    /// `'1'..='4'`, used by the compact textual cell dump.
    pub const fn digit(self) -> char {
        match self {
            CellState::S1 => '1',
            CellState::S2 => '2',
            CellState::S3 => '3',
            CellState::S4 => '4',
        }
    }

    pub fn from_digit(c: char) -> Option<CellState> {
        match c {
            '1' => Some(CellState::S1),
            '2' => Some(CellState::S2),
            '3' => Some(CellState::S3),
            '4' => Some(CellState::S4),
            _ => None,
        }
    }
}

impl fmt::Display for CellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.index() + 1)
    }
}

/// Energy in hundredths of a picojoule.
///
/// Integer so that candidate costs compare exactly; the 1/100 pJ unit keeps
/// scaled SET energies representable to well below the model's precision.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Energy(u64);

impl Energy {
    pub const ZERO: Energy = Energy(0);

    pub const fn from_pj(pj: u64) -> Energy {
        Energy(pj * 100)
    }

    pub const fn from_centi_pj(c: u64) -> Energy {
        Energy(c)
    }

    pub const fn centi_pj(self) -> u64 {
        self.0
    }

    pub fn pj(self) -> f64 {
        self.0 as f64 / 100.0
    }

    fn from_pj_f64(pj: f64) -> Energy {
        Energy((pj * 100.0).round() as u64)
    }
}

impl Add for Energy {
    type Output = Energy;
    #[inline]
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl AddAssign for Energy {
    #[inline]
    fn add_assign(&mut self, rhs: Energy) {
        self.0 += rhs.0;
    }
}

impl Sum for Energy {
    fn sum<I: Iterator<Item = Energy>>(iter: I) -> Energy {
        iter.fold(Energy::ZERO, Add::add)
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02} pJ", self.0 / 100, self.0 % 100)
    }
}

/// One value per cell state; the shape used in config files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerState<T> {
    pub s1: T,
    pub s2: T,
    pub s3: T,
    pub s4: T,
}

impl<T: Copy> PerState<T> {
    pub fn to_array(self) -> [T; 4] {
        [self.s1, self.s2, self.s3, self.s4]
    }

    pub fn from_array(a: [T; 4]) -> Self {
        PerState { s1: a[0], s2: a[1], s3: a[2], s4: a[3] }
    }
}

/// Raw energy parameters in picojoules, as written in a config file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyParams {
    pub reset_pj: f64,
    pub set_pj: PerState<f64>,
    /// Multiplies the SET energy of S3 and S4 only.
    pub scale_high: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            reset_pj: 36.0,
            set_pj: PerState { s1: 0.0, s2: 20.0, s3: 307.0, s4: 547.0 },
            scale_high: 1.0,
        }
    }
}

/// Per-cell programming cost: a single RESET followed by the SET iterations
/// needed for the target state.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyModel {
    params: EnergyParams,
    reset: Energy,
    set: [Energy; 4],
    // write cost indexed by [old][new]
    transition: [[Energy; 4]; 4],
}

impl EnergyModel {
    pub fn new(params: EnergyParams) -> Result<EnergyModel, ModelError> {
        let check = |name: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(ModelError::NegativeEnergy(name, v))
            }
        };
        check("RESET", params.reset_pj)?;
        let raw = params.set_pj.to_array();
        for (name, v) in ["S1", "S2", "S3", "S4"].into_iter().zip(raw) {
            check(name, v)?;
        }
        if !(params.scale_high.is_finite() && params.scale_high > 0.0) {
            return Err(ModelError::BadScale(params.scale_high));
        }

        let reset = Energy::from_pj_f64(params.reset_pj);
        let mut set = [Energy::ZERO; 4];
        for state in CellState::ALL {
            let scale = if state >= CellState::S3 { params.scale_high } else { 1.0 };
            set[state.index()] = Energy::from_pj_f64(raw[state.index()] * scale);
        }
        for w in CellState::ALL.windows(2) {
            if set[w[1].index()] < set[w[0].index()] {
                return Err(ModelError::NonMonotoneEnergy(w[1], w[0]));
            }
        }

        let mut transition = [[Energy::ZERO; 4]; 4];
        for old in CellState::ALL {
            for new in CellState::ALL {
                if old != new {
                    transition[old.index()][new.index()] = reset + set[new.index()];
                }
            }
        }
        Ok(EnergyModel { params, reset, set, transition })
    }

    /// Same parameters with a different S3/S4 SET scale factor.
    pub fn with_scale_high(&self, scale_high: f64) -> Result<EnergyModel, ModelError> {
        EnergyModel::new(EnergyParams { scale_high, ..self.params })
    }

    pub fn params(&self) -> &EnergyParams {
        &self.params
    }

    pub fn reset_energy(&self) -> Energy {
        self.reset
    }

    /// SET component for `state`, after scaling.
    pub fn set_energy(&self, state: CellState) -> Energy {
        self.set[state.index()]
    }

    /// Table lookup equivalent of [`cell_write_energy`].
    #[inline]
    pub fn transition(&self, old: CellState, new: CellState) -> Energy {
        self.transition[old.index()][new.index()]
    }
}

impl Default for EnergyModel {
    fn default() -> Self {
        EnergyModel::new(EnergyParams::default()).expect("default energy parameters are valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisturbanceParams {
    pub rate: PerState<f64>,
}

impl Default for DisturbanceParams {
    fn default() -> Self {
        DisturbanceParams { rate: PerState { s1: 0.123, s2: 0.0, s3: 0.276, s4: 0.152 } }
    }
}

/// Probability that an idle cell in a given state is disturbed by one
/// neighbouring RESET.
#[derive(Clone, Debug, PartialEq)]
pub struct DisturbanceModel {
    rates: [f64; 4],
}

impl DisturbanceModel {
    pub fn new(params: DisturbanceParams) -> Result<DisturbanceModel, ModelError> {
        let rates = params.rate.to_array();
        for state in CellState::ALL {
            let r = rates[state.index()];
            if !(0.0..=1.0).contains(&r) {
                return Err(ModelError::BadRate(state, r));
            }
        }
        if rates[CellState::S2.index()] != 0.0 {
            return Err(ModelError::S2NotImmune(rates[CellState::S2.index()]));
        }
        Ok(DisturbanceModel { rates })
    }

    /// Sets every susceptible state (S1, S3, S4) to `r`.
    pub fn uniform(r: f64) -> Result<DisturbanceModel, ModelError> {
        DisturbanceModel::new(DisturbanceParams { rate: PerState { s1: r, s2: 0.0, s3: r, s4: r } })
    }

    #[inline]
    pub fn rate(&self, state: CellState) -> f64 {
        self.rates[state.index()]
    }
}

impl Default for DisturbanceModel {
    fn default() -> Self {
        DisturbanceModel::new(DisturbanceParams::default()).expect("default rates are valid")
    }
}

/// Energy and disturbance parameters as loaded from a TOML file:
///
/// ```toml
/// [energy]
/// reset_pj = 36.0
/// set_pj = { s1 = 0.0, s2 = 20.0, s3 = 307.0, s4 = 547.0 }
/// scale_high = 1.0
///
/// [disturbance]
/// rate = { s1 = 0.123, s2 = 0.0, s3 = 0.276, s4 = 0.152 }
/// ```
///
/// Energies are in pJ, rates are probabilities. Missing keys take the
/// defaults above.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub energy: EnergyParams,
    pub disturbance: DisturbanceParams,
}

impl ModelConfig {
    pub fn from_toml_str(s: &str) -> Result<ModelConfig, ModelError> {
        Ok(toml::from_str(s)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelConfig, ModelError> {
        ModelConfig::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<(EnergyModel, DisturbanceModel), ModelError> {
        Ok((EnergyModel::new(self.energy)?, DisturbanceModel::new(self.disturbance)?))
    }
}

/// Cost of moving one cell from `old` to `new` under differential write.
///
/// Unchanged cells are skipped; any change pays the RESET plus the SET
/// energy of the target state.
pub fn cell_write_energy(old: CellState, new: CellState, model: &EnergyModel) -> Energy {
    if old == new {
        Energy::ZERO
    } else {
        model.reset_energy() + model.set_energy(new)
    }
}

/// A bijective symbol-to-state mapping.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct CosetCandidate {
    id: u8,
    map: [CellState; 4],
    inverse: [Symbol; 4],
}

impl CosetCandidate {
    /// `map[s]` is the state that symbol value `s` is written as.
    pub fn new(id: u8, map: [CellState; 4]) -> Result<CosetCandidate, ModelError> {
        let mut inverse = [None; 4];
        for (bits, state) in map.iter().enumerate() {
            if inverse[state.index()].replace(Symbol(bits as u8)).is_some() {
                return Err(ModelError::NotAPermutation(map));
            }
        }
        Ok(CosetCandidate { id, map, inverse: inverse.map(|s| s.expect("bijective")) })
    }

    /// Builds a candidate from the state-ordered symbol column of a table:
    /// `column[i]` is the symbol stored as state `S(i+1)`.
    pub fn from_column(id: u8, column: [Symbol; 4]) -> Result<CosetCandidate, ModelError> {
        let mut map = [None; 4];
        for (state, sym) in CellState::ALL.iter().zip(column) {
            if map[sym.bits() as usize].replace(*state).is_some() {
                return Err(ModelError::NotAPermutation([CellState::S1; 4]));
            }
        }
        CosetCandidate::new(id, map.map(|s| s.expect("every symbol assigned")))
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    #[inline]
    pub fn state_of(&self, symbol: Symbol) -> CellState {
        self.map[symbol.bits() as usize]
    }

    #[inline]
    pub fn symbol_of(&self, state: CellState) -> Symbol {
        self.inverse[state.index()]
    }
}

impl fmt::Debug for CosetCandidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}[", self.id)?;
        for (i, s) in self.inverse.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("]")
    }
}

const fn sym(bits: u8) -> Symbol {
    Symbol(bits)
}

/// The four candidate columns, listed in state order S1..S4.
const TABLE_COLUMNS: [[Symbol; 4]; 4] = [
    [sym(0b00), sym(0b10), sym(0b11), sym(0b01)],
    [sym(0b11), sym(0b00), sym(0b10), sym(0b01)],
    [sym(0b11), sym(0b01), sym(0b00), sym(0b10)],
    [sym(0b11), sym(0b00), sym(0b01), sym(0b10)],
];

/// The default symbol-to-state mapping, `C1`.
pub fn c1() -> CosetCandidate {
    table_candidate(1)
}

/// Candidate `C1`..`C4` of the four-candidate table.
pub fn table_candidate(id: u8) -> CosetCandidate {
    assert!((1..=4).contains(&id), "table candidates are C1..C4");
    CosetCandidate::from_column(id, TABLE_COLUMNS[id as usize - 1]).expect("table columns are permutations")
}

/// `00 -> S1`, `10 -> S2`, `11 -> S3`, `01 -> S4`.
#[inline]
pub fn default_map(symbol: Symbol) -> CellState {
    const MAP: [CellState; 4] = [CellState::S1, CellState::S4, CellState::S2, CellState::S3];
    MAP[symbol.bits() as usize]
}

/// Inverse of [`default_map`].
#[inline]
pub fn default_unmap(state: CellState) -> Symbol {
    TABLE_COLUMNS[0][state.index()]
}

pub fn apply_coset(candidate: &CosetCandidate, symbols: &[Symbol]) -> Vec<CellState> {
    symbols.iter().map(|&s| candidate.state_of(s)).collect()
}

pub fn invert_coset(candidate: &CosetCandidate, states: &[CellState]) -> Vec<Symbol> {
    states.iter().map(|&s| candidate.symbol_of(s)).collect()
}

/// How a candidate index is recorded in auxiliary cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AuxCode {
    Single(CellState),
    Pair(CellState, CellState),
}

impl AuxCode {
    pub fn cells(&self) -> usize {
        match self {
            AuxCode::Single(_) => 1,
            AuxCode::Pair(..) => 2,
        }
    }

    pub fn write_into(&self, out: &mut Vec<CellState>) {
        match *self {
            AuxCode::Single(a) => out.push(a),
            AuxCode::Pair(a, b) => out.extend([a, b]),
        }
    }
}

/// Ordered coset candidates with the auxiliary code that identifies each.
#[derive(Clone, Debug, PartialEq)]
pub struct CandidateTable {
    name: &'static str,
    candidates: Vec<CosetCandidate>,
    aux: Vec<AuxCode>,
}

impl CandidateTable {
    pub fn new(
        name: &'static str,
        candidates: Vec<CosetCandidate>,
        aux: Vec<AuxCode>,
    ) -> Result<CandidateTable, ModelError> {
        if candidates.len() != aux.len() {
            return Err(ModelError::AuxCountMismatch(candidates.len(), aux.len()));
        }
        for (i, a) in aux.iter().enumerate() {
            if aux[..i].contains(a) || a.cells() != aux[0].cells() {
                return Err(ModelError::DuplicateAux);
            }
        }
        Ok(CandidateTable { name, candidates, aux })
    }

    /// C1..C4 with auxiliary states S1..S4.
    pub fn four_cosets() -> CandidateTable {
        Self::table_prefix("4cosets", 4)
    }

    /// C1..C3 with auxiliary states S1..S3.
    pub fn three_cosets() -> CandidateTable {
        Self::table_prefix("3cosets", 3)
    }

    fn table_prefix(name: &'static str, n: u8) -> CandidateTable {
        let candidates = (1..=n).map(table_candidate).collect();
        let aux = CellState::ALL[..n as usize].iter().map(|&s| AuxCode::Single(s)).collect();
        CandidateTable::new(name, candidates, aux).expect("built-in table is valid")
    }

    /// The six pair mappings: for each pair of symbols, the one earlier in
    /// default-state order goes to S1, the other to S2, and the remaining two
    /// keep their default relative order in S3/S4. Candidate ids follow the
    /// pair enumeration order, so candidate 1 is the default mapping.
    ///
    /// Each candidate is recorded in two auxiliary cells using the six
    /// cheapest state pairs.
    pub fn six_cosets() -> CandidateTable {
        // symbols in default-state order S1..S4
        let order = TABLE_COLUMNS[0];
        let mut candidates = Vec::with_capacity(6);
        let mut id = 1;
        for a in 0..4 {
            for b in a + 1..4 {
                let rest: Vec<Symbol> = (0..4).filter(|&i| i != a && i != b).map(|i| order[i]).collect();
                let column = [order[a], order[b], rest[0], rest[1]];
                candidates.push(CosetCandidate::from_column(id, column).expect("pair mapping is a permutation"));
                id += 1;
            }
        }
        CandidateTable::new("6cosets", candidates, SIX_COSET_AUX.to_vec()).expect("built-in table is valid")
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[CosetCandidate] {
        &self.candidates
    }

    pub fn candidate(&self, index: usize) -> &CosetCandidate {
        &self.candidates[index]
    }

    pub fn aux_codes(&self) -> &[AuxCode] {
        &self.aux
    }

    pub fn aux_cells(&self) -> usize {
        self.aux.first().map_or(0, AuxCode::cells)
    }

    /// Candidate index recorded by `code`, if any.
    pub fn lookup_aux(&self, code: AuxCode) -> Option<usize> {
        self.aux.iter().position(|&a| a == code)
    }
}

/// The six cheapest of the 16 two-cell state combinations, ordered by summed
/// SET energy with lexicographic tie-break.
pub const SIX_COSET_AUX: [AuxCode; 6] = [
    AuxCode::Pair(CellState::S1, CellState::S1),
    AuxCode::Pair(CellState::S1, CellState::S2),
    AuxCode::Pair(CellState::S2, CellState::S1),
    AuxCode::Pair(CellState::S2, CellState::S2),
    AuxCode::Pair(CellState::S1, CellState::S3),
    AuxCode::Pair(CellState::S3, CellState::S1),
];
