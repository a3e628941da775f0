//! Line encoders and decoders.
//!
//! Every codec is a pure function of the new line, the cells currently
//! stored, and the energy model. Costs are differential: a cell whose target
//! state equals its stored state costs nothing.
//!
//! | scheme        | data cells | aux cells              | flag |
//! |---------------|------------|------------------------|------|
//! | baseline      | 256        | 0                      | no   |
//! | fnw-g         | 256        | ⌈(512/g)/2⌉ (C1 bits)   | no   |
//! | flipmin       | 256        | 2 (mask index, C1)     | no   |
//! | 6cosets-g     | 256        | 2 per block            | no   |
//! | 4/3cosets-g   | 256        | 1 per block            | no   |
//! | 3-r-cosets-g  | 256        | ⌈(1+512/g)/2⌉ (C1 bits) | no   |
//! | wlc*-g        | 256        | 0 (embedded in words)  | yes  |

mod cosets;
mod line;
mod plain;
mod wlc_cosets;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use line::{
    EncodedLine, MemoryLine, ParseLineError, Region, Shape, CELLS_PER_LINE, CELLS_PER_WORD, LINE_BITS, LINE_BYTES,
    WORDS_PER_LINE,
};
pub use plain::{default_xor_masks, XOR_MASK_COUNT, XOR_MASK_SEED};
pub use wlc_cosets::WordLayout;

use crate::model::{
    cell_write_energy, default_map, default_unmap, CandidateTable, CellState, CosetCandidate, Energy, EnergyModel,
    Symbol,
};
use crate::wlc::{WlcConfig, WlcError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("granularity {granularity} is not valid for {scheme}")]
    BadGranularity { scheme: SchemeKind, granularity: u32 },
    #[error("k does not apply to {0}")]
    KNotApplicable(SchemeKind),
    #[error(transparent)]
    Wlc(#[from] WlcError),
    #[error("{scheme} at granularity {granularity} needs {needed} reclaimed bits per word but k={k} frees only {available}")]
    InsufficientCapacity { scheme: SchemeKind, granularity: u32, k: u8, needed: u32, available: u32 },
    #[error("threshold must lie in [0, 1], got {0}")]
    BadThreshold(String),
    #[error("expected {expected} XOR masks, got {got}")]
    MaskCount { expected: usize, got: usize },
    #[error("unknown scheme {0:?}")]
    UnknownScheme(String),
    #[error("stored line has shape {got:?}, scheme expects {expected:?}")]
    ShapeMismatch { expected: Shape, got: Shape },
    #[error("flag cell in state {0} is neither compressed (S1) nor raw (S2)")]
    BadFlag(CellState),
    #[error("malformed auxiliary data: {0}")]
    MalformedAux(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    /// Differential write with the default mapping.
    Baseline,
    /// Flip-N-Write: each block stored as-is or complemented.
    Fnw,
    /// FlipMin-style coset coding: the line is XORed with one of 16 masks.
    #[serde(rename = "flipmin")]
    XorCoset,
    #[serde(rename = "6cosets")]
    SixCosets,
    #[serde(rename = "4cosets")]
    FourCosets,
    #[serde(rename = "3cosets")]
    ThreeCosets,
    /// C1/C2 or C1/C3 chosen once per line, then C1 or the group's other
    /// candidate per block.
    #[serde(rename = "3-r-cosets")]
    RestrictedLine,
    /// Word-level compression with per-word restricted cosets.
    Wlcrc,
    #[serde(rename = "wlc+4cosets")]
    Wlc4Cosets,
    #[serde(rename = "wlc+3cosets")]
    Wlc3Cosets,
    /// WLCRC with the updated-cell tie-break for near-equal group costs.
    #[serde(rename = "wlcrc-mo")]
    WlcrcMultiObjective,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 11] = [
        SchemeKind::Baseline,
        SchemeKind::Fnw,
        SchemeKind::XorCoset,
        SchemeKind::SixCosets,
        SchemeKind::FourCosets,
        SchemeKind::ThreeCosets,
        SchemeKind::RestrictedLine,
        SchemeKind::Wlcrc,
        SchemeKind::Wlc4Cosets,
        SchemeKind::Wlc3Cosets,
        SchemeKind::WlcrcMultiObjective,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Baseline => "baseline",
            SchemeKind::Fnw => "fnw",
            SchemeKind::XorCoset => "flipmin",
            SchemeKind::SixCosets => "6cosets",
            SchemeKind::FourCosets => "4cosets",
            SchemeKind::ThreeCosets => "3cosets",
            SchemeKind::RestrictedLine => "3-r-cosets",
            SchemeKind::Wlcrc => "wlcrc",
            SchemeKind::Wlc4Cosets => "wlc+4cosets",
            SchemeKind::Wlc3Cosets => "wlc+3cosets",
            SchemeKind::WlcrcMultiObjective => "wlcrc-mo",
        }
    }

    pub fn is_wlc(self) -> bool {
        matches!(
            self,
            SchemeKind::Wlcrc | SchemeKind::Wlc4Cosets | SchemeKind::Wlc3Cosets | SchemeKind::WlcrcMultiObjective
        )
    }

    pub fn default_granularity(self) -> u32 {
        match self {
            SchemeKind::Baseline | SchemeKind::XorCoset | SchemeKind::SixCosets => 512,
            SchemeKind::FourCosets | SchemeKind::ThreeCosets => 512,
            SchemeKind::Fnw => 128,
            SchemeKind::RestrictedLine | SchemeKind::Wlcrc | SchemeKind::WlcrcMultiObjective => 16,
            SchemeKind::Wlc4Cosets | SchemeKind::Wlc3Cosets => 32,
        }
    }

    pub fn valid_granularities(self) -> &'static [u32] {
        match self {
            SchemeKind::Baseline | SchemeKind::XorCoset => &[512],
            SchemeKind::Fnw => &[64, 128, 256, 512],
            SchemeKind::SixCosets | SchemeKind::FourCosets | SchemeKind::ThreeCosets | SchemeKind::RestrictedLine => {
                &[8, 16, 32, 64, 128, 256, 512]
            }
            _ => &[8, 16, 32, 64],
        }
    }

    /// The compression depth each WLC scheme uses at granularity `g`: enough
    /// reclaimed bits for one group bit plus one selection bit per block
    /// (restricted), or two selection bits per block (unrestricted).
    pub fn default_k(self, granularity: u32) -> Option<u8> {
        let restricted = matches!(self, SchemeKind::Wlcrc | SchemeKind::WlcrcMultiObjective);
        if !self.is_wlc() {
            return None;
        }
        match (restricted, granularity) {
            (true, 8) => Some(9),
            (true, 16) => Some(6),
            (true, 32) => Some(4),
            (true, 64) => Some(3),
            (false, 8) => Some(17),
            (false, 16) => Some(9),
            (false, 32) => Some(5),
            (false, 64) => Some(3),
            _ => None,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim().to_ascii_lowercase();
        let alias = match s.as_str() {
            "xor-coset" | "xor" => "flipmin",
            "restricted" | "3rcosets" => "3-r-cosets",
            "wlc4" | "wlc-4cosets" => "wlc+4cosets",
            "wlc3" | "wlc-3cosets" => "wlc+3cosets",
            "multiobjective" | "wlcrc-multiobjective" => "wlcrc-mo",
            other => other,
        };
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == alias)
            .ok_or_else(|| CodecError::UnknownScheme(s.to_string()))
    }
}

/// A fully specified scheme. Construct with [`SchemeConfig::new`] or parse a
/// label such as `wlcrc-16` or `6cosets-32`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub kind: SchemeKind,
    pub granularity: u32,
    /// Compression depth for WLC schemes; on `baseline` it only enables
    /// compressibility accounting at that depth.
    pub k: Option<u8>,
    /// Multi-objective threshold `T`; ignored by other schemes.
    pub threshold: f64,
}

impl SchemeConfig {
    pub fn new(kind: SchemeKind, granularity: u32) -> Result<SchemeConfig, CodecError> {
        SchemeConfig { kind, granularity, k: kind.default_k(granularity), threshold: 0.0 }.validated()
    }

    pub fn with_k(self, k: u8) -> Result<SchemeConfig, CodecError> {
        SchemeConfig { k: Some(k), ..self }.validated()
    }

    pub fn with_threshold(self, threshold: f64) -> Result<SchemeConfig, CodecError> {
        SchemeConfig { threshold, ..self }.validated()
    }

    /// Parses `name` or `name-granularity`.
    pub fn parse(label: &str) -> Result<SchemeConfig, CodecError> {
        let label = label.trim();
        if let Some((name, g)) = label.rsplit_once('-') {
            if let Ok(g) = g.parse::<u32>() {
                return SchemeConfig::new(name.parse()?, g);
            }
        }
        let kind: SchemeKind = label.parse()?;
        SchemeConfig::new(kind, kind.default_granularity())
    }

    pub fn validated(mut self) -> Result<SchemeConfig, CodecError> {
        let SchemeConfig { kind, granularity: g, .. } = self;
        if !kind.valid_granularities().contains(&g) {
            return Err(CodecError::BadGranularity { scheme: kind, granularity: g });
        }
        if kind.is_wlc() && self.k.is_none() {
            self.k = kind.default_k(g);
        }
        if !(self.threshold.is_finite() && (0.0..=1.0).contains(&self.threshold)) {
            return Err(CodecError::BadThreshold(self.threshold.to_string()));
        }
        match (kind, self.k) {
            (SchemeKind::Baseline, Some(k)) => {
                WlcConfig::new(k)?;
            }
            (_, Some(_)) if !kind.is_wlc() => return Err(CodecError::KNotApplicable(kind)),
            (_, Some(k)) => {
                let cfg = WlcConfig::new(k)?;
                let layout = WordLayout::new(cfg, g);
                let needed = layout.aux_bits_needed(wlc_cosets::Mode::for_kind(kind).code_bits());
                if needed > cfg.reclaimed_bits() {
                    return Err(CodecError::InsufficientCapacity {
                        scheme: kind,
                        granularity: g,
                        k,
                        needed,
                        available: cfg.reclaimed_bits(),
                    });
                }
            }
            _ => {}
        }
        Ok(self)
    }

    /// Depth at which line compressibility is tracked, if any.
    pub fn wlc(&self) -> Option<WlcConfig> {
        self.k.map(|k| WlcConfig::new(k).expect("validated"))
    }

    pub fn label(&self) -> String {
        match self.kind {
            SchemeKind::Baseline | SchemeKind::XorCoset => self.kind.name().to_string(),
            _ => format!("{}-{}", self.kind.name(), self.granularity),
        }
    }
}

impl fmt::Display for SchemeConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for SchemeConfig {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemeConfig::parse(s)
    }
}

/// The candidate committed for one block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Selection {
    /// Data cell indices coded with `candidate`.
    pub cells: Vec<usize>,
    pub candidate: CosetCandidate,
    /// Restricted schemes: 0 for the C1/C2 group, 1 for C1/C3.
    pub group: Option<u8>,
}

/// Encoding decisions recovered from a stored line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SideInfo {
    /// Baseline, or a WLC line stored raw.
    Plain,
    /// Per-block complement flags.
    Flips(Vec<bool>),
    MaskIndex(usize),
    Blocks(Vec<Selection>),
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
enum Engine {
    Baseline,
    Fnw(plain::Fnw),
    Xor(plain::XorCoset),
    Table(cosets::TableCosets),
    Restricted(cosets::RestrictedLine),
    Wlc(wlc_cosets::WlcCosets),
}

/// An encoder/decoder for one [`SchemeConfig`].
#[derive(Clone, Debug)]
pub struct Codec {
    config: SchemeConfig,
    engine: Engine,
}

impl Codec {
    pub fn new(config: SchemeConfig) -> Result<Codec, CodecError> {
        let config = config.validated()?;
        let g = config.granularity;
        let engine = match config.kind {
            SchemeKind::Baseline => Engine::Baseline,
            SchemeKind::Fnw => Engine::Fnw(plain::Fnw::new(g)),
            SchemeKind::XorCoset => Engine::Xor(plain::XorCoset::new(default_xor_masks())),
            SchemeKind::SixCosets => Engine::Table(cosets::TableCosets::new(CandidateTable::six_cosets(), g)),
            SchemeKind::FourCosets => Engine::Table(cosets::TableCosets::new(CandidateTable::four_cosets(), g)),
            SchemeKind::ThreeCosets => Engine::Table(cosets::TableCosets::new(CandidateTable::three_cosets(), g)),
            SchemeKind::RestrictedLine => Engine::Restricted(cosets::RestrictedLine::new(g)),
            kind => Engine::Wlc(wlc_cosets::WlcCosets::new(
                wlc_cosets::Mode::for_kind(kind),
                config.wlc().expect("WLC schemes carry k"),
                g,
                config.threshold,
            )),
        };
        Ok(Codec { config, engine })
    }

    /// A FlipMin-style codec with a caller-supplied mask set.
    pub fn with_xor_masks(masks: Vec<MemoryLine>) -> Result<Codec, CodecError> {
        let masks: [MemoryLine; XOR_MASK_COUNT] = masks
            .try_into()
            .map_err(|m: Vec<MemoryLine>| CodecError::MaskCount { expected: XOR_MASK_COUNT, got: m.len() })?;
        Ok(Codec {
            config: SchemeConfig::new(SchemeKind::XorCoset, 512)?,
            engine: Engine::Xor(plain::XorCoset::new(masks)),
        })
    }

    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn shape(&self) -> Shape {
        let aux = match &self.engine {
            Engine::Baseline | Engine::Wlc(_) => 0,
            Engine::Fnw(f) => f.aux_cells(),
            Engine::Xor(_) => plain::XOR_AUX_CELLS,
            Engine::Table(t) => t.aux_cells(),
            Engine::Restricted(r) => r.aux_cells(),
        };
        Shape { data: CELLS_PER_LINE, aux, flag: matches!(self.engine, Engine::Wlc(_)) }
    }

    /// State of a never-written line: every cell S1. It decodes to the
    /// all-zero line under every scheme.
    pub fn initial(&self) -> EncodedLine {
        let line = EncodedLine::reset(self.shape());
        match &self.engine {
            Engine::Wlc(w) => line.with_embedded_aux(w.layout().fixed_cells().len() as u8),
            _ => line,
        }
    }

    pub fn encode(&self, new: &MemoryLine, old: &EncodedLine, model: &EnergyModel) -> Result<EncodedLine, CodecError> {
        let expected = self.shape();
        if old.shape() != expected {
            return Err(CodecError::ShapeMismatch { expected, got: old.shape() });
        }
        Ok(match &self.engine {
            Engine::Baseline => plain::encode_baseline(new),
            Engine::Fnw(f) => f.encode(new, old, model),
            Engine::Xor(x) => x.encode(new, old, model),
            Engine::Table(t) => t.encode(new, old, model),
            Engine::Restricted(r) => r.encode(new, old, model),
            Engine::Wlc(w) => w.encode(new, old, model),
        })
    }

    pub fn decode(&self, enc: &EncodedLine) -> Result<MemoryLine, CodecError> {
        let expected = self.shape();
        if enc.shape() != expected {
            return Err(CodecError::ShapeMismatch { expected, got: enc.shape() });
        }
        match &self.engine {
            Engine::Baseline => Ok(plain::decode_baseline(enc)),
            Engine::Fnw(f) => Ok(f.decode(enc)),
            Engine::Xor(x) => Ok(x.decode(enc)),
            Engine::Table(t) => t.decode(enc),
            Engine::Restricted(r) => r.decode(enc),
            Engine::Wlc(w) => w.decode(enc),
        }
    }

    /// Recovers the per-block choices recorded in `enc`.
    pub fn side_info(&self, enc: &EncodedLine) -> Result<SideInfo, CodecError> {
        let expected = self.shape();
        if enc.shape() != expected {
            return Err(CodecError::ShapeMismatch { expected, got: enc.shape() });
        }
        match &self.engine {
            Engine::Baseline => Ok(SideInfo::Plain),
            Engine::Fnw(f) => Ok(SideInfo::Flips(f.flips(enc.aux()))),
            Engine::Xor(_) => Ok(SideInfo::MaskIndex(plain::XorCoset::index(enc.aux()))),
            Engine::Table(t) => t.selections(enc).map(SideInfo::Blocks),
            Engine::Restricted(r) => r.selections(enc).map(SideInfo::Blocks),
            Engine::Wlc(w) => w.side_info(enc),
        }
    }

    /// Whether `enc` is stored compressed; `None` for schemes without a flag.
    pub fn is_compressed(&self, enc: &EncodedLine) -> Option<bool> {
        enc.flag().map(|f| f == wlc_cosets::FLAG_COMPRESSED)
    }

    /// The word layout of a WLC scheme.
    pub fn word_layout(&self) -> Option<&WordLayout> {
        match &self.engine {
            Engine::Wlc(w) => Some(w.layout()),
            _ => None,
        }
    }

    /// Masks of a FlipMin-style codec.
    pub fn xor_masks(&self) -> Option<&[MemoryLine; XOR_MASK_COUNT]> {
        match &self.engine {
            Engine::Xor(x) => Some(x.masks()),
            _ => None,
        }
    }
}

/// Encodes with a one-off codec for `cfg`.
pub fn encode(
    new: &MemoryLine,
    old: &EncodedLine,
    cfg: &SchemeConfig,
    model: &EnergyModel,
) -> Result<EncodedLine, CodecError> {
    Codec::new(*cfg)?.encode(new, old, model)
}

/// Decodes with a one-off codec for `cfg`.
pub fn decode(enc: &EncodedLine, cfg: &SchemeConfig) -> Result<MemoryLine, CodecError> {
    Codec::new(*cfg)?.decode(enc)
}

/// Exhaustive search over `candidates` for the cheapest way to write
/// `symbols` over `old`. Returns the index of the cheapest candidate (lowest
/// index on ties) and its cost.
///
/// Test oracle; deliberately evaluates every candidate with
/// [`cell_write_energy`] rather than the codecs' lookup tables.
pub fn brute_force_best(
    symbols: &[Symbol],
    old: &[CellState],
    candidates: &[CosetCandidate],
    model: &EnergyModel,
) -> (usize, Energy) {
    assert!(symbols.len() <= 32, "oracle blocks hold at most 32 symbols");
    assert_eq!(symbols.len(), old.len());
    assert!(!candidates.is_empty());
    let mut best = (0, Energy::ZERO);
    for (i, cand) in candidates.iter().enumerate() {
        let mut cost = Energy::ZERO;
        for (&s, &o) in symbols.iter().zip(old) {
            cost += cell_write_energy(o, cand.state_of(s), model);
        }
        if i == 0 || cost < best.1 {
            best = (i, cost);
        }
    }
    best
}

/// Writes `bits` two per cell, most significant first, under the default
/// mapping. An odd final bit is padded with a zero.
pub(crate) fn pack_bits(bits: &[bool], out: &mut Vec<CellState>) {
    for pair in bits.chunks(2) {
        let hi = pair[0] as u8;
        let lo = pair.get(1).copied().unwrap_or(false) as u8;
        out.push(default_map(Symbol::new(hi << 1 | lo).expect("2-bit")));
    }
}

/// Inverse of [`pack_bits`]; the second value is the padding bit, if any.
pub(crate) fn unpack_bits(cells: &[CellState], n: usize) -> (Vec<bool>, bool) {
    let mut bits = Vec::with_capacity(cells.len() * 2);
    for &c in cells {
        let s = default_unmap(c).bits();
        bits.extend([s & 0b10 != 0, s & 0b01 != 0]);
    }
    let pad = bits.len() > n && bits[n];
    bits.truncate(n);
    (bits, pad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{c1, table_candidate};
    use CellState::*;

    #[test]
    fn labels_parse_back() {
        for kind in SchemeKind::ALL {
            for &g in kind.valid_granularities() {
                let cfg = SchemeConfig::new(kind, g).unwrap();
                assert_eq!(SchemeConfig::parse(&cfg.label()).unwrap(), cfg, "{}", cfg.label());
            }
        }
        assert_eq!(SchemeConfig::parse("wlcrc").unwrap(), SchemeConfig::new(SchemeKind::Wlcrc, 16).unwrap());
        assert_eq!(SchemeConfig::parse("WLC+4cosets").unwrap().granularity, 32);
        assert!(matches!(SchemeConfig::parse("nope"), Err(CodecError::UnknownScheme(_))));
        assert!(matches!(SchemeConfig::parse("wlcrc-128"), Err(CodecError::BadGranularity { .. })));
    }

    #[test]
    fn default_k_per_scheme() {
        let k = |kind: SchemeKind, g| SchemeConfig::new(kind, g).unwrap().k.unwrap();
        assert_eq!([8, 16, 32, 64].map(|g| k(SchemeKind::Wlcrc, g)), [9, 6, 4, 3]);
        assert_eq!([8, 16, 32, 64].map(|g| k(SchemeKind::Wlc4Cosets, g)), [17, 9, 5, 3]);
    }

    #[test]
    fn k_validation() {
        let wlcrc16 = SchemeConfig::new(SchemeKind::Wlcrc, 16).unwrap();
        assert!(matches!(wlcrc16.with_k(5), Err(CodecError::InsufficientCapacity { needed: 5, available: 4, .. })));
        assert!(wlcrc16.with_k(7).is_ok());
        let six = SchemeConfig::new(SchemeKind::SixCosets, 64).unwrap();
        assert_eq!(six.with_k(6), Err(CodecError::KNotApplicable(SchemeKind::SixCosets)));
        let base = SchemeConfig::new(SchemeKind::Baseline, 512).unwrap();
        assert_eq!(base.with_k(7).unwrap().k, Some(7));
        assert!(base.with_k(30).is_err());
        assert!(matches!(wlcrc16.with_threshold(1.5), Err(CodecError::BadThreshold(_))));
    }

    #[test]
    fn brute_force_examples() {
        let m = EnergyModel::default();
        let ones = [Symbol::S11; 4];
        assert_eq!(brute_force_best(&ones, &[S1; 4], &[table_candidate(3)], &m).0, 0);
        let table = CandidateTable::four_cosets();
        assert_eq!(brute_force_best(&ones, &[S1; 4], table.candidates(), &m), (1, Energy::ZERO));
        let (i, cost) = brute_force_best(&[Symbol::S10], &[S3], &[c1()], &m);
        assert_eq!((i, cost), (0, Energy::from_pj(56)));
    }

    #[test]
    fn bit_packing() {
        let mut cells = Vec::new();
        pack_bits(&[true, false, true], &mut cells);
        assert_eq!(cells, vec![S2, S2]);
        assert_eq!(unpack_bits(&cells, 3), (vec![true, false, true], false));
        assert_eq!(unpack_bits(&[S3], 1), (vec![true], true));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let m = EnergyModel::default();
        let codec = Codec::new(SchemeConfig::parse("wlcrc-16").unwrap()).unwrap();
        let wrong = EncodedLine::reset(Shape { data: 256, aux: 0, flag: false });
        assert!(matches!(codec.encode(&MemoryLine::ZERO, &wrong, &m), Err(CodecError::ShapeMismatch { .. })));
        assert!(matches!(codec.decode(&wrong), Err(CodecError::ShapeMismatch { .. })));
    }

    #[test]
    fn initial_state_decodes_to_zero_everywhere() {
        for kind in SchemeKind::ALL {
            for &g in kind.valid_granularities() {
                let codec = Codec::new(SchemeConfig::new(kind, g).unwrap()).unwrap();
                let init = codec.initial();
                assert!(init.cells().iter().all(|&c| c == S1));
                assert_eq!(codec.decode(&init).unwrap(), MemoryLine::ZERO, "{}", codec.config());
            }
        }
    }
}
