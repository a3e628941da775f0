use proptest::prelude::*;

use wlcrc::codec::{Codec, EncodedLine, MemoryLine, SchemeConfig, SchemeKind, SideInfo};
use wlcrc::model::{table_candidate, CellState, Energy, EnergyModel};
use wlcrc::wlc::{line_compressible, WlcConfig};

fn all_configs() -> Vec<SchemeConfig> {
    let mut out = Vec::new();
    for kind in SchemeKind::ALL {
        for &g in kind.valid_granularities() {
            out.push(SchemeConfig::new(kind, g).unwrap());
        }
    }
    out.push(SchemeConfig::parse("wlcrc-mo-16").unwrap().with_threshold(0.01).unwrap());
    out.push(SchemeConfig::parse("wlcrc-mo-32").unwrap().with_threshold(0.5).unwrap());
    out
}

/// Uniform words or sign-extended words of random depth.
fn word() -> impl Strategy<Value = u64> {
    prop_oneof![any::<u64>(), (any::<i64>(), 0u32..64).prop_map(|(v, s)| (v >> s) as u64)]
}

fn line() -> impl Strategy<Value = MemoryLine> {
    prop_oneof![
        any::<[u64; 8]>().prop_map(MemoryLine::from_words),
        prop::array::uniform8(word()).prop_map(MemoryLine::from_words),
        ((any::<i64>(), 9u32..40), any::<[u8; 8]>())
            .prop_map(|((v, s), jitter)| MemoryLine::from_words(jitter.map(|j| ((v >> s) ^ j as i64) as u64))),
    ]
}

fn data_energy(old: &EncodedLine, new: &EncodedLine, cells: &[usize], m: &EnergyModel) -> Energy {
    cells.iter().map(|&c| m.transition(old.data()[c], new.data()[c])).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_every_scheme(prev in line(), mid in line(), new in line()) {
        let m = EnergyModel::default();
        for cfg in all_configs() {
            let codec = Codec::new(cfg).unwrap();
            let s1 = codec.encode(&prev, &codec.initial(), &m).unwrap();
            let s2 = codec.encode(&mid, &s1, &m).unwrap();
            let s3 = codec.encode(&new, &s2, &m).unwrap();
            prop_assert_eq!(codec.decode(&s3).unwrap(), new, "{}", cfg);
            prop_assert_eq!(s3.shape(), codec.shape());
        }
    }

    #[test]
    fn encoding_is_deterministic(prev in line(), new in line()) {
        let m = EnergyModel::default();
        for cfg in all_configs() {
            let a = Codec::new(cfg).unwrap();
            let b = Codec::new(cfg).unwrap();
            let old = a.encode(&prev, &a.initial(), &m).unwrap();
            prop_assert_eq!(a.encode(&new, &old, &m).unwrap(), b.encode(&new, &old, &m).unwrap());
        }
    }

    #[test]
    fn flag_uses_only_cheap_states(lines in prop::collection::vec(line(), 1..8)) {
        let m = EnergyModel::default();
        for kind in [SchemeKind::Wlcrc, SchemeKind::Wlc4Cosets, SchemeKind::Wlc3Cosets, SchemeKind::WlcrcMultiObjective] {
            let codec = Codec::new(SchemeConfig::new(kind, 16).unwrap()).unwrap();
            let mut state = codec.initial();
            for l in &lines {
                state = codec.encode(l, &state, &m).unwrap();
                let flag = state.flag().unwrap();
                prop_assert!(flag == CellState::S1 || flag == CellState::S2);
                let k = codec.config().wlc().unwrap();
                prop_assert_eq!(flag == CellState::S1, line_compressible(l, k));
            }
        }
    }

    /// Unrestricted three-candidate choice <= restricted choice <= C1 alone,
    /// over the coded cells of every compressed word.
    #[test]
    fn restriction_dominance(prev in line(), new_words in prop::array::uniform8((any::<i64>(), 5u32..30))) {
        let m = EnergyModel::default();
        let new = MemoryLine::from_words(new_words.map(|(v, s)| (v >> s) as u64));
        for g in [8, 16, 32, 64] {
            let codec = Codec::new(SchemeConfig::new(SchemeKind::Wlcrc, g).unwrap()).unwrap();
            if !line_compressible(&new, codec.config().wlc().unwrap()) {
                continue;
            }
            let old = codec.encode(&prev, &codec.initial(), &m).unwrap();
            let enc = codec.encode(&new, &old, &m).unwrap();
            let SideInfo::Blocks(sel) = codec.side_info(&enc).unwrap() else { panic!("compressed line") };
            let cands = [1, 2, 3].map(table_candidate);
            for s in &sel {
                let cost = |i: usize| -> Energy {
                    s.cells.iter().map(|&c| m.transition(old.data()[c], cands[i].state_of(new.symbol(c)))).sum()
                };
                let unrestricted = (0..3).map(cost).min().unwrap();
                let committed = data_energy(&old, &enc, &s.cells, &m);
                prop_assert!(unrestricted <= committed);
                prop_assert!(committed <= cost(0));
            }
        }
    }
}

#[test]
fn wlcrc_aux_budgets() {
    for (g, bits, k) in [(8, 8, 9), (16, 5, 6), (32, 3, 4), (64, 2, 3)] {
        let codec = Codec::new(SchemeConfig::new(SchemeKind::Wlcrc, g).unwrap()).unwrap();
        let layout = codec.word_layout().unwrap();
        assert_eq!(layout.wlc().k(), k);
        assert_eq!(1 + layout.blocks().len() as u32, bits, "wlcrc-{g}");
        assert!(bits <= layout.wlc().reclaimed_bits());
    }
}

#[test]
fn initial_state_is_reset_and_zero() {
    for cfg in all_configs() {
        let codec = Codec::new(cfg).unwrap();
        let init = codec.initial();
        assert!(init.cells().iter().all(|&c| c == CellState::S1), "{cfg}");
        assert_eq!(codec.decode(&init).unwrap(), MemoryLine::ZERO, "{cfg}");
    }
}

#[test]
fn encoded_line_dump_round_trips() {
    let m = EnergyModel::default();
    let codec = Codec::new(SchemeConfig::parse("wlcrc-16").unwrap()).unwrap();
    let line = MemoryLine::from_words([1, 2, 3, 4, u64::MAX, 0, 7, 8]);
    let enc = codec.encode(&line, &codec.initial(), &m).unwrap();
    let back = EncodedLine::from_dump(&enc.to_dump()).unwrap();
    assert_eq!(codec.decode(&back).unwrap(), line);
}

#[test]
fn probe_k_does_not_change_baseline_encoding() {
    let m = EnergyModel::default();
    let plain = Codec::new(SchemeConfig::parse("baseline").unwrap()).unwrap();
    let probe = Codec::new(SchemeConfig::parse("baseline").unwrap().with_k(6).unwrap()).unwrap();
    let line = MemoryLine::from_words([5; 8]);
    assert_eq!(plain.encode(&line, &plain.initial(), &m).unwrap(), probe.encode(&line, &probe.initial(), &m).unwrap());
    assert!(line_compressible(&line, WlcConfig::new(6).unwrap()));
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(SchemeConfig::parse("wlcrc-128").is_err());
    assert!(SchemeConfig::parse("fnw-16").is_err());
    assert!(SchemeConfig::parse("nonsense-16").is_err());
    assert!(SchemeConfig::parse("6cosets-16").unwrap().with_k(6).is_err());
    // four blocks need 8 reclaimed bits; k = 6 frees 5
    assert!(SchemeConfig::parse("wlc+4cosets-16").unwrap().with_k(6).is_err());
    assert!(SchemeConfig::parse("wlcrc-mo-16").unwrap().with_threshold(1.5).is_err());
}
