mod common;

use common::*;
use indexmap::IndexMap;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sparse_ldp::empirical::component_measure;
use sparse_ldp::measure::*;
use sparse_ldp::rate::{component_rate, one_step_extension};
use sparse_ldp::samplers::{Ensemble, ModelConfig};
use sparse_ldp::tree::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_form_is_labeling_invariant(seed in any::<u64>(), n in 1usize..14) {
        let mut r = rng(seed);
        let t = canonicalize(&random_labeled_tree(n, 2, 2, &mut r));
        prop_assert_eq!(&canonicalize(&canonical_labeling(&t)), &t);
        prop_assert_eq!(&canonicalize(&random_labeling(&t, &mut r)), &t);
        prop_assert_eq!(t.size() as usize, n);
    }

    #[test]
    fn json_round_trip(seed in any::<u64>(), n in 1usize..12) {
        let mut r = rng(seed);
        let t = canonicalize(&random_labeled_tree(n, 3, 2, &mut r));
        let back: CanonicalTree = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        prop_assert_eq!(&back, &t);
        let g = random_graph(n, 0.3, 2, 2, &mut r);
        let m = component_measure(&g, 2);
        let text = serde_json::to_string(&m).unwrap();
        let back: TreeMeasure = serde_json::from_str(&text).unwrap();
        prop_assert!(back.max_abs_diff(&m) == 0.0);
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }

    #[test]
    fn attach_inverts_split(seed in any::<u64>(), n in 2usize..12) {
        let t = canonicalize(&random_labeled_tree(n, 2, 2, &mut rng(seed)));
        for i in 0..t.degree() {
            let (b, rest) = t.split_at_child(i).unwrap();
            prop_assert_eq!(&attach(&rest, &b), &t);
        }
    }

    #[test]
    fn edge_keys_partition_children(seed in any::<u64>(), n in 1usize..12, h in 1u32..4) {
        let t = canonicalize(&random_labeled_tree(n, 2, 2, &mut rng(seed)));
        let mut keys = Vec::new();
        for i in 0..t.degree() {
            let (b, rest) = t.split_at_child(i).unwrap();
            keys.push((b.truncate(h - 1), rest.truncate(h - 1)));
        }
        keys.sort();
        keys.dedup();
        let total: usize = keys.iter().map(|(a, b)| count_eh(a, b, &t, h)).sum();
        prop_assert_eq!(total, t.degree());
    }

    #[test]
    fn relative_entropy_nonnegative_and_chain_rule(
        p in proptest::collection::vec(0.01f64..1.0, 6),
        q in proptest::collection::vec(0.01f64..1.0, 6),
    ) {
        let (p, q) = (normalized(p), normalized(q));
        let pm: Discrete<(u8, u8)> = (0..6).map(|i| ((i / 3, i % 3), p[i as usize])).collect();
        let qm: Discrete<(u8, u8)> = (0..6).map(|i| ((i / 3, i % 3), q[i as usize])).collect();
        let joint = relative_entropy(&pm, &qm).to_f64();
        prop_assert!(joint >= -1e-15);
        let marg = |m: &Discrete<(u8, u8)>| {
            let mut out: IndexMap<u8, f64> = IndexMap::new();
            for ((a, _), w) in m {
                *out.entry(*a).or_insert(0.0) += w;
            }
            out
        };
        let (p1, q1) = (marg(&pm), marg(&qm));
        let mut chain = relative_entropy(&p1, &q1).to_f64();
        for a in 0..2u8 {
            let pc: Discrete<u8> = (0..3u8).map(|b| (b, pm[&(a, b)] / p1[&a])).collect();
            let qc: Discrete<u8> = (0..3u8).map(|b| (b, qm[&(a, b)] / q1[&a])).collect();
            chain += p1[&a] * relative_entropy(&pc, &qc).to_f64();
        }
        prop_assert!((joint - chain).abs() < 1e-12);
    }

    #[test]
    fn size_bias_identity(seed in any::<u64>(), n in 2usize..14) {
        let g = random_graph(n, 0.3, 2, 2, &mut rng(seed));
        let m = component_measure(&g, 1);
        prop_assume!(m.mean_degree() > 0.0);
        let sb = size_bias(&m).unwrap();
        prop_assert!((sb.total_mass() - 1.0).abs() < 1e-12);
        for (t, w) in m.atoms() {
            prop_assert!((sb.weight(t) - t.degree() as f64 * w / m.mean_degree()).abs() < 1e-15);
        }
    }

    #[test]
    fn forests_are_admissible_and_extensions_preserve_marginals(seed in any::<u64>(), n in 2usize..12) {
        let g = random_forest(n, 2, 2, &mut rng(seed));
        for h in 1..=3 {
            let m = component_measure(&g, h);
            prop_assume!(m.mean_degree() > 0.0);
            prop_assert!(pair_measure(&m, h).unwrap().asymmetry() < 1e-12);
            let star = one_step_extension(&m, h).unwrap();
            prop_assert!((star.total_mass() - 1.0).abs() < 1e-12);
            prop_assert!(star.truncate(h).max_abs_diff(&m) < 1e-15);
        }
    }

    #[test]
    fn component_terms_are_nonnegative(seed in any::<u64>(), n in 2usize..11) {
        let g = random_forest(n, 2, 2, &mut rng(seed));
        let chain = chain_of(&g, 3);
        let cfg = ModelConfig {
            ensemble: Ensemble::Er,
            kappa: 1.5,
            alpha: None,
            m: None,
            nu: vec![0.4, 0.6],
            xi: vec![vec![0.3, 0.2], vec![0.2, 0.3]],
            max_attempts: 0,
        };
        let rep = component_rate(&chain, &cfg).unwrap();
        for t in &rep.terms {
            prop_assert!(t.first.to_f64() >= -1e-12 && t.second.to_f64() >= -1e-12);
        }
        for w in rep.partial_totals.windows(2) {
            prop_assert!(w[1].to_f64() >= w[0].to_f64() - 1e-12);
        }
    }
}
