mod common;

use common::*;
use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sparse_ldp::empirical::component_measure;
use sparse_ldp::graph::MarkedGraph;
use sparse_ldp::measure::*;
use sparse_ldp::mtp::{mtp_check, mtp_violation, RootedGraphMeasure};
use sparse_ldp::tree::*;
use sparse_ldp::ExtReal;
use std::collections::HashMap;

fn star(root: u32, leaves: &[(u32, u32, u32)]) -> CanonicalTree {
    CanonicalTree::new(
        root,
        leaves
            .iter()
            .map(|&(x, yc, yr)| Child::new(yc, yr, CanonicalTree::leaf(x)))
            .collect(),
    )
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn entropy_examples() {
    assert!(close(entropy([0.5, 0.5]), 2f64.ln(), 1e-15));
    assert_eq!(entropy([1.0, 0.0]), 0.0);
    let direct = -(0.25f64 * 0.25f64.ln() + 0.75 * 0.75f64.ln());
    assert!(close(entropy([0.25, 0.75]), direct, 1e-15));
    assert!(close(direct, 0.5623351446188083, 1e-15));
}

#[test]
fn relative_entropy_examples() {
    let m: IndexMap<u32, f64> = [(0, 0.75), (1, 0.25)].into_iter().collect();
    let base: IndexMap<u32, f64> = [(0, 0.5), (1, 0.5)].into_iter().collect();
    assert_eq!(relative_entropy(&m, &m), ExtReal::Finite(0.0));
    let expect = 0.75 * 1.5f64.ln() + 0.25 * 0.5f64.ln();
    assert!(close(relative_entropy(&m, &base).to_f64(), expect, 1e-15));
    assert!(close(expect, 0.130812036, 1e-9));
    let narrow: IndexMap<u32, f64> = [(0, 1.0)].into_iter().collect();
    assert_eq!(relative_entropy(&m, &narrow), ExtReal::PosInf);
    assert_eq!(relative_entropy(&narrow, &m).to_f64(), 0.75f64.recip().ln());
}

#[test]
fn size_bias_examples() {
    let k = star(0, &[(0, 0, 0); 3]);
    let sb = size_bias(&TreeMeasure::point_mass(k.clone())).unwrap();
    assert!(close(sb.weight(&k), 1.0, 1e-15));

    let s1 = star(0, &[(0, 0, 0)]);
    let mut rho = TreeMeasure::new(1);
    rho.add(s1.clone(), 0.5);
    rho.add(k.clone(), 0.5);
    let sb = size_bias(&rho).unwrap();
    assert!(close(sb.weight(&s1), 0.25, 1e-15));
    assert!(close(sb.weight(&k), 0.75, 1e-15));

    let mut rho = TreeMeasure::new(1);
    rho.add(CanonicalTree::leaf(0), 0.5);
    rho.add(s1.clone(), 0.5);
    let sb = size_bias(&rho).unwrap();
    assert_eq!(sb.weight(&CanonicalTree::leaf(0)), 0.0);
    assert!(close(sb.total_mass(), 1.0, 1e-15));

    let iso = TreeMeasure::point_mass(CanonicalTree::leaf(0));
    assert!(matches!(size_bias(&iso), Err(sparse_ldp::Error::DegenerateSizeBias)));
}

#[test]
fn size_bias_reweights_expectations() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let g = random_forest(12, 2, 2, &mut rng);
        let rho = component_measure(&g, 2);
        if rho.mean_degree() == 0.0 {
            continue;
        }
        let sb = size_bias(&rho).unwrap();
        let salt: u64 = rng.random();
        let f = |t: &CanonicalTree| ((t.hash64() ^ salt) % 1000) as f64 / 1000.0;
        let lhs: f64 = sb.atoms().iter().map(|(t, w)| w * f(t)).sum();
        let rhs: f64 = rho.atoms().iter().map(|(t, w)| w * t.degree() as f64 * f(t)).sum::<f64>()
            / rho.mean_degree();
        assert!(close(lhs, rhs, 1e-12));
    }
}

/// Depth-1 law of i.i.d.-marked trees with root degree law `alpha`, summed
/// over ordered child sequences (no multiplicity bookkeeping).
fn eta1_by_sequences(alpha: &[f64], nu: &[f64], xibar: &[Vec<f64>]) -> TreeMeasure {
    let mut out = TreeMeasure::new(1);
    let mut types = Vec::new();
    for (x, &px) in nu.iter().enumerate() {
        for (yc, row) in xibar.iter().enumerate() {
            for (yr, &py) in row.iter().enumerate() {
                types.push((x as u32, yc as u32, yr as u32, px * py));
            }
        }
    }
    for (d, &pd) in alpha.iter().enumerate() {
        if pd == 0.0 {
            continue;
        }
        for (xo, &po) in nu.iter().enumerate() {
            let mut idx = vec![0usize; d];
            loop {
                let mut p = pd * po;
                let mut ch = Vec::new();
                for &i in &idx {
                    let (x, yc, yr, q) = types[i];
                    p *= q;
                    ch.push(Child::new(yc, yr, CanonicalTree::leaf(x)));
                }
                out.add(CanonicalTree::new(xo as u32, ch), p);
                let mut k = 0;
                while k < d {
                    idx[k] += 1;
                    if idx[k] < types.len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
                if k == d {
                    break;
                }
            }
        }
    }
    out
}

#[test]
fn pair_measure_of_iid_depth_one_is_a_product() {
    let nu = [0.3, 0.7];
    let xi = [[0.1, 0.4], [0.2, 0.3]];
    let xibar: Vec<Vec<f64>> =
        (0..2).map(|a| (0..2).map(|b| 0.5 * (xi[a][b] + xi[b][a])).collect()).collect();
    let eta = eta1_by_sequences(&[0.0, 0.5, 0.0, 0.5], &nu, &xibar);
    assert!(close(eta.total_mass(), 1.0, 1e-12));
    assert!(close(eta.mean_degree(), 2.0, 1e-12));
    let pi = pair_measure(&eta, 1).unwrap();
    for x in 0..2u32 {
        for xp in 0..2u32 {
            for y in 0..2u32 {
                for yp in 0..2u32 {
                    let a = HalfEdgeTree::new(CanonicalTree::leaf(x), y);
                    let b = HalfEdgeTree::new(CanonicalTree::leaf(xp), yp);
                    let expect = nu[x as usize] * nu[xp as usize] * xibar[y as usize][yp as usize];
                    assert!(close(pi.weight(&a, &b), expect, 1e-12));
                }
            }
        }
    }
    let (ok, asym) = pi.is_admissible(1e-9);
    assert!(ok && asym < 1e-12);
    let m = pair_marginals(&pi);
    for x in 0..2u32 {
        for y in 0..2u32 {
            let a = HalfEdgeTree::new(CanonicalTree::leaf(x), y);
            let expect = nu[x as usize] * xibar[y as usize].iter().sum::<f64>();
            assert!(close(m.first[&a], expect, 1e-12));
        }
    }
}

#[test]
fn pair_measure_of_star_is_a_point_mass() {
    let k = star(0, &[(0, 0, 0); 3]);
    let pi = pair_measure(&TreeMeasure::point_mass(k), 1).unwrap();
    assert_eq!(pi.atoms().len(), 1);
    let (a, b) = pi.atoms().keys().next().unwrap();
    assert_eq!(*a, HalfEdgeTree::new(CanonicalTree::leaf(0), 0));
    assert_eq!(b.tree, star(0, &[(0, 0, 0); 2]).truncate(0));
}

#[test]
fn pair_measure_matches_labeling_law_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..30 {
        let g = random_forest(10, 2, 2, &mut rng);
        for h in 1..=3 {
            let rho = component_measure(&g, h);
            if rho.mean_degree() == 0.0 {
                continue;
            }
            let pi = pair_measure(&rho, h).unwrap();
            let oracle = labeling_law(&rho, h);
            assert_eq!(pi.atoms().len(), oracle.len());
            for ((a, b), w) in pi.atoms() {
                let key = (half_edge_string(a), half_edge_string(b));
                assert!(close(*w, oracle[&key], 1e-12), "h={h}");
            }
        }
    }
}

#[test]
fn pair_measure_matches_monte_carlo_labeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = star(0, &[(1, 0, 1), (0, 1, 1)]);
    let b = star(1, &[(1, 0, 0), (1, 0, 0), (0, 1, 0)]);
    let mut rho = TreeMeasure::new(1);
    rho.add(a, 0.6);
    rho.add(b, 0.4);
    let sb = size_bias(&rho).unwrap();
    let pi = pair_measure(&rho, 1).unwrap();
    let draws = 20_000;
    let mut counts: HashMap<(HalfEdgeTree, HalfEdgeTree), usize> = HashMap::new();
    let atoms: Vec<_> = sb.atoms().iter().map(|(t, w)| (t.clone(), *w)).collect();
    for _ in 0..draws {
        let mut u: f64 = rng.random();
        let mut pick = &atoms[0].0;
        for (t, w) in &atoms {
            if u < *w {
                pick = t;
                break;
            }
            u -= w;
        }
        let l = random_labeling(pick, &mut rng);
        let c = l.vertices[0].children[0];
        let cv = &l.vertices[c];
        let branch = HalfEdgeTree::new(l.subtree(c), cv.y_up);
        let i = pick.children().iter().position(|ch| {
            ch.tree == branch.tree && ch.ym_child == cv.y_up && ch.ym_root == cv.y_down
        });
        let (_, rest) = pick.split_at_child(i.unwrap()).unwrap();
        *counts.entry((branch, rest.truncate(0))).or_insert(0) += 1;
    }
    for ((x, y), w) in pi.atoms() {
        let f = *counts.get(&(x.clone(), y.clone())).unwrap_or(&0) as f64 / draws as f64;
        assert!(within_sigma(f, *w, draws as f64, 3.0));
    }
}

#[test]
fn admissibility_of_forests_and_asymmetric_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let g = random_forest(12, 2, 2, &mut rng);
        for h in 1..=3 {
            let rho = component_measure(&g, h);
            if rho.mean_degree() == 0.0 {
                continue;
            }
            let (ok, asym) = pair_measure(&rho, h).unwrap().is_admissible(1e-9);
            assert!(ok, "asymmetry {asym}");
        }
    }
    let a = HalfEdgeTree::new(CanonicalTree::leaf(0), 0);
    let b = HalfEdgeTree::new(CanonicalTree::leaf(1), 0);
    let p = PairMeasure::from_atoms([((a.clone(), b.clone()), 0.7), ((b, a), 0.3)]);
    let (ok, asym) = p.is_admissible(1e-9);
    assert!(!ok);
    assert!(close(asym, 0.4, 1e-15));
}

#[test]
fn marginals_of_product_and_disintegration() {
    let q = [0.2, 0.5, 0.3];
    let h = |x: u32| HalfEdgeTree::new(CanonicalTree::leaf(x), 0);
    let mut atoms = Vec::new();
    for a in 0..3u32 {
        for b in 0..3u32 {
            atoms.push(((h(a), h(b)), q[a as usize] * q[b as usize]));
        }
    }
    let p = PairMeasure::from_atoms(atoms);
    let m = pair_marginals(&p);
    for a in 0..3u32 {
        for b in 0..3u32 {
            assert!(close(m.conditional(&p, &h(a), &h(b)).unwrap(), q[a as usize], 1e-15));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let p = random_pair_measure(&mut rng);
        let m = pair_marginals(&p);
        assert!(close(m.first.values().sum::<f64>(), 1.0, 1e-12));
        assert!(close(m.second.values().sum::<f64>(), 1.0, 1e-12));
        for ((a, b), w) in p.atoms() {
            let c = m.conditional(&p, a, b).unwrap();
            assert!(close(m.second[b] * c, *w, 1e-15));
        }
    }
}

fn random_pair_measure<R: Rng>(rng: &mut R) -> PairMeasure {
    let h = |x: u32| HalfEdgeTree::new(CanonicalTree::leaf(x), 0);
    let mut atoms = Vec::new();
    let mut total = 0.0;
    for a in 0..3u32 {
        for b in 0..3u32 {
            let w: f64 = rng.random::<f64>() + 0.01;
            total += w;
            atoms.push(((h(a), h(b)), w));
        }
    }
    PairMeasure::from_atoms(atoms.into_iter().map(|(k, w)| (k, w / total)))
}

#[test]
fn relative_entropy_chain_rule() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let p = random_pair_measure(&mut rng);
        let q = random_pair_measure(&mut rng);
        let (mp, mq) = (pair_marginals(&p), pair_marginals(&q));
        let joint = relative_entropy(p.atoms(), q.atoms()).to_f64();
        let mut rhs = relative_entropy(&mp.second, &mq.second).to_f64();
        for (b, wb) in &mp.second {
            let cp: IndexMap<_, _> = p
                .atoms()
                .iter()
                .filter(|((_, bb), _)| bb == b)
                .map(|((a, _), w)| (a.clone(), w / wb))
                .collect();
            let cq: IndexMap<_, _> = q
                .atoms()
                .iter()
                .filter(|((_, bb), _)| bb == b)
                .map(|((a, _), w)| (a.clone(), w / mq.second[b]))
                .collect();
            rhs += wb * relative_entropy(&cp, &cq).to_f64();
        }
        assert!(close(joint, rhs, 1e-9));
        assert!(joint >= 0.0);
    }
}

#[test]
fn degree_law_examples() {
    let k = star(0, &[(0, 0, 0); 3]);
    let rho = TreeMeasure::point_mass(k);
    assert_eq!(rho.degree_law().probs(), &[0.0, 0.0, 0.0, 1.0]);
    assert_eq!(rho.mean_degree(), 3.0);
    let path = MarkedGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
    let rho = component_measure(&path, 1);
    let law = rho.degree_law();
    assert!(close(law.prob(1), 2.0 / 3.0, 1e-15));
    assert!(close(law.prob(2), 1.0 / 3.0, 1e-15));
    assert!(close(rho.mean_degree(), 4.0 / 3.0, 1e-15));
    assert!(close(law.mean(), 4.0 / 3.0, 1e-15));
}

#[test]
fn mtp_holds_on_forests() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..10 {
        let g = random_forest(8, 2, 2, &mut rng);
        let u = RootedGraphMeasure::uniform(&g);
        let report = mtp_check(&u, 40, &mut rng);
        assert!(report.max_violation <= 1e-9, "{}", report.max_violation);
    }
}

#[test]
fn mtp_detects_a_plain_galton_watson_tree() {
    // Every vertex has two children: the root is not size-biased.
    let mut t = LabeledTree::new_root(0);
    let mut frontier = vec![0];
    for _ in 0..3 {
        let mut next = Vec::new();
        for &v in &frontier {
            next.push(t.add_child(v, 0, 0, 0));
            next.push(t.add_child(v, 0, 0, 0));
        }
        frontier = next;
    }
    let u = RootedGraphMeasure::from_tree_measure(&TreeMeasure::point_mass(canonicalize(&t)));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!(mtp_check(&u, 40, &mut rng).max_violation >= 0.01);
    // Direct two-sided evaluation with f = 1{adjacent and the first root has degree 2}.
    let f = |g: &MarkedGraph, a: usize, b: usize| {
        (g.edge_mark(a, b).is_some() && g.degree(a) == 2) as u8 as f64
    };
    assert_eq!(mtp_violation(&u, &f), 2.0);
}

#[test]
fn mtp_symmetric_function_gives_exact_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = random_graph(10, 0.3, 2, 2, &mut rng);
    let mut weights = RootedGraphMeasure::uniform(&g);
    weights.reweight(|v| 1.0 + v as f64);
    let f = |g: &MarkedGraph, a: usize, b: usize| (g.degree(a) * g.degree(b)) as f64 / 7.0;
    assert_eq!(mtp_violation(&weights, &f), 0.0);
}
