use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::channel::{batch_simulate, PauliChannel, ScheduleEntry, SpamModel};
use crate::estimate::{AlphaEstimator, AlphaFit, EstimatorConfig, PreparedBank};
use crate::model::{
    compute_constants, generate_model, ConstantOverrides, DenseDistribution, GibbsNoiseModel,
    ModelSpec, Topology,
};
use crate::pauli::{enumerate_local, pauli_count, PauliString};
use crate::rng::{derive, tag};

fn reg(q: &[usize]) -> Region {
    Region::from_qubits(q.iter().copied()).unwrap()
}

fn chain(n: usize, seed: u64) -> GibbsNoiseModel {
    generate_model(&ModelSpec::chain(n, 0.4, 0.4), &mut derive(seed, &[tag::MODEL])).unwrap()
}

fn triangle(seed: u64) -> GibbsNoiseModel {
    let spec = ModelSpec {
        topology: Topology::Explicit {
            hyperedges: vec![vec![0, 1, 2]],
        },
        n: 5,
        r: 3,
        alpha: 0.4,
        beta: 0.4,
    };
    generate_model(&spec, &mut derive(seed, &[tag::MODEL])).unwrap()
}

fn exact(model: &GibbsNoiseModel) -> ExactProvider {
    ExactProvider::new(model).unwrap()
}

/// `nu` by direct summation over the full distribution, one configuration
/// `(R, G, s)` at a time.
fn nu_oracle(dense: &DenseDistribution, u: usize, i: &Region, s: &Region) -> f64 {
    let n = dense.n();
    let strings: Vec<PauliString> = (0..pauli_count(n)).map(|k| PauliString::from_index(n, k)).collect();
    let matches = |p: &PauliString, region: &Region, local: &PauliString| {
        region.iter().enumerate().all(|(j, q)| p.get(q) == local.get(j))
    };
    let prob = |f: &dyn Fn(&PauliString) -> bool| -> f64 {
        strings.iter().filter(|p| f(p)).map(|p| dense.probability(p)).sum()
    };
    let gi = pauli_count(i.len());
    let mut total = 0.0;
    for sc in enumerate_local(s.len()).unwrap() {
        let ps = prob(&|p| matches(p, s, &sc));
        if ps == 0.0 {
            continue;
        }
        for r in 0..4 {
            let rl = PauliString::from_index(1, r);
            let u_reg = reg(&[u]);
            let pr = prob(&|p| matches(p, s, &sc) && matches(p, &u_reg, &rl)) / ps;
            for g in enumerate_local(i.len()).unwrap() {
                let pg = prob(&|p| matches(p, s, &sc) && matches(p, i, &g)) / ps;
                let pj = prob(&|p| matches(p, s, &sc) && matches(p, i, &g) && matches(p, &u_reg, &rl)) / ps;
                total += ps * (pj - pr * pg).abs();
            }
        }
    }
    total / (4 * gi) as f64
}

#[test]
fn conditionals_without_separator_are_marginals() {
    let model = chain(3, 1);
    let dense = model.dense().unwrap();
    let p = exact(&model);
    let table = p.marginal(&reg(&[0, 1])).unwrap();
    let c = conditional_probs(&table, 0, &reg(&[1]), &Region::empty(), &PauliString::identity(0)).unwrap();
    let m0 = dense.marginal(&reg(&[0])).unwrap();
    let m1 = dense.marginal(&reg(&[1])).unwrap();
    let m01 = dense.marginal(&reg(&[0, 1])).unwrap();
    for r in 0..4 {
        for g in 0..4 {
            let pu = PauliString::from_index(1, r);
            let pi = PauliString::from_index(1, g);
            let joint_idx = PauliString::from_ops(&[pu.get(0), pi.get(0)]).index();
            assert!((c.joint[r * 4 + g] - m01[joint_idx]).abs() < 1e-14);
            assert!((c.product[r * 4 + g] - m0[r] * m1[g]).abs() < 1e-14);
        }
    }
    assert!((c.weight - 1.0).abs() < 1e-14);
}

#[test]
fn product_distribution_has_no_correlation() {
    let model = GibbsNoiseModel::product(3, [0.7, 0.1, 0.15, 0.05]).unwrap();
    let p = exact(&model);
    let table = p.marginal(&Region::full(3)).unwrap();
    for sc in enumerate_local(1).unwrap() {
        let c = conditional_probs(&table, 0, &reg(&[2]), &reg(&[1]), &sc).unwrap();
        for (j, q) in c.joint.iter().zip(&c.product) {
            assert!((j - q).abs() < 1e-15);
        }
    }
    assert!(nu_hat(0, &reg(&[1]), &Region::empty(), &p).unwrap() < 1e-10);
}

#[test]
fn chain_end_is_independent_of_far_end_given_middle() {
    let model = chain(3, 2);
    let p = exact(&model);
    let table = p.marginal(&Region::full(3)).unwrap();
    for sc in enumerate_local(1).unwrap() {
        let c = conditional_probs(&table, 0, &reg(&[2]), &reg(&[1]), &sc).unwrap();
        for (j, q) in c.joint.iter().zip(&c.product) {
            assert!((j - q).abs() < 1e-10);
        }
    }
}

#[test]
fn conditionals_reject_bad_inputs() {
    let model = chain(3, 2);
    let p = exact(&model);
    let table = p.marginal(&reg(&[0, 1])).unwrap();
    let none = PauliString::identity(0);
    assert!(matches!(
        conditional_probs(&table, 0, &reg(&[2]), &Region::empty(), &none),
        Err(Error::Dimension { .. })
    ));
    assert!(matches!(
        conditional_probs(&table, 0, &reg(&[0]), &Region::empty(), &none),
        Err(Error::RegionOverlap(_))
    ));
    assert!(matches!(
        nu_hat(0, &reg(&[1]), &reg(&[1]), &p),
        Err(Error::RegionOverlap(_))
    ));
}

#[test]
fn nu_matches_direct_summation() {
    let model = chain(4, 3);
    let dense = model.dense().unwrap();
    let p = exact(&model);
    for (u, i, s) in all_triples(4, 3, 2) {
        let fast = nu_hat(u, &i, &s, &p).unwrap();
        let slow = nu_oracle(&dense, u, &i, &s);
        assert!((fast - slow).abs() < 1e-12, "{u} {i} {s}: {fast} vs {slow}");
    }
}

#[test]
fn nu_marginalizes_larger_tables() {
    let model = chain(4, 4);
    let p = exact(&model);
    let full = p.marginal(&Region::full(4)).unwrap();
    let direct = nu_hat(1, &reg(&[2]), &reg(&[0]), &p).unwrap();
    let via_full = nu_from_table(&full, 1, &reg(&[2]), &reg(&[0])).unwrap();
    assert!((direct - via_full).abs() < 1e-14);
}

#[test]
fn neighbours_exceed_threshold_and_separated_pairs_vanish() {
    let model = chain(3, 5);
    let c = compute_constants(&model, 0.4, 0.4, ConstantOverrides::default());
    let p = exact(&model);
    let near = nu_hat(0, &reg(&[1]), &Region::empty(), &p).unwrap();
    let far = nu_hat(0, &reg(&[2]), &reg(&[1]), &p).unwrap();
    assert!(near > c.tau, "nu = {near}, tau = {}", c.tau);
    assert!(far < 1e-10 && far < c.tau);
}

fn assert_separation_soundness(model: &GibbsNoiseModel) {
    let n = model.n();
    let graph = model.hypergraph().derived_graph();
    let p = exact(model);
    let mut checked = 0;
    for (u, i, s) in all_triples(n, model.hypergraph().r().max(2), n - 2) {
        if graph.separates(&s, &reg(&[u]), &i) {
            let v = nu_hat(u, &i, &s, &p).unwrap();
            assert!(v <= 1e-10, "u={u} I={i} S={s}: {v}");
            checked += 1;
        }
    }
    assert!(checked > 0);
}

#[test]
fn separated_triples_have_zero_nu() {
    assert_separation_soundness(&chain(5, 6));
    assert_separation_soundness(&triangle(7));
    let cycle = generate_model(&ModelSpec::cycle(6, 0.3, 0.5), &mut derive(8, &[tag::MODEL])).unwrap();
    assert_separation_soundness(&cycle);
}

#[test]
fn independent_model_has_empty_neighbourhoods() {
    let model = GibbsNoiseModel::product_depolarizing(4, 0.1).unwrap();
    let p = exact(&model);
    for u in 0..4 {
        assert!(neighborhood_learning(u, 2, 4, 1e-6, &p).unwrap().is_empty());
    }
    let s = learn_graph(&p, 2, 4, 1e-6, Symmetrization::And).unwrap();
    assert!(s.graph.edges().is_empty());
    assert_eq!(s.hyperedge_candidates.len(), 4);
}

fn default_tau(model: &GibbsNoiseModel) -> (f64, u64) {
    let c = compute_constants(model, 0.4, 0.4, ConstantOverrides::default());
    (c.tau, c.l)
}

#[test]
fn chain_neighbourhood_of_interior_site() {
    let model = chain(6, 9);
    let (tau, l) = default_tau(&model);
    let p = exact(&model);
    assert_eq!(neighborhood_learning(2, 2, l, tau, &p).unwrap(), reg(&[1, 3]));
}

#[test]
fn triangle_neighbourhood_with_range_three() {
    let model = triangle(10);
    let (tau, l) = default_tau(&model);
    let p = exact(&model);
    assert_eq!(neighborhood_learning(0, 3, l, tau, &p).unwrap(), reg(&[1, 2]));
    assert!(neighborhood_learning(4, 3, l, tau, &p).unwrap().is_empty());
}

#[test]
fn exact_provider_recovers_eight_site_chain() {
    let model = chain(8, 11);
    let (tau, l) = default_tau(&model);
    let p = exact(&model);
    let s = learn_graph(&p, 2, l, tau, Symmetrization::And).unwrap();
    assert_eq!(s.graph, model.hypergraph().derived_graph());
    assert!(s.warnings.is_empty());
    assert_eq!(s.mode, ProviderMode::Exact);
    for h in &s.hyperedge_candidates {
        assert!(s.graph.is_clique(h) && h.len() <= 2);
    }
}

/// Every score moved by up to `eps` in the direction that hurts: up for
/// pairs that are separated by `S`, down otherwise.
fn adversarial_structure(model: &GibbsNoiseModel, tau: f64, l: u64, eps: f64, jitter: u64) -> LearnedStructure {
    let n = model.n();
    let graph = model.hypergraph().derived_graph();
    let p = exact(model);
    let neighborhoods = (0..n)
        .map(|u| {
            neighborhood_learning_with(u, n, 2, l, tau, |i, s| {
                let v = nu_hat(u, i, s, &p)?;
                let separated = graph.separates(s, &reg(&[u]), i);
                let h = (u as u64 * 131 + i.mask() * 17 + s.mask() * 7 + jitter) % 97;
                let scale = eps * (0.5 + 0.5 * h as f64 / 96.0);
                Ok(if separated { v + scale } else { (v - scale).max(0.0) })
            })
        })
        .collect::<Result<Vec<_>>>()
        .unwrap();
    LearnedStructure::from_neighborhoods(n, 2, neighborhoods, Symmetrization::And, tau, l, ProviderMode::Exact)
        .unwrap()
}

#[test]
fn bounded_perturbations_keep_the_structure() {
    for seed in 0..4 {
        let model = chain(6, 20 + seed);
        let (tau, l) = default_tau(&model);
        let s = adversarial_structure(&model, tau, l, 0.999 * tau / 2.0, seed);
        assert_eq!(s.graph, model.hypergraph().derived_graph(), "seed {seed}");
    }
    let cycle = generate_model(&ModelSpec::cycle(6, 0.4, 0.4), &mut derive(30, &[tag::MODEL])).unwrap();
    let (tau, l) = default_tau(&cycle);
    let s = adversarial_structure(&cycle, tau, l, 0.999 * tau / 2.0, 1);
    assert_eq!(s.graph, cycle.hypergraph().derived_graph());
}

#[test]
fn grown_neighbourhood_respects_cap_and_prune_keeps_true_neighbours() {
    let model = chain(6, 40);
    let graph = model.hypergraph().derived_graph();
    let p = exact(&model);
    let mut grow_calls = 0usize;
    let mut last_size = 0usize;
    let s = neighborhood_learning_with(2, 6, 2, 1, 1e-9, |i, s| {
        grow_calls += 1;
        last_size = last_size.max(s.len());
        nu_hat(2, i, s, &p)
    })
    .unwrap();
    // With L = 1 the grow phase stops once |S| = 2.
    assert!(last_size <= 2);
    assert!(s.is_subset(&graph.neighbors(2)));
    assert!(grow_calls > 0);
}

fn protocol_for(model: GibbsNoiseModel, shots: u64, seed: u64) -> ProtocolProvider {
    let n = model.n();
    let ch = PauliChannel::from_model(model, None).unwrap();
    let bank = batch_simulate(
        &ch,
        &SpamModel::noiseless(n),
        &[ScheduleEntry { k: 1, shots }],
        seed,
    )
    .unwrap();
    let prepared = PreparedBank::new(&bank, 24).unwrap();
    let config = EstimatorConfig {
        groups: 24,
        fit: AlphaFit::FirstPoint,
    };
    ProtocolProvider::new(Arc::new(AlphaEstimator::new(prepared, config)))
}

#[test]
fn zero_potentials_give_only_noise() {
    let model = chain(3, 50).scaled(0.0);
    let p = exact(&model);
    for (u, i, s) in all_triples(3, 2, 1) {
        assert!(nu_hat(u, &i, &s, &p).unwrap() < 1e-15);
    }
    let shots = 200_000;
    let proto = protocol_for(model, shots, 51);
    // Each marginal entry is off by O(3^(m/2) / sqrt(N)) / 4^m; nu sums 4^m of them.
    let noise = 27f64.sqrt() / (shots as f64).sqrt();
    for (u, i, s) in all_triples(3, 2, 1) {
        let v = nu_hat(u, &i, &s, &proto).unwrap();
        assert!(v < 5.0 * noise, "{u} {i} {s}: {v}");
    }
}

#[test]
fn accuracy_check_against_itself_and_with_zero_tolerance() {
    let model = chain(4, 60);
    let p = exact(&model);
    let other = exact(&model);
    let rep = nu_accuracy_check(&p, &other, 2, 2, 0.0, None).unwrap();
    assert_eq!(rep.max_deviation, 0.0);
    assert!(rep.holds());
    assert_eq!(rep.checked, all_triples(4, 2, 2).len());

    let proto = protocol_for(model, 20_000, 61);
    let rep = nu_accuracy_check(&proto, &p, 2, 2, 0.0, None).unwrap();
    assert!(!rep.holds());
    assert_eq!(rep.violations.len(), rep.checked);
    assert!(rep.max_deviation > 0.0);
    let worst = rep.worst.as_ref().unwrap();
    assert_eq!(worst.deviation(), rep.max_deviation);

    let mut rng = derive(3, &[]);
    let sampled = nu_accuracy_check(&proto, &p, 2, 2, 1.0, Some((10, &mut rng))).unwrap();
    assert_eq!(sampled.checked, 10);
    assert!(sampled.holds());
}

#[test]
fn protocol_provider_caches_regions() {
    let proto = protocol_for(chain(3, 70), 5_000, 71);
    let a = proto.marginal(&reg(&[0, 1])).unwrap();
    let b = proto.marginal(&reg(&[0, 1])).unwrap();
    assert!(Arc::ptr_eq(&a, &b));
    assert_eq!(proto.cached_regions(), 1);
    assert_eq!(proto.mode(), ProviderMode::Protocol);
    assert!((a.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert!(a.probs().iter().all(|&v| v >= a.floor()));
}

#[test]
fn symmetrization_and_warnings() {
    let nbs = vec![reg(&[1]), reg(&[0, 2]), Region::empty()];
    let and = LearnedStructure::from_neighborhoods(3, 2, nbs.clone(), Symmetrization::And, 0.1, 3, ProviderMode::Exact)
        .unwrap();
    assert_eq!(and.graph.edges(), vec![(0, 1)]);
    assert_eq!(and.warnings.len(), 1);
    let or = LearnedStructure::from_neighborhoods(3, 2, nbs, Symmetrization::Or, 0.1, 3, ProviderMode::Exact)
        .unwrap();
    assert_eq!(or.graph.edges(), vec![(0, 1), (1, 2)]);
    assert_eq!(or.warnings.len(), 1);
    assert!(LearnedStructure::from_neighborhoods(2, 2, vec![reg(&[0]), Region::empty()], Symmetrization::And, 0.1, 3, ProviderMode::Exact).is_err());
}

#[test]
fn structure_file_round_trip() {
    let model = triangle(80);
    let (tau, l) = default_tau(&model);
    let s = learn_graph(&exact(&model), 3, l, tau, Symmetrization::And).unwrap();
    assert!(s.hyperedge_candidates.contains(&reg(&[0, 1, 2])));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("structure.json");
    s.save(&path).unwrap();
    assert_eq!(LearnedStructure::load(&path).unwrap(), s);
    let bad = s.to_json().unwrap().replace("\"edges\": [\n    [\n      0,\n      1\n    ],", "\"edges\": [");
    assert!(LearnedStructure::from_json(&bad).is_err());
}

fn positive_table(m: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, pauli_count(m)).prop_map(|v| {
        let t: f64 = v.iter().sum();
        v.into_iter().map(|x| x / t).collect()
    })
}

proptest! {
    #[test]
    fn nu_is_bounded_and_symmetric_for_single_sites(probs in positive_table(3)) {
        let dense = Arc::new(DenseDistribution::from_probs(3, probs).unwrap());
        let p = ExactProvider::from_dense(dense);
        for (u, i, s) in all_triples(3, 2, 1) {
            let v = nu_hat(u, &i, &s, &p).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            let back = nu_hat(i.qubits()[0], &reg(&[u]), &s, &p).unwrap();
            prop_assert!((v - back).abs() < 1e-14);
        }
    }

    #[test]
    fn conditionals_are_distributions(probs in positive_table(3), s in 0usize..4) {
        let table = crate::estimate::MarginalTable::new(Region::full(3), probs, 0.0).unwrap();
        let c = conditional_probs(&table, 1, &reg(&[2]), &reg(&[0]), &PauliString::from_index(1, s)).unwrap();
        prop_assert!((c.joint.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((c.product.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(c.joint.iter().chain(&c.product).all(|&x| (0.0..=1.0).contains(&x)));
    }
}
