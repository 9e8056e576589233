//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use std::collections::BTreeMap;

use design_certify::designs::random_state;
use design_certify::qmath::{CMat, CVec};
use design_certify::usd::{optimal_measurements, random_povm3, simulate_behavior, NoiseModel, SimulationMode};
use design_certify::{BehaviorTable, Pair, Povm3, State, StateEnsemble};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Minimum-error (Helstrom) measurements: projectors onto the positive and
/// negative eigenspaces of `|psi1><psi1| - |psi2><psi2|`, with the kernel
/// sent to the inconclusive outcome.
pub fn helstrom_measurements(ens: &StateEnsemble) -> BTreeMap<Pair, Povm3> {
    let kets = ens.pure_states().expect("pure ensemble");
    let d = ens.dim();
    Pair::all(ens.len())
        .into_iter()
        .map(|y| {
            let diff = &kets[y.first].projector() - &kets[y.second].projector();
            let eig = diff.herm_eig().unwrap();
            let mut plus = CMat::zeros(d);
            let mut minus = CMat::zeros(d);
            for (l, v) in eig.values.iter().zip(&eig.vectors) {
                if *l > 1e-12 {
                    plus = &plus + &v.projector();
                } else if *l < -1e-12 {
                    minus = &minus + &v.projector();
                }
            }
            let rest = &(&CMat::identity(d) - &plus) - &minus;
            (y, Povm3::new(plus, minus, rest.hermitian_part()).unwrap())
        })
        .collect()
}

/// Random mixture of `rank` Haar-random kets.
pub fn random_mixed_state(d: usize, rank: usize, rng: &mut ChaCha8Rng) -> CMat {
    let weights: Vec<f64> = (0..rank).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut rho = CMat::zeros(d);
    for w in weights {
        rho = &rho + &random_state(d, rng).projector().scale(w / total);
    }
    rho.hermitian_part()
}

/// `N` states in dimension `d`; each is mixed with probability `p_mixed`.
pub fn random_states(n: usize, d: usize, p_mixed: f64, rng: &mut ChaCha8Rng) -> StateEnsemble {
    let states = (0..n)
        .map(|_| {
            if rng.random::<f64>() < p_mixed {
                State::Mixed(random_mixed_state(d, 2, rng))
            } else {
                State::Pure(random_state(d, rng))
            }
        })
        .collect();
    StateEnsemble::new(d, states).unwrap()
}

/// One physically realizable experiment drawn at random.
pub struct Instance {
    pub ens: StateEnsemble,
    pub behavior: BehaviorTable,
    pub gamma: f64,
    pub eta: f64,
    pub t: u32,
}

/// Random ensemble (pure or partly mixed), random or perturbed optimal
/// measurements, random detector noise.
pub fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let d = rng.random_range(2..=4);
    let n = rng.random_range(2..=6);
    let t = rng.random_range(1..=3);
    let p_mixed = if rng.random::<bool>() { 0.0 } else { 0.5 };
    let ens = random_states(n, d, p_mixed, rng);
    let measurements: BTreeMap<Pair, Povm3> = match ens.pure_states() {
        Some(_) if rng.random::<bool>() => {
            // Exact optimal measurements a third of the time, to probe near-tight cases.
            let w: f64 = if rng.random::<f64>() < 1.0 / 3.0 { 0.0 } else { rng.random::<f64>() * 0.3 };
            optimal_measurements(&ens)
                .unwrap()
                .into_iter()
                .map(|(y, m)| (y, m.mix(&random_povm3(d, rng).unwrap(), w).unwrap()))
                .collect()
        }
        _ => Pair::all(n).into_iter().map(|y| (y, random_povm3(d, rng).unwrap())).collect(),
    };
    let gamma = rng.random::<f64>() * 0.2;
    let eta = 0.2 + 0.8 * rng.random::<f64>();
    let behavior = simulate_behavior(&ens, &measurements, NoiseModel::new(gamma, eta).unwrap(), SimulationMode::Exact)
        .unwrap();
    Instance { ens, behavior, gamma, eta, t }
}

/// Random vectors with unconstrained norms, for gradient checks.
pub fn random_vectors(n: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<CVec> {
    (0..n)
        .map(|_| random_state(d, rng).scale((0.5 + rng.random::<f64>()).into()))
        .collect()
}
