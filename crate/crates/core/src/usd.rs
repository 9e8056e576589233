//! Unambiguous discrimination of two pure states, its bounded-error
//! generalization, and simulation of randomised discrimination experiments.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;

use crate::designs::StateEnsemble;
use crate::error::{Error, Result};
use crate::qmath::{born, CMat, CVec};
use crate::tol::TOL;

/// Measurement outcome: name the first state, name the second, or give up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    First,
    Second,
    Inconclusive,
}

impl Outcome {
    pub const ALL: [Outcome; 3] = [Outcome::First, Outcome::Second, Outcome::Inconclusive];

    pub fn index(self) -> usize {
        match self {
            Outcome::First => 0,
            Outcome::Second => 1,
            Outcome::Inconclusive => 2,
        }
    }

    /// Label used in behavior files: `1`, `2` or `perp`.
    pub fn label(self) -> &'static str {
        match self {
            Outcome::First => "1",
            Outcome::Second => "2",
            Outcome::Inconclusive => "perp",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "1" => Some(Outcome::First),
            "2" => Some(Outcome::Second),
            "perp" | "⊥" | "0" => Some(Outcome::Inconclusive),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Unordered input pair `y = (first, second)` with `first < second`, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub first: usize,
    pub second: usize,
}

impl Pair {
    pub fn new(first: usize, second: usize) -> Result<Self> {
        if first >= second {
            return Err(Error::InvalidParameter(format!(
                "pair ({first}, {second}) must satisfy first < second"
            )));
        }
        Ok(Self { first, second })
    }

    /// All `N (N - 1) / 2` pairs in lexicographic order.
    pub fn all(n_states: usize) -> Vec<Pair> {
        (0..n_states)
            .flat_map(|a| (a + 1..n_states).map(move |b| Pair { first: a, second: b }))
            .collect()
    }

    pub fn count(n_states: usize) -> usize {
        n_states * n_states.saturating_sub(1) / 2
    }
}

/// Three-outcome POVM `{M^1, M^2, M^perp}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm3 {
    dim: usize,
    elements: [CMat; 3],
}

impl Povm3 {
    /// Validates positivity of each element and completeness.
    pub fn new(first: CMat, second: CMat, inconclusive: CMat) -> Result<Self> {
        let dim = first.dim();
        for m in [&second, &inconclusive] {
            if m.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.dim(),
                });
            }
        }
        for m in [&first, &second, &inconclusive] {
            m.validate_effect()?;
        }
        let total = &(&first + &second) + &inconclusive;
        let dev = total.max_abs_diff(&CMat::identity(dim));
        if dev > TOL.structural {
            return Err(Error::InvalidPovm(format!(
                "elements sum to identity only within {dev:.3e}"
            )));
        }
        Ok(Self {
            dim,
            elements: [first, second, inconclusive],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn element(&self, b: Outcome) -> &CMat {
        &self.elements[b.index()]
    }

    /// Outcome probabilities `[p(1), p(2), p(perp)]` for state `rho`.
    pub fn probabilities(&self, rho: &CMat) -> Result<[f64; 3]> {
        Ok([
            born(rho, &self.elements[0])?,
            born(rho, &self.elements[1])?,
            born(rho, &self.elements[2])?,
        ])
    }

    /// Convex mixture `(1 - w) self + w other`.
    pub fn mix(&self, other: &Povm3, w: f64) -> Result<Self> {
        let f = |a: &CMat, b: &CMat| &a.scale(1.0 - w) + &b.scale(w);
        Self::new(
            f(&self.elements[0], &other.elements[0]),
            f(&self.elements[1], &other.elements[1]),
            f(&self.elements[2], &other.elements[2]),
        )
    }
}

/// Optimal zero-error measurement for the pure pair `(psi1, psi2)`.
///
/// The construction lives on the span of the two states; the orthogonal
/// complement is assigned to the inconclusive outcome.
pub fn usd_measurement(psi1: &CVec, psi2: &CVec) -> Result<Povm3> {
    let d = psi1.dim();
    if psi2.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: psi2.dim(),
        });
    }
    for psi in [psi1, psi2] {
        if !psi.is_normalized() {
            return Err(Error::InvalidState(format!(
                "squared norm {} differs from 1",
                psi.norm_sqr()
            )));
        }
    }
    let overlap = psi1.dot(psi2);
    let s = overlap.norm().min(1.0);

    let e1 = psi1.clone();
    let second = match orthogonal_component(&e1, psi2) {
        Some(e2) => e2,
        None if d == 1 => {
            return Err(Error::InvalidParameter(
                "parallel states in dimension 1 span no discrimination plane".into(),
            ))
        }
        None => {
            // Parallel states: any unit vector orthogonal to psi1 completes the plane.
            (0..d)
                .filter_map(|k| orthogonal_component(&e1, &CVec::basis(d, k)))
                .next()
                .expect("a basis vector off the line of psi1 exists for d >= 2")
        }
    };
    let span = &e1.projector() + &second.projector();
    let denom = 1.0 + s;
    let m1 = (&span - &psi2.projector()).scale(1.0 / denom).hermitian_part();
    let m2 = (&span - &psi1.projector()).scale(1.0 / denom).hermitian_part();
    let mperp = (&(&CMat::identity(d) - &m1) - &m2).hermitian_part();
    Povm3::new(m1, m2, mperp)
}

/// Unit vector along the part of `v` orthogonal to the unit vector `e`, if any.
fn orthogonal_component(e: &CVec, v: &CVec) -> Option<CVec> {
    let mut w = v.axpy(-e.dot(v), e);
    // Second Gram-Schmidt pass for stability.
    w = w.axpy(-e.dot(&w), e);
    if w.norm() <= 1e-12 {
        return None;
    }
    w.normalized().ok()
}

/// Random three-outcome POVM, `E_b = S^{-1/2} A_b S^{-1/2}` with Wishart `A_b`.
pub fn random_povm3<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<Povm3> {
    let mut wishart = || {
        let g = CMat::from_fn(dim, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        (&g * &g.adjoint()).hermitian_part()
    };
    let a = [wishart(), wishart(), wishart()];
    let total = (&(&a[0] + &a[1]) + &a[2]).hermitian_part();
    let inv_root = total.map_spectrum(|x| 1.0 / x.sqrt())?;
    let conj = |m: &CMat| (&(&inv_root * m) * &inv_root).hermitian_part();
    let e1 = conj(&a[0]);
    let e2 = conj(&a[1]);
    let e3 = (&(&CMat::identity(dim) - &e1) - &e2).hermitian_part();
    Povm3::new(e1, e2, e3)
}

/// Zero-error success rate `1 - s` for overlap modulus `s`.
pub fn usd_optimal_success(s: f64) -> f64 {
    1.0 - s
}

/// Branch point `(1 - sqrt(1 - s^2)) / 2` of the bounded-error optimum.
pub fn epsilon_critical(s: f64) -> f64 {
    0.5 * (1.0 - (1.0 - s * s).max(0.0).sqrt())
}

/// Largest error bound accepted by [`alpha`].
pub const EPSILON_MAX: f64 = 0.5 - 1e-6;

/// `alpha_eps = (1 - eps) / (1 - 2 eps)^2 * (1 + 2 sqrt(eps (1 - eps)))`.
pub fn alpha(eps: f64) -> Result<f64> {
    if !(0.0..=EPSILON_MAX).contains(&eps) {
        return Err(Error::EpsilonOutOfDomain(eps));
    }
    let q = 1.0 - 2.0 * eps;
    Ok((1.0 - eps) / (q * q) * (1.0 + 2.0 * (eps * (1.0 - eps)).sqrt()))
}

/// Optimal success rate when each conclusive outcome may err with rate `<= eps`.
pub fn bounded_error_success(s: f64, eps: f64) -> Result<f64> {
    let a = alpha(eps)?;
    if eps <= epsilon_critical(s) {
        Ok(a * (1.0 - s))
    } else {
        Ok(0.5 * (1.0 + (1.0 - s * s).max(0.0).sqrt()))
    }
}

/// Random-guess rate `gamma` and detection efficiency `eta`.
///
/// Each round the detector fires with probability `eta` (otherwise the device
/// reports `perp`); a fired round is replaced by a uniform guess between `1`
/// and `2` with probability `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    gamma: f64,
    eta: f64,
}

impl NoiseModel {
    pub fn new(gamma: f64, eta: f64) -> Result<Self> {
        for (name, v) in [("gamma", gamma), ("eta", eta)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidParameter(format!("{name} = {v} outside [0, 1]")));
            }
        }
        Ok(Self { gamma, eta })
    }

    pub fn ideal() -> Self {
        Self { gamma: 0.0, eta: 1.0 }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Pushes ideal Born probabilities through the noise channel.
    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        let (g, e) = (self.gamma, self.eta);
        let p1 = e * (0.5 * g + (1.0 - g) * p[0]);
        let p2 = e * (0.5 * g + (1.0 - g) * p[1]);
        [p1, p2, ((1.0 - e) + e * (1.0 - g) * p[2]).max(0.0)]
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::ideal()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulationMode {
    /// Analytic probabilities.
    Exact,
    /// Empirical frequencies from `shots` rounds per `(x, y)` cell.
    Sampled { shots: u64, seed: u64 },
}

/// Conditional distribution `p(b | x, y)` over every state `x` and pair `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorTable {
    n_states: usize,
    dim: usize,
    pairs: Vec<Pair>,
    // Indexed `[pair_index * n_states + x]`.
    probs: Vec<[f64; 3]>,
}

impl BehaviorTable {
    /// Builds a table from per-cell distributions indexed
    /// `[pair_index * n_states + x]`, pairs in [`Pair::all`] order.
    pub fn new(n_states: usize, dim: usize, probs: Vec<[f64; 3]>) -> Result<Self> {
        if n_states < 2 {
            return Err(Error::InvalidParameter(format!(
                "behavior needs N >= 2, got {n_states}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let pairs = Pair::all(n_states);
        if probs.len() != pairs.len() * n_states {
            return Err(Error::Format(format!(
                "expected {} cells, got {}",
                pairs.len() * n_states,
                probs.len()
            )));
        }
        for (i, cell) in probs.iter().enumerate() {
            let y = pairs[i / n_states];
            let x = i % n_states;
            if cell.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                return Err(Error::Format(format!(
                    "probabilities {cell:?} at x={x}, y=({}, {}) outside [0, 1]",
                    y.first, y.second
                )));
            }
            let sum: f64 = cell.iter().sum();
            if (sum - 1.0).abs() > TOL.structural {
                return Err(Error::Format(format!(
                    "probabilities at x={x}, y=({}, {}) sum to {sum}",
                    y.first, y.second
                )));
            }
        }
        Ok(Self {
            n_states,
            dim,
            pairs,
            probs,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    fn pair_index(&self, y: Pair) -> usize {
        let n = self.n_states;
        let a = y.first;
        a * n - a * (a + 1) / 2 + (y.second - a - 1)
    }

    /// `p(b | x, y)`.
    pub fn prob(&self, b: Outcome, x: usize, y: Pair) -> f64 {
        self.cell(x, y)[b.index()]
    }

    /// `[p(1|x,y), p(2|x,y), p(perp|x,y)]`.
    pub fn cell(&self, x: usize, y: Pair) -> [f64; 3] {
        assert!(x < self.n_states && y.second < self.n_states, "index out of range");
        self.probs[self.pair_index(y) * self.n_states + x]
    }

    /// Iterates `(x, y, distribution)` in pair-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, Pair, [f64; 3])> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(i, &p)| (i % self.n_states, self.pairs[i / self.n_states], p))
    }
}

/// Optimal zero-error measurement for every pair of a pure ensemble.
pub fn optimal_measurements(ens: &StateEnsemble) -> Result<BTreeMap<Pair, Povm3>> {
    let kets = ens.pure_states().ok_or_else(|| {
        Error::InvalidEnsemble("optimal discrimination measurements need pure states".into())
    })?;
    Pair::all(ens.len())
        .into_iter()
        .map(|y| Ok((y, usd_measurement(kets[y.first], kets[y.second])?)))
        .collect()
}

/// Derives the random stream for cell `(x, y)` from the run seed.
fn cell_rng(seed: u64, n_states: usize, x: usize, y: Pair) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_states as u64;
    rng.set_stream((x as u64 * n + y.first as u64) * n + y.second as u64);
    rng
}

fn sample_cell(p: [f64; 3], shots: u64, rng: &mut ChaCha8Rng) -> Result<[f64; 3]> {
    if shots == 0 {
        return Err(Error::InvalidParameter("sampled mode needs shots > 0".into()));
    }
    let binomial = |n: u64, q: f64, rng: &mut ChaCha8Rng| -> Result<u64> {
        if n == 0 || q <= 0.0 {
            return Ok(0);
        }
        if q >= 1.0 {
            return Ok(n);
        }
        Binomial::new(n, q)
            .map(|b| b.sample(rng))
            .map_err(|e| Error::InvalidParameter(e.to_string()))
    };
    let n1 = binomial(shots, p[0], rng)?;
    let rest = 1.0 - p[0];
    let q2 = if rest > 0.0 { (p[1] / rest).min(1.0) } else { 0.0 };
    let n2 = binomial(shots - n1, q2, rng)?;
    let n3 = shots - n1 - n2;
    let total = shots as f64;
    Ok([n1 as f64 / total, n2 as f64 / total, n3 as f64 / total])
}

/// Simulates `p(b | x, y)` for the ensemble measured with the given POVMs
/// under the noise model.
pub fn simulate_behavior(
    ens: &StateEnsemble,
    measurements: &BTreeMap<Pair, Povm3>,
    noise: NoiseModel,
    mode: SimulationMode,
) -> Result<BehaviorTable> {
    let n = ens.len();
    let pairs = Pair::all(n);
    for y in &pairs {
        match measurements.get(y) {
            None => return Err(Error::MissingMeasurement(y.first, y.second)),
            Some(m) if m.dim() != ens.dim() => {
                return Err(Error::DimensionMismatch {
                    expected: ens.dim(),
                    found: m.dim(),
                })
            }
            Some(_) => {}
        }
    }
    let densities: Vec<CMat> = ens.states().iter().map(|s| s.density()).collect();
    let cells: Vec<(usize, Pair)> = pairs
        .iter()
        .flat_map(|&y| (0..n).map(move |x| (x, y)))
        .collect();
    let probs = cells
        .par_iter()
        .map(|&(x, y)| {
            let exact = noise.apply(measurements[&y].probabilities(&densities[x])?);
            match mode {
                SimulationMode::Exact => Ok(exact),
                SimulationMode::Sampled { shots, seed } => {
                    sample_cell(exact, shots, &mut cell_rng(seed, n, x, y))
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    BehaviorTable::new(n, ens.dim(), probs)
}

/// Conditional error rates `(q1, q2)` observed for pair `y`.
///
/// A zero denominator means the outcome was never announced and counts as
/// error-free.
pub fn observed_error(behavior: &BehaviorTable, y: Pair) -> (f64, f64) {
    let ratio = |wrong: f64, right: f64| {
        let total = wrong + right;
        if total > 0.0 {
            wrong / total
        } else {
            0.0
        }
    };
    let q1 = ratio(
        behavior.prob(Outcome::First, y.second, y),
        behavior.prob(Outcome::First, y.first, y),
    );
    let q2 = ratio(
        behavior.prob(Outcome::Second, y.first, y),
        behavior.prob(Outcome::Second, y.second, y),
    );
    (q1, q2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{random_state, tetrahedron_sic};
    use crate::qmath::born_pure;

    fn tetra_kets() -> Vec<CVec> {
        tetrahedron_sic().pure_states().unwrap().into_iter().cloned().collect()
    }

    fn success(m: &Povm3, a: &CVec, b: &CVec) -> f64 {
        0.5 * (born_pure(a, m.element(Outcome::First)).unwrap()
            + born_pure(b, m.element(Outcome::Second)).unwrap())
    }

    #[test]
    fn orthogonal_pair_is_perfectly_discriminated() {
        let a = CVec::basis(3, 0);
        let b = CVec::basis(3, 2);
        let m = usd_measurement(&a, &b).unwrap();
        assert!((success(&m, &a, &b) - 1.0).abs() < 1e-12);
        // perp vanishes on the span
        assert!(born_pure(&a, m.element(Outcome::Inconclusive)).unwrap() < 1e-12);
        assert!(born_pure(&b, m.element(Outcome::Inconclusive)).unwrap() < 1e-12);
    }

    #[test]
    fn tetrahedron_pair_success() {
        let k = tetra_kets();
        let m = usd_measurement(&k[0], &k[1]).unwrap();
        let expected = 1.0 - 1.0 / 3f64.sqrt();
        assert!((success(&m, &k[0], &k[1]) - expected).abs() < 1e-9);
        assert!((expected - 0.42265).abs() < 1e-5);
        assert!(born_pure(&k[1], m.element(Outcome::First)).unwrap() < 1e-9);
        assert!(born_pure(&k[0], m.element(Outcome::Second)).unwrap() < 1e-9);
    }

    #[test]
    fn identical_states_give_zero_success() {
        let k = tetra_kets();
        let m = usd_measurement(&k[2], &k[2]).unwrap();
        assert!(success(&m, &k[2], &k[2]).abs() < 1e-12);
        assert!(born_pure(&k[2], m.element(Outcome::First)).unwrap() < 1e-12);
        let phased = k[2].scale(Complex64::from_polar(1.0, 0.7));
        let m = usd_measurement(&k[2], &phased).unwrap();
        assert!(success(&m, &k[2], &phased).abs() < 1e-12);
    }

    #[test]
    fn dimension_one_parallel_states_are_rejected() {
        let a = CVec::basis(1, 0);
        assert!(usd_measurement(&a, &a).is_err());
    }

    #[test]
    fn usd_measurement_rejects_unnormalized_or_mismatched() {
        assert!(usd_measurement(&CVec::from_real(&[1.0, 1.0]), &CVec::basis(2, 0)).is_err());
        assert!(usd_measurement(&CVec::basis(2, 0), &CVec::basis(3, 0)).is_err());
    }

    #[test]
    fn random_pairs_are_unambiguous_and_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in 2..=8 {
            for _ in 0..20 {
                let a = random_state(d, &mut rng);
                let b = random_state(d, &mut rng);
                let m = usd_measurement(&a, &b).unwrap();
                assert!(born_pure(&b, m.element(Outcome::First)).unwrap() <= TOL.structural);
                assert!(born_pure(&a, m.element(Outcome::Second)).unwrap() <= TOL.structural);
                let s = a.dot(&b).norm();
                assert!((success(&m, &a, &b) - usd_optimal_success(s)).abs() <= TOL.structural);
            }
        }
    }

    #[test]
    fn random_povms_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in 1..=5 {
            let m = random_povm3(d, &mut rng).unwrap();
            assert_eq!(m.dim(), d);
        }
    }

    #[test]
    fn povm_constructor_rejects_invalid_sets() {
        let i = CMat::identity(2);
        let z = CMat::zeros(2);
        assert!(Povm3::new(i.clone(), z.clone(), z.clone()).is_ok());
        assert!(Povm3::new(i.clone(), i.clone(), z.clone()).is_err());
        let neg = CMat::diag(&[-0.1, 0.0]);
        assert!(Povm3::new(&i - &neg, neg, z).is_err());
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(usd_optimal_success(0.0), 1.0);
        assert_eq!(usd_optimal_success(1.0), 0.0);
        assert_eq!(epsilon_critical(0.0), 0.0);
        assert_eq!(epsilon_critical(1.0), 0.5);
        let ec = epsilon_critical(1.0 / 3f64.sqrt());
        assert!((ec - 0.5 * (1.0 - (2.0f64 / 3.0).sqrt())).abs() < 1e-15);
        assert!((ec - 0.09175).abs() < 1e-5);
    }

    #[test]
    fn alpha_values_and_domain() {
        assert_eq!(alpha(0.0).unwrap(), 1.0);
        assert!((alpha(0.005875).unwrap() - 1.1735).abs() < 1e-3);
        assert!(alpha(0.09175).unwrap() > alpha(0.0).unwrap());
        assert!(alpha(-0.01).is_err());
        assert!(alpha(0.5).is_err());
        let mut prev = 0.0;
        for k in 0..=499 {
            let a = alpha(k as f64 * 1e-3).unwrap();
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn bounded_error_branches() {
        let s = 0.37;
        assert!((bounded_error_success(s, 0.0).unwrap() - (1.0 - s)).abs() < 1e-15);
        let t = 1.0 / 3f64.sqrt();
        let high = bounded_error_success(t, 0.2113).unwrap();
        assert!((high - 0.5 * (1.0 + (2.0f64 / 3.0).sqrt())).abs() < 1e-12);
        assert!((high - 0.9082).abs() < 1e-4);
        for k in 0..=100 {
            let s = k as f64 / 100.0;
            let ec = epsilon_critical(s);
            if ec > EPSILON_MAX {
                continue;
            }
            let lower = alpha(ec).unwrap() * (1.0 - s);
            let upper = 0.5 * (1.0 + (1.0 - s * s).sqrt());
            assert!((lower - upper).abs() < 1e-9, "s = {s}: {lower} vs {upper}");
        }
    }

    #[test]
    fn bounded_error_monotonicity_grid() {
        for i in 0..=40 {
            let s = i as f64 / 40.0;
            let mut prev = -1.0;
            for j in 0..=49 {
                let eps = j as f64 * 0.01;
                let v = bounded_error_success(s, eps).unwrap();
                assert!(v >= prev - 1e-12, "eps monotonicity at s={s}, eps={eps}");
                prev = v;
            }
        }
        for j in 0..=49 {
            let eps = j as f64 * 0.01;
            let mut prev = f64::INFINITY;
            for i in 0..=40 {
                let s = i as f64 / 40.0;
                let v = bounded_error_success(s, eps).unwrap();
                assert!(v <= prev + 1e-12, "s monotonicity at s={s}, eps={eps}");
                prev = v;
            }
        }
    }

    /// Grid search over qubit three-outcome POVMs with rank-one conclusive
    /// elements, as an independent check of the bounded-error optimum.
    #[test]
    fn bounded_error_high_branch_matches_search() {
        let s: f64 = 1.0 / 3f64.sqrt();
        let theta = s.acos() / 2.0;
        // Real qubit states symmetric about the x axis.
        let a = [theta.cos(), theta.sin()];
        let b = [theta.cos(), -theta.sin()];
        let eps = 0.25;
        let mut best: f64 = 0.0;
        let steps = 400;
        for i in 0..=steps {
            let phi = std::f64::consts::FRAC_PI_2 * i as f64 / steps as f64;
            // M1 = w |u><u|, M2 = w |v><v| with u, v mirror images.
            let u = [phi.cos(), phi.sin()];
            let v = [phi.cos(), -phi.sin()];
            let uv = u[0] * v[0] + u[1] * v[1];
            // largest w with I - w(|u><u| + |v><v|) >= 0: eigenvalues of the sum are 1 +- |uv|
            let w = 1.0 / (1.0 + uv.abs());
            let pa1 = w * (a[0] * u[0] + a[1] * u[1]).powi(2);
            let pb1 = w * (b[0] * u[0] + b[1] * u[1]).powi(2);
            let q1 = pb1 / (pa1 + pb1);
            if q1 <= eps {
                best = best.max(pa1);
            }
        }
        let formula = bounded_error_success(s, eps).unwrap();
        assert!(best <= formula + 1e-9);
        assert!((best - formula).abs() < 1e-4, "{best} vs {formula}");
    }

    #[test]
    fn noiseless_tetrahedron_simulation() {
        let ens = tetrahedron_sic();
        let m = optimal_measurements(&ens).unwrap();
        let b = simulate_behavior(&ens, &m, NoiseModel::ideal(), SimulationMode::Exact).unwrap();
        for y in Pair::all(4) {
            let p = 0.5 * (b.prob(Outcome::First, y.first, y) + b.prob(Outcome::Second, y.second, y));
            assert!((p - (1.0 - 1.0 / 3f64.sqrt())).abs() < 1e-9);
            assert_eq!(observed_error(&b, y), (0.0, 0.0));
        }
        for (_, _, cell) in b.cells() {
            assert!((cell.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noisy_tetrahedron_simulation() {
        let ens = tetrahedron_sic();
        let m = optimal_measurements(&ens).unwrap();
        let noise = NoiseModel::new(0.005, 0.55).unwrap();
        let b = simulate_behavior(&ens, &m, noise, SimulationMode::Exact).unwrap();
        let s = 1.0 / 3f64.sqrt();
        for y in Pair::all(4) {
            let p = 0.5 * (b.prob(Outcome::First, y.first, y) + b.prob(Outcome::Second, y.second, y));
            assert!((p - 0.55 * (0.995 * (1.0 - s) + 0.0025)).abs() < 1e-12);
            assert!((p - 0.2327).abs() < 1e-4);
            assert!((b.prob(Outcome::First, y.second, y) - 0.001375).abs() < 1e-12);
            let (q1, q2) = observed_error(&b, y);
            let expected = 0.0025 / (0.995 * (1.0 - s) + 0.005);
            assert!((q1 - expected).abs() < 1e-12);
            assert!((q2 - expected).abs() < 1e-12);
            assert!((q1 - 0.005875).abs() < 1e-5);
        }
    }

    #[test]
    fn detection_efficiency_cancels_in_error_rates() {
        let ens = tetrahedron_sic();
        let m = optimal_measurements(&ens).unwrap();
        let reference = {
            let b = simulate_behavior(&ens, &m, NoiseModel::new(0.03, 1.0).unwrap(), SimulationMode::Exact).unwrap();
            observed_error(&b, Pair::new(0, 1).unwrap())
        };
        for k in 1..=10 {
            let eta = k as f64 / 10.0;
            let b = simulate_behavior(&ens, &m, NoiseModel::new(0.03, eta).unwrap(), SimulationMode::Exact).unwrap();
            let q = observed_error(&b, Pair::new(0, 1).unwrap());
            assert!((q.0 - reference.0).abs() < 1e-12 && (q.1 - reference.1).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_denominator_convention() {
        // Every round inconclusive.
        let b = BehaviorTable::new(2, 2, vec![[0.0, 0.0, 1.0]; 2]).unwrap();
        assert_eq!(observed_error(&b, Pair::new(0, 1).unwrap()), (0.0, 0.0));
    }

    #[test]
    fn missing_measurement_is_reported() {
        let ens = tetrahedron_sic();
        let mut m = optimal_measurements(&ens).unwrap();
        m.remove(&Pair::new(1, 3).unwrap());
        let err = simulate_behavior(&ens, &m, NoiseModel::ideal(), SimulationMode::Exact).unwrap_err();
        assert!(matches!(err, Error::MissingMeasurement(1, 3)));
    }

    #[test]
    fn sampled_mode_concentrates() {
        let ens = tetrahedron_sic();
        let m = optimal_measurements(&ens).unwrap();
        let noise = NoiseModel::new(0.05, 0.55).unwrap();
        let exact = simulate_behavior(&ens, &m, noise, SimulationMode::Exact).unwrap();
        let sampled = simulate_behavior(
            &ens,
            &m,
            noise,
            SimulationMode::Sampled {
                shots: 1_000_000,
                seed: 99,
            },
        )
        .unwrap();
        for ((_, _, a), (_, _, b)) in exact.cells().zip(sampled.cells()) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() < 0.005);
            }
            assert_eq!(b.iter().sum::<f64>(), 1.0);
        }
        let again = simulate_behavior(
            &ens,
            &m,
            noise,
            SimulationMode::Sampled {
                shots: 1_000_000,
                seed: 99,
            },
        )
        .unwrap();
        assert_eq!(sampled, again);
    }

    #[test]
    fn behavior_table_validation() {
        assert!(BehaviorTable::new(2, 2, vec![[0.5, 0.5, 0.1]; 2]).is_err());
        assert!(BehaviorTable::new(2, 2, vec![[0.5, 0.5, 0.0]; 3]).is_err());
        assert!(BehaviorTable::new(1, 2, vec![]).is_err());
    }

    #[test]
    fn pair_indexing_round_trips() {
        let n = 6;
        let table = BehaviorTable::new(
            n,
            2,
            (0..Pair::count(n) * n)
                .map(|i| {
                    let v = i as f64 / 1000.0;
                    [v, 0.0, 1.0 - v]
                })
                .collect(),
        )
        .unwrap();
        for (i, y) in Pair::all(n).into_iter().enumerate() {
            for x in 0..n {
                assert_eq!(table.prob(Outcome::First, x, y), (i * n + x) as f64 / 1000.0);
            }
        }
    }
}
