//! State ensembles, frame potentials and quantum design checks.
//!
//! An ensemble of `N` states in dimension `d` is a `t`-design exactly when its
//! frame potential `V_t = sum_{j,k} F(rho_j, rho_k)^{2t}` reaches the lower bound
//! `J_t = N^2 t! (d-1)! / (t+d-1)!`. The fidelity `F` is the root fidelity, so on
//! pure states it is the overlap modulus `|<psi_j|psi_k>|` and the mixed and pure
//! potentials are the same function.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qmath::{fidelity, CMat, CVec};
use crate::tol::TOL;

/// A single preparation: a normalized ket or a density matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Pure(CVec),
    Mixed(CMat),
}

impl State {
    pub fn dim(&self) -> usize {
        match self {
            State::Pure(v) => v.dim(),
            State::Mixed(m) => m.dim(),
        }
    }

    pub fn density(&self) -> CMat {
        match self {
            State::Pure(v) => v.projector(),
            State::Mixed(m) => m.clone(),
        }
    }

    pub fn as_pure(&self) -> Option<&CVec> {
        match self {
            State::Pure(v) => Some(v),
            State::Mixed(_) => None,
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            State::Pure(v) if !v.is_normalized() => Err(Error::InvalidState(format!(
                "squared norm {} differs from 1",
                v.norm_sqr()
            ))),
            State::Pure(_) => Ok(()),
            State::Mixed(m) => m.validate_density(),
        }
    }
}

/// Labeled preparations `x = 0..N` sharing one Hilbert-space dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct StateEnsemble {
    dim: usize,
    states: Vec<State>,
}

impl StateEnsemble {
    pub fn new(dim: usize, states: Vec<State>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidEnsemble("dimension must be positive".into()));
        }
        if states.len() < 2 {
            return Err(Error::InvalidEnsemble(format!(
                "need at least 2 states, got {}",
                states.len()
            )));
        }
        for (x, s) in states.iter().enumerate() {
            if s.dim() != dim {
                return Err(Error::InvalidEnsemble(format!(
                    "state {x} has dimension {}, expected {dim}",
                    s.dim()
                )));
            }
            s.validate()
                .map_err(|e| Error::InvalidEnsemble(format!("state {x}: {e}")))?;
        }
        Ok(Self { dim, states })
    }

    /// Convenience constructor for an ensemble of kets.
    pub fn pure(dim: usize, kets: Vec<CVec>) -> Result<Self> {
        Self::new(dim, kets.into_iter().map(State::Pure).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, x: usize) -> &State {
        &self.states[x]
    }

    /// The kets, if every member is pure.
    pub fn pure_states(&self) -> Option<Vec<&CVec>> {
        self.states.iter().map(State::as_pure).collect()
    }

    /// Pairwise root fidelities `F(rho_j, rho_k)` as an `N x N` table.
    pub fn fidelity_matrix(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.len();
        let mut table = vec![vec![1.0; n]; n];
        for j in 0..n {
            for k in j + 1..n {
                let f = pair_fidelity(&self.states[j], &self.states[k])?;
                table[j][k] = f;
                table[k][j] = f;
            }
        }
        Ok(table)
    }

    /// Applies the same unitary to every member.
    pub fn transformed(&self, unitary: &CMat) -> Result<Self> {
        let states = self
            .states
            .iter()
            .map(|s| match s {
                State::Pure(v) => State::Pure(unitary.apply(v)),
                State::Mixed(m) => State::Mixed((&(unitary * m) * &unitary.adjoint()).hermitian_part()),
            })
            .collect();
        Self::new(self.dim, states)
    }

    /// Reorders the labels: member `x` of the result is `self.state(order[x])`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        Self::new(self.dim, order.iter().map(|&x| self.states[x].clone()).collect())
    }
}

fn pair_fidelity(a: &State, b: &State) -> Result<f64> {
    match (a, b) {
        (State::Pure(u), State::Pure(v)) => Ok(u.dot(v).norm().min(1.0)),
        _ => fidelity(&a.density(), &b.density()),
    }
}

/// Frame potential `V_n = sum_{j,k} F(rho_j, rho_k)^{2n}`, diagonal included.
pub fn frame_potential(ens: &StateEnsemble, n: u32) -> Result<f64> {
    let table = ens.fidelity_matrix()?;
    Ok(frame_potential_from_fidelities(&table, n))
}

pub(crate) fn frame_potential_from_fidelities(table: &[Vec<f64>], n: u32) -> f64 {
    let exponent = 2 * n as i32;
    table
        .iter()
        .map(|row| row.iter().map(|f| f.powi(exponent)).sum::<f64>())
        .sum()
}

/// Largest `t + d - 1` accepted by the exact design bound.
pub const MAX_BOUND_DEGREE: u32 = 20;

/// The design lower bound `J_t` for `N` states in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignBound {
    pub n_states: usize,
    pub dim: usize,
    pub order: u32,
    /// `J_t` as a reduced fraction.
    pub exact: Ratio<i128>,
}

impl DesignBound {
    pub fn value(&self) -> f64 {
        ratio_to_f64(self.exact)
    }
}

pub(crate) fn ratio_to_f64(r: Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Exact `J_t = N^2 t! (d-1)! / (t+d-1)! = N^2 / C(t+d-1, t)`.
pub fn design_bound(n_states: usize, dim: usize, order: u32) -> Result<DesignBound> {
    if n_states < 1 {
        return Err(Error::InvalidParameter("design bound needs N >= 1".into()));
    }
    if dim < 2 {
        return Err(Error::InvalidParameter("design bound needs d >= 2".into()));
    }
    let degree = order as usize + dim - 1;
    if degree > MAX_BOUND_DEGREE as usize {
        return Err(Error::InvalidParameter(format!(
            "t + d - 1 = {degree} exceeds {MAX_BOUND_DEGREE}"
        )));
    }
    let n = n_states as i128;
    let exact = Ratio::new(n * n, binomial(degree as u64, order as u64) as i128);
    Ok(DesignBound {
        n_states,
        dim,
        order,
        exact,
    })
}

/// `J_t` in floating point with no size limit, for searches over dimension.
pub(crate) fn design_bound_f64(n_states: usize, dim: usize, order: u32) -> f64 {
    let n = n_states as f64;
    // 1 / C(t+d-1, t) = prod_{k=1..t} k / (d - 1 + k)
    let inv_binom: f64 = (1..=order)
        .map(|k| k as f64 / (dim as f64 - 1.0 + k as f64))
        .product();
    n * n * inv_binom
}

pub(crate) fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Outcome of a design-order check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignCheck {
    pub is_design: bool,
    /// `V_t - J_t` at the requested order.
    pub gap: f64,
}

/// Checks `V_n - J_n <= tol` for every order `n <= t`.
pub fn is_t_design(ens: &StateEnsemble, t: u32, tol: f64) -> Result<DesignCheck> {
    let table = ens.fidelity_matrix()?;
    let mut is_design = true;
    let mut gap = 0.0;
    for n in 0..=t {
        let j = design_bound(ens.len(), ens.dim(), n)?.value();
        let g = frame_potential_from_fidelities(&table, n) - j;
        if g > tol {
            is_design = false;
        }
        if n == t {
            gap = g;
        }
    }
    Ok(DesignCheck { is_design, gap })
}

/// The qubit SIC: `(1, 0)` and `(1/sqrt3, sqrt(2/3) e^{2 pi i k / 3})`, `k = 0, 1, 2`.
pub fn tetrahedron_sic() -> StateEnsemble {
    let a = 1.0 / 3f64.sqrt();
    let b = (2.0f64 / 3.0).sqrt();
    let mut kets = vec![CVec::basis(2, 0)];
    for k in 0..3 {
        kets.push(CVec::new(vec![
            Complex64::new(a, 0.0),
            Complex64::from_polar(b, 2.0 * PI * k as f64 / 3.0),
        ]));
    }
    StateEnsemble::pure(2, kets).expect("tetrahedron states are normalized")
}

/// Computational basis of dimension `d` as an ensemble.
pub fn basis_ensemble(dim: usize) -> Result<StateEnsemble> {
    if dim < 2 {
        return Err(Error::InvalidParameter("basis ensemble needs d >= 2".into()));
    }
    StateEnsemble::pure(dim, (0..dim).map(|k| CVec::basis(dim, k)).collect())
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..n).take_while(|k| k * k <= n).all(|k| !n.is_multiple_of(k))
}

/// Complete set of `d + 1` mutually unbiased bases for prime `d <= 13`.
///
/// The computational basis is followed by the eigenbases of `X Z^k`,
/// `k = 0..d`. For odd `d` the vectors are `omega^{k m^2 + j m} / sqrt(d)`;
/// `d = 2` uses the `X` and `Y` eigenbases.
pub fn mub_ensemble(dim: usize) -> Result<StateEnsemble> {
    if !is_prime(dim) || dim > 13 {
        return Err(Error::InvalidParameter(format!(
            "MUB construction needs a prime d <= 13, got {dim}"
        )));
    }
    let mut kets: Vec<CVec> = (0..dim).map(|k| CVec::basis(dim, k)).collect();
    let norm = 1.0 / (dim as f64).sqrt();
    if dim == 2 {
        let phases = [
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, -1.0),
        ];
        for p in phases {
            kets.push(CVec::new(vec![Complex64::new(norm, 0.0), p * norm]));
        }
    } else {
        let d = dim as u64;
        for k in 0..d {
            for j in 0..d {
                kets.push(CVec::new(
                    (0..d)
                        .map(|m| {
                            let e = (k * m * m + j * m) % d;
                            Complex64::from_polar(norm, 2.0 * PI * e as f64 / d as f64)
                        })
                        .collect(),
                ));
            }
        }
    }
    StateEnsemble::pure(dim, kets)
}

/// Qubit state with Bloch vector `n` (unit length).
pub fn bloch_state(n: [f64; 3]) -> Result<CVec> {
    let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if (len - 1.0).abs() > TOL.structural {
        return Err(Error::InvalidParameter(format!(
            "Bloch vector {n:?} has length {len}"
        )));
    }
    let theta = n[2].clamp(-1.0, 1.0).acos();
    let phi = n[1].atan2(n[0]);
    Ok(CVec::new(vec![
        Complex64::new((theta / 2.0).cos(), 0.0),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ]))
}

/// Qubit ensemble whose Bloch vectors are the given unit vectors.
pub fn bloch_ensemble(vertices: &[[f64; 3]]) -> Result<StateEnsemble> {
    let kets = vertices.iter().map(|&n| bloch_state(n)).collect::<Result<_>>()?;
    StateEnsemble::pure(2, kets)
}

/// Vertices of the regular tetrahedron inscribed in the unit sphere.
pub fn tetrahedron_vertices() -> Vec<[f64; 3]> {
    let s = 1.0 / 3f64.sqrt();
    vec![[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]]
}

/// Vertices of the regular octahedron.
pub fn octahedron_vertices() -> Vec<[f64; 3]> {
    vec![
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ]
}

/// Vertices of the regular icosahedron, `(0, +-1, +-phi)` and cyclic shifts.
pub fn icosahedron_vertices() -> Vec<[f64; 3]> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let r = (1.0 + phi * phi).sqrt();
    let mut out = Vec::with_capacity(12);
    for a in [1.0, -1.0] {
        for b in [phi, -phi] {
            out.push([0.0, a / r, b / r]);
            out.push([a / r, b / r, 0.0]);
            out.push([b / r, 0.0, a / r]);
        }
    }
    out
}

/// Haar-random ket from complex Gaussian entries.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    loop {
        let v = CVec::new(
            (0..dim)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect(),
        );
        if let Ok(u) = v.normalized() {
            return u;
        }
    }
}

/// `N` Haar-random kets in dimension `d`, deterministic in `seed`.
pub fn random_ensemble(n_states: usize, dim: usize, seed: u64) -> Result<StateEnsemble> {
    if n_states < 2 {
        return Err(Error::InvalidParameter(format!(
            "random ensemble needs N >= 2, got {n_states}"
        )));
    }
    if dim == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    StateEnsemble::pure(dim, (0..n_states).map(|_| random_state(dim, &mut rng)).collect())
}

/// `sum_{j,k} |<z_j|z_k>|^{2t}` over arbitrary (not necessarily unit) vectors.
pub fn frame_potential_of_vectors(vectors: &[CVec], t: u32) -> f64 {
    let exponent = t as i32;
    let mut total = 0.0;
    for (j, u) in vectors.iter().enumerate() {
        total += u.norm_sqr().powi(2 * exponent);
        for v in &vectors[j + 1..] {
            total += 2.0 * u.dot(v).norm_sqr().powi(exponent);
        }
    }
    total
}

/// Euclidean gradient of [`frame_potential_of_vectors`].
///
/// Entry `j` packs `df/dRe z_j + i df/dIm z_j`, which equals
/// `4t sum_k |<z_k|z_j>|^{2t-2} <z_k|z_j> z_k`.
pub fn frame_potential_gradient(vectors: &[CVec], t: u32) -> Vec<CVec> {
    let n = vectors.len();
    let dim = vectors.first().map_or(0, CVec::dim);
    let mut grads = vec![CVec::zeros(dim); n];
    if t == 0 {
        return grads;
    }
    let tf = t as f64;
    for j in 0..n {
        let mut g = CVec::zeros(dim);
        for k in 0..n {
            let c = vectors[k].dot(&vectors[j]);
            let w = 4.0 * tf * c.norm_sqr().powi(t as i32 - 1);
            g = g.axpy(c * w, &vectors[k]);
        }
        grads[j] = g;
    }
    grads
}

/// Settings for [`minimize_frame_potential`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizerOptions {
    pub max_iterations: usize,
    /// Stop once the tangent gradient norm falls below this.
    pub gradient_tolerance: f64,
    pub initial_step: f64,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            gradient_tolerance: 1e-10,
            initial_step: 0.05,
        }
    }
}

/// Best ensemble found by the multistart descent.
#[derive(Debug, Clone)]
pub struct MinimizeResult {
    pub ensemble: StateEnsemble,
    pub value: f64,
    /// False when the best restart hit the iteration cap before its gradient
    /// tolerance was met.
    pub converged: bool,
    pub iterations: usize,
    pub restart: usize,
}

pub(crate) fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Minimizes `V_t` over `N` kets in dimension `d` by projected gradient
/// descent from `restarts` random starts.
pub fn minimize_frame_potential(
    n_states: usize,
    dim: usize,
    t: u32,
    restarts: usize,
    seed: u64,
) -> Result<MinimizeResult> {
    minimize_frame_potential_with(n_states, dim, t, restarts, seed, MinimizerOptions::default())
}

pub fn minimize_frame_potential_with(
    n_states: usize,
    dim: usize,
    t: u32,
    restarts: usize,
    seed: u64,
    options: MinimizerOptions,
) -> Result<MinimizeResult> {
    if restarts < 1 {
        return Err(Error::InvalidParameter("restarts must be >= 1".into()));
    }
    if n_states < 2 || dim < 1 {
        return Err(Error::InvalidParameter(format!(
            "cannot optimize N = {n_states}, d = {dim}"
        )));
    }
    let runs: Vec<(Vec<CVec>, f64, bool, usize)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(seed, r);
            let start: Vec<CVec> = (0..n_states).map(|_| random_state(dim, &mut rng)).collect();
            descend(start, t, &options)
        })
        .collect();
    let (restart, (kets, value, converged, iterations)) = runs
        .into_iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .expect("at least one restart");
    Ok(MinimizeResult {
        ensemble: StateEnsemble::pure(dim, kets)?,
        value,
        converged,
        iterations,
        restart,
    })
}

fn tangent_gradient(kets: &[CVec], t: u32) -> Vec<CVec> {
    frame_potential_gradient(kets, t)
        .into_iter()
        .zip(kets)
        .map(|(g, psi)| {
            let radial = psi.dot(&g).re;
            g.axpy(Complex64::new(-radial, 0.0), psi)
        })
        .collect()
}

fn descend(mut kets: Vec<CVec>, t: u32, opts: &MinimizerOptions) -> (Vec<CVec>, f64, bool, usize) {
    let mut value = frame_potential_of_vectors(&kets, t);
    let mut step = opts.initial_step;
    for iter in 0..opts.max_iterations {
        let grad = tangent_gradient(&kets, t);
        let gnorm2: f64 = grad.iter().map(CVec::norm_sqr).sum();
        if gnorm2.sqrt() < opts.gradient_tolerance {
            return (kets, value, true, iter);
        }
        // Backtracking (Armijo) on the retraction back to the unit sphere.
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<CVec> = kets
                .iter()
                .zip(&grad)
                .map(|(psi, g)| {
                    psi.axpy(Complex64::new(-step, 0.0), g)
                        .normalized()
                        .unwrap_or_else(|_| psi.clone())
                })
                .collect();
            let trial_value = frame_potential_of_vectors(&trial, t);
            if trial_value <= value - 1e-4 * step * gnorm2 {
                kets = trial;
                value = trial_value;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No descent possible at machine precision: a stationary point.
            return (kets, value, true, iter);
        }
        step = (step * 1.5).min(1.0);
    }
    (kets, value, false, opts.max_iterations)
}
