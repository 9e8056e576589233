//! Limits of randomised discrimination under stochastic projective
//! measurements, and certification that a measurement is non-projective.
//!
//! For four qubit states and `t = 2` projective strategies cannot push the
//! score below `32/27`, while the optimal non-projective strategy reaches
//! `2/3`. Scores in between certify non-projectiveness.

use rand::Rng;
use rayon::prelude::*;

use crate::designs::{binomial, design_bound, frame_potential_from_fidelities, restart_rng, StateEnsemble};
use crate::error::{Error, Result};
use crate::tol::TOL;

/// Orthogonality indicator of a pair: set iff `|<psi_1|psi_2>|` is below the
/// orthogonality tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrthoFlag {
    pub tau: bool,
}

impl OrthoFlag {
    pub fn from_overlap(s: f64) -> Self {
        Self {
            tau: s <= TOL.orthogonality,
        }
    }

    fn value(self) -> f64 {
        if self.tau {
            1.0
        } else {
            0.0
        }
    }
}

/// Best success rate `(1 - s^2 + tau) / 2` of a random choice between the
/// two states' eigenbases.
pub fn projective_usd_success(s: f64, flag: OrthoFlag) -> f64 {
    0.5 * (1.0 - s * s + flag.value())
}

fn check_pure(ens: &StateEnsemble) -> Result<Vec<Vec<f64>>> {
    if ens.pure_states().is_none() {
        return Err(Error::InvalidEnsemble("projective bound needs pure states".into()));
    }
    ens.fidelity_matrix()
}

/// Smallest score attainable with projective measurements on this ensemble:
/// `sum_{y1<y2} (1 - p_proj^y)^{2t}`.
pub fn projective_score(ens: &StateEnsemble, t: u32) -> Result<f64> {
    let table = check_pure(ens)?;
    let mut total = 0.0;
    for j in 0..table.len() {
        for k in j + 1..table.len() {
            let s = table[j][k];
            let p = projective_usd_success(s, OrthoFlag::from_overlap(s));
            total += (1.0 - p).powi(2 * t as i32);
        }
    }
    Ok(total)
}

/// [`projective_score`] through its expansion in frame potentials:
/// `2^{-(2t+1)} sum_{n=1}^{2t} C(2t,n) (V_n - N) + 2^{-2t} #{non-orthogonal pairs}`.
pub fn projective_score_expanded(ens: &StateEnsemble, t: u32) -> Result<f64> {
    let table = check_pure(ens)?;
    let n = ens.len() as f64;
    let two_t = 2 * t;
    let mut total = 0.0;
    for k in 1..=two_t {
        let v = frame_potential_from_fidelities(&table, k);
        total += binomial(two_t as u64, k as u64) as f64 * (v - n);
    }
    total /= 2f64.powi(two_t as i32 + 1);
    let mut non_orthogonal = 0usize;
    for j in 0..table.len() {
        for k in j + 1..table.len() {
            if !OrthoFlag::from_overlap(table[j][k]).tau {
                non_orthogonal += 1;
            }
        }
    }
    Ok(total + non_orthogonal as f64 / 2f64.powi(two_t as i32))
}

/// The projective lower bound for `(N, d, t) = (4, 2, 2)`.
pub const PROJECTIVE_BOUND_422: f64 = 32.0 / 27.0;

/// Result of the numerical minimization over four Bloch vectors.
#[derive(Debug, Clone)]
pub struct ProjectiveBound {
    /// Minimum projective score found.
    pub value: f64,
    /// Bound obtained by replacing every frame potential with its design
    /// lower bound (sub-optimal, for comparison).
    pub relaxation: f64,
    pub bloch_vectors: Vec<[f64; 3]>,
    /// Pairwise squared overlaps of the minimizer.
    pub overlaps: Vec<f64>,
}

/// Relaxed bound: the expansion of [`projective_score_expanded`] with each
/// `V_n` replaced by `J_n` and no orthogonal pairs.
pub fn projective_relaxation(n_states: usize, dim: usize, t: u32) -> Result<f64> {
    let n = n_states as f64;
    let two_t = 2 * t;
    let mut total = 0.0;
    for k in 1..=two_t {
        let j = design_bound(n_states, dim, k)?.value();
        total += binomial(two_t as u64, k as u64) as f64 * (j - n);
    }
    total /= 2f64.powi(two_t as i32 + 1);
    let pairs = (n_states * (n_states - 1) / 2) as f64;
    Ok(total + pairs / 2f64.powi(two_t as i32))
}

fn bloch_vector(theta: f64, phi: f64) -> [f64; 3] {
    [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Score of four qubit states with no orthogonal pairs, as a function of the
/// Bloch vectors: `sum_{i<j} ((3 + n_i.n_j) / 4)^4`.
fn smooth_score(vectors: &[[f64; 3]]) -> f64 {
    let mut total = 0.0;
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            total += ((3.0 + dot(&vectors[i], &vectors[j])) / 4.0).powi(4);
        }
    }
    total
}

/// Gradient of [`smooth_score`] with respect to the `(theta, phi)` angles.
fn smooth_gradient(angles: &[f64]) -> Vec<f64> {
    let vectors: Vec<[f64; 3]> = angles.chunks(2).map(|a| bloch_vector(a[0], a[1])).collect();
    let mut grad = vec![0.0; angles.len()];
    for i in 0..vectors.len() {
        let mut dn = [0.0; 3];
        for j in 0..vectors.len() {
            if i == j {
                continue;
            }
            let w = (3.0 + dot(&vectors[i], &vectors[j])).powi(3) / 64.0;
            for k in 0..3 {
                dn[k] += w * vectors[j][k];
            }
        }
        let (theta, phi) = (angles[2 * i], angles[2 * i + 1]);
        let d_theta = [theta.cos() * phi.cos(), theta.cos() * phi.sin(), -theta.sin()];
        let d_phi = [-theta.sin() * phi.sin(), theta.sin() * phi.cos(), 0.0];
        grad[2 * i] = dot(&dn, &d_theta);
        grad[2 * i + 1] = dot(&dn, &d_phi);
    }
    grad
}

fn angles_to_vectors(angles: &[f64]) -> Vec<[f64; 3]> {
    angles.chunks(2).map(|a| bloch_vector(a[0], a[1])).collect()
}

fn descend_angles(mut angles: Vec<f64>) -> (Vec<f64>, f64) {
    let mut value = smooth_score(&angles_to_vectors(&angles));
    let mut step = 0.5;
    for _ in 0..20_000 {
        let grad = smooth_gradient(&angles);
        let g2: f64 = grad.iter().map(|g| g * g).sum();
        if g2.sqrt() < 1e-12 {
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = angles.iter().zip(&grad).map(|(a, g)| a - step * g).collect();
            let tv = smooth_score(&angles_to_vectors(&trial));
            if tv <= value - 1e-4 * step * g2 {
                angles = trial;
                value = tv;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        step = (step * 2.0).min(4.0);
    }
    (angles, value)
}

/// Minimizes the projective score of four qubit states over Bloch angles from
/// `restarts` random starting configurations.
///
/// The minimization runs over configurations without orthogonal pairs; the
/// reported value is re-evaluated with [`projective_score`] on the minimizer.
pub fn projective_bound_422(restarts: usize, seed: u64) -> Result<ProjectiveBound> {
    if restarts < 1 {
        return Err(Error::InvalidParameter("restarts must be >= 1".into()));
    }
    let runs: Vec<(Vec<f64>, f64)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = restart_rng(seed, r);
            let start: Vec<f64> = (0..4)
                .flat_map(|_| {
                    let z: f64 = rng.random_range(-1.0..1.0);
                    let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    [z.acos(), phi]
                })
                .collect();
            descend_angles(start)
        })
        .collect();
    let (angles, _) = runs
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one restart");
    let bloch_vectors = angles_to_vectors(&angles);
    let ens = crate::designs::bloch_ensemble(&bloch_vectors)?;
    let table = ens.fidelity_matrix()?;
    let mut overlaps = Vec::new();
    for j in 0..4 {
        for k in j + 1..4 {
            overlaps.push(table[j][k] * table[j][k]);
        }
    }
    Ok(ProjectiveBound {
        value: projective_score(&ens, 2)?,
        relaxation: projective_relaxation(4, 2, 2)?,
        bloch_vectors,
        overlaps,
    })
}

/// Score `6 (1 - eta (1 - 1/sqrt3))^4` of the optimal tetrahedron strategy with
/// detection efficiency `eta`.
pub fn lossy_tetrahedron_score(eta: f64) -> f64 {
    6.0 * (1.0 - eta * (1.0 - 1.0 / 3f64.sqrt())).powi(4)
}

/// Detection efficiency above which the lossy tetrahedron strategy beats
/// every projective strategy, found by bisection on
/// `lossy_tetrahedron_score(eta) = 32/27`.
pub fn nonprojective_threshold() -> f64 {
    // The score decreases in eta.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lossy_tetrahedron_score(mid) > PROJECTIVE_BOUND_422 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// True iff a `t = 2` score for four qubit preparations lies below the
/// projective bound by more than `tol`.
pub fn certify_nonprojective(score_2: f64, tol: f64) -> bool {
    score_2 < PROJECTIVE_BOUND_422 - tol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{basis_ensemble, random_ensemble, tetrahedron_sic};

    #[test]
    fn projective_success_values() {
        assert_eq!(projective_usd_success(0.0, OrthoFlag::from_overlap(0.0)), 1.0);
        assert_eq!(projective_usd_success(1.0, OrthoFlag::from_overlap(1.0)), 0.0);
        let s = 1.0 / 3f64.sqrt();
        assert!((projective_usd_success(s, OrthoFlag::from_overlap(s)) - 1.0 / 3.0).abs() < 1e-15);
    }

    /// Scan over qubit projective measurements in the real plane of the pair.
    /// An outcome may announce a state only if the other state never triggers
    /// it; mixtures of bases are convex combinations, so the best single basis
    /// gives the projective optimum.
    #[test]
    fn projective_success_matches_basis_scan() {
        let s2: f64 = 1.0 / 3.0;
        let a = s2.sqrt().acos();
        let psi = [[1.0, 0.0], [a.cos(), a.sin()]];
        let mut angles: Vec<f64> = (0..3600).map(|k| std::f64::consts::PI * k as f64 / 3600.0).collect();
        angles.extend([a, a + std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2]);
        let mut best: f64 = 0.0;
        for b in angles {
            let basis = [[b.cos(), b.sin()], [-b.sin(), b.cos()]];
            let prob = |v: &[f64; 2], s: &[f64; 2]| (v[0] * s[0] + v[1] * s[1]).powi(2);
            let mut p = 0.0;
            for v in &basis {
                if prob(v, &psi[1]) < 1e-12 {
                    p += 0.5 * prob(v, &psi[0]);
                } else if prob(v, &psi[0]) < 1e-12 {
                    p += 0.5 * prob(v, &psi[1]);
                }
            }
            best = best.max(p);
        }
        assert!((best - projective_usd_success(s2.sqrt(), OrthoFlag { tau: false })).abs() < 1e-12);
    }

    #[test]
    fn tetrahedron_projective_score() {
        let s = projective_score(&tetrahedron_sic(), 2).unwrap();
        assert!((s - 32.0 / 27.0).abs() < 1e-9);
        let e = projective_score_expanded(&tetrahedron_sic(), 2).unwrap();
        assert!((s - e).abs() < 1e-9);
        assert!(projective_score(&basis_ensemble(2).unwrap(), 2).unwrap().abs() < 1e-15);
    }

    #[test]
    fn expansions_agree_on_random_ensembles() {
        for seed in 0..50 {
            let ens = random_ensemble(2 + (seed as usize % 5), 2 + (seed as usize % 3), seed).unwrap();
            for t in 1..=3 {
                let a = projective_score(&ens, t).unwrap();
                let b = projective_score_expanded(&ens, t).unwrap();
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
        let basis = basis_ensemble(3).unwrap();
        assert!((projective_score(&basis, 2).unwrap() - projective_score_expanded(&basis, 2).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn relaxation_value() {
        assert!((projective_relaxation(4, 2, 2).unwrap() - 1.1).abs() < 1e-12);
    }

    #[test]
    fn threshold_solves_defining_equation() {
        let eta = nonprojective_threshold();
        assert!((eta - (3.0 + 3f64.sqrt()) / 6.0).abs() < 1e-10);
        assert!((lossy_tetrahedron_score(eta) - 32.0 / 27.0).abs() < 1e-9);
        assert!(eta > 0.0 && eta < 1.0);
        assert!((lossy_tetrahedron_score(1.0) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn nonprojective_verdicts() {
        assert!(certify_nonprojective(2.0 / 3.0, 1e-6));
        assert!(!certify_nonprojective(lossy_tetrahedron_score(0.70), 1e-6));
        assert!(certify_nonprojective(lossy_tetrahedron_score(0.85), 1e-6));
    }

    #[test]
    fn angle_gradient_matches_finite_differences() {
        let angles = [0.3, 1.1, 2.0, -0.4, 1.4, 2.9, 0.8, 4.0];
        let g = smooth_gradient(&angles);
        let h = 1e-6;
        for i in 0..angles.len() {
            let mut p = angles.to_vec();
            p[i] += h;
            let mut m = angles.to_vec();
            m[i] -= h;
            let fd = (smooth_score(&angles_to_vectors(&p)) - smooth_score(&angles_to_vectors(&m))) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn minimization_finds_tetrahedron() {
        let res = projective_bound_422(100, 1).unwrap();
        assert!((res.value - 32.0 / 27.0).abs() < 1e-5, "{}", res.value);
        for s in &res.overlaps {
            assert!((s - 1.0 / 3.0).abs() < 1e-3);
        }
        assert!((res.relaxation - 1.1).abs() < 1e-12);
    }
}
