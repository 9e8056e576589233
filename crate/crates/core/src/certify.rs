//! Figures of merit and certification bounds computed from a behavior table.
//!
//! Given `p(b | x, y)` and an assumed dimension `d`, the score
//! `S_t^eps = sum_y (alpha_eps - p_usd^y)^{2t}` is bounded below by
//! `alpha_eps^{2t} Q_t` with `Q_t = (J_t - N) / 2`; saturation certifies a
//! `t`-design. The same score lower-bounds the detection efficiency through the
//! lossy bound `Q_t^eta`, and the smallest `d` compatible with the score is a
//! dimension witness.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::designs::{design_bound, design_bound_f64, ratio_to_f64, StateEnsemble};
use crate::error::{Error, Result};
use crate::tol::TOL;
use crate::usd::{alpha, epsilon_critical, observed_error, BehaviorTable, Outcome, Pair, EPSILON_MAX};

/// Certification verdicts and the numbers behind them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub n_states: usize,
    pub d_assumed: usize,
    pub t: u32,
    pub epsilon_used: f64,
    /// `S_t^eps`.
    pub score: f64,
    /// `alpha_eps^{2t} Q_t`.
    pub bound: f64,
    /// `score - bound`.
    pub gap: f64,
    pub design_certified: bool,
    /// Upper bound on the frame potential of the (possibly mixed) preparations.
    pub frame_potential_upper: f64,
    pub eta_lower: f64,
    pub min_dimension: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonprojective: Option<NonProjectiveVerdict>,
    pub notes: Vec<String>,
}

/// Non-projectiveness verdict attached by the projective module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonProjectiveVerdict {
    pub projective_bound: f64,
    pub certified: bool,
}

/// `p_usd^y = (p(1|y1,y) + p(2|y2,y)) / 2`.
pub fn usd_rate(behavior: &BehaviorTable, y: Pair) -> f64 {
    0.5 * (behavior.prob(Outcome::First, y.first, y) + behavior.prob(Outcome::Second, y.second, y))
}

/// Smallest global error bound consistent with the data: the largest
/// observed `q1` or `q2` over all pairs.
pub fn choose_epsilon(behavior: &BehaviorTable) -> Result<f64> {
    let eps = behavior
        .pairs()
        .iter()
        .map(|&y| {
            let (q1, q2) = observed_error(behavior, y);
            q1.max(q2)
        })
        .fold(0.0, f64::max);
    if eps > EPSILON_MAX {
        return Err(Error::Infeasible(format!(
            "observed error rate {eps} leaves no room for certification (needs < 1/2)"
        )));
    }
    Ok(eps)
}

/// `S_t^eps = sum_{y1<y2} (alpha_eps - p_usd^y)^{2t}`.
pub fn score(behavior: &BehaviorTable, t: u32, eps: f64) -> Result<f64> {
    let a = alpha(eps)?;
    let mut total = 0.0;
    for &y in behavior.pairs() {
        let p = usd_rate(behavior, y);
        if p > a + TOL.structural {
            return Err(Error::Infeasible(format!(
                "success rate {p} for pair ({}, {}) exceeds alpha = {a}; error bound {eps} too small",
                y.first, y.second
            )));
        }
        total += (a - p).max(0.0).powi(2 * t as i32);
    }
    Ok(total)
}

/// Exact `Q_t = (J_t - N) / 2`.
pub fn quantum_bound_exact(n_states: usize, dim: usize, t: u32) -> Result<Ratio<i128>> {
    let j = design_bound(n_states, dim, t)?.exact;
    Ok((j - Ratio::from_integer(n_states as i128)) / 2)
}

/// `Q_t = (J_t - N) / 2`.
pub fn quantum_bound(n_states: usize, dim: usize, t: u32) -> Result<f64> {
    quantum_bound_exact(n_states, dim, t).map(ratio_to_f64)
}

/// Design certification at the error bound read off the data.
pub fn certify_design(behavior: &BehaviorTable, d_assumed: usize, t: u32, tol: f64) -> Result<CertificationReport> {
    let eps = choose_epsilon(behavior)?;
    certify_design_at(behavior, d_assumed, t, eps, tol)
}

/// Design certification at a caller-supplied error bound `eps`.
///
/// The fields `eta_lower` and `min_dimension` are filled from the same score.
pub fn certify_design_at(
    behavior: &BehaviorTable,
    d_assumed: usize,
    t: u32,
    eps: f64,
    tol: f64,
) -> Result<CertificationReport> {
    if t == 0 {
        return Err(Error::InvalidParameter("order t must be >= 1".into()));
    }
    let n = behavior.n_states();
    let a = alpha(eps)?;
    let observed = choose_epsilon(behavior).ok();
    if let Some(obs) = observed {
        if obs > eps + TOL.structural {
            return Err(Error::Infeasible(format!(
                "data show error rate {obs} above the supplied bound {eps}"
            )));
        }
    }
    let s = score(behavior, t, eps)?;
    let a2t = a.powi(2 * t as i32);
    let bound = a2t * quantum_bound(n, d_assumed, t)?;
    let gap = s - bound;
    let mut notes = Vec::new();

    if gap < -tol {
        notes.push(format!(
            "score {s} lies below the dimension-{d_assumed} quantum bound {bound}: the dimension assumption is violated"
        ));
    }
    let design_certified = gap.abs() <= tol;
    if let Some(overlap_sq) = common_overlap_sq(n, d_assumed) {
        let ec = epsilon_critical(overlap_sq.sqrt());
        if eps <= ec {
            notes.push(format!(
                "epsilon {eps:.6} <= critical {ec:.6}: a design with common overlap^2 {overlap_sq:.6} can saturate the bound"
            ));
        } else {
            notes.push(format!(
                "epsilon {eps:.6} > critical {ec:.6}: the bound cannot be saturated at this error rate"
            ));
        }
    }

    let efficiency = certify_efficiency(s, eps, n, d_assumed, t);
    let eta_lower = match &efficiency {
        Ok(cert) => {
            if cert.kind == EfficiencyKind::Optimal {
                notes.push("eta = 1 consistent only at the optimum".into());
            }
            cert.eta_lower
        }
        Err(e) => {
            notes.push(format!("detection efficiency not certified: {e}"));
            0.0
        }
    };
    let min_dimension = dimension_witness(s, eps, n, t)?;

    Ok(CertificationReport {
        n_states: n,
        d_assumed,
        t,
        epsilon_used: eps,
        score: s,
        bound,
        gap,
        design_certified,
        frame_potential_upper: frame_potential_upper(s, eps, t, n)?,
        eta_lower,
        min_dimension,
        nonprojective: None,
        notes,
    })
}

/// Squared overlap shared by the unbiased pairs of a SIC (`N = d^2`) or a
/// complete MUB set (`N = d(d+1)`).
fn common_overlap_sq(n: usize, d: usize) -> Option<f64> {
    if n == d * d {
        Some(1.0 / (d as f64 + 1.0))
    } else if n == d * (d + 1) {
        Some(1.0 / d as f64)
    } else {
        None
    }
}

/// `V_t <= N + 2 S_t^eps / alpha_eps^{2t}`, also valid for the
/// fidelity-based potential of mixed preparations.
pub fn frame_potential_upper(score: f64, eps: f64, t: u32, n_states: usize) -> Result<f64> {
    let a = alpha(eps)?;
    Ok(n_states as f64 + 2.0 * score / a.powi(2 * t as i32))
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidParameter(format!("eta = {eta} outside [0, 1]")));
    }
    Ok(())
}

/// Binomial weights `C(t,n) (1-eta)^{2(t-n)} (eta(2-eta))^n`, `n = 0..=t`.
fn loss_weights(t: u32, eta: f64) -> Vec<f64> {
    let u = eta * (2.0 - eta);
    let v = (1.0 - eta) * (1.0 - eta);
    (0..=t)
        .map(|n| crate::designs::binomial(t as u64, n as u64) as f64 * v.powi((t - n) as i32) * u.powi(n as i32))
        .collect()
}

/// `Q_t^eta = (-N + sum_n C(t,n) (1-eta)^{2(t-n)} eta^n (2-eta)^n J_n) / 2`.
///
/// The weights sum to one, so this is evaluated as `sum_n w_n Q_n`, which
/// reproduces `Q_t` at `eta = 1` and `N(N-1)/2` at `eta = 0` exactly.
pub fn quantum_bound_with_loss(n_states: usize, dim: usize, t: u32, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    if dim < 2 {
        return Err(Error::InvalidParameter("dimension must be >= 2".into()));
    }
    Ok(loss_weights(t, eta)
        .iter()
        .enumerate()
        .map(|(n, w)| {
            let q = quantum_bound(n_states, dim, n as u32)
                .unwrap_or_else(|_| 0.5 * (design_bound_f64(n_states, dim, n as u32) - n_states as f64));
            w * q
        })
        .sum())
}

/// Pair sum `sum_{y1<y2} ((1-eta)^2 + eta(2-eta) F_y^2)^t`, evaluated directly.
pub fn lossy_pair_sum(ens: &StateEnsemble, t: u32, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let table = ens.fidelity_matrix()?;
    let v = (1.0 - eta) * (1.0 - eta);
    let u = eta * (2.0 - eta);
    let mut total = 0.0;
    for j in 0..table.len() {
        for k in j + 1..table.len() {
            total += (v + u * table[j][k] * table[j][k]).powi(t as i32);
        }
    }
    Ok(total)
}

/// The same pair sum through the binomial expansion in frame potentials:
/// `(-N + sum_n C(t,n) (1-eta)^{2(t-n)} (eta(2-eta))^n V_n) / 2`.
pub fn lossy_pair_sum_expanded(ens: &StateEnsemble, t: u32, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let table = ens.fidelity_matrix()?;
    let sum: f64 = loss_weights(t, eta)
        .iter()
        .enumerate()
        .map(|(n, w)| w * crate::designs::frame_potential_from_fidelities(&table, n as u32))
        .sum();
    Ok(0.5 * (sum - ens.len() as f64))
}

/// Lower bound `alpha_eps^2 ((1-eta)^2 + eta(2-eta) s^2)` on
/// `(alpha_eps - p_usd)^2` for a lossy detector.
pub fn loss_lemma_rhs(s: f64, eps: f64, eta: f64) -> Result<f64> {
    check_eta(eta)?;
    let a = alpha(eps)?;
    Ok(a * a * ((1.0 - eta).powi(2) + eta * (2.0 - eta) * s * s))
}

/// How the efficiency bound was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EfficiencyKind {
    /// The score is compatible with `eta = 0`.
    Trivial,
    /// Interior root of the positivity polynomial.
    Bounded,
    /// The score sits at the lossless optimum, forcing `eta = 1`.
    Optimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyCertificate {
    pub eta_lower: f64,
    pub kind: EfficiencyKind,
}

/// Smallest `eta` with `S_t^eps - alpha_eps^{2t} Q_t^eta >= 0`.
///
/// The polynomial is non-decreasing in `eta`, so its root is located by
/// bisection.
pub fn certify_efficiency(score: f64, eps: f64, n_states: usize, dim: usize, t: u32) -> Result<EfficiencyCertificate> {
    let a2t = alpha(eps)?.powi(2 * t as i32);
    let positivity = |eta: f64| -> Result<f64> { Ok(score - a2t * quantum_bound_with_loss(n_states, dim, t, eta)?) };
    let at_one = positivity(1.0)?;
    if at_one < -TOL.structural {
        return Err(Error::Infeasible(format!(
            "score {score} below the lossless quantum bound {}",
            score - at_one
        )));
    }
    if positivity(0.0)? >= 0.0 {
        return Ok(EfficiencyCertificate {
            eta_lower: 0.0,
            kind: EfficiencyKind::Trivial,
        });
    }
    if at_one <= TOL.structural * (1.0 + score.abs()) {
        return Ok(EfficiencyCertificate {
            eta_lower: 1.0,
            kind: EfficiencyKind::Optimal,
        });
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > TOL.bisection {
        let mid = 0.5 * (lo + hi);
        if positivity(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(EfficiencyCertificate {
        eta_lower: 0.5 * (lo + hi),
        kind: EfficiencyKind::Bounded,
    })
}

/// Closed-form efficiency bound for SIC-sized ensembles (`N = d^2`, `t = 2`).
pub fn sic_efficiency_bound(score: f64, eps: f64, dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::InvalidParameter("dimension must be >= 2".into()));
    }
    let a = alpha(eps)?;
    let d = dim as f64;
    let base = a * d * (d - 1.0);
    let radicand = 2f64.sqrt() * ((d * d - 1.0) * score).max(0.0).sqrt() - a * a * d * (d - 1.0);
    if radicand < -TOL.structural * a * a * d * d {
        return Err(Error::Infeasible(format!(
            "score {score} lies below the SIC quantum bound (radicand {radicand})"
        )));
    }
    let eta = (base - (d - 1.0).sqrt() * radicand.max(0.0).sqrt()) / base;
    Ok(eta.clamp(0.0, 1.0))
}

/// Smallest dimension `d >= 2` whose quantum bound admits the score.
pub fn dimension_witness(score: f64, eps: f64, n_states: usize, t: u32) -> Result<usize> {
    let a2t = alpha(eps)?.powi(2 * t as i32);
    let mut d = 2;
    loop {
        let q = 0.5 * (design_bound_f64(n_states, d, t) - n_states as f64);
        if a2t * q.max(0.0) <= score + TOL.structural || q <= 0.0 {
            return Ok(d);
        }
        d += 1;
    }
}
