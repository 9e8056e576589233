//! Dense complex linear algebra for small Hilbert spaces.
//!
//! Everything here targets dimensions up to about 16: vectors and matrices are
//! plain row-major `Vec<Complex64>` buffers, and the Hermitian eigensolver is a
//! cyclic complex Jacobi iteration.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol::TOL;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// A complex column vector.
#[derive(Clone, PartialEq)]
pub struct CVec {
    entries: Vec<Complex64>,
}

impl CVec {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self { entries }
    }

    pub fn from_real(entries: &[f64]) -> Self {
        Self::new(entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(vec![ZERO; dim])
    }

    /// Computational basis vector `|k>` of dimension `dim`.
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.entries[k] = ONE;
        v
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [Complex64] {
        &mut self.entries
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Returns the unit vector along `self`; fails on the zero vector.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n.is_nan() || n <= 0.0 || !n.is_finite() {
            return Err(Error::InvalidState(format!("cannot normalize vector of norm {n}")));
        }
        Ok(self.scale(Complex64::new(1.0 / n, 0.0)))
    }

    /// True when the squared norm is within the structural tolerance of one.
    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= TOL.structural
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.entries.iter().map(|&z| z * c).collect())
    }

    /// `self + c * other`, assuming equal dimensions.
    pub fn axpy(&self, c: Complex64, other: &CVec) -> Self {
        Self::new(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| a + c * b)
                .collect(),
        )
    }

    /// `<self|other>` without a dimension check.
    pub(crate) fn dot(&self, other: &CVec) -> Complex64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Rank-one operator `|self><self|`.
    pub fn projector(&self) -> CMat {
        self.outer(self)
    }

    /// `|self><other|`.
    pub fn outer(&self, other: &CVec) -> CMat {
        let d = self.dim();
        CMat::from_fn(d, |i, j| self.entries[i] * other.entries[j].conj())
    }
}

impl fmt::Debug for CVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries.iter()).finish()
    }
}

impl Index<usize> for CVec {
    type Output = Complex64;

    fn index(&self, i: usize) -> &Complex64 {
        &self.entries[i]
    }
}

/// `<u|v>`: conjugate-linear in `u`, linear in `v`.
pub fn inner(u: &CVec, v: &CVec) -> Result<Complex64> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.dim(),
            found: v.dim(),
        });
    }
    Ok(u.dot(v))
}

/// A square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { ONE } else { ZERO })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from its rows; every row must have `rows.len()` entries.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { dim, data })
    }

    pub fn diag(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                ZERO
            }
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn apply(&self, v: &CVec) -> CVec {
        CVec::new(
            (0..self.dim)
                .map(|i| self.row(i).iter().zip(v.entries()).map(|(a, b)| a * b).sum())
                .collect(),
        )
    }

    /// `<v|self|v>`.
    pub fn expectation(&self, v: &CVec) -> Complex64 {
        v.dot(&self.apply(v))
    }

    /// Largest entrywise deviation `|A[i][j] - conj(A[j][i])|`.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= TOL.structural
    }

    /// `(A + A^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| 0.5 * (self[(i, j)] + self[(j, i)].conj()))
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn herm_eig(&self) -> Result<HermitianEigen> {
        herm_eig(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(herm_eig(self)?.values[0])
    }

    /// Checks the density-matrix invariants: Hermitian, unit trace, PSD.
    pub fn validate_density(&self) -> Result<()> {
        if !self.is_hermitian() {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (deviation {:.3e})",
                self.hermiticity_deviation()
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > TOL.structural || tr.im.abs() > TOL.structural {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} differs from 1")));
        }
        let min = self.min_eigenvalue()?;
        if min < -TOL.structural {
            return Err(Error::InvalidDensityMatrix(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// Checks that `self` is Hermitian and positive semidefinite.
    pub fn validate_effect(&self) -> Result<()> {
        if !self.is_hermitian() {
            return Err(Error::InvalidPovm(format!(
                "element not Hermitian (deviation {:.3e})",
                self.hermiticity_deviation()
            )));
        }
        let min = self.min_eigenvalue()?;
        if min < -TOL.structural {
            return Err(Error::InvalidPovm(format!("element has eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    /// `f(A) = V f(Lambda) V^dagger` for Hermitian `A`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let eig = herm_eig(self)?;
        let mut out = Self::zeros(self.dim);
        for (&lambda, v) in eig.values.iter().zip(&eig.vectors) {
            let w = f(lambda);
            if w == 0.0 {
                continue;
            }
            out = &out + &v.projector().scale(w);
        }
        Ok(out)
    }

    /// Square root of a positive semidefinite matrix; small negative
    /// eigenvalues are treated as zero.
    pub fn psd_sqrt(&self) -> Result<Self> {
        self.map_spectrum(|x| x.max(0.0).sqrt())
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list()
            .entries((0..self.dim).map(|i| self.row(i)))
            .finish()
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &CMat {
    type Output = CMat;

    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        CMat {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;

    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        CMat {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMat {
    type Output = CMat;

    fn mul(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let d = self.dim;
        let mut out = CMat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        out
    }
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, `vectors[k]` belonging to `values[k]`.
    pub vectors: Vec<CVec>,
}

impl HermitianEigen {
    /// `sum_k lambda_k |v_k><v_k|`.
    pub fn reconstruct(&self) -> CMat {
        let d = self.vectors.first().map_or(0, CVec::dim);
        self.values
            .iter()
            .zip(&self.vectors)
            .fold(CMat::zeros(d), |acc, (&l, v)| &acc + &v.projector().scale(l))
    }
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
pub fn herm_eig(a: &CMat) -> Result<HermitianEigen> {
    let deviation = a.hermiticity_deviation();
    if deviation > TOL.structural {
        return Err(Error::NotHermitian { deviation });
    }
    let n = a.dim();
    let mut m = a.hermitian_part();
    for i in 0..n {
        m[(i, i)].im = 0.0;
    }
    let mut v = CMat::identity(n);

    let scale: f64 = m.data.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt();
    let threshold = f64::EPSILON * scale.max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= threshold {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= threshold * 1e-3 {
                    continue;
                }
                let phase = apq / r;
                let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = [[c, s e^{i phi}], [-s e^{-i phi}, c]] on the (p, q) plane.
                let gpq = phase * s;
                let gqp = -phase.conj() * s;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * c + mkq * gqp;
                    m[(k, q)] = mkp * gpq + mkq * c;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = mpk * c + mqk * gqp.conj();
                    m[(q, k)] = mpk * gpq.conj() + mqk * c;
                }
                m[(p, q)] = ZERO;
                m[(q, p)] = ZERO;
                m[(p, p)].im = 0.0;
                m[(q, q)].im = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c + vkq * gqp;
                    v[(k, q)] = vkp * gpq + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let vectors = order
        .iter()
        .map(|&j| CVec::new((0..n).map(|i| v[(i, j)]).collect()))
        .collect();
    Ok(HermitianEigen { values, vectors })
}

/// Root fidelity `tr sqrt(sqrt(rho) sigma sqrt(rho))`, clamped to `[0, 1]`.
///
/// On pure states this is `|<phi|psi>|`. Evaluated as the trace norm of
/// `sqrt(rho) sqrt(sigma)`, which keeps rank-deficient inputs accurate and the
/// result symmetric to round-off.
pub fn fidelity(rho: &CMat, sigma: &CMat) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: sigma.dim(),
        });
    }
    rho.validate_density()?;
    sigma.validate_density()?;
    let product = &density_sqrt(rho)? * &density_sqrt(sigma)?;
    Ok(trace_norm(&product)?.clamp(0.0, 1.0))
}

/// Square root of a density matrix with eigenvalues at round-off level set
/// to zero, so that exact rank deficiency survives the square root.
fn density_sqrt(rho: &CMat) -> Result<CMat> {
    let floor = 16.0 * rho.dim() as f64 * f64::EPSILON;
    rho.map_spectrum(|x| if x > floor { x.sqrt() } else { 0.0 })
}

/// Sum of singular values, read off the spectrum of `[[0, A], [A^dagger, 0]]`
/// (eigenvalues `+-sigma_k`).
fn trace_norm(a: &CMat) -> Result<f64> {
    let d = a.dim();
    let block = CMat::from_fn(2 * d, |i, j| match (i < d, j < d) {
        (true, false) => a[(i, j - d)],
        (false, true) => a[(j, i - d)].conj(),
        _ => Complex64::new(0.0, 0.0),
    });
    let eig = herm_eig(&block)?;
    Ok(0.5 * eig.values.iter().map(|x| x.abs()).sum::<f64>())
}

/// Born-rule probability `Re tr(rho E)`.
///
/// Values within the structural tolerance of `[0, 1]` are clamped onto it;
/// anything further out is an error.
pub fn born(rho: &CMat, effect: &CMat) -> Result<f64> {
    if rho.dim() != effect.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: effect.dim(),
        });
    }
    let d = rho.dim();
    let mut p = 0.0;
    for i in 0..d {
        for k in 0..d {
            p += (rho[(i, k)] * effect[(k, i)]).re;
        }
    }
    clamp_probability(p)
}

/// Born-rule probability `<psi|E|psi>` for a pure state.
pub fn born_pure(psi: &CVec, effect: &CMat) -> Result<f64> {
    if psi.dim() != effect.dim() {
        return Err(Error::DimensionMismatch {
            expected: psi.dim(),
            found: effect.dim(),
        });
    }
    clamp_probability(effect.expectation(psi).re)
}

pub(crate) fn clamp_probability(p: f64) -> Result<f64> {
    if !p.is_finite() || !(-TOL.structural..=1.0 + TOL.structural).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    Ok(p.clamp(0.0, 1.0))
}
