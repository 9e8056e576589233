//! Comparison tolerances shared by every module.
//!
//! Numerical checks compare against one of these fields rather than a local
//! literal, so a single record governs how strict the whole toolkit is.

/// Tolerance record. [`TOL`] holds the defaults used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Normalization, Hermiticity, POVM completeness and probability range.
    pub structural: f64,
    /// Eigen-decomposition residuals and orthonormality.
    pub spectral: f64,
    /// Inner-product magnitude below which two states count as orthogonal.
    pub orthogonality: f64,
    /// Largest admissible `V_t - J_t` for a design verdict.
    pub design: f64,
    /// Largest admissible score gap for a saturation verdict.
    pub saturation: f64,
    /// Absolute width of the bracket returned by bisection root finding.
    pub bisection: f64,
}

pub const TOL: Tolerances = Tolerances {
    structural: 1e-9,
    spectral: 1e-8,
    orthogonality: 1e-9,
    design: 1e-7,
    saturation: 1e-6,
    bisection: 1e-10,
};

impl Default for Tolerances {
    fn default() -> Self {
        TOL
    }
}
