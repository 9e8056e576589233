//! Device-independent certification of quantum state designs from
//! unambiguous-discrimination statistics.
//!
//! The crate is layered bottom-up: [`qmath`] supplies the linear algebra,
//! [`designs`] frame potentials and design constructors, [`usd`] the
//! discrimination measurements and the behavior tables they produce,
//! [`certify`] the score and the bounds that turn a behavior into design,
//! efficiency and dimension certificates, and [`projective`] the bound for
//! projective qubit strategies. [`io`] and [`cli`] handle files and the
//! command line.

pub mod certify;
pub mod cli;
pub mod designs;
pub mod error;
pub mod io;
pub mod projective;
pub mod qmath;
pub mod tol;
pub mod usd;

pub use certify::{
    certify_design, certify_design_at, certify_efficiency, dimension_witness, quantum_bound, score,
    sic_efficiency_bound, CertificationReport, EfficiencyCertificate,
};
pub use designs::{design_bound, frame_potential, minimize_frame_potential, State, StateEnsemble};
pub use error::{Error, Result};
pub use qmath::{CMat, CVec};
pub use usd::{simulate_behavior, BehaviorTable, NoiseModel, Outcome, Pair, Povm3, SimulationMode};
