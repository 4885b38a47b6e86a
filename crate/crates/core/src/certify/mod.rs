//! Uniqueness certification through lifted linear operators.
//!
//! A support (or pair of supports) admits a non-unique measurement exactly
//! when the lifted operator vanishes on some `(x x^*, y y^*)` with `y` not a
//! sign/phase multiple of `x`. [`search_rank_constrained_kernel`] looks for
//! such points; a pass is the absence of a refutation, not a proof.

pub mod basis;
pub mod operator;
pub mod probe;
pub mod search;

pub use basis::{certify_basis, certify_pair, certify_support, BasisCertReport, CertifyConfig, CertifyMode, GenericTrial, PairReport, SupportReport};
pub use operator::{build_complex_pair_operator, build_real_pair_operator, build_real_single_operator, MeasurementOperator, OperatorKind};
pub use probe::{kernel_low_rank_probe, ProbeConfig, ProbeReport};
pub use search::{search_rank_constrained_kernel, search_with_seeds, CertResult, SearchConfig, SeparationObjective, Verdict, ViolationWitness};
