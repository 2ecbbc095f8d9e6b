//! Quantization with certified W₁ error, weak-convergence and Portmanteau
//! diagnostics for measure sequences, and oscillating-subsequence extraction.

mod oscillation;
mod quantize;
mod weak;

pub use oscillation::{
    oscillation_extract, union_set_verdict, verify_witness, Exhaustion, ExhaustionReason,
    OscillationConfig, OscillationOutcome, OscillationWitness, UnionVerdict,
};
pub use quantize::{quantization_schedule, quantize, QuantizationResult};
pub use weak::{
    cone_functions, portmanteau_check, weak_convergence_test, ChargeIntegrator,
    ConvergenceReport, Integrator, PortmanteauReport, Rejection, SetVerdict, TestFunction,
    TestSet,
};
