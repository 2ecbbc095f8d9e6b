use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;
use crate::metric::{FiniteMetricSpace, Partition};
use crate::scalar::Scalar;

/// A measure with each cell's mass moved to the cell representative.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizationResult<S> {
    pub quantized: DiscreteMeasure<S>,
    pub partition: Partition<S>,
    /// Mesh of the partition; an upper bound on `W₁(P, quantized)`.
    pub certified_bound: S,
}

/// Move the mass of every cell to its representative.
pub fn quantize<S: Scalar>(
    p: &DiscreteMeasure<S>,
    partition: &Partition<S>,
) -> Result<QuantizationResult<S>> {
    let covered: usize = partition.cells().iter().map(Vec::len).sum();
    if covered != p.len() {
        return Err(Error::structural(format!(
            "partition covers {covered} points, measure lives on {}",
            p.len()
        )));
    }
    let mut w = vec![S::zero(); p.len()];
    for (cell, &rep) in partition.cells().iter().zip(partition.reps()) {
        w[rep] = p.measure_of(cell)?;
    }
    Ok(QuantizationResult {
        quantized: DiscreteMeasure::from_weights(w, &S::tol(1e-9))?,
        partition: partition.clone(),
        certified_bound: partition.mesh().clone(),
    })
}

/// [`quantize`] against `build_partition(delta)` for each `delta`, which must
/// be positive and strictly decreasing.
pub fn quantization_schedule<S: Scalar>(
    p: &DiscreteMeasure<S>,
    space: &FiniteMetricSpace<S>,
    deltas: &[S],
) -> Result<Vec<QuantizationResult<S>>> {
    if deltas.is_empty() {
        return Err(Error::domain("no quantization levels"));
    }
    if deltas.iter().any(|d| *d <= S::zero()) || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::domain("deltas must be positive and strictly decreasing"));
    }
    deltas
        .iter()
        .map(|d| quantize(p, &space.build_partition(d)?))
        .collect()
}
