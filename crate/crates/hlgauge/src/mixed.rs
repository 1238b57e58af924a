//! Anisotropic mixed norms.
//!
//! `mixed_norm` evaluates the nested norm where index `j_k` carries exponent
//! `p_k`, innermost sum over `j_m`. Consecutive axes with equal exponents
//! are flattened into one flat norm first; that reassociation is exact and
//! makes the all-equal case agree bit for bit with the flat norm of the
//! entry list.

use thiserror::Error;

use crate::accum::NeumaierSum;
use crate::exponents::{Exponent, ExponentVector};
use crate::scalar::Scalar;
use crate::tensor::MultiIndexTensor;

/// Exponent assignment for a mixed norm; entry `k` applies to index `j_k`.
pub type MixedNormSpec = ExponentVector;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NormError {
    #[error("spec has {spec} exponents but the tensor has order {order}")]
    OrderMismatch { spec: usize, order: usize },
    #[error("expected a matrix (order 2), got order {0}")]
    NotAMatrix(usize),
    #[error("exponent out of range: {0}")]
    ExponentRange(String),
    #[error("componentwise comparison failed: {0}")]
    ComparisonFailed(String),
}

/// `ℓ_p` norm of a block of nonnegative values, scaled to avoid overflow.
pub fn lp_norm_moduli(values: &[f64], p: &Exponent) -> f64 {
    match p {
        Exponent::Infinity => values.iter().copied().fold(0.0, f64::max),
        Exponent::Finite(_) => {
            let p = p.as_f64();
            let max = values.iter().copied().fold(0.0, f64::max);
            if max == 0.0 {
                return 0.0;
            }
            let mut acc = NeumaierSum::new();
            for &v in values {
                acc.add((v / max).powf(p));
            }
            max * acc.value().powf(1.0 / p)
        }
    }
}

/// Groups consecutive equal exponents from the innermost axis outward,
/// returning `(exponent, block_len)` pairs in reduction order.
fn reduction_plan<'a>(shape: &[usize], spec: &'a ExponentVector) -> Vec<(&'a Exponent, usize)> {
    let exps = spec.entries();
    let mut plan: Vec<(&Exponent, usize)> = Vec::new();
    for axis in (0..shape.len()).rev() {
        match plan.last_mut() {
            Some((e, len)) if *e == &exps[axis] => *len *= shape[axis],
            _ => plan.push((&exps[axis], shape[axis])),
        }
    }
    plan
}

/// Nested mixed norm of the tensor entries' moduli.
pub fn mixed_norm<S: Scalar>(
    t: &MultiIndexTensor<S>,
    spec: &MixedNormSpec,
) -> Result<f64, NormError> {
    if spec.len() != t.order() {
        return Err(NormError::OrderMismatch {
            spec: spec.len(),
            order: t.order(),
        });
    }
    Ok(mixed_norm_of_moduli(&t.moduli(), t.shape(), spec))
}

/// Mixed norm over a row-major modulus array; callers guarantee
/// `values.len() == Π shape` and `shape.len() == spec.len()`.
pub fn mixed_norm_of_moduli(values: &[f64], shape: &[usize], spec: &MixedNormSpec) -> f64 {
    debug_assert_eq!(values.len(), shape.iter().product::<usize>());
    debug_assert_eq!(shape.len(), spec.len());
    let plan = reduction_plan(shape, spec);
    let mut current: Vec<f64> = values.to_vec();
    for (p, block) in plan {
        if current.len() == block {
            return lp_norm_moduli(&current, p);
        }
        current = current.chunks_exact(block).map(|c| lp_norm_moduli(c, p)).collect();
    }
    debug_assert_eq!(current.len(), 1);
    current[0]
}

/// Evaluates both sides of the norm-inclusion inequality `‖·‖_q ≤ ‖·‖_p`
/// for `q ≥ p` componentwise; returns `(val_q, val_p)`.
pub fn norm_monotonicity_gap<S: Scalar>(
    t: &MultiIndexTensor<S>,
    spec_p: &MixedNormSpec,
    spec_q: &MixedNormSpec,
) -> Result<(f64, f64), NormError> {
    if spec_p.len() != t.order() || spec_q.len() != t.order() {
        return Err(NormError::OrderMismatch {
            spec: spec_p.len().max(spec_q.len()),
            order: t.order(),
        });
    }
    let dominates = spec_q
        .dominates(spec_p)
        .map_err(|e| NormError::ComparisonFailed(e.to_string()))?;
    if !dominates {
        return Err(NormError::ComparisonFailed(format!(
            "q = ({spec_q}) does not dominate p = ({spec_p})"
        )));
    }
    Ok((mixed_norm(t, spec_q)?, mixed_norm(t, spec_p)?))
}

/// Evaluates both sides of the Minkowski inequality for a scalar matrix:
/// `lhs = (Σ_i (Σ_j |a_ij|^p)^{q/p})^{1/q}`,
/// `rhs = (Σ_j (Σ_i |a_ij|^q)^{p/q})^{1/p}`.
///
/// Exponents are positive reals with `0 < p ≤ q < ∞`; values below 1 are
/// legitimate here even though they fall outside the summability range.
pub fn minkowski_gap<S: Scalar>(
    a: &MultiIndexTensor<S>,
    p: f64,
    q: f64,
) -> Result<(f64, f64), NormError> {
    if a.order() != 2 {
        return Err(NormError::NotAMatrix(a.order()));
    }
    if !(p > 0.0 && p <= q && q.is_finite()) {
        return Err(NormError::ExponentRange(format!(
            "need 0 < p <= q < inf, got p = {p}, q = {q}"
        )));
    }
    let (rows, cols) = (a.shape()[0], a.shape()[1]);
    let moduli = a.moduli();
    let power_norm = |items: &mut dyn Iterator<Item = f64>, e: f64| -> f64 {
        let values: Vec<f64> = items.collect();
        let max = values.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        let mut acc = NeumaierSum::new();
        for v in &values {
            acc.add((v / max).powf(e));
        }
        max * acc.value().powf(1.0 / e)
    };
    let lhs = power_norm(
        &mut (0..rows).map(|i| {
            power_norm(&mut (0..cols).map(|j| moduli[i * cols + j]), p)
        }),
        q,
    );
    let rhs = power_norm(
        &mut (0..cols).map(|j| {
            power_norm(&mut (0..rows).map(|i| moduli[i * cols + j]), q)
        }),
        p,
    );
    Ok((lhs, rhs))
}
