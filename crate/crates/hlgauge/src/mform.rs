//! Multilinear forms on finite-dimensional `ℓ_p` spaces.
//!
//! A form is a coefficient tensor plus domain exponents; its operator norm
//! over the product of unit balls is estimated from below by alternating
//! dual ascent, where each slot update is the closed-form Hölder maximizer.
//! Exact oracles cover the special cases: sign enumeration for real forms
//! on `ℓ_∞` balls, and the spectral norm for bilinear `p = (2,2)`.
//!
//! Every estimate carries a feasible witness; `|T(witness)| = value` by
//! construction, so values are certified lower bounds of the true norm.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::duality::{
    dual_align, weak_p_norm, DualityError, VectorSequence, WeakNormEstimate, WeakNormOptions,
};
use crate::exponents::{Exponent, ExponentVector};
use crate::mixed::{lp_norm_moduli, mixed_norm_of_moduli, NormError};
use crate::numfmt::g17;
use crate::scalar::{Scalar, ScalarField, ScalarSum};
use crate::tensor::{validate_shape, MultiIndexTensor, TensorData, TensorError, TensorIoError};

#[derive(Debug, Error)]
pub enum MformError {
    #[error("domain has {domain} exponents but the coefficient tensor has order {order}")]
    OrderMismatch { domain: usize, order: usize },
    #[error("slot {slot} expects a vector of length {expected}, got {got}")]
    SlotDim {
        slot: usize,
        expected: usize,
        got: usize,
    },
    #[error("slot {slot}: sequence ambient l_{ambient} does not match the form domain l_{domain}")]
    AmbientMismatch {
        slot: usize,
        ambient: String,
        domain: String,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    #[error(transparent)]
    Duality(#[from] DualityError),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("malformed form JSON: {0}")]
    Json(String),
    #[error(transparent)]
    TensorIo(#[from] TensorIoError),
}

/// Scalar-valued multilinear form `T(x_1, …, x_m)` with `x_k ∈ ℓ_{p_k}^{n_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilinearForm<S: Scalar> {
    coeffs: MultiIndexTensor<S>,
    domain_p: ExponentVector,
}

impl<S: Scalar> MultilinearForm<S> {
    pub fn new(
        coeffs: MultiIndexTensor<S>,
        domain_p: ExponentVector,
    ) -> Result<Self, MformError> {
        if domain_p.len() != coeffs.order() {
            return Err(MformError::OrderMismatch {
                domain: domain_p.len(),
                order: coeffs.order(),
            });
        }
        Ok(MultilinearForm { coeffs, domain_p })
    }

    pub fn coeffs(&self) -> &MultiIndexTensor<S> {
        &self.coeffs
    }

    pub fn domain_p(&self) -> &ExponentVector {
        &self.domain_p
    }

    pub fn order(&self) -> usize {
        self.coeffs.order()
    }

    pub fn shape(&self) -> &[usize] {
        self.coeffs.shape()
    }

    fn check_args(&self, xs: &[Vec<S>]) -> Result<(), MformError> {
        if xs.len() != self.order() {
            return Err(MformError::OrderMismatch {
                domain: xs.len(),
                order: self.order(),
            });
        }
        for (slot, (x, &n)) in xs.iter().zip(self.shape()).enumerate() {
            if x.len() != n {
                return Err(MformError::SlotDim {
                    slot: slot + 1,
                    expected: n,
                    got: x.len(),
                });
            }
        }
        Ok(())
    }

    /// `Σ_j coeffs[j] Π_k x_k[j_k]`, contracted slot by slot from the last
    /// axis with compensated sums.
    pub fn evaluate(&self, xs: &[Vec<S>]) -> Result<S, MformError> {
        self.check_args(xs)?;
        let mut values = self.coeffs.entries().to_vec();
        for k in (0..self.order()).rev() {
            values = contract_last(&values, self.shape()[k], &xs[k]);
        }
        debug_assert_eq!(values.len(), 1);
        Ok(values[0])
    }

    /// `|T(x)|`, the ascent objective shared by all estimators.
    pub fn objective(&self, xs: &[Vec<S>]) -> Result<f64, MformError> {
        Ok(self.evaluate(xs)?.modulus())
    }

    /// The linear functional on slot `k` (0-based) obtained by freezing all
    /// other slots: `ψ[i] = T(x_1, …, e_i at slot k, …, x_m)`.
    pub fn contract_except(&self, xs: &[Vec<S>], k: usize) -> Result<Vec<S>, MformError> {
        self.check_args(xs)?;
        let shape = self.shape();
        let mut values = self.coeffs.entries().to_vec();
        for j in (k + 1..self.order()).rev() {
            values = contract_last(&values, shape[j], &xs[j]);
        }
        for j in 0..k {
            values = contract_first(&values, shape[j], &xs[j]);
        }
        debug_assert_eq!(values.len(), shape[k]);
        Ok(values)
    }
}

fn contract_last<S: Scalar>(values: &[S], n: usize, x: &[S]) -> Vec<S> {
    values
        .chunks_exact(n)
        .map(|chunk| {
            let mut acc = ScalarSum::new();
            for (a, b) in chunk.iter().zip(x) {
                acc.add(*a * *b);
            }
            acc.value()
        })
        .collect()
}

fn contract_first<S: Scalar>(values: &[S], n: usize, x: &[S]) -> Vec<S> {
    let block = values.len() / n;
    (0..block)
        .map(|b| {
            let mut acc = ScalarSum::new();
            for (i, xi) in x.iter().enumerate() {
                acc.add(*xi * values[i * block + b]);
            }
            acc.value()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Alternating,
    SignEnum,
    Svd,
    Grid,
}

impl EstimateMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimateMethod::Alternating => "alternating",
            EstimateMethod::SignEnum => "sign_enum",
            EstimateMethod::Svd => "svd",
            EstimateMethod::Grid => "grid",
        }
    }
}

impl std::fmt::Display for EstimateMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A certified lower bound of `‖T‖` with the witness that attains it.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEstimate<S: Scalar> {
    pub value: f64,
    /// One vector per slot, each within its closed unit ball.
    pub witness: Vec<Vec<S>>,
    pub method: EstimateMethod,
    pub restarts_used: usize,
    pub iterations: usize,
    /// Set when a sweep hit a zero functional or the tensor is zero.
    pub degenerate: bool,
}

impl<S: Scalar> NormEstimate<S> {
    /// Canonical JSON with `%.17g` floats; complex entries as `[re,im]`.
    pub fn to_json_string(&self) -> String {
        let mut out = String::from("{\"method\":\"");
        out.push_str(self.method.as_str());
        out.push_str("\",\"value\":");
        out.push_str(&g17(self.value));
        out.push_str(",\"witness\":[");
        for (k, x) in self.witness.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push('[');
            for (i, z) in x.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match S::FIELD {
                    ScalarField::Real => out.push_str(&g17(z.real_part())),
                    ScalarField::Complex => {
                        out.push('[');
                        out.push_str(&g17(z.real_part()));
                        out.push(',');
                        out.push_str(&g17(z.imag_part()));
                        out.push(']');
                    }
                }
            }
            out.push(']');
        }
        out.push_str("],\"iterations\":");
        out.push_str(&self.iterations.to_string());
        out.push_str(",\"restarts_used\":");
        out.push_str(&self.restarts_used.to_string());
        out.push_str(",\"degenerate\":");
        out.push_str(if self.degenerate { "true" } else { "false" });
        out.push('}');
        out
    }
}

/// Options for [`norm_alternating`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            restarts: 20,
            max_iters: 500,
            tol: 1e-10,
            seed: 0,
        }
    }
}

struct RestartOutcome<S: Scalar> {
    value: f64,
    witness: Vec<Vec<S>>,
    sweeps: usize,
    degenerate: bool,
}

fn run_restart<S: Scalar>(
    form: &MultilinearForm<S>,
    opts: &AscentOptions,
    restart: usize,
) -> RestartOutcome<S> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(restart as u64);
    let m = form.order();
    let mut xs: Vec<Vec<S>> = Vec::with_capacity(m);
    for (k, &n) in form.shape().iter().enumerate() {
        let mut x: Vec<S> = (0..n).map(|_| S::sample_gaussian(&mut rng)).collect();
        let p = form.domain_p().get(k + 1).expect("validated length");
        let moduli: Vec<f64> = x.iter().map(|z| z.modulus()).collect();
        let norm = lp_norm_moduli(&moduli, p);
        if norm == 0.0 {
            x = vec![S::zero(); n];
            x[0] = S::one();
        } else {
            for z in x.iter_mut() {
                *z = z.scale(1.0 / norm);
            }
        }
        xs.push(x);
    }
    let mut degenerate = false;
    let mut prev = form.objective(&xs).expect("validated dims");
    let mut sweeps = 0usize;
    for _ in 0..opts.max_iters {
        sweeps += 1;
        for k in 0..m {
            let psi = form.contract_except(&xs, k).expect("validated dims");
            if psi.iter().all(|z| z.modulus() == 0.0) {
                degenerate = true;
                continue;
            }
            let p = form.domain_p().get(k + 1).expect("validated length");
            xs[k] = dual_align(&psi, p).expect("psi is nonzero").vector;
        }
        let obj = form.objective(&xs).expect("validated dims");
        debug_assert!(
            obj >= prev * (1.0 - 1e-12) - 1e-300,
            "ascent must be monotone per sweep: {prev} -> {obj}"
        );
        let gained = obj - prev;
        prev = obj;
        if gained <= opts.tol * obj.max(1e-300) {
            break;
        }
    }
    RestartOutcome {
        value: prev,
        witness: xs,
        sweeps,
        degenerate,
    }
}

/// Alternating dual ascent from seeded random starts. Restarts run in
/// parallel and merge deterministically: highest value wins, ties break to
/// the lowest restart id.
pub fn norm_alternating<S: Scalar>(
    form: &MultilinearForm<S>,
    opts: &AscentOptions,
) -> NormEstimate<S> {
    if form.coeffs().entries().iter().all(|z| z.modulus() == 0.0) {
        return NormEstimate {
            value: 0.0,
            witness: form.shape().iter().map(|&n| vec![S::zero(); n]).collect(),
            method: EstimateMethod::Alternating,
            restarts_used: 0,
            iterations: 0,
            degenerate: true,
        };
    }
    let restarts = opts.restarts.max(1);
    let outcomes: Vec<RestartOutcome<S>> = (0..restarts)
        .into_par_iter()
        .map(|r| run_restart(form, opts, r))
        .collect();
    let iterations = outcomes.iter().map(|o| o.sweeps).sum();
    let best = outcomes
        .into_iter()
        .reduce(|best, cand| if cand.value > best.value { cand } else { best })
        .expect("at least one restart");
    NormEstimate {
        value: best.value,
        witness: best.witness,
        method: EstimateMethod::Alternating,
        restarts_used: restarts,
        iterations,
        degenerate: best.degenerate,
    }
}

/// Exhaustive maximum of `|T(x)|` over sign vectors `x_k ∈ {−1,1}^{n_k}`.
/// Exact for real forms on `ℓ_∞` balls, where the maximum of the convex
/// function `|T|` over a product of cubes is attained at a vertex.
pub fn norm_sign_enum<S: Scalar>(form: &MultilinearForm<S>) -> Result<NormEstimate<S>, MformError> {
    if S::FIELD != ScalarField::Real {
        return Err(MformError::Unsupported(
            "sign enumeration requires real scalars".to_string(),
        ));
    }
    if form
        .domain_p()
        .iter()
        .any(|p| !matches!(p, Exponent::Infinity))
    {
        return Err(MformError::Unsupported(
            "sign enumeration requires all domain exponents infinite".to_string(),
        ));
    }
    let total_bits: usize = form.shape().iter().sum();
    if total_bits > 24 {
        return Err(MformError::SizeGuard(format!(
            "sign enumeration over 2^{total_bits} vertices exceeds the 2^24 guard"
        )));
    }
    let shape = form.shape().to_vec();
    let mut best_value = -1.0f64;
    let mut best_witness: Vec<Vec<S>> = Vec::new();
    let mut xs: Vec<Vec<S>> = shape.iter().map(|&n| vec![S::one(); n]).collect();
    let count: u64 = 1u64 << total_bits;
    for pattern in 0..count {
        let mut bits = pattern;
        for (k, &n) in shape.iter().enumerate() {
            for i in 0..n {
                xs[k][i] = if bits & 1 == 0 {
                    S::one()
                } else {
                    S::from_real(-1.0)
                };
                bits >>= 1;
            }
        }
        let value = form.objective(&xs)?;
        if value > best_value {
            best_value = value;
            best_witness = xs.clone();
        }
    }
    Ok(NormEstimate {
        value: best_value,
        witness: best_witness,
        method: EstimateMethod::SignEnum,
        restarts_used: 1,
        iterations: count as usize,
        degenerate: false,
    })
}

/// Scalars whose bilinear `p = (2,2)` norm has a singular-value oracle.
pub trait SvdScalar: Scalar {
    /// Top singular triple of the row-major `rows × cols` matrix: returns
    /// `(σ_max, x, y)` with `|Σ_ij a_ij x_i y_j| = σ_max`.
    fn svd_top(rows: usize, cols: usize, entries: &[Self]) -> (f64, Vec<Self>, Vec<Self>);
}

impl SvdScalar for f64 {
    fn svd_top(rows: usize, cols: usize, entries: &[Self]) -> (f64, Vec<f64>, Vec<f64>) {
        let m = DMatrix::from_row_slice(rows, cols, entries);
        let svd = m.svd(true, true);
        let (idx, sigma) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        let x: Vec<f64> = u.column(idx).iter().copied().collect();
        let y: Vec<f64> = v_t.row(idx).iter().copied().collect();
        (sigma, x, y)
    }
}

impl SvdScalar for Complex64 {
    fn svd_top(rows: usize, cols: usize, entries: &[Self]) -> (f64, Vec<Complex64>, Vec<Complex64>) {
        let m = DMatrix::from_row_slice(rows, cols, entries);
        let svd = m.svd(true, true);
        let (idx, sigma) = svd
            .singular_values
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            });
        let u = svd.u.expect("u requested");
        let v_t = svd.v_t.expect("v_t requested");
        // A = UΣV^H and T(x,y) = x^T A y, so x = conj(u_1), y = conj(row of V^H).
        let x: Vec<Complex64> = u.column(idx).iter().map(|z| z.conj()).collect();
        let y: Vec<Complex64> = v_t.row(idx).iter().map(|z| z.conj()).collect();
        (sigma, x, y)
    }
}

/// Exact spectral-norm oracle for bilinear forms with `p = (2,2)`.
pub fn norm_svd_bilinear<S: SvdScalar>(
    form: &MultilinearForm<S>,
) -> Result<NormEstimate<S>, MformError> {
    if form.order() != 2 {
        return Err(MformError::Unsupported(format!(
            "svd oracle requires a bilinear form, got order {}",
            form.order()
        )));
    }
    let two = Exponent::from_integer(2).unwrap();
    if form.domain_p().iter().any(|p| *p != two) {
        return Err(MformError::Unsupported(
            "svd oracle requires domain exponents (2,2)".to_string(),
        ));
    }
    let (rows, cols) = (form.shape()[0], form.shape()[1]);
    let (_sigma, x, y) = S::svd_top(rows, cols, form.coeffs().entries());
    let witness = vec![x, y];
    let value = form.objective(&witness)?;
    Ok(NormEstimate {
        value,
        witness,
        method: EstimateMethod::Svd,
        restarts_used: 1,
        iterations: 1,
        degenerate: false,
    })
}

/// Options for [`summing_norm_probe`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SummingProbeOptions {
    pub weak: WeakNormOptions,
}

/// Lower-bound probe of a summing norm over sampled sequence tuples.
#[derive(Debug, Clone, PartialEq)]
pub struct SummingProbeResult {
    /// Max quotient over non-degenerate samples; 0 when all were skipped.
    pub value: f64,
    /// Quotient per sample; `None` marks a skipped degenerate sample.
    pub per_sample: Vec<Option<f64>>,
    pub skipped: usize,
    pub best_sample: Option<usize>,
}

/// One sampled tuple of vector sequences, one sequence per slot.
pub type SequenceTuple<S> = Vec<VectorSequence<S>>;

/// Estimates `π_{(s;p)}(T)` from below over the given finite family:
/// for each tuple, `mixed_norm((T(x^1_{j_1},…,x^m_{j_m}))_j, s)` divided by
/// `Π_k` the weak-`ℓ_{p_k}` norm of the k-th sequence. Zero-denominator
/// samples are skipped and counted.
pub fn summing_norm_probe<S: Scalar>(
    form: &MultilinearForm<S>,
    s: &ExponentVector,
    p: &ExponentVector,
    samples: &[SequenceTuple<S>],
    opts: &SummingProbeOptions,
) -> Result<SummingProbeResult, MformError> {
    let m = form.order();
    if s.len() != m || p.len() != m {
        return Err(MformError::OrderMismatch {
            domain: s.len().min(p.len()),
            order: m,
        });
    }
    let mut per_sample = Vec::with_capacity(samples.len());
    let mut skipped = 0usize;
    let mut best: Option<(usize, f64)> = None;
    for (sample_idx, tuple) in samples.iter().enumerate() {
        if tuple.len() != m {
            return Err(MformError::OrderMismatch {
                domain: tuple.len(),
                order: m,
            });
        }
        for (k, seq) in tuple.iter().enumerate() {
            if seq.dim() != form.shape()[k] {
                return Err(MformError::SlotDim {
                    slot: k + 1,
                    expected: form.shape()[k],
                    got: seq.dim(),
                });
            }
            let domain = form.domain_p().get(k + 1).expect("validated length");
            if seq.ambient_q() != domain {
                return Err(MformError::AmbientMismatch {
                    slot: k + 1,
                    ambient: seq.ambient_q().to_string(),
                    domain: domain.to_string(),
                });
            }
        }
        // Denominator: product of weak norms.
        let mut denominator = 1.0f64;
        let mut zero_denominator = false;
        for (k, seq) in tuple.iter().enumerate() {
            let pk = p.get(k + 1).expect("validated length");
            let est: WeakNormEstimate<S> = weak_p_norm(seq, pk, &opts.weak)?;
            if est.value == 0.0 {
                zero_denominator = true;
                break;
            }
            denominator *= est.value;
        }
        if zero_denominator {
            per_sample.push(None);
            skipped += 1;
            continue;
        }
        // Numerator: mixed s-norm of the image tensor.
        let counts: Vec<usize> = tuple.iter().map(|seq| seq.len()).collect();
        validate_shape(&counts)?;
        let mut moduli = Vec::with_capacity(counts.iter().product());
        let mut args: Vec<Vec<S>> = tuple.iter().map(|seq| seq.vectors()[0].clone()).collect();
        crate::tensor::for_each_index(&counts, |idx| {
            for (k, &j) in idx.iter().enumerate() {
                args[k] = tuple[k].vectors()[j].clone();
            }
            let value = form.evaluate(&args).expect("validated dims").modulus();
            moduli.push(value);
        });
        let numerator = mixed_norm_of_moduli(&moduli, &counts, s);
        let quotient = numerator / denominator;
        per_sample.push(Some(quotient));
        if best.map_or(true, |(_, bv)| quotient > bv) {
            best = Some((sample_idx, quotient));
        }
    }
    Ok(SummingProbeResult {
        value: best.map_or(0.0, |(_, v)| v),
        per_sample,
        skipped,
        best_sample: best.map(|(i, _)| i),
    })
}

/// Field-erased multilinear form as read from JSON.
#[derive(Debug, Clone, PartialEq)]
pub enum FormData {
    Real(MultilinearForm<f64>),
    Complex(MultilinearForm<Complex64>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFormJson {
    tensor: serde_json::Value,
    domain_p: ExponentVector,
}

impl FormData {
    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self, MformError> {
        let raw: RawFormJson =
            serde_json::from_slice(bytes).map_err(|e| MformError::Json(e.to_string()))?;
        let tensor_bytes =
            serde_json::to_vec(&raw.tensor).map_err(|e| MformError::Json(e.to_string()))?;
        let tensor = TensorData::from_json_bytes(&tensor_bytes)?;
        match tensor {
            TensorData::Real(t) => Ok(FormData::Real(MultilinearForm::new(t, raw.domain_p)?)),
            TensorData::Complex(t) => {
                Ok(FormData::Complex(MultilinearForm::new(t, raw.domain_p)?))
            }
        }
    }

    pub fn to_json_string(&self) -> String {
        let (tensor_json, domain_p) = match self {
            FormData::Real(f) => (
                TensorData::Real(f.coeffs().clone()).to_json_string(),
                f.domain_p(),
            ),
            FormData::Complex(f) => (
                TensorData::Complex(f.coeffs().clone()).to_json_string(),
                f.domain_p(),
            ),
        };
        let domain = serde_json::to_string(domain_p).expect("string array");
        format!("{{\"tensor\":{tensor_json},\"domain_p\":{domain}}}")
    }
}
