//! Reproducible numerical verification runs.
//!
//! Every op takes a validated config and returns a report whose bytes are a
//! pure function of config and seed: per-trial randomness derives from
//! `(seed, trial index)`, trials may run concurrently without changing
//! results, and escalation only ever raises lower bounds or consults exact
//! oracles. A flagged exceedance survives as a confirmed violation only
//! when an oracle certifies it over complex scalars.

pub mod config;
pub mod kernel;
pub mod report;

pub use config::{ExperimentConfig, ExperimentError, ExperimentKind, TensorFamily, CONFIG_SCHEMA};
pub use kernel::{
    kernel_from_form, measure_selection, regularity_probe, SelectionMeasurement, TabulatedKernel,
    KERNEL_SCHEMA,
};
pub use report::{
    summarize, trials_from_csv_bytes, write_report, ExperimentReport, ReportFormat, ReportSummary,
    TrialOutcome, TrialRecord,
};

use std::cmp::Ordering;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::duality::{VectorSequence, WeakNormOptions};
use crate::exponents::{Exponent, ExponentVector};
use crate::mform::{
    norm_alternating, norm_sign_enum, norm_svd_bilinear, summing_norm_probe, AscentOptions,
    EstimateMethod, MultilinearForm, NormEstimate, SequenceTuple, SummingProbeOptions,
    SummingProbeResult, SvdScalar,
};
use crate::mixed::{lp_norm_moduli, mixed_norm};
use crate::scalar::{Scalar, ScalarField};
use crate::schedules::{anps_min_schedule, dsp_exponent, schedule_hl, schedule_inclusion};
use crate::schedules::{ScalarScheduleResult, ScheduleResult};
use crate::tensor::{MultiIndexTensor, TensorData};

/// Relative tolerance on inequality assertions.
const INEQ_TOL: f64 = 1e-9;
/// Looser tolerance for probe-vs-probe comparisons, where both sides carry
/// ascent error.
const PROBE_TOL: f64 = 1e-6;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derives an independent seed for a sub-purpose of a run; keeps estimator
/// streams decorrelated from sampling streams.
pub fn mix_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ tag.wrapping_mul(0x9E3779B97F4A7C15))
}

fn sample_rank_one_factors<S: Scalar, R: Rng + ?Sized>(
    shape: &[usize],
    rng: &mut R,
) -> Vec<Vec<S>> {
    let two = Exponent::from_integer(2).expect("2 >= 1");
    shape
        .iter()
        .map(|&n| {
            let mut v: Vec<S> = (0..n).map(|_| S::sample_gaussian(rng)).collect();
            let moduli: Vec<f64> = v.iter().map(|z| z.modulus()).collect();
            let norm = lp_norm_moduli(&moduli, &two);
            if norm == 0.0 {
                v = vec![S::zero(); n];
                v[0] = S::one();
            } else {
                for z in v.iter_mut() {
                    *z = z.scale(1.0 / norm);
                }
            }
            v
        })
        .collect()
}

fn sample_tensor<S: Scalar, R: Rng + ?Sized>(
    family: TensorFamily,
    shape: &[usize],
    rng: &mut R,
) -> MultiIndexTensor<S> {
    match family {
        TensorFamily::Rademacher => {
            MultiIndexTensor::from_fn(shape, |_| S::sample_sign(rng)).expect("validated shape")
        }
        TensorFamily::Gaussian => {
            MultiIndexTensor::from_fn(shape, |_| S::sample_gaussian(rng)).expect("validated shape")
        }
        TensorFamily::RankOne => {
            let factors = sample_rank_one_factors::<S, R>(shape, rng);
            MultiIndexTensor::from_fn(shape, |idx| {
                let mut prod = S::one();
                for (k, &i) in idx.iter().enumerate() {
                    prod = prod * factors[k][i];
                }
                prod
            })
            .expect("validated shape")
        }
        TensorFamily::Custom => unreachable!("custom tensors are loaded, not sampled"),
    }
}

/// Scalars that can be pulled out of field-erased tensor data.
trait TensorScalar: Scalar + SvdScalar {
    fn extract(data: TensorData) -> Result<MultiIndexTensor<Self>, ExperimentError>;
}

impl TensorScalar for f64 {
    fn extract(data: TensorData) -> Result<MultiIndexTensor<f64>, ExperimentError> {
        match data {
            TensorData::Real(t) => Ok(t),
            TensorData::Complex(_) => Err(ExperimentError::FieldMismatch {
                expected: ScalarField::Real,
                got: ScalarField::Complex,
            }),
        }
    }
}

impl TensorScalar for Complex64 {
    fn extract(data: TensorData) -> Result<MultiIndexTensor<Complex64>, ExperimentError> {
        match data {
            TensorData::Complex(t) => Ok(t),
            TensorData::Real(_) => Err(ExperimentError::FieldMismatch {
                expected: ScalarField::Complex,
                got: ScalarField::Real,
            }),
        }
    }
}

/// Reads a tensor file, sniffing the binary magic before falling back to
/// JSON.
pub fn load_tensor_file(path: &str) -> Result<TensorData, ExperimentError> {
    let bytes = std::fs::read(path).map_err(|source| ExperimentError::Io {
        path: path.to_string(),
        source,
    })?;
    if bytes.starts_with(&crate::tensor::BINARY_MAGIC) {
        Ok(TensorData::from_binary_bytes(&bytes)?)
    } else {
        Ok(TensorData::from_json_bytes(&bytes)?)
    }
}

fn load_custom<S: TensorScalar>(
    config: &ExperimentConfig,
) -> Result<Option<MultiIndexTensor<S>>, ExperimentError> {
    if config.tensor_family != TensorFamily::Custom {
        return Ok(None);
    }
    let path = config.tensor_path.as_ref().expect("validated");
    let tensor = S::extract(load_tensor_file(path)?)?;
    if tensor.shape() != config.dims.as_slice() {
        return Err(ExperimentError::Config(format!(
            "tensor file shape {:?} does not match config dims {:?}",
            tensor.shape(),
            config.dims
        )));
    }
    Ok(Some(tensor))
}

/// Exact oracle for the form's operator norm, where one exists.
fn try_oracle<S: Scalar + SvdScalar>(form: &MultilinearForm<S>) -> Option<NormEstimate<S>> {
    let two = Exponent::from_integer(2).expect("2 >= 1");
    if form.order() == 2 && form.domain_p().iter().all(|p| *p == two) {
        return norm_svd_bilinear(form).ok();
    }
    if S::FIELD == ScalarField::Real && form.domain_p().iter().all(|p| p.is_infinite()) {
        return norm_sign_enum(form).ok();
    }
    None
}

/// Checks the mixed-norm bound `lhs <= (√2)^{m−1} ‖T‖` on sampled tensors.
///
/// The denominator is a certified lower bound of `‖T‖`, so every recorded
/// ratio over-estimates the true ratio. An exceedance escalates: restarts
/// double (the original restart streams stay in the merged set, so the
/// bound can only grow), then an exact oracle is consulted when one applies.
/// Only an oracle-confirmed exceedance over complex scalars counts as a
/// violation; over real scalars it is logged as a finding, and anything
/// unconfirmed is inconclusive.
pub fn hl_verify(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let started = Instant::now();
    config.validate()?;
    if config.kind != ExperimentKind::HlVerify {
        return Err(ExperimentError::Config(format!(
            "hl_verify got a {} config",
            config.kind
        )));
    }
    let p = config.p.as_ref().expect("validated");
    let derived = schedule_hl(config.m, p)?;
    if !derived.hypothesis_ok() {
        return Err(ExperimentError::Hypothesis(derived.conditions));
    }
    let s = derived.schedule.clone().expect("hypotheses hold");
    let bound = 2f64.sqrt().powi(config.m as i32 - 1);
    let records = match config.scalar_field {
        ScalarField::Real => run_hl_trials::<f64>(config, p, &s, bound)?,
        ScalarField::Complex => run_hl_trials::<Complex64>(config, p, &s, bound)?,
    };
    let summary = summarize(&records, bound, None);
    Ok(ExperimentReport {
        config: config.clone(),
        schedule: s,
        records,
        summary,
        notes: vec![
            "norm estimates are lower bounds, so ratios over-estimate the true ratios"
                .to_string(),
        ],
        wall_time_ms: started.elapsed().as_millis(),
    })
}

fn run_hl_trials<S: TensorScalar>(
    config: &ExperimentConfig,
    p: &ExponentVector,
    s: &ExponentVector,
    bound: f64,
) -> Result<Vec<TrialRecord>, ExperimentError> {
    let custom = load_custom::<S>(config)?;
    let records = (0..config.trials)
        .into_par_iter()
        .map(|t| run_hl_trial(config, p, s, bound, custom.as_ref(), t))
        .collect();
    Ok(records)
}

fn run_hl_trial<S: Scalar + SvdScalar>(
    config: &ExperimentConfig,
    p: &ExponentVector,
    s: &ExponentVector,
    bound: f64,
    custom: Option<&MultiIndexTensor<S>>,
    trial: usize,
) -> TrialRecord {
    let tensor = match custom {
        Some(t) => t.clone(),
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(trial as u64);
            sample_tensor(config.tensor_family, &config.dims, &mut rng)
        }
    };
    let lhs = mixed_norm(&tensor, s).expect("validated dims");
    let form = MultilinearForm::new(tensor, p.clone()).expect("validated dims");
    let opts = AscentOptions {
        restarts: config.restarts,
        max_iters: 500,
        tol: config.tol,
        seed: mix_seed(config.seed, trial as u64),
    };
    let est = norm_alternating(&form, &opts);
    let limit = bound * (1.0 + INEQ_TOL);
    let record = |norm: f64,
                  ratio: f64,
                  method: EstimateMethod,
                  escalated: bool,
                  outcome: TrialOutcome,
                  detail: &str| TrialRecord {
        trial,
        lhs,
        norm,
        ratio,
        method,
        escalated,
        outcome,
        detail: detail.to_string(),
    };

    if est.value == 0.0 {
        return if lhs == 0.0 {
            record(0.0, 0.0, est.method, false, TrialOutcome::Skipped, "zero tensor")
        } else {
            record(
                0.0,
                f64::INFINITY,
                est.method,
                false,
                TrialOutcome::Inconclusive,
                "estimator returned zero on a nonzero tensor",
            )
        };
    }
    let ratio = lhs / est.value;
    if ratio <= limit {
        return record(est.value, ratio, est.method, false, TrialOutcome::Pass, "");
    }

    // Escalation: double the restarts. The original streams are a subset,
    // so the merged estimate can only stay or grow.
    let doubled = norm_alternating(
        &form,
        &AscentOptions {
            restarts: opts.restarts * 2,
            ..opts
        },
    );
    let ratio = lhs / doubled.value;
    if ratio <= limit {
        return record(
            doubled.value,
            ratio,
            doubled.method,
            true,
            TrialOutcome::Pass,
            "restarts doubled",
        );
    }

    match try_oracle(&form) {
        Some(oracle) if oracle.value > 0.0 => {
            let ratio = lhs / oracle.value;
            if ratio <= limit {
                record(
                    oracle.value,
                    ratio,
                    oracle.method,
                    true,
                    TrialOutcome::Pass,
                    "oracle cleared the flag",
                )
            } else if S::FIELD == ScalarField::Real {
                record(
                    oracle.value,
                    ratio,
                    oracle.method,
                    true,
                    TrialOutcome::Finding,
                    "oracle-confirmed exceedance over real scalars",
                )
            } else {
                record(
                    oracle.value,
                    ratio,
                    oracle.method,
                    true,
                    TrialOutcome::Violation,
                    "oracle-confirmed exceedance",
                )
            }
        }
        _ => record(
            doubled.value,
            ratio,
            doubled.method,
            true,
            TrialOutcome::Inconclusive,
            "no exact oracle applies at these exponents",
        ),
    }
}

const FAMILY_NAMES: [&str; 3] = ["basis", "signs", "random"];
const SEQ_LEN: usize = 4;

/// Basis, sign-vector, and random unit-vector sequence tuples for one form.
/// Sign and random sequences have length 4; all vectors live in the form's
/// domain spaces.
fn sequence_families<S: Scalar, R: Rng + ?Sized>(
    form: &MultilinearForm<S>,
    rng: &mut R,
) -> Vec<SequenceTuple<S>> {
    let domain = form.domain_p();
    let basis: SequenceTuple<S> = form
        .shape()
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            VectorSequence::basis(n, domain.get(k + 1).expect("validated").clone())
                .expect("n >= 1")
        })
        .collect();
    let signs: SequenceTuple<S> = form
        .shape()
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let vectors: Vec<Vec<S>> = (0..SEQ_LEN)
                .map(|_| (0..n).map(|_| S::sample_sign(rng)).collect())
                .collect();
            VectorSequence::new(vectors, domain.get(k + 1).expect("validated").clone())
                .expect("nonempty")
        })
        .collect();
    let random: SequenceTuple<S> = form
        .shape()
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let pk = domain.get(k + 1).expect("validated");
            let vectors: Vec<Vec<S>> = (0..SEQ_LEN)
                .map(|_| {
                    let mut v: Vec<S> = (0..n).map(|_| S::sample_gaussian(rng)).collect();
                    let moduli: Vec<f64> = v.iter().map(|z| z.modulus()).collect();
                    let norm = lp_norm_moduli(&moduli, pk);
                    if norm == 0.0 {
                        v = vec![S::zero(); n];
                        v[0] = S::one();
                    } else {
                        for z in v.iter_mut() {
                            *z = z.scale(1.0 / norm);
                        }
                    }
                    v
                })
                .collect();
            VectorSequence::new(vectors, pk.clone()).expect("nonempty")
        })
        .collect();
    vec![basis, signs, random]
}

/// Compares the two summing-norm probes that the norm-1 inclusion links.
///
/// For each sampled form, both probes run over the same sequence families
/// and the report checks that every `(s;q)` family quotient stays within
/// tolerance of the global `(r;p)` quotient. Both sides are lower-bound
/// probes, so persistent exceedances are inconclusive, never violations.
pub fn inclusion_demo(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    let started = Instant::now();
    config.validate()?;
    if config.kind != ExperimentKind::InclusionDemo {
        return Err(ExperimentError::Config(format!(
            "inclusion_demo got a {} config",
            config.kind
        )));
    }
    let r = config.r.as_ref().expect("validated");
    let p = config.p.as_ref().expect("validated");
    let q = config.q.as_ref().expect("validated");
    let derived = schedule_inclusion(r, p, q)?;
    if !derived.hypothesis_ok() {
        return Err(ExperimentError::Hypothesis(derived.conditions));
    }
    let s = derived.schedule.clone().expect("hypotheses hold");
    let records = match config.scalar_field {
        ScalarField::Real => run_inclusion_trials::<f64>(config, r, p, q, &s)?,
        ScalarField::Complex => run_inclusion_trials::<Complex64>(config, r, p, q, &s)?,
    };
    let summary = summarize(&records, 1.0, None);
    Ok(ExperimentReport {
        config: config.clone(),
        schedule: s,
        records,
        summary,
        notes: vec![
            "both sides are lower-bound probes over finite families; exceedances are \
             inconclusive, not violations"
                .to_string(),
        ],
        wall_time_ms: started.elapsed().as_millis(),
    })
}

fn run_inclusion_trials<S: TensorScalar>(
    config: &ExperimentConfig,
    r: &Exponent,
    p: &ExponentVector,
    q: &ExponentVector,
    s: &ExponentVector,
) -> Result<Vec<TrialRecord>, ExperimentError> {
    let custom = load_custom::<S>(config)?;
    let m = config.m;
    let domain = ExponentVector::constant(Exponent::from_integer(2).expect("2 >= 1"), m)
        .expect("m >= 1");
    let r_vec = ExponentVector::constant(r.clone(), m).expect("m >= 1");
    let per_form: Vec<Vec<TrialRecord>> = (0..config.trials)
        .into_par_iter()
        .map(|t| -> Result<Vec<TrialRecord>, ExperimentError> {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            let tensor: MultiIndexTensor<S> = match &custom {
                Some(tensor) => tensor.clone(),
                None => sample_tensor(config.tensor_family, &config.dims, &mut rng),
            };
            let form = MultilinearForm::new(tensor, domain.clone())?;
            let tuples = sequence_families(&form, &mut rng);
            let weak_seed = mix_seed(config.seed, 2 * t as u64 + 1);
            let run_probes = |restarts: usize| -> Result<
                (SummingProbeResult, SummingProbeResult),
                ExperimentError,
            > {
                let opts = SummingProbeOptions {
                    weak: WeakNormOptions {
                        restarts,
                        max_iters: 500,
                        tol: config.tol,
                        seed: weak_seed,
                    },
                };
                let rp = summing_norm_probe(&form, &r_vec, p, &tuples, &opts)?;
                let sq = summing_norm_probe(&form, s, q, &tuples, &opts)?;
                Ok((rp, sq))
            };

            let build = |rp: &SummingProbeResult,
                         sq: &SummingProbeResult,
                         escalated: &[bool],
                         final_round: bool| {
                let rho = rp.value;
                (0..tuples.len())
                    .map(|f| {
                        let trial = t * tuples.len() + f;
                        let detail = FAMILY_NAMES[f].to_string();
                        match (rp.per_sample[f], sq.per_sample[f]) {
                            (Some(rp_f), Some(sq_f)) => {
                                let ratio = if rho > 0.0 {
                                    sq_f / rho
                                } else if sq_f == 0.0 {
                                    0.0
                                } else {
                                    f64::INFINITY
                                };
                                let outcome = if ratio <= 1.0 + PROBE_TOL {
                                    TrialOutcome::Pass
                                } else if final_round {
                                    TrialOutcome::Inconclusive
                                } else {
                                    // Placeholder; the escalated round decides.
                                    TrialOutcome::Inconclusive
                                };
                                TrialRecord {
                                    trial,
                                    lhs: sq_f,
                                    norm: rp_f,
                                    ratio,
                                    method: EstimateMethod::Alternating,
                                    escalated: escalated[f],
                                    outcome,
                                    detail,
                                }
                            }
                            _ => TrialRecord {
                                trial,
                                lhs: 0.0,
                                norm: 0.0,
                                ratio: 0.0,
                                method: EstimateMethod::Alternating,
                                escalated: escalated[f],
                                outcome: TrialOutcome::Skipped,
                                detail: format!("{detail}: degenerate sample"),
                            },
                        }
                    })
                    .collect::<Vec<TrialRecord>>()
            };

            let (rp, sq) = run_probes(config.restarts)?;
            let no_escalation = vec![false; tuples.len()];
            let first = build(&rp, &sq, &no_escalation, false);
            let failing: Vec<bool> = first
                .iter()
                .map(|rec| rec.outcome == TrialOutcome::Inconclusive)
                .collect();
            if !failing.iter().any(|&f| f) {
                return Ok(first);
            }
            let (rp, sq) = run_probes(config.restarts * 2)?;
            Ok(build(&rp, &sq, &failing, true))
        })
        .collect::<Result<_, _>>()?;
    Ok(per_form.into_iter().flatten().collect())
}

/// Side-by-side exact schedules with componentwise comparisons.
#[derive(Debug, Clone)]
pub struct ScheduleComparison {
    pub p: ExponentVector,
    pub hl: ScheduleResult,
    pub dsp: ScalarScheduleResult,
    pub anps: ScheduleResult,
    /// Exact order of `hl_k` vs the replicated dsp exponent, per position;
    /// `None` when either column failed its hypotheses.
    pub hl_vs_dsp: Vec<Option<Ordering>>,
}

pub fn compare_schedules(p: &ExponentVector) -> ScheduleComparison {
    let hl = schedule_hl(p.len(), p).expect("lengths agree by construction");
    let dsp = dsp_exponent(p);
    let anps = anps_min_schedule(p);
    let hl_vs_dsp = match (&hl.schedule, &dsp.value) {
        (Some(s), Some(d)) if hl.hypothesis_ok() && dsp.hypothesis_ok() => {
            s.iter().map(|e| Some(e.cmp(d))).collect()
        }
        _ => vec![None; p.len()],
    };
    ScheduleComparison {
        p: p.clone(),
        hl,
        dsp,
        anps,
        hl_vs_dsp,
    }
}
