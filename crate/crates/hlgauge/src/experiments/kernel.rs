//! Tabulated two-layer kernels and the regularity transfer probe.
//!
//! A kernel holds finite nonnegative tables `R_k` on `Z_k × W_k` and `S` on
//! `Z_1 × … × Z_m × V`. The probe measures the hypothesis constant over
//! sampled index selections and then checks the transferred inequality with
//! the rebased exponent schedule on the same selections. Tables fix
//! representatives, so homogeneity is not re-verified here.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::duality::{weak_p_norm, WeakNormOptions};
use crate::exponents::{Exponent, ExponentVector};
use crate::mform::{MultilinearForm, SequenceTuple};
use crate::mixed::{lp_norm_moduli, mixed_norm_of_moduli};
use crate::numfmt::g17;
use crate::scalar::Scalar;
use crate::schedules::schedule_inclusion;
use crate::tensor::{for_each_index, validate_shape, MAX_ORDER};

use super::config::{ExperimentConfig, ExperimentError, ExperimentKind};
use super::report::{summarize, ExperimentReport, TrialOutcome, TrialRecord};
use crate::mform::EstimateMethod;

pub const KERNEL_SCHEMA: u32 = 1;

/// Finite nonnegative tables standing in for the kernels `R_k` and `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedKernel {
    z_sizes: Vec<usize>,
    w_sizes: Vec<usize>,
    v_size: usize,
    /// One row-major `|Z_k| × |W_k|` table per slot.
    r_tables: Vec<Vec<f64>>,
    /// Row-major over `Z_1 × … × Z_m × V`.
    s_table: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernelJson {
    schema: u32,
    z: Vec<u64>,
    w: Vec<u64>,
    v: u64,
    r: Vec<Vec<f64>>,
    s: Vec<f64>,
}

fn size_from_u64(v: u64, what: &str) -> Result<usize, ExperimentError> {
    usize::try_from(v)
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| ExperimentError::Config(format!("{what} must be a positive size, got {v}")))
}

impl TabulatedKernel {
    pub fn new(
        z_sizes: Vec<usize>,
        w_sizes: Vec<usize>,
        v_size: usize,
        r_tables: Vec<Vec<f64>>,
        s_table: Vec<f64>,
    ) -> Result<Self, ExperimentError> {
        let m = z_sizes.len();
        if m == 0 || m > MAX_ORDER {
            return Err(ExperimentError::Config(format!(
                "kernel order must be in 1..={MAX_ORDER}, got {m}"
            )));
        }
        if w_sizes.len() != m || r_tables.len() != m {
            return Err(ExperimentError::Config(format!(
                "kernel has {m} z-sets but {} w-sets and {} R tables",
                w_sizes.len(),
                r_tables.len()
            )));
        }
        if v_size == 0 || z_sizes.iter().chain(&w_sizes).any(|&n| n == 0) {
            return Err(ExperimentError::Config(
                "kernel index sets must be nonempty".to_string(),
            ));
        }
        for k in 0..m {
            let expected = validate_shape(&[z_sizes[k], w_sizes[k]])?;
            if r_tables[k].len() != expected {
                return Err(ExperimentError::Config(format!(
                    "R table {} has {} entries, expected {expected}",
                    k + 1,
                    r_tables[k].len()
                )));
            }
        }
        let mut s_shape = z_sizes.clone();
        s_shape.push(v_size);
        let expected = validate_shape(&s_shape)?;
        if s_table.len() != expected {
            return Err(ExperimentError::Config(format!(
                "S table has {} entries, expected {expected}",
                s_table.len()
            )));
        }
        for value in r_tables.iter().flatten().chain(&s_table) {
            if !(value.is_finite() && *value >= 0.0) {
                return Err(ExperimentError::Config(format!(
                    "kernel tables must be finite and nonnegative, got {value}"
                )));
            }
        }
        Ok(TabulatedKernel {
            z_sizes,
            w_sizes,
            v_size,
            r_tables,
            s_table,
        })
    }

    pub fn from_json_bytes(bytes: &[u8]) -> Result<Self, ExperimentError> {
        let raw: RawKernelJson =
            serde_json::from_slice(bytes).map_err(|e| ExperimentError::Json(e.to_string()))?;
        if raw.schema != KERNEL_SCHEMA {
            return Err(ExperimentError::Config(format!(
                "unsupported kernel schema {} (expected {KERNEL_SCHEMA})",
                raw.schema
            )));
        }
        let z = raw
            .z
            .iter()
            .map(|&n| size_from_u64(n, "z size"))
            .collect::<Result<Vec<_>, _>>()?;
        let w = raw
            .w
            .iter()
            .map(|&n| size_from_u64(n, "w size"))
            .collect::<Result<Vec<_>, _>>()?;
        let v = size_from_u64(raw.v, "v size")?;
        TabulatedKernel::new(z, w, v, raw.r, raw.s)
    }

    pub fn to_json_string(&self) -> String {
        let join = |values: &[f64]| -> String {
            values.iter().map(|&x| g17(x)).collect::<Vec<_>>().join(",")
        };
        let mut out = format!(
            "{{\"schema\":{KERNEL_SCHEMA},\"z\":{:?},\"w\":{:?},\"v\":{},\"r\":[",
            self.z_sizes, self.w_sizes, self.v_size
        );
        for (k, table) in self.r_tables.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            out.push('[');
            out.push_str(&join(table));
            out.push(']');
        }
        out.push_str("],\"s\":[");
        out.push_str(&join(&self.s_table));
        out.push_str("]}");
        out
    }

    pub fn order(&self) -> usize {
        self.z_sizes.len()
    }

    pub fn z_sizes(&self) -> &[usize] {
        &self.z_sizes
    }

    pub fn r_val(&self, k: usize, z: usize, w: usize) -> f64 {
        self.r_tables[k][z * self.w_sizes[k] + w]
    }

    pub fn s_val(&self, zs: &[usize], v: usize) -> f64 {
        let mut linear = 0usize;
        for (k, &z) in zs.iter().enumerate() {
            linear = linear * self.z_sizes[k] + z;
        }
        self.s_table[linear * self.v_size + v]
    }
}

/// Both sides of the hypothesis and the conclusion on one selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionMeasurement {
    /// `sup_ν` flat `r`-norm of `S` over the selected multi-indices.
    pub hyp_lhs: f64,
    /// `Π_k sup_w` of the row `p_k`-norms.
    pub hyp_den: f64,
    /// `sup_ν` mixed `s`-norm of `S` over the same multi-indices.
    pub concl_lhs: f64,
    /// `Π_k sup_w` of the row `q_k`-norms.
    pub concl_den: f64,
    /// Set when some hypothesis denominator factor is zero.
    pub degenerate: bool,
}

/// Measures one selection `z^k = (z^k_j)_{j < n_k}` of indices into the
/// `Z_k` sets (repeats allowed).
pub fn measure_selection(
    kernel: &TabulatedKernel,
    selection: &[Vec<usize>],
    r: &Exponent,
    p: &ExponentVector,
    q: &ExponentVector,
    s: &ExponentVector,
) -> Result<SelectionMeasurement, ExperimentError> {
    let m = kernel.order();
    if selection.len() != m || p.len() != m || q.len() != m || s.len() != m {
        return Err(ExperimentError::Config(format!(
            "selection and exponents must all have {m} slots"
        )));
    }
    let shape: Vec<usize> = selection.iter().map(|zs| zs.len()).collect();
    if shape.iter().any(|&n| n == 0) {
        return Err(ExperimentError::Config(
            "selections must be nonempty in every slot".to_string(),
        ));
    }
    let mut work_shape = shape.clone();
    work_shape.push(kernel.v_size);
    validate_shape(&work_shape)?;
    for (k, zs) in selection.iter().enumerate() {
        if let Some(&bad) = zs.iter().find(|&&z| z >= kernel.z_sizes[k]) {
            return Err(ExperimentError::Config(format!(
                "selection index {bad} out of range for z-set {} of size {}",
                k + 1,
                kernel.z_sizes[k]
            )));
        }
    }

    let r_spec = ExponentVector::constant(r.clone(), m).expect("m >= 1");
    let mut hyp_lhs = 0.0f64;
    let mut concl_lhs = 0.0f64;
    let mut zs = vec![0usize; m];
    let mut values = Vec::with_capacity(shape.iter().product());
    for v in 0..kernel.v_size {
        values.clear();
        for_each_index(&shape, |idx| {
            for (k, &j) in idx.iter().enumerate() {
                zs[k] = selection[k][j];
            }
            values.push(kernel.s_val(&zs, v));
        });
        let flat_r = mixed_norm_of_moduli(&values, &shape, &r_spec);
        let mixed_s = mixed_norm_of_moduli(&values, &shape, s);
        if flat_r > hyp_lhs {
            hyp_lhs = flat_r;
        }
        if mixed_s > concl_lhs {
            concl_lhs = mixed_s;
        }
    }

    let mut hyp_den = 1.0f64;
    let mut concl_den = 1.0f64;
    let mut degenerate = false;
    for k in 0..m {
        let pk = p.get(k + 1).expect("validated length");
        let qk = q.get(k + 1).expect("validated length");
        let mut best_p = 0.0f64;
        let mut best_q = 0.0f64;
        let mut row = vec![0.0f64; selection[k].len()];
        for w in 0..kernel.w_sizes[k] {
            for (j, &z) in selection[k].iter().enumerate() {
                row[j] = kernel.r_val(k, z, w);
            }
            let np = lp_norm_moduli(&row, pk);
            let nq = lp_norm_moduli(&row, qk);
            if np > best_p {
                best_p = np;
            }
            if nq > best_q {
                best_q = nq;
            }
        }
        if best_p == 0.0 {
            degenerate = true;
        }
        hyp_den *= best_p;
        concl_den *= best_q;
    }

    Ok(SelectionMeasurement {
        hyp_lhs,
        hyp_den,
        concl_lhs,
        concl_den,
        degenerate,
    })
}

/// Samples selections, measures the hypothesis constant over them, and
/// checks the transferred inequality on the same selections.
///
/// Failures are reported as inconclusive, never as violations: the
/// hypothesis quantifies over all selections and was only sampled, so the
/// measured constant carries no guarantee.
pub fn regularity_probe(
    kernel: &TabulatedKernel,
    config: &ExperimentConfig,
) -> Result<ExperimentReport, ExperimentError> {
    let started = std::time::Instant::now();
    config.validate()?;
    if config.kind != ExperimentKind::RegularityProbe {
        return Err(ExperimentError::Config(format!(
            "regularity_probe got a {} config",
            config.kind
        )));
    }
    if config.m != kernel.order() {
        return Err(ExperimentError::Config(format!(
            "config m = {} but kernel has order {}",
            config.m,
            kernel.order()
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

    let mut measurements = Vec::with_capacity(config.trials);
    for trial in 0..config.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(trial as u64);
        let selection: Vec<Vec<usize>> = config
            .dims
            .iter()
            .enumerate()
            .map(|(k, &n)| (0..n).map(|_| rng.gen_range(0..kernel.z_sizes[k])).collect())
            .collect();
        measurements.push(measure_selection(kernel, &selection, r, p, q, &s)?);
    }

    let mut c_hyp = 0.0f64;
    let mut any_valid = false;
    for mm in &measurements {
        if !mm.degenerate {
            any_valid = true;
            let quotient = mm.hyp_lhs / mm.hyp_den;
            if quotient > c_hyp {
                c_hyp = quotient;
            }
        }
    }

    let records: Vec<TrialRecord> = measurements
        .iter()
        .enumerate()
        .map(|(trial, mm)| {
            if mm.degenerate {
                return TrialRecord {
                    trial,
                    lhs: 0.0,
                    norm: 0.0,
                    ratio: 0.0,
                    method: EstimateMethod::Grid,
                    escalated: false,
                    outcome: TrialOutcome::Skipped,
                    detail: "zero hypothesis denominator".to_string(),
                };
            }
            let norm = c_hyp * mm.concl_den;
            let (ratio, outcome) = if norm == 0.0 {
                if mm.concl_lhs == 0.0 {
                    (0.0, TrialOutcome::Pass)
                } else {
                    (f64::INFINITY, TrialOutcome::Inconclusive)
                }
            } else {
                let ratio = mm.concl_lhs / norm;
                let outcome = if ratio <= 1.0 + 1e-9 {
                    TrialOutcome::Pass
                } else {
                    TrialOutcome::Inconclusive
                };
                (ratio, outcome)
            };
            TrialRecord {
                trial,
                lhs: mm.concl_lhs,
                norm,
                ratio,
                method: EstimateMethod::Grid,
                escalated: false,
                outcome,
                detail: format!("hyp_quotient={}", g17(mm.hyp_lhs / mm.hyp_den)),
            }
        })
        .collect();

    let summary = summarize(&records, 1.0, any_valid.then_some(c_hyp));
    Ok(ExperimentReport {
        config: config.clone(),
        schedule: s,
        records,
        summary,
        notes: vec![
            "the hypothesis quantifies over all selections; finite sampling checks a \
             necessary condition only"
                .to_string(),
        ],
        wall_time_ms: started.elapsed().as_millis(),
    })
}

/// Builds the matched kernel of a form over one sampled sequence tuple:
/// `W_k` is the singleton weak-norm witness functional of slot `k`, so
/// `R_k(z, w) = |φ_k(x_z)|`, and `S(z, ·) = |T(x_{z_1}, …, x_{z_m})|` with a
/// singleton `V`. On the identity selection the hypothesis quotient then
/// reproduces the summing-norm probe quotient exactly.
pub fn kernel_from_form<S: Scalar>(
    form: &MultilinearForm<S>,
    tuple: &SequenceTuple<S>,
    p: &ExponentVector,
    weak_opts: &WeakNormOptions,
) -> Result<TabulatedKernel, ExperimentError> {
    let m = form.order();
    if tuple.len() != m || p.len() != m {
        return Err(ExperimentError::Config(format!(
            "tuple and p must have {m} slots"
        )));
    }
    let mut r_tables = Vec::with_capacity(m);
    for (k, seq) in tuple.iter().enumerate() {
        let pk = p.get(k + 1).expect("validated length");
        let est = weak_p_norm(seq, pk, weak_opts)?;
        let row: Vec<f64> = seq
            .pairings(&est.witness)
            .iter()
            .map(|z| z.modulus())
            .collect();
        r_tables.push(row);
    }
    let lens: Vec<usize> = tuple.iter().map(|seq| seq.len()).collect();
    validate_shape(&lens)?;
    let mut s_table = Vec::with_capacity(lens.iter().product());
    let mut args: Vec<Vec<S>> = tuple.iter().map(|seq| seq.vectors()[0].clone()).collect();
    for_each_index(&lens, |idx| {
        for (k, &j) in idx.iter().enumerate() {
            args[k] = tuple[k].vectors()[j].clone();
        }
        s_table.push(form.evaluate(&args).expect("validated dims").modulus());
    });
    TabulatedKernel::new(lens.clone(), vec![1; m], 1, r_tables, s_table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{exp, expvec};
    use crate::experiments::config::ExperimentKind;
    use rand::rngs::StdRng;

    fn product_kernel() -> TabulatedKernel {
        // S(z, 0) = R_1(z_1, 0) * R_2(z_2, 0) with singleton W_k.
        let r1 = vec![1.0, 2.0, 0.5];
        let r2 = vec![0.25, 3.0];
        let mut s = Vec::new();
        for a in &r1 {
            for b in &r2 {
                s.push(a * b);
            }
        }
        TabulatedKernel::new(vec![3, 2], vec![1, 1], 1, vec![r1, r2], s).unwrap()
    }

    #[test]
    fn kernel_json_round_trip_and_validation() {
        let k = product_kernel();
        let s = k.to_json_string();
        let back = TabulatedKernel::from_json_bytes(s.as_bytes()).unwrap();
        assert_eq!(back, k);
        assert_eq!(back.to_json_string(), s);

        assert!(TabulatedKernel::from_json_bytes(b"{").is_err());
        let bad = s.replace("\"schema\":1", "\"schema\":9");
        assert!(TabulatedKernel::from_json_bytes(bad.as_bytes()).is_err());
        let bad = s.replace("0.25", "-0.25");
        assert!(TabulatedKernel::from_json_bytes(bad.as_bytes()).is_err());
        let bad = s.replace("\"v\":1", "\"v\":2");
        assert!(TabulatedKernel::from_json_bytes(bad.as_bytes()).is_err());
        // A huge declared shape fails the size guard before any table read.
        let huge = r#"{"schema":1,"z":[100000,100000],"w":[1,1],"v":1,"r":[[],[]],"s":[]}"#;
        assert!(TabulatedKernel::from_json_bytes(huge.as_bytes()).is_err());
    }

    #[test]
    fn product_kernel_has_unit_constant_when_r_equals_p() {
        let kernel = product_kernel();
        let r = exp("2");
        let p = expvec("2,2");
        let s = expvec("2,2");
        let selection = vec![vec![0usize, 1, 2], vec![0usize, 1]];
        let mm = measure_selection(&kernel, &selection, &r, &p, &p, &s).unwrap();
        // Product structure factors the flat norm across slots.
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        assert!(close(mm.hyp_lhs, mm.hyp_den), "{} vs {}", mm.hyp_lhs, mm.hyp_den);
        // q = p and s = r make the conclusion sides identical bit for bit.
        assert_eq!(mm.concl_lhs.to_bits(), mm.hyp_lhs.to_bits());
        assert_eq!(mm.concl_den.to_bits(), mm.hyp_den.to_bits());
    }

    #[test]
    fn single_element_selections_are_tight() {
        let kernel = product_kernel();
        let r = exp("3");
        let p = expvec("3,3");
        let selection = vec![vec![1usize], vec![1usize]];
        let mm = measure_selection(&kernel, &selection, &r, &p, &p, &expvec("3,3")).unwrap();
        assert_eq!(mm.hyp_lhs, kernel.s_val(&[1, 1], 0));
        assert_eq!(mm.hyp_den, kernel.r_val(0, 1, 0) * kernel.r_val(1, 1, 0));
        assert_eq!(mm.concl_lhs.to_bits(), mm.hyp_lhs.to_bits());
        assert_eq!(mm.concl_den.to_bits(), mm.hyp_den.to_bits());
    }

    #[test]
    fn measure_selection_rejects_bad_input() {
        let kernel = product_kernel();
        let r = exp("2");
        let p = expvec("2,2");
        let s = expvec("2,2");
        assert!(measure_selection(&kernel, &[vec![0], vec![5]], &r, &p, &p, &s).is_err());
        assert!(measure_selection(&kernel, &[vec![0]], &r, &p, &p, &s).is_err());
        assert!(measure_selection(&kernel, &[vec![0], vec![]], &r, &p, &p, &s).is_err());
    }

    fn probe_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(ExperimentKind::RegularityProbe, 2);
        c.dims = vec![3, 3];
        c.trials = 12;
        c.seed = 5;
        c.r = Some(exp("2"));
        c.p = Some(expvec("2,2"));
        c.q = Some(expvec("3,3"));
        c
    }

    fn random_kernel(seed: u64) -> TabulatedKernel {
        use rand::SeedableRng as _;
        let mut rng = StdRng::seed_from_u64(seed);
        let (z, w, v) = (vec![4usize, 3], vec![2usize, 2], 2usize);
        let r_tables: Vec<Vec<f64>> = z
            .iter()
            .zip(&w)
            .map(|(&nz, &nw)| (0..nz * nw).map(|_| rng.gen_range(0.0..2.0)).collect())
            .collect();
        let s_table = (0..z.iter().product::<usize>() * v)
            .map(|_| rng.gen_range(0.0..2.0))
            .collect();
        TabulatedKernel::new(z, w, v, r_tables, s_table).unwrap()
    }

    #[test]
    fn probe_passes_and_degenerates_exactly_when_q_equals_p() {
        let kernel = random_kernel(2);
        let mut config = probe_config();
        config.q = config.p.clone();
        let report = regularity_probe(&kernel, &config).unwrap();
        report.validate().unwrap();
        assert_eq!(report.schedule, expvec("2,2"));
        assert!(report.records.iter().all(|r| r.outcome == TrialOutcome::Pass));
        // With q = p the conclusion sides equal the hypothesis sides on
        // every sampled selection, so every ratio is c_hyp-relative.
        let c_hyp = report.summary.c_hyp.unwrap();
        for r in &report.records {
            assert!(r.ratio <= 1.0 + 1e-12);
            let hyp_q: f64 = r
                .detail
                .strip_prefix("hyp_quotient=")
                .unwrap()
                .parse()
                .unwrap();
            assert!(hyp_q <= c_hyp);
        }
        assert!(report
            .records
            .iter()
            .any(|r| { r.detail.strip_prefix("hyp_quotient=").unwrap().parse::<f64>().unwrap() == c_hyp }));
    }

    #[test]
    fn probe_is_deterministic_and_validates() {
        let kernel = random_kernel(3);
        let config = probe_config();
        let a = regularity_probe(&kernel, &config).unwrap();
        let b = regularity_probe(&kernel, &config).unwrap();
        assert_eq!(a.to_canonical_json(), b.to_canonical_json());
        assert_eq!(a.to_csv_string(), b.to_csv_string());
        a.validate().unwrap();
        assert!(a.summary.pass);
        assert!(!a.notes.is_empty());
    }

    #[test]
    fn probe_rejects_violated_hypotheses() {
        let kernel = random_kernel(4);
        let mut config = probe_config();
        // q < p breaks the domination hypothesis.
        config.q = Some(expvec("3/2,3/2"));
        assert!(matches!(
            regularity_probe(&kernel, &config),
            Err(ExperimentError::Hypothesis(_))
        ));
    }
}
