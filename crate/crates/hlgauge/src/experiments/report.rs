//! Experiment reports: canonical JSON and per-trial CSV.
//!
//! Report bytes are a pure function of config and seed: keys have a fixed
//! order, floats print as `%.17g`, and wall time is kept out of the
//! serialized forms (it is advisory, printed to stderr by the CLI).

use std::path::Path;

use crate::exponents::ExponentVector;
use crate::mform::EstimateMethod;
use crate::numfmt::g17;
use crate::schedules::{schedule_hl, schedule_inclusion};

use super::config::{ExperimentConfig, ExperimentError, ExperimentKind, CONFIG_SCHEMA};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialOutcome {
    /// Inequality held within tolerance.
    Pass,
    /// Exceedance confirmed by an exact oracle over complex scalars.
    Violation,
    /// Exceedance confirmed by an exact oracle over real scalars; logged,
    /// not failed, since the bound is not claimed per field.
    Finding,
    /// Exceedance that no oracle could confirm or refute.
    Inconclusive,
    /// Degenerate trial (zero norms), excluded from ratios.
    Skipped,
}

impl TrialOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            TrialOutcome::Pass => "pass",
            TrialOutcome::Violation => "violation",
            TrialOutcome::Finding => "finding",
            TrialOutcome::Inconclusive => "inconclusive",
            TrialOutcome::Skipped => "skipped",
        }
    }
}

impl std::fmt::Display for TrialOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for TrialOutcome {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pass" => Ok(TrialOutcome::Pass),
            "violation" => Ok(TrialOutcome::Violation),
            "finding" => Ok(TrialOutcome::Finding),
            "inconclusive" => Ok(TrialOutcome::Inconclusive),
            "skipped" => Ok(TrialOutcome::Skipped),
            other => Err(ExperimentError::Csv(format!("unknown outcome `{other}`"))),
        }
    }
}

impl std::str::FromStr for EstimateMethod {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alternating" => Ok(EstimateMethod::Alternating),
            "sign_enum" => Ok(EstimateMethod::SignEnum),
            "svd" => Ok(EstimateMethod::Svd),
            "grid" => Ok(EstimateMethod::Grid),
            other => Err(ExperimentError::Csv(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    /// Mixed-norm (or transferred-inequality) left side.
    pub lhs: f64,
    /// The lower-bound estimate in the denominator.
    pub norm: f64,
    /// The quantity compared against the bound; an over-estimate of the
    /// true ratio because `norm` is a lower bound.
    pub ratio: f64,
    pub method: EstimateMethod,
    pub escalated: bool,
    pub outcome: TrialOutcome,
    pub detail: String,
}

impl TrialRecord {
    fn to_json(&self) -> String {
        format!(
            "{{\"trial\":{},\"lhs\":{},\"norm\":{},\"ratio\":{},\"method\":\"{}\",\
             \"escalated\":{},\"outcome\":\"{}\",\"detail\":{}}}",
            self.trial,
            g17(self.lhs),
            g17(self.norm),
            g17(self.ratio),
            self.method.as_str(),
            self.escalated,
            self.outcome.as_str(),
            serde_json::to_string(&self.detail).expect("plain string"),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSummary {
    /// Max ratio over non-skipped records; 0 when there are none.
    pub max_ratio: f64,
    /// The bound ratios are compared against (before tolerance).
    pub bound: f64,
    /// True iff there are no confirmed violations.
    pub pass: bool,
    pub violations: usize,
    pub findings: usize,
    pub inconclusive: usize,
    pub skipped: usize,
    /// Measured hypothesis constant (regularity probe only).
    pub c_hyp: Option<f64>,
}

/// Builds the summary from records; the bound and `c_hyp` come from the op.
pub fn summarize(records: &[TrialRecord], bound: f64, c_hyp: Option<f64>) -> ReportSummary {
    let mut max_ratio = 0.0f64;
    let (mut violations, mut findings, mut inconclusive, mut skipped) = (0, 0, 0, 0);
    for r in records {
        match r.outcome {
            TrialOutcome::Skipped => skipped += 1,
            other => {
                if r.ratio > max_ratio {
                    max_ratio = r.ratio;
                }
                match other {
                    TrialOutcome::Violation => violations += 1,
                    TrialOutcome::Finding => findings += 1,
                    TrialOutcome::Inconclusive => inconclusive += 1,
                    _ => {}
                }
            }
        }
    }
    ReportSummary {
        max_ratio,
        bound,
        pass: violations == 0,
        violations,
        findings,
        inconclusive,
        skipped,
        c_hyp,
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// The exact schedule every trial was measured against.
    pub schedule: ExponentVector,
    pub records: Vec<TrialRecord>,
    pub summary: ReportSummary,
    pub notes: Vec<String>,
    /// Advisory only; never serialized, so reports stay byte-stable.
    pub wall_time_ms: u128,
}

impl ExperimentReport {
    pub fn to_canonical_json(&self) -> String {
        let mut out = String::from("{\"schema\":");
        out.push_str(&CONFIG_SCHEMA.to_string());
        out.push_str(",\"kind\":\"");
        out.push_str(self.config.kind.as_str());
        out.push_str("\",\"versions\":{\"crate\":\"");
        out.push_str(env!("CARGO_PKG_VERSION"));
        out.push_str("\",\"schema\":");
        out.push_str(&CONFIG_SCHEMA.to_string());
        out.push_str("},\"config\":");
        out.push_str(&self.config.to_canonical_json());
        out.push_str(",\"schedule\":[");
        for (i, e) in self.schedule.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push('"');
            out.push_str(&e.to_string());
            out.push('"');
        }
        out.push_str("],\"records\":[");
        for (i, r) in self.records.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&r.to_json());
        }
        out.push_str("],\"summary\":{\"max_ratio\":");
        out.push_str(&g17(self.summary.max_ratio));
        out.push_str(",\"bound\":");
        out.push_str(&g17(self.summary.bound));
        out.push_str(",\"pass\":");
        out.push_str(if self.summary.pass { "true" } else { "false" });
        out.push_str(",\"violations\":");
        out.push_str(&self.summary.violations.to_string());
        out.push_str(",\"findings\":");
        out.push_str(&self.summary.findings.to_string());
        out.push_str(",\"inconclusive\":");
        out.push_str(&self.summary.inconclusive.to_string());
        out.push_str(",\"skipped\":");
        out.push_str(&self.summary.skipped.to_string());
        out.push_str(",\"c_hyp\":");
        match self.summary.c_hyp {
            None => out.push_str("null"),
            Some(v) => out.push_str(&g17(v)),
        }
        out.push_str("},\"notes\":[");
        for (i, n) in self.notes.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&serde_json::to_string(n).expect("plain string"));
        }
        out.push_str("]}");
        out
    }

    /// One row per trial; floats as `%.17g` so CSV round trips exactly.
    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.records {
            w.write_record(&[
                r.trial.to_string(),
                g17(r.lhs),
                g17(r.norm),
                g17(r.ratio),
                r.method.as_str().to_string(),
                r.escalated.to_string(),
                r.outcome.as_str().to_string(),
                r.detail.clone(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf8 rows")
    }

    /// Re-derives the derived parts and cross-checks them against what the
    /// report claims. The schedule check is exact rational arithmetic.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let recomputed = summarize(&self.records, self.summary.bound, self.summary.c_hyp);
        if recomputed.max_ratio.to_bits() != self.summary.max_ratio.to_bits() {
            return Err(ExperimentError::Validation(format!(
                "summary max_ratio {} does not equal the max over records {}",
                self.summary.max_ratio, recomputed.max_ratio
            )));
        }
        if (
            recomputed.violations,
            recomputed.findings,
            recomputed.inconclusive,
            recomputed.skipped,
            recomputed.pass,
        ) != (
            self.summary.violations,
            self.summary.findings,
            self.summary.inconclusive,
            self.summary.skipped,
            self.summary.pass,
        ) {
            return Err(ExperimentError::Validation(
                "summary counts disagree with records".to_string(),
            ));
        }
        let expected_schedule = match self.config.kind {
            ExperimentKind::HlVerify => {
                let p = self.config.p.as_ref().ok_or(ExperimentError::MissingInput("p"))?;
                let derived = schedule_hl(self.config.m, p)?;
                derived.hypothesis_ok().then_some(derived.schedule).flatten()
            }
            ExperimentKind::InclusionDemo | ExperimentKind::RegularityProbe => {
                let r = self.config.r.as_ref().ok_or(ExperimentError::MissingInput("r"))?;
                let p = self.config.p.as_ref().ok_or(ExperimentError::MissingInput("p"))?;
                let q = self.config.q.as_ref().ok_or(ExperimentError::MissingInput("q"))?;
                let derived = schedule_inclusion(r, p, q)?;
                derived.hypothesis_ok().then_some(derived.schedule).flatten()
            }
            ExperimentKind::ExponentTable => Some(self.schedule.clone()),
        };
        match expected_schedule {
            Some(expected) if expected == self.schedule => Ok(()),
            Some(expected) => Err(ExperimentError::Validation(format!(
                "recorded schedule {} does not satisfy the defining relation (expected {})",
                self.schedule.display_list(),
                expected.display_list()
            ))),
            None => Err(ExperimentError::Validation(
                "config does not satisfy the schedule hypotheses".to_string(),
            )),
        }
    }

    /// 0 = pass, 1 = confirmed violation, 3 = inconclusive trials remain.
    pub fn exit_code(&self) -> i32 {
        if self.summary.violations > 0 {
            1
        } else if self.summary.inconclusive > 0 {
            3
        } else {
            0
        }
    }
}

const CSV_HEADER: [&str; 8] = [
    "trial", "lhs", "norm", "ratio", "method", "escalated", "outcome", "detail",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = ExperimentError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(ExperimentError::Config(format!(
                "unknown report format `{other}` (expected json or csv)"
            ))),
        }
    }
}

pub fn write_report(
    report: &ExperimentReport,
    path: &Path,
    format: ReportFormat,
) -> Result<(), ExperimentError> {
    report.validate()?;
    let body = match format {
        ReportFormat::Json => {
            let mut s = report.to_canonical_json();
            s.push('\n');
            s
        }
        ReportFormat::Csv => report.to_csv_string(),
    };
    std::fs::write(path, body).map_err(|source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parses rows written by [`ExperimentReport::to_csv_string`]. `%.17g`
/// floats parse back to the identical doubles.
pub fn trials_from_csv_bytes(bytes: &[u8]) -> Result<Vec<TrialRecord>, ExperimentError> {
    let mut reader = csv::ReaderBuilder::new().from_reader(bytes);
    {
        let headers = reader
            .headers()
            .map_err(|e| ExperimentError::Csv(e.to_string()))?;
        if headers.len() != CSV_HEADER.len()
            || headers.iter().zip(CSV_HEADER).any(|(a, b)| a != b)
        {
            return Err(ExperimentError::Csv(format!(
                "unexpected header row `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
    }
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| ExperimentError::Csv(e.to_string()))?;
        if row.len() != CSV_HEADER.len() {
            return Err(ExperimentError::Csv(format!(
                "row has {} fields, expected {}",
                row.len(),
                CSV_HEADER.len()
            )));
        }
        let field = |i: usize| row.get(i).expect("length checked");
        let parse_f64 = |i: usize| -> Result<f64, ExperimentError> {
            field(i)
                .parse::<f64>()
                .map_err(|e| ExperimentError::Csv(format!("field {}: {e}", CSV_HEADER[i])))
        };
        records.push(TrialRecord {
            trial: field(0)
                .parse::<usize>()
                .map_err(|e| ExperimentError::Csv(format!("field trial: {e}")))?,
            lhs: parse_f64(1)?,
            norm: parse_f64(2)?,
            ratio: parse_f64(3)?,
            method: field(4).parse()?,
            escalated: match field(5) {
                "true" => true,
                "false" => false,
                other => {
                    return Err(ExperimentError::Csv(format!(
                        "field escalated: expected true/false, got `{other}`"
                    )))
                }
            },
            outcome: field(6).parse()?,
            detail: field(7).to_string(),
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::expvec;
    use crate::experiments::config::ExperimentKind;

    fn sample_report() -> ExperimentReport {
        let mut config = ExperimentConfig::new(ExperimentKind::HlVerify, 3);
        config.dims = vec![4, 4, 4];
        config.p = Some(expvec("4,4,4"));
        config.trials = 2;
        let records = vec![
            TrialRecord {
                trial: 0,
                lhs: 0.1 + 0.2,
                norm: 1e-300,
                ratio: 1.75,
                method: EstimateMethod::Alternating,
                escalated: false,
                outcome: TrialOutcome::Pass,
                detail: String::new(),
            },
            TrialRecord {
                trial: 1,
                lhs: -0.0,
                norm: 3.5,
                ratio: 1.9999999999999998,
                method: EstimateMethod::Svd,
                escalated: true,
                outcome: TrialOutcome::Pass,
                detail: "needs, quoting".to_string(),
            },
        ];
        let summary = summarize(&records, 2.0f64.sqrt().powi(2), None);
        ExperimentReport {
            config,
            schedule: expvec("4,3,12/5"),
            records,
            summary,
            notes: vec!["note one".to_string()],
            wall_time_ms: 12345,
        }
    }

    #[test]
    fn canonical_json_is_byte_stable_and_validates() {
        let r = sample_report();
        r.validate().unwrap();
        let a = r.to_canonical_json();
        let b = r.to_canonical_json();
        assert_eq!(a, b);
        assert!(a.contains("\"schedule\":[\"4\",\"3\",\"12/5\"]"));
        assert!(a.contains("\"ratio\":1.9999999999999998"));
        // Wall time never appears in the serialized report.
        assert!(!a.contains("12345"));
        let parsed: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(parsed["summary"]["violations"], 0);
    }

    #[test]
    fn validator_catches_tampering() {
        let mut r = sample_report();
        r.summary.max_ratio = 3.0;
        assert!(matches!(r.validate(), Err(ExperimentError::Validation(_))));

        let mut r = sample_report();
        r.schedule = expvec("4,3,2");
        assert!(matches!(r.validate(), Err(ExperimentError::Validation(_))));

        let mut r = sample_report();
        r.records[0].outcome = TrialOutcome::Violation;
        assert!(r.validate().is_err());
    }

    #[test]
    fn csv_round_trip_preserves_numeric_fields_exactly() {
        let r = sample_report();
        let csv = r.to_csv_string();
        let trials = trials_from_csv_bytes(csv.as_bytes()).unwrap();
        assert_eq!(trials.len(), r.records.len());
        for (a, b) in trials.iter().zip(&r.records) {
            assert_eq!(a.lhs.to_bits(), b.lhs.to_bits());
            assert_eq!(a.norm.to_bits(), b.norm.to_bits());
            assert_eq!(a.ratio.to_bits(), b.ratio.to_bits());
            assert_eq!(a, b);
        }
        // json -> csv -> json keeps the full report identical.
        let mut rebuilt = r.clone();
        rebuilt.records = trials;
        assert_eq!(rebuilt.to_canonical_json(), r.to_canonical_json());
    }

    #[test]
    fn empty_record_list_still_writes_valid_outputs() {
        let mut r = sample_report();
        r.records.clear();
        r.summary = summarize(&r.records, r.summary.bound, None);
        r.validate().unwrap();
        let json = r.to_canonical_json();
        assert!(json.contains("\"records\":[]"));
        serde_json::from_str::<serde_json::Value>(&json).unwrap();
        let csv = r.to_csv_string();
        assert_eq!(trials_from_csv_bytes(csv.as_bytes()).unwrap(), vec![]);
    }

    #[test]
    fn exit_codes_follow_the_contract() {
        let mut r = sample_report();
        assert_eq!(r.exit_code(), 0);
        r.records[0].outcome = TrialOutcome::Inconclusive;
        r.summary = summarize(&r.records, r.summary.bound, None);
        assert_eq!(r.exit_code(), 3);
        r.records[1].outcome = TrialOutcome::Violation;
        r.summary = summarize(&r.records, r.summary.bound, None);
        assert_eq!(r.exit_code(), 1);
        assert!(!r.summary.pass);
    }

    #[test]
    fn csv_rejects_malformed_rows() {
        assert!(trials_from_csv_bytes(b"not,a,report\n1,2,3").is_err());
        let good = sample_report().to_csv_string();
        let bad = good.replace("alternating", "annealing");
        assert!(trials_from_csv_bytes(bad.as_bytes()).is_err());
        let bad = good.replace("1.75", "badnum");
        assert!(trials_from_csv_bytes(bad.as_bytes()).is_err());
    }
}
