//! Summing-exponent schedules.
//!
//! Each schedule maps input exponents to the optimal (or minimal admissible)
//! output exponents of an inclusion or coincidence result. All arithmetic is
//! exact rational; hypothesis violations are reported as structured
//! conditions rather than errors so near-boundary cases can be tabulated.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::exponents::{Exponent, ExponentError, ExponentVector};

/// One named hypothesis or range check with its outcome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Condition {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Condition {
    fn new(name: &str, holds: bool, detail: String) -> Self {
        Condition {
            name: name.to_string(),
            holds,
            detail,
        }
    }
}

/// A computed schedule plus the hypothesis checks that qualify it.
///
/// `schedule` is `None` when some entry falls outside `[1, ∞]` and cannot be
/// represented; the failing entries are described in `conditions`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduleResult {
    pub schedule: Option<ExponentVector>,
    pub conditions: Vec<Condition>,
}

impl ScheduleResult {
    pub fn hypothesis_ok(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    pub fn violated_conditions(&self) -> Vec<&Condition> {
        self.conditions.iter().filter(|c| !c.holds).collect()
    }

    /// The schedule under a passing hypothesis; panics otherwise.
    pub fn expect_schedule(&self) -> &ExponentVector {
        self.schedule
            .as_ref()
            .expect("schedule entries representable")
    }
}

/// Scalar counterpart of [`ScheduleResult`] for single-exponent outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScalarScheduleResult {
    pub value: Option<Exponent>,
    pub conditions: Vec<Condition>,
}

impl ScalarScheduleResult {
    pub fn hypothesis_ok(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }

    pub fn violated_conditions(&self) -> Vec<&Condition> {
        self.conditions.iter().filter(|c| !c.holds).collect()
    }

    pub fn expect_value(&self) -> &Exponent {
        self.value.as_ref().expect("value representable")
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Builds exponents from reciprocals, recording any entry outside `[1, ∞]`
/// as a violated range condition instead of failing.
fn schedule_from_reciprocals(recips: &[BigRational], conditions: &mut Vec<Condition>) -> Option<ExponentVector> {
    let mut entries = Vec::with_capacity(recips.len());
    let mut bad = Vec::new();
    for (i, recip) in recips.iter().enumerate() {
        match Exponent::from_reciprocal(recip) {
            Ok(e) => entries.push(e),
            Err(_) => bad.push(format!("1/s_{} = {}", i + 1, recip)),
        }
    }
    if bad.is_empty() {
        Some(ExponentVector::new(entries).expect("nonempty"))
    } else {
        conditions.push(Condition::new(
            "every s_k lies in [1, inf]",
            false,
            bad.join("; "),
        ));
        None
    }
}

fn domination_condition(p: &ExponentVector, q: &ExponentVector) -> Condition {
    let offenders: Vec<String> = p
        .iter()
        .zip(q.iter())
        .enumerate()
        .filter(|(_, (pk, qk))| qk.reciprocal() > pk.reciprocal())
        .map(|(i, (pk, qk))| format!("k={}: q_k={} < p_k={}", i + 1, qk, pk))
        .collect();
    Condition::new(
        "q_k >= p_k for all k",
        offenders.is_empty(),
        if offenders.is_empty() {
            "holds".to_string()
        } else {
            offenders.join("; ")
        },
    )
}

fn positivity_condition(recip_first: &BigRational) -> Condition {
    Condition::new(
        "1/r - |1/p| + |1/q| > 0",
        recip_first > &BigRational::zero(),
        format!("value = {recip_first}"),
    )
}

/// Inclusion schedule: `1/s_k = 1/r − |1/p|_{≥k} + |1/q|_{≥k}` for each k.
///
/// Hypotheses: `q_k ≥ p_k` componentwise and `1/r − |1/p| + |1/q| > 0`.
/// Under them every `s_k` is finite with `s_k ≥ r`.
pub fn schedule_inclusion(
    r: &Exponent,
    p: &ExponentVector,
    q: &ExponentVector,
) -> Result<ScheduleResult, ExponentError> {
    if p.len() != q.len() {
        return Err(ExponentError::LengthMismatch(p.len(), q.len()));
    }
    let m = p.len();
    let recips: Vec<BigRational> = (1..=m)
        .map(|k| r.reciprocal() - p.tail_sum(k).unwrap() + q.tail_sum(k).unwrap())
        .collect();
    let mut conditions = vec![domination_condition(p, q), positivity_condition(&recips[0])];
    let schedule = schedule_from_reciprocals(&recips, &mut conditions);
    Ok(ScheduleResult { schedule, conditions })
}

/// Scalar inclusion schedule for constant exponents:
/// `1/s = 1/r − m/p + m/q`.
pub fn schedule_pellegrino(
    r: &Exponent,
    p: &Exponent,
    q: &Exponent,
    m: usize,
) -> Result<ScalarScheduleResult, ExponentError> {
    if m == 0 {
        return Err(ExponentError::Empty);
    }
    let mm = BigRational::from_integer(BigInt::from(m as u64));
    let recip = r.reciprocal() - &mm * p.reciprocal() + &mm * q.reciprocal();
    let mut conditions = vec![
        Condition::new(
            "q >= p",
            q.reciprocal() <= p.reciprocal(),
            format!("p={p}, q={q}"),
        ),
        positivity_condition(&recip),
    ];
    let value = match Exponent::from_reciprocal(&recip) {
        Ok(e) => Some(e),
        Err(_) => {
            conditions.push(Condition::new(
                "s lies in [1, inf]",
                false,
                format!("1/s = {recip}"),
            ));
            None
        }
    };
    Ok(ScalarScheduleResult { value, conditions })
}

/// Scalar anisotropic schedule: `1/s = 1/r − |1/p| + |1/q|`. Coincides with
/// the first entry of [`schedule_inclusion`].
pub fn schedule_bayart(
    r: &Exponent,
    p: &ExponentVector,
    q: &ExponentVector,
) -> Result<ScalarScheduleResult, ExponentError> {
    if p.len() != q.len() {
        return Err(ExponentError::LengthMismatch(p.len(), q.len()));
    }
    let recip = r.reciprocal() - p.reciprocal_sum() + q.reciprocal_sum();
    let mut conditions = vec![domination_condition(p, q), positivity_condition(&recip)];
    let value = match Exponent::from_reciprocal(&recip) {
        Ok(e) => Some(e),
        Err(_) => {
            conditions.push(Condition::new(
                "s lies in [1, inf]",
                false,
                format!("1/s = {recip}"),
            ));
            None
        }
    };
    Ok(ScalarScheduleResult { value, conditions })
}

/// Hardy–Littlewood schedule in the low-exponent regime:
/// `s_k = [1/2 + (m−k+1)/(2m) − |1/p|_{≥k}]^{−1}`.
///
/// Hypotheses: `|1/p| < 1` and `p_k ≤ 2m` for all k.
pub fn schedule_hl(m: usize, p: &ExponentVector) -> Result<ScheduleResult, ExponentError> {
    if p.len() != m {
        return Err(ExponentError::LengthMismatch(p.len(), m));
    }
    let half = rat(1, 2);
    let recips: Vec<BigRational> = (1..=m)
        .map(|k| &half + rat((m - k + 1) as i64, (2 * m) as i64) - p.tail_sum(k).unwrap())
        .collect();
    let total = p.reciprocal_sum();
    let two_m = rat((2 * m) as i64, 1);
    let offenders: Vec<String> = p
        .iter()
        .enumerate()
        .filter(|(_, pk)| match pk.as_rational() {
            Some(v) => v > &two_m,
            None => true,
        })
        .map(|(i, pk)| format!("k={}: p_k={}", i + 1, pk))
        .collect();
    let mut conditions = vec![
        Condition::new(
            "|1/p| < 1",
            total < BigRational::one(),
            format!("|1/p| = {total}"),
        ),
        Condition::new(
            "p_k <= 2m for all k",
            offenders.is_empty(),
            if offenders.is_empty() {
                "holds".to_string()
            } else {
                offenders.join("; ")
            },
        ),
    ];
    let schedule = schedule_from_reciprocals(&recips, &mut conditions);
    Ok(ScheduleResult { schedule, conditions })
}

/// Dominated-summability exponent `1/(1 − |1/p|)`, optimal for
/// `1/2 ≤ |1/p| < 1`.
pub fn dsp_exponent(p: &ExponentVector) -> ScalarScheduleResult {
    let total = p.reciprocal_sum();
    let recip = BigRational::one() - &total;
    let mut conditions = vec![
        Condition::new(
            "1/2 <= |1/p|",
            total >= rat(1, 2),
            format!("|1/p| = {total}"),
        ),
        Condition::new(
            "|1/p| < 1",
            total < BigRational::one(),
            format!("|1/p| = {total}"),
        ),
    ];
    let value = match Exponent::from_reciprocal(&recip) {
        Ok(e) => Some(e),
        Err(_) => {
            conditions.push(Condition::new(
                "s lies in [1, inf]",
                false,
                format!("1/s = {recip}"),
            ));
            None
        }
    };
    ScalarScheduleResult { value, conditions }
}

/// Componentwise minimal admissible schedule `s_k = [1 − |1/p|_{≥k}]^{−1}`
/// under `|1/p| < 1`.
pub fn anps_min_schedule(p: &ExponentVector) -> ScheduleResult {
    let m = p.len();
    let recips: Vec<BigRational> = (1..=m)
        .map(|k| BigRational::one() - p.tail_sum(k).unwrap())
        .collect();
    let total = p.reciprocal_sum();
    let mut conditions = vec![Condition::new(
        "|1/p| < 1",
        total < BigRational::one(),
        format!("|1/p| = {total}"),
    )];
    let schedule = schedule_from_reciprocals(&recips, &mut conditions);
    ScheduleResult { schedule, conditions }
}

/// Admissibility predicate for anisotropic exponents against the
/// `|1/s| ≤ (m+1)/2 − |1/p|` budget, with preconditions `|1/p| ≤ 1/2` and
/// `s_k ∈ [(1 − |1/p|)^{−1}, 2]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BhhlResult {
    pub admissible: bool,
    pub conditions: Vec<Condition>,
}

impl BhhlResult {
    /// The failed clauses, empty when admissible.
    pub fn reasons(&self) -> Vec<&Condition> {
        self.conditions.iter().filter(|c| !c.holds).collect()
    }
}

pub fn bhhl_admissible(
    p: &ExponentVector,
    s: &ExponentVector,
) -> Result<BhhlResult, ExponentError> {
    if p.len() != s.len() {
        return Err(ExponentError::LengthMismatch(p.len(), s.len()));
    }
    let m = p.len();
    let p_total = p.reciprocal_sum();
    let s_total = s.reciprocal_sum();
    let half = rat(1, 2);
    // Range check via reciprocals: s_k <= 2 iff 1/s_k >= 1/2, and
    // s_k >= (1-|1/p|)^{-1} iff 1/s_k <= 1 - |1/p|.
    let upper_recip = BigRational::one() - &p_total;
    let range_offenders: Vec<String> = s
        .iter()
        .enumerate()
        .filter(|(_, sk)| {
            let r = sk.reciprocal();
            r < half || r > upper_recip
        })
        .map(|(i, sk)| format!("k={}: s_k={}", i + 1, sk))
        .collect();
    let budget = rat((m + 1) as i64, 2) - &p_total;
    let conditions = vec![
        Condition::new(
            "|1/p| <= 1/2",
            p_total <= half,
            format!("|1/p| = {p_total}"),
        ),
        Condition::new(
            "s_k in [(1 - |1/p|)^{-1}, 2] for all k",
            range_offenders.is_empty(),
            if range_offenders.is_empty() {
                "holds".to_string()
            } else {
                range_offenders.join("; ")
            },
        ),
        Condition::new(
            "|1/s| <= (m+1)/2 - |1/p|",
            s_total <= budget,
            format!("|1/s| = {s_total}, budget = {budget}"),
        ),
    ];
    let admissible = conditions.iter().all(|c| c.holds);
    Ok(BhhlResult { admissible, conditions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::{exp, expvec};

    #[test]
    fn inclusion_matches_worked_examples() {
        let r = schedule_inclusion(&exp("3"), &expvec("3,2"), &expvec("5,2")).unwrap();
        assert!(r.hypothesis_ok());
        assert_eq!(r.expect_schedule(), &expvec("5,3"));

        let r = schedule_inclusion(&exp("2"), &expvec("2,2,1"), &expvec("3,3,1")).unwrap();
        assert!(r.hypothesis_ok());
        assert_eq!(r.expect_schedule(), &expvec("6,3,2"));
    }

    #[test]
    fn inclusion_with_equal_exponents_is_constant_r() {
        for (r, p) in [("2", "2,2,1"), ("7/2", "3,2"), ("1", "inf,4,2")] {
            let res = schedule_inclusion(&exp(r), &expvec(p), &expvec(p)).unwrap();
            assert!(res.hypothesis_ok());
            let m = expvec(p).len();
            let want = ExponentVector::new(vec![exp(r); m]).unwrap();
            assert_eq!(res.expect_schedule(), &want);
        }
    }

    #[test]
    fn inclusion_defining_relation_holds_exactly() {
        let cases = [
            ("3", "3,2", "5,2"),
            ("2", "2,2,1", "3,3,1"),
            ("5/2", "2,7/3,9/4", "4,3,9/4"),
            ("1", "1,1", "4/3,2"),
        ];
        for (r, p, q) in cases {
            let (r, p, q) = (exp(r), expvec(p), expvec(q));
            let res = schedule_inclusion(&r, &p, &q).unwrap();
            assert!(res.hypothesis_ok(), "{:?}", res.conditions);
            let s = res.expect_schedule();
            for k in 1..=p.len() {
                let lhs = s.get(k).unwrap().reciprocal() - q.tail_sum(k).unwrap();
                let rhs = r.reciprocal() - p.tail_sum(k).unwrap();
                assert_eq!(lhs, rhs, "k={k}");
            }
        }
    }

    #[test]
    fn inclusion_reports_violated_hypotheses() {
        // q_2 < p_2 breaks domination.
        let res = schedule_inclusion(&exp("3"), &expvec("3,2"), &expvec("5,3/2")).unwrap();
        assert!(!res.hypothesis_ok());
        let names: Vec<&str> = res
            .violated_conditions()
            .iter()
            .map(|c| c.name.as_str())
            .collect();
        assert_eq!(names, vec!["q_k >= p_k for all k"]);
        // Schedule is still representable here.
        assert!(res.schedule.is_some());
    }

    #[test]
    fn inclusion_rejects_length_mismatch() {
        assert!(matches!(
            schedule_inclusion(&exp("2"), &expvec("2,2"), &expvec("3,3,3")),
            Err(ExponentError::LengthMismatch(2, 3))
        ));
    }

    #[test]
    fn pellegrino_examples() {
        let res = schedule_pellegrino(&exp("2"), &exp("7/2"), &exp("7/2"), 4).unwrap();
        assert!(res.hypothesis_ok());
        assert_eq!(res.expect_value(), &exp("2"));

        let res = schedule_pellegrino(&exp("3"), &exp("3"), &exp("5"), 1).unwrap();
        assert!(res.hypothesis_ok());
        assert_eq!(res.expect_value(), &exp("5"));

        // Boundary: 1/s = 1/2 - 1 + 1/2 = 0 violates strict positivity but
        // is representable as infinity.
        let res = schedule_pellegrino(&exp("2"), &exp("2"), &exp("4"), 2).unwrap();
        assert!(!res.hypothesis_ok());
        assert_eq!(res.value, Some(Exponent::Infinity));

        assert!(schedule_pellegrino(&exp("2"), &exp("2"), &exp("2"), 0).is_err());
    }

    #[test]
    fn bayart_matches_first_inclusion_entry() {
        let cases = [
            ("3", "3,2", "5,2"),
            ("2", "2,2,1", "3,3,1"),
            ("5/2", "2,7/3,9/4", "4,3,9/4"),
        ];
        for (r, p, q) in cases {
            let (r, p, q) = (exp(r), expvec(p), expvec(q));
            let scalar = schedule_bayart(&r, &p, &q).unwrap();
            let full = schedule_inclusion(&r, &p, &q).unwrap();
            assert_eq!(
                scalar.expect_value(),
                full.expect_schedule().get(1).unwrap()
            );
        }
        let res = schedule_bayart(&exp("3"), &expvec("3,2"), &expvec("5,2")).unwrap();
        assert_eq!(res.expect_value(), &exp("5"));
        let res = schedule_bayart(&exp("2"), &expvec("2,2,1"), &expvec("3,3,1")).unwrap();
        assert_eq!(res.expect_value(), &exp("6"));
    }

    #[test]
    fn hl_schedule_examples() {
        let res = schedule_hl(3, &expvec("4,4,4")).unwrap();
        assert!(res.hypothesis_ok());
        assert_eq!(res.expect_schedule(), &expvec("4,3,12/5"));

        let res = schedule_hl(2, &expvec("4,4")).unwrap();
        assert!(res.hypothesis_ok());
        assert_eq!(res.expect_schedule(), &expvec("2,2"));

        // m=1: s = [1 - 1/p]^{-1}, the conjugate exponent.
        let res = schedule_hl(1, &expvec("2")).unwrap();
        assert!(res.hypothesis_ok());
        assert_eq!(res.expect_schedule(), &expvec("2"));
        let res = schedule_hl(1, &expvec("3/2")).unwrap();
        assert!(res.hypothesis_ok());
        assert_eq!(res.expect_schedule(), &expvec("3"));
    }

    #[test]
    fn hl_schedule_flags_hypotheses() {
        // p_k > 2m.
        let res = schedule_hl(2, &expvec("5,4")).unwrap();
        assert!(!res.hypothesis_ok());
        assert!(res
            .violated_conditions()
            .iter()
            .any(|c| c.name == "p_k <= 2m for all k"));

        // |1/p| >= 1.
        let res = schedule_hl(2, &expvec("2,2")).unwrap();
        assert!(!res.hypothesis_ok());
        assert!(res
            .violated_conditions()
            .iter()
            .any(|c| c.name == "|1/p| < 1"));

        assert!(schedule_hl(3, &expvec("4,4")).is_err());
    }

    #[test]
    fn dsp_examples() {
        let res = dsp_exponent(&expvec("4,4,4"));
        assert!(res.hypothesis_ok());
        assert_eq!(res.expect_value(), &exp("4"));

        for m in 1..=5usize {
            let p = ExponentVector::new(vec![exp(&(2 * m).to_string()); m]).unwrap();
            let res = dsp_exponent(&p);
            assert!(res.hypothesis_ok());
            assert_eq!(res.expect_value(), &exp("2"));
        }

        // |1/p| = 1: reciprocal collapses to zero, reported as infinity with
        // a violated hypothesis.
        let res = dsp_exponent(&expvec("2,2"));
        assert!(!res.hypothesis_ok());
        assert_eq!(res.value, Some(Exponent::Infinity));

        // |1/p| < 1/2: value exists but optimality hypothesis fails.
        let res = dsp_exponent(&expvec("8,8"));
        assert!(!res.hypothesis_ok());
        assert_eq!(res.expect_value(), &exp("4/3"));
    }

    #[test]
    fn anps_examples() {
        let res = anps_min_schedule(&expvec("inf,inf,inf"));
        assert!(res.hypothesis_ok());
        assert_eq!(res.expect_schedule(), &expvec("1,1,1"));

        let res = anps_min_schedule(&expvec("2"));
        assert!(res.hypothesis_ok());
        assert_eq!(res.expect_schedule(), &expvec("2"));

        let res = anps_min_schedule(&expvec("4,4,4"));
        assert!(res.hypothesis_ok());
        assert_eq!(res.expect_schedule(), &expvec("4,2,4/3"));
    }

    #[test]
    fn anps_entries_decrease_in_k() {
        for p in ["4,4,4", "7/2,5,9,4", "3,6,12,24,48"] {
            let res = anps_min_schedule(&expvec(p));
            assert!(res.hypothesis_ok());
            let s = res.expect_schedule();
            for k in 1..s.len() {
                let a = s.get(k).unwrap().reciprocal();
                let b = s.get(k + 1).unwrap().reciprocal();
                assert!(a <= b, "s must be nonincreasing at k={k}");
            }
        }
    }

    #[test]
    fn bhhl_examples() {
        // Equality case: both sides m/2.
        for m in 1..=4usize {
            let p = ExponentVector::new(vec![exp(&(2 * m).to_string()); m]).unwrap();
            let s = ExponentVector::new(vec![exp("2"); m]).unwrap();
            let res = bhhl_admissible(&p, &s).unwrap();
            assert!(res.admissible, "{:?}", res.reasons());
        }

        let res = bhhl_admissible(&expvec("inf,inf,inf"), &expvec("2,2,2")).unwrap();
        assert!(res.admissible);

        // s_1 below the admissible floor (1 - |1/p|)^{-1} = 2 here.
        let res = bhhl_admissible(&expvec("4,4"), &expvec("3/2,2")).unwrap();
        assert!(!res.admissible);
        assert!(res
            .reasons()
            .iter()
            .any(|c| c.name.starts_with("s_k in")));

        // Budget-only violation: for p=(inf,inf,inf) the range is [1,2] and
        // the budget is 2, so s=(1,1,1) with |1/s|=3 fails exactly one clause.
        let res = bhhl_admissible(&expvec("inf,inf,inf"), &expvec("1,1,1")).unwrap();
        assert!(!res.admissible);
        let names: Vec<&str> = res.reasons().iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, vec!["|1/s| <= (m+1)/2 - |1/p|"]);

        assert!(bhhl_admissible(&expvec("2,2"), &expvec("2")).is_err());
    }

    #[test]
    fn hl_isotropic_closed_forms() {
        // For m < p <= 2m: s_1 = p/(p-m), s_m = 2mp/(mp+p-2m).
        for (m, p_str) in [(2usize, "3"), (2, "4"), (3, "4"), (3, "11/2"), (4, "13/2")] {
            let p = ExponentVector::new(vec![exp(p_str); m]).unwrap();
            let res = schedule_hl(m, &p).unwrap();
            assert!(res.hypothesis_ok());
            let s = res.expect_schedule();
            let pv = exp(p_str).as_rational().unwrap().clone();
            let mv = BigRational::from_integer(BigInt::from(m as u64));
            let s1 = &pv / (&pv - &mv);
            let two = BigRational::from_integer(BigInt::from(2));
            let sm = &two * &mv * &pv / (&mv * &pv + &pv - &two * &mv);
            assert_eq!(s.get(1).unwrap().as_rational().unwrap(), &s1);
            assert_eq!(s.get(m).unwrap().as_rational().unwrap(), &sm);
        }
    }
}
