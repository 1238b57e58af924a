//! Fixed float formatting for canonical output.
//!
//! Reports and tensor files must be byte-stable across runs and platforms,
//! so floats are rendered with a single deterministic algorithm equivalent
//! to C's `%.Ng`: round to N significant digits, choose fixed or scientific
//! notation by the decimal exponent, and strip trailing zeros.

/// `%.17g`: shortest-of-17-significant-digits rendering; round-trips every
/// finite `f64` exactly.
pub fn g17(x: f64) -> String {
    g(x, 17)
}

/// `%.6g`: compact rendering for human-facing tables.
pub fn g6(x: f64) -> String {
    g(x, 6)
}

/// General `%.{sig}g`. `sig ≥ 1`.
pub fn g(x: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x < 0.0 { "-inf" } else { "inf" }.to_string();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.to_string();
    }
    // Round once via scientific formatting, then re-typeset; this keeps the
    // notation decision consistent with the rounded value.
    let sci = format!("{:.*e}", sig - 1, x);
    let (mantissa, exponent) = sci.split_once('e').expect("LowerExp emits an exponent");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    debug_assert_eq!(digits.len(), sig);

    let body = if exponent >= -4 && exponent < sig as i32 {
        if exponent >= 0 {
            let (int_part, frac_part) = digits.split_at(exponent as usize + 1);
            let frac = frac_part.trim_end_matches('0');
            if frac.is_empty() {
                int_part.to_string()
            } else {
                format!("{int_part}.{frac}")
            }
        } else {
            let zeros = "0".repeat((-exponent - 1) as usize);
            let frac_all = format!("{zeros}{digits}");
            format!("0.{}", frac_all.trim_end_matches('0'))
        }
    } else {
        let (first, rest) = digits.split_at(1);
        let rest = rest.trim_end_matches('0');
        let mantissa = if rest.is_empty() {
            first.to_string()
        } else {
            format!("{first}.{rest}")
        };
        let sign = if exponent < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exponent.abs())
    };
    if negative {
        format!("-{body}")
    } else {
        body
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_vectors() {
        assert_eq!(g17(0.1), "0.10000000000000001");
        assert_eq!(g17(4.0), "4");
        assert_eq!(g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(g17(std::f64::consts::PI), "3.1415926535897931");
        assert_eq!(g17(1e20), "1e+20");
        assert_eq!(g17(-2.5), "-2.5");
        assert_eq!(g17(0.0), "0");
        assert_eq!(g17(-0.0), "-0");
        assert_eq!(g17(f64::INFINITY), "inf");
        assert_eq!(g17(f64::NEG_INFINITY), "-inf");
        assert_eq!(g17(f64::NAN), "nan");
        assert_eq!(g17(1234567890123456789.0), "1.2345678901234568e+18");
        assert_eq!(g17(1e-300), "1e-300");
    }

    #[test]
    fn six_digit_vectors() {
        assert_eq!(g6(std::f64::consts::PI), "3.14159");
        assert_eq!(g6(1.0 / 3.0), "0.333333");
        assert_eq!(g6(2.0), "2");
        assert_eq!(g6(1e7), "1e+07");
        assert_eq!(g6(123456.0), "123456");
        assert_eq!(g6(1234567.0), "1.23457e+06");
        assert_eq!(g6(0.0001), "0.0001");
        assert_eq!(g6(0.00001), "1e-05");
    }

    #[test]
    fn g17_round_trips_exactly() {
        let cases = [
            0.1,
            -0.1,
            1.0 / 3.0,
            f64::MIN_POSITIVE,
            f64::MAX,
            2.2250738585072014e-308,
            5e-324,
            9.99999999999999999e16,
            1.7976931348623157e308,
            6.02214076e23,
            -1.602176634e-19,
        ];
        for &x in &cases {
            let s = g17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s}");
        }
    }

    #[test]
    fn rounding_can_shift_the_exponent() {
        // 9.9999999e-5 rounds to 0.0001 at 6 significant digits; the
        // notation decision must use the rounded exponent.
        assert_eq!(g6(9.9999999e-5), "0.0001");
        assert_eq!(g6(9.9999999e16), "1e+17");
    }
}
