//! Compensated summation.
//!
//! Mixed norms and contractions accumulate up to 10^6 terms; Neumaier's
//! variant of Kahan summation keeps the relative error near one ulp so the
//! crate's 1e-12 tolerances stay honest.

/// Running sum with a Neumaier compensation term.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        NeumaierSum { sum: 0.0, comp: 0.0 }
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sums an iterator with compensation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(items: I) -> f64 {
    let mut acc = NeumaierSum::new();
    for x in items {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn survives_catastrophic_cancellation() {
        // Naive left-to-right summation returns 0 here.
        assert_eq!(compensated_sum([1.0, 1e100, 1.0, -1e100]), 2.0);
        assert_eq!(compensated_sum([1e16, 1.0, -1e16]), 1.0);
    }

    #[test]
    fn matches_exact_sum_of_many_small_terms() {
        let n = 100_000;
        let got = compensated_sum(std::iter::repeat(0.1).take(n));
        let want = n as f64 * 0.1;
        assert!((got - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn empty_sum_is_zero() {
        assert_eq!(compensated_sum([]), 0.0);
    }
}
