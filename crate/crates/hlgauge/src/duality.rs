//! Hölder duality and weak-`ℓ_p` norms.
//!
//! `dual_align` returns the exact maximizer of `|Σ_i ψ_i x_i|` over the
//! closed unit ball of `ℓ_p^n` together with the maximum `‖ψ‖_{p*}`; it is
//! the closed-form building block of every ascent loop in this crate.
//! `weak_p_norm` estimates `sup_{φ ∈ B_{ℓ_{q*}}} (Σ_j |φ(x_j)|^p)^{1/p}`
//! from below by alternating ascent; the returned witness is always feasible,
//! so the value is a certified lower bound.

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exponents::Exponent;
use crate::mixed::lp_norm_moduli;
use crate::scalar::{Scalar, ScalarSum};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DualityError {
    #[error("cannot align against the zero vector")]
    ZeroVector,
    #[error("vector sequence must contain at least one vector")]
    EmptySequence,
    #[error("vector {index} has length {got}, expected {expected}")]
    DimMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("vector {index} has a non-finite entry")]
    NonFinite { index: usize },
    #[error("ambient exponent must lie in (1, inf], got {0}")]
    InvalidAmbient(String),
}

/// Maximizer of `|⟨ψ, x⟩|` over the closed unit ball of `ℓ_p^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedVector<S: Scalar> {
    /// A vector with `‖x‖_p ≤ 1` attaining the maximum.
    pub vector: Vec<S>,
    /// The maximum value, `‖ψ‖_{p*}`.
    pub value: f64,
}

/// Hölder-equality alignment. For `p = 1` the maximizer is a phase-aligned
/// standard basis vector at the first index of maximal `|ψ_i|`; for `p = ∞`
/// it is the full phase vector; in between it is the normalized
/// `(p*−1)`-power vector.
pub fn dual_align<S: Scalar>(psi: &[S], p: &Exponent) -> Result<AlignedVector<S>, DualityError> {
    let moduli: Vec<f64> = psi.iter().map(|z| z.modulus()).collect();
    if moduli.iter().all(|&m| m == 0.0) {
        return Err(DualityError::ZeroVector);
    }
    match p {
        Exponent::Finite(v) if v.is_one() => {
            let best = moduli
                .iter()
                .enumerate()
                .max_by(|(ia, a), (ib, b)| a.partial_cmp(b).unwrap().then(ib.cmp(ia)))
                .map(|(i, _)| i)
                .unwrap();
            let mut x = vec![S::zero(); psi.len()];
            x[best] = psi[best].unit_sign().conj();
            Ok(AlignedVector {
                vector: x,
                value: moduli[best],
            })
        }
        Exponent::Infinity => {
            let x: Vec<S> = psi.iter().map(|z| z.unit_sign().conj()).collect();
            Ok(AlignedVector {
                vector: x,
                value: lp_norm_moduli(&moduli, &Exponent::from_integer(1).unwrap()),
            })
        }
        Exponent::Finite(_) => {
            let pstar = p.conjugate();
            let value = lp_norm_moduli(&moduli, &pstar);
            let gamma = pstar.as_f64() - 1.0;
            let x: Vec<S> = psi
                .iter()
                .zip(&moduli)
                .map(|(z, &m)| z.unit_sign().conj().scale((m / value).powf(gamma)))
                .collect();
            Ok(AlignedVector { vector: x, value })
        }
    }
}

/// A finite sequence of coordinate vectors in `ℓ_q^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSequence<S: Scalar> {
    vectors: Vec<Vec<S>>,
    ambient_q: Exponent,
    dim: usize,
}

impl<S: Scalar> VectorSequence<S> {
    pub fn new(vectors: Vec<Vec<S>>, ambient_q: Exponent) -> Result<Self, DualityError> {
        let dim = match vectors.first() {
            Some(v) => v.len(),
            None => return Err(DualityError::EmptySequence),
        };
        for (index, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(DualityError::DimMismatch {
                    index,
                    expected: dim,
                    got: v.len(),
                });
            }
            if v.iter().any(|z| !z.is_finite_scalar()) {
                return Err(DualityError::NonFinite { index });
            }
        }
        Ok(VectorSequence {
            vectors,
            ambient_q,
            dim,
        })
    }

    /// The standard basis `(e_1, …, e_n)` of `ℓ_q^n`.
    pub fn basis(n: usize, ambient_q: Exponent) -> Result<Self, DualityError> {
        let vectors = (0..n)
            .map(|i| {
                let mut v = vec![S::zero(); n];
                v[i] = S::one();
                v
            })
            .collect();
        VectorSequence::new(vectors, ambient_q)
    }

    pub fn vectors(&self) -> &[Vec<S>] {
        &self.vectors
    }

    pub fn ambient_q(&self) -> &Exponent {
        &self.ambient_q
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `φ(x_j)` for every j, with the bilinear pairing `Σ_i φ_i x_{j,i}`.
    pub fn pairings(&self, phi: &[S]) -> Vec<S> {
        self.vectors
            .iter()
            .map(|x| {
                let mut acc = ScalarSum::new();
                for (a, b) in phi.iter().zip(x) {
                    acc.add(*a * *b);
                }
                acc.value()
            })
            .collect()
    }
}

/// Options for the weak-norm ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakNormOptions {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for WeakNormOptions {
    fn default() -> Self {
        WeakNormOptions {
            restarts: 20,
            max_iters: 500,
            tol: 1e-10,
            seed: 0,
        }
    }
}

/// Certified lower bound for a weak norm, with its witness functional.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakNormEstimate<S: Scalar> {
    pub value: f64,
    /// Functional coefficients with `‖φ‖_{q*} ≤ 1`.
    pub witness: Vec<S>,
    pub restarts_used: usize,
    pub iterations: usize,
    pub degenerate: bool,
}

fn normalize_to_sphere<S: Scalar>(v: &mut [S], p: &Exponent) {
    let moduli: Vec<f64> = v.iter().map(|z| z.modulus()).collect();
    let norm = lp_norm_moduli(&moduli, p);
    if norm == 0.0 {
        for z in v.iter_mut() {
            *z = S::zero();
        }
        if let Some(first) = v.first_mut() {
            *first = S::one();
        }
    } else {
        for z in v.iter_mut() {
            *z = z.scale(1.0 / norm);
        }
    }
}

/// Weak-`ℓ_p` norm of the sequence: `sup_φ (Σ_j |φ(x_j)|^p)^{1/p}` over the
/// dual ball `B_{ℓ_{q*}^d}`, estimated from below by alternating ascent with
/// seeded restarts. Requires ambient `q ∈ (1, ∞]`.
pub fn weak_p_norm<S: Scalar>(
    seq: &VectorSequence<S>,
    p: &Exponent,
    opts: &WeakNormOptions,
) -> Result<WeakNormEstimate<S>, DualityError> {
    match seq.ambient_q() {
        Exponent::Finite(v) if v.is_one() => {
            return Err(DualityError::InvalidAmbient(seq.ambient_q().to_string()))
        }
        _ => {}
    }
    let qstar = seq.ambient_q().conjugate();
    let pstar = p.conjugate();

    let objective = |phi: &[S]| -> f64 {
        let values: Vec<f64> = seq.pairings(phi).iter().map(|z| z.modulus()).collect();
        lp_norm_moduli(&values, p)
    };

    // Degenerate sequence of all-zero vectors: the supremum is 0.
    if seq
        .vectors()
        .iter()
        .all(|x| x.iter().all(|z| z.modulus() == 0.0))
    {
        return Ok(WeakNormEstimate {
            value: 0.0,
            witness: vec![S::zero(); seq.dim()],
            restarts_used: 0,
            iterations: 0,
            degenerate: true,
        });
    }

    let mut best: Option<WeakNormEstimate<S>> = None;
    let mut total_iters = 0usize;
    for restart in 0..opts.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(restart as u64);
        let mut phi: Vec<S> = (0..seq.dim()).map(|_| S::sample_gaussian(&mut rng)).collect();
        normalize_to_sphere(&mut phi, &qstar);
        let mut degenerate = false;
        let mut prev = objective(&phi);
        for _sweep in 0..opts.max_iters {
            total_iters += 1;
            // y-step: best dual vector against the pairing profile; then
            // phi-step: best functional against the y-weighted mass.
            let pair = seq.pairings(&phi);
            let y = match dual_align(&pair, &pstar) {
                Ok(a) => a.vector,
                Err(DualityError::ZeroVector) => {
                    degenerate = true;
                    break;
                }
                Err(e) => return Err(e),
            };
            let mut mass = vec![S::zero(); seq.dim()];
            for (yj, xj) in y.iter().zip(seq.vectors()) {
                for (m, xi) in mass.iter_mut().zip(xj) {
                    *m = *m + *yj * *xi;
                }
            }
            match dual_align(&mass, &qstar) {
                Ok(a) => phi = a.vector,
                Err(DualityError::ZeroVector) => {
                    degenerate = true;
                    break;
                }
                Err(e) => return Err(e),
            }
            let obj = objective(&phi);
            debug_assert!(
                obj >= prev * (1.0 - 1e-12) - 1e-300,
                "ascent must be monotone per sweep: {prev} -> {obj}"
            );
            if obj - prev <= opts.tol * obj.max(1e-300) {
                prev = obj;
                break;
            }
            prev = obj;
        }
        let value = objective(&phi);
        let candidate = WeakNormEstimate {
            value,
            witness: phi,
            restarts_used: restart + 1,
            iterations: total_iters,
            degenerate,
        };
        best = match best {
            Some(b) if b.value >= candidate.value => Some(b),
            _ => Some(candidate),
        };
    }
    let mut est = best.expect("at least one restart");
    est.restarts_used = opts.restarts.max(1);
    est.iterations = total_iters;
    Ok(est)
}

/// An exact expression `base^exponent` with a float view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPower {
    pub base: u64,
    pub exponent: BigRational,
}

impl ExactPower {
    pub fn value(&self) -> f64 {
        (self.base as f64).powf(self.exponent.to_f64().unwrap_or(f64::NAN))
    }
}

impl std::fmt::Display for ExactPower {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.exponent.is_zero() {
            write!(f, "1")
        } else {
            write!(f, "{}^({})", self.base, self.exponent)
        }
    }
}

/// Closed form for the weak norm of the standard basis of `ℓ_q^n`:
/// `‖(e_j)‖_{w,p} = n^{max(0, 1/p − 1/q*)}`.
pub fn weak_p_norm_basis(n: usize, p: &Exponent, q: &Exponent) -> ExactPower {
    assert!(n >= 1, "basis sequence needs n >= 1");
    let qstar = q.conjugate();
    let e = p.reciprocal() - qstar.reciprocal();
    let exponent = if e < BigRational::zero() {
        BigRational::zero()
    } else {
        e
    };
    ExactPower {
        base: n as u64,
        exponent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::exp;
    use num_bigint::BigInt;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
    }

    /// Grid lower bound for `sup |⟨ψ, x⟩|` over the ℓ_p ball in dimension 2.
    fn grid_max_2d(psi: [f64; 2], p: f64, steps: usize) -> f64 {
        let mut best = 0.0f64;
        for k in 0..steps {
            let theta = std::f64::consts::TAU * k as f64 / steps as f64;
            let raw = [theta.cos(), theta.sin()];
            let norm = (raw[0].abs().powf(p) + raw[1].abs().powf(p)).powf(1.0 / p);
            let x = [raw[0] / norm, raw[1] / norm];
            best = best.max((psi[0] * x[0] + psi[1] * x[1]).abs());
        }
        best
    }

    #[test]
    fn align_basis_vector() {
        let psi = vec![1.0, 0.0, 0.0];
        for p in ["1", "2", "3", "inf"] {
            let a = dual_align(&psi, &exp(p)).unwrap();
            assert_eq!(a.vector, vec![1.0, 0.0, 0.0], "p = {p}");
            assert_eq!(a.value, 1.0);
        }
    }

    #[test]
    fn align_p2_is_cauchy_schwarz() {
        let psi = vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(-3.0, 0.5),
            Complex64::new(0.0, -1.0),
        ];
        let a = dual_align(&psi, &exp("2")).unwrap();
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(close(a.value, norm2, 1e-14));
        for (x, z) in a.vector.iter().zip(&psi) {
            assert!((x - Scalar::conj(*z).scale(1.0 / norm2)).norm() < 1e-14);
        }
        // The pairing attains the value as a nonnegative real.
        let mut acc = ScalarSum::new();
        for (x, z) in a.vector.iter().zip(&psi) {
            acc.add(*z * *x);
        }
        let attained = acc.value();
        assert!(close(attained.re, norm2, 1e-13) && attained.im.abs() < 1e-13);
    }

    #[test]
    fn align_p1_breaks_ties_to_lowest_index() {
        let psi = vec![-2.0, 2.0, 1.0];
        let a = dual_align(&psi, &exp("1")).unwrap();
        assert_eq!(a.vector, vec![-1.0, 0.0, 0.0]);
        assert_eq!(a.value, 2.0);
    }

    #[test]
    fn align_pinf_uses_all_phases() {
        let psi = vec![3.0, -4.0, 0.0];
        let a = dual_align(&psi, &exp("inf")).unwrap();
        assert_eq!(a.vector, vec![1.0, -1.0, 0.0]);
        assert_eq!(a.value, 7.0);
    }

    #[test]
    fn align_rejects_zero_vector() {
        assert!(matches!(
            dual_align(&[0.0, 0.0], &exp("2")),
            Err(DualityError::ZeroVector)
        ));
    }

    #[test]
    fn align_p3_matches_grid_oracle() {
        let cases = [[1.0, 2.0], [-0.3, 0.7], [5.0, -5.0], [1e-3, 1.0]];
        for psi in cases {
            let a = dual_align(&psi.to_vec(), &exp("3")).unwrap();
            let grid = grid_max_2d(psi, 3.0, 40_000);
            assert!(close(a.value, grid, 1e-4), "{psi:?}: {} vs {grid}", a.value);
            assert!(a.value >= grid - 1e-12, "closed form must dominate the grid");
        }
    }

    proptest! {
        #[test]
        fn align_witness_is_feasible_and_attains(
            raw in proptest::collection::vec(-5.0f64..5.0, 1..6),
            pnum in 1i64..40,
        ) {
            prop_assume!(raw.iter().any(|&x| x != 0.0));
            // p ranges over {1/8, ..., 40/8} clamped to [1, inf): use num/8.
            let p = Exponent::from_ratio(pnum.max(8), 8).unwrap();
            let a = dual_align(&raw, &p).unwrap();
            let moduli: Vec<f64> = a.vector.iter().map(|x| x.abs()).collect();
            let norm = lp_norm_moduli(&moduli, &p);
            prop_assert!(norm <= 1.0 + 1e-12, "witness outside ball: {norm}");
            let attained: f64 = raw.iter().zip(&a.vector).map(|(z, x)| z * x).sum();
            prop_assert!(close(attained.abs(), a.value, 1e-10));
            // Exact dual norm within 1e-12.
            let pstar = p.conjugate();
            let psi_mod: Vec<f64> = raw.iter().map(|z| z.abs()).collect();
            prop_assert!(close(a.value, lp_norm_moduli(&psi_mod, &pstar), 1e-12));
        }
    }

    #[test]
    fn weak_norm_of_single_vector_is_its_norm() {
        let x = vec![1.0, -2.0, 0.5];
        for q in ["3/2", "2", "4", "inf"] {
            let seq = VectorSequence::new(vec![x.clone()], exp(q)).unwrap();
            let opts = WeakNormOptions { restarts: 4, seed: 7, ..Default::default() };
            let est = weak_p_norm(&seq, &exp("2"), &opts).unwrap();
            let want = lp_norm_moduli(&[1.0, 2.0, 0.5], &exp(q));
            assert!(close(est.value, want, 1e-9), "q={q}: {} vs {want}", est.value);
            // Witness feasibility.
            let qstar = exp(q).conjugate();
            let wmod: Vec<f64> = est.witness.iter().map(|z| z.abs()).collect();
            assert!(lp_norm_moduli(&wmod, &qstar) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn weak_norm_of_repeated_vector_scales_as_n_to_recip_p() {
        let x = vec![0.3, 0.4];
        let n = 5;
        let seq =
            VectorSequence::new(vec![x.clone(); n], exp("2")).unwrap();
        for p in ["1", "2", "3"] {
            let opts = WeakNormOptions { restarts: 4, seed: 11, ..Default::default() };
            let est = weak_p_norm(&seq, &exp(p), &opts).unwrap();
            let norm_x = 0.5;
            let want = (n as f64).powf(exp(p).reciprocal().to_f64().unwrap()) * norm_x;
            assert!(close(est.value, want, 1e-9), "p={p}: {} vs {want}", est.value);
        }
    }

    #[test]
    fn weak_norm_of_basis_matches_closed_form() {
        for (n, p, q) in [
            (4usize, "2", "2"),
            (4, "1", "2"),
            (3, "2", "inf"),
            (5, "3/2", "3"),
            (2, "1", "4"),
        ] {
            let seq = VectorSequence::<f64>::basis(n, exp(q)).unwrap();
            let opts = WeakNormOptions { restarts: 8, seed: 3, ..Default::default() };
            let est = weak_p_norm(&seq, &exp(p), &opts).unwrap();
            let want = weak_p_norm_basis(n, &exp(p), &exp(q)).value();
            assert!(
                close(est.value, want, 1e-8),
                "n={n} p={p} q={q}: {} vs {want}",
                est.value
            );
        }
    }

    #[test]
    fn weak_basis_closed_form_examples() {
        // p = q*: exponent zero.
        let e = weak_p_norm_basis(7, &exp("3/2"), &exp("3"));
        assert!(e.exponent.is_zero());
        assert_eq!(e.value(), 1.0);
        assert_eq!(e.to_string(), "1");

        let e = weak_p_norm_basis(4, &exp("2"), &exp("inf"));
        assert!(e.exponent.is_zero());
        assert_eq!(e.value(), 1.0);

        let e = weak_p_norm_basis(9, &exp("1"), &exp("2"));
        assert_eq!(
            e.exponent,
            BigRational::new(BigInt::from(1), BigInt::from(2))
        );
        assert_eq!(e.value(), 3.0);
        assert_eq!(e.to_string(), "9^(1/2)");
    }

    #[test]
    fn weak_basis_closed_form_matches_grid_at_n2() {
        // Brute-force the dual ball of ℓ_{q*}^2 by angle grid and compare.
        for (p, q) in [("1", "2"), ("2", "2"), ("3/2", "3"), ("1", "4")] {
            let pe = exp(p);
            let qe = exp(q);
            let qstar = qe.conjugate();
            let pf = pe.as_f64();
            let qsf = qstar.as_f64();
            let steps = 40_000;
            let mut best = 0.0f64;
            for k in 0..steps {
                let theta = std::f64::consts::TAU * k as f64 / steps as f64;
                let raw = [theta.cos(), theta.sin()];
                let norm = (raw[0].abs().powf(qsf) + raw[1].abs().powf(qsf)).powf(1.0 / qsf);
                let phi = [raw[0] / norm, raw[1] / norm];
                // Pairings with e_1, e_2 are phi itself.
                let val = (phi[0].abs().powf(pf) + phi[1].abs().powf(pf)).powf(1.0 / pf);
                best = best.max(val);
            }
            let want = weak_p_norm_basis(2, &pe, &qe).value();
            assert!(close(best, want, 1e-4), "p={p} q={q}: grid {best} vs {want}");
        }
    }

    #[test]
    fn weak_norm_monotone_nonincreasing_in_p() {
        let seq = VectorSequence::new(
            vec![vec![1.0, 0.2, -0.5], vec![0.0, 1.0, 1.0], vec![0.7, -0.7, 0.1]],
            exp("3"),
        )
        .unwrap();
        let opts = WeakNormOptions { restarts: 6, seed: 21, ..Default::default() };
        let ps = ["1", "3/2", "2", "3", "6", "inf"];
        let values: Vec<f64> = ps
            .iter()
            .map(|p| weak_p_norm(&seq, &exp(p), &opts).unwrap().value)
            .collect();
        for w in values.windows(2) {
            assert!(w[0] >= w[1] - 1e-9, "{values:?}");
        }
    }

    #[test]
    fn weak_norm_rejects_bad_input() {
        assert!(matches!(
            VectorSequence::<f64>::new(vec![], exp("2")),
            Err(DualityError::EmptySequence)
        ));
        assert!(matches!(
            VectorSequence::new(vec![vec![1.0], vec![1.0, 2.0]], exp("2")),
            Err(DualityError::DimMismatch { index: 1, .. })
        ));
        let seq = VectorSequence::new(vec![vec![1.0]], exp("1")).unwrap();
        assert!(matches!(
            weak_p_norm(&seq, &exp("2"), &WeakNormOptions::default()),
            Err(DualityError::InvalidAmbient(_))
        ));
    }

    #[test]
    fn weak_norm_zero_sequence_is_degenerate_zero() {
        let seq = VectorSequence::new(vec![vec![0.0, 0.0]; 3], exp("2")).unwrap();
        let est = weak_p_norm(&seq, &exp("2"), &WeakNormOptions::default()).unwrap();
        assert_eq!(est.value, 0.0);
        assert!(est.degenerate);
    }

    #[test]
    fn weak_norm_is_deterministic_given_seed() {
        let seq = VectorSequence::new(
            vec![vec![1.0, -0.3, 2.0], vec![0.1, 0.1, -0.9]],
            exp("4"),
        )
        .unwrap();
        let opts = WeakNormOptions { restarts: 10, seed: 99, ..Default::default() };
        let a = weak_p_norm(&seq, &exp("2"), &opts).unwrap();
        let b = weak_p_norm(&seq, &exp("2"), &opts).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.witness, b.witness);
    }
}
