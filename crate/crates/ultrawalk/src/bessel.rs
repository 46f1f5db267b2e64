//! Bessel functions of the first kind, J_n, for the integer-line walk.
//!
//! The forward three-term recurrence J_(n+1) = (2n/t) J_n - J_(n-1) is
//! violently unstable for n > t (it amplifies the unwanted Y_n solution), so
//! evaluation runs Miller's scheme instead: seed a tiny value far above the
//! target order, recur downward (stable direction), and fix the overall
//! scale with the linear normalization
//!
//! ```text
//! J_0(t) + 2 J_2(t) + 2 J_4(t) + ... = 1.
//! ```
//!
//! Normalizing against the linear identity keeps the quadratic identity
//! J_0^2 + 2 sum J_n^2 = 1 available as an independent correctness check.
//! Small arguments (t < 2) use the alternating power series, which needs a
//! few dozen terms at most there. Negative arguments fold back through
//! J_n(-t) = (-1)^n J_n(t).

/// J_n(t) for n >= 0 and any finite t, accurate to ~1e-13 absolute. NaN
/// propagates; there are no error states.
pub fn bessel_j(n: u32, t: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t < 0.0 {
        let v = bessel_j(n, -t);
        return if n % 2 == 1 { -v } else { v };
    }
    if t == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if t < 2.0 {
        series(n, t)
    } else {
        miller(n, t)
    }
}

/// Power series J_n(t) = (t/2)^n/n! * sum_j (-t^2/4)^j / (j! (n+j)!); with
/// t < 2 the term ratio is below 1/(j+1), so convergence is immediate and
/// the sum is safe from cancellation.
fn series(n: u32, t: f64) -> f64 {
    let half = t / 2.0;
    let mut prefactor = 1.0f64;
    for k in 1..=n as u64 {
        prefactor *= half / k as f64;
        if prefactor == 0.0 {
            return 0.0; // far below the underflow horizon for every later factor
        }
    }
    let x = -t * t / 4.0;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for j in 1..200u64 {
        term *= x / (j * (n as u64 + j)) as f64;
        sum += term;
        if term.abs() < sum.abs() * 1e-17 + 1e-300 {
            break;
        }
    }
    prefactor * sum
}

/// Miller's backward recurrence from well above max(n, t), normalized by the
/// linear identity. The rescale guard keeps the unnormalized column finite.
fn miller(n: u32, t: f64) -> f64 {
    let start = (n.max(t.ceil() as u32) + 40) & !1; // even, >= n + 40
    let mut above = 0.0f64; // J_(k+1), unnormalized
    let mut here = 1e-30f64; // J_k, unnormalized
    let mut norm = 2.0 * here; // start is even and >= 2
    let mut out = 0.0f64;
    let mut k = start;
    while k >= 1 {
        let below = (2.0 * k as f64 / t) * here - above;
        above = here;
        here = below;
        k -= 1;
        if k == n {
            out = here;
        }
        if k == 0 {
            norm += here;
        } else if k.is_multiple_of(2) {
            norm += 2.0 * here;
        }
        if here.abs() > 1e250 {
            above /= 1e250;
            here /= 1e250;
            norm /= 1e250;
            out /= 1e250;
        }
    }
    out / norm
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Large-argument Hankel expansion with theta = (2n+1) pi/4 and
    /// mu = 4n^2:
    ///
    /// ```text
    /// J_n(t) ~ sqrt(2/(pi t)) [ cos(t - theta) (1 - (mu-1)(mu-9)/(2 (8t)^2))
    ///                          - sin(t - theta) (mu-1)/(8t) ]
    /// ```
    ///
    /// A test-only oracle; the first omitted term is
    /// O(n^6 t^-3) sqrt(2/(pi t)), comfortably inside a 2/t^2 band for
    /// n < 6, t >= 50.
    fn asymptotic(n: u32, t: f64) -> f64 {
        let theta = (2.0 * n as f64 + 1.0) * std::f64::consts::FRAC_PI_4;
        let phase = t - theta;
        let mu = 4.0 * (n as f64) * (n as f64);
        let p2 = 1.0 - (mu - 1.0) * (mu - 9.0) / (2.0 * (8.0 * t) * (8.0 * t));
        let q1 = (mu - 1.0) / (8.0 * t);
        (2.0 / (std::f64::consts::PI * t)).sqrt() * (phase.cos() * p2 - phase.sin() * q1)
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j(0, 0.0), 1.0);
        for n in 1..10 {
            assert_eq!(bessel_j(n, 0.0), 0.0);
        }
    }

    #[test]
    fn first_zero_of_j0() {
        assert!(bessel_j(0, 2.404826).abs() < 1e-5);
    }

    #[test]
    fn j1_at_one() {
        assert!((bessel_j(1, 1.0) - 0.440050585744933).abs() < 1e-9);
    }

    #[test]
    fn quadratic_normalization() {
        for t in [0.5, 5.0, 25.0, 100.0] {
            let top = t as u32 + 40;
            let mut s = bessel_j(0, t).powi(2);
            for n in 1..=top {
                s += 2.0 * bessel_j(n, t).powi(2);
            }
            assert!((s - 1.0).abs() < 1e-10, "t = {t}: sum {s}");
        }
    }

    #[test]
    fn negative_argument_symmetry() {
        for (n, t) in [(0u32, 3.3), (1, 3.3), (2, 7.1), (3, 7.1)] {
            let sign = if n % 2 == 1 { -1.0 } else { 1.0 };
            assert_eq!(bessel_j(n, -t), sign * bessel_j(n, t));
        }
    }

    #[test]
    fn branches_join_smoothly() {
        // The series/Miller switch sits at t = 2; J_0 moves by O(1e-6) over
        // a 2e-6 interval, so any branch mismatch would dominate.
        let below = bessel_j(0, 2.0 - 1e-6);
        let above = bessel_j(0, 2.0 + 1e-6);
        assert!((below - above).abs() < 1e-5);
        let b1 = bessel_j(5, 2.0 - 1e-9);
        let a1 = bessel_j(5, 2.0 + 1e-9);
        assert!((b1 - a1).abs() < 1e-8);
    }

    #[test]
    fn three_term_recurrence_holds_across_calls() {
        for (n, t) in [(1u32, 2.7), (4, 9.2), (10, 3.0), (7, 50.0)] {
            let lhs = bessel_j(n - 1, t) + bessel_j(n + 1, t);
            let rhs = 2.0 * n as f64 / t * bessel_j(n, t);
            assert!((lhs - rhs).abs() < 1e-12, "n = {n}, t = {t}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn derivative_identity() {
        // J_0' = -J_1, checked by central difference.
        let (t, h) = (3.0, 1e-5);
        let deriv = (bessel_j(0, t + h) - bessel_j(0, t - h)) / (2.0 * h);
        assert!((deriv + bessel_j(1, t)).abs() < 1e-8);
    }

    #[test]
    fn magnitude_bound() {
        for n in 0..30u32 {
            for i in 0..60 {
                let t = i as f64 * 0.7;
                assert!(bessel_j(n, t).abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn matches_the_asymptotic_expansion_at_large_t() {
        for &t in &[50.0, 200.0, 1000.0] {
            for n in 0..6u32 {
                let err = (bessel_j(n, t) - asymptotic(n, t)).abs();
                assert!(err < 2.0 / (t * t), "n = {n}, t = {t}: err {err}");
            }
        }
    }

    #[test]
    fn nan_propagates() {
        assert!(bessel_j(3, f64::NAN).is_nan());
    }
}
