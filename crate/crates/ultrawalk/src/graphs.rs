//! The four homogeneous reference graphs the hierarchical walk is contrasted
//! against: cycle C_N, integer line Z, hypercube W_N, complete graph K_N.
//! The walk Hamiltonian is the adjacency matrix; all four have closed-form
//! probabilities, so exact (rational) time averages are available alongside
//! numeric quadrature oracles.
//!
//! Their large-size behavior frames the taxonomy: the cycle, line, and
//! hypercube spread (max time-averaged probability -> 0), the complete graph
//! pins all weight on the start (-> 1 at site 0), and the hierarchical walk
//! alone keeps strictly positive weight at *every* distance scale.
//!
//! Hypercube tables are per Hamming class (k = 0..=N with C(N, k) sites), so
//! nothing of size 2^N is ever materialized. The per-class averages
//! 2^-2N C(2k, k) C(2(N-k), N-k) are the discrete arcsine weights of the
//! classical simple walk — an exact identity, tested in rational arithmetic.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;

use crate::bessel::bessel_j;
use crate::error::{Error, Result};
use crate::space::ENUMERATION_CAP;

/// A reference graph family and size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphSpec {
    /// Cycle C_N, N >= 3 sites.
    Cycle(u64),
    /// The integer line Z.
    Line,
    /// Hypercube W_N with 2^N sites, N >= 1 (stored per Hamming class).
    Hypercube(u32),
    /// Complete graph K_N, N >= 2 sites.
    Complete(u64),
}

impl GraphSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GraphSpec::Cycle(n) if n < 3 => {
                Err(Error::Domain(format!("a cycle needs at least 3 sites, got {n}")))
            }
            GraphSpec::Hypercube(n) if n < 1 => {
                Err(Error::Domain("a hypercube needs dimension at least 1".into()))
            }
            GraphSpec::Complete(n) if n < 2 => {
                Err(Error::Domain(format!("a complete graph needs at least 2 sites, got {n}")))
            }
            _ => Ok(()),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            GraphSpec::Cycle(_) => "cycle",
            GraphSpec::Line => "line",
            GraphSpec::Hypercube(_) => "hypercube",
            GraphSpec::Complete(_) => "complete",
        }
    }
}

fn rat(n: BigInt, d: BigInt) -> BigRational {
    BigRational::new(n, d)
}

/// Exact time-averaged distribution on the cycle C_N:
/// P_bar(n) = 1/N + 2 R_N(n)/N^2, where the eigenphase degeneracies put
/// R_N = (N-1)/2 at n = 0 for odd N, and R_N = (N-2)/2 at n = 0 and n = N/2
/// for even N, with flat -1/2 (odd) or -1 (even) elsewhere.
pub fn cycle_time_averaged(n_sites: u64) -> Result<Vec<BigRational>> {
    GraphSpec::Cycle(n_sites).validate()?;
    if n_sites > ENUMERATION_CAP {
        return Err(Error::Resource { needed: n_sites, cap: ENUMERATION_CAP });
    }
    let n = BigInt::from(n_sites);
    let nsq = n.clone() * n.clone();
    let base = rat(BigInt::one(), n.clone());
    let (peak, flat) = if n_sites % 2 == 1 {
        (
            base.clone() + rat(n.clone() - 1, nsq.clone()),
            base.clone() - rat(BigInt::one(), nsq.clone()),
        )
    } else {
        (
            base.clone() + rat(n.clone() - 2, nsq.clone()),
            base - rat(BigInt::from(2), nsq),
        )
    };
    let mut out = vec![flat; n_sites as usize];
    out[0] = peak.clone();
    if n_sites.is_multiple_of(2) {
        out[n_sites as usize / 2] = peak;
    }
    Ok(out)
}

/// Numeric oracle for the cycle: trapezoid average over [0, t_max] of
/// |<n| e^(itA) |0>|^2 from the circulant eigendecomposition
/// (lambda_j = 2 cos(2 pi j / N)), independent of the closed form.
pub fn cycle_time_averaged_oracle(n_sites: u64, t_max: f64) -> Result<Vec<f64>> {
    GraphSpec::Cycle(n_sites).validate()?;
    if n_sites > 512 {
        return Err(Error::Resource { needed: n_sites, cap: 512 });
    }
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::Domain(format!("t_max must be positive, got {t_max}")));
    }
    let n = n_sites as usize;
    let lambdas: Vec<f64> = (0..n)
        .map(|j| 2.0 * (2.0 * std::f64::consts::PI * j as f64 / n as f64).cos())
        .collect();
    let fourier: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let (site, j) = (idx / n, idx % n);
            Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (site * j % n) as f64 / n as f64)
        })
        .collect();
    // Spectral spread <= 4, so 0.04 resolves every phase difference.
    let steps = (t_max / 0.04).ceil() as u64;
    let h = t_max / steps as f64;
    let mut acc = vec![0.0f64; n];
    let mut phases = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..=steps {
        let t = i as f64 * h;
        let weight = if i == 0 || i == steps { 0.5 } else { 1.0 };
        for (ph, &l) in phases.iter_mut().zip(&lambdas) {
            *ph = Complex64::from_polar(1.0, t * l);
        }
        for (site, a) in acc.iter_mut().enumerate() {
            let mut amp = Complex64::new(0.0, 0.0);
            for (j, ph) in phases.iter().enumerate() {
                amp += ph * fourier[site * n + j];
            }
            *a += weight * amp.norm_sqr() / (n * n) as f64;
        }
    }
    Ok(acc.into_iter().map(|v| v / steps as f64).collect())
}

/// P(n, t) = J_n(t)^2 on the integer line (walk started at 0); symmetric in
/// the sign of n.
pub fn line_probability(n: i64, t: f64) -> Result<f64> {
    let order = n.unsigned_abs();
    if order > 1_000_000 {
        return Err(Error::Resource { needed: order, cap: 1_000_000 });
    }
    Ok(bessel_j(order as u32, t).powi(2))
}

/// Finite-T time average (1/T) int_0^T J_n(s)^2 ds by trapezoid quadrature;
/// tends to 0 as T grows (the line walk never localizes).
pub fn line_time_average(n: i64, t_max: f64) -> Result<f64> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::Domain(format!("t_max must be positive, got {t_max}")));
    }
    // J_n^2 oscillates at frequency <= 2; 0.02 steps keep the trapezoid
    // error orders below the thresholds this average is compared against.
    let steps = (t_max / 0.02).ceil() as u64;
    let h = t_max / steps as f64;
    let mut acc = 0.0;
    for i in 0..=steps {
        let weight = if i == 0 || i == steps { 0.5 } else { 1.0 };
        acc += weight * line_probability(n, i as f64 * h)?;
    }
    Ok(acc / steps as f64)
}

/// Hypercube probability at Hamming distance k from the start:
/// P_N(k, t) = cos(t/N)^(2(N-k)) sin(t/N)^(2k).
pub fn hypercube_probability(k: u32, n_dim: u32, t: f64) -> Result<f64> {
    GraphSpec::Hypercube(n_dim).validate()?;
    if k > n_dim {
        return Err(Error::Domain(format!(
            "Hamming class k = {k} exceeds the dimension N = {n_dim}"
        )));
    }
    let u = t / n_dim as f64;
    Ok(u.cos().powi(2 * (n_dim - k) as i32) * u.sin().powi(2 * k as i32))
}

/// Exact C(n, k) — the Hamming class sizes of the hypercube walk.
pub fn binomial(n: u64, k: u64) -> BigInt {
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 1..=k {
        acc = acc * BigInt::from(n - k + i) / BigInt::from(i);
    }
    acc
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (1..=k).map(|i| (((n - k + i) as f64) / i as f64).ln()).sum()
}

/// Exact time-averaged hypercube weights, indexed by Hamming class.
#[derive(Debug, Clone, PartialEq)]
pub struct HypercubeAverages {
    /// P_bar(V_k) = 2^-2N C(2k, k) C(2(N-k), N-k): the arcsine weights.
    pub per_class: Vec<BigRational>,
    /// P_bar(n) for one site n in V_k: per_class[k] / C(N, k).
    pub per_site: Vec<BigRational>,
}

/// Exact per-class and per-site time averages for W_N.
pub fn hypercube_time_averaged(n_dim: u32) -> Result<HypercubeAverages> {
    GraphSpec::Hypercube(n_dim).validate()?;
    if n_dim > 20_000 {
        return Err(Error::Resource { needed: n_dim as u64, cap: 20_000 });
    }
    let n = n_dim as u64;
    let denom = BigInt::from(4).pow(n_dim);
    let mut per_class = Vec::with_capacity(n_dim as usize + 1);
    let mut per_site = Vec::with_capacity(n_dim as usize + 1);
    for k in 0..=n {
        let weight = binomial(2 * k, k) * binomial(2 * (n - k), n - k);
        let class = rat(weight, denom.clone());
        per_site.push(class.clone() / BigRational::from_integer(binomial(n, k)));
        per_class.push(class);
    }
    Ok(HypercubeAverages { per_class, per_site })
}

/// Per-site hypercube time average as a float, evaluated in log space so
/// dimensions in the thousands cause no overflow.
pub fn hypercube_site_average(k: u32, n_dim: u32) -> Result<f64> {
    GraphSpec::Hypercube(n_dim).validate()?;
    if k > n_dim {
        return Err(Error::Domain(format!(
            "Hamming class k = {k} exceeds the dimension N = {n_dim}"
        )));
    }
    let (n, k) = (n_dim as u64, k as u64);
    let ln = ln_binomial(2 * k, k) + ln_binomial(2 * (n - k), n - k)
        - ln_binomial(n, k)
        - 2.0 * n as f64 * 2.0f64.ln();
    Ok(ln.exp())
}

/// The largest per-site time-averaged value on W_N (the taxonomy quantity:
/// it vanishes as N grows).
pub fn hypercube_max_site_average(n_dim: u32) -> Result<f64> {
    let mut max = 0.0f64;
    for k in 0..=n_dim {
        max = max.max(hypercube_site_average(k, n_dim)?);
    }
    Ok(max)
}

/// Quadrature oracle for the per-site class-k average: the integrand is a
/// trigonometric polynomial of degree 2N in t/N with period pi N, so the
/// periodic trapezoid rule with 2N + 8 samples is exact (to rounding).
pub fn hypercube_time_averaged_numeric(k: u32, n_dim: u32) -> Result<f64> {
    GraphSpec::Hypercube(n_dim).validate()?;
    if k > n_dim {
        return Err(Error::Domain(format!(
            "Hamming class k = {k} exceeds the dimension N = {n_dim}"
        )));
    }
    let samples = 2 * n_dim as u64 + 8;
    let mut acc = 0.0;
    for i in 0..samples {
        let u = std::f64::consts::PI * i as f64 / samples as f64;
        acc += u.cos().powi(2 * (n_dim - k) as i32) * u.sin().powi(2 * k as i32);
    }
    Ok(acc / samples as f64)
}

/// Complete-graph probability: P(0, t) = ((N-1)^2 + 1 + 2(N-1) cos(Nt))/N^2
/// at the start, P(other, t) = 2(1 - cos(Nt))/N^2 elsewhere.
pub fn complete_probability(at_origin: bool, n_sites: u64, t: f64) -> Result<f64> {
    GraphSpec::Complete(n_sites).validate()?;
    let n = n_sites as f64;
    let c = (n * t).cos();
    Ok(if at_origin {
        ((n - 1.0) * (n - 1.0) + 1.0 + 2.0 * (n - 1.0) * c) / (n * n)
    } else {
        2.0 * (1.0 - c) / (n * n)
    })
}

/// Exact complete-graph time averages: ((N-1)^2 + 1)/N^2 at the start, 2/N^2
/// elsewhere. The start value tends to 1: complete-graph localization.
pub fn complete_time_averaged(n_sites: u64) -> Result<(BigRational, BigRational)> {
    GraphSpec::Complete(n_sites).validate()?;
    let n = BigInt::from(n_sites);
    let nsq = n.clone() * n.clone();
    let origin = rat((n.clone() - 1) * (n - 1) + 1, nsq.clone());
    Ok((origin, rat(BigInt::from(2), nsq)))
}
