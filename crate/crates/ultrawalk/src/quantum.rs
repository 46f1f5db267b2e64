//! The continuous-time quantum walk e^(itH) started at site 0, evaluated in
//! O(M) through its level-class compression.
//!
//! Amplitudes from the origin are constant on each level class V_k, so the
//! full p^M-site state is carried by M+1 class values:
//!
//! ```text
//! a_0(t) = (p-1) sum_(m=0)^(M-1) p^-(m+1) e^(it eta_m) + p^-M e^(it eta_M)
//! a_k(t) = -p^-k e^(it eta_(k-1))
//!          + (p-1) sum_(m=k)^(M-1) p^-(m+1) e^(it eta_m) + p^-M e^(it eta_M)
//! a_M(t) = p^-M (e^(it eta_M) - e^(it eta_(M-1)))
//! ```
//!
//! (with the default diagonal, eta_M = 0 and the last factors reduce to the
//! familiar constants). Evaluating the shared suffix sums once makes a full
//! profile O(M), not O(M^2), and no dense object ever appears.
//!
//! Infinite-time averages of the class probabilities are epsilon-independent
//! rationals; their M -> infinity limits are strictly positive — the walk
//! localizes around its start, in sharp contrast with every homogeneous
//! reference graph and with the classical walk on the same hierarchy.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::hamiltonian::{
    build_hamiltonian_capped, check_compatible, spectrum_closed, EpsilonSequence, Landscape,
    Spectrum, DEFAULT_DENSE_CAP,
};
use crate::space::{class_size, level_class_of, TreeParams};

/// A tree, its couplings, and the precomputed closed-form spectrum. All
/// evaluation methods take `&self`, so one instance can serve many threads.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkParams {
    tp: TreeParams,
    es: EpsilonSequence,
    spectrum: Spectrum,
}

impl WalkParams {
    pub fn new(tp: TreeParams, es: EpsilonSequence) -> Result<Self> {
        check_compatible(&es, &tp)?;
        let spectrum = spectrum_closed(&es, &tp)?;
        Ok(WalkParams { tp, es, spectrum })
    }

    pub fn tree(&self) -> &TreeParams {
        &self.tp
    }

    pub fn couplings(&self) -> &EpsilonSequence {
        &self.es
    }

    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }
}

/// One value per level class V_0..V_M. The per-class storage is the whole
/// point: expanded, entry k stands for class_size(k) identical sites.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfile<T> {
    p: u32,
    values: Vec<T>,
}

impl<T> ClassProfile<T> {
    pub(crate) fn new(p: u32, values: Vec<T>) -> Self {
        ClassProfile { p, values }
    }

    /// Depth M; classes are indexed 0..=M.
    pub fn levels(&self) -> u32 {
        (self.values.len() - 1) as u32
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, k: u32) -> &T {
        &self.values[k as usize]
    }

    /// |V_k| for this profile's p.
    pub fn class_size(&self, k: u32) -> u64 {
        if k == 0 {
            1
        } else {
            (self.p as u64 - 1) * (self.p as u64).pow(k - 1)
        }
    }
}

impl ClassProfile<f64> {
    /// sum_k |V_k| * value_k — total probability when the values are
    /// per-site probabilities.
    pub fn weighted_total(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, v)| self.class_size(k as u32) as f64 * v)
            .sum()
    }
}

impl ClassProfile<Complex64> {
    /// sum_k |V_k| * |a_k|^2 — the squared norm of the expanded state.
    pub fn weighted_norm_sq(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(k, a)| self.class_size(k as u32) as f64 * a.norm_sqr())
            .sum()
    }
}

/// Expand a class profile to the full p^M-site vector (test/oracle helper;
/// the production paths never materialize this).
pub fn expand_to_sites<T: Copy>(profile: &ClassProfile<T>, tp: &TreeParams) -> Vec<T> {
    let mut out = Vec::with_capacity(tp.site_count() as usize);
    for k in 0..=tp.levels() {
        let size = class_size(k, tp).expect("class index in range") as usize;
        out.extend(std::iter::repeat_n(*profile.value(k), size));
    }
    out
}

fn require_finite_time(t: f64) -> Result<()> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("time must be finite, got {t}")));
    }
    Ok(())
}

/// Class amplitudes of e^(itH) e_0 in O(M). t = 0 returns the exact basis
/// state.
pub fn amplitude(wp: &WalkParams, t: f64) -> Result<ClassProfile<Complex64>> {
    require_finite_time(t)?;
    let p = wp.tp.p() as f64;
    let m_depth = wp.tp.levels() as usize;
    let mut values = vec![Complex64::new(0.0, 0.0); m_depth + 1];
    if t == 0.0 {
        values[0] = Complex64::new(1.0, 0.0);
        return Ok(ClassProfile::new(wp.tp.p(), values));
    }
    let etas = wp.spectrum.etas();
    let phase = |eta: f64| Complex64::from_polar(1.0, t * eta);
    let z_top = p.powi(-(m_depth as i32)) * phase(etas[m_depth]);
    values[m_depth] = z_top - p.powi(-(m_depth as i32)) * phase(etas[m_depth - 1]);
    // suffix = sum_(m=k)^(M-1) p^-(m+1) e^(it eta_m), accumulated downward in k.
    let mut suffix = Complex64::new(0.0, 0.0);
    for k in (0..m_depth).rev() {
        suffix += p.powi(-(k as i32 + 1)) * phase(etas[k]);
        values[k] = (p - 1.0) * suffix + z_top;
        if k > 0 {
            values[k] -= p.powi(-(k as i32)) * phase(etas[k - 1]);
        }
    }
    Ok(ClassProfile::new(wp.tp.p(), values))
}

/// Per-class return/transfer probabilities |a_k(t)|^2 in O(M), evaluated
/// through the real cosine/sine form of the class amplitudes.
pub fn probability_profile(wp: &WalkParams, t: f64) -> Result<ClassProfile<f64>> {
    require_finite_time(t)?;
    let p = wp.tp.p() as f64;
    let m_depth = wp.tp.levels() as usize;
    let etas = wp.spectrum.etas();
    let mut values = vec![0.0f64; m_depth + 1];
    if t == 0.0 {
        values[0] = 1.0;
        return Ok(ClassProfile::new(wp.tp.p(), values));
    }
    let pm = p.powi(-(m_depth as i32));
    let (top_c, top_s) = ((t * etas[m_depth]).cos() * pm, (t * etas[m_depth]).sin() * pm);
    // |a_M|^2 = 2 p^-2M (1 - cos(t (eta_(M-1) - eta_M)))
    values[m_depth] = 2.0 * pm * pm * (1.0 - (t * (etas[m_depth - 1] - etas[m_depth])).cos());
    let (mut suf_c, mut suf_s) = (0.0f64, 0.0f64);
    for k in (0..m_depth).rev() {
        let w = p.powi(-(k as i32 + 1));
        suf_c += w * (t * etas[k]).cos();
        suf_s += w * (t * etas[k]).sin();
        let (mut re, mut im) = ((p - 1.0) * suf_c + top_c, (p - 1.0) * suf_s + top_s);
        if k > 0 {
            let v = p.powi(-(k as i32));
            re -= v * (t * etas[k - 1]).cos();
            im -= v * (t * etas[k - 1]).sin();
        }
        values[k] = re * re + im * im;
    }
    Ok(ClassProfile::new(wp.tp.p(), values))
}

/// Probability of the walk being at the specific site n at time t.
pub fn probability(wp: &WalkParams, n: u64, t: f64) -> Result<f64> {
    let k = level_class_of(n, &wp.tp)?;
    Ok(*probability_profile(wp, t)?.value(k))
}

/// Dense-diagonalization oracle for e^(itH) e_0: the full site vector, with
/// no use of the closed forms. Verification path, capped in size.
pub fn evolve_oracle_capped(wp: &WalkParams, t: f64, cap: u64) -> Result<Vec<Complex64>> {
    require_finite_time(t)?;
    let h = build_hamiltonian_capped(&wp.es, &wp.tp, cap)?;
    let n = h.nrows();
    let eig = nalgebra::SymmetricEigen::new(h);
    // a = V diag(e^(it lambda)) V^T e_0; column j of V contributes
    // V[., j] * e^(it lambda_j) * V[0, j].
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        let w = Complex64::from_polar(1.0, t * eig.eigenvalues[j]) * eig.eigenvectors[(0, j)];
        for (i, o) in out.iter_mut().enumerate() {
            *o += eig.eigenvectors[(i, j)] * w;
        }
    }
    Ok(out)
}

/// [`evolve_oracle_capped`] at the default cap.
pub fn evolve_oracle(wp: &WalkParams, t: f64) -> Result<Vec<Complex64>> {
    evolve_oracle_capped(wp, t, DEFAULT_DENSE_CAP)
}

fn big_pow(p: u32, e: u32) -> BigInt {
    BigInt::from(p).pow(e)
}

fn brat(n: i64, d: BigInt) -> BigRational {
    BigRational::new(BigInt::from(n), d)
}

/// Exact infinite-time averages of the class probabilities (they depend on
/// p and M only — any valid coupling sequence gives the same values):
///
/// ```text
/// k = 0:       (p-1)/(p+1) + 2/((p+1) p^2M)
/// 1 <= k < M:  (2/(p+1)) (p^-(2k-1) + p^-2M)
/// k = M:       2/p^2M
/// ```
pub fn time_averaged_exact(tp: &TreeParams) -> Vec<BigRational> {
    let p = tp.p();
    let m_depth = tp.levels();
    let p1 = BigInt::from(p + 1);
    let p2m = big_pow(p, 2 * m_depth);
    let mut out = Vec::with_capacity(m_depth as usize + 1);
    out.push(
        BigRational::new(BigInt::from(p - 1), p1.clone())
            + brat(2, p1.clone() * p2m.clone()),
    );
    for k in 1..m_depth {
        let term = brat(1, big_pow(p, 2 * k - 1)) + brat(1, p2m.clone());
        out.push(term * brat(2, p1.clone()));
    }
    out.push(brat(2, p2m));
    out
}

/// Float view of [`time_averaged_exact`]; reads only p and M from the walk,
/// so any two valid coupling sequences produce identical output.
pub fn time_averaged(wp: &WalkParams) -> ClassProfile<f64> {
    let values = time_averaged_exact(&wp.tp)
        .iter()
        .map(|r| r.to_f64().expect("class average fits in f64"))
        .collect();
    ClassProfile::new(wp.tp.p(), values)
}

/// Smallest trapezoid step count for which [`time_averaged_numeric`] accepts
/// the grid on [0, t_max]: step <= 0.1 / max|eta|.
pub fn quadrature_min_steps(wp: &WalkParams, t_max: f64) -> u64 {
    ((t_max * wp.spectrum.max_abs_eta()) / 0.1).ceil().max(1.0) as u64
}

/// Finite-T trapezoid average of the class probabilities over [0, t_max].
/// Converges to the exact averages at rate O(1/(T * min_gap)); the step must
/// resolve the fastest phase (0.1 / max|eta|) or the grid is rejected.
pub fn time_averaged_numeric(
    wp: &WalkParams,
    t_max: f64,
    steps: u64,
) -> Result<ClassProfile<f64>> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::Domain(format!("t_max must be positive, got {t_max}")));
    }
    if steps == 0 {
        return Err(Error::Domain("steps must be positive".into()));
    }
    let h = t_max / steps as f64;
    let h_max = 0.1 / wp.spectrum.max_abs_eta();
    if h > h_max {
        return Err(Error::Validation(format!(
            "quadrature step {h:.3e} exceeds the resolution limit {h_max:.3e} \
             (0.1/max|eta|); use at least {} steps",
            quadrature_min_steps(wp, t_max)
        )));
    }
    let m_depth = wp.tp.levels() as usize;
    let mut acc = vec![0.0f64; m_depth + 1];
    for i in 0..=steps {
        let weight = if i == 0 || i == steps { 0.5 } else { 1.0 };
        let profile = probability_profile(wp, i as f64 * h)?;
        for (a, v) in acc.iter_mut().zip(profile.values()) {
            *a += weight * v;
        }
    }
    for a in &mut acc {
        *a /= steps as f64;
    }
    Ok(ClassProfile::new(wp.tp.p(), acc))
}

/// Exact M -> infinity limit of the time-averaged class probabilities:
/// (p-1)/(p+1) at the origin class, 2/((p+1) p^(2k-1)) beyond. All strictly
/// positive: the walk localizes at every distance scale.
pub fn time_averaged_limit_exact(p: u32, k: u32) -> Result<BigRational> {
    if p < 2 {
        return Err(Error::Domain(format!("p must be at least 2, got {p}")));
    }
    Ok(if k == 0 {
        BigRational::new(BigInt::from(p - 1), BigInt::from(p + 1))
    } else {
        brat(2, BigInt::from(p + 1) * big_pow(p, 2 * k - 1))
    })
}

/// Float view of [`time_averaged_limit_exact`].
pub fn time_averaged_limit(p: u32, k: u32) -> Result<f64> {
    Ok(time_averaged_limit_exact(p, k)?.to_f64().expect("limit fits in f64"))
}

/// The finite-M average exceeds its M -> infinity limit by exactly
/// 2/((p+1) p^2M) — uniformly in the class index k = 0..=M.
pub fn limit_gap_exact(p: u32, m_depth: u32) -> BigRational {
    brat(2, BigInt::from(p + 1) * big_pow(p, 2 * m_depth))
}

/// Mean tree distance from the origin at time t:
/// sum_k |V_k| p^-(M-k) P(V_k, t). O(M).
pub fn mean_distance(wp: &WalkParams, t: f64) -> Result<f64> {
    let p = wp.tp.p() as f64;
    let m_depth = wp.tp.levels();
    let profile = probability_profile(wp, t)?;
    let mut sum = 0.0;
    for k in 1..=m_depth {
        let weight = (p - 1.0) * p.powi(k as i32 - 1) * p.powi(-((m_depth - k) as i32));
        sum += weight * profile.value(k);
    }
    Ok(sum)
}

/// Exact infinite-time average of the mean distance:
///
/// ```text
/// d_bar = 2(p-1)(M-1)/((p+1) p^M)
///       + 2 [((p-1)(p+1)^2 + 1) p^(2M-2) - 1] / ((p+1)^2 p^(3M-1))
/// ```
///
/// equal (exactly) to the class-average-weighted sum over the exact
/// time-averaged profile; p^M d_bar / M -> 2(p-1)/(p+1) as M grows.
pub fn mean_distance_time_averaged_exact(tp: &TreeParams) -> BigRational {
    let p = tp.p();
    let m_depth = tp.levels();
    let p1sq = BigInt::from(p + 1) * BigInt::from(p + 1);
    let first = BigRational::new(
        BigInt::from(2) * BigInt::from(p - 1) * BigInt::from(m_depth - 1),
        BigInt::from(p + 1) * big_pow(p, m_depth),
    );
    let inner = (BigInt::from(p - 1) * p1sq.clone() + BigInt::from(1))
        * big_pow(p, 2 * m_depth - 2)
        - BigInt::from(1);
    let second = BigRational::new(BigInt::from(2) * inner, p1sq * big_pow(p, 3 * m_depth - 1));
    first + second
}

/// The limit of p^M * d_bar / M as M -> infinity.
pub fn mean_distance_scaled_limit(p: u32) -> BigRational {
    BigRational::new(BigInt::from(2) * BigInt::from(p - 1), BigInt::from(p + 1))
}

/// A coupling landscape extended to every depth k >= 1 (the M -> infinity
/// walk). Only the linear and exponential families admit a strictly
/// decreasing extension; `anchor` fixes the reference level the formulas are
/// centered on (couplings are evaluated at offset k - anchor).
#[derive(Debug, Clone, PartialEq)]
pub struct InfiniteLandscape {
    p: u32,
    ls: Landscape,
    anchor: u32,
}

impl InfiniteLandscape {
    pub fn new(p: u32, ls: Landscape, anchor: u32) -> Result<Self> {
        if p < 2 {
            return Err(Error::Validation(format!("p must be at least 2, got {p}")));
        }
        if anchor > 10_000 {
            return Err(Error::Validation(format!(
                "anchor depth {anchor} is unreasonably deep (max 10000)"
            )));
        }
        match &ls {
            Landscape::Linear { .. } | Landscape::Exponential { .. } => {}
            Landscape::Logarithmic { .. } => {
                return Err(Error::Validation(
                    "the logarithmic landscape grows like p^((alpha-1)k) at depth and \
                     has no strictly decreasing infinite extension"
                        .into(),
                ))
            }
            Landscape::Explicit(_) => {
                return Err(Error::Validation(
                    "an explicit coupling list is finite; the infinite walk needs a \
                     parametric landscape"
                        .into(),
                ))
            }
        }
        // Parameter validation via a probe evaluation.
        crate::hamiltonian::anchored_couplings(&ls, p, 1, anchor)?;
        Ok(InfiniteLandscape { p, ls, anchor })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// eps_k for any k >= 1.
    pub fn coupling(&self, k: u32) -> f64 {
        self.ls.value_at_offset(self.p, k as i64 - self.anchor as i64)
    }

    /// eta_m of the infinite walk (m >= 0), with the row-sum-zero diagonal:
    /// eta_m = -(p-1) sum_(k>m) p^(k-1) eps_k - p^m eps_(m+1), which tends
    /// to 0 from below as m grows.
    pub fn eta(&self, m: u32) -> f64 {
        let p = self.p as f64;
        match self.ls {
            Landscape::Linear { w0, alpha } => {
                // p^(k-1) eps_k = c p^(-alpha k) with c = w0 p^((1+alpha) anchor - 1):
                // the tail sum is geometric.
                let c = w0 * p.powf((1.0 + alpha) * self.anchor as f64 - 1.0);
                let head = c * p.powf(-alpha * (m as f64 + 1.0));
                -head * ((p - 1.0) / (1.0 - p.powf(-alpha)) + 1.0)
            }
            Landscape::Exponential { w0, alpha } => {
                // term_k = p^(k-1) eps_k = w0 p^(anchor-1) exp(-alpha p^(k-anchor));
                // doubly-exponential decay once k passes the anchor.
                let scale = w0 * p.powf(self.anchor as f64 - 1.0);
                let term = |k: u32| scale * (-alpha * p.powf(k as f64 - self.anchor as f64)).exp();
                let first = term(m + 1);
                let mut tail = 0.0;
                let mut k = m + 1;
                loop {
                    let v = term(k);
                    tail += v;
                    k += 1;
                    // Terms are near-constant up to the anchor depth, then
                    // die doubly exponentially; the hard cap is unreachable.
                    if v == 0.0 || (k > self.anchor && v < tail * 1e-18) || k > self.anchor + 2_000
                    {
                        break;
                    }
                }
                -(p - 1.0) * tail - first
            }
            _ => unreachable!("validated in the constructor"),
        }
    }
}

/// A truncated series value together with a guaranteed radius containing the
/// exact value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedProbability {
    pub value: f64,
    pub tail_radius: f64,
}

/// Return/transfer probability of the M -> infinity walk at class k and time
/// t, truncating the spectral series after `trunc` modes. The discarded
/// amplitude tail has modulus at most p^-trunc (geometric tail of the
/// (p-1) p^-(m+1) summands), so the exact probability lies within
/// (2 rho + r) r of the value, rho being the truncated amplitude modulus.
/// The radius is the exact-arithmetic truncation bound — it is tight at
/// t = 0, where every discarded phase aligns — and does not fold in the
/// machine-epsilon rounding of the f64 evaluation itself.
pub fn probability_infinite(
    inf: &InfiniteLandscape,
    k: u32,
    t: f64,
    trunc: u32,
) -> Result<TruncatedProbability> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("time must be finite, got {t}")));
    }
    if trunc <= k {
        return Err(Error::Validation(format!(
            "truncation K = {trunc} must exceed the class index k = {k} \
             (the class-k series starts at mode k)"
        )));
    }
    let p = inf.p as f64;
    let mut a = Complex64::new(0.0, 0.0);
    for m in k..trunc {
        a += p.powi(-(m as i32 + 1)) * Complex64::from_polar(1.0, t * inf.eta(m));
    }
    a *= p - 1.0;
    if k > 0 {
        a -= p.powi(-(k as i32)) * Complex64::from_polar(1.0, t * inf.eta(k - 1));
    }
    let r = p.powi(-(trunc as i32));
    let rho = a.norm();
    Ok(TruncatedProbability { value: rho * rho, tail_radius: (2.0 * rho + r) * r })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::class_members;

    fn walk(p: u32, m: u32, eps: &[f64]) -> WalkParams {
        let tp = TreeParams::new(p, m).unwrap();
        let es = EpsilonSequence::new(p, eps.to_vec()).unwrap();
        WalkParams::new(tp, es).unwrap()
    }

    #[test]
    fn walk_starts_at_the_origin() {
        let wp = walk(3, 2, &[2.0, 1.0]);
        let a = amplitude(&wp, 0.0).unwrap();
        assert_eq!(a.value(0), &Complex64::new(1.0, 0.0));
        assert_eq!(a.value(1), &Complex64::new(0.0, 0.0));
        assert_eq!(a.value(2), &Complex64::new(0.0, 0.0));
        let p = probability_profile(&wp, 0.0).unwrap();
        assert_eq!(p.values(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn norm_is_conserved() {
        let wp = walk(3, 4, &[4.0, 2.0, 1.0, 0.5]);
        for t in [0.0, 0.1, 1.0, 7.3, 55.0, 1000.0] {
            let n = amplitude(&wp, t).unwrap().weighted_norm_sq();
            assert!((n - 1.0).abs() < 1e-12, "norm {n} at t = {t}");
        }
    }

    #[test]
    fn probability_is_squared_amplitude() {
        let wp = walk(2, 3, &[4.0, 2.0, 1.0]);
        for t in [0.3, 2.0, 9.4] {
            let a = amplitude(&wp, t).unwrap();
            let p = probability_profile(&wp, t).unwrap();
            for k in 0..=3u32 {
                assert!((a.value(k).norm_sqr() - p.value(k)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn printed_return_probability_p3_m2() {
        // P(0,t) = (41 + 24 cos((eta0-eta1) t) + 12 cos(eta0 t) + 4 cos(eta1 t))/81
        // P(V1,t) = (14 - 12 cos((eta0-eta1) t) - 6 cos(eta0 t) + 4 cos(eta1 t))/81
        // P(V2,t) = 2 (1 - cos(eta1 t))/81
        let wp = walk(3, 2, &[2.0, 1.0]);
        let (e0, e1) = (-12.0, -9.0);
        for t in [0.0, 0.4, 1.1, 3.9, 12.0] {
            let p = probability_profile(&wp, t).unwrap();
            let p0 = (41.0
                + 24.0 * ((e0 - e1) * t).cos()
                + 12.0 * (e0 * t).cos()
                + 4.0 * (e1 * t).cos())
                / 81.0;
            let p1 = (14.0 - 12.0 * ((e0 - e1) * t).cos() - 6.0 * (e0 * t).cos()
                + 4.0 * (e1 * t).cos())
                / 81.0;
            let p2 = 2.0 * (1.0 - (e1 * t).cos()) / 81.0;
            assert!((p.value(0) - p0).abs() < 1e-14, "t = {t}");
            assert!((p.value(1) - p1).abs() < 1e-14, "t = {t}");
            assert!((p.value(2) - p2).abs() < 1e-14, "t = {t}");
        }
    }

    #[test]
    fn far_class_amplitude_is_small() {
        let wp = walk(3, 3, &[3.0, 2.0, 1.0]);
        let bound = 2.0 * 3.0f64.powi(-3);
        for t in [0.2, 1.7, 31.0] {
            assert!(amplitude(&wp, t).unwrap().value(3).norm() <= bound + 1e-15);
        }
    }

    #[test]
    fn diagonal_override_is_a_global_phase() {
        let tp = TreeParams::new(3, 2).unwrap();
        let es = EpsilonSequence::new(3, vec![2.0, 1.0]).unwrap();
        let wp = WalkParams::new(tp, es.clone()).unwrap();
        let wp_shift =
            WalkParams::new(tp, es.with_eps0(-6.5).unwrap()).unwrap();
        for t in [0.0, 0.7, 3.1, 9.9] {
            let (a, b) =
                (probability_profile(&wp, t).unwrap(), probability_profile(&wp_shift, t).unwrap());
            for k in 0..=2u32 {
                assert!((a.value(k) - b.value(k)).abs() <= 1e-12, "k = {k}, t = {t}");
            }
        }
    }

    #[test]
    fn oracle_agrees_with_closed_amplitudes() {
        let wp = walk(3, 2, &[0.4, 0.15]);
        for t in [0.0, 1.3, 8.6] {
            let sites = evolve_oracle(&wp, t).unwrap();
            let closed = expand_to_sites(&amplitude(&wp, t).unwrap(), wp.tree());
            for (i, (a, b)) in sites.iter().zip(&closed).enumerate() {
                assert!((a - b).norm() < 1e-12, "site {i} at t = {t}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn oracle_amplitudes_are_constant_on_classes() {
        let wp = walk(2, 4, &[1.0, 0.5, 0.25, 0.125]);
        let sites = evolve_oracle(&wp, 2.9).unwrap();
        for k in 0..=4u32 {
            let members = class_members(k, wp.tree()).unwrap();
            let first = sites[members[0] as usize];
            for &n in &members {
                assert!((sites[n as usize] - first).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn oracle_rejects_nonfinite_time() {
        let wp = walk(2, 1, &[1.0]);
        assert!(matches!(evolve_oracle(&wp, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_forms_reject_nonfinite_time() {
        let wp = walk(2, 1, &[1.0]);
        assert!(matches!(amplitude(&wp, f64::INFINITY), Err(Error::Domain(_))));
        assert!(matches!(probability_profile(&wp, f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(mean_distance(&wp, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn exact_time_average_p3_m2() {
        let tp = TreeParams::new(3, 2).unwrap();
        let avg = time_averaged_exact(&tp);
        let expect = |n: i64, d: i64| {
            BigRational::new(BigInt::from(n), BigInt::from(d))
        };
        assert_eq!(avg, vec![expect(41, 81), expect(14, 81), expect(2, 81)]);
    }

    #[test]
    fn exact_time_average_p2_m1() {
        let tp = TreeParams::new(2, 1).unwrap();
        let avg = time_averaged_exact(&tp);
        let half = BigRational::new(BigInt::from(1), BigInt::from(2));
        assert_eq!(avg, vec![half.clone(), half]);
    }

    #[test]
    fn exact_time_averages_total_one() {
        for (p, m) in [(2u32, 1u32), (2, 6), (3, 4), (5, 3), (7, 2)] {
            let tp = TreeParams::new(p, m).unwrap();
            let avg = time_averaged_exact(&tp);
            let mut total = BigRational::new(BigInt::from(0), BigInt::from(1));
            for (k, v) in avg.iter().enumerate() {
                let size = class_size(k as u32, &tp).unwrap();
                total += BigRational::from_integer(BigInt::from(size)) * v;
            }
            assert_eq!(total, BigRational::from_integer(BigInt::from(1)), "p={p} M={m}");
        }
    }

    #[test]
    fn time_average_reads_only_tree_shape() {
        let a = time_averaged(&walk(3, 3, &[9.0, 4.0, 2.0]));
        let b = time_averaged(&walk(3, 3, &[0.7, 0.31, 0.0004]));
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn quadrature_grid_validation() {
        let wp = walk(3, 2, &[2.0, 1.0]); // max |eta| = 12
        assert_eq!(quadrature_min_steps(&wp, 10.0), 1200);
        assert!(time_averaged_numeric(&wp, 10.0, 1199).is_err());
        assert!(time_averaged_numeric(&wp, 10.0, 1200).is_ok());
        assert!(time_averaged_numeric(&wp, -1.0, 100).is_err());
        assert!(time_averaged_numeric(&wp, 10.0, 0).is_err());
    }

    #[test]
    fn numeric_average_approaches_exact() {
        let wp = walk(3, 2, &[2.0, 1.0]);
        let t_max = 400.0;
        let numeric =
            time_averaged_numeric(&wp, t_max, quadrature_min_steps(&wp, t_max)).unwrap();
        let exact = time_averaged(&wp);
        for k in 0..=2u32 {
            // residual oscillations die like 1/(T g) = 1/(400 * 3)
            assert!(
                (numeric.value(k) - exact.value(k)).abs() < 2e-3,
                "class {k}: {} vs {}",
                numeric.value(k),
                exact.value(k)
            );
        }
    }

    #[test]
    fn tiny_window_average_is_the_initial_state() {
        let wp = walk(3, 2, &[2.0, 1.0]);
        let avg = time_averaged_numeric(&wp, 1e-6, 4).unwrap();
        assert!((avg.value(0) - 1.0).abs() < 1e-9);
        assert!(avg.value(1).abs() < 1e-9 && avg.value(2).abs() < 1e-9);
    }

    #[test]
    fn limit_values_normalize_exactly() {
        // Partial weighted sum to depth K plus the exact geometric tail
        // 2/((p+1) p^K) must telescope to 1.
        for p in [2u32, 3, 7] {
            let mut total = time_averaged_limit_exact(p, 0).unwrap();
            let depth = 9u32;
            for k in 1..=depth {
                let weight = BigInt::from(p - 1) * big_pow(p, k - 1);
                total += BigRational::from_integer(weight)
                    * time_averaged_limit_exact(p, k).unwrap();
            }
            total += brat(2, BigInt::from(p + 1) * big_pow(p, depth));
            assert_eq!(total, BigRational::from_integer(BigInt::from(1)), "p = {p}");
        }
    }

    #[test]
    fn limit_values_p3() {
        assert_eq!(
            time_averaged_limit_exact(3, 0).unwrap(),
            BigRational::new(BigInt::from(1), BigInt::from(2))
        );
        assert_eq!(
            time_averaged_limit_exact(3, 1).unwrap(),
            BigRational::new(BigInt::from(1), BigInt::from(6))
        );
        assert_eq!(
            time_averaged_limit_exact(3, 2).unwrap(),
            BigRational::new(BigInt::from(1), BigInt::from(54))
        );
    }

    #[test]
    fn limit_concentrates_as_p_grows() {
        assert!(time_averaged_limit(1_000_003, 0).unwrap() > 0.999_99);
        assert!(time_averaged_limit(1_000_003, 1).unwrap() < 1e-6);
        for k in 0..6u32 {
            assert!(time_averaged_limit(3, k).unwrap() > 0.0);
        }
    }

    #[test]
    fn finite_average_exceeds_limit_by_the_uniform_gap() {
        for (p, m) in [(2u32, 3u32), (3, 2), (5, 4)] {
            let tp = TreeParams::new(p, m).unwrap();
            let avg = time_averaged_exact(&tp);
            let gap = limit_gap_exact(p, m);
            for k in 0..=m {
                let lim = time_averaged_limit_exact(p, k).unwrap();
                assert_eq!(avg[k as usize].clone() - lim, gap, "p={p} M={m} k={k}");
            }
        }
    }

    #[test]
    fn mean_distance_exact_p3_m2() {
        let tp = TreeParams::new(3, 2).unwrap();
        assert_eq!(
            mean_distance_time_averaged_exact(&tp),
            BigRational::new(BigInt::from(64), BigInt::from(243))
        );
    }

    #[test]
    fn mean_distance_closed_form_equals_weighted_sum() {
        for (p, m) in [(2u32, 1u32), (2, 7), (3, 5), (5, 3)] {
            let tp = TreeParams::new(p, m).unwrap();
            let avg = time_averaged_exact(&tp);
            let mut weighted = BigRational::new(BigInt::from(0), BigInt::from(1));
            for k in 1..=m {
                let count = BigInt::from(class_size(k, &tp).unwrap());
                let dist = BigRational::new(BigInt::from(1), big_pow(p, m - k));
                weighted += BigRational::from_integer(count) * dist * avg[k as usize].clone();
            }
            assert_eq!(weighted, mean_distance_time_averaged_exact(&tp), "p={p} M={m}");
        }
    }

    #[test]
    fn mean_distance_at_time_zero_is_zero() {
        let wp = walk(3, 2, &[2.0, 1.0]);
        assert_eq!(mean_distance(&wp, 0.0).unwrap(), 0.0);
        assert!(mean_distance(&wp, 1.3).unwrap() > 0.0);
    }

    #[test]
    fn scaled_mean_distance_approaches_its_limit() {
        for p in [2u32, 3] {
            let tp = TreeParams::new(p, 12).unwrap();
            let scaled = mean_distance_time_averaged_exact(&tp)
                * BigRational::new(big_pow(p, 12), BigInt::from(12));
            let lim = mean_distance_scaled_limit(p);
            let rel = (scaled.to_f64().unwrap() - lim.to_f64().unwrap()).abs()
                / lim.to_f64().unwrap();
            assert!(rel < 0.1, "p = {p}: relative gap {rel}");
        }
    }

    #[test]
    fn infinite_landscape_validation() {
        let lin = Landscape::Linear { w0: 1.0, alpha: 1.0 };
        assert!(InfiniteLandscape::new(3, lin, 0).is_ok());
        assert!(InfiniteLandscape::new(
            3,
            Landscape::Logarithmic { w0: 1.0, alpha: 1.2 },
            0
        )
        .is_err());
        assert!(InfiniteLandscape::new(3, Landscape::Explicit(vec![1.0]), 0).is_err());
    }

    #[test]
    fn infinite_linear_etas_match_the_derived_rate() {
        // p = 3, alpha = 1, w0 = 1, anchor 0: eta_m = -(4/9) 3^-m
        let inf =
            InfiniteLandscape::new(3, Landscape::Linear { w0: 1.0, alpha: 1.0 }, 0).unwrap();
        for m in 0..12u32 {
            let want = -(4.0 / 9.0) * 3.0f64.powi(-(m as i32));
            assert!((inf.eta(m) - want).abs() < 1e-15 * want.abs().max(1e-300));
        }
    }

    #[test]
    fn infinite_etas_match_deep_finite_spectra() {
        let inf =
            InfiniteLandscape::new(2, Landscape::Exponential { w0: 1.0, alpha: 0.4 }, 0).unwrap();
        // Deep finite walk with the same anchored couplings.
        let m_depth = 8u32;
        let eps: Vec<f64> = (1..=m_depth).map(|k| inf.coupling(k)).collect();
        let wp = walk(2, m_depth, &eps);
        for m in 0..4u32 {
            let fin = wp.spectrum().etas()[m as usize];
            let lim = inf.eta(m);
            assert!(
                (fin - lim).abs() <= 1e-12 * fin.abs(),
                "m = {m}: finite {fin} vs infinite {lim}"
            );
        }
    }

    #[test]
    fn infinite_series_telescopes_at_time_zero() {
        let inf =
            InfiniteLandscape::new(3, Landscape::Linear { w0: 1.0, alpha: 1.0 }, 0).unwrap();
        // At t = 0 the bound is exactly tight (aligned phases), so leave
        // room for evaluation rounding on both sides of the comparison.
        let r = probability_infinite(&inf, 0, 0.0, 12).unwrap();
        assert!((r.value - 1.0).abs() <= r.tail_radius + 1e-14);
        let rk = probability_infinite(&inf, 2, 0.0, 12).unwrap();
        assert!(rk.value.abs() <= rk.tail_radius + 1e-14);
    }

    #[test]
    fn truncation_must_exceed_class_index() {
        let inf =
            InfiniteLandscape::new(3, Landscape::Linear { w0: 1.0, alpha: 1.0 }, 0).unwrap();
        assert!(probability_infinite(&inf, 4, 1.0, 4).is_err());
        assert!(probability_infinite(&inf, 4, 1.0, 5).is_ok());
        assert!(probability_infinite(&inf, 0, f64::INFINITY, 5).is_err());
    }

    #[test]
    fn truncated_estimates_refine_monotonically() {
        let inf =
            InfiniteLandscape::new(3, Landscape::Linear { w0: 1.0, alpha: 1.0 }, 0).unwrap();
        let t = 3.7;
        let mut prev: Option<TruncatedProbability> = None;
        for trunc in 4..14u32 {
            let cur = probability_infinite(&inf, 0, t, trunc).unwrap();
            if let Some(prev) = prev {
                assert!(cur.tail_radius < prev.tail_radius);
                assert!(
                    (cur.value - prev.value).abs() <= prev.tail_radius,
                    "K = {trunc}: refinement left the previous radius"
                );
            }
            prev = Some(cur);
        }
    }

    #[test]
    fn truncated_series_matches_deep_finite_walks() {
        let inf =
            InfiniteLandscape::new(3, Landscape::Linear { w0: 1.0, alpha: 1.0 }, 0).unwrap();
        let t = 5.3;
        for trunc in [5u32, 7, 9] {
            let m_depth = trunc + 5;
            let eps: Vec<f64> = (1..=m_depth).map(|k| inf.coupling(k)).collect();
            let wp = walk(3, m_depth, &eps);
            for k in [0u32, 1, 2] {
                let series = probability_infinite(&inf, k, t, trunc).unwrap();
                let finite = *probability_profile(&wp, t).unwrap().value(k);
                assert!(
                    (series.value - finite).abs() <= series.tail_radius + 1e-12,
                    "k = {k}, K = {trunc}: |{} - {finite}| > {}",
                    series.value,
                    series.tail_radius
                );
            }
        }
    }

    #[test]
    fn shared_params_evaluate_concurrently() {
        let wp = walk(3, 3, &[3.0, 2.0, 1.0]);
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..4)
                .map(|i| {
                    let wp = &wp;
                    scope.spawn(move || {
                        amplitude(wp, 0.9 * i as f64).unwrap().weighted_norm_sq()
                    })
                })
                .collect();
            for h in handles {
                assert!((h.join().unwrap() - 1.0).abs() < 1e-12);
            }
        });
    }

    #[test]
    fn expansion_lays_classes_out_in_order() {
        let wp = walk(3, 2, &[2.0, 1.0]);
        let profile = probability_profile(&wp, 1.1).unwrap();
        let sites = expand_to_sites(&profile, wp.tree());
        assert_eq!(sites.len(), 9);
        assert_eq!(sites[0], *profile.value(0));
        assert_eq!(sites[1], *profile.value(1));
        assert_eq!(sites[2], *profile.value(1));
        for &site in &sites[3..9] {
            assert_eq!(site, *profile.value(2));
        }
    }
}
