//! The classical continuous-time Markov chain on the same ball hierarchy.
//!
//! With the row-sum-zero diagonal the hierarchical matrix is itself a CTMC
//! generator Q, and the walk shares the quantum spectrum: the distribution
//! from the origin is the quantum class formula with each phase e^(it eta_m)
//! replaced by the relaxation factor e^(t eta_m) (all eta_m <= 0, eta_M = 0):
//!
//! ```text
//! rho_0(t) = (p-1) sum_(m=0)^(M-1) p^-(m+1) e^(t eta_m) + p^-M
//! rho_k(t) = -p^-k e^(t eta_(k-1))
//!            + (p-1) sum_(m=k)^(M-1) p^-(m+1) e^(t eta_m) + p^-M
//! rho_M(t) = p^-M (1 - e^(t eta_(M-1)))
//! ```
//!
//! Everything relaxes to the uniform distribution p^-M — classically the
//! walk forgets its origin, with a landscape-dependent decay law on the way:
//! steeper-than-geometric "linear" coupling decay gives a power law t^(-1/alpha),
//! the logarithmic landscape a stretched exponential (Kohlrausch-Williams-
//! Watts), and the exponential landscape a 1/log t crawl. Those are
//! infinite-depth asymptotics; at finite depth the curve flattens onto the
//! p^-M plateau, so fits subtract the plateau and must stay on windows that
//! end before it (enforced here, loudly).
//!
//! The decay-law evaluation anchors parametric landscapes at the shallow end
//! (eps_k = f(k), depth-anchored) so the slow modes sit at order-one rates
//! and the asymptotic window is reachable; couplings whose deep tail
//! underflows to zero are handled exactly (frozen levels contribute constant
//! weight).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hamiltonian::{
    anchored_couplings, build_hamiltonian_capped, EpsilonSequence, Landscape, DEFAULT_DENSE_CAP,
};
use crate::quantum::{ClassProfile, WalkParams};
use crate::space::TreeParams;

fn require_default_diagonal(es: &EpsilonSequence) -> Result<()> {
    if !es.eps0_is_default() {
        return Err(Error::Validation(
            "a generator must conserve probability: the eps_0 override is rejected here \
             because rows would no longer sum to zero"
                .into(),
        ));
    }
    Ok(())
}

fn require_classical_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!(
            "classical time must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

/// The dense CTMC generator: the hierarchical matrix with its row-sum-zero
/// diagonal. Oracle-sized only (capped); the spectral paths below never
/// build it.
pub fn generator_capped(
    es: &EpsilonSequence,
    tp: &TreeParams,
    cap: u64,
) -> Result<DMatrix<f64>> {
    require_default_diagonal(es)?;
    build_hamiltonian_capped(es, tp, cap)
}

/// [`generator_capped`] at the default cap.
pub fn generator(es: &EpsilonSequence, tp: &TreeParams) -> Result<DMatrix<f64>> {
    generator_capped(es, tp, DEFAULT_DENSE_CAP)
}

/// Class distribution of e^(tQ) e_0 in O(M). Requires the default diagonal
/// and t >= 0; t = 0 returns the exact point mass.
pub fn classical_distribution(wp: &WalkParams, t: f64) -> Result<ClassProfile<f64>> {
    require_default_diagonal(wp.couplings())?;
    require_classical_time(t)?;
    let p = wp.tree().p() as f64;
    let m_depth = wp.tree().levels() as usize;
    let mut values = vec![0.0f64; m_depth + 1];
    if t == 0.0 {
        values[0] = 1.0;
        return Ok(ClassProfile::new(wp.tree().p(), values));
    }
    let etas = wp.spectrum().etas();
    let pm = p.powi(-(m_depth as i32));
    values[m_depth] = pm * (1.0 - (t * etas[m_depth - 1]).exp());
    let mut suffix = 0.0f64;
    for k in (0..m_depth).rev() {
        suffix += p.powi(-(k as i32 + 1)) * (t * etas[k]).exp();
        let mut v = (p - 1.0) * suffix + pm;
        if k > 0 {
            v -= p.powi(-(k as i32)) * (t * etas[k - 1]).exp();
        }
        // Strictly nonnegative in exact arithmetic (e^(t eta) is monotone in
        // eta and the weights telescope); absorb sub-ulp rounding only, so a
        // genuine sign bug would still surface.
        values[k] = if v < 0.0 && v > -1e-12 { 0.0 } else { v };
    }
    Ok(ClassProfile::new(wp.tree().p(), values))
}

/// Return probability P_c(0, t), the class-0 value of
/// [`classical_distribution`]: monotone non-increasing from 1 to the uniform
/// floor p^-M.
pub fn return_probability(wp: &WalkParams, t: f64) -> Result<f64> {
    Ok(*classical_distribution(wp, t)?.value(0))
}

/// Dense-diagonalization oracle for e^(tQ) e_0 — the full site vector,
/// independent of the class closed forms.
pub fn classical_evolve_oracle_capped(
    wp: &WalkParams,
    t: f64,
    cap: u64,
) -> Result<Vec<f64>> {
    require_classical_time(t)?;
    let q = generator_capped(wp.couplings(), wp.tree(), cap)?;
    let n = q.nrows();
    let eig = nalgebra::SymmetricEigen::new(q);
    let mut out = vec![0.0f64; n];
    for j in 0..n {
        let w = (t * eig.eigenvalues[j]).exp() * eig.eigenvectors[(0, j)];
        for (i, o) in out.iter_mut().enumerate() {
            *o += eig.eigenvectors[(i, j)] * w;
        }
    }
    Ok(out)
}

/// [`classical_evolve_oracle_capped`] at the default cap.
pub fn classical_evolve_oracle(wp: &WalkParams, t: f64) -> Result<Vec<f64>> {
    classical_evolve_oracle_capped(wp, t, DEFAULT_DENSE_CAP)
}

/// The three asymptotic decay shapes, each with its linearizing coordinates:
/// a power law is a line in (ln t, ln P), a stretched exponential in
/// (ln t, ln(-ln P)), and a logarithmic decay in (ln t, 1/P).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayModel {
    Power,
    Stretched,
    Logarithmic,
}

impl DecayModel {
    pub fn name(self) -> &'static str {
        match self {
            DecayModel::Power => "power",
            DecayModel::Stretched => "stretched",
            DecayModel::Logarithmic => "logarithmic",
        }
    }
}

/// A least-squares decay fit. `slope`, `intercept` and `residual` (RMS) live
/// in the model's own linearizing coordinates; `log_rms` is the RMS error of
/// the model's predicted ln P against the observed ln P, a shared coordinate
/// system in which different models can be compared fairly.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFitResult {
    pub model: DecayModel,
    pub slope: f64,
    pub intercept: f64,
    pub window: (f64, f64),
    pub residual: f64,
    pub log_rms: f64,
}

/// Log-spaced sample count used by [`fit_decay`]; ~40 points per decade over
/// the acceptance windows.
const FIT_GRID: usize = 161;

/// Fit a decay law to the plateau-subtracted return probability
/// P_c(0, t) - p^-M on a log grid over `window`, in the coordinates of
/// `model`. The landscape is realized depth-anchored (eps_k = f(k)) so the
/// slow relaxation modes sit at order-one rates; couplings are only required
/// to be finite and nonnegative, so deep tails that underflow to zero are
/// handled exactly as frozen levels.
///
/// A window whose far end has already sunk onto the plateau
/// (P_c - p^-M < 10 p^-M at t_max) is rejected rather than silently fitted.
pub fn fit_decay(
    ls: &Landscape,
    tp: &TreeParams,
    window: (f64, f64),
    model: DecayModel,
) -> Result<DecayFitResult> {
    let (t_min, t_max) = window;
    if !(t_min.is_finite() && t_max.is_finite() && t_min > 0.0 && t_min < t_max) {
        return Err(Error::Validation(format!(
            "fit window must satisfy 0 < t_min < t_max, got ({t_min}, {t_max})"
        )));
    }
    let p = tp.p() as f64;
    let m_depth = tp.levels() as usize;
    let eps = anchored_couplings(ls, tp.p(), tp.levels(), 0)?;
    for (i, &e) in eps.iter().enumerate() {
        if !e.is_finite() || e < 0.0 {
            return Err(Error::Validation(format!(
                "coupling eps_{} = {e} must be finite and nonnegative",
                i + 1
            )));
        }
    }
    // Relaxation rates by suffix sums (no cancellation for the deep modes):
    // eta_m = -(p-1) sum_(k>m) p^(k-1) eps_k - p^m eps_(m+1).
    let mut etas = vec![0.0f64; m_depth];
    let mut tail = 0.0f64;
    for m in (0..m_depth).rev() {
        let term = p.powi(m as i32) * eps[m];
        tail += term;
        etas[m] = -(p - 1.0) * tail - term;
    }
    // Plateau-subtracted return probability; the p^-M terms cancel exactly.
    let excess = |t: f64| -> f64 {
        let mut s = 0.0;
        for (m, &eta) in etas.iter().enumerate() {
            s += p.powi(-(m as i32 + 1)) * (t * eta).exp();
        }
        (p - 1.0) * s
    };
    let plateau = p.powi(-(m_depth as i32));
    if excess(t_max) < 10.0 * plateau {
        return Err(Error::Validation(format!(
            "window end t_max = {t_max} touches the uniform plateau \
             (P_c - p^-M = {:.3e} < 10 p^-M = {:.3e}); shrink the window or deepen the tree",
            excess(t_max),
            10.0 * plateau
        )));
    }
    let lw = t_min.ln();
    let span = t_max.ln() - lw;
    let mut xs = Vec::with_capacity(FIT_GRID);
    let mut ln_obs = Vec::with_capacity(FIT_GRID);
    let mut ys = Vec::with_capacity(FIT_GRID);
    for i in 0..FIT_GRID {
        let x = lw + span * i as f64 / (FIT_GRID - 1) as f64;
        let v = excess(x.exp());
        let y = match model {
            DecayModel::Power => v.ln(),
            DecayModel::Stretched => {
                let neg_log = -v.ln();
                if neg_log <= 0.0 {
                    return Err(Error::Validation(format!(
                        "stretched-exponential coordinates need P < 1 on the window, \
                         got P = {v} at t = {:.3e}",
                        x.exp()
                    )));
                }
                neg_log.ln()
            }
            DecayModel::Logarithmic => 1.0 / v,
        };
        xs.push(x);
        ln_obs.push(v.ln());
        ys.push(y);
    }
    let n = FIT_GRID as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        sxx += (x - x_mean) * (x - x_mean);
        sxy += (x - x_mean) * (y - y_mean);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let mut ss = 0.0;
    let mut ss_log = 0.0;
    for ((&x, &y), &lo) in xs.iter().zip(&ys).zip(&ln_obs) {
        let fit = intercept + slope * x;
        ss += (y - fit) * (y - fit);
        let ln_pred = match model {
            DecayModel::Power => fit,
            DecayModel::Stretched => -fit.exp(),
            DecayModel::Logarithmic => {
                if fit <= 0.0 {
                    f64::INFINITY
                } else {
                    -fit.ln()
                }
            }
        };
        ss_log += (ln_pred - lo) * (ln_pred - lo);
    }
    Ok(DecayFitResult {
        model,
        slope,
        intercept,
        window,
        residual: (ss / n).sqrt(),
        log_rms: (ss_log / n).sqrt(),
    })
}
