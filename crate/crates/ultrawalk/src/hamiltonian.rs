//! Hierarchical (Parisi-type) Hamiltonians on T^(p)_M and their spectra.
//!
//! The matrix is determined by one coupling per hierarchy level: H[n][n2] =
//! eps_k where k = separation_level(n, n2), with eps_0 on the diagonal. It is
//! generated by the Kronecker recursion
//!
//! ```text
//! H_1     = eps_0 I_p + eps_1 (J_p - I_p)
//! H_(j+1) = I_p (x) H_j + (J_p - I_p) (x) eps_(j+1) I_(p^j)
//! ```
//!
//! with J the all-ones matrix. Couplings must be strictly ordered,
//! 0 < eps_M < ... < eps_1, and the default diagonal
//! eps_0 = -(p-1) * sum_k p^(k-1) eps_k makes rows sum to zero (so the same
//! matrix doubles as a CTMC generator). The spectrum then has the closed form
//!
//! ```text
//! eta_0 = eps_0 - eps_1                                         mult (p-1)p^(M-1)
//! eta_m = eps_0 + (p-1) sum_(k<=m) p^(k-1) eps_k - p^m eps_(m+1), m = 1..M-1
//!                                                               mult (p-1)p^(M-m-1)
//! eta_M = 0                                                     mult 1
//! ```
//!
//! ascending exactly when the couplings are strictly ordered. Overriding
//! eps_0 shifts every eigenvalue uniformly by eps_0 - eps_0_default, which
//! leaves all quantum probabilities unchanged (global phase).
//!
//! Dense construction is an oracle/verification path and is capped in size;
//! the closed forms carry the O(M) production path at any depth.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::space::TreeParams;

/// Largest p^M a dense (oracle) path will materialize unless the caller
/// raises the cap explicitly.
pub const DEFAULT_DENSE_CAP: u64 = 4096;

/// Coupling landscapes. `Explicit` carries the couplings verbatim; the three
/// parametric families realize the archetypal energy landscapes (power-law,
/// logarithmic-barrier, exponential-barrier) as functions of the level's
/// offset from a reference depth.
#[derive(Debug, Clone, PartialEq)]
pub enum Landscape {
    Explicit(Vec<f64>),
    Linear { w0: f64, alpha: f64 },
    Logarithmic { w0: f64, alpha: f64 },
    Exponential { w0: f64, alpha: f64 },
}

impl Landscape {
    fn check_params(&self) -> Result<()> {
        let (w0, alpha, min_alpha, name) = match self {
            Landscape::Explicit(_) => return Ok(()),
            Landscape::Linear { w0, alpha } => (*w0, *alpha, 0.0, "linear"),
            Landscape::Logarithmic { w0, alpha } => (*w0, *alpha, 1.0, "logarithmic"),
            Landscape::Exponential { w0, alpha } => (*w0, *alpha, 0.0, "exponential"),
        };
        if !(w0.is_finite() && w0 > 0.0) {
            return Err(Error::Validation(format!(
                "{name} landscape needs finite w0 > 0, got {w0}"
            )));
        }
        if !(alpha.is_finite() && alpha > min_alpha) {
            return Err(Error::Validation(format!(
                "{name} landscape needs finite alpha > {min_alpha}, got {alpha}"
            )));
        }
        Ok(())
    }

    /// Coupling at signed offset j = k - anchor from the reference depth.
    /// With anchor = M this is the textbook normalization (so the deepest
    /// coupling is w0-sized); with anchor = 0 it is the depth-anchored
    /// realization used for asymptotic decay studies.
    pub(crate) fn value_at_offset(&self, p: u32, j: i64) -> f64 {
        let p = p as f64;
        match *self {
            Landscape::Explicit(_) => unreachable!("explicit landscapes carry no formula"),
            Landscape::Linear { w0, alpha } => w0 * p.powf(-(1.0 + alpha) * j as f64),
            Landscape::Logarithmic { w0, alpha } => {
                let y = p.powf(-(j as f64));
                w0 * y / y.ln_1p().powf(alpha)
            }
            Landscape::Exponential { w0, alpha } => {
                let y = p.powf(-(j as f64));
                w0 * y * (-alpha / y).exp()
            }
        }
    }
}

/// Evaluate a parametric landscape at levels 1..=m relative to `anchor`
/// (eps_k = f(k - anchor)); an explicit landscape is passed through after a
/// length check. No ordering validation here — construct an
/// [`EpsilonSequence`] for that.
pub fn anchored_couplings(ls: &Landscape, p: u32, m: u32, anchor: u32) -> Result<Vec<f64>> {
    ls.check_params()?;
    if let Landscape::Explicit(eps) = ls {
        if eps.len() != m as usize {
            return Err(Error::Validation(format!(
                "explicit landscape supplies {} couplings but M = {m}",
                eps.len()
            )));
        }
        return Ok(eps.clone());
    }
    Ok((1..=m as i64)
        .map(|k| ls.value_at_offset(p, k - anchor as i64))
        .collect())
}

/// The level couplings eps_1..eps_M plus the diagonal eps_0, validated.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonSequence {
    p: u32,
    couplings: Vec<f64>,
    eps0_override: Option<f64>,
}

impl EpsilonSequence {
    /// Validates strict ordering 0 < eps_M < ... < eps_1 and takes the
    /// row-sum-zero default diagonal.
    pub fn new(p: u32, couplings: Vec<f64>) -> Result<Self> {
        if p < 2 {
            return Err(Error::Validation(format!("p must be at least 2, got {p}")));
        }
        if couplings.is_empty() {
            return Err(Error::Validation("need at least one coupling (M >= 1)".into()));
        }
        let m = couplings.len();
        let last = couplings[m - 1];
        if !(last.is_finite() && last > 0.0) {
            return Err(Error::Validation(format!(
                "eps_{m} = {last} violates the ordering 0 < eps_{m}"
            )));
        }
        for k in (1..m).rev() {
            let (hi, lo) = (couplings[k - 1], couplings[k]);
            if !(hi.is_finite() && hi > lo) {
                return Err(Error::Validation(format!(
                    "coupling ordering violated at levels {k}..{}: eps_{k} = {hi} \
                     must strictly exceed eps_{} = {lo}",
                    k + 1,
                    k + 1
                )));
            }
        }
        Ok(EpsilonSequence { p, couplings, eps0_override: None })
    }

    /// Same couplings with an explicit diagonal. Quantum probabilities are
    /// unchanged (uniform spectral shift = global phase); the classical
    /// generator refuses non-default diagonals.
    pub fn with_eps0(mut self, eps0: f64) -> Result<Self> {
        if !eps0.is_finite() {
            return Err(Error::Validation(format!("eps_0 override must be finite, got {eps0}")));
        }
        self.eps0_override = Some(eps0);
        Ok(self)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Depth M = number of level couplings.
    pub fn levels(&self) -> u32 {
        self.couplings.len() as u32
    }

    /// eps_k for k = 1..=M.
    pub fn coupling(&self, k: u32) -> f64 {
        self.couplings[(k - 1) as usize]
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// -(p-1) * sum_k p^(k-1) eps_k: the diagonal that makes rows sum to zero.
    pub fn default_eps0(&self) -> f64 {
        let p = self.p as f64;
        let mut sum = 0.0;
        let mut pk = 1.0; // p^(k-1)
        for &e in &self.couplings {
            sum += pk * e;
            pk *= p;
        }
        -(p - 1.0) * sum
    }

    pub fn eps0(&self) -> f64 {
        self.eps0_override.unwrap_or_else(|| self.default_eps0())
    }

    pub fn eps0_is_default(&self) -> bool {
        match self.eps0_override {
            None => true,
            Some(v) => v == self.default_eps0(),
        }
    }
}

/// The closed-form spectrum. `etas()[m]` is eta_m (ascending in m under the
/// coupling ordering) and `multiplicities()[m]` its eigenspace dimension;
/// the vectors have length M+1.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    etas: Vec<f64>,
    mults: Vec<u64>,
}

impl Spectrum {
    pub fn etas(&self) -> &[f64] {
        &self.etas
    }

    pub fn multiplicities(&self) -> &[u64] {
        &self.mults
    }

    pub fn max_abs_eta(&self) -> f64 {
        self.etas.iter().fold(0.0, |a, &e| a.max(e.abs()))
    }

    /// Smallest of the pairwise eigenvalue gaps and the distances of the
    /// nonzero eigenvalues from zero — the resolution scale that controls
    /// how fast finite-T time averages converge.
    pub fn min_gap(&self) -> f64 {
        let mut g = f64::INFINITY;
        for (i, &a) in self.etas.iter().enumerate() {
            if a != 0.0 {
                g = g.min(a.abs());
            }
            for &b in &self.etas[i + 1..] {
                g = g.min((a - b).abs());
            }
        }
        g
    }

    /// sum of mult * eta; equals p^M * eps_0 for any diagonal.
    pub fn trace(&self) -> f64 {
        self.etas.iter().zip(&self.mults).map(|(&e, &m)| e * m as f64).sum()
    }
}

/// O(M) closed-form spectrum of the hierarchical Hamiltonian. Index m of the
/// result is the eigenvalue eta_m from the module formulas; an eps_0
/// override appears as a uniform shift (so eta_M = eps_0 - eps_0_default).
pub fn spectrum_closed(es: &EpsilonSequence, tp: &TreeParams) -> Result<Spectrum> {
    check_compatible(es, tp)?;
    let p = tp.p() as f64;
    let m_depth = tp.levels() as usize;
    let shift = es.eps0() - es.default_eps0();
    let mut etas = Vec::with_capacity(m_depth + 1);
    let mut mults = Vec::with_capacity(m_depth + 1);
    // prefix = sum_(k<=m) p^(k-1) eps_k, accumulated as m grows.
    let mut prefix = 0.0;
    let mut pk = 1.0; // p^(k-1) for k = m
    let eps0 = es.eps0();
    for m in 0..m_depth {
        let eta = if m == 0 {
            eps0 - es.coupling(1)
        } else {
            prefix += pk * es.coupling(m as u32);
            pk *= p;
            eps0 + (p - 1.0) * prefix - pk * es.coupling(m as u32 + 1)
        };
        etas.push(eta);
        mults.push((tp.p() as u64 - 1) * (tp.p() as u64).pow((m_depth - m - 1) as u32));
    }
    etas.push(shift);
    mults.push(1);
    Ok(Spectrum { etas, mults })
}

/// Dense Hamiltonian via the Kronecker recursion, refused above `cap` sites.
pub fn build_hamiltonian_capped(
    es: &EpsilonSequence,
    tp: &TreeParams,
    cap: u64,
) -> Result<DMatrix<f64>> {
    check_compatible(es, tp)?;
    if tp.site_count() > cap {
        return Err(Error::Resource { needed: tp.site_count(), cap });
    }
    let p = tp.p() as usize;
    let eps0 = es.eps0();
    let ip = DMatrix::<f64>::identity(p, p);
    let jp_minus_i = DMatrix::<f64>::from_fn(p, p, |i, j| if i == j { 0.0 } else { 1.0 });
    let mut h =
        DMatrix::<f64>::from_fn(p, p, |i, j| if i == j { eps0 } else { es.coupling(1) });
    for level in 2..=tp.levels() {
        // The new off-diagonal blocks are constant: every pair of sites in
        // distinct top-level subtrees sits at this separation level, so the
        // second factor is the all-ones block, not an identity.
        let ones = DMatrix::<f64>::from_element(h.nrows(), h.nrows(), es.coupling(level));
        h = ip.kronecker(&h) + jp_minus_i.kronecker(&ones);
    }
    Ok(h)
}

/// [`build_hamiltonian_capped`] at the default cap.
pub fn build_hamiltonian(es: &EpsilonSequence, tp: &TreeParams) -> Result<DMatrix<f64>> {
    build_hamiltonian_capped(es, tp, DEFAULT_DENSE_CAP)
}

/// Eigenvalues of a dense symmetric matrix, ascending — the numeric oracle
/// against which the closed form is checked. Symmetry is required up to a
/// small relative tolerance.
pub fn spectrum_numeric(h: &DMatrix<f64>) -> Result<Vec<f64>> {
    if h.nrows() != h.ncols() || h.is_empty() {
        return Err(Error::Domain(format!(
            "need a nonempty square matrix, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let scale = h.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if !scale.is_finite() {
        return Err(Error::Domain("matrix entries must be finite".into()));
    }
    for i in 0..h.nrows() {
        for j in (i + 1)..h.ncols() {
            if (h[(i, j)] - h[(j, i)]).abs() > 1e-12 * (1.0 + scale) {
                return Err(Error::Domain(format!(
                    "matrix is not symmetric at ({i},{j}): {} vs {}",
                    h[(i, j)],
                    h[(j, i)]
                )));
            }
        }
    }
    let mut vals: Vec<f64> = nalgebra::SymmetricEigen::new(h.clone())
        .eigenvalues
        .iter()
        .copied()
        .collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(vals)
}

pub(crate) fn check_compatible(es: &EpsilonSequence, tp: &TreeParams) -> Result<()> {
    if es.p() != tp.p() {
        return Err(Error::Validation(format!(
            "coupling sequence built for p = {} but tree has p = {}",
            es.p(),
            tp.p()
        )));
    }
    if es.levels() != tp.levels() {
        return Err(Error::Validation(format!(
            "{} couplings supplied but tree depth is M = {}",
            es.levels(),
            tp.levels()
        )));
    }
    Ok(())
}
