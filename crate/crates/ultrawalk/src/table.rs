//! Plain tabular records the computation modules hand to front ends.
//!
//! Every command's output flattens into one row schema — entity label,
//! optional class index / class size / representative site, a float value,
//! and an optional exact rational rendered as "num/den" — so CSV and JSON
//! writers, plot tooling, and golden-file tests all share a single source.

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::classical::DecayFitResult;
use crate::error::Result;
use crate::graphs::{binomial, complete_time_averaged, cycle_time_averaged, HypercubeAverages};
use crate::hamiltonian::Spectrum;
use crate::quantum::ClassProfile;
use crate::space::{class_representative, class_size, TreeParams};

/// One output record. Unused columns stay `None` and serialize empty.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub entity: String,
    pub class_k: Option<u32>,
    pub class_size: Option<u64>,
    pub rep_site: Option<u64>,
    pub value: f64,
    pub exact: Option<String>,
}

/// An ordered list of [`TableRow`]s.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistributionTable {
    pub rows: Vec<TableRow>,
}

/// Deterministic "num/den" rendering (always both parts, already reduced).
pub fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn class_row(
    entity: &str,
    k: u32,
    tp: &TreeParams,
    value: f64,
    exact: Option<String>,
) -> Result<TableRow> {
    Ok(TableRow {
        entity: entity.to_string(),
        class_k: Some(k),
        class_size: Some(class_size(k, tp)?),
        rep_site: Some(class_representative(k, tp)?),
        value,
        exact,
    })
}

/// Rows for an exact per-class vector (index = level class k).
pub fn exact_class_table(
    entity: &str,
    values: &[BigRational],
    tp: &TreeParams,
) -> Result<DistributionTable> {
    let mut rows = Vec::with_capacity(values.len());
    for (k, v) in values.iter().enumerate() {
        rows.push(class_row(
            entity,
            k as u32,
            tp,
            v.to_f64().expect("tabulated rational fits in f64"),
            Some(rational_string(v)),
        )?);
    }
    Ok(DistributionTable { rows })
}

/// Rows for a float class profile (no exact column).
pub fn profile_table(
    entity: &str,
    profile: &ClassProfile<f64>,
    tp: &TreeParams,
) -> Result<DistributionTable> {
    let mut rows = Vec::with_capacity(profile.values().len());
    for (k, &v) in profile.values().iter().enumerate() {
        rows.push(class_row(entity, k as u32, tp, v, None)?);
    }
    Ok(DistributionTable { rows })
}

/// Rows for a spectrum: class_k is the mode index m, class_size the
/// eigenvalue multiplicity.
pub fn spectrum_table(spectrum: &Spectrum) -> DistributionTable {
    let rows = spectrum
        .etas()
        .iter()
        .zip(spectrum.multiplicities())
        .enumerate()
        .map(|(m, (&eta, &mult))| TableRow {
            entity: "mode".to_string(),
            class_k: Some(m as u32),
            class_size: Some(mult),
            rep_site: None,
            value: eta,
            exact: None,
        })
        .collect();
    DistributionTable { rows }
}

/// Rows for a decay fit: one scalar per row, window bounds included.
pub fn fit_table(fit: &DecayFitResult) -> DistributionTable {
    let scalar = |entity: &str, value: f64| TableRow {
        entity: entity.to_string(),
        class_k: None,
        class_size: None,
        rep_site: None,
        value,
        exact: None,
    };
    DistributionTable {
        rows: vec![
            scalar("slope", fit.slope),
            scalar("intercept", fit.intercept),
            scalar("residual", fit.residual),
            scalar("log_rms", fit.log_rms),
            scalar("window_min", fit.window.0),
            scalar("window_max", fit.window.1),
        ],
    }
}

/// Cycle table: one row per site (rep_site = site index), exact values.
pub fn cycle_table(n_sites: u64) -> Result<DistributionTable> {
    let avg = cycle_time_averaged(n_sites)?;
    let rows = avg
        .iter()
        .enumerate()
        .map(|(site, v)| TableRow {
            entity: "site".to_string(),
            class_k: None,
            class_size: None,
            rep_site: Some(site as u64),
            value: v.to_f64().expect("cycle average fits in f64"),
            exact: Some(rational_string(v)),
        })
        .collect();
    Ok(DistributionTable { rows })
}

/// Hypercube table: one row per Hamming class with the per-site average
/// (class_size = C(N, k), left empty when it exceeds u64).
pub fn hypercube_table(n_dim: u32, avg: &HypercubeAverages) -> DistributionTable {
    let rows = avg
        .per_site
        .iter()
        .enumerate()
        .map(|(k, v)| TableRow {
            entity: "class".to_string(),
            class_k: Some(k as u32),
            class_size: binomial(n_dim as u64, k as u64).to_u64(),
            rep_site: None,
            value: v.to_f64().expect("hypercube average fits in f64"),
            exact: Some(rational_string(v)),
        })
        .collect();
    DistributionTable { rows }
}

/// Complete-graph table: the origin row and the (N-1)-fold "other" row.
pub fn complete_table(n_sites: u64) -> Result<DistributionTable> {
    let (origin, other) = complete_time_averaged(n_sites)?;
    Ok(DistributionTable {
        rows: vec![
            TableRow {
                entity: "origin".to_string(),
                class_k: None,
                class_size: Some(1),
                rep_site: Some(0),
                value: origin.to_f64().expect("complete-graph average fits in f64"),
                exact: Some(rational_string(&origin)),
            },
            TableRow {
                entity: "other".to_string(),
                class_k: None,
                class_size: Some(n_sites - 1),
                rep_site: Some(1),
                value: other.to_f64().expect("complete-graph average fits in f64"),
                exact: Some(rational_string(&other)),
            },
        ],
    })
}
