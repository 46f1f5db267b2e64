//! `ultrawalk` — tables for the hierarchical (p-adic ball) quantum walk and
//! its classical counterpart, from the command line.
//!
//! One subcommand per table: `spectrum`, `evolve`, `time-average`, `limit`,
//! `mean-distance`, `classical`, `decay-fit`, `graph`, and `compare` (which
//! re-derives whole families of results through independent oracles). Output
//! is CSV by default or JSON (`--format json`), always through the same row
//! schema: `entity, class_k, class_size, rep_site, value_float, value_exact`.
//! Exact rationals are rendered "num/den"; floats print with the shortest
//! representation that round-trips, so a fixed invocation is byte-stable.
//!
//! A TOML config file (`--config`) may supply defaults; explicit flags win
//! (flag > config > built-in default). The dense-oracle size cap is the
//! `ULTRAWALK_DENSE_CAP` environment variable, read once at startup.
//!
//! Exit codes: 0 success; 2 validation (bad flags, bad config, arguments
//! outside an operation's domain); 3 resource cap exceeded (the message
//! carries both the requested size and the cap); 4 numerical failure — a
//! `--self-check` or `compare` oracle disagreed beyond tolerance. Errors are
//! a single line on stderr: `error[<class>]: <message>`.

mod compare;
mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use ultrawalk::classical::{classical_distribution, classical_evolve_oracle_capped, fit_decay,
    DecayModel};
use ultrawalk::graphs::{binomial, complete_probability, complete_time_averaged,
    cycle_time_averaged_oracle, hypercube_probability, hypercube_time_averaged,
    hypercube_time_averaged_numeric, line_probability, line_time_average};
use ultrawalk::hamiltonian::{anchored_couplings, build_hamiltonian_capped, spectrum_closed,
    spectrum_numeric, EpsilonSequence, Landscape, DEFAULT_DENSE_CAP};
use ultrawalk::quantum::{evolve_oracle_capped, expand_to_sites, limit_gap_exact, mean_distance,
    mean_distance_scaled_limit, mean_distance_time_averaged_exact, probability_profile,
    quadrature_min_steps, time_averaged_exact, time_averaged_limit_exact, time_averaged_numeric,
    WalkParams};
use ultrawalk::space::{class_size, level_class_of, TreeParams};
use ultrawalk::table::{complete_table, cycle_table, exact_class_table, fit_table,
    hypercube_table, profile_table, rational_string, spectrum_table, DistributionTable, TableRow};
use ultrawalk::bessel::bessel_j;

use crate::config::{landscape_from_parts, Config};
use crate::output::{emit, render, Format};

const DENSE_CAP_ENV: &str = "ULTRAWALK_DENSE_CAP";

/// Error classes mirror the exit codes; everything the process can fail with
/// funnels through here so stderr always carries exactly one line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ErrorClass {
    Validation,
    Resource,
    Numerical,
}

#[derive(Debug)]
pub struct CliError {
    class: ErrorClass,
    message: String,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError { class: ErrorClass::Validation, message: message.into() }
    }

    pub fn resource(message: impl Into<String>) -> Self {
        CliError { class: ErrorClass::Resource, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        CliError { class: ErrorClass::Numerical, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class {
            ErrorClass::Validation => 2,
            ErrorClass::Resource => 3,
            ErrorClass::Numerical => 4,
        }
    }

    fn class_name(&self) -> &'static str {
        match self.class {
            ErrorClass::Validation => "validation",
            ErrorClass::Resource => "resource",
            ErrorClass::Numerical => "numerical",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // The machine-parsable contract is one line; flatten any embedded
        // newlines rather than trusting every message source.
        let flat = self.message.replace('\n', " ");
        write!(f, "error[{}]: {}", self.class_name(), flat.trim())
    }
}

impl From<ultrawalk::Error> for CliError {
    fn from(e: ultrawalk::Error) -> Self {
        match e {
            ultrawalk::Error::Domain(m) | ultrawalk::Error::Validation(m) => {
                CliError::validation(m)
            }
            // The library's message already surfaces both the requested size
            // and the cap.
            ultrawalk::Error::Resource { .. } => CliError::resource(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "ultrawalk",
    version,
    about = "Quantum walk on the p-adic ball hierarchy: exact spectra, time averages, \
             classical relaxation, and reference-graph comparisons"
)]
struct Cli {
    /// TOML config file supplying defaults (explicit flags override).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    /// Write the table to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Re-derive the result through an independent oracle and exit 4 if the
    /// two disagree beyond --tol. The table is still emitted.
    #[arg(long, global = true)]
    self_check: bool,

    /// Tolerance for --self-check / compare comparisons (each check has a
    /// documented default otherwise).
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct TreeArgs {
    /// Branching factor p >= 2 (prime in the motivating construction;
    /// composite values work but warn).
    #[arg(long)]
    p: Option<u32>,

    /// Hierarchy depth M >= 1 (p^M sites).
    #[arg(long = "M", value_name = "M")]
    m: Option<u32>,
}

#[derive(Args, Clone)]
struct CouplingArgs {
    /// Couplings eps_1..eps_M, comma separated, strictly decreasing and
    /// positive (eps_1 is the deepest/strongest level).
    #[arg(long, value_delimiter = ',', num_args = 1.., value_name = "E1,E2,...")]
    eps: Option<Vec<f64>>,

    /// Diagonal override eps_0. Default makes every row sum to zero; any
    /// other value shifts the whole spectrum uniformly and leaves all
    /// probabilities unchanged.
    #[arg(long)]
    eps0: Option<f64>,

    /// Generate the couplings from a landscape family instead of --eps:
    /// linear | logarithmic | exponential (eps_k = f(k - M), anchored at the
    /// deepest level).
    #[arg(long, value_name = "KIND")]
    kind: Option<String>,

    /// Landscape scale w0 (default 1).
    #[arg(long)]
    w0: Option<f64>,

    /// Landscape exponent alpha.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphFamily {
    Cycle,
    Line,
    Hypercube,
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FitModel {
    Power,
    Stretched,
    Logarithmic,
}

impl From<FitModel> for DecayModel {
    fn from(m: FitModel) -> Self {
        match m {
            FitModel::Power => DecayModel::Power,
            FitModel::Stretched => DecayModel::Stretched,
            FitModel::Logarithmic => DecayModel::Logarithmic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CompareWhat {
    /// Closed-form amplitudes vs dense e^{itH}|0> at random times.
    Amplitude,
    /// Closed-form eigenvalues/multiplicities vs dense diagonalization.
    Spectrum,
    /// Spectral classical distribution vs dense e^{tQ}; conservation grid.
    Classical,
    /// Quadrature time averages vs exact rationals; coupling independence.
    Average,
    /// Finite-depth minus infinite-depth gap as an exact rational identity.
    Gap,
    /// Mean-distance closed form vs weighted sum; scaled limit at M = 12.
    Distance,
    /// Classical decay slopes and the logarithmic-vs-power model comparison.
    Decay,
    /// Reference-graph closed forms vs oracles and pinned values.
    Graphs,
    /// Localization taxonomy bounds across all families.
    Taxonomy,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form spectrum: eta_m ascending with multiplicities.
    Spectrum {
        #[command(flatten)]
        tree: TreeArgs,
        #[command(flatten)]
        coupling: CouplingArgs,
    },

    /// Class probability profile |<V_k|psi(t)>|^2 at time t.
    Evolve {
        #[command(flatten)]
        tree: TreeArgs,
        #[command(flatten)]
        coupling: CouplingArgs,
        /// Evolution time.
        #[arg(long)]
        t: f64,
    },

    /// Long-run time-averaged class distribution. Exact rationals by
    /// default (coupling-independent); --numeric computes the trapezoid
    /// average over [0, T] instead, which needs couplings.
    TimeAverage {
        #[command(flatten)]
        tree: TreeArgs,
        #[command(flatten)]
        coupling: CouplingArgs,
        /// Emit the finite-T quadrature average instead of the exact limit.
        #[arg(long)]
        numeric: bool,
        /// Averaging window [0, T] for --numeric (and for --self-check).
        #[arg(long, default_value_t = 2000.0)]
        t_max: f64,
        /// Trapezoid steps (default: the minimum resolving the fastest
        /// phase, ceil(10 T max|eta|)).
        #[arg(long)]
        steps: Option<u64>,
    },

    /// Depth -> infinity limits of the time-averaged distribution, and
    /// (with --M) the finite-depth averages plus the uniform gap.
    Limit {
        /// Branching factor p >= 2.
        #[arg(long)]
        p: Option<u32>,
        /// Also emit the finite-M averages and the exact gap.
        #[arg(long = "M", value_name = "M")]
        m: Option<u32>,
        /// Largest class index for the limit rows (default: M if given,
        /// else 8).
        #[arg(long = "K", value_name = "K")]
        k_max: Option<u32>,
    },

    /// Time-averaged mean tree distance: closed form, the scaled value
    /// p^M dbar / M, and its depth limit. With --t: the instantaneous mean
    /// distance (needs couplings).
    MeanDistance {
        #[command(flatten)]
        tree: TreeArgs,
        #[command(flatten)]
        coupling: CouplingArgs,
        /// Evaluate at this time instead of the long-run average.
        #[arg(long)]
        t: Option<f64>,
    },

    /// Classical (master-equation) class distribution at time t, or the
    /// return-probability series on a log-spaced grid.
    Classical {
        #[command(flatten)]
        tree: TreeArgs,
        #[command(flatten)]
        coupling: CouplingArgs,
        /// Evolution time (>= 0).
        #[arg(long)]
        t: Option<f64>,
        /// Log-spaced grid MIN:MAX:N of return-probability samples
        /// (plot-ready x/y series; entity = t, value_float = P(0, t)).
        #[arg(long, value_name = "MIN:MAX:N")]
        t_grid: Option<String>,
    },

    /// Least-squares decay-law fit to the plateau-subtracted classical
    /// return probability on a landscape (eps_k = f(k), anchored at the
    /// top level so the slow modes govern the window).
    DecayFit {
        #[command(flatten)]
        tree: TreeArgs,
        /// Landscape family: linear | logarithmic | exponential (or
        /// explicit via config [landscape]).
        #[arg(long, value_name = "KIND")]
        kind: Option<String>,
        /// Landscape scale w0 (default 1).
        #[arg(long)]
        w0: Option<f64>,
        /// Landscape exponent alpha.
        #[arg(long)]
        alpha: Option<f64>,
        /// Decay model whose linearizing coordinates the fit runs in.
        #[arg(long, value_enum)]
        model: FitModel,
        /// Fit window start.
        #[arg(long, default_value_t = 1e2)]
        t_min: f64,
        /// Fit window end.
        #[arg(long, default_value_t = 1e6)]
        t_max: f64,
    },

    /// Reference-graph distributions: cycle, line, hypercube, complete.
    Graph {
        /// Graph family.
        #[arg(long, value_enum)]
        family: GraphFamily,
        /// Size: sites (cycle, complete) or dimension (hypercube). Unused
        /// for line.
        #[arg(long = "N", value_name = "N")]
        n: Option<u64>,
        /// Emit the exact time-averaged distribution.
        #[arg(long)]
        time_average: bool,
        /// Emit the instantaneous distribution at this time instead.
        #[arg(long)]
        t: Option<f64>,
        /// Line site index (default 0; sign is immaterial by symmetry).
        #[arg(long, allow_hyphen_values = true)]
        site: Option<i64>,
        /// Averaging window for the line family's finite-T time average.
        #[arg(long, default_value_t = 1000.0)]
        t_max: f64,
    },

    /// Re-derive a family of results through independent oracles, report
    /// every measured discrepancy next to its bound, and exit 4 if any
    /// check fails. Randomized sweeps are seeded and reproducible.
    Compare {
        /// Which bundle of checks to run.
        #[arg(long, value_enum)]
        what: CompareWhat,
        #[command(flatten)]
        tree: TreeArgs,
        /// Fix the couplings instead of drawing seeded random ones.
        #[arg(long, value_delimiter = ',', num_args = 1.., value_name = "E1,E2,...")]
        eps: Option<Vec<f64>>,
        /// Random times/draws per case where the bundle samples.
        #[arg(long, default_value_t = 50)]
        samples: u64,
        /// Time horizon (default per bundle: amplitude 100, average 2000,
        /// graphs 5000).
        #[arg(long)]
        t_max: Option<f64>,
        /// Seed for the splitmix64 stream behind every random draw.
        #[arg(long, default_value_t = 17)]
        seed: u64,
    },
}

/// Everything resolved once at startup that handlers need alongside their
/// own flags.
struct Ctx {
    cfg: Config,
    dense_cap: u64,
    self_check: bool,
    tol: Option<f64>,
}

impl Ctx {
    fn resolve_tree(&self, tree: &TreeArgs) -> Result<TreeParams, CliError> {
        let p = tree.p.or(self.cfg.defaults.p).ok_or_else(|| {
            CliError::validation("p is required (--p or config [defaults] p)")
        })?;
        let m = tree.m.or(self.cfg.defaults.m).ok_or_else(|| {
            CliError::validation("M is required (--M or config [defaults] M)")
        })?;
        let tp = TreeParams::new(p, m)?;
        if !tp.p_is_prime() {
            eprintln!(
                "warning: p = {p} is composite; the hierarchy is well-defined, but the \
                 p-adic interpretation needs a prime"
            );
        }
        Ok(tp)
    }

    /// Coupling precedence: --eps, then a --kind landscape, then config
    /// [defaults] eps, then config [landscape]; the eps_0 override applies
    /// on top from flag or config.
    fn resolve_couplings(
        &self,
        c: &CouplingArgs,
        tp: &TreeParams,
    ) -> Result<EpsilonSequence, CliError> {
        let eps: Vec<f64> = if let Some(eps) = &c.eps {
            eps.clone()
        } else if let Some(kind) = &c.kind {
            let ls = landscape_from_parts(kind, c.w0, c.alpha, None)?;
            anchored_couplings(&ls, tp.p(), tp.levels(), tp.levels())?
        } else if let Some(eps) = &self.cfg.defaults.eps {
            eps.clone()
        } else if let Some(lc) = &self.cfg.landscape {
            let ls = landscape_from_parts(&lc.kind, lc.w0, lc.alpha, lc.eps.clone())?;
            anchored_couplings(&ls, tp.p(), tp.levels(), tp.levels())?
        } else {
            return Err(CliError::validation(
                "couplings are required: --eps, --kind, config [defaults] eps, or config \
                 [landscape]",
            ));
        };
        let es = EpsilonSequence::new(tp.p(), eps)?;
        match c.eps0.or(self.cfg.defaults.eps0) {
            Some(e0) => Ok(es.with_eps0(e0)?),
            None => Ok(es),
        }
    }

    fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}

/// A handler's result: the table to emit, and — when a self-check or compare
/// bundle failed — the error to exit with after emitting it.
struct Output {
    table: DistributionTable,
    verdict: Option<CliError>,
}

impl Output {
    fn ok(table: DistributionTable) -> Self {
        Output { table, verdict: None }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                process::exit(0);
            }
            // Collapse clap's multi-line report into the one-line
            // machine-parsable contract: keep everything up to the blank
            // line before the usage block.
            let msg = e.to_string();
            let detail: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.trim().is_empty())
                .map(|l| l.trim())
                .collect();
            let joined = detail.join(" ");
            let flat = joined.strip_prefix("error: ").unwrap_or(&joined);
            eprintln!("{}", CliError::validation(flat));
            process::exit(2);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("{e}");
        process::exit(e.exit_code());
    }
}

fn dense_cap_from_env() -> Result<u64, CliError> {
    match std::env::var(DENSE_CAP_ENV) {
        Ok(s) => match s.trim().parse::<u64>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(CliError::validation(format!(
                "{DENSE_CAP_ENV} must be a positive integer, got {s:?}"
            ))),
        },
        Err(std::env::VarError::NotPresent) => Ok(DEFAULT_DENSE_CAP),
        Err(std::env::VarError::NotUnicode(_)) => Err(CliError::validation(format!(
            "{DENSE_CAP_ENV} is not valid UTF-8"
        ))),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    let format = match cli.format {
        Some(f) => f,
        None => match cfg.defaults.format.as_deref() {
            None => Format::Csv,
            Some("csv") => Format::Csv,
            Some("json") => Format::Json,
            Some(other) => {
                return Err(CliError::validation(format!(
                    "config format must be \"csv\" or \"json\", got {other:?}"
                )))
            }
        },
    };
    let ctx = Ctx {
        cfg,
        dense_cap: dense_cap_from_env()?,
        self_check: cli.self_check,
        tol: cli.tol,
    };
    if let Some(tol) = ctx.tol {
        if !(tol.is_finite() && tol > 0.0) {
            return Err(CliError::validation(format!(
                "--tol must be a positive finite number, got {tol}"
            )));
        }
    }

    let (name, out) = match &cli.command {
        Command::Spectrum { tree, coupling } => ("spectrum", cmd_spectrum(&ctx, tree, coupling)?),
        Command::Evolve { tree, coupling, t } => ("evolve", cmd_evolve(&ctx, tree, coupling, *t)?),
        Command::TimeAverage { tree, coupling, numeric, t_max, steps } => (
            "time-average",
            cmd_time_average(&ctx, tree, coupling, *numeric, *t_max, *steps)?,
        ),
        Command::Limit { p, m, k_max } => ("limit", cmd_limit(&ctx, *p, *m, *k_max)?),
        Command::MeanDistance { tree, coupling, t } => {
            ("mean-distance", cmd_mean_distance(&ctx, tree, coupling, *t)?)
        }
        Command::Classical { tree, coupling, t, t_grid } => {
            ("classical", cmd_classical(&ctx, tree, coupling, *t, t_grid.as_deref())?)
        }
        Command::DecayFit { tree, kind, w0, alpha, model, t_min, t_max } => (
            "decay-fit",
            cmd_decay_fit(&ctx, tree, kind.as_deref(), *w0, *alpha, *model, *t_min, *t_max)?,
        ),
        Command::Graph { family, n, time_average, t, site, t_max } => (
            "graph",
            cmd_graph(&ctx, *family, *n, *time_average, *t, *site, *t_max)?,
        ),
        Command::Compare { what, tree, eps, samples, t_max, seed } => (
            "compare",
            cmd_compare(&ctx, *what, tree, eps.clone(), *samples, *t_max, *seed)?,
        ),
    };

    emit(&render(&out.table, format, name), cli.out.as_deref())?;
    match out.verdict {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn scalar_row(entity: &str, value: f64, exact: Option<String>) -> TableRow {
    TableRow {
        entity: entity.to_string(),
        class_k: None,
        class_size: None,
        rep_site: None,
        value,
        exact,
    }
}

fn cmd_spectrum(ctx: &Ctx, tree: &TreeArgs, coupling: &CouplingArgs) -> Result<Output, CliError> {
    let tp = ctx.resolve_tree(tree)?;
    let es = ctx.resolve_couplings(coupling, &tp)?;
    let s = spectrum_closed(&es, &tp)?;
    let mut verdict = None;
    if ctx.self_check {
        let tol = ctx.tol_or(1e-9);
        let h = build_hamiltonian_capped(&es, &tp, ctx.dense_cap)?;
        let numeric = spectrum_numeric(&h)?;
        let mut worst = 0.0f64;
        let mut idx = 0usize;
        for (&eta, &mult) in s.etas().iter().zip(s.multiplicities()) {
            for _ in 0..mult {
                worst = worst.max((numeric[idx] - eta).abs());
                idx += 1;
            }
        }
        if worst > tol {
            verdict = Some(CliError::numerical(format!(
                "spectrum self-check: closed form deviates from dense diagonalization by \
                 {worst:e} (tolerance {tol:e})"
            )));
        }
    }
    Ok(Output { table: spectrum_table(&s), verdict })
}

fn cmd_evolve(
    ctx: &Ctx,
    tree: &TreeArgs,
    coupling: &CouplingArgs,
    t: f64,
) -> Result<Output, CliError> {
    let tp = ctx.resolve_tree(tree)?;
    let es = ctx.resolve_couplings(coupling, &tp)?;
    let wp = WalkParams::new(tp, es)?;
    let profile = probability_profile(&wp, t)?;
    let mut verdict = None;
    if ctx.self_check {
        let tol = ctx.tol_or(1e-10);
        let dense = evolve_oracle_capped(&wp, t, ctx.dense_cap)?;
        let closed = expand_to_sites(&profile, wp.tree());
        let mut worst = 0.0f64;
        for (a, p) in dense.iter().zip(&closed) {
            worst = worst.max((a.norm_sqr() - p).abs());
        }
        if worst > tol {
            verdict = Some(CliError::numerical(format!(
                "evolve self-check: closed form deviates from dense evolution by {worst:e} \
                 (tolerance {tol:e})"
            )));
        }
    }
    Ok(Output { table: profile_table("class", &profile, wp.tree())?, verdict })
}

fn cmd_time_average(
    ctx: &Ctx,
    tree: &TreeArgs,
    coupling: &CouplingArgs,
    numeric: bool,
    t_max: f64,
    steps: Option<u64>,
) -> Result<Output, CliError> {
    let tp = ctx.resolve_tree(tree)?;
    let exact = time_averaged_exact(&tp);
    let mut verdict = None;
    let mut numeric_profile = None;
    if numeric || ctx.self_check {
        // Only here do couplings matter; the exact averages hold for every
        // admissible sequence.
        let es = ctx.resolve_couplings(coupling, &tp)?;
        let wp = WalkParams::new(tp, es)?;
        let steps = steps.unwrap_or_else(|| quadrature_min_steps(&wp, t_max));
        let profile = time_averaged_numeric(&wp, t_max, steps)?;
        if ctx.self_check {
            let tol = ctx.tol_or(5e-3);
            let mut worst = 0.0f64;
            for (n, e) in profile.values().iter().zip(&exact) {
                worst = worst.max((n - e.to_f64().expect("average fits in f64")).abs());
            }
            if worst > tol {
                verdict = Some(CliError::numerical(format!(
                    "time-average self-check: quadrature over [0, {t_max}] deviates from the \
                     exact rationals by {worst:e} (tolerance {tol:e})"
                )));
            }
        }
        numeric_profile = Some(profile);
    }
    let table = match (numeric, numeric_profile) {
        (true, Some(profile)) => profile_table("class", &profile, &tp)?,
        _ => exact_class_table("class", &exact, &tp)?,
    };
    Ok(Output { table, verdict })
}

fn cmd_limit(
    ctx: &Ctx,
    p: Option<u32>,
    m: Option<u32>,
    k_max: Option<u32>,
) -> Result<Output, CliError> {
    let p = p.or(ctx.cfg.defaults.p).ok_or_else(|| {
        CliError::validation("p is required (--p or config [defaults] p)")
    })?;
    let m = m.or(ctx.cfg.defaults.m);
    let k_top = k_max.or(m).unwrap_or(8);
    let mut rows = Vec::new();
    for k in 0..=k_top {
        let limit = time_averaged_limit_exact(p, k)?;
        rows.push(TableRow {
            entity: "limit".to_string(),
            class_k: Some(k),
            class_size: None,
            rep_site: None,
            value: limit.to_f64().expect("limit fits in f64"),
            exact: Some(rational_string(&limit)),
        });
    }
    let mut verdict = None;
    if let Some(m) = m {
        let tp = TreeParams::new(p, m)?;
        let avg = time_averaged_exact(&tp);
        for (k, v) in avg.iter().enumerate() {
            rows.push(TableRow {
                entity: "average".to_string(),
                class_k: Some(k as u32),
                class_size: Some(class_size(k as u32, &tp)?),
                rep_site: None,
                value: v.to_f64().expect("average fits in f64"),
                exact: Some(rational_string(v)),
            });
        }
        let gap = limit_gap_exact(p, m);
        rows.push(scalar_row(
            "gap",
            gap.to_f64().expect("gap fits in f64"),
            Some(rational_string(&gap)),
        ));
        if ctx.self_check {
            // The gap is one closed form; the averages and limits are
            // others. Their difference must reproduce it exactly, class by
            // class, and every limit must be strictly positive.
            for k in 0..=m {
                let limit = time_averaged_limit_exact(p, k)?;
                if &avg[k as usize] - &limit != gap || limit <= BigRational::zero() {
                    verdict = Some(CliError::numerical(format!(
                        "limit self-check: gap identity fails at p = {p}, M = {m}, k = {k}"
                    )));
                }
            }
        }
    } else if ctx.self_check {
        return Err(CliError::validation(
            "--self-check on limit needs --M: the check compares finite-M averages \
             against the limits",
        ));
    }
    Ok(Output { table: DistributionTable { rows }, verdict })
}

fn cmd_mean_distance(
    ctx: &Ctx,
    tree: &TreeArgs,
    coupling: &CouplingArgs,
    t: Option<f64>,
) -> Result<Output, CliError> {
    let tp = ctx.resolve_tree(tree)?;
    if let Some(t) = t {
        let es = ctx.resolve_couplings(coupling, &tp)?;
        let wp = WalkParams::new(tp, es)?;
        let d = mean_distance(&wp, t)?;
        let mut verdict = None;
        if ctx.self_check {
            let tol = ctx.tol_or(1e-10);
            let dense = evolve_oracle_capped(&wp, t, ctx.dense_cap)?;
            let p = tp.p() as f64;
            let mut dense_d = 0.0f64;
            for (site, a) in dense.iter().enumerate() {
                let k = level_class_of(site as u64, &tp)?;
                if k > 0 {
                    dense_d += a.norm_sqr() * p.powi(-((tp.levels() - k) as i32));
                }
            }
            let diff = (dense_d - d).abs();
            if diff > tol {
                verdict = Some(CliError::numerical(format!(
                    "mean-distance self-check: site-by-site dense route deviates by {diff:e} \
                     (tolerance {tol:e})"
                )));
            }
        }
        return Ok(Output {
            table: DistributionTable { rows: vec![scalar_row("distance", d, None)] },
            verdict,
        });
    }

    let m = tp.levels();
    let p = tp.p();
    let dbar = mean_distance_time_averaged_exact(&tp);
    let scaled = &dbar * BigRational::from_integer(BigInt::from(p).pow(m))
        / BigRational::from_integer(BigInt::from(m));
    let limit = mean_distance_scaled_limit(p);
    let rows = vec![
        scalar_row("dbar", dbar.to_f64().expect("dbar fits in f64"), Some(rational_string(&dbar))),
        scalar_row(
            "scaled",
            scaled.to_f64().expect("scaled dbar fits in f64"),
            Some(rational_string(&scaled)),
        ),
        scalar_row(
            "scaled-limit",
            limit.to_f64().expect("limit fits in f64"),
            Some(rational_string(&limit)),
        ),
    ];
    let mut verdict = None;
    if ctx.self_check {
        // Independent route: weight the exact class averages by class size
        // and tree distance and compare the rationals verbatim.
        let avg = time_averaged_exact(&tp);
        let mut weighted = BigRational::zero();
        for k in 1..=m {
            let size = BigInt::from(class_size(k, &tp)?);
            let dist = BigRational::new(BigInt::one(), BigInt::from(p).pow(m - k));
            weighted += BigRational::from_integer(size) * dist * &avg[k as usize];
        }
        if weighted != dbar {
            verdict = Some(CliError::numerical(format!(
                "mean-distance self-check: weighted-sum route gives {} but the closed form \
                 gives {}",
                rational_string(&weighted),
                rational_string(&dbar)
            )));
        }
    }
    Ok(Output { table: DistributionTable { rows }, verdict })
}

fn parse_t_grid(s: &str) -> Result<(f64, f64, u64), CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || CliError::validation(format!("--t-grid must be MIN:MAX:N, got {s:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let t0: f64 = parts[0].parse().map_err(|_| bad())?;
    let t1: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: u64 = parts[2].parse().map_err(|_| bad())?;
    if !(t0.is_finite() && t1.is_finite() && t0 > 0.0 && t0 < t1) {
        return Err(CliError::validation(format!(
            "--t-grid needs 0 < MIN < MAX (log-spaced), got {s:?}"
        )));
    }
    if !(2..=1_000_000).contains(&n) {
        return Err(CliError::validation(format!(
            "--t-grid sample count must be between 2 and 1000000, got {n}"
        )));
    }
    Ok((t0, t1, n))
}

fn cmd_classical(
    ctx: &Ctx,
    tree: &TreeArgs,
    coupling: &CouplingArgs,
    t: Option<f64>,
    t_grid: Option<&str>,
) -> Result<Output, CliError> {
    let tp = ctx.resolve_tree(tree)?;
    let es = ctx.resolve_couplings(coupling, &tp)?;
    let wp = WalkParams::new(tp, es)?;
    match (t, t_grid) {
        (Some(_), Some(_)) => Err(CliError::validation(
            "classical takes --t or --t-grid, not both",
        )),
        (None, None) => Err(CliError::validation("classical needs --t or --t-grid")),
        (Some(t), None) => {
            let profile = classical_distribution(&wp, t)?;
            let mut verdict = None;
            if ctx.self_check {
                let tol = ctx.tol_or(1e-10);
                let dense = classical_evolve_oracle_capped(&wp, t, ctx.dense_cap)?;
                let closed = expand_to_sites(&profile, wp.tree());
                let mut worst = 0.0f64;
                for (a, b) in dense.iter().zip(&closed) {
                    worst = worst.max((a - b).abs());
                }
                if worst > tol {
                    verdict = Some(CliError::numerical(format!(
                        "classical self-check: closed form deviates from dense e^(tQ) by \
                         {worst:e} (tolerance {tol:e})"
                    )));
                }
            }
            Ok(Output { table: profile_table("class", &profile, wp.tree())?, verdict })
        }
        (None, Some(grid)) => {
            let (t0, t1, n) = parse_t_grid(grid)?;
            let span = (t1 / t0).ln();
            let mut rows = Vec::with_capacity(n as usize);
            let mut times = Vec::with_capacity(n as usize);
            for i in 0..n {
                let t = t0 * (span * i as f64 / (n - 1) as f64).exp();
                let ret = *classical_distribution(&wp, t)?.value(0);
                times.push(t);
                rows.push(TableRow {
                    entity: t.to_string(),
                    class_k: Some(0),
                    class_size: Some(1),
                    rep_site: Some(0),
                    value: ret,
                    exact: None,
                });
            }
            let mut verdict = None;
            if ctx.self_check {
                let tol = ctx.tol_or(1e-10);
                let mut worst = 0.0f64;
                for &i in &[0usize, (n as usize - 1) / 2, n as usize - 1] {
                    let dense = classical_evolve_oracle_capped(&wp, times[i], ctx.dense_cap)?;
                    worst = worst.max((dense[0] - rows[i].value).abs());
                }
                if worst > tol {
                    verdict = Some(CliError::numerical(format!(
                        "classical self-check: grid return probability deviates from dense \
                         e^(tQ) by {worst:e} (tolerance {tol:e})"
                    )));
                }
            }
            Ok(Output { table: DistributionTable { rows }, verdict })
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_decay_fit(
    ctx: &Ctx,
    tree: &TreeArgs,
    kind: Option<&str>,
    w0: Option<f64>,
    alpha: Option<f64>,
    model: FitModel,
    t_min: f64,
    t_max: f64,
) -> Result<Output, CliError> {
    if ctx.self_check {
        return Err(CliError::validation(
            "decay-fit has no self-check oracle; run `ultrawalk compare --what decay` for \
             the cross-checked bundle",
        ));
    }
    let tp = ctx.resolve_tree(tree)?;
    let ls: Landscape = match (kind, &ctx.cfg.landscape) {
        (Some(kind), _) => landscape_from_parts(kind, w0, alpha, None)?,
        (None, Some(lc)) => landscape_from_parts(&lc.kind, lc.w0, lc.alpha, lc.eps.clone())?,
        (None, None) => {
            return Err(CliError::validation(
                "decay-fit needs a landscape: --kind (with --alpha) or config [landscape]",
            ))
        }
    };
    let fit = fit_decay(&ls, &tp, (t_min, t_max), model.into())?;
    Ok(Output::ok(fit_table(&fit)))
}

fn graph_n(n: Option<u64>) -> Result<u64, CliError> {
    n.ok_or_else(|| CliError::validation("this graph family needs --N"))
}

fn cmd_graph(
    ctx: &Ctx,
    family: GraphFamily,
    n: Option<u64>,
    time_average: bool,
    t: Option<f64>,
    site: Option<i64>,
    t_max: f64,
) -> Result<Output, CliError> {
    if time_average == t.is_some() {
        return Err(CliError::validation(
            "graph needs exactly one of --time-average / --t",
        ));
    }
    match family {
        GraphFamily::Cycle => {
            let n = graph_n(n)?;
            if let Some(_t) = t {
                return Err(CliError::validation(
                    "the cycle is tabulated as a time average only (--time-average); its \
                     instantaneous distribution has no closed form here",
                ));
            }
            let table = cycle_table(n)?;
            let mut verdict = None;
            if ctx.self_check {
                let tol = ctx.tol_or(5e-3);
                let numeric = cycle_time_averaged_oracle(n, 5000.0)?;
                let mut worst = 0.0f64;
                for (row, v) in table.rows.iter().zip(&numeric) {
                    worst = worst.max((row.value - v).abs());
                }
                if worst > tol {
                    verdict = Some(CliError::numerical(format!(
                        "cycle self-check: circulant quadrature deviates from the closed \
                         form by {worst:e} (tolerance {tol:e})"
                    )));
                }
            }
            Ok(Output { table, verdict })
        }
        GraphFamily::Hypercube => {
            let n = graph_n(n)?;
            let n_dim: u32 = n.try_into().map_err(|_| {
                CliError::validation(format!("hypercube dimension {n} does not fit u32"))
            })?;
            if let Some(t) = t {
                let mut rows = Vec::with_capacity(n_dim as usize + 1);
                // Conservation total in log space: C(N, k) alone overflows
                // f64 near N = 1030 even though C(N, k) P_k never does.
                let mut ln_c = 0.0f64;
                let mut total = 0.0f64;
                for k in 0..=n_dim {
                    if k > 0 {
                        ln_c += ((n_dim - k + 1) as f64).ln() - (k as f64).ln();
                    }
                    let v = hypercube_probability(k, n_dim, t)?;
                    if v > 0.0 {
                        total += (ln_c + v.ln()).exp();
                    }
                    rows.push(TableRow {
                        entity: "class".to_string(),
                        class_k: Some(k),
                        class_size: binomial(n_dim as u64, k as u64).to_u64(),
                        rep_site: None,
                        value: v,
                        exact: None,
                    });
                }
                let mut verdict = None;
                if ctx.self_check {
                    let tol = ctx.tol_or(1e-9);
                    if (total - 1.0).abs() > tol {
                        verdict = Some(CliError::numerical(format!(
                            "hypercube self-check: class probabilities sum to {total} \
                             (tolerance {tol:e} around 1)"
                        )));
                    }
                }
                return Ok(Output { table: DistributionTable { rows }, verdict });
            }
            let avg = hypercube_time_averaged(n_dim)?;
            let table = hypercube_table(n_dim, &avg);
            let mut verdict = None;
            if ctx.self_check {
                if n_dim > 12 {
                    return Err(CliError::resource(format!(
                        "hypercube self-check quadrature needs N <= 12, got {n_dim}; the \
                         closed form itself has no such cap"
                    )));
                }
                let tol = ctx.tol_or(5e-3);
                let mut worst = 0.0f64;
                for (k, row) in table.rows.iter().enumerate() {
                    let numeric = hypercube_time_averaged_numeric(k as u32, n_dim)?;
                    worst = worst.max((row.value - numeric).abs());
                }
                if worst > tol {
                    verdict = Some(CliError::numerical(format!(
                        "hypercube self-check: quadrature deviates from the closed form by \
                         {worst:e} (tolerance {tol:e})"
                    )));
                }
            }
            Ok(Output { table, verdict })
        }
        GraphFamily::Complete => {
            let n = graph_n(n)?;
            if let Some(t) = t {
                let origin = complete_probability(true, n, t)?;
                let other = complete_probability(false, n, t)?;
                let rows = vec![
                    TableRow {
                        entity: "origin".to_string(),
                        class_k: None,
                        class_size: Some(1),
                        rep_site: Some(0),
                        value: origin,
                        exact: None,
                    },
                    TableRow {
                        entity: "other".to_string(),
                        class_k: None,
                        class_size: Some(n - 1),
                        rep_site: Some(1),
                        value: other,
                        exact: None,
                    },
                ];
                let mut verdict = None;
                if ctx.self_check {
                    let tol = ctx.tol_or(1e-12);
                    let total = origin + (n - 1) as f64 * other;
                    if (total - 1.0).abs() > tol {
                        verdict = Some(CliError::numerical(format!(
                            "complete-graph self-check: probabilities sum to {total} \
                             (tolerance {tol:e} around 1)"
                        )));
                    }
                }
                return Ok(Output { table: DistributionTable { rows }, verdict });
            }
            let table = complete_table(n)?;
            let mut verdict = None;
            if ctx.self_check {
                let (origin, other) = complete_time_averaged(n)?;
                let total = origin
                    + BigRational::from_integer(BigInt::from(n - 1)) * other;
                if total != BigRational::one() {
                    verdict = Some(CliError::numerical(
                        "complete-graph self-check: exact averages do not sum to 1",
                    ));
                }
            }
            Ok(Output { table, verdict })
        }
        GraphFamily::Line => {
            let site = site.unwrap_or(0);
            let (entity, value) = match t {
                Some(t) => (format!("site {site} t={t}"), line_probability(site, t)?),
                None => (
                    format!("site {site} T={t_max}"),
                    line_time_average(site, t_max)?,
                ),
            };
            let mut verdict = None;
            if ctx.self_check {
                // Independent check of the Bessel machinery: the squares
                // across all orders must resolve unity.
                let tol = ctx.tol_or(1e-10);
                let probe = t.unwrap_or(25.0);
                let mut total = bessel_j(0, probe).powi(2);
                for order in 1..=(probe.abs() as u32 + 45) {
                    total += 2.0 * bessel_j(order, probe).powi(2);
                }
                if (total - 1.0).abs() > tol {
                    verdict = Some(CliError::numerical(format!(
                        "line self-check: Bessel normalization at t = {probe} gives {total} \
                         (tolerance {tol:e} around 1)"
                    )));
                }
            }
            Ok(Output {
                table: DistributionTable { rows: vec![scalar_row(&entity, value, None)] },
                verdict,
            })
        }
    }
}

fn cmd_compare(
    ctx: &Ctx,
    what: CompareWhat,
    tree: &TreeArgs,
    eps: Option<Vec<f64>>,
    samples: u64,
    t_max: Option<f64>,
    seed: u64,
) -> Result<Output, CliError> {
    let default_t_max = match what {
        CompareWhat::Amplitude => 100.0,
        CompareWhat::Graphs => 5000.0,
        _ => 2000.0,
    };
    let spec = compare::CompareSpec {
        p: tree.p.or(ctx.cfg.defaults.p),
        m: tree.m.or(ctx.cfg.defaults.m),
        eps,
        samples,
        t_max: t_max.unwrap_or(default_t_max),
        seed,
        tol: ctx.tol,
        dense_cap: ctx.dense_cap,
    };
    let outcome = match what {
        CompareWhat::Amplitude => compare::amplitude_vs_dense(&spec)?,
        CompareWhat::Spectrum => compare::spectrum_vs_dense(&spec)?,
        CompareWhat::Classical => compare::classical_vs_dense(&spec)?,
        CompareWhat::Average => compare::average_vs_exact(&spec)?,
        CompareWhat::Gap => compare::gap_identity(&spec)?,
        CompareWhat::Distance => compare::distance_routes(&spec)?,
        CompareWhat::Decay => compare::decay_laws(&spec)?,
        CompareWhat::Graphs => compare::graphs_bundle(&spec)?,
        CompareWhat::Taxonomy => compare::taxonomy_bundle(&spec)?,
    };
    let verdict = if outcome.failures.is_empty() {
        None
    } else {
        Some(CliError::numerical(format!(
            "{} comparison check(s) failed; first: {}",
            outcome.failures.len(),
            outcome.failures[0]
        )))
    };
    Ok(Output { table: outcome.table, verdict })
}
