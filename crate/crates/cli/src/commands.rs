//! Subcommand implementations, independent of argument parsing and I/O.

use std::fmt::Write as _;
use std::time::Instant;

use zeno_core::bounds::threshold_report;
use zeno_core::evolution::TimeGrid;
use zeno_core::parallel::Parallelism;
use zeno_core::thermal::{thermal_survival, ThermalOptions};
use zeno_core::verify::{geometric_factor_check, localization_suite, survival_floor_suite};
use zeno_core::Error;

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::CurveTable;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_PLAN_TOO_LARGE: u8 = 3;
pub const EXIT_BAND_STRADDLE: u8 = 4;
pub const EXIT_BOUND_VIOLATION: u8 = 5;

/// Error carrying the process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::new(EXIT_CONFIG, e.to_string())
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::PlanTooLarge { .. } => EXIT_PLAN_TOO_LARGE,
            Error::BandStraddle { .. } => EXIT_BAND_STRADDLE,
            Error::InvalidParameter { .. } | Error::EpsOutOfRange(_) | Error::NonpositiveTemperature(_) => EXIT_CONFIG,
            _ => EXIT_FAILURE,
        };
        Self::new(code, e.to_string())
    }
}

/// Run every configured temperature and collect the curves.
///
/// `budget_override` replaces `run.block_budget` (used for `ZENO_BLOCK_BUDGET`).
/// Progress lines go to `log`.
pub fn simulate(
    cfg: &ExperimentConfig,
    budget_override: Option<u64>,
    log: &mut dyn FnMut(&str),
) -> Result<CurveTable, CliError> {
    let temps = cfg.temperatures()?;
    let t_max = cfg.t_max();
    let grid = TimeGrid::uniform(t_max, cfg.run.n_times)?;
    let budget = budget_override.unwrap_or(cfg.run.block_budget);
    let opts = ThermalOptions {
        tail_tol: cfg.run.tail_tol,
        block_budget: budget,
        parallelism: Parallelism::from_threads(cfg.run.threads),
        ..ThermalOptions::default()
    };

    let s = &cfg.system;
    let mut metadata = vec![
        ("omega1".to_string(), s.omega1.to_string()),
        ("omega2".to_string(), s.omega2.to_string()),
        ("omega3".to_string(), s.omega3.to_string()),
        ("Omega".to_string(), s.coupling.to_string()),
    ];
    for (k, m) in cfg.bath.modes().iter().enumerate() {
        metadata.push((format!("mode{k}"), format!("{},{},{}", m.freq, m.g.re, m.g.im)));
    }
    metadata.push(("t_max".into(), t_max.to_string()));
    metadata.push(("n_times".into(), cfg.run.n_times.to_string()));
    metadata.push(("tail_tol".into(), format!("{:e}", cfg.run.tail_tol)));
    metadata.push(("block_budget".into(), budget.to_string()));

    let mut labels = Vec::new();
    let mut columns = Vec::new();
    for lt in &temps {
        let start = Instant::now();
        let curve = thermal_survival(&cfg.system, &cfg.bath, lt.kt, &grid, &opts)?;
        log(&format!(
            "kT/w23={} kT={} blocks={} tail_bound={:e} min_P={:.6} ({:.2?})",
            lt.label,
            lt.kt,
            curve.block_count,
            curve.error_bound,
            curve.min_value(),
            start.elapsed()
        ));
        let prefix = format!("T{}", lt.label);
        let cutoffs: Vec<String> = curve.cutoffs.iter().map(u32::to_string).collect();
        metadata.push((format!("{prefix}.kT"), lt.kt.to_string()));
        metadata.push((format!("{prefix}.tail_bound"), format!("{:e}", curve.error_bound)));
        metadata.push((format!("{prefix}.cutoffs"), cutoffs.join(",")));
        metadata.push((format!("{prefix}.blocks"), curve.block_count.to_string()));
        labels.push(lt.label.clone());
        columns.push(curve.values);
    }
    Ok(CurveTable {
        metadata,
        labels,
        times: grid.times().to_vec(),
        columns,
    })
}

/// Threshold report as `key=value` lines.
pub fn thresholds(cfg: &ExperimentConfig, eps: f64) -> Result<String, CliError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::new(EXIT_CONFIG, format!("--eps must lie in (0, 1), got {eps}")));
    }
    let r = threshold_report(&cfg.system, &cfg.bath, eps).map_err(|e| match e {
        Error::BandStraddle { .. } => CliError::new(
            EXIT_BAND_STRADDLE,
            format!(
                "{e}\nthe threshold bounds only apply when the bath band does not intersect the Bohr \
                 frequency omega1 - omega3: either every mode lies above it or every mode lies below it"
            ),
        ),
        other => other.into(),
    })?;
    let b = &r.band;
    let mut s = String::new();
    let _ = writeln!(s, "modes={}", r.modes);
    let _ = writeln!(s, "band_side={:?}", b.side);
    let _ = writeln!(s, "m={}", b.m);
    let _ = writeln!(s, "M={}", b.big_m);
    let _ = writeln!(s, "g_min={}", b.g_min);
    let _ = writeln!(s, "g_av={}", b.g_av);
    let _ = writeln!(s, "omega_max={}", b.omega_max);
    let _ = writeln!(s, "omega_av={}", b.omega_av);
    let _ = writeln!(s, "eps={}", r.epsilon);
    let _ = writeln!(s, "chi={}", r.chi);
    let _ = writeln!(s, "alpha={}", r.alpha);
    let _ = writeln!(s, "c_eps={}", r.c_eps.exact);
    let _ = writeln!(s, "c_eps_asymptotic={}", r.c_eps.asymptotic);
    let _ = writeln!(s, "n_eps={}", r.n_eps);
    match r.t_single {
        Some(t) => {
            let _ = writeln!(s, "T_single={t}");
        }
        None => {
            let _ = writeln!(s, "T_single=n/a");
        }
    }
    let _ = writeln!(s, "T_cube={}", r.t_cube.exact);
    let _ = writeln!(s, "T_cube_asymptotic={}", r.t_cube.asymptotic);
    let _ = writeln!(s, "T_cube_asymptotic_reliable={}", r.t_cube.asymptotic_reliable);
    let _ = writeln!(s, "T_sphere={}", r.t_sphere.value);
    let _ = writeln!(s, "T_sphere_valid={}", r.t_sphere.valid);
    let _ = writeln!(s, "T_sphere_non_asymptotic={}", r.t_sphere.non_asymptotic);
    Ok(s)
}

/// Randomised bound suites; returns the report and whether everything passed.
pub fn check_bounds(seed: u64, trials: usize, samples: u64, threads: usize) -> Result<(String, bool), CliError> {
    if trials == 0 {
        return Err(CliError::new(EXIT_CONFIG, "--trials must be at least 1"));
    }
    if samples == 0 {
        return Err(CliError::new(EXIT_CONFIG, "--samples must be at least 1"));
    }
    let policy = Parallelism::from_threads(threads);
    let mut out = String::new();
    let mut ok = true;
    let _ = writeln!(out, "seed={seed} trials={trials}");
    for report in [
        survival_floor_suite(seed, trials, policy),
        localization_suite(seed, trials, policy),
    ] {
        ok &= report.passed();
        let _ = writeln!(out, "{report}");
    }
    for d in [2, 3] {
        let c = geometric_factor_check(d, samples, seed, policy);
        let pass = c.relative_error <= 0.01;
        ok &= pass;
        let _ = writeln!(
            out,
            "G_{d} monte carlo: {} samples, estimate {:.6e}, exact {:.6e}, relative error {:.3e}{}",
            c.samples,
            c.estimate,
            c.exact,
            c.relative_error,
            if pass { "" } else { " (above 1%)" }
        );
    }
    let _ = writeln!(out, "result={}", if ok { "pass" } else { "fail" });
    Ok((out, ok))
}
