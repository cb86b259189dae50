//! Randomised checks of the analytic bounds, deterministic for a given seed.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{eigenvalue_window, geometric_factor, overlap_lower_bound, survival_floor};
use crate::error::Result;
use crate::evolution::{eigendecompose, survival_series_into, BlockSpectrum, PhaseScratch, TimeGrid, DEFAULT_TOL};
use crate::model::{band_stats, build_block, BandSide, BathSpec, Mode, OccupationTuple, SystemParams};
use crate::numerics::CompensatedSum;
use crate::parallel::{ordered_map, Parallelism};

/// Slack allowed on every inequality.
pub const BOUND_SLACK: f64 = 1e-12;

/// Outcome of one randomised suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub trials: usize,
    pub violations: usize,
    /// Smallest observed (measured − bound) over all trials.
    pub worst_margin: f64,
    /// Description of the first violating instance.
    pub counterexample: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} trials, {} violations, worst margin {:.3e}",
            self.name, self.trials, self.violations, self.worst_margin
        )?;
        if let Some(c) = &self.counterexample {
            write!(f, "\n  counterexample: {c}")?;
        }
        Ok(())
    }
}

fn trial_rng(seed: u64, suite: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ suite.wrapping_mul(0x9e37_79b9_7f4a_7c15));
    rng.set_stream(trial as u64);
    rng
}

fn collect(name: &'static str, outcomes: Vec<(f64, Option<String>)>) -> SuiteReport {
    let mut report = SuiteReport {
        name,
        trials: outcomes.len(),
        violations: 0,
        worst_margin: f64::INFINITY,
        counterexample: None,
    };
    for (margin, bad) in outcomes {
        report.worst_margin = report.worst_margin.min(margin);
        if let Some(text) = bad {
            report.violations += 1;
            report.counterexample.get_or_insert(text);
        }
    }
    report
}

/// Random spectra of dimension ≤ 8 whose largest weight exceeds 1/2; checks
/// |a(t)|² ≥ (2χ−1)² on a dense grid.
pub fn survival_floor_suite(seed: u64, trials: usize, policy: Parallelism) -> SuiteReport {
    let grid = TimeGrid::uniform(20.0, 2000).expect("static grid");
    let outcomes = ordered_map(trials, policy, |trial| {
        let mut rng = trial_rng(seed, 1, trial);
        let dim = rng.gen_range(1..=8usize);
        let values: Vec<f64> = (0..dim).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let chi = if dim == 1 { 1.0 } else { rng.gen_range(0.5000001..1.0) };
        let raw: Vec<f64> = (1..dim).map(|_| rng.gen_range(0.0..1.0f64)).collect();
        let raw_sum: f64 = raw.iter().sum();
        let mut weights = vec![chi];
        weights.extend(raw.iter().map(|r| if raw_sum > 0.0 { (1.0 - chi) * r / raw_sum } else { 0.0 }));
        let floor = survival_floor(chi).expect("chi in range");
        let mut scratch = PhaseScratch::default();
        let mut series = vec![0.0; grid.len()];
        survival_series_into(&values, &weights, &grid, &mut scratch, &mut series);
        let (argmin, min) = series
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |a, (i, v)| if v < a.1 { (i, v) } else { a });
        let margin = min - floor;
        let bad = (margin < -BOUND_SLACK).then(|| {
            format!(
                "eigenvalues={values:?} weights={weights:?} t={} |a|^2={min:e} floor={floor:e}",
                grid.times()[argmin]
            )
        });
        (margin, bad)
    });
    collect("survival floor", outcomes)
}

/// Random admissible blocks on both band sides, D ∈ 1..=4, complex couplings.
/// Checks that exactly one eigenvalue lies in the signed window and that its
/// overlap with |1, n⟩ respects the lower bound.
pub fn localization_suite(seed: u64, trials: usize, policy: Parallelism) -> SuiteReport {
    let outcomes = ordered_map(trials, policy, |trial| {
        let mut rng = trial_rng(seed, 2, trial);
        match localization_trial(&mut rng) {
            Ok(v) => v,
            Err(e) => (f64::NEG_INFINITY, Some(format!("trial {trial}: {e}"))),
        }
    });
    collect("eigenvalue localization", outcomes)
}

fn localization_trial(rng: &mut ChaCha8Rng) -> Result<(f64, Option<String>)> {
    let side = if rng.gen_bool(0.5) { BandSide::Above } else { BandSide::Below };
    let d = rng.gen_range(1..=4usize);
    let omega1 = rng.gen_range(6.0..15.0);
    let omega2 = omega1 + rng.gen_range(-3.0..3.0);
    let coupling = rng.gen_range(0.1..2.0);
    let sys = SystemParams::new(omega1, omega2, 0.0, coupling)?;
    let near = rng.gen_range(0.2..2.0);
    let modes: Vec<Mode> = (0..d)
        .map(|_| {
            let offset = near + rng.gen_range(0.0..3.0);
            let freq = match side {
                BandSide::Above => omega1 + offset,
                BandSide::Below => omega1 - offset,
            };
            let g = Complex64::from_polar(rng.gen_range(0.2..2.0), rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
            Mode::new(freq, g)
        })
        .collect();
    let bath = BathSpec::new(modes)?;
    let band = band_stats(&sys, &bath)?;
    let mut tuple: Vec<u32> = (0..d).map(|_| rng.gen_range(0..20)).collect();
    let (block, window) = loop {
        let block = build_block(&sys, &bath, &OccupationTuple(tuple.clone()))?;
        let window = eigenvalue_window(&block, &band, &sys)?;
        if window.holds {
            break (block, window);
        }
        let k = rng.gen_range(0..d);
        tuple[k] = tuple[k].saturating_mul(2).max(1);
    };
    let spec: BlockSpectrum = eigendecompose(&block, DEFAULT_TOL)?;
    let eigs = spec.eigenvalues();
    let inside: Vec<usize> = (0..eigs.len()).filter(|&k| window.contains(eigs[k])).collect();
    let bound = overlap_lower_bound(window.c, band.m, band.big_m, sys.coupling)?;
    let describe = |what: &str| {
        format!(
            "{what}: sys={sys:?} bath={:?} tuple={tuple:?} window=({:?}) eigenvalues={eigs:?}",
            bath.modes(),
            window.interval()
        )
    };
    if inside.len() != 1 {
        return Ok((f64::NEG_INFINITY, Some(describe(&format!("{} eigenvalues in window", inside.len())))));
    }
    let overlap = spec.weights()[inside[0]].sqrt();
    let margin = overlap - bound;
    let bad = (margin < -BOUND_SLACK).then(|| describe(&format!("overlap {overlap} below bound {bound}")));
    Ok((margin, bad))
}

/// Monte-Carlo estimate of G_D = ∫_{y≥0, |y|<1} Π y_j dy.
pub fn monte_carlo_geometric_factor(d: usize, samples: u64, seed: u64, policy: Parallelism) -> f64 {
    const CHUNK: u64 = 1 << 16;
    let chunks = samples.div_ceil(CHUNK);
    let partials = ordered_map(chunks as usize, policy, |c| {
        let mut rng = trial_rng(seed, 3 + d as u64, c);
        let n = CHUNK.min(samples - c as u64 * CHUNK);
        let mut acc = CompensatedSum::new();
        let mut y = vec![0.0; d];
        for _ in 0..n {
            let mut r2 = 0.0;
            let mut prod = 1.0;
            for v in y.iter_mut() {
                *v = rng.gen::<f64>();
                r2 += *v * *v;
                prod *= *v;
            }
            if r2 < 1.0 {
                acc.add(prod);
            }
        }
        acc
    });
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value() / samples as f64
}

/// Monte-Carlo G_D compared against 1/(2^D D!).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricCheck {
    pub d: usize,
    pub samples: u64,
    pub estimate: f64,
    pub exact: f64,
    pub relative_error: f64,
}

pub fn geometric_factor_check(d: usize, samples: u64, seed: u64, policy: Parallelism) -> GeometricCheck {
    let estimate = monte_carlo_geometric_factor(d, samples, seed, policy);
    let exact = geometric_factor(d);
    GeometricCheck {
        d,
        samples,
        estimate,
        exact,
        relative_error: (estimate / exact - 1.0).abs(),
    }
}
