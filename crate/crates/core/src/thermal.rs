//! Thermal averaging over invariant blocks.
//!
//! With the bath in a product of thermal states, block `n` carries the
//! normalised weight `p_n = Π_k (1 − x_k) x_k^{n_k}`, `x_k = exp(−ω̃_k / T)`,
//! and the survival probability is `P(t) = Σ_n p_n |a_n(t)|²`.
//!
//! The sum is truncated to a box `n_k ≤ N_k`. Every omitted term lies in
//! `[0, p_n]`, so the discarded Boltzmann mass
//! `1 − Π_k (1 − x_k^{N_k+1})` bounds the truncation error from above and
//! the truncated sum is a lower bracket of the exact curve.

use crate::error::{invalid, Error, Result};
use crate::secular::SecularSolver;
use crate::evolution::{survival_series_into, PhaseScratch, SpectralWorkspace, TimeGrid, DEFAULT_TOL, MAX_SWEEPS};
use crate::model::{BathSpec, OccupationTuple, SystemParams};
use crate::numerics::CompensatedSum;
use crate::parallel::{ordered_map, Parallelism};

/// Default cap on the number of blocks a single run may enumerate.
pub const DEFAULT_BLOCK_BUDGET: u64 = 10_000_000;

const MIN_CHUNK: u64 = 64;
const MAX_CHUNKS: u64 = 4096;

fn check_temperature(temperature: f64) -> Result<()> {
    if temperature.is_finite() && temperature >= 0.0 {
        Ok(())
    } else {
        Err(Error::NonpositiveTemperature(temperature))
    }
}

/// Normalised Boltzmann weight of one occupation tuple.
///
/// `temperature == 0` selects the ground state: weight 1 for the zero tuple
/// and 0 otherwise.
pub fn boltzmann_weight(tuple: &OccupationTuple, bath: &BathSpec, temperature: f64) -> Result<f64> {
    check_temperature(temperature)?;
    if tuple.len() != bath.len() {
        return Err(Error::DimensionMismatch {
            expected: bath.len(),
            got: tuple.len(),
        });
    }
    if temperature == 0.0 {
        let ground = tuple.as_slice().iter().all(|&n| n == 0);
        return Ok(if ground { 1.0 } else { 0.0 });
    }
    let log_w: f64 = bath
        .modes()
        .iter()
        .zip(tuple.as_slice())
        .map(|(m, &n)| {
            let beta_w = m.freq / temperature;
            (-(-beta_w).exp_m1()).ln() - f64::from(n) * beta_w
        })
        .sum();
    Ok(log_w.exp())
}

/// Per-mode occupation cutoffs and the Boltzmann mass they discard.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncationPlan {
    pub cutoffs: Vec<u32>,
    /// 1 − Π_k (1 − x_k^{N_k+1})
    pub tail_bound: f64,
    /// Π_k (N_k + 1)
    pub block_count: u64,
}

/// Discarded mass of the box `n_k ≤ cutoffs[k]`.
pub fn box_tail(bath: &BathSpec, temperature: f64, cutoffs: &[u32]) -> f64 {
    if temperature == 0.0 {
        return 0.0;
    }
    let log_kept: f64 = bath
        .modes()
        .iter()
        .zip(cutoffs)
        .map(|(m, &n)| {
            let marginal = (-(f64::from(n) + 1.0) * m.freq / temperature).exp();
            (-marginal).ln_1p()
        })
        .sum();
    -log_kept.exp_m1()
}

/// Grow per-mode cutoffs greedily, always on the mode with the largest
/// marginal tail `x_k^{N_k+1}`, until the discarded mass is at most `tail_tol`.
pub fn plan_truncation(
    bath: &BathSpec,
    temperature: f64,
    tail_tol: f64,
    budget: u64,
) -> Result<TruncationPlan> {
    check_temperature(temperature)?;
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(invalid("tail_tol", format!("must lie in (0, 1), got {tail_tol}")));
    }
    let d = bath.len();
    let mut cutoffs = vec![0u32; d];
    if temperature == 0.0 {
        return Ok(TruncationPlan {
            cutoffs,
            tail_bound: 0.0,
            block_count: 1,
        });
    }
    let beta_w: Vec<f64> = bath.modes().iter().map(|m| m.freq / temperature).collect();
    let mut count: u128 = 1;
    loop {
        let tail = box_tail(bath, temperature, &cutoffs);
        if tail <= tail_tol {
            if count > u128::from(budget) {
                return Err(Error::PlanTooLarge {
                    block_count: count,
                    budget,
                });
            }
            return Ok(TruncationPlan {
                cutoffs,
                tail_bound: tail,
                block_count: count as u64,
            });
        }
        // largest x_k^{N_k+1} <=> smallest (N_k+1) ω̃_k / T; ties go to the lower index
        let k = (0..d)
            .min_by(|&a, &b| {
                let ea = (f64::from(cutoffs[a]) + 1.0) * beta_w[a];
                let eb = (f64::from(cutoffs[b]) + 1.0) * beta_w[b];
                ea.total_cmp(&eb)
            })
            .expect("bath has at least one mode");
        count = count / (u128::from(cutoffs[k]) + 1) * (u128::from(cutoffs[k]) + 2);
        cutoffs[k] += 1;
        if count > u128::from(budget) {
            return Err(Error::PlanTooLarge {
                block_count: count,
                budget,
            });
        }
    }
}

/// Knobs for [`thermal_survival`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalOptions {
    pub tail_tol: f64,
    pub block_budget: u64,
    pub eig_tol: f64,
    pub parallelism: Parallelism,
}

impl Default for ThermalOptions {
    fn default() -> Self {
        Self {
            tail_tol: 1e-4,
            block_budget: DEFAULT_BLOCK_BUDGET,
            eig_tol: DEFAULT_TOL,
            parallelism: Parallelism::Auto,
        }
    }
}

/// Thermal survival probability on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    /// Truncated sum; the exact curve lies in `[P, P + error_bound]`.
    pub values: Vec<f64>,
    pub error_bound: f64,
    pub temperature: f64,
    pub cutoffs: Vec<u32>,
    pub block_count: u64,
    pub system: SystemParams,
    pub bath: BathSpec,
}

impl SurvivalCurve {
    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Evaluates weights and survival series of individual blocks.
struct BlockEvaluator<'a> {
    bath: &'a BathSpec,
    coupling: f64,
    local_diag: Vec<f64>,
    log_norm: f64,
    beta_w: Vec<f64>,
    zero_temperature: bool,
    eig_tol: f64,
    grid: &'a TimeGrid,
    secular: Option<SecularSolver>,
}

#[derive(Default)]
struct Scratch {
    secular: Option<SecularSolver>,
    spectral: SpectralWorkspace,
    spokes: Vec<f64>,
    weights: Vec<f64>,
    phases: PhaseScratch,
    series: Vec<f64>,
}

impl<'a> BlockEvaluator<'a> {
    fn new(sys: &SystemParams, bath: &'a BathSpec, temperature: f64, eig_tol: f64, grid: &'a TimeGrid) -> Self {
        let mut local_diag = vec![sys.omega1, sys.omega2];
        local_diag.extend(bath.modes().iter().map(|m| sys.omega3 + m.freq));
        let zero_temperature = temperature == 0.0;
        let beta_w: Vec<f64> = if zero_temperature {
            vec![0.0; bath.len()]
        } else {
            bath.modes().iter().map(|m| m.freq / temperature).collect()
        };
        let log_norm = beta_w.iter().map(|&b| (-(-b).exp_m1()).ln()).sum();
        let mean = local_diag.iter().sum::<f64>() / local_diag.len() as f64;
        let centered: Vec<f64> = local_diag.iter().map(|d| d - mean).collect();
        let secular = SecularSolver::new(&centered);
        Self {
            secular,
            bath,
            coupling: sys.coupling,
            local_diag,
            log_norm,
            beta_w,
            zero_temperature,
            eig_tol,
            grid,
        }
    }

    fn weight(&self, tuple: &[u32]) -> f64 {
        if self.zero_temperature {
            return if tuple.iter().all(|&n| n == 0) { 1.0 } else { 0.0 };
        }
        let energy: f64 = tuple
            .iter()
            .zip(&self.beta_w)
            .map(|(&n, &b)| f64::from(n) * b)
            .sum();
        (self.log_norm - energy).exp()
    }

    /// Fills `scratch.series` with |a_n(t)|².
    fn survival(&self, tuple: &[u32], scratch: &mut Scratch) -> Result<()> {
        let s = scratch;
        s.spokes.clear();
        s.spokes.push(self.coupling);
        s.spokes.push(0.0);
        s.spokes.extend(
            self.bath
                .modes()
                .iter()
                .zip(tuple)
                .map(|(m, &n)| m.g.norm() * (f64::from(n) + 1.0).sqrt()),
        );
        s.series.clear();
        s.series.resize(self.grid.len(), 0.0);
        if s.secular.is_none() {
            s.secular.clone_from(&self.secular);
        }
        if let Some(sec) = s.secular.as_mut() {
            if sec.solve(&s.spokes) {
                survival_series_into(&sec.values, &sec.weights, self.grid, &mut s.phases, &mut s.series);
                return Ok(());
            }
        }
        if s.spectral.solve_star(&self.local_diag, &s.spokes, self.eig_tol).is_none() {
            return Err(Error::ConvergenceFailure {
                tuple: tuple.to_vec(),
                sweeps: MAX_SWEEPS,
            });
        }
        s.spectral.first_weights_into(&mut s.weights);
        survival_series_into(s.spectral.values(), &s.weights, self.grid, &mut s.phases, &mut s.series);
        Ok(())
    }
}

/// Mixed-radix decode of a lexicographic block index (first mode most significant).
fn decode(mut index: u64, cutoffs: &[u32], out: &mut [u32]) {
    for (slot, &n) in out.iter_mut().zip(cutoffs).rev() {
        let radix = u64::from(n) + 1;
        *slot = (index % radix) as u32;
        index /= radix;
    }
}

/// Advance to the lexicographic successor inside the box.
fn increment(tuple: &mut [u32], cutoffs: &[u32]) {
    for (slot, &n) in tuple.iter_mut().zip(cutoffs).rev() {
        if *slot < n {
            *slot += 1;
            return;
        }
        *slot = 0;
    }
}

/// P(t) for the thermal ensemble at `temperature` (0 selects the ground state).
///
/// Blocks are enumerated in lexicographic order and split into chunks whose
/// boundaries depend only on the block count. Each chunk is accumulated with
/// compensated summation and chunk partials are merged in order, so the
/// result is bitwise identical for every [`Parallelism`].
pub fn thermal_survival(
    sys: &SystemParams,
    bath: &BathSpec,
    temperature: f64,
    grid: &TimeGrid,
    opts: &ThermalOptions,
) -> Result<SurvivalCurve> {
    let plan = plan_truncation(bath, temperature, opts.tail_tol, opts.block_budget)?;
    let eval = BlockEvaluator::new(sys, bath, temperature, opts.eig_tol, grid);
    let total = plan.block_count;
    let chunk_len = total.div_ceil(MAX_CHUNKS).max(MIN_CHUNK);
    let n_chunks = total.div_ceil(chunk_len);
    let n_times = grid.len();

    let partials = ordered_map(n_chunks as usize, opts.parallelism, |c| -> Result<Vec<CompensatedSum>> {
        let start = c as u64 * chunk_len;
        let end = (start + chunk_len).min(total);
        let mut acc = vec![CompensatedSum::new(); n_times];
        let mut tuple = vec![0u32; bath.len()];
        let mut scratch = Scratch::default();
        decode(start, &plan.cutoffs, &mut tuple);
        for _ in start..end {
            let w = eval.weight(&tuple);
            if w > 0.0 {
                eval.survival(&tuple, &mut scratch)?;
                for (a, &s) in acc.iter_mut().zip(&scratch.series) {
                    a.add(w * s);
                }
            }
            increment(&mut tuple, &plan.cutoffs);
        }
        Ok(acc)
    });

    let mut total_acc = vec![CompensatedSum::new(); n_times];
    for part in partials {
        for (t, p) in total_acc.iter_mut().zip(part?) {
            t.merge(&p);
        }
    }
    let values = total_acc
        .iter()
        .map(|a| a.value().clamp(0.0, 1.0))
        .collect();
    Ok(SurvivalCurve {
        times: grid.times().to_vec(),
        values,
        error_bound: plan.tail_bound,
        temperature,
        cutoffs: plan.cutoffs,
        block_count: plan.block_count,
        system: *sys,
        bath: bath.clone(),
    })
}

/// Visit every block of `plan` sequentially in lexicographic order with its
/// Boltzmann weight and survival series. Used by the instrumented bound checks.
pub fn for_each_block<F>(
    sys: &SystemParams,
    bath: &BathSpec,
    temperature: f64,
    grid: &TimeGrid,
    plan: &TruncationPlan,
    eig_tol: f64,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&[u32], f64, &[f64]),
{
    check_temperature(temperature)?;
    let eval = BlockEvaluator::new(sys, bath, temperature, eig_tol, grid);
    let mut tuple = vec![0u32; bath.len()];
    let mut scratch = Scratch::default();
    for _ in 0..plan.block_count {
        let w = eval.weight(&tuple);
        eval.survival(&tuple, &mut scratch)?;
        visit(&tuple, w, &scratch.series);
        increment(&mut tuple, &plan.cutoffs);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::block_survival_series;
    use crate::model::{build_block, Mode};
    use proptest::prelude::*;

    fn fig1() -> (SystemParams, BathSpec) {
        (
            SystemParams::new(20.0, 19.0, 0.0, 1.0).unwrap(),
            BathSpec::uniform(1, 19.0, 1.0).unwrap(),
        )
    }

    fn fig2_bath() -> BathSpec {
        let w23 = 19.0;
        BathSpec::new(
            [1.0, 0.996, 0.992, 0.987]
                .iter()
                .map(|r| Mode::real(r * w23, 0.5))
                .collect(),
        )
        .unwrap()
    }

    fn opts(tail_tol: f64) -> ThermalOptions {
        ThermalOptions {
            tail_tol,
            ..Default::default()
        }
    }

    #[test]
    fn geometric_weights() {
        let bath = BathSpec::uniform(1, 1.0, 1.0).unwrap();
        let t = 1.0 / std::f64::consts::LN_2;
        let w0 = boltzmann_weight(&vec![0].into(), &bath, t).unwrap();
        let w2 = boltzmann_weight(&vec![2].into(), &bath, t).unwrap();
        assert!((w0 - 0.5).abs() < 1e-15);
        assert!((w2 - 0.125).abs() < 1e-15);
        let bath2 = BathSpec::uniform(2, 1.0, 1.0).unwrap();
        let w11 = boltzmann_weight(&vec![1, 1].into(), &bath2, t).unwrap();
        assert!((w11 - 1.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn zero_temperature_weights() {
        let bath = BathSpec::uniform(2, 1.0, 1.0).unwrap();
        assert_eq!(boltzmann_weight(&vec![0, 0].into(), &bath, 0.0).unwrap(), 1.0);
        assert_eq!(boltzmann_weight(&vec![0, 1].into(), &bath, 0.0).unwrap(), 0.0);
        assert_eq!(
            boltzmann_weight(&vec![0, 0].into(), &bath, -1.0),
            Err(Error::NonpositiveTemperature(-1.0))
        );
        assert!(boltzmann_weight(&vec![0, 0].into(), &bath, f64::NAN).is_err());
    }

    #[test]
    fn single_mode_plans() {
        let bath = BathSpec::uniform(1, 1.0, 1.0).unwrap();
        let t = 1.0 / std::f64::consts::LN_2;
        let p = plan_truncation(&bath, t, 0.01, DEFAULT_BLOCK_BUDGET).unwrap();
        assert_eq!(p.cutoffs, vec![6]);
        assert!((p.tail_bound - 2f64.powi(-7)).abs() < 1e-15);
        let p = plan_truncation(&bath, t, 0.5, DEFAULT_BLOCK_BUDGET).unwrap();
        assert_eq!(p.cutoffs, vec![0]);
        assert!((p.tail_bound - 0.5).abs() < 1e-15);
        assert!(plan_truncation(&bath, t, 0.0, 10).is_err());
        assert!(plan_truncation(&bath, t, 1.0, 10).is_err());
    }

    #[test]
    fn fig2_plan_matches_product_oracle() {
        // greedy cutoffs from tests/oracles/reference_values.py (50-digit product tail)
        let bath = fig2_bath();
        let t = 10.0 * 19.0;
        let p = plan_truncation(&bath, t, 1e-3, 100_000_000).unwrap();
        assert_eq!(p.cutoffs, vec![82, 82, 83, 83]);
        assert_eq!(p.block_count, 48_608_784);
        // no single cutoff can be lowered without breaking the bound
        let kept = |c: &[u32]| -> f64 {
            bath.modes()
                .iter()
                .zip(c)
                .map(|(m, &n)| 1.0 - (-(f64::from(n) + 1.0) * m.freq / t).exp())
                .product()
        };
        assert!(kept(&p.cutoffs) >= 1.0 - 1e-3);
        for k in 0..4 {
            let mut c = p.cutoffs.clone();
            c[k] -= 1;
            assert!(kept(&c) < 1.0 - 1e-3);
        }
        let err = plan_truncation(&bath, t, 1e-3, DEFAULT_BLOCK_BUDGET).unwrap_err();
        assert!(matches!(err, Error::PlanTooLarge { .. }));
    }

    #[test]
    fn zero_omega_survives_forever() {
        let sys = SystemParams::new(20.0, 19.0, 0.0, 0.0).unwrap();
        let bath = BathSpec::uniform(1, 19.0, 1.0).unwrap();
        let grid = TimeGrid::uniform(10.0, 50).unwrap();
        let c = thermal_survival(&sys, &bath, 19.0, &grid, &opts(1e-15)).unwrap();
        assert!(c.values.iter().all(|&p| (p - 1.0).abs() < 1e-14));
    }

    #[test]
    fn zero_temperature_is_ground_block() {
        let (sys, bath) = fig1();
        let grid = TimeGrid::uniform(10.0, 400).unwrap();
        let c = thermal_survival(&sys, &bath, 0.0, &grid, &opts(1e-4)).unwrap();
        assert_eq!(c.block_count, 1);
        assert_eq!(c.error_bound, 0.0);
        let b = build_block(&sys, &bath, &vec![0].into()).unwrap();
        let s = block_survival_series(&b, grid.times(), DEFAULT_TOL).unwrap();
        for (a, b) in c.values.iter().zip(&s) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn fig1_minima_match_expm_oracle() {
        // minima of P over 400 points on [0, 10] at tail 1e-8, computed with
        // scipy's Pade expm propagation (tests/oracles/reference_values.py)
        let expected = [
            (0.1, 0.010410313845),
            (1.0, 0.075847512856),
            (10.0, 0.563712361801),
            (100.0, 0.910468582966),
        ];
        let (sys, bath) = fig1();
        let grid = TimeGrid::uniform(10.0, 400).unwrap();
        let mut last = 0.0;
        for (ratio, min_p) in expected {
            let c = thermal_survival(&sys, &bath, ratio * 19.0, &grid, &opts(1e-8)).unwrap();
            let m = c.min_value();
            assert!((m - min_p).abs() < 1e-9, "ratio {ratio}: {m} vs {min_p}");
            assert!(m > last);
            last = m;
        }
    }

    #[test]
    fn visitor_reproduces_the_sum() {
        let (sys, bath) = fig1();
        let grid = TimeGrid::uniform(5.0, 40).unwrap();
        let t = 19.0;
        let plan = plan_truncation(&bath, t, 1e-6, DEFAULT_BLOCK_BUDGET).unwrap();
        let mut acc = vec![0.0; grid.len()];
        let mut mass = 0.0;
        for_each_block(&sys, &bath, t, &grid, &plan, DEFAULT_TOL, |_, w, s| {
            mass += w;
            for (a, v) in acc.iter_mut().zip(s) {
                *a += w * v;
            }
        })
        .unwrap();
        assert!((mass - (1.0 - plan.tail_bound)).abs() < 1e-12);
        let c = thermal_survival(&sys, &bath, t, &grid, &opts(1e-6)).unwrap();
        for (a, b) in acc.iter().zip(&c.values) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn lexicographic_decode_and_increment_agree() {
        let cutoffs = [2u32, 0, 3];
        let mut walk = vec![0u32; 3];
        let mut decoded = vec![0u32; 3];
        for i in 0..12 {
            decode(i, &cutoffs, &mut decoded);
            assert_eq!(walk, decoded);
            increment(&mut walk, &cutoffs);
        }
    }

    fn arb_bath() -> impl Strategy<Value = (BathSpec, f64)> {
        (
            prop::collection::vec((0.5..5.0f64, 0.1..2.0f64), 1..=3),
            0.2..8.0f64,
        )
            .prop_map(|(m, t)| {
                (
                    BathSpec::new(m.into_iter().map(|(f, g)| Mode::real(f, g)).collect()).unwrap(),
                    t,
                )
            })
    }

    proptest! {
        #[test]
        fn box_weights_sum_to_kept_mass((bath, t) in arb_bath(), tol in 1e-6..0.5f64) {
            let plan = plan_truncation(&bath, t, tol, DEFAULT_BLOCK_BUDGET).unwrap();
            prop_assert!(plan.tail_bound <= tol);
            prop_assert!((0.0..1.0).contains(&plan.tail_bound));
            let mut mass = CompensatedSum::new();
            let mut tuple = vec![0u32; bath.len()];
            for _ in 0..plan.block_count {
                mass.add(boltzmann_weight(&tuple.clone().into(), &bath, t).unwrap());
                increment(&mut tuple, &plan.cutoffs);
            }
            prop_assert!((mass.value() - (1.0 - plan.tail_bound)).abs() <= 1e-12);
        }

        #[test]
        fn refinement_is_monotone_and_bracketed(ratio in 0.2..5.0f64, omega in 0.3..2.0f64) {
            let sys = SystemParams::new(20.0, 19.0, 0.0, omega).unwrap();
            let bath = BathSpec::uniform(1, 19.0, 1.0).unwrap();
            let grid = TimeGrid::uniform(10.0, 60).unwrap();
            let coarse = thermal_survival(&sys, &bath, ratio * 19.0, &grid, &opts(1e-3)).unwrap();
            let fine = thermal_survival(&sys, &bath, ratio * 19.0, &grid, &opts(1e-7)).unwrap();
            for (c, f) in coarse.values.iter().zip(&fine.values) {
                prop_assert!(f + 1e-13 >= *c);
                prop_assert!(f - c <= 1e-3);
                prop_assert!(*f <= c + coarse.error_bound + 1e-13);
            }
        }
    }
}
