//! Analytic bounds: survival floor, eigenvalue localisation and overlap,
//! coupling and temperature thresholds, partition-function ratios.

use crate::error::{invalid, Error, Result};
use crate::evolution::TimeGrid;
use crate::model::{band_stats, BandSide, BandStats, BathSpec, HermitianBlock, SystemParams};
use crate::numerics::CompensatedSum;
use crate::thermal::{for_each_block, plan_truncation, TruncationPlan, DEFAULT_BLOCK_BUDGET};

/// Lower bound (2χ−1)² on |a(t)|² when one eigenstate carries weight χ.
pub fn survival_floor(chi: f64) -> Result<f64> {
    if !(chi > 0.5 && chi <= 1.0) {
        return Err(Error::ChiOutOfRange(chi));
    }
    let d = 2.0 * chi - 1.0;
    Ok(d * d)
}

/// Lower bound on |⟨λ₁|A⟩| for a block with coupling norm `c`.
///
/// Requires c² > 4MΩ²/m. At Ω = 0 the bound is 1.
pub fn overlap_lower_bound(c: f64, m: f64, big_m: f64, omega: f64) -> Result<f64> {
    check_band(m, big_m)?;
    if !omega.is_finite() {
        return Err(invalid("Omega", "must be finite"));
    }
    let required_sq = 4.0 * big_m * omega * omega / m;
    if !(c.is_finite() && c > 0.0 && c * c > required_sq) {
        return Err(Error::InadmissibleC { c, required_sq });
    }
    // m c² / sqrt(m²c⁴ + 16M²Ω²c² + 4m²M²Ω²), divided through by m c²
    let r = big_m * omega / (m * c);
    let s = big_m * omega / (c * c);
    Ok(1.0 / (1.0 + 16.0 * r * r + 4.0 * s * s).sqrt())
}

fn check_band(m: f64, big_m: f64) -> Result<()> {
    if !(m.is_finite() && m > 0.0) {
        return Err(invalid("m", format!("must be positive, got {m}")));
    }
    if !(big_m.is_finite() && big_m >= m) {
        return Err(invalid("M", format!("must satisfy M >= m, got {big_m}")));
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::EpsOutOfRange(eps))
    }
}

/// 1 − (1−ε)^{1/4}, accurate for small ε.
fn one_minus_quarter_root(eps: f64) -> f64 {
    -((-eps).ln_1p() / 4.0).exp_m1()
}

/// χ = ((1−ε)^{1/4} + 1)/2.
pub fn chi(eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(1.0 - 0.5 * one_minus_quarter_root(eps))
}

/// α = 1 − √(1−ε).
pub fn alpha(eps: f64) -> Result<f64> {
    check_eps(eps)?;
    Ok(-((-eps).ln_1p() / 2.0).exp_m1())
}

/// Minimal coupling norm c_ε in closed form and its small-ε asymptote.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CEpsilon {
    pub exact: f64,
    pub asymptotic: f64,
}

/// c_ε = (4MΩ/m)·√((1+q)/(1−q)) with q = (1−ε)^{1/4}, and 8√2·ΩM/m·ε^{−1/2}.
pub fn c_epsilon(eps: f64, m: f64, big_m: f64, omega: f64) -> Result<CEpsilon> {
    check_eps(eps)?;
    check_band(m, big_m)?;
    Ok(c_epsilon_unchecked(eps, m, big_m, omega))
}

fn c_epsilon_unchecked(eps: f64, m: f64, big_m: f64, omega: f64) -> CEpsilon {
    let one_minus_q = one_minus_quarter_root(eps);
    let pref = 4.0 * big_m * omega / m;
    CEpsilon {
        exact: pref * ((2.0 - one_minus_q) / one_minus_q).sqrt(),
        asymptotic: 8.0 * std::f64::consts::SQRT_2 * omega * big_m / (m * eps.sqrt()),
    }
}

/// Smallest c for which [`overlap_lower_bound`]² ≥ χ, without the
/// small-(1−χ) simplification that produces [`c_epsilon`].
pub fn c_for_overlap(chi: f64, m: f64, big_m: f64, omega: f64) -> Result<f64> {
    if !(chi > 0.0 && chi < 1.0) {
        return Err(Error::ChiOutOfRange(chi));
    }
    check_band(m, big_m)?;
    if omega == 0.0 {
        return Ok(0.0);
    }
    let one_minus = 1.0 - chi;
    let s = one_minus * m.powi(4) / (16.0 * chi * big_m * big_m * omega * omega);
    Ok(4.0 * omega * big_m * chi.sqrt() / m * ((1.0 + (1.0 + s).sqrt()) / (2.0 * one_minus)).sqrt())
}

/// One admissibility condition on the coupling norm, expressed as `c > threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowCondition {
    pub label: &'static str,
    pub threshold: f64,
    pub satisfied: bool,
}

/// Predicted location of the eigenvalue that stays close to |1, n⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenWindow {
    /// ±2MΩ²/c², positive when the band lies above the Bohr frequency.
    pub xi: f64,
    pub c: f64,
    /// Largest of the condition thresholds.
    pub c_required: f64,
    pub holds: bool,
    pub conditions: Vec<WindowCondition>,
    /// ω₁ + δ
    pub delta1: f64,
    /// ω₂ + δ
    pub delta2: f64,
    pub side: BandSide,
}

impl EigenWindow {
    /// Open interval between δ₁ and δ₁ + ξ, ordered.
    pub fn interval(&self) -> (f64, f64) {
        let other = self.delta1 + self.xi;
        (self.delta1.min(other), self.delta1.max(other))
    }

    pub fn contains(&self, lambda: f64) -> bool {
        let (lo, hi) = self.interval();
        lambda > lo && lambda < hi
    }

    /// The condition with the largest threshold.
    pub fn binding(&self) -> &WindowCondition {
        self.conditions
            .iter()
            .max_by(|a, b| a.threshold.total_cmp(&b.threshold))
            .expect("at least one condition")
    }
}

/// Evaluate the admissibility conditions for `block` and its signed window.
pub fn eigenvalue_window(block: &HermitianBlock, band: &BandStats, sys: &SystemParams) -> Result<EigenWindow> {
    check_band(band.m, band.big_m)?;
    let c = block.coupling_norm();
    let (m, big_m, omega) = (band.m, band.big_m, sys.coupling);
    let delta1 = sys.omega1 + block.delta();
    let delta2 = sys.omega2 + block.delta();
    let gap = delta2 - delta1;

    let mut thresholds = vec![
        ("c > Omega*sqrt(2M/m)", omega * (2.0 * big_m / m).sqrt()),
        ("c^2 > 4*M*Omega^2/m", 2.0 * omega * (big_m / m).sqrt()),
        ("c > 4*M*Omega^2/m", 4.0 * big_m * omega * omega / m),
    ];
    match band.side {
        BandSide::Above if gap >= 0.0 => thresholds.push(("c > sqrt(2(d2-d1)M)", (2.0 * gap * big_m).sqrt())),
        BandSide::Below if gap < 0.0 => thresholds.push(("c > sqrt(2|d2-d1|M)", (2.0 * gap.abs() * big_m).sqrt())),
        _ => {}
    }
    let conditions: Vec<WindowCondition> = thresholds
        .into_iter()
        .map(|(label, threshold)| WindowCondition {
            label,
            threshold,
            satisfied: c > threshold,
        })
        .collect();
    let c_required = conditions.iter().map(|k| k.threshold).fold(0.0, f64::max);
    let holds = c > 0.0 && conditions.iter().all(|k| k.satisfied);
    let magnitude = if c > 0.0 { 2.0 * big_m * omega * omega / (c * c) } else { f64::INFINITY };
    let xi = match band.side {
        BandSide::Above => magnitude,
        BandSide::Below => -magnitude,
    };
    Ok(EigenWindow {
        xi,
        c,
        c_required,
        holds,
        conditions,
        delta1,
        delta2,
        side: band.side,
    })
}

/// Smallest integer strictly larger than c_ε²/g_min².
pub fn n_epsilon(c_eps: f64, g_min: f64) -> Result<u64> {
    if g_min.is_nan() || g_min <= 0.0 {
        return Err(Error::ZeroCoupling { mode: 0 });
    }
    if !(c_eps.is_finite() && c_eps >= 0.0) {
        return Err(invalid("c_eps", format!("must be finite and nonnegative, got {c_eps}")));
    }
    let q = (c_eps / g_min).powi(2);
    if q.is_nan() || q >= 1.8e19 {
        return Err(invalid("c_eps", "c_eps^2/g_min^2 does not fit in an integer"));
    }
    Ok(q.floor() as u64 + 1)
}

/// T_ε = −2ω n_ε / ln(1−ε) for a single mode of frequency ω.
pub fn threshold_single(eps: f64, omega: f64, n_eps: u64) -> Result<f64> {
    check_eps(eps)?;
    if !(omega.is_finite() && omega > 0.0) {
        return Err(invalid("omega", format!("must be positive, got {omega}")));
    }
    Ok(-2.0 * omega * n_eps as f64 / (-eps).ln_1p())
}

/// Hypercube threshold: the exact sufficient inequality and its asymptote T_c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubeThreshold {
    pub exact: f64,
    pub asymptotic: f64,
    pub n_eps: u64,
    /// α^{1/D} ≤ 0.1, the regime where the asymptote is meaningful.
    pub asymptotic_reliable: bool,
}

pub fn threshold_hypercube(eps: f64, band: &BandStats, d: usize, omega: f64) -> Result<CubeThreshold> {
    check_eps(eps)?;
    check_band(band.m, band.big_m)?;
    band.ensure_coupled()?;
    let dims = check_dims(d)?;
    let ce = c_epsilon_unchecked(eps, band.m, band.big_m, omega);
    let n_eps = n_epsilon(ce.exact, band.g_min)?;
    let a = alpha(eps)?;
    let root = a.powf(1.0 / dims);
    let exact = -band.omega_max * n_eps as f64 / (-root).ln_1p();
    let ratio = band.big_m * omega / (band.m * band.g_min);
    let asymptotic = 64.0 * ratio * ratio * band.omega_max * (2.0 / eps).powf((dims + 1.0) / dims) * dims;
    Ok(CubeThreshold {
        exact,
        asymptotic,
        n_eps,
        asymptotic_reliable: root <= 0.1,
    })
}

fn check_dims(d: usize) -> Result<f64> {
    if d == 0 {
        Err(invalid("D", "need at least one mode"))
    } else {
        Ok(d as f64)
    }
}

/// Hypersphere threshold T_s with its continuum-validity flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SphereThreshold {
    pub value: f64,
    /// T_s ≥ 10·ω̃_max.
    pub valid: bool,
    /// 2 G_D^{1/D} c_ε² ω̃_av / g_av² · α^{−1/D}, before the large-D simplifications.
    pub non_asymptotic: f64,
}

/// T_s = 2⁷e M²Ω² ω̃_av / (m² g_av² D) / ε. Accepts ε = 1 as a formal limit.
pub fn threshold_hypersphere(eps: f64, band: &BandStats, d: usize, omega: f64) -> Result<SphereThreshold> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::EpsOutOfRange(eps));
    }
    check_band(band.m, band.big_m)?;
    band.ensure_coupled()?;
    let dims = check_dims(d)?;
    let ratio = band.big_m * omega / (band.m * band.g_av);
    let value = 128.0 * std::f64::consts::E * ratio * ratio * band.omega_av / (dims * eps);
    let ce = c_epsilon_unchecked(eps, band.m, band.big_m, omega).exact;
    let a = -((-eps).ln_1p() / 2.0).exp_m1();
    let non_asymptotic = 2.0 * (ln_geometric_factor(d) / dims).exp() * ce * ce * band.omega_av
        / (band.g_av * band.g_av)
        * a.powf(-1.0 / dims);
    Ok(SphereThreshold {
        value,
        valid: value >= 10.0 * band.omega_max,
        non_asymptotic,
    })
}

/// ln G_D with G_D = 1/(2^D D!).
pub fn ln_geometric_factor(d: usize) -> f64 {
    let log_fact: f64 = (2..=d).map(|k| (k as f64).ln()).sum();
    -(d as f64) * std::f64::consts::LN_2 - log_fact
}

/// G_D = 1/(2^D D!), the orthant-ball integral constant.
pub fn geometric_factor(d: usize) -> f64 {
    ln_geometric_factor(d).exp()
}

/// Stirling form (2πD)^{−1/2} 2^{−D} D^{−D} e^D.
pub fn geometric_factor_stirling(d: usize) -> f64 {
    let x = d as f64;
    (-0.5 * (2.0 * std::f64::consts::PI * x).ln() - x * std::f64::consts::LN_2 - x * x.ln() + x).exp()
}

/// How to evaluate Z_ε / Z_tot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMode {
    /// Sum the Boltzmann weights of {Σ g_k² n_k < c²}; errors past `budget` tuples.
    ExactEnumeration { budget: u64 },
    /// (1 − x^{n_ε})^D with x = min_k e^{−ω̃_k/T}.
    CubeBound,
    /// Continuum estimate; not a certified bound and may exceed 1.
    SphereApprox,
}

/// Thermal weight of the tuples whose surrogate coupling Σ g_k² n_k stays below c_ε².
pub fn partition_ratio(bath: &BathSpec, temperature: f64, c_eps: f64, mode: PartitionMode) -> Result<f64> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::NonpositiveTemperature(temperature));
    }
    let g2: Vec<f64> = bath.modes().iter().map(|m| m.g.norm_sqr()).collect();
    if let Some(mode) = g2.iter().position(|&g| g == 0.0) {
        return Err(Error::ZeroCoupling { mode });
    }
    let c2 = c_eps * c_eps;
    match mode {
        PartitionMode::ExactEnumeration { budget } => {
            let beta_w: Vec<f64> = bath.modes().iter().map(|m| m.freq / temperature).collect();
            let log_norm: f64 = beta_w.iter().map(|&b| (-(-b).exp_m1()).ln()).sum();
            let mut acc = CompensatedSum::new();
            let mut visited = 0u64;
            enumerate_region(&g2, &beta_w, c2, 0, 0.0, 0.0, &mut |energy| {
                visited += 1;
                if visited > budget {
                    return false;
                }
                acc.add((log_norm - energy).exp());
                true
            });
            if visited > budget {
                return Err(Error::BudgetExceeded { budget });
            }
            Ok(acc.value().clamp(0.0, 1.0))
        }
        PartitionMode::CubeBound => {
            let g_min = g2.iter().copied().fold(f64::INFINITY, f64::min).sqrt();
            let n_eps = n_epsilon(c_eps, g_min)?;
            let omega_max = bath.modes().iter().map(|m| m.freq).fold(0.0, f64::max);
            let log_x = -omega_max / temperature;
            let one_minus = -(n_eps as f64 * log_x).exp_m1();
            Ok(one_minus.powi(bath.len() as i32))
        }
        PartitionMode::SphereApprox => {
            let d = bath.len();
            let log = d as f64 * std::f64::consts::LN_2 + ln_geometric_factor(d) + d as f64 * c2.ln()
                - g2.iter().map(|g| g.ln()).sum::<f64>()
                + bath.modes().iter().map(|m| m.freq.ln()).sum::<f64>()
                - d as f64 * temperature.ln();
            Ok(log.exp())
        }
    }
}

/// Depth-first walk over {Σ g_k² n_k < c2}, passing β·energy of each tuple.
/// Stops early when `visit` returns false.
fn enumerate_region(
    g2: &[f64],
    beta_w: &[f64],
    c2: f64,
    k: usize,
    used: f64,
    energy: f64,
    visit: &mut dyn FnMut(f64) -> bool,
) -> bool {
    if k == g2.len() {
        return visit(energy);
    }
    let mut n = 0u64;
    loop {
        let load = used + g2[k] * n as f64;
        if load >= c2 {
            return true;
        }
        if !enumerate_region(g2, beta_w, c2, k + 1, load, energy + beta_w[k] * n as f64, visit) {
            return false;
        }
        n += 1;
    }
}

/// Every threshold for one system, bath and ε.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub epsilon: f64,
    pub chi: f64,
    pub alpha: f64,
    pub c_eps: CEpsilon,
    pub n_eps: u64,
    /// Present only for a single-mode bath.
    pub t_single: Option<f64>,
    pub t_cube: CubeThreshold,
    pub t_sphere: SphereThreshold,
    pub band: BandStats,
    pub modes: usize,
}

pub fn threshold_report(sys: &SystemParams, bath: &BathSpec, eps: f64) -> Result<ThresholdReport> {
    check_eps(eps)?;
    let band = band_stats(sys, bath)?;
    band.ensure_coupled()?;
    let omega = sys.coupling;
    let c_eps = c_epsilon(eps, band.m, band.big_m, omega)?;
    let n_eps = n_epsilon(c_eps.exact, band.g_min)?;
    let d = bath.len();
    let t_single = if d == 1 {
        Some(threshold_single(eps, bath.modes()[0].freq, n_eps)?)
    } else {
        None
    };
    Ok(ThresholdReport {
        epsilon: eps,
        chi: chi(eps)?,
        alpha: alpha(eps)?,
        c_eps,
        n_eps,
        t_single,
        t_cube: threshold_hypercube(eps, &band, d, omega)?,
        t_sphere: threshold_hypersphere(eps, &band, d, omega)?,
        band,
        modes: d,
    })
}

/// Outcome of checking the single-mode chain
/// P(t) ≥ Σ_{n<n_ε} p_n P_n(t) + Σ_{n≥n_ε} p_n √(1−ε) ≥ x^{n_ε} √(1−ε)
/// block by block on a truncated ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainCheck {
    pub epsilon: f64,
    pub temperature: f64,
    pub n_eps: u64,
    pub plan: TruncationPlan,
    /// √(1−ε)
    pub block_floor: f64,
    /// min over blocks n ≥ n_ε and grid times of P_n(t).
    pub worst_block: f64,
    pub blocks_above: u64,
    /// min_t of P(t) minus the middle expression of the chain (truncated).
    pub chain_slack: f64,
    /// x^{n_ε} √(1−ε)
    pub chain_bound: f64,
    /// min_t P(t) over the truncated ensemble.
    pub min_survival: f64,
}

impl ChainCheck {
    /// Every link holds to within `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.worst_block >= self.block_floor - tol
            && self.chain_slack >= -tol
            && self.min_survival + self.plan.tail_bound >= self.chain_bound - tol
    }
}

/// Instrumented single-mode chain at `temperature`, enumerating blocks up to
/// the cutoff given by `tail_tol`.
pub fn single_mode_chain(
    sys: &SystemParams,
    bath: &BathSpec,
    eps: f64,
    temperature: f64,
    grid: &TimeGrid,
    tail_tol: f64,
) -> Result<ChainCheck> {
    if bath.len() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: bath.len(),
        });
    }
    let report = threshold_report(sys, bath, eps)?;
    let plan = plan_truncation(bath, temperature, tail_tol, DEFAULT_BLOCK_BUDGET)?;
    let n_eps = report.n_eps;
    let block_floor = (1.0 - eps).sqrt();
    let n_times = grid.len();
    let mut total = vec![CompensatedSum::new(); n_times];
    let mut lower = vec![CompensatedSum::new(); n_times];
    let mut worst_block = f64::INFINITY;
    let mut blocks_above = 0u64;
    for_each_block(sys, bath, temperature, grid, &plan, crate::evolution::DEFAULT_TOL, |tuple, w, series| {
        let above = u64::from(tuple[0]) >= n_eps;
        if above {
            blocks_above += 1;
            worst_block = series.iter().copied().fold(worst_block, f64::min);
        }
        for ((t, l), &s) in total.iter_mut().zip(lower.iter_mut()).zip(series) {
            t.add(w * s);
            l.add(if above { w * block_floor } else { w * s });
        }
    })?;
    let chain_slack = total
        .iter()
        .zip(&lower)
        .map(|(t, l)| t.value() - l.value())
        .fold(f64::INFINITY, f64::min);
    let min_survival = total.iter().map(|t| t.value()).fold(f64::INFINITY, f64::min);
    let chain_bound = (-(bath.modes()[0].freq * n_eps as f64) / temperature).exp() * block_floor;
    Ok(ChainCheck {
        epsilon: eps,
        temperature,
        n_eps,
        plan,
        block_floor,
        worst_block,
        blocks_above,
        chain_slack,
        chain_bound,
        min_survival,
    })
}
