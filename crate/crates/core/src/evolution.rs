//! Exact propagation of a single invariant block.
//!
//! A block is diagonalised once; the survival amplitude of `|1,n>` is then
//! `a(t) = Σ_k w_k exp(-i λ_k t)` with `w_k = |<1,n|φ_k>|²`.
//!
//! Every block is a star graph around basis index 1, so a diagonal unitary
//! gauge makes it real symmetric without touching index 0. The real problem
//! is solved by cyclic Jacobi, relative to a shift `δ + mean(local diagonal)`
//! so that large occupation energies do not eat the mantissa.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::JacobiWorkspace;
use crate::model::{HermitianBlock, Star};

/// Default relative off-diagonal tolerance for the eigensolver.
pub const DEFAULT_TOL: f64 = 1e-13;

/// Jacobi sweep budget; tiny blocks converge in well under ten.
pub const MAX_SWEEPS: usize = 64;

/// Spectral decomposition of a block, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSpectrum {
    dim: usize,
    shift: f64,
    relative: Vec<f64>,
    weights: Vec<f64>,
    // column-major: component i of eigenvector k at k*dim + i
    vectors: Vec<Complex64>,
}

impl BlockSpectrum {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Absolute eigenvalues λ_k.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.relative.iter().map(|r| self.shift + r).collect()
    }

    /// Eigenvalues relative to [`BlockSpectrum::shift`]; better conditioned
    /// for phase evaluation than the absolute values.
    pub fn relative_eigenvalues(&self) -> &[f64] {
        &self.relative
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// w_k = |<1,n|φ_k>|².
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Unit eigenvector `k`, gauged so its first component is real and nonnegative.
    pub fn eigenvector(&self, k: usize) -> &[Complex64] {
        &self.vectors[k * self.dim..(k + 1) * self.dim]
    }

    /// Index and weight of the eigenvector with the largest overlap with `|1,n>`.
    pub fn dominant(&self) -> (usize, f64) {
        self.weights
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (k, w)| if w > b.1 { (k, w) } else { b })
    }

    /// Build directly from eigenvalues and weights (no eigenvectors).
    ///
    /// Used for randomized spectra in the bound checks; the eigenvector table
    /// is filled with the identity.
    pub fn from_parts(eigenvalues: Vec<f64>, weights: Vec<f64>) -> Self {
        let dim = eigenvalues.len();
        assert_eq!(dim, weights.len());
        let mut vectors = vec![Complex64::new(0.0, 0.0); dim * dim];
        for k in 0..dim {
            vectors[k * dim + k] = Complex64::new(1.0, 0.0);
        }
        Self {
            dim,
            shift: 0.0,
            relative: eigenvalues,
            weights,
            vectors,
        }
    }
}

/// Reusable solver state for the star-shaped blocks.
#[derive(Debug, Default, Clone)]
pub struct SpectralWorkspace {
    jacobi: JacobiWorkspace,
    real: Vec<f64>,
    values: Vec<f64>,
    vectors: Vec<f64>,
}

impl SpectralWorkspace {
    /// Solve the real star problem with diagonal `local_diag` (relative to an
    /// implicit offset) and hub couplings of magnitude `spokes[j]` from hub 1
    /// to index `j` (`spokes[1]` is ignored).
    ///
    /// On success `self.values()` holds eigenvalues relative to
    /// `mean(local_diag)` and `self.vectors()` the gauged real eigenvectors.
    pub(crate) fn solve_star(&mut self, local_diag: &[f64], spokes: &[f64], tol: f64) -> Option<f64> {
        let n = local_diag.len();
        let mean = local_diag.iter().sum::<f64>() / n as f64;
        self.real.clear();
        self.real.resize(n * n, 0.0);
        for (i, &d) in local_diag.iter().enumerate() {
            self.real[i * n + i] = d - mean;
        }
        for (j, &s) in spokes.iter().enumerate() {
            if j != 1 {
                self.real[n + j] = s;
                self.real[j * n + 1] = s;
            }
        }
        self.values.clear();
        self.values.resize(n, 0.0);
        self.vectors.clear();
        self.vectors.resize(n * n, 0.0);
        self.jacobi
            .solve(&self.real, n, tol, MAX_SWEEPS, &mut self.values, &mut self.vectors)
            .then_some(mean)
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.values
    }

    /// Squared first components of the eigenvectors.
    pub(crate) fn first_weights_into(&self, out: &mut Vec<f64>) {
        let n = self.values.len();
        out.clear();
        out.extend((0..n).map(|k| self.vectors[k * n] * self.vectors[k * n]));
    }
}

/// Full spectral decomposition of `block`.
///
/// The off-diagonal Frobenius norm of the rotated matrix is driven below
/// `tol · ‖H − μ‖_F`, where μ is the diagonal mean; since that norm never
/// exceeds `‖H‖_F`, the residual contract `‖Hv − λv‖ ≲ tol·‖H‖` holds.
pub fn eigendecompose(block: &HermitianBlock, tol: f64) -> Result<BlockSpectrum> {
    assert!(tol > 0.0, "tolerance must be positive");
    let Star {
        offset,
        local_diag,
        hub_row,
    } = block.star();
    let n = block.dim();
    let spokes: Vec<f64> = hub_row.iter().map(|z| z.norm()).collect();
    // phases u_j with (U^H H U)_{1j} = |H_{1j}|, u_1 = 1
    let gauge: Vec<Complex64> = hub_row
        .iter()
        .enumerate()
        .map(|(j, z)| {
            if j == 1 || z.norm() == 0.0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, -z.arg())
            }
        })
        .collect();

    let mut ws = SpectralWorkspace::default();
    let mean = ws
        .solve_star(local_diag, &spokes, tol)
        .ok_or_else(|| Error::ConvergenceFailure {
            tuple: block.tuple().as_slice().to_vec(),
            sweeps: MAX_SWEEPS,
        })?;

    let mut vectors = vec![Complex64::new(0.0, 0.0); n * n];
    let mut weights = Vec::with_capacity(n);
    for k in 0..n {
        let col = &ws.vectors[k * n..(k + 1) * n];
        // fix the sign so the first component is nonnegative
        let sign = if col[0] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[k * n + i] = gauge[i] * (sign * col[i]);
        }
        weights.push(col[0] * col[0]);
    }
    Ok(BlockSpectrum {
        dim: n,
        shift: offset + mean,
        relative: ws.values.clone(),
        weights,
        vectors,
    })
}

/// a(t) = Σ_k w_k exp(-i λ_k t).
pub fn survival_amplitude(spec: &BlockSpectrum, t: f64) -> Complex64 {
    let local: Complex64 = spec
        .relative
        .iter()
        .zip(&spec.weights)
        .map(|(&l, &w)| Complex64::from_polar(w, -l * t))
        .sum();
    local * Complex64::from_polar(1.0, -spec.shift * t)
}

/// |a(t)|² on every point of `times`.
pub fn block_survival_series(block: &HermitianBlock, times: &[f64], tol: f64) -> Result<Vec<f64>> {
    let grid = TimeGrid::new(times.to_vec())?;
    let spec = eigendecompose(block, tol)?;
    let mut out = vec![0.0; grid.len()];
    let mut scratch = PhaseScratch::default();
    survival_series_into(spec.relative_eigenvalues(), spec.weights(), &grid, &mut scratch, &mut out);
    Ok(out)
}

/// Evaluation grid. Uniform grids are detected so that phases can be
/// advanced by multiplication instead of a fresh `sin_cos` per point.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
    step: Option<f64>,
}

/// Exact phases are recomputed at this stride on uniform grids.
const RESEED_STRIDE: usize = 100;

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(crate::error::invalid("times", "grid must be nonempty"));
        }
        if let Some(t) = times.iter().find(|t| !t.is_finite()) {
            return Err(crate::error::invalid("times", format!("non-finite time {t}")));
        }
        let step = uniform_step(&times);
        Ok(Self { times, step })
    }

    /// `n` points evenly spaced on `[0, t_max]` (a single point is `t = 0`).
    pub fn uniform(t_max: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(crate::error::invalid("n_times", "must be >= 1"));
        }
        if !(t_max.is_finite() && t_max >= 0.0) {
            return Err(crate::error::invalid("t_max", "must be finite and >= 0"));
        }
        let times = if n == 1 {
            vec![0.0]
        } else {
            let h = t_max / (n - 1) as f64;
            (0..n).map(|j| j as f64 * h).collect()
        };
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn uniform_step(times: &[f64]) -> Option<f64> {
    let n = times.len();
    if n < 3 {
        return None;
    }
    let h = (times[n - 1] - times[0]) / (n - 1) as f64;
    if h == 0.0 {
        return None;
    }
    let scale = times.iter().fold(0.0f64, |a, t| a.max(t.abs())).max(1.0);
    let uniform = times
        .iter()
        .enumerate()
        .all(|(j, &t)| (t - (times[0] + j as f64 * h)).abs() <= 1e-14 * scale);
    uniform.then_some(h)
}

#[derive(Debug, Default, Clone)]
pub(crate) struct PhaseScratch {
    re: Vec<f64>,
    im: Vec<f64>,
    rot_re: Vec<f64>,
    rot_im: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<f64>,
}

/// |Σ_k w_k exp(-i λ_k t)|² for every grid time, written into `out`.
/// Terms with zero weight are skipped.
pub(crate) fn survival_series_into(
    eigenvalues: &[f64],
    weights: &[f64],
    grid: &TimeGrid,
    scratch: &mut PhaseScratch,
    out: &mut [f64],
) {
    debug_assert_eq!(out.len(), grid.len());
    scratch.weights.clear();
    scratch.values.clear();
    for (&l, &w) in eigenvalues.iter().zip(weights) {
        if w != 0.0 {
            scratch.weights.push(w);
            scratch.values.push(l);
        }
    }
    let PhaseScratch {
        re,
        im,
        rot_re,
        rot_im,
        weights: ws,
        values: ls,
    } = scratch;
    match grid.step {
        None => {
            for (o, &t) in out.iter_mut().zip(&grid.times) {
                let a: Complex64 = ls
                    .iter()
                    .zip(ws.iter())
                    .map(|(&l, &w)| Complex64::from_polar(w, -l * t))
                    .sum();
                *o = a.norm_sqr();
            }
        }
        Some(h) => match ls.len() {
            1 => uniform_series::<1>(ls, ws, grid, h, out),
            2 => uniform_series::<2>(ls, ws, grid, h, out),
            3 => uniform_series::<3>(ls, ws, grid, h, out),
            4 => uniform_series::<4>(ls, ws, grid, h, out),
            5 => uniform_series::<5>(ls, ws, grid, h, out),
            6 => uniform_series::<6>(ls, ws, grid, h, out),
            7 => uniform_series::<7>(ls, ws, grid, h, out),
            8 => uniform_series::<8>(ls, ws, grid, h, out),
            _ => uniform_series_dyn(ls, ws, grid, h, re, im, rot_re, rot_im, out),
        },
    }
}

/// Uniform-grid kernel with the term count known at compile time so the
/// phases stay in registers.
fn uniform_series<const K: usize>(ls: &[f64], ws: &[f64], grid: &TimeGrid, h: f64, out: &mut [f64]) {
    let mut rot_re = [0.0; K];
    let mut rot_im = [0.0; K];
    for i in 0..K {
        let (s, c) = (-ls[i] * h).sin_cos();
        rot_re[i] = c;
        rot_im[i] = s;
    }
    let mut re = [0.0; K];
    let mut im = [0.0; K];
    for (seg, chunk) in out.chunks_mut(RESEED_STRIDE).enumerate() {
        let t0 = grid.times[seg * RESEED_STRIDE];
        for i in 0..K {
            let (s, c) = (-ls[i] * t0).sin_cos();
            re[i] = ws[i] * c;
            im[i] = ws[i] * s;
        }
        for o in chunk.iter_mut() {
            let sr: f64 = re.iter().sum();
            let si: f64 = im.iter().sum();
            *o = sr * sr + si * si;
            for i in 0..K {
                let (pr, pi) = (re[i], im[i]);
                re[i] = pr * rot_re[i] - pi * rot_im[i];
                im[i] = pr * rot_im[i] + pi * rot_re[i];
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn uniform_series_dyn(
    ls: &[f64],
    ws: &[f64],
    grid: &TimeGrid,
    h: f64,
    re: &mut Vec<f64>,
    im: &mut Vec<f64>,
    rot_re: &mut Vec<f64>,
    rot_im: &mut Vec<f64>,
    out: &mut [f64],
) {
    let k = ls.len();
    rot_re.clear();
    rot_im.clear();
    for &l in ls {
        let (s, c) = (-l * h).sin_cos();
        rot_re.push(c);
        rot_im.push(s);
    }
    re.resize(k, 0.0);
    im.resize(k, 0.0);
    for (seg, chunk) in out.chunks_mut(RESEED_STRIDE).enumerate() {
        let t0 = grid.times[seg * RESEED_STRIDE];
        for i in 0..k {
            let (s, c) = (-ls[i] * t0).sin_cos();
            re[i] = ws[i] * c;
            im[i] = ws[i] * s;
        }
        for o in chunk.iter_mut() {
            let sr: f64 = re.iter().sum();
            let si: f64 = im.iter().sum();
            *o = sr * sr + si * si;
            for i in 0..k {
                let (pr, pi) = (re[i], im[i]);
                re[i] = pr * rot_re[i] - pi * rot_im[i];
                im[i] = pr * rot_im[i] + pi * rot_re[i];
            }
        }
    }
}
