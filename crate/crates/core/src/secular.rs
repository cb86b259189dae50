//! Secular-equation solver for the star-shaped blocks.
//!
//! With hub index 1 (diagonal `α`) and spokes `j` (diagonal `d_j`, coupling
//! magnitude `z_j`), the eigenvalues are the roots of
//!
//! ```text
//! g(λ) = λ − α − Σ_j z_j² / (λ − d_j)
//! ```
//!
//! which is increasing between consecutive poles `d_j`, so every gap holds
//! exactly one root (plus one below and one above all poles). The eigenvector
//! is `v_hub = 1`, `v_j = z_j / (λ − d_j)`, giving the weight of basis index 0
//! in closed form. Each root is found by bracketed Newton iteration in the
//! offset `σ = λ − origin` from the nearer pole, which keeps `λ − d_origin`
//! accurate to a few ulps.
//!
//! The poles only depend on the system and bath, so the solver is set up once
//! and reused across blocks; the previous roots serve as starting points.
//! Poles that coincide or spokes with zero coupling are not handled here.

const MAX_ITER: usize = 100;

#[derive(Debug, Clone)]
pub(crate) struct SecularSolver {
    hub: f64,
    /// Spoke diagonals, ascending.
    poles: Vec<f64>,
    /// Basis index of each sorted pole.
    basis: Vec<usize>,
    /// Position of basis index 0 among `poles`.
    first: usize,
    z2: Vec<f64>,
    warm: Vec<f64>,
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl SecularSolver {
    /// `local_diag` holds the full diagonal (hub at index 1). Returns `None`
    /// when two poles are too close for the root brackets to be reliable.
    pub fn new(local_diag: &[f64]) -> Option<Self> {
        let n = local_diag.len();
        let mut basis: Vec<usize> = (0..n).filter(|&j| j != 1).collect();
        basis.sort_by(|&a, &b| local_diag[a].total_cmp(&local_diag[b]));
        let poles: Vec<f64> = basis.iter().map(|&j| local_diag[j]).collect();
        let scale = local_diag.iter().fold(1.0f64, |a, d| a.max(d.abs()));
        if poles.windows(2).any(|w| w[1] - w[0] <= 1e-9 * scale) {
            return None;
        }
        let first = basis.iter().position(|&j| j == 0)?;
        Some(Self {
            hub: local_diag[1],
            z2: vec![0.0; poles.len()],
            warm: Vec::new(),
            values: vec![0.0; n],
            weights: vec![0.0; n],
            poles,
            basis,
            first,
        })
    }

    /// Solve for spoke magnitudes `spokes[j]` (basis index `j`, `spokes[1]`
    /// ignored). On success `values` (ascending) and `weights` are filled.
    pub fn solve(&mut self, spokes: &[f64]) -> bool {
        let p = self.poles.len();
        let mut zsum = 0.0;
        let mut zmax = 0.0f64;
        for (slot, &j) in self.z2.iter_mut().zip(&self.basis) {
            let z = spokes[j];
            if z == 0.0 || !z.is_finite() {
                return false;
            }
            *slot = z * z;
            zsum += z;
            zmax = zmax.max(z);
        }
        let scale = 1.0 + zsum + self.hub.abs() + self.poles[p - 1].abs().max(self.poles[0].abs());
        let margin = 1e-6 * scale;
        let have_warm = self.warm.len() == p + 1;
        let mut total = 0.0;
        for i in 0..=p {
            // bracket (lo, hi) in σ around origin pole `o`
            let (o, lo, hi) = if i == 0 {
                let lower = (self.hub - zsum).min(self.poles[0] - zmax) - margin;
                (0, lower - self.poles[0], 0.0)
            } else if i == p {
                let upper = (self.hub + zsum).max(self.poles[p - 1] + zmax) + margin;
                (p - 1, 0.0, upper - self.poles[p - 1])
            } else {
                let (a, b) = (self.poles[i - 1], self.poles[i]);
                let mid = 0.5 * (b - a);
                if self.g(i - 1, mid).0 > 0.0 {
                    (i - 1, 0.0, mid)
                } else {
                    (i, -mid, 0.0)
                }
            };
            let start = if have_warm {
                self.warm[i] - self.poles[o]
            } else {
                f64::NAN
            };
            let Some(sigma) = self.root(o, lo, hi, start) else {
                return false;
            };
            let lambda = self.poles[o] + sigma;
            self.values[i] = lambda;
            // weight of basis index 0: (z_0 / (λ − d_0))² / ‖v‖²
            let mut norm = 1.0;
            let mut diff0 = 0.0;
            for (j, (&d, &z2)) in self.poles.iter().zip(&self.z2).enumerate() {
                let diff = if j == o { sigma } else { (self.poles[o] - d) + sigma };
                norm += z2 / (diff * diff);
                if j == self.first {
                    diff0 = diff;
                }
            }
            let w = self.z2[self.first] / (diff0 * diff0) / norm;
            if !w.is_finite() {
                return false;
            }
            self.weights[i] = w;
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return false;
        }
        self.warm.clear();
        self.warm.extend_from_slice(&self.values);
        true
    }

    /// (g, g') at offset σ from pole `o`.
    #[inline]
    fn g(&self, o: usize, sigma: f64) -> (f64, f64) {
        let origin = self.poles[o];
        let mut val = (origin - self.hub) + sigma;
        let mut der = 1.0;
        for (j, (&d, &z2)) in self.poles.iter().zip(&self.z2).enumerate() {
            let diff = if j == o { sigma } else { (origin - d) + sigma };
            let inv = 1.0 / diff;
            val -= z2 * inv;
            der += z2 * inv * inv;
        }
        (val, der)
    }

    fn root(&self, o: usize, mut lo: f64, mut hi: f64, start: f64) -> Option<f64> {
        let mut sigma = if start > lo && start < hi && start != 0.0 {
            start
        } else {
            0.5 * (lo + hi)
        };
        for _ in 0..MAX_ITER {
            let (val, der) = self.g(o, sigma);
            if val == 0.0 {
                return Some(sigma);
            }
            if val < 0.0 {
                lo = sigma;
            } else {
                hi = sigma;
            }
            let mut next = sigma - val / der;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let step = (next - sigma).abs();
            sigma = next;
            if step <= 2.0 * f64::EPSILON * sigma.abs() || hi - lo <= 2.0 * f64::EPSILON * sigma.abs() {
                return Some(sigma);
            }
        }
        None
    }
}
