//! Physical parameters and the invariant Hamiltonian blocks.
//!
//! The Hamiltonian of a three-level system (levels 1, 2, 3) coupled to `D`
//! harmonic modes conserves the excitation count, so it splits into blocks
//! labelled by an occupation tuple `n = (n_1, …, n_D)`. Each block spans
//!
//! ```text
//! |1,n>, |2,n>, |3,n+1_1>, …, |3,n+1_D>
//! ```
//!
//! and has the arrowhead-plus-corner form
//!
//! ```text
//! [ w1+d   W      0                 …  0               ]
//! [ W      w2+d   g_1 sqrt(n_1+1)   …  g_D sqrt(n_D+1) ]
//! [ 0      c.c.   w3+d+f_1          …  0               ]
//! [ …                                                  ]
//! [ 0      c.c.   0                 …  w3+d+f_D        ]
//! ```
//!
//! with `d = Σ n_k f_k`. Units are ħ = k_B = 1 throughout.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Level energies and the direct 1↔2 coupling.
///
/// `coupling` is stored nonnegative; a negative sign is a global phase choice
/// on `|1>` and is rejected rather than silently absorbed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    pub omega1: f64,
    pub omega2: f64,
    pub omega3: f64,
    pub coupling: f64,
}

impl SystemParams {
    pub fn new(omega1: f64, omega2: f64, omega3: f64, coupling: f64) -> Result<Self> {
        for (name, v) in [
            ("omega1", omega1),
            ("omega2", omega2),
            ("omega3", omega3),
            ("Omega", coupling),
        ] {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        if coupling < 0.0 {
            return Err(invalid("Omega", "must be >= 0 (absorb the sign into |1>)"));
        }
        Ok(Self {
            omega1,
            omega2,
            omega3,
            coupling,
        })
    }

    /// ω₂ − ω₃, the energy unit the temperature ratios refer to.
    pub fn omega23(&self) -> f64 {
        self.omega2 - self.omega3
    }

    /// ω₁ − ω₃, the Bohr frequency the bath band must avoid.
    pub fn bohr13(&self) -> f64 {
        self.omega1 - self.omega3
    }
}

/// One bath oscillator: frequency and (possibly complex) coupling to the 2↔3 transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub freq: f64,
    pub g: Complex64,
}

impl Mode {
    pub fn new(freq: f64, g: Complex64) -> Self {
        Self { freq, g }
    }

    pub fn real(freq: f64, g: f64) -> Self {
        Self {
            freq,
            g: Complex64::new(g, 0.0),
        }
    }
}

/// An ordered, nonempty set of bath modes with strictly positive frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct BathSpec {
    modes: Vec<Mode>,
}

impl BathSpec {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(invalid("bath", "needs at least one mode"));
        }
        for m in &modes {
            if !(m.freq.is_finite() && m.freq > 0.0) {
                return Err(invalid("freq", format!("must be finite and > 0, got {}", m.freq)));
            }
            if !(m.g.re.is_finite() && m.g.im.is_finite()) {
                return Err(invalid("g", "must be finite"));
            }
        }
        Ok(Self { modes })
    }

    /// `D` identical modes.
    pub fn uniform(d: usize, freq: f64, g: f64) -> Result<Self> {
        Self::new(vec![Mode::real(freq, g); d])
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    /// Number of modes `D`.
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Boson numbers `(n_1, …, n_D)` labelling an invariant block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationTuple(pub Vec<u32>);

impl OccupationTuple {
    pub fn zeros(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<u32>> for OccupationTuple {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}

/// A `(D+2)`-dimensional invariant block, stored densely (row-major).
///
/// Only [`build_block`] constructs these, so the matrix is Hermitian by
/// construction and has the star sparsity around basis index 1.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianBlock {
    dim: usize,
    matrix: Vec<Complex64>,
    delta: f64,
    tuple: OccupationTuple,
    coupling_norm: f64,
    // diagonal without δ, kept so spectra can be computed relative to δ
    local_diag: Vec<f64>,
}

impl HermitianBlock {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim + col]
    }

    /// Row-major entries.
    pub fn matrix(&self) -> &[Complex64] {
        &self.matrix
    }

    /// δ = Σ_k n_k ω̃_k.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn tuple(&self) -> &OccupationTuple {
        &self.tuple
    }

    /// c = (Σ_k |g_k|² (n_k+1))^{1/2}.
    pub fn coupling_norm(&self) -> f64 {
        self.coupling_norm
    }

    /// Basis labels in matrix order.
    pub fn basis_labels(&self) -> Vec<String> {
        let mut labels = vec!["|1,n>".to_string(), "|2,n>".to_string()];
        labels.extend((1..=self.dim - 2).map(|k| format!("|3,n+1_{k}>")));
        labels
    }

    /// Frobenius norm of the matrix.
    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// The hub-and-spoke view of the block: diagonal, and the couplings from
    /// basis index 1 to every other index (index 0 first, then the modes).
    pub(crate) fn star(&self) -> Star<'_> {
        Star {
            offset: self.delta,
            local_diag: &self.local_diag,
            hub_row: &self.matrix[self.dim..2 * self.dim],
        }
    }
}

/// Hub-and-spoke view of a block: the diagonal is `offset + local_diag`,
/// and `hub_row` is row 1 (the only row with off-diagonal entries besides
/// the entry (0,1)).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Star<'a> {
    pub offset: f64,
    pub local_diag: &'a [f64],
    pub hub_row: &'a [Complex64],
}

/// Assemble the invariant block for `tuple`.
pub fn build_block(
    sys: &SystemParams,
    bath: &BathSpec,
    tuple: &OccupationTuple,
) -> Result<HermitianBlock> {
    if tuple.len() != bath.len() {
        return Err(Error::DimensionMismatch {
            expected: bath.len(),
            got: tuple.len(),
        });
    }
    let d = bath.len();
    let dim = d + 2;
    let delta: f64 = bath
        .modes()
        .iter()
        .zip(tuple.as_slice())
        .map(|(m, &n)| f64::from(n) * m.freq)
        .sum();
    let mut matrix = vec![Complex64::new(0.0, 0.0); dim * dim];
    let at = |r: usize, c: usize| r * dim + c;
    matrix[at(0, 0)] = (sys.omega1 + delta).into();
    matrix[at(1, 1)] = (sys.omega2 + delta).into();
    matrix[at(0, 1)] = sys.coupling.into();
    matrix[at(1, 0)] = sys.coupling.into();
    let mut local_diag = vec![sys.omega1, sys.omega2];
    let mut norm_sq = 0.0;
    for (k, (mode, &n)) in bath.modes().iter().zip(tuple.as_slice()).enumerate() {
        let amp = (f64::from(n) + 1.0).sqrt();
        let c_k = mode.g * amp;
        matrix[at(k + 2, k + 2)] = (sys.omega3 + delta + mode.freq).into();
        local_diag.push(sys.omega3 + mode.freq);
        matrix[at(1, k + 2)] = c_k;
        matrix[at(k + 2, 1)] = c_k.conj();
        norm_sq += mode.g.norm_sqr() * (f64::from(n) + 1.0);
    }
    Ok(HermitianBlock {
        dim,
        matrix,
        delta,
        tuple: tuple.clone(),
        coupling_norm: norm_sq.sqrt(),
        local_diag,
    })
}

/// Which side of the 1↔3 Bohr frequency the whole bath band sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BandSide {
    /// ω̃_k > ω₁ − ω₃ for every mode.
    Above,
    /// ω̃_k < ω₁ − ω₃ for every mode.
    Below,
}

/// Band statistics consumed by the threshold bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandStats {
    /// min_k |ω₃ − ω₁ + ω̃_k|
    pub m: f64,
    /// max_k |ω₃ − ω₁ + ω̃_k|
    pub big_m: f64,
    pub g_min: f64,
    /// Geometric mean of |g_k|.
    pub g_av: f64,
    pub omega_max: f64,
    /// Geometric mean of ω̃_k.
    pub omega_av: f64,
    pub side: BandSide,
    /// Index of the mode attaining `g_min`.
    g_min_mode: usize,
}

impl BandStats {
    /// Thresholds divide by the couplings; reject a decoupled mode.
    pub fn ensure_coupled(&self) -> Result<()> {
        if self.g_min > 0.0 {
            Ok(())
        } else {
            Err(Error::ZeroCoupling {
                mode: self.g_min_mode,
            })
        }
    }
}

pub fn band_stats(sys: &SystemParams, bath: &BathSpec) -> Result<BandStats> {
    let bohr = sys.bohr13();
    let above = bath.modes().iter().all(|m| m.freq > bohr);
    let below = bath.modes().iter().all(|m| m.freq < bohr);
    let side = match (above, below) {
        (true, _) => BandSide::Above,
        (_, true) => BandSide::Below,
        _ => return Err(Error::BandStraddle { bohr }),
    };
    let offsets = bath.modes().iter().map(|m| (m.freq - bohr).abs());
    let m = offsets.clone().fold(f64::INFINITY, f64::min);
    let big_m = offsets.fold(0.0, f64::max);
    if m <= 0.0 {
        return Err(Error::BandStraddle { bohr });
    }
    let d = bath.len() as f64;
    let (g_min_mode, g_min) = bath
        .modes()
        .iter()
        .map(|m| m.g.norm())
        .enumerate()
        .fold((0, f64::INFINITY), |best, (i, g)| if g < best.1 { (i, g) } else { best });
    let g_av = (bath.modes().iter().map(|m| m.g.norm().ln()).sum::<f64>() / d).exp();
    let omega_max = bath.modes().iter().map(|m| m.freq).fold(0.0, f64::max);
    let omega_av = (bath.modes().iter().map(|m| m.freq.ln()).sum::<f64>() / d).exp();
    Ok(BandStats {
        m,
        big_m,
        g_min,
        g_av,
        omega_max,
        omega_av,
        side,
        g_min_mode,
    })
}
