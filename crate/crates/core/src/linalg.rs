//! Cyclic Jacobi eigensolver for small dense real symmetric matrices.

/// Eigenpairs of a real symmetric matrix, eigenvalues ascending.
///
/// `vectors` is column-major: component `i` of eigenvector `k` sits at
/// `vectors[k * n + i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<f64>,
}

/// Scratch buffers reused across many small decompositions.
#[derive(Debug, Default, Clone)]
pub struct JacobiWorkspace {
    a: Vec<f64>,
    v: Vec<f64>,
    order: Vec<usize>,
}

/// Diagonalise the row-major symmetric `n×n` matrix `a`.
///
/// Sweeps until the off-diagonal Frobenius norm is at most `tol` times the
/// Frobenius norm of the input. Returns `None` if `max_sweeps` is exhausted.
pub fn jacobi_eigen(a: &[f64], n: usize, tol: f64, max_sweeps: usize) -> Option<SymmetricEigen> {
    let mut ws = JacobiWorkspace::default();
    let mut values = vec![0.0; n];
    let mut vectors = vec![0.0; n * n];
    ws.solve(a, n, tol, max_sweeps, &mut values, &mut vectors)
        .then_some(SymmetricEigen { values, vectors })
}

impl JacobiWorkspace {
    /// Allocation-free variant of [`jacobi_eigen`]; writes into `values`
    /// (length `n`) and `vectors` (length `n*n`, column-major).
    pub fn solve(
        &mut self,
        input: &[f64],
        n: usize,
        tol: f64,
        max_sweeps: usize,
        values: &mut [f64],
        vectors: &mut [f64],
    ) -> bool {
        debug_assert_eq!(input.len(), n * n);
        self.a.clear();
        self.a.extend_from_slice(input);
        self.v.clear();
        self.v.resize(n * n, 0.0);
        for i in 0..n {
            self.v[i * n + i] = 1.0;
        }
        let a = &mut self.a;
        let v = &mut self.v;

        let norm: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let target = tol * norm;
        let off_norm = |a: &[f64]| -> f64 {
            let mut s = 0.0;
            for p in 0..n {
                for q in p + 1..n {
                    s += 2.0 * a[p * n + q] * a[p * n + q];
                }
            }
            s.sqrt()
        };

        let mut converged = off_norm(a) <= target;
        let mut sweep = 0;
        while !converged && sweep < max_sweeps {
            for p in 0..n {
                for q in p + 1..n {
                    let apq = a[p * n + q];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = a[p * n + p];
                    let aqq = a[q * n + q];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta.abs() > 1e150 {
                        0.5 / theta
                    } else {
                        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    a[p * n + p] = app - t * apq;
                    a[q * n + q] = aqq + t * apq;
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    for r in 0..n {
                        if r != p && r != q {
                            let arp = a[r * n + p];
                            let arq = a[r * n + q];
                            let np = c * arp - s * arq;
                            let nq = s * arp + c * arq;
                            a[r * n + p] = np;
                            a[p * n + r] = np;
                            a[r * n + q] = nq;
                            a[q * n + r] = nq;
                        }
                    }
                    // columns of v are eigenvectors; v is stored row-major here
                    for r in 0..n {
                        let vrp = v[r * n + p];
                        let vrq = v[r * n + q];
                        v[r * n + p] = c * vrp - s * vrq;
                        v[r * n + q] = s * vrp + c * vrq;
                    }
                }
            }
            sweep += 1;
            converged = off_norm(a) <= target;
        }
        if !converged {
            return false;
        }

        self.order.clear();
        self.order.extend(0..n);
        self.order
            .sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
        for (k, &src) in self.order.iter().enumerate() {
            values[k] = a[src * n + src];
            for i in 0..n {
                vectors[k * n + i] = v[i * n + src];
            }
        }
        true
    }
}
