//! Unitary evolution `exp(-iQ)` for Hermitian `Q`.
//!
//! Small problems use a dense Hermitian eigendecomposition; larger ones use a
//! Lanczos (Krylov-subspace) action with adaptive sub-stepping.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use crate::state::{check_same_layout, StateVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionConfig {
    /// Largest dimension handled by dense eigendecomposition.
    pub dense_limit: usize,
    /// Largest dimension accepted at all.
    pub max_dimension: usize,
    /// Krylov subspace size per sub-step.
    pub krylov_dim: usize,
    /// Local error target per unit time for the Krylov route.
    pub tolerance: f64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            dense_limit: 600,
            max_dimension: 4_000_000,
            krylov_dim: 30,
            tolerance: 1e-14,
        }
    }
}

/// `exp(-iQ) s` with the default configuration.
pub fn evolve_exact(q: &LinearOperator, s: &StateVector) -> Result<StateVector> {
    evolve_exact_with(q, s, &EvolutionConfig::default())
}

/// `exp(-iQ) s`; `Q` must carry the Hermitian flag.
pub fn evolve_exact_with(q: &LinearOperator, s: &StateVector, cfg: &EvolutionConfig) -> Result<StateVector> {
    check_same_layout(q.layout(), s.layout())?;
    if !q.is_hermitian() {
        return Err(Error::NotHermitian {
            residual: q.hermitian_residual(),
        });
    }
    let dim = q.dimension();
    if dim > cfg.max_dimension {
        return Err(Error::DimensionTooLarge {
            dimension: dim,
            budget: cfg.max_dimension,
        });
    }
    if q.nnz() == 0 || s.norm_sqr() == 0.0 {
        return Ok(s.clone());
    }
    let out = if dim <= cfg.dense_limit {
        HermitianExp::new(q).apply_amplitudes(s.amplitudes(), 1.0)
    } else {
        krylov_expm(q, s.amplitudes(), 1.0, cfg)?
    };
    StateVector::new(s.layout().clone(), out)
}

/// Dense eigendecomposition `Q = W diag(e) W†`, reusable for several times.
#[derive(Debug, Clone)]
pub struct HermitianExp {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl HermitianExp {
    pub fn new(q: &LinearOperator) -> Self {
        let dim = q.dimension();
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for (r, c, v) in q.triplets() {
            m[(r, c)] = v;
        }
        Self::from_dense(m)
    }

    pub fn from_dense(m: DMatrix<Complex64>) -> Self {
        let eig = SymmetricEigen::new(m);
        HermitianExp {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        }
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.eigenvalues.as_slice()
    }

    /// `exp(-i t Q) x`.
    pub fn apply_amplitudes(&self, x: &[Complex64], t: f64) -> Vec<Complex64> {
        let w = &self.eigenvectors;
        let x = DVector::from_column_slice(x);
        let mut y = w.ad_mul(&x);
        for (yk, &e) in y.iter_mut().zip(self.eigenvalues.iter()) {
            *yk *= Complex64::from_polar(1.0, -e * t);
        }
        (w * y).as_slice().to_vec()
    }

    /// Dense row-major `exp(-i t Q)`.
    pub fn unitary(&self, t: f64) -> Vec<Complex64> {
        let w = &self.eigenvectors;
        let phases = DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -e * t)),
        );
        let mut scaled = w.clone();
        for (mut col, p) in scaled.column_iter_mut().zip(phases.iter()) {
            col *= *p;
        }
        let u = scaled * w.adjoint();
        let n = u.nrows();
        let mut out = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                out.push(u[(r, c)]);
            }
        }
        out
    }
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Lanczos basis of one sub-step.
struct Lanczos {
    basis: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Residual coupling out of the subspace; zero on happy breakdown.
    beta_next: f64,
}

fn lanczos(q: &LinearOperator, v0: &[Complex64], m: usize, scale: f64) -> Lanczos {
    let n0 = norm(v0);
    let mut basis = vec![v0.iter().map(|x| x / n0).collect::<Vec<_>>()];
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut w = vec![ZERO; v0.len()];
    let breakdown = 1e-13 * scale.max(f64::MIN_POSITIVE);
    loop {
        let j = basis.len() - 1;
        q.apply_into(&basis[j], &mut w);
        let a = dot(&basis[j], &w).re;
        alpha.push(a);
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for v in &basis {
                let h = dot(v, &w);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= h * vi;
                }
            }
        }
        let b = norm(&w);
        if b <= breakdown {
            return Lanczos {
                basis,
                alpha,
                beta,
                beta_next: 0.0,
            };
        }
        if basis.len() == m {
            return Lanczos {
                basis,
                alpha,
                beta,
                beta_next: b,
            };
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
}

/// `exp(-i tau T) e1` for the tridiagonal Lanczos matrix.
fn tridiagonal_exp_e1(alpha: &[f64], beta: &[f64], tau: f64) -> Vec<Complex64> {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (0..k)
        .map(|r| {
            (0..k)
                .map(|j| {
                    let w = eig.eigenvectors[(r, j)] * eig.eigenvectors[(0, j)];
                    Complex64::from_polar(w, -eig.eigenvalues[j] * tau)
                })
                .sum()
        })
        .collect()
}

/// Krylov action of `exp(-i t Q)` on `x`.
pub fn krylov_expm(q: &LinearOperator, x: &[Complex64], t: f64, cfg: &EvolutionConfig) -> Result<Vec<Complex64>> {
    let m = cfg.krylov_dim.max(4).min(q.dimension());
    let qnorm = q.norm_inf();
    let mut state = x.to_vec();
    let mut done = 0.0;
    let mut tau = t.min(0.5 * m as f64 / qnorm.max(f64::MIN_POSITIVE));
    let mut rejections = 0usize;
    while done < t {
        tau = tau.min(t - done);
        let n_state = norm(&state);
        let lz = lanczos(q, &state, m, qnorm);
        loop {
            let small = tridiagonal_exp_e1(&lz.alpha, &lz.beta, tau);
            // a-posteriori estimate: coupling out of the subspace times the
            // weight that reached the last Lanczos vector, relative to the state
            let last = small.last().map(|c| c.norm()).unwrap_or(0.0);
            let err = lz.beta_next * last * tau;
            let budget = cfg.tolerance * tau / t;
            // below this the last coefficient is rounding noise and shrinking
            // the step cannot help
            let at_roundoff = last <= 64.0 * f64::EPSILON;
            if err <= budget || at_roundoff || lz.beta_next == 0.0 {
                let mut next = vec![ZERO; state.len()];
                for (v, c) in lz.basis.iter().zip(&small) {
                    let c = c * n_state;
                    for (ni, vi) in next.iter_mut().zip(v) {
                        *ni += c * vi;
                    }
                }
                state = next;
                done += tau;
                if err < 0.1 * budget || at_roundoff {
                    tau *= 1.5;
                }
                break;
            }
            tau *= 0.5;
            rejections += 1;
            if rejections > 10_000 || tau < t * 1e-14 {
                return Err(Error::KrylovFailure(format!(
                    "step size collapsed to {tau:.3e} (error estimate {err:.3e})"
                )));
            }
        }
    }
    Ok(state)
}
