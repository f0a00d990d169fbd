use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::layout::{Mode, ModeLayout};

/// Complex amplitudes over the truncated product Fock basis of a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: Arc<ModeLayout>,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(layout: Arc<ModeLayout>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.dimension() {
            return Err(Error::LengthMismatch {
                expected: layout.dimension(),
                actual: amplitudes.len(),
            });
        }
        Ok(StateVector { layout, amplitudes })
    }

    pub fn zero(layout: Arc<ModeLayout>) -> Self {
        let amplitudes = vec![Complex64::new(0.0, 0.0); layout.dimension()];
        StateVector { layout, amplitudes }
    }

    pub fn vacuum(layout: Arc<ModeLayout>) -> Self {
        let mut s = Self::zero(layout);
        s.amplitudes[0] = Complex64::new(1.0, 0.0);
        s
    }

    /// Fock basis state with the listed occupations; other modes in vacuum.
    pub fn fock(layout: Arc<ModeLayout>, occupied: &[(Mode, usize)]) -> Result<Self> {
        let idx = layout.index_of(occupied)?;
        let mut s = Self::zero(layout);
        s.amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn layout(&self) -> &Arc<ModeLayout> {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn dimension(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `|<s|s> - 1| <= 1e-12`.
    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= 1e-12
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::param("state", "cannot normalize the zero vector"));
        }
        for a in &mut self.amplitudes {
            *a /= n;
        }
        Ok(self)
    }

    pub fn scale(mut self, c: Complex64) -> Self {
        for a in &mut self.amplitudes {
            *a *= c;
        }
        self
    }

    /// `self + c * other`.
    pub fn add_scaled(mut self, c: Complex64, other: &StateVector) -> Result<Self> {
        check_same_layout(&self.layout, &other.layout)?;
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += c * b;
        }
        Ok(self)
    }

    /// Largest absolute amplitude difference; layouts must match.
    pub fn max_abs_diff(&self, other: &StateVector) -> Result<f64> {
        check_same_layout(&self.layout, &other.layout)?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn amplitude_of(&self, occupied: &[(Mode, usize)]) -> Result<Complex64> {
        Ok(self.amplitudes[self.layout.index_of(occupied)?])
    }

    /// Occupation-number distribution of one mode (marginal probabilities).
    pub fn occupation_distribution(&self, mode: Mode) -> Result<Vec<f64>> {
        let pos = self.layout.position(mode)?;
        let mut dist = vec![0.0; self.layout.truncations()[pos] + 1];
        for (i, a) in self.amplitudes.iter().enumerate() {
            dist[self.layout.occupation_at(i, pos)] += a.norm_sqr();
        }
        Ok(dist)
    }

    /// Mean occupation `<n>` of a mode, normalized by `<s|s>`.
    pub fn mean_occupation(&self, mode: Mode) -> Result<f64> {
        let dist = self.occupation_distribution(mode)?;
        let total: f64 = dist.iter().sum();
        Ok(dist.iter().enumerate().map(|(n, p)| n as f64 * p).sum::<f64>() / total)
    }

    /// Probability weight in basis states where any mode sits above
    /// `n_max - margin`, as a fraction of `<s|s>`.
    ///
    /// The guard band must not cover the vacuum level: `1 <= margin <= min n_max`.
    pub fn truncation_leakage(&self, margin: usize) -> Result<f64> {
        let layout = &self.layout;
        if margin == 0 || margin > layout.min_n_max() {
            return Err(Error::param(
                "margin",
                format!("must lie in [1, {}], got {margin}", layout.min_n_max()),
            ));
        }
        let total = self.norm_sqr();
        if total == 0.0 {
            return Ok(0.0);
        }
        let limits: Vec<usize> = layout.truncations().iter().map(|n| n - margin).collect();
        let leaked: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| (0..limits.len()).any(|p| layout.occupation_at(*i, p) > limits[p]))
            .map(|(_, a)| a.norm_sqr())
            .sum();
        Ok(leaked / total)
    }

    /// Tensor product of single-mode states over a layout listing exactly the
    /// given modes. Modes of `layout` that are not given start in vacuum.
    pub fn product(layout: Arc<ModeLayout>, factors: &[(Mode, &[Complex64])]) -> Result<Self> {
        let mut per_mode: Vec<Vec<Complex64>> = layout
            .truncations()
            .iter()
            .map(|&n| {
                let mut v = vec![Complex64::new(0.0, 0.0); n + 1];
                v[0] = Complex64::new(1.0, 0.0);
                v
            })
            .collect();
        for &(mode, amps) in factors {
            let pos = layout.position(mode)?;
            let want = layout.truncations()[pos] + 1;
            if amps.len() != want {
                return Err(Error::LengthMismatch {
                    expected: want,
                    actual: amps.len(),
                });
            }
            per_mode[pos] = amps.to_vec();
        }
        let dim = layout.dimension();
        let mut amplitudes = Vec::with_capacity(dim);
        for i in 0..dim {
            let mut a = Complex64::new(1.0, 0.0);
            for (p, v) in per_mode.iter().enumerate() {
                a *= v[layout.occupation_at(i, p)];
                if a == Complex64::new(0.0, 0.0) {
                    break;
                }
            }
            amplitudes.push(a);
        }
        Ok(StateVector { layout, amplitudes })
    }
}

pub(crate) fn check_same_layout(a: &Arc<ModeLayout>, b: &Arc<ModeLayout>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::LayoutMismatch)
    }
}

/// `<s1|s2>`, conjugate-linear in the first argument.
pub fn inner_product(s1: &StateVector, s2: &StateVector) -> Result<Complex64> {
    check_same_layout(&s1.layout, &s2.layout)?;
    Ok(s1
        .amplitudes
        .iter()
        .zip(&s2.amplitudes)
        .map(|(a, b)| a.conj() * b)
        .sum())
}
