//! Sparse complex operators on a mode layout.
//!
//! Storage is CSR. Ladder operators use hard truncation: `b†|n_max> = 0`,
//! never a wrap-around.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::layout::{Mode, ModeLayout};
use crate::state::{check_same_layout, StateVector};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Absolute Hermiticity tolerance, scaled by the largest entry when that
/// exceeds one.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    layout: Arc<ModeLayout>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
    hermitian: bool,
}

impl LinearOperator {
    /// Builds an operator from `(row, col, value)` triplets. Duplicates are
    /// summed and exact zeros dropped.
    pub fn from_triplets(
        layout: Arc<ModeLayout>,
        triplets: impl IntoIterator<Item = (usize, usize, Complex64)>,
    ) -> Result<Self> {
        let dim = layout.dimension();
        let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); dim];
        for (r, c, v) in triplets {
            if r >= dim || c >= dim {
                return Err(Error::param(
                    "triplet",
                    format!("index ({r}, {c}) outside dimension {dim}"),
                ));
            }
            *rows[r].entry(c).or_insert(ZERO) += v;
        }
        Ok(Self::from_rows(layout, rows))
    }

    fn from_rows(layout: Arc<ModeLayout>, rows: Vec<BTreeMap<usize, Complex64>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                if v != ZERO {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        LinearOperator {
            layout,
            row_ptr,
            col_idx,
            values,
            hermitian: false,
        }
    }

    pub fn zero(layout: Arc<ModeLayout>) -> Self {
        let dim = layout.dimension();
        LinearOperator {
            layout,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            hermitian: true,
        }
    }

    pub fn identity(layout: Arc<ModeLayout>) -> Self {
        let dim = layout.dimension();
        LinearOperator {
            layout,
            row_ptr: (0..=dim).collect(),
            col_idx: (0..dim).collect(),
            values: vec![Complex64::new(1.0, 0.0); dim],
            hermitian: true,
        }
    }

    /// Annihilation operator `b` on `mode`: `<n-1|b|n> = sqrt(n)`.
    pub fn annihilation(layout: Arc<ModeLayout>, mode: Mode) -> Result<Self> {
        let pos = layout.position(mode)?;
        let stride = layout.stride(mode)?;
        let dim = layout.dimension();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::with_capacity(dim);
        let mut values = Vec::with_capacity(dim);
        let n_max = layout.truncations()[pos];
        row_ptr.push(0);
        for row in 0..dim {
            // row |n-1> receives from column |n>
            let n_row = layout.occupation_at(row, pos);
            if n_row < n_max {
                col_idx.push(row + stride);
                values.push(Complex64::new(((n_row + 1) as f64).sqrt(), 0.0));
            }
            row_ptr.push(col_idx.len());
        }
        Ok(LinearOperator {
            layout,
            row_ptr,
            col_idx,
            values,
            hermitian: false,
        })
    }

    /// Creation operator `b†` on `mode`, annihilating the top level.
    pub fn creation(layout: Arc<ModeLayout>, mode: Mode) -> Result<Self> {
        Ok(Self::annihilation(layout, mode)?.adjoint())
    }

    /// Number operator `b†b`, diagonal with entries `0..=n_max`.
    pub fn number(layout: Arc<ModeLayout>, mode: Mode) -> Result<Self> {
        let pos = layout.position(mode)?;
        let dim = layout.dimension();
        let triplets = (0..dim).filter_map(|i| {
            let n = layout.occupation_at(i, pos);
            (n > 0).then(|| (i, i, Complex64::new(n as f64, 0.0)))
        });
        let mut op = Self::from_triplets(layout.clone(), triplets)?;
        op.hermitian = true;
        Ok(op)
    }

    pub fn layout(&self) -> &Arc<ModeLayout> {
        &self.layout
    }

    pub fn dimension(&self) -> usize {
        self.layout.dimension()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Row `r` as `(column, value)` pairs.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dimension()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let span = self.row_ptr[row]..self.row_ptr[row + 1];
        match self.col_idx[span.clone()].binary_search(&col) {
            Ok(k) => self.values[span.start + k],
            Err(_) => ZERO,
        }
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max row sum of absolute values; an upper bound on the spectral norm
    /// of a Hermitian operator.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dimension())
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> Self {
        let dim = self.dimension();
        let mut counts = vec![0usize; dim + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..dim {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![ZERO; self.nnz()];
        for r in 0..dim {
            for (c, v) in self.row(r) {
                let slot = next[c];
                col_idx[slot] = r;
                values[slot] = v.conj();
                next[c] += 1;
            }
        }
        LinearOperator {
            layout: self.layout.clone(),
            row_ptr,
            col_idx,
            values,
            hermitian: self.hermitian,
        }
    }

    /// `max |M - M†|` over all entries.
    pub fn hermitian_residual(&self) -> f64 {
        let adj = self.adjoint();
        let mut worst: f64 = 0.0;
        for r in 0..self.dimension() {
            let mut a = self.row(r).peekable();
            let mut b = adj.row(r).peekable();
            loop {
                match (a.peek().copied(), b.peek().copied()) {
                    (None, None) => break,
                    (Some((ca, va)), Some((cb, vb))) if ca == cb => {
                        worst = worst.max((va - vb).norm());
                        a.next();
                        b.next();
                    }
                    (Some((ca, va)), Some((cb, _))) if ca < cb => {
                        worst = worst.max(va.norm());
                        a.next();
                    }
                    (Some((ca, va)), None) => {
                        let _ = ca;
                        worst = worst.max(va.norm());
                        a.next();
                    }
                    (_, Some((_, vb))) => {
                        worst = worst.max(vb.norm());
                        b.next();
                    }
                }
            }
        }
        worst
    }

    /// Sets the Hermitian flag after checking the residual numerically.
    pub fn into_hermitian(mut self) -> Result<Self> {
        let residual = self.hermitian_residual();
        if residual > HERMITIAN_TOLERANCE * self.max_abs_entry().max(1.0) {
            return Err(Error::NotHermitian { residual });
        }
        self.hermitian = true;
        Ok(self)
    }

    pub fn add(&self, other: &LinearOperator) -> Result<Self> {
        check_same_layout(&self.layout, &other.layout)?;
        let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); self.dimension()];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, v) in self.row(r).chain(other.row(r)) {
                *row.entry(c).or_insert(ZERO) += v;
            }
        }
        let mut out = Self::from_rows(self.layout.clone(), rows);
        out.hermitian = self.hermitian && other.hermitian;
        Ok(out)
    }

    pub fn sub(&self, other: &LinearOperator) -> Result<Self> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        if c == ZERO {
            return Self::zero(self.layout.clone());
        }
        let mut out = self.clone();
        for v in &mut out.values {
            *v *= c;
        }
        out.hermitian = self.hermitian && c.im == 0.0;
        out
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &LinearOperator) -> Result<Self> {
        check_same_layout(&self.layout, &other.layout)?;
        let dim = self.dimension();
        let mut rows: Vec<BTreeMap<usize, Complex64>> = vec![BTreeMap::new(); dim];
        for (r, row) in rows.iter_mut().enumerate() {
            for (k, a) in self.row(r) {
                for (c, b) in other.row(k) {
                    *row.entry(c).or_insert(ZERO) += a * b;
                }
            }
        }
        Ok(Self::from_rows(self.layout.clone(), rows))
    }

    /// Sparse matrix-vector product.
    pub fn apply(&self, s: &StateVector) -> Result<StateVector> {
        check_same_layout(&self.layout, s.layout())?;
        let mut out = vec![ZERO; self.dimension()];
        self.apply_into(s.amplitudes(), &mut out);
        StateVector::new(self.layout.clone(), out)
    }

    pub(crate) fn apply_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yr = acc;
        }
    }

    /// `self^n s` by repeated application.
    pub fn matrix_power_apply(&self, n: usize, s: &StateVector) -> Result<StateVector> {
        check_same_layout(&self.layout, s.layout())?;
        let mut cur = s.clone();
        for _ in 0..n {
            cur = self.apply(&cur)?;
        }
        Ok(cur)
    }

    /// Embeds a single-mode matrix (row-major, `(n_max+1)²` entries) acting on
    /// `mode` into the layout, identity on every other mode.
    pub fn embed_single_mode(
        layout: Arc<ModeLayout>,
        mode: Mode,
        matrix: &[Complex64],
        threshold: f64,
    ) -> Result<Self> {
        let pos = layout.position(mode)?;
        let stride = layout.stride(mode)?;
        let d = layout.truncations()[pos] + 1;
        if matrix.len() != d * d {
            return Err(Error::LengthMismatch {
                expected: d * d,
                actual: matrix.len(),
            });
        }
        let dim = layout.dimension();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in 0..dim {
            let n = layout.occupation_at(row, pos);
            let base = row - n * stride;
            for m in 0..d {
                let v = matrix[n * d + m];
                if v.norm() > threshold {
                    col_idx.push(base + m * stride);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(LinearOperator {
            layout,
            row_ptr,
            col_idx,
            values,
            hermitian: false,
        })
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let dim = self.dimension();
        let mut m = vec![ZERO; dim * dim];
        for (r, c, v) in self.triplets() {
            m[r * dim + c] = v;
        }
        m
    }
}

/// One factor of a ladder-operator product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Lower(Mode),
    Raise(Mode),
}

/// Triplets of `coeff · F_1 F_2 ... F_k`, the rightmost factor acting first.
/// Paths that would raise above a truncation are dropped.
pub(crate) fn ladder_triplets(
    layout: &ModeLayout,
    factors: &[Ladder],
    coeff: Complex64,
) -> Result<Vec<(usize, usize, Complex64)>> {
    let resolved: Vec<(bool, usize, usize, usize)> = factors
        .iter()
        .map(|f| {
            let (raise, mode) = match *f {
                Ladder::Raise(m) => (true, m),
                Ladder::Lower(m) => (false, m),
            };
            let pos = layout.position(mode)?;
            Ok((raise, pos, layout.stride(mode)?, layout.truncations()[pos]))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    'cols: for col in 0..layout.dimension() {
        let mut idx = col;
        let mut amp = 1.0f64;
        for &(raise, pos, stride, n_max) in resolved.iter().rev() {
            let n = layout.occupation_at(idx, pos);
            if raise {
                if n == n_max {
                    continue 'cols;
                }
                amp *= ((n + 1) as f64).sqrt();
                idx += stride;
            } else {
                if n == 0 {
                    continue 'cols;
                }
                amp *= (n as f64).sqrt();
                idx -= stride;
            }
        }
        out.push((idx, col, coeff * amp));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn one_mode(n: usize) -> Arc<ModeLayout> {
        Arc::new(ModeLayout::single(Mode::PhotonPlus, n).unwrap())
    }

    #[test]
    fn annihilation_on_vacuum_is_zero() {
        let l = one_mode(5);
        let b = LinearOperator::annihilation(l.clone(), Mode::PhotonPlus).unwrap();
        let out = b.apply(&StateVector::vacuum(l)).unwrap();
        assert_eq!(out.norm(), 0.0);
    }

    #[test]
    fn annihilation_lowers_one_quantum() {
        let l = one_mode(5);
        let b = LinearOperator::annihilation(l.clone(), Mode::PhotonPlus).unwrap();
        let one = StateVector::fock(l.clone(), &[(Mode::PhotonPlus, 1)]).unwrap();
        let out = b.apply(&one).unwrap();
        assert_eq!(out.amplitudes()[0], c(1.0));
        assert!((b.get(4, 5).re - 5f64.sqrt()).abs() < 1e-15);
        assert!((b.get(4, 5).re - 2.23607).abs() < 1e-5);
    }

    #[test]
    fn top_level_lowers_and_creation_truncates() {
        let l = one_mode(4);
        let b = LinearOperator::annihilation(l.clone(), Mode::PhotonPlus).unwrap();
        let bd = LinearOperator::creation(l.clone(), Mode::PhotonPlus).unwrap();
        let top = StateVector::fock(l.clone(), &[(Mode::PhotonPlus, 4)]).unwrap();
        assert!((b.apply(&top).unwrap().amplitudes()[3].re - 2.0).abs() < 1e-15);
        assert_eq!(bd.apply(&top).unwrap().norm(), 0.0);
        let vac = StateVector::vacuum(l);
        assert_eq!(bd.apply(&vac).unwrap().amplitudes()[1], c(1.0));
    }

    #[test]
    fn number_operator_is_b_dagger_b() {
        let l = Arc::new(ModeLayout::reduced(3, 4).unwrap());
        let b = LinearOperator::annihilation(l.clone(), Mode::PhotonPlus).unwrap();
        let n = LinearOperator::number(l.clone(), Mode::PhotonPlus).unwrap();
        let bdb = b.adjoint().compose(&b).unwrap();
        assert!(bdb.sub(&n).unwrap().max_abs_entry() < 1e-14);
        let three = StateVector::fock(l, &[(Mode::PhotonPlus, 3)]).unwrap();
        let out = n.apply(&three).unwrap();
        assert_eq!(out.max_abs_diff(&three.clone().scale(c(3.0))).unwrap(), 0.0);
    }

    #[test]
    fn commutator_is_identity_on_interior() {
        let l = Arc::new(ModeLayout::four_mode(3).unwrap());
        for mode in Mode::ALL {
            let b = LinearOperator::annihilation(l.clone(), mode).unwrap();
            let bd = b.adjoint();
            let comm = b.compose(&bd).unwrap().sub(&bd.compose(&b).unwrap()).unwrap();
            let pos = l.position(mode).unwrap();
            for i in 0..l.dimension() {
                if l.occupations(i)[pos] < 3 {
                    assert!((comm.get(i, i) - c(1.0)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn identity_and_zero_apply() {
        let l = Arc::new(ModeLayout::reduced(2, 2).unwrap());
        let s = StateVector::new(
            l.clone(),
            (0..9).map(|i| Complex64::new(i as f64, -(i as f64))).collect(),
        )
        .unwrap();
        let id = LinearOperator::identity(l.clone());
        assert_eq!(id.apply(&s).unwrap(), s);
        assert_eq!(LinearOperator::zero(l).apply(&s).unwrap().norm(), 0.0);
    }

    #[test]
    fn scale_doubles_entries() {
        let l = one_mode(3);
        let b = LinearOperator::annihilation(l, Mode::PhotonPlus).unwrap();
        let b2 = b.scale(c(2.0));
        for (r, col, v) in b.triplets() {
            assert_eq!(b2.get(r, col), v * 2.0);
        }
    }

    #[test]
    fn hermitian_adjoint_is_itself() {
        let l = one_mode(4);
        let n = LinearOperator::number(l, Mode::PhotonPlus).unwrap();
        assert!(n.is_hermitian());
        assert_eq!(n.adjoint(), n);
    }

    #[test]
    fn into_hermitian_rejects_ladder() {
        let l = one_mode(3);
        let b = LinearOperator::annihilation(l, Mode::PhotonPlus).unwrap();
        assert!(matches!(b.into_hermitian().unwrap_err(), Error::NotHermitian { .. }));
    }

    #[test]
    fn layout_mismatch_is_an_error() {
        let a = LinearOperator::identity(one_mode(3));
        let b = LinearOperator::identity(one_mode(4));
        assert_eq!(a.add(&b).unwrap_err(), Error::LayoutMismatch);
        assert_eq!(a.compose(&b).unwrap_err(), Error::LayoutMismatch);
        assert_eq!(
            a.apply(&StateVector::vacuum(one_mode(4))).unwrap_err(),
            Error::LayoutMismatch
        );
    }

    #[test]
    fn unknown_mode_is_an_error() {
        let l = Arc::new(ModeLayout::reduced(2, 2).unwrap());
        assert_eq!(
            LinearOperator::annihilation(l, Mode::PhotonMinus).unwrap_err(),
            Error::UnknownMode(Mode::PhotonMinus)
        );
    }

    #[test]
    fn power_apply_edge_orders() {
        let l = one_mode(6);
        let bd = LinearOperator::creation(l.clone(), Mode::PhotonPlus).unwrap();
        let vac = StateVector::vacuum(l);
        assert_eq!(bd.matrix_power_apply(0, &vac).unwrap(), vac);
        assert_eq!(bd.matrix_power_apply(1, &vac).unwrap(), bd.apply(&vac).unwrap());
    }

    #[test]
    fn embedded_single_mode_matches_native_ladder() {
        let l = Arc::new(ModeLayout::reduced(2, 3).unwrap());
        let mut m = vec![ZERO; 16];
        for n in 1..4 {
            m[(n - 1) * 4 + n] = c((n as f64).sqrt());
        }
        let emb = LinearOperator::embed_single_mode(l.clone(), Mode::PhotonPlus, &m, 0.0).unwrap();
        let b = LinearOperator::annihilation(l, Mode::PhotonPlus).unwrap();
        assert_eq!(emb.sub(&b).unwrap().max_abs_entry(), 0.0);
    }
}
