//! Mode layouts and mixed-radix basis indexing.
//!
//! Basis states are ordered mixed-radix with the last listed mode varying
//! fastest. The vacuum is always basis index 0.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single bosonic mode of the ±k axion/photon system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    AxionPlus,
    AxionMinus,
    PhotonPlus,
    PhotonMinus,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::AxionPlus, Mode::AxionMinus, Mode::PhotonPlus, Mode::PhotonMinus];

    /// The mode with the same species at opposite momentum.
    pub fn conjugate(self) -> Mode {
        match self {
            Mode::AxionPlus => Mode::AxionMinus,
            Mode::AxionMinus => Mode::AxionPlus,
            Mode::PhotonPlus => Mode::PhotonMinus,
            Mode::PhotonMinus => Mode::PhotonPlus,
        }
    }

    pub fn is_axion(self) -> bool {
        matches!(self, Mode::AxionPlus | Mode::AxionMinus)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::AxionPlus => "axion+",
            Mode::AxionMinus => "axion-",
            Mode::PhotonPlus => "photon+",
            Mode::PhotonMinus => "photon-",
        };
        f.write_str(s)
    }
}

/// Ordered set of modes with per-mode truncation levels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LayoutRepr", into = "LayoutRepr")]
pub struct ModeLayout {
    modes: Vec<Mode>,
    n_max: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct LayoutRepr {
    modes: Vec<Mode>,
    n_max: Vec<usize>,
}

impl TryFrom<LayoutRepr> for ModeLayout {
    type Error = Error;

    fn try_from(r: LayoutRepr) -> Result<Self> {
        ModeLayout::new(r.modes.into_iter().zip(r.n_max).collect())
    }
}

impl From<ModeLayout> for LayoutRepr {
    fn from(l: ModeLayout) -> Self {
        LayoutRepr {
            modes: l.modes,
            n_max: l.n_max,
        }
    }
}

impl ModeLayout {
    /// Builds a layout from `(mode, n_max)` pairs in basis order.
    pub fn new(spec: Vec<(Mode, usize)>) -> Result<Self> {
        if spec.is_empty() {
            return Err(Error::InvalidLayout("layout has no modes".into()));
        }
        let mut modes = Vec::with_capacity(spec.len());
        let mut n_max = Vec::with_capacity(spec.len());
        for (mode, n) in spec {
            if modes.contains(&mode) {
                return Err(Error::InvalidLayout(format!("mode {mode} listed twice")));
            }
            if n == 0 {
                return Err(Error::InvalidLayout(format!("mode {mode} has n_max = 0")));
            }
            modes.push(mode);
            n_max.push(n);
        }

        let mut strides = vec![0; modes.len()];
        let mut dim: usize = 1;
        for i in (0..modes.len()).rev() {
            strides[i] = dim;
            dim = dim
                .checked_mul(n_max[i] + 1)
                .ok_or_else(|| Error::InvalidLayout("dimension overflows usize".into()))?;
        }
        Ok(ModeLayout {
            modes,
            n_max,
            strides,
            dim,
        })
    }

    /// Full ±k layout `(axion+, axion-, photon+, photon-)` with a common cutoff.
    pub fn four_mode(n_max: usize) -> Result<Self> {
        Self::new(Mode::ALL.iter().map(|&m| (m, n_max)).collect())
    }

    /// Full ±k layout with separate cutoffs for the `+k` modes and the
    /// conjugate `-k` modes that only the pair terms populate.
    pub fn four_mode_asymmetric(axion: usize, photon: usize, conjugate: usize) -> Result<Self> {
        Self::new(vec![
            (Mode::AxionPlus, axion),
            (Mode::AxionMinus, conjugate),
            (Mode::PhotonPlus, photon),
            (Mode::PhotonMinus, conjugate),
        ])
    }

    /// Reduced `(axion+, photon+)` layout.
    pub fn reduced(axion: usize, photon: usize) -> Result<Self> {
        Self::new(vec![(Mode::AxionPlus, axion), (Mode::PhotonPlus, photon)])
    }

    /// A one-mode layout, used to build single-mode states before embedding.
    pub fn single(mode: Mode, n_max: usize) -> Result<Self> {
        Self::new(vec![(mode, n_max)])
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn truncations(&self) -> &[usize] {
        &self.n_max
    }

    pub fn num_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn contains(&self, mode: Mode) -> bool {
        self.modes.contains(&mode)
    }

    /// Position of `mode` in the basis ordering.
    pub fn position(&self, mode: Mode) -> Result<usize> {
        self.modes
            .iter()
            .position(|&m| m == mode)
            .ok_or(Error::UnknownMode(mode))
    }

    pub fn n_max(&self, mode: Mode) -> Result<usize> {
        Ok(self.n_max[self.position(mode)?])
    }

    pub fn stride(&self, mode: Mode) -> Result<usize> {
        Ok(self.strides[self.position(mode)?])
    }

    pub fn min_n_max(&self) -> usize {
        *self.n_max.iter().min().expect("layout is non-empty")
    }

    pub fn is_reduced(&self) -> bool {
        self.modes == [Mode::AxionPlus, Mode::PhotonPlus]
    }

    pub fn is_four_mode(&self) -> bool {
        self.modes.len() == 4 && Mode::ALL.iter().all(|m| self.modes.contains(m))
    }

    /// Mixed-radix index of the given per-mode occupations.
    pub fn basis_index(&self, occupations: &[usize]) -> Result<usize> {
        if occupations.len() != self.modes.len() {
            return Err(Error::LengthMismatch {
                expected: self.modes.len(),
                actual: occupations.len(),
            });
        }
        let mut idx = 0;
        for (i, &n) in occupations.iter().enumerate() {
            if n > self.n_max[i] {
                return Err(Error::OccupationOutOfRange {
                    mode: self.modes[i],
                    occupation: n,
                    n_max: self.n_max[i],
                });
            }
            idx += n * self.strides[i];
        }
        Ok(idx)
    }

    /// Index of a basis state given as `(mode, occupation)` pairs; unlisted
    /// modes are in vacuum.
    pub fn index_of(&self, occupied: &[(Mode, usize)]) -> Result<usize> {
        let mut occ = vec![0; self.modes.len()];
        for &(mode, n) in occupied {
            occ[self.position(mode)?] = n;
        }
        self.basis_index(&occ)
    }

    /// Inverse of [`basis_index`](Self::basis_index).
    pub fn occupations(&self, index: usize) -> Vec<usize> {
        debug_assert!(index < self.dim);
        self.strides
            .iter()
            .zip(&self.n_max)
            .map(|(&s, &n)| (index / s) % (n + 1))
            .collect()
    }

    /// Occupation of the mode at `position` in basis state `index`.
    #[inline]
    pub(crate) fn occupation_at(&self, index: usize, position: usize) -> usize {
        (index / self.strides[position]) % (self.n_max[position] + 1)
    }

    pub fn describe(&self) -> String {
        self.modes
            .iter()
            .zip(&self.n_max)
            .map(|(m, n)| format!("{m}:{n}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}
