//! Coherent, squeezed and photon-added photon states.
//!
//! The squeezed coherent state is `S(ζ) D(β) |0>` in that order; the reverse
//! ordering is a different physical state and is only available through
//! [`StateOrdering::DisplaceThenSqueeze`].

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{krylov_expm, EvolutionConfig, HermitianExp};
use crate::layout::{Mode, ModeLayout};
use crate::operator::{ladder_triplets, Ladder, LinearOperator};
use crate::state::StateVector;

/// Coherent amplitude `β = |β| e^{iδ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentAmplitude {
    pub beta: Complex64,
}

impl CoherentAmplitude {
    pub const ZERO: CoherentAmplitude = CoherentAmplitude {
        beta: Complex64::new(0.0, 0.0),
    };

    pub fn new(beta: Complex64) -> Self {
        CoherentAmplitude { beta }
    }

    pub fn from_polar(abs: f64, phase: f64) -> Result<Self> {
        if !(abs.is_finite() && abs >= 0.0) || !phase.is_finite() {
            return Err(Error::param("beta", format!("need |beta| >= 0, got {abs}")));
        }
        Ok(CoherentAmplitude {
            beta: Complex64::from_polar(abs, phase),
        })
    }

    pub fn abs(&self) -> f64 {
        self.beta.norm()
    }

    /// Phase `δ ∈ (-π, π]`.
    pub fn phase(&self) -> f64 {
        let d = self.beta.arg();
        if d <= -PI {
            PI
        } else {
            d
        }
    }
}

/// Squeeze parameter `ζ = r e^{iφ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezeParam {
    pub r: f64,
    pub varphi: f64,
}

impl SqueezeParam {
    pub const NONE: SqueezeParam = SqueezeParam { r: 0.0, varphi: 0.0 };

    pub fn new(r: f64, varphi: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) || !varphi.is_finite() {
            return Err(Error::param("r", format!("squeeze magnitude must be >= 0, got {r}")));
        }
        Ok(SqueezeParam { r, varphi })
    }

    pub fn zeta(&self) -> Complex64 {
        Complex64::from_polar(self.r, self.varphi)
    }
}

/// `b†^N` insertion and whether the result is renormalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PhotonAddition {
    pub n: usize,
    pub normalize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateOrdering {
    /// `S(ζ) D(β) |0>`.
    #[default]
    SqueezeThenDisplace,
    /// `D(β) S(ζ) |0>`.
    DisplaceThenSqueeze,
}

/// Guard band used to certify a truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationGuard {
    pub margin: usize,
    pub threshold: f64,
}

impl Default for TruncationGuard {
    fn default() -> Self {
        TruncationGuard {
            margin: 2,
            threshold: 1e-10,
        }
    }
}

/// Photon-mode cutoff `⌈|β|² e^{2r}⌉ + N + 10⌈|β| e^r⌉ + 10`.
pub fn suggested_photon_truncation(beta_abs: f64, r: f64, added: usize) -> usize {
    let spread = beta_abs * r.exp();
    (spread * spread).ceil() as usize + added + 10 * spread.ceil() as usize + 10
}

/// `i(β b† - β* b)`, so that `exp(-iH) = D(β)`.
pub fn displacement_generator(layout: &Arc<ModeLayout>, mode: Mode, beta: Complex64) -> Result<LinearOperator> {
    let i = Complex64::new(0.0, 1.0);
    let mut t = ladder_triplets(layout, &[Ladder::Raise(mode)], i * beta)?;
    t.extend(ladder_triplets(layout, &[Ladder::Lower(mode)], -i * beta.conj())?);
    LinearOperator::from_triplets(layout.clone(), t)?.into_hermitian()
}

/// `i(ζ b†²/2 - ζ* b²/2)`, so that `exp(-iH) = S(ζ)`.
pub fn squeeze_generator(layout: &Arc<ModeLayout>, mode: Mode, zeta: Complex64) -> Result<LinearOperator> {
    let i = Complex64::new(0.0, 0.5);
    let mut t = ladder_triplets(layout, &[Ladder::Raise(mode), Ladder::Raise(mode)], i * zeta)?;
    t.extend(ladder_triplets(
        layout,
        &[Ladder::Lower(mode), Ladder::Lower(mode)],
        -i * zeta.conj(),
    )?);
    LinearOperator::from_triplets(layout.clone(), t)?.into_hermitian()
}

fn poisson_tail(mean: f64, above: usize) -> f64 {
    // P(n > above) for Poisson(mean), summed from the bottom for stability
    if mean == 0.0 {
        return 0.0;
    }
    let mut p = (-mean).exp();
    let mut below = p;
    for n in 1..=above {
        p *= mean / n as f64;
        below += p;
    }
    (1.0 - below).max(0.0)
}

fn squeezed_vacuum_tail(r: f64, above: usize) -> f64 {
    // P(2n) = tanh(r)^{2n} (2n)! / (2^n n!)² / cosh r
    if r == 0.0 {
        return 0.0;
    }
    let t2 = r.tanh().powi(2);
    let mut p = 1.0 / r.cosh();
    let mut below = 0.0;
    let mut n = 0usize;
    while 2 * n <= above {
        below += p;
        n += 1;
        p *= t2 * (2 * n - 1) as f64 / (2 * n) as f64;
    }
    (1.0 - below).max(0.0)
}

fn check_predicted(
    layout: &ModeLayout,
    mode: Mode,
    guard: &TruncationGuard,
    leakage: impl Fn(usize) -> f64,
    suggested: usize,
) -> Result<()> {
    let n_max = layout.n_max(mode)?;
    if guard.margin > n_max {
        return Err(Error::param("margin", "guard band wider than the mode"));
    }
    let leak = leakage(n_max - guard.margin);
    if leak > guard.threshold {
        return Err(Error::Truncation {
            mode,
            leakage: leak,
            threshold: guard.threshold,
            suggested_n_max: suggested.max(n_max + 1),
        });
    }
    Ok(())
}

fn single_mode_unitary(layout: &Arc<ModeLayout>, mode: Mode, generator: LinearOperator) -> Result<LinearOperator> {
    let unitary = HermitianExp::new(&generator).unitary(1.0);
    LinearOperator::embed_single_mode(layout.clone(), mode, &unitary, 0.0)
}

/// `D(β) = exp(β b† - β* b)` on `mode`, identity elsewhere.
pub fn displacement_op(
    layout: &Arc<ModeLayout>,
    mode: Mode,
    beta: CoherentAmplitude,
    guard: &TruncationGuard,
) -> Result<LinearOperator> {
    let mean = beta.abs().powi(2);
    check_predicted(
        layout,
        mode,
        guard,
        |above| poisson_tail(mean, above),
        suggested_photon_truncation(beta.abs(), 0.0, 0),
    )?;
    let single = Arc::new(ModeLayout::single(mode, layout.n_max(mode)?)?);
    let gen = displacement_generator(&single, mode, beta.beta)?;
    single_mode_unitary(layout, mode, gen)
}

/// `S(ζ) = exp(-ζ* b²/2 + ζ b†²/2)` on `mode`, identity elsewhere.
pub fn squeeze_op(
    layout: &Arc<ModeLayout>,
    mode: Mode,
    zeta: SqueezeParam,
    guard: &TruncationGuard,
) -> Result<LinearOperator> {
    let n_max = layout.n_max(mode)?;
    check_predicted(
        layout,
        mode,
        guard,
        |above| squeezed_vacuum_tail(zeta.r, above),
        (n_max * 3).div_ceil(2),
    )?;
    let single = Arc::new(ModeLayout::single(mode, n_max)?);
    let gen = squeeze_generator(&single, mode, zeta.zeta())?;
    single_mode_unitary(layout, mode, gen)
}

/// Single-mode amplitudes of the squeezed coherent state.
pub fn squeezed_coherent_amplitudes(
    n_max: usize,
    zeta: SqueezeParam,
    beta: CoherentAmplitude,
    ordering: StateOrdering,
) -> Result<Vec<Complex64>> {
    let mode = Mode::PhotonPlus;
    let single = Arc::new(ModeLayout::single(mode, n_max)?);
    let mut v = vec![Complex64::new(0.0, 0.0); n_max + 1];
    v[0] = Complex64::new(1.0, 0.0);
    let cfg = EvolutionConfig {
        krylov_dim: 40,
        ..Default::default()
    };
    let displace = |v: Vec<Complex64>| -> Result<Vec<Complex64>> {
        if beta.abs() == 0.0 {
            return Ok(v);
        }
        krylov_expm(&displacement_generator(&single, mode, beta.beta)?, &v, 1.0, &cfg)
    };
    let squeeze = |v: Vec<Complex64>| -> Result<Vec<Complex64>> {
        if zeta.r == 0.0 {
            return Ok(v);
        }
        krylov_expm(&squeeze_generator(&single, mode, zeta.zeta())?, &v, 1.0, &cfg)
    };
    match ordering {
        StateOrdering::SqueezeThenDisplace => squeeze(displace(v)?),
        StateOrdering::DisplaceThenSqueeze => displace(squeeze(v)?),
    }
}

fn single_mode_leakage(amps: &[Complex64], margin: usize) -> f64 {
    let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let start = amps.len() - margin;
    amps[start..].iter().map(|a| a.norm_sqr()).sum::<f64>() / total
}

/// `S(ζ) D(β) |0>` on `mode`; all other modes in vacuum.
pub fn squeezed_coherent(
    layout: &Arc<ModeLayout>,
    mode: Mode,
    zeta: SqueezeParam,
    beta: CoherentAmplitude,
    ordering: StateOrdering,
    guard: &TruncationGuard,
) -> Result<StateVector> {
    let n_max = layout.n_max(mode)?;
    if guard.margin > n_max {
        return Err(Error::param("margin", "guard band wider than the mode"));
    }
    let amps = squeezed_coherent_amplitudes(n_max, zeta, beta, ordering)?;
    let leak = single_mode_leakage(&amps, guard.margin);
    if leak > guard.threshold {
        let rule = suggested_photon_truncation(beta.abs(), zeta.r, 0);
        return Err(Error::Truncation {
            mode,
            leakage: leak,
            threshold: guard.threshold,
            suggested_n_max: rule.max((n_max * 3).div_ceil(2)),
        });
    }
    StateVector::product(layout.clone(), &[(mode, &amps)])
}

/// Coherent state `D(β)|0>` on `mode`.
pub fn coherent(
    layout: &Arc<ModeLayout>,
    mode: Mode,
    beta: CoherentAmplitude,
    guard: &TruncationGuard,
) -> Result<StateVector> {
    squeezed_coherent(
        layout,
        mode,
        SqueezeParam::NONE,
        beta,
        StateOrdering::SqueezeThenDisplace,
        guard,
    )
}

/// Result of a photon insertion.
#[derive(Debug, Clone)]
pub struct AddedPhotons {
    pub state: StateVector,
    /// `<s| b^N b†^N |s>`, the squared norm before any renormalization.
    pub norm_factor: f64,
    pub normalized: bool,
}

/// `b†^N s`, optionally renormalized.
pub fn add_photons(s: &StateVector, mode: Mode, add: PhotonAddition, guard: &TruncationGuard) -> Result<AddedPhotons> {
    let layout = s.layout();
    let n_max = layout.n_max(mode)?;
    if add.n > n_max {
        return Err(Error::Truncation {
            mode,
            leakage: 1.0,
            threshold: guard.threshold,
            suggested_n_max: n_max + add.n,
        });
    }
    if add.n > 0 {
        // weight that b†^N would push past the cutoff
        let dist = s.occupation_distribution(mode)?;
        let total: f64 = dist.iter().sum();
        let overflow: f64 = dist[n_max + 1 - add.n..].iter().sum::<f64>() / total.max(f64::MIN_POSITIVE);
        if overflow > guard.threshold {
            return Err(Error::Truncation {
                mode,
                leakage: overflow,
                threshold: guard.threshold,
                suggested_n_max: n_max + add.n + guard.margin,
            });
        }
    }
    let bd = LinearOperator::creation(layout.clone(), mode)?;
    let raised = bd.matrix_power_apply(add.n, s)?;
    let norm_factor = raised.norm_sqr();
    let state = if add.normalize { raised.normalized()? } else { raised };
    Ok(AddedPhotons {
        state,
        norm_factor,
        normalized: add.normalize,
    })
}

/// `|<α|β>|² = exp(-|α - β|²)`.
pub fn coherent_overlap(alpha: CoherentAmplitude, beta: CoherentAmplitude) -> f64 {
    (-(alpha.beta - beta.beta).norm_sqr()).exp()
}
