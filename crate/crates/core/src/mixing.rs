//! Physical parameters, classical conversion formulas and the mixing
//! generator `Q`.
//!
//! Modes are box-normalized with Kronecker commutators; any volume factor is
//! absorbed into the per-mode coupling `λ = gB/2`. Propagation length and
//! evolution time are identified (`t = L`).

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{evolve_exact_with, EvolutionConfig};
use crate::layout::{Mode, ModeLayout};
use crate::operator::{ladder_triplets, Ladder, LinearOperator};
use crate::state::StateVector;
use crate::units;

/// Below this `|Δt|` the sinc window switches to its Taylor series.
pub const SINC_SERIES_THRESHOLD: f64 = 1e-6;

/// Laboratory inputs in conventional units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabInputs {
    /// Axion mass, eV.
    pub m: f64,
    /// Photon energy (= wavenumber), eV.
    #[serde(rename = "E_gamma")]
    pub e_gamma: f64,
    /// Axion-photon coupling, GeV⁻¹.
    pub g: f64,
    /// Transverse magnetic field, tesla.
    #[serde(rename = "B_T")]
    pub b_t: f64,
    /// Propagation length, meters.
    #[serde(rename = "L")]
    pub l: f64,
}

impl LabInputs {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("E_gamma", self.e_gamma),
            ("g", self.g),
            ("B_T", self.b_t),
            ("L", self.l),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(self.m.is_finite() && self.m >= 0.0) {
            return Err(Error::param("m", format!("must be finite and >= 0, got {}", self.m)));
        }
        Ok(())
    }

    /// The dimensionless combination `g B_T L`.
    pub fn g_b_l(&self) -> f64 {
        units::inv_gev_to_inv_ev(self.g) * units::tesla_to_ev2(self.b_t) * units::meters_to_inv_ev(self.l)
    }

    /// The dimensionless oscillation phase `m² L / 2E`.
    pub fn mass_phase(&self) -> f64 {
        self.m * self.m * units::meters_to_inv_ev(self.l) / (2.0 * self.e_gamma)
    }
}

/// Mixing parameters in natural units with their derived quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingParams {
    /// Axion mass, eV.
    pub m: f64,
    /// Wavenumber, eV.
    pub k: f64,
    /// Coupling, eV⁻¹.
    pub g: f64,
    /// Transverse field, eV².
    pub b: f64,
    /// Evolution time (= length), eV⁻¹.
    pub t: f64,
    pub omega_phi: f64,
    pub omega_psi: f64,
    /// `ω_φ - ω_ψ`, computed without cancellation.
    pub delta_minus: f64,
    pub delta_plus: f64,
    pub u: f64,
    pub v: f64,
    /// `Δ_M = gB/2`, eV.
    pub delta_m: f64,
    /// `Δ_osc = sqrt((m²/2k)² + 4Δ_M²)`, eV.
    pub delta_osc: f64,
    /// Per-mode coupling in the generator; equals `Δ_M` unless overridden.
    pub lambda: f64,
}

impl MixingParams {
    pub fn new(m: f64, k: f64, g: f64, b: f64, t: f64) -> Result<Self> {
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::param("k", format!("must be > 0, got {k}")));
        }
        if !(m.is_finite() && m >= 0.0) {
            return Err(Error::param("m", format!("must be >= 0, got {m}")));
        }
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::param("t", format!("must be >= 0, got {t}")));
        }
        if !(g.is_finite() && b.is_finite()) {
            return Err(Error::param("g", "coupling and field must be finite"));
        }
        let omega_psi = k;
        let omega_phi = (k * k + m * m).sqrt();
        let delta_minus = m * m / (omega_phi + omega_psi);
        let (u, v) = factors_from_gap(omega_phi, omega_psi, delta_minus);
        let delta_m = 0.5 * g * b;
        let mass_term = m * m / (2.0 * k);
        Ok(MixingParams {
            m,
            k,
            g,
            b,
            t,
            omega_phi,
            omega_psi,
            delta_minus,
            delta_plus: omega_phi + omega_psi,
            u,
            v,
            delta_m,
            delta_osc: (mass_term * mass_term + 4.0 * delta_m * delta_m).sqrt(),
            lambda: delta_m,
        })
    }

    /// Same physics with the generator coupling replaced.
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_time(self, t: f64) -> Result<Self> {
        let lambda = self.lambda;
        let overridden = lambda != self.delta_m;
        let p = MixingParams::new(self.m, self.k, self.g, self.b, t)?;
        Ok(if overridden { p.with_lambda(lambda) } else { p })
    }

    pub fn windows(&self) -> (Complex64, Complex64) {
        (window(self.delta_minus, self.t), window(self.delta_plus, self.t))
    }

    pub fn coupling(&self) -> FactorizedCoupling {
        let (f, g) = self.windows();
        FactorizedCoupling {
            u: self.u,
            v: self.v,
            f,
            g,
            lambda: self.lambda,
        }
    }

    /// `λ U |f|`, the rotation angle of the degenerate two-mode problem.
    pub fn mixing_angle(&self) -> f64 {
        self.lambda * self.u * self.windows().0.norm()
    }

    /// Rescales `λ` so that `λ U |f|` equals `angle`.
    pub fn with_mixing_angle(self, angle: f64) -> Result<Self> {
        let scale = self.u * self.windows().0.norm();
        if !(angle.is_finite() && scale > 0.0) {
            return Err(Error::param("lambda", "mixing angle undefined for |f| = 0"));
        }
        Ok(self.with_lambda(angle / scale))
    }
}

/// Raw `(U, V, f, g, λ)` pack; need not be physically consistent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorizedCoupling {
    pub u: f64,
    pub v: f64,
    pub f: Complex64,
    pub g: Complex64,
    pub lambda: f64,
}

impl FactorizedCoupling {
    /// Leading-order conversion amplitude `λ U f*`.
    pub fn leading_amplitude(&self) -> Complex64 {
        self.f.conj() * (self.lambda * self.u)
    }

    pub fn has_pair_terms(&self) -> bool {
        self.lambda != 0.0 && self.v != 0.0 && self.g.norm() != 0.0
    }
}

pub fn to_natural_units(lab: &LabInputs) -> Result<MixingParams> {
    lab.validate()?;
    MixingParams::new(
        lab.m,
        lab.e_gamma,
        units::inv_gev_to_inv_ev(lab.g),
        units::tesla_to_ev2(lab.b_t),
        units::meters_to_inv_ev(lab.l),
    )
}

fn factors_from_gap(omega_phi: f64, omega_psi: f64, gap: f64) -> (f64, f64) {
    // sqrt(x) ± 1/sqrt(x) with x = ω_φ/ω_ψ, written over a common root
    let root = 2.0 * (omega_phi * omega_psi).sqrt();
    ((omega_phi + omega_psi) / root, gap / root)
}

/// `U = (sqrt(ω_φ/ω_ψ) + sqrt(ω_ψ/ω_φ))/2`, `V = (sqrt(ω_φ/ω_ψ) - sqrt(ω_ψ/ω_φ))/2`.
pub fn mixing_factors(omega_phi: f64, omega_psi: f64) -> Result<(f64, f64)> {
    if !(omega_phi > 0.0 && omega_psi > 0.0) {
        return Err(Error::param(
            "omega",
            format!("frequencies must be > 0, got ({omega_phi}, {omega_psi})"),
        ));
    }
    Ok(factors_from_gap(omega_phi, omega_psi, omega_phi - omega_psi))
}

/// `sin(Δt/2)/(Δ/2) · exp(-iΔt/2)`, i.e. `∫_0^t exp(-iΔs) ds`.
pub fn window(delta: f64, t: f64) -> Complex64 {
    let x = 0.5 * delta * t;
    let envelope = if (delta * t).abs() < SINC_SERIES_THRESHOLD {
        let x2 = x * x;
        t * (1.0 - x2 / 6.0 + x2 * x2 / 120.0)
    } else {
        x.sin() / (0.5 * delta)
    };
    Complex64::from_polar(1.0, -x) * envelope
}

/// `(f, g)` at difference and sum frequencies.
pub fn window_functions(omega_phi: f64, omega_psi: f64, t: f64) -> (Complex64, Complex64) {
    (window(omega_phi - omega_psi, t), window(omega_phi + omega_psi, t))
}

fn sinc_sqr(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 45.0
    } else {
        (x.sin() / x).powi(2)
    }
}

/// `(Δ_M L)² sin²(Δ_osc L/2) / (Δ_osc L/2)²`.
pub fn classical_probability(p: &MixingParams) -> f64 {
    (p.delta_m * p.t).powi(2) * sinc_sqr(0.5 * p.delta_osc * p.t)
}

/// Weak-mixing form `(gBL/2)² sin²(m²L/4E) / (m²L/4E)²`.
pub fn classical_probability_small_mixing(p: &MixingParams) -> f64 {
    let x = p.m * p.m * p.t / (4.0 * p.k);
    (p.delta_m * p.t).powi(2) * sinc_sqr(x)
}

/// The generator `Q` for physical parameters.
pub fn build_q(layout: &Arc<ModeLayout>, params: &MixingParams, drop_pair_terms: bool) -> Result<LinearOperator> {
    build_q_factorized(layout, &params.coupling(), drop_pair_terms)
}

/// `Q = -iλ Σ_s [U f b_s†a_s - U f* a_s†b_s + V g b_s a_{-s} - V g* a_s†b_{-s}†]`
/// over every `s` whose modes the layout holds.
pub fn build_q_factorized(
    layout: &Arc<ModeLayout>,
    fac: &FactorizedCoupling,
    drop_pair_terms: bool,
) -> Result<LinearOperator> {
    use Ladder::{Lower, Raise};
    use Mode::*;

    let sectors: Vec<(Mode, Mode, Mode, Mode)> = [
        (AxionPlus, PhotonPlus, AxionMinus, PhotonMinus),
        (AxionMinus, PhotonMinus, AxionPlus, PhotonPlus),
    ]
    .into_iter()
    .filter(|(a, b, _, _)| layout.contains(*a) && layout.contains(*b))
    .collect();
    if sectors.is_empty() {
        return Err(Error::InvalidLayout(format!(
            "no (axion, photon) pair at equal momentum in {}",
            layout.describe()
        )));
    }
    let with_pairs = fac.has_pair_terms() && !drop_pair_terms;
    if with_pairs && !layout.is_four_mode() {
        return Err(Error::PairTermsUnrepresentable(layout.describe()));
    }

    let pref = Complex64::new(0.0, -fac.lambda);
    let uf = pref * fac.f * fac.u;
    let ufc = -pref * fac.f.conj() * fac.u;
    let vg = pref * fac.g * fac.v;
    let vgc = -pref * fac.g.conj() * fac.v;

    let mut triplets = Vec::new();
    for &(a, b, a_conj, b_conj) in &sectors {
        triplets.extend(ladder_triplets(layout, &[Raise(b), Lower(a)], uf)?);
        triplets.extend(ladder_triplets(layout, &[Raise(a), Lower(b)], ufc)?);
        if with_pairs {
            triplets.extend(ladder_triplets(layout, &[Lower(b), Lower(a_conj)], vg)?);
            triplets.extend(ladder_triplets(layout, &[Raise(a), Raise(b_conj)], vgc)?);
        }
    }
    LinearOperator::from_triplets(layout.clone(), triplets)?.into_hermitian()
}

/// How `exp(-i ∫H_I dt)` is applied to a state.
#[derive(Debug, Clone)]
pub enum Evolution {
    /// `exp(-iQ)` without time ordering.
    SingleExponential(LinearOperator),
    /// Left-ordered product of per-step exponentials, earliest step first.
    TimeOrdered(Vec<LinearOperator>),
}

impl Evolution {
    pub fn apply(&self, s: &StateVector, cfg: &EvolutionConfig) -> Result<StateVector> {
        match self {
            Evolution::SingleExponential(q) => evolve_exact_with(q, s, cfg),
            Evolution::TimeOrdered(steps) => steps
                .iter()
                .try_fold(s.clone(), |cur, q| evolve_exact_with(q, &cur, cfg)),
        }
    }
}

pub fn single_exponential(q: LinearOperator) -> Evolution {
    Evolution::SingleExponential(q)
}

/// Stepped evolution: step `j` exponentiates the exact integral of `H_I`
/// over `[t_j, t_{j+1}]`, so one step reproduces [`single_exponential`].
pub fn time_ordered_unitary(
    params: &MixingParams,
    layout: &Arc<ModeLayout>,
    steps: usize,
    drop_pair_terms: bool,
) -> Result<Evolution> {
    if steps == 0 {
        return Err(Error::param("steps", "must be >= 1"));
    }
    let dt = params.t / steps as f64;
    let ops = (0..steps)
        .map(|j| {
            let t0 = j as f64 * dt;
            let increment = |delta: f64| Complex64::from_polar(1.0, -delta * t0) * window(delta, dt);
            let fac = FactorizedCoupling {
                u: params.u,
                v: params.v,
                f: increment(params.delta_minus),
                g: increment(params.delta_plus),
                lambda: params.lambda,
            };
            build_q_factorized(layout, &fac, drop_pair_terms)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Evolution::TimeOrdered(ops))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn benchmark_inputs() -> LabInputs {
        LabInputs {
            m: 1e-6,
            e_gamma: 1e-6,
            g: 1e-10,
            b_t: 10.0,
            l: 1000.0,
        }
    }

    #[test]
    fn benchmark_gbl_is_order_1e_minus_6() {
        let gbl = benchmark_inputs().g_b_l();
        assert!(gbl > 0.5e-6 && gbl < 2e-6, "gBL = {gbl}");
    }

    #[test]
    fn benchmark_mass_phase_is_order_1e4() {
        let phase = benchmark_inputs().mass_phase();
        // direct evaluation gives ~2.5e3; the quoted 1e4 is an order of magnitude
        assert!((phase / 2533.87 - 1.0).abs() < 1e-3, "phase = {phase}");
        assert!(phase > 1e3 && phase < 1e5);
    }

    #[test]
    fn massless_axion_is_degenerate() {
        let p = to_natural_units(&LabInputs {
            m: 0.0,
            ..benchmark_inputs()
        })
        .unwrap();
        assert_eq!(p.omega_phi, p.omega_psi);
        assert_eq!((p.u, p.v), (1.0, 0.0));
    }

    #[test]
    fn non_positive_inputs_are_rejected() {
        let mut lab = benchmark_inputs();
        lab.b_t = 0.0;
        assert!(to_natural_units(&lab).is_err());
        lab = benchmark_inputs();
        lab.m = -1.0;
        assert!(to_natural_units(&lab).is_err());
    }

    #[test]
    fn mixing_factors_examples() {
        assert_eq!(mixing_factors(3.0, 3.0).unwrap(), (1.0, 0.0));
        let (u, v) = mixing_factors(2.0, 1.0).unwrap();
        assert!((u - 1.060_660_171_779_821_2).abs() < 1e-15);
        assert!((v - 0.353_553_390_593_273_8).abs() < 1e-15);
        assert!(mixing_factors(0.0, 1.0).is_err());
    }

    #[test]
    fn window_limits() {
        let (f, g) = window_functions(2.0, 1.0, 0.0);
        assert_eq!((f.norm(), g.norm()), (0.0, 0.0));
        let (f, _) = window_functions(1.5, 1.5, 2.5);
        assert_eq!(f, Complex64::new(2.5, 0.0));
        let (f, _) = window_functions(1.0 + 2.0 * PI / 3.0, 1.0, 3.0);
        assert!(f.norm() < 1e-14);
    }

    #[test]
    fn window_series_branch_is_continuous() {
        let t = 7.0;
        let delta = 0.99e-6 / t;
        let x = 0.5 * delta * t;
        let closed = Complex64::from_polar(1.0, -x) * (x.sin() / (0.5 * delta));
        assert!((window(delta, t) - closed).norm() / t < 1e-12);
    }

    #[test]
    fn window_is_integral_of_phase() {
        // midpoint quadrature of ∫_0^t exp(-iΔs) ds
        let (delta, t, n) = (0.83, 4.1, 20_000);
        let h = t / n as f64;
        let quad: Complex64 = (0..n)
            .map(|j| Complex64::from_polar(h, -delta * (j as f64 + 0.5) * h))
            .sum();
        assert!((quad - window(delta, t)).norm() < 1e-7);
    }

    #[test]
    fn classical_probability_limits() {
        let p = MixingParams::new(0.0, 1.0, 1e-3, 1.0, 0.0).unwrap();
        assert_eq!(classical_probability(&p), 0.0);

        // resonant: sinc -> 1 up to the Δ_M² correction inside Δ_osc
        let p = MixingParams::new(0.0, 1.0, 2e-4, 1.0, 10.0).unwrap();
        let dm_l = p.delta_m * p.t;
        assert!((classical_probability(&p) / dm_l.powi(2) - 1.0).abs() < 1e-6);

        // node at Δ_osc L = 2π
        let p = MixingParams::new(1e-3, 1.0, 1e-12, 1.0, 1.0).unwrap();
        let p = p.with_time(2.0 * PI / p.delta_osc).unwrap();
        assert!(classical_probability(&p) < 1e-20);
    }

    #[test]
    fn q_vanishes_without_coupling() {
        let l = Arc::new(ModeLayout::four_mode(2).unwrap());
        let p = MixingParams::new(0.5, 1.0, 0.0, 1.0, 1.0).unwrap();
        let q = build_q(&l, &p, false).unwrap();
        assert_eq!(q.nnz(), 0);
    }

    #[test]
    fn reduced_layout_rejects_pair_terms() {
        let l = Arc::new(ModeLayout::reduced(2, 2).unwrap());
        let p = MixingParams::new(0.5, 1.0, 0.1, 1.0, 1.0).unwrap();
        assert!(matches!(
            build_q(&l, &p, false).unwrap_err(),
            Error::PairTermsUnrepresentable(_)
        ));
        assert!(build_q(&l, &p, true).is_ok());
    }

    #[test]
    fn q_is_hermitian_by_construction() {
        let l = Arc::new(ModeLayout::four_mode(3).unwrap());
        let p = MixingParams::new(0.7, 1.0, 0.3, 1.1, 2.3).unwrap();
        let q = build_q(&l, &p, false).unwrap();
        assert!(q.hermitian_residual() <= 1e-14);
    }

    #[test]
    fn physical_and_factorized_agree() {
        let l = Arc::new(ModeLayout::four_mode(2).unwrap());
        let p = MixingParams::new(0.7, 1.0, 0.3, 1.1, 2.3).unwrap();
        let a = build_q(&l, &p, false).unwrap();
        let b = build_q_factorized(&l, &p.coupling(), false).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dropped_pairs_stay_on_plus_block() {
        let l = Arc::new(ModeLayout::four_mode(2).unwrap());
        let fac = FactorizedCoupling {
            u: 1.0,
            v: 0.0,
            f: Complex64::new(0.4, 0.2),
            g: Complex64::new(0.0, 0.0),
            lambda: 1.0,
        };
        let q = build_q_factorized(&l, &fac, true).unwrap();
        let minus = [
            l.position(Mode::AxionMinus).unwrap(),
            l.position(Mode::PhotonMinus).unwrap(),
        ];
        // the plus-sector block never touches the minus modes from vacuum
        let vac = StateVector::fock(l.clone(), &[(Mode::PhotonPlus, 1)]).unwrap();
        let out = q.apply(&vac).unwrap();
        for (i, a) in out.amplitudes().iter().enumerate() {
            if a.norm() > 0.0 {
                let occ = l.occupations(i);
                assert_eq!(occ[minus[0]] + occ[minus[1]], 0);
            }
        }
    }

    #[test]
    fn single_time_step_matches_single_exponential() {
        let l = Arc::new(ModeLayout::four_mode(3).unwrap());
        let p = MixingParams::new(0.6, 1.0, 0.2, 1.0, 1.7).unwrap();
        let s = StateVector::fock(l.clone(), &[(Mode::PhotonPlus, 1)]).unwrap();
        let cfg = EvolutionConfig::default();
        let a = single_exponential(build_q(&l, &p, false).unwrap())
            .apply(&s, &cfg)
            .unwrap();
        let b = time_ordered_unitary(&p, &l, 1, false).unwrap().apply(&s, &cfg).unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-13);
        assert!(time_ordered_unitary(&p, &l, 0, false).is_err());
    }
}
