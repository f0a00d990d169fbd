//! Conversion and survival probabilities for each initial/final state pairing,
//! exact and perturbative, with closed-form comparison values.
//!
//! Every probability is `|<out| U |in>|²` with `U = exp(-iQ)` (or its
//! time-ordered variant). Axion and photon refer to the `+` modes; the `-`
//! modes only appear when pair terms are kept.

use std::f64::consts::LN_10;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{evolve_exact_with, EvolutionConfig};
use crate::layout::{Mode, ModeLayout};
use crate::mixing::{build_q, time_ordered_unitary, MixingParams};
use crate::oracle::series_unchecked;
use crate::state::{inner_product, StateVector};
use crate::states::{
    add_photons, squeezed_coherent_amplitudes, suggested_photon_truncation, CoherentAmplitude, PhotonAddition,
    SqueezeParam, StateOrdering, TruncationGuard,
};
use crate::units::UnitProvenance;

/// Pair terms are dropped automatically when `V|g| <= PAIR_NEGLIGIBLE · U|f|`.
pub const PAIR_NEGLIGIBLE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    SinglePhoton,
    PhotonSurvival,
    Coherent,
    SqueezedCoherentAdded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutChoice {
    /// Reduced (axion+, photon+) unless pair terms matter.
    #[default]
    Auto,
    /// Reduced layout; pair terms are dropped.
    Reduced,
    /// Four modes with pair terms.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvolutionVariant {
    #[default]
    SingleExponential,
    TimeOrdered {
        steps: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub layout: LayoutChoice,
    /// Fixed truncations; `None` sizes the mode automatically and grows it
    /// until the guard band is clean.
    pub photon_n_max: Option<usize>,
    pub axion_n_max: Option<usize>,
    pub conjugate_n_max: Option<usize>,
    pub margin: usize,
    pub threshold: f64,
    pub evolution: EvolutionVariant,
    /// Highest perturbative order reported; `None` picks a per-kind default.
    pub series_order: Option<usize>,
    pub max_grow_steps: usize,
    pub solver: EvolutionConfig,
}

impl Default for Numerics {
    fn default() -> Self {
        let guard = TruncationGuard::default();
        Numerics {
            layout: LayoutChoice::Auto,
            photon_n_max: None,
            axion_n_max: None,
            conjugate_n_max: None,
            margin: guard.margin,
            threshold: guard.threshold,
            evolution: EvolutionVariant::SingleExponential,
            series_order: None,
            max_grow_steps: 8,
            solver: EvolutionConfig::default(),
        }
    }
}

impl Numerics {
    pub fn guard(&self) -> TruncationGuard {
        TruncationGuard {
            margin: self.margin,
            threshold: self.threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.margin == 0 {
            return Err(Error::param("margin", "must be >= 1"));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::param("threshold", "must be finite and > 0"));
        }
        if let EvolutionVariant::TimeOrdered { steps: 0 } = self.evolution {
            return Err(Error::param("steps", "must be >= 1"));
        }
        for n in [self.photon_n_max, self.axion_n_max, self.conjugate_n_max]
            .into_iter()
            .flatten()
        {
            if n < self.margin {
                return Err(Error::param("n_max", format!("{n} is narrower than the guard band")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub params: MixingParams,
    /// Final-state coherent amplitude (coherent scenario only).
    #[serde(default = "zero_amplitude")]
    pub alpha: CoherentAmplitude,
    #[serde(default = "zero_amplitude")]
    pub beta: CoherentAmplitude,
    #[serde(default = "no_squeeze")]
    pub zeta: SqueezeParam,
    #[serde(default)]
    pub addition: PhotonAddition,
    #[serde(default)]
    pub ordering: StateOrdering,
    #[serde(default)]
    pub numerics: Numerics,
}

fn zero_amplitude() -> CoherentAmplitude {
    CoherentAmplitude::ZERO
}

fn no_squeeze() -> SqueezeParam {
    SqueezeParam::NONE
}

impl ScenarioSpec {
    pub fn new(kind: ScenarioKind, params: MixingParams) -> Self {
        ScenarioSpec {
            kind,
            params,
            alpha: CoherentAmplitude::ZERO,
            beta: CoherentAmplitude::ZERO,
            zeta: SqueezeParam::NONE,
            addition: PhotonAddition::default(),
            ordering: StateOrdering::default(),
            numerics: Numerics::default(),
        }
    }

    /// Rejects settings that the chosen kind would silently ignore.
    pub fn validate(&self) -> Result<()> {
        self.numerics.validate()?;
        let default_addition = self.addition == PhotonAddition::default();
        let irrelevant: &[(&'static str, bool)] = match self.kind {
            ScenarioKind::SinglePhoton | ScenarioKind::PhotonSurvival => &[
                ("alpha", self.alpha != CoherentAmplitude::ZERO),
                ("beta", self.beta != CoherentAmplitude::ZERO),
                ("zeta", self.zeta != SqueezeParam::NONE),
                ("addition", !default_addition),
                ("ordering", self.ordering != StateOrdering::default()),
            ],
            ScenarioKind::Coherent => &[
                ("zeta", self.zeta != SqueezeParam::NONE),
                ("addition", !default_addition),
                ("ordering", self.ordering != StateOrdering::default()),
            ],
            ScenarioKind::SqueezedCoherentAdded => &[("alpha", self.alpha != CoherentAmplitude::ZERO)],
        };
        if let Some((name, _)) = irrelevant.iter().find(|(_, set)| *set) {
            return Err(Error::param(
                name,
                format!("not used by {:?} and must stay at its default", self.kind),
            ));
        }
        Ok(())
    }

    fn pair_terms_negligible(&self) -> bool {
        let (f, g) = self.params.windows();
        self.params.lambda == 0.0 || self.params.v * g.norm() <= PAIR_NEGLIGIBLE * self.params.u * f.norm()
    }

    fn default_series_order(&self) -> usize {
        match self.kind {
            ScenarioKind::SinglePhoton => 5,
            ScenarioKind::PhotonSurvival => 4,
            ScenarioKind::Coherent | ScenarioKind::SqueezedCoherentAdded => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdditionReport {
    pub n: usize,
    pub normalized: bool,
    /// `<ζ,β| b^N b†^N |ζ,β>`.
    pub norm_factor: f64,
}

/// Exclusive single-quantum channels of the evolved `|1_b>` state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelBudget {
    pub axion: f64,
    pub photon: f64,
    /// Population of every other basis state.
    pub other: f64,
    /// `1 - axion - photon`.
    pub residual: f64,
}

impl ChannelBudget {
    pub fn of(s: &StateVector) -> Result<Self> {
        let layout = s.layout();
        let total = s.norm_sqr();
        let axion = s.amplitude_of(&[(Mode::AxionPlus, 1)])?.norm_sqr() / total;
        let photon = s.amplitude_of(&[(Mode::PhotonPlus, 1)])?.norm_sqr() / total;
        let singles = [
            layout.index_of(&[(Mode::AxionPlus, 1)])?,
            layout.index_of(&[(Mode::PhotonPlus, 1)])?,
        ];
        let other = s
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(i, _)| !singles.contains(i))
            .map(|(_, a)| a.norm_sqr())
            .sum::<f64>()
            / total;
        Ok(ChannelBudget {
            axion,
            photon,
            other,
            residual: 1.0 - axion - photon,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NumericsReport {
    pub layout: String,
    pub dimension: usize,
    pub photon_n_max: usize,
    pub axion_n_max: usize,
    pub pair_terms_included: bool,
    pub evolution: EvolutionVariant,
    pub grow_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub crate_version: &'static str,
    pub units: UnitProvenance,
}

impl Default for Provenance {
    fn default() -> Self {
        Provenance {
            crate_version: env!("CARGO_PKG_VERSION"),
            units: UnitProvenance::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub kind: ScenarioKind,
    pub p_exact: f64,
    pub p_leading_closed_form: f64,
    /// `|Σ_{k<=n} c_k λᵏ|²` for `n = 0, 1, ...`.
    pub p_series: Vec<f64>,
    /// `c_n λⁿ`.
    pub series_amplitudes: Vec<Complex64>,
    /// `p_exact / (λU|f|)²`.
    pub enhancement_vs_single_photon: f64,
    pub leakage: f64,
    pub flagged: bool,
    pub flag_reason: Option<String>,
    pub addition: Option<AdditionReport>,
    pub channels: Option<ChannelBudget>,
    pub numerics: NumericsReport,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Sizes {
    photon: usize,
    axion: usize,
    conjugate: usize,
}

struct Evaluation {
    amplitude: Complex64,
    leakage: Vec<(Mode, f64)>,
    evolved: StateVector,
    addition: Option<AdditionReport>,
    series: Vec<Complex64>,
}

struct Prepared {
    input: StateVector,
    out: StateVector,
    /// Guard-band leakage of the prepared states, per mode.
    leakage: Vec<(Mode, f64)>,
    addition: Option<AdditionReport>,
}

fn band_weights(s: &StateVector, margin: &dyn Fn(Mode) -> usize) -> Result<Vec<(Mode, f64)>> {
    let total = s.norm_sqr().max(f64::MIN_POSITIVE);
    s.layout()
        .modes()
        .iter()
        .map(|&mode| {
            let dist = s.occupation_distribution(mode)?;
            let start = dist.len().saturating_sub(margin(mode));
            Ok((mode, dist[start..].iter().sum::<f64>() / total))
        })
        .collect()
}

fn merge_max(acc: &mut Vec<(Mode, f64)>, more: Vec<(Mode, f64)>) {
    for (mode, w) in more {
        match acc.iter_mut().find(|(m, _)| *m == mode) {
            Some(entry) => entry.1 = entry.1.max(w),
            None => acc.push((mode, w)),
        }
    }
}

fn unit_vector(n_max: usize, level: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n_max + 1];
    v[level] = Complex64::new(1.0, 0.0);
    v
}

fn prepare(spec: &ScenarioSpec, layout: &Arc<ModeLayout>) -> Result<Prepared> {
    let margin = spec.numerics.margin;
    let fixed_margin = |_: Mode| margin;
    let n_photon = layout.n_max(Mode::PhotonPlus)?;
    let n_axion = layout.n_max(Mode::AxionPlus)?;
    let one_axion = unit_vector(n_axion, 1);
    match spec.kind {
        ScenarioKind::SinglePhoton | ScenarioKind::PhotonSurvival => {
            let input = StateVector::fock(layout.clone(), &[(Mode::PhotonPlus, 1)])?;
            let out = if spec.kind == ScenarioKind::SinglePhoton {
                StateVector::fock(layout.clone(), &[(Mode::AxionPlus, 1)])?
            } else {
                input.clone()
            };
            let leakage = band_weights(&input, &fixed_margin)?;
            Ok(Prepared {
                input,
                out,
                leakage,
                addition: None,
            })
        }
        ScenarioKind::Coherent => {
            let beta = squeezed_coherent_amplitudes(n_photon, SqueezeParam::NONE, spec.beta, StateOrdering::default())?;
            let alpha =
                squeezed_coherent_amplitudes(n_photon, SqueezeParam::NONE, spec.alpha, StateOrdering::default())?;
            let input = StateVector::product(layout.clone(), &[(Mode::PhotonPlus, &beta)])?;
            let out = StateVector::product(
                layout.clone(),
                &[(Mode::AxionPlus, &one_axion), (Mode::PhotonPlus, &alpha)],
            )?;
            let mut leakage = band_weights(&input, &fixed_margin)?;
            merge_max(&mut leakage, band_weights(&out, &fixed_margin)?);
            Ok(Prepared {
                input,
                out,
                leakage,
                addition: None,
            })
        }
        ScenarioKind::SqueezedCoherentAdded => {
            let base_amps = squeezed_coherent_amplitudes(n_photon, spec.zeta, spec.beta, spec.ordering)?;
            let base = StateVector::product(layout.clone(), &[(Mode::PhotonPlus, &base_amps)])?;
            let out = StateVector::product(
                layout.clone(),
                &[(Mode::AxionPlus, &one_axion), (Mode::PhotonPlus, &base_amps)],
            )?;
            // b†^N moves the top N levels past the cutoff, so the band widens by N
            let n = spec.addition.n;
            let widened = |mode: Mode| if mode == Mode::PhotonPlus { margin + n } else { margin };
            let leakage = band_weights(&base, &widened)?;
            let relaxed = TruncationGuard {
                margin,
                threshold: f64::INFINITY,
            };
            let added = add_photons(&base, Mode::PhotonPlus, spec.addition, &relaxed)?;
            Ok(Prepared {
                input: added.state,
                out,
                leakage,
                addition: Some(AdditionReport {
                    n,
                    normalized: added.normalized,
                    norm_factor: added.norm_factor,
                }),
            })
        }
    }
}

fn evaluate(
    spec: &ScenarioSpec,
    layout: &Arc<ModeLayout>,
    drop_pairs: bool,
    series_order: usize,
) -> Result<Evaluation> {
    let prepared = prepare(spec, layout)?;
    let cfg = &spec.numerics.solver;
    let evolved = match spec.numerics.evolution {
        EvolutionVariant::SingleExponential => {
            evolve_exact_with(&build_q(layout, &spec.params, drop_pairs)?, &prepared.input, cfg)?
        }
        EvolutionVariant::TimeOrdered { steps } => {
            time_ordered_unitary(&spec.params, layout, steps, drop_pairs)?.apply(&prepared.input, cfg)?
        }
    };
    let amplitude = inner_product(&prepared.out, &evolved)?;
    let margin = spec.numerics.margin;
    let mut leakage = prepared.leakage;
    merge_max(&mut leakage, band_weights(&evolved, &|_| margin)?);

    let mut fac = spec.params.coupling();
    if drop_pairs {
        fac.v = 0.0;
    }
    let coefficients = series_unchecked(layout, &fac, &prepared.input, &prepared.out, series_order)?;
    let mut power = 1.0;
    let series = coefficients
        .orders
        .iter()
        .map(|&(_, c)| {
            let term = c * power;
            power *= spec.params.lambda;
            term
        })
        .collect();
    Ok(Evaluation {
        amplitude,
        leakage,
        evolved,
        addition: prepared.addition,
        series,
    })
}

fn initial_sizes(spec: &ScenarioSpec) -> Sizes {
    let n = &spec.numerics;
    let order = n.series_order.unwrap_or_else(|| spec.default_series_order());
    let auto_photon = match spec.kind {
        ScenarioKind::SinglePhoton | ScenarioKind::PhotonSurvival => 1 + order.max(n.margin + 3),
        ScenarioKind::Coherent => suggested_photon_truncation(spec.alpha.abs().max(spec.beta.abs()), 0.0, 0) + n.margin,
        ScenarioKind::SqueezedCoherentAdded => {
            suggested_photon_truncation(spec.beta.abs(), spec.zeta.r, spec.addition.n) + n.margin
        }
    };
    let fock_axion = match spec.kind {
        ScenarioKind::SinglePhoton | ScenarioKind::PhotonSurvival => order,
        _ => 0,
    };
    Sizes {
        photon: n.photon_n_max.unwrap_or(auto_photon),
        axion: n.axion_n_max.unwrap_or((n.margin + 3).max(fock_axion)),
        conjugate: n.conjugate_n_max.unwrap_or(n.margin + 3),
    }
}

fn build_layout(sizes: Sizes, full: bool, budget: usize) -> Result<Arc<ModeLayout>> {
    let layout = if full {
        ModeLayout::four_mode_asymmetric(sizes.axion, sizes.photon, sizes.conjugate)?
    } else {
        ModeLayout::reduced(sizes.axion, sizes.photon)?
    };
    if layout.dimension() > budget {
        return Err(Error::DimensionTooLarge {
            dimension: layout.dimension(),
            budget,
        });
    }
    Ok(Arc::new(layout))
}

fn grow(n: usize, mode: Mode) -> usize {
    if mode == Mode::PhotonPlus {
        n + n / 4 + 2
    } else {
        n + 2
    }
}

/// `|<ζ,β| b b†^N |ζ,β>|`-type moment `<ζ,β| b b†^N |ζ,β>`, by normal ordering
/// `S†(...)S` with `S† b S = μ b + ν b†`, `μ = cosh r`, `ν = e^{iφ} sinh r`,
/// and evaluating on the coherent state `|β>`.
///
/// With [`StateOrdering::DisplaceThenSqueeze`] the state is not of this form
/// and the moment is not defined here.
pub fn added_photon_moment(zeta: SqueezeParam, beta: CoherentAmplitude, n: usize) -> Complex64 {
    let mu = Complex64::new(zeta.r.cosh(), 0.0);
    let nu = Complex64::from_polar(zeta.r.sinh(), zeta.varphi);
    // poly[p][q] is the coefficient of b†^p b^q
    let size = n + 2;
    let mut poly = vec![vec![Complex64::new(0.0, 0.0); size]; size];
    poly[0][0] = Complex64::new(1.0, 0.0);
    for _ in 0..n {
        // right-multiply by μ b† + ν* b
        let mut next = vec![vec![Complex64::new(0.0, 0.0); size]; size];
        for p in 0..size {
            for q in 0..size {
                let c = poly[p][q];
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                next[p + 1][q] += c * mu;
                if q > 0 {
                    next[p][q - 1] += c * mu * q as f64;
                }
                next[p][q + 1] += c * nu.conj();
            }
        }
        poly = next;
    }
    // left-multiply by μ b + ν b†
    let mut total = Complex64::new(0.0, 0.0);
    let b = beta.beta;
    let bc = b.conj();
    for (p, row) in poly.iter().enumerate() {
        for (q, &c) in row.iter().enumerate() {
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            let mut term = mu * bc.powu(p as u32) * b.powu(q as u32 + 1);
            if p > 0 {
                term += mu * p as f64 * bc.powu(p as u32 - 1) * b.powu(q as u32);
            }
            term += nu * bc.powu(p as u32 + 1) * b.powu(q as u32);
            total += c * term;
        }
    }
    total
}

/// `cosh²r + |β|²(cosh 2r + sinh 2r cos(2δ - φ))`, the `N = 1` moment.
pub fn single_added_bracket(zeta: SqueezeParam, beta: CoherentAmplitude) -> f64 {
    let r = zeta.r;
    r.cosh().powi(2)
        + beta.abs().powi(2) * ((2.0 * r).cosh() + (2.0 * r).sinh() * (2.0 * beta.phase() - zeta.varphi).cos())
}

fn leading_closed_form(spec: &ScenarioSpec, addition: Option<AdditionReport>) -> f64 {
    let p = &spec.params;
    let (f, g) = p.windows();
    let single = (p.lambda * p.u * f.norm()).powi(2);
    match spec.kind {
        ScenarioKind::SinglePhoton => single,
        ScenarioKind::PhotonSurvival => {
            let second = p.lambda * p.lambda * (p.u * p.u * f.norm_sqr() + 3.0 * p.v * p.v * g.norm_sqr());
            (1.0 - 0.5 * second).powi(2)
        }
        ScenarioKind::Coherent => {
            single * spec.beta.abs().powi(2) * crate::states::coherent_overlap(spec.alpha, spec.beta)
        }
        ScenarioKind::SqueezedCoherentAdded => {
            let moment = added_photon_moment(spec.zeta, spec.beta, spec.addition.n).norm_sqr();
            match addition {
                Some(a) if a.normalized => single * moment / a.norm_factor,
                _ => single * moment,
            }
        }
    }
}

/// Evaluates any scenario, growing automatic truncations until the guard
/// band is clean or the grow budget is spent.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioResult> {
    spec.validate()?;
    let numerics = &spec.numerics;
    let full = match numerics.layout {
        LayoutChoice::Full => true,
        LayoutChoice::Reduced => false,
        LayoutChoice::Auto => !spec.pair_terms_negligible(),
    };
    let drop_pairs = !full;
    let series_order = numerics.series_order.unwrap_or_else(|| spec.default_series_order());
    let mut sizes = initial_sizes(spec);
    let fixed = |mode: Mode| match mode {
        Mode::PhotonPlus => numerics.photon_n_max.is_some(),
        Mode::AxionPlus => numerics.axion_n_max.is_some(),
        _ => numerics.conjugate_n_max.is_some(),
    };

    let mut steps = 0;
    loop {
        let layout = build_layout(sizes, full, numerics.solver.max_dimension)?;
        let eval = evaluate(spec, &layout, drop_pairs, series_order)?;
        let leakage = eval.leakage.iter().map(|l| l.1).fold(0.0, f64::max);
        let mut grown = false;
        if leakage > numerics.threshold && steps < numerics.max_grow_steps {
            for &(mode, w) in &eval.leakage {
                if w > numerics.threshold && !fixed(mode) {
                    match mode {
                        Mode::PhotonPlus => sizes.photon = grow(sizes.photon, mode),
                        Mode::AxionPlus => sizes.axion = grow(sizes.axion, mode),
                        _ => sizes.conjugate = grow(sizes.conjugate, mode),
                    }
                    grown = true;
                }
            }
        }
        if grown {
            steps += 1;
            continue;
        }
        if leakage > numerics.threshold && spec.kind == ScenarioKind::SqueezedCoherentAdded {
            let (mode, worst) =
                eval.leakage
                    .iter()
                    .copied()
                    .fold((Mode::PhotonPlus, 0.0), |a, b| if b.1 > a.1 { b } else { a });
            let current = layout.n_max(mode)?;
            return Err(Error::Truncation {
                mode,
                leakage: worst,
                threshold: numerics.threshold,
                suggested_n_max: grow(current, mode),
            });
        }
        return Ok(assemble(spec, &layout, eval, leakage, full, steps));
    }
}

fn assemble(
    spec: &ScenarioSpec,
    layout: &Arc<ModeLayout>,
    eval: Evaluation,
    leakage: f64,
    full: bool,
    steps: usize,
) -> ScenarioResult {
    let p = &spec.params;
    let p_exact = eval.amplitude.norm_sqr();
    let single = (p.lambda * p.u * p.windows().0.norm()).powi(2);
    let flagged = leakage > spec.numerics.threshold;
    let channels = match spec.kind {
        ScenarioKind::SinglePhoton | ScenarioKind::PhotonSurvival => ChannelBudget::of(&eval.evolved).ok(),
        _ => None,
    };
    let mut sum = Complex64::new(0.0, 0.0);
    let p_series = eval
        .series
        .iter()
        .map(|t| {
            sum += t;
            sum.norm_sqr()
        })
        .collect();
    ScenarioResult {
        kind: spec.kind,
        p_exact,
        p_leading_closed_form: leading_closed_form(spec, eval.addition),
        p_series,
        series_amplitudes: eval.series,
        enhancement_vs_single_photon: if single > 0.0 { p_exact / single } else { f64::NAN },
        leakage,
        flagged,
        flag_reason: flagged.then(|| {
            format!(
                "guard-band leakage {leakage:.3e} above threshold {:.3e}",
                spec.numerics.threshold
            )
        }),
        addition: eval.addition,
        channels,
        numerics: NumericsReport {
            layout: layout.describe(),
            dimension: layout.dimension(),
            photon_n_max: layout.n_max(Mode::PhotonPlus).unwrap_or(0),
            axion_n_max: layout.n_max(Mode::AxionPlus).unwrap_or(0),
            pair_terms_included: full,
            evolution: spec.numerics.evolution,
            grow_steps: steps,
        },
        provenance: Provenance::default(),
    }
}

fn expect_kind(spec: &ScenarioSpec, kind: ScenarioKind) -> Result<()> {
    if spec.kind != kind {
        return Err(Error::param("kind", format!("expected {kind:?}, got {:?}", spec.kind)));
    }
    Ok(())
}

/// `|<1_a| U |1_b>|²`.
pub fn single_photon_conversion(spec: &ScenarioSpec) -> Result<ScenarioResult> {
    expect_kind(spec, ScenarioKind::SinglePhoton)?;
    run_scenario(spec)
}

/// `|<1_b| U |1_b>|²`.
pub fn photon_survival(spec: &ScenarioSpec) -> Result<ScenarioResult> {
    expect_kind(spec, ScenarioKind::PhotonSurvival)?;
    run_scenario(spec)
}

/// `|<α| a U |β>|²` with the axion starting in vacuum.
pub fn coherent_conversion(spec: &ScenarioSpec) -> Result<ScenarioResult> {
    expect_kind(spec, ScenarioKind::Coherent)?;
    run_scenario(spec)
}

/// `|<ζ,β| a U b†^N |ζ,β>|²` with the axion starting in vacuum.
pub fn squeezed_coherent_conversion(spec: &ScenarioSpec) -> Result<ScenarioResult> {
    expect_kind(spec, ScenarioKind::SqueezedCoherentAdded)?;
    run_scenario(spec)
}

/// Least-squares line through `(x, ln p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_log_slope(xs: &[f64], ps: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ps.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            actual: ps.len(),
        });
    }
    let n = xs.len();
    if n < 4 {
        return Err(Error::DegenerateSample(format!("need at least 4 points, got {n}")));
    }
    if let Some(p) = ps.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(Error::DegenerateSample(format!("non-positive probability {p}")));
    }
    let ys: Vec<f64> = ps.iter().map(|p| p.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 || !sxx.is_finite() {
        return Err(Error::DegenerateSample("abscissae have zero variance".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        stderr: (sse / (n as f64 - 2.0) / sxx).sqrt(),
        r_squared: if syy > 0.0 { 1.0 - sse / syy } else { 1.0 },
        points: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalingAxis {
    /// `ln p` against `r`.
    Squeeze,
    /// `ln p` against `ln |β|`.
    LogBeta,
}

/// Slope of `ln p` along `axis` over `(x, p)` samples.
pub fn enhancement_scaling_fit(samples: &[(f64, f64)], axis: ScalingAxis) -> Result<SlopeFit> {
    let xs: Vec<f64> = samples
        .iter()
        .map(|&(x, _)| match axis {
            ScalingAxis::Squeeze => x,
            ScalingAxis::LogBeta => x.ln(),
        })
        .collect();
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateSample("|beta| must be > 0 on a log axis".into()));
    }
    let ps: Vec<f64> = samples.iter().map(|s| s.1).collect();
    fit_log_slope(&xs, &ps)
}

/// `10 log₁₀ e^{2r}`.
pub fn squeezing_db(r: f64) -> Result<f64> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::param("r", format!("must be >= 0, got {r}")));
    }
    Ok(20.0 * r / LN_10)
}

pub fn db_to_r(db: f64) -> Result<f64> {
    if !(db.is_finite() && db >= 0.0) {
        return Err(Error::param("db", format!("must be >= 0, got {db}")));
    }
    Ok(db * LN_10 / 20.0)
}

/// Squeezing enhancement for `N` added photons at a given dB level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeadlineFactor {
    pub n: usize,
    pub db: f64,
    pub r: f64,
    /// `e^{2(N+1)r}`, the exponent of the `|β|^{2(N+1)} e^{2(N+1)r}` law.
    pub factor_n_plus_one: f64,
    /// `e^{2Nr}`, the other reading of the quoted figure.
    pub factor_n: f64,
    pub reported: f64,
    pub ambiguity: String,
}

impl HeadlineFactor {
    pub fn within(&self, low: f64, high: f64) -> bool {
        (low..=high).contains(&self.reported)
    }
}

pub fn headline_enhancement(n: usize, db: f64) -> Result<HeadlineFactor> {
    let r = db_to_r(db)?;
    let factor_n_plus_one = (2.0 * (n as f64 + 1.0) * r).exp();
    let factor_n = (2.0 * n as f64 * r).exp();
    Ok(HeadlineFactor {
        n,
        db,
        r,
        factor_n_plus_one,
        factor_n,
        reported: factor_n_plus_one,
        ambiguity: format!(
            "quoted enhancement 1e8 matches e^(2Nr) = {factor_n:.3e}; the scaling law gives e^(2(N+1)r) = \
             {factor_n_plus_one:.3e}, which is reported"
        ),
    })
}
