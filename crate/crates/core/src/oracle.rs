//! Exact perturbation-series coefficients of transition amplitudes.
//!
//! `Q` is linear in `λ`, so with `Q = λ Q̂` the amplitude
//! `<out| exp(-iQ) |in>` expands as `Σ c_n λⁿ` with
//! `c_n = (-i)ⁿ <out| Q̂ⁿ |in> / n!`. Each `c_n` is computed by repeated
//! sparse application of `Q̂`; nothing is fitted.
//!
//! The global phase of the odd conversion orders relative to the carrier
//! `U f*` is whatever the construction yields; [`MonomialDecomposition`]
//! records it instead of assuming the alternating signs of a textbook
//! expansion.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{Mode, ModeLayout};
use crate::mixing::{build_q_factorized, FactorizedCoupling};
use crate::operator::LinearOperator;
use crate::state::{inner_product, StateVector};

/// Integrality tolerance on recovered bracket coefficients.
pub const INTEGRALITY_TOLERANCE: f64 = 1e-6;
/// Largest accepted relative residual of the monomial solve.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Probe sets with a larger condition number are rejected.
pub const CONDITION_LIMIT: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesCoefficients {
    /// `(n, c_n)` for `n = 0..=max_order`.
    pub orders: Vec<(usize, Complex64)>,
}

impl SeriesCoefficients {
    pub fn max_order(&self) -> usize {
        self.orders.last().map_or(0, |o| o.0)
    }

    pub fn coefficient(&self, n: usize) -> Option<Complex64> {
        self.orders.iter().find(|o| o.0 == n).map(|o| o.1)
    }

    /// `Σ c_n λⁿ`.
    pub fn evaluate(&self, lambda: f64) -> Complex64 {
        self.orders
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &(_, c)| acc * lambda + c)
    }

    /// Partial sums `|Σ_{k<=n} c_k λᵏ|²` for every order.
    pub fn cumulative_probabilities(&self, lambda: f64) -> Vec<f64> {
        let mut sum = Complex64::new(0.0, 0.0);
        let mut power = 1.0;
        self.orders
            .iter()
            .map(|&(_, c)| {
                sum += c * power;
                power *= lambda;
                sum.norm_sqr()
            })
            .collect()
    }

    /// `(λ‖Q̂‖)^{K+1} / (K+1)!`, bounding the tail of a unit-norm pairing.
    pub fn remainder_bound(&self, lambda: f64, q_norm: f64) -> f64 {
        let k = self.max_order() + 1;
        let x = lambda.abs() * q_norm;
        (1..=k).fold(1.0, |acc, j| acc * x / j as f64)
    }
}

fn support_bounds(s: &StateVector) -> Vec<usize> {
    let layout = s.layout();
    let mut high = vec![0usize; layout.num_modes()];
    for (i, a) in s.amplitudes().iter().enumerate() {
        if *a != Complex64::new(0.0, 0.0) {
            for (h, n) in high.iter_mut().zip(layout.occupations(i)) {
                *h = (*h).max(n);
            }
        }
    }
    high
}

/// Coefficients `c_0..=c_max_order` of `<out| exp(-iλQ̂) |in>`.
///
/// Every mode must satisfy `n_max >= (highest occupied level of in) + max_order`
/// so that no path of `Q̂ⁿ` reaches the hard cutoff.
pub fn amplitude_series(
    layout: &Arc<ModeLayout>,
    fac: &FactorizedCoupling,
    in_state: &StateVector,
    out_state: &StateVector,
    max_order: usize,
) -> Result<SeriesCoefficients> {
    let worst = support_bounds(in_state)
        .into_iter()
        .enumerate()
        .filter(|&(pos, high)| high + max_order > layout.truncations()[pos])
        .max_by_key(|&(_, high)| high);
    if let Some((pos, high)) = worst {
        return Err(Error::Truncation {
            mode: layout.modes()[pos],
            leakage: 1.0,
            threshold: 0.0,
            suggested_n_max: high + max_order,
        });
    }
    series_unchecked(layout, fac, in_state, out_state, max_order)
}

/// [`amplitude_series`] without the support-growth check, for states that
/// fill the whole truncated space.
pub(crate) fn series_unchecked(
    layout: &Arc<ModeLayout>,
    fac: &FactorizedCoupling,
    in_state: &StateVector,
    out_state: &StateVector,
    max_order: usize,
) -> Result<SeriesCoefficients> {
    let unit = FactorizedCoupling { lambda: 1.0, ..*fac };
    let q_hat = build_q_factorized(layout, &unit, false)?;
    series_with_generator(&q_hat, in_state, out_state, max_order)
}

pub(crate) fn series_with_generator(
    q_hat: &LinearOperator,
    in_state: &StateVector,
    out_state: &StateVector,
    max_order: usize,
) -> Result<SeriesCoefficients> {
    let mut v = in_state.clone();
    let mut orders = Vec::with_capacity(max_order + 1);
    orders.push((0, inner_product(out_state, &v)?));
    for n in 1..=max_order {
        v = q_hat.apply(&v)?.scale(Complex64::new(0.0, -1.0 / n as f64));
        orders.push((n, inner_product(out_state, &v)?));
    }
    Ok(SeriesCoefficients { orders })
}

/// Which single-quantum transition is expanded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// `|1_b> -> |1_a>`.
    Conversion,
    /// `|1_b> -> |1_b>`.
    Survival,
}

impl Channel {
    pub fn states(self, layout: &Arc<ModeLayout>) -> Result<(StateVector, StateVector)> {
        let input = StateVector::fock(layout.clone(), &[(Mode::PhotonPlus, 1)])?;
        let out = match self {
            Channel::Conversion => StateVector::fock(layout.clone(), &[(Mode::AxionPlus, 1)])?,
            Channel::Survival => input.clone(),
        };
        Ok((input, out))
    }

    /// Phase-carrying prefactor of every order: `U f*` or `1`.
    pub fn carrier(self, fac: &FactorizedCoupling) -> Complex64 {
        match self {
            Channel::Conversion => fac.f.conj() * fac.u,
            Channel::Survival => Complex64::new(1.0, 0.0),
        }
    }

    fn carrier_label(self) -> &'static str {
        match self {
            Channel::Conversion => "U f* ",
            Channel::Survival => "",
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Conversion => "gamma->phi",
            Channel::Survival => "gamma->gamma",
        })
    }
}

/// `U^u V^v |f|^f |g|^g`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Monomial {
    pub u: u32,
    pub v: u32,
    pub f: u32,
    pub g: u32,
}

impl Monomial {
    pub const ONE: Monomial = Monomial { u: 0, v: 0, f: 0, g: 0 };

    pub const fn new(u: u32, v: u32, f: u32, g: u32) -> Self {
        Monomial { u, v, f, g }
    }

    pub fn evaluate(&self, fac: &FactorizedCoupling) -> f64 {
        fac.u.powi(self.u as i32)
            * fac.v.powi(self.v as i32)
            * fac.f.norm().powi(self.f as i32)
            * fac.g.norm().powi(self.g as i32)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (sym, e) in [("U", self.u), ("V", self.v), ("|f|", self.f), ("|g|", self.g)] {
            match e {
                0 => {}
                1 => parts.push(sym.to_string()),
                _ => parts.push(format!("{sym}^{e}")),
            }
        }
        if parts.is_empty() {
            out.write_str("1")
        } else {
            out.write_str(&parts.join(" "))
        }
    }
}

/// Even-degree bracket basis `{U^{2j} V^{2(k-j)} |f|^{2j} |g|^{2(k-j)}}` for
/// `k = order / 2` (rounded down), highest power of `U|f|` first.
pub fn bracket_basis(order: usize) -> Vec<Monomial> {
    let k = (order / 2) as u32;
    (0..=k)
        .rev()
        .map(|j| Monomial::new(2 * j, 2 * (k - j), 2 * j, 2 * (k - j)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonomialDecomposition {
    pub channel: Channel,
    pub order: usize,
    pub basis: Vec<Monomial>,
    /// Real coefficients of the bracket after removing `global_phase`,
    /// normalized so that `c_n n! / carrier = global_phase · Σ coeff · monomial`.
    pub coefficients: Vec<f64>,
    /// Largest imaginary part left after removing the global phase.
    pub max_imaginary: f64,
    /// Phase of the first coefficient, observed rather than assumed.
    pub global_phase: Complex64,
    pub relative_residual: f64,
    pub condition: f64,
    pub probes: usize,
}

impl MonomialDecomposition {
    pub fn rounded(&self) -> Vec<i64> {
        self.coefficients.iter().map(|c| c.round() as i64).collect()
    }

    /// Largest distance of a coefficient to the nearest integer.
    pub fn integrality_error(&self) -> f64 {
        self.coefficients
            .iter()
            .map(|c| (c - c.round()).abs())
            .fold(self.max_imaginary, f64::max)
    }

    pub fn is_integral(&self) -> bool {
        self.integrality_error() <= INTEGRALITY_TOLERANCE
    }

    pub fn label(&self, j: usize) -> String {
        format!("{}{}", self.channel.carrier_label(), self.basis[j])
    }
}

/// Generic probes: `U ∈ [1,3]`, `V ∈ [0,2]` independent,
/// `|f|, |g| ∈ [0.1, 2]` with uniform random phases.
pub fn random_probes(count: usize, seed: u64) -> Vec<FactorizedCoupling> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u = rng.random_range(1.0..3.0);
            let v = rng.random_range(0.0..2.0);
            sample_windows(&mut rng, u, v)
        })
        .collect()
}

/// Probes obeying `U² - V² = 1`.
pub fn physical_probes(count: usize, seed: u64) -> Vec<FactorizedCoupling> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let u: f64 = rng.random_range(1.0..3.0);
            sample_windows(&mut rng, u, (u * u - 1.0).sqrt())
        })
        .collect()
}

fn sample_windows(rng: &mut ChaCha8Rng, u: f64, v: f64) -> FactorizedCoupling {
    let tau = std::f64::consts::TAU;
    let f = Complex64::from_polar(rng.random_range(0.1..2.0), rng.random_range(0.0..tau));
    let g = Complex64::from_polar(rng.random_range(0.1..2.0), rng.random_range(0.0..tau));
    FactorizedCoupling {
        u,
        v,
        f,
        g,
        lambda: 1.0,
    }
}

/// Fits `c_n(probe) · n! / carrier(probe) = Σ y_j · monomial_j(probe)` in
/// least squares and splits `y` into a global phase and real coefficients.
pub fn decompose_monomials(
    layout: &Arc<ModeLayout>,
    channel: Channel,
    order: usize,
    basis: &[Monomial],
    probes: &[FactorizedCoupling],
) -> Result<MonomialDecomposition> {
    if basis.is_empty() {
        return Err(Error::param("basis", "must not be empty"));
    }
    if probes.len() < basis.len() {
        return Err(Error::param(
            "probes",
            format!("need at least {} probes, got {}", basis.len(), probes.len()),
        ));
    }
    let (input, out) = channel.states(layout)?;
    let factorial: f64 = (1..=order).map(|k| k as f64).product();

    let rows = probes.len();
    let mut a = DMatrix::<Complex64>::zeros(rows, basis.len());
    let mut b = DVector::<Complex64>::zeros(rows);
    for (i, probe) in probes.iter().enumerate() {
        let carrier = channel.carrier(probe);
        if carrier.norm() == 0.0 {
            return Err(Error::param("probes", "probe with vanishing carrier"));
        }
        let series = amplitude_series(layout, probe, &input, &out, order)?;
        b[i] = series.orders[order].1 * factorial / carrier;
        for (j, m) in basis.iter().enumerate() {
            a[(i, j)] = Complex64::new(m.evaluate(probe), 0.0);
        }
    }

    // column scaling keeps the reported condition about the probe geometry
    let scales: Vec<f64> = (0..basis.len())
        .map(|j| a.column(j).norm().max(f64::MIN_POSITIVE))
        .collect();
    for (j, s) in scales.iter().enumerate() {
        a.column_mut(j).unscale_mut(*s);
    }
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let condition = sv.max() / sv.min();
    if !condition.is_finite() || condition > CONDITION_LIMIT {
        return Err(Error::IllConditioned { condition });
    }
    let mut y = svd.solve(&b, 0.0).map_err(|e| Error::param("probes", e.to_string()))?;
    let residual = (&a * &y - &b).norm() / b.norm().max(f64::MIN_POSITIVE);
    for (j, s) in scales.iter().enumerate() {
        y[j] /= *s;
    }

    let lead = y[0];
    let global_phase = if lead.norm() > 0.0 {
        lead / lead.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let rotated: Vec<Complex64> = y.iter().map(|c| c / global_phase).collect();
    Ok(MonomialDecomposition {
        channel,
        order,
        basis: basis.to_vec(),
        coefficients: rotated.iter().map(|c| c.re).collect(),
        max_imaginary: rotated.iter().map(|c| c.im.abs()).fold(0.0, f64::max),
        global_phase,
        relative_residual: residual,
        condition,
        probes: rows,
    })
}

/// Bracket coefficients as printed in the reference expansion.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedBracket {
    pub channel: Channel,
    pub order: usize,
    pub coefficients: Vec<i64>,
}

pub fn reference_brackets() -> Vec<ExpectedBracket> {
    let e = |channel, order, c: &[i64]| ExpectedBracket {
        channel,
        order,
        coefficients: c.to_vec(),
    };
    vec![
        e(Channel::Conversion, 1, &[1]),
        e(Channel::Conversion, 3, &[1, 10]),
        e(Channel::Conversion, 5, &[1, 62, 197]),
        e(Channel::Survival, 2, &[1, 3]),
        e(Channel::Survival, 4, &[1, 25, 33]),
    ]
}

/// One row of the `verify-coefficients` table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoefficientCheck {
    pub channel: Channel,
    pub order: usize,
    pub monomial: String,
    pub recovered: f64,
    pub expected: i64,
    pub abs_diff: f64,
}

impl CoefficientCheck {
    pub fn passed(&self) -> bool {
        self.recovered.round() as i64 == self.expected
            && (self.recovered - self.expected as f64).abs() <= INTEGRALITY_TOLERANCE
    }
}

/// Decomposes every bracket of [`reference_brackets`] on the four-mode layout
/// with `n_max` per mode and compares against the printed values.
pub fn verify_reference_coefficients(
    n_max: usize,
    seed: u64,
) -> Result<(Vec<MonomialDecomposition>, Vec<CoefficientCheck>)> {
    let layout = Arc::new(ModeLayout::four_mode(n_max)?);
    let mut decompositions = Vec::new();
    let mut checks = Vec::new();
    for (k, expected) in reference_brackets().into_iter().enumerate() {
        let basis = bracket_basis(expected.order);
        let probes = random_probes(2 * basis.len() + 4, seed.wrapping_add(k as u64));
        let d = decompose_monomials(&layout, expected.channel, expected.order, &basis, &probes)?;
        for (j, (&rec, &exp)) in d.coefficients.iter().zip(&expected.coefficients).enumerate() {
            checks.push(CoefficientCheck {
                channel: expected.channel,
                order: expected.order,
                monomial: d.label(j),
                recovered: rec,
                expected: exp,
                abs_diff: (rec - exp as f64).abs(),
            });
        }
        decompositions.push(d);
    }
    Ok((decompositions, checks))
}

/// Degenerate (`V = 0`) two-mode rotation: `(sin²θ, cos²θ)` with `θ = λU|f|`.
pub fn closed_form_check_degenerate(lambda: f64, u: f64, f: Complex64) -> (f64, f64) {
    let theta = lambda * u * f.norm();
    (theta.sin().powi(2), theta.cos().powi(2))
}
