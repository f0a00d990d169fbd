use std::sync::Arc;

use axion_core::layout::{Mode, ModeLayout};
use axion_core::operator::LinearOperator;
use axion_core::state::{inner_product, StateVector};
use axion_core::states::{
    add_photons, coherent, coherent_overlap, displacement_op, squeeze_op, CoherentAmplitude, PhotonAddition,
    SqueezeParam, TruncationGuard,
};
use axion_core::Complex64;

const B: Mode = Mode::PhotonPlus;

fn photon(n: usize) -> Arc<ModeLayout> {
    Arc::new(ModeLayout::single(B, n).unwrap())
}

/// `e^{-|β|²/2} βⁿ / sqrt(n!)`.
fn poisson_amplitudes(beta: Complex64, n_max: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut a = Complex64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    for n in 0..=n_max {
        if n > 0 {
            a *= beta / (n as f64).sqrt();
        }
        out.push(a);
    }
    out
}

#[test]
fn coherent_state_matches_poisson_amplitudes() {
    for (abs, phase) in [(0.5, 0.0), (1.0, 2.0), (2.0, -1.3)] {
        let beta = CoherentAmplitude::from_polar(abs, phase).unwrap();
        let l = photon(40);
        let s = coherent(&l, B, beta, &TruncationGuard::default()).unwrap();
        let want = poisson_amplitudes(beta.beta, 40);
        for (n, (a, w)) in s.amplitudes().iter().zip(&want).enumerate().take(30) {
            assert!((a - w).norm() < 1e-10, "|beta| = {abs}, n = {n}");
        }
    }
}

#[test]
fn coherent_state_is_annihilation_eigenvector() {
    for abs in [0.3, 1.0, 1.7, 2.0] {
        for n_max in [30, 45] {
            let beta = CoherentAmplitude::from_polar(abs, 0.9).unwrap();
            let l = photon(n_max);
            let s = coherent(&l, B, beta, &TruncationGuard::default()).unwrap();
            let b = LinearOperator::annihilation(l, B).unwrap();
            // the guard band is excluded: the cutoff itself breaks b|β> = β|β>
            let diff = b.apply(&s).unwrap().add_scaled(-beta.beta, &s).unwrap();
            let margin = TruncationGuard::default().margin;
            let residual = diff.amplitudes()[..=n_max - margin]
                .iter()
                .map(|a| a.norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(residual <= 1e-8, "|beta| = {abs}, n_max = {n_max}: {residual:e}");
            let full = diff.norm();
            assert!(full <= 1e-7, "|beta| = {abs}, n_max = {n_max}: {full:e}");
        }
    }
}

#[test]
fn coherent_overlap_law() {
    let l = photon(60);
    let g = TruncationGuard::default();
    let pairs = [
        ((1.0, 0.0), (1.0, 0.0)),
        ((1.5, 0.3), (0.2, -2.0)),
        ((2.0, 0.0), (0.0, 0.0)),
        ((1.0, 1.0), (2.5, 1.0)),
    ];
    for ((a1, p1), (a2, p2)) in pairs {
        let alpha = CoherentAmplitude::from_polar(a1, p1).unwrap();
        let beta = CoherentAmplitude::from_polar(a2, p2).unwrap();
        let sa = coherent(&l, B, alpha, &g).unwrap();
        let sb = coherent(&l, B, beta, &g).unwrap();
        let numeric = inner_product(&sa, &sb).unwrap().norm_sqr();
        assert!((numeric - coherent_overlap(alpha, beta)).abs() <= 1e-8);
    }
}

#[test]
fn bogoliubov_identity_on_interior() {
    // S|j> spreads as tanh(r)^n; at r = 1.2 the first ten columns need ~300 levels
    let n_max = 300;
    let interior = 10;
    let l = photon(n_max);
    let b = LinearOperator::annihilation(l.clone(), B).unwrap();
    let bd = LinearOperator::creation(l.clone(), B).unwrap();
    for (r, phi) in [(0.2, 0.0), (0.7, 1.1), (1.2, -2.5)] {
        let zeta = SqueezeParam::new(r, phi).unwrap();
        let s = squeeze_op(&l, B, zeta, &TruncationGuard::default()).unwrap();
        let lhs = s.adjoint().compose(&b).unwrap().compose(&s).unwrap();
        let rhs = b
            .scale(Complex64::new(r.cosh(), 0.0))
            .add(&bd.scale(Complex64::from_polar(r.sinh(), phi)))
            .unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..interior {
            for j in 0..interior {
                worst = worst.max((lhs.get(i, j) - rhs.get(i, j)).norm());
            }
        }
        assert!(worst <= 1e-8, "r = {r}: {worst:e}");
    }
}

#[test]
fn squeezed_vacuum_mean_is_sinh_squared() {
    let l = photon(200);
    for r in [0.1, 0.5, 0.921, 1.2] {
        let s = squeeze_op(&l, B, SqueezeParam::new(r, 0.4).unwrap(), &TruncationGuard::default())
            .unwrap()
            .apply(&StateVector::vacuum(l.clone()))
            .unwrap();
        assert!((s.mean_occupation(B).unwrap() - r.sinh().powi(2)).abs() < 1e-9);
    }
}

#[test]
fn displacement_composes_with_phase() {
    // D(α)D(β) = e^{i Im(αβ*)} D(α+β)
    let l = photon(70);
    let g = TruncationGuard::default();
    let a = CoherentAmplitude::from_polar(0.8, 0.3).unwrap();
    let b = CoherentAmplitude::from_polar(1.1, -1.2).unwrap();
    let sum = CoherentAmplitude::new(a.beta + b.beta);
    let vac = StateVector::vacuum(l.clone());
    let left = displacement_op(&l, B, a, &g)
        .unwrap()
        .apply(&displacement_op(&l, B, b, &g).unwrap().apply(&vac).unwrap())
        .unwrap();
    let phase = Complex64::from_polar(1.0, (a.beta * b.beta.conj()).im);
    let right = displacement_op(&l, B, sum, &g)
        .unwrap()
        .apply(&vac)
        .unwrap()
        .scale(phase);
    assert!(left.max_abs_diff(&right).unwrap() < 1e-10);
}

#[test]
fn photon_added_vacuum_norms_are_factorials() {
    let l = photon(12);
    let vac = StateVector::vacuum(l);
    let mut factorial = 1.0;
    for n in 0..=6usize {
        if n > 0 {
            factorial *= n as f64;
        }
        let added = add_photons(
            &vac,
            B,
            PhotonAddition { n, normalize: false },
            &TruncationGuard::default(),
        )
        .unwrap();
        assert!((added.norm_factor - factorial).abs() <= 1e-9, "N = {n}");
        assert!((added.state.norm_sqr() - factorial).abs() <= 1e-9);
    }
}

#[test]
fn photon_added_coherent_norm() {
    // <β| b b† |β> = 1 + |β|²
    let l = photon(50);
    let g = TruncationGuard::default();
    let beta = CoherentAmplitude::from_polar(1.4, 0.2).unwrap();
    let s = coherent(&l, B, beta, &g).unwrap();
    let added = add_photons(&s, B, PhotonAddition { n: 1, normalize: true }, &g).unwrap();
    assert!((added.norm_factor - (1.0 + 1.96)).abs() < 1e-10);
    assert!(added.state.is_normalized());
}

#[test]
fn states_embed_into_multimode_layouts() {
    let l = Arc::new(ModeLayout::reduced(3, 40).unwrap());
    let beta = CoherentAmplitude::from_polar(1.0, 0.0).unwrap();
    let s = coherent(&l, B, beta, &TruncationGuard::default()).unwrap();
    assert!((s.mean_occupation(B).unwrap() - 1.0).abs() < 1e-10);
    assert_eq!(s.mean_occupation(Mode::AxionPlus).unwrap(), 0.0);
    assert!(s.truncation_leakage(2).unwrap() < 1e-10);
}
