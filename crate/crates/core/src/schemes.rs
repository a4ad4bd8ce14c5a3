//! Balanced and eight-port homodyne measurement schemes.
//!
//! The measured primitives are always self-adjoint photon-number operators;
//! complex coefficients live only in the classical post-processing that
//! combines detector readings. `PostProcessedObservable` keeps that split
//! explicit: a list of (coefficient, detector, sideband) terms plus the
//! cached source-mode operator they add up to.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use thiserror::Error;

use crate::algebra::{ModeId, OperatorPoly, Sideband, C64};
use crate::network::{BsOrientation, Element, ElementKind, Network, NetworkError};
use crate::states::{ModeState, StateAssignment, StateError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("network does not have the expected topology: {0}")]
    WrongTopology(String),
    #[error("local oscillator amplitude is zero")]
    ZeroLocalOscillator,
    #[error("degenerate local oscillator: both sideband amplitudes must be nonzero")]
    DegenerateLocalOscillator,
    #[error("sideband phase mismatch: θ+ = {plus}, θ- = {minus}")]
    PhaseMismatch { plus: f64, minus: f64 },
    #[error("sideband amplitude mismatch: |γ+| = {plus}, |γ-| = {minus}")]
    AmplitudeMismatch { plus: f64, minus: f64 },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Complex linear combination of detector photon-number readings.
#[derive(Debug, Clone)]
pub struct PostProcessedObservable {
    terms: Vec<(C64, String, Sideband)>,
    operator: OperatorPoly,
}

impl PostProcessedObservable {
    /// Builds the combination and caches the resolved source-mode operator.
    pub fn from_terms(
        net: &Network,
        terms: Vec<(C64, String, Sideband)>,
    ) -> Result<Self, SchemeError> {
        let mut operator = OperatorPoly::zero();
        for (coeff, detector, sideband) in &terms {
            let n = net.detector_operator_at(detector, *sideband)?;
            operator = operator.add(&n.scale(*coeff));
        }
        Ok(PostProcessedObservable { terms, operator })
    }

    pub fn terms(&self) -> &[(C64, String, Sideband)] {
        &self.terms
    }

    /// The cached normal-ordered operator over source modes.
    pub fn operator(&self) -> &OperatorPoly {
        &self.operator
    }

    /// Classical expectation of the combination under a state assignment.
    pub fn expectation(&self, s: &StateAssignment) -> Result<C64, StateError> {
        s.expectation(&self.operator)
    }

    fn combine(parts: &[(C64, &PostProcessedObservable)]) -> Self {
        let mut terms = Vec::new();
        let mut operator = OperatorPoly::zero();
        for (scale, obs) in parts {
            for (c, d, sb) in &obs.terms {
                terms.push((c * scale, d.clone(), *sb));
            }
            operator = operator.add(&obs.operator.scale(*scale));
        }
        PostProcessedObservable { terms, operator }
    }
}

/// Local-oscillator configuration for the two-photon analysis:
/// sideband amplitudes `γ± = |γ±| e^{iθ±}` and the homodyne angle θ.
#[derive(Debug, Clone, Copy)]
pub struct HomodyneConfig {
    pub gamma_plus: C64,
    pub gamma_minus: C64,
    pub theta: f64,
}

impl HomodyneConfig {
    pub fn new(gamma_plus: C64, gamma_minus: C64, theta: f64) -> Result<Self, SchemeError> {
        if gamma_plus.norm() == 0.0 || gamma_minus.norm() == 0.0 {
            return Err(SchemeError::DegenerateLocalOscillator);
        }
        Ok(HomodyneConfig {
            gamma_plus,
            gamma_minus,
            theta,
        })
    }

    /// Phase-matched config with `γ± = |γ| e^{iθ}`.
    pub fn phase_matched(magnitude: f64, theta: f64) -> Result<Self, SchemeError> {
        let g = Complex64::from_polar(magnitude, theta);
        Self::new(g, g, theta)
    }
}

/// The balanced homodyne network: sources `b` (signal) and `l_i` (local
/// oscillator) on a 50:50 beamsplitter, detectors D1 and D2.
pub fn build_balanced_homodyne() -> Network {
    let bs = Element {
        name: "bs".into(),
        kind: ElementKind::beamsplitter_50_50(BsOrientation::MinusSecondInput),
        inputs: vec!["b".into(), "l_i".into()],
        outputs: vec!["c_o".into(), "d_o".into()],
    };
    let mut detectors = BTreeMap::new();
    detectors.insert("D1".to_string(), "c_o".to_string());
    detectors.insert("D2".to_string(), "d_o".to_string());
    Network::new(vec![bs], vec!["b".into(), "l_i".into()], detectors)
}

/// The eight-port network: signal `b` and local oscillator `l_i` split on
/// BS1/BS3 (with vacuum ports `e_i`, `f_i`), one balanced detection on BS2
/// (D1, D2) and one on BS4 after a π/2 phase rotation (D3, D4).
pub fn build_eight_port() -> Network {
    build_eight_port_with_phase(FRAC_PI_2)
}

/// Eight-port network with an explicit phase-rotator angle. The recovery
/// identities hold for the canonical π/2; other angles are for exploration.
pub fn build_eight_port_with_phase(pr_phase: f64) -> Network {
    let split = |name: &str, inputs: [&str; 2], outputs: [&str; 2], orientation| Element {
        name: name.into(),
        kind: ElementKind::beamsplitter_50_50(orientation),
        inputs: inputs.iter().map(|s| s.to_string()).collect(),
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    let elements = vec![
        // b_(1) = (b - e_i)/√2, b_(2) = (b + e_i)/√2
        split(
            "bs1",
            ["b", "e_i"],
            ["b_1", "b_2"],
            BsOrientation::MinusSecondInputSwapped,
        ),
        // l_(0)i = (l_i - f_i)/√2, l_(1)i = (l_i + f_i)/√2
        split(
            "bs3",
            ["l_i", "f_i"],
            ["l_0i", "l_1i"],
            BsOrientation::MinusSecondInputSwapped,
        ),
        Element {
            name: "pr".into(),
            kind: ElementKind::PhaseRotator { phi: pr_phase },
            inputs: vec!["l_1i".into()],
            outputs: vec!["l_14i".into()],
        },
        // c_(1)o = (b_(1) + l_(0)i)/√2, d_(1)o = (l_(0)i - b_(1))/√2
        split(
            "bs2",
            ["b_1", "l_0i"],
            ["c_1o", "d_1o"],
            BsOrientation::MinusFirstInput,
        ),
        // c_(2)o = (b_(2) - l_(1/4)i)/√2, d_(2)o = (b_(2) + l_(1/4)i)/√2
        split(
            "bs4",
            ["b_2", "l_14i"],
            ["c_2o", "d_2o"],
            BsOrientation::MinusSecondInputSwapped,
        ),
    ];
    let mut detectors = BTreeMap::new();
    detectors.insert("D1".to_string(), "c_1o".to_string());
    detectors.insert("D2".to_string(), "d_1o".to_string());
    detectors.insert("D3".to_string(), "c_2o".to_string());
    detectors.insert("D4".to_string(), "d_2o".to_string());
    Network::new(
        elements,
        vec!["b".into(), "e_i".into(), "l_i".into(), "f_i".into()],
        detectors,
    )
}

fn expect_topology(net: &Network, sources: &[&str], detectors: &[&str]) -> Result<(), SchemeError> {
    let have: Vec<String> = net.detector_names();
    let want: Vec<String> = detectors.iter().map(|s| s.to_string()).collect();
    if have != want {
        return Err(SchemeError::WrongTopology(format!(
            "expected detectors {want:?}, found {have:?}"
        )));
    }
    let mut have_src = net.sources().to_vec();
    have_src.sort();
    let mut want_src: Vec<String> = sources.iter().map(|s| s.to_string()).collect();
    want_src.sort();
    if have_src != want_src {
        return Err(SchemeError::WrongTopology(format!(
            "expected sources {want_src:?}, found {have_src:?}"
        )));
    }
    Ok(())
}

/// `ŝ = n̂_D1 - n̂_D2` on the balanced homodyne network; equals
/// `l_i† b + b† l_i` over source modes.
pub fn observable_s(net: &Network) -> Result<PostProcessedObservable, SchemeError> {
    expect_topology(net, &["b", "l_i"], &["D1", "D2"])?;
    PostProcessedObservable::from_terms(
        net,
        vec![
            (C64::new(1.0, 0.0), "D1".into(), Sideband::Single),
            (C64::new(-1.0, 0.0), "D2".into(), Sideband::Single),
        ],
    )
}

fn expect_eight_port(net: &Network) -> Result<(), SchemeError> {
    expect_topology(net, &["b", "e_i", "l_i", "f_i"], &["D1", "D2", "D3", "D4"])
}

/// `ŝ_D1D2 = 2(n̂_D1 - n̂_D2)` on the eight-port network.
pub fn observable_s_d1d2(net: &Network) -> Result<PostProcessedObservable, SchemeError> {
    expect_eight_port(net)?;
    s_d1d2_at(net, Sideband::Single)
}

/// `ŝ_D3D4 = 2i(n̂_D4 - n̂_D3)` on the eight-port network. The purely
/// imaginary prefactor lives in post-processing only.
pub fn observable_s_d3d4(net: &Network) -> Result<PostProcessedObservable, SchemeError> {
    expect_eight_port(net)?;
    s_d3d4_at(net, Sideband::Single)
}

fn s_d1d2_at(net: &Network, sb: Sideband) -> Result<PostProcessedObservable, SchemeError> {
    PostProcessedObservable::from_terms(
        net,
        vec![
            (C64::new(2.0, 0.0), "D1".into(), sb),
            (C64::new(-2.0, 0.0), "D2".into(), sb),
        ],
    )
}

fn s_d3d4_at(net: &Network, sb: Sideband) -> Result<PostProcessedObservable, SchemeError> {
    PostProcessedObservable::from_terms(
        net,
        vec![
            (C64::new(0.0, 2.0), "D4".into(), sb),
            (C64::new(0.0, -2.0), "D3".into(), sb),
        ],
    )
}

/// Recovery observables for the signal annihilation and creation operators:
/// `t̂_b+ = (ŝ_D1D2 + ŝ_D3D4)/(2γ*)` and `t̂_b- = (ŝ_D1D2 - ŝ_D3D4)/(2γ)`,
/// so that `⟨t̂_b+⟩ = ⟨b̂⟩` and `⟨t̂_b-⟩ = ⟨b̂†⟩` whenever `l_i` carries the
/// coherent amplitude γ and `e_i`, `f_i` are vacuum.
pub fn recover_b(
    net: &Network,
    gamma: C64,
) -> Result<(PostProcessedObservable, PostProcessedObservable), SchemeError> {
    if gamma.norm() == 0.0 {
        return Err(SchemeError::ZeroLocalOscillator);
    }
    let s12 = observable_s_d1d2(net)?;
    let s34 = observable_s_d3d4(net)?;
    let half_over_conj = C64::new(0.5, 0.0) / gamma.conj();
    let half_over = C64::new(0.5, 0.0) / gamma;
    let t_plus = PostProcessedObservable::combine(&[
        (half_over_conj, &s12),
        (half_over_conj, &s34),
    ]);
    let t_minus = PostProcessedObservable::combine(&[
        (half_over, &s12),
        (-half_over, &s34),
    ]);
    Ok((t_plus, t_minus))
}

/// Amplitude and phase quadratures of the two-photon formalism, plus the
/// θ-projection `b_θ = cosθ·b₁ + sinθ·b₂`.
#[derive(Debug, Clone)]
pub struct SidebandQuadratures {
    pub b1: OperatorPoly,
    pub b2: OperatorPoly,
    pub b_theta: OperatorPoly,
}

/// `b₁ = (b₊ + b₋†)/√2`, `b₂ = (b₊ - b₋†)/(√2 i)` over modes `(b,+)`,
/// `(b,-)`.
pub fn sideband_quadratures(theta: f64) -> SidebandQuadratures {
    let bp = OperatorPoly::annihilation(ModeId::at("b", Sideband::Plus));
    let bm_dag = OperatorPoly::creation(ModeId::at("b", Sideband::Minus));
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let b1 = bp.add(&bm_dag).scale(s);
    // 1/(√2 i) = -i/√2
    let b2 = bp.sub(&bm_dag).scale(s * C64::new(0.0, -1.0));
    let b_theta = b1
        .scale(C64::new(theta.cos(), 0.0))
        .add(&b2.scale(C64::new(theta.sin(), 0.0)));
    SidebandQuadratures { b1, b2, b_theta }
}

/// Outcome of the balanced-homodyne accessibility check for `b_θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessibilityDecision {
    pub accessible: bool,
    /// Determinant `2 γ₊ γ₋*` of the constraint matrix; the certificate
    /// that only the trivial solution exists.
    pub determinant: C64,
}

/// Conventional balanced homodyne cannot isolate `⟨b_θ⟩` from the sideband
/// combinations `α⟨ŝ₊⟩ + β⟨ŝ₋⟩`: the constraint matrix
/// `((γ₊, γ₋*), (-γ₊, γ₋*))` has determinant `2γ₊γ₋*`, nonzero for any
/// nonzero local-oscillator amplitudes.
pub fn check_quadrature_accessibility(
    gamma_plus: C64,
    gamma_minus: C64,
) -> Result<AccessibilityDecision, SchemeError> {
    if gamma_plus.norm() == 0.0 || gamma_minus.norm() == 0.0 {
        return Err(SchemeError::DegenerateLocalOscillator);
    }
    let determinant = C64::new(2.0, 0.0) * gamma_plus * gamma_minus.conj();
    Ok(AccessibilityDecision {
        accessible: determinant.norm() <= 1e-15,
        determinant,
    })
}

/// The eight-port two-photon observable
/// `t̂_θ = (t̂_D1D2+ + t̂_D3D4-)/2` with
/// `t̂_D1D2+ = (ŝ_D1D2+/|γ₊| + ŝ_D1D2-/|γ₋|)/√2` and
/// `t̂_D3D4- = (ŝ_D3D4+/|γ₊| - ŝ_D3D4-/|γ₋|)/√2`.
/// Under the phase choice `θ± = θ` (enforced) its expectation equals
/// `⟨b_θ⟩` for every signal sideband state.
pub fn observable_t_theta(
    net: &Network,
    config: &HomodyneConfig,
) -> Result<PostProcessedObservable, SchemeError> {
    expect_eight_port(net)?;
    check_two_photon_config(config)?;
    let mag = config.gamma_plus.norm();
    let s12p = s_d1d2_at(net, Sideband::Plus)?;
    let s12m = s_d1d2_at(net, Sideband::Minus)?;
    let s34p = s_d3d4_at(net, Sideband::Plus)?;
    let s34m = s_d3d4_at(net, Sideband::Minus)?;
    // 1/(2·√2·|γ|) applied to (s12+ + s12-) + (s34+ - s34-)
    let w = C64::new(1.0 / (2.0 * std::f64::consts::SQRT_2 * mag), 0.0);
    Ok(PostProcessedObservable::combine(&[
        (w, &s12p),
        (w, &s12m),
        (w, &s34p),
        (-w, &s34m),
    ]))
}

fn check_two_photon_config(config: &HomodyneConfig) -> Result<(), SchemeError> {
    if config.gamma_plus.norm() == 0.0 || config.gamma_minus.norm() == 0.0 {
        return Err(SchemeError::DegenerateLocalOscillator);
    }
    let theta_plus = config.gamma_plus.arg();
    let theta_minus = config.gamma_minus.arg();
    let residual = |phase: f64| {
        let d = (phase - config.theta).rem_euclid(2.0 * std::f64::consts::PI);
        d.min(2.0 * std::f64::consts::PI - d)
    };
    if residual(theta_plus) > 1e-9 || residual(theta_minus) > 1e-9 {
        return Err(SchemeError::PhaseMismatch {
            plus: theta_plus,
            minus: theta_minus,
        });
    }
    let (mp, mm) = (config.gamma_plus.norm(), config.gamma_minus.norm());
    if (mp - mm).abs() > 1e-12 * mp.max(mm) {
        return Err(SchemeError::AmplitudeMismatch { plus: mp, minus: mm });
    }
    Ok(())
}

/// Single-frequency eight-port assignment: `l_i` coherent γ, vacuum ports
/// vacuum, and the given signal state on `b`.
pub fn eight_port_assignment(signal: ModeState, gamma: C64) -> StateAssignment {
    StateAssignment::new()
        .with(ModeId::single("b"), signal)
        .with(ModeId::single("l_i"), ModeState::Coherent(gamma))
        .with(ModeId::single("e_i"), ModeState::Vacuum)
        .with(ModeId::single("f_i"), ModeState::Vacuum)
}

/// Two-photon eight-port assignment: signal sideband states on `(b,±)`,
/// local-oscillator coherent amplitudes `γ±` on `(l_i,±)`, vacuum elsewhere.
pub fn two_photon_assignment(
    signal_plus: ModeState,
    signal_minus: ModeState,
    config: &HomodyneConfig,
) -> StateAssignment {
    StateAssignment::new()
        .with(ModeId::at("b", Sideband::Plus), signal_plus)
        .with(ModeId::at("b", Sideband::Minus), signal_minus)
        .with(
            ModeId::at("l_i", Sideband::Plus),
            ModeState::Coherent(config.gamma_plus),
        )
        .with(
            ModeId::at("l_i", Sideband::Minus),
            ModeState::Coherent(config.gamma_minus),
        )
}
