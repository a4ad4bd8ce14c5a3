//! Property-based tests for the operator algebra, the expectation engine,
//! and network resolution.

use proptest::prelude::*;

use homodyne_core::algebra::{ModeId, OperatorPoly, C64};
use homodyne_core::fock::{oracle_expectation, FockConfig};
use homodyne_core::network::{BsOrientation, Element, ElementKind, Network};
use homodyne_core::states::{ModeState, StateAssignment};

const MODE_POOL: [&str; 4] = ["m0", "m1", "m2", "m3"];

fn c64() -> impl Strategy<Value = C64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| C64::new(re, im))
}

/// A single normal-form factor: (mode index, creator?).
fn factor() -> impl Strategy<Value = (usize, bool)> {
    (0usize..MODE_POOL.len(), any::<bool>())
}

/// Random polynomial: up to `terms` monomials of degree ≤ `degree`.
fn poly(terms: usize, degree: usize) -> impl Strategy<Value = OperatorPoly> {
    prop::collection::vec(
        (c64(), prop::collection::vec(factor(), 0..=degree)),
        1..=terms,
    )
    .prop_map(|monomials| {
        let mut p = OperatorPoly::zero();
        for (coeff, factors) in monomials {
            let mut term = OperatorPoly::constant(coeff);
            for (idx, creator) in factors {
                let mode = ModeId::single(MODE_POOL[idx]);
                let op = if creator {
                    OperatorPoly::creation(mode)
                } else {
                    OperatorPoly::annihilation(mode)
                };
                term = term.mul(&op);
            }
            p = p.add(&term);
        }
        p
    })
}

fn gaussian_state() -> impl Strategy<Value = ModeState> {
    (
        c64(),
        0.0f64..0.5,
        0.0f64..1.0,
        0.0f64..std::f64::consts::TAU,
    )
        .prop_map(|(mean, n_ex, frac, phase)| {
            let bound = (n_ex * (n_ex + 1.0)).sqrt();
            let m_anom = C64::from_polar(frac * bound * 0.999, phase);
            ModeState::gaussian(mean, n_ex, m_anom).unwrap()
        })
}

fn assignment() -> impl Strategy<Value = StateAssignment> {
    prop::collection::vec(gaussian_state(), MODE_POOL.len()).prop_map(|states| {
        let mut s = StateAssignment::new();
        for (label, state) in MODE_POOL.iter().zip(states) {
            s.insert(ModeId::single(*label), state);
        }
        s
    })
}

/// Pure Gaussian state (squeezed-displaced), the class the Fock oracle can
/// prepare: the anomalous moment saturates the Heisenberg bound.
fn pure_gaussian_state() -> impl Strategy<Value = ModeState> {
    (
        (-1.0f64..1.0, -1.0f64..1.0),
        0.0f64..0.5,
        0.0f64..std::f64::consts::TAU,
        any::<bool>(),
    )
        .prop_map(|((re, im), n_ex, phase, coherent)| {
            let mean = C64::new(1.5 * re / 2f64.sqrt(), 1.5 * im / 2f64.sqrt());
            if coherent {
                ModeState::Coherent(mean)
            } else {
                let bound = (n_ex * (n_ex + 1.0)).sqrt();
                ModeState::gaussian(mean, n_ex, C64::from_polar(bound, phase)).unwrap()
            }
        })
}

fn is_canonical(p: &OperatorPoly) -> bool {
    p.terms().all(|(key, coeff)| {
        coeff.norm() > 0.0
            && key.creators.windows(2).all(|w| w[0] <= w[1])
            && key.annihilators.windows(2).all(|w| w[0] <= w[1])
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn products_stay_canonical(a in poly(3, 3), b in poly(3, 3)) {
        let prod = a.mul(&b);
        prop_assert!(is_canonical(&prod));
        // idempotence: adding zero and rescaling by one change nothing
        prop_assert!(prod.add(&OperatorPoly::zero()).approx_eq(&prod, 0.0));
        prop_assert!(prod.scale(C64::new(1.0, 0.0)).approx_eq(&prod, 0.0));
    }

    #[test]
    fn multiplication_distributes(a in poly(3, 3), b in poly(3, 3), q in poly(3, 3)) {
        let lhs = a.mul(&b.add(&q));
        let rhs = a.mul(&b).add(&a.mul(&q));
        prop_assert!(lhs.approx_eq(&rhs, 1e-10));
    }

    #[test]
    fn multiplication_associates(a in poly(2, 3), b in poly(2, 3), q in poly(2, 3)) {
        let lhs = a.mul(&b).mul(&q);
        let rhs = a.mul(&b.mul(&q));
        prop_assert!(lhs.approx_eq(&rhs, 1e-9));
    }

    #[test]
    fn adjoint_is_involutive_antihomomorphism(a in poly(3, 3), b in poly(3, 3)) {
        prop_assert!(a.adjoint().adjoint().approx_eq(&a, 0.0));
        let lhs = a.mul(&b).adjoint();
        let rhs = b.adjoint().mul(&a.adjoint());
        prop_assert!(lhs.approx_eq(&rhs, 1e-10));
    }

    #[test]
    fn expectation_is_linear(
        p in poly(3, 3),
        q in poly(3, 3),
        alpha in c64(),
        s in assignment(),
    ) {
        let lhs = s.expectation(&p.scale(alpha).add(&q)).unwrap();
        let rhs = alpha * s.expectation(&p).unwrap() + s.expectation(&q).unwrap();
        prop_assert!((lhs - rhs).norm() < 1e-9, "lhs {lhs}, rhs {rhs}");
    }

    #[test]
    fn expectation_respects_adjoint(p in poly(3, 3), s in assignment()) {
        let lhs = s.expectation(&p.adjoint()).unwrap();
        let rhs = s.expectation(&p).unwrap().conj();
        prop_assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn expectation_is_positive(q in poly(3, 2), s in assignment()) {
        let v = s.expectation(&q.adjoint().mul(&q)).unwrap();
        prop_assert!(v.im.abs() < 1e-9);
        prop_assert!(v.re >= -1e-10, "negative second moment {v}");
    }
}

proptest! {
    // each case runs a truncated-Fock evaluation; keep the count modest
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn expectation_matches_fock_oracle(
        p in poly(2, 4),
        s0 in pure_gaussian_state(),
        s1 in pure_gaussian_state(),
    ) {
        let mut relabeled = OperatorPoly::zero();
        // restrict to two modes so the oracle dimension stays small
        for (key, coeff) in p.terms() {
            let mut term = OperatorPoly::constant(*coeff);
            for m in &key.creators {
                let idx = MODE_POOL.iter().position(|l| *l == m.label).unwrap() % 2;
                term = term.mul(&OperatorPoly::creation(ModeId::single(MODE_POOL[idx])));
            }
            for m in &key.annihilators {
                let idx = MODE_POOL.iter().position(|l| *l == m.label).unwrap() % 2;
                term = term.mul(&OperatorPoly::annihilation(ModeId::single(MODE_POOL[idx])));
            }
            relabeled = relabeled.add(&term);
        }
        let mut s = StateAssignment::new();
        s.insert(ModeId::single(MODE_POOL[0]), s0);
        s.insert(ModeId::single(MODE_POOL[1]), s1);
        let symbolic = s.expectation(&relabeled).unwrap();
        let cfg = FockConfig::new(
            60,
            vec![ModeId::single(MODE_POOL[0]), ModeId::single(MODE_POOL[1])],
        );
        let oracle = oracle_expectation(&relabeled, &s, &cfg).unwrap();
        prop_assert!(
            (symbolic - oracle).norm() <= 1e-8,
            "symbolic {symbolic} vs oracle {oracle}"
        );
    }

    #[test]
    fn network_resolution_is_order_independent(
        phi in 0.0f64..std::f64::consts::TAU,
        theta in 0.0f64..std::f64::consts::FRAC_PI_2,
        orient in 0usize..3,
        seed_perm in 0usize..6,
    ) {
        let orientation = match orient {
            0 => BsOrientation::MinusSecondInput,
            1 => BsOrientation::MinusSecondInputSwapped,
            _ => BsOrientation::MinusFirstInput,
        };
        let elements = vec![
            Element {
                name: "bsA".into(),
                kind: ElementKind::beamsplitter_50_50(orientation),
                inputs: vec!["x".into(), "y".into()],
                outputs: vec!["u".into(), "v".into()],
            },
            Element {
                name: "pr".into(),
                kind: ElementKind::PhaseRotator { phi },
                inputs: vec!["v".into()],
                outputs: vec!["p".into()],
            },
            Element {
                name: "bsB".into(),
                kind: ElementKind::BeamSplitter {
                    r: theta.sin(),
                    t: theta.cos(),
                    orientation,
                },
                inputs: vec!["u".into(), "p".into()],
                outputs: vec!["w".into(), "q".into()],
            },
        ];
        let mut detectors = std::collections::BTreeMap::new();
        detectors.insert("D1".to_string(), "w".to_string());
        detectors.insert("D2".to_string(), "q".to_string());
        let sources = vec!["x".to_string(), "y".to_string()];

        // all 3! listing orders of the same elements
        let perms: [[usize; 3]; 6] = [
            [0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0],
        ];
        let reference = Network::new(elements.clone(), sources.clone(), detectors.clone());
        prop_assert!(reference.validate().is_empty());
        let permuted = Network::new(
            perms[seed_perm].iter().map(|&i| elements[i].clone()).collect(),
            sources,
            detectors,
        );
        for port in ["w", "q"] {
            let a: std::collections::BTreeMap<_, _> =
                reference.resolve(port).unwrap().into_iter().collect();
            let b: std::collections::BTreeMap<_, _> =
                permuted.resolve(port).unwrap().into_iter().collect();
            prop_assert_eq!(a.len(), b.len());
            for (mode, coeff) in &a {
                prop_assert!((coeff - b[mode]).norm() < 1e-14);
            }
        }
    }
}
