//! Randomized invariant checks shared by the property tests and the
//! acceptance harness.

use std::f64::consts::{PI, TAU};

use cphase::abserr::{absolute_composite_propagator, AbsoluteComposite};
use cphase::analysis::{fidelity, infidelity, trace_overlap};
use cphase::deriv::{broadband_residuals, derivative_sequence_at};
use cphase::gates::file::{read_sequence, write_sequence};
use cphase::gates::{
    catalog, convert_phase_conventions, merge_adjacent, phase_gate_realization,
    phase_gates_from_phases, phased_cphase, sequence_propagator,
};
use cphase::iontrap::{hamiltonian_at, TrapConfig};
use cphase::smallmat::{
    kron2, mat_exp_hermitian_generator, pauli_string_product, sigma_phi, sigma_x, sigma_y, sigma_z,
    to_dynamic, CMatrix, Mat2, Mat4, OperatorExt, C64,
};
use cphase::solver::{solve, Shape, SolverConfig, SolverProblem};
use cphase::{CompositeSequence, ErrorModel, Family};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub type Outcome = Result<(), String>;

/// Run `test` on `cases` inputs drawn from `strategy`.
fn check<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Outcome {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

fn angle() -> impl Strategy<Value = f64> {
    -TAU..TAU
}

/// Random sequences of 1 to 5 gates with angles in [−π, π].
fn sequence() -> impl Strategy<Value = CompositeSequence> {
    (prop::collection::vec((-PI..PI, 0.0..TAU), 1..=5), 0.0..TAU).prop_map(|(angles, terminal)| {
        CompositeSequence::from_angles(&angles, terminal, angles[0].0, Family::Broadband(1))
            .unwrap()
    })
}

fn random_hermitian(entries: &[f64]) -> CMatrix {
    let m = CMatrix::from_fn(4, 4, |r, c| {
        C64::new(entries[4 * r + c], entries[16 + 4 * c + r])
    });
    (&m + m.adjoint()) * C64::from(0.5)
}

fn pauli(k: u8) -> Mat2 {
    match k % 4 {
        0 => Mat2::identity(),
        1 => sigma_x(),
        2 => sigma_y(),
        _ => sigma_z(),
    }
}

pub fn phased_cphase_is_unitary(cases: u32) -> Outcome {
    check(cases, (angle(), angle()), |(theta, phi)| {
        prop_assert!(phased_cphase(theta, phi).unitarity_defect() < 1e-12);
        Ok(())
    })
}

pub fn phase_pi_negates_the_angle(cases: u32) -> Outcome {
    check(cases, angle(), |theta| {
        prop_assert!((phased_cphase(theta, PI) - phased_cphase(-theta, 0.0)).norm() < 1e-12);
        Ok(())
    })
}

pub fn involutory_generator_exponential(cases: u32) -> Outcome {
    check(cases, (0u8..4, 0u8..4, -10.0..10.0f64), |(a, b, theta)| {
        prop_assume!(a % 4 != 0 || b % 4 != 0);
        let h = to_dynamic(&kron2(&pauli(a), &pauli(b)));
        let got = mat_exp_hermitian_generator(&h, theta).unwrap();
        let want =
            CMatrix::identity(4, 4) * C64::from(theta.cos()) + &h * C64::new(0.0, theta.sin());
        prop_assert!((got - want).norm() < 1e-12);
        Ok(())
    })
}

pub fn commuting_exponentials_add(cases: u32) -> Outcome {
    check(
        cases,
        (
            prop::collection::vec(-1.0..1.0f64, 32),
            -3.0..3.0f64,
            -3.0..3.0f64,
        ),
        |(entries, a, b)| {
            let h = random_hermitian(&entries);
            let lhs = mat_exp_hermitian_generator(&h, a).unwrap()
                * mat_exp_hermitian_generator(&h, b).unwrap();
            let rhs = mat_exp_hermitian_generator(&h, a + b).unwrap();
            prop_assert!((lhs - rhs).norm() < 1e-12);
            Ok(())
        },
    )
}

pub fn pauli_string_matches_explicit_product(cases: u32) -> Outcome {
    check(cases, prop::collection::vec(angle(), 1..=6), |phis| {
        let explicit = phis
            .iter()
            .fold(Mat2::identity(), |acc, &p| acc * sigma_phi(p));
        let closed = pauli_string_product(&phis).unwrap().matrix();
        prop_assert!((explicit - closed).norm() < 1e-12);
        Ok(())
    })
}

pub fn analytic_derivatives_match_finite_differences(cases: u32) -> Outcome {
    check(cases, (sequence(), -0.3..0.3f64), |(seq, eps)| {
        // five-point central difference of the analytic derivative one order below
        let h = 1e-3;
        for l in 1..=4u32 {
            let f = |d: f64| derivative_sequence_at(&seq, l - 1, &ErrorModel::relative(eps + d));
            let fd = (f(-2.0 * h) - f(-h) * C64::from(8.0) + f(h) * C64::from(8.0) - f(2.0 * h))
                / C64::from(12.0 * h);
            let exact = derivative_sequence_at(&seq, l, &ErrorModel::relative(eps));
            let scale = exact.norm().max(1.0);
            prop_assert!(
                (fd - exact).norm() / scale < 1e-5,
                "l={} err={}",
                l,
                (fd - exact).norm() / scale
            );
        }
        Ok(())
    })
}

pub fn propagator_finite_differences(cases: u32) -> Outcome {
    check(cases, sequence(), |seq| {
        let h = 1e-3;
        let f = |d: f64| seq.propagator(&ErrorModel::relative(d));
        let d1 = (f(-2.0 * h) - f(-h) * C64::from(8.0) + f(h) * C64::from(8.0) - f(2.0 * h))
            / C64::from(12.0 * h);
        let d2 = (f(-2.0 * h) * C64::from(-1.0) + f(-h) * C64::from(16.0)
            - f(0.0) * C64::from(30.0)
            + f(h) * C64::from(16.0)
            - f(2.0 * h))
            / C64::from(12.0 * h * h);
        let zero = ErrorModel::none();
        let e1 = derivative_sequence_at(&seq, 1, &zero);
        let e2 = derivative_sequence_at(&seq, 2, &zero);
        prop_assert!((d1 - e1).norm() / e1.norm().max(1.0) < 1e-5);
        prop_assert!((d2 - e2).norm() / e2.norm().max(1.0) < 1e-5);
        Ok(())
    })
}

pub fn phase_convention_round_trip(cases: u32) -> Outcome {
    check(
        cases,
        (
            prop::collection::vec(angle(), 2..=7),
            prop::collection::vec(-PI..PI, 6),
            -0.5..0.5f64,
        ),
        |(varphis, thetas_seed, eps)| {
            let n = varphis.len() - 1;
            let thetas = &thetas_seed[..n];
            let (phis, terminal) = convert_phase_conventions(&varphis).unwrap();
            let back = phase_gates_from_phases(&phis, terminal).unwrap();
            for (a, b) in back.iter().zip(&varphis) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let angles: Vec<(f64, f64)> =
                thetas.iter().copied().zip(phis.iter().copied()).collect();
            let seq = CompositeSequence::from_angles(&angles, terminal, 1.0, Family::Broadband(1))
                .unwrap();
            let err = ErrorModel::relative(eps);
            let realized = phase_gate_realization(thetas, &varphis, &err).unwrap();
            prop_assert!(infidelity(&realized, &sequence_propagator(&seq, &err)) < 1e-14);
            Ok(())
        },
    )
}

pub fn fidelity_is_symmetric_and_phase_blind(cases: u32) -> Outcome {
    check(cases, (sequence(), sequence(), angle()), |(a, b, gamma)| {
        let ua = a.propagator(&ErrorModel::none());
        let ub = b.propagator(&ErrorModel::none());
        let fab = fidelity(&ua, &ub).unwrap();
        prop_assert!((fab - fidelity(&ub, &ua).unwrap()).abs() < 1e-14);
        let shifted = ua * C64::from_polar(1.0, gamma);
        prop_assert!((fab - fidelity(&shifted, &ub).unwrap()).abs() < 1e-14);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&fab));
        prop_assert!((trace_overlap(&ua, &ua).norm() - 1.0).abs() < 1e-14);
        Ok(())
    })
}

pub fn minus_one_turns_every_sequence_into_the_identity(cases: u32) -> Outcome {
    check(cases, sequence(), |seq| {
        let phase_free =
            CompositeSequence::new(seq.gates().to_vec(), 0.0, seq.target_theta(), seq.family())
                .unwrap();
        let u = phase_free.propagator(&ErrorModel::relative(-1.0));
        prop_assert!(infidelity(&Mat4::identity(), &u) < 1e-14);
        Ok(())
    })
}

pub fn merging_keeps_the_distorted_propagator(cases: u32) -> Outcome {
    check(
        cases,
        (-PI..PI, 0.0..1.0f64, angle(), -0.5..0.5f64),
        |(theta, split, phi, eps)| {
            let seq = CompositeSequence::from_angles(
                &[
                    (theta * split, phi),
                    (theta * (1.0 - split), phi),
                    (0.7, phi + 1.0),
                ],
                0.3,
                theta,
                Family::Broadband(1),
            )
            .unwrap();
            let merged = merge_adjacent(&seq);
            prop_assert_eq!(merged.len(), 2);
            let err = ErrorModel::relative(eps);
            prop_assert!((merged.propagator(&err) - seq.propagator(&err)).norm() < 1e-12);
            Ok(())
        },
    )
}

pub fn absolute_composite_ignores_offsets(cases: u32) -> Outcome {
    check(cases, (1e-3..PI, angle(), -PI..PI), |(theta, phi, xi)| {
        let c = AbsoluteComposite::new(theta, phi).unwrap();
        let clean = absolute_composite_propagator(&c, 0.0);
        prop_assert!((absolute_composite_propagator(&c, xi) - clean).norm() < 1e-12);
        prop_assert!((clean - phased_cphase(theta, phi)).norm() < 1e-12);
        Ok(())
    })
}

pub fn analytic_broadband_rows_cancel_their_orders(cases: u32) -> Outcome {
    check(cases, 0.05..PI, |theta| {
        for n in [1u32, 2] {
            let entry = catalog::broadband(n, theta).unwrap();
            prop_assert!(broadband_residuals(&entry.sequence, n).max_norm() < 1e-9);
        }
        for (n1, n2) in [(1u32, 1u32), (2, 2)] {
            let entry = catalog::passband(n1, n2, theta).unwrap();
            let (broad, narrow) = cphase::deriv::passband_residuals(&entry.sequence, n1, n2);
            prop_assert!(broad.max_norm() < 1e-9 && narrow.max_norm() < 1e-9);
        }
        Ok(())
    })
}

pub fn sequence_csv_round_trip(cases: u32) -> Outcome {
    check(cases, sequence(), |seq| {
        let mut buf = Vec::new();
        write_sequence(&mut buf, &seq).unwrap();
        let back = read_sequence(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), seq.len());
        let err = ErrorModel::relative(0.1);
        prop_assert!((back.propagator(&err) - seq.propagator(&err)).norm() < 1e-13);
        Ok(())
    })
}

pub fn trap_hamiltonian_is_hermitian(cases: u32) -> Outcome {
    check(
        cases,
        (
            0.01..1.0f64,
            0.2..2.0f64,
            0.0..20.0f64,
            prop::collection::vec(angle(), 4),
        ),
        |(g, delta, t, z)| {
            let cfg = TrapConfig::new(g, delta, t.max(0.1)).with_phases([z[0], z[1]], [z[2], z[3]]);
            let h = hamiltonian_at(&cfg, t).matrix;
            prop_assert!(h.hermiticity_defect() < 1e-13 * h.norm().max(1.0));
            Ok(())
        },
    )
}

pub fn solver_is_deterministic_under_a_fixed_seed(cases: u32) -> Outcome {
    check(cases, (any::<u64>(), 0.1..(PI - 0.1)), |(seed, theta)| {
        let problem = SolverProblem::new(Family::Broadband(1), theta, Shape::TwoPulse).unwrap();
        let cfg = SolverConfig {
            rng_seed: seed,
            max_restarts: 20,
            ..Default::default()
        };
        let a = solve(&problem, &cfg).unwrap();
        let b = solve(&problem, &cfg).unwrap();
        prop_assert_eq!(a.sequence.phases(), b.sequence.phases());
        prop_assert_eq!(
            a.sequence.terminal_phase().to_bits(),
            b.sequence.terminal_phase().to_bits()
        );
        prop_assert_eq!(a.restarts_used, b.restarts_used);
        if a.converged {
            prop_assert!(a.residual_d <= cfg.residual_tolerance);
            prop_assert!(
                broadband_residuals(&a.sequence, 1).max_norm() <= 10.0 * cfg.residual_tolerance
            );
        }
        Ok(())
    })
}

pub type Suite = fn(u32) -> Outcome;

/// Every suite with its name.
#[allow(dead_code)]
pub const SUITES: &[(&str, Suite)] = &[
    ("phased_cphase_is_unitary", phased_cphase_is_unitary),
    ("phase_pi_negates_the_angle", phase_pi_negates_the_angle),
    (
        "involutory_generator_exponential",
        involutory_generator_exponential,
    ),
    ("commuting_exponentials_add", commuting_exponentials_add),
    (
        "pauli_string_matches_explicit_product",
        pauli_string_matches_explicit_product,
    ),
    (
        "analytic_derivatives_match_finite_differences",
        analytic_derivatives_match_finite_differences,
    ),
    (
        "propagator_finite_differences",
        propagator_finite_differences,
    ),
    ("phase_convention_round_trip", phase_convention_round_trip),
    (
        "fidelity_is_symmetric_and_phase_blind",
        fidelity_is_symmetric_and_phase_blind,
    ),
    (
        "minus_one_turns_every_sequence_into_the_identity",
        minus_one_turns_every_sequence_into_the_identity,
    ),
    (
        "merging_keeps_the_distorted_propagator",
        merging_keeps_the_distorted_propagator,
    ),
    (
        "absolute_composite_ignores_offsets",
        absolute_composite_ignores_offsets,
    ),
    (
        "analytic_broadband_rows_cancel_their_orders",
        analytic_broadband_rows_cancel_their_orders,
    ),
    ("sequence_csv_round_trip", sequence_csv_round_trip),
    (
        "trap_hamiltonian_is_hermitian",
        trap_hamiltonian_is_hermitian,
    ),
    (
        "solver_is_deterministic_under_a_fixed_seed",
        solver_is_deterministic_under_a_fixed_seed,
    ),
];
