//! Published broadband and passband sequences.
//!
//! Rows with closed-form phases are built for any target angle; rows given
//! only as decimals (three digits, in units of π) exist for `Θ = π/4` and are
//! stored exactly as printed, so their zero-error fidelity is limited by the
//! ~1e−3 rad quantization. [`crate::solver::refine`] polishes them to full
//! precision.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::{CompositeSequence, Family, PhasedGate};
use crate::error::{validation, Result};

/// A named catalog sequence together with the table row it comes from.
#[derive(Debug, Clone, PartialEq)]
pub struct CatalogEntry {
    pub name: String,
    pub source: String,
    /// Phases follow from closed-form expressions (no decimal rounding).
    pub analytic: bool,
    pub sequence: CompositeSequence,
}

// Decimal rows, phases in units of π, leading gate first.
const BB3_PHASES: [f64; 7] = [0.0, 1.725, 0.244, 1.127, 0.351, 1.785, 1.042];
/// The tabulated fourth-order broadband row. It lists nine values while its
/// total angle of 3.75π admits only eight gates; see [`Bb4Reading`].
pub const BB4_PRINTED_PHASES: [f64; 9] =
    [1.0, 0.170, 0.170, 1.374, 0.677, 1.598, 1.818, 0.528, 1.995];

/// Ways of turning the nine printed fourth-order values into an
/// eight-gate sequence of total angle 3.75π.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bb4Reading {
    /// The value at this position is a typo and is removed.
    DropPhase(usize),
    /// The last value is the phase of the terminal gate `F(φ_{N+1})`.
    TerminalPhase,
}

/// Reading adopted by the catalog. It is the only one whose zero-order
/// residual vanishes; every deletion leaves a residual above 1e−2.
pub const BB4_READING: Bb4Reading = Bb4Reading::TerminalPhase;
const BB5_PHASES: [f64; 10] = [
    1.0, 0.065, 2.257, 1.826, 1.020, 0.487, 1.452, 1.671, 0.132, 0.812,
];
const BB6_PHASES: [f64; 12] = [
    1.0, 2.193, 1.933, 0.737, 1.932, 1.286, 0.641, 1.531, 1.983, 1.240, 2.077, 0.579,
];
const PB13_PHASES: [f64; 9] = [0.0, 0.076, 1.604, 1.851, 0.595, 1.443, 0.751, 0.691, 1.111];
const PB33_PHASES: [f64; 6] = [1.0, 0.091, 0.644, 1.866, 0.941, 1.596];

fn check_theta(theta: f64) -> Result<()> {
    if !(theta.is_finite() && theta > 0.0 && theta <= PI) {
        return validation(format!("target angle must lie in (0, π], got {theta}"));
    }
    Ok(())
}

fn require_quarter_pi(theta: f64, what: &str) -> Result<()> {
    if (theta - FRAC_PI_4).abs() > 1e-12 {
        return validation(format!("{what} is tabulated only for Θ = π/4"));
    }
    Ok(())
}

/// Leading gate `lead`, then one gate of angle `chain_angle` per phase.
pub(crate) fn chain_sequence(
    lead: (f64, f64),
    chain_angle: f64,
    chain_phases: &[f64],
    terminal: f64,
    target_theta: f64,
    family: Family,
) -> Result<CompositeSequence> {
    let mut gates = Vec::with_capacity(chain_phases.len() + 1);
    gates.push(PhasedGate::new(lead.0, lead.1)?);
    for &p in chain_phases {
        gates.push(PhasedGate::new(chain_angle, p)?);
    }
    CompositeSequence::new(gates, terminal, target_theta, family)
}

/// Eight-gate shortened sequence built from the printed row under `reading`.
pub fn bb4_candidate(reading: Bb4Reading) -> Result<CompositeSequence> {
    let p = &BB4_PRINTED_PHASES;
    let (chain, terminal): (Vec<f64>, f64) = match reading {
        Bb4Reading::DropPhase(dropped) => {
            if dropped == 0 || dropped >= p.len() {
                return validation("only one of the non-leading printed phases may be dropped");
            }
            let chain = (1..p.len())
                .filter(|&i| i != dropped)
                .map(|i| p[i] * PI)
                .collect();
            (chain, 0.0)
        }
        Bb4Reading::TerminalPhase => (p[1..8].iter().map(|x| x * PI).collect(), p[8] * PI),
    };
    chain_sequence(
        (FRAC_PI_4, PI),
        FRAC_PI_2,
        &chain,
        terminal,
        FRAC_PI_4,
        Family::Broadband(4),
    )
}

fn decimal_chain(
    printed: &[f64],
    lead_theta: f64,
    chain_angle: f64,
    target: f64,
    family: Family,
) -> Result<CompositeSequence> {
    let chain: Vec<f64> = printed[1..].iter().map(|p| p * PI).collect();
    chain_sequence(
        (lead_theta, printed[0] * PI),
        chain_angle,
        &chain,
        0.0,
        target,
        family,
    )
}

/// Broadband sequence of order `n` (1…6).
pub fn broadband(n: u32, theta: f64) -> Result<CatalogEntry> {
    check_theta(theta)?;
    let family = Family::Broadband(n);
    let (sequence, analytic) = match n {
        1 => {
            let phi = (-theta / PI).acos();
            let seq = chain_sequence(
                (theta, 0.0),
                FRAC_PI_2,
                &[phi, 3.0 * phi],
                -2.0 * phi,
                theta,
                family,
            )?;
            (seq, true)
        }
        2 => {
            let phi = (-theta / (2.0 * PI)).acos();
            let seq = CompositeSequence::from_angles(
                &[
                    (theta, 0.0),
                    (FRAC_PI_2, phi),
                    (PI, 3.0 * phi),
                    (FRAC_PI_2, phi),
                ],
                0.0,
                theta,
                family,
            )?;
            (seq, true)
        }
        3 => {
            require_quarter_pi(theta, "BROADBAND(3)")?;
            (
                decimal_chain(&BB3_PHASES, theta, FRAC_PI_2, theta, family)?,
                false,
            )
        }
        4 => {
            require_quarter_pi(theta, "BROADBAND(4)")?;
            (bb4_candidate(BB4_READING)?, false)
        }
        5 => {
            require_quarter_pi(theta, "BROADBAND(5)")?;
            (
                decimal_chain(&BB5_PHASES, FRAC_PI_4, FRAC_PI_2, theta, family)?,
                false,
            )
        }
        6 => {
            require_quarter_pi(theta, "BROADBAND(6)")?;
            (
                decimal_chain(&BB6_PHASES, FRAC_PI_4, FRAC_PI_2, theta, family)?,
                false,
            )
        }
        _ => return validation(format!("no broadband catalog entry of order {n}")),
    };
    Ok(CatalogEntry {
        name: format!("bb{n}"),
        source: format!("Table I, n={n}"),
        analytic,
        sequence,
    })
}

/// BROADBAND(2) before fusing its two equal-phase middle gates.
pub fn broadband2_unfused(theta: f64) -> Result<CompositeSequence> {
    check_theta(theta)?;
    let phi = (-theta / (2.0 * PI)).acos();
    chain_sequence(
        (theta, 0.0),
        FRAC_PI_2,
        &[phi, 3.0 * phi, 3.0 * phi, phi],
        0.0,
        theta,
        Family::Broadband(2),
    )
}

/// Angles of the seven-gate passband rows.
///
/// The first narrowband condition of the `PASSBAND(1,2)` pattern reduces to
/// `Θ + 2π cos χ₁ cos χ₂ = 0`, so the two cosines must have opposite signs:
/// `cos χ₁ = −√(½ + Θ²/8π²)` and `cos χ₂ = +√(2Θ²/(4π² + Θ²))`.
fn chi(theta: f64) -> (f64, f64) {
    let t2 = theta * theta;
    let chi1 = (-(0.5 + t2 / (8.0 * PI * PI)).sqrt()).acos();
    let chi2 = (2.0 * t2 / (4.0 * PI * PI + t2)).sqrt().acos();
    (chi1, chi2)
}

/// Passband sequence robust to order `n1` around ε = 0 and `n2` around ε = −1.
pub fn passband(n1: u32, n2: u32, theta: f64) -> Result<CatalogEntry> {
    check_theta(theta)?;
    let family = Family::Passband(n1, n2);
    let (sequence, analytic) = match (n1, n2) {
        (1, 1) => {
            let phi = (-theta / (2.0 * PI)).acos();
            (
                chain_sequence((theta, 0.0), PI, &[phi, -phi], 0.0, theta, family)?,
                true,
            )
        }
        (2, 1) => {
            let (c1, c2) = chi(theta);
            let chain = [-c1, -c1 + c2, c1 + c2, c1 - c2, -c1 - c2, PI - c1];
            (
                chain_sequence((theta, 0.0), FRAC_PI_2, &chain, 0.0, theta, family)?,
                true,
            )
        }
        (1, 2) => {
            let (c1, c2) = chi(theta);
            let chain = [c1, c1 + c2, -c1 + c2, -c1 - c2, c1 - c2, PI + c1];
            (
                chain_sequence((theta, 0.0), FRAC_PI_2, &chain, 0.0, theta, family)?,
                true,
            )
        }
        (2, 2) => {
            let phi = (-theta / (4.0 * PI)).acos();
            let seq = chain_sequence(
                (theta, 0.0),
                PI,
                &[phi, -phi, -phi, phi],
                0.0,
                theta,
                family,
            )?;
            (seq, true)
        }
        (1, 3) => {
            require_quarter_pi(theta, "PASSBAND(1,3)")?;
            (
                decimal_chain(&PB13_PHASES, theta, FRAC_PI_2, theta, family)?,
                false,
            )
        }
        (3, 3) => {
            require_quarter_pi(theta, "PASSBAND(3,3)")?;
            (
                decimal_chain(&PB33_PHASES, PI - theta, PI, theta, family)?,
                false,
            )
        }
        _ => return validation(format!("no passband catalog entry for orders ({n1},{n2})")),
    };
    Ok(CatalogEntry {
        name: format!("pb{n1}{n2}"),
        source: format!("Table II, n1={n1} n2={n2}"),
        analytic,
        sequence,
    })
}

/// All broadband rows at `Θ = π/4`.
pub fn table1() -> Vec<CatalogEntry> {
    table1_at(FRAC_PI_4).expect("tabulated row")
}

/// All passband rows at `Θ = π/4`.
pub fn table2() -> Vec<CatalogEntry> {
    table2_at(FRAC_PI_4).expect("tabulated row")
}

/// Broadband rows at `theta`; decimal rows exist only for `Θ = π/4`.
pub fn table1_at(theta: f64) -> Result<Vec<CatalogEntry>> {
    (1..=6).map(|n| broadband(n, theta)).collect()
}

/// Passband rows at `theta`; decimal rows exist only for `Θ = π/4`.
pub fn table2_at(theta: f64) -> Result<Vec<CatalogEntry>> {
    [(1, 1), (2, 1), (1, 2), (2, 2), (1, 3), (3, 3)]
        .into_iter()
        .map(|(a, b)| passband(a, b, theta))
        .collect()
}

/// Look up an entry by short name (`bb1` … `bb6`, `pb11`, `pb21`, …).
pub fn by_name(name: &str, theta: f64) -> Result<CatalogEntry> {
    let lower = name.to_ascii_lowercase();
    let digits = |s: &str| -> Option<Vec<u32>> { s.chars().map(|c| c.to_digit(10)).collect() };
    if let Some(rest) = lower.strip_prefix("bb") {
        if let Some(d) = digits(rest) {
            if let [n] = d[..] {
                return broadband(n, theta);
            }
        }
    }
    if let Some(rest) = lower.strip_prefix("pb") {
        if let Some(d) = digits(rest) {
            if let [a, b] = d[..] {
                return passband(a, b, theta);
            }
        }
    }
    validation(format!("unknown catalog entry '{name}'"))
}
