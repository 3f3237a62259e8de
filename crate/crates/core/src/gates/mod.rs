//! Phased CPHASE gates, phase gates and composite sequences.
//!
//! Gate order: `CompositeSequence::gates()[0]` is applied first. In the usual
//! operator notation, where time runs from right to left, index 0 is the
//! rightmost factor, so the propagator is
//! `F(terminal) · U(θ_N, φ_N) ··· U(θ_1, φ_1) · U(θ_0, φ_0)`.
//!
//! Equality of propagators is always meant up to a global phase; the
//! fidelity in [`crate::analysis`] absorbs it.

pub mod catalog;
pub mod file;

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use crate::deriv::ErrorModel;
use crate::error::{validation, Result};
use crate::smallmat::{
    angle_distance, canonical_angle, kron2, sigma_phi, sigma_x, Mat2, Mat4, C64,
};

/// Relative tolerance for comparing declared gate angles.
const ANGLE_TOL: f64 = 1e-9;

/// One phased CPHASE rotation `U(θ, φ) = exp(iθ σ_x ⊗ σ_φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhasedGate {
    theta: f64,
    phi: f64,
}

impl PhasedGate {
    /// `phi` is stored in `[0, 2π)`; `theta` keeps its sign.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !theta.is_finite() || !phi.is_finite() {
            return validation(format!(
                "gate angles must be finite, got θ={theta}, φ={phi}"
            ));
        }
        Ok(Self {
            theta,
            phi: canonical_angle(phi),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn matrix(&self) -> Mat4 {
        phased_cphase(self.theta, self.phi)
    }

    /// Gate with its angle distorted by `err`.
    pub fn distorted(&self, err: &ErrorModel) -> Mat4 {
        phased_cphase(err.apply(self.theta), self.phi)
    }
}

/// `σ_x ⊗ σ_φ`.
pub fn xx_phi(phi: f64) -> Mat4 {
    kron2(&sigma_x(), &sigma_phi(phi))
}

/// `U(θ, φ) = cos θ · I + i sin θ · σ_x ⊗ σ_φ`.
pub fn phased_cphase(theta: f64, phi: f64) -> Mat4 {
    let (s, c) = theta.sin_cos();
    Mat4::identity() * C64::from(c) + xx_phi(phi) * C64::new(0.0, s)
}

/// Ideal target `U(Θ) = exp(iΘ σ_x ⊗ σ_x)`.
pub fn target_gate(theta: f64) -> Mat4 {
    phased_cphase(theta, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Qubit {
    First,
    Second,
}

/// `F(φ) = exp(−iφσ_z)` on the selected qubit.
pub fn phase_gate(phi: f64, qubit: Qubit) -> Mat4 {
    let f = Mat2::new(
        C64::from_polar(1.0, -phi),
        C64::from(0.0),
        C64::from(0.0),
        C64::from_polar(1.0, phi),
    );
    match qubit {
        Qubit::First => kron2(&f, &Mat2::identity()),
        Qubit::Second => kron2(&Mat2::identity(), &f),
    }
}

/// Which robustness conditions a sequence was designed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Single,
    Broadband(u32),
    Passband(u32, u32),
    Absolute,
    Combined,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Single => write!(f, "SINGLE"),
            Family::Broadband(n) => write!(f, "BROADBAND({n})"),
            Family::Passband(a, b) => write!(f, "PASSBAND({a},{b})"),
            Family::Absolute => write!(f, "ABSOLUTE"),
            Family::Combined => write!(f, "COMBINED"),
        }
    }
}

impl std::str::FromStr for Family {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase();
        let args = |prefix: &str| -> Option<Vec<u32>> {
            let inner = t
                .strip_prefix(prefix)?
                .strip_prefix('(')?
                .strip_suffix(')')?;
            inner.split(',').map(|x| x.trim().parse().ok()).collect()
        };
        match t.as_str() {
            "SINGLE" => return Ok(Family::Single),
            "ABSOLUTE" => return Ok(Family::Absolute),
            "COMBINED" => return Ok(Family::Combined),
            _ => {}
        }
        if let Some(v) = args("BROADBAND") {
            if let [n] = v[..] {
                return Ok(Family::Broadband(n));
            }
        }
        if let Some(v) = args("PASSBAND") {
            if let [a, b] = v[..] {
                return Ok(Family::Passband(a, b));
            }
        }
        validation(format!("unknown sequence family '{s}'"))
    }
}

/// Ordered list of phased gates plus the leading phase gate `F(terminal)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CompositeSequence {
    gates: Vec<PhasedGate>,
    terminal_phase: f64,
    target_theta: f64,
    family: Family,
}

impl CompositeSequence {
    pub fn new(
        gates: Vec<PhasedGate>,
        terminal_phase: f64,
        target_theta: f64,
        family: Family,
    ) -> Result<Self> {
        if gates.is_empty() {
            return validation("a composite sequence needs at least one gate");
        }
        if !terminal_phase.is_finite() || !target_theta.is_finite() {
            return validation("terminal phase and target angle must be finite");
        }
        Ok(Self {
            gates,
            terminal_phase: canonical_angle(terminal_phase),
            target_theta,
            family,
        })
    }

    /// Build from `(θ_k, φ_k)` pairs.
    pub fn from_angles(
        angles: &[(f64, f64)],
        terminal_phase: f64,
        target_theta: f64,
        family: Family,
    ) -> Result<Self> {
        let gates = angles
            .iter()
            .map(|&(t, p)| PhasedGate::new(t, p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(gates, terminal_phase, target_theta, family)
    }

    /// The uncorrected gate `U(Θ, 0)`.
    pub fn single(target_theta: f64) -> Result<Self> {
        Self::from_angles(&[(target_theta, 0.0)], 0.0, target_theta, Family::Single)
    }

    pub fn gates(&self) -> &[PhasedGate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn terminal_phase(&self) -> f64 {
        self.terminal_phase
    }

    pub fn target_theta(&self) -> f64 {
        self.target_theta
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn with_family(mut self, family: Family) -> Self {
        self.family = family;
        self
    }

    pub fn phases(&self) -> Vec<f64> {
        self.gates.iter().map(|g| g.phi).collect()
    }

    /// `Σ|θ_k|`, proportional to the sequence duration.
    pub fn total_angle(&self) -> f64 {
        self.gates.iter().map(|g| g.theta.abs()).sum()
    }

    pub fn propagator(&self, err: &ErrorModel) -> Mat4 {
        sequence_propagator(self, err)
    }

    /// Check the structural constraints of the broadband and passband
    /// families: the leading gate is `(Θ, 0)` or the shortened `(π/2−Θ, π)`
    /// / `(π−Θ, π)` form, every later gate rotates by `π/2` or `π`, and the
    /// number of `π/2` quanta leaves the zero-error product equal to `±U(Θ)`.
    pub fn check_shape(&self) -> Result<()> {
        if !matches!(self.family, Family::Broadband(_) | Family::Passband(..)) {
            return Ok(());
        }
        let theta = self.target_theta;
        let first = self.gates[0];
        let close = |a: f64, b: f64| (a - b).abs() <= ANGLE_TOL * b.abs().max(1.0);
        // quanta of π/2 absorbed by the leading gate
        let lead_quanta = if close(first.theta, theta) && angle_distance(first.phi, 0.0) < ANGLE_TOL
        {
            0
        } else if close(first.theta, FRAC_PI_2 - theta) && angle_distance(first.phi, PI) < ANGLE_TOL
        {
            1
        } else if close(first.theta, PI - theta) && angle_distance(first.phi, PI) < ANGLE_TOL {
            2
        } else {
            return validation(format!(
                "leading gate ({}, {}) does not match any canonical shape for Θ={theta}",
                first.theta, first.phi
            ));
        };
        let mut quanta = lead_quanta;
        for g in &self.gates[1..] {
            if close(g.theta, FRAC_PI_2) {
                quanta += 1;
            } else if close(g.theta, PI) {
                quanta += 2;
            } else {
                return validation(format!(
                    "non-initial gate angle {} is not π/2 or π",
                    g.theta
                ));
            }
        }
        if quanta % 2 != 0 {
            return validation("odd number of π/2 rotations cannot reproduce U(Θ) at zero error");
        }
        Ok(())
    }
}

/// Composite propagator with every gate angle distorted by `err`.
pub fn sequence_propagator(seq: &CompositeSequence, err: &ErrorModel) -> Mat4 {
    let mut acc = Mat4::identity();
    for g in &seq.gates {
        acc = g.distorted(err) * acc;
    }
    if seq.terminal_phase != 0.0 {
        acc = phase_gate(seq.terminal_phase, Qubit::Second) * acc;
    }
    acc
}

/// Convert phase-gate angles of the realization
/// `F(ϕ_{N+1}) U(θ_N) F(ϕ_N) ··· U(θ_0) F(ϕ_0)` (list `ϕ_0 … ϕ_{N+1}`) into
/// gate phases `φ_0 … φ_N` and the leading phase of the phased-gate form.
///
/// Uses `U(θ)F(b) = F(b)U(θ, −2b)`, giving `φ_l = −2 Σ_{k≤l} ϕ_k` and
/// `terminal = Σ_k ϕ_k`. Values are not reduced modulo 2π.
pub fn convert_phase_conventions(varphis: &[f64]) -> Result<(Vec<f64>, f64)> {
    if varphis.len() < 2 {
        return validation("need at least two phase-gate angles (ϕ_0 and ϕ_{N+1})");
    }
    if varphis.iter().any(|v| !v.is_finite()) {
        return validation("phase-gate angles must be finite");
    }
    let gate_count = varphis.len() - 1;
    let mut partial = 0.0;
    let phis = varphis[..gate_count]
        .iter()
        .map(|&v| {
            partial += v;
            -2.0 * partial
        })
        .collect();
    let terminal = varphis.iter().sum();
    Ok((phis, terminal))
}

/// Inverse of [`convert_phase_conventions`].
pub fn phase_gates_from_phases(phis: &[f64], terminal: f64) -> Result<Vec<f64>> {
    if phis.is_empty() {
        return validation("need at least one gate phase");
    }
    let mut out = Vec::with_capacity(phis.len() + 1);
    let mut prev = 0.0;
    for &p in phis {
        out.push(-(p - prev) / 2.0);
        prev = p;
    }
    out.push(terminal + prev / 2.0);
    Ok(out)
}

/// Propagator of the phase-gate realization with all gates at `θ_k`.
pub fn phase_gate_realization(thetas: &[f64], varphis: &[f64], err: &ErrorModel) -> Result<Mat4> {
    if varphis.len() != thetas.len() + 1 {
        return validation("need exactly one more phase-gate angle than gates");
    }
    let mut acc = phase_gate(varphis[0], Qubit::Second);
    for (k, &t) in thetas.iter().enumerate() {
        acc = phased_cphase(err.apply(t), 0.0) * acc;
        acc = phase_gate(varphis[k + 1], Qubit::Second) * acc;
    }
    Ok(acc)
}

/// Fuse neighbouring gates that share a phase. `U(a, φ)U(b, φ) = U(a+b, φ)`
/// holds for every error level, so the distorted propagator is unchanged.
pub fn merge_adjacent(seq: &CompositeSequence) -> CompositeSequence {
    let mut merged: Vec<PhasedGate> = Vec::with_capacity(seq.gates.len());
    for g in &seq.gates {
        match merged.last_mut() {
            Some(last) if angle_distance(last.phi, g.phi) < 1e-12 => last.theta += g.theta,
            _ => merged.push(*g),
        }
    }
    CompositeSequence {
        gates: merged,
        ..seq.clone()
    }
}
