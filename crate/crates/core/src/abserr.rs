//! Two-gate composites that cancel a constant offset ξ in the rotation angle.
//!
//! `U_A(Θ, φ) = U(−Θ/2, π+φ) · U(Θ/2, φ)`. Because `U(θ, π+φ) = U(−θ, φ)`,
//! an offset entering both gates turns the product into
//! `U(Θ/2 − ξ, φ) · U(Θ/2 + ξ, φ) = U(Θ, φ)` for every ξ. Under the combined
//! model `θ → θ(1+ε) + ξ` the pair reproduces `U(Θ(1+ε), φ)` exactly, which
//! is why wrapping preserves the relative-error order of any sequence.

use std::f64::consts::PI;

use crate::deriv::ErrorModel;
use crate::error::{validation, Result};
use crate::gates::{CompositeSequence, Family, PhasedGate};
use crate::smallmat::Mat4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbsoluteComposite {
    target_theta: f64,
    phi: f64,
}

impl AbsoluteComposite {
    pub fn new(target_theta: f64, phi: f64) -> Result<Self> {
        if !target_theta.is_finite() || !phi.is_finite() {
            return validation("absolute composite angles must be finite");
        }
        Ok(Self { target_theta, phi })
    }

    pub fn target_theta(&self) -> f64 {
        self.target_theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    /// The two constituent gates in application order.
    pub fn gates(&self) -> [PhasedGate; 2] {
        let half = 0.5 * self.target_theta;
        [
            PhasedGate::new(half, self.phi).expect("finite"),
            PhasedGate::new(-half, PI + self.phi).expect("finite"),
        ]
    }
}

/// Propagator with the offset ξ added to both constituent angles.
pub fn absolute_composite_propagator(c: &AbsoluteComposite, xi: f64) -> Mat4 {
    absolute_composite_propagator_with(c, &ErrorModel::absolute(xi))
}

/// Propagator under a combined relative and absolute distortion.
pub fn absolute_composite_propagator_with(c: &AbsoluteComposite, err: &ErrorModel) -> Mat4 {
    let [first, second] = c.gates();
    second.distorted(err) * first.distorted(err)
}

/// Replace every gate `U(θ, φ)` of `seq` by `U_A(θ, φ)`.
///
/// The terminal phase gate and target angle are kept. The family becomes
/// [`Family::Absolute`] for a single gate and [`Family::Combined`] otherwise.
pub fn wrap_sequence_absolute(seq: &CompositeSequence) -> CompositeSequence {
    let gates: Vec<PhasedGate> = seq
        .gates()
        .iter()
        .flat_map(|g| {
            AbsoluteComposite::new(g.theta(), g.phi())
                .expect("gate angles are finite")
                .gates()
        })
        .collect();
    let family = if seq.family() == Family::Single {
        Family::Absolute
    } else {
        Family::Combined
    };
    CompositeSequence::new(gates, seq.terminal_phase(), seq.target_theta(), family)
        .expect("non-empty")
}
