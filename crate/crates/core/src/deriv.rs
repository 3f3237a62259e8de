//! Error models and analytic ε-derivatives of composite propagators.
//!
//! A single distorted gate obeys
//! `∂^l/∂ε^l U(θ(1+ε)+ξ, φ) = θ^l · U(θ(1+ε)+ξ + lπ/2, φ)`, and derivatives
//! of a product follow the multinomial (general Leibniz) rule. Two
//! evaluation routes are provided: [`derivative_sequence`] enumerates the
//! multinomial tuples directly, while [`derivatives`] propagates truncated
//! Taylor series gate by gate. They are algebraically identical; the second
//! costs `O(N·n²)` matrix products and is what the solver calls.

use std::f64::consts::FRAC_PI_2;

use crate::gates::{phase_gate, phased_cphase, target_gate, CompositeSequence, Qubit};
use crate::smallmat::{Mat4, C64};

/// Systematic distortion `θ → θ(1+ε) + ξ` applied to every gate angle.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorModel {
    pub epsilon: f64,
    pub xi: f64,
}

impl ErrorModel {
    pub fn new(epsilon: f64, xi: f64) -> Self {
        Self { epsilon, xi }
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn relative(epsilon: f64) -> Self {
        Self { epsilon, xi: 0.0 }
    }

    pub fn absolute(xi: f64) -> Self {
        Self { epsilon: 0.0, xi }
    }

    /// The relative part is applied first, then the constant offset.
    pub fn apply(&self, theta: f64) -> f64 {
        theta * (1.0 + self.epsilon) + self.xi
    }
}

/// `∂^l/∂ε^l U(θ(1+ε), φ)` at `ε = 0`.
pub fn derivative_single_gate(theta: f64, phi: f64, l: u32) -> Mat4 {
    derivative_single_gate_at(theta, phi, l, &ErrorModel::none())
}

/// Same derivative evaluated at an arbitrary error point.
pub fn derivative_single_gate_at(theta: f64, phi: f64, l: u32, at: &ErrorModel) -> Mat4 {
    phased_cphase(at.apply(theta) + l as f64 * FRAC_PI_2, phi) * C64::from(theta.powi(l as i32))
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Visit every composition of `total` into `parts` non-negative integers.
fn for_each_composition(total: u32, parts: usize, f: &mut impl FnMut(&[u32])) {
    fn rec(rem: u32, idx: usize, buf: &mut Vec<u32>, f: &mut impl FnMut(&[u32])) {
        if idx + 1 == buf.len() {
            buf[idx] = rem;
            f(buf);
            return;
        }
        for k in 0..=rem {
            buf[idx] = k;
            rec(rem - k, idx + 1, buf, f);
        }
    }
    if parts == 0 {
        return;
    }
    let mut buf = vec![0; parts];
    rec(total, 0, &mut buf, f);
}

/// l-th ε-derivative of the composite propagator at `ε = 0`, by explicit
/// enumeration of the multinomial expansion.
pub fn derivative_sequence(seq: &CompositeSequence, l: u32) -> Mat4 {
    derivative_sequence_at(seq, l, &ErrorModel::none())
}

pub fn derivative_sequence_at(seq: &CompositeSequence, l: u32, at: &ErrorModel) -> Mat4 {
    let gates = seq.gates();
    // per-gate derivative tables, orders 0..=l
    let tables: Vec<Vec<Mat4>> = gates
        .iter()
        .map(|g| {
            (0..=l)
                .map(|j| derivative_single_gate_at(g.theta(), g.phi(), j, at))
                .collect()
        })
        .collect();
    let l_fact = factorial(l);
    let mut sum = Mat4::zeros();
    for_each_composition(l, gates.len(), &mut |orders| {
        let coeff = l_fact / orders.iter().map(|&o| factorial(o)).product::<f64>();
        let mut prod = Mat4::identity();
        for (s, &o) in orders.iter().enumerate() {
            prod = tables[s][o as usize] * prod;
        }
        sum += prod * C64::from(coeff);
    });
    terminal(seq) * sum
}

fn terminal(seq: &CompositeSequence) -> Mat4 {
    if seq.terminal_phase() == 0.0 {
        Mat4::identity()
    } else {
        phase_gate(seq.terminal_phase(), Qubit::Second)
    }
}

/// Normalized Taylor coefficients `∂^j C / j!` for `j = 0..=order`, expanded
/// around the error point `at` (the expansion variable is ε).
pub fn taylor_coefficients(seq: &CompositeSequence, order: u32, at: &ErrorModel) -> Vec<Mat4> {
    let n = order as usize;
    let mut acc = vec![Mat4::zeros(); n + 1];
    acc[0] = Mat4::identity();
    let mut gate_coeffs = vec![Mat4::zeros(); n + 1];
    let mut next = vec![Mat4::zeros(); n + 1];
    for g in seq.gates() {
        let base = at.apply(g.theta());
        let mut scale = 1.0;
        for (j, c) in gate_coeffs.iter_mut().enumerate() {
            *c = phased_cphase(base + j as f64 * FRAC_PI_2, g.phi()) * C64::from(scale);
            scale *= g.theta() / (j as f64 + 1.0);
        }
        for m in 0..=n {
            let mut s = Mat4::zeros();
            for j in 0..=m {
                s += gate_coeffs[j] * acc[m - j];
            }
            next[m] = s;
        }
        std::mem::swap(&mut acc, &mut next);
    }
    let t = terminal(seq);
    acc.into_iter().map(|c| t * c).collect()
}

/// Derivatives `∂^l C` for `l = 0..=order` at the error point `at`.
pub fn derivatives(seq: &CompositeSequence, order: u32, at: &ErrorModel) -> Vec<Mat4> {
    taylor_coefficients(seq, order, at)
        .into_iter()
        .enumerate()
        .map(|(l, c)| c * C64::from(factorial(l as u32)))
        .collect()
}

/// Residual matrices, one per derivative order, with their Frobenius norms.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    pub entries: Vec<Mat4>,
    pub norms: Vec<f64>,
    /// Global phase (`±1`) carried by the comparison target.
    pub target_sign: f64,
}

impl ResidualVector {
    fn from_entries(entries: Vec<Mat4>, target_sign: f64) -> Self {
        let norms = entries.iter().map(|m| m.norm()).collect();
        Self {
            entries,
            norms,
            target_sign,
        }
    }

    pub fn max_norm(&self) -> f64 {
        self.norms.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.norms.iter().sum()
    }
}

/// Sign `s ∈ {+1, −1}` for which `zero_order ≈ s·target`.
///
/// Merging two `π/2` rotations into a `π` rotation (or the shortened leading
/// gates) leaves the zero-error product equal to `−U(Θ)`, which is the same
/// gate up to global phase. The residual compares against whichever sign
/// the product actually carries.
pub fn target_sign(zero_order: &Mat4, target: &Mat4) -> f64 {
    let overlap = (target.adjoint() * zero_order).trace();
    if overlap.re < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `∂^l [C − s·U(Θ)]` at `ε = 0` for `l = 0..=n`.
pub fn broadband_residuals(seq: &CompositeSequence, n: u32) -> ResidualVector {
    broadband_residuals_at(seq, n, 0.0)
}

/// Broadband residuals with a fixed absolute offset ξ in every gate.
pub fn broadband_residuals_at(seq: &CompositeSequence, n: u32, xi: f64) -> ResidualVector {
    let mut d = derivatives(seq, n, &ErrorModel::absolute(xi));
    let target = target_gate(seq.target_theta());
    let sign = target_sign(&d[0], &target);
    d[0] -= target * C64::from(sign);
    ResidualVector::from_entries(d, sign)
}

/// Broadband entries around `ε = 0` and narrowband entries
/// `∂^l [C − 1]` around `ε = −1`, where every distorted angle vanishes.
pub fn passband_residuals(
    seq: &CompositeSequence,
    n1: u32,
    n2: u32,
) -> (ResidualVector, ResidualVector) {
    let broad = broadband_residuals(seq, n1);
    let mut d = derivatives(seq, n2, &ErrorModel::relative(-1.0));
    d[0] -= Mat4::identity();
    (broad, ResidualVector::from_entries(d, 1.0))
}

/// Closed forms of the first two narrowband conditions at `ε = −1`.
///
/// With every gate reduced to the identity, the first derivative is
/// `iσ_x ⊗ [[0, S₁*], [S₁, 0]]` with `S₁ = Σ_k θ_k e^{iφ_k}`, and the second
/// is `−(Σθ_k² ± 2Σ_{j<k} θ_jθ_k e^{∓i(φ_k−φ_j)})` on the diagonal of qubit 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NarrowbandConditions {
    /// `Σ_k θ_k e^{iφ_k}`.
    pub first: C64,
    /// `Σ_k θ_k² + 2 Σ_{j<k} θ_j θ_k e^{i(φ_j − φ_k)}`.
    pub second: C64,
}

pub fn narrowband_conditions(seq: &CompositeSequence) -> NarrowbandConditions {
    let gates = seq.gates();
    let first = gates
        .iter()
        .map(|g| C64::from_polar(g.theta(), g.phi()))
        .sum();
    let mut second = C64::from(gates.iter().map(|g| g.theta() * g.theta()).sum::<f64>());
    for (j, a) in gates.iter().enumerate() {
        for b in &gates[j + 1..] {
            second += C64::from_polar(2.0 * a.theta() * b.theta(), a.phi() - b.phi());
        }
    }
    NarrowbandConditions { first, second }
}

/// The narrowband conditions specialised to a leading `U(Θ, 0)` followed by
/// `N` gates of angle π: `Θ + π Σ e^{iφ_k} = 0` and
/// `Nπ² − Θ² + 2π² Σ_{k<l} e^{i(φ_k−φ_l)} = 0` (the second after using the
/// first). Returns `None` if the sequence does not have that shape.
pub fn pi_chain_conditions(seq: &CompositeSequence) -> Option<(C64, C64)> {
    let pi = std::f64::consts::PI;
    let gates = seq.gates();
    let theta = seq.target_theta();
    let lead = gates.first()?;
    if (lead.theta() - theta).abs() > 1e-12 || lead.phi() != 0.0 {
        return None;
    }
    let chain = &gates[1..];
    if chain.iter().any(|g| (g.theta() - pi).abs() > 1e-12) {
        return None;
    }
    let first = C64::from(theta)
        + chain
            .iter()
            .map(|g| C64::from_polar(pi, g.phi()))
            .sum::<C64>();
    let mut pairs = C64::from(0.0);
    for (k, a) in chain.iter().enumerate() {
        for b in &chain[k + 1..] {
            pairs += C64::from_polar(1.0, a.phi() - b.phi());
        }
    }
    let n = chain.len() as f64;
    let second = C64::from(n * pi * pi - theta * theta) + pairs * (2.0 * pi * pi);
    Some((first, second))
}
