//! Two ions coupled through one vibrational mode by a bichromatic
//! (Mølmer–Sørensen) drive.
//!
//! `H(t) = g Σ_k σ(ζ_k⁺) (a† e^{i(Δt − ζ_k⁻)} + a e^{−i(Δt − ζ_k⁻)})` with
//! `σ(ζ) = σ⁺e^{−iζ} + σ⁻e^{iζ}`, acting on qubit₁ ⊗ qubit₂ ⊗ phonon
//! (phonon index fastest). The commutator `[H(t₁), H(t₂)]` is a spin-only
//! operator that commutes with `H`, so the Magnus series stops after the
//! second term and
//!
//! ```text
//! U(T) = D(α) · exp(Ω₂),
//! α  = −(g/Δ)(e^{iΔT} − 1) Σ_k σ(ζ_k⁺) e^{−iζ_k⁻},
//! Ω₂ = i (2g²/Δ²)(ΔT − sin ΔT) (1 + cos(ζ₁⁻ − ζ₂⁻) σ(ζ₁⁺)σ(ζ₂⁺))
//! ```
//!
//! holds exactly, including the global phase. A second pulse with
//! `ζ_k⁻ → ζ_k⁻ + π` (time measured from its own start) displaces by `−α`,
//! leaving `exp(2Ω₂)`, a pure spin-spin rotation by
//! `θ = (4g²/Δ²)(ΔT − sin ΔT)`.
//!
//! Both the numerical and the closed-form propagators live in a Fock space
//! truncated at `n_max`, where `[a, a†] ≠ 1` on the top level. They agree
//! on states that stay away from the cut-off, which the leakage guard
//! enforces; comparisons therefore use the columns of low input Fock
//! number only.

pub mod config;
pub mod ode;

use std::f64::consts::{PI, TAU};

use crate::deriv::ErrorModel;
use crate::error::{validation, Error, Result};
use crate::gates::{phase_gate, CompositeSequence, Qubit};
use crate::smallmat::{
    kron2, mat_exp_hermitian_generator, sigma_phi, to_dynamic, CMatrix, Mat2, Mat4, OperatorExt,
    C64,
};

pub use config::{parse_trap_file, TrapFile};
pub use ode::{OdeOptions, OdeStats};

/// Population allowed in the two highest Fock levels.
pub const LEAKAGE_LIMIT: f64 = 1e-8;
/// Number of highest Fock levels watched by the leakage guard.
const GUARD_LEVELS: usize = 2;

/// Parameters of one bichromatic pulse plus the Fock-space truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig {
    pub g: f64,
    pub delta: f64,
    /// Pulse duration T.
    pub t: f64,
    /// Spin phases ζ₁⁺, ζ₂⁺.
    pub zeta_plus: [f64; 2],
    /// Motional phases ζ₁⁻, ζ₂⁻.
    pub zeta_minus: [f64; 2],
    pub n_max: usize,
    /// Highest input Fock level treated as physical.
    pub initial_fock: usize,
}

impl TrapConfig {
    /// Configuration with zero phases and the smallest admissible `n_max`.
    pub fn new(g: f64, delta: f64, t: f64) -> Self {
        let mut cfg = Self {
            g,
            delta,
            t,
            zeta_plus: [0.0; 2],
            zeta_minus: [0.0; 2],
            n_max: 0,
            initial_fock: 0,
        };
        cfg.n_max = cfg.required_n_max();
        cfg
    }

    pub fn with_initial_fock(mut self, n: usize) -> Self {
        self.initial_fock = n;
        self.n_max = self.n_max.max(self.required_n_max());
        self
    }

    /// Override the truncation (checked by [`TrapConfig::validate`]).
    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    pub fn with_phases(mut self, zeta_plus: [f64; 2], zeta_minus: [f64; 2]) -> Self {
        self.zeta_plus = zeta_plus;
        self.zeta_minus = zeta_minus;
        self
    }

    pub fn dim(&self) -> usize {
        4 * (self.n_max + 1)
    }

    /// Upper bound on `|α(t)|` over the pulse with both ions in phase.
    pub fn alpha_max(&self) -> f64 {
        let x = (self.delta * self.t).abs();
        let chord = if x >= PI {
            2.0
        } else {
            (C64::from_polar(1.0, x) - 1.0).norm()
        };
        2.0 * (self.g / self.delta).abs() * chord
    }

    /// `⌈(|α|_max + 4)²⌉ + n₀`: the displaced vacuum has a Poisson tail of
    /// width `|α|`, and an input `|n₀⟩` shifts it up by `n₀` levels.
    pub fn required_n_max(&self) -> usize {
        let r = self.alpha_max() + 4.0;
        (r * r).ceil() as usize + self.initial_fock
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.g, self.delta, self.t]
            .iter()
            .chain(&self.zeta_plus)
            .chain(&self.zeta_minus)
            .all(|v| v.is_finite());
        if !finite {
            return validation("trap parameters must be finite");
        }
        if self.g <= 0.0 {
            return validation(format!("coupling g must be positive, got {}", self.g));
        }
        if self.delta == 0.0 {
            return validation("detuning Δ must be non-zero");
        }
        if self.t < 0.0 {
            return validation(format!(
                "pulse duration must be non-negative, got {}",
                self.t
            ));
        }
        if self.initial_fock > self.n_max {
            return validation("initial Fock level exceeds the truncation");
        }
        let need = self.required_n_max();
        if self.n_max < need {
            return validation(format!(
                "n_max = {} is below the required {need} for |α|max = {:.3}",
                self.n_max,
                self.alpha_max()
            ));
        }
        Ok(())
    }

    /// Same pulse with every motional phase shifted by π.
    pub fn flipped(&self) -> Self {
        Self {
            zeta_minus: [self.zeta_minus[0] + PI, self.zeta_minus[1] + PI],
            ..*self
        }
    }
}

/// Operator on qubit₁ ⊗ qubit₂ ⊗ phonon.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub n_max: usize,
    pub matrix: CMatrix,
}

impl FockOperator {
    pub fn new(n_max: usize, matrix: CMatrix) -> Result<Self> {
        let dim = 4 * (n_max + 1);
        if matrix.shape() != (dim, dim) {
            return validation(format!(
                "expected a {dim}x{dim} operator, got {:?}",
                matrix.shape()
            ));
        }
        Ok(Self { n_max, matrix })
    }

    pub fn identity(n_max: usize) -> Self {
        let dim = 4 * (n_max + 1);
        Self {
            n_max,
            matrix: CMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Spin part between phonon levels `n_in → n_out`.
    pub fn spin_block(&self, n_in: usize, n_out: usize) -> Mat4 {
        let levels = self.n_max + 1;
        Mat4::from_fn(|r, c| self.matrix[(r * levels + n_out, c * levels + n_in)])
    }

    /// Columns of input Fock level ≤ `levels`, in the full row space.
    pub fn low_columns(&self, levels: usize) -> CMatrix {
        let cols = physical_columns(self.n_max, levels);
        CMatrix::from_fn(self.dim(), cols.len(), |r, c| self.matrix[(r, cols[c])])
    }

    /// Probability of staying in `|n⟩` from spin state `s`, minimized over
    /// the four computational spin states.
    pub fn fock_return_probability(&self, n: usize) -> f64 {
        let levels = self.n_max + 1;
        (0..4)
            .map(|s| {
                (0..4)
                    .map(|r| self.matrix[(r * levels + n, s * levels + n)].norm_sqr())
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

fn physical_columns(n_max: usize, levels: usize) -> Vec<usize> {
    let l = n_max + 1;
    (0..4)
        .flat_map(|s| (0..=levels.min(n_max)).map(move |m| s * l + m))
        .collect()
}

/// Embed a spin operator as `op ⊗ 1_phonon`.
pub fn spin_operator(op: &Mat4, n_max: usize) -> CMatrix {
    let l = n_max + 1;
    let mut out = CMatrix::zeros(4 * l, 4 * l);
    for r in 0..4 {
        for c in 0..4 {
            let v = op[(r, c)];
            if v != C64::new(0.0, 0.0) {
                for m in 0..l {
                    out[(r * l + m, c * l + m)] = v;
                }
            }
        }
    }
    out
}

fn ion_sigma(zeta: f64, ion: usize) -> Mat4 {
    let id = Mat2::identity();
    if ion == 0 {
        kron2(&sigma_phi(zeta), &id)
    } else {
        kron2(&id, &sigma_phi(zeta))
    }
}

/// Truncated annihilation operator on `0..=n_max`.
pub fn annihilation(n_max: usize) -> CMatrix {
    let l = n_max + 1;
    CMatrix::from_fn(l, l, |r, c| {
        if c == r + 1 {
            C64::from((c as f64).sqrt())
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Dense `H(t)`.
pub fn hamiltonian_at(cfg: &TrapConfig, t: f64) -> FockOperator {
    let a = annihilation(cfg.n_max);
    let ad = a.adjoint();
    let mut h = CMatrix::zeros(cfg.dim(), cfg.dim());
    for k in 0..2 {
        let c = C64::from_polar(cfg.g, cfg.delta * t - cfg.zeta_minus[k]);
        let phonon = &ad * c + &a * c.conj();
        h += crate::smallmat::kron(&to_dynamic(&ion_sigma(cfg.zeta_plus[k], k)), &phonon);
    }
    FockOperator {
        n_max: cfg.n_max,
        matrix: h,
    }
}

/// `out = −i H(t) ψ` for a column-major block of states.
fn apply_generator(cfg: &TrapConfig, t: f64, psi: &[C64], out: &mut [C64]) {
    let l = cfg.n_max + 1;
    let dim = 4 * l;
    let sqrt: Vec<f64> = (0..=l).map(|m| (m as f64).sqrt()).collect();
    let coupling: Vec<C64> = (0..2)
        .map(|k| C64::from_polar(cfg.g, cfg.delta * t - cfg.zeta_minus[k]))
        .collect();
    let minus_i = C64::new(0.0, -1.0);
    for (col_in, col_out) in psi.chunks_exact(dim).zip(out.chunks_exact_mut(dim)) {
        col_out.fill(C64::new(0.0, 0.0));
        for s in 0..4 {
            for (k, &g) in coupling.iter().enumerate() {
                let bit = if k == 0 { 2 } else { 1 };
                let target = s ^ bit;
                // σ(ζ)|0⟩ = e^{iζ}|1⟩, σ(ζ)|1⟩ = e^{−iζ}|0⟩
                let spin = if s & bit == 0 {
                    C64::from_polar(1.0, cfg.zeta_plus[k])
                } else {
                    C64::from_polar(1.0, -cfg.zeta_plus[k])
                };
                let c = g * spin * minus_i;
                let cc = g.conj() * spin * minus_i;
                let src = &col_in[s * l..(s + 1) * l];
                let dst = &mut col_out[target * l..(target + 1) * l];
                for m in 0..l {
                    // a†: |m⟩ → √(m+1)|m+1⟩ ; a: |m⟩ → √m |m−1⟩
                    let v = src[m];
                    if m + 1 < l {
                        dst[m + 1] += c * v * sqrt[m + 1];
                    }
                    if m > 0 {
                        dst[m - 1] += cc * v * sqrt[m];
                    }
                }
            }
        }
    }
}

/// One stage of a physical gate sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Stage {
    /// Bichromatic pulse with time measured from its own start.
    Pulse(TrapConfig),
    /// Ideal spin-only operation.
    Spin(Mat4),
}

fn top_population(block: &CMatrix, n_max: usize) -> f64 {
    let l = n_max + 1;
    let guard_from = l.saturating_sub(GUARD_LEVELS);
    block
        .column_iter()
        .map(|col| {
            let total: f64 = col.iter().map(|z| z.norm_sqr()).sum();
            let top: f64 = (0..4)
                .flat_map(|s| (guard_from..l).map(move |m| s * l + m))
                .map(|i| col[i].norm_sqr())
                .sum();
            top / total.max(1e-300)
        })
        .fold(0.0, f64::max)
}

/// Evolve a block of state columns through `stages`.
///
/// `guard_columns` lists the columns subject to the leakage guard, which is
/// checked after every stage.
pub fn evolve_block(
    stages: &[Stage],
    n_max: usize,
    mut block: CMatrix,
    guard_columns: &[usize],
    opts: &OdeOptions,
) -> Result<(CMatrix, f64)> {
    let dim = 4 * (n_max + 1);
    if block.nrows() != dim {
        return validation(format!(
            "state block has {} rows, expected {dim}",
            block.nrows()
        ));
    }
    let mut leakage: f64 = 0.0;
    for stage in stages {
        match stage {
            Stage::Pulse(cfg) => {
                if cfg.n_max != n_max {
                    return validation("all pulses must share the Fock truncation");
                }
                let cfg = *cfg;
                let data = block.as_mut_slice();
                ode::dopri5(
                    |t, y, out| apply_generator(&cfg, t, y, out),
                    0.0,
                    cfg.t,
                    data,
                    opts,
                )?;
            }
            Stage::Spin(op) => {
                block = spin_operator(op, n_max) * block;
            }
        }
        let guarded = CMatrix::from_fn(dim, guard_columns.len(), |r, c| {
            block[(r, guard_columns[c])]
        });
        let top = top_population(&guarded, n_max);
        leakage = leakage.max(top);
        if top > LEAKAGE_LIMIT {
            return Err(Error::Truncation {
                leakage: top,
                limit: LEAKAGE_LIMIT,
            });
        }
    }
    Ok((block, leakage))
}

fn evolve_full(stages: &[Stage], cfg: &TrapConfig, opts: &OdeOptions) -> Result<FockOperator> {
    cfg.validate()?;
    let dim = cfg.dim();
    let guard = physical_columns(cfg.n_max, cfg.initial_fock);
    let (m, _) = evolve_block(stages, cfg.n_max, CMatrix::identity(dim, dim), &guard, opts)?;
    FockOperator::new(cfg.n_max, m)
}

/// Numerically integrated single-pulse propagator.
pub fn evolve_numerical(cfg: &TrapConfig) -> Result<FockOperator> {
    evolve_numerical_with(cfg, &OdeOptions::default())
}

pub fn evolve_numerical_with(cfg: &TrapConfig, opts: &OdeOptions) -> Result<FockOperator> {
    evolve_full(&[Stage::Pulse(*cfg)], cfg, opts)
}

/// Columns `n_in ≤ initial_fock` of the numerical single-pulse propagator.
pub fn evolve_low_columns(cfg: &TrapConfig, opts: &OdeOptions) -> Result<CMatrix> {
    cfg.validate()?;
    let cols = physical_columns(cfg.n_max, cfg.initial_fock);
    let start = CMatrix::from_fn(cfg.dim(), cols.len(), |r, c| {
        if r == cols[c] {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let guard: Vec<usize> = (0..cols.len()).collect();
    Ok(evolve_block(&[Stage::Pulse(*cfg)], cfg.n_max, start, &guard, opts)?.0)
}

/// Eigen-decomposition of `σ(ζ)`: eigenvalue `±1` with eigenvector
/// `(1, ±e^{iζ})/√2`.
fn sigma_eigvec(zeta: f64, sign: f64) -> [C64; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [C64::from(s), C64::from_polar(sign * s, zeta)]
}

/// Spin-spin angle `(2g²/Δ²)(ΔT − sin ΔT)` of one pulse.
pub fn single_pulse_angle(cfg: &TrapConfig) -> f64 {
    let x = cfg.delta * cfg.t;
    2.0 * (cfg.g / cfg.delta).powi(2) * (x - x.sin())
}

/// Final displacement `α` for spin eigenvalues `s₁, s₂ ∈ {±1}`.
pub fn displacement(cfg: &TrapConfig, s: [f64; 2]) -> C64 {
    let pre = -(cfg.g / cfg.delta) * (C64::from_polar(1.0, cfg.delta * cfg.t) - 1.0);
    pre * (C64::from_polar(s[0], -cfg.zeta_minus[0]) + C64::from_polar(s[1], -cfg.zeta_minus[1]))
}

/// Truncated `D(α) = exp(α a† − α* a)`.
pub fn displacement_operator(alpha: C64, n_max: usize) -> Result<CMatrix> {
    let a = annihilation(n_max);
    // exp(A) with A anti-Hermitian equals exp(i·H) for H = −iA
    let gen = (a.adjoint() * alpha - &a * alpha.conj()) * C64::new(0.0, -1.0);
    mat_exp_hermitian_generator(&gen, 1.0)
}

/// Closed-form propagator `D(α) exp(Ω₂)` in the truncated space.
pub fn analytic_propagator(cfg: &TrapConfig) -> Result<FockOperator> {
    cfg.validate()?;
    let l = cfg.n_max + 1;
    let c = single_pulse_angle(cfg);
    let cos_d = (cfg.zeta_minus[0] - cfg.zeta_minus[1]).cos();
    let mut u = CMatrix::zeros(cfg.dim(), cfg.dim());
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            let v1 = sigma_eigvec(cfg.zeta_plus[0], s1);
            let v2 = sigma_eigvec(cfg.zeta_plus[1], s2);
            let v: Vec<C64> = (0..4).map(|i| v1[i >> 1] * v2[i & 1]).collect();
            let phase = C64::from_polar(1.0, c * (1.0 + cos_d * s1 * s2));
            let d = displacement_operator(displacement(cfg, [s1, s2]), cfg.n_max)? * phase;
            for r in 0..4 {
                for q in 0..4 {
                    let p = v[r] * v[q].conj();
                    if p.norm() == 0.0 {
                        continue;
                    }
                    for m in 0..l {
                        for n in 0..l {
                            u[(r * l + m, q * l + n)] += p * d[(m, n)];
                        }
                    }
                }
            }
        }
    }
    FockOperator::new(cfg.n_max, u)
}

/// Frobenius distance restricted to input Fock levels `≤ levels`.
pub fn low_column_distance(a: &FockOperator, b: &FockOperator, levels: usize) -> f64 {
    (a.low_columns(levels) - b.low_columns(levels)).norm()
}

/// Two-pulse rotation angle `(4g²/Δ²)(ΔT − sin ΔT)`.
pub fn rotation_angle(cfg: &TrapConfig) -> f64 {
    2.0 * single_pulse_angle(cfg)
}

/// Pulse duration giving the two-pulse rotation `theta ≥ 0` at (g, Δ).
pub fn duration_for_angle(theta: f64, g: f64, delta: f64) -> Result<f64> {
    if !(g > 0.0 && delta > 0.0) {
        return validation("duration search needs g > 0 and Δ > 0");
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return validation(format!("rotation angle must be non-negative, got {theta}"));
    }
    // x − sin x is increasing; solve x − sin x = target by bisection
    let target = theta * delta * delta / (4.0 * g * g);
    let (mut lo, mut hi) = (0.0f64, (6.0 * target).cbrt().max(target + 1.0) + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid - mid.sin() < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi) / delta)
}

/// Numerical two-pulse gate: `cfg`, then `cfg` with `ζ⁻ + π`.
pub fn two_pulse_gate(cfg: &TrapConfig) -> Result<FockOperator> {
    two_pulse_gate_with(cfg, &OdeOptions::default())
}

pub fn two_pulse_gate_with(cfg: &TrapConfig, opts: &OdeOptions) -> Result<FockOperator> {
    evolve_full(
        &[Stage::Pulse(*cfg), Stage::Pulse(cfg.flipped())],
        cfg,
        opts,
    )
}

/// The spin gate `exp(2Ω₂)` the two-pulse scheme should produce.
pub fn two_pulse_spin_gate(cfg: &TrapConfig) -> Mat4 {
    let theta = rotation_angle(cfg);
    let cos_d = (cfg.zeta_minus[0] - cfg.zeta_minus[1]).cos();
    let ss = ion_sigma(cfg.zeta_plus[0], 0) * ion_sigma(cfg.zeta_plus[1], 1);
    // (σσ)² = 1, so exp(iθ(1 + cσσ)) = e^{iθ}(cos(cθ) + i sin(cθ) σσ)
    let (s, c) = (theta * cos_d).sin_cos();
    (Mat4::identity() * C64::from(c) + ss * C64::new(0.0, s)) * C64::from_polar(1.0, theta)
}

/// How phased gates `U(θ, φ)` are realized on the ions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Addressing {
    /// Equal laser phases; `φ` comes from ideal phase gates on ion 2.
    Global,
    /// `ζ₂⁺ = φ` on each pulse pair.
    Individual,
}

/// Outcome of simulating a composite sequence on the trap.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalGate {
    /// Spin block between phonon level `initial_fock` and itself.
    pub qubit_gate: Mat4,
    /// Evolved columns of input level `initial_fock` (4 columns).
    pub columns: CMatrix,
    /// Largest top-level population seen by the guard.
    pub leakage: f64,
    /// Relative angle error `(1 + eps_g)² − 1` the sequence experiences.
    pub epsilon: f64,
}

/// Qubit-gate fidelity `|Tr(A†B)|/4`; unlike [`crate::analysis::fidelity`]
/// it accepts the slightly non-unitary spin block of a physical gate.
pub fn gate_fidelity(target: &Mat4, gate: &Mat4) -> f64 {
    (target.adjoint() * gate).trace().norm() / 4.0
}

/// Stages realizing `seq`, with pulse durations from the nominal `g` and
/// the coupling `g(1 + eps_g)` in every pulse.
pub fn composite_stages(
    seq: &CompositeSequence,
    base: &TrapConfig,
    eps_g: f64,
    addressing: Addressing,
) -> Result<Vec<Stage>> {
    if !(eps_g > -1.0 && eps_g.is_finite()) {
        return validation(format!("relative Rabi error must exceed −1, got {eps_g}"));
    }
    let mut stages = Vec::new();
    for gate in seq.gates() {
        let (theta, phi) = if gate.theta() < 0.0 {
            // U(−θ, φ) = U(θ, φ + π)
            (-gate.theta(), gate.phi() + PI)
        } else {
            (gate.theta(), gate.phi())
        };
        if theta == 0.0 {
            continue;
        }
        let mut cfg = *base;
        cfg.t = duration_for_angle(theta, base.g, base.delta)?;
        cfg.g = base.g * (1.0 + eps_g);
        match addressing {
            Addressing::Individual => {
                cfg.zeta_plus = [0.0, phi % TAU];
                stages.push(Stage::Pulse(cfg));
                stages.push(Stage::Pulse(cfg.flipped()));
            }
            Addressing::Global => {
                cfg.zeta_plus = [0.0, 0.0];
                // U(θ, φ) = F(φ/2) U(θ, 0) F(−φ/2) on ion 2
                stages.push(Stage::Spin(phase_gate(-0.5 * phi, Qubit::Second)));
                stages.push(Stage::Pulse(cfg));
                stages.push(Stage::Pulse(cfg.flipped()));
                stages.push(Stage::Spin(phase_gate(0.5 * phi, Qubit::Second)));
            }
        }
    }
    if seq.terminal_phase() != 0.0 {
        stages.push(Stage::Spin(phase_gate(seq.terminal_phase(), Qubit::Second)));
    }
    Ok(stages)
}

/// Simulate `seq` on the trap with a relative Rabi-frequency error.
pub fn composite_physical_gate(
    seq: &CompositeSequence,
    base: &TrapConfig,
    eps_g: f64,
    addressing: Addressing,
    opts: &OdeOptions,
) -> Result<PhysicalGate> {
    base.validate()?;
    if base.delta <= 0.0 {
        return validation("composite gates need Δ > 0");
    }
    let stages = composite_stages(seq, base, eps_g, addressing)?;
    let l = base.n_max + 1;
    let n0 = base.initial_fock;
    let start = CMatrix::from_fn(base.dim(), 4, |r, c| {
        if r == c * l + n0 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let (columns, leakage) = evolve_block(&stages, base.n_max, start, &[0, 1, 2, 3], opts)?;
    let qubit_gate = Mat4::from_fn(|r, c| columns[(r * l + n0, c)]);
    Ok(PhysicalGate {
        qubit_gate,
        columns,
        leakage,
        epsilon: (1.0 + eps_g).powi(2) - 1.0,
    })
}

/// Qubit-level prediction matching [`composite_physical_gate`].
pub fn predicted_qubit_gate(seq: &CompositeSequence, eps_g: f64) -> Mat4 {
    seq.propagator(&ErrorModel::relative((1.0 + eps_g).powi(2) - 1.0))
}

/// Check that `m` has numerically unit columns (used by tests and the CLI).
pub fn unitarity_drift(op: &FockOperator) -> f64 {
    op.matrix.unitarity_defect()
}
