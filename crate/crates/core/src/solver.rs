//! Newton search for phase sequences whose low-order ε-derivatives cancel.
//!
//! A [`SolverProblem`] fixes the family (which derivative orders must
//! vanish), the target angle and a [`Shape`] (which gate angles are used and
//! which phases are free). [`solve`] runs damped Gauss–Newton iterations
//! from uniformly random starting phases until one restart converges;
//! [`solve_with_escalation`] walks the family's list of shapes in order of
//! increasing total angle.
//!
//! Internally the least-squares residual uses `∂^l/A^l` (A = total angle)
//! instead of the raw derivatives, whose size grows like `A^l` and would
//! otherwise let the highest order dominate every step. Convergence is
//! judged on the raw objective [`objective_d`].

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::deriv::{target_sign, taylor_coefficients, ErrorModel};
use crate::error::{validation, Result};
use crate::gates::{target_gate, CompositeSequence, Family, PhasedGate};
use crate::smallmat::{angle_distance, Mat4, C64};

/// Gate layout of a candidate sequence.
///
/// Chain lengths count the gates after the leading one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Shape {
    /// `(Θ,0)`, two `π/2` gates and a free terminal phase gate.
    TwoPulse,
    /// `(Θ,0)` followed by an even number of `π/2` gates.
    HalfPiChain(usize),
    /// `(π/2−Θ, π)` followed by an odd number of `π/2` gates; the
    /// leading gate is `(Θ,0)·(π/2,0)` merged, up to a global sign.
    Shortened(usize),
    /// `(Θ,0)` followed by `π` gates.
    PiChain(usize),
    /// `(π−Θ, π)` followed by `π` gates.
    ShortenedPiChain(usize),
}

impl Shape {
    pub fn chain_len(&self) -> usize {
        match *self {
            Shape::TwoPulse => 2,
            Shape::HalfPiChain(m)
            | Shape::Shortened(m)
            | Shape::PiChain(m)
            | Shape::ShortenedPiChain(m) => m,
        }
    }

    pub fn chain_angle(&self) -> f64 {
        match self {
            Shape::PiChain(_) | Shape::ShortenedPiChain(_) => PI,
            _ => FRAC_PI_2,
        }
    }

    /// Leading gate `(θ_0, φ_0)` for target angle `theta`.
    pub fn lead(&self, theta: f64) -> (f64, f64) {
        match self {
            Shape::Shortened(_) => (FRAC_PI_2 - theta, PI),
            Shape::ShortenedPiChain(_) => (PI - theta, PI),
            _ => (theta, 0.0),
        }
    }

    /// Total rotation angle of the shape.
    pub fn total_angle(&self, theta: f64) -> f64 {
        self.lead(theta).0.abs() + self.chain_len() as f64 * self.chain_angle()
    }

    fn validate(&self) -> Result<()> {
        let m = self.chain_len();
        let ok = match self {
            Shape::TwoPulse => true,
            Shape::HalfPiChain(_) => m >= 2 && m.is_multiple_of(2),
            Shape::Shortened(_) => !m.is_multiple_of(2),
            Shape::PiChain(_) | Shape::ShortenedPiChain(_) => m >= 1,
        };
        if !ok {
            return validation(format!(
                "{self} cannot reproduce U(Θ) at zero error (wrong number of π/2 rotations)"
            ));
        }
        Ok(())
    }

    /// Shapes tried by [`solve_with_escalation`], shortest first.
    pub fn progression(family: Family) -> Vec<Shape> {
        match family {
            Family::Broadband(_) => vec![
                Shape::TwoPulse,
                Shape::HalfPiChain(4),
                Shape::HalfPiChain(6),
                Shape::Shortened(7),
                Shape::Shortened(9),
                Shape::Shortened(11),
                Shape::Shortened(13),
            ],
            Family::Passband(..) => vec![
                Shape::PiChain(2),
                Shape::HalfPiChain(6),
                Shape::PiChain(4),
                Shape::HalfPiChain(8),
                Shape::ShortenedPiChain(5),
                Shape::PiChain(6),
            ],
            Family::Single | Family::Absolute | Family::Combined => Vec::new(),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::TwoPulse => write!(f, "two-pulse"),
            Shape::HalfPiChain(m) => write!(f, "half-pi-chain({m})"),
            Shape::Shortened(m) => write!(f, "shortened({m})"),
            Shape::PiChain(m) => write!(f, "pi-chain({m})"),
            Shape::ShortenedPiChain(m) => write!(f, "shortened-pi-chain({m})"),
        }
    }
}

impl std::str::FromStr for Shape {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "two-pulse" {
            return Ok(Shape::TwoPulse);
        }
        let parse = |prefix: &str| -> Option<usize> {
            s.strip_prefix(prefix)?
                .strip_prefix('(')?
                .strip_suffix(')')?
                .parse()
                .ok()
        };
        // longer prefixes first: "shortened-pi-chain" also starts with "shortened"
        if let Some(m) = parse("shortened-pi-chain") {
            return Ok(Shape::ShortenedPiChain(m));
        }
        if let Some(m) = parse("half-pi-chain") {
            return Ok(Shape::HalfPiChain(m));
        }
        if let Some(m) = parse("shortened") {
            return Ok(Shape::Shortened(m));
        }
        if let Some(m) = parse("pi-chain") {
            return Ok(Shape::PiChain(m));
        }
        validation(format!("unknown shape '{s}'"))
    }
}

/// What to solve for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverProblem {
    family: Family,
    target_theta: f64,
    shape: Shape,
    free_terminal: bool,
}

impl SolverProblem {
    /// The terminal phase is free for [`Shape::TwoPulse`] and fixed at zero
    /// otherwise; see [`SolverProblem::with_free_terminal`].
    pub fn new(family: Family, target_theta: f64, shape: Shape) -> Result<Self> {
        match family {
            Family::Broadband(n) if n >= 1 => {}
            Family::Passband(a, b) if a >= 1 && b >= 1 => {}
            _ => {
                return validation(format!(
                    "solver needs a broadband or passband family, got {family}"
                ))
            }
        }
        if !(target_theta.is_finite() && target_theta > 0.0 && target_theta <= PI) {
            return validation(format!(
                "target angle must lie in (0, π], got {target_theta}"
            ));
        }
        shape.validate()?;
        Ok(Self {
            family,
            target_theta,
            shape,
            free_terminal: shape == Shape::TwoPulse,
        })
    }

    pub fn with_free_terminal(mut self, free: bool) -> Self {
        self.free_terminal = free || self.shape == Shape::TwoPulse;
        self
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn target_theta(&self) -> f64 {
        self.target_theta
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn free_terminal(&self) -> bool {
        self.free_terminal
    }

    /// Chain phases, plus the terminal phase when it is free.
    pub fn free_phase_count(&self) -> usize {
        self.shape.chain_len() + usize::from(self.free_terminal)
    }

    /// Number of gates after the leading one.
    pub fn gate_count(&self) -> usize {
        self.shape.chain_len()
    }

    fn check_len(&self, phases: &[f64]) -> Result<()> {
        if phases.len() != self.free_phase_count() {
            return validation(format!(
                "expected {} free phases for {}, got {}",
                self.free_phase_count(),
                self.shape,
                phases.len()
            ));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return validation("phases must be finite");
        }
        Ok(())
    }

    /// Sequence for the free phases (chain phases first, then the terminal).
    pub fn build(&self, phases: &[f64]) -> Result<CompositeSequence> {
        self.check_len(phases)?;
        Ok(self.build_unchecked(phases))
    }

    fn build_unchecked(&self, phases: &[f64]) -> CompositeSequence {
        let m = self.shape.chain_len();
        let (t0, p0) = self.shape.lead(self.target_theta);
        let angle = self.shape.chain_angle();
        let mut gates = Vec::with_capacity(m + 1);
        gates.push(PhasedGate::new(t0, p0).expect("finite lead"));
        for &p in &phases[..m] {
            gates.push(PhasedGate::new(angle, p).expect("finite phase"));
        }
        // F(φ+π) = −F(φ): the terminal phase only matters modulo π
        let terminal = if self.free_terminal {
            phases[m].rem_euclid(PI)
        } else {
            0.0
        };
        CompositeSequence::new(gates, terminal, self.target_theta, self.family).expect("non-empty")
    }

    /// Free phases of `seq`, which must have this problem's layout.
    pub fn phases_of(&self, seq: &CompositeSequence) -> Result<Vec<f64>> {
        let m = self.shape.chain_len();
        let (t0, p0) = self.shape.lead(self.target_theta);
        let gates = seq.gates();
        let lead_ok = gates
            .first()
            .is_some_and(|g| (g.theta() - t0).abs() < 1e-9 && angle_distance(g.phi(), p0) < 1e-9);
        let chain_ok = gates.len() == m + 1
            && gates[1..]
                .iter()
                .all(|g| (g.theta() - self.shape.chain_angle()).abs() < 1e-9);
        if !lead_ok || !chain_ok {
            return validation(format!("sequence does not have the {} layout", self.shape));
        }
        if !self.free_terminal && seq.terminal_phase() != 0.0 {
            return validation("sequence has a terminal phase but the problem fixes it to zero");
        }
        let mut out: Vec<f64> = gates[1..].iter().map(|g| g.phi()).collect();
        if self.free_terminal {
            out.push(seq.terminal_phase());
        }
        Ok(out)
    }

    /// Raw and scaled residual blocks for a candidate sequence.
    fn residuals(&self, seq: &CompositeSequence) -> (f64, Vec<f64>) {
        let a = self.shape.total_angle(self.target_theta);
        let (n1, n2) = match self.family {
            Family::Broadband(n) => (n, 0),
            Family::Passband(a, b) => (a, b),
            _ => unreachable!("validated in new"),
        };
        let mut d_raw = 0.0;
        let mut scaled = Vec::with_capacity(32 * (n1 + n2 + 1) as usize);
        let mut push = |l: usize, m: &Mat4, d_raw: &mut f64| {
            // Taylor coefficient times l! is the raw derivative
            let fact: f64 = (1..=l).map(|k| k as f64).product();
            *d_raw += m.norm() * fact;
            let w = fact / a.powi(l as i32);
            for z in m.iter() {
                scaled.push(z.re * w);
                scaled.push(z.im * w);
            }
        };
        let mut c = taylor_coefficients(seq, n1, &ErrorModel::none());
        let target = target_gate(self.target_theta);
        let s = target_sign(&c[0], &target);
        c[0] -= target * C64::from(s);
        for (l, m) in c.iter().enumerate() {
            push(l, m, &mut d_raw);
        }
        if n2 > 0 {
            let c = taylor_coefficients(seq, n2, &ErrorModel::relative(-1.0));
            for (l, m) in c.iter().enumerate().skip(1) {
                push(l, m, &mut d_raw);
            }
        }
        (d_raw, scaled)
    }
}

/// `D = Σ_l ‖∂^l[C − s·U(Θ)]‖` at ε = 0 over `l = 0..=n₁`, plus
/// `Σ_l ‖∂^l C‖` at ε = −1 over `l = 1..=n₂` for passband families.
pub fn objective_d(problem: &SolverProblem, phases: &[f64]) -> Result<f64> {
    let seq = problem.build(phases)?;
    Ok(problem.residuals(&seq).0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub residual_tolerance: f64,
    /// Central-difference step for the Jacobian.
    pub jacobian_step: f64,
    pub max_newton_iters: usize,
    pub max_restarts: usize,
    pub rng_seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            residual_tolerance: 1e-10,
            jacobian_step: 1e-6,
            max_newton_iters: 200,
            max_restarts: 10_000,
            rng_seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tolerance > 0.0 && self.residual_tolerance.is_finite()) {
            return validation("residual tolerance must be positive");
        }
        if !(self.jacobian_step > 0.0 && self.jacobian_step < 1.0) {
            return validation("Jacobian step must lie in (0, 1)");
        }
        if self.max_newton_iters == 0 || self.max_restarts == 0 {
            return validation("iteration and restart limits must be positive");
        }
        Ok(())
    }
}

/// Outcome of one Newton run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RestartLog {
    pub restart: usize,
    pub iters: usize,
    pub d: f64,
}

impl fmt::Display for RestartLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "restart={} iters={} D={:.6e}",
            self.restart, self.iters, self.d
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverResult {
    /// Best sequence found (the converged one if `converged`).
    pub sequence: CompositeSequence,
    pub residual_d: f64,
    pub restarts_used: usize,
    /// Newton iterations of the reported restart.
    pub iterations_used: usize,
    pub converged: bool,
    /// Shapes attempted, in order.
    pub attempted: Vec<Shape>,
    /// One entry per restart, in restart order.
    pub log: Vec<RestartLog>,
}

struct NewtonRun {
    phases: Vec<f64>,
    d: f64,
    iters: usize,
}

/// Rejected steps tolerated per iteration before giving up.
const MAX_DAMPING_TRIALS: usize = 20;

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn newton(problem: &SolverProblem, start: Vec<f64>, cfg: &SolverConfig) -> NewtonRun {
    let eval = |p: &[f64]| problem.residuals(&problem.build_unchecked(p));
    let mut phases = start;
    let (mut d, mut r) = eval(&phases);
    let n = phases.len();
    let h = cfg.jacobian_step;
    let mut mu = 0.0;
    for it in 0..cfg.max_newton_iters {
        if d <= cfg.residual_tolerance {
            return NewtonRun {
                phases,
                d,
                iters: it,
            };
        }
        let mut jac = DMatrix::<f64>::zeros(r.len(), n);
        let mut probe = phases.clone();
        for j in 0..n {
            probe[j] = phases[j] + h;
            let plus = eval(&probe).1;
            probe[j] = phases[j] - h;
            let minus = eval(&probe).1;
            probe[j] = phases[j];
            for (i, (a, b)) in plus.iter().zip(&minus).enumerate() {
                jac[(i, j)] = (a - b) / (2.0 * h);
            }
        }
        let svd = jac.svd(true, true);
        let (Some(u), Some(vt)) = (&svd.u, &svd.v_t) else {
            return NewtonRun {
                phases,
                d,
                iters: it,
            };
        };
        let ur = u.transpose() * DVector::from_column_slice(&r);
        let sigma = &svd.singular_values;
        let current = sum_sq(&r);
        let mut accepted = None;
        for _ in 0..=MAX_DAMPING_TRIALS {
            // Levenberg–Marquardt step −V·diag(σ/(σ²+μ))·Uᵀr; μ = 0 is Gauss–Newton
            let coeffs = DVector::from_iterator(
                sigma.len(),
                sigma.iter().zip(ur.iter()).map(|(&sv, &c)| {
                    let denom = sv * sv + mu;
                    if denom > 1e-24 {
                        -sv * c / denom
                    } else {
                        0.0
                    }
                }),
            );
            let step = vt.transpose() * coeffs;
            let trial: Vec<f64> = phases.iter().zip(step.iter()).map(|(p, s)| p + s).collect();
            let (td, tr) = eval(&trial);
            if sum_sq(&tr) < current {
                accepted = Some((trial, td, tr));
                mu /= 4.0;
                break;
            }
            mu = if mu == 0.0 {
                sigma.max().powi(2) * 1e-6
            } else {
                mu * 2.0
            };
        }
        let Some((trial, td, tr)) = accepted else {
            // stuck in a local minimum of the least-squares residual
            return NewtonRun {
                phases,
                d,
                iters: it + 1,
            };
        };
        phases = trial;
        d = td;
        r = tr;
    }
    NewtonRun {
        phases,
        d,
        iters: cfg.max_newton_iters,
    }
}

fn start_phases(seed: u64, restart: usize, count: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    (0..count).map(|_| rng.random_range(0.0..TAU)).collect()
}

fn restart_chunk() -> usize {
    2 * rayon::current_num_threads().max(1)
}

fn run_restarts(
    problem: &SolverProblem,
    cfg: &SolverConfig,
    range: std::ops::Range<usize>,
) -> Vec<(usize, NewtonRun)> {
    let count = problem.free_phase_count();
    range
        .into_par_iter()
        .map(|k| {
            (
                k,
                newton(problem, start_phases(cfg.rng_seed, k, count), cfg),
            )
        })
        .collect()
}

fn finish(
    problem: &SolverProblem,
    run: NewtonRun,
    restarts: usize,
    converged: bool,
    log: Vec<RestartLog>,
) -> SolverResult {
    SolverResult {
        sequence: problem.build_unchecked(&run.phases),
        residual_d: run.d,
        restarts_used: restarts,
        iterations_used: run.iters,
        converged,
        attempted: vec![problem.shape],
        log,
    }
}

/// Random-restart search. Restarts run in parallel chunks; the result is the
/// converged restart with the smallest index, so it does not depend on the
/// thread count. Without convergence the best restart is returned.
pub fn solve(problem: &SolverProblem, cfg: &SolverConfig) -> Result<SolverResult> {
    cfg.validate()?;
    let mut log = Vec::new();
    let mut best: Option<NewtonRun> = None;
    let mut next = 0;
    while next < cfg.max_restarts {
        let end = (next + restart_chunk()).min(cfg.max_restarts);
        let runs = run_restarts(problem, cfg, next..end);
        for (k, run) in runs {
            log.push(RestartLog {
                restart: k,
                iters: run.iters,
                d: run.d,
            });
            if run.d <= cfg.residual_tolerance {
                return Ok(finish(problem, run, k + 1, true, log));
            }
            if best.as_ref().is_none_or(|b| run.d < b.d) {
                best = Some(run);
            }
        }
        next = end;
    }
    let best = best.expect("at least one restart");
    Ok(finish(problem, best, cfg.max_restarts, false, log))
}

/// Newton iterations from a given starting point, without restarts.
pub fn refine(problem: &SolverProblem, start: &[f64], cfg: &SolverConfig) -> Result<SolverResult> {
    cfg.validate()?;
    problem.check_len(start)?;
    let run = newton(problem, start.to_vec(), cfg);
    let converged = run.d <= cfg.residual_tolerance;
    let log = vec![RestartLog {
        restart: 0,
        iters: run.iters,
        d: run.d,
    }];
    Ok(finish(problem, run, 1, converged, log))
}

/// Polish an existing sequence (for example a catalog row printed to three
/// digits) that has the problem's layout.
pub fn refine_sequence(
    problem: &SolverProblem,
    seq: &CompositeSequence,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    let start = problem.phases_of(seq)?;
    refine(problem, &start, cfg)
}

/// Try each shape of the family's progression until one converges.
pub fn solve_with_escalation(
    family: Family,
    target_theta: f64,
    cfg: &SolverConfig,
) -> Result<SolverResult> {
    let shapes = Shape::progression(family);
    if shapes.is_empty() {
        return validation(format!("no shape progression for family {family}"));
    }
    let mut attempted = Vec::new();
    let mut best: Option<SolverResult> = None;
    for shape in shapes {
        let problem = SolverProblem::new(family, target_theta, shape)?;
        let mut res = solve(&problem, cfg)?;
        attempted.push(shape);
        if res.converged {
            res.attempted = attempted;
            return Ok(res);
        }
        if best.as_ref().is_none_or(|b| res.residual_d < b.residual_d) {
            best = Some(res);
        }
    }
    let mut best = best.expect("non-empty progression");
    best.attempted = attempted;
    Ok(best)
}

/// Two phase vectors describe the same solution up to 2π shifts.
fn same_solution(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| angle_distance(*x, *y) < tol)
}

/// Whether `a` equals `b` or its global negation `φ_k → −φ_k`.
pub fn equivalent_phases(a: &[f64], b: &[f64], tol: f64) -> bool {
    if a.len() != b.len() {
        return false;
    }
    let neg: Vec<f64> = b.iter().map(|x| -x).collect();
    same_solution(a, b, tol) || same_solution(a, &neg, tol)
}

/// Run every restart and keep one representative per distinct converged
/// solution (distinct modulo 2π shifts and global phase negation). The list
/// is ordered by the index of the first restart reaching each solution; it
/// is not guaranteed to be exhaustive.
pub fn solve_all(problem: &SolverProblem, cfg: &SolverConfig) -> Result<Vec<SolverResult>> {
    cfg.validate()?;
    let runs = run_restarts(problem, cfg, 0..cfg.max_restarts);
    let mut out: Vec<(Vec<f64>, SolverResult)> = Vec::new();
    for (k, run) in runs {
        if run.d > cfg.residual_tolerance {
            continue;
        }
        // canonical representatives in [0, 2π)
        let seq = problem.build_unchecked(&run.phases);
        let phases = problem.phases_of(&seq).expect("own layout");
        if out.iter().any(|(p, _)| equivalent_phases(p, &phases, 1e-6)) {
            continue;
        }
        let log = vec![RestartLog {
            restart: k,
            iters: run.iters,
            d: run.d,
        }];
        out.push((phases, finish(problem, run, k + 1, true, log)));
    }
    Ok(out.into_iter().map(|(_, r)| r).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deriv::{broadband_residuals, passband_residuals};
    use crate::gates::catalog;
    use std::f64::consts::FRAC_PI_4;

    fn cfg(restarts: usize) -> SolverConfig {
        SolverConfig {
            max_restarts: restarts,
            ..Default::default()
        }
    }

    #[test]
    fn objective_matches_examples() {
        let p = SolverProblem::new(Family::Broadband(1), FRAC_PI_4, Shape::TwoPulse).unwrap();
        let phi = (-0.25f64).acos();
        assert!(objective_d(&p, &[phi, 3.0 * phi, -2.0 * phi]).unwrap() <= 1e-12);
        assert!(objective_d(&p, &[0.0, 0.0, 0.0]).unwrap() > 0.1);
        assert!(objective_d(&p, &[0.0, 0.0]).is_err());

        let p = SolverProblem::new(Family::Broadband(2), FRAC_PI_4, Shape::HalfPiChain(4)).unwrap();
        let phi = (-1.0f64 / 8.0).acos();
        assert!((phi - 1.696124).abs() < 1e-6);
        assert!(objective_d(&p, &[phi, 3.0 * phi, 3.0 * phi, phi]).unwrap() <= 1e-12);
    }

    #[test]
    fn bad_problems_rejected() {
        assert!(SolverProblem::new(Family::Single, 0.5, Shape::TwoPulse).is_err());
        assert!(SolverProblem::new(Family::Broadband(1), 0.0, Shape::TwoPulse).is_err());
        assert!(SolverProblem::new(Family::Broadband(1), 0.5, Shape::HalfPiChain(3)).is_err());
        assert!(SolverProblem::new(Family::Broadband(1), 0.5, Shape::Shortened(4)).is_err());
        let bad = SolverConfig {
            residual_tolerance: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn shape_text_round_trip() {
        for s in [
            Shape::TwoPulse,
            Shape::HalfPiChain(6),
            Shape::Shortened(7),
            Shape::PiChain(4),
            Shape::ShortenedPiChain(5),
        ] {
            assert_eq!(s.to_string().parse::<Shape>().unwrap(), s);
        }
        assert!("triangle(3)".parse::<Shape>().is_err());
    }

    #[test]
    fn solves_passband_one_one() {
        let p = SolverProblem::new(Family::Passband(1, 1), FRAC_PI_4, Shape::PiChain(2)).unwrap();
        let r = solve(&p, &cfg(200)).unwrap();
        assert!(r.converged);
        let phi = (-1.0f64 / 8.0).acos();
        let got = p.phases_of(&r.sequence).unwrap();
        assert!(equivalent_phases(&got, &[phi, -phi], 1e-6), "{got:?}");
        let (b, n) = passband_residuals(&r.sequence, 1, 1);
        assert!(b.max_norm() <= 1e-9 && n.max_norm() <= 1e-9);
    }

    #[test]
    fn same_seed_same_answer() {
        let p = SolverProblem::new(Family::Broadband(2), 0.9, Shape::HalfPiChain(4)).unwrap();
        let a = solve(&p, &cfg(50)).unwrap();
        let b = solve(&p, &cfg(50)).unwrap();
        assert_eq!(a.sequence, b.sequence);
        assert_eq!(a.log, b.log);
        let c = solve(
            &p,
            &SolverConfig {
                rng_seed: 7,
                ..cfg(50)
            },
        )
        .unwrap();
        assert!(c.converged);
    }

    #[test]
    fn log_lines_have_documented_format() {
        let p = SolverProblem::new(Family::Broadband(1), 0.5, Shape::TwoPulse).unwrap();
        let r = solve(&p, &cfg(10)).unwrap();
        let line = r.log[0].to_string();
        assert!(line.starts_with("restart=0 iters="), "{line}");
        assert!(line.contains(" D="));
        assert_eq!(r.log.len(), r.restarts_used);
    }

    #[test]
    fn escalation_stops_at_two_pulse_for_first_order() {
        let r = solve_with_escalation(Family::Broadband(1), FRAC_PI_4, &cfg(100)).unwrap();
        assert!(r.converged);
        assert_eq!(r.attempted, vec![Shape::TwoPulse]);
        assert_eq!(r.sequence.len(), 3);
    }

    #[test]
    fn non_convergence_is_reported() {
        // a two-pulse sequence cannot cancel the second order
        let p = SolverProblem::new(Family::Broadband(2), FRAC_PI_4, Shape::TwoPulse).unwrap();
        let r = solve(&p, &cfg(8)).unwrap();
        assert!(!r.converged);
        assert!(r.residual_d > 1e-3);
        assert_eq!(r.restarts_used, 8);
    }

    #[test]
    fn refine_polishes_decimal_row() {
        let e = catalog::broadband(3, FRAC_PI_4).unwrap();
        let p = SolverProblem::new(Family::Broadband(3), FRAC_PI_4, Shape::HalfPiChain(6)).unwrap();
        let r = refine_sequence(&p, &e.sequence, &SolverConfig::default()).unwrap();
        assert!(r.converged);
        assert!(broadband_residuals(&r.sequence, 3).max_norm() <= 1e-9);
        // moves each phase by no more than the printed rounding allows
        for (a, b) in r.sequence.phases().iter().zip(e.sequence.phases()) {
            assert!(angle_distance(*a, b) < 0.005 * PI);
        }
    }

    #[test]
    fn phases_of_rejects_other_layouts() {
        let e = catalog::broadband(3, FRAC_PI_4).unwrap();
        let p = SolverProblem::new(Family::Broadband(3), FRAC_PI_4, Shape::Shortened(7)).unwrap();
        assert!(p.phases_of(&e.sequence).is_err());
    }

    #[test]
    fn solve_all_deduplicates() {
        let p = SolverProblem::new(Family::Broadband(1), FRAC_PI_4, Shape::TwoPulse).unwrap();
        let all = solve_all(&p, &cfg(40)).unwrap();
        assert!(!all.is_empty());
        for (i, a) in all.iter().enumerate() {
            for b in &all[i + 1..] {
                let pa = p.phases_of(&a.sequence).unwrap();
                let pb = p.phases_of(&b.sequence).unwrap();
                assert!(!equivalent_phases(&pa, &pb, 1e-6));
            }
        }
    }
}
