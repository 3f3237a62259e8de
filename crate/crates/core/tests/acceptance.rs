//! End-to-end acceptance checks, one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --release --test acceptance`. The process exits
//! with status 1 if any criterion fails.

mod support;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI, TAU};
use std::fs::File;
use std::time::{Duration, Instant};

use cphase::abserr::{absolute_composite_propagator, wrap_sequence_absolute, AbsoluteComposite};
use cphase::analysis::{
    infidelity, infidelity_order, infidelity_order_at, scan, scan_with, tolerance_band,
    ScanReference, DEFAULT_ORDER_WINDOW,
};
use cphase::deriv::{narrowband_conditions, passband_residuals, pi_chain_conditions};
use cphase::gates::{catalog, target_gate};
use cphase::iontrap::{
    analytic_propagator, composite_physical_gate, evolve_low_columns, gate_fidelity,
    two_pulse_gate, Addressing, OdeOptions, TrapConfig,
};
use cphase::smallmat::{angle_distance, Mat4, C64};
use cphase::solver::{
    refine_sequence, solve, solve_with_escalation, Shape, SolverConfig, SolverProblem,
};
use cphase::{CompositeSequence, ErrorModel, Family};

/// Outcome of one criterion: overall verdict plus detail lines.
struct Verdict {
    ok: bool,
    notes: Vec<String>,
}

impl Verdict {
    fn new() -> Self {
        Self {
            ok: true,
            notes: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, note: impl Into<String>) {
        let note = note.into();
        self.notes
            .push(format!("{} {note}", if ok { "ok  " } else { "FAIL" }));
        self.ok &= ok;
    }

    fn info(&mut self, note: impl Into<String>) {
        self.notes.push(format!("     {}", note.into()));
    }
}

fn run(number: u32, title: &str, budget: Duration, body: impl FnOnce(&mut Verdict)) -> bool {
    let start = Instant::now();
    let mut v = Verdict::new();
    body(&mut v);
    let elapsed = start.elapsed();
    v.check(
        elapsed <= budget,
        format!("runtime {elapsed:.2?} within {budget:?}"),
    );
    for n in &v.notes {
        println!("    {n}");
    }
    println!(
        "criterion {number}: {} {title} ({elapsed:.2?})",
        if v.ok { "PASS" } else { "FAIL" }
    );
    v.ok
}

fn slope(seq: &CompositeSequence, window: (f64, f64)) -> Option<f64> {
    infidelity_order(seq, window).ok().and_then(|o| o.slope())
}

/// Fit window on which the infidelity of an order-n sequence stays well
/// above the floating-point floor.
fn order_window(n: u32) -> (f64, f64) {
    if n <= 3 {
        DEFAULT_ORDER_WINDOW
    } else {
        (1e-2, 3e-2)
    }
}

fn criterion1(v: &mut Verdict) {
    let single = CompositeSequence::single(FRAC_PI_4).unwrap();
    let band = tolerance_band(&single, 1e-4).unwrap();
    v.info(band.to_string());
    let w = band.half_width();
    v.check(
        (w - 0.018).abs() <= 0.001,
        format!("single-gate half width {w:.5} = 0.018 ± 0.001"),
    );
}

fn criterion2(v: &mut Verdict) {
    let cfg = SolverConfig {
        max_restarts: 500,
        ..Default::default()
    };
    for theta in [FRAC_PI_8, FRAC_PI_4, FRAC_PI_2] {
        let t0 = Instant::now();
        let p = SolverProblem::new(Family::Broadband(1), theta, Shape::TwoPulse).unwrap();
        let r = solve(&p, &cfg).unwrap();
        let phi = (-theta / PI).acos();
        let got = r.sequence.phases();
        let term = r.sequence.terminal_phase();
        // the terminal phase gate only matters modulo π (F(a + π) = −F(a))
        let matches = |s: f64| {
            angle_distance(got[0], 0.0) < 1e-6
                && angle_distance(got[1], s * phi) < 1e-6
                && angle_distance(got[2], s * 3.0 * phi) < 1e-6
                && angle_distance(2.0 * term, -4.0 * s * phi) < 2e-6
        };
        let elapsed = t0.elapsed();
        v.check(
            r.converged && r.residual_d <= 1e-10 && (matches(1.0) || matches(-1.0)) && elapsed.as_secs_f64() < 10.0,
            format!(
                "BB1 Θ/π={:.3}: D={:.2e} phases/π=({:.6}, {:.6} | {:.6}) vs φ/π={:.6} in {elapsed:.2?}",
                theta / PI,
                r.residual_d,
                got[1] / PI,
                got[2] / PI,
                term / PI,
                phi / PI
            ),
        );

        let t0 = Instant::now();
        let p = SolverProblem::new(Family::Broadband(2), theta, Shape::HalfPiChain(4)).unwrap();
        let r = solve(&p, &cfg).unwrap();
        let phi = (-theta / TAU).acos();
        let got = r.sequence.phases();
        // the middle π gate appears as two π/2 gates sharing the phase 3φ
        let pattern = [0.0, 1.0, 3.0, 3.0, 1.0];
        let matches = |s: f64| {
            pattern
                .iter()
                .zip(&got)
                .all(|(k, g)| angle_distance(*g, s * k * phi) < 1e-6)
        };
        let elapsed = t0.elapsed();
        v.check(
            r.converged
                && r.residual_d <= 1e-10
                && (matches(1.0) || matches(-1.0))
                && elapsed.as_secs_f64() < 10.0,
            format!(
                "BB2 Θ/π={:.3}: D={:.2e} phases/π={:?} vs φ/π={:.6} in {elapsed:.2?}",
                theta / PI,
                r.residual_d,
                got.iter()
                    .map(|x| (x / PI * 1e6).round() / 1e6)
                    .collect::<Vec<_>>(),
                phi / PI
            ),
        );
    }
}

/// Solver-precision broadband sequences of order 1…6 at Θ = π/4.
///
/// Orders 1–3 come from random restarts with shape escalation. Orders 4–6
/// are refined by the same Newton iteration starting from the tabulated
/// three-digit phases.
fn ladder() -> Vec<CompositeSequence> {
    let mut out = Vec::new();
    for n in 1..=3 {
        let cfg = SolverConfig {
            max_restarts: 2000,
            ..Default::default()
        };
        let r = solve_with_escalation(Family::Broadband(n), FRAC_PI_4, &cfg).unwrap();
        assert!(r.converged, "BB{n} did not converge");
        out.push(r.sequence);
    }
    let shapes = [
        Shape::Shortened(7),
        Shape::Shortened(9),
        Shape::Shortened(11),
    ];
    for (n, shape) in (4..=6).zip(shapes) {
        let tab = catalog::broadband(n, FRAC_PI_4).unwrap().sequence;
        let p = SolverProblem::new(Family::Broadband(n), FRAC_PI_4, shape)
            .unwrap()
            .with_free_terminal(tab.terminal_phase() != 0.0);
        let r = refine_sequence(&p, &tab, &SolverConfig::default()).unwrap();
        assert!(
            r.converged,
            "BB{n} refinement stalled at D={:.2e}",
            r.residual_d
        );
        out.push(r.sequence);
    }
    out
}

fn criterion3(v: &mut Verdict, seqs: &[CompositeSequence]) {
    let published = [0.11, 0.22, 0.30, 0.37, 0.42, 0.46];
    let totals = [1.25, 2.25, 3.25, 3.75, 4.75, 5.75];
    for (i, seq) in seqs.iter().enumerate() {
        let n = i + 1;
        let w = tolerance_band(seq, 1e-4).unwrap().half_width();
        let total = (seq.total_angle() / PI * 1e12).round() / 1e12;
        v.check(
            (w - published[i]).abs() <= 0.02 && (total - totals[i]).abs() < 1e-12,
            format!(
                "BB{n}: band {w:.4} vs {:.2}, total {total}π vs {}π, {} gates",
                published[i],
                totals[i],
                seq.len()
            ),
        );
    }
    // plateau shapes of the fidelity curves, read back from the CSV files
    let dir = tempfile::tempdir().unwrap();
    let mut widths = Vec::new();
    let mut at_zero = Vec::new();
    for (i, seq) in std::iter::once(CompositeSequence::single(FRAC_PI_4).unwrap())
        .chain(seqs.iter().cloned())
        .enumerate()
    {
        let path = dir.path().join(format!("scan{i}.csv"));
        scan(&seq, -1.0, 1.0, 2001)
            .unwrap()
            .write_csv(File::create(&path).unwrap())
            .unwrap();
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        for rec in csv::Reader::from_path(&path).unwrap().records() {
            let rec = rec.unwrap();
            let f = |k: usize| rec[k].parse::<f64>().unwrap();
            rows.push((f(0), f(1), f(2)));
        }
        let zero = rows
            .iter()
            .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
            .unwrap();
        at_zero.push(zero.1);
        let inside = rows.iter().filter(|r| r.2 <= 1e-4).count();
        widths.push(inside);
    }
    v.check(
        widths.windows(2).all(|w| w[1] > w[0]),
        format!("plateau points (infidelity ≤ 1e-4, 2001-point grid) grow with n: {widths:?}"),
    );
    v.check(
        at_zero.iter().all(|f| (1.0 - f).abs() < 1e-12),
        "every curve has fidelity 1 at ε = 0",
    );
}

fn criterion4(v: &mut Verdict, seqs: &[CompositeSequence]) {
    for (i, seq) in seqs.iter().take(4).enumerate() {
        let n = (i + 1) as u32;
        let window = order_window(n);
        let want = (2 * n + 2) as f64;
        match slope(seq, window) {
            Some(s) => v.check(
                (s - want).abs() <= 0.3,
                format!("BB{n}: slope {s:.3} vs {want} on ε ∈ {window:?}"),
            ),
            None => v.check(
                false,
                format!("BB{n}: infidelity below the floor on {window:?}"),
            ),
        }
    }
    if let Some(s) = slope(&seqs[3], DEFAULT_ORDER_WINDOW) {
        v.info(format!("BB4 slope on {DEFAULT_ORDER_WINDOW:?}: {s:.3}"));
    } else {
        v.info(format!(
            "BB4 on {DEFAULT_ORDER_WINDOW:?}: infidelity below the floating-point floor"
        ));
    }
}

fn criterion5(v: &mut Verdict) {
    for (name, n1, n2) in [("PB(1,1)", 1u32, 1u32), ("PB(2,2)", 2, 2)] {
        let seq = catalog::passband(n1, n2, FRAC_PI_4).unwrap().sequence;
        let (first, second) = pi_chain_conditions(&seq).expect("π-gate chain");
        let worst = if n2 >= 2 {
            first.norm().max(second.norm())
        } else {
            first.norm()
        };
        let used = if n2 >= 2 {
            "both conditions"
        } else {
            "first condition only"
        };
        v.check(
            worst <= 1e-9,
            format!(
                "{name} ({used}): reduced conditions |c1|={:.2e} |c2|={:.2e}",
                first.norm(),
                second.norm()
            ),
        );
        // the printed reduced forms, for comparison only
        let theta = FRAC_PI_4;
        let phis: Vec<f64> = seq.gates()[1..].iter().map(|g| g.phi()).collect();
        let s1: C64 = phis.iter().map(|p| C64::from_polar(1.0, *p)).sum();
        let mut s2 = C64::new(0.0, 0.0);
        for k in 0..phis.len() {
            for l in k + 1..phis.len() {
                s2 += C64::from_polar(1.0, phis[k] - phis[l]);
            }
        }
        let printed1 = C64::from(2.0 * theta) + s1 * PI;
        let printed2 = C64::from(3.0 * PI * PI - 2.0 * theta * theta) + s2 * PI * PI;
        v.info(format!(
            "{name}: printed forms evaluate to |{:.3}| and |{:.3}|",
            printed1.norm(),
            printed2.norm()
        ));
        let nb = narrowband_conditions(&seq);
        v.info(format!(
            "{name}: general conditions |{:.2e}| |{:.2e}|",
            nb.first.norm(),
            nb.second.norm()
        ));
    }
    for entry in catalog::table2() {
        let u = entry.sequence.propagator(&ErrorModel::relative(-1.0));
        let f = 1.0 - infidelity(&Mat4::identity(), &u);
        v.check(
            f >= 1.0 - 1e-8,
            format!("{}: fidelity vs identity at ε = −1 is {f:.12}", entry.name),
        );
        let (b, nb) = match entry.sequence.family() {
            Family::Passband(a, c) => passband_residuals(&entry.sequence, a, c),
            _ => unreachable!(),
        };
        v.info(format!(
            "{}: broadband residual {:.2e}, narrowband residual {:.2e}",
            entry.name,
            b.max_norm(),
            nb.max_norm()
        ));
    }
    let pb33 = catalog::passband(3, 3, FRAC_PI_4).unwrap().sequence;
    let to_target = scan_with(&pb33, -1.2, 0.6, 1801, 0.0, ScanReference::Target).unwrap();
    let to_identity = scan_with(&pb33, -1.2, 0.6, 1801, 0.0, ScanReference::Identity).unwrap();
    let plateau = to_target.plateau_around(0.0, 1e-4);
    let suppression = to_identity.plateau_around(-1.0, 1e-4);
    match (plateau, suppression) {
        (Some((a, b)), Some((c, d))) => {
            v.check(
                a < 0.0 && b > 0.0 && c < -1.0 && d > -1.0 && d < a,
                format!("PB(3,3): plateau ε ∈ [{a:.3}, {b:.3}] (width {:.3}), suppression ε ∈ [{c:.3}, {d:.3}] (width {:.3})", b - a, d - c),
            );
        }
        other => v.check(
            false,
            format!("PB(3,3): missing plateau or suppression region {other:?}"),
        ),
    }
}

fn criterion6(v: &mut Verdict) {
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let theta = PI * (i + 1) as f64 / 20.0;
        for j in 0..20 {
            let phi = TAU * j as f64 / 20.0;
            let c = AbsoluteComposite::new(theta, phi).unwrap();
            let clean = absolute_composite_propagator(&c, 0.0);
            for k in 0..20 {
                let xi = -PI + TAU * k as f64 / 19.0;
                worst = worst.max((absolute_composite_propagator(&c, xi) - clean).norm());
            }
        }
    }
    v.check(
        worst <= 1e-12,
        format!("20×20×20 grid: max ‖U_A(ξ) − U_A(0)‖ = {worst:.2e}"),
    );
    let bb1 = catalog::broadband(1, FRAC_PI_4).unwrap().sequence;
    let wrapped = wrap_sequence_absolute(&bb1);
    let s = infidelity_order_at(&wrapped, DEFAULT_ORDER_WINDOW, 0.3)
        .unwrap()
        .slope();
    v.check(
        s.is_some_and(|s| (s - 4.0).abs() <= 0.3),
        format!(
            "wrapped BB1 ({} gates) slope at ξ = 0.3: {s:?}",
            wrapped.len()
        ),
    );
    let plain = infidelity_order_at(&bb1, DEFAULT_ORDER_WINDOW, 0.3).unwrap();
    v.info(format!("unwrapped BB1 at ξ = 0.3: {plain:?}"));
}

fn criterion7(v: &mut Verdict) {
    let opts = OdeOptions::default();
    let mut worst: f64 = 0.0;
    let mut largest_n = 0;
    for k in 0..10 {
        let g = 0.25;
        let gt = 0.5 * (k + 1) as f64;
        let cfg = TrapConfig::new(g, 1.0, gt / g)
            .with_phases([0.3 * k as f64, 0.7], [0.2, -0.4 * k as f64])
            .with_initial_fock(3);
        largest_n = largest_n.max(cfg.n_max);
        let num = evolve_low_columns(&cfg, &opts).unwrap();
        let ana = analytic_propagator(&cfg)
            .unwrap()
            .low_columns(cfg.initial_fock);
        let d = (num - ana).norm();
        worst = worst.max(d);
    }
    v.check(
        worst <= 1e-6 && largest_n <= 40,
        format!("10-point grid, gT = 0.5…5: max distance {worst:.2e}, n_max ≤ {largest_n}"),
    );

    let cfg = TrapConfig::new(1.0 / 32f64.sqrt(), 1.0, TAU).with_initial_fock(3);
    let u = two_pulse_gate(&cfg).unwrap();
    for n in [0, 3] {
        let p = u.fock_return_probability(n);
        v.check(
            p >= 1.0 - 1e-6,
            format!(
                "two-pulse return probability for |{n}⟩: 1 − {:.2e}",
                1.0 - p
            ),
        );
    }

    let base = TrapConfig::new(1.0 / 32f64.sqrt(), 1.0, TAU);
    let target = target_gate(FRAC_PI_4);
    let bb2 = catalog::broadband(2, FRAC_PI_4).unwrap().sequence;
    let single = CompositeSequence::single(FRAC_PI_4).unwrap();
    for addressing in [Addressing::Individual, Addressing::Global] {
        let b = composite_physical_gate(&bb2, &base, 0.05, addressing, &opts).unwrap();
        let s = composite_physical_gate(&single, &base, 0.05, addressing, &opts).unwrap();
        let ib = 1.0 - gate_fidelity(&target, &b.qubit_gate);
        let is = 1.0 - gate_fidelity(&target, &s.qubit_gate);
        v.check(
            ib <= 1e-4 && is > 1e-4,
            format!("{addressing:?}: eps_g = 0.05 infidelity BB2 {ib:.2e}, single {is:.2e}"),
        );
    }
}

fn criterion8(v: &mut Verdict) {
    for (name, suite) in support::SUITES {
        let t0 = Instant::now();
        let r = suite(256);
        v.check(
            r.is_ok(),
            format!(
                "{name}: 256 cases in {:.2?} {}",
                t0.elapsed(),
                r.err().unwrap_or_default()
            ),
        );
    }
}

fn main() {
    let mut all = true;
    all &= run(
        1,
        "single-gate tolerance band",
        Duration::from_secs(1),
        criterion1,
    );
    all &= run(
        2,
        "analytic BB1/BB2 from the solver",
        Duration::from_secs(60),
        criterion2,
    );
    let t0 = Instant::now();
    let seqs = ladder();
    let ladder_time = t0.elapsed();
    all &= run(
        3,
        "tolerance ladder n = 1…6",
        Duration::from_secs(600).saturating_sub(ladder_time),
        |v| {
            v.info(format!(
                "solving and refining the ladder took {ladder_time:.2?}"
            ));
            criterion3(v, &seqs)
        },
    );
    all &= run(4, "infidelity order 2n+2", Duration::from_secs(60), |v| {
        criterion4(v, &seqs)
    });
    all &= run(
        5,
        "passband conditions and curve",
        Duration::from_secs(60),
        criterion5,
    );
    all &= run(
        6,
        "absolute-error composites",
        Duration::from_secs(30),
        criterion6,
    );
    all &= run(
        7,
        "ion-trap simulation",
        Duration::from_secs(300),
        criterion7,
    );
    all &= run(8, "property suites", Duration::from_secs(120), criterion8);
    println!("acceptance: {}", if all { "PASS" } else { "FAIL" });
    if !all {
        std::process::exit(1);
    }
}
