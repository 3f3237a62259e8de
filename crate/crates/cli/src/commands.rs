use std::f64::consts::PI;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use cphase::abserr::wrap_sequence_absolute;
use cphase::analysis::{
    band_around, infidelity, infidelity_order_at, scan_with, tolerance_band, OrderEstimate,
    ScanReference, DEFAULT_ORDER_WINDOW,
};
use cphase::deriv::{broadband_residuals, passband_residuals};
use cphase::gates::catalog::{self, CatalogEntry};
use cphase::gates::file::{read_sequence, write_sequence, write_sequences};
use cphase::gates::target_gate;
use cphase::iontrap::{
    composite_physical_gate, gate_fidelity, parse_trap_file, rotation_angle, two_pulse_gate,
    Addressing, OdeOptions,
};
use cphase::smallmat::Mat4;
use cphase::solver::{
    solve, solve_with_escalation, Shape, SolverConfig, SolverProblem, SolverResult,
};
use cphase::{CompositeSequence, ErrorModel, Family};

use crate::{
    AddressingKind, BandArgs, CatalogArgs, Command, FamilyKind, IontrapArgs, OrderArgs, Reference,
    ScanArgs, SeqSource, SolveArgs, Table, VerifyArgs, WrapArgs,
};

/// A failed run, carrying its exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input: exit code 1.
    Invalid(String),
    /// Valid input but no acceptable result (non-convergence, truncation guard,
    /// failed verification): exit code 2.
    Unmet(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Unmet(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(m) | Failure::Unmet(m) => f.write_str(m),
        }
    }
}

impl From<cphase::Error> for Failure {
    fn from(e: cphase::Error) -> Self {
        match e {
            cphase::Error::Truncation { .. } => Failure::Unmet(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Invalid(format!("i/o error: {e}"))
    }
}

type Outcome = Result<(), Failure>;

pub fn run(command: &Command) -> Outcome {
    match command {
        Command::Solve(a) => solve_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::Scan(a) => scan_cmd(a),
        Command::Band(a) => band_cmd(a),
        Command::Order(a) => order_cmd(a),
        Command::WrapAbs(a) => wrap_cmd(a),
        Command::Iontrap(a) => iontrap_cmd(a),
        Command::Catalog(a) => catalog_cmd(a),
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            Failure::Invalid(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Summary lines go to stdout unless stdout already carries the data.
fn summary(data_in_file: bool, line: &str) {
    if data_in_file {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

fn load(source: &SeqSource) -> Result<CompositeSequence, Failure> {
    match (&source.seq, &source.entry) {
        (Some(path), _) => {
            let file = File::open(path)
                .map_err(|e| Failure::Invalid(format!("cannot open {}: {e}", path.display())))?;
            Ok(read_sequence(file)?)
        }
        (None, Some(name)) => Ok(catalog::by_name(name, source.theta_over_pi * PI)?.sequence),
        (None, None) => Err(Failure::Invalid("give --seq or --entry".into())),
    }
}

fn reference(r: Reference) -> ScanReference {
    match r {
        Reference::Target => ScanReference::Target,
        Reference::Identity => ScanReference::Identity,
    }
}

fn solve_cmd(a: &SolveArgs) -> Outcome {
    let family = match a.family {
        FamilyKind::Bb => {
            if a.narrow_order.is_some() {
                return Err(Failure::Invalid(
                    "--narrow-order only applies to passband sequences".into(),
                ));
            }
            Family::Broadband(a.order)
        }
        FamilyKind::Pb => Family::Passband(a.order, a.narrow_order.unwrap_or(a.order)),
    };
    let cfg = SolverConfig {
        residual_tolerance: a.tolerance,
        max_newton_iters: a.max_iters,
        max_restarts: a.max_restarts,
        rng_seed: a.seed,
        ..Default::default()
    };
    cfg.validate()?;
    let theta = a.theta_over_pi * PI;
    let result: SolverResult = match &a.shape {
        Some(text) => {
            let shape: Shape = text.parse()?;
            let problem =
                SolverProblem::new(family, theta, shape)?.with_free_terminal(a.free_terminal);
            solve(&problem, &cfg)?
        }
        None => {
            if a.free_terminal {
                return Err(Failure::Invalid(
                    "--free-terminal needs an explicit --shape".into(),
                ));
            }
            solve_with_escalation(family, theta, &cfg)?
        }
    };
    if let Some(path) = &a.log {
        let mut log = output(Some(path))?;
        for line in &result.log {
            writeln!(log, "{line}")?;
        }
        log.flush()?;
    }
    let mut out = output(a.out.as_deref())?;
    write_sequence(&mut out, &result.sequence)?;
    out.flush()?;
    let shapes: Vec<String> = result.attempted.iter().map(|s| s.to_string()).collect();
    summary(
        a.out.is_some(),
        &format!(
            "converged={} D={:.3e} restarts={} iters={} shapes={} total_over_pi={}",
            result.converged,
            result.residual_d,
            result.restarts_used,
            result.iterations_used,
            shapes.join(","),
            result.sequence.total_angle() / PI
        ),
    );
    if result.converged {
        Ok(())
    } else {
        Err(Failure::Unmet(format!(
            "no restart reached D <= {:e} (best D = {:.3e})",
            cfg.residual_tolerance, result.residual_d
        )))
    }
}

struct Report {
    line: String,
    ok: bool,
}

/// Largest residual norm a sequence file must reach to count as solved.
const FILE_RESIDUAL_LIMIT: f64 = 1e-8;
/// Largest residual norm of closed-form catalog rows.
const ANALYTIC_RESIDUAL_LIMIT: f64 = 1e-9;
/// Minimal error-free fidelity (decimal catalog rows are rounded).
const ZERO_ERROR_FIDELITY: f64 = 1.0 - 1e-4;

fn verify_one(
    name: &str,
    seq: &CompositeSequence,
    residual_limit: Option<f64>,
    threshold: f64,
) -> Report {
    let zero = infidelity(
        &target_gate(seq.target_theta()),
        &seq.propagator(&ErrorModel::none()),
    );
    let mut ok = 1.0 - zero >= ZERO_ERROR_FIDELITY;
    let mut line = format!(
        "name={name} family={} gates={} total_over_pi={} infidelity0={zero:.3e}",
        seq.family(),
        seq.len(),
        seq.total_angle() / PI
    );
    if let Err(e) = seq.check_shape() {
        ok = false;
        line.push_str(&format!(" shape_error=\"{e}\""));
    }
    let residual = match seq.family() {
        Family::Broadband(n) => Some(broadband_residuals(seq, n).max_norm()),
        Family::Passband(n1, n2) => {
            let (b, nb) = passband_residuals(seq, n1, n2);
            Some(b.max_norm().max(nb.max_norm()))
        }
        _ => None,
    };
    if let Some(r) = residual {
        line.push_str(&format!(" residual={r:.3e}"));
        if let Some(limit) = residual_limit {
            ok &= r <= limit;
        }
    }
    match tolerance_band(seq, threshold) {
        Ok(b) => line.push_str(&format!(" band={:.4}", b.half_width())),
        Err(_) => line.push_str(" band=none"),
    }
    if let Family::Passband(..) = seq.family() {
        match band_around(seq, -1.0, ScanReference::Identity, threshold) {
            Ok(b) => line.push_str(&format!(" narrow_band={:.4}", b.half_width_around(-1.0))),
            Err(_) => line.push_str(" narrow_band=none"),
        }
    }
    match infidelity_order_at(seq, DEFAULT_ORDER_WINDOW, 0.0) {
        Ok(OrderEstimate::Slope(s)) => line.push_str(&format!(" order={s:.2}")),
        Ok(OrderEstimate::Indeterminate) => line.push_str(" order=indeterminate"),
        Err(e) => line.push_str(&format!(" order_error=\"{e}\"")),
    }
    line.push_str(if ok { " status=ok" } else { " status=FAIL" });
    Report { line, ok }
}

fn table_entries(table: Table, theta: f64) -> Result<Vec<CatalogEntry>, Failure> {
    let rows = match table {
        Table::Table1 => catalog::table1_at(theta)?,
        Table::Table2 => catalog::table2_at(theta)?,
        Table::All => {
            let mut all = catalog::table1_at(theta)?;
            all.extend(catalog::table2_at(theta)?);
            all
        }
    };
    Ok(rows)
}

fn verify_cmd(a: &VerifyArgs) -> Outcome {
    if !(a.threshold > 0.0 && a.threshold < 1.0) {
        return Err(Failure::Invalid(format!(
            "threshold must lie in (0, 1), got {}",
            a.threshold
        )));
    }
    let reports: Vec<Report> = match (&a.catalog, &a.seq) {
        (Some(table), _) => table_entries(*table, a.theta_over_pi * PI)?
            .iter()
            .map(|e| {
                let limit = e.analytic.then_some(ANALYTIC_RESIDUAL_LIMIT);
                verify_one(&e.name, &e.sequence, limit, a.threshold)
            })
            .collect(),
        (None, Some(path)) => {
            let file = File::open(path)
                .map_err(|e| Failure::Invalid(format!("cannot open {}: {e}", path.display())))?;
            let seq = read_sequence(file)?;
            vec![verify_one(
                &path.display().to_string(),
                &seq,
                Some(FILE_RESIDUAL_LIMIT),
                a.threshold,
            )]
        }
        (None, None) => return Err(Failure::Invalid("give --catalog or --seq".into())),
    };
    let mut out = io::stdout().lock();
    for r in &reports {
        writeln!(out, "{}", r.line)?;
    }
    let failed = reports.iter().filter(|r| !r.ok).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure::Unmet(format!(
            "{failed} of {} entries failed verification",
            reports.len()
        )))
    }
}

fn scan_cmd(a: &ScanArgs) -> Outcome {
    let seq = load(&a.source)?;
    let result = scan_with(
        &seq,
        a.min,
        a.max,
        a.steps,
        a.xi_over_pi * PI,
        reference(a.reference),
    )?;
    let mut out = output(a.out.as_deref())?;
    result.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn band_cmd(a: &BandArgs) -> Outcome {
    let seq = load(&a.source)?;
    let band = band_around(&seq, a.center, reference(a.reference), a.threshold)?;
    println!("{band}");
    Ok(())
}

fn order_cmd(a: &OrderArgs) -> Outcome {
    let seq = load(&a.source)?;
    match infidelity_order_at(&seq, (a.low, a.high), a.xi_over_pi * PI)? {
        OrderEstimate::Slope(s) => println!("order={s}"),
        OrderEstimate::Indeterminate => println!("order=indeterminate"),
    }
    Ok(())
}

fn wrap_cmd(a: &WrapArgs) -> Outcome {
    let seq = load(&a.source)?;
    let mut out = output(a.out.as_deref())?;
    write_sequence(&mut out, &wrap_sequence_absolute(&seq))?;
    out.flush()?;
    Ok(())
}

fn write_matrix(out: &mut dyn Write, m: &Mat4) -> io::Result<()> {
    writeln!(out, "re0,im0,re1,im1,re2,im2,re3,im3")?;
    for r in 0..4 {
        let row: Vec<String> = (0..4)
            .flat_map(|c| {
                [
                    format!("{:.16e}", m[(r, c)].re),
                    format!("{:.16e}", m[(r, c)].im),
                ]
            })
            .collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

fn iontrap_cmd(a: &IontrapArgs) -> Outcome {
    let trap = parse_trap_file(&a.config)?;
    let cfg = trap.config;
    eprintln!("trap: {cfg:?} eps_g={}", trap.eps_g);
    let (gate, target, leakage) = match &a.seq {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| Failure::Invalid(format!("cannot open {}: {e}", path.display())))?;
            let seq = read_sequence(file)?;
            let addressing = match a.addressing {
                AddressingKind::Global => Addressing::Global,
                AddressingKind::Individual => Addressing::Individual,
            };
            let g = composite_physical_gate(
                &seq,
                &cfg,
                trap.eps_g,
                addressing,
                &OdeOptions::default(),
            )?;
            (g.qubit_gate, target_gate(seq.target_theta()), g.leakage)
        }
        None => {
            let mut pulse = cfg;
            pulse.g *= 1.0 + trap.eps_g;
            let u = two_pulse_gate(&pulse)?;
            let n = cfg.initial_fock;
            (
                u.spin_block(n, n),
                target_gate(rotation_angle(&cfg)),
                1.0 - u.fock_return_probability(n),
            )
        }
    };
    let mut out = output(a.out.as_deref())?;
    write_matrix(&mut out, &gate)?;
    out.flush()?;
    let f = gate_fidelity(&target, &gate);
    summary(
        a.out.is_some(),
        &format!(
            "leakage={leakage:.3e} fidelity={f:.15} infidelity={:.3e}",
            1.0 - f
        ),
    );
    Ok(())
}

fn catalog_cmd(a: &CatalogArgs) -> Outcome {
    let entries = table_entries(a.table, a.theta_over_pi * PI)?;
    let tagged: Vec<(Option<&str>, &CompositeSequence)> = entries
        .iter()
        .map(|e| (Some(e.source.as_str()), &e.sequence))
        .collect();
    let mut out = output(a.out.as_deref())?;
    write_sequences(&mut out, &tagged)?;
    out.flush()?;
    Ok(())
}
