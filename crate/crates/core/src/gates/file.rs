//! Sequence CSV files.
//!
//! ```text
//! index,theta_over_pi,phi_over_pi,family,target_over_pi[,source]
//! 0,2.5000000000000000e-1,0.0000000000000000e0,BROADBAND(1),2.5000000000000000e-1
//! 1,5.0000000000000000e-1,...
//! terminal,,1.2...e0,BROADBAND(1),2.5000000000000000e-1
//! ```
//!
//! The first three columns are mandatory; `family` and `target_over_pi`
//! carry the metadata needed to reload a sequence, and `source` groups
//! several sequences in one file (catalog dumps). Angles are in units of π.

use std::f64::consts::PI;
use std::io::{Read, Write};

use super::{CompositeSequence, Family, PhasedGate};
use crate::error::{Error, Result};

fn fmt_angle(rad: f64) -> String {
    format!("{:.16e}", rad / PI)
}

/// Write sequences, each optionally tagged with a source label.
pub fn write_sequences<W: Write>(
    out: W,
    seqs: &[(Option<&str>, &CompositeSequence)],
) -> Result<()> {
    let with_source = seqs.iter().any(|(s, _)| s.is_some());
    let mut w = csv::WriterBuilder::new().flexible(false).from_writer(out);
    let mut header = vec![
        "index",
        "theta_over_pi",
        "phi_over_pi",
        "family",
        "target_over_pi",
    ];
    if with_source {
        header.push("source");
    }
    w.write_record(&header)?;
    for (source, seq) in seqs {
        let family = seq.family().to_string();
        let target = fmt_angle(seq.target_theta());
        let tail = |rec: &mut Vec<String>| {
            rec.push(family.clone());
            rec.push(target.clone());
            if with_source {
                rec.push(source.unwrap_or("").to_string());
            }
        };
        for (k, g) in seq.gates().iter().enumerate() {
            let mut rec = vec![k.to_string(), fmt_angle(g.theta()), fmt_angle(g.phi())];
            tail(&mut rec);
            w.write_record(&rec)?;
        }
        if seq.terminal_phase() != 0.0 {
            let mut rec = vec![
                "terminal".to_string(),
                String::new(),
                fmt_angle(seq.terminal_phase()),
            ];
            tail(&mut rec);
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_sequence<W: Write>(out: W, seq: &CompositeSequence) -> Result<()> {
    write_sequences(out, &[(None, seq)])
}

struct Pending {
    source: Option<String>,
    family: Option<Family>,
    target: Option<f64>,
    gates: Vec<PhasedGate>,
    terminal: f64,
}

impl Pending {
    fn new(source: Option<String>) -> Self {
        Self {
            source,
            family: None,
            target: None,
            gates: Vec::new(),
            terminal: 0.0,
        }
    }

    fn finish(self, line: usize) -> Result<(Option<String>, CompositeSequence)> {
        let first = self.gates.first().copied().ok_or_else(|| Error::Parse {
            line,
            message: "sequence has no gate rows".into(),
        })?;
        // without metadata assume the leading gate is the bare target
        let target = self.target.unwrap_or_else(|| first.theta());
        let family = self.family.unwrap_or(Family::Single);
        let seq = CompositeSequence::new(self.gates, self.terminal, target, family)?;
        Ok((self.source, seq))
    }
}

/// Read every sequence in a file, grouped by the optional `source` column.
pub fn read_sequences<R: Read>(input: R) -> Result<Vec<(Option<String>, CompositeSequence)>> {
    let mut r = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (Some(c_idx), Some(c_theta), Some(c_phi)) =
        (col("index"), col("theta_over_pi"), col("phi_over_pi"))
    else {
        return Err(Error::Parse {
            line: 1,
            message: "header must contain index,theta_over_pi,phi_over_pi".into(),
        });
    };
    let (c_family, c_target, c_source) = (col("family"), col("target_over_pi"), col("source"));

    let mut out = Vec::new();
    let mut current: Option<Pending> = None;
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let field = |c: Option<usize>| c.and_then(|c| rec.get(c)).filter(|s| !s.is_empty());
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("invalid {what} '{s}'"),
            })
        };
        let source = field(c_source).map(str::to_string);
        let same_group = current
            .as_ref()
            .map(|p| p.source == source)
            .unwrap_or(false);
        if !same_group {
            if let Some(p) = current.take() {
                out.push(p.finish(line)?);
            }
            current = Some(Pending::new(source));
        }
        let p = current.as_mut().expect("group initialised above");
        if let Some(f) = field(c_family) {
            p.family = Some(f.parse()?);
        }
        if let Some(t) = field(c_target) {
            p.target = Some(parse(t, "target angle")? * PI);
        }
        let idx = field(Some(c_idx)).unwrap_or("");
        let phi = parse(field(Some(c_phi)).unwrap_or(""), "phase")? * PI;
        if idx == "terminal" {
            p.terminal = phi;
        } else {
            let k: usize = idx.parse().map_err(|_| Error::Parse {
                line,
                message: format!("invalid gate index '{idx}'"),
            })?;
            if k != p.gates.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("gate index {k} out of order (expected {})", p.gates.len()),
                });
            }
            let theta = parse(field(Some(c_theta)).unwrap_or(""), "rotation angle")? * PI;
            p.gates.push(PhasedGate::new(theta, phi)?);
        }
    }
    match current {
        Some(p) => out.push(p.finish(0)?),
        None => {
            return Err(Error::Parse {
                line: 2,
                message: "file contains no gate rows".into(),
            })
        }
    }
    Ok(out)
}

/// Read a file expected to hold exactly one sequence.
pub fn read_sequence<R: Read>(input: R) -> Result<CompositeSequence> {
    let mut all = read_sequences(input)?;
    if all.len() != 1 {
        return Err(Error::Parse {
            line: 0,
            message: format!("expected one sequence, found {}", all.len()),
        });
    }
    Ok(all.remove(0).1)
}
