//! Gate fidelity, error scans, tolerance bands and infidelity-order fits.

use std::fmt;
use std::io::Write;

use crate::deriv::ErrorModel;
use crate::error::{validation, Result};
use crate::gates::{target_gate, CompositeSequence};
use crate::smallmat::{Mat4, OperatorExt, C64};

/// Unitarity tolerance for fidelity inputs.
const UNITARY_TOL: f64 = 1e-9;

/// Default infidelity benchmark.
pub const DEFAULT_THRESHOLD: f64 = 1e-4;

/// Below this level the stable infidelity formula is dominated by rounding
/// in the propagator product itself.
pub const INFIDELITY_FLOOR: f64 = 1e-28;

/// Raw normalized overlap `Tr(A†B)/4`.
pub fn trace_overlap(a: &Mat4, b: &Mat4) -> C64 {
    (a.adjoint() * b).trace() / 4.0
}

fn check_unitary(m: &Mat4, which: &str) -> Result<()> {
    if !m.all_finite() {
        return validation(format!("{which} has non-finite entries"));
    }
    let d = m.unitarity_defect();
    if d > UNITARY_TOL {
        return validation(format!("{which} is not unitary (defect {d:.3e})"));
    }
    Ok(())
}

/// `|Tr(A†B)|/4`; equals 1 iff `B = e^{iγ}A`.
pub fn fidelity(a: &Mat4, b: &Mat4) -> Result<f64> {
    check_unitary(a, "first operator")?;
    check_unitary(b, "second operator")?;
    Ok(trace_overlap(a, b).norm())
}

/// `1 − |Tr(A†B)|/4` evaluated without cancellation.
///
/// For unitary `W = A†B` with `e^{iγ} = Tr W/|Tr W|` and
/// `X = e^{−iγ}W − I`, unitarity gives `Re Tr X = −‖X‖²/2`, hence
/// `1 − |Tr W|/4 = ‖X‖²_F/8`. `X` carries the deviation at full relative
/// precision, so infidelities far below 1e−16 stay resolvable.
pub fn infidelity(a: &Mat4, b: &Mat4) -> f64 {
    let w = a.adjoint() * b;
    let tr = w.trace();
    let phase = if tr.norm() > 0.0 {
        tr.conj() / tr.norm()
    } else {
        C64::from(1.0)
    };
    let x = w * phase - Mat4::identity();
    x.norm_squared() / 8.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub epsilon: f64,
    pub fidelity: f64,
    pub infidelity: f64,
}

/// Fidelity versus relative error over a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub sequence_id: String,
    pub target_theta: f64,
    pub xi: f64,
    pub points: Vec<ScanPoint>,
}

/// What the distorted propagator is compared with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanReference {
    /// The target gate `U(Θ)`.
    Target,
    /// The identity (the narrowband side of passband sequences).
    Identity,
}

impl ScanResult {
    /// Write `epsilon,fidelity,infidelity` rows with 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epsilon", "fidelity", "infidelity"])?;
        for p in &self.points {
            w.write_record([
                format!("{:.16e}", p.epsilon),
                format!("{:.16e}", p.fidelity),
                format!("{:.16e}", p.infidelity),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Longest run of consecutive grid points containing `center` with
    /// infidelity at or below `threshold`; returns its `(low, high)` ends.
    pub fn plateau_around(&self, center: f64, threshold: f64) -> Option<(f64, f64)> {
        let idx = self
            .points
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1.epsilon - center)
                    .abs()
                    .total_cmp(&(b.1.epsilon - center).abs())
            })?
            .0;
        if self.points[idx].infidelity > threshold {
            return None;
        }
        let mut lo = idx;
        while lo > 0 && self.points[lo - 1].infidelity <= threshold {
            lo -= 1;
        }
        let mut hi = idx;
        while hi + 1 < self.points.len() && self.points[hi + 1].infidelity <= threshold {
            hi += 1;
        }
        Some((self.points[lo].epsilon, self.points[hi].epsilon))
    }
}

/// Scan against the target gate with no absolute offset.
pub fn scan(
    seq: &CompositeSequence,
    eps_min: f64,
    eps_max: f64,
    steps: usize,
) -> Result<ScanResult> {
    scan_with(seq, eps_min, eps_max, steps, 0.0, ScanReference::Target)
}

pub fn scan_with(
    seq: &CompositeSequence,
    eps_min: f64,
    eps_max: f64,
    steps: usize,
    xi: f64,
    reference: ScanReference,
) -> Result<ScanResult> {
    if !(eps_min.is_finite() && eps_max.is_finite() && eps_min < eps_max) {
        return validation(format!(
            "scan range must satisfy min < max, got [{eps_min}, {eps_max}]"
        ));
    }
    if steps < 2 {
        return validation("a scan needs at least two grid points");
    }
    let target = match reference {
        ScanReference::Target => target_gate(seq.target_theta()),
        ScanReference::Identity => Mat4::identity(),
    };
    let h = (eps_max - eps_min) / (steps - 1) as f64;
    let points = (0..steps)
        .map(|k| {
            let epsilon = if k + 1 == steps {
                eps_max
            } else {
                eps_min + k as f64 * h
            };
            let b = seq.propagator(&ErrorModel::new(epsilon, xi));
            ScanPoint {
                epsilon,
                fidelity: trace_overlap(&target, &b).norm(),
                infidelity: infidelity(&target, &b),
            }
        })
        .collect();
    Ok(ScanResult {
        sequence_id: seq.family().to_string(),
        target_theta: seq.target_theta(),
        xi,
        points,
    })
}

/// Error interval around a center point where infidelity stays below the
/// threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceBand {
    pub eps_low: f64,
    pub eps_high: f64,
    pub threshold: f64,
}

impl ToleranceBand {
    /// Symmetric half-width `min(|low|, high)` (relative to ε = 0).
    pub fn half_width(&self) -> f64 {
        self.half_width_around(0.0)
    }

    /// Symmetric half-width about an arbitrary center.
    pub fn half_width_around(&self, center: f64) -> f64 {
        (center - self.eps_low).min(self.eps_high - center)
    }
}

impl fmt::Display for ToleranceBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "band_low={} band_high={} threshold={}",
            self.eps_low, self.eps_high, self.threshold
        )
    }
}

/// Coarse outward step of the crossing search.
const BAND_STEP: f64 = 1e-3;
/// Bisection stops once the bracket is this narrow.
const BAND_RESOLUTION: f64 = 1e-9;
/// Search stops at this distance from the center.
const BAND_LIMIT: f64 = 2.0;

/// Tolerance band around ε = 0 against `U(Θ)`.
pub fn tolerance_band(seq: &CompositeSequence, threshold: f64) -> Result<ToleranceBand> {
    band_around(seq, 0.0, ScanReference::Target, threshold)
}

/// Band around an arbitrary center for either reference operator.
///
/// Steps outward from `center` until the first grid point whose infidelity
/// exceeds the threshold, then bisects that bracket.
pub fn band_around(
    seq: &CompositeSequence,
    center: f64,
    reference: ScanReference,
    threshold: f64,
) -> Result<ToleranceBand> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return validation(format!("threshold must lie in (0, 1), got {threshold}"));
    }
    let target = match reference {
        ScanReference::Target => target_gate(seq.target_theta()),
        ScanReference::Identity => Mat4::identity(),
    };
    let bad =
        |eps: f64| infidelity(&target, &seq.propagator(&ErrorModel::relative(eps))) > threshold;
    if bad(center) {
        return validation(format!(
            "infidelity at ε={center} already exceeds the threshold {threshold}"
        ));
    }
    let edge = |dir: f64| -> f64 {
        let mut inside = 0.0;
        let mut k = 1;
        loop {
            let d = (k as f64 * BAND_STEP).min(BAND_LIMIT);
            if bad(center + dir * d) {
                let mut lo = inside;
                let mut hi = d;
                while hi - lo > BAND_RESOLUTION {
                    let mid = 0.5 * (lo + hi);
                    if bad(center + dir * mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return center + dir * lo;
            }
            if d >= BAND_LIMIT {
                return center + dir * d;
            }
            inside = d;
            k += 1;
        }
    };
    Ok(ToleranceBand {
        eps_low: edge(-1.0),
        eps_high: edge(1.0),
        threshold,
    })
}

/// Result of an infidelity scaling fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrderEstimate {
    /// Least-squares slope of `log10(1 − F)` versus `log10 ε`.
    Slope(f64),
    /// Some point of the window fell below [`INFIDELITY_FLOOR`].
    Indeterminate,
}

impl OrderEstimate {
    pub fn slope(&self) -> Option<f64> {
        match self {
            OrderEstimate::Slope(s) => Some(*s),
            OrderEstimate::Indeterminate => None,
        }
    }
}

/// Default fit window on the positive ε branch.
pub const DEFAULT_ORDER_WINDOW: (f64, f64) = (1e-3, 1e-2);
const ORDER_POINTS: usize = 21;

/// Fitted exponent of the infidelity near ε = 0.
pub fn infidelity_order(seq: &CompositeSequence, window: (f64, f64)) -> Result<OrderEstimate> {
    infidelity_order_at(seq, window, 0.0)
}

/// Infidelity exponent in ε with a fixed absolute offset ξ.
pub fn infidelity_order_at(
    seq: &CompositeSequence,
    window: (f64, f64),
    xi: f64,
) -> Result<OrderEstimate> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return validation(format!(
            "fit window must satisfy 0 < low < high, got {window:?}"
        ));
    }
    let target = target_gate(seq.target_theta());
    let (llo, lhi) = (lo.log10(), hi.log10());
    let mut xs = Vec::with_capacity(ORDER_POINTS);
    let mut ys = Vec::with_capacity(ORDER_POINTS);
    for k in 0..ORDER_POINTS {
        let x = llo + (lhi - llo) * k as f64 / (ORDER_POINTS - 1) as f64;
        let inf = infidelity(
            &target,
            &seq.propagator(&ErrorModel::new(10f64.powf(x), xi)),
        );
        if inf.is_nan() || inf <= INFIDELITY_FLOOR {
            return Ok(OrderEstimate::Indeterminate);
        }
        xs.push(x);
        ys.push(inf.log10());
    }
    Ok(OrderEstimate::Slope(least_squares_slope(&xs, &ys)))
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::phased_cphase;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn fidelity_examples() {
        let a = target_gate(FRAC_PI_4);
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        assert!((fidelity(&a, &(-a)).unwrap() - 1.0).abs() < 1e-15);
        let eps = 0.018;
        let b = target_gate(FRAC_PI_4 * (1.0 + eps));
        let f = fidelity(&a, &b).unwrap();
        assert!((f - (FRAC_PI_4 * eps).cos()).abs() < 1e-15);
        assert!(((1.0 - f) - 1.0e-4).abs() < 0.01e-4);
    }

    #[test]
    fn non_unitary_rejected() {
        let a = target_gate(0.3);
        assert!(fidelity(&a, &(a * C64::from(1.1))).is_err());
    }

    #[test]
    fn stable_infidelity_agrees_with_direct_formula() {
        let a = phased_cphase(0.4, 1.0);
        let b = phased_cphase(0.9, 2.0) * phased_cphase(-0.3, 0.2);
        let direct = 1.0 - trace_overlap(&a, &b).norm();
        assert!((infidelity(&a, &b) - direct).abs() < 1e-15);
    }

    #[test]
    fn single_gate_scan_is_cosine() {
        let seq = CompositeSequence::single(FRAC_PI_4).unwrap();
        let s = scan(&seq, -1.0, 1.0, 201).unwrap();
        for p in &s.points {
            assert!((p.fidelity - (FRAC_PI_4 * p.epsilon).cos().abs()).abs() < 1e-14);
        }
        assert!(scan(&seq, 1.0, -1.0, 10).is_err());
        assert!(scan(&seq, -1.0, 1.0, 1).is_err());
    }

    #[test]
    fn single_gate_band() {
        let seq = CompositeSequence::single(FRAC_PI_4).unwrap();
        let band = tolerance_band(&seq, DEFAULT_THRESHOLD).unwrap();
        // 1 − cos(Θε) = 1e−4  ⇒  ε = acos(1 − 1e−4)/Θ
        let exact = (1.0f64 - 1e-4).acos() / FRAC_PI_4;
        assert!((band.eps_high - exact).abs() < 1e-8);
        assert!((band.eps_low + exact).abs() < 1e-8);
        assert!(band.to_string().starts_with("band_low="));
    }

    #[test]
    fn band_precondition() {
        let seq = CompositeSequence::from_angles(
            &[(1.0, 0.0)],
            0.0,
            FRAC_PI_4,
            crate::gates::Family::Single,
        )
        .unwrap();
        assert!(tolerance_band(&seq, 1e-4).is_err());
    }

    #[test]
    fn single_gate_order_is_two() {
        let seq = CompositeSequence::single(FRAC_PI_4).unwrap();
        let s = infidelity_order(&seq, DEFAULT_ORDER_WINDOW)
            .unwrap()
            .slope()
            .unwrap();
        assert!((s - 2.0).abs() < 0.05);
    }

    #[test]
    fn plateau_extraction() {
        let seq = CompositeSequence::single(FRAC_PI_4).unwrap();
        let s = scan(&seq, -0.1, 0.1, 2001).unwrap();
        let (lo, hi) = s.plateau_around(0.0, 1e-4).unwrap();
        assert!((hi - 0.018).abs() < 1e-3 && (lo + 0.018).abs() < 1e-3);
    }
}
