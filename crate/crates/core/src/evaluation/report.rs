use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::io::atomic_write;

pub const REPORT_HEADER: &str = "estimator,axis,axis_value,successes,trials,rate,ci_lo,ci_hi";

/// 97.5% standard-normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// What a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AxisKind {
    #[serde(rename = "snr_db")]
    SnrDb,
    #[serde(rename = "sep_deg")]
    SepDeg,
}

impl AxisKind {
    pub fn name(self) -> &'static str {
        match self {
            AxisKind::SnrDb => "snr_db",
            AxisKind::SepDeg => "sep_deg",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AxisKind::SnrDb => "SNR (dB)",
            AxisKind::SepDeg => "separation (deg)",
        }
    }
}

impl fmt::Display for AxisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AxisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "snr_db" => Ok(AxisKind::SnrDb),
            "sep_deg" => Ok(AxisKind::SepDeg),
            other => Err(Error::Parse(format!("unknown axis '{other}'"))),
        }
    }
}

/// Wilson score interval at 95% confidence.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let centre = p + z2 / (2.0 * n);
    let half = Z_95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if successes == 0 { 0.0 } else { ((centre - half) / denom).max(0.0) };
    let hi = if successes == trials { 1.0 } else { ((centre + half) / denom).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub estimator: String,
    pub axis_value: f64,
    pub successes: usize,
    pub trials: usize,
    /// Trials where the estimator returned an error (counted as failures).
    pub errors: usize,
}

impl ReportRow {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    pub fn interval(&self) -> (f64, f64) {
        wilson_interval(self.successes, self.trials)
    }

    /// Normal-approximation standard error recovered from the interval width.
    pub fn sigma(&self) -> f64 {
        let (lo, hi) = self.interval();
        (hi - lo) / (2.0 * Z_95)
    }
}

/// Success counts per (estimator, axis point), ordered by estimator then axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub axis: AxisKind,
    pub rows: Vec<ReportRow>,
}

impl EvalReport {
    pub fn estimators(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.estimator.as_str()) {
                out.push(&r.estimator);
            }
        }
        out
    }

    pub fn series(&self, estimator: &str) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| r.estimator.eq_ignore_ascii_case(estimator)).collect()
    }

    pub fn row(&self, estimator: &str, axis_value: f64) -> Option<&ReportRow> {
        self.series(estimator).into_iter().find(|r| r.axis_value == axis_value)
    }

    pub fn rate(&self, estimator: &str, axis_value: f64) -> Option<f64> {
        self.row(estimator, axis_value).map(ReportRow::rate)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(REPORT_HEADER);
        s.push('\n');
        for r in &self.rows {
            let (lo, hi) = r.interval();
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.estimator,
                self.axis,
                r.axis_value,
                r.successes,
                r.trials,
                r.rate(),
                lo,
                hi
            ));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end() == REPORT_HEADER => {}
            _ => return Err(Error::Parse(format!("report must start with '{REPORT_HEADER}'"))),
        }
        let mut axis = None;
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("report line {lineno}: {what}: '{line}'"));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(bad("expected 8 fields"));
            }
            let this_axis: AxisKind = f[1].parse().map_err(|_| bad("unknown axis"))?;
            if *axis.get_or_insert(this_axis) != this_axis {
                return Err(bad("mixed axes"));
            }
            let axis_value: f64 = f[2].parse().map_err(|_| bad("bad axis value"))?;
            let successes: usize = f[3].parse().map_err(|_| bad("bad success count"))?;
            let trials: usize = f[4].parse().map_err(|_| bad("bad trial count"))?;
            if trials == 0 || successes > trials || f[0].is_empty() {
                return Err(bad("inconsistent counts"));
            }
            rows.push(ReportRow { estimator: f[0].to_string(), axis_value, successes, trials, errors: 0 });
        }
        match axis {
            Some(axis) => Ok(EvalReport { axis, rows }),
            None => Err(Error::Parse("report has no data rows".into())),
        }
    }
}

pub fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    atomic_write(path, |w| Ok(w.write_all(report.to_csv().as_bytes())?))
}

pub fn read_report(path: &Path) -> Result<EvalReport> {
    let mut text = String::new();
    for line in BufReader::new(std::fs::File::open(path)?).lines() {
        text.push_str(&line?);
        text.push('\n');
    }
    EvalReport::from_csv(&text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointDiff {
    pub estimator_a: String,
    pub estimator_b: String,
    pub axis_value: f64,
    pub rate_a: f64,
    pub rate_b: f64,
    /// `rate_a − rate_b`.
    pub delta: f64,
    pub intervals_overlap: bool,
}

/// Pairs rows of `a` and `b` at equal axis values. Estimators present in both
/// are paired by name; when the reports share none and hold one estimator
/// each, those two are compared against each other.
pub fn compare_report(a: &EvalReport, b: &EvalReport) -> Result<Vec<PointDiff>> {
    if a.axis != b.axis {
        return Err(invalid(format!("axes differ: {} vs {}", a.axis, b.axis)));
    }
    let axis_values = |r: &EvalReport| {
        let mut v: Vec<f64> = r.rows.iter().map(|x| x.axis_value).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    if axis_values(a) != axis_values(b) {
        return Err(invalid("reports cover different axis points"));
    }
    let (ea, eb) = (a.estimators(), b.estimators());
    let shared: Vec<(&str, &str)> = ea.iter().filter(|e| eb.contains(e)).map(|&e| (e, e)).collect();
    let pairs = if !shared.is_empty() {
        shared
    } else if ea.len() == 1 && eb.len() == 1 {
        vec![(ea[0], eb[0])]
    } else {
        return Err(invalid("reports share no estimator and are not single-estimator reports"));
    };
    let mut out = Vec::new();
    for (na, nb) in pairs {
        for ra in a.series(na) {
            let rb = b
                .row(nb, ra.axis_value)
                .ok_or_else(|| invalid(format!("{nb} has no point at {}", ra.axis_value)))?;
            let ((alo, ahi), (blo, bhi)) = (ra.interval(), rb.interval());
            out.push(PointDiff {
                estimator_a: na.to_string(),
                estimator_b: nb.to_string(),
                axis_value: ra.axis_value,
                rate_a: ra.rate(),
                rate_b: rb.rate(),
                delta: ra.rate() - rb.rate(),
                intervals_overlap: alo <= bhi && blo <= ahi,
            });
        }
    }
    Ok(out)
}

/// Adjacent-point pairs `(x_i, x_{i+1})` of one estimator's series where the
/// rate drops by more than `sigmas` combined standard errors.
pub fn monotonicity_violations(report: &EvalReport, estimator: &str, sigmas: f64) -> Vec<(f64, f64)> {
    let mut series = report.series(estimator);
    series.sort_by(|x, y| x.axis_value.total_cmp(&y.axis_value));
    series
        .windows(2)
        .filter(|w| {
            let slack = sigmas * (w[0].sigma().powi(2) + w[1].sigma().powi(2)).sqrt();
            w[1].rate() < w[0].rate() - slack
        })
        .map(|w| (w[0].axis_value, w[1].axis_value))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(e: &str, x: f64, s: usize, n: usize) -> ReportRow {
        ReportRow { estimator: e.into(), axis_value: x, successes: s, trials: n, errors: 0 }
    }

    #[test]
    fn wilson_edges() {
        let (lo, hi) = wilson_interval(0, 10);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.2 && hi < 0.35);
        let (lo, hi) = wilson_interval(10, 10);
        assert_eq!(hi, 1.0);
        assert!(lo > 0.65);
    }

    #[test]
    fn csv_roundtrip() {
        let r = EvalReport { axis: AxisKind::SnrDb, rows: vec![row("MDL", -5.0, 3, 7), row("MDL", 0.5, 7, 7)] };
        let text = r.to_csv();
        assert_eq!(EvalReport::from_csv(&text).unwrap(), r);
        assert_eq!(EvalReport::from_csv(&text).unwrap().to_csv(), text);
    }

    #[test]
    fn csv_rejections() {
        assert!(EvalReport::from_csv(&format!("{REPORT_HEADER}\n")).is_err());
        assert!(EvalReport::from_csv("a,b\n").is_err());
        let bad = format!("{REPORT_HEADER}\nMDL,snr_db,0,5,4,1,0,1\n");
        assert!(EvalReport::from_csv(&bad).is_err());
    }

    #[test]
    fn compare_self_and_disjoint() {
        let r = EvalReport { axis: AxisKind::SnrDb, rows: vec![row("AIC", 0.0, 3, 10), row("AIC", 5.0, 6, 10)] };
        assert!(compare_report(&r, &r).unwrap().iter().all(|d| d.delta == 0.0 && d.intervals_overlap));
        let other = EvalReport { axis: AxisKind::SnrDb, rows: vec![row("AIC", 10.0, 3, 10)] };
        assert!(compare_report(&r, &other).is_err());
        let sep = EvalReport { axis: AxisKind::SepDeg, rows: r.rows.clone() };
        assert!(compare_report(&r, &sep).is_err());
    }

    #[test]
    fn compare_single_estimator_reports() {
        let a = EvalReport { axis: AxisKind::SnrDb, rows: vec![row("DLSDE", 30.0, 95, 100)] };
        let b = EvalReport { axis: AxisKind::SnrDb, rows: vec![row("MDL", 30.0, 60, 100)] };
        let d = compare_report(&a, &b).unwrap();
        assert_eq!(d.len(), 1);
        assert!((d[0].delta - 0.35).abs() < 1e-12);
        assert!(!d[0].intervals_overlap);
    }

    #[test]
    fn monotonicity() {
        let r = EvalReport {
            axis: AxisKind::SepDeg,
            rows: vec![row("GIC", 0.5, 100, 2000), row("GIC", 1.0, 95, 2000), row("GIC", 1.5, 1500, 2000), row("GIC", 2.0, 900, 2000)],
        };
        assert_eq!(monotonicity_violations(&r, "GIC", 3.0), vec![(1.5, 2.0)]);
    }
}
