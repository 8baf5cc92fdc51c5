//! Trial accounting, binomial confidence intervals, and reports.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::circuit::Basis;
use crate::experiments::ShotOutcome;

pub const DEFAULT_LEVEL: f64 = 0.683;

#[derive(Debug, thiserror::Error)]
pub enum StatsError {
    #[error("no accepted trials")]
    NoAccepted,
    #[error("{errors} errors exceed {accepted} accepted trials")]
    TooManyErrors { errors: u64, accepted: u64 },
    #[error("confidence level {0} is not in (0, 1)")]
    Level(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Counts for one experiment and measurement setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub experiment: String,
    pub basis: Option<Basis>,
    pub trials: u64,
    pub prerejected: u64,
    pub postrejected: u64,
    pub accepted: u64,
    pub errors: u64,
    pub seed: u64,
    pub params_hash: String,
}

impl TrialStats {
    pub fn new(experiment: &str, basis: Option<Basis>, seed: u64, params_hash: String) -> Self {
        Self {
            experiment: experiment.into(),
            basis,
            trials: 0,
            prerejected: 0,
            postrejected: 0,
            accepted: 0,
            errors: 0,
            seed,
            params_hash,
        }
    }

    pub fn add(&mut self, o: ShotOutcome) {
        self.trials += 1;
        match o {
            ShotOutcome::Prerejected => self.prerejected += 1,
            ShotOutcome::Postrejected => self.postrejected += 1,
            ShotOutcome::Correct => self.accepted += 1,
            ShotOutcome::Error => {
                self.accepted += 1;
                self.errors += 1;
            }
        }
    }

    /// Sums counts of another run of the same experiment.
    pub fn merge(&mut self, o: &TrialStats) {
        self.trials += o.trials;
        self.prerejected += o.prerejected;
        self.postrejected += o.postrejected;
        self.accepted += o.accepted;
        self.errors += o.errors;
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.accepted as f64 / self.trials as f64
        }
    }

    pub fn error_rate(&self) -> f64 {
        if self.accepted == 0 {
            0.0
        } else {
            self.errors as f64 / self.accepted as f64
        }
    }

    pub fn row(&self, level: f64) -> ReportRow {
        let (ci_low, ci_high) = confidence_interval(self.errors, self.accepted, level).unwrap_or((0.0, 1.0));
        ReportRow {
            experiment: self.experiment.clone(),
            basis: self.basis.map(|b| b.to_string()).unwrap_or_else(|| "-".into()),
            trials: self.trials,
            prerejected: self.prerejected,
            postrejected: self.postrejected,
            acceptance_rate: self.acceptance_rate(),
            errors: self.errors,
            error_rate: self.error_rate(),
            ci_low,
            ci_high,
            seed: self.seed,
            params_hash: self.params_hash.clone(),
        }
    }
}

/// Exact (Clopper–Pearson) two-sided interval for a binomial proportion.
pub fn confidence_interval(errors: u64, accepted: u64, level: f64) -> Result<(f64, f64), StatsError> {
    if accepted == 0 {
        return Err(StatsError::NoAccepted);
    }
    if errors > accepted {
        return Err(StatsError::TooManyErrors { errors, accepted });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::Level(level));
    }
    let alpha = 1.0 - level;
    let (k, n) = (errors as f64, accepted as f64);
    let low = if errors == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).expect("valid shape").inverse_cdf(alpha / 2.0)
    };
    let high = if errors == accepted {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).expect("valid shape").inverse_cdf(1.0 - alpha / 2.0)
    };
    Ok((low, high))
}

/// One line of a report, in the stable column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub experiment: String,
    pub basis: String,
    pub trials: u64,
    pub prerejected: u64,
    pub postrejected: u64,
    pub acceptance_rate: f64,
    pub errors: u64,
    pub error_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub params_hash: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Table,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "table" => Ok(Self::Table),
            _ => Err(format!("unknown format {s:?}")),
        }
    }
}

pub fn emit_report(rows: &[ReportRow], format: ReportFormat) -> Result<String, StatsError> {
    match format {
        ReportFormat::Json => Ok(serde_json::to_string_pretty(rows)?),
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in rows {
                w.serialize(r)?;
            }
            let bytes = w.into_inner().map_err(|e| StatsError::Io(e.into_error()))?;
            Ok(String::from_utf8(bytes).expect("csv is utf-8"))
        }
        ReportFormat::Table => {
            let mut out = format!(
                "{:<16} {:>5} {:>8} {:>11} {:>12} {:>9} {:>7} {:>22}\n",
                "experiment", "basis", "trials", "prerejected", "postrejected", "accepted", "errors", "error rate"
            );
            for r in rows {
                let pct = |x: f64| 100.0 * x;
                let rate = format!(
                    "{:.3}% +{:.3} -{:.3}",
                    pct(r.error_rate),
                    pct(r.ci_high - r.error_rate),
                    pct(r.error_rate - r.ci_low)
                );
                let accepted = r.trials - r.prerejected - r.postrejected;
                out.push_str(&format!(
                    "{:<16} {:>5} {:>8} {:>11} {:>12} {:>9} {:>7} {:>22}\n",
                    r.experiment, r.basis, r.trials, r.prerejected, r.postrejected, accepted, r.errors, rate
                ));
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent oracle: invert the binomial tail by bisection.
    fn tail_ge(k: u64, n: u64, p: f64) -> f64 {
        // P[X >= k], summing pmf terms in log space
        let mut log_term = n as f64 * (1.0 - p).ln();
        let mut total = 0.0;
        for i in 0..=n {
            if i >= k {
                total += log_term.exp();
            }
            if i < n {
                log_term += ((n - i) as f64 / (i + 1) as f64).ln() + p.ln() - (1.0 - p).ln();
            }
        }
        total
    }

    fn bisect(f: impl Fn(f64) -> f64, target: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..100 {
            let mid = (lo + hi) / 2.0;
            if f(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo + hi) / 2.0
    }

    #[test]
    fn matches_binomial_tail_inversion() {
        let level: f64 = 0.683;
        let a = (1.0 - level) / 2.0;
        for (k, n) in [(3u64, 2691u64), (88, 6000), (1, 50), (10, 200)] {
            let (lo, hi) = confidence_interval(k, n, level).unwrap();
            let lo_ref = bisect(|p| tail_ge(k, n, p), a);
            let hi_ref = bisect(|p| tail_ge(k + 1, n, p), 1.0 - a);
            assert!((lo - lo_ref).abs() < 1e-6, "{k}/{n}: {lo} vs {lo_ref}");
            assert!((hi - hi_ref).abs() < 1e-6, "{k}/{n}: {hi} vs {hi_ref}");
        }
    }

    #[test]
    fn interval_anchors() {
        assert_eq!(confidence_interval(0, 100, 0.683).unwrap().0, 0.0);
        let (lo, hi) = confidence_interval(3, 2691, 0.683).unwrap();
        assert!(lo < 0.0011 && 0.0011 < hi);
        let (lo, hi) = confidence_interval(88, 6000, 0.683).unwrap();
        assert!((lo - 0.0131).abs() < 0.001 && (hi - 0.0162).abs() < 0.001, "{lo} {hi}");
        assert!(confidence_interval(1, 0, 0.683).is_err());
    }

    #[test]
    fn csv_has_schema_columns() {
        let mut s = TrialStats::new("path4-enc", Some(Basis::X), 1, "abc".into());
        s.add(ShotOutcome::Correct);
        s.add(ShotOutcome::Prerejected);
        let csv = emit_report(&[s.row(DEFAULT_LEVEL)], ReportFormat::Csv).unwrap();
        let header = csv.lines().next().unwrap();
        assert_eq!(
            header,
            "experiment,basis,trials,prerejected,postrejected,acceptance_rate,errors,error_rate,ci_low,ci_high,seed,params_hash"
        );
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn json_round_trip() {
        let mut s = TrialStats::new("cube8-base", Some(Basis::Z), 9, "h".into());
        for o in [ShotOutcome::Correct, ShotOutcome::Error, ShotOutcome::Postrejected] {
            s.add(o);
        }
        let rows = vec![s.row(DEFAULT_LEVEL)];
        let json = emit_report(&rows, ReportFormat::Json).unwrap();
        let back: Vec<ReportRow> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rows);
        assert_eq!(s.trials, s.prerejected + s.postrejected + s.accepted);
    }
}
