use std::fmt::Write as _;

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::prior::PriorKind;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasRecord {
    pub prior: PriorKind,
    pub replicate: usize,
    pub component: usize,
    /// Estimator minus truth.
    pub bias: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Exclusion {
    pub replicate: usize,
    pub reason: String,
}

/// Tuned proposal scales and realized acceptance for one chain.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainDiagnostics {
    pub prior: PriorKind,
    pub replicate: usize,
    pub step_sizes: Vec<f64>,
    pub accept_rates: Vec<f64>,
}

/// `(min, q1, median, q3, max)` by linear interpolation between order
/// statistics: the `p` quantile of sorted `x_0..x_{m-1}` sits at position
/// `(m − 1)p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl FiveNumber {
    /// `None` for an empty sample.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub prior: PriorKind,
    pub component: usize,
    pub label: String,
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; absent with a single replicate.
    pub sd: Option<f64>,
    /// `sd / √count`.
    pub se: Option<f64>,
    pub mean_abs: f64,
    pub five: FiveNumber,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BiasReport {
    pub config: ExperimentConfig,
    pub labels: Vec<String>,
    pub included: usize,
    pub exclusions: Vec<Exclusion>,
    /// Ordered by prior (config order), then replicate, then component.
    pub records: Vec<BiasRecord>,
    pub summary: Vec<ComponentSummary>,
    pub diagnostics: Vec<ChainDiagnostics>,
}

impl BiasReport {
    pub fn excluded(&self) -> usize {
        self.exclusions.len()
    }

    pub fn biases(&self, prior: PriorKind, component: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.prior == prior && r.component == component)
            .map(|r| r.bias)
            .collect()
    }

    pub fn component(&self, prior: PriorKind, component: usize) -> Option<&ComponentSummary> {
        self.summary.iter().find(|s| s.prior == prior && s.component == component)
    }

    /// Per-(prior, component) summaries computed from `records`.
    pub fn summarize_records(records: &[BiasRecord], priors: &[PriorKind], labels: &[String]) -> Vec<ComponentSummary> {
        let mut out = Vec::new();
        for &prior in priors {
            for (component, label) in labels.iter().enumerate() {
                let v: Vec<f64> = records
                    .iter()
                    .filter(|r| r.prior == prior && r.component == component)
                    .map(|r| r.bias)
                    .collect();
                let Some(five) = FiveNumber::of(&v) else { continue };
                let m = v.len() as f64;
                let mean = v.iter().sum::<f64>() / m;
                let sd = (v.len() > 1).then(|| (v.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt());
                out.push(ComponentSummary {
                    prior,
                    component,
                    label: label.clone(),
                    count: v.len(),
                    mean,
                    sd,
                    se: sd.map(|s| s / m.sqrt()),
                    mean_abs: v.iter().map(|b| b.abs()).sum::<f64>() / m,
                    five,
                });
            }
        }
        out
    }
}

fn heading(kind: PriorKind) -> &'static str {
    match kind {
        PriorKind::Br => "BR (proposed)",
        PriorKind::Bm => "BM (Firth)",
        PriorKind::Mm => "MM",
        PriorKind::Jeffreys => "Jeffreys",
        PriorKind::Uniform => "Uniform",
        PriorKind::Custom => "Custom",
    }
}

/// Mean and standard deviation per prior and component to three decimals,
/// priors side by side.
pub fn summarize(report: &BiasReport) -> String {
    let d = report.labels.len();
    let priors = &report.config.priors;
    let cell = 9;
    let group = cell * d;
    let mut out = String::new();
    let _ = write!(out, "{:<10}", "");
    for p in priors {
        let _ = write!(out, " {:^group$}", heading(*p));
    }
    out.push('\n');
    let _ = write!(out, "{:<10}", "");
    for _ in priors {
        out.push(' ');
        for l in &report.labels {
            let _ = write!(out, "{l:>cell$}");
        }
    }
    out.push('\n');
    for (row, pick) in [("Mean", 0), ("Stand dev", 1)] {
        let _ = write!(out, "{row:<10}");
        for p in priors {
            out.push(' ');
            for k in 0..d {
                let v = report.component(*p, k).and_then(|s| if pick == 0 { Some(s.mean) } else { s.sd });
                match v {
                    Some(v) => {
                        let _ = write!(out, "{v:>cell$.3}");
                    }
                    None => {
                        let _ = write!(out, "{:>cell$}", "-");
                    }
                }
            }
        }
        out.push('\n');
    }
    let _ = writeln!(
        out,
        "replicates: {} included, {} excluded of {}",
        report.included,
        report.excluded(),
        report.config.replicates
    );
    out
}
