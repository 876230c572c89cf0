use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::report::{BiasReport, ComponentSummary, FiveNumber};
use crate::error::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    /// `biases.csv`
    Csv,
    /// `summary.json`
    Json,
    /// `boxplot.json`
    Boxplot,
}

impl Format {
    pub const ALL: [Format; 3] = [Format::Csv, Format::Json, Format::Boxplot];
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    config: &'a super::config::ExperimentConfig,
    labels: &'a [String],
    included: usize,
    excluded: usize,
    exclusions: &'a [super::report::Exclusion],
    summary: Vec<SummaryRow<'a>>,
    /// Mean tuned step and acceptance per prior and component, over chains.
    mcmc: Vec<McmcRow>,
}

#[derive(Serialize)]
struct SummaryRow<'a> {
    prior: &'a str,
    component: &'a str,
    count: usize,
    mean: f64,
    sd: Option<f64>,
    se: Option<f64>,
}

#[derive(Serialize)]
struct McmcRow {
    prior: String,
    component: String,
    chains: usize,
    mean_step: f64,
    mean_accept: f64,
}

#[derive(Serialize)]
struct BoxRow<'a> {
    prior: &'a str,
    component: &'a str,
    #[serde(flatten)]
    five: FiveNumber,
}

fn summary_row(s: &ComponentSummary) -> SummaryRow<'_> {
    SummaryRow {
        prior: s.prior.name(),
        component: &s.label,
        count: s.count,
        mean: s.mean,
        sd: s.sd,
        se: s.se,
    }
}

fn mcmc_rows(report: &BiasReport) -> Vec<McmcRow> {
    let mut acc: BTreeMap<(usize, usize), (usize, f64, f64)> = BTreeMap::new();
    for d in &report.diagnostics {
        let p = report.config.priors.iter().position(|k| *k == d.prior).unwrap_or(0);
        for (k, (s, a)) in d.step_sizes.iter().zip(&d.accept_rates).enumerate() {
            let e = acc.entry((p, k)).or_insert((0, 0.0, 0.0));
            e.0 += 1;
            e.1 += s;
            e.2 += a;
        }
    }
    acc.into_iter()
        .map(|((p, k), (c, s, a))| McmcRow {
            prior: report.config.priors[p].name().into(),
            component: report.labels[k].clone(),
            chains: c,
            mean_step: s / c as f64,
            mean_accept: a / c as f64,
        })
        .collect()
}

/// Writes the requested files into `dir` (created if missing) and returns
/// their paths. Output is a pure function of the report.
pub fn emit(report: &BiasReport, dir: &Path, formats: &[Format]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for f in formats {
        let path = match f {
            Format::Csv => {
                let path = dir.join("biases.csv");
                let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
                writeln!(w, "prior,replicate,component,bias")?;
                for r in &report.records {
                    writeln!(w, "{},{},{},{}", r.prior, r.replicate, report.labels[r.component], r.bias)?;
                }
                w.flush()?;
                path
            }
            Format::Json => {
                let path = dir.join("summary.json");
                let body = SummaryFile {
                    config: &report.config,
                    labels: &report.labels,
                    included: report.included,
                    excluded: report.excluded(),
                    exclusions: &report.exclusions,
                    summary: report.summary.iter().map(summary_row).collect(),
                    mcmc: mcmc_rows(report),
                };
                fs::write(&path, serde_json::to_string_pretty(&body)? + "\n")?;
                path
            }
            Format::Boxplot => {
                let path = dir.join("boxplot.json");
                let rows: Vec<BoxRow> = report
                    .summary
                    .iter()
                    .map(|s| BoxRow {
                        prior: s.prior.name(),
                        component: &s.label,
                        five: s.five,
                    })
                    .collect();
                fs::write(&path, serde_json::to_string_pretty(&rows)? + "\n")?;
                path
            }
        };
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::PriorKind;
    use crate::sim::config::{ExperimentConfig, ModelSpec, PosteriorSpec, SCHEMA_VERSION};
    use crate::sim::run_experiment;

    fn report() -> BiasReport {
        run_experiment(&ExperimentConfig {
            schema_version: SCHEMA_VERSION,
            model: ModelSpec::Normal,
            true_theta: vec![0.0, 2.0],
            priors: vec![PriorKind::Br, PriorKind::Jeffreys],
            n: 12,
            replicates: 25,
            mcmc: PosteriorSpec::Exact,
            master_seed: 8,
            regenerate_covariates: true,
        })
        .unwrap()
    }

    #[test]
    fn files_have_expected_shape() {
        let report = report();
        let dir = tempfile::tempdir().unwrap();
        let paths = emit(&report, dir.path(), &Format::ALL).unwrap();
        assert_eq!(paths.len(), 3);
        let csv = fs::read_to_string(dir.path().join("biases.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "prior,replicate,component,bias");
        assert_eq!(lines.len(), 1 + 2 * 2 * report.included);
        assert!(lines[1].starts_with("br,0,mu,"));
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["included"], 25);
        assert_eq!(summary["summary"].as_array().unwrap().len(), 4);
        let boxes: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("boxplot.json")).unwrap()).unwrap();
        assert_eq!(boxes[0]["component"], "mu");
        assert!(boxes[0]["q1"].as_f64().unwrap() <= boxes[0]["median"].as_f64().unwrap());
    }

    #[test]
    fn emission_is_byte_identical() {
        let report = report();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        emit(&report, a.path(), &Format::ALL).unwrap();
        emit(&report, b.path(), &Format::ALL).unwrap();
        for name in ["biases.csv", "summary.json", "boxplot.json"] {
            assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
        }
    }

    #[test]
    fn subset_of_formats() {
        let dir = tempfile::tempdir().unwrap();
        emit(&report(), dir.path(), &[Format::Csv]).unwrap();
        assert!(dir.path().join("biases.csv").exists());
        assert!(!dir.path().join("summary.json").exists());
    }
}
