//! Command-line front end for the priorbench library.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use priorbench::bias::{
    bias_order_probe, cox_snell_bias, laplace_posterior_mean, posterior_bias_first_order, PosteriorMethod,
};
use priorbench::cumulants::{analytic_cumulants, mc_cumulants};
use priorbench::inference::{conjugate_posterior_mean, fit, McmcConfig};
use priorbench::registry::{build_model, KernelName, ModelOptions};
use priorbench::sim::{emit, run_experiment, summarize, ExperimentConfig, Format};
use priorbench::{prior, Dataset, Error, Model, ParamPoint, PriorKind};

#[derive(Parser, Debug)]
#[command(name = "priorbench", version, about = "Bias-reduction priors and posterior-mean bias tools")]
struct Cli {
    /// Seed for generated designs, Monte Carlo draws and simulations.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Prior gradient fields and closed forms.
    #[command(subcommand)]
    Prior(PriorCmd),
    /// Per-observation cumulants, analytic or Monte Carlo.
    Cumulants {
        #[command(flatten)]
        model: ModelArgs,
        /// Estimate by Monte Carlo with this many draws.
        #[arg(long)]
        mc: Option<usize>,
    },
    /// First-order bias formulas.
    #[command(subcommand)]
    Bias(BiasCmd),
    /// Laplace approximation to the posterior mean for a dataset.
    Laplace {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "uniform")]
        prior: String,
        /// Comma-separated responses, or `@path` to a file of numbers.
        #[arg(long, allow_hyphen_values = true)]
        data: String,
    },
    /// Run a replicated bias study from a JSON config.
    Simulate {
        config: PathBuf,
        /// 1000 replicates with 10000 retained draws.
        #[arg(long)]
        full: bool,
        /// Directory for biases.csv, summary.json and boxplot.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical posterior-mean bias across sample sizes.
    ProbeOrder {
        #[command(flatten)]
        model: ModelArgs,
        prior: String,
        #[arg(long, value_delimiter = ',', required = true)]
        n_grid: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        replicates: usize,
        /// Use MCMC with this many retained draws instead of exact posterior means.
        #[arg(long)]
        mcmc_draws: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum PriorCmd {
    /// Evaluate a prior's log-gradient (and log-density when known) at θ.
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        kind: String,
    },
}

#[derive(Subcommand, Debug)]
enum BiasCmd {
    /// Cox–Snell first-order bias of the MLE.
    Coxsnell {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        n: usize,
    },
    /// First-order bias of the posterior mean under a prior.
    Posterior {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "uniform")]
        prior: String,
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Model name (exponential, poisson, normal, normal-strata:K, logistic, gumbel, location, linreg).
    model: String,
    /// Parameter point, comma-separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Option<Vec<f64>>,
    /// Rows of a generated design (logistic, linreg) or per-stratum size.
    #[arg(long)]
    design_n: Option<usize>,
    /// Covariate correlation for generated designs.
    #[arg(long, default_value_t = 0.1)]
    rho: f64,
    /// Error kernel for location and linreg.
    #[arg(long, default_value = "gaussian")]
    kernel: String,
    /// Known Gumbel scale.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
}

const DIM_FROM_THETA: [&str; 3] = ["logistic", "location", "linreg"];

impl ModelArgs {
    fn build(&self, seed: u64) -> Result<(Arc<dyn Model>, ParamPoint), Error> {
        let opts = ModelOptions {
            dim: self
                .theta
                .as_ref()
                .filter(|_| DIM_FROM_THETA.contains(&self.model.as_str()))
                .map(|t| t.len()),
            n: self.design_n,
            rho: self.rho,
            seed,
            kernel: self.kernel.parse::<KernelName>()?,
            sigma: self.sigma,
        };
        let model = build_model(&self.model, &opts)?;
        let values = self.theta.clone().unwrap_or_else(|| model.reference_point());
        let theta = ParamPoint::new(values, model.labels())?;
        Ok((model, theta))
    }
}

fn parse_prior(name: &str) -> Result<PriorKind, Error> {
    name.parse::<PriorKind>().map_err(|_| Error::UnknownName {
        what: "prior",
        name: name.into(),
        valid: PriorKind::valid_names(),
    })
}

fn read_numbers(spec: &str) -> Result<Vec<f64>, Error> {
    let text = match spec.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read data file `{path}`: {e}")))?,
        None => spec.to_string(),
    };
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::InvalidData(format!("`{t}` is not a number")))
        })
        .collect()
}

fn to_vec(v: impl IntoIterator<Item = f64>) -> Vec<f64> {
    v.into_iter().collect()
}

fn run(cli: Cli) -> Result<Value, Error> {
    let seed = cli.seed;
    match cli.command {
        Command::Prior(PriorCmd::Eval { model, kind }) => {
            let kind = parse_prior(&kind)?;
            let (m, theta) = model.build(seed)?;
            let field = prior::prior_field(m.clone(), kind)?;
            let grad = field.log_grad(theta.values())?;
            let density = field.log_density(theta.values()).transpose()?;
            Ok(json!({
                "model": m.name(),
                "prior": kind.name(),
                "theta": theta.values(),
                "log_grad": to_vec(grad.iter().copied()),
                "log_density": density,
                "closed_form": field.closed_form(),
            }))
        }
        Command::Cumulants { model, mc } => {
            let (m, theta) = model.build(seed)?;
            match mc {
                Some(draws) => Ok(serde_json::to_value(mc_cumulants(m.as_ref(), &theta, draws, seed)?)?),
                None => Ok(serde_json::to_value(analytic_cumulants(m.as_ref(), &theta)?)?),
            }
        }
        Command::Bias(BiasCmd::Coxsnell { model, n }) => {
            let (m, theta) = model.build(seed)?;
            let c = analytic_cumulants(m.as_ref(), &theta)?;
            Ok(serde_json::to_value(cox_snell_bias(&c, n)?)?)
        }
        Command::Bias(BiasCmd::Posterior { model, prior, n }) => {
            let kind = parse_prior(&prior)?;
            let (m, theta) = model.build(seed)?;
            let field = prior::prior_field(m.clone(), kind)?;
            Ok(serde_json::to_value(posterior_bias_first_order(m.as_ref(), &theta, &field, n)?)?)
        }
        Command::Laplace { model, prior, data } => {
            let kind = parse_prior(&prior)?;
            let values = read_numbers(&data)?;
            let (m, _) = model.build(seed)?;
            let (x, strata) = m.design_annotations(values.len() / m.response_dim().max(1));
            let data = Dataset::new(values, m.response_dim(), x, strata)?;
            let field = prior::prior_field(m.clone(), kind)?;
            let mle = fit(m.as_ref(), &data)?;
            if !mle.converged() {
                return Err(Error::MleFailed(format!("{:?}", mle.status)));
            }
            let lap = laplace_posterior_mean(m.as_ref(), &data, &field, &mle.estimate)?;
            Ok(json!({
                "model": m.name(),
                "prior": kind.name(),
                "n": data.len(),
                "mle": mle.estimate.values(),
                "laplace": to_vec(lap.iter().copied()),
                "exact": conjugate_posterior_mean(m.as_ref(), &data, &field),
            }))
        }
        Command::Simulate { config, full, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if full {
                cfg = cfg.full_scale();
            }
            let report = run_experiment(&cfg)?;
            eprint!("{}", summarize(&report));
            let written = match out {
                Some(dir) => emit(&report, &dir, &Format::ALL)?,
                None => Vec::new(),
            };
            Ok(json!({
                "included": report.included,
                "excluded": report.excluded(),
                "written": written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
            }))
        }
        Command::ProbeOrder {
            model,
            prior,
            n_grid,
            replicates,
            mcmc_draws,
            out,
        } => {
            let kind = parse_prior(&prior)?;
            let (m, theta) = model.build(seed)?;
            let field = prior::prior_field(m, kind)?;
            let method = match mcmc_draws {
                None => PosteriorMethod::Exact,
                Some(draws) => PosteriorMethod::Mcmc {
                    pilot: McmcConfig {
                        draws: 1000,
                        burn_in: 200,
                        ..Default::default()
                    },
                    run: McmcConfig {
                        draws,
                        ..Default::default()
                    },
                },
            };
            let probe = bias_order_probe(&field, &theta, &n_grid, replicates, seed, &method)?;
            if let Some(dir) = out {
                write_probe(&probe, &dir)?;
            }
            Ok(serde_json::to_value(&probe)?)
        }
    }
}

fn write_probe(probe: &priorbench::bias::OrderProbe, dir: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(dir)?;
    let mut csv = Vec::new();
    probe.write_csv(&mut csv)?;
    std::fs::write(dir.join("probe.csv"), csv)?;
    std::fs::write(dir.join("probe.json"), probe.summary_json()? + "\n")?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(v) => {
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let text = serde_json::to_string_pretty(&v).expect("json values serialize");
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 1 } else { 2 })
        }
    }
}
