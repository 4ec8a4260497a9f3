use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use ocl::bounds::{self, LowerBoundInputs, Mode};
use ocl::divergence::{hellinger, Distribution};
use ocl::estimation::Constants;
use ocl::harness::config::parse_cluster_spec;
use ocl::harness::{check_gates, emit, env_workers, run_experiment, ConfigError, ExperimentConfig};
use ocl::instance::{generate, Instance};
use ocl::oracle::Oracle;
use ocl::solver_lv::{run_baseline_with_oracle, run_lv_with_oracle};
use ocl::solver_mc::{run_mc_with_oracle, Band, McParams};

#[derive(Parser)]
#[command(name = "ocl", version, about = "Clustering with a same-cluster oracle and noisy side information")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted instance.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// balanced, skewed:RATIO or sizes:A,B,...
        #[arg(long, default_value = "balanced")]
        clusters: String,
        /// Same-cluster distribution, e.g. `0:0.1,1:0.9`.
        #[arg(long)]
        fplus: String,
        /// Different-cluster distribution.
        #[arg(long)]
        fminus: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Binary instance file to write.
        #[arg(long)]
        out: PathBuf,
        /// Also write a JSON copy (n ≤ 200 only).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run one solver on an instance and print its report as JSON.
    Run {
        #[arg(long, value_enum)]
        algo: AlgoArg,
        /// Instance file (binary, or JSON when the name ends in `.json`).
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        scale: Option<f64>,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        cprime: Option<f64>,
        #[arg(long, value_enum, default_value_t = BandArg::Lemma)]
        band: BandArg,
        /// Write every charged query as CSV `step,u,v,answer`.
        #[arg(long)]
        query_log: Option<PathBuf>,
    },
    /// Run a benchmark sweep from a TOML config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Override `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        scale: Option<f64>,
        /// Record wall time in the outputs.
        #[arg(long)]
        timing: bool,
        /// Exit with status 3 if any benchmark gate fails.
        #[arg(long)]
        check: bool,
    },
    /// Evaluate a lower bound and print it as JSON.
    Bounds {
        #[arg(long, value_enum)]
        form: Form,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        /// Cluster size (lemma1); defaults to n/k.
        #[arg(long)]
        a: Option<usize>,
        /// Query budget (lemma1).
        #[arg(long, default_value_t = 0.0)]
        q: f64,
        /// H(f₊‖f₋); computed from --fplus/--fminus when omitted.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        fplus: Option<String>,
        #[arg(long)]
        fminus: Option<String>,
        /// Use the asymptotic simplification (fano forms).
        #[arg(long)]
        approx: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Mc,
    Lv,
    Baseline,
}

#[derive(Clone, Copy, ValueEnum)]
enum BandArg {
    Lemma,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum Form {
    Lemma1,
    Thm2,
    FanoKl,
    FanoHellinger,
}

/// Errors in user input; reported with exit status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn dist(text: &str, flag: &str) -> Result<Distribution> {
    text.parse().map_err(|e| usage(format!("--{flag}: {e}")))
}

fn load_instance(path: &Path) -> Result<Instance> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(Instance::from_json(&text)?)
    } else {
        Ok(Instance::load(path).with_context(|| format!("loading {}", path.display()))?)
    }
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    n: usize,
    k: usize,
    clusters: &str,
    fplus: &str,
    fminus: &str,
    seed: u64,
    out: &Path,
    json_out: Option<&Path>,
) -> Result<()> {
    let spec = parse_cluster_spec(clusters, k).map_err(|m| usage(format!("--clusters: {m}")))?;
    let (fp, fm) = (dist(fplus, "fplus")?, dist(fminus, "fminus")?);
    let instance = generate(n, &spec, &fp, &fm, seed).map_err(|e| usage(e.to_string()))?;
    instance.save(out)?;
    if let Some(path) = json_out {
        fs::write(path, instance.to_json()?).with_context(|| format!("writing {}", path.display()))?;
    }
    print_json(&json!({
        "n": instance.n(),
        "k": instance.k(),
        "seed": seed,
        "fingerprint": instance.fingerprint(),
        "path": out,
    }))
}

#[allow(clippy::too_many_arguments)]
fn cmd_run(
    algo: AlgoArg,
    path: &Path,
    seed: u64,
    scale: Option<f64>,
    c: Option<f64>,
    cprime: Option<f64>,
    band: BandArg,
    query_log: Option<&Path>,
) -> Result<()> {
    let instance = load_instance(path)?;
    let mut oracle = if query_log.is_some() {
        Oracle::with_log(&instance.truth)
    } else {
        Oracle::new(&instance.truth)
    };
    let report = match algo {
        AlgoArg::Mc => {
            let d = Constants::default();
            let params = McParams {
                constants: Constants {
                    c: c.unwrap_or(d.c),
                    c_prime: cprime.unwrap_or(d.c_prime),
                    scale: scale.unwrap_or(d.scale),
                },
                band: match band {
                    BandArg::Lemma => Band::Lemma,
                    BandArg::Text => Band::Text,
                },
            };
            run_mc_with_oracle(&instance, &params, seed, &mut oracle)
                .map_err(|e| usage(e.to_string()))?
                .1
        }
        AlgoArg::Lv => run_lv_with_oracle(&instance, seed, &mut oracle).1,
        AlgoArg::Baseline => run_baseline_with_oracle(&instance, seed, &mut oracle).1,
    };
    if let Some(log) = query_log {
        let file = fs::File::create(log).with_context(|| format!("creating {}", log.display()))?;
        oracle.write_log(BufWriter::new(file))?;
    }
    print_json(&serde_json::to_value(&report)?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    config: &Path,
    seed: Option<u64>,
    trials: Option<usize>,
    out: Option<PathBuf>,
    scale: Option<f64>,
    timing: bool,
    check: bool,
) -> Result<bool> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(s) = seed {
        cfg.base_seed = s;
    }
    if let Some(t) = trials {
        if t == 0 {
            return Err(ConfigError {
                path: "trials".into(),
                message: "must be at least 1, got 0".into(),
            }
            .into());
        }
        cfg.trials = t;
    }
    if let Some(s) = scale {
        cfg.params.constants.scale = s;
        cfg.params.constants.validate().map_err(|e| ConfigError {
            path: "constants".into(),
            message: e.to_string(),
        })?;
    }
    cfg.timing |= timing;
    let dir = out
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("bench-out"));

    let result = run_experiment(&cfg, env_workers());
    let files = emit::emit(&dir, &cfg, &result)?;

    let mut stdout = io::stdout().lock();
    writeln!(stdout, "{:<9} {:>7} {:>4} {:>12} {:>9} {:>12}", "algo", "n", "k", "median_q", "success", "lb_budget")?;
    for a in &result.aggregates {
        writeln!(
            stdout,
            "{:<9} {:>7} {:>4} {:>12.1} {:>9.3} {:>12.1}",
            a.algo.as_str(),
            a.n,
            a.k,
            a.median_queries,
            a.success_rate,
            a.lb_query_budget
        )?;
    }
    writeln!(stdout, "wrote {}", files.csv.display())?;

    if check {
        let failures = check_gates(&cfg, &result);
        for f in &failures {
            eprintln!("gate failed: {f}");
        }
        return Ok(failures.is_empty());
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_bounds(
    form: Form,
    n: Option<usize>,
    k: Option<usize>,
    a: Option<usize>,
    q: f64,
    h: Option<f64>,
    fplus: Option<&str>,
    fminus: Option<&str>,
    approx: bool,
) -> Result<()> {
    let need = |v: Option<usize>, flag: &str| v.ok_or_else(|| usage(format!("--{flag} is required for this form")));
    let pair = || -> Result<(Distribution, Distribution)> {
        match (fplus, fminus) {
            (Some(p), Some(m)) => Ok((dist(p, "fplus")?, dist(m, "fminus")?)),
            _ => Err(usage("--fplus and --fminus are required for this form")),
        }
    };
    let h_value = || -> Result<f64> {
        match h {
            Some(h) => Ok(h),
            None => {
                let (p, m) = pair()?;
                hellinger(&p, &m).map_err(|e| usage(e.to_string()))
            }
        }
    };
    let mode = if approx { Mode::Approx } else { Mode::Exact };
    let bad = |e: bounds::BoundsError| usage(e.to_string());

    let (value, raw, inputs, mode_name) = match form {
        Form::Lemma1 => {
            let k = need(k, "k")?;
            let a = match (a, n) {
                (Some(a), _) => a,
                (None, Some(n)) if k > 0 => n / k,
                _ => bail!(usage("--a or --n is required for lemma1")),
            };
            let x = LowerBoundInputs { k, a, q, h: h_value()? };
            let raw = bounds::lb_error_prob_raw(&x).map_err(bad)?;
            (raw.clamp(0.0, 1.0), Some(raw), json!(x), "exact")
        }
        Form::Thm2 => {
            let (n, k) = (need(n, "n")?, need(k, "k")?);
            let h = h_value()?;
            let v = bounds::lb_query_budget(n, k, h);
            (v, None, json!({ "n": n, "k": k, "h": h }), "exact")
        }
        Form::FanoKl => {
            let (n, k) = (need(n, "n")?, need(k, "k")?);
            let (p, m) = pair()?;
            let raw = bounds::fano_zero_query_kl_raw(n, k, &p, &m, mode).map_err(bad)?;
            let inputs = json!({ "n": n, "k": k, "f_plus": p.to_string(), "f_minus": m.to_string() });
            (raw.clamp(0.0, 1.0), Some(raw), inputs, if approx { "approx" } else { "exact" })
        }
        Form::FanoHellinger => {
            let (n, k) = (need(n, "n")?, need(k, "k")?);
            let (p, m) = pair()?;
            let v = bounds::fano_zero_query_hellinger(n, k, &p, &m, mode).map_err(bad)?;
            let inputs = json!({ "n": n, "k": k, "f_plus": p.to_string(), "f_minus": m.to_string() });
            (v, None, inputs, if approx { "approx" } else { "exact" })
        }
    };
    let mut out = json!({ "value": value, "inputs": inputs, "mode": mode_name });
    if let Some(raw) = raw {
        out["raw"] = json!(raw);
    }
    print_json(&out)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Gen {
            n,
            k,
            clusters,
            fplus,
            fminus,
            seed,
            out,
            json,
        } => cmd_gen(n, k, &clusters, &fplus, &fminus, seed, &out, json.as_deref()).map(|_| true),
        Command::Run {
            algo,
            instance,
            seed,
            scale,
            c,
            cprime,
            band,
            query_log,
        } => cmd_run(algo, &instance, seed, scale, c, cprime, band, query_log.as_deref()).map(|_| true),
        Command::Bench {
            config,
            seed,
            trials,
            out,
            scale,
            timing,
            check,
        } => cmd_bench(&config, seed, trials, out, scale, timing, check),
        Command::Bounds {
            form,
            n,
            k,
            a,
            q,
            h,
            fplus,
            fminus,
            approx,
        } => cmd_bounds(form, n, k, a, q, h, fplus.as_deref(), fminus.as_deref(), approx).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<UsageError>() || e.is::<ConfigError>() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;
    use ocl::report::Algo;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn algo_names_match_library() {
        for (arg, algo) in [(AlgoArg::Mc, Algo::Mc), (AlgoArg::Lv, Algo::Lv), (AlgoArg::Baseline, Algo::Baseline)] {
            assert_eq!(arg.to_possible_value().unwrap().get_name(), algo.as_str());
        }
    }
}
