use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rectsum::spectral::{partial_sum, Spectrum};
use rectsum_cli::config::{ExperimentConfig, IdentityCheck};
use rectsum_cli::report::{emit_report, write_output, Format, Report};
use rectsum_cli::runs::{adopt_spectrum, decompose_single, maximal_single};
use rectsum_cli::suites::{run_convergence_suite, run_identity_suite, run_maximal_suite, run_weyl_suite};
use rectsum_cli::testfn::gen_test_function;

/// Rectangular partial sums of multiple Fourier series: test functions,
/// maximal-ratio and convergence experiments, identity checks.
#[derive(Parser)]
#[command(name = "rectsum", version)]
struct Cli {
    /// RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid points per axis (one value, or one per axis).
    #[arg(long, global = true, value_delimiter = ',')]
    grid: Option<Vec<usize>>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "json")]
    format: Format,
    /// Plain-text `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Extra `key=value` config assignments, applied after the file.
    #[arg(long = "set", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Default)]
struct SpaceArgs {
    /// Lacunary axes, 1-based.
    #[arg(long = "Jk", visible_alias = "jk", value_delimiter = ',')]
    jk: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<f64>>,
    #[arg(long)]
    lambda_count: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    free_cap: Option<Vec<usize>>,
    #[arg(long)]
    weight: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Abel,
    Identities,
    Maximal,
    Weyl,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a test spectrum as JSON.
    Gen {
        #[arg(long)]
        family: Option<String>,
        #[arg(long, value_delimiter = ',')]
        bandwidth: Option<Vec<usize>>,
        #[arg(long)]
        beta: Option<f64>,
        /// Frequency of a single mode, e.g. `1,-2,3`.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        mode: Option<Vec<i64>>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Evaluate `S_n` of a spectrum on the grid.
    PartialSum {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
    },
    /// Maximal function of one spectrum, or the maximal suite without --spec.
    Maximal {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// Four-term decomposition of `S_n` for a sample with two free axes.
    Decompose {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long = "Jk", visible_alias = "jk", value_delimiter = ',')]
        jk: Option<Vec<usize>>,
    },
    /// Convergence suite along lacunary index paths.
    Converge {
        #[command(flatten)]
        space: SpaceArgs,
    },
    /// Run a check suite.
    Verify {
        #[arg(value_enum)]
        target: Target,
        /// Shift one oracle coefficient; the identity checks must then fail.
        #[arg(long)]
        planted: bool,
    },
    /// Re-emit a saved report, or rerun it and compare.
    Report {
        #[arg(long)]
        input: PathBuf,
        /// Rerun the suite from the echoed config; exit 1 unless the
        /// output is byte-identical.
        #[arg(long)]
        rerun: bool,
    },
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Pass,
    Fail,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            ExperimentConfig::from_kv_text(&text).with_context(|| format!("in {}", p.display()))?
        }
        None => ExperimentConfig::default(),
    };
    for a in &cli.set {
        cfg.set_assignment(a)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(grid) = &cli.grid {
        cfg.grid = grid.clone();
    }
    cfg.out = cli.out.as_ref().map(|p| p.display().to_string());
    Ok(cfg)
}

fn apply_space(cfg: &mut ExperimentConfig, a: &SpaceArgs) -> Result<()> {
    if let Some(jk) = &a.jk {
        cfg.jk = jk.clone();
    }
    if let Some(q) = &a.q {
        cfg.q = q.clone();
    }
    if let Some(l) = a.lambda_count {
        cfg.lambda_count = l;
    }
    if let Some(c) = &a.free_cap {
        cfg.free_cap = c.clone();
    }
    if let Some(w) = &a.weight {
        cfg.weight = w.parse()?;
    }
    Ok(())
}

fn read_spectrum(path: &Path) -> Result<Spectrum> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Spectrum::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn spectrum_csv(s: &Spectrum) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=s.dimension()).map(|a| format!("nu{a}")).collect();
    header.extend(["re".to_string(), "im".to_string()]);
    w.write_record(&header)?;
    let mut err = None;
    s.for_each_mode(|mode, c| {
        let mut rec: Vec<String> = mode.iter().map(|v| v.to_string()).collect();
        rec.extend([c.re.to_string(), c.im.to_string()]);
        if let Err(e) = w.write_record(&rec) {
            err.get_or_insert(e);
        }
    });
    if let Some(e) = err {
        return Err(e.into());
    }
    Ok(String::from_utf8(w.into_inner().context("flushing csv")?)?)
}

fn finish(report: &Report, cli: &Cli) -> Result<Outcome> {
    emit_report(report, cli.format, cli.out.as_deref())?;
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("check failed: {} = {} (limit {})", c.name, c.value, c.limit);
    }
    Ok(if report.passed { Outcome::Pass } else { Outcome::Fail })
}

fn rerun(report: &Report) -> Result<Report> {
    match report.suite.as_str() {
        "converge" => run_convergence_suite(&report.config),
        "maximal" => run_maximal_suite(&report.config),
        "identities" => run_identity_suite(&report.config),
        "weyl" => run_weyl_suite(&report.config),
        other => bail!("cannot rerun unknown suite '{other}'"),
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let mut cfg = load_config(cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Gen {
            family,
            bandwidth,
            beta,
            mode,
            trial,
        } => {
            if let Some(f) = family {
                cfg.family = f.parse()?;
            }
            if let Some(b) = bandwidth {
                cfg.bandwidth = b.clone();
                cfg.dimension = if b.len() == 1 { cfg.dimension } else { b.len() };
            }
            if let Some(b) = beta {
                cfg.beta = *b;
            }
            if let Some(m) = mode {
                cfg.mode = m.clone();
            }
            let s = gen_test_function(cfg.family, &cfg.test_params()?, cfg.seed, *trial)?;
            let text = match cli.format {
                Format::Json => s.to_json()? + "\n",
                Format::Csv => spectrum_csv(&s)?,
            };
            write_output(&text, out)?;
            Ok(Outcome::Pass)
        }
        Command::PartialSum { spec, n } => {
            let s = read_spectrum(spec)?;
            adopt_spectrum(&mut cfg, &s);
            let g = partial_sum(&s, n, &cfg.grid()?)?;
            let text = match cli.format {
                Format::Json => g.to_json()? + "\n",
                Format::Csv => g.to_csv()?,
            };
            write_output(&text, out)?;
            Ok(Outcome::Pass)
        }
        Command::Maximal { spec, space } => {
            apply_space(&mut cfg, space)?;
            match spec {
                Some(path) => {
                    let s = read_spectrum(path)?;
                    adopt_spectrum(&mut cfg, &s);
                    let result = maximal_single(&cfg, &s)?;
                    let text = match cli.format {
                        Format::Json => result.to_json()?,
                        Format::Csv => result.weak_type_csv()?,
                    };
                    write_output(&text, out)?;
                    Ok(Outcome::Pass)
                }
                None => finish(&run_maximal_suite(&cfg)?, cli),
            }
        }
        Command::Decompose { spec, n, jk } => {
            if let Some(jk) = jk {
                cfg.jk = jk.clone();
            }
            let s = read_spectrum(spec)?;
            adopt_spectrum(&mut cfg, &s);
            let result = decompose_single(&cfg, &s, n)?;
            write_output(&(serde_json::to_string_pretty(&result)? + "\n"), out)?;
            Ok(if result.passed { Outcome::Pass } else { Outcome::Fail })
        }
        Command::Converge { space } => {
            apply_space(&mut cfg, space)?;
            finish(&run_convergence_suite(&cfg)?, cli)
        }
        Command::Verify { target, planted } => {
            cfg.planted |= *planted;
            let report = match target {
                Target::Abel => {
                    cfg.checks = vec![IdentityCheck::Abel];
                    run_identity_suite(&cfg)?
                }
                Target::Identities => run_identity_suite(&cfg)?,
                Target::Maximal => run_maximal_suite(&cfg)?,
                Target::Weyl => run_weyl_suite(&cfg)?,
            };
            finish(&report, cli)
        }
        Command::Report { input, rerun: again } => {
            let text = fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
            let report = Report::from_json(&text).with_context(|| format!("in {}", input.display()))?;
            if *again {
                let fresh = rerun(&report)?;
                let same = fresh.to_json()? == text;
                if !same {
                    eprintln!("rerun of {} differs from {}", report.suite, input.display());
                }
                emit_report(&fresh, cli.format, out)?;
                return Ok(if same { Outcome::Pass } else { Outcome::Fail });
            }
            emit_report(&report, cli.format, out)?;
            Ok(Outcome::Pass)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
