use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use memgrad_bench::config::{ConfigError, Method, RunConfig};
use memgrad_bench::experiment::ExperimentError;
use memgrad_bench::{expand, output, run_batch, summary, thread_cap};

/// Runs gradient methods with memory on synthetic benchmark problems.
///
/// `--method`, `--m` and `--seed` accept comma-separated lists; their
/// product is run as a batch and `--out` then names a directory.
/// Exit status: 0 all runs converged, 2 some run exhausted its budget,
/// 1 configuration or solver error.
#[derive(Debug, Parser)]
#[command(name = "memgrad", version)]
struct Cli {
    /// Configuration file with `key = value` lines, applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// LASSO, NNLS, L1LR, RR or EN.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    rows: Option<String>,
    #[arg(long)]
    cols: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// GM, GMM, ACGM, AGMM, AGMM_SC, R_AGMM_KNOWN or R_AGMM_ADAPTIVE.
    #[arg(long)]
    method: Option<String>,
    /// Bundle size.
    #[arg(long)]
    m: Option<String>,
    /// crs (cyclic) or mrs (max-norm).
    #[arg(long)]
    replacement: Option<String>,
    /// soft or hard.
    #[arg(long)]
    restart: Option<String>,
    /// Restart decrease factor.
    #[arg(long = "D")]
    d: Option<String>,
    /// Restart threshold escalation factor.
    #[arg(long)]
    s: Option<String>,
    #[arg(long)]
    mu_f: Option<String>,
    #[arg(long)]
    mu_psi: Option<String>,
    /// Initial Lipschitz estimate; defaults to the problem's constant.
    #[arg(long = "L0")]
    l0: Option<String>,
    #[arg(long)]
    ru: Option<String>,
    #[arg(long)]
    rd: Option<String>,
    /// Relative error target.
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    #[arg(long)]
    inner_iters: Option<String>,
    #[arg(long)]
    newton_iters: Option<String>,
    /// Iterations of the reference run.
    #[arg(long)]
    ref_budget: Option<String>,
    /// Trace file (single run) or output directory (batch).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn list<T: std::str::FromStr>(key: &str, raw: &str) -> Result<Vec<T>, ConfigError>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(|s| {
            s.trim().parse().map_err(|e: T::Err| ConfigError::InvalidValue {
                key: key.into(),
                value: s.into(),
                reason: e.to_string(),
            })
        })
        .collect()
}

fn build(cli: &Cli) -> Result<(Vec<RunConfig>, bool), ConfigError> {
    let mut base = RunConfig::default();
    if let Some(path) = &cli.config {
        base.apply_file(path)?;
    }
    let scalar = [
        ("problem", &cli.problem),
        ("rows", &cli.rows),
        ("cols", &cli.cols),
        ("replacement", &cli.replacement),
        ("restart", &cli.restart),
        ("D", &cli.d),
        ("s", &cli.s),
        ("mu_f", &cli.mu_f),
        ("mu_psi", &cli.mu_psi),
        ("L0", &cli.l0),
        ("ru", &cli.ru),
        ("rd", &cli.rd),
        ("eps", &cli.eps),
        ("max_iters", &cli.max_iters),
        ("inner_iters", &cli.inner_iters),
        ("newton_iters", &cli.newton_iters),
        ("ref_budget", &cli.ref_budget),
    ];
    for (key, value) in scalar {
        if let Some(v) = value {
            base.set(key, v)?;
        }
    }
    if let Some(out) = &cli.out {
        base.out = Some(out.clone());
    }
    let methods: Vec<Method> = match &cli.method {
        Some(raw) => list("method", raw)?,
        None => vec![base.method],
    };
    let sizes: Vec<usize> = match &cli.m {
        Some(raw) => {
            let sizes = list("m", raw)?;
            if sizes.contains(&0) {
                return Err(ConfigError::InvalidValue { key: "m".into(), value: raw.clone(), reason: "bundle size must be at least 1".into() });
            }
            sizes
        }
        None => Vec::new(),
    };
    let seeds: Vec<u64> = match &cli.seed {
        Some(raw) => list("seed", raw)?,
        None => vec![base.problem.seed],
    };
    let batch = methods.len() > 1 || sizes.len() > 1 || seeds.len() > 1;
    if !batch {
        base.method = methods[0];
        base.problem.seed = seeds[0];
        if let Some(&m) = sizes.first() {
            base.m = Some(m);
        }
        base.validate()?;
        return Ok((vec![base], false));
    }
    let configs = expand(&base, &methods, &sizes, &seeds);
    for c in &configs {
        c.validate()?;
    }
    Ok((configs, true))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let (configs, batch) = match build(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("configuration error: {e}");
            return ExitCode::from(1);
        }
    };

    let results = run_batch(&configs, thread_cap());
    let mut experiments = Vec::new();
    for r in results {
        match r {
            Ok(e) => experiments.push(e),
            Err(ExperimentError::Config(e)) => {
                eprintln!("configuration error: {e}");
                return ExitCode::from(1);
            }
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
        }
    }

    let out = configs[0].out.clone();
    if let Some(out) = &out {
        for e in &experiments {
            let path = if batch { out.join(output::batch_file_name(e)) } else { out.clone() };
            if let Err(err) = output::write_trace(e, &path) {
                eprintln!("cannot write {}: {err}", path.display());
                return ExitCode::from(1);
            }
        }
    }
    let rows = summary::summarize(experiments.iter().map(|e| &e.meta));
    print!("{}", summary::render_table(&rows));
    if let (true, Some(dir)) = (batch, &out) {
        let path = dir.join("summary.csv");
        if let Err(err) = std::fs::write(&path, summary::render_csv(&rows)) {
            eprintln!("cannot write {}: {err}", path.display());
            return ExitCode::from(1);
        }
    }
    if experiments.iter().all(|e| e.trace.converged) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
