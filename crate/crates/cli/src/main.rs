use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wpcs_cli::{compare_csv, read_config, run_csv, svg, sweep, sweep_csv, CliError, SweepSpec};

#[derive(Parser)]
#[command(name = "wpcs", version, about = "Wirelessly powered crowd-sensing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run all replications of one scenario.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Replaces `master_seed` from the config file.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to the machine's parallelism.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Run one scenario per value of a single key.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        key: String,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Also write SVG charts into this directory.
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Paired-seed comparison of two scenarios.
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn with_jobs<T>(jobs: Option<usize>, f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError>
where
    T: Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            jobs,
        } => {
            let mut cfg = read_config(&config)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            let csv = with_jobs(jobs, || run_csv(&cfg))?;
            write(&out, &csv)
        }
        Command::Sweep {
            config,
            key,
            values,
            out,
            svg: svg_dir,
            jobs,
        } => {
            let spec = SweepSpec::new(read_config(&config)?, &key, &values)?;
            let record = with_jobs(jobs, || sweep(&spec))?;
            write(&out, &sweep_csv(&spec, &record)?)?;
            if let Some(dir) = svg_dir {
                svg::write_sweep_charts(&dir, &record)?;
            }
            Ok(())
        }
        Command::Compare {
            config_a,
            config_b,
            out,
            jobs,
        } => {
            let a = read_config(&config_a)?;
            let b = read_config(&config_b)?;
            let csv = with_jobs(jobs, || compare_csv(&a, &b))?;
            write(&out, &csv)
        }
    }
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
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wpcs: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
