use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use polar_express::bench::{resolve_method, write_csv, BenchOptions};
use polar_express::engine::{apply_polys, ApplyOptions, BaselineRegistry, FastMode, Normalization};
use polar_express::{
    exact_polar, gen_matrix, run_convergence, Error, FastApplyConfig, MatrixBuffer, OddPolynomial,
    Precision, Schedule, ScheduleBuilder, SpectrumSpec,
};

/// Polar factors by composed odd polynomials.
#[derive(Parser)]
#[command(name = "polar-express", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a greedy minimax schedule and write it as JSON.
    Synth {
        /// Lower bound on the normalized singular values.
        #[arg(long)]
        l: f64,
        /// Number of polynomials.
        #[arg(long = "T")]
        steps: usize,
        #[arg(long, default_value_t = 5)]
        degree: usize,
        #[arg(long, default_value_t = polar_express::schedule::DEFAULT_CUSHION)]
        cushion: f64,
        #[arg(long, default_value_t = polar_express::schedule::DEFAULT_SAFETY)]
        safety: f64,
        /// Also divide the last polynomial by the safety factor.
        #[arg(long)]
        safety_on_last: bool,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a schedule (file or builtin name) to a matrix.
    Apply {
        /// Schedule JSON path, `default`, or a baseline name (ns3, ns5, jordan).
        #[arg(long)]
        schedule: String,
        /// Input matrix (PXM1 or CSV).
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Number of steps; defaults to the schedule length.
        #[arg(long = "T")]
        steps: Option<usize>,
        /// f64, f32 or bf16.
        #[arg(long, default_value = "f64")]
        precision: Precision,
        /// frobenius, frobenius:<eps>, padded or none.
        #[arg(long, default_value = "frobenius")]
        normalization: Normalization,
        /// auto, on or off.
        #[arg(long, default_value = "off")]
        fast: FastMode,
        /// Re-form the Gram matrix every k steps on the fast path.
        #[arg(long)]
        restart: Option<usize>,
    },
    /// Run methods on a synthetic matrix and write per-iteration metrics as CSV.
    Bench {
        /// `log:<min>:<max>:<n>[x<m>]`, `pow:<exp>:<n>`, `list:<a,b,..>[:<n>x<m>]` or `file:<path>`.
        #[arg(long)]
        spec: String,
        /// Comma-separated method names.
        #[arg(long, value_delimiter = ',', default_value = "polarexpress,ns5,jordan")]
        methods: Vec<String>,
        #[arg(long = "T", default_value_t = 25)]
        steps: usize,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value_t = polar_express::metrics::DEFAULT_GAMMA)]
        gamma: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "f64")]
        precision: Precision,
        /// frobenius, frobenius:<eps>, padded or none.
        #[arg(long, default_value = "frobenius")]
        normalization: Normalization,
        /// Extra baseline schedule files as `name=path`.
        #[arg(long = "baseline", value_name = "NAME=PATH")]
        baselines: Vec<String>,
        /// Run methods concurrently.
        #[arg(long)]
        parallel: bool,
        /// Write zeros in the seconds column for reproducible output.
        #[arg(long)]
        no_timing: bool,
    },
    /// Exact polar factor via SVD.
    Polar {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn builtin_polys(name: &str) -> polar_express::Result<Vec<OddPolynomial>> {
    if name == "default" {
        return Ok(polar_express::default_schedule().polys().to_vec());
    }
    let path = std::path::Path::new(name);
    if path.exists() {
        return Ok(Schedule::load(path)?.polys().to_vec());
    }
    match BaselineRegistry::default().get(name) {
        Ok(p) => Ok(p.to_vec()),
        Err(Error::UnknownMethod { mut available, .. }) => {
            available.insert(0, "default".into());
            Err(Error::UnknownMethod {
                name: format!("{name} (no such file either)"),
                available,
            })
        }
        Err(e) => Err(e),
    }
}

fn run(cmd: Command) -> polar_express::Result<()> {
    match cmd {
        Command::Synth {
            l,
            steps,
            degree,
            cushion,
            safety,
            safety_on_last,
            out,
        } => {
            let s = ScheduleBuilder::new(l)
                .steps(steps)
                .degree(degree)
                .cushion(cushion)
                .safety(safety)
                .safety_on_last(safety_on_last)
                .build()?;
            match out {
                Some(path) => s.save(path)?,
                None => println!("{}", s.to_json()?),
            }
            eprintln!("certified error after {steps} steps: {:e}", s.certified_error());
        }
        Command::Apply {
            schedule,
            input,
            out,
            steps,
            precision,
            normalization,
            fast,
            restart,
        } => {
            let polys = builtin_polys(&schedule)?;
            let m = MatrixBuffer::load(&input)?;
            let mut fast_config = FastApplyConfig::default();
            if let Some(k) = restart {
                fast_config = fast_config.restart_every(k);
            }
            let opts = ApplyOptions {
                precision,
                normalization,
                fast,
                fast_config,
            };
            let x = apply_polys(&m, &polys, steps.unwrap_or(polys.len()), &opts)?;
            x.to_precision(Precision::F64).save(out)?;
        }
        Command::Bench {
            spec,
            methods,
            steps,
            csv,
            gamma,
            seed,
            precision,
            normalization,
            baselines,
            parallel,
            no_timing,
        } => {
            let spec: SpectrumSpec = spec.parse()?;
            let m = gen_matrix(&spec.with_seed(seed))?;
            let mut registry = BaselineRegistry::default();
            for b in &baselines {
                let (name, path) = b.split_once('=').ok_or_else(|| {
                    Error::Domain(format!("--baseline expects NAME=PATH, got `{b}`"))
                })?;
                registry.load_file(name, path)?;
            }
            let methods = methods
                .iter()
                .map(|name| resolve_method(name, steps, &registry))
                .collect::<polar_express::Result<Vec<_>>>()?;
            let opts = BenchOptions {
                steps,
                apply: ApplyOptions {
                    precision,
                    normalization,
                    ..Default::default()
                },
                gamma,
                parallel,
                timing: !no_timing,
            };
            let reports = run_convergence(&m, &methods, &opts)?;
            write_csv(&reports, BufWriter::new(File::create(&csv)?))?;
            for r in &reports {
                if let Some(last) = r.records.last() {
                    eprintln!("{}: spectral error {:e} after {} steps", r.method, last.spectral_error, last.iter);
                }
            }
        }
        Command::Polar { input, out } => {
            exact_polar(&MatrixBuffer::load(&input)?)?.save(out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numeric() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
