use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use representer_cli::commands::{self, Overrides, EXIT_ERROR, EXIT_OK};
use representer_cli::problem::{load_point, load_problem, ProblemFile};
use representer_cli::report::{Outcome, ReportFile};
use representer_core::certificates::CertifyOutcome;
use representer_core::par::Execution;

/// Regularized interpolation with checkable representer certificates.
#[derive(Parser)]
#[command(name = "representer-lab", version)]
struct Cli {
    #[command(flatten)]
    flags: Flags,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Flags {
    /// Target accuracy for sequence-space solves [file default: 0.25]
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    /// Optimality and certificate exactness tolerance [file default: 1e-8]
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Allowed constraint violation [file default: 1e-9]
    #[arg(long = "feas-tol", global = true)]
    feas_tol: Option<f64>,
    /// Largest truncation tried for sequence spaces [file default: 1048576]
    #[arg(long = "truncation-max", global = true)]
    truncation_max: Option<usize>,
    /// Seed for all sampling [file default: 0]
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 uses every core
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Output file (a directory when the input is a directory)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem and attach a certificate
    Solve { path: PathBuf },
    /// Certify a given point against the problem's functionals
    Certify {
        path: PathBuf,
        /// JSON point: a dense array or {"entries": [[i, v], ...]}
        #[arg(long)]
        point: PathBuf,
    },
    /// Decide whether the constraint kernel is proximinal
    Proximinal {
        path: PathBuf,
        /// Also write the truncated image hull vertices as CSV
        #[arg(long = "hull-csv")]
        hull_csv: Option<PathBuf>,
    },
    /// Run the admissibility checks on the problem's regularizer
    Admissible { path: PathBuf },
    /// Tabulate the non-representable sequence of the ℓ¹ counterexample
    Counterexample {
        #[arg(long = "n", value_delimiter = ',', default_values_t = [10usize, 100, 1000])]
        n: Vec<usize>,
        /// Emit the JSON report instead of CSV
        #[arg(long)]
        json: bool,
    },
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            epsilon: self.epsilon,
            tol: self.tol,
            feas_tol: self.feas_tol,
            truncation_max: self.truncation_max,
            seed: self.seed,
        }
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes())
                .and_then(|_| if text.ends_with('\n') { Ok(()) } else { so.write_all(b"\n") })
                .map_err(|e| e.to_string())
        }
    }
}

fn load(path: &Path, ov: &Overrides) -> Result<ProblemFile, i32> {
    let mut pf = load_problem(path).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_ERROR
    })?;
    ov.apply(&mut pf);
    pf.validate().map_err(|msg| {
        eprintln!("error: {}: {msg}", path.display());
        EXIT_ERROR
    })?;
    Ok(pf)
}

fn summarize(path: &Path, report: &ReportFile, code: i32) {
    match &report.result {
        Outcome::Certify { outcome, .. } => {
            let kind = match outcome {
                CertifyOutcome::Exact(_) => "exact",
                CertifyOutcome::NotRepresentable { .. } => "not representable",
            };
            eprintln!("{}: {kind}, distance {:e}", path.display(), outcome.distance());
        }
        Outcome::Infeasible { message, .. } | Outcome::BudgetExceeded { message, .. } | Outcome::Failed { message } => {
            eprintln!("{}: {message}", path.display())
        }
        _ => info!("{}: exit {code}", path.display()),
    }
}

type Runner<'a> = dyn Fn(&ProblemFile) -> (ReportFile, i32) + Sync + 'a;

/// Runs one problem file, writing its report.
fn run_file(path: &Path, out: Option<&Path>, ov: &Overrides, run: &Runner) -> i32 {
    let pf = match load(path, ov) {
        Ok(pf) => pf,
        Err(code) => return code,
    };
    let (report, code) = run(&pf);
    summarize(path, &report, code);
    match write_out(out, &report.to_json()) {
        Ok(()) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Every `*.json` file of a directory, one problem per worker. Returns the worst exit code.
fn run_dir(dir: &Path, out: Option<&Path>, ov: &Overrides, run: &Runner) -> i32 {
    let mut files: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect(),
        Err(e) => {
            eprintln!("error: {}: {e}", dir.display());
            return EXIT_ERROR;
        }
    };
    files.sort();
    if let Some(o) = out {
        if let Err(e) = fs::create_dir_all(o) {
            eprintln!("error: {}: {e}", o.display());
            return EXIT_ERROR;
        }
    }
    let one = |p: &PathBuf| -> (i32, Option<String>) {
        match out {
            Some(o) => {
                let name = format!("{}.report.json", p.file_stem().unwrap_or_default().to_string_lossy());
                (run_file(p, Some(&o.join(name)), ov, run), None)
            }
            None => match load(p, ov) {
                Err(code) => (code, None),
                Ok(pf) => {
                    let (report, code) = run(&pf);
                    summarize(p, &report, code);
                    (code, Some(serde_json::to_string(&report).expect("reports serialize")))
                }
            },
        }
    };
    #[cfg(feature = "parallel")]
    let results: Vec<(i32, Option<String>)> = {
        use rayon::prelude::*;
        files.par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<(i32, Option<String>)> = files.iter().map(one).collect();
    // one compact report per line, in file order
    let mut worst = EXIT_OK;
    for (code, line) in results {
        worst = worst.max(code);
        if let Some(l) = line {
            if let Err(e) = write_out(None, &l) {
                eprintln!("error: {e}");
                worst = worst.max(EXIT_ERROR);
            }
        }
    }
    worst
}

fn dispatch(cli: &Cli) -> i32 {
    let ov = cli.flags.overrides();
    let out = cli.flags.out.as_deref();
    let exec = Execution::Parallel;
    let by_path = |path: &Path, run: &Runner| {
        if path.is_dir() {
            run_dir(path, out, &ov, run)
        } else {
            run_file(path, out, &ov, run)
        }
    };
    match &cli.command {
        Command::Solve { path } => by_path(path, &commands::solve),
        Command::Admissible { path } => by_path(path, &|pf: &ProblemFile| commands::admissible(pf, exec)),
        Command::Proximinal { path, hull_csv } => {
            let code = by_path(path, &|pf: &ProblemFile| commands::proximinal(pf, exec));
            match (hull_csv, path.is_dir()) {
                (None, _) => code,
                (Some(_), true) => {
                    warn!("--hull-csv is ignored for directories");
                    code
                }
                (Some(csv_path), false) => {
                    let Ok(pf) = load(path, &ov) else { return EXIT_ERROR };
                    let written = commands::hull_csv(&pf)
                        .map_err(|e| e.to_string())
                        .and_then(|t| write_out(Some(csv_path), &t));
                    match written {
                        Ok(()) => code,
                        Err(e) => {
                            eprintln!("error: {e}");
                            EXIT_ERROR
                        }
                    }
                }
            }
        }
        Command::Certify { path, point } => {
            if path.is_dir() {
                eprintln!("error: certify takes a single problem file");
                return EXIT_ERROR;
            }
            let pt = match load_point(point) {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_ERROR;
                }
            };
            run_file(path, out, &ov, &|pf: &ProblemFile| commands::certify(pf, &pt))
        }
        Command::Counterexample { n, json } => {
            if n.is_empty() || n.contains(&0) {
                eprintln!("error: --n needs positive integers");
                return EXIT_ERROR;
            }
            let (report, code) = commands::counterexample(n, exec);
            let text = match (&report.result, json) {
                (_, true) => Ok(report.to_json()),
                (Outcome::Counterexample(t), false) => commands::counterexample_csv(t).map_err(|e| e.to_string()),
                _ => Err(format!("{:?}", report.result)),
            };
            match text.and_then(|t| write_out(out, &t)) {
                Ok(()) => code,
                Err(e) => {
                    eprintln!("error: {e}");
                    EXIT_ERROR
                }
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("REPRESENTER_LAB_LOG", "warn")).init();
    // usage errors share exit code 1 with schema errors
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_ERROR as u8 } else { 0 });
        }
    };
    let code = {
        #[cfg(feature = "parallel")]
        {
            match rayon::ThreadPoolBuilder::new().num_threads(cli.flags.jobs).build() {
                Ok(pool) => pool.install(|| dispatch(&cli)),
                Err(e) => {
                    eprintln!("error: thread pool: {e}");
                    EXIT_ERROR
                }
            }
        }
        #[cfg(not(feature = "parallel"))]
        {
            if cli.flags.jobs > 1 {
                warn!("built without the parallel feature; --jobs is ignored");
            }
            dispatch(&cli)
        }
    };
    ExitCode::from(code as u8)
}
