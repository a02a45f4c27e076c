use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tsirelson::clifford::verify_realization;
use tsirelson::optimize::{DEFAULT_SEED, SEED_ENV};
use tsirelson::report::{self, CustomOptions, REDUCE_TOL};
use tsirelson::{
    realize_strategy, BellMatrix, Family, OptimizerConfig, QuantumRealization, VectorStrategy,
};

#[derive(Parser)]
#[command(
    name = "tsirelson",
    version,
    about = "Bounds of correlation Bell inequalities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
#[group(multiple = false)]
struct Format {
    /// Emit JSON.
    #[arg(long)]
    json: bool,
    /// Emit CSV.
    #[arg(long)]
    csv: bool,
}

#[derive(Args, Clone)]
struct Optim {
    /// Number of random restarts.
    #[arg(long, default_value_t = 1000)]
    restarts: usize,
    /// Seed for the restart generators.
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Polish the best restart with Nelder-Mead.
    #[arg(long)]
    simplex: bool,
}

impl Optim {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            refine_with_simplex: self.simplex,
            ..OptimizerConfig::default()
                .with_restarts(self.restarts)
                .with_seed(self.seed)
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print a family matrix (X, Y or Z) as JSON.
    Family {
        family: Family,
        n: usize,
        /// Write to a file instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Bounds of a matrix file at one or more dimensions.
    Bound {
        matrix: PathBuf,
        /// Vector dimension; repeat or separate with commas.
        #[arg(long = "dim", required = true, value_delimiter = ',')]
        dims: Vec<usize>,
        #[command(flatten)]
        optim: Optim,
        /// Build and verify a quantum realization of the largest dimension.
        #[arg(long)]
        realize: bool,
        /// Directory for strategy and realization files.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[command(flatten)]
        format: Format,
    },
    /// Bounds of X4, Y4 and Z4 for d = 1..4.
    Table1 {
        #[command(flatten)]
        optim: Optim,
        #[command(flatten)]
        format: Format,
    },
    /// Exact Z_n ratios and their large-n trend.
    Table2 {
        /// n used for the large-n row.
        #[arg(long, default_value_t = report::DEFAULT_LARGE_N)]
        large_n: usize,
        #[command(flatten)]
        format: Format,
    },
    /// Turn a vector strategy file into observables on a maximally entangled state.
    Realize {
        strategy: PathBuf,
        /// Matrix whose value the realization should reproduce.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Keep the stored dimension instead of projecting onto the span.
        #[arg(long)]
        no_reduce: bool,
        /// Write the realization here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a realization file and extract its vectors.
    Verify {
        realization: PathBuf,
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

fn emit(
    format: Format,
    json: impl FnOnce() -> String,
    csv: impl FnOnce() -> String,
    text: impl FnOnce() -> String,
) {
    if format.json {
        println!("{}", json());
    } else if format.csv {
        print!("{}", csv());
    } else {
        print!("{}", text());
    }
}

fn write_or_print(path: Option<&Path>, contents: &str) -> tsirelson::Result<()> {
    match path {
        Some(p) => std::fs::write(p, format!("{contents}\n"))?,
        None => println!("{contents}"),
    }
    Ok(())
}

fn run(cli: Cli) -> tsirelson::Result<bool> {
    match cli.command {
        Command::Family { family, n, output } => {
            let m = family.build(n)?;
            write_or_print(output.as_deref(), &m.to_json())?;
            Ok(true)
        }
        Command::Bound {
            matrix,
            dims,
            optim,
            realize,
            out_dir,
            format,
        } => {
            let opts = CustomOptions { realize, out_dir };
            let r = report::run_custom(&matrix, &dims, &optim.config(), &opts)?;
            emit(format, || r.to_json(), || r.to_csv(), || r.to_text());
            Ok(r.all_passed())
        }
        Command::Table1 { optim, format } => {
            let t = report::run_table1(&optim.config())?;
            emit(format, || t.to_json(), || t.to_csv(), || t.to_text());
            Ok(t.all_passed())
        }
        Command::Table2 { large_n, format } => {
            let t = report::run_table2(large_n)?;
            emit(format, || t.to_json(), || t.to_csv(), || t.to_text());
            Ok(t.all_passed())
        }
        Command::Realize {
            strategy,
            matrix,
            no_reduce,
            output,
        } => {
            let text = std::fs::read_to_string(&strategy)?;
            let s: VectorStrategy = serde_json::from_str(&text)?;
            let s = if no_reduce {
                s
            } else {
                s.reduce_to_span(REDUCE_TOL)
            };
            let m = matrix.as_deref().map(BellMatrix::from_file).transpose()?;
            let q = realize_strategy(&s)?;
            let check = verify_realization(&q, m.as_ref())?;
            write_or_print(output.as_deref(), &q.to_json())?;
            eprintln!(
                "dim_h = {}, extraction error {:.2e}, max |marginal| {:.2e}{}",
                check.dim_h,
                check.max_extraction_error,
                check.max_abs_marginal,
                check
                    .bell_value
                    .map_or(String::new(), |v| format!(", bell value {v:.12}"))
            );
            Ok(check.passed())
        }
        Command::Verify {
            realization,
            matrix,
            json,
        } => {
            let q = QuantumRealization::from_json(&std::fs::read_to_string(&realization)?)?;
            let m = matrix.as_deref().map(BellMatrix::from_file).transpose()?;
            let check = verify_realization(&q, m.as_ref())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&check)?);
            } else {
                println!("dim_h                 {}", check.dim_h);
                println!("state norm error      {:.3e}", check.state_norm_error);
                println!("max involution error  {:.3e}", check.max_involution_error);
                println!("max hermiticity error {:.3e}", check.max_hermiticity_error);
                println!("max |marginal|        {:.3e}", check.max_abs_marginal);
                println!("max extraction error  {:.3e}", check.max_extraction_error);
                if let Some(v) = check.bell_value {
                    println!("bell value            {v:.12}");
                }
                println!("{}", if check.passed() { "PASS" } else { "FAIL" });
            }
            Ok(check.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
