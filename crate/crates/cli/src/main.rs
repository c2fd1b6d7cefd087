use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use webplate::bench::{self, Analysis, CaseConfig, Reference};

/// Bending, buckling and plane-stress benchmarks for stiffened Kirchhoff plates.
#[derive(Parser)]
#[command(name = "webplate", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Path to a TOML case file, or the id of a registered case.
    config: String,
    /// Directory for the summary report and field dump.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Spacing of the field dump grid.
    #[arg(long)]
    stride: Option<f64>,
    /// Override the grid spacing.
    #[arg(long)]
    spacing: Option<f64>,
    /// Override the spline degree.
    #[arg(long)]
    p: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum RefArg {
    Analytic,
    FineGrid,
}

#[derive(Subcommand)]
enum Command {
    /// Plate deflection under lateral load.
    Bend(RunArgs),
    /// Critical in-plane load factor and mode.
    Buckle(RunArgs),
    /// Pre-buckling plane stress.
    Stress(RunArgs),
    /// Error and observed order over a list of grid spacings.
    Converge {
        #[command(flatten)]
        run: RunArgs,
        /// Descending grid spacings, comma separated.
        #[arg(long = "h", value_delimiter = ',', required = true)]
        hs: Vec<f64>,
        #[arg(long, value_enum, default_value = "fine-grid")]
        reference: RefArg,
    },
    /// Registered case ids.
    ListCases,
    /// Print the configuration of a registered case.
    Show { case: String },
}

fn load(arg: &RunArgs) -> webplate::Result<CaseConfig> {
    let path = std::path::Path::new(&arg.config);
    let mut cfg = if path.exists() {
        CaseConfig::load(path)?
    } else {
        bench::find_case(&arg.config)
            .ok_or_else(|| webplate::Error::Config(format!("no file or registered case named {:?}", arg.config)))?
    };
    if let Some(out) = &arg.out {
        cfg.output.dir = Some(out.clone());
    }
    if let Some(s) = arg.stride {
        cfg.output.field_stride = Some(s);
    }
    if let Some(h) = arg.spacing {
        cfg.discretization.h = h;
    }
    if let Some(p) = arg.p {
        cfg.discretization.p = p;
    }
    Ok(cfg)
}

fn run(args: &RunArgs, analysis: Analysis) -> webplate::Result<()> {
    let mut cfg = load(args)?;
    cfg.analysis = analysis;
    let result = bench::run_case(&cfg)?;
    print!("{}", result.report());
    for p in result.write_outputs()? {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Bend(a) => run(a, Analysis::Bend),
        Command::Buckle(a) => run(a, Analysis::Buckle),
        Command::Stress(a) => run(a, Analysis::Stress),
        Command::Converge { run, hs, reference } => (|| {
            let cfg = load(run)?;
            let reference = match reference {
                RefArg::Analytic => Reference::Analytic,
                RefArg::FineGrid => Reference::FineGrid,
            };
            let rep = bench::run_convergence(&cfg, hs, reference)?;
            print!("{}", rep.report(&cfg));
            if let Some(dir) = &cfg.output.dir {
                for p in rep.write(&cfg, dir)? {
                    eprintln!("wrote {}", p.display());
                }
            }
            Ok(())
        })(),
        Command::ListCases => {
            for c in bench::registry() {
                println!("{:<34} {:<7} {}", c.case, c.analysis, c.description);
            }
            Ok(())
        }
        Command::Show { case } => bench::find_case(case)
            .map(|c| print!("{}", c.to_toml()))
            .ok_or_else(|| webplate::Error::Config(format!("no registered case named {case:?}"))),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
