//! Command-line front end: tracing, reports, single analyses, image
//! simulation and optimization over lens files.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use relay_core::io::{
    analysis_artifacts, read_lens, read_merit, read_pgm, read_variables, report_artifacts,
    write_artifacts, write_lens, write_pgm, Analysis, Artifact, ReportSettings, Table,
};
use relay_core::optimizer::{
    hammer_optimize, local_optimize, HammerSettings, LocalSettings, VariableSet,
};
use relay_core::quality::aim::Bench;
use relay_core::quality::{simulate_image, SimulationMode};
use relay_core::{GlassCatalog, LensSystem};

/// Exit status for a completed command.
pub const EXIT_OK: i32 = 0;
/// Exit status for usage errors and invalid input files.
pub const EXIT_INVALID: i32 = 1;
/// Exit status when an analysis or optimization cannot be carried out.
pub const EXIT_ANALYSIS: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "relay",
    version,
    about = "Sequential lens analysis and optimization"
)]
struct Cli {
    /// Glass catalog used to resolve material names (defaults to the shipped catalog).
    #[arg(long, global = true)]
    catalog: Option<PathBuf>,
    /// Log progress to standard error.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Trace one real ray and print its surface intercepts.
    Trace(TraceArgs),
    /// Write the paraxial summary and every analysis into a directory.
    Report {
        lens: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a single analysis.
    Analyze {
        #[arg(value_enum)]
        kind: AnalysisKind,
        lens: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Write all files of the analysis here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the image of a PGM source.
    Image(ImageArgs),
    /// Optimize a lens against a merit file.
    Optimize(OptimizeArgs),
}

#[derive(Debug, Args)]
struct TraceArgs {
    lens: PathBuf,
    /// Field angle, degrees.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    field: f64,
    /// Normalized pupil coordinates.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    px: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    py: f64,
    /// Wavelength in µm (defaults to the primary wavelength).
    #[arg(long)]
    wavelength: Option<f64>,
}

#[derive(Debug, Args)]
struct ImageArgs {
    lens: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Geometric)]
    mode: Mode,
    #[arg(long, default_value_t = 512)]
    size: usize,
    #[arg(long, default_value = "image.pgm")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[arg(value_enum)]
    method: Method,
    lens: PathBuf,
    #[arg(long)]
    merit: PathBuf,
    /// Variable definitions (defaults to every curved surface and glass).
    #[arg(long)]
    variables: Option<PathBuf>,
    /// Outer iterations of the global search.
    #[arg(long, default_value_t = 20)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Damped least squares iteration limit.
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value = "optimized.lens")]
    out: PathBuf,
    /// History CSV (global search only).
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AnalysisKind {
    Spot,
    Mtf,
    Psf,
    Opd,
    Field,
    Seidel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Geometric,
    Diffraction,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Method {
    Local,
    Hammer,
}

/// Error carrying its exit status.
struct Failure {
    code: i32,
    message: String,
}

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: e.to_string(),
    }
}

fn analysis(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_ANALYSIS,
        message: e.to_string(),
    }
}

fn load_catalog(path: Option<&Path>) -> Result<GlassCatalog, Failure> {
    match path {
        Some(p) => GlassCatalog::load(p).map_err(invalid),
        None => Ok(GlassCatalog::shipped()),
    }
}

fn trace(system: &LensSystem, args: &TraceArgs) -> Result<(), Failure> {
    let wavelength = args.wavelength.unwrap_or(system.primary_wavelength());
    let bench = Bench::new(system).map_err(analysis)?;
    let (beam, _) = bench.aimed_beam(args.field, wavelength).map_err(analysis)?;
    let result = beam.trace(&bench, args.px, args.py);
    let mut table = Table::new([
        "surface", "x", "y", "z", "l", "m", "n", "aoi_deg", "aor_deg",
    ]);
    for (i, r) in result.records.iter().enumerate() {
        table.push(vec![
            i.into(),
            r.point.x.into(),
            r.point.y.into(),
            r.point.z.into(),
            r.direction.x.into(),
            r.direction.y.into(),
            r.direction.z.into(),
            r.incidence_angle.to_degrees().into(),
            r.refraction_angle.to_degrees().into(),
        ]);
    }
    print!("{}", table.to_csv());
    if !result.status.is_completed() {
        return Err(analysis(format!("ray stopped: {:?}", result.status)));
    }
    Ok(())
}

fn print_or_write(
    artifacts: Vec<Artifact>,
    format: Format,
    out: Option<&Path>,
) -> Result<(), Failure> {
    if let Some(dir) = out {
        for path in write_artifacts(&artifacts, dir).map_err(invalid)? {
            println!("wrote {}", path.display());
        }
        return Ok(());
    }
    let wanted = artifacts
        .into_iter()
        .find(|a| a.is_svg() == (format == Format::Svg))
        .ok_or_else(|| invalid("this analysis has no output in that format"))?;
    print!("{}", wanted.contents);
    Ok(())
}

fn optimize(
    system: &LensSystem,
    catalog: &GlassCatalog,
    args: &OptimizeArgs,
) -> Result<(), Failure> {
    let operands = read_merit(&args.merit).map_err(invalid)?;
    let variables = match &args.variables {
        Some(p) => read_variables(p).map_err(invalid)?,
        None => VariableSet::default_for(system),
    };
    let invalid_or_analysis = |e: relay_core::optimizer::OptimizerError| match e {
        relay_core::optimizer::OptimizerError::Glass(_) => analysis(e),
        _ => invalid(e),
    };
    let (result, report) = match args.method {
        Method::Local => {
            let mut settings = LocalSettings::default();
            if let Some(n) = args.max_iter {
                settings.max_iter = n;
            }
            let out = local_optimize(system, &operands, &variables, &settings)
                .map_err(invalid_or_analysis)?;
            println!("merit: {:.9e} -> {:.9e}", out.history[0], out.report.value);
            println!("iterations: {} ({:?})", out.iterations, out.stop);
            (out.system, out.report)
        }
        Method::Hammer => {
            let mut settings = HammerSettings {
                budget: args.budget,
                seed: args.seed,
                ..HammerSettings::default()
            };
            if let Some(n) = args.max_iter {
                settings.local.max_iter = n;
            }
            let out = hammer_optimize(system, &operands, &variables, catalog, &settings)
                .map_err(invalid_or_analysis)?;
            println!("merit: {:.9e} -> {:.9e}", out.start, out.report.value);
            if let Some(path) = &args.history {
                relay_core::io::report::history_table(&out.history)
                    .write_csv(path)
                    .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            }
            (out.system, out.report)
        }
    };
    for r in &report.operands {
        let value = r.value.map_or("failed".to_string(), |v| format!("{v:.9e}"));
        println!(
            "  {:<12} {value:>16}  {:6.2}%",
            r.operand.kind.to_string(),
            r.contribution_percent
        );
    }
    write_lens(&result, &args.out).map_err(|e| invalid(format!("{}: {e}", args.out.display())))?;
    println!("wrote {}", args.out.display());
    if report.failed {
        return Err(analysis("the optimized system fails an analysis"));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let catalog = load_catalog(cli.catalog.as_deref())?;
    let lens_path = match &cli.command {
        Command::Trace(a) => &a.lens,
        Command::Report { lens, .. } | Command::Analyze { lens, .. } => lens,
        Command::Image(a) => &a.lens,
        Command::Optimize(a) => &a.lens,
    };
    let system = read_lens(lens_path, &catalog).map_err(invalid)?;
    match &cli.command {
        Command::Trace(args) => trace(&system, args),
        Command::Report { out, .. } => {
            let artifacts =
                report_artifacts(&system, &ReportSettings::default()).map_err(analysis)?;
            let paths = write_artifacts(&artifacts, out).map_err(invalid)?;
            println!("wrote {} files to {}", paths.len(), out.display());
            Ok(())
        }
        Command::Analyze {
            kind, format, out, ..
        } => {
            let kind = match kind {
                AnalysisKind::Spot => Analysis::Spot,
                AnalysisKind::Mtf => Analysis::Mtf,
                AnalysisKind::Psf => Analysis::Psf,
                AnalysisKind::Opd => Analysis::Opd,
                AnalysisKind::Field => Analysis::Field,
                AnalysisKind::Seidel => Analysis::Seidel,
            };
            let artifacts =
                analysis_artifacts(&system, kind, &ReportSettings::default()).map_err(analysis)?;
            print_or_write(artifacts, *format, out.as_deref())
        }
        Command::Image(args) => {
            let source = read_pgm(&args.input).map_err(invalid)?;
            let mode = match args.mode {
                Mode::Geometric => SimulationMode::Geometric,
                Mode::Diffraction => SimulationMode::Diffraction,
            };
            let result = simulate_image(&system, &source, mode, args.size).map_err(analysis)?;
            write_pgm(&result.image, &args.out)
                .map_err(|e| invalid(format!("{}: {e}", args.out.display())))?;
            println!("efficiency: {:.2}%", result.efficiency);
            println!("wrote {}", args.out.display());
            Ok(())
        }
        Command::Optimize(args) => optimize(&system, &catalog, args),
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let level = if cli.verbose {
        log::LevelFilter::Debug
    } else {
        log::LevelFilter::Warn
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
