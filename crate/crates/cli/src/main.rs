use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aqc_core::io::csv::RecordWriter;
use aqc_core::{
    emit_plot, parse_config, read_records, run_ensemble, run_instance, slice_sweep, write_records, CouplingVector,
    Error, InstanceRecord, PlotKind, PlotSpec, Settings,
};
use clap::{Args, Parser, Subcommand};

/// Adiabatic quantum computation simulator.
#[derive(Debug, Parser)]
#[command(name = "aqc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one instance and print its record as key=value lines.
    Single {
        /// Qubit count.
        #[arg(long)]
        n: usize,
        /// Couplings J_1 .. J_{2^n - 1}, comma-separated or repeated.
        #[arg(long = "J", value_delimiter = ',', num_args = 1, allow_hyphen_values = true, required = true)]
        j: Vec<f64>,
        /// Computation time.
        #[arg(long = "T", allow_negative_numbers = true)]
        t: f64,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Run a sampled ensemble described by a config file and write CSV.
    Ensemble {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the two-qubit (J_1, J_2) grid at fixed J_3 and write CSV.
    Slice {
        #[arg(long, allow_negative_numbers = true)]
        j3: f64,
        /// Points per axis.
        #[arg(long, default_value_t = 101)]
        k: usize,
        /// Axis half-width.
        #[arg(long, default_value_t = 3.0)]
        a: f64,
        #[arg(long = "T", allow_negative_numbers = true)]
        t: f64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Render a CSV table as an SVG scatter plot or heatmap.
    Plot {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "min_gap")]
        x: String,
        #[arg(long, default_value = "P")]
        y: String,
        #[arg(long, default_value = "abs_J_top")]
        color: String,
        #[arg(long, default_value = "scatter")]
        kind: String,
        /// Keep only records with this computation time.
        #[arg(long = "T")]
        t: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        cmin: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        cmax: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct Tuning {
    #[arg(long, default_value_t = 1e-10)]
    ode_tol: f64,
    #[arg(long, default_value_t = 1001)]
    gap_grid: usize,
    #[arg(long, default_value_t = 501)]
    overlap_grid: usize,
    #[arg(long, default_value_t = 1e-9)]
    deg_tol: f64,
}

impl Tuning {
    fn settings(&self) -> Settings {
        Settings {
            ode_tol: self.ode_tol,
            gap_grid: self.gap_grid,
            overlap_grid: self.overlap_grid,
            deg_tol: self.deg_tol,
            ..Settings::default()
        }
    }
}

fn print_record(r: &InstanceRecord) {
    let j: Vec<String> = r.couplings.values().iter().map(f64::to_string).collect();
    println!("n={}", r.n());
    println!("J={}", j.join(","));
    println!("T={}", r.t);
    println!("min_gap={}", r.min_gap);
    println!("s_star={}", r.s_star);
    println!("P={}", r.success_prob);
    println!("delta_E={}", r.energy_error);
    println!("delta={}", r.avg_overlap);
    println!("abs_J_top={}", r.abs_j_top());
    println!("ground_dim={}", r.ground_subspace_dim);
    println!("norm_drift={}", r.max_norm_drift);
    println!("M={}", r.matrix_element_max);
    println!("criterion_bound={}", r.criterion_bound);
    println!("flags={}", r.flags);
}

fn ensemble(config: &Path, out: Option<PathBuf>) -> Result<(), Error> {
    let text = std::fs::read_to_string(config).map_err(|e| Error::Io(format!("{}: {e}", config.display())))?;
    let cfg = parse_config(&text)?;
    let output = out.unwrap_or(cfg.output);
    let mut writer =
        RecordWriter::create(&output).map_err(|e| Error::Io(format!("{}: {e}", output.display())))?;
    let summary = run_ensemble(&cfg.ensemble, |r| writer.write(&r))?;
    let rows = writer.finish()?;
    eprintln!(
        "wrote {rows} records to {} ({} failed integrations, {:.1}s)",
        output.display(),
        summary.failures,
        summary.wall_time.as_secs_f64()
    );
    if let Some((spec, path)) = cfg.plot {
        emit_plot(&read_records(&output)?, &spec, &path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Single { n, j, t, tuning } => {
            let cv = CouplingVector::from_nontrivial(n, &j)?;
            print_record(&run_instance(&cv, t, &tuning.settings())?);
        }
        Command::Ensemble { config, out } => ensemble(&config, out)?,
        Command::Slice { j3, k, a, t, out, tuning } => {
            let records = slice_sweep(j3, k, a, t, &tuning.settings())?;
            let rows = write_records(&records, &out).map_err(|e| Error::Io(format!("{}: {e}", out.display())))?;
            eprintln!("wrote {rows} records to {}", out.display());
        }
        Command::Plot { csv, x, y, color, kind, t, cmin, cmax, out } => {
            let kind: PlotKind = kind.parse()?;
            let mut records = read_records(&csv)?;
            if let Some(t) = t {
                records.retain(|r| r.t == t);
            }
            let spec = PlotSpec { kind, x, y, color, cmin, cmax };
            emit_plot(&records, &spec, &out)?;
            eprintln!("wrote {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
