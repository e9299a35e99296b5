use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qbattery_cli::commands::{self, Format, OracleCheckOptions, Output};
use qbattery_cli::sweep::{run_sweep, SweepSpec};
use qbattery_cli::{load_params, parse_grid, CmdResult, Failure, JtGrid, Overrides};

#[derive(Parser)]
#[command(
    name = "qbattery",
    version,
    about = "Two-photon-driven nonreciprocal quantum battery simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Config file with `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    epsilon: Option<f64>,
    /// Sets both local damping rates.
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    kappa_a: Option<f64>,
    #[arg(long)]
    kappa_b: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long = "x")]
    x_scale: Option<f64>,
    #[arg(long)]
    xi: Option<f64>,
}

impl ModelArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            epsilon: self.epsilon,
            kappa: self.kappa,
            kappa_a: self.kappa_a,
            kappa_b: self.kappa_b,
            gamma: self.gamma,
            theta: self.theta,
            delta: self.delta,
            x_scale: self.x_scale,
            xi: self.xi,
        }
    }
}

#[derive(Args)]
struct GridArgs {
    #[arg(long = "t-final-Jt", default_value_t = 20.0)]
    t_final_jt: f64,
    #[arg(long = "dt-Jt", default_value_t = 1e-3)]
    dt_jt: f64,
}

#[derive(Args)]
struct OutArgs {
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
    /// Also write an SVG plot here.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the moment equations and write the trajectory.
    Simulate {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Metric columns to plot with --svg.
        #[arg(long, value_delimiter = ',', default_value = "E_b,ergotropy,E_a")]
        plot: Vec<String>,
    },
    /// Steady state with printed-formula diagnostics (JSON).
    Steady {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep file and write a long-format CSV.
    Sweep {
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Plot the first requested output against Jt.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Compare with the single-photon baseline.
    CompareSinglePhoton {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Rank the (x, ξ) asymmetry grid by steady ergotropy.
    OptimizeAsymmetry {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value = "0.5:3:26")]
        x_grid: String,
        #[arg(long, default_value = "0.5:3:26")]
        xi_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the full landscape CSV here.
        #[arg(long)]
        landscape: Option<PathBuf>,
    },
    /// Validate the moment equations against the Fock-space master equation.
    OracleCheck {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long = "t-final-Jt", default_value_t = 20.0)]
        t_final_jt: f64,
        #[arg(long = "dt-Jt", default_value_t = 1e-2)]
        dt_jt: f64,
        #[arg(long)]
        n_cut: Option<usize>,
        #[arg(long)]
        no_autocutoff: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write(path: Option<&Path>, text: &str) -> CmdResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CmdResult<()> {
    let (output, out, svg, landscape) = match cli.command {
        Command::Simulate {
            model,
            grid,
            out,
            plot,
        } => {
            let p = load_params(model.config.as_deref(), &model.overrides())?;
            let g = JtGrid {
                t_final: grid.t_final_jt,
                dt: grid.dt_jt,
            };
            let plot = out.svg.is_some().then_some(plot.as_slice());
            (
                commands::simulate(&p, &g, out.format.into(), plot)?,
                out.out,
                out.svg,
                None,
            )
        }
        Command::Steady { model, out } => {
            let p = load_params(model.config.as_deref(), &model.overrides())?;
            (commands::steady(&p)?, out, None, None)
        }
        Command::Sweep { spec, out, svg } => {
            let text = std::fs::read_to_string(&spec)
                .map_err(|e| Failure::config(format!("cannot read {}: {e}", spec.display())))?;
            let table = run_sweep(&SweepSpec::parse(&text)?)?;
            for v in &table.diverged {
                eprintln!(
                    "warning: {} = {v} diverged; its rows stop early",
                    table.parameter
                );
            }
            let output = Output {
                body: table.to_csv(),
                svg: svg.is_some().then(|| table.plot(0).render()),
                ..Output::default()
            };
            (output, out, svg, None)
        }
        Command::CompareSinglePhoton { model, grid, out } => {
            let p = load_params(model.config.as_deref(), &model.overrides())?;
            let g = JtGrid {
                t_final: grid.t_final_jt,
                dt: grid.dt_jt,
            };
            let output =
                commands::compare_single_photon(&p, &g, out.format.into(), out.svg.is_some())?;
            (output, out.out, out.svg, None)
        }
        Command::OptimizeAsymmetry {
            model,
            x_grid,
            xi_grid,
            out,
            landscape,
        } => {
            let p = load_params(model.config.as_deref(), &model.overrides())?;
            (
                commands::optimize_asymmetry(&p, &parse_grid(&x_grid)?, &parse_grid(&xi_grid)?)?,
                out,
                None,
                landscape,
            )
        }
        Command::OracleCheck {
            model,
            t_final_jt,
            dt_jt,
            n_cut,
            no_autocutoff,
            out,
        } => {
            let p = load_params(model.config.as_deref(), &model.overrides())?;
            let g = JtGrid {
                t_final: t_final_jt,
                dt: dt_jt,
            };
            let opts = OracleCheckOptions {
                n_cut,
                autocutoff: !no_autocutoff,
                ..OracleCheckOptions::default()
            };
            (commands::oracle_check(&p, &g, &opts)?, out, None, None)
        }
    };
    write(out.as_deref(), &output.body)?;
    if let (Some(path), Some(text)) = (svg.as_deref(), &output.svg) {
        write(Some(path), text)?;
    }
    if let (Some(path), Some(text)) = (landscape.as_deref(), &output.landscape) {
        write(Some(path), text)?;
    }
    match output.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                qbattery_cli::EXIT_CONFIG
            } else {
                0
            };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code as u8)
        }
    }
}
