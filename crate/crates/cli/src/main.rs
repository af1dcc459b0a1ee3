//! `lifshitz`: Casimir-Lifshitz energies from the command line.

mod commands;
mod output;
mod selfcheck;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lifshitz::bodies::{BodyAssembly, DEFAULT_RESOLUTION};
use lifshitz::planar::SeriesScheme;
use lifshitz::roughsurf::HeightProfile;
use lifshitz::{DielectricModel, Error, QuadratureConfig};

use commands::{Context, KernelKind, RoughArgs};
use output::{exit_code, Format, Table};

const UNITS: &str = "hbar = c = omega_p = 1; H_over_lambda_p in plasma wavelengths 2 pi c/omega_p; \
other lengths in c/omega_p; energies per area in hbar omega_p (omega_p/c)^2, per body or cell in hbar omega_p";

#[derive(Parser)]
#[command(name = "lifshitz", version, about = "Casimir-Lifshitz energies from a dielectric-contrast expansion")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Medium 1: `oscillator:omega0=<x>[,gamma=<g>]` or `constant:eps=<x>`
    #[arg(long, global = true, default_value = "oscillator:omega0=1")]
    model: String,
    /// Medium 2 (defaults to --model)
    #[arg(long, global = true)]
    model2: Option<String>,
    /// Expansion parameter: raw contrast or Clausius-Mossotti
    #[arg(long, global = true, default_value = "cm")]
    scheme: String,
    /// Highest perturbative order (even, 2..=16)
    #[arg(long, global = true, default_value_t = 8)]
    max_order: usize,
    #[arg(long, global = true, default_value_t = 1e-9)]
    rel_tol: f64,
    #[arg(long, global = true, default_value_t = 1e-14)]
    abs_tol: f64,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
    /// Drop absolute energies and keep ratio columns
    #[arg(long, global = true)]
    report_ratio_only: bool,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact planar Lifshitz energy per area
    Exact {
        /// Separations in plasma wavelengths
        #[arg(long = "h", required = true, num_args = 1.., value_delimiter = ',')]
        h: Vec<f64>,
    },
    /// Order-by-order series, partial sums, ratios and verdict
    Series {
        /// Separations in plasma wavelengths
        #[arg(long = "h", required = true, num_args = 1.., value_delimiter = ',')]
        h: Vec<f64>,
    },
    /// Series over a grid of separations
    Sweep {
        /// Smallest separation in plasma wavelengths
        #[arg(long, default_value_t = 0.01)]
        h_min: f64,
        /// Largest separation in plasma wavelengths
        #[arg(long, default_value_t = 100.0)]
        h_max: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
        /// Linear instead of logarithmic spacing
        #[arg(long)]
        linear: bool,
    },
    /// Retarded Casimir-Polder energy of two constant polarizabilities
    Cp {
        #[arg(long)]
        alpha1: f64,
        #[arg(long)]
        alpha2: f64,
        /// Separations in c/omega_p
        #[arg(long = "r", required = true, num_args = 1.., value_delimiter = ',')]
        r: Vec<f64>,
    },
    /// Mixed-assignment interaction energies of a sphere assembly
    Bodies {
        /// File with lines `x,y,z,radius,model`
        #[arg(long)]
        config: PathBuf,
        /// Orders to evaluate (2 and/or 3)
        #[arg(long, num_args = 1.., value_delimiter = ',', default_value = "2")]
        order: Vec<usize>,
        /// Radial/angular nodes per sphere
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
    },
    /// Second-order energy of two corrugated half-spaces per periodic cell
    Rough {
        /// Mean separation in c/omega_p
        #[arg(long = "h", default_value_t = 1.0)]
        h: f64,
        /// Cell side in c/omega_p (grid profiles override)
        #[arg(long, default_value_t = 8.0)]
        side: f64,
        /// Samples per cell side (grid profiles override)
        #[arg(long, default_value_t = 32)]
        samples: usize,
        /// Lower surface: `flat[:offset=x]`, `sin:amplitude=a,nx=..,ny=..,phase=..` or `grid:<file>`
        #[arg(long, default_value = "flat")]
        h1: String,
        /// Upper surface, same syntax as --h1
        #[arg(long, default_value = "flat")]
        h2: String,
        /// Flat-limit consistency report instead of a profile calculation
        #[arg(long)]
        flat: bool,
    },
    /// Finite-temperature free energy against the zero-temperature energy
    Matsubara {
        /// Temperatures k_B T in units of hbar omega_p
        #[arg(long = "t", required = true, num_args = 1.., value_delimiter = ',')]
        t: Vec<f64>,
        /// Separation in plasma wavelengths
        #[arg(long = "h", default_value_t = 1.0)]
        h: f64,
        /// Largest Matsubara index
        #[arg(long, default_value_t = 1_000_000)]
        s_max: usize,
    },
    /// Dump kernel tensors
    Kernels {
        #[arg(long, value_enum, default_value = "a")]
        kind: KernelKind,
        #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
        zeta: Vec<f64>,
        /// Position (a, g) or wavevector (aq, k0inv) as `x,y,z`
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0,1")]
        at: Vec<f64>,
    },
    /// Run the built-in checks
    Selfcheck,
}

fn context(common: &Common) -> Result<Context, Error> {
    let model1: DielectricModel<f64> = common.model.parse()?;
    let model2 = match &common.model2 {
        Some(m) => m.parse()?,
        None => model1,
    };
    let scheme: SeriesScheme = common.scheme.parse()?;
    let cfg = QuadratureConfig::new(common.rel_tol, common.abs_tol, QuadratureConfig::<f64>::default().max_subdivisions)?;
    if common.max_order < 2 || common.max_order % 2 != 0 || common.max_order > lifshitz::MAX_ORDER {
        return Err(Error::Domain(format!("--max-order must be even and in 2..={}", lifshitz::MAX_ORDER)));
    }
    Ok(Context { model1, model2, scheme, max_order: common.max_order, cfg, ratio_only: common.report_ratio_only })
}

fn model_spec(m: &DielectricModel<f64>) -> String {
    match *m {
        DielectricModel::Vacuum => "vacuum".into(),
        DielectricModel::Constant { eps } => format!("constant:eps={eps}"),
        DielectricModel::Oscillator { omega_p, omega_0, gamma } => {
            format!("oscillator:omega0={},gamma={}", omega_0 / omega_p, gamma / omega_p)
        }
    }
}

fn header(table: &mut Table, ctx: &Context, planar: bool) {
    let mut meta = vec![
        ("program".to_string(), format!("lifshitz {}", env!("CARGO_PKG_VERSION"))),
        ("command".to_string(), std::env::args().skip(1).collect::<Vec<_>>().join(" ")),
        ("units".to_string(), UNITS.to_string()),
        ("model1".to_string(), model_spec(&ctx.model1)),
        ("model2".to_string(), model_spec(&ctx.model2)),
    ];
    if planar {
        meta.push(("scheme".to_string(), ctx.scheme.to_string()));
        meta.push(("max_order".to_string(), ctx.max_order.to_string()));
    }
    meta.push(("rel_tol".to_string(), format!("{:e}", ctx.cfg.rel_tol)));
    meta.push(("abs_tol".to_string(), format!("{:e}", ctx.cfg.abs_tol)));
    meta.append(&mut table.meta);
    table.meta = meta;
}

fn run(cli: Cli) -> Result<(Table, i32), Error> {
    let ctx = context(&cli.common)?;
    let (mut table, planar) = match cli.command {
        Command::Exact { h } => (commands::exact(&ctx, &h), false),
        Command::Series { h } => (commands::series(&ctx, &h), true),
        Command::Sweep { h_min, h_max, points, linear } => {
            let hs = commands::sweep_points(h_min, h_max, points, linear)?;
            (commands::series(&ctx, &hs), true)
        }
        Command::Cp { alpha1, alpha2, r } => (commands::cp(&ctx, alpha1, alpha2, &r), false),
        Command::Bodies { config, order, resolution } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Error::Input(format!("cannot read {}: {e}", config.display())))?;
            let assembly = BodyAssembly::parse_config(&text, resolution)?;
            (commands::bodies(&ctx, &assembly, &order), false)
        }
        Command::Rough { h, side, samples, h1, h2, flat } => {
            if flat {
                (commands::rough_flat(&ctx, h, side, samples), false)
            } else {
                let h1: HeightProfile<f64> = commands::parse_profile(&h1, side)?;
                let h2 = commands::parse_profile(&h2, side)?;
                (commands::rough(&ctx, &RoughArgs { separation: h, side, samples, h1, h2 }), false)
            }
        }
        Command::Matsubara { t, h, s_max } => (commands::matsubara(&ctx, h, &t, s_max), true),
        Command::Kernels { kind, zeta, at } => {
            let v = match at.as_slice() {
                [x, y, z] => [*x, *y, *z],
                _ => return Err(Error::Input("--at needs three components x,y,z".into())),
            };
            (commands::kernels(kind, &zeta, v), false)
        }
        Command::Selfcheck => {
            let (mut table, code) = selfcheck::run(&ctx.cfg);
            header(&mut table, &ctx, false);
            return Ok((table, code));
        }
    };
    header(&mut table, &ctx, planar);
    let code = table.exit_code();
    Ok((table, code))
}

fn emit(table: &Table, format: Format, out: Option<&PathBuf>) -> io::Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write(format, &mut w)?;
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table.write(format, &mut w)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let format = cli.common.format;
    let out = cli.common.out.clone();
    match run(cli) {
        Ok((table, code)) => {
            if let Err(e) = emit(&table, format, out.as_ref()) {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
