//! `linnik`: experiments on primitive points of spheres, their orthogonal
//! lattices, class groups and Weyl sums.
//!
//! Exit status: 0 on success, 1 on a tool error (reported on stderr as one
//! JSON record), 2 when a checked claim fails.

mod commands;
mod config;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use linnik_core::arith::CongruenceFilter;

use config::{resolve_battery, RunConfig, ToolError};
use output::{write_table, Format};

#[derive(Parser, Debug)]
#[command(name = "linnik", version, about = "Sphere points, orthogonal lattices, class groups and Weyl sums")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct Common {
    /// Single D (overrides --dmin/--dmax)
    #[arg(long, global = true)]
    d: Option<u64>,
    #[arg(long, global = true, default_value_t = 1)]
    dmin: u64,
    #[arg(long, global = true, default_value_t = 100)]
    dmax: u64,
    /// Keep only D with D mod 8 not in {0, 4, 7}
    #[arg(long, global = true)]
    admissible: bool,
    /// Keep only D with -D a nonzero square modulo each listed odd prime
    #[arg(long, global = true, value_delimiter = ',')]
    split: Vec<u64>,
    #[arg(long, global = true)]
    squarefree: bool,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Spherical harmonic as "l,m"
    #[arg(long, global = true, allow_hyphen_values = true)]
    omega: Option<String>,
    /// Surface test function: one | cusp:T | rect:x0,x1,y0,y1 | bump:x,y,r
    #[arg(long, global = true, allow_hyphen_values = true)]
    phi: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Primitive points of S²(D): d,x,y,z
    Enumerate,
    /// Gram forms, reduced forms, Heegner points and grid points per vector
    Shapes,
    /// Sphere counts against class numbers: d,count,class_number,branch,pass
    GaussCheck,
    /// Reduced forms and composition table of a discriminant, or of the
    /// discriminants attached to the D range
    Classgroup {
        #[arg(long, allow_hyphen_values = true)]
        disc: Option<i64>,
    },
    /// Whether the sphere classes form a coset of the squares
    CosetCheck,
    /// Lattice point against reduced form root: d,x,y,z,residual,pass
    HeegnerCheck,
    /// Weyl sums over the D range: d,omega,phi,sum,count,normalized
    Weyl,
    /// Joint cap/box discrepancy per D, or dyadic trends with --kmin/--kmax
    Discrepancy {
        #[arg(long, requires = "kmax")]
        kmin: Option<u32>,
        #[arg(long, requires = "kmin")]
        kmax: Option<u32>,
    },
    /// Eisenstein coefficients against Weyl sums for n = 1..=dmax
    A1Check,
    /// Partial sums of the coefficients up to --x with growth fits
    Scan {
        #[arg(long, default_value_t = 100_000)]
        x: u64,
        /// Emit the partial-sum series instead of the fit summary
        #[arg(long)]
        series: bool,
    },
}

impl Command {
    fn uses_battery(&self) -> bool {
        matches!(self, Command::Weyl | Command::A1Check | Command::Scan { .. })
    }

    fn name(&self) -> &'static str {
        match self {
            Command::Enumerate => "enumerate",
            Command::Shapes => "shapes",
            Command::GaussCheck => "gauss-check",
            Command::Classgroup { .. } => "classgroup",
            Command::CosetCheck => "coset-check",
            Command::HeegnerCheck => "heegner-check",
            Command::Weyl => "weyl",
            Command::Discrepancy { .. } => "discrepancy",
            Command::A1Check => "a1-check",
            Command::Scan { .. } => "scan",
        }
    }
}

fn init_threads() -> Result<(), ToolError> {
    let Ok(raw) = std::env::var("LINNIK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| ToolError::config(format!("LINNIK_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| ToolError::config(e.to_string()))
}

fn run(cli: Cli) -> Result<bool, ToolError> {
    init_threads()?;
    let c = &cli.common;
    let (d_min, d_max) = c.d.map_or((c.dmin, c.dmax), |d| (d, d));
    let filter = CongruenceFilter::new(c.admissible, c.split.clone(), c.squarefree)
        .map_err(|e| ToolError::config(e.to_string()))?;
    let battery = resolve_battery(c.omega.as_deref(), c.phi.as_deref())?;
    let mut cfg = RunConfig {
        command: cli.command.name().to_string(),
        d_min,
        d_max,
        filter,
        battery: if cli.command.uses_battery() {
            battery.iter().map(|(o, p)| (o.id(), p.id())).collect()
        } else {
            Vec::new()
        },
        output_format: c.format,
        output_path: c.output.clone(),
        seed: c.seed,
        tolerance: c.tol,
    };
    cfg.validate()?;

    let mut extra = serde_json::Map::new();
    let outcome = match &cli.command {
        Command::Enumerate => commands::enumerate(&cfg)?,
        Command::Shapes => commands::shapes(&cfg)?,
        Command::GaussCheck => commands::gauss_check(&cfg)?,
        Command::Classgroup { disc } => {
            if let Some(x) = disc {
                extra.insert("disc".into(), (*x).into());
            }
            commands::classgroup(&cfg, *disc)?
        }
        Command::CosetCheck => commands::coset_check_cmd(&cfg)?,
        Command::HeegnerCheck => commands::heegner_check(&cfg)?,
        Command::Weyl => commands::weyl(&cfg, &battery)?,
        Command::Discrepancy { kmin, kmax } => {
            let k = kmin.zip(*kmax);
            if let Some((k0, k1)) = k {
                if k0 > k1 || k1 > 40 {
                    return Err(ToolError::config(format!("bad dyadic range {k0}..={k1}")));
                }
                extra.insert("kmin".into(), k0.into());
                extra.insert("kmax".into(), k1.into());
            }
            commands::discrepancy_cmd(&cfg, k)?
        }
        Command::A1Check => {
            cfg.d_min = 1;
            commands::a1_check(&cfg, &battery)?
        }
        Command::Scan { x, series } => {
            if *x < 100 {
                return Err(ToolError::config(format!("--x must be at least 100, got {x}")));
            }
            extra.insert("x".into(), (*x).into());
            extra.insert("series".into(), (*series).into());
            commands::scan(*x, *series, &battery)?
        }
    };

    let mut echo = cfg.echo();
    if let serde_json::Value::Object(m) = &mut echo {
        m.extend(extra);
    }
    let mut out: Box<dyn Write> = match &cfg.output_path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    write_table(&mut out, cfg.output_format, &cfg.command, &echo, &outcome.table)?;
    out.flush()?;
    Ok(outcome.claims_hold)
}

fn fail(err: &ToolError) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": err.kind, "message": err.message }));
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(&ToolError { kind: "invalid_arguments", message: e.to_string() }),
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => fail(&e),
    }
}
