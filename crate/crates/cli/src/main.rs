use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use lamina_core::cohomology::{hirz_classify, torus_report, HermitianClass};
use lamina_core::density::{decay_curve, lelong, DecayOptions};
use lamina_core::scenarios::{
    ahlfors_ratios, builtin_scenarios, decay_region, find_scenario, parse_config, run, OutputFormat, RunConfig,
};
use lamina_core::C64;

#[derive(Parser)]
#[command(name = "lab", version, about = "Foliated cycle laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario end to end and write its CSV/JSON outputs.
    Run(RunArgs),
    /// Inspect the built-in scenarios.
    Scenario {
        #[command(subcommand)]
        command: ScenarioCommand,
    },
    /// Print the decay table `M(λ)` of a scenario as CSV.
    Decay {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_delimiter = ',', required = true)]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = 65536)]
        samples: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        quad_order: usize,
    },
    /// Ball-mass ratios and Lelong number at the origin.
    Lelong {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 16)]
        quad_order: usize,
    },
    /// Intersection arithmetic on model cohomology rings.
    Cohomology {
        #[command(subcommand)]
        command: CohomologyCommand,
    },
    /// Length/area ratios of the linear disc `ζ ↦ ζv`.
    Ahlfors {
        /// Direction as re,im,re,im,...
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        v: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// JSON configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    quad_order: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    lambda_grid: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = ["csv", "json"])]
    format: Option<String>,
}

#[derive(Subcommand)]
enum ScenarioCommand {
    List,
}

#[derive(Subcommand)]
enum CohomologyCommand {
    /// Classify a class aF + bC on the Hirzebruch surface Σ_n.
    Hirzebruch {
        #[arg(long)]
        n: u32,
        /// Coefficients a,b.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, num_args = 1)]
        probe: Vec<f64>,
    },
    /// Positivity and rank of a Hermitian (1,1)-class on a torus.
    Torus {
        /// JSON file holding rows of numbers or [re, im] pairs.
        #[arg(long)]
        matrix: PathBuf,
    },
}

type CliResult = Result<ExitCode, String>;

fn print_json(v: &impl serde::Serialize) -> CliResult {
    println!("{}", serde_json::to_string_pretty(v).map_err(|e| e.to_string())?);
    Ok(ExitCode::SUCCESS)
}

fn run_command(args: RunArgs) -> CliResult {
    let mut cfg = match (&args.config, &args.scenario) {
        (Some(path), _) => parse_config(path).map_err(|e| e.to_string())?,
        (None, Some(name)) => RunConfig::new(name.clone()),
        (None, None) => return Err("either --config or --scenario is required".into()),
    };
    if let Some(s) = args.scenario {
        cfg.scenario = s;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = args.samples {
        cfg.samples = s;
    }
    if let Some(q) = args.quad_order {
        cfg.quad_order = q;
    }
    if let Some(g) = args.lambda_grid {
        cfg.lambda_grid = g;
    }
    if let Some(o) = args.out {
        cfg.out = o;
    }
    if let Some(f) = args.format {
        cfg.format = if f == "json" { OutputFormat::Json } else { OutputFormat::Csv };
    }
    let (report, written) = run(&cfg).map_err(|e| e.to_string())?;
    let summary = json!({
        "scenario": report.scenario.name,
        "status": report.status,
        "assertions": report.assertions,
        "written": written,
    });
    println!("{}", serde_json::to_string_pretty(&summary).map_err(|e| e.to_string())?);
    Ok(ExitCode::from(report.status.exit_code() as u8))
}

fn parse_matrix(path: &PathBuf) -> Result<HermitianClass, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let rows = value.as_array().ok_or("matrix must be a JSON array of rows")?;
    let entry = |v: &Value| -> Result<C64, String> {
        match v {
            Value::Number(x) => Ok(C64::new(x.as_f64().unwrap_or(f64::NAN), 0.0)),
            Value::Array(p) if p.len() == 2 => match (p[0].as_f64(), p[1].as_f64()) {
                (Some(re), Some(im)) => Ok(C64::new(re, im)),
                _ => Err(format!("bad entry {v}")),
            },
            _ => Err(format!("bad entry {v}: expected a number or [re, im]")),
        }
    };
    let parsed = rows
        .iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| format!("row {r} is not an array"))?
                .iter()
                .map(entry)
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    HermitianClass::from_rows(&parsed).map_err(|e| e.to_string())
}

fn dispatch(cli: Cli) -> CliResult {
    match cli.command {
        Command::Run(args) => run_command(args),
        Command::Scenario {
            command: ScenarioCommand::List,
        } => print_json(&builtin_scenarios()),
        Command::Decay {
            scenario,
            lambda,
            samples,
            seed,
            quad_order,
        } => {
            let spec = find_scenario(&scenario).map_err(|e| e.to_string())?;
            let t = spec.cycle(quad_order).map_err(|e| e.to_string())?;
            let region = decay_region(&spec).map_err(|e| e.to_string())?;
            let opts = DecayOptions {
                samples,
                seed,
                ..DecayOptions::default()
            };
            let rep = decay_curve(&t, &region, &lambda, &opts).map_err(|e| e.to_string())?;
            print!("{}", rep.to_csv());
            Ok(ExitCode::SUCCESS)
        }
        Command::Lelong {
            scenario,
            radii,
            quad_order,
        } => {
            let spec = find_scenario(&scenario).map_err(|e| e.to_string())?;
            let t = spec.cycle(quad_order).map_err(|e| e.to_string())?;
            let origin = vec![C64::new(0.0, 0.0); spec.n];
            print_json(&lelong(&t, &origin, &radii, quad_order).map_err(|e| e.to_string())?)
        }
        Command::Cohomology { command } => match command {
            CohomologyCommand::Hirzebruch { n, probe } => {
                let [a, b] = probe[..] else {
                    return Err(format!("--probe takes two numbers a,b, got {probe:?}"));
                };
                print_json(&hirz_classify(n, a, b).map_err(|e| e.to_string())?)
            }
            CohomologyCommand::Torus { matrix } => print_json(&torus_report(&parse_matrix(&matrix)?).map_err(|e| e.to_string())?),
        },
        Command::Ahlfors { v, radii } => {
            if v.is_empty() || v.len() % 2 != 0 {
                return Err("--v takes an even number of reals re,im,...".into());
            }
            let v: Vec<C64> = v.chunks(2).map(|c| C64::new(c[0], c[1])).collect();
            print_json(&ahlfors_ratios(&v, &radii).map_err(|e| e.to_string())?)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
