use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use detour_choice::config::{resolve_model, RunConfig};
use detour_choice::data::{load_dataset, summarize, write_dataset};
use detour_choice::mixed::DrawType;
use detour_choice::mpe::{mpe_table, parse_levels, Averaging, ChoiceModel, MpeTable};
use detour_choice::oracle::{generate, SyntheticConfig};
use detour_choice::pipeline::{self, exit_code, file_stem, fit_model, mpe_attributes};
use detour_choice::report::{render_estimates, render_report, result_from_csv, result_to_csv};
use detour_choice::spec::{reference, ModelSpec, ParameterVector};
use detour_choice::synthesis::{build_design_matrix, write_attribute_table};
use detour_choice::{Error, EstimationResult, Result};

/// Crowd-shipping detour mode choice: data summaries, attribute
/// reconstruction, logit and mixed-logit estimation, and marginal
/// probability effects.
#[derive(Parser)]
#[command(name = "detour-choice", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for simulation draws and synthetic data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "DETOUR_CHOICE_THREADS")]
    threads: Option<usize>,
    /// Directory for output files.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Log progress (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct SimArgs {
    /// Also fit the mixture with normally distributed time coefficients.
    #[arg(long)]
    mixture: bool,
    #[arg(long)]
    draws: Option<usize>,
    /// halton or random.
    #[arg(long)]
    draw_type: Option<DrawType>,
}

#[derive(Subcommand)]
enum Command {
    /// Detour-time statistics and trip-chain and frequency breakdowns.
    Describe {
        #[arg(long)]
        dataset: PathBuf,
        /// Pool genders instead of splitting by them.
        #[arg(long)]
        pooled: bool,
    },
    /// Reconstructed detour attributes for every observation and mode.
    Synthesize {
        #[arg(long)]
        dataset: PathBuf,
        /// Output CSV (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic dataset from known coefficients.
    Synth {
        /// Preset name or spec file.
        #[arg(long, default_value = "cost-time")]
        spec: String,
        /// CSV of `name,value`; defaults to the reference estimates for presets.
        #[arg(long)]
        true_params: Option<PathBuf>,
        #[arg(long, default_value_t = 249)]
        n: usize,
        /// Car ownership share.
        #[arg(long, default_value_t = 166.0 / 249.0)]
        car_rate: f64,
        /// Assign cars to exactly round(rate x n) rows.
        #[arg(long)]
        exact_car_count: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate a model.
    Fit {
        /// Preset name (cost-time, profit-time) or spec file.
        #[arg(long, default_value = "cost-time")]
        model: String,
        #[arg(long)]
        dataset: PathBuf,
        /// CSV for the final result (the mixture when fitted).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Marginal probability effects from a saved estimation result.
    Mpe {
        #[arg(long)]
        model_result: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Spec the result belongs to; inferred from the result's model name by default.
        #[arg(long)]
        model: Option<String>,
        #[arg(long, default_value = "-10,-5,-1,1,5,10", allow_hyphen_values = true)]
        levels: String,
        /// available_only or all_observations.
        #[arg(long)]
        averaging: Option<Averaging>,
        #[arg(long)]
        draws: Option<usize>,
        #[arg(long)]
        draw_type: Option<DrawType>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render saved estimation and MPE CSVs as a text report.
    Report {
        #[arg(long = "result", required = true)]
        results: Vec<PathBuf>,
        #[arg(long = "mpe")]
        mpe: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full pipeline into the output directory.
    Run {
        #[arg(long)]
        dataset: PathBuf,
        /// Preset or spec file; repeat for several (default: both presets).
        #[arg(long)]
        model: Vec<String>,
        #[command(flatten)]
        sim: SimArgs,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.simulation.seed = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.output_dir = d.clone();
    }
    Ok(cfg)
}

fn apply_sim(cfg: &mut RunConfig, sim: &SimArgs) -> Result<()> {
    cfg.mixture |= sim.mixture;
    if let Some(n) = sim.draws {
        cfg.simulation.draws = n;
    }
    if let Some(t) = sim.draw_type {
        cfg.simulation.draw_type = t;
    }
    cfg.validate()
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_file(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::io(path, e))
}

/// Spec a saved result was estimated with.
fn spec_for_result(r: &EstimationResult, model: Option<&str>) -> Result<ModelSpec> {
    let (base, mixed) = match model {
        Some(m) => (m, r.draws.is_some()),
        None => match r.model.strip_suffix("-mixture") {
            Some(b) => (b, true),
            None => (r.model.as_str(), false),
        },
    };
    let spec = resolve_model(base)?;
    Ok(if mixed && !spec.is_mixed() {
        spec.with_time_mixing()
    } else {
        spec
    })
}

fn execute(cli: &Cli) -> Result<()> {
    let mut cfg = load_config(cli)?;
    match &cli.command {
        Command::Describe { dataset, pooled } => {
            let d = load_dataset(dataset)?;
            let s = summarize(&d, !pooled);
            print!("{}", s.render_text());
            if let Some(dir) = &cli.out_dir {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                write_out(Some(&dir.join("summary.txt")), &s.render_text())?;
                write_out(Some(&dir.join("summary.csv")), &s.to_csv())?;
            }
        }
        Command::Synthesize { dataset, out } => {
            let d = load_dataset(dataset)?;
            let mut buf = Vec::new();
            write_attribute_table(&d, &cfg.network, &cfg.scaling, &mut buf)?;
            write_out(out.as_deref(), &String::from_utf8_lossy(&buf))?;
        }
        Command::Synth {
            spec,
            true_params,
            n,
            car_rate,
            exact_car_count,
            out,
        } => {
            let model = resolve_model(spec)?;
            let truth = match (true_params, spec.as_str()) {
                (Some(p), _) => ParameterVector::read_csv(read_file(p)?)?,
                (None, "cost-time") => reference::cost_time_mnl(),
                (None, "profit-time") => reference::profit_time_mnl(),
                (None, other) => {
                    return Err(Error::Argument(format!(
                        "--true-params is required for spec `{other}`"
                    )))
                }
            };
            let mut sc = SyntheticConfig::new(model, truth, *n, cli.seed.unwrap_or(1));
            sc.car_ownership_rate = *car_rate;
            sc.exact_car_count = *exact_car_count;
            sc.network = cfg.network.clone();
            sc.scaling = cfg.scaling;
            let sample = generate(&sc)?;
            let file = std::fs::File::create(out).map_err(|e| Error::io(out, e))?;
            write_dataset(&sample.dataset, file)?;
            eprintln!("wrote {} rows to {}", sample.dataset.len(), out.display());
            eprintln!("car available: {}", sample.car_available);
            for (m, c) in detour_choice::Mode::ALL.iter().zip(sample.chosen_counts) {
                eprintln!(
                    "  {:<20} chosen {:>6}  expected share {:.4}",
                    m.label(),
                    c,
                    sample.expected_shares[m.index()]
                );
            }
        }
        Command::Fit {
            model,
            dataset,
            out,
            sim,
        } => {
            apply_sim(&mut cfg, sim)?;
            let d = load_dataset(dataset)?;
            let f = fit_model(&d, &cfg, model, cfg.mixture)?;
            print!(
                "{}",
                render_estimates(&format!("Model: {}", f.spec.name), &f.results())
            );
            if let Some(dir) = &cli.out_dir {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
                for r in f.results() {
                    let p = dir.join(format!("estimates_{}.csv", file_stem(&r.model)));
                    write_out(Some(&p), &result_to_csv(r))?;
                }
            }
            if let Some(p) = out {
                let last = f.mixed.as_ref().unwrap_or(&f.mnl);
                write_out(Some(p), &result_to_csv(last))?;
            }
        }
        Command::Mpe {
            model_result,
            dataset,
            model,
            levels,
            averaging,
            draws,
            draw_type,
            out,
        } => {
            let r = result_from_csv(read_file(model_result)?)?;
            let spec = spec_for_result(&r, model.as_deref())?;
            if let Some(n) = draws.or(r.draws) {
                cfg.simulation.draws = n;
            }
            if let Some(t) = draw_type {
                cfg.simulation.draw_type = *t;
            }
            let d = load_dataset(dataset)?;
            let x = build_design_matrix(&d, &cfg.network, &cfg.scaling, &spec)?;
            let cm = ChoiceModel::from_result(&r, &spec, Some(&cfg.simulation), x.len())?;
            let levels = parse_levels(levels)?;
            let table = mpe_table(
                &x,
                &cm,
                &mpe_attributes(&spec),
                &levels,
                averaging.unwrap_or(cfg.averaging),
            )?;
            print!("{}", table.render_text());
            if let Some(p) = out {
                write_out(Some(p), &table.to_csv())?;
            }
        }
        Command::Report { results, mpe, out } => {
            let rs = results
                .iter()
                .map(|p| result_from_csv(read_file(p)?))
                .collect::<Result<Vec<_>>>()?;
            let tables = mpe
                .iter()
                .map(|p| MpeTable::from_csv(read_file(p)?))
                .collect::<Result<Vec<_>>>()?;
            let groups = vec![("Estimation results".to_string(), rs.iter().collect())];
            write_out(out.as_deref(), &render_report(&groups, &tables)?)?;
        }
        Command::Run { .. } => unreachable!("handled by run_pipeline"),
    }
    Ok(())
}

fn run_pipeline(cli: &Cli, dataset: &Path, models: &[String], sim: &SimArgs) -> ExitCode {
    let cfg = load_config(cli).and_then(|mut cfg| {
        if !models.is_empty() {
            cfg.models = models.to_vec();
        }
        apply_sim(&mut cfg, sim)?;
        Ok(cfg)
    });
    let cfg = match cfg {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    match pipeline::run(&cfg, dataset) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e.source) as u8)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    if let Command::Run {
        dataset,
        model,
        sim,
    } = &cli.command
    {
        return run_pipeline(&cli, dataset, model, sim);
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
