//! Command-line front end: chain validation, stationary distributions,
//! kernels, simulation, ensembles, moment tables, Dirichlet checks, exact
//! finite-n laws, plane histograms, and regime reports.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use ndarray::Array1;

use occulaw::cli::{
    self, config_hash, metadata_line, moment_row, parse_gammas, parse_pi, run_figure2,
    run_regime_report, ExperimentSpec, Figure2Params,
};
use occulaw::core::{burn_in_threshold, transition_kernel, ChainConfig, GeneratorMatrix};
use occulaw::error::{Error, Result};
use occulaw::moments::{dirichlet_moment, limit_moment, theta_generator, ThetaParams};
use occulaw::oracle::exact_occupation_law;
use occulaw::simulate::{ensemble_occupations, occupation_vector, simulate_path, switch_count};
use occulaw::spectral::stationary_distribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(name = "occulaw", version, about = "Occupation laws of time-nonhomogeneous Markov chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a generator matrix file
    Validate {
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Stationary distribution of a generator
    Stationary {
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One-step transition kernel at a given time
    Kernel {
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate one trajectory and report its occupation statistics
    Simulate {
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long, help = "comma list or 'uniform'")]
        pi: Option<String>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ensemble of replica occupation vectors, streamed as CSV
    Ensemble {
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long)]
        pi: Option<String>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Limit moments of the zeta = 1 occupation law
    Moments {
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, help = "semicolon list of comma lists, e.g. 2,0,0;1,1,0")]
        gamma: Option<String>,
        #[arg(long, help = "emit every gamma with total degree <= this instead")]
        max_degree: Option<u32>,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare theta-generator limit moments with Dirichlet closed forms
    DirichletCheck {
        #[arg(long, help = "comma list of positive weights")]
        theta: String,
        #[arg(long, default_value = "4")]
        max_degree: u32,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutputFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact finite-n marginal, occupation law, or moments
    Exact {
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        zeta: Option<f64>,
        #[arg(long)]
        pi: Option<String>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, help = "when given, emit exact moments for these gammas")]
        gamma: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Three-state ensemble histogram on the plane-mapped simplex
    Figure2 {
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        bins: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ensemble summaries across strength parameters with theoretical comparators
    RegimeReport {
        #[arg(long)]
        generator: Option<PathBuf>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, help = "comma list of strength parameters")]
        zeta: Option<String>,
        #[arg(long)]
        pi: Option<String>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        replicas: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    init_threads();
    let cli = Cli::parse();
    if let Err(err) = run(cli.command) {
        let report = serde_json::json!({
            "error": err.to_string(),
            "kind": err.kind(),
        });
        eprintln!("{report}");
        std::process::exit(1);
    }
}

fn init_threads() {
    if let Ok(value) = std::env::var("OCCULAW_THREADS") {
        if let Ok(threads) = value.parse::<usize>() {
            if threads >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
        }
    }
}

fn load_spec(path: &Option<PathBuf>) -> Result<ExperimentSpec> {
    match path {
        Some(p) => ExperimentSpec::from_file(p),
        None => Ok(ExperimentSpec::default()),
    }
}

fn load_generator(flag: &Option<PathBuf>, spec: &ExperimentSpec) -> Result<GeneratorMatrix> {
    let path = flag
        .clone()
        .or_else(|| spec.generator.as_ref().map(PathBuf::from))
        .ok_or_else(|| Error::Invalid("no generator file given (use --generator)".into()))?;
    GeneratorMatrix::from_json_file(&path)
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, content)?;
        }
        None => {
            print!("{content}");
            std::io::stdout().flush()?;
        }
    }
    Ok(())
}

fn matrix_json(m: &ndarray::Array2<f64>) -> serde_json::Value {
    let rows: Vec<Vec<f64>> = (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[[i, j]]).collect())
        .collect();
    serde_json::json!(rows)
}

fn matrix_csv(m: &ndarray::Array2<f64>, meta: &str) -> String {
    let mut s = format!("{meta}\n");
    s.push_str(
        &(1..=m.ncols())
            .map(|j| format!("col_{j}"))
            .collect::<Vec<_>>()
            .join(","),
    );
    s.push('\n');
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[[i, j]])).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate { generator, spec } => {
            let spec = load_spec(&spec)?;
            let g = load_generator(&generator, &spec)?;
            let report = serde_json::json!({
                "ok": true,
                "m": g.dim(),
                "max_abs_diagonal": g.max_abs_diagonal(),
            });
            println!("{report}");
            Ok(())
        }
        Command::Stationary {
            generator,
            spec,
            format,
            out,
        } => {
            let spec = load_spec(&spec)?;
            let g = load_generator(&generator, &spec)?;
            let nu = stationary_distribution(&g)?;
            let hash = config_hash(&serde_json::json!({"generator": g.to_json_string()}));
            let content = match format {
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&serde_json::json!({"nu": nu.to_vec()}))? + "\n"
                }
                OutputFormat::Csv => {
                    let mut s = format!("{}\n", metadata_line(0, &hash));
                    s.push_str("state,nu\n");
                    for (i, v) in nu.iter().enumerate() {
                        s.push_str(&format!("{},{v}\n", i + 1));
                    }
                    s
                }
            };
            emit(&out, &content)
        }
        Command::Kernel {
            generator,
            spec,
            zeta,
            n,
            format,
            out,
        } => {
            let spec = load_spec(&spec)?;
            let g = load_generator(&generator, &spec)?;
            let zeta = zeta.or(spec.zeta).unwrap_or(1.0);
            let n = n.or(spec.n).unwrap_or(1);
            let kernel = transition_kernel(&g, zeta, n);
            let hash = config_hash(&serde_json::json!({
                "generator": g.to_json_string(), "zeta": zeta, "n": n,
            }));
            let content = match format {
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&serde_json::json!({
                        "n": n,
                        "zeta": zeta,
                        "burn_in_threshold": burn_in_threshold(&g, zeta),
                        "kernel": matrix_json(kernel.entries()),
                    }))? + "\n"
                }
                OutputFormat::Csv => matrix_csv(kernel.entries(), &metadata_line(0, &hash)),
            };
            emit(&out, &content)
        }
        Command::Simulate {
            generator,
            spec,
            zeta,
            pi,
            n,
            seed,
            format,
            out,
        } => {
            let spec = load_spec(&spec)?;
            let g = load_generator(&generator, &spec)?;
            let zeta = zeta.or(spec.zeta).unwrap_or(1.0);
            let n = n.or(spec.n).unwrap_or(10_000);
            let seed = seed.or(spec.seed).unwrap_or(1);
            let pi_arg = pi.or(spec.pi.clone()).unwrap_or_else(|| "uniform".into());
            let pi = parse_pi(&pi_arg, g.dim())?;
            let config = ChainConfig::new(g.clone(), zeta, pi, n, seed)?;
            let t = simulate_path(&config);
            let z = occupation_vector(&t);
            let hash = config_hash(&serde_json::json!({
                "generator": g.to_json_string(), "zeta": zeta, "pi": pi_arg,
                "n": n, "seed": seed,
            }));
            let content = match format {
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&serde_json::json!({
                        "x0": t.x0 + 1,
                        "occupation": z.frequencies().to_vec(),
                        "switch_count": switch_count(&t),
                        "final_state": *t.states.last().unwrap() as usize + 1,
                    }))? + "\n"
                }
                OutputFormat::Csv => {
                    let mut s = format!("{}\n", metadata_line(seed, &hash));
                    s.push_str("step,state\n");
                    for (k, state) in t.states.iter().enumerate() {
                        s.push_str(&format!("{},{}\n", k + 1, *state as usize + 1));
                    }
                    s
                }
            };
            emit(&out, &content)
        }
        Command::Ensemble {
            generator,
            spec,
            zeta,
            pi,
            n,
            replicas,
            seed,
            out,
        } => {
            let spec = load_spec(&spec)?;
            let g = load_generator(&generator, &spec)?;
            let zeta = zeta.or(spec.zeta).unwrap_or(1.0);
            let n = n.or(spec.n).unwrap_or(10_000);
            let replicas = replicas.or(spec.replicas).unwrap_or(1000);
            let seed = seed.or(spec.seed).unwrap_or(1);
            let pi_arg = pi.or(spec.pi.clone()).unwrap_or_else(|| "uniform".into());
            let pi = parse_pi(&pi_arg, g.dim())?;
            let config = ChainConfig::new(g.clone(), zeta, pi, n, seed)?;
            let ensemble = ensemble_occupations(&config, replicas)?;
            let hash = config_hash(&serde_json::json!({
                "generator": g.to_json_string(), "zeta": zeta, "pi": pi_arg,
                "n": n, "replicas": replicas, "seed": seed,
            }));
            let mut buffer = Vec::new();
            cli::write_ensemble_csv(&mut buffer, &ensemble, seed, &hash)?;
            emit(&out, std::str::from_utf8(&buffer).expect("utf8 csv"))
        }
        Command::Moments {
            generator,
            spec,
            gamma,
            max_degree,
            format,
            out,
        } => {
            let spec = load_spec(&spec)?;
            let g = load_generator(&generator, &spec)?;
            let rows = if let Some(max_degree) = max_degree {
                cli::moment_table_through_degree(&g, max_degree)?
            } else {
                let arg = gamma
                    .or(spec.gamma.clone())
                    .ok_or_else(|| Error::Invalid("give --gamma or --max-degree".into()))?;
                let gammas = parse_gammas(&arg, g.dim())?;
                gammas
                    .iter()
                    .map(|gm| limit_moment(&g, gm).map(|mv| moment_row(&mv)))
                    .collect::<Result<Vec<_>>>()?
            };
            let hash = config_hash(&serde_json::json!({"generator": g.to_json_string()}));
            let content = match format {
                OutputFormat::Json => serde_json::to_string_pretty(&rows)? + "\n",
                OutputFormat::Csv => {
                    let mut buffer = Vec::new();
                    cli::write_moment_csv(&mut buffer, &rows, 0, &hash)?;
                    String::from_utf8(buffer).expect("utf8 csv")
                }
            };
            emit(&out, &content)
        }
        Command::DirichletCheck {
            theta,
            max_degree,
            format,
            out,
        } => {
            let weights: Vec<f64> = theta
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Invalid(format!("bad theta entry: {e}")))?;
            let params = ThetaParams::new(weights)?;
            let g = theta_generator(&params)?;
            let m = params.len();
            let mut rows = Vec::new();
            let mut max_err: f64 = 0.0;
            for gamma in cli::multi_indices_through_degree(m, max_degree) {
                let lhs = limit_moment(&g, &gamma)?.value;
                let rhs = dirichlet_moment(&params, &gamma)?;
                let err = (lhs - rhs).abs();
                max_err = max_err.max(err);
                rows.push(serde_json::json!({
                    "gamma": gamma.to_string().replace(',', ";"),
                    "permutation_formula": lhs,
                    "dirichlet_closed_form": rhs,
                    "abs_error": err,
                }));
            }
            let hash = config_hash(&serde_json::json!({"theta": theta, "max_degree": max_degree}));
            let content = match format {
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&serde_json::json!({
                        "max_abs_error": max_err,
                        "rows": rows,
                    }))? + "\n"
                }
                OutputFormat::Csv => {
                    let mut s = format!("{}\n", metadata_line(0, &hash));
                    s.push_str("gamma,permutation_formula,dirichlet_closed_form,abs_error\n");
                    for row in &rows {
                        s.push_str(&format!(
                            "{},{},{},{}\n",
                            row["gamma"].as_str().unwrap(),
                            row["permutation_formula"],
                            row["dirichlet_closed_form"],
                            row["abs_error"],
                        ));
                    }
                    s
                }
            };
            emit(&out, &content)
        }
        Command::Exact {
            generator,
            spec,
            zeta,
            pi,
            n,
            gamma,
            out,
        } => {
            let spec = load_spec(&spec)?;
            let g = load_generator(&generator, &spec)?;
            let zeta = zeta.or(spec.zeta).unwrap_or(1.0);
            let n = n.or(spec.n).unwrap_or(64);
            let pi_arg = pi.or(spec.pi.clone()).unwrap_or_else(|| "uniform".into());
            let pi = parse_pi(&pi_arg, g.dim())?;
            let hash = config_hash(&serde_json::json!({
                "generator": g.to_json_string(), "zeta": zeta, "pi": pi_arg, "n": n,
            }));
            let gamma_arg = gamma.or(spec.gamma.clone());
            if let Some(arg) = gamma_arg {
                let gammas = parse_gammas(&arg, g.dim())?;
                let law = exact_occupation_law(&g, zeta, &pi, n)?;
                let mut s = format!("{}\n", metadata_line(0, &hash));
                s.push_str("gamma,value,method\n");
                for gm in &gammas {
                    let v = law.moment(gm);
                    s.push_str(&format!("{},{v},exact_dp\n", gm.to_string().replace(',', ";")));
                }
                // marginal as a bonus row set would muddy the schema; left out
                emit(&out, &s)
            } else {
                let law = exact_occupation_law(&g, zeta, &pi, n)?;
                let mut buffer = Vec::new();
                cli::write_law_csv(&mut buffer, &law, 0, &hash)?;
                emit(&out, std::str::from_utf8(&buffer).expect("utf8 csv"))
            }
        }
        Command::Figure2 {
            generator,
            spec,
            n,
            replicas,
            seed,
            bins,
            out,
        } => {
            let spec = load_spec(&spec)?;
            let g = load_generator(&generator, &spec)?;
            let params = Figure2Params {
                replicas: replicas.or(spec.replicas).unwrap_or(1000),
                horizon: n.or(spec.n).unwrap_or(10_000),
                seed: seed.or(spec.seed).unwrap_or(1),
                bins: bins.or(spec.bins).unwrap_or(10),
                zeta: 1.0,
            };
            let histogram = run_figure2(&g, &params)?;
            let hash = config_hash(&serde_json::json!({
                "generator": g.to_json_string(), "n": params.horizon,
                "replicas": params.replicas, "seed": params.seed, "bins": params.bins,
            }));
            let mut buffer = Vec::new();
            cli::write_figure2_csv(&mut buffer, &histogram, params.seed, &hash)?;
            emit(&out, std::str::from_utf8(&buffer).expect("utf8 csv"))
        }
        Command::RegimeReport {
            generator,
            spec,
            zeta,
            pi,
            n,
            replicas,
            seed,
            out,
        } => {
            let spec = load_spec(&spec)?;
            let g = load_generator(&generator, &spec)?;
            let zetas: Vec<f64> = match zeta {
                Some(arg) => arg
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Invalid(format!("bad zeta entry: {e}")))?,
                None => spec.zetas.clone().unwrap_or_else(|| vec![0.3, 1.0, 1.5]),
            };
            let n = n.or(spec.n).unwrap_or(10_000);
            let replicas = replicas.or(spec.replicas).unwrap_or(500);
            let seed = seed.or(spec.seed).unwrap_or(1);
            let pi_arg = pi.or(spec.pi.clone()).unwrap_or_else(|| "uniform".into());
            let pi: Array1<f64> = parse_pi(&pi_arg, g.dim())?;
            let report = run_regime_report(&g, &zetas, &pi, n, replicas, seed)?;
            let content = serde_json::to_string_pretty(&report)? + "\n";
            emit(&out, &content)
        }
    }
}
