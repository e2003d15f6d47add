use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use topoforge::baselines::{median_u, run_benchmark, write_benchmark_csv, BenchmarkSettings, Method};
use topoforge::classifier::{
    classify, generate_until_accepted, warm_start_scan, DesignDatabase,
};
use topoforge::config::{Band, RunConfig};
use topoforge::export::{export, Artifact};
use topoforge::geometry::DesignVector;
use topoforge::pipeline::{
    classifier_spec, fit_scaling, generation_settings, obtain_scaling_model, optimize_start,
    run_full, RunReport,
};
use topoforge::simbackend::{backend_from_spec, CostModel, Fidelity, Simulator};
use topoforge::yieldmc::{
    estimate_yield_direct, estimate_yield_surrogate, Distribution, PerturbationSpec, YieldBand,
};

#[derive(Parser)]
#[command(name = "topoforge", version, about = "Surrogate-assisted free-form antenna synthesis")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    /// TOML run configuration; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Candidate database (JSON lines).
    #[arg(long, global = true, env = "TOPOFORGE_DB")]
    db: Option<PathBuf>,
    /// `mock` or `tabulated:<dir>`.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Target band in GHz, e.g. `5:6`.
    #[arg(long, global = true)]
    band: Option<Band>,
    /// Random seed (at most i64::MAX).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for reports and default database/model files.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Scaling model file.
    #[arg(long, global = true)]
    scaling_model: Option<PathBuf>,
    /// Classifier acceptance threshold in dB.
    #[arg(long, global = true, allow_negative_numbers = true)]
    e_t: Option<f64>,
    /// Level (dB) the optimizer drives the in-band response below.
    #[arg(long, global = true, allow_negative_numbers = true)]
    r_max: Option<f64>,
    /// In-band level (dB) a final design must meet.
    #[arg(long, global = true, allow_negative_numbers = true)]
    r_goal: Option<f64>,
    /// Reference patch size parameter in mm.
    #[arg(long, global = true)]
    c0: Option<f64>,
    /// Total budget in coarse-equivalent simulations.
    #[arg(long, global = true)]
    budget_coarse_eq: Option<f64>,
    /// Worker threads for simulations.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// More log output (-v: one line per simulation).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl GlobalArgs {
    fn config(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.db {
            cfg.database = Some(v.clone());
        }
        if let Some(v) = &self.backend {
            cfg.backend = v.clone();
        }
        if let Some(v) = self.band {
            cfg.band = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = &self.scaling_model {
            cfg.scaling_model = Some(v.clone());
        }
        if let Some(v) = self.e_t {
            cfg.e_t = v;
        }
        if let Some(v) = self.r_max {
            cfg.r_max = v;
        }
        if let Some(v) = self.r_goal {
            cfg.r_goal = v;
        }
        if let Some(v) = self.c0 {
            cfg.c0 = v;
        }
        if let Some(v) = self.budget_coarse_eq {
            cfg.budgets.total_coarse_eq = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fit the frequency-scaling model and store it.
    FitScaling {
        #[arg(long)]
        designs: Option<usize>,
        /// Scale values in mm, reference first (e.g. 30,25,45).
        #[arg(long, value_delimiter = ',')]
        c_values: Option<Vec<f64>>,
        /// Output file (default: the configured scaling model path).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw and classify random candidates until one is accepted.
    Generate {
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Classify stored candidates for the configured band.
    Classify {
        /// Only this record.
        #[arg(long)]
        record: Option<u64>,
        /// Show at most this many results.
        #[arg(long, default_value_t = 20)]
        top: usize,
    },
    /// Bi-stage optimization of a given design.
    Optimize {
        #[command(flatten)]
        design: DesignArg,
    },
    /// Manufacturing-yield estimate.
    Yield {
        #[command(flatten)]
        design: DesignArg,
        /// `gaussian:<stdev>`, `gaussian:<mean>:<stdev>` or `uniform:<max_dev>` (mm).
        #[arg(long, default_value = "gaussian:0.03")]
        dist: Distribution,
        /// Monte Carlo sample count.
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// `surrogate` scales the nominal curve; `direct` simulates every sample.
        #[arg(long, value_enum, default_value_t = YieldMethod::Surrogate)]
        method: YieldMethod,
        /// Model fidelity for the simulations.
        #[arg(long, value_enum, default_value_t = FidelityArg::Fine)]
        fidelity: FidelityArg,
    },
    /// Compare the flow against the reference methods.
    Benchmark {
        /// Comma-separated methods to compare.
        #[arg(long, value_delimiter = ',', default_value = "i,ii,iii,full")]
        methods: Vec<Method>,
        /// Number of consecutive seeds, starting at `--seed`.
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Per-run budget in fine-equivalent simulations.
        #[arg(long, default_value_t = 700.0)]
        budget_fine_eq: f64,
        /// CSV output (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Complete flow; exits with 0 iff the final design meets the specification.
    Run,
    /// Write artifacts of a finished run.
    Export {
        /// Report written by `run` (default: <output_dir>/report.json).
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        what: Artifact,
        #[arg(long)]
        out: PathBuf,
        /// Design id for table rows.
        #[arg(long, default_value = "x_f")]
        id: String,
    },
    /// Inspect or maintain the candidate database.
    Db {
        #[command(subcommand)]
        action: DbAction,
    },
}

#[derive(Args)]
struct DesignArg {
    /// Design vector as text, or `@file`.
    #[arg(long, conflicts_with_all = ["record", "report"])]
    design: Option<String>,
    /// Stored candidate (at its classifier scale for the configured band).
    #[arg(long, conflicts_with = "report")]
    record: Option<u64>,
    /// Final design of a run report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum YieldMethod {
    Surrogate,
    Direct,
}

#[derive(Clone, Copy, ValueEnum)]
enum FidelityArg {
    Coarse,
    Fine,
}

impl From<FidelityArg> for Fidelity {
    fn from(f: FidelityArg) -> Self {
        match f {
            FidelityArg::Coarse => Fidelity::Coarse,
            FidelityArg::Fine => Fidelity::Fine,
        }
    }
}

#[derive(Subcommand)]
enum DbAction {
    /// One line per stored candidate.
    List,
    /// Full record of one candidate.
    Show { id: u64 },
    /// Drop records that were never accepted for any band.
    Prune,
}

fn simulator(cfg: &RunConfig) -> anyhow::Result<Simulator> {
    Ok(Simulator::new(backend_from_spec(&cfg.backend)?, CostModel::default()))
}

fn open_db(cfg: &RunConfig) -> anyhow::Result<DesignDatabase> {
    let path = cfg.database_path();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(DesignDatabase::open(&path)?)
}

fn resolve_design(arg: &DesignArg, cfg: &RunConfig, sim: &Simulator) -> anyhow::Result<DesignVector> {
    if let Some(text) = &arg.design {
        let text = match text.strip_prefix('@') {
            Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
            None => text.clone(),
        };
        return Ok(text.parse()?);
    }
    if let Some(id) = arg.record {
        let db = open_db(cfg)?;
        let model = obtain_scaling_model(cfg, sim)?;
        let rec = db.get(id)?;
        let verdict = classify(rec, &model, &classifier_spec(cfg)?)?;
        return Ok(topoforge::geometry::scale_design(&rec.design, verdict.c_star));
    }
    if let Some(path) = &arg.report {
        return Ok(RunReport::load(path)?.fine_design()?);
    }
    bail!("give one of --design, --record or --report")
}

fn print_json<T: serde::Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<ExitCode> {
    let cfg = cli.global.config()?;
    if let Some(n) = cli.global.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let sim = simulator(&cfg)?;
    match cli.command {
        Command::FitScaling {
            designs,
            c_values,
            out,
        } => {
            let mut cfg = cfg;
            if let Some(n) = designs {
                cfg.scaling_designs = n;
            }
            if let Some(cs) = c_values {
                let c0 = *cs.first().context("--c-values is empty")?;
                cfg.c0 = c0;
                cfg.delta = cs.iter().map(|c| c - c0).collect();
            }
            cfg.validate()?;
            let model = fit_scaling(&cfg, &sim)?;
            let path = out.unwrap_or_else(|| cfg.scaling_model_path());
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            model.save(&path)?;
            println!(
                "beta = [{:e}, {}, {}] -> {} ({} coarse simulations)",
                model.beta[0],
                model.beta[1],
                model.beta[2],
                path.display(),
                sim.counts().n_coarse
            );
        }
        Command::Generate { budget } => {
            let model = obtain_scaling_model(&cfg, &sim)?;
            let mut db = open_db(&cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let acc = generate_until_accepted(
                &mut rng,
                &sim,
                &model,
                &classifier_spec(&cfg)?,
                budget.unwrap_or(cfg.budgets.max_candidates),
                &mut db,
                &generation_settings(&cfg),
            )?;
            println!(
                "accepted record {} after {} candidates: c* = {:.4} mm, U_q* = {:.3} dB",
                acc.record_id, acc.n_candidates, acc.verdict.c_star, acc.verdict.u_q
            );
            println!("{}", acc.x0);
        }
        Command::Classify { record, top } => {
            let model = obtain_scaling_model(&cfg, &sim)?;
            let db = open_db(&cfg)?;
            let spec = classifier_spec(&cfg)?;
            println!("record\taccepted\tc_star_mm\tu_q_db");
            match record {
                Some(id) => {
                    let v = classify(db.get(id)?, &model, &spec)?;
                    println!("{id}\t{}\t{:.4}\t{:.3}", v.accepted, v.c_star, v.u_q);
                }
                None => {
                    for r in warm_start_scan(&db, &model, &spec)?.iter().take(top) {
                        let v = r.verdict;
                        println!("{}\t{}\t{:.4}\t{:.3}", r.record_id, v.accepted, v.c_star, v.u_q);
                    }
                }
            }
        }
        Command::Optimize { design } => {
            let x = resolve_design(&design, &cfg, &sim)?;
            let before = sim.counts();
            let rep = optimize_start(&cfg, &sim, &x, None, cfg.budgets.total_coarse_eq)?;
            let used = sim.counts().since(&before);
            for s in &rep.stages {
                println!(
                    "{:<14} U {:>10.4} -> {:>10.4}  worst {:>7.2} dB  {:>3} iterations  {:?}",
                    s.name, s.u_start, s.u_end, s.worst_db, s.iterations, s.termination
                );
            }
            println!(
                "cost: {} coarse + {} fine = {:.2} fine-equivalent",
                used.n_coarse,
                used.n_fine,
                used.fine_equivalent(sim.costs())
            );
            println!("{}", rep.x_fine);
        }
        Command::Yield {
            design,
            dist,
            samples,
            method,
            fidelity,
        } => {
            let x = resolve_design(&design, &cfg, &sim)?;
            let spec = PerturbationSpec::new(dist, samples, cfg.seed);
            let band = YieldBand {
                f_low: cfg.band.f_low,
                f_high: cfg.band.f_high,
                r_goal: cfg.r_goal,
            };
            let est = match method {
                YieldMethod::Surrogate => estimate_yield_surrogate(
                    &sim,
                    &x,
                    &spec,
                    &band,
                    &cfg.grid,
                    fidelity.into(),
                    cfg.sigma,
                    None,
                )?,
                YieldMethod::Direct => {
                    estimate_yield_direct(&sim, &x, &spec, &band, &cfg.grid, fidelity.into())?
                }
            };
            println!(
                "yield {:.4} ({}/{} samples, {dist}), nominal margin {:.3} dB, {} simulations",
                est.y, est.n_satisfied, est.n_samples, est.u1_nominal, est.simulations
            );
        }
        Command::Benchmark {
            methods,
            seeds,
            budget_fine_eq,
            out,
        } => {
            let settings = BenchmarkSettings {
                methods: methods.clone(),
                seeds: (cfg.seed..cfg.seed + seeds).collect(),
                budget_fine_eq,
                ..BenchmarkSettings::default()
            };
            let rows = run_benchmark(&cfg, &sim, &settings)?.rows;
            match &out {
                Some(path) => {
                    let f = std::fs::File::create(path)
                        .with_context(|| format!("creating {}", path.display()))?;
                    write_benchmark_csv(&rows, f)?;
                }
                None => write_benchmark_csv(&rows, std::io::stdout())?,
            }
            for m in methods {
                if let Some(u) = median_u(&rows, m) {
                    eprintln!("method {:<4} median final U {u:.5}", m.label());
                }
            }
        }
        Command::Run => {
            let report = run_full(&cfg)?;
            println!(
                "in-band max {:.2} dB (goal {:.1} dB): {}",
                report.in_band_max_db,
                cfg.r_goal,
                if report.meets_goal { "met" } else { "missed" }
            );
            if let Some(b) = report.bandwidth {
                println!(
                    "achieved band {:.3}-{:.3} GHz, {:.3} GHz ({:.1}%)",
                    b.f_low, b.f_high, b.bw_ghz, b.bw_percent
                );
            }
            let c = report.costs.total;
            println!(
                "cost: {} coarse + {} fine = {:.2} fine-equivalent; report hash {}",
                c.n_coarse,
                c.n_fine,
                report.costs.fine_equivalent,
                report.hash()?
            );
            println!("{}", report.fine_design()?);
            return Ok(if report.meets_goal {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            });
        }
        Command::Export {
            report,
            what,
            out,
            id,
        } => {
            let path = report.unwrap_or_else(|| cfg.output_dir.join("report.json"));
            let report = RunReport::load(&path)?;
            for f in export(&report, what, &out, &id)? {
                println!("{}", f.display());
            }
        }
        Command::Db { action } => db_command(&cfg, action)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn db_command(cfg: &RunConfig, action: DbAction) -> anyhow::Result<()> {
    let path = cfg.database_path();
    if !Path::new(&path).exists() {
        bail!("no database at {}", path.display());
    }
    let mut db = DesignDatabase::open(&path)?;
    match action {
        DbAction::List => {
            println!("id\tseed\tgenerated_for\tc_mm\taccepted_for");
            for r in db.records() {
                let accepted: Vec<&str> = r
                    .verdicts
                    .iter()
                    .filter(|(_, v)| v.accepted)
                    .map(|(k, _)| k.as_str())
                    .collect();
                println!(
                    "{}\t{}\t{}\t{:.3}\t{}",
                    r.id,
                    r.seed,
                    r.generated_for,
                    r.design.c,
                    accepted.join(",")
                );
            }
        }
        DbAction::Show { id } => print_json(db.get(id)?)?,
        DbAction::Prune => {
            let removed = db.prune(|r| r.verdicts.values().any(|v| v.accepted))?;
            println!("removed {removed} records, {} left", db.len());
        }
    }
    Ok(())
}
