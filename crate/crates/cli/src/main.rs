use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use misspec_bandits::harness::{
    compute_stats, emit_outputs, growth_exponent, run_experiment, ExperimentConfig, HarnessError,
    Problem,
};
use misspec_bandits::linalg::{subset_count, FeatureMatrix, LinalgError, RewardInstance};
use misspec_bandits::regions::{
    ContextLayout, HalfspaceSystem, RegionError, RejectionSampler, RobustMembershipReport,
    RobustRegion,
};

/// Enumeration is exhaustive; larger problems are refused up front.
const MAX_SUBSETS: u128 = 1_000_000;
/// Target combinations printed by `regions` for contextual problems.
const MAX_COMBINATIONS: usize = 4096;

#[derive(Parser)]
#[command(name = "misspec", version, about = "Robust regions and regret simulation for misspecified linear bandits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every parameter region Θ_k and whether it is empty.
    Regions {
        features: PathBuf,
    },
    /// Test robust membership of a reward vector.
    Member(InstanceArgs),
    /// Rejection-sample reward vectors from a robust region.
    Sample {
        features: PathBuf,
        /// Target arm, 1-based; one per context, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        arm: Vec<usize>,
        /// Sampling box as `lo,hi`.
        #[arg(long = "box", value_delimiter = ',', num_args = 1, required = true, allow_hyphen_values = true)]
        bounds: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short = 'n', default_value_t = 1)]
        count: usize,
        /// Sample from the ridge-regularized region with this λ.
        #[arg(long)]
        ridge: Option<f64>,
        /// Also write the candidate cloud to DIR/region_points.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a simulation experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Base seed, overriding the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print ρ, gaps, margin and membership of a reward vector.
    Stats(InstanceArgs),
}

#[derive(Args)]
struct InstanceArgs {
    features: PathBuf,
    /// Rewards, comma separated or a JSON array.
    #[arg(allow_hyphen_values = true)]
    mu: String,
    /// Use the ridge-regularized region with this λ.
    #[arg(long)]
    ridge: Option<f64>,
    /// Use the context block of the feature file.
    #[arg(long)]
    contextual: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let code = match &e {
            HarnessError::Config(_) => 2,
            HarnessError::Region(r) => region_code(r),
            HarnessError::NotRobust(_) => 3,
            HarnessError::Agent(_)
            | HarnessError::Env(_)
            | HarnessError::Io(_)
            | HarnessError::InsufficientData(_) => 4,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<RegionError> for Failure {
    fn from(e: RegionError) -> Self {
        HarnessError::from(e).into()
    }
}

impl From<LinalgError> for Failure {
    fn from(e: LinalgError) -> Self {
        HarnessError::from(e).into()
    }
}

fn region_code(e: &RegionError) -> u8 {
    match e {
        RegionError::InvalidInstance(_) | RegionError::ArmOutOfRange { .. } => 2,
        RegionError::Linalg(
            LinalgError::InvalidFeatures(_)
            | LinalgError::InvalidRewards(_)
            | LinalgError::InvalidRidge(_)
            | LinalgError::DimensionMismatch { .. },
        ) => 2,
        _ => 3,
    }
}

fn config_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn parse_mu(text: &str) -> Result<Vec<f64>, Failure> {
    let text = text.trim();
    if text.starts_with('[') {
        return serde_json::from_str(text).map_err(|e| config_error(format!("rewards: {e}")));
    }
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| config_error(format!("rewards: cannot parse {v:?}")))
        })
        .collect()
}

fn check_enumeration(features: &FeatureMatrix) -> Result<(), Failure> {
    let (k, d) = (features.num_arms(), features.dim());
    let n = subset_count(k, d);
    if n > MAX_SUBSETS {
        return Err(config_error(format!(
            "C({k}, {d}) = {n} row subsets exceeds the enumeration limit of {MAX_SUBSETS}"
        )));
    }
    Ok(())
}

fn load_problem(path: &Path, contextual: bool) -> Result<Problem, Failure> {
    let problem = Problem::load(path, None)?;
    let problem = if contextual {
        if !problem.is_contextual() {
            return Err(config_error(format!(
                "{} has no contextual block with more than one context",
                path.display()
            )));
        }
        problem
    } else {
        Problem {
            layout: ContextLayout::bandit(problem.features.num_arms()),
            context_probs: vec![1.0],
            features: problem.features,
        }
    };
    check_enumeration(&problem.features)?;
    Ok(problem)
}

fn load_instance(problem: &Problem, mu: &str) -> Result<RewardInstance, Failure> {
    let mu = parse_mu(mu)?;
    if mu.len() != problem.layout.total() {
        return Err(config_error(format!(
            "{} rewards for {} feature rows",
            mu.len(),
            problem.layout.total()
        )));
    }
    RewardInstance::new(mu).map_err(|e| config_error(e.to_string()))
}

fn print_system(system: &HalfspaceSystem) {
    for line in system.to_string().lines() {
        println!("  {line}");
    }
}

fn regions(path: &Path) -> Result<(), Failure> {
    let problem = Problem::load(path, None)?;
    let layout = problem.layout;
    let mut per_context = Vec::with_capacity(layout.num_contexts);
    for x in 0..layout.num_contexts {
        let block: Vec<&[f64]> = layout.rows(x).map(|r| problem.features.row(r)).collect();
        let block = FeatureMatrix::new(&block)?;
        let mut systems = Vec::with_capacity(layout.num_arms);
        for k in 0..layout.num_arms {
            let system = misspec_bandits::regions::param_region(&block, k)?;
            println!("region context={} arm={} empty={}", x + 1, k + 1, system.is_empty());
            print_system(&system);
            systems.push(system);
        }
        per_context.push(systems);
    }
    if layout.num_contexts < 2 {
        return Ok(());
    }
    let combinations = (layout.num_arms as f64).powi(layout.num_contexts as i32);
    if combinations > MAX_COMBINATIONS as f64 {
        log::warn!("skipping {combinations} cross-context intersections");
        return Ok(());
    }
    let mut arms = vec![0usize; layout.num_contexts];
    loop {
        let parts: Vec<HalfspaceSystem> = arms
            .iter()
            .enumerate()
            .map(|(x, &k)| per_context[x][k].clone())
            .collect();
        let system = HalfspaceSystem::intersect(&parts);
        let label: Vec<String> = arms.iter().map(|k| (k + 1).to_string()).collect();
        println!("intersection arms={} empty={}", label.join(","), system.is_empty());
        print_system(&system);
        // Odometer over target tuples, last context fastest.
        let mut x = layout.num_contexts;
        loop {
            if x == 0 {
                return Ok(());
            }
            x -= 1;
            arms[x] += 1;
            if arms[x] < layout.num_arms {
                break;
            }
            arms[x] = 0;
        }
    }
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn print_report(report: &RobustMembershipReport) {
    let arms: Vec<String> = report.optimal_arms.iter().map(|k| (k + 1).to_string()).collect();
    println!("member={}", report.is_member);
    println!("optimal_arms={}", arms.join(","));
    println!("margin={}", report.margin);
    println!("boundary_warning={}", report.boundary_warning);
    println!("empty_region={}", report.empty_region);
    println!("violations={}", report.violating_subsets.len());
    for v in &report.violating_subsets {
        let subset: Vec<String> = v.subset.iter().map(|i| (i + 1).to_string()).collect();
        println!(
            "violation subset={} theta={} context={} arm={}",
            subset.join(","),
            fmt_vec(&v.theta),
            v.context + 1,
            v.arm + 1
        );
    }
}

fn region_for(problem: &Problem, targets: &[usize], ridge: Option<f64>) -> Result<RobustRegion, Failure> {
    match ridge {
        Some(_) if problem.is_contextual() => Err(config_error(
            "--ridge applies to single-context bandits only",
        )),
        Some(lambda) => Ok(RobustRegion::ridge(&problem.features, targets[0], lambda)?),
        None => Ok(RobustRegion::new(&problem.features, problem.layout, targets)?),
    }
}

fn member(args: &InstanceArgs) -> Result<(), Failure> {
    let problem = load_problem(&args.features, args.contextual)?;
    let mu = load_instance(&problem, &args.mu)?;
    let targets = problem.layout.optimal_arms(mu.values())?;
    let report = region_for(&problem, &targets, args.ridge)?.report(mu.values())?;
    print_report(&report);
    if report.is_member {
        Ok(())
    } else {
        Err(Failure {
            code: 3,
            message: "instance is not a robust member".into(),
        })
    }
}

fn stats(args: &InstanceArgs) -> Result<(), Failure> {
    let problem = load_problem(&args.features, args.contextual)?;
    let mu = load_instance(&problem, &args.mu)?;
    if args.ridge.is_some() && problem.is_contextual() {
        return Err(config_error("--ridge applies to single-context bandits only"));
    }
    let s = compute_stats(&problem.features, &mu, problem.layout, args.ridge)?;
    println!("rho={}", s.rho);
    println!("delta_min={}", s.delta_min);
    println!("delta_max={}", s.delta_max);
    println!("margin={}", s.margin);
    match s.model_gap {
        Some(g) => println!("model_gap={g}"),
        None => println!("model_gap=none"),
    }
    println!("member={}", s.member);
    println!("boundary_warning={}", s.boundary_warning);
    Ok(())
}

fn sample(
    path: &Path,
    arms: &[usize],
    bounds: &[f64],
    seed: u64,
    count: usize,
    ridge: Option<f64>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let problem = Problem::load(path, None)?;
    check_enumeration(&problem.features)?;
    if bounds.len() != 2 {
        return Err(config_error("--box takes exactly two values lo,hi"));
    }
    if arms.len() != problem.layout.num_contexts {
        return Err(config_error(format!(
            "{} arms given for {} contexts",
            arms.len(),
            problem.layout.num_contexts
        )));
    }
    if arms.iter().any(|&a| a == 0 || a > problem.layout.num_arms) {
        return Err(config_error(format!(
            "arms are 1-based and at most {}",
            problem.layout.num_arms
        )));
    }
    let targets: Vec<usize> = arms.iter().map(|a| a - 1).collect();
    let region = region_for(&problem, &targets, ridge)?;
    let mut sampler = RejectionSampler::new(&region, bounds[0], bounds[1], seed)?;
    if out.is_some() {
        sampler = sampler.record_points(usize::MAX);
    }
    for _ in 0..count {
        let mu = sampler.next_instance()?;
        println!("{}", fmt_vec(mu.values()));
    }
    info!(
        "{} draws, acceptance rate {:.4}",
        sampler.draws(),
        sampler.acceptance_rate()
    );
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(HarnessError::from)?;
        let mut csv = String::new();
        for p in sampler.points() {
            csv.push_str(&fmt_vec(&p.mu));
            csv.push_str(if p.accepted { ",true\n" } else { ",false\n" });
        }
        let target = dir.join("region_points.csv");
        let header: Vec<String> = (0..problem.layout.total()).map(|i| format!("mu_{i}")).collect();
        std::fs::write(&target, format!("{},accepted\n{csv}", header.join(",")))
            .map_err(HarnessError::from)?;
        info!("wrote {}", target.display());
    }
    Ok(())
}

fn run(
    path: &Path,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<(), Failure> {
    let mut config = ExperimentConfig::from_file(path)?;
    if let Some(dir) = out {
        config.output_dir = dir;
    }
    if let Some(s) = seed {
        config.base_seed = s;
    }
    if jobs == Some(0) {
        return Err(config_error("--jobs must be at least 1"));
    }
    check_enumeration(&config.problem()?.features)?;

    let outcome = run_experiment(&config, jobs)?;
    let written = emit_outputs(&config.output_dir, &config, &outcome)?;
    for p in &written {
        info!("wrote {}", p.display());
    }

    let trace = &outcome.trace;
    let t = trace.rounds();
    let n = outcome.trials.len() as f64;
    let sub = outcome.trials.iter().map(|s| s.suboptimal_plays as f64).sum::<f64>() / n;
    println!("{:<22}{}", "algorithm", config.algorithm.name());
    println!("{:<22}{}", "horizon", t);
    println!("{:<22}{}", "trials", trace.num_trials());
    println!("{:<22}{}", "mu", fmt_vec(outcome.mu.values()));
    println!("{:<22}{}", "rho", outcome.stats.rho);
    println!("{:<22}{}", "delta_min", outcome.stats.delta_min);
    println!("{:<22}{}", "delta_max", outcome.stats.delta_max);
    println!("{:<22}{}", "member", outcome.stats.member);
    println!("{:<22}{}", "margin", outcome.stats.margin);
    println!(
        "{:<22}{} ± {}",
        "final_regret",
        trace.final_mean(),
        trace.std()[t - 1]
    );
    println!("{:<22}{}", "mean_suboptimal_plays", sub);
    match growth_exponent(trace, 0.5) {
        Ok(g) => println!("{:<22}{g:.4}", "growth_exponent"),
        Err(_) => println!("{:<22}n/a", "growth_exponent"),
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Regions { features } => regions(&features),
        Command::Member(args) => member(&args),
        Command::Stats(args) => stats(&args),
        Command::Sample {
            features,
            arm,
            bounds,
            seed,
            count,
            ridge,
            out,
        } => sample(&features, &arm, &bounds, seed, count, ridge, out.as_deref()),
        Command::Run {
            config,
            jobs,
            out,
            seed,
        } => run(&config, jobs, out, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
