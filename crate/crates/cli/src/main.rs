//! `survnet`: generate, train, predict, evaluate, tune and benchmark
//! survival models from the command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use survnet::config::Config;
use survnet::data::{generate, load_csv, load_risk_csv, save_csv, save_risk_csv, write_atomic, Dataset, RiskKind};
use survnet::harness::{
    apply_overrides, builtin_method, default_coxnet_space, default_nn_space, run_protocol, split_dataset,
    summary_table, train_coxnet, train_network, tune_method, CoxnetMethod, NnMethod, ProtocolOptions,
};
use survnet::model_io::Pipeline;
use survnet::nn::Activation;
use survnet::survival::{concordance_index, SurvivalLabels};
use survnet::SurvError;

#[derive(Parser)]
#[command(name = "survnet", version, about = "Deep and penalized Cox survival models")]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic censored dataset.
    Gen(GenArgs),
    /// Fit one model and save it.
    Train(TrainArgs),
    /// Score a dataset with a saved model.
    Predict(PredictArgs),
    /// Concordance index of a risk file against a dataset.
    Eval(EvalArgs),
    /// Tune one method's hyperparameters on a train/validation split.
    Tune(TuneArgs),
    /// Run the permutation protocol for several methods.
    Benchmark(BenchmarkArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    #[value(name = "nn-sigmoid")]
    NnSigmoid,
    #[value(name = "nn-relu")]
    NnRelu,
    Coxnet,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::NnSigmoid => "nn-sigmoid",
            Kind::NnRelu => "nn-relu",
            Kind::Coxnet => "coxnet",
        }
    }

    fn activation(self) -> Option<Activation> {
        match self {
            Kind::NnSigmoid => Some(Activation::Sigmoid),
            Kind::NnRelu => Some(Activation::Relu),
            Kind::Coxnet => None,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Part {
    All,
    Train,
    Validation,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum RiskArg {
    Linear,
    Nonlinear,
}

#[derive(Args)]
struct DataArgs {
    /// Dataset CSV; defaults to `[data] path` in the config.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Config file; settings not given keep their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long, value_enum)]
    risk_kind: Option<RiskArg>,
    #[arg(long)]
    sparsity: Option<usize>,
    #[arg(long)]
    censoring_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    signal_scale: Option<f64>,
    /// Output dataset CSV.
    #[arg(long)]
    out: PathBuf,
    /// Output `id,true_risk` file.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: DataArgs,
    #[arg(long, value_enum)]
    kind: Kind,
    /// Train on this split's train rows (networks select epochs on its
    /// validation rows and are seeded with it). Without it all rows train.
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Training log; defaults to `<out>.log`.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    split_seed: Option<u64>,
    /// Rows to score; anything but `all` needs `--split-seed`.
    #[arg(long, value_enum, default_value = "all")]
    part: Part,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    risk: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    input: DataArgs,
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    init_trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    split_seed: u64,
    /// Config file with the best parameters filled in.
    #[arg(long)]
    out: PathBuf,
    /// Trial log, resumed if it exists; defaults to `<out>.trials.log`.
    #[arg(long)]
    trials: Option<PathBuf>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[command(flatten)]
    input: DataArgs,
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Vec<Kind>,
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    init_trials: Option<usize>,
    /// Run directory.
    #[arg(long)]
    out_dir: PathBuf,
}

enum Failure {
    Usage(String),
    Surv(SurvError),
}

impl From<SurvError> for Failure {
    fn from(e: SurvError) -> Self {
        Failure::Surv(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Surv(e.into())
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Surv(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}

fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Eval(a) => eval(a),
        Command::Tune(a) => tune(a),
        Command::Benchmark(a) => benchmark(a),
    }
}

fn load_config(path: Option<&Path>) -> CliResult<Config> {
    Ok(match path {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    })
}

/// Loads the config and the dataset it or the flags point at. A relative
/// `[data] path` is taken relative to the config file.
fn load_inputs(args: &DataArgs) -> CliResult<(Config, Dataset)> {
    let config = load_config(args.config.as_deref())?;
    let path = match (&args.data, &config.data_path, &args.config) {
        (Some(d), _, _) => d.clone(),
        (None, Some(d), Some(cfg)) => cfg.parent().unwrap_or(Path::new("")).join(d),
        _ => {
            return Err(Failure::Usage(
                "no dataset: pass --data or set `[data] path` in the config".into(),
            ))
        }
    };
    let data = load_csv(&path).map_err(|e| match e {
        SurvError::Io(io) => SurvError::Io(std::io::Error::new(io.kind(), format!("{}: {io}", path.display()))),
        other => other,
    })?;
    Ok((config, data))
}

fn gen(a: GenArgs) -> CliResult<()> {
    let mut spec = load_config(a.config.as_deref())?.synthetic;
    if let Some(v) = a.n {
        spec.n = v;
    }
    if let Some(v) = a.p {
        spec.p = v;
    }
    if let Some(v) = a.risk_kind {
        spec.risk_kind = match v {
            RiskArg::Linear => RiskKind::Linear,
            RiskArg::Nonlinear => RiskKind::Nonlinear,
        };
    }
    if let Some(v) = a.sparsity {
        spec.sparsity = v;
    }
    if let Some(v) = a.censoring_rate {
        spec.censoring_rate = v;
    }
    if let Some(v) = a.seed {
        spec.seed = v;
    }
    if let Some(v) = a.signal_scale {
        spec.signal_scale = v;
    }
    let data = generate(&spec)?;
    save_csv(&data.dataset, &a.out)?;
    if let Some(truth) = &a.truth {
        save_risk_csv(truth, "true_risk", data.dataset.sample_ids(), &data.true_risk)?;
    }
    eprintln!(
        "wrote {} samples x {} features, censoring {:.3}",
        data.dataset.len(),
        data.dataset.n_features(),
        data.realized_censoring
    );
    Ok(())
}

fn train(a: TrainArgs) -> CliResult<()> {
    let (config, data) = load_inputs(&a.input)?;
    let (train, validation) = match a.split_seed {
        Some(seed) => {
            let split = split_dataset(&data, seed)?;
            (split.train, Some(split.validation))
        }
        None => (data, None),
    };
    let mut log = String::new();
    let pipeline = match a.kind.activation() {
        Some(activation) => {
            let mut settings = config.nn.clone();
            if let Some(seed) = a.split_seed {
                settings.train.rng_seed = seed;
            }
            let (pipeline, history) = train_network(&settings, activation, &train, validation.as_ref())?;
            log.push_str("epoch,loss,validation_ci\n");
            for r in &history.epochs {
                let ci = r.validation_ci.map_or(String::new(), |c| c.to_string());
                writeln!(log, "{},{},{ci}", r.epoch, r.loss).unwrap();
            }
            eprintln!("selected epoch {}", history.selected_epoch);
            pipeline
        }
        None => {
            let (pipeline, fit) = train_coxnet(&config.coxnet, &train)?;
            log.push_str("iteration,objective\n");
            for (i, v) in fit.objective_trace.iter().enumerate() {
                writeln!(log, "{i},{v}").unwrap();
            }
            let nonzero = fit.model.coefficients.iter().filter(|c| **c != 0.0).count();
            eprintln!("{} iterations, {nonzero} nonzero coefficients", fit.iterations);
            pipeline
        }
    };
    pipeline.save(&a.out)?;
    let log_path = a.log.unwrap_or_else(|| suffixed(&a.out, ".log"));
    write_atomic(&log_path, log.as_bytes())?;
    Ok(())
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn predict(a: PredictArgs) -> CliResult<()> {
    let pipeline = Pipeline::load(&a.model)?;
    let data = load_csv(&a.data)?;
    let rows = match (a.part, a.split_seed) {
        (Part::All, _) => data,
        (_, None) => return Err(Failure::Usage("--part needs --split-seed".into())),
        (part, Some(seed)) => {
            let split = split_dataset(&data, seed)?;
            match part {
                Part::Train => split.train,
                Part::Validation => split.validation,
                _ => split.test,
            }
        }
    };
    let risk = pipeline.predict(rows.features())?.into_inner();
    save_risk_csv(&a.out, "risk", rows.sample_ids(), &risk)?;
    Ok(())
}

fn eval(a: EvalArgs) -> CliResult<()> {
    let data = load_csv(&a.data)?;
    let risks = load_risk_csv(&a.risk)?;
    let index: HashMap<&str, usize> = data
        .sample_ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut rows = Vec::with_capacity(risks.len());
    let mut seen = vec![false; data.len()];
    for (id, _) in &risks {
        let i = *index
            .get(id.as_str())
            .ok_or_else(|| SurvError::InvalidInput(format!("risk file names unknown sample `{id}`")))?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(SurvError::InvalidInput(format!("sample `{id}` scored twice")).into());
        }
        rows.push(i);
    }
    let labels: SurvivalLabels = data.labels().subset(&rows)?;
    let scores: Vec<f64> = risks.iter().map(|(_, v)| *v).collect();
    println!("{:?}", concordance_index(&scores, &labels)?);
    Ok(())
}

fn tune(a: TuneArgs) -> CliResult<()> {
    let (mut config, data) = load_inputs(&a.input)?;
    if let Some(b) = a.budget {
        config.tune.optimizer.budget = b;
    }
    if let Some(i) = a.init_trials {
        config.tune.optimizer.init_trials = i;
    }
    config.validate()?;
    let split = split_dataset(&data, a.split_seed)?;
    let trials = a.trials.unwrap_or_else(|| suffixed(&a.out, ".trials.log"));
    let overrides = &config.tune.space_overrides;
    let optimizer = config.tune.optimizer.clone();
    let seed = a.split_seed;
    let outcome = match a.kind.activation() {
        Some(activation) => {
            let space = apply_overrides(default_nn_space(), "nn", overrides)?;
            let method = NnMethod::new(activation, config.nn.clone(), space)?;
            let outcome = tune_method(
                &method,
                &split.train,
                &split.validation,
                seed,
                &optimizer,
                Some(&trials),
            )?;
            config.nn = method.settings_for(&outcome.best.params, seed)?;
            outcome
        }
        None => {
            let space = apply_overrides(default_coxnet_space(), "coxnet", overrides)?;
            let method = CoxnetMethod::new(config.coxnet.clone(), space)?;
            let outcome = tune_method(
                &method,
                &split.train,
                &split.validation,
                seed,
                &optimizer,
                Some(&trials),
            )?;
            config.coxnet = method.settings_for(&outcome.best.params)?;
            outcome
        }
    };
    write_atomic(&a.out, config.to_text().as_bytes())?;
    let ok = outcome.trials.iter().filter(|t| t.is_ok()).count();
    eprintln!("{ok}/{} trials succeeded", outcome.trials.len());
    for (name, v) in &outcome.params {
        eprintln!("{name} = {v}");
    }
    println!("{:?}", outcome.best.score);
    Ok(())
}

fn benchmark(a: BenchmarkArgs) -> CliResult<()> {
    let (mut config, data) = load_inputs(&a.input)?;
    if !a.methods.is_empty() {
        config.benchmark.methods = a.methods.iter().map(|k| k.name().to_string()).collect();
    }
    if let Some(v) = a.permutations {
        config.benchmark.permutations = v;
    }
    if let Some(v) = a.base_seed {
        config.benchmark.base_seed = v;
    }
    if let Some(v) = a.budget {
        config.tune.optimizer.budget = v;
    }
    if let Some(v) = a.init_trials {
        config.tune.optimizer.init_trials = v;
    }
    config.validate()?;
    let methods = config
        .benchmark
        .methods
        .iter()
        .map(|m| builtin_method(m, &config))
        .collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<_> = methods.iter().map(|m| m.as_ref()).collect();
    let options = ProtocolOptions {
        permutations: config.benchmark.permutations,
        base_seed: config.benchmark.base_seed,
        optimizer: config.tune.optimizer.clone(),
        run_dir: Some(a.out_dir.clone()),
    };
    let report = run_protocol(&data, &refs, &options)?;
    survnet::harness::write_report_files(&a.out_dir, &config.to_text(), &report)?;
    print!("{}", summary_table(&report));
    Ok(())
}
