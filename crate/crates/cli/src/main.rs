use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rrm_core::bounds::{
    audit, least_squares_robustness_check, AuditConfig, DenominatorMode,
};
use rrm_core::gaps::GapReport;
use rrm_core::info::Estimator;
use rrm_core::io::{plot_row, read_embeddings, read_report, write_embeddings, write_plot_csv, write_report};
use rrm_core::noise::{NoiseModel, NoiseVariant};
use rrm_core::oracle::{certify_chain, erm_suite, lemma_a2_suite, pinsker_grid_suite};
use rrm_core::potl::{potl_experiment, PotlConfig};
use rrm_core::synth::{augment, synth, SynthPreset, SynthSpec};
use rrm_core::trainers::{
    ConstantTrainer, MajorityTrainer, MemorizedRepresentation, RidgeConfig, RidgeTrainer,
    TableInterpolator, Trainer,
};
use rrm_core::LabeledEmbeddings;

#[derive(Parser)]
#[command(name = "rrm", version, about = "Generalization-gap audits for frozen-representation classifiers")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic train/test pair.
    Synth(SynthArgs),
    /// Run the noisy experiment and write a gap report.
    Audit(AuditArgs),
    /// Run the exact certification suites.
    Oracle(OracleArgs),
    /// Measure procedure S against the plain trainer.
    Potl(PotlArgs),
    /// Margin-based robustness check for least squares.
    Robustness(RobustnessArgs),
    /// Collect reports into a plot-ready CSV.
    Plotdata(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Gaussian,
    Trivialrep,
    Margin,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    preset: Preset,
    /// Training points.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Test points (default: same as --n).
    #[arg(long)]
    n_test: Option<usize>,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    classes: usize,
    /// Mean separation in noise standard deviations.
    #[arg(long, default_value_t = 10.0)]
    sep: f64,
    /// Target rationality gap (trivialrep).
    #[arg(long, default_value_t = 0.2)]
    gap: f64,
    /// Comma-separated per-group margins (margin).
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    margins: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Jittered copies per training point.
    #[arg(long)]
    augment: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    jitter: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainerKind {
    Ridge,
    /// Ridge behind a representation that zeroes inputs not seen in training.
    TrivialRep,
    Majority,
    Interpolator,
    Constant,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    UniformAll,
    UniformOther,
}

impl From<NoiseArg> for NoiseVariant {
    fn from(v: NoiseArg) -> Self {
        match v {
            NoiseArg::UniformAll => NoiseVariant::UniformAll,
            NoiseArg::UniformOther => NoiseVariant::UniformOther,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DenomArg {
    Eta,
    Empirical,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct TrainerArgs {
    #[arg(long, value_enum, default_value = "ridge")]
    trainer: TrainerKind,
    #[arg(long, default_value_t = 1e-6)]
    lambda: f64,
    /// Fit without the constant-1 feature.
    #[arg(long)]
    no_bias: bool,
    #[arg(long)]
    standardize: bool,
}

impl TrainerArgs {
    fn ridge(&self) -> RidgeConfig {
        RidgeConfig {
            lambda: self.lambda,
            fit_bias: !self.no_bias,
            standardize: self.standardize,
        }
    }

    fn build(&self) -> Result<Box<dyn Trainer>> {
        if !(self.lambda >= 0.0) {
            bail!("--lambda must be >= 0");
        }
        Ok(match self.trainer {
            TrainerKind::Ridge => Box::new(RidgeTrainer(self.ridge())),
            TrainerKind::TrivialRep => Box::new(MemorizedRepresentation::new(RidgeTrainer(self.ridge()))),
            TrainerKind::Majority => Box::new(MajorityTrainer),
            TrainerKind::Interpolator => Box::new(TableInterpolator { fallback: 0 }),
            TrainerKind::Constant => Box::new(ConstantTrainer(0)),
        })
    }
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[command(flatten)]
    trainer: TrainerArgs,
    #[arg(long, value_enum, default_value = "uniform-all")]
    noise_model: NoiseArg,
    #[arg(long, value_enum, default_value = "eta")]
    bound_denominator: DenomArg,
    #[arg(long, value_enum, default_value = "off")]
    cpc: Switch,
    /// Apply the Miller-Madow correction to the prediction complexity.
    #[arg(long)]
    miller_madow: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Suite {
    Chain,
    Pinsker,
    LemmaA2,
    Erm,
    All,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, value_enum, default_value = "all")]
    suite: Suite,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where violating scenarios are written.
    #[arg(long, default_value = "oracle-counterexamples")]
    dump_dir: PathBuf,
}

#[derive(Args)]
struct PotlArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    #[command(flatten)]
    trainer: TrainerArgs,
    #[arg(long, value_enum, default_value = "uniform-all")]
    noise_model: NoiseArg,
    /// Retrainings per test point, combined by majority vote.
    #[arg(long, default_value_t = 1)]
    votes: usize,
    /// Noisy trials for measuring the plain trainer.
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RobustnessArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.5,1.0")]
    gammas: Vec<f64>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1e-6)]
    lambda: f64,
    #[arg(long)]
    no_bias: bool,
    #[arg(long, value_enum, default_value = "uniform-other")]
    noise_model: NoiseArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, num_args = 1.., required = true)]
    reports: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Order rows by generalization gap.
    #[arg(long)]
    sort: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Potl(a) => cmd_potl(a),
        Command::Robustness(a) => cmd_robustness(a),
        Command::Plotdata(a) => cmd_plotdata(a),
    }
}

fn load(path: &Path) -> Result<LabeledEmbeddings> {
    read_embeddings(path).with_context(|| format!("reading {}", path.display()))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "null".to_string(), |x| format!("{x:.6}"))
}

fn cmd_synth(a: SynthArgs) -> Result<ExitCode> {
    let preset = match a.preset {
        Preset::Gaussian => SynthPreset::GaussianClusters {
            k: a.classes,
            d: a.dim,
            sep: a.sep,
        },
        Preset::Trivialrep => SynthPreset::TrivialRepFixture {
            gap: a.gap,
            k: a.classes,
            d: a.dim,
            sep: a.sep,
        },
        Preset::Margin => SynthPreset::MarginFixture { margins: a.margins },
    };
    let spec = SynthSpec {
        preset,
        n_train: a.n,
        n_test: a.n_test.unwrap_or(a.n),
        seed: a.seed,
    };
    let out = synth(&spec)?;
    let train = match a.augment {
        Some(t) => augment(&out.train, t, a.jitter, a.seed)?,
        None => out.train,
    };
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_embeddings(&train, a.out.join("train.emb"))?;
    write_embeddings(&out.test, a.out.join("test.emb"))?;
    if let Some(raw) = &out.test_raw {
        write_embeddings(raw, a.out.join("test_raw.emb"))?;
    }
    println!(
        "n_train={} n_test={} dim={} classes={} out={}",
        train.len(),
        out.test.len(),
        train.dim(),
        train.num_classes(),
        a.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn summary(r: &GapReport) -> String {
    format!(
        "train_acc={:.6} test_acc={:.6} train_noisy={:.6} ntrain_noisy={} robustness_gap={:.6} \
         rationality_gap={} memorization_gap={} generalization_gap={:.6} rrm_bound={} \
         cdc_nats={} cpc_nats={} thm2_bound={} thm2_bound_capped={}",
        r.accuracies.train,
        r.accuracies.test,
        r.accuracies.train_noisy,
        fmt_opt(r.accuracies.ntrain_noisy),
        r.robustness_gap,
        fmt_opt(r.rationality_gap),
        fmt_opt(r.memorization_gap),
        r.generalization_gap,
        fmt_opt(r.rrm_bound),
        fmt_opt(r.cdc),
        fmt_opt(r.cpc),
        fmt_opt(r.thm2_bound),
        fmt_opt(r.thm2_bound_capped),
    )
}

fn cmd_audit(a: AuditArgs) -> Result<ExitCode> {
    let cpc = a.cpc == Switch::On;
    if cpc && a.trials < 2 {
        bail!("--cpc on needs at least 2 trials, got {}", a.trials);
    }
    if a.trials == 0 {
        bail!("--trials must be at least 1");
    }
    let noise = NoiseModel::new(a.noise_model.into(), a.eta)?;
    let trainer = a.trainer.build()?;
    let train = load(&a.train)?;
    let test = load(&a.test)?;
    let cfg = AuditConfig {
        noise,
        trials: a.trials,
        seed: a.seed,
        denominator: match a.bound_denominator {
            DenomArg::Eta => DenominatorMode::PaperEta,
            DenomArg::Empirical => DenominatorMode::EmpiricalFlipRate,
        },
        compute_cpc: cpc,
        cpc_estimator: if a.miller_madow {
            Estimator::PlugInMillerMadow
        } else {
            Estimator::PlugIn
        },
    };
    let report = audit(trainer.as_ref(), &train, &test, &cfg)?;
    if !report.rrm_holds() {
        bail!("generalization gap exceeds the RRM bound; this is a bug");
    }
    write_report(&report, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if report.accuracies.ntrain_noisy.is_none() {
        eprintln!("warning: no label was corrupted in any trial; NTrain(eta) is undefined");
    }
    println!("{}", summary(&report));
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle(a: OracleArgs) -> Result<ExitCode> {
    let mut ok = true;
    let wants = |s: Suite| a.suite == s || a.suite == Suite::All;
    if wants(Suite::Chain) {
        let r = certify_chain(a.count, a.seed, Some(&a.dump_dir))?;
        println!(
            "suite=chain checked={} failures={}{}",
            r.checked,
            r.failures.len(),
            if r.passed() { String::new() } else { format!(" dump={}", a.dump_dir.display()) }
        );
        for f in &r.failures {
            eprintln!("scenario {}: {}", f.index, f.message);
        }
        ok &= r.passed();
    }
    if wants(Suite::Pinsker) {
        let r = pinsker_grid_suite(100, 1e-12)?;
        println!("suite=pinsker checked={} failures={} worst={:e}", r.checked, r.failures, r.worst);
        ok &= r.passed();
    }
    if wants(Suite::LemmaA2) {
        let r = lemma_a2_suite(a.count.max(200), a.seed)?;
        println!("suite=lemma-a2 checked={} failures={} worst={:e}", r.checked, r.failures, r.worst);
        ok &= r.passed();
    }
    if wants(Suite::Erm) {
        let r = erm_suite(100, 0.1, 200, a.seed)?;
        println!(
            "suite=erm gap={:.6} bound={:.6} sigma={:.6} passes={}",
            r.gap, r.bound, r.sigma, r.passes
        );
        ok &= r.passes;
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_potl(a: PotlArgs) -> Result<ExitCode> {
    let noise = NoiseModel::new(a.noise_model.into(), a.eta)?;
    if a.votes == 0 || a.trials == 0 {
        bail!("--votes and --trials must be at least 1");
    }
    let trainer = a.trainer.build()?;
    let train = load(&a.train)?;
    let test = load(&a.test)?;
    let cfg = PotlConfig {
        trials_per_test_point: a.votes,
        noise,
        seed: a.seed,
        audit_trials: a.trials,
    };
    let r = potl_experiment(trainer.as_ref(), &train, &test, cfg)?;
    if !r.assumption_holds {
        eprintln!("warning: Train(eta) < NTrain(eta) for this trainer; the guarantee does not apply");
    }
    let line = format!(
        "test_s={:.6} test_t={:.6} ntrain_t={} train_noisy_t={:.6} margin={} gain={:.6} sigma={:.6} informal_rhs={} assumption_holds={}",
        r.test_s,
        r.test_t,
        fmt_opt(r.ntrain_t),
        r.train_noisy_t,
        fmt_opt(r.margin),
        r.gain,
        r.sigma,
        fmt_opt(r.informal_rhs),
        r.assumption_holds
    );
    if let Some(out) = &a.out {
        fs::write(out, format!("{line}\n")).with_context(|| format!("writing {}", out.display()))?;
    }
    println!("{line}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_robustness(a: RobustnessArgs) -> Result<ExitCode> {
    let noise = NoiseModel::new(a.noise_model.into(), a.eta)?;
    let data = load(&a.train)?;
    let cfg = RidgeConfig {
        lambda: a.lambda,
        fit_bias: !a.no_bias,
        standardize: false,
    };
    let rows = least_squares_robustness_check(&data, cfg, &noise, &a.gammas, a.trials, a.seed)?;
    let mut ok = true;
    for r in &rows {
        println!(
            "gamma={} p={:.6} predicted={:.6} observed={:.6} sigma={:.6} passes={}",
            r.gamma, r.p, r.predicted, r.observed, r.sigma, r.passes
        );
        ok &= r.passes;
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_plotdata(a: PlotArgs) -> Result<ExitCode> {
    let rows = a
        .reports
        .iter()
        .map(|p| {
            let r = read_report(p).with_context(|| format!("reading {}", p.display()))?;
            let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            Ok(plot_row(name, &r))
        })
        .collect::<Result<Vec<_>>>()?;
    write_plot_csv(&rows, a.sort, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!("rows={} out={}", rows.len(), a.out.display());
    Ok(ExitCode::SUCCESS)
}
