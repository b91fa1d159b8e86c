//! `caresim` command-line entry point.

mod jobs;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use caresim::simulation::SimulationConfig;
use caresim::text::{Guidance, HttpConfig, PromptVariant, DEFAULT_HISTORY_CAP};
use caresim::{
    EpsilonSchedule, Environment, Observation, Policy, RewardWeights, ScenarioSpec, TrainingConfig, TrainingLog,
    TransitionModel,
};
use clap::{Args, Parser, Subcommand, ValueEnum};

use jobs::{BackendChoice, EvalTarget, Job, RunManifest};

#[derive(Parser)]
#[command(name = "caresim", version, about = "Dementia-caregiving interaction simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a tabular Q-learning caregiver.
    Train(TrainArgs),
    /// Evaluate a policy, the random baseline, or pick the final policy from a training log.
    Evaluate(EvaluateArgs),
    /// Run one full two-agent episode and write its transcript.
    Simulate(SimulateArgs),
    /// Re-run the job recorded in a manifest.
    Replay(ReplayArgs),
    /// Write the default configuration files.
    Defaults(DefaultsArgs),
}

#[derive(Args)]
struct EnvArgs {
    /// Scenario JSON (tasks, subtasks, max trials).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Transition model JSON.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Reward weights JSON.
    #[arg(long)]
    weights: Option<PathBuf>,
}

impl EnvArgs {
    fn resolve(&self) -> Result<Environment> {
        let model = match &self.model {
            Some(p) => TransitionModel::load(p)?,
            None => TransitionModel::default(),
        };
        let scenario = match &self.scenario {
            Some(p) => ScenarioSpec::load(p)?,
            None => ScenarioSpec::shopping(),
        };
        let weights = match &self.weights {
            Some(p) => RewardWeights::load(p)?,
            None => RewardWeights::default(),
        };
        Ok(Environment::new(model, scenario, weights)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScheduleKind {
    Constant,
    Decay,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[arg(long, value_enum, default_value = "constant")]
    schedule: ScheduleKind,
    /// Exploration rate for the constant schedule.
    #[arg(long, default_value_t = EpsilonSchedule::DEFAULT_CONSTANT)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.03)]
    eps_min: f64,
    #[arg(long, default_value_t = 1.0)]
    eps_max: f64,
    /// The decay schedule passes through `--decay-target` at this epoch.
    #[arg(long, default_value_t = 300)]
    decay_epoch: u32,
    #[arg(long, default_value_t = 0.8)]
    decay_target: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 0.95)]
    gamma: f64,
    #[arg(long, default_value_t = 6000)]
    epochs: u32,
    /// Episodes per epoch.
    #[arg(long, default_value_t = 30)]
    episodes: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Learn from noisy perceived states instead of the true state.
    #[arg(long)]
    use_perceived: bool,
    /// Per-bit perception flip probability, used with `--use-perceived`.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 40)]
    snapshot_rollouts: u32,
    #[arg(long, default_value_t = 100)]
    final_window: u32,
    #[arg(long, default_value = "runs/train")]
    out: PathBuf,
}

impl TrainArgs {
    fn job(&self) -> Result<Job> {
        let schedule = match self.schedule {
            ScheduleKind::Constant => {
                let s = EpsilonSchedule::constant(self.epsilon);
                s.validate()?;
                s
            }
            ScheduleKind::Decay => {
                EpsilonSchedule::decay_through(self.eps_min, self.eps_max, self.decay_epoch, self.decay_target)?
            }
        };
        if self.noise != 0.0 && !self.use_perceived {
            bail!("--noise only applies together with --use-perceived");
        }
        let config = TrainingConfig {
            learning_rate: self.alpha,
            discount: self.gamma,
            epochs: self.epochs,
            episodes_per_epoch: self.episodes,
            schedule,
            seed: self.seed,
            observation: if self.use_perceived {
                Observation::Perceived { noise: self.noise }
            } else {
                Observation::True
            },
            snapshot_rollouts: self.snapshot_rollouts,
            final_window: self.final_window,
            env: self.env.resolve()?,
            ..TrainingConfig::default()
        };
        config.validate()?;
        Ok(Job::Train {
            random_rollouts: self.snapshot_rollouts,
            config,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Random,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    env: EnvArgs,
    /// Policy file to evaluate.
    #[arg(long, conflicts_with_all = ["baseline", "select_final"])]
    policy: Option<PathBuf>,
    #[arg(long, value_enum, conflicts_with = "select_final")]
    baseline: Option<Baseline>,
    /// Pick the best of the most frequent late-training policies in `--log`.
    #[arg(long, requires = "log")]
    select_final: bool,
    /// Training log written by `train`.
    #[arg(long)]
    log: Option<PathBuf>,
    /// Defaults to 40, or 10000 with `--select-final`.
    #[arg(long)]
    rollouts: Option<u32>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "runs/evaluate")]
    out: PathBuf,
}

impl EvaluateArgs {
    fn job(&self) -> Result<Job> {
        let target = if let Some(p) = &self.policy {
            EvalTarget::Policy {
                policy: load_policy(p)?,
            }
        } else if self.baseline.is_some() {
            EvalTarget::Random
        } else if self.select_final {
            let path = self.log.as_deref().expect("clap enforces --log");
            let log = TrainingLog::load(path).with_context(|| format!("loading training log {}", path.display()))?;
            EvalTarget::SelectFinal {
                final_policies: log.final_policies,
            }
        } else {
            bail!("give one of --policy, --baseline random or --select-final");
        };
        let default_rollouts = if self.select_final { 10_000 } else { 40 };
        let rollouts = self.rollouts.unwrap_or(default_rollouts);
        if rollouts == 0 {
            bail!("--rollouts must be positive");
        }
        Ok(Job::Evaluate {
            env: self.env.resolve()?,
            target,
            rollouts,
            seed: self.seed,
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Template,
    Http,
}

#[derive(Clone, Copy, ValueEnum)]
enum GuidanceKind {
    Brief,
    Detailed,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    env: EnvArgs,
    #[arg(long)]
    policy: PathBuf,
    #[arg(long, value_enum, default_value = "template")]
    backend: BackendKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-bit perception flip probability.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Decide from the perceived state instead of the true state.
    #[arg(long)]
    use_perceived: bool,
    #[arg(long, value_enum, default_value = "brief")]
    guidance: GuidanceKind,
    /// Show the decision state to the caregiver-speech prompt.
    #[arg(long)]
    include_state: bool,
    #[arg(long, default_value_t = DEFAULT_HISTORY_CAP)]
    history_cap: usize,
    /// HTTP backend settings as JSON; individual flags below override it.
    #[arg(long)]
    http_config: Option<PathBuf>,
    #[arg(long)]
    base_url: Option<String>,
    /// Chat model name for the HTTP backend.
    #[arg(long)]
    llm_model: Option<String>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    timeout_ms: Option<u64>,
    #[arg(long)]
    max_retries: Option<u32>,
    /// Environment variable holding the API credential.
    #[arg(long)]
    api_key_env: Option<String>,
    #[arg(long, default_value = "runs/simulate")]
    out: PathBuf,
}

impl SimulateArgs {
    fn http_config(&self) -> Result<HttpConfig> {
        let mut c = match &self.http_config {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
            }
            None => HttpConfig::default(),
        };
        if let Some(v) = &self.base_url {
            c.base_url = v.clone();
        }
        if let Some(v) = &self.llm_model {
            c.model = v.clone();
        }
        if let Some(v) = self.temperature {
            c.temperature = v;
        }
        if let Some(v) = self.timeout_ms {
            c.timeout_ms = v;
        }
        if let Some(v) = self.max_retries {
            c.max_retries = v;
        }
        if let Some(v) = &self.api_key_env {
            c.api_key_env = v.clone();
        }
        Ok(c)
    }

    fn job(&self) -> Result<Job> {
        if !(0.0..=1.0).contains(&self.noise) {
            bail!("--noise must be within [0, 1]");
        }
        let backend = match self.backend {
            BackendKind::Template => BackendChoice::Template,
            BackendKind::Http => {
                let config = self.http_config()?;
                // fail before writing anything if the credential is missing
                caresim::text::ChatClient::from_env(config.clone())?;
                BackendChoice::Http { config }
            }
        };
        Ok(Job::Simulate {
            env: self.env.resolve()?,
            policy: load_policy(&self.policy)?,
            sim: SimulationConfig {
                seed: self.seed,
                noise: self.noise,
                use_perceived: self.use_perceived,
                variant: PromptVariant {
                    guidance: match self.guidance {
                        GuidanceKind::Brief => Guidance::Brief,
                        GuidanceKind::Detailed => Guidance::Detailed,
                    },
                    include_state: self.include_state,
                },
                history_cap: self.history_cap,
            },
            backend,
        })
    }
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory; defaults to the one recorded in the manifest.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DefaultsArgs {
    #[arg(long, default_value = "config")]
    out: PathBuf,
}

fn load_policy(path: &Path) -> Result<Policy> {
    Policy::load(path).with_context(|| format!("loading policy {}", path.display()))
}

fn write_defaults(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let files = [
        ("model.json", TransitionModel::default().to_json()),
        ("scenario.json", ScenarioSpec::shopping().to_json()),
        ("weights.json", RewardWeights::default().to_json()),
        ("http.json", serde_json::to_string_pretty(&HttpConfig::default())?),
    ];
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => jobs::run(a.job()?, &a.out),
        Command::Evaluate(a) => jobs::run(a.job()?, &a.out),
        Command::Simulate(a) => jobs::run(a.job()?, &a.out),
        Command::Replay(a) => {
            let m = RunManifest::load(&a.manifest)?;
            let out = a.out.unwrap_or(m.out_dir);
            jobs::run(m.job, &out)
        }
        Command::Defaults(a) => write_defaults(&a.out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
