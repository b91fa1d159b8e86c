//! Fully resolved jobs and the run manifest that records them.
//!
//! A job carries every value the run depends on, including the transition
//! model, scenario and reward weights, so replaying a manifest does not
//! depend on config files that may have changed since.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use caresim::evaluation::{random_curve, select_final_policy, FinalSelection};
use caresim::simulation::{simulate, SimulationConfig};
use caresim::text::{ChatClient, HttpBackend, HttpConfig, TemplateBackend, TextBackend};
use caresim::{evaluate_policy, train, Actor, Environment, EvaluationReport, Policy, QTable, TrainingConfig, TrainingLog};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Job {
    Train {
        config: TrainingConfig,
        /// Rollouts per epoch for the random-actor reference curve.
        random_rollouts: u32,
    },
    Evaluate {
        env: Environment,
        target: EvalTarget,
        rollouts: u32,
        seed: u64,
    },
    Simulate {
        env: Environment,
        policy: Policy,
        sim: SimulationConfig,
        backend: BackendChoice,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvalTarget {
    Policy { policy: Policy },
    Random,
    /// Trailing-window policies copied from a training log.
    SelectFinal { final_policies: Vec<Policy> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendChoice {
    Template,
    Http { config: HttpConfig },
}

impl Job {
    pub fn seed(&self) -> u64 {
        match self {
            Job::Train { config, .. } => config.seed,
            Job::Evaluate { seed, .. } => *seed,
            Job::Simulate { sim, .. } => sim.seed,
        }
    }

    /// Files the job writes, relative to its output directory.
    pub fn outputs(&self) -> Vec<&'static str> {
        match self {
            Job::Train { .. } => vec!["qtable.txt", "policy.txt", "train_log.csv", "learning_curve.csv"],
            Job::Evaluate {
                target: EvalTarget::SelectFinal { .. },
                ..
            } => vec!["report.json", "final_policy.txt"],
            Job::Evaluate { .. } => vec!["report.json"],
            Job::Simulate { .. } => vec!["transcript.txt"],
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    /// Seconds since the Unix epoch when the run started.
    pub started_at: u64,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub outputs: Vec<PathBuf>,
    pub job: Job,
}

impl RunManifest {
    pub fn new(job: Job, out_dir: &Path) -> Self {
        let started_at = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at,
            seed: job.seed(),
            out_dir: out_dir.to_path_buf(),
            outputs: job.outputs().into_iter().map(|f| out_dir.join(f)).collect(),
            job,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// Writes the manifest, runs the job, then re-reads every artifact so a
/// zero exit status means the outputs parse.
pub fn run(job: Job, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let manifest = RunManifest::new(job, out_dir);
    write(&out_dir.join(MANIFEST_FILE), &serde_json::to_string_pretty(&manifest)?)?;

    match &manifest.job {
        Job::Train {
            config,
            random_rollouts,
        } => run_train(config, *random_rollouts, out_dir),
        Job::Evaluate {
            env,
            target,
            rollouts,
            seed,
        } => run_evaluate(env, target, *rollouts, *seed, out_dir),
        Job::Simulate {
            env,
            policy,
            sim,
            backend,
        } => run_simulate(env, policy, sim, backend, out_dir),
    }
}

fn run_train(config: &TrainingConfig, random_rollouts: u32, out: &Path) -> Result<()> {
    let (q, log) = train(config)?;
    let policy = caresim::extract_policy(&q);
    let random = random_curve(&config.env, config.epochs, random_rollouts.max(1), config.seed)?;

    let mut curve = log.learning_curve_csv(config.schedule.label());
    for (epoch, mean) in random.iter().enumerate() {
        curve.push_str(&format!("{epoch},random,{mean}\n"));
    }

    let (q_path, p_path, log_path) = (out.join("qtable.txt"), out.join("policy.txt"), out.join("train_log.csv"));
    q.save(&q_path)?;
    policy.save(&p_path)?;
    log.save(&log_path)?;
    write(&out.join("learning_curve.csv"), &curve)?;

    QTable::load(&q_path)?;
    Policy::load(&p_path)?;
    TrainingLog::load(&log_path)?;

    let last = log.epochs.last().map(|r| r.mean_return).unwrap_or(f64::NAN);
    println!("schedule: {}", config.schedule.label());
    println!("greedy policy: {}", policy.id());
    println!("final snapshot mean return: {last:.3}");
    println!("wrote {}", out.display());
    Ok(())
}

fn print_report(label: &str, r: &EvaluationReport) {
    println!(
        "{label} {}: mean {:.3} std {:.3} (se {:.3}) over {} rollouts",
        r.policy_id,
        r.mean,
        r.std,
        r.std_error(),
        r.num_rollouts
    );
}

fn run_evaluate(env: &Environment, target: &EvalTarget, rollouts: u32, seed: u64, out: &Path) -> Result<()> {
    let report_path = out.join("report.json");
    match target {
        EvalTarget::Policy { policy } => {
            let r = evaluate_policy(env, &Actor::Greedy(*policy), rollouts, seed)?;
            print_report("policy", &r);
            write(&report_path, &serde_json::to_string_pretty(&r)?)?;
            serde_json::from_str::<EvaluationReport>(&fs::read_to_string(&report_path)?)?;
        }
        EvalTarget::Random => {
            let r = evaluate_policy(env, &Actor::Random, rollouts, seed)?;
            print_report("baseline", &r);
            write(&report_path, &serde_json::to_string_pretty(&r)?)?;
            serde_json::from_str::<EvaluationReport>(&fs::read_to_string(&report_path)?)?;
        }
        EvalTarget::SelectFinal { final_policies } => {
            let log = TrainingLog {
                epochs: Vec::new(),
                final_policies: final_policies.clone(),
            };
            let sel = select_final_policy(&log, env, rollouts, seed)?;
            for c in &sel.candidates {
                print_report(&format!("candidate x{}", c.frequency), &c.report);
            }
            println!("final policy: {}", sel.policy.id());
            let p_path = out.join("final_policy.txt");
            sel.policy.save(&p_path)?;
            write(&report_path, &serde_json::to_string_pretty(&sel)?)?;
            Policy::load(&p_path)?;
            serde_json::from_str::<FinalSelection>(&fs::read_to_string(&report_path)?)?;
        }
    }
    Ok(())
}

fn run_simulate(
    env: &Environment,
    policy: &Policy,
    sim: &SimulationConfig,
    backend: &BackendChoice,
    out: &Path,
) -> Result<()> {
    let mut backend: Box<dyn TextBackend> = match backend {
        BackendChoice::Template => Box::new(TemplateBackend),
        BackendChoice::Http { config } => Box::new(HttpBackend::new(ChatClient::from_env(config.clone())?)),
    };
    let transcript = simulate(env, policy, backend.as_mut(), sim)?;
    let path = out.join("transcript.txt");
    let text = transcript.to_text();
    write(&path, &text)?;
    if fs::read_to_string(&path)? != text {
        bail!("transcript at {} did not read back", path.display());
    }
    println!(
        "{} timesteps, return {}, skipped subtasks {}",
        transcript.steps.len(),
        transcript.total_return,
        transcript.skipped_subtasks
    );
    println!("wrote {}", path.display());
    Ok(())
}
