//! `rationale`: generate demonstrations, infer goal programs from them, score the result, and
//! draw traces.

use clap::{Args, Parser, Subcommand, ValueEnum};
use rationale::inverse::{rir_loop, Posterior, RationalityParams, RirError, RirParams};
use rationale::proposer::{
    EnumConfig, EnumerativeProposer, Proposer, ProposerConfig, RemoteConfig, RemoteProposer,
    ReplayTransport,
};
use rationale::terc::{
    corpus_manifest, evaluate, generate_demo_set, summarize, task_by_id, DemoConfig, EvalParams,
    TercError,
};
use rationale::world::io::{EnvFile, TraceFile};
use rationale::world::svg::{render_state, render_summary, strided_indices};
use rationale::world::Trajectory;
use serde::Serialize;
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rationale",
    version,
    about = "Goal-program inference from pick-and-place demonstrations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample environments for a task and record demonstrations in them.
    Gen(GenArgs),
    /// Infer a posterior over goal programs from a demo directory.
    Infer(InferArgs),
    /// Score a posterior against a task's ground truth.
    Eval(EvalArgs),
    /// Draw a trace as SVG frames.
    Render(RenderArgs),
    /// Print the task corpus as JSON.
    Corpus {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Serialize)]
struct GenArgs {
    #[arg(long)]
    task: u32,
    /// Number of demonstrations.
    #[arg(long, default_value_t = 1)]
    demos: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Waypoint wobble; defaults to the demonstrator's.
    #[arg(long)]
    jitter: Option<f64>,
    /// Inverse temperature of the demonstrator's plan choice.
    #[arg(long)]
    beta_plan: Option<f64>,
    /// Cheapest plan, no wobble.
    #[arg(long)]
    noise_free: bool,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ProposerMode {
    Enum,
    Remote,
}

#[derive(Args, Serialize)]
struct InferArgs {
    /// Directory written by `gen`.
    #[arg(long)]
    demos: PathBuf,
    #[arg(long, value_enum, default_value = "enum")]
    proposer: ProposerMode,
    #[arg(long, default_value_t = 3)]
    iters: usize,
    #[arg(long, default_value_t = 10)]
    pool: usize,
    /// Programs requested per round.
    #[arg(long, default_value_t = 10)]
    proposals: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Largest program size the enumerative proposer reaches.
    #[arg(long, default_value_t = 7)]
    size_cap: usize,
    /// Replay recorded responses instead of calling the endpoint.
    #[arg(long)]
    replay: Option<PathBuf>,
    #[arg(long)]
    endpoint: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Environment variable holding the API token.
    #[arg(long)]
    credential_var: Option<String>,
}

#[derive(Args, Serialize)]
struct EvalArgs {
    #[arg(long)]
    posterior: PathBuf,
    #[arg(long)]
    task: u32,
    #[arg(long, default_value_t = 3)]
    envs: usize,
    #[arg(long, default_value_t = 5)]
    poses: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    equiv_samples: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct RenderArgs {
    #[arg(long)]
    trace: PathBuf,
    #[arg(long, default_value_t = 10)]
    stride: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write the final state with the agent's path drawn over it.
    #[arg(long)]
    summary: bool,
}

enum Failure {
    Usage(String),
    Planner(String),
    Proposer(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Planner(_) => 3,
            Failure::Proposer(_) => 4,
        }
    }

    fn report(&self) -> String {
        let (kind, message) = match self {
            Failure::Usage(m) => ("usage", m),
            Failure::Planner(m) => ("planner", m),
            Failure::Proposer(m) => ("proposer", m),
        };
        json!({"error": kind, "code": self.code(), "message": message}).to_string()
    }
}

type Outcome = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Write through a temporary sibling and rename, so readers never see half a file.
fn write_atomic(path: &Path, contents: &str) -> Outcome {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents).map_err(|e| usage(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn make_dir(dir: &Path) -> Outcome {
    fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))
}

fn gen(args: GenArgs) -> Outcome {
    let task = task_by_id(args.task).map_err(usage)?;
    if !task.shots().contains(&args.demos) {
        return Err(usage(format!(
            "task {} takes {:?} demonstrations, not {}",
            task.id,
            task.shots(),
            args.demos
        )));
    }
    let mut cfg = if args.noise_free {
        DemoConfig::noise_free()
    } else {
        DemoConfig::default()
    };
    if let Some(j) = args.jitter {
        cfg.jitter = j;
    }
    if args.beta_plan.is_some() {
        cfg.beta_plan = args.beta_plan;
    }
    let set = generate_demo_set(&task, args.demos, args.seed, &cfg).map_err(|e| match e {
        TercError::UnknownTask(_) => usage(e),
        _ => Failure::Planner(e.to_string()),
    })?;
    make_dir(&args.out)?;
    let cost = cfg.profile.refine.cost;
    let mut files = Vec::new();
    println!("{:<16} {:>7} {:>10}", "trace", "frames", "cost");
    for (i, tau) in set.demos.iter().enumerate() {
        let env = format!("env_{i:03}.json");
        let demo = format!("demo_{i:03}.json");
        write_atomic(
            &args.out.join(&env),
            &to_json(&EnvFile::from_world(tau.initial())),
        )?;
        write_atomic(
            &args.out.join(&demo),
            &to_json(&TraceFile::from_trajectory(tau)),
        )?;
        println!(
            "{:<16} {:>7} {:>10.2}",
            demo,
            tau.len(),
            tau.cost(cost.scale, cost.lambda)
        );
        files.push(json!({"env": env, "trace": demo, "env_seed": set.env_seeds[i]}));
    }
    let manifest = json!({
        "command": "gen",
        "args": args,
        "task": {"id": task.id, "program": task.program, "description": task.description},
        "demo_config": cfg,
        "files": files,
    });
    write_atomic(&args.out.join("manifest.json"), &to_json(&manifest))
}

fn load_demos(dir: &Path) -> Result<(Vec<String>, Vec<Trajectory>), Failure> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .map_err(|e| usage(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("demo_") && n.ends_with(".json"))
        .collect();
    names.sort();
    if names.is_empty() {
        return Err(usage(format!("no demo_*.json in {}", dir.display())));
    }
    let mut demos = Vec::new();
    for n in &names {
        let text = fs::read_to_string(dir.join(n)).map_err(|e| usage(format!("{n}: {e}")))?;
        let tau = TraceFile::parse(&text)
            .and_then(|t| t.to_trajectory())
            .map_err(|e| usage(format!("{n}: {e}")))?;
        demos.push(tau);
    }
    Ok((names, demos))
}

fn infer(args: InferArgs) -> Outcome {
    let (names, demos) = load_demos(&args.demos)?;
    let proposer_cfg = match args.proposer {
        ProposerMode::Enum => ProposerConfig::Enumerative(EnumConfig {
            size_cap: args.size_cap,
            ..EnumConfig::default()
        }),
        ProposerMode::Remote => {
            let mut c = RemoteConfig {
                log_dir: Some(args.out.join("remote_log")),
                ..RemoteConfig::default()
            };
            if let Some(e) = &args.endpoint {
                c.endpoint = e.clone();
            }
            if let Some(m) = &args.model {
                c.model = m.clone();
            }
            if let Some(v) = &args.credential_var {
                c.credential_var = v.clone();
            }
            ProposerConfig::Remote(c)
        }
    };
    let mut proposer: Box<dyn Proposer> = match &proposer_cfg {
        ProposerConfig::Enumerative(c) => Box::new(EnumerativeProposer::new(c.clone())),
        ProposerConfig::Remote(c) => match &args.replay {
            Some(dir) => Box::new(RemoteProposer::new(
                c.clone(),
                Box::new(ReplayTransport::new(dir)),
                &demos,
            )),
            None => Box::new(
                RemoteProposer::http(c.clone(), &demos)
                    .map_err(|e| Failure::Proposer(e.to_string()))?,
            ),
        },
    };
    make_dir(&args.out)?;
    let rir = RirParams {
        iterations: args.iters,
        pool_size: args.pool,
        n_proposals: args.proposals,
    };
    let params = RationalityParams {
        seed: args.seed,
        ..RationalityParams::default()
    };
    let (outcome, failure) = match rir_loop(&demos, proposer.as_mut(), &rir, &params) {
        Ok(o) => (o, None),
        Err(RirError::ProposerFailure { error, partial }) => {
            (*partial, Some(Failure::Proposer(error.to_string())))
        }
    };
    write_atomic(
        &args.out.join("posterior.json"),
        &(outcome.posterior.to_json() + "\n"),
    )?;
    write_atomic(&args.out.join("history.json"), &to_json(&outcome.history))?;
    let manifest = json!({
        "command": "infer",
        "args": args,
        "demos": names,
        "proposer": proposer_cfg,
        "rir": rir,
        "rationality": params,
        "map": outcome.map,
    });
    write_atomic(&args.out.join("manifest.json"), &to_json(&manifest))?;
    println!("{:>8}  program", "weight");
    for h in outcome.posterior.hypotheses.iter().take(10) {
        println!("{:>8.4}  {}", h.weight, h.program);
    }
    match failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn eval_cmd(args: EvalArgs) -> Outcome {
    let task = task_by_id(args.task).map_err(usage)?;
    let text = fs::read_to_string(&args.posterior)
        .map_err(|e| usage(format!("{}: {e}", args.posterior.display())))?;
    let posterior = Posterior::from_json(&text).map_err(usage)?;
    let ranked: Vec<_> = if posterior.all_zero {
        Vec::new()
    } else {
        posterior
            .hypotheses
            .iter()
            .map(|h| h.program.clone())
            .collect()
    };
    let params = EvalParams {
        envs: args.envs,
        poses: args.poses,
        seed: args.seed,
        equiv_samples: args.equiv_samples,
        ..EvalParams::default()
    };
    let report = summarize(vec![evaluate(&ranked, &task, &params)]);
    make_dir(&args.out)?;
    write_atomic(&args.out.join("report.json"), &to_json(&report))?;
    let manifest = json!({"command": "eval", "args": args, "params": params});
    write_atomic(&args.out.join("manifest.json"), &to_json(&manifest))?;
    println!(
        "{:>5} {:>5} {:>5} {:>6} {:>15}",
        "task", "top1", "top5", "top10", "success"
    );
    for t in &report.tasks {
        println!(
            "{:>5} {:>5} {:>5} {:>6} {:>6}/{:<2} {:.2}±{:.2}",
            t.task,
            t.top1 as u8,
            t.top5 as u8,
            t.top10 as u8,
            t.successes,
            t.rollouts,
            t.success_rate,
            t.success_se
        );
    }
    Ok(())
}

fn render(args: RenderArgs) -> Outcome {
    let text = fs::read_to_string(&args.trace)
        .map_err(|e| usage(format!("{}: {e}", args.trace.display())))?;
    let tau = TraceFile::parse(&text)
        .and_then(|t| t.to_trajectory())
        .map_err(usage)?;
    if tau.is_empty() {
        return Err(usage("trace has no frames"));
    }
    make_dir(&args.out)?;
    for i in strided_indices(tau.len(), args.stride) {
        write_atomic(
            &args.out.join(format!("frame_{i:04}.svg")),
            &render_state(&tau.states[i]),
        )?;
    }
    if args.summary {
        write_atomic(&args.out.join("summary.svg"), &render_summary(&tau))?;
    }
    Ok(())
}

fn corpus(out: Option<PathBuf>) -> Outcome {
    let text = to_json(&corpus_manifest());
    match out {
        Some(p) => write_atomic(&p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            eprintln!(
                "{}",
                Failure::Usage(e.render().to_string().trim().to_string()).report()
            );
            return ExitCode::from(2);
        }
        Err(e) => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Infer(a) => infer(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Render(a) => render(a),
        Command::Corpus { out } => corpus(out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.report());
            ExitCode::from(f.code())
        }
    }
}
