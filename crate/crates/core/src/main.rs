use std::net::{SocketAddr, TcpListener};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use dualarm::contingency::{Difficulty, OutcomeTable};
use dualarm::harness::{self, EvalConfig, LoadedSuite};
use dualarm::kinematics::Embodiment;
use dualarm::planner::{planner_from_name, serve_planner, Planner};
use dualarm::proprio::{train_quantizer, TrainConfig};
use dualarm::protocol::{serve, Registry};
use dualarm::tasks::{generate_task_suite, SuiteConfig, SuiteManifest, SuiteScene};

#[derive(Parser)]
#[command(name = "dualarm", version, about = "Dual-arm household simulator and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Robot {
    H1,
    X1,
}

impl From<Robot> for Embodiment {
    fn from(r: Robot) -> Embodiment {
        match r {
            Robot::H1 => Embodiment::H1,
            Robot::X1 => Embodiment::X1,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Level {
    Easy,
    Medium,
    Hard,
}

impl From<Level> for Difficulty {
    fn from(l: Level) -> Difficulty {
        match l {
            Level::Easy => Difficulty::Easy,
            Level::Medium => Difficulty::Medium,
            Level::Hard => Difficulty::Hard,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Host episodes over the line-delimited JSON protocol.
    Serve {
        #[arg(long, default_value_t = 7878)]
        port: u16,
        #[arg(long)]
        scenes: PathBuf,
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        outcome_table: Option<PathBuf>,
        #[arg(long)]
        slow_motion: bool,
    },
    /// Run every suite task for a number of trials and write reports.
    Eval {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, value_enum)]
        robot: Robot,
        #[arg(long, value_enum, default_value = "easy")]
        difficulty: Level,
        #[arg(long, default_value = "oracle-dual")]
        planner: String,
        #[arg(long, default_value_t = harness::DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        outcome_table: Option<PathBuf>,
        /// Run episodes on a protocol server instead of in process.
        #[arg(long)]
        server: Option<SocketAddr>,
    },
    /// Generate task files and a suite manifest from scene files.
    GenSuite {
        #[arg(long, required = true, num_args = 1..)]
        scenes: Vec<PathBuf>,
        /// Manifest path; task files go to a `tasks` directory beside it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 12)]
        dual_essential: usize,
        #[arg(long, default_value_t = 12)]
        dual_optional: usize,
        #[arg(long, default_value_t = 12)]
        single_arm: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Fit the motion quantizer on trajectories recorded from oracle episodes.
    TrainQuantizer {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long, value_enum, default_value = "h1")]
        robot: Robot,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Host a built-in planner for `--planner remote:<addr>`.
    PlanServe {
        #[arg(long, default_value_t = 7979)]
        port: u16,
        #[arg(long, default_value = "oracle-dual")]
        planner: String,
    },
}

fn load_table(path: Option<&Path>) -> Result<Option<Arc<OutcomeTable>>> {
    let Some(p) = path else { return Ok(None) };
    let txt = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
    Ok(Some(Arc::new(OutcomeTable::from_json(&txt)?)))
}

fn factory(name: &str) -> Result<impl Fn() -> Box<dyn Planner> + Send + Sync + 'static> {
    planner_from_name(name).ok_or_else(|| anyhow!("unknown planner {name}"))?;
    let name = name.to_string();
    Ok(move || planner_from_name(&name).expect("planner name checked"))
}

fn relative(path: &Path, base: &Path) -> String {
    path.strip_prefix(base).unwrap_or(path).to_string_lossy().into_owned()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Serve { port, scenes, tasks, outcome_table, slow_motion } => {
            let reg = Registry::from_dirs(&scenes, &tasks, outcome_table.as_deref())?.with_slow_motion(slow_motion);
            let listener = TcpListener::bind(("127.0.0.1", port))?;
            eprintln!("listening on {}", listener.local_addr()?);
            serve(listener, Arc::new(reg))?;
        }
        Command::Eval { suite, robot, difficulty, planner, trials, seed, out, outcome_table, server } => {
            if trials == 0 {
                bail!("--trials must be at least 1");
            }
            let loaded = LoadedSuite::load(&suite)?;
            let table = load_table(outcome_table.as_deref())?;
            let make = factory(&planner)?;
            let cfg = EvalConfig { robot: robot.into(), difficulty: difficulty.into(), planner, trials, seed, server };
            let report = harness::evaluate(&loaded, &cfg, &make, table)?;
            for path in harness::write_reports(&report, &out)? {
                eprintln!("wrote {}", path.display());
            }
            for c in &report.categories {
                println!("{:<15} {:>4}/{:<4} {:.3}", c.category.name(), c.successes, c.episodes, c.success_rate);
            }
            let h = report.failure_histogram;
            println!("overall         {:.3}", report.success_rate);
            println!("failures        navigation {} body_adjustment {} logical {}", h.navigation, h.body_adjustment, h.logical);
        }
        Command::GenSuite { scenes, out, dual_essential, dual_optional, single_arm, seed } => {
            let loaded = scenes.iter().map(|p| SuiteScene::load(p)).collect::<Result<Vec<_>, _>>()?;
            let config = SuiteConfig::new(dual_essential, dual_optional, single_arm);
            let tasks = generate_task_suite(&loaded, &config, seed)?;
            let base = out.parent().map(Path::to_path_buf).unwrap_or_default();
            let task_dir = base.join("tasks");
            std::fs::create_dir_all(&task_dir)?;
            let mut task_files = Vec::new();
            for t in &tasks {
                let path = task_dir.join(format!("{}.task.json", t.id));
                std::fs::write(&path, serde_json::to_string_pretty(t)? + "\n")?;
                task_files.push(relative(&path, &base));
            }
            let manifest = SuiteManifest {
                seed,
                config,
                scenes: scenes.iter().map(|p| relative(p, &base)).collect(),
                tasks: task_files,
            };
            std::fs::write(&out, serde_json::to_string_pretty(&manifest)? + "\n")?;
            eprintln!("wrote {} tasks and {}", tasks.len(), out.display());
        }
        Command::TrainQuantizer { suite, robot, out, epochs, seed } => {
            let loaded = LoadedSuite::load(&suite)?;
            let mut dataset = Vec::new();
            for (i, task) in loaded.tasks.iter().enumerate() {
                let world = loaded.scene(&task.scene)?.world(robot.into());
                let mut planner = planner_from_name("oracle-dual").expect("built-in planner");
                dataset.extend(harness::record_motion(world, task, planner.as_mut(), Difficulty::Easy, seed + i as u64)?);
            }
            if dataset.is_empty() {
                bail!("no arm motion recorded from the suite");
            }
            let cfg = TrainConfig { epochs, seed, ..TrainConfig::default() };
            let trained = train_quantizer(&dataset, &cfg)?;
            std::fs::write(&out, serde_json::to_string_pretty(&trained)? + "\n")?;
            let last = trained.loss_history.last().copied().unwrap_or(f64::NAN);
            eprintln!("{} trajectories, final loss {last:.6}, wrote {}", dataset.len(), out.display());
        }
        Command::PlanServe { port, planner } => {
            let make = factory(&planner)?;
            let listener = TcpListener::bind(("127.0.0.1", port))?;
            eprintln!("planner {planner} on {}", listener.local_addr()?);
            serve_planner(listener, make)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
