use std::fmt::Display;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use camsearch::agents::{run_batch, task_ids, AgentConfig, AgentKind};
use camsearch::config::Config;
use camsearch::env::{Action, EnvConfig, EnvHandle, Session};
use camsearch::metrics::{aggregate, read_transcripts, to_csv, write_transcripts, Transcript};
use camsearch::protocol::{run_external, serve_tcp, Endpoint};
use camsearch::sttg::build_sttg;
use camsearch::synth::{generate_world, inject_anomalies, AnomalySpec};
use camsearch::taskgen::{gen_track, TaskSet};
use camsearch::world::load_world;
use camsearch::{io, Sttg, Topology};

#[derive(Parser)]
#[command(name = "camsearch", version, about = "Interactive multi-camera person search toolkit")]
struct Cli {
    /// JSON config overriding stage defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic world.
    GenWorld {
        #[arg(long)]
        topology: Option<String>,
        #[arg(long)]
        persons: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 0)]
        time_reversals: usize,
        #[arg(long, default_value_t = 0)]
        slow_transits: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the transition graph of a world.
    BuildSttg {
        #[arg(long)]
        world: PathBuf,
        /// Topology name or file; defaults to the world's topology.
        #[arg(long)]
        topology: Option<String>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the labeling report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate tasks for one track, or all three.
    GenTasks {
        #[arg(long, value_parser = ["1", "2", "3", "all"])]
        track: String,
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        sttg: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an agent over a task file and write NDJSON transcripts.
    Run {
        #[arg(long)]
        tasks: PathBuf,
        /// oracle, greedy, rule-based, random-order, or external.
        #[arg(long)]
        agent: String,
        /// For external agents: tcp://HOST:PORT or a command line.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_temporal: bool,
        #[arg(long)]
        track: Option<u8>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Host tasks for external agents over TCP.
    Serve {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long)]
        max_clients: Option<usize>,
        /// Append each client's transcripts here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a transcript file.
    Score {
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Act as the agent on one task over stdin/stdout.
    Play {
        #[arg(long)]
        tasks: PathBuf,
        #[arg(long)]
        task: String,
    },
}

struct CliError {
    kind: &'static str,
    msg: String,
}

trait Ctx<T> {
    fn ctx(self, kind: &'static str) -> Result<T, CliError>;
}

impl<T, E: Display> Ctx<T> for Result<T, E> {
    fn ctx(self, kind: &'static str) -> Result<T, CliError> {
        self.map_err(|e| CliError {
            kind,
            msg: e.to_string(),
        })
    }
}

fn fail<T>(kind: &'static str, msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError { kind, msg: msg.into() })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({"error": e.kind, "message": e.msg.replace('\n', " ")});
            eprintln!("{line}");
            ExitCode::FAILURE
        }
    }
}

fn load_tasks(path: &PathBuf) -> Result<TaskSet, CliError> {
    TaskSet::load(path).ctx("tasks")
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p).ctx("config")?,
        None => Config::default(),
    };
    match cli.cmd {
        Cmd::GenWorld {
            topology,
            persons,
            seed,
            time_reversals,
            slow_transits,
            out,
        } => {
            let mut w = cfg.world.clone();
            if let Some(t) = topology {
                w.topology = t;
            }
            if let Some(n) = persons {
                w.n_persons = n;
            }
            if let Some(s) = seed {
                w.seed = s;
            }
            let mut world = generate_world(&w).ctx("world")?;
            if time_reversals + slow_transits > 0 {
                let spec = AnomalySpec {
                    n_time_reversals: time_reversals,
                    n_slow_transits: slow_transits,
                };
                world = inject_anomalies(&world, spec, w.seed).ctx("world")?.0;
            }
            world.save(&out).ctx("io")?;
            println!("{} persons, {} cameras -> {}", world.gallery.len(), world.cameras.len(), out.display());
        }
        Cmd::BuildSttg {
            world,
            topology,
            out,
            report,
        } => {
            let world = load_world(&world).ctx("world")?;
            let topo = Topology::resolve(topology.as_deref().unwrap_or(&world.topology_name)).ctx("topology")?;
            let (sttg, rep) = build_sttg(&world, &topo, &cfg.sttg).ctx("sttg")?;
            sttg.save(&out).ctx("io")?;
            if let Some(r) = report {
                io::write_canonical(&r, &rep).ctx("io")?;
            }
            println!(
                "{} transitions, {} edges, {} zones -> {}",
                rep.transitions,
                sttg.edges.len(),
                sttg.zones.len(),
                out.display()
            );
        }
        Cmd::GenTasks {
            track,
            world,
            sttg,
            seed,
            out,
        } => {
            let world = load_world(&world).ctx("world")?;
            let sttg = Sttg::load(&sttg).ctx("sttg")?;
            let mut g = cfg.taskgen.clone();
            if let Some(s) = seed {
                g.seed = s;
            }
            let tracks: Vec<u8> = match track.as_str() {
                "all" => vec![1, 2, 3],
                t => vec![t.parse().ctx("usage")?],
            };
            let mut tasks = Vec::new();
            for t in tracks {
                tasks.extend(gen_track(&world, &sttg, t, &g).ctx("taskgen")?);
            }
            let set = TaskSet::new(&world, Some(&sttg), g.seed, tasks);
            set.save(&out).ctx("io")?;
            println!("{} tasks -> {}", set.tasks.len(), out.display());
        }
        Cmd::Run {
            tasks,
            agent,
            endpoint,
            seed,
            no_temporal,
            track,
            jobs,
            out,
        } => {
            let set = load_tasks(&tasks)?;
            let ids = task_ids(&set, track);
            if ids.is_empty() {
                return fail("tasks", "no tasks selected");
            }
            let ts: Vec<Transcript> = if agent == "external" {
                let Some(ep) = endpoint else {
                    return fail("usage", "--agent external needs --endpoint");
                };
                run_external(&Endpoint::parse(&ep), &set, &ids, &cfg.env).ctx("protocol")?
            } else {
                let Some(kind) = AgentKind::parse(&agent) else {
                    return fail("usage", format!("unknown agent `{agent}`"));
                };
                let mut a = AgentConfig::new(kind);
                a.seed = seed;
                a.temporal_first = !no_temporal;
                let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().ctx("runtime")?;
                pool.install(|| run_batch(&set, &ids, &a, &cfg.env)).ctx("env")?
            };
            write_transcripts(&out, &ts).ctx("io")?;
            let ok = ts.iter().filter(|t| t.success()).count();
            println!("{ok}/{} correct -> {}", ts.len(), out.display());
        }
        Cmd::Serve {
            tasks,
            port,
            max_clients,
            out,
        } => {
            let set = load_tasks(&tasks)?;
            let addr = format!("127.0.0.1:{port}");
            eprintln!("serving {} tasks on {addr}", set.tasks.len());
            let mut all: Vec<Transcript> = Vec::new();
            let mut io_err = None;
            serve_tcp(&addr, &set, &cfg.env, max_clients, |ts| {
                all.extend(ts);
                if let Some(p) = &out {
                    if let Err(e) = write_transcripts(p, &all) {
                        io_err = Some(e);
                    }
                }
            })
            .ctx("protocol")?;
            if let Some(e) = io_err {
                return fail("io", e.to_string());
            }
        }
        Cmd::Score {
            transcripts,
            format,
            out,
        } => {
            let ts = read_transcripts(&transcripts).ctx("transcripts")?;
            let text = match format {
                Format::Table => aggregate(&ts).ctx("metrics")?.to_table(),
                Format::Json => aggregate(&ts).ctx("metrics")?.to_canonical_json(),
                Format::Csv => to_csv(&ts),
            };
            match out {
                Some(p) => std::fs::write(&p, text).ctx("io")?,
                None => print!("{text}"),
            }
        }
        Cmd::Play { tasks, task } => play(&load_tasks(&tasks)?, &task, &cfg.env)?,
    }
    Ok(())
}

const PLAY_HELP: &str = "actions: dist | records | zones | ask ATTR | ask-where | temporal | \
filter ATTR VALUE | location CAM [CAM..] | predict ID | help | quit (or one JSON action per line)";

/// Shorthand used by `play`; anything starting with `{` is read as JSON.
fn parse_play(line: &str) -> Result<Option<Action>, String> {
    let line = line.trim();
    if line.starts_with('{') {
        return serde_json::from_str(line).map(Some).map_err(|e| e.to_string());
    }
    let (head, rest) = line.split_once(' ').unwrap_or((line, ""));
    let rest = rest.trim();
    Ok(Some(match head {
        "dist" => Action::QueryGalleryDistribution,
        "records" => Action::QueryGalleryRecords,
        "zones" => Action::GetZoneStructure,
        "ask" if !rest.is_empty() => Action::ask(rest),
        "ask-where" => Action::ask_spatial(),
        "temporal" => Action::CheckTemporal,
        "filter" => {
            let (attr, value) = rest.split_once(' ').ok_or("usage: filter ATTR VALUE")?;
            let value = value.trim();
            let value = if value.contains(" and ") {
                camsearch::AttrValue::multi(value.split(" and ").map(str::trim))
            } else {
                camsearch::AttrValue::single(value)
            };
            Action::FilterByAttribute {
                attribute: attr.to_string(),
                value,
            }
        }
        "location" => Action::FilterByLocation {
            cameras: rest.split_whitespace().map(String::from).collect(),
        },
        "predict" => Action::Predict {
            person: rest.parse().map_err(|_| "usage: predict ID")?,
            ranking: Vec::new(),
        },
        "quit" | "exit" => return Ok(None),
        _ => return Err(PLAY_HELP.to_string()),
    }))
}

fn play(set: &TaskSet, task: &str, env: &EnvConfig) -> Result<(), CliError> {
    let mut session = Session::new(set, task, env.clone()).ctx("env")?.with_agent_name("human");
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let view = session.view().clone();
    writeln!(out, "task {} (track {}), {} candidates, budget {}", view.task_id, view.track, view.candidates.len(), view.budget).ctx("io")?;
    for u in &view.dialogue {
        writeln!(out, "  {:?}: {}", u.speaker, u.text).ctx("io")?;
    }
    writeln!(out, "{PLAY_HELP}").ctx("io")?;
    let stdin = std::io::stdin();
    for line in stdin.lock().lines() {
        let line = line.ctx("io")?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_play(&line) {
            Ok(None) => break,
            Ok(Some(a)) => match session.step(&a) {
                Ok(o) => writeln!(out, "{}", camsearch::protocol::compact_json(&o)).ctx("io")?,
                Err(e) => writeln!(out, "error: {e}").ctx("io")?,
            },
            Err(msg) => writeln!(out, "{msg}").ctx("io")?,
        }
        out.flush().ctx("io")?;
        if session.done() {
            break;
        }
    }
    let t = session.transcript();
    writeln!(out, "{}", camsearch::protocol::compact_json(&t)).ctx("io")?;
    Ok(())
}
