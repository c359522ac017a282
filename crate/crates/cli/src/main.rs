use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use onemap::belief_map::export::Layer;
use onemap::benchmark::{
    build_report, category_targets, generate_episodes, generate_worlds, load_dataset, write_bar_chart,
    write_dataset, write_result_log, Dataset, EpisodeParams, EpisodeResult, Runner,
};
use onemap::config::Config;
use onemap::exploration::trace::{GoalTraceRecord, GoalTraceWriter};
use onemap::observation::Pose2;
use onemap::planning::plan_to_any;
use onemap::snapshot::{write_layer, MapState};

const LAYER_NAMES: [&str; 8] = [
    "similarity",
    "variance",
    "search_variance",
    "observed",
    "explored",
    "searched",
    "navigable",
    "all",
];

#[derive(Parser)]
#[command(name = "onemap", version, about = "Belief-map object search: datasets, runs and map snapshots")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// TOML config; missing keys take their defaults.
    #[arg(long, global = true, env = "ONEMAP_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true, env = "ONEMAP_SEED")]
    seed: Option<u64>,
    /// Worker threads for `run` (0 = all cores).
    #[arg(long, global = true, env = "ONEMAP_JOBS", default_value_t = 0)]
    jobs: usize,
    /// Output file or directory; each command has its own default.
    #[arg(long, global = true, env = "ONEMAP_OUT")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate worlds and episodes.
    Gen,
    /// Run every episode of a dataset and write the result log and report.
    Run {
        /// Dataset directory or its episodes.json.
        #[arg(long)]
        dataset: PathBuf,
        /// Save the final map state of every episode under `states/`.
        #[arg(long)]
        save_states: bool,
        /// Write every goal selection to `goal_trace.jsonl`.
        #[arg(long)]
        trace: bool,
    },
    /// Render a layer of a saved map state.
    Snapshot {
        /// Map state written by `run --save-states`.
        #[arg(long)]
        state: PathBuf,
        /// similarity, variance, search_variance, observed, explored,
        /// searched, navigable, or `all` (writes into the --out directory).
        #[arg(long, default_value = "similarity", value_parser = clap::builder::PossibleValuesParser::new(LAYER_NAMES))]
        layer: String,
        /// Object label for the similarity layer.
        #[arg(long)]
        query: Option<String>,
    },
    /// Print shortest-path lengths for every leg of every episode.
    Oracle {
        #[arg(long)]
        dataset: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let config = load_config(g)?;
    match cli.command {
        Command::Gen => cmd_gen(&config, &out_or(g, "dataset")),
        Command::Run {
            dataset,
            save_states,
            trace,
        } => cmd_run(&config, &dataset, &out_or(g, "results"), g.jobs, save_states, trace),
        Command::Snapshot { state, layer, query } => {
            cmd_snapshot(&config, &state, &layer, query.as_deref(), &out_or(g, "snapshot.png"))
        }
        Command::Oracle { dataset } => cmd_oracle(&config, &dataset, g.out.as_deref()),
    }
}

fn out_or(g: &Global, default: &str) -> PathBuf {
    g.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn load_config(g: &Global) -> Result<Config> {
    let text = match &g.config {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
        None => String::new(),
    };
    let mut config = Config::from_toml_with_env(&text, std::env::vars())?;
    if let Some(seed) = g.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn cmd_gen(config: &Config, out: &Path) -> Result<()> {
    let params = EpisodeParams::from_config(config);
    let worlds = generate_worlds(&config.world, config.dataset.n_worlds, &params, config.seed)?;
    let episodes = generate_episodes(&worlds, config.dataset.n_episodes, &params, config.seed)?;
    let dataset = Dataset { worlds, episodes };
    let path = write_dataset(out, &dataset)?;
    let goals: usize = dataset.episodes.iter().map(|e| e.goals.len()).sum();
    println!(
        "worlds {}  episodes {}  goals {}  -> {}",
        dataset.worlds.len(),
        dataset.episodes.len(),
        goals,
        path.display()
    );
    Ok(())
}

fn cmd_run(config: &Config, dataset: &Path, out: &Path, jobs: usize, save_states: bool, trace: bool) -> Result<()> {
    let data = load_dataset(dataset).with_context(|| format!("loading dataset {}", dataset.display()))?;
    let runner = Runner::new(config)?;
    std::fs::create_dir_all(out)?;
    if save_states {
        std::fs::create_dir_all(out.join("states"))?;
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let mut runs: Vec<(EpisodeResult, Vec<GoalTraceRecord>)> = pool.install(|| {
        data.episodes
            .par_iter()
            .map(|ep| {
                let mut records = Vec::new();
                let run = runner.run_episode_traced(&data.worlds[ep.world], ep, &mut |r| {
                    if trace {
                        records.push(r);
                    }
                })?;
                if save_states {
                    let state = MapState {
                        map: run.map,
                        occupancy: run.occupancy,
                        agent_radius: config.planning.agent_radius,
                    };
                    state.save(&out.join(format!("states/episode_{:06}.state", ep.episode_id)))?;
                }
                Ok((run.result, records))
            })
            .collect::<Result<_>>()
    })?;
    runs.sort_by_key(|(r, _)| r.episode_id);

    let results: Vec<EpisodeResult> = runs.iter().map(|(r, _)| r.clone()).collect();
    let mut log = BufWriter::new(File::create(out.join("results.jsonl"))?);
    write_result_log(&mut log, &results)?;
    log.flush()?;
    if trace {
        let mut w = GoalTraceWriter::new(BufWriter::new(File::create(out.join("goal_trace.jsonl"))?));
        for record in runs.iter().flat_map(|(_, t)| t) {
            w.write(record)?;
        }
        w.into_inner().flush()?;
    }

    let report = build_report(&results)?;
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    write_bar_chart(&out.join("per_object.png"), &report.per_object)?;
    match &report.metrics {
        Some(m) => println!(
            "episodes {}  SR {:.3}  SPL {:.3}  PR {:.3}  PPL {:.3}  -> {}",
            m.episodes,
            m.sr,
            m.spl,
            m.pr,
            m.ppl,
            out.display()
        ),
        None => println!("episodes 0 (empty dataset)  -> {}", out.display()),
    }
    Ok(())
}

fn cmd_snapshot(config: &Config, state: &Path, layer: &str, query: Option<&str>, out: &Path) -> Result<()> {
    let state = MapState::load(state).with_context(|| format!("loading {}", state.display()))?;
    let runner = Runner::new(config)?;
    let query = match query {
        Some(label) => Some((label, runner.codebook().embed_text(label)?)),
        None => None,
    };
    let x = &config.exploration;
    let layers: Vec<Layer> = if layer == "all" {
        std::fs::create_dir_all(out)?;
        Layer::ALL
            .iter()
            .copied()
            .filter(|&l| l != Layer::Similarity || query.is_some())
            .collect()
    } else {
        vec![Layer::parse(layer).context("unknown layer")?]
    };
    for l in layers {
        let image = if layer == "all" {
            out.join(format!("{}.png", l.name()))
        } else {
            out.to_path_buf()
        };
        if l == Layer::Similarity && query.is_none() {
            bail!("the similarity layer needs --query");
        }
        write_layer(&state, l, query, x.tau_e, x.tau_c, &image)?;
        println!("{}", image.display());
    }
    Ok(())
}

fn cmd_oracle(config: &Config, dataset: &Path, out: Option<&Path>) -> Result<()> {
    let data = load_dataset(dataset).with_context(|| format!("loading dataset {}", dataset.display()))?;
    let mut sink: Box<dyn Write> = match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    for ep in &data.episodes {
        let world = &data.worlds[ep.world];
        let grid = world.grid();
        let nav = world.true_navigable(config.planning.agent_radius);
        let mut from = grid
            .cell_at(ep.start.x, ep.start.y)
            .with_context(|| format!("episode {} starts outside its world", ep.episode_id))?;
        for (index, category) in ep.goals.iter().enumerate() {
            let targets = category_targets(world, &nav, category, config.agent.success_radius);
            let path = plan_to_any(&nav, from, &targets, world.cell_size)
                .with_context(|| format!("episode {} goal {index} ({category})", ep.episode_id))?;
            let (x, y) = grid.center(path.goal());
            let line = serde_json::json!({
                "episode_id": ep.episode_id,
                "object_index": index,
                "category": category,
                "oracle_path_length": path.length,
                "goal": Pose2::new(x, y, 0.0),
            });
            writeln!(sink, "{line}")?;
            from = path.goal();
        }
    }
    sink.flush()?;
    Ok(())
}
