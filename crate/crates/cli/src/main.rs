use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use forge_api::{
    AgentKind, EpisodeRequest, FoldRequest, RenderRequest, ScoreRequest, TargetSpec, ValidateRequest, VerdictStatus,
    View,
};
use forge_client::ForgeClient;
use forge_core::kernel::{CreasePattern, PAPER_SIZE};
use forge_core::library::{load_library, script_lines};
use forge_core::taskgen::{build_sequence, generate_instances, parse_script, write_bundle, SequenceConfig, Variant};
use forge_server::{AppState, ServerConfig};

#[derive(Parser)]
#[command(name = "forge", version, about = "Flat-folding origami environment")]
struct Cli {
    /// Service to talk to; without it an in-process service is started.
    #[arg(long, global = true, env = "FORGE_SERVER")]
    server: Option<String>,
    /// TOML config for `serve` and for the in-process service.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ViewArg {
    Cp,
    Front,
    Back,
}

impl From<ViewArg> for View {
    fn from(v: ViewArg) -> Self {
        match v {
            ViewArg::Cp => View::CreasePattern,
            ViewArg::Front => View::Front,
            ViewArg::Back => View::Back,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AgentArg {
    Scripted,
    Random,
    Null,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Associative,
    Causal,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Check whether a pattern folds flat.
    Validate { fold: PathBuf },
    /// Render a pattern to PNG.
    Render {
        fold: PathBuf,
        #[arg(long, value_enum, default_value = "front")]
        view: ViewArg,
        #[arg(long)]
        size: Option<u32>,
        /// Defaults to `<fold stem>-<view>.png` next to the input.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Apply an action script (one command per line) and print the FOLD result.
    Fold {
        fold: PathBuf,
        #[arg(long)]
        script: PathBuf,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Geometric (and, with a scorer, semantic) similarity of two patterns.
    Score { result: PathBuf, target: PathBuf },
    /// Run a whole episode against a target pattern.
    Episode {
        #[arg(long)]
        target: PathBuf,
        #[arg(long, value_enum, default_value = "scripted")]
        agent: AgentArg,
        #[arg(long)]
        max_steps: Option<usize>,
        /// Scripted agent commands; defaults to the `.jsonl` next to the target.
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the full episode record here as JSON.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Build multiple-choice task bundles from a design directory.
    Tasks {
        #[arg(long)]
        designs: PathBuf,
        #[arg(long, default_value_t = 255)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "both")]
        variant: VariantArg,
        #[arg(long, default_value_t = 512)]
        size: u32,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        addr: Option<String>,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<ServerConfig> {
    Ok(match path {
        Some(p) => ServerConfig::load(p)?,
        None => ServerConfig::default(),
    })
}

async fn client(cli: &Cli) -> Result<ForgeClient> {
    if let Some(url) = &cli.server {
        return Ok(ForgeClient::new(url.clone()));
    }
    let state = Arc::new(AppState::new(load_config(cli.config.as_deref())?)?);
    let (addr, _task) = forge_server::spawn("127.0.0.1:0", state).await?;
    Ok(ForgeClient::new(format!("http://{addr}")))
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[tokio::main]
async fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Serve { addr } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let config = load_config(cli.config.as_deref())?;
            let addr = addr.clone().unwrap_or_else(|| config.addr.clone());
            let state = Arc::new(AppState::new(config)?);
            let listener = tokio::net::TcpListener::bind(&addr).await?;
            eprintln!("listening on http://{}", listener.local_addr()?);
            forge_server::serve(listener, state).await?;
        }
        Command::Validate { fold } => {
            let req = ValidateRequest {
                fold: read(fold)?,
                solver: None,
            };
            let resp = client(&cli).await?.validate(&req).await?;
            print_json(&resp)?;
            if resp.status != VerdictStatus::Valid {
                std::process::exit(1);
            }
        }
        Command::Render { fold, view, size, out } => {
            let view_name = match view {
                ViewArg::Cp => "cp",
                ViewArg::Front => "front",
                ViewArg::Back => "back",
            };
            let req = RenderRequest {
                fold: read(fold)?,
                view: (*view).into(),
                size: *size,
            };
            let png = client(&cli).await?.render_png(&req).await?;
            let out = out.clone().unwrap_or_else(|| {
                let stem = fold
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                fold.with_file_name(format!("{stem}-{view_name}.png"))
            });
            std::fs::write(&out, png).with_context(|| format!("writing {}", out.display()))?;
            println!("{}", out.display());
        }
        Command::Fold { fold, script, out } => {
            let req = FoldRequest {
                base: Some(read(fold)?),
                script: script_lines(&read(script)?),
            };
            let resp = client(&cli).await?.fold(&req).await?;
            match out {
                Some(p) => std::fs::write(p, &resp.fold).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{}", resp.fold),
            }
        }
        Command::Score { result, target } => {
            let req = ScoreRequest {
                result: read(result)?,
                target: read(target)?,
            };
            print_json(&client(&cli).await?.score(&req).await?)?;
        }
        Command::Episode {
            target,
            agent,
            max_steps,
            script,
            seed,
            out,
        } => {
            let script = match (agent, script) {
                (AgentArg::Scripted, Some(p)) => Some(script_lines(&read(p)?)),
                (AgentArg::Scripted, None) => {
                    let sibling = target.with_extension("jsonl");
                    if !sibling.is_file() {
                        bail!("scripted agent needs --script (no {} found)", sibling.display());
                    }
                    Some(script_lines(&read(&sibling)?))
                }
                _ => None,
            };
            let req = EpisodeRequest {
                target: TargetSpec::inline(read(target)?),
                agent: match agent {
                    AgentArg::Scripted => AgentKind::Scripted,
                    AgentArg::Random => AgentKind::Random,
                    AgentArg::Null => AgentKind::Null,
                },
                script,
                seed: *seed,
                max_steps: *max_steps,
            };
            let resp = client(&cli).await?.episode(&req).await?;
            if let Some(p) = out {
                std::fs::write(p, serde_json::to_string_pretty(&resp.record)?)
                    .with_context(|| format!("writing {}", p.display()))?;
            }
            print_json(&resp.score)?;
        }
        Command::Tasks {
            designs,
            count,
            seed,
            variant,
            size,
            out,
        } => {
            let env = load_config(cli.config.as_deref())?.env;
            let config = SequenceConfig {
                solver: env.solver,
                style: env.style,
                image_size: *size,
            };
            let base = CreasePattern::new_blank(PAPER_SIZE).to_fold()?;
            let mut sequences = Vec::new();
            for d in load_library(designs)? {
                let Some(lines) = &d.script else { continue };
                let actions = parse_script(lines).with_context(|| d.id.clone())?;
                sequences.push(build_sequence(&d.id, &actions, &base, &config).with_context(|| d.id.clone())?);
            }
            let variants: &[Variant] = match variant {
                VariantArg::Associative => &[Variant::Associative],
                VariantArg::Causal => &[Variant::Causal],
                VariantArg::Both => &[Variant::Associative, Variant::Causal],
            };
            let instances = generate_instances(&sequences, variants, *count, *seed)?;
            let index = write_bundle(out, &instances, &sequences)?;
            println!("{}", index.display());
        }
    }
    Ok(())
}
