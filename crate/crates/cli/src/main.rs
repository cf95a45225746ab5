//! `fluidc`: compile, simulate, verify, place and pattern fluidic circuits,
//! run the agent pipeline, or serve the HTTP API.

use std::fs;
use std::io::Read;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context, Result};
use clap::{Args, Parser, Subcommand};
use fluidc_agents::pipeline::PipelineConfig;
use fluidc_agents::{run_project, ProjectStore, TransportConfig};
use fluidc_core::layout::SaConfig;
use fluidc_core::patterns::{ShapeKind, ShapeRequest};
use fluidc_core::simulator::{self, SimConfig, Stimulus};
use fluidc_core::verifier::InspectOptions;
use fluidc_server::api::{self, CircuitSource, CompileRequest, LayoutRequest, VerifyRequest};
use fluidc_server::{ApiError, ServerConfig};
use serde_json::Value;

#[derive(Parser)]
#[command(name = "fluidc", version, about = "Fluidic circuit toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse FC-HDL text into a netlist.
    Compile {
        /// Circuit file, or `-` for stdin.
        input: String,
        /// Also write the bare netlist JSON here.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a stimulus against a circuit and print the trace.
    Simulate {
        /// FC-HDL text or netlist JSON; `-` for stdin.
        netlist: String,
        /// JSON list of `{t, net, v}` input events.
        #[arg(long)]
        stimulus: PathBuf,
        #[arg(long)]
        until: f64,
        #[command(flatten)]
        sim: SimFlags,
        /// Print only change events, not per-tick samples.
        #[arg(long)]
        events_only: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Check a circuit against a truth table or temporal spec.
    Verify {
        netlist: String,
        /// Truth table `{inputs, outputs, rows}` or temporal `{stimulus, expect}`.
        #[arg(long)]
        spec: PathBuf,
        #[command(flatten)]
        sim: SimFlags,
    },
    /// Place operators by simulated annealing.
    Layout {
        netlist: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Independent seeded runs; the cheapest wins.
        #[arg(long, default_value_t = 1)]
        restarts: usize,
        /// JSON file with annealing parameters; `--seed` overrides its seed.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Heat-seal pattern for an inflatable actuator.
    Pattern {
        /// bend, fold, sphere or cylinder.
        shape: String,
        #[arg(long)]
        length: Option<f64>,
        #[arg(long)]
        width: Option<f64>,
        #[arg(long)]
        angle: Option<f64>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        height: Option<f64>,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Run the agent pipeline on a project directory.
    Design {
        #[arg(long)]
        project: PathBuf,
        /// Replay recorded responses from this fixture directory.
        #[arg(long, conflicts_with = "endpoint")]
        mock: Option<PathBuf>,
        /// Base URL of a chat-completions API.
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long, default_value = "gpt-4o")]
        model: String,
        /// Env var holding the API token.
        #[arg(long, default_value = "FLUIDC_API_KEY")]
        token_env: String,
        /// Pipeline settings JSON.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Serve the HTTP and WebSocket API.
    Serve {
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "FLUIDC_PROJECTS", default_value = "projects")]
        projects_dir: PathBuf,
        /// Idle session lifetime in seconds.
        #[arg(long, default_value_t = 1800)]
        session_ttl: u64,
        /// Env var holding a bearer token that clients must present.
        #[arg(long)]
        auth_token_env: Option<String>,
    },
}

#[derive(Args)]
struct SimFlags {
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    time_scale: Option<f64>,
}

impl SimFlags {
    fn config(&self) -> SimConfig {
        let mut c = SimConfig::default();
        if let Some(dt) = self.dt {
            c.dt = dt;
        }
        if let Some(s) = self.time_scale {
            c.time_scale = s;
        }
        c
    }
}

/// Bad invocation or unreadable input; exits with 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

/// Domain check that ran but did not pass; exits with 1.
#[derive(Debug)]
struct Failed(String);

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<Usage>().is_some() {
        return 2;
    }
    match err.downcast_ref::<ApiError>() {
        Some(e) if matches!(e.code, "syntax_error" | "bad_request" | "spec_error") => 2,
        Some(e) if e.status.as_u16() == 400 => 2,
        _ => 1,
    }
}

fn read_input(path: &str) -> Result<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| usage(format!("reading stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| usage(format!("reading {path}: {e}")))
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = read_input(&path.to_string_lossy())?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Netlist JSON (bare or as emitted by `compile`) or FC-HDL text.
fn circuit_source(path: &str) -> Result<CircuitSource> {
    let text = read_input(path)?;
    if text.trim_start().starts_with('{') {
        let mut v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{path}: {e}")))?;
        if let Some(inner) = v.get_mut("netlist") {
            v = inner.take();
        }
        Ok(CircuitSource {
            circuit: None,
            netlist: Some(v),
        })
    } else {
        Ok(CircuitSource {
            circuit: Some(text),
            netlist: None,
        })
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).unwrap());
}

fn report(err: &ApiError) {
    eprintln!("error: {}", err.message);
    if let Some(offset) = err.detail.get("offset").and_then(Value::as_u64) {
        eprintln!("  at byte offset {offset}");
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Compile { input, output } => {
            let circuit = read_input(&input)?;
            let body = api::compile(&CompileRequest { circuit })?;
            if let Some(path) = output {
                write_file(&path, &serde_json::to_string_pretty(&body["netlist"])?)?;
            }
            print_json(&body);
            let errors: Vec<&Value> = body["diagnostics"]
                .as_array()
                .into_iter()
                .flatten()
                .filter(|d| d["severity"] == "error")
                .collect();
            for d in body["diagnostics"].as_array().into_iter().flatten() {
                eprintln!("{}: {}", d["severity"].as_str().unwrap_or("note"), d["message"].as_str().unwrap_or(""));
            }
            if !errors.is_empty() {
                return Err(usage(format!("{} validation error(s)", errors.len())));
            }
        }
        Command::Simulate {
            netlist,
            stimulus,
            until,
            sim,
            events_only,
            output,
        } => {
            let netlist = circuit_source(&netlist)?.resolve()?;
            let stim: Stimulus = serde_json::from_value(read_json(&stimulus)?)
                .map_err(|e| usage(format!("{}: {e}", stimulus.display())))?;
            let trace = simulator::run(&netlist, &stim, until, sim.config()).map_err(ApiError::from)?;
            let body = if events_only {
                serde_json::json!({"events": trace.events})
            } else {
                serde_json::to_value(&trace)?
            };
            if let Some(path) = output {
                write_file(&path, &body.to_string())?;
            }
            print_json(&body);
        }
        Command::Verify { netlist, spec, sim } => {
            let source = circuit_source(&netlist)?;
            let spec_value = read_json(&spec)?;
            let options = InspectOptions {
                sim: sim.config(),
                ..InspectOptions::default()
            };
            let mut req = VerifyRequest {
                source,
                spec: None,
                temporal: None,
                options,
            };
            let bad = |e: serde_json::Error| usage(format!("{}: {e}", spec.display()));
            if spec_value.get("expect").is_some() {
                req.temporal = Some(serde_json::from_value(spec_value).map_err(bad)?);
            } else {
                req.spec = Some(serde_json::from_value(spec_value).map_err(bad)?);
            }
            let body = api::verify(&req)?;
            print_json(&body);
            if !api::verify_passed(&body) {
                let findings = body
                    .get("findings")
                    .cloned()
                    .unwrap_or_else(|| body.get("truth_table_findings").cloned().unwrap_or_default());
                for f in findings.as_array().into_iter().flatten() {
                    eprintln!("finding: {}", f["message"].as_str().unwrap_or(&f.to_string()));
                }
                return Err(Failed("verification failed".into()).into());
            }
        }
        Command::Layout {
            netlist,
            seed,
            restarts,
            config,
            output,
            svg,
        } => {
            let mut sa_config: SaConfig = match config {
                Some(path) => serde_json::from_value(read_json(&path)?)
                    .map_err(|e| usage(format!("{}: {e}", path.display())))?,
                None => SaConfig::default(),
            };
            sa_config.seed = seed;
            let req = LayoutRequest {
                source: circuit_source(&netlist)?,
                sa_config,
                restarts,
                svg: svg.is_some(),
            };
            let mut body = api::layout(&req)?;
            if let Some(path) = svg {
                let drawing = body.as_object_mut().unwrap().remove("svg").unwrap_or_default();
                write_file(&path, drawing.as_str().unwrap_or_default())?;
            }
            if let Some(path) = output {
                write_file(&path, &serde_json::to_string_pretty(&body)?)?;
            }
            print_json(&body);
        }
        Command::Pattern {
            shape,
            length,
            width,
            angle,
            radius,
            height,
            svg,
        } => {
            let shape: ShapeKind = serde_json::from_value(Value::String(shape.to_lowercase()))
                .map_err(|_| usage(format!("unknown shape `{shape}`; expected bend, fold, sphere or cylinder")))?;
            let body = api::pattern(&ShapeRequest {
                shape,
                radius,
                height,
                length,
                width,
                angle,
            })?;
            if let Some(path) = svg {
                write_file(&path, body["svg"].as_str().unwrap_or_default())?;
            }
            print_json(&body);
        }
        Command::Design {
            project,
            mock,
            endpoint,
            model,
            token_env,
            config,
        } => {
            let mut cfg: PipelineConfig = match config {
                Some(path) => serde_json::from_value(read_json(&path)?)
                    .map_err(|e| usage(format!("{}: {e}", path.display())))?,
                None => PipelineConfig::default(),
            };
            if let Some(dir) = mock {
                cfg.transport = Some(TransportConfig::Mock { dir });
            } else if let Some(base_url) = endpoint {
                cfg.transport = Some(TransportConfig::Http {
                    base_url,
                    model,
                    token_env,
                    temperature: None,
                    timeout_secs: 120,
                });
            }
            let transport_cfg = cfg
                .transport
                .clone()
                .ok_or_else(|| usage("give --mock, --endpoint, or a config with a transport"))?;
            let name = project
                .file_name()
                .ok_or_else(|| usage("--project must name a directory"))?
                .to_string_lossy()
                .into_owned();
            let root = project.parent().map(Path::to_path_buf).unwrap_or_default();
            let root = if root.as_os_str().is_empty() { PathBuf::from(".") } else { root };
            if !project.is_dir() {
                return Err(usage(format!("{} is not a directory", project.display())));
            }
            let store = ProjectStore::new(&root);
            let transport = transport_cfg.build().map_err(ApiError::from)?;
            let artifacts = run_project(&store, &name, &cfg, transport.as_ref()).map_err(ApiError::from)?;
            print_json(&serde_json::to_value(&artifacts)?);
            if !artifacts.computation.accepted {
                return Err(Failed("no candidate reached the acceptance score".into()).into());
            }
        }
        Command::Serve {
            host,
            port,
            projects_dir,
            session_ttl,
            auth_token_env,
        } => {
            let addr: SocketAddr = format!("{host}:{port}")
                .parse()
                .map_err(|e| usage(format!("bad listen address {host}:{port}: {e}")))?;
            let config = ServerConfig {
                projects_dir,
                session_ttl: Duration::from_secs(session_ttl),
                auth_token_env,
                ..ServerConfig::default()
            };
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(fluidc_server::serve(addr, config))
                .map_err(|e| anyhow!("server stopped: {e}"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            match err.downcast_ref::<ApiError>() {
                Some(api) => report(api),
                None => eprintln!("error: {err:#}"),
            }
            ExitCode::from(exit_code(&err))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(&usage("x")), 2);
        assert_eq!(exit_code(&Failed("x".into()).into()), 1);
        let syntax = api::compile(&CompileRequest {
            circuit: "NOT(A B; C)".into(),
        })
        .unwrap_err();
        assert_eq!(exit_code(&syntax.into()), 2);
        let infeasible = ApiError::new(fluidc_server::ApiError::not_found("").status, "placement_infeasible", "");
        assert_eq!(exit_code(&infeasible.into()), 1);
    }
}
