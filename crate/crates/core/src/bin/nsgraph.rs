use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::{Arc, OnceLock};

use clap::{Args, Parser, Subcommand};
use nsgraph::pipeline::{Run, RunConfig, Stage};
use nsgraph::server::{self, Session};
use nsgraph::Error;

#[derive(Parser)]
#[command(name = "nsgraph", version, about = "Neighbor-similarity kNN graph filtering and clustering")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (flat `key = value` file).
    #[arg(long)]
    config: PathBuf,
    /// Replace one configuration entry, e.g. `--override k=10`.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Build the kNN graph and score every edge.
    Build(Common),
    /// Apply the configured edge filter.
    Filter(Common),
    /// Strongly connected components of the filtered graph.
    Scc(Common),
    /// Threshold sweep sort, with optional raster snapshots.
    Sweep(Common),
    /// Recursive normalized-cut partition of the filtered graph.
    Ncut(Common),
    /// Merge ncut clusters and reassign points of small clusters.
    Reassign(Common),
    /// F-measure of the partitions against the dataset labels.
    Eval(Common),
    /// Serve the exploration API over a built run.
    Serve {
        #[command(flatten)]
        common: Common,
        /// Overrides `serve.port`.
        #[arg(long)]
        port: Option<u16>,
        /// Overrides `serve.bind`.
        #[arg(long)]
        bind: Option<String>,
        /// Run directory holding `edges.txt` (overrides `output`).
        #[arg(long)]
        session: Option<PathBuf>,
    },
}

const CONFIG_EXIT: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, common) = match &cli.command {
        Command::Build(c) => (Stage::Build, c),
        Command::Filter(c) => (Stage::Filter, c),
        Command::Scc(c) => (Stage::Scc, c),
        Command::Sweep(c) => (Stage::Sweep, c),
        Command::Ncut(c) => (Stage::Ncut, c),
        Command::Reassign(c) => (Stage::Reassign, c),
        Command::Eval(c) => (Stage::Eval, c),
        Command::Serve { common, .. } => (Stage::Serve, common),
    };
    let mut config = match RunConfig::load(&common.config, &common.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(CONFIG_EXIT);
        }
    };
    let result = match cli.command {
        Command::Serve { port, bind, session, .. } => {
            config.serve_port = port.unwrap_or(config.serve_port);
            config.serve_bind = bind.unwrap_or(config.serve_bind);
            config.output = session.unwrap_or(config.output);
            serve(Run::new(config))
        }
        _ => Run::new(config).run(stage).map(|report| println!("{report}")),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(CONFIG_EXIT)
        }
        Err(e) => {
            eprintln!("error ({stage}): {e}");
            ExitCode::from(stage.exit_code())
        }
    }
}

fn serve(run: Run) -> nsgraph::Result<()> {
    let rt = tokio::runtime::Runtime::new().map_err(|e| Error::io("<runtime>", e))?;
    rt.block_on(async move {
        let addr = format!("{}:{}", run.config.serve_bind, run.config.serve_port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| Error::io(&addr, e))?;
        let local = listener.local_addr().map_err(|e| Error::io(&addr, e))?;
        println!("listening on http://{local}");

        let state = Arc::new(OnceLock::new());
        let loader = {
            let state = Arc::clone(&state);
            tokio::task::spawn_blocking(move || -> nsgraph::Result<()> {
                let session = Session::from_run(&run)?;
                println!("session loaded: {} nodes", session.graph().n());
                let _ = state.set(session);
                Ok(())
            })
        };
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        let server = tokio::spawn(server::serve(listener, state, shutdown));
        loader.await.expect("session loader panicked")?;
        server
            .await
            .expect("server task panicked")
            .map_err(|e| Error::io(local.to_string(), e))
    })
}
