use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use xlint_core::vis::VisSpec;
use xlint_extract::{Extractor, ExtractorConfig};
use xlint_service::cli::{self, CheckOptions, EXIT_USAGE};
use xlint_service::{router, AppState, Store};

#[derive(Debug, Parser)]
#[command(name = "xlint", version, about = "Check insights about attribution charts")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check insights, one per line, against an explanation table.
    ///
    /// Exits 0 when every insight is supported, 1 when any is refuted, and 2
    /// when any is undetermined, unparseable or incomplete.
    Check {
        /// Explanation table, CSV or JSON.
        #[arg(long)]
        data: PathBuf,
        /// File of insights, or `-` for standard input.
        #[arg(long)]
        insights: PathBuf,
        /// Print one JSON object per insight instead of a text line.
        #[arg(long)]
        json: bool,
        /// Write compiled Vega-Lite views for each insight here.
        #[arg(long)]
        out_specs: Option<PathBuf>,
        /// Chart the insights were read from, as a spec JSON file. Defaults
        /// to the attribution heatmap.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Send sentences outside the controlled language to the model
        /// provider configured through `XLINT_LLM_*` variables.
        #[arg(long)]
        llm: bool,
    },
    /// Run the HTTP API.
    Serve {
        #[arg(long, env = "XLINT_DATA_DIR", default_value = "xlint-data")]
        data_dir: PathBuf,
        #[arg(long, env = "XLINT_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Enable `use_llm` requests with the `XLINT_LLM_*` configuration.
        #[arg(long)]
        llm: bool,
    },
}

fn usage(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("xlint: {message}");
    ExitCode::from(EXIT_USAGE as u8)
}

fn extractor() -> Result<Extractor, String> {
    ExtractorConfig::from_env()
        .and_then(Extractor::new)
        .map_err(|e| format!("model provider configuration: {e}"))
}

fn run_check(
    data: PathBuf,
    insights: PathBuf,
    json: bool,
    out_specs: Option<PathBuf>,
    spec: Option<PathBuf>,
    llm: bool,
) -> ExitCode {
    let table = match cli::read_table(&data) {
        Ok(t) => t,
        Err(e) => return usage(format!("cannot read {}: {e}", data.display())),
    };
    let spec = match spec {
        None => VisSpec::heatmap(data.display().to_string()),
        Some(path) => match std::fs::read(&path).map_err(|e| e.to_string()).and_then(|b| {
            serde_json::from_slice::<VisSpec>(&b).map_err(|e| e.to_string())
        }) {
            Ok(s) => s,
            Err(e) => return usage(format!("cannot read {}: {e}", path.display())),
        },
    };
    let input = match cli::read_input(&insights) {
        Ok(s) => s,
        Err(e) => return usage(format!("cannot read {}: {e}", insights.display())),
    };
    let extractor = match llm.then(extractor).transpose() {
        Ok(x) => x,
        Err(e) => return usage(e),
    };
    let options = CheckOptions {
        spec,
        extractor: extractor.as_ref(),
        out_specs,
    };
    let reports = match cli::check_lines(&input, &table, &options) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("xlint: {e}");
            return ExitCode::from(cli::EXIT_UNRESOLVED as u8);
        }
    };
    for r in &reports {
        if json {
            println!("{}", serde_json::to_string(r).expect("reports serialize"));
        } else {
            println!("{}", r.human());
        }
    }
    ExitCode::from(cli::exit_code(&reports) as u8)
}

async fn serve(data_dir: PathBuf, listen: SocketAddr, llm: bool) -> Result<(), String> {
    let store = Store::open(&data_dir).map_err(|e| format!("cannot open {}: {e}", data_dir.display()))?;
    let extractor = llm.then(extractor).transpose()?.map(Arc::new);
    let app = router(AppState {
        store: Arc::new(store),
        extractor,
    });
    let listener = tokio::net::TcpListener::bind(listen).await.map_err(|e| e.to_string())?;
    tracing::info!(%listen, data_dir = %data_dir.display(), "listening");
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE as u8);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match args.command {
        Command::Check {
            data,
            insights,
            json,
            out_specs,
            spec,
            llm,
        } => run_check(data, insights, json, out_specs, spec, llm),
        Command::Serve { data_dir, listen, llm } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
                )
                .init();
            let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
            match runtime.block_on(serve(data_dir, listen, llm)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => usage(e),
            }
        }
    }
}
