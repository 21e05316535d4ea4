//! `fdsteer`: run models headless, serve sessions, export trace files.

use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use fdsteer::lang::{parse_goal, parse_model, Model};
use fdsteer::models;
use fdsteer::protocol::{
    decode_engine, encode_engine_into, EngineMessage, Server, StreamValidator,
};
use fdsteer::session::{Session, SessionOptions, SessionState, SnapshotMode, Tee};
use fdsteer::tree::{export_with, ExportOptions, Format, LayoutKind, SearchTree, TreeRecorder};

const DEFAULT_PORT: u16 = 4717;

#[derive(Debug, Parser)]
#[command(
    name = "fdsteer",
    version,
    about = "Interactive finite-domain constraint workbench"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute goals headlessly and write the frame stream.
    Run(RunArgs),
    /// Serve sessions over the line protocol and WebSocket.
    Serve(ServeArgs),
    /// Render a trace file.
    Export(ExportArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Snapshot {
    Size,
    Interval,
    Values,
}

impl From<Snapshot> for SnapshotMode {
    fn from(s: Snapshot) -> Self {
        match s {
            Snapshot::Size => SnapshotMode::SizeOnly,
            Snapshot::Interval => SnapshotMode::Intervals,
            Snapshot::Values => SnapshotMode::FullValues,
        }
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    /// Model file, or a bundled model name (`sendmore`, `queens`).
    #[arg(value_name = "MODEL")]
    path: Option<PathBuf>,
    #[arg(long = "model", value_name = "PATH", conflicts_with = "path")]
    model: Option<PathBuf>,
    /// Board size of the bundled queens model.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_enum, default_value = "size")]
    snapshot: Snapshot,
    /// Record failed value trials as retracted leaves.
    #[arg(long)]
    trace_failures: bool,
}

impl ModelArgs {
    fn options(&self) -> SessionOptions {
        SessionOptions {
            trace_failures: self.trace_failures,
            snapshot_mode: self.snapshot.into(),
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Comma-separated goals: button numbers, button names or goal text;
    /// `all-buttons` runs every button in order.
    #[arg(long, value_name = "LIST")]
    goals: Option<String>,
    /// Backtrack after the last goal until it has no more solutions.
    #[arg(long)]
    all_solutions: bool,
    /// Frame stream output.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    #[command(flatten)]
    export: RenderArgs,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, env = "FDSTEER_PORT", default_value_t = DEFAULT_PORT)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long, value_parser = parse_layout)]
    layout: Option<LayoutKind>,
    #[arg(long, value_parser = parse_format, requires = "layout")]
    format: Option<Format>,
    /// Rendering output; standard output when absent.
    #[arg(long, value_name = "PATH", requires = "layout")]
    out: Option<PathBuf>,
    /// Fixed-width tree width and treemap side.
    #[arg(long, default_value_t = ExportOptions::default().width)]
    width: f64,
}

#[derive(Debug, Args)]
struct ExportArgs {
    /// Trace file, one frame per line.
    trace: PathBuf,
    #[command(flatten)]
    render: RenderArgs,
}

fn parse_layout(s: &str) -> Result<LayoutKind, String> {
    s.parse()
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

/// A failure and its exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

type Outcome<T> = Result<T, Failure>;

trait Code<T> {
    fn code(self, code: u8) -> Outcome<T>;
}

impl<T, E: Into<anyhow::Error>> Code<T> for Result<T, E> {
    fn code(self, code: u8) -> Outcome<T> {
        self.map_err(|e| Failure {
            code,
            error: e.into(),
        })
    }
}

const SOLVE: u8 = 1;
const IO: u8 = 2;
const BIND: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let r = match cli.command {
        Command::Run(a) => run(a),
        Command::Serve(a) => serve(a),
        Command::Export(a) => export(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("fdsteer: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load_model(args: &ModelArgs) -> Outcome<Model> {
    let Some(path) = args.path.as_ref().or(args.model.as_ref()) else {
        return parse_model("").code(SOLVE);
    };
    if path.exists() {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .code(IO)?;
        return parse_model(&text)
            .with_context(|| format!("{}", path.display()))
            .code(SOLVE);
    }
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    models::bundled(name, args.n)
        .ok_or_else(|| anyhow!("{}: no such file or bundled model", path.display()))
        .code(IO)
}

/// Splits on commas outside brackets and quotes.
fn split_goals(list: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let (mut depth, mut quoted) = (0i32, false);
    for c in list.chars() {
        match c {
            '"' => quoted = !quoted,
            '(' | '[' if !quoted => depth += 1,
            ')' | ']' if !quoted => depth -= 1,
            ',' if !quoted && depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur);
    out.into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

fn goal_texts(
    list: &str,
    session: &Session<impl fdsteer::session::EventSink>,
) -> Outcome<Vec<String>> {
    let buttons = session.buttons();
    if list == "all-buttons" {
        return Ok(buttons.iter().map(ToString::to_string).collect());
    }
    split_goals(list)
        .into_iter()
        .map(|item| {
            if let Ok(i) = item.parse::<usize>() {
                return buttons
                    .get(i.wrapping_sub(1))
                    .map(ToString::to_string)
                    .ok_or_else(|| anyhow!("no button {i}; the model has {}", buttons.len()))
                    .code(SOLVE);
            }
            if let Some(b) = buttons.iter().find(|b| b.functor() == item) {
                return Ok(b.to_string());
            }
            Ok(item)
        })
        .collect()
}

fn render(tree: &SearchTree, args: &RenderArgs) -> Outcome<()> {
    let Some(layout) = args.layout else {
        return Ok(());
    };
    let opts = ExportOptions {
        width: args.width,
        ..ExportOptions::default()
    };
    let doc = export_with(tree, layout, args.format.unwrap_or(Format::Svg), &opts).code(SOLVE)?;
    match &args.out {
        Some(p) => fs::write(p, doc)
            .with_context(|| format!("writing {}", p.display()))
            .code(IO),
        None => io::stdout().write_all(doc.as_bytes()).code(IO),
    }
}

fn run(args: RunArgs) -> Outcome<()> {
    let model = load_model(&args.model)?;
    let sink = Tee(Vec::new(), TreeRecorder::default());
    let mut session = Session::new(&model, sink, args.model.options()).code(SOLVE)?;
    let goals = match &args.goals {
        Some(list) => goal_texts(list, &session)?,
        None => Vec::new(),
    };
    let mut failed = None;
    for g in &goals {
        let goal = parse_goal(g)
            .with_context(|| format!("goal `{g}`"))
            .code(SOLVE)?;
        let r = session
            .execute(&goal)
            .with_context(|| format!("goal `{g}`"));
        match r.code(SOLVE)? {
            fdsteer::session::Outcome::Failure => {
                println!("no: {g}");
                failed.get_or_insert(g.clone());
            }
            _ => log::debug!("executed {g}"),
        }
    }
    if args.all_solutions {
        while session.state() == SessionState::AtSuccess {
            if session.backtrack().code(SOLVE)? != fdsteer::session::Outcome::Success {
                break;
            }
        }
    }
    let Tee(frames, recorder) = session.into_sink();
    if let Some(e) = recorder.error {
        return Err(anyhow!("engine stream is not a tree: {e}")).code(SOLVE);
    }
    if let Some(path) = &args.trace {
        write_trace(path, &frames)?;
    }
    let tree = recorder.tree;
    summarize(&frames, &tree);
    render(&tree, &args.export)
}

fn write_trace(path: &Path, frames: &[EngineMessage]) -> Outcome<()> {
    let mut text = String::new();
    for f in frames {
        encode_engine_into(f, &mut text).code(SOLVE)?;
    }
    fs::write(path, text)
        .with_context(|| format!("writing {}", path.display()))
        .code(IO)
}

fn summarize(frames: &[EngineMessage], tree: &SearchTree) {
    let mut seen = HashSet::new();
    for n in tree.nodes().filter(|n| n.solution) {
        if seen.insert(n.label.as_str()) {
            println!("solution: {}", n.label);
        }
    }
    let first = frames.iter().position(|f| *f == EngineMessage::Success);
    let undone = frames[..first.unwrap_or(frames.len())]
        .iter()
        .filter(|f| matches!(f, EngineMessage::UndoNode { .. }))
        .count();
    let plural = if seen.len() == 1 { "" } else { "s" };
    match first {
        Some(_) => println!(
            "{} solution{plural}, {undone} undo-node before first success",
            seen.len()
        ),
        None => println!("0 solutions, {undone} undo-node"),
    }
    let calls = tree
        .nodes()
        .filter(|n| n.kind == fdsteer::tree::NodeKind::Call)
        .count();
    println!(
        "nodes: {} ({calls} call, {} success)",
        tree.len(),
        tree.len() - calls
    );
}

fn serve(args: ServeArgs) -> Outcome<()> {
    let model = load_model(&args.model)?;
    let options = args.model.options();
    let server = Server::bind(
        (args.host.as_str(), args.port),
        Arc::new(move |sink| Session::new(&model, sink, options.clone())),
    )
    .with_context(|| format!("binding {}:{}", args.host, args.port))
    .code(BIND)?;
    let addr = server.local_addr().code(IO)?;
    log::info!("serving on {addr} (line protocol and WebSocket)");
    server.run().code(IO)
}

fn export(args: ExportArgs) -> Outcome<()> {
    if args.render.layout.is_none() {
        return Err(anyhow!("export needs --layout")).code(SOLVE);
    }
    let text = fs::read_to_string(&args.trace)
        .with_context(|| format!("reading {}", args.trace.display()))
        .code(IO)?;
    let name = args.trace.display();
    let mut validator = StreamValidator::new();
    let mut tree = SearchTree::new();
    for (i, line) in text.split_inclusive('\n').enumerate() {
        let frame = i + 1;
        if !line.ends_with('\n') {
            return Err(anyhow!("{name}: frame {frame}: truncated (no line end)")).code(SOLVE);
        }
        let msg = decode_engine(line)
            .map_err(|e| anyhow!("{name}: frame {frame}: {e}"))
            .code(SOLVE)?;
        validator
            .feed(&msg)
            .map_err(|e| anyhow!("{name}: frame {frame}: {}", e.message))
            .code(SOLVE)?;
        tree.apply_event(&msg)
            .map_err(|e| anyhow!("{name}: frame {frame}: {e}"))
            .code(SOLVE)?;
    }
    render(&tree, &args.render)
}
