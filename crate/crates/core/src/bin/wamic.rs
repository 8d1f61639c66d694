use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wamic::driver::{self, Status};
use wamic::pipeline::{EmitLevel, PipelineConfig};
use wamic::Error;

#[derive(Parser)]
#[command(name = "wamic", version, about = "Compile region IR to WebAssembly text and execute it")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Lower to the requested level and write IR or WAT.
    Compile(Common),
    /// Compile, then execute the entry function in the Wasm interpreter.
    Run(Common),
    /// Execute the input under the IR oracle and its compilation under the
    /// Wasm interpreter, and compare every observable.
    DiffExec(Common),
    /// Print instruction statistics of the emitted module.
    Stats(Common),
}

#[derive(Args)]
struct Common {
    /// Input files; several are processed in parallel.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "wat")]
    emit: EmitLevel,
    /// Comma-separated pass list replacing the default pipeline.
    #[arg(long, value_delimiter = ',')]
    pipeline: Option<Vec<String>>,
    #[arg(long)]
    no_opt: bool,
    #[arg(long, num_args = 0..=1, default_value = "true", default_missing_value = "true", action = clap::ArgAction::Set)]
    builtin_alloc: bool,
    #[arg(long, num_args = 0..=1, default_value = "true", default_missing_value = "true", action = clap::ArgAction::Set)]
    alloca_as_alloc: bool,
    /// Record call events and print (or write with -o) the execution trace.
    #[arg(long)]
    trace: bool,
    #[arg(long, default_value = "main")]
    invoke: String,
    /// Argument for the entry function; repeat for several.
    #[arg(long = "arg", allow_hyphen_values = true)]
    args: Vec<String>,
    #[arg(long)]
    json: bool,
    /// With `stats`, also report the pipeline without stack-local fusion.
    #[arg(long)]
    compare_unfused: bool,
    /// Output path; with several inputs, a directory.
    #[arg(short = 'o')]
    output: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<PipelineConfig, String> {
        let mut cfg = PipelineConfig {
            passes: self.pipeline.clone(),
            emit: self.emit,
            no_opt: self.no_opt,
            builtin_alloc: self.builtin_alloc,
            alloca_as_alloc: self.alloca_as_alloc,
            trace: self.trace,
            invoke: self.invoke.clone(),
            ..PipelineConfig::default()
        };
        if let Ok(v) = std::env::var("WAMIC_HEAP_RESERVE") {
            cfg.heap_reserve = v.trim().parse().map_err(|_| format!("WAMIC_HEAP_RESERVE: `{v}` is not a byte count"))?;
        }
        Ok(cfg)
    }

    /// Where output for `input` goes, if anywhere but stdout.
    fn out_path(&self, input: &Path, ext: &str) -> Option<PathBuf> {
        let o = self.output.as_ref()?;
        if self.inputs.len() == 1 {
            return Some(o.clone());
        }
        Some(o.join(input.file_stem().unwrap_or_default()).with_extension(ext))
    }
}

/// What one input produced: text for stdout, text for stderr, and a status.
struct Job {
    stdout: String,
    stderr: String,
    status: Status,
}

impl Job {
    /// Every compile-time or setup error is a diagnostic; traps never get here.
    fn failed(e: Error) -> Job {
        Job { stdout: String::new(), stderr: format!("{e}\n"), status: Status::Diagnostics }
    }
}

fn write_out(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes") + "\n"
}

fn compile_one(c: &Common, cfg: &PipelineConfig, path: &Path, src: &str) -> Result<Job, Error> {
    let name = path.display().to_string();
    let m = driver::parse(src, &name)?;
    let compiled = wamic::pipeline::compile(m, cfg)?;
    if let Some(w) = &compiled.wasm {
        let diags = wamic::interp::validate_wasm(w);
        if !diags.is_empty() {
            return Err(Error::Diagnostics(diags));
        }
    }
    let mut text = compiled.render(cfg.emit);
    if !text.ends_with('\n') {
        text.push('\n');
    }
    let ext = if cfg.emit == EmitLevel::Wat && compiled.wasm.is_some() { "wat" } else { "mir" };
    match c.out_path(path, ext) {
        Some(p) => {
            write_out(&p, &text)?;
            Ok(Job { stdout: String::new(), stderr: String::new(), status: Status::Ok })
        }
        None => Ok(Job { stdout: text, stderr: String::new(), status: Status::Ok }),
    }
}

fn run_one(c: &Common, cfg: &PipelineConfig, path: &Path, src: &str) -> Result<Job, Error> {
    let (mut report, outcome) = driver::run_source(src, &path.display().to_string(), cfg, &c.args)?;
    let mut extra = String::new();
    if c.trace {
        let trace = outcome.render_trace();
        match c.out_path(path, "trace") {
            Some(p) => {
                write_out(&p, &trace)?;
                report.trace = Some(p.display().to_string());
            }
            None => extra = trace,
        }
    }
    let status = report.status();
    let stderr = report.run.trap.as_ref().map(|t| format!("trap: {t}\n")).unwrap_or_default();
    let body = if c.json { json(&report) } else { report.render() };
    Ok(Job { stdout: body + &extra, stderr, status })
}

fn diff_one(c: &Common, cfg: &PipelineConfig, path: &Path, src: &str) -> Result<Job, Error> {
    let name = path.display().to_string();
    let d = driver::diff_exec_source(src, &name, cfg, &c.args)?;
    #[derive(serde::Serialize)]
    struct Out<'a> {
        file: &'a str,
        agree: bool,
        mismatch: Option<String>,
        oracle: wamic::interp::RunSummary,
        wasm: wamic::interp::RunSummary,
    }
    let out = Out {
        file: &name,
        agree: d.mismatch.is_none(),
        mismatch: d.mismatch.as_ref().map(|m| m.to_string()),
        oracle: d.oracle.summary(),
        wasm: d.wasm.summary(),
    };
    let mut text = if c.json {
        json(&out)
    } else {
        match &out.mismatch {
            None => format!("{name}: agree ({} oracle steps, {} wasm steps)\n", out.oracle.steps, out.wasm.steps),
            Some(m) => format!("{name}: MISMATCH: {m}\n"),
        }
    };
    if c.trace && !c.json {
        text += &format!("-- oracle trace\n{}-- wasm trace\n{}", d.oracle.render_trace(), d.wasm.render_trace());
    }
    Ok(Job { stdout: text, stderr: String::new(), status: d.status() })
}

fn stats_one(c: &Common, cfg: &PipelineConfig, path: &Path, src: &str) -> Result<Job, Error> {
    let r = driver::stats_source(src, &path.display().to_string(), cfg, c.compare_unfused)?;
    let text = if c.json { json(&r) } else { r.render() };
    Ok(Job { stdout: text, stderr: String::new(), status: Status::Ok })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (Cmd::Compile(c) | Cmd::Run(c) | Cmd::DiffExec(c) | Cmd::Stats(c)) = &cli.cmd;
    let cfg = match c.config() {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Status::Diagnostics.code() as u8);
        }
    };
    let step: fn(&Common, &PipelineConfig, &Path, &str) -> Result<Job, Error> = match &cli.cmd {
        Cmd::Compile(_) => compile_one,
        Cmd::Run(_) => run_one,
        Cmd::DiffExec(_) => diff_one,
        Cmd::Stats(_) => stats_one,
    };
    let jobs = driver::map_jobs(&c.inputs, |path| {
        std::fs::read_to_string(path)
            .map_err(|e| Error::Pipeline(format!("{}: {e}", path.display())))
            .and_then(|src| step(c, &cfg, path, &src))
            .unwrap_or_else(Job::failed)
    });
    let mut worst = Status::Ok;
    for j in jobs {
        print!("{}", j.stdout);
        eprint!("{}", j.stderr);
        worst = worst.max(j.status);
    }
    ExitCode::from(worst.code() as u8)
}
