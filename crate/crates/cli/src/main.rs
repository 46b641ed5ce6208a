mod args;
mod commands;

use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde_json::{json, Value};

use args::{Cli, Command};
use commands::Report;

const OUTPUT_DIR_ENV: &str = "CELLIA_OUTPUT_DIR";

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io { path: PathBuf, source: io::Error },
    Core(cellia::Error),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 4,
            _ => 3,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "invalid_config",
            CliError::Io { .. } => "io",
            CliError::Core(e) if e.is_numerical() => "numerical",
            CliError::Core(_) => "invalid_input",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => f.write_str(m),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<cellia::Error> for CliError {
    fn from(e: cellia::Error) -> Self {
        CliError::Core(e)
    }
}

fn load_config(path: &Path) -> Result<(Command, Option<PathBuf>), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let out = match value.as_object_mut().and_then(|o| o.remove("output")) {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(other) => {
            return Err(CliError::Config(format!(
                "\"output\" must be a path string, got {other}"
            )))
        }
    };
    let command = serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((command, out))
}

fn execute(command: &Command) -> Result<Report, CliError> {
    match command {
        Command::Graph(a) => commands::graph(a),
        Command::Run(a) => commands::run(a),
        Command::Certify(a) => commands::certify(a),
        Command::Bound(a) => commands::bound(a),
        Command::Table(a) => commands::table(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Oracle(a) => commands::oracle(a),
    }
}

fn destination(out: Option<PathBuf>, command: &Command, extension: &str) -> Option<PathBuf> {
    out.or_else(|| {
        std::env::var_os(OUTPUT_DIR_ENV).map(|dir| Path::new(&dir).join(format!("{}.{extension}", command.name())))
    })
}

fn emit(report: &Report, target: Option<PathBuf>) -> Result<(), CliError> {
    match target {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
            }
            fs::write(&path, &report.body).map_err(|e| CliError::io(&path, e))?;
            log::info!("wrote {}", path.display());
            Ok(())
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(report.body.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn fail(command: Option<&str>, err: &CliError) -> ExitCode {
    let code = err.exit_code();
    log::error!("{err}");
    let block = json!({
        "status": "error",
        "command": command,
        "exit_code": code,
        "kind": err.kind(),
        "message": err.to_string(),
    });
    if let Ok(text) = commands::canonical_json(&block) {
        print!("{text}");
    }
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();

    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    let (command, out) = match (&cli.config, cli.command) {
        (Some(path), None) => match load_config(path) {
            Ok((command, file_out)) => (command, cli.out.or(file_out)),
            Err(e) => return fail(None, &e),
        },
        (Some(_), Some(_)) => {
            return fail(
                None,
                &CliError::Config("--config cannot be combined with a subcommand".into()),
            );
        }
        (None, Some(command)) => (command, cli.out),
        (None, None) => {
            return fail(None, &CliError::Config("no subcommand given; see --help".into()));
        }
    };

    let report = match execute(&command) {
        Ok(r) => r,
        Err(e) => return fail(Some(command.name()), &e),
    };
    let target = destination(out, &command, report.extension);
    if let Err(e) = emit(&report, target) {
        return fail(Some(command.name()), &e);
    }
    if report.certified {
        ExitCode::SUCCESS
    } else {
        log::warn!("alignment certificate failed");
        ExitCode::from(2)
    }
}
