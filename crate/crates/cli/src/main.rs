//! `metta`: REPL and script runner.

use std::fs;
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use metta_core::interp::{Interpreter, Trace, DEFAULT_FUEL};
use metta_core::matcher::{match_pattern, transform};
use metta_core::{Expression, SpaceError};

#[derive(Debug, Parser)]
#[command(name = "metta", version, about = "Evaluate MeTTa programs over a metagraph space")]
struct Cli {
    /// Space file loaded before anything else. May be repeated.
    #[arg(long = "space", value_name = "PATH")]
    spaces: Vec<PathBuf>,
    /// Evaluation budget per query.
    #[arg(long, default_value_t = DEFAULT_FUEL as u64, value_parser = clap::value_parser!(u64).range(1..))]
    fuel: u64,
    /// Write trace events here, one JSON object per line.
    #[arg(long, value_name = "PATH")]
    trace: Option<PathBuf>,
    /// Evaluate every `(@ ...)` root of this script and exit.
    #[arg(long, value_name = "SCRIPT")]
    run: Option<PathBuf>,
}

const EXIT_EVAL: u8 = 1;
const EXIT_PARSE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut interp = Interpreter::new();
    for path in &cli.spaces {
        if let Err(code) = load_file(&mut interp, path) {
            return code;
        }
    }
    let mut session = Session {
        interp,
        fuel: cli.fuel as usize,
        trace_path: cli.trace.clone(),
        tracing: cli.trace.is_some(),
        trace_out: String::new(),
    };
    let code = match &cli.run {
        Some(script) => session.run(script),
        None => session.repl(),
    };
    if let Err(e) = session.flush_trace() {
        eprintln!("error: {e}");
        return ExitCode::from(EXIT_EVAL);
    }
    code
}

fn load_file(interp: &mut Interpreter, path: &PathBuf) -> Result<(), ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_PARSE)
    })?;
    interp.load(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(EXIT_PARSE)
    })
}

struct Session {
    interp: Interpreter,
    fuel: usize,
    trace_path: Option<PathBuf>,
    tracing: bool,
    trace_out: String,
}

impl Session {
    fn run(&mut self, script: &PathBuf) -> ExitCode {
        if let Err(code) = load_file(&mut self.interp, script) {
            return code;
        }
        let mut failed = false;
        let mut out = io::stdout().lock();
        for id in self.interp.activated_roots() {
            let expr = self.interp.space().lift(id).expect("activated roots are finite");
            match self.eval(&expr) {
                Ok(results) => {
                    for r in results {
                        let _ = writeln!(out, "{r}");
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    failed = true;
                }
            }
        }
        if failed {
            ExitCode::from(EXIT_EVAL)
        } else {
            ExitCode::SUCCESS
        }
    }

    fn eval(&mut self, expr: &Expression) -> Result<Vec<Expression>, String> {
        if !self.tracing {
            return self.interp.eval(expr, self.fuel).map_err(|e| e.to_string());
        }
        let run = self.interp.run_with_trace(expr, self.fuel).map_err(|e| e.to_string())?;
        self.emit_trace(&run.trace);
        Ok(run.results)
    }

    fn emit_trace(&mut self, trace: &Trace) {
        if self.trace_path.is_some() {
            self.trace_out.push_str(&trace.to_jsonl());
        } else {
            eprint!("{}", trace.to_jsonl());
        }
    }

    fn flush_trace(&self) -> io::Result<()> {
        match &self.trace_path {
            Some(p) => fs::write(p, &self.trace_out),
            None => Ok(()),
        }
    }

    fn repl(&mut self) -> ExitCode {
        let stdin = io::stdin();
        let interactive = stdin.is_terminal();
        let mut lines = stdin.lock().lines();
        let mut buffer = String::new();
        loop {
            if interactive {
                print!("{}", if buffer.is_empty() { "metta> " } else { "...    " });
                let _ = io::stdout().flush();
            }
            let Some(Ok(line)) = lines.next() else { break };
            buffer.push_str(&line);
            buffer.push('\n');
            if depth(&buffer) > 0 {
                continue;
            }
            let input = std::mem::take(&mut buffer);
            let input = input.trim();
            if input.is_empty() {
                continue;
            }
            match self.handle(input) {
                Ok(Flow::Continue) => {}
                Ok(Flow::Quit) => return ExitCode::SUCCESS,
                Err(msg) => eprintln!("error: {msg}"),
            }
        }
        ExitCode::SUCCESS
    }

    fn handle(&mut self, input: &str) -> Result<Flow, String> {
        let Some(directive) = input.strip_prefix('!').filter(|_| !input.starts_with("!enrich")) else {
            self.interp.load(input).map_err(|e| e.to_string())?;
            return Ok(Flow::Continue);
        };
        let (name, rest) = directive.split_once(char::is_whitespace).unwrap_or((directive, ""));
        let rest = rest.trim();
        let mut out = io::stdout().lock();
        match name {
            "quit" => return Ok(Flow::Quit),
            "eval" => {
                let expr = self.parse_one(rest)?;
                for r in self.eval(&expr)? {
                    let _ = writeln!(out, "{r}");
                }
            }
            "match" => {
                let pattern = self.parse_one(rest)?;
                for m in match_pattern(self.interp.space(), &pattern) {
                    let _ = writeln!(out, "{}", m.bindings);
                }
            }
            "transform" => {
                let exprs = self.parse_many(rest)?;
                let [p, t] = exprs.as_slice() else {
                    return Err("!transform expects a pattern and a template".into());
                };
                for r in transform(self.interp.space(), p, t).map_err(|e| e.to_string())? {
                    let _ = writeln!(out, "{r}");
                }
            }
            "dump" => {
                if rest.is_empty() {
                    return Err("!dump expects a path".into());
                }
                let text = self.interp.space().dump().map_err(|e| e.to_string())?;
                fs::write(rest, text).map_err(|e| format!("{rest}: {e}"))?;
            }
            "trace" => match rest {
                "on" => self.tracing = true,
                "off" => self.tracing = false,
                _ => return Err("!trace expects on or off".into()),
            },
            _ => return Err(format!("unknown directive !{name}")),
        }
        Ok(Flow::Continue)
    }

    fn parse_many(&self, text: &str) -> Result<Vec<Expression>, String> {
        self.interp
            .reader()
            .parse_all(text)
            .map_err(|e| SpaceError::from(e).to_string())
    }

    fn parse_one(&self, text: &str) -> Result<Expression, String> {
        let mut exprs = self.parse_many(text)?;
        match exprs.len() {
            1 => Ok(exprs.remove(0)),
            n => Err(format!("expected one expression, found {n}")),
        }
    }
}

enum Flow {
    Continue,
    Quit,
}

/// Open parentheses left unclosed in `text`, skipping strings and comments.
fn depth(text: &str) -> i64 {
    let mut depth = 0;
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            '"' => {
                while let Some(c) = chars.next() {
                    match c {
                        '\\' => {
                            chars.next();
                        }
                        '"' => break,
                        _ => {}
                    }
                }
            }
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            _ => {}
        }
    }
    depth
}
