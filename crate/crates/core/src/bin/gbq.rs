use std::path::PathBuf;
use std::process::ExitCode;

use gbq::experiments::{run_experiment, write_run, Experiment, ExperimentConfig};
use gbq::Error;

const USAGE: &str = "usage: gbq <simulate|acl-check|drift-scaling|growth-study|strichartz-check|convergence> \
--config <path> [--key value ...] --out <dir>";

struct Args {
    experiment: Experiment,
    config: PathBuf,
    out: PathBuf,
    overrides: Vec<(String, String)>,
}

fn parse_args(argv: &[String]) -> Result<Args, Error> {
    let usage = |m: &str| Error::Config(format!("{m}\n{USAGE}"));
    let (first, rest) = argv.split_first().ok_or_else(|| usage("missing experiment"))?;
    let experiment: Experiment = first.parse()?;
    let mut config = None;
    let mut out = None;
    let mut overrides = Vec::new();
    let mut it = rest.iter();
    while let Some(flag) = it.next() {
        let key = flag
            .strip_prefix("--")
            .ok_or_else(|| usage(&format!("unexpected argument `{flag}`")))?;
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| usage(&format!("`--{key}` needs a value")))?;
                (key.to_string(), v.clone())
            }
        };
        match key.as_str() {
            "config" => config = Some(PathBuf::from(value)),
            "out" => out = Some(PathBuf::from(value)),
            _ => overrides.push((key, value)),
        }
    }
    Ok(Args {
        experiment,
        config: config.ok_or_else(|| usage("missing --config"))?,
        out: out.ok_or_else(|| usage("missing --out"))?,
        overrides,
    })
}

fn fail(e: &Error) -> ExitCode {
    let reason = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
    eprintln!("{reason}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    if argv.iter().any(|a| a == "--help" || a == "-h") || argv.is_empty() {
        println!("{USAGE}");
        return if argv.is_empty() { ExitCode::from(2) } else { ExitCode::SUCCESS };
    }
    if argv.iter().any(|a| a == "--version") {
        println!("gbq {}", env!("CARGO_PKG_VERSION"));
        return ExitCode::SUCCESS;
    }
    let args = match parse_args(&argv) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let result = ExperimentConfig::load(&args.config, &args.overrides).and_then(|mut cfg| {
        let source = cfg.apply_seed_env()?;
        let out = run_experiment(args.experiment, &cfg, source)?;
        let dir = write_run(&args.out, &out)?;
        Ok((out, dir))
    });
    let (out, dir) = match result {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    for w in &out.record.warnings {
        eprintln!("warning: {w}");
    }
    for c in &out.record.criteria {
        println!("{}", c.line());
    }
    println!("{}", dir.display());
    if out.record.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
