use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use jamgame::harness::{
    run_check, run_oracle_and_simulate, run_simulate, run_solve, run_sweep, SOLVE_COLUMNS,
};
use jamgame::scenario::{parse_scenario, ScenarioFile, SweepParam, SweepSpec};
use jamgame::Error;

const EXIT_VALIDATION: u8 = 2;
const EXIT_ASSUMPTION: u8 = 3;
const EXIT_VERDICT: u8 = 4;

/// Saddle points of the channel-switching jamming game.
#[derive(Parser)]
#[command(name = "jamgame", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one scenario; prints a report and writes a CSV row.
    Solve(Common),
    /// Sweep tau or the state scale; writes one CSV row per point.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// tau | state-scale
        #[arg(long = "sweep-param", default_value = "tau")]
        param: String,
        /// lo,hi
        #[arg(long = "sweep-range", value_parser = parse_range)]
        range: (f64, f64),
        #[arg(long = "sweep-points", default_value_t = 30)]
        points: usize,
    },
    /// Check the solver against the grid oracle and a Monte Carlo run.
    Oracle(Common),
    /// Monte Carlo simulation at the saddle point.
    Simulate(Common),
    /// Assumption checks only.
    Check(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    /// Output file; defaults to `<JAMGAME_OUT_DIR>/<command>.{csv,txt}` when the
    /// variable is set, standard output otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long = "u-grid")]
    u_grid: Option<usize>,
    #[arg(long = "p-grid")]
    p_grid: Option<usize>,
    #[arg(long = "out-dir", env = "JAMGAME_OUT_DIR", hide_env_values = true)]
    out_dir: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(',').ok_or("expected lo,hi")?;
    let lo = lo.trim().parse::<f64>().map_err(|e| format!("lo: {e}"))?;
    let hi = hi.trim().parse::<f64>().map_err(|e| format!("hi: {e}"))?;
    Ok((lo, hi))
}

impl Common {
    fn load(&self) -> Result<ScenarioFile, Error> {
        let text = fs::read_to_string(&self.scenario)?;
        let mut s = parse_scenario(&text)?;
        if let Some(seed) = self.seed {
            s.mc.seed = seed;
        }
        if let Some(trials) = self.trials {
            s.mc.trials = trials;
        }
        if let Some(u) = self.u_grid {
            s.solver.u_grid = u;
        }
        if let Some(p) = self.p_grid {
            s.solver.p_grid = p;
        }
        s.validate()?;
        Ok(s)
    }

    fn target(&self, command: &str, ext: &str) -> Option<PathBuf> {
        self.out.clone().or_else(|| {
            self.out_dir
                .as_ref()
                .map(|d| d.join(format!("{command}.{ext}")))
        })
    }
}

fn emit(target: Option<&Path>, body: &str) -> Result<(), Error> {
    match target {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(path, body)?;
            eprintln!("wrote {}", path.display());
        }
        None => stdout(body),
    }
    Ok(())
}

/// Writes to standard output, tolerating a closed pipe.
fn stdout(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Solve(c) => {
            let s = c.load()?;
            let out = run_solve(&s)?;
            let csv = format!("{SOLVE_COLUMNS}\n{}\n", out.csv_row());
            stdout(&out.to_text());
            match c.target("solve", "csv") {
                Some(path) => emit(Some(&path), &csv)?,
                None => stdout(&format!("\n{csv}")),
            }
            Ok(if out.assumptions.passed() {
                0
            } else {
                EXIT_ASSUMPTION
            })
        }
        Command::Sweep {
            common,
            param,
            range,
            points,
        } => {
            let s = common.load()?;
            let spec = SweepSpec::new(param.parse::<SweepParam>()?, range.0, range.1, points)?;
            let table = run_sweep(&s, &spec)?;
            emit(common.target("sweep", "csv").as_deref(), &table.to_csv())?;
            Ok(0)
        }
        Command::Oracle(c) => {
            let s = c.load()?;
            let (_, v) = run_oracle_and_simulate(&s)?;
            emit(c.target("oracle", "txt").as_deref(), &v.to_text())?;
            Ok(if v.passed { 0 } else { EXIT_VERDICT })
        }
        Command::Simulate(c) => {
            let s = c.load()?;
            let out = run_simulate(&s)?;
            emit(c.target("simulate", "txt").as_deref(), &out.to_text())?;
            Ok(0)
        }
        Command::Check(c) => {
            let s = c.load()?;
            let report = run_check(&s)?;
            emit(c.target("check", "txt").as_deref(), &report.to_text())?;
            Ok(if report.passed() { 0 } else { EXIT_ASSUMPTION })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_assumption_failure() {
                EXIT_ASSUMPTION
            } else {
                EXIT_VALIDATION
            })
        }
    }
}
