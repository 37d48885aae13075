//! Batch runner behind the `crane-sim` binary: expands suites into cells,
//! runs them on a worker pool and writes traces plus a summary table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::hsmc::ReachingLaw;
use crate::scenarios::preset;
use crate::simkit::{run_episode, ControllerSpec, EpisodeResult, TRACE_COLUMNS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_BLOWUP: i32 = 2;

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "Controller",
    "Scenario",
    "Seed",
    "MSE",
    "MaxError",
    "ResponseTime",
    "ChatteringEnergy",
    "ControlEffort",
    "Status",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    /// Three controllers under the three disturbance presets.
    Table5,
    /// The proposed controller on the three target-switching campaigns.
    Switching,
    /// Both of the above plus the undisturbed step.
    All,
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "table5" => Ok(Suite::Table5),
            "switching" => Ok(Suite::Switching),
            "all" => Ok(Suite::All),
            _ => Err(format!("unknown suite `{s}` (expected table5, switching or all)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub controller: String,
    pub scenario: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub suite: Option<Suite>,
    pub scenario: Option<String>,
    pub controller: Option<String>,
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Debug)]
pub struct CellOutcome {
    pub cell: Cell,
    pub result: Result<EpisodeResult>,
}

impl CellOutcome {
    pub fn status(&self) -> &'static str {
        match &self.result {
            Ok(_) => "ok",
            Err(Error::NumericalBlowup { .. }) => "blowup",
            Err(_) => "error",
        }
    }
}

fn suite_pairs(suite: Suite) -> Vec<(&'static str, &'static str)> {
    let table5 = ["low", "high", "random"]
        .into_iter()
        .flat_map(|s| ["hsmc", "pid", "lqr"].map(|c| (c, s)));
    let switching = ["switch-low", "switch-high", "switch-random"].map(|s| ("hsmc", s));
    match suite {
        Suite::Table5 => table5.collect(),
        Suite::Switching => switching.to_vec(),
        Suite::All => ["hsmc", "pid", "lqr"]
            .map(|c| (c, "none"))
            .into_iter()
            .chain(table5)
            .chain(switching)
            .collect(),
    }
}

/// Expands the configured experiment (or a named suite) into cells,
/// narrowed by any `--scenario` / `--controller` / `--seed` filter.
pub fn plan(cfg: &ExperimentConfig, opts: &RunOptions) -> Vec<Cell> {
    let seeds = match opts.seed {
        Some(s) => vec![s],
        None => cfg.experiment.seeds.clone(),
    };
    let pairs: Vec<(String, String)> = match opts.suite {
        Some(suite) => suite_pairs(suite)
            .into_iter()
            .filter(|(c, s)| {
                opts.controller.as_deref().is_none_or(|x| x == *c)
                    && opts.scenario.as_deref().is_none_or(|x| x == *s)
            })
            .map(|(c, s)| (c.to_string(), s.to_string()))
            .collect(),
        None => {
            let scenarios = match &opts.scenario {
                Some(s) => vec![s.clone()],
                None => cfg.experiment.scenarios.clone(),
            };
            let controllers = match &opts.controller {
                Some(c) => vec![c.clone()],
                None => cfg.experiment.controllers.clone(),
            };
            scenarios
                .iter()
                .flat_map(|s| controllers.iter().map(move |c| (c.clone(), s.clone())))
                .collect()
        }
    };
    pairs
        .into_iter()
        .flat_map(|(controller, scenario)| {
            seeds.iter().map(move |&seed| Cell {
                controller: controller.clone(),
                scenario: scenario.clone(),
                seed,
            })
        })
        .collect()
}

pub fn controller_spec(cfg: &ExperimentConfig, name: &str) -> Result<ControllerSpec> {
    match name {
        "hsmc" => Ok(ControllerSpec::Hsmc {
            gains: cfg.gains.clone(),
            nn: cfg.nn.clone(),
        }),
        "hsmc-sign" => {
            let mut gains = cfg.gains.clone();
            gains.reaching = ReachingLaw::Sign;
            Ok(ControllerSpec::Hsmc {
                gains,
                nn: cfg.nn.clone(),
            })
        }
        "pid" => Ok(ControllerSpec::Pid(cfg.baselines.pid.clone())),
        "lqr" => ControllerSpec::lqr_for(&cfg.plant, &cfg.baselines.lqr),
        other => Err(Error::Config(format!("unknown controller `{other}`"))),
    }
}

pub fn run_cell(cfg: &ExperimentConfig, cell: &Cell) -> Result<EpisodeResult> {
    let scenario = preset(
        &cell.scenario,
        &cfg.disturbances,
        &cfg.references,
        cell.seed,
    )
    .ok_or_else(|| Error::Config(format!("unknown scenario `{}`", cell.scenario)))?;
    let spec = controller_spec(cfg, &cell.controller)?;
    let mut result = run_episode(&cfg.plant, &spec, &scenario, &cfg.sim)?;
    result.controller = cell.controller.clone();
    Ok(result)
}

/// Worker count from `CRANE_SIM_THREADS`, falling back to the machine's parallelism.
pub fn threads_from_env() -> usize {
    std::env::var("CRANE_SIM_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Runs every cell on a dedicated pool; outcomes keep the input order.
pub fn run_cells(cfg: &ExperimentConfig, cells: &[Cell], threads: usize) -> Vec<CellOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| {
        cells
            .par_iter()
            .map(|cell| CellOutcome {
                cell: cell.clone(),
                result: run_cell(cfg, cell),
            })
            .collect()
    })
}

/// `%.9g`-style rendering: nine significant digits, trailing zeros trimmed,
/// exponent form outside `[1e-5, 1e9)`.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

/// Writes the trace with a header row; `fields` selects columns (all when `None`).
pub fn emit_trace_csv(result: &EpisodeResult, path: &Path, fields: Option<&[String]>) -> Result<()> {
    if result.trace.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let columns: Vec<&str> = match fields {
        Some(f) => f.iter().map(String::as_str).collect(),
        None => TRACE_COLUMNS.to_vec(),
    };
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)?;
    w.write_record(&columns).map_err(csv_err)?;
    for row in &result.trace {
        let record = columns.iter().map(|c| {
            row.column(c)
                .map(format_sig)
                .ok_or_else(|| Error::Config(format!("unknown trace column `{c}`")))
        });
        let record: Vec<String> = record.collect::<Result<_>>()?;
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn trace_file_name(cell: &Cell) -> String {
    format!("{}_{}_seed{}.csv", cell.controller, cell.scenario, cell.seed)
}

fn summary_fields(o: &CellOutcome) -> Vec<String> {
    let mut row = vec![
        o.cell.controller.clone(),
        o.cell.scenario.clone(),
        o.cell.seed.to_string(),
    ];
    match &o.result {
        Ok(r) => {
            let m = &r.metrics;
            row.extend([
                format_sig(m.mse),
                format_sig(m.max_error),
                m.response_time.map_or("NA".into(), format_sig),
                format_sig(m.chattering_energy),
                format_sig(m.control_effort),
            ]);
        }
        Err(_) => row.extend(std::iter::repeat_n("NA".to_string(), 5)),
    }
    row.push(o.status().to_string());
    row
}

/// `summary.csv` plus an aligned `summary.txt`, written once after all cells finish.
pub fn write_summary(outcomes: &[CellOutcome], dir: &Path) -> Result<()> {
    let csv_path = dir.join("summary.csv");
    let csv_err = |source| Error::Csv {
        path: csv_path.clone(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&csv_path)
        .map_err(csv_err)?;
    w.write_record(SUMMARY_COLUMNS).map_err(csv_err)?;
    let rows: Vec<Vec<String>> = outcomes.iter().map(summary_fields).collect();
    for r in &rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: csv_path.clone(),
        source,
    })?;

    let txt_path = dir.join("summary.txt");
    fs::write(&txt_path, render_table(&rows)).map_err(|source| Error::Io {
        path: txt_path,
        source,
    })
}

pub fn render_table(rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = SUMMARY_COLUMNS.iter().map(|c| c.len()).collect();
    for r in rows {
        for (w, f) in widths.iter_mut().zip(r) {
            *w = (*w).max(f.len());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, fields: &[&str]| {
        let cells: Vec<String> = fields
            .iter()
            .zip(&widths)
            .map(|(f, w)| format!("{f:<w$}"))
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    };
    line(&mut out, &SUMMARY_COLUMNS);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    let rule: Vec<&str> = rule.iter().map(String::as_str).collect();
    line(&mut out, &rule);
    for r in rows {
        let fields: Vec<&str> = r.iter().map(String::as_str).collect();
        line(&mut out, &fields);
    }
    out.push_str("\nMSE is averaged over the whole episode; ResponseTime NA means the 2% band was never held.\n");
    out
}

/// Full `run` command: plan, execute, write outputs. Returns the process exit code.
pub fn run(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<i32> {
    for name in cfg.gains.unused_gains() {
        log::warn!("gain `{name}` is configured but no control law uses it");
    }
    if let Some(s) = &opts.scenario {
        if preset(s, &cfg.disturbances, &cfg.references, 0).is_none() {
            return Err(Error::Config(format!("unknown scenario `{s}`")));
        }
    }
    if let Some(c) = &opts.controller {
        if !crate::config::CONTROLLER_NAMES.contains(&c.as_str()) {
            return Err(Error::Config(format!("unknown controller `{c}`")));
        }
    }
    let cells = plan(cfg, opts);
    if cells.is_empty() {
        return Err(Error::Config("the selection matches no cells".into()));
    }
    let out_dir = opts
        .out_dir
        .clone()
        .unwrap_or_else(|| cfg.experiment.out_dir.clone());
    fs::create_dir_all(&out_dir).map_err(|source| Error::Io {
        path: out_dir.clone(),
        source,
    })?;

    let threads = opts.threads.unwrap_or_else(threads_from_env);
    let outcomes = run_cells(cfg, &cells, threads);

    let mut code = EXIT_OK;
    for o in &outcomes {
        match &o.result {
            Ok(r) => {
                let path = out_dir.join(trace_file_name(&o.cell));
                emit_trace_csv(r, &path, cfg.sim.record_fields.as_deref())?;
            }
            Err(e @ Error::NumericalBlowup { .. }) => {
                log::error!("{} / {}: {e}", o.cell.controller, o.cell.scenario);
                code = EXIT_BLOWUP;
            }
            Err(e) => {
                log::error!("{} / {}: {e}", o.cell.controller, o.cell.scenario);
                if code == EXIT_OK {
                    code = EXIT_CONFIG;
                }
            }
        }
    }
    write_summary(&outcomes, &out_dir)?;
    Ok(code)
}
