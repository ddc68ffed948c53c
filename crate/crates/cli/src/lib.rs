//! Experiment driver: single runs and benchmark suites over the generated problem families.

pub mod config;
pub mod output;
pub mod runner;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use apfeas_core::problems::FamilySpec;
use apfeas_core::{ApError, IterateTrace, SolveOutput, Status, StepType};
use thiserror::Error;

use config::{BenchConfig, BregmanOptions, Method, RunConfig};
use output::{residual_svg, trace_csv, write_file, write_json, Summary};

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_MAX_ITERS: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(ApError),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

fn mkdir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn status_str(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::MaxIters => "max_iters",
    }
}

fn summarize(
    problem: &FamilySpec,
    seed: u64,
    method: Method,
    solver: &apfeas_core::SolverConfig,
    bregman: &BregmanOptions,
    result: &Result<runner::Solved, CliError>,
) -> Summary {
    let tau_rule =
        serde_json::to_value(solver.tau_rule).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
    let mut s = Summary {
        family: problem.name().to_string(),
        dims: problem.dims_label(),
        seed,
        rng: apfeas_core::problems::RNG_NAME.to_string(),
        method: method.as_str().to_string(),
        kernel: (method == Method::Bregman).then(|| bregman.kernel.as_str().to_string()),
        tau_rule,
        status: "error".into(),
        iterations: 0,
        final_feasibility: None,
        wall_time_s: 0.0,
        dissolving_steps: 0,
        pg_steps: 0,
        stalled_steps: 0,
        error: None,
    };
    match result {
        Ok(solved) => {
            let out: &SolveOutput = &solved.output;
            s.status = status_str(out.status).into();
            s.iterations = out.iterations();
            s.final_feasibility = Some(out.final_residual());
            s.wall_time_s = solved.wall_s;
            s.dissolving_steps = out.trace.count(StepType::Dissolving);
            s.pg_steps = out.trace.count(StepType::ProjectedGradient);
            s.stalled_steps = out.trace.records.iter().filter(|r| r.stalled).count();
        }
        Err(e) => s.error = Some(e.to_string()),
    }
    s
}

/// What a single run produced. Solver failures still yield a summary.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: Summary,
    pub trace: Option<IterateTrace>,
    pub out_dir: PathBuf,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        match self.summary.status.as_str() {
            "converged" => EXIT_CONVERGED,
            "max_iters" => EXIT_MAX_ITERS,
            _ => EXIT_SOLVER,
        }
    }
}

/// Solves one instance and writes `trace.csv`, `summary.json` and optionally `plot.svg` into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome, CliError> {
    let inst = runner::generate(&cfg.problem, cfg.seed)?;
    let result = match runner::solve(&inst, cfg.method, &cfg.solver, &cfg.bregman) {
        Err(CliError::Config(m)) => return Err(CliError::Config(m)),
        r => r,
    };
    mkdir(out_dir)?;
    let summary = summarize(&cfg.problem, cfg.seed, cfg.method, &cfg.solver, &cfg.bregman, &result);
    let trace = result.ok().map(|s| s.output.trace);
    if let Some(t) = &trace {
        write_file(&out_dir.join("trace.csv"), &trace_csv(t, cfg.output.record_timing))?;
        if cfg.output.plot {
            let title = format!("{} {} seed {} ({})", summary.family, summary.dims, cfg.seed, summary.method);
            let svg = residual_svg(&title, &[(summary.method.clone(), t.residuals())]);
            write_file(&out_dir.join("plot.svg"), &svg)?;
        }
    }
    write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(RunOutcome { summary, trace, out_dir: out_dir.to_path_buf() })
}

/// Medians over the seeds of one (problem, method) pair; errored runs are excluded from the medians.
#[derive(Debug, Clone)]
pub struct BenchCell {
    pub family: String,
    pub dims: String,
    pub method: String,
    pub runs: usize,
    pub converged: usize,
    pub errors: usize,
    pub median_iters: Option<f64>,
    pub median_feas: Option<f64>,
    pub median_time_s: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub runs: Vec<Summary>,
    pub cells: Vec<BenchCell>,
}

pub fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    Some(if s.len() % 2 == 1 { s[m] } else { 0.5 * (s[m - 1] + s[m]) })
}

fn file_tag(problem: &FamilySpec, method: Method) -> String {
    let dims: String =
        problem.dims_label().chars().filter(|&c| c != '=').map(|c| if c == ',' { '_' } else { c }).collect();
    format!("{}_{}_{}", problem.name(), dims, method.as_str())
}

/// Summary and, when the solve succeeded, its trace.
type JobResult = (Summary, Option<IterateTrace>);

struct Job {
    entry: usize,
    method: Method,
    seed: u64,
}

/// Runs every cell of the suite (concurrently when `threads != 1`) and writes `bench.csv`,
/// `bench.txt`, `runs.csv` and one trace per run under `traces/`.
pub fn bench(cfg: &BenchConfig, out_dir: &Path) -> Result<BenchOutcome, CliError> {
    let jobs: Vec<Job> = cfg
        .suite
        .iter()
        .enumerate()
        .flat_map(|(i, e)| {
            e.methods.iter().flat_map(move |&m| e.seeds.iter().map(move |&s| Job { entry: i, method: m, seed: s }))
        })
        .collect();
    if jobs.is_empty() {
        return Err(CliError::Config("bench suite is empty".into()));
    }
    let trace_dir = out_dir.join("traces");
    mkdir(&trace_dir)?;

    let threads = match cfg.threads {
        0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        t => t,
    }
    .min(jobs.len());
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<JobResult>>> = Mutex::new(vec![None; jobs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let problem = &cfg.suite[job.entry].problem;
                let result = runner::generate(problem, job.seed)
                    .and_then(|inst| runner::solve(&inst, job.method, &cfg.solver, &cfg.bregman));
                let summary = summarize(problem, job.seed, job.method, &cfg.solver, &cfg.bregman, &result);
                let trace = result.ok().map(|s| s.output.trace);
                slots.lock().expect("bench worker panicked")[i] = Some((summary, trace));
            });
        }
    });
    let done: Vec<JobResult> =
        slots.into_inner().expect("bench worker panicked").into_iter().map(|s| s.expect("every job ran")).collect();

    let timing = cfg.output.record_timing;
    let mut runs_csv = String::from("family,dims,method,seed,status,iterations,final_feasibility,time_s\n");
    for (job, (s, trace)) in jobs.iter().zip(&done) {
        let problem = &cfg.suite[job.entry].problem;
        let tag = format!("{}_s{}", file_tag(problem, job.method), job.seed);
        if let Some(t) = trace {
            write_file(&trace_dir.join(format!("{tag}.csv")), &trace_csv(t, timing))?;
        }
        runs_csv.push_str(&format!(
            "{},\"{}\",{},{},{},{},{},{}\n",
            s.family,
            s.dims,
            s.method,
            s.seed,
            s.status,
            s.iterations,
            s.final_feasibility.map(|v| format!("{v:.16e}")).unwrap_or_default(),
            if timing { format!("{:.6}", s.wall_time_s) } else { String::new() }
        ));
    }

    let mut cells = Vec::new();
    for (ei, entry) in cfg.suite.iter().enumerate() {
        for &m in &entry.methods {
            let idx: Vec<usize> =
                jobs.iter().enumerate().filter(|(_, j)| j.entry == ei && j.method == m).map(|(i, _)| i).collect();
            let ok: Vec<&Summary> = idx.iter().map(|&i| &done[i].0).filter(|s| s.status != "error").collect();
            cells.push(BenchCell {
                family: entry.problem.name().to_string(),
                dims: entry.problem.dims_label(),
                method: m.as_str().to_string(),
                runs: idx.len(),
                converged: ok.iter().filter(|s| s.status == "converged").count(),
                errors: idx.len() - ok.len(),
                median_iters: median(&ok.iter().map(|s| s.iterations as f64).collect::<Vec<_>>()),
                median_feas: median(&ok.iter().filter_map(|s| s.final_feasibility).collect::<Vec<_>>()),
                median_time_s: median(&ok.iter().map(|s| s.wall_time_s).collect::<Vec<_>>()),
            });
            if cfg.output.plot {
                let series: Vec<(String, Vec<f64>)> = idx
                    .iter()
                    .filter_map(|&i| done[i].1.as_ref().map(|t| (format!("seed {}", jobs[i].seed), t.residuals())))
                    .collect();
                let tag = file_tag(&entry.problem, m);
                write_file(&trace_dir.join(format!("{tag}.svg")), &residual_svg(&tag, &series))?;
            }
        }
    }

    let fmt_opt = |v: Option<f64>, f: &dyn Fn(f64) -> String| v.map(f).unwrap_or_default();
    let mut csv =
        String::from("family,dims,method,runs,converged,errors,median_iters,median_final_feasibility,median_time_s\n");
    for c in &cells {
        csv.push_str(&format!(
            "{},\"{}\",{},{},{},{},{},{},{}\n",
            c.family,
            c.dims,
            c.method,
            c.runs,
            c.converged,
            c.errors,
            fmt_opt(c.median_iters, &|v| format!("{v}")),
            fmt_opt(c.median_feas, &|v| format!("{v:.16e}")),
            if timing { fmt_opt(c.median_time_s, &|v| format!("{v:.6}")) } else { String::new() }
        ));
    }
    write_file(&out_dir.join("bench.csv"), &csv)?;
    write_file(&out_dir.join("runs.csv"), &runs_csv)?;
    write_file(&out_dir.join("bench.txt"), &bench_table(&cells))?;
    Ok(BenchOutcome { runs: done.into_iter().map(|(s, _)| s).collect(), cells })
}

/// Aligned plain-text table of the bench cells.
pub fn bench_table(cells: &[BenchCell]) -> String {
    let header = ["family", "dims", "method", "conv", "iter", "feas", "time (s)"];
    let rows: Vec<[String; 7]> = cells
        .iter()
        .map(|c| {
            [
                c.family.clone(),
                c.dims.clone(),
                c.method.clone(),
                format!("{}/{}", c.converged, c.runs),
                c.median_iters.map(|v| format!("{v}")).unwrap_or_else(|| "-".into()),
                c.median_feas.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into()),
                c.median_time_s.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
            ]
        })
        .collect();
    let mut width = header.map(str::len);
    for r in &rows {
        for (w, cell) in width.iter_mut().zip(r) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cols: &[String]| {
        let parts: Vec<String> = cols
            .iter()
            .zip(width)
            .enumerate()
            .map(|(i, (c, w))| if i < 3 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        parts.join("  ").trim_end().to_string() + "\n"
    };
    let mut s = line(&header.map(String::from));
    s.push_str(&line(&width.map(|w| "-".repeat(w))));
    for r in &rows {
        s.push_str(&line(r));
    }
    s
}
