use std::path::{Path, PathBuf};
use std::process::Command;

use apfeas_cli::config::{BenchConfig, KernelChoice, Method, RunConfig};
use apfeas_cli::output::TRACE_HEADER;
use apfeas_core::problems::FamilySpec;

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn apfeas(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_apfeas")).args(args).output().expect("binary runs");
    (
        out.status.code().expect("exit code"),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("config.toml");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn toy_run_converges_with_exit_zero() {
    let dir = scratch("toy");
    let cfg = write_config(&dir, "method = \"aphl\"\n[problem]\nfamily = \"toy\"\n");
    let out = dir.join("out");
    let (code, stdout, _) = apfeas(&["run", &cfg, "--out", out.to_str().unwrap(), "--plot"]);
    assert_eq!(code, 0, "{stdout}");
    let s = summary(&out);
    assert_eq!(s["status"], "converged");
    assert!(s["iterations"].as_u64().unwrap() <= 6);
    assert!(s["final_feasibility"].as_f64().unwrap() <= 1e-10);
    let trace = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some(TRACE_HEADER));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), 7);
    assert_eq!(first[1].parse::<f64>().unwrap(), 1.0);
    assert!(std::fs::read_to_string(out.join("plot.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn iteration_cap_exits_two() {
    let dir = scratch("capped");
    let cfg =
        write_config(&dir, "method = \"aphl\"\n[problem]\nfamily = \"correlation\"\nn = 30\n[solver]\nmax_iters = 1\n");
    let out = dir.join("out");
    let (code, _, _) = apfeas(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(summary(&out)["status"], "max_iters");
}

#[test]
fn unknown_key_is_a_config_error_naming_the_key() {
    let dir = scratch("unknown");
    let cfg = write_config(&dir, "method = \"aphl\"\n[problem]\nfamily = \"toy\"\n[solver]\nkapa = 0.5\n");
    let (code, _, stderr) = apfeas(&["run", &cfg]);
    assert_eq!(code, 1);
    assert!(stderr.contains("kapa"), "{stderr}");
}

#[test]
fn missing_config_file_exits_one() {
    let (code, _, stderr) = apfeas(&["run", "/nonexistent/config.toml"]);
    assert_eq!(code, 1);
    assert!(stderr.contains("cannot read"));
}

#[test]
fn apm_without_manifold_projector_is_a_solver_error() {
    let dir = scratch("apm_qp");
    let cfg = write_config(&dir, "method = \"apm\"\n[problem]\nfamily = \"qp_orthant\"\nn = 10\np = 2\n");
    let out = dir.join("out");
    let (code, _, stderr) = apfeas(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code, 3, "{stderr}");
    let s = summary(&out);
    assert_eq!(s["status"], "error");
    assert!(s["error"].as_str().unwrap().contains("unsupported"));
}

#[test]
fn bregman_kernel_domain_mismatch_is_a_config_error() {
    let dir = scratch("fd_mismatch");
    let cfg = write_config(
        &dir,
        "method = \"bregman\"\n[problem]\nfamily = \"qp_orthant\"\nn = 10\np = 2\n[bregman]\nkernel = \"fermi_dirac\"\n",
    );
    let (code, _, stderr) = apfeas(&["run", &cfg, "--out", dir.join("out").to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(stderr.contains("fermi_dirac"), "{stderr}");
}

#[test]
fn seed_flag_overrides_config_seed() {
    let dir = scratch("seed");
    let cfg = write_config(&dir, "method = \"aphl\"\nseed = 1\n[problem]\nfamily = \"qp_orthant\"\nn = 20\np = 2\n");
    let out = dir.join("out");
    let (code, _, _) = apfeas(&["run", &cfg, "--out", out.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(code, 0);
    assert_eq!(summary(&out)["seed"], 4);
}

#[test]
fn empty_bench_suite_exits_one() {
    let dir = scratch("bench_empty");
    let cfg = write_config(&dir, "[output]\ndir = \"x\"\n");
    let (code, _, stderr) = apfeas(&["bench", &cfg]);
    assert_eq!(code, 1);
    assert!(stderr.contains("empty"));
}

#[test]
fn bench_writes_tables_and_traces() {
    let dir = scratch("bench");
    let cfg = write_config(
        &dir,
        r#"threads = 2
[[suite]]
problem = { family = "qp_orthant", n = 20, p = 2 }
methods = ["aphl", "apm"]
seeds = [0, 1, 2]
"#,
    );
    let out = dir.join("out");
    let (code, stdout, stderr) = apfeas(&["bench", &cfg, "--out", out.to_str().unwrap(), "--plot"]);
    assert_eq!(code, 0, "{stderr}");
    assert!(stdout.contains("qp_orthant"));
    let csv = std::fs::read_to_string(out.join("bench.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 3);
    // apm has no manifold projector here: the cell still gets a row, with every run errored
    assert!(rows[2].starts_with("qp_orthant,\"n=20,p=2\",apm,3,0,3,"), "{}", rows[2]);
    assert!(out.join("traces/qp_orthant_n20_p2_aphl_s2.csv").exists());
    assert!(out.join("traces/qp_orthant_n20_p2_aphl.svg").exists());
    let table = std::fs::read_to_string(out.join("bench.txt")).unwrap();
    assert!(table.lines().next().unwrap().starts_with("family"));
}

#[test]
fn bench_seed_flag_replaces_seed_lists() {
    let dir = scratch("bench_seed");
    let cfg =
        write_config(&dir, "[[suite]]\nproblem = { family = \"toy\" }\nmethods = [\"aphl\"]\nseeds = [0, 1, 2]\n");
    let out = dir.join("out");
    let (code, _, _) = apfeas(&["bench", &cfg, "--out", out.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(code, 0);
    let runs = std::fs::read_to_string(out.join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 2);
    assert!(runs.lines().nth(1).unwrap().contains(",aphl,9,converged,"));
}

#[test]
fn run_config_parses_nested_sections_with_defaults() {
    let cfg = RunConfig::from_toml(
        "method = \"bregman\"\n[problem]\nfamily = \"lq_affine\"\nn = 40\np = 4\n[bregman]\nkernel = \"fermi_dirac\"\n",
    )
    .unwrap();
    assert_eq!(cfg.method, Method::Bregman);
    assert_eq!(cfg.seed, 0);
    assert_eq!(cfg.problem, FamilySpec::LqAffine { n: 40, p: 4, q: 0.5 });
    assert_eq!(cfg.bregman.kernel, KernelChoice::FermiDirac);
    assert_eq!(cfg.solver.max_iters, 5000);
    assert!(!cfg.output.record_timing);
}

#[test]
fn invalid_solver_values_are_rejected() {
    let e =
        RunConfig::from_toml("method = \"aphl\"\n[problem]\nfamily = \"toy\"\n[solver]\nalpha = 1.5\n").unwrap_err();
    assert_eq!(e.exit_code(), 1);
}

#[test]
fn unknown_problem_field_is_rejected() {
    let e = BenchConfig::from_toml(
        "[[suite]]\nproblem = { family = \"qp_orthant\", n = 5, p = 1, rank = 2 }\nmethods = [\"aphl\"]\nseeds = [0]\n",
    )
    .unwrap_err();
    assert!(e.to_string().contains("rank"), "{e}");
}

#[test]
fn timing_column_follows_record_timing() {
    let dir = scratch("timing");
    let base = "method = \"aphl\"\n[problem]\nfamily = \"toy\"\n";
    let mut cfg = RunConfig::from_toml(base).unwrap();
    let off = apfeas_cli::run(&cfg, &dir.join("off")).unwrap();
    assert_eq!(off.exit_code(), 0);
    let text = std::fs::read_to_string(dir.join("off/trace.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(',')));
    cfg.output.record_timing = true;
    apfeas_cli::run(&cfg, &dir.join("on")).unwrap();
    let text = std::fs::read_to_string(dir.join("on/trace.csv")).unwrap();
    assert!(text.lines().skip(1).all(|l| !l.ends_with(',')));
}

#[test]
fn median_handles_odd_even_and_empty() {
    assert_eq!(apfeas_cli::median(&[3.0, 1.0, 2.0]), Some(2.0));
    assert_eq!(apfeas_cli::median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    assert_eq!(apfeas_cli::median(&[]), None);
}
