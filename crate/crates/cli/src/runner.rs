use std::time::Instant;

use apfeas_core::bregman::{solve_bregman, BregmanKernel, EntropyKernel, FermiDiracKernel};
use apfeas_core::problems::{FamilySpec, ProblemInstance};
use apfeas_core::solver::{solve_aphl, solve_apm, solve_plain_ap};
use apfeas_core::{ApError, Point, ProjectiveSet, SolveOutput, SolverConfig};

use crate::config::{BregmanOptions, KernelChoice, Method};
use crate::CliError;

/// Result of one solve together with the wall time of the solver call alone.
#[derive(Debug, Clone)]
pub struct Solved {
    pub output: SolveOutput,
    pub wall_s: f64,
}

pub fn generate(problem: &FamilySpec, seed: u64) -> Result<ProblemInstance, CliError> {
    problem.generate(seed).map_err(|e| match e {
        ApError::Config(_) | ApError::Dimension(_) => CliError::Config(e.to_string()),
        other => CliError::Solver(other),
    })
}

fn kernel_for(choice: KernelChoice, n: usize) -> Box<dyn BregmanKernel> {
    match choice {
        KernelChoice::Entropy => Box::new(EntropyKernel { n }),
        KernelChoice::FermiDirac => Box::new(FermiDiracKernel { n }),
    }
}

/// Start strictly inside the kernel's domain.
fn bregman_start(x0: &Point, choice: KernelChoice, margin: f64) -> Point {
    match choice {
        KernelChoice::Entropy => x0.map(|v| v.max(margin)),
        KernelChoice::FermiDirac => x0.map(|v| v.clamp(margin, 1.0 - margin)),
    }
}

pub fn solve(
    inst: &ProblemInstance,
    method: Method,
    solver: &SolverConfig,
    bregman: &BregmanOptions,
) -> Result<Solved, CliError> {
    let cs = inst.system.as_ref();
    let t = Instant::now();
    let out = match method {
        Method::Aphl => solve_aphl(cs, &inst.set, &inst.x0, solver),
        Method::PlainAp => solve_plain_ap(cs, &inst.set, &inst.x0, solver),
        Method::Apm => solve_apm(cs, &inst.set, inst.affine_projector(), &inst.x0, solver),
        Method::Bregman => {
            let kernel = kernel_for(bregman.kernel, inst.set.dim());
            if kernel.domain_set().kind() != inst.set.kind() {
                return Err(CliError::Config(format!(
                    "kernel {} needs a {} problem, family {} uses {}",
                    bregman.kernel.as_str(),
                    kernel.domain_set().kind().name(),
                    inst.meta.family.name(),
                    inst.set.kind().name()
                )));
            }
            if !(bregman.interior_margin > 0.0 && bregman.interior_margin < 0.5) {
                return Err(CliError::Config("bregman.interior_margin must lie in (0, 0.5)".into()));
            }
            let x0 = bregman_start(&inst.x0, bregman.kernel, bregman.interior_margin);
            solve_bregman(cs, kernel.as_ref(), &x0, solver)
        }
    };
    let wall_s = t.elapsed().as_secs_f64();
    Ok(Solved { output: out.map_err(CliError::Solver)?, wall_s })
}
