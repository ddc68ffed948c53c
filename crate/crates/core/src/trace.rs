use serde::{Deserialize, Serialize};

/// Kind of update that produced the next iterate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepType {
    Dissolving,
    ProjectedGradient,
    Bregman,
    Alternating,
    /// Final row carrying the residual of the returned point.
    Terminal,
}

impl StepType {
    pub fn as_str(self) -> &'static str {
        match self {
            StepType::Dissolving => "dissolving",
            StepType::ProjectedGradient => "projected_gradient",
            StepType::Bregman => "bregman",
            StepType::Alternating => "alternating",
            StepType::Terminal => "terminal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIters,
}

/// One row per iterate `x_k`; `residual` is `||c(x_k)||`, the other fields describe the step taken from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub k: usize,
    pub residual: f64,
    pub step_type: StepType,
    pub ls_depth: Option<usize>,
    pub eta: Option<f64>,
    pub sigma_min_g: Option<f64>,
    pub wall_ms: f64,
    /// `||x_{k+1} - x_k||`, zero on the terminal row.
    pub step_norm: f64,
    /// Line search exhausted without satisfying its inequality.
    pub stalled: bool,
    /// A Bregman update underflowed and was clamped to the domain.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IterateTrace {
    pub records: Vec<IterRecord>,
}

impl IterateTrace {
    pub fn push(&mut self, r: IterRecord) {
        self.records.push(r);
    }

    /// Number of steps taken (terminal row excluded).
    pub fn iterations(&self) -> usize {
        self.records.iter().filter(|r| r.step_type != StepType::Terminal).count()
    }

    pub fn residuals(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.residual).collect()
    }

    pub fn final_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.residual)
    }

    pub fn count(&self, t: StepType) -> usize {
        self.records.iter().filter(|r| r.step_type == t).count()
    }

    /// Every projected-gradient step that did not stall must satisfy the sufficient-decrease test
    /// `r_{k+1}^2 / 2 <= r_k^2 / 2 - ||x_{k+1} - x_k||^2 / (4 eta)`, up to `slack` relative to `r_k^2`.
    pub fn linesearch_violations(&self, slack: f64) -> Vec<usize> {
        let mut bad = Vec::new();
        for w in self.records.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.step_type != StepType::ProjectedGradient || a.stalled {
                continue;
            }
            let eta = a.eta.unwrap_or(f64::NAN);
            let lhs = 0.5 * b.residual * b.residual;
            let rhs = 0.5 * a.residual * a.residual - a.step_norm * a.step_norm / (4.0 * eta);
            if !(lhs <= rhs + slack * a.residual * a.residual) {
                bad.push(a.k);
            }
        }
        bad
    }

    /// Least-squares slope of `log r_{k+1}` against `log r_k` over the last `pairs` usable pairs.
    /// Pairs whose successor is below `floor` (roundoff level) are skipped.
    pub fn tail_slope(&self, pairs: usize, floor: f64) -> Option<f64> {
        let r = self.residuals();
        let mut pts: Vec<(f64, f64)> = r
            .windows(2)
            .filter(|w| w[0] > 0.0 && w[1] > floor && w[1] < w[0])
            .map(|w| (w[0].ln(), w[1].ln()))
            .collect();
        if pts.len() < pairs.max(1) {
            if pts.len() < 2 {
                return None;
            }
        } else {
            pts = pts.split_off(pts.len() - pairs);
        }
        loglog_slope(&pts)
    }
}

/// Least-squares slope through `(x, y)` points; `None` with fewer than two distinct abscissae.
pub fn loglog_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[derive(Debug, Clone)]
pub struct SolveOutput {
    pub x: nalgebra::DVector<f64>,
    pub status: Status,
    pub trace: IterateTrace,
}

impl SolveOutput {
    pub fn iterations(&self) -> usize {
        self.trace.iterations()
    }
    pub fn final_residual(&self) -> f64 {
        self.trace.final_residual().unwrap_or(f64::NAN)
    }
}
