use std::fmt::Write as _;
use std::path::Path;

use apfeas_core::IterateTrace;
use serde::Serialize;

use crate::CliError;

pub const TRACE_HEADER: &str = "k,residual,step_type,ls_depth,eta,sigma_min_G,wall_ms";

fn opt_f(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

/// Residuals carry 17 significant digits so the CSV round-trips every `f64`.
pub fn trace_csv(trace: &IterateTrace, record_timing: bool) -> String {
    let mut s = String::with_capacity(64 * (trace.records.len() + 1));
    s.push_str(TRACE_HEADER);
    s.push('\n');
    for r in &trace.records {
        let depth = r.ls_depth.map(|d| d.to_string()).unwrap_or_default();
        let wall = if record_timing { format!("{:.3}", r.wall_ms) } else { String::new() };
        let _ = writeln!(
            s,
            "{},{:.16e},{},{},{},{},{}",
            r.k,
            r.residual,
            r.step_type.as_str(),
            depth,
            opt_f(r.eta),
            opt_f(r.sigma_min_g),
            wall
        );
    }
    s
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub family: String,
    pub dims: String,
    pub seed: u64,
    pub rng: String,
    pub method: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    pub tau_rule: String,
    /// `converged`, `max_iters` or `error`.
    pub status: String,
    pub iterations: usize,
    pub final_feasibility: Option<f64>,
    pub wall_time_s: f64,
    pub dissolving_steps: usize,
    pub pg_steps: usize,
    pub stalled_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(path, &(text + "\n"))
}

/// Residuals at or below this are drawn at the floor.
const PLOT_FLOOR: f64 = 1e-17;

/// Line chart of `log10 ||c(x_k)||` against `k`, one polyline per series.
pub fn residual_svg(title: &str, series: &[(String, Vec<f64>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 420.0;
    const L: f64 = 60.0;
    const R: f64 = 20.0;
    const T: f64 = 40.0;
    const B: f64 = 50.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

    let logs: Vec<Vec<f64>> =
        series.iter().map(|(_, r)| r.iter().map(|&v| v.max(PLOT_FLOOR).log10()).collect()).collect();
    let kmax = logs.iter().map(|v| v.len().saturating_sub(1)).max().unwrap_or(0).max(1) as f64;
    let all = logs.iter().flatten().copied();
    let ymin = all.clone().fold(f64::INFINITY, f64::min).floor();
    let ymax = all.fold(f64::NEG_INFINITY, f64::max).ceil();
    let (ymin, ymax) = if ymin.is_finite() && ymax > ymin { (ymin, ymax) } else { (-1.0, 1.0) };
    let px = |k: f64| L + (W - L - R) * k / kmax;
    let py = |y: f64| T + (H - T - B) * (ymax - y) / (ymax - ymin);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        xml_escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - L - R,
        H - T - B
    );
    let ystep = ((ymax - ymin) / 8.0).ceil().max(1.0);
    let mut y = ymin;
    while y <= ymax + 1e-9 {
        let yy = py(y);
        let _ = writeln!(s, r##"<line x1="{L}" y1="{yy:.2}" x2="{}" y2="{yy:.2}" stroke="#ddd"/>"##, W - R);
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="11" text-anchor="end">1e{}</text>"#,
            L - 6.0,
            yy + 4.0,
            y as i64
        );
        y += ystep;
    }
    let kstep = (kmax / 8.0).ceil().max(1.0);
    let mut k = 0.0;
    while k <= kmax + 1e-9 {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{}</text>"#,
            px(k),
            H - B + 16.0,
            k as i64
        );
        k += kstep;
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">iteration</text>"#,
        (L + W - R) / 2.0,
        H - 12.0
    );
    for (i, ((name, _), ys)) in series.iter().zip(&logs).enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> =
            ys.iter().enumerate().map(|(k, &y)| format!("{:.2},{:.2}", px(k as f64), py(y))).collect();
        let _ =
            writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
            L + 8.0,
            T + 14.0 + 14.0 * i as f64,
            xml_escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
