use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use super::study::{StudyReport, QUANTITIES};
use crate::error::Result;

pub const CSV_HEADER: &str = "epsilon,mode,lambda_full,mu_eff,eig_gap,supnorm,hausdorff,nodal_domains,\
nodal_components,boundary_components,graph_check,disc_err_est";

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else {
                out.push_str(&float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, key) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*key], indent + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Deterministic JSON: sorted keys, two-space indent, floats with 17
/// significant digits.
pub fn to_stable_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

pub fn records_csv(report: &StudyReport) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            float(r.epsilon),
            r.mode,
            float(r.lambda_full),
            float(r.mu_eff),
            float(r.eig_gap),
            float(r.supnorm),
            float(r.hausdorff),
            r.nodal.domain_count,
            r.nodal.component_count,
            r.nodal.boundary_components,
            r.nodal.graph_over_fiber,
            float(r.disc_error_estimate),
        );
    }
    out
}

const WIDTH: f64 = 480.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Log-log plot of one quantity against `ε`, one series per mode, with the
/// fitted line dashed.
pub fn quantity_svg(report: &StudyReport, quantity: &str) -> String {
    let series: Vec<(usize, Vec<(f64, f64)>)> = {
        let mut modes: Vec<usize> = report.records.iter().map(|r| r.mode).collect();
        modes.sort_unstable();
        modes.dedup();
        modes
            .into_iter()
            .map(|j| {
                let pts = report
                    .records
                    .iter()
                    .filter(|r| r.mode == j)
                    .map(|r| {
                        let v = match quantity {
                            "eig_gap" => r.eig_gap,
                            "supnorm" => r.supnorm,
                            _ => r.hausdorff,
                        };
                        (r.epsilon, v)
                    })
                    .filter(|(e, v)| *e > 0.0 && *v > 0.0)
                    .map(|(e, v)| (e.log10(), v.log10()))
                    .collect();
                (j, pts)
            })
            .collect()
    };
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.1.iter().copied()).collect();
    let (x0, x1, y0, y1) = if all.is_empty() {
        (-2.0, 0.0, -2.0, 0.0)
    } else {
        let lo = |f: fn(&(f64, f64)) -> f64| all.iter().map(f).fold(f64::INFINITY, f64::min).floor();
        let hi = |f: fn(&(f64, f64)) -> f64| all.iter().map(f).fold(f64::NEG_INFINITY, f64::max).ceil();
        let (x0, x1) = (lo(|p| p.0), hi(|p| p.0));
        let (y0, y1) = (lo(|p| p.1), hi(|p| p.1));
        (x0, x1.max(x0 + 1.0), y0, y1.max(y0 + 1.0))
    };
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let py = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">"
    );
    let _ = writeln!(out, "<rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\" text-anchor=\"middle\">{quantity} vs epsilon</text>",
        WIDTH / 2.0
    );
    let _ = writeln!(
        out,
        "<rect x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>",
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    for d in (x0 as i64)..=(x1 as i64) {
        let x = px(d as f64);
        let _ = writeln!(
            out,
            "<text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">1e{d}</text>",
            HEIGHT - MARGIN + 16.0
        );
    }
    for d in (y0 as i64)..=(y1 as i64) {
        let y = py(d as f64);
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">1e{d}</text>",
            MARGIN - 4.0,
            y + 4.0
        );
    }
    for (k, (j, pts)) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        for (x, y) in pts {
            let _ = writeln!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3.5\" fill=\"{color}\"/>",
                px(*x),
                py(*y)
            );
        }
        if let Some(fit) = report.fit(quantity, *j).and_then(|f| f.fit.as_ref()) {
            let line = |x: f64| (fit.intercept + fit.slope * x * std::f64::consts::LN_10) / std::f64::consts::LN_10;
            let (a, b) = (x0, x1);
            let _ = writeln!(
                out,
                "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-dasharray=\"6 4\"/>",
                px(a),
                py(line(a)),
                px(b),
                py(line(b))
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" fill=\"{color}\">mode {j}</text>",
            MARGIN + 8.0,
            MARGIN + 16.0 + 14.0 * k as f64
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Writes `report.json`, `records.csv`, one SVG per measured quantity and
/// `timings.json`; returns the paths written.
pub fn emit_report(report: &StudyReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = vec![
        (dir.join("report.json"), to_stable_json(report)?),
        (dir.join("records.csv"), records_csv(report)),
    ];
    for q in QUANTITIES {
        files.push((dir.join(format!("{q}.svg")), quantity_svg(report, q)));
    }
    files.push((dir.join("timings.json"), to_stable_json(&report.timings)?));
    for (path, text) in &files {
        fs::write(path, text)?;
    }
    Ok(files.into_iter().map(|f| f.0).collect())
}
