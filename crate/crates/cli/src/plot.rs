//! Minimal SVG line charts for training logs. Rendering is a string
//! template over primitive shapes; no plotting dependency, and identical
//! input always yields identical bytes.

use std::path::Path;

use flowmaze::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN: f64 = 52.0;

/// One point per log row: x from the `iteration`/`epoch` field when present
/// (row index otherwise), y from the requested field.
pub fn series_from_jsonl(text: &str, field: &str) -> Result<Vec<(f64, f64)>> {
    let mut points = Vec::new();
    for (row, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| Error::Format(format!("log line {}: {e}", row + 1)))?;
        let y = value
            .get(field)
            .and_then(|v| v.as_f64())
            .ok_or_else(|| {
                Error::Format(format!("log line {} has no numeric field `{field}`", row + 1))
            })?;
        let x = value
            .get("iteration")
            .or_else(|| value.get("epoch"))
            .and_then(|v| v.as_f64())
            .unwrap_or(row as f64);
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::Numeric(format!("log line {} is not finite", row + 1)));
        }
        points.push((x, y));
    }
    if points.is_empty() {
        return Err(Error::Format("log contains no data rows".into()));
    }
    Ok(points)
}

/// Maps a data range onto a pixel range; a degenerate range pins everything
/// to the middle so single-point logs still render.
fn scale(lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> impl Fn(f64) -> f64 {
    let span = hi - lo;
    move |v| {
        if span == 0.0 {
            (out_lo + out_hi) / 2.0
        } else {
            out_lo + (v - lo) / span * (out_hi - out_lo)
        }
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.6}")
}

pub fn render_line_chart(points: &[(f64, f64)], title: &str, field: &str) -> String {
    let (xmin, xmax) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)));
    let (ymin, ymax) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.1), hi.max(p.1)));
    let sx = scale(xmin, xmax, MARGIN, WIDTH - MARGIN);
    // SVG y grows downward; flip so larger values plot higher.
    let sy = scale(ymin, ymax, HEIGHT - MARGIN, MARGIN);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"14\" \
         text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    ));
    // Axes.
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN,
        WIDTH - MARGIN
    ));
    svg.push_str(&format!(
        "  <line x1=\"{MARGIN}\" y1=\"{MARGIN}\" x2=\"{MARGIN}\" y2=\"{}\" stroke=\"black\"/>\n",
        HEIGHT - MARGIN
    ));
    // Range labels.
    svg.push_str(&format!(
        "  <text x=\"{MARGIN}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
        HEIGHT - MARGIN + 16.0,
        fmt(xmin)
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" \
         text-anchor=\"end\">{}</text>\n",
        WIDTH - MARGIN,
        HEIGHT - MARGIN + 16.0,
        fmt(xmax)
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
        6.0,
        HEIGHT - MARGIN,
        fmt(ymin)
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\">{}</text>\n",
        6.0,
        MARGIN + 4.0,
        fmt(ymax)
    ));
    svg.push_str(&format!(
        "  <text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"11\" \
         text-anchor=\"middle\">{field}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 8.0
    ));

    if points.len() > 1 {
        let coords: Vec<String> =
            points.iter().map(|p| format!("{:.2},{:.2}", sx(p.0), sy(p.1))).collect();
        svg.push_str(&format!(
            "  <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" \
             points=\"{}\"/>\n",
            coords.join(" ")
        ));
    }
    for p in points {
        svg.push_str(&format!(
            "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"steelblue\"/>\n",
            sx(p.0),
            sy(p.1)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn plot_file(log: &Path, out: &Path, field: &str) -> Result<usize> {
    let text = std::fs::read_to_string(log).map_err(|e| Error::io(log, e))?;
    let points = series_from_jsonl(&text, field)?;
    let title = log.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let svg = render_line_chart(&points, &title, field);
    std::fs::write(out, svg).map_err(|e| Error::io(out, e))?;
    Ok(points.len())
}
