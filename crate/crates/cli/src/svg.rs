//! Minimal SVG line plots for the per-agent series. No styling
//! guarantees; figures are meant to be produced externally from the CSV.

use std::io::Write;
use std::path::Path;

use crate::failure::Failure;

const COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

const W: f64 = 800.0;
const H: f64 = 500.0;
const MARGIN: f64 = 50.0;

pub fn write_line_plot(
    path: &Path,
    title: &str,
    times: &[f64],
    series: &[Vec<f64>],
) -> Result<(), Failure> {
    let mut out = Vec::new();
    let (t0, t1) = (times[0], *times.last().unwrap());
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for s in series {
        for &v in s {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    if !(hi > lo) {
        hi = lo + 1.0;
    }
    let x = |t: f64| MARGIN + (t - t0) / (t1 - t0) * (W - 2.0 * MARGIN);
    let y = |v: f64| H - MARGIN - (v - lo) / (hi - lo) * (H - 2.0 * MARGIN);

    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {W} {H}\">"
    )?;
    writeln!(
        out,
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">{title}</text>",
        MARGIN
    )?;
    writeln!(
        out,
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>",
        m = MARGIN,
        r = W - MARGIN,
        t = MARGIN,
        b = H - MARGIN
    )?;
    writeln!(
        out,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{t0:.1}</text>\
         <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{t1:.1}</text>\
         <text x=\"4\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{lo:.2e}</text>\
         <text x=\"4\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{hi:.2e}</text>",
        MARGIN,
        H - MARGIN + 16.0,
        W - MARGIN - 20.0,
        H - MARGIN + 16.0,
        H - MARGIN,
        MARGIN + 4.0,
    )?;

    for (i, s) in series.iter().enumerate() {
        let points: Vec<String> = times
            .iter()
            .zip(s)
            .map(|(&t, &v)| format!("{:.2},{:.2}", x(t), y(v)))
            .collect();
        writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1\" points=\"{}\"/>",
            COLORS[i % COLORS.len()],
            points.join(" ")
        )?;
    }
    writeln!(out, "</svg>")?;
    std::fs::write(path, out).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(())
}
