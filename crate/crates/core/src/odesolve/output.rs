//! CSV and SVG renderings of sector curves.

use std::f64::consts::PI;
use std::fmt::Write;

/// `x` with 12 significant digits.
pub(crate) fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=11).contains(&mag) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

/// `theta,<names>` followed by one row per grid point.
pub fn curve_csv(grid: &[f64], rows: &[Vec<f64>], prefix: &str) -> String {
    let width = rows.first().map_or(0, Vec::len);
    let mut out = String::from("theta");
    for k in 0..width {
        write!(out, ",{prefix}{k}").expect("string write");
    }
    out.push('\n');
    for (t, row) in grid.iter().zip(rows) {
        out.push_str(&sig12(*t));
        for v in row {
            out.push(',');
            out.push_str(&sig12(*v));
        }
        out.push('\n');
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line plot over `θ ∈ [0, π]`, one polyline per column, y-range `[0, 1]`
/// widened to fit the data.
pub fn curves_svg(grid: &[f64], rows: &[Vec<f64>], title: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let width = rows.first().map_or(0, Vec::len);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for v in rows.iter().flatten() {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    let px = |t: f64| M + (W - 2.0 * M) * t / PI;
    let py = |y: f64| H - M - (H - 2.0 * M) * (y - lo) / (hi - lo);
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#)
        .expect("string write");
    writeln!(out, r#"<rect width="{W}" height="{H}" fill="white"/>"#).expect("string write");
    writeln!(out, r#"<text x="{}" y="25" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title))
        .expect("string write");
    let (x0, x1, y0, y1) = (px(0.0), px(PI), py(lo), py(hi));
    writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#).expect("string write");
    writeln!(out, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#).expect("string write");
    for (t, label) in [(0.0, "0"), (PI / 2.0, "π/2"), (PI, "π")] {
        let x = px(t);
        writeln!(
            out,
            r#"<line x1="{x}" y1="{y0}" x2="{x}" y2="{}" stroke="black"/><text x="{x}" y="{}" text-anchor="middle" font-size="12">{label}</text>"#,
            y0 + 5.0,
            y0 + 20.0
        )
        .expect("string write");
    }
    for v in [0.0, 0.5, 1.0] {
        let y = py(v);
        writeln!(
            out,
            r#"<line x1="{}" y1="{y}" x2="{x0}" y2="{y}" stroke="black"/><text x="{}" y="{}" text-anchor="end" font-size="12">{v}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0
        )
        .expect("string write");
    }
    for k in 0..width {
        let points: Vec<String> =
            grid.iter().zip(rows).map(|(t, row)| format!("{:.2},{:.2}", px(*t), py(row[k]))).collect();
        writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"><title>f{k}</title></polyline>"#,
            PALETTE[k % PALETTE.len()],
            points.join(" ")
        )
        .expect("string write");
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.5), "0.500000000000");
        assert_eq!(sig12(std::f64::consts::PI), "3.14159265359");
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.234e-9), "1.23400000000e-9");
    }

    #[test]
    fn csv_and_svg_shapes() {
        let grid = [1.0, 2.0];
        let rows = vec![vec![0.25, 0.75], vec![0.5, 0.5]];
        let csv = curve_csv(&grid, &rows, "f");
        assert!(csv.starts_with("theta,f0,f1\n1.00000000000,0.250000000000,"));
        assert_eq!(csv.lines().count(), 3);
        let svg = curves_svg(&grid, &rows, "n = 1");
        assert_eq!(svg.matches("<polyline").count(), 2);
    }
}
