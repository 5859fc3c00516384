//! Dependency-free SVG output: line plots and heat maps built from path and
//! rect elements.

use std::fmt::Write as _;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 46.0;

fn map_range(v: f64, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> f64 {
    if hi - lo < 1e-300 {
        return 0.5 * (out_lo + out_hi);
    }
    out_lo + (v - lo) / (hi - lo) * (out_hi - out_lo)
}

/// Polyline plot of one or more named series over a shared x-axis.
pub fn line_plot(title: &str, x_label: &str, series: &[(&str, &[f64], &[f64])]) -> String {
    let mut xs_min = f64::INFINITY;
    let mut xs_max = f64::NEG_INFINITY;
    let mut ys_min = f64::INFINITY;
    let mut ys_max = f64::NEG_INFINITY;
    for (_, xs, ys) in series {
        for &x in *xs {
            xs_min = xs_min.min(x);
            xs_max = xs_max.max(x);
        }
        for &y in *ys {
            ys_min = ys_min.min(y);
            ys_max = ys_max.max(y);
        }
    }
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-family="monospace" font-size="14">{}</text>"#,
        MARGIN, title
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="monospace" font-size="12">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 8.0,
        x_label
    );
    // axes
    let _ = writeln!(
        out,
        r#"<path d="M {m} {t} L {m} {b} L {r} {b}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - 10.0
    );
    for (i, (name, xs, ys)) in series.iter().enumerate() {
        let mut d = String::new();
        for (j, (&x, &y)) in xs.iter().zip(ys.iter()).enumerate() {
            let px = map_range(x, xs_min, xs_max, MARGIN, WIDTH - 10.0);
            let py = map_range(y, ys_min, ys_max, HEIGHT - MARGIN, MARGIN);
            let _ = write!(d, "{}{px:.2} {py:.2} ", if j == 0 { "M " } else { "L " });
        }
        let color = colors[i % colors.len()];
        let _ = writeln!(out, r#"<path d="{d}" stroke="{color}" fill="none" stroke-width="1.5"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-family="monospace" font-size="12" fill="{color}">{name}</text>"#,
            WIDTH - 120.0,
            30.0 + 16.0 * i as f64
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="8" y="{}" font-family="monospace" font-size="10">[{:.3e}, {:.3e}]</text>"#,
        MARGIN - 6.0,
        ys_min,
        ys_max
    );
    out.push_str("</svg>\n");
    out
}

/// Heat map of a row-major field, downsampled to at most 120 cells per axis.
pub fn heatmap(title: &str, rows: usize, cols: usize, data: &[f64]) -> String {
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let step_r = rows.div_ceil(120).max(1);
    let step_c = cols.div_ceil(120).max(1);
    let n_r = rows.div_ceil(step_r);
    let n_c = cols.div_ceil(step_c);
    let cell_w = (WIDTH - MARGIN - 10.0) / n_c as f64;
    let cell_h = (HEIGHT - MARGIN - 30.0) / n_r as f64;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-family="monospace" font-size="14">{} (range [{:.3e}, {:.3e}])</text>"#,
        MARGIN, title, lo, hi
    );
    for ir in 0..n_r {
        for ic in 0..n_c {
            let v = data[(ir * step_r).min(rows - 1) * cols + (ic * step_c).min(cols - 1)];
            let t = map_range(v, lo, hi, 0.0, 1.0);
            // blue -> white -> red
            let (r, g, b) = if t < 0.5 {
                let u = t * 2.0;
                ((255.0 * u) as u8, (255.0 * u) as u8, 255u8)
            } else {
                let u = (t - 0.5) * 2.0;
                (255u8, (255.0 * (1.0 - u)) as u8, (255.0 * (1.0 - u)) as u8)
            };
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({r},{g},{b})"/>"#,
                MARGIN + ic as f64 * cell_w,
                30.0 + ir as f64 * cell_h,
                cell_w + 0.5,
                cell_h + 0.5
            );
        }
    }
    out.push_str("</svg>\n");
    out
}
