//! Minimal hand-written SVG plots.

use std::fmt::Write as _;

use super::{GroupReport, PrPoint};

const W: f64 = 420.0;
const H: f64 = 300.0;
const MARGIN: f64 = 40.0;

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-family="sans-serif" font-size="13">{title}</text>"#,
        W / 2.0
    );
    let (x0, y0, x1, y1) = (MARGIN, H - MARGIN, W - MARGIN / 2.0, MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{x0} {y1} L{x0} {y0} L{x1} {y0}" stroke="black" fill="none"/>"#
    );
    s
}

fn px(v: f64) -> f64 {
    MARGIN + v * (W - 1.5 * MARGIN)
}

fn py(v: f64) -> f64 {
    (H - MARGIN) - v * (H - 2.0 * MARGIN)
}

pub fn pr_curve_svg(curve: &[PrPoint], ap: f64) -> String {
    let mut s = header(&format!("precision / recall (AP {ap:.3})"));
    let mut pts = String::new();
    if let Some(first) = curve.first() {
        let _ = write!(pts, "{:.2},{:.2}", px(0.0), py(first.precision));
    }
    for p in curve {
        let _ = write!(pts, " {:.2},{:.2}", px(p.recall), py(p.precision));
    }
    let _ = writeln!(s, r#"<polyline points="{pts}" stroke="steelblue" stroke-width="2" fill="none"/>"#);
    for (v, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">{label}</text>"#,
            px(v),
            H - MARGIN + 14.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{label}</text>"#,
            MARGIN - 4.0,
            py(v) + 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">recall</text>"#,
        W / 2.0,
        H - 6.0
    );
    s.push_str("</svg>\n");
    s
}

/// Grouped bars: per density group, the MAE of S1, S2, S3 and the fused map.
pub fn density_groups_svg(groups: &[GroupReport]) -> String {
    const COLORS: [&str; 4] = ["#c44e52", "#dd8452", "#55a868", "#4c72b0"];
    let mut s = header("count MAE per density group (S1, S2, S3, fused)");
    let max = groups
        .iter()
        .flat_map(|g| g.mae)
        .fold(0.0_f64, f64::max)
        .max(1e-9);
    let slot = 1.0 / groups.len().max(1) as f64;
    let bar = slot / 5.0;
    for (gi, g) in groups.iter().enumerate() {
        for (j, m) in g.mae.iter().enumerate() {
            let x = px(gi as f64 * slot + bar * (j as f64 + 0.5));
            let top = py(m / max);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                px(bar) - MARGIN,
                py(0.0) - top,
                COLORS[j]
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="middle">G{}</text>"#,
            px((gi as f64 + 0.5) * slot),
            H - MARGIN + 14.0,
            g.group
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{max:.2}</text>"#,
        MARGIN - 4.0,
        py(1.0) + 3.0
    );
    s.push_str("</svg>\n");
    s
}
