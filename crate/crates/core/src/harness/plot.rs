//! Minimal standalone SVG line plots.

use std::fmt::Write as _;

use crate::check::Check;
use crate::solvers::DensityField;

/// One polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Drawn as red dashed markers.
    pub failed: bool,
}

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN: f64 = 50.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"];

fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for (&x, &y) in s.xs.iter().zip(&s.ys) {
            if x.is_finite() && y.is_finite() {
                b = (b.0.min(x), b.1.max(x), b.2.min(y), b.3.max(y));
            }
        }
    }
    if !b.0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if b.1 <= b.0 {
        b.1 = b.0 + 1.0;
    }
    if b.3 <= b.2 {
        b.3 = b.2 + 1.0;
    }
    b
}

/// SVG document with one polyline per series and a legend.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let (x0, x1, y0, y1) = bounds(series);
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{m} {b} L{r} {b} M{m} {b} L{m} {m}" stroke="black" fill="none"/>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, W / 2.0, H - 10.0, escape(x_label));
    let _ = writeln!(s, r#"<text x="12" y="{}" font-size="12" transform="rotate(-90 12 {})">{}</text>"#, H / 2.0, H / 2.0, escape(y_label));
    for (v, anchor, x, y) in [(x0, "start", MARGIN, H - MARGIN + 15.0), (x1, "end", W - MARGIN, H - MARGIN + 15.0)] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="10">{v:.3e}</text>"#);
    }
    for (v, y) in [(y0, H - MARGIN), (y1, MARGIN)] {
        let _ = writeln!(s, r#"<text x="{}" y="{y}" text-anchor="end" font-size="10">{v:.3e}</text>"#, MARGIN - 4.0);
    }
    let mut colour = 0;
    for (k, ser) in series.iter().enumerate() {
        let pts: Vec<String> = ser
            .xs
            .iter()
            .zip(&ser.ys)
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let (stroke, extra) = if ser.failed {
            ("#d62728", r#" stroke-dasharray="6 3""#)
        } else {
            colour += 1;
            (PALETTE[(colour - 1) % PALETTE.len()], "")
        };
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"{extra}/>"#, pts.join(" "));
        let ly = MARGIN + 14.0 * k as f64;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{ly}" font-size="11" fill="{stroke}" text-anchor="end">{}</text>"#,
            W - MARGIN,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Density snapshots of several fields at one time.
pub fn snapshot_plot(t: f64, fields: &[(String, &DensityField)]) -> String {
    let series: Vec<Series> = fields
        .iter()
        .filter_map(|(name, f)| {
            f.at(t).ok().map(|row| Series { name: name.clone(), xs: f.grid().nodes(), ys: row.to_vec(), failed: false })
        })
        .collect();
    line_plot(&format!("snapshot at t = {t}"), "x", "value", &series)
}

/// Trapezoid mass against time.
pub fn mass_plot(fields: &[(String, &DensityField)]) -> String {
    let series: Vec<Series> = fields
        .iter()
        .map(|(name, f)| Series { name: name.clone(), xs: f.times().to_vec(), ys: f.mass().to_vec(), failed: false })
        .collect();
    line_plot("mass against time", "t", "mass", &series)
}

/// `log10(error / tolerance)` per check; failing checks form their own series.
pub fn check_plot(checks: &[Check]) -> String {
    let mut ok = Series { name: "passed".into(), xs: vec![], ys: vec![], failed: false };
    let mut bad = Series { name: "failed".into(), xs: vec![], ys: vec![], failed: true };
    for (k, c) in checks.iter().enumerate() {
        if c.tolerance == f64::MAX {
            continue;
        }
        let ratio = (c.error.abs().max(1e-300) / c.tolerance.max(1e-300)).log10();
        let s = if c.passed { &mut ok } else { &mut bad };
        s.xs.push(k as f64);
        s.ys.push(ratio);
    }
    let series: Vec<Series> = [ok, bad].into_iter().filter(|s| !s.xs.is_empty()).collect();
    line_plot("log10(error / tolerance) by check", "check index", "log10 ratio", &series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spatial::Grid1D;

    #[test]
    fn one_field_one_polyline() {
        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        let f = DensityField::new(g, vec![0.5], vec![g.sample(|x| x)]).unwrap();
        let svg = snapshot_plot(0.5, &[("classical".into(), &f)]);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn failures_get_a_distinct_series() {
        let checks = vec![Check::absolute("a", 1.0, 1.0, 1e-3), Check::absolute("b", 2.0, 1.0, 1e-3)];
        let svg = check_plot(&checks);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("stroke-dasharray") && svg.contains(">failed<"));
        let only_ok = check_plot(&checks[..1]);
        assert!(!only_ok.contains("stroke-dasharray"));
    }
}
