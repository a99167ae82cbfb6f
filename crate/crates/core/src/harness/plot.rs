use std::fmt::Write as _;
use std::path::Path;

use super::aggregate::AggregateResult;
use crate::{Error, Result};

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn value(&self, v: f64) -> f64 {
        if self.log {
            v.log10()
        } else {
            v
        }
    }

    fn frac(&self, v: f64) -> f64 {
        (self.value(v) - self.lo) / (self.hi - self.lo)
    }
}

fn y_axis(result: &AggregateResult) -> Axis {
    let values = result
        .curves
        .iter()
        .flat_map(|c| c.band.min.iter().chain(&c.band.max))
        .copied();
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    let log = lo > 0.0;
    let (mut lo, mut hi) = if log {
        (lo.log10(), hi.log10())
    } else {
        (lo, hi)
    };
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 1e-12 {
            lo.abs() * 0.1
        } else {
            1.0
        };
        lo -= pad;
        hi += pad;
    } else {
        let pad = (hi - lo) * 0.05;
        lo -= pad;
        hi += pad;
    }
    Axis { lo, hi, log }
}

/// Renders median lines with min/max bands, one colour per algorithm.
pub fn render_svg(result: &AggregateResult) -> Result<String> {
    if result.curves.is_empty() || result.curves.iter().all(|c| c.band.is_empty()) {
        return Err(Error::EmptyResult);
    }
    let n_max = result
        .curves
        .iter()
        .map(|c| c.band.len())
        .max()
        .unwrap_or(1);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let y = y_axis(result);
    let sx = |i: usize| {
        let span = (n_max.max(2) - 1) as f64;
        LEFT + pw * (i as f64) / span
    };
    let sy = |v: f64| TOP + ph * (1.0 - y.frac(v));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&result.objective)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );

    for k in 0..=5 {
        let t = k as f64 / 5.0;
        let gy = TOP + ph * (1.0 - t);
        let raw = y.lo + (y.hi - y.lo) * t;
        let label = if y.log {
            format!("1e{raw:.1}")
        } else {
            format!("{raw:.3}")
        };
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{gy:.2}" x2="{:.2}" y2="{gy:.2}" stroke="#dddddd"/><text x="{:.1}" y="{:.2}" text-anchor="end">{label}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            gy + 4.0
        );
        let idx = ((n_max.max(2) - 1) as f64 * t).round() as usize;
        let gx = sx(idx);
        let _ = writeln!(
            s,
            r#"<text x="{gx:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            TOP + ph + 18.0,
            idx + 1
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">evaluation</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">best so far{}</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0,
        if y.log { " (log)" } else { "" }
    );

    for (k, curve) in result.curves.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let band = &curve.band;
        let mut poly = String::new();
        for (i, v) in band.max.iter().enumerate() {
            let _ = write!(poly, "{:.2},{:.2} ", sx(i), sy(*v));
        }
        for (i, v) in band.min.iter().enumerate().rev() {
            let _ = write!(poly, "{:.2},{:.2} ", sx(i), sy(*v));
        }
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#,
            poly.trim_end()
        );
        let line: Vec<String> = band
            .median
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{:.2},{:.2}", sx(i), sy(*v)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            line.join(" ")
        );
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = WIDTH - RIGHT + 16.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.1}" y2="{ly}" stroke="{color}" stroke-width="3"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 24.0,
            lx + 30.0,
            ly + 4.0,
            escape(&curve.algorithm)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(result: &AggregateResult, path: &Path) -> Result<()> {
    let svg = render_svg(result)?;
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::aggregate::{AlgorithmCurve, Band};

    fn result(curves: Vec<(&str, Vec<f64>)>) -> AggregateResult {
        AggregateResult {
            objective: "demo <1>".into(),
            curves: curves
                .into_iter()
                .map(|(name, c)| AlgorithmCurve {
                    algorithm: name.into(),
                    runs: 1,
                    band: Band {
                        median: c.clone(),
                        min: c.clone(),
                        max: c,
                    },
                })
                .collect(),
        }
    }

    #[test]
    fn empty_is_an_error() {
        assert!(render_svg(&result(vec![])).is_err());
    }

    #[test]
    fn well_formed_with_legend() {
        let r = result(vec![
            ("pmbo & co", vec![5.0, 2.0, 1.0]),
            ("random", vec![-1.0, -2.0, -2.0]),
        ]);
        let svg = render_svg(&r).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let texts: Vec<&str> = doc.descendants().filter_map(|n| n.text()).collect();
        assert!(texts.contains(&"pmbo & co"));
        assert!(texts.contains(&"random"));
        assert_eq!(
            doc.descendants()
                .filter(|n| n.has_tag_name("polyline"))
                .count(),
            2
        );
    }

    #[test]
    fn constant_curve_is_horizontal() {
        let svg = render_svg(&result(vec![("flat", vec![7.0; 4])])).unwrap();
        let doc = roxmltree::Document::parse(&svg).unwrap();
        let line = doc
            .descendants()
            .find(|n| n.has_tag_name("polyline"))
            .unwrap();
        let ys: Vec<&str> = line
            .attribute("points")
            .unwrap()
            .split(' ')
            .map(|p| p.split(',').nth(1).unwrap())
            .collect();
        assert!(ys.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn log_axis_only_for_positive_values() {
        let pos = render_svg(&result(vec![("a", vec![10.0, 1.0])])).unwrap();
        assert!(pos.contains("(log)"));
        let neg = render_svg(&result(vec![("a", vec![1.0, -1.0])])).unwrap();
        assert!(!neg.contains("(log)"));
    }
}
