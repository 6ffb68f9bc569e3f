//! Minimal log-log reliability diagram.

use std::fmt::Write as _;

use losscal_core::CalibrationCurve;

const SIZE: f64 = 480.0;
const MARGIN: f64 = 56.0;

struct LogAxis {
    lo_exp: i32,
}

impl LogAxis {
    fn span(&self) -> f64 {
        -(self.lo_exp as f64)
    }

    /// Position along the axis in `[0, 1]`.
    fn unit(&self, v: f64) -> f64 {
        (v.log10() - self.lo_exp as f64) / self.span()
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + self.unit(v) * (SIZE - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        SIZE - MARGIN - self.unit(v) * (SIZE - 2.0 * MARGIN)
    }
}

/// Renders bin points (mean score against frequency), the diagonal and an
/// optional theoretical curve given as `(score, frequency)` pairs. Points
/// with a zero coordinate cannot be placed on log axes and are skipped.
pub fn reliability_svg(curve: &CalibrationCurve, theory: Option<&[(f64, f64)]>) -> String {
    let points: Vec<(f64, f64)> = curve
        .bins
        .iter()
        .map(|b| (b.mean_score, b.empirical_freq))
        .filter(|&(x, y)| x > 0.0 && y > 0.0)
        .collect();
    let smallest = points
        .iter()
        .chain(theory.unwrap_or(&[]))
        .flat_map(|&(x, y)| [x, y])
        .filter(|v| *v > 0.0)
        .fold(1.0f64, f64::min);
    let axis = LogAxis {
        lo_exp: (smallest.log10().floor() as i32).min(-1),
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (lo, hi) = (MARGIN, SIZE - MARGIN);
    let _ = writeln!(
        s,
        r#"<rect x="{lo}" y="{lo}" width="{w}" height="{w}" fill="none" stroke="black"/>"#,
        w = hi - lo
    );
    for e in axis.lo_exp..=0 {
        let v = 10f64.powi(e);
        let (px, py) = (axis.x(v), axis.y(v));
        let _ = writeln!(
            s,
            r##"<line x1="{px:.2}" y1="{lo}" x2="{px:.2}" y2="{hi}" stroke="#ddd"/><line x1="{lo}" y1="{py:.2}" x2="{hi}" y2="{py:.2}" stroke="#ddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">1e{e}</text><text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#,
            hi + 16.0,
            lo - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">confidence score</text>"#,
        SIZE / 2.0,
        SIZE - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">label frequency</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    let floor = 10f64.powi(axis.lo_exp);
    let _ = writeln!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#888" stroke-dasharray="4 3"/>"##,
        axis.x(floor),
        axis.y(floor),
        axis.x(1.0),
        axis.y(1.0)
    );
    if let Some(theory) = theory {
        let path: Vec<String> = theory
            .iter()
            .filter(|&&(x, y)| x >= floor && y >= floor)
            .map(|&(x, y)| format!("{:.2},{:.2}", axis.x(x), axis.y(y)))
            .collect();
        if !path.is_empty() {
            let _ = writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##,
                path.join(" ")
            );
        }
    }
    for (x, y) in points {
        let _ = writeln!(
            s,
            r##"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="#1f77b4"/>"##,
            axis.x(x),
            axis.y(y)
        );
    }
    s.push_str("</svg>\n");
    s
}
