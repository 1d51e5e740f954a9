use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub n: usize,
    /// Two-sided, from Student's t with n - 2 degrees of freedom.
    pub p_value: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample Pearson correlation with a two-sided p-value.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput(format!("pearson: {} x values vs {} y values", x.len(), y.len())));
    }
    let n = x.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!("pearson needs at least 3 points, got {n}")));
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("pearson correlation with zero variance".into()));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let df = (n - 2) as f64;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * dist.sf(t.abs())).min(1.0)
    };
    Ok(Correlation { r, n, p_value })
}

/// Least-squares line `(slope, intercept)`; `None` for fewer than two points
/// or constant x.
pub fn least_squares(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub page: String,
    pub x: f64,
    pub y: f64,
}

/// CSV with columns `page,x,y`.
pub fn scatter_csv(points: &[ScatterPoint]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["page", "x", "y"]).expect("in-memory write");
    for p in points {
        w.write_record([p.page.clone(), p.x.to_string(), p.y.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

/// Scatter plot on the unit square with the least-squares line.
/// `None` below two points.
pub fn scatter_svg(points: &[ScatterPoint], title: &str, x_label: &str, y_label: &str) -> Option<String> {
    if points.len() < 2 {
        return None;
    }
    const SIZE: f64 = 400.0;
    const PAD: f64 = 50.0;
    let sx = |x: f64| PAD + x.clamp(0.0, 1.0) * SIZE;
    let sy = |y: f64| PAD + (1.0 - y.clamp(0.0, 1.0)) * SIZE;
    let total = SIZE + 2.0 * PAD;
    let esc = |s: &str| s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total}" height="{total}" viewBox="0 0 {total} {total}">"#
    );
    let _ = writeln!(s, r#"<rect x="{PAD}" y="{PAD}" width="{SIZE}" height="{SIZE}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="25" text-anchor="middle">{}</text>"#, total / 2.0, esc(title));
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        total / 2.0,
        total - 12.0,
        esc(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" transform="rotate(-90 15 {})">{}</text>"#,
        total / 2.0,
        total / 2.0,
        esc(y_label)
    );
    for p in points {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, sx(p.x), sy(p.y));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.x, p.y)).collect();
    if let Some((m, b)) = least_squares(&xy) {
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="crimson" data-slope="{m}" data-intercept="{b}"/>"#,
            sx(0.0),
            sy(b),
            sx(1.0),
            sy(m + b)
        );
    }
    s.push_str("</svg>\n");
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_correlations() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &x).unwrap().r, 1.0);
        assert_eq!(pearson(&x, &neg).unwrap().r, -1.0);
        assert_eq!(pearson(&x, &x).unwrap().p_value, 0.0);
    }

    #[test]
    fn worked_example() {
        // Means 2.5 and 2.75; sxy = 5.5, sxx = 5, syy = 8.75.
        let c = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 5.0]).unwrap();
        let expected = 5.5 / (5.0f64.sqrt() * 8.75f64.sqrt());
        assert!((c.r - expected).abs() < 1e-12);
        assert_eq!(c.n, 4);
        // With 2 degrees of freedom the two-sided tail is 1 - t / sqrt(2 + t^2).
        let t = expected * (2.0 / (1.0 - expected * expected)).sqrt();
        let p = 1.0 - t / (2.0 + t * t).sqrt();
        assert!((c.p_value - p).abs() < 1e-9, "{} vs {p}", c.p_value);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(Error::Undefined(_))));
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn line_through_two_points() {
        let (m, b) = least_squares(&[(0.0, 1.0), (2.0, 5.0)]).unwrap();
        assert_eq!((m, b), (2.0, 1.0));
        assert!(least_squares(&[(1.0, 1.0)]).is_none());
    }

    #[test]
    fn collinear_points_leave_no_residual() {
        let pts: Vec<(f64, f64)> = (0..6).map(|i| (i as f64, 0.5 * i as f64 - 2.0)).collect();
        let (m, b) = least_squares(&pts).unwrap();
        for (x, y) in pts {
            assert!((m * x + b - y).abs() < 1e-12);
        }
    }

    #[test]
    fn twenty_point_fixture_matches_normal_equations() {
        let pts: Vec<(f64, f64)> = (0..20)
            .map(|i| {
                let x = i as f64 / 19.0;
                (x, 0.3 + 0.6 * x + if i % 3 == 0 { 0.05 } else { -0.02 })
            })
            .collect();
        // Closed form from the raw sums.
        let n = 20.0;
        let (sx, sy): (f64, f64) = (pts.iter().map(|p| p.0).sum(), pts.iter().map(|p| p.1).sum());
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        let (m, b) = least_squares(&pts).unwrap();
        assert!((m - slope).abs() < 1e-12 && (b - intercept).abs() < 1e-12);
    }

    #[test]
    fn csv_and_svg() {
        let pts = vec![
            ScatterPoint { page: "a".into(), x: 0.2, y: 0.3 },
            ScatterPoint { page: "b".into(), x: 0.8, y: 0.9 },
        ];
        assert_eq!(scatter_csv(&pts), "page,x,y\na,0.2,0.3\nb,0.8,0.9\n");
        let svg = scatter_svg(&pts, "note", "iu", "F1").unwrap();
        assert_eq!(svg.matches("<circle").count(), 2);
        assert!(svg.contains("<line"));
        assert!(scatter_svg(&pts[..1], "note", "iu", "F1").is_none());
    }

    proptest! {
        #[test]
        fn affine_invariance(
            v in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..30),
            a in 0.1f64..10.0, b in -5.0f64..5.0, c in 0.1f64..10.0, d in -5.0f64..5.0,
        ) {
            let x: Vec<f64> = v.iter().map(|p| p.0).collect();
            let y: Vec<f64> = v.iter().map(|p| p.1).collect();
            if let Ok(base) = pearson(&x, &y) {
                let x2: Vec<f64> = x.iter().map(|t| a * t + b).collect();
                let y2: Vec<f64> = y.iter().map(|t| c * t + d).collect();
                let moved = pearson(&x2, &y2).unwrap();
                prop_assert!((base.r - moved.r).abs() < 1e-9);
            }
        }
    }
}
