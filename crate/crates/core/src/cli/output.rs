use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::trajectory::{AvoidedCrossing, TrajectoryBundle};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Metadata {
    pub command: String,
    /// SHA-256 of the instance file bytes.
    pub instance_hash: String,
    pub tool_version: String,
    pub timestamp: Option<String>,
    pub seed: Option<u64>,
}

impl Metadata {
    pub fn new(command: &str, instance: &[u8], seed: Option<u64>, timestamp: bool) -> Self {
        let hash = Sha256::digest(instance);
        Self {
            command: command.to_string(),
            instance_hash: hash.iter().map(|b| format!("{b:02x}")).collect(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: timestamp.then(|| chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Row {
    pub x: f64,
    /// `z_λ` in branch order.
    pub z: Vec<Complex64>,
    /// `Γ_λ = -2 Im z_λ`.
    pub gamma: Vec<f64>,
    pub r: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultTable {
    pub metadata: Metadata,
    pub description: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    /// Steps `k -> k+1` whose labeling stayed ambiguous.
    pub flagged_steps: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avoided_crossings: Option<Vec<AvoidedCrossing>>,
}

pub fn column_names(dim: usize) -> Vec<String> {
    let mut c = vec!["x".to_string()];
    for l in 0..dim {
        c.push(format!("re_z_{l}"));
        c.push(format!("im_z_{l}"));
        c.push(format!("gamma_{l}"));
        c.push(format!("r_{l}"));
    }
    c
}

impl ResultTable {
    pub fn from_bundle(metadata: Metadata, description: String, xs: &[f64], tb: &TrajectoryBundle) -> Self {
        let rows = xs
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let z = tb.values_at(k);
                Row {
                    x,
                    gamma: z.iter().map(|z| -2.0 * z.im + 0.0).collect(),
                    r: tb.rigidity.iter().map(|r| r[k]).collect(),
                    z,
                }
            })
            .collect();
        Self {
            metadata,
            description,
            columns: column_names(tb.dim()),
            rows,
            flagged_steps: tb.flagged.clone(),
            avoided_crossings: None,
        }
    }

    /// Comma-separated, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let _ = write!(s, "{}", num(row.x));
            for l in 0..row.z.len() {
                let _ = write!(
                    s,
                    ",{},{},{},{}",
                    num(row.z[l].re),
                    num(row.z[l].im),
                    num(row.gamma[l]),
                    num(row.r[l])
                );
            }
            s.push('\n');
        }
        s
    }
}

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result types serialize");
    s.push('\n');
    s
}

/// Minimal SVG line plot.
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Vec<(f64, f64)>>,
    pub markers: Vec<(f64, f64)>,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

impl Plot {
    pub fn to_svg(&self) -> String {
        let (w, h, m) = (640.0, 480.0, 60.0);
        let pts = self.series.iter().flatten().chain(&self.markers).filter(|p| p.0.is_finite() && p.1.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 < 1e-12 {
            y0 -= 0.5;
            y1 += 0.5;
        }
        let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
        let mut s = String::new();
        let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            s,
            r#"<g stroke="black" stroke-width="1"><line x1="{m}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{m}" y1="{m}" x2="{m}" y2="{b}"/></g>"#,
            b = h - m,
            r = w - m
        );
        let font = r#"font-family="sans-serif" font-size="12""#;
        for i in 0..=4 {
            let fx = x0 + (x1 - x0) * i as f64 / 4.0;
            let fy = y0 + (y1 - y0) * i as f64 / 4.0;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" {font} text-anchor="middle">{}</text>"#,
                sx(fx),
                h - m + 18.0,
                tick(fx)
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" {font} text-anchor="end">{}</text>"#,
                m - 6.0,
                sy(fy) + 4.0,
                tick(fy)
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" {font} text-anchor="middle">{}</text>"#,
            w / 2.0,
            h - 12.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="16" y="{:.2}" {font} text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            h / 2.0,
            h / 2.0,
            escape(&self.y_label)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
            w / 2.0,
            escape(&self.title)
        );
        for (i, series) in self.series.iter().enumerate() {
            let points: Vec<String> = series
                .iter()
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(
                s,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.5" points="{}"/>"#,
                PALETTE[i % PALETTE.len()],
                points.join(" ")
            );
        }
        for &(x, y) in &self.markers {
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="none" stroke="black" stroke-width="1.5"/>"#,
                sx(x),
                sy(y)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> ResultTable {
        ResultTable {
            metadata: Metadata::new("sweep", b"{}", Some(3), false),
            description: "t".into(),
            columns: column_names(1),
            rows: vec![Row {
                x: 0.1,
                z: vec![Complex64::new(1.0 / 3.0, -1e-300)],
                gamma: vec![2e-300],
                r: vec![1.0],
            }],
            flagged_steps: vec![],
            avoided_crossings: None,
        }
    }

    #[test]
    fn csv_layout() {
        let csv = table().to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("x,re_z_0,im_z_0,gamma_0,r_0"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 5);
        assert_eq!(row[1], "3.3333333333333331e-1");
        assert_eq!(row[1].parse::<f64>().unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn json_round_trip_is_exact() {
        let t = table();
        let back: ResultTable = serde_json::from_str(&to_json(&t)).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn metadata_hash() {
        let m = Metadata::new("sweep", b"abc", None, false);
        assert_eq!(m.instance_hash, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
        assert!(m.timestamp.is_none());
    }

    #[test]
    fn svg_is_well_formed() {
        let p = Plot {
            title: "a < b".into(),
            x_label: "Re z".into(),
            y_label: "Im z".into(),
            series: vec![vec![(0.0, 0.0), (1.0, 1.0)], vec![(0.0, 1.0), (f64::NAN, 0.0)]],
            markers: vec![(0.5, 0.5)],
        };
        let svg = p.to_svg();
        assert!(svg.starts_with("<?xml"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("a &lt; b"));
    }
}
