//! SVG rendering of configurations as hexagon tilings with feature overlays.

use std::fmt::Write;

use crate::config::Configuration;
use crate::error::{invalid, Result};
use crate::features::FeatureEngine;
use crate::geometry::Vertex;

const OPEN: &str = "#f2efe6";
const CLOSED: &str = "#3b3b3b";
const ACCENT_L: &str = "#e0782a";
const ACCENT_F: &str = "#4f8fd0";
const DOT: &str = "#b0102a";
const PATH: &str = "#1b7f3b";
const SCALE: f64 = 20.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Overlays {
    pub l: bool,
    pub f: bool,
    pub q: bool,
    pub gamma: bool,
}

impl Overlays {
    /// Parses letters from `LFQG` in any order.
    pub fn parse(s: &str) -> Result<Self> {
        let mut o = Overlays::default();
        for ch in s.chars() {
            match ch.to_ascii_uppercase() {
                'L' => o.l = true,
                'F' => o.f = true,
                'Q' => o.q = true,
                'G' => o.gamma = true,
                other => return invalid(format!("unknown overlay {other:?}; use letters from LFQG")),
            }
        }
        Ok(o)
    }

    fn any(&self) -> bool {
        self.l || self.f || self.q || self.gamma
    }
}

fn center(v: Vertex, n: i32) -> (f64, f64) {
    let x = (v.x + n) as f64 + (v.y + n) as f64 / 2.0;
    let y = (2 * n - (v.y + n)) as f64 * 3f64.sqrt() / 2.0;
    (SCALE * (x + 1.0), SCALE * (y + 1.0))
}

fn hexagon(out: &mut String, (cx, cy): (f64, f64), fill: &str) {
    let r = SCALE / 3f64.sqrt();
    let mut pts = String::new();
    for k in 0..6 {
        let a = std::f64::consts::PI / 3.0 * k as f64 + std::f64::consts::PI / 6.0;
        let _ = write!(pts, "{:.3},{:.3} ", cx + r * a.cos(), cy + r * a.sin());
    }
    let _ = writeln!(out, "<polygon points=\"{}\" fill=\"{fill}\" stroke=\"#888\" stroke-width=\"0.5\"/>", pts.trim_end());
}

pub fn render_svg(config: &Configuration, overlays: Overlays) -> Result<String> {
    let n = config.n() as i32;
    let sets = if overlays.any() { Some(FeatureEngine::new(config.n()).sets(config)?) } else { None };
    let side = 2 * n + 1;
    let width = SCALE * (side as f64 * 1.5 + 2.0);
    let legend_h = 70.0;
    let height = SCALE * (side as f64 * 3f64.sqrt() / 2.0 + 2.0) + legend_h;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.1}\" height=\"{height:.1}\" viewBox=\"0 0 {width:.1} {height:.1}\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    for i in 0..config.len() {
        let v = config.vertex(i);
        let mut fill = if config.is_open_idx(i) { OPEN } else { CLOSED };
        if let Some(s) = &sets {
            if overlays.l && s.l.contains(&v) {
                fill = ACCENT_L;
            } else if overlays.f && s.f.contains(&v) {
                fill = ACCENT_F;
            }
        }
        hexagon(&mut out, center(v, n), fill);
    }
    if let Some(s) = &sets {
        if overlays.gamma && !s.gamma.is_empty() {
            let pts: Vec<String> = s
                .gamma
                .iter()
                .map(|v| {
                    let (x, y) = center(*v, n);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            let _ = writeln!(out, "<polyline points=\"{}\" fill=\"none\" stroke=\"{PATH}\" stroke-width=\"3\"/>", pts.join(" "));
        }
        if overlays.q {
            for v in &s.q {
                let (x, y) = center(*v, n);
                let _ = writeln!(out, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"{:.3}\" fill=\"{DOT}\"/>", SCALE / 5.0);
            }
        }
    }
    let ly = height - legend_h + 15.0;
    let items = [
        (OPEN, "open"),
        (CLOSED, "closed"),
        (ACCENT_L, "lowest crossing L"),
        (ACCENT_F, "pioneering F \\ L"),
        (DOT, "pivotal Q"),
        (PATH, "path gamma"),
    ];
    for (k, (color, label)) in items.iter().enumerate() {
        let x = 10.0 + (k % 3) as f64 * 150.0;
        let y = ly + (k / 3) as f64 * 25.0;
        let _ = writeln!(out, "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"14\" height=\"14\" fill=\"{color}\" stroke=\"#888\"/>");
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>",
            x + 20.0,
            y + 12.0
        );
    }
    out.push_str("</svg>\n");
    Ok(out)
}
