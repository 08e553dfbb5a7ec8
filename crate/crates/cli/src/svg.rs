//! Minimal SVG writer for the landscape panels.

use std::fmt::Write as _;

/// Side of one square panel, in pixels.
pub const PANEL: f64 = 600.0;

const STYLE: &str = "\
.frame{fill:#fff;stroke:#333;stroke-width:1}\
.level{fill:none;stroke:#aaa;stroke-width:0.75}\
.eps{fill:none;stroke:#d62728;stroke-width:2}\
.ghost{fill:none;stroke:#d62728;stroke-width:1;stroke-dasharray:4 3}\
.gf{fill:none;stroke:#1f77b4;stroke-width:1.5}\
.anneal{fill:none;stroke:#2ca02c;stroke-width:1.5}\
.gf-dot{fill:#1f77b4}\
.anneal-dot{fill:#2ca02c}\
.star{fill:#000}\
text{font-family:sans-serif;font-size:14px}";

fn f(x: f64) -> String {
    format!("{x:.6}")
}

/// Maps a square box in model coordinates onto a panel; y points up.
#[derive(Debug, Clone, Copy)]
pub struct View {
    pub x_min: f64,
    pub y_min: f64,
    /// Pixels per model unit, same on both axes.
    pub scale: f64,
}

impl View {
    pub fn centered(center: [f64; 2], half_width: f64) -> Self {
        Self { x_min: center[0] - half_width, y_min: center[1] - half_width, scale: PANEL / (2.0 * half_width) }
    }

    pub fn px(&self, x: f64) -> f64 {
        (x - self.x_min) * self.scale
    }

    pub fn py(&self, y: f64) -> f64 {
        PANEL - (y - self.y_min) * self.scale
    }
}

pub struct Svg {
    body: String,
    panels: usize,
    open: bool,
}

impl Svg {
    pub fn new() -> Self {
        Self { body: String::new(), panels: 0, open: false }
    }

    pub fn begin_panel(&mut self, title: &str) {
        self.end_panel();
        let i = self.panels;
        let _ = writeln!(
            self.body,
            "<g id=\"panel-{i}\" transform=\"translate({},0)\">\
             <clipPath id=\"clip-{i}\"><rect width=\"{PANEL}\" height=\"{PANEL}\"/></clipPath>\
             <rect class=\"frame\" width=\"{PANEL}\" height=\"{PANEL}\"/>\
             <text x=\"10\" y=\"22\">{}</text><g clip-path=\"url(#clip-{i})\">",
            f(i as f64 * PANEL),
            escape(title)
        );
        self.panels += 1;
        self.open = true;
    }

    fn end_panel(&mut self) {
        if self.open {
            self.body.push_str("</g></g>\n");
            self.open = false;
        }
    }

    /// Level set `sum_i w_i (x_i - c_i)^2 = value`. A zero weight makes the
    /// set a pair of lines; both zero draws nothing.
    pub fn level_set(&mut self, view: &View, center: [f64; 2], weights: [f64; 2], value: f64, class: &str, id: Option<&str>) {
        let id = id.map(|s| format!(" id=\"{s}\"")).unwrap_or_default();
        let (cx, cy) = (view.px(center[0]), view.py(center[1]));
        match (weights[0] > 0.0, weights[1] > 0.0) {
            (true, true) => {
                let rx = (value / weights[0]).sqrt() * view.scale;
                let ry = (value / weights[1]).sqrt() * view.scale;
                let _ = writeln!(
                    self.body,
                    "<ellipse{id} class=\"{class}\" cx=\"{}\" cy=\"{}\" rx=\"{}\" ry=\"{}\"/>",
                    f(cx), f(cy), f(rx), f(ry)
                );
            }
            (true, false) => {
                let h = (value / weights[0]).sqrt() * view.scale;
                let _ = writeln!(
                    self.body,
                    "<path{id} class=\"{class}\" d=\"M{},0V{PANEL}M{},0V{PANEL}\"/>",
                    f(cx - h), f(cx + h)
                );
            }
            (false, true) => {
                let h = (value / weights[1]).sqrt() * view.scale;
                let _ = writeln!(
                    self.body,
                    "<path{id} class=\"{class}\" d=\"M0,{}H{PANEL}M0,{}H{PANEL}\"/>",
                    f(cy - h), f(cy + h)
                );
            }
            (false, false) => {}
        }
    }

    pub fn polyline(&mut self, view: &View, points: &[[f64; 2]], class: &str, id: &str) {
        let pts: Vec<String> = points.iter().map(|p| format!("{},{}", f(view.px(p[0])), f(view.py(p[1])))).collect();
        let _ = writeln!(self.body, "<polyline id=\"{id}\" class=\"{class}\" points=\"{}\"/>", pts.join(" "));
    }

    pub fn dot(&mut self, view: &View, at: [f64; 2], radius: f64, class: &str, id: &str) {
        let _ = writeln!(
            self.body,
            "<circle id=\"{id}\" class=\"{class}\" cx=\"{}\" cy=\"{}\" r=\"{}\"/>",
            f(view.px(at[0])), f(view.py(at[1])), f(radius)
        );
    }

    pub fn finish(mut self) -> String {
        self.end_panel();
        let width = PANEL * self.panels.max(1) as f64;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{PANEL}\" viewBox=\"0 0 {w} {PANEL}\">\n\
             <style>{STYLE}</style>\n{}</svg>\n",
            self.body,
            w = width
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
