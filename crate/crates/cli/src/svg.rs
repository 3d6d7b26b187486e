//! Minimal hand-written SVG charts.

use std::fmt::Write;

pub const PALETTE: [&str; 8] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Axis-aligned plotting area with a linear data-to-pixel map.
pub struct Frame {
    out: String,
    width: f64,
    height: f64,
    margin: (f64, f64, f64, f64), // top, right, bottom, left
    x: (f64, f64),
    y: (f64, f64),
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = lo.abs().max(1.0) * 0.05;
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

/// Bounds of an iterator of finite values.
pub fn bounds(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values
        .into_iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

impl Frame {
    pub fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let (width, height) = (640.0, 420.0);
        let mut f = Frame {
            out: String::new(),
            width,
            height,
            margin: (40.0, 110.0, 50.0, 70.0),
            x: padded(x.0, x.1),
            y: padded(y.0, y.1),
        };
        let _ = write!(
            f.out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
        );
        f.out.push('\n');
        let _ = writeln!(f.out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            f.out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            width / 2.0,
            escape(title)
        );
        f.axes(x_label, y_label);
        f
    }

    /// Forces equal data units on both axes (for scatter plots).
    pub fn equal_aspect(title: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let (x, y) = (padded(x.0, x.1), padded(y.0, y.1));
        let span = (x.1 - x.0).max(y.1 - y.0);
        let cx = (x.0 + x.1) / 2.0;
        let cy = (y.0 + y.1) / 2.0;
        // plotting area is 460 × 330, so stretch x by the same ratio
        let sx = span * 460.0 / 330.0;
        Frame::new(title, "x0", "x1", (cx - sx / 2.0, cx + sx / 2.0), (cy - span / 2.0, cy + span / 2.0))
    }

    fn px(&self, v: f64) -> f64 {
        let (_, r, _, l) = self.margin;
        l + (v - self.x.0) / (self.x.1 - self.x.0) * (self.width - l - r)
    }

    fn py(&self, v: f64) -> f64 {
        let (t, _, b, _) = self.margin;
        self.height - b - (v - self.y.0) / (self.y.1 - self.y.0) * (self.height - t - b)
    }

    fn axes(&mut self, x_label: &str, y_label: &str) {
        let (t, r, b, l) = self.margin;
        let (x0, y0, x1, y1) = (l, self.height - b, self.width - r, t);
        let _ = writeln!(
            self.out,
            r##"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
            x1 - x0,
            y0 - y1
        );
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let (xp, yp) = (self.px(xv), self.py(yv));
            let _ = writeln!(
                self.out,
                r##"<line x1="{xp:.2}" y1="{y0}" x2="{xp:.2}" y2="{}" stroke="#444"/><text x="{xp:.2}" y="{}" text-anchor="middle">{}</text>"##,
                y0 + 4.0,
                y0 + 16.0,
                fmt_tick(xv)
            );
            let _ = writeln!(
                self.out,
                r##"<line x1="{}" y1="{yp:.2}" x2="{x0}" y2="{yp:.2}" stroke="#444"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"##,
                x0 - 4.0,
                x0 - 6.0,
                yp + 4.0,
                fmt_tick(yv)
            );
        }
        let _ = writeln!(
            self.out,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            (x0 + x1) / 2.0,
            self.height - 12.0,
            escape(x_label)
        );
        let _ = writeln!(
            self.out,
            r#"<text transform="translate(16 {}) rotate(-90)" text-anchor="middle">{}</text>"#,
            (y0 + y1) / 2.0,
            escape(y_label)
        );
    }

    pub fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str, width: f64, opacity: f64) {
        if pts.is_empty() {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect();
        let _ = writeln!(
            self.out,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}" stroke-opacity="{opacity}"/>"#,
            coords.join(" ")
        );
    }

    pub fn polygon(&mut self, pts: &[(f64, f64)], stroke: &str, fill_opacity: f64) {
        if pts.len() < 2 {
            return;
        }
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect();
        let _ = writeln!(
            self.out,
            r#"<polygon points="{}" fill="{stroke}" fill-opacity="{fill_opacity}" stroke="{stroke}" stroke-width="1.5"/>"#,
            coords.join(" ")
        );
    }

    pub fn circle(&mut self, x: f64, y: f64, r: f64, fill: &str, opacity: f64) {
        let _ = writeln!(
            self.out,
            r#"<circle cx="{:.2}" cy="{:.2}" r="{r}" fill="{fill}" fill-opacity="{opacity}"/>"#,
            self.px(x),
            self.py(y)
        );
    }

    pub fn marker_cross(&mut self, x: f64, y: f64, size: f64, stroke: &str) {
        let (cx, cy) = (self.px(x), self.py(y));
        let _ = writeln!(
            self.out,
            r#"<path d="M{:.2} {:.2}L{:.2} {:.2}M{:.2} {:.2}L{:.2} {:.2}" stroke="{stroke}" stroke-width="2"/>"#,
            cx - size,
            cy - size,
            cx + size,
            cy + size,
            cx - size,
            cy + size,
            cx + size,
            cy - size
        );
    }

    /// Vertical bar from the x-axis floor (or 0, if visible) to `top`.
    pub fn bar(&mut self, center: f64, half_width: f64, top: f64, fill: &str) {
        let base = if self.y.0 <= 0.0 && self.y.1 >= 0.0 { 0.0 } else { self.y.0 };
        let (x0, x1) = (self.px(center - half_width), self.px(center + half_width));
        let (ya, yb) = (self.py(top), self.py(base));
        let _ = writeln!(
            self.out,
            r#"<rect x="{x0:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
            ya.min(yb),
            x1 - x0,
            (yb - ya).abs()
        );
    }

    pub fn error_bar(&mut self, x: f64, lo: f64, hi: f64, stroke: &str) {
        let xp = self.px(x);
        let _ = writeln!(
            self.out,
            r#"<path d="M{xp:.2} {:.2}V{:.2}M{:.2} {:.2}H{:.2}M{:.2} {:.2}H{:.2}" stroke="{stroke}"/>"#,
            self.py(lo),
            self.py(hi),
            xp - 4.0,
            self.py(lo),
            xp + 4.0,
            xp - 4.0,
            self.py(hi),
            xp + 4.0
        );
    }

    /// Text label under the x-axis at data position `x`.
    pub fn x_category(&mut self, x: f64, label: &str) {
        let y = self.height - self.margin.2 + 28.0;
        let _ = writeln!(
            self.out,
            r#"<text x="{:.2}" y="{y}" text-anchor="middle" font-size="10">{}</text>"#,
            self.px(x),
            escape(label)
        );
    }

    pub fn legend(&mut self, entries: &[(&str, &str)]) {
        let x = self.width - self.margin.1 + 10.0;
        for (i, (label, col)) in entries.iter().enumerate() {
            let y = self.margin.0 + 12.0 + 16.0 * i as f64;
            let _ = writeln!(
                self.out,
                r#"<rect x="{x}" y="{}" width="10" height="10" fill="{col}"/><text x="{}" y="{y}">{}</text>"#,
                y - 9.0,
                x + 14.0,
                escape(label)
            );
        }
    }

    pub fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}
