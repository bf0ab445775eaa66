//! Standalone SVG line charts with a fixed view box.

use std::fmt::Write;

const WIDTH: f64 = 1000.0;
const PANEL_HEIGHT: f64 = 280.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 30.0;
const GAP: f64 = 50.0;
/// Traces longer than this are reduced to per-bucket minima and maxima.
const MAX_POINTS: usize = 2000;
const COLOURS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// One named polyline.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points }
    }

    /// Series over `0, 1, 2, ...`.
    pub fn indexed(label: impl Into<String>, values: impl IntoIterator<Item = f64>) -> Self {
        Self::new(label, values.into_iter().enumerate().map(|(i, v)| (i as f64, v)).collect())
    }
}

/// A panel drawn with shared axes for all its series.
pub struct Panel {
    pub title: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Horizontal reference line, e.g. a threshold.
    pub reference: Option<(f64, String)>,
    pub log_y: bool,
}

impl Panel {
    pub fn new(title: impl Into<String>, y_label: impl Into<String>, series: Vec<Series>) -> Self {
        Self { title: title.into(), y_label: y_label.into(), series, reference: None, log_y: false }
    }

    pub fn with_reference(mut self, y: f64, label: impl Into<String>) -> Self {
        self.reference = Some((y, label.into()));
        self
    }

    pub fn log_scale(mut self) -> Self {
        self.log_y = true;
        self
    }
}

fn thin(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    if points.len() <= MAX_POINTS {
        return points.to_vec();
    }
    let bucket = points.len().div_ceil(MAX_POINTS / 2);
    let mut out = Vec::with_capacity(MAX_POINTS + 2);
    for chunk in points.chunks(bucket) {
        let lo = chunk.iter().min_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty chunk");
        let hi = chunk.iter().max_by(|a, b| a.1.total_cmp(&b.1)).expect("non-empty chunk");
        if lo.0 <= hi.0 {
            out.extend([*lo, *hi]);
        } else {
            out.extend([*hi, *lo]);
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.4}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Renders `panels` stacked vertically.
pub fn render(title: &str, panels: &[Panel]) -> String {
    let height = MARGIN_TOP + panels.len() as f64 * (PANEL_HEIGHT + GAP);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(svg, r#"<text x="{}" y="18" font-size="15" text-anchor="middle">{}</text>"#, WIDTH / 2.0, escape(title));
    for (i, panel) in panels.iter().enumerate() {
        let top = MARGIN_TOP + i as f64 * (PANEL_HEIGHT + GAP) + 10.0;
        draw_panel(&mut svg, panel, top);
    }
    svg.push_str("</svg>\n");
    svg
}

fn draw_panel(svg: &mut String, panel: &Panel, top: f64) {
    let transform = |v: f64| if panel.log_y { v.max(f64::MIN_POSITIVE).log10() } else { v };
    let finite: Vec<(f64, f64)> = panel
        .series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite() && (!panel.log_y || *y > 0.0))
        .collect();
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &finite {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(transform(y));
        y1 = y1.max(transform(y));
    }
    if let Some((r, _)) = panel.reference {
        y0 = y0.min(transform(r));
        y1 = y1.max(transform(r));
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| top + PANEL_HEIGHT - (transform(y) - y0) / (y1 - y0) * PANEL_HEIGHT;

    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN_LEFT}" y="{top}" width="{plot_w}" height="{PANEL_HEIGHT}" fill="none" stroke="#444"/>"##
    );
    let _ = writeln!(svg, r#"<text x="{MARGIN_LEFT}" y="{}">{}</text>"#, top - 5.0, escape(&panel.title));
    let _ = writeln!(
        svg,
        r#"<text transform="translate(15 {}) rotate(-90)" text-anchor="middle">{}</text>"#,
        top + PANEL_HEIGHT / 2.0,
        escape(&panel.y_label)
    );
    for k in 0..=4 {
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let py = top + PANEL_HEIGHT - PANEL_HEIGHT * k as f64 / 4.0;
        let label = if panel.log_y { format!("1e{fy:.1}") } else { fmt_tick(fy) };
        let _ = writeln!(svg, r#"<text x="{}" y="{}" text-anchor="end">{label}</text>"#, MARGIN_LEFT - 4.0, py + 4.0);
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let px = MARGIN_LEFT + plot_w * k as f64 / 4.0;
        let _ = writeln!(
            svg,
            r#"<text x="{px}" y="{}" text-anchor="middle">{}</text>"#,
            top + PANEL_HEIGHT + 15.0,
            fmt_tick(fx)
        );
    }
    if let Some((r, label)) = &panel.reference {
        let y = sy(*r);
        let _ = writeln!(
            svg,
            r##"<line x1="{MARGIN_LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#888" stroke-dasharray="6 4"/>"##,
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(svg, r##"<text x="{:.2}" y="{:.2}" text-anchor="end" fill="#666">{}</text>"##, MARGIN_LEFT + plot_w - 4.0, y - 4.0, escape(label));
    }
    for (i, series) in panel.series.iter().enumerate() {
        let colour = COLOURS[i % COLOURS.len()];
        let pts: Vec<String> = thin(&series.points)
            .into_iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite() && (!panel.log_y || *y > 0.0))
            .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(svg, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.2" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}" fill="{colour}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT + plot_w - 4.0,
            top + 16.0 + 14.0 * i as f64,
            escape(&series.label)
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_a_closed_document() {
        let walk = Panel::new("walk", "S[n]", vec![Series::indexed("S", [0.0, 1.0, 0.0, -1.0])]);
        let delta = Panel::new("delta", "bits", vec![Series::indexed("dL", [0.0, -3.0, 2.0])]).with_reference(-2.0, "-tau");
        let svg = render("scan <test>", &[walk, delta]);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("scan &lt;test&gt;"));
    }

    #[test]
    fn long_traces_keep_their_extremes() {
        let mut values: Vec<f64> = (0..100_000).map(|i| (i % 7) as f64).collect();
        values[54_321] = -500.0;
        let pts: Vec<(f64, f64)> = values.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect();
        let thinned = thin(&pts);
        assert!(thinned.len() <= MAX_POINTS + 2);
        assert!(thinned.contains(&(54_321.0, -500.0)));
    }

    #[test]
    fn log_scale_drops_zeros() {
        let p = Panel::new("p", "P", vec![Series::new("est", vec![(1.0, 0.0), (2.0, 1e-3), (3.0, 1e-5)])]).log_scale();
        let svg = render("t", &[p]);
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        assert_eq!(line.matches(',').count(), 2);
    }
}
