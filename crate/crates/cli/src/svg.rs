//! Minimal deterministic SVG charts: line series for forecast curves and
//! log-scale scatter for singular-value spectra. No timestamps or random
//! ids, so identical inputs render byte-identical files.

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 90.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 62.0;

const PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub scatter: bool,
    pub series: Vec<Series>,
}

impl Chart {
    pub fn render(&self) -> String {
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

        // On a log axis only positive values are drawable.
        let usable: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .copied()
                    .filter(|(x, y)| {
                        x.is_finite() && y.is_finite() && (!self.log_y || *y > 0.0)
                    })
                    .collect()
            })
            .collect();

        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        for points in &usable {
            for (x, y) in points {
                xs.push(*x);
                ys.push(if self.log_y { y.log10() } else { *y });
            }
        }
        let (x_min, x_max) = padded_range(&xs, 0.02);
        let (y_min, y_max) = padded_range(&ys, 0.05);

        let map_x = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
        let map_y = |y: f64| {
            let value = if self.log_y { y.log10() } else { y };
            MARGIN_TOP + (1.0 - (value - y_min) / (y_max - y_min)) * plot_h
        };

        let mut svg = String::new();
        svg.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"18\">{}</text>\n",
            WIDTH / 2.0,
            escape(&self.title)
        ));

        // Axes box.
        svg.push_str(&format!(
            "<rect x=\"{MARGIN_LEFT}\" y=\"{MARGIN_TOP}\" width=\"{plot_w}\" height=\"{plot_h}\" \
             fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n"
        ));

        // Ticks and grid lines.
        for x in linear_ticks(x_min, x_max) {
            let px = map_x(x);
            svg.push_str(&format!(
                "<line x1=\"{px:.2}\" y1=\"{}\" x2=\"{px:.2}\" y2=\"{}\" stroke=\"#cccccc\" \
                 stroke-width=\"0.5\"/>\n",
                MARGIN_TOP,
                MARGIN_TOP + plot_h
            ));
            svg.push_str(&format!(
                "<text x=\"{px:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
                 font-size=\"12\">{}</text>\n",
                MARGIN_TOP + plot_h + 18.0,
                format_tick(x)
            ));
        }
        let y_ticks =
            if self.log_y { decade_ticks(y_min, y_max) } else { linear_ticks(y_min, y_max) };
        for y in y_ticks {
            let py = MARGIN_TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{py:.2}\" x2=\"{}\" y2=\"{py:.2}\" stroke=\"#cccccc\" \
                 stroke-width=\"0.5\"/>\n",
                MARGIN_LEFT,
                MARGIN_LEFT + plot_w
            ));
            let label = if self.log_y { format_tick_pow10(y) } else { format_tick(y) };
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{:.2}\" text-anchor=\"end\" font-family=\"sans-serif\" \
                 font-size=\"12\">{label}</text>\n",
                MARGIN_LEFT - 8.0,
                py + 4.0
            ));
        }

        // Axis titles.
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"14\">{}</text>\n",
            MARGIN_LEFT + plot_w / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        ));
        svg.push_str(&format!(
            "<text x=\"22\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" \
             font-size=\"14\" transform=\"rotate(-90 22 {})\">{}</text>\n",
            MARGIN_TOP + plot_h / 2.0,
            MARGIN_TOP + plot_h / 2.0,
            escape(&self.y_label)
        ));

        // Series.
        for (idx, points) in usable.iter().enumerate() {
            let color = PALETTE[idx % PALETTE.len()];
            if self.scatter {
                for (x, y) in points {
                    svg.push_str(&format!(
                        "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>\n",
                        map_x(*x),
                        map_y(*y)
                    ));
                }
            } else if !points.is_empty() {
                let path: Vec<String> = points
                    .iter()
                    .map(|(x, y)| format!("{:.2},{:.2}", map_x(*x), map_y(*y)))
                    .collect();
                svg.push_str(&format!(
                    "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" \
                     points=\"{}\"/>\n",
                    path.join(" ")
                ));
            }
        }

        // Legend, top-right inside the plot box.
        for (idx, series) in self.series.iter().enumerate() {
            let color = PALETTE[idx % PALETTE.len()];
            let ly = MARGIN_TOP + 16.0 + 18.0 * idx as f64;
            let lx = MARGIN_LEFT + plot_w - 150.0;
            svg.push_str(&format!(
                "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{color}\" \
                 stroke-width=\"2\"/>\n",
                lx + 22.0
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
                lx + 28.0,
                ly + 4.0,
                escape(&series.label)
            ));
        }

        svg.push_str("</svg>\n");
        svg
    }
}

fn padded_range(values: &[f64], pad: f64) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
    }
    if !min.is_finite() || !max.is_finite() {
        return (0.0, 1.0);
    }
    if min == max {
        return (min - 1.0, max + 1.0);
    }
    let span = max - min;
    (min - pad * span, max + pad * span)
}

/// About six ticks at 1/2/5 x 10^k spacing.
fn linear_ticks(min: f64, max: f64) -> Vec<f64> {
    let span = max - min;
    let raw_step = span / 6.0;
    let magnitude = 10f64.powf(raw_step.log10().floor());
    let residual = raw_step / magnitude;
    let step = if residual < 1.5 {
        magnitude
    } else if residual < 3.5 {
        2.0 * magnitude
    } else if residual < 7.5 {
        5.0 * magnitude
    } else {
        10.0 * magnitude
    };
    let mut ticks = Vec::new();
    let mut tick = (min / step).ceil() * step;
    while tick <= max + 1e-9 * span {
        ticks.push(tick);
        tick += step;
    }
    ticks
}

/// Integer powers of ten covering a log10 range.
fn decade_ticks(log_min: f64, log_max: f64) -> Vec<f64> {
    let first = log_min.ceil() as i64;
    let last = log_max.floor() as i64;
    let stride = (((last - first) / 8) + 1).max(1);
    (first..=last).step_by(stride as usize).map(|e| e as f64).collect()
}

fn format_tick(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let magnitude = value.abs();
    if !(1e-3..1e5).contains(&magnitude) {
        format!("{value:.1e}")
    } else if magnitude >= 100.0 || (value - value.round()).abs() < 1e-9 {
        format!("{}", value.round() as i64)
    } else {
        format!("{value:.2}")
    }
}

fn format_tick_pow10(exponent: f64) -> String {
    format!("1e{}", exponent as i64)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
