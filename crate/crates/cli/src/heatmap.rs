//! Self-contained vector-graphics heatmap of a two-variable sweep.
//!
//! The renderer emits plain SVG with a fixed layout, a fixed color ramp,
//! and fixed-precision numeric formatting, so identical input produces
//! byte-identical output. No external assets, fonts beyond generic family
//! names, scripts, or timestamps are referenced: the file is complete and
//! reproducible on its own, and embeds the tool version and configuration
//! digest in its `<desc>` element.

use std::cmp::Ordering;
use std::fmt::Write;

use nalgebra::DMatrix;

use crate::error::CliError;

/// Input slice of a sweep to render: axes, the value matrix (rows indexed
/// by `tau`, columns by `t`), and labeling.
pub struct HeatmapSpec<'a> {
    pub tau_values: &'a [f64],
    pub t_values: &'a [f64],
    pub values: &'a DMatrix<f64>,
    pub title: &'a str,
    pub value_label: &'a str,
}

const CANVAS_W: f64 = 880.0;
const CANVAS_H: f64 = 640.0;
const PLOT_X: f64 = 90.0;
const PLOT_Y: f64 = 70.0;
const PLOT_W: f64 = 620.0;
const PLOT_H: f64 = 490.0;
const BAR_X: f64 = 744.0;
const BAR_W: f64 = 22.0;
const BAR_STEPS: usize = 48;
const FONT: &str = "Helvetica, Arial, sans-serif";
/// Fill for grid points whose evaluation failed (NaN entries).
const FAILED_FILL: &str = "#9e9e9e";

/// Perceptually ordered dark-to-bright color ramp (fixed stops, linear
/// interpolation in RGB).
const STOPS: [[f64; 3]; 9] = [
    [0.267, 0.005, 0.329],
    [0.275, 0.194, 0.496],
    [0.213, 0.359, 0.552],
    [0.153, 0.497, 0.557],
    [0.122, 0.632, 0.531],
    [0.290, 0.758, 0.428],
    [0.622, 0.854, 0.226],
    [0.902, 0.895, 0.127],
    [0.993, 0.906, 0.144],
];

fn ramp_color(v01: f64) -> String {
    let v = v01.clamp(0.0, 1.0) * (STOPS.len() - 1) as f64;
    let lo = (v.floor() as usize).min(STOPS.len() - 2);
    let frac = v - lo as f64;
    let mut hex = String::with_capacity(7);
    hex.push('#');
    for (&lo_ch, &hi_ch) in STOPS[lo].iter().zip(&STOPS[lo + 1]) {
        let channel = lo_ch + frac * (hi_ch - lo_ch);
        let byte = (channel * 255.0).round().clamp(0.0, 255.0) as u8;
        write!(hex, "{byte:02x}").expect("writing to a String cannot fail");
    }
    hex
}

/// Indices of up to five representative ticks along an axis of `n` samples.
fn tick_indices(n: usize) -> Vec<usize> {
    let mut indices: Vec<usize> = [0, n / 4, n / 2, 3 * n / 4, n.saturating_sub(1)]
        .into_iter()
        .collect();
    indices.dedup();
    indices
}

/// Renders the heatmap to an SVG string. Fails when the matrix shape does
/// not match the axes or the grid is empty.
pub fn render_heatmap(
    spec: &HeatmapSpec<'_>,
    version: &str,
    config_hash: &str,
) -> Result<String, CliError> {
    let (n_tau, n_t) = (spec.tau_values.len(), spec.t_values.len());
    if n_tau == 0 || n_t == 0 {
        return Err(CliError::numeric("heatmap input grid is empty"));
    }
    if spec.values.nrows() != n_tau || spec.values.ncols() != n_t {
        return Err(CliError::numeric(format!(
            "heatmap value matrix is {}x{}, but the axes have {n_tau} and {n_t} samples",
            spec.values.nrows(),
            spec.values.ncols()
        )));
    }

    let finite: Vec<f64> = spec.values.iter().copied().filter(|v| v.is_finite()).collect();
    let (min, max) = finite.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), v| (lo.min(*v), hi.max(*v)),
    );
    let degenerate = max.partial_cmp(&min) != Some(Ordering::Greater);
    let normalize = |v: f64| -> f64 {
        if degenerate {
            0.5
        } else {
            (v - min) / (max - min)
        }
    };

    let mut svg = String::with_capacity(64 * 1024 + n_tau * n_t * 96);
    writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS_W:.0}\" height=\"{CANVAS_H:.0}\" viewBox=\"0 0 {CANVAS_W:.0} {CANVAS_H:.0}\">"
    )
    .expect("writing to a String cannot fail");
    let mut w = |line: String| svg.push_str(&line);

    w(format!("<title>{}</title>\n", spec.title));
    w(format!(
        "<desc>tool_version: {version}; config_hash: {config_hash}</desc>\n"
    ));
    w(format!(
        "<rect width=\"{CANVAS_W:.0}\" height=\"{CANVAS_H:.0}\" fill=\"#ffffff\"/>\n"
    ));
    w(format!(
        "<text x=\"{PLOT_X:.1}\" y=\"42.0\" font-family=\"{FONT}\" font-size=\"17\" fill=\"#111111\">{}</text>\n",
        spec.title
    ));

    // Cells: tau runs rightward, t runs upward.
    let cw = PLOT_W / n_tau as f64;
    let ch = PLOT_H / n_t as f64;
    w("<g shape-rendering=\"crispEdges\" stroke=\"none\">\n".to_owned());
    for i in 0..n_tau {
        for j in 0..n_t {
            let v = spec.values[(i, j)];
            let fill = if v.is_finite() {
                ramp_color(normalize(v))
            } else {
                FAILED_FILL.to_owned()
            };
            let x = PLOT_X + i as f64 * cw;
            let y = PLOT_Y + (n_t - 1 - j) as f64 * ch;
            w(format!(
                "<rect class=\"cell\" fill=\"{fill}\" x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cw:.2}\" height=\"{ch:.2}\"/>\n"
            ));
        }
    }
    w("</g>\n".to_owned());
    w(format!(
        "<rect x=\"{PLOT_X:.1}\" y=\"{PLOT_Y:.1}\" width=\"{PLOT_W:.1}\" height=\"{PLOT_H:.1}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n"
    ));

    // Axis ticks at representative cell centers.
    for idx in tick_indices(n_tau) {
        let x = PLOT_X + (idx as f64 + 0.5) * cw;
        let y1 = PLOT_Y + PLOT_H;
        w(format!(
            "<line x1=\"{x:.2}\" y1=\"{y1:.1}\" x2=\"{x:.2}\" y2=\"{:.1}\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
            y1 + 6.0
        ));
        w(format!(
            "<text x=\"{x:.2}\" y=\"{:.1}\" font-family=\"{FONT}\" font-size=\"12\" fill=\"#333333\" text-anchor=\"middle\">{:.4}</text>\n",
            y1 + 22.0,
            spec.tau_values[idx]
        ));
    }
    for idx in tick_indices(n_t) {
        let y = PLOT_Y + (n_t as f64 - idx as f64 - 0.5) * ch;
        w(format!(
            "<line x1=\"{:.1}\" y1=\"{y:.2}\" x2=\"{PLOT_X:.1}\" y2=\"{y:.2}\" stroke=\"#333333\" stroke-width=\"1\"/>\n",
            PLOT_X - 6.0
        ));
        w(format!(
            "<text x=\"{:.1}\" y=\"{:.2}\" font-family=\"{FONT}\" font-size=\"12\" fill=\"#333333\" text-anchor=\"end\">{:.4}</text>\n",
            PLOT_X - 10.0,
            y + 4.0,
            spec.t_values[idx]
        ));
    }
    w(format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" font-family=\"{FONT}\" font-size=\"14\" fill=\"#111111\" text-anchor=\"middle\">burn duration tau</text>\n",
        PLOT_X + PLOT_W / 2.0,
        PLOT_Y + PLOT_H + 48.0
    ));
    w(format!(
        "<text x=\"30.0\" y=\"{:.1}\" font-family=\"{FONT}\" font-size=\"14\" fill=\"#111111\" text-anchor=\"middle\" transform=\"rotate(-90 30.0 {:.1})\">coast duration t</text>\n",
        PLOT_Y + PLOT_H / 2.0,
        PLOT_Y + PLOT_H / 2.0
    ));

    // Colorbar (values increase upward).
    let step_h = PLOT_H / BAR_STEPS as f64;
    w("<g shape-rendering=\"crispEdges\" stroke=\"none\">\n".to_owned());
    for s in 0..BAR_STEPS {
        let v = (s as f64 + 0.5) / BAR_STEPS as f64;
        let y = PLOT_Y + PLOT_H - (s as f64 + 1.0) * step_h;
        w(format!(
            "<rect fill=\"{}\" x=\"{BAR_X:.1}\" y=\"{y:.2}\" width=\"{BAR_W:.1}\" height=\"{step_h:.2}\"/>\n",
            ramp_color(v)
        ));
    }
    w("</g>\n".to_owned());
    w(format!(
        "<rect x=\"{BAR_X:.1}\" y=\"{PLOT_Y:.1}\" width=\"{BAR_W:.1}\" height=\"{PLOT_H:.1}\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n"
    ));
    let bar_text_x = BAR_X + BAR_W + 8.0;
    let bar_labels: [(f64, f64); 3] = [
        (PLOT_Y + PLOT_H, if degenerate { f64::NAN } else { min }),
        (PLOT_Y + PLOT_H / 2.0, if degenerate { f64::NAN } else { (min + max) / 2.0 }),
        (PLOT_Y, if degenerate { f64::NAN } else { max }),
    ];
    for (y, value) in bar_labels {
        let label = if value.is_finite() {
            format!("{value:.3e}")
        } else {
            "n/a".to_owned()
        };
        w(format!(
            "<text x=\"{bar_text_x:.1}\" y=\"{:.2}\" font-family=\"{FONT}\" font-size=\"12\" fill=\"#333333\">{label}</text>\n",
            y + 4.0
        ));
    }
    w(format!(
        "<text x=\"{BAR_X:.1}\" y=\"{:.1}\" font-family=\"{FONT}\" font-size=\"13\" fill=\"#111111\">{}</text>\n",
        PLOT_Y - 14.0,
        spec.value_label
    ));

    svg.push_str("</svg>\n");
    Ok(svg)
}
