//! Static SVG plots with byte-deterministic output.

use crate::CliError;

pub struct PlotSpec {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const MARGIN: f64 = 70.0;

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

/// Render a line-plus-marker plot. Fails on an empty or (for log axes)
/// non-positive series.
pub fn emit_svg(points: &[(f64, f64)], spec: &PlotSpec) -> Result<String, CliError> {
    if points.is_empty() {
        return Err(CliError::Validation("cannot plot an empty series".into()));
    }
    let transform = |v: f64, log: bool| -> Result<f64, CliError> {
        if log {
            if v <= 0.0 {
                return Err(CliError::Validation(format!(
                    "log axis requires positive values, got {v}"
                )));
            }
            Ok(v.log10())
        } else {
            Ok(v)
        }
    };
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(x, y) in points {
        if !x.is_finite() || !y.is_finite() {
            return Err(CliError::Validation(format!(
                "cannot plot non-finite point ({x}, {y})"
            )));
        }
        xs.push(transform(x, spec.log_x)?);
        ys.push(transform(y, spec.log_y)?);
    }
    let (mut x_lo, mut x_hi) = min_max(&xs);
    let (mut y_lo, mut y_hi) = min_max(&ys);
    if x_lo == x_hi {
        x_lo -= 1.0;
        x_hi += 1.0;
    }
    if y_lo == y_hi {
        y_lo -= 1.0;
        y_hi += 1.0;
    }
    let sx = |v: f64| MARGIN + (v - x_lo) / (x_hi - x_lo) * (WIDTH - 2.0 * MARGIN);
    let sy = |v: f64| HEIGHT - MARGIN - (v - y_lo) / (y_hi - y_lo) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" \
         width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"30\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(&spec.title)
    ));
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{m:.2}\" y1=\"{b:.2}\" x2=\"{r:.2}\" y2=\"{b:.2}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    ));
    svg.push_str(&format!(
        "<line x1=\"{m:.2}\" y1=\"{t:.2}\" x2=\"{m:.2}\" y2=\"{b:.2}\" stroke=\"black\"/>\n",
        m = MARGIN,
        t = MARGIN,
        b = HEIGHT - MARGIN
    ));
    // Tick marks and labels.
    for t in ticks(x_lo, x_hi) {
        let x = sx(t);
        let shown = if spec.log_x { 10f64.powf(t) } else { t };
        svg.push_str(&format!(
            "<line x1=\"{x:.2}\" y1=\"{b:.2}\" x2=\"{x:.2}\" y2=\"{b2:.2}\" stroke=\"black\"/>\n",
            b = HEIGHT - MARGIN,
            b2 = HEIGHT - MARGIN + 6.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"middle\" font-size=\"11\">{shown:.3e}</text>\n",
            y = HEIGHT - MARGIN + 20.0
        ));
    }
    for t in ticks(y_lo, y_hi) {
        let y = sy(t);
        let shown = if spec.log_y { 10f64.powf(t) } else { t };
        svg.push_str(&format!(
            "<line x1=\"{x2:.2}\" y1=\"{y:.2}\" x2=\"{m:.2}\" y2=\"{y:.2}\" stroke=\"black\"/>\n",
            x2 = MARGIN - 6.0,
            m = MARGIN
        ));
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{yy:.2}\" text-anchor=\"end\" font-size=\"11\">{shown:.3e}</text>\n",
            x = MARGIN - 10.0,
            yy = y + 4.0
        ));
    }
    // Axis labels.
    svg.push_str(&format!(
        "<text x=\"{x:.2}\" y=\"{y:.2}\" text-anchor=\"middle\" font-size=\"13\">{label}</text>\n",
        x = WIDTH / 2.0,
        y = HEIGHT - 15.0,
        label = xml_escape(&spec.x_label)
    ));
    svg.push_str(&format!(
        "<text x=\"20\" y=\"{y:.2}\" text-anchor=\"middle\" font-size=\"13\" \
         transform=\"rotate(-90 20 {y:.2})\">{label}</text>\n",
        y = HEIGHT / 2.0,
        label = xml_escape(&spec.y_label)
    ));
    // Series.
    if points.len() > 1 {
        let path: Vec<String> = xs
            .iter()
            .zip(&ys)
            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\"/>\n",
            path.join(" ")
        ));
    }
    for (&x, &y) in xs.iter().zip(&ys) {
        svg.push_str(&format!(
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"firebrick\"/>\n",
            sx(x),
            sy(y)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn min_max(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> PlotSpec {
        PlotSpec {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_x: false,
            log_y: false,
        }
    }

    #[test]
    fn single_point_is_valid() {
        let svg = emit_svg(&[(1.0, 2.0)], &spec()).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.ends_with("</svg>\n"));
        assert_eq!(svg.matches("<circle").count(), 1);
    }

    #[test]
    fn empty_series_rejected() {
        assert!(matches!(
            emit_svg(&[], &spec()),
            Err(CliError::Validation(_))
        ));
    }

    #[test]
    fn log_axis_rejects_nonpositive() {
        let mut s = spec();
        s.log_y = true;
        assert!(emit_svg(&[(1.0, 0.0)], &s).is_err());
    }

    #[test]
    fn identical_input_identical_bytes() {
        let pts: Vec<(f64, f64)> = (1..40).map(|i| (i as f64, (i * i) as f64)).collect();
        assert_eq!(
            emit_svg(&pts, &spec()).unwrap(),
            emit_svg(&pts, &spec()).unwrap()
        );
    }
}
