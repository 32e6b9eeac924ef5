use std::path::Path;

use plotters::prelude::*;

use crate::sweep::{PointStatus, RunRecord, SweepError};

const PALETTE: [RGBColor; 8] = [
    RGBColor(214, 39, 40),
    RGBColor(31, 119, 180),
    RGBColor(44, 160, 44),
    RGBColor(255, 127, 14),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(23, 190, 207),
];

struct Series {
    label: String,
    dashed: bool,
    points: Vec<(f64, f64)>,
}

fn collect(record: &RunRecord) -> Vec<Series> {
    let spec = &record.spec;
    let families: Vec<Option<f64>> = match &spec.families {
        Some(f) => f.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let mut out = Vec::new();
    for (col, output) in spec.outputs.iter().enumerate() {
        for fam in &families {
            let label = match (fam, &spec.families) {
                (Some(v), Some(f)) => format!("{} [{} = {v:e}]", output.name(), f.name.label()),
                _ => output.name().to_string(),
            };
            let points = record
                .rows
                .iter()
                .filter(|r| r.family_value == *fam && r.status == PointStatus::Ok)
                .filter_map(|r| r.values[col].map(|y| (r.axis_value, y)))
                .filter(|(_, y)| y.is_finite())
                .collect();
            out.push(Series {
                label,
                dashed: output.name().starts_with("CFI"),
                points,
            });
        }
    }
    out
}

fn bounds(series: &[Series]) -> Option<(f64, f64, f64, f64)> {
    let mut it = series.iter().flat_map(|s| s.points.iter());
    let &(x0, y0) = it.next()?;
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (x0, x0, y0, y0);
    for &(x, y) in it {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    Some((x_lo, x_hi, y_lo, y_hi))
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi > lo {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    } else {
        let pad = lo.abs().max(1.0) * 0.05;
        (lo - pad, hi + pad)
    }
}

fn draw_error(e: impl std::fmt::Display, path: &Path) -> SweepError {
    SweepError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    }
}

/// Line plot with one series per (output, family) pair. CFI series are dashed.
/// A log y-axis is used when all values are positive and span over three
/// decades.
pub fn emit_plot(record: &RunRecord, path: &Path, title: &str) -> Result<(), SweepError> {
    let series = collect(record);
    let root = SVGBackend::new(path, (960, 600)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| draw_error(e, path))?;
    let Some((x_lo, x_hi, y_lo, y_hi)) = bounds(&series) else {
        root.titled(&format!("{title} (no data)"), ("sans-serif", 20))
            .map_err(|e| draw_error(e, path))?;
        return root.present().map_err(|e| draw_error(e, path));
    };
    let (x_lo, x_hi) = padded(x_lo, x_hi);
    let x_label = record.spec.axis.name.label();
    let y_label = match record.spec.outputs.as_slice() {
        [one] => one.name().to_string(),
        _ => "value".to_string(),
    };
    let log = y_lo > 0.0 && y_hi / y_lo > 1e3;

    macro_rules! draw {
        ($chart:expr) => {{
            let mut chart = $chart;
            chart
                .configure_mesh()
                .x_desc(x_label)
                .y_desc(y_label.as_str())
                .y_label_formatter(&|v| format!("{v:.3e}"))
                .draw()
                .map_err(|e| draw_error(e, path))?;
            for (k, s) in series.iter().enumerate() {
                let color = PALETTE[k % PALETTE.len()];
                let style = color.stroke_width(2);
                let anno = if s.dashed {
                    chart.draw_series(DashedLineSeries::new(s.points.iter().copied(), 6, 4, style))
                } else {
                    chart.draw_series(LineSeries::new(s.points.iter().copied(), style))
                }
                .map_err(|e| draw_error(e, path))?;
                anno.label(s.label.as_str()).legend(move |(x, y)| {
                    PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2))
                });
            }
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.8))
                .border_style(BLACK)
                .draw()
                .map_err(|e| draw_error(e, path))?;
        }};
    }

    let mut builder = ChartBuilder::on(&root);
    builder
        .caption(title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(48)
        .y_label_area_size(96);
    if log {
        draw!(builder
            .build_cartesian_2d(x_lo..x_hi, (y_lo * 0.8..y_hi * 1.25).log_scale())
            .map_err(|e| draw_error(e, path))?);
    } else {
        let (y_lo, y_hi) = padded(y_lo, y_hi);
        draw!(builder
            .build_cartesian_2d(x_lo..x_hi, y_lo..y_hi)
            .map_err(|e| draw_error(e, path))?);
    }
    root.present().map_err(|e| draw_error(e, path))
}
