//! Static SVG figures. Every figure is drawn from the same rows that go to
//! the matching CSV file.

use anyhow::{anyhow, Result};
use bautin_core::normalform::Zone;
use plotters::prelude::*;

const SIZE: (u32, u32) = (800, 560);
const PALETTE: [RGBColor; 6] = [
    RGBColor(31, 119, 180),
    RGBColor(214, 39, 40),
    RGBColor(44, 160, 44),
    RGBColor(148, 103, 189),
    RGBColor(255, 127, 14),
    RGBColor(23, 190, 207),
];

/// A named polyline.
pub struct Series<'a> {
    pub label: &'a str,
    pub points: Vec<(f64, f64)>,
}

/// A labelled point drawn on top of the series.
pub struct Marker<'a> {
    pub label: &'a str,
    pub at: (f64, f64),
}

pub struct Axes<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub x_range: Option<[f64; 2]>,
    pub y_range: Option<[f64; 2]>,
}

fn bounds(values: impl Iterator<Item = f64>) -> [f64; 2] {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return [0.0, 1.0];
    }
    let pad = if hi > lo {
        0.05 * (hi - lo)
    } else {
        0.5 * lo.abs().max(1e-3)
    };
    [lo - pad, hi + pad]
}

fn plot_err<E: std::fmt::Debug>(e: E) -> anyhow::Error {
    anyhow!("plot rendering failed: {e:?}")
}

/// Line chart of one or more series with optional markers.
pub fn lines(axes: &Axes, series: &[Series], markers: &[Marker]) -> Result<String> {
    let all = || {
        series
            .iter()
            .flat_map(|s| s.points.iter())
            .chain(markers.iter().map(|m| &m.at))
    };
    let [x0, x1] = axes.x_range.unwrap_or_else(|| bounds(all().map(|p| p.0)));
    let [y0, y1] = axes.y_range.unwrap_or_else(|| bounds(all().map(|p| p.1)));

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(axes.title, ("sans-serif", 20))
            .margin(16)
            .x_label_area_size(44)
            .y_label_area_size(64)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc(axes.x_label)
            .y_desc(axes.y_label)
            .light_line_style(WHITE.mix(0.0))
            .draw()
            .map_err(plot_err)?;

        for (i, s) in series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let drawn = chart
                .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(1)))
                .map_err(plot_err)?;
            if !s.label.is_empty() {
                drawn
                    .label(s.label)
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], color.stroke_width(2)));
            }
        }
        for m in markers {
            chart
                .draw_series(std::iter::once(
                    EmptyElement::at(m.at)
                        + Circle::new((0, 0), 4, BLACK.filled())
                        + Text::new(m.label.to_string(), (6, -14), ("sans-serif", 14)),
                ))
                .map_err(plot_err)?;
        }
        if series.iter().any(|s| !s.label.is_empty()) {
            chart
                .configure_series_labels()
                .background_style(WHITE.mix(0.85))
                .border_style(BLACK)
                .draw()
                .map_err(plot_err)?;
        }
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}

fn zone_color(zone: Zone) -> RGBColor {
    match zone {
        Zone::Zone1 => RGBColor(198, 219, 239),
        Zone::Zone2 => RGBColor(199, 233, 192),
        Zone::Zone3 => RGBColor(253, 208, 162),
        Zone::OnHopfAxis | Zone::OnFoldT => RGBColor(0, 0, 0),
    }
}

/// Raster of normal-form zones over a uniform `(b₁, b₂)` grid, with the
/// Hopf axis and the fold curve `T: b₂² + 4b₁ = 0, b₂ > 0` drawn on top.
pub fn zones(cells: &[(f64, f64, Zone)], n_b1: usize, n_b2: usize) -> Result<String> {
    let [b1_lo, b1_hi] = bounds(cells.iter().map(|c| c.0));
    let [b2_lo, b2_hi] = bounds(cells.iter().map(|c| c.1));
    let raw_b1 = [cells[0].0, cells[cells.len() - 1].0];
    let raw_b2 = [cells[0].1, cells[cells.len() - 1].1];
    let half_b1 = 0.5 * (raw_b1[1] - raw_b1[0]) / (n_b1 - 1) as f64;
    let half_b2 = 0.5 * (raw_b2[1] - raw_b2[0]) / (n_b2 - 1) as f64;

    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, SIZE).into_drawing_area();
        root.fill(&WHITE).map_err(plot_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption("Bautin normal form zones (s = -1)", ("sans-serif", 20))
            .margin(16)
            .x_label_area_size(44)
            .y_label_area_size(64)
            .build_cartesian_2d(b1_lo..b1_hi, b2_lo..b2_hi)
            .map_err(plot_err)?;
        chart
            .configure_mesh()
            .x_desc("b1")
            .y_desc("b2")
            .disable_mesh()
            .draw()
            .map_err(plot_err)?;
        chart
            .draw_series(
                cells
                    .iter()
                    .filter(|c| matches!(c.2, Zone::Zone1 | Zone::Zone2 | Zone::Zone3))
                    .map(|&(b1, b2, z)| {
                        Rectangle::new(
                            [(b1 - half_b1, b2 - half_b2), (b1 + half_b1, b2 + half_b2)],
                            zone_color(z).filled(),
                        )
                    }),
            )
            .map_err(plot_err)?;

        chart
            .draw_series(LineSeries::new(
                [(0.0, raw_b2[0]), (0.0, raw_b2[1])],
                BLACK.stroke_width(2),
            ))
            .map_err(plot_err)?
            .label("b1 = 0 (Hopf)")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], BLACK.stroke_width(2)));
        let top = raw_b2[1].max(0.0);
        let fold = (0..=200)
            .map(|i| top * i as f64 / 200.0)
            .map(|b2| (-b2 * b2 / 4.0, b2))
            .filter(|&(b1, b2)| b1 >= raw_b1[0] && b2 >= raw_b2[0]);
        let red = PALETTE[1];
        chart
            .draw_series(LineSeries::new(fold, red.stroke_width(2)))
            .map_err(plot_err)?
            .label("T: b2^2 + 4 b1 = 0")
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], red.stroke_width(2)));
        for (zone, name) in [
            (Zone::Zone1, "zone 1"),
            (Zone::Zone2, "zone 2"),
            (Zone::Zone3, "zone 3"),
        ] {
            let color = zone_color(zone);
            chart
                .draw_series(std::iter::empty::<Circle<(f64, f64), i32>>())
                .map_err(plot_err)?
                .label(name)
                .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 18, y + 5)], color.filled()));
        }
        chart
            .configure_series_labels()
            .position(SeriesLabelPosition::LowerRight)
            .background_style(WHITE.mix(0.85))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
        root.present().map_err(plot_err)?;
    }
    Ok(svg)
}
