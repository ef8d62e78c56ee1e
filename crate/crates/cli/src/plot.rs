//! Throughput-versus-load charts from a results CSV.
//!
//! One chart for the mean packet throughput and one for the 5th percentile.
//! Each (scheme, direction) pair is a series; the point at a given load is
//! the mean over seeds and the whisker spans the seed minimum and maximum.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use thiserror::Error;

use tdd_sim::experiment::ResultRow;
use tdd_sim::traffic::LinkDirection;
use tdd_sim::Scheme;

pub const AVG_CHART: &str = "avg_throughput.svg";
pub const P5_CHART: &str = "p5_throughput.svg";

const COLUMNS: [&str; 8] = [
    "lambda_ul",
    "scheme",
    "seed",
    "direction",
    "avg_tput_mbps",
    "p5_tput_mbps",
    "completion_ratio",
    "mean_delta_db",
];

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: csv::Error },
    #[error("{path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error("{0}: no result rows")]
    Empty(PathBuf),
    #[error("drawing {path}: {message}")]
    Draw { path: PathBuf, message: String },
    #[error("creating {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Load rows written by a sweep, rejecting any other column layout.
pub fn load_rows(path: &Path) -> Result<Vec<ResultRow>, PlotError> {
    let read = |source| PlotError::Read {
        path: path.to_owned(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(read)?;
    let headers = reader.headers().map_err(read)?.clone();
    if headers.iter().ne(COLUMNS) {
        return Err(PlotError::Schema {
            path: path.to_owned(),
            message: format!(
                "expected columns {}, found {}",
                COLUMNS.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.deserialize().enumerate() {
        rows.push(rec.map_err(|e: csv::Error| PlotError::Schema {
            path: path.to_owned(),
            message: format!("row {}: {e}", i + 1),
        })?);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint {
    pub lambda_ul: f64,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub scheme: Scheme,
    pub direction: LinkDirection,
    pub points: Vec<SeriesPoint>,
}

impl Series {
    pub fn label(&self) -> String {
        format!("{} {}", self.scheme.name(), self.direction.label())
    }
}

/// Seed-average `metric` per (scheme, direction) and load. NaN entries (no
/// completed packets) are skipped; a load with nothing left has no point.
pub fn aggregate(rows: &[ResultRow], metric: impl Fn(&ResultRow) -> f64) -> Vec<Series> {
    // loads are keyed by bit pattern so the map stays ordered and exact
    let mut groups: BTreeMap<(Scheme, usize), BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for row in rows {
        let by_load = groups
            .entry((row.scheme, row.direction.index()))
            .or_default();
        let values = by_load.entry(row.lambda_ul.to_bits()).or_default();
        let v = metric(row);
        if !v.is_nan() {
            values.push(v);
        }
    }
    groups
        .into_iter()
        .map(|((scheme, dir), by_load)| {
            let mut points: Vec<SeriesPoint> = by_load
                .into_iter()
                .filter(|(_, v)| !v.is_empty())
                .map(|(bits, v)| SeriesPoint {
                    lambda_ul: f64::from_bits(bits),
                    mean: v.iter().sum::<f64>() / v.len() as f64,
                    min: v.iter().copied().fold(f64::INFINITY, f64::min),
                    max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                })
                .collect();
            points.sort_by(|a, b| a.lambda_ul.total_cmp(&b.lambda_ul));
            Series {
                scheme,
                direction: LinkDirection::BOTH[dir],
                points,
            }
        })
        .collect()
}

fn style(series: &Series) -> ShapeStyle {
    let color = match (series.scheme, series.direction) {
        (Scheme::Baseline, LinkDirection::Downlink) => BLUE,
        (Scheme::Proposed, LinkDirection::Downlink) => CYAN,
        (Scheme::Baseline, LinkDirection::Uplink) => RED,
        (Scheme::Proposed, LinkDirection::Uplink) => MAGENTA,
    };
    color.stroke_width(2)
}

fn draw_chart(path: &Path, title: &str, series: &[Series]) -> Result<(), PlotError> {
    let draw_err = |e: &dyn std::fmt::Display| PlotError::Draw {
        path: path.to_owned(),
        message: e.to_string(),
    };
    let points = series.iter().flat_map(|s| s.points.iter());
    let (mut x_lo, mut x_hi, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for p in points {
        x_lo = x_lo.min(p.lambda_ul);
        x_hi = x_hi.max(p.lambda_ul);
        y_hi = y_hi.max(p.max);
    }
    if !x_lo.is_finite() {
        (x_lo, x_hi) = (0.0, 1.0);
    }
    let pad = ((x_hi - x_lo) * 0.05).max(0.05);
    let y_hi = if y_hi > 0.0 { y_hi * 1.1 } else { 1.0 };

    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| draw_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(12)
        .x_label_area_size(44)
        .y_label_area_size(60)
        .build_cartesian_2d((x_lo - pad)..(x_hi + pad), 0.0..y_hi)
        .map_err(|e| draw_err(&e))?;
    chart
        .configure_mesh()
        .x_desc("UL packet arrival rate λ_U (packets/s)")
        .y_desc("Packet throughput (Mbps)")
        .draw()
        .map_err(|e| draw_err(&e))?;

    for s in series {
        let st = style(s);
        chart
            .draw_series(LineSeries::new(
                s.points.iter().map(|p| (p.lambda_ul, p.mean)),
                st,
            ))
            .map_err(|e| draw_err(&e))?
            .label(s.label())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], st));
        chart
            .draw_series(
                s.points
                    .iter()
                    .map(|p| ErrorBar::new_vertical(p.lambda_ul, p.min, p.mean, p.max, st, 8)),
            )
            .map_err(|e| draw_err(&e))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .position(SeriesLabelPosition::UpperRight)
        .draw()
        .map_err(|e| draw_err(&e))?;
    root.present().map_err(|e| draw_err(&e))
}

/// Write the two charts for `csv_path` into `out_dir` and return their paths.
/// Nothing is written when the CSV is empty or malformed.
pub fn emit_plots(csv_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let rows = load_rows(csv_path)?;
    if rows.is_empty() {
        return Err(PlotError::Empty(csv_path.to_owned()));
    }
    fs::create_dir_all(out_dir).map_err(|source| PlotError::Io {
        path: out_dir.to_owned(),
        source,
    })?;
    let charts = [
        (
            AVG_CHART,
            "Average packet throughput",
            aggregate(&rows, |r| r.avg_tput_mbps),
        ),
        (
            P5_CHART,
            "5th-percentile packet throughput",
            aggregate(&rows, |r| r.p5_tput_mbps),
        ),
    ];
    let mut written = Vec::new();
    for (name, title, series) in &charts {
        let path = out_dir.join(name);
        if let Err(e) = draw_chart(&path, title, series) {
            for p in written.iter().chain([&path]) {
                let _ = fs::remove_file(p);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(
        lambda_ul: f64,
        scheme: Scheme,
        seed: u64,
        direction: LinkDirection,
        avg: f64,
    ) -> ResultRow {
        ResultRow {
            lambda_ul,
            scheme,
            seed,
            direction,
            avg_tput_mbps: avg,
            p5_tput_mbps: avg / 2.0,
            completion_ratio: 1.0,
            mean_delta_db: 0.0,
        }
    }

    #[test]
    fn seed_average_and_whiskers() {
        let rows = vec![
            row(0.5, Scheme::Baseline, 1, LinkDirection::Uplink, 10.0),
            row(0.5, Scheme::Baseline, 2, LinkDirection::Uplink, 14.0),
            row(0.5, Scheme::Baseline, 3, LinkDirection::Uplink, 12.0),
            row(0.25, Scheme::Baseline, 1, LinkDirection::Uplink, 20.0),
        ];
        let series = aggregate(&rows, |r| r.avg_tput_mbps);
        assert_eq!(series.len(), 1);
        let pts = &series[0].points;
        assert_eq!(pts.len(), 2);
        assert_eq!(
            pts[0],
            SeriesPoint {
                lambda_ul: 0.25,
                mean: 20.0,
                min: 20.0,
                max: 20.0
            }
        );
        assert_eq!(
            pts[1],
            SeriesPoint {
                lambda_ul: 0.5,
                mean: 12.0,
                min: 10.0,
                max: 14.0
            }
        );
    }

    #[test]
    fn nan_values_skipped() {
        let rows = vec![
            row(0.5, Scheme::Proposed, 1, LinkDirection::Downlink, f64::NAN),
            row(0.5, Scheme::Proposed, 2, LinkDirection::Downlink, 8.0),
            row(1.0, Scheme::Proposed, 1, LinkDirection::Downlink, f64::NAN),
        ];
        let s = aggregate(&rows, |r| r.avg_tput_mbps);
        assert_eq!(s[0].points.len(), 1);
        assert_eq!(s[0].points[0].mean, 8.0);
    }
}
