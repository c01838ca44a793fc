use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::write_file;
use crate::cost::CostDimension;
use crate::error::Result;
use crate::sweep::{ComparisonReport, OperatingPoint};

pub const CSV_COLUMNS: [&str; 12] = [
    "policy",
    "threshold",
    "big_fraction",
    "mae_x",
    "mae_y",
    "mae_z",
    "mae_phi",
    "mae_sum",
    "latency_ms",
    "energy_mj",
    "cycles",
    "memory_bytes",
];

fn csv_row(out: &mut String, p: &OperatingPoint) {
    let m = &p.mae;
    let c = &p.cost;
    let _ = writeln!(
        out,
        "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
        p.policy,
        p.threshold,
        p.big_fraction,
        m.mae_x,
        m.mae_y,
        m.mae_z,
        m.mae_phi,
        m.mae_sum,
        c.latency_ms,
        c.energy_mj,
        c.cycles,
        c.memory_bytes
    );
}

/// Header plus one row per point, six decimals throughout.
pub fn points_to_csv<'a>(points: impl IntoIterator<Item = &'a OperatingPoint>) -> String {
    let mut out = CSV_COLUMNS.join(",");
    out.push('\n');
    for p in points {
        csv_row(&mut out, p);
    }
    out
}

/// Front points of every series, then static small, static big and the oracle.
pub fn report_to_csv(report: &ComparisonReport) -> String {
    points_to_csv(report.rows())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Marker {
    Line,
    Square,
    Diamond,
    Star,
}

/// One plotted series: `(cost, mae_sum)` pairs.
#[derive(Debug, Clone)]
pub struct SvgSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    marker: Marker,
}

impl SvgSeries {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        SvgSeries {
            label: label.into(),
            points,
            marker: Marker::Line,
        }
    }

    fn single(label: &str, p: &OperatingPoint, dim: CostDimension, marker: Marker) -> Self {
        SvgSeries {
            label: label.to_string(),
            points: vec![(p.cost_in(dim), p.mae.mae_sum)],
            marker,
        }
    }
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;

fn padded_range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { (hi - lo) * 0.05 } else { lo.abs().max(1.0) * 0.05 };
    (lo - pad, hi + pad)
}

/// Scatter of MAE sum against `dim`. Deterministic for identical input.
pub fn render_svg(series: &[SvgSeries], dim: CostDimension) -> String {
    let all = || series.iter().flat_map(|s| s.points.iter().copied());
    let (x0, x1) = padded_range(all().map(|p| p.0));
    let (y0, y1) = padded_range(all().map(|p| p.1));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>"##
    );
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            out,
            r##"<line x1="{px:.2}" y1="{:.2}" x2="{px:.2}" y2="{:.2}" stroke="#333"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 20.0,
            tick(xv)
        );
        let _ = writeln!(
            out,
            r##"<line x1="{:.2}" y1="{py:.2}" x2="{LEFT}" y2="{py:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT - 5.0,
            LEFT - 8.0,
            py + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{} ({})</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        dim.as_str(),
        dim.unit()
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.2}" text-anchor="middle" transform="rotate(-90 20 {:.2})">MAE sum</text>"#,
        TOP + ph / 2.0,
        TOP + ph / 2.0
    );

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if s.marker == Marker::Line && s.points.len() > 1 {
            let path: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            let _ = writeln!(
                out,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
        }
        for &(x, y) in &s.points {
            let _ = writeln!(out, "{}", marker(s.marker, sx(x), sy(y), color));
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            out,
            r#"{}<text x="{:.2}" y="{:.2}">{}</text>"#,
            marker(s.marker, lx, ly, color),
            lx + 12.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn marker(m: Marker, x: f64, y: f64, color: &str) -> String {
    match m {
        Marker::Line => format!(r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#),
        Marker::Square => format!(
            r#"<rect x="{:.2}" y="{:.2}" width="8" height="8" fill="{color}"/>"#,
            x - 4.0,
            y - 4.0
        ),
        Marker::Diamond => format!(
            r#"<polygon points="{x:.2},{:.2} {:.2},{y:.2} {x:.2},{:.2} {:.2},{y:.2}" fill="{color}"/>"#,
            y - 5.0,
            x + 5.0,
            y + 5.0,
            x - 5.0
        ),
        Marker::Star => format!(
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="16" fill="{color}">*</text>"#,
            y + 6.0
        ),
    }
}

fn tick(v: f64) -> String {
    if v.abs() >= 1e4 {
        format!("{v:.3e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Fronts as lines, static models as squares, the oracle as a star.
pub fn report_to_svg(report: &ComparisonReport) -> String {
    let dim = report.dimension;
    let mut series: Vec<SvgSeries> = report
        .series
        .iter()
        .map(|s| SvgSeries::line(&s.label, s.front.iter().map(|p| (p.cost_in(dim), p.mae.mae_sum)).collect()))
        .collect();
    series.push(SvgSeries::single("static_small", &report.static_small, dim, Marker::Square));
    series.push(SvgSeries::single("static_big", &report.static_big, dim, Marker::Diamond));
    series.push(SvgSeries::single("oracle", &report.oracle, dim, Marker::Star));
    render_svg(&series, dim)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Svg,
}

impl ReportFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Svg => "svg",
        }
    }
}

/// Writes `report` to `dir/<stem>.<ext>` for each format and returns the paths in order.
pub fn emit_report(report: &ComparisonReport, formats: &[ReportFormat], dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    // Render everything first so a rendering failure leaves no partial output.
    let rendered: Vec<(PathBuf, String)> = formats
        .iter()
        .map(|f| {
            let body = match f {
                ReportFormat::Csv => report_to_csv(report),
                ReportFormat::Svg => report_to_svg(report),
            };
            (dir.join(format!("{stem}.{}", f.extension())), body)
        })
        .collect();
    for (path, body) in &rendered {
        write_file(path, body)?;
    }
    Ok(rendered.into_iter().map(|(p, _)| p).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostReport;
    use crate::metrics::MaeBreakdown;
    use crate::policy::PolicyKind;

    fn pt() -> OperatingPoint {
        OperatingPoint {
            policy: "static_big".into(),
            kind: PolicyKind::StaticBig,
            threshold: 0.0,
            mae: MaeBreakdown {
                mae_x: 0.19,
                mae_y: 0.14,
                mae_z: 0.23,
                mae_phi: 0.48,
                mae_sum: 1.04,
            },
            big_fraction: 1.0,
            cost: CostReport {
                big_fraction: 1.0,
                latency_ms: 21.76,
                energy_mj: 1.92,
                cycles: 3_699_200.0,
                memory_bytes: 235_000,
            },
        }
    }

    #[test]
    fn single_point_csv() {
        let p = pt();
        let csv = points_to_csv([&p]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_COLUMNS.join(","));
        assert_eq!(
            lines[1],
            "static_big,0.000000,1.000000,0.190000,0.140000,0.230000,0.480000,1.040000,21.760000,1.920000,3699200.000000,235000"
        );
    }

    #[test]
    fn svg_is_deterministic_and_well_formed() {
        let series = vec![SvgSeries::line("a<b", vec![(1.0, 2.0), (2.0, 1.5)])];
        let a = render_svg(&series, CostDimension::Cycles);
        assert_eq!(a, render_svg(&series, CostDimension::Cycles));
        assert!(a.starts_with("<svg") && a.trim_end().ends_with("</svg>"));
        assert!(a.contains("a&lt;b"));
        assert!(a.contains("<polyline"));
        // degenerate single point still renders
        assert!(render_svg(&[SvgSeries::line("x", vec![(3.0, 3.0)])], CostDimension::Latency).contains("<circle"));
    }

    #[test]
    fn emit_report_writes_each_format() {
        use crate::sweep::PolicySeries;
        let report = ComparisonReport {
            dimension: CostDimension::Latency,
            series: vec![PolicySeries {
                label: "op".into(),
                kind: PolicyKind::Op,
                points: vec![pt()],
                front: vec![pt()],
            }],
            static_small: pt(),
            static_big: pt(),
            oracle: pt(),
        };
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("nested");
        let paths = emit_report(&report, &[ReportFormat::Csv, ReportFormat::Svg], &out, "r").unwrap();
        assert_eq!(paths, vec![out.join("r.csv"), out.join("r.svg")]);
        assert_eq!(std::fs::read_to_string(&paths[0]).unwrap().lines().count(), 1 + 4);

        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "").unwrap();
        assert!(emit_report(&report, &[ReportFormat::Csv], &blocker, "r").is_err());
    }
}
