//! Result artifacts: response curves, layout drawings and summary table rows.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{build_layout, AntennaLayout, DesignVector, FixedParams};
use crate::pipeline::RunReport;
use crate::simbackend::{save_curve, FrequencyGrid, ResponseCurve};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Artifact {
    Curves,
    Geometry,
    Table,
}

impl std::str::FromStr for Artifact {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "curves" => Ok(Artifact::Curves),
            "geometry" => Ok(Artifact::Geometry),
            "table" => Ok(Artifact::Table),
            other => Err(Error::Config(format!(
                "unknown artifact {other:?} (expected curves, geometry or table)"
            ))),
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn report_grid(report: &RunReport) -> Result<FrequencyGrid> {
    let f = &report.curves.frequencies;
    match (f.first(), f.last()) {
        (Some(&a), Some(&b)) => FrequencyGrid::new(a, b, f.len()),
        _ => Err(Error::InvalidGrid("report has no frequencies".into())),
    }
}

/// One CSV per stage: `initial.csv`, `coarse-opt.csv`, `fine-opt.csv`.
pub fn export_curves(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let grid = report_grid(report)?;
    let c = &report.curves;
    [
        ("initial", &c.initial),
        ("coarse-opt", &c.coarse_opt),
        ("fine-opt", &c.fine_opt),
    ]
    .into_iter()
    .map(|(name, values)| {
        let path = dir.join(format!("{name}.csv"));
        save_curve(&path, &ResponseCurve::new(grid, values.clone())?)?;
        Ok(path)
    })
    .collect()
}

/// SVG drawing of the substrate, patch outline and feed (mm, y up).
pub fn layout_svg(layout: &AntennaLayout) -> String {
    let half = layout.substrate_side_mm / 2.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.4} {:.4} {:.4} {:.4}" width="{:.4}mm" height="{:.4}mm">"#,
        -half,
        -half,
        2.0 * half,
        2.0 * half,
        2.0 * half,
        2.0 * half
    );
    let _ = writeln!(s, r#"<g transform="scale(1,-1)">"#);
    let _ = writeln!(
        s,
        r##"<rect x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}" fill="#d9e6c3" stroke="none"/>"##,
        -half,
        -half,
        2.0 * half,
        2.0 * half
    );
    let points: Vec<String> = layout
        .vertices
        .iter()
        .map(|p| format!("{:.6},{:.6}", p.x, p.y))
        .collect();
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="#c87533" stroke="#5a3310" stroke-width="0.1"/>"##,
        points.join(" ")
    );
    for (r, fill) in [(layout.fixed.feed_r2_mm, "#ffffff"), (layout.fixed.feed_r1_mm, "#444444")] {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.6}" cy="{:.6}" r="{:.4}" fill="{fill}"/>"#,
            layout.feed.x, layout.feed.y, r
        );
    }
    s.push_str("</g>\n</svg>\n");
    s
}

#[derive(Serialize)]
struct VertexRow {
    index: usize,
    x_mm: f64,
    y_mm: f64,
}

/// `layout.svg` and `vertices.csv` for `x`.
pub fn export_geometry(x: &DesignVector, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let layout = build_layout(x, &FixedParams::default())?;
    let svg = dir.join("layout.svg");
    std::fs::write(&svg, layout_svg(&layout)).map_err(|e| Error::io(&svg, e))?;
    let csv_path = dir.join("vertices.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    for (index, p) in layout.vertices.iter().enumerate() {
        w.serialize(VertexRow {
            index,
            x_mm: p.x,
            y_mm: p.y,
        })?;
    }
    w.flush().map_err(|e| Error::io(&csv_path, e))?;
    Ok(vec![svg, csv_path])
}

/// Summary row: design id, patch side and achieved band.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub design: String,
    pub a1_mm: f64,
    pub f_low_ghz: Option<f64>,
    pub f_high_ghz: Option<f64>,
    pub bw_ghz: Option<f64>,
    pub bw_percent: Option<f64>,
}

impl TableRow {
    pub fn from_report(design: &str, report: &RunReport) -> Self {
        let b = report.bandwidth;
        Self {
            design: design.to_string(),
            a1_mm: report.a1_mm,
            f_low_ghz: b.map(|b| b.f_low),
            f_high_ghz: b.map(|b| b.f_high),
            bw_ghz: b.map(|b| b.bw_ghz),
            bw_percent: b.map(|b| b.bw_percent),
        }
    }
}

pub fn export_table(rows: &[TableRow], path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `what` for `report` under `dir` and returns the created files.
pub fn export(report: &RunReport, what: Artifact, dir: &Path, design_id: &str) -> Result<Vec<PathBuf>> {
    match what {
        Artifact::Curves => export_curves(report, dir),
        Artifact::Geometry => export_geometry(&report.fine_design()?, dir),
        Artifact::Table => {
            let path = dir.join("table.csv");
            export_table(&[TableRow::from_report(design_id, report)], &path)?;
            Ok(vec![path])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design() -> DesignVector {
        DesignVector::new(
            30.0,
            0.1,
            0.3,
            vec![0.5, 0.6, 0.55, 0.45, 0.5, 0.62, 0.48],
            vec![0.4; 7],
        )
        .unwrap()
    }

    #[test]
    fn svg_polygon_has_one_point_per_vertex() {
        let layout = build_layout(&design(), &FixedParams::default()).unwrap();
        let svg = layout_svg(&layout);
        let poly = svg.lines().find(|l| l.starts_with("<polygon")).unwrap();
        let pts = poly.split('"').nth(1).unwrap();
        assert_eq!(pts.split_whitespace().count(), 7);
    }

    #[test]
    fn geometry_files_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let files = export_geometry(&design(), dir.path()).unwrap();
        let text = std::fs::read_to_string(&files[1]).unwrap();
        assert_eq!(text.lines().count(), 1 + 7);
        assert!(text.starts_with("index,x_mm,y_mm"));
    }

    #[test]
    fn artifact_names() {
        assert_eq!("curves".parse::<Artifact>().unwrap(), Artifact::Curves);
        assert!("plots".parse::<Artifact>().is_err());
    }
}
