//! Tube export: vertex CSVs and SVG pictures of planar projections.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geometry::monotone_chain;
use crate::reach::{ReachTube, StepStatus};
use crate::workspace::Workspace;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn write(path: &Path, text: &str) -> Result<(), ExportError> {
    std::fs::write(path, text).map_err(|source| ExportError::Io { path: path.to_path_buf(), source })
}

/// `t,vertex_index,x1..xd`, one row per hull vertex.
pub fn tube_csv(tube: &ReachTube) -> String {
    let d = tube.steps.first().map_or(0, |s| s.hull.dim());
    let mut out = String::from("t,vertex_index");
    for k in 1..=d {
        let _ = write!(out, ",x{k}");
    }
    out.push('\n');
    for s in &tube.steps {
        for (i, v) in s.hull.vertices().iter().enumerate() {
            let _ = write!(out, "{},{}", s.t, i);
            for x in v {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_tube_csv(tube: &ReachTube, path: &Path) -> Result<(), ExportError> {
    write(path, &tube_csv(tube))
}

/// How a region is drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionRole {
    Reach,
    Avoid,
    Other,
}

const SCALE: f64 = 100.0;
const MARGIN: f64 = 20.0;

fn status_color(s: StepStatus) -> &'static str {
    match s {
        StepStatus::Initial => "#f39c12",
        StepStatus::Approach => "#f4d03f",
        StepStatus::Target => "#27ae60",
        StepStatus::Violation => "#e74c3c",
    }
}

/// Planar picture over state dims `dims`: the domain, regions colored by
/// role, and every padded hull colored by status (initial orange, approach
/// yellow, in-target green, violating red). Padding is drawn as a
/// round-joined stroke of width 2ε, which is exactly the ε-ball sum.
pub fn tube_svg(tubes: &[&ReachTube], ws: &Workspace, roles: &BTreeMap<String, RegionRole>, dims: [usize; 2]) -> String {
    let sb = ws.state_box();
    let (x0, x1, y0, y1) = (sb.lo[dims[0]], sb.hi[dims[0]], sb.lo[dims[1]], sb.hi[dims[1]]);
    let w = (x1 - x0) * SCALE + 2.0 * MARGIN;
    let h = (y1 - y0) * SCALE + 2.0 * MARGIN;
    let px = |x: f64| MARGIN + (x - x0) * SCALE;
    let py = |y: f64| MARGIN + (y1 - y) * SCALE;
    let mut out = String::new();
    let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#);
    let _ = writeln!(
        out,
        r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="white" stroke="black"/>"##,
        px(x0),
        py(y1),
        (x1 - x0) * SCALE,
        (y1 - y0) * SCALE
    );
    for r in ws.regions() {
        let (Some(ix), Some(iy)) = (r.dims.iter().position(|&k| k == dims[0]), r.dims.iter().position(|&k| k == dims[1])) else {
            continue;
        };
        let (fill, stroke) = match roles.get(&r.name).copied().unwrap_or(RegionRole::Other) {
            RegionRole::Reach => ("#a9dfbf", "#1e8449"),
            RegionRole::Avoid => ("#f5b7b1", "#b03a2e"),
            RegionRole::Other => ("none", "#7f8c8d"),
        };
        let (lx, hx, ly, hy) = (r.bounds.lo[ix], r.bounds.hi[ix], r.bounds.lo[iy], r.bounds.hi[iy]);
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="{stroke}"/>"#,
            px(lx),
            py(hy),
            (hx - lx) * SCALE,
            (hy - ly) * SCALE
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" font-size="12" font-family="sans-serif">{}</text>"#,
            px(lx) + 3.0,
            py(hy) + 13.0,
            r.name
        );
    }
    for tube in tubes {
        for s in &tube.steps {
            let pts: Vec<[f64; 2]> = s.hull.vertices().iter().map(|v| [v[dims[0]], v[dims[1]]]).collect();
            let ring = monotone_chain(&pts);
            let coords: Vec<String> = ring.iter().map(|&i| format!("{:.2},{:.2}", px(pts[i][0]), py(pts[i][1]))).collect();
            let color = status_color(s.status);
            let _ = writeln!(
                out,
                r#"<polygon points="{}" fill="{color}" fill-opacity="0.5" stroke="{color}" stroke-opacity="0.5" stroke-width="{:.2}" stroke-linejoin="round"/>"#,
                coords.join(" "),
                (2.0 * s.eps * SCALE).max(0.5)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

pub fn export_svg(
    tubes: &[&ReachTube],
    ws: &Workspace,
    roles: &BTreeMap<String, RegionRole>,
    path: &Path,
) -> Result<(), ExportError> {
    write(path, &tube_svg(tubes, ws, roles, [0, 1]))
}
