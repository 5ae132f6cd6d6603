//! SVG and CSV serialization of membership rasters.
//!
//! CSV layout: a header line `xmin,xmax,ymin,ymax,nx,ny`, a line with those
//! values, then `ny` rows of `nx` cell codes (0 outside, 1 inside, 2 band).
//! Rows run from the top of the box (largest y) down, so the file reads like
//! the picture.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Result, SetError};
use crate::oracle::{BBox, Cell, RasterGrid};

pub const CSV_HEADER: &str = "xmin,xmax,ymin,ymax,nx,ny";

/// A `#rrggbb` color.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl FromStr for Rgb {
    type Err = SetError;

    fn from_str(s: &str) -> Result<Rgb> {
        let hex = s
            .strip_prefix('#')
            .filter(|h| h.len() == 6 && h.chars().all(|c| c.is_ascii_hexdigit()))
            .ok_or_else(|| SetError::Parse(format!("color {s:?} is not #rrggbb")))?;
        let byte = |k: usize| u8::from_str_radix(&hex[k..k + 2], 16).expect("validated hex");
        Ok(Rgb(byte(0), byte(2), byte(4)))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

/// Paint settings for one raster layer.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderStyle {
    pub label: String,
    pub fill: Rgb,
    pub opacity: f64,
    /// Output pixels per cell.
    pub cell_px: u32,
    /// Adds a swatch strip keyed by layer label.
    pub legend: bool,
}

impl RenderStyle {
    pub fn new(label: &str, fill: &str) -> Result<RenderStyle> {
        Ok(RenderStyle {
            label: label.to_string(),
            fill: fill.parse()?,
            opacity: 1.0,
            cell_px: 3,
            legend: false,
        })
    }

    pub fn feasible() -> RenderStyle {
        RenderStyle::new("feasible", "#3b6fb6").expect("valid preset")
    }

    pub fn hole() -> RenderStyle {
        RenderStyle::new("hole", "#ffffff").expect("valid preset")
    }

    pub fn operand() -> RenderStyle {
        RenderStyle {
            opacity: 0.4,
            ..RenderStyle::new("operand", "#9a9a9a").expect("valid preset")
        }
    }

    pub fn intersection() -> RenderStyle {
        RenderStyle::new("intersection", "#d95f02").expect("valid preset")
    }
}

/// Renders layers in order, one `<g>` per layer and one `<rect>` per inside
/// cell, in bbox coordinates with y pointing up.
pub fn render_svg(layers: &[(&RasterGrid, &RenderStyle)]) -> Result<Vec<u8>> {
    let Some((first, first_style)) = layers.first() else {
        return Err(SetError::Shape("nothing to render".into()));
    };
    if layers.iter().any(|(g, _)| !g.same_layout(first)) {
        return Err(SetError::Shape(
            "layers differ in bounding box or resolution".into(),
        ));
    }
    let BBox {
        xmin,
        xmax,
        ymin,
        ymax,
    } = first.bbox();
    let (nx, ny) = (first.nx(), first.ny());
    let (w, h) = (xmax - xmin, ymax - ymin);
    let (dx, dy) = (w / nx as f64, h / ny as f64);
    let px = first_style.cell_px.max(1) as usize;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="{xmin} {ymin} {w} {h}" preserveAspectRatio="none">"#,
        nx * px,
        ny * px,
    );
    let flip = format!("matrix(1 0 0 -1 0 {})", ymin + ymax);
    for (k, (grid, style)) in layers.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<g id="layer-{k}" data-label="{}" fill="{}" fill-opacity="{}" shape-rendering="crispEdges" transform="{flip}">"#,
            escape(&style.label),
            style.fill,
            style.opacity,
        );
        for j in 0..ny {
            for i in 0..nx {
                if grid.is_member(i, j) {
                    let _ = writeln!(
                        out,
                        r#"<rect x="{}" y="{}" width="{dx}" height="{dy}"/>"#,
                        xmin + i as f64 * dx,
                        ymin + j as f64 * dy,
                    );
                }
            }
        }
        out.push_str("</g>\n");
    }
    if layers.iter().any(|(_, s)| s.legend) {
        let size = w.min(h) / 20.0;
        out.push_str("<g id=\"legend\">\n");
        for (k, (_, style)) in layers.iter().enumerate() {
            let _ = writeln!(
                out,
                r##"<rect x="{}" y="{}" width="{size}" height="{size}" fill="{}" stroke="#000000" stroke-width="{}" data-label="{}"/>"##,
                xmin + size * (0.5 + 1.5 * k as f64),
                ymin + size * 0.5,
                style.fill,
                size / 20.0,
                escape(&style.label),
            );
        }
        out.push_str("</g>\n");
    }
    out.push_str("</svg>\n");
    Ok(out.into_bytes())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('"', "&quot;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn export_csv(grid: &RasterGrid) -> Vec<u8> {
    let b = grid.bbox();
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    let _ = writeln!(
        out,
        "{},{},{},{},{},{}",
        b.xmin,
        b.xmax,
        b.ymin,
        b.ymax,
        grid.nx(),
        grid.ny()
    );
    for j in (0..grid.ny()).rev() {
        let row: Vec<String> = (0..grid.nx())
            .map(|i| grid.cell(i, j).code().to_string())
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

pub fn import_csv(bytes: &[u8]) -> Result<RasterGrid> {
    let bad = |msg: String| SetError::Parse(format!("raster csv: {msg}"));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| bad(e.to_string()))?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != CSV_HEADER {
        return Err(bad(format!("expected header {CSV_HEADER:?}, got {header:?}")));
    }
    let mut records = reader.records();
    let mut next = || -> Result<Option<csv::StringRecord>> {
        records
            .next()
            .transpose()
            .map_err(|e| bad(e.to_string()))
    };
    let meta = next()?.ok_or_else(|| bad("missing bounding box line".into()))?;
    if meta.len() != 6 {
        return Err(bad(format!("bounding box line has {} fields", meta.len())));
    }
    let float = |k: usize| -> Result<f64> {
        meta[k]
            .parse::<f64>()
            .map_err(|e| bad(format!("field {k}: {e}")))
    };
    let count = |k: usize| -> Result<usize> {
        meta[k]
            .parse::<usize>()
            .map_err(|e| bad(format!("field {k}: {e}")))
    };
    let bbox = BBox::new(float(0)?, float(1)?, float(2)?, float(3)?)?;
    let (nx, ny) = (count(4)?, count(5)?);
    let mut rows = Vec::with_capacity(ny);
    while let Some(rec) = next()? {
        if rec.len() != nx {
            return Err(bad(format!("row {} has {} cells, expected {nx}", rows.len(), rec.len())));
        }
        let row = rec
            .iter()
            .map(|v| {
                v.parse::<u8>()
                    .ok()
                    .and_then(Cell::from_code)
                    .ok_or_else(|| bad(format!("bad cell value {v:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.len() != ny {
        return Err(bad(format!("{} rows, expected {ny}", rows.len())));
    }
    let cells = rows.into_iter().rev().flatten().collect();
    RasterGrid::new(bbox, nx, ny, cells)
}
