use std::fmt::Write as _;
use std::path::Path;

use super::PhaseDiagramGrid;
use crate::error::Result;
use crate::labeler::PhaseLabel;

/// One RGB color per class, indexed by class code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Palette(pub [[u8; 3]; PhaseLabel::COUNT]);

impl Default for Palette {
    /// Disordered grey, hexagonal blue, gyroid green, lamellar red.
    fn default() -> Self {
        Palette([[0x9e, 0x9e, 0x9e], [0x1f, 0x77, 0xb4], [0x2c, 0xa0, 0x2c], [0xd6, 0x27, 0x28]])
    }
}

impl Palette {
    pub fn hex(&self, label: PhaseLabel) -> String {
        let [r, g, b] = self.0[label.code()];
        format!("#{r:02x}{g:02x}{b:02x}")
    }
}

const CELL_W: usize = 28;
const CELL_H: usize = 22;
const LEFT: usize = 56;
const TOP: usize = 34;
const BOTTOM: usize = 44;
const LEGEND: usize = 120;

fn trim(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// Draws one diagram as an SVG group at horizontal offset `x0`.
fn diagram_group(out: &mut String, grid: &PhaseDiagramGrid, palette: &Palette, title: &str, x0: usize) {
    let (nf, nc) = grid.shape();
    let (w, h) = (nf * CELL_W, nc * CELL_H);
    let _ = writeln!(out, r#"<g transform="translate({x0},0)">"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{title}</text>"#,
        LEFT + w / 2
    );
    for (fi, ci, cell) in grid.cells() {
        let x = LEFT + fi * CELL_W;
        // chiN increases upward
        let y = TOP + (nc - 1 - ci) * CELL_H;
        match cell {
            Some(c) => {
                let _ = writeln!(
                    out,
                    r#"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="{}" fill-opacity="{}"/>"#,
                    palette.hex(c.label),
                    c.ratio
                );
            }
            None => {
                let _ = writeln!(
                    out,
                    r##"<rect x="{x}" y="{y}" width="{CELL_W}" height="{CELL_H}" fill="none" stroke="#dddddd"/>"##
                );
            }
        }
    }
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{w}" height="{h}" fill="none" stroke="black"/>"#
    );
    let step = nf.div_ceil(6).max(1);
    for (fi, f) in grid.f_values.iter().enumerate().step_by(step) {
        let x = LEFT + fi * CELL_W + CELL_W / 2;
        let _ = writeln!(
            out,
            r#"<text x="{x}" y="{}" text-anchor="middle" font-size="10">{}</text>"#,
            TOP + h + 14,
            trim(*f)
        );
    }
    for (ci, c) in grid.chi_n_values.iter().enumerate() {
        let y = TOP + (nc - 1 - ci) * CELL_H + CELL_H / 2 + 4;
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{y}" text-anchor="end" font-size="10">{}</text>"#,
            LEFT - 4,
            trim(*c)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">f</text>"#,
        LEFT + w / 2,
        TOP + h + 32
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 14 {})">χN</text>"#,
        TOP + h / 2,
        TOP + h / 2
    );
    let _ = writeln!(out, "</g>");
}

fn legend(out: &mut String, palette: &Palette, x: usize) {
    for (i, label) in PhaseLabel::ALL.iter().enumerate() {
        let y = TOP + i * 20;
        let _ = writeln!(
            out,
            r#"<rect x="{x}" y="{y}" width="14" height="14" fill="{}"/>"#,
            palette.hex(*label)
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" font-size="11">{label}</text>"#,
            x + 20,
            y + 11
        );
    }
}

/// Panels side by side with a shared legend.
pub fn render_panels_svg(panels: &[(&str, &PhaseDiagramGrid)], palette: &Palette) -> String {
    let panel_w = |g: &PhaseDiagramGrid| LEFT + g.shape().0 * CELL_W + 16;
    let width: usize = panels.iter().map(|(_, g)| panel_w(g)).sum::<usize>() + LEGEND;
    let height = panels
        .iter()
        .map(|(_, g)| TOP + g.shape().1 * CELL_H + BOTTOM)
        .max()
        .unwrap_or(TOP + BOTTOM)
        .max(TOP + 4 * 20);
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let mut x0 = 0;
    for (title, grid) in panels {
        diagram_group(&mut out, grid, palette, title, x0);
        x0 += panel_w(grid);
    }
    legend(&mut out, palette, x0 + 4);
    out.push_str("</svg>\n");
    out
}

pub fn render_svg(grid: &PhaseDiagramGrid, palette: &Palette, title: &str) -> String {
    render_panels_svg(&[(title, grid)], palette)
}

/// Writes a PNG when `path` ends in `.png`, SVG otherwise.
pub fn render_phase_diagram(grid: &PhaseDiagramGrid, palette: &Palette, title: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        render_png(grid, palette, PNG_SCALE, path)
    } else {
        std::fs::write(path, render_svg(grid, palette, title))?;
        Ok(())
    }
}

const PNG_SCALE: u32 = 16;

/// Raster version: one `scale x scale` block per cell, alpha = vote ratio,
/// f to the right and chiN upward.
pub fn render_png(grid: &PhaseDiagramGrid, palette: &Palette, scale: u32, path: impl AsRef<Path>) -> Result<()> {
    let (nf, nc) = grid.shape();
    let mut img = image::RgbaImage::new(nf as u32 * scale, nc as u32 * scale);
    for (fi, ci, cell) in grid.cells() {
        let px = match cell {
            Some(c) => {
                let [r, g, b] = palette.0[c.label.code()];
                image::Rgba([r, g, b, (c.ratio.clamp(0.0, 1.0) * 255.0).round() as u8])
            }
            None => image::Rgba([0, 0, 0, 0]),
        };
        let x0 = fi as u32 * scale;
        let y0 = (nc - 1 - ci) as u32 * scale;
        for dy in 0..scale {
            for dx in 0..scale {
                img.put_pixel(x0 + dx, y0 + dy, px);
            }
        }
    }
    img.save_with_format(path, image::ImageFormat::Png)?;
    Ok(())
}
