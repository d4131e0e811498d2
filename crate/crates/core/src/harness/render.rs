//! Static images of a coloured configuration.

use std::fmt::Write as _;

use crate::crossing::LeafRaster;
use crate::error::{ConfettiError, Result};
use crate::geometry::Rect;
use crate::model::{Color, Configuration};
use crate::shape::ConfettiShape;

/// Binary PPM (P6) of the colouring at `p`; one pixel per `1 / pixels_per_unit`.
///
/// Each pixel takes the colour of the top leaf at its centre. The
/// configuration is deepened on a private copy if some pixel is uncovered.
pub fn render_ppm(config: &Configuration, p: f64, region: Rect, pixels_per_unit: f64) -> Result<Vec<u8>> {
    if !(pixels_per_unit > 0.0 && pixels_per_unit.is_finite()) {
        return Err(ConfettiError::InvalidParams(format!(
            "pixels per unit must be positive, got {pixels_per_unit}"
        )));
    }
    let mut config = config.clone();
    let raster = LeafRaster::paint(&mut config, region, 1.0 / pixels_per_unit)?;
    let grid = raster.threshold(p);
    let (w, h) = (grid.ncols(), grid.nrows());
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(w * h * 3);
    for row in (0..h).rev() {
        for col in 0..w {
            let v = match grid.get(col, row) {
                Color::Black => 0u8,
                Color::White => 255u8,
            };
            out.extend_from_slice(&[v, v, v]);
        }
    }
    Ok(out)
}

/// SVG of leaf outlines meeting `region`, painted bottom-up so that upper
/// leaves occlude lower ones. Leaves below the first fully covering layer are
/// still drawn; the picture is exact but not minimal.
pub fn render_svg(config: &Configuration, p: f64, region: Rect, pixels_per_unit: f64) -> Result<String> {
    if !(pixels_per_unit > 0.0 && pixels_per_unit.is_finite()) {
        return Err(ConfettiError::InvalidParams(format!(
            "pixels per unit must be positive, got {pixels_per_unit}"
        )));
    }
    let shape = config.shape();
    let reach = crate::shape::Footprint::reach(&shape);
    let s = pixels_per_unit;
    let (w, h) = (region.width() * s, region.height() * s);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.3} {h:.3}">"#
    );
    let _ = writeln!(svg, r#"<defs><clipPath id="r"><rect width="{w:.3}" height="{h:.3}"/></clipPath></defs>"#);
    let _ = writeln!(svg, r##"<rect width="{w:.3}" height="{h:.3}" fill="#808080"/>"##);
    let _ = writeln!(svg, r##"<g clip-path="url(#r)" stroke="#808080" stroke-width="0.5">"##);
    let mut leaves: Vec<_> = config
        .points()
        .iter()
        .filter(|pt| region.expand(reach).contains(pt.center()))
        .collect();
    leaves.sort_by(|a, b| a.z.total_cmp(&b.z).then(a.id.cmp(&b.id)));
    for pt in leaves {
        let fill = match pt.color(p) {
            Color::Black => "#000000",
            Color::White => "#ffffff",
        };
        let cx = (pt.x - region.x0) * s;
        let cy = (region.y1 - pt.y) * s;
        match shape {
            ConfettiShape::UnitDisk => {
                let _ = writeln!(svg, r#"<circle cx="{cx:.3}" cy="{cy:.3}" r="{s:.3}" fill="{fill}"/>"#);
            }
            ConfettiShape::Square { halfwidth } => {
                let side = 2.0 * halfwidth * s;
                let _ = writeln!(
                    svg,
                    r#"<rect x="{:.3}" y="{:.3}" width="{side:.3}" height="{side:.3}" fill="{fill}"/>"#,
                    cx - halfwidth * s,
                    cy - halfwidth * s
                );
            }
        }
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_configuration, ColorParams, ConfettiPoint, DepthPolicy};

    fn pixels(ppm: &[u8]) -> (usize, usize, Vec<u8>) {
        let text = String::from_utf8_lossy(&ppm[..ppm.len().min(32)]).to_string();
        let mut parts = text.split_whitespace();
        assert_eq!(parts.next(), Some("P6"));
        let w: usize = parts.next().unwrap().parse().unwrap();
        let h: usize = parts.next().unwrap().parse().unwrap();
        let header = format!("P6\n{w} {h}\n255\n").len();
        (w, h, ppm[header..].iter().step_by(3).copied().collect())
    }

    fn sampled(seed: u64) -> Configuration {
        let params = ColorParams::from_lambda_p(2.0, 0.5).unwrap();
        sample_configuration(Rect::centered(4.0, 4.0), ConfettiShape::UnitDisk, params, seed, DepthPolicy::Auto).unwrap()
    }

    #[test]
    fn p_one_is_all_black() {
        let img = render_ppm(&sampled(1), 1.0, Rect::centered(4.0, 4.0), 10.0).unwrap();
        let (w, h, px) = pixels(&img);
        assert_eq!((w, h), (40, 40));
        assert!(px.iter().all(|&v| v == 0));
    }

    #[test]
    fn two_leaves_occlusion() {
        let window = Rect::centered(4.0, 2.0);
        let points = vec![
            // white leaf at (-0.5, 0), below a black leaf at (0.5, 0)
            ConfettiPoint { x: -0.5, y: 0.0, z: -0.5, u: 0.9, id: 0 },
            ConfettiPoint { x: 0.5, y: 0.0, z: -0.1, u: 0.1, id: 1 },
        ];
        let config =
            Configuration::from_points(window, ConfettiShape::UnitDisk, 2.0, 1.0, 0, points).unwrap();
        let region = Rect::new(-1.0, -0.5, 1.0, 0.5);
        // the region is covered by the two leaves; no deepening is needed
        let img = render_ppm(&config, 0.5, region, 4.0).unwrap();
        let (w, h, px) = pixels(&img);
        assert_eq!((w, h), (8, 4));
        for row in 0..h {
            for col in 0..w {
                let x = -1.0 + (col as f64 + 0.5) / 4.0;
                let y = 0.5 - (row as f64 + 0.5) / 4.0;
                let black = (x - 0.5).powi(2) + y * y <= 1.0;
                assert_eq!(px[row * w + col], if black { 0 } else { 255 }, "pixel ({col}, {row})");
            }
        }
    }

    #[test]
    fn renders_are_deterministic() {
        let region = Rect::centered(3.0, 3.0);
        let a = render_ppm(&sampled(5), 0.5, region, 8.0).unwrap();
        let b = render_ppm(&sampled(5), 0.5, region, 8.0).unwrap();
        assert_eq!(a, b);
        let sa = render_svg(&sampled(5), 0.5, region, 8.0).unwrap();
        assert_eq!(sa, render_svg(&sampled(5), 0.5, region, 8.0).unwrap());
        assert!(sa.starts_with("<svg") && sa.ends_with("</svg>\n"));
    }
}
