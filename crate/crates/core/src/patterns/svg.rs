use std::fmt::Write;

use super::{PatternResult, SealRole};

fn fmt_points(points: &[[f64; 2]]) -> String {
    points
        .iter()
        .map(|[x, y]| format!("{x:.3},{y:.3}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Standalone SVG of the flat seal pattern in millimetre user units.
pub fn pattern_svg(result: &PatternResult) -> String {
    let (w, h) = result
        .shapes(SealRole::Outline)
        .next()
        .map(|o| {
            let xs = o.points.iter().map(|p| p[0]).fold(0.0, f64::max);
            let ys = o.points.iter().map(|p| p[1]).fold(0.0, f64::max);
            (xs, ys)
        })
        .unwrap_or((result.length, result.width));
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.3}mm" height="{h:.3}mm" viewBox="0 0 {w:.3} {h:.3}">"#
    );
    for shape in &result.seal_geometry {
        let (class, style) = match shape.role {
            SealRole::Outline => ("outline", r##"fill="none" stroke="#000" stroke-width="0.3""##),
            SealRole::Seal => ("seal", r##"fill="#f39c12" stroke="none""##),
            SealRole::Tab => ("tab", r##"fill="none" stroke="#c0392b" stroke-width="0.3""##),
        };
        let tag = if shape.closed { "polygon" } else { "polyline" };
        let _ = writeln!(
            out,
            r#"  <{tag} class="{class}" points="{}" {style}/>"#,
            fmt_points(&shape.points)
        );
    }
    out.push_str("</svg>\n");
    out
}
