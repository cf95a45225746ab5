use std::collections::BTreeMap;
use std::fmt::Write;

use super::{LayoutResult, OperatorTemplate};
use crate::fchdl::Netlist;

/// Millimetres per grid cell.
const CELL_MM: i32 = 10;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Centre of a cell in millimetres.
fn mm(cell: [i32; 2]) -> (i32, i32) {
    (cell[0] * CELL_MM + CELL_MM / 2, cell[1] * CELL_MM + CELL_MM / 2)
}

fn manhattan_polyline(from: [i32; 2], to: [i32; 2]) -> String {
    let (x1, y1) = mm(from);
    let (x2, y2) = mm(to);
    format!(r##"<polyline points="{x1},{y1} {x2},{y1} {x2},{y2}" fill="none" stroke="#2c3e50" stroke-width="1"/>"##)
}

/// Standalone SVG of a placement: one rect per operator, one wire group per
/// consumed net. Primary inputs get pads to the left of the circuit.
pub fn export_layout_svg(result: &LayoutResult, netlist: &Netlist) -> String {
    let b = result.bbox;
    let pads: Vec<_> = netlist
        .primary_inputs()
        .iter()
        .filter(|n| !netlist.consumers(n).is_empty())
        .collect();
    let pad_cell = |i: usize| [b.x - 2, b.y + 2 * i as i32];
    let x0 = (b.x - 3) * CELL_MM;
    let y0 = (b.y - 1) * CELL_MM;
    let width = (b.w + 4) * CELL_MM;
    let height = (b.h.max(2 * pads.len() as i32) + 2) * CELL_MM;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}mm" height="{height}mm" viewBox="{x0} {y0} {width} {height}">"#
    );

    for p in &result.placements {
        let op = &netlist.operators()[p.id];
        let t = OperatorTemplate::for_kind(op.kind);
        let (w, h) = t.size(p.rot);
        let _ = writeln!(out, r#"  <g class="operator" data-id="{}">"#, p.id);
        let _ = writeln!(
            out,
            r##"    <rect x="{}" y="{}" width="{}" height="{}" fill="#ecf0f1" stroke="#34495e" stroke-width="0.8"/>"##,
            p.x * CELL_MM,
            p.y * CELL_MM,
            w * CELL_MM,
            h * CELL_MM
        );
        let _ = writeln!(
            out,
            r#"    <text x="{}" y="{}" font-size="3" text-anchor="middle">{} #{}</text>"#,
            p.x * CELL_MM + w * CELL_MM / 2,
            p.y * CELL_MM + h * CELL_MM / 2,
            op.kind.hdl_name(),
            p.id
        );
        for port in t.inputs.iter().chain(&t.outputs) {
            let q = t.rotate(*port, p.rot);
            let (cx, cy) = mm([p.x + q.dx, p.y + q.dy]);
            let _ = writeln!(
                out,
                r##"    <circle class="port" cx="{cx}" cy="{cy}" r="1" fill="#7f8c8d"/>"##
            );
        }
        out.push_str("  </g>\n");
    }

    let mut by_net: BTreeMap<&str, Vec<String>> = BTreeMap::new();
    for w in &result.wires {
        by_net
            .entry(w.net.as_str())
            .or_default()
            .push(manhattan_polyline(w.from, w.to));
    }
    for (i, net) in pads.iter().enumerate() {
        let entry = by_net.entry(net.as_str()).or_default();
        for &c in netlist.consumers(net) {
            let op = &netlist.operators()[c];
            let p = result.placements.iter().find(|p| p.id == c).unwrap();
            let t = OperatorTemplate::for_kind(op.kind);
            for (k, _) in op.inputs.iter().enumerate().filter(|(_, n)| *n == *net) {
                let q = t.rotate(t.inputs[k], p.rot);
                entry.push(manhattan_polyline(pad_cell(i), [p.x + q.dx, p.y + q.dy]));
            }
        }
    }
    for (net, lines) in &by_net {
        let _ = writeln!(out, r#"  <g class="wire" data-net="{}">"#, escape(net));
        for l in lines {
            let _ = writeln!(out, "    {l}");
        }
        out.push_str("  </g>\n");
    }

    for (i, net) in pads.iter().enumerate() {
        let (cx, cy) = mm(pad_cell(i));
        let _ = writeln!(
            out,
            r##"  <g class="pad"><circle cx="{cx}" cy="{cy}" r="3" fill="#3498db"/><text x="{}" y="{cy}" font-size="3" text-anchor="end">{}</text></g>"##,
            cx - 4,
            escape(net)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::super::{place, SaConfig};
    use super::*;
    use crate::fchdl::parse_circuit;

    #[test]
    fn single_gate_has_one_rect() {
        let n = parse_circuit("NOT(A; Q)").unwrap();
        let svg = export_layout_svg(&place(&n, &SaConfig::default()).unwrap(), &n);
        assert_eq!(svg.matches("<rect").count(), 1);
        assert!(svg.contains(">NOT #0</text>"));
    }

    #[test]
    fn dg90_rects_and_wire_groups() {
        let n = parse_circuit(
            "NOT(A; C) NOT(B; D) OR (C, D; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)",
        )
        .unwrap();
        let svg = export_layout_svg(&place(&n, &SaConfig::default()).unwrap(), &n);
        assert_eq!(svg.matches("<rect").count(), 5);
        assert_eq!(svg.matches(r#"<g class="wire""#).count(), 6);
    }
}
