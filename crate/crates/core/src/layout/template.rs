use serde::Serialize;

use crate::fchdl::OperatorKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Edge {
    N,
    E,
    S,
    W,
}

impl Edge {
    fn turned(self, quarter_turns: u8) -> Edge {
        const ORDER: [Edge; 4] = [Edge::N, Edge::E, Edge::S, Edge::W];
        let i = ORDER.iter().position(|e| *e == self).unwrap();
        ORDER[(i + quarter_turns as usize) % 4]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Port {
    pub dx: i32,
    pub dy: i32,
    pub edge: Edge,
}

/// Cell footprint and port anchors of an operator at rotation 0.
/// Inputs are listed in argument order, selects after data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OperatorTemplate {
    pub kind: OperatorKind,
    pub width: i32,
    pub height: i32,
    pub inputs: Vec<Port>,
    pub outputs: Vec<Port>,
}

const fn port(dx: i32, dy: i32, edge: Edge) -> Port {
    Port { dx, dy, edge }
}

/// Footprint table in grid cells (width, height).
pub const FOOTPRINTS: [(OperatorKind, i32, i32); 13] = [
    (OperatorKind::Not, 2, 2),
    (OperatorKind::Or, 2, 2),
    (OperatorKind::And, 2, 2),
    (OperatorKind::Nor, 2, 2),
    (OperatorKind::Nand, 2, 2),
    (OperatorKind::Xor, 2, 2),
    (OperatorKind::Filter, 2, 3),
    (OperatorKind::Timer, 2, 3),
    (OperatorKind::Register, 2, 3),
    (OperatorKind::EdgeDetector, 2, 3),
    (OperatorKind::Multiplexer, 3, 4),
    (OperatorKind::Demultiplexer, 3, 4),
    (OperatorKind::Diode, 1, 2),
];

impl OperatorTemplate {
    pub fn for_kind(kind: OperatorKind) -> Self {
        use Edge::*;
        let (_, w, h) = *FOOTPRINTS.iter().find(|(k, _, _)| *k == kind).unwrap();
        let (inputs, outputs) = match kind {
            OperatorKind::Not => (vec![port(0, 0, W)], vec![port(1, 0, E)]),
            OperatorKind::Or
            | OperatorKind::And
            | OperatorKind::Nor
            | OperatorKind::Nand
            | OperatorKind::Xor => (vec![port(0, 0, W), port(0, 1, W)], vec![port(1, 0, E)]),
            OperatorKind::Filter | OperatorKind::Timer | OperatorKind::EdgeDetector => {
                (vec![port(0, 1, W)], vec![port(1, 1, E)])
            }
            OperatorKind::Register => (
                vec![port(0, 0, W), port(0, 2, W)],
                vec![port(1, 0, E), port(1, 2, E)],
            ),
            OperatorKind::Multiplexer => (
                vec![
                    port(0, 0, W),
                    port(0, 1, W),
                    port(0, 2, W),
                    port(0, 3, W),
                    port(1, 3, S),
                    port(2, 3, S),
                ],
                vec![port(2, 1, E)],
            ),
            OperatorKind::Demultiplexer => (
                vec![port(0, 1, W), port(0, 3, S), port(1, 3, S)],
                vec![port(2, 0, E), port(2, 1, E), port(2, 2, E), port(2, 3, E)],
            ),
            OperatorKind::Diode => (vec![port(0, 0, W)], vec![port(0, 1, E)]),
        };
        OperatorTemplate {
            kind,
            width: w,
            height: h,
            inputs,
            outputs,
        }
    }

    /// Footprint (width, height) after `rot` degrees clockwise.
    pub fn size(&self, rot: u16) -> (i32, i32) {
        if (rot / 90) % 2 == 1 {
            (self.height, self.width)
        } else {
            (self.width, self.height)
        }
    }

    /// Port offset after `rot` degrees clockwise; y grows downward.
    pub fn rotate(&self, p: Port, rot: u16) -> Port {
        let turns = ((rot / 90) % 4) as u8;
        let (mut dx, mut dy) = (p.dx, p.dy);
        let (mut w, mut h) = (self.width, self.height);
        for _ in 0..turns {
            (dx, dy) = (h - 1 - dy, dx);
            (w, h) = (h, w);
        }
        let _ = w;
        Port {
            dx,
            dy,
            edge: p.edge.turned(turns),
        }
    }
}
