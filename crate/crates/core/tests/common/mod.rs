#![allow(dead_code)]

use proptest::prelude::*;

pub const PRIMARY: [&str; 3] = ["A", "B", "C"];
pub const GATES: [&str; 6] = ["NOT", "OR", "AND", "NOR", "NAND", "XOR"];

/// A random acyclic gate network. Gate `i` drives `n{i}` and reads from the
/// primary inputs or earlier gates.
#[derive(Debug, Clone)]
pub struct GateNet {
    pub gates: Vec<(usize, usize, usize)>,
}

impl GateNet {
    fn source(i: usize, pick: usize) -> String {
        let pool = PRIMARY.len() + i;
        let k = pick % pool;
        if k < PRIMARY.len() {
            PRIMARY[k].to_string()
        } else {
            format!("n{}", k - PRIMARY.len())
        }
    }

    pub fn inputs_of(&self, i: usize) -> (String, String) {
        let (_, a, b) = self.gates[i];
        (Self::source(i, a), Self::source(i, b))
    }

    pub fn to_hdl(&self) -> String {
        (0..self.gates.len())
            .map(|i| {
                let kind = GATES[self.gates[i].0];
                let (a, b) = self.inputs_of(i);
                if kind == "NOT" {
                    format!("{kind}({a}; n{i})")
                } else {
                    format!("{kind}({a}, {b}; n{i})")
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Values of every gate output for the given A, B, C, computed by direct
    /// topological evaluation.
    pub fn eval(&self, abc: [u8; 3]) -> Vec<u8> {
        let mut out: Vec<u8> = Vec::new();
        let get = |name: &str, out: &Vec<u8>| -> u8 {
            match PRIMARY.iter().position(|p| *p == name) {
                Some(k) => abc[k],
                None => out[name[1..].parse::<usize>().unwrap()],
            }
        };
        for i in 0..self.gates.len() {
            let (a, b) = self.inputs_of(i);
            let (x, y) = (get(&a, &out), get(&b, &out));
            let v = match GATES[self.gates[i].0] {
                "NOT" => 1 - x,
                "OR" => x | y,
                "AND" => x & y,
                "NOR" => 1 - (x | y),
                "NAND" => 1 - (x & y),
                "XOR" => x ^ y,
                _ => unreachable!(),
            };
            out.push(v);
        }
        out
    }
}

pub fn gate_net(max: usize) -> impl Strategy<Value = GateNet> {
    prop::collection::vec((0..GATES.len(), 0usize..64, 0usize..64), 1..=max)
        .prop_map(|gates| GateNet { gates })
}
