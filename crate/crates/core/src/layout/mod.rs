//! Grid placement of operator footprints by simulated annealing.

mod svg;
mod template;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fchdl::{NetName, Netlist};

pub use svg::export_layout_svg;
pub use template::{Edge, OperatorTemplate, Port, FOOTPRINTS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LayoutError {
    #[error("cannot place an empty circuit")]
    EmptyNetlist,
    #[error("invalid annealing config: {0}")]
    BadConfig(String),
    #[error("no overlap-free placement found; best has {} overlapping cells", best.cost.overlap)]
    PlacementInfeasible { best: Box<LayoutResult> },
    #[error("placement does not match the circuit: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaConfig {
    pub seed: u64,
    pub w_overlap: f64,
    pub w_wire: f64,
    pub w_area: f64,
    /// Defaults to 100 per operator.
    pub moves_per_epoch: Option<usize>,
    pub cooling_alpha: f64,
    pub initial_acceptance: f64,
    pub min_temp_ratio: f64,
    pub stall_epochs: usize,
    /// Working grid side in cells; derived from total footprint when absent.
    pub grid: Option<i32>,
}

impl Default for SaConfig {
    fn default() -> Self {
        SaConfig {
            seed: 0,
            w_overlap: 1000.0,
            w_wire: 1.0,
            w_area: 2.0,
            moves_per_epoch: None,
            cooling_alpha: 0.95,
            initial_acceptance: 0.8,
            min_temp_ratio: 1e-4,
            stall_epochs: 20,
            grid: None,
        }
    }
}

impl SaConfig {
    pub fn weights(&self) -> Weights {
        Weights {
            overlap: self.w_overlap,
            wire: self.w_wire,
            area: self.w_area,
        }
    }

    pub fn validate(&self) -> Result<(), LayoutError> {
        let bad = |m: &str| Err(LayoutError::BadConfig(m.into()));
        let w = [self.w_overlap, self.w_wire, self.w_area];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().all(|x| *x == 0.0) {
            return bad("weights must be non-negative and not all zero");
        }
        if !(self.cooling_alpha > 0.0 && self.cooling_alpha < 1.0) {
            return bad("cooling_alpha must be in (0, 1)");
        }
        if !(self.initial_acceptance > 0.0 && self.initial_acceptance < 1.0) {
            return bad("initial_acceptance must be in (0, 1)");
        }
        if !(self.min_temp_ratio > 0.0 && self.min_temp_ratio < 1.0) {
            return bad("min_temp_ratio must be in (0, 1)");
        }
        if self.moves_per_epoch == Some(0) || self.stall_epochs == 0 {
            return bad("moves_per_epoch and stall_epochs must be positive");
        }
        if self.grid.is_some_and(|g| g <= 0) {
            return bad("grid must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    pub overlap: f64,
    pub wire: f64,
    pub area: f64,
}

impl Default for Weights {
    fn default() -> Self {
        SaConfig::default().weights()
    }
}

/// Origin cell and clockwise rotation in degrees of one operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pose {
    pub id: usize,
    pub x: i32,
    pub y: i32,
    pub rot: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub overlap: i64,
    pub wire: i64,
    pub area: i64,
    pub total: f64,
}

impl CostBreakdown {
    fn new(overlap: i64, wire: i64, area: i64, w: &Weights) -> Self {
        CostBreakdown {
            overlap,
            wire,
            area,
            total: w.overlap * overlap as f64 + w.wire * wire as f64 + w.area * area as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
}

impl Rect {
    fn intersection_area(&self, o: &Rect) -> i64 {
        let dx = (self.x + self.w).min(o.x + o.w) - self.x.max(o.x);
        let dy = (self.y + self.h).min(o.y + o.h) - self.y.max(o.y);
        if dx > 0 && dy > 0 {
            dx as i64 * dy as i64
        } else {
            0
        }
    }

    fn union(&self, o: &Rect) -> Rect {
        let x = self.x.min(o.x);
        let y = self.y.min(o.y);
        Rect {
            x,
            y,
            w: (self.x + self.w).max(o.x + o.w) - x,
            h: (self.y + self.h).max(o.y + o.h) - y,
        }
    }
}

/// Port-to-port connection on the grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireSegment {
    pub net: NetName,
    pub from: [i32; 2],
    pub to: [i32; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutResult {
    pub placements: Vec<Pose>,
    pub cost: CostBreakdown,
    pub seed: u64,
    pub bbox: Rect,
    pub wires: Vec<WireSegment>,
    pub grid: i32,
    pub epochs: usize,
    /// Total cost of the random starting placement.
    pub initial_cost: f64,
}

/// Driver output port to consumer input port.
#[derive(Debug, Clone)]
struct Link {
    net: NetName,
    driver: (usize, usize),
    consumer: (usize, usize),
}

/// Netlist reduced to what the cost function needs.
struct Problem {
    templates: Vec<OperatorTemplate>,
    links: Vec<Link>,
    /// Link indices touching each operator.
    touching: Vec<Vec<usize>>,
}

impl Problem {
    fn new(netlist: &Netlist) -> Self {
        let ops = netlist.operators();
        let templates: Vec<_> = ops.iter().map(|op| OperatorTemplate::for_kind(op.kind)).collect();
        let mut links = Vec::new();
        for op in ops {
            for (k, net) in op.inputs.iter().enumerate() {
                for &d in netlist.drivers(net) {
                    let out = ops[d].outputs.iter().position(|o| o == net).unwrap();
                    links.push(Link {
                        net: net.clone(),
                        driver: (d, out),
                        consumer: (op.id, k),
                    });
                }
            }
        }
        let mut touching = vec![Vec::new(); ops.len()];
        for (i, l) in links.iter().enumerate() {
            touching[l.driver.0].push(i);
            if l.consumer.0 != l.driver.0 {
                touching[l.consumer.0].push(i);
            }
        }
        Problem {
            templates,
            links,
            touching,
        }
    }

    fn rect(&self, p: &Pose) -> Rect {
        let (w, h) = self.templates[p.id].size(p.rot);
        Rect { x: p.x, y: p.y, w, h }
    }

    fn port_cell(&self, p: &Pose, port: Port) -> [i32; 2] {
        let q = self.templates[p.id].rotate(port, p.rot);
        [p.x + q.dx, p.y + q.dy]
    }

    fn link_length(&self, poses: &[Pose], l: &Link) -> i64 {
        let a = self.port_cell(&poses[l.driver.0], self.templates[l.driver.0].outputs[l.driver.1]);
        let b = self.port_cell(
            &poses[l.consumer.0],
            self.templates[l.consumer.0].inputs[l.consumer.1],
        );
        ((a[0] - b[0]).abs() + (a[1] - b[1]).abs()) as i64
    }

    fn bbox(&self, poses: &[Pose]) -> Rect {
        poses
            .iter()
            .map(|p| self.rect(p))
            .reduce(|a, b| a.union(&b))
            .unwrap_or(Rect { x: 0, y: 0, w: 0, h: 0 })
    }

    fn cost(&self, poses: &[Pose], w: &Weights) -> CostBreakdown {
        let rects: Vec<Rect> = poses.iter().map(|p| self.rect(p)).collect();
        let mut overlap = 0;
        for i in 0..rects.len() {
            for j in i + 1..rects.len() {
                overlap += rects[i].intersection_area(&rects[j]);
            }
        }
        let wire = self.links.iter().map(|l| self.link_length(poses, l)).sum();
        let b = self.bbox(poses);
        CostBreakdown::new(overlap, wire, b.w as i64 * b.h as i64, w)
    }

    /// Overlap and wire terms that involve operator `i`.
    fn local_terms(&self, poses: &[Pose], i: usize) -> (i64, i64) {
        let r = self.rect(&poses[i]);
        let overlap = poses
            .iter()
            .filter(|p| p.id != i)
            .map(|p| r.intersection_area(&self.rect(p)))
            .sum();
        let wire = self.touching[i]
            .iter()
            .map(|&l| self.link_length(poses, &self.links[l]))
            .sum();
        (overlap, wire)
    }

    fn wires(&self, poses: &[Pose]) -> Vec<WireSegment> {
        self.links
            .iter()
            .map(|l| WireSegment {
                net: l.net.clone(),
                from: self.port_cell(&poses[l.driver.0], self.templates[l.driver.0].outputs[l.driver.1]),
                to: self.port_cell(
                    &poses[l.consumer.0],
                    self.templates[l.consumer.0].inputs[l.consumer.1],
                ),
            })
            .collect()
    }
}

/// Cost of a placement. Pure; wires fed by primary inputs cost nothing.
pub fn layout_cost(
    placements: &[Pose],
    netlist: &Netlist,
    weights: &Weights,
) -> Result<CostBreakdown, LayoutError> {
    let poses = ordered(placements, netlist.len())?;
    Ok(Problem::new(netlist).cost(&poses, weights))
}

fn ordered(placements: &[Pose], n: usize) -> Result<Vec<Pose>, LayoutError> {
    let mut slots: Vec<Option<Pose>> = vec![None; n];
    for p in placements {
        if p.id >= n || slots[p.id].is_some() {
            return Err(LayoutError::Mismatch(format!("bad or repeated operator id {}", p.id)));
        }
        if p.rot % 90 != 0 || p.rot >= 360 {
            return Err(LayoutError::Mismatch(format!("rotation {} is not a quarter turn", p.rot)));
        }
        slots[p.id] = Some(*p);
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.ok_or_else(|| LayoutError::Mismatch(format!("operator {i} is unplaced"))))
        .collect()
}

/// Square grid large enough for four times the total footprint area.
pub fn default_grid(netlist: &Netlist) -> i32 {
    let (mut area, mut side) = (0i64, 0i32);
    for op in netlist.operators() {
        let t = OperatorTemplate::for_kind(op.kind);
        area += (t.width * t.height) as i64;
        side = side.max(t.width.max(t.height));
    }
    ((4.0 * area as f64).sqrt().ceil() as i32).max(side + 1) + 2
}

struct Annealer<'a> {
    problem: &'a Problem,
    weights: Weights,
    grid: i32,
    rng: ChaCha8Rng,
}

impl Annealer<'_> {
    fn clamp(&self, p: &mut Pose) {
        let (w, h) = self.problem.templates[p.id].size(p.rot);
        p.x = p.x.clamp(0, (self.grid - w).max(0));
        p.y = p.y.clamp(0, (self.grid - h).max(0));
    }

    fn random_pose(&mut self, id: usize) -> Pose {
        let rot = 90 * self.rng.gen_range(0..4u16);
        let mut p = Pose {
            id,
            x: self.rng.gen_range(0..self.grid),
            y: self.rng.gen_range(0..self.grid),
            rot,
        };
        self.clamp(&mut p);
        p
    }

    /// A translated or rotated copy of one operator's pose.
    fn propose(&mut self, poses: &[Pose]) -> Pose {
        let i = self.rng.gen_range(0..poses.len());
        let mut p = poses[i];
        if self.rng.gen_bool(0.5) {
            let b = self.problem.bbox(poses);
            const MARGIN: i32 = 2;
            p.x = self.rng.gen_range(b.x - MARGIN..=b.x + b.w + MARGIN);
            p.y = self.rng.gen_range(b.y - MARGIN..=b.y + b.h + MARGIN);
        } else {
            p.rot = (p.rot + 90) % 360;
        }
        self.clamp(&mut p);
        p
    }

    /// Cost change from replacing operator `p.id`'s pose with `p`.
    fn delta(&self, poses: &mut [Pose], p: Pose, area_before: i64) -> (f64, i64) {
        let old = poses[p.id];
        let (ov0, wi0) = self.problem.local_terms(poses, p.id);
        poses[p.id] = p;
        let (ov1, wi1) = self.problem.local_terms(poses, p.id);
        let b = self.problem.bbox(poses);
        let area = b.w as i64 * b.h as i64;
        poses[p.id] = old;
        let w = &self.weights;
        let d = w.overlap * (ov1 - ov0) as f64
            + w.wire * (wi1 - wi0) as f64
            + w.area * (area - area_before) as f64;
        (d, area)
    }
}

/// Seeded simulated annealing. Returns the best placement visited,
/// translated so the bounding box starts at the origin.
pub fn place(netlist: &Netlist, config: &SaConfig) -> Result<LayoutResult, LayoutError> {
    config.validate()?;
    if netlist.is_empty() {
        return Err(LayoutError::EmptyNetlist);
    }
    let problem = Problem::new(netlist);
    let n = netlist.len();
    let grid = config.grid.unwrap_or_else(|| default_grid(netlist));
    let mut sa = Annealer {
        problem: &problem,
        weights: config.weights(),
        grid,
        rng: ChaCha8Rng::seed_from_u64(config.seed),
    };
    let mut poses: Vec<Pose> = (0..n).map(|i| sa.random_pose(i)).collect();
    let mut current = problem.cost(&poses, &sa.weights).total;
    let mut area = {
        let b = problem.bbox(&poses);
        b.w as i64 * b.h as i64
    };
    let initial_cost = current;
    let mut best = (poses.clone(), current);
    let moves = config.moves_per_epoch.unwrap_or(100 * n);

    // Calibrate the start temperature on a probe epoch of uphill moves.
    let mut uphill = (0.0, 0usize);
    for _ in 0..moves {
        let p = sa.propose(&poses);
        let (d, _) = sa.delta(&mut poses, p, area);
        if d > 0.0 {
            uphill.0 += d;
            uphill.1 += 1;
        }
    }
    let t0 = if uphill.1 == 0 {
        1.0
    } else {
        -(uphill.0 / uphill.1 as f64) / config.initial_acceptance.ln()
    };

    let mut temp = t0;
    let mut stall = 0;
    let mut epochs = 0;
    while temp > t0 * config.min_temp_ratio && stall < config.stall_epochs {
        epochs += 1;
        let mut improved = false;
        for _ in 0..moves {
            let p = sa.propose(&poses);
            let (d, new_area) = sa.delta(&mut poses, p, area);
            if d <= 0.0 || sa.rng.gen::<f64>() < (-d / temp).exp() {
                poses[p.id] = p;
                current += d;
                area = new_area;
                if current < best.1 - 1e-9 {
                    best = (poses.clone(), current);
                    improved = true;
                }
            }
        }
        // Re-anchor the running total against rounding drift.
        current = problem.cost(&poses, &sa.weights).total;
        stall = if improved { 0 } else { stall + 1 };
        temp *= config.cooling_alpha;
    }

    let mut placements = best.0;
    let b = problem.bbox(&placements);
    for p in &mut placements {
        p.x -= b.x;
        p.y -= b.y;
    }
    let result = LayoutResult {
        cost: problem.cost(&placements, &sa.weights),
        wires: problem.wires(&placements),
        bbox: problem.bbox(&placements),
        placements,
        seed: config.seed,
        grid,
        epochs,
        initial_cost,
    };
    if result.cost.overlap > 0 {
        return Err(LayoutError::PlacementInfeasible {
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// Runs `k` independent seeds (`seed`, `seed + 1`, ...) in parallel and keeps
/// the cheapest result; ties go to the lower seed.
pub fn place_best_of(netlist: &Netlist, config: &SaConfig, k: usize) -> Result<LayoutResult, LayoutError> {
    let k = k.max(1);
    let runs: Vec<Result<LayoutResult, LayoutError>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..k as u64)
            .map(|i| {
                let cfg = SaConfig {
                    seed: config.seed.wrapping_add(i),
                    ..config.clone()
                };
                s.spawn(move || place(netlist, &cfg))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let key = |r: &Result<LayoutResult, LayoutError>| match r {
        Ok(res) => (0, res.cost.total),
        Err(LayoutError::PlacementInfeasible { best }) => (1, best.cost.total),
        Err(_) => (2, f64::INFINITY),
    };
    runs.into_iter()
        .reduce(|a, b| if key(&b).0 < key(&a).0 || (key(&b).0 == key(&a).0 && key(&b).1 < key(&a).1) { b } else { a })
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fchdl::parse_circuit;

    const DG90: &str = "NOT(A; C) NOT(B; D) OR (C, D; Q) Timer(Q, 1800; TimerOutput) AND(Q, TimerOutput; Output I)";

    fn pose(id: usize, x: i32, y: i32, rot: u16) -> Pose {
        Pose { id, x, y, rot }
    }

    #[test]
    fn single_gate_costs_its_area() {
        let n = parse_circuit("NOT(A; Q)").unwrap();
        let r = place(&n, &SaConfig::default()).unwrap();
        assert_eq!((r.cost.overlap, r.cost.wire, r.cost.area), (0, 0, 4));
        assert_eq!(r.cost.total, 8.0);
        assert_eq!(r.bbox, Rect { x: 0, y: 0, w: 2, h: 2 });
    }

    #[test]
    fn stacked_blocks_overlap_fully() {
        let n = parse_circuit("NOT(A; B) NOT(C; D)").unwrap();
        let c = layout_cost(&[pose(0, 3, 3, 0), pose(1, 3, 3, 90)], &n, &Weights::default()).unwrap();
        assert_eq!(c.overlap, 4);
    }

    #[test]
    fn wire_is_manhattan_between_ports() {
        // NOT output port sits at (1, 0); AND's first input at (0, 0).
        let n = parse_circuit("NOT(A; C) AND(C, B; Q)").unwrap();
        let c = layout_cost(&[pose(0, -1, 0, 0), pose(1, 3, 4, 0)], &n, &Weights::default()).unwrap();
        assert_eq!(c.wire, 7);
    }

    #[test]
    fn total_is_weighted_sum() {
        let n = parse_circuit(DG90).unwrap();
        let w = Weights { overlap: 3.0, wire: 0.5, area: 7.0 };
        let poses: Vec<Pose> = (0..5).map(|i| pose(i, i as i32 * 2, 0, 0)).collect();
        let c = layout_cost(&poses, &n, &w).unwrap();
        assert_eq!(c.total, 3.0 * c.overlap as f64 + 0.5 * c.wire as f64 + 7.0 * c.area as f64);
    }

    #[test]
    fn placement_must_cover_every_operator() {
        let n = parse_circuit("NOT(A; B) NOT(C; D)").unwrap();
        assert!(layout_cost(&[pose(0, 0, 0, 0)], &n, &Weights::default()).is_err());
        assert!(layout_cost(&[pose(0, 0, 0, 45), pose(1, 0, 0, 0)], &n, &Weights::default()).is_err());
    }

    #[test]
    fn seeded_runs_are_identical() {
        let n = parse_circuit(DG90).unwrap();
        let cfg = SaConfig { seed: 7, ..Default::default() };
        assert_eq!(place(&n, &cfg).unwrap(), place(&n, &cfg).unwrap());
    }

    #[test]
    fn dg90_places_without_overlap() {
        let n = parse_circuit(DG90).unwrap();
        let r = place(&n, &SaConfig::default()).unwrap();
        assert_eq!(r.cost.overlap, 0);
        assert_eq!(layout_cost(&r.placements, &n, &Weights::default()).unwrap(), r.cost);
        assert_eq!(r.wires.len(), 5);
    }

    #[test]
    fn best_of_is_no_worse_than_first_seed() {
        let n = parse_circuit(DG90).unwrap();
        let cfg = SaConfig::default();
        let one = place(&n, &cfg).unwrap();
        let best = place_best_of(&n, &cfg, 4).unwrap();
        assert!(best.cost.total <= one.cost.total);
    }

    #[test]
    fn cramped_grid_is_infeasible() {
        let n = parse_circuit("NOT(A; B) NOT(C; D)").unwrap();
        let cfg = SaConfig { grid: Some(2), ..Default::default() };
        match place(&n, &cfg) {
            Err(LayoutError::PlacementInfeasible { best }) => assert_eq!(best.cost.overlap, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn json_shape() {
        let n = parse_circuit("NOT(A; Q)").unwrap();
        let v = serde_json::to_value(place(&n, &SaConfig { seed: 42, ..Default::default() }).unwrap()).unwrap();
        assert_eq!(v["placements"][0], serde_json::json!({"id":0,"x":0,"y":0,"rot":v["placements"][0]["rot"]}));
        assert_eq!(v["cost"]["overlap"], 0);
        assert_eq!(v["seed"], 42);
    }

    #[test]
    fn bad_config() {
        let n = parse_circuit("NOT(A; Q)").unwrap();
        for cfg in [
            SaConfig { w_overlap: 0.0, w_wire: 0.0, w_area: 0.0, ..Default::default() },
            SaConfig { cooling_alpha: 1.0, ..Default::default() },
            SaConfig { w_wire: -1.0, ..Default::default() },
        ] {
            assert!(matches!(place(&n, &cfg), Err(LayoutError::BadConfig(_))));
        }
    }
}
