//! Digitised X-junction grid: positions, one-way lane priorities, gate zones
//! and the adjacency/distance queries the routers are built on.
//!
//! The device is an M-by-M array of X-junctions. Junction centres sit on an
//! integer lattice at multiples of the resolution `R`; the cells in between
//! are the shuttling lanes. Perimeter junctions additionally carry short
//! outer arms (length `R/2`) and exterior gate zones live at the arm tips.
//! Interior junctions own a gate zone on the lane cell next to their centre.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lattice coordinate. `x` grows rightwards, `y` grows downwards, so the
/// top-left junction centre is at (0, 0) and outer arms may go negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub x: i32,
    pub y: i32,
}

impl Pos {
    pub const fn new(x: i32, y: i32) -> Self {
        Pos { x, y }
    }

    pub fn step(self, dir: Direction) -> Pos {
        let (dx, dy) = dir.delta();
        Pos::new(self.x + dx, self.y + dy)
    }

    pub fn manhattan(self, other: Pos) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

/// Travel direction. The declaration order doubles as the fixed tie-break
/// order used everywhere a deterministic choice is needed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Direction {
    Right,
    Down,
    Left,
    Up,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Right,
        Direction::Down,
        Direction::Left,
        Direction::Up,
    ];

    pub const fn delta(self) -> (i32, i32) {
        match self {
            Direction::Right => (1, 0),
            Direction::Down => (0, 1),
            Direction::Left => (-1, 0),
            Direction::Up => (0, -1),
        }
    }

    pub const fn opposite(self) -> Direction {
        match self {
            Direction::Right => Direction::Left,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
            Direction::Up => Direction::Down,
        }
    }

    pub const fn is_horizontal(self) -> bool {
        matches!(self, Direction::Right | Direction::Left)
    }
}

/// What the lane priority allows at a given cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LaneRule {
    /// Ordinary lane cell: one allowed travel direction.
    Lane(Direction),
    /// Junction centre: the two exit directions given by the intersecting
    /// lanes (outer arms are extra and gated on the ion's destination).
    Junction([Direction; 2]),
    /// Outer-arm cell: the default direction points back into the grid;
    /// travelling outwards is only allowed when the destination is on this
    /// arm.
    Arm { inward: Direction },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZoneKind {
    Interior,
    Exterior,
}

/// A gate zone and the routing geometry that goes with it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateZone {
    pub id: usize,
    pub kind: ZoneKind,
    /// The zone cell itself (arm tip for exterior, lane cell next to the
    /// centre for interior).
    pub coordinate: Pos,
    /// Centre of the owning junction.
    pub adjacent_junction: Pos,
    /// Interior zones only: the two cells flanking the junction centre on
    /// the crossing lane where assigned ions hold and decongest.
    pub waiting_slots: Vec<Pos>,
    /// Where routed ions actually travel to: the zone cell for exterior
    /// zones, the first waiting slot for interior zones (the centre itself
    /// is kept clear).
    pub anchor: Pos,
}

#[derive(Debug, Error)]
pub enum DeviceError {
    #[error("device size must be at least 2, got {0}")]
    DeviceTooSmall(usize),
    #[error("resolution must be at least 3, got {0}")]
    ResolutionTooSmall(usize),
    #[error("coordinate ({0}, {1}) is not a position of this layout")]
    OutOfBounds(i32, i32),
    #[error("no path from ({0}, {1}) to ({2}, {3}); layout construction bug")]
    Unreachable(i32, i32, i32, i32),
}

/// Dense index of a position within a layout. All hot-path structures are
/// indexed by this rather than by coordinate.
pub type PosId = u32;

const NO_POS: PosId = u32::MAX;

/// Distance mode for [`DeviceLayout::shortest_distance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMode {
    /// Respect lane priorities (what a routed ion actually incurs).
    Directed,
    /// Ignore directions (the lower-bound metric).
    Undirected,
}

/// Immutable device description shared by every engine and experiment worker.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviceLayout {
    pub device_size: usize,
    pub resolution: usize,
    pub positions: Vec<Pos>,
    pub junction_centres: Vec<Pos>,
    pub gate_zones: Vec<GateZone>,
    /// Direction of each horizontal lane, top to bottom.
    pub horizontal_lanes: Vec<Direction>,
    /// Direction of each vertical lane, left to right.
    pub vertical_lanes: Vec<Direction>,
    #[serde(skip)]
    index: HashMap<Pos, PosId>,
    /// Lane-priority out-neighbours per cell (arm cells: inward only).
    #[serde(skip)]
    out_edges: Vec<Vec<PosId>>,
    /// Reverse of `out_edges`.
    #[serde(skip)]
    in_edges: Vec<Vec<PosId>>,
    /// Plain grid adjacency, directions ignored.
    #[serde(skip)]
    neighbours: Vec<Vec<PosId>>,
    #[serde(skip)]
    is_centre: Vec<bool>,
    /// For arm cells: (junction centre id, outward direction, depth from centre).
    #[serde(skip)]
    arm_info: Vec<Option<(PosId, Direction, u32)>>,
}

impl DeviceLayout {
    pub fn n_positions(&self) -> usize {
        self.positions.len()
    }

    pub fn pos_id(&self, p: Pos) -> Option<PosId> {
        self.index.get(&p).copied()
    }

    pub fn pos(&self, id: PosId) -> Pos {
        self.positions[id as usize]
    }

    pub fn is_junction_centre(&self, id: PosId) -> bool {
        self.is_centre[id as usize]
    }

    pub fn arm_of(&self, id: PosId) -> Option<(PosId, Direction, u32)> {
        self.arm_info[id as usize]
    }

    pub fn neighbours(&self, id: PosId) -> &[PosId] {
        &self.neighbours[id as usize]
    }

    /// Lane-priority successors of a cell, before destination-specific arm
    /// entry is taken into account.
    pub fn lane_out(&self, id: PosId) -> &[PosId] {
        &self.out_edges[id as usize]
    }

    pub fn lane_in(&self, id: PosId) -> &[PosId] {
        &self.in_edges[id as usize]
    }

    pub fn interior_zone_count(&self) -> usize {
        self.gate_zones
            .iter()
            .filter(|z| z.kind == ZoneKind::Interior)
            .count()
    }

    pub fn exterior_zone_count(&self) -> usize {
        self.gate_zones
            .iter()
            .filter(|z| z.kind == ZoneKind::Exterior)
            .count()
    }

    /// The lane rule at a coordinate.
    pub fn lane_direction(&self, p: Pos) -> Result<LaneRule, DeviceError> {
        let id = self
            .pos_id(p)
            .ok_or(DeviceError::OutOfBounds(p.x, p.y))?;
        if let Some((_, outward, _)) = self.arm_info[id as usize] {
            return Ok(LaneRule::Arm {
                inward: outward.opposite(),
            });
        }
        let r = self.resolution as i32;
        let on_h = p.y.rem_euclid(r) == 0;
        let on_v = p.x.rem_euclid(r) == 0;
        if on_h && on_v {
            let row = (p.y / r) as usize;
            let col = (p.x / r) as usize;
            Ok(LaneRule::Junction([
                self.horizontal_lanes[row],
                self.vertical_lanes[col],
            ]))
        } else if on_h {
            Ok(LaneRule::Lane(self.horizontal_lanes[(p.y / r) as usize]))
        } else {
            Ok(LaneRule::Lane(self.vertical_lanes[(p.x / r) as usize]))
        }
    }

    /// Distance field towards `dest`: `field[p]` is the length of the
    /// shortest path from `p` to `dest`. Unreachable cells hold `u32::MAX`.
    ///
    /// In directed mode the graph is the lane-priority graph plus the
    /// outward edges of the one arm `dest` may live on (arms are only
    /// entered to reach a destination on them).
    pub fn distance_field(&self, dest: PosId, mode: DistanceMode) -> Vec<u32> {
        let mut field = vec![u32::MAX; self.n_positions()];
        let mut queue = std::collections::VecDeque::new();
        field[dest as usize] = 0;
        queue.push_back(dest);
        // Arm cells whose outward edges count for this destination.
        let dest_arm = self.arm_info[dest as usize];
        while let Some(v) = queue.pop_front() {
            let dv = field[v as usize];
            let preds: &[PosId] = match mode {
                DistanceMode::Undirected => &self.neighbours[v as usize],
                DistanceMode::Directed => &self.in_edges[v as usize],
            };
            for &u in preds {
                if field[u as usize] == u32::MAX {
                    field[u as usize] = dv + 1;
                    queue.push_back(u);
                }
            }
            // Directed mode: the outward edge u -> v on the destination arm.
            if mode == DistanceMode::Directed {
                if let (Some((cj, cd, depth)), Some((dj, dd, ddepth))) =
                    (self.arm_info[v as usize], dest_arm)
                {
                    if cj == dj && cd == dd && depth <= ddepth {
                        let u = if depth == 1 {
                            cj
                        } else {
                            let p = self.pos(v).step(cd.opposite());
                            self.index[&p]
                        };
                        if field[u as usize] == u32::MAX {
                            field[u as usize] = field[v as usize] + 1;
                            queue.push_back(u);
                        }
                    }
                }
            }
        }
        field
    }

    /// Shortest path length in cells between two coordinates.
    pub fn shortest_distance(
        &self,
        from: Pos,
        to: Pos,
        mode: DistanceMode,
    ) -> Result<u32, DeviceError> {
        let f = self
            .pos_id(from)
            .ok_or(DeviceError::OutOfBounds(from.x, from.y))?;
        let t = self.pos_id(to).ok_or(DeviceError::OutOfBounds(to.x, to.y))?;
        if f == t {
            return Ok(0);
        }
        let field = self.distance_field(t, mode);
        let d = field[f as usize];
        if d == u32::MAX {
            return Err(DeviceError::Unreachable(from.x, from.y, to.x, to.y));
        }
        Ok(d)
    }

    /// Rebuild the derived indices after deserialisation.
    pub fn rebuild_indices(&mut self) {
        let built = build_layout(self.device_size, self.resolution)
            .expect("layout parameters were valid when serialised");
        self.index = built.index;
        self.out_edges = built.out_edges;
        self.in_edges = built.in_edges;
        self.neighbours = built.neighbours;
        self.is_centre = built.is_centre;
        self.arm_info = built.arm_info;
    }
}

/// Construct the layout for an `m` x `m` junction grid at resolution `r`.
pub fn build_layout(m: usize, r: usize) -> Result<DeviceLayout, DeviceError> {
    if m < 2 {
        return Err(DeviceError::DeviceTooSmall(m));
    }
    if r < 3 {
        return Err(DeviceError::ResolutionTooSmall(r));
    }
    let ri = r as i32;
    let mi = m as i32;
    let arm_len = (r / 2) as i32;

    let mut positions: Vec<Pos> = Vec::new();
    // Junction centres and the lane cells between them.
    for row in 0..mi {
        for x in 0..=(mi - 1) * ri {
            positions.push(Pos::new(x, row * ri));
        }
    }
    for col in 0..mi {
        for y in 0..=(mi - 1) * ri {
            let p = Pos::new(col * ri, y);
            if y.rem_euclid(ri) != 0 {
                positions.push(p);
            }
        }
    }
    // Outer arms on every off-grid side of perimeter junctions.
    let mut arm_cells: Vec<(Pos, Pos, Direction, u32)> = Vec::new(); // (cell, centre, outward, depth)
    for row in 0..mi {
        for col in 0..mi {
            let centre = Pos::new(col * ri, row * ri);
            for dir in Direction::ALL {
                let outward = match dir {
                    Direction::Right => col == mi - 1,
                    Direction::Down => row == mi - 1,
                    Direction::Left => col == 0,
                    Direction::Up => row == 0,
                };
                if !outward {
                    continue;
                }
                for depth in 1..=arm_len {
                    let (dx, dy) = dir.delta();
                    let cell = Pos::new(centre.x + dx * depth, centre.y + dy * depth);
                    positions.push(cell);
                    arm_cells.push((cell, centre, dir, depth as u32));
                }
            }
        }
    }
    positions.sort();
    positions.dedup();

    let index: HashMap<Pos, PosId> = positions
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, i as PosId))
        .collect();

    let junction_centres: Vec<Pos> = (0..mi)
        .flat_map(|row| (0..mi).map(move |col| Pos::new(col * ri, row * ri)))
        .collect();

    // Lane directions: alternate from the outside in, but the last lane is
    // forced so the perimeter is always a clockwise loop. For even m the
    // forcing is a no-op and the alternation is exact.
    let horizontal_lanes: Vec<Direction> = (0..m)
        .map(|row| {
            if row == m - 1 {
                Direction::Left
            } else if row % 2 == 0 {
                Direction::Right
            } else {
                Direction::Left
            }
        })
        .collect();
    let vertical_lanes: Vec<Direction> = (0..m)
        .map(|col| {
            if col == m - 1 {
                Direction::Down
            } else if col % 2 == 0 {
                Direction::Up
            } else {
                Direction::Down
            }
        })
        .collect();

    let n = positions.len();
    let mut arm_info: Vec<Option<(PosId, Direction, u32)>> = vec![None; n];
    for (cell, centre, dir, depth) in &arm_cells {
        arm_info[index[cell] as usize] = Some((index[centre], *dir, *depth));
    }
    let mut is_centre = vec![false; n];
    for c in &junction_centres {
        is_centre[index[c] as usize] = true;
    }

    // Lane-priority edges. Arm cells only get their inward edge here; the
    // outward edges are supplied per destination by `distance_field`.
    let mut out_edges: Vec<Vec<PosId>> = vec![Vec::new(); n];
    for (i, &p) in positions.iter().enumerate() {
        if let Some((centre, outward, depth)) = arm_info[i] {
            let target = if depth == 1 {
                centre
            } else {
                index[&p.step(outward.opposite())]
            };
            out_edges[i].push(target);
            continue;
        }
        let on_h = p.y.rem_euclid(ri) == 0;
        let on_v = p.x.rem_euclid(ri) == 0;
        if on_h && on_v {
            // Junction centre: exit along each intersecting lane where the
            // next cell is still a grid cell (off-grid exits are arms).
            let row = (p.y / ri) as usize;
            let col = (p.x / ri) as usize;
            for dir in [horizontal_lanes[row], vertical_lanes[col]] {
                let q = p.step(dir);
                if let Some(&qid) = index.get(&q) {
                    if arm_info[qid as usize].is_none() {
                        out_edges[i].push(qid);
                    }
                }
            }
        } else if on_h {
            let dir = horizontal_lanes[(p.y / ri) as usize];
            out_edges[i].push(index[&p.step(dir)]);
        } else {
            let dir = vertical_lanes[(p.x / ri) as usize];
            out_edges[i].push(index[&p.step(dir)]);
        }
    }
    let mut in_edges: Vec<Vec<PosId>> = vec![Vec::new(); n];
    for (u, outs) in out_edges.iter().enumerate() {
        for &v in outs {
            in_edges[v as usize].push(u as PosId);
        }
    }

    let mut neighbours: Vec<Vec<PosId>> = vec![Vec::new(); n];
    for (i, &p) in positions.iter().enumerate() {
        for dir in Direction::ALL {
            if let Some(&q) = index.get(&p.step(dir)) {
                neighbours[i].push(q);
            }
        }
    }

    // One gate zone per junction. Perimeter junctions take an exterior zone
    // at the tip of their first outer arm; interior junctions take the lane
    // cell on the arm pointing towards the middle of the device, with the
    // two crossing-lane cells as waiting slots.
    let mut gate_zones: Vec<GateZone> = Vec::new();
    for row in 0..mi {
        for col in 0..mi {
            let centre = Pos::new(col * ri, row * ri);
            let id = gate_zones.len();
            let on_perimeter = row == 0 || row == mi - 1 || col == 0 || col == mi - 1;
            if on_perimeter {
                let outward_dir = Direction::ALL
                    .into_iter()
                    .find(|d| match d {
                        Direction::Right => col == mi - 1,
                        Direction::Down => row == mi - 1,
                        Direction::Left => col == 0,
                        Direction::Up => row == 0,
                    })
                    .expect("perimeter junction has an outward side");
                let (dx, dy) = outward_dir.delta();
                let tip = Pos::new(centre.x + dx * arm_len, centre.y + dy * arm_len);
                gate_zones.push(GateZone {
                    id,
                    kind: ZoneKind::Exterior,
                    coordinate: tip,
                    adjacent_junction: centre,
                    waiting_slots: Vec::new(),
                    anchor: tip,
                });
            } else {
                // Direction whose dot product with the vector to the device
                // middle is positive, first in the fixed order; the exact
                // middle junction of odd devices falls back to Right.
                let mx = (mi - 1) * ri;
                let to_mid = (mx - 2 * centre.x, mx - 2 * centre.y);
                let zone_dir = Direction::ALL
                    .into_iter()
                    .find(|d| {
                        let (dx, dy) = d.delta();
                        dx * to_mid.0 + dy * to_mid.1 > 0
                    })
                    .unwrap_or(Direction::Right);
                let zone_cell = centre.step(zone_dir);
                let slots: Vec<Pos> = if zone_dir.is_horizontal() {
                    vec![centre.step(Direction::Down), centre.step(Direction::Up)]
                } else {
                    vec![centre.step(Direction::Right), centre.step(Direction::Left)]
                };
                gate_zones.push(GateZone {
                    id,
                    kind: ZoneKind::Interior,
                    coordinate: zone_cell,
                    adjacent_junction: centre,
                    anchor: slots[0],
                    waiting_slots: slots,
                });
            }
        }
    }

    Ok(DeviceLayout {
        device_size: m,
        resolution: r,
        positions,
        junction_centres,
        gate_zones,
        horizontal_lanes,
        vertical_lanes,
        index,
        out_edges,
        in_edges,
        neighbours,
        is_centre,
        arm_info,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashSet, VecDeque};

    /// Plain breadth-first search over raw coordinates, kept independent of
    /// the layout's adjacency tables.
    fn bfs_oracle(layout: &DeviceLayout, from: Pos, to: Pos) -> Option<u32> {
        let cells: HashSet<Pos> = layout.positions.iter().copied().collect();
        let mut dist = HashMap::new();
        let mut queue = VecDeque::new();
        dist.insert(from, 0u32);
        queue.push_back(from);
        while let Some(p) = queue.pop_front() {
            if p == to {
                return Some(dist[&p]);
            }
            let d = dist[&p];
            for dir in Direction::ALL {
                let q = p.step(dir);
                if cells.contains(&q) && !dist.contains_key(&q) {
                    dist.insert(q, d + 1);
                    queue.push_back(q);
                }
            }
        }
        None
    }

    #[test]
    fn zone_counts_match_closed_forms() {
        for m in 2..=16 {
            let layout = build_layout(m, 7).unwrap();
            let interior = layout.interior_zone_count();
            let exterior = layout.exterior_zone_count();
            let expect_interior = if m >= 2 { (m - 2) * (m - 2) } else { 0 };
            assert_eq!(interior, expect_interior, "m={m}");
            assert_eq!(exterior, 4 * m - 4, "m={m}");
            assert_eq!(interior + exterior, m * m, "m={m}");
            assert_eq!(layout.junction_centres.len(), m * m, "m={m}");
        }
    }

    #[test]
    fn m7_is_the_crossover_device() {
        let layout = build_layout(7, 7).unwrap();
        assert_eq!(layout.interior_zone_count(), 25);
        assert_eq!(layout.exterior_zone_count(), 24);
        assert_eq!(layout.gate_zones.len(), 49);
    }

    #[test]
    fn m2_has_no_interior_zones() {
        let layout = build_layout(2, 7).unwrap();
        assert_eq!(layout.interior_zone_count(), 0);
        assert_eq!(layout.exterior_zone_count(), 4);
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(matches!(
            build_layout(1, 7),
            Err(DeviceError::DeviceTooSmall(1))
        ));
        assert!(matches!(
            build_layout(4, 2),
            Err(DeviceError::ResolutionTooSmall(2))
        ));
    }

    #[test]
    fn lane_rules_match_the_stated_pattern() {
        let layout = build_layout(4, 7).unwrap();
        // Top lane right-only, the one below left-only.
        assert_eq!(
            layout.lane_direction(Pos::new(3, 0)).unwrap(),
            LaneRule::Lane(Direction::Right)
        );
        assert_eq!(
            layout.lane_direction(Pos::new(3, 7)).unwrap(),
            LaneRule::Lane(Direction::Left)
        );
        // Odd device: right, left, left horizontally and up, down, down
        // vertically.
        let odd = build_layout(3, 7).unwrap();
        assert_eq!(
            odd.horizontal_lanes,
            vec![Direction::Right, Direction::Left, Direction::Left]
        );
        assert_eq!(
            odd.vertical_lanes,
            vec![Direction::Up, Direction::Down, Direction::Down]
        );
        assert!(odd.lane_direction(Pos::new(1000, 0)).is_err());
    }

    #[test]
    fn even_devices_alternate_interior_lanes_strictly() {
        for m in [4usize, 6, 8] {
            let layout = build_layout(m, 5).unwrap();
            for (i, pair) in layout.horizontal_lanes.windows(2).enumerate() {
                assert_ne!(pair[0], pair[1], "m={m} h-lanes {i}");
            }
            for (i, pair) in layout.vertical_lanes.windows(2).enumerate() {
                assert_ne!(pair[0], pair[1], "m={m} v-lanes {i}");
            }
        }
    }

    #[test]
    fn junction_centres_report_both_exits() {
        let layout = build_layout(3, 7).unwrap();
        match layout.lane_direction(Pos::new(7, 7)).unwrap() {
            LaneRule::Junction(dirs) => {
                assert_eq!(dirs, [Direction::Left, Direction::Down]);
            }
            other => panic!("expected junction rule, got {other:?}"),
        }
    }

    #[test]
    fn perimeter_forms_a_single_clockwise_cycle() {
        for m in [2usize, 3, 5, 8] {
            let layout = build_layout(m, 7).unwrap();
            let r = layout.resolution as i32;
            let side = (m as i32 - 1) * r;
            let mut perimeter: HashSet<Pos> = HashSet::new();
            for x in 0..=side {
                perimeter.insert(Pos::new(x, 0));
                perimeter.insert(Pos::new(x, side));
            }
            for y in 0..=side {
                perimeter.insert(Pos::new(0, y));
                perimeter.insert(Pos::new(side, y));
            }
            // Walk the lane edges from the top-left centre; on the perimeter
            // every cell has exactly one perimeter successor.
            let start = layout.pos_id(Pos::new(0, 0)).unwrap();
            let mut cur = start;
            let mut seen = 0usize;
            loop {
                let nexts: Vec<PosId> = layout
                    .lane_out(cur)
                    .iter()
                    .copied()
                    .filter(|&q| perimeter.contains(&layout.pos(q)))
                    .collect();
                assert_eq!(
                    nexts.len(),
                    1,
                    "m={m}: perimeter cell {:?} should have one perimeter exit",
                    layout.pos(cur)
                );
                cur = nexts[0];
                seen += 1;
                if cur == start {
                    break;
                }
                assert!(seen <= perimeter.len(), "m={m}: walk left the cycle");
            }
            assert_eq!(seen, perimeter.len(), "m={m}");
        }
    }

    #[test]
    fn every_zone_is_directed_reachable_from_every_centre() {
        for m in 2..=6 {
            let layout = build_layout(m, 5).unwrap();
            for zone in &layout.gate_zones {
                let anchor = layout.pos_id(zone.anchor).unwrap();
                let field = layout.distance_field(anchor, DistanceMode::Directed);
                for centre in &layout.junction_centres {
                    let c = layout.pos_id(*centre).unwrap();
                    assert_ne!(
                        field[c as usize],
                        u32::MAX,
                        "m={m}: zone {} anchor unreachable from {centre:?}",
                        zone.id
                    );
                }
                // The zone cell itself must be reachable too.
                let cell = layout.pos_id(zone.coordinate).unwrap();
                let cell_field = layout.distance_field(cell, DistanceMode::Directed);
                for centre in &layout.junction_centres {
                    let c = layout.pos_id(*centre).unwrap();
                    assert_ne!(cell_field[c as usize], u32::MAX, "m={m} zone {}", zone.id);
                }
            }
        }
    }

    #[test]
    fn undirected_distance_matches_bfs_oracle() {
        for m in [2usize, 4, 6] {
            let layout = build_layout(m, 7).unwrap();
            let r = layout.resolution as i32;
            let side = (m as i32 - 1) * r;
            let samples = [
                (Pos::new(0, 0), Pos::new(side, side)),
                (Pos::new(0, 0), Pos::new(0, 0)),
                (Pos::new(3, 0), Pos::new(side, side - 2)),
                (Pos::new(0, 2), Pos::new(side - 1, side)),
            ];
            for (from, to) in samples {
                let got = layout
                    .shortest_distance(from, to, DistanceMode::Undirected)
                    .unwrap();
                let want = bfs_oracle(&layout, from, to).unwrap();
                assert_eq!(got, want, "m={m} {from:?}->{to:?}");
            }
        }
    }

    #[test]
    fn opposite_corners_undirected_distance_is_manhattan() {
        let layout = build_layout(4, 7).unwrap();
        let side = 3 * 7;
        let d = layout
            .shortest_distance(
                Pos::new(0, 0),
                Pos::new(side, side),
                DistanceMode::Undirected,
            )
            .unwrap();
        assert_eq!(d, 2 * side as u32);
    }

    #[test]
    fn adjacent_cells_on_a_lane_are_one_step_apart() {
        let layout = build_layout(4, 7).unwrap();
        let d = layout
            .shortest_distance(Pos::new(1, 0), Pos::new(2, 0), DistanceMode::Directed)
            .unwrap();
        assert_eq!(d, 1);
    }

    #[test]
    fn arm_cells_are_not_lane_through_traffic() {
        // Directed distance into an arm tip must be finite (it is a zone)
        // while the arm must not shortcut grid-to-grid paths.
        let layout = build_layout(3, 7).unwrap();
        let tip = layout.gate_zones[0].coordinate;
        assert!(layout
            .shortest_distance(Pos::new(7, 7), tip, DistanceMode::Directed)
            .is_ok());
        // From the tip the only way out is inward.
        let tip_id = layout.pos_id(tip).unwrap();
        assert_eq!(layout.lane_out(tip_id).len(), 1);
    }

    #[test]
    fn layout_serialises_to_json_and_back() {
        let layout = build_layout(3, 7).unwrap();
        let text = serde_json::to_string(&layout).unwrap();
        let mut back: DeviceLayout = serde_json::from_str(&text).unwrap();
        back.rebuild_indices();
        assert_eq!(back.positions, layout.positions);
        assert_eq!(back.gate_zones.len(), layout.gate_zones.len());
        assert_eq!(
            back.shortest_distance(Pos::new(0, 0), Pos::new(14, 14), DistanceMode::Undirected)
                .unwrap(),
            layout
                .shortest_distance(Pos::new(0, 0), Pos::new(14, 14), DistanceMode::Undirected)
                .unwrap()
        );
    }
}
