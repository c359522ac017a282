//! Seeded procedural floor plans: a grid of rooms (optionally split by a
//! corridor) joined by doors, furnished with objects whose categories follow
//! per-room-kind co-location preferences.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cell, GridDims, Mask, Raster};
use crate::planning::reachable_set;

use super::world::{ObjectInstance, Room, World};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// `rooms_x × rooms_y` rooms; with `corridor_width > 0` and at least two
    /// room rows, a corridor runs between the middle rows.
    Rooms,
    /// One long empty-ended corridor of `corridor_width × corridor_length`.
    Corridor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomKind {
    pub name: String,
    /// Categories preferred in this kind of room.
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WorldParams {
    pub layout: Layout,
    pub rooms_x: usize,
    pub rooms_y: usize,
    /// Room interior side range in meters.
    pub room_size_min: f64,
    pub room_size_max: f64,
    pub corridor_width: f64,
    pub corridor_length: f64,
    pub door_width: f64,
    /// Probability of a door on each room adjacency beyond the spanning tree.
    pub extra_door_prob: f64,
    pub objects_per_room_min: usize,
    pub objects_per_room_max: usize,
    /// Object side range in meters.
    pub object_size_min: f64,
    pub object_size_max: f64,
    pub categories: Vec<String>,
    pub room_kinds: Vec<RoomKind>,
    /// Probability that an object's category is drawn from its room kind's
    /// preferred list rather than uniformly.
    pub co_location_bias: f64,
    pub cell_size: f64,
    /// Embodiment radius used to check that the plan stays traversable.
    pub agent_radius: f64,
    /// Free margin (meters) kept around doors and between objects.
    pub clearance: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        Self {
            layout: Layout::Rooms,
            rooms_x: 2,
            rooms_y: 2,
            room_size_min: 3.5,
            room_size_max: 5.0,
            corridor_width: 0.0,
            corridor_length: 10.0,
            door_width: 1.0,
            extra_door_prob: 0.3,
            objects_per_room_min: 2,
            objects_per_room_max: 3,
            object_size_min: 0.3,
            object_size_max: 0.8,
            categories: s(&["chair", "bed", "plant", "toilet", "tv_monitor", "sofa"]),
            room_kinds: vec![
                RoomKind {
                    name: "bedroom".into(),
                    categories: s(&["bed", "chair", "tv_monitor", "plant"]),
                },
                RoomKind {
                    name: "bathroom".into(),
                    categories: s(&["toilet", "plant"]),
                },
                RoomKind {
                    name: "living_room".into(),
                    categories: s(&["sofa", "tv_monitor", "chair", "plant"]),
                },
            ],
            co_location_bias: 0.8,
            cell_size: 0.1,
            agent_radius: 0.2,
            clearance: 0.6,
        }
    }
}

impl WorldParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Generation(m.to_string()));
        if !(self.cell_size > 0.0) {
            return bad("cell_size must be positive");
        }
        if self.layout == Layout::Rooms && (self.rooms_x == 0 || self.rooms_y == 0) {
            return bad("room counts must be positive");
        }
        if !(self.room_size_min > 0.0 && self.room_size_min <= self.room_size_max) {
            return bad("room size range is empty or non-positive");
        }
        if self.layout == Layout::Corridor && !(self.corridor_width > 0.0 && self.corridor_length > 0.0) {
            return bad("corridor layout needs positive corridor width and length");
        }
        if !(self.object_size_min > 0.0 && self.object_size_min <= self.object_size_max) {
            return bad("object size range is empty or non-positive");
        }
        if self.objects_per_room_min > self.objects_per_room_max {
            return bad("objects_per_room_min exceeds objects_per_room_max");
        }
        if self.categories.is_empty() {
            return bad("no object categories");
        }
        if !(0.0..=1.0).contains(&self.co_location_bias) || !(0.0..=1.0).contains(&self.extra_door_prob) {
            return bad("probabilities must lie in [0, 1]");
        }
        let door_cells = (self.door_width / self.cell_size).round() as usize;
        if door_cells < 1 {
            return bad("door narrower than one cell");
        }
        for k in &self.room_kinds {
            if let Some(c) = k.categories.iter().find(|c| !self.categories.contains(c)) {
                return bad(&format!("room kind {} prefers unknown category {c}", k.name));
            }
        }
        Ok(())
    }
}

struct Plan {
    dims: GridDims,
    walls: Mask,
    rooms: Vec<Room>,
    corridor: Option<usize>,
    doors: Vec<Cell>,
}

fn cells(meters: f64, cell_size: f64) -> usize {
    (meters / cell_size).round().max(1.0) as usize
}

fn carve(walls: &mut Mask, room: &Room) {
    for y in room.min.y..=room.max.y {
        for x in room.min.x..=room.max.x {
            walls[Cell::new(x, y)] = false;
        }
    }
}

/// Shared wall segment between two rooms: the wall cells separating them,
/// with the direction across the wall.
fn shared_wall(a: &Room, b: &Room) -> Option<Vec<Cell>> {
    // Vertical wall: a's right side one cell left of b's left side.
    let vertical = |l: &Room, r: &Room| -> Option<Vec<Cell>> {
        if l.max.x + 2 != r.min.x {
            return None;
        }
        let lo = l.min.y.max(r.min.y);
        let hi = l.max.y.min(r.max.y);
        (lo <= hi).then(|| (lo..=hi).map(|y| Cell::new(l.max.x + 1, y)).collect())
    };
    let horizontal = |d: &Room, u: &Room| -> Option<Vec<Cell>> {
        if d.max.y + 2 != u.min.y {
            return None;
        }
        let lo = d.min.x.max(u.min.x);
        let hi = d.max.x.min(u.max.x);
        (lo <= hi).then(|| (lo..=hi).map(|x| Cell::new(x, d.max.y + 1)).collect())
    };
    vertical(a, b)
        .or_else(|| vertical(b, a))
        .or_else(|| horizontal(a, b))
        .or_else(|| horizontal(b, a))
}

fn open_door(walls: &mut Mask, segment: &[Cell], door: usize, rng: &mut ChaCha8Rng, doors: &mut Vec<Cell>) -> bool {
    // Keep at least two wall cells on either side of the opening.
    let margin = 2;
    if segment.len() < door + 2 * margin {
        return false;
    }
    let start = rng.random_range(margin..=segment.len() - door - margin);
    for &c in &segment[start..start + door] {
        walls[c] = false;
        doors.push(c);
    }
    true
}

fn layout_plan(params: &WorldParams, rng: &mut ChaCha8Rng) -> Result<Plan> {
    let cs = params.cell_size;
    let mut size = || {
        let m = rng.random_range(params.room_size_min..=params.room_size_max);
        cells(m, cs)
    };
    let (cols, mut rows): (Vec<usize>, Vec<usize>) = match params.layout {
        Layout::Corridor => (
            vec![cells(params.corridor_length, cs)],
            vec![cells(params.corridor_width, cs)],
        ),
        Layout::Rooms => (
            (0..params.rooms_x).map(|_| size()).collect(),
            (0..params.rooms_y).map(|_| size()).collect(),
        ),
    };
    let corridor_row = (params.layout == Layout::Rooms && params.corridor_width > 0.0 && rows.len() >= 2)
        .then(|| {
            let at = rows.len() / 2;
            rows.insert(at, cells(params.corridor_width, cs));
            at
        });
    let nx = cols.iter().sum::<usize>() + cols.len() + 1;
    let ny = rows.iter().sum::<usize>() + rows.len() + 1;
    let dims = GridDims::new(nx, ny);
    let mut walls = Raster::filled(dims, true);

    let mut rooms = Vec::new();
    let mut corridor = None;
    let mut y0 = 1;
    for (r, &h) in rows.iter().enumerate() {
        if Some(r) == corridor_row {
            corridor = Some(rooms.len());
            rooms.push(Room {
                kind: "corridor".into(),
                min: Cell::new(1, y0),
                max: Cell::new(nx - 2, y0 + h - 1),
            });
        } else {
            let mut x0 = 1;
            for &w in &cols {
                let kind = match params.layout {
                    Layout::Corridor => "corridor".to_string(),
                    Layout::Rooms => params
                        .room_kinds
                        .choose(rng)
                        .map_or_else(|| "room".to_string(), |k| k.name.clone()),
                };
                rooms.push(Room {
                    kind,
                    min: Cell::new(x0, y0),
                    max: Cell::new(x0 + w - 1, y0 + h - 1),
                });
                x0 += w + 1;
            }
        }
        y0 += h + 1;
    }
    for room in &rooms {
        carve(&mut walls, room);
    }

    // Doors: every room touching the corridor opens onto it; the rest are
    // joined by a random spanning tree plus occasional extra doors.
    let door = cells(params.door_width, cs);
    let mut doors = Vec::new();
    let n = rooms.len();
    let mut edges: Vec<(usize, usize, Vec<Cell>)> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if let Some(seg) = shared_wall(&rooms[a], &rooms[b]) {
                edges.push((a, b, seg));
            }
        }
    }
    edges.shuffle(rng);
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    // Corridor edges first so the tree uses them.
    edges.sort_by_key(|(a, b, _)| !(Some(*a) == corridor || Some(*b) == corridor));
    for (a, b, seg) in &edges {
        let to_corridor = Some(*a) == corridor || Some(*b) == corridor;
        let (ra, rb) = (find(&mut parent, *a), find(&mut parent, *b));
        let wanted = to_corridor || ra != rb || rng.random_bool(params.extra_door_prob);
        if wanted && open_door(&mut walls, seg, door, rng, &mut doors) {
            parent[ra] = rb;
        }
    }
    let root = find(&mut parent, 0);
    if (0..n).any(|i| find(&mut parent, i) != root) {
        return Err(Error::Generation("rooms are too small for doors of the requested width".into()));
    }
    Ok(Plan {
        dims,
        walls,
        rooms,
        corridor,
        doors,
    })
}

fn pick_category(params: &WorldParams, room: &Room, rng: &mut ChaCha8Rng) -> String {
    let preferred = params
        .room_kinds
        .iter()
        .find(|k| k.name == room.kind)
        .map(|k| k.categories.as_slice())
        .unwrap_or(&[]);
    if !preferred.is_empty() && rng.random_bool(params.co_location_bias) {
        preferred.choose(rng).expect("non-empty").clone()
    } else {
        params.categories.choose(rng).expect("validated non-empty").clone()
    }
}

/// All floor reachable from the first room's free space, and every object
/// approachable within 1.5 m.
fn traversable(walls: &Mask, objects: &[ObjectInstance], rooms: &[Room], params: &WorldParams) -> bool {
    let mut blocked = walls.clone();
    for o in objects {
        for &c in &o.cells {
            blocked[c] = true;
        }
    }
    let nav = crate::grid::dilate(&blocked, params.agent_radius / params.cell_size).map(|b| !b);
    let Some(seed) = rooms.iter().find_map(|r| {
        (r.min.y..=r.max.y)
            .flat_map(|y| (r.min.x..=r.max.x).map(move |x| Cell::new(x, y)))
            .find(|&c| nav[c])
    }) else {
        return false;
    };
    let reach = reachable_set(&nav, seed).expect("seed is navigable");
    let every_room = rooms.iter().all(|r| {
        (r.min.y..=r.max.y)
            .flat_map(|y| (r.min.x..=r.max.x).map(move |x| Cell::new(x, y)))
            .any(|c| reach[c])
    });
    let unreached_nav = nav.and_not(&reach).any();
    let near = crate::grid::dilate(&reach, 1.5 / params.cell_size);
    let objects_ok = objects.iter().all(|o| o.cells.iter().any(|&c| near[c]));
    every_room && !unreached_nav && objects_ok
}

/// Generates a world; identical `(params, seed)` give identical worlds.
pub fn generate_world(params: &WorldParams, seed: u64) -> Result<World> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let plan = layout_plan(params, &mut rng)?;
    let cs = params.cell_size;
    let clear = cells(params.clearance, cs) as i64;
    let mut objects: Vec<ObjectInstance> = Vec::new();
    // Cells no object may use: doors and everything near them.
    let mut keep_out = Raster::filled(plan.dims, false);
    for &d in &plan.doors {
        for dy in -clear..=clear {
            for dx in -clear..=clear {
                if let Some(c) = plan.dims.offset(d, dx, dy) {
                    keep_out[c] = true;
                }
            }
        }
    }

    for (ri, room) in plan.rooms.iter().enumerate() {
        if Some(ri) == plan.corridor && params.layout == Layout::Rooms {
            continue;
        }
        let count = rng.random_range(params.objects_per_room_min..=params.objects_per_room_max);
        for _ in 0..count {
            let category = pick_category(params, room, &mut rng);
            for _attempt in 0..50 {
                let w = cells(rng.random_range(params.object_size_min..=params.object_size_max), cs);
                let h = cells(rng.random_range(params.object_size_min..=params.object_size_max), cs);
                let (rw, rh) = (room.max.x - room.min.x + 1, room.max.y - room.min.y + 1);
                if w + 2 > rw || h + 2 > rh {
                    continue;
                }
                let x0 = rng.random_range(room.min.x + 1..=room.max.x + 1 - w);
                let y0 = rng.random_range(room.min.y + 1..=room.max.y + 1 - h);
                let footprint: Vec<Cell> = (y0..y0 + h)
                    .flat_map(|y| (x0..x0 + w).map(move |x| Cell::new(x, y)))
                    .collect();
                if footprint.iter().any(|&c| keep_out[c]) {
                    continue;
                }
                let (gx, gy) = (x0 as f64 + w as f64 / 2.0, y0 as f64 + h as f64 / 2.0);
                let candidate = ObjectInstance {
                    category: category.clone(),
                    room: ri,
                    cells: footprint,
                    centroid: (gx * cs, gy * cs),
                };
                objects.push(candidate);
                if traversable(&plan.walls, &objects, &plan.rooms, params) {
                    let placed = objects.last().expect("just pushed");
                    for &c in &placed.cells {
                        for dy in -clear..=clear {
                            for dx in -clear..=clear {
                                if let Some(n) = plan.dims.offset(c, dx, dy) {
                                    keep_out[n] = true;
                                }
                            }
                        }
                    }
                    break;
                }
                objects.pop();
            }
        }
    }
    let world = World::new(seed, cs, params.categories.clone(), plan.rooms, plan.walls, objects)?;
    world.validate(params.agent_radius)?;
    Ok(world)
}
