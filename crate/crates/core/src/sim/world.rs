use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dilate, Cell, GridDims, MapGrid, Mask, Raster};

/// Label code of floor hits in rendered observations.
pub const LABEL_FLOOR: u16 = 0;
/// Label code of wall hits. Object hits use `LABEL_OBJECT_BASE + category index`.
pub const LABEL_WALL: u16 = 1;
pub const LABEL_OBJECT_BASE: u16 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Floor,
    Wall,
    /// Index into [`World::objects`].
    Object(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub kind: String,
    /// Inclusive interior bounds in cells.
    pub min: Cell,
    pub max: Cell,
}

impl Room {
    pub fn contains(&self, c: Cell) -> bool {
        (self.min.x..=self.max.x).contains(&c.x) && (self.min.y..=self.max.y).contains(&c.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectInstance {
    pub category: String,
    pub room: usize,
    pub cells: Vec<Cell>,
    /// World coordinates in meters.
    pub centroid: (f64, f64),
}

/// Serialized form: walls as text rows (`#` wall, `.` floor), top row first.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorldFile {
    seed: u64,
    cell_size: f64,
    nx: usize,
    ny: usize,
    categories: Vec<String>,
    rooms: Vec<Room>,
    objects: Vec<ObjectInstance>,
    rows: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub seed: u64,
    pub cell_size: f64,
    pub categories: Vec<String>,
    pub rooms: Vec<Room>,
    pub objects: Vec<ObjectInstance>,
    walls: Mask,
    object_at: Raster<Option<u32>>,
}

impl World {
    /// Builds a world from walls and objects; object cells must not overlap
    /// walls or each other.
    pub fn new(
        seed: u64,
        cell_size: f64,
        categories: Vec<String>,
        rooms: Vec<Room>,
        walls: Mask,
        objects: Vec<ObjectInstance>,
    ) -> Result<Self> {
        let mut object_at = Raster::filled(walls.dims(), None);
        for (k, o) in objects.iter().enumerate() {
            if !categories.contains(&o.category) {
                return Err(Error::Generation(format!("object category {:?} is not declared", o.category)));
            }
            for &c in &o.cells {
                if !walls.dims().contains(c) || walls[c] || object_at[c].is_some() {
                    return Err(Error::Generation(format!(
                        "object {k} overlaps a wall, another object or the border at ({}, {})",
                        c.x, c.y
                    )));
                }
                object_at[c] = Some(k as u32);
            }
        }
        Ok(Self {
            seed,
            cell_size,
            categories,
            rooms,
            objects,
            walls,
            object_at,
        })
    }

    pub fn dims(&self) -> GridDims {
        self.walls.dims()
    }

    pub fn grid(&self) -> MapGrid {
        MapGrid::new(self.dims(), 1.0 / self.cell_size)
    }

    pub fn extent(&self) -> (f64, f64) {
        let d = self.dims();
        (d.nx as f64 * self.cell_size, d.ny as f64 * self.cell_size)
    }

    pub fn kind(&self, c: Cell) -> CellKind {
        if self.walls[c] {
            CellKind::Wall
        } else if let Some(k) = self.object_at[c] {
            CellKind::Object(k as usize)
        } else {
            CellKind::Floor
        }
    }

    pub fn is_opaque(&self, c: Cell) -> bool {
        self.walls[c] || self.object_at[c].is_some()
    }

    pub fn walls(&self) -> &Mask {
        &self.walls
    }

    /// Walls and objects.
    pub fn blocked(&self) -> Mask {
        let mut m = self.walls.clone();
        for (b, o) in m.data_mut().iter_mut().zip(self.object_at.data()) {
            *b |= o.is_some();
        }
        m
    }

    pub fn category_index(&self, name: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == name)
    }

    /// Rendered label code of a cell.
    pub fn label_code(&self, c: Cell) -> u16 {
        match self.kind(c) {
            CellKind::Floor => LABEL_FLOOR,
            CellKind::Wall => LABEL_WALL,
            CellKind::Object(k) => {
                LABEL_OBJECT_BASE + self.category_index(&self.objects[k].category).expect("validated") as u16
            }
        }
    }

    /// Category name of a label code, if it denotes an object.
    pub fn label_category(&self, code: u16) -> Option<&str> {
        code.checked_sub(LABEL_OBJECT_BASE)
            .and_then(|k| self.categories.get(k as usize))
            .map(String::as_str)
    }

    /// Floor cells whose centers are farther than `radius` meters from every
    /// wall or object cell center.
    pub fn true_navigable(&self, radius: f64) -> Mask {
        let blocked = self.blocked();
        let inflated = dilate(&blocked, radius / self.cell_size);
        inflated.map(|b| !b)
    }

    pub fn instances_of<'a>(&'a self, category: &'a str) -> impl Iterator<Item = &'a ObjectInstance> + 'a {
        self.objects.iter().filter(move |o| o.category == category)
    }

    /// Distinct categories present, in declaration order.
    pub fn present_categories(&self) -> Vec<String> {
        self.categories
            .iter()
            .filter(|c| self.objects.iter().any(|o| &o.category == *c))
            .cloned()
            .collect()
    }

    /// Euclidean distance (meters) from a point to the nearest cell center of
    /// any instance of `category`.
    pub fn distance_to_category(&self, x: f64, y: f64, category: &str) -> Option<f64> {
        let grid = self.grid();
        self.instances_of(category)
            .flat_map(|o| o.cells.iter())
            .map(|&c| {
                let (cx, cy) = grid.center(c);
                (cx - x).hypot(cy - y)
            })
            .min_by(f64::total_cmp)
    }

    /// Checks structural invariants: border walls, object bookkeeping and at
    /// least one navigable cell at `agent_radius`.
    pub fn validate(&self, agent_radius: f64) -> Result<()> {
        let d = self.dims();
        for c in d.cells() {
            if (c.x == 0 || c.y == 0 || c.x + 1 == d.nx || c.y + 1 == d.ny) && !self.walls[c] {
                return Err(Error::Generation(format!("border cell ({}, {}) is open", c.x, c.y)));
            }
        }
        for (k, o) in self.objects.iter().enumerate() {
            if o.cells.is_empty() {
                return Err(Error::Generation(format!("object {k} has no cells")));
            }
            if o.cells.iter().any(|&c| self.kind(c) != CellKind::Object(k)) {
                return Err(Error::Generation(format!("object {k} cells are inconsistent")));
            }
            if o.room >= self.rooms.len() || !o.cells.iter().all(|&c| self.rooms[o.room].contains(c)) {
                return Err(Error::Generation(format!("object {k} is outside its room")));
            }
        }
        if !self.true_navigable(agent_radius).any() {
            return Err(Error::Generation("world has no navigable cell".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let d = self.dims();
        let rows = (0..d.ny)
            .rev()
            .map(|y| {
                (0..d.nx)
                    .map(|x| if self.walls[Cell::new(x, y)] { '#' } else { '.' })
                    .collect()
            })
            .collect();
        let file = WorldFile {
            seed: self.seed,
            cell_size: self.cell_size,
            nx: d.nx,
            ny: d.ny,
            categories: self.categories.clone(),
            rooms: self.rooms.clone(),
            objects: self.objects.clone(),
            rows,
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: WorldFile = serde_json::from_str(text)?;
        let dims = GridDims::new(file.nx, file.ny);
        if file.rows.len() != file.ny || file.rows.iter().any(|r| r.chars().count() != file.nx) {
            return Err(Error::Schema {
                record: 0,
                message: format!("wall rows do not form a {}x{} grid", file.nx, file.ny),
            });
        }
        let mut walls = Raster::filled(dims, false);
        for (r, row) in file.rows.iter().enumerate() {
            let y = file.ny - 1 - r;
            for (x, ch) in row.chars().enumerate() {
                walls[Cell::new(x, y)] = match ch {
                    '#' => true,
                    '.' => false,
                    other => {
                        return Err(Error::Schema {
                            record: 0,
                            message: format!("unexpected wall character {other:?}"),
                        })
                    }
                };
            }
        }
        World::new(file.seed, file.cell_size, file.categories, file.rooms, walls, file.objects)
    }
}
