use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use skyweave_fltl::FluentDef;
use skyweave_lts::grid::{grid_adjacency, movement_lts};
use skyweave_lts::{Label, Lts};

use crate::geom::{Point, Polygon, Rect};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("degenerate bounds or cell size")]
    DegenerateBounds,
    #[error("region {0} names cell {1}, which is not on the grid")]
    RegionOutOfRange(String, u32),
    #[error("initial cell {0} is not on the grid")]
    BadInitial(u32),
}

/// A rectangular grid of square cells with row-major ids, rotated by
/// `angle` degrees about `origin`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub origin: Point,
    pub cell_size: f64,
    pub rows: u32,
    pub cols: u32,
    #[serde(default)]
    pub angle: f64,
    #[serde(default)]
    pub regions: BTreeMap<String, BTreeSet<u32>>,
}

impl Grid {
    pub fn new(origin: Point, cell_size: f64, rows: u32, cols: u32, angle: f64) -> Result<Grid, GridError> {
        if !(cell_size > 0.0) || rows == 0 || cols == 0 {
            return Err(GridError::DegenerateBounds);
        }
        Ok(Grid { origin, cell_size, rows, cols, angle, regions: BTreeMap::new() })
    }

    pub fn with_region(mut self, name: &str, cells: impl IntoIterator<Item = u32>) -> Result<Grid, GridError> {
        let cells: BTreeSet<u32> = cells.into_iter().collect();
        if let Some(&c) = cells.iter().find(|&&c| c >= self.num_cells()) {
            return Err(GridError::RegionOutOfRange(name.to_string(), c));
        }
        self.regions.insert(name.to_string(), cells);
        Ok(self)
    }

    pub fn num_cells(&self) -> u32 {
        self.rows * self.cols
    }

    pub fn arrival_threshold(&self) -> f64 {
        self.cell_size / 4.0
    }

    pub fn centre(&self, id: u32) -> Point {
        let (r, c) = (id / self.cols, id % self.cols);
        let local = Point::new((c as f64 + 0.5) * self.cell_size, (r as f64 + 0.5) * self.cell_size);
        let p = local.rotate(self.angle);
        Point::new(self.origin.x + p.x, self.origin.y + p.y)
    }

    pub fn cell_of(&self, p: Point) -> Option<u32> {
        let local = Point::new(p.x - self.origin.x, p.y - self.origin.y).rotate(-self.angle);
        let c = (local.x / self.cell_size).floor();
        let r = (local.y / self.cell_size).floor();
        if c < 0.0 || r < 0.0 || c >= self.cols as f64 || r >= self.rows as f64 {
            return None;
        }
        Some(r as u32 * self.cols + c as u32)
    }

    pub fn neighbours(&self, id: u32) -> Vec<u32> {
        let (r, c) = (id / self.cols, id % self.cols);
        let mut out = Vec::with_capacity(4);
        if r > 0 {
            out.push(id - self.cols);
        }
        if c > 0 {
            out.push(id - 1);
        }
        if c + 1 < self.cols {
            out.push(id + 1);
        }
        if r + 1 < self.rows {
            out.push(id + self.cols);
        }
        out
    }

    pub fn region(&self, name: &str) -> Option<&BTreeSet<u32>> {
        self.regions.get(name)
    }

    /// Movement LTS with `go.i`/`at.i` pairs between 4-adjacent cells.
    pub fn adjacency_lts(&self, initial: u32) -> Lts {
        let cells: Vec<u32> = (0..self.num_cells()).collect();
        movement_lts(&cells, &grid_adjacency(self.rows, self.cols, &BTreeSet::new()), initial)
    }

    /// `at<i>` for every cell and `at<Region>` for every region, each
    /// cleared by arrival anywhere else.
    pub fn fluents(&self, initial: u32) -> Vec<FluentDef> {
        let at = |i: u32| Label::new(&format!("at.{i}")).expect("label");
        let all: BTreeSet<u32> = (0..self.num_cells()).collect();
        let def = |name: String, cells: &BTreeSet<u32>| {
            FluentDef::new(name, cells.iter().map(|&i| at(i)), all.difference(cells).map(|&i| at(i)), cells.contains(&initial))
                .expect("disjoint sets")
        };
        let mut out: Vec<FluentDef> = all.iter().map(|&i| def(format!("at{i}"), &BTreeSet::from([i]))).collect();
        out.extend(self.regions.iter().map(|(n, cells)| def(format!("at{n}"), cells)));
        out
    }
}

/// Result of discretising a workspace.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub grid: Grid,
    pub adjacency: Lts,
    pub fluents: Vec<FluentDef>,
    /// Centre of each cell, by id.
    pub coords: Vec<Point>,
}

/// Covers `bounds` with cells of side `cell_size`, rotated by `angle` about
/// the lower corner. A cell belongs to a region iff its centre lies inside
/// the region's polygon.
pub fn discretize(
    bounds: Rect,
    cell_size: f64,
    angle: f64,
    regions: &[(String, Polygon)],
    initial: u32,
) -> Result<Discretization, GridError> {
    if !(cell_size > 0.0) || !(bounds.width() > 0.0) || !(bounds.height() > 0.0) {
        return Err(GridError::DegenerateBounds);
    }
    let cols = (bounds.width() / cell_size).ceil() as u32;
    let rows = (bounds.height() / cell_size).ceil() as u32;
    let mut grid = Grid::new(bounds.min, cell_size, rows, cols, angle)?;
    if initial >= grid.num_cells() {
        return Err(GridError::BadInitial(initial));
    }
    let coords: Vec<Point> = (0..grid.num_cells()).map(|i| grid.centre(i)).collect();
    for (name, poly) in regions {
        let cells = (0..grid.num_cells()).filter(|&i| poly.contains(coords[i as usize]));
        grid = grid.with_region(name, cells)?;
    }
    Ok(Discretization { adjacency: grid.adjacency_lts(initial), fluents: grid.fluents(initial), grid, coords })
}
