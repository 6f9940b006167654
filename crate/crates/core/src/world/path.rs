//! A* on an 8-connected occupancy grid.
//!
//! Straight moves cost 1, diagonal moves √2, and a diagonal move is only
//! allowed when both orthogonal neighbours it passes between are walkable.
//! Open-set ties are broken by lower f, then lower h, then lower cell index.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::scene::Grid;
use crate::error::{Error, Result};

/// Grid cell as `(column, row)`.
pub type Cell = (usize, usize);

#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    /// Cells from start to goal inclusive.
    pub cells: Vec<Cell>,
    pub cost: f64,
}

impl GridPath {
    pub fn steps(&self) -> usize {
        self.cells.len().saturating_sub(1)
    }
}

pub fn octile(a: Cell, b: Cell) -> f64 {
    let dx = a.0.abs_diff(b.0) as f64;
    let dy = a.1.abs_diff(b.1) as f64;
    let (lo, hi) = if dx < dy { (dx, dy) } else { (dy, dx) };
    (hi - lo) + std::f64::consts::SQRT_2 * lo
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    h: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest path from `from` to `to`, or `None` when the goal is unreachable.
/// Both endpoints must be walkable cells.
pub fn plan_path(grid: &Grid, from: Cell, to: Cell) -> Result<Option<GridPath>> {
    for c in [from, to] {
        if !grid.is_walkable(c) {
            return Err(Error::Validation(format!(
                "path endpoint ({}, {}) is not a walkable cell",
                c.0, c.1
            )));
        }
    }
    let n = grid.width * grid.height;
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    let start = grid.index(from);
    let goal = grid.index(to);
    g[start] = 0.0;
    let h0 = octile(from, to);
    open.push(Open { f: h0, h: h0, idx: start });

    while let Some(Open { idx, .. }) = open.pop() {
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        if idx == goal {
            let mut cells = vec![grid.cell(idx)];
            let mut cur = idx;
            while cur != start {
                cur = parent[cur];
                cells.push(grid.cell(cur));
            }
            cells.reverse();
            return Ok(Some(GridPath { cells, cost: g[goal] }));
        }
        let here = grid.cell(idx);
        for (next, step) in grid.neighbors(here) {
            let ni = grid.index(next);
            if closed[ni] {
                continue;
            }
            let cand = g[idx] + step;
            if cand < g[ni] {
                g[ni] = cand;
                parent[ni] = idx;
                let h = octile(next, to);
                open.push(Open { f: cand + h, h, idx: ni });
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(rows: &[&str]) -> Grid {
        Grid::from_rows(rows, 1.0).unwrap()
    }

    #[test]
    fn straight_corridor() {
        let g = grid(&["......"]);
        // (0,0) -> (5,0) along the row
        let p = plan_path(&g, (0, 0), (5, 0)).unwrap().unwrap();
        assert_eq!(p.steps(), 5);
        assert_eq!(p.cost, 5.0);
        let g = grid(&[".", ".", ".", ".", ".", "."]);
        let p = plan_path(&g, (0, 0), (0, 5)).unwrap().unwrap();
        assert_eq!(p.steps(), 5);
        assert_eq!(p.cost, 5.0);
    }

    #[test]
    fn wall_forces_detour() {
        let g = grid(&[".....", "..#..", "..#..", "..#..", "....."]);
        let p = plan_path(&g, (0, 2), (4, 2)).unwrap().unwrap();
        // up to row 0 (1 + sqrt2), along it (2), back down (sqrt2 + 1); the wall
        // end blocks the diagonals next to it
        let expect = 4.0 + 2.0 * std::f64::consts::SQRT_2;
        assert!((p.cost - expect).abs() < 1e-12, "{}", p.cost);
        for c in &p.cells {
            assert!(g.is_walkable(*c));
        }
    }

    #[test]
    fn unreachable_is_none() {
        let g = grid(&["..#..", "..#..", "..#.."]);
        assert!(plan_path(&g, (0, 0), (4, 0)).unwrap().is_none());
    }

    #[test]
    fn no_corner_cutting() {
        let g = grid(&[".#", "#."]);
        assert!(plan_path(&g, (0, 0), (1, 1)).unwrap().is_none());
    }

    #[test]
    fn blocked_endpoint_is_error() {
        let g = grid(&[".#"]);
        assert!(plan_path(&g, (0, 0), (1, 0)).is_err());
    }

    #[test]
    fn trivial_path() {
        let g = grid(&["..."]);
        let p = plan_path(&g, (1, 0), (1, 0)).unwrap().unwrap();
        assert_eq!(p.cells, vec![(1, 0)]);
        assert_eq!(p.cost, 0.0);
    }
}
