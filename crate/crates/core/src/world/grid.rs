use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// Grid cell as `(x, y)`.
pub type Cell = (usize, usize);

/// Row-major occupancy grid; `(0, 0)` covers `[0, cell_size)²` in world meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    pub cell_size: f64,
    blocked: Vec<bool>,
}

impl Grid {
    pub fn new(width: usize, height: usize, cell_size: f64) -> Grid {
        Grid { width, height, cell_size, blocked: vec![false; width * height] }
    }

    pub fn with_blocked(width: usize, height: usize, cell_size: f64, blocked: &[Cell]) -> Option<Grid> {
        let mut g = Grid::new(width, height, cell_size);
        for &c in blocked {
            if !g.in_bounds(c) {
                return None;
            }
            g.set_blocked(c, true);
        }
        Some(g)
    }

    pub fn in_bounds(&self, (x, y): Cell) -> bool {
        x < self.width && y < self.height
    }

    pub fn is_blocked(&self, c: Cell) -> bool {
        self.blocked[c.1 * self.width + c.0]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.is_blocked(c)
    }

    pub fn set_blocked(&mut self, c: Cell, on: bool) {
        let w = self.width;
        self.blocked[c.1 * w + c.0] = on;
    }

    pub fn blocked_cells(&self) -> Vec<Cell> {
        (0..self.height)
            .flat_map(|y| (0..self.width).map(move |x| (x, y)))
            .filter(|&c| self.is_blocked(c))
            .collect()
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<Cell> {
        if x < 0.0 || y < 0.0 {
            return None;
        }
        let c = ((x / self.cell_size) as usize, (y / self.cell_size) as usize);
        self.in_bounds(c).then_some(c)
    }

    /// Cell containing `(x, y)` after clamping the point into the grid.
    pub fn nearest_cell(&self, x: f64, y: f64) -> Cell {
        let clamp = |v: f64, n: usize| ((v / self.cell_size).floor().max(0.0) as usize).min(n - 1);
        (clamp(x, self.width), clamp(y, self.height))
    }

    pub fn center(&self, (x, y): Cell) -> [f64; 2] {
        [(x as f64 + 0.5) * self.cell_size, (y as f64 + 0.5) * self.cell_size]
    }

    pub fn extent(&self) -> [f64; 2] {
        [self.width as f64 * self.cell_size, self.height as f64 * self.cell_size]
    }

    /// In-bounds 4-neighbors in the order +x, -x, +y, -y.
    pub fn neighbors(&self, (x, y): Cell) -> impl Iterator<Item = Cell> + '_ {
        let cand = [
            (x.checked_add(1), Some(y)),
            (x.checked_sub(1), Some(y)),
            (Some(x), y.checked_add(1)),
            (Some(x), y.checked_sub(1)),
        ];
        cand.into_iter().filter_map(|(a, b)| Some((a?, b?))).filter(|&c| self.in_bounds(c))
    }

    /// Shortest 4-connected path through free cells, excluding `start`.
    /// `Some(vec![])` when already at the goal.
    pub fn plan_path(&self, start: Cell, goal: Cell) -> Option<Vec<Cell>> {
        if !self.is_free(goal) || !self.in_bounds(start) {
            return None;
        }
        let (mut path, _) = pathfinding::directed::astar::astar(
            &start,
            |&c| self.neighbors(c).filter(|&n| !self.is_blocked(n)).map(|n| (n, 1usize)).collect::<Vec<_>>(),
            |&(x, y)| x.abs_diff(goal.0) + y.abs_diff(goal.1),
            |&c| c == goal,
        )?;
        path.remove(0);
        Some(path)
    }

    /// Breadth-first step counts from `start` through free cells.
    pub fn bfs_distances(&self, start: Cell) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.width * self.height];
        if !self.in_bounds(start) {
            return dist;
        }
        dist[start.1 * self.width + start.0] = Some(0);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            let d = dist[c.1 * self.width + c.0].unwrap();
            for n in self.neighbors(c) {
                let slot = &mut dist[n.1 * self.width + n.0];
                if slot.is_none() && !self.is_blocked(n) {
                    *slot = Some(d + 1);
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    pub fn distance(dist: &[Option<usize>], width: usize, c: Cell) -> Option<usize> {
        dist[c.1 * width + c.0]
    }

    /// Cells strictly between `a` and `b` crossed by the segment joining their
    /// centers. Exact corner crossings step diagonally.
    pub fn ray_cells(&self, a: Cell, b: Cell) -> Vec<Cell> {
        let (dx, dy) = (b.0 as i64 - a.0 as i64, b.1 as i64 - a.1 as i64);
        let (nx, ny) = (dx.abs(), dy.abs());
        let (sx, sy) = (dx.signum(), dy.signum());
        let (mut x, mut y) = (a.0 as i64, a.1 as i64);
        let (mut i, mut j) = (0i64, 0i64);
        let mut out = Vec::new();
        // boundary crossings at t = (2i+1)/(2nx) and (2j+1)/(2ny), compared exactly
        while i < nx || j < ny {
            let step_x = i < nx && (j >= ny || (2 * i + 1) * ny <= (2 * j + 1) * nx);
            let step_y = j < ny && (i >= nx || (2 * j + 1) * nx <= (2 * i + 1) * ny);
            if step_x {
                x += sx;
                i += 1;
            }
            if step_y {
                y += sy;
                j += 1;
            }
            if (x, y) != (b.0 as i64, b.1 as i64) {
                out.push((x as usize, y as usize));
            }
        }
        out
    }

    pub fn line_of_sight(&self, a: Cell, b: Cell) -> bool {
        self.ray_cells(a, b).into_iter().all(|c| !self.is_blocked(c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_to_self_is_empty() {
        let g = Grid::new(5, 5, 0.5);
        assert_eq!(g.plan_path((2, 2), (2, 2)), Some(vec![]));
    }

    #[test]
    fn walled_goal_is_unreachable() {
        let walls = [(1, 0), (1, 1), (1, 2), (0, 2)];
        let g = Grid::with_blocked(4, 4, 0.5, &walls).unwrap();
        assert_eq!(g.plan_path((3, 3), (0, 0)), None);
        assert!(g.plan_path((3, 3), (1, 1)).is_none());
    }

    #[test]
    fn straight_ray() {
        let g = Grid::new(6, 3, 1.0);
        assert_eq!(g.ray_cells((0, 1), (4, 1)), vec![(1, 1), (2, 1), (3, 1)]);
        assert_eq!(g.ray_cells((2, 2), (2, 2)), vec![]);
    }

    #[test]
    fn diagonal_ray_passes_corners() {
        let g = Grid::new(4, 4, 1.0);
        assert_eq!(g.ray_cells((0, 0), (3, 3)), vec![(1, 1), (2, 2)]);
    }

    #[test]
    fn cell_lookup() {
        let g = Grid::new(4, 2, 0.5);
        assert_eq!(g.cell_of(1.74, 0.9), Some((3, 1)));
        assert_eq!(g.cell_of(2.0, 0.1), None);
        assert_eq!(g.nearest_cell(2.0, -0.3), (3, 0));
        assert_eq!(g.center((1, 0)), [0.75, 0.25]);
    }
}
