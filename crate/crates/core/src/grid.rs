//! Uniform cell-centered grid on the rectangle `(0, Lx) x (0, Ly)` with
//! per-wall boundary conditions and the ghost-cell closure for the nonlinear
//! Robin condition `(nu . grad) u = sigma'(u) / eps` (inward normal).

use crate::error::Error;
use crate::field::Field;
use crate::potentials::BoundaryEnergy;
use crate::Result;

/// One of the four container walls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wall {
    Left,
    Right,
    Bottom,
    Top,
}

impl Wall {
    pub const ALL: [Wall; 4] = [Wall::Left, Wall::Right, Wall::Bottom, Wall::Top];

    /// Inward-pointing unit normal.
    pub fn inward_normal(&self) -> [f64; 2] {
        match self {
            Wall::Left => [1.0, 0.0],
            Wall::Right => [-1.0, 0.0],
            Wall::Bottom => [0.0, 1.0],
            Wall::Top => [0.0, -1.0],
        }
    }
}

/// Boundary condition attached to a wall.
#[derive(Debug, Clone, Copy)]
pub enum WallCondition {
    /// Zero-flux mirror closure.
    Neumann,
    /// Contact energy with the given boundary density.
    Contact(BoundaryEnergy),
}

impl WallCondition {
    pub fn boundary_energy(&self) -> Option<&BoundaryEnergy> {
        match self {
            WallCondition::Neumann => None,
            WallCondition::Contact(b) => Some(b),
        }
    }

    /// `cos(alpha)` of the wall: zero for Neumann walls.
    pub fn cos_alpha(&self) -> f64 {
        match self {
            WallCondition::Neumann => 0.0,
            WallCondition::Contact(b) => b.cos_alpha(),
        }
    }
}

/// The four wall conditions.
#[derive(Debug, Clone, Copy)]
pub struct WallSpecs {
    pub left: WallCondition,
    pub right: WallCondition,
    pub bottom: WallCondition,
    pub top: WallCondition,
}

impl WallSpecs {
    pub fn all_neumann() -> Self {
        WallSpecs {
            left: WallCondition::Neumann,
            right: WallCondition::Neumann,
            bottom: WallCondition::Neumann,
            top: WallCondition::Neumann,
        }
    }

    pub fn get(&self, wall: Wall) -> &WallCondition {
        match wall {
            Wall::Left => &self.left,
            Wall::Right => &self.right,
            Wall::Bottom => &self.bottom,
            Wall::Top => &self.top,
        }
    }
}

/// Uniform cell-centered grid; cell `(i, j)` has center
/// `((i + 1/2) h, (j + 1/2) h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

/// Minimum cell count per direction.
pub const MIN_CELLS: usize = 8;

impl Grid {
    /// Builds the grid from extents and spacing; `h` must divide both extents
    /// to within `1e-9` relative.
    pub fn build(lx: f64, ly: f64, h: f64) -> Result<Grid> {
        if !(lx > 0.0 && ly > 0.0 && h > 0.0) {
            return Err(Error::Grid(format!(
                "degenerate domain: lx={lx}, ly={ly}, h={h}"
            )));
        }
        let nxf = lx / h;
        let nyf = ly / h;
        let nx = nxf.round() as usize;
        let ny = nyf.round() as usize;
        if nx == 0 || (nxf - nx as f64).abs() > 1e-9 * nxf.max(1.0) {
            return Err(Error::Grid(format!("h={h} does not divide lx={lx}")));
        }
        if ny == 0 || (nyf - ny as f64).abs() > 1e-9 * nyf.max(1.0) {
            return Err(Error::Grid(format!("h={h} does not divide ly={ly}")));
        }
        if nx < MIN_CELLS || ny < MIN_CELLS {
            return Err(Error::Grid(format!(
                "grid too coarse: {nx} x {ny} cells (minimum {MIN_CELLS})"
            )));
        }
        Ok(Grid { nx, ny, h })
    }

    pub fn lx(&self) -> f64 {
        self.nx as f64 * self.h
    }

    pub fn ly(&self) -> f64 {
        self.ny as f64 * self.h
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> [f64; 2] {
        [(i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h]
    }

    /// Number of boundary faces along a wall.
    pub fn wall_faces(&self, wall: Wall) -> usize {
        match wall {
            Wall::Left | Wall::Right => self.ny,
            Wall::Bottom | Wall::Top => self.nx,
        }
    }

    /// Cell indices of the two cells nearest to face `k` of a wall, in
    /// increasing distance from the wall.
    pub fn wall_cells(&self, wall: Wall, k: usize) -> [(usize, usize); 2] {
        match wall {
            Wall::Left => [(0, k), (1, k)],
            Wall::Right => [(self.nx - 1, k), (self.nx - 2, k)],
            Wall::Bottom => [(k, 0), (k, 1)],
            Wall::Top => [(k, self.ny - 1), (k, self.ny - 2)],
        }
    }

    /// Midpoint of boundary face `k` on a wall (on the physical boundary).
    pub fn wall_face_center(&self, wall: Wall, k: usize) -> [f64; 2] {
        let s = (k as f64 + 0.5) * self.h;
        match wall {
            Wall::Left => [0.0, s],
            Wall::Right => [self.lx(), s],
            Wall::Bottom => [s, 0.0],
            Wall::Top => [s, self.ly()],
        }
    }

    /// Second-order boundary trace: one-sided linear extrapolation from the
    /// two nearest interior cells, `(3 u0 - u1) / 2`.
    pub fn trace(&self, u: &Field, wall: Wall, k: usize) -> f64 {
        let [(i0, j0), (i1, j1)] = self.wall_cells(wall, k);
        1.5 * u.at(i0, j0) - 0.5 * u.at(i1, j1)
    }

    /// First-order boundary trace: the adjacent cell value. This is the trace
    /// the energy-stable solver couples to (see `solver`).
    pub fn trace_adjacent(&self, u: &Field, wall: Wall, k: usize) -> f64 {
        let [(i0, j0), _] = self.wall_cells(wall, k);
        u.at(i0, j0)
    }
}

/// Ghost-cell value closing the 5-point Laplacian across a wall so that the
/// discrete inward normal derivative equals `sigma'(u_prev_boundary) / eps`:
/// `(u_in - u_ghost) / h = sigma'/eps`. Neumann walls mirror: `u_ghost = u_in`.
pub fn ghost_value(
    u_in: f64,
    wall: &WallCondition,
    eps: f64,
    h: f64,
    u_prev_boundary: f64,
) -> f64 {
    match wall {
        WallCondition::Neumann => u_in,
        WallCondition::Contact(b) => u_in - (h / eps) * b.sigma_prime(u_prev_boundary),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn build_grid_examples() {
        let g = Grid::build(1.0, 1.0, 1.0 / 64.0).unwrap();
        assert_eq!((g.nx, g.ny), (64, 64));
        let g = Grid::build(1.0, 2.0, 1.0 / 32.0).unwrap();
        assert_eq!((g.nx, g.ny), (32, 64));
        assert!(Grid::build(1.0, 1.0, 0.3).is_err());
        assert!(Grid::build(0.0, 1.0, 0.1).is_err());
        assert!(Grid::build(0.5, 0.5, 0.125).is_err()); // 4x4: too coarse
    }

    #[test]
    fn cell_centers() {
        let g = Grid::build(1.0, 1.0, 0.125).unwrap();
        assert_eq!(g.center(0, 0), [0.0625, 0.0625]);
        assert_eq!(g.center(7, 7), [0.9375, 0.9375]);
    }

    #[test]
    fn ghost_values() {
        // Neumann mirror
        assert_eq!(ghost_value(0.3, &WallCondition::Neumann, 0.1, 0.01, 0.7), 0.3);
        // sigma'(1) = 0: ghost equals the interior value
        let b = BoundaryEnergy::new(PI / 3.0).unwrap();
        let w = WallCondition::Contact(b);
        assert_eq!(ghost_value(0.3, &w, 0.1, 0.01, 1.0), 0.3);
        // sigma'(0) = cos(pi/3) = 1/2: u_ghost = u_in - (h/eps) * 1/2
        let g = ghost_value(0.42, &w, 0.1, 0.01, 0.0);
        assert_abs_diff_eq!(g, 0.42 - 0.05, epsilon = 1e-15);
    }

    #[test]
    fn traces() {
        let g = Grid::build(1.0, 1.0, 0.125).unwrap();
        // linear profile u = x: the extrapolated trace is exact at the wall
        let u = Field::from_fn(g.nx, g.ny, |i, j| g.center(i, j)[0]);
        assert_abs_diff_eq!(g.trace(&u, Wall::Left, 3), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.trace(&u, Wall::Right, 3), 1.0, epsilon = 1e-15);
        let v = Field::from_fn(g.nx, g.ny, |i, j| g.center(i, j)[1]);
        assert_abs_diff_eq!(g.trace(&v, Wall::Bottom, 5), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.trace(&v, Wall::Top, 5), 1.0, epsilon = 1e-15);
    }
}
