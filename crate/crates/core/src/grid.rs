//! Uniform node-centered grid on a rectangle and its closed perimeter ring.

use crate::error::{Error, Result};

/// Minimum node count per axis. The one-sided normal stencils reach two layers
/// inward from the boundary.
pub const MIN_NODES: usize = 5;

/// Relative tolerance for the square-cell check.
const SQUARE_CELL_RTOL: f64 = 1e-12;

/// Outward normal of a boundary node, or `Corner` where two edges meet.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
    Corner,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
    pub extent: [f64; 2],
    /// Node indices of the boundary, counterclockwise from the origin corner.
    /// The ring is closed: the last entry neighbors the first.
    pub perimeter: Vec<usize>,
    ring_pos: Vec<Option<usize>>,
    interior: Vec<usize>,
    interior_pos: Vec<Option<usize>>,
}

/// Builds a grid with `nx * ny` nodes covering `origin .. origin + extent`.
pub fn build_grid(nx: usize, ny: usize, origin: [f64; 2], extent: [f64; 2]) -> Result<Grid> {
    if nx < MIN_NODES || ny < MIN_NODES {
        return Err(Error::InvalidGrid(format!(
            "need at least {MIN_NODES} nodes per axis, got {nx}x{ny}"
        )));
    }
    if !(extent[0] > 0.0 && extent[1] > 0.0) || !extent.iter().chain(&origin).all(|v| v.is_finite()) {
        return Err(Error::InvalidGrid(format!(
            "extent must be positive and finite, got {extent:?}"
        )));
    }
    let hx = extent[0] / (nx - 1) as f64;
    let hy = extent[1] / (ny - 1) as f64;
    if (hx - hy).abs() > SQUARE_CELL_RTOL * hx.max(hy) {
        return Err(Error::InvalidGrid(format!(
            "cells must be square: hx = {hx}, hy = {hy}"
        )));
    }

    let idx = |i: usize, j: usize| j * nx + i;
    let mut perimeter = Vec::with_capacity(2 * (nx - 1) + 2 * (ny - 1));
    for i in 0..nx - 1 {
        perimeter.push(idx(i, 0));
    }
    for j in 0..ny - 1 {
        perimeter.push(idx(nx - 1, j));
    }
    for i in (1..nx).rev() {
        perimeter.push(idx(i, ny - 1));
    }
    for j in (1..ny).rev() {
        perimeter.push(idx(0, j));
    }

    let n = nx * ny;
    let mut ring_pos = vec![None; n];
    for (k, &node) in perimeter.iter().enumerate() {
        ring_pos[node] = Some(k);
    }
    let interior: Vec<usize> = (0..n).filter(|&p| ring_pos[p].is_none()).collect();
    let mut interior_pos = vec![None; n];
    for (k, &node) in interior.iter().enumerate() {
        interior_pos[node] = Some(k);
    }

    Ok(Grid {
        nx,
        ny,
        h: hx,
        origin,
        extent,
        perimeter,
        ring_pos,
        interior,
        interior_pos,
    })
}

impl Grid {
    /// Unit square with `n` nodes per side.
    pub fn unit_square(n: usize) -> Result<Grid> {
        build_grid(n, n, [0.0, 0.0], [1.0, 1.0])
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn coords(&self, node: usize) -> (usize, usize) {
        (node % self.nx, node / self.nx)
    }

    pub fn position(&self, node: usize) -> [f64; 2] {
        let (i, j) = self.coords(node);
        [
            self.origin[0] + self.extent[0] * (i as f64 / (self.nx - 1) as f64),
            self.origin[1] + self.extent[1] * (j as f64 / (self.ny - 1) as f64),
        ]
    }

    pub fn ring_len(&self) -> usize {
        self.perimeter.len()
    }

    /// Position of `node` in the perimeter ring, if it is a boundary node.
    #[inline]
    pub fn ring_index(&self, node: usize) -> Option<usize> {
        self.ring_pos[node]
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.ring_pos[node].is_some()
    }

    /// Interior node indices in increasing order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    #[inline]
    pub fn interior_index(&self, node: usize) -> Option<usize> {
        self.interior_pos[node]
    }

    pub fn ring_next(&self, k: usize) -> usize {
        (k + 1) % self.perimeter.len()
    }

    pub fn ring_prev(&self, k: usize) -> usize {
        (k + self.perimeter.len() - 1) % self.perimeter.len()
    }

    /// Grid neighbors of `node` (2 to 4 of them).
    pub fn neighbors(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = self.coords(node);
        let nx = self.nx;
        let ny = self.ny;
        [
            (i > 0).then(|| node - 1),
            (i + 1 < nx).then(|| node + 1),
            (j > 0).then(|| node - nx),
            (j + 1 < ny).then(|| node + nx),
        ]
        .into_iter()
        .flatten()
    }

    pub fn side(&self, node: usize) -> Option<Side> {
        let (i, j) = self.coords(node);
        let left = i == 0;
        let right = i == self.nx - 1;
        let bottom = j == 0;
        let top = j == self.ny - 1;
        match (left || right, bottom || top) {
            (true, true) => Some(Side::Corner),
            (false, false) => None,
            _ if bottom => Some(Side::Bottom),
            _ if top => Some(Side::Top),
            _ if left => Some(Side::Left),
            _ => Some(Side::Right),
        }
    }

    /// Bulk and surface quadrature weights: `h^2` at every node and `h` at every
    /// perimeter node, corners included.
    pub fn quadrature_weights(&self) -> (Vec<f64>, Vec<f64>) {
        (
            vec![self.h * self.h; self.len()],
            vec![self.h; self.ring_len()],
        )
    }

    pub fn perimeter_length(&self) -> f64 {
        2.0 * (self.extent[0] + self.extent[1])
    }

    pub(crate) fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                actual: values.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_ring_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.ring_len() {
            return Err(Error::SizeMismatch {
                expected: self.ring_len(),
                actual: values.len(),
            });
        }
        Ok(())
    }
}

/// Free-function form of [`Grid::quadrature_weights`].
pub fn quadrature_weights(grid: &Grid) -> (Vec<f64>, Vec<f64>) {
    grid.quadrature_weights()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_by_five_unit_square() {
        let g = Grid::unit_square(5).unwrap();
        assert_eq!(g.h, 0.25);
        assert_eq!(g.perimeter.len(), 16);
        assert_eq!(g.interior().len(), 9);
        assert_eq!(g.perimeter[0], 0);
    }

    #[test]
    fn fine_resolution() {
        let g = Grid::unit_square(101).unwrap();
        assert!((g.h - 0.01).abs() < 1e-15);
        assert_eq!(g.perimeter.len(), 400);
    }

    #[test]
    fn rejects_shallow_grids() {
        assert!(matches!(
            build_grid(4, 5, [0.0, 0.0], [0.75, 1.0]),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn rejects_rectangular_cells() {
        assert!(build_grid(5, 5, [0.0, 0.0], [1.0, 2.0]).is_err());
        assert!(build_grid(5, 9, [0.0, 0.0], [1.0, 2.0]).is_ok());
    }

    #[test]
    fn ring_is_closed_adjacent_and_counterclockwise() {
        for (nx, ny) in [(5, 5), (7, 5), (6, 11)] {
            let g = build_grid(nx, ny, [0.0, 0.0], [(nx - 1) as f64, (ny - 1) as f64]).unwrap();
            let m = g.ring_len();
            assert_eq!(m, 2 * (nx - 1) + 2 * (ny - 1));
            let mut seen = vec![false; g.len()];
            for k in 0..m {
                let a = g.perimeter[k];
                let b = g.perimeter[g.ring_next(k)];
                assert!(g.is_boundary(a));
                assert!(!seen[a]);
                seen[a] = true;
                assert!(g.neighbors(a).any(|q| q == b), "{a} -> {b} not adjacent");
            }
            // second entry moves along +x from the origin corner
            assert_eq!(g.perimeter[1], 1);
            // signed area of the ring polygon is positive
            let area: f64 = (0..m)
                .map(|k| {
                    let p = g.position(g.perimeter[k]);
                    let q = g.position(g.perimeter[g.ring_next(k)]);
                    p[0] * q[1] - q[0] * p[1]
                })
                .sum();
            assert!(area > 0.0);
        }
    }

    #[test]
    fn quadrature_sums() {
        let g = Grid::unit_square(5).unwrap();
        let (b, s) = g.quadrature_weights();
        assert!((b.iter().sum::<f64>() - 1.5625).abs() < 1e-15);
        assert!((s.iter().sum::<f64>() - 4.0).abs() < 1e-15);
        let g = Grid::unit_square(101).unwrap();
        let (_, s) = quadrature_weights(&g);
        assert!((s.iter().sum::<f64>() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sides() {
        let g = Grid::unit_square(5).unwrap();
        assert_eq!(g.side(0), Some(Side::Corner));
        assert_eq!(g.side(2), Some(Side::Bottom));
        assert_eq!(g.side(g.index(4, 2)), Some(Side::Right));
        assert_eq!(g.side(g.index(2, 4)), Some(Side::Top));
        assert_eq!(g.side(g.index(0, 2)), Some(Side::Left));
        assert_eq!(g.side(g.index(2, 2)), None);
    }
}
