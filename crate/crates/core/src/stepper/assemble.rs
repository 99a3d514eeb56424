//! Assembly of the coupled linear system solved once per time step.
//!
//! Unknowns, in this fixed order:
//!
//! | block      | size         | content                             |
//! |------------|--------------|-------------------------------------|
//! | `phi_int`  | `n_interior` | `phi` at interior nodes, ascending  |
//! | `psi`      | `n_ring`     | trace at perimeter nodes, ring order|
//! | `mu`       | `n_nodes`    | bulk chemical potential, all nodes  |
//! | `mu_gamma` | `n_ring`     | surface chemical potential          |
//!
//! Row block `k` carries the equation whose diagonal entry sits on unknown
//! block `k`:
//!
//! * `phi_int`: `phi/tau - L mu = phi_old/tau` with `L` the zero-flux Laplacian.
//! * `psi`: `psi/tau - Lap_ring mu_gamma = psi_old/tau`.
//! * `mu` at interior nodes:
//!   `mu + eps Lap5 phi - s1 phi = F'(phi_old)/eps - s1 phi_old`, where `Lap5`
//!   reads the `psi` unknowns next to the boundary.
//! * `mu` at boundary nodes: one-sided `d mu / dn = 0`.
//! * `mu_gamma`: `mu_gamma + delta kappa Lap_ring psi - eps Dn phi - s2 psi
//!   = G'(psi_old)/delta - s2 psi_old`, with `Dn` the energy-conjugate boundary
//!   flux of [`crate::operators::energy_normal_derivative`].

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::operators::{
    bulk_laplacian_neumann_stencil, bulk_laplacian_stencil, energy_normal_derivative_stencil,
    normal_derivative_stencil, surface_laplacian_stencil,
};
use crate::params::Params;
use crate::state::State;

/// Offsets of the unknown blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub n_interior: usize,
    pub n_ring: usize,
    pub n_nodes: usize,
}

impl Layout {
    pub fn new(grid: &Grid) -> Self {
        Layout {
            n_interior: grid.interior().len(),
            n_ring: grid.ring_len(),
            n_nodes: grid.len(),
        }
    }

    pub fn psi(&self) -> usize {
        self.n_interior
    }

    pub fn mu(&self) -> usize {
        self.n_interior + self.n_ring
    }

    pub fn mu_gamma(&self) -> usize {
        self.n_interior + self.n_ring + self.n_nodes
    }

    pub fn size(&self) -> usize {
        self.n_interior + 2 * self.n_ring + self.n_nodes
    }

    /// Column of the `phi`/`psi` unknown sitting on grid node `p`.
    pub fn phi_column(&self, grid: &Grid, p: usize) -> usize {
        match grid.interior_index(p) {
            Some(r) => r,
            None => self.psi() + grid.ring_index(p).expect("node is on the ring"),
        }
    }

    /// Packs a state into an unknown vector.
    pub fn pack(&self, grid: &Grid, state: &State) -> Vec<f64> {
        let mut x = vec![0.0; self.size()];
        for (r, &p) in grid.interior().iter().enumerate() {
            x[r] = state.phi[p];
        }
        for (k, &p) in grid.perimeter.iter().enumerate() {
            x[self.psi() + k] = state.phi[p];
            x[self.mu_gamma() + k] = state.mu_gamma[k];
        }
        x[self.mu()..self.mu() + self.n_nodes].copy_from_slice(&state.mu);
        x
    }

    /// Unpacks an unknown vector into the fields of `state`.
    pub fn unpack_into(&self, grid: &Grid, x: &[f64], state: &mut State) {
        for (r, &p) in grid.interior().iter().enumerate() {
            state.phi[p] = x[r];
        }
        for (k, &p) in grid.perimeter.iter().enumerate() {
            state.phi[p] = x[self.psi() + k];
            state.mu_gamma[k] = x[self.mu_gamma() + k];
        }
        state
            .mu
            .copy_from_slice(&x[self.mu()..self.mu() + self.n_nodes]);
    }
}

/// Square sparse matrix in compressed-row form with sorted, merged columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from per-row entry lists; duplicate columns are summed and exact
    /// zeros produced by cancellation are kept as structural entries.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut last: Option<usize> = None;
            for (c, v) in row {
                if last == Some(c) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows((0..n).map(|i| vec![(i, 1.0)]).collect())
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).map(|(c, a)| a * x[c]).sum())
            .collect()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn vals(&self) -> &[f64] {
        &self.vals
    }

    pub fn vals_mut(&mut self) -> &mut [f64] {
        &mut self.vals
    }

    /// Index of the first row that has no nonzero entry.
    pub fn first_zero_row(&self) -> Option<usize> {
        (0..self.n).find(|&i| self.row(i).all(|(_, v)| v == 0.0))
    }
}

/// Matrix and right-hand side for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSystem {
    pub layout: Layout,
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
}

/// The system matrix. It depends on the grid and the parameters only.
pub fn assemble_matrix(grid: &Grid, params: &Params) -> SparseMatrix {
    let lay = Layout::new(grid);
    let inv_tau = 1.0 / params.tau;
    let eps = params.epsilon;
    let dk = params.delta * params.kappa;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lay.size()];

    let lap_mobility = bulk_laplacian_neumann_stencil(grid);
    let lap5 = bulk_laplacian_stencil(grid);
    let closure = normal_derivative_stencil(grid);
    let lap_ring = surface_laplacian_stencil(grid);
    let flux = energy_normal_derivative_stencil(grid);

    for (r, &p) in grid.interior().iter().enumerate() {
        let row = &mut rows[r];
        row.push((r, inv_tau));
        row.extend(lap_mobility.rows[r].iter().map(|&(q, a)| (lay.mu() + q, -a)));

        let row = &mut rows[lay.mu() + p];
        row.push((lay.mu() + p, 1.0));
        row.push((r, -params.s1));
        row.extend(lap5.rows[r].iter().map(|&(q, a)| (lay.phi_column(grid, q), eps * a)));
    }

    for (k, &b) in grid.perimeter.iter().enumerate() {
        let row = &mut rows[lay.psi() + k];
        row.push((lay.psi() + k, inv_tau));
        row.extend(lap_ring.rows[k].iter().map(|&(j, a)| (lay.mu_gamma() + j, -a)));

        rows[lay.mu() + b].extend(closure.rows[k].iter().map(|&(q, a)| (lay.mu() + q, a)));

        let row = &mut rows[lay.mu_gamma() + k];
        row.push((lay.mu_gamma() + k, 1.0));
        row.push((lay.psi() + k, -params.s2));
        if dk != 0.0 {
            row.extend(lap_ring.rows[k].iter().map(|&(j, a)| (lay.psi() + j, dk * a)));
        }
        row.extend(flux.rows[k].iter().map(|&(q, a)| (lay.phi_column(grid, q), -eps * a)));
    }

    SparseMatrix::from_rows(rows)
}

/// The right-hand side built from the previous time level.
pub fn assemble_rhs(state: &State, params: &Params, grid: &Grid) -> Result<Vec<f64>> {
    state.check(grid)?;
    let lay = Layout::new(grid);
    let inv_tau = 1.0 / params.tau;
    let mut b = vec![0.0; lay.size()];
    for (r, &p) in grid.interior().iter().enumerate() {
        let phi = state.phi[p];
        b[r] = phi * inv_tau;
        b[lay.mu() + p] = params.bulk_potential.derivative(phi) / params.epsilon - params.s1 * phi;
    }
    for (k, &p) in grid.perimeter.iter().enumerate() {
        let psi = state.phi[p];
        b[lay.psi() + k] = psi * inv_tau;
        b[lay.mu_gamma() + k] =
            params.surf_potential.derivative(psi) / params.delta - params.s2 * psi;
    }
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("right-hand side"));
    }
    Ok(b)
}

pub fn assemble(state: &State, params: &Params, grid: &Grid) -> Result<LinearSystem> {
    Ok(LinearSystem {
        layout: Layout::new(grid),
        matrix: assemble_matrix(grid, params),
        rhs: assemble_rhs(state, params, grid)?,
    })
}
