//! Discrete differential operators shared by the stepper and the diagnostics.
//!
//! Two forms live here. Plain functions (`bulk_laplacian`, `surface_laplacian`,
//! ...) apply an operator by direct neighbor arithmetic. [`StencilOperator`]
//! holds the same operators as explicit sparse rows, which is
//! what the assembler consumes. Tests cross-check one against the other.
//!
//! Sign and weight conventions: bulk sums carry weight `h^2` per node, ring sums
//! weight `h` per node. With those weights the flux-form Laplacians are exactly
//! minus the gradients of the edge energies, which is what makes the discrete
//! energy law and the mass balances hold without truncation error.

use crate::error::Result;
use crate::grid::{Grid, Side};

/// Which nodes a stencil operator produces values for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// One row per interior node, in `Grid::interior` order.
    BulkInterior,
    /// One row per grid node.
    BulkAll,
    /// One row per perimeter node, in ring order.
    Perimeter,
}

/// Sparse operator stored row by row. Row `r` maps to the `r`-th node of the
/// domain; column indices refer either to grid nodes or to ring positions
/// depending on `input`.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilOperator {
    pub output: Domain,
    pub input: Domain,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl StencilOperator {
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, a)| a * u[c]).sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(_, a)| a).sum())
            .collect()
    }
}

/// Zero-flux Laplacian applied at interior nodes. Fluxes through faces shared
/// with a boundary node vanish, i.e. the boundary value is replaced by its
/// interior mirror. Perimeter entries of the result are set to zero; the
/// stepper governs those nodes with a separate closure equation.
pub fn bulk_laplacian_neumann(u: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    grid.check_len(u)?;
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let mut out = vec![0.0; grid.len()];
    for &p in grid.interior() {
        let flux: f64 = grid
            .neighbors(p)
            .filter(|&q| !grid.is_boundary(q))
            .map(|q| u[q] - u[p])
            .sum();
        out[p] = flux * inv_h2;
    }
    Ok(out)
}

/// Five-point Laplacian at interior nodes reading boundary values directly.
/// Perimeter entries are zero.
pub fn bulk_laplacian(u: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    grid.check_len(u)?;
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let mut out = vec![0.0; grid.len()];
    for &p in grid.interior() {
        let nx = grid.nx;
        out[p] = (u[p - 1] + u[p + 1] + u[p - nx] + u[p + nx] - 4.0 * u[p]) * inv_h2;
    }
    Ok(out)
}

/// Second difference along the closed perimeter ring.
pub fn surface_laplacian(v: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    grid.check_ring_len(v)?;
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let m = v.len();
    Ok((0..m)
        .map(|k| {
            let prev = v[(k + m - 1) % m];
            let next = v[(k + 1) % m];
            (prev - 2.0 * v[k] + next) * inv_h2
        })
        .collect())
}

/// Outward normal derivative by the second-order one-sided stencil
/// `(3 u_b - 4 u_1 + u_2) / (2h)`. At corners the two axis-aligned one-sided
/// derivatives are averaged.
pub fn normal_derivative(u: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    grid.check_len(u)?;
    Ok(grid
        .perimeter
        .iter()
        .map(|&b| {
            one_sided_stencil(grid, b)
                .into_iter()
                .map(|(q, a)| a * u[q])
                .sum()
        })
        .collect())
}

/// Boundary flux conjugate to the bulk edge energy: `(1/h) sum_j (u_b - u_j)`
/// over all grid neighbors `j` of the boundary node `b`.
///
/// For a node in the middle of a side this is the first-order outward
/// difference `(u_b - u_1)/h` plus `-h` times the tangential second
/// difference. It is the normal derivative that appears in the surface chemical
/// potential: `h * energy_normal_derivative` is exactly the partial derivative
/// of [`dirichlet_energy`]`/2` with respect to the boundary value.
pub fn energy_normal_derivative(u: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    grid.check_len(u)?;
    let inv_h = 1.0 / grid.h;
    Ok(grid
        .perimeter
        .iter()
        .map(|&b| grid.neighbors(b).map(|q| u[b] - u[q]).sum::<f64>() * inv_h)
        .collect())
}

/// Sum over all horizontal and vertical node pairs of `h^2 ((u_b - u_a)/h)^2`.
pub fn dirichlet_energy(u: &[f64], grid: &Grid) -> Result<f64> {
    grid.check_len(u)?;
    let nx = grid.nx;
    let mut sum = 0.0;
    for j in 0..grid.ny {
        for i in 0..nx {
            let p = j * nx + i;
            if i + 1 < nx {
                let d = u[p + 1] - u[p];
                sum += d * d;
            }
            if j + 1 < grid.ny {
                let d = u[p + nx] - u[p];
                sum += d * d;
            }
        }
    }
    Ok(sum)
}

/// Sum over ring edges of `h ((v_{k+1} - v_k)/h)^2`.
pub fn surface_dirichlet_energy(v: &[f64], grid: &Grid) -> Result<f64> {
    grid.check_ring_len(v)?;
    let m = v.len();
    let sum: f64 = (0..m)
        .map(|k| {
            let d = v[(k + 1) % m] - v[k];
            d * d
        })
        .sum();
    Ok(sum / grid.h)
}

/// Nodes and coefficients of the one-sided normal derivative at boundary node `b`.
pub fn one_sided_stencil(grid: &Grid, b: usize) -> Vec<(usize, f64)> {
    let c = 1.0 / (2.0 * grid.h);
    let (i, j) = grid.coords(b);
    let nx = grid.nx as isize;
    // inward unit steps in node-index space
    let along = |step: isize| -> [(usize, f64); 3] {
        let b = b as isize;
        [
            (b as usize, 3.0 * c),
            ((b + step) as usize, -4.0 * c),
            ((b + 2 * step) as usize, c),
        ]
    };
    let x_step = if i == 0 { 1 } else { -1 };
    let y_step = if j == 0 { nx } else { -nx };
    match grid.side(b) {
        Some(Side::Left) | Some(Side::Right) => along(x_step).to_vec(),
        Some(Side::Bottom) | Some(Side::Top) => along(y_step).to_vec(),
        Some(Side::Corner) => along(x_step)
            .into_iter()
            .chain(along(y_step))
            .map(|(q, a)| (q, 0.5 * a))
            .collect(),
        None => panic!("node {b} is not on the boundary"),
    }
}

/// Zero-flux Laplacian as a stencil: interior rows, input over all nodes.
pub fn bulk_laplacian_neumann_stencil(grid: &Grid) -> StencilOperator {
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let rows = grid
        .interior()
        .iter()
        .map(|&p| {
            let inner: Vec<usize> = grid.neighbors(p).filter(|&q| !grid.is_boundary(q)).collect();
            let mut row = vec![(p, -(inner.len() as f64) * inv_h2)];
            row.extend(inner.into_iter().map(|q| (q, inv_h2)));
            row
        })
        .collect();
    StencilOperator {
        output: Domain::BulkInterior,
        input: Domain::BulkAll,
        rows,
    }
}

/// Five-point Laplacian as a stencil: interior rows, input over all nodes.
pub fn bulk_laplacian_stencil(grid: &Grid) -> StencilOperator {
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let rows = grid
        .interior()
        .iter()
        .map(|&p| {
            let mut row = vec![(p, -4.0 * inv_h2)];
            row.extend(grid.neighbors(p).map(|q| (q, inv_h2)));
            row
        })
        .collect();
    StencilOperator {
        output: Domain::BulkInterior,
        input: Domain::BulkAll,
        rows,
    }
}

/// Ring Laplacian as a stencil over ring positions.
pub fn surface_laplacian_stencil(grid: &Grid) -> StencilOperator {
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let rows = (0..grid.ring_len())
        .map(|k| {
            vec![
                (grid.ring_prev(k), inv_h2),
                (k, -2.0 * inv_h2),
                (grid.ring_next(k), inv_h2),
            ]
        })
        .collect();
    StencilOperator {
        output: Domain::Perimeter,
        input: Domain::Perimeter,
        rows,
    }
}

/// One-sided normal derivative as a stencil: perimeter rows, input over all nodes.
pub fn normal_derivative_stencil(grid: &Grid) -> StencilOperator {
    StencilOperator {
        output: Domain::Perimeter,
        input: Domain::BulkAll,
        rows: grid.perimeter.iter().map(|&b| one_sided_stencil(grid, b)).collect(),
    }
}

/// [`energy_normal_derivative`] as a stencil: perimeter rows, input over all nodes.
pub fn energy_normal_derivative_stencil(grid: &Grid) -> StencilOperator {
    let inv_h = 1.0 / grid.h;
    let rows = grid
        .perimeter
        .iter()
        .map(|&b| {
            let nbrs: Vec<usize> = grid.neighbors(b).collect();
            let mut row = vec![(b, nbrs.len() as f64 * inv_h)];
            row.extend(nbrs.into_iter().map(|q| (q, -inv_h)));
            row
        })
        .collect();
    StencilOperator {
        output: Domain::Perimeter,
        input: Domain::BulkAll,
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn field(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        (0..grid.len())
            .map(|p| {
                let [x, y] = grid.position(p);
                f(x, y)
            })
            .collect()
    }

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    fn dot_w(a: &[f64], b: &[f64], w: f64) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y * w).sum()
    }

    #[test]
    fn laplacians_annihilate_constants() {
        let g = Grid::unit_square(7).unwrap();
        let c = vec![3.5; g.len()];
        assert!(bulk_laplacian_neumann(&c, &g).unwrap().iter().all(|&v| v == 0.0));
        assert!(bulk_laplacian(&c, &g).unwrap().iter().all(|&v| v == 0.0));
        let r = vec![-2.0; g.ring_len()];
        assert!(surface_laplacian(&r, &g).unwrap().iter().all(|&v| v == 0.0));
        assert!(normal_derivative(&c, &g).unwrap().iter().all(|&v| v.abs() < 1e-13));
        assert!(energy_normal_derivative(&c, &g).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn five_point_exact_on_quadratics() {
        let g = Grid::unit_square(11).unwrap();
        let u = field(&g, |x, y| x * x + y * y);
        let lap = bulk_laplacian(&u, &g).unwrap();
        for &p in g.interior() {
            assert!((lap[p] - 4.0).abs() < 1e-10);
        }
        let lap_n = bulk_laplacian_neumann(&u, &g).unwrap();
        for &p in g.interior() {
            if g.neighbors(p).all(|q| !g.is_boundary(q)) {
                assert!((lap_n[p] - 4.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn neumann_laplacian_has_zero_total_flux() {
        let g = Grid::unit_square(9).unwrap();
        let u = random(g.len(), 1);
        let lap = bulk_laplacian_neumann(&u, &g).unwrap();
        let total: f64 = g.interior().iter().map(|&p| lap[p] * g.h * g.h).sum();
        let scale: f64 = u.iter().map(|v| v.abs()).sum();
        assert!(total.abs() <= 1e-12 * scale);
    }

    #[test]
    fn ring_fourier_mode_is_eigenvector() {
        let g = Grid::unit_square(9).unwrap();
        let m = g.ring_len();
        let theta = 2.0 * std::f64::consts::PI / m as f64;
        let v: Vec<f64> = (0..m).map(|k| (theta * k as f64).cos()).collect();
        let lv = surface_laplacian(&v, &g).unwrap();
        let lambda = -(2.0 - 2.0 * theta.cos()) / (g.h * g.h);
        for k in 0..m {
            assert!((lv[k] - lambda * v[k]).abs() < 1e-10);
        }
        let r = random(m, 2);
        let s: f64 = surface_laplacian(&r, &g).unwrap().iter().sum();
        assert!(s.abs() < 1e-10);
    }

    #[test]
    fn normal_derivative_exact_on_linear_and_quadratic() {
        let g = Grid::unit_square(9).unwrap();
        let u = field(&g, |x, _| x);
        let dn = normal_derivative(&u, &g).unwrap();
        for (k, &b) in g.perimeter.iter().enumerate() {
            let expected = match g.side(b).unwrap() {
                Side::Right => 1.0,
                Side::Left => -1.0,
                Side::Top | Side::Bottom => 0.0,
                Side::Corner => {
                    let (i, _) = g.coords(b);
                    if i == 0 { -0.5 } else { 0.5 }
                }
            };
            assert!((dn[k] - expected).abs() < 1e-12, "node {b}: {} vs {expected}", dn[k]);
        }
        let u = field(&g, |x, _| x * x);
        let dn = normal_derivative(&u, &g).unwrap();
        for (k, &b) in g.perimeter.iter().enumerate() {
            if g.side(b) == Some(Side::Right) {
                assert!((dn[k] - 2.0).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn normal_derivative_exact_on_general_linear_fields() {
        // corner averaging of u = a x + b y gives the mean of the two outward normals
        let g = Grid::unit_square(7).unwrap();
        let (a, b) = (0.7, -1.3);
        let u = field(&g, |x, y| a * x + b * y);
        let dn = normal_derivative(&u, &g).unwrap();
        for (k, &p) in g.perimeter.iter().enumerate() {
            let (i, j) = g.coords(p);
            let nx = if i == 0 { -1.0 } else if i == g.nx - 1 { 1.0 } else { 0.0 };
            let ny = if j == 0 { -1.0 } else if j == g.ny - 1 { 1.0 } else { 0.0 };
            let w = if nx != 0.0 && ny != 0.0 { 0.5 } else { 1.0 };
            assert!((dn[k] - w * (a * nx + b * ny)).abs() < 1e-12);
        }
    }

    #[test]
    fn dirichlet_energies() {
        let g = Grid::unit_square(5).unwrap();
        assert_eq!(dirichlet_energy(&vec![1.0; 25], &g).unwrap(), 0.0);
        let u = field(&g, |x, _| x);
        assert!((dirichlet_energy(&u, &g).unwrap() - 1.25).abs() < 1e-14);

        let a = 0.3;
        let v: Vec<f64> = (0..g.ring_len()).map(|k| if k % 2 == 0 { a } else { -a }).collect();
        let mut brute = 0.0;
        for k in 0..v.len() {
            let next = if k + 1 == v.len() { v[0] } else { v[k + 1] };
            brute += g.h * ((next - v[k]) / g.h).powi(2);
        }
        assert!((surface_dirichlet_energy(&v, &g).unwrap() - brute).abs() < 1e-12);
        assert!((brute - 16.0 * g.h * (2.0 * a / g.h).powi(2)).abs() < 1e-12);
    }

    #[test]
    fn summation_by_parts() {
        let g = Grid::unit_square(8).unwrap();
        let h2 = g.h * g.h;
        let u = random(g.len(), 3);
        let w = random(g.len(), 4);

        // zero-flux Laplacian against interior-interior edges
        let lu = bulk_laplacian_neumann(&u, &g).unwrap();
        let lhs: f64 = g.interior().iter().map(|&p| lu[p] * w[p] * h2).sum();
        let mut rhs = 0.0;
        for &p in g.interior() {
            for q in g.neighbors(p).filter(|&q| q > p && !g.is_boundary(q)) {
                rhs -= (u[q] - u[p]) * (w[q] - w[p]);
            }
        }
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));

        // edge energy polarization: interior Laplacian plus boundary flux
        let l5 = bulk_laplacian(&u, &g).unwrap();
        let dn = energy_normal_derivative(&u, &g).unwrap();
        let psi_w: Vec<f64> = g.perimeter.iter().map(|&p| w[p]).collect();
        let lhs: f64 = g.interior().iter().map(|&p| -l5[p] * w[p] * h2).sum::<f64>()
            + dot_w(&dn, &psi_w, g.h);
        let mut edges = 0.0;
        for p in 0..g.len() {
            for q in g.neighbors(p).filter(|&q| q > p) {
                edges += (u[q] - u[p]) * (w[q] - w[p]);
            }
        }
        assert!((lhs - edges).abs() <= 1e-12 * edges.abs().max(1.0));

        // ring
        let m = g.ring_len();
        let v = random(m, 5);
        let z = random(m, 6);
        let lv = surface_laplacian(&v, &g).unwrap();
        let lhs = dot_w(&lv, &z, g.h);
        let rhs: f64 = -(0..m)
            .map(|k| (v[(k + 1) % m] - v[k]) * (z[(k + 1) % m] - z[k]))
            .sum::<f64>()
            / g.h;
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }

    #[test]
    fn stencils_match_actions() {
        let g = Grid::unit_square(7).unwrap();
        let u = random(g.len(), 9);
        let v = random(g.ring_len(), 10);
        let interior = |full: Vec<f64>| -> Vec<f64> { g.interior().iter().map(|&p| full[p]).collect() };

        let pairs = [
            (
                bulk_laplacian_neumann_stencil(&g).apply(&u),
                interior(bulk_laplacian_neumann(&u, &g).unwrap()),
            ),
            (
                bulk_laplacian_stencil(&g).apply(&u),
                interior(bulk_laplacian(&u, &g).unwrap()),
            ),
            (surface_laplacian_stencil(&g).apply(&v), surface_laplacian(&v, &g).unwrap()),
            (normal_derivative_stencil(&g).apply(&u), normal_derivative(&u, &g).unwrap()),
            (
                energy_normal_derivative_stencil(&g).apply(&u),
                energy_normal_derivative(&u, &g).unwrap(),
            ),
        ];
        for (a, b) in pairs {
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
            }
        }
        assert!(surface_laplacian_stencil(&g).row_sums().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn ring_laplacian_is_symmetric() {
        let g = Grid::unit_square(6).unwrap();
        let op = surface_laplacian_stencil(&g);
        let m = g.ring_len();
        let mut dense = vec![vec![0.0; m]; m];
        for (r, row) in op.rows.iter().enumerate() {
            for &(c, a) in row {
                dense[r][c] += a;
            }
        }
        for r in 0..m {
            for c in 0..m {
                assert_eq!(dense[r][c], dense[c][r]);
            }
        }
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let g = Grid::unit_square(5).unwrap();
        assert!(bulk_laplacian_neumann(&[0.0; 3], &g).is_err());
        assert!(surface_laplacian(&[0.0; 3], &g).is_err());
        assert!(normal_derivative(&[0.0; 3], &g).is_err());
        assert!(dirichlet_energy(&[0.0; 3], &g).is_err());
    }

    proptest::proptest! {
        #[test]
        fn operators_are_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, seed in 0u64..1000) {
            let g = Grid::unit_square(6).unwrap();
            let u = random(g.len(), seed);
            let w = random(g.len(), seed + 1);
            let comb: Vec<f64> = u.iter().zip(&w).map(|(a, b)| alpha * a + beta * b).collect();
            type Op = fn(&[f64], &Grid) -> Result<Vec<f64>>;
            let ops: [Op; 4] = [bulk_laplacian_neumann, bulk_laplacian, normal_derivative, energy_normal_derivative];
            for op in ops {
                let lhs = op(&comb, &g).unwrap();
                let (ou, ow) = (op(&u, &g).unwrap(), op(&w, &g).unwrap());
                for i in 0..lhs.len() {
                    let rhs = alpha * ou[i] + beta * ow[i];
                    proptest::prop_assert!((lhs[i] - rhs).abs() <= 1e-10 * (1.0 + rhs.abs()));
                }
            }
        }
    }
}
