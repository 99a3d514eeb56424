//! Linear solvers: sparse LU (via `faer`) and restarted GMRES.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use serde::{Deserialize, Serialize};

use super::assemble::SparseMatrix;
use crate::error::{Error, Result};

/// Above this many unknowns `Method::Auto` switches from LU to GMRES.
pub const AUTO_DIRECT_LIMIT: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Auto,
    Direct,
    Gmres,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    None,
    Jacobi,
    Ilu0,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub method: Method,
    /// Relative residual target `|Ax - b| / |b|`.
    pub rel_tol: f64,
    /// Iteration cap for GMRES; ignored by the direct method.
    pub max_iter: usize,
    pub restart: usize,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Auto,
            rel_tol: 1e-10,
            max_iter: 2000,
            restart: 100,
            preconditioner: Preconditioner::Ilu0,
        }
    }
}

impl SolverConfig {
    pub fn direct() -> Self {
        SolverConfig {
            method: Method::Direct,
            ..Default::default()
        }
    }

    pub fn gmres() -> Self {
        SolverConfig {
            method: Method::Gmres,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(Error::InvalidConfig(format!(
                "solver rel_tol must lie in (0, 1e-2], got {}",
                self.rel_tol
            )));
        }
        if self.max_iter == 0 || self.restart == 0 {
            return Err(Error::InvalidConfig(
                "solver max_iter and restart must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn resolved_method(&self, n: usize) -> Method {
        match self.method {
            Method::Auto if n <= AUTO_DIRECT_LIMIT => Method::Direct,
            Method::Auto => Method::Gmres,
            m => m,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveInfo {
    pub iterations: usize,
    pub residual: f64,
}

/// A matrix prepared for repeated solves: factorized for the direct method,
/// preconditioned for GMRES.
pub struct PreparedSolver {
    config: SolverConfig,
    kind: Prepared,
}

enum Prepared {
    Direct(faer::sparse::linalg::solvers::Lu<usize, f64>),
    Gmres(Box<dyn Precondition + Send + Sync>),
}

impl std::fmt::Debug for PreparedSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kind = match self.kind {
            Prepared::Direct(_) => "direct",
            Prepared::Gmres(_) => "gmres",
        };
        f.debug_struct("PreparedSolver")
            .field("config", &self.config)
            .field("kind", &kind)
            .finish()
    }
}

impl PreparedSolver {
    pub fn new(matrix: &SparseMatrix, config: &SolverConfig) -> Result<Self> {
        config.validate()?;
        if let Some(i) = matrix.first_zero_row() {
            return Err(Error::SolverBreakdown(format!("row {i} is identically zero")));
        }
        let kind = match config.resolved_method(matrix.nrows()) {
            Method::Direct => Prepared::Direct(factorize(matrix)?),
            _ => Prepared::Gmres(match config.preconditioner {
                Preconditioner::None => Box::new(Identity),
                Preconditioner::Jacobi => Box::new(Jacobi::new(matrix)?),
                Preconditioner::Ilu0 => Box::new(Ilu0::new(matrix)?),
            }),
        };
        Ok(PreparedSolver {
            config: *config,
            kind,
        })
    }

    pub fn solve(&self, matrix: &SparseMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveInfo)> {
        if b.len() != matrix.nrows() {
            return Err(Error::SizeMismatch {
                expected: matrix.nrows(),
                actual: b.len(),
            });
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("right-hand side"));
        }
        let b_norm = norm(b);
        if b_norm == 0.0 {
            return Ok((
                vec![0.0; b.len()],
                SolveInfo {
                    iterations: 0,
                    residual: 0.0,
                },
            ));
        }
        match &self.kind {
            Prepared::Direct(lu) => {
                let mut x = lu_solve(lu, b);
                let mut r = residual(matrix, &x, b);
                let mut rel = norm(&r) / b_norm;
                let mut refinements = 0;
                // iterative refinement keeps the balance equations tight to round-off
                while rel > 1e-15 && refinements < 3 && rel.is_finite() {
                    let dx = lu_solve(lu, &r);
                    let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
                    let r_trial = residual(matrix, &trial, b);
                    let rel_trial = norm(&r_trial) / b_norm;
                    refinements += 1;
                    if !(rel_trial < rel) {
                        break;
                    }
                    x = trial;
                    r = r_trial;
                    rel = rel_trial;
                }
                if !rel.is_finite() || x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Singular);
                }
                if rel > self.config.rel_tol {
                    return Err(Error::SolverNotConverged {
                        iterations: refinements,
                        residual: rel,
                    });
                }
                Ok((
                    x,
                    SolveInfo {
                        iterations: refinements,
                        residual: rel,
                    },
                ))
            }
            Prepared::Gmres(pre) => gmres(matrix, b, pre.as_ref(), &self.config),
        }
    }
}

/// One-shot solve of `A x = b`.
pub fn solve(matrix: &SparseMatrix, b: &[f64], config: &SolverConfig) -> Result<(Vec<f64>, SolveInfo)> {
    PreparedSolver::new(matrix, config)?.solve(matrix, b)
}

fn factorize(matrix: &SparseMatrix) -> Result<faer::sparse::linalg::solvers::Lu<usize, f64>> {
    let n = matrix.nrows();
    let triplets: Vec<Triplet<usize, usize, f64>> = (0..n)
        .flat_map(|i| matrix.row(i).map(move |(j, v)| Triplet::new(i, j, v)))
        .collect();
    let csc = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::SolverBreakdown(format!("matrix construction failed: {e:?}")))?;
    csc.sp_lu()
        .map_err(|e| Error::SolverBreakdown(format!("LU factorization failed: {e:?}")))
}

fn lu_solve(lu: &faer::sparse::linalg::solvers::Lu<usize, f64>, b: &[f64]) -> Vec<f64> {
    let rhs = Col::<f64>::from_fn(b.len(), |i| b[i]);
    let x = lu.solve(&rhs);
    (0..b.len()).map(|i| x[i]).collect()
}

fn residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    a.matvec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

trait Precondition {
    /// Applies the approximate inverse.
    fn apply(&self, v: &[f64]) -> Vec<f64>;
}

struct Identity;

impl Precondition for Identity {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.to_vec()
    }
}

struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    fn new(a: &SparseMatrix) -> Result<Self> {
        let inv_diag = (0..a.nrows())
            .map(|i| {
                let d = a.get(i, i);
                if d == 0.0 {
                    Err(Error::SolverBreakdown(format!("zero diagonal at row {i}")))
                } else {
                    Ok(1.0 / d)
                }
            })
            .collect::<Result<_>>()?;
        Ok(Jacobi { inv_diag })
    }
}

impl Precondition for Jacobi {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.inv_diag).map(|(x, d)| x * d).collect()
    }
}

/// Incomplete LU with the sparsity pattern of `A`.
struct Ilu0 {
    lu: SparseMatrix,
    diag: Vec<usize>,
}

impl Ilu0 {
    fn new(a: &SparseMatrix) -> Result<Self> {
        let mut lu = a.clone();
        let n = lu.nrows();
        let row_ptr = lu.row_ptr().to_vec();
        let cols = lu.cols().to_vec();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for pos in row_ptr[i]..row_ptr[i + 1] {
                if cols[pos] == i {
                    diag[i] = pos;
                }
            }
            if diag[i] == usize::MAX {
                return Err(Error::SolverBreakdown(format!("ILU(0): no diagonal in row {i}")));
            }
        }
        let mut marker = vec![usize::MAX; n];
        let vals = lu.vals_mut();
        for i in 0..n {
            for pos in row_ptr[i]..row_ptr[i + 1] {
                marker[cols[pos]] = pos;
            }
            for pos in row_ptr[i]..row_ptr[i + 1] {
                let k = cols[pos];
                if k >= i {
                    break;
                }
                let pivot = vals[diag[k]];
                if pivot == 0.0 {
                    return Err(Error::SolverBreakdown(format!("ILU(0): zero pivot at row {k}")));
                }
                let factor = vals[pos] / pivot;
                vals[pos] = factor;
                for kpos in diag[k] + 1..row_ptr[k + 1] {
                    let j = cols[kpos];
                    let target = marker[j];
                    if target != usize::MAX && target >= row_ptr[i] && target < row_ptr[i + 1] {
                        vals[target] -= factor * vals[kpos];
                    }
                }
            }
            if vals[diag[i]] == 0.0 {
                return Err(Error::SolverBreakdown(format!("ILU(0): zero pivot at row {i}")));
            }
            for pos in row_ptr[i]..row_ptr[i + 1] {
                marker[cols[pos]] = usize::MAX;
            }
        }
        Ok(Ilu0 { lu, diag })
    }
}

impl Precondition for Ilu0 {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = v.len();
        let rp = self.lu.row_ptr();
        let cols = self.lu.cols();
        let vals = self.lu.vals();
        let mut y = v.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for pos in rp[i]..self.diag[i] {
                s -= vals[pos] * y[cols[pos]];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for pos in self.diag[i] + 1..rp[i + 1] {
                s -= vals[pos] * y[cols[pos]];
            }
            y[i] = s / vals[self.diag[i]];
        }
        y
    }
}

/// Right-preconditioned restarted GMRES; convergence is judged on the true
/// residual.
fn gmres(
    a: &SparseMatrix,
    b: &[f64],
    pre: &dyn Precondition,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, SolveInfo)> {
    let n = b.len();
    let b_norm = norm(b);
    let target = cfg.rel_tol * b_norm;
    let m = cfg.restart.min(n).max(1);
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut beta = b_norm;
    let mut iterations = 0;

    loop {
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        let mut z_vecs: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut hess = vec![vec![0.0; m]; m + 1];
        let mut cs = vec![0.0; m];
        let mut sn = vec![0.0; m];
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        basis.push(r.iter().map(|v| v / beta).collect());

        let mut used = 0;
        for j in 0..m {
            let z = pre.apply(&basis[j]);
            let mut w = a.matvec(&z);
            z_vecs.push(z);
            for (i, v) in basis.iter().enumerate() {
                let hij = dot(&w, v);
                hess[i][j] = hij;
                w.iter_mut().zip(v).for_each(|(wk, vk)| *wk -= hij * vk);
            }
            let h_next = norm(&w);
            hess[j + 1][j] = h_next;
            for i in 0..j {
                let t = cs[i] * hess[i][j] + sn[i] * hess[i + 1][j];
                hess[i + 1][j] = -sn[i] * hess[i][j] + cs[i] * hess[i + 1][j];
                hess[i][j] = t;
            }
            let denom = hess[j][j].hypot(hess[j + 1][j]);
            if denom == 0.0 || !denom.is_finite() {
                return Err(Error::SolverBreakdown(format!(
                    "GMRES breakdown after {iterations} iterations"
                )));
            }
            cs[j] = hess[j][j] / denom;
            sn[j] = hess[j + 1][j] / denom;
            hess[j][j] = denom;
            hess[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] *= cs[j];
            iterations += 1;
            used = j + 1;
            if g[j + 1].abs() <= 0.1 * target || h_next == 0.0 || iterations >= cfg.max_iter {
                break;
            }
            basis.push(w.iter().map(|v| v / h_next).collect());
        }

        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = (i + 1..used).map(|k| hess[i][k] * y[k]).sum();
            y[i] = (g[i] - s) / hess[i][i];
        }
        for (yi, z) in y.iter().zip(&z_vecs) {
            x.iter_mut().zip(z).for_each(|(xk, zk)| *xk += yi * zk);
        }
        r = residual(a, &x, b);
        beta = norm(&r);
        if !beta.is_finite() {
            return Err(Error::SolverBreakdown("GMRES produced non-finite iterate".into()));
        }
        if beta <= target {
            return Ok((
                x,
                SolveInfo {
                    iterations,
                    residual: beta / b_norm,
                },
            ));
        }
        if iterations >= cfg.max_iter {
            return Err(Error::SolverNotConverged {
                iterations,
                residual: beta / b_norm,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseMatrix {
        SparseMatrix::from_rows(
            (0..n)
                .map(|i| {
                    let mut row = vec![(i, 4.0)];
                    if i > 0 {
                        row.push((i - 1, -1.0));
                    }
                    if i + 1 < n {
                        row.push((i + 1, -2.0));
                    }
                    row
                })
                .collect(),
        )
    }

    #[test]
    fn identity_returns_rhs() {
        let a = SparseMatrix::identity(7);
        let b: Vec<f64> = (0..7).map(|i| i as f64 - 2.5).collect();
        for cfg in [SolverConfig::direct(), SolverConfig::gmres()] {
            let (x, info) = solve(&a, &b, &cfg).unwrap();
            assert!(x.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-14));
            assert!(info.residual <= cfg.rel_tol);
        }
    }

    #[test]
    fn methods_agree_on_nonsymmetric_system() {
        let a = tridiag(60);
        let b: Vec<f64> = (0..60).map(|i| (i as f64).sin()).collect();
        let (xd, _) = solve(&a, &b, &SolverConfig::direct()).unwrap();
        for pre in [Preconditioner::None, Preconditioner::Jacobi, Preconditioner::Ilu0] {
            let cfg = SolverConfig {
                preconditioner: pre,
                restart: 10,
                ..SolverConfig::gmres()
            };
            let (xg, info) = solve(&a, &b, &cfg).unwrap();
            assert!(info.residual <= 1e-10);
            let diff = xd.iter().zip(&xg).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            assert!(diff < 1e-8, "{pre:?}: {diff}");
        }
    }

    #[test]
    fn zero_row_is_breakdown() {
        let a = SparseMatrix::from_rows(vec![vec![(0, 1.0)], vec![(0, 0.0)]]);
        for cfg in [SolverConfig::direct(), SolverConfig::gmres()] {
            assert!(matches!(solve(&a, &[1.0, 1.0], &cfg), Err(Error::SolverBreakdown(_))));
        }
    }

    #[test]
    fn iteration_cap_is_reported() {
        let a = tridiag(200);
        let b = vec![1.0; 200];
        let cfg = SolverConfig {
            max_iter: 3,
            restart: 3,
            preconditioner: Preconditioner::None,
            ..SolverConfig::gmres()
        };
        assert!(matches!(solve(&a, &b, &cfg), Err(Error::SolverNotConverged { .. })));
    }

    #[test]
    fn tolerance_bounds() {
        let bad = SolverConfig {
            rel_tol: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(SolverConfig::default().validate().is_ok());
    }
}
