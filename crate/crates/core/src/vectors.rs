//! Unit-vector strategies and the sum-of-norms objective.
//!
//! For fixed Bob vectors `b_j ∈ S^{d-1}` the best Alice vectors are
//! `a_i = v_i / |v_i|` with `v_i = Σ_j M_ij b_j`, so the Bell value at
//! dimension `d` reduces to `Σ_i |v_i|`.

use serde::{Deserialize, Serialize};

use crate::bell::BellMatrix;
use crate::error::{Error, Result};

/// Accepted deviation from unit norm for vectors supplied by callers.
pub const UNIT_TOL: f64 = 1e-9;

/// Inner sums shorter than this yield the first basis vector as direction.
pub const DEGENERATE_NORM: f64 = 1e-14;

/// Smallest `|v_i|` at which the objective is treated as differentiable.
pub const SMOOTH_NORM: f64 = 1e-10;

pub(crate) fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `x / |x|`, or `e_1` when `|x| < DEGENERATE_NORM`.
pub(crate) fn normalized_or_basis(x: &[f64]) -> Vec<f64> {
    let n = norm(x);
    if n < DEGENERATE_NORM {
        let mut e = vec![0.0; x.len()];
        if let Some(first) = e.first_mut() {
            *first = 1.0;
        }
        e
    } else {
        x.iter().map(|v| v / n).collect()
    }
}

/// `Σ_j M_ij b_j` for every row `i`.
pub(crate) fn row_combinations(m: &BellMatrix, b: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    m.rows()
        .map(|row| {
            let mut v = vec![0.0; dim];
            for (&mij, bj) in row.iter().zip(b) {
                if mij != 0.0 {
                    for (vk, bk) in v.iter_mut().zip(bj) {
                        *vk += mij * bk;
                    }
                }
            }
            v
        })
        .collect()
}

/// `Σ_i M_ij a_i` for every column `j`.
pub(crate) fn column_combinations(m: &BellMatrix, a: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let mut w = vec![vec![0.0; dim]; m.m_b()];
    for (row, ai) in m.rows().zip(a) {
        for (wj, &mij) in w.iter_mut().zip(row) {
            if mij != 0.0 {
                for (wk, ak) in wj.iter_mut().zip(ai) {
                    *wk += mij * ak;
                }
            }
        }
    }
    w
}

pub(crate) fn objective_unchecked(m: &BellMatrix, b: &[Vec<f64>], dim: usize) -> f64 {
    row_combinations(m, b, dim).iter().map(|v| norm(v)).sum()
}

/// Checks count, common dimension and unit norm of Bob's vectors; returns
/// the dimension.
fn check_b_vectors(m: &BellMatrix, b: &[Vec<f64>]) -> Result<usize> {
    if b.len() != m.m_b() {
        return Err(Error::DimensionMismatch(format!(
            "{} Bob vectors supplied, matrix has m_b = {}",
            b.len(),
            m.m_b()
        )));
    }
    check_unit_vectors(b)
}

pub(crate) fn check_unit_vectors(vs: &[Vec<f64>]) -> Result<usize> {
    let dim = vs.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(Error::DimensionMismatch(
            "vectors must have dimension ≥ 1".into(),
        ));
    }
    for (index, v) in vs.iter().enumerate() {
        if v.len() != dim {
            return Err(Error::DimensionMismatch(format!(
                "vector {index} has dimension {}, expected {dim}",
                v.len()
            )));
        }
        let n = norm(v);
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit { index, norm: n });
        }
    }
    Ok(dim)
}

/// `Σ_i |Σ_j M_ij b_j|`, the Bell value at optimal Alice vectors.
pub fn objective(m: &BellMatrix, b: &[Vec<f64>]) -> Result<f64> {
    let dim = check_b_vectors(m, b)?;
    Ok(objective_unchecked(m, b, dim))
}

/// Alice's optimal response `a_i = v_i / |v_i|`.
pub fn derive_a_vectors(m: &BellMatrix, b: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let dim = check_b_vectors(m, b)?;
    Ok(row_combinations(m, b, dim)
        .iter()
        .map(|v| normalized_or_basis(v))
        .collect())
}

/// Riemannian gradient of the objective with respect to each `b_j`.
///
/// The Euclidean gradient `Σ_i M_ij v_i / |v_i|` is projected onto the
/// tangent space of the sphere at `b_j`.
pub fn gradient(m: &BellMatrix, b: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let dim = check_b_vectors(m, b)?;
    let v = row_combinations(m, b, dim);
    let mut dirs = Vec::with_capacity(v.len());
    for (row, vi) in v.iter().enumerate() {
        let n = norm(vi);
        if n <= SMOOTH_NORM {
            return Err(Error::Nonsmooth { row, norm: n });
        }
        dirs.push(vi.iter().map(|x| x / n).collect::<Vec<_>>());
    }
    let euclid = column_combinations(m, &dirs, dim);
    Ok(euclid
        .into_iter()
        .zip(b)
        .map(|(g, bj)| {
            let radial = dot(&g, bj);
            g.iter().zip(bj).map(|(gk, bk)| gk - radial * bk).collect()
        })
        .collect())
}

/// Bob's unit vectors together with Alice's vectors, all in `R^dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StrategyFile")]
pub struct VectorStrategy {
    dim: usize,
    b_vectors: Vec<Vec<f64>>,
    a_vectors: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct StrategyFile {
    #[serde(default)]
    dim: Option<usize>,
    b_vectors: Vec<Vec<f64>>,
    a_vectors: Vec<Vec<f64>>,
}

impl TryFrom<StrategyFile> for VectorStrategy {
    type Error = Error;

    fn try_from(f: StrategyFile) -> Result<Self> {
        let s = VectorStrategy::new(f.a_vectors, f.b_vectors)?;
        match f.dim {
            Some(d) if d != s.dim => Err(Error::DimensionMismatch(format!(
                "field `dim` = {d} but vectors have dimension {}",
                s.dim
            ))),
            _ => Ok(s),
        }
    }
}

impl VectorStrategy {
    /// Validates a strategy (common dimension, norms within [`UNIT_TOL`]) and
    /// renormalizes every vector.
    pub fn new(a_vectors: Vec<Vec<f64>>, b_vectors: Vec<Vec<f64>>) -> Result<Self> {
        if b_vectors.is_empty() || a_vectors.is_empty() {
            return Err(Error::InvalidStrategy(
                "both parties need at least one vector".into(),
            ));
        }
        let dim = check_unit_vectors(&b_vectors)?;
        let a_dim = check_unit_vectors(&a_vectors)?;
        if a_dim != dim {
            return Err(Error::DimensionMismatch(format!(
                "Alice vectors have dimension {a_dim}, Bob vectors {dim}"
            )));
        }
        let renorm = |vs: Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            vs.iter().map(|v| normalized_or_basis(v)).collect()
        };
        Ok(VectorStrategy {
            dim,
            b_vectors: renorm(b_vectors),
            a_vectors: renorm(a_vectors),
        })
    }

    /// Strategy with Alice's vectors set to her optimal response.
    pub fn from_b_vectors(m: &BellMatrix, b_vectors: Vec<Vec<f64>>) -> Result<Self> {
        let dim = check_b_vectors(m, &b_vectors)?;
        let b_vectors: Vec<Vec<f64>> = b_vectors.iter().map(|v| normalized_or_basis(v)).collect();
        let a_vectors = row_combinations(m, &b_vectors, dim)
            .iter()
            .map(|v| normalized_or_basis(v))
            .collect();
        Ok(VectorStrategy {
            dim,
            b_vectors,
            a_vectors,
        })
    }

    pub(crate) fn from_parts_unchecked(
        dim: usize,
        a_vectors: Vec<Vec<f64>>,
        b_vectors: Vec<Vec<f64>>,
    ) -> Self {
        VectorStrategy {
            dim,
            b_vectors,
            a_vectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn b_vectors(&self) -> &[Vec<f64>] {
        &self.b_vectors
    }

    pub fn a_vectors(&self) -> &[Vec<f64>] {
        &self.a_vectors
    }

    /// `Σ_ij M_ij a_i·b_j` with the strategy's own Alice vectors.
    pub fn bell_value(&self, m: &BellMatrix) -> Result<f64> {
        if self.a_vectors.len() != m.m_a() || self.b_vectors.len() != m.m_b() {
            return Err(Error::DimensionMismatch(format!(
                "strategy has ({}, {}) vectors, matrix is {}×{}",
                self.a_vectors.len(),
                self.b_vectors.len(),
                m.m_a(),
                m.m_b()
            )));
        }
        let mut total = 0.0;
        for (i, ai) in self.a_vectors.iter().enumerate() {
            for (j, bj) in self.b_vectors.iter().enumerate() {
                total += m.get(i, j) * dot(ai, bj);
            }
        }
        Ok(total)
    }

    /// `a_i · b_j` for all pairs.
    pub fn cross_gram(&self) -> Vec<Vec<f64>> {
        self.a_vectors
            .iter()
            .map(|a| self.b_vectors.iter().map(|b| dot(a, b)).collect())
            .collect()
    }

    /// Re-expresses the strategy in an orthonormal basis of the span of
    /// all its vectors, dropping directions whose residual norm is at most
    /// `tol`. Vectors are renormalized after projection.
    pub fn reduce_to_span(&self, tol: f64) -> VectorStrategy {
        let all: Vec<&Vec<f64>> = self.b_vectors.iter().chain(&self.a_vectors).collect();
        let mut residuals: Vec<Vec<f64>> = all.iter().map(|v| v.to_vec()).collect();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        while basis.len() < self.dim {
            let (k, n) =
                residuals
                    .iter()
                    .map(|r| norm(r))
                    .enumerate()
                    .fold(
                        (0, 0.0),
                        |best, (k, n)| if n > best.1 { (k, n) } else { best },
                    );
            if n <= tol {
                break;
            }
            let q: Vec<f64> = residuals[k].iter().map(|x| x / n).collect();
            // two passes keep the basis orthogonal to working precision
            for _ in 0..2 {
                for r in residuals.iter_mut() {
                    let c = dot(r, &q);
                    for (rk, qk) in r.iter_mut().zip(&q) {
                        *rk -= c * qk;
                    }
                }
            }
            basis.push(q);
        }
        if basis.is_empty() {
            return self.clone();
        }
        let project = |v: &Vec<f64>| -> Vec<f64> {
            let coords: Vec<f64> = basis.iter().map(|q| dot(v, q)).collect();
            normalized_or_basis(&coords)
        };
        VectorStrategy {
            dim: basis.len(),
            b_vectors: self.b_vectors.iter().map(project).collect(),
            a_vectors: self.a_vectors.iter().map(project).collect(),
        }
    }
}

/// Gram matrix of all strategy vectors, Alice's first (rows/columns
/// `0..m_a`), then Bob's (`m_a..m_a+m_b`).
pub fn gram_matrix(s: &VectorStrategy) -> Vec<Vec<f64>> {
    let all: Vec<&Vec<f64>> = s.a_vectors.iter().chain(&s.b_vectors).collect();
    let n = all.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        g[i][i] = 1.0;
        for j in i + 1..n {
            let d = dot(all[i], all[j]);
            g[i][j] = d;
            g[j][i] = d;
        }
    }
    g
}
