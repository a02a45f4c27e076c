//! Exact maxima of the sum of pairwise distances of `n` unit vectors in
//! `R^d`, which equals the `Z_n` Bell value at dimension `d`, together with
//! the point configurations that attain them.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectors::{check_unit_vectors, norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaId {
    Polygon,
    Simplex,
    CrossPolytope,
    Tetrahedron,
    Octahedron,
    Icosahedron,
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FormulaId::Polygon => "polygon",
            FormulaId::Simplex => "simplex",
            FormulaId::CrossPolytope => "cross_polytope",
            FormulaId::Tetrahedron => "tetrahedron",
            FormulaId::Octahedron => "octahedron",
            FormulaId::Icosahedron => "icosahedron",
        };
        f.write_str(s)
    }
}

/// Closed-form value of `E(n, d)` (unordered-pair convention).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleValue {
    pub n: usize,
    pub d: usize,
    pub value: f64,
    pub formula_id: FormulaId,
    pub exact_expression: String,
}

fn classify(n: usize, d: usize) -> Result<FormulaId> {
    let id = match (n, d) {
        _ if n < 2 || d == 0 => return Err(Error::NoOracle { n, d }),
        (4, 3) => FormulaId::Tetrahedron,
        (6, 3) => FormulaId::Octahedron,
        (12, 3) => FormulaId::Icosahedron,
        (_, 2) => FormulaId::Polygon,
        _ if d + 1 >= n => FormulaId::Simplex,
        _ if n.is_multiple_of(2) && d == n / 2 => FormulaId::CrossPolytope,
        _ => return Err(Error::NoOracle { n, d }),
    };
    Ok(id)
}

/// Exact `E(n, d)` for the supported cases: the plane (`d = 2`),
/// `d ≥ n - 1` (regular simplex), `n = 2d` (cross polytope) and the
/// tetrahedron, octahedron and icosahedron in `R^3`.
#[allow(non_snake_case)]
pub fn oracle_E(n: usize, d: usize) -> Result<OracleValue> {
    let formula_id = classify(n, d)?;
    let nf = n as f64;
    let (value, exact_expression) = match formula_id {
        FormulaId::Polygon => (
            nf / (PI / (2.0 * nf)).tan(),
            format!("{n}·cot(π/{})", 2 * n),
        ),
        FormulaId::Simplex => (
            nf * (nf * (nf - 1.0) / 2.0).sqrt(),
            format!("{n}·√({n}·{}/2)", n - 1),
        ),
        FormulaId::CrossPolytope => {
            let k = (n / 2) as f64;
            (
                2.0 * k * (1.0 + (k - 1.0) * SQRT_2),
                format!("{n}·(1 + {}·√2)", n / 2 - 1),
            )
        }
        FormulaId::Tetrahedron => (4.0 * 6f64.sqrt(), "4·√6".to_string()),
        FormulaId::Octahedron => (6.0 * (1.0 + 2.0 * SQRT_2), "6·(1 + 2·√2)".to_string()),
        FormulaId::Icosahedron => (
            12.0 * (1.0 + (5.0 * (5.0 + 2.0 * 5f64.sqrt())).sqrt()),
            "12·(1 + √(5·(5 + 2·√5)))".to_string(),
        ),
    };
    Ok(OracleValue {
        n,
        d,
        value,
        formula_id,
        exact_expression,
    })
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = norm(&v);
    v.into_iter().map(|x| x / n).collect()
}

/// Vertices of a regular simplex with `n` vertices centred at the origin,
/// in `R^{n-1}` (Helmert coordinates).
fn regular_simplex(n: usize) -> Vec<Vec<f64>> {
    (1..=n)
        .map(|i| {
            let v = (1..n)
                .map(|k| {
                    let scale = 1.0 / ((k * (k + 1)) as f64).sqrt();
                    if i <= k {
                        scale
                    } else if i == k + 1 {
                        -(k as f64) * scale
                    } else {
                        0.0
                    }
                })
                .collect();
            unit(v)
        })
        .collect()
}

fn cross_polytope(d: usize) -> Vec<Vec<f64>> {
    [1.0, -1.0]
        .iter()
        .flat_map(|&s| {
            (0..d).map(move |k| {
                let mut e = vec![0.0; d];
                e[k] = s;
                e
            })
        })
        .collect()
}

fn icosahedron() -> Vec<Vec<f64>> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut out = Vec::with_capacity(12);
    for s1 in [1.0, -1.0] {
        for s2 in [1.0, -1.0] {
            out.push(unit(vec![0.0, s1, s2 * phi]));
            out.push(unit(vec![s1, s2 * phi, 0.0]));
            out.push(unit(vec![s2 * phi, 0.0, s1]));
        }
    }
    out
}

/// Explicit optimal configuration for a supported `(n, d)`.
pub fn known_configuration(n: usize, d: usize) -> Result<Vec<Vec<f64>>> {
    let points = match classify(n, d)? {
        FormulaId::Polygon => (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        FormulaId::Tetrahedron => [
            [1.0, 1.0, 1.0],
            [1.0, -1.0, -1.0],
            [-1.0, 1.0, -1.0],
            [-1.0, -1.0, 1.0],
        ]
        .iter()
        .map(|v| unit(v.to_vec()))
        .collect(),
        FormulaId::Octahedron => cross_polytope(3),
        FormulaId::Icosahedron => icosahedron(),
        FormulaId::CrossPolytope => cross_polytope(d),
        FormulaId::Simplex => regular_simplex(n)
            .into_iter()
            .map(|mut v| {
                v.resize(d, 0.0);
                v
            })
            .collect(),
    };
    Ok(points)
}

/// Sum of `|b_i - b_j|` over unordered pairs `i < j`.
pub fn sum_of_distances(points: &[Vec<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "need at least 2 points, got {}",
            points.len()
        )));
    }
    check_unit_vectors(points)?;
    let mut total = 0.0;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            total += p
                .iter()
                .zip(q)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
        }
    }
    Ok(total)
}

/// Sum over ordered pairs `(i, j)`, i.e. twice [`sum_of_distances`].
pub fn sum_of_distances_ordered(points: &[Vec<f64>]) -> Result<f64> {
    Ok(2.0 * sum_of_distances(points)?)
}

/// `(E(n,2), 2n²/3, n√(n(n-1)/2))` divided by the classical bound `⌊n²/2⌋`.
///
/// The middle term is the large-`n` behaviour in `R^3`; the three
/// components tend to `4/π`, `4/3` and `√2`.
pub fn asymptotic_ratio(n: usize) -> Result<(f64, f64, f64)> {
    if n < 2 {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min: 2,
            max: usize::MAX,
        });
    }
    let nf = n as f64;
    let lhv = ((n as u128 * n as u128) / 2) as f64;
    let plane = nf / (PI / (2.0 * nf)).tan();
    let sphere = 2.0 * nf * nf / 3.0;
    let simplex = nf * (nf * (nf - 1.0) / 2.0).sqrt();
    Ok((plane / lhv, sphere / lhv, simplex / lhv))
}
