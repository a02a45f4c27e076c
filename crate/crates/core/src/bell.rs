//! Correlation Bell matrices, the X/Y/Z inequality families and their
//! classical (local deterministic) values.
//!
//! A correlation Bell expression is `Σ_ij M_ij a_i b_j` with outcomes
//! `a_i, b_j ∈ {±1}`. Mixed local strategies are never needed for the
//! maximum, so only deterministic sign assignments are modelled.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest Bob setting count accepted by [`classical_bound`].
pub const ENUMERATION_LIMIT: usize = 30;

/// Number of high pattern bits used to split the enumeration into
/// independent chunks. Fixed so that the result never depends on the
/// thread count.
const CHUNK_BITS: usize = 8;

/// Real `m_a × m_b` coefficient matrix of a correlation Bell expression.
///
/// Row `i` is Alice's setting, column `j` is Bob's setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixFile", into = "MatrixFile")]
pub struct BellMatrix {
    m_a: usize,
    m_b: usize,
    entries: Vec<f64>,
    label: Option<String>,
}

/// On-disk JSON layout of a [`BellMatrix`].
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MatrixFile {
    m_a: usize,
    m_b: usize,
    entries: Vec<Vec<f64>>,
    #[serde(default)]
    label: Option<String>,
}

impl TryFrom<MatrixFile> for BellMatrix {
    type Error = Error;

    fn try_from(file: MatrixFile) -> Result<Self> {
        if file.entries.len() != file.m_a {
            return Err(Error::InvalidMatrix(format!(
                "field `entries` has {} rows but m_a = {}",
                file.entries.len(),
                file.m_a
            )));
        }
        for (i, row) in file.entries.iter().enumerate() {
            if row.len() != file.m_b {
                return Err(Error::InvalidMatrix(format!(
                    "field `entries[{i}]` has {} columns but m_b = {}",
                    row.len(),
                    file.m_b
                )));
            }
        }
        let mut m = BellMatrix::from_rows(&file.entries)?;
        m.label = file.label;
        Ok(m)
    }
}

impl From<BellMatrix> for MatrixFile {
    fn from(m: BellMatrix) -> Self {
        MatrixFile {
            m_a: m.m_a,
            m_b: m.m_b,
            entries: m.rows().map(<[f64]>::to_vec).collect(),
            label: m.label,
        }
    }
}

impl BellMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(m_a: usize, m_b: usize, entries: Vec<f64>) -> Result<Self> {
        if m_a == 0 || m_b == 0 {
            return Err(Error::InvalidMatrix(format!(
                "setting counts must be positive (m_a = {m_a}, m_b = {m_b})"
            )));
        }
        if entries.len() != m_a * m_b {
            return Err(Error::InvalidMatrix(format!(
                "expected {} entries for a {m_a}×{m_b} matrix, got {}",
                m_a * m_b,
                entries.len()
            )));
        }
        if let Some(k) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "entry ({}, {}) is not finite",
                k / m_b,
                k % m_b
            )));
        }
        Ok(BellMatrix {
            m_a,
            m_b,
            entries,
            label: None,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let m_a = rows.len();
        let m_b = rows.first().map_or(0, |r| r.as_ref().len());
        if let Some(i) = rows.iter().position(|r| r.as_ref().len() != m_b) {
            return Err(Error::InvalidMatrix(format!(
                "row {i} has {} entries, expected {m_b}",
                rows[i].as_ref().len()
            )));
        }
        let entries = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        BellMatrix::new(m_a, m_b, entries)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn m_a(&self) -> usize {
        self.m_a
    }

    pub fn m_b(&self) -> usize {
        self.m_b
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m_b + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.m_b..(i + 1) * self.m_b]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.entries.chunks_exact(self.m_b)
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.m_a).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> BellMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.m_b {
            entries.extend((0..self.m_a).map(|i| self.get(i, j)));
        }
        BellMatrix {
            m_a: self.m_b,
            m_b: self.m_a,
            entries,
            label: self.label.clone(),
        }
    }

    /// Matrix with rows and columns reordered: new row `r` is old row
    /// `row_perm[r]`, new column `c` is old column `col_perm[c]`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[usize]) -> Result<BellMatrix> {
        check_permutation(row_perm, self.m_a, "row")?;
        check_permutation(col_perm, self.m_b, "column")?;
        let mut entries = Vec::with_capacity(self.entries.len());
        for &i in row_perm {
            entries.extend(col_perm.iter().map(|&j| self.get(i, j)));
        }
        Ok(BellMatrix {
            entries,
            ..self.clone()
        })
    }

    /// Matrix with every row `i` multiplied by `row_signs[i]` and every
    /// column `j` by `col_signs[j]`.
    pub fn sign_flipped(&self, row_signs: &[f64], col_signs: &[f64]) -> Result<BellMatrix> {
        if row_signs.len() != self.m_a || col_signs.len() != self.m_b {
            return Err(Error::DimensionMismatch(format!(
                "sign vectors have lengths ({}, {}), matrix is {}×{}",
                row_signs.len(),
                col_signs.len(),
                self.m_a,
                self.m_b
            )));
        }
        let mut out = self.clone();
        for (row, rs) in out.entries.chunks_mut(self.m_b).zip(row_signs) {
            for (x, cs) in row.iter_mut().zip(col_signs) {
                *x *= rs * cs;
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("matrix serialization cannot fail")
    }

    /// Parses either the JSON layout or the plain-text layout
    /// (`m_a m_b` on the first line, then `m_a` whitespace-separated rows).
    pub fn parse(text: &str) -> Result<BellMatrix> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Parse {
                location: format!("line {}, column {}", e.line(), e.column()),
                message: e.to_string(),
            })
        } else {
            parse_plain(text)
        }
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<BellMatrix> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        BellMatrix::parse(&text).map_err(|e| match e {
            Error::Parse { location, message } => Error::Parse {
                location: format!("{}: {location}", path.display()),
                message,
            },
            other => other,
        })
    }
}

fn check_permutation(perm: &[usize], n: usize, what: &str) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{what} permutation has length {}, expected {n}",
            perm.len()
        )));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::DimensionMismatch(format!(
                "{what} permutation is not a bijection on 0..{n}"
            )));
        }
    }
    Ok(())
}

fn parse_plain(text: &str) -> Result<BellMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let parse_err = |line: usize, message: String| Error::Parse {
        location: format!("line {line}"),
        message,
    };

    let (hline, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty input".into()))?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(parse_err(
            hline,
            format!("expected `m_a m_b`, got `{header}`"),
        ));
    }
    let m_a: usize = dims[0]
        .parse()
        .map_err(|_| parse_err(hline, format!("m_a `{}` is not an integer", dims[0])))?;
    let m_b: usize = dims[1]
        .parse()
        .map_err(|_| parse_err(hline, format!("m_b `{}` is not an integer", dims[1])))?;

    let mut entries = Vec::with_capacity(m_a * m_b);
    for row in 0..m_a {
        let (lno, line) = lines
            .next()
            .ok_or_else(|| parse_err(hline, format!("missing row {row} of {m_a}")))?;
        let before = entries.len();
        for (col, tok) in line.split_whitespace().enumerate() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(lno, format!("entry {col} `{tok}` is not a number")))?;
            entries.push(v);
        }
        let got = entries.len() - before;
        if got != m_b {
            return Err(parse_err(
                lno,
                format!("row {row} has {got} entries, expected {m_b}"),
            ));
        }
    }
    if let Some((lno, _)) = lines.next() {
        return Err(parse_err(lno, format!("unexpected data after {m_a} rows")));
    }
    BellMatrix::new(m_a, m_b, entries)
}

/// A local deterministic strategy: one ±1 outcome per setting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    a_signs: Vec<i8>,
    b_signs: Vec<i8>,
}

impl DeterministicStrategy {
    pub fn new(a_signs: Vec<i8>, b_signs: Vec<i8>) -> Result<Self> {
        if a_signs.iter().chain(&b_signs).any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidStrategy(
                "signs must be exactly +1 or -1".into(),
            ));
        }
        Ok(DeterministicStrategy { a_signs, b_signs })
    }

    pub fn a_signs(&self) -> &[i8] {
        &self.a_signs
    }

    pub fn b_signs(&self) -> &[i8] {
        &self.b_signs
    }
}

/// `Σ_ij M_ij a_i b_j`, summed in row-major order.
pub fn classical_value(m: &BellMatrix, s: &DeterministicStrategy) -> Result<f64> {
    if s.a_signs.len() != m.m_a || s.b_signs.len() != m.m_b {
        return Err(Error::DimensionMismatch(format!(
            "strategy has ({}, {}) signs, matrix is {}×{}",
            s.a_signs.len(),
            s.b_signs.len(),
            m.m_a,
            m.m_b
        )));
    }
    let mut total = 0.0;
    for (i, row) in m.rows().enumerate() {
        let a = f64::from(s.a_signs[i]);
        for (j, &mij) in row.iter().enumerate() {
            total += mij * a * f64::from(s.b_signs[j]);
        }
    }
    Ok(total)
}

#[inline]
fn sign(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// Maximum of the Bell expression over deterministic strategies, with one
/// witnessing strategy.
///
/// Bob's sign vectors are enumerated with his last outcome pinned to `+1`
/// (the expression is invariant under `b → -b`); Alice answers each with
/// the sign of her row sum. Ties are broken towards the lowest bit pattern,
/// where bit `j` set means `b_j = -1`.
pub fn classical_bound(m: &BellMatrix) -> Result<(f64, DeterministicStrategy)> {
    if m.m_b > ENUMERATION_LIMIT {
        return Err(Error::EnumerationTooLarge {
            m_b: m.m_b,
            limit: ENUMERATION_LIMIT,
        });
    }
    let free_bits = m.m_b - 1;
    let chunk_bits = free_bits.min(CHUNK_BITS);
    let low_bits = free_bits - chunk_bits;
    let columns: Vec<Vec<f64>> = (0..m.m_b).map(|j| m.column(j)).collect();

    let better = |x: (f64, u64), y: (f64, u64)| x.0 > y.0 || (x.0 == y.0 && x.1 < y.1);

    let (_, pattern) = (0u64..1 << chunk_bits)
        .into_par_iter()
        .map(|chunk| {
            let mut pattern = chunk << low_bits;
            let mut sums: Vec<f64> = m
                .rows()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .map(|(j, &x)| if pattern >> j & 1 == 1 { -x } else { x })
                        .sum()
                })
                .collect();
            let score = |s: &[f64]| s.iter().map(|x| x.abs()).sum::<f64>();
            let mut best = (score(&sums), pattern);
            for t in 1u64..1 << low_bits {
                let bit = t.trailing_zeros() as usize;
                pattern ^= 1 << bit;
                let factor = if pattern >> bit & 1 == 1 { -2.0 } else { 2.0 };
                for (s, &c) in sums.iter_mut().zip(&columns[bit]) {
                    *s += factor * c;
                }
                let cand = (score(&sums), pattern);
                if better(cand, best) {
                    best = cand;
                }
            }
            best
        })
        .reduce(
            || (f64::NEG_INFINITY, u64::MAX),
            |x, y| if better(y, x) { y } else { x },
        );

    let b_signs: Vec<i8> = (0..m.m_b)
        .map(|j| if pattern >> j & 1 == 1 { -1 } else { 1 })
        .collect();
    let a_signs: Vec<i8> = m
        .rows()
        .map(|row| {
            sign(
                row.iter()
                    .zip(&b_signs)
                    .map(|(&x, &b)| x * f64::from(b))
                    .sum(),
            )
        })
        .collect();
    let witness = DeterministicStrategy { a_signs, b_signs };
    let value = classical_value(m, &witness)?;
    Ok((value, witness))
}

/// The three inequality families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    X,
    Y,
    Z,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::X, Family::Y, Family::Z];

    /// Accepted `n` range for the builder.
    pub fn n_range(self) -> (usize, usize) {
        match self {
            Family::X | Family::Y => (2, 20),
            Family::Z => (2, 64),
        }
    }

    pub fn build(self, n: usize) -> Result<BellMatrix> {
        match self {
            Family::X => build_xn(n),
            Family::Y => build_yn(n),
            Family::Z => build_zn(n),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::X => "X",
            Family::Y => "Y",
            Family::Z => "Z",
        };
        f.write_str(s)
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "X" => Ok(Family::X),
            "Y" => Ok(Family::Y),
            "Z" => Ok(Family::Z),
            _ => Err(Error::Parse {
                location: "family".into(),
                message: format!("unknown family `{s}` (expected X, Y or Z)"),
            }),
        }
    }
}

fn check_n(family: Family, n: usize) -> Result<()> {
    let (min, max) = family.n_range();
    if n < min || n > max {
        return Err(Error::OutOfRange {
            what: "n",
            value: n,
            min,
            max,
        });
    }
    Ok(())
}

/// `X_n`: one Alice row per bit string `k_1…k_{n-1}` (read as a binary
/// number with `k_1` most significant, rows ascending), with entries
/// `(-1)^{k_j}` for `j < n` and `+1` in the last column.
pub fn build_xn(n: usize) -> Result<BellMatrix> {
    check_n(Family::X, n)?;
    let m_a = 1usize << (n - 1);
    let mut entries = Vec::with_capacity(m_a * n);
    for k in 0..m_a {
        for j in 0..n - 1 {
            let bit = k >> (n - 2 - j) & 1;
            entries.push(if bit == 1 { -1.0 } else { 1.0 });
        }
        entries.push(1.0);
    }
    Ok(BellMatrix::new(m_a, n, entries)?.with_label(format!("X({n})")))
}

/// `Y_n`: for each pair `i < j` (lexicographic) a `b_i + b_j` row followed
/// by a `b_i - b_j` row.
pub fn build_yn(n: usize) -> Result<BellMatrix> {
    check_n(Family::Y, n)?;
    let mut entries = Vec::with_capacity(n * (n - 1) * n);
    for i in 0..n {
        for j in i + 1..n {
            for second in [1.0, -1.0] {
                let mut row = vec![0.0; n];
                row[i] = 1.0;
                row[j] = second;
                entries.extend(row);
            }
        }
    }
    Ok(BellMatrix::new(n * (n - 1), n, entries)?.with_label(format!("Y({n})")))
}

/// `Z_n`: one `b_i - b_j` row per pair `i < j` (lexicographic).
pub fn build_zn(n: usize) -> Result<BellMatrix> {
    check_n(Family::Z, n)?;
    let mut entries = Vec::with_capacity(n * (n - 1) / 2 * n);
    for i in 0..n {
        for j in i + 1..n {
            let mut row = vec![0.0; n];
            row[i] = 1.0;
            row[j] = -1.0;
            entries.extend(row);
        }
    }
    Ok(BellMatrix::new(n * (n - 1) / 2, n, entries)?.with_label(format!("Z({n})")))
}

fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

/// Closed-form classical bound of a family member.
pub fn family_lhv_bound(family: Family, n: usize) -> Result<f64> {
    check_n(family, n)?;
    let n64 = n as u64;
    let bound: u128 = match family {
        Family::X => {
            let h = n64.div_ceil(2);
            u128::from(h) * binomial(n64, h)
        }
        Family::Y => u128::from(n64 * (n64 - 1)),
        Family::Z => u128::from(n64 * n64 / 2),
    };
    Ok(bound as f64)
}
