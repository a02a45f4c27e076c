//! Quantum realizations of vector strategies.
//!
//! Unit vectors in `R^n` become ±1-valued observables through `n`
//! anticommuting gamma matrices of size `2^⌊n/2⌋` built from Pauli tensor
//! products: Alice measures `Σ_k a_k γ_k`, Bob `Σ_k b_k γ_kᵗ`. On the
//! maximally entangled state their correlations are exactly `a·b` and all
//! single-party expectations vanish. [`extract_vectors`] goes the other way,
//! turning any observables and pure state into real unit vectors whose dot
//! products are the correlations.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bell::BellMatrix;
use crate::error::{Error, Result};
use crate::vectors::VectorStrategy;

/// Largest ambient dimension accepted by [`gamma_basis`] (`dim_h ≤ 256`).
pub const MAX_GAMMA_N: usize = 16;

/// Tolerance on vector norms and observable squares supplied by callers.
pub const INPUT_TOL: f64 = 1e-9;

/// Largest imaginary part tolerated in a correlation.
pub const IMAG_TOL: f64 = 1e-12;

/// Tolerance between the state-contraction and trace evaluations.
pub const PATH_TOL: f64 = 1e-11;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = ComplexMatrix::zeros(n, n);
        for k in 0..n {
            m.data[k * n + k] = ONE;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}×{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMatrix(
                "complex matrix has non-finite entries".into(),
            ));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn pauli_x() -> Self {
        ComplexMatrix {
            rows: 2,
            cols: 2,
            data: vec![ZERO, ONE, ONE, ZERO],
        }
    }

    pub fn pauli_y() -> Self {
        ComplexMatrix {
            rows: 2,
            cols: 2,
            data: vec![ZERO, -I, I, ZERO],
        }
    }

    pub fn pauli_z() -> Self {
        ComplexMatrix {
            rows: 2,
            cols: 2,
            data: vec![ONE, ZERO, ZERO, -ONE],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut data = vec![ZERO; rows * cols];
        for r1 in 0..self.rows {
            for c1 in 0..self.cols {
                let s = self.get(r1, c1);
                if s == ZERO {
                    continue;
                }
                for r2 in 0..other.rows {
                    for c2 in 0..other.cols {
                        data[(r1 * other.rows + r2) * cols + c1 * other.cols + c2] =
                            s * other.get(r2, c2);
                    }
                }
            }
        }
        ComplexMatrix { rows, cols, data }
    }

    pub fn transpose(&self) -> ComplexMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            data.extend((0..self.rows).map(|r| self.get(r, c)));
        }
        ComplexMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        let mut t = self.transpose();
        t.data.iter_mut().for_each(|z| *z = z.conj());
        t
    }

    pub fn scale(&self, s: f64) -> ComplexMatrix {
        ComplexMatrix {
            data: self.data.iter().map(|z| z * s).collect(),
            ..*self
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|k| self.get(k, k)).sum()
    }

    /// `max |self - other|` entrywise; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// `max |self² - 1|` entrywise.
    pub fn involution_error(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (self * self).max_abs_diff(&ComplexMatrix::identity(self.rows))
    }

    /// Entries as `[re, im]` pairs, row-major.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        self.data.iter().map(|z| [z.re, z.im]).collect()
    }

    pub fn from_pairs(dim: usize, pairs: &[[f64; 2]]) -> Result<Self> {
        ComplexMatrix::from_vec(
            dim,
            dim,
            pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect(),
        )
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shape mismatch"
        );
        ComplexMatrix {
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
            ..*self
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let s = self.get(r, k);
                if s == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[r * rhs.cols..(r + 1) * rhs.cols];
                for (d, x) in dst.iter_mut().zip(row) {
                    *d += s * x;
                }
            }
        }
        out
    }
}

/// `n` anticommuting Hermitian matrices of size `2^⌊n/2⌋`.
#[derive(Debug, Clone)]
pub struct CliffordBasis {
    n: usize,
    dim_h: usize,
    gammas: Vec<ComplexMatrix>,
}

/// Builds `γ_1 … γ_n` as tensor products of `k = ⌊n/2⌋` Pauli factors:
/// `γ_{2p+1} = σ_z^{⊗p} ⊗ σ_x ⊗ 1…`, `γ_{2p+2} = σ_z^{⊗p} ⊗ σ_y ⊗ 1…`, and
/// for odd `n` the last one is `σ_z^{⊗k}`.
pub fn gamma_basis(n: usize) -> Result<CliffordBasis> {
    if !(1..=MAX_GAMMA_N).contains(&n) {
        return Err(Error::OutOfRange {
            what: "gamma basis dimension n",
            value: n,
            min: 1,
            max: MAX_GAMMA_N,
        });
    }
    let k = n / 2;
    let factors_for = |m: usize| -> Vec<ComplexMatrix> {
        (0..k)
            .map(|pos| {
                if m == 2 * k || pos < m / 2 {
                    ComplexMatrix::pauli_z()
                } else if pos == m / 2 {
                    if m.is_multiple_of(2) {
                        ComplexMatrix::pauli_x()
                    } else {
                        ComplexMatrix::pauli_y()
                    }
                } else {
                    ComplexMatrix::identity(2)
                }
            })
            .collect()
    };
    let gammas = (0..n)
        .map(|m| {
            factors_for(m)
                .iter()
                .fold(ComplexMatrix::identity(1), |acc, f| acc.kron(f))
        })
        .collect();
    Ok(CliffordBasis {
        n,
        dim_h: 1 << k,
        gammas,
    })
}

impl CliffordBasis {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn gammas(&self) -> &[ComplexMatrix] {
        &self.gammas
    }

    /// Largest deviation from `{γ_i, γ_j} = 2δ_ij·1`, Hermiticity,
    /// tracelessness and `Tr(γ_i γ_j) = dim_h·δ_ij`, in that order.
    pub fn invariant_errors(&self) -> [f64; 4] {
        let id = ComplexMatrix::identity(self.dim_h);
        let zero = ComplexMatrix::zeros(self.dim_h, self.dim_h);
        let mut anti: f64 = 0.0;
        let mut trace_orth: f64 = 0.0;
        for (i, gi) in self.gammas.iter().enumerate() {
            for (j, gj) in self.gammas.iter().enumerate() {
                let prod = gi * gj;
                let ac = &prod + &(gj * gi);
                let target = if i == j { id.scale(2.0) } else { zero.clone() };
                anti = anti.max(ac.max_abs_diff(&target));
                let expected = if i == j { self.dim_h as f64 } else { 0.0 };
                trace_orth = trace_orth.max((prod.trace() - expected).norm());
            }
        }
        let herm = self
            .gammas
            .iter()
            .map(ComplexMatrix::hermiticity_error)
            .fold(0.0, f64::max);
        // a single scalar gamma (n = 1) is the identity and cannot be traceless
        let traceless = if self.dim_h == 1 {
            0.0
        } else {
            self.gammas
                .iter()
                .map(|g| g.trace().norm())
                .fold(0.0, f64::max)
        };
        [anti, herm, traceless, trace_orth]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Alice,
    Bob,
}

/// `Σ_k v_k γ_k` for Alice, `Σ_k v_k γ_kᵗ` (plain transpose) for Bob.
pub fn observable_from_vector(
    v: &[f64],
    basis: &CliffordBasis,
    side: Side,
) -> Result<ComplexMatrix> {
    if v.len() != basis.n {
        return Err(Error::DimensionMismatch(format!(
            "vector has length {}, basis has n = {}",
            v.len(),
            basis.n
        )));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > INPUT_TOL {
        return Err(Error::NotUnit { index: 0, norm });
    }
    let mut out = ComplexMatrix::zeros(basis.dim_h, basis.dim_h);
    for (&c, g) in v.iter().zip(&basis.gammas) {
        if c == 0.0 {
            continue;
        }
        let term = match side {
            Side::Alice => g.scale(c),
            Side::Bob => g.transpose().scale(c),
        };
        out = &out + &term;
    }
    Ok(out)
}

/// `(1/√D) Σ_k |kk⟩` as a vector of length `D²` (index `k·D + l` for `|kl⟩`).
pub fn maximally_entangled_state(dim_h: usize) -> Vec<Complex64> {
    let amp = Complex64::new(1.0 / (dim_h as f64).sqrt(), 0.0);
    let mut psi = vec![ZERO; dim_h * dim_h];
    for k in 0..dim_h {
        psi[k * dim_h + k] = amp;
    }
    psi
}

/// Observables for both parties on a shared `C^D ⊗ C^D` pure state.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRealization {
    dim_h: usize,
    state: Vec<Complex64>,
    alice_obs: Vec<ComplexMatrix>,
    bob_obs: Vec<ComplexMatrix>,
}

#[derive(Serialize, Deserialize)]
struct RealizationFile {
    dim_h: usize,
    alice_obs: Vec<Vec<[f64; 2]>>,
    bob_obs: Vec<Vec<[f64; 2]>>,
    state: Vec<[f64; 2]>,
}

impl QuantumRealization {
    /// Checks shapes only; observable properties are checked by
    /// [`verify_realization`] and [`extract_vectors`].
    pub fn new(
        dim_h: usize,
        state: Vec<Complex64>,
        alice_obs: Vec<ComplexMatrix>,
        bob_obs: Vec<ComplexMatrix>,
    ) -> Result<Self> {
        if dim_h == 0 || state.len() != dim_h * dim_h {
            return Err(Error::DimensionMismatch(format!(
                "state has {} amplitudes, expected dim_h² = {}",
                state.len(),
                dim_h * dim_h
            )));
        }
        for (who, obs) in [("alice", &alice_obs), ("bob", &bob_obs)] {
            if let Some(k) = obs.iter().position(|o| o.rows != dim_h || o.cols != dim_h) {
                return Err(Error::DimensionMismatch(format!(
                    "{who} observable {k} is not {dim_h}×{dim_h}"
                )));
            }
        }
        Ok(QuantumRealization {
            dim_h,
            state,
            alice_obs,
            bob_obs,
        })
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn state(&self) -> &[Complex64] {
        &self.state
    }

    pub fn alice_obs(&self) -> &[ComplexMatrix] {
        &self.alice_obs
    }

    pub fn bob_obs(&self) -> &[ComplexMatrix] {
        &self.bob_obs
    }

    fn observable(&self, side: Side, index: usize) -> Result<&ComplexMatrix> {
        let list = match side {
            Side::Alice => &self.alice_obs,
            Side::Bob => &self.bob_obs,
        };
        list.get(index).ok_or_else(|| {
            Error::DimensionMismatch(format!(
                "{side:?} index {index} out of range (have {})",
                list.len()
            ))
        })
    }

    /// Whether the state is exactly `|Φ⁺⟩` for this `dim_h`.
    pub fn is_maximally_entangled(&self) -> bool {
        self.state == maximally_entangled_state(self.dim_h)
    }

    /// State reshaped as the `D × D` coefficient matrix `Ψ_kl`.
    fn state_matrix(&self) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.dim_h,
            cols: self.dim_h,
            data: self.state.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let file = RealizationFile {
            dim_h: self.dim_h,
            alice_obs: self.alice_obs.iter().map(ComplexMatrix::to_pairs).collect(),
            bob_obs: self.bob_obs.iter().map(ComplexMatrix::to_pairs).collect(),
            state: self.state.iter().map(|z| [z.re, z.im]).collect(),
        };
        serde_json::to_string_pretty(&file).expect("realization serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: RealizationFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        let to_obs = |list: &[Vec<[f64; 2]>], who: &str| -> Result<Vec<ComplexMatrix>> {
            list.iter()
                .enumerate()
                .map(|(k, pairs)| {
                    ComplexMatrix::from_pairs(file.dim_h, pairs).map_err(|e| Error::Parse {
                        location: format!("field `{who}[{k}]`"),
                        message: e.to_string(),
                    })
                })
                .collect()
        };
        let alice = to_obs(&file.alice_obs, "alice_obs")?;
        let bob = to_obs(&file.bob_obs, "bob_obs")?;
        let state = file
            .state
            .iter()
            .map(|p| Complex64::new(p[0], p[1]))
            .collect();
        QuantumRealization::new(file.dim_h, state, alice, bob)
    }
}

/// Gamma-matrix realization of a strategy at its own ambient dimension.
pub fn realize_strategy(s: &VectorStrategy) -> Result<QuantumRealization> {
    let basis = gamma_basis(s.dim())?;
    let alice = s
        .a_vectors()
        .iter()
        .map(|v| observable_from_vector(v, &basis, Side::Alice))
        .collect::<Result<Vec<_>>>()?;
    let bob = s
        .b_vectors()
        .iter()
        .map(|v| observable_from_vector(v, &basis, Side::Bob))
        .collect::<Result<Vec<_>>>()?;
    QuantumRealization::new(
        basis.dim_h,
        maximally_entangled_state(basis.dim_h),
        alice,
        bob,
    )
}

/// `⟨ψ|X|ψ⟩` where `X|ψ⟩` is given as a coefficient matrix.
fn braket(psi: &ComplexMatrix, x_psi: &ComplexMatrix) -> Complex64 {
    psi.data
        .iter()
        .zip(&x_psi.data)
        .map(|(p, q)| p.conj() * q)
        .sum()
}

/// `⟨ψ|A_i ⊗ B_j|ψ⟩`, via `(A ⊗ B)|ψ⟩ ↔ A Ψ Bᵗ`.
///
/// On `|Φ⁺⟩` the value is also computed as `Tr(A_i B_jᵗ)/D` and the two
/// must agree within [`PATH_TOL`].
pub fn joint_correlation(r: &QuantumRealization, i: usize, j: usize) -> Result<f64> {
    let a = r.observable(Side::Alice, i)?;
    let b = r.observable(Side::Bob, j)?;
    let psi = r.state_matrix();
    let value = braket(&psi, &(&(a * &psi) * &b.transpose()));
    if value.im.abs() > IMAG_TOL {
        return Err(Error::Consistency(format!(
            "correlation ({i}, {j}) has imaginary part {:e}",
            value.im
        )));
    }
    if r.is_maximally_entangled() {
        let via_trace = (a * &b.transpose()).trace() / r.dim_h as f64;
        if (via_trace - value).norm() > PATH_TOL {
            return Err(Error::Consistency(format!(
                "correlation ({i}, {j}): contraction {} vs trace {}",
                value.re, via_trace.re
            )));
        }
    }
    Ok(value.re)
}

/// Full `m_a × m_b` correlation table.
pub fn correlation_table(r: &QuantumRealization) -> Result<Vec<Vec<f64>>> {
    (0..r.alice_obs.len())
        .map(|i| {
            (0..r.bob_obs.len())
                .map(|j| joint_correlation(r, i, j))
                .collect()
        })
        .collect()
}

/// Single-party expectation `⟨ψ|A_i ⊗ 1|ψ⟩` or `⟨ψ|1 ⊗ B_j|ψ⟩`.
pub fn marginal(r: &QuantumRealization, side: Side, index: usize) -> Result<f64> {
    let obs = r.observable(side, index)?;
    let psi = r.state_matrix();
    let applied = match side {
        Side::Alice => obs * &psi,
        Side::Bob => &psi * &obs.transpose(),
    };
    Ok(braket(&psi, &applied).re)
}

/// `Σ_ij M_ij ⟨α_i β_j⟩`.
pub fn quantum_bell_value(m: &BellMatrix, r: &QuantumRealization) -> Result<f64> {
    if r.alice_obs.len() != m.m_a() || r.bob_obs.len() != m.m_b() {
        return Err(Error::DimensionMismatch(format!(
            "realization has ({}, {}) observables, matrix is {}×{}",
            r.alice_obs.len(),
            r.bob_obs.len(),
            m.m_a(),
            m.m_b()
        )));
    }
    let mut total = 0.0;
    for i in 0..m.m_a() {
        for j in 0..m.m_b() {
            let mij = m.get(i, j);
            if mij != 0.0 {
                total += mij * joint_correlation(r, i, j)?;
            }
        }
    }
    Ok(total)
}

fn interleave(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|c| [c.re, c.im]).collect()
}

type RealVectors = Vec<Vec<f64>>;

/// Real unit vectors in `R^{2D²}` reproducing the correlations of the given
/// observables on `state`: `|a_i⟩ = (A_i ⊗ 1)|ψ⟩`, `|b_j⟩ = (1 ⊗ B_j)|ψ⟩`,
/// flattened as `(Re₁, Im₁, Re₂, Im₂, …)`.
pub fn extract_vectors(
    state: &[Complex64],
    alice_obs: &[ComplexMatrix],
    bob_obs: &[ComplexMatrix],
) -> Result<(RealVectors, RealVectors)> {
    let dim_h = alice_obs
        .first()
        .or_else(|| bob_obs.first())
        .map(ComplexMatrix::rows)
        .ok_or_else(|| Error::NotObservable("no observables supplied".into()))?;
    let r = QuantumRealization::new(dim_h, state.to_vec(), alice_obs.to_vec(), bob_obs.to_vec())?;
    let norm2: f64 = state.iter().map(Complex64::norm_sqr).sum();
    if (norm2.sqrt() - 1.0).abs() > INPUT_TOL {
        return Err(Error::NotObservable(format!(
            "state has norm {}",
            norm2.sqrt()
        )));
    }
    for (who, list) in [("alice", alice_obs), ("bob", bob_obs)] {
        for (k, o) in list.iter().enumerate() {
            let sq = o.involution_error();
            let herm = o.hermiticity_error();
            if sq > INPUT_TOL || herm > INPUT_TOL {
                return Err(Error::NotObservable(format!(
                    "{who} observable {k}: |O² - 1| = {sq:e}, |O - O†| = {herm:e}"
                )));
            }
        }
    }
    let psi = r.state_matrix();
    let a = alice_obs
        .iter()
        .map(|o| interleave(&(o * &psi).data))
        .collect();
    let b = bob_obs
        .iter()
        .map(|o| interleave(&(&psi * &o.transpose()).data))
        .collect();
    Ok((a, b))
}

/// Outcome of checking a realization.
#[derive(Debug, Clone, Serialize)]
pub struct RealizationCheck {
    pub dim_h: usize,
    pub state_norm_error: f64,
    pub max_involution_error: f64,
    pub max_hermiticity_error: f64,
    pub max_abs_marginal: f64,
    pub correlations: Vec<Vec<f64>>,
    /// Largest `|⟨α_iβ_j⟩ - a_i·b_j|` against the extracted real vectors.
    pub max_extraction_error: f64,
    pub bell_value: Option<f64>,
}

impl RealizationCheck {
    /// Observable and extraction checks at the verification tolerance.
    pub fn passed(&self) -> bool {
        self.state_norm_error <= INPUT_TOL
            && self.max_involution_error <= 1e-10
            && self.max_hermiticity_error <= 1e-10
            && self.max_extraction_error <= 1e-10
    }
}

/// Runs every consistency check on a realization and, if a matrix is
/// given, evaluates its Bell value.
pub fn verify_realization(
    r: &QuantumRealization,
    m: Option<&BellMatrix>,
) -> Result<RealizationCheck> {
    let norm2: f64 = r.state.iter().map(Complex64::norm_sqr).sum();
    let all = r.alice_obs.iter().chain(&r.bob_obs);
    let max_involution_error = all
        .clone()
        .map(ComplexMatrix::involution_error)
        .fold(0.0, f64::max);
    let max_hermiticity_error = all
        .map(ComplexMatrix::hermiticity_error)
        .fold(0.0, f64::max);
    let mut max_abs_marginal: f64 = 0.0;
    for k in 0..r.alice_obs.len() {
        max_abs_marginal = max_abs_marginal.max(marginal(r, Side::Alice, k)?.abs());
    }
    for k in 0..r.bob_obs.len() {
        max_abs_marginal = max_abs_marginal.max(marginal(r, Side::Bob, k)?.abs());
    }
    let correlations = correlation_table(r)?;
    let (a, b) = extract_vectors(&r.state, &r.alice_obs, &r.bob_obs)?;
    let mut max_extraction_error: f64 = 0.0;
    for (ai, row) in a.iter().zip(&correlations) {
        for (bj, &c) in b.iter().zip(row) {
            let d: f64 = ai.iter().zip(bj).map(|(x, y)| x * y).sum();
            max_extraction_error = max_extraction_error.max((d - c).abs());
        }
    }
    for v in a.iter().chain(&b) {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        max_extraction_error = max_extraction_error.max((n - 1.0).abs());
    }
    let bell_value = m.map(|m| quantum_bell_value(m, r)).transpose()?;
    Ok(RealizationCheck {
        dim_h: r.dim_h,
        state_norm_error: (norm2.sqrt() - 1.0).abs(),
        max_involution_error,
        max_hermiticity_error,
        max_abs_marginal,
        correlations,
        max_extraction_error,
        bell_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) {
        let d = a.max_abs_diff(b);
        assert!(d <= tol, "matrices differ by {d}");
    }

    #[test]
    fn pauli_basis_for_three() {
        let b = gamma_basis(3).unwrap();
        assert_eq!(b.dim_h(), 2);
        assert_eq!(b.gammas()[0], ComplexMatrix::pauli_x());
        assert_eq!(b.gammas()[1], ComplexMatrix::pauli_y());
        assert_eq!(b.gammas()[2], ComplexMatrix::pauli_z());
    }

    #[test]
    fn dirac_matrices_for_five() {
        let b = gamma_basis(5).unwrap();
        assert_eq!(b.dim_h(), 4);
        let (x, y, z, id) = (
            ComplexMatrix::pauli_x(),
            ComplexMatrix::pauli_y(),
            ComplexMatrix::pauli_z(),
            ComplexMatrix::identity(2),
        );
        let expected = [x.kron(&id), y.kron(&id), z.kron(&x), z.kron(&y), z.kron(&z)];
        for (g, e) in b.gammas().iter().zip(&expected) {
            assert_eq!(g, e);
        }
    }

    #[test]
    fn basis_invariants() {
        for n in 1..=12 {
            let b = gamma_basis(n).unwrap();
            assert_eq!(b.dim_h(), 1 << (n / 2));
            let [anti, herm, traceless, orth] = b.invariant_errors();
            assert!(anti <= 1e-12, "n={n}");
            assert!(herm <= 1e-12, "n={n}");
            assert!(traceless <= 1e-12, "n={n}");
            assert!(orth <= 1e-10, "n={n}");
            for g in b.gammas() {
                assert!(g.involution_error() <= 1e-12);
            }
        }
    }

    #[test]
    fn basis_range() {
        assert!(gamma_basis(0).is_err());
        assert!(gamma_basis(17).is_err());
    }

    #[test]
    fn observables() {
        let b = gamma_basis(3).unwrap();
        let a = observable_from_vector(&[1.0, 0.0, 0.0], &b, Side::Alice).unwrap();
        assert_eq!(a, ComplexMatrix::pauli_x());
        let bob = observable_from_vector(&[0.0, 1.0, 0.0], &b, Side::Bob).unwrap();
        assert_close(&bob, &ComplexMatrix::pauli_y().scale(-1.0), 0.0);
        let v = [0.48, -0.6, 0.64];
        for side in [Side::Alice, Side::Bob] {
            let o = observable_from_vector(&v, &b, side).unwrap();
            assert!(o.involution_error() < 1e-12);
        }
        assert!(observable_from_vector(&[1.0, 0.0], &b, Side::Alice).is_err());
        assert!(observable_from_vector(&[1.0, 1.0, 0.0], &b, Side::Alice).is_err());
    }

    #[test]
    fn one_dimensional_realization() {
        let s = VectorStrategy::new(vec![vec![-1.0]], vec![vec![1.0], vec![-1.0]]).unwrap();
        let r = realize_strategy(&s).unwrap();
        assert_eq!(r.dim_h(), 1);
        assert_eq!(r.state(), &[ONE]);
        assert_eq!(joint_correlation(&r, 0, 0).unwrap(), -1.0);
        assert_eq!(joint_correlation(&r, 0, 1).unwrap(), 1.0);
    }

    #[test]
    fn same_vector_correlates_fully() {
        let e1 = vec![1.0, 0.0, 0.0];
        let s = VectorStrategy::new(vec![e1.clone()], vec![e1]).unwrap();
        let r = realize_strategy(&s).unwrap();
        assert!((joint_correlation(&r, 0, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_marginal_is_one() {
        let r = QuantumRealization::new(
            2,
            maximally_entangled_state(2),
            vec![ComplexMatrix::identity(2)],
            vec![ComplexMatrix::pauli_z()],
        )
        .unwrap();
        assert!((marginal(&r, Side::Alice, 0).unwrap() - 1.0).abs() < 1e-15);
        assert!(marginal(&r, Side::Bob, 0).unwrap().abs() < 1e-15);
        assert!(marginal(&r, Side::Bob, 1).is_err());
    }

    #[test]
    fn sigma_z_pair_extraction() {
        let z = ComplexMatrix::pauli_z();
        let psi = maximally_entangled_state(2);
        let (a, b) =
            extract_vectors(&psi, std::slice::from_ref(&z), std::slice::from_ref(&z)).unwrap();
        assert_eq!(a[0].len(), 8);
        let d: f64 = a[0].iter().zip(&b[0]).map(|(x, y)| x * y).sum();
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn extraction_rejects_non_observables() {
        let psi = maximally_entangled_state(2);
        let bad = ComplexMatrix::pauli_z().scale(2.0);
        assert!(matches!(
            extract_vectors(&psi, &[bad], &[ComplexMatrix::pauli_x()]),
            Err(Error::NotObservable(_))
        ));
        let unnormalized: Vec<Complex64> = psi.iter().map(|z| z * 2.0).collect();
        assert!(extract_vectors(&unnormalized, &[ComplexMatrix::pauli_x()], &[]).is_err());
    }

    #[test]
    fn non_maximal_state_uses_contraction() {
        // |00⟩ with σ_z ⊗ σ_z gives +1; the trace formula would give 1 too,
        // σ_x ⊗ σ_x gives 0 on |00⟩ but 1 via the trace formula.
        let mut psi = vec![ZERO; 4];
        psi[0] = ONE;
        let r = QuantumRealization::new(
            2,
            psi,
            vec![ComplexMatrix::pauli_x()],
            vec![ComplexMatrix::pauli_x()],
        )
        .unwrap();
        assert!(!r.is_maximally_entangled());
        assert_eq!(joint_correlation(&r, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn zero_matrix_bell_value() {
        let s = VectorStrategy::new(vec![vec![0.6, 0.8]], vec![vec![1.0, 0.0]]).unwrap();
        let r = realize_strategy(&s).unwrap();
        let m = BellMatrix::new(1, 1, vec![0.0]).unwrap();
        assert_eq!(quantum_bell_value(&m, &r).unwrap(), 0.0);
        let wrong = BellMatrix::new(2, 1, vec![0.0; 2]).unwrap();
        assert!(quantum_bell_value(&wrong, &r).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = VectorStrategy::new(
            vec![vec![0.0, 0.6, 0.8, 0.0]],
            vec![vec![0.5, 0.5, 0.5, 0.5], vec![0.0, 0.0, 0.0, 1.0]],
        )
        .unwrap();
        let r = realize_strategy(&s).unwrap();
        let back = QuantumRealization::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["dim_h"], 4);
        assert_eq!(v["state"].as_array().unwrap().len(), 16);
        assert_eq!(v["alice_obs"][0].as_array().unwrap().len(), 16);
        assert!(QuantumRealization::from_json(r#"{"dim_h": 2, "alice_obs": [[[1,0]]], "bob_obs": [], "state": [[1,0],[0,0],[0,0],[0,0]]}"#).is_err());
    }
}
