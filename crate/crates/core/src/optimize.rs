//! Dimension-restricted bounds `max Σ_i |Σ_j M_ij b_j|` over `b_j ∈ S^{d-1}`.
//!
//! Each restart draws Bob's vectors uniformly on the sphere and runs a
//! see-saw: Alice answers with her optimal vectors, then Bob answers
//! Alice's in the same way. Both half-steps maximize the bilinear form
//! exactly for the other party's fixed vectors, so the objective never
//! decreases. An optional Nelder-Mead pass over unnormalized vectors can
//! follow. Results are the best found over all restarts; no global
//! optimality certificate is produced.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{classical_bound, BellMatrix, ENUMERATION_LIMIT};
use crate::error::{Error, Result};
use crate::simplex::{nelder_mead, NelderMeadOptions};
use crate::vectors::{
    column_combinations, norm, normalized_or_basis, objective_unchecked, row_combinations,
    VectorStrategy,
};

/// Environment variable consulted for the default RNG seed.
pub const SEED_ENV: &str = "TSIRELSON_SEED";

pub const DEFAULT_SEED: u64 = 0x5eed_2008;

/// Restarts whose values lie within this of the maximum count as ties.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    /// Relative objective improvement below which a see-saw run stops.
    pub seesaw_tol: f64,
    pub max_seesaw_iters: usize,
    pub refine_with_simplex: bool,
    pub rng_seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            restarts: 1000,
            seesaw_tol: 1e-10,
            max_seesaw_iters: 10_000,
            refine_with_simplex: false,
            rng_seed: default_seed(),
        }
    }
}

/// Seed from `TSIRELSON_SEED` if set and parseable, else [`DEFAULT_SEED`].
pub fn default_seed() -> u64 {
    std::env::var(SEED_ENV)
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_SEED)
}

impl OptimizerConfig {
    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts < 1 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        if !(self.seesaw_tol > 0.0 && self.seesaw_tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "seesaw_tol must be positive, got {}",
                self.seesaw_tol
            )));
        }
        if self.max_seesaw_iters < 1 {
            return Err(Error::InvalidConfig(
                "max_seesaw_iters must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Best strategy found for one `(M, d)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundResult {
    pub value: f64,
    pub strategy: VectorStrategy,
    /// Zero when the value came from exact enumeration.
    pub restarts_used: usize,
    pub best_restart_index: usize,
    pub converged: bool,
    pub dim_requested: usize,
    pub dim_effective: usize,
    pub rng_seed: u64,
    /// Final objective of every restart, in restart order.
    pub restart_values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct BoundResultFile {
    value: f64,
    dim_requested: usize,
    dim_effective: usize,
    b_vectors: Vec<Vec<f64>>,
    a_vectors: Vec<Vec<f64>>,
    restarts_used: usize,
    converged: bool,
    rng_seed: u64,
}

impl BoundResult {
    pub fn to_json(&self) -> String {
        let file = BoundResultFile {
            value: self.value,
            dim_requested: self.dim_requested,
            dim_effective: self.dim_effective,
            b_vectors: self.strategy.b_vectors().to_vec(),
            a_vectors: self.strategy.a_vectors().to_vec(),
            restarts_used: self.restarts_used,
            converged: self.converged,
            rng_seed: self.rng_seed,
        };
        serde_json::to_string_pretty(&file).expect("bound serialization cannot fail")
    }

    /// The `k` largest restart values, descending.
    pub fn top_values(&self, k: usize) -> Vec<f64> {
        let mut v = self.restart_values.clone();
        v.sort_by(|a, b| b.total_cmp(a));
        v.truncate(k);
        v
    }
}

/// One see-saw half-step pair on raw vectors; returns the new Bob vectors.
fn seesaw_update(m: &BellMatrix, b: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let a: Vec<Vec<f64>> = row_combinations(m, b, dim)
        .iter()
        .map(|v| normalized_or_basis(v))
        .collect();
    column_combinations(m, &a, dim)
        .iter()
        .map(|w| normalized_or_basis(w))
        .collect()
}

/// Alice's optimal response to the strategy's Bob vectors, followed by
/// Bob's optimal response to those.
pub fn seesaw_step(m: &BellMatrix, s: &VectorStrategy) -> Result<VectorStrategy> {
    if s.b_vectors().len() != m.m_b() || s.a_vectors().len() != m.m_a() {
        return Err(Error::DimensionMismatch(format!(
            "strategy has ({}, {}) vectors, matrix is {}×{}",
            s.a_vectors().len(),
            s.b_vectors().len(),
            m.m_a(),
            m.m_b()
        )));
    }
    let b = seesaw_update(m, s.b_vectors(), s.dim());
    VectorStrategy::from_b_vectors(m, b)
}

#[derive(Debug, Clone)]
pub(crate) struct SeesawRun {
    pub b: Vec<Vec<f64>>,
    pub value: f64,
    pub converged: bool,
    /// Objective after every iteration, starting with the initial value.
    pub trace: Option<Vec<f64>>,
}

/// Iterates the see-saw until the relative improvement drops to `tol` or
/// below. With `tol = 0` it runs until no strict improvement is made.
pub(crate) fn run_seesaw(
    m: &BellMatrix,
    mut b: Vec<Vec<f64>>,
    dim: usize,
    tol: f64,
    max_iters: usize,
    record: bool,
) -> SeesawRun {
    let mut value = objective_unchecked(m, &b, dim);
    let mut trace = record.then(|| vec![value]);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        let next = seesaw_update(m, &b, dim);
        let next_value = objective_unchecked(m, &next, dim);
        iterations += 1;
        let gain = next_value - value;
        if gain >= 0.0 {
            b = next;
            value = next_value;
        }
        if let Some(t) = trace.as_mut() {
            t.push(value);
        }
        if gain <= tol * next_value.abs() {
            converged = true;
            break;
        }
    }
    SeesawRun {
        b,
        value,
        converged,
        trace,
    }
}

/// Objective trajectory of a see-saw run from the given Bob vectors.
pub fn seesaw_trace(
    m: &BellMatrix,
    b_vectors: Vec<Vec<f64>>,
    tol: f64,
    max_iters: usize,
) -> Result<Vec<f64>> {
    let dim = crate::vectors::check_unit_vectors(&b_vectors)?;
    if b_vectors.len() != m.m_b() {
        return Err(Error::DimensionMismatch(format!(
            "{} Bob vectors supplied, matrix has m_b = {}",
            b_vectors.len(),
            m.m_b()
        )));
    }
    let run = run_seesaw(m, b_vectors, dim, tol, max_iters, true);
    Ok(run.trace.unwrap_or_default())
}

/// `count` vectors drawn uniformly from `S^{dim-1}` as normalized Gaussians.
pub fn random_unit_vectors(rng: &mut ChaCha8Rng, count: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
            let n = norm(&v);
            if n > 1e-12 {
                break v.into_iter().map(|x| x / n).collect();
            }
        })
        .collect()
}

/// Random stream for one restart; independent of how restarts are scheduled.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

fn refine(m: &BellMatrix, b: &[Vec<f64>], dim: usize) -> Vec<Vec<f64>> {
    let flat: Vec<f64> = b.iter().flatten().copied().collect();
    let unflatten =
        |x: &[f64]| -> Vec<Vec<f64>> { x.chunks_exact(dim).map(normalized_or_basis).collect() };
    let f = |x: &[f64]| -objective_unchecked(m, &unflatten(x), dim);
    let r = nelder_mead(f, &flat, &NelderMeadOptions::default());
    unflatten(&r.x)
}

struct Outcome {
    b: Vec<Vec<f64>>,
    value: f64,
    converged: bool,
}

fn one_restart(m: &BellMatrix, dim: usize, cfg: &OptimizerConfig, index: usize) -> Outcome {
    let mut rng = restart_rng(cfg.rng_seed, index);
    let start = random_unit_vectors(&mut rng, m.m_b(), dim);
    let mut run = run_seesaw(m, start, dim, cfg.seesaw_tol, cfg.max_seesaw_iters, false);
    if cfg.refine_with_simplex {
        let refined = refine(m, &run.b, dim);
        let again = run_seesaw(m, refined, dim, cfg.seesaw_tol, cfg.max_seesaw_iters, false);
        if again.value >= run.value {
            run = again;
        }
    }
    Outcome {
        b: run.b,
        value: run.value,
        converged: run.converged,
    }
}

/// Best-found `max⟨B_M⟩_d`.
///
/// `d` is clamped to `m_b`, beyond which the bound cannot grow. For an
/// effective dimension of 1 with `m_b` within the enumeration limit the
/// exact classical bound is returned instead of a heuristic one.
pub fn optimize_bound(m: &BellMatrix, d: usize, cfg: &OptimizerConfig) -> Result<BoundResult> {
    cfg.validate()?;
    if d < 1 {
        return Err(Error::InvalidConfig("dimension must be at least 1".into()));
    }
    let dim = d.min(m.m_b());

    if dim == 1 && m.m_b() <= ENUMERATION_LIMIT {
        let (value, witness) = classical_bound(m)?;
        let b = witness
            .b_signs()
            .iter()
            .map(|&s| vec![f64::from(s)])
            .collect();
        let a = witness
            .a_signs()
            .iter()
            .map(|&s| vec![f64::from(s)])
            .collect();
        return Ok(BoundResult {
            value,
            strategy: VectorStrategy::from_parts_unchecked(1, a, b),
            restarts_used: 0,
            best_restart_index: 0,
            converged: true,
            dim_requested: d,
            dim_effective: 1,
            rng_seed: cfg.rng_seed,
            restart_values: vec![value],
        });
    }

    let outcomes: Vec<Outcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|k| one_restart(m, dim, cfg, k))
        .collect();

    let max = outcomes
        .iter()
        .map(|o| o.value)
        .fold(f64::NEG_INFINITY, f64::max);
    let best = outcomes
        .iter()
        .position(|o| o.value >= max - TIE_TOL)
        .expect("at least one restart");
    let mut restart_values: Vec<f64> = outcomes.iter().map(|o| o.value).collect();

    // the winner is polished until it stops improving
    let polished = run_seesaw(
        m,
        outcomes[best].b.clone(),
        dim,
        0.0,
        cfg.max_seesaw_iters,
        false,
    );
    restart_values[best] = polished.value;
    let strategy = VectorStrategy::from_b_vectors(m, polished.b)?;
    let value = objective_unchecked(m, strategy.b_vectors(), dim);

    Ok(BoundResult {
        value,
        strategy,
        restarts_used: cfg.restarts,
        best_restart_index: best,
        converged: outcomes[best].converged,
        dim_requested: d,
        dim_effective: dim,
        rng_seed: cfg.rng_seed,
        restart_values,
    })
}
