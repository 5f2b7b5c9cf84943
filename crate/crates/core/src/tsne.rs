//! Exact t-SNE (O(N^2)) on embedding rows.
//!
//! Affinities are Gaussian conditionals calibrated per point to a target
//! perplexity by bisection on the precision, symmetrized as
//! `(p_j|i + p_i|j) / 2N`. The layout minimizes `KL(P || Q)` where `Q` is the
//! Student-t (one degree of freedom) kernel over the 2-D points, using
//! gradient descent with early exaggeration, momentum and per-coordinate
//! adaptive gains.
//!
//! Every reduction runs in a fixed order (sequential within a row, rows
//! combined by index), so layouts are bitwise identical regardless of the
//! rayon thread count.

// `!(x > bound)` is deliberate: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::vector::squared_distance;

pub const DEFAULT_PERPLEXITY_TOLERANCE: f64 = 1e-5;
pub const MAX_BISECTION_STEPS: usize = 200;
const INIT_STD: f64 = 1e-4;
const MIN_GAIN: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub n_iter: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub momentum_initial: f64,
    pub momentum_final: f64,
    pub momentum_switch_iter: usize,
    pub seed: u64,
    pub min_prob: f64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            n_iter: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            momentum_initial: 0.5,
            momentum_final: 0.8,
            momentum_switch_iter: 250,
            seed: 42,
            min_prob: 1e-12,
        }
    }
}

impl TsneConfig {
    /// Checks the configuration for a corpus of `n` points.
    pub fn validate(&self, n: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.perplexity > 1.0) {
            return bad(format!("perplexity must exceed 1, got {}", self.perplexity));
        }
        let limit = (n as f64 - 1.0) / 3.0;
        if self.perplexity >= limit {
            return bad(format!(
                "perplexity {} too large for {n} points: it must stay below (N-1)/3 = {limit:.3}",
                self.perplexity
            ));
        }
        if self.n_iter < 250 {
            return bad(format!("n_iter must be at least 250, got {}", self.n_iter));
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if !(self.early_exaggeration >= 1.0) {
            return bad(format!(
                "early exaggeration must be >= 1, got {}",
                self.early_exaggeration
            ));
        }
        if self.exaggeration_iters > self.n_iter {
            return bad("exaggeration_iters exceeds n_iter".into());
        }
        if !(self.min_prob > 0.0) {
            return bad("min_prob must be positive".into());
        }
        Ok(())
    }
}

/// Joint affinities `P` (row-major `n x n`).
#[derive(Debug, Clone, PartialEq)]
pub struct Affinities {
    n: usize,
    p: Vec<f64>,
    /// Gaussian bandwidth of each row: `p_j|i ~ exp(-d_ij / (2 sigma_i^2))`.
    pub sigmas: Vec<f64>,
    pub min_prob: f64,
}

impl Affinities {
    /// Wraps an explicit joint matrix after checking symmetry, zero diagonal
    /// and positivity off the diagonal.
    pub fn from_joint(n: usize, p: Vec<f64>, min_prob: f64) -> Result<Self> {
        if p.len() != n * n {
            return Err(Error::DimMismatch {
                expected: n * n,
                actual: p.len(),
            });
        }
        for i in 0..n {
            if p[i * n + i] != 0.0 {
                return Err(Error::InvalidArgument(format!("P[{i},{i}] is not zero")));
            }
            for j in 0..n {
                if p[i * n + j] != p[j * n + i] {
                    return Err(Error::InvalidArgument(format!(
                        "P is not symmetric at ({i},{j})"
                    )));
                }
                if i != j && !(p[i * n + j] > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "P[{i},{j}] is not positive"
                    )));
                }
            }
        }
        Ok(Self {
            n,
            p,
            sigmas: vec![],
            min_prob,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.p[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }
}

/// Conditional distribution of one row for precision `beta`, written into
/// `out` (the diagonal entry stays 0). Returns the perplexity `exp(H)`.
fn conditional_row(dist: &[f64], i: usize, d_min: f64, beta: f64, out: &mut [f64]) -> f64 {
    let mut z = 0.0;
    let mut weighted = 0.0;
    for (j, (&d, o)) in dist.iter().zip(out.iter_mut()).enumerate() {
        if j == i {
            *o = 0.0;
            continue;
        }
        let shifted = d - d_min;
        let e = (-beta * shifted).exp();
        *o = e;
        z += e;
        weighted += e * shifted;
    }
    for o in out.iter_mut() {
        *o /= z;
    }
    // H (nats) = ln Z + beta * E[d - d_min]
    (z.ln() + beta * weighted / z).exp()
}

/// Calibrates one row; returns `(p_.|i, beta)`.
fn calibrate_row(
    dist: &[f64],
    i: usize,
    perplexity: f64,
    tolerance: f64,
) -> Result<(Vec<f64>, f64)> {
    let (mut d_min, mut d_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (j, &d) in dist.iter().enumerate() {
        if j != i {
            d_min = d_min.min(d);
            d_max = d_max.max(d);
        }
    }
    if d_max == d_min {
        return Err(Error::Degenerate { row: i });
    }
    let mut row = vec![0.0; dist.len()];
    let mut beta = 1.0;
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    for _ in 0..MAX_BISECTION_STEPS {
        let perp = conditional_row(dist, i, d_min, beta, &mut row);
        if (perp - perplexity).abs() <= tolerance * perplexity {
            return Ok((row, beta));
        }
        if perp > perplexity {
            // too flat: sharpen
            lo = beta;
            beta = if hi.is_finite() {
                0.5 * (beta + hi)
            } else {
                beta * 2.0
            };
        } else {
            hi = beta;
            beta = 0.5 * (beta + lo);
        }
    }
    Err(Error::Convergence { row: i })
}

/// Calibrated joint affinities of the rows of a row-major `n x dim` matrix,
/// using squared Euclidean distances.
///
/// The perplexity must lie strictly between 1 and `n - 1` (the attainable
/// range); the stricter `(n - 1) / 3` bound is checked by
/// [`TsneConfig::validate`].
pub fn conditional_affinities(
    rows: &[f64],
    dim: usize,
    perplexity: f64,
    tolerance: f64,
    min_prob: f64,
) -> Result<Affinities> {
    if dim == 0 || !rows.len().is_multiple_of(dim) {
        return Err(Error::InvalidArgument(
            "rows length is not a multiple of dim".into(),
        ));
    }
    let n = rows.len() / dim;
    if n < 4 {
        return Err(Error::InvalidArgument(format!(
            "t-SNE needs at least 4 points, got {n}"
        )));
    }
    if !(perplexity > 1.0 && perplexity < (n - 1) as f64) {
        return Err(Error::InvalidArgument(format!(
            "perplexity {perplexity} outside (1, {})",
            n - 1
        )));
    }
    let point = |i: usize| &rows[i * dim..(i + 1) * dim];
    let calibrated: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let dist: Vec<f64> = (0..n)
                .map(|j| squared_distance(point(i), point(j)))
                .collect();
            calibrate_row(&dist, i, perplexity, tolerance)
        })
        .collect::<Result<_>>()?;

    let denom = 2.0 * n as f64;
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = (calibrated[i].0[j] + calibrated[j].0[i]) / denom;
                p[i * n + j] = v.max(min_prob);
            }
        }
    }
    let sigmas = calibrated
        .iter()
        .map(|(_, beta)| (0.5 / beta).sqrt())
        .collect();
    Ok(Affinities {
        n,
        p,
        sigmas,
        min_prob,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneLayout {
    pub y: Vec<[f64; 2]>,
    /// `kl_trace[t]` is `KL(P || Q)` after `t` iterations (length `n_iter + 1`).
    pub kl_trace: Vec<f64>,
    pub config: TsneConfig,
    pub seed: u64,
}

impl TsneLayout {
    /// KL divergence at the end of the early exaggeration phase.
    pub fn kl_after_exaggeration(&self) -> f64 {
        self.kl_trace[self.config.exaggeration_iters]
    }

    pub fn final_kl(&self) -> f64 {
        *self.kl_trace.last().expect("trace is never empty")
    }
}

/// FNV-1a, stable across platforms and toolchains.
fn fnv1a(key: &str) -> u64 {
    key.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Initial position of the point identified by `key`.
fn initial_point(seed: u64, key: &str) -> [f64; 2] {
    let mixed = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ fnv1a(key);
    let mut rng = ChaCha8Rng::seed_from_u64(mixed);
    let normal = Normal::new(0.0, INIT_STD).expect("valid normal");
    [normal.sample(&mut rng), normal.sample(&mut rng)]
}

fn recenter(y: &mut [[f64; 2]]) {
    let n = y.len() as f64;
    let (mut m0, mut m1) = (0.0, 0.0);
    for p in y.iter() {
        m0 += p[0];
        m1 += p[1];
    }
    m0 /= n;
    m1 /= n;
    for p in y.iter_mut() {
        p[0] -= m0;
        p[1] -= m1;
    }
}

#[inline]
fn kernel(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    1.0 / (1.0 + d0 * d0 + d1 * d1)
}

/// Gradient of `KL(exaggeration * P || Q)` and `KL(P || Q)` at `y`.
fn objective_and_gradient(
    p: &Affinities,
    y: &[[f64; 2]],
    exaggeration: f64,
) -> (Vec<[f64; 2]>, f64) {
    let n = y.len();
    let row_sums: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = 0.0;
            for j in 0..n {
                if j != i {
                    s += kernel(y[i], y[j]);
                }
            }
            s
        })
        .collect();
    let z: f64 = row_sums.iter().sum();

    let per_row: Vec<([f64; 2], f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let prow = p.row(i);
            let mut g = [0.0, 0.0];
            let mut kl = 0.0;
            for j in 0..n {
                if j == i {
                    continue;
                }
                let w = kernel(y[i], y[j]);
                let q = w / z;
                let pij = prow[j];
                let coeff = 4.0 * (exaggeration * pij - q) * w;
                g[0] += coeff * (y[i][0] - y[j][0]);
                g[1] += coeff * (y[i][1] - y[j][1]);
                if pij > 0.0 {
                    kl += pij * (pij / q.max(p.min_prob)).ln();
                }
            }
            (g, kl)
        })
        .collect();
    let kl = per_row.iter().map(|r| r.1).sum();
    (per_row.into_iter().map(|r| r.0).collect(), kl)
}

/// Analytic gradient of `KL(P || Q)` with respect to every layout point.
pub fn kl_gradient(p: &Affinities, y: &[[f64; 2]]) -> Result<Vec<[f64; 2]>> {
    check_shape(p, y)?;
    Ok(objective_and_gradient(p, y, 1.0).0)
}

fn check_shape(p: &Affinities, y: &[[f64; 2]]) -> Result<()> {
    if p.n() != y.len() {
        return Err(Error::DimMismatch {
            expected: p.n(),
            actual: y.len(),
        });
    }
    Ok(())
}

/// `KL(P || Q)` with `Q` the normalized Student-t similarities of `y`,
/// floored at `P.min_prob`.
pub fn kl_divergence(p: &Affinities, y: &[[f64; 2]]) -> Result<f64> {
    check_shape(p, y)?;
    Ok(objective_and_gradient(p, y, 1.0).1)
}

/// Indices sorted by key, ties by position. Optimizing in this order makes
/// every floating-point sum independent of the caller's row order.
fn canonical_order<S: AsRef<str>>(keys: &[S]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].as_ref().cmp(keys[b].as_ref()).then(a.cmp(&b)));
    order
}

fn permuted(p: &Affinities, order: &[usize]) -> Affinities {
    let n = p.n;
    let mut out = vec![0.0; n * n];
    for (a, &i) in order.iter().enumerate() {
        for (b, &j) in order.iter().enumerate() {
            out[a * n + b] = p.p[i * n + j];
        }
    }
    Affinities {
        n,
        p: out,
        sigmas: order
            .iter()
            .filter_map(|&i| p.sigmas.get(i).copied())
            .collect(),
        min_prob: p.min_prob,
    }
}

/// Runs the optimization. `keys[i]` identifies point `i` (typically its
/// image id) and seeds its initial position. Points are processed in key
/// order, so permuting the rows of `P` together with `keys` permutes the
/// layout rows and changes nothing else, bit for bit.
pub fn run_tsne<S: AsRef<str>>(
    p: &Affinities,
    config: &TsneConfig,
    keys: &[S],
) -> Result<TsneLayout> {
    let n = p.n();
    config.validate(n)?;
    if keys.len() != n {
        return Err(Error::DimMismatch {
            expected: n,
            actual: keys.len(),
        });
    }
    let order = canonical_order(keys);
    let canonical = permuted(p, &order);
    let sorted_keys: Vec<&str> = order.iter().map(|&i| keys[i].as_ref()).collect();
    let mut layout = optimize(&canonical, config, &sorted_keys)?;
    let mut y = vec![[0.0; 2]; n];
    for (a, &i) in order.iter().enumerate() {
        y[i] = layout.y[a];
    }
    layout.y = y;
    Ok(layout)
}

fn optimize(p: &Affinities, config: &TsneConfig, keys: &[&str]) -> Result<TsneLayout> {
    let n = p.n();
    let mut y: Vec<[f64; 2]> = keys.iter().map(|k| initial_point(config.seed, k)).collect();
    recenter(&mut y);
    let mut velocity = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut kl_trace = Vec::with_capacity(config.n_iter + 1);

    for iter in 0..config.n_iter {
        let exaggeration = if iter < config.exaggeration_iters {
            config.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < config.momentum_switch_iter {
            config.momentum_initial
        } else {
            config.momentum_final
        };
        let (grad, kl) = objective_and_gradient(p, &y, exaggeration);
        kl_trace.push(kl);
        for i in 0..n {
            for d in 0..2 {
                let g = grad[i][d];
                let gain = &mut gains[i][d];
                if (g > 0.0) == (velocity[i][d] > 0.0) {
                    *gain *= 0.8;
                } else {
                    *gain += 0.2;
                }
                *gain = gain.max(MIN_GAIN);
                velocity[i][d] = momentum * velocity[i][d] - config.learning_rate * *gain * g;
                y[i][d] += velocity[i][d];
            }
        }
        recenter(&mut y);
        if y.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite layout at iteration {iter}"
            )));
        }
    }
    let (_, kl) = objective_and_gradient(p, &y, 1.0);
    if !kl.is_finite() {
        return Err(Error::Numeric(
            "non-finite KL divergence after optimization".into(),
        ));
    }
    kl_trace.push(kl);
    Ok(TsneLayout {
        y,
        kl_trace,
        config: config.clone(),
        seed: config.seed,
    })
}

/// Affinities plus optimization for a model's embedding rows, keyed by
/// image id. Rows are calibrated in image-id order too, so a reordered
/// corpus yields the same layout rows, reordered.
pub fn embed(m: &EmbeddingMatrix, config: &TsneConfig) -> Result<TsneLayout> {
    config.validate(m.n_rows())?;
    let order = canonical_order(m.image_ids());
    let sorted: Vec<f64> = order
        .iter()
        .flat_map(|&i| m.row(i).iter().copied())
        .collect();
    let p = conditional_affinities(
        &sorted,
        m.dim(),
        config.perplexity,
        DEFAULT_PERPLEXITY_TOLERANCE,
        config.min_prob,
    )
    .map_err(|e| match e {
        Error::Convergence { row } => Error::Convergence { row: order[row] },
        Error::Degenerate { row } => Error::Degenerate { row: order[row] },
        e => e,
    })?;
    let sorted_keys: Vec<&str> = order.iter().map(|&i| m.image_ids()[i].as_str()).collect();
    let mut layout = run_tsne(&p, config, &sorted_keys)?;
    let mut y = vec![[0.0; 2]; m.n_rows()];
    for (a, &i) in order.iter().enumerate() {
        y[i] = layout.y[a];
    }
    layout.y = y;
    Ok(layout)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_corners_are_symmetric() {
        // each corner has two tied nearest neighbours, so perplexity >= 2
        let rows = [0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        assert!(matches!(
            conditional_affinities(&rows, 2, 1.5, 1e-6, 1e-12),
            Err(Error::Convergence { row: 0 })
        ));
        let p = conditional_affinities(&rows, 2, 2.5, 1e-6, 1e-12).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(p.get(i, j), p.get(j, i));
            }
            assert_eq!(p.get(i, i), 0.0);
            // the two edge neighbours carry equal mass
            let a = p.get(i, (i + 1) % 4);
            let b = p.get(i, (i + 3) % 4);
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
            assert!(a > p.get(i, (i + 2) % 4));
        }
        let total: f64 = p.as_slice().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_distances_are_degenerate() {
        // regular simplex corners: every row sees one distance
        let rows = [
            1.0, 0.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, 0.0, //
            0.0, 0.0, 1.0, 0.0, //
            0.0, 0.0, 0.0, 1.0,
        ];
        assert!(matches!(
            conditional_affinities(&rows, 4, 2.0, 1e-5, 1e-12),
            Err(Error::Degenerate { row: 0 })
        ));
    }

    #[test]
    fn perplexity_outside_attainable_range() {
        let rows: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert!(conditional_affinities(&rows, 2, 4.0, 1e-5, 1e-12).is_err());
        assert!(conditional_affinities(&rows, 2, 1.0, 1e-5, 1e-12).is_err());
    }

    #[test]
    fn config_bounds() {
        let c = TsneConfig::default();
        assert!(c.validate(301).is_ok());
        assert!(c.validate(91).is_err()); // (91-1)/3 = 30
        assert!(TsneConfig {
            n_iter: 100,
            exaggeration_iters: 50,
            ..c.clone()
        }
        .validate(301)
        .is_err());
        assert!(TsneConfig {
            learning_rate: 0.0,
            ..c.clone()
        }
        .validate(301)
        .is_err());
        assert!(TsneConfig {
            exaggeration_iters: 2000,
            ..c
        }
        .validate(301)
        .is_err());
    }

    #[test]
    fn kl_of_self_is_zero() {
        let y = [[0.0, 0.0], [1.0, 0.5], [-0.3, 2.0], [0.7, -1.1]];
        let n = y.len();
        let mut q = vec![0.0; n * n];
        let mut z = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    q[i * n + j] = kernel(y[i], y[j]);
                    z += q[i * n + j];
                }
            }
        }
        q.iter_mut().for_each(|v| *v /= z);
        let p = Affinities::from_joint(n, q, 1e-12).unwrap();
        assert!(kl_divergence(&p, &y).unwrap().abs() < 1e-12);
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a(""), 0xcbf29ce484222325);
        assert_eq!(fnv1a("a"), 0xaf63dc4c8601ec8c);
    }
}
