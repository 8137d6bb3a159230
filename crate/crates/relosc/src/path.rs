//! Discretized periodic Lipschitz paths and the projection that keeps them
//! feasible.
//!
//! A path is stored by its node values on a uniform grid; the closing node
//! is implied (`u_N = u_0`), so periodicity is structural rather than a
//! constraint. Slopes are derived. Feasibility means every interval slope
//! stays inside the speed ball with a small safety margin, which keeps the
//! kinetic kernel and its gradient finite along optimization trajectories.

use crate::la::{max_block_norm, norm};
use crate::model::ProblemInstance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::f64::consts::PI;
use thiserror::Error;

/// Default interior margin on the slope bound.
pub const DEFAULT_MARGIN: f64 = 1e-3;

const DYKSTRA_TOL: f64 = 1e-12;
const DYKSTRA_MAX_SWEEPS: usize = 10_000;
/// Absolute round-off slack accepted when re-validating stored paths.
const VALIDATE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Error)]
pub enum PathError {
    #[error("a path needs at least 4 grid intervals, got {0}")]
    DegenerateGrid(usize),
    #[error("margin must lie in [0, 0.5), got {0}")]
    BadMargin(f64),
    #[error("node buffer of length {len} is not a multiple of dimension {n}")]
    RaggedNodes { len: usize, n: usize },
    #[error("slope {index} has norm {norm} exceeding the bound {bound}")]
    SlopeBound { index: usize, norm: f64, bound: f64 },
    #[error("oscillation bound violated: sup |u| = {sup} > speed*horizon + inf |u| = {allowed}")]
    OscillationBound { sup: f64, allowed: f64 },
    #[error("projection stalled after {sweeps} sweeps (last change {gap:.3e})")]
    ProjectionStalled { sweeps: usize, gap: f64 },
    #[error("path file line {line}: {message}")]
    Csv { line: usize, message: String },
}

/// A feasible discretized periodic path.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicPath {
    dim: usize,
    intervals: usize,
    horizon: f64,
    step: f64,
    speed_bound: f64,
    margin: f64,
    nodes: Vec<f64>,
}

impl PeriodicPath {
    /// Builds a path from flat node storage (`intervals * dim` values) and
    /// validates the feasibility invariants.
    pub fn new(
        horizon: f64,
        dim: usize,
        nodes: Vec<f64>,
        speed_bound: f64,
        margin: f64,
    ) -> Result<PeriodicPath, PathError> {
        if !(0.0..0.5).contains(&margin) {
            return Err(PathError::BadMargin(margin));
        }
        if dim == 0 || nodes.len() % dim != 0 {
            return Err(PathError::RaggedNodes {
                len: nodes.len(),
                n: dim.max(1),
            });
        }
        let intervals = nodes.len() / dim;
        if intervals < 4 {
            return Err(PathError::DegenerateGrid(intervals));
        }
        let step = horizon / intervals as f64;
        let path = PeriodicPath {
            dim,
            intervals,
            horizon,
            step,
            speed_bound,
            margin,
            nodes,
        };
        path.validate()?;
        Ok(path)
    }

    /// A constant path sitting at `point`.
    pub fn constant(
        horizon: f64,
        intervals: usize,
        point: &[f64],
        speed_bound: f64,
        margin: f64,
    ) -> Result<PeriodicPath, PathError> {
        let mut nodes = Vec::with_capacity(intervals * point.len());
        for _ in 0..intervals {
            nodes.extend_from_slice(point);
        }
        PeriodicPath::new(horizon, point.len(), nodes, speed_bound, margin)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn speed_bound(&self) -> f64 {
        self.speed_bound
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    /// Slope on interval `i` (from node `i` to node `i+1 mod N`).
    pub fn slope_into(&self, i: usize, out: &mut [f64]) {
        let a = self.node(i);
        let b = self.node((i + 1) % self.intervals);
        for k in 0..self.dim {
            out[k] = (b[k] - a[k]) / self.step;
        }
    }

    pub fn slopes(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nodes.len()];
        for i in 0..self.intervals {
            let (lo, hi) = (i * self.dim, (i + 1) * self.dim);
            let mut buf = vec![0.0; self.dim];
            self.slope_into(i, &mut buf);
            out[lo..hi].copy_from_slice(&buf);
        }
        out
    }

    /// Largest node norm.
    pub fn sup_norm(&self) -> f64 {
        max_block_norm(&self.nodes, self.dim)
    }

    /// Smallest node norm.
    pub fn inf_norm(&self) -> f64 {
        self.nodes
            .chunks_exact(self.dim)
            .map(norm)
            .fold(f64::INFINITY, f64::min)
    }

    /// Uniform distance between two paths on the same grid.
    pub fn sup_distance(&self, other: &PeriodicPath) -> f64 {
        assert_eq!(self.nodes.len(), other.nodes.len());
        self.nodes
            .chunks_exact(self.dim)
            .zip(other.nodes.chunks_exact(self.dim))
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0_f64, f64::max)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for node in self.nodes.chunks_exact(self.dim) {
            for k in 0..self.dim {
                m[k] += node[k];
            }
        }
        for v in &mut m {
            *v /= self.intervals as f64;
        }
        m
    }

    /// The same path translated by a constant vector. Slopes are unchanged,
    /// so feasibility is preserved.
    pub fn translated(&self, shift: &[f64]) -> PeriodicPath {
        assert_eq!(shift.len(), self.dim);
        let mut out = self.clone();
        for node in out.nodes.chunks_exact_mut(self.dim) {
            for k in 0..self.dim {
                node[k] += shift[k];
            }
        }
        out
    }

    /// Checks all structural invariants: the slope bound (with round-off
    /// slack), slope closure, and the oscillation bound
    /// `sup |u| <= speed * horizon + inf |u|`.
    pub fn validate(&self) -> Result<(), PathError> {
        let bound = self.speed_bound * (1.0 - self.margin);
        let slack = VALIDATE_SLACK * self.speed_bound.max(1.0);
        let mut buf = vec![0.0; self.dim];
        let mut total = vec![0.0; self.dim];
        for i in 0..self.intervals {
            self.slope_into(i, &mut buf);
            let s = norm(&buf);
            if s > bound + slack {
                return Err(PathError::SlopeBound {
                    index: i,
                    norm: s,
                    bound,
                });
            }
            for k in 0..self.dim {
                total[k] += buf[k];
            }
        }
        // closure: slopes telescope back to the start up to round-off
        let scale = self.sup_norm().max(1.0) / self.step;
        debug_assert!(
            norm(&total) <= 1e-9 * scale * self.intervals as f64,
            "slope closure drifted: {total:?}"
        );
        let sup = self.sup_norm();
        let allowed = self.speed_bound * self.horizon + self.inf_norm();
        if sup > allowed + slack {
            return Err(PathError::OscillationBound { sup, allowed });
        }
        Ok(())
    }

    /// CSV dump: header `i,t,x1..xn`, one row per node, plus a repeated
    /// closure row for node 0 at `t = horizon`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,t");
        for k in 1..=self.dim {
            out.push_str(&format!(",x{k}"));
        }
        out.push('\n');
        for i in 0..=self.intervals {
            let node = self.node(i % self.intervals);
            let t = if i == self.intervals {
                self.horizon
            } else {
                self.time(i)
            };
            out.push_str(&format!("{i},{t}"));
            for v in node {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses a CSV dump produced by [`to_csv`](Self::to_csv) and re-validates
    /// every invariant.
    pub fn from_csv(text: &str, speed_bound: f64, margin: f64) -> Result<PeriodicPath, PathError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(PathError::Csv {
            line: 1,
            message: "empty file".into(),
        })?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 3 || cols[0] != "i" || cols[1] != "t" {
            return Err(PathError::Csv {
                line: 1,
                message: "expected header i,t,x1..".into(),
            });
        }
        let dim = cols.len() - 2;
        let mut rows: Vec<(usize, f64, Vec<f64>)> = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != dim + 2 {
                return Err(PathError::Csv {
                    line: idx + 1,
                    message: format!("expected {} columns, got {}", dim + 2, parts.len()),
                });
            }
            let parse = |s: &str| -> Result<f64, PathError> {
                s.trim().parse().map_err(|_| PathError::Csv {
                    line: idx + 1,
                    message: format!("bad number `{s}`"),
                })
            };
            let i: usize = parts[0].trim().parse().map_err(|_| PathError::Csv {
                line: idx + 1,
                message: format!("bad index `{}`", parts[0]),
            })?;
            let t = parse(parts[1])?;
            let xs = parts[2..].iter().map(|s| parse(s)).collect::<Result<_, _>>()?;
            rows.push((i, t, xs));
        }
        if rows.len() < 5 {
            return Err(PathError::Csv {
                line: rows.len() + 1,
                message: "too few rows for a periodic path".into(),
            });
        }
        let intervals = rows.len() - 1;
        let horizon = rows[intervals].1;
        for (expect, row) in rows.iter().enumerate() {
            if row.0 != expect {
                return Err(PathError::Csv {
                    line: expect + 2,
                    message: format!("row index {} out of order", row.0),
                });
            }
        }
        let closure_gap: f64 = rows[0]
            .2
            .iter()
            .zip(&rows[intervals].2)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if closure_gap > 1e-12 {
            return Err(PathError::Csv {
                line: intervals + 2,
                message: format!("closure row differs from row 0 by {closure_gap:.3e}"),
            });
        }
        let mut nodes = Vec::with_capacity(intervals * dim);
        for row in &rows[..intervals] {
            nodes.extend_from_slice(&row.2);
        }
        PeriodicPath::new(horizon, dim, nodes, speed_bound, margin)
    }
}

impl Serialize for PeriodicPath {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("PeriodicPath", 6)?;
        s.serialize_field("dim", &self.dim)?;
        s.serialize_field("intervals", &self.intervals)?;
        s.serialize_field("horizon", &self.horizon)?;
        s.serialize_field("speed_bound", &self.speed_bound)?;
        s.serialize_field("margin", &self.margin)?;
        let rows: Vec<&[f64]> = self.nodes.chunks_exact(self.dim).collect();
        s.serialize_field("nodes", &rows)?;
        s.end()
    }
}

/// Euclidean projection of a raw node sequence onto the feasible set, taken
/// in slope space with the node mean held fixed.
///
/// The slope vector is projected onto the intersection of the per-interval
/// speed balls (radius `speed_bound * (1 - margin)`) with the zero-block-sum
/// hyperplane by Dykstra's alternating scheme; the path is then rebuilt
/// around the mean of the raw input. Already-feasible input is returned
/// bit-for-bit unchanged.
pub fn project_feasible(
    horizon: f64,
    dim: usize,
    raw_nodes: &[f64],
    speed_bound: f64,
    margin: f64,
) -> Result<PeriodicPath, PathError> {
    if !(0.0..0.5).contains(&margin) {
        return Err(PathError::BadMargin(margin));
    }
    if dim == 0 || raw_nodes.len() % dim != 0 {
        return Err(PathError::RaggedNodes {
            len: raw_nodes.len(),
            n: dim.max(1),
        });
    }
    let intervals = raw_nodes.len() / dim;
    if intervals < 4 {
        return Err(PathError::DegenerateGrid(intervals));
    }
    let step = horizon / intervals as f64;
    let radius = speed_bound * (1.0 - margin);

    let mut slopes = vec![0.0; raw_nodes.len()];
    for i in 0..intervals {
        let a = &raw_nodes[i * dim..(i + 1) * dim];
        let b = &raw_nodes[((i + 1) % intervals) * dim..((i + 1) % intervals + 1) * dim];
        for k in 0..dim {
            slopes[i * dim + k] = (b[k] - a[k]) / step;
        }
    }

    if max_block_norm(&slopes, dim) <= radius {
        return PeriodicPath::new(horizon, dim, raw_nodes.to_vec(), speed_bound, margin);
    }

    dykstra_ball_hyperplane(&mut slopes, dim, radius)?;

    // rebuild nodes around the preserved mean
    let mut mean = vec![0.0; dim];
    for node in raw_nodes.chunks_exact(dim) {
        for k in 0..dim {
            mean[k] += node[k];
        }
    }
    for v in &mut mean {
        *v /= intervals as f64;
    }
    let mut nodes = vec![0.0; raw_nodes.len()];
    for i in 1..intervals {
        for k in 0..dim {
            nodes[i * dim + k] = nodes[(i - 1) * dim + k] + step * slopes[(i - 1) * dim + k];
        }
    }
    let mut built_mean = vec![0.0; dim];
    for node in nodes.chunks_exact(dim) {
        for k in 0..dim {
            built_mean[k] += node[k];
        }
    }
    for i in 0..intervals {
        for k in 0..dim {
            nodes[i * dim + k] += mean[k] - built_mean[k] / intervals as f64;
        }
    }
    PeriodicPath::new(horizon, dim, nodes, speed_bound, margin)
}

/// Dykstra alternation between the product of balls and the zero-sum
/// hyperplane, in place. Terminates when a full sweep moves the iterate by
/// less than `1e-12` in the uniform norm.
fn dykstra_ball_hyperplane(slopes: &mut [f64], dim: usize, radius: f64) -> Result<(), PathError> {
    let blocks = slopes.len() / dim;
    let mut x = slopes.to_vec();
    let mut p = vec![0.0; x.len()];
    let mut q = vec![0.0; x.len()];
    let mut y = vec![0.0; x.len()];
    let mut gap = f64::INFINITY;
    for _sweep in 0..DYKSTRA_MAX_SWEEPS {
        for i in 0..x.len() {
            y[i] = x[i] + p[i];
        }
        for b in 0..blocks {
            let blk = &mut y[b * dim..(b + 1) * dim];
            let nrm = norm(blk);
            if nrm > radius {
                let scale = radius / nrm;
                for v in blk.iter_mut() {
                    *v *= scale;
                }
            }
        }
        for i in 0..x.len() {
            p[i] = x[i] + p[i] - y[i];
        }
        let mut z: Vec<f64> = y.iter().zip(&q).map(|(a, b)| a + b).collect();
        let mut block_mean = vec![0.0; dim];
        for b in 0..blocks {
            for k in 0..dim {
                block_mean[k] += z[b * dim + k];
            }
        }
        for v in &mut block_mean {
            *v /= blocks as f64;
        }
        for b in 0..blocks {
            for k in 0..dim {
                z[b * dim + k] -= block_mean[k];
            }
        }
        for i in 0..x.len() {
            q[i] = y[i] + q[i] - z[i];
        }
        gap = x
            .iter()
            .zip(&z)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x.copy_from_slice(&z);
        if gap < DYKSTRA_TOL {
            // final clip: the hyperplane step may poke a hair outside a ball
            for b in 0..blocks {
                let blk = &mut x[b * dim..(b + 1) * dim];
                let nrm = norm(blk);
                if nrm > radius {
                    let scale = radius / nrm;
                    for v in blk.iter_mut() {
                        *v *= scale;
                    }
                }
            }
            slopes.copy_from_slice(&x);
            return Ok(());
        }
    }
    Err(PathError::ProjectionStalled {
        sweeps: DYKSTRA_MAX_SWEEPS,
        gap,
    })
}

/// Draws a random feasible start: a constant at a uniform point of the
/// sampling box plus one to three random Fourier modes, then projected.
/// Deterministic for a fixed seed.
pub fn sample_path(
    instance: &ProblemInstance,
    intervals: usize,
    seed: u64,
    box_radius: f64,
) -> Result<PeriodicPath, PathError> {
    let amp = instance.speed_bound() * instance.horizon() / 8.0;
    sample_path_with_amplitude(instance, intervals, seed, box_radius, amp)
}

pub(crate) fn sample_path_with_amplitude(
    instance: &ProblemInstance,
    intervals: usize,
    seed: u64,
    box_radius: f64,
    amplitude: f64,
) -> Result<PeriodicPath, PathError> {
    let n = instance.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base: Vec<f64> = (0..n)
        .map(|_| rng.random_range(-box_radius..=box_radius))
        .collect();
    let mut nodes = Vec::with_capacity(intervals * n);
    for _ in 0..intervals {
        nodes.extend_from_slice(&base);
    }
    let n_modes = rng.random_range(1..=3usize);
    for _ in 0..n_modes {
        let freq = rng.random_range(1..=3usize) as f64;
        let phase: f64 = rng.random_range(0.0..2.0 * PI);
        let coeff: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-amplitude..=amplitude))
            .collect();
        for i in 0..intervals {
            let angle = 2.0 * PI * freq * i as f64 / intervals as f64 + phase;
            let c = angle.cos();
            for k in 0..n {
                nodes[i * n + k] += coeff[k] * c;
            }
        }
    }
    project_feasible(
        instance.horizon(),
        n,
        &nodes,
        instance.speed_bound(),
        DEFAULT_MARGIN,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ProblemInstance;
    use proptest::prelude::*;

    #[test]
    fn feasible_input_is_returned_unchanged() {
        let nodes = vec![0.0, 0.1, 0.15, 0.05];
        let path = project_feasible(1.0, 1, &nodes, 1.0, 1e-3).unwrap();
        for (a, b) in nodes.iter().zip(path.nodes()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn alternating_spikes_clip_to_unit_slopes() {
        // slopes +-8 alternating; the projection clips them to +-1 exactly
        let raw = vec![0.0, 2.0, 0.0, 2.0];
        let path = project_feasible(1.0, 1, &raw, 1.0, 0.0).unwrap();
        let slopes = path.slopes();
        for (i, s) in slopes.iter().enumerate() {
            let want = if i % 2 == 0 { 1.0 } else { -1.0 };
            assert!((s - want).abs() < 1e-9, "slope {i} = {s}");
        }
        // mean preserved
        let mean = path.mean()[0];
        assert!((mean - 1.0).abs() < 1e-9);
        // resulting nodes alternate 0.875 / 1.125
        assert!((path.node(0)[0] - 0.875).abs() < 1e-9);
        assert!((path.node(1)[0] - 1.125).abs() < 1e-9);
    }

    #[test]
    fn projection_is_idempotent() {
        let raw = vec![0.0, 3.0, -1.0, 2.0, 0.5, -2.0];
        let once = project_feasible(1.0, 1, &raw, 1.0, 1e-3).unwrap();
        let twice = project_feasible(1.0, 1, once.nodes(), 1.0, 1e-3).unwrap();
        assert!(once.sup_distance(&twice) < 1e-10);
    }

    #[test]
    fn degenerate_grid_is_rejected() {
        assert!(matches!(
            project_feasible(1.0, 1, &[0.0, 1.0, 0.0], 1.0, 1e-3),
            Err(PathError::DegenerateGrid(3))
        ));
    }

    #[test]
    fn kkt_structure_of_scalar_projection() {
        // active slopes sit exactly at the bound; inactive ones share the
        // same shift away from the input
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let n_int = 6;
            let raw: Vec<f64> = (0..n_int).map(|_| rng.random_range(-3.0..3.0)).collect();
            let path = project_feasible(1.0, 1, &raw, 1.0, 0.0).unwrap();
            let h = path.step();
            let mut raw_slopes = vec![0.0; n_int];
            for i in 0..n_int {
                raw_slopes[i] = (raw[(i + 1) % n_int] - raw[i]) / h;
            }
            let got = path.slopes();
            let mut shift = None;
            for i in 0..n_int {
                if got[i].abs() < 1.0 - 1e-9 {
                    let nu = raw_slopes[i] - got[i];
                    if let Some(prev) = shift {
                        assert!((nu - prev as f64).abs() < 1e-8, "multiplier not common");
                    }
                    shift = Some(nu);
                } else {
                    assert!((got[i].abs() - 1.0).abs() < 1e-8, "active slope off bound");
                }
            }
        }
    }

    #[test]
    fn monte_carlo_optimality() {
        use rand::{Rng, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let raw: Vec<f64> = (0..8).map(|_| rng.random_range(-4.0..4.0)).collect();
        let path = project_feasible(1.0, 1, &raw, 1.0, 0.0).unwrap();
        let h = path.step();
        let raw_slopes: Vec<f64> = (0..8)
            .map(|i| (raw[(i + 1) % 8] - raw[i]) / h)
            .collect();
        let got = path.slopes();
        let d_opt: f64 = raw_slopes
            .iter()
            .zip(&got)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        for _ in 0..10_000 {
            // random feasible competitor: clipped then mean-centered
            let mut cand: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mean: f64 = cand.iter().sum::<f64>() / 8.0;
            for v in &mut cand {
                *v -= mean;
            }
            if cand.iter().any(|v| v.abs() > 1.0) {
                continue;
            }
            let d: f64 = raw_slopes
                .iter()
                .zip(&cand)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            assert!(d + 1e-12 >= d_opt);
        }
    }

    #[test]
    fn sampler_is_deterministic_and_feasible() {
        let inst = ProblemInstance::builtin("cosine-desk").unwrap();
        let a = sample_path(&inst, 32, 9, 3.0).unwrap();
        let b = sample_path(&inst, 32, 9, 3.0).unwrap();
        assert_eq!(a.nodes(), b.nodes());
        for seed in 0..1000 {
            let p = sample_path(&inst, 16, seed, 3.0).unwrap();
            p.validate().unwrap();
            assert!(p.sup_norm() <= 1.0 * 1.0 + p.inf_norm() + 1e-9);
        }
    }

    #[test]
    fn zero_amplitude_sampler_gives_constant_paths() {
        let inst = ProblemInstance::builtin("cosine-desk").unwrap();
        let p = sample_path_with_amplitude(&inst, 16, 5, 2.0, 0.0).unwrap();
        let mut buf = [0.0];
        for i in 0..p.intervals() {
            p.slope_into(i, &mut buf);
            assert_eq!(buf[0], 0.0);
        }
    }

    #[test]
    fn csv_round_trip_and_revalidation() {
        let inst = ProblemInstance::builtin("cosine-desk").unwrap();
        let p = sample_path(&inst, 24, 77, 2.0).unwrap();
        let text = p.to_csv();
        let q = PeriodicPath::from_csv(&text, p.speed_bound(), p.margin()).unwrap();
        assert_eq!(p.nodes().len(), q.nodes().len());
        assert!(p.sup_distance(&q) < 1e-12);
        // corrupting a value to break the slope bound is caught on read
        let mut broken: Vec<String> = text.lines().map(str::to_string).collect();
        broken[3] = {
            let mut parts: Vec<String> =
                broken[3].split(',').map(str::to_string).collect();
            parts[2] = "50.0".into();
            parts.join(",")
        };
        let res = PeriodicPath::from_csv(&broken.join("\n"), p.speed_bound(), p.margin());
        assert!(res.is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn projected_paths_satisfy_all_invariants(
            raw in proptest::collection::vec(-5.0f64..5.0, 8..=24),
        ) {
            let path = project_feasible(1.0, 1, &raw, 1.0, 1e-3).unwrap();
            path.validate().unwrap();
            prop_assert!(path.sup_norm() <= 1.0 + path.inf_norm() + 1e-9);
            let back = project_feasible(1.0, 1, path.nodes(), 1.0, 1e-3).unwrap();
            prop_assert!(path.sup_distance(&back) < 1e-10);
        }
    }
}
