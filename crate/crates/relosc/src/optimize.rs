//! Global minimization of the discretized objective over the feasible path
//! set: projected-gradient local descent, deterministic multi-start, and
//! clustering of the resulting minimizers.

use crate::functional::{gradient, objective, sampled_potential_floor, FunctionalError};
use crate::la::{dot, norm};
use crate::model::ProblemInstance;
use crate::path::{project_feasible, sample_path, PathError, PeriodicPath};
use crate::verify;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum OptimizeError {
    #[error(transparent)]
    Functional(#[from] FunctionalError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error("invalid options: {0}")]
    BadOptions(String),
    #[error("sampling box derivation failed: {0}")]
    BoxRadius(String),
    #[error("all {count} starts failed; first fault: {first}")]
    AllStartsFailed { count: usize, first: String },
}

/// Tunables for local descent, multi-start, and clustering.
#[derive(Debug, Clone, Serialize)]
pub struct MinimizeOptions {
    /// Grid intervals per path.
    pub grid: usize,
    /// Number of multi-start seeds.
    pub starts: usize,
    /// Reference step; also the first trial step.
    pub step0: f64,
    /// Armijo sufficient-decrease constant in (0, 1).
    pub armijo: f64,
    /// Stationarity tolerance on the projected-gradient sup norm.
    pub tol_grad: f64,
    pub max_iters: usize,
    /// Uniform-distance threshold for merging minimizers.
    pub delta_cluster: f64,
    /// Relative value tolerance for classifying a cluster as global.
    pub tol_global: f64,
    pub seed: u64,
    /// Interior margin on the slope bound used by projections.
    pub margin: f64,
    /// Sampling box half-width; derived from the coercivity bound when absent.
    pub box_radius: Option<f64>,
}

impl MinimizeOptions {
    /// Defaults scaled to an instance: 32 starts in dimension 1, doubled per
    /// added dimension; cluster threshold a tenth of the oscillation budget.
    pub fn for_instance(instance: &ProblemInstance) -> MinimizeOptions {
        let n = instance.dim();
        MinimizeOptions {
            grid: 256,
            starts: 32usize << (n - 1).min(8),
            step0: 1.0,
            armijo: 1e-4,
            tol_grad: 1e-8,
            max_iters: 50_000,
            delta_cluster: 0.1 * instance.speed_bound() * instance.horizon(),
            tol_global: 1e-6,
            seed: 0,
            margin: crate::path::DEFAULT_MARGIN,
            box_radius: None,
        }
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        let mut problems = Vec::new();
        if self.grid < 4 {
            problems.push("grid must be at least 4".to_string());
        }
        if self.starts == 0 {
            problems.push("starts must be at least 1".to_string());
        }
        if !(self.step0 > 0.0) {
            problems.push("step0 must be positive".to_string());
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            problems.push("armijo must lie in (0, 1)".to_string());
        }
        for (name, v) in [
            ("tol_grad", self.tol_grad),
            ("delta_cluster", self.delta_cluster),
            ("tol_global", self.tol_global),
        ] {
            if !(v > 0.0) {
                problems.push(format!("{name} must be positive"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(OptimizeError::BadOptions(problems.join("; ")))
        }
    }
}

/// Result of one local descent.
#[derive(Debug, Clone)]
pub struct LocalRun {
    pub path: PeriodicPath,
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration cap or the step floor stopped the descent
    /// before the stationarity tolerance was met.
    pub converged: bool,
    /// Objective value after each accepted step, starting value included.
    pub trace: Vec<f64>,
}

const STEP_FLOOR: f64 = 1e-14;
const STEP_CEIL: f64 = 1e12;

/// Projected-gradient descent with Armijo backtracking (halving) from a
/// Barzilai-Borwein trial step. Descent is monotone; every trial point goes
/// through the feasibility projection.
pub(crate) fn pg_minimize<F, G>(
    start: &PeriodicPath,
    step0: f64,
    armijo: f64,
    tol_grad: f64,
    max_iters: usize,
    mut eval: F,
    mut grad: G,
) -> Result<LocalRun, OptimizeError>
where
    F: FnMut(&PeriodicPath) -> Result<f64, FunctionalError>,
    G: FnMut(&PeriodicPath) -> Result<Vec<f64>, FunctionalError>,
{
    let horizon = start.horizon();
    let dim = start.dim();
    let bound = start.speed_bound();
    let margin = start.margin();

    let mut x = start.clone();
    let mut fx = eval(&x)?;
    let mut trace = vec![fx];
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None; // nodes, gradient
    let mut last_step = step0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iters {
        let gx = grad(&x)?;
        // stationarity: displacement of the reference projected step
        let mut shifted: Vec<f64> = x.nodes().iter().zip(&gx).map(|(u, g)| u - step0 * g).collect();
        let reference = project_feasible(horizon, dim, &shifted, bound, margin)?;
        let pg_sup = x
            .nodes()
            .iter()
            .zip(reference.nodes())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0_f64, f64::max)
            / step0;
        if pg_sup <= tol_grad {
            converged = true;
            break;
        }

        let mut step = match &prev {
            Some((nodes_prev, g_prev)) => {
                let dx: Vec<f64> = x.nodes().iter().zip(nodes_prev).map(|(a, b)| a - b).collect();
                let dg: Vec<f64> = gx.iter().zip(g_prev).map(|(a, b)| a - b).collect();
                let denom = dot(&dx, &dg);
                if denom > 0.0 {
                    (dot(&dx, &dx) / denom).clamp(STEP_FLOOR, STEP_CEIL)
                } else {
                    (2.0 * last_step).min(STEP_CEIL)
                }
            }
            None => step0,
        };

        let mut accepted = None;
        while step >= STEP_FLOOR {
            for (s, (u, g)) in shifted.iter_mut().zip(x.nodes().iter().zip(&gx)) {
                *s = u - step * g;
            }
            let trial = project_feasible(horizon, dim, &shifted, bound, margin)?;
            let dist2: f64 = x
                .nodes()
                .iter()
                .zip(trial.nodes())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if dist2 > 0.0 {
                let ft = eval(&trial)?;
                if ft <= fx - armijo / step * dist2 {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            step *= 0.5;
        }
        iterations += 1;
        match accepted {
            Some((trial, ft)) => {
                prev = Some((x.nodes().to_vec(), gx));
                last_step = step;
                x = trial;
                fx = ft;
                trace.push(fx);
            }
            None => break, // step floor reached without decrease
        }
    }

    Ok(LocalRun {
        path: x,
        value: fx,
        iterations,
        converged,
        trace,
    })
}

/// Local minimization of the combined objective from a feasible start.
pub fn minimize_local(
    instance: &ProblemInstance,
    lambda: f64,
    mu: f64,
    start: &PeriodicPath,
    opts: &MinimizeOptions,
) -> Result<LocalRun, OptimizeError> {
    opts.validate()?;
    start.validate()?;
    pg_minimize(
        start,
        opts.step0,
        opts.armijo,
        opts.tol_grad,
        opts.max_iters,
        |p| objective(instance, lambda, mu, p).map(|v| v.total),
        |p| gradient(instance, lambda, mu, p),
    )
}

/// One merged minimizer basin.
#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    pub representative: PeriodicPath,
    pub value: f64,
    pub psi: (f64, f64),
    pub residual: f64,
    pub basin_hits: usize,
    pub converged: bool,
}

/// Clustered outcome of a multi-start run. Clusters are sorted by ascending
/// value and are pairwise farther apart than the cluster threshold;
/// `global_set` indexes those within the relative value tolerance of the
/// best.
#[derive(Debug, Clone, Serialize)]
pub struct MinimaReport {
    pub lambda: f64,
    pub mu: f64,
    pub clusters: Vec<ClusterReport>,
    pub global_set: Vec<usize>,
    pub best_value: f64,
    pub failed_starts: usize,
    pub sanity_floor: Option<f64>,
    pub sanity_ok: bool,
    pub seed: u64,
    pub box_radius: f64,
    pub options: MinimizeOptions,
}

impl MinimaReport {
    pub fn n_global(&self) -> usize {
        self.global_set.len()
    }
}

/// Resolves the sampling box: explicit option if set, otherwise the
/// coercivity-derived radius at a reference level one unit above the value
/// of the constant path at the origin.
fn resolve_box_radius(
    instance: &ProblemInstance,
    lambda: f64,
    mu: f64,
    opts: &MinimizeOptions,
) -> Result<f64, OptimizeError> {
    if let Some(r) = opts.box_radius {
        return Ok(r);
    }
    let origin = PeriodicPath::constant(
        instance.horizon(),
        opts.grid.max(4),
        &vec![0.0; instance.dim()],
        instance.speed_bound(),
        opts.margin,
    )?;
    let rho_ref = objective(instance, lambda, mu, &origin)?.total + 1.0;
    let constants = verify::growth_constants(instance, lambda, mu, rho_ref)
        .map_err(|e| OptimizeError::BoxRadius(e.to_string()))?;
    Ok(constants.box_radius)
}

pub fn multistart(
    instance: &ProblemInstance,
    lambda: f64,
    mu: f64,
    opts: &MinimizeOptions,
) -> Result<MinimaReport, OptimizeError> {
    multistart_with_warm(instance, lambda, mu, opts, &[])
}

/// Multi-start with extra caller-provided warm starts appended to the seeded
/// ones. Runs are independent and executed in parallel; results merge in
/// seed order, so reports are deterministic for a fixed seed.
pub fn multistart_with_warm(
    instance: &ProblemInstance,
    lambda: f64,
    mu: f64,
    opts: &MinimizeOptions,
    warm: &[PeriodicPath],
) -> Result<MinimaReport, OptimizeError> {
    opts.validate()?;
    let box_radius = resolve_box_radius(instance, lambda, mu, opts)?;

    let seeded: Vec<Result<LocalRun, OptimizeError>> = (0..opts.starts)
        .into_par_iter()
        .map(|k| {
            let start = sample_path(
                instance,
                opts.grid,
                opts.seed.wrapping_add(k as u64),
                box_radius,
            )?;
            minimize_local(instance, lambda, mu, &start, opts)
        })
        .collect();
    let warm_runs: Vec<Result<LocalRun, OptimizeError>> = warm
        .par_iter()
        .map(|start| minimize_local(instance, lambda, mu, start, opts))
        .collect();

    let mut runs = Vec::new();
    let mut faults = Vec::new();
    for r in seeded.into_iter().chain(warm_runs) {
        match r {
            Ok(run) => runs.push(run),
            Err(e) => faults.push(e.to_string()),
        }
    }
    if runs.is_empty() {
        return Err(OptimizeError::AllStartsFailed {
            count: faults.len(),
            first: faults.first().cloned().unwrap_or_default(),
        });
    }
    let failed_starts = faults.len();

    // greedy clustering in ascending value order, then merge to enforce the
    // pairwise separation invariant
    let mut order: Vec<usize> = (0..runs.len()).collect();
    order.sort_by(|&a, &b| {
        runs[a]
            .value
            .partial_cmp(&runs[b].value)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    struct Basin {
        run: LocalRun,
        hits: usize,
    }
    let mut basins: Vec<Basin> = Vec::new();
    for idx in order {
        let run = &runs[idx];
        match basins
            .iter_mut()
            .find(|b| b.run.path.sup_distance(&run.path) <= opts.delta_cluster)
        {
            Some(b) => b.hits += 1,
            None => basins.push(Basin {
                run: run.clone(),
                hits: 1,
            }),
        }
    }
    loop {
        let mut merged = false;
        'outer: for i in 0..basins.len() {
            for j in (i + 1)..basins.len() {
                if basins[i].run.path.sup_distance(&basins[j].run.path) <= opts.delta_cluster {
                    let absorbed = basins.remove(j);
                    basins[i].hits += absorbed.hits;
                    merged = true;
                    break 'outer;
                }
            }
        }
        if !merged {
            break;
        }
    }

    let mut clusters = Vec::with_capacity(basins.len());
    for b in &basins {
        let value = objective(instance, 0.0, 0.0, &b.run.path)?;
        let residual = verify::el_residual(instance, lambda, mu, &b.run.path)?;
        clusters.push(ClusterReport {
            representative: b.run.path.clone(),
            value: b.run.value,
            psi: (value.psi1, value.psi2),
            residual,
            basin_hits: b.hits,
            converged: b.run.converged,
        });
    }
    clusters.sort_by(|a, b| {
        a.value
            .partial_cmp(&b.value)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let best_value = clusters[0].value;
    let cutoff = best_value + opts.tol_global * (1.0 + best_value.abs());
    let global_set: Vec<usize> = clusters
        .iter()
        .enumerate()
        .filter(|(_, c)| c.value <= cutoff)
        .map(|(i, _)| i)
        .collect();

    let sanity_floor = if instance.dim() <= 2 {
        sampled_potential_floor(instance, lambda, mu, box_radius).ok()
    } else {
        None
    };
    let sanity_ok = match sanity_floor {
        Some(floor) => best_value >= floor - 1e-3 * (1.0 + floor.abs()),
        None => true,
    };

    Ok(MinimaReport {
        lambda,
        mu,
        clusters,
        global_set,
        best_value,
        failed_starts,
        sanity_floor,
        sanity_ok,
        seed: opts.seed,
        box_radius,
        options: opts.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GammaSide, InstanceDef};
    use crate::path::PeriodicPath;

    fn quick_opts(instance: &ProblemInstance) -> MinimizeOptions {
        let mut opts = MinimizeOptions::for_instance(instance);
        opts.grid = 64;
        opts.starts = 12;
        opts
    }

    #[test]
    fn stationary_start_returns_immediately() {
        let inst = ProblemInstance::builtin("cosine-desk").unwrap();
        let opts = quick_opts(&inst);
        let start =
            PeriodicPath::constant(1.0, opts.grid, &[0.0], 1.0, opts.margin).unwrap();
        let run = minimize_local(&inst, 0.0, 0.0, &start, &opts).unwrap();
        assert!(run.iterations <= 1);
        assert!(run.converged);
        assert_eq!(run.path.nodes(), start.nodes());
    }

    #[test]
    fn descent_trace_is_monotone() {
        let inst = ProblemInstance::builtin("cosine-desk").unwrap();
        let opts = quick_opts(&inst);
        for seed in 0..5 {
            let start = crate::path::sample_path(&inst, opts.grid, seed, 2.0).unwrap();
            let run = minimize_local(&inst, 0.3, 1.0, &start, &opts).unwrap();
            for w in run.trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-15, "trace increased: {w:?}");
            }
            assert!(run.value <= run.trace[0]);
        }
    }

    #[test]
    fn convex_instance_reaches_the_analytic_minimizer() {
        let inst = ProblemInstance::builtin("remark1-convex").unwrap();
        let mut opts = quick_opts(&inst);
        opts.grid = 128;
        for seed in 0..10 {
            let start = crate::path::sample_path(&inst, opts.grid, seed, 3.0).unwrap();
            let run = minimize_local(&inst, 1.0, 0.0, &start, &opts).unwrap();
            assert!(run.converged, "seed {seed} did not converge");
            let target =
                PeriodicPath::constant(1.0, opts.grid, &[-1.0], 1.0, opts.margin).unwrap();
            assert!(
                run.path.sup_distance(&target) < 1e-3,
                "seed {seed}: distance {}",
                run.path.sup_distance(&target)
            );
            assert!((run.value - (-1.5)).abs() < 1e-6);
        }
    }

    #[test]
    fn multistart_on_convex_instance_finds_one_cluster() {
        let inst = ProblemInstance::builtin("remark1-convex").unwrap();
        let opts = quick_opts(&inst);
        let report = multistart(&inst, 1.0, 0.0, &opts).unwrap();
        assert_eq!(report.clusters.len(), 1, "{report:#?}");
        assert_eq!(report.global_set, vec![0]);
        assert!(report.sanity_ok);
        assert_eq!(report.failed_starts, 0);
    }

    #[test]
    fn double_well_splits_into_two_global_clusters() {
        let inst = ProblemInstance::builtin("cosine-desk").unwrap();
        let opts = quick_opts(&inst);
        let report = multistart(&inst, 0.0, 1.0, &opts).unwrap();
        assert_eq!(report.n_global(), 2, "{:#?}", report.global_set);
        // wells are symmetric constants near +-0.49
        let a = report.clusters[report.global_set[0]].representative.node(0)[0];
        let b = report.clusters[report.global_set[1]].representative.node(0)[0];
        assert!((a + b).abs() < 1e-2, "wells not symmetric: {a}, {b}");
        assert!((a.abs() - 0.49).abs() < 1e-2);
    }

    #[test]
    fn tilted_double_well_has_one_global_cluster() {
        let inst = ProblemInstance::builtin("cosine-desk").unwrap();
        let opts = quick_opts(&inst);
        let report = multistart(&inst, 0.2, 1.0, &opts).unwrap();
        assert_eq!(report.n_global(), 1);
        // the negative well wins under a positive tilt
        assert!(report.clusters[report.global_set[0]].representative.node(0)[0] < 0.0);
    }

    #[test]
    fn identical_seed_gives_identical_reports() {
        let inst = ProblemInstance::builtin("cosine-desk").unwrap();
        let mut opts = quick_opts(&inst);
        opts.seed = 31;
        let a = multistart(&inst, 0.1, 0.9, &opts).unwrap();
        let b = multistart(&inst, 0.1, 0.9, &opts).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn all_starts_failing_is_reported() {
        let inst = ProblemInstance::from_def(InstanceDef {
            name: "always-faults".into(),
            n: 1,
            t_horizon: 1.0,
            speed_bound: 1.0,
            f: "1/(x1-x1)".into(),
            g: "0".into(),
            h: "0".into(),
            alpha: "1".into(),
            q: 1.0,
            gamma_side: GammaSide::Inf,
            v: None,
            w: None,
        })
        .unwrap();
        let mut opts = quick_opts(&inst);
        opts.box_radius = Some(2.0);
        match multistart(&inst, 0.0, 0.0, &opts) {
            Err(OptimizeError::AllStartsFailed { count, .. }) => assert_eq!(count, opts.starts),
            other => panic!("expected AllStartsFailed, got {other:?}"),
        }
    }

    #[test]
    fn cluster_representatives_pass_invariants_and_carry_residuals() {
        let inst = ProblemInstance::builtin("cosine-desk").unwrap();
        let opts = quick_opts(&inst);
        let report = multistart(&inst, 0.0, 1.0, &opts).unwrap();
        for c in &report.clusters {
            c.representative.validate().unwrap();
            assert!(c.residual.is_finite());
        }
        for pair in report.clusters.windows(2) {
            assert!(pair[0].value <= pair[1].value);
            assert!(
                pair[0]
                    .representative
                    .sup_distance(&pair[1].representative)
                    > opts.delta_cluster
            );
        }
    }
}
