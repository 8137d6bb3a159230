//! The discretized action functional, the perturbation pair, and the exact
//! gradient of the combined objective with respect to path nodes.
//!
//! The kinetic term is exact for piecewise-linear paths: the integral of the
//! kernel over one interval equals `h * Phi(d_i)`. Potential and perturbation
//! terms use uniform-weight periodic quadrature on the nodes, which makes the
//! node gradient below the exact derivative of the discrete objective rather
//! than an approximation of a continuous one.

use crate::la::norm;
use crate::model::{EvalFault, ProblemInstance};
use crate::path::PeriodicPath;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FunctionalError {
    #[error("field evaluation fault at node {node}: {fault}")]
    Field { node: usize, fault: EvalFault },
    #[error("slope {index} is at or beyond the speed bound; the kernel gradient is undefined there")]
    SlopeAtBound { index: usize },
}

/// The evaluated objective, split into the terms that sum to it:
/// `total = kinetic + potential + lambda * psi1 + mu * psi2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveValue {
    pub total: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub psi1: f64,
    pub psi2: f64,
}

/// Evaluates the combined objective at a feasible path.
pub fn objective(
    instance: &ProblemInstance,
    lambda: f64,
    mu: f64,
    path: &PeriodicPath,
) -> Result<ObjectiveValue, FunctionalError> {
    let n = instance.dim();
    let h = path.step();
    let phi = instance.phi();
    let mut slope = vec![0.0; n];
    let mut kinetic = 0.0;
    let mut potential = 0.0;
    let mut psi1 = 0.0;
    let mut psi2 = 0.0;
    for i in 0..path.intervals() {
        path.slope_into(i, &mut slope);
        kinetic += h * phi.eval(&slope);
        let t = path.time(i);
        let u = path.node(i);
        let field = |r: Result<f64, EvalFault>| r.map_err(|fault| FunctionalError::Field {
            node: i,
            fault,
        });
        potential += h * field(instance.f().eval(t, u))?;
        psi1 += h * field(instance.g().eval(t, u))?;
        psi2 += h * field(instance.alpha_at(t))? * field(instance.h().eval(t, u))?;
    }
    Ok(ObjectiveValue {
        total: kinetic + potential + lambda * psi1 + mu * psi2,
        kinetic,
        potential,
        psi1,
        psi2,
    })
}

/// The perturbation pair `(psi1, psi2)` of a path.
pub fn psi(
    instance: &ProblemInstance,
    path: &PeriodicPath,
) -> Result<(f64, f64), FunctionalError> {
    let v = objective(instance, 0.0, 0.0, path)?;
    Ok((v.psi1, v.psi2))
}

/// Exact gradient of the combined objective with respect to the flat node
/// vector: entry `j` is
/// `h * grad_x W(t_j, u_j) + phi_grad(d_{j-1}) - phi_grad(d_j)`
/// with periodic index wrap and `W = F + lambda G + mu alpha H`.
///
/// Requires every slope strictly inside the speed ball.
pub fn gradient(
    instance: &ProblemInstance,
    lambda: f64,
    mu: f64,
    path: &PeriodicPath,
) -> Result<Vec<f64>, FunctionalError> {
    let n = instance.dim();
    let intervals = path.intervals();
    let h = path.step();
    let phi = instance.phi();
    let bound = instance.speed_bound();

    // kernel gradients per interval, checked strictly inside the ball
    let mut slope = vec![0.0; n];
    let mut phi_grads = vec![0.0; intervals * n];
    for i in 0..intervals {
        path.slope_into(i, &mut slope);
        if norm(&slope) >= bound {
            return Err(FunctionalError::SlopeAtBound { index: i });
        }
        phi.grad(&slope, &mut phi_grads[i * n..(i + 1) * n]);
    }

    let mut grad = vec![0.0; intervals * n];
    // potential part, one dual pass per spatial coordinate
    let mut dir = vec![0.0; n];
    for k in 0..n {
        dir[k] = 1.0;
        for j in 0..intervals {
            let t = path.time(j);
            let u = path.node(j);
            let field = |r: Result<(f64, f64), EvalFault>| {
                r.map_err(|fault| FunctionalError::Field { node: j, fault })
            };
            let (_, mut dw) = field(instance.f().eval_dir(t, u, &dir))?;
            if lambda != 0.0 {
                let (_, dg) = field(instance.g().eval_dir(t, u, &dir))?;
                dw += lambda * dg;
            }
            if mu != 0.0 {
                let a = instance
                    .alpha_at(t)
                    .map_err(|fault| FunctionalError::Field { node: j, fault })?;
                let (_, dh) = field(instance.h().eval_dir(t, u, &dir))?;
                dw += mu * a * dh;
            }
            grad[j * n + k] = h * dw;
        }
        dir[k] = 0.0;
    }
    // kinetic part
    for j in 0..intervals {
        let prev = (j + intervals - 1) % intervals;
        for k in 0..n {
            grad[j * n + k] += phi_grads[prev * n + k] - phi_grads[j * n + k];
        }
    }
    Ok(grad)
}

/// Sampled lower bound for the objective over paths inside a box:
/// `horizon * (phi_eval(0) + min_sampled W)`. A coarse sanity floor, not a
/// certified bound.
pub fn sampled_potential_floor(
    instance: &ProblemInstance,
    lambda: f64,
    mu: f64,
    box_radius: f64,
) -> Result<f64, FunctionalError> {
    let n = instance.dim();
    if n > 2 {
        // grid scans stop being meaningful; fall back to the kinetic floor
        let zero = vec![0.0; n];
        return Ok(instance.horizon() * instance.phi().eval(&zero));
    }
    let per_axis = if n == 1 { 2001 } else { 101 };
    let t_steps = if instance.is_autonomous() { 1 } else { 64 };
    let horizon = instance.horizon();
    let mut min_w = f64::INFINITY;
    let mut x = vec![0.0; n];
    let mut idx = vec![0usize; n];
    loop {
        for (k, &i) in idx.iter().enumerate() {
            x[k] = -box_radius + 2.0 * box_radius * i as f64 / (per_axis as f64 - 1.0);
        }
        for s in 0..t_steps {
            let t = horizon * s as f64 / t_steps as f64;
            if let Ok(w) = instance.total_potential(lambda, mu, t, &x) {
                min_w = min_w.min(w);
            }
        }
        let mut k = 0;
        loop {
            if k == n {
                let zero = vec![0.0; n];
                return Ok(horizon * (instance.phi().eval(&zero) + min_w));
            }
            idx[k] += 1;
            if idx[k] < per_axis {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{GammaSide, InstanceDef, ProblemInstance};
    use crate::path::{project_feasible, PeriodicPath};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn constant_path(inst: &ProblemInstance, intervals: usize, value: f64) -> PeriodicPath {
        PeriodicPath::constant(
            inst.horizon(),
            intervals,
            &vec![value; inst.dim()],
            inst.speed_bound(),
            1e-3,
        )
        .unwrap()
    }

    #[test]
    fn constant_path_at_origin_costs_the_kinetic_floor() {
        let inst = ProblemInstance::builtin("cosine-desk").unwrap();
        for intervals in [4, 16, 64] {
            let path = constant_path(&inst, intervals, 0.0);
            let v = objective(&inst, 0.0, 0.0, &path).unwrap();
            assert!((v.total - (-1.0)).abs() < 1e-12, "N={intervals}: {v:?}");
            assert!((v.kinetic - (-1.0)).abs() < 1e-12);
            assert!(v.potential.abs() < 1e-12);
        }
    }

    #[test]
    fn convex_instance_value_at_minus_one() {
        let inst = ProblemInstance::builtin("remark1-convex").unwrap();
        let path = constant_path(&inst, 32, -1.0);
        let v = objective(&inst, 1.0, 0.0, &path).unwrap();
        assert!((v.total - (-1.5)).abs() < 1e-12, "{v:?}");
    }

    #[test]
    fn objective_terms_sum_exactly() {
        let inst = ProblemInstance::builtin("cosine-desk").unwrap();
        let path = crate::path::sample_path(&inst, 32, 42, 2.0).unwrap();
        let v = objective(&inst, 0.7, -1.3, &path).unwrap();
        assert_eq!(
            v.total,
            v.kinetic + v.potential + 0.7 * v.psi1 + (-1.3) * v.psi2
        );
    }

    #[test]
    fn psi_of_constants_is_the_integral_pair() {
        let inst = ProblemInstance::builtin("cosine-desk").unwrap();
        let path = constant_path(&inst, 16, 0.0);
        let (p1, p2) = psi(&inst, &path).unwrap();
        assert!(p1.abs() < 1e-12);
        assert!((p2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gradient_vanishes_at_critical_constants() {
        let desk = ProblemInstance::builtin("cosine-desk").unwrap();
        let g = gradient(&desk, 0.0, 0.0, &constant_path(&desk, 16, 0.0)).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-14));

        let remark = ProblemInstance::builtin("remark1-convex").unwrap();
        let g = gradient(&remark, 1.0, 0.0, &constant_path(&remark, 16, -1.0)).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-14));
    }

    fn fd_gradient(
        inst: &ProblemInstance,
        lambda: f64,
        mu: f64,
        path: &PeriodicPath,
    ) -> Vec<f64> {
        let h = 1e-6;
        let mut out = vec![0.0; path.nodes().len()];
        for j in 0..out.len() {
            let mut plus = path.nodes().to_vec();
            let mut minus = plus.clone();
            plus[j] += h;
            minus[j] -= h;
            let pp = PeriodicPath::new(path.horizon(), path.dim(), plus, path.speed_bound(), 0.0)
                .unwrap();
            let pm = PeriodicPath::new(path.horizon(), path.dim(), minus, path.speed_bound(), 0.0)
                .unwrap();
            out[j] = (objective(inst, lambda, mu, &pp).unwrap().total
                - objective(inst, lambda, mu, &pm).unwrap().total)
                / (2.0 * h);
        }
        out
    }

    fn two_dim_instance() -> ProblemInstance {
        ProblemInstance::from_def(InstanceDef {
            name: "plane-well".into(),
            n: 2,
            t_horizon: 1.0,
            speed_bound: 1.0,
            f: "x1^4 + x2^4 + x1*x2/2".into(),
            g: "x1 + x2".into(),
            h: "cos(x1) + cos(x2)".into(),
            alpha: "1".into(),
            q: 2.0,
            gamma_side: GammaSide::Sup,
            v: None,
            w: None,
        })
        .unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let instances = [
            ProblemInstance::builtin("remark1-convex").unwrap(),
            ProblemInstance::builtin("cosine-desk").unwrap(),
            ProblemInstance::builtin("conjecture-doublewell").unwrap(),
            two_dim_instance(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for inst in &instances {
            for rep in 0..20 {
                let raw: Vec<f64> = (0..16 * inst.dim())
                    .map(|_| rng.random_range(-1.5..1.5))
                    .collect();
                let path =
                    project_feasible(inst.horizon(), inst.dim(), &raw, inst.speed_bound(), 0.01)
                        .unwrap();
                let (lambda, mu) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                let g = gradient(inst, lambda, mu, &path).unwrap();
                let fd = fd_gradient(inst, lambda, mu, &path);
                for (j, (a, b)) in g.iter().zip(&fd).enumerate() {
                    let scale = 1.0_f64.max(b.abs());
                    assert!(
                        (a - b).abs() / scale <= 1e-5,
                        "{} rep {rep} entry {j}: {a} vs {b}",
                        inst.name()
                    );
                }
            }
        }
    }

    #[test]
    fn autonomous_objective_is_shift_invariant_and_gradient_rotates() {
        let inst = ProblemInstance::from_def(InstanceDef {
            name: "radial".into(),
            n: 1,
            t_horizon: 1.0,
            speed_bound: 1.0,
            f: "x1^2".into(),
            g: "0".into(),
            h: "0".into(),
            alpha: "1".into(),
            q: 1.0,
            gamma_side: GammaSide::Inf,
            v: None,
            w: None,
        })
        .unwrap();
        let path = crate::path::sample_path(&inst, 16, 3, 1.0).unwrap();
        let shift = 5;
        let mut rotated_nodes = vec![0.0; path.nodes().len()];
        for i in 0..16 {
            rotated_nodes[i] = path.nodes()[(i + shift) % 16];
        }
        let rotated = PeriodicPath::new(1.0, 1, rotated_nodes, 1.0, path.margin()).unwrap();
        let v0 = objective(&inst, 0.0, 0.0, &path).unwrap().total;
        let v1 = objective(&inst, 0.0, 0.0, &rotated).unwrap().total;
        assert!((v0 - v1).abs() < 1e-12);
        let g0 = gradient(&inst, 0.0, 0.0, &path).unwrap();
        let g1 = gradient(&inst, 0.0, 0.0, &rotated).unwrap();
        for i in 0..16 {
            assert!((g1[i] - g0[(i + shift) % 16]).abs() < 1e-12);
        }
    }

    #[test]
    fn faults_carry_the_offending_node() {
        let inst = ProblemInstance::from_def(InstanceDef {
            name: "sqrt-domain".into(),
            n: 1,
            t_horizon: 1.0,
            speed_bound: 2.0,
            f: "sqrt(x1)".into(),
            g: "0".into(),
            h: "0".into(),
            alpha: "1".into(),
            q: 1.0,
            gamma_side: GammaSide::Inf,
            v: None,
            w: None,
        })
        .unwrap();
        // feasible sawtooth dipping negative at node 2
        let nodes = vec![0.5, 0.25, -0.25, 0.0];
        let path = PeriodicPath::new(1.0, 1, nodes, 2.0, 0.0).unwrap();
        match objective(&inst, 0.0, 0.0, &path) {
            Err(FunctionalError::Field { node, .. }) => assert_eq!(node, 2),
            other => panic!("expected a field fault, got {other:?}"),
        }
    }

    #[test]
    fn sampled_floor_is_below_sampled_objectives() {
        let inst = ProblemInstance::builtin("cosine-desk").unwrap();
        let floor = sampled_potential_floor(&inst, 0.3, 0.7, 4.0).unwrap();
        for seed in 0..50 {
            let p = crate::path::sample_path(&inst, 24, seed, 3.0).unwrap();
            let v = objective(&inst, 0.3, 0.7, &p).unwrap();
            assert!(v.total + 1e-9 >= floor, "seed {seed}: {} < {floor}", v.total);
        }
    }
}
