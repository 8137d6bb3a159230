//! Problem definitions: the convex kinetic kernel, potential fields, and the
//! registry of built-in instances.

mod field;

pub use field::{EvalFault, ParseError, ScalarField};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ModelError {
    #[error("speed bound must be positive, got {0}")]
    NonPositiveSpeedBound(f64),
    #[error("horizon must be positive, got {0}")]
    NonPositiveHorizon(f64),
    #[error("growth exponent must be positive, got {0}")]
    NonPositiveExponent(f64),
    #[error("dimension must be between 1 and 16, got {0}")]
    BadDimension(usize),
    #[error("field `{which}`: {err}")]
    FieldParse { which: &'static str, err: ParseError },
    #[error("kernel check failed: {0}")]
    KernelCheck(String),
    #[error("unknown instance `{0}`; known: {}", BUILTIN_NAMES.join(", "))]
    UnknownInstance(String),
    #[error("witness point has dimension {got}, instance has {want}")]
    WitnessDimension { got: usize, want: usize },
    #[error("evaluation fault while constructing instance: {0}")]
    Fault(#[from] EvalFault),
}

type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type MapFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A member of the admissible kinetic-kernel class: a continuous strictly
/// convex `eval` on the closed speed ball with gradient `grad` vanishing at 0
/// and an explicit inverse of that gradient.
///
/// Kernels are property-checked at construction (strict convexity, sign,
/// gradient/inverse consistency) on random points in dimensions 1 to 3.
#[derive(Clone)]
pub struct PhiModel {
    speed_bound: f64,
    eval: PointFn,
    grad: MapFn,
    inverse: MapFn,
}

impl fmt::Debug for PhiModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiModel")
            .field("speed_bound", &self.speed_bound)
            .finish()
    }
}

impl PhiModel {
    /// The relativistic kernel with speed bound `l`:
    /// `eval(x) = -sqrt(l^2 - |x|^2)`, `grad(x) = x / sqrt(l^2 - |x|^2)`,
    /// `inverse(y) = l * y / sqrt(1 + |y|^2)`.
    pub fn relativistic(l: f64) -> Result<PhiModel, ModelError> {
        if !(l > 0.0) {
            return Err(ModelError::NonPositiveSpeedBound(l));
        }
        let eval = move |x: &[f64]| -> f64 {
            let s = l * l - sq_norm(x);
            -s.max(0.0).sqrt()
        };
        let grad = move |x: &[f64], out: &mut [f64]| {
            let denom = (l * l - sq_norm(x)).sqrt();
            for (o, xi) in out.iter_mut().zip(x) {
                *o = xi / denom;
            }
        };
        let inverse = move |y: &[f64], out: &mut [f64]| {
            let denom = (1.0 + sq_norm(y)).sqrt();
            for (o, yi) in out.iter_mut().zip(y) {
                *o = l * yi / denom;
            }
        };
        PhiModel::register(l, eval, grad, inverse)
    }

    /// Registers a user-supplied kernel triple after property-checking it on
    /// random points: `eval <= 0` on the ball, `eval(0)` the unique minimum,
    /// midpoint strict convexity, `grad(0) = 0`, and `inverse(grad(x)) = x`
    /// to 1e-10 for `|x| <= 0.99 l`.
    pub fn register<E, G, I>(l: f64, eval: E, grad: G, inverse: I) -> Result<PhiModel, ModelError>
    where
        E: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        I: Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    {
        if !(l > 0.0) {
            return Err(ModelError::NonPositiveSpeedBound(l));
        }
        let model = PhiModel {
            speed_bound: l,
            eval: Arc::new(eval),
            grad: Arc::new(grad),
            inverse: Arc::new(inverse),
        };
        model.property_check()?;
        Ok(model)
    }

    fn property_check(&self) -> Result<(), ModelError> {
        let l = self.speed_bound;
        let mut rng = ChaCha8Rng::seed_from_u64(0x9e37_79b9);
        for n in 1..=3usize {
            let zero = vec![0.0; n];
            let at_zero = self.eval(&zero);
            let mut g0 = vec![0.0; n];
            self.grad(&zero, &mut g0);
            if norm(&g0) > 1e-12 {
                return Err(ModelError::KernelCheck(format!(
                    "grad(0) = {g0:?} is not zero (n={n})"
                )));
            }
            for _ in 0..100 {
                let x = random_ball_point(&mut rng, n, 0.99 * l);
                if self.eval(&x) > 0.0 {
                    return Err(ModelError::KernelCheck(format!(
                        "eval({x:?}) > 0 inside the ball"
                    )));
                }
                if norm(&x) > 1e-8 && self.eval(&x) <= at_zero {
                    return Err(ModelError::KernelCheck(format!(
                        "eval({x:?}) does not exceed eval(0); 0 must be the unique minimum"
                    )));
                }
                let mut y = vec![0.0; n];
                self.grad(&x, &mut y);
                let mut back = vec![0.0; n];
                self.inverse(&y, &mut back);
                let err: f64 = x
                    .iter()
                    .zip(&back)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if err > 1e-10 {
                    return Err(ModelError::KernelCheck(format!(
                        "inverse(grad(x)) drifted by {err:.3e} at {x:?}"
                    )));
                }
                // midpoint strict convexity against a second random point
                let y2 = random_ball_point(&mut rng, n, 0.99 * l);
                if x.iter().zip(&y2).any(|(a, b)| (a - b).abs() > 1e-9) {
                    let mid: Vec<f64> =
                        x.iter().zip(&y2).map(|(a, b)| 0.5 * (a + b)).collect();
                    let lhs = self.eval(&mid);
                    let rhs = 0.5 * (self.eval(&x) + self.eval(&y2));
                    if lhs >= rhs {
                        return Err(ModelError::KernelCheck(format!(
                            "midpoint convexity fails between {x:?} and {y2:?}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn speed_bound(&self) -> f64 {
        self.speed_bound
    }

    /// The kernel value at a slope inside the closed ball.
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    /// The kernel gradient; defined only strictly inside the ball.
    pub fn grad(&self, x: &[f64], out: &mut [f64]) {
        (self.grad)(x, out)
    }

    /// The inverse of the gradient map, defined on all of space.
    pub fn inverse(&self, y: &[f64], out: &mut [f64]) {
        (self.inverse)(y, out)
    }
}

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn norm(x: &[f64]) -> f64 {
    sq_norm(x).sqrt()
}

fn random_ball_point(rng: &mut ChaCha8Rng, n: usize, radius: f64) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if sq_norm(&x) <= 1.0 {
            return x.iter().map(|v| v * radius).collect();
        }
    }
}

/// Which extremum of `H` plays the role of the witness level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaSide {
    Inf,
    Sup,
}

/// Plain-data description of an instance; what the configuration layer
/// produces and the builtin registry stores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDef {
    pub name: String,
    pub n: usize,
    pub t_horizon: f64,
    pub speed_bound: f64,
    pub f: String,
    pub g: String,
    pub h: String,
    pub alpha: String,
    pub q: f64,
    pub gamma_side: GammaSide,
    pub v: Option<Vec<f64>>,
    pub w: Option<Vec<f64>>,
}

/// A fully constructed problem: kinetic kernel, potential `F`, perturbation
/// fields `G` and `H`, time weight `alpha`, growth exponent `q`, and the
/// optional witness pair `(v, w)` on the chosen extremal level of `H`.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    def: InstanceDef,
    phi: PhiModel,
    f: ScalarField,
    g: ScalarField,
    h: ScalarField,
    alpha: ScalarField,
}

pub const BUILTIN_NAMES: [&str; 3] = ["remark1-convex", "cosine-desk", "conjecture-doublewell"];

/// Grid size used for the fixed-step quadratures and sign scans below.
const SCAN_POINTS: usize = 10_000;
const QUAD_POINTS: usize = 4096;

impl ProblemInstance {
    pub fn from_def(def: InstanceDef) -> Result<ProblemInstance, ModelError> {
        let phi = PhiModel::relativistic(def.speed_bound)?;
        ProblemInstance::from_def_with_phi(def, phi)
    }

    pub fn from_def_with_phi(def: InstanceDef, phi: PhiModel) -> Result<ProblemInstance, ModelError> {
        if def.n == 0 || def.n > 16 {
            return Err(ModelError::BadDimension(def.n));
        }
        if !(def.t_horizon > 0.0) {
            return Err(ModelError::NonPositiveHorizon(def.t_horizon));
        }
        if !(def.q > 0.0) {
            return Err(ModelError::NonPositiveExponent(def.q));
        }
        let parse = |which: &'static str, src: &str, arity: usize| {
            ScalarField::parse(src, arity).map_err(|err| ModelError::FieldParse { which, err })
        };
        let f = parse("F", &def.f, def.n)?;
        let g = parse("G", &def.g, def.n)?;
        let h = parse("H", &def.h, def.n)?;
        let alpha = parse("alpha", &def.alpha, 0)?;
        for p in def.v.iter().chain(def.w.iter()) {
            if p.len() != def.n {
                return Err(ModelError::WitnessDimension {
                    got: p.len(),
                    want: def.n,
                });
            }
        }
        Ok(ProblemInstance {
            def,
            phi,
            f,
            g,
            h,
            alpha,
        })
    }

    /// Looks up one of the built-in instances by name.
    pub fn builtin(name: &str) -> Result<ProblemInstance, ModelError> {
        let def = match name {
            "remark1-convex" => InstanceDef {
                name: name.into(),
                n: 1,
                t_horizon: 1.0,
                speed_bound: 1.0,
                f: "x1^2/2".into(),
                g: "x1".into(),
                h: "0".into(),
                alpha: "1".into(),
                q: 1.0,
                gamma_side: GammaSide::Inf,
                v: None,
                w: None,
            },
            "cosine-desk" => InstanceDef {
                name: name.into(),
                n: 1,
                t_horizon: 1.0,
                speed_bound: 1.0,
                f: "x1^4".into(),
                g: "x1".into(),
                h: "cos(x1)".into(),
                alpha: "1".into(),
                q: 2.0,
                gamma_side: GammaSide::Sup,
                v: Some(vec![0.0]),
                w: Some(vec![2.0 * PI]),
            },
            "conjecture-doublewell" => InstanceDef {
                name: name.into(),
                n: 1,
                t_horizon: 1.0,
                speed_bound: 1.0,
                f: "x1^6".into(),
                g: "0".into(),
                h: "(x1^2-1)^2".into(),
                alpha: "1".into(),
                q: 4.0,
                gamma_side: GammaSide::Inf,
                v: Some(vec![1.0]),
                w: Some(vec![-1.0]),
            },
            other => return Err(ModelError::UnknownInstance(other.into())),
        };
        ProblemInstance::from_def(def)
    }

    pub fn builtin_names() -> &'static [&'static str] {
        &BUILTIN_NAMES
    }

    pub fn def(&self) -> &InstanceDef {
        &self.def
    }

    pub fn name(&self) -> &str {
        &self.def.name
    }

    pub fn dim(&self) -> usize {
        self.def.n
    }

    pub fn horizon(&self) -> f64 {
        self.def.t_horizon
    }

    pub fn speed_bound(&self) -> f64 {
        self.phi.speed_bound()
    }

    pub fn phi(&self) -> &PhiModel {
        &self.phi
    }

    pub fn f(&self) -> &ScalarField {
        &self.f
    }

    pub fn g(&self) -> &ScalarField {
        &self.g
    }

    pub fn h(&self) -> &ScalarField {
        &self.h
    }

    pub fn alpha_field(&self) -> &ScalarField {
        &self.alpha
    }

    pub fn growth_exponent(&self) -> f64 {
        self.def.q
    }

    pub fn gamma_side(&self) -> GammaSide {
        self.def.gamma_side
    }

    pub fn witnesses(&self) -> Option<(&[f64], &[f64])> {
        match (&self.def.v, &self.def.w) {
            (Some(v), Some(w)) => Some((v.as_slice(), w.as_slice())),
            _ => None,
        }
    }

    /// The witness level `gamma = H(v)` when witnesses are present.
    pub fn gamma(&self) -> Option<f64> {
        let (v, _) = self.witnesses()?;
        self.h.eval(0.0, v).ok()
    }

    /// True for instances whose data fields never read `t`.
    pub fn is_autonomous(&self) -> bool {
        self.f.is_autonomous() && self.g.is_autonomous() && self.h.is_autonomous()
    }

    pub fn alpha_at(&self, t: f64) -> Result<f64, EvalFault> {
        self.alpha.eval(t, &[])
    }

    /// Fixed-grid quadrature of `alpha` over the horizon.
    pub fn integral_alpha(&self) -> Result<f64, EvalFault> {
        let t = self.def.t_horizon;
        let h = t / QUAD_POINTS as f64;
        let mut acc = 0.0;
        for i in 0..QUAD_POINTS {
            acc += self.alpha.eval(i as f64 * h, &[])?;
        }
        Ok(acc * h)
    }

    /// Fixed-grid quadrature of `t -> G(t, x)` at a frozen spatial point.
    pub fn integral_g_at(&self, x: &[f64]) -> Result<f64, EvalFault> {
        let t = self.def.t_horizon;
        let h = t / QUAD_POINTS as f64;
        let mut acc = 0.0;
        for i in 0..QUAD_POINTS {
            acc += self.g.eval(i as f64 * h, x)?;
        }
        Ok(acc * h)
    }

    pub fn sup_alpha(&self) -> Result<f64, EvalFault> {
        let t = self.def.t_horizon;
        let h = t / SCAN_POINTS as f64;
        let mut sup = 0.0_f64;
        for i in 0..SCAN_POINTS {
            sup = sup.max(self.alpha.eval(i as f64 * h, &[])?.abs());
        }
        Ok(sup)
    }

    /// The combined pointwise potential `F + lambda G + mu alpha(t) H` and its
    /// spatial gradient.
    pub fn total_potential(
        &self,
        lambda: f64,
        mu: f64,
        t: f64,
        x: &[f64],
    ) -> Result<f64, EvalFault> {
        let mut acc = self.f.eval(t, x)?;
        if lambda != 0.0 {
            acc += lambda * self.g.eval(t, x)?;
        }
        if mu != 0.0 {
            acc += mu * self.alpha.eval(t, &[])? * self.h.eval(t, x)?;
        }
        Ok(acc)
    }

    pub fn total_potential_grad_into(
        &self,
        lambda: f64,
        mu: f64,
        t: f64,
        x: &[f64],
        out: &mut [f64],
    ) -> Result<(), EvalFault> {
        let n = self.def.n;
        let mut dir = vec![0.0; n];
        let a = if mu != 0.0 { self.alpha.eval(t, &[])? } else { 0.0 };
        for k in 0..n {
            dir[k] = 1.0;
            let (_, df) = self.f.eval_dir(t, x, &dir)?;
            let mut d = df;
            if lambda != 0.0 {
                let (_, dg) = self.g.eval_dir(t, x, &dir)?;
                d += lambda * dg;
            }
            if mu != 0.0 {
                let (_, dh) = self.h.eval_dir(t, x, &dir)?;
                d += mu * a * dh;
            }
            out[k] = d;
            dir[k] = 0.0;
        }
        Ok(())
    }

    /// Static hypothesis diagnostics: sign constancy of `alpha` on a scan
    /// grid, attainment of the witness level, and the witness integral
    /// difference. Checks that need data the instance does not carry are
    /// reported as `None`.
    pub fn validate(&self) -> InstanceDiagnostics {
        let mut d = InstanceDiagnostics::default();
        let t = self.def.t_horizon;
        let h = t / SCAN_POINTS as f64;
        let mut pos = 0usize;
        let mut neg = 0usize;
        let mut zero = 0usize;
        let mut fault = None;
        for i in 0..SCAN_POINTS {
            match self.alpha.eval(i as f64 * h, &[]) {
                Ok(a) if a > 0.0 => pos += 1,
                Ok(a) if a < 0.0 => neg += 1,
                Ok(_) => zero += 1,
                Err(e) => {
                    fault = Some(e);
                    break;
                }
            }
        }
        match fault {
            Some(e) => {
                d.alpha_sign_ok = false;
                d.messages.push(format!("alpha evaluation fault: {e}"));
            }
            None => {
                d.alpha_sign_ok = (pos == 0) != (neg == 0) && zero == 0;
                d.alpha_sign = if d.alpha_sign_ok {
                    Some(if pos > 0 { 1 } else { -1 })
                } else {
                    None
                };
                if !d.alpha_sign_ok {
                    d.messages.push(format!(
                        "alpha is not of constant nonzero sign on the scan grid \
                         ({pos} positive, {neg} negative, {zero} zero samples)"
                    ));
                }
            }
        }

        if let Some((v, w)) = self.witnesses() {
            match (self.h.eval(0.0, v), self.h.eval(0.0, w)) {
                (Ok(hv), Ok(hw)) => {
                    d.gamma = Some(hv);
                    let attained = (hv - hw).abs() <= 1e-12;
                    d.gamma_attained_ok = Some(attained);
                    if !attained {
                        d.messages.push(format!(
                            "H(v) = {hv} and H(w) = {hw} do not sit on a common level"
                        ));
                    }
                    d.gamma_extremal_ok = self.gamma_extremal_scan(hv);
                    if d.gamma_extremal_ok == Some(false) {
                        d.messages.push(
                            "a sampled point beats the witness level on the chosen side".into(),
                        );
                    }
                }
                (e1, e2) => {
                    d.gamma_attained_ok = Some(false);
                    for e in [e1.err(), e2.err()].into_iter().flatten() {
                        d.messages.push(format!("H fault at witness: {e}"));
                    }
                }
            }
            match (self.integral_g_at(v), self.integral_g_at(w)) {
                (Ok(iv), Ok(iw)) => {
                    let diff = (iv - iw).abs();
                    d.a2_integral_difference = Some(diff);
                    let ok = diff > 1e-9;
                    d.a2_ok = Some(ok);
                    if !ok {
                        d.messages.push(format!(
                            "witness integrals of G coincide ({iv} vs {iw}); \
                             the separation hypothesis fails"
                        ));
                    }
                }
                (e1, e2) => {
                    d.a2_ok = Some(false);
                    for e in [e1.err(), e2.err()].into_iter().flatten() {
                        d.messages.push(format!("G quadrature fault at witness: {e}"));
                    }
                }
            }
        } else {
            d.messages
                .push("no witness pair declared; level-set checks skipped".into());
        }
        d
    }

    /// Box scan for points beating the witness level on the chosen side.
    /// Returns `None` in dimensions where the scan is impractical.
    fn gamma_extremal_scan(&self, gamma: f64) -> Option<bool> {
        if self.def.n > 2 {
            return None;
        }
        let mut radius: f64 = self.def.t_horizon * self.speed_bound() + 2.0;
        if let Some((v, w)) = self.witnesses() {
            radius = radius.max(norm(v) + 1.0).max(norm(w) + 1.0);
        }
        let per_axis = if self.def.n == 1 { SCAN_POINTS } else { 200 };
        let mut best = gamma;
        let mut x = vec![0.0; self.def.n];
        let mut idx = vec![0usize; self.def.n];
        loop {
            for (k, &i) in idx.iter().enumerate() {
                x[k] = -radius + 2.0 * radius * (i as f64) / (per_axis as f64 - 1.0);
            }
            if let Ok(hx) = self.h.eval(0.0, &x) {
                best = match self.def.gamma_side {
                    GammaSide::Inf => best.min(hx),
                    GammaSide::Sup => best.max(hx),
                };
            }
            // odometer increment over the grid
            let mut k = 0;
            loop {
                if k == self.def.n {
                    return Some((best - gamma).abs() <= 1e-9);
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
}

/// Outcome of the static instance checks; `None` entries mean the check did
/// not apply to this instance.
#[derive(Debug, Clone, Default, Serialize)]
pub struct InstanceDiagnostics {
    pub alpha_sign: Option<i8>,
    pub alpha_sign_ok: bool,
    pub gamma: Option<f64>,
    pub gamma_attained_ok: Option<bool>,
    pub gamma_extremal_ok: Option<bool>,
    pub a2_integral_difference: Option<f64>,
    pub a2_ok: Option<bool>,
    pub messages: Vec<String>,
}

impl InstanceDiagnostics {
    /// True when every check that applied passed.
    pub fn all_ok(&self) -> bool {
        self.alpha_sign_ok
            && self.gamma_attained_ok.unwrap_or(true)
            && self.gamma_extremal_ok.unwrap_or(true)
            && self.a2_ok.unwrap_or(true)
    }

    /// True when the witness-separation hypothesis holds.
    pub fn a2_holds(&self) -> bool {
        self.a2_ok == Some(true)
    }
}
