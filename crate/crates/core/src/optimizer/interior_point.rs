//! Primal-dual interior-point minimizer for box-bounded problems with optional
//! equality constraints. The bounds are handled by a logarithmic barrier on
//! the slacks `x − l` and `u − x`; the Hessian of the Lagrangian is a damped
//! BFGS approximation and gradients default to forward differences.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub type ScalarFn<'a> = Box<dyn Fn(&[f64]) -> f64 + Sync + 'a>;
pub type GradientFn<'a> = Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a>;

/// minimize f(x) subject to lower ≤ x ≤ upper and h(x) = 0.
pub struct BoxProblem<'a> {
    pub objective: ScalarFn<'a>,
    /// Analytic gradient; forward differences are used when absent.
    pub gradient: Option<GradientFn<'a>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub equalities: Vec<ScalarFn<'a>>,
}

impl<'a> BoxProblem<'a> {
    pub fn new(
        objective: impl Fn(&[f64]) -> f64 + Sync + 'a,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Self {
        assert_eq!(lower.len(), upper.len(), "bound vectors differ in length");
        assert!(
            lower.iter().zip(&upper).all(|(l, u)| l < u),
            "lower bounds must be strictly below upper bounds"
        );
        BoxProblem {
            objective: Box::new(objective),
            gradient: None,
            lower,
            upper,
            equalities: Vec::new(),
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Sync + 'a) -> Self {
        self.gradient = Some(Box::new(g));
        self
    }

    pub fn with_equality(mut self, h: impl Fn(&[f64]) -> f64 + Sync + 'a) -> Self {
        self.equalities.push(Box::new(h));
        self
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub constraint: f64,
    pub function: f64,
    pub step: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            constraint: 1e-6,
            function: 1e-6,
            step: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tolerances: Tolerances,
    /// Fixed finite-difference step; `None` uses `sqrt(eps) · max(1, |xᵢ|)`.
    pub fd_step: Option<f64>,
    pub max_iterations: usize,
    pub barrier_initial: f64,
    pub barrier_final: f64,
    pub barrier_factor: f64,
    pub fraction_to_boundary: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tolerances: Tolerances::default(),
            fd_step: None,
            max_iterations: 1000,
            barrier_initial: 0.1,
            barrier_final: 1e-9,
            barrier_factor: 0.1,
            fraction_to_boundary: 0.995,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    /// KKT residual below tolerance with the barrier parameter driven to its floor.
    Converged,
    /// Steps became shorter than the step tolerance at the final barrier value.
    StepTolerance,
    MaxIterations,
    LineSearchFailure,
    /// The objective is not finite at the starting point.
    NonFiniteStart,
}

impl Termination {
    /// Both regular stopping tests count as a local optimum.
    pub fn is_success(self) -> bool {
        matches!(self, Termination::Converged | Termination::StepTolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub converged: bool,
    pub status: Termination,
    /// Unscaled KKT residual (barrier parameter zero) at `x`.
    pub kkt_residual: f64,
}

fn fd_step(opts: &SolverOptions, xi: f64) -> f64 {
    opts.fd_step
        .unwrap_or_else(|| f64::EPSILON.sqrt() * xi.abs().max(1.0))
}

/// Forward-difference gradient, switching to a backward difference when the
/// forward point leaves the box or evaluates to a non-finite value.
pub fn finite_difference_gradient(
    f: &dyn Fn(&[f64]) -> f64,
    x: &[f64],
    fx: f64,
    lower: &[f64],
    upper: &[f64],
    opts: &SolverOptions,
) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = fd_step(opts, x[i]);
            let forward = if x[i] + h <= upper[i] {
                probe[i] = x[i] + h;
                let v = f(&probe);
                probe[i] = x[i];
                v.is_finite().then(|| (v - fx) / h)
            } else {
                None
            };
            forward
                .or_else(|| {
                    if x[i] - h < lower[i] {
                        return None;
                    }
                    probe[i] = x[i] - h;
                    let v = f(&probe);
                    probe[i] = x[i];
                    v.is_finite().then(|| (fx - v) / h)
                })
                .unwrap_or(0.0)
        })
        .collect()
}

struct Evaluator<'p, 'a> {
    p: &'p BoxProblem<'a>,
    opts: SolverOptions,
}

impl Evaluator<'_, '_> {
    fn f(&self, x: &[f64]) -> f64 {
        (self.p.objective)(x)
    }

    fn grad(&self, x: &[f64], fx: f64) -> DVector<f64> {
        let g = match &self.p.gradient {
            Some(g) => g(x),
            None => finite_difference_gradient(
                &|y: &[f64]| (self.p.objective)(y),
                x,
                fx,
                &self.p.lower,
                &self.p.upper,
                &self.opts,
            ),
        };
        DVector::from_vec(g)
    }

    fn h(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.p.equalities.len(),
            self.p.equalities.iter().map(|h| h(x)),
        )
    }

    /// Forward-difference Jacobian of the equality constraints (m × n).
    fn h_jac(&self, x: &[f64], hx: &DVector<f64>) -> DMatrix<f64> {
        let m = self.p.equalities.len();
        let n = x.len();
        let mut jac = DMatrix::zeros(m, n);
        if m == 0 {
            return jac;
        }
        let mut probe = x.to_vec();
        for i in 0..n {
            let mut step = fd_step(&self.opts, x[i]);
            if x[i] + step > self.p.upper[i] {
                step = -step;
            }
            probe[i] = x[i] + step;
            for (k, h) in self.p.equalities.iter().enumerate() {
                jac[(k, i)] = (h(&probe) - hx[k]) / step;
            }
            probe[i] = x[i];
        }
        jac
    }
}

struct State {
    x: DVector<f64>,
    fx: f64,
    g: DVector<f64>,
    hx: DVector<f64>,
    jh: DMatrix<f64>,
    zl: DVector<f64>,
    zu: DVector<f64>,
    lambda: DVector<f64>,
}

impl State {
    fn sl(&self, lower: &DVector<f64>) -> DVector<f64> {
        &self.x - lower
    }

    fn su(&self, upper: &DVector<f64>) -> DVector<f64> {
        upper - &self.x
    }

    fn lagrangian_gradient(&self) -> DVector<f64> {
        &self.g + self.jh.transpose() * &self.lambda
    }
}

/// Scaled KKT error for barrier parameter `c`.
fn kkt_error(st: &State, lower: &DVector<f64>, upper: &DVector<f64>, c: f64, scale: f64) -> f64 {
    let dual = (st.lagrangian_gradient() - &st.zl + &st.zu).amax() / scale;
    let sl = st.sl(lower);
    let su = st.su(upper);
    let comp_l = sl
        .iter()
        .zip(st.zl.iter())
        .map(|(s, z)| (s * z - c).abs())
        .fold(0.0, f64::max);
    let comp_u = su
        .iter()
        .zip(st.zu.iter())
        .map(|(s, z)| (s * z - c).abs())
        .fold(0.0, f64::max);
    let primal = if st.hx.is_empty() { 0.0 } else { st.hx.amax() };
    dual.max(comp_l).max(comp_u).max(primal)
}

fn merit(fx: f64, sl: &DVector<f64>, su: &DVector<f64>, c: f64, nu: f64, hx: &DVector<f64>) -> f64 {
    let barrier: f64 = sl.iter().chain(su.iter()).map(|s| s.ln()).sum();
    fx - c * barrier + nu * hx.iter().map(|v| v.abs()).sum::<f64>()
}

fn max_step(s: &DVector<f64>, ds: &DVector<f64>, tau: f64) -> f64 {
    s.iter()
        .zip(ds.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(s, d)| -tau * s / d)
        .fold(1.0, f64::min)
}

/// Damped BFGS update of `h` with step `s` and gradient change `y`.
fn bfgs_update(h: &mut DMatrix<f64>, s: &DVector<f64>, y: &DVector<f64>, first: &mut bool) {
    let sy = s.dot(y);
    if *first && sy > 0.0 {
        let scale = y.dot(y) / sy;
        if scale.is_finite() && scale > 0.0 {
            *h = DMatrix::identity(h.nrows(), h.ncols()) * scale;
        }
        *first = false;
    }
    let hs = &*h * s;
    let shs = s.dot(&hs);
    if shs <= 0.0 || !shs.is_finite() {
        return;
    }
    let r = if sy >= 0.2 * shs {
        y.clone()
    } else {
        let theta = 0.8 * shs / (shs - sy);
        y * theta + &hs * (1.0 - theta)
    };
    let sr = s.dot(&r);
    if sr <= 0.0 || !sr.is_finite() {
        return;
    }
    *h += &r * r.transpose() / sr - &hs * hs.transpose() / shs;
}

/// Runs the interior-point iteration from `x0`; points on or outside the
/// bounds are pulled into the interior first.
pub fn interior_point_minimize(p: &BoxProblem<'_>, x0: &[f64], opts: &SolverOptions) -> OptResult {
    let n = p.dim();
    assert_eq!(x0.len(), n, "starting point has the wrong dimension");
    let ev = Evaluator { p, opts: *opts };
    let lower = DVector::from_column_slice(&p.lower);
    let upper = DVector::from_column_slice(&p.upper);
    let tau = opts.fraction_to_boundary;
    let tol = opts.tolerances;

    let x = DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let margin = 1e-3 * (p.upper[i] - p.lower[i]);
            x0[i].clamp(p.lower[i] + margin, p.upper[i] - margin)
        }),
    );
    let fx = ev.f(x.as_slice());
    if !fx.is_finite() {
        return OptResult {
            x: x.as_slice().to_vec(),
            f: fx,
            iterations: 0,
            converged: false,
            status: Termination::NonFiniteStart,
            kkt_residual: f64::INFINITY,
        };
    }
    let mut c = opts.barrier_initial;
    let g = ev.grad(x.as_slice(), fx);
    let hx = ev.h(x.as_slice());
    let jh = ev.h_jac(x.as_slice(), &hx);
    let m = hx.len();
    let scale = g.amax().max(1.0);
    let mut st = State {
        zl: (&x - &lower).map(|s| c / s),
        zu: (&upper - &x).map(|s| c / s),
        x,
        fx,
        g,
        hx,
        jh,
        lambda: DVector::zeros(m),
    };
    let mut hess = DMatrix::<f64>::identity(n, n);
    let mut first_update = true;
    let mut nu: f64 = 1.0;
    let mut iterations = 0;

    let finish = |st: &State, iterations: usize, status: Termination| {
        let kkt = kkt_error(st, &lower, &upper, 0.0, 1.0);
        OptResult {
            x: st.x.as_slice().to_vec(),
            f: st.fx,
            iterations,
            converged: status.is_success(),
            status,
            kkt_residual: kkt,
        }
    };

    loop {
        // barrier update
        while c >= opts.barrier_final && kkt_error(&st, &lower, &upper, c, scale) <= 10.0 * c {
            c *= opts.barrier_factor;
        }
        let barrier_done = c < opts.barrier_final;
        let e0 = kkt_error(&st, &lower, &upper, 0.0, scale);
        let feasible = m == 0 || st.hx.amax() <= tol.constraint;
        if barrier_done && e0 <= tol.function && feasible {
            return finish(&st, iterations, Termination::Converged);
        }
        if iterations >= opts.max_iterations {
            return finish(&st, iterations, Termination::MaxIterations);
        }
        iterations += 1;

        let sl = st.sl(&lower);
        let su = st.su(&upper);
        let sigma = DVector::from_iterator(n, (0..n).map(|i| st.zl[i] / sl[i] + st.zu[i] / su[i]));
        let barrier_grad = DVector::from_iterator(n, (0..n).map(|i| c / sl[i] - c / su[i]));

        let mut step = None;
        for attempt in 0..2 {
            let mut kkt = DMatrix::zeros(n + m, n + m);
            kkt.view_mut((0, 0), (n, n)).copy_from(&hess);
            for i in 0..n {
                kkt[(i, i)] += sigma[i];
            }
            if m > 0 {
                kkt.view_mut((0, n), (n, m)).copy_from(&st.jh.transpose());
                kkt.view_mut((n, 0), (m, n)).copy_from(&st.jh);
            }
            let mut rhs = DVector::zeros(n + m);
            rhs.rows_mut(0, n)
                .copy_from(&(-&st.g + &barrier_grad - st.jh.transpose() * &st.lambda));
            if m > 0 {
                rhs.rows_mut(n, m).copy_from(&(-&st.hx));
            }
            let sol = kkt.lu().solve(&rhs);
            let sol = match sol {
                Some(s) if s.iter().all(|v| v.is_finite()) => s,
                _ => {
                    hess = DMatrix::identity(n, n);
                    first_update = true;
                    continue;
                }
            };
            let dx = sol.rows(0, n).into_owned();
            let dlambda = sol.rows(n, m).into_owned();

            // merit directional derivative
            let dphi = (&st.g - &barrier_grad).dot(&dx);
            if m > 0 {
                nu = nu.max((&st.lambda + &dlambda).amax() + 1.0);
            }
            let h1: f64 = st.hx.iter().map(|v| v.abs()).sum();
            let slope = dphi - nu * h1;
            if slope >= 0.0 && attempt == 0 && dx.amax() > tol.step {
                hess = DMatrix::identity(n, n);
                first_update = true;
                continue;
            }

            let alpha_max = max_step(&sl, &dx, tau).min(max_step(&su, &(-&dx), tau));
            let phi0 = merit(st.fx, &sl, &su, c, nu, &st.hx);
            let mut alpha = alpha_max;
            let mut accepted = None;
            while alpha * dx.amax() >= tol.step {
                let xt = &st.x + &dx * alpha;
                let ft = ev.f(xt.as_slice());
                if ft.is_finite() {
                    let hxt = ev.h(xt.as_slice());
                    let phit = merit(ft, &(&xt - &lower), &(&upper - &xt), c, nu, &hxt);
                    if phit.is_finite() && phit <= phi0 + 1e-4 * alpha * slope.min(0.0) {
                        accepted = Some((xt, ft, hxt));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            match accepted {
                Some(a) => {
                    step = Some((dx, dlambda, alpha, a));
                    break;
                }
                None if attempt == 0 && !first_update => {
                    hess = DMatrix::identity(n, n);
                    first_update = true;
                }
                None => break,
            }
        }

        let Some((dx, dlambda, alpha, (xt, ft, hxt))) = step else {
            if c >= opts.barrier_final {
                // the current barrier subproblem is solved as far as steps allow
                c *= opts.barrier_factor;
                continue;
            }
            let status = if kkt_error(&st, &lower, &upper, 0.0, scale) <= tol.function.sqrt() {
                Termination::StepTolerance
            } else {
                Termination::LineSearchFailure
            };
            return finish(&st, iterations, status);
        };

        // dual step
        let dzl = DVector::from_iterator(
            n,
            (0..n).map(|i| c / sl[i] - st.zl[i] - st.zl[i] / sl[i] * dx[i]),
        );
        let dzu = DVector::from_iterator(
            n,
            (0..n).map(|i| c / su[i] - st.zu[i] + st.zu[i] / su[i] * dx[i]),
        );
        let alpha_z = max_step(&st.zl, &dzl, tau).min(max_step(&st.zu, &dzu, tau));

        let grad_lag_old = st.g.clone() + st.jh.transpose() * (&st.lambda + &dlambda * alpha);
        let x_old = st.x.clone();
        st.x = xt;
        st.fx = ft;
        st.hx = hxt;
        st.g = ev.grad(st.x.as_slice(), st.fx);
        st.jh = ev.h_jac(st.x.as_slice(), &st.hx);
        st.lambda += &dlambda * alpha;
        st.zl += &dzl * alpha_z;
        st.zu += &dzu * alpha_z;

        // keep multipliers within a wide band around the central path
        let sl = st.sl(&lower);
        let su = st.su(&upper);
        for i in 0..n {
            st.zl[i] = st.zl[i].clamp(c / (1e10 * sl[i]), 1e10 * c / sl[i]);
            st.zu[i] = st.zu[i].clamp(c / (1e10 * su[i]), 1e10 * c / su[i]);
        }

        let s = &st.x - &x_old;
        let y = st.lagrangian_gradient() - grad_lag_old;
        bfgs_update(&mut hess, &s, &y, &mut first_update);

        if alpha * dx.amax() < tol.step {
            if c >= opts.barrier_final {
                c *= opts.barrier_factor;
            } else {
                return finish(&st, iterations, Termination::StepTolerance);
            }
        }
    }
}
