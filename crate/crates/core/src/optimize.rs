//! Quasi-Newton minimization of smooth objectives with analytic gradients.

use std::cell::RefCell;

use argmin::core::{CostFunction, Executor, Gradient, State, TerminationReason, TerminationStatus};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::quasinewton::BFGS;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct Options {
    /// Converged once the gradient norm drops below this.
    pub grad_tol: f64,
    pub max_iters: u64,
    /// On a start whose gradient already vanishes, retry from a seeded random
    /// perturbation of this size and keep the result only if it is lower.
    pub restart: Option<(u64, f64)>,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            grad_tol: 1e-8,
            max_iters: 500,
            restart: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub converged: bool,
    pub evaluations: usize,
}

/// Line-search evaluations allowed per iteration before the run is cut short.
const EVALS_PER_ITER: usize = 30;
const MAX_STEP: f64 = 1e3;

struct Problem<'a, F> {
    f: &'a F,
    cache: RefCell<Option<(Vec<f64>, f64, Vec<f64>)>>,
    best: &'a RefCell<Option<(Vec<f64>, f64, Vec<f64>)>>,
    evaluations: &'a RefCell<usize>,
    budget: usize,
}

impl<F: Fn(&[f64]) -> (f64, Vec<f64>)> Problem<'_, F> {
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        if let Some((cx, v, g)) = self.cache.borrow().as_ref() {
            if cx.as_slice() == x {
                return (*v, g.clone());
            }
        }
        self.eval_uncached(x)
    }

    fn eval_budgeted(&self, x: &[f64]) -> Result<(f64, Vec<f64>), argmin::core::Error> {
        let cached = self.cache.borrow().as_ref().is_some_and(|(cx, _, _)| cx.as_slice() == x);
        if !cached && *self.evaluations.borrow() >= self.budget {
            return Err(argmin::core::Error::msg("evaluation budget exhausted"));
        }
        Ok(self.eval(x))
    }

    fn eval_uncached(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (v, g) = (self.f)(x);
        *self.evaluations.borrow_mut() += 1;
        *self.cache.borrow_mut() = Some((x.to_vec(), v, g.clone()));
        let mut best = self.best.borrow_mut();
        if v.is_finite() && best.as_ref().is_none_or(|(_, bv, _)| v < *bv) {
            *best = Some((x.to_vec(), v, g.clone()));
        }
        (v, g)
    }
}

impl<F: Fn(&[f64]) -> (f64, Vec<f64>)> CostFunction for Problem<'_, F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> Result<f64, argmin::core::Error> {
        Ok(self.eval_budgeted(x)?.0)
    }
}

impl<F: Fn(&[f64]) -> (f64, Vec<f64>)> Gradient for Problem<'_, F> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, x: &Vec<f64>) -> Result<Vec<f64>, argmin::core::Error> {
        Ok(self.eval_budgeted(x)?.1)
    }
}

fn norm(g: &[f64]) -> f64 {
    g.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn bfgs<F: Fn(&[f64]) -> (f64, Vec<f64>)>(f: &F, x0: Vec<f64>, opts: &Options) -> Minimum {
    let best = RefCell::new(None);
    let evaluations = RefCell::new(0);
    let problem = Problem {
        f,
        cache: RefCell::new(None),
        best: &best,
        evaluations: &evaluations,
        budget: (opts.max_iters as usize).saturating_mul(EVALS_PER_ITER).saturating_add(EVALS_PER_ITER),
    };
    let (v0, g0) = problem.eval(&x0);
    if norm(&g0) < opts.grad_tol || x0.is_empty() {
        return Minimum {
            grad_norm: norm(&g0),
            x: x0,
            value: v0,
            converged: true,
            evaluations: 1,
        };
    }
    let n = x0.len();
    let h0: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let line_search = MoreThuenteLineSearch::new().with_bounds(f64::EPSILON.sqrt(), MAX_STEP).expect("valid step bounds");
    let solver = BFGS::new(line_search)
        .with_tolerance_grad(opts.grad_tol)
        .and_then(|s| s.with_tolerance_cost(0.0))
        .expect("valid tolerances");
    let outcome = Executor::new(problem, solver)
        .configure(|st| st.param(x0).inv_hessian(h0).max_iters(opts.max_iters))
        .run();
    let solver_converged = matches!(
        outcome.as_ref().map(|r| r.state.get_termination_status().clone()),
        Ok(TerminationStatus::Terminated(TerminationReason::SolverConverged))
    );
    let evaluations = evaluations.into_inner();
    let (x, value, g) = best.into_inner().expect("at least one evaluation");
    let grad_norm = norm(&g);
    Minimum {
        x,
        value,
        grad_norm,
        converged: solver_converged || grad_norm < opts.grad_tol,
        evaluations,
    }
}

/// Minimizes `f` (returning value and gradient) from `x0` with BFGS and a
/// Moré–Thuente line search. The best point seen is returned even when the
/// solver stops early; `converged` reports whether the gradient tolerance was met.
pub fn minimize<F>(f: F, x0: Vec<f64>, opts: &Options) -> Minimum
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let first = bfgs(&f, x0.clone(), opts);
    let Some((seed, scale)) = opts.restart else {
        return first;
    };
    if first.evaluations > 1 || x0.is_empty() {
        return first;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start: Vec<f64> = x0.iter().map(|v| v + scale * (2.0 * rng.random::<f64>() - 1.0)).collect();
    let second = bfgs(&f, start, opts);
    if second.value < first.value {
        second
    } else {
        first
    }
}
