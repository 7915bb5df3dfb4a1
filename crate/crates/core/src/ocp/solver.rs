//! Augmented-Lagrangian solver for equality-constrained, bound-constrained
//! nonlinear programs whose Hessians are banded with a small border.
//!
//! Outer loop: first-order multiplier updates `λ ← λ + ρ c`, with `ρ`
//! multiplied by ten whenever the constraint violation stalls. Inner loop:
//! projected Newton on the augmented Lagrangian with an inertia-correcting
//! diagonal shift and a projected Armijo search.

use log::{debug, trace};

use super::banded::BorderedBand;
use crate::error::{Error, Result};

/// First and second derivatives at a point.
#[derive(Debug, Clone)]
pub struct Derivatives {
    /// Gradient of the objective.
    pub grad: Vec<f64>,
    /// Constraint Jacobian, one sparse row `(column, value)` per constraint.
    pub jac: Vec<Vec<(usize, f64)>>,
    /// `∇²f + Σ wᵢ ∇²cᵢ` for the weights passed to [`Nlp::derivatives`].
    pub hess: BorderedBand,
}

/// `min f(z)  s.t.  c(z) = 0,  lo ≤ z ≤ hi`.
pub trait Nlp {
    fn n_vars(&self) -> usize;
    fn n_constraints(&self) -> usize;
    /// Number of trailing variables that may couple to every other one.
    fn n_border(&self) -> usize;
    /// Hessian half-bandwidth among the leading variables.
    fn bandwidth(&self) -> usize;
    fn bounds(&self) -> (Vec<f64>, Vec<f64>);
    fn objective(&self, z: &[f64]) -> f64;
    fn constraints(&self, z: &[f64], c: &mut [f64]);
    fn derivatives(&self, z: &[f64], weights: &[f64]) -> Derivatives;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target for the KKT residual `max(‖c‖∞, ‖projected ∇L‖∞)`.
    pub tol: f64,
    pub max_outer: usize,
    /// Newton iterations allowed per outer iteration.
    pub max_inner: usize,
    pub rho0: f64,
    pub rho_max: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_outer: 60,
            max_inner: 80,
            rho0: 100.0,
            rho_max: 1e12,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.rho0 > 0.0) || !(self.rho_max >= self.rho0) {
            return Err(Error::InvalidParameter("solver tolerances and penalties must be positive".into()));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::InvalidParameter("iteration limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub z: Vec<f64>,
    pub multipliers: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub outer_iterations: usize,
    pub newton_iterations: usize,
}

fn project(z: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..z.len() {
        z[i] = z[i].clamp(lo[i], hi[i]);
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `‖z − P(z − g)‖∞`, zero for pinned variables.
fn projected_gradient_norm(z: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> f64 {
    let mut m = 0.0f64;
    for i in 0..z.len() {
        let r = z[i] - (z[i] - g[i]).clamp(lo[i], hi[i]);
        m = m.max(r.abs());
    }
    m
}

struct Merit<'a, P: Nlp + ?Sized> {
    nlp: &'a P,
    lambda: &'a [f64],
    rho: f64,
    c: Vec<f64>,
}

impl<P: Nlp + ?Sized> Merit<'_, P> {
    fn value(&mut self, z: &[f64]) -> f64 {
        self.nlp.constraints(z, &mut self.c);
        let mut v = self.nlp.objective(z);
        for (ci, li) in self.c.iter().zip(self.lambda) {
            v += li * ci + 0.5 * self.rho * ci * ci;
        }
        v
    }
}

/// Gradient and Hessian of the augmented Lagrangian at `z`.
fn al_derivatives<P: Nlp + ?Sized>(nlp: &P, z: &[f64], lambda: &[f64], rho: f64) -> (Vec<f64>, BorderedBand) {
    let m = nlp.n_constraints();
    let mut c = vec![0.0; m];
    nlp.constraints(z, &mut c);
    let w: Vec<f64> = (0..m).map(|i| lambda[i] + rho * c[i]).collect();
    let Derivatives { mut grad, jac, mut hess } = nlp.derivatives(z, &w);
    for (row, wi) in jac.iter().zip(&w) {
        for &(j, a) in row {
            grad[j] += wi * a;
        }
        for (p, &(i, a)) in row.iter().enumerate() {
            for &(j, b) in &row[p..] {
                hess.add(i, j, rho * a * b);
            }
        }
    }
    (grad, hess)
}

/// Projected Newton on the augmented Lagrangian. Returns the final
/// projected-gradient norm and the number of Newton steps.
#[allow(clippy::too_many_arguments)]
fn inner_solve<P: Nlp + ?Sized>(
    nlp: &P,
    z: &mut [f64],
    lambda: &[f64],
    rho: f64,
    omega: f64,
    max_iter: usize,
    lo: &[f64],
    hi: &[f64],
) -> (f64, usize) {
    let n = z.len();
    let mut merit = Merit {
        nlp,
        lambda,
        rho,
        c: vec![0.0; nlp.n_constraints()],
    };
    let mut shift = 0.0f64;
    let mut pg = f64::INFINITY;
    let mut trial = vec![0.0; n];
    for it in 0..max_iter {
        let (g, mut h) = al_derivatives(nlp, z, lambda, rho);
        pg = projected_gradient_norm(z, &g, lo, hi);
        if pg <= omega || !pg.is_finite() {
            return (pg, it);
        }
        // ε-active bounds: pinned, or near a bound with the gradient pushing out.
        let eps = pg.min(1e-3);
        let mut free = vec![true; n];
        let mut step = vec![0.0; n];
        for i in 0..n {
            if lo[i] == hi[i] {
                free[i] = false;
            } else if z[i] <= lo[i] + eps && g[i] > 0.0 {
                free[i] = false;
                step[i] = lo[i] - z[i];
            } else if z[i] >= hi[i] - eps && g[i] < 0.0 {
                free[i] = false;
                step[i] = hi[i] - z[i];
            }
        }
        // Move the coupling to clamped variables onto the right-hand side.
        let mut rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        if step.iter().any(|s| *s != 0.0) {
            let mut hs = vec![0.0; n];
            h.mul_vec(&step, &mut hs);
            for i in 0..n {
                rhs[i] -= hs[i];
            }
        }
        for i in 0..n {
            if !free[i] {
                h.pin(i);
                rhs[i] = 0.0;
            }
        }
        let diag_scale = (0..n).filter(|&i| free[i]).map(|i| h.get(i, i).abs()).fold(1e-8, f64::max);
        let mut accepted = false;
        shift = if shift > 0.0 { shift / 4.0 } else { 0.0 };
        if shift < 1e-14 * diag_scale {
            shift = 0.0;
        }
        let base = merit.value(z);
        for _attempt in 0..60 {
            let mut hh = h.clone();
            if shift > 0.0 {
                hh.shift_diagonal(shift, &free);
            }
            let Some(chol) = hh.cholesky() else {
                shift = (4.0 * shift).max(1e-10 * diag_scale);
                continue;
            };
            let mut p = rhs.clone();
            chol.solve(&mut p);
            for i in 0..n {
                if !free[i] {
                    p[i] = step[i];
                }
            }
            let mut alpha = 1.0;
            for _ls in 0..40 {
                for i in 0..n {
                    trial[i] = z[i] + alpha * p[i];
                }
                project(&mut trial, lo, hi);
                let decrease: f64 = (0..n).map(|i| g[i] * (trial[i] - z[i])).sum();
                let val = merit.value(&trial);
                if val.is_finite() && val <= base + 1e-4 * decrease.min(0.0) && decrease <= 0.0 {
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if accepted {
                trace!("newton it {it}: pg {pg:.3e} alpha {alpha} shift {shift:.2e}");
                z.copy_from_slice(&trial);
                break;
            }
            shift = (10.0 * shift).max(1e-6 * diag_scale);
        }
        if !accepted {
            return (pg, it);
        }
    }
    let (g, _) = al_derivatives(nlp, z, lambda, rho);
    pg = pg.min(projected_gradient_norm(z, &g, lo, hi));
    (pg, max_iter)
}

/// Solves `nlp` from `z0`. On an iteration cap the best iterate is carried in
/// [`Error::SolverFailure`].
pub fn solve_nlp<P: Nlp + ?Sized>(nlp: &P, z0: &[f64], opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    let n = nlp.n_vars();
    let m = nlp.n_constraints();
    if z0.len() != n {
        return Err(Error::InvalidParameter(format!("initial point has {} entries, expected {n}", z0.len())));
    }
    let (lo, hi) = nlp.bounds();
    let mut z = z0.to_vec();
    project(&mut z, &lo, &hi);
    let mut lambda = vec![0.0; m];
    let mut rho = opts.rho0;
    let mut omega = 1e-2f64;
    let mut prev_primal = f64::INFINITY;
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut newton_total = 0;
    let mut c = vec![0.0; m];
    for outer in 0..opts.max_outer {
        let (pg_al, its) = inner_solve(nlp, &mut z, &lambda, rho, omega.max(0.1 * opts.tol), opts.max_inner, &lo, &hi);
        newton_total += its;
        nlp.constraints(&z, &mut c);
        let primal = inf_norm(&c);
        for i in 0..m {
            lambda[i] += rho * c[i];
        }
        // ∇L(z, λ⁺) equals ∇L_A(z, λ), so the inner residual is the dual one.
        let dual = pg_al;
        let kkt = primal.max(dual);
        debug!(
            "outer {outer}: rho {rho:.1e} primal {primal:.3e} dual {dual:.3e} newton {its} f {:.8}",
            nlp.objective(&z)
        );
        if best.as_ref().is_none_or(|(r, _)| kkt < *r) {
            best = Some((kkt, z.clone()));
        }
        if kkt <= opts.tol {
            return Ok(SolveReport {
                objective: nlp.objective(&z),
                z,
                multipliers: lambda,
                kkt_residual: kkt,
                primal_residual: primal,
                dual_residual: dual,
                outer_iterations: outer + 1,
                newton_iterations: newton_total,
            });
        }
        // Only an inner solve that reached its tolerance says anything about
        // whether the penalty is too weak.
        let inner_done = pg_al <= omega.max(0.1 * opts.tol);
        if inner_done && primal > 0.25 * prev_primal && primal > opts.tol {
            rho = (10.0 * rho).min(opts.rho_max);
        }
        prev_primal = primal;
        omega = (0.1 * omega).max(0.1 * opts.tol);
    }
    let (kkt, z) = best.unwrap_or((f64::INFINITY, z));
    Err(Error::SolverFailure {
        iterations: opts.max_outer,
        kkt_residual: kkt,
        best: z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// min (z0 - 1)² + (z1 - 2)² + z2²  s.t.  z0 + z1 + z2 = 1,  z2 ≥ 0.5.
    struct Toy;

    impl Nlp for Toy {
        fn n_vars(&self) -> usize {
            3
        }
        fn n_constraints(&self) -> usize {
            1
        }
        fn n_border(&self) -> usize {
            1
        }
        fn bandwidth(&self) -> usize {
            1
        }
        fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
            (vec![f64::NEG_INFINITY, f64::NEG_INFINITY, 0.5], vec![f64::INFINITY; 3])
        }
        fn objective(&self, z: &[f64]) -> f64 {
            (z[0] - 1.0).powi(2) + (z[1] - 2.0).powi(2) + z[2] * z[2]
        }
        fn constraints(&self, z: &[f64], c: &mut [f64]) {
            c[0] = z[0] + z[1] + z[2] - 1.0;
        }
        fn derivatives(&self, z: &[f64], _w: &[f64]) -> Derivatives {
            let mut hess = BorderedBand::zeros(3, 1, 1);
            for i in 0..3 {
                hess.add(i, i, 2.0);
            }
            Derivatives {
                grad: vec![2.0 * (z[0] - 1.0), 2.0 * (z[1] - 2.0), 2.0 * z[2]],
                jac: vec![vec![(0, 1.0), (1, 1.0), (2, 1.0)]],
                hess,
            }
        }
    }

    #[test]
    fn toy_problem_hits_the_bound() {
        let r = solve_nlp(&Toy, &[0.0, 0.0, 3.0], &SolverOptions::default()).unwrap();
        // z2 sits on its bound; z0 + z1 = 0.5 with z1 - z0 = 1.
        assert!((r.z[2] - 0.5).abs() < 1e-9);
        assert!((r.z[0] + 0.25).abs() < 1e-7);
        assert!((r.z[1] - 0.75).abs() < 1e-7);
        assert!((r.multipliers[0] - 2.5).abs() < 1e-6);
        assert!(r.kkt_residual <= 1e-8);
    }

    #[test]
    fn iteration_cap_reports_best_iterate() {
        let opts = SolverOptions {
            max_outer: 1,
            max_inner: 1,
            tol: 1e-14,
            ..Default::default()
        };
        match solve_nlp(&Toy, &[0.0, 0.0, 3.0], &opts) {
            Err(Error::SolverFailure { best, kkt_residual, .. }) => {
                assert_eq!(best.len(), 3);
                assert!(kkt_residual.is_finite());
            }
            other => panic!("expected solver failure, got {other:?}"),
        }
    }
}
