//! Box-bounded Levenberg–Marquardt on a forward-difference Jacobian.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Stop when the relative drop of the cost falls below this.
    pub ftol: f64,
    /// Stop when the relative step falls below this.
    pub xtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iter: 200,
            ftol: 1e-14,
            xtol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmReport {
    pub x: Vec<f64>,
    /// Sum of squared residuals at `x`.
    pub cost: f64,
    pub iterations: usize,
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimizes `Σ r_i(x)²` with `x` clamped to `[lo, hi]` componentwise.
/// Non-finite residual vectors count as an infinite cost.
pub fn levenberg_marquardt<R>(residual: R, x0: &[f64], lo: &[f64], hi: &[f64], opts: LmOptions) -> LmReport
where
    R: Fn(&[f64]) -> Vec<f64>,
{
    let n = x0.len();
    let clamp = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lo[i], hi[i]);
        }
    };
    let cost_of = |r: &[f64]| {
        let c = sum_sq(r);
        if c.is_finite() {
            c
        } else {
            f64::INFINITY
        }
    };
    let mut x = x0.to_vec();
    clamp(&mut x);
    let mut r = residual(&x);
    let mut cost = cost_of(&r);
    let mut mu = 1e-3;
    let mut iterations = 0;
    while iterations < opts.max_iter && cost.is_finite() {
        iterations += 1;
        let m = r.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for j in 0..n {
            let h = 1e-7 * x[j].abs().max(1e-3);
            let mut xp = x.clone();
            // step inward when sitting on the upper bound
            let h = if xp[j] + h > hi[j] { -h } else { h };
            xp[j] += h;
            let rp = residual(&xp);
            for i in 0..m {
                jac[(i, j)] = (rp[i] - r[i]) / h;
            }
        }
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * rv;
        let mut improved = false;
        while mu < 1e12 {
            let mut a = jtj.clone();
            for j in 0..n {
                a[(j, j)] += mu * jtj[(j, j)].max(1e-12);
            }
            let Some(chol) = a.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let mut xt: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            clamp(&mut xt);
            let rt = residual(&xt);
            let ct = cost_of(&rt);
            if ct < cost {
                let rel_step = x
                    .iter()
                    .zip(&xt)
                    .map(|(a, b)| (a - b).abs() / a.abs().max(1e-8))
                    .fold(0.0, f64::max);
                let rel_drop = (cost - ct) / cost.max(1e-300);
                x = xt;
                r = rt;
                cost = ct;
                mu = (mu / 3.0).max(1e-12);
                improved = true;
                if rel_drop < opts.ftol || rel_step < opts.xtol {
                    return LmReport { x, cost, iterations };
                }
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    LmReport { x, cost, iterations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exponential_decay() {
        let ts: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let data: Vec<f64> = ts.iter().map(|t| 3.0 * (-t / 1.7).exp() + 0.5).collect();
        let rep = levenberg_marquardt(
            |p| ts.iter().zip(&data).map(|(t, y)| p[0] * (-t / p[1]).exp() + p[2] - y).collect(),
            &[1.0, 0.5, 0.0],
            &[0.0, 0.01, -10.0],
            &[10.0, 10.0, 10.0],
            LmOptions::default(),
        );
        assert!((rep.x[0] - 3.0).abs() < 1e-7 && (rep.x[1] - 1.7).abs() < 1e-7, "{:?}", rep);
        assert!(rep.cost < 1e-18);
    }

    #[test]
    fn respects_bounds() {
        let rep = levenberg_marquardt(|p| vec![p[0] - 5.0], &[0.0], &[-1.0], &[2.0], LmOptions::default());
        assert_eq!(rep.x[0], 2.0);
    }
}
