use crate::error::{Error, Result};

/// Time samples and states produced by [`integrate_ode`].
#[derive(Debug, Clone, PartialEq)]
pub struct OdePath {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
}

impl OdePath {
    pub fn last(&self) -> &[f64] {
        self.y.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// Classical fixed-step fourth-order Runge–Kutta.
///
/// `rhs(t, y, dy)` writes the derivative into `dy`. The final step is
/// shortened so the path ends exactly at `t_span.1`.
pub fn integrate_ode<F>(mut rhs: F, y0: &[f64], t_span: (f64, f64), dt: f64) -> Result<OdePath>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!("step size must be positive, got {dt}")));
    }
    let (t0, t1) = t_span;
    if !(t1 >= t0) {
        return Err(Error::InvalidParameter(format!("time span out of order: [{t0}, {t1}]")));
    }
    let n = y0.len();
    let steps = ((t1 - t0) / dt - 1e-9).ceil().max(0.0) as usize;
    let mut path = OdePath {
        t: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
    };
    let mut y = y0.to_vec();
    let mut t = t0;
    path.t.push(t);
    path.y.push(y.clone());

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    for step in 1..=steps {
        let h = if step == steps { t1 - t } else { dt };
        rhs(t, &y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        rhs(t + 0.5 * h, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + h * k3[i];
        }
        rhs(t + h, &tmp, &mut k4);
        for i in 0..n {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t = if step == steps { t1 } else { t + h };
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step, t });
        }
        path.t.push(t);
        path.y.push(y.clone());
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TAU: f64 = 0.932;

    fn decay_error(dt: f64) -> f64 {
        let p = integrate_ode(|_, y, dy| dy[0] = -y[0] / TAU, &[3.0], (0.0, 1.0), dt).unwrap();
        (p.last()[0] - 3.0 * (-1.0 / TAU).exp()).abs()
    }

    #[test]
    fn linear_decay() {
        assert!(decay_error(1e-3) < 1e-8);
    }

    #[test]
    fn fourth_order_by_step_halving() {
        let (e1, e2) = (decay_error(0.2), decay_error(0.1));
        assert!(e2 <= e1 / 15.0, "{e1} {e2}");
    }

    #[test]
    fn force_relaxation_under_constant_drive() {
        // df/dt = gamma (u (F - f) - f) relaxes exponentially to uF/(u+1).
        let (gamma, fmax, u, f0) = (0.0025, 8.0, 4.34, 6.5);
        let rate = gamma * (u + 1.0);
        let f_inf = u * fmax / (u + 1.0);
        let exact = |t: f64| f_inf + (f0 - f_inf) * (-rate * t).exp();
        let rhs = |_: f64, y: &[f64], dy: &mut [f64]| dy[0] = gamma * (u * (fmax - y[0]) - y[0]);
        let p = integrate_ode(rhs, &[f0], (0.0, 200.0), 0.5).unwrap();
        for (t, y) in p.t.iter().zip(&p.y) {
            assert!((y[0] - exact(*t)).abs() < 1e-6);
        }
        let err = |dt: f64| {
            let p = integrate_ode(
                |_: f64, y: &[f64], dy: &mut [f64]| dy[0] = 0.2 * (u * (fmax - y[0]) - y[0]),
                &[f0],
                (0.0, 4.0),
                dt,
            )
            .unwrap();
            let exact = f_inf + (f0 - f_inf) * (-0.2 * (u + 1.0) * 4.0f64).exp();
            (p.last()[0] - exact).abs()
        };
        assert!(err(0.1) <= err(0.2) / 15.0);
    }

    #[test]
    fn ends_exactly_at_final_time() {
        let p = integrate_ode(|_, _, dy| dy[0] = 1.0, &[0.0], (0.0, 1.05), 0.1).unwrap();
        assert_eq!(*p.t.last().unwrap(), 1.05);
        assert!((p.last()[0] - 1.05).abs() < 1e-14);
    }

    #[test]
    fn blow_up_reports_offending_step() {
        let r = integrate_ode(|_, y, dy| dy[0] = y[0] * y[0], &[1.0], (0.0, 2.0), 0.1);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
        assert!(integrate_ode(|_, _, _| {}, &[1.0], (0.0, 1.0), 0.0).is_err());
    }
}
