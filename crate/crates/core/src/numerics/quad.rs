use crate::error::{Error, Result};

/// Tolerances for adaptive Simpson quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_depth: 40,
        }
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// Each panel is split until the Richardson error estimate falls under
/// `max(abs_tol, rel_tol * |estimate|)` (halved on each level). If some panel
/// needs more than `max_depth` splits the best estimate is carried in
/// [`Error::QuadratureDepth`].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: QuadratureSpec) -> Result<f64> {
    if !(spec.abs_tol > 0.0 && spec.rel_tol > 0.0) {
        return Err(Error::InvalidParameter("quadrature tolerances must be positive".into()));
    }
    if !(a <= b) {
        return Err(Error::InvalidParameter(format!("integration bounds out of order: [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    // A few uniform panels up front so narrow features are not skipped by
    // the very first error estimate.
    const PANELS: usize = 8;
    let h = (b - a) / PANELS as f64;
    let mut total = 0.0;
    let mut exhausted = false;
    // Coarse estimate used only to set the relative tolerance.
    let coarse: f64 = (0..PANELS)
        .map(|i| {
            let lo = a + i as f64 * h;
            simpson(&f, lo, lo + h).0
        })
        .sum();
    let tol = spec.abs_tol.max(spec.rel_tol * coarse.abs()) / PANELS as f64;
    for i in 0..PANELS {
        let lo = a + i as f64 * h;
        let hi = if i + 1 == PANELS { b } else { lo + h };
        let (whole, fa, fm, fb) = simpson(&f, lo, hi);
        total += recurse(&f, lo, hi, fa, fm, fb, whole, tol, spec.max_depth, &mut exhausted);
    }
    if !total.is_finite() {
        return Err(Error::NonFinite { step: 0, t: a });
    }
    if exhausted {
        return Err(Error::QuadratureDepth {
            max_depth: spec.max_depth,
            estimate: total,
        });
    }
    Ok(total)
}

/// Like [`integrate`] but returns the best estimate even when the depth
/// budget runs out.
pub fn integrate_lenient<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: QuadratureSpec) -> Result<f64> {
    match integrate(f, a, b, spec) {
        Err(Error::QuadratureDepth { estimate, .. }) => Ok(estimate),
        other => other,
    }
}

fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64, f64) {
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fa, fm, fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    exhausted: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 {
        *exhausted = true;
        return left + right + delta / 15.0;
    }
    let roundoff = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if delta.abs() <= 15.0 * tol || delta.abs() <= roundoff || (b - a).abs() < 1e-14 * a.abs().max(1.0) {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, exhausted)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, exhausted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_on_unit_interval() {
        let v = integrate(|x| x * x, 0.0, 1.0, QuadratureSpec::default()).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn decaying_exponential() {
        let v = integrate(|t| (-t).exp(), 0.0, 10.0, QuadratureSpec::default()).unwrap();
        assert!((v - (1.0 - (-10.0f64).exp())).abs() < 1e-10);
    }

    #[test]
    fn depth_exhaustion_carries_estimate() {
        let spec = QuadratureSpec {
            max_depth: 2,
            abs_tol: 1e-14,
            rel_tol: 1e-14,
        };
        match integrate(|x: f64| x.sqrt(), 0.0, 1.0, spec) {
            Err(Error::QuadratureDepth { estimate, .. }) => assert!((estimate - 2.0 / 3.0).abs() < 1e-2),
            other => panic!("expected depth error, got {other:?}"),
        }
    }

    #[test]
    fn empty_and_reversed_intervals() {
        assert_eq!(integrate(|x| x, 2.0, 2.0, QuadratureSpec::default()).unwrap(), 0.0);
        assert!(integrate(|x| x, 2.0, 1.0, QuadratureSpec::default()).is_err());
    }

    proptest::proptest! {
        #[test]
        fn exact_for_cubics(c0 in -5.0f64..5.0, c1 in -5.0f64..5.0, c2 in -5.0f64..5.0,
                            c3 in -5.0f64..5.0, a in -3.0f64..0.0, w in 0.1f64..4.0) {
            let b = a + w;
            let p = |x: f64| c0 + x * (c1 + x * (c2 + x * c3));
            let anti = |x: f64| x * (c0 + x * (c1 / 2.0 + x * (c2 / 3.0 + x * c3 / 4.0)));
            let v = integrate(p, a, b, QuadratureSpec::default()).unwrap();
            let exact = anti(b) - anti(a);
            proptest::prop_assert!((v - exact).abs() <= 1e-11 * exact.abs().max(1.0));
        }
    }
}
