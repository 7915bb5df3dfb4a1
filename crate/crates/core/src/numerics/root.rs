use crate::error::{Error, Result};

/// Default absolute tolerance on the root location.
pub const DEFAULT_ROOT_TOL: f64 = 1e-10;

const MAX_ITER: usize = 200;

/// An interval known to contain a sign change of some function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Bracket {
    /// Evaluates `f` at both ends and checks for a sign change.
    pub fn new<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> Result<Self> {
        let b = Bracket {
            lo,
            hi,
            f_lo: f(lo),
            f_hi: f(hi),
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lo < self.hi
            && self.f_lo.is_finite()
            && self.f_hi.is_finite()
            && (self.f_lo == 0.0 || self.f_hi == 0.0 || self.f_lo.signum() != self.f_hi.signum());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidBracket {
                lo: self.lo,
                hi: self.hi,
                f_lo: self.f_lo,
                f_hi: self.f_hi,
            })
        }
    }
}

/// Brent's method on a validated bracket.
///
/// Inverse quadratic interpolation and secant steps are accepted only while
/// they stay inside the current bracket and shrink it fast enough; otherwise
/// the iteration falls back to bisection, so convergence is guaranteed for
/// any continuous `f`.
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, bracket: Bracket, tol: f64) -> Result<f64> {
    bracket.validate()?;
    let tol = if tol > 0.0 { tol } else { DEFAULT_ROOT_TOL };
    let (mut a, mut b) = (bracket.lo, bracket.hi);
    let (mut fa, mut fb) = (bracket.f_lo, bracket.f_hi);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::NonFinite { step: 0, t: b });
        }
    }
    Ok(b)
}

/// Convenience wrapper: builds the bracket and solves.
pub fn find_root_in<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let bracket = Bracket::new(&mut f, lo, hi)?;
    find_root(f, bracket, tol)
}
