//! Forward-mode automatic differentiation carrying value, gradient and dense
//! Hessian with respect to `N` local inputs.
//!
//! The collocation defects of one mesh interval depend on at most eleven
//! decision variables, so exact element Hessians are cheap to propagate this
//! way and the dynamics need only be written once, generically over [`Real`].

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar arithmetic shared by `f64` and [`Dual2`].
pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    /// Applies a scalar function given its value and first two derivatives at
    /// `self.value()`.
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self;
}

impl Real for f64 {
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn chain(self, f: f64, _df: f64, _d2f: f64) -> Self {
        f
    }
}

/// Second-order forward dual number over `N` independent inputs.
///
/// Only the upper triangle of `h` is maintained during arithmetic; call
/// [`Dual2::hess`] for the full symmetric matrix entry.
#[derive(Clone, Copy, Debug)]
pub struct Dual2<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
    h: [[f64; N]; N],
}

impl<const N: usize> Dual2<N> {
    pub fn constant(v: f64) -> Self {
        Dual2 {
            v,
            g: [0.0; N],
            h: [[0.0; N]; N],
        }
    }

    /// The `i`-th independent variable with value `v`.
    pub fn var(v: f64, i: usize) -> Self {
        let mut d = Self::constant(v);
        d.g[i] = 1.0;
        d
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        if i <= j {
            self.h[i][j]
        } else {
            self.h[j][i]
        }
    }
}

impl<const N: usize> Real for Dual2<N> {
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Self::constant(f);
        for i in 0..N {
            out.g[i] = df * self.g[i];
            if self.g[i] == 0.0 && d2f == 0.0 {
                for j in i..N {
                    out.h[i][j] = df * self.h[i][j];
                }
                continue;
            }
            for j in i..N {
                out.h[i][j] = df * self.h[i][j] + d2f * self.g[i] * self.g[j];
            }
        }
        out
    }
}

impl<const N: usize> Add for Dual2<N> {
    type Output = Self;
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..N {
            self.g[i] += o.g[i];
            for j in i..N {
                self.h[i][j] += o.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for Dual2<N> {
    type Output = Self;
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..N {
            self.g[i] -= o.g[i];
            for j in i..N {
                self.h[i][j] -= o.h[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Mul for Dual2<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut out = Self::constant(self.v * o.v);
        for i in 0..N {
            out.g[i] = self.v * o.g[i] + o.v * self.g[i];
            let (ai, bi) = (self.g[i], o.g[i]);
            for j in i..N {
                out.h[i][j] = self.v * o.h[i][j]
                    + o.v * self.h[i][j]
                    + ai * o.g[j]
                    + bi * self.g[j];
            }
        }
        out
    }
}

impl<const N: usize> Div for Dual2<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = o.v.recip();
        let r = o.chain(inv, -inv * inv, 2.0 * inv * inv * inv);
        self * r
    }
}

impl<const N: usize> Neg for Dual2<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl<const N: usize> Add<f64> for Dual2<N> {
    type Output = Self;
    fn add(mut self, c: f64) -> Self {
        self.v += c;
        self
    }
}

impl<const N: usize> Sub<f64> for Dual2<N> {
    type Output = Self;
    fn sub(mut self, c: f64) -> Self {
        self.v -= c;
        self
    }
}

impl<const N: usize> Mul<f64> for Dual2<N> {
    type Output = Self;
    fn mul(mut self, c: f64) -> Self {
        self.v *= c;
        for i in 0..N {
            self.g[i] *= c;
            for j in i..N {
                self.h[i][j] *= c;
            }
        }
        self
    }
}

impl<const N: usize> Div<f64> for Dual2<N> {
    type Output = Self;
    fn div(self, c: f64) -> Self {
        self * c.recip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample<T: Real>(x: T, y: T) -> T {
        let e = x.chain(x.value().exp(), x.value().exp(), x.value().exp());
        (x * y + e) / (y * y + 1.0) - x * 3.0
    }

    #[test]
    fn matches_finite_differences() {
        let (x0, y0) = (0.3, -1.2);
        let d = sample(Dual2::<2>::var(x0, 0), Dual2::<2>::var(y0, 1));
        assert!((d.v - sample(x0, y0)).abs() < 1e-15);
        let h = 1e-5;
        let fx = |x: f64, y: f64| sample(x, y);
        let gx = (fx(x0 + h, y0) - fx(x0 - h, y0)) / (2.0 * h);
        let gy = (fx(x0, y0 + h) - fx(x0, y0 - h)) / (2.0 * h);
        assert!((d.g[0] - gx).abs() < 1e-8);
        assert!((d.g[1] - gy).abs() < 1e-8);
        let hxy = (fx(x0 + h, y0 + h) - fx(x0 + h, y0 - h) - fx(x0 - h, y0 + h) + fx(x0 - h, y0 - h))
            / (4.0 * h * h);
        let hxx = (fx(x0 + h, y0) - 2.0 * fx(x0, y0) + fx(x0 - h, y0)) / (h * h);
        assert!((d.hess(0, 1) - hxy).abs() < 1e-4);
        assert!((d.hess(1, 0) - hxy).abs() < 1e-4);
        assert!((d.hess(0, 0) - hxx).abs() < 1e-4);
    }
}
