//! Symmetric matrices that are banded except for a few trailing "border"
//! rows and columns, with a Cholesky factorization exploiting that shape.
//!
//! Collocation Hessians have exactly this structure: each mesh interval only
//! couples neighbouring nodes, while the free final time couples to all of
//! them.

/// Symmetric `n × n` matrix, `n = nb + k`: a band of half-width `bw` on the
/// leading `nb` indices plus `k` dense trailing rows and columns.
#[derive(Debug, Clone)]
pub struct BorderedBand {
    nb: usize,
    k: usize,
    bw: usize,
    /// `band[i * (bw + 1) + d]` is entry `(i, i - d)`.
    band: Vec<f64>,
    /// `border[c * nb + i]` is entry `(i, nb + c)`.
    border: Vec<f64>,
    /// `corner[a * k + b]` is entry `(nb + a, nb + b)`.
    corner: Vec<f64>,
}

impl BorderedBand {
    pub fn zeros(n: usize, k: usize, bw: usize) -> Self {
        assert!(k <= n);
        let nb = n - k;
        BorderedBand {
            nb,
            k,
            bw,
            band: vec![0.0; nb * (bw + 1)],
            border: vec![0.0; nb * k],
            corner: vec![0.0; k * k],
        }
    }

    pub fn n(&self) -> usize {
        self.nb + self.k
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn clear(&mut self) {
        self.band.iter_mut().for_each(|v| *v = 0.0);
        self.border.iter_mut().for_each(|v| *v = 0.0);
        self.corner.iter_mut().for_each(|v| *v = 0.0);
    }

    fn slot(&mut self, i: usize, j: usize) -> &mut f64 {
        let (nb, k, bw) = (self.nb, self.k, self.bw);
        match (i >= nb, j >= nb) {
            (true, true) => &mut self.corner[(i - nb) * k + (j - nb)],
            (false, true) => &mut self.border[(j - nb) * nb + i],
            (true, false) => &mut self.border[(i - nb) * nb + j],
            (false, false) => {
                let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
                assert!(hi - lo <= bw, "entry ({i}, {j}) outside band of half-width {bw}");
                &mut self.band[hi * (bw + 1) + (hi - lo)]
            }
        }
    }

    /// Adds `v` to entry `(i, j)` (and, implicitly, `(j, i)`). Call once per
    /// unordered pair; diagonal entries are added once.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if i >= self.nb && j >= self.nb && i != j {
            // the corner is stored densely, so keep both halves in sync
            let nb = self.nb;
            let k = self.k;
            self.corner[(i - nb) * k + (j - nb)] += v;
            self.corner[(j - nb) * k + (i - nb)] += v;
        } else {
            *self.slot(i, j) += v;
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (nb, k, bw) = (self.nb, self.k, self.bw);
        match (i >= nb, j >= nb) {
            (true, true) => self.corner[(i - nb) * k + (j - nb)],
            (false, true) => self.border[(j - nb) * nb + i],
            (true, false) => self.border[(i - nb) * nb + j],
            (false, false) => {
                let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
                if hi - lo > bw {
                    0.0
                } else {
                    self.band[hi * (bw + 1) + (hi - lo)]
                }
            }
        }
    }

    /// Replaces row and column `i` by the identity.
    pub fn pin(&mut self, i: usize) {
        let (nb, k, bw) = (self.nb, self.k, self.bw);
        if i < nb {
            for d in 0..=bw {
                if d <= i {
                    self.band[i * (bw + 1) + d] = 0.0;
                }
                if i + d < nb {
                    self.band[(i + d) * (bw + 1) + d] = 0.0;
                }
            }
            for c in 0..k {
                self.border[c * nb + i] = 0.0;
            }
            self.band[i * (bw + 1)] = 1.0;
        } else {
            let a = i - nb;
            for c in 0..nb {
                self.border[a * nb + c] = 0.0;
            }
            for b in 0..k {
                self.corner[a * k + b] = 0.0;
                self.corner[b * k + a] = 0.0;
            }
            self.corner[a * k + a] = 1.0;
        }
    }

    /// Adds `shift` to the diagonal entries flagged in `mask`.
    pub fn shift_diagonal(&mut self, shift: f64, mask: &[bool]) {
        for (i, &m) in mask.iter().enumerate() {
            if m {
                self.add(i, i, shift);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n();
        out[..n].iter_mut().for_each(|v| *v = 0.0);
        let (nb, k, bw) = (self.nb, self.k, self.bw);
        for i in 0..nb {
            out[i] += self.band[i * (bw + 1)] * x[i];
            for d in 1..=bw.min(i) {
                let a = self.band[i * (bw + 1) + d];
                out[i] += a * x[i - d];
                out[i - d] += a * x[i];
            }
        }
        for c in 0..k {
            for i in 0..nb {
                let a = self.border[c * nb + i];
                out[i] += a * x[nb + c];
                out[nb + c] += a * x[i];
            }
            for b in 0..k {
                out[nb + c] += self.corner[c * k + b] * x[nb + b];
            }
        }
    }

    /// Cholesky factorization. `None` if the matrix is not numerically
    /// positive definite.
    pub fn cholesky(&self) -> Option<BandCholesky> {
        let (nb, k, bw) = (self.nb, self.k, self.bw);
        let w = bw + 1;
        let mut l = self.band.clone();
        for i in 0..nb {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut sum = l[i * w + (i - j)];
                let k0 = j0.max(j.saturating_sub(bw));
                for kk in k0..j {
                    sum -= l[i * w + (i - kk)] * l[j * w + (j - kk)];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return None;
                    }
                    l[i * w] = sum.sqrt();
                } else {
                    l[i * w + (i - j)] = sum / l[j * w];
                }
            }
        }
        let mut chol = BandCholesky {
            nb,
            k,
            bw,
            l,
            wcols: self.border.clone(),
            schur: vec![0.0; k * k],
        };
        // W = L^{-1} C, one border column at a time.
        for c in 0..k {
            let mut col = chol.wcols[c * nb..(c + 1) * nb].to_vec();
            chol.forward(&mut col);
            chol.wcols[c * nb..(c + 1) * nb].copy_from_slice(&col);
        }
        // S = D - Wᵀ W, then dense Cholesky of S.
        let mut s = self.corner.clone();
        for a in 0..k {
            for b in 0..k {
                let dot: f64 = (0..nb).map(|i| chol.wcols[a * nb + i] * chol.wcols[b * nb + i]).sum();
                s[a * k + b] -= dot;
            }
        }
        for i in 0..k {
            for j in 0..=i {
                let mut sum = s[i * k + j];
                for kk in 0..j {
                    sum -= s[i * k + kk] * s[j * k + kk];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return None;
                    }
                    s[i * k + i] = sum.sqrt();
                } else {
                    s[i * k + j] = sum / s[j * k + j];
                }
            }
        }
        chol.schur = s;
        Some(chol)
    }
}

/// Factor produced by [`BorderedBand::cholesky`].
#[derive(Debug, Clone)]
pub struct BandCholesky {
    nb: usize,
    k: usize,
    bw: usize,
    l: Vec<f64>,
    wcols: Vec<f64>,
    schur: Vec<f64>,
}

impl BandCholesky {
    fn forward(&self, x: &mut [f64]) {
        let w = self.bw + 1;
        for i in 0..self.nb {
            let mut sum = x[i];
            for kk in i.saturating_sub(self.bw)..i {
                sum -= self.l[i * w + (i - kk)] * x[kk];
            }
            x[i] = sum / self.l[i * w];
        }
    }

    fn backward(&self, x: &mut [f64]) {
        let w = self.bw + 1;
        for i in (0..self.nb).rev() {
            let mut sum = x[i];
            for kk in i + 1..(i + self.bw + 1).min(self.nb) {
                sum -= self.l[kk * w + (kk - i)] * x[kk];
            }
            x[i] = sum / self.l[i * w];
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let (nb, k) = (self.nb, self.k);
        let (head, tail) = b.split_at_mut(nb);
        self.forward(head);
        // y2 = L_S^{-1} (b2 - Wᵀ y1)
        for a in 0..k {
            let dot: f64 = (0..nb).map(|i| self.wcols[a * nb + i] * head[i]).sum();
            tail[a] -= dot;
        }
        for i in 0..k {
            let mut sum = tail[i];
            for j in 0..i {
                sum -= self.schur[i * k + j] * tail[j];
            }
            tail[i] = sum / self.schur[i * k + i];
        }
        for i in (0..k).rev() {
            let mut sum = tail[i];
            for j in i + 1..k {
                sum -= self.schur[j * k + i] * tail[j];
            }
            tail[i] = sum / self.schur[i * k + i];
        }
        // x1 = L^{-T} (y1 - W x2)
        for a in 0..k {
            for i in 0..nb {
                head[i] -= self.wcols[a * nb + i] * tail[a];
            }
        }
        self.backward(head);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, k: usize, bw: usize, seed: u64) -> (BorderedBand, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = BorderedBand::zeros(n, k, bw);
        let mut dense = vec![vec![0.0; n]; n];
        let nb = n - k;
        for i in 0..n {
            for j in 0..=i {
                let allowed = i >= nb || j >= nb || i - j <= bw;
                if !allowed {
                    continue;
                }
                let v: f64 = if i == j { n as f64 * 2.0 + rng.gen::<f64>() } else { rng.gen_range(-1.0..1.0) };
                m.add(i, j, v);
                dense[i][j] += v;
                if i != j {
                    dense[j][i] += v;
                }
            }
        }
        (m, dense)
    }

    #[test]
    fn solve_matches_dense_product() {
        for (n, k, bw, seed) in [(30, 1, 4, 1), (25, 0, 3, 2), (40, 2, 9, 3), (12, 1, 0, 4)] {
            let (m, dense) = random_spd(n, k, bw, seed);
            let x: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let b: Vec<f64> = (0..n).map(|i| (0..n).map(|j| dense[i][j] * x[j]).sum()).collect();
            let mut mb = vec![0.0; n];
            m.mul_vec(&x, &mut mb);
            for i in 0..n {
                assert!((mb[i] - b[i]).abs() < 1e-12);
            }
            let chol = m.cholesky().expect("spd");
            let mut sol = b.clone();
            chol.solve(&mut sol);
            for i in 0..n {
                assert!((sol[i] - x[i]).abs() < 1e-10, "n={n} k={k} i={i}");
            }
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let mut m = BorderedBand::zeros(3, 1, 1);
        m.add(0, 0, 1.0);
        m.add(1, 1, 1.0);
        m.add(2, 2, -1.0);
        assert!(m.cholesky().is_none());
    }

    #[test]
    fn pinning_decouples_a_variable() {
        let (mut m, _) = random_spd(10, 1, 2, 7);
        m.pin(4);
        m.pin(9);
        assert_eq!(m.get(4, 4), 1.0);
        assert_eq!(m.get(4, 5), 0.0);
        assert_eq!(m.get(3, 4), 0.0);
        assert_eq!(m.get(4, 9), 0.0);
        assert_eq!(m.get(9, 9), 1.0);
        let chol = m.cholesky().unwrap();
        let mut b = vec![1.0; 10];
        b[4] = 0.0;
        b[9] = 0.0;
        chol.solve(&mut b);
        assert!(b[4].abs() < 1e-14 && b[9].abs() < 1e-14);
    }
}
