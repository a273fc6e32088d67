//! Plain ILRMA and MNMF written directly against nalgebra, sharing nothing
//! with the engines except the starting point.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use sparsebss::engine::kernel::CMatrix;
use sparsebss::engine::source::{Matrix, FLOOR};
use sparsebss::Spectrogram;

pub type CMat = DMatrix<Complex64>;
pub type RMat = DMatrix<f64>;

pub fn to_rmat(m: &Matrix) -> RMat {
    RMat::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

pub fn to_cmat(m: &CMatrix) -> CMat {
    CMat::from_fn(m.dim(), m.dim(), |i, j| m[(i, j)])
}

/// One `M x T` matrix per bin.
pub fn bins_of(x: &Spectrogram) -> Vec<CMat> {
    (0..x.bins())
        .map(|f| CMat::from_fn(x.channels(), x.frames(), |m, t| x.get(f, t, m)))
        .collect()
}

fn lambda(w: &RMat, h: &RMat) -> RMat {
    (w * h).map(|v| v.max(FLOOR))
}

fn hermitian_fn(a: &CMat, g: impl Fn(f64) -> f64) -> CMat {
    let e = SymmetricEigen::new(a.clone());
    let d = CMat::from_diagonal(&DVector::from_iterator(
        a.nrows(),
        e.eigenvalues.iter().map(|v| Complex64::new(g(*v), 0.0)),
    ));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

fn hermitize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

/// Plain ILRMA (no prior) with iterative projection and mean-λ scale normalization.
pub struct RefIlrma {
    pub x: Vec<CMat>,
    pub w: Vec<RMat>,
    pub h: Vec<RMat>,
    pub d: Vec<CMat>,
}

impl RefIlrma {
    pub fn step(&mut self) {
        let sources = self.w.len();
        let (bins, frames) = (self.x.len(), self.x[0].ncols());
        let y: Vec<CMat> = self.d.iter().zip(&self.x).map(|(d, x)| d * x).collect();
        let power: Vec<RMat> = (0..sources)
            .map(|n| RMat::from_fn(bins, frames, |f, t| y[f][(n, t)].norm_sqr()))
            .collect();

        for n in 0..sources {
            let lam = lambda(&self.w[n], &self.h[n]);
            let ratio = power[n].zip_map(&lam, |p, l| p / (l * l));
            let inv = lam.map(|l| 1.0 / l);
            let num = self.w[n].transpose() * ratio;
            let den = self.w[n].transpose() * inv;
            let mut h = self.h[n].clone();
            for i in 0..h.len() {
                h[i] = (h[i] * (num[i] / den[i]).sqrt()).max(FLOOR);
            }
            self.h[n] = h;
        }
        for n in 0..sources {
            let lam = lambda(&self.w[n], &self.h[n]);
            let ratio = power[n].zip_map(&lam, |p, l| p / (l * l));
            let inv = lam.map(|l| 1.0 / l);
            let num = ratio * self.h[n].transpose();
            let den = inv * self.h[n].transpose();
            let mut w = self.w[n].clone();
            for i in 0..w.len() {
                w[i] = (w[i] * (num[i] / den[i]).sqrt()).max(FLOOR);
            }
            self.w[n] = w;
        }

        let lams: Vec<RMat> = (0..sources).map(|n| lambda(&self.w[n], &self.h[n])).collect();
        for f in 0..bins {
            let x = &self.x[f];
            for n in 0..sources {
                let scaled = CMat::from_fn(x.nrows(), frames, |m, t| x[(m, t)] / lams[n][(f, t)]);
                let v = hermitize(&((scaled * x.adjoint()) / Complex64::new(frames as f64, 0.0)));
                let mut e = DVector::zeros(sources);
                e[n] = Complex64::new(1.0, 0.0);
                let mut dn = (&self.d[f] * &v).lu().solve(&e).expect("nonsingular");
                let q = (dn.adjoint() * &v * &dn)[(0, 0)].re;
                dn /= Complex64::new(q.sqrt(), 0.0);
                for m in 0..sources {
                    self.d[f][(n, m)] = dn[m].conj();
                }
            }
        }

        for n in 0..sources {
            let mean = lams[n].mean();
            self.w[n] = self.w[n].map(|v| (v / mean).max(FLOOR));
            let s = Complex64::new(1.0 / mean.sqrt(), 0.0);
            for d in &mut self.d {
                let mut row = d.row_mut(n);
                row *= s;
            }
        }
    }
}

/// Plain MNMF (no prior) with trace-normalized spatial covariances.
pub struct RefMnmf {
    pub x: Vec<CMat>,
    pub w: Vec<RMat>,
    pub h: Vec<RMat>,
    /// `r[f][n]`.
    pub r: Vec<Vec<CMat>>,
}

struct Stats {
    inv: Vec<Vec<CMat>>,
    u: Vec<Vec<DVector<Complex64>>>,
    a: Vec<RMat>,
    b: Vec<RMat>,
}

impl RefMnmf {
    fn stats(&self) -> Stats {
        let sources = self.w.len();
        let (bins, frames) = (self.x.len(), self.x[0].ncols());
        let lams: Vec<RMat> = (0..sources).map(|n| lambda(&self.w[n], &self.h[n])).collect();
        let mut a = vec![RMat::zeros(bins, frames); sources];
        let mut b = vec![RMat::zeros(bins, frames); sources];
        let mut inv = Vec::with_capacity(bins);
        let mut us = Vec::with_capacity(bins);
        for f in 0..bins {
            let mut inv_f = Vec::with_capacity(frames);
            let mut u_f = Vec::with_capacity(frames);
            for t in 0..frames {
                let mut rhat = CMat::zeros(self.x[f].nrows(), self.x[f].nrows());
                for n in 0..sources {
                    rhat += self.r[f][n].scale(lams[n][(f, t)]);
                }
                let ri = rhat.try_inverse().expect("invertible model covariance");
                let u = &ri * self.x[f].column(t);
                for n in 0..sources {
                    a[n][(f, t)] = (&self.r[f][n] * &ri).trace().re;
                    b[n][(f, t)] = (u.adjoint() * &self.r[f][n] * &u)[(0, 0)].re;
                }
                inv_f.push(ri);
                u_f.push(u);
            }
            inv.push(inv_f);
            us.push(u_f);
        }
        Stats { inv, u: us, a, b }
    }

    pub fn step(&mut self) {
        let sources = self.w.len();
        let m = self.x[0].nrows();

        let s = self.stats();
        for n in 0..sources {
            let num = self.w[n].transpose() * &s.b[n];
            let den = self.w[n].transpose() * &s.a[n];
            let mut h = self.h[n].clone();
            for i in 0..h.len() {
                h[i] = (h[i] * (num[i] / den[i]).sqrt()).max(FLOOR);
            }
            self.h[n] = h;
        }

        let s = self.stats();
        for n in 0..sources {
            let num = &s.b[n] * self.h[n].transpose();
            let den = &s.a[n] * self.h[n].transpose();
            let mut w = self.w[n].clone();
            for i in 0..w.len() {
                w[i] = (w[i] * (num[i] / den[i]).sqrt()).max(FLOOR);
            }
            self.w[n] = w;
        }

        let s = self.stats();
        let lams: Vec<RMat> = (0..sources).map(|n| lambda(&self.w[n], &self.h[n])).collect();
        for f in 0..self.x.len() {
            for n in 0..sources {
                let mut a = CMat::zeros(m, m);
                let mut q = CMat::zeros(m, m);
                for t in 0..self.x[f].ncols() {
                    let l = lams[n][(f, t)];
                    a += s.inv[f][t].scale(l);
                    q += (&s.u[f][t] * s.u[f][t].adjoint()).scale(l);
                }
                let a = hermitize(&a);
                let b = hermitize(&(&self.r[f][n] * q * &self.r[f][n]));
                // R A R = B solved as B^{1/2} (B^{1/2} A B^{1/2})^{-1/2} B^{1/2}.
                let b_half = hermitian_fn(&b, f64::sqrt);
                let inner = hermitize(&(&b_half * a * &b_half));
                let mid = hermitian_fn(&inner, |v| 1.0 / v.sqrt());
                self.r[f][n] = hermitize(&(&b_half * mid * &b_half));
            }
        }

        for f in 0..self.x.len() {
            for n in 0..sources {
                let c = self.r[f][n].trace().re / m as f64;
                self.r[f][n] /= Complex64::new(c, 0.0);
                for k in 0..self.w[n].ncols() {
                    self.w[n][(f, k)] = (self.w[n][(f, k)] * c).max(FLOOR);
                }
            }
        }
    }
}

/// Largest `|a - b| / max(1, |b|)` over all entries.
pub fn rel_gap_r(a: &RMat, b: &RMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs() / y.abs().max(1.0)).fold(0.0, f64::max)
}

pub fn rel_gap_c(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm() / y.norm().max(1.0)).fold(0.0, f64::max)
}
