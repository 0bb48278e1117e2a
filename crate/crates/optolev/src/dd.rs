//! Double-double arithmetic: unevaluated sums of two `f64`s giving ~31
//! significant decimal digits.
//!
//! The steady-state covariance matrices here mix entries of order 1e8 (the
//! dark mechanical mode, damped only at γ/2) with symplectic eigenvalues of
//! order 0.2. Plain `f64` cannot certify the Lyapunov residual at 1e-10 of
//! ‖D‖ or agree on ν̃₋ to 1e-9 across two algebraic routes — rounding the
//! exact solution to `f64` already violates both. The error-free transforms
//! below (Dekker's two-prod via FMA, Knuth's two-sum) are the textbook fix.
//!
//! Only `+ - * /`, `sqrt`, comparisons, and a correctly-seeded `ln` are
//! needed; no transcendental tables. [`DdMat`] adds the handful of small
//! fixed-size matrix kernels used by the Lyapunov refinement, the symplectic
//! spectrum, and the physicality checks.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

/// `hi + lo` with `|lo| <= ulp(hi)/2`; the pair is the exact, unevaluated sum.
#[derive(Clone, Copy, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    // requires |a| >= |b|
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn new(hi: f64, lo: f64) -> Self {
        let (s, e) = two_sum(hi, lo);
        Dd { hi: s, lo: e }
    }

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Nearest `f64`.
    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn sqr(self) -> Self {
        let (p, mut e) = two_prod(self.hi, self.hi);
        e += 2.0 * self.hi * self.lo;
        e += self.lo * self.lo;
        let (s, e) = quick_two_sum(p, e);
        Dd { hi: s, lo: e }
    }

    /// Square root; one extended-precision Newton step on the `f64` seed.
    pub fn sqrt(self) -> Self {
        if self.hi == 0.0 && self.lo == 0.0 {
            return Dd::ZERO;
        }
        assert!(self.hi > 0.0, "Dd::sqrt of negative value {self:?}");
        let y0 = self.hi.sqrt();
        // y = y0 + (a - y0^2) / (2 y0)
        let y0d = Dd::from_f64(y0);
        let r = self - y0d.sqr();
        y0d + Dd::from_f64(r.to_f64() / (2.0 * y0))
    }

    /// Natural log, accurate to ~1e-16 relative (f64 log of the hi part plus
    /// a first-order correction); full double-double accuracy is not needed
    /// where this is used.
    pub fn ln(self) -> f64 {
        assert!(self.hi > 0.0, "Dd::ln of non-positive value");
        self.hi.ln() + (self.lo / self.hi).ln_1p()
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd::from_f64(x)
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, rhs: Dd) -> Dd {
        // Knuth/IEEE-style accurate addition
        let (s1, s2) = two_sum(self.hi, rhs.hi);
        let (t1, t2) = two_sum(self.lo, rhs.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (s1, s2) = quick_two_sum(s1, s2 + t2);
        Dd { hi: s1, lo: s2 }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, rhs: Dd) -> Dd {
        self + (-rhs)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, rhs: Dd) -> Dd {
        let (p, mut e) = two_prod(self.hi, rhs.hi);
        e += self.hi * rhs.lo + self.lo * rhs.hi;
        let (s, e) = quick_two_sum(p, e);
        Dd { hi: s, lo: e }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, rhs: Dd) -> Dd {
        // long division with two corrections
        let q1 = self.hi / rhs.hi;
        let r = self - rhs * Dd::from_f64(q1);
        let q2 = r.hi / rhs.hi;
        let r = r - rhs * Dd::from_f64(q2);
        let q3 = r.hi / rhs.hi;
        let (s, e) = quick_two_sum(q1, q2);
        Dd::new(s, e + q3)
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, rhs: Dd) {
        *self = *self + rhs;
    }
}

impl SubAssign for Dd {
    fn sub_assign(&mut self, rhs: Dd) {
        *self = *self - rhs;
    }
}

impl Mul<f64> for Dd {
    type Output = Dd;
    fn mul(self, rhs: f64) -> Dd {
        self * Dd::from_f64(rhs)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Dd) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi) {
            Some(Ordering::Equal) => self.lo.partial_cmp(&other.lo),
            ord => ord,
        }
    }
}

impl fmt::Debug for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Dd({:e} + {:e})", self.hi, self.lo)
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_f64())
    }
}

/// Dense square matrix over [`Dd`], fixed size `N`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DdMat<const N: usize>(pub [[Dd; N]; N]);

impl<const N: usize> DdMat<N> {
    pub fn zeros() -> Self {
        DdMat([[Dd::ZERO; N]; N])
    }

    pub fn identity() -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            m.0[i][i] = Dd::ONE;
        }
        m
    }

    pub fn from_f64(a: &[[f64; N]; N]) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = Dd::from_f64(a[i][j]);
            }
        }
        m
    }

    pub fn to_f64(&self) -> [[f64; N]; N] {
        let mut out = [[0.0; N]; N];
        for i in 0..N {
            for j in 0..N {
                out[i][j] = self.0[i][j].to_f64();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[i][j] + rhs.0[i][j];
            }
        }
        m
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[i][j] - rhs.0[i][j];
            }
        }
        m
    }

    pub fn scale(&self, s: Dd) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = self.0[i][j] * s;
            }
        }
        m
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                let mut acc = Dd::ZERO;
                for k in 0..N {
                    acc += self.0[i][k] * rhs.0[k][j];
                }
                m.0[i][j] = acc;
            }
        }
        m
    }

    /// (A + Aᵀ)/2.
    pub fn symmetrize(&self) -> Self {
        let half = Dd::from_f64(0.5);
        let mut m = Self::zeros();
        for i in 0..N {
            for j in 0..N {
                m.0[i][j] = (self.0[i][j] + self.0[j][i]) * half;
            }
        }
        m
    }

    pub fn frobenius(&self) -> Dd {
        let mut acc = Dd::ZERO;
        for row in &self.0 {
            for x in row {
                acc += x.sqr();
            }
        }
        acc.sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for row in &self.0 {
            for x in row {
                m = m.max(x.to_f64().abs());
            }
        }
        m
    }

    /// Trace.
    pub fn trace(&self) -> Dd {
        let mut acc = Dd::ZERO;
        for i in 0..N {
            acc += self.0[i][i];
        }
        acc
    }

    /// Determinant via LU with partial pivoting.
    pub fn det(&self) -> Dd {
        let mut a = self.0;
        let mut det = Dd::ONE;
        for k in 0..N {
            let mut piv = k;
            for r in (k + 1)..N {
                if a[r][k].abs() > a[piv][k].abs() {
                    piv = r;
                }
            }
            if a[piv][k].hi == 0.0 && a[piv][k].lo == 0.0 {
                return Dd::ZERO;
            }
            if piv != k {
                a.swap(piv, k);
                det = -det;
            }
            det = det * a[k][k];
            for r in (k + 1)..N {
                let f = a[r][k] / a[k][k];
                for c in k..N {
                    a[r][c] = a[r][c] - f * a[k][c];
                }
            }
        }
        det
    }

    /// Coefficients of the characteristic polynomial
    /// `λ^N + c[N-1] λ^(N-1) + ... + c[0]` by the Faddeev-LeVerrier recursion.
    pub fn char_poly(&self) -> [Dd; N] {
        let mut c = [Dd::ZERO; N];
        let mut m = *self; // M_1 = A
        for k in 1..=N {
            let ck = -(m.trace() / Dd::from_f64(k as f64));
            c[N - k] = ck;
            if k < N {
                let mut shifted = m;
                for i in 0..N {
                    shifted.0[i][i] += ck;
                }
                m = self.matmul(&shifted);
            }
        }
        c
    }

    /// Cholesky factorization; `Err` carries the first non-positive pivot.
    /// Success certifies positive definiteness.
    pub fn cholesky_min_pivot(&self) -> std::result::Result<f64, f64> {
        let mut a = self.0;
        let mut min_piv = f64::INFINITY;
        for k in 0..N {
            for j in 0..k {
                let f = a[k][j];
                for i in k..N {
                    a[i][k] = a[i][k] - a[i][j] * f;
                }
            }
            let piv = a[k][k];
            if piv.to_f64() <= 0.0 {
                return Err(piv.to_f64());
            }
            min_piv = min_piv.min(piv.to_f64());
            let root = piv.sqrt();
            for i in k..N {
                a[i][k] = a[i][k] / root;
            }
        }
        Ok(min_piv)
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
    ///
    /// Jacobi delivers small eigenvalues with absolute error ~ ε_dd·‖A‖, which
    /// is what the physicality checks need on matrices of norm 1e8.
    pub fn sym_eigenvalues(&self) -> [f64; N] {
        let mut a = self.0;
        let norm = self.frobenius().to_f64().max(f64::MIN_POSITIVE);
        let tol = 1e-30 * norm;
        for _sweep in 0..50 {
            let mut off = 0.0f64;
            for p in 0..N {
                for q in (p + 1)..N {
                    off += a[p][q].to_f64().abs();
                }
            }
            if off < tol {
                break;
            }
            for p in 0..N {
                for q in (p + 1)..N {
                    let apq = a[p][q];
                    if apq.to_f64().abs() < tol / (N * N) as f64 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (Dd::from_f64(2.0) * apq);
                    let t = {
                        let denom = theta.abs() + (theta.sqr() + Dd::ONE).sqrt();
                        let t = Dd::ONE / denom;
                        if theta.to_f64() < 0.0 {
                            -t
                        } else {
                            t
                        }
                    };
                    let c = Dd::ONE / (t.sqr() + Dd::ONE).sqrt();
                    let s = t * c;
                    for k in 0..N {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..N {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev = [0.0f64; N];
        for i in 0..N {
            ev[i] = a[i][i].to_f64();
        }
        ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
        ev
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_keeps_cancelled_tail() {
        let big = Dd::from_f64(1e16);
        let x = big + Dd::ONE - big;
        assert_eq!(x.to_f64(), 1.0);
    }

    #[test]
    fn mul_and_sqrt_round_trip() {
        let two = Dd::from_f64(2.0);
        let r = two.sqrt();
        let err = (r.sqr() - two).abs();
        assert!(err.to_f64() < 1e-30, "err = {err:?}");
    }

    #[test]
    fn div_round_trip() {
        let a = Dd::new(3.0, 1e-20);
        let b = Dd::from_f64(7.0);
        let q = a / b;
        let err = (q * b - a).abs();
        assert!(err.to_f64() < 1e-30);
    }

    #[test]
    fn ln_matches_f64_on_clean_inputs() {
        let x = Dd::from_f64(5.0);
        assert!((x.ln() - 5.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn det_of_triangular_is_pivot_product() {
        let m = DdMat::<3>::from_f64(&[[2.0, 1.0, 0.0], [0.0, 3.0, 5.0], [0.0, 0.0, 4.0]]);
        assert!((m.det().to_f64() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn char_poly_2x2() {
        // λ² - tr λ + det
        let m = DdMat::<2>::from_f64(&[[1.0, 2.0], [3.0, 4.0]]);
        let c = m.char_poly();
        assert!((c[1].to_f64() + 5.0).abs() < 1e-14); // -tr
        assert!((c[0].to_f64() + 2.0).abs() < 1e-14); // det = -2
    }

    #[test]
    fn jacobi_eigenvalues_wide_spread() {
        // eigenvalues 1e8 and 1e-8 must both come out to full absolute accuracy
        let (c, s) = (0.6f64, 0.8f64);
        let (l1, l2) = (1e8f64, 1e-8f64);
        let m = DdMat::<2>::from_f64(&[
            [c * c * l1 + s * s * l2, c * s * (l1 - l2)],
            [c * s * (l1 - l2), s * s * l1 + c * c * l2],
        ]);
        let ev = m.sym_eigenvalues();
        assert!((ev[1] - l1).abs() / l1 < 1e-14);
        // the small eigenvalue is limited by the f64 rounding of the inputs,
        // not by the Jacobi iteration itself
        assert!((ev[0] - l2).abs() < 1e-7 * l1 * f64::EPSILON);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let m = DdMat::<2>::from_f64(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(m.cholesky_min_pivot().is_err());
        let p = DdMat::<2>::from_f64(&[[2.0, 1.0], [1.0, 2.0]]);
        assert!(p.cholesky_min_pivot().is_ok());
    }
}
