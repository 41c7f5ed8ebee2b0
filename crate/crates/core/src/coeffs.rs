//! Coefficient functions on [0, 1] as half-frequency trigonometric polynomials
//!
//! A [`Coefficient`] is
//!
//! ```text
//! f(x) = u₀ + Σ_{j=1..J} ( u_j cos(πjx) + w_j sin(πjx) )
//! ```
//!
//! The class is closed under differentiation, products and shifts, and every
//! integral the trace identities need (means, `L²` norms, cosine transforms)
//! has a closed form in the amplitudes. Odd `j` give period-2 terms, which is
//! how asymmetric endpoint data (`f(0) ≠ f(1)`, `f'(0) ≠ f'(1)`) is realized.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// On-disk layout: `{"u": [u₀, u₁, ...], "w": [w₁, w₂, ...]}`, `w` optional.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientFile {
    u: Vec<f64>,
    #[serde(default)]
    w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "CoefficientFile", into = "CoefficientFile")]
pub struct Coefficient {
    // Both vectors have length J + 1; w[0] is always zero.
    u: Vec<f64>,
    w: Vec<f64>,
}

impl From<CoefficientFile> for Coefficient {
    fn from(f: CoefficientFile) -> Self {
        Coefficient::new(f.u, f.w)
    }
}

impl From<Coefficient> for CoefficientFile {
    fn from(c: Coefficient) -> Self {
        CoefficientFile {
            u: c.u.clone(),
            w: c.w[1..].to_vec(),
        }
    }
}

impl Default for Coefficient {
    fn default() -> Self {
        Self::zero()
    }
}

impl Coefficient {
    /// `cos_amps` is indexed from `j = 0`, `sin_amps` from `j = 1`.
    pub fn new(cos_amps: Vec<f64>, sin_amps: Vec<f64>) -> Self {
        let degree = cos_amps.len().saturating_sub(1).max(sin_amps.len());
        let mut u = cos_amps;
        u.resize(degree + 1, 0.0);
        let mut w = Vec::with_capacity(degree + 1);
        w.push(0.0);
        w.extend(sin_amps);
        w.resize(degree + 1, 0.0);
        Coefficient { u, w }
    }

    pub fn zero() -> Self {
        Coefficient {
            u: vec![0.0],
            w: vec![0.0],
        }
    }

    pub fn constant(c: f64) -> Self {
        Coefficient {
            u: vec![c],
            w: vec![0.0],
        }
    }

    /// `amp · cos(πjx)`.
    pub fn cos_term(j: usize, amp: f64) -> Self {
        let mut u = vec![0.0; j + 1];
        u[j] = amp;
        Coefficient::new(u, vec![])
    }

    /// `amp · sin(πjx)`, `j ≥ 1`.
    pub fn sin_term(j: usize, amp: f64) -> Self {
        assert!(j >= 1, "sine terms start at j = 1");
        let mut w = vec![0.0; j];
        w[j - 1] = amp;
        Coefficient::new(vec![0.0], w)
    }

    pub fn degree(&self) -> usize {
        self.u.len() - 1
    }

    /// Cosine amplitudes `u₀..u_J`.
    pub fn cos_amps(&self) -> &[f64] {
        &self.u
    }

    /// Sine amplitudes `w₁..w_J`.
    pub fn sin_amps(&self) -> &[f64] {
        &self.w[1..]
    }

    pub fn is_zero(&self) -> bool {
        self.u.iter().chain(&self.w).all(|&a| a == 0.0)
    }

    /// True when only `u₀` can be nonzero.
    pub fn is_constant(&self) -> bool {
        self.u[1..].iter().chain(&self.w).all(|&a| a == 0.0)
    }

    /// Period 1: every odd-`j` amplitude vanishes.
    pub fn is_one_periodic(&self) -> bool {
        (1..=self.degree())
            .step_by(2)
            .all(|j| self.u[j] == 0.0 && self.w[j] == 0.0)
    }

    /// Pure cosine series (all `w_j = 0`): every odd derivative vanishes at both ends.
    pub fn is_pure_cosine(&self) -> bool {
        self.w.iter().all(|&a| a == 0.0)
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(x));
        }
        Ok(self.value_at(x))
    }

    /// Evaluates the (period-2) trigonometric polynomial at any real `x`.
    pub fn value_at(&self, x: f64) -> f64 {
        let mut acc = self.u[0];
        for j in 1..=self.degree() {
            let (s, c) = (PI * j as f64 * x).sin_cos();
            acc += self.u[j] * c + self.w[j] * s;
        }
        acc
    }

    pub fn derivative(&self, order: u32) -> Result<Coefficient> {
        match order {
            1 => Ok(self.d1()),
            2 => Ok(self.d1().d1()),
            _ => Err(Error::Unsupported(format!(
                "derivative of order {order}; only 1 and 2 are provided"
            ))),
        }
    }

    fn d1(&self) -> Coefficient {
        let n = self.u.len();
        let mut u = vec![0.0; n];
        let mut w = vec![0.0; n];
        for j in 1..n {
            let k = PI * j as f64;
            u[j] = k * self.w[j];
            w[j] = -k * self.u[j];
        }
        Coefficient { u, w }
    }

    /// Exact product through the product-to-sum identities.
    pub fn multiply(&self, other: &Coefficient) -> Coefficient {
        let deg = self.degree() + other.degree();
        let mut u = vec![0.0; deg + 1];
        let mut w = vec![0.0; deg + 1];
        for (i, (&ua, &wa)) in self.u.iter().zip(&self.w).enumerate() {
            if ua == 0.0 && wa == 0.0 {
                continue;
            }
            for (j, (&ub, &wb)) in other.u.iter().zip(&other.w).enumerate() {
                if ub == 0.0 && wb == 0.0 {
                    continue;
                }
                let sum = i + j;
                let diff = i.abs_diff(j);
                // sign of sin(π(i−j)x) relative to sin(π|i−j|x)
                let sgn = if i >= j { 1.0 } else { -1.0 };
                // cos·cos = ½[cos(i−j) + cos(i+j)]
                let cc = 0.5 * ua * ub;
                u[diff] += cc;
                u[sum] += cc;
                // sin·sin = ½[cos(i−j) − cos(i+j)]
                let ss = 0.5 * wa * wb;
                u[diff] += ss;
                u[sum] -= ss;
                // sin_i·cos_j = ½[sin(i+j) + sin(i−j)]
                let sc = 0.5 * wa * ub;
                w[sum] += sc;
                w[diff] += sgn * sc;
                // cos_i·sin_j = ½[sin(i+j) − sin(i−j)]
                let cs = 0.5 * ua * wb;
                w[sum] += cs;
                w[diff] -= sgn * cs;
            }
        }
        w[0] = 0.0;
        Coefficient { u, w }
    }

    pub fn scale(&self, a: f64) -> Coefficient {
        Coefficient {
            u: self.u.iter().map(|x| a * x).collect(),
            w: self.w.iter().map(|x| a * x).collect(),
        }
    }

    /// `g(x) = f(x + τ)` for a 1-periodic `f`.
    pub fn shift(&self, tau: f64) -> Result<Coefficient> {
        if !self.is_one_periodic() {
            return Err(Error::Precondition(
                "shifting requires a 1-periodic coefficient (no odd-j terms)".into(),
            ));
        }
        Ok(self.rotate(tau))
    }

    fn rotate(&self, tau: f64) -> Coefficient {
        let mut u = self.u.clone();
        let mut w = self.w.clone();
        for j in 1..=self.degree() {
            let (s, c) = (PI * j as f64 * tau).sin_cos();
            u[j] = self.u[j] * c + self.w[j] * s;
            w[j] = -self.u[j] * s + self.w[j] * c;
        }
        Coefficient { u, w }
    }

    /// `c_k = ∫₀¹ f(x) cos(πkx) dx` for `k = 0..=k_max`.
    pub fn cosine_coeffs(&self, k_max: usize) -> CosineSeq {
        let mut c = vec![0.0; k_max + 1];
        c[0] = self.u[0];
        for (k, ck) in c.iter_mut().enumerate().skip(1) {
            if k <= self.degree() {
                *ck = 0.5 * self.u[k];
            }
        }
        for j in 1..=self.degree() {
            let wj = self.w[j];
            if wj == 0.0 {
                continue;
            }
            let jf = j as f64;
            // only j + k odd contributes
            let start = if j % 2 == 0 { 1 } else { 0 };
            for k in (start..=k_max).step_by(2) {
                let kf = k as f64;
                c[k] += wj * (2.0 * jf / PI) / (jf * jf - kf * kf);
            }
        }
        CosineSeq { c }
    }

    /// `∫₀¹ f(x) cos(πkx) dx` for a single `k`.
    pub fn cosine_coeff(&self, k: usize) -> f64 {
        let mut acc = if k == 0 {
            self.u[0]
        } else if k <= self.degree() {
            0.5 * self.u[k]
        } else {
            0.0
        };
        let kf = k as f64;
        for j in 1..=self.degree() {
            if (j + k) % 2 == 1 && self.w[j] != 0.0 {
                let jf = j as f64;
                acc += self.w[j] * (2.0 * jf / PI) / (jf * jf - kf * kf);
            }
        }
        acc
    }

    pub fn mean(&self) -> f64 {
        let mut m = self.u[0];
        for j in (1..=self.degree()).step_by(2) {
            m += self.w[j] * 2.0 / (PI * j as f64);
        }
        m
    }

    pub fn l2sq(&self) -> f64 {
        self.multiply(self).mean()
    }

    pub fn end0(&self) -> f64 {
        self.u.iter().sum()
    }

    pub fn end1(&self) -> f64 {
        self.u
            .iter()
            .enumerate()
            .map(|(j, &a)| if j % 2 == 0 { a } else { -a })
            .sum()
    }

    pub fn functionals(&self) -> Functionals {
        let d1 = self.d1();
        let d2 = d1.d1();
        Functionals {
            mean: self.mean(),
            l2sq: self.l2sq(),
            end0: self.end0(),
            end1: self.end1(),
            d1_0: d1.end0(),
            d1_1: d1.end1(),
            d2_0: d2.end0(),
            d2_1: d2.end1(),
        }
    }

    /// `∫₀¹ (f'' + f²) = f'(1) − f'(0) + ‖f‖²`.
    pub fn big_p(&self) -> f64 {
        self.functionals().big_p()
    }

    /// Sum of the even-index transforms `Σ_{n>k} c_{2n}`, in closed form.
    ///
    /// Uses `Σ_{n≥1} c_{2n} = (f(0) + f(1))/4 − f₀/2`.
    pub fn even_cosine_tail(&self, k: usize) -> f64 {
        let total = 0.25 * (self.end0() + self.end1()) - 0.5 * self.mean();
        let head: f64 = crate::sum::csum((1..=k).map(|n| self.cosine_coeff(2 * n)));
        total - head
    }

    /// Stable one-line description used in report digests.
    pub fn digest(&self) -> String {
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{x}"))
                .collect::<Vec<_>>()
                .join(",")
        };
        format!("u=[{}] w=[{}]", fmt(&self.u), fmt(&self.w[1..]))
    }
}

/// `V = q − p''/2`.
pub fn build_v(p: &Coefficient, q: &Coefficient) -> Coefficient {
    q - &p.d1().d1().scale(0.5)
}

fn zip_with(a: &Coefficient, b: &Coefficient, f: impl Fn(f64, f64) -> f64) -> Coefficient {
    let n = a.u.len().max(b.u.len());
    let get = |v: &[f64], j: usize| v.get(j).copied().unwrap_or(0.0);
    let u = (0..n).map(|j| f(get(&a.u, j), get(&b.u, j))).collect();
    let w = (0..n).map(|j| f(get(&a.w, j), get(&b.w, j))).collect();
    Coefficient { u, w }
}

impl Add for &Coefficient {
    type Output = Coefficient;
    fn add(self, rhs: &Coefficient) -> Coefficient {
        zip_with(self, rhs, |a, b| a + b)
    }
}

impl Sub for &Coefficient {
    type Output = Coefficient;
    fn sub(self, rhs: &Coefficient) -> Coefficient {
        zip_with(self, rhs, |a, b| a - b)
    }
}

impl Neg for &Coefficient {
    type Output = Coefficient;
    fn neg(self) -> Coefficient {
        self.scale(-1.0)
    }
}

impl Mul for &Coefficient {
    type Output = Coefficient;
    fn mul(self, rhs: &Coefficient) -> Coefficient {
        self.multiply(rhs)
    }
}

/// Scalar functionals of a coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Functionals {
    pub mean: f64,
    pub l2sq: f64,
    pub end0: f64,
    pub end1: f64,
    pub d1_0: f64,
    pub d1_1: f64,
    pub d2_0: f64,
    pub d2_1: f64,
}

impl Functionals {
    pub fn big_p(&self) -> f64 {
        (self.d1_1 - self.d1_0) + self.l2sq
    }
}

/// `c_k = ∫₀¹ f(x) cos(πkx) dx`, `k = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct CosineSeq {
    pub c: Vec<f64>,
}

impl CosineSeq {
    /// Coefficient of `cos(πkx)`; zero beyond the stored range.
    pub fn get(&self, k: usize) -> f64 {
        self.c.get(k).copied().unwrap_or(0.0)
    }

    pub fn k_max(&self) -> usize {
        self.c.len() - 1
    }
}
