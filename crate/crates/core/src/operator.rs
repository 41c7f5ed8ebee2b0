//! Galerkin matrices in the sine basis `s_n(x) = √2 sin(πnx)`, `n = 1..N`.
//!
//! Every `s_n` satisfies `y = y'' = 0` at both ends, so the boundary
//! conditions of both the second- and the fourth-order problem hold exactly.
//! With `ĉ_k = ∫₀¹ f cos(πkx) dx` the building blocks are
//!
//! ```text
//! ⟨f s_m, s_n⟩   = ĉ_{|m−n|} − ĉ_{m+n}
//! ⟨f s_m', s_n'⟩ = π² m n (ĉ_{|m−n|} + ĉ_{m+n})
//! ```

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coeffs::{Coefficient, CosineSeq};
use crate::eigen::{self, Matrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    /// `h = −y'' − p y`
    SecondOrder,
    /// `H = y'''' + 2(p y')' + q y`, plus `Q` when present
    FourthOrder,
    /// `h² + Q`
    SquarePlusQ,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinMatrix {
    pub n: usize,
    pub a: Matrix,
    pub kind: OperatorKind,
}

/// Operator description; unused coefficient slots stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec {
    pub kind: OperatorKind,
    pub p: Coefficient,
    pub q: Coefficient,
    pub big_q: Coefficient,
    /// Shift applied to every coefficient (`f ↦ f(· + τ)`).
    pub tau: f64,
}

impl OperatorSpec {
    pub fn second_order(p: Coefficient) -> Self {
        OperatorSpec {
            kind: OperatorKind::SecondOrder,
            p,
            q: Coefficient::zero(),
            big_q: Coefficient::zero(),
            tau: 0.0,
        }
    }

    pub fn fourth_order(p: Coefficient, q: Coefficient) -> Self {
        OperatorSpec {
            kind: OperatorKind::FourthOrder,
            p,
            q,
            big_q: Coefficient::zero(),
            tau: 0.0,
        }
    }

    /// `H + Q`, assembled as a fourth-order operator with potential `q + Q`.
    pub fn fourth_order_perturbed(p: Coefficient, q: Coefficient, big_q: Coefficient) -> Self {
        OperatorSpec {
            kind: OperatorKind::FourthOrder,
            p,
            q,
            big_q,
            tau: 0.0,
        }
    }

    pub fn square_plus_q(p: Coefficient, big_q: Coefficient) -> Self {
        OperatorSpec {
            kind: OperatorKind::SquarePlusQ,
            p,
            q: Coefficient::zero(),
            big_q,
            tau: 0.0,
        }
    }

    pub fn shifted(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    /// Coefficients after applying the shift.
    pub fn resolved(&self) -> Result<OperatorSpec> {
        if self.tau == 0.0 {
            return Ok(OperatorSpec {
                tau: 0.0,
                ..self.clone()
            });
        }
        let shift = |f: &Coefficient| -> Result<Coefficient> {
            if f.is_constant() {
                Ok(f.clone())
            } else {
                f.shift(self.tau)
            }
        };
        Ok(OperatorSpec {
            kind: self.kind,
            p: shift(&self.p)?,
            q: shift(&self.q)?,
            big_q: shift(&self.big_q)?,
            tau: 0.0,
        })
    }
}

fn check_size(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::Argument("basis size must be at least 1".into()));
    }
    Ok(())
}

pub(crate) fn pi_n(n: usize) -> f64 {
    PI * n as f64
}

/// `(πn)²`, computed as a plain product so the value is reproducible bit for bit.
pub(crate) fn pi_n2(n: usize) -> f64 {
    let k = pi_n(n);
    k * k
}

/// `(πn)⁴`.
pub(crate) fn pi_n4(n: usize) -> f64 {
    let k2 = pi_n2(n);
    k2 * k2
}

/// `⟨f s_m, s_n⟩` for `m, n = 1..size`.
pub fn multiplication_matrix(f: &Coefficient, size: usize) -> Matrix {
    let c = f.cosine_coeffs(2 * size);
    mult_from_seq(&c, size)
}

fn mult_from_seq(c: &CosineSeq, size: usize) -> Matrix {
    Matrix::from_fn(size, |i, j| {
        let (m, n) = (i + 1, j + 1);
        c.get(m.abs_diff(n)) - c.get(m + n)
    })
}

pub fn assemble_h(p: &Coefficient, n: usize) -> Result<GalerkinMatrix> {
    check_size(n)?;
    let c = p.cosine_coeffs(2 * n);
    let a = Matrix::from_fn(n, |i, j| {
        let (m, k) = (i + 1, j + 1);
        let diag = if m == k { pi_n2(m) } else { 0.0 };
        diag - (c.get(m.abs_diff(k)) - c.get(m + k))
    });
    Ok(GalerkinMatrix {
        n,
        a,
        kind: OperatorKind::SecondOrder,
    })
}

#[allow(non_snake_case)]
pub fn assemble_H(p: &Coefficient, q: &Coefficient, n: usize) -> Result<GalerkinMatrix> {
    check_size(n)?;
    let cp = p.cosine_coeffs(2 * n);
    let cq = q.cosine_coeffs(2 * n);
    let a = Matrix::from_fn(n, |i, j| {
        let (m, k) = (i + 1, j + 1);
        let (lo, hi) = (m.abs_diff(k), m + k);
        let diag = if m == k { pi_n4(m) } else { 0.0 };
        let mk = (m * k) as f64;
        diag - 2.0 * PI * PI * mk * (cp.get(lo) + cp.get(hi)) + (cq.get(lo) - cq.get(hi))
    });
    Ok(GalerkinMatrix {
        n,
        a,
        kind: OperatorKind::FourthOrder,
    })
}

/// Eigen-decomposition of `h` at a padded size, reusable for several `Q`.
#[derive(Debug, Clone)]
pub struct HBasis {
    pub alpha: Vec<f64>,
    pub vectors: Matrix,
}

impl HBasis {
    pub fn new(p: &Coefficient, n_pad: usize) -> Result<Self> {
        let h = assemble_h(p, n_pad)?;
        let ed = eigen::symmetric_eigen(&h.a)?;
        Ok(HBasis {
            alpha: ed.values,
            vectors: ed.vectors,
        })
    }

    pub fn n_pad(&self) -> usize {
        self.alpha.len()
    }

    /// `diag(α_n²) + Uᵀ M_Q U`, leading `n × n` block.
    pub fn assemble(&self, big_q: &Coefficient, n: usize) -> Result<GalerkinMatrix> {
        check_size(n)?;
        let n_pad = self.n_pad();
        if n_pad < 2 * n {
            return Err(Error::Argument(format!(
                "padding {n_pad} is smaller than twice the basis size {n}"
            )));
        }
        let u = &self.vectors;
        let mut a = Matrix::from_diag(&self.alpha[..n].iter().map(|x| x * x).collect::<Vec<_>>());
        if !big_q.is_zero() {
            let mq = multiplication_matrix(big_q, n_pad);
            // w = M_Q · U[:, ..n], stored row-major n_pad × n
            let mut w = vec![0.0; n_pad * n];
            for r in 0..n_pad {
                let mrow = mq.row(r);
                let dst = &mut w[r * n..(r + 1) * n];
                for (k, &mrk) in mrow.iter().enumerate() {
                    if mrk == 0.0 {
                        continue;
                    }
                    let urow = &u.row(k)[..n];
                    for (d, &x) in dst.iter_mut().zip(urow) {
                        *d += mrk * x;
                    }
                }
            }
            let mut b = Matrix::zeros(n);
            for k in 0..n_pad {
                let urow = &u.row(k)[..n];
                let wrow = &w[k * n..(k + 1) * n];
                for i in 0..n {
                    let uki = urow[i];
                    if uki == 0.0 {
                        continue;
                    }
                    for j in 0..n {
                        b[(i, j)] += uki * wrow[j];
                    }
                }
            }
            for i in 0..n {
                for j in 0..=i {
                    let s = 0.5 * (b[(i, j)] + b[(j, i)]);
                    a[(i, j)] += s;
                    if i != j {
                        a[(j, i)] += s;
                    }
                }
            }
        }
        Ok(GalerkinMatrix {
            n,
            a,
            kind: OperatorKind::SquarePlusQ,
        })
    }
}

pub fn assemble_h2_plus_q(
    p: &Coefficient,
    big_q: &Coefficient,
    n: usize,
    n_pad: usize,
) -> Result<GalerkinMatrix> {
    check_size(n)?;
    if n_pad < 2 * n {
        return Err(Error::Argument(format!(
            "padding {n_pad} is smaller than twice the basis size {n}"
        )));
    }
    HBasis::new(p, n_pad)?.assemble(big_q, n)
}

/// Shifts the coefficients of `spec`, then dispatches on its kind.
pub fn assemble_spec(spec: &OperatorSpec, n: usize) -> Result<GalerkinMatrix> {
    let s = spec.resolved()?;
    match s.kind {
        OperatorKind::SecondOrder => assemble_h(&s.p, n),
        OperatorKind::FourthOrder => assemble_H(&s.p, &(&s.q + &s.big_q), n),
        OperatorKind::SquarePlusQ => assemble_h2_plus_q(&s.p, &s.big_q, n, 2 * n),
    }
}
