//! Regularized trace sums, their closed forms, and related spectral checks.
//!
//! Each [`FormulaId`] pairs a regularized summand built from one or two
//! spectra with a closed-form right-hand side in terms of coefficient
//! functionals. Summands decay only like `n⁻²`, so the truncated sums are
//! completed by a tail model ([`AccelMode`]).
//!
//! | id     | summand                                   | closed form                              |
//! |--------|-------------------------------------------|------------------------------------------|
//! | `GLF`  | `α_n − (πn)² + p₀`                        | `(p(0)+p(1))/4 − p₀/2`                   |
//! | `S01`  | `α_n² − ((πn)²−p₀)² − (P−p₀²)/2`          | `(P+p₀²)/4 − (p(0)²+p(1)²)/4 − (p''(0)+p''(1))/8` |
//! | `TRF3` | `μ_n − ((πn)²−p₀)² + (P+p₀²)/2`           | `−(P − p₀² + V(0) + V(1))/4`             |
//! | `TRS`  | `μ_n − (πn)⁴ + 2p₀(πn)²`, `p` constant    | `−(q(0)+q(1))/4`                         |
//! | `TRQ0` | as `TRF3`, `q = 0`                        | `−(P − p₀²)/4 + (p''(0)+p''(1))/8`       |
//! | `TR3`  | `λ_n − μ_n − Q₀`                          | `−(Q(0)+Q(1)−2Q₀)/4`                     |
//! | `COR1` | `ν_n − Q₀ − α_n²`                         | `−(Q(0)+Q(1)−2Q₀)/4`                     |
//! | `IPR1` | as `TRF3` for the shifted operator        | `−(P − p₀² + 2V(τ))/4`, `P = ‖p‖²`       |
//! | `IP2`  | `ν_n(τ) − α_n²`                           | `−Q(τ)/2`                                |
//!
//! Here `P = ∫(p'' + p²)`, `V = q − p''/2`, `μ` is the spectrum of
//! `H = ∂⁴ + 2∂p∂ + q`, `λ` of `H + Q`, `α` of `h = −∂² − p`, and `ν` of
//! `h² + Q`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coeffs::{build_v, Coefficient};
use crate::eigen::{self, Spectrum};
use crate::error::{Error, Result};
use crate::operator::{pi_n2, pi_n4, OperatorKind, OperatorSpec};
use crate::sum::{csum, prefix_sums};

/// Zero-mean tolerance for hypotheses such as `q₀ = 0`.
pub const MEAN_TOL: f64 = 1e-10;

#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormulaId {
    GLF,
    S01,
    TRF3,
    TRS,
    TRQ0,
    TR3,
    COR1,
    IPR1,
    IP2,
}

impl FormulaId {
    pub const ALL: [FormulaId; 9] = [
        FormulaId::GLF,
        FormulaId::S01,
        FormulaId::TRF3,
        FormulaId::TRS,
        FormulaId::TRQ0,
        FormulaId::TR3,
        FormulaId::COR1,
        FormulaId::IPR1,
        FormulaId::IP2,
    ];

    /// The identity being checked, written out.
    pub fn identity(self) -> &'static str {
        match self {
            FormulaId::GLF => "sum(alpha_n - (pi n)^2 + p0) = (p(0)+p(1))/4 - p0/2",
            FormulaId::S01 => {
                "sum(alpha_n^2 - ((pi n)^2-p0)^2 - (P-p0^2)/2) = (P+p0^2)/4 - (p(0)^2+p(1)^2)/4 - (p''(0)+p''(1))/8"
            }
            FormulaId::TRF3 => {
                "sum(mu_n - ((pi n)^2-p0)^2 + (P+p0^2)/2) = -(P - p0^2 + V(0) + V(1))/4"
            }
            FormulaId::TRS => "sum(mu_n - (pi n)^4 + 2 p0 (pi n)^2) = -(q(0)+q(1))/4",
            FormulaId::TRQ0 => {
                "sum(mu_n - ((pi n)^2-p0)^2 + (P+p0^2)/2) = -(P-p0^2)/4 + (p''(0)+p''(1))/8"
            }
            FormulaId::TR3 => "sum(lambda_n - mu_n - Q0) = -(Q(0)+Q(1)-2 Q0)/4",
            FormulaId::COR1 => "sum(nu_n - Q0 - alpha_n^2) = -(Q(0)+Q(1)-2 Q0)/4",
            FormulaId::IPR1 => {
                "sum(mu_n(tau) - ((pi n)^2-p0)^2 + (P+p0^2)/2) = -(P - p0^2 + 2 V(tau))/4"
            }
            FormulaId::IP2 => "sum(nu_n(tau) - alpha_n^2) = -Q(tau)/2",
        }
    }

    /// Default verification tolerance at `N = 256`, `K = 64`.
    pub fn default_tol(self) -> f64 {
        match self {
            FormulaId::TRF3 | FormulaId::TRQ0 | FormulaId::S01 | FormulaId::IPR1 => 1e-2,
            FormulaId::GLF | FormulaId::TRS | FormulaId::TR3 | FormulaId::COR1 | FormulaId::IP2 => {
                1e-3
            }
        }
    }

    fn needs_secondary(self) -> bool {
        matches!(self, FormulaId::TR3 | FormulaId::COR1 | FormulaId::IP2)
    }
}

impl fmt::Display for FormulaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for FormulaId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FormulaId::ALL
            .iter()
            .copied()
            .find(|id| id.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Argument(format!("unknown formula '{s}'")))
    }
}

/// Tail completion of a truncated regularized sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccelMode {
    /// Closed-form Fourier/asymptotic tail from the coefficients, plus a
    /// power-law fit of what that model leaves behind.
    Fourier,
    /// Power-law fit of the summands only; uses no coefficient data.
    Power,
    /// `2 S_{2m} − S_m` with `m = ⌊K/2⌋`.
    Richardson,
    None,
}

impl FromStr for AccelMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fourier" => Ok(AccelMode::Fourier),
            "power" => Ok(AccelMode::Power),
            "richardson" => Ok(AccelMode::Richardson),
            "none" => Ok(AccelMode::None),
            _ => Err(Error::Argument(format!("unknown acceleration mode '{s}'"))),
        }
    }
}

/// Coefficients entering a formula. Unused slots stay zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceInputs {
    pub p: Coefficient,
    pub q: Coefficient,
    pub big_q: Coefficient,
    /// Shift point for `IPR1` and `IP2`.
    pub tau: f64,
}

impl TraceInputs {
    pub fn new(p: Coefficient, q: Coefficient, big_q: Coefficient) -> Self {
        TraceInputs {
            p,
            q,
            big_q,
            tau: 0.0,
        }
    }

    pub fn p_only(p: Coefficient) -> Self {
        TraceInputs {
            p,
            ..Default::default()
        }
    }

    pub fn at(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn digest(&self) -> String {
        format!(
            "p: {}; q: {}; Q: {}; tau={}",
            self.p.digest(),
            self.q.digest(),
            self.big_q.digest(),
            self.tau
        )
    }
}

/// The spectra a formula's summand is built from.
#[derive(Debug, Clone)]
pub struct SpectraSet {
    pub primary: Spectrum,
    pub secondary: Option<Spectrum>,
}

impl SpectraSet {
    pub fn n_trusted(&self) -> usize {
        let a = self.primary.n_trusted;
        self.secondary.as_ref().map_or(a, |s| a.min(s.n_trusted))
    }
}

fn precondition(formula: FormulaId, what: &str) -> Error {
    Error::Precondition(format!("{formula}: {what}"))
}

/// Checks the hypotheses under which `formula` holds.
pub fn check_preconditions(formula: FormulaId, inputs: &TraceInputs) -> Result<()> {
    let zero_mean = |f: &Coefficient, name: &str| -> Result<()> {
        let m = f.mean();
        if m.abs() > MEAN_TOL {
            return Err(precondition(
                formula,
                &format!("{name} must have zero mean, got {name}0 = {m:e}"),
            ));
        }
        Ok(())
    };
    let periodic = |f: &Coefficient, name: &str| -> Result<()> {
        if !f.is_one_periodic() {
            return Err(precondition(
                formula,
                &format!("{name} must be 1-periodic (no odd-j terms)"),
            ));
        }
        Ok(())
    };
    match formula {
        FormulaId::GLF | FormulaId::S01 | FormulaId::TR3 | FormulaId::COR1 => Ok(()),
        FormulaId::TRF3 => zero_mean(&inputs.q, "q"),
        FormulaId::TRS => {
            if !inputs.p.is_constant() {
                return Err(precondition(formula, "p must be constant"));
            }
            zero_mean(&inputs.q, "q")
        }
        FormulaId::TRQ0 => {
            if !inputs.q.is_zero() {
                return Err(precondition(formula, "q must vanish identically"));
            }
            Ok(())
        }
        FormulaId::IPR1 => {
            periodic(&inputs.p, "p")?;
            periodic(&inputs.q, "q")?;
            zero_mean(&inputs.q, "q")
        }
        FormulaId::IP2 => {
            periodic(&inputs.big_q, "Q")?;
            zero_mean(&inputs.big_q, "Q")
        }
    }
}

/// Coefficients after applying the formula's shift convention.
fn shifted_inputs(formula: FormulaId, inputs: &TraceInputs) -> Result<TraceInputs> {
    let shift = |f: &Coefficient| {
        if inputs.tau == 0.0 || f.is_constant() {
            Ok(f.clone())
        } else {
            f.shift(inputs.tau)
        }
    };
    match formula {
        FormulaId::IPR1 => Ok(TraceInputs {
            p: shift(&inputs.p)?,
            q: shift(&inputs.q)?,
            big_q: inputs.big_q.clone(),
            tau: 0.0,
        }),
        FormulaId::IP2 => Ok(TraceInputs {
            p: inputs.p.clone(),
            q: inputs.q.clone(),
            big_q: shift(&inputs.big_q)?,
            tau: 0.0,
        }),
        _ => Ok(TraceInputs {
            tau: 0.0,
            ..inputs.clone()
        }),
    }
}

/// Operator specs for the primary and (if any) secondary spectrum.
pub fn operator_specs(
    formula: FormulaId,
    inputs: &TraceInputs,
) -> Result<(OperatorSpec, Option<OperatorSpec>)> {
    let s = shifted_inputs(formula, inputs)?;
    let alpha = || OperatorSpec::second_order(s.p.clone());
    let mu = || OperatorSpec::fourth_order(s.p.clone(), s.q.clone());
    Ok(match formula {
        FormulaId::GLF | FormulaId::S01 => (alpha(), None),
        FormulaId::TRF3 | FormulaId::TRS | FormulaId::TRQ0 | FormulaId::IPR1 => (mu(), None),
        FormulaId::TR3 => (
            mu(),
            Some(OperatorSpec::fourth_order_perturbed(
                s.p.clone(),
                s.q.clone(),
                s.big_q.clone(),
            )),
        ),
        FormulaId::COR1 | FormulaId::IP2 => (
            alpha(),
            Some(OperatorSpec::square_plus_q(s.p.clone(), s.big_q.clone())),
        ),
    })
}

/// Computes the spectra `formula` needs at basis size `n`.
pub fn compute_spectra(formula: FormulaId, inputs: &TraceInputs, n: usize) -> Result<SpectraSet> {
    let (a, b) = operator_specs(formula, inputs)?;
    let primary = eigen::spectrum(&a, n)?;
    let secondary = b.map(|s| eigen::spectrum(&s, n)).transpose()?;
    Ok(SpectraSet { primary, secondary })
}

// Scalars shared by all summands of one formula.
#[derive(Debug, Clone, Copy)]
struct Consts {
    p0: f64,
    big_p: f64,
    big_q0: f64,
}

fn consts(formula: FormulaId, s: &TraceInputs) -> Consts {
    let big_p = if formula == FormulaId::IPR1 {
        s.p.l2sq()
    } else {
        s.p.big_p()
    };
    Consts {
        p0: s.p.mean(),
        big_p,
        big_q0: s.big_q.mean(),
    }
}

// `μ − ((πn)² − p₀)²` in expanded form.
fn quartic_defect(mu: f64, n: usize, p0: f64) -> f64 {
    mu - pi_n4(n) + 2.0 * p0 * pi_n2(n) - p0 * p0
}

fn summand_with(formula: FormulaId, n: usize, spectra: &SpectraSet, c: Consts) -> Result<f64> {
    let a = spectra.primary.trusted(n)?;
    let b = || -> Result<f64> {
        spectra
            .secondary
            .as_ref()
            .ok_or_else(|| Error::Argument(format!("{formula} needs two spectra")))?
            .trusted(n)
    };
    let Consts { p0, big_p, big_q0 } = c;
    Ok(match formula {
        FormulaId::GLF => a - pi_n2(n) + p0,
        FormulaId::S01 => {
            // α² − ((πn)² − p₀)² factored to keep the cancellation in one subtraction
            let d = a - pi_n2(n) + p0;
            d * (a + pi_n2(n) - p0) - 0.5 * (big_p - p0 * p0)
        }
        FormulaId::TRF3 | FormulaId::TRS | FormulaId::TRQ0 | FormulaId::IPR1 => {
            quartic_defect(a, n, p0) + 0.5 * (big_p + p0 * p0)
        }
        FormulaId::TR3 => b()? - a - big_q0,
        FormulaId::COR1 => b()? - big_q0 - a * a,
        FormulaId::IP2 => b()? - a * a,
    })
}

/// Regularized summand `n` (1-based) of `formula`.
pub fn summand(
    formula: FormulaId,
    n: usize,
    spectra: &SpectraSet,
    inputs: &TraceInputs,
) -> Result<f64> {
    check_preconditions(formula, inputs)?;
    let s = shifted_inputs(formula, inputs)?;
    summand_with(formula, n, spectra, consts(formula, &s))
}

/// Summands `1..=k`, compensated where the spectra allow.
pub fn summands(
    formula: FormulaId,
    k: usize,
    spectra: &SpectraSet,
    inputs: &TraceInputs,
) -> Result<Vec<f64>> {
    check_preconditions(formula, inputs)?;
    let s = shifted_inputs(formula, inputs)?;
    let c = consts(formula, &s);
    (1..=k)
        .map(|n| summand_with(formula, n, spectra, c))
        .collect()
}

/// Closed-form right-hand side of `formula`.
pub fn rhs(formula: FormulaId, inputs: &TraceInputs) -> Result<f64> {
    check_preconditions(formula, inputs)?;
    let p = &inputs.p;
    let fp = p.functionals();
    let p0 = fp.mean;
    let big_p = fp.big_p();
    let fq = inputs.big_q.functionals();
    Ok(match formula {
        FormulaId::GLF => 0.25 * (fp.end0 + fp.end1) - 0.5 * p0,
        FormulaId::S01 => {
            0.25 * (big_p + p0 * p0)
                - 0.25 * (fp.end0 * fp.end0 + fp.end1 * fp.end1)
                - 0.125 * (fp.d2_0 + fp.d2_1)
        }
        FormulaId::TRF3 => {
            let v = build_v(p, &inputs.q);
            -0.25 * (big_p - p0 * p0 + v.end0() + v.end1())
        }
        FormulaId::TRS => -0.25 * (inputs.q.end0() + inputs.q.end1()),
        FormulaId::TRQ0 => -0.25 * (big_p - p0 * p0) + 0.125 * (fp.d2_0 + fp.d2_1),
        FormulaId::TR3 | FormulaId::COR1 => -0.25 * (fq.end0 + fq.end1 - 2.0 * fq.mean),
        FormulaId::IPR1 => {
            let v = build_v(p, &inputs.q);
            -0.25 * (p.l2sq() - p0 * p0 + 2.0 * v.value_at(inputs.tau))
        }
        FormulaId::IP2 => -0.5 * inputs.big_q.value_at(inputs.tau),
    })
}

/// `Σ_{n>k} n^{-s}` for the exponents used by the remainder fits.
fn zeta_tail(s: u32, k: usize) -> f64 {
    let total = match s {
        2 => PI * PI / 6.0,
        4 => PI.powi(4) / 90.0,
        _ => unreachable!("remainder exponent {s}"),
    };
    // add the head from small to large terms' reverse for accuracy
    let head = csum((1..=k).rev().map(|n| (n as f64).powi(-(s as i32))));
    total - head
}

/// Decay exponent of what is left after the tail model of `mode`.
fn remainder_exponent(formula: FormulaId, mode: AccelMode) -> u32 {
    match (formula, mode) {
        (FormulaId::GLF, AccelMode::Fourier) => 4,
        _ => 2,
    }
}

/// Least-squares `C` in `r_n ≈ C n^{-s}` over `n ∈ (k/2, k]`.
fn fit_power(summands: &[f64], k: usize, s: u32) -> f64 {
    let lo = k / 2 + 1;
    let (mut num, mut den) = (0.0, 0.0);
    for n in lo..=k {
        let b = (n as f64).powi(-(s as i32));
        num += summands[n - 1] * b;
        den += b * b;
    }
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Summand tail `Σ_{n>k}` of the closed-form model, and the model's terms `1..=k`.
fn fourier_model(formula: FormulaId, inputs: &TraceInputs, k: usize) -> Result<(f64, Vec<f64>)> {
    let s = shifted_inputs(formula, inputs)?;
    let p = &s.p;
    // f̂_cn = ∫ f cos(2πnx) = c_{2n}(f)
    let even = |f: &Coefficient| -> (f64, Vec<f64>) {
        let terms = (1..=k).map(|n| f.cosine_coeff(2 * n)).collect();
        (f.even_cosine_tail(k), terms)
    };
    let negate = |(t, v): (f64, Vec<f64>)| (-t, v.into_iter().map(|x| -x).collect());
    Ok(match formula {
        FormulaId::TRF3 | FormulaId::TRS | FormulaId::TRQ0 | FormulaId::IPR1 => {
            negate(even(&build_v(p, &s.q)))
        }
        FormulaId::TR3 | FormulaId::COR1 | FormulaId::IP2 => negate(even(&s.big_q)),
        FormulaId::GLF => {
            let a = (p.big_p() - p.mean().powi(2)) / (4.0 * PI * PI);
            let terms = (1..=k).map(|n| a / (n * n) as f64).collect();
            (a * zeta_tail(2, k), terms)
        }
        FormulaId::S01 => {
            let d2 = p.derivative(2)?;
            let sq = p.multiply(p);
            let (t1, v1) = even(&d2);
            let (t2, v2) = even(&sq);
            let terms = v1.iter().zip(&v2).map(|(a, b)| -0.5 * a - b).collect();
            (-0.5 * t1 - t2, terms)
        }
    })
}

/// Completes the truncated sum `partial[k-1] = S_k`.
pub fn tail_accelerate(
    formula: FormulaId,
    partial: &[f64],
    inputs: &TraceInputs,
    k: usize,
    mode: AccelMode,
) -> Result<f64> {
    if k == 0 || partial.len() < k {
        return Err(Error::Argument(format!(
            "need {k} partial sums, got {}",
            partial.len()
        )));
    }
    let s_k = partial[k - 1];
    if mode == AccelMode::None {
        return Ok(s_k);
    }
    if k < 8 {
        return Err(Error::Argument(format!(
            "tail acceleration needs K ≥ 8, got {k}"
        )));
    }
    let summands: Vec<f64> = (0..k)
        .map(|i| {
            if i == 0 {
                partial[0]
            } else {
                partial[i] - partial[i - 1]
            }
        })
        .collect();
    match mode {
        AccelMode::None => unreachable!(),
        AccelMode::Richardson => {
            let m = k / 2;
            Ok(2.0 * partial[2 * m - 1] - partial[m - 1])
        }
        AccelMode::Power => {
            let s = remainder_exponent(formula, mode);
            let c = fit_power(&summands, k, s);
            Ok(s_k + c * zeta_tail(s, k))
        }
        AccelMode::Fourier => {
            let (model_tail, model_terms) = fourier_model(formula, inputs, k)?;
            let residual: Vec<f64> = summands
                .iter()
                .zip(&model_terms)
                .map(|(a, b)| a - b)
                .collect();
            let s = remainder_exponent(formula, mode);
            let c = fit_power(&residual, k, s);
            Ok(s_k + model_tail + c * zeta_tail(s, k))
        }
    }
}

/// Least-squares slope of `log|S_k − target|` against `log k` for `k ∈ [K/4, K]`.
pub fn decay_rate(partial: &[f64], target: f64) -> Option<f64> {
    let k = partial.len();
    let floor = 1e-14 * (1.0 + target.abs());
    let pts: Vec<(f64, f64)> = ((k / 4).max(1)..=k)
        .filter_map(|j| {
            let d = (partial[j - 1] - target).abs();
            (d > floor).then(|| ((j as f64).ln(), d.ln()))
        })
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let (mx, my) = (sx / m, sy / m);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in &pts {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyOptions {
    /// Replace `q` by `q − q₀` for formulas that require `q₀ = 0`; the
    /// eigenvalues then shift by exactly `−q₀`.
    pub recenter_q: bool,
    /// Overrides [`FormulaId::default_tol`].
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceReport {
    pub formula: FormulaId,
    pub identity: String,
    pub mode: AccelMode,
    pub basis_n: usize,
    pub n_trusted: usize,
    pub k_used: usize,
    /// `S_1 .. S_K`
    pub partial: Vec<f64>,
    pub accelerated: f64,
    pub rhs: f64,
    pub gap: f64,
    pub tol: f64,
    pub pass: bool,
    pub rate_exponent: Option<f64>,
    /// Constant removed from `q` before solving (zero unless re-centering was requested).
    pub q_shift: f64,
    pub inputs_digest: String,
}

impl TraceReport {
    /// CSV with columns `K,S_K,accelerated,rhs,gap`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("K,S_K,accelerated,rhs,gap\n");
        for (i, s) in self.partial.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                i + 1,
                fmt17(*s),
                fmt17(self.accelerated),
                fmt17(self.rhs),
                fmt17(self.gap)
            ));
        }
        out
    }

    pub fn summary_line(&self) -> String {
        format!(
            "formula={} gap={:.3e} tol={:.0e} {}",
            self.formula,
            self.gap,
            self.tol,
            if self.pass { "PASS" } else { "FAIL" }
        )
    }
}

/// 17 significant digits, fixed layout.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn verify(
    formula: FormulaId,
    inputs: &TraceInputs,
    n: usize,
    k: usize,
    mode: AccelMode,
) -> Result<TraceReport> {
    verify_with(formula, inputs, n, k, mode, VerifyOptions::default())
}

pub fn verify_with(
    formula: FormulaId,
    inputs: &TraceInputs,
    n: usize,
    k: usize,
    mode: AccelMode,
    opts: VerifyOptions,
) -> Result<TraceReport> {
    let mut inputs = inputs.clone();
    let mut q_shift = 0.0;
    if opts.recenter_q && matches!(formula, FormulaId::TRF3 | FormulaId::TRS | FormulaId::IPR1) {
        q_shift = inputs.q.mean();
        inputs.q = &inputs.q - &Coefficient::constant(q_shift);
    }
    check_preconditions(formula, &inputs)?;
    let spectra = compute_spectra(formula, &inputs, n)?;
    verify_on(formula, &inputs, &spectra, k, mode, opts.tol, q_shift)
}

/// Verification on precomputed spectra.
pub fn verify_on(
    formula: FormulaId,
    inputs: &TraceInputs,
    spectra: &SpectraSet,
    k: usize,
    mode: AccelMode,
    tol: Option<f64>,
    q_shift: f64,
) -> Result<TraceReport> {
    if k > spectra.n_trusted() {
        return Err(Error::Range {
            index: k,
            trusted: spectra.n_trusted(),
        });
    }
    if formula.needs_secondary() != spectra.secondary.is_some() {
        return Err(Error::Argument(format!(
            "{formula} expects {} spectra",
            if formula.needs_secondary() { 2 } else { 1 }
        )));
    }
    let terms = summands(formula, k, spectra, inputs)?;
    let partial = prefix_sums(&terms);
    let accelerated = tail_accelerate(formula, &partial, inputs, k, mode)?;
    let rhs = rhs(formula, inputs)?;
    let gap = accelerated - rhs;
    let tol = tol.unwrap_or_else(|| formula.default_tol());
    Ok(TraceReport {
        formula,
        identity: formula.identity().to_string(),
        mode,
        basis_n: spectra.primary.basis_n,
        n_trusted: spectra.n_trusted(),
        k_used: k,
        rate_exponent: decay_rate(&partial, rhs),
        partial,
        accelerated,
        rhs,
        gap,
        tol,
        pass: gap.abs() <= tol,
        q_shift,
        inputs_digest: inputs.digest(),
    })
}

// ---------------------------------------------------------------------------
// Historical variants of the h² trace formula and the H asymptotics.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisputeVariant {
    /// Sign `+ (p''(0)+p''(1))/8` in the h² trace formula.
    DikiiTrfD1,
    /// Sign `− (p''(0)+p''(1))/8` in the h² trace formula.
    DikiiD2,
    /// Third asymptotic term `q₀` for `μ_n` of `H = h²`.
    SadovnichiiTrS,
}

impl FromStr for DisputeVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dikiitrfd1" | "trfd1" => Ok(DisputeVariant::DikiiTrfD1),
            "dikiid2" | "d2" => Ok(DisputeVariant::DikiiD2),
            "sadovnichiitrs" | "trs" => Ok(DisputeVariant::SadovnichiiTrS),
            _ => Err(Error::Argument(format!("unknown dispute variant '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    MatchesVariant,
    MatchesCorrected,
    Indistinguishable,
    Neither,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisputeReport {
    pub variant: DisputeVariant,
    pub computed_lhs: f64,
    pub variant_rhs: f64,
    pub corrected_rhs: f64,
    /// `|variant_rhs − corrected_rhs|`
    pub disagreement: f64,
    pub tol: f64,
    pub verdict: Verdict,
}

pub const DISPUTE_TOL: f64 = 1e-2;

fn judge(computed: f64, variant: f64, corrected: f64, tol: f64) -> Verdict {
    match (
        (computed - variant).abs() <= tol,
        (computed - corrected).abs() <= tol,
    ) {
        (true, true) => Verdict::Indistinguishable,
        (true, false) => Verdict::MatchesVariant,
        (false, true) => Verdict::MatchesCorrected,
        (false, false) => Verdict::Neither,
    }
}

/// Computes the disputed quantity from spectra and compares both candidate values.
///
/// `q` is only used by [`DisputeVariant::SadovnichiiTrS`], where it must be
/// `p'' + p²` (so that `H = h²`); `None` selects that value.
pub fn dispute(
    variant: DisputeVariant,
    p: &Coefficient,
    q: Option<&Coefficient>,
    n: usize,
    k: usize,
) -> Result<DisputeReport> {
    if !p.is_pure_cosine() {
        return Err(Error::Precondition(
            "odd derivatives of p must vanish at both ends (pure cosine series)".into(),
        ));
    }
    let fp = p.functionals();
    let p0 = fp.mean;
    let norm2 = fp.l2sq;
    let (computed, variant_rhs, corrected_rhs) = match variant {
        DisputeVariant::DikiiTrfD1 | DisputeVariant::DikiiD2 => {
            if p0.abs() > MEAN_TOL {
                return Err(Error::Precondition(format!(
                    "p must have zero mean, got p0 = {p0:e}"
                )));
            }
            // With p₀ = 0 and p'(0) = p'(1) = 0 the S01 summand is α_n² − (πn)⁴ − ‖p‖²/2.
            let report = verify(
                FormulaId::S01,
                &TraceInputs::p_only(p.clone()),
                n,
                k,
                AccelMode::Fourier,
            )?;
            let ends = 0.25 * (fp.end0 * fp.end0 + fp.end1 * fp.end1);
            let d2 = 0.125 * (fp.d2_0 + fp.d2_1);
            let plus = 0.25 * norm2 + d2 - ends;
            let minus = 0.25 * norm2 - d2 - ends;
            match variant {
                DisputeVariant::DikiiTrfD1 => (report.accelerated, plus, report.rhs),
                _ => (report.accelerated, minus, report.rhs),
            }
        }
        DisputeVariant::SadovnichiiTrS => {
            let square_q = &p.derivative(2)? + &p.multiply(p);
            if let Some(q) = q {
                let diff = q - &square_q;
                let dev = diff
                    .cos_amps()
                    .iter()
                    .chain(diff.sin_amps())
                    .fold(0.0f64, |m, x| m.max(x.abs()));
                if dev > 1e-12 {
                    return Err(Error::Precondition(
                        "q must equal p'' + p² so that H is the square of h".into(),
                    ));
                }
            }
            let spec = OperatorSpec::fourth_order(p.clone(), square_q.clone());
            let s = eigen::spectrum(&spec, n)?;
            let third = third_asymptotic_term(&s, p0, k)?;
            (third, square_q.mean(), 0.5 * (norm2 + p0 * p0))
        }
    };
    Ok(DisputeReport {
        variant,
        computed_lhs: computed,
        variant_rhs,
        corrected_rhs,
        disagreement: (variant_rhs - corrected_rhs).abs(),
        tol: DISPUTE_TOL,
        verdict: judge(computed, variant_rhs, corrected_rhs, DISPUTE_TOL),
    })
}

/// Limit of `μ_n − (πn)⁴ + 2p₀(πn)²`, from a fit `a + b/n²` over `n ∈ (k/2, k]`.
pub fn third_asymptotic_term(s: &Spectrum, p0: f64, k: usize) -> Result<f64> {
    let lo = k / 2 + 1;
    let mut pts = Vec::with_capacity(k - lo + 1);
    for n in lo..=k {
        let t = s.trusted(n)? - pi_n4(n) + 2.0 * p0 * pi_n2(n);
        pts.push(((n * n) as f64).recip());
        pts.push(t);
    }
    let m = (k - lo + 1) as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for c in pts.chunks(2) {
        let (x, y) = (c[0], c[1]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    Ok((sy - slope * sx) / m)
}

// ---------------------------------------------------------------------------
// Asymptotics and localization.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymReport {
    /// `r_n`, `n = 1..=K`
    pub residuals: Vec<f64>,
    pub n_min: usize,
    /// `max n²|r_n|` over `n ∈ [n_min, K]`
    pub c_fit: f64,
}

pub const ASYM_N_MIN: usize = 8;

/// `r_n = μ_n − [((πn)²−p₀)² − (P+p₀²)/2 + q₀ − V̂_cn]`.
pub fn asym_residuals(spec: &OperatorSpec, n: usize, k: usize) -> Result<AsymReport> {
    if spec.kind != OperatorKind::FourthOrder {
        return Err(Error::Argument(
            "asymptotics are for fourth-order operators".into(),
        ));
    }
    if k < ASYM_N_MIN {
        return Err(Error::Argument(format!("K must be at least {ASYM_N_MIN}")));
    }
    let s = eigen::spectrum(spec, n)?;
    let r = spec.resolved()?;
    let q = &r.q + &r.big_q;
    let p0 = r.p.mean();
    let big_p = r.p.big_p();
    let q0 = q.mean();
    let v = build_v(&r.p, &q);
    let residuals = (1..=k)
        .map(|j| {
            Ok(
                quartic_defect(s.trusted(j)?, j, p0) + 0.5 * (big_p + p0 * p0) - q0
                    + v.cosine_coeff(2 * j),
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    let c_fit = (ASYM_N_MIN..=k)
        .map(|j| (j * j) as f64 * residuals[j - 1].abs())
        .fold(0.0f64, f64::max);
    Ok(AsymReport {
        residuals,
        n_min: ASYM_N_MIN,
        c_fit,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizationReport {
    /// Least `N₀` with one eigenvalue per window above it and exactly `N₀`
    /// eigenvalues in the disc `|λ| < π⁴(N₀+½)⁴`; `None` if no `N₀` below the
    /// trust horizon works.
    pub n0: Option<usize>,
    /// Number of eigenvalues with `|λ^{1/4} − πn| < π/4`, for `n = 1..=n_trusted`.
    pub window_counts: Vec<usize>,
    /// Indices above `N₀` whose window does not hold exactly one eigenvalue.
    pub violations: Vec<usize>,
    pub n_trusted: usize,
}

fn in_window(lambda: f64, n: usize) -> bool {
    // negative λ has a quartic root at angle π/4, never within π/4 of πn
    lambda >= 0.0 && (lambda.powf(0.25) - PI * n as f64).abs() < PI / 4.0
}

pub fn localization(spectrum: &Spectrum) -> LocalizationReport {
    let nt = spectrum.n_trusted;
    let vals = &spectrum.vals;
    let window_counts: Vec<usize> = (1..=nt)
        .map(|n| vals.iter().filter(|&&l| in_window(l, n)).count())
        .collect();
    // ok_from[m] = every window n > m (up to nt) holds exactly one eigenvalue
    let mut ok_from = vec![true; nt + 1];
    for m in (0..nt).rev() {
        ok_from[m] = ok_from[m + 1] && window_counts[m] == 1;
    }
    let disc_ok = |m: usize| {
        let r = (PI * (m as f64 + 0.5)).powi(4);
        vals.iter().filter(|l| l.abs() < r).count() == m
    };
    let n0 = (0..nt).find(|&m| ok_from[m] && disc_ok(m));
    let start = n0.unwrap_or(0);
    let violations = (start + 1..=nt)
        .filter(|&n| window_counts[n - 1] != 1)
        .collect();
    LocalizationReport {
        n0,
        window_counts,
        violations,
        n_trusted: nt,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos2() -> Coefficient {
        Coefficient::cos_term(2, 1.0)
    }

    #[test]
    fn rhs_examples() {
        let trf3 = rhs(FormulaId::TRF3, &TraceInputs::p_only(cos2())).unwrap();
        assert!((trf3 - (-0.125 - PI * PI)).abs() < 1e-12);
        assert!((trf3 + 9.994_60).abs() < 1e-5);

        let s01 = rhs(
            FormulaId::S01,
            &TraceInputs::p_only(Coefficient::cos_term(1, 1.0)),
        )
        .unwrap();
        assert!((s01 + 0.375).abs() < 1e-12);

        let p = &Coefficient::cos_term(1, 1.0) + &cos2();
        assert!((rhs(FormulaId::GLF, &TraceInputs::p_only(p)).unwrap() - 0.5).abs() < 1e-15);

        let tr3 = TraceInputs::new(Coefficient::zero(), Coefficient::zero(), cos2());
        assert!((rhs(FormulaId::TR3, &tr3).unwrap() + 0.5).abs() < 1e-15);
        assert!((rhs(FormulaId::COR1, &tr3).unwrap() + 0.5).abs() < 1e-15);

        let s01c2 = rhs(FormulaId::S01, &TraceInputs::p_only(cos2())).unwrap();
        assert!((s01c2 - (PI * PI - 0.375)).abs() < 1e-12);
    }

    #[test]
    fn trf3_and_trq0_closed_forms_agree_when_q_vanishes() {
        for p in [
            cos2(),
            Coefficient::new(vec![0.3, -0.7, 0.2], vec![0.5, 0.0, -0.25]),
            Coefficient::sin_term(3, 1.1),
        ] {
            let inputs = TraceInputs::p_only(p);
            let a = rhs(FormulaId::TRF3, &inputs).unwrap();
            let b = rhs(FormulaId::TRQ0, &inputs).unwrap();
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn trs_closed_form_reduces_trf3() {
        let q = Coefficient::new(vec![0.0, 0.4, 1.0], vec![0.0, 0.3]);
        let q = &q - &Coefficient::constant(q.mean());
        let inputs = TraceInputs::new(Coefficient::constant(1.7), q, Coefficient::zero());
        let a = rhs(FormulaId::TRS, &inputs).unwrap();
        let b = rhs(FormulaId::TRF3, &inputs).unwrap();
        assert!((a - b).abs() <= 1e-14 * a.abs().max(1.0));
    }

    #[test]
    fn preconditions_are_enforced() {
        let q = Coefficient::constant(0.5);
        let inputs = TraceInputs::new(Coefficient::zero(), q.clone(), Coefficient::zero());
        let err = rhs(FormulaId::TRF3, &inputs).unwrap_err();
        assert!(matches!(err, Error::Precondition(ref m) if m.contains("zero mean")));
        assert!(rhs(
            FormulaId::TRS,
            &TraceInputs::p_only(Coefficient::constant(2.0))
        )
        .is_ok());
        let nonconst = TraceInputs::new(cos2(), Coefficient::zero(), Coefficient::zero());
        assert!(check_preconditions(FormulaId::TRS, &nonconst).is_err());
        assert!(check_preconditions(FormulaId::TRQ0, &inputs).is_err());
        let odd = TraceInputs::p_only(Coefficient::cos_term(1, 1.0));
        assert!(check_preconditions(FormulaId::IPR1, &odd).is_err());
        let q_mean = TraceInputs::new(Coefficient::zero(), Coefficient::zero(), q);
        assert!(check_preconditions(FormulaId::IP2, &q_mean).is_err());
        assert!(check_preconditions(FormulaId::TR3, &q_mean).is_ok());
    }

    #[test]
    fn constant_coefficients_give_zero_summands() {
        let c = 0.9;
        let inputs = TraceInputs::p_only(Coefficient::constant(c));
        let spectra = compute_spectra(FormulaId::TRF3, &inputs, 32).unwrap();
        for n in 1..=16 {
            let s = summand(FormulaId::TRF3, n, &spectra, &inputs).unwrap();
            assert!(s.abs() <= 1e-12 * pi_n4(n), "n={n} s={s}");
        }
        let spectra = compute_spectra(FormulaId::GLF, &inputs, 32).unwrap();
        for n in 1..=16 {
            let s = summand(FormulaId::GLF, n, &spectra, &inputs).unwrap();
            assert!(s.abs() <= 1e-12 * pi_n2(n));
        }
        let r = verify(FormulaId::GLF, &inputs, 32, 16, AccelMode::Fourier).unwrap();
        assert!(r.accelerated.abs() < 1e-9 && r.rhs.abs() < 1e-15);
    }

    #[test]
    fn summand_rejects_untrusted_index() {
        let inputs = TraceInputs::p_only(cos2());
        let mut spectra = compute_spectra(FormulaId::GLF, &inputs, 16).unwrap();
        spectra.primary.n_trusted = 4;
        assert!(matches!(
            summand(FormulaId::GLF, 5, &spectra, &inputs),
            Err(Error::Range {
                index: 5,
                trusted: 4
            })
        ));
    }

    #[test]
    fn richardson_cancels_inverse_k_tail() {
        // S_k = 1 − 1/k exactly
        let partial: Vec<f64> = (1..=16).map(|k| 1.0 - 1.0 / k as f64).collect();
        let r = tail_accelerate(
            FormulaId::GLF,
            &partial,
            &TraceInputs::default(),
            16,
            AccelMode::Richardson,
        )
        .unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        assert!(matches!(
            tail_accelerate(
                FormulaId::GLF,
                &partial,
                &TraceInputs::default(),
                4,
                AccelMode::Power
            ),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn power_fit_completes_pure_inverse_square_series() {
        let terms: Vec<f64> = (1..=32).map(|n| 3.0 / (n * n) as f64).collect();
        let partial = prefix_sums(&terms);
        let r = tail_accelerate(
            FormulaId::TR3,
            &partial,
            &TraceInputs::default(),
            32,
            AccelMode::Power,
        )
        .unwrap();
        assert!((r - 3.0 * PI * PI / 6.0).abs() < 1e-12);
    }

    #[test]
    fn decay_rate_of_inverse_k() {
        let partial: Vec<f64> = (1..=64).map(|k| 2.0 - 0.5 / k as f64).collect();
        let rate = decay_rate(&partial, 2.0).unwrap();
        assert!((rate + 1.0).abs() < 1e-10);
        assert_eq!(decay_rate(&[1.0; 8], 1.0), None);
    }

    #[test]
    fn formula_names_round_trip() {
        for id in FormulaId::ALL {
            assert_eq!(id.to_string().parse::<FormulaId>().unwrap(), id);
        }
        assert!("XYZ".parse::<FormulaId>().is_err());
    }

    #[test]
    fn localization_of_free_operator() {
        let s = eigen::spectrum(
            &OperatorSpec::fourth_order(Coefficient::zero(), Coefficient::zero()),
            32,
        )
        .unwrap();
        let rep = localization(&s);
        assert_eq!(rep.n0, Some(0));
        assert!(rep.violations.is_empty());
        assert!(rep.window_counts.iter().all(|&c| c == 1));
    }
}
