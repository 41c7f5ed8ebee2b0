//! Shifted operator families and recovery of coefficients from their spectra.
//!
//! For a 1-periodic coefficient the shifted operators `H_τ` (all of `p`, `q`
//! shifted by `τ`) and `h² + Q(· + τ)` have regularized traces that are point
//! values of `V`, `Q` or `p` at `τ`. Sampling `τ` on a grid and inverting the
//! trace identity reads these functions back off the spectra.
//!
//! The default acceleration for recovery is [`AccelMode::Power`], which fits
//! the tail from the summands alone. [`AccelMode::Fourier`] would feed the
//! very coefficient being recovered into its tail model.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeffs::Coefficient;
use crate::eigen::{self, Spectrum};
use crate::error::{Error, Result};
use crate::operator::{HBasis, OperatorKind, OperatorSpec};
use crate::sum::prefix_sums;
use crate::traces::{self, AccelMode, FormulaId, SpectraSet, TraceInputs};

pub const MIN_GRID: usize = 4;

/// The function a sweep reconstructs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepTarget {
    /// `V = q − p''/2` from the spectra of `H_τ`.
    #[serde(rename = "V")]
    V,
    /// `q` from the spectra of `H_τ`, given `p`.
    #[serde(rename = "q")]
    SmallQ,
    /// `Q` from the spectra of `h² + Q(· + τ)`.
    #[serde(rename = "Q")]
    BigQ,
    /// `p` from the spectra of `−∂² − p(· + τ)`.
    #[serde(rename = "p_second_order")]
    SecondOrderP,
}

impl SweepTarget {
    fn formula(self) -> FormulaId {
        match self {
            SweepTarget::V | SweepTarget::SmallQ => FormulaId::IPR1,
            SweepTarget::BigQ => FormulaId::IP2,
            SweepTarget::SecondOrderP => FormulaId::GLF,
        }
    }
}

impl fmt::Display for SweepTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepTarget::V => "V",
            SweepTarget::SmallQ => "q",
            SweepTarget::BigQ => "Q",
            SweepTarget::SecondOrderP => "p_second_order",
        })
    }
}

impl FromStr for SweepTarget {
    type Err = Error;
    /// Case matters: `q` and `Q` are different targets.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "V" | "v" => Ok(SweepTarget::V),
            "q" => Ok(SweepTarget::SmallQ),
            "Q" => Ok(SweepTarget::BigQ),
            "p" | "p_second_order" => Ok(SweepTarget::SecondOrderP),
            _ => Err(Error::Argument(format!(
                "unknown recovery target '{s}' (expected V, q, Q or p)"
            ))),
        }
    }
}

/// Everything a sweep needs besides the grid.
#[derive(Debug, Clone)]
pub struct SweepSetup {
    pub target: SweepTarget,
    pub p: Coefficient,
    pub q: Coefficient,
    pub big_q: Coefficient,
    pub n: usize,
    pub k: usize,
    pub mode: AccelMode,
}

impl SweepSetup {
    pub fn new(target: SweepTarget, p: Coefficient, q: Coefficient, big_q: Coefficient) -> Self {
        SweepSetup {
            target,
            p,
            q,
            big_q,
            n: 256,
            k: 64,
            mode: AccelMode::Power,
        }
    }

    pub fn sizes(mut self, n: usize, k: usize) -> Self {
        self.n = n;
        self.k = k;
        self
    }

    pub fn mode(mut self, mode: AccelMode) -> Self {
        self.mode = mode;
        self
    }

    fn inputs(&self, tau: f64) -> Result<TraceInputs> {
        let mut inputs = TraceInputs {
            p: self.p.clone(),
            q: self.q.clone(),
            big_q: self.big_q.clone(),
            tau,
        };
        // the second-order identity has no shift of its own
        if self.target == SweepTarget::SecondOrderP {
            if !self.p.is_constant() {
                inputs.p = self.p.shift(tau)?;
            }
            inputs.tau = 0.0;
        }
        Ok(inputs)
    }

    fn check(&self, grid: usize) -> Result<()> {
        if grid < MIN_GRID {
            return Err(Error::Argument(format!(
                "grid size must be at least {MIN_GRID}, got {grid}"
            )));
        }
        if self.n < 2 * self.k {
            return Err(Error::Argument(format!(
                "basis size N = {} must be at least 2K = {}",
                self.n,
                2 * self.k
            )));
        }
        let shifted: Vec<(&Coefficient, &str)> = match self.target {
            SweepTarget::V | SweepTarget::SmallQ => vec![(&self.p, "p"), (&self.q, "q")],
            SweepTarget::BigQ => vec![(&self.big_q, "Q")],
            SweepTarget::SecondOrderP => vec![(&self.p, "p")],
        };
        for (f, name) in shifted {
            if !f.is_one_periodic() {
                return Err(Error::Precondition(format!(
                    "{name} must be 1-periodic to define the shifted family"
                )));
            }
        }
        traces::check_preconditions(self.target.formula(), &self.inputs(0.0)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub target: SweepTarget,
    pub mode: AccelMode,
    pub basis_n: usize,
    pub k: usize,
    /// `τ_i = i / grid`
    pub taus: Vec<f64>,
    /// Spectrum that changes with `τ` (`μ(τ)`, `ν(τ)` or `α(τ)`).
    pub spectra: Vec<Spectrum>,
    /// Accelerated left side of the trace identity at each `τ`.
    pub accelerated: Vec<f64>,
    pub recovered: Vec<f64>,
    /// Sum of the lowest `branch_size` eigenvalues at each `τ`.
    pub sum_branch: Vec<f64>,
    /// `max(N₀, 1)` with `N₀` the largest localization index over the grid.
    pub branch_size: usize,
    /// `|recovered(τ=1) − recovered(τ=0)|`, both recomputed from scratch.
    pub wrap_gap: f64,
    /// Trigonometric least-squares fit `Σ a_j cos 2πjτ + b_j sin 2πjτ`.
    pub fit: Coefficient,
}

impl SweepResult {
    pub fn n_trusted(&self) -> Vec<usize> {
        self.spectra.iter().map(|s| s.n_trusted).collect()
    }

    /// `(τ, value)` pairs.
    pub fn samples(&self) -> Vec<(f64, f64)> {
        self.taus
            .iter()
            .copied()
            .zip(self.recovered.iter().copied())
            .collect()
    }

    /// CSV with columns `tau,recovered_value,accelerated_sum,n_trusted`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("tau,recovered_value,accelerated_sum,n_trusted\n");
        for (i, tau) in self.taus.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                traces::fmt17(*tau),
                traces::fmt17(self.recovered[i]),
                traces::fmt17(self.accelerated[i]),
                self.spectra[i].n_trusted
            ));
        }
        out
    }

    /// JSON report; per-`τ` spectra are only included when `full_spectra` is set.
    pub fn to_json(&self, full_spectra: bool) -> Result<String> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Numeric(e.to_string()))?;
        if let Some(obj) = v.as_object_mut() {
            if !full_spectra {
                obj.remove("spectra");
                obj.insert(
                    "n_trusted".into(),
                    serde_json::to_value(self.n_trusted()).unwrap_or_default(),
                );
            }
        }
        serde_json::to_string_pretty(&v).map_err(|e| Error::Numeric(e.to_string()))
    }

    /// Largest `|recovered(τ) − f(τ)|` over the grid.
    pub fn sup_error(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.samples()
            .iter()
            .map(|&(t, v)| (v - f(t)).abs())
            .fold(0.0, f64::max)
    }
}

// For `h² + Q(· + τ)`: `α` and the `h` eigenbases do not move with τ.
struct SquareCache {
    alpha: Spectrum,
    coarse: HBasis,
    fine: HBasis,
}

struct Point {
    spectra: SpectraSet,
    accelerated: f64,
}

fn point(setup: &SweepSetup, cache: Option<&SquareCache>, tau: f64) -> Result<Point> {
    let formula = setup.target.formula();
    let inputs = setup.inputs(tau)?;
    let spectra = match cache {
        Some(SquareCache {
            alpha,
            coarse,
            fine,
        }) => {
            let q_tau = if setup.big_q.is_constant() {
                setup.big_q.clone()
            } else {
                setup.big_q.shift(tau)?
            };
            let kind = OperatorKind::SquarePlusQ;
            let c = eigen::section_eigenvalues(kind, &coarse.assemble(&q_tau, setup.n)?.a)?;
            let f = eigen::section_eigenvalues(kind, &fine.assemble(&q_tau, 2 * setup.n)?.a)?;
            SpectraSet {
                primary: alpha.clone(),
                secondary: Some(eigen::annotate(kind, c, &f, eigen::DEFAULT_TOL_TRUST)),
            }
        }
        None => traces::compute_spectra(formula, &inputs, setup.n)?,
    };
    if setup.k > spectra.n_trusted() {
        return Err(Error::Range {
            index: setup.k,
            trusted: spectra.n_trusted(),
        });
    }
    let terms = traces::summands(formula, setup.k, &spectra, &inputs)?;
    let partial = prefix_sums(&terms);
    let accelerated = traces::tail_accelerate(formula, &partial, &inputs, setup.k, setup.mode)?;
    Ok(Point {
        spectra,
        accelerated,
    })
}

/// Reads the target value at one `τ` off the accelerated trace.
fn invert(setup: &SweepSetup, tau: f64, accelerated: f64) -> Result<f64> {
    let p0 = setup.p.mean();
    Ok(match setup.target {
        SweepTarget::V => recover_v_value(accelerated, p0, setup.p.l2sq()),
        SweepTarget::SmallQ => {
            recover_v_value(accelerated, p0, setup.p.l2sq())
                + 0.5 * setup.p.derivative(2)?.value_at(tau)
        }
        SweepTarget::BigQ => -2.0 * accelerated,
        // Σ(α_n(τ) − (πn)² + p₀) = (p(τ) − p₀)/2 for periodic p
        SweepTarget::SecondOrderP => 2.0 * accelerated + p0,
    })
}

/// `V(τ) = −2 S(τ) − (P − p₀²)/2` with `P = ‖p‖²`.
pub fn recover_v_value(accelerated: f64, p0: f64, norm2: f64) -> f64 {
    -2.0 * accelerated - 0.5 * (norm2 - p0 * p0)
}

/// Runs the shifted family on a uniform grid of `grid` points in `[0, 1)`.
pub fn sweep(setup: &SweepSetup, grid: usize) -> Result<SweepResult> {
    setup.check(grid)?;
    let cache = match setup.target {
        SweepTarget::BigQ => Some(SquareCache {
            alpha: eigen::spectrum(&OperatorSpec::second_order(setup.p.clone()), setup.n)?,
            coarse: HBasis::new(&setup.p, 2 * setup.n)?,
            fine: HBasis::new(&setup.p, 4 * setup.n)?,
        }),
        SweepTarget::V | SweepTarget::SmallQ | SweepTarget::SecondOrderP => None,
    };

    let taus: Vec<f64> = (0..grid).map(|i| i as f64 / grid as f64).collect();
    // grid points plus the wrap point τ = 1
    let mut points: Vec<Point> = taus
        .iter()
        .copied()
        .chain(std::iter::once(1.0))
        .collect::<Vec<f64>>()
        .par_iter()
        .map(|&t| point(setup, cache.as_ref(), t))
        .collect::<Result<Vec<Point>>>()?;
    let wrap = points.pop().expect("wrap point");

    let recovered = taus
        .iter()
        .zip(&points)
        .map(|(&t, pt)| invert(setup, t, pt.accelerated))
        .collect::<Result<Vec<f64>>>()?;
    let wrap_gap = (invert(setup, 1.0, wrap.accelerated)? - recovered[0]).abs();

    let moving = |pt: &Point| -> Spectrum {
        pt.spectra
            .secondary
            .clone()
            .unwrap_or_else(|| pt.spectra.primary.clone())
    };
    let spectra: Vec<Spectrum> = points.iter().map(moving).collect();
    let branch_size = match setup.target {
        SweepTarget::SecondOrderP => 1,
        _ => spectra
            .iter()
            .filter_map(|s| traces::localization(s).n0)
            .max()
            .unwrap_or(0)
            .max(1),
    };
    let sum_branch = spectra
        .iter()
        .map(|s| crate::sum::csum(s.vals.iter().take(branch_size).copied()))
        .collect();

    let degree = fit_degree(setup, grid);
    let fit = trig_fit(&taus, &recovered, degree);

    Ok(SweepResult {
        target: setup.target,
        mode: setup.mode,
        basis_n: setup.n,
        k: setup.k,
        accelerated: points.iter().map(|p| p.accelerated).collect(),
        taus,
        spectra,
        recovered,
        sum_branch,
        branch_size,
        wrap_gap,
        fit,
    })
}

fn fit_degree(setup: &SweepSetup, grid: usize) -> usize {
    let j = match setup.target {
        SweepTarget::V | SweepTarget::SmallQ => setup.p.degree().max(setup.q.degree()),
        SweepTarget::BigQ => setup.big_q.degree(),
        SweepTarget::SecondOrderP => setup.p.degree(),
    };
    // 1-periodic coefficients only carry even j = 2m
    (j / 2).min((grid - 1) / 2)
}

/// Least-squares fit by 1-periodic harmonics up to `cos/sin 2π·degree·τ`.
///
/// On a uniform grid with `2·degree < grid` the normal equations are diagonal,
/// so the coefficients are discrete Fourier sums.
pub fn trig_fit(taus: &[f64], values: &[f64], degree: usize) -> Coefficient {
    let m = taus.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let mut fit = Coefficient::constant(mean);
    for j in 1..=degree {
        let w = 2.0 * PI * j as f64;
        let a = 2.0 / m
            * taus
                .iter()
                .zip(values)
                .map(|(t, v)| v * (w * t).cos())
                .sum::<f64>();
        let b = 2.0 / m
            * taus
                .iter()
                .zip(values)
                .map(|(t, v)| v * (w * t).sin())
                .sum::<f64>();
        fit = &(&fit + &Coefficient::cos_term(2 * j, a)) + &Coefficient::sin_term(2 * j, b);
    }
    fit
}

fn expect_target(sr: &SweepResult, allowed: &[SweepTarget]) -> Result<()> {
    if !allowed.contains(&sr.target) {
        return Err(Error::Precondition(format!(
            "sweep was run for target {}, expected one of {:?}",
            sr.target, allowed
        )));
    }
    Ok(())
}

/// `V(τ)` samples from a `V` or `q` sweep, given `p₀` and `‖p‖²`.
pub fn recover_v(sr: &SweepResult, p0: f64, norm2: f64) -> Result<Vec<(f64, f64)>> {
    expect_target(sr, &[SweepTarget::V, SweepTarget::SmallQ])?;
    Ok(sr
        .taus
        .iter()
        .zip(&sr.accelerated)
        .map(|(&t, &s)| (t, recover_v_value(s, p0, norm2)))
        .collect())
}

/// `q(τ) = V(τ) + p''(τ)/2`.
pub fn recover_q(sr: &SweepResult, p: &Coefficient) -> Result<Vec<(f64, f64)>> {
    let d2 = p.derivative(2)?;
    Ok(recover_v(sr, p.mean(), p.l2sq())?
        .into_iter()
        .map(|(t, v)| (t, v + 0.5 * d2.value_at(t)))
        .collect())
}

/// `Q(τ)` from a `Q` sweep, or `p(τ)` from a second-order sweep.
pub fn recover_big_q(sr: &SweepResult) -> Result<Vec<(f64, f64)>> {
    expect_target(sr, &[SweepTarget::BigQ, SweepTarget::SecondOrderP])?;
    Ok(sr.samples())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_names() {
        assert_eq!("q".parse::<SweepTarget>().unwrap(), SweepTarget::SmallQ);
        assert_eq!("Q".parse::<SweepTarget>().unwrap(), SweepTarget::BigQ);
        assert_eq!("V".parse::<SweepTarget>().unwrap(), SweepTarget::V);
        assert!("x".parse::<SweepTarget>().is_err());
        assert_eq!(
            serde_json::to_string(&SweepTarget::SecondOrderP).unwrap(),
            "\"p_second_order\""
        );
    }

    #[test]
    fn trig_fit_reproduces_harmonics() {
        let taus: Vec<f64> = (0..16).map(|i| i as f64 / 16.0).collect();
        let f = |t: f64| 0.3 + (2.0 * PI * t).cos() - 0.5 * (4.0 * PI * t).sin();
        let vals: Vec<f64> = taus.iter().map(|&t| f(t)).collect();
        let fit = trig_fit(&taus, &vals, 3);
        for x in [0.0, 0.13, 0.5, 0.77] {
            assert!((fit.value_at(x) - f(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn sweep_rejects_bad_setups() {
        let setup = SweepSetup::new(
            SweepTarget::V,
            Coefficient::cos_term(1, 1.0),
            Coefficient::zero(),
            Coefficient::zero(),
        )
        .sizes(32, 8);
        assert!(matches!(sweep(&setup, 8), Err(Error::Precondition(_))));
        let ok = SweepSetup {
            p: Coefficient::zero(),
            ..setup.clone()
        };
        assert!(matches!(sweep(&ok, 2), Err(Error::Argument(_))));
        let small = ok.clone().sizes(32, 32);
        assert!(matches!(sweep(&small, 8), Err(Error::Argument(_))));
        let q_mean = SweepSetup {
            q: Coefficient::constant(1.0),
            ..ok
        };
        assert!(matches!(sweep(&q_mean, 8), Err(Error::Precondition(_))));
    }

    #[test]
    fn constant_family_is_shift_invariant() {
        let setup = SweepSetup::new(
            SweepTarget::V,
            Coefficient::zero(),
            Coefficient::zero(),
            Coefficient::zero(),
        )
        .sizes(32, 16);
        let sr = sweep(&setup, 4).unwrap();
        for s in &sr.spectra[1..] {
            assert_eq!(s.vals, sr.spectra[0].vals);
        }
        assert!(sr.recovered.iter().all(|v| v.abs() < 1e-9));
        assert_eq!(sr.wrap_gap, 0.0);
        assert_eq!(sr.to_csv().lines().count(), 5);
    }
}
