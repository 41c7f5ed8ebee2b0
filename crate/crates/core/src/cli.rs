//! Command-line front end.
//!
//! Exit status: 0 on success, 2 when the input is at fault (bad flags,
//! malformed coefficient files, violated hypotheses), 1 for numerical
//! failures, including a trace check that misses its tolerance.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::coeffs::Coefficient;
use crate::eigen::{self, Spectrum};
use crate::error::{Error, Result};
use crate::inverse::{self, SweepSetup, SweepTarget};
use crate::operator::OperatorSpec;
use crate::traces::{self, AccelMode, DisputeVariant, FormulaId, TraceInputs, VerifyOptions};

#[derive(Debug, Parser)]
#[command(
    name = "tracelab",
    version,
    about = "Eigenvalues and regularized trace checks on [0,1]"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigenvalues with refinement error estimates
    Spectrum {
        #[command(flatten)]
        coeffs: CoeffArgs,
        #[arg(long, value_enum, default_value_t = Kind::Fourth)]
        kind: Kind,
        /// Shift all coefficients by tau (they must be 1-periodic)
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
        #[arg(short = 'N', default_value_t = 256)]
        n: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Check a regularized trace identity
    Trace {
        #[arg(long)]
        formula: FormulaId,
        #[command(flatten)]
        coeffs: CoeffArgs,
        #[arg(long, default_value_t = 0.0)]
        tau: f64,
        #[command(flatten)]
        sizes: Sizes,
        #[arg(long, default_value = "fourier")]
        mode: AccelMode,
        /// Replace q by q - q0 where the identity needs a zero-mean q
        #[arg(long)]
        recenter_q: bool,
        /// Override the default tolerance
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Decide between the historical variants of two formulas
    Dispute {
        #[arg(long)]
        variant: DisputeVariant,
        #[command(flatten)]
        coeffs: CoeffArgs,
        #[command(flatten)]
        sizes: Sizes,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Residuals of the three-term eigenvalue asymptotics of H
    Asym {
        #[command(flatten)]
        coeffs: CoeffArgs,
        #[command(flatten)]
        sizes: Sizes,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Quartic-root windows and the disc count for H (+ Q)
    Localize {
        #[command(flatten)]
        coeffs: CoeffArgs,
        #[arg(short = 'N', default_value_t = 256)]
        n: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Shifted-family sweep and coefficient recovery
    Sweep {
        /// V, q, Q or p
        #[arg(long)]
        recover: SweepTarget,
        #[command(flatten)]
        coeffs: CoeffArgs,
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[command(flatten)]
        sizes: Sizes,
        /// Fourier mode feeds the true coefficients into the tail model
        #[arg(long, default_value = "power")]
        mode: AccelMode,
        /// Include every spectrum in JSON output
        #[arg(long)]
        full_spectra: bool,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Debug, Args)]
struct CoeffArgs {
    /// Coefficient file for p (JSON {"u": [...], "w": [...]}); zero if omitted
    #[arg(long)]
    p: Option<PathBuf>,
    #[arg(long)]
    q: Option<PathBuf>,
    #[arg(long = "Q")]
    big_q: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Sizes {
    #[arg(short = 'N', default_value_t = 256)]
    n: usize,
    #[arg(short = 'K', default_value_t = 64)]
    k: usize,
}

impl Sizes {
    fn check(&self) -> Result<()> {
        if self.n < 2 * self.k {
            return Err(Error::Argument(format!(
                "N = {} must be at least 2K = {}",
                self.n,
                2 * self.k
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Args)]
struct OutArgs {
    /// Report file; nothing but the summary is written without it
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format; defaults to the extension of --out, else csv
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    Second,
    Fourth,
    Square,
}

struct Loaded {
    p: Coefficient,
    q: Coefficient,
    big_q: Coefficient,
}

fn load(path: Option<&Path>) -> Result<Coefficient> {
    let Some(path) = path else {
        return Ok(Coefficient::zero());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Argument(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|source| Error::Parse {
        path: path.display().to_string(),
        source,
    })
}

impl CoeffArgs {
    fn load(&self) -> Result<Loaded> {
        Ok(Loaded {
            p: load(self.p.as_deref())?,
            q: load(self.q.as_deref())?,
            big_q: load(self.big_q.as_deref())?,
        })
    }
}

impl OutArgs {
    fn format(&self) -> Format {
        self.format.unwrap_or_else(|| match &self.out {
            Some(p)
                if p.extension()
                    .is_some_and(|e| e.eq_ignore_ascii_case("json")) =>
            {
                Format::Json
            }
            _ => Format::Csv,
        })
    }

    fn write(
        &self,
        csv: impl FnOnce() -> String,
        json: impl FnOnce() -> Result<String>,
    ) -> Result<()> {
        let Some(path) = &self.out else {
            return Ok(());
        };
        let body = match self.format() {
            Format::Csv => csv(),
            Format::Json => json()?,
        };
        fs::write(path, body)?;
        Ok(())
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Numeric(e.to_string()))
}

fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("n,eigenvalue,est_abs_err,trusted\n");
    for (i, v) in s.vals.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            i + 1,
            traces::fmt17(*v),
            traces::fmt17(s.est_abs_err[i]),
            u8::from(i < s.n_trusted)
        ));
    }
    out
}

/// Parses `argv` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Spectrum {
            coeffs,
            kind,
            tau,
            n,
            out,
        } => {
            let c = coeffs.load()?;
            let spec = match kind {
                Kind::Second => OperatorSpec::second_order(c.p),
                Kind::Fourth => OperatorSpec::fourth_order_perturbed(c.p, c.q, c.big_q),
                Kind::Square => OperatorSpec::square_plus_q(c.p, c.big_q),
            }
            .shifted(tau);
            let s = eigen::spectrum(&spec, n)?;
            println!(
                "kind={:?} N={} n_trusted={} lowest={:.10e}",
                s.kind, s.basis_n, s.n_trusted, s.vals[0]
            );
            out.write(|| spectrum_csv(&s), || to_json(&s))?;
            Ok(0)
        }
        Command::Trace {
            formula,
            coeffs,
            tau,
            sizes,
            mode,
            recenter_q,
            tol,
            out,
        } => {
            sizes.check()?;
            let c = coeffs.load()?;
            let inputs = TraceInputs::new(c.p, c.q, c.big_q).at(tau);
            let opts = VerifyOptions { recenter_q, tol };
            let report = traces::verify_with(formula, &inputs, sizes.n, sizes.k, mode, opts)?;
            println!("{}", report.summary_line());
            if !report.pass {
                println!(
                    "identity tested: {} (accelerated={:.10e}, rhs={:.10e})",
                    report.identity, report.accelerated, report.rhs
                );
            }
            out.write(|| report.to_csv(), || to_json(&report))?;
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Dispute {
            variant,
            coeffs,
            sizes,
            out,
        } => {
            sizes.check()?;
            let c = coeffs.load()?;
            let q = coeffs.q.is_some().then_some(&c.q);
            let r = traces::dispute(variant, &c.p, q, sizes.n, sizes.k)?;
            println!(
                "variant={:?} computed={:.10e} variant_rhs={:.10e} corrected_rhs={:.10e} disagreement={:.6e} verdict={:?}",
                r.variant, r.computed_lhs, r.variant_rhs, r.corrected_rhs, r.disagreement, r.verdict
            );
            out.write(
                || {
                    format!(
                        "variant,computed_lhs,variant_rhs,corrected_rhs,disagreement,tol,verdict\n{:?},{},{},{},{},{},{:?}\n",
                        r.variant,
                        traces::fmt17(r.computed_lhs),
                        traces::fmt17(r.variant_rhs),
                        traces::fmt17(r.corrected_rhs),
                        traces::fmt17(r.disagreement),
                        traces::fmt17(r.tol),
                        r.verdict
                    )
                },
                || to_json(&r),
            )?;
            Ok(0)
        }
        Command::Asym { coeffs, sizes, out } => {
            sizes.check()?;
            let c = coeffs.load()?;
            let spec = OperatorSpec::fourth_order_perturbed(c.p, c.q, c.big_q);
            let r = traces::asym_residuals(&spec, sizes.n, sizes.k)?;
            println!("C={:.6e} over n in [{}, {}]", r.c_fit, r.n_min, sizes.k);
            out.write(
                || {
                    let mut s = String::from("n,residual,n2_residual\n");
                    for (i, x) in r.residuals.iter().enumerate() {
                        let n = (i + 1) as f64;
                        s.push_str(&format!(
                            "{},{},{}\n",
                            i + 1,
                            traces::fmt17(*x),
                            traces::fmt17(n * n * x)
                        ));
                    }
                    s
                },
                || to_json(&r),
            )?;
            Ok(0)
        }
        Command::Localize { coeffs, n, out } => {
            let c = coeffs.load()?;
            let spec = OperatorSpec::fourth_order_perturbed(c.p, c.q, c.big_q);
            let s = eigen::spectrum(&spec, n)?;
            let r = traces::localization(&s);
            let n0 = r.n0.map_or_else(|| "none".to_string(), |v| v.to_string());
            println!(
                "N0={} violations={} n_trusted={}",
                n0,
                r.violations.len(),
                r.n_trusted
            );
            out.write(
                || {
                    let mut s = String::from("n,window_count\n");
                    for (i, c) in r.window_counts.iter().enumerate() {
                        s.push_str(&format!("{},{}\n", i + 1, c));
                    }
                    s
                },
                || to_json(&r),
            )?;
            Ok(if r.n0.is_some() { 0 } else { 1 })
        }
        Command::Sweep {
            recover,
            coeffs,
            grid,
            sizes,
            mode,
            full_spectra,
            out,
        } => {
            sizes.check()?;
            let c = coeffs.load()?;
            let setup = SweepSetup::new(recover, c.p, c.q, c.big_q)
                .sizes(sizes.n, sizes.k)
                .mode(mode);
            let sr = inverse::sweep(&setup, grid)?;
            println!(
                "target={} grid={} wrap_gap={:.3e} min_n_trusted={}",
                sr.target,
                sr.taus.len(),
                sr.wrap_gap,
                sr.n_trusted().into_iter().min().unwrap_or(0)
            );
            out.write(|| sr.to_csv(), || sr.to_json(full_spectra))?;
            Ok(0)
        }
    }
}
