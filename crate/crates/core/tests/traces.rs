use std::f64::consts::PI;

use tracelab::traces::{
    self, AccelMode, DisputeVariant, FormulaId, TraceInputs, TraceReport, Verdict, VerifyOptions,
};
use tracelab::{eigen, Coefficient, Error, OperatorSpec};

fn cos(j: usize) -> Coefficient {
    Coefficient::cos_term(j, 1.0)
}

fn sin(j: usize) -> Coefficient {
    Coefficient::sin_term(j, 1.0)
}

#[test]
fn cor1_matches_closed_form() {
    let inputs = TraceInputs::new(cos(2), Coefficient::zero(), cos(2));
    let r = traces::verify(FormulaId::COR1, &inputs, 256, 64, AccelMode::Fourier).unwrap();
    assert!((r.rhs + 0.5).abs() < 1e-15);
    assert!(r.gap.abs() <= 1e-2, "{}", r.summary_line());
}

#[test]
fn tr3_with_nonzero_mean_perturbation() {
    // the summand carries −Q₀, so a constant part of Q drops out exactly
    let big_q = &cos(2) + &Coefficient::constant(0.7);
    let inputs = TraceInputs::new(Coefficient::zero(), Coefficient::zero(), big_q);
    let r = traces::verify(FormulaId::TR3, &inputs, 128, 32, AccelMode::Fourier).unwrap();
    assert!(r.pass, "{}", r.summary_line());
}

#[test]
fn tr3_asymmetric_endpoints() {
    // Q = sin πx has Q(0) = Q(1) = 0 but Q₀ = 2/π
    let inputs = TraceInputs::new(Coefficient::zero(), Coefficient::zero(), sin(1));
    let r = traces::verify(FormulaId::TR3, &inputs, 256, 64, AccelMode::Fourier).unwrap();
    assert!((r.rhs - 1.0 / PI).abs() < 1e-15);
    assert!(r.pass, "{}", r.summary_line());
}

#[test]
fn shifted_identities_track_tau() {
    for tau in [0.0, 0.3, 0.75] {
        let inputs = TraceInputs::new(cos(2), sin(2), Coefficient::zero()).at(tau);
        let r = traces::verify(FormulaId::IPR1, &inputs, 256, 64, AccelMode::Fourier).unwrap();
        assert!(r.pass, "tau={tau}: {}", r.summary_line());
    }
    let inputs = TraceInputs::new(cos(2), Coefficient::zero(), &cos(2) + &sin(4)).at(0.3);
    let r = traces::verify(FormulaId::IP2, &inputs, 128, 32, AccelMode::Power).unwrap();
    assert!(r.pass, "{}", r.summary_line());
}

#[test]
fn fourth_order_minus_second_order_sum() {
    // summand(TRF3) − summand(S01) = μ_n + P − α_n²
    let p = cos(2);
    let n = 256;
    let k = 64;
    let a = traces::verify(
        FormulaId::TRF3,
        &TraceInputs::p_only(p.clone()),
        n,
        k,
        AccelMode::Fourier,
    )
    .unwrap();
    let b = traces::verify(
        FormulaId::S01,
        &TraceInputs::p_only(p.clone()),
        n,
        k,
        AccelMode::Fourier,
    )
    .unwrap();
    let mu = eigen::spectrum(
        &OperatorSpec::fourth_order(p.clone(), Coefficient::zero()),
        n,
    )
    .unwrap();
    let alpha = eigen::spectrum(&OperatorSpec::second_order(p.clone()), n).unwrap();
    let big_p = p.big_p();
    let terms: Vec<f64> = (1..=k)
        .map(|j| mu.get(j) + big_p - alpha.get(j) * alpha.get(j))
        .collect();
    let partial = tracelab::sum::prefix_sums(&terms);
    // the power fit alone, independent of both Fourier tail models
    let direct = traces::tail_accelerate(
        FormulaId::TR3,
        &partial,
        &TraceInputs::default(),
        k,
        AccelMode::Power,
    )
    .unwrap();
    let diff = a.accelerated - b.accelerated;
    assert!((diff - direct).abs() <= a.tol + b.tol, "{diff} vs {direct}");
}

#[test]
fn partial_sums_approach_closed_form_at_inverse_k_rate() {
    let r = traces::verify(
        FormulaId::TRF3,
        &TraceInputs::p_only(cos(2)),
        256,
        64,
        AccelMode::Fourier,
    )
    .unwrap();
    let rate = r.rate_exponent.unwrap();
    assert!(rate <= -0.8, "rate {rate}");
}

#[test]
fn summand_follows_fourier_coefficient_of_v() {
    let p = cos(2);
    let q = sin(2);
    let inputs = TraceInputs::new(p.clone(), q.clone(), Coefficient::zero());
    let spectra = traces::compute_spectra(FormulaId::TRF3, &inputs, 256).unwrap();
    let v = tracelab::coeffs::build_v(&p, &q);
    for n in 8..=64 {
        let s = traces::summand(FormulaId::TRF3, n, &spectra, &inputs).unwrap();
        let r = s + v.cosine_coeff(2 * n);
        assert!(((n * n) as f64 * r).abs() < 2.0, "n={n} r={r}");
    }
}

#[test]
fn recentering_q_is_recorded() {
    let q = &sin(2) + &Coefficient::constant(0.4);
    let inputs = TraceInputs::new(cos(2), q, Coefficient::zero());
    assert!(matches!(
        traces::verify(FormulaId::TRF3, &inputs, 64, 16, AccelMode::Fourier),
        Err(Error::Precondition(_))
    ));
    let opts = VerifyOptions {
        recenter_q: true,
        tol: None,
    };
    let r =
        traces::verify_with(FormulaId::TRF3, &inputs, 128, 32, AccelMode::Fourier, opts).unwrap();
    assert!((r.q_shift - 0.4).abs() < 1e-15);
    assert!(r.pass, "{}", r.summary_line());
}

#[test]
fn truncation_beyond_trust_is_refused() {
    let inputs = TraceInputs::p_only(cos(2));
    let mut spectra = traces::compute_spectra(FormulaId::GLF, &inputs, 32).unwrap();
    spectra.primary.n_trusted = 10;
    let err = traces::verify_on(
        FormulaId::GLF,
        &inputs,
        &spectra,
        16,
        AccelMode::Fourier,
        None,
        0.0,
    )
    .unwrap_err();
    assert!(matches!(
        err,
        Error::Range {
            index: 16,
            trusted: 10
        }
    ));
}

#[test]
fn report_serialization() {
    let r = traces::verify(
        FormulaId::GLF,
        &TraceInputs::p_only(cos(1)),
        64,
        16,
        AccelMode::Richardson,
    )
    .unwrap();
    let json = serde_json::to_string(&r).unwrap();
    let back: TraceReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, r);
    let csv = r.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("K,S_K,accelerated,rhs,gap"));
    assert_eq!(lines.count(), 16);
    assert!(r.summary_line().starts_with("formula=GLF gap="));
}

#[test]
fn dikii_variants_coincide_without_endpoint_curvature() {
    // p = cos πx: p''(0) + p''(1) = 0
    let r = traces::dispute(DisputeVariant::DikiiTrfD1, &cos(1), None, 128, 32).unwrap();
    assert_eq!(r.disagreement, 0.0);
    assert_eq!(r.verdict, Verdict::Indistinguishable);
    let d2 = traces::dispute(DisputeVariant::DikiiD2, &cos(2), None, 128, 32).unwrap();
    assert_eq!(d2.verdict, Verdict::Indistinguishable);
    assert!((d2.disagreement).abs() < 1e-12);
}

#[test]
fn dispute_hypotheses() {
    assert!(matches!(
        traces::dispute(DisputeVariant::DikiiD2, &sin(2), None, 64, 16),
        Err(Error::Precondition(_))
    ));
    let shifted = &cos(2) + &Coefficient::constant(1.0);
    assert!(matches!(
        traces::dispute(DisputeVariant::DikiiTrfD1, &shifted, None, 64, 16),
        Err(Error::Precondition(_))
    ));
    assert!(matches!(
        traces::dispute(
            DisputeVariant::SadovnichiiTrS,
            &cos(2),
            Some(&sin(2)),
            64,
            16
        ),
        Err(Error::Precondition(_))
    ));
    // p₀ ≠ 0 is allowed for the asymptotic term
    let r = traces::dispute(DisputeVariant::SadovnichiiTrS, &shifted, None, 128, 32).unwrap();
    assert_eq!(r.verdict, Verdict::MatchesCorrected);
    assert!((r.corrected_rhs - 1.25).abs() < 1e-14);
}

#[test]
fn asymptotics_constant_and_potential_cases() {
    let flat = traces::asym_residuals(
        &OperatorSpec::fourth_order(Coefficient::constant(2.0), Coefficient::zero()),
        64,
        32,
    )
    .unwrap();
    assert!(flat
        .residuals
        .iter()
        .enumerate()
        .all(|(i, r)| r.abs() <= 1e-12 * ((i + 1) as f64 * PI).powi(4)));
    let pot = traces::asym_residuals(
        &OperatorSpec::fourth_order(Coefficient::zero(), sin(2)),
        256,
        64,
    )
    .unwrap();
    assert!(
        pot.c_fit.is_finite() && pot.c_fit < 1.0,
        "C = {}",
        pot.c_fit
    );
    assert!(traces::asym_residuals(&OperatorSpec::second_order(cos(2)), 64, 16).is_err());
}

#[test]
fn localization_of_constant_p_matches_analytic_windows() {
    let s = eigen::spectrum(
        &OperatorSpec::fourth_order(Coefficient::constant(1.0), Coefficient::zero()),
        64,
    )
    .unwrap();
    let r = traces::localization(&s);
    assert_eq!(r.n0, Some(0));
    assert!(r.window_counts.iter().all(|&c| c == 1));
}
