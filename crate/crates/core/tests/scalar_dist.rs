use std::f64::consts::{PI, SQRT_2};

use libm::erfc;
use mobo::optimizers::safeguarded_newton_1d;
use mobo::scalar_dist::*;
use mobo::streams;
use proptest::prelude::*;
use rand::Rng;

fn random_posterior(rng: &mut impl Rng, m: usize) -> ScalarisedPosterior {
    let means = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
    let stds = (0..m).map(|_| rng.random_range(0.2..2.0)).collect();
    ScalarisedPosterior::new(means, stds).unwrap()
}

/// d/dg log p for two components, written with erfc and raw exponentials.
fn closed_form_dlog_two(g: f64, m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    let e1 = ((g - m1).powi(2) / (2.0 * s1 * s1)).exp();
    let e2 = ((g - m2).powi(2) / (2.0 * s2 * s2)).exp();
    let c1 = erfc((-g + m1) / (SQRT_2 * s1));
    let c2 = erfc((-g + m2) / (SQRT_2 * s2));
    let r = (2.0 * PI).sqrt();
    let num = 4.0 * s1 * s1 * s2 * s2
        + r * (-e1 * (g - m2) * s1.powi(3) * c1 - e2 * (g - m1) * s2.powi(3) * c2);
    let den = r * s1 * s1 * s2 * s2 * (e1 * s1 * c1 + e2 * s2 * c2);
    num / den
}

/// Second-derivative closed form for two components. Evaluates to
/// (log p)'' itself, i.e. minus the Laplace precision.
fn closed_form_d2log_two(g: f64, m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    let e1 = ((g - m1).powi(2) / (2.0 * s1 * s1)).exp();
    let e2 = ((g - m2).powi(2) / (2.0 * s2 * s2)).exp();
    let c1 = erfc((-g + m1) / (SQRT_2 * s1));
    let c2 = erfc((-g + m2) / (SQRT_2 * s2));
    let r = (2.0 * PI).sqrt();
    let (d1, d2) = (g - m1, g - m2);
    let num = -e1 * e1 * PI * s1.powi(5) * s2 * c1 * c1
        + e1 * c1
            * (r * s1 * s1 * s2 * (d2 * s1 * s1 + 3.0 * (-d1) * s2 * s2)
                + e2 * PI
                    * (d2 * d2 * s1.powi(4) - s1 * s1 * (2.0 * d1 * d2 + s1 * s1) * s2 * s2
                        + (d1 - s1) * (d1 + s1) * s2.powi(4))
                    * c2)
        - s1 * s2
            * s2
            * (8.0 * s1 * s1 * s2
                + e2 * r * (3.0 * d2 * s1 * s1 + (-d1) * s2 * s2) * c2
                + e2 * e2 * PI * s2.powi(3) * c2 * c2);
    let den = PI * s1.powi(3) * s2.powi(3) * (e1 * s1 * c1 + e2 * s2 * c2).powi(2);
    num / den
}

#[test]
fn two_objective_closed_form_derivatives_agree() {
    let mut rng = streams::seeded(31);
    for _ in 0..20 {
        let sp = random_posterior(&mut rng, 2);
        let (m, s) = (sp.means(), sp.stds());
        let fit = laplace_fit(&sp).unwrap();
        for k in 0..50 {
            let g = fit.mode + (k as f64 - 25.0) / 25.0 * 2.0 * sp.max_std();
            let closed = closed_form_dlog_two(g, m[0], s[0], m[1], s[1]);
            let ours = exact_log_pdf_derivative(&sp, g);
            assert!(
                (closed - ours).abs() < 1e-8 * (1.0 + ours.abs()),
                "g={g}: {closed} vs {ours}"
            );
        }
        assert!(closed_form_dlog_two(fit.mode, m[0], s[0], m[1], s[1]).abs() < 1e-6);
        let d2 = closed_form_d2log_two(fit.mode, m[0], s[0], m[1], s[1]);
        assert!(
            (-d2 - fit.precision).abs() < 1e-5 * fit.precision,
            "{d2} vs {}",
            fit.precision
        );
    }
}

#[test]
fn laplace_mode_agrees_with_central_difference_search() {
    let mut rng = streams::seeded(32);
    for m in [2, 3, 5] {
        for _ in 0..10 {
            let sp = random_posterior(&mut rng, m);
            let fit = laplace_fit(&sp).unwrap();
            let h = 1e-4 * sp.max_std();
            let dlog = |g: f64| (exact_log_pdf(&sp, g + h) - exact_log_pdf(&sp, g - h)) / (2.0 * h);
            let d2 = |g: f64| (dlog(g + h) - dlog(g - h)) / (2.0 * h);
            let numeric = safeguarded_newton_1d(dlog, d2, sp.support(6.0), 1e-6).unwrap();
            assert!(
                (numeric - fit.mode).abs() < 1e-5 * sp.max_std(),
                "{numeric} vs {}",
                fit.mode
            );
            assert!(exact_log_pdf_derivative(&sp, fit.mode).abs() < 1e-8);
            assert!(fit.precision > 0.0);
        }
    }
}

#[test]
fn pdf_is_derivative_of_cdf_across_configs() {
    let mut rng = streams::seeded(33);
    for cfg in 0..50 {
        let m = [1, 2, 3, 5][cfg % 4];
        let sp = random_posterior(&mut rng, m);
        let (lo, hi) = sp.support(5.0);
        let h = 1e-4 * sp.stds().iter().cloned().fold(f64::INFINITY, f64::min);
        for _ in 0..1000 {
            let g = rng.random_range(lo..hi);
            let fd = (exact_cdf(&sp, g + h) - exact_cdf(&sp, g - h)) / (2.0 * h);
            let p = exact_pdf(&sp, g);
            assert!(p >= 0.0);
            assert!((fd - p).abs() < 1e-6, "m={m} g={g}: {fd} vs {p}");
        }
    }
}

#[test]
fn empirical_cdf_converges() {
    let mut rng = streams::seeded(34);
    let sp = random_posterior(&mut rng, 3);
    for count in [1_000usize, 10_000, 100_000] {
        let mut s = sample(&sp, count, &mut streams::stream(34, "ks", count as u64));
        s.sort_by(f64::total_cmp);
        let ks = ks_distance(&s, |g| exact_cdf(&sp, g));
        assert!(ks < 3.0 / (count as f64).sqrt(), "count={count}: {ks}");
    }
}

#[test]
fn single_component_representations_agree() {
    let sp = ScalarisedPosterior::new(vec![0.4], vec![0.7]).unwrap();
    let lap = laplace_fit(&sp).unwrap();
    assert!((lap.mode - 0.4).abs() < 1e-6);
    assert!((lap.precision - 1.0 / 0.49).abs() < 1e-6 / 0.49);
    for g in [-1.0, 0.0, 0.4, 1.5] {
        let gauss = (-0.5 * ((g - 0.4) / 0.7f64).powi(2)).exp() / (0.7 * (2.0 * PI).sqrt());
        assert!((exact_pdf(&sp, g) - gauss).abs() < 1e-12);
        assert!((lap.pdf(g) - gauss).abs() < 1e-6);
    }
}

#[test]
fn single_component_gumbel_fit_is_close() {
    // no Gumbel comes within KS 0.038 of a Gaussian, so this bound cannot hold
    let sp = ScalarisedPosterior::new(vec![0.4], vec![0.7]).unwrap();
    let mut s = sample(&sp, 100_000, &mut streams::seeded(35));
    let gumbel = fit_gumbel(&s).unwrap().params;
    s.sort_by(f64::total_cmp);
    let ks = ks_distance(&s, |g| gumbel.cdf(g));
    assert!(ks < 0.03, "Gumbel fit KS vs single Gaussian = {ks}");
}

#[test]
fn three_components_report_gumbel_distance() {
    let sp = ScalarisedPosterior::new(vec![0.0; 3], vec![1.0; 3]).unwrap();
    let r = gaussianity_report(&sp, 10_000, &mut streams::seeded(36)).unwrap();
    assert!(r.ks_gumbel.is_finite() && r.ks_gumbel >= 0.0);
    assert!(r.skewness > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gumbel_fit_never_loses_likelihood(seed in any::<u64>(), m in 1usize..5, count in 50usize..2000) {
        let mut rng = streams::seeded(seed);
        let sp = random_posterior(&mut rng, m);
        let s = sample(&sp, count, &mut rng);
        let fit = fit_gumbel(&s).unwrap();
        prop_assert!(fit.iterations < GUMBEL_MAX_ITER);
        prop_assert!(fit.params.log_likelihood(&s) >= fit.initial.log_likelihood(&s) - 1e-9 * count as f64);
    }

    #[test]
    fn laplace_residual_is_small(seed in any::<u64>(), m in 1usize..6) {
        let sp = random_posterior(&mut streams::seeded(seed), m);
        let fit = laplace_fit(&sp).unwrap();
        prop_assert!(exact_log_pdf_derivative(&sp, fit.mode).abs() < 1e-8);
        prop_assert!(fit.precision > 0.0);
    }

    #[test]
    fn cdf_is_monotone(seed in any::<u64>(), m in 1usize..6) {
        let sp = random_posterior(&mut streams::seeded(seed), m);
        let (lo, hi) = sp.support(8.0);
        let mut prev = 0.0;
        for k in 0..=400 {
            let c = exact_cdf(&sp, lo + (hi - lo) * k as f64 / 400.0);
            prop_assert!(c >= prev && c <= 1.0);
            prev = c;
        }
    }
}
