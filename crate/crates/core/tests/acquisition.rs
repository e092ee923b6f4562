use std::f64::consts::PI;

use mobo::acquisition::*;
use mobo::gp::Prediction;
use mobo::metrics::nondominated_filter;
use mobo::scalar_dist::GumbelParams;
use mobo::streams;
use rand::Rng;
use rand_distr::StandardNormal;

fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Composite Simpson rule with an even number of panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// ∫ max(0, g′ − y) N(y; μ, σ²) dy
fn ei_quadrature(mean: f64, std: f64, incumbent: f64) -> f64 {
    let lo = mean - 12.0 * std;
    if incumbent <= lo {
        return 0.0;
    }
    simpson(
        |y| (incumbent - y) * phi((y - mean) / std) / std,
        lo,
        incumbent,
        20_000,
    )
}

/// ∫ max(0, g′ − g) Gumbel(g; α, β) dg
fn gumbel_ei_quadrature(p: &GumbelParams, incumbent: f64) -> f64 {
    // lower tail of the Gumbel dies as exp(−e^{−t}); t = −4 is already negligible
    let lo = p.location - 4.0 * p.scale;
    if incumbent <= lo {
        return 0.0;
    }
    simpson(
        |g| (incumbent - g) * p.log_pdf(g).exp(),
        lo,
        incumbent,
        200_000,
    )
}

#[test]
fn closed_form_ei_matches_quadrature_on_a_grid() {
    for &mean in &[-1.0, 0.0, 0.3, 1.2] {
        for &std in &[0.05, 0.3, 1.0, 2.5, 4.0] {
            for &inc in &[-0.5, 0.0, 0.5, 1.0, 2.0] {
                let cf = ei_closed_form(mean, std, inc);
                let q = ei_quadrature(mean, std, inc);
                assert!(
                    (cf - q).abs() < 1e-6,
                    "μ={mean} σ={std} g′={inc}: {cf} vs {q}"
                );
                assert!(cf >= 0.0);
            }
        }
    }
}

#[test]
fn closed_form_ei_is_continuous_at_zero_std() {
    for &gap in &[-0.5, 0.0, 0.7] {
        let at_zero = ei_closed_form(0.0, 0.0, gap);
        let tiny = ei_closed_form(0.0, 1e-10, gap);
        assert!((at_zero - tiny).abs() < 1e-9);
    }
}

#[test]
fn monte_carlo_gumbel_ei_matches_quadrature() {
    let mut rng = streams::seeded(41);
    for k in 0..20 {
        let p = GumbelParams::new(rng.random_range(-1.0..1.0), rng.random_range(0.2..2.0)).unwrap();
        let inc = p.location + rng.random_range(-0.5..2.0) * p.scale;
        let q = gumbel_ei_quadrature(&p, inc);
        let count = 1_000_000;
        let mc = ei_monte_carlo(
            McSource::Gumbel(p),
            inc,
            count,
            &mut streams::stream(41, "ei", k),
        );
        let rel = (mc - q).abs() / q;
        assert!(rel < 0.01, "config {k}: mc {mc} vs quadrature {q}");
        assert!(
            rel < 3.0 / (count as f64).sqrt() * (1.0 + p.scale / q),
            "config {k}: {rel}"
        );
    }
}

#[test]
fn standard_gumbel_ei_at_zero() {
    let p = GumbelParams::new(0.0, 1.0).unwrap();
    let q = gumbel_ei_quadrature(&p, 0.0);
    let mc = ei_monte_carlo(
        McSource::Gumbel(p),
        0.0,
        1_000_000,
        &mut streams::seeded(42),
    );
    assert!((mc - q).abs() < 0.01 * q, "{mc} vs {q}");
}

/// HV improvement of `y` over a single front point `p` with reference `r`
/// (2-D), by inclusion–exclusion of two boxes.
fn hvi_single(y: [f64; 2], p: [f64; 2], r: [f64; 2]) -> f64 {
    if y[0] >= r[0] || y[1] >= r[1] {
        return 0.0;
    }
    let own = (r[0] - y[0]) * (r[1] - y[1]);
    let overlap = (r[0] - y[0].max(p[0])) * (r[1] - y[1].max(p[1]));
    own - overlap
}

#[test]
fn ehvi_matches_grid_quadrature() {
    let front = vec![vec![0.5, 0.5]];
    let r = [1.0, 1.0];
    let (mu, sd) = (0.25, 0.1);
    // midpoint rule over μ ± 8σ in both axes
    let n = 1600;
    let (lo, hi) = (mu - 8.0 * sd, mu + 8.0 * sd);
    let h = (hi - lo) / n as f64;
    let mut oracle = 0.0;
    for i in 0..n {
        let y0 = lo + (i as f64 + 0.5) * h;
        let w0 = phi((y0 - mu) / sd) / sd;
        for j in 0..n {
            let y1 = lo + (j as f64 + 0.5) * h;
            let w1 = phi((y1 - mu) / sd) / sd;
            oracle += hvi_single([y0, y1], [0.5, 0.5], r) * w0 * w1;
        }
    }
    oracle *= h * h;
    let preds = [
        Prediction { mean: mu, std: sd },
        Prediction { mean: mu, std: sd },
    ];
    let mc = ehvi(&preds, &front, &r, 1_000_000, &mut streams::seeded(43)).unwrap();
    assert!((mc - oracle).abs() < 0.01 * oracle, "{mc} vs {oracle}");
}

#[test]
fn ehvi_never_grows_when_the_front_grows() {
    let mut rng = streams::seeded(44);
    let r = [1.0, 1.0];
    for _ in 0..50 {
        let pts: Vec<Vec<f64>> = (0..4)
            .map(|_| vec![rng.random_range(0.0..0.95), rng.random_range(0.0..0.95)])
            .collect();
        let front = nondominated_filter(&pts);
        let extra = vec![rng.random_range(0.0..0.95), rng.random_range(0.0..0.95)];
        let mut grown = front.clone();
        grown.push(extra);
        let grown = nondominated_filter(&grown);
        let preds = [
            Prediction {
                mean: rng.random_range(0.0..1.0),
                std: rng.random_range(0.01..0.3),
            },
            Prediction {
                mean: rng.random_range(0.0..1.0),
                std: rng.random_range(0.01..0.3),
            },
        ];
        let normals: Vec<f64> = (0..4000).map(|_| rng.sample(StandardNormal)).collect();
        let before = ehvi_with_normals(&preds, &front, &r, &normals).unwrap();
        let after = ehvi_with_normals(&preds, &grown, &r, &normals).unwrap();
        assert!(before >= 0.0 && after >= 0.0);
        assert!(after <= before + 1e-12, "{after} > {before}");
    }
}
