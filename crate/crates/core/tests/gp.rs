use mobo::gp::{self, kernel_eval, FitOptions, GpModel, Hyperparams};
use mobo::streams;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// N points uniform on [0, 1] with targets drawn from the GP prior plus noise.
fn synthetic_gp_data(seed: u64, n: usize, sf: f64, l: f64, sn: f64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut rng = streams::seeded(seed);
    let xs: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>()]).collect();
    let k = DMatrix::from_fn(n, n, |i, j| {
        let d = xs[i][0] - xs[j][0];
        sf * sf * (-0.5 * d * d / (l * l)).exp() + if i == j { 1e-10 } else { 0.0 }
    });
    let chol = k.cholesky().unwrap();
    let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let f = chol.l() * z;
    let ys = (0..n)
        .map(|i| f[i] + sn * rng.sample::<f64, _>(StandardNormal))
        .collect();
    (xs, ys)
}

#[test]
fn lengthscale_is_recovered_from_prior_samples() {
    for seed in 0..3 {
        let (xs, ys) = synthetic_gp_data(seed, 100, 1.0, 0.5, 0.01);
        let opts = FitOptions {
            seed,
            input_bounds: Some(vec![(0.0, 1.0)]),
            ..FitOptions::default()
        };
        let model = gp::fit(&xs, &ys, &opts).unwrap();
        let l = model.hyperparams().lengthscales[0];
        assert!((0.25..=1.0).contains(&l), "seed {seed}: lengthscale {l}");
    }
}

#[test]
fn more_restarts_never_lower_the_likelihood() {
    for seed in 0..10 {
        let (xs, ys) = synthetic_gp_data(100 + seed, 30, 1.0, 0.3, 0.05);
        let one = FitOptions {
            restarts: 1,
            seed,
            ..FitOptions::default()
        };
        let ten = FitOptions {
            restarts: 10,
            seed,
            ..FitOptions::default()
        };
        let a = gp::fit(&xs, &ys, &one).unwrap().log_likelihood();
        let b = gp::fit(&xs, &ys, &ten).unwrap().log_likelihood();
        assert!(b >= a, "seed {seed}: {b} < {a}");
    }
}

#[test]
fn noiseless_fit_interpolates() {
    let mut rng = streams::seeded(7);
    let xs: Vec<Vec<f64>> = (0..25)
        .map(|_| vec![rng.random::<f64>(), rng.random::<f64>()])
        .collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| (3.0 * x[0]).sin() + x[1] * x[1])
        .collect();
    let opts = FitOptions {
        fixed_noise: Some(0.0),
        input_bounds: Some(vec![(0.0, 1.0); 2]),
        ..FitOptions::default()
    };
    let model = gp::fit(&xs, &ys, &opts).unwrap();
    for (x, y) in xs.iter().zip(&ys) {
        let p = model.predict(x).unwrap();
        assert!((p.mean - y).abs() < 1e-5, "{} vs {y}", p.mean);
    }
}

#[test]
fn predictive_std_is_never_negative() {
    let mut rng = streams::seeded(8);
    for trial in 0..5 {
        let dim = 1 + trial % 3;
        let xs: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect();
        let ys: Vec<f64> = (0..20).map(|_| rng.random::<f64>()).collect();
        let hp = Hyperparams::new(
            rng.random_range(0.1..3.0),
            (0..dim).map(|_| rng.random_range(0.05..2.0)).collect(),
            rng.random_range(0.0..0.1),
        )
        .unwrap();
        let model = GpModel::condition(&xs, &ys, hp).unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..1.5)).collect();
            let p = model.predict(&x).unwrap();
            assert!(p.std >= 0.0 && p.std.is_finite());
        }
    }
}

#[test]
fn kernel_is_symmetric_on_random_pairs() {
    let mut rng = streams::seeded(9);
    for _ in 0..500 {
        let dim = rng.random_range(1..6);
        let a: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let hp = Hyperparams::new(
            rng.random_range(0.1..2.0),
            (0..dim).map(|_| rng.random_range(0.1..2.0)).collect(),
            0.1,
        )
        .unwrap();
        assert_eq!(
            kernel_eval(&a, &b, &hp, false).unwrap(),
            kernel_eval(&b, &a, &hp, false).unwrap()
        );
    }
}
