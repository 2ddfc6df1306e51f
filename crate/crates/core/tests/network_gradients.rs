use modhtan_core::network::{backward, forward, jacobian, nguyen_widrow_init, MlpModel};
use modhtan_core::{ActivationKind, EluParams};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn samples(n: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, 2, |_, _| rng.gen_range(-1.0..1.0));
    let t = DMatrix::from_fn(n, 1, |_, _| rng.gen_range(-1.0..1.0));
    (x, t)
}

fn half_mse(model: &MlpModel, x: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
    let (y, _) = forward(model, x).unwrap();
    (y - t).norm_squared() / (2.0 * x.nrows() as f64)
}

fn central_differences(model: &MlpModel, x: &DMatrix<f64>, t: &DMatrix<f64>, h: f64) -> DVector<f64> {
    let theta = model.params();
    DVector::from_fn(theta.len(), |k, _| {
        let mut plus = theta.clone();
        plus[k] += h;
        let mut minus = theta.clone();
        minus[k] -= h;
        (half_mse(&model.with_params(&plus), x, t) - half_mse(&model.with_params(&minus), x, t))
            / (2.0 * h)
    })
}

#[test]
fn backward_matches_finite_differences() {
    let kinds = [
        ActivationKind::SoftStep,
        ActivationKind::Htan,
        ActivationKind::Elu(EluParams::default()),
    ];
    for kind in kinds {
        let model = nguyen_widrow_init(2, 2, 1, kind, 17);
        let (x, t) = samples(10, 5);
        let (_, cache) = forward(&model, &x).unwrap();
        let analytic = backward(&model, &x, &t, &cache).unwrap().flatten();
        let numeric = central_differences(&model, &x, &t, 1e-6);
        for (k, (a, n)) in analytic.iter().zip(numeric.iter()).enumerate() {
            let rel = (a - n).abs() / a.abs().max(n.abs());
            assert!(rel <= 1e-5, "{kind}: param {k} analytic {a} numeric {n} rel {rel}");
        }
    }
}

#[test]
fn jacobian_transpose_residual_is_scaled_gradient() {
    for kind in [
        ActivationKind::Htan,
        ActivationKind::SoftStep,
        ActivationKind::ModHtan(Default::default()),
    ] {
        let model = nguyen_widrow_init(2, 2, 1, kind, 23);
        let (x, t) = samples(25, 6);
        let (_, cache) = forward(&model, &x).unwrap();
        let grad = backward(&model, &x, &t, &cache).unwrap().flatten();
        let (jac, e) = jacobian(&model, &x, &t, &cache).unwrap();
        let via_jac = jac.transpose() * e / x.nrows() as f64;
        for (a, b) in grad.iter().zip(via_jac.iter()) {
            assert!((a - b).abs() <= 1e-10, "{kind}: {a} vs {b}");
        }
    }
}

#[test]
fn jacobian_rows_match_residual_differences() {
    let model = nguyen_widrow_init(2, 2, 1, ActivationKind::Htan, 29);
    let (x, t) = samples(4, 7);
    let (_, cache) = forward(&model, &x).unwrap();
    let (jac, _) = jacobian(&model, &x, &t, &cache).unwrap();
    let theta = model.params();
    let h = 1e-6;
    for k in 0..theta.len() {
        let mut plus = theta.clone();
        plus[k] += h;
        let mut minus = theta.clone();
        minus[k] -= h;
        let (yp, _) = forward(&model.with_params(&plus), &x).unwrap();
        let (ym, _) = forward(&model.with_params(&minus), &x).unwrap();
        for s in 0..x.nrows() {
            let fd = (yp[(s, 0)] - ym[(s, 0)]) / (2.0 * h);
            assert!((fd - jac[(s, k)]).abs() <= 1e-8, "row {s} col {k}: {fd} vs {}", jac[(s, k)]);
        }
    }
}

#[test]
fn multi_output_shapes() {
    let model = nguyen_widrow_init(3, 4, 2, ActivationKind::Htan, 31);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = DMatrix::from_fn(6, 3, |_, _| rng.gen_range(-1.0..1.0));
    let t = DMatrix::from_fn(6, 2, |_, _| rng.gen_range(-1.0..1.0));
    let (y, cache) = forward(&model, &x).unwrap();
    assert_eq!(y.shape(), (6, 2));
    let g = backward(&model, &x, &t, &cache).unwrap();
    assert_eq!(g.w1.shape(), (4, 3));
    assert_eq!(g.w2.shape(), (2, 4));
    let (jac, e) = jacobian(&model, &x, &t, &cache).unwrap();
    assert_eq!(jac.shape(), (12, model.n_params()));
    let via_jac = jac.transpose() * e / 6.0;
    assert!((via_jac - g.flatten()).amax() <= 1e-12);
}
