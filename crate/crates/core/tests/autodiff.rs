mod common;

use common::{model_check, operator_checks, project, random_tensor, rng, tiny_config, ModelCase};
use ddnet::autodiff::{finite_diff_check, Graph, Tensor};
use ddnet::model::DdNet;

#[test]
fn operator_gradients_match_central_differences() {
    for seed in 0..5 {
        for c in operator_checks(seed) {
            assert!(c.error < c.limit, "{} seed {seed}: {:.3e} >= {:.0e}", c.name, c.error, c.limit);
        }
    }
}

#[test]
fn training_pass_gradients_match_central_differences() {
    for seed in 0..3 {
        let err = model_check(seed, true);
        assert!(err < common::LIMIT_TRAIN_NORM, "seed {seed}: {err:.3e}");
    }
}

/// With running statistics many parameters barely move the loss, and their
/// gradients (around 1e-7) fall below what central differences resolve. Each
/// coordinate must agree to 1e-4 relative, plus an absolute allowance of 8 ulp
/// of the loss divided by the step.
#[test]
fn inference_pass_gradients_match_central_differences() {
    let eps = common::MODEL_EPS;
    for seed in 0..3 {
        let case = ModelCase::new(seed, false);
        let point = case.point();
        let mut g = Graph::new();
        let vars: Vec<_> = point.iter().map(|t| g.param(t.clone())).collect();
        let loss = case.loss(&mut g, &vars).unwrap();
        let value = g.value(loss).item();
        let grads = g.backward(loss).unwrap();
        let eval = |p: &[Tensor<f64>]| {
            let mut g = Graph::new();
            let vars: Vec<_> = p.iter().map(|t| g.constant(t.clone())).collect();
            let loss = case.loss(&mut g, &vars).unwrap();
            g.value(loss).item()
        };
        let floor = 8.0 * f64::EPSILON * value.abs() / eps;
        let mut work = point.clone();
        let mut worst = 0.0f64;
        for (i, &v) in vars.iter().enumerate() {
            let analytic = grads.get(v).unwrap().data().to_vec();
            for j in 0..point[i].len() {
                let x = point[i].data()[j];
                work[i].data_mut()[j] = x + eps;
                let plus = eval(&work);
                work[i].data_mut()[j] = x - eps;
                let minus = eval(&work);
                work[i].data_mut()[j] = x;
                let numeric = (plus - minus) / (2.0 * eps);
                let allowed = 1e-4 * analytic[j].abs().max(numeric.abs()) + floor;
                worst = worst.max((analytic[j] - numeric).abs() / allowed);
            }
        }
        assert!(worst <= 1.0, "seed {seed}: error is {worst:.2}x the allowance");
    }
}

#[test]
fn pointwise_conv_equals_dense() {
    let mut r = rng(1);
    let x = random_tensor(&mut r, &[2, 5, 3]);
    let w = random_tensor(&mut r, &[1, 3, 4]);
    let b = random_tensor(&mut r, &[4]);
    let mut g = Graph::new();
    let (xv, wv, bv) = (g.constant(x.clone()), g.constant(w.clone()), g.constant(b.clone()));
    let conv = g.conv1d(xv, wv, Some(bv)).unwrap();

    let flat = g.constant(x.reshape(vec![10, 3]).unwrap());
    let w2 = g.constant(w.reshape(vec![3, 4]).unwrap());
    let dense = g.dense(flat, w2, bv).unwrap();
    for (a, b) in g.value(conv).data().iter().zip(g.value(dense).data()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn conv_matches_direct_sum() {
    let mut r = rng(2);
    let (batch, time, c_in, c_out) = (2, 6, 3, 2);
    let x = random_tensor(&mut r, &[batch, time, c_in]);
    let w = random_tensor(&mut r, &[3, c_in, c_out]);
    let mut g = Graph::new();
    let (xv, wv) = (g.constant(x.clone()), g.constant(w.clone()));
    let y = g.conv1d(xv, wv, None).unwrap();
    let y = g.value(y);
    for b in 0..batch {
        for t in 0..time {
            for o in 0..c_out {
                let mut want = 0.0;
                for k in 0..3 {
                    let src = t as isize + k as isize - 1;
                    if (0..time as isize).contains(&src) {
                        for i in 0..c_in {
                            want += x.data()[(b * time + src as usize) * c_in + i] * w.data()[(k * c_in + i) * c_out + o];
                        }
                    }
                }
                assert!((y.data()[(b * time + t) * c_out + o] - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn maxpool_and_average_values() {
    let x = Tensor::new(vec![1, 5, 1], vec![1.0, 3.0, -2.0, -4.0, 9.0]).unwrap();
    let mut g = Graph::<f64>::new();
    let v = g.constant(x);
    let p = g.maxpool1d(v).unwrap();
    assert_eq!(g.value(p).shape(), &[1, 2, 1]);
    assert_eq!(g.value(p).data(), &[3.0, -2.0]);
    let a = g.global_avg_pool(v).unwrap();
    assert_eq!(g.value(a).shape(), &[1, 1]);
    assert!((g.value(a).data()[0] - 1.4).abs() < 1e-12);
}

#[test]
fn uniform_logits_give_log_class_count() {
    let mut g = Graph::<f64>::new();
    let logits = g.constant(Tensor::zeros(&[3, 14]));
    let loss = g.softmax_cross_entropy(logits, &[0, 5, 13]).unwrap();
    assert!((g.value(loss).item() - 14f64.ln()).abs() < 1e-12);

    let confident = g.constant(Tensor::new(vec![1, 2], vec![10.0, -10.0]).unwrap());
    let loss = g.softmax_cross_entropy(confident, &[0]).unwrap();
    assert!(g.value(loss).item() < 1e-4);
}

#[test]
fn cross_entropy_rejects_bad_labels() {
    let mut g = Graph::<f64>::new();
    let logits = g.constant(Tensor::zeros(&[2, 3]));
    assert!(g.softmax_cross_entropy(logits, &[0, 3]).is_err());
    assert!(g.softmax_cross_entropy(logits, &[0]).is_err());
}

#[test]
fn fan_out_accumulates_gradients() {
    // d/dx sum(x * x) = 2x, with x reaching the product twice.
    let x = Tensor::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap();
    let mut g = Graph::<f64>::new();
    let v = g.param(x.clone());
    let sq = g.mul(v, v).unwrap();
    let loss = g.sum(sq);
    let grads = g.backward(loss).unwrap();
    assert_eq!(grads.get(v).unwrap().data(), &[2.0, -4.0, 1.0]);
}

#[test]
fn constants_receive_no_gradient() {
    let mut g = Graph::<f64>::new();
    let c = g.constant(Tensor::full(&[2], 3.0));
    let p = g.param(Tensor::full(&[2], 2.0));
    let y = g.mul(c, p).unwrap();
    let loss = g.sum(y);
    let grads = g.backward(loss).unwrap();
    assert!(grads.get(c).is_none());
    assert_eq!(grads.get(p).unwrap().data(), &[3.0, 3.0]);
}

#[test]
fn backward_is_repeatable_and_tapes_are_independent() {
    let run = |seed| {
        let mut r = rng(seed);
        let mut g = Graph::<f64>::new();
        let x = g.param(random_tensor(&mut r, &[2, 4, 3]));
        let w = g.param(random_tensor(&mut r, &[3, 3, 2]));
        let y = g.conv1d(x, w, None).unwrap();
        let loss = project(&mut g, y, seed).unwrap();
        let grads = g.backward(loss).unwrap();
        let again = g.backward(loss).unwrap();
        assert_eq!(grads.get(w).unwrap().data(), again.get(w).unwrap().data());
        grads.get(w).unwrap().data().to_vec()
    };
    let a = run(4);
    let _ = run(5);
    assert_eq!(a, run(4));
}

#[test]
fn dropout_is_seeded_and_scaled() {
    let mut g = Graph::<f64>::new();
    let x = g.constant(Tensor::full(&[1000], 1.0));
    let a = g.dropout(x, 0.5, 9).unwrap();
    let b = g.dropout(x, 0.5, 9).unwrap();
    assert_eq!(g.value(a).data(), g.value(b).data());
    let kept = g.value(a).data().iter().filter(|&&v| v != 0.0).count();
    assert!(g.value(a).data().iter().all(|&v| v == 0.0 || v == 2.0));
    assert!((400..600).contains(&kept), "{kept}");
    let none = g.dropout(x, 0.0, 9).unwrap();
    assert_eq!(g.value(none).data(), g.value(x).data());
}

#[test]
fn finite_difference_check_catches_a_wrong_gradient() {
    // leaky_relu with slope 0 evaluated at a kink-free point has exact
    // gradients; perturbing the function between passes must be detected.
    let x = Tensor::new(vec![2], vec![0.5, -0.5]).unwrap();
    let report = finite_diff_check(
        |g, v| {
            let y = g.leaky_relu(v[0], 0.0);
            Ok(g.sum(y))
        },
        &[x.clone()],
        1e-4,
    )
    .unwrap();
    assert!(report.max_rel_error() < 1e-8);
    assert_eq!(report.coordinates, 2);

    let calls = std::cell::Cell::new(0);
    let report = finite_diff_check(
        |g, v| {
            calls.set(calls.get() + 1);
            let k = g.constant(Tensor::full(&[2], if calls.get() == 1 { 1.0 } else { 3.0 }));
            let y = g.mul(v[0], k)?;
            Ok(g.sum(y))
        },
        &[x],
        1e-4,
    )
    .unwrap();
    assert!(report.max_rel_error() > 0.5);
}

#[test]
fn every_model_parameter_gets_a_finite_gradient() {
    let cfg = tiny_config();
    let mut model = DdNet::new(cfg.clone(), 3).unwrap();
    let inputs = common::random_inputs(&cfg, 4, 3).cast::<f32>();
    let mut g = Graph::new();
    let bound = model.bind(&mut g, true);
    let out = model.forward(&mut g, &bound, &inputs, ddnet::model::Mode::Train { dropout_seed: 1 }).unwrap();
    let loss = g.softmax_cross_entropy(out.logits, &[0, 1, 2, 0]).unwrap();
    let grads = g.backward(loss).unwrap();
    let mut nonzero = 0;
    for (&v, (name, p)) in bound.vars().iter().zip(model.params()) {
        let grad = grads.get(v).unwrap_or_else(|| panic!("no gradient for {name}"));
        assert_eq!(grad.shape(), p.shape(), "{name}");
        assert!(grad.data().iter().all(|x| x.is_finite()), "{name}");
        nonzero += grad.data().iter().any(|&x| x != 0.0) as usize;
    }
    assert!(nonzero > model.params().len() / 2);
}
