mod common;

use common::*;
use feedback_stmd::kernels::{conv2_same, gamma_kernel, gaussian_kernel_2d, TemporalHistory};
use feedback_stmd::pipeline::{neighbor_sum, retina_step, Detector, FeedbackLoop};
use feedback_stmd::{Frame, ModelParams};

const TOL: f64 = 1e-9;

fn check_stream(stream: &[Frame], p: &ModelParams) {
    let want = oracle_run(stream, p);
    // the comparison is only meaningful if the loop actually engaged
    assert!(want.iter().any(|o| o.d.max_abs() > 0.0));
    assert!(p.alpha == 0.0 || want.iter().any(|o| o.f.max_abs() > 0.0));
    let mut det = Detector::new(p.clone()).unwrap();
    for (t, (frame, o)) in stream.iter().zip(&want).enumerate() {
        let r = det.process_frame(frame).unwrap();
        for (name, got, exp) in [
            ("P", &r.p, &o.p),
            ("L", &r.l, &o.l),
            ("Tm3", &r.tm3, &o.tm3),
            ("Tm1", &r.tm1, &o.tm1),
            ("F", &r.f, &o.f),
            ("D", &r.d, &o.d),
            ("E", &r.e, &o.e),
            ("Q", &r.q, &o.q),
        ] {
            let err = rel_err(got, exp);
            assert!(err <= TOL, "{name} at frame {t}: relative error {err:e}");
        }
    }
}

#[test]
fn every_stage_matches_direct_evaluation_on_noise() {
    check_stream(&random_stream(32, 32, 64, 11), &ModelParams::default());
}

#[test]
fn every_stage_matches_direct_evaluation_on_moving_blobs() {
    check_stream(&drifting_stream(32, 32, 64, 5), &ModelParams::default());
}

#[test]
fn every_stage_matches_direct_evaluation_off_default() {
    let p = ModelParams {
        alpha: 0.3,
        n4: 4,
        tau4: 6.0,
        tau3: 10.0,
        rho: 1e-3,
        a: 2.0,
        input_gain: 1.0,
        ..ModelParams::default()
    };
    check_stream(&drifting_stream(32, 24, 64, 9), &p);
}

#[test]
fn retina_on_checkerboard() {
    let p = ModelParams {
        input_gain: 1.0,
        ..ModelParams::default()
    };
    let board = Frame::from_fn(32, 32, |x, y| ((x / 8 + y / 8) % 2) as f64);
    let got = retina_step(&board, &p.kernels().unwrap()).unwrap();
    assert!(rel_err(&got, &conv_dense(&board, &gaussian_dense(1.0))) <= TOL);
}

#[test]
fn neighbor_pooling_on_random_inputs() {
    let k = ModelParams::default().kernels().unwrap();
    let s = random_stream(16, 16, 2, 3);
    let got = neighbor_sum(&s[0], &s[1], &k).unwrap();
    let product = Frame::from_fn(16, 16, |x, y| s[0].get(x, y) * s[1].get(x, y));
    assert!(rel_err(&got, &conv_dense(&product, &gaussian_dense(1.5))) <= TOL);
}

#[test]
fn impulse_through_gaussian_reproduces_weights() {
    let mut f = Frame::zeros(15, 15);
    f.set(7, 7, 1.0);
    let out = conv2_same(&f, &gaussian_kernel_2d(1.0, Some(3)).unwrap()).unwrap();
    let oracle = gaussian_dense(1.0);
    for dy in -3i64..=3 {
        for dx in -3i64..=3 {
            let w = oracle.w[((dy + 3) * 7 + dx + 3) as usize];
            let v = out.get((7 + dx) as usize, (7 + dy) as usize);
            assert!((v - w).abs() < 1e-15);
        }
    }
}

#[test]
fn temporal_impulse_returns_tap() {
    let taps = gamma_taps(9, 45.0, 1.0, 1e-3);
    let k = gamma_kernel(9, 45.0, 1.0, 1e-3).unwrap();
    assert_eq!(k.len(), taps.len());
    for lag in [0usize, 1, 20, 45, 100] {
        let mut h = TemporalHistory::new(k.len());
        let mut impulse = Frame::zeros(3, 3);
        impulse.set(1, 1, 1.0);
        h.push(impulse).unwrap();
        for _ in 0..lag {
            h.push(Frame::zeros(3, 3)).unwrap();
        }
        let out = feedback_stmd::kernels::temporal_apply(&h, &k).unwrap();
        assert!((out.get(1, 1) - taps[lag]).abs() < 1e-12);
        assert_eq!(out.get(0, 0), 0.0);
    }
}

#[test]
fn lamina_trace_equals_bandpass_taps() {
    let p = ModelParams {
        input_gain: 1.0,
        ..ModelParams::default()
    };
    let taps = bandpass_taps(&p);
    let mut det = Detector::new(p).unwrap();
    // a temporal impulse on a whole frame: blur leaves it uniform
    let mut trace = Vec::new();
    for t in 0..taps.len() + 5 {
        let f = Frame::filled(20, 20, if t == 0 { 1.0 } else { 0.0 });
        trace.push(det.process_frame(&f).unwrap().l.get(10, 10));
    }
    for (k, &tap) in taps.iter().enumerate() {
        assert!((trace[k] - tap).abs() < 1e-12, "lag {k}");
    }
    assert!(trace[taps.len()..].iter().all(|v| v.abs() < 1e-15));
}

#[test]
fn medulla_delays_off_channel() {
    let p = ModelParams::default();
    let k = p.kernels().unwrap();
    let taps = gamma_taps(p.n3, p.tau3, 1.0, p.tail_eps);
    let mut off = TemporalHistory::new(k.off_delay.len());
    let mut trace = Vec::new();
    for t in 0..taps.len() {
        let l = Frame::filled(3, 3, if t == 0 { -0.2 } else { 0.0 });
        let (tm3, tm1) = feedback_stmd::pipeline::medulla_step(&l, &mut off, &k).unwrap();
        assert_eq!(tm3.max_abs(), 0.0);
        trace.push(tm1.get(1, 1));
    }
    for (v, t) in trace.iter().zip(&taps) {
        assert!((v - 0.2 * t).abs() < 1e-15);
    }
    let peak = trace
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    assert_eq!(peak, 45);
}

#[test]
fn feedback_trace_follows_delay_kernel() {
    let p = ModelParams {
        alpha: 0.7,
        ..ModelParams::default()
    };
    let k = p.kernels().unwrap();
    let taps = gamma_taps(p.n4, p.tau4, 1.0, p.tail_eps);
    let mut fb = FeedbackLoop::from_params(&p, &k);
    let zero = Frame::zeros(2, 2);
    let mut trace = vec![fb.signal(2, 2).unwrap().get(0, 0)];
    fb.record(&Frame::filled(2, 2, 1.0), &zero).unwrap();
    for _ in 1..taps.len() {
        trace.push(fb.signal(2, 2).unwrap().get(0, 0));
        fb.record(&zero, &zero).unwrap();
    }
    assert_eq!(trace[0], 0.0);
    for lag in 1..taps.len() {
        assert!((trace[lag] - 0.7 * taps[lag]).abs() < 1e-15, "lag {lag}");
    }
    let peak = (1..taps.len())
        .max_by(|&a, &b| trace[a].partial_cmp(&trace[b]).unwrap())
        .unwrap();
    assert_eq!(peak, 25);
}
