mod common;

use feedback_stmd::eval::{match_detections, roc_sweep, stimulus_response, EvalOptions, ResponseMetric};
use feedback_stmd::pipeline::{
    detect, lateral_inhibit, local_maxima, retina_step, Detector, DetectorBank,
};
use feedback_stmd::synth::{BackgroundSource, GroundTruthEntry, Sequence, SynthConfig};
use feedback_stmd::{Frame, ModelParams};

fn unit_gain() -> ModelParams {
    ModelParams {
        input_gain: 1.0,
        ..ModelParams::default()
    }
}

#[test]
fn retina_keeps_constants_and_dips() {
    let k = unit_gain().kernels().unwrap();
    let out = retina_step(&Frame::filled(12, 9, 0.5), &k).unwrap();
    assert!(out.as_slice().iter().all(|v| (v - 0.5).abs() < 1e-15));

    let mut f = Frame::filled(15, 15, 1.0);
    f.set(6, 8, 0.0);
    let out = retina_step(&f, &k).unwrap().map(|v| -v);
    let (x, y, _) = out.argmax();
    assert_eq!((x, y), (6, 8));
}

#[test]
fn lamina_is_biphasic_for_a_passing_dark_target() {
    // 20 ms of darkness, as a 5 px target at 250 px/s casts on one pixel
    let mut det = Detector::new(unit_gain()).unwrap();
    let mut trace = Vec::new();
    for t in 0..400 {
        let dark = (200..220).contains(&t);
        let f = Frame::filled(20, 20, if dark { 0.0 } else { 1.0 });
        trace.push(det.process_frame(&f).unwrap().l.get(5, 5));
    }
    assert!(trace[199].abs() < 1e-6);
    let after = &trace[200..];
    let (i_min, v_min) = after
        .iter()
        .enumerate()
        .fold((0, f64::MAX), |a, (i, &v)| if v < a.1 { (i, v) } else { a });
    let (i_max, v_max) = after
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |a, (i, &v)| if v > a.1 { (i, v) } else { a });
    assert!(v_min < 0.0 && v_max > 0.0);
    assert!(i_min < i_max, "negative lobe must come first");
    assert!(after[150..].iter().all(|v| v.abs() < 1e-6));
}

#[test]
fn compact_blobs_beat_wide_ones() {
    let k = ModelParams::default().kernels().unwrap();
    let blob = |w: usize, h: usize| {
        Frame::from_fn(60, 30, |x, y| {
            let inside = x.abs_diff(30) <= w / 2 && y.abs_diff(15) <= h / 2;
            if inside {
                1.0
            } else {
                0.0
            }
        })
    };
    let small = lateral_inhibit(&blob(3, 3), &k).unwrap().get(30, 15);
    let wide = lateral_inhibit(&blob(30, 3), &k).unwrap().get(30, 15);
    assert!(small > 0.0);
    assert!(small > wide, "{small} vs {wide}");
}

#[test]
fn inhibition_of_an_impulse_is_the_kernel() {
    let k = ModelParams::default().kernels().unwrap();
    let mut d = Frame::zeros(25, 25);
    d.set(12, 12, 1.0);
    let q = lateral_inhibit(&d, &k).unwrap();
    let w = &k.inhibition;
    for dy in -9isize..=9 {
        for dx in -9isize..=9 {
            let got = q.get((12 + dx) as usize, (12 + dy) as usize);
            let g = w.profile(dx as f64, dy as f64);
            let want = if g > 0.0 { w.params.a * g } else { w.params.b * g };
            assert!((got - want).abs() < 1e-12, "offset ({dx},{dy})");
        }
    }
    assert_eq!(lateral_inhibit(&Frame::zeros(25, 25), &k).unwrap().max_abs(), 0.0);
}

#[test]
fn detection_examples() {
    assert!(detect(&Frame::zeros(50, 30), 0, 0.0, 5).is_empty());
    let bump = Frame::from_fn(80, 40, |x, y| {
        let d2 = (x as f64 - 40.0).powi(2) + (y as f64 - 20.0).powi(2);
        0.8 * (-d2 / 18.0).exp()
    });
    let d = detect(&bump, 3, 0.5, 5);
    assert_eq!(d.len(), 1);
    assert_eq!((d[0].x, d[0].y, d[0].frame_index), (40, 20, 3));
    assert!(detect(&bump, 3, 0.81, 5).is_empty());
}

fn small_sequence() -> SynthConfig {
    let mut cfg = SynthConfig::default();
    cfg.width = 200;
    cfg.height = 90;
    cfg.duration_frames = 400;
    cfg.target.start_x = 20.0;
    cfg
}

#[test]
fn row_band_runs_match_full_frames() {
    let cfg = small_sequence();
    let seq = Sequence::new(cfg.clone()).unwrap();
    let heads = [ModelParams::default(), ModelParams::default().without_feedback()];
    let mut full = DetectorBank::new(&heads).unwrap();
    let mut band = DetectorBank::new(&heads).unwrap();
    let reach = full.kernels().spatial_reach();
    let row = cfg.target_row() + 2;
    let (y0, y1) = (row - reach, row + reach + 1);
    for t in 0..150 {
        let a = full.process_frame(&seq.frame(t)).unwrap();
        let b = band.process_frame(&seq.frame_rows(t, y0, y1)).unwrap();
        for (qa, qb) in a.iter().zip(&b) {
            assert_eq!(qa.row(row), qb.row(row - y0), "frame {t}");
        }
    }
}

#[test]
fn response_metrics_read_the_right_rows() {
    let mut cfg = SynthConfig::tuning_base();
    cfg.duration_frames = 400;
    let p = ModelParams::default();
    let opts = EvalOptions {
        response: ResponseMetric::BandPeak { half_height: 0 },
        ..EvalOptions::default()
    };
    let peak = stimulus_response(&cfg, std::slice::from_ref(&p), &opts).unwrap()[0];
    let pixel = stimulus_response(
        &cfg,
        std::slice::from_ref(&p),
        &EvalOptions {
            response: ResponseMetric::GroundTruthPixel,
            ..opts.clone()
        },
    )
    .unwrap()[0];
    assert!(peak > 0.0);
    assert!(peak >= pixel);
}

#[test]
fn single_threshold_roc_equals_direct_scoring() {
    let cfg = small_sequence();
    let seq = Sequence::new(cfg).unwrap();
    let mut det = Detector::new(ModelParams::default()).unwrap();
    let lambda = 5.0;
    let mut maps = Vec::new();
    let mut per_frame = Vec::new();
    for t in 0..seq.len() {
        let r = det.process_frame(&seq.frame(t)).unwrap();
        if t < 200 {
            continue;
        }
        per_frame.push((t, detect(&r.q, t, lambda, 5)));
        maps.push((t, r.q));
    }
    let gt = seq.ground_truth_all();
    let direct = match_detections(&per_frame, &gt, 5.0);
    let roc = roc_sweep(maps.iter().map(|(t, q)| (*t, q)), &gt, &[lambda], 5, 5.0).unwrap();
    assert_eq!(roc.len(), 1);
    assert_eq!(roc[0].d_r, direct.true_positives as f64 / direct.actual_targets as f64);
    assert_eq!(roc[0].f_a, direct.false_positives as f64 / direct.n_images as f64);
}

#[test]
fn strongest_response_trails_the_target() {
    // The correlator fires once the delayed leading edge meets the trailing
    // edge, so the peak sits on the target row a few pixels behind centre.
    let mut cfg = SynthConfig::tuning_base();
    cfg.duration_frames = 800;
    let seq = Sequence::new(cfg).unwrap();
    let mut det = Detector::new(ModelParams::default()).unwrap();
    let (mut n, mut on_track) = (0, 0);
    for t in 0..seq.len() {
        let r = det.process_frame(&seq.frame(t)).unwrap();
        if t < 200 {
            continue;
        }
        let g = seq.ground_truth(t).unwrap();
        let (x, y, _) = r.q.argmax();
        let behind = g.cx - x as f64;
        n += 1;
        if (y as f64 - g.cy).abs() <= 2.0 && (0.0..=12.0).contains(&behind) {
            on_track += 1;
        }
    }
    assert!(on_track as f64 >= 0.95 * n as f64, "{on_track}/{n}");
}

#[test]
fn feedback_suppresses_slow_background_responses() {
    let mut cfg = SynthConfig::default();
    cfg.duration_frames = 600;
    let seq = Sequence::new(cfg).unwrap();
    let heads = [ModelParams::default(), ModelParams::default().without_feedback()];
    let mut bank = DetectorBank::new(&heads).unwrap();
    let (mut with_fb, mut without, mut n) = (0.0, 0.0, 0usize);
    for t in 0..seq.len() {
        let qs = bank.process_frame(&seq.frame(t)).unwrap();
        if t < 200 {
            continue;
        }
        let g = seq.ground_truth(t).unwrap();
        let mut maxima = local_maxima(&qs[1], 5, 0.0);
        // drop the target and its trailing response
        maxima.retain(|&(x, y, _)| {
            (x as f64 - g.cx).abs() > 20.0 || (y as f64 - g.cy).abs() > 10.0
        });
        maxima.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap());
        for &(x, y, v) in maxima.iter().take(10) {
            without += v;
            with_fb += qs[0].get(x, y);
            n += 1;
        }
    }
    assert!(n > 0);
    assert!(with_fb / (n as f64) < without / (n as f64));
}

#[test]
fn image_backgrounds_load_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bg.pgm");
    let bg = Frame::from_fn(64, 40, |x, y| ((x * 3 + y * 5) % 256) as f64 / 255.0);
    feedback_stmd::io::write_frame_pgm(&path, &bg).unwrap();
    let mut cfg = SynthConfig::default();
    cfg.width = 64;
    cfg.height = 40;
    cfg.duration_frames = 3;
    cfg.target.start_x = 5.0;
    cfg.background.velocity_px_s = 0.0;
    cfg.background.source = BackgroundSource::Image { path: path.clone() };
    let seq = Sequence::new(cfg).unwrap();
    let f = seq.frame(0);
    // away from the target the frame is the image itself
    assert_eq!(f.get(50, 2), bg.get(50, 2));

    cfg_missing_image_is_an_error(&path.with_file_name("missing.png"));
}

fn cfg_missing_image_is_an_error(path: &std::path::Path) {
    let mut cfg = SynthConfig::default();
    cfg.background.source = BackgroundSource::Image {
        path: path.to_path_buf(),
    };
    assert!(Sequence::new(cfg).is_err());
}

#[test]
fn ground_truth_is_the_rectangle_centre() {
    let mut cfg = SynthConfig::default();
    cfg.background.source = BackgroundSource::Uniform { level: 255.0 };
    cfg.background.velocity_px_s = 0.0;
    cfg.target.velocity_px_s = 0.0;
    cfg.duration_frames = 1;
    let seq = Sequence::new(cfg).unwrap();
    let f = seq.frame(0);
    let g: GroundTruthEntry = seq.ground_truth(0).unwrap();
    // the dark pixels' centroid is the ground truth
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0.0);
    for y in 0..f.height() {
        for x in 0..f.width() {
            if f.get(x, y) < 0.5 {
                sx += x as f64;
                sy += y as f64;
                n += 1.0;
            }
        }
    }
    assert_eq!(n, 25.0);
    assert_eq!((sx / n, sy / n), (g.cx, g.cy));
}
