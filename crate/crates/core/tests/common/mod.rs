//! Direct, unoptimized evaluations of the model used as test oracles.
//! Nothing here calls into the crate's kernel constructors.
#![allow(dead_code)]

use feedback_stmd::{Frame, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_stream(width: usize, height: usize, frames: usize, seed: u64) -> Vec<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..frames)
        .map(|_| Frame::from_fn(width, height, |_, _| rng.gen::<f64>()))
        .collect()
}

/// A random stream with some temporal coherence, so the correlator has
/// something to latch onto: a few bright blobs drifting over noise.
pub fn drifting_stream(width: usize, height: usize, frames: usize, seed: u64) -> Vec<Frame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blobs: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            (
                rng.gen_range(0.0..width as f64),
                rng.gen_range(0.0..height as f64),
                rng.gen_range(-0.6..0.6),
                rng.gen_range(-0.3..0.3),
            )
        })
        .collect();
    (0..frames)
        .map(|t| {
            Frame::from_fn(width, height, |x, y| {
                let mut v = 0.8 + 0.1 * rng.gen::<f64>();
                for &(bx, by, vx, vy) in &blobs {
                    let cx = bx + vx * t as f64;
                    let cy = by + vy * t as f64;
                    let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                    v -= 0.7 * (-d2 / 4.0).exp();
                }
                v.clamp(0.0, 1.0)
            })
        })
        .collect()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

pub fn gamma_pdf(n: u32, tau: f64, t: f64) -> f64 {
    let n_f = n as f64;
    (n_f * t).powi(n as i32) * (-n_f * t / tau).exp() / (factorial(n - 1) * tau.powi(n as i32 + 1))
}

/// Continuous mass beyond `t`.
pub fn gamma_tail(n: u32, tau: f64, t: f64) -> f64 {
    let x = n as f64 * t / tau;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1..=n {
        term *= x / j as f64;
        sum += term;
    }
    (-x).exp() * sum
}

pub fn gamma_taps(n: u32, tau: f64, dt: f64, eps: f64) -> Vec<f64> {
    let mut k = 0usize;
    while gamma_tail(n, tau, k as f64 * dt) >= eps {
        k += 1;
    }
    let raw: Vec<f64> = (0..=k).map(|i| gamma_pdf(n, tau, i as f64 * dt)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

pub fn bandpass_taps(p: &ModelParams) -> Vec<f64> {
    let dt = 1000.0 / p.fps;
    let a = gamma_taps(p.n1, p.tau1, dt, p.tail_eps);
    let b = gamma_taps(p.n2, p.tau2, dt, p.tail_eps);
    (0..a.len().max(b.len()))
        .map(|i| a.get(i).copied().unwrap_or(0.0) - b.get(i).copied().unwrap_or(0.0))
        .collect()
}

/// Dense square kernel, row-major, side `2r+1`.
pub struct Dense {
    pub radius: usize,
    pub w: Vec<f64>,
}

pub fn gaussian_dense(sigma: f64) -> Dense {
    let r = (3.0 * sigma).ceil() as usize;
    let ri = r as i64;
    let mut w = Vec::new();
    for dy in -ri..=ri {
        for dx in -ri..=ri {
            w.push((-((dx * dx + dy * dy) as f64) / (2.0 * sigma * sigma)).exp());
        }
    }
    let s: f64 = w.iter().sum();
    Dense {
        radius: r,
        w: w.into_iter().map(|v| v / s).collect(),
    }
}

pub fn inhibition_dense(p: &ModelParams) -> Dense {
    let g = |s: f64, r2: f64| (-r2 / (2.0 * s * s)).exp() / (2.0 * std::f64::consts::PI * s * s);
    let r = (3.0 * p.sigma3).ceil() as usize;
    let ri = r as i64;
    let mut w = Vec::new();
    for dy in -ri..=ri {
        for dx in -ri..=ri {
            let r2 = (dx * dx + dy * dy) as f64;
            let v = g(p.sigma2, r2) - p.e * g(p.sigma3, r2) - p.rho;
            w.push(p.a * v.max(0.0) + p.b * v.min(0.0));
        }
    }
    Dense { radius: r, w }
}

/// Correlation with replicate-edge padding, one output pixel at a time.
pub fn conv_dense(f: &Frame, k: &Dense) -> Frame {
    let (w, h) = f.dims();
    let r = k.radius as i64;
    let side = 2 * k.radius + 1;
    Frame::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                let sx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
                let sy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
                acc += k.w[(dy + r) as usize * side + (dx + r) as usize] * f.get(sx, sy);
            }
        }
        acc
    })
}

/// `Σ_k taps[k] · frames[t − k]`, frames before the stream start are zero.
pub fn temporal_dense(frames: &[Frame], t: usize, taps: &[f64], skip: usize) -> Frame {
    let (w, h) = frames[0].dims();
    Frame::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        for (k, &c) in taps.iter().enumerate().skip(skip) {
            if k > t {
                break;
            }
            acc += c * frames[t - k].get(x, y);
        }
        acc
    })
}

pub struct OracleMaps {
    pub p: Frame,
    pub l: Frame,
    pub tm3: Frame,
    pub tm1: Frame,
    pub f: Frame,
    pub d: Frame,
    pub e: Frame,
    pub q: Frame,
}

/// Evaluates every layer for every frame straight from the definitions,
/// keeping the whole history.
pub fn oracle_run(stream: &[Frame], p: &ModelParams) -> Vec<OracleMaps> {
    let dt = 1000.0 / p.fps;
    let retina = gaussian_dense(p.sigma1);
    let neighbor = gaussian_dense(p.eta);
    let inhibition = inhibition_dense(p);
    let band = bandpass_taps(p);
    let off_taps = gamma_taps(p.n3, p.tau3, dt, p.tail_eps);
    let fb_taps = gamma_taps(p.n4, p.tau4, dt, p.tail_eps);

    let mut ps = Vec::new();
    let mut offs = Vec::new();
    let mut fb_src = Vec::new();
    let mut out = Vec::new();
    for (t, frame) in stream.iter().enumerate() {
        let scaled = frame.map(|v| v * p.input_gain);
        ps.push(conv_dense(&scaled, &retina));
        let l = temporal_dense(&ps, t, &band, 0);
        let tm3 = l.map(|v| v.max(0.0));
        offs.push(l.map(|v| (-v).max(0.0)));
        let tm1 = temporal_dense(&offs, t, &off_taps, 0);
        let f = if t == 0 {
            Frame::zeros(frame.width(), frame.height())
        } else {
            temporal_dense(&fb_src, t, &fb_taps, 1).map(|v| p.alpha * v)
        };
        let (w, h) = frame.dims();
        let d = Frame::from_fn(w, h, |x, y| {
            (tm3.get(x, y) - f.get(x, y)).max(0.0) * (tm1.get(x, y) - f.get(x, y)).max(0.0)
        });
        let raw = Frame::from_fn(w, h, |x, y| tm3.get(x, y) * tm1.get(x, y));
        let e = conv_dense(&raw, &neighbor);
        let q = conv_dense(&d, &inhibition);
        fb_src.push(Frame::from_fn(w, h, |x, y| d.get(x, y) + e.get(x, y)));
        out.push(OracleMaps {
            p: ps[t].clone(),
            l,
            tm3,
            tm1,
            f,
            d,
            e,
            q,
        });
    }
    out
}

/// Largest elementwise difference relative to the reference map's scale.
pub fn rel_err(got: &Frame, want: &Frame) -> f64 {
    let scale = want.max_abs().max(got.max_abs());
    if scale == 0.0 {
        return 0.0;
    }
    got.max_abs_diff(want) / scale
}
