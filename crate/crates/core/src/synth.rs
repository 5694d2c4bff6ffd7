//! Synthetic benchmark sequences: a solid rectangular target crossing a
//! horizontally panning textured background, with exact ground truth.

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Result};
use crate::frame::Frame;
use crate::kernels::{conv2_same, gaussian_kernel_2d};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Leftward,
    Rightward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Leftward => -1.0,
            Direction::Rightward => 1.0,
        }
    }
}

/// Where background pixels come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BackgroundSource {
    /// Procedural cluttered texture, periodic in x, generated from `seed`.
    Texture { seed: u64 },
    /// Flat field at an 8-bit level.
    Uniform { level: f64 },
    /// Grayscale image file (PGM or PNG). Must be at least as tall as the
    /// output; any width is tiled cyclically.
    Image { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSpec {
    pub width_px: usize,
    pub height_px: usize,
    /// 8-bit luminance in `[0, 255]`.
    pub luminance: f64,
    /// Rightward speed; zero keeps the target still.
    pub velocity_px_s: f64,
    /// Left edge at frame 0, in pixel-edge coordinates.
    pub start_x: f64,
    /// Top row; `None` centres the target vertically.
    pub y_row: Option<usize>,
}

impl Default for TargetSpec {
    fn default() -> Self {
        Self {
            width_px: 5,
            height_px: 5,
            luminance: 0.0,
            velocity_px_s: 250.0,
            start_x: 60.0,
            y_row: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundSpec {
    pub velocity_px_s: f64,
    pub direction: Direction,
    pub source: BackgroundSource,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        Self {
            velocity_px_s: 150.0,
            direction: Direction::Rightward,
            source: BackgroundSource::Texture { seed: 1 },
        }
    }
}

/// Full description of one synthetic sequence.
///
/// Defaults give the reference "initial" sequence: 500×250 at 1000 fps, a
/// black 5×5 target at 250 px/s over a texture panning right at 150 px/s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    pub fps: f64,
    pub duration_frames: usize,
    pub target: TargetSpec,
    pub background: BackgroundSpec,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 500,
            height: 250,
            fps: 1000.0,
            duration_frames: 1000,
            target: TargetSpec::default(),
            background: BackgroundSpec::default(),
            seed: 1,
        }
    }
}

impl SynthConfig {
    /// Base for tuning curves: black target on a static white field, so the
    /// Weber contrast starts at 1.
    pub fn tuning_base() -> Self {
        Self {
            duration_frames: 1500,
            background: BackgroundSpec {
                velocity_px_s: 0.0,
                direction: Direction::Rightward,
                source: BackgroundSource::Uniform { level: 255.0 },
            },
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(invalid_param("frame size must be positive"));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(invalid_param("fps must be positive"));
        }
        if self.duration_frames == 0 {
            return Err(invalid_param("duration_frames must be at least 1"));
        }
        let t = &self.target;
        if t.width_px == 0 || t.height_px == 0 {
            return Err(invalid_param("target size must be positive"));
        }
        if t.width_px > self.width || t.height_px > self.height {
            return Err(invalid_param("target does not fit in the frame"));
        }
        if self.target_row() + t.height_px > self.height {
            return Err(invalid_param("target rows exceed frame height"));
        }
        if !(0.0..=255.0).contains(&t.luminance) {
            return Err(invalid_param("target luminance must lie in [0,255]"));
        }
        for v in [t.velocity_px_s, t.start_x, self.background.velocity_px_s] {
            if !v.is_finite() {
                return Err(invalid_param("velocities and positions must be finite"));
            }
        }
        if t.start_x < 0.0 || t.start_x + t.width_px as f64 > self.width as f64 {
            return Err(invalid_param("target must start inside the frame"));
        }
        if let BackgroundSource::Uniform { level } = self.background.source {
            if !(0.0..=255.0).contains(&level) {
                return Err(invalid_param("background level must lie in [0,255]"));
            }
        }
        Ok(())
    }

    pub fn target_row(&self) -> usize {
        self.target
            .y_row
            .unwrap_or((self.height.saturating_sub(self.target.height_px)) / 2)
    }

    /// Left edge of the target at frame `t`.
    pub fn target_left(&self, t: usize) -> f64 {
        self.target.start_x + self.target.velocity_px_s * t as f64 / self.fps
    }

    /// Background displacement at frame `t` (positive = rightward).
    pub fn background_shift(&self, t: usize) -> f64 {
        self.background.direction.sign() * self.background.velocity_px_s * t as f64 / self.fps
    }
}

/// Reference target position for one frame, in pixel-index coordinates
/// (pixel `i` is centred on `i`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthEntry {
    pub frame_index: usize,
    pub cx: f64,
    pub cy: f64,
}

/// Mean-reverting cluttered texture ("dead leaves"): overlapping discs with a
/// power-law radius distribution and random grey levels, wrapped in x, then
/// lightly blurred. Statistics resemble natural scenes: edges at every
/// scale, a few large occluders.
pub fn texture_background(width: usize, height: usize, seed: u64) -> Result<Frame> {
    if width == 0 || height == 0 {
        return Err(invalid_param("texture size must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut img = Frame::filled(width, height, 0.5);
    let (r_min, r_max) = (2.0f64, (height as f64 / 3.0).max(3.0));
    let area = (width * height) as f64;
    let count = (area / 25.0) as usize + 200;
    for _ in 0..count {
        // inverse-CDF sample of p(r) ∝ r^-3 on [r_min, r_max]
        let u: f64 = rng.gen();
        let inv = 1.0 / (r_min * r_min) - u * (1.0 / (r_min * r_min) - 1.0 / (r_max * r_max));
        let r = 1.0 / inv.sqrt();
        let cx = rng.gen::<f64>() * width as f64;
        let cy = rng.gen::<f64>() * height as f64;
        let level = 0.15 + 0.8 * rng.gen::<f64>();
        let y0 = (cy - r).floor().max(0.0) as usize;
        let y1 = ((cy + r).ceil() as usize).min(height - 1);
        let span = r.ceil() as isize;
        for y in y0..=y1 {
            let dy = y as f64 - cy;
            for xi in -span..=span {
                let x = (cx.floor() as isize + xi).rem_euclid(width as isize) as usize;
                let mut dx = (x as f64 - cx).abs();
                dx = dx.min(width as f64 - dx);
                if dx * dx + dy * dy <= r * r {
                    img.set(x, y, level);
                }
            }
        }
    }
    // light blur with horizontal wrap: pad by tiling, blur, crop
    let k = gaussian_kernel_2d(0.8, None)?;
    let pad = k.radius();
    if width > 2 * pad && height > 2 * pad {
        let tiled = Frame::from_fn(width + 2 * pad, height, |x, y| {
            img.get((x + width - pad) % width, y)
        });
        let blurred = conv2_same(&tiled, &k)?;
        img = Frame::from_fn(width, height, |x, y| blurred.get(x + pad, y));
    }
    Ok(img)
}

/// Renderer for one configured sequence.
#[derive(Debug, Clone)]
pub struct Sequence {
    cfg: SynthConfig,
    background: Frame,
}

/// Validates the config, resolves the background and returns a lazy
/// renderer. Frames are produced on demand so long sequences never need to
/// be held in memory.
pub fn generate_sequence(cfg: &SynthConfig) -> Result<Sequence> {
    Sequence::new(cfg.clone())
}

impl Sequence {
    pub fn new(cfg: SynthConfig) -> Result<Self> {
        cfg.validate()?;
        let background = match &cfg.background.source {
            BackgroundSource::Texture { seed } => texture_background(cfg.width, cfg.height, *seed)?,
            BackgroundSource::Uniform { level } => Frame::filled(cfg.width, cfg.height, level / 255.0),
            BackgroundSource::Image { path } => {
                let img = crate::io::read_gray_image(path)?;
                if img.height() < cfg.height {
                    return Err(invalid_param(format!(
                        "background image {} is {} rows, need {}",
                        path.display(),
                        img.height(),
                        cfg.height
                    )));
                }
                img
            }
        };
        Ok(Self { cfg, background })
    }

    pub fn config(&self) -> &SynthConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.cfg.duration_frames
    }

    pub fn is_empty(&self) -> bool {
        self.cfg.duration_frames == 0
    }

    pub fn background(&self) -> &Frame {
        &self.background
    }

    /// Full frame `t`.
    pub fn frame(&self, t: usize) -> Frame {
        self.frame_rows(t, 0, self.cfg.height)
    }

    /// Rows `y0..y1` of frame `t`, identical to cropping [`Sequence::frame`].
    pub fn frame_rows(&self, t: usize, y0: usize, y1: usize) -> Frame {
        let cfg = &self.cfg;
        assert!(y0 < y1 && y1 <= cfg.height, "row range out of bounds");
        let bw = self.background.width();
        let shift = cfg.background_shift(t);

        // Column sampling positions are shared by every row.
        let cols: Vec<(usize, usize, f64)> = (0..cfg.width)
            .map(|x| {
                let src = (x as f64 - shift).rem_euclid(bw as f64);
                let i0 = src.floor();
                let frac = src - i0;
                let i0 = (i0 as usize) % bw;
                (i0, (i0 + 1) % bw, frac)
            })
            .collect();

        let left = cfg.target_left(t);
        let right = left + cfg.target.width_px as f64;
        let lum = cfg.target.luminance / 255.0;
        let ty0 = cfg.target_row();
        let ty1 = ty0 + cfg.target.height_px;

        let mut data = Vec::with_capacity(cfg.width * (y1 - y0));
        for y in y0..y1 {
            let row = self.background.row(y);
            let in_target_rows = (ty0..ty1).contains(&y);
            for (x, &(i0, i1, frac)) in cols.iter().enumerate() {
                let mut v = if frac == 0.0 {
                    row[i0]
                } else {
                    row[i0] * (1.0 - frac) + row[i1] * frac
                };
                if in_target_rows {
                    let cover = ((x + 1) as f64).min(right) - (x as f64).max(left);
                    if cover > 0.0 {
                        let c = cover.min(1.0);
                        v = v * (1.0 - c) + lum * c;
                    }
                }
                // 8-bit quantization, as a video file would store it
                data.push((v * 255.0).round().clamp(0.0, 255.0) / 255.0);
            }
        }
        Frame::from_vec(cfg.width, y1 - y0, data).expect("dimensions are consistent")
    }

    /// Ground truth for frame `t`, or `None` once the target has left the frame.
    pub fn ground_truth(&self, t: usize) -> Option<GroundTruthEntry> {
        let cfg = &self.cfg;
        let left = cfg.target_left(t);
        let w = cfg.target.width_px as f64;
        if left < 0.0 || left + w > cfg.width as f64 {
            return None;
        }
        Some(GroundTruthEntry {
            frame_index: t,
            cx: left + w / 2.0 - 0.5,
            cy: cfg.target_row() as f64 + (cfg.target.height_px as f64 - 1.0) / 2.0,
        })
    }

    pub fn ground_truth_all(&self) -> Vec<GroundTruthEntry> {
        (0..self.len()).filter_map(|t| self.ground_truth(t)).collect()
    }

    /// Last frame index with ground truth, if any.
    pub fn last_visible_frame(&self) -> Option<usize> {
        (0..self.len()).rev().find(|&t| self.ground_truth(t).is_some())
    }

    pub fn frames(&self) -> impl Iterator<Item = Frame> + '_ {
        (0..self.len()).map(move |t| self.frame(t))
    }
}

/// Sweep step sizes for the experiment groups.
pub const SIZE_STEP_PX: usize = 1;
pub const LUMINANCE_STEP: f64 = 15.0;
pub const VELOCITY_STEP_PX_S: f64 = 50.0;

fn velocity_grid(lo: f64, hi: f64) -> Vec<f64> {
    let n = ((hi - lo) / VELOCITY_STEP_PX_S).round() as usize;
    (0..=n).map(|i| lo + i as f64 * VELOCITY_STEP_PX_S).collect()
}

/// Configurations of experiment group `group` (1..=6), each varying one
/// image parameter around `initial`:
///
/// 1. target size 1×1 to 15×15
/// 2. target luminance 0 to 75
/// 3. target velocity 0 to 500 px/s
/// 4. background velocity 0 to 500 px/s, rightward
/// 5. background velocity 0 to 500 px/s, leftward
/// 6. target velocity 200 to 400 px/s over three alternate backgrounds
pub fn group_configs(group: u8, initial: &SynthConfig) -> Result<Vec<SynthConfig>> {
    let with = |f: &dyn Fn(&mut SynthConfig)| {
        let mut c = initial.clone();
        f(&mut c);
        c
    };
    let out = match group {
        1 => (1..=15)
            .step_by(SIZE_STEP_PX)
            .map(|s| {
                with(&|c| {
                    c.target.width_px = s;
                    c.target.height_px = s;
                })
            })
            .collect(),
        2 => (0..=5)
            .map(|i| with(&|c| c.target.luminance = i as f64 * LUMINANCE_STEP))
            .collect(),
        3 => velocity_grid(0.0, 500.0)
            .into_iter()
            .map(|v| with(&|c| c.target.velocity_px_s = v))
            .collect(),
        4 | 5 => {
            let dir = if group == 4 {
                Direction::Rightward
            } else {
                Direction::Leftward
            };
            velocity_grid(0.0, 500.0)
                .into_iter()
                .map(|v| {
                    with(&|c| {
                        c.background.velocity_px_s = v;
                        c.background.direction = dir;
                    })
                })
                .collect()
        }
        6 => {
            let mut v = Vec::new();
            for bg in 1..=3u64 {
                for vel in velocity_grid(200.0, 400.0) {
                    v.push(with(&|c| {
                        c.target.velocity_px_s = vel;
                        c.background.source = BackgroundSource::Texture {
                            seed: initial.seed.wrapping_add(100 * bg),
                        };
                    }));
                }
            }
            v
        }
        _ => return Err(invalid_param(format!("experiment group must be 1..=6, got {group}"))),
    };
    Ok(out)
}

/// Short directory-safe label for a config within its group.
pub fn group_label(group: u8, cfg: &SynthConfig) -> String {
    match group {
        1 => format!("g1_size_{}x{}", cfg.target.width_px, cfg.target.height_px),
        2 => format!("g2_luminance_{:03}", cfg.target.luminance as i64),
        3 => format!("g3_target_velocity_{:03}", cfg.target.velocity_px_s as i64),
        4 => format!("g4_bg_right_{:03}", cfg.background.velocity_px_s as i64),
        5 => format!("g5_bg_left_{:03}", cfg.background.velocity_px_s as i64),
        6 => {
            let seed = match cfg.background.source {
                BackgroundSource::Texture { seed } => seed,
                _ => 0,
            };
            format!("g6_bg{}_velocity_{:03}", seed, cfg.target.velocity_px_s as i64)
        }
        _ => format!("group{group}"),
    }
}

/// `|mu_t - mu_b| / 255` for 8-bit means.
pub fn weber_from_means(mu_target: f64, mu_background: f64) -> f64 {
    (mu_target - mu_background).abs() / 255.0
}

/// Weber contrast of the target against its `(w+2d)×(h+2d)` surround,
/// averaged over every frame with ground truth.
///
/// Frames are addressed by `frame_index` of each ground-truth entry. The
/// surround is clipped to the frame.
pub fn weber_contrast<'a>(
    frames: impl Fn(usize) -> Option<&'a Frame>,
    gt: &[GroundTruthEntry],
    target_size: (usize, usize),
    d_px: usize,
) -> Result<f64> {
    if gt.is_empty() {
        return Err(invalid_param("weber contrast needs at least one ground-truth frame"));
    }
    let (tw, th) = target_size;
    let mut acc = 0.0;
    let mut n = 0usize;
    let mut clipped = false;
    for g in gt {
        let Some(frame) = frames(g.frame_index) else {
            continue;
        };
        let (w, h) = frame.dims();
        let x0 = (g.cx - (tw as f64 - 1.0) / 2.0).round() as isize;
        let y0 = (g.cy - (th as f64 - 1.0) / 2.0).round() as isize;
        let (x1, y1) = (x0 + tw as isize, y0 + th as isize);
        let (ox0, oy0) = (x0 - d_px as isize, y0 - d_px as isize);
        let (ox1, oy1) = (x1 + d_px as isize, y1 + d_px as isize);
        if ox0 < 0 || oy0 < 0 || ox1 > w as isize || oy1 > h as isize {
            clipped = true;
        }
        let (mut st, mut nt, mut sb, mut nb) = (0.0, 0usize, 0.0, 0usize);
        for y in oy0.max(0)..oy1.min(h as isize) {
            for x in ox0.max(0)..ox1.min(w as isize) {
                let v = frame.get(x as usize, y as usize) * 255.0;
                if (x0..x1).contains(&x) && (y0..y1).contains(&y) {
                    st += v;
                    nt += 1;
                } else {
                    sb += v;
                    nb += 1;
                }
            }
        }
        if nt == 0 || nb == 0 {
            continue;
        }
        acc += weber_from_means(st / nt as f64, sb / nb as f64);
        n += 1;
    }
    if clipped {
        log::warn!("weber contrast surround clipped at the frame border");
    }
    if n == 0 {
        return Err(invalid_param("no ground-truth frame was available for weber contrast"));
    }
    Ok(acc / n as f64)
}
