//! Scoring against ground truth and the experiment drivers: ROC curves,
//! tuning curves and feedback-parameter sensitivity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Result};
use crate::frame::Frame;
use crate::params::ModelParams;
use crate::pipeline::{local_maxima, Detection, DetectorBank};
use crate::synth::{GroundTruthEntry, Sequence, SynthConfig};

/// Match radius in pixels for a detection to count as a hit.
pub const DEFAULT_MATCH_RADIUS: f64 = 5.0;
/// Leading span excluded from scoring while delay lines fill.
pub const DEFAULT_WARMUP_MS: f64 = 200.0;
/// False-alarm rate at which detection rates are compared.
pub const REFERENCE_FALSE_ALARM_RATE: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOptions {
    pub match_radius: f64,
    pub warmup_ms: f64,
    /// Explicit threshold grid; `None` derives `n_lambdas` log-spaced values
    /// from the observed response range.
    pub lambdas: Option<Vec<f64>>,
    pub n_lambdas: usize,
    pub response: ResponseMetric,
}

/// How one frame's output is reduced to a tuning response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResponseMetric {
    /// Inhibited output at the rounded target centre.
    GroundTruthPixel,
    /// Largest inhibited output on the rows within `half_height` of the
    /// target centre. The response trails a moving target by roughly its
    /// velocity times the OFF delay, so a fixed pixel misses it.
    BandPeak { half_height: usize },
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            match_radius: DEFAULT_MATCH_RADIUS,
            warmup_ms: DEFAULT_WARMUP_MS,
            lambdas: None,
            n_lambdas: 50,
            response: ResponseMetric::BandPeak { half_height: 0 },
        }
    }
}

impl EvalOptions {
    pub fn warmup_frames(&self, fps: f64) -> usize {
        (self.warmup_ms * fps / 1000.0).round() as usize
    }
}

/// Counts behind the detection and false-alarm rates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    pub true_positives: usize,
    pub actual_targets: usize,
    pub false_positives: usize,
    pub n_images: usize,
}

impl std::ops::AddAssign for MatchResult {
    fn add_assign(&mut self, o: Self) {
        self.true_positives += o.true_positives;
        self.actual_targets += o.actual_targets;
        self.false_positives += o.false_positives;
        self.n_images += o.n_images;
    }
}

fn distance(d: &Detection, g: &GroundTruthEntry) -> f64 {
    let dx = d.x as f64 - g.cx;
    let dy = d.y as f64 - g.cy;
    (dx * dx + dy * dy).sqrt()
}

/// Matches one frame. Each target takes its nearest unmatched detection
/// strictly inside `radius`; equal distances go to the higher score.
pub fn match_frame(dets: &[Detection], gts: &[GroundTruthEntry], radius: f64) -> MatchResult {
    let mut used = vec![false; dets.len()];
    let mut tp = 0;
    for g in gts {
        let mut best: Option<(usize, f64)> = None;
        for (i, d) in dets.iter().enumerate() {
            if used[i] {
                continue;
            }
            let dist = distance(d, g);
            if dist >= radius {
                continue;
            }
            let better = match best {
                None => true,
                Some((j, bd)) => dist < bd || (dist == bd && d.score > dets[j].score),
            };
            if better {
                best = Some((i, dist));
            }
        }
        if let Some((i, _)) = best {
            used[i] = true;
            tp += 1;
        }
    }
    MatchResult {
        true_positives: tp,
        actual_targets: gts.len(),
        false_positives: dets.len() - tp,
        n_images: 1,
    }
}

/// Scores per-frame detection lists. Every listed frame counts as an
/// evaluated image; ground truth for unlisted frames is ignored.
pub fn match_detections(
    per_frame: &[(usize, Vec<Detection>)],
    gt: &[GroundTruthEntry],
    radius: f64,
) -> MatchResult {
    let mut total = MatchResult::default();
    for (frame, dets) in per_frame {
        let gts: Vec<GroundTruthEntry> = gt.iter().filter(|g| g.frame_index == *frame).copied().collect();
        total += match_frame(dets, &gts, radius);
    }
    total
}

/// `(detection rate, false alarms per image)`.
pub fn compute_rates(m: &MatchResult) -> Result<(f64, f64)> {
    if m.actual_targets == 0 {
        return Err(invalid_param("detection rate undefined without targets"));
    }
    if m.n_images == 0 {
        return Err(invalid_param("false alarm rate undefined without images"));
    }
    Ok((
        m.true_positives as f64 / m.actual_targets as f64,
        m.false_positives as f64 / m.n_images as f64,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub lambda: f64,
    pub d_r: f64,
    pub f_a: f64,
}

/// Collects local maxima of streamed response maps once, then scores any
/// number of thresholds against them.
#[derive(Debug, Clone)]
pub struct RocAccumulator {
    nms_radius: usize,
    match_radius: f64,
    frames: Vec<(usize, Vec<Detection>, Vec<GroundTruthEntry>)>,
}

impl RocAccumulator {
    pub fn new(nms_radius: usize, match_radius: f64) -> Self {
        Self {
            nms_radius,
            match_radius,
            frames: Vec::new(),
        }
    }

    /// Adds one evaluated frame. Only maxima with positive response are
    /// kept, since thresholds are non-negative.
    pub fn push(&mut self, frame_index: usize, q: &Frame, gt: Option<GroundTruthEntry>) {
        let dets = local_maxima(q, self.nms_radius, 0.0)
            .into_iter()
            .map(|(x, y, score)| Detection {
                frame_index,
                x,
                y,
                score,
            })
            .collect();
        self.frames.push((frame_index, dets, gt.into_iter().collect()));
    }

    pub fn n_images(&self) -> usize {
        self.frames.len()
    }

    pub fn max_score(&self) -> f64 {
        self.frames
            .iter()
            .flat_map(|(_, d, _)| d.iter().map(|d| d.score))
            .fold(0.0, f64::max)
    }

    pub fn evaluate(&self, lambda: f64) -> MatchResult {
        let mut total = MatchResult::default();
        let mut kept = Vec::new();
        for (_, dets, gts) in &self.frames {
            kept.clear();
            kept.extend(dets.iter().filter(|d| d.score > lambda).copied());
            total += match_frame(&kept, gts, self.match_radius);
        }
        total
    }

    pub fn point(&self, lambda: f64) -> Result<RocPoint> {
        let (d_r, f_a) = compute_rates(&self.evaluate(lambda))?;
        Ok(RocPoint { lambda, d_r, f_a })
    }

    pub fn sweep(&self, lambdas: &[f64]) -> Result<Vec<RocPoint>> {
        if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid_param("lambda grid must be strictly increasing"));
        }
        lambdas.iter().map(|&l| self.point(l)).collect()
    }

    /// `n` log-spaced thresholds from 1e-4 of the largest response up to
    /// just above it.
    pub fn default_lambdas(&self, n: usize) -> Vec<f64> {
        log_grid(self.max_score(), n)
    }

    /// Operating point with the lowest threshold whose false-alarm rate does
    /// not exceed `max_false_alarms`. Candidate thresholds are the observed
    /// maxima scores themselves, so the result is exact rather than
    /// grid-limited.
    pub fn at_false_alarm_rate(&self, max_false_alarms: f64) -> Result<RocPoint> {
        let mut scores: Vec<f64> = self
            .frames
            .iter()
            .flat_map(|(_, d, _)| d.iter().map(|d| d.score))
            .collect();
        scores.sort_by(|a, b| a.partial_cmp(b).expect("scores are finite"));
        scores.dedup();
        let mut candidates = Vec::with_capacity(scores.len() + 1);
        candidates.push(0.0);
        candidates.extend(scores);
        // f_a is non-increasing along `candidates`
        let (mut lo, mut hi) = (0usize, candidates.len() - 1);
        if self.point(candidates[lo])?.f_a <= max_false_alarms {
            return self.point(candidates[lo]);
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.point(candidates[mid])?.f_a <= max_false_alarms {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.point(candidates[hi])
    }
}

fn log_grid(max: f64, n: usize) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let top = if max > 0.0 { max * 1.0001 } else { 1.0 };
    let bottom = top * 1e-4;
    if n == 1 {
        return vec![bottom];
    }
    (0..n)
        .map(|i| bottom * (top / bottom).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// ROC over streamed response maps.
pub fn roc_sweep<'a>(
    q_maps: impl IntoIterator<Item = (usize, &'a Frame)>,
    gt: &[GroundTruthEntry],
    lambdas: &[f64],
    nms_radius: usize,
    match_radius: f64,
) -> Result<Vec<RocPoint>> {
    let mut acc = RocAccumulator::new(nms_radius, match_radius);
    for (i, q) in q_maps {
        acc.push(i, q, gt.iter().find(|g| g.frame_index == i).copied());
    }
    acc.sweep(lambdas)
}

/// Runs every head over the full sequence and collects ROC data for the
/// post-warm-up frames.
pub fn roc_run(cfg: &SynthConfig, heads: &[ModelParams], opts: &EvalOptions) -> Result<Vec<RocAccumulator>> {
    let seq = Sequence::new(cfg.clone())?;
    let mut bank = DetectorBank::new(heads)?;
    let warmup = opts.warmup_frames(cfg.fps);
    let mut accs: Vec<RocAccumulator> = heads
        .iter()
        .map(|p| RocAccumulator::new(p.nms_radius, opts.match_radius))
        .collect();
    for t in 0..seq.len() {
        let qs = bank.process_frame(&seq.frame(t))?;
        if t < warmup {
            continue;
        }
        let gt = seq.ground_truth(t);
        for (acc, q) in accs.iter_mut().zip(&qs) {
            acc.push(t, q, gt);
        }
    }
    Ok(accs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TuningAxis {
    Velocity,
    Width,
    Height,
    Weber,
}

impl TuningAxis {
    pub fn name(self) -> &'static str {
        match self {
            TuningAxis::Velocity => "velocity",
            TuningAxis::Width => "width",
            TuningAxis::Height => "height",
            TuningAxis::Weber => "weber",
        }
    }

    /// Sets the swept property on a copy of `base`.
    pub fn apply(self, base: &SynthConfig, value: f64) -> Result<SynthConfig> {
        let mut c = base.clone();
        match self {
            TuningAxis::Velocity => c.target.velocity_px_s = value,
            TuningAxis::Width => c.target.width_px = positive_px(value)?,
            TuningAxis::Height => {
                c.target.height_px = positive_px(value)?;
                c.target.y_row = None;
            }
            TuningAxis::Weber => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(invalid_param("weber contrast must lie in [0,1]"));
                }
                let seq = Sequence::new(base.clone())?;
                let mu_b = seq.background().mean() * 255.0;
                let lum = if mu_b >= 127.5 {
                    mu_b - value * 255.0
                } else {
                    mu_b + value * 255.0
                };
                c.target.luminance = lum.clamp(0.0, 255.0);
            }
        }
        Ok(c)
    }
}

impl std::str::FromStr for TuningAxis {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "velocity" => TuningAxis::Velocity,
            "width" => TuningAxis::Width,
            "height" => TuningAxis::Height,
            "weber" => TuningAxis::Weber,
            _ => return Err(invalid_param(format!("unknown tuning axis {s:?}"))),
        })
    }
}

fn positive_px(v: f64) -> Result<usize> {
    if v.is_finite() && v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(invalid_param(format!("pixel sizes must be positive integers, got {v}")))
    }
}

/// Response versus one swept stimulus property, normalized to peak 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningCurve {
    pub axis_name: String,
    pub axis_values: Vec<f64>,
    pub responses: Vec<f64>,
    /// Unnormalized responses.
    pub raw: Vec<f64>,
}

impl TuningCurve {
    pub fn from_raw(axis_name: &str, axis_values: Vec<f64>, raw: Vec<f64>) -> Self {
        let peak = raw.iter().copied().fold(0.0, f64::max);
        let responses = if peak > 0.0 {
            raw.iter().map(|r| r / peak).collect()
        } else {
            raw.clone()
        };
        Self {
            axis_name: axis_name.to_string(),
            axis_values,
            responses,
            raw,
        }
    }

    /// Axis value at the peak response (first one on ties).
    pub fn argmax(&self) -> f64 {
        let mut best = 0;
        for (i, &r) in self.responses.iter().enumerate() {
            if r > self.responses[best] {
                best = i;
            }
        }
        self.axis_values[best]
    }
}

/// Mean per-frame response over post-warm-up frames, for every head, on
/// one stimulus.
///
/// Only the band of rows that can influence the measured rows is
/// simulated; every stage is spatially local, so those rows are identical
/// to a full-frame run.
pub fn stimulus_response(cfg: &SynthConfig, heads: &[ModelParams], opts: &EvalOptions) -> Result<Vec<f64>> {
    let seq = Sequence::new(cfg.clone())?;
    let mut bank = DetectorBank::new(heads)?;
    let half = match opts.response {
        ResponseMetric::GroundTruthPixel => 0,
        ResponseMetric::BandPeak { half_height } => half_height,
    };
    let reach = bank.kernels().spatial_reach() + half;
    let min_rows = (2 * reach + 1).min(cfg.height);

    let row = seq
        .ground_truth(0)
        .map(|g| g.cy.round() as usize)
        .unwrap_or(cfg.target_row());
    let mut y0 = row.saturating_sub(reach);
    let mut y1 = (row + reach + 1).min(cfg.height);
    if y1 - y0 < min_rows {
        if y0 == 0 {
            y1 = min_rows;
        } else {
            y0 = cfg.height - min_rows;
        }
    }

    let warmup = opts.warmup_frames(cfg.fps);
    let last = match seq.last_visible_frame() {
        Some(t) => t,
        None => return Ok(vec![0.0; heads.len()]),
    };
    let mut sums = vec![0.0; heads.len()];
    let mut n = 0usize;
    for t in 0..=last {
        let qs = bank.process_frame(&seq.frame_rows(t, y0, y1))?;
        if t < warmup {
            continue;
        }
        let Some(g) = seq.ground_truth(t) else {
            continue;
        };
        let x = (g.cx.round().max(0.0) as usize).min(cfg.width - 1);
        let y = (g.cy.round() as usize).clamp(y0, y1 - 1) - y0;
        for (s, q) in sums.iter_mut().zip(&qs) {
            *s += match opts.response {
                ResponseMetric::GroundTruthPixel => q.get(x, y),
                ResponseMetric::BandPeak { half_height } => {
                    let r0 = y.saturating_sub(half_height);
                    let r1 = (y + half_height + 1).min(q.height());
                    (r0..r1)
                        .flat_map(|r| q.row(r).iter().copied())
                        .fold(f64::NEG_INFINITY, f64::max)
                }
            };
        }
        n += 1;
    }
    Ok(sums
        .into_iter()
        .map(|s| if n > 0 { s / n as f64 } else { 0.0 })
        .collect())
}

/// Tuning curves for several heads over one stimulus axis. Heads share a
/// front end and must differ only in feedback constants.
pub fn tuning_sweep_heads(
    axis: TuningAxis,
    values: &[f64],
    base: &SynthConfig,
    heads: &[ModelParams],
    opts: &EvalOptions,
) -> Result<Vec<TuningCurve>> {
    if values.is_empty() {
        return Err(invalid_param("tuning sweep needs at least one value"));
    }
    let cells: Vec<Vec<f64>> = values
        .par_iter()
        .map(|&v| stimulus_response(&axis.apply(base, v)?, heads, opts))
        .collect::<Result<_>>()?;
    Ok((0..heads.len())
        .map(|h| {
            let raw = cells.iter().map(|c| c[h]).collect();
            TuningCurve::from_raw(axis.name(), values.to_vec(), raw)
        })
        .collect())
}

pub fn tuning_sweep(
    axis: TuningAxis,
    values: &[f64],
    base: &SynthConfig,
    params: &ModelParams,
    opts: &EvalOptions,
) -> Result<TuningCurve> {
    let mut curves = tuning_sweep_heads(axis, values, base, std::slice::from_ref(params), opts)?;
    Ok(curves.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackParam {
    Alpha,
    N4,
    Tau4,
}

impl FeedbackParam {
    pub fn name(self) -> &'static str {
        match self {
            FeedbackParam::Alpha => "alpha",
            FeedbackParam::N4 => "n4",
            FeedbackParam::Tau4 => "tau4",
        }
    }

    /// Reference grid for the sensitivity study.
    pub fn default_values(self) -> Vec<f64> {
        match self {
            FeedbackParam::Alpha => vec![0.1, 0.25, 0.5, 1.0, 2.0],
            FeedbackParam::N4 => vec![9.0, 12.0, 15.0, 18.0, 21.0],
            FeedbackParam::Tau4 => vec![20.0, 25.0, 30.0, 35.0, 40.0],
        }
    }

    pub fn apply(self, base: &ModelParams, value: f64) -> Result<ModelParams> {
        let mut p = base.clone();
        match self {
            FeedbackParam::Alpha => p.alpha = value,
            FeedbackParam::N4 => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(invalid_param(format!("n4 must be a positive integer, got {value}")));
                }
                p.n4 = value as u32;
            }
            FeedbackParam::Tau4 => p.tau4 = value,
        }
        p.validate()?;
        Ok(p)
    }
}

impl std::str::FromStr for FeedbackParam {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "alpha" => FeedbackParam::Alpha,
            "n4" => FeedbackParam::N4,
            "tau4" => FeedbackParam::Tau4,
            _ => return Err(invalid_param(format!("unknown feedback parameter {s:?}"))),
        })
    }
}

/// One velocity tuning curve per value of a feedback parameter, everything
/// else held at `params`.
pub fn sensitivity_sweep(
    param: FeedbackParam,
    values: &[f64],
    velocities: &[f64],
    base: &SynthConfig,
    params: &ModelParams,
    opts: &EvalOptions,
) -> Result<Vec<TuningCurve>> {
    let heads: Vec<ModelParams> = values
        .iter()
        .map(|&v| param.apply(params, v))
        .collect::<Result<_>>()?;
    tuning_sweep_heads(TuningAxis::Velocity, velocities, base, &heads, opts)
}

/// Inclusive arithmetic grid.
pub fn linear_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn det(x: usize, y: usize, score: f64) -> Detection {
        Detection {
            frame_index: 0,
            x,
            y,
            score,
        }
    }

    fn gt(cx: f64, cy: f64) -> GroundTruthEntry {
        GroundTruthEntry {
            frame_index: 0,
            cx,
            cy,
        }
    }

    #[test]
    fn match_radius_boundary() {
        let m = match_frame(&[det(10, 10, 1.0)], &[gt(14.9, 10.0)], 5.0);
        assert_eq!((m.true_positives, m.false_positives), (1, 0));
        let m = match_frame(&[det(10, 10, 1.0)], &[gt(15.1, 10.0)], 5.0);
        assert_eq!((m.true_positives, m.false_positives), (0, 1));
    }

    #[test]
    fn matching_is_one_to_one() {
        let m = match_frame(&[det(10, 10, 1.0), det(12, 10, 2.0)], &[gt(11.0, 10.0)], 5.0);
        assert_eq!((m.true_positives, m.false_positives, m.actual_targets), (1, 1, 1));
    }

    #[test]
    fn equal_distance_prefers_higher_score() {
        let dets = [det(10, 10, 1.0), det(12, 10, 2.0)];
        let m = match_frame(&dets, &[gt(11.0, 10.0), gt(7.5, 10.0)], 5.0);
        // the first target takes (12,10); the second still reaches (10,10)
        assert_eq!(m.true_positives, 2);
        let m = match_frame(&dets, &[gt(11.0, 10.0), gt(14.5, 10.0)], 5.0);
        // (12,10) is gone, (10,10) is 4.5 away from the second target
        assert_eq!(m.true_positives, 2);
    }

    #[test]
    fn rates() {
        let m = MatchResult {
            true_positives: 8,
            actual_targets: 10,
            false_positives: 30,
            n_images: 10,
        };
        assert_eq!(compute_rates(&m).unwrap(), (0.8, 3.0));
        assert!(compute_rates(&MatchResult::default()).is_err());
        let no_images = MatchResult {
            actual_targets: 1,
            ..Default::default()
        };
        assert!(compute_rates(&no_images).is_err());
    }

    #[test]
    fn roc_beyond_max_is_empty() {
        let mut q = Frame::zeros(20, 20);
        q.set(5, 5, 0.7);
        q.set(15, 15, 0.4);
        let g = [gt(5.0, 5.0)];
        let pts = roc_sweep([(0, &q)], &g, &[0.1, 0.5, 0.8], 3, 5.0).unwrap();
        assert_eq!((pts[0].d_r, pts[0].f_a), (1.0, 1.0));
        assert_eq!((pts[1].d_r, pts[1].f_a), (1.0, 0.0));
        assert_eq!((pts[2].d_r, pts[2].f_a), (0.0, 0.0));
        assert!(roc_sweep([(0, &q)], &g, &[0.5, 0.1], 3, 5.0).is_err());
    }

    #[test]
    fn operating_point_search() {
        let mut acc = RocAccumulator::new(2, 5.0);
        for i in 0..4 {
            let mut q = Frame::zeros(30, 10);
            q.set(3, 3, 1.0 + i as f64);
            q.set(20, 3, 2.5);
            q.set(26, 8, 0.5);
            acc.push(i, &q, Some(GroundTruthEntry { frame_index: i, cx: 3.0, cy: 3.0 }));
        }
        let p = acc.at_false_alarm_rate(1.0).unwrap();
        assert!(p.f_a <= 1.0);
        assert_eq!(p.lambda, 0.5);
        assert_eq!(p.d_r, 1.0);
        let p = acc.at_false_alarm_rate(0.0).unwrap();
        assert_eq!(p.f_a, 0.0);
        assert_eq!(p.lambda, 2.5);
        assert_eq!(p.d_r, 0.5);
    }

    #[test]
    fn curve_normalization() {
        let c = TuningCurve::from_raw("velocity", vec![1.0, 2.0, 3.0], vec![0.5, 2.0, 1.0]);
        assert_eq!(c.responses, vec![0.25, 1.0, 0.5]);
        assert_eq!(c.argmax(), 2.0);
        let z = TuningCurve::from_raw("velocity", vec![1.0], vec![0.0]);
        assert_eq!(z.responses, vec![0.0]);
    }

    #[test]
    fn grids() {
        assert_eq!(linear_grid(50.0, 800.0, 50.0).len(), 16);
        let g = log_grid(2.0, 50);
        assert_eq!(g.len(), 50);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g[49] > 2.0);
    }

    #[test]
    fn feedback_param_grid_and_parse() {
        assert_eq!("tau4".parse::<FeedbackParam>().unwrap(), FeedbackParam::Tau4);
        assert!("beta".parse::<FeedbackParam>().is_err());
        let p = FeedbackParam::N4.apply(&ModelParams::default(), 12.0).unwrap();
        assert_eq!(p.n4, 12);
        assert!(FeedbackParam::N4.apply(&ModelParams::default(), 2.5).is_err());
    }
}
