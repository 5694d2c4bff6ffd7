//! The streaming four-layer detector.
//!
//! Per frame: retina blur → lamina band-pass → medulla ON/OFF split with a
//! delayed OFF channel → lobula correlation with delayed feedback
//! subtracted from both channels → lateral inhibition → thresholded local
//! maxima. All history buffers start zero-filled.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, invalid_state, Result};
use crate::frame::Frame;
use crate::kernels::{conv2_same, TemporalHistory, TemporalKernel};
use crate::params::{ModelKernels, ModelParams};

/// A located response above threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame_index: usize,
    pub x: usize,
    pub y: usize,
    pub score: f64,
}

/// All intermediate maps of one processed frame.
#[derive(Debug, Clone)]
pub struct FrameResult {
    pub frame_index: usize,
    /// Set while the delay lines are still filling from their zero state.
    pub warm_up: bool,
    /// Retina output.
    pub p: Frame,
    /// Lamina (band-pass) output.
    pub l: Frame,
    pub tm3: Frame,
    pub tm1: Frame,
    /// Feedback signal.
    pub f: Frame,
    /// Lobula correlation output.
    pub d: Frame,
    /// Neighbourhood-pooled raw correlation.
    pub e: Frame,
    /// Laterally inhibited output.
    pub q: Frame,
    pub detections: Vec<Detection>,
}

impl FrameResult {
    pub fn map(&self, name: &str) -> Option<&Frame> {
        Some(match name {
            "P" => &self.p,
            "L" => &self.l,
            "TM3" | "Tm3" | "tm3" => &self.tm3,
            "TM1" | "Tm1" | "tm1" => &self.tm1,
            "F" => &self.f,
            "D" => &self.d,
            "E" => &self.e,
            "Q" => &self.q,
            _ => return None,
        })
    }
}

/// Blurs the input and applies the input gain.
pub fn retina_step(frame: &Frame, kernels: &ModelKernels) -> Result<Frame> {
    let blurred = conv2_same(frame, &kernels.retina)?;
    if kernels.input_gain == 1.0 {
        return Ok(blurred);
    }
    Ok(blurred.map(|v| v * kernels.input_gain))
}

/// Pushes the blurred frame into the retina history and band-passes it.
pub fn lamina_step(
    retina_history: &mut TemporalHistory,
    blurred: Frame,
    kernels: &ModelKernels,
) -> Result<Frame> {
    retina_history.push(blurred)?;
    retina_history.apply_offset(&kernels.bandpass, 0)
}

/// Splits the lamina output into the ON channel and the delayed OFF channel.
pub fn medulla_step(
    l: &Frame,
    off_history: &mut TemporalHistory,
    kernels: &ModelKernels,
) -> Result<(Frame, Frame)> {
    let tm3 = l.map(|v| v.max(0.0));
    off_history.push(l.map(|v| (-v).max(0.0)))?;
    let tm1 = off_history.apply_offset(&kernels.off_delay, 0)?;
    Ok((tm3, tm1))
}

/// Gaussian-weighted pooling of the raw ON×OFF product.
pub fn neighbor_sum(tm3: &Frame, tm1: &Frame, kernels: &ModelKernels) -> Result<Frame> {
    let product = tm3.zip_map(tm1, |a, b| a * b)?;
    conv2_same(&product, &kernels.neighbor)
}

/// Delayed, pooled lobula activity fed back onto the medulla.
///
/// The history holds `D + E` of past frames only; the kernel's zero-lag tap
/// is zero so the current frame never contributes.
#[derive(Debug, Clone)]
pub struct FeedbackLoop {
    alpha: f64,
    kernel: TemporalKernel,
    history: TemporalHistory,
}

impl FeedbackLoop {
    pub fn new(alpha: f64, kernel: TemporalKernel) -> Self {
        let capacity = kernel.len().saturating_sub(1);
        Self {
            alpha,
            kernel,
            history: TemporalHistory::new(capacity),
        }
    }

    pub fn from_params(params: &ModelParams, kernels: &ModelKernels) -> Self {
        Self::new(params.alpha, kernels.feedback_delay.clone())
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Feedback for the frame about to be processed.
    pub fn signal(&self, width: usize, height: usize) -> Result<Frame> {
        if let Some(d) = self.history.dims() {
            if d != (width, height) {
                return Err(invalid_state("feedback history size mismatch"));
            }
        }
        if self.alpha == 0.0 || self.history.is_empty() {
            return Ok(Frame::zeros(width, height));
        }
        let mut f = self.history.apply_offset(&self.kernel, 1)?;
        let alpha = self.alpha;
        f.as_mut_slice().iter_mut().for_each(|v| *v *= alpha);
        Ok(f)
    }

    /// Records this frame's `D + E`.
    pub fn record(&mut self, d: &Frame, e: &Frame) -> Result<()> {
        self.history.push(d.zip_map(e, |a, b| a + b)?)
    }
}

/// Feedback for the current frame.
pub fn feedback_signal(feedback: &FeedbackLoop, width: usize, height: usize) -> Result<Frame> {
    feedback.signal(width, height)
}

/// Correlates the feedback-corrected ON and OFF channels.
///
/// Each factor is rectified before the product so two suppressed channels
/// cannot combine into a positive response.
pub fn lobula_correlate(tm3: &Frame, tm1: &Frame, f: &Frame) -> Result<Frame> {
    tm3.check_same_dims(tm1, "lobula")?;
    tm3.check_same_dims(f, "lobula")?;
    let data = tm3
        .as_slice()
        .iter()
        .zip(tm1.as_slice())
        .zip(f.as_slice())
        .map(|((&on, &off), &fb)| (on - fb).max(0.0) * (off - fb).max(0.0))
        .collect();
    Frame::from_vec(tm3.width(), tm3.height(), data)
}

/// Lobula stage: returns `(D, E)` and records `D + E` in the feedback loop.
pub fn lobula_step(
    tm3: &Frame,
    tm1: &Frame,
    f: &Frame,
    feedback: &mut FeedbackLoop,
    kernels: &ModelKernels,
) -> Result<(Frame, Frame)> {
    let d = lobula_correlate(tm3, tm1, f)?;
    let e = neighbor_sum(tm3, tm1, kernels)?;
    feedback.record(&d, &e)?;
    Ok((d, e))
}

pub fn lateral_inhibit(d: &Frame, kernels: &ModelKernels) -> Result<Frame> {
    conv2_same(d, &kernels.inhibition)
}

/// Strict local maxima of `q` within a `(2 radius + 1)` square window whose
/// value exceeds `floor`. Equal values resolve in favour of the smaller
/// `(y, x)`. Returned in row-major order as `(x, y, value)`.
pub fn local_maxima(q: &Frame, radius: usize, floor: f64) -> Vec<(usize, usize, f64)> {
    let (w, h) = q.dims();
    let data = q.as_slice();
    let mut out = Vec::new();
    for y in 0..h {
        let y0 = y.saturating_sub(radius);
        let y1 = (y + radius).min(h - 1);
        for x in 0..w {
            let v = data[y * w + x];
            if !(v > floor) {
                continue;
            }
            let x0 = x.saturating_sub(radius);
            let x1 = (x + radius).min(w - 1);
            let mut is_max = true;
            'window: for yy in y0..=y1 {
                let row = &data[yy * w..(yy + 1) * w];
                for (xx, &u) in row.iter().enumerate().take(x1 + 1).skip(x0) {
                    if u > v || (u == v && (yy, xx) < (y, x)) {
                        is_max = false;
                        break 'window;
                    }
                }
            }
            if is_max {
                out.push((x, y, v));
            }
        }
    }
    out
}

/// Thresholded local maxima of the inhibited output.
///
/// Maxima are found first and thresholded second, so raising `lambda` only
/// ever removes detections.
pub fn detect(q: &Frame, frame_index: usize, lambda: f64, nms_radius: usize) -> Vec<Detection> {
    local_maxima(q, nms_radius, lambda)
        .into_iter()
        .map(|(x, y, score)| Detection {
            frame_index,
            x,
            y,
            score,
        })
        .collect()
}

/// Shared front end: everything up to the medulla outputs and their
/// neighbourhood pooling, none of which depends on the feedback loop.
#[derive(Debug, Clone)]
pub struct FrontEnd {
    kernels: ModelKernels,
    retina_history: TemporalHistory,
    off_history: TemporalHistory,
    dims: Option<(usize, usize)>,
}

/// Front-end maps for one frame.
#[derive(Debug, Clone)]
pub struct FrontEndOutput {
    pub p: Frame,
    pub l: Frame,
    pub tm3: Frame,
    pub tm1: Frame,
    pub e: Frame,
}

impl FrontEnd {
    pub fn new(kernels: ModelKernels) -> Self {
        let retina_history = TemporalHistory::new(kernels.bandpass.len());
        let off_history = TemporalHistory::new(kernels.off_delay.len());
        Self {
            kernels,
            retina_history,
            off_history,
            dims: None,
        }
    }

    pub fn kernels(&self) -> &ModelKernels {
        &self.kernels
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.dims
    }

    pub fn step(&mut self, frame: &Frame) -> Result<FrontEndOutput> {
        match self.dims {
            Some(d) if d != frame.dims() => {
                return Err(invalid_state(format!(
                    "stream is {}x{}, frame is {}x{}",
                    d.0,
                    d.1,
                    frame.width(),
                    frame.height()
                )))
            }
            _ => self.dims = Some(frame.dims()),
        }
        let p = retina_step(frame, &self.kernels)?;
        let l = lamina_step(&mut self.retina_history, p.clone(), &self.kernels)?;
        let (tm3, tm1) = medulla_step(&l, &mut self.off_history, &self.kernels)?;
        let e = neighbor_sum(&tm3, &tm1, &self.kernels)?;
        Ok(FrontEndOutput { p, l, tm3, tm1, e })
    }
}

/// Single-stream detector state.
#[derive(Debug, Clone)]
pub struct Detector {
    params: ModelParams,
    front: FrontEnd,
    /// `None` runs the plain feedforward correlation `D = Tm3 · Tm1`.
    feedback: Option<FeedbackLoop>,
    frame_index: usize,
    warmup: usize,
}

impl Detector {
    pub fn new(params: ModelParams) -> Result<Self> {
        let kernels = params.kernels()?;
        let feedback = Some(FeedbackLoop::from_params(&params, &kernels));
        let warmup = kernels.warmup_frames();
        Ok(Self {
            params,
            front: FrontEnd::new(kernels),
            feedback,
            frame_index: 0,
            warmup,
        })
    }

    /// Detector without any feedback path (not merely `alpha = 0`).
    pub fn feedforward(params: ModelParams) -> Result<Self> {
        let mut det = Self::new(params)?;
        det.feedback = None;
        Ok(det)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn kernels(&self) -> &ModelKernels {
        self.front.kernels()
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    pub fn warmup_frames(&self) -> usize {
        self.warmup
    }

    /// Runs one frame through every layer and advances all state by one.
    pub fn process_frame(&mut self, frame: &Frame) -> Result<FrameResult> {
        if frame.is_empty() {
            return Err(invalid_param("empty frame"));
        }
        let fe = self.front.step(frame)?;
        let (w, h) = frame.dims();
        let (f, d) = match self.feedback.as_mut() {
            Some(fb) => {
                let f = feedback_signal(fb, w, h)?;
                let d = lobula_correlate(&fe.tm3, &fe.tm1, &f)?;
                fb.record(&d, &fe.e)?;
                (f, d)
            }
            None => (
                Frame::zeros(w, h),
                fe.tm3.zip_map(&fe.tm1, |a, b| a * b)?,
            ),
        };
        let q = lateral_inhibit(&d, self.front.kernels())?;
        let detections = detect(&q, self.frame_index, self.params.lambda, self.params.nms_radius);
        let result = FrameResult {
            frame_index: self.frame_index,
            warm_up: self.frame_index < self.warmup,
            p: fe.p,
            l: fe.l,
            tm3: fe.tm3,
            tm1: fe.tm1,
            f,
            d,
            e: fe.e,
            q,
            detections,
        };
        self.frame_index += 1;
        Ok(result)
    }
}

/// One front end driving several feedback heads.
///
/// Heads may differ only in their feedback constants (`alpha`, `n4`,
/// `tau4`); every other constant must match the front end. Each head's
/// output is identical to running a separate [`Detector`] with its params.
#[derive(Debug, Clone)]
pub struct DetectorBank {
    front: FrontEnd,
    heads: Vec<FeedbackLoop>,
}

impl DetectorBank {
    pub fn new(heads: &[ModelParams]) -> Result<Self> {
        let first = heads
            .first()
            .ok_or_else(|| invalid_param("detector bank needs at least one head"))?;
        let kernels = first.kernels()?;
        let mut loops = Vec::with_capacity(heads.len());
        for p in heads {
            let same_front = ModelParams {
                alpha: first.alpha,
                n4: first.n4,
                tau4: first.tau4,
                lambda: first.lambda,
                nms_radius: first.nms_radius,
                ..p.clone()
            };
            if &same_front != first {
                return Err(invalid_param(
                    "detector bank heads may differ only in alpha, n4 and tau4",
                ));
            }
            let k = p.kernels()?;
            loops.push(FeedbackLoop::from_params(p, &k));
        }
        Ok(Self {
            front: FrontEnd::new(kernels),
            heads: loops,
        })
    }

    pub fn heads(&self) -> usize {
        self.heads.len()
    }

    pub fn kernels(&self) -> &ModelKernels {
        self.front.kernels()
    }

    /// Inhibited output of every head for the next frame.
    pub fn process_frame(&mut self, frame: &Frame) -> Result<Vec<Frame>> {
        let fe = self.front.step(frame)?;
        let (w, h) = frame.dims();
        let kernels = self.front.kernels();
        self.heads
            .iter_mut()
            .map(|fb| {
                let f = fb.signal(w, h)?;
                let d = lobula_correlate(&fe.tm3, &fe.tm1, &f)?;
                fb.record(&d, &fe.e)?;
                lateral_inhibit(&d, kernels)
            })
            .collect()
    }
}
