//! Gamma delay kernels, their band-pass difference, and causal frame histories.

use std::collections::VecDeque;

use crate::error::{invalid_param, invalid_state, Result};
use crate::frame::Frame;

/// Default fraction of continuous kernel mass allowed beyond the last tap.
pub const DEFAULT_TAIL_EPS: f64 = 1e-3;

/// Order and time constant of a Gamma kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSpec {
    pub order: u32,
    pub tau_ms: f64,
}

/// Causal FIR kernel over frame lags `0, 1, 2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalKernel {
    taps: Vec<f64>,
    dt_ms: f64,
    /// Gamma components the kernel was built from: one for a delay kernel,
    /// two (excitatory, inhibitory) for a band-pass kernel.
    pub meta: Vec<GammaSpec>,
}

impl TemporalKernel {
    /// Wraps raw taps. Used for identity kernels and tests.
    pub fn from_taps(taps: Vec<f64>, dt_ms: f64) -> Result<Self> {
        if taps.is_empty() {
            return Err(invalid_param("temporal kernel needs at least one tap"));
        }
        if taps.iter().any(|t| !t.is_finite()) {
            return Err(invalid_param("temporal kernel taps must be finite"));
        }
        if !(dt_ms.is_finite() && dt_ms > 0.0) {
            return Err(invalid_param(format!("dt_ms must be positive, got {dt_ms}")));
        }
        Ok(Self {
            taps,
            dt_ms,
            meta: Vec::new(),
        })
    }

    #[inline]
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn dt_ms(&self) -> f64 {
        self.dt_ms
    }

    pub fn sum(&self) -> f64 {
        self.taps.iter().sum()
    }

    /// Lag of the largest tap (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (k, &t) in self.taps.iter().enumerate() {
            if t > self.taps[best] {
                best = k;
            }
        }
        best
    }
}

fn check_gamma(n: u32, tau_ms: f64, dt_ms: f64, tail_eps: f64) -> Result<()> {
    if n < 1 {
        return Err(invalid_param("gamma kernel order must be >= 1"));
    }
    if !(tau_ms.is_finite() && tau_ms > 0.0) {
        return Err(invalid_param(format!("gamma tau must be positive, got {tau_ms}")));
    }
    if !(dt_ms.is_finite() && dt_ms > 0.0) {
        return Err(invalid_param(format!("dt_ms must be positive, got {dt_ms}")));
    }
    if !(tail_eps.is_finite() && tail_eps > 0.0 && tail_eps < 1.0) {
        return Err(invalid_param(format!("tail_eps must lie in (0,1), got {tail_eps}")));
    }
    Ok(())
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Continuous Gamma kernel `(n t)^n exp(-n t / tau) / ((n-1)! tau^(n+1))`.
///
/// Evaluated in log space; the raw power overflows for large orders.
pub fn gamma_density(n: u32, tau_ms: f64, t_ms: f64) -> f64 {
    if t_ms <= 0.0 {
        return 0.0;
    }
    let nf = n as f64;
    let ln = nf * (nf * t_ms).ln() - nf * t_ms / tau_ms - ln_factorial(n - 1) - (nf + 1.0) * tau_ms.ln();
    ln.exp()
}

/// Mass of the continuous Gamma kernel beyond `t_ms`.
///
/// The kernel is the density of a Gamma distribution with integer shape
/// `n + 1` and rate `n / tau`, so the upper tail has the closed form
/// `exp(-x) * sum_{j=0..n} x^j / j!` with `x = n t / tau`.
pub fn gamma_tail_mass(n: u32, tau_ms: f64, t_ms: f64) -> f64 {
    if t_ms <= 0.0 {
        return 1.0;
    }
    let x = n as f64 * t_ms / tau_ms;
    let mut term = 1.0;
    let mut acc = 1.0;
    for j in 1..=n {
        term *= x / j as f64;
        acc += term;
    }
    (acc.ln() - x).exp().min(1.0)
}

/// Samples the Gamma kernel at `k * dt` up to the first lag whose omitted
/// tail mass falls below `tail_eps`, then rescales the taps to unit sum.
pub fn gamma_kernel(n: u32, tau_ms: f64, dt_ms: f64, tail_eps: f64) -> Result<TemporalKernel> {
    check_gamma(n, tau_ms, dt_ms, tail_eps)?;
    let mut last = 0usize;
    while gamma_tail_mass(n, tau_ms, last as f64 * dt_ms) >= tail_eps {
        last += 1;
    }
    let mut taps: Vec<f64> = (0..=last)
        .map(|k| gamma_density(n, tau_ms, k as f64 * dt_ms) * dt_ms)
        .collect();
    let total: f64 = taps.iter().sum();
    if !(total.is_finite() && total > 0.0) {
        return Err(invalid_param(format!(
            "gamma kernel (n={n}, tau={tau_ms}) has no resolvable mass at dt={dt_ms}"
        )));
    }
    for t in &mut taps {
        *t /= total;
    }
    Ok(TemporalKernel {
        taps,
        dt_ms,
        meta: vec![GammaSpec { order: n, tau_ms }],
    })
}

/// Fast Gamma minus slow Gamma, zero-padded to the longer support.
///
/// The difference is left unnormalized so that its DC gain stays at zero.
pub fn bandpass_kernel(
    fast: GammaSpec,
    slow: GammaSpec,
    dt_ms: f64,
    tail_eps: f64,
) -> Result<TemporalKernel> {
    let a = gamma_kernel(fast.order, fast.tau_ms, dt_ms, tail_eps)?;
    let b = gamma_kernel(slow.order, slow.tau_ms, dt_ms, tail_eps)?;
    let len = a.len().max(b.len());
    let taps = (0..len)
        .map(|k| a.taps.get(k).copied().unwrap_or(0.0) - b.taps.get(k).copied().unwrap_or(0.0))
        .collect();
    Ok(TemporalKernel {
        taps,
        dt_ms,
        meta: vec![fast, slow],
    })
}

/// Bounded history of past frames, newest first.
///
/// Slots that have not been filled yet read as zero frames.
#[derive(Debug, Clone)]
pub struct TemporalHistory {
    frames: VecDeque<Frame>,
    capacity: usize,
    dims: Option<(usize, usize)>,
}

impl TemporalHistory {
    pub fn new(capacity: usize) -> Self {
        Self {
            frames: VecDeque::with_capacity(capacity + 1),
            capacity,
            dims: None,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Number of frames actually stored (never more than `capacity`).
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> Option<(usize, usize)> {
        self.dims
    }

    /// Pushes the newest frame, evicting the oldest beyond capacity.
    pub fn push(&mut self, frame: Frame) -> Result<()> {
        match self.dims {
            Some(d) if d != frame.dims() => {
                return Err(invalid_state(format!(
                    "history holds {}x{} frames, got {}x{}",
                    d.0,
                    d.1,
                    frame.width(),
                    frame.height()
                )))
            }
            _ => self.dims = Some(frame.dims()),
        }
        if self.capacity == 0 {
            return Ok(());
        }
        if self.frames.len() == self.capacity {
            self.frames.pop_back();
        }
        self.frames.push_front(frame);
        Ok(())
    }

    /// Frame at `lag` (0 = newest), or `None` if that slot is still empty.
    pub fn lag(&self, lag: usize) -> Option<&Frame> {
        self.frames.get(lag)
    }

    /// `sum_j taps[j + lag_offset] * frame_at_lag(j)`, with empty slots
    /// treated as zero.
    pub fn apply_offset(&self, kernel: &TemporalKernel, lag_offset: usize) -> Result<Frame> {
        let (w, h) = self
            .dims
            .ok_or_else(|| invalid_state("temporal history is empty; frame size unknown"))?;
        let mut out = Frame::zeros(w, h);
        let acc = out.as_mut_slice();
        for (j, frame) in self.frames.iter().enumerate() {
            let Some(&tap) = kernel.taps.get(j + lag_offset) else {
                break;
            };
            if tap == 0.0 {
                continue;
            }
            for (o, &v) in acc.iter_mut().zip(frame.as_slice()) {
                *o += tap * v;
            }
        }
        Ok(out)
    }
}

/// Per-pixel dot product of the kernel taps with the history at lags
/// `0, 1, ...`.
pub fn temporal_apply(history: &TemporalHistory, kernel: &TemporalKernel) -> Result<Frame> {
    history.apply_offset(kernel, 0)
}
