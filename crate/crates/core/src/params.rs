//! Model constants.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_param, Result};
use crate::kernels::{
    bandpass_kernel, gamma_kernel, gaussian_kernel_2d, inhibition_kernel, GammaSpec,
    InhibitionKernel, InhibitionParams, SpatialKernel, TemporalKernel,
};

/// All constants of the detector. Time constants are in milliseconds.
///
/// `Default` gives the reference tuning, which prefers small targets moving
/// faster than roughly 200 px/s at 1000 frames per second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Multiplies `[0, 1]` input luminance before the retina. The default
    /// restores the 8-bit intensity range the other constants are tuned for;
    /// the loop is quadratic in intensity, so this sets feedback strength.
    pub input_gain: f64,
    /// Retina blur.
    pub sigma1: f64,
    /// Fast (excitatory) Gamma of the lamina band-pass.
    pub n1: u32,
    pub tau1: f64,
    /// Slow (inhibitory) Gamma of the lamina band-pass.
    pub n2: u32,
    pub tau2: f64,
    /// OFF-channel delay.
    pub n3: u32,
    pub tau3: f64,
    /// Feedback gain; zero disables the loop.
    pub alpha: f64,
    /// Feedback delay.
    pub n4: u32,
    pub tau4: f64,
    /// Neighbourhood pooling width for the feedback signal.
    pub eta: f64,
    /// Lateral inhibition.
    pub a: f64,
    pub b: f64,
    pub e: f64,
    pub rho: f64,
    pub sigma2: f64,
    pub sigma3: f64,
    /// Detection threshold on the inhibited output.
    pub lambda: f64,
    /// Half-width of the square non-maximum suppression window.
    pub nms_radius: usize,
    pub fps: f64,
    /// Continuous Gamma mass allowed beyond the last kernel tap.
    pub tail_eps: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            input_gain: 255.0,
            sigma1: 1.0,
            n1: 4,
            tau1: 8.0,
            n2: 16,
            tau2: 32.0,
            n3: 9,
            tau3: 45.0,
            alpha: 1.0,
            n4: 10,
            tau4: 25.0,
            eta: 1.5,
            a: 1.0,
            b: 3.0,
            e: 1.0,
            rho: 0.0,
            sigma2: 1.5,
            sigma3: 3.0,
            lambda: DEFAULT_LAMBDA,
            nms_radius: 5,
            fps: 1000.0,
            tail_eps: crate::kernels::DEFAULT_TAIL_EPS,
        }
    }
}

/// Threshold used when none is configured.
pub const DEFAULT_LAMBDA: f64 = 50.0;

impl ModelParams {
    /// Same constants with the feedback loop switched off.
    pub fn without_feedback(&self) -> Self {
        Self {
            alpha: 0.0,
            ..self.clone()
        }
    }

    pub fn dt_ms(&self) -> f64 {
        1000.0 / self.fps
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("input_gain", self.input_gain),
            ("sigma1", self.sigma1),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("tau3", self.tau3),
            ("tau4", self.tau4),
            ("eta", self.eta),
            ("sigma2", self.sigma2),
            ("sigma3", self.sigma3),
            ("fps", self.fps),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid_param(format!("{name} must be positive and finite, got {v}")));
            }
        }
        for (name, n) in [("n1", self.n1), ("n2", self.n2), ("n3", self.n3), ("n4", self.n4)] {
            if n < 1 {
                return Err(invalid_param(format!("{name} must be >= 1")));
            }
        }
        for (name, v) in [("alpha", self.alpha), ("lambda", self.lambda)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid_param(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        for (name, v) in [("a", self.a), ("b", self.b), ("e", self.e), ("rho", self.rho)] {
            if !v.is_finite() {
                return Err(invalid_param(format!("{name} must be finite")));
            }
        }
        if !(self.tail_eps > 0.0 && self.tail_eps < 1.0) {
            return Err(invalid_param("tail_eps must lie in (0,1)"));
        }
        Ok(())
    }

    pub fn inhibition_params(&self) -> InhibitionParams {
        InhibitionParams {
            a: self.a,
            b: self.b,
            e: self.e,
            rho: self.rho,
            sigma_center: self.sigma2,
            sigma_surround: self.sigma3,
        }
    }

    /// Builds every kernel the pipeline needs.
    pub fn kernels(&self) -> Result<ModelKernels> {
        self.validate()?;
        let dt = self.dt_ms();
        Ok(ModelKernels {
            input_gain: self.input_gain,
            retina: gaussian_kernel_2d(self.sigma1, None)?,
            bandpass: bandpass_kernel(
                GammaSpec {
                    order: self.n1,
                    tau_ms: self.tau1,
                },
                GammaSpec {
                    order: self.n2,
                    tau_ms: self.tau2,
                },
                dt,
                self.tail_eps,
            )?,
            off_delay: gamma_kernel(self.n3, self.tau3, dt, self.tail_eps)?,
            feedback_delay: gamma_kernel(self.n4, self.tau4, dt, self.tail_eps)?,
            neighbor: gaussian_kernel_2d(self.eta, None)?,
            inhibition: inhibition_kernel(self.inhibition_params(), None)?,
        })
    }
}

/// Precomputed kernels for one parameter set.
#[derive(Debug, Clone)]
pub struct ModelKernels {
    pub input_gain: f64,
    pub retina: SpatialKernel,
    pub bandpass: TemporalKernel,
    pub off_delay: TemporalKernel,
    pub feedback_delay: TemporalKernel,
    pub neighbor: SpatialKernel,
    pub inhibition: InhibitionKernel,
}

impl ModelKernels {
    /// Rows (or columns) a response at one pixel depends on in each
    /// direction: retina blur, neighbourhood pooling and lateral inhibition
    /// stacked.
    pub fn spatial_reach(&self) -> usize {
        self.retina.radius() + self.neighbor.radius() + self.inhibition.kernel().radius()
    }

    /// Frames before every delay line has been filled once.
    pub fn warmup_frames(&self) -> usize {
        self.bandpass.len() + self.off_delay.len() + self.feedback_delay.len()
    }
}
