//! Square spatial kernels and same-size correlation with replicate borders.

use crate::error::{invalid_param, Result};
use crate::frame::Frame;

/// Unnormalized closed-form isotropic Gaussian `exp(-r^2 / 2 s^2) / (2 pi s^2)`.
pub fn gaussian_2d(sigma: f64, x: f64, y: f64) -> f64 {
    let s2 = sigma * sigma;
    (-(x * x + y * y) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2)
}

/// Default support radius for a Gaussian of standard deviation `sigma`.
pub fn auto_radius(sigma: f64) -> usize {
    (3.0 * sigma).ceil() as usize
}

/// One rank-1 component `scale * column ⊗ row` of a kernel.
#[derive(Debug, Clone, PartialEq)]
struct SeparableTerm {
    scale: f64,
    row: Vec<f64>,
    column: Vec<f64>,
}

/// How a kernel is evaluated: a sum of separable terms plus a sparse
/// remainder. A dense kernel has no terms and every weight in `sparse`.
#[derive(Debug, Clone, PartialEq)]
struct ConvPlan {
    terms: Vec<SeparableTerm>,
    /// `(dx, dy, weight)` with offsets relative to the kernel centre.
    sparse: Vec<(isize, isize, f64)>,
}

/// `(2r+1) x (2r+1)` correlation kernel, row-major, centre at `(r, r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialKernel {
    radius: usize,
    weights: Vec<f64>,
    plan: ConvPlan,
}

impl SpatialKernel {
    /// Arbitrary dense kernel; evaluated with the direct double loop.
    pub fn dense(radius: usize, weights: Vec<f64>) -> Result<Self> {
        let side = 2 * radius + 1;
        if weights.len() != side * side {
            return Err(invalid_param(format!(
                "kernel of radius {radius} needs {} weights, got {}",
                side * side,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(invalid_param("kernel weights must be finite"));
        }
        let r = radius as isize;
        let sparse = weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(i, &w)| ((i % side) as isize - r, (i / side) as isize - r, w))
            .collect();
        Ok(Self {
            radius,
            weights,
            plan: ConvPlan {
                terms: Vec::new(),
                sparse,
            },
        })
    }

    pub fn identity() -> Self {
        Self::dense(0, vec![1.0]).expect("identity kernel is valid")
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.radius
    }

    #[inline]
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight at offset `(dx, dy)` from the centre.
    pub fn weight(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        assert!(dx.abs() <= r && dy.abs() <= r, "offset outside kernel");
        self.weights[((dy + r) as usize) * self.side() + (dx + r) as usize]
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// Sampled 2-D Gaussian renormalized to unit sum.
///
/// `radius = None` uses `ceil(3 sigma)`.
pub fn gaussian_kernel_2d(sigma: f64, radius: Option<usize>) -> Result<SpatialKernel> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid_param(format!("gaussian sigma must be positive, got {sigma}")));
    }
    let radius = radius.unwrap_or_else(|| auto_radius(sigma));
    let r = radius as isize;
    let profile: Vec<f64> = (-r..=r)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let psum: f64 = profile.iter().sum();
    let side = 2 * radius + 1;

    let mut weights = Vec::with_capacity(side * side);
    for dy in -r..=r {
        for dx in -r..=r {
            weights.push(gaussian_2d(sigma, dx as f64, dy as f64));
        }
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }

    let unit: Vec<f64> = profile.iter().map(|p| p / psum).collect();
    Ok(SpatialKernel {
        radius,
        weights,
        plan: ConvPlan {
            terms: vec![SeparableTerm {
                scale: 1.0,
                row: unit.clone(),
                column: unit,
            }],
            sparse: Vec::new(),
        },
    })
}

/// Constants of the centre-surround inhibition kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InhibitionParams {
    /// Gain on the positive (centre) lobe.
    pub a: f64,
    /// Gain on the negative (surround) lobe.
    pub b: f64,
    /// Surround weight.
    pub e: f64,
    /// Constant offset.
    pub rho: f64,
    pub sigma_center: f64,
    pub sigma_surround: f64,
}

/// Lateral inhibition kernel `A [g]^+ + B [g]^-` with
/// `g = G(sigma_center) - e G(sigma_surround) - rho`.
#[derive(Debug, Clone, PartialEq)]
pub struct InhibitionKernel {
    pub params: InhibitionParams,
    kernel: SpatialKernel,
}

impl InhibitionKernel {
    pub fn kernel(&self) -> &SpatialKernel {
        &self.kernel
    }

    /// Value of `g` at an offset, before the lobe gains are applied.
    pub fn profile(&self, dx: f64, dy: f64) -> f64 {
        let p = &self.params;
        gaussian_2d(p.sigma_center, dx, dy) - p.e * gaussian_2d(p.sigma_surround, dx, dy) - p.rho
    }
}

impl AsRef<SpatialKernel> for InhibitionKernel {
    fn as_ref(&self) -> &SpatialKernel {
        &self.kernel
    }
}

impl AsRef<SpatialKernel> for SpatialKernel {
    fn as_ref(&self) -> &SpatialKernel {
        self
    }
}

/// Builds the inhibition kernel without renormalization.
///
/// `radius = None` uses `ceil(3 sigma_surround)`.
pub fn inhibition_kernel(p: InhibitionParams, radius: Option<usize>) -> Result<InhibitionKernel> {
    let all = [p.a, p.b, p.e, p.rho, p.sigma_center, p.sigma_surround];
    if all.iter().any(|v| !v.is_finite()) {
        return Err(invalid_param("inhibition kernel parameters must be finite"));
    }
    if p.sigma_center <= 0.0 || p.sigma_surround <= 0.0 {
        return Err(invalid_param("inhibition kernel sigmas must be positive"));
    }
    let radius = radius.unwrap_or_else(|| auto_radius(p.sigma_surround));
    let r = radius as isize;
    let side = 2 * radius + 1;

    let g = |dx: isize, dy: isize| {
        let (x, y) = (dx as f64, dy as f64);
        gaussian_2d(p.sigma_center, x, y) - p.e * gaussian_2d(p.sigma_surround, x, y) - p.rho
    };

    let mut weights = Vec::with_capacity(side * side);
    let mut sparse = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let v = g(dx, dy);
            weights.push(p.a * v.max(0.0) + p.b * v.min(0.0));
            // A[g]^+ + B[g]^- = B g + (A - B)[g]^+
            if v > 0.0 && p.a != p.b {
                sparse.push((dx, dy, (p.a - p.b) * v));
            }
        }
    }

    let profile = |sigma: f64| -> Vec<f64> {
        (-r..=r)
            .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
            .collect()
    };
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut terms = Vec::new();
    if p.b != 0.0 {
        let center = profile(p.sigma_center);
        terms.push(SeparableTerm {
            scale: p.b / (two_pi * p.sigma_center * p.sigma_center),
            row: center.clone(),
            column: center,
        });
        if p.e != 0.0 {
            let surround = profile(p.sigma_surround);
            terms.push(SeparableTerm {
                scale: -p.b * p.e / (two_pi * p.sigma_surround * p.sigma_surround),
                row: surround.clone(),
                column: surround,
            });
        }
        if p.rho != 0.0 {
            terms.push(SeparableTerm {
                scale: -p.b * p.rho,
                row: vec![1.0; side],
                column: vec![1.0; side],
            });
        }
    }

    Ok(InhibitionKernel {
        params: p,
        kernel: SpatialKernel {
            radius,
            weights,
            plan: ConvPlan { terms, sparse },
        },
    })
}

/// Copy of `frame` extended by `r` pixels on every side with edge values.
fn replicate_pad(frame: &Frame, r: usize) -> (Vec<f64>, usize) {
    let (w, h) = frame.dims();
    let pw = w + 2 * r;
    let ph = h + 2 * r;
    let mut out = Vec::with_capacity(pw * ph);
    for py in 0..ph {
        let y = py.saturating_sub(r).min(h - 1);
        let row = frame.row(y);
        let left = row[0];
        let right = row[w - 1];
        out.extend(std::iter::repeat(left).take(r));
        out.extend_from_slice(row);
        out.extend(std::iter::repeat(right).take(r));
    }
    (out, pw)
}

/// Same-size correlation with replicate-edge padding.
///
/// Kernels with a separable decomposition are evaluated term by term;
/// the result equals the direct double loop up to rounding.
pub fn conv2_same<K: AsRef<SpatialKernel>>(frame: &Frame, kernel: K) -> Result<Frame> {
    let kernel = kernel.as_ref();
    let (w, h) = frame.dims();
    if frame.is_empty() {
        return Err(invalid_param("cannot convolve an empty frame"));
    }
    let side = kernel.side();
    if side > w || side > h {
        return Err(invalid_param(format!(
            "kernel {side}x{side} larger than frame {w}x{h}"
        )));
    }
    let r = kernel.radius;
    if r == 0 && kernel.plan.terms.is_empty() {
        let k = kernel.weights[0];
        return Ok(frame.map(|v| k * v));
    }
    let (padded, pw) = replicate_pad(frame, r);
    let ph = h + 2 * r;
    let mut out = vec![0.0; w * h];

    let mut tmp = vec![0.0; w * ph];
    for term in &kernel.plan.terms {
        // horizontal pass over every padded row
        tmp.iter_mut().for_each(|v| *v = 0.0);
        for py in 0..ph {
            let src = &padded[py * pw..(py + 1) * pw];
            let dst = &mut tmp[py * w..(py + 1) * w];
            for (i, &c) in term.row.iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                for (d, &s) in dst.iter_mut().zip(&src[i..i + w]) {
                    *d += c * s;
                }
            }
        }
        // vertical pass
        for y in 0..h {
            let dst = &mut out[y * w..(y + 1) * w];
            for (j, &c) in term.column.iter().enumerate() {
                let c = c * term.scale;
                if c == 0.0 {
                    continue;
                }
                let src = &tmp[(y + j) * w..(y + j + 1) * w];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += c * s;
                }
            }
        }
    }

    for &(dx, dy, c) in &kernel.plan.sparse {
        let ox = (dx + r as isize) as usize;
        let oy = (dy + r as isize) as usize;
        for y in 0..h {
            let src = &padded[(y + oy) * pw + ox..(y + oy) * pw + ox + w];
            let dst = &mut out[y * w..(y + 1) * w];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += c * s;
            }
        }
    }

    Frame::from_vec(w, h, out)
}
