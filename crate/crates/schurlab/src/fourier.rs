//! Fourier-type expansion of homogeneous symbols.
//!
//! An even 0-homogeneous symbol vanishing near the hyperplanes xi_k = 0
//! (k < n) is determined by its restriction to the chain
//! (1, s_1, s_1 s_2, ..., s_1...s_{n-1}); the restriction psi is compactly
//! supported. Substituting s_k = e^{t_k} turns psi into a function ghat
//! supported in a half-infinite box and decaying at least like e^{t_1+...}
//! toward -infinity, so its inverse Fourier transform g is rapidly
//! decaying and
//!
//! ```text
//! phi(xi) = sum over parity patterns eps of (prod_i sign(xi_i)^{eps_i})
//!           * integral g_eps(s) |xi_1|^{-i s_1} |xi_2|^{i(s_1-s_2)} ...
//!             |xi_n|^{i s_{n-1}} ds
//! ```
//!
//! A general symbol first splits into its 2^n per-variable parity
//! components; the even-ified component feeds the chain construction and
//! the sign prefactor restores the parities. Everything here is sampled:
//! ghat on a uniform t-grid, g by a hand-rolled radix-2 FFT, and the
//! reconstruction integral by the trapezoid rule on the dual s-grid,
//! which on grid points inverts the transform exactly.
//!
//! The module also hosts a sampled seminorm estimator for two-variable
//! symbols: the sup of max(|phi|, |lambda - mu| (|d_lambda phi| +
//! |d_mu phi|)), the quantity controlling Schur multiplier norms of
//! two-variable symbols.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::divdiff::{divdiff_eval, NodeVector, SmoothFunction};
use crate::partition::smooth_step;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FourierError {
    #[error("symbol does not vanish inside its declared margin on axis {axis}")]
    SupportViolation { axis: usize },
    #[error("transform boundary carries {boundary_ratio:.2e} of the peak; enlarge the grid")]
    GridTooCoarse { boundary_ratio: f64 },
    #[error("coordinate {0} is zero")]
    ZeroCoordinate(usize),
}

/// A 0-homogeneous symbol on R^n minus the coordinate hyperplanes.
///
/// `margins()[k-1]` is the declared support margin of axis k, k = 1..n-1:
/// the symbol vanishes wherever |xi_k| < margin * max_b |xi_b|. The last
/// axis needs no margin; the symbol only vanishes on xi_n = 0 itself.
pub trait HomogeneousSymbol: Sync {
    fn n(&self) -> usize;
    fn eval(&self, xi: &[f64]) -> Complex64;
    fn margins(&self) -> Vec<f64>;
}

/// Smooth plateau window on the half-line: 0 outside [rise_start,
/// fall_end], 1 on [rise_end, fall_start], monotone and C-infinity in
/// between (flat to all orders at the edges).
#[derive(Debug, Clone, Copy)]
pub struct Window {
    pub rise_start: f64,
    pub rise_end: f64,
    pub fall_start: f64,
    pub fall_end: f64,
}

impl Window {
    pub fn eval(&self, r: f64) -> f64 {
        let up = smooth_step((r - self.rise_start) / (self.rise_end - self.rise_start));
        let down = smooth_step((self.fall_end - r) / (self.fall_end - self.fall_start));
        up * down
    }
}

/// Even symbol built from windows in the consecutive absolute ratios
/// |xi_{k+1}| / |xi_k|. With the last window rising from 0 the symbol
/// vanishes on xi_n = 0 but its support touches that hyperplane, the
/// interesting configuration for the expansion.
#[derive(Debug, Clone)]
pub struct RatioBump {
    windows: Vec<Window>,
}

impl RatioBump {
    /// One window per ratio axis; all windows except the last must have
    /// rise_start > 0 so the margins on axes 1..n-1 are positive.
    pub fn new(windows: Vec<Window>) -> Self {
        assert!(!windows.is_empty());
        for w in &windows {
            assert!(w.rise_start >= 0.0 && w.rise_start < w.rise_end);
            assert!(w.rise_end <= w.fall_start && w.fall_start < w.fall_end);
        }
        for w in &windows[..windows.len() - 1] {
            assert!(w.rise_start > 0.0, "inner windows need a positive lower edge");
        }
        Self { windows }
    }
}

impl HomogeneousSymbol for RatioBump {
    fn n(&self) -> usize {
        self.windows.len() + 1
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        let n = self.n();
        assert_eq!(xi.len(), n);
        let mut prod = 1.0;
        for (k, w) in self.windows.iter().enumerate() {
            if xi[k] == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            prod *= w.eval((xi[k + 1] / xi[k]).abs());
            if prod == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
        }
        Complex64::new(prod, 0.0)
    }

    fn margins(&self) -> Vec<f64> {
        // on the support every ratio r_j lies in [rise_start_j, fall_end_j],
        // so max_b |xi_b| / |xi_k| is bounded by walking the ratio chain
        let m = self.windows.len();
        (0..m)
            .map(|c| {
                let mut bound = 1.0f64;
                let mut acc = 1.0;
                for j in c..m {
                    acc *= self.windows[j].fall_end;
                    bound = bound.max(acc);
                }
                let mut acc = 1.0;
                for j in (0..c).rev() {
                    acc /= self.windows[j].rise_start;
                    bound = bound.max(acc);
                }
                1.0 / bound
            })
            .collect()
    }
}

/// Multiplies a base symbol by a product of coordinate signs, flipping
/// chosen parities; parity[i] = 1 makes variable i odd.
#[derive(Debug, Clone)]
pub struct SignedSymbol<S> {
    pub base: S,
    pub parity: Vec<u8>,
}

impl<S: HomogeneousSymbol> HomogeneousSymbol for SignedSymbol<S> {
    fn n(&self) -> usize {
        self.base.n()
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        let mut sign = 1.0;
        for (x, &p) in xi.iter().zip(&self.parity) {
            if p == 1 && *x < 0.0 {
                sign = -sign;
            }
        }
        self.base.eval(xi) * sign
    }

    fn margins(&self) -> Vec<f64> {
        self.base.margins()
    }
}

/// Sum of two symbols of the same dimension.
#[derive(Debug, Clone)]
pub struct SymbolSum<A, B>(pub A, pub B);

impl<A: HomogeneousSymbol, B: HomogeneousSymbol> HomogeneousSymbol for SymbolSum<A, B> {
    fn n(&self) -> usize {
        self.0.n()
    }

    fn eval(&self, xi: &[f64]) -> Complex64 {
        self.0.eval(xi) + self.1.eval(xi)
    }

    fn margins(&self) -> Vec<f64> {
        self.0
            .margins()
            .iter()
            .zip(self.1.margins())
            .map(|(a, b)| a.min(b))
            .collect()
    }
}

/// Parity component eps of a symbol: the signed average over all 2^n
/// coordinate reflections; even in variable i when eps_i = 0, odd when 1.
pub fn parity_component(phi: &dyn HomogeneousSymbol, eps: &[u8], xi: &[f64]) -> Complex64 {
    let n = phi.n();
    assert_eq!(eps.len(), n);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut flipped = vec![0.0; n];
    for mask in 0..(1usize << n) {
        let mut sign = 1.0;
        for i in 0..n {
            if mask & (1 << i) != 0 {
                flipped[i] = -xi[i];
                if eps[i] == 1 {
                    sign = -sign;
                }
            } else {
                flipped[i] = xi[i];
            }
        }
        acc += phi.eval(&flipped) * sign;
    }
    acc / (1u64 << n) as f64
}

/// The compactly supported restriction of an even homogeneous symbol to
/// the ratio chain.
pub struct Psi<'a> {
    phi: &'a dyn HomogeneousSymbol,
    box_half_widths: Vec<f64>,
}

impl<'a> Psi<'a> {
    /// psi(s) = phi(1, s_1, s_1 s_2, ..., s_1...s_{n-1}).
    pub fn eval(&self, s: &[f64]) -> Complex64 {
        let n = self.phi.n();
        assert_eq!(s.len(), n - 1);
        let mut xi = Vec::with_capacity(n);
        xi.push(1.0);
        let mut acc = 1.0;
        for &v in s {
            acc *= v;
            xi.push(acc);
        }
        self.phi.eval(&xi)
    }

    /// Half-widths of the support box: psi vanishes when |s_k| exceeds
    /// the k-th width.
    pub fn support_box(&self) -> &[f64] {
        &self.box_half_widths
    }
}

/// Builds the chain restriction after checking the declared margins on a
/// deterministic sample: points violating the margin of some axis must
/// evaluate to zero.
pub fn compress_to_psi(phi: &dyn HomogeneousSymbol) -> Result<Psi<'_>, FourierError> {
    let n = phi.n();
    let margins = phi.margins();
    assert_eq!(margins.len(), n - 1);
    for (k0, &m) in margins.iter().enumerate() {
        assert!(m > 0.0, "margins must be positive");
        // low-discrepancy-ish deterministic probe of the violating region;
        // the squeezed coordinate is scaled against the other coordinates
        // so it stays below the margin after the overwrite
        for probe in 0..200 {
            let golden = 0.618_033_988_749_894_9_f64;
            let mut xi: Vec<f64> = (0..n)
                .map(|i| {
                    let u = ((probe * n + i) as f64 * golden).fract();
                    2.0 * u - 1.0
                })
                .collect();
            let others = xi
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != k0)
                .map(|(_, x)| x.abs())
                .fold(0.0f64, f64::max);
            if others == 0.0 {
                continue;
            }
            let u = ((probe as f64 + 0.5) * golden).fract();
            xi[k0] = (2.0 * u - 1.0) * 0.5 * m * others;
            if phi.eval(&xi).norm() > 1e-12 {
                return Err(FourierError::SupportViolation { axis: k0 + 1 });
            }
        }
    }
    let box_half_widths = margins.iter().map(|m| 1.0 / m).collect();
    Ok(Psi { phi, box_half_widths })
}

/// In-place radix-2 FFT; forward uses the kernel e^{-2 pi i jm/N},
/// inverse includes the 1/N factor.
pub fn fft_in_place(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "radix-2 transform needs a power-of-two length");
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let dir = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = dir * 2.0 * PI / len as f64;
        let wlen = Complex64::new(ang.cos(), ang.sin());
        for start in (0..n).step_by(len) {
            let mut w = Complex64::new(1.0, 0.0);
            for off in 0..len / 2 {
                let u = buf[start + off];
                let v = buf[start + off + len / 2] * w;
                buf[start + off] = u + v;
                buf[start + off + len / 2] = u - v;
                w *= wlen;
            }
        }
        len <<= 1;
    }
    if inverse {
        let scale = 1.0 / n as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

/// Uniform grid on one t-axis.
#[derive(Debug, Clone)]
pub struct GridAxis {
    pub t0: f64,
    pub step: f64,
    pub len: usize,
}

/// One parity component of the expansion: ghat samples on the t-grid and
/// g samples on the dual s-grid (ascending physical order).
#[derive(Debug, Clone)]
pub struct WeightComponent {
    pub ghat: Vec<Complex64>,
    pub g: Vec<Complex64>,
}

/// Sampled expansion weights of a symbol, all parity components together.
#[derive(Debug, Clone)]
pub struct FourierWeights {
    n: usize,
    t_axes: Vec<GridAxis>,
    s_axes: Vec<Vec<f64>>,
    components: BTreeMap<Vec<u8>, WeightComponent>,
}

/// Relative boundary mass above which the grid is rejected.
pub const BOUNDARY_THRESHOLD: f64 = 1e-10;

/// Default half-width of the t-grid toward -infinity. The e^t decay of
/// ghat reaches the boundary threshold only around t = -23, so 20 is too
/// short for linearly vanishing symbols; 26 leaves a safety factor.
pub const DEFAULT_HALF_WIDTH: f64 = 26.0;

/// Default points per axis: 4096 for n = 2, 512 per axis for n = 3.
pub fn default_points_per_axis(n: usize) -> usize {
    if n <= 2 {
        4096
    } else {
        512
    }
}

fn for_each_multi_index(dims: &[usize], mut body: impl FnMut(&[usize], usize)) {
    let total: usize = dims.iter().product();
    let mut idx = vec![0usize; dims.len()];
    for flat in 0..total {
        body(&idx, flat);
        for d in (0..dims.len()).rev() {
            idx[d] += 1;
            if idx[d] < dims[d] {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Samples ghat for every parity pattern on [-L, K]^{n-1}, K from the
/// margins, and produces g by FFT. The step is at most `h` (the span is
/// rounded up to a power-of-two point count).
pub fn fourier_weights(
    phi: &dyn HomogeneousSymbol,
    h: f64,
    l: f64,
) -> Result<FourierWeights, FourierError> {
    assert!(h > 0.0 && l > 0.0);
    let n = phi.n();
    let dim = n - 1;
    let eps_min = phi.margins().iter().cloned().fold(f64::INFINITY, f64::min);
    let k_edge = (1.0 / eps_min).ln() + 2.0;
    let span = l + k_edge;
    let len = ((span / h).ceil() as usize).next_power_of_two();
    let step = span / len as f64;
    let axes: Vec<GridAxis> = (0..dim).map(|_| GridAxis { t0: -l, step, len }).collect();
    let dims: Vec<usize> = vec![len; dim];
    let total: usize = dims.iter().product();

    // raw symbol values on the chain grid, one per sign reflection
    let patterns: Vec<Vec<u8>> = (0..(1usize << n))
        .map(|mask| (0..n).map(|i| ((mask >> i) & 1) as u8).collect())
        .collect();
    let mut raw: Vec<Vec<Complex64>> = vec![Vec::with_capacity(total); 1 << n];
    let mut chain = vec![0.0f64; n];
    let mut flipped = vec![0.0f64; n];
    for_each_multi_index(&dims, |idx, _flat| {
        chain[0] = 1.0;
        let mut acc = 0.0;
        for d in 0..dim {
            acc += axes[d].t0 + axes[d].step * idx[d] as f64;
            chain[d + 1] = acc.exp();
        }
        for (mask, store) in raw.iter_mut().enumerate() {
            for i in 0..n {
                flipped[i] = if mask & (1 << i) != 0 { -chain[i] } else { chain[i] };
            }
            store.push(phi.eval(&flipped));
        }
    });

    let mut components = BTreeMap::new();
    for eps in &patterns {
        // signed average over reflections gives the parity component on
        // the positive chain
        let mut ghat = vec![Complex64::new(0.0, 0.0); total];
        for (mask, store) in raw.iter().enumerate() {
            let mut sign = 1.0;
            for i in 0..n {
                if mask & (1 << i) != 0 && eps[i] == 1 {
                    sign = -sign;
                }
            }
            for (dst, src) in ghat.iter_mut().zip(store) {
                *dst += *src * sign;
            }
        }
        let scale = 1.0 / (1u64 << n) as f64;
        for v in ghat.iter_mut() {
            *v *= scale;
        }

        let peak = ghat.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        if peak > 0.0 {
            let mut boundary = 0.0f64;
            for_each_multi_index(&dims, |idx, flat| {
                if idx.iter().zip(&dims) .any(|(&i, &d)| i == 0 || i == d - 1) {
                    boundary = boundary.max(ghat[flat].norm());
                }
            });
            let ratio = boundary / peak;
            if ratio > BOUNDARY_THRESHOLD {
                return Err(FourierError::GridTooCoarse { boundary_ratio: ratio });
            }
        }

        // g = (2 pi)^{-dim} integral ghat e^{-i s t} dt, discretized per
        // axis by the forward FFT plus the grid phase
        let mut g = ghat.clone();
        fft_along_axes(&mut g, &dims);
        let s_axes: Vec<Vec<f64>> = axes
            .iter()
            .map(|ax| {
                let ds = 2.0 * PI / (ax.step * ax.len as f64);
                (0..ax.len)
                    .map(|m| {
                        let shifted = m as isize - (ax.len / 2) as isize;
                        ds * shifted as f64
                    })
                    .collect()
            })
            .collect();
        let mut shifted = vec![Complex64::new(0.0, 0.0); total];
        for_each_multi_index(&dims, |idx, flat| {
            // reorder DFT bins to ascending s and attach the phase and
            // measure factors
            let mut src_flat = 0usize;
            let mut phase = 0.0;
            let mut measure = 1.0;
            for d in 0..dim {
                let half = dims[d] / 2;
                let m_signed = idx[d] as isize - half as isize;
                let src = m_signed.rem_euclid(dims[d] as isize) as usize;
                src_flat = src_flat * dims[d] + src;
                let s = s_axes[d][idx[d]];
                phase += -s * axes[d].t0;
                measure *= axes[d].step / (2.0 * PI);
            }
            shifted[flat] =
                g[src_flat] * Complex64::new(0.0, phase).exp() * measure;
        });
        components.insert(eps.clone(), WeightComponent { ghat, g: shifted });
    }

    let s_axes: Vec<Vec<f64>> = axes
        .iter()
        .map(|ax| {
            let ds = 2.0 * PI / (ax.step * ax.len as f64);
            (0..ax.len)
                .map(|m| ds * (m as isize - (ax.len / 2) as isize) as f64)
                .collect()
        })
        .collect();
    Ok(FourierWeights { n, t_axes: axes, s_axes, components })
}

fn fft_along_axes(data: &mut [Complex64], dims: &[usize]) {
    let total: usize = dims.iter().product();
    for (axis, &len) in dims.iter().enumerate() {
        let inner: usize = dims[axis + 1..].iter().product();
        let outer = total / (len * inner);
        let mut line = vec![Complex64::new(0.0, 0.0); len];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * len * inner + i;
                for j in 0..len {
                    line[j] = data[base + j * inner];
                }
                fft_in_place(&mut line, false);
                for j in 0..len {
                    data[base + j * inner] = line[j];
                }
            }
        }
    }
}

impl FourierWeights {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t_axes(&self) -> &[GridAxis] {
        &self.t_axes
    }

    pub fn s_axes(&self) -> &[Vec<f64>] {
        &self.s_axes
    }

    pub fn component(&self, eps: &[u8]) -> Option<&WeightComponent> {
        self.components.get(eps)
    }

    pub fn components(&self) -> impl Iterator<Item = (&Vec<u8>, &WeightComponent)> {
        self.components.iter()
    }

    /// Trapezoid value of integral |g_eps(s)| |s_1| ds over the grid, the
    /// integrand controlling downstream norm bounds.
    pub fn weighted_mass(&self, eps: &[u8]) -> f64 {
        let comp = &self.components[eps];
        let dims: Vec<usize> = self.s_axes.iter().map(|a| a.len()).collect();
        let ds: f64 = self
            .t_axes
            .iter()
            .map(|ax| 2.0 * PI / (ax.step * ax.len as f64))
            .product();
        let mut acc = 0.0;
        for_each_multi_index(&dims, |idx, flat| {
            let s1 = self.s_axes[0][idx[0]];
            acc += comp.g[flat].norm() * s1.abs();
        });
        acc * ds
    }
}

/// Evaluates the sampled expansion at xi, all coordinates nonzero: sign
/// prefactors times the trapezoid quadrature of each component.
pub fn reconstruct(w: &FourierWeights, xi: &[f64]) -> Result<Complex64, FourierError> {
    let n = w.n;
    assert_eq!(xi.len(), n);
    for (i, &x) in xi.iter().enumerate() {
        if x == 0.0 {
            return Err(FourierError::ZeroCoordinate(i));
        }
    }
    let dim = n - 1;
    let t_star: Vec<f64> = (0..dim).map(|k| (xi[k + 1] / xi[k]).abs().ln()).collect();
    // per-axis phase tables e^{i s t*}
    let phases: Vec<Vec<Complex64>> = (0..dim)
        .map(|d| {
            w.s_axes[d]
                .iter()
                .map(|&s| Complex64::new(0.0, s * t_star[d]).exp())
                .collect()
        })
        .collect();
    let ds: f64 = w
        .t_axes
        .iter()
        .map(|ax| 2.0 * PI / (ax.step * ax.len as f64))
        .product();
    let dims: Vec<usize> = w.s_axes.iter().map(|a| a.len()).collect();

    let mut total = Complex64::new(0.0, 0.0);
    for (eps, comp) in &w.components {
        let mut sign = 1.0;
        for i in 0..n {
            if eps[i] == 1 && xi[i] < 0.0 {
                sign = -sign;
            }
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for_each_multi_index(&dims, |idx, flat| {
            let mut phase = phases[0][idx[0]];
            for d in 1..dim {
                phase *= phases[d][idx[d]];
            }
            acc += comp.g[flat] * phase;
        });
        total += acc * ds * sign;
    }
    Ok(total)
}

/// |reconstruct - phi| at xi.
pub fn reconstruction_error(
    phi: &dyn HomogeneousSymbol,
    w: &FourierWeights,
    xi: &[f64],
) -> Result<f64, FourierError> {
    Ok((reconstruct(w, xi)? - phi.eval(xi)).norm())
}

/// Grid + complex samples of every component, binary-free.
pub fn export_weights_json(w: &FourierWeights) -> serde_json::Value {
    let axes: Vec<serde_json::Value> = w
        .t_axes
        .iter()
        .map(|ax| serde_json::json!({ "t0": ax.t0, "step": ax.step, "len": ax.len }))
        .collect();
    let components: Vec<serde_json::Value> = w
        .components
        .iter()
        .map(|(eps, comp)| {
            let re: Vec<f64> = comp.g.iter().map(|v| v.re).collect();
            let im: Vec<f64> = comp.g.iter().map(|v| v.im).collect();
            serde_json::json!({ "eps": eps, "re": re, "im": im })
        })
        .collect();
    serde_json::json!({
        "n": w.n,
        "t_axes": axes,
        "s_axes": w.s_axes,
        "components": components,
    })
}

// ---------------------------------------------------------------------------
// Sampled seminorm for two-variable symbols.

/// Sampling layout for the seminorm estimator.
#[derive(Debug, Clone)]
pub struct SamplingSpec {
    pub range: (f64, f64),
    pub points_per_axis: usize,
    /// finite-difference step as a fraction of |lambda - mu|
    pub fd_step_rel: f64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        Self { range: (-2.0, 2.0), points_per_axis: 161, fd_step_rel: 1e-3 }
    }
}

#[derive(Debug, Clone)]
pub struct SeminormEstimate {
    pub value: f64,
    pub sup_abs: f64,
    pub sup_gradient_term: f64,
    pub samples: usize,
}

/// Sampled sup of max(|phi|, |lambda-mu| (|d_lambda phi| + |d_mu phi|)).
/// The finite-difference step shrinks with the distance to the diagonal,
/// matching the singular scaling the seminorm is built around.
pub fn hms_seminorm(
    phi: &dyn Fn(f64, f64) -> Complex64,
    spec: &SamplingSpec,
) -> SeminormEstimate {
    let (lo, hi) = spec.range;
    let m = spec.points_per_axis;
    let span = hi - lo;
    let mut sup_abs = 0.0f64;
    let mut sup_grad = 0.0f64;
    let mut samples = 0usize;
    for a in 0..m {
        let lambda = lo + span * (a as f64 + 0.5) / m as f64;
        for b in 0..m {
            let mu = lo + span * (b as f64 + 0.5) / m as f64;
            let gap = (lambda - mu).abs();
            if gap < 1e-6 * span {
                continue;
            }
            samples += 1;
            sup_abs = sup_abs.max(phi(lambda, mu).norm());
            let h = spec.fd_step_rel * gap;
            let dl = (phi(lambda + h, mu) - phi(lambda - h, mu)).norm() / (2.0 * h);
            let dm = (phi(lambda, mu + h) - phi(lambda, mu - h)).norm() / (2.0 * h);
            sup_grad = sup_grad.max(gap * (dl + dm));
        }
    }
    SeminormEstimate {
        value: sup_abs.max(sup_grad),
        sup_abs,
        sup_gradient_term: sup_grad,
        samples,
    }
}

/// The divided difference of f with node multiplicities (a, b), viewed as
/// a two-variable symbol off the diagonal.
pub fn divided_difference_symbol<'a>(
    f: &'a dyn SmoothFunction,
    mult: (u32, u32),
) -> impl Fn(f64, f64) -> Complex64 + 'a {
    move |lambda, mu| {
        let nodes = NodeVector::from_blocks(&[(lambda, mult.0), (mu, mult.1)])
            .expect("caller keeps the nodes separated");
        Complex64::new(divdiff_eval(f, &nodes).expect("derivatives available"), 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divdiff::make_abs_power;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn bump2() -> RatioBump {
        // rises from 0 (support touches xi_2 = 0), plateau [0.5, 2], gone
        // beyond 4
        RatioBump::new(vec![Window {
            rise_start: 0.0,
            rise_end: 0.5,
            fall_start: 2.0,
            fall_end: 4.0,
        }])
    }

    fn bump3() -> RatioBump {
        RatioBump::new(vec![
            Window { rise_start: 0.25, rise_end: 0.5, fall_start: 2.0, fall_end: 4.0 },
            Window { rise_start: 0.0, rise_end: 0.5, fall_start: 2.0, fall_end: 4.0 },
        ])
    }

    #[test]
    fn fft_inverts_and_matches_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut buf: Vec<Complex64> = (0..64)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let orig = buf.clone();
        fft_in_place(&mut buf, false);
        // spot-check one bin against the direct sum
        let k = 5;
        let direct: Complex64 = orig
            .iter()
            .enumerate()
            .map(|(j, v)| {
                v * Complex64::new(0.0, -2.0 * PI * (j * k) as f64 / 64.0).exp()
            })
            .sum();
        assert!((buf[k] - direct).norm() < 1e-10);
        fft_in_place(&mut buf, true);
        for (a, b) in buf.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn homogeneity_of_test_symbols() {
        let phi = bump2();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let xi = [rng.gen_range(0.2..2.0), rng.gen_range(-2.0..2.0)];
            let mu = rng.gen_range(0.1..5.0);
            let scaled = [mu * xi[0], mu * xi[1]];
            assert!((phi.eval(&xi) - phi.eval(&scaled)).norm() < 1e-14);
        }
    }

    #[test]
    fn psi_box_and_reconstruction() {
        let phi = bump2();
        let psi = compress_to_psi(&phi).unwrap();
        assert!((psi.support_box()[0] - 4.0).abs() < 1e-12);
        assert_eq!(psi.eval(&[4.5]).norm(), 0.0);
        assert_eq!(psi.eval(&[-4.5]).norm(), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let xi = [rng.gen_range(0.05f64..2.0), rng.gen_range(-2.0..2.0)];
            let direct = phi.eval(&xi);
            let via = psi.eval(&[xi[1] / xi[0]]);
            assert!((direct - via).norm() < 1e-12);
        }
        // three variables: psi is evaluated on the full chain
        let phi3 = bump3();
        let psi3 = compress_to_psi(&phi3).unwrap();
        for _ in 0..1000 {
            let xi = [
                rng.gen_range(0.05f64..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            if xi[1].abs() < 0.01 {
                continue;
            }
            let direct = phi3.eval(&xi);
            let via = psi3.eval(&[xi[1] / xi[0], xi[2] / xi[1]]);
            assert!((direct - via).norm() < 1e-12);
        }
    }

    #[test]
    fn overdeclared_margin_is_caught() {
        struct Liar(RatioBump);
        impl HomogeneousSymbol for Liar {
            fn n(&self) -> usize {
                self.0.n()
            }
            fn eval(&self, xi: &[f64]) -> Complex64 {
                self.0.eval(xi)
            }
            fn margins(&self) -> Vec<f64> {
                vec![0.9] // true margin is 1/4
            }
        }
        let liar = Liar(bump2());
        let r = compress_to_psi(&liar);
        assert!(matches!(r, Err(FourierError::SupportViolation { axis: 1 })));
    }

    #[test]
    fn parity_components_sum_and_vanish() {
        let even = bump2();
        let odd = SignedSymbol { base: bump2(), parity: vec![1, 1] };
        let mixed = SymbolSum(even, odd);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let patterns: Vec<Vec<u8>> =
            (0..4).map(|m| vec![(m & 1) as u8, ((m >> 1) & 1) as u8]).collect();
        for _ in 0..200 {
            let xi: [f64; 2] = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            if xi[0].abs() < 0.05 {
                continue;
            }
            let total: Complex64 =
                patterns.iter().map(|e| parity_component(&mixed, e, &xi)).sum();
            assert!((total - mixed.eval(&xi)).norm() < 1e-12);
            // pure-parity inputs put everything in one component
            assert!(parity_component(&mixed.1, &[0, 1], &xi).norm() < 1e-13);
            assert!(parity_component(&mixed.1, &[1, 0], &xi).norm() < 1e-13);
            assert!(parity_component(&mixed.1, &[0, 0], &xi).norm() < 1e-13);
        }
    }

    #[test]
    fn grid_too_coarse_fires_on_short_half_width() {
        let phi = bump2();
        // at t = -2 the rising edge still carries mass far above threshold
        let r = fourier_weights(&phi, 0.05, 2.0);
        assert!(matches!(r, Err(FourierError::GridTooCoarse { .. })));
    }

    #[test]
    fn interpolation_recovers_ghat_on_grid() {
        let phi = bump2();
        let w = fourier_weights(&phi, 0.02, DEFAULT_HALF_WIDTH).unwrap();
        let comp = w.component(&[0, 0]).unwrap();
        let ax = &w.t_axes()[0];
        let ds = 2.0 * PI / (ax.step * ax.len as f64);
        // trapezoid of g e^{i s t_j} over the s-grid must return ghat_j
        for j in [0usize, ax.len / 3, ax.len / 2, ax.len - 1] {
            let t = ax.t0 + ax.step * j as f64;
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &s) in w.s_axes()[0].iter().enumerate() {
                acc += comp.g[m] * Complex64::new(0.0, s * t).exp();
            }
            acc *= ds;
            assert!((acc - comp.ghat[j]).norm() < 1e-9, "node {j}");
        }
    }

    #[test]
    fn reconstruction_matches_symbol() {
        let even = bump2();
        let odd = SignedSymbol { base: bump2(), parity: vec![1, 1] };
        let phi = SymbolSum(even, odd);
        let w = fourier_weights(&phi, 0.02, DEFAULT_HALF_WIDTH).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let xi = [
                rng.gen_range(0.3..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
                rng.gen_range(0.3..1.5) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 },
            ];
            worst = worst.max(reconstruction_error(&phi, &w, &xi).unwrap());
        }
        assert!(worst < 1e-3, "worst reconstruction error {worst}");
        // homogeneity of the reconstruction along rays
        let xi = [0.7, -1.1];
        let a = reconstruct(&w, &xi).unwrap();
        let b = reconstruct(&w, &[2.5 * xi[0], 2.5 * xi[1]]).unwrap();
        assert!((a - b).norm() < 1e-9);
        // odd part flips with the first coordinate's sign
        let w_odd =
            fourier_weights(&SignedSymbol { base: bump2(), parity: vec![1, 1] }, 0.02, 26.0)
                .unwrap();
        let p = reconstruct(&w_odd, &[0.8, 1.2]).unwrap();
        let q = reconstruct(&w_odd, &[-0.8, 1.2]).unwrap();
        assert!((p + q).norm() < 1e-9);
        assert!(matches!(
            reconstruct(&w, &[0.0, 1.0]),
            Err(FourierError::ZeroCoordinate(0))
        ));
    }

    #[test]
    fn grid_refinement_improves_reconstruction() {
        let phi = bump2();
        let xi = [1.0, 1.3];
        let coarse = fourier_weights(&phi, 0.08, DEFAULT_HALF_WIDTH).unwrap();
        let fine = fourier_weights(&phi, 0.04, DEFAULT_HALF_WIDTH).unwrap();
        let e_coarse = reconstruction_error(&phi, &coarse, &xi).unwrap();
        let e_fine = reconstruction_error(&phi, &fine, &xi).unwrap();
        assert!(e_fine <= 2.0 * e_coarse + 1e-12, "{e_coarse} -> {e_fine}");
        // enlarging the half-width changes values below the quadrature floor
        let wide = fourier_weights(&phi, 0.04, 2.0 * DEFAULT_HALF_WIDTH).unwrap();
        let a = reconstruct(&fine, &xi).unwrap();
        let b = reconstruct(&wide, &xi).unwrap();
        assert!((a - b).norm() < 1e-6);
    }

    #[test]
    fn weighted_mass_is_finite() {
        let phi = bump2();
        let w = fourier_weights(&phi, 0.02, DEFAULT_HALF_WIDTH).unwrap();
        let mass = w.weighted_mass(&[0, 0]);
        assert!(mass.is_finite());
        assert!(mass > 0.0 && mass < 100.0, "mass {mass}");
    }

    #[test]
    fn three_variable_pipeline_runs() {
        let phi = bump3();
        let w = fourier_weights(&phi, 0.4, 12.0).unwrap();
        let xi = [1.0, 1.1, 0.9];
        let err = reconstruction_error(&phi, &w, &xi).unwrap();
        assert!(err < 5e-2, "reconstruction error {err}");
    }

    #[test]
    fn seminorm_constant_and_imaginary_power() {
        let spec = SamplingSpec::default();
        let c = hms_seminorm(&|_, _| Complex64::new(-1.5, 0.0), &spec);
        assert!((c.value - 1.5).abs() < 1e-12);
        for s in [1.0f64, -1.0, 4.0, -4.0, 16.0, -16.0] {
            let phi = move |l: f64, m: f64| {
                Complex64::new(0.0, s * (l - m).abs().ln()).exp()
            };
            let est = hms_seminorm(&phi, &spec);
            // |phi| = 1 and the gradient term is 2|s| exactly
            let ratio = est.value / s.abs();
            assert!(ratio > 1.8 && ratio < 2.2, "s={s} ratio={ratio}");
        }
    }

    #[test]
    fn seminorm_of_divided_difference_symbol() {
        let f = make_abs_power(3);
        let phi = divided_difference_symbol(&f, (2, 2));
        let est = hms_seminorm(&phi, &SamplingSpec::default());
        // third derivative of the cubic absolute power is +-6; the
        // seminorm stays within a small multiple of it
        assert!(est.value > 0.5 && est.value <= 12.0, "estimate {}", est.value);
    }

    #[test]
    fn seminorm_leibniz_property() {
        let spec = SamplingSpec { points_per_axis: 81, ..SamplingSpec::default() };
        let phi = |l: f64, m: f64| Complex64::new(0.0, (l - m).abs().ln()).exp();
        let psi = |l: f64, m: f64| Complex64::new((l - m).abs().atan(), 0.0);
        let prod = |l: f64, m: f64| phi(l, m) * psi(l, m);
        let e_prod = hms_seminorm(&prod, &spec);
        let e_phi = hms_seminorm(&phi, &spec);
        let e_psi = hms_seminorm(&psi, &spec);
        let sup_phi = e_phi.sup_abs;
        let sup_psi = e_psi.sup_abs;
        assert!(
            e_prod.value <= sup_phi * e_psi.value + sup_psi * e_phi.value + 1e-6,
            "{} vs {}",
            e_prod.value,
            sup_phi * e_psi.value + sup_psi * e_phi.value
        );
    }
}
