//! Forward and backward kernels for the handful of layer types the network
//! is built from. All tensors are NHWC.
//!
//! Convolutions are 3×3, stride 1, zero padding 1 and run as im2col + GEMM
//! over bounded row chunks so the scratch matrix stays small even for wide
//! layers at full resolution.

use crate::error::{Error, Result};
use crate::tensor::{Float, Shape, Tensor};

/// Upper bound on the number of scalars in one im2col scratch buffer.
const IM2COL_CHUNK: usize = 1 << 20;

/// Activation fused onto the output of a convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
}

impl Activation {
    #[inline]
    fn apply<T: Float>(self, v: T) -> T {
        match self {
            Activation::Identity => v,
            Activation::Relu => {
                if v > T::ZERO {
                    v
                } else {
                    T::ZERO
                }
            }
            Activation::Sigmoid => sigmoid(v),
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    fn derivative_from_output<T: Float>(self, out: T) -> T {
        match self {
            Activation::Identity => T::ONE,
            Activation::Relu => {
                if out > T::ZERO {
                    T::ONE
                } else {
                    T::ZERO
                }
            }
            Activation::Sigmoid => out * (T::ONE - out),
        }
    }
}

/// Logistic function with its output held strictly inside (0, 1).
///
/// In single precision the exact value saturates to 0 or 1 for logits beyond
/// roughly ±17 (upper side) and ±104 (lower side); the result is clamped to
/// the nearest representable interior values.
#[inline]
pub fn sigmoid<T: Float>(x: T) -> T {
    let s = if x >= T::ZERO {
        T::ONE / (T::ONE + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::ONE + e)
    };
    let lo = T::from_f64(1e-30);
    let hi = T::ONE - T::EPSILON / T::from_f64(2.0);
    if s < lo {
        lo
    } else if s > hi {
        hi
    } else {
        s
    }
}

fn check_conv_params<T: Float>(x: Shape, weight: &[T], bias: &[T]) -> Result<usize> {
    let cout = bias.len();
    if cout == 0 || weight.len() != 9 * x.c * cout {
        return Err(Error::Shape(format!(
            "3×3 kernel of {} weights and {} biases does not accept {} input channels",
            weight.len(),
            bias.len(),
            x.c
        )));
    }
    Ok(cout)
}

fn rows_per_chunk(w: usize, k: usize) -> usize {
    (IM2COL_CHUNK / (w * k).max(1)).max(1)
}

/// Fills `cols` with the 3×3 patches of output rows `y0..y1` of image `n`.
fn im2col<T: Float>(x: &Tensor<T>, n: usize, y0: usize, y1: usize, cols: &mut [T]) {
    let s = x.shape();
    let (h, w, c) = (s.h, s.w, s.c);
    let k = 9 * c;
    let src = x.item(n);
    for y in y0..y1 {
        for xx in 0..w {
            let row = &mut cols[((y - y0) * w + xx) * k..((y - y0) * w + xx + 1) * k];
            for ky in 0..3 {
                let sy = y as isize + ky as isize - 1;
                for kx in 0..3 {
                    let sx = xx as isize + kx as isize - 1;
                    let dst = &mut row[(ky * 3 + kx) * c..(ky * 3 + kx + 1) * c];
                    if sy < 0 || sy >= h as isize || sx < 0 || sx >= w as isize {
                        dst.fill(T::ZERO);
                    } else {
                        let off = (sy as usize * w + sx as usize) * c;
                        dst.copy_from_slice(&src[off..off + c]);
                    }
                }
            }
        }
    }
}

/// Scatters patch gradients back onto the input gradient of image `n`.
fn col2im<T: Float>(dcols: &[T], n: usize, y0: usize, y1: usize, dx: &mut Tensor<T>) {
    let s = dx.shape();
    let (h, w, c) = (s.h, s.w, s.c);
    let k = 9 * c;
    let plane = h * w * c;
    let dst = &mut dx.data_mut()[n * plane..(n + 1) * plane];
    for y in y0..y1 {
        for xx in 0..w {
            let row = &dcols[((y - y0) * w + xx) * k..((y - y0) * w + xx + 1) * k];
            for ky in 0..3 {
                let sy = y as isize + ky as isize - 1;
                if sy < 0 || sy >= h as isize {
                    continue;
                }
                for kx in 0..3 {
                    let sx = xx as isize + kx as isize - 1;
                    if sx < 0 || sx >= w as isize {
                        continue;
                    }
                    let off = (sy as usize * w + sx as usize) * c;
                    let g = &row[(ky * 3 + kx) * c..(ky * 3 + kx + 1) * c];
                    for (d, &v) in dst[off..off + c].iter_mut().zip(g) {
                        *d += v;
                    }
                }
            }
        }
    }
}

/// 3×3 same-padded convolution followed by `act`.
///
/// `weight` is laid out `[ky][kx][cin][cout]`, i.e. a `(9·cin)×cout`
/// row-major matrix.
pub fn conv3x3_forward<T: Float>(x: &Tensor<T>, weight: &[T], bias: &[T], act: Activation) -> Result<Tensor<T>> {
    let s = x.shape();
    let cout = check_conv_params(s, weight, bias)?;
    let k = 9 * s.c;
    let out_shape = Shape::new(s.n, s.h, s.w, cout);
    let mut out = Tensor::zeros(out_shape);
    let chunk_rows = rows_per_chunk(s.w, k);
    let mut cols = vec![T::ZERO; chunk_rows.min(s.h) * s.w * k];
    let plane = s.h * s.w * cout;
    for n in 0..s.n {
        let mut y0 = 0;
        while y0 < s.h {
            let y1 = (y0 + chunk_rows).min(s.h);
            let p = (y1 - y0) * s.w;
            im2col(x, n, y0, y1, &mut cols[..p * k]);
            let dst = &mut out.data_mut()[n * plane + y0 * s.w * cout..n * plane + y1 * s.w * cout];
            for row in dst.chunks_exact_mut(cout) {
                row.copy_from_slice(bias);
            }
            unsafe {
                T::gemm(
                    p,
                    k,
                    cout,
                    T::ONE,
                    cols.as_ptr(),
                    k as isize,
                    1,
                    weight.as_ptr(),
                    cout as isize,
                    1,
                    T::ONE,
                    dst.as_mut_ptr(),
                    cout as isize,
                    1,
                );
            }
            y0 = y1;
        }
    }
    if act != Activation::Identity {
        for v in out.data_mut() {
            *v = act.apply(*v);
        }
    }
    Ok(out)
}

/// Gradients of a fused convolution + activation.
pub struct ConvGrads<T> {
    /// `None` when the caller did not ask for the input gradient.
    pub input: Option<Tensor<T>>,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// Backward pass of [`conv3x3_forward`].
///
/// `out` is the activated forward output and `grad_out` the gradient with
/// respect to it.
pub fn conv3x3_backward<T: Float>(
    x: &Tensor<T>,
    weight: &[T],
    out: &Tensor<T>,
    grad_out: &Tensor<T>,
    act: Activation,
    need_input_grad: bool,
) -> Result<ConvGrads<T>> {
    let s = x.shape();
    let cout = out.shape().c;
    if weight.len() != 9 * s.c * cout || grad_out.shape() != out.shape() {
        return Err(Error::Shape("convolution backward received inconsistent shapes".into()));
    }
    let k = 9 * s.c;

    let mut dpre = grad_out.clone();
    if act != Activation::Identity {
        for (g, &o) in dpre.data_mut().iter_mut().zip(out.data()) {
            *g *= act.derivative_from_output(o);
        }
    }

    let mut dbias = vec![T::ZERO; cout];
    for row in dpre.data().chunks_exact(cout) {
        for (b, &g) in dbias.iter_mut().zip(row) {
            *b += g;
        }
    }

    let mut dweight = vec![T::ZERO; k * cout];
    let mut dx = if need_input_grad { Some(Tensor::zeros(s)) } else { None };
    let chunk_rows = rows_per_chunk(s.w, k);
    let scratch = chunk_rows.min(s.h) * s.w * k;
    let mut cols = vec![T::ZERO; scratch];
    let mut dcols = if need_input_grad {
        vec![T::ZERO; scratch]
    } else {
        Vec::new()
    };
    let plane = s.h * s.w * cout;
    for n in 0..s.n {
        let mut y0 = 0;
        while y0 < s.h {
            let y1 = (y0 + chunk_rows).min(s.h);
            let p = (y1 - y0) * s.w;
            let g = &dpre.data()[n * plane + y0 * s.w * cout..n * plane + y1 * s.w * cout];
            im2col(x, n, y0, y1, &mut cols[..p * k]);
            // dW += colsᵀ · g
            unsafe {
                T::gemm(
                    k,
                    p,
                    cout,
                    T::ONE,
                    cols.as_ptr(),
                    1,
                    k as isize,
                    g.as_ptr(),
                    cout as isize,
                    1,
                    T::ONE,
                    dweight.as_mut_ptr(),
                    cout as isize,
                    1,
                );
            }
            if let Some(dx) = dx.as_mut() {
                // dcols = g · Wᵀ
                unsafe {
                    T::gemm(
                        p,
                        cout,
                        k,
                        T::ONE,
                        g.as_ptr(),
                        cout as isize,
                        1,
                        weight.as_ptr(),
                        1,
                        cout as isize,
                        T::ZERO,
                        dcols.as_mut_ptr(),
                        k as isize,
                        1,
                    );
                }
                col2im(&dcols[..p * k], n, y0, y1, dx);
            }
            y0 = y1;
        }
    }
    Ok(ConvGrads {
        input: dx,
        weight: dweight,
        bias: dbias,
    })
}

/// 2×2 max pooling with stride 2. Returns the pooled tensor and, for every
/// output element, the flat input index that produced it. Ties go to the
/// first element in row-major window order.
pub fn max_pool2_forward<T: Float>(x: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    let s = x.shape();
    if !s.h.is_multiple_of(2) || !s.w.is_multiple_of(2) {
        return Err(Error::Shape(format!("2×2 pooling needs even spatial size, got {s}")));
    }
    let os = Shape::new(s.n, s.h / 2, s.w / 2, s.c);
    let mut out = Tensor::zeros(os);
    let mut argmax = vec![0usize; os.len()];
    let mut o = 0;
    for n in 0..s.n {
        for y in 0..os.h {
            for xx in 0..os.w {
                for c in 0..s.c {
                    let mut best = x.index(n, 2 * y, 2 * xx, c);
                    for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                        let i = x.index(n, 2 * y + dy, 2 * xx + dx, c);
                        if x.data()[i] > x.data()[best] {
                            best = i;
                        }
                    }
                    out.data_mut()[o] = x.data()[best];
                    argmax[o] = best;
                    o += 1;
                }
            }
        }
    }
    Ok((out, argmax))
}

pub fn max_pool2_backward<T: Float>(input_shape: Shape, argmax: &[usize], grad_out: &Tensor<T>) -> Tensor<T> {
    let mut dx = Tensor::zeros(input_shape);
    for (&i, &g) in argmax.iter().zip(grad_out.data()) {
        dx.data_mut()[i] += g;
    }
    dx
}

/// One axis of a bilinear resampling: for each output coordinate, the two
/// source taps and the weight of the second one.
///
/// Sample centres are aligned (`align_corners = false`):
/// `src = (dst + 0.5) · in/out − 0.5`, clamped to the valid range.
pub fn bilinear_axis(in_len: usize, out_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|o| {
            let src = ((o as f64 + 0.5) * scale - 0.5).max(0.0);
            let i0 = (src.floor() as usize).min(in_len - 1);
            let i1 = (i0 + 1).min(in_len - 1);
            let frac = if i1 == i0 { 0.0 } else { src - i0 as f64 };
            (i0, i1, frac)
        })
        .collect()
}

fn check_factor(factor: usize) -> Result<()> {
    if !matches!(factor, 1 | 2 | 4 | 8 | 16) {
        return Err(Error::InvalidArgument(format!(
            "up-sampling factor must be one of 1, 2, 4, 8, 16; got {factor}"
        )));
    }
    Ok(())
}

/// Bilinear up-sampling of the spatial axes by an integer power-of-two
/// factor. Factor 1 returns an exact copy.
pub fn upsample_bilinear<T: Float>(x: &Tensor<T>, factor: usize) -> Result<Tensor<T>> {
    check_factor(factor)?;
    if factor == 1 {
        return Ok(x.clone());
    }
    let s = x.shape();
    let os = Shape::new(s.n, s.h * factor, s.w * factor, s.c);
    let ys = bilinear_axis(s.h, os.h);
    let xs = bilinear_axis(s.w, os.w);
    let mut out = Tensor::zeros(os);
    let mut o = 0;
    for n in 0..s.n {
        for &(y0, y1, fy) in &ys {
            let fy = T::from_f64(fy);
            for &(x0, x1, fx) in &xs {
                let fx = T::from_f64(fx);
                for c in 0..s.c {
                    let a = x.at(n, y0, x0, c);
                    let b = x.at(n, y0, x1, c);
                    let cc = x.at(n, y1, x0, c);
                    let d = x.at(n, y1, x1, c);
                    let top = a + fx * (b - a);
                    let bottom = cc + fx * (d - cc);
                    out.data_mut()[o] = top + fy * (bottom - top);
                    o += 1;
                }
            }
        }
    }
    Ok(out)
}

pub fn upsample_bilinear_backward<T: Float>(
    input_shape: Shape,
    factor: usize,
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>> {
    check_factor(factor)?;
    if factor == 1 {
        return Ok(grad_out.clone());
    }
    let s = input_shape;
    let ys = bilinear_axis(s.h, s.h * factor);
    let xs = bilinear_axis(s.w, s.w * factor);
    let mut dx = Tensor::zeros(s);
    let mut o = 0;
    for n in 0..s.n {
        for &(y0, y1, fy) in &ys {
            let fy = T::from_f64(fy);
            for &(x0, x1, fx) in &xs {
                let fx = T::from_f64(fx);
                let w00 = (T::ONE - fy) * (T::ONE - fx);
                let w01 = (T::ONE - fy) * fx;
                let w10 = fy * (T::ONE - fx);
                let w11 = fy * fx;
                for c in 0..s.c {
                    let g = grad_out.data()[o];
                    o += 1;
                    let i00 = dx.index(n, y0, x0, c);
                    let i01 = dx.index(n, y0, x1, c);
                    let i10 = dx.index(n, y1, x0, c);
                    let i11 = dx.index(n, y1, x1, c);
                    let d = dx.data_mut();
                    d[i00] += w00 * g;
                    d[i01] += w01 * g;
                    d[i10] += w10 * g;
                    d[i11] += w11 * g;
                }
            }
        }
    }
    Ok(dx)
}

/// Concatenates tensors along the channel axis in the given order.
pub fn concat_channels<T: Float>(inputs: &[&Tensor<T>]) -> Result<Tensor<T>> {
    let first = inputs
        .first()
        .ok_or_else(|| Error::Shape("concatenation of zero tensors".into()))?
        .shape();
    for t in inputs {
        let s = t.shape();
        if (s.n, s.h, s.w) != (first.n, first.h, first.w) {
            return Err(Error::Shape(format!(
                "cannot concatenate {s} with {first}: spatial or batch size differs"
            )));
        }
    }
    let total_c: usize = inputs.iter().map(|t| t.shape().c).sum();
    let os = Shape::new(first.n, first.h, first.w, total_c);
    let mut out = Vec::with_capacity(os.len());
    let pixels = first.n * first.h * first.w;
    for p in 0..pixels {
        for t in inputs {
            let c = t.shape().c;
            out.extend_from_slice(&t.data()[p * c..(p + 1) * c]);
        }
    }
    Tensor::from_vec(os, out)
}

/// Splits a channel-concatenated gradient back into per-input gradients.
pub fn split_channels<T: Float>(grad: &Tensor<T>, channels: &[usize]) -> Vec<Tensor<T>> {
    let s = grad.shape();
    let pixels = s.n * s.h * s.w;
    let mut parts: Vec<Vec<T>> = channels.iter().map(|&c| Vec::with_capacity(pixels * c)).collect();
    for p in 0..pixels {
        let row = &grad.data()[p * s.c..(p + 1) * s.c];
        let mut off = 0;
        for (part, &c) in parts.iter_mut().zip(channels) {
            part.extend_from_slice(&row[off..off + c]);
            off += c;
        }
    }
    parts
        .into_iter()
        .zip(channels)
        .map(|(data, &c)| Tensor::from_vec(Shape::new(s.n, s.h, s.w, c), data).expect("split shape"))
        .collect()
}
