//! Baseline convolutions.
//!
//! [`direct_conv`] is the correctness oracle: a plain sum over the receptive
//! field, optionally accumulated in f64. [`im2col_conv`] lowers the input to
//! a `(IC·KH·KW) × (OH·OW)` matrix and runs one GEMM per image; it is the
//! latency baseline and deliberately nothing more than that.

use std::ops::{Add, Mul};

use crate::error::Result;
use crate::gemm::{self, GemmDims, MR};
use crate::geometry::ConvSpec;
use crate::scheduler::{self, Policy};
use crate::tensor::{Layout, Tensor};

/// Accumulator precision for [`direct_conv`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Accumulate {
    F32,
    /// Sum in f64, round to f32 once at the end.
    #[default]
    F64,
}

trait Acc: Copy + Add<Output = Self> + Mul<Output = Self> + From<f32> {
    const ZERO: Self;
    fn to_f32(self) -> f32;
}

impl Acc for f32 {
    const ZERO: Self = 0.0;
    fn to_f32(self) -> f32 {
        self
    }
}

impl Acc for f64 {
    const ZERO: Self = 0.0;
    fn to_f32(self) -> f32 {
        self as f32
    }
}

/// `out(n,oc,oh,ow) = Σ_{ic,kh,kw} in(n, ic, oh·s − p + kh, ow·s − p + kw) · f(oc,ic,kh,kw)`,
/// with zeros outside the image. Filters are `(OC, IC, KH, KW)`.
pub fn direct_conv(
    input: &Tensor,
    filters: &Tensor,
    spec: &ConvSpec,
    accumulate: Accumulate,
) -> Result<Tensor> {
    let out_shape = spec.check(input.shape(), filters.shape())?;
    let x = input.channel_major_f32();
    let f = filters.channel_major_f32();
    let data = match accumulate {
        Accumulate::F32 => {
            direct::<f32>(&x, &f, spec, input.shape().h, input.shape().w, out_shape.n)
        }
        Accumulate::F64 => {
            direct::<f64>(&x, &f, spec, input.shape().h, input.shape().w, out_shape.n)
        }
    };
    Tensor::from_vec(out_shape, Layout::ChannelMajor, data)
}

fn direct<T: Acc>(
    x: &[f32],
    f: &[f32],
    spec: &ConvSpec,
    h: usize,
    w: usize,
    batch: usize,
) -> Vec<f32> {
    let (oh, ow) = spec.output_hw(h, w).expect("checked by caller");
    let (ic_n, oc_n) = (spec.in_channels, spec.out_channels);
    let (kh_n, kw_n, s, p) = (spec.kernel_h, spec.kernel_w, spec.stride, spec.padding);
    let mut out = Vec::with_capacity(batch * oc_n * oh * ow);
    let mut acc = vec![T::ZERO; oh * ow];
    // Output columns whose input column `ow·s − p + kw` lands inside [0, w).
    let col_range = |kw: usize| {
        let lo = if p > kw { (p - kw).div_ceil(s) } else { 0 };
        let hi = if w + p > kw {
            ((w + p - kw - 1) / s + 1).min(ow)
        } else {
            0
        };
        (lo, hi.max(lo))
    };
    for n in 0..batch {
        for oc in 0..oc_n {
            acc.fill(T::ZERO);
            for ic in 0..ic_n {
                let plane = &x[(n * ic_n + ic) * h * w..][..h * w];
                for kh in 0..kh_n {
                    for kw in 0..kw_n {
                        let wv = T::from(f[((oc * ic_n + ic) * kh_n + kh) * kw_n + kw]);
                        let (c0, c1) = col_range(kw);
                        for oy in 0..oh {
                            let iy = (oy * s + kh) as isize - p as isize;
                            if iy < 0 || iy >= h as isize {
                                continue;
                            }
                            let row = &plane[iy as usize * w..][..w];
                            let dst = &mut acc[oy * ow + c0..oy * ow + c1];
                            if s == 1 {
                                let src = &row[c0 + kw - p..c1 + kw - p];
                                for (a, &v) in dst.iter_mut().zip(src) {
                                    *a = *a + wv * T::from(v);
                                }
                            } else {
                                for (j, a) in dst.iter_mut().enumerate() {
                                    let v = row[(c0 + j) * s + kw - p];
                                    *a = *a + wv * T::from(v);
                                }
                            }
                        }
                    }
                }
            }
            out.extend(acc.iter().map(|a| a.to_f32()));
        }
    }
    out
}

/// Output of [`im2col_conv`] plus the size of its lowered matrix.
#[derive(Debug, Clone)]
pub struct Im2colOutput {
    pub output: Tensor,
    /// Bytes of the `(IC·KH·KW) × (OH·OW)` f32 column buffer.
    pub aux_bytes: usize,
}

/// Single-threaded im2col + GEMM.
pub fn im2col_conv(input: &Tensor, filters: &Tensor, spec: &ConvSpec) -> Result<Im2colOutput> {
    im2col_conv_with(input, filters, spec, 1, Policy::Static)
}

/// Bytes of the lowered matrix for one image.
pub fn im2col_aux_bytes(spec: &ConvSpec, h: usize, w: usize) -> Result<usize> {
    let (oh, ow) = spec.output_hw(h, w)?;
    Ok(spec.in_channels * spec.kernel_h * spec.kernel_w * oh * ow * std::mem::size_of::<f32>())
}

/// im2col + GEMM with the GEMM split into output-channel row blocks across
/// `workers`. Results are bitwise independent of `workers` and `policy`.
pub fn im2col_conv_with(
    input: &Tensor,
    filters: &Tensor,
    spec: &ConvSpec,
    workers: usize,
    policy: Policy,
) -> Result<Im2colOutput> {
    let out_shape = spec.check(input.shape(), filters.shape())?;
    let x = input.channel_major_f32();
    let f = filters.channel_major_f32();
    let (h, w) = (input.shape().h, input.shape().w);
    let (oh, ow) = (out_shape.h, out_shape.w);
    let (ic_n, oc_n, kh_n, kw_n) = (
        spec.in_channels,
        spec.out_channels,
        spec.kernel_h,
        spec.kernel_w,
    );
    let k = ic_n * kh_n * kw_n;
    let pixels = oh * ow;
    let mut cols = vec![0.0f32; k * pixels];
    let mut out = vec![0.0f32; out_shape.len()];
    let kc = gemm_depth(crate::DEFAULT_L1_BUDGET);

    // Row blocks of MR·8 output channels.
    let rows_per_block = MR * 8;
    let blocks: Vec<std::ops::Range<usize>> = (0..oc_n)
        .step_by(rows_per_block)
        .map(|r| r..(r + rows_per_block).min(oc_n))
        .collect();

    for n in 0..out_shape.n {
        lower(
            &x[n * ic_n * h * w..][..ic_n * h * w],
            spec,
            h,
            w,
            oh,
            ow,
            &mut cols,
        );
        let image_out =
            crate::engine::SharedSlice::new(&mut out[n * oc_n * pixels..][..oc_n * pixels]);
        let cols = &cols;
        scheduler::run(policy, &blocks, workers, |_, _, rows| {
            // SAFETY: row blocks are disjoint ranges of output channels.
            let dst = unsafe { image_out.range_mut(rows.start * pixels, rows.len() * pixels) };
            let dims = GemmDims {
                m: rows.len(),
                n: pixels,
                k,
                lda: k,
                ldb: pixels,
                ldc: pixels,
                kc,
            };
            gemm::gemm(dims, &f[rows.start * k..], cols, dst);
            Ok::<(), std::convert::Infallible>(())
        })
        .unwrap_or_else(|e| match e.error {});
    }
    Ok(Im2colOutput {
        output: Tensor::from_vec(out_shape, Layout::ChannelMajor, out)?,
        aux_bytes: k * pixels * std::mem::size_of::<f32>(),
    })
}

fn lower(x: &[f32], spec: &ConvSpec, h: usize, w: usize, oh: usize, ow: usize, cols: &mut [f32]) {
    let (kh_n, kw_n, s, p) = (spec.kernel_h, spec.kernel_w, spec.stride, spec.padding);
    let mut row = 0;
    for ic in 0..spec.in_channels {
        let plane = &x[ic * h * w..][..h * w];
        for kh in 0..kh_n {
            for kw in 0..kw_n {
                let dst = &mut cols[row * oh * ow..][..oh * ow];
                for oy in 0..oh {
                    let iy = (oy * s + kh) as isize - p as isize;
                    let line = &mut dst[oy * ow..][..ow];
                    if iy < 0 || iy >= h as isize {
                        line.fill(0.0);
                        continue;
                    }
                    let src = &plane[iy as usize * w..][..w];
                    for (ox, v) in line.iter_mut().enumerate() {
                        let ix = (ox * s + kw) as isize - p as isize;
                        *v = if ix < 0 || ix >= w as isize {
                            0.0
                        } else {
                            src[ix as usize]
                        };
                    }
                }
                row += 1;
            }
        }
    }
}

/// k-chunk depth that keeps a `kc × NR` panel of B plus `MR` rows of A in `budget` bytes.
pub(crate) fn gemm_depth(budget: usize) -> usize {
    (budget / ((gemm::NR + MR) * std::mem::size_of::<f32>())).max(1)
}
