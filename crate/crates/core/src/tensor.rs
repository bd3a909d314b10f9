//! Dense 4-D tensors.
//!
//! A [`Tensor`] is always `N×C×H×W` logically; [`Layout`] only decides how
//! the logical index maps onto the buffer. Filters reuse the same type with
//! `(N, C, H, W) = (OC, IC, KH, KW)`.

use std::borrow::Cow;

use half::f16;

use crate::error::{Error, Result};
use crate::rng::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape {
    pub n: usize,
    pub c: usize,
    pub h: usize,
    pub w: usize,
}

impl Shape {
    pub const fn new(n: usize, c: usize, h: usize, w: usize) -> Self {
        Self { n, c, h, w }
    }

    /// Element count, or `None` when it does not fit in `usize`.
    pub fn checked_len(&self) -> Option<usize> {
        self.n
            .checked_mul(self.c)?
            .checked_mul(self.h)?
            .checked_mul(self.w)
    }

    /// Element count. Only valid for shapes that have already been validated.
    pub fn len(&self) -> usize {
        self.n * self.c * self.h * self.w
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0 || self.c == 0 || self.h == 0 || self.w == 0
    }

    fn validate(&self) -> Result<usize> {
        if self.is_empty() {
            return Err(Error::EmptyShape(*self));
        }
        let len = self.checked_len().ok_or_else(|| {
            Error::AllocationRefused(format!("element count of {self:?} overflows usize"))
        })?;
        // Vec<T> cannot hold more than isize::MAX bytes.
        if len
            .checked_mul(std::mem::size_of::<f32>())
            .is_none_or(|b| b > isize::MAX as usize)
        {
            return Err(Error::AllocationRefused(format!(
                "{len} elements exceed the addressable byte range"
            )));
        }
        Ok(len)
    }
}

/// Memory order of the four logical axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Layout {
    /// `(N, C, H, W)`, the engine's native order.
    #[default]
    ChannelMajor,
    /// `(N, H, W, C)`.
    ChannelInterleaved,
}

impl Layout {
    #[inline]
    pub fn offset(self, s: &Shape, n: usize, c: usize, h: usize, w: usize) -> usize {
        match self {
            Layout::ChannelMajor => ((n * s.c + c) * s.h + h) * s.w + w,
            Layout::ChannelInterleaved => ((n * s.h + h) * s.w + w) * s.c + c,
        }
    }
}

/// Storage element type. Arithmetic is always carried out in f32.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DType {
    #[default]
    F32,
    F16,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fill {
    Zeros,
    Constant(f32),
    /// Element at logical channel-major index `i` is
    /// `CounterRng::new(seed).uniform_f32(i, lo, hi)`, independent of layout.
    SeededUniform {
        seed: u64,
        lo: f32,
        hi: f32,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Storage {
    F32(Vec<f32>),
    F16(Vec<f16>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Shape,
    layout: Layout,
    storage: Storage,
}

/// Builds a tensor with deterministic contents.
pub fn make_tensor(shape: Shape, layout: Layout, dtype: DType, fill: Fill) -> Result<Tensor> {
    let len = shape.validate()?;
    let mut data = Vec::new();
    data.try_reserve_exact(len)
        .map_err(|e| Error::AllocationRefused(format!("{len} elements: {e}")))?;
    match fill {
        Fill::Zeros => data.resize(len, 0.0f32),
        Fill::Constant(v) => data.resize(len, v),
        Fill::SeededUniform { seed, lo, hi } => {
            let rng = CounterRng::new(seed);
            data.extend((0..len as u64).map(|i| rng.uniform_f32(i, lo, hi)));
        }
    }
    // `data` is in channel-major order; re-home it if needed.
    let t = Tensor::from_vec(shape, Layout::ChannelMajor, data)?.into_layout(layout);
    Ok(t.to_dtype(dtype))
}

impl Tensor {
    /// Wraps an f32 buffer already laid out in `layout`.
    pub fn from_vec(shape: Shape, layout: Layout, data: Vec<f32>) -> Result<Self> {
        let len = shape.validate()?;
        if data.len() != len {
            return Err(Error::AllocationRefused(format!(
                "buffer holds {} elements, shape {shape:?} needs {len}",
                data.len()
            )));
        }
        Ok(Self {
            shape,
            layout,
            storage: Storage::F32(data),
        })
    }

    pub fn zeros(shape: Shape) -> Result<Self> {
        make_tensor(shape, Layout::ChannelMajor, DType::F32, Fill::Zeros)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn dtype(&self) -> DType {
        match self.storage {
            Storage::F32(_) => DType::F32,
            Storage::F16(_) => DType::F16,
        }
    }

    pub fn len(&self) -> usize {
        self.shape.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn get(&self, n: usize, c: usize, h: usize, w: usize) -> f32 {
        let i = self.layout.offset(&self.shape, n, c, h, w);
        match &self.storage {
            Storage::F32(v) => v[i],
            Storage::F16(v) => v[i].to_f32(),
        }
    }

    /// The raw buffer when it is already f32.
    pub fn as_f32(&self) -> Option<&[f32]> {
        match &self.storage {
            Storage::F32(v) => Some(v),
            Storage::F16(_) => None,
        }
    }

    pub fn as_f32_mut(&mut self) -> Option<&mut [f32]> {
        match &mut self.storage {
            Storage::F32(v) => Some(v),
            Storage::F16(_) => None,
        }
    }

    /// The buffer widened to f32, in this tensor's layout.
    pub fn data_f32(&self) -> Cow<'_, [f32]> {
        match &self.storage {
            Storage::F32(v) => Cow::Borrowed(v),
            Storage::F16(v) => Cow::Owned(v.iter().map(|x| x.to_f32()).collect()),
        }
    }

    /// Channel-major f32 view, borrowing when no conversion is needed.
    pub fn channel_major_f32(&self) -> Cow<'_, [f32]> {
        if self.layout == Layout::ChannelMajor {
            return self.data_f32();
        }
        let t = self.clone().into_layout(Layout::ChannelMajor);
        Cow::Owned(t.data_f32().into_owned())
    }

    pub fn to_dtype(self, dtype: DType) -> Tensor {
        let storage = match (self.storage, dtype) {
            (Storage::F32(v), DType::F16) => {
                Storage::F16(v.iter().map(|&x| f16::from_f32(x)).collect())
            }
            (Storage::F16(v), DType::F32) => Storage::F32(v.iter().map(|x| x.to_f32()).collect()),
            (s, _) => s,
        };
        Tensor { storage, ..self }
    }

    pub fn into_layout(self, target: Layout) -> Tensor {
        if self.layout == target {
            return self;
        }
        let s = self.shape;
        let (src, dst) = (self.layout, target);
        fn permute<T: Copy>(v: &[T], s: &Shape, src: Layout, dst: Layout) -> Vec<T> {
            let mut out = Vec::with_capacity(v.len());
            // Walk the destination order so writes stay sequential.
            match dst {
                Layout::ChannelMajor => {
                    for n in 0..s.n {
                        for c in 0..s.c {
                            for h in 0..s.h {
                                for w in 0..s.w {
                                    out.push(v[src.offset(s, n, c, h, w)]);
                                }
                            }
                        }
                    }
                }
                Layout::ChannelInterleaved => {
                    for n in 0..s.n {
                        for h in 0..s.h {
                            for w in 0..s.w {
                                for c in 0..s.c {
                                    out.push(v[src.offset(s, n, c, h, w)]);
                                }
                            }
                        }
                    }
                }
            }
            out
        }
        let storage = match &self.storage {
            Storage::F32(v) => Storage::F32(permute(v, &s, src, dst)),
            Storage::F16(v) => Storage::F16(permute(v, &s, src, dst)),
        };
        Tensor {
            shape: s,
            layout: target,
            storage,
        }
    }
}

/// Re-lays `t` out in `target` order; logical indexing is unchanged.
pub fn convert_layout(t: &Tensor, target: Layout) -> Tensor {
    t.clone().into_layout(target)
}

/// `max |a - b| / max(|b|, floor)` over all logical elements, in f64.
///
/// `b` is the reference. Layouts and dtypes may differ; shapes may not.
pub fn max_rel_error(a: &Tensor, b: &Tensor, floor: f64) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    let av = a.channel_major_f32();
    let bv = b.channel_major_f32();
    Ok(max_rel_error_slices(&av, &bv, floor))
}

/// Root mean square of all elements.
pub fn rms(t: &Tensor) -> f64 {
    let v = t.channel_major_f32();
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>() / v.len() as f64).sqrt()
}

/// [`max_rel_error`] of `output` against `reference` with the floor set to
/// the reference's RMS, so near-zero outputs are judged on the layer's scale.
/// An all-zero reference gets the smallest positive floor: any nonzero
/// deviation then fails.
pub fn verification_error(output: &Tensor, reference: &Tensor) -> Result<f64> {
    max_rel_error(output, reference, rms(reference).max(f64::MIN_POSITIVE))
}

pub(crate) fn max_rel_error_slices(a: &[f32], b: &[f32], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let (x, y) = (x as f64, y as f64);
            (x - y).abs() / y.abs().max(floor)
        })
        .fold(0.0, f64::max)
}
