//! Winograd minimal-filtering convolution for 3×3, stride-1 layers on CPUs.
//!
//! ```
//! use winoconv::{make_tensor, plan, winograd_conv, ConvSpec, DType, Execution, Fill, Layout, Shape};
//!
//! let spec = ConvSpec::conv3x3(8, 4, 1);
//! let input = make_tensor(Shape::new(1, 8, 16, 16), Layout::ChannelMajor, DType::F32,
//!     Fill::SeededUniform { seed: 1, lo: -1.0, hi: 1.0 }).unwrap();
//! let filters = make_tensor(spec.filter_shape(), Layout::ChannelMajor, DType::F32,
//!     Fill::SeededUniform { seed: 2, lo: -1.0, hi: 1.0 }).unwrap();
//! let p = plan(&spec, input.shape(), 4, winoconv::DEFAULT_L1_BUDGET).unwrap();
//! let out = winograd_conv(&input, &filters, &p, Execution::sequential()).unwrap();
//! assert_eq!(out.shape(), Shape::new(1, 4, 16, 16));
//! ```

pub mod engine;
pub mod error;
pub mod gemm;
pub mod geometry;
pub mod reference;
pub mod rng;
pub mod scheduler;
pub mod tensor;
pub mod transforms;

pub use engine::{
    plan, tolerance, transform_filters, winograd_conv, winograd_conv_instrumented, Execution,
    FilterSource, Instrumentation, TransformedFilterBank, WinogradPlan,
};
pub use error::{Error, Result};
pub use geometry::ConvSpec;
pub use reference::{direct_conv, im2col_conv, im2col_conv_with, Accumulate};
pub use scheduler::Policy;
pub use tensor::{
    convert_layout, make_tensor, max_rel_error, rms, verification_error, DType, Fill, Layout,
    Shape, Tensor,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/tensors.md")]
    mod tensors {}
    #[doc = include_str!("../../../book/src/reference.md")]
    mod reference {}
    #[doc = include_str!("../../../book/src/transforms.md")]
    mod transforms {}
    #[doc = include_str!("../../../book/src/engine.md")]
    mod engine {}
    #[doc = include_str!("../../../book/src/scheduling.md")]
    mod scheduling {}
}

/// Staging budget used when none is given: a 32 KiB L1 data cache.
pub const DEFAULT_L1_BUDGET: usize = 32 * 1024;
