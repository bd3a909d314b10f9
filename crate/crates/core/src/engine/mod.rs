//! The Winograd engine: planning, filter-bank construction, staged execution.

mod bank;
mod conv;
mod plan;
pub mod stage;

use std::marker::PhantomData;

pub use bank::{transform_filters, TransformedFilterBank};
pub use conv::{
    winograd_conv, winograd_conv_instrumented, Execution, FilterSource, Instrumentation,
};
pub use plan::{
    plan, staged_footprint, Blocking, WinogradPlan, WorkBlock, FALLBACK_OC_BLOCK,
    FALLBACK_TILE_BLOCK,
};

/// Accepted [`verification_error`](crate::tensor::verification_error) of an
/// `F(m×m, 3×3)` result against the f64 direct oracle, for data in `[-1, 1]`.
pub fn tolerance(m: usize) -> f64 {
    if m <= 2 {
        1e-4
    } else {
        2e-3
    }
}

/// A mutable slice that several workers write through, each to its own elements.
pub(crate) struct SharedSlice<'a> {
    ptr: *mut f32,
    len: usize,
    _marker: PhantomData<&'a mut [f32]>,
}

// SAFETY: callers of `range_mut`/`write` guarantee disjoint access.
unsafe impl Send for SharedSlice<'_> {}
unsafe impl Sync for SharedSlice<'_> {}

impl<'a> SharedSlice<'a> {
    pub(crate) fn new(slice: &'a mut [f32]) -> Self {
        SharedSlice {
            ptr: slice.as_mut_ptr(),
            len: slice.len(),
            _marker: PhantomData,
        }
    }

    /// # Safety
    /// No other live reference may overlap `start..start + len`.
    #[allow(clippy::mut_from_ref)]
    pub(crate) unsafe fn range_mut(&self, start: usize, len: usize) -> &mut [f32] {
        assert!(start + len <= self.len);
        std::slice::from_raw_parts_mut(self.ptr.add(start), len)
    }

    /// # Safety
    /// No other thread may access element `i` concurrently.
    #[inline]
    pub(crate) unsafe fn write(&self, i: usize, v: f32) {
        assert!(i < self.len);
        *self.ptr.add(i) = v;
    }
}
