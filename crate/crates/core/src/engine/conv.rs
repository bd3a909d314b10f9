use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};
use std::sync::Mutex;

use crate::error::{Error, Result};
use crate::scheduler::{self, Policy, RunStats};
use crate::tensor::{Layout, Tensor};

use super::stage::{channel_product, gather_tiles, scatter_into};
use super::{transform_filters, SharedSlice, TransformedFilterBank, WinogradPlan};

/// How many workers run the blocks of a convolution and how blocks are handed out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Execution {
    pub workers: usize,
    pub policy: Policy,
}

impl Execution {
    pub fn new(workers: usize, policy: Policy) -> Self {
        Execution {
            workers: workers.max(1),
            policy,
        }
    }

    pub fn sequential() -> Self {
        Execution::new(1, Policy::Dynamic)
    }
}

impl Default for Execution {
    fn default() -> Self {
        Execution::sequential()
    }
}

/// Raw filters (transformed on every call) or a prebuilt bank.
#[derive(Debug, Clone, Copy)]
pub enum FilterSource<'a> {
    Filters(&'a Tensor),
    Bank(&'a TransformedFilterBank),
}

impl<'a> From<&'a Tensor> for FilterSource<'a> {
    fn from(t: &'a Tensor) -> Self {
        FilterSource::Filters(t)
    }
}

impl<'a> From<&'a TransformedFilterBank> for FilterSource<'a> {
    fn from(b: &'a TransformedFilterBank) -> Self {
        FilterSource::Bank(b)
    }
}

/// Counters collected by [`winograd_conv_instrumented`].
#[derive(Debug, Clone)]
pub struct Instrumentation {
    /// Times each output element (channel-major) was written.
    pub write_counts: Vec<u32>,
    /// Scalar multiplications in the channel-product stage.
    pub multiplications: u64,
    pub stats: RunStats,
}

/// Winograd convolution of `input` with `filters` under `plan`.
///
/// The output is channel-major f32 regardless of the input's layout and dtype.
/// Results are bitwise identical for any `exec`.
pub fn winograd_conv<'a>(
    input: &Tensor,
    filters: impl Into<FilterSource<'a>>,
    plan: &WinogradPlan,
    exec: Execution,
) -> Result<Tensor> {
    run(input, filters.into(), plan, exec, false).map(|(t, _)| t)
}

/// [`winograd_conv`] that also counts output writes and multiplications.
pub fn winograd_conv_instrumented<'a>(
    input: &Tensor,
    filters: impl Into<FilterSource<'a>>,
    plan: &WinogradPlan,
    exec: Execution,
) -> Result<(Tensor, Instrumentation)> {
    run(input, filters.into(), plan, exec, true)
}

fn run(
    input: &Tensor,
    filters: FilterSource<'_>,
    plan: &WinogradPlan,
    exec: Execution,
    instrument: bool,
) -> Result<(Tensor, Instrumentation)> {
    if input.shape() != plan.input_shape() {
        return Err(Error::ShapeMismatch {
            left: input.shape(),
            right: plan.input_shape(),
        });
    }
    let owned;
    let bank = match filters {
        FilterSource::Bank(b) => {
            b.check(plan)?;
            b
        }
        FilterSource::Filters(f) => {
            owned = transform_filters(f, plan)?;
            &owned
        }
    };
    let x = input.channel_major_f32();
    let out_shape = plan.output_shape();
    let mut out = Vec::new();
    out.try_reserve_exact(out_shape.len())
        .map_err(|_| Error::AllocationRefused(format!("output of {} elements", out_shape.len())))?;
    out.resize(out_shape.len(), 0.0f32);
    let counts: Vec<AtomicU32> = if instrument {
        (0..out_shape.len()).map(|_| AtomicU32::new(0)).collect()
    } else {
        Vec::new()
    };

    let blocks = plan.blocks();
    let workers = exec.workers.max(1);
    let staging: Vec<Mutex<(Vec<f32>, Vec<f32>)>> = (0..workers.min(blocks.len().max(1)))
        .map(|_| Mutex::new((Vec::new(), Vec::new())))
        .collect();
    let muls = AtomicU64::new(0);
    let shared = SharedSlice::new(&mut out);

    let stats = scheduler::run(exec.policy, &blocks, workers, |worker, _, block| {
        let mut slot = staging[worker]
            .lock()
            .map_err(|_| "staging buffer poisoned".to_string())?;
        let (v, m) = &mut *slot;
        if v.is_empty() {
            v.resize(plan.staged_input_len(), 0.0);
            m.resize(plan.staged_product_len(), 0.0);
        }
        gather_tiles(&x, plan, block, v);
        let n = channel_product(bank, v, plan, block, m);
        muls.fetch_add(n, Ordering::Relaxed);
        // SAFETY: blocks cover disjoint (tile, channel) pairs and every tile
        // maps to a disjoint output patch.
        unsafe { scatter_into(m, plan, block, &shared, instrument.then_some(&counts[..])) };
        Ok::<(), String>(())
    })
    .map_err(|e| Error::BlockFailed {
        block: e.block,
        reason: e.error,
    })?;

    let output = Tensor::from_vec(out_shape, Layout::ChannelMajor, out)?;
    let write_counts = counts.into_iter().map(AtomicU32::into_inner).collect();
    Ok((
        output,
        Instrumentation {
            write_counts,
            multiplications: muls.into_inner(),
            stats,
        },
    ))
}
