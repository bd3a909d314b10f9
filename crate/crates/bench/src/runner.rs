use std::time::Instant;

use winoconv::{
    direct_conv, im2col_conv_with, make_tensor, plan, tolerance, transform_filters,
    verification_error, winograd_conv, Accumulate, DType, Execution, Fill, Layout, Policy, Tensor,
    DEFAULT_L1_BUDGET,
};

use crate::report::{median, BenchReport, EntryReport, VerifyReport, VerifyRow};
use crate::suite::{LayerEntry, LayerSuite};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    /// Tile sizes to run, each producing its own report row.
    pub ms: Vec<usize>,
    pub workers: usize,
    pub policy: Policy,
    /// Overrides every entry's own repeat count when set.
    pub repeats: Option<usize>,
    pub warmup: usize,
    pub verify: bool,
    /// Replaces the per-m tolerance when set.
    pub max_error: Option<f64>,
    pub seed: u64,
    pub l1_budget: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            ms: vec![4],
            workers: 1,
            policy: Policy::Dynamic,
            repeats: None,
            warmup: 3,
            verify: false,
            max_error: None,
            seed: 42,
            l1_budget: DEFAULT_L1_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub ms: Vec<usize>,
    pub seed: u64,
    pub l1_budget: usize,
    /// Replaces the per-m tolerance when set.
    pub max_error: Option<f64>,
    /// Replace the seeded weights with zeros.
    pub zero_weights: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            ms: vec![2, 4],
            seed: 42,
            l1_budget: DEFAULT_L1_BUDGET,
            max_error: None,
            zero_weights: false,
        }
    }
}

/// Seeded operands of an entry: inputs from `seed`, weights from `seed + 1`,
/// both uniform in `[-1, 1]`.
pub fn operands(
    entry: &LayerEntry,
    seed: u64,
    zero_weights: bool,
) -> winoconv::Result<(Tensor, Tensor)> {
    let uniform = |seed| Fill::SeededUniform {
        seed,
        lo: -1.0,
        hi: 1.0,
    };
    let input = make_tensor(
        entry.input_shape(),
        Layout::ChannelMajor,
        DType::F32,
        uniform(seed),
    )?;
    let weights = if zero_weights {
        Fill::Zeros
    } else {
        uniform(seed.wrapping_add(1))
    };
    let filters = make_tensor(
        entry.spec().filter_shape(),
        Layout::ChannelMajor,
        DType::F32,
        weights,
    )?;
    Ok((input, filters))
}

pub fn run_verify(suite: &LayerSuite, opts: &VerifyOptions) -> winoconv::Result<VerifyReport> {
    let mut rows = Vec::new();
    for entry in &suite.entries {
        let spec = entry.spec();
        let (x, f) = operands(entry, opts.seed, opts.zero_weights)?;
        let oracle = direct_conv(&x, &f, &spec, Accumulate::F64)?;
        for &m in &opts.ms {
            let p = plan(&spec, x.shape(), m, opts.l1_budget)?;
            let got = winograd_conv(&x, &f, &p, Execution::sequential())?;
            rows.push(VerifyRow {
                name: entry.name.clone(),
                m,
                max_rel_error: verification_error(&got, &oracle)?,
                tolerance: opts.max_error.unwrap_or_else(|| tolerance(m)),
            });
        }
    }
    Ok(VerifyReport { rows })
}

/// Times Winograd (with a prebuilt filter bank) against im2col at the same
/// worker count. im2col always splits its GEMM statically.
pub fn run_bench(suite: &LayerSuite, opts: &BenchOptions) -> winoconv::Result<BenchReport> {
    let workers = opts.workers.max(1);
    let exec = Execution::new(workers, opts.policy);
    let mut entries = Vec::new();
    for entry in &suite.entries {
        let spec = entry.spec();
        let (x, f) = operands(entry, opts.seed, false)?;
        let repeats = opts.repeats.unwrap_or(entry.repeats).max(1);
        let oracle = if opts.verify {
            Some(direct_conv(&x, &f, &spec, Accumulate::F64)?)
        } else {
            None
        };

        let mut baseline_aux = 0;
        let baseline = sample(opts.warmup, repeats, || {
            let out = im2col_conv_with(&x, &f, &spec, workers, Policy::Static)?;
            baseline_aux = out.aux_bytes;
            Ok(())
        })?;

        for &m in &opts.ms {
            let p = plan(&spec, x.shape(), m, opts.l1_budget)?;
            let t = Instant::now();
            let bank = transform_filters(&f, &p)?;
            let bank_build_us = t.elapsed().as_secs_f64() * 1e6;
            let mut last = None;
            let wino = sample(opts.warmup, repeats, || {
                last = Some(winograd_conv(&x, &bank, &p, exec)?);
                Ok(())
            })?;
            let max_rel_error = match (&oracle, &last) {
                (Some(o), Some(out)) => Some(verification_error(out, o)?),
                _ => None,
            };
            let winograd_median_us = median(&wino);
            let baseline_median_us = median(&baseline);
            let blocking = p.blocking();
            entries.push(EntryReport {
                name: entry.name.clone(),
                m,
                workers,
                scheduler: opts.policy.to_string(),
                winograd_median_us,
                winograd_min_us: wino.iter().copied().fold(f64::INFINITY, f64::min),
                baseline_median_us,
                baseline_min_us: baseline.iter().copied().fold(f64::INFINITY, f64::min),
                speedup: baseline_median_us / winograd_median_us,
                max_rel_error,
                tolerance: max_rel_error.map(|_| opts.max_error.unwrap_or_else(|| tolerance(m))),
                winograd_aux_bytes: p.aux_bytes(workers),
                baseline_aux_bytes: baseline_aux,
                paper_reference_speedup: entry.reference_speedup,
                bank_build_us,
                tile_block: blocking.tile_block,
                oc_block: blocking.oc_block,
                fits_l1: blocking.fits_l1,
                winograd_samples_us: wino,
                baseline_samples_us: baseline.clone(),
            });
        }
    }
    Ok(BenchReport { entries })
}

/// Runs `f` `warmup` times untimed, then `repeats` times timed; returns microseconds.
fn sample(
    warmup: usize,
    repeats: usize,
    mut f: impl FnMut() -> winoconv::Result<()>,
) -> winoconv::Result<Vec<f64>> {
    for _ in 0..warmup {
        f()?;
    }
    let mut out = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        f()?;
        // Clamp to a positive value so the speedup ratio is always defined.
        out.push((t.elapsed().as_secs_f64() * 1e6).max(1e-3));
    }
    Ok(out)
}
