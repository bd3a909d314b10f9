use crate::error::{Error, Result};
use crate::gemm::{MR, NR};
use crate::geometry::ConvSpec;
use crate::reference::gemm_depth;
use crate::tensor::Shape;
use crate::transforms::{transform_set, TransformSet};

/// Tiles per block when even the smallest staged block overflows the budget.
pub const FALLBACK_TILE_BLOCK: usize = 2 * NR;
/// Output channels per block in the same situation.
pub const FALLBACK_OC_BLOCK: usize = 64;

/// A unit of independent work: tiles `[t0, t1)` × output channels `[c0, c1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WorkBlock {
    pub t0: usize,
    pub t1: usize,
    pub c0: usize,
    pub c1: usize,
}

impl WorkBlock {
    pub fn tile_count(&self) -> usize {
        self.t1 - self.t0
    }

    pub fn channel_count(&self) -> usize {
        self.c1 - self.c0
    }
}

/// Block sizes chosen by [`plan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Blocking {
    /// `P_b`, a multiple of the microkernel width (clipped to the tile count).
    pub tile_block: usize,
    /// `OC_b`
    pub oc_block: usize,
    /// Depth of the k-chunks inside each per-position GEMM.
    pub ic_chunk: usize,
    /// Whether the whole staged block `alpha²·(IC + OC_b)·P_b` f32 fits the budget.
    pub fits_l1: bool,
}

/// Everything the engine needs to run one convolution geometry. Immutable.
#[derive(Debug, Clone)]
pub struct WinogradPlan {
    ts: TransformSet,
    spec: ConvSpec,
    input: Shape,
    out_h: usize,
    out_w: usize,
    tiles_h: usize,
    tiles_w: usize,
    blocking: Blocking,
    l1_budget: usize,
    bt: Vec<f32>,
    at: Vec<f32>,
}

/// Bytes of one staged block: transformed inputs plus channel-product results.
pub fn staged_footprint(
    alpha: usize,
    in_channels: usize,
    oc_block: usize,
    tile_block: usize,
) -> usize {
    alpha * alpha * (in_channels + oc_block) * tile_block * std::mem::size_of::<f32>()
}

/// Plans an `F(m×m, 3×3)` convolution of an `input`-shaped tensor.
///
/// Picks the largest `P_b·OC_b` whose staged block fits `l1_budget`, with
/// `P_b` a multiple of the microkernel width and `OC_b` a multiple of its
/// height. Wide layers cannot fit any block in a typical L1; those fall back
/// to [`FALLBACK_TILE_BLOCK`] × [`FALLBACK_OC_BLOCK`] blocks and rely on the
/// k-chunked channel product to keep each GEMM panel L1-resident.
pub fn plan(spec: &ConvSpec, input: Shape, m: usize, l1_budget: usize) -> Result<WinogradPlan> {
    spec.is_winograd_eligible()?;
    if input.is_empty() {
        return Err(Error::EmptyShape(input));
    }
    if input.c != spec.in_channels {
        return Err(Error::InvalidGeometry(format!(
            "input has {} channels, convolution expects {}",
            input.c, spec.in_channels
        )));
    }
    let ts = transform_set(m)?;
    let (out_h, out_w) = spec.output_hw(input.h, input.w)?;
    let tiles_h = out_h.div_ceil(m);
    let tiles_w = out_w.div_ceil(m);
    let tiles = input.n * tiles_h * tiles_w;
    let blocking = choose_blocking(
        ts.alpha,
        spec.in_channels,
        spec.out_channels,
        tiles,
        l1_budget,
    );
    let bt = ts.bt.to_f32();
    let at = ts.at.to_f32();
    Ok(WinogradPlan {
        ts,
        spec: *spec,
        input,
        out_h,
        out_w,
        tiles_h,
        tiles_w,
        blocking,
        l1_budget,
        bt,
        at,
    })
}

fn choose_blocking(alpha: usize, ic: usize, oc: usize, tiles: usize, budget: usize) -> Blocking {
    let ic_chunk = gemm_depth(budget);
    let mut best: Option<(usize, usize, usize)> = None;
    for pb in (NR..=tiles.next_multiple_of(NR)).step_by(NR) {
        let pb_eff = pb.min(tiles);
        for ocb in (MR..=oc.next_multiple_of(MR)).step_by(MR) {
            let ocb_eff = ocb.min(oc);
            if staged_footprint(alpha, ic, ocb_eff, pb_eff) > budget {
                break;
            }
            let score = pb_eff * ocb_eff;
            if best.is_none_or(|(s, p, _)| score > s || (score == s && pb_eff > p)) {
                best = Some((score, pb_eff, ocb_eff));
            }
        }
    }
    match best {
        Some((_, tile_block, oc_block)) => Blocking {
            tile_block,
            oc_block,
            ic_chunk,
            fits_l1: true,
        },
        None => Blocking {
            tile_block: FALLBACK_TILE_BLOCK.min(tiles),
            oc_block: FALLBACK_OC_BLOCK.min(oc),
            ic_chunk,
            fits_l1: false,
        },
    }
}

impl WinogradPlan {
    pub fn transforms(&self) -> &TransformSet {
        &self.ts
    }

    pub fn m(&self) -> usize {
        self.ts.m
    }

    pub fn alpha(&self) -> usize {
        self.ts.alpha
    }

    pub fn spec(&self) -> &ConvSpec {
        &self.spec
    }

    pub fn input_shape(&self) -> Shape {
        self.input
    }

    pub fn output_shape(&self) -> Shape {
        Shape::new(self.input.n, self.spec.out_channels, self.out_h, self.out_w)
    }

    /// `(tiles_h, tiles_w)` per image.
    pub fn tile_grid(&self) -> (usize, usize) {
        (self.tiles_h, self.tiles_w)
    }

    /// `P`, the tile count over the whole batch.
    pub fn tiles(&self) -> usize {
        self.input.n * self.tiles_h * self.tiles_w
    }

    pub fn blocking(&self) -> Blocking {
        self.blocking
    }

    pub fn l1_budget(&self) -> usize {
        self.l1_budget
    }

    pub(crate) fn bt_f32(&self) -> &[f32] {
        &self.bt
    }

    pub(crate) fn at_f32(&self) -> &[f32] {
        &self.at
    }

    /// `(n, tile_row, tile_col)` of tile `t`.
    #[inline]
    pub fn tile_coords(&self, t: usize) -> (usize, usize, usize) {
        let per_image = self.tiles_h * self.tiles_w;
        (
            t / per_image,
            (t % per_image) / self.tiles_w,
            t % self.tiles_w,
        )
    }

    /// Blocks in handout order: tile blocks outermost, channel blocks inner.
    pub fn blocks(&self) -> Vec<WorkBlock> {
        let Blocking {
            tile_block,
            oc_block,
            ..
        } = self.blocking;
        let (p, oc) = (self.tiles(), self.spec.out_channels);
        let mut out = Vec::with_capacity(p.div_ceil(tile_block) * oc.div_ceil(oc_block));
        for t0 in (0..p).step_by(tile_block) {
            for c0 in (0..oc).step_by(oc_block) {
                out.push(WorkBlock {
                    t0,
                    t1: (t0 + tile_block).min(p),
                    c0,
                    c1: (c0 + oc_block).min(oc),
                });
            }
        }
        out
    }

    /// f32 elements of the staged transformed-input block (`alpha²·IC·P_b`).
    pub fn staged_input_len(&self) -> usize {
        self.alpha() * self.alpha() * self.spec.in_channels * self.blocking.tile_block
    }

    /// f32 elements of the channel-product block (`alpha²·OC_b·P_b`).
    pub fn staged_product_len(&self) -> usize {
        self.alpha() * self.alpha() * self.blocking.oc_block * self.blocking.tile_block
    }

    /// Bytes of one worker's staging buffers.
    pub fn staged_footprint_bytes(&self) -> usize {
        staged_footprint(
            self.alpha(),
            self.spec.in_channels,
            self.blocking.oc_block,
            self.blocking.tile_block,
        )
    }

    /// Bytes of the transformed filter bank.
    pub fn bank_bytes(&self) -> usize {
        self.alpha()
            * self.alpha()
            * self.spec.out_channels
            * self.spec.in_channels
            * std::mem::size_of::<f32>()
    }

    /// Peak auxiliary memory for a run on `workers` workers: the filter bank
    /// plus one staging area per worker that can receive a block.
    pub fn aux_bytes(&self, workers: usize) -> usize {
        let active = workers.max(1).min(self.blocks().len().max(1));
        self.bank_bytes() + active * self.staged_footprint_bytes()
    }
}
