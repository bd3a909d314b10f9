//! The three per-block stages: gather + input transform, channel product,
//! output transform + scatter.

use std::sync::atomic::{AtomicU32, Ordering};

use crate::gemm::{self, GemmDims};

use super::{SharedSlice, TransformedFilterBank, WinogradPlan, WorkBlock};

/// `L · X · Lᵀ` for `L` of shape `R×K` (row-major slice) and `X` of `K×K`.
/// Accumulation runs in increasing index order.
#[inline(always)]
fn sandwich<const R: usize, const K: usize>(l: &[f32], x: &[[f32; K]; K]) -> [[f32; R]; R] {
    let mut tmp = [[0.0f32; K]; R];
    for i in 0..R {
        for p in 0..K {
            let a = l[i * K + p];
            for j in 0..K {
                tmp[i][j] += a * x[p][j];
            }
        }
    }
    let mut out = [[0.0f32; R]; R];
    for i in 0..R {
        for p in 0..K {
            let a = tmp[i][p];
            for j in 0..R {
                out[i][j] += a * l[j * K + p];
            }
        }
    }
    out
}

/// Gathers the input tiles of `block`, input-transforms them and stores the
/// result position-major in `v`: entry `(x, ic, t)` lives at
/// `(x·IC + ic)·nt + (t − t0)` with `nt = block.tile_count()`.
///
/// Tile `(th, tw)` reads rows `th·m − p ..` and cols `tw·m − p ..` of width
/// `alpha`; anything outside the image reads as zero. `input` is the
/// channel-major f32 buffer of the plan's input shape.
pub fn gather_tiles(input: &[f32], plan: &WinogradPlan, block: &WorkBlock, v: &mut [f32]) {
    match plan.m() {
        2 => gather::<4>(input, plan, block, v),
        4 => gather::<6>(input, plan, block, v),
        m => unreachable!("plan with m={m}"),
    }
}

fn gather<const A: usize>(input: &[f32], plan: &WinogradPlan, block: &WorkBlock, v: &mut [f32]) {
    let shape = plan.input_shape();
    let (h, w, ic_n) = (shape.h as isize, shape.w as isize, shape.c);
    let (m, p) = (plan.m() as isize, plan.spec().padding as isize);
    let nt = block.tile_count();
    let bt = plan.bt_f32();
    let pos_stride = ic_n * nt;
    assert!(v.len() >= A * A * pos_stride);
    for (ti, t) in (block.t0..block.t1).enumerate() {
        let (n, th, tw) = plan.tile_coords(t);
        let y0 = th as isize * m - p;
        let x0 = tw as isize * m - p;
        let interior = y0 >= 0 && x0 >= 0 && y0 + A as isize <= h && x0 + A as isize <= w;
        for ic in 0..ic_n {
            let plane = &input[(n * ic_n + ic) * shape.h * shape.w..][..shape.h * shape.w];
            let mut d = [[0.0f32; A]; A];
            if interior {
                for (r, row) in d.iter_mut().enumerate() {
                    let start = (y0 as usize + r) * shape.w + x0 as usize;
                    row.copy_from_slice(&plane[start..start + A]);
                }
            } else {
                for (r, row) in d.iter_mut().enumerate() {
                    let y = y0 + r as isize;
                    if y < 0 || y >= h {
                        continue;
                    }
                    for (c, cell) in row.iter_mut().enumerate() {
                        let x = x0 + c as isize;
                        if x >= 0 && x < w {
                            *cell = plane[y as usize * shape.w + x as usize];
                        }
                    }
                }
            }
            let u = sandwich::<A, A>(bt, &d);
            let base = ic * nt + ti;
            for (x, val) in u.iter().flatten().enumerate() {
                v[x * pos_stride + base] = *val;
            }
        }
    }
}

/// For every transform position `x`: `M[x] = U[x][c0..c1][..] · V[x]`, an
/// `(OC_b × IC)·(IC × nt)` product. `out` is `[alpha²][OC_b][nt]`. Returns the
/// number of scalar multiplications performed.
pub fn channel_product(
    bank: &TransformedFilterBank,
    v: &[f32],
    plan: &WinogradPlan,
    block: &WorkBlock,
    out: &mut [f32],
) -> u64 {
    let spec = plan.spec();
    let (ic_n, oc_n) = (spec.in_channels, spec.out_channels);
    let (nt, ocb) = (block.tile_count(), block.channel_count());
    let positions = plan.alpha() * plan.alpha();
    let dims = GemmDims {
        m: ocb,
        n: nt,
        k: ic_n,
        lda: ic_n,
        ldb: nt,
        ldc: nt,
        kc: plan.blocking().ic_chunk,
    };
    let u = bank.data();
    let mut muls = 0;
    for x in 0..positions {
        let a = &u[(x * oc_n + block.c0) * ic_n..];
        let b = &v[x * ic_n * nt..][..ic_n * nt];
        let c = &mut out[x * ocb * nt..][..ocb * nt];
        muls += gemm::gemm(dims, a, b, c);
    }
    muls
}

/// Output-transforms every `(oc, tile)` of `block` and writes the `m×m`
/// patches into the channel-major `output`, dropping rows and columns that
/// overhang the output edge.
pub fn scatter_output(mblk: &[f32], plan: &WinogradPlan, block: &WorkBlock, output: &mut [f32]) {
    assert_eq!(output.len(), plan.output_shape().len());
    let shared = SharedSlice::new(output);
    // SAFETY: `shared` is the only handle to `output` for this call.
    unsafe { scatter_into(mblk, plan, block, &shared, None) }
}

/// # Safety
/// No other thread may write the output elements covered by `block`.
pub(crate) unsafe fn scatter_into(
    mblk: &[f32],
    plan: &WinogradPlan,
    block: &WorkBlock,
    output: &SharedSlice<'_>,
    counts: Option<&[AtomicU32]>,
) {
    match plan.m() {
        2 => scatter::<2, 4>(mblk, plan, block, output, counts),
        4 => scatter::<4, 6>(mblk, plan, block, output, counts),
        m => unreachable!("plan with m={m}"),
    }
}

unsafe fn scatter<const M: usize, const A: usize>(
    mblk: &[f32],
    plan: &WinogradPlan,
    block: &WorkBlock,
    output: &SharedSlice<'_>,
    counts: Option<&[AtomicU32]>,
) {
    let out_shape = plan.output_shape();
    let (oh, ow, oc_n) = (out_shape.h, out_shape.w, out_shape.c);
    let at = plan.at_f32();
    let nt = block.tile_count();
    let pos_stride = block.channel_count() * nt;
    for (ci, oc) in (block.c0..block.c1).enumerate() {
        for (ti, t) in (block.t0..block.t1).enumerate() {
            let mut tile = [[0.0f32; A]; A];
            for (x, cell) in tile.iter_mut().flatten().enumerate() {
                *cell = mblk[x * pos_stride + ci * nt + ti];
            }
            let y = sandwich::<M, A>(at, &tile);
            let (n, th, tw) = plan.tile_coords(t);
            let plane = (n * oc_n + oc) * oh * ow;
            let rows = M.min(oh - th * M);
            let cols = M.min(ow - tw * M);
            for (r, yrow) in y.iter().enumerate().take(rows) {
                let base = plane + (th * M + r) * ow + tw * M;
                for (c, &val) in yrow.iter().enumerate().take(cols) {
                    output.write(base + c, val);
                    if let Some(counts) = counts {
                        counts[base + c].fetch_add(1, Ordering::Relaxed);
                    }
                }
            }
        }
    }
}
