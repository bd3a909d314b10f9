//! Blocked single-precision GEMM shared by the Winograd channel-product stage
//! and the im2col baseline.
//!
//! `C[m×n] = A[m×k] · B[k×n]`, all row-major with explicit leading dimensions.
//! Every output element is accumulated as `((0 + a0·b0) + a1·b1) + …` in
//! increasing `k`, whichever path (microkernel or edge loop) computes it and
//! however `k` is chunked. The result is therefore bitwise independent of the
//! blocking parameters.

/// Microkernel rows (output channels).
pub const MR: usize = 4;
/// Microkernel columns (tiles / pixels). Block widths are multiples of this.
pub const NR: usize = 16;

/// Operand description for [`gemm`].
#[derive(Debug, Clone, Copy)]
pub struct GemmDims {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub lda: usize,
    pub ldb: usize,
    pub ldc: usize,
    /// Depth of one k-chunk; the `kc×NR` panel of B is what stays L1-resident.
    pub kc: usize,
}

/// Computes `C = A·B` (overwriting `C`) and returns the number of scalar
/// multiplications performed.
pub fn gemm(d: GemmDims, a: &[f32], b: &[f32], c: &mut [f32]) -> u64 {
    let GemmDims {
        m,
        n,
        k,
        lda,
        ldb,
        ldc,
        kc,
    } = d;
    if m == 0 || n == 0 {
        return 0;
    }
    if k == 0 {
        for i in 0..m {
            c[i * ldc..i * ldc + n].fill(0.0);
        }
        return 0;
    }
    debug_assert!(a.len() >= (m - 1) * lda + k);
    debug_assert!(b.len() >= (k - 1) * ldb + n);
    debug_assert!(c.len() >= (m - 1) * ldc + n);
    let kc = kc.max(1);
    let mut muls = 0u64;
    for j0 in (0..n).step_by(NR) {
        let nr = NR.min(n - j0);
        for k0 in (0..k).step_by(kc) {
            let kl = kc.min(k - k0);
            let first = k0 == 0;
            for i0 in (0..m).step_by(MR) {
                let mr = MR.min(m - i0);
                let a_blk = &a[i0 * lda + k0..];
                let b_blk = &b[k0 * ldb + j0..];
                let c_blk = &mut c[i0 * ldc + j0..];
                if mr == MR && nr == NR {
                    microkernel(kl, a_blk, lda, b_blk, ldb, c_blk, ldc, first);
                } else {
                    edge(mr, nr, kl, a_blk, lda, b_blk, ldb, c_blk, ldc, first);
                }
                muls += (mr * nr * kl) as u64;
            }
        }
    }
    muls
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn microkernel(
    kl: usize,
    a: &[f32],
    lda: usize,
    b: &[f32],
    ldb: usize,
    c: &mut [f32],
    ldc: usize,
    first: bool,
) {
    let mut acc = [[0.0f32; NR]; MR];
    if !first {
        for (r, row) in acc.iter_mut().enumerate() {
            row.copy_from_slice(&c[r * ldc..r * ldc + NR]);
        }
    }
    let a_rows: [&[f32]; MR] = std::array::from_fn(|r| &a[r * lda..r * lda + kl]);
    for p in 0..kl {
        let brow: &[f32; NR] = b[p * ldb..p * ldb + NR].try_into().unwrap();
        for r in 0..MR {
            let av = a_rows[r][p];
            for j in 0..NR {
                acc[r][j] += av * brow[j];
            }
        }
    }
    for (r, row) in acc.iter().enumerate() {
        c[r * ldc..r * ldc + NR].copy_from_slice(row);
    }
}

#[allow(clippy::too_many_arguments)]
fn edge(
    mr: usize,
    nr: usize,
    kl: usize,
    a: &[f32],
    lda: usize,
    b: &[f32],
    ldb: usize,
    c: &mut [f32],
    ldc: usize,
    first: bool,
) {
    for r in 0..mr {
        let a_row = &a[r * lda..r * lda + kl];
        let c_row = &mut c[r * ldc..r * ldc + nr];
        if first {
            c_row.fill(0.0);
        }
        for (p, &av) in a_row.iter().enumerate() {
            let b_row = &b[p * ldb..p * ldb + nr];
            for (cv, &bv) in c_row.iter_mut().zip(b_row) {
                *cv += av * bv;
            }
        }
    }
}
