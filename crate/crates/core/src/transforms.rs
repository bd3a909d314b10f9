//! Minimal-filtering transforms for `F(m×m, 3×3)`.
//!
//! One output tile of edge `m` is computed from an `alpha×alpha` input tile
//! (`alpha = m + r - 1`) as
//!
//! ```text
//! Y = Aᵀ [ (G g Gᵀ) ⊙ (Bᵀ d B) ] A
//! ```
//!
//! using `alpha²` multiplications instead of `m²·r²`. All three maps compute
//! correlation (no filter flip).
//!
//! The matrices are built from `alpha - 1` finite interpolation points plus
//! the point at infinity. `Aᵀ` and `G` are Vandermonde matrices (the rows of
//! `G` scaled by `1/f_i`, `f_i = Π_{j≠i}(a_i - a_j)`, with `f_0` taken in
//! absolute value); `Bᵀ` is then the unique solution of the bilinear identity
//! `Σ_i Aᵀ[k,i]·G[i,j]·Bᵀ[i,l] = [l = k + j]`, solved column by column with
//! exact rational Gaussian elimination.

use num_rational::Ratio;

use crate::error::{Error, Result};

type Q = Ratio<i64>;

/// Kernel edge; only 3×3 filters are supported.
pub const KERNEL: usize = 3;

/// Small dense row-major f64 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::MatrixDims {
                expected: (rows, cols),
                got: (data.len(), 1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Panics if the rows are ragged.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.as_ref().len(), cols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    /// Panics on inner-dimension mismatch; callers check shapes first.
    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows);
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for p in 0..self.cols {
                let a = self.get(i, p);
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.get(p, j);
                }
            }
        }
        out
    }

    pub fn hadamard(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.dims(), rhs.dims());
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a * b)
            .collect();
        Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn add(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.dims(), rhs.dims());
        let data = self
            .data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect();
        Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Row-major copy rounded to f32.
    pub fn to_f32(&self) -> Vec<f32> {
        self.data.iter().map(|&x| x as f32).collect()
    }

    fn check(&self, expected: (usize, usize)) -> Result<()> {
        if self.dims() != expected {
            return Err(Error::MatrixDims {
                expected,
                got: self.dims(),
            });
        }
        Ok(())
    }
}

/// Transform matrices for one `F(m×m, r×r)` algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformSet {
    pub m: usize,
    pub r: usize,
    pub alpha: usize,
    /// `alpha × r`
    pub g: Mat,
    /// `alpha × alpha`
    pub bt: Mat,
    /// `m × alpha`
    pub at: Mat,
}

/// Interpolation points for the supported tile sizes.
pub fn interpolation_points(m: usize) -> Result<Vec<(i64, i64)>> {
    match m {
        2 => Ok(vec![(0, 1), (1, 1), (-1, 1)]),
        4 => Ok(vec![(0, 1), (1, 1), (-1, 1), (2, 1), (-2, 1)]),
        _ => Err(Error::UnsupportedTile(m)),
    }
}

/// Transform set for `F(m×m, 3×3)`, `m ∈ {2, 4}`.
pub fn transform_set(m: usize) -> Result<TransformSet> {
    let points = interpolation_points(m)?;
    let points: Vec<Q> = points.into_iter().map(|(n, d)| Q::new(n, d)).collect();
    let mut ts = derive(&points, m, KERNEL)?;
    if m == 2 {
        // The customary F(2×2, 3×3) constants carry the point at infinity with
        // a negative sign. Negating that column of Aᵀ and row of Bᵀ together
        // leaves the identity intact.
        let last = ts.alpha - 1;
        for k in 0..ts.m {
            ts.at.set(k, last, -ts.at.get(k, last));
        }
        for l in 0..ts.alpha {
            ts.bt.set(last, l, -ts.bt.get(last, l));
        }
    }
    Ok(ts)
}

/// Builds `(G, Bᵀ, Aᵀ)` for `F(m, r)` from `m + r - 2` distinct finite points.
pub fn derive(points: &[Q], m: usize, r: usize) -> Result<TransformSet> {
    let alpha = m + r - 1;
    if m == 0 || r == 0 || points.len() != alpha - 1 {
        return Err(Error::Derivation(format!(
            "F({m},{r}) needs {} finite points, got {}",
            alpha.saturating_sub(1),
            points.len()
        )));
    }
    for (i, a) in points.iter().enumerate() {
        if points[..i].contains(a) {
            return Err(Error::Derivation(format!(
                "duplicate interpolation point {a}"
            )));
        }
    }
    let zero = Q::from_integer(0);
    let one = Q::from_integer(1);
    let pow = |x: Q, e: usize| (0..e).fold(one, |acc, _| acc * x);

    // Aᵀ: column i holds powers of point i; the last column is the point at infinity.
    let mut at = vec![vec![zero; alpha]; m];
    for (k, row) in at.iter_mut().enumerate() {
        for (i, &a) in points.iter().enumerate() {
            row[i] = pow(a, k);
        }
        row[alpha - 1] = if k == m - 1 { one } else { zero };
    }

    // G: row i holds powers of point i divided by f_i.
    let mut g = vec![vec![zero; r]; alpha];
    for (i, &a) in points.iter().enumerate() {
        let mut f = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .fold(one, |acc, (_, &b)| acc * (a - b));
        if i == 0 && f < zero {
            f = -f;
        }
        for (j, v) in g[i].iter_mut().enumerate() {
            *v = pow(a, j) / f;
        }
    }
    g[alpha - 1][r - 1] = one;

    // Solve for each column of Bᵀ.
    let mut bt = vec![vec![zero; alpha]; alpha];
    let coeffs: Vec<Vec<Q>> = (0..m)
        .flat_map(|k| (0..r).map(move |j| (k, j)))
        .map(|(k, j)| (0..alpha).map(|i| at[k][i] * g[i][j]).collect())
        .collect();
    for l in 0..alpha {
        let rhs: Vec<Q> = (0..m)
            .flat_map(|k| (0..r).map(move |j| (k, j)))
            .map(|(k, j)| if k + j == l { one } else { zero })
            .collect();
        let col = solve_exact(&coeffs, &rhs)?;
        for i in 0..alpha {
            bt[i][l] = col[i];
        }
    }

    let to_mat = |rows: &[Vec<Q>]| {
        Mat::from_rows(
            &rows
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|q| *q.numer() as f64 / *q.denom() as f64)
                        .collect::<Vec<_>>()
                })
                .collect::<Vec<_>>(),
        )
    };
    Ok(TransformSet {
        m,
        r,
        alpha,
        g: to_mat(&g),
        bt: to_mat(&bt),
        at: to_mat(&at),
    })
}

/// Solves an overdetermined but consistent system with a unique solution.
fn solve_exact(a: &[Vec<Q>], b: &[Q]) -> Result<Vec<Q>> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let zero = Q::from_integer(0);
    let mut aug: Vec<Vec<Q>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| row.iter().copied().chain(std::iter::once(rhs)).collect())
        .collect();
    let mut pivot_row = 0;
    for col in 0..cols {
        let Some(p) = (pivot_row..rows).find(|&i| aug[i][col] != zero) else {
            return Err(Error::Derivation(format!(
                "singular system at column {col}"
            )));
        };
        aug.swap(pivot_row, p);
        let pv = aug[pivot_row][col];
        for v in aug[pivot_row].iter_mut() {
            *v /= pv;
        }
        for i in 0..rows {
            if i != pivot_row && aug[i][col] != zero {
                let f = aug[i][col];
                for j in 0..=cols {
                    let d = aug[pivot_row][j] * f;
                    aug[i][j] -= d;
                }
            }
        }
        pivot_row += 1;
    }
    if aug[pivot_row..].iter().any(|row| row[cols] != zero) {
        return Err(Error::Derivation("inconsistent system".into()));
    }
    Ok(aug[..cols].iter().map(|row| row[cols]).collect())
}

/// `G g Gᵀ`.
pub fn filter_transform(g: &Mat, ts: &TransformSet) -> Result<Mat> {
    g.check((ts.r, ts.r))?;
    Ok(ts.g.matmul(g).matmul(&ts.g.transpose()))
}

/// Allocation-free `G g Gᵀ` on a row-major 3×3 filter, written row-major
/// into `out` (`alpha²` entries). Same operation order as [`filter_transform`],
/// so results are bitwise equal.
pub(crate) fn filter_transform_into(ts: &TransformSet, g: &[f64; 9], out: &mut [f64]) {
    let (alpha, r) = (ts.alpha, KERNEL);
    let gm = ts.g.data();
    let mut tmp = [0.0f64; 6 * KERNEL];
    for i in 0..alpha {
        for p in 0..r {
            let a = gm[i * r + p];
            for j in 0..r {
                tmp[i * r + j] += a * g[p * r + j];
            }
        }
    }
    out[..alpha * alpha].fill(0.0);
    for i in 0..alpha {
        for p in 0..r {
            let a = tmp[i * r + p];
            for j in 0..alpha {
                out[i * alpha + j] += a * gm[j * r + p];
            }
        }
    }
}

/// `Bᵀ d B`.
pub fn input_transform(d: &Mat, ts: &TransformSet) -> Result<Mat> {
    d.check((ts.alpha, ts.alpha))?;
    Ok(ts.bt.matmul(d).matmul(&ts.bt.transpose()))
}

/// `Aᵀ M A`.
pub fn output_transform(m: &Mat, ts: &TransformSet) -> Result<Mat> {
    m.check((ts.alpha, ts.alpha))?;
    Ok(ts.at.matmul(m).matmul(&ts.at.transpose()))
}

/// Runs the whole tile pipeline: `Aᵀ[(G g Gᵀ) ⊙ (Bᵀ d B)]A`.
pub fn winograd_tile(g: &Mat, d: &Mat, ts: &TransformSet) -> Result<Mat> {
    let u = filter_transform(g, ts)?;
    let v = input_transform(d, ts)?;
    output_transform(&u.hadamard(&v), ts)
}

/// Per-tile multiplications in the channel-product stage vs. direct convolution.
pub fn mul_count(ts: &TransformSet) -> (usize, usize) {
    mul_counts(ts.m, ts.r)
}

/// `(alpha², m²·r²)` for `F(m×m, r×r)`.
pub fn mul_counts(m: usize, r: usize) -> (usize, usize) {
    let alpha = m + r - 1;
    (alpha * alpha, m * m * r * r)
}
