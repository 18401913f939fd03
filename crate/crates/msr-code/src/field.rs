//! GF(2^m) arithmetic and the dense linear algebra built on it.
//!
//! Two fields are supported: GF(2^8) under the reduction polynomial
//! x^8+x^4+x^3+x^2+1 (0x11d) and GF(2^16) under x^16+x^12+x^3+x+1
//! (0x1100b). Addition is XOR; multiplication and inversion go through
//! exp/log tables built once at construction. Elimination routines pivot
//! on the first nonzero entry — a finite field has no magnitudes.

use thiserror::Error;

/// A field element. Valid values lie below `2^m` for the [`FieldContext`]
/// in use.
pub type Fe = u16;

/// GF(2^8) reduction polynomial x^8 + x^4 + x^3 + x^2 + 1.
pub const POLY_GF256: u32 = 0x11d;
/// GF(2^16) reduction polynomial x^16 + x^12 + x^3 + x + 1.
pub const POLY_GF65536: u32 = 0x1100b;

/// Field addition. XOR in characteristic 2, so subtraction is the same op.
#[inline]
pub fn add(a: Fe, b: Fe) -> Fe {
    a ^ b
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("pivot submatrix is rank-deficient at column {0}")]
    PivotSingular(usize),
    #[error("unsupported field width m={0} (expected 8 or 16)")]
    UnsupportedWidth(u8),
}

/// Arithmetic tables for one binary extension field GF(2^m).
///
/// Immutable after construction and freely shareable across threads;
/// every operation is pure.
#[derive(Debug, Clone)]
pub struct FieldContext {
    m: u8,
    reduction_polynomial: u32,
    /// Multiplicative group order, 2^m - 1.
    order: usize,
    generator: Fe,
    exp_table: Vec<Fe>,
    log_table: Vec<u16>,
}

/// Carry-less multiply of `a` by `b` reduced modulo `poly`, one bit of `b`
/// at a time. Used only to build the tables.
fn clmul_mod(a: Fe, b: Fe, poly: u32, m: u8) -> Fe {
    let high = 1u32 << m;
    let mut a = a as u32;
    let mut b = b as u32;
    let mut acc = 0u32;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if a & high != 0 {
            a ^= poly;
        }
    }
    acc as Fe
}

impl FieldContext {
    /// Builds the exp/log tables for GF(2^m), m = 8 or 16, using the
    /// smallest primitive element as the table generator.
    pub fn new(m: u8) -> Result<FieldContext, FieldError> {
        let reduction_polynomial = match m {
            8 => POLY_GF256,
            16 => POLY_GF65536,
            _ => return Err(FieldError::UnsupportedWidth(m)),
        };
        let size = 1usize << m;
        let order = size - 1;
        let mut exp_table = vec![0 as Fe; size];
        let mut log_table = vec![0u16; size];
        let mut generator: Fe = 0;
        'candidates: for g in 2..size {
            let g = g as Fe;
            let mut cur: Fe = 1;
            for i in 0..order {
                exp_table[i] = cur;
                log_table[cur as usize] = i as u16;
                cur = clmul_mod(cur, g, reduction_polynomial, m);
                if cur == 1 && i + 1 < order {
                    // g's multiplicative order is i+1 < 2^m - 1: not primitive.
                    continue 'candidates;
                }
            }
            debug_assert_eq!(cur, 1, "element order must divide 2^m - 1");
            generator = g;
            break;
        }
        assert!(generator != 0, "GF(2^{m}) must have a primitive element");
        Ok(FieldContext {
            m,
            reduction_polynomial,
            order,
            generator,
            exp_table,
            log_table,
        })
    }

    pub fn m(&self) -> u8 {
        self.m
    }

    pub fn reduction_polynomial(&self) -> u32 {
        self.reduction_polynomial
    }

    /// Number of elements, 2^m.
    pub fn size(&self) -> usize {
        self.order + 1
    }

    /// Multiplicative group order, 2^m - 1.
    pub fn order(&self) -> usize {
        self.order
    }

    /// The primitive element the tables are built on.
    pub fn generator(&self) -> Fe {
        self.generator
    }

    pub fn exp_table(&self) -> &[Fe] {
        &self.exp_table
    }

    pub fn log_table(&self) -> &[u16] {
        &self.log_table
    }

    #[inline]
    fn in_range(&self, a: Fe) -> bool {
        (a as usize) < self.size()
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        debug_assert!(self.in_range(a) && self.in_range(b));
        if a == 0 || b == 0 {
            return 0;
        }
        let idx = self.log_table[a as usize] as usize + self.log_table[b as usize] as usize;
        self.exp_table[idx % self.order]
    }

    /// Multiplicative inverse; `a` must be nonzero.
    pub fn inv(&self, a: Fe) -> Result<Fe, FieldError> {
        debug_assert!(self.in_range(a));
        if a == 0 {
            return Err(FieldError::DivisionByZero);
        }
        let l = self.log_table[a as usize] as usize;
        Ok(self.exp_table[(self.order - l) % self.order])
    }

    pub fn div(&self, a: Fe, b: Fe) -> Result<Fe, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `a` raised to the `e`th power, with the 0^0 = 1 convention.
    pub fn pow(&self, a: Fe, e: usize) -> Fe {
        debug_assert!(self.in_range(a));
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let l = self.log_table[a as usize] as usize;
        self.exp_table[(l * e) % self.order]
    }
}

/// A dense row-major matrix of field elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    entries: Vec<Fe>,
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = Fe;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Fe {
        debug_assert!(r < self.rows && c < self.cols);
        &self.entries[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Fe {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.entries[r * self.cols + c]
    }
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<Fe>) -> Matrix {
        assert_eq!(entries.len(), rows * cols);
        Matrix { rows, cols, entries }
    }

    pub fn zeros(rows: usize, cols: usize) -> Matrix {
        Matrix::new(rows, cols, vec![0; rows * cols])
    }

    pub fn identity(n: usize) -> Matrix {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    /// Vandermonde matrix: entry (r, c) = points[c]^r.
    pub fn vandermonde(ctx: &FieldContext, points: &[Fe], rows: usize) -> Matrix {
        let mut m = Matrix::zeros(rows, points.len());
        for (c, &p) in points.iter().enumerate() {
            for r in 0..rows {
                m[(r, c)] = ctx.pow(p, r);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[Fe] {
        &self.entries[r * self.cols..(r + 1) * self.cols]
    }

    /// New matrix with `right` appended column-wise.
    pub fn augment(&self, right: &Matrix) -> Matrix {
        assert_eq!(self.rows, right.rows);
        let cols = self.cols + right.cols;
        let mut out = Matrix::zeros(self.rows, cols);
        for r in 0..self.rows {
            out.entries[r * cols..r * cols + self.cols].copy_from_slice(self.row(r));
            out.entries[r * cols + self.cols..(r + 1) * cols].copy_from_slice(right.row(r));
        }
        out
    }

    /// New matrix with a single extra column holding `col`.
    pub fn augment_col(&self, col: &[Fe]) -> Matrix {
        assert_eq!(col.len(), self.rows);
        self.augment(&Matrix::new(self.rows, 1, col.to_vec()))
    }

    /// Copy of the sub-block rows `r0..r1`, columns `c0..c1`.
    pub fn block(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> Matrix {
        assert!(r1 <= self.rows && c1 <= self.cols && r0 <= r1 && c0 <= c1);
        let mut out = Matrix::zeros(r1 - r0, c1 - c0);
        for r in r0..r1 {
            for c in c0..c1 {
                out[(r - r0, c - c0)] = self[(r, c)];
            }
        }
        out
    }

    pub fn mul_vec(&self, ctx: &FieldContext, v: &[Fe]) -> Vec<Fe> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let row = self.row(r);
                let mut acc = 0;
                for (c, &x) in v.iter().enumerate() {
                    acc ^= ctx.mul(row[c], x);
                }
                acc
            })
            .collect()
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let cols = self.cols;
        let (a, b) = (a.min(b), a.max(b));
        let (lo, hi) = self.entries.split_at_mut(b * cols);
        lo[a * cols..(a + 1) * cols].swap_with_slice(&mut hi[..cols]);
    }

    pub fn scale_row(&mut self, ctx: &FieldContext, r: usize, factor: Fe) {
        for v in &mut self.entries[r * self.cols..(r + 1) * self.cols] {
            *v = ctx.mul(*v, factor);
        }
    }

    /// dst-row ^= factor * src-row.
    pub fn add_scaled_row(&mut self, ctx: &FieldContext, dst: usize, src: usize, factor: Fe) {
        assert_ne!(dst, src);
        if factor == 0 {
            return;
        }
        let cols = self.cols;
        let (lo, hi) = self.entries.split_at_mut(dst.max(src) * cols);
        let (dst_row, src_row) = if dst > src {
            (&mut hi[..cols], &lo[src * cols..(src + 1) * cols])
        } else {
            let hi: &[Fe] = hi;
            (&mut lo[dst * cols..(dst + 1) * cols], &hi[..cols])
        };
        for (d, &s) in dst_row.iter_mut().zip(src_row) {
            if s != 0 {
                *d ^= ctx.mul(factor, s);
            }
        }
    }

    /// Gauss–Jordan elimination targeting the listed columns, in order.
    ///
    /// The result is row-equivalent to `self` and its restriction to
    /// `pivot_cols` is the identity: pivot column `j` is owned by row `j`.
    /// Extra columns (attached right-hand sides) ride along under the same
    /// row transform. Fails with `PivotSingular` when the pivot submatrix
    /// is rank-deficient.
    pub fn row_reduce(&self, ctx: &FieldContext, pivot_cols: &[usize]) -> Result<Matrix, FieldError> {
        assert!(pivot_cols.len() <= self.rows);
        let mut a = self.clone();
        for (step, &pc) in pivot_cols.iter().enumerate() {
            assert!(pc < a.cols);
            let pivot_row = (step..a.rows)
                .find(|&r| a[(r, pc)] != 0)
                .ok_or(FieldError::PivotSingular(pc))?;
            a.swap_rows(step, pivot_row);
            let scale = ctx.inv(a[(step, pc)])?;
            a.scale_row(ctx, step, scale);
            for r in 0..a.rows {
                if r != step && a[(r, pc)] != 0 {
                    let f = a[(r, pc)];
                    a.add_scaled_row(ctx, r, step, f);
                }
            }
        }
        Ok(a)
    }

    /// Solves A·x = b for square nonsingular A.
    pub fn solve(&self, ctx: &FieldContext, b: &[Fe]) -> Result<Vec<Fe>, FieldError> {
        assert_eq!(self.rows, self.cols, "solve requires a square matrix");
        let pivots: Vec<usize> = (0..self.cols).collect();
        let reduced = self
            .augment_col(b)
            .row_reduce(ctx, &pivots)
            .map_err(|_| FieldError::SingularMatrix)?;
        Ok((0..self.rows).map(|r| reduced[(r, self.cols)]).collect())
    }

    pub fn inverse(&self, ctx: &FieldContext) -> Result<Matrix, FieldError> {
        assert_eq!(self.rows, self.cols, "inverse requires a square matrix");
        let n = self.rows;
        let pivots: Vec<usize> = (0..n).collect();
        let reduced = self
            .augment(&Matrix::identity(n))
            .row_reduce(ctx, &pivots)
            .map_err(|_| FieldError::SingularMatrix)?;
        Ok(reduced.block(0, n, n, 2 * n))
    }

    /// Row rank over the field.
    pub fn rank(&self, ctx: &FieldContext) -> usize {
        let mut a = self.clone();
        let mut r = 0;
        for c in 0..a.cols {
            if r == a.rows {
                break;
            }
            let Some(p) = (r..a.rows).find(|&i| a[(i, c)] != 0) else {
                continue;
            };
            a.swap_rows(r, p);
            let scale = ctx.inv(a[(r, c)]).expect("pivot is nonzero");
            a.scale_row(ctx, r, scale);
            for i in (r + 1)..a.rows {
                if a[(i, c)] != 0 {
                    let f = a[(i, c)];
                    a.add_scaled_row(ctx, i, r, f);
                }
            }
            r += 1;
        }
        r
    }
}
