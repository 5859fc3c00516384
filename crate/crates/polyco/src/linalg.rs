//! Rank, nullspace and subspace tests with a documented singular-value
//! threshold: singular values below `RANK_EPS * sigma_max` count as zero.

use nalgebra::{DMatrix, DVector};

pub const RANK_EPS: f64 = 1e-8;

/// Pad with zero rows so the thin SVD exposes a full right factor; needed to
/// read nullspaces off wide matrices.
fn squared_up(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() >= a.ncols() {
        return a.clone();
    }
    let mut out = DMatrix::zeros(a.ncols(), a.ncols());
    out.view_mut((0, 0), (a.nrows(), a.ncols())).copy_from(a);
    out
}

pub fn rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.max();
    if smax <= 0.0 {
        return 0;
    }
    svd.singular_values.iter().filter(|s| **s > RANK_EPS * smax).count()
}

/// Orthonormal basis of the (right) nullspace, as matrix columns.
pub fn nullspace(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let padded = squared_up(a);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.as_ref().expect("svd with v requested");
    let smax = svd.singular_values.max();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if smax <= 0.0 || *s <= RANK_EPS * smax {
            cols.push(vt.row(i).transpose());
        }
    }
    // thin SVD of a tall matrix lists min(m, n) = n values, so every
    // nullspace direction is represented
    let mut out = DMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        out.set_column(j, c);
    }
    out
}

/// Minimum-norm least-squares solve via the SVD pseudoinverse.
pub fn pinv_solve(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    svd.solve(b, RANK_EPS * smax.max(f64::MIN_POSITIVE))
        .expect("svd solve")
}

/// Concatenate generating sets (sum of subspaces).
pub fn span_sum(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n = parts.iter().map(|p| p.nrows()).max().unwrap_or(0);
    let total: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = DMatrix::zeros(n, total);
    let mut col = 0;
    for p in parts {
        assert!(p.nrows() == n || p.ncols() == 0);
        for j in 0..p.ncols() {
            out.set_column(col, &p.column(j).into_owned());
            col += 1;
        }
    }
    out
}

/// Basis of the intersection of two column spans, via the nullspace of
/// `[U  -V]`.
pub fn span_intersection(u: &DMatrix<f64>, v: &DMatrix<f64>) -> DMatrix<f64> {
    let n = u.nrows();
    if u.ncols() == 0 || v.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    assert_eq!(n, v.nrows());
    let mut stacked = DMatrix::zeros(n, u.ncols() + v.ncols());
    stacked.view_mut((0, 0), (n, u.ncols())).copy_from(u);
    stacked.view_mut((0, u.ncols()), (n, v.ncols())).copy_from(&(-v));
    let ns = nullspace(&stacked);
    if ns.ncols() == 0 {
        return DMatrix::zeros(n, 0);
    }
    let coeff = ns.rows(0, u.ncols()).into_owned();
    let raw = u * coeff;
    // orthonormalize and drop numerically dependent directions
    column_basis(&raw)
}

/// Orthonormal basis of the column span.
pub fn column_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return a.clone();
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd with u requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, s)| smax > 0.0 && **s > RANK_EPS * smax)
        .map(|(i, _)| i)
        .collect();
    let mut out = DMatrix::zeros(a.nrows(), keep.len());
    for (j, i) in keep.iter().enumerate() {
        out.set_column(j, &u.column(*i).into_owned());
    }
    out
}

/// `span(inner) subset of span(outer)`, decided by a rank test.
pub fn is_contained(inner: &DMatrix<f64>, outer: &DMatrix<f64>) -> bool {
    if inner.ncols() == 0 {
        return true;
    }
    let r_outer = rank(outer);
    let combined = span_sum(&[outer, inner]);
    rank(&combined) == r_outer
}

/// Subspace equality with the rank deficits of each containment direction.
pub fn subspace_equal(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (bool, usize, usize) {
    let ra = rank(a);
    let rb = rank(b);
    let rab = rank(&span_sum(&[a, b]));
    // deficits: directions of one side missing from the other
    (rab == ra && rab == rb, rab - rb, rab - ra)
}
