//! Small dense complex linear algebra used by the beamforming schemes.
//!
//! Rank decisions use one policy: a singular value counts as zero when it is
//! at most `RANK_TOL · σ_max`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const RANK_TOL: f64 = 1e-10;

/// Largest admissible condition number for an explicit inversion.
pub const MAX_CONDITION: f64 = 1e10;

/// Eigenvalues closer than this are treated as tied.
pub const EIGEN_TIE_TOL: f64 = 1e-9;

/// Singular values in the order nalgebra returns them.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    a.clone().svd(false, false).singular_values.iter().copied().collect()
}

pub fn sigma_min(a: &CMat) -> f64 {
    singular_values(a).into_iter().fold(f64::INFINITY, f64::min)
}

pub fn rank(a: &CMat) -> usize {
    let sv = singular_values(a);
    let max = sv.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * max).count()
}

/// Orthonormal basis (as columns) of the right nullspace of `a`.
pub fn null_space(a: &CMat) -> CMat {
    let (m, n) = a.shape();
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    if m == 0 {
        return CMat::identity(n, n);
    }
    // Pad wide matrices with zero rows so the SVD returns a full V.
    let square = if m < n {
        let mut p = CMat::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = square.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cols: Vec<CVec> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| max == 0.0 || s <= RANK_TOL * max)
        .map(|(i, _)| v_t.row(i).adjoint())
        .collect();
    if cols.is_empty() {
        CMat::zeros(n, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Orthonormal basis of `{u : u^H a = 0}`.
pub fn left_null_space(a: &CMat) -> CMat {
    null_space(&a.adjoint())
}

/// Orthonormal basis of the column space of `a`.
pub fn range_basis(a: &CMat) -> CMat {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return CMat::zeros(m, 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cols: Vec<CVec> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| max > 0.0 && s > RANK_TOL * max)
        .map(|(i, _)| u.column(i).into_owned())
        .collect();
    if cols.is_empty() {
        CMat::zeros(m, 0)
    } else {
        CMat::from_columns(&cols)
    }
}

/// Solve `a x = b` for square `a`, refusing ill-conditioned systems.
pub fn solve_checked(a: &CMat, b: &CMat, context: impl FnOnce() -> String) -> Result<CMat> {
    let sv = singular_values(a);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if cond.is_nan() || cond > MAX_CONDITION {
        return Err(Error::NearSingular {
            context: context(),
            cond,
        });
    }
    a.clone().lu().solve(b).ok_or_else(|| Error::NearSingular {
        context: "LU solve".into(),
        cond,
    })
}

pub fn normalize(v: &CVec) -> CVec {
    let n = v.norm();
    if n == 0.0 {
        v.clone()
    } else {
        v / Complex64::new(n, 0.0)
    }
}

/// Scale every column to unit norm.
pub fn normalize_columns(m: &CMat) -> CMat {
    let cols: Vec<CVec> = m.column_iter().map(|c| normalize(&c.into_owned())).collect();
    CMat::from_columns(&cols)
}

/// Eigenpairs of a 2×2 matrix from the characteristic polynomial.
///
/// Returns `(λ, v)` with unit-norm `v`, ordered by decreasing `|λ|`; ties in
/// modulus fall back to lexicographic `(re, im)` order, largest first. The
/// flag reports whether the two eigenvalues coincide within
/// [`EIGEN_TIE_TOL`].
pub fn eig2x2(m: &CMat) -> ([(Complex64, CVec); 2], bool) {
    assert_eq!(m.shape(), (2, 2));
    let (p, q, r, s) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_trace = (p + s) / 2.0;
    let det = p * s - q * r;
    let disc = (half_trace * half_trace - det).sqrt();
    let mut lambdas = [half_trace + disc, half_trace - disc];
    lambdas.sort_by(|x, y| {
        y.norm()
            .partial_cmp(&x.norm())
            .unwrap()
            .then(y.re.partial_cmp(&x.re).unwrap())
            .then(y.im.partial_cmp(&x.im).unwrap())
    });
    // Equal moduli within tolerance: order lexicographically instead.
    if (lambdas[0].norm() - lambdas[1].norm()).abs() <= EIGEN_TIE_TOL * lambdas[0].norm().max(1.0) {
        lambdas.sort_by(|x, y| y.re.partial_cmp(&x.re).unwrap().then(y.im.partial_cmp(&x.im).unwrap()));
    }
    let tie = (lambdas[0] - lambdas[1]).norm() <= EIGEN_TIE_TOL * lambdas[0].norm().max(1.0);

    let eigvec = |l: Complex64| -> CVec {
        // Both rows of (M - λI) annihilate v; use the better conditioned one.
        let from_row0 = CVec::from_vec(vec![q, l - p]);
        let from_row1 = CVec::from_vec(vec![l - s, r]);
        let v = if from_row0.norm() >= from_row1.norm() {
            from_row0
        } else {
            from_row1
        };
        if v.norm() == 0.0 {
            // M = λI: every vector is an eigenvector.
            CVec::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])
        } else {
            normalize(&v)
        }
    };
    (
        [(lambdas[0], eigvec(lambdas[0])), (lambdas[1], eigvec(lambdas[1]))],
        tie,
    )
}

/// Matrix with i.i.d. circularly-symmetric complex Gaussian entries of unit
/// variance.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    })
}

/// Matrix as row-major `[re, im]` pairs.
pub fn to_pairs(m: &CMat) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push([z.re, z.im]);
        }
    }
    out
}

pub fn from_pairs(rows: usize, cols: usize, pairs: &[[f64; 2]]) -> Result<CMat> {
    if pairs.len() != rows * cols {
        return Err(Error::Dump(format!(
            "expected {} entries for a {rows}x{cols} matrix, found {}",
            rows * cols,
            pairs.len()
        )));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| {
        let [re, im] = pairs[i * cols + j];
        Complex64::new(re, im)
    }))
}
