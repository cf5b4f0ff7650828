//! Matrix aliases, Hermitian linear algebra and the real-space lifting maps.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type RMat = DMatrix<f64>;
pub type CVec = DVector<C64>;
pub type RVec = DVector<f64>;

/// Max absolute entry difference tolerated between `A` and `Aᴴ`.
pub const TOL_HERM: f64 = 1e-10;
/// Eigenvalues down to this value still count as PSD.
pub const PSD_FLOOR: f64 = -1e-8;
/// Relative eigenvalue cutoff below which an inverse is refused.
pub const SINGULAR_RATIO: f64 = 1e-12;

/// `(A + Aᴴ)/2`.
pub fn hermitian_part<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> DMatrix<T> {
    let h = (a + a.adjoint()) * T::from_real(0.5);
    h
}

pub fn max_asymmetry<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let d = a - a.adjoint();
    d.iter().map(|z| z.clone().modulus()).fold(0.0, f64::max)
}

pub fn check_hermitian<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::dim(format!(
            "expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let scale = a.iter().map(|z| z.clone().modulus()).fold(1.0, f64::max);
    let asym = max_asymmetry(a);
    if asym > TOL_HERM * scale {
        return Err(Error::NotHermitian(asym));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermEig<T: ComplexField<RealField = f64>> {
    pub values: RVec,
    pub vectors: DMatrix<T>,
}

impl<T: ComplexField<RealField = f64>> HermEig<T> {
    pub fn new(a: &DMatrix<T>) -> Self {
        let n = a.nrows();
        if n == 0 {
            return HermEig {
                values: RVec::zeros(0),
                vectors: DMatrix::zeros(0, 0),
            };
        }
        let eig = hermitian_part(a).symmetric_eigen();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let values = RVec::from_iterator(n, idx.iter().map(|&i| eig.eigenvalues[i]));
        let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])].clone());
        HermEig { values, vectors }
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `Q f(Λ) Qᴴ`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> DMatrix<T> {
        let mut scaled = self.vectors.clone();
        for (c, &v) in self.values.iter().enumerate() {
            let mut col = scaled.column_mut(c);
            col *= T::from_real(f(v));
        }
        hermitian_part(&(scaled * self.vectors.adjoint()))
    }
}

pub fn min_eigenvalue<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    HermEig::new(a).min()
}

pub fn is_psd<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> bool {
    check_hermitian(a).is_ok() && min_eigenvalue(a) >= PSD_FLOOR
}

/// Inverse of a Hermitian positive definite matrix through its eigendecomposition.
///
/// Refuses when the smallest eigenvalue falls below `1e-12` times the largest.
pub fn herm_inv<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, what: &str) -> Result<DMatrix<T>> {
    check_hermitian(a)?;
    let eig = HermEig::new(a);
    let (lo, hi) = (eig.min(), eig.max());
    if a.nrows() == 0 {
        return Ok(a.clone());
    }
    if !(hi > 0.0) || lo < SINGULAR_RATIO * hi {
        let ratio = if hi > 0.0 { lo / hi } else { 0.0 };
        return Err(Error::NearSingular {
            what: what.to_string(),
            ratio,
        });
    }
    Ok(eig.map(|v| 1.0 / v))
}

/// Principal square root with negative eigenvalues floored at zero.
pub fn herm_sqrt<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> DMatrix<T> {
    HermEig::new(a).map(|v| v.max(0.0).sqrt())
}

/// Nearest PSD matrix in Frobenius norm.
pub fn psd_project<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> DMatrix<T> {
    HermEig::new(a).map(|v| v.max(0.0))
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn frob<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    a.iter()
        .map(|z| z.clone().modulus_squared())
        .sum::<f64>()
        .sqrt()
}

pub fn trace_re(a: &CMat) -> f64 {
    a.diagonal().iter().map(|z| z.re).sum()
}

/// `‖A − B‖_F / max(‖B‖_F, tiny)`.
pub fn rel_err<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
    frob(&(a - b)) / frob(b).max(1e-300)
}

/// `[Re x; Im x]`.
pub fn lift_vector(x: &CVec) -> RVec {
    let n = x.len();
    RVec::from_fn(2 * n, |i, _| if i < n { x[i].re } else { x[i - n].im })
}

/// `Γ_M y = y[..M] + j y[M..]`.
pub fn gamma_unlift(y: &RVec) -> Result<CVec> {
    if y.len() % 2 != 0 {
        return Err(Error::dim(format!("odd lifted length {}", y.len())));
    }
    let m = y.len() / 2;
    Ok(CVec::from_fn(m, |i, _| C64::new(y[i], y[i + m])))
}

/// Column-wise lifting of a block: `[Re A; Im A]`.
pub fn lift_columns(a: &CMat) -> RMat {
    let n = a.nrows();
    RMat::from_fn(2 * n, a.ncols(), |r, c| {
        if r < n {
            a[(r, c)].re
        } else {
            a[(r - n, c)].im
        }
    })
}

/// Inverse of [`lift_columns`].
pub fn unlift_columns(y: &RMat) -> Result<CMat> {
    if y.nrows() % 2 != 0 {
        return Err(Error::dim(format!("odd lifted row count {}", y.nrows())));
    }
    let m = y.nrows() / 2;
    Ok(CMat::from_fn(m, y.ncols(), |r, c| {
        C64::new(y[(r, c)], y[(r + m, c)])
    }))
}

/// `[[Re H, −Im H], [Im H, Re H]]`.
pub fn lift_matrix_double(h: &CMat) -> RMat {
    let (n, m) = h.shape();
    RMat::from_fn(2 * n, 2 * m, |r, c| {
        let z = h[(r % n, c % m)];
        match (r < n, c < m) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Covariance of the lifted vector given covariance `R` and pseudo-covariance `C`
/// (zero when absent).
pub fn lift_covariance(r: &CMat, c: Option<&CMat>) -> Result<RMat> {
    check_hermitian(r)?;
    let n = r.nrows();
    let zero = CMat::zeros(n, n);
    let c = c.unwrap_or(&zero);
    if c.shape() != r.shape() {
        return Err(Error::dim("pseudo-covariance shape differs from covariance"));
    }
    Ok(RMat::from_fn(2 * n, 2 * n, |i, j| {
        let (a, b) = (i % n, j % n);
        let (rr, cc) = (r[(a, b)], c[(a, b)]);
        0.5 * match (i < n, j < n) {
            (true, true) => (rr + cc).re,
            (true, false) => (cc - rr).im,
            (false, true) => (rr + cc).im,
            (false, false) => (rr - cc).re,
        }
    }))
}

/// Blocked second-moment matrix `[[R_x, R_xs], [R_xsᴴ, R_s]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointMoments {
    pub r_x: CMat,
    pub r_xs: CMat,
    pub r_s: CMat,
}

impl JointMoments {
    pub fn new(r_x: CMat, r_xs: CMat, r_s: CMat) -> Result<Self> {
        let (n, m) = r_xs.shape();
        if r_x.shape() != (n, n) || r_s.shape() != (m, m) {
            return Err(Error::dim(format!(
                "blocks R_x {:?}, R_xs {:?}, R_s {:?} do not conform",
                r_x.shape(),
                r_xs.shape(),
                r_s.shape()
            )));
        }
        Ok(JointMoments { r_x, r_xs, r_s })
    }

    /// Moments of `x = Hs + v` with `s ~ (0, R_s)` and `v ~ (0, R_v)`.
    pub fn from_model(h: &CMat, r_s: &CMat, r_v: &CMat) -> Result<Self> {
        let r_x = hermitian_part(&(h * r_s * h.adjoint() + r_v));
        JointMoments::new(r_x, h * r_s, r_s.clone())
    }

    /// Receive dimension `N`.
    pub fn n(&self) -> usize {
        self.r_x.nrows()
    }

    /// Transmit dimension `M`.
    pub fn m(&self) -> usize {
        self.r_s.nrows()
    }

    pub fn assemble(&self) -> CMat {
        let (n, m) = (self.n(), self.m());
        let mut r = CMat::zeros(n + m, n + m);
        r.view_mut((0, 0), (n, n)).copy_from(&self.r_x);
        r.view_mut((0, n), (n, m)).copy_from(&self.r_xs);
        r.view_mut((n, 0), (m, n)).copy_from(&self.r_xs.adjoint());
        r.view_mut((n, n), (m, m)).copy_from(&self.r_s);
        r
    }

    /// Split an `(N+M)`-square matrix into blocks with `R_x` of size `n`.
    pub fn split(r: &CMat, n: usize) -> Result<Self> {
        if !r.is_square() || r.nrows() <= n {
            return Err(Error::dim(format!(
                "cannot split {:?} with receive size {n}",
                r.shape()
            )));
        }
        let m = r.nrows() - n;
        JointMoments::new(
            r.view((0, 0), (n, n)).into_owned(),
            r.view((0, n), (n, m)).into_owned(),
            r.view((n, n), (m, m)).into_owned(),
        )
    }
}
