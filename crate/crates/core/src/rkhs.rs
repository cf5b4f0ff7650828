//! Kernel functions and RKHS signal estimators on lifted (real) pilot data.

use crate::error::{Error, Result};
use crate::scene::PilotFrame;
use crate::types::{gamma_unlift, herm_inv, lift_columns, lift_vector, unlift_columns, CMat, CVec, HermEig, RMat, RVec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Gaussian,
    Laplacian,
    Linear,
    Polynomial,
    Matern,
}

impl std::str::FromStr for KernelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gaussian" => KernelKind::Gaussian,
            "laplacian" => KernelKind::Laplacian,
            "linear" => KernelKind::Linear,
            "polynomial" => KernelKind::Polynomial,
            "matern" => KernelKind::Matern,
            _ => return Err(Error::param("kernel", format!("unknown kernel '{s}'"))),
        })
    }
}

impl std::fmt::Display for KernelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            KernelKind::Gaussian => "gaussian",
            KernelKind::Laplacian => "laplacian",
            KernelKind::Linear => "linear",
            KernelKind::Polynomial => "polynomial",
            KernelKind::Matern => "matern",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Length scale for gaussian, laplacian and matern.
    pub bandwidth: f64,
    pub degree: u32,
    pub offset: f64,
    /// Matérn ν; 0.5, 1.5 and 2.5 are supported.
    pub smoothness: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, bandwidth: f64) -> Self {
        KernelSpec {
            kind,
            bandwidth,
            degree: 2,
            offset: 1.0,
            smoothness: 1.5,
        }
    }

    pub fn gaussian(bandwidth: f64) -> Self {
        KernelSpec::new(KernelKind::Gaussian, bandwidth)
    }

    pub fn polynomial(degree: u32, offset: f64) -> Self {
        KernelSpec {
            degree,
            offset,
            ..KernelSpec::new(KernelKind::Polynomial, 1.0)
        }
    }

    pub fn linear() -> Self {
        KernelSpec::new(KernelKind::Linear, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0) || !self.bandwidth.is_finite() {
            return Err(Error::param("bandwidth", "must be positive and finite"));
        }
        if self.degree < 1 {
            return Err(Error::param("degree", "must be at least 1"));
        }
        if self.kind == KernelKind::Matern && ![0.5, 1.5, 2.5].contains(&self.smoothness) {
            return Err(Error::param("smoothness", "supported values are 0.5, 1.5 and 2.5"));
        }
        Ok(())
    }

    fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let h = self.bandwidth;
        match self.kind {
            KernelKind::Gaussian => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-d2 / (2.0 * h * h)).exp()
            }
            KernelKind::Laplacian => {
                let d1: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
                (-d1 / h).exp()
            }
            KernelKind::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            KernelKind::Polynomial => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (dot + self.offset).powi(self.degree as i32)
            }
            KernelKind::Matern => {
                let r = a
                    .iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
                    / h;
                if self.smoothness == 0.5 {
                    (-r).exp()
                } else if self.smoothness == 1.5 {
                    let z = 3f64.sqrt() * r;
                    (1.0 + z) * (-z).exp()
                } else {
                    let z = 5f64.sqrt() * r;
                    (1.0 + z + z * z / 3.0) * (-z).exp()
                }
            }
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, a: &[f64], b: &[f64]) -> Result<f64> {
    spec.validate()?;
    if a.len() != b.len() {
        return Err(Error::dim(format!("kernel arguments of length {} and {}", a.len(), b.len())));
    }
    Ok(spec.eval_unchecked(a, b))
}

/// Gram matrix over the columns of `anchors`.
pub fn kernel_matrix(spec: &KernelSpec, anchors: &RMat) -> Result<RMat> {
    spec.validate()?;
    let l = anchors.ncols();
    let cols: Vec<Vec<f64>> = (0..l).map(|j| anchors.column(j).iter().copied().collect()).collect();
    let mut k = RMat::zeros(l, l);
    for i in 0..l {
        for j in i..l {
            let v = spec.eval_unchecked(&cols[i], &cols[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// `K_{ij} = k(a_i, b_j)` between two column sets.
pub fn cross_kernel(spec: &KernelSpec, anchors: &RMat, points: &RMat) -> Result<RMat> {
    spec.validate()?;
    if anchors.nrows() != points.nrows() {
        return Err(Error::dim(format!(
            "anchors have dimension {}, points {}",
            anchors.nrows(),
            points.nrows()
        )));
    }
    let a: Vec<Vec<f64>> = (0..anchors.ncols())
        .map(|j| anchors.column(j).iter().copied().collect())
        .collect();
    let mut out = RMat::zeros(anchors.ncols(), points.ncols());
    for c in 0..points.ncols() {
        let p: Vec<f64> = points.column(c).iter().copied().collect();
        for (i, ai) in a.iter().enumerate() {
            out[(i, c)] = spec.eval_unchecked(ai, &p);
        }
    }
    Ok(out)
}

/// Median of the pairwise Euclidean distances between columns (1 when undefined).
pub fn median_bandwidth(anchors: &RMat) -> f64 {
    let l = anchors.ncols();
    let mut d = Vec::with_capacity(l * l.saturating_sub(1) / 2);
    for i in 0..l {
        for j in i + 1..l {
            d.push((anchors.column(i) - anchors.column(j)).norm());
        }
    }
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    let med = if d.len() % 2 == 1 {
        d[mid]
    } else {
        0.5 * (d[mid - 1] + d[mid])
    };
    if med > 0.0 {
        med
    } else {
        1.0
    }
}

/// Gaussian kernel with median-heuristic bandwidth over the lifted pilot inputs,
/// multiplied by `scale`.
pub fn median_gaussian(frame: &PilotFrame, scale: f64) -> KernelSpec {
    KernelSpec::gaussian(scale * median_bandwidth(&lift_columns(&frame.x_block)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMethod {
    Nominal,
    /// `(1/L) S̲K ((1/L)K² + εI)⁻¹`.
    KdlK2,
    /// `S̲ (K + εI)⁻¹`.
    KdlK,
    EigenThreshold,
}

/// Fitted estimator `ŝ = Γ W φ(x̲)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelEstimator {
    /// Lifted pilot inputs, one per column (2N×L).
    pub anchors: RMat,
    /// 2M×L.
    pub weights: RMat,
    pub kernel: KernelSpec,
    pub method: String,
    pub params: Vec<(String, f64)>,
}

impl KernelEstimator {
    pub fn n_rx(&self) -> usize {
        self.anchors.nrows() / 2
    }

    pub fn n_tx(&self) -> usize {
        self.weights.nrows() / 2
    }
}

fn loaded(a: &RMat, eps: f64) -> RMat {
    let n = a.nrows();
    a + RMat::identity(n, n) * eps
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::param(name, "must be finite and non-negative"));
    }
    Ok(())
}

/// Fit one of the single-frame estimators; `epsilon_or_mu` is ignored for `Nominal`.
pub fn fit_kernel_estimator(
    frame: &PilotFrame,
    spec: &KernelSpec,
    method: KernelMethod,
    epsilon_or_mu: f64,
) -> Result<KernelEstimator> {
    check_nonneg("epsilon_or_mu", epsilon_or_mu)?;
    let anchors = lift_columns(&frame.x_block);
    let targets = lift_columns(&frame.s_block);
    let k = kernel_matrix(spec, &anchors)?;
    let l = frame.len() as f64;
    let (weights, tag) = match method {
        KernelMethod::Nominal => (&targets * herm_inv(&k, "kernel matrix K")?, "kernel"),
        KernelMethod::KdlK => (
            &targets * herm_inv(&loaded(&k, epsilon_or_mu), "loaded kernel matrix")?,
            "kernel_dl",
        ),
        KernelMethod::KdlK2 => {
            let cov = loaded(&(&k * &k / l), epsilon_or_mu);
            (
                &targets * &k / l * herm_inv(&cov, "loaded K²/L")?,
                "kernel_dl_k2",
            )
        }
        KernelMethod::EigenThreshold => {
            let mu = epsilon_or_mu;
            if mu > 1.0 {
                return Err(Error::param("mu", "must lie in [0, 1]"));
            }
            let thr = threshold_real(&(&k * &k / l), mu);
            (
                &targets * &k / l * herm_inv(&thr, "thresholded K²/L")?,
                "kernel_eigen_threshold",
            )
        }
    };
    let pname = match method {
        KernelMethod::EigenThreshold => "mu",
        _ => "epsilon",
    };
    let mut params = Vec::new();
    if method != KernelMethod::Nominal {
        params.push((pname.to_string(), epsilon_or_mu));
    }
    Ok(KernelEstimator {
        anchors,
        weights,
        kernel: *spec,
        method: tag.to_string(),
        params,
    })
}

/// Real symmetric eigenvalue thresholding at `μ λ_max`.
pub fn threshold_real(a: &RMat, mu: f64) -> RMat {
    let eig = HermEig::new(a);
    let floor = mu * eig.max();
    eig.map(|v| v.max(floor))
}

/// `W = ((1/L)S̲K + λW′)((1/L)K² + λI)⁻¹` with the prior `W′` on the current anchors.
pub fn fit_multi_frame_kernel(
    frame: &PilotFrame,
    spec: &KernelSpec,
    w_prev: &RMat,
    lambda: f64,
) -> Result<KernelEstimator> {
    check_nonneg("lambda", lambda)?;
    let anchors = lift_columns(&frame.x_block);
    let targets = lift_columns(&frame.s_block);
    if w_prev.shape() != targets.shape() {
        return Err(Error::dim(format!(
            "prior weights are {:?}, expected {:?}",
            w_prev.shape(),
            targets.shape()
        )));
    }
    let k = kernel_matrix(spec, &anchors)?;
    let l = frame.len() as f64;
    let cov = loaded(&(&k * &k / l), lambda);
    let weights = (&targets * &k / l + w_prev * lambda) * herm_inv(&cov, "multi-frame K²/L + λI")?;
    Ok(KernelEstimator {
        anchors,
        weights,
        kernel: *spec,
        method: "kernel_multi_frame".to_string(),
        params: vec![("lambda".to_string(), lambda)],
    })
}

/// Estimate for one received vector.
pub fn predict(est: &KernelEstimator, x: &CVec) -> Result<CVec> {
    if x.len() != est.n_rx() {
        return Err(Error::dim(format!(
            "input has length {}, estimator expects {}",
            x.len(),
            est.n_rx()
        )));
    }
    let xl = lift_vector(x);
    let phi = RVec::from_iterator(
        est.anchors.ncols(),
        (0..est.anchors.ncols()).map(|j| {
            let a: Vec<f64> = est.anchors.column(j).iter().copied().collect();
            est.kernel.eval_unchecked(&a, xl.as_slice())
        }),
    );
    gamma_unlift(&(&est.weights * phi))
}

/// Estimates for every column of a received block.
pub fn predict_block(est: &KernelEstimator, x: &CMat) -> Result<CMat> {
    if x.nrows() != est.n_rx() {
        return Err(Error::dim(format!(
            "block has {} rows, estimator expects {}",
            x.nrows(),
            est.n_rx()
        )));
    }
    let phi = cross_kernel(&est.kernel, &est.anchors, &lift_columns(x))?;
    unlift_columns(&(&est.weights * phi))
}
