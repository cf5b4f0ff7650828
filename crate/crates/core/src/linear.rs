//! Closed-form linear beamformers: Wiener, loading variants, Capon, ZF,
//! eigenvalue thresholding, uncertain signal/noise covariances and multi-frame.

use crate::dro::{self, BallKind, SolverConfig};
use crate::error::{Error, Result};
use crate::types::{
    check_hermitian, hermitian_part, herm_inv, is_psd, trace_re, CMat, HermEig, JointMoments, C64,
};

/// `M×N` weights `W` with `ŝ = Wx`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerWeights {
    pub w: CMat,
    pub method: String,
    pub params: Vec<(String, f64)>,
    /// Set when the uncertainty set used to build the weights is not valid
    /// (its lower bound `R̂ − εE` is not PSD).
    pub infeasible_set: bool,
}

impl BeamformerWeights {
    pub fn new(w: CMat, method: &str) -> Self {
        BeamformerWeights {
            w,
            method: method.to_string(),
            params: Vec::new(),
            infeasible_set: false,
        }
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.push((name.to_string(), value));
        self
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == name).map(|&(_, v)| v)
    }

    /// Apply to a received block `X` (N×L).
    pub fn apply(&self, x: &CMat) -> CMat {
        &self.w * x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UncertaintyKind {
    AdditiveMoment,
    DiagLoading,
    GeneralizedDl,
    Multiplicative,
    ModifiedMultiplicative,
    FnormBall,
    WassersteinBall,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintySpec {
    pub kind: UncertaintyKind,
    pub epsilon: f64,
    /// `E` ((N+M)-square) for the additive set, `F` (N-square) for generalized loading.
    pub e_matrix: Option<CMat>,
    pub theta2: Option<f64>,
}

impl UncertaintySpec {
    pub fn new(kind: UncertaintyKind, epsilon: f64) -> Self {
        UncertaintySpec {
            kind,
            epsilon,
            e_matrix: None,
            theta2: None,
        }
    }

    pub fn with_matrix(mut self, e: CMat) -> Self {
        self.e_matrix = Some(e);
        self
    }

    pub fn with_theta2(mut self, theta2: f64) -> Self {
        self.theta2 = Some(theta2);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::param("epsilon", "must be finite and non-negative"));
        }
        if let Some(e) = &self.e_matrix {
            if !is_psd(e) {
                return Err(Error::param("e_matrix", "must be Hermitian PSD"));
            }
        }
        if let Some(t) = self.theta2 {
            if !(t >= 1.0) {
                return Err(Error::param("theta2", "must be at least 1"));
            }
        }
        Ok(())
    }
}

fn loaded(r: &CMat, eps: f64) -> CMat {
    let n = r.nrows();
    r + CMat::identity(n, n) * C64::from(eps)
}

fn check_eps(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::param(name, "must be finite and non-negative"));
    }
    Ok(())
}

/// `W = R_xsᴴ R_x⁻¹`.
pub fn wiener(m: &JointMoments) -> Result<BeamformerWeights> {
    let inv = herm_inv(&m.r_x, "Wiener R_x")?;
    Ok(BeamformerWeights::new(m.r_xs.adjoint() * inv, "wiener"))
}

/// `W = R_s Hᴴ (H R_s Hᴴ + R_v)⁻¹`.
pub fn wiener_ce(h: &CMat, r_s: &CMat, r_v: &CMat) -> Result<BeamformerWeights> {
    let (n, m) = h.shape();
    if r_s.shape() != (m, m) || r_v.shape() != (n, n) {
        return Err(Error::dim("R_s or R_v does not conform with H"));
    }
    let inner = hermitian_part(&(h * r_s * h.adjoint() + r_v));
    let inv = herm_inv(&inner, "Wiener-CE H R_s Hᴴ + R_v")?;
    Ok(BeamformerWeights::new(r_s * h.adjoint() * inv, "wiener_ce"))
}

/// Distributionally robust beamformer for a moment or ball uncertainty set.
///
/// Ball kinds are solved numerically with the default solver configuration.
pub fn dr_beamformer(m: &JointMoments, u: &UncertaintySpec) -> Result<BeamformerWeights> {
    u.validate()?;
    let (n, mm) = (m.n(), m.m());
    let eps = u.epsilon;
    let (w, infeasible, tag) = match u.kind {
        UncertaintyKind::AdditiveMoment => {
            let e = u
                .e_matrix
                .as_ref()
                .ok_or_else(|| Error::param("e_matrix", "additive moment set needs E"))?;
            if e.shape() != (n + mm, n + mm) {
                return Err(Error::dim(format!(
                    "E is {:?}, expected {}x{}",
                    e.shape(),
                    n + mm,
                    n + mm
                )));
            }
            let e_x = e.view((0, 0), (n, n)).into_owned();
            let e_xs = e.view((0, n), (n, mm)).into_owned();
            let r_x = hermitian_part(&(&m.r_x + e_x * C64::from(eps)));
            let r_xs = &m.r_xs + e_xs * C64::from(eps);
            let inv = herm_inv(&r_x, "DR-AM loaded R_x")?;
            let lower = m.assemble() - e * C64::from(eps);
            (r_xs.adjoint() * inv, !is_psd(&lower), "dr_am")
        }
        UncertaintyKind::DiagLoading => {
            let inv = herm_inv(&loaded(&m.r_x, eps), "DR-DL loaded R_x")?;
            let lower = loaded(&m.assemble(), -eps);
            (m.r_xs.adjoint() * inv, !is_psd(&lower), "dr_dl")
        }
        UncertaintyKind::GeneralizedDl => {
            let f = u
                .e_matrix
                .as_ref()
                .ok_or_else(|| Error::param("e_matrix", "generalized loading needs F"))?;
            if f.shape() != (n, n) {
                return Err(Error::dim(format!("F is {:?}, expected {n}x{n}", f.shape())));
            }
            let inv = herm_inv(
                &hermitian_part(&(&m.r_x + f * C64::from(eps))),
                "DR-GDL loaded R_x",
            )?;
            let lower = &m.r_x - f * C64::from(eps);
            (m.r_xs.adjoint() * inv, !is_psd(&lower), "dr_gdl")
        }
        UncertaintyKind::Multiplicative => {
            let w = wiener(m)?.w;
            (w, false, "dr_mm")
        }
        UncertaintyKind::ModifiedMultiplicative => {
            let t = u.theta2.unwrap_or(1.0);
            let inv = herm_inv(&(&m.r_x * C64::from(t)), "modified multiplicative R_x")?;
            (m.r_xs.adjoint() * inv, false, "dr_mmm")
        }
        UncertaintyKind::FnormBall | UncertaintyKind::WassersteinBall => {
            let ball = if u.kind == UncertaintyKind::FnormBall {
                BallKind::JointFnorm
            } else {
                BallKind::JointWasserstein
            };
            return dro::dr_wasserstein_beamformer(m, eps, &SolverConfig::default(), ball);
        }
    };
    let mut bw = BeamformerWeights::new(w, tag).with_param("epsilon", eps);
    if let Some(t) = u.theta2 {
        bw = bw.with_param("theta2", t);
    }
    bw.infeasible_set = infeasible;
    Ok(bw)
}

/// Diagonal-loading Capon: `[Hᴴ(R_x+εI)⁻¹H]⁻¹ Hᴴ(R_x+εI)⁻¹`.
pub fn capon(h: &CMat, r_x: &CMat, epsilon: f64) -> Result<BeamformerWeights> {
    check_eps("epsilon", epsilon)?;
    let (n, m) = h.shape();
    if r_x.shape() != (n, n) {
        return Err(Error::dim("R_x does not conform with H"));
    }
    if n < m {
        return Err(Error::param("h", "Capon needs N >= M"));
    }
    let a_inv = herm_inv(&loaded(r_x, epsilon), "Capon loaded R_x")?;
    let g = h.adjoint() * &a_inv;
    let inner = hermitian_part(&(&g * h));
    let inner_inv = herm_inv(&inner, "Capon Hᴴ R⁻¹ H (rank-deficient channel)")?;
    let tag = if epsilon > 0.0 { "capon_dl" } else { "capon" };
    Ok(BeamformerWeights::new(inner_inv * g, tag).with_param("epsilon", epsilon))
}

/// `W = (ĤᴴĤ)⁻¹Ĥᴴ`.
pub fn zero_forcing(h_hat: &CMat) -> Result<BeamformerWeights> {
    let g = hermitian_part(&(h_hat.adjoint() * h_hat));
    let inv = herm_inv(&g, "zero-forcing ĤᴴĤ (rank-deficient channel)")?;
    Ok(BeamformerWeights::new(inv * h_hat.adjoint(), "zf"))
}

/// Raise every eigenvalue to at least `μ λ_max`.
pub fn eigen_threshold_cov(r_x: &CMat, mu: f64) -> Result<CMat> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::param("mu", "must lie in [0, 1]"));
    }
    check_hermitian(r_x)?;
    let eig = HermEig::new(r_x);
    let floor = mu * eig.max();
    Ok(eig.map(|v| v.max(floor)))
}

pub fn eigen_threshold_bf(m: &JointMoments, mu: f64) -> Result<BeamformerWeights> {
    let thr = eigen_threshold_cov(&m.r_x, mu)?;
    let inv = herm_inv(&thr, "thresholded R_x")?;
    Ok(BeamformerWeights::new(m.r_xs.adjoint() * inv, "eigen_threshold").with_param("mu", mu))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RsRvVariant {
    /// Loading `R̂_s + ε₁I` propagated through the channel.
    RsIdentity,
    /// Loading weighted by `Hᴴ(HHᴴ)⁻²H`; needs `HHᴴ` invertible.
    RsChannelWeighted,
    /// Loading `R̂_v + ε₂I`.
    RvIdentity,
}

/// Beamformers for uncertain signal or noise covariance with a known channel.
pub fn dr_rs_rv_beamformer(
    h: &CMat,
    r_s_hat: &CMat,
    r_v_hat: &CMat,
    eps1: f64,
    eps2: f64,
    variant: RsRvVariant,
) -> Result<BeamformerWeights> {
    check_eps("eps1", eps1)?;
    check_eps("eps2", eps2)?;
    let (n, m) = h.shape();
    if r_s_hat.shape() != (m, m) || r_v_hat.shape() != (n, n) {
        return Err(Error::dim("R_s or R_v does not conform with H"));
    }
    let hh = h.adjoint();
    let signal = h * r_s_hat * &hh;
    let e1 = C64::from(eps1);
    let (w, tag) = match variant {
        RsRvVariant::RsIdentity => {
            let inner = hermitian_part(&(&signal + r_v_hat + h * &hh * e1));
            let inv = herm_inv(&inner, "R_s-loaded inner matrix")?;
            let rs = loaded(r_s_hat, eps1);
            (rs * &hh * inv, "dr_rs_identity")
        }
        RsRvVariant::RsChannelWeighted => {
            let hht = hermitian_part(&(h * &hh));
            let hht_inv = herm_inv(&hht, "HHᴴ (channel-weighted set)")?;
            let inner = loaded(&hermitian_part(&(&signal + r_v_hat)), eps1);
            let inv = herm_inv(&inner, "channel-weighted inner matrix")?;
            ((r_s_hat * &hh + &hh * hht_inv * e1) * inv, "dr_rs_channel_weighted")
        }
        RsRvVariant::RvIdentity => {
            let inner = loaded(&hermitian_part(&(&signal + r_v_hat)), eps2);
            let inv = herm_inv(&inner, "R_v-loaded inner matrix")?;
            (r_s_hat * &hh * inv, "dr_rv_identity")
        }
    };
    Ok(BeamformerWeights::new(w, tag)
        .with_param("eps1", eps1)
        .with_param("eps2", eps2))
}

/// `W = (R̂_xs + λW_prevᴴ)ᴴ (R̂_x + (λ+ε₀)I)⁻¹`.
pub fn multi_frame_wiener(
    m: &JointMoments,
    w_prev: &BeamformerWeights,
    lambda: f64,
    epsilon0: f64,
) -> Result<BeamformerWeights> {
    check_eps("lambda", lambda)?;
    check_eps("epsilon0", epsilon0)?;
    if w_prev.w.shape() != (m.m(), m.n()) {
        return Err(Error::dim(format!(
            "prior weights are {:?}, expected {}x{}",
            w_prev.w.shape(),
            m.m(),
            m.n()
        )));
    }
    let inv = herm_inv(&loaded(&m.r_x, lambda + epsilon0), "multi-frame loaded R_x")?;
    let cross = &m.r_xs + w_prev.w.adjoint() * C64::from(lambda);
    Ok(BeamformerWeights::new(cross.adjoint() * inv, "multi_frame_wiener")
        .with_param("lambda", lambda)
        .with_param("epsilon0", epsilon0))
}

/// `Tr[W R_x Wᴴ − W R_xs − R_xsᴴ Wᴴ + R_s]`.
pub fn estimation_error(m: &JointMoments, w: &CMat) -> f64 {
    let wr = w * &m.r_xs;
    trace_re(&(w * &m.r_x * w.adjoint())) - 2.0 * trace_re(&wr) + trace_re(&m.r_s)
}

/// Minimum estimation error `Tr[R_s − R_xsᴴ R_x⁻¹ R_xs]` as a function of the joint moments.
pub fn min_error(m: &JointMoments) -> Result<f64> {
    let inv = herm_inv(&m.r_x, "R_x")?;
    Ok(trace_re(&(&m.r_s - m.r_xs.adjoint() * inv * &m.r_xs)))
}
