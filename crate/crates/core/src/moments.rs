//! Sample moments, least-squares channel estimate and residual noise covariance.

use crate::error::{Error, Result};
use crate::scene::PilotFrame;
use crate::types::{hermitian_part, CMat, HermEig, JointMoments, C64, SINGULAR_RATIO};

fn gram(a: &CMat, b: &CMat, l: usize) -> CMat {
    a * b.adjoint() / C64::from(l as f64)
}

/// `R̂_x = XXᴴ/L`, `R̂_xs = XSᴴ/L`, `R̂_s = SSᴴ/L`.
pub fn estimate_moments(frame: &PilotFrame) -> Result<JointMoments> {
    let l = frame.len();
    if l == 0 {
        return Err(Error::param("frame", "needs at least one pilot"));
    }
    let (x, s) = (&frame.x_block, &frame.s_block);
    JointMoments::new(
        hermitian_part(&gram(x, x, l)),
        gram(x, s, l),
        hermitian_part(&gram(s, s, l)),
    )
}

/// `Ĥ = XSᴴ(SSᴴ)⁻¹`.
pub fn estimate_channel(frame: &PilotFrame) -> Result<CMat> {
    let (x, s) = (&frame.x_block, &frame.s_block);
    let sst = hermitian_part(&(s * s.adjoint()));
    let eig = HermEig::new(&sst);
    if frame.len() < frame.n_tx() || !(eig.max() > 0.0) || eig.min() < SINGULAR_RATIO * eig.max() {
        return Err(Error::InsufficientPilotExcitation);
    }
    let inv = eig.map(|v| 1.0 / v);
    Ok(x * s.adjoint() * inv)
}

/// `R̂_v = (X − ĤS)(X − ĤS)ᴴ/L`.
pub fn estimate_noise_cov(frame: &PilotFrame, h_hat: &CMat) -> Result<CMat> {
    if h_hat.shape() != (frame.n_rx(), frame.n_tx()) {
        return Err(Error::dim(format!(
            "channel estimate is {:?}, frame needs {}x{}",
            h_hat.shape(),
            frame.n_rx(),
            frame.n_tx()
        )));
    }
    let l = frame.len();
    if l == 0 {
        return Err(Error::param("frame", "needs at least one pilot"));
    }
    let e = &frame.x_block - h_hat * &frame.s_block;
    Ok(hermitian_part(&gram(&e, &e, l)))
}

/// Every nominal quantity derived from one pilot frame.
#[derive(Debug, Clone, PartialEq)]
pub struct NominalEstimates {
    pub moments: JointMoments,
    pub h_hat: CMat,
    pub r_v_hat: CMat,
    pub sample_count: usize,
}

impl NominalEstimates {
    pub fn from_frame(frame: &PilotFrame) -> Result<Self> {
        let moments = estimate_moments(frame)?;
        let h_hat = estimate_channel(frame)?;
        let r_v_hat = estimate_noise_cov(frame, &h_hat)?;
        Ok(NominalEstimates {
            moments,
            h_hat,
            r_v_hat,
            sample_count: frame.len(),
        })
    }
}
