//! First-order solvers for trace maximization over F-norm and Bures balls,
//! and for the worst-case signal/noise covariance pair.
//!
//! Bures balls are handled in factor space: for `R = AAᴴ` and `Â = R̂^{1/2}`,
//! the Bures distance is `min_U ‖A − ÂU‖_F` over unitaries `U`, so the ball
//! `{R : B(R, R̂) ≤ ε}` is exactly the image of the Frobenius ball
//! `{A : ‖A − Â‖_F ≤ ε}` under `A ↦ AAᴴ`. The Frobenius ball has a closed-form
//! projection.

use crate::error::{Error, Result};
use crate::linear::BeamformerWeights;
use crate::types::{
    frob, herm_inv, herm_sqrt, hermitian_part, min_eigenvalue, psd_project, trace_re, CMat,
    HermEig, JointMoments, C64,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub step_init: f64,
    /// Record `(iteration, objective, residual)` for every accepted step.
    pub verbose: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 2000,
            tol: 1e-8,
            step_init: 1.0,
            verbose: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol", "must be positive"));
        }
        if !(self.step_init > 0.0) {
            return Err(Error::param("step_init", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DroSolution {
    pub r_star: CMat,
    pub objective: f64,
    pub iterations: usize,
    pub constraint_residual: f64,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockSolution {
    pub r_s: CMat,
    pub r_v: CMat,
    pub objective: f64,
    pub iterations: usize,
    pub constraint_residual: f64,
    pub converged: bool,
    pub trace: Vec<TraceRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BallKind {
    JointFnorm,
    JointWasserstein,
    BlocksWasserstein,
}

struct Ascent<S> {
    state: S,
    objective: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<TraceRow>,
}

const STALL_WINDOW: usize = 10;
const MAX_HALVINGS: usize = 60;

/// Projected gradient ascent with backtracking from `step_init`.
///
/// `direction(x)` is evaluated once per iteration; `step(x, d, t)` must return
/// the projected point after a step of length `t` along `d`. A step is
/// accepted only if it does not decrease the objective.
fn ascend<S: Clone, D>(
    x0: S,
    cfg: &SolverConfig,
    objective: impl Fn(&S) -> Result<f64>,
    direction: impl Fn(&S) -> D,
    step: impl Fn(&S, &D, f64) -> S,
    residual: impl Fn(&S) -> f64,
) -> Result<Ascent<S>> {
    let mut x = x0;
    let mut fx = objective(&x)?;
    let mut trace = Vec::new();
    if cfg.verbose {
        trace.push(TraceRow {
            iter: 0,
            objective: fx,
            residual: residual(&x),
        });
    }
    let mut calm = 0;
    for it in 1..=cfg.max_iters {
        let mut t = cfg.step_init;
        let mut accepted = None;
        let d = direction(&x);
        for _ in 0..MAX_HALVINGS {
            let cand = step(&x, &d, t);
            if let Ok(fc) = objective(&cand) {
                if fc >= fx {
                    accepted = Some((cand, fc));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = accepted else {
            return Ok(Ascent {
                state: x,
                objective: fx,
                iterations: it,
                converged: true,
                trace,
            });
        };
        let change = (fc - fx).abs() / fx.abs().max(f64::MIN_POSITIVE);
        x = cand;
        fx = fc;
        if cfg.verbose {
            trace.push(TraceRow {
                iter: it,
                objective: fx,
                residual: residual(&x),
            });
        }
        calm = if change < cfg.tol { calm + 1 } else { 0 };
        if calm >= STALL_WINDOW {
            return Ok(Ascent {
                state: x,
                objective: fx,
                iterations: it,
                converged: true,
                trace,
            });
        }
    }
    Ok(Ascent {
        state: x,
        objective: fx,
        iterations: cfg.max_iters,
        converged: false,
        trace,
    })
}

fn shift(a: &CMat, t: f64) -> CMat {
    let n = a.nrows();
    a + CMat::identity(n, n) * C64::from(t)
}

/// Radial projection of `y` onto the Frobenius ball of radius `eps` around `center`.
fn project_fball(y: &CMat, center: &CMat, eps: f64) -> CMat {
    let d = y - center;
    let norm = frob(&d);
    if norm <= eps {
        y.clone()
    } else {
        center + d * C64::from(eps / norm)
    }
}

/// Dykstra's alternating projection onto `{‖R − R̂‖_F ≤ ε} ∩ PSD`, followed by a
/// radial pull toward `R̂` that makes the result exactly feasible.
pub fn project_fball_psd(y: &CMat, r_hat: &CMat, eps: f64) -> CMat {
    let n = y.nrows();
    let mut x = y.clone();
    let mut p = CMat::zeros(n, n);
    let mut q = CMat::zeros(n, n);
    for _ in 0..500 {
        let a = project_fball(&(&x + &p), r_hat, eps);
        p = &x + &p - &a;
        let b = psd_project(&(&a + &q));
        q = &a + &q - &b;
        let moved = frob(&(&b - &x));
        x = b;
        if moved <= 1e-14 * (1.0 + frob(&x)) {
            break;
        }
    }
    let x = psd_project(&x);
    project_fball(&x, r_hat, eps)
}

fn fball_residual(r: &CMat, r_hat: &CMat, eps: f64) -> f64 {
    (frob(&(r - r_hat)) - eps).max(0.0) + (-min_eigenvalue(r)).max(0.0)
}

/// Maximize `Tr R` over `‖R − R̂‖_F ≤ ε`, `R ⪰ 0`.
pub fn solve_fnorm_trace_max(r_hat: &CMat, epsilon: f64, cfg: &SolverConfig) -> Result<DroSolution> {
    cfg.validate()?;
    check_radius("epsilon", epsilon)?;
    check_psd_input(r_hat)?;
    let r_hat = hermitian_part(r_hat);
    if epsilon == 0.0 {
        return Ok(DroSolution {
            objective: trace_re(&r_hat),
            r_star: r_hat,
            iterations: 0,
            constraint_residual: 0.0,
            converged: true,
            trace: Vec::new(),
        });
    }
    let out = ascend(
        r_hat.clone(),
        cfg,
        |r| Ok(trace_re(r)),
        |_| (),
        |r, _, t| project_fball_psd(&shift(r, t), &r_hat, epsilon),
        |r| fball_residual(r, &r_hat, epsilon),
    )?;
    let residual = fball_residual(&out.state, &r_hat, epsilon);
    Ok(DroSolution {
        r_star: out.state,
        objective: out.objective,
        iterations: out.iterations,
        constraint_residual: residual,
        converged: out.converged,
        trace: out.trace,
    })
}

/// Squared Bures distance `Tr[R + R̂ − 2(R̂^{1/2} R R̂^{1/2})^{1/2}]`.
pub fn bures_distance_sq(r: &CMat, r_hat: &CMat) -> f64 {
    let root = herm_sqrt(r_hat);
    let inner = herm_sqrt(&(&root * r * &root));
    trace_re(r) + trace_re(r_hat) - 2.0 * trace_re(&inner)
}

fn bures_residual(r: &CMat, r_hat: &CMat, eps: f64) -> f64 {
    (bures_distance_sq(r, r_hat) - eps * eps).max(0.0) + (-min_eigenvalue(r)).max(0.0)
}

fn gram(a: &CMat) -> CMat {
    hermitian_part(&(a * a.adjoint()))
}

/// Starting factor: the nominal root, or a point on the ball if the root vanishes.
fn start_factor(root: &CMat, eps: f64) -> CMat {
    let d = root.nrows();
    if frob(root) > 0.0 || d == 0 {
        root.clone()
    } else {
        CMat::identity(d, d) * C64::from(eps / (d as f64).sqrt())
    }
}

/// Full-rank interior start `R̂^{1/2} + (ε/(2√d))I`. Factor-space gradients
/// `∇A` vanish on the null space of `A`, so a rank-deficient start could never
/// leave it.
fn interior_factor(root: &CMat, eps: f64) -> CMat {
    let d = root.nrows();
    if d == 0 {
        return root.clone();
    }
    shift(root, eps / (2.0 * (d as f64).sqrt()))
}

/// Maximize `Tr R` over the Bures ball of radius `ε` around `R̂`.
pub fn solve_wasserstein_trace_max(
    r_hat: &CMat,
    epsilon: f64,
    cfg: &SolverConfig,
) -> Result<DroSolution> {
    cfg.validate()?;
    check_radius("epsilon", epsilon)?;
    check_psd_input(r_hat)?;
    let r_hat = hermitian_part(r_hat);
    if epsilon == 0.0 {
        return Ok(DroSolution {
            objective: trace_re(&r_hat),
            r_star: r_hat,
            iterations: 0,
            constraint_residual: 0.0,
            converged: true,
            trace: Vec::new(),
        });
    }
    let root = herm_sqrt(&r_hat);
    let out = ascend(
        start_factor(&root, epsilon),
        cfg,
        |a| Ok(frob(a).powi(2)),
        |_| (),
        |a, _, t| project_fball(&(a * C64::from(1.0 + 2.0 * t)), &root, epsilon),
        |a| bures_residual(&gram(a), &r_hat, epsilon),
    )?;
    let r_star = gram(&out.state);
    let residual = bures_residual(&r_star, &r_hat, epsilon);
    Ok(DroSolution {
        objective: trace_re(&r_star),
        r_star,
        iterations: out.iterations,
        constraint_residual: residual,
        converged: out.converged,
        trace: out.trace,
    })
}

/// `Tr[R_s − R_s Hᴴ (H R_s Hᴴ + R_v)⁻¹ H R_s]`.
pub fn blocks_objective(r_s: &CMat, r_v: &CMat, h: &CMat) -> Result<f64> {
    let k = blocks_gain(r_s, r_v, h)?;
    Ok(trace_re(&(r_s - &k * h * r_s)))
}

/// `K = R_s Hᴴ (H R_s Hᴴ + R_v)⁻¹`.
fn blocks_gain(r_s: &CMat, r_v: &CMat, h: &CMat) -> Result<CMat> {
    let (n, m) = h.shape();
    if r_s.shape() != (m, m) || r_v.shape() != (n, n) {
        return Err(Error::dim("R_s or R_v does not conform with H"));
    }
    let inner = hermitian_part(&(h * r_s * h.adjoint() + r_v));
    let inv = herm_inv(&inner, "H R_s Hᴴ + R_v")?;
    Ok(r_s * h.adjoint() * inv)
}

/// Gradients of [`blocks_objective`] with respect to `R_s` and `R_v`:
/// `(I − KH)ᴴ(I − KH)` and `KᴴK`, in the sense `df = Tr[∇ dR]`.
pub fn blocks_gradient(r_s: &CMat, r_v: &CMat, h: &CMat) -> Result<(CMat, CMat)> {
    let k = blocks_gain(r_s, r_v, h)?;
    let m = r_s.nrows();
    let res = CMat::identity(m, m) - &k * h;
    Ok((
        hermitian_part(&(res.adjoint() * &res)),
        hermitian_part(&(k.adjoint() * &k)),
    ))
}

fn floor_eigs(a: &CMat, delta: f64) -> CMat {
    let eig = HermEig::new(a);
    if eig.min() >= delta {
        a.clone()
    } else {
        eig.map(|v| v.max(delta))
    }
}

/// Worst-case `(R_s, R_v)` over two Bures balls for the MMSE objective with fixed `H`.
pub fn solve_wasserstein_blocks(
    r_s_hat: &CMat,
    r_v_hat: &CMat,
    h: &CMat,
    eps1: f64,
    eps2: f64,
    cfg: &SolverConfig,
) -> Result<BlockSolution> {
    cfg.validate()?;
    check_radius("eps1", eps1)?;
    check_radius("eps2", eps2)?;
    check_psd_input(r_s_hat)?;
    check_psd_input(r_v_hat)?;
    let (n, m) = h.shape();
    if r_s_hat.shape() != (m, m) || r_v_hat.shape() != (n, n) {
        return Err(Error::dim("R_s or R_v does not conform with H"));
    }
    let r_s_hat = hermitian_part(r_s_hat);
    let r_v_hat = hermitian_part(r_v_hat);
    if eps1 == 0.0 && eps2 == 0.0 {
        return Ok(BlockSolution {
            objective: blocks_objective(&r_s_hat, &r_v_hat, h)?,
            r_s: r_s_hat,
            r_v: r_v_hat,
            iterations: 0,
            constraint_residual: 0.0,
            converged: true,
            trace: Vec::new(),
        });
    }
    let delta = 1e-10 * trace_re(&r_v_hat);
    let root_s = herm_sqrt(&r_s_hat);
    let root_v = herm_sqrt(&r_v_hat);
    let expand = |a: &(CMat, CMat)| (gram(&a.0), floor_eigs(&gram(&a.1), delta));
    let residual = |a: &(CMat, CMat)| {
        let (rs, rv) = expand(a);
        bures_residual(&rs, &r_s_hat, eps1) + bures_residual(&rv, &r_v_hat, eps2)
    };
    let out = ascend(
        (interior_factor(&root_s, eps1), interior_factor(&root_v, eps2)),
        cfg,
        |a| {
            let (rs, rv) = expand(a);
            blocks_objective(&rs, &rv, h)
        },
        |a| {
            let (rs, rv) = expand(a);
            blocks_gradient(&rs, &rv, h)
                .ok()
                .map(|(gs, gv)| (gs * &a.0 * C64::from(2.0), gv * &a.1 * C64::from(2.0)))
        },
        |a, d, t| match d {
            Some((ds, dv)) => {
                let tc = C64::from(t);
                (
                    project_fball(&(&a.0 + ds * tc), &root_s, eps1),
                    project_fball(&(&a.1 + dv * tc), &root_v, eps2),
                )
            }
            None => a.clone(),
        },
        residual,
    )?;
    let res = residual(&out.state);
    let (r_s, r_v) = expand(&out.state);
    Ok(BlockSolution {
        r_s,
        r_v,
        objective: out.objective,
        iterations: out.iterations,
        constraint_residual: res,
        converged: out.converged,
        trace: out.trace,
    })
}

/// Beamformer from the worst-case moments of the chosen ball.
///
/// For the block ball the channel and noise covariance are recovered from the
/// moments: `Ĥ = R̂_xs R̂_s⁻¹`, `R̂_v = R̂_x − Ĥ R̂_s Ĥᴴ`, and both radii equal `epsilon`.
pub fn dr_wasserstein_beamformer(
    moments: &JointMoments,
    epsilon: f64,
    cfg: &SolverConfig,
    ball: BallKind,
) -> Result<BeamformerWeights> {
    match ball {
        BallKind::JointFnorm | BallKind::JointWasserstein => {
            let r_hat = moments.assemble();
            let sol = if ball == BallKind::JointFnorm {
                solve_fnorm_trace_max(&r_hat, epsilon, cfg)?
            } else {
                solve_wasserstein_trace_max(&r_hat, epsilon, cfg)?
            };
            let star = JointMoments::split(&sol.r_star, moments.n())?;
            let inv = herm_inv(&hermitian_part(&star.r_x), "worst-case R_x")?;
            let tag = if ball == BallKind::JointFnorm {
                "dr_fnorm"
            } else {
                "dr_wasserstein"
            };
            Ok(BeamformerWeights::new(star.r_xs.adjoint() * inv, tag).with_param("epsilon", epsilon))
        }
        BallKind::BlocksWasserstein => {
            let rs_inv = herm_inv(&moments.r_s, "R̂_s")?;
            let h = &moments.r_xs * rs_inv;
            let r_v = psd_project(&(&moments.r_x - &h * &moments.r_s * h.adjoint()));
            dr_blocks_beamformer(&h, &moments.r_s, &r_v, epsilon, epsilon, cfg)
        }
    }
}

/// `W = R★_s Hᴴ (H R★_s Hᴴ + R★_v)⁻¹` from the block solution.
pub fn dr_blocks_beamformer(
    h: &CMat,
    r_s_hat: &CMat,
    r_v_hat: &CMat,
    eps1: f64,
    eps2: f64,
    cfg: &SolverConfig,
) -> Result<BeamformerWeights> {
    let sol = solve_wasserstein_blocks(r_s_hat, r_v_hat, h, eps1, eps2, cfg)?;
    let k = blocks_gain(&sol.r_s, &sol.r_v, h)?;
    Ok(BeamformerWeights::new(k, "dr_wasserstein_blocks")
        .with_param("eps1", eps1)
        .with_param("eps2", eps2))
}

fn check_radius(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::param(name, "radius must be finite and non-negative"));
    }
    Ok(())
}

fn check_psd_input(a: &CMat) -> Result<()> {
    crate::types::check_hermitian(a)?;
    let lo = min_eigenvalue(a);
    if lo < crate::types::PSD_FLOOR {
        return Err(Error::NotPsd(lo));
    }
    Ok(())
}
