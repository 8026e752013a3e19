//! Spectral verification along section orbits.
//!
//! Finite-time exponents of the return cocycle, domination margins between
//! the structural sub-bundles, the sectional (plane-area) expansion rate,
//! and Floquet multipliers of the periodic orbits the surgery creates. The
//! return derivatives produced by the section engine never couple the fiber
//! into the base, so next to the generic QR accumulation there is an exact
//! per-bundle bookkeeping that serves as its oracle.

use nalgebra::linalg::QR;
use nalgebra::{SVector, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flowint::{integrate_to, OdeOptions};
use crate::model3d::{classical_field, ClassicalParams, LorenzParams};
use crate::section::{HybridSection, SectionPoint};
use crate::skew4d::{eval_field4, SkewParams};
use crate::{Mat3, Vec3};

/// Orbits passing closer than this to the stable leaf are rejected: the
/// passage time diverges and the normal frame degenerates together with it.
pub const ORBIT_EXCLUSION_RADIUS: f64 = 1e-6;

/// A sampled section orbit: the visited points, the per-return derivatives
/// of the return map, and the return durations.
#[derive(Debug, Clone)]
pub struct OrbitSample {
    /// Visited section points, `n_returns + 1` of them.
    pub points: Vec<SectionPoint>,
    pub derivs: Vec<Mat3>,
    pub times: Vec<f64>,
    /// Returns that started inside the surgery tube's support.
    pub tube_hits: usize,
}

impl OrbitSample {
    pub fn n_returns(&self) -> usize {
        self.derivs.len()
    }

    pub fn total_time(&self) -> f64 {
        self.times.iter().sum()
    }
}

/// Follow `start` for `discard + n_returns` returns, recording the tail.
pub fn sample_orbit(
    model: &HybridSection,
    start: &SectionPoint,
    n_returns: usize,
    discard: usize,
) -> Result<OrbitSample> {
    if n_returns == 0 {
        return Err(Error::InvalidParams("an orbit sample needs at least one return".into()));
    }
    let mut q = *start;
    for _ in 0..discard {
        q = model.return_map(&q)?.image;
    }
    let mut points = Vec::with_capacity(n_returns + 1);
    let mut derivs = Vec::with_capacity(n_returns);
    let mut times = Vec::with_capacity(n_returns);
    let mut tube_hits = 0usize;
    points.push(q);
    for _ in 0..n_returns {
        if q.x2.abs() < ORBIT_EXCLUSION_RADIUS {
            return Err(Error::NearSingularity(q.x2.abs()));
        }
        let r = model.return_map(&q)?;
        if r.tube_hit {
            tube_hits += 1;
        }
        derivs.push(r.deriv);
        times.push(r.time);
        q = r.image;
        points.push(q);
    }
    Ok(OrbitSample { points, derivs, times, tube_hits })
}

/// Finite-time exponents of the normal cocycle along one orbit.
#[derive(Debug, Clone, Serialize)]
pub struct ExponentReport {
    /// Total flow time the exponents average over.
    pub window_t: f64,
    /// The three normal exponents, ascending.
    pub exponents: Vec<f64>,
    /// Angles (radians) between the rate-sorted frame directions and the
    /// reference splitting, fastest first: expanding axis, fiber, strong
    /// stable.
    pub subspace_angles: Vec<f64>,
    pub orbit_id: String,
}

fn angle_between(u: &Vec3, v: &Vec3) -> f64 {
    (u.dot(v).abs() / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos()
}

/// Accumulate the return cocycle with QR re-orthonormalization (one
/// factorization per return; every return lasts longer than two time units,
/// so the cadence is finer than the conditioning demands) and average the
/// log diagonal growth into three finite-time exponents.
pub fn lpf_exponents(orbit: &OrbitSample, orbit_id: &str) -> Result<ExponentReport> {
    if orbit.n_returns() == 0 {
        return Err(Error::InvalidParams("empty orbit sample".into()));
    }
    let mut q = Mat3::identity();
    let mut acc = [0.0f64; 3];
    for d in &orbit.derivs {
        let qr = QR::new(d * q);
        let r = qr.r();
        q = qr.q();
        for (i, a) in acc.iter_mut().enumerate() {
            let rii = r[(i, i)].abs();
            if rii == 0.0 || !rii.is_finite() {
                return Err(Error::Numerical("normal frame collapsed during QR accumulation".into()));
            }
            *a += rii.ln();
        }
    }
    let t = orbit.total_time();
    let rates: Vec<f64> = acc.iter().map(|a| a / t).collect();
    // Rate-sort the frame columns, fastest first, and measure them against
    // the reference splitting (expanding axis e2, fiber e_s, strong stable e1).
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| rates[b].partial_cmp(&rates[a]).unwrap());
    let refs = [
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
        Vec3::new(1.0, 0.0, 0.0),
    ];
    let subspace_angles = order
        .iter()
        .zip(refs.iter())
        .map(|(&c, r)| angle_between(&q.column(c).into_owned(), r))
        .collect();
    let mut exponents = rates;
    exponents.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ExponentReport {
        window_t: t,
        exponents,
        subspace_angles,
        orbit_id: orbit_id.to_string(),
    })
}

/// Exact finite-time rates of the three structural sub-bundles.
///
/// The return derivative never feeds the fiber back into the base and never
/// feeds `x1` or `s` into `x2`, so products of return derivatives keep their
/// diagonal equal to the product of diagonals. The log averages below are
/// therefore the exact cocycle exponents of the strong-stable, fiber, and
/// expanding bundles, with no orthogonalization error at all.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BundleRates {
    pub ss: f64,
    pub fiber: f64,
    pub expanding: f64,
}

pub fn bundle_rates(orbit: &OrbitSample) -> Result<BundleRates> {
    if orbit.n_returns() == 0 {
        return Err(Error::InvalidParams("empty orbit sample".into()));
    }
    let t = orbit.total_time();
    let mut ss = 0.0;
    let mut fiber = 0.0;
    let mut expanding = 0.0;
    for d in &orbit.derivs {
        ss += d[(0, 0)].abs().ln();
        fiber += d[(2, 2)].abs().ln();
        expanding += d[(1, 1)].abs().ln();
    }
    Ok(BundleRates { ss: ss / t, fiber: fiber / t, expanding: expanding / t })
}

/// Which pair of invariant bundles a domination margin compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DominationSplit {
    /// Strong stable below, fiber plus expanding above.
    SsVsRest,
    /// Strong stable plus fiber below, expanding above.
    ContractingVsExpanding,
    /// Flow direction against the fiber; the surgery makes this one neutral
    /// on the central periodic orbit.
    FlowVsFiber,
}

fn flow_norm(model: &HybridSection, q: &SectionPoint) -> Result<f64> {
    let x = Vector4::new(q.x1, q.x2, 1.0, q.s);
    let (f, _) = eval_field4(&model.params, &model.skew, &model.center, &x)?;
    Ok(f.norm())
}

/// Minimal finite-time domination margin over all return-aligned windows of
/// flow length at least `t_window`: slowest rate in the dominating bundle
/// minus fastest rate in the dominated bundle, worst case over windows.
/// Positive margins are domination evidence, negative ones are witnesses
/// against it.
pub fn domination_check(
    model: &HybridSection,
    orbit: &OrbitSample,
    split: DominationSplit,
    t_window: f64,
) -> Result<f64> {
    if !(t_window > 0.0) {
        return Err(Error::InvalidParams(format!("window length must be positive, got {t_window}")));
    }
    let n = orbit.n_returns();
    let logs: Vec<[f64; 3]> = orbit
        .derivs
        .iter()
        .map(|d| [d[(0, 0)].abs().ln(), d[(1, 1)].abs().ln(), d[(2, 2)].abs().ln()])
        .collect();
    let flow_lognorms: Vec<f64> = if split == DominationSplit::FlowVsFiber {
        orbit
            .points
            .iter()
            .map(|p| flow_norm(model, p).map(f64::ln))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let mut margin = f64::INFINITY;
    let mut any = false;
    for j in 0..n {
        let mut tau = 0.0;
        let mut sum = [0.0f64; 3];
        let mut end = None;
        for (k, (lg, dt)) in logs[j..].iter().zip(&orbit.times[j..]).enumerate() {
            tau += dt;
            for (s, l) in sum.iter_mut().zip(lg) {
                *s += l;
            }
            if tau >= t_window {
                end = Some(j + k + 1);
                break;
            }
        }
        let Some(end) = end else { break };
        any = true;
        let ss = sum[0] / tau;
        let expanding = sum[1] / tau;
        let fiber = sum[2] / tau;
        let m = match split {
            DominationSplit::SsVsRest => fiber.min(expanding) - ss,
            DominationSplit::ContractingVsExpanding => expanding - ss.max(fiber),
            DominationSplit::FlowVsFiber => {
                let flow = (flow_lognorms[end] - flow_lognorms[j]) / tau;
                flow - fiber
            }
        };
        margin = margin.min(m);
    }
    if !any {
        return Err(Error::InvalidParams(
            "orbit too short for a single domination window".into(),
        ));
    }
    Ok(margin)
}

/// Worst finite-time sectional expansion rate of the plane spanned by the
/// flow direction and the expanding axis, over all return-aligned windows of
/// flow length at least one.
///
/// Transported along a return, that plane's area multiplies by exactly the
/// quotient slope (the flow factor is the time reparameterization and drops
/// out of the per-window average), so each window's rate is the time average
/// of `ln |f'(x2)|`. A window average can never undercut the worst single
/// admissible return, and every return lasts longer than one time unit, so
/// the scan below is exact.
pub fn sectional_expansion_rate(orbit: &OrbitSample) -> Result<(f64, (usize, usize))> {
    let n = orbit.n_returns();
    if n == 0 {
        return Err(Error::InvalidParams("empty orbit sample".into()));
    }
    let rate_of = |j: usize, k: usize| -> f64 {
        let tau: f64 = orbit.times[j..=k].iter().sum();
        let lg: f64 = orbit.derivs[j..=k].iter().map(|d| d[(1, 1)].abs().ln()).sum();
        lg / tau
    };
    if orbit.times.iter().all(|t| *t >= 1.0) {
        let mut best = (f64::INFINITY, (0usize, 0usize));
        for j in 0..n {
            let r = rate_of(j, j);
            if r < best.0 {
                best = (r, (j, j));
            }
        }
        Ok(best)
    } else {
        // Defensive path for exotic parameters with sub-unit returns: scan
        // the minimal windows reaching unit length.
        let mut best = (f64::INFINITY, (0usize, 0usize));
        for j in 0..n {
            let mut tau = 0.0;
            for k in j..n {
                tau += orbit.times[k];
                if tau >= 1.0 {
                    let r = rate_of(j, k);
                    if r < best.0 {
                        best = (r, (j, k));
                    }
                    break;
                }
            }
        }
        if best.0.is_infinite() {
            return Err(Error::InvalidParams("orbit shorter than one time unit".into()));
        }
        Ok(best)
    }
}

/// Floquet data of one periodic section orbit.
#[derive(Debug, Clone, Serialize)]
pub struct FloquetReport {
    pub period: f64,
    /// Multiplier moduli including the trivial flow-direction unit, ascending.
    pub multipliers: Vec<f64>,
    /// Count of non-trivial multipliers strictly inside the unit circle.
    pub index: usize,
    /// The multiplier along the fiber direction, signed.
    pub fiber_multiplier: f64,
}

/// Residual under which a candidate return counts as periodic.
pub const PERIODIC_RESIDUAL: f64 = 1e-9;
const INDEX_UNIT_TOL: f64 = 1e-9;

/// Monodromy analysis of a period-one orbit given by its section point.
///
/// The return derivative at a fixed point is the section monodromy; its
/// eigenvalue moduli plus the explicit trivial unit are the Floquet
/// multipliers. The fiber direction is an exact eigenvector (the derivative
/// never couples the fiber into the base), so the fiber multiplier is read
/// straight off the diagonal.
pub fn floquet(model: &HybridSection, q: &SectionPoint) -> Result<FloquetReport> {
    let r = model.return_map(q)?;
    let residual = ((r.image.x1 - q.x1).powi(2)
        + (r.image.x2 - q.x2).powi(2)
        + (r.image.s - q.s).powi(2))
    .sqrt();
    if residual > PERIODIC_RESIDUAL {
        return Err(Error::NotPeriodic(residual, PERIODIC_RESIDUAL));
    }
    let eigs = r.deriv.complex_eigenvalues();
    let mut multipliers: Vec<f64> = eigs.iter().map(|z| z.norm()).collect();
    let index = multipliers.iter().filter(|m| **m < 1.0 - INDEX_UNIT_TOL).count();
    multipliers.push(1.0);
    multipliers.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(FloquetReport {
        period: r.time,
        multipliers,
        index,
        fiber_multiplier: r.deriv[(2, 2)],
    })
}

/// Eigenvalues of the full four-dimensional field at the singularity,
/// ascending. The occupancy vanishes at the origin, so the fiber decouples
/// and contracts at the plain rate.
pub fn singularity_exponents(p: &LorenzParams, sp: &SkewParams) -> [f64; 4] {
    let mut e = [p.lambda_s, p.lambda_c, -sp.theta, p.lambda_u];
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    e
}

/// Controls of the largest-Lyapunov-exponent estimator.
#[derive(Debug, Clone, Copy)]
pub struct LleOptions {
    pub t_total: f64,
    pub t_transient: f64,
    pub renorm_dt: f64,
}

impl Default for LleOptions {
    fn default() -> Self {
        LleOptions { t_total: 1e4, t_transient: 100.0, renorm_dt: 1.0 }
    }
}

/// Largest Lyapunov exponent of the classical flow by tangent-vector
/// renormalization: grow a unit vector alongside the orbit, harvest its log
/// length every `renorm_dt`, and average over `t_total` after discarding a
/// transient.
pub fn classical_lle(
    cp: &ClassicalParams,
    x0: &Vec3,
    lo: &LleOptions,
    opts: &OdeOptions,
) -> Result<f64> {
    if !(lo.t_total > 0.0) || !(lo.renorm_dt > 0.0) || lo.t_transient < 0.0 {
        return Err(Error::InvalidParams("LLE options must have positive spans".into()));
    }
    let mut f3 = |_t: f64, y: &SVector<f64, 3>| {
        let (fx, _) = classical_field(cp, &Vec3::new(y[0], y[1], y[2]));
        SVector::<f64, 3>::from_column_slice(fx.as_slice())
    };
    let mut state = SVector::<f64, 3>::new(x0.x, x0.y, x0.z);
    if lo.t_transient > 0.0 {
        let (y, _) = integrate_to(&mut f3, 0.0, state, lo.t_transient, opts)?;
        state = y;
    }

    let mut f6 = |_t: f64, y: &SVector<f64, 6>| {
        let x = Vec3::new(y[0], y[1], y[2]);
        let (fx, j) = classical_field(cp, &x);
        let v = Vec3::new(y[3], y[4], y[5]);
        let dv = j * v;
        SVector::<f64, 6>::from_column_slice(&[fx.x, fx.y, fx.z, dv.x, dv.y, dv.z])
    };
    let mut y = SVector::<f64, 6>::from_column_slice(&[
        state[0], state[1], state[2], 1.0, 0.0, 0.0,
    ]);
    let mut log_sum = 0.0;
    let mut t = 0.0;
    while t < lo.t_total - 1e-12 {
        let dt = lo.renorm_dt.min(lo.t_total - t);
        let (next, _) = integrate_to(&mut f6, 0.0, y, dt, opts)?;
        y = next;
        t += dt;
        let norm = (y[3] * y[3] + y[4] * y[4] + y[5] * y[5]).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Numerical("tangent vector collapsed in LLE loop".into()));
        }
        log_sum += norm.ln();
        y[3] /= norm;
        y[4] /= norm;
        y[5] /= norm;
    }
    Ok(log_sum / t)
}
