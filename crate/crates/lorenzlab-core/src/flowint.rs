//! Adaptive integration and return maps.
//!
//! A Dormand-Prince 5(4) stepper with PI step-size control and a fifth-order
//! dense interpolant drives everything here: plain flows, event-located
//! section crossings, tangent frames, and the fiber transit of the skew
//! return map. The hybrid model's base return itself needs no integration
//! (block passage and ear are closed forms); only the fiber ODE and the
//! classical cross-check exercise the stepper over long spans.

use nalgebra::{Matrix3x2, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::model3d::{ear_map, linear_exit, LorenzParams, SectionPoint2};
use crate::skew4d::{fiber_jet, fiber_rhs, occupancy_jet_at_entry, FiberMode, SkewParams};
use crate::{Mat3, Vec3};

/// Tolerances and limits of the adaptive stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_max: f64,
    pub max_steps: usize,
    /// Time tolerance for refining event crossings on the dense interpolant.
    pub event_tol: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            h_max: 1.0,
            max_steps: 1_000_000,
            event_tol: 1e-12,
        }
    }
}

/// Work counters of one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

/// Which sign changes of the event function count as a crossing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossDir {
    Rising,
    Falling,
    Any,
}

/// A located event: time, state, and the work spent getting there.
#[derive(Debug, Clone, Copy)]
pub struct EventHit<const N: usize> {
    pub t: f64,
    pub y: SVector<f64, N>,
    pub stats: OdeStats,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const ERR: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const DENSE: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const PI_BETA: f64 = 0.04;
const MAX_SHRINK: f64 = 5.0;
const MAX_GROW: f64 = 10.0;
const H_MIN_FRACTION: f64 = 1e-14;

/// One accepted step's interpolant segment, valid on `[t0, t0 + h]`.
#[derive(Debug, Clone, Copy)]
pub struct DenseSegment<const N: usize> {
    pub t0: f64,
    pub h: f64,
    r: [SVector<f64, N>; 5],
}

impl<const N: usize> DenseSegment<N> {
    /// Evaluate the fifth-order interpolant at `t` inside the segment.
    pub fn eval(&self, t: f64) -> SVector<f64, N> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        self.r[0] + (self.r[1] + (self.r[2] + (self.r[3] + self.r[4] * th1) * th) * th1) * th
    }
}

fn rms_norm<const N: usize>(v: &SVector<f64, N>, scale: &SVector<f64, N>) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let r = v[i] / scale[i];
        acc += r * r;
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize>(
    f: &mut impl FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
    t0: f64,
    y0: &SVector<f64, N>,
    f0: &SVector<f64, N>,
    opts: &OdeOptions,
    stats: &mut OdeStats,
) -> f64 {
    let scale = y0.map(|yi| opts.abs_tol + opts.rel_tol * yi.abs());
    let d0 = rms_norm(y0, &scale);
    let d1 = rms_norm(f0, &scale);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(opts.h_max);
    let y1 = y0 + f0 * h0;
    let f1 = f(t0 + h0, &y1);
    stats.evals += 1;
    let d2 = rms_norm(&(f1 - f0), &scale) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.h_max)
}

/// Core driver: integrate from `t0` to `t_end` (either direction), handing
/// each accepted step's dense segment to `watch`. If the watcher returns a
/// stop time inside the segment, integration halts there and the
/// interpolated state is returned.
fn drive<const N: usize>(
    f: &mut impl FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
    t0: f64,
    y0: SVector<f64, N>,
    t_end: f64,
    opts: &OdeOptions,
    mut watch: impl FnMut(&DenseSegment<N>, f64, &SVector<f64, N>) -> Option<f64>,
) -> Result<(f64, SVector<f64, N>, OdeStats)> {
    let mut stats = OdeStats::default();
    let mut t = t0;
    let mut y = y0;
    if t_end == t0 {
        return Ok((t, y, stats));
    }
    let dir = if t_end > t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();

    let mut k = [SVector::<f64, N>::zeros(); 7];
    k[0] = f(t, &y);
    stats.evals += 1;
    let mut h = dir * initial_step(f, t, &y, &k[0].clone(), opts, &mut stats).min(span);
    let mut fac_old: f64 = 1e-4;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::TooManySteps(opts.max_steps));
        }
        if h.abs() < H_MIN_FRACTION * span.max(t.abs()) {
            return Err(Error::StepSizeUnderflow { t, h });
        }
        let last = (t + h - t_end) * dir >= 0.0;
        if last {
            h = t_end - t;
        }

        for i in 1..7 {
            let mut yi = y;
            for (j, kj) in k.iter().enumerate().take(i) {
                if A[i][j] != 0.0 {
                    yi += kj * (h * A[i][j]);
                }
            }
            k[i] = f(t + C[i] * h, &yi);
        }
        stats.evals += 6;
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            if A[6][j] != 0.0 {
                y_new += kj * (h * A[6][j]);
            }
        }

        let mut err_vec = SVector::<f64, N>::zeros();
        for (j, kj) in k.iter().enumerate() {
            if ERR[j] != 0.0 {
                err_vec += kj * (h * ERR[j]);
            }
        }
        let scale =
            SVector::<f64, N>::from_fn(|i, _| {
                opts.abs_tol + opts.rel_tol * y[i].abs().max(y_new[i].abs())
            });
        let err = rms_norm(&err_vec, &scale);

        if !err.is_finite() {
            stats.rejected += 1;
            h *= 0.5;
            continue;
        }
        if err > 1.0 {
            stats.rejected += 1;
            let fac = (err.powf(0.2) / SAFETY).min(MAX_SHRINK);
            h /= fac;
            continue;
        }

        stats.accepted += 1;
        let diff = y_new - y;
        let bspl = k[0] * h - diff;
        let mut r5 = SVector::<f64, N>::zeros();
        for (j, kj) in k.iter().enumerate() {
            if DENSE[j] != 0.0 {
                r5 += kj * (h * DENSE[j]);
            }
        }
        let seg = DenseSegment { t0: t, h, r: [y, diff, bspl, diff - k[6] * h - bspl, r5] };
        let t_new = t + h;
        if let Some(t_stop) = watch(&seg, t_new, &y_new) {
            let y_stop = if t_stop == t_new { y_new } else { seg.eval(t_stop) };
            return Ok((t_stop, y_stop, stats));
        }
        if last {
            return Ok((t_end, y_new, stats));
        }

        t = t_new;
        y = y_new;
        k[0] = k[6]; // first-same-as-last
        let expo = 0.2 - PI_BETA * 0.75;
        let fac11 = err.powf(expo);
        let fac = (fac11 / fac_old.powf(PI_BETA) / SAFETY).clamp(1.0 / MAX_GROW, MAX_SHRINK);
        fac_old = err.max(1e-4);
        h = dir * (h.abs() / fac).min(opts.h_max);
    }
}

/// Integrate `y' = f(t, y)` from `t0` to `t1`.
pub fn integrate_to<const N: usize>(
    f: &mut impl FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
    t0: f64,
    y0: SVector<f64, N>,
    t1: f64,
    opts: &OdeOptions,
) -> Result<(SVector<f64, N>, OdeStats)> {
    let (_, y, stats) = drive(f, t0, y0, t1, opts, |_, _, _| None)?;
    Ok((y, stats))
}

/// Integrate forward until the scalar event `g(t, y)` crosses zero in
/// direction `dir`, ignoring any crossing before `t0 + min_time`. The
/// crossing time is refined on the dense interpolant to `opts.event_tol`.
pub fn integrate_until_event<const N: usize>(
    f: &mut impl FnMut(f64, &SVector<f64, N>) -> SVector<f64, N>,
    g: &impl Fn(f64, &SVector<f64, N>) -> f64,
    dir: CrossDir,
    t0: f64,
    y0: SVector<f64, N>,
    t_max: f64,
    min_time: f64,
    opts: &OdeOptions,
) -> Result<EventHit<N>> {
    if t_max < t0 {
        return Err(Error::InvalidParams(
            "event searches only run forward in time".into(),
        ));
    }
    let armed_from = t0 + min_time;
    let crosses = |lo: f64, hi: f64| match dir {
        CrossDir::Rising => lo < 0.0 && hi >= 0.0,
        CrossDir::Falling => lo > 0.0 && hi <= 0.0,
        CrossDir::Any => (lo < 0.0 && hi >= 0.0) || (lo > 0.0 && hi <= 0.0),
    };
    let (t, y, stats) = drive(f, t0, y0, t_max, opts, |seg, t_new, y_new| {
        let lo_t = seg.t0.max(armed_from);
        if lo_t >= t_new {
            return None;
        }
        let g_lo = if lo_t == seg.t0 { g(seg.t0, &seg.eval(seg.t0)) } else { g(lo_t, &seg.eval(lo_t)) };
        let g_hi = g(t_new, y_new);
        if !crosses(g_lo, g_hi) {
            return None;
        }
        let (mut a, mut b) = (lo_t, t_new);
        let mut ga = g_lo;
        for _ in 0..200 {
            if b - a < opts.event_tol * t_new.abs().max(1.0) {
                break;
            }
            let m = 0.5 * (a + b);
            let gm = g(m, &seg.eval(m));
            if crosses(ga, gm) {
                b = m;
            } else {
                a = m;
                ga = gm;
            }
        }
        Some(b)
    })?;
    if t >= t_max {
        let g_end = g(t, &y);
        if g_end.abs() > 0.0 {
            return Err(Error::NoCrossing(t_max));
        }
    }
    Ok(EventHit { t, y, stats })
}

/// Flow a point and a tangent frame of an autonomous 3D field for time
/// `t_span`, integrating the variational equation `A' = J(x) A` alongside.
pub fn flow_with_frame3(
    field: &impl Fn(&Vec3) -> (Vec3, Mat3),
    x0: Vec3,
    a0: Mat3,
    t_span: f64,
    opts: &OdeOptions,
) -> Result<(Vec3, Mat3, OdeStats)> {
    let mut f = |_t: f64, y: &SVector<f64, 12>| {
        let x = Vec3::new(y[0], y[1], y[2]);
        let (fx, j) = field(&x);
        let a = SMatrix::<f64, 3, 3>::from_column_slice(&y.as_slice()[3..12]);
        let da = j * a;
        let mut out = SVector::<f64, 12>::zeros();
        out.fixed_rows_mut::<3>(0).copy_from(&fx);
        out.fixed_rows_mut::<9>(3).copy_from_slice(da.as_slice());
        out
    };
    let mut y0 = SVector::<f64, 12>::zeros();
    y0.fixed_rows_mut::<3>(0).copy_from(&x0);
    y0.fixed_rows_mut::<9>(3).copy_from_slice(a0.as_slice());
    let (y, stats) = integrate_to(&mut f, 0.0, y0, t_span, opts)?;
    let x = Vec3::new(y[0], y[1], y[2]);
    let a = Mat3::from_column_slice(&y.as_slice()[3..12]);
    Ok((x, a, stats))
}

/// Unsigned area spanned by the two columns of a 3x2 frame, via the Gram
/// determinant. Ratios of this along a flow measure two-dimensional growth.
pub fn gram_area(m: &Matrix3x2<f64>) -> f64 {
    let g = m.transpose() * m;
    (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).max(0.0).sqrt()
}

/// Outcome of transporting the fiber across one base return.
#[derive(Debug, Clone, Copy)]
pub struct FiberTransit {
    /// Fiber value at the end of the transit.
    pub s: f64,
    /// Linearization along the fiber, `d s_end / d s_0`.
    pub d_ds: f64,
    /// Sensitivity to the frozen occupancy, `d s_end / d eta`.
    pub d_deta: f64,
}

/// Integrate the fiber ODE with frozen occupancy `eta` over time `t`,
/// carrying the linearization and the occupancy sensitivity alongside.
pub fn fiber_transit(
    sp: &SkewParams,
    s0: f64,
    eta: f64,
    t: f64,
    opts: &OdeOptions,
) -> Result<FiberTransit> {
    let mut f = |_t: f64, y: &SVector<f64, 3>| {
        let jet = fiber_jet(sp, y[0], eta);
        SVector::<f64, 3>::new(jet.f, jet.df_ds * y[1], jet.df_ds * y[2] + jet.df_deta)
    };
    let y0 = SVector::<f64, 3>::new(s0, 1.0, 0.0);
    let (y, _) = integrate_to(&mut f, 0.0, y0, t, opts)?;
    Ok(FiberTransit { s: y[0], d_ds: y[1], d_deta: y[2] })
}

/// A point of the skew flow on the entry section: base coordinates plus the
/// fiber value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewSection {
    pub x1: f64,
    pub x2: f64,
    pub s: f64,
}

/// One full return of the skew flow to the section.
#[derive(Debug, Clone, Copy)]
pub struct SkewReturn {
    pub state: SkewSection,
    /// Derivative of the return in `(x1, x2, s)`.
    pub deriv: Mat3,
    /// Elapsed flow time (block passage plus ear transit).
    pub time: f64,
    /// Occupancy frozen over this return.
    pub eta: f64,
}

/// Return map of the skew flow with the surgery tube centered at `center`.
///
/// The base return is closed form. The occupancy is evaluated once at the
/// entry point (it is invariant along the block passage and held through the
/// ear), which reduces the fiber to a scalar autonomous ODE over the return
/// time. Off the tube that ODE is linear and solved exactly; on the tube it
/// is integrated together with its two sensitivities.
pub fn skew_return(
    p: &LorenzParams,
    sp: &SkewParams,
    center: &SectionPoint2,
    st: &SkewSection,
    opts: &OdeOptions,
) -> Result<SkewReturn> {
    let entry = Vec3::new(st.x1, st.x2, 1.0);
    let (exit, _) = linear_exit(p, &entry)?;
    let (land, ear_d, transit) = ear_map(p, &exit)?;
    let time = exit.time + transit;

    // Entry-to-face derivative in the face coordinates (x1, x3).
    let a = st.x2.abs();
    let sgn = st.x2.signum();
    let face = nalgebra::Matrix2::new(
        a.powf(p.beta()),
        st.x1 * p.beta() * a.powf(p.beta() - 1.0) * sgn,
        0.0,
        p.alpha() * a.powf(p.alpha() - 1.0) * sgn,
    );
    let base = ear_d * face;

    let (eta, grad) = occupancy_jet_at_entry(sp, center, st.x1, st.x2);
    let transit_out = if eta == 0.0 || sp.mode == FiberMode::None {
        let d = (-sp.theta * time).exp();
        FiberTransit { s: st.s * d, d_ds: d, d_deta: 0.0 }
    } else {
        fiber_transit(sp, st.s, eta, time, opts)?
    };

    let dt_dx2 = -1.0 / (p.lambda_u * st.x2);
    let f_end = fiber_rhs(sp, transit_out.s, eta);
    let mut deriv = Mat3::zeros();
    deriv[(0, 0)] = base[(0, 0)];
    deriv[(0, 1)] = base[(0, 1)];
    deriv[(1, 0)] = base[(1, 0)];
    deriv[(1, 1)] = base[(1, 1)];
    deriv[(2, 0)] = transit_out.d_deta * grad[0];
    deriv[(2, 1)] = f_end * dt_dx2 + transit_out.d_deta * grad[1];
    deriv[(2, 2)] = transit_out.d_ds;

    Ok(SkewReturn {
        state: SkewSection { x1: land.x1, x2: land.x2, s: transit_out.s },
        deriv,
        time,
        eta,
    })
}
