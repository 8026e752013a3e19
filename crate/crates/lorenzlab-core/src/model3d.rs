//! Base three-dimensional models.
//!
//! The geometric model is hybrid: an exact linear flow on the block
//! `{|x1| <= 1, |x2| <= 1, 0 <= x3 <= 1}` with diagonal rates
//! `(lambda_s, lambda_u, lambda_c)` acting on `(x1, x2, x3)`, glued to affine
//! ear maps that take an exit face `{x2 = ±1}` back to the top section
//! `{x3 = 1}` after a fixed transit time. Orbits entering at `x3 = 1` with
//! `x2 != 0` leave through an exit face in closed form, so returns to the
//! section cost a few transcendental evaluations instead of an integration.
//!
//! The classical Lorenz vector field is provided as an independent backend for
//! cross-validating the integrator and exponent pipelines.

use nalgebra::{Matrix2, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::ValidationReport;
use crate::{Mat2, Mat3, Vec3, LEAF_TOL};

/// Geometric tolerance for "is this point on the section / inside the block".
const BLOCK_TOL: f64 = 1e-9;

/// Parameters of the hybrid geometric model.
///
/// `lambda_s < lambda_c < 0 < lambda_u` are the linear-block rates on
/// `(x1, x3, x2)` respectively; the ear maps are
/// `x2' = s (ear_offset - ear_b * x3)`, `x1' = s (ear_c * x1 + ear_d * x3)`
/// for exit side `s = ±1`, applied after a transit of `tau_e` time units.
/// `gamma` is the target floor for sectional expansion rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LorenzParams {
    pub lambda_s: f64,
    pub lambda_c: f64,
    pub lambda_u: f64,
    pub ear_b: f64,
    pub ear_offset: f64,
    pub ear_c: f64,
    pub ear_d: f64,
    pub tau_e: f64,
    pub gamma: f64,
}

impl Default for LorenzParams {
    fn default() -> Self {
        LorenzParams {
            lambda_s: -3.0,
            lambda_c: -1.0,
            lambda_u: 1.8,
            ear_b: 1.85,
            ear_offset: 0.95,
            ear_c: 0.1,
            ear_d: 0.2,
            tau_e: 2.1,
            gamma: 0.01,
        }
    }
}

impl LorenzParams {
    /// Exponent of the one-dimensional quotient map: `alpha = -lambda_c / lambda_u`.
    pub fn alpha(&self) -> f64 {
        -self.lambda_c / self.lambda_u
    }

    /// Contraction exponent of the `x1` coordinate through the block:
    /// `beta = -lambda_s / lambda_u`.
    pub fn beta(&self) -> f64 {
        -self.lambda_s / self.lambda_u
    }

    /// Uniform expansion floor of the quotient map, `ear_b * alpha`.
    pub fn expansion_floor(&self) -> f64 {
        self.ear_b * self.alpha()
    }
}

/// State of an orbit at the moment it leaves the linear block through an exit
/// face `{x2 = side}`. Face coordinates are `(x1, x3)`; `time` is the elapsed
/// time since the section entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExitState {
    pub x1: f64,
    pub side: f64,
    pub x3: f64,
    pub time: f64,
}

/// Landing point of an ear map on the top section `{x3 = 1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint2 {
    pub x1: f64,
    pub x2: f64,
}

/// Validate the defining inequalities of the geometric model. Every check is
/// reported with a signed margin so sweeps can see how close a parameter set
/// sits to the boundary of admissibility.
pub fn validate_params(p: &LorenzParams) -> ValidationReport {
    let mut r = ValidationReport::default();
    r.push_margin("eig-order-stable-center", p.lambda_c - p.lambda_s);
    r.push_margin("eig-center-negative", -p.lambda_c);
    r.push_margin("eig-unstable-positive", p.lambda_u);
    r.push_margin("eig-expanding-sum", p.lambda_c + p.lambda_u);
    r.push_margin("ear-expansion", p.expansion_floor() - 1.0);
    // Return image of the section is [offset - b, offset] in |x2|; both ends
    // must stay strictly inside (-1, 1).
    r.push_margin("ear-image-interior-top", 1.0 - p.ear_offset);
    r.push_margin("ear-image-interior-bottom", 1.0 - (p.ear_b - p.ear_offset));
    r.push_margin("ear-image-positive-width", p.ear_b);
    // Budget that keeps the width-1 tangent cone strictly invariant with
    // output width 1/2: d/b + c/(b*alpha) < 1/2.
    let budget = p.ear_d / p.ear_b + p.ear_c / p.expansion_floor();
    r.push_margin("cone-budget", 0.5 - budget);
    r.push_margin("ear-shear-nonnegative", p.ear_d);
    r.push_margin("ear-contraction-positive", p.ear_c);
    r.push_margin("transit-floor", p.tau_e - 2.0);
    r.push_margin("sectional-target-positive", p.gamma);
    r
}

fn inside_block(x: &Vec3) -> bool {
    x[0].abs() <= 1.0 + BLOCK_TOL
        && x[1].abs() <= 1.0 + BLOCK_TOL
        && (-BLOCK_TOL..=1.0 + BLOCK_TOL).contains(&x[2])
}

/// Vector field and Jacobian of the linear block at `x`.
///
/// Errors with [`Error::OutOfDomain`] outside the block; the ear region
/// carries no interior field.
pub fn eval_field3(p: &LorenzParams, x: &Vec3) -> Result<(Vec3, Mat3)> {
    if !inside_block(x) {
        return Err(Error::OutOfDomain(x[0], x[1], x[2]));
    }
    let f = Vector3::new(p.lambda_s * x[0], p.lambda_u * x[1], p.lambda_c * x[2]);
    let j = Matrix3::from_diagonal(&Vector3::new(p.lambda_s, p.lambda_u, p.lambda_c));
    Ok((f, j))
}

/// Closed-form passage through the linear block from a section entry
/// `(x1, x2, 1)` to the exit face `{x2 = sign(x2)}`.
///
/// Returns the exit state and the frozen-time flow derivative
/// `diag(e^{lambda_s T}, e^{lambda_u T}, e^{lambda_c T})` at the exit time
/// `T = -ln|x2| / lambda_u`.
pub fn linear_exit(p: &LorenzParams, entry: &Vec3) -> Result<(ExitState, Mat3)> {
    if (entry[2] - 1.0).abs() > BLOCK_TOL || entry[0].abs() > 1.0 + BLOCK_TOL {
        return Err(Error::OutOfDomain(entry[0], entry[1], entry[2]));
    }
    let x2 = entry[1];
    if x2.abs() < LEAF_TOL {
        return Err(Error::OnStableLeaf);
    }
    if x2.abs() > 1.0 + BLOCK_TOL {
        return Err(Error::OutOfDomain(entry[0], entry[1], entry[2]));
    }
    let a = x2.abs();
    let time = -a.ln() / p.lambda_u;
    let exit = ExitState {
        x1: entry[0] * a.powf(p.beta()),
        side: x2.signum(),
        x3: a.powf(p.alpha()),
        time,
    };
    let deriv = Matrix3::from_diagonal(&Vector3::new(
        (p.lambda_s * time).exp(),
        (p.lambda_u * time).exp(),
        (p.lambda_c * time).exp(),
    ));
    Ok((exit, deriv))
}

/// Affine ear map from an exit face back to the top section, with its
/// derivative in face coordinates `(x1, x3) -> (x1', x2')` and the fixed
/// transit time. The landing must be strictly inside the section square.
pub fn ear_map(p: &LorenzParams, e: &ExitState) -> Result<(SectionPoint2, Mat2, f64)> {
    let s = e.side;
    let x1 = s * (p.ear_c * e.x1 + p.ear_d * e.x3);
    let x2 = s * (p.ear_offset - p.ear_b * e.x3);
    if x1.abs() >= 1.0 || x2.abs() >= 1.0 {
        return Err(Error::Escape(x1, x2));
    }
    let deriv = Matrix2::new(s * p.ear_c, s * p.ear_d, 0.0, -s * p.ear_b);
    Ok((SectionPoint2 { x1, x2 }, deriv, p.tau_e))
}

/// One-dimensional quotient map of the return dynamics:
/// `f(x) = sign(x) (ear_offset - ear_b |x|^alpha)`.
pub fn quotient_map(p: &LorenzParams, x2: f64) -> f64 {
    x2.signum() * (p.ear_offset - p.ear_b * x2.abs().powf(p.alpha()))
}

/// Derivative of [`quotient_map`]: `f'(x) = -ear_b alpha |x|^(alpha - 1)`.
/// `|f'| >= ear_b * alpha > 1` on the section, with equality only at `|x| = 1`.
pub fn quotient_deriv(p: &LorenzParams, x2: f64) -> f64 {
    -p.ear_b * p.alpha() * x2.abs().powf(p.alpha() - 1.0)
}

/// Elapsed time of one full return starting at `x2` on the section:
/// block passage plus ear transit.
pub fn return_time(p: &LorenzParams, x2: f64) -> f64 {
    -x2.abs().ln() / p.lambda_u + p.tau_e
}

/// A wing fixed point of the base return map, i.e. a period-one section orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WingFixedPoint {
    pub x1: f64,
    pub x2: f64,
    /// Exit side of the wing, `+1` (right) or `-1` (left).
    pub side: f64,
    /// Quotient-map multiplier `f'(x2)`.
    pub multiplier_1d: f64,
    /// Flow period of the lifted periodic orbit.
    pub period: f64,
}

const FIXED_POINT_TOL: f64 = 1e-12;

/// Locate the unique fixed point of the quotient map on one wing by bisection
/// refined with Newton steps, then lift it to the section plane.
///
/// `g(x) = f(x) - x` is strictly decreasing on `(0, 1]` with `g(0^+) > 0 >
/// g(1)` whenever the parameters validate, so the right-wing root exists and
/// is unique; the left root is its mirror image `-x2*`.
pub fn wing_fixed_point(p: &LorenzParams, side: f64) -> Result<WingFixedPoint> {
    let s = side.signum();
    if s == 0.0 {
        return Err(Error::InvalidParams("side must be nonzero".into()));
    }
    let g = |x: f64| quotient_map(p, x) - x;
    let (mut lo, mut hi) = (1e-15, 1.0);
    if g(lo) <= 0.0 || g(hi) >= 0.0 {
        return Err(Error::InvalidParams(
            "quotient map has no interior fixed point on this wing".into(),
        ));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..8 {
        let step = g(x) / (quotient_deriv(p, x) - 1.0);
        let next = x - step;
        if next > 0.0 && next < 1.0 {
            x = next;
        }
        if step.abs() < 0.25 * FIXED_POINT_TOL {
            break;
        }
    }
    let residual = g(x).abs();
    if residual > FIXED_POINT_TOL {
        return Err(Error::Numerical(format!(
            "fixed-point refinement stalled at residual {residual:.3e}"
        )));
    }
    let a = x.powf(p.alpha());
    let b = x.powf(p.beta());
    // x1* solves x1 = s (c x1 b + d a) on the wing.
    let x1 = s * p.ear_d * a / (1.0 - s * p.ear_c * b);
    Ok(WingFixedPoint {
        x1,
        x2: s * x,
        side: s,
        multiplier_1d: quotient_deriv(p, x),
        period: return_time(p, x),
    })
}

/// Parameters of the classical Lorenz system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
}

impl Default for ClassicalParams {
    fn default() -> Self {
        ClassicalParams { sigma: 10.0, rho: 28.0, beta: 8.0 / 3.0 }
    }
}

/// Classical Lorenz vector field and Jacobian; defined on all of R^3.
pub fn classical_field(p: &ClassicalParams, x: &Vec3) -> (Vec3, Mat3) {
    let f = Vector3::new(
        p.sigma * (x[1] - x[0]),
        x[0] * (p.rho - x[2]) - x[1],
        x[0] * x[1] - p.beta * x[2],
    );
    let j = Matrix3::new(
        -p.sigma, p.sigma, 0.0, //
        p.rho - x[2], -1.0, -x[0], //
        x[1], x[0], -p.beta,
    );
    (f, j)
}

/// Eigenvalues of the classical Jacobian at the origin, ascending. The `z`
/// axis decouples with rate `-beta`; the planar block has characteristic
/// polynomial `s^2 + (sigma + 1) s + sigma (1 - rho)`.
pub fn classical_origin_eigenvalues(p: &ClassicalParams) -> [f64; 3] {
    let half_tr = -0.5 * (p.sigma + 1.0);
    let disc = (0.25 * (p.sigma + 1.0).powi(2) - p.sigma * (1.0 - p.rho)).sqrt();
    let mut eig = [half_tr - disc, half_tr + disc, -p.beta];
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    #[test]
    fn defaults_pass_validation_with_positive_margins() {
        let r = validate_params(&LorenzParams::default());
        assert!(r.all_pass(), "failed: {:?}", r.failed_ids());
        assert!(r.min_margin() > 0.0);
    }

    #[test]
    fn broken_parameters_are_flagged() {
        let mut p = LorenzParams::default();
        p.ear_b = 2.2; // image [offset - b, offset] pokes below -1
        let r = validate_params(&p);
        assert!(!r.all_pass());
        assert!(r.failed_ids().contains(&"ear-image-interior-bottom"));

        let mut p = LorenzParams::default();
        p.lambda_u = 1.0; // b * alpha = 1.85 * 1 ... still > 1; break harder
        p.lambda_c = -1.9;
        let r = validate_params(&p);
        assert!(r.failed_ids().contains(&"eig-expanding-sum"));
    }

    #[test]
    fn field_is_diagonal_inside_the_block() {
        let p = LorenzParams::default();
        let (f, j) = eval_field3(&p, &Vector3::new(0.2, 0.25, 1.0)).unwrap();
        assert_relative_eq!(f[0], -0.6, max_relative = 1e-15);
        assert_relative_eq!(f[1], 0.45, max_relative = 1e-15);
        assert_relative_eq!(f[2], -1.0, max_relative = 1e-15);
        assert_eq!(j, Matrix3::from_diagonal(&Vector3::new(-3.0, 1.8, -1.0)));
        assert!(eval_field3(&p, &Vector3::new(0.0, 0.0, 1.5)).is_err());
        assert!(eval_field3(&p, &Vector3::new(-1.2, 0.0, 0.5)).is_err());
    }

    #[test]
    fn exit_matches_hand_computed_values() {
        let p = LorenzParams::default();
        let (e, d) = linear_exit(&p, &Vector3::new(0.2, 0.25, 1.0)).unwrap();
        assert_relative_eq!(e.time, 0.25f64.ln() / -1.8, max_relative = 1e-15);
        assert_relative_eq!(e.time, 0.770163533955494, max_relative = 1e-12);
        assert_relative_eq!(e.x1, 0.2 * 0.25f64.powf(5.0 / 3.0), max_relative = 1e-14);
        assert_relative_eq!(e.x1, 0.019842513149602486, max_relative = 1e-12);
        assert_eq!(e.side, 1.0);
        assert_relative_eq!(e.x3, 0.25f64.powf(5.0 / 9.0), max_relative = 1e-14);
        assert_relative_eq!(e.x3, 0.4629373561436561, max_relative = 1e-12);
        // Frozen-time flow derivative is diagonal with the block growth factors.
        assert_relative_eq!(d[(0, 0)], (-3.0 * e.time).exp(), max_relative = 1e-14);
        assert_relative_eq!(d[(1, 1)], 1.0 / 0.25, max_relative = 1e-13);
        assert_relative_eq!(d[(2, 2)], e.x3, max_relative = 1e-14);
    }

    #[test]
    fn exit_face_entry_and_left_wing() {
        let p = LorenzParams::default();
        let (e, _) = linear_exit(&p, &Vector3::new(0.0, 1.0, 1.0)).unwrap();
        assert_eq!(e.time, 0.0);
        assert_eq!((e.x1, e.side, e.x3), (0.0, 1.0, 1.0));

        let (e, _) = linear_exit(&p, &Vector3::new(0.5, -0.5, 1.0)).unwrap();
        assert_eq!(e.side, -1.0);
        assert_relative_eq!(e.time, 0.5f64.ln() / -1.8, max_relative = 1e-15);
        assert_relative_eq!(e.time, 0.3850817669777, max_relative = 1e-10);
    }

    #[test]
    fn leaf_entry_is_rejected() {
        let p = LorenzParams::default();
        assert!(matches!(
            linear_exit(&p, &Vector3::new(0.3, 0.0, 1.0)),
            Err(Error::OnStableLeaf)
        ));
        assert!(matches!(
            linear_exit(&p, &Vector3::new(0.3, 1e-11, 1.0)),
            Err(Error::OnStableLeaf)
        ));
    }

    #[test]
    fn ear_lands_where_expected() {
        let p = LorenzParams::default();
        let e = ExitState { x1: 0.019842513149602486, side: 1.0, x3: 0.4629373561436561, time: 0.0 };
        let (q, d, transit) = ear_map(&p, &e).unwrap();
        assert_relative_eq!(q.x1, 0.1 * e.x1 + 0.2 * e.x3, max_relative = 1e-15);
        assert_relative_eq!(q.x1, 0.09457172254369147, max_relative = 1e-12);
        assert_relative_eq!(q.x2, 0.95 - 1.85 * e.x3, max_relative = 1e-13);
        assert_relative_eq!(q.x2, 0.0935658911342362, max_relative = 1e-10);
        assert_eq!(transit, 2.1);
        assert_eq!(d, Matrix2::new(0.1, 0.2, 0.0, -1.85));
    }

    #[test]
    fn ear_derivative_matches_finite_differences() {
        let p = LorenzParams::default();
        let h = 1e-6;
        for (x1, x3, side) in [(0.3, 0.5, 1.0), (-0.7, 0.9, -1.0), (0.0, 0.05, 1.0)] {
            let at = |x1: f64, x3: f64| {
                let e = ExitState { x1, side, x3, time: 0.0 };
                let (q, _, _) = ear_map(&p, &e).unwrap();
                (q.x1, q.x2)
            };
            let e = ExitState { x1, side, x3, time: 0.0 };
            let (_, d, _) = ear_map(&p, &e).unwrap();
            let col1 = ((at(x1 + h, x3).0 - at(x1 - h, x3).0) / (2.0 * h),
                        (at(x1 + h, x3).1 - at(x1 - h, x3).1) / (2.0 * h));
            let col2 = ((at(x1, x3 + h).0 - at(x1, x3 - h).0) / (2.0 * h),
                        (at(x1, x3 + h).1 - at(x1, x3 - h).1) / (2.0 * h));
            assert_relative_eq!(d[(0, 0)], col1.0, epsilon = 1e-9);
            assert_relative_eq!(d[(1, 0)], col1.1, epsilon = 1e-9);
            assert_relative_eq!(d[(0, 1)], col2.0, epsilon = 1e-9);
            assert_relative_eq!(d[(1, 1)], col2.1, epsilon = 1e-9);
        }
    }

    #[test]
    fn quotient_expansion_floor_is_b_alpha() {
        let p = LorenzParams::default();
        assert_relative_eq!(p.expansion_floor(), 1.85 * 5.0 / 9.0, max_relative = 1e-15);
        assert!(p.expansion_floor() > 1.0);
        for x in [1e-6, 0.01, 0.3, 0.9999, 1.0] {
            assert!(quotient_deriv(&p, x).abs() >= p.expansion_floor() - 1e-12);
        }
        assert_relative_eq!(quotient_deriv(&p, 1.0).abs(), p.expansion_floor(), epsilon = 1e-15);
    }

    #[test]
    fn right_wing_fixed_point_against_plain_bisection() {
        let p = LorenzParams::default();
        // Independent oracle: bisection only, no Newton polish.
        let g = |x: f64| quotient_map(&p, x) - x;
        let (mut lo, mut hi) = (1e-9, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);

        let fp = wing_fixed_point(&p, 1.0).unwrap();
        assert!((fp.x2 - oracle).abs() < 1e-10, "{} vs {}", fp.x2, oracle);
        assert!(g(fp.x2).abs() < 1e-12);
        assert!((fp.x2 - 0.1979).abs() < 5e-4);
        assert!(fp.multiplier_1d.abs() > 1.0);
        assert_relative_eq!(fp.multiplier_1d, -2.111580921825, max_relative = 1e-10);
        assert_relative_eq!(fp.period, 3.000047431000, max_relative = 1e-10);
        // x1 lift is a genuine fixed point of the x1 recursion.
        let a = fp.x2.powf(p.alpha());
        let b = fp.x2.powf(p.beta());
        assert_relative_eq!(fp.x1, p.ear_c * fp.x1 * b + p.ear_d * a, max_relative = 1e-12);
    }

    #[test]
    fn left_wing_mirrors_the_quotient_root() {
        let p = LorenzParams::default();
        let right = wing_fixed_point(&p, 1.0).unwrap();
        let left = wing_fixed_point(&p, -1.0).unwrap();
        assert_relative_eq!(left.x2, -right.x2, max_relative = 1e-12);
        assert_relative_eq!(left.period, right.period, max_relative = 1e-12);
        // The x1 lift is not symmetric: the shear has a definite sign.
        let a = right.x2.powf(p.alpha());
        let b = right.x2.powf(p.beta());
        assert_relative_eq!(left.x1, -p.ear_d * a / (1.0 + p.ear_c * b), max_relative = 1e-12);
    }

    #[test]
    fn classical_field_and_origin_eigenvalues() {
        let p = ClassicalParams::default();
        let (f, j) = classical_field(&p, &Vector3::new(1.0, 1.0, 1.0));
        assert_eq!(f[0], 0.0);
        assert_eq!(f[1], 26.0);
        assert_relative_eq!(f[2], 1.0 - 8.0 / 3.0, max_relative = 1e-15);
        // Divergence is constant.
        assert_relative_eq!(j.trace(), -(10.0 + 1.0 + 8.0 / 3.0), max_relative = 1e-15);

        let eig = classical_origin_eigenvalues(&p);
        let disc = 1201.0f64.sqrt();
        assert_relative_eq!(eig[0], (-11.0 - disc) / 2.0, max_relative = 1e-15);
        assert_relative_eq!(eig[1], -8.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(eig[2], (-11.0 + disc) / 2.0, max_relative = 1e-15);
        assert!((eig[2] - 11.8277).abs() < 1e-4);
        assert!((eig[0] + 22.8277).abs() < 1e-4);
    }

    fn compose_return(p: &LorenzParams, x1: f64, x2: f64) -> (SectionPoint2, f64) {
        let (e, _) = linear_exit(p, &Vector3::new(x1, x2, 1.0)).unwrap();
        let (q, _, transit) = ear_map(p, &e).unwrap();
        (q, e.time + transit)
    }

    proptest! {
        /// The landing `x2'` depends only on the entry `x2`: the ear composed
        /// with the block passage preserves the vertical foliation exactly.
        #[test]
        fn leaf_preservation(
            x1a in -1.0f64..1.0,
            x1b in -1.0f64..1.0,
            mag in 1e-6f64..1.0,
            neg in proptest::bool::ANY,
        ) {
            let p = LorenzParams::default();
            let x2 = if neg { -mag } else { mag };
            let (qa, ta) = compose_return(&p, x1a, x2);
            let (qb, tb) = compose_return(&p, x1b, x2);
            prop_assert_eq!(qa.x2, qb.x2);
            prop_assert_eq!(ta, tb);
            prop_assert_eq!(qa.x2, quotient_map(&p, x2));
        }

        /// Returns stay strictly inside the section square and take at least
        /// the ear transit time.
        #[test]
        fn returns_are_trapped_and_slow(
            x1 in -1.0f64..1.0,
            mag in 1e-6f64..1.0,
            neg in proptest::bool::ANY,
        ) {
            let p = LorenzParams::default();
            let x2 = if neg { -mag } else { mag };
            let (q, t) = compose_return(&p, x1, x2);
            prop_assert!(q.x1.abs() < 1.0 && q.x2.abs() < 1.0);
            prop_assert!(t >= p.tau_e);
        }
    }
}
