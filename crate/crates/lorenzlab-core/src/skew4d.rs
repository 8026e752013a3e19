//! Skew-product extension: a one-dimensional fiber driven by the base flow.
//!
//! Off a thin tube around a chosen wing periodic orbit, the fiber coordinate
//! `s` contracts linearly at rate `theta`. Inside the tube a surgery replaces
//! that contraction with a mode-dependent field, blended by a C^2 cutoff in
//! both the base distance to the orbit and in `|s|`. The tube membership of an
//! in-block point is decided by projecting it back along the linear flow to
//! the entry section, which makes occupancy constant along block orbits and
//! lets one return of the fiber dynamics reduce to an autonomous scalar ODE.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model3d::{eval_field3, wing_fixed_point, LorenzParams, SectionPoint2};
use crate::report::ValidationReport;
use crate::{Mat4, Vec3, Vec4};

/// Fiber dynamics selected inside the surgery tube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiberMode {
    /// No surgery: `s' = -theta s` everywhere.
    #[default]
    None,
    /// Contraction switched off inside the tube; the fiber freezes there.
    SaddleNode,
    /// Pitchfork-type field `-kappa s (s^2 - delta^2)` inside the tube:
    /// `s = 0` turns repelling and a symmetric pair `s = ±delta` appears.
    Triplet,
}

/// Parameters of the skew extension.
///
/// `theta` must sit strictly between the center and strong-stable rates of the
/// base so the fiber bundle is dominated from both sides. The cutoff in `s`
/// is identically one on `|s| <= s_plateau` and vanishes for `|s| >= s_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SkewParams {
    pub theta: f64,
    pub tube_radius: f64,
    pub s_plateau: f64,
    pub s_max: f64,
    pub kappa: f64,
    pub delta: f64,
    pub mode: FiberMode,
}

impl Default for SkewParams {
    fn default() -> Self {
        SkewParams {
            theta: 2.0,
            tube_radius: 0.05,
            s_plateau: 0.2,
            s_max: 0.4,
            kappa: 5.0,
            delta: 0.1,
            mode: FiberMode::None,
        }
    }
}

/// Quintic smoothstep `6u^5 - 15u^4 + 10u^3`, clamped to `[0, 1]`. C^2 at
/// both ends: value, slope and curvature all match the constant branches.
pub fn smoothstep2(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

/// Derivative of [`smoothstep2`]: `30 u^2 (1 - u)^2` on the ramp.
pub fn smoothstep2_deriv(u: f64) -> f64 {
    if !(0.0..=1.0).contains(&u) {
        0.0
    } else {
        let w = u * (1.0 - u);
        30.0 * w * w
    }
}

/// C^2 bump `1 - smoothstep2`: one at `u <= 0`, zero at `u >= 1`.
pub fn bump(u: f64) -> f64 {
    1.0 - smoothstep2(u)
}

/// Cutoff in the fiber coordinate and its derivative. The profile depends on
/// the surgery mode: the saddle-node bump peaks only at `s = 0` (so the
/// occupancy is 1 exactly on the designated orbit), while the triplet bump is
/// identically 1 on the plateau `|s| <= s_plateau` so the flanking orbits at
/// `±delta` sit inside a genuinely frozen zone. Both vanish beyond `s_max`.
fn fiber_cutoff(sp: &SkewParams, s: f64) -> (f64, f64) {
    let (u, width) = match sp.mode {
        FiberMode::SaddleNode => (s.abs() / sp.s_max, sp.s_max),
        _ => (
            (s.abs() - sp.s_plateau) / (sp.s_max - sp.s_plateau),
            sp.s_max - sp.s_plateau,
        ),
    };
    (bump(u), -smoothstep2_deriv(u) * s.signum() / width)
}

/// Project an in-block point back along the linear flow to its entry point on
/// the section `{x3 = 1}`. Constant along orbits, which is what makes the
/// tube test cheap. Requires `x3 > 0`.
pub fn back_project(p: &LorenzParams, x: &Vec3) -> Result<SectionPoint2> {
    if x[2] <= 0.0 {
        return Err(Error::OutOfDomain(x[0], x[1], x[2]));
    }
    Ok(SectionPoint2 {
        x1: x[0] * x[2].powf(-p.lambda_s / p.lambda_c),
        x2: x[1] * x[2].powf(-p.lambda_u / p.lambda_c),
    })
}

/// Tube occupancy of a section point: one at the tube center, zero at
/// distance `tube_radius` and beyond, C^2 in between.
pub fn occupancy_at_entry(sp: &SkewParams, center: &SectionPoint2, x1: f64, x2: f64) -> f64 {
    let dist = (x1 - center.x1).hypot(x2 - center.x2);
    bump(dist / sp.tube_radius)
}

/// Tube occupancy of a section point together with its gradient in the
/// section coordinates. The gradient vanishes identically at the tube center
/// and outside the collar, so products against it can be skipped there.
pub fn occupancy_jet_at_entry(
    sp: &SkewParams,
    center: &SectionPoint2,
    x1: f64,
    x2: f64,
) -> (f64, [f64; 2]) {
    let (dx1, dx2) = (x1 - center.x1, x2 - center.x2);
    let dist = dx1.hypot(dx2);
    let eta = bump(dist / sp.tube_radius);
    if dist <= 0.0 || dist >= sp.tube_radius {
        return (eta, [0.0, 0.0]);
    }
    let scale = -smoothstep2_deriv(dist / sp.tube_radius) / (sp.tube_radius * dist);
    (eta, [scale * dx1, scale * dx2])
}

/// Tube occupancy of an in-block point, via back-projection.
///
/// The vertical coordinate of the back projection is screened first: if it
/// already clears the tube the horizontal one is never formed, so the
/// `x3^(-lambda_s/lambda_c)` blow-up near the bottom face is never evaluated
/// outside the slab where the tube lives.
pub fn occupancy_at(
    p: &LorenzParams,
    sp: &SkewParams,
    center: &SectionPoint2,
    x: &Vec3,
) -> f64 {
    if x[2] <= 0.0 {
        return 0.0;
    }
    let x2_entry = x[1] * x[2].powf(-p.lambda_u / p.lambda_c);
    if (x2_entry - center.x2).abs() >= sp.tube_radius {
        return 0.0;
    }
    let x1_entry = x[0] * x[2].powf(-p.lambda_s / p.lambda_c);
    occupancy_at_entry(sp, center, x1_entry, x2_entry)
}

/// Value and first partials of the fiber field at occupancy `eta_b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberJet {
    pub f: f64,
    /// Partial in the fiber coordinate, `dF/ds`.
    pub df_ds: f64,
    /// Partial in the frozen base occupancy, `dF/d eta_b`.
    pub df_deta: f64,
}

/// Fiber field `F(s; eta_b)` with the `s` cutoff folded in. `eta_b` is the
/// occupancy of the base point, frozen over one return.
pub fn fiber_rhs(sp: &SkewParams, s: f64, eta_b: f64) -> f64 {
    fiber_jet(sp, s, eta_b).f
}

/// Fiber field together with its partials in `s` and `eta_b`; the partials
/// feed the sensitivity equations of the return map.
pub fn fiber_jet(sp: &SkewParams, s: f64, eta_b: f64) -> FiberJet {
    if sp.mode == FiberMode::None {
        return FiberJet { f: -sp.theta * s, df_ds: -sp.theta, df_deta: 0.0 };
    }
    let (c, dc) = fiber_cutoff(sp, s);
    let eta = eta_b * c;
    let deta_ds = eta_b * dc;
    match sp.mode {
        FiberMode::None => unreachable!(),
        FiberMode::SaddleNode => FiberJet {
            f: -sp.theta * s * (1.0 - eta),
            df_ds: -sp.theta * (1.0 - eta) + sp.theta * s * deta_ds,
            df_deta: sp.theta * s * c,
        },
        FiberMode::Triplet => {
            let cubic = -sp.kappa * s * (s * s - sp.delta * sp.delta);
            let cubic_ds = -sp.kappa * (3.0 * s * s - sp.delta * sp.delta);
            FiberJet {
                f: -sp.theta * s * (1.0 - eta) + eta * cubic,
                df_ds: -sp.theta * (1.0 - eta)
                    + sp.theta * s * deta_ds
                    + deta_ds * cubic
                    + eta * cubic_ds,
                df_deta: c * (sp.theta * s + cubic),
            }
        }
    }
}

/// Exact fiber transit over time `t` when the field is purely linear, i.e.
/// zero occupancy or no surgery.
pub fn linear_fiber_transit(sp: &SkewParams, s: f64, t: f64) -> f64 {
    s * (-sp.theta * t).exp()
}

/// Full four-dimensional vector field and Jacobian of the skew flow inside
/// the block, with the tube centered at `center`.
pub fn eval_field4(
    p: &LorenzParams,
    sp: &SkewParams,
    center: &SectionPoint2,
    x: &Vec4,
) -> Result<(Vec4, Mat4)> {
    let base = Vec3::new(x[0], x[1], x[2]);
    let (f3, j3) = eval_field3(p, &base)?;
    let eta_b = occupancy_at(p, sp, center, &base);
    let jet = fiber_jet(sp, x[3], eta_b);

    let f = Vector4::new(f3[0], f3[1], f3[2], jet.f);
    let mut j = Matrix4::zeros();
    for r in 0..3 {
        for c in 0..3 {
            j[(r, c)] = j3[(r, c)];
        }
    }
    j[(3, 3)] = jet.df_ds;
    // Base gradient of the occupancy, only nonzero strictly inside the tube.
    if eta_b > 0.0 && eta_b < 1.0 {
        let es = -p.lambda_s / p.lambda_c;
        let eu = -p.lambda_u / p.lambda_c;
        let x1e = x[0] * x[2].powf(es);
        let x2e = x[1] * x[2].powf(eu);
        let (dx1, dx2) = (x1e - center.x1, x2e - center.x2);
        let dist = dx1.hypot(dx2);
        if dist > 0.0 {
            let scale = -smoothstep2_deriv(dist / sp.tube_radius) / (sp.tube_radius * dist);
            let grad = [
                scale * dx1 * x[2].powf(es),
                scale * dx2 * x[2].powf(eu),
                scale
                    * (dx1 * es * x[0] * x[2].powf(es - 1.0)
                        + dx2 * eu * x[1] * x[2].powf(eu - 1.0)),
            ];
            for (c, g) in grad.iter().enumerate() {
                j[(3, c)] = jet.df_deta * g;
            }
        }
    }
    Ok((f, j))
}

/// Validate the skew parameters against the base model. The tube must clear
/// the stable leaf `{x2 = 0}` and its mirror-wing twin, and the fiber rate
/// must sit strictly inside the stable spectral gap of the base.
pub fn validate_theta(p: &LorenzParams, sp: &SkewParams) -> Result<ValidationReport> {
    let right = wing_fixed_point(p, 1.0)?;
    let left = wing_fixed_point(p, -1.0)?;
    let twin_dist = (right.x1 - left.x1).hypot(right.x2 - left.x2);

    let mut r = ValidationReport::default();
    r.push_margin("theta-positive", sp.theta);
    r.push_margin("theta-below-stable", -p.lambda_s - sp.theta);
    r.push_margin("theta-above-center", sp.theta + p.lambda_c);
    r.push_margin("tube-radius-positive", sp.tube_radius);
    r.push_margin("tube-clear-of-leaf", right.x2 - sp.tube_radius);
    r.push_margin("tube-clear-of-twin", twin_dist - 2.0 * sp.tube_radius);
    r.push_margin("plateau-positive", sp.s_plateau);
    r.push_margin("plateau-order", sp.s_max - sp.s_plateau);
    r.push_margin("fiber-cap-bounded", 1.0 - sp.s_max);
    // delta = 0 is legal (the saddle-node limit); it only must stay inside
    // the plateau so the flanking zeros, when present, are frozen orbits.
    r.push_margin("triplet-zeros-inside", sp.s_plateau - sp.delta);
    r.push_margin("kappa-positive", sp.kappa);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn defaults_validate_with_positive_margins() {
        let p = LorenzParams::default();
        let sp = SkewParams::default();
        let r = validate_theta(&p, &sp).unwrap();
        assert!(r.all_pass(), "failed: {:?}", r.failed_ids());
        let twin = r.checks.iter().find(|c| c.id == "tube-clear-of-twin").unwrap();
        // Wing fixed points sit 0.42787... apart in the section plane.
        assert_relative_eq!(twin.margin, 0.4278744385437457 - 0.1, max_relative = 1e-10);
    }

    #[test]
    fn theta_outside_the_gap_is_flagged() {
        let p = LorenzParams::default();
        let mut sp = SkewParams::default();
        sp.theta = 3.5;
        let r = validate_theta(&p, &sp).unwrap();
        assert!(r.failed_ids().contains(&"theta-below-stable"));
        sp.theta = 0.5;
        let r = validate_theta(&p, &sp).unwrap();
        assert!(r.failed_ids().contains(&"theta-above-center"));
    }

    #[test]
    fn smoothstep_is_flat_at_both_ends() {
        assert_eq!(smoothstep2(0.0), 0.0);
        assert_eq!(smoothstep2(1.0), 1.0);
        assert_eq!(smoothstep2(0.5), 0.5);
        assert_eq!(smoothstep2(-3.0), 0.0);
        assert_eq!(smoothstep2(7.0), 1.0);
        let h = 1e-4;
        for u in [0.0, 1.0] {
            let fd = (smoothstep2(u + h) - smoothstep2(u - h)) / (2.0 * h);
            assert!(fd.abs() < 1e-6, "slope {fd} at {u}");
        }
        // Derivative matches a central difference on the ramp.
        for u in [0.1, 0.37, 0.5, 0.81] {
            let fd = (smoothstep2(u + h) - smoothstep2(u - h)) / (2.0 * h);
            assert_relative_eq!(smoothstep2_deriv(u), fd, epsilon = 1e-6);
        }
    }

    #[test]
    fn back_projection_inverts_the_block_flow() {
        let p = LorenzParams::default();
        let entry = SectionPoint2 { x1: 0.3, x2: 0.21 };
        for t in [0.0, 0.2, 0.5, 0.8] {
            let x = Vec3::new(
                entry.x1 * (p.lambda_s * t).exp(),
                entry.x2 * (p.lambda_u * t).exp(),
                (p.lambda_c * t).exp(),
            );
            let back = back_project(&p, &x).unwrap();
            assert_relative_eq!(back.x1, entry.x1, max_relative = 1e-12);
            assert_relative_eq!(back.x2, entry.x2, max_relative = 1e-12);
        }
    }

    #[test]
    fn occupancy_is_one_along_the_central_orbit_and_zero_far_away() {
        let p = LorenzParams::default();
        let sp = SkewParams::default();
        let fp = wing_fixed_point(&p, 1.0).unwrap();
        let center = SectionPoint2 { x1: fp.x1, x2: fp.x2 };
        for t in [0.0, 0.3, 0.6, 0.89] {
            let x = Vec3::new(
                fp.x1 * (p.lambda_s * t).exp(),
                fp.x2 * (p.lambda_u * t).exp(),
                (p.lambda_c * t).exp(),
            );
            assert_eq!(occupancy_at(&p, &sp, &center, &x), 1.0);
        }
        // The screen rejects bottom-face points without forming the blown-up
        // horizontal back projection.
        let far = Vec3::new(0.9, 0.9, 1e-3);
        assert_eq!(occupancy_at(&p, &sp, &center, &far), 0.0);
        assert_eq!(occupancy_at(&p, &sp, &center, &Vec3::new(0.0, -0.5, 1.0)), 0.0);
        // Degenerate x3 is occupancy zero, not an error.
        assert_eq!(occupancy_at(&p, &sp, &center, &Vec3::new(0.1, 0.1, 0.0)), 0.0);
    }

    #[test]
    fn occupancy_interpolates_smoothly_in_the_collar() {
        let sp = SkewParams::default();
        let center = SectionPoint2 { x1: 0.0, x2: 0.2 };
        let at = |d: f64| occupancy_at_entry(&sp, &center, 0.0, 0.2 + d);
        assert_eq!(at(0.0), 1.0);
        // 0.2 + 0.05 - 0.2 rounds to the collar edge only up to one ulp.
        assert!(at(0.05).abs() < 1e-13);
        assert_relative_eq!(at(0.025), 0.5, max_relative = 1e-12);
        assert!(at(0.01) > at(0.02) && at(0.02) > at(0.04));
    }

    #[test]
    fn occupancy_gradient_matches_finite_differences() {
        let sp = SkewParams::default();
        let center = SectionPoint2 { x1: 0.08, x2: 0.2 };
        let h = 1e-7;
        for (x1, x2) in [(0.1, 0.21), (0.06, 0.18), (0.08, 0.24), (0.3, 0.9)] {
            let (eta, grad) = occupancy_jet_at_entry(&sp, &center, x1, x2);
            let fd1 = (occupancy_at_entry(&sp, &center, x1 + h, x2)
                - occupancy_at_entry(&sp, &center, x1 - h, x2))
                / (2.0 * h);
            let fd2 = (occupancy_at_entry(&sp, &center, x1, x2 + h)
                - occupancy_at_entry(&sp, &center, x1, x2 - h))
                / (2.0 * h);
            assert_relative_eq!(grad[0], fd1, epsilon = 1e-5);
            assert_relative_eq!(grad[1], fd2, epsilon = 1e-5);
            assert_eq!(eta, occupancy_at_entry(&sp, &center, x1, x2));
        }
        // Flat at the center and outside the collar.
        let (_, g0) = occupancy_jet_at_entry(&sp, &center, 0.08, 0.2);
        assert_eq!(g0, [0.0, 0.0]);
        let (eta, gout) = occupancy_jet_at_entry(&sp, &center, 0.3, 0.9);
        assert_eq!((eta, gout), (0.0, [0.0, 0.0]));
    }

    #[test]
    fn fiber_modes_have_the_advertised_zeros_and_rates() {
        let mut sp = SkewParams::default();

        sp.mode = FiberMode::None;
        assert_eq!(fiber_rhs(&sp, 0.3, 1.0), -0.6);
        assert_eq!(fiber_jet(&sp, 0.3, 1.0).df_ds, -2.0);

        sp.mode = FiberMode::SaddleNode;
        // The field freezes exactly at s = 0 (the designated orbit) and the
        // occupancy there is genuinely 1, not a plateau.
        assert_eq!(fiber_rhs(&sp, 0.0, 1.0), 0.0);
        assert_eq!(fiber_jet(&sp, 0.0, 1.0).df_ds, 0.0);
        // Off s = 0 the bump has already decayed: bump(0.25) = 1 - 53/512.
        assert_relative_eq!(
            fiber_rhs(&sp, 0.1, 1.0),
            -2.0 * 0.1 * (53.0 / 512.0),
            max_relative = 1e-14
        );
        // Outside the tube the plain contraction is untouched.
        assert_eq!(fiber_rhs(&sp, 0.1, 0.0), -0.2);

        sp.mode = FiberMode::Triplet;
        for s in [0.0, 0.1, -0.1] {
            assert_relative_eq!(fiber_rhs(&sp, s, 1.0), 0.0, epsilon = 1e-15);
        }
        // Repelling at the origin, attracting at the flanking zeros.
        assert_relative_eq!(fiber_jet(&sp, 0.0, 1.0).df_ds, 0.05, max_relative = 1e-14);
        assert_relative_eq!(fiber_jet(&sp, 0.1, 1.0).df_ds, -0.1, max_relative = 1e-13);
        assert_relative_eq!(fiber_jet(&sp, -0.1, 1.0).df_ds, -0.1, max_relative = 1e-13);
        // Far out in s the cutoff has died and contraction rules again.
        assert_eq!(fiber_rhs(&sp, 0.5, 1.0), -1.0);
    }

    #[test]
    fn saddle_node_slope_stays_between_minus_theta_and_zero_on_the_base() {
        let mut sp = SkewParams::default();
        sp.mode = FiberMode::SaddleNode;
        for eta in [0.0, 0.3, 0.7, 1.0] {
            let j = fiber_jet(&sp, 0.0, eta);
            assert_eq!(j.f, 0.0);
            assert_relative_eq!(j.df_ds, -sp.theta * (1.0 - eta), max_relative = 1e-14);
            assert!((-sp.theta - 1e-15..=1e-15).contains(&j.df_ds));
        }
    }

    #[test]
    fn fiber_jet_partials_match_finite_differences() {
        let h = 1e-6;
        for mode in [FiberMode::SaddleNode, FiberMode::Triplet] {
            let mut sp = SkewParams::default();
            sp.mode = mode;
            for (s, eta) in [(0.05, 0.7), (0.25, 0.4), (0.3, 1.0), (-0.28, 0.9), (0.12, 0.0)] {
                let jet = fiber_jet(&sp, s, eta);
                let fd_s = (fiber_rhs(&sp, s + h, eta) - fiber_rhs(&sp, s - h, eta)) / (2.0 * h);
                let fd_e = (fiber_rhs(&sp, s, eta + h) - fiber_rhs(&sp, s, eta - h)) / (2.0 * h);
                assert_relative_eq!(jet.df_ds, fd_s, epsilon = 2e-5);
                assert_relative_eq!(jet.df_deta, fd_e, epsilon = 2e-5);
            }
        }
    }

    #[test]
    fn field4_jacobian_matches_finite_differences() {
        let p = LorenzParams::default();
        let mut sp = SkewParams::default();
        sp.mode = FiberMode::Triplet;
        let fp = wing_fixed_point(&p, 1.0).unwrap();
        let center = SectionPoint2 { x1: fp.x1, x2: fp.x2 };
        // A point in the tube collar where the occupancy gradient is live:
        // flow a section entry offset by (0.01, 0.015) down to x3 = 0.9, so
        // the back projection lands at distance ~0.018 < tube_radius.
        let x3 = 0.9_f64;
        let x = Vector4::new(
            (fp.x1 + 0.01) * x3.powf(p.lambda_s / p.lambda_c),
            (fp.x2 + 0.015) * x3.powf(p.lambda_u / p.lambda_c),
            x3,
            0.13,
        );
        let (_, j) = eval_field4(&p, &sp, &center, &x).unwrap();
        let eta = occupancy_at(&p, &sp, &center, &Vec3::new(x[0], x[1], x[2]));
        assert!(eta > 0.0 && eta < 1.0, "collar point drifted, eta = {eta}");
        let h = 1e-6;
        for c in 0..4 {
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let (fp4, _) = eval_field4(&p, &sp, &center, &xp).unwrap();
            let (fm4, _) = eval_field4(&p, &sp, &center, &xm).unwrap();
            for r in 0..4 {
                let fd = (fp4[r] - fm4[r]) / (2.0 * h);
                assert_relative_eq!(j[(r, c)], fd, epsilon = 5e-5);
            }
        }
    }

    #[test]
    fn mode_names_serialize_kebab_case() {
        assert_eq!(serde_json::to_string(&FiberMode::SaddleNode).unwrap(), "\"saddle-node\"");
        let sp: SkewParams = serde_json::from_str(
            r#"{"theta":2.5,"tube_radius":0.05,"s_plateau":0.2,"s_max":0.4,
                "kappa":5.0,"delta":0.1,"mode":"triplet"}"#,
        )
        .unwrap();
        assert_eq!(sp.mode, FiberMode::Triplet);
        assert_eq!(sp.theta, 2.5);
    }

    proptest! {
        /// Occupancy computed on the section and after flowing into the block
        /// agree: the tube is a union of orbit segments.
        #[test]
        fn occupancy_is_flow_invariant(
            x1 in -0.5f64..0.5,
            x2 in 0.15f64..0.25,
            t in 0.0f64..0.9,
        ) {
            let p = LorenzParams::default();
            let sp = SkewParams::default();
            let fp = wing_fixed_point(&p, 1.0).unwrap();
            let center = SectionPoint2 { x1: fp.x1, x2: fp.x2 };
            let at_entry = occupancy_at_entry(&sp, &center, x1, x2);
            let x = Vec3::new(
                x1 * (p.lambda_s * t).exp(),
                x2 * (p.lambda_u * t).exp(),
                (p.lambda_c * t).exp(),
            );
            let in_block = occupancy_at(&p, &sp, &center, &x);
            prop_assert!((at_entry - in_block).abs() < 1e-9);
        }

        /// Dissipativity of the fiber: outside `s_max` every mode contracts.
        #[test]
        fn fiber_contracts_outside_the_cap(
            s in 0.4f64..2.0,
            eta in 0.0f64..1.0,
            neg in proptest::bool::ANY,
        ) {
            let s = if neg { -s } else { s };
            for mode in [FiberMode::None, FiberMode::SaddleNode, FiberMode::Triplet] {
                let mut sp = SkewParams::default();
                sp.mode = mode;
                prop_assert!(fiber_rhs(&sp, s, eta) * s < 0.0);
            }
        }
    }
}
