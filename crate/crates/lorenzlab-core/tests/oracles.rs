//! Cross-module consistency oracles: every analytically assembled quantity
//! is re-derived here through an independent route (finite differences of
//! the plain maps, closed forms evaluated from a different module) and the
//! two answers are required to agree.

use lorenzlab_core::model3d::{quotient_map, return_time, LorenzParams};
use lorenzlab_core::sampling::SampleStream;
use lorenzlab_core::section::{HybridSection, SectionPoint};
use lorenzlab_core::skew4d::{FiberMode, SkewParams};
use lorenzlab_core::spectra::sample_orbit;

/// Central finite difference of the full hybrid return in one coordinate.
fn fd_column(
    model: &HybridSection,
    q: &SectionPoint,
    coord: usize,
    h: f64,
) -> [f64; 3] {
    let mut qp = *q;
    let mut qm = *q;
    match coord {
        0 => {
            qp.x1 += h;
            qm.x1 -= h;
        }
        1 => {
            qp.x2 += h;
            qm.x2 -= h;
        }
        _ => {
            qp.s += h;
            qm.s -= h;
        }
    }
    let rp = model.return_map(&qp).unwrap().image;
    let rm = model.return_map(&qm).unwrap().image;
    [
        (rp.x1 - rm.x1) / (2.0 * h),
        (rp.x2 - rm.x2) / (2.0 * h),
        (rp.s - rm.s) / (2.0 * h),
    ]
}

fn check_jacobian(model: &HybridSection, q: &SectionPoint, h: f64, tol: f64, label: &str) {
    let r = model.return_map(q).unwrap();
    for c in 0..3 {
        let fd = fd_column(model, q, c, h);
        for (row, fd_val) in fd.iter().enumerate() {
            let an = r.deriv[(row, c)];
            let scale = an.abs().max(1.0);
            assert!(
                (an - fd_val).abs() <= tol * scale,
                "{label}: entry ({row},{c}) analytic {an} vs fd {fd_val}"
            );
        }
    }
}

#[test]
fn hybrid_return_derivative_matches_finite_differences() {
    // Closed-form regime: no surgery, every derivative entry is analytic, so
    // central differences agree to near machine-limited accuracy.
    let hs = HybridSection::new(LorenzParams::default(), SkewParams::default()).unwrap();
    for q in [
        SectionPoint::new(0.2, 0.25, 0.0),
        SectionPoint::new(-0.4, 0.6, 0.3),
        SectionPoint::new(0.1, -0.33, -0.2),
        SectionPoint::new(0.55, -0.8, 0.1),
    ] {
        check_jacobian(&hs, &q, 1e-6, 1e-5, "mode none");
    }

    // Surgery regimes: points inside the tube collar so the occupancy
    // gradient rows are live; the fiber row comes from sensitivity
    // integration, whose tolerance sets the achievable agreement.
    for mode in [FiberMode::SaddleNode, FiberMode::Triplet] {
        let mut sp = SkewParams::default();
        sp.mode = mode;
        let hs = HybridSection::new(LorenzParams::default(), sp).unwrap();
        let c = hs.center;
        for q in [
            SectionPoint::new(c.x1 + 0.010, c.x2 + 0.020, 0.10),
            SectionPoint::new(c.x1 - 0.015, c.x2 + 0.025, -0.15),
            SectionPoint::new(c.x1 + 0.030, c.x2 - 0.010, 0.05),
        ] {
            check_jacobian(&hs, &q, 1e-5, 2e-4, "surgery collar");
        }
    }
}

#[test]
fn return_times_follow_the_closed_form_along_orbits() {
    let p = LorenzParams::default();
    let hs = HybridSection::new(p, SkewParams::default()).unwrap();
    let stream = SampleStream::new(21, "oracle-times");
    for k in 0..5u64 {
        let start = SectionPoint::new(
            stream.uniform(3 * k, -0.6, 0.6),
            stream.sign(3 * k + 1) * stream.uniform(3 * k + 2, 0.1, 0.9),
            0.1,
        );
        let orbit = sample_orbit(&hs, &start, 60, 0).unwrap();
        for (pt, t) in orbit.points.iter().zip(&orbit.times) {
            let want = return_time(&p, pt.x2);
            assert!(
                (t - want).abs() <= 1e-13 * want,
                "return time {t} vs closed form {want} at x2 = {}",
                pt.x2
            );
        }
    }
}

#[test]
fn return_determinant_equals_the_diagonal_product() {
    // The derivative never feeds the fiber into the base and never feeds
    // x1 or s into x2; its determinant must therefore be the plain diagonal
    // product, and the eigensolver route must agree with it.
    let mut sp = SkewParams::default();
    sp.mode = FiberMode::Triplet;
    let hs = HybridSection::new(LorenzParams::default(), sp).unwrap();
    let stream = SampleStream::new(33, "oracle-det");
    for k in 0..40u64 {
        let q = SectionPoint::new(
            stream.uniform(4 * k, -0.9, 0.9),
            stream.sign(4 * k + 1) * stream.uniform(4 * k + 2, 0.01, 0.95),
            stream.uniform(4 * k + 3, -0.3, 0.3),
        );
        let r = hs.return_map(&q).unwrap();
        let d = &r.deriv;
        let direct = d.determinant();
        let diag = d[(0, 0)] * d[(1, 1)] * d[(2, 2)];
        assert!(
            (direct - diag).abs() <= 1e-12 * diag.abs().max(1e-300),
            "det {direct} vs diagonal product {diag}"
        );
        let eig_prod: f64 = d.complex_eigenvalues().iter().map(|z| z.norm()).product();
        assert!(
            (eig_prod - diag.abs()).abs() <= 1e-9 * diag.abs(),
            "eigenvalue modulus product {eig_prod} vs |det| {}",
            diag.abs()
        );
    }
}

#[test]
fn full_return_projects_onto_the_quotient() {
    // Forgetting x1 and s, the base return must reproduce the scalar
    // quotient map computed by a different module.
    let p = LorenzParams::default();
    let hs = HybridSection::new(p, SkewParams::default()).unwrap();
    let stream = SampleStream::new(9, "oracle-quotient");
    for k in 0..60u64 {
        let x2 = stream.sign(2 * k) * stream.uniform(2 * k + 1, 0.005, 0.999);
        let q = SectionPoint::new(0.3, x2, 0.05);
        let got = hs.return_map(&q).unwrap().image.x2;
        let want = quotient_map(&p, x2);
        assert!(
            (got - want).abs() <= 1e-14 * want.abs().max(1.0),
            "return x2 {got} vs quotient {want} at x2 = {x2}"
        );
    }
}
