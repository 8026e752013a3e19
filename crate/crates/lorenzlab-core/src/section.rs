//! The global cross-section engine.
//!
//! Everything observable about the hybrid flow funnels through its first
//! return to the top face: the return map and its derivative, the invariant
//! cone family and the expansion it certifies, the wing fixed points of the
//! one-dimensional quotient, and the iteration of curves tangent to the cone
//! until they grow past a target length and cross the central leaf. The
//! classical backend contributes a conventional plane section used only for
//! cross-validation.

use nalgebra::SVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowint::{
    integrate_until_event, skew_return, CrossDir, OdeOptions, SkewSection,
};
use crate::model3d::{
    classical_field, wing_fixed_point, ClassicalParams, LorenzParams, SectionPoint2,
    WingFixedPoint,
};
use crate::skew4d::SkewParams;
use crate::{Mat2, Mat3, Vec2, Vec3, LEAF_TOL};

/// A point on the full section: base square coordinates plus the fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub x1: f64,
    pub x2: f64,
    pub s: f64,
}

impl SectionPoint {
    pub fn new(x1: f64, x2: f64, s: f64) -> Self {
        SectionPoint { x1, x2, s }
    }

    fn to_skew(self) -> SkewSection {
        SkewSection { x1: self.x1, x2: self.x2, s: self.s }
    }

    fn lerp(a: &SectionPoint, b: &SectionPoint, t: f64) -> SectionPoint {
        SectionPoint {
            x1: a.x1 + t * (b.x1 - a.x1),
            x2: a.x2 + t * (b.x2 - a.x2),
            s: a.s + t * (b.s - a.s),
        }
    }

    fn dist(a: &SectionPoint, b: &SectionPoint) -> f64 {
        let d1 = b.x1 - a.x1;
        let d2 = b.x2 - a.x2;
        let ds = b.s - a.s;
        (d1 * d1 + d2 * d2 + ds * ds).sqrt()
    }
}

/// One full return to the section.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReturnResult {
    pub image: SectionPoint,
    /// Elapsed flow time, block passage plus ear transit.
    pub time: f64,
    /// Derivative of the return in `(x1, x2, s)` coordinates.
    pub deriv: Mat3,
    /// Whether the orbit started inside the surgery tube's support.
    pub tube_hit: bool,
}

/// Tolerance slack when testing curve chords against the cone slope; pure
/// floating-point headroom, not a geometric widening.
const SLOPE_SLACK: f64 = 1e-9;

/// A symmetric cone in the section plane around a distinguished axis.
#[derive(Debug, Clone, Copy)]
pub struct Cone2 {
    /// Unit axis vector.
    pub axis: Vec2,
    /// Half-opening ratio: `v` belongs iff `|v_perp| <= width * |v_axis|`.
    pub width: f64,
}

/// The ambient cone on the full section. The complement of the axis pairs
/// the transverse base direction with the fiber.
#[derive(Debug, Clone, Copy)]
pub struct Cone3 {
    pub axis: Vec3,
    pub width: f64,
}

impl Cone2 {
    pub fn new(axis: Vec2, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidParams(format!("cone width must be positive, got {width}")));
        }
        let n = axis.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidParams("cone axis must be a nonzero vector".into()));
        }
        Ok(Cone2 { axis: axis / n, width })
    }

    /// The standard section cone around the expanding `x2` direction.
    pub fn x2_axis(width: f64) -> Self {
        Cone2 { axis: Vec2::new(0.0, 1.0), width }
    }

    fn perp(&self) -> Vec2 {
        Vec2::new(-self.axis.y, self.axis.x)
    }

    pub fn contains(&self, v: &Vec2) -> bool {
        (v.dot(&self.perp())).abs() <= self.width * v.dot(&self.axis).abs() * (1.0 + SLOPE_SLACK)
    }
}

impl Cone3 {
    pub fn new(axis: Vec3, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidParams(format!("cone width must be positive, got {width}")));
        }
        let n = axis.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidParams("cone axis must be a nonzero vector".into()));
        }
        Ok(Cone3 { axis: axis / n, width })
    }

    pub fn x2_axis(width: f64) -> Self {
        Cone3 { axis: Vec3::new(0.0, 1.0, 0.0), width }
    }

    /// An orthonormal basis of the axis complement.
    fn complement(&self) -> (Vec3, Vec3) {
        let pick = if self.axis.x.abs() < 0.9 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
        let e = self.axis.cross(&pick).normalize();
        let f = self.axis.cross(&e);
        (e, f)
    }

    pub fn contains(&self, v: &Vec3) -> bool {
        let va = v.dot(&self.axis);
        let vp = (v - self.axis * va).norm();
        vp <= self.width * va.abs() * (1.0 + SLOPE_SLACK)
    }
}

/// Number of boundary rays sampled when checking a three-dimensional cone.
pub const CONE_RAYS_3D: usize = 64;

/// Reject non-invertible derivatives. The determinant is compared against
/// the Hadamard bound (product of row norms), which stays scale invariant
/// even when the map mixes strong contraction with strong expansion.
fn reject_singular(det: f64, hadamard: f64) -> Result<()> {
    if det.abs() <= 1e-12 * hadamard || !det.is_finite() {
        return Err(Error::InvalidParams(
            "cone check needs a nonsingular derivative".into(),
        ));
    }
    Ok(())
}

fn hadamard2(m: &Mat2) -> f64 {
    m.row(0).norm() * m.row(1).norm()
}

fn hadamard3(m: &Mat3) -> f64 {
    m.row(0).norm() * m.row(1).norm() * m.row(2).norm()
}

/// Verify that a planar derivative maps the input cone strictly into the
/// output cone. Extreme rays suffice in two dimensions: the image cone is
/// the convex hull of the two image rays.
///
/// Returns `(pass, worst_ratio)` with `worst_ratio` the largest value of
/// `|image_perp| / (width_out * |image_axis|)` over the boundary.
pub fn cone_check2(deriv: &Mat2, cone_in: &Cone2, cone_out: &Cone2) -> Result<(bool, f64)> {
    reject_singular(deriv.determinant(), hadamard2(deriv))?;
    let perp_in = cone_in.perp();
    let perp_out = cone_out.perp();
    let mut worst = 0.0f64;
    for sign in [1.0, -1.0] {
        let ray = cone_in.axis + perp_in * (sign * cone_in.width);
        let img = deriv * ray;
        let along = img.dot(&cone_out.axis).abs();
        let across = img.dot(&perp_out).abs();
        let ratio = if along == 0.0 { f64::INFINITY } else { across / (cone_out.width * along) };
        worst = worst.max(ratio);
    }
    Ok((worst <= 1.0, worst))
}

/// Three-dimensional analogue of [`cone_check2`], sampling the circular cone
/// boundary with [`CONE_RAYS_3D`] rays.
pub fn cone_check3(deriv: &Mat3, cone_in: &Cone3, cone_out: &Cone3) -> Result<(bool, f64)> {
    reject_singular(deriv.determinant(), hadamard3(deriv))?;
    let (e, f) = cone_in.complement();
    let mut worst = 0.0f64;
    for k in 0..CONE_RAYS_3D {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / CONE_RAYS_3D as f64;
        let ray = cone_in.axis + (e * phi.cos() + f * phi.sin()) * cone_in.width;
        let img = deriv * ray;
        let along = img.dot(&cone_out.axis);
        let across = (img - cone_out.axis * along).norm();
        let ratio = if along == 0.0 { f64::INFINITY } else { across / (cone_out.width * along.abs()) };
        worst = worst.max(ratio);
    }
    Ok((worst <= 1.0, worst))
}

/// Minimal stretch of cone vectors under a derivative, measured in the
/// axis-projection seminorm: vectors are normalized so their axis component
/// is one, and growth is the axis component of the image.
///
/// Over the cone the image's axis component is an affine function of the
/// complement coordinates, so the extremum over the disk of radius `width`
/// has a closed form and no sampling is needed.
pub fn expansion_check2(deriv: &Mat2, cone: &Cone2, lambda_floor: f64) -> Result<(bool, f64)> {
    reject_singular(deriv.determinant(), hadamard2(deriv))?;
    let c0 = cone.axis.dot(&(deriv * cone.axis));
    let c1 = cone.axis.dot(&(deriv * cone.perp()));
    let min_growth = (c0.abs() - c1.abs() * cone.width).max(0.0);
    Ok((min_growth >= lambda_floor, min_growth))
}

/// See [`expansion_check2`]; the complement here is a disk, and the extremum
/// is `|c0| - width * hypot(c1, c2)` clamped at zero.
pub fn expansion_check3(deriv: &Mat3, cone: &Cone3, lambda_floor: f64) -> Result<(bool, f64)> {
    reject_singular(deriv.determinant(), hadamard3(deriv))?;
    let (e, f) = cone.complement();
    let c0 = cone.axis.dot(&(deriv * cone.axis));
    let c1 = cone.axis.dot(&(deriv * e));
    let c2 = cone.axis.dot(&(deriv * f));
    let min_growth = (c0.abs() - c1.hypot(c2) * cone.width).max(0.0);
    Ok((min_growth >= lambda_floor, min_growth))
}

/// All period-one section orbits of the base return: the fixed points of the
/// quotient map on each wing, lifted to the section. A wing without a root
/// simply contributes nothing.
pub fn find_fixed_points(p: &LorenzParams) -> Vec<WingFixedPoint> {
    [1.0, -1.0]
        .into_iter()
        .filter_map(|side| wing_fixed_point(p, side).ok())
        .collect()
}

/// The section engine: model parameters, the surgery tube anchor, and the
/// stepper options shared by every return.
#[derive(Debug, Clone)]
pub struct HybridSection {
    pub params: LorenzParams,
    pub skew: SkewParams,
    /// Tube center on the section, the right-wing fixed point.
    pub center: SectionPoint2,
    pub ode: OdeOptions,
}

impl HybridSection {
    /// Build the engine, anchoring the tube at the right-wing fixed point.
    pub fn new(params: LorenzParams, skew: SkewParams) -> Result<Self> {
        let fp = wing_fixed_point(&params, 1.0)?;
        Ok(HybridSection {
            params,
            skew,
            center: SectionPoint2 { x1: fp.x1, x2: fp.x2 },
            ode: OdeOptions::default(),
        })
    }

    pub fn with_ode(mut self, ode: OdeOptions) -> Self {
        self.ode = ode;
        self
    }

    /// First return of `q` to the section, with elapsed time and the full
    /// derivative. Off the tube the derivative is block triangular: the base
    /// block is the planar return derivative and the fiber diagonal entry is
    /// `exp(-theta * time)`.
    pub fn return_map(&self, q: &SectionPoint) -> Result<ReturnResult> {
        const RANGE_TOL: f64 = 1e-12;
        if q.x1.abs() > 1.0 + RANGE_TOL || q.x2.abs() > 1.0 + RANGE_TOL || q.s.abs() > 1.0 + RANGE_TOL
        {
            return Err(Error::OutOfDomain(q.x1, q.x2, q.s));
        }
        let r = skew_return(&self.params, &self.skew, &self.center, &q.to_skew(), &self.ode)?;
        Ok(ReturnResult {
            image: SectionPoint { x1: r.state.x1, x2: r.state.x2, s: r.state.s },
            time: r.time,
            deriv: r.deriv,
            tube_hit: r.eta > 0.0,
        })
    }
}

/// Target length at which iterated cone-tangent curves are considered grown.
pub const CURVE_EPS0: f64 = 0.2;
/// Chord deviation tolerance of the piecewise-linear curve representation.
pub const CURVE_CHORD_TOL: f64 = 1e-6;
/// Minimum node count of any curve.
const CURVE_MIN_NODES: usize = 32;
/// Refinement budget per curve; past this the polyline is accepted coarse.
const CURVE_MAX_NODES: usize = 4096;
/// Recursion depth cap of the per-segment chord refinement.
const REFINE_MAX_DEPTH: u32 = 14;
/// After splitting at the central leaf the cut endpoint is pulled this far
/// off the leaf so it stays mappable (the return rejects `|x2|` below
/// [`LEAF_TOL`]). The cut is taken where `|x2|` equals the nudge, so the
/// trimmed piece is an exact sub-curve of the original polyline.
const SPLIT_NUDGE: f64 = 1e-9;

/// A piecewise-linear curve on the section whose chords respect the ambient
/// cone: the transverse displacement of every segment is at most `width`
/// times its displacement along the expanding axis. Construction validates
/// the geometry and densifies the polyline to at least 32 nodes.
#[derive(Debug, Clone, Serialize)]
pub struct CuCurve {
    nodes: Vec<SectionPoint>,
    width: f64,
}

impl CuCurve {
    pub fn new(nodes: Vec<SectionPoint>, width: f64) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::DegenerateCurve(format!(
                "cone width must be positive, got {width}"
            )));
        }
        // Drop exact duplicates before judging the chords.
        let mut clean: Vec<SectionPoint> = Vec::with_capacity(nodes.len());
        for n in nodes {
            if clean.last().map_or(true, |p| SectionPoint::dist(p, &n) > 0.0) {
                clean.push(n);
            }
        }
        if clean.len() < 2 {
            return Err(Error::DegenerateCurve(
                "a curve needs at least two distinct nodes".into(),
            ));
        }
        const RANGE_TOL: f64 = 1e-12;
        for n in &clean {
            if n.x1.abs() > 1.0 + RANGE_TOL || n.x2.abs() > 1.0 + RANGE_TOL || n.s.abs() > 1.0 + RANGE_TOL {
                return Err(Error::DegenerateCurve(format!(
                    "node ({}, {}, {}) leaves the section cube",
                    n.x1, n.x2, n.s
                )));
            }
        }
        if clean.iter().all(|n| n.x2.abs() <= LEAF_TOL) {
            return Err(Error::DegenerateCurve(
                "curve lies entirely inside the stable-leaf band".into(),
            ));
        }
        // Chords must advance monotonically in x2 and stay inside the cone.
        let dir = (clean[1].x2 - clean[0].x2).signum();
        for (i, w) in clean.windows(2).enumerate() {
            let d2 = w[1].x2 - w[0].x2;
            if d2 == 0.0 || d2.signum() != dir {
                return Err(Error::TangentOutsideCone(i));
            }
            let perp = (w[1].x1 - w[0].x1).hypot(w[1].s - w[0].s);
            if perp > width * d2.abs() * (1.0 + SLOPE_SLACK) {
                return Err(Error::TangentOutsideCone(i));
            }
        }
        // Densify to the minimum node count; linear interpolation leaves the
        // geometry untouched.
        if clean.len() < CURVE_MIN_NODES {
            let per = (CURVE_MIN_NODES - 1).div_ceil(clean.len() - 1);
            let mut dense = Vec::with_capacity((clean.len() - 1) * per + 1);
            for w in clean.windows(2) {
                for j in 0..per {
                    dense.push(SectionPoint::lerp(&w[0], &w[1], j as f64 / per as f64));
                }
            }
            dense.push(*clean.last().unwrap());
            clean = dense;
        }
        Ok(CuCurve { nodes: clean, width })
    }

    /// Straight segment between two points.
    pub fn segment(a: SectionPoint, b: SectionPoint, width: f64) -> Result<Self> {
        CuCurve::new(vec![a, b], width)
    }

    pub fn nodes(&self) -> &[SectionPoint] {
        &self.nodes
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn length(&self) -> f64 {
        self.nodes.windows(2).map(|w| SectionPoint::dist(&w[0], &w[1])).sum()
    }

    /// Whether the curve touches or crosses the central leaf `x2 = 0`.
    pub fn straddles_leaf(&self) -> bool {
        let first = self.nodes.first().unwrap().x2;
        let last = self.nodes.last().unwrap().x2;
        first.signum() != last.signum()
            || self.nodes.iter().any(|n| n.x2.abs() <= LEAF_TOL)
    }
}

/// Record of one split at the central leaf.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SplitRecord {
    /// Iterate at which the split happened (0 means the seed itself).
    pub iterate: usize,
    pub kept_length: f64,
    pub discarded_length: f64,
}

/// Full audit of one curve-growth experiment.
#[derive(Debug, Clone, Serialize)]
pub struct CurveTrace {
    /// Curve length after `k` mapping passes; entry 0 is the seed length.
    pub lengths: Vec<f64>,
    /// Per-pass ratio of image length to the length actually mapped (after
    /// any split of the pre-image).
    pub growth: Vec<f64>,
    pub splits: Vec<SplitRecord>,
    /// Number of central-leaf crossings encountered.
    pub crossings: usize,
    /// Mapping pass at which the first crossing appeared.
    pub first_crossing: Option<usize>,
    /// Whether the stop rule (length past the target with at least one
    /// crossing on record) fired before the iterate budget ran out.
    pub reached: bool,
    /// Mapping passes performed.
    pub iterates: usize,
    /// Returns during refinement that started inside the tube support.
    pub tube_hits: usize,
    pub final_curve: CuCurve,
}

fn cut_at_x2(curve: &[SectionPoint], target: f64) -> Option<(usize, SectionPoint)> {
    for (i, w) in curve.windows(2).enumerate() {
        let (a, b) = (w[0].x2 - target, w[1].x2 - target);
        if a == 0.0 {
            return Some((i, w[0]));
        }
        if a * b < 0.0 || b == 0.0 {
            let t = a / (a - b);
            return Some((i, SectionPoint::lerp(&w[0], &w[1], t)));
        }
    }
    None
}

fn polyline_length(nodes: &[SectionPoint]) -> f64 {
    nodes.windows(2).map(|w| SectionPoint::dist(&w[0], &w[1])).sum()
}

/// Split a leaf-straddling curve at `x2 = 0`, keep the longer piece, and trim
/// the kept piece at `|x2| =` [`SPLIT_NUDGE`] so every node stays mappable.
/// Returns the kept piece plus both audit lengths. The cut node belongs to
/// both pieces.
fn split_at_leaf(curve: &CuCurve) -> Result<(CuCurve, f64, f64)> {
    let nodes = curve.nodes();
    let (i, crossing) = cut_at_x2(nodes, 0.0).ok_or_else(|| {
        Error::DegenerateCurve("split requested but the curve does not straddle the leaf".into())
    })?;
    let mut front: Vec<SectionPoint> = nodes[..=i].to_vec();
    front.push(crossing);
    let mut back: Vec<SectionPoint> = vec![crossing];
    back.extend_from_slice(&nodes[i + 1..]);
    let len_front = polyline_length(&front);
    let len_back = polyline_length(&back);
    let keep_front = len_front >= len_back;
    let (kept_nodes, kept_len, lost_len) = if keep_front {
        (front, len_front, len_back)
    } else {
        (back, len_back, len_front)
    };
    // Re-cut the kept piece where |x2| equals the nudge, so the boundary node
    // sits on the original polyline strictly off the leaf.
    let side = if keep_front { kept_nodes[0].x2.signum() } else { kept_nodes.last().unwrap().x2.signum() };
    let target = side * SPLIT_NUDGE;
    let trimmed = if keep_front {
        let (j, cut) = cut_at_x2(&kept_nodes, target).ok_or_else(|| {
            Error::DegenerateCurve("kept piece shorter than the leaf nudge".into())
        })?;
        let mut t = kept_nodes[..=j].to_vec();
        t.push(cut);
        t
    } else {
        // Scan from the far end toward the leaf by reversing.
        let mut rev: Vec<SectionPoint> = kept_nodes.iter().rev().copied().collect();
        let (j, cut) = cut_at_x2(&rev, target).ok_or_else(|| {
            Error::DegenerateCurve("kept piece shorter than the leaf nudge".into())
        })?;
        rev.truncate(j + 1);
        rev.push(cut);
        rev.reverse();
        rev
    };
    let kept = CuCurve::new(trimmed, curve.width())?;
    Ok((kept, kept_len, lost_len))
}

fn map_node(model: &HybridSection, pt: &SectionPoint, hits: &mut usize) -> Result<SectionPoint> {
    let r = model.return_map(pt)?;
    if r.tube_hit {
        *hits += 1;
    }
    Ok(r.image)
}

#[allow(clippy::too_many_arguments)]
fn refine_segment(
    model: &HybridSection,
    a: SectionPoint,
    b: SectionPoint,
    ra: SectionPoint,
    rb: SectionPoint,
    depth: u32,
    out: &mut Vec<SectionPoint>,
    hits: &mut usize,
) -> Result<()> {
    if out.len() >= CURVE_MAX_NODES || depth >= REFINE_MAX_DEPTH {
        out.push(rb);
        return Ok(());
    }
    let m = SectionPoint::lerp(&a, &b, 0.5);
    let rm = map_node(model, &m, hits)?;
    let chord_mid = SectionPoint::lerp(&ra, &rb, 0.5);
    if SectionPoint::dist(&rm, &chord_mid) <= CURVE_CHORD_TOL {
        out.push(rb);
    } else {
        refine_segment(model, a, m, ra, rm, depth + 1, out, hits)?;
        refine_segment(model, m, b, rm, rb, depth + 1, out, hits)?;
    }
    Ok(())
}

/// Map a curve through one return, refining the image polyline until chord
/// deviations fall below [`CURVE_CHORD_TOL`] (bounded by the node budget).
fn map_curve(model: &HybridSection, curve: &CuCurve) -> Result<(CuCurve, usize)> {
    let nodes = curve.nodes();
    let mut hits = 0usize;
    let mut out: Vec<SectionPoint> = Vec::with_capacity(nodes.len() * 2);
    let mut ra = map_node(model, &nodes[0], &mut hits)?;
    out.push(ra);
    for w in nodes.windows(2) {
        let rb = map_node(model, &w[1], &mut hits)?;
        refine_segment(model, w[0], w[1], ra, rb, 0, &mut out, &mut hits)?;
        ra = rb;
    }
    Ok((CuCurve::new(out, curve.width())?, hits))
}

/// Iterate a cone-tangent curve under the return map.
///
/// Whenever the current curve straddles the central leaf it is split there
/// and the longer piece survives (both lengths are recorded). The loop runs
/// until the image length passes `eps0` with at least one crossing on
/// record, or the iterate budget `k_max` is exhausted. Requiring a recorded
/// crossing extends the plain length stop: a grown curve that crosses the
/// leaf family is exactly the evidence the surgery experiments need, and it
/// costs at most the same budget.
pub fn iterate_cu_curve(
    model: &HybridSection,
    seed: &CuCurve,
    eps0: f64,
    k_max: usize,
) -> Result<CurveTrace> {
    if !(eps0 > 0.0) {
        return Err(Error::InvalidParams(format!("eps0 must be positive, got {eps0}")));
    }
    let mut curve = seed.clone();
    let mut lengths = vec![curve.length()];
    let mut growth = Vec::new();
    let mut splits = Vec::new();
    let mut crossings = 0usize;
    let mut first_crossing = None;
    let mut tube_hits = 0usize;
    let mut reached = false;
    let mut iterates = 0usize;

    for k in 0..k_max {
        if curve.straddles_leaf() {
            let (kept, kept_len, lost_len) = split_at_leaf(&curve)?;
            splits.push(SplitRecord {
                iterate: k,
                kept_length: kept_len,
                discarded_length: lost_len,
            });
            crossings += 1;
            first_crossing.get_or_insert(k);
            curve = kept;
        }
        let pre_len = curve.length();
        let (image, hits) = map_curve(model, &curve)?;
        tube_hits += hits;
        let len = image.length();
        growth.push(len / pre_len);
        lengths.push(len);
        curve = image;
        iterates = k + 1;
        if len >= eps0 && crossings >= 1 {
            reached = true;
            break;
        }
    }

    Ok(CurveTrace {
        lengths,
        growth,
        splits,
        crossings,
        first_crossing,
        reached,
        iterates,
        tube_hits,
        final_curve: curve,
    })
}

/// First return of the classical flow to the plane `z = rho - 1`, first
/// downward crossing. Used only by the cross-validation suite.
pub fn classical_section_return(
    cp: &ClassicalParams,
    q: &Vec3,
    opts: &OdeOptions,
) -> Result<(Vec3, f64)> {
    const T_MAX: f64 = 100.0;
    const ARM_TIME: f64 = 1e-3;
    let plane = cp.rho - 1.0;
    let mut f = |_t: f64, y: &SVector<f64, 3>| {
        let (fx, _) = classical_field(cp, &Vec3::new(y[0], y[1], y[2]));
        SVector::<f64, 3>::from_column_slice(fx.as_slice())
    };
    let hit = integrate_until_event(
        &mut f,
        &|_t, y: &SVector<f64, 3>| y[2] - plane,
        CrossDir::Falling,
        0.0,
        SVector::<f64, 3>::new(q.x, q.y, q.z),
        T_MAX,
        ARM_TIME,
        opts,
    )?;
    Ok((Vec3::new(hit.y[0], hit.y[1], hit.y[2]), hit.t))
}
