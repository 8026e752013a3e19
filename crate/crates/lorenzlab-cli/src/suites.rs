//! The eight verification suites behind the subcommands. Each runner turns
//! its config section into named checks (margin > 0 means pass), scalar
//! statistics, and CSV tables. Sampling is counter-based, so results are
//! identical for a fixed seed regardless of the worker count.

use anyhow::{bail, ensure, Result};
use lorenzlab_core::flowint::OdeOptions;
use lorenzlab_core::model3d::{
    classical_field, classical_origin_eigenvalues, quotient_deriv, return_time, validate_params,
    wing_fixed_point,
};
use lorenzlab_core::sampling::SampleStream;
use lorenzlab_core::section::{
    cone_check2, expansion_check2, iterate_cu_curve, Cone2, CuCurve, HybridSection, SectionPoint,
};
use lorenzlab_core::skew4d::{eval_field4, validate_theta, FiberMode};
use lorenzlab_core::spectra::{
    bundle_rates, classical_lle, floquet, lpf_exponents, sample_orbit, sectional_expansion_rate,
    FloquetReport, LleOptions,
};
use lorenzlab_core::{Error as CoreError, Mat2, Vec3, Vec4};
use rayon::prelude::*;

use crate::config::Config;
use crate::output::{csv_f64, CsvTable, SuiteOutcome, SuiteReport};

/// Grid and sampled starts treat `|x2|` below this as on the central leaf.
const LEAF_SKIP: f64 = 1e-9;
/// The exponent suite demands a fiber exponent at most this far above zero.
const ORDERING_FIBER_CAP: f64 = 1e-3;
/// And an expanding exponent at least this large.
const ORDERING_EXPANSION_FLOOR: f64 = 0.01;
/// Start-point retries allowed per requested orbit before giving up.
const ORBIT_ATTEMPT_FACTOR: usize = 50;

fn section_model(cfg: &Config) -> Result<HybridSection> {
    Ok(HybridSection::new(cfg.model, cfg.skew)?.with_ode(cfg.integrator.options()))
}

fn finish(mut report: SuiteReport, tables: Vec<CsvTable>) -> SuiteOutcome {
    report.tables = tables.iter().map(|t| t.file_name.clone()).collect();
    SuiteOutcome { report, tables }
}

/// Every named parameter inequality of the base model and the fiber
/// extension, re-emitted as suite checks.
pub fn validate(cfg: &Config) -> Result<SuiteOutcome> {
    let base = validate_params(&cfg.model);
    let fiber = validate_theta(&cfg.model, &cfg.skew)?;

    let mut report = SuiteReport::new("validate");
    let mut table = CsvTable::new("validate_checks.csv", "id,pass,margin");
    for check in base.checks.iter().chain(fiber.checks.iter()) {
        table.push_row(&[check.id.clone(), check.pass.to_string(), csv_f64(check.margin)]);
        report.push(check.clone());
    }
    report.stat("n_checks", report.checks.len() as f64);
    report.stat("min_margin", report.min_margin());
    Ok(finish(report, vec![table]))
}

struct GridAccum {
    min_time: f64,
    max_time: f64,
    hist: Vec<usize>,
    count: usize,
}

/// Return-time survey over a cell-centered section grid plus one long
/// exported orbit. The grid never touches the central leaf (cell centers
/// avoid `x2 = 0` for even counts; odd counts skip the center row), so the
/// time floor is checked strictly in the interior.
pub fn return_map(cfg: &Config) -> Result<SuiteOutcome> {
    let rm = cfg.suites.return_map;
    ensure!(rm.grid_x1 >= 1 && rm.grid_x2 >= 1 && rm.grid_s >= 1, "grid counts must be >= 1");
    ensure!(rm.hist_bins >= 1, "hist_bins must be >= 1");
    ensure!(rm.hist_max > rm.time_floor, "hist_max must exceed time_floor");
    let hs = section_model(cfg)?;

    let (n1, n2, ns, bins) = (rm.grid_x1, rm.grid_x2, rm.grid_s, rm.hist_bins);
    let rows: Vec<GridAccum> = (0..n1)
        .into_par_iter()
        .map(|i| -> Result<GridAccum, CoreError> {
            let x1 = -1.0 + 2.0 * (i as f64 + 0.5) / n1 as f64;
            let mut acc = GridAccum {
                min_time: f64::INFINITY,
                max_time: 0.0,
                hist: vec![0usize; bins],
                count: 0,
            };
            for j in 0..n2 {
                let x2 = -1.0 + 2.0 * (j as f64 + 0.5) / n2 as f64;
                if x2.abs() < LEAF_SKIP {
                    continue;
                }
                for k in 0..ns {
                    let s = -rm.s_band + 2.0 * rm.s_band * (k as f64 + 0.5) / ns as f64;
                    let t = hs.return_map(&SectionPoint::new(x1, x2, s))?.time;
                    acc.min_time = acc.min_time.min(t);
                    acc.max_time = acc.max_time.max(t);
                    let span = rm.hist_max - rm.time_floor;
                    let bin =
                        (((t - rm.time_floor) / span * bins as f64) as usize).min(bins - 1);
                    acc.hist[bin] += 1;
                    acc.count += 1;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_, _>>()?;

    let mut hist = vec![0usize; bins];
    let mut min_time = f64::INFINITY;
    let mut max_time = 0.0f64;
    let mut count = 0usize;
    for acc in &rows {
        min_time = min_time.min(acc.min_time);
        max_time = max_time.max(acc.max_time);
        count += acc.count;
        for (total, c) in hist.iter_mut().zip(&acc.hist) {
            *total += c;
        }
    }
    let filled = hist.iter().filter(|c| **c > 0).count();

    let mut hist_table = CsvTable::new("return_map_hist.csv", "bin_lo,bin_hi,count");
    let width = (rm.hist_max - rm.time_floor) / bins as f64;
    for (b, c) in hist.iter().enumerate() {
        let lo = rm.time_floor + b as f64 * width;
        hist_table.push_row(&[csv_f64(lo), csv_f64(lo + width), c.to_string()]);
    }

    let mut report = SuiteReport::new("return-map");
    report.check("return-time-floor", min_time - rm.time_floor);
    report.check("return-grid-coverage", filled as f64 / bins as f64 - 0.5);
    report.stat("grid_points", count as f64);
    report.stat("min_return_time", min_time);
    report.stat("max_return_time", max_time);
    report.stat("filled_bins", filled as f64);

    let mut tables = vec![hist_table];
    if rm.export_states >= 2 {
        let orbit = exported_orbit(cfg, &hs, rm.export_states)?;
        let mut orbit_table = CsvTable::new("return_map_orbit.csv", "t,x1,x2,x3,s");
        let mut t_acc = 0.0;
        for (i, p) in orbit.points.iter().enumerate() {
            orbit_table.push_row(&[
                csv_f64(t_acc),
                csv_f64(p.x1),
                csv_f64(p.x2),
                csv_f64(1.0),
                csv_f64(p.s),
            ]);
            if i < orbit.times.len() {
                t_acc += orbit.times[i];
            }
        }
        report.stat("orbit_states", orbit.points.len() as f64);
        report.stat("orbit_span", orbit.total_time());
        report.stat("orbit_tube_hits", orbit.tube_hits as f64);
        tables.push(orbit_table);
    }
    Ok(finish(report, tables))
}

/// Long orbit for the state export, retrying starts that wander onto the
/// excluded neighborhood of the leaf.
fn exported_orbit(
    cfg: &Config,
    hs: &HybridSection,
    states: usize,
) -> Result<lorenzlab_core::spectra::OrbitSample> {
    let stream = SampleStream::new(cfg.seed, "return-map-orbit");
    for attempt in 0..50u64 {
        let start = SectionPoint::new(
            stream.uniform(4 * attempt, -0.5, 0.5),
            stream.sign(4 * attempt + 1) * stream.uniform(4 * attempt + 2, 0.1, 0.9),
            stream.uniform(4 * attempt + 3, -0.3, 0.3),
        );
        match sample_orbit(hs, &start, states - 1, 0) {
            Ok(orbit) => return Ok(orbit),
            Err(CoreError::NearSingularity(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    bail!("no start point produced a clean {states}-state orbit")
}

struct ConeRow {
    x1: f64,
    x2: f64,
    s: f64,
    strip: bool,
    ratio: f64,
    growth: f64,
    cone_ok: bool,
}

/// Cone contraction and minimum vector growth of the planar return
/// derivative over random points: a bulk batch across the section and a
/// strip batch hugging the central leaf where expansion blows up.
pub fn cones(cfg: &Config) -> Result<SuiteOutcome> {
    let cc = cfg.suites.cones;
    ensure!(cc.n_bulk + cc.n_strip >= 1, "the cone survey needs at least one point");
    ensure!(
        0.0 < cc.strip_lo && cc.strip_lo < cc.strip_hi && cc.strip_hi <= cc.bulk_hi,
        "cone magnitude bands must be ordered: 0 < strip_lo < strip_hi <= bulk_hi"
    );
    let hs = section_model(cfg)?;
    let cone_in = Cone2::x2_axis(cc.cone_width_in);
    let cone_out = Cone2::x2_axis(cc.cone_width_out);
    let stream = SampleStream::new(cfg.seed, "cones");

    let total = cc.n_bulk + cc.n_strip;
    let rows: Vec<ConeRow> = (0..total)
        .into_par_iter()
        .map(|k| -> Result<ConeRow, CoreError> {
            let idx = 4 * k as u64;
            let strip = k >= cc.n_bulk;
            let mag = if strip {
                stream.uniform(idx, cc.strip_lo, cc.strip_hi)
            } else {
                stream.uniform(idx, cc.strip_hi, cc.bulk_hi)
            };
            let q = SectionPoint::new(
                stream.uniform(idx + 1, -1.0, 1.0),
                stream.sign(idx + 2) * mag,
                stream.uniform(idx + 3, -cc.s_band, cc.s_band),
            );
            let r = hs.return_map(&q)?;
            let base: Mat2 = r.deriv.fixed_view::<2, 2>(0, 0).into_owned();
            let (cone_ok, ratio) = cone_check2(&base, &cone_in, &cone_out)?;
            let (_, growth) = expansion_check2(&base, &cone_in, cc.growth_floor)?;
            Ok(ConeRow { x1: q.x1, x2: q.x2, s: q.s, strip, ratio, growth, cone_ok })
        })
        .collect::<Result<_, _>>()?;

    let mut table = CsvTable::new("cones.csv", "k,x1,x2,s,strip,cone_ratio,min_growth");
    let mut failures = 0usize;
    let mut worst_ratio = 0.0f64;
    let mut bulk_min = f64::INFINITY;
    let mut strip_min = f64::INFINITY;
    for (k, row) in rows.iter().enumerate() {
        if !row.cone_ok {
            failures += 1;
        }
        worst_ratio = worst_ratio.max(row.ratio);
        if row.strip {
            strip_min = strip_min.min(row.growth);
        } else {
            bulk_min = bulk_min.min(row.growth);
        }
        table.push_row(&[
            k.to_string(),
            csv_f64(row.x1),
            csv_f64(row.x2),
            csv_f64(row.s),
            row.strip.to_string(),
            csv_f64(row.ratio),
            csv_f64(row.growth),
        ]);
    }

    let mut report = SuiteReport::new("cones");
    report.check("cone-failures", 0.5 - failures as f64);
    report.check("cone-contraction", 1.0 - worst_ratio);
    if cc.n_bulk > 0 {
        report.check("cone-expansion-floor", bulk_min - cc.growth_floor);
        report.stat("bulk_min_growth", bulk_min);
    }
    if cc.n_strip > 0 {
        report.check("cone-strip-expansion", strip_min - cc.strip_growth_floor);
        report.stat("strip_min_growth", strip_min);
    }
    report.stat("points", total as f64);
    report.stat("worst_ratio", worst_ratio);
    Ok(finish(report, vec![table]))
}

struct CurveRow {
    x1: f64,
    x2_center: f64,
    seed_length: f64,
    final_length: f64,
    iterates: usize,
    crossings: usize,
    splits: usize,
    tube_hits: usize,
    min_growth: f64,
    reached: bool,
}

/// Short cone-tangent segments iterated until the image passes the target
/// length with a recorded central-leaf crossing. Seeds sit on `s = 0` so
/// the fiber never tilts the curve off the base plane.
pub fn curves(cfg: &Config) -> Result<SuiteOutcome> {
    let cu = cfg.suites.curves;
    ensure!(cu.n_curves >= 1, "the curve suite needs at least one seed");
    ensure!(cu.half_length > 0.0, "half_length must be positive");
    let hs = section_model(cfg)?;
    let stream = SampleStream::new(cfg.seed, "curves");

    let rows: Vec<CurveRow> = (0..cu.n_curves)
        .into_par_iter()
        .map(|k| -> Result<CurveRow, CoreError> {
            let idx = 3 * k as u64;
            let x1 = stream.uniform(idx, -0.5, 0.5);
            let x2c = stream.sign(idx + 1) * stream.uniform(idx + 2, 0.05, 0.85);
            let seed = CuCurve::segment(
                SectionPoint::new(x1, x2c - cu.half_length, 0.0),
                SectionPoint::new(x1, x2c + cu.half_length, 0.0),
                cu.cone_width,
            )?;
            let seed_length = seed.length();
            let trace = iterate_cu_curve(&hs, &seed, cu.eps0, cu.k_max)?;
            let min_growth = trace.growth.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(CurveRow {
                x1,
                x2_center: x2c,
                seed_length,
                final_length: trace.final_curve.length(),
                iterates: trace.iterates,
                crossings: trace.crossings,
                splits: trace.splits.len(),
                tube_hits: trace.tube_hits,
                min_growth,
                reached: trace.reached,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut table = CsvTable::new(
        "curves.csv",
        "curve,x1,x2_center,seed_length,final_length,iterates,crossings,splits,tube_hits,min_growth,reached",
    );
    let mut unreached = 0usize;
    let mut min_crossings = usize::MAX;
    let mut min_growth = f64::INFINITY;
    let mut max_iterates = 0usize;
    for (k, row) in rows.iter().enumerate() {
        if !row.reached {
            unreached += 1;
        }
        min_crossings = min_crossings.min(row.crossings);
        min_growth = min_growth.min(row.min_growth);
        max_iterates = max_iterates.max(row.iterates);
        table.push_row(&[
            k.to_string(),
            csv_f64(row.x1),
            csv_f64(row.x2_center),
            csv_f64(row.seed_length),
            csv_f64(row.final_length),
            row.iterates.to_string(),
            row.crossings.to_string(),
            row.splits.to_string(),
            row.tube_hits.to_string(),
            csv_f64(row.min_growth),
            row.reached.to_string(),
        ]);
    }

    let mut report = SuiteReport::new("curves");
    report.check("curves-reached", 0.5 - unreached as f64);
    report.check("curves-crossings", min_crossings as f64 - 0.5);
    report.check("curves-growth-floor", min_growth - cu.growth_floor);
    report.stat("curves", cu.n_curves as f64);
    report.stat("max_iterates", max_iterates as f64);
    report.stat("min_growth", min_growth);
    Ok(finish(report, vec![table]))
}

/// Finite-time exponents in the saddle-node regime: QR-accumulated rates of
/// ten long orbits must order as strong stable, near-neutral fiber, and
/// expanding, and must reproduce the exact diagonal bundle rates.
pub fn exponents(cfg: &Config) -> Result<SuiteOutcome> {
    let ex = cfg.suites.exponents;
    ensure!(ex.n_orbits >= 1 && ex.n_returns >= 1, "need at least one orbit and return");
    let mut p = cfg.model;
    if ex.match_ear_to_transit {
        p.ear_c = (p.lambda_s * p.tau_e).exp();
    }
    let mut sp = cfg.skew;
    sp.mode = FiberMode::SaddleNode;
    sp.theta = ex.theta;
    sp.tube_radius = ex.tube_radius;
    let theta = sp.theta;
    let hs = HybridSection::new(p, sp)?.with_ode(cfg.integrator.options());
    let stream = SampleStream::new(cfg.seed, "exponents");

    let mut table = CsvTable::new(
        "exponents.csv",
        "orbit,start_x1,start_x2,window_t,e_ss,e_fiber,e_exp,b_ss,b_fiber,b_exp,\
         angle_exp,angle_fiber,angle_ss,tube_hits",
    );
    let mut report = SuiteReport::new("exponents");
    let tol = ex.weak_tol;
    let mut idx = 0u64;
    let mut attempts = 0usize;
    let mut orbits = 0usize;
    let mut ordering_margin = f64::INFINITY;
    let mut chain_margin = f64::INFINITY;
    let mut fiber_margin = f64::INFINITY;
    let mut oracle_gap = 0.0f64;
    while orbits < ex.n_orbits {
        ensure!(
            attempts < ORBIT_ATTEMPT_FACTOR * ex.n_orbits,
            "could not find {} clean orbits in {} attempts",
            ex.n_orbits,
            attempts
        );
        attempts += 1;
        let start = SectionPoint::new(
            stream.uniform(idx, -0.5, 0.5),
            stream.sign(idx + 1) * stream.uniform(idx + 2, 0.1, 0.9),
            0.0,
        );
        idx += 3;
        let Ok(orbit) = sample_orbit(&hs, &start, ex.n_returns, ex.discard) else { continue };
        orbits += 1;
        let rep = lpf_exponents(&orbit, &format!("orbit-{orbits}"))?;
        let (e_ss, e_i, e_2) = (rep.exponents[0], rep.exponents[1], rep.exponents[2]);
        let b = bundle_rates(&orbit)?;
        oracle_gap = oracle_gap
            .max((e_ss - b.ss).abs())
            .max((e_i - b.fiber).abs())
            .max((e_2 - b.expanding).abs());
        fiber_margin = fiber_margin.min(e_i - (-theta + 0.1));
        ordering_margin = ordering_margin
            .min((-theta + 0.1) - e_ss)
            .min(e_i - (-theta + 0.1))
            .min(ORDERING_FIBER_CAP - e_i)
            .min(e_2 - ORDERING_EXPANSION_FLOOR);
        chain_margin = chain_margin
            .min(p.lambda_s + tol - e_ss)
            .min(-theta - p.lambda_s)
            .min(e_i + tol + theta)
            .min(tol - e_i)
            .min(e_2);
        table.push_row(&[
            orbits.to_string(),
            csv_f64(start.x1),
            csv_f64(start.x2),
            csv_f64(rep.window_t),
            csv_f64(e_ss),
            csv_f64(e_i),
            csv_f64(e_2),
            csv_f64(b.ss),
            csv_f64(b.fiber),
            csv_f64(b.expanding),
            csv_f64(rep.subspace_angles[0]),
            csv_f64(rep.subspace_angles[1]),
            csv_f64(rep.subspace_angles[2]),
            orbit.tube_hits.to_string(),
        ]);
    }

    report.check("exponents-ordering", ordering_margin);
    report.check("exponents-chain", chain_margin);
    report.check("exponents-oracle-gap", ex.oracle_tol - oracle_gap);
    report.stat("orbits", orbits as f64);
    report.stat("attempts", attempts as f64);
    report.stat("worst_fiber_margin", fiber_margin);
    report.stat("worst_oracle_gap", oracle_gap);
    Ok(finish(report, vec![table]))
}

/// Sectional expansion rates along sampled orbits: per-orbit means and the
/// worst minimal window must clear the model floor, and the rate on the
/// periodic orbit must match its closed form.
pub fn sectional(cfg: &Config) -> Result<SuiteOutcome> {
    let sc = cfg.suites.sectional;
    ensure!(sc.n_orbits >= 1 && sc.n_returns >= 1, "need at least one orbit and return");
    let p = cfg.model;
    let hs = section_model(cfg)?;
    let stream = SampleStream::new(cfg.seed, "sectional");

    let mut table = CsvTable::new(
        "sectional.csv",
        "orbit,start_x1,start_x2,start_s,span,mean_rate,window_rate,window_start,window_end",
    );
    let mut idx = 0u64;
    let mut attempts = 0usize;
    let mut orbits = 0usize;
    let mut worst_mean = f64::INFINITY;
    let mut worst_window = f64::INFINITY;
    let mut min_span = f64::INFINITY;
    while orbits < sc.n_orbits {
        ensure!(
            attempts < ORBIT_ATTEMPT_FACTOR * sc.n_orbits,
            "could not find {} clean orbits in {} attempts",
            sc.n_orbits,
            attempts
        );
        attempts += 1;
        let start = SectionPoint::new(
            stream.uniform(idx, -0.5, 0.5),
            stream.sign(idx + 1) * stream.uniform(idx + 2, 0.1, 0.9),
            stream.uniform(idx + 3, -0.3, 0.3),
        );
        idx += 4;
        let Ok(orbit) = sample_orbit(&hs, &start, sc.n_returns, 0) else { continue };
        orbits += 1;
        let span = orbit.total_time();
        min_span = min_span.min(span);
        let mean = bundle_rates(&orbit)?.expanding;
        worst_mean = worst_mean.min(mean);
        let (rate, (w_lo, w_hi)) = sectional_expansion_rate(&orbit)?;
        worst_window = worst_window.min(rate);
        table.push_row(&[
            orbits.to_string(),
            csv_f64(start.x1),
            csv_f64(start.x2),
            csv_f64(start.s),
            csv_f64(span),
            csv_f64(mean),
            csv_f64(rate),
            w_lo.to_string(),
            w_hi.to_string(),
        ]);
    }

    // Closed form on the periodic orbit, one exact period.
    let fp = wing_fixed_point(&p, 1.0)?;
    let orbit_p = sample_orbit(&hs, &SectionPoint::new(fp.x1, fp.x2, 0.0), 1, 0)?;
    let (rate_p, _) = sectional_expansion_rate(&orbit_p)?;
    let closed = quotient_deriv(&p, fp.x2).abs().ln() / return_time(&p, fp.x2);
    let p_err = (rate_p - closed).abs() / closed.abs();

    let mut report = SuiteReport::new("sectional");
    report.check("sectional-mean-floor", worst_mean - p.gamma);
    report.check("sectional-window-floor", worst_window - p.gamma);
    report.check("sectional-span", min_span - sc.min_span);
    report.check("sectional-closed-form", sc.closed_form_tol - p_err);
    report.stat("orbits", orbits as f64);
    report.stat("worst_mean_rate", worst_mean);
    report.stat("worst_window_rate", worst_window);
    report.stat("min_span", min_span);
    report.stat("periodic_rate", rate_p);
    report.stat("closed_form_rate", closed);
    report.stat("closed_form_err", p_err);
    Ok(finish(report, vec![table]))
}

fn floquet_row(
    table: &mut CsvTable,
    label: &str,
    s0: f64,
    rep: &FloquetReport,
    reference: f64,
) -> f64 {
    let rel_err = (rep.fiber_multiplier - reference).abs() / reference.abs();
    let mut cells = vec![
        label.to_string(),
        csv_f64(s0),
        csv_f64(rep.period),
        rep.index.to_string(),
        csv_f64(rep.fiber_multiplier),
        csv_f64(reference),
        csv_f64(rel_err),
    ];
    for m in &rep.multipliers {
        cells.push(csv_f64(*m));
    }
    table.push_row(&cells);
    rel_err
}

/// Surgery diagnostics on the periodic wing orbits: the saddle-node mode
/// must freeze the fiber (neutral per-period exponents along both the fiber
/// and the flow direction), and the triplet mode must produce the expected
/// Floquet index pattern with multipliers matching their closed forms.
pub fn surgery(cfg: &Config) -> Result<SuiteOutcome> {
    let su = cfg.suites.surgery;
    ensure!(su.delta >= 0.0, "delta must be nonnegative");
    let p = cfg.model;
    let opts = cfg.integrator.options();
    let right = wing_fixed_point(&p, 1.0)?;
    let left = wing_fixed_point(&p, -1.0)?;
    let mut report = SuiteReport::new("surgery");

    // Saddle-node mode: the frozen fiber makes the central orbit neutral.
    let mut sp_sn = cfg.skew;
    sp_sn.mode = FiberMode::SaddleNode;
    let hs_sn = HybridSection::new(p, sp_sn)?.with_ode(opts);
    let q = SectionPoint::new(right.x1, right.x2, 0.0);
    let r = hs_sn.return_map(&q)?;
    let fiber_exp = r.deriv[(2, 2)].abs().ln() / r.time;
    let flow_norm = |pt: &SectionPoint| -> Result<f64> {
        let x = Vec4::new(pt.x1, pt.x2, 1.0, pt.s);
        Ok(eval_field4(&hs_sn.params, &hs_sn.skew, &hs_sn.center, &x)?.0.norm())
    };
    let flow_exp = (flow_norm(&r.image)?.ln() - flow_norm(&q)?.ln()) / r.time;
    report.check("surgery-neutral-fiber", su.neutral_tol - fiber_exp.abs());
    report.check("surgery-neutral-flow", su.neutral_tol - flow_exp.abs());
    report.check("surgery-neutral-tube", if r.tube_hit { 0.5 } else { -0.5 });
    report.stat("neutral_fiber_exp", fiber_exp);
    report.stat("neutral_flow_exp", flow_exp);

    // Triplet mode: index 1 on the repelling central orbit, index 2 on the
    // flanking orbits at s = +-delta and on the untouched mirror orbit.
    let mut sp_tr = cfg.skew;
    sp_tr.mode = FiberMode::Triplet;
    sp_tr.kappa = su.kappa;
    sp_tr.delta = su.delta;
    let hs_tr = HybridSection::new(p, sp_tr)?.with_ode(opts);
    let kd2 = su.kappa * su.delta * su.delta;
    let mut table = CsvTable::new(
        "surgery_floquet.csv",
        "orbit,s0,period,index,fiber_multiplier,reference,rel_err,m1,m2,m3,m4",
    );

    let central = floquet(&hs_tr, &SectionPoint::new(right.x1, right.x2, 0.0))?;
    let mut worst_err =
        floquet_row(&mut table, "central", 0.0, &central, (kd2 * central.period).exp());
    report.check("surgery-central-index", 0.5 - (central.index as f64 - 1.0).abs());

    if su.delta > 0.0 {
        let mut flank_index_off = 0.0f64;
        for (label, s0) in [("flank-pos", su.delta), ("flank-neg", -su.delta)] {
            let rep = floquet(&hs_tr, &SectionPoint::new(right.x1, right.x2, s0))?;
            let want = (-2.0 * kd2 * rep.period).exp();
            worst_err = worst_err.max(floquet_row(&mut table, label, s0, &rep, want));
            flank_index_off = flank_index_off.max((rep.index as f64 - 2.0).abs());
        }
        report.check("surgery-flank-index", 0.5 - flank_index_off);
    }

    let off = floquet(&hs_tr, &SectionPoint::new(left.x1, left.x2, 0.0))?;
    let off_ref = (-sp_tr.theta * off.period).exp();
    worst_err = worst_err.max(floquet_row(&mut table, "off-tube", 0.0, &off, off_ref));
    report.check("surgery-off-tube-index", 0.5 - (off.index as f64 - 2.0).abs());

    // Degenerate limit delta = 0: the central multiplier collapses to one.
    let mut sp0 = sp_tr;
    sp0.delta = 0.0;
    let hs0 = HybridSection::new(p, sp0)?.with_ode(opts);
    let degenerate = floquet(&hs0, &SectionPoint::new(right.x1, right.x2, 0.0))?;
    let deg_err = floquet_row(&mut table, "degenerate", 0.0, &degenerate, 1.0);
    worst_err = worst_err.max(deg_err);

    report.check("surgery-multiplier-err", su.multiplier_tol - worst_err);
    report.stat("worst_multiplier_err", worst_err);
    report.stat("central_period", central.period);
    Ok(finish(report, vec![table]))
}

/// Classical Lorenz cross-checks: the largest Lyapunov exponent at two
/// tolerance settings must land in the accepted band and agree with each
/// other, and the closed-form origin spectrum must match an eigensolver.
pub fn classical_xcheck(cfg: &Config) -> Result<SuiteOutcome> {
    let cx = cfg.suites.classical_xcheck;
    let cp = cfg.classical;
    let lo = LleOptions {
        t_total: cx.t_total,
        t_transient: cx.t_transient,
        renorm_dt: cx.renorm_dt,
    };
    let x0 = Vec3::new(1.0, 1.0, 1.0);
    let coarse = OdeOptions {
        rel_tol: cx.coarse_rel_tol,
        abs_tol: cx.coarse_abs_tol,
        ..cfg.integrator.options()
    };
    let fine = cfg.integrator.options();
    let (lle_coarse, lle_fine) = rayon::join(
        || classical_lle(&cp, &x0, &lo, &coarse),
        || classical_lle(&cp, &x0, &lo, &fine),
    );
    let (lle_coarse, lle_fine) = (lle_coarse?, lle_fine?);

    let mut lle_table = CsvTable::new("classical_lle.csv", "setting,rel_tol,abs_tol,lle");
    lle_table.push_row(&[
        "coarse".to_string(),
        csv_f64(coarse.rel_tol),
        csv_f64(coarse.abs_tol),
        csv_f64(lle_coarse),
    ]);
    lle_table.push_row(&[
        "fine".to_string(),
        csv_f64(fine.rel_tol),
        csv_f64(fine.abs_tol),
        csv_f64(lle_fine),
    ]);

    let closed = classical_origin_eigenvalues(&cp);
    let j = classical_field(&cp, &Vec3::zeros()).1;
    let eigs = j.complex_eigenvalues();
    let mut solver: Vec<f64> = eigs.iter().map(|z| z.re).collect();
    solver.sort_by(|a, b| a.partial_cmp(b).expect("origin eigenvalues are finite"));
    let max_im = eigs.iter().map(|z| z.im.abs()).fold(0.0f64, f64::max);
    let mut eigen_table = CsvTable::new("classical_eigen.csv", "closed_form,solver,abs_err");
    let mut eig_err = 0.0f64;
    for (c, s) in closed.iter().zip(&solver) {
        eig_err = eig_err.max((c - s).abs());
        eigen_table.push_row(&[csv_f64(*c), csv_f64(*s), csv_f64((c - s).abs())]);
    }

    let mut report = SuiteReport::new("classical-xcheck");
    report.check("xcheck-lle-band-coarse", cx.lle_band - (lle_coarse - cx.lle_target).abs());
    report.check("xcheck-lle-band-fine", cx.lle_band - (lle_fine - cx.lle_target).abs());
    report.check("xcheck-lle-agreement", cx.agree_tol - (lle_coarse - lle_fine).abs());
    report.check("xcheck-origin-eigenvalues", cx.eig_tol - eig_err.max(max_im));
    report.stat("lle_coarse", lle_coarse);
    report.stat("lle_fine", lle_fine);
    report.stat("lle_gap", (lle_coarse - lle_fine).abs());
    report.stat("eig_err", eig_err);
    Ok(finish(report, vec![lle_table, eigen_table]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn small_config() -> Config {
        let mut cfg = Config::default();
        cfg.suites.return_map.grid_x1 = 20;
        cfg.suites.return_map.grid_x2 = 20;
        cfg.suites.return_map.grid_s = 3;
        // A 20-point x2 grid only has ten distinct return times, so the
        // coverage check needs a correspondingly coarse histogram.
        cfg.suites.return_map.hist_bins = 6;
        cfg.suites.return_map.export_states = 50;
        cfg.suites.cones.n_bulk = 200;
        cfg.suites.cones.n_strip = 50;
        cfg.suites.curves.n_curves = 5;
        // Short orbits leave the fiber rate hovering at its lower bound;
        // four hundred returns keep the tube-hit fraction stable.
        cfg.suites.exponents.n_orbits = 2;
        cfg.suites.exponents.n_returns = 400;
        cfg.suites.exponents.discard = 40;
        cfg.suites.sectional.n_orbits = 3;
        cfg
    }

    #[test]
    fn every_light_suite_passes_on_defaults() {
        let cfg = small_config();
        for runner in [validate, return_map, cones, curves, exponents, sectional, surgery] {
            let outcome = runner(&cfg).unwrap();
            assert!(
                outcome.report.all_pass,
                "suite {} failed: {:?}",
                outcome.report.suite,
                outcome.report.failed_ids()
            );
            assert!(!outcome.tables.is_empty());
        }
    }

    #[test]
    fn a_broken_parameter_turns_into_a_failing_check_not_an_error() {
        let mut cfg = small_config();
        cfg.model.gamma = -0.5;
        let outcome = validate(&cfg).unwrap();
        assert!(!outcome.report.all_pass);
        assert!(outcome.report.failed_ids().contains(&"sectional-target-positive"));
    }

    #[test]
    fn csv_tables_are_rectangular() {
        let cfg = small_config();
        let outcome = cones(&cfg).unwrap();
        let text = outcome.tables[0].render();
        let mut lines = text.lines();
        let cols = lines.next().unwrap().split(',').count();
        for line in lines {
            assert_eq!(line.split(',').count(), cols);
        }
        assert_eq!(text.lines().count(), 1 + 250);
    }
}
