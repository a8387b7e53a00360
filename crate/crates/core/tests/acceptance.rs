//! Acceptance criteria, one line per criterion. Exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use pansu_core::competitors::random_specs;
use pansu_core::foliation::{curvature_gap_bound, gauss_green, pop_bound_check};
use pansu_core::heisenberg::{
    horizontal_divergence_fd, horizontal_gradient_fd, HorizontalVector, Point, ScalarField, VectorField,
};
use pansu_core::pansu::{pansu_perimeter, pansu_volume};
use pansu_core::profile::phi;
use pansu_core::quadrature::QuadratureConfig;
use pansu_core::quantitative::{holder_link, QuantConfig};
use pansu_core::{sweep, FoliationContext};

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(results: &mut Vec<bool>, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Outcome) {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = limit.map_or(true, |l| elapsed < l);
    let pass = out.pass && in_time;
    let limit_txt = limit.map_or(String::new(), |l| format!(" < {} s", l.as_secs()));
    println!(
        "[{}] {name}: {} ({:.2} s{limit_txt})",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64()
    );
    results.push(pass);
}

fn ctx(n: usize, eps: f64) -> FoliationContext {
    FoliationContext::new(n, eps).expect("valid parameters")
}

/// A fixed direction in `R^{2n}` that is not aligned with any axis.
fn generic_direction(n: usize) -> Vec<f64> {
    (0..2 * n).map(|k| 1.0 + 0.37 * k as f64).collect()
}

fn curvature_identity() -> Outcome {
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut cells = 0;
    let mut errors = 0;
    for &n in &[1usize, 2] {
        for &eps in &[0.0, 0.1, 0.5] {
            let c = ctx(n, eps);
            let x = c.x_field();
            let dir = generic_direction(n);
            // Radii in [0.1, 0.9]·r_ε keep the stencil away from the axis and
            // from the ring where all inner leaves meet.
            let errs: Vec<Option<f64>> = (0..50)
                .into_par_iter()
                .flat_map_iter(|i| {
                    let r = c.r_eps() * (0.1 + 0.8 * i as f64 / 49.0);
                    let room = phi(r).unwrap() - c.t_eps();
                    let (x, c, dir) = (&x, &c, &dir);
                    (0..50).map(move |j| {
                        let t = c.t_eps() + room * (j as f64 + 0.5) / 50.0;
                        let p = Point::along(dir, r, t);
                        let s = c.solve_u(&p).ok()?.s;
                        let div = horizontal_divergence_fd(x, &p, h).ok()?;
                        Some((div / (2.0 * n as f64) - 1.0 / s).abs())
                    })
                })
                .collect();
            for e in errs {
                cells += 1;
                match e {
                    Some(e) => worst = worst.max(e),
                    None => errors += 1,
                }
            }
        }
    }
    Outcome {
        pass: errors == 0 && worst <= 1e-6,
        detail: format!("max |div X/2n − 1/s| = {worst:.2e} ≤ 1e-6 over {cells} cells, {errors} evaluation errors"),
    }
}

fn leaf_duality() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let mut errors = 0;
    for (k, &eps) in [0.0, 0.1, 0.5].iter().enumerate() {
        let c = ctx(1, eps);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + k as u64);
        for _ in 0..1000 {
            let s = rng.gen_range(1.001..=50.0);
            let r = c.r_eps() * rng.gen_range(0.0..1.0);
            count += 1;
            let Ok(t) = c.leaf_graph(s, r) else {
                errors += 1;
                continue;
            };
            match c.solve_u(&Point::on_axis_x1(1, r, t)) {
                Ok(leaf) => worst = worst.max((leaf.s - s).abs()),
                Err(_) => errors += 1,
            }
        }
    }
    Outcome {
        pass: errors == 0 && worst <= 1e-9,
        detail: format!("max |u(leaf_s) − s| = {worst:.2e} ≤ 1e-9 over {count} pairs, {errors} errors"),
    }
}

fn gap_bounds() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut at = (0.0, 0.0, 0.0);
    let mut errors = 0;
    for &eps in &[0.0, 0.01, 0.1, 0.5] {
        let c = ctx(1, eps);
        let cells: Vec<Option<(f64, f64, f64)>> = (0..200)
            .into_par_iter()
            .flat_map_iter(|i| {
                let r = c.r_eps() * (i as f64 + 0.5) / 200.0;
                let room = phi(r).unwrap() - c.t_eps();
                let c = &c;
                (0..200).map(move |j| {
                    let t = room * (j as f64 + 0.5) / 200.0;
                    let f = c.f_z(t, r).ok()?;
                    Some(((1.0 - 1.0 / f) - curvature_gap_bound(t, eps), r, t))
                })
            })
            .collect();
        for cell in cells {
            match cell {
                Some((m, r, t)) if m < worst => {
                    worst = m;
                    at = (eps, r, t);
                }
                Some(_) => {}
                None => errors += 1,
            }
        }
    }
    Outcome {
        pass: errors == 0 && worst >= 0.0,
        detail: format!(
            "min margin {worst:.3e} ≥ 0 (at eps {}, r {:.4}, depth {:.4}), {errors} errors",
            at.0, at.1, at.2
        ),
    }
}

fn pop_inequality() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut errors = 0;
    let count = 10_000;
    for &eps in &[0.0, 0.1, 0.5] {
        for k in 0..count {
            // Log-spaced in s − 1 from 1e-6 (excluded) up to 99.
            let frac = (k + 1) as f64 / count as f64;
            let s = 1.0 + 1e-6 * (99.0f64 / 1e-6).powf(frac);
            match pop_bound_check(s, eps) {
                Ok((lhs, rhs)) => worst = worst.min(rhs - lhs),
                Err(_) => errors += 1,
            }
        }
    }
    Outcome {
        pass: errors == 0 && worst >= 0.0,
        detail: format!("min (rhs − lhs) = {worst:.3e} over {} points, {errors} errors", 3 * count),
    }
}

fn competitor_sweep(eps_list: &[f64], theorem: &str) -> Outcome {
    let qcfg = QuantConfig::default();
    let mut total = 0;
    let mut ok = 0;
    let mut fe_ok = 0;
    let mut worst_theorem = f64::INFINITY;
    let mut worst_fe = f64::INFINITY;
    for &eps in eps_list {
        for &(n, count) in &[(1usize, 100usize), (2, 50)] {
            let c = ctx(n, eps);
            let specs = random_specs(count, 20_000 + 1000 * n as u64, &c, &qcfg.quad);
            for r in sweep(&specs, &c, &qcfg) {
                total += 1;
                if r.passed() && r.check_id == theorem {
                    ok += 1;
                    worst_theorem = worst_theorem.min(r.margin);
                }
                if let Some(&m) = r.details.get("margin:F_E") {
                    if m >= -qcfg.margin_tol {
                        fe_ok += 1;
                    }
                    worst_fe = worst_fe.min(m);
                }
            }
        }
    }
    Outcome {
        pass: total > 0 && ok == total && fe_ok == total,
        detail: format!(
            "{ok}/{total} competitors pass the full chain, deficit ≥ 2nG in {fe_ok}; min margins: {theorem} {worst_theorem:.3e}, deficit − 2nG {worst_fe:.3e}"
        ),
    }
}

fn holder() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst_rel = f64::INFINITY;
    let mut ok = 0;
    for k in 0..1000 {
        let n = 1 + k % 2;
        let pieces = rng.gen_range(1..=20);
        let mut edges: Vec<f64> = (0..pieces - 1).map(|_| rng.gen_range(0.0..1.0)).collect();
        edges.push(0.0);
        edges.push(1.0);
        edges.sort_by(f64::total_cmp);
        let values: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0.0..2.0)).collect();
        let r = holder_link(&values, &edges, n, 1e-12).expect("valid piecewise data");
        if r.passed() {
            ok += 1;
        }
        if r.rhs > 0.0 {
            worst_rel = worst_rel.min(r.margin / r.rhs);
        }
    }
    Outcome {
        pass: ok == 1000,
        detail: format!("{ok}/1000 random piecewise m satisfy ω²∫m³dz ≥ (∫m dz)³; min relative margin {worst_rel:.3e}"),
    }
}

/// Adaptive Simpson, used only as an oracle.
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

fn geometry_goldens() -> Outcome {
    let vol_golden = 3.0 * PI * PI / 4.0;
    let per_golden = 2.0 * PI * PI;

    // Oracle 1: Simpson on 4π ∫ φ(r) r dr.
    let phi_r = |r: f64| (r.min(1.0)).acos() + r * (1.0 - r * r).max(0.0).sqrt();
    let vol_simpson = 4.0 * PI * simpson(&|r| phi_r(r) * r, 0.0, 1.0, 1e-13);
    // Oracle 2: Monte Carlo in the box [−1, 1]² × [−π/2, π/2].
    let samples = 10_000_000u64;
    let chunks = 100u64;
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(4242 + c);
            let mut h = 0u64;
            for _ in 0..samples / chunks {
                let x: f64 = rng.gen_range(-1.0..1.0);
                let y: f64 = rng.gen_range(-1.0..1.0);
                let t: f64 = rng.gen_range(-PI / 2.0..PI / 2.0);
                let r = x.hypot(y);
                if r < 1.0 && t.abs() < phi_r(r) {
                    h += 1;
                }
            }
            h
        })
        .sum();
    let vol_mc = 4.0 * PI * hits as f64 / samples as f64;
    // Oracle for the perimeter: 2·2π ∫_0^1 2r²/√(1−r²) dr with the
    // antiderivative asin r − r√(1−r²).
    let anti = |r: f64| r.asin() - r * (1.0 - r * r).sqrt();
    let per_closed = 4.0 * PI * (anti(1.0) - anti(0.0));

    let cfg = QuadratureConfig::with_abs_tol(1e-12);
    let vol = pansu_volume(1, &cfg).unwrap_or(f64::NAN);
    let per = pansu_perimeter(1, &cfg).unwrap_or(f64::NAN);
    let oracles_agree = (vol_simpson - vol_golden).abs() < 1e-8
        && ((vol_mc - vol_simpson) / vol_simpson).abs() < 1e-3
        && (per_closed - per_golden).abs() < 1e-12;
    let pass = oracles_agree && (vol - vol_golden).abs() <= 1e-8 && (per - per_golden).abs() <= 1e-8;
    Outcome {
        pass,
        detail: format!(
            "vol(E) = {vol:.12} (3π²/4 err {:.1e}; Simpson {vol_simpson:.10}, Monte Carlo {vol_mc:.5}), P(E) = {per:.12} (2π² err {:.1e})",
            (vol - vol_golden).abs(),
            (per - per_golden).abs()
        ),
    }
}

fn gauss_green_consistency() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for &eps in &[0.0, 0.2] {
        match gauss_green(&ctx(1, eps), 1e-9) {
            Ok(gg) => {
                let rel = gg.relative_mismatch();
                pass &= rel <= 1e-3;
                parts.push(format!("eps {eps}: bulk {:.8} vs boundary {:.8} (rel {rel:.1e})", gg.bulk, gg.boundary()));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("eps {eps}: {e}"));
            }
        }
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn convergence_orders() -> Outcome {
    // f = sin(x1 + y2/2)·e^{0.3t} + x2²·y1 on H².
    let f = ScalarField::new(|p: &Point| (p.x[0] + 0.5 * p.y[1]).sin() * (0.3 * p.t).exp() + p.x[1] * p.x[1] * p.y[0]);
    let grad_exact = |p: &Point| {
        let e = (0.3 * p.t).exp();
        let arg = p.x[0] + 0.5 * p.y[1];
        let (s, c) = arg.sin_cos();
        let ft = 0.3 * s * e;
        let dx = [c * e, 2.0 * p.x[1] * p.y[0]];
        let dy = [p.x[1] * p.x[1], 0.5 * c * e];
        HorizontalVector {
            a: (0..2).map(|j| dx[j] + 2.0 * p.y[j] * ft).collect(),
            b: (0..2).map(|j| dy[j] - 2.0 * p.x[j] * ft).collect(),
        }
    };
    // V = (sin t·x2, cos(x1 y1); e^{0.2t}·y1, x1·t).
    let v = VectorField::new(|p: &Point| HorizontalVector {
        a: vec![p.t.sin() * p.x[1], (p.x[0] * p.y[0]).cos()],
        b: vec![(0.2 * p.t).exp() * p.y[0], p.x[0] * p.t],
    });
    let div_exact = |p: &Point| {
        2.0 * p.y[0] * p.t.cos() * p.x[1] + (0.2 * p.t).exp() * (1.0 - 0.4 * p.x[0] * p.y[0]) - 2.0 * p.x[1] * p.x[0]
    };
    let points = [
        Point::new(vec![0.3, -0.7], vec![0.5, 0.2], 0.4).unwrap(),
        Point::new(vec![-1.1, 0.4], vec![0.9, -0.6], -0.8).unwrap(),
        Point::new(vec![0.05, 1.3], vec![-0.2, 0.75], 1.7).unwrap(),
    ];
    let h = 1e-2;
    let mut ratios = Vec::new();
    for p in &points {
        let g = grad_exact(p);
        let e1 = horizontal_gradient_fd(&f, p, h).unwrap().max_abs_diff(&g);
        let e2 = horizontal_gradient_fd(&f, p, h / 2.0).unwrap().max_abs_diff(&g);
        ratios.push(e1 / e2);
        let d = div_exact(p);
        let e1 = (horizontal_divergence_fd(&v, p, h).unwrap() - d).abs();
        let e2 = (horizontal_divergence_fd(&v, p, h / 2.0).unwrap() - d).abs();
        ratios.push(e1 / e2);
    }
    // The calibration field inside E, against the exact divergence 2n/s.
    for &(n, eps, r, frac) in &[(1usize, 0.0, 0.4, 0.5), (2, 0.3, 0.3, 0.3)] {
        let c = ctx(n, eps);
        let t = c.t_eps() + frac * (phi(r).unwrap() - c.t_eps());
        let p = Point::along(&generic_direction(n), r, t);
        let want = 2.0 * n as f64 / c.solve_u(&p).unwrap().s;
        let x = c.x_field();
        let e1 = (horizontal_divergence_fd(&x, &p, 1e-3).unwrap() - want).abs();
        let e2 = (horizontal_divergence_fd(&x, &p, 5e-4).unwrap() - want).abs();
        ratios.push(e1 / e2);
    }
    let pass = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Outcome { pass, detail: format!("{} error ratios under h → h/2 in [{lo:.3}, {hi:.3}] ⊂ [3.5, 4.5]", ratios.len()) }
}

fn main() -> ExitCode {
    let mut results = Vec::new();
    let secs = Duration::from_secs;
    run(&mut results, "AC1 curvature of leaves equals 1/s", Some(secs(30)), curvature_identity);
    run(&mut results, "AC2 leaf duality", Some(secs(5)), leaf_duality);
    run(&mut results, "AC3 curvature-gap bounds", Some(secs(60)), gap_bounds);
    run(&mut results, "AC4 pop inequality", Some(secs(5)), pop_inequality);
    run(&mut results, "AC5 cubic quantitative inequality (eps = 0)", Some(secs(300)), || competitor_sweep(&[0.0], "TP"));
    run(&mut results, "AC6 quadratic quantitative inequality (eps = 0.1, 0.3)", Some(secs(300)), || {
        competitor_sweep(&[0.1, 0.3], "TP2")
    });
    run(&mut results, "AC7 Hölder step", Some(secs(5)), holder);
    run(&mut results, "AC8 volume and perimeter of E (n = 1)", None, geometry_goldens);
    run(&mut results, "AC9 Gauss–Green consistency", Some(secs(60)), gauss_green_consistency);
    run(&mut results, "AC10 finite-difference convergence orders", None, convergence_orders);
    let passed = results.iter().filter(|p| **p).count();
    println!("{passed}/{} acceptance criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
