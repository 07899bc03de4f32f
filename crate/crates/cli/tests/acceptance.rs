//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! The convention lock runs first and aborts the run when it fails. Other
//! failures are reported and counted; set `IGABEM_ACCEPTANCE_STRICT=1` to
//! turn any failure into a non-zero exit status.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use common::{max_rel_err, singular_oracle, support_oracle};
use igabem::assembly::*;
use igabem::geometry::{closest_point, unit_sphere, ClosestPoint, Vec3};
use igabem::kernels::{double_layer_entries_r, single_layer_entries_r};
use igabem::quadrature::*;
use igabem::spline::{one_basis, TensorSplineSpace};
use igabem_cli::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    id: u32,
    pass: bool,
}

fn report(out: &mut Vec<Outcome>, id: u32, pass: bool, what: &str, detail: String, start: Instant) {
    println!(
        "{} criterion {id:>2}: {what} [{detail}] ({:.1} s)",
        if pass { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );
    std::io::stdout().flush().ok();
    out.push(Outcome { id, pass });
}

fn both_layers(_: &Vec3, r: &Vec3, n: &Vec3) -> [f64; 18] {
    let mut out = [0.0; 18];
    out[..9].copy_from_slice(&single_layer_entries_r(r));
    out[9..].copy_from_slice(&double_layer_entries_r(r, n));
    out
}

/// Least-squares slope of `log2 e` against the refinement level.
fn level_slope(e: &[f64]) -> f64 {
    let m = e.len() as f64;
    let mx = (m - 1.0) / 2.0;
    let my = e.iter().map(|v| v.log2()).sum::<f64>() / m;
    let sxy: f64 = e.iter().enumerate().map(|(k, v)| (k as f64 - mx) * (v.log2() - my)).sum();
    let sxx: f64 = (0..e.len()).map(|k| (k as f64 - mx).powi(2)).sum();
    -sxy / sxx
}

fn sci(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = v.iter().cloned().fold(0.0, f64::max);
    if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Jump relation of a constant datum and the double-layer constant on the
/// d=0, 8×8 sphere.
fn convention_lock() -> Result<String, String> {
    if (C_DL - 3.0 / (2.0 * PI)).abs() > 0.0 {
        return Err(format!("C_DL = {C_DL}"));
    }
    let cfg = RunConfig { degree: 0, ..Default::default() };
    let (disc, colloc, rule) = setup(&cfg, 8).map_err(|e| e.to_string())?;
    let u0 = Vec3::new(0.3, -1.0, 0.6);
    let (d, _) = assemble_double_layer_vector(&disc, &colloc, &rule, &|_| u0).map_err(|e| e.to_string())?;
    let mut jump: f64 = 0.0;
    for i in 0..colloc.len() {
        let di = Vec3::new(d[3 * i], d[3 * i + 1], d[3 * i + 2]);
        jump = jump.max((di + u0).norm() / u0.norm());
    }
    let rep = verify_identities(&disc, &colloc, &rule, None).map_err(|e| e.to_string())?;
    let detail = format!("max |D[u0] + u0|/|u0| = {jump:.2e}, e_sl = {:.2e}, e_dl = {:.2e}", rep.e_sl, rep.e_dl);
    if jump < 1e-6 && rep.e_dl < 1e-6 && rep.e_sl < 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dct_suite() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_end: f64 = 0.0;
    let mut worst_hit: f64 = 0.0;
    let mut worst_telles: f64 = 0.0;
    let mut worst_id: f64 = 0.0;
    let mut monotone = true;
    for _ in 0..10_000 {
        let y = rng.random_range(-1.0..=1.0);
        let alpha = rng.random_range(0.0..=1.0);
        let q = DctMap::new(y, alpha).unwrap();
        worst_end = worst_end.max((q.eval(-1.0) + 1.0).abs()).max((q.eval(1.0) - 1.0).abs());
        worst_hit = worst_hit.max((q.eval(q.s_alpha) - y).abs());
        let mut prev = q.eval(-1.0);
        for k in 1..1000 {
            let v = q.eval(-1.0 + 2.0 * k as f64 / 999.0);
            monotone &= v >= prev - 1e-15;
            prev = v;
        }
        let t = DctMap::new(y, 0.0).unwrap();
        let s = t.s_alpha;
        worst_telles = worst_telles.max((t.eval(s) - y).abs()).max(t.derivative(s).abs()).max(t.second_derivative(s).abs());
        let id = DctMap::new(y, 1.0).unwrap();
        let s = rng.random_range(-1.0..=1.0);
        worst_id = worst_id.max((id.eval(s) - s).abs()).max((id.derivative(s) - 1.0).abs());
    }
    let pass = worst_end <= 1e-12 && worst_hit <= 1e-12 && monotone && worst_telles <= 1e-12 && worst_id <= 1e-12;
    (
        pass,
        format!(
            "ends {worst_end:.1e}, q(s_a)-y {worst_hit:.1e}, monotone {monotone}, Telles {worst_telles:.1e}, identity {worst_id:.1e}"
        ),
    )
}

/// Exact integral of `p(s) B(x(s))` over one direction: Gauss–Legendre on
/// every polynomial piece of the product spline.
fn piecewise_reference(rule: &DirectionRule, local: &[f64], p: &dyn Fn(f64) -> f64) -> f64 {
    let (x, w) = gauss_legendre(60);
    let mut acc = 0.0;
    for win in rule.space.knots().breakpoints().windows(2) {
        let (a, b) = (win[0].0, win[1].0);
        for (xi, wi) in x.iter().zip(&w) {
            let s = 0.5 * (a + b) + 0.5 * (b - a) * xi;
            let t = rule.param(s);
            acc += 0.5 * (b - a) * wi * p(s) * one_basis(local, t, t < rule.interval.1);
        }
    }
    acc
}

fn chebyshev(k: usize, x: f64) -> f64 {
    (k as f64 * x.clamp(-1.0, 1.0).acos()).cos()
}

/// Random tensor polynomials `Σ a_kl T_k(s) T_l(t)` of the full bi-degree of
/// the rule, integrated with the tensor node weights.
fn exactness_suite() -> (bool, String) {
    let s = unit_sphere().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let mut max_c = (0, 0);
    for (d, n) in [(0, 8), (1, 8), (2, 10), (3, 6)] {
        let space = TensorSplineSpace::uniform(d, n).unwrap();
        let h = space.mesh_size();
        let policy = NodePolicy::new([d, d], [h, h], 30).unwrap();
        let alpha_rule = AlphaRule::new(8.0, s.diameter).unwrap();
        for _ in 0..25 {
            let sup = space.support(rng.random_range(0..6), rng.random_range(0..space.dim()));
            let alpha = rng.random_range(0.0..1.0f64);
            let g = alpha_rule.gamma;
            let cp = ClosestPoint {
                uv: (rng.random_range(sup.rect.u0..sup.rect.u1), rng.random_range(sup.rect.v0..sup.rect.v1)),
                x: Vec3::zeros(),
                delta: s.diameter * (1.0 - (1.0 - alpha.powf(g)).powf(1.0 / g)),
            };
            let (rules, _) = region_rules(&sup, sup.rect, &cp, &alpha_rule, &policy).unwrap();
            let (cu, cv) = (rules[0].cheb.len(), rules[1].cheb.len());
            max_c = (max_c.0.max(cu - 1), max_c.1.max(cv - 1));
            let a: Vec<f64> = (0..cu * cv).map(|_| rng.random_range(-1.0..1.0)).collect();
            let wu = rules[0].node_weights(&sup.local_u).unwrap();
            let wv = rules[1].node_weights(&sup.local_v).unwrap();
            let mut got = 0.0;
            let mut scale = 0.0;
            for (yv, wj) in rules[1].cheb.nodes.iter().zip(&wv) {
                for (xu, wi) in rules[0].cheb.nodes.iter().zip(&wu) {
                    let mut p = 0.0;
                    for l in 0..cv {
                        let tl = chebyshev(l, *yv);
                        for k in 0..cu {
                            p += a[l * cu + k] * chebyshev(k, *xu) * tl;
                        }
                    }
                    got += p * wi * wj;
                    scale += (p * wi * wj).abs();
                }
            }
            let iu: Vec<f64> =
                (0..cu).map(|k| piecewise_reference(&rules[0], &sup.local_u, &|x| chebyshev(k, x))).collect();
            let iv: Vec<f64> =
                (0..cv).map(|l| piecewise_reference(&rules[1], &sup.local_v, &|x| chebyshev(l, x))).collect();
            let mut want = 0.0;
            for l in 0..cv {
                for k in 0..cu {
                    want += a[l * cu + k] * iu[k] * iv[l];
                }
            }
            // cancellation among the node terms bounds the attainable accuracy
            worst = worst.max((got - want).abs() / scale);
            cases += 1;
        }
    }
    (worst <= 1e-11, format!("{cases} cases, bi-degree up to {max_c:?}, worst relative {worst:.2e}"))
}

/// Non-singular pairs against adaptive Gauss and singular pairs under Duffy
/// refinement, d=2 on the 10×10 sphere.
fn oracle_suite() -> (bool, String) {
    let s = unit_sphere().unwrap();
    let cfg = RunConfig::default();
    let disc = Discretization::uniform(s.clone(), cfg.degree, 10).unwrap();
    let rule = disc.rule(cfg.gamma, cfg.alpha_extra_max).unwrap();
    let space = &disc.spaces[0];
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sl = |x: &Vec3, r: &Vec3, n: &Vec3| {
        let mut out = [0.0; 9];
        out.copy_from_slice(&both_layers(x, r, n)[..9]);
        out
    };
    let mut worst_ns: f64 = 0.0;
    let mut done = 0;
    while done < 100 {
        let sup = space.support(rng.random_range(0..6), rng.random_range(0..space.dim()));
        let patch = rng.random_range(0..6);
        let y = s.point(patch, rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
        let cp = closest_point(&s.patches[sup.patch], sup.rect, &y, None);
        if cp.delta < 0.05 * s.diameter {
            continue;
        }
        let got = integrate_support(&s, &sup, &Target { x: y, param: None }, &sl, &rule, None, &mut QuadStats::default())
            .unwrap();
        let want = support_oracle(&s, &sup, &y, &sl, 1e-13);
        let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in got.iter().zip(&want) {
            worst_ns = worst_ns.max((a - b).abs() / scale);
        }
        done += 1;
    }
    let mut worst_sg: f64 = 0.0;
    let mut worst_ref: f64 = 0.0;
    for _ in 0..20 {
        let patch = rng.random_range(0..6);
        let sup = space.support(patch, rng.random_range(0..space.dim()));
        let uv = (rng.random_range(sup.rect.u0..=sup.rect.u1), rng.random_range(sup.rect.v0..=sup.rect.v1));
        let y = s.point(patch, uv.0, uv.1);
        let t = Target { x: y, param: Some((patch, uv)) };
        let a = integrate_support(&s, &sup, &t, &both_layers, &rule, None, &mut QuadStats::default()).unwrap();
        let b = integrate_support(&s, &sup, &t, &both_layers, &rule.with_duffy_factor(2), None, &mut QuadStats::default())
            .unwrap();
        worst_sg = worst_sg.max(max_rel_err(&a[..9], &b[..9])).max(max_rel_err(&a[9..], &b[9..]));
        // not part of the criterion: distance to a graded reference
        let r = singular_oracle(&s, &sup, uv, &y, &both_layers, 1e-12);
        worst_ref = worst_ref.max(max_rel_err(&a[..9], &r[..9])).max(max_rel_err(&a[9..], &r[9..]));
    }
    (
        worst_ns <= 1e-7 && worst_sg < 1e-6,
        format!(
            "non-singular worst {worst_ns:.2e} (100 pairs), Duffy doubling worst {worst_sg:.2e} (20 pairs), graded reference {worst_ref:.2e}"
        ),
    )
}

fn main() {
    let strict = std::env::var("IGABEM_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let mut out = Vec::new();

    let t = Instant::now();
    match convention_lock() {
        Ok(detail) => report(&mut out, 10, true, "convention lock (jump relation, C_DL = 3/(2π))", detail, t),
        Err(detail) => {
            report(&mut out, 10, false, "convention lock (jump relation, C_DL = 3/(2π))", detail, t);
            println!("convention lock failed, remaining criteria not run");
            std::process::exit(1);
        }
    }

    let t = Instant::now();
    let (pass, detail) = dct_suite();
    report(&mut out, 8, pass, "DCT invariants on 10^4 random (y, α)", detail, t);

    let t = Instant::now();
    let (pass, detail) = exactness_suite();
    report(&mut out, 9, pass, "tensor polynomial exactness ≤ 1e-11", detail, t);

    let t = Instant::now();
    let (pass, detail) = oracle_suite();
    report(&mut out, 7, pass, "quadrature oracles (1e-7 non-singular, 1e-6 Duffy doubling)", detail, t);

    let levels = vec![4, 8, 16, 32];
    let mut slopes = Vec::new();
    for d in 0..=3 {
        let t = Instant::now();
        let cfg = RunConfig { degree: d, meshes: levels.clone(), ..Default::default() };
        let rows = identity_series(&cfg).expect("identity sweep");
        let sl: Vec<f64> = rows.iter().map(|r| r.e_sl).collect();
        let dl: Vec<f64> = rows.iter().map(|r| r.e_dl).collect();
        println!("  d={d}: e_sl {} e_dl {} ({:.1} s)", sci(&sl), sci(&dl), t.elapsed().as_secs_f64());
        if d == 0 {
            let pass = strictly_decreasing(&sl)
                && strictly_decreasing(&dl)
                && sl[3] <= sl[0] / 20.0
                && dl[3] <= dl[0] / 20.0;
            let detail = format!("e_sl {}, e_dl {}", sci(&sl), sci(&dl));
            report(&mut out, 1, pass, "identities at d=0 decrease, factor 20 from ℓ=2 to ℓ=5", detail, t);
        }
        slopes.push((level_slope(&sl), level_slope(&dl)));
    }
    let t = Instant::now();
    let sl: Vec<f64> = slopes.iter().map(|s| s.0).collect();
    let dl: Vec<f64> = slopes.iter().map(|s| s.1).collect();
    let pass = spread(&sl) <= 2.0 && spread(&dl) <= 2.0;
    let detail = format!(
        "log2 slopes per level d=0..3: e_sl {sl:.2?} (ratio {:.2}), e_dl {dl:.2?} (ratio {:.2})",
        spread(&sl),
        spread(&dl)
    );
    report(&mut out, 2, pass, "identity decay slopes agree within a factor 2", detail, t);

    let meshes = vec![4, 6, 8, 10];
    let mut benches = Vec::new();
    for geometry in [Geometry::Sphere, Geometry::DEFAULT_SPHEROID] {
        let cfg = RunConfig { geometry, meshes: meshes.clone(), ..Default::default() };
        let bench = Benchmark::for_config(&cfg).unwrap();
        let t = Instant::now();
        let rows: Vec<BenchRow> = meshes
            .iter()
            .map(|&m| {
                let row = bench_row(&cfg, &bench, m).expect("benchmark solve");
                println!("  {geometry:?} mesh {m}: dof {} e_L2 {:.3e} ({:.1} s)", row.dof, row.e_l2, row.seconds);
                row
            })
            .collect();
        benches.push((bench, rows, t));
    }

    let (sphere, rows, t) = &benches[0];
    let dofs: Vec<usize> = rows.iter().map(|r| r.dof).collect();
    let errs: Vec<f64> = rows.iter().map(|r| r.e_l2).collect();
    let rate = rate_of(rows).unwrap();
    let pass = dofs == [216, 384, 600, 864] && strictly_decreasing(&errs) && rate >= 2.0;
    let detail = format!("dof {dofs:?}, e_L2 {}, rate {rate:.3}", sci(&errs));
    report(&mut out, 3, pass, "rotating sphere: rate ≥ 2.0, e_L2 decreasing", detail, *t);

    let (spheroid, rows2, t2) = &benches[1];
    let errs: Vec<f64> = rows2.iter().map(|r| r.e_l2).collect();
    let rate = rate_of(rows2).unwrap();
    let detail = format!("e_L2 {}, rate {rate:.3}", sci(&errs));
    report(&mut out, 4, rate >= 2.5, "rising spheroid: rate ≥ 2.5", detail, *t2);

    let t = Instant::now();
    let (_, torque) = sphere.functionals();
    let (force, _) = spheroid.functionals();
    let got_t = rows.last().unwrap().torque;
    let got_f = rows2.last().unwrap().force;
    let et = (got_t - torque).norm() / torque.norm();
    let ef = (got_f - force).norm() / force.norm();
    let detail = format!(
        "torque ({:.4}, {:.4}, {:.4}) rel {et:.2e}, force ({:.4}, {:.4}, {:.4}) vs F3 = {:.4} rel {ef:.2e}",
        got_t.x,
        got_t.y,
        got_t.z,
        got_f.x,
        got_f.y,
        got_f.z,
        force.z
    );
    report(&mut out, 5, et <= 0.01 && ef <= 0.01, "net torque and force within 1% at n=5", detail, t);

    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, rows) in [("sphere", rows), ("spheroid", rows2)] {
        let stats = &rows.last().unwrap().stats;
        let share = minimal_share(stats);
        let mono = histogram_non_increasing(stats);
        pass &= share >= 0.6 && mono;
        let hist: Vec<String> = stats.histogram.iter().map(|(k, v)| format!("{k}:{v}")).collect();
        parts.push(format!("{name} minimal share {:.1}%, non-increasing {mono}, histogram {}", 100.0 * share, hist.join(" ")));
    }
    report(&mut out, 6, pass, "node histogram at n=5", parts.join("; "), t);

    out.sort_by_key(|o| o.id);
    let failed: Vec<u32> = out.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    println!("{} of {} criteria passed; failed: {failed:?}", out.len() - failed.len(), out.len());
    if strict && !failed.is_empty() {
        std::process::exit(1);
    }
}
