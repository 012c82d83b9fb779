//! Acceptance criteria 1–11. Each criterion prints one `PASS`/`FAIL` line to stderr;
//! the test fails if any criterion fails.

use std::io::Write;
use std::time::{Duration, Instant};

use fppvar::averaging::{self, AveragingFunction};
use fppvar::edgedist::{classify_near_gamma, Family, Verdict};
use fppvar::experiments::{fit_scaling, sweep};
use fppvar::fpp::{
    default_y_grid, edge_derivative, passage_time, single_edge_response, target_field, GridSpec, WeightField,
};
use fppvar::gauss::{
    check_commutation, check_hypercontractivity, g_of_ginv, g_of_ginv_asymptote, gauss_cdf, gauss_quantile,
    hypercontractivity_registry, ou_apply, variance_heat_identity, QuadratureRule,
};
use fppvar::phi::phi;
use fppvar::poincare::{
    c_k, c_k_quadrature, default_rule, registry, verify_change_of_variables, verify_chi2_inequality,
    verify_modified_poincare, InequalityReport, Method,
};
use fppvar::{seed, Error};
use num_bigint::BigUint;
use rand::Rng;

const EXP1: Family = Family::Exponential { rate: 1.0 };
const SWEEP_NS: [u32; 4] = [8, 16, 32, 64];
const SWEEP_SAMPLES: usize = 2000;
const SWEEP_SEED: u64 = 20240601;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn phi_endpoints() -> Outcome {
    let (p0, p1) = (phi(0.0).unwrap(), phi(1.0).unwrap());
    ensure(p0.abs() <= 1e-9, || format!("phi(0) = {p0}"))?;
    ensure((p1 - 1.0).abs() <= 1e-9, || format!("phi(1) = {p1}"))?;
    let grid: Vec<f64> = (0..1000).map(|i| phi(i as f64 / 999.0).unwrap()).collect();
    let bad = grid.windows(2).position(|w| w[1] < w[0]);
    ensure(bad.is_none(), || format!("phi decreases at grid index {bad:?}"))?;
    Ok(format!("phi(0) = {p0}, phi(1) = {p1}, monotone on 1000 points"))
}

fn phi_asymptotics() -> Outcome {
    let r6 = phi(1e-6).unwrap() * -(1e-6f64).ln();
    let r12 = phi(1e-12).unwrap() * -(1e-12f64).ln();
    ensure((0.8..=1.1).contains(&r6), || {
        format!("phi(u)(-ln u) = {r6} at u = 1e-6")
    })?;
    ensure((r12 - 1.0).abs() < (r6 - 1.0).abs(), || {
        format!("{r12} at 1e-12 is not closer to 1 than {r6}")
    })?;
    Ok(format!("phi(u)(-ln u) = {r6:.4} at 1e-6, {r12:.4} at 1e-12"))
}

fn gaussian_round_trip() -> Outcome {
    let mut worst: f64 = 0.0;
    let lower = (0..600).map(|i| 10f64.powf(-300.0 + 0.5 * i as f64));
    let upper = (1..=160).map(|i| 1.0 - 10f64.powf(-16.0 * i as f64 / 160.0));
    for p in lower.chain(upper).chain([0.5, 1.0 - 1e-16]) {
        let back = gauss_cdf(gauss_quantile(p).unwrap()).unwrap();
        let rel = (back - p).abs() / p.max(1.0 - p);
        worst = worst.max(rel);
        ensure(rel <= 1e-12, || format!("p = {p:e}: G(G^-1(p)) = {back:e}"))?;
    }
    let ratios: Vec<f64> = [1e-4, 1e-8, 1e-16, 1e-30]
        .iter()
        .map(|&p| g_of_ginv(p).unwrap() / g_of_ginv_asymptote(p))
        .collect();
    ensure(ratios.iter().all(|&r| r <= 1.0), || {
        format!("ratio above 1: {ratios:?}")
    })?;
    ensure(ratios.windows(2).all(|w| w[1] > w[0]), || {
        format!("ratios not increasing: {ratios:?}")
    })?;
    Ok(format!(
        "worst relative round-trip error {worst:.2e}; asymptotic ratios {ratios:.4?}"
    ))
}

fn ou_identities() -> Outcome {
    let rule = QuadratureRule::default();
    for t in [0.0, 0.3, 1.0, 4.0] {
        for y in [-3.0, -0.5, 0.0, 1.5, 6.0] {
            let v = ou_apply(|x| x, t, y, &rule).unwrap();
            let want = (-t).exp() * y;
            ensure((v - want).abs() <= 1e-10, || {
                format!("P_{t}(id)({y}) = {v}, want {want}")
            })?;
        }
    }
    let grid = [-2.0, -1.0, 0.0, 0.5, 2.0];
    let comm = [0.1, 0.5, 2.0]
        .iter()
        .map(|&t| check_commutation(|y| y.powi(3), |y| 3.0 * y * y, t, &rule, &grid).unwrap())
        .fold(0.0, f64::max);
    ensure(comm <= 1e-7, || format!("commutation discrepancy {comm:e}"))?;
    let heat = variance_heat_identity(|y| y * y, |y| 2.0 * y, &rule);
    ensure(heat.discrepancy <= 1e-6, || {
        format!("variance-heat discrepancy {:e}", heat.discrepancy)
    })?;
    let reg = hypercontractivity_registry();
    ensure(reg.len() == 10, || format!("registry has {} functions", reg.len()))?;
    for (name, f) in reg {
        for t in [0.1, 0.5, 2.0] {
            let rep = check_hypercontractivity(f, t, &rule).unwrap();
            ensure(rep.holds, || format!("{name} at t = {t}: {rep:?}"))?;
        }
    }
    Ok(format!(
        "commutation {comm:.1e}, variance-heat {:.1e}, Nelson holds for 10 functions x 3 times",
        heat.discrepancy
    ))
}

fn modified_poincare() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut linear_margin = f64::NAN;
    for f in registry() {
        let rule = default_rule(f.dim()).unwrap();
        let r = verify_modified_poincare(&f, &Method::Quadrature(rule)).unwrap();
        let scaled = r.margin / (1.0 + r.rhs_total);
        worst = worst.min(scaled);
        ensure(r.margin >= -1e-6 * (1.0 + r.rhs_total), || {
            format!("{}: margin {:e}", f.id(), r.margin)
        })?;
        if f.id() == "linear-1d" {
            linear_margin = r.margin;
        }
    }
    ensure(linear_margin.abs() <= 1e-6, || {
        format!("linear-1d margin {linear_margin:e}")
    })?;
    Ok(format!(
        "{} functions, min margin/(1+rhs) {worst:.3e}, linear margin {linear_margin:.1e}",
        registry().len()
    ))
}

fn within_three_se(r: &InequalityReport) -> (bool, f64) {
    let se = r.lhs_stderr.unwrap_or(0.0).hypot(r.rhs_stderr.unwrap_or(0.0));
    (r.margin >= -3.0 * se, r.margin / se)
}

fn chi2_and_change_of_variables() -> Outcome {
    const SAMPLES: usize = 1_000_000;
    let c2 = c_k(2).unwrap();
    let want = 2.0 * 2f64.sqrt() / std::f64::consts::PI;
    ensure((c2 - want).abs() <= 1e-10, || format!("c(2) = {c2}, want {want}"))?;
    for k in 2..=10 {
        let (a, b) = (c_k(k).unwrap(), c_k_quadrature(k).unwrap());
        ensure((a - b).abs() <= 1e-10 * a, || format!("c({k}): {a} vs {b}"))?;
    }
    let one_dim: Vec<_> = registry()
        .into_iter()
        .filter(|f| f.bits() == 0 && f.dim() == 1)
        .collect();
    let mut min_z = f64::INFINITY;
    for (i, f) in one_dim.iter().enumerate() {
        let seed = 1000 + i as u64;
        let chi2 = verify_chi2_inequality(f, 2, 1.0, SAMPLES, seed).unwrap();
        let (ok, z) = within_three_se(&chi2);
        ensure(ok, || {
            format!("chi2 with {}: margin {:e} ({z:.2} SE)", f.id(), chi2.margin)
        })?;
        min_z = min_z.min(z);
        for dist in [Family::Uniform { lo: 0.0, hi: 1.0 }, EXP1] {
            let r = verify_change_of_variables(f, &dist, SAMPLES, seed).unwrap();
            let (ok, z) = within_three_se(&r);
            ensure(ok, || {
                format!("change of variables with {} under {dist}: {z:.2} SE", f.id())
            })?;
            min_z = min_z.min(z);
        }
    }
    Ok(format!(
        "c(2) = {c2}; {} functions, smallest margin {min_z:.1} SE",
        one_dim.len()
    ))
}

fn near_gamma() -> Outcome {
    for spec in ["exp:rate=1", "gamma:shape=2", "beta:a=2,b=3", "uniform:lo=0,hi=1"] {
        let dist: Family = spec.parse().unwrap();
        let r = classify_near_gamma(&dist, 400).unwrap();
        ensure(r.verdict == Verdict::SufficientConditionsPass, || {
            format!("{spec}: {:?}", r.verdict)
        })?;
    }
    let r = classify_near_gamma(&Family::HalfNormal, 400).unwrap();
    ensure(r.sufficient_beta_or_tail_ok == Some(false), || {
        format!("half-normal tail check {:?}", r.sufficient_beta_or_tail_ok)
    })?;
    ensure(r.direct_pass && r.verdict == Verdict::DirectEvidenceOnly, || {
        format!("half-normal: {r:?}")
    })?;
    Ok("four laws pass the sufficient conditions; half-normal fails the tail condition, passes directly".into())
}

fn averaging_function() -> Outcome {
    for m in 2..=4 {
        let r = averaging::verify_averaging_properties(m).unwrap();
        ensure(r.gradient_ok, || {
            format!("m = {m}: a one-bit flip moves g_m by more than 1")
        })?;
        ensure(r.level_ok && r.max_level_prob <= r.level_bound, || {
            format!("m = {m}: level probability {} > {}", r.max_level_prob, r.level_bound)
        })?;
        ensure(r.bijective, || format!("m = {m}: rank is not a bijection"))?;
        let bound = 2.0 * averaging::c1(m) / m as f64;
        ensure((r.level_bound - bound).abs() <= 1e-12 * bound, || {
            format!("m = {m}: bound {} vs {bound}", r.level_bound)
        })?;
    }
    let mut rng = seed::rng(8);
    for m in 1..=8 {
        let g = AveragingFunction::new(m).unwrap();
        for _ in 0..2000 {
            let x: Vec<bool> = (0..g.bits()).map(|_| rng.random()).collect();
            let back = g.unrank(&g.rank(&x).unwrap()).unwrap();
            ensure(back == x, || format!("m = {m}: unrank(rank(x)) != x"))?;
            let r = BigUint::from_bytes_le(&rng.random::<[u8; 8]>()) % g.total() + 1u32;
            let again = g.rank(&g.unrank(&r).unwrap()).unwrap();
            ensure(again == r, || format!("m = {m}: rank(unrank({r})) = {again}"))?;
        }
    }
    Ok("m = 2..4 exhaustive; rank/unrank round trips for m <= 8".into())
}

/// Minimum weight over all simple paths, using only the public edge list.
fn brute_force(field: &WeightField, s: usize, t: usize) -> f64 {
    let grid = field.grid();
    let mut adj = vec![Vec::new(); grid.vertex_count()];
    for e in 0..grid.edge_count() {
        let (a, b) = grid.edge_endpoints(e).unwrap();
        adj[a].push((b, e));
        adj[b].push((a, e));
    }
    fn go(adj: &[Vec<(usize, usize)>], w: &[f64], v: usize, t: usize, acc: f64, seen: &mut [bool], best: &mut f64) {
        if v == t {
            *best = best.min(acc);
            return;
        }
        for &(u, e) in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                go(adj, w, u, t, acc + w[e], seen, best);
                seen[u] = false;
            }
        }
    }
    let mut seen = vec![false; grid.vertex_count()];
    seen[s] = true;
    let mut best = f64::INFINITY;
    go(&adj, field.weights(), s, t, 0.0, &mut seen, &mut best);
    best
}

fn fpp_correctness() -> Outcome {
    let grid = GridSpec::new(vec![0, 0], vec![2, 2]).unwrap();
    let pairs = [([0, 0], [2, 2]), ([0, 0], [2, 1]), ([2, 0], [0, 2]), ([1, 1], [0, 0])];
    for trial in 0..100 {
        let f = WeightField::sample(grid.clone(), &EXP1, seed::derive(901, trial));
        for (u, v) in pairs {
            let d = passage_time(&f, &u, &v).unwrap().distance;
            let b = brute_force(&f, grid.vertex_index(&u).unwrap(), grid.vertex_index(&v).unwrap());
            ensure(d == b, || {
                format!("field {trial}, {u:?} -> {v:?}: Dijkstra {d}, brute force {b}")
            })?;
        }
    }

    let mut rng = seed::rng(902);
    let (mut trials, mut agree, mut ties, mut index) = (0, 0, 0, 0);
    while trials < 100 {
        index += 1;
        let (f, v) = target_field(2, 8, Some(4), &EXP1, seed::derive(903, index)).unwrap();
        let on = passage_time(&f, &[0, 0], &v).unwrap().geodesic_edges;
        let e = if trials % 2 == 0 {
            on[rng.random_range(0..on.len())]
        } else {
            rng.random_range(0..f.grid().edge_count())
        };
        match edge_derivative(&f, &v, e) {
            Ok(d) => {
                trials += 1;
                agree += usize::from(d.fd_agrees);
            }
            Err(Error::GeodesicTie { .. }) => ties += 1,
            Err(other) => return Err(other.to_string()),
        }
    }
    ensure(agree >= 99, || format!("finite differences agree in {agree}/100"))?;

    let mut worst: f64 = 0.0;
    for trial in 0..20 {
        let (f, v) = target_field(2, 10, Some(5), &EXP1, seed::derive(904, trial)).unwrap();
        let on = passage_time(&f, &[0, 0], &v).unwrap().geodesic_edges;
        let e = on[trial as usize % on.len()];
        let ys = default_y_grid(&f, &v, e, 41).unwrap();
        let curve = single_edge_response(&f, &v, e, &ys).unwrap();
        worst = worst.max(curve.max_deviation);
    }
    ensure(worst <= 1e-9, || format!("response deviation {worst:e}"))?;
    Ok(format!(
        "brute force exact on 100 fields; FD {agree}/100 ({ties} ties resampled); response deviation {worst:.1e}"
    ))
}

fn sweep_csv(workers: usize) -> Result<(String, fppvar::experiments::SweepResult, Duration), String> {
    let start = Instant::now();
    let result = sweep(&EXP1, 2, &SWEEP_NS, SWEEP_SAMPLES, SWEEP_SEED, Some(workers)).map_err(|e| e.to_string())?;
    Ok((result.to_csv(), result, start.elapsed()))
}

fn scaling(single: &Result<(String, fppvar::experiments::SweepResult, Duration), String>) -> Outcome {
    let (_, result, elapsed) = single.as_ref().map_err(Clone::clone)?;
    for w in result.rows.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let (va, vb) = (a.var_over_n(), b.var_over_n());
        let se = (a.se_var / a.n as f64).hypot(b.se_var / b.n as f64);
        ensure(vb <= va + 2.0 * se, || {
            format!(
                "var/n rises from {va} (n = {}) to {vb} (n = {}), combined SE {se}",
                a.n, b.n
            )
        })?;
    }
    let fit = fit_scaling(&result.rows).map_err(|e| e.to_string())?;
    let z = (1.0 - fit.slope_loglog) / fit.slope_stderr;
    ensure(z >= 2.0, || {
        format!(
            "slope {} +- {} is only {z:.2} SE below 1",
            fit.slope_loglog, fit.slope_stderr
        )
    })?;
    ensure(*elapsed <= Duration::from_secs(600), || {
        format!("sweep took {elapsed:?}")
    })?;
    let var_n: Vec<f64> = result.rows.iter().map(|r| r.var_over_n()).collect();
    Ok(format!(
        "var/n {var_n:.4?}; slope {:.3} +- {:.3} ({z:.1} SE below 1); {:.1} s on one worker",
        fit.slope_loglog,
        fit.slope_stderr,
        elapsed.as_secs_f64()
    ))
}

fn reproducibility(single: &Result<(String, fppvar::experiments::SweepResult, Duration), String>) -> Outcome {
    let (csv1, _, _) = single.as_ref().map_err(Clone::clone)?;
    let (csv8, _, _) = sweep_csv(8)?;
    ensure(*csv1 == csv8, || "CSV differs between 1 and 8 workers".into())?;
    Ok(format!("{} bytes identical at 1 and 8 workers", csv1.len()))
}

/// Writes to stderr directly so the line is shown even when the test passes.
#[allow(clippy::explicit_write)]
fn report(line: &str) {
    writeln!(std::io::stderr(), "{line}").unwrap();
}

#[test]
fn acceptance_criteria() {
    let single = sweep_csv(1);
    let criteria: Vec<(&str, Outcome)> = vec![
        ("phi endpoints and monotonicity", phi_endpoints()),
        ("phi asymptotics", phi_asymptotics()),
        ("Gaussian round trip", gaussian_round_trip()),
        ("OU identities", ou_identities()),
        ("modified Poincaré inequality", modified_poincare()),
        (
            "chi-square and change-of-variables bounds",
            chi2_and_change_of_variables(),
        ),
        ("nearly-gamma classification", near_gamma()),
        ("averaging function", averaging_function()),
        ("FPP correctness", fpp_correctness()),
        ("scaling experiment", scaling(&single)),
        ("reproducibility", reproducibility(&single)),
    ];
    let mut failed = Vec::new();
    for (i, (name, outcome)) in criteria.iter().enumerate() {
        match outcome {
            Ok(detail) => report(&format!("criterion {:>2} PASS  {name}: {detail}", i + 1)),
            Err(why) => {
                report(&format!("criterion {:>2} FAIL  {name}: {why}", i + 1));
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
