//! Acceptance gate: runs every criterion and prints one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the summary is always visible; the
//! process exits nonzero if any criterion fails.

use std::f64::consts::SQRT_2;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use cplsh::analysis::{
    cp_collision_probability, default_cp_dims, default_parts_grid, delta, delta_tail_bound, delta_tail_mc,
    lambda, lambda_concavity_check, mc_collision_probability, phi_c, sigma, uniform_mu_grid, CollisionFamily,
    PairGeometry, RotationModel,
};
use cplsh::bench::{
    cross_polytope_curve, lower_bound_curve, run_grid, BenchOptions, BenchReport, GridSpec, Objective, TablesRule,
    Workload,
};
use cplsh::data_io::{generate_random_instance, Instance};
use cplsh::multiprobe::probe_scores;
use cplsh::rotations::fht;
use cplsh::{probe_sequence, Dataset, FeatureHashMap, LshIndex, PointRef, ProbeCandidate, SparseVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;

const TRIALS: u64 = 1_000_000;
const TABLES: usize = 10;
const RECALL: f64 = 0.9;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gaussian_cp(cp_dim: usize) -> CollisionFamily {
    CollisionFamily::CrossPolytope {
        cp_dim,
        rotation: RotationModel::Gaussian,
        collapse_signs: false,
    }
}

fn collision_quadrature_vs_simulation() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut seed = 100;
    for d in [16usize, 64, 128] {
        for tau in [0.5, SQRT_2 / 2.0, 1.0] {
            seed += 1;
            let exact = cp_collision_probability(d as u64, tau).map_err(|e| e.to_string())?;
            let mc = mc_collision_probability(&gaussian_cp(d), PairGeometry::AtDistance(tau), TRIALS, seed)
                .map_err(|e| e.to_string())?;
            let z = (mc.estimate - exact) / mc.std_error;
            worst = worst.max(z.abs());
            if z.abs() > 3.0 {
                failures.push(format!("d′={d} τ={tau:.4}: {exact:.6} vs {:.6} (z={z:.2})", mc.estimate));
            }
        }
    }
    check(failures.is_empty(), format!("max |z| = {worst:.2} over 9 points {}", failures.join("; ")))
}

fn theorem_scaling() -> Outcome {
    let tau = SQRT_2 / 2.0;
    let mut ratios = Vec::new();
    for j in (4..=14).step_by(2) {
        let d = 1u64 << j;
        let p = cp_collision_probability(d, tau).map_err(|e| e.to_string())?;
        let ln_d = (d as f64).ln();
        let residual = -p.ln() - ln_d / 7.0;
        if !(residual > 0.0) {
            return Err(format!("residual {residual} at d′ = 2^{j} is not positive"));
        }
        ratios.push(residual / ln_d.ln());
    }
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
    check(hi / lo < 3.0, format!("residual/ln ln d′ ∈ [{lo:.3}, {hi:.3}], spread {:.2}", hi / lo))
}

fn pseudo_rotation_equivalence() -> Outcome {
    let tau = SQRT_2 / 2.0;
    let pair = PairGeometry::AtDistance(tau);
    let pseudo = |stages| CollisionFamily::CrossPolytope {
        cp_dim: 128,
        rotation: RotationModel::Pseudo { dim: 128, stages },
        collapse_signs: false,
    };
    let err = |e: cplsh::Error| e.to_string();
    let g = mc_collision_probability(&gaussian_cp(128), pair, TRIALS, 11).map_err(err)?;
    let p3 = mc_collision_probability(&pseudo(3), pair, TRIALS, 12).map_err(err)?;
    let p2 = mc_collision_probability(&pseudo(2), pair, TRIALS, 13).map_err(err)?;
    let z3 = (p3.estimate - g.estimate) / p3.combined_std_error(&g);
    let z2 = (p2.estimate - g.estimate) / p2.combined_std_error(&g);
    let mut detail = format!(
        "gaussian {:.5}, 3-stage {:.5} (z={z3:.2}), 2-stage {:.5} (z={z2:.1})",
        g.estimate, p3.estimate, p2.estimate
    );
    if z2.abs() <= 3.0 {
        detail.push_str(" [warning: 2-stage not distinguishable]");
    }
    check(z3.abs() <= 3.0, detail)
}

struct Setup {
    instance: Instance,
    points: Arc<Dataset>,
}

fn setup() -> &'static Setup {
    static SETUP: OnceLock<Setup> = OnceLock::new();
    SETUP.get_or_init(|| {
        let instance = generate_random_instance(1 << 16, 128, SQRT_2 / 2.0, 1000, 2024).expect("instance");
        let points = Arc::new(instance.points.clone());
        Setup { instance, points }
    })
}

fn tune(grid: &GridSpec) -> BenchReport {
    let s = setup();
    let work = Workload {
        queries: &s.instance.queries,
        ground_truth: &s.instance.ground_truth,
    };
    // Candidate counts are deterministic; timings would depend on the machine.
    let opts = BenchOptions {
        recall_target: RECALL,
        objective: Objective::Candidates,
        timing_passes: 0,
        parallel: false,
    };
    run_grid(s.points.clone(), &work, grid, &opts).expect("grid search")
}

fn cp_report() -> &'static BenchReport {
    static REPORT: OnceLock<BenchReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        let mut grid = GridSpec::default_cross_polytope(128, TablesRule::Fixed(TABLES), 7);
        grid.k_values = vec![1, 2, 3];
        tune(&grid)
    })
}

fn hp_report() -> &'static BenchReport {
    static REPORT: OnceLock<BenchReport> = OnceLock::new();
    REPORT.get_or_init(|| tune(&GridSpec::default_hyperplane(TablesRule::Fixed(TABLES), 7)))
}

/// Fewest mean candidates among rows with `k` hashes passing `filter` that
/// reach the recall target.
fn tuned(report: &BenchReport, k: usize, filter: impl Fn(usize) -> bool) -> Option<&cplsh::bench::BenchRow> {
    report
        .rows
        .iter()
        .filter(|r| r.config.hashes_per_table == k && filter(r.probes) && r.recall >= RECALL)
        .min_by(|a, b| a.mean_candidates.total_cmp(&b.mean_candidates))
}

fn describe(r: &cplsh::bench::BenchRow) -> String {
    format!(
        "k={} d′={:?} m={} recall={:.3} candidates={:.1}",
        r.config.hashes_per_table, r.config.last_cp_dim, r.probes, r.recall, r.mean_candidates
    )
}

fn multiprobe_reduction() -> Outcome {
    let cp = cp_report();
    let single = tuned(cp, 1, |m| m == TABLES).ok_or("no single-probe config reaches the target")?;
    let multi = tuned(cp, 3, |_| true).ok_or("no k = 3 multiprobe config reaches the target")?;
    let ratio = single.mean_candidates / multi.mean_candidates;
    check(
        ratio >= 10.0,
        format!("single [{}] / multi [{}] = {ratio:.1}×", describe(single), describe(multi)),
    )
}

fn cp_beats_hyperplane() -> Outcome {
    let cp = cp_report().best_row().ok_or("no cross-polytope config reaches the target")?;
    let hp = hp_report().best_row().ok_or("no hyperplane config reaches the target")?;
    check(
        cp.mean_candidates <= hp.mean_candidates,
        format!(
            "cross-polytope [{}] vs hyperplane [{}], ratio {:.1}×",
            describe(cp),
            describe(hp),
            hp.mean_candidates / cp.mean_candidates
        ),
    )
}

fn tradeoff_curves() -> Outcome {
    let r1 = SQRT_2 / 2.0;
    let parts = default_parts_grid();
    let dims = default_cp_dims();
    let (lb, lb_err) = lower_bound_curve(r1, &parts);
    let (cp, cp_err) = cross_polytope_curve(r1, &dims);
    if !lb_err.is_empty() || !cp_err.is_empty() {
        return Err(format!("numeric failures: {lb_err:?} {cp_err:?}"));
    }
    let mut problems = Vec::new();
    let non_increasing = |c: &[cplsh::bench::CurveRow]| c.windows(2).all(|w| w[1].rho <= w[0].rho + 1e-12);
    if !non_increasing(&lb) {
        problems.push("lower bound not monotone".to_string());
    }
    if !non_increasing(&cp) {
        problems.push("cross-polytope curve not monotone".to_string());
    }
    if let Some(r) = lb.iter().find(|r| r.rho < 1.0 / 7.0) {
        problems.push(format!("lower bound {} < 1/7 at T = {}", r.rho, r.num_parts));
    }
    let at_1e5 = lb.iter().find(|r| r.num_parts == 1e5).map(|r| r.rho).unwrap_or(f64::NAN);
    if !(at_1e5 > 0.19) {
        problems.push(format!("lower bound at T = 1e5 is {at_1e5}"));
    }
    let mut max_gap: f64 = 0.0;
    for c in &cp {
        let l = lb
            .iter()
            .find(|r| r.num_parts == c.num_parts)
            .ok_or(format!("T = {} missing from the lower-bound grid", c.num_parts))?;
        // T = 2 is the hyperplane, where both curves coincide
        if c.rho < l.rho - 1e-9 {
            problems.push(format!("cross-polytope below bound at T = {}", c.num_parts));
        }
        max_gap = max_gap.max(c.rho - l.rho);
    }
    if max_gap > 0.1 {
        problems.push(format!("gap {max_gap} exceeds 0.1"));
    }
    check(
        problems.is_empty(),
        format!("LB(1e5) = {at_1e5:.4}, max gap {max_gap:.4} {}", problems.join("; ")),
    )
}

fn lambda_properties() -> Outcome {
    let err = |e: cplsh::Error| e.to_string();
    let mut worst: f64 = 0.0;
    for i in 0..=40 {
        let eta = -4.0 + 0.25 * i as f64;
        worst = worst.max((lambda(0.0, eta).map_err(err)? - 1.0).abs());
        worst = worst.max((lambda(SQRT_2, eta).map_err(err)? - phi_c(eta)).abs());
    }
    let orthant = lambda(SQRT_2 / 2.0, 0.0).map_err(err)?;
    let mut concave = Vec::new();
    for tau in [0.5, SQRT_2 / 2.0, 1.0] {
        let report = lambda_concavity_check(tau, &uniform_mu_grid(50)).map_err(err)?;
        concave.push(report.concave && report.values_in_range);
    }
    check(
        worst <= 1e-8 && (orthant - 0.76996).abs() <= 1e-4 && concave.iter().all(|&c| c),
        format!("endpoint error {worst:.1e}, Λ(√2/2, 0) = {orthant:.6}, concave {concave:?}"),
    )
}

fn sandwich_bounds() -> Outcome {
    let mut violations = Vec::new();
    let mut checked = 0;
    for tau in [0.5, SQRT_2 / 2.0, 1.0, 1.5] {
        for i in 0..=20 {
            for j in 0..=20 {
                let (u, v) = (0.2 * i as f64, -2.0 + 0.3 * j as f64);
                let dl = delta(u, v, tau);
                if dl < 0.0 {
                    continue;
                }
                let s = sigma(u, v, tau).map_err(|e| e.to_string())?;
                checked += 1;
                if 1.0 - (-dl * dl / 2.0).exp() > s + 1e-9 {
                    violations.push(format!("τ={tau} u={u} v={v}"));
                }
            }
        }
    }
    let tau = SQRT_2 / 2.0;
    let mut tails = Vec::new();
    for (k, t) in [0.5, 1.0, 1.5, 2.0].into_iter().enumerate() {
        let mc = delta_tail_mc(tau, t, TRIALS, 40 + k as u64);
        let bound = delta_tail_bound(tau, t);
        if mc.estimate > bound + 3.0 * mc.std_error {
            violations.push(format!("tail at t={t}: {} > {bound}", mc.estimate));
        }
        tails.push(format!("{:.4}≤{bound:.4}", mc.estimate));
    }
    check(
        violations.is_empty(),
        format!("{checked} grid points, tails {} {}", tails.join(" "), violations.join("; ")),
    )
}

fn naive_hadamard(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if (i & j).count_ones() % 2 == 0 { x[j] } else { -x[j] })
                .sum::<f64>()
                * scale
        })
        .collect()
}

fn fast_hadamard() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for j in 0..=10 {
        let n = 1usize << j;
        for _ in 0..3 {
            let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
            let mut y = x.clone();
            fht(&mut y).map_err(|e| e.to_string())?;
            let reference = naive_hadamard(&x);
            worst = y.iter().zip(&reference).fold(worst, |w, (a, b)| w.max((a - b).abs()));
        }
    }
    let mut worst_norm: f64 = 0.0;
    for i in 0..1000 {
        let n = 1usize << (1 + i % 10);
        let x: Vec<f32> = (0..n).map(|_| rng.sample::<f32, _>(StandardNormal)).collect();
        let before = x.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt();
        let mut y = x;
        fht(&mut y).map_err(|e| e.to_string())?;
        let after = y.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt();
        worst_norm = worst_norm.max((after / before - 1.0).abs());
    }
    check(
        worst <= 1e-6 && worst_norm <= 1e-5,
        format!("max deviation from matrix product {worst:.1e}, max relative norm change {worst_norm:.1e}"),
    )
}

fn feature_hashing() -> Outcome {
    let dim = 10_000;
    let sv = |e: Vec<(u32, f32)>| SparseVector::new(dim, e).map_err(|e| e.to_string());
    let pairs = [
        (sv(vec![(3, 1.0), (17, -2.0), (400, 0.5)])?, sv(vec![(3, 2.0), (17, 1.0), (9000, 3.0)])?),
        (sv(vec![(0, 1.0), (1, 1.0), (2, 1.0), (3, 1.0)])?, sv(vec![(0, 1.0), (1, -1.0), (5, 2.0)])?),
        (sv(vec![(42, 1.0)])?, sv(vec![(43, 1.0)])?),
    ];
    let maps = 10_000u64;
    let mut detail = Vec::new();
    let mut ok = true;
    for (p, (x, y)) in pairs.iter().enumerate() {
        let exact: f64 = x
            .iter()
            .map(|(i, a)| y.iter().find(|&(j, _)| j == i).map_or(0.0, |(_, b)| a as f64 * b as f64))
            .sum();
        let (mut sum, mut sq) = (0.0, 0.0);
        for s in 0..maps {
            let map = FeatureHashMap::from_seed(dim, 512, 77, s + 1000 * p as u64).map_err(|e| e.to_string())?;
            let (fx, fy) = (map.apply(x).unwrap(), map.apply(y).unwrap());
            let ip: f64 = fx.iter().zip(&fy).map(|(&a, &b)| a as f64 * b as f64).sum();
            sum += ip;
            sq += ip * ip;
        }
        let mean = sum / maps as f64;
        let se = ((sq / maps as f64 - mean * mean).max(0.0) / maps as f64).sqrt();
        // a zero variance means the estimate is exact for every map
        let pass = (mean - exact).abs() <= 3.0 * se || (mean - exact).abs() < 1e-9;
        ok &= pass;
        detail.push(format!("{mean:.4}≈{exact}±{se:.4}"));
    }
    // every column maps a basis vector to exactly one ±1
    let map = FeatureHashMap::from_seed(dim, 512, 5, 0).map_err(|e| e.to_string())?;
    let mut bad_columns = 0;
    for j in 0..dim {
        let col = map.apply(&sv(vec![(j as u32, 1.0)])?).unwrap();
        let nonzero: Vec<f32> = col.iter().copied().filter(|&v| v != 0.0).collect();
        if nonzero.len() != 1 || nonzero[0].abs() != 1.0 {
            bad_columns += 1;
        }
    }
    check(
        ok && bad_columns == 0,
        format!("{} ; {bad_columns} malformed columns of {dim}", detail.join(" ")),
    )
}

/// Every probe of the space, scored independently and sorted by
/// `(total score, table, values)`.
fn brute_probes(ys: &[Vec<Vec<f32>>], cp_dim: usize, collapse: bool) -> Vec<ProbeCandidate> {
    let codebook = |y: &[f32]| -> Vec<(u64, f64)> {
        let m = y[..cp_dim].iter().map(|&v| (v as f64).abs()).fold(0.0, f64::max);
        let mut out = Vec::new();
        for (j, &v) in y[..cp_dim].iter().enumerate() {
            let v = v as f64;
            if collapse {
                out.push((j as u64, (m - v.abs()) * (m - v.abs())));
            } else {
                out.push((2 * j as u64, (m - v) * (m - v)));
                out.push((2 * j as u64 + 1, (m + v) * (m + v)));
            }
        }
        out
    };
    let mut all = Vec::new();
    for (table, hashes) in ys.iter().enumerate() {
        let books: Vec<Vec<(u64, f64)>> = hashes.iter().map(|y| codebook(y)).collect();
        let mut idx = vec![0usize; books.len()];
        loop {
            let mut total = 0.0;
            let mut values = Vec::new();
            for (b, &i) in books.iter().zip(&idx) {
                values.push(b[i].0);
                total += b[i].1;
            }
            all.push(ProbeCandidate {
                table,
                probe_values: values,
                total_score: total,
            });
            // odometer step, last position fastest
            let Some(pos) = (0..books.len()).rev().find(|&p| idx[p] + 1 < books[p].len()) else {
                break;
            };
            idx[pos] += 1;
            idx[pos + 1..].fill(0);
        }
    }
    all.sort_by(|a, b| {
        a.total_score
            .total_cmp(&b.total_score)
            .then(a.table.cmp(&b.table))
            .then_with(|| a.probe_values.cmp(&b.probe_values))
    });
    all
}

fn multiprobe_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut cases = 0;
    for cp_dim in 1..=8usize {
        for k in 1..=3usize {
            for l in 1..=4usize {
                for input in 0..100 {
                    let collapse = input % 2 == 1;
                    // half the inputs are coarsely quantized to force score ties
                    let draw = |rng: &mut ChaCha8Rng| -> f32 {
                        if input % 4 < 2 {
                            rng.sample(StandardNormal)
                        } else {
                            rng.random_range(-2i32..=2) as f32 * 0.5
                        }
                    };
                    let ys: Vec<Vec<Vec<f32>>> = (0..l)
                        .map(|_| (0..k).map(|_| (0..cp_dim).map(|_| draw(&mut rng)).collect()).collect())
                        .collect();
                    let lists = ys
                        .iter()
                        .map(|t| t.iter().map(|y| probe_scores(y, cp_dim, collapse)).collect())
                        .collect::<cplsh::Result<Vec<Vec<_>>>>()
                        .map_err(|e| e.to_string())?;
                    let expected = brute_probes(&ys, cp_dim, collapse);
                    let got = probe_sequence(lists, expected.len()).map_err(|e| e.to_string())?;
                    if got != expected {
                        return Err(format!("mismatch at d′={cp_dim} k={k} L={l} input {input}"));
                    }
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} cases identical"))
}

fn end_to_end_recall() -> Outcome {
    let s = setup();
    let row = tuned(cp_report(), 3, |_| true).ok_or("no tuned multiprobe config")?;
    let index = LshIndex::build(s.points.clone(), row.config.clone()).map_err(|e| e.to_string())?;
    let Dataset::Dense(data) = s.points.as_ref() else {
        return Err("expected dense data".into());
    };
    let mut hits = 0;
    for q in s.instance.queries.points() {
        let PointRef::Dense(qv) = q else {
            return Err("expected dense queries".into());
        };
        // brute-force oracle: largest inner product, lowest id on ties
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for (i, p) in data.rows().enumerate() {
            let ip: f64 = p.iter().zip(qv).map(|(&a, &b)| a as f64 * b as f64).sum();
            if ip > best.0 {
                best = (ip, i);
            }
        }
        let (found, _) = index.query(q, row.probes).map_err(|e| e.to_string())?;
        hits += found.is_some_and(|f| f.id == best.1) as usize;
    }
    let recall = hits as f64 / s.instance.queries.len() as f64;
    check(recall >= RECALL, format!("[{}] recall {recall:.3}", describe(row)))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("collision probability quadrature vs simulation", collision_quadrature_vs_simulation),
        ("collision probability scaling", theorem_scaling),
        ("pseudo-rotation equivalence", pseudo_rotation_equivalence),
        ("multiprobe candidate reduction", multiprobe_reduction),
        ("cross-polytope vs hyperplane candidates", cp_beats_hyperplane),
        ("rho trade-off curves", tradeoff_curves),
        ("Lambda properties", lambda_properties),
        ("sigma sandwich and Delta tail", sandwich_bounds),
        ("fast Hadamard transform", fast_hadamard),
        ("feature hashing", feature_hashing),
        ("multiprobe oracle equivalence", multiprobe_oracle),
        ("end-to-end recall", end_to_end_recall),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty() && !filter.iter().any(|f| f == &n.to_string()) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name} ({secs:.1}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name} ({secs:.1}s): {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
