//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::{central_diff, enumerate_trees, random_similarity, relative_error};
use hyphc::baselines::{linkage, Linkage};
use hyphc::codec::{exact_decode, greedy_decode, sarkar_embed};
use hyphc::geometry::{gromov_product, lca_depth, lca_depth_grad, DiskPoint};
use hyphc::loss::{
    hyphc_loss, hyphc_loss_grad, sample_triplets, Embedding, Temperature, TripletStrategy,
};
use hyphc::pipeline::{load_input, run_best_of, Decoder, Method, RunConfig, TripletSampling};
use hyphc::trees::{
    cost_bounds, dasgupta_cost, dasgupta_cost_triplet, ordered_pair_cost, BoundSampling,
};
use hyphc::{Dendrogram, SimilarityMatrix, Wide};
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LOG3: f64 = 1.0986122886681098;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn zoo_path(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(file)
}

fn zoo() -> SimilarityMatrix<f64> {
    load_input(&RunConfig::new(zoo_path("zoo.csv"), Method::Hyphc, "")).unwrap()
}

fn within(value: f64, target: f64, rel: f64) -> bool {
    (value - target).abs() <= rel * target
}

fn random_regular_pair(rng: &mut ChaCha8Rng) -> (DiskPoint<f64>, DiskPoint<f64>) {
    loop {
        let x = common::random_point(rng, 0.95);
        let y = common::random_point(rng, 0.95);
        if regular(&x, &y) {
            return (x, y);
        }
    }
}

/// Away from the clamping and degenerate regimes by a margin larger than the
/// finite-difference step.
fn regular(x: &DiskPoint<f64>, y: &DiskPoint<f64>) -> bool {
    let r = lca_depth(x, y);
    let [a, b] = x.coords();
    let [c, d] = y.coords();
    let theta = (a * d - b * c).abs().atan2(a * c + b * d);
    r.is_regular()
        && x.norm() > 0.05
        && y.norm() > 0.05
        && r.alpha > 1e-3
        && r.alpha < theta - 1e-3
        && theta < std::f64::consts::PI - 1e-3
}

fn c1_cost_forms() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.gen_range(3..=12);
        let t = Dendrogram::random(n, &mut rng);
        let w = random_similarity(n, &mut rng);
        let a = dasgupta_cost(&t, &w).unwrap();
        let b = dasgupta_cost_triplet(&t, &w).unwrap();
        worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-9 && elapsed < Duration::from_secs(10),
        format!(
            "200 instances, max relative gap {worst:.2e} (tol 1e-9), {:.2} s (limit 10 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn c2_clique_invariance() -> Outcome {
    let mut checked = 0;
    let mut bad = 0;
    for n in 3..=6i64 {
        let w = SimilarityMatrix::from_fn(n as usize, |i, j| i64::from(i != j));
        let expected = (n * n * n - n) / 3;
        for t in enumerate_trees(n as usize) {
            checked += 1;
            if dasgupta_cost(&t, &w).unwrap() != expected {
                bad += 1;
            }
        }
    }
    outcome(
        bad == 0,
        format!("{checked} trees for n = 3..6, {bad} with cost != (n^3 - n)/3 (exact integers)"),
    )
}

fn c3_bounds_sandwich() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let trees: Vec<Vec<Dendrogram>> = (0..=7)
        .map(|n| {
            if n >= 3 {
                enumerate_trees(n)
            } else {
                Vec::new()
            }
        })
        .collect();
    let mut bad = 0;
    for k in 0..50 {
        let n = 3 + k % 5;
        let w = random_similarity(n, &mut rng);
        let b = cost_bounds(&w, BoundSampling::Exact).unwrap();
        let best = trees[n]
            .iter()
            .map(|t| dasgupta_cost(t, &w).unwrap())
            .fold(f64::INFINITY, f64::min);
        let slack = 1e-12 * best;
        if !(b.lower <= best + slack && best <= b.upper + slack) {
            bad += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        bad == 0 && elapsed < Duration::from_secs(120),
        format!(
            "50 matrices, n = 3..7, {bad} violations, {:.2} s (limit 120 s)",
            elapsed.as_secs_f64()
        ),
    )
}

fn c4_zoo_reproduction() -> Outcome {
    let w = zoo();
    let b = cost_bounds(&w, BoundSampling::Exact).unwrap();
    let al = ordered_pair_cost(&linkage(&w, Linkage::Average).unwrap(), &w).unwrap();
    let sl = ordered_pair_cost(&linkage(&w, Linkage::Single).unwrap(), &w).unwrap();
    let rows = [
        ("LB", 2.0 * b.lower, 2.750e5),
        ("UB", 2.0 * b.upper, 3.887e5),
        ("AL", al, 2.829e5),
        ("SL", sl, 2.897e5),
    ];
    let pass = rows.iter().all(|&(_, v, t)| within(v, t, 0.01));
    let detail = rows
        .iter()
        .map(|(k, v, t)| format!("{k} {v:.4e} vs {t:.3e}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("ordered-pair costs within 1%: {detail}"))
}

/// Tuned HypHC on Zoo, best of seeds 0..5. Returns the outcome and the
/// best embedding for the decoder check.
fn c5_hyphc_quality(out: &Path) -> (Outcome, Option<Embedding<f64>>) {
    let mut c = RunConfig::new(zoo_path("zoo.csv"), Method::Hyphc, out);
    c.lr = 1e-3;
    c.tau = 0.1;
    c.init_scale = 0.2;
    c.batch_size = 4;
    c.epochs = 50;
    c.triplets = TripletSampling::Quadratic;
    c.decoder = Decoder::Greedy;
    let start = Instant::now();
    let result = run_best_of(&c, 5);
    let elapsed = start.elapsed();
    match result {
        Ok(b) => {
            let best = &b.runs[b.best];
            let cost = 2.0 * best.cost;
            let all: Vec<String> = b
                .runs
                .iter()
                .map(|r| format!("{:.4e}", 2.0 * r.cost))
                .collect();
            let o = outcome(
                cost <= 2.83e5 && elapsed < Duration::from_secs(600),
                format!(
                    "best of 5 seeds {cost:.4e} (limit 2.83e5; seeds: {}), {:.1} s (limit 600 s)",
                    all.join(" "),
                    elapsed.as_secs_f64()
                ),
            );
            (o, best.embedding.clone())
        }
        Err(e) => (outcome(false, format!("run failed: {e}")), None),
    }
}

/// Central differences (h = 1e-6) of the loss evaluated in 256-bit
/// arithmetic. With a sharp softmax the true gradient can sit near 1e-10,
/// below what an f64 difference quotient resolves.
fn wide_loss_diff(
    z: &Embedding<f64>,
    w: &SimilarityMatrix<f64>,
    batch: &hyphc::loss::TripletBatch,
    tau: f64,
) -> Vec<f64> {
    let h = Wide::from(1e-6);
    let w = w.map(Wide::from);
    let tau = Temperature::new(Wide::from(tau)).unwrap();
    let base: Vec<Wide> = z.coords().into_iter().flatten().map(Wide::from).collect();
    let eval = |p: &[Wide]| {
        let pts = p
            .chunks(2)
            .map(|c| DiskPoint::new(c[0], c[1]).unwrap())
            .collect();
        hyphc_loss(&Embedding::from_points(pts).unwrap(), &w, batch, tau, false).unwrap()
    };
    (0..base.len())
        .map(|k| {
            let mut p = base.clone();
            p[k] = base[k] + h;
            let up = eval(&p);
            p[k] = base[k] - h;
            let down = eval(&p);
            ((up - down) / (h + h)).to_f64().unwrap()
        })
        .collect()
}

fn c6_gradients() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_lca: f64 = 0.0;
    for _ in 0..1000 {
        let (x, y) = random_regular_pair(&mut rng);
        let g = lca_depth_grad(&x, &y);
        let analytic = [g.wrt_x[0], g.wrt_x[1], g.wrt_y[0], g.wrt_y[1]];
        let flat = [x.x(), x.y(), y.x(), y.y()];
        let numeric = central_diff(&flat, 1e-6, |p| {
            lca_depth(
                &DiskPoint::new(p[0], p[1]).unwrap(),
                &DiskPoint::new(p[2], p[3]).unwrap(),
            )
            .depth
        });
        worst_lca = worst_lca.max(relative_error(&analytic, &numeric));
    }
    let mut worst_loss: f64 = 0.0;
    for k in 0..1000 {
        let n = rng.gen_range(3..=6);
        let pts = loop {
            let pts: Vec<DiskPoint<f64>> = (0..n)
                .map(|_| common::random_point(&mut rng, 0.95))
                .collect();
            if (0..n).all(|i| (i + 1..n).all(|j| regular(&pts[i], &pts[j]))) {
                break pts;
            }
        };
        let z = Embedding::from_points(pts).unwrap();
        let w = random_similarity(n, &mut rng);
        let tau = Temperature::new([0.5, 0.2, 0.1][k % 3]).unwrap();
        let batch = sample_triplets(n, TripletStrategy::All).unwrap();
        let (_, grad) = hyphc_loss_grad(&z, &w, &batch, tau).unwrap();
        let analytic: Vec<f64> = grad.into_iter().flatten().collect();
        let numeric = wide_loss_diff(&z, &w, &batch, tau.tau());
        worst_loss = worst_loss.max(relative_error(&analytic, &numeric));
    }
    outcome(
        worst_lca < 1e-4 && worst_loss < 1e-4,
        format!("1000 + 1000 non-degenerate configs, max relative error lca {worst_lca:.2e}, loss {worst_loss:.2e} (limit 1e-4)"),
    )
}

fn c7_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let zeta = Wide::from(5.0);
    let mut bad = 0;
    for _ in 0..100 {
        let n = rng.gen_range(4..=16);
        let t = Dendrogram::random(n, &mut rng);
        let ok = sarkar_embed(&t, zeta)
            .and_then(|l| exact_decode(&l.leaves))
            .map(|d| d.isomorphic(&t))
            .unwrap_or(false);
        if !ok {
            bad += 1;
        }
    }
    outcome(
        bad == 0,
        format!("100 random trees, n = 4..16, edge length 5, 256-bit arithmetic: {bad} mismatches"),
    )
}

fn c8_temperature() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 8;
    let all = sample_triplets(n, TripletStrategy::All).unwrap();
    let mut worst_ratio: f64 = 0.0;
    let mut bad = 0;
    for _ in 0..20 {
        let t = Dendrogram::random(n, &mut rng);
        let w = random_similarity(n, &mut rng);
        let layout = sarkar_embed(&t, Wide::from(5.0)).unwrap();
        let decoded = exact_decode(&layout.leaves).unwrap();
        let cost = dasgupta_cost(&decoded, &w).unwrap();
        let wide = w.map(Wide::from);
        let mass: f64 = all
            .triplets()
            .iter()
            .map(|&[i, j, k]| {
                w.get(i, j)
                    .abs()
                    .max(w.get(i, k).abs())
                    .max(w.get(j, k).abs())
            })
            .sum();
        for tau in [0.5, 0.2, 0.1] {
            let loss = hyphc_loss(
                &layout.leaves,
                &wide,
                &all,
                Temperature::new(Wide::from(tau)).unwrap(),
                true,
            )
            .unwrap();
            let gap = (loss.to_f64().unwrap() - cost).abs();
            let bound = 4.0 * (-1.0 / tau).exp() * mass;
            worst_ratio = worst_ratio.max(gap / bound);
            if gap > bound {
                bad += 1;
            }
        }
    }
    outcome(
        bad == 0,
        format!("20 instances x tau {{0.5, 0.2, 0.1}}, {bad} violations, max gap / bound {worst_ratio:.2e}"),
    )
}

fn c9_decoders(trained: Option<&Embedding<f64>>) -> Outcome {
    let Some(z) = trained else {
        return outcome(
            false,
            "no trained embedding (criterion 5 failed to run)".into(),
        );
    };
    let w = zoo();
    let exact = dasgupta_cost(&exact_decode(z).unwrap(), &w).unwrap();
    let greedy = dasgupta_cost(&greedy_decode(z).unwrap(), &w).unwrap();
    let gap = (greedy - exact).abs() / exact;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 2310;
    let pts = (0..n)
        .map(|_| DiskPoint::from_polar(0.7, rng.gen_range(0.0..std::f64::consts::TAU)).unwrap())
        .collect();
    let big = Embedding::new(pts, 0.7).unwrap();
    let time = |f: &dyn Fn() -> Dendrogram| {
        let start = Instant::now();
        let t = f();
        assert_eq!(t.n_leaves(), n);
        start.elapsed()
    };
    let t_exact = time(&|| exact_decode(&big).unwrap());
    let t_greedy = (0..5)
        .map(|_| time(&|| greedy_decode(&big).unwrap()))
        .min()
        .unwrap();
    let speedup = t_exact.as_secs_f64() / t_greedy.as_secs_f64().max(1e-9);
    outcome(
        gap <= 1e-3 && speedup >= 10.0,
        format!(
            "trained Zoo: exact {:.5e} vs greedy {:.5e} ordered, gap {:.3}% (limit 0.1%); n = 2310 speedup {speedup:.0}x (limit 10x)",
            2.0 * exact,
            2.0 * greedy,
            100.0 * gap
        ),
    )
}

fn c10_hyperbolicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut four, mut sandwich) = (0, 0);
    for _ in 0..10_000 {
        let p: Vec<DiskPoint<f64>> = (0..4)
            .map(|_| common::random_point(&mut rng, 0.999))
            .collect();
        let xy = gromov_product(&p[0], &p[1], &p[3]);
        let bound =
            gromov_product(&p[0], &p[2], &p[3]).min(gromov_product(&p[2], &p[1], &p[3])) - LOG3;
        if xy < bound - 1e-9 {
            four += 1;
        }
        let g = gromov_product(&p[0], &p[1], &DiskPoint::origin());
        let d = lca_depth(&p[0], &p[1]).depth;
        if !(g <= d + 1e-9 && d <= g + LOG3 + 1e-9) {
            sandwich += 1;
        }
    }
    outcome(
        four == 0 && sandwich == 0,
        format!("10^4 tuples: {four} four-point violations (delta = log 3), {sandwich} sandwich violations"),
    )
}

fn main() {
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut failed = 0;
    let mut report = |id: usize, name: &str, o: Outcome| {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] C{id:<2} {name}: {}", o.detail);
        if !o.pass {
            failed += 1;
        }
    };
    report(1, "cost forms agree", c1_cost_forms());
    report(2, "clique invariance", c2_clique_invariance());
    report(3, "bounds sandwich the optimum", c3_bounds_sandwich());
    report(4, "Zoo bounds and linkages", c4_zoo_reproduction());
    let (o5, trained) = c5_hyphc_quality(dir.path());
    report(5, "HypHC quality on Zoo", o5);
    report(6, "gradients vs finite differences", c6_gradients());
    report(7, "encode/decode round trip", c7_round_trip());
    report(8, "temperature convergence", c8_temperature());
    report(
        9,
        "decoder agreement and speed",
        c9_decoders(trained.as_ref()),
    );
    report(10, "hyperbolicity", c10_hyperbolicity());
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
