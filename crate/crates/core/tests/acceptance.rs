//! Acceptance gate: one `[PASS]`/`[FAIL]` line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the criteria execute in a
//! fixed order with their own timing. Exits non-zero if any hard criterion
//! fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use pmbo::acquisition::{acquisition_value, select_next_index};
use pmbo::harness::{self, lower_median, ExperimentConfig, ExperimentOutput};
use pmbo::multiindex::{DegreeNorm, MultiIndex, MultiIndexSet};
use pmbo::sampling::{random_uniform_points, GeneratingNodes};
use pmbo::surrogate::{bootstrap_fit, fit, BootstrapEnsemble, PolynomialSurrogate, SampleSet};
use pmbo::trace::{Origin, RunTrace};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Random downward-closed set grown from zero by adding frontier elements.
fn random_set(rng: &mut ChaCha8Rng, dim: usize, size: usize) -> MultiIndexSet {
    let mut set = MultiIndexSet::from_indices(vec![MultiIndex::zero(dim)]).unwrap();
    while set.len() < size {
        let frontier = set.frontier();
        let pick = frontier[rng.random_range(0..frontier.len())].clone();
        set.insert(pick).unwrap();
    }
    set
}

fn monomial(coeffs: &[(MultiIndex, f64)], x: &[f64]) -> f64 {
    coeffs
        .iter()
        .map(|(alpha, c)| {
            c * alpha
                .exponents()
                .iter()
                .zip(x)
                .map(|(&e, &xi)| xi.powi(e as i32))
                .product::<f64>()
        })
        .sum()
}

fn interpolate(
    set: &MultiIndexSet,
    nodes: &GeneratingNodes,
    f: impl Fn(&[f64]) -> f64,
) -> PolynomialSurrogate {
    let mut samples = SampleSet::new(set.dimension());
    for alpha in set.iter() {
        let p = nodes.node_for_index(alpha).unwrap();
        let v = f(&p);
        samples.push(p, v, Origin::Seed).unwrap();
    }
    fit(&samples, set, nodes, 0.0).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let nodes = GeneratingNodes::default();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let dim = rng.random_range(1..=3);
        let size = rng.random_range(1..=35);
        let set = random_set(&mut rng, dim, size);
        // Oracle in the monomial basis, independent of the Newton form.
        let coeffs: Vec<(MultiIndex, f64)> = set
            .iter()
            .map(|alpha| (alpha.clone(), rng.random_range(-1.0..1.0)))
            .collect();
        let q = interpolate(&set, &nodes, |x| monomial(&coeffs, x));
        for x in random_uniform_points(dim, 100, rng.random()) {
            worst = worst.max((q.evaluate(&x) - monomial(&coeffs, &x)).abs());
        }
    }
    let elapsed = start.elapsed();
    Outcome::new(
        worst <= 1e-10 && elapsed < Duration::from_secs(10),
        format!("max error {worst:.2e} over 50 sets, {elapsed:.2?}"),
    )
}

/// Every downward-closed set in 2D with at most `max` elements
/// (Young diagrams: non-increasing column heights).
fn all_sets_2d(max: usize) -> Vec<MultiIndexSet> {
    fn grow(heights: &mut Vec<u32>, remaining: usize, cap: u32, out: &mut Vec<Vec<u32>>) {
        if !heights.is_empty() {
            out.push(heights.clone());
        }
        for h in 1..=cap.min(remaining as u32) {
            heights.push(h);
            grow(heights, remaining - h as usize, h, out);
            heights.pop();
        }
    }
    let mut shapes = Vec::new();
    grow(&mut Vec::new(), max, max as u32, &mut shapes);
    shapes
        .into_iter()
        .map(|heights| {
            let indices = heights
                .iter()
                .enumerate()
                .flat_map(|(i, &h)| {
                    (0..h).map(move |j| MultiIndex::new(vec![i as u32, j]).unwrap())
                })
                .collect();
            MultiIndexSet::from_indices(indices).unwrap()
        })
        .collect()
}

fn criterion_2() -> Outcome {
    let nodes = GeneratingNodes::default();
    let mut sets: Vec<MultiIndexSet> = (1..=20u32)
        .map(|n| MultiIndexSet::total_degree(1, n - 1, DegreeNorm::L1).unwrap())
        .collect();
    sets.extend(all_sets_2d(20));
    let mut worst: f64 = 0.0;
    for set in &sets {
        let points: Vec<Vec<f64>> = set
            .iter()
            .map(|a| nodes.node_for_index(a).unwrap())
            .collect();
        for k in 0..set.len() {
            let q = interpolate(set, &nodes, |x| {
                if x == points[k].as_slice() {
                    1.0
                } else {
                    0.0
                }
            });
            for (j, p) in points.iter().enumerate() {
                let expected = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((q.evaluate(p) - expected).abs());
            }
        }
    }
    Outcome::new(
        worst <= 1e-10,
        format!("max deviation {worst:.2e} over {} sets", sets.len()),
    )
}

fn criterion_3() -> Outcome {
    let nodes = GeneratingNodes::default();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for dim in [1usize, 3, 6] {
        for degree in 0..=5u32 {
            let set = MultiIndexSet::total_degree(dim, degree, DegreeNorm::L1).unwrap();
            let coeffs: Vec<f64> = (0..set.len())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let q = PolynomialSurrogate::new(set, nodes.clone(), coeffs).unwrap();
            for x in random_uniform_points(dim, 20, rng.random()) {
                let g = q.gradient(&x);
                let fd: Vec<f64> = (0..dim)
                    .map(|i| {
                        let mut a = x.clone();
                        let mut b = x.clone();
                        a[i] += h;
                        b[i] -= h;
                        (q.evaluate(&a) - q.evaluate(&b)) / (2.0 * h)
                    })
                    .collect();
                let err = g
                    .iter()
                    .zip(&fd)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let scale = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
                worst = worst.max(err / scale);
                count += 1;
            }
        }
    }
    Outcome::new(
        worst <= 1e-6,
        format!("max relative error {worst:.2e} over {count} points"),
    )
}

fn random_ensemble(
    rng: &mut ChaCha8Rng,
    shift: f64,
) -> (MultiIndexSet, BootstrapEnsemble, Vec<f64>) {
    let dim = rng.random_range(1..=3);
    let degree = rng.random_range(1..=3);
    let set = MultiIndexSet::total_degree(dim, degree, DegreeNorm::L1).unwrap();
    let n = set.len() * 2 + 5;
    let points = random_uniform_points(dim, n, rng.random());
    let values: Vec<f64> = points.iter().map(|_| rng.random_range(-5.0..5.0)).collect();
    let mut samples = SampleSet::new(dim);
    for (p, v) in points.iter().zip(&values) {
        samples.push(p.clone(), v + shift, Origin::Seed).unwrap();
    }
    let b = rng.random_range(2..=8);
    let e = bootstrap_fit(&samples, &set, &GeneratingNodes::default(), b, 7, 0.0).unwrap();
    (set, e, values)
}

fn criterion_4() -> Outcome {
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: 200,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(
            proptest::test_runner::RngAlgorithm::ChaCha,
        ),
    );
    let nodes = GeneratingNodes::default();

    let monotone = runner.run(
        &(any::<u64>(), 0.0f64..1.0, 0.0f64..1.0),
        |(seed, g1, g2)| {
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            prop_assume!(hi > lo);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (set, e, _) = random_ensemble(&mut rng, 0.0);
            for beta in set.frontier() {
                let p = nodes.node_for_index(&beta).unwrap();
                let (mean, var) = e.mean_var(&p);
                if var > 0.0 {
                    prop_assert!(
                        acquisition_value(mean, var, hi) < acquisition_value(mean, var, lo)
                    );
                }
            }
            Ok(())
        },
    );

    let shift_invariant = runner.run(
        &(any::<u64>(), -10.0f64..10.0, 0.0f64..=1.0),
        |(seed, c, gamma)| {
            let (set, base, _) = random_ensemble(&mut ChaCha8Rng::seed_from_u64(seed), 0.0);
            let (_, shifted, _) = random_ensemble(&mut ChaCha8Rng::seed_from_u64(seed), c);
            let a = select_next_index(&set, &nodes, &base, gamma).unwrap();
            let b = select_next_index(&set, &nodes, &shifted, gamma).unwrap();
            prop_assert_eq!(a, b);
            Ok(())
        },
    );

    let ties = runner.run(
        &(1usize..=4, 0u32..=3, -5.0f64..5.0, 0.0f64..=1.0),
        |(dim, degree, level, gamma)| {
            let set = MultiIndexSet::total_degree(dim, degree, DegreeNorm::L1).unwrap();
            let mut coeffs = vec![0.0; set.len()];
            coeffs[0] = level;
            let q = PolynomialSurrogate::new(set.clone(), nodes.clone(), coeffs).unwrap();
            let e = BootstrapEnsemble::from_members(vec![q.clone(), q]).unwrap();
            let first = select_next_index(&set, &nodes, &e, gamma).unwrap();
            let smallest = set.frontier().into_iter().min().unwrap();
            prop_assert_eq!(&first.0, &smallest);
            prop_assert_eq!(first, select_next_index(&set, &nodes, &e, gamma).unwrap());
            Ok(())
        },
    );

    let report = |name: &str, r: Result<(), String>| match r {
        Ok(()) => format!("{name} ok"),
        Err(e) => format!("{name} FAILED: {e}"),
    };
    let detail = [
        report("monotone", monotone.map_err(|e| e.to_string())),
        report("shift", shift_invariant.map_err(|e| e.to_string())),
        report("ties", ties.map_err(|e| e.to_string())),
    ]
    .join(", ");
    Outcome::new(!detail.contains("FAILED"), detail)
}

fn experiment(objective: &str, algorithms: &[&str], budget: usize) -> ExperimentConfig {
    ExperimentConfig {
        objective: objective.into(),
        algorithms: algorithms.iter().map(|a| a.to_string()).collect(),
        repeats: 5,
        max_evaluations: budget,
        rng_seed: 0,
        ..ExperimentConfig::default()
    }
}

fn medians(out: &ExperimentOutput) -> BTreeMap<String, f64> {
    out.aggregate
        .curves
        .iter()
        .map(|c| {
            (
                c.algorithm.clone(),
                out.median_final_best(&c.algorithm).unwrap(),
            )
        })
        .collect()
}

fn fmt_medians(m: &BTreeMap<String, f64>) -> String {
    m.iter()
        .map(|(k, v)| format!("{k}={v:.5}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn criterion_5(all: &mut Vec<(usize, RunTrace)>) -> Outcome {
    let start = Instant::now();
    let out = harness::execute(&experiment(
        "hartmann3",
        &["pmbo-chebyshev", "random", "sobol"],
        300,
    ))
    .unwrap();
    let elapsed = start.elapsed();
    all.extend(out.runs.iter().map(|r| (300, r.trace.clone())));
    let m = medians(&out);
    let pmbo = m["pmbo-chebyshev"];
    let pass = pmbo <= m["random"]
        && pmbo <= m["sobol"]
        && pmbo <= -3.6
        && elapsed < Duration::from_secs(120);
    Outcome::new(pass, format!("{} ({elapsed:.1?})", fmt_medians(&m)))
}

fn criterion_6(all: &mut Vec<(usize, RunTrace)>) -> Outcome {
    let start = Instant::now();
    let out = harness::execute(&experiment(
        "rosenbrock6",
        &["cmaes", "pmbo-random", "pmbo-sobol", "random"],
        300,
    ))
    .unwrap();
    let elapsed = start.elapsed();
    all.extend(out.runs.iter().map(|r| (300, r.trace.clone())));
    let m = medians(&out);
    let pass = m["cmaes"] <= m["pmbo-random"]
        && m["pmbo-random"] <= m["random"]
        && m["pmbo-sobol"] <= m["random"]
        && elapsed < Duration::from_secs(300);
    Outcome::new(pass, format!("{} ({elapsed:.1?})", fmt_medians(&m)))
}

// Soft: reported, never fails the gate.
fn criterion_7(all: &mut Vec<(usize, RunTrace)>) -> (Outcome, bool) {
    let out = harness::execute(&experiment("hartmann3", &["pmbo-cmaes", "cmaes"], 300)).unwrap();
    all.extend(out.runs.iter().map(|r| (300, r.trace.clone())));
    let m = medians(&out);
    let margin = m["pmbo-cmaes"] - m["cmaes"];
    (
        Outcome::new(
            margin <= 0.0,
            format!("{} margin {margin:+.3e}", fmt_medians(&m)),
        ),
        true,
    )
}

fn criterion_8(all: &mut Vec<(usize, RunTrace)>) -> Outcome {
    let out = harness::execute(&experiment("sphereN:2", &["cmaes"], 2000)).unwrap();
    all.extend(out.runs.iter().map(|r| (2000, r.trace.clone())));
    let finals = out.final_bests("cmaes");
    let hits = finals.iter().filter(|&&f| f <= 1e-8).count();
    Outcome::new(
        hits == 5,
        format!(
            "{hits}/5 seeds reach 1e-8, median {:.2e}",
            lower_median(&finals).unwrap()
        ),
    )
}

fn read_outputs(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "json"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn criterion_9() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = experiment(
        "himmelblau2",
        &[
            "pmbo-chebyshev",
            "pmbo-random",
            "pmbo-sobol",
            "pmbo-cmaes",
            "random",
            "sobol",
            "cmaes",
        ],
        90,
    );
    config.repeats = 2;
    config.seed_size = 30;
    config.out_dir = tmp.path().join("results");
    let mut files = Vec::new();
    for _ in 0..2 {
        harness::run_experiment(&config).unwrap();
        files.push(read_outputs(&config.out_dir));
    }
    let identical = files[0] == files[1] && files[0].len() == 15;
    Outcome::new(
        identical,
        format!("{} files compared byte for byte", files[0].len()),
    )
}

fn criterion_10(all: &[(usize, RunTrace)]) -> Outcome {
    let mut problems = Vec::new();
    for (budget, t) in all {
        if t.len() > *budget {
            problems.push(format!("trace of {} exceeds {budget}", t.len()));
        }
        if t.records
            .windows(2)
            .any(|w| w[1].best_so_far > w[0].best_so_far)
        {
            problems.push("best_so_far increased".into());
        }
        if t.records
            .iter()
            .any(|r| r.x.iter().any(|v| !(-1.0..=1.0).contains(v)))
        {
            problems.push("point outside the cube".into());
        }
    }
    let at_budget = all.iter().filter(|(b, t)| t.len() == *b).count();
    Outcome::new(
        problems.is_empty(),
        if problems.is_empty() {
            format!(
                "{} runs checked, {at_budget} used the full budget",
                all.len()
            )
        } else {
            problems.join("; ")
        },
    )
}

fn main() {
    let mut traces = Vec::new();
    let mut hard_failures = 0;
    let mut report = |n: usize, title: &str, outcome: Outcome, soft: bool| {
        let tag = match (outcome.pass, soft) {
            (true, _) => "PASS",
            (false, true) => "SOFT-FAIL",
            (false, false) => "FAIL",
        };
        if !outcome.pass && !soft {
            hard_failures += 1;
        }
        println!("[{tag}] criterion {n}: {title}: {}", outcome.detail);
    };

    report(1, "surrogate exactness", criterion_1(), false);
    report(2, "Lagrange property", criterion_2(), false);
    report(3, "gradient vs finite differences", criterion_3(), false);
    report(4, "acquisition invariants", criterion_4(), false);
    report(5, "Hartmann-3 ordering", criterion_5(&mut traces), false);
    report(6, "Rosenbrock-6 ordering", criterion_6(&mut traces), false);
    let (outcome, soft) = criterion_7(&mut traces);
    report(7, "CMA-ES seeding on Hartmann-3", outcome, soft);
    report(8, "CMA-ES on the sphere", criterion_8(&mut traces), false);
    report(9, "determinism", criterion_9(), false);
    report(
        10,
        "budget and incumbent invariants",
        criterion_10(&traces),
        false,
    );

    if hard_failures > 0 {
        println!("{hard_failures} acceptance criteria failed");
        std::process::exit(1);
    }
}
