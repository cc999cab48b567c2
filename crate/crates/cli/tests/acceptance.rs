//! Acceptance suite. Prints one line per criterion and exits nonzero when
//! any of them fails.

use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use fairmed_cli::{run, PipelineKind, RunConfig};
use fairmed_core::consolidation::consolidate;
use fairmed_core::exact_fair::{exact_pipeline, near_fair_assign};
use fairmed_core::frt::{sample_hst, HstNode, HstTree};
use fairmed_core::kmedian::solve_kmedian;
use fairmed_core::model::{audit_fairness, evaluate_cost, exact_gamma};
use fairmed_core::oracle::{brute_fair_assignment, brute_fair_clustering, OracleLimits};
use fairmed_core::pipeline::{general_pipeline, PipelineConfig, PipelineOutput};
use fairmed_core::tree_dp::{binarize, solve_dp, NodePolicies};
use fairmed_core::{Error, FairnessPolicy, Instance, MetricSpace, Point};
use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// A pipeline result kept for the corpus-wide checks.
struct Produced {
    instance: Instance,
    policy: FairnessPolicy,
    exact: bool,
    output: PipelineOutput,
}

fn r(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

fn plane(rng: &mut ChaCha8Rng, n: usize, blobs: usize) -> MetricSpace {
    let centers: Vec<(f64, f64)> = (0..blobs.max(1))
        .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
        .collect();
    let coords: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let (cx, cy) = centers[rng.gen_range(0..centers.len())];
            vec![cx + rng.gen_range(-8.0..8.0), cy + rng.gen_range(-8.0..8.0)]
        })
        .collect();
    MetricSpace::from_euclidean((0..n).collect(), &coords).unwrap()
}

fn random_groups(rng: &mut ChaCha8Rng, n: usize, g: usize) -> Vec<usize> {
    (0..n).map(|_| rng.gen_range(0..g)).collect()
}

/// Groups in a fixed ratio so that small exactly fair clusters exist.
fn ratio_groups(rng: &mut ChaCha8Rng, n: usize, ratio: &[usize]) -> Vec<usize> {
    let unit: usize = ratio.iter().sum();
    let mut groups: Vec<usize> = (0..n / unit * unit)
        .map(|i| {
            let mut slot = i % unit;
            let mut j = 0;
            while slot >= ratio[j] {
                slot -= ratio[j];
                j += 1;
            }
            j
        })
        .collect();
    groups.shuffle(rng);
    groups
}

fn random_policy(rng: &mut ChaCha8Rng, instance: &Instance) -> FairnessPolicy {
    let g = instance.num_groups();
    match rng.gen_range(0..3) {
        0 => FairnessPolicy::exact(instance.group_sizes()),
        1 => {
            let n = instance.len() as i64;
            let slack = r(rng.gen_range(1..=3), 10);
            let (mut alpha, mut beta) = (Vec::new(), Vec::new());
            for &s in instance.group_sizes() {
                let share = r(s as i64, n);
                let lo = share - slack;
                let hi = share + slack;
                alpha.push(if lo < r(0, 1) { r(0, 1) } else { lo });
                beta.push(if hi > r(1, 1) { r(1, 1) } else { hi });
            }
            FairnessPolicy::alpha_beta(alpha, beta).unwrap()
        }
        _ => {
            let d = vec![rng.gen_range(0..g)];
            let alpha = [r(1, 4), r(1, 3), r(1, 2)][rng.gen_range(0..3)];
            FairnessPolicy::coverage(d, alpha, g).unwrap()
        }
    }
}

/// Random weighted tree with Steiner nodes; locations sit on distinct nodes.
fn random_tree(rng: &mut ChaCha8Rng, locations: usize) -> HstTree {
    let total = locations + rng.gen_range(0..=3);
    let mut nodes: Vec<HstNode> = (0..total)
        .map(|_| HstNode {
            parent: None,
            children: Vec::new(),
            edge_to_parent: 0.0,
            level: 0,
            location: None,
        })
        .collect();
    for v in 1..total {
        let p = rng.gen_range(0..v);
        nodes[v].parent = Some(p);
        nodes[v].edge_to_parent = rng.gen_range(0..=6) as f64;
        nodes[p].children.push(v);
    }
    let mut hosts: Vec<usize> = (0..total).collect();
    hosts.shuffle(rng);
    for (loc, &v) in hosts.iter().take(locations).enumerate() {
        nodes[v].location = Some(loc);
    }
    HstTree::from_nodes(nodes, 0).unwrap()
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let limits = OracleLimits {
        max_points: 8,
        max_centers: 4,
        max_groups: 2,
    };
    let mut checked = [0usize; 3];
    let (mut infeasible, mut feasible) = (0, 0);
    let mut mismatches = Vec::new();
    let mut case = 0;
    while feasible < 510 {
        case += 1;
        let locations = rng.gen_range(1..=4);
        let tree = random_tree(&mut rng, locations);
        let metric = Arc::new(tree.path_metric().unwrap());
        let n = rng.gen_range(1..=8);
        let g = rng.gen_range(1..=2);
        let points: Vec<Point> = (0..n)
            .map(|i| Point {
                id: i,
                group: rng.gen_range(0..g),
                location: rng.gen_range(0..locations),
            })
            .collect();
        let instance = Instance::new(points, g, metric).unwrap();
        let kind = case % 3;
        let policy = match kind {
            0 => {
                let alpha: Vec<_> = (0..g).map(|_| r(rng.gen_range(0..=2), 5)).collect();
                let beta: Vec<_> = alpha.iter().map(|a| (*a + r(rng.gen_range(0..=3), 5)).min(r(1, 1))).collect();
                FairnessPolicy::alpha_beta(alpha, beta).unwrap()
            }
            1 => FairnessPolicy::exact(instance.group_sizes()),
            _ => {
                let d: Vec<usize> = (0..g).filter(|_| rng.gen_bool(0.5)).collect();
                FairnessPolicy::coverage(d, r(rng.gen_range(0..=4), 4), g).unwrap()
            }
        };
        let bin = binarize(&tree, &instance.location_profiles(), g).unwrap();
        let dp = solve_dp(&bin, NodePolicies::Uniform(&policy));
        let oracle = brute_fair_assignment(&instance, instance.sites(), &policy, limits).unwrap();
        match (dp, oracle) {
            (Ok(table), Some(best)) => {
                feasible += 1;
                let cost = table.root_cost().unwrap();
                if cost.to_bits() != best.cost.to_bits() {
                    mismatches.push(format!("case {case}: dp {cost} oracle {}", best.cost));
                }
            }
            (Err(Error::Infeasible(_)), None) => infeasible += 1,
            (dp, oracle) => mismatches.push(format!(
                "case {case}: dp {:?} oracle {:?}",
                dp.map(|t| t.root_cost()),
                oracle.map(|o| o.cost)
            )),
        }
        checked[kind] += 1;
    }
    outcome(
        mismatches.is_empty(),
        format!(
            "{} instances (alphabeta {}, exact {}, coverage {}; {feasible} feasible, {infeasible} infeasible on both sides), {} mismatches {:?}",
            checked.iter().sum::<usize>(),
            checked[0],
            checked[1],
            checked[2],
            mismatches.len(),
            mismatches.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn criterion_2(corpus: &[Produced]) -> Outcome {
    let mut bad = Vec::new();
    for (i, p) in corpus.iter().enumerate() {
        let plan = &p.output.clustering.plan;
        let ok_plan = plan.validate(&p.instance).is_ok();
        let audit = audit_fairness(&p.policy, plan).unwrap();
        let zero_gamma = !p.exact
            || plan
                .center_profiles()
                .values()
                .all(|prof| exact_gamma(&sizes_u64(&p.instance), prof) == r(0, 1));
        if !ok_plan || !audit.all_admitted() || !p.output.audit.all_admitted() || !zero_gamma {
            bad.push(i);
        }
    }
    let exact = corpus.iter().filter(|p| p.exact).count();
    outcome(
        bad.is_empty(),
        format!(
            "{} clusterings ({exact} exact with gamma=0 required), {} failed audits",
            corpus.len(),
            bad.len()
        ),
    )
}

fn sizes_u64(instance: &Instance) -> Vec<u64> {
    instance.group_sizes().iter().map(|&s| s as u64).collect()
}

fn metric_corpus(rng: &mut ChaCha8Rng, idx: usize) -> MetricSpace {
    let n = rng.gen_range(2..=32);
    match idx % 4 {
        0 => {
            let blobs = rng.gen_range(1..=4);
            plane(rng, n, blobs)
        }
        1 => {
            let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
            MetricSpace::from_matrix((0..n).collect(), &rows).unwrap()
        }
        2 => {
            // shortest paths of a random weighted complete graph
            let mut d = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    let w = rng.gen_range(1.0..50.0_f64).powi(2);
                    d[i][j] = w;
                    d[j][i] = w;
                }
            }
            for m in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        let via = d[i][m] + d[m][j];
                        if via < d[i][j] {
                            d[i][j] = via;
                        }
                    }
                }
            }
            MetricSpace::from_matrix((0..n).collect(), &d).unwrap()
        }
        _ => {
            // integer grid with repeated positions
            let coords: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.gen_range(0..4) as f64, rng.gen_range(0..4) as f64])
                .collect();
            MetricSpace::from_euclidean((0..n).collect(), &coords).unwrap()
        }
    }
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut trees = 0;
    let mut violations = 0;
    let metrics: Vec<MetricSpace> = (0..200).map(|i| metric_corpus(&mut rng, i)).collect();
    for (i, m) in metrics.iter().enumerate() {
        for t in 0..50 {
            let tree = sample_hst(m, (i * 1000 + t) as u64).unwrap();
            violations += tree.domination_violations(m).unwrap().len();
            trees += 1;
        }
    }
    outcome(
        violations == 0 && trees >= 10_000,
        format!("{trees} trees over {} metrics with at most 32 locations, {violations} violating pairs", metrics.len()),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let samples = 10_000;
    let mut worst_margin = f64::INFINITY;
    let mut lines = Vec::new();
    let mut pass = true;
    for k in [4usize, 8, 16] {
        let uniform = {
            let rows: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| if i == j { 0.0 } else { 1.0 }).collect()).collect();
            MetricSpace::from_matrix((0..k).collect(), &rows).unwrap()
        };
        let euclid = plane(&mut rng, k, k);
        for (name, m) in [("uniform", uniform), ("euclidean", euclid)] {
            let mut sum = vec![0.0; k * k];
            for s in 0..samples {
                let tree = sample_hst(&m, 7_000_000 + s as u64).unwrap().path_metric().unwrap();
                for a in 0..k {
                    for b in (a + 1)..k {
                        sum[a * k + b] += tree.distance(a, b).unwrap() / m.distance(a, b).unwrap();
                    }
                }
            }
            let worst = (0..k)
                .flat_map(|a| ((a + 1)..k).map(move |b| (a, b)))
                .map(|(a, b)| sum[a * k + b] / samples as f64)
                .fold(0.0, f64::max);
            let bound = 8.0 * (k as f64).ln();
            pass &= worst <= bound;
            worst_margin = worst_margin.min(bound - worst);
            lines.push(format!("{name} k={k}: worst mean stretch {worst:.2} (bound {bound:.2})"));
        }
    }
    outcome(pass, format!("{samples} samples each; {}", lines.join("; ")))
}

fn lift_ok(out: &PipelineOutput) -> bool {
    let (o, red, reloc) = (out.original_cost(), out.reduced_cost(), out.relocation_cost());
    (o - red).abs() <= reloc + 1e-9 * (1.0 + o.max(red))
}

fn criterion_5(corpus: &[Produced]) -> Outcome {
    let bad = corpus.iter().filter(|p| !lift_ok(&p.output)).count();
    let recost = corpus
        .iter()
        .filter(|p| evaluate_cost(&p.instance, &p.output.clustering.plan).unwrap() != p.output.original_cost())
        .count();
    outcome(
        bad == 0 && recost == 0,
        format!("{} clusterings, {bad} beyond the relocation cost, {recost} with inconsistent cost", corpus.len()),
    )
}

fn criterion_6(corpus: &mut Vec<Produced>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let limits = OracleLimits {
        max_points: 10,
        max_centers: 3,
        max_groups: 2,
    };
    let (mut runs, mut within, mut skipped, mut worst) = (0, 0, 0, 0.0f64);
    let start = Instant::now();
    while runs < 200 {
        let n = rng.gen_range(4..=10);
        let k = rng.gen_range(1..=3);
        let g = rng.gen_range(1..=2);
        let metric = plane(&mut rng, n, k);
        let instance = Instance::from_groups(&random_groups(&mut rng, n, g), g, Arc::new(metric)).unwrap();
        let policy = random_policy(&mut rng, &instance);
        let Some(opt) = brute_fair_clustering(&instance, k, &policy, limits).unwrap() else {
            skipped += 1;
            continue;
        };
        runs += 1;
        let config = PipelineConfig::with_seed(runs as u64);
        match general_pipeline(&instance, k, &policy, &config) {
            Ok(out) => {
                let cost = out.original_cost();
                if cost <= 10.0 * opt.cost + 1e-9 {
                    within += 1;
                }
                if opt.cost > 0.0 {
                    worst = worst.max(cost / opt.cost);
                }
                corpus.push(Produced {
                    instance,
                    exact: matches!(policy, FairnessPolicy::Exact { .. }),
                    policy,
                    output: out,
                });
            }
            Err(e) => eprintln!("criterion 6: run {runs} failed: {e}"),
        }
    }
    let share = within as f64 / runs as f64;
    outcome(
        share >= 0.95,
        format!(
            "{within}/{runs} runs within 10x of the oracle ({:.1}%), worst ratio {worst:.2}, {skipped} infeasible instances skipped, {:.1}s",
            100.0 * share,
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let limits = OracleLimits {
        max_points: 12,
        max_centers: 4,
        max_groups: 3,
    };
    let (mut runs, mut bad, mut max_gamma) = (0, Vec::new(), r(0, 1));
    while runs < 250 {
        let n = rng.gen_range(2..=12);
        let k = rng.gen_range(1..=4).min(n);
        let g = rng.gen_range(1..=3);
        let metric = plane(&mut rng, n, k);
        let instance = Instance::from_groups(&random_groups(&mut rng, n, g), g, Arc::new(metric)).unwrap();
        let seed = solve_kmedian(&instance, k, runs as u64).unwrap();
        let reduced = consolidate(&instance, &seed).unwrap().base;
        let policy = FairnessPolicy::exact(reduced.group_sizes());
        let centers = reduced.sites().to_vec();
        runs += 1;
        let near = match near_fair_assign(&reduced, &centers, &policy) {
            Ok(near) => near,
            Err(e) => {
                bad.push(format!("run {runs}: {e}"));
                continue;
            }
        };
        let opt = brute_fair_assignment(&reduced, &centers, &policy, limits).unwrap().unwrap();
        let sizes = sizes_u64(&reduced);
        let gamma = near
            .plan
            .center_profiles()
            .values()
            .map(|p| exact_gamma(&sizes, p))
            .max()
            .unwrap_or(r(0, 1));
        max_gamma = max_gamma.max(gamma);
        if gamma > r(3, 1) || near.cost > opt.cost + 1e-9 * (1.0 + opt.cost) || near.plan.validate(&reduced).is_err() {
            bad.push(format!("run {runs}: gamma {gamma}, cost {} vs oracle {}", near.cost, opt.cost));
        }
    }
    outcome(
        bad.is_empty(),
        format!("{runs} consolidated instances, max gamma {max_gamma}, {} failures {:?}", bad.len(), bad.iter().take(3).collect::<Vec<_>>()),
    )
}

fn criterion_8(corpus: &mut Vec<Produced>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let ratios: [&[usize]; 4] = [&[1, 1], &[1, 2], &[2, 3], &[1, 1, 1]];
    let (mut runs, mut bad, mut worst_p, mut worst_s) = (0, Vec::new(), 0.0f64, 0.0f64);
    for run_id in 0..120 {
        let ratio = ratios[run_id % ratios.len()];
        let n = rng.gen_range(6..=36);
        let k = rng.gen_range(1..=4);
        let mut groups = ratio_groups(&mut rng, n, ratio);
        // sometimes break the ratio so fairlets get large
        if rng.gen_bool(0.25) {
            groups.push(0);
        }
        let n = groups.len();
        let metric = plane(&mut rng, n, k);
        let instance = Instance::from_groups(&groups, ratio.len(), Arc::new(metric)).unwrap();
        runs += 1;
        match exact_pipeline(&instance, k.min(n), &PipelineConfig::with_seed(run_id as u64)) {
            Ok(out) => {
                let stats = out.exact.clone().unwrap();
                let four_f = 4 * stats.fairlet_size as usize;
                let p_ok = stats.problematic_sizes.iter().all(|&s| s < four_f);
                let s_ok = stats.movable_points as u64 <= stats.movable_bound;
                let p_max = stats.problematic_sizes.iter().copied().max().unwrap_or(0);
                worst_p = worst_p.max(p_max as f64 / four_f as f64);
                worst_s = worst_s.max(stats.movable_points as f64 / stats.movable_bound as f64);
                if !p_ok || !s_ok {
                    bad.push(format!("run {run_id}: {stats:?}"));
                }
                corpus.push(Produced {
                    policy: FairnessPolicy::exact(instance.group_sizes()),
                    instance,
                    exact: true,
                    output: out,
                });
            }
            Err(e) => bad.push(format!("run {run_id}: {e}")),
        }
    }
    outcome(
        bad.is_empty(),
        format!(
            "{runs} exact-pipeline runs, max |P_i|/4f {worst_p:.2}, max |S|/bound {worst_s:.3}, {} failures {:?}",
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    )
}

fn criterion_9(corpus: &mut Vec<Produced>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let ratios: [&[usize]; 3] = [&[1, 1], &[1, 2], &[1, 1, 1]];
    let (mut agree, mut errors, mut worst) = (0, Vec::new(), 1.0f64);
    let runs = 100;
    for run_id in 0..runs {
        let ratio = ratios[run_id % ratios.len()];
        let n = rng.gen_range(6..=30);
        let k = rng.gen_range(2..=4);
        let groups = ratio_groups(&mut rng, n, ratio);
        let metric = plane(&mut rng, groups.len(), k);
        let instance = Instance::from_groups(&groups, ratio.len(), Arc::new(metric)).unwrap();
        let policy = FairnessPolicy::exact(instance.group_sizes());
        let config = PipelineConfig::with_seed(run_id as u64);
        let (Ok(exact), Ok(general)) = (
            exact_pipeline(&instance, k, &config),
            general_pipeline(&instance, k, &policy, &config),
        ) else {
            errors.push(run_id);
            continue;
        };
        let (a, b) = (exact.original_cost(), general.original_cost());
        let tol = 1e-9 * (1.0 + a.max(b));
        if a <= 3.0 * b + tol && b <= 3.0 * a + tol {
            agree += 1;
        }
        if a.min(b) > 0.0 {
            worst = worst.max(a.max(b) / a.min(b));
        }
        for out in [exact, general] {
            corpus.push(Produced {
                instance: instance.clone(),
                policy: policy.clone(),
                exact: true,
                output: out,
            });
        }
    }
    outcome(
        agree * 10 >= runs * 9,
        format!("{agree}/{runs} runs within a factor 3 both ways, worst ratio {worst:.2}, {} runs with an error", errors.len()),
    )
}

fn write_fixture(dir: &Path, rng: &mut ChaCha8Rng, n: usize) -> std::path::PathBuf {
    let path = dir.join(format!("points_{n}.csv"));
    let mut text = String::from("id,group,x,y\n");
    let labels = ["red", "blue"];
    for i in 0..n {
        text.push_str(&format!(
            "p{i},{},{:.3},{:.3}\n",
            labels[i % 2],
            rng.gen_range(0.0..50.0),
            rng.gen_range(0.0..50.0)
        ));
    }
    std::fs::write(&path, text).unwrap();
    path
}

fn config(input: &Path, k: usize, policy: &str, pipeline: PipelineKind, seed: u64) -> RunConfig {
    RunConfig {
        input: input.to_path_buf(),
        matrix: None,
        k,
        policy: policy.to_string(),
        pipeline,
        trials: None,
        seed,
        threads: 1,
        strict_metric: false,
        forbid_empty: false,
        dump_dp: None,
        timing: false,
    }
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut compared = 0;
    let mut differing = Vec::new();
    let cases = [
        (12, 3, "exact", PipelineKind::General),
        (12, 3, "exact", PipelineKind::Exact),
        (16, 2, "alphabeta:1/3,1/3;2/3,2/3", PipelineKind::General),
        (10, 3, "coverage:D=1;alpha=1/3", PipelineKind::General),
        (20, 4, "exact", PipelineKind::Exact),
    ];
    for (i, &(n, k, policy, pipeline)) in cases.iter().enumerate() {
        let input = write_fixture(dir.path(), &mut rng, n);
        let mut cfg = config(&input, k, policy, pipeline, 40 + i as u64);
        let first = run(&cfg).unwrap().to_json();
        let second = run(&cfg).unwrap().to_json();
        cfg.threads = 2;
        let threaded = run(&cfg).unwrap().to_json();
        compared += 2;
        if first != second || first != threaded {
            differing.push(format!("library case {i}"));
        }

        let outs: Vec<Vec<u8>> = (0..2)
            .map(|t| {
                let out = dir.path().join(format!("out_{i}_{t}.json"));
                let status = Command::new(env!("CARGO_BIN_EXE_fairmed"))
                    .args(["--input", input.to_str().unwrap()])
                    .args(["--k", &k.to_string(), "--policy", policy, "--seed", &(40 + i).to_string()])
                    .args(["--pipeline", if pipeline == PipelineKind::Exact { "exact" } else { "general" }])
                    .args(["--out", out.to_str().unwrap()])
                    .status()
                    .unwrap();
                assert!(status.success());
                std::fs::read(out).unwrap()
            })
            .collect();
        compared += 1;
        if outs[0] != outs[1] || outs[0] != first.as_bytes() {
            differing.push(format!("binary case {i}"));
        }
    }
    outcome(
        differing.is_empty(),
        format!("{compared} document pairs compared (library, 2 threads, binary), differing: {differing:?}"),
    )
}

fn main() {
    let started = Instant::now();
    let mut corpus = Vec::new();
    let mut results: Vec<(usize, Outcome)> = Vec::new();
    let timed = |f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let mut o = f();
        o.detail.push_str(&format!(" [{:.1}s]", t.elapsed().as_secs_f64()));
        o
    };
    results.push((1, timed(&mut criterion_1)));
    results.push((3, timed(&mut criterion_3)));
    results.push((4, timed(&mut criterion_4)));
    results.push((6, timed(&mut || criterion_6(&mut corpus))));
    results.push((7, timed(&mut criterion_7)));
    results.push((8, timed(&mut || criterion_8(&mut corpus))));
    results.push((9, timed(&mut || criterion_9(&mut corpus))));
    results.push((10, timed(&mut criterion_10)));
    results.push((2, criterion_2(&corpus)));
    results.push((5, criterion_5(&corpus)));
    results.sort_by_key(|(i, _)| *i);

    let failed: BTreeSet<usize> = results.iter().filter(|(_, o)| !o.pass).map(|(i, _)| *i).collect();
    for (i, o) in &results {
        println!("criterion {i}: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        results.len() - failed.len(),
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
