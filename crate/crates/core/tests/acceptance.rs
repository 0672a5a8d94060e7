//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if any
//! criterion fails. Run with `cargo test --test acceptance -- --nocapture`.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use ctxprob::accardi::{accardi_check, accardi_slack, TripleParams, Verdict};
use ctxprob::config::{Tolerances, DEFAULT_EPS_LP, DEFAULT_TOL_B, DEFAULT_TOL_EQ};
use ctxprob::greechie::{enumerate_two_valued_states, find_state, validate, ContextHypergraph};
use ctxprob::kolmo::{build_problem, decide_feasibility, JointFeasibilityProblem};
use ctxprob::observable::ObservableSet;
use ctxprob::pers::{estimate_pers, PersAnalysis, SamplingMode, SamplingPlan};
use ctxprob::prob::{PairSource, TransitionMatrix};
use ctxprob::report::{deterministic_body, ReportFormat};
use ctxprob::synth::{
    gen_classical, gen_quantum, ClassicalDistribution, ClassicalModelSpec, QubitModelSpec,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn grid() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

fn symmetric_problem(p: f64, q: f64, r: f64) -> JointFeasibilityProblem {
    let set = ObservableSet::from_ids(["A", "B", "C"], "grid").unwrap();
    let ms = [
        TransitionMatrix::symmetric("B", "A", p, DEFAULT_TOL_B),
        TransitionMatrix::symmetric("C", "B", q, DEFAULT_TOL_B),
        TransitionMatrix::symmetric("A", "C", r, DEFAULT_TOL_B),
    ];
    build_problem(&ms, &set, DEFAULT_EPS_LP).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let (mut compared, mut agree, mut excluded) = (0, 0, 0);
    let mut first_mismatch = None;
    for &p in &grid() {
        for &q in &grid() {
            for &r in &grid() {
                let params = TripleParams::from_pqr(["A", "B", "C"], p, q, r);
                let verdict = accardi_check(&params, DEFAULT_TOL_EQ);
                if verdict.slack.abs() <= 1e-6 {
                    excluded += 1;
                    continue;
                }
                let lp = match decide_feasibility(&symmetric_problem(p, q, r)) {
                    Ok(lp) => lp,
                    Err(e) => return outcome(false, format!("solver error at ({p},{q},{r}): {e}")),
                };
                compared += 1;
                if lp.feasible == (verdict.verdict == Verdict::Classical) {
                    agree += 1;
                } else if first_mismatch.is_none() {
                    first_mismatch = Some((p, q, r));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(
        agree == compared && elapsed <= Duration::from_secs(10),
        format!(
            "{agree}/{compared} agree, {excluded} boundary points excluded, {:.2}s, first mismatch {first_mismatch:?}",
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let (mut total, mut invariant) = (0, 0);
    for &p in &grid() {
        for &q in &grid() {
            for &r in &grid() {
                let v = [p, q, r];
                let base = accardi_check(&TripleParams::from_pqr(["A", "B", "C"], p, q, r), DEFAULT_TOL_EQ).verdict;
                let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
                total += 1;
                if perms.iter().all(|s| {
                    let t = TripleParams::from_pqr(["A", "B", "C"], v[s[0]], v[s[1]], v[s[2]]);
                    accardi_check(&t, DEFAULT_TOL_EQ).verdict == base
                }) {
                    invariant += 1;
                }
            }
        }
    }
    outcome(invariant == total, format!("{invariant}/{total} grid points permutation-invariant"))
}

fn exhaustive(source: &dyn PairSource, seed: u64) -> PersAnalysis {
    let plan = SamplingPlan {
        num_triples: None,
        mode: SamplingMode::Exhaustive,
        seed,
        tolerances: Tolerances::default(),
    };
    estimate_pers(source, source.observable_set(), &plan).unwrap()
}

fn criterion_3() -> Outcome {
    let sample = gen_classical(&ClassicalModelSpec {
        observables: 6,
        distribution: ClassicalDistribution::Random { seed: 2024 },
        records: 100_000,
        seed: 11,
    })
    .unwrap();

    let exact = exhaustive(&sample.exact, 0);
    let e = &exact.estimate;
    let exact_accardi_ok = exact
        .triples
        .iter()
        .all(|t| t.accardi.verdict != Verdict::Contextual);
    let exact_ok = e.sampled == 20 && e.decided == 20 && exact_accardi_ok && e.lp_violations == 0 && e.pers_lp == 0.0;

    let empirical = exhaustive(&sample.dataset, 0);
    let m = &empirical.estimate;
    let boundary_only = empirical.triples.iter().filter(|t| !t.lp_feasible).all(|t| {
        t.params.applicable && t.accardi.slack.abs() < 0.02
    });
    let empirical_ok = m.decided == 20 && (m.pers_lp == 0.0 || boundary_only);

    outcome(
        exact_ok && empirical_ok,
        format!(
            "exact: {}/{} decided, {} applicable, {} Accardi violations, pers_lp={}; empirical N=100000: {}/{} decided, pers_lp={}",
            e.decided, e.sampled, e.applicable, e.accardi_violations, e.pers_lp, m.decided, m.sampled, m.pers_lp
        ),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let sample = gen_quantum(&QubitModelSpec {
        angles: vec![0.0, 120.0, 240.0],
        pairs: None,
        trials: 100_000,
        seed: 7,
    })
    .unwrap();

    let exact = exhaustive(&sample.exact, 0);
    let Some(t) = exact.triples.first() else {
        return outcome(false, "exact trine triple was skipped");
    };
    let pqr_ok = [t.params.p, t.params.q, t.params.r].iter().all(|x| (x - 0.25).abs() <= 1e-12);
    let slack_ok = (t.accardi.slack + 0.25).abs() <= 1e-12;
    let lp_ok = !t.lp_feasible && t.lp_residual > 1e-3;
    let pers_ok = exact.estimate.pers_accardi == 1.0 && exact.estimate.sampled == 1;

    let mut worst: f64 = 0.0;
    let ids = ["Q1", "Q2", "Q3"];
    for (i, a) in ids.iter().enumerate() {
        for b in &ids[i + 1..] {
            let m = sample.dataset.transition(a, b, &Tolerances::default()).unwrap();
            for (x, row) in m.entries.iter().enumerate() {
                worst = worst.max((row[x] - 0.25).abs());
            }
        }
    }
    let empirical_ok = worst <= 0.01;
    let elapsed = start.elapsed();
    outcome(
        pqr_ok && slack_ok && lp_ok && pers_ok && empirical_ok && elapsed <= Duration::from_secs(5),
        format!(
            "p,q,r=({},{},{}), slack={}, lp_feasible={}, max_violation={}, pers_accardi={}, max |p̂-0.25|={worst:.4}, {:.2}s",
            t.params.p,
            t.params.q,
            t.params.r,
            t.accardi.slack,
            t.lp_feasible,
            t.lp_residual,
            exact.estimate.pers_accardi,
            elapsed.as_secs_f64()
        ),
    )
}

fn half_state(h: &ContextHypergraph) -> Result<bool, String> {
    let s = find_state(h).map_err(|e| e.to_string())?.ok_or("no state")?;
    Ok(s.state.values.values().all(|v| (v - 0.5).abs() <= 1e-9))
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let single = ContextHypergraph::new(["a", "b"], [vec!["a", "b"]]).unwrap();
    let triangle =
        ContextHypergraph::new(["a", "b", "c"], [vec!["a", "b"], vec!["b", "c"], vec!["c", "a"]]).unwrap();
    let pentagon = ContextHypergraph::cycle(5);

    let check = || -> Result<Vec<String>, String> {
        let mut notes = Vec::new();
        for (name, h) in [("single", &single), ("triangle", &triangle), ("5-cycle", &pentagon)] {
            if !validate(h).is_valid() {
                return Err(format!("{name} failed validation"));
            }
        }
        let n1 = enumerate_two_valued_states(&single, 1000).map_err(|e| e.to_string())?.len();
        let n3 = enumerate_two_valued_states(&triangle, 1000).map_err(|e| e.to_string())?.len();
        let n5 = enumerate_two_valued_states(&pentagon, 1000).map_err(|e| e.to_string())?.len();
        let h3 = half_state(&triangle)?;
        let h5 = half_state(&pentagon)?;
        notes.push(format!("single: {n1} two-valued"));
        notes.push(format!("triangle: half state {h3}, {n3} two-valued"));
        notes.push(format!("5-cycle: half state {h5}, {n5} two-valued"));
        if n1 == 2 && n3 == 0 && n5 == 0 && h3 && h5 {
            Ok(notes)
        } else {
            Err(notes.join("; "))
        }
    };
    let result = check();
    let elapsed = start.elapsed();
    match result {
        Ok(notes) => outcome(
            elapsed <= Duration::from_secs(1),
            format!("{}; {:.3}s", notes.join("; "), elapsed.as_secs_f64()),
        ),
        Err(e) => outcome(false, e),
    }
}

fn random_joint(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..8).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut witness_ok = 0;
    let mut worst_miss: f64 = 0.0;
    for _ in 0..1000 {
        let joint = random_joint(&mut rng);
        let mut problem = JointFeasibilityProblem::new(3, 2, DEFAULT_EPS_LP).unwrap();
        for (a, b) in [(0, 1), (1, 2), (0, 2)] {
            let table = problem.marginalize(&joint, a, b);
            problem.add_pair(a, b, table).unwrap();
        }
        let Ok(result) = decide_feasibility(&problem) else { continue };
        let Some(w) = result.witness.filter(|_| result.feasible) else { continue };
        let miss = problem
            .pair_marginals()
            .iter()
            .flat_map(|(&(a, b), target)| {
                let m = problem.marginalize(&w, a, b);
                m.into_iter()
                    .flatten()
                    .zip(target.iter().flatten().copied().collect::<Vec<_>>())
                    .map(|(x, y)| (x - y).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0, f64::max);
        let nonneg = w.iter().all(|&x| x >= -DEFAULT_EPS_LP);
        worst_miss = worst_miss.max(miss);
        if miss <= DEFAULT_EPS_LP && nonneg {
            witness_ok += 1;
        }
    }

    let mut infeasible_ok = 0;
    let mut min_residual = f64::INFINITY;
    let mut drawn = 0;
    while drawn < 1000 {
        let (p, q, r): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
        let (_, _, slack) = accardi_slack(p, q, r);
        if slack >= -1e-6 {
            continue;
        }
        drawn += 1;
        if let Ok(res) = decide_feasibility(&symmetric_problem(p, q, r)) {
            min_residual = min_residual.min(res.max_violation);
            if !res.feasible && res.max_violation > 1e-6 {
                infeasible_ok += 1;
            }
        }
    }
    outcome(
        witness_ok == 1000 && infeasible_ok == 1000,
        format!(
            "{witness_ok}/1000 witnesses valid (worst miss {worst_miss:.2e}); {infeasible_ok}/1000 violating problems with residual > 1e-6 (min {min_residual:.2e})"
        ),
    )
}

fn run_pers(input: &Path, format: &str, threads: usize) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_ctxprob"))
        .arg("pers")
        .arg("--input")
        .arg(input)
        .args(["--input-format", "joint", "--triples", "40", "--seed", "99"])
        .args(["--format", format, "--threads", &threads.to_string(), "--run-meta"])
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

fn criterion_7() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let sample = gen_classical(&ClassicalModelSpec {
        observables: 9,
        distribution: ClassicalDistribution::Random { seed: 5 },
        records: 20_000,
        seed: 3,
    })
    .unwrap();
    let input = dir.path().join("records");
    std::fs::write(&input, sample.dataset.to_text()).unwrap();

    let mut notes = Vec::new();
    let mut passed = true;
    for (format, kind) in [("json", ReportFormat::Json), ("csv", ReportFormat::Csv)] {
        let runs: Result<Vec<String>, String> =
            [1, 1, 8, 8].iter().map(|&t| run_pers(&input, format, t)).collect();
        match runs {
            Ok(runs) => {
                let bodies: Vec<String> = runs.iter().map(|r| deterministic_body(r, kind)).collect();
                let same = !bodies[0].is_empty() && bodies.iter().all(|b| *b == bodies[0]);
                passed &= same;
                notes.push(format!("{format}: {} identical across repeats and 1/8 threads", same));
            }
            Err(e) => {
                passed = false;
                notes.push(format!("{format}: run failed: {e}"));
            }
        }
    }
    outcome(passed, notes.join("; "))
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 7] = [
        ("1 Accardi-LP equivalence on 21^3 grid", criterion_1),
        ("2 permutation symmetry of the Accardi verdict", criterion_2),
        ("3 classical soundness T=6", criterion_3),
        ("4 quantum trine", criterion_4),
        ("5 hypergraph fixtures", criterion_5),
        ("6 witness validity and infeasible residuals", criterion_6),
        ("7 deterministic report bodies", criterion_7),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let o = f();
        println!("[{}] {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
