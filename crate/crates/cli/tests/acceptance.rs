//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use sha2::{Digest, Sha256};

use driftlab::distribution::sample_flat_dirichlet;
use driftlab::fixtures::{build_fixture, FIXTURE_NAMES};
use driftlab::generator::{generate_replicates, ground_truth};
use driftlab::harness::{
    aggregate_curves, evaluate_replicates, prequential_evaluate, response_ordering, sign_test, LookupTableClassifier,
};
use driftlab::measures::{hellinger_covariate_paper, hellinger_posterior_paper, magnitude, path_length};
use driftlab::rng::DriftRng;
use driftlab::taxonomy::{classify_trajectory, is_probabilistic, subject_predicates};
use driftlab::{
    AttributeSchema, ConceptTrajectory, CovariateDistribution, DistanceFunction, DriftError, DriftKind, DriftSpec,
    JointConcept, Law, LearnerKind, PiecewiseLinear, PosteriorTable, Segment,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    check(took < limit, || format!("took {took:.1?}, limit {limit:?}"))?;
    Ok(took)
}

fn spec(kind: DriftKind, target: f64, replicates: usize) -> DriftSpec {
    DriftSpec {
        kind,
        target_magnitude: target,
        replicate_count: replicates,
        ..DriftSpec::default()
    }
}

fn class_drift_exactness() -> Outcome {
    let started = Instant::now();
    let targets = [0.0, 0.25, 0.5, 0.75, 1.0];
    for target in targets {
        let s = spec(DriftKind::PureClass, target, 100);
        let expected = (target * 243.0f64).round() / 243.0;
        for r in 0..100 {
            let t = ground_truth(&s, r).map_err(|e| e.to_string())?;
            let d = hellinger_posterior_paper(t.before().posterior(), t.after().posterior()).map_err(|e| e.to_string())?;
            check((d - expected).abs() <= 1e-15, || format!("target {target} replicate {r}: {d} != {expected}"))?;
        }
    }
    let took = within(Duration::from_secs(5), started)?;
    Ok(format!("5 targets x 100 replicates exact to 1e-15 in {took:.2?}"))
}

fn covariate_drift_tolerance() -> Outcome {
    let started = Instant::now();
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    let mut max_restarts = 0;
    for target in [0.1, 0.3, 0.5] {
        let s = spec(DriftKind::PureCovariate, target, 100);
        for r in 0..100 {
            match ground_truth(&s, r) {
                Ok(t) => {
                    let d = hellinger_covariate_paper(t.before().covariates(), t.after().covariates())
                        .map_err(|e| e.to_string())?;
                    worst = worst.max((d - target).abs());
                    max_restarts = max_restarts.max(t.restarts);
                    if (d - target).abs() > 1e-3 || t.restarts > 20 {
                        failures.push(format!("target {target} replicate {r}: {d}, {} restarts", t.restarts));
                    }
                }
                Err(e) => failures.push(format!("target {target} replicate {r}: {e}")),
            }
        }
    }
    check(failures.is_empty(), || format!("{} failures: {}", failures.len(), failures.join("; ")))?;
    let took = within(Duration::from_secs(30), started)?;
    Ok(format!(
        "300 searches, worst error {worst:.2e}, most restarts {max_restarts}, in {took:.2?}"
    ))
}

fn purity() -> Outcome {
    let mut pairs = 0;
    for (kind, targets) in [
        (DriftKind::PureClass, [0.25, 0.5, 1.0]),
        (DriftKind::PureCovariate, [0.1, 0.3, 0.5]),
    ] {
        for target in targets {
            let s = spec(kind, target, 100);
            for r in 0..100 {
                let t = ground_truth(&s, r).map_err(|e| e.to_string())?;
                let (a, b) = (t.before(), t.after());
                let f = subject_predicates(a, b, 1e-12).map_err(|e| e.to_string())?;
                let ok = match kind {
                    DriftKind::PureClass => {
                        a.covariates() == b.covariates() && f.pure_class_drift && !f.covariate_drift
                    }
                    _ => a.posterior() == b.posterior() && f.pure_covariate_drift && !f.class_drift,
                };
                check(ok, || format!("{kind} target {target} replicate {r} not pure"))?;
                pairs += 1;
            }
        }
    }
    Ok(format!("{pairs} generated pairs bit-identical on the untouched factor"))
}

fn bayes_optimal_zero_error() -> Outcome {
    let s = DriftSpec {
        length: 200_000,
        drift_time: 100_000,
        replicate_count: 1,
        ..spec(DriftKind::PureClass, 0.5, 1)
    };
    let g = &generate_replicates(&s).map_err(|e| e.to_string())?[0];
    let (pre, post) = g.records.split_at(100_000);
    let mut mistakes = 0.0;
    for (concept, part) in [(g.truth.before(), pre), (g.truth.after(), post)] {
        let mut l = LookupTableClassifier::from_posterior(concept);
        let c = prequential_evaluate(&mut l, part, 1000).map_err(|e| e.to_string())?;
        mistakes += c.points.iter().map(|p| p.error * p.n as f64).sum::<f64>();
    }
    check(mistakes == 0.0, || format!("{mistakes} mistakes"))?;
    Ok("0 mistakes on 10^5 instances from each concept".into())
}

fn soft_concept(schema: &AttributeSchema, rng: &mut DriftRng) -> JointConcept {
    let cov = CovariateDistribution::independent(
        schema,
        (0..schema.n_attributes())
            .map(|_| sample_flat_dirichlet(schema.arity(), rng))
            .collect(),
    )
    .unwrap();
    let rows = (0..schema.cell_count())
        .map(|_| sample_flat_dirichlet(schema.n_classes(), rng))
        .collect();
    JointConcept::new(*schema, cov, PosteriorTable::new(schema, rows).unwrap()).unwrap()
}

fn random_concept(schema: &AttributeSchema, rng: &mut DriftRng) -> JointConcept {
    match rng.gen_range(0..3) {
        0 => JointConcept::sample(schema, rng),
        1 => soft_concept(schema, rng),
        // shares covariates or posterior with a fresh concept, so the
        // restricted distances also see zero and near-zero pairs
        _ => {
            let a = JointConcept::sample(schema, rng);
            a.with_covariates(CovariateDistribution::uniform(schema)).unwrap()
        }
    }
}

fn random_trajectory(rng: &mut DriftRng) -> ConceptTrajectory {
    let schema = AttributeSchema::new(2, 3, 2).unwrap();
    let frames = rng.gen_range(2..6);
    let concepts: Vec<JointConcept> = (0..frames).map(|_| random_concept(&schema, rng)).collect();
    let mut pos: Vec<f64> = (1..frames - 1).map(|_| rng.gen_range(0.05..0.95)).collect();
    pos.sort_by(f64::total_cmp);
    pos.dedup();
    let mut keyframes = vec![(0.0, concepts[0].clone())];
    keyframes.extend(pos.iter().zip(&concepts[1..]).map(|(s, c)| (*s, c.clone())));
    keyframes.push((1.0, concepts[frames - 1].clone()));
    ConceptTrajectory::new(vec![
        Segment::new(0.0, 2.0, Law::Constant(concepts[0].clone())),
        Segment::new(2.0, 10.0, Law::Keyframes(keyframes)),
    ])
    .unwrap()
}

fn measure_properties() -> Outcome {
    let e = |e: DriftError| e.to_string();
    let mut rng = DriftRng::seed_from_u64(5);
    let schema = AttributeSchema::benchmark();
    for i in 0..10_000 {
        let (a, b, c) = (
            random_concept(&schema, &mut rng),
            random_concept(&schema, &mut rng),
            random_concept(&schema, &mut rng),
        );
        for d in DistanceFunction::ALL.into_iter().filter(|d| d.is_metric()) {
            let (ab, ba) = (d.distance(&a, &b).map_err(e)?, d.distance(&b, &a).map_err(e)?);
            let (ac, bc) = (d.distance(&a, &c).map_err(e)?, d.distance(&b, &c).map_err(e)?);
            check(d.distance(&a, &a).map_err(e)? == 0.0, || format!("{d}: D(a,a) != 0 at triple {i}"))?;
            check((ab - ba).abs() <= 1e-12, || format!("{d}: asymmetric at triple {i}"))?;
            check(ac <= ab + bc + 1e-12, || format!("{d}: triangle fails at triple {i}"))?;
        }
    }
    for i in 0..1000 {
        let tr = random_trajectory(&mut rng);
        for d in DistanceFunction::ALL {
            let m = magnitude(&tr, 0.0, 10.0, d).map_err(e)?;
            let p = path_length(&tr, 0.0, 10.0, d, 256).map_err(e)?;
            check(p >= m - 1e-12, || format!("{d}: path {p} < magnitude {m} on trajectory {i}"))?;
        }
    }
    // mixtures between independent concepts, and between concepts that
    // share their covariates or their posterior
    let mut worst = vec![(0.0f64, 0.0f64); DistanceFunction::ALL.len()];
    for i in 0..100 {
        let a = JointConcept::sample(&schema, &mut rng);
        let c = JointConcept::sample(&schema, &mut rng);
        let b = match i % 4 {
            0 | 1 => c,
            2 => a.with_posterior(c.posterior().clone()).map_err(e)?,
            _ => a.with_covariates(c.covariates().clone()).map_err(e)?,
        };
        let mut pts = vec![(0.0, 0.0)];
        let mut f = 0.0;
        for s in [0.25, 0.5, 0.75] {
            f = rng.gen_range(f..1.0);
            pts.push((s, f));
        }
        pts.push((1.0, 1.0));
        for weight in [PiecewiseLinear::linear(), PiecewiseLinear::new(pts).unwrap()] {
            let tr = ConceptTrajectory::new(vec![Segment::new(
                0.0,
                1.0,
                Law::Mixture {
                    from: a.clone(),
                    to: b.clone(),
                    weight,
                },
            )])
            .unwrap();
            for (d, w) in DistanceFunction::ALL.into_iter().zip(&mut worst) {
                let gap = (path_length(&tr, 0.0, 1.0, d, 2048).map_err(e)? - path_length(&tr, 0.0, 1.0, d, 1024).map_err(e)?)
                    .abs();
                if i % 4 < 2 {
                    w.0 = w.0.max(gap);
                } else {
                    w.1 = w.1.max(gap);
                }
            }
        }
    }
    let gaps: Vec<String> = DistanceFunction::ALL
        .iter()
        .zip(&worst)
        .map(|(d, w)| format!("{d} {:.1e}/{:.1e}", w.0, w.1))
        .collect();
    let gaps = format!(
        "largest grid 2048 vs 1024 gap, independent/shared-factor endpoints: {}",
        gaps.join(", ")
    );
    check(worst.iter().all(|w| w.0.max(w.1) < 1e-4), || gaps.clone())?;
    Ok(format!(
        "metric axioms on 10^4 triples, path >= magnitude on 10^3 trajectories, {gaps}"
    ))
}

fn fig1_disambiguation() -> Outcome {
    let mut labels = Vec::new();
    for name in FIXTURE_NAMES.iter().filter(|n| n.starts_with("fig1-")) {
        let f = build_fixture(name).map_err(|e| e.to_string())?;
        let r = classify_trajectory(&f.trajectory, f.distance, &f.params, 1024, 1.0).map_err(|e| e.to_string())?;
        check(r.episodes.len() == 1, || format!("{name}: {} episodes", r.episodes.len()))?;
        let got = (r.episodes[0].labels.gradual, r.episodes[0].labels.incremental);
        check(Some(got) == f.expected_shape, || {
            format!("{name}: (gradual, incremental) = {got:?}, expected {:?}", f.expected_shape)
        })?;
        let tf = |b: bool| if b { 'T' } else { 'F' };
        labels.push(format!("{}({},{})", name.trim_start_matches("fig1-"), tf(got.0), tf(got.1)));
    }
    Ok(format!("nu=10 mu=0.1: {}", labels.join(" ")))
}

fn probabilistic_recovery() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in ["fig1-top-left", "fig1-top-center", "probabilistic-sensor-swap"] {
        let f = build_fixture(name).map_err(|e| e.to_string())?;
        let r = classify_trajectory(&f.trajectory, f.distance, &f.params, 1024, 1.0).map_err(|e| e.to_string())?;
        let seg = &f.trajectory.segments()[1];
        let Law::Mixture { weight, .. } = &seg.law else {
            return Err(format!("{name} is not a mixture"));
        };
        let fit = is_probabilistic(&f.trajectory, &r.episodes[0], &f.params, 100).map_err(|e| e.to_string())?;
        check(fit.is_probabilistic, || format!("{name}: rejected, residual {}", fit.max_residual))?;
        for &(s, w) in weight.points() {
            let t = seg.start + s * seg.length();
            let got = fit
                .recovered_f
                .iter()
                .find(|(ft, _)| (ft - t).abs() < 1e-9)
                .ok_or_else(|| format!("{name}: no fit at breakpoint {t}"))?;
            worst = worst.max((got.1 - w).abs());
        }
    }
    check(worst <= 1e-6, || format!("breakpoint error {worst}"))?;
    let f = build_fixture("posterior-cell-flip").map_err(|e| e.to_string())?;
    let r = classify_trajectory(&f.trajectory, f.distance, &f.params, 1024, 1.0).map_err(|e| e.to_string())?;
    let fit = is_probabilistic(&f.trajectory, &r.episodes[0], &f.params, 100).map_err(|e| e.to_string())?;
    check(!fit.is_probabilistic && fit.max_residual > f.params.probabilistic_tol, || {
        format!("cell flip accepted, residual {}", fit.max_residual)
    })?;
    Ok(format!(
        "breakpoints recovered to {worst:.1e}; cell-by-cell flip rejected with residual {:.3}",
        fit.max_residual
    ))
}

fn naive_bayes_response_ordering() -> Outcome {
    let started = Instant::now();
    let mut by_mag = Vec::new();
    for m in [0.25, 0.5, 0.75, 1.0] {
        let streams = generate_replicates(&spec(DriftKind::PureClass, m, 20)).map_err(|e| e.to_string())?;
        let curves = evaluate_replicates(&streams, |g| LearnerKind::NaiveBayes.build(*g.truth.trajectory.schema(), 1.0), 1000)
            .map_err(|e| e.to_string())?;
        by_mag.push((m, aggregate_curves(&curves).map_err(|e| e.to_string())?));
    }
    let o = response_ordering(&by_mag, 10, 0.02).map_err(|e| e.to_string())?;
    let jumps: Vec<String> = o.entries.iter().map(|e| format!("{}:{:.3}", e.magnitude, e.jump)).collect();
    check(o.jump_strictly_increasing, || format!("jumps not increasing: {}", jumps.join(" ")))?;
    let took = within(Duration::from_secs(120), started)?;
    Ok(format!("mean jumps {} in {took:.1?}", jumps.join(" ")))
}

fn lookup_ignores_covariate_drift(bin: &Path, tmp: &Path) -> Outcome {
    let mut notes = Vec::new();
    for m in [0.1, 0.3, 0.5] {
        let streams = generate_replicates(&spec(DriftKind::PureCovariate, m, 20)).map_err(|e| e.to_string())?;
        let (mut cold, mut warm) = (0.0, 0.0);
        for g in &streams {
            for (seeded, total) in [(false, &mut cold), (true, &mut warm)] {
                // seeded: every cell already observed once before the stream starts
                let mut l = if seeded {
                    LookupTableClassifier::from_posterior(g.truth.before())
                } else {
                    LookupTableClassifier::new(*g.truth.trajectory.schema())
                };
                let c = prequential_evaluate(&mut l, &g.records, 1000).map_err(|e| e.to_string())?;
                *total += (c.points[10].error - c.points[9].error) / streams.len() as f64;
            }
        }
        check(warm.abs() < 0.02, || format!("magnitude {m}: seeded jump {warm}"))?;
        check(cold < 0.02, || format!("magnitude {m}: jump {cold}"))?;
        notes.push(format!("{m}:{cold:.4}/{warm:.4}"));
    }
    // the same learner interface, served by another process
    let out = tmp.join("echo");
    let status = Command::new(bin)
        .args(["evaluate", "--quiet", "--replicates", "2", "--length", "3000", "--drift-time", "1000"])
        .args(["--magnitudes", "0.5", "--learners", "external,majority"])
        .arg("--external-learner")
        .arg(format!("{} echo-learner", bin.display()))
        .arg("--output")
        .arg(&out)
        .status()
        .map_err(|e| e.to_string())?;
    check(status.success(), || format!("external evaluate exited with {status}"))?;
    let curves = fs::read_to_string(out.join("curves.tsv")).map_err(|e| e.to_string())?;
    let rows = curves.lines().filter(|l| l.contains("\texternal\t")).count();
    check(rows == 6, || format!("expected 6 external curve rows, found {rows}"))?;
    Ok(format!(
        "mean jump unseeded/seeded by magnitude {}; echo learner ran over stdin/stdout ({rows} curve rows)",
        notes.join(" ")
    ))
}

fn binomial_tail_oracle(wins: u64, losses: u64) -> f64 {
    let n = wins + losses;
    let m = wins.max(losses);
    let mut coef = BigUint::one();
    let mut tail = BigUint::zero();
    for k in 0..=n {
        if k >= m {
            tail += &coef;
        }
        coef = coef * BigUint::from(n - k) / BigUint::from(k + 1);
    }
    let scaled = (tail << 80usize) / (BigUint::one() << n as usize);
    scaled.to_f64().unwrap() / 2f64.powi(80)
}

fn sign_test_exactness() -> Outcome {
    let p10 = sign_test(10, 0);
    check(p10 == 2f64.powi(-10), || format!("(10,0): {p10}"))?;
    let p = sign_test(126, 75);
    let oracle = binomial_tail_oracle(126, 75);
    check((p - oracle).abs() <= 1e-10, || format!("(126,75): {p} vs oracle {oracle}"))?;
    Ok(format!("(10,0) = 2^-10 exactly; (126,75) = {p:.6e}, oracle {oracle:.6e}"))
}

fn digest_dir(dir: &Path) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let p = e.map_err(|e| e.to_string())?.path();
        let bytes = fs::read(&p).map_err(|e| e.to_string())?;
        out.push((
            p.file_name().unwrap().to_string_lossy().into_owned(),
            hex::encode(Sha256::digest(&bytes)),
        ));
    }
    out.sort();
    Ok(out)
}

fn run_stdout(bin: &Path, args: &[&str]) -> Result<String, String> {
    let o = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
    check(o.status.success(), || {
        format!("{args:?} failed: {}", String::from_utf8_lossy(&o.stderr))
    })?;
    Ok(hex::encode(Sha256::digest(&o.stdout)))
}

fn reproducibility(bin: &Path, tmp: &Path) -> Outcome {
    let small = ["--replicates", "3", "--length", "3000", "--drift-time", "1000"];
    let mut compared = 0;
    for cmd in ["generate", "evaluate"] {
        let mut digests = Vec::new();
        for run in 0..2 {
            let dir = tmp.join(format!("{cmd}-{run}"));
            let status = Command::new(bin)
                .arg(cmd)
                .arg("--quiet")
                .args(small)
                .arg("--output")
                .arg(&dir)
                .status()
                .map_err(|e| e.to_string())?;
            check(status.success(), || format!("{cmd} exited with {status}"))?;
            run_stdout(bin, &["report", dir.to_str().unwrap()])?;
            digests.push(digest_dir(&dir)?);
        }
        check(digests[0] == digests[1], || format!("{cmd}: reruns differ"))?;
        compared += digests[0].len();
    }
    let truth = tmp.join("generate-0").join("truth-000.txt");
    let truth = truth.to_str().unwrap();
    for args in [
        vec!["measure", "--trajectory", truth, "-t", "0", "-u", "3000"],
        vec!["classify", "--trajectory", truth],
        vec!["classify", "--fixture", "fig1-bottom-right"],
    ] {
        let a = run_stdout(bin, &args)?;
        let b = run_stdout(bin, &args)?;
        check(a == b, || format!("{args:?}: reruns differ"))?;
        compared += 1;
    }
    Ok(format!("{compared} outputs byte-identical across reruns (sha256)"))
}

fn main() {
    let bin = Path::new(env!("CARGO_BIN_EXE_driftlab"));
    let tmp = tempfile::tempdir().expect("temp dir");
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("class-drift magnitude exactness", Box::new(class_drift_exactness)),
        ("covariate-drift magnitude tolerance", Box::new(covariate_drift_tolerance)),
        ("purity of generated drift", Box::new(purity)),
        ("Bayes-optimal zero error", Box::new(bayes_optimal_zero_error)),
        ("measure properties", Box::new(measure_properties)),
        ("gradual/incremental disambiguation", Box::new(fig1_disambiguation)),
        ("probabilistic recovery", Box::new(probabilistic_recovery)),
        ("desk-scale response ordering", Box::new(naive_bayes_response_ordering)),
        (
            "covariate-drift insensitivity of LookupTable",
            Box::new(|| lookup_ignores_covariate_drift(bin, tmp.path())),
        ),
        ("sign test", Box::new(sign_test_exactness)),
        ("reproducibility", Box::new(|| reproducibility(bin, tmp.path()))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = run();
        let took = started.elapsed();
        match outcome {
            Ok(detail) => println!("PASS  criterion {:>2}: {name}: {detail} [{took:.1?}]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL  criterion {:>2}: {name}: {why} [{took:.1?}]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
