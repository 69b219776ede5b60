use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use driftlab::fixtures::build_fixture;
use driftlab::generator::{generate_replicates, GeneratedStream};
use driftlab::harness::{
    aggregate_curves, evaluate_replicates, response_ordering, sign_test, win_draw_loss, ExternalLearner,
    OnlineLearner,
};
use driftlab::io::{
    curve_records, header_value, measures_record, parse_trajectory, read_stream, taxonomy_report_to_string,
    trajectory_to_string, write_stream, CURVE_COLUMNS, MEASURES_COLUMNS,
};
use driftlab::measures::{drift_rate, measure_interval};
use driftlab::taxonomy::classify_trajectory;
use driftlab::{ConceptTrajectory, ErrorCurve};

use crate::config::{ExperimentConfig, LearnerChoice};

pub const PARTIAL_MARKER: &str = "PARTIAL";
pub const CHECKSUMS: &str = "checksums.tsv";

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn stamp(hash: &str, seed: u64) -> String {
    format!("# config_hash={hash}\n# seed={seed}\n")
}

/// Files written by one command, remembered for the checksum table.
struct RunDir {
    root: PathBuf,
    written: Vec<(String, String)>,
}

impl RunDir {
    fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("cannot create {}", root.display()))?;
        let marker = root.join(PARTIAL_MARKER);
        if marker.exists() {
            fs::remove_file(&marker)?;
        }
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.written.push((name.to_string(), sha256_hex(bytes)));
        Ok(())
    }

    fn finish(mut self, hash: &str, seed: u64) -> Result<()> {
        self.written.sort();
        let mut out = stamp(hash, seed);
        out.push_str("file\tsha256\n");
        for (name, sum) in &self.written {
            let _ = writeln!(out, "{name}\t{sum}");
        }
        fs::write(self.root.join(CHECKSUMS), out)?;
        Ok(())
    }
}

/// Leave a marker saying the directory holds an incomplete run.
pub fn mark_partial(dir: &Path, err: &anyhow::Error) {
    if dir.is_dir() {
        let _ = fs::write(dir.join(PARTIAL_MARKER), format!("{err:#}\n"));
    }
}

pub fn cmd_defaults() -> String {
    let mut out = String::new();
    for k in crate::config::KEYS {
        let _ = writeln!(out, "# {}\n{} = {}", k.help, k.name, k.default);
    }
    out
}

pub fn cmd_generate(cfg: &ExperimentConfig) -> Result<()> {
    let spec = cfg.drift_spec(cfg.target_magnitude)?;
    let hash = cfg.hash(&[b"generate"]);
    let mut dir = RunDir::create(&cfg.output)?;
    dir.write("config.txt", format!("{}{}", stamp(&hash, cfg.seed), cfg.canonical()).as_bytes())?;
    let streams = generate_replicates(&spec)?;
    let schema = spec.schema;
    let rendered: Vec<(Vec<u8>, String)> = streams
        .par_iter()
        .map(|g| {
            let header = stream_header(&hash, cfg, g);
            let mut buf = Vec::with_capacity(g.records.len() * 16);
            write_stream(&mut buf, &header, &schema, &g.records)?;
            let mut truth = String::new();
            for (k, v) in &header {
                let _ = writeln!(truth, "# {k}={v}");
            }
            truth.push_str(&trajectory_to_string(&g.truth.trajectory));
            Ok((buf, truth))
        })
        .collect::<Result<_>>()?;
    for (g, (stream, truth)) in streams.iter().zip(rendered) {
        dir.write(&format!("stream-{:03}.csv", g.replicate), &stream)?;
        dir.write(&format!("truth-{:03}.txt", g.replicate), truth.as_bytes())?;
    }
    for g in &streams {
        for w in &g.truth.warnings {
            eprintln!("warning: replicate {}: {w}", g.replicate);
        }
    }
    dir.finish(&hash, cfg.seed)
}

fn stream_header(hash: &str, cfg: &ExperimentConfig, g: &GeneratedStream) -> Vec<(String, String)> {
    let t = &g.truth;
    let s = t.trajectory.schema();
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_else(|| "-".into());
    vec![
        ("config_hash".into(), hash.to_string()),
        ("seed".into(), cfg.seed.to_string()),
        ("replicate".into(), g.replicate.to_string()),
        ("kind".into(), t.kind.to_string()),
        (
            "schema".into(),
            format!("{},{},{}", s.n_attributes(), s.arity(), s.n_classes()),
        ),
        ("drift_time".into(), cfg.drift_time.to_string()),
        ("length".into(), cfg.length.to_string()),
        ("target_magnitude".into(), t.target_magnitude.to_string()),
        ("achieved_magnitude".into(), format!("{:e}", t.achieved_magnitude)),
        ("k".into(), opt(t.k_flipped)),
        ("search_iterations".into(), opt(t.search_iterations)),
        ("restarts".into(), t.restarts.to_string()),
        ("warnings".into(), t.warnings.join("; ")),
    ]
}

/// A trajectory from a manifest file or a named fixture.
pub fn load_trajectory(file: Option<&Path>, fixture: Option<&str>) -> Result<(ConceptTrajectory, Vec<u8>)> {
    match (file, fixture) {
        (Some(f), None) => {
            let bytes = fs::read(f).with_context(|| format!("reading {}", f.display()))?;
            let text = String::from_utf8(bytes.clone()).context("trajectory file is not UTF-8")?;
            let tr = parse_trajectory(&text).with_context(|| format!("in {}", f.display()))?;
            Ok((tr, bytes))
        }
        (None, Some(name)) => {
            let tr = build_fixture(name)?.trajectory;
            Ok((tr, format!("fixture:{name}").into_bytes()))
        }
        _ => bail!("give exactly one of --trajectory or --fixture"),
    }
}

pub fn cmd_measure(cfg: &ExperimentConfig, tr: &ConceptTrajectory, input: &[u8], t: f64, u: f64, rate_at: Option<f64>) -> Result<String> {
    let m = measure_interval(tr, t, u, cfg.distance, cfg.grid)?;
    let hash = cfg.hash(&[b"measure", input, t.to_string().as_bytes(), u.to_string().as_bytes()]);
    let mut out = stamp(&hash, cfg.seed);
    let _ = writeln!(out, "# grid={}", cfg.grid);
    let _ = writeln!(out, "{MEASURES_COLUMNS}");
    let _ = writeln!(out, "{}", measures_record(t, u, cfg.distance.id(), &m));
    if let Some(at) = rate_at {
        let r = drift_rate(tr, at, cfg.rate_n, cfg.distance)?;
        let _ = writeln!(out, "# drift_rate\tt={at}\tn={}\t{r:e}", cfg.rate_n);
    }
    Ok(out)
}

pub fn cmd_classify(cfg: &ExperimentConfig, tr: &ConceptTrajectory, input: &[u8], fixture: Option<&str>) -> Result<String> {
    let (params, distance) = match fixture {
        Some(name) => {
            let f = build_fixture(name)?;
            let d = if cfg.is_explicit("distance") { cfg.distance } else { f.distance };
            (cfg.taxonomy_params(Some(f.params))?, d)
        }
        None => (cfg.taxonomy_params(None)?, cfg.distance),
    };
    let report = classify_trajectory(tr, distance, &params, cfg.grid, cfg.sample_step)?;
    let hash = cfg.hash(&[b"classify", input]);
    let mut out = stamp(&hash, cfg.seed);
    let _ = writeln!(out, "# grid={}\tsample_step={}", cfg.grid, cfg.sample_step);
    out.push_str(&taxonomy_report_to_string(&report));
    Ok(out)
}

fn build_learner(cfg: &ExperimentConfig, which: &LearnerChoice, g: &GeneratedStream) -> driftlab::Result<Box<dyn OnlineLearner>> {
    let schema = *g.truth.trajectory.schema();
    match which {
        LearnerChoice::Builtin(k) => k.build(schema, cfg.alpha),
        LearnerChoice::External => {
            let (prog, args) = cfg.external_learner.split_first().expect("validated");
            Ok(Box::new(ExternalLearner::spawn(schema, prog, args)?))
        }
    }
}

struct FamilyResult {
    magnitude: f64,
    learner: String,
    curves: Vec<ErrorCurve>,
    mean: ErrorCurve,
}

pub fn cmd_evaluate(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate_evaluation()?;
    let hash = cfg.hash(&[b"evaluate"]);
    let mut dir = RunDir::create(&cfg.output)?;
    dir.write("config.txt", format!("{}{}", stamp(&hash, cfg.seed), cfg.canonical()).as_bytes())?;

    let mut results = Vec::new();
    let mut magnitudes_seen = Vec::new();
    for &m in &cfg.magnitudes {
        let spec = cfg.drift_spec(m)?;
        let streams = generate_replicates(&spec)?;
        let achieved: Vec<f64> = streams.iter().map(|g| g.truth.achieved_magnitude).collect();
        magnitudes_seen.push((m, achieved));
        for l in &cfg.learners {
            let curves = evaluate_replicates(&streams, |g| build_learner(cfg, l, g), cfg.window)
                .with_context(|| format!("learner {} at magnitude {m}", l.id()))?;
            let mean = aggregate_curves(&curves)?;
            results.push(FamilyResult {
                magnitude: m,
                learner: l.id().to_string(),
                curves,
                mean,
            });
        }
    }

    let head = stamp(&hash, cfg.seed);
    let mut curves = format!("{head}magnitude\tlearner\t{CURVE_COLUMNS}\n");
    let mut means = format!("{head}magnitude\tlearner\treplicates\twindow\terror\tn\n");
    for r in &results {
        for (i, c) in r.curves.iter().enumerate() {
            for line in curve_records(&i.to_string(), c).lines() {
                let _ = writeln!(curves, "{}\t{}\t{line}", r.magnitude, r.learner);
            }
        }
        for p in &r.mean.points {
            let _ = writeln!(
                means,
                "{}\t{}\t{}\t{}\t{}\t{}",
                r.magnitude, r.learner, r.mean.replicates, p.window, p.error, p.n
            );
        }
    }
    dir.write("curves.tsv", curves.as_bytes())?;
    dir.write("mean_curves.tsv", means.as_bytes())?;

    let drift_window = (cfg.drift_time as usize) / cfg.window;
    let mut ordering = format!(
        "{head}# recovery_eps={} (recovery: windows after the drift until the error stays at most eps above the last pre-drift window)\nlearner\tmagnitude\tpre_error\tjump\trecovery_windows\n",
        cfg.recovery_eps
    );
    let mut verdicts = String::new();
    for l in &cfg.learners {
        let by_mag: Vec<(f64, ErrorCurve)> = results
            .iter()
            .filter(|r| r.learner == l.id())
            .map(|r| (r.magnitude, r.mean.clone()))
            .collect();
        let o = response_ordering(&by_mag, drift_window, cfg.recovery_eps)?;
        for e in &o.entries {
            let rec = e.recovery_windows.map(|w| w.to_string()).unwrap_or_else(|| "never".into());
            let _ = writeln!(ordering, "{}\t{}\t{}\t{}\t{rec}", l.id(), e.magnitude, e.pre_error, e.jump);
        }
        let _ = writeln!(
            verdicts,
            "{}\tjump_strictly_increasing={}\trecovery_non_decreasing={}",
            l.id(),
            o.jump_strictly_increasing,
            o.recovery_non_decreasing
        );
    }
    ordering.push_str("# verdicts\n");
    for line in verdicts.lines() {
        let _ = writeln!(ordering, "# {line}");
    }
    dir.write("ordering.tsv", ordering.as_bytes())?;

    let mut wdl = format!("{head}magnitude\tlearner_a\tlearner_b\twindow\twins_a\tdraws\twins_b\tp_value\n");
    for (i, a) in cfg.learners.iter().enumerate() {
        for b in &cfg.learners[i + 1..] {
            for &m in &cfg.magnitudes {
                let find = |id: &str| results.iter().find(|r| r.learner == id && r.magnitude == m).expect("evaluated");
                let (ra, rb) = (find(a.id()), find(b.id()));
                for (w, c) in win_draw_loss(&ra.curves, &rb.curves)?.iter().enumerate() {
                    let p = sign_test(c.wins_a as u64, c.wins_b as u64);
                    let _ = writeln!(
                        wdl,
                        "{m}\t{}\t{}\t{w}\t{}\t{}\t{}\t{p:e}",
                        a.id(),
                        b.id(),
                        c.wins_a,
                        c.draws,
                        c.wins_b
                    );
                }
            }
        }
    }
    dir.write("wdl.tsv", wdl.as_bytes())?;

    let mut achieved = format!("{head}magnitude\treplicate\tachieved_magnitude\n");
    for (m, a) in &magnitudes_seen {
        for (r, v) in a.iter().enumerate() {
            let _ = writeln!(achieved, "{m}\t{r}\t{v:e}");
        }
    }
    dir.write("achieved.tsv", achieved.as_bytes())?;

    let mut summary = head.clone();
    let _ = writeln!(
        summary,
        "evaluate: kind={} replicates={} length={} drift_time={} window={}",
        cfg.kind, cfg.replicates, cfg.length, cfg.drift_time, cfg.window
    );
    summary.push_str(&verdicts);
    dir.write("summary.txt", summary.as_bytes())?;
    dir.finish(&hash, cfg.seed)
}

fn read_tsv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let file = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut columns = Vec::new();
    let mut rows = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(String::from).collect();
        if columns.is_empty() {
            columns = fields;
        } else {
            rows.push(fields);
        }
    }
    Ok((columns, rows))
}

fn stamp_of(path: &Path) -> Result<(String, String)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut hash = None;
    let mut seed = None;
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(h) = line.strip_prefix("# config_hash=") {
            hash = Some(h.to_string());
        }
        if let Some(s) = line.strip_prefix("# seed=") {
            seed = Some(s.to_string());
        }
    }
    Ok((
        hash.ok_or_else(|| anyhow!("{} has no config hash", path.display()))?,
        seed.ok_or_else(|| anyhow!("{} has no seed", path.display()))?,
    ))
}

/// Verify checksums, cross-check tables and write a summary plus
/// plot-ready tables into the run directory.
pub fn cmd_report(run: &Path) -> Result<String> {
    let sums_path = run.join(CHECKSUMS);
    if !sums_path.exists() {
        bail!("{} holds no completed run (no {CHECKSUMS})", run.display());
    }
    if run.join(PARTIAL_MARKER).exists() {
        bail!("{} holds a partial run", run.display());
    }
    let (hash, seed) = stamp_of(&sums_path)?;
    let (_, sums) = read_tsv(&sums_path)?;
    for row in &sums {
        let bytes = fs::read(run.join(&row[0])).with_context(|| format!("missing {}", row[0]))?;
        if sha256_hex(&bytes) != row[1] {
            bail!("checksum mismatch for {}", row[0]);
        }
    }
    let mut out = stamp(&hash, seed.parse()?);
    let _ = writeln!(out, "# checksums verified for {} files", sums.len());
    let mut plots: Vec<(String, String)> = Vec::new();

    if run.join("mean_curves.tsv").exists() {
        let (_, raw) = read_tsv(&run.join("curves.tsv"))?;
        let (_, means) = read_tsv(&run.join("mean_curves.tsv"))?;
        // (magnitude, learner, window) -> (sum, count)
        let mut acc: BTreeMap<(String, String, usize), (f64, usize)> = BTreeMap::new();
        for r in &raw {
            let e = acc.entry((r[0].clone(), r[1].clone(), r[3].parse()?)).or_default();
            e.0 += r[4].parse::<f64>()?;
            e.1 += 1;
        }
        for m in &means {
            let key = (m[0].clone(), m[1].clone(), m[3].parse()?);
            let (sum, n) = acc.get(&key).ok_or_else(|| anyhow!("mean curve row without raw rows: {key:?}"))?;
            let mean: f64 = m[4].parse()?;
            if *n != m[2].parse::<usize>()? || (sum / *n as f64 - mean).abs() > 1e-12 {
                bail!("mean_curves.tsv disagrees with curves.tsv at {key:?}");
            }
        }
        let (_, ordering) = read_tsv(&run.join("ordering.tsv"))?;
        let _ = writeln!(out, "family\tlearner\tmagnitude\tpre_error\tjump\trecovery_windows\tfinal_error");
        let mut learners: Vec<String> = means.iter().map(|m| m[1].clone()).collect();
        learners.dedup();
        learners.sort();
        learners.dedup();
        for o in &ordering {
            let final_error = means
                .iter()
                .rfind(|m| m[0] == o[1] && m[1] == o[0])
                .map(|m| m[4].clone())
                .unwrap_or_default();
            let _ = writeln!(out, "family\t{}\t{}\t{}\t{}\t{}\t{final_error}", o[0], o[1], o[2], o[3], o[4]);
        }
        for l in &learners {
            let mut mags: Vec<String> = means.iter().filter(|m| &m[1] == l).map(|m| m[0].clone()).collect();
            mags.dedup();
            let mut table = stamp(&hash, seed.parse()?);
            let _ = writeln!(table, "window\t{}", mags.iter().map(|m| format!("error@{m}")).collect::<Vec<_>>().join("\t"));
            let windows = means.iter().filter(|m| &m[1] == l && m[0] == mags[0]).count();
            for w in 0..windows {
                let cells: Vec<String> = mags
                    .iter()
                    .map(|mag| {
                        means
                            .iter()
                            .find(|m| &m[1] == l && &m[0] == mag && m[3] == w.to_string())
                            .map(|m| m[4].clone())
                            .unwrap_or_default()
                    })
                    .collect();
                let _ = writeln!(table, "{w}\t{}", cells.join("\t"));
            }
            plots.push((format!("plot-{l}.tsv"), table));
        }
    }

    let mut streams: Vec<PathBuf> = fs::read_dir(run)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("stream-")))
        .collect();
    streams.sort();
    if !streams.is_empty() {
        let _ = writeln!(out, "stream\tkind\ttarget\tachieved\tk\trecords\tlast_step");
        for p in &streams {
            let f = fs::File::open(p)?;
            let (h, records) = read_stream(std::io::BufReader::new(f))?;
            let get = |k| header_value(&h, k).unwrap_or("-").to_string();
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                p.file_name().unwrap().to_string_lossy(),
                get("kind"),
                get("target_magnitude"),
                get("achieved_magnitude"),
                get("k"),
                records.len(),
                records.last().map(|r| r.step).unwrap_or(0)
            );
        }
    }
    if plots.is_empty() && streams.is_empty() {
        bail!("{} has neither curves nor streams", run.display());
    }
    for (name, table) in &plots {
        fs::write(run.join(name), table)?;
    }
    fs::write(run.join("report.txt"), &out)?;
    Ok(out)
}

/// Trivial external learner: predicts the last label it was shown.
pub fn echo_learner() -> Result<()> {
    let stdin = std::io::stdin();
    let mut out = BufWriter::new(std::io::stdout().lock());
    let mut last = 0usize;
    for line in stdin.lock().lines() {
        let line = line?;
        let line = line.trim();
        if line.starts_with('P') {
            writeln!(out, "{last}")?;
        } else if let Some(rest) = line.strip_prefix("O ") {
            last = rest
                .rsplit(',')
                .next()
                .and_then(|y| y.trim().parse().ok())
                .ok_or_else(|| anyhow!("bad observe line '{line}'"))?;
            writeln!(out, "ok")?;
        } else if line == "R" {
            last = 0;
            writeln!(out, "ok")?;
        } else {
            bail!("unknown request '{line}'");
        }
        out.flush()?;
    }
    Ok(())
}
