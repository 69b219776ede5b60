//! Prequential (test-then-train) evaluation of incremental learners.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::str::FromStr;

use rayon::prelude::*;

use crate::distribution::{argmax, AttributeSchema, JointConcept};
use crate::error::{DriftError, Result};
use crate::generator::{GeneratedStream, StreamRecord};

pub const DEFAULT_WINDOW: usize = 1000;
pub const DEFAULT_RECOVERY_EPS: f64 = 0.02;

/// A classifier that sees each instance once, in stream order.
pub trait OnlineLearner {
    fn name(&self) -> &str;
    fn schema(&self) -> &AttributeSchema;
    fn predict(&mut self, x: &[usize]) -> Result<usize>;
    fn observe(&mut self, x: &[usize], y: usize) -> Result<()>;
    fn reset(&mut self) -> Result<()>;
}

fn check_instance(schema: &AttributeSchema, x: &[usize]) -> Result<()> {
    if x.len() != schema.n_attributes() {
        return Err(DriftError::SchemaMismatch(format!(
            "instance has {} attributes, learner expects {}",
            x.len(),
            schema.n_attributes()
        )));
    }
    if let Some(v) = x.iter().find(|&&v| v >= schema.arity()) {
        return Err(DriftError::SchemaMismatch(format!(
            "attribute value {v} outside arity {}",
            schema.arity()
        )));
    }
    Ok(())
}

fn argmax_count(counts: &[u64]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

/// Count-based Naive Bayes with Laplace smoothing.
#[derive(Debug, Clone)]
pub struct IncrementalNaiveBayes {
    schema: AttributeSchema,
    alpha: f64,
    class_counts: Vec<u64>,
    /// `[class][attribute][value]`, flattened.
    value_counts: Vec<u64>,
    seen: u64,
}

impl IncrementalNaiveBayes {
    pub fn new(schema: AttributeSchema, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(DriftError::InvalidParameter(format!("alpha must be > 0, got {alpha}")));
        }
        let k = schema.n_classes();
        Ok(Self {
            schema,
            alpha,
            class_counts: vec![0; k],
            value_counts: vec![0; k * schema.n_attributes() * schema.arity()],
            seen: 0,
        })
    }

    fn slot(&self, y: usize, j: usize, v: usize) -> usize {
        (y * self.schema.n_attributes() + j) * self.schema.arity() + v
    }

    /// Unnormalized log posterior of each class.
    pub fn log_scores(&self, x: &[usize]) -> Vec<f64> {
        let k = self.schema.n_classes() as f64;
        let arity = self.schema.arity() as f64;
        (0..self.schema.n_classes())
            .map(|y| {
                let ny = self.class_counts[y] as f64;
                let mut s = ((ny + self.alpha) / (self.seen as f64 + k * self.alpha)).ln();
                for (j, &v) in x.iter().enumerate() {
                    s += ((self.value_counts[self.slot(y, j, v)] as f64 + self.alpha) / (ny + arity * self.alpha)).ln();
                }
                s
            })
            .collect()
    }
}

impl OnlineLearner for IncrementalNaiveBayes {
    fn name(&self) -> &str {
        "naive-bayes"
    }

    fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    fn predict(&mut self, x: &[usize]) -> Result<usize> {
        check_instance(&self.schema, x)?;
        Ok(argmax(&self.log_scores(x)))
    }

    fn observe(&mut self, x: &[usize], y: usize) -> Result<()> {
        check_instance(&self.schema, x)?;
        self.schema.check_class(y)?;
        self.class_counts[y] += 1;
        for (j, &v) in x.iter().enumerate() {
            let i = self.slot(y, j, v);
            self.value_counts[i] += 1;
        }
        self.seen += 1;
        Ok(())
    }

    fn reset(&mut self) -> Result<()> {
        self.class_counts.iter_mut().for_each(|c| *c = 0);
        self.value_counts.iter_mut().for_each(|c| *c = 0);
        self.seen = 0;
        Ok(())
    }
}

/// Per-cell class counts; unseen cells fall back to the global majority.
#[derive(Debug, Clone)]
pub struct LookupTableClassifier {
    schema: AttributeSchema,
    cell_counts: Vec<u64>,
    class_counts: Vec<u64>,
}

impl LookupTableClassifier {
    pub fn new(schema: AttributeSchema) -> Self {
        Self {
            cell_counts: vec![0; schema.outcome_count()],
            class_counts: vec![0; schema.n_classes()],
            schema,
        }
    }

    /// A table that already knows the most probable class of every cell.
    pub fn from_posterior(concept: &JointConcept) -> Self {
        let mut t = Self::new(*concept.schema());
        for cell in 0..t.schema.cell_count() {
            let y = concept.posterior().argmax_class(cell);
            t.cell_counts[cell * t.schema.n_classes() + y] = 1;
            t.class_counts[y] += 1;
        }
        t
    }

    /// Cells with at least one observation.
    pub fn cells_seen(&self) -> usize {
        self.cell_counts
            .chunks(self.schema.n_classes())
            .filter(|c| c.iter().any(|&n| n > 0))
            .count()
    }
}

impl OnlineLearner for LookupTableClassifier {
    fn name(&self) -> &str {
        "lookup-table"
    }

    fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    fn predict(&mut self, x: &[usize]) -> Result<usize> {
        check_instance(&self.schema, x)?;
        let cell = self.schema.encode(x)?;
        let k = self.schema.n_classes();
        let row = &self.cell_counts[cell * k..(cell + 1) * k];
        if row.iter().all(|&n| n == 0) {
            return Ok(argmax_count(&self.class_counts));
        }
        Ok(argmax_count(row))
    }

    fn observe(&mut self, x: &[usize], y: usize) -> Result<()> {
        check_instance(&self.schema, x)?;
        self.schema.check_class(y)?;
        let cell = self.schema.encode(x)?;
        self.cell_counts[cell * self.schema.n_classes() + y] += 1;
        self.class_counts[y] += 1;
        Ok(())
    }

    fn reset(&mut self) -> Result<()> {
        self.cell_counts.iter_mut().for_each(|c| *c = 0);
        self.class_counts.iter_mut().for_each(|c| *c = 0);
        Ok(())
    }
}

/// Always predicts the most frequent class so far.
#[derive(Debug, Clone)]
pub struct MajorityClass {
    schema: AttributeSchema,
    counts: Vec<u64>,
}

impl MajorityClass {
    pub fn new(schema: AttributeSchema) -> Self {
        Self {
            counts: vec![0; schema.n_classes()],
            schema,
        }
    }
}

impl OnlineLearner for MajorityClass {
    fn name(&self) -> &str {
        "majority"
    }

    fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    fn predict(&mut self, x: &[usize]) -> Result<usize> {
        check_instance(&self.schema, x)?;
        Ok(argmax_count(&self.counts))
    }

    fn observe(&mut self, x: &[usize], y: usize) -> Result<()> {
        check_instance(&self.schema, x)?;
        self.schema.check_class(y)?;
        self.counts[y] += 1;
        Ok(())
    }

    fn reset(&mut self) -> Result<()> {
        self.counts.iter_mut().for_each(|c| *c = 0);
        Ok(())
    }
}

/// A learner in another process, spoken to over stdin/stdout.
///
/// Requests, one per line: `P x1,...,xn` expects a class index back,
/// `O x1,...,xn,y` expects `ok`, `R` (reset) expects `ok`.
pub struct ExternalLearner {
    schema: AttributeSchema,
    label: String,
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    line: String,
}

impl ExternalLearner {
    pub fn spawn(schema: AttributeSchema, program: &str, args: &[String]) -> Result<Self> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| DriftError::Learner(format!("cannot start '{program}': {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
        Ok(Self {
            schema,
            label: format!("external:{program}"),
            child,
            stdin,
            stdout,
            line: String::new(),
        })
    }

    fn request(&mut self, msg: &str) -> Result<&str> {
        writeln!(self.stdin, "{msg}").and_then(|_| self.stdin.flush())
            .map_err(|e| DriftError::Learner(format!("write to learner failed: {e}")))?;
        self.line.clear();
        let n = self
            .stdout
            .read_line(&mut self.line)
            .map_err(|e| DriftError::Learner(format!("read from learner failed: {e}")))?;
        if n == 0 {
            return Err(DriftError::Learner("learner closed its output".into()));
        }
        Ok(self.line.trim())
    }

    fn expect_ok(&mut self, msg: &str) -> Result<()> {
        let reply = self.request(msg)?;
        if reply != "ok" {
            return Err(DriftError::Learner(format!("expected 'ok', got '{reply}'")));
        }
        Ok(())
    }
}

fn join_values(x: &[usize]) -> String {
    x.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl OnlineLearner for ExternalLearner {
    fn name(&self) -> &str {
        &self.label
    }

    fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    fn predict(&mut self, x: &[usize]) -> Result<usize> {
        check_instance(&self.schema, x)?;
        let k = self.schema.n_classes();
        let reply = self.request(&format!("P {}", join_values(x)))?;
        let y: usize = reply
            .parse()
            .map_err(|_| DriftError::Learner(format!("bad prediction '{reply}'")))?;
        if y >= k {
            return Err(DriftError::Learner(format!("predicted class {y} outside 0..{k}")));
        }
        Ok(y)
    }

    fn observe(&mut self, x: &[usize], y: usize) -> Result<()> {
        check_instance(&self.schema, x)?;
        self.schema.check_class(y)?;
        self.expect_ok(&format!("O {},{y}", join_values(x)))
    }

    fn reset(&mut self) -> Result<()> {
        self.expect_ok("R")
    }
}

impl Drop for ExternalLearner {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Built-in learner selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LearnerKind {
    NaiveBayes,
    LookupTable,
    Majority,
}

impl LearnerKind {
    pub const ALL: [LearnerKind; 3] = [LearnerKind::NaiveBayes, LearnerKind::LookupTable, LearnerKind::Majority];

    pub fn id(&self) -> &'static str {
        match self {
            LearnerKind::NaiveBayes => "naive-bayes",
            LearnerKind::LookupTable => "lookup-table",
            LearnerKind::Majority => "majority",
        }
    }

    pub fn build(&self, schema: AttributeSchema, alpha: f64) -> Result<Box<dyn OnlineLearner>> {
        Ok(match self {
            LearnerKind::NaiveBayes => Box::new(IncrementalNaiveBayes::new(schema, alpha)?),
            LearnerKind::LookupTable => Box::new(LookupTableClassifier::new(schema)),
            LearnerKind::Majority => Box::new(MajorityClass::new(schema)),
        })
    }
}

impl fmt::Display for LearnerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for LearnerKind {
    type Err = DriftError;

    fn from_str(s: &str) -> Result<Self> {
        LearnerKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| DriftError::InvalidParameter(format!("unknown learner '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub window: usize,
    /// Mean 0-1 loss over the window.
    pub error: f64,
    /// Instances in the window.
    pub n: usize,
}

/// Windowed 0-1 loss; the last window may be short.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCurve {
    pub window: usize,
    pub points: Vec<CurvePoint>,
    /// Curves averaged into this one.
    pub replicates: usize,
}

impl ErrorCurve {
    pub fn errors(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.error).collect()
    }
}

/// Predict, score, then learn, for every record in order.
pub fn prequential_evaluate(
    learner: &mut dyn OnlineLearner,
    stream: &[StreamRecord],
    window: usize,
) -> Result<ErrorCurve> {
    if window == 0 {
        return Err(DriftError::InvalidParameter("window must be >= 1".into()));
    }
    let mut points = Vec::with_capacity(stream.len().div_ceil(window));
    for (w, chunk) in stream.chunks(window).enumerate() {
        let mut mistakes = 0usize;
        for rec in chunk {
            let guess = learner.predict(&rec.x)?;
            if guess != rec.y {
                mistakes += 1;
            }
            learner.observe(&rec.x, rec.y)?;
        }
        points.push(CurvePoint {
            window: w,
            error: mistakes as f64 / chunk.len() as f64,
            n: chunk.len(),
        });
    }
    Ok(ErrorCurve {
        window,
        points,
        replicates: 1,
    })
}

/// One fresh learner per replicate, replicates evaluated in parallel.
pub fn evaluate_replicates<F>(streams: &[GeneratedStream], make: F, window: usize) -> Result<Vec<ErrorCurve>>
where
    F: Fn(&GeneratedStream) -> Result<Box<dyn OnlineLearner>> + Sync,
{
    streams
        .par_iter()
        .map(|s| {
            let mut learner = make(s)?;
            prequential_evaluate(learner.as_mut(), &s.records, window)
        })
        .collect()
}

fn same_shape(a: &ErrorCurve, b: &ErrorCurve) -> bool {
    a.window == b.window
        && a.points.len() == b.points.len()
        && a.points.iter().zip(&b.points).all(|(p, q)| p.n == q.n)
}

/// Pointwise mean over replicate curves.
pub fn aggregate_curves(curves: &[ErrorCurve]) -> Result<ErrorCurve> {
    let first = curves
        .first()
        .ok_or_else(|| DriftError::InvalidParameter("no curves to aggregate".into()))?;
    if curves.iter().any(|c| !same_shape(first, c)) {
        return Err(DriftError::InvalidParameter("curves have different windows".into()));
    }
    let weight: f64 = curves.iter().map(|c| c.replicates as f64).sum();
    let points = first
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| CurvePoint {
            window: p.window,
            error: curves.iter().map(|c| c.points[i].error * c.replicates as f64).sum::<f64>() / weight,
            n: p.n,
        })
        .collect();
    Ok(ErrorCurve {
        window: first.window,
        points,
        replicates: curves.iter().map(|c| c.replicates).sum(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WinDrawLoss {
    /// Replicates where the first learner had lower error.
    pub wins_a: usize,
    pub draws: usize,
    pub wins_b: usize,
}

/// Per window, compare paired replicate errors of two learners.
pub fn win_draw_loss(a: &[ErrorCurve], b: &[ErrorCurve]) -> Result<Vec<WinDrawLoss>> {
    if a.len() != b.len() || a.is_empty() {
        return Err(DriftError::InvalidParameter(format!(
            "need equal, non-zero replicate counts, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.iter().chain(b).any(|c| !same_shape(&a[0], c)) {
        return Err(DriftError::InvalidParameter("curves have different windows".into()));
    }
    let windows = a[0].points.len();
    Ok((0..windows)
        .map(|w| {
            let mut out = WinDrawLoss::default();
            for (ca, cb) in a.iter().zip(b) {
                let (ea, eb) = (ca.points[w].error, cb.points[w].error);
                if ea < eb {
                    out.wins_a += 1;
                } else if eb < ea {
                    out.wins_b += 1;
                } else {
                    out.draws += 1;
                }
            }
            out
        })
        .collect())
}

/// One-tailed sign test: `P[Binomial(n, 1/2) >= max(wins, losses)]` with
/// `n = wins + losses`. Draws are dropped before calling.
pub fn sign_test(wins: u64, losses: u64) -> f64 {
    let n = wins + losses;
    let m = wins.max(losses);
    if n == 0 {
        return 1.0;
    }
    // ln C(n, k), walking down from k = n
    let ln2n = n as f64 * std::f64::consts::LN_2;
    let mut ln_c = 0.0f64;
    let mut terms = Vec::with_capacity((n - m + 1) as usize);
    let mut k = n;
    loop {
        terms.push(ln_c - ln2n);
        if k == m {
            break;
        }
        ln_c += (k as f64).ln() - ((n - k + 1) as f64).ln();
        k -= 1;
    }
    let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - top).exp()).sum();
    (top + sum.ln()).exp().min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseEntry {
    pub magnitude: f64,
    pub pre_error: f64,
    /// Error in the first post-drift window minus `pre_error`.
    pub jump: f64,
    /// Windows after the drift until the error falls to at most
    /// `pre_error + eps` and stays there; `None` if it never does.
    pub recovery_windows: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseOrdering {
    pub eps: f64,
    pub entries: Vec<ResponseEntry>,
    pub jump_strictly_increasing: bool,
    pub recovery_non_decreasing: bool,
}

/// Jump height and recovery time per magnitude, sorted by magnitude.
/// `drift_window` is the first window containing post-drift instances.
pub fn response_ordering(
    curves_by_magnitude: &[(f64, ErrorCurve)],
    drift_window: usize,
    eps: f64,
) -> Result<ResponseOrdering> {
    let mut entries = Vec::with_capacity(curves_by_magnitude.len());
    for (m, curve) in curves_by_magnitude {
        let e = curve.errors();
        if drift_window == 0 || drift_window >= e.len() {
            return Err(DriftError::InvalidParameter(format!(
                "drift window {drift_window} needs a window on both sides of a {}-window curve",
                e.len()
            )));
        }
        let pre = e[drift_window - 1];
        let recovery = (drift_window..e.len())
            .find(|&w| e[w..].iter().all(|x| x - pre <= eps))
            .map(|w| w - drift_window);
        entries.push(ResponseEntry {
            magnitude: *m,
            pre_error: pre,
            jump: e[drift_window] - pre,
            recovery_windows: recovery,
        });
    }
    entries.sort_by(|a, b| a.magnitude.total_cmp(&b.magnitude));
    let jump_strictly_increasing = entries.windows(2).all(|w| w[1].jump > w[0].jump);
    let recovery_non_decreasing = entries.windows(2).all(|w| {
        match (w[0].recovery_windows, w[1].recovery_windows) {
            (Some(a), Some(b)) => b >= a,
            (_, None) => true,
            (None, Some(_)) => false,
        }
    });
    Ok(ResponseOrdering {
        eps,
        entries,
        jump_strictly_increasing,
        recovery_non_decreasing,
    })
}

/// Error of always predicting the most probable class of each cell.
pub fn bayes_error(concept: &JointConcept) -> f64 {
    let px = concept.covariates().cell_table();
    (0..px.len())
        .map(|c| px[c] * (1.0 - concept.posterior().row(c)[concept.posterior().argmax_class(c)]))
        .sum()
}

/// Log scores `ln P(y) + sum_j ln P(x_j | y)` of the Naive Bayes model fitted
/// to the exact joint, one row per cell.
pub fn naive_bayes_exact_scores(concept: &JointConcept) -> Vec<Vec<f64>> {
    let schema = concept.schema();
    let (n, v, k) = (schema.n_attributes(), schema.arity(), schema.n_classes());
    let joint = concept.joint_table();
    let mut py = vec![0.0; k];
    let mut pxy = vec![0.0; k * n * v];
    for cell in 0..schema.cell_count() {
        let x = schema.decode(cell).expect("cell in range");
        for y in 0..k {
            let p = joint[cell * k + y];
            py[y] += p;
            for (j, &xv) in x.iter().enumerate() {
                pxy[(y * n + j) * v + xv] += p;
            }
        }
    }
    (0..schema.cell_count())
        .map(|cell| {
            let x = schema.decode(cell).expect("cell in range");
            (0..k)
                .map(|y| {
                    if py[y] == 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    let mut s = py[y].ln();
                    for (j, &xv) in x.iter().enumerate() {
                        s += (pxy[(y * n + j) * v + xv] / py[y]).ln();
                    }
                    s
                })
                .collect()
        })
        .collect()
}

/// Error of the Naive Bayes rule fitted to the exact joint, with no
/// smoothing: the limit an incremental learner approaches on a long
/// stationary stream.
pub fn naive_bayes_optimal_error(concept: &JointConcept) -> f64 {
    let k = concept.schema().n_classes();
    let joint = concept.joint_table();
    naive_bayes_exact_scores(concept)
        .iter()
        .enumerate()
        .map(|(cell, scores)| {
            let row = &joint[cell * k..(cell + 1) * k];
            row.iter().sum::<f64>() - row[argmax(scores)]
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(step: u64, x: Vec<usize>, y: usize) -> StreamRecord {
        StreamRecord { step, x, y }
    }

    fn curve(errors: &[f64]) -> ErrorCurve {
        ErrorCurve {
            window: 10,
            points: errors
                .iter()
                .enumerate()
                .map(|(w, &e)| CurvePoint { window: w, error: e, n: 10 })
                .collect(),
            replicates: 1,
        }
    }

    #[test]
    fn naive_bayes_ties_go_to_lowest_class() {
        let s = AttributeSchema::new(2, 2, 3).unwrap();
        let mut nb = IncrementalNaiveBayes::new(s, 1.0).unwrap();
        assert_eq!(nb.predict(&[0, 1]).unwrap(), 0);
        nb.observe(&[0, 1], 2).unwrap();
        assert_eq!(nb.predict(&[0, 1]).unwrap(), 2);
        nb.reset().unwrap();
        assert_eq!(nb.predict(&[0, 1]).unwrap(), 0);
    }

    #[test]
    fn learners_reject_foreign_instances() {
        let s = AttributeSchema::new(2, 2, 2).unwrap();
        let mut m = MajorityClass::new(s);
        assert!(matches!(m.predict(&[0, 0, 0]), Err(DriftError::SchemaMismatch(_))));
        assert!(matches!(m.observe(&[0, 2], 0), Err(DriftError::SchemaMismatch(_))));
    }

    #[test]
    fn lookup_falls_back_to_majority() {
        let s = AttributeSchema::new(1, 3, 2).unwrap();
        let mut t = LookupTableClassifier::new(s);
        t.observe(&[0], 1).unwrap();
        t.observe(&[1], 1).unwrap();
        t.observe(&[1], 0).unwrap();
        t.observe(&[1], 0).unwrap();
        assert_eq!(t.predict(&[0]).unwrap(), 1);
        assert_eq!(t.predict(&[1]).unwrap(), 0);
        // unseen cell: global counts are 2 vs 2, lowest index wins
        assert_eq!(t.predict(&[2]).unwrap(), 0);
        assert_eq!(t.cells_seen(), 2);
    }

    #[test]
    fn test_then_train_order() {
        let s = AttributeSchema::new(1, 2, 2).unwrap();
        let mut t = LookupTableClassifier::new(s);
        // first sight of each cell is scored before it is learned
        let stream = vec![rec(1, vec![0], 1), rec(2, vec![0], 1), rec(3, vec![1], 1)];
        let c = prequential_evaluate(&mut t, &stream, 2).unwrap();
        assert_eq!(c.points.len(), 2);
        assert_eq!(c.points[0].error, 0.5);
        assert_eq!((c.points[1].error, c.points[1].n), (0.0, 1));
    }

    #[test]
    fn aggregation() {
        let z = curve(&[0.0, 0.0]);
        let o = curve(&[1.0, 1.0]);
        let m = aggregate_curves(&[z.clone(), o]).unwrap();
        assert_eq!(m.errors(), vec![0.5, 0.5]);
        assert_eq!(m.replicates, 2);
        assert_eq!(aggregate_curves(&[z.clone(), z.clone()]).unwrap().errors(), z.errors());
        assert!(aggregate_curves(&[]).is_err());
    }

    #[test]
    fn wdl_counts() {
        let a = vec![curve(&[0.1, 0.5]), curve(&[0.2, 0.2])];
        let b = vec![curve(&[0.3, 0.5]), curve(&[0.2, 0.1])];
        let w = win_draw_loss(&a, &b).unwrap();
        assert_eq!(w[0], WinDrawLoss { wins_a: 1, draws: 1, wins_b: 0 });
        assert_eq!(w[1], WinDrawLoss { wins_a: 0, draws: 1, wins_b: 1 });
        let same = win_draw_loss(&a, &a).unwrap();
        assert!(same.iter().all(|x| x.draws == 2));
    }

    #[test]
    fn sign_test_closed_forms() {
        assert!((sign_test(10, 0) - 2f64.powi(-10)).abs() < 1e-18);
        assert!((sign_test(0, 10) - 2f64.powi(-10)).abs() < 1e-18);
        assert_eq!(sign_test(0, 0), 1.0);
        assert!(sign_test(50, 50) > 0.4);
        assert!((sign_test(1, 0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn response_ordering_flat_and_jumps() {
        let flat = curve(&[0.1, 0.1, 0.1, 0.1]);
        let small = curve(&[0.1, 0.1, 0.3, 0.1]);
        let big = curve(&[0.1, 0.1, 0.6, 0.2]);
        let improving = curve(&[0.1, 0.1, 0.05, 0.01]);
        let r = response_ordering(&[(1.0, big), (0.0, flat), (0.5, small)], 2, 0.02).unwrap();
        let better = response_ordering(&[(0.0, improving)], 2, 0.02).unwrap();
        assert_eq!(better.entries[0].recovery_windows, Some(0));
        assert_eq!(r.entries[0].magnitude, 0.0);
        assert_eq!(r.entries[0].jump, 0.0);
        assert_eq!(r.entries[0].recovery_windows, Some(0));
        assert_eq!(r.entries[1].recovery_windows, Some(1));
        assert_eq!(r.entries[2].recovery_windows, None);
        assert!(r.jump_strictly_increasing);
        assert!(r.recovery_non_decreasing);
    }

    #[test]
    fn learner_kind_round_trip() {
        for k in LearnerKind::ALL {
            assert_eq!(k.id().parse::<LearnerKind>().unwrap(), k);
        }
        assert!("tree".parse::<LearnerKind>().is_err());
    }
}
