//! Plain-text formats for concepts, trajectories, streams and reports.
//!
//! Probabilities are written in shortest round-trip scientific notation, so
//! reading a file back gives bit-identical tables.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::distribution::{AttributeSchema, CovariateDistribution, JointConcept, PosteriorTable};
use crate::error::{DriftError, Result};
use crate::generator::StreamRecord;
use crate::harness::ErrorCurve;
use crate::measures::DriftMeasures;
use crate::taxonomy::{DurationClass, MagnitudeClass, TaxonomyReport};
use crate::trajectory::{ConceptTrajectory, Law, PiecewiseLinear, PosteriorSchedule, Segment};

fn floats(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ")
}

fn curve_points(c: &PiecewiseLinear) -> String {
    c.points().iter().map(|(s, f)| format!("{s:e},{f:e}")).collect::<Vec<_>>().join(" ")
}

pub fn write_concept(out: &mut String, c: &JointConcept) {
    let s = c.schema();
    let _ = writeln!(out, "concept {} {} {}", s.n_attributes(), s.arity(), s.n_classes());
    match c.covariates() {
        CovariateDistribution::Independent { per_attribute } => {
            let _ = writeln!(out, "covariates independent");
            for p in per_attribute {
                let _ = writeln!(out, "attr {}", floats(p));
            }
        }
        CovariateDistribution::Joint { cells } => {
            let _ = writeln!(out, "covariates joint");
            let _ = writeln!(out, "cells {}", floats(cells));
        }
    }
    for row in c.posterior().rows() {
        let _ = writeln!(out, "row {}", floats(row));
    }
    let _ = writeln!(out, "end-concept");
}

pub fn concept_to_string(c: &JointConcept) -> String {
    let mut s = String::new();
    write_concept(&mut s, c);
    s
}

/// Line cursor that skips blanks and `#` comments and remembers line numbers.
pub struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
            .collect();
        Self { lines, pos: 0 }
    }

    fn err(&self, msg: impl Into<String>) -> DriftError {
        let line = self
            .lines
            .get(self.pos.saturating_sub(1))
            .map(|(n, _)| *n)
            .unwrap_or(0);
        DriftError::Parse { line, msg: msg.into() }
    }

    fn next(&mut self) -> Result<&'a str> {
        let l = self
            .lines
            .get(self.pos)
            .map(|(_, l)| *l)
            .ok_or_else(|| DriftError::Parse {
                line: self.lines.last().map(|(n, _)| *n).unwrap_or(0),
                msg: "unexpected end of input".into(),
            })?;
        self.pos += 1;
        Ok(l)
    }

    /// Next line, split after its leading keyword.
    fn keyword(&mut self, kw: &str) -> Result<Vec<&'a str>> {
        let l = self.next()?;
        let mut parts = l.split_whitespace();
        match parts.next() {
            Some(k) if k == kw => Ok(parts.collect()),
            _ => Err(self.err(format!("expected '{kw}', found '{l}'"))),
        }
    }

    pub fn is_done(&self) -> bool {
        self.pos >= self.lines.len()
    }
}

fn parse_num<T: std::str::FromStr>(lines: &Lines, tok: &str) -> Result<T> {
    tok.parse().map_err(|_| lines.err(format!("bad number '{tok}'")))
}

fn parse_floats(lines: &Lines, toks: &[&str]) -> Result<Vec<f64>> {
    toks.iter().map(|t| parse_num(lines, t)).collect()
}

fn parse_curve(lines: &Lines, toks: &[&str]) -> Result<PiecewiseLinear> {
    let pts = toks
        .iter()
        .map(|t| {
            let (s, f) = t.split_once(',').ok_or_else(|| lines.err(format!("bad point '{t}'")))?;
            Ok((parse_num(lines, s)?, parse_num(lines, f)?))
        })
        .collect::<Result<Vec<_>>>()?;
    PiecewiseLinear::new(pts)
}

pub fn read_concept(lines: &mut Lines) -> Result<JointConcept> {
    let head = lines.keyword("concept")?;
    if head.len() != 3 {
        return Err(lines.err("concept header needs n_attributes arity n_classes"));
    }
    let schema = AttributeSchema::new(
        parse_num(lines, head[0])?,
        parse_num(lines, head[1])?,
        parse_num(lines, head[2])?,
    )?;
    let kind = lines.keyword("covariates")?;
    let covariates = match kind.as_slice() {
        ["independent"] => {
            let mut per = Vec::with_capacity(schema.n_attributes());
            for _ in 0..schema.n_attributes() {
                let toks = lines.keyword("attr")?;
                per.push(parse_floats(lines, &toks)?);
            }
            CovariateDistribution::independent(&schema, per)?
        }
        ["joint"] => {
            let toks = lines.keyword("cells")?;
            CovariateDistribution::joint(&schema, parse_floats(lines, &toks)?)?
        }
        _ => return Err(lines.err("covariates must be 'independent' or 'joint'")),
    };
    let mut rows = Vec::with_capacity(schema.cell_count());
    for _ in 0..schema.cell_count() {
        let toks = lines.keyword("row")?;
        rows.push(parse_floats(lines, &toks)?);
    }
    let posterior = PosteriorTable::new(&schema, rows)?;
    lines.keyword("end-concept")?;
    JointConcept::new(schema, covariates, posterior)
}

pub fn parse_concept(text: &str) -> Result<JointConcept> {
    let mut lines = Lines::new(text);
    let c = read_concept(&mut lines)?;
    if !lines.is_done() {
        return Err(lines.err("trailing content after concept"));
    }
    Ok(c)
}

/// Trajectory manifest with every concept inline.
pub fn trajectory_to_string(tr: &ConceptTrajectory) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "trajectory {}", tr.segments().len());
    for seg in tr.segments() {
        let (start, end) = (seg.start, seg.end);
        match &seg.law {
            Law::Constant(c) => {
                let _ = writeln!(out, "segment {start:e} {end:e} constant");
                write_concept(&mut out, c);
            }
            Law::Mixture { from, to, weight } => {
                let _ = writeln!(out, "segment {start:e} {end:e} mixture");
                let _ = writeln!(out, "weight {}", curve_points(weight));
                write_concept(&mut out, from);
                write_concept(&mut out, to);
            }
            Law::PosteriorInterpolation { from, to, schedule } => {
                let _ = writeln!(out, "segment {start:e} {end:e} posterior-interpolation");
                for w in schedule.cell_weights() {
                    let _ = writeln!(out, "cell-weight {}", curve_points(w));
                }
                write_concept(&mut out, from);
                write_concept(&mut out, to);
            }
            Law::Keyframes(frames) => {
                let _ = writeln!(out, "segment {start:e} {end:e} keyframes {}", frames.len());
                for (s, c) in frames {
                    let _ = writeln!(out, "frame {s:e}");
                    write_concept(&mut out, c);
                }
            }
        }
    }
    let _ = writeln!(out, "end-trajectory");
    out
}

pub fn parse_trajectory(text: &str) -> Result<ConceptTrajectory> {
    let mut lines = Lines::new(text);
    let head = lines.keyword("trajectory")?;
    let n: usize = match head.as_slice() {
        [n] => parse_num(&lines, n)?,
        _ => return Err(lines.err("trajectory header needs a segment count")),
    };
    let mut segments = Vec::with_capacity(n);
    for _ in 0..n {
        let toks = lines.keyword("segment")?;
        if toks.len() < 3 {
            return Err(lines.err("segment needs start, end and law"));
        }
        let start: f64 = parse_num(&lines, toks[0])?;
        let end: f64 = parse_num(&lines, toks[1])?;
        let law = match toks[2] {
            "constant" => Law::Constant(read_concept(&mut lines)?),
            "mixture" => {
                let w = lines.keyword("weight")?;
                let weight = parse_curve(&lines, &w)?;
                Law::Mixture {
                    from: read_concept(&mut lines)?,
                    to: read_concept(&mut lines)?,
                    weight,
                }
            }
            "posterior-interpolation" => {
                let mut curves = Vec::new();
                while lines.lines.get(lines.pos).is_some_and(|(_, l)| l.starts_with("cell-weight")) {
                    let w = lines.keyword("cell-weight")?;
                    curves.push(parse_curve(&lines, &w)?);
                }
                Law::PosteriorInterpolation {
                    schedule: PosteriorSchedule::new(curves)?,
                    from: read_concept(&mut lines)?,
                    to: read_concept(&mut lines)?,
                }
            }
            "keyframes" => {
                let count: usize = match toks.get(3) {
                    Some(t) => parse_num(&lines, t)?,
                    None => return Err(lines.err("keyframes needs a frame count")),
                };
                let mut frames = Vec::with_capacity(count);
                for _ in 0..count {
                    let f = lines.keyword("frame")?;
                    let s: f64 = match f.as_slice() {
                        [s] => parse_num(&lines, s)?,
                        _ => return Err(lines.err("frame needs one position")),
                    };
                    frames.push((s, read_concept(&mut lines)?));
                }
                Law::Keyframes(frames)
            }
            other => return Err(lines.err(format!("unknown law '{other}'"))),
        };
        segments.push(Segment::new(start, end, law));
    }
    lines.keyword("end-trajectory")?;
    if !lines.is_done() {
        return Err(lines.err("trailing content after trajectory"));
    }
    ConceptTrajectory::new(segments)
}

/// Stream file: `# key=value` header lines, a column line, then one
/// `step,x1,...,xn,y` record per line.
pub fn write_stream<W: Write>(out: &mut W, header: &[(String, String)], schema: &AttributeSchema, records: &[StreamRecord]) -> Result<()> {
    for (k, v) in header {
        writeln!(out, "# {k}={v}")?;
    }
    let cols: Vec<String> = (1..=schema.n_attributes()).map(|i| format!("x{i}")).collect();
    writeln!(out, "step,{},y", cols.join(","))?;
    let mut line = String::new();
    for r in records {
        line.clear();
        let _ = write!(line, "{}", r.step);
        for v in &r.x {
            let _ = write!(line, ",{v}");
        }
        let _ = write!(line, ",{}", r.y);
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub type StreamHeader = Vec<(String, String)>;

pub fn read_stream<R: BufRead>(input: R) -> Result<(StreamHeader, Vec<StreamRecord>)> {
    let mut header = Vec::new();
    let mut records = Vec::new();
    let mut width: Option<usize> = None;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let n = i + 1;
        let bad = |msg: String| DriftError::Parse { line: n, msg };
        if let Some(h) = line.strip_prefix('#') {
            let (k, v) = h.trim().split_once('=').ok_or_else(|| bad(format!("bad header '{line}'")))?;
            header.push((k.to_string(), v.to_string()));
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with("step") {
            width = Some(line.split(',').count());
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if width.is_some_and(|w| w != fields.len()) || fields.len() < 3 {
            return Err(bad(format!("expected {} fields, found {}", width.unwrap_or(3), fields.len())));
        }
        let nums = fields
            .iter()
            .map(|f| f.trim().parse::<u64>().map_err(|_| bad(format!("bad value '{f}'"))))
            .collect::<Result<Vec<_>>>()?;
        records.push(StreamRecord {
            step: nums[0],
            x: nums[1..nums.len() - 1].iter().map(|&v| v as usize).collect(),
            y: nums[nums.len() - 1] as usize,
        });
    }
    Ok((header, records))
}

pub fn header_value<'a>(header: &'a [(String, String)], key: &str) -> Option<&'a str> {
    header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

pub const MEASURES_COLUMNS: &str = "t\tu\tdistance\tmagnitude\tduration\tpath_length\taverage_rate";

pub fn measures_record(t: f64, u: f64, distance: &str, m: &DriftMeasures) -> String {
    format!(
        "{t}\t{u}\t{distance}\t{:e}\t{}\t{:e}\t{:e}",
        m.magnitude, m.duration, m.path_length, m.average_rate
    )
}

fn flag(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// Taxonomy report: parameters, then one tab-separated record per segment,
/// episode and blip check, then a summary.
pub fn taxonomy_report_to_string(r: &TaxonomyReport) -> String {
    let p = &r.params;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "params\tdistance={}\tphi={}\tdelta={}\tbeta={}\tgamma={}\tnu={}\tmu={}\teps_zero={:e}\tcycle_i={}\tcycle_m={}\teps_time={}\tprobabilistic_tol={:e}",
        r.distance, p.phi, p.delta, p.beta, p.gamma, p.nu, p.mu, p.eps_zero, p.cycle_i, p.cycle_m, p.eps_time, p.probabilistic_tol
    );
    let _ = writeln!(out, "# segment\tindex\tstart\tend\tduration");
    for s in &r.segments {
        let _ = writeln!(out, "segment\t{}\t{}\t{}\t{}", s.index, s.start, s.end, s.duration());
    }
    let _ = writeln!(
        out,
        "# episode\tfrom\tto\tstart\tend\tmagnitude\tduration\tpath_length\taverage_rate\tduration_class\tmagnitude_class\tgradual\tincremental\tprobabilistic\tclass_drift\tpure_class_drift\tsubconcept\tfull_concept\tcovariate_drift\tpure_covariate_drift\tdrift_scope"
    );
    for e in &r.episodes {
        let l = &e.labels;
        let m = &e.measures;
        let _ = writeln!(
            out,
            "episode\t{}\t{}\t{}\t{}\t{:e}\t{}\t{:e}\t{:e}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            e.from_segment + 1,
            e.to_segment + 1,
            e.start,
            e.end,
            m.magnitude,
            m.duration,
            m.path_length,
            m.average_rate,
            match l.duration {
                DurationClass::Abrupt => "abrupt",
                DurationClass::Extended => "extended",
            },
            match l.magnitude {
                MagnitudeClass::Minor => "minor",
                MagnitudeClass::Major => "major",
            },
            flag(l.gradual),
            flag(l.incremental),
            l.probabilistic.map(flag).unwrap_or("undefined"),
            flag(l.subject.class_drift),
            flag(l.subject.pure_class_drift),
            flag(l.subject.subconcept),
            flag(l.subject.full_concept),
            flag(l.subject.covariate_drift),
            flag(l.subject.pure_covariate_drift),
            l.subject.drift_scope,
        );
    }
    let _ = writeln!(out, "# blip\tsegment\tliteral\tstrict");
    for (a, b) in r.blips.iter().enumerate() {
        let _ = writeln!(out, "blip\t{}\t{}\t{}", a + 1, flag(b.literal), flag(b.strict));
    }
    let cyc = match &r.cyclical {
        Some(c) => format!(
            "cyclical={}\tfixed_frequency={}\tfixed_concept_duration={}\tfixed_drift_duration={}\tfixed_concept_onset={}\tfixed_drift_onset={}",
            flag(c.cyclical),
            flag(c.fixed_frequency),
            flag(c.fixed_concept_duration),
            flag(c.fixed_drift_duration),
            flag(c.fixed_concept_onset),
            flag(c.fixed_drift_onset)
        ),
        None => "cyclical=undefined".to_string(),
    };
    let _ = writeln!(
        out,
        "summary\tsegments={}\tepisodes={}\trecurring={}\tfrequency={}\t{cyc}",
        r.segments.len(),
        r.episodes.len(),
        flag(r.recurring),
        r.frequency
    );
    out
}

pub const CURVE_COLUMNS: &str = "replicate\twindow\terror\tn";

pub fn curve_records(replicate: &str, c: &ErrorCurve) -> String {
    let mut out = String::new();
    for p in &c.points {
        let _ = writeln!(out, "{replicate}\t{}\t{}\t{}", p.window, p.error, p.n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{build_fixture_trajectory, FIXTURE_NAMES};
    use crate::rng::DriftRng;
    use rand::SeedableRng;

    #[test]
    fn concept_round_trip_is_exact() {
        let mut rng = DriftRng::seed_from_u64(5);
        let c = JointConcept::sample(&AttributeSchema::benchmark(), &mut rng);
        assert_eq!(parse_concept(&concept_to_string(&c)).unwrap(), c);
    }

    #[test]
    fn every_fixture_round_trips() {
        for name in FIXTURE_NAMES {
            let tr = build_fixture_trajectory(name).unwrap();
            let text = trajectory_to_string(&tr);
            assert_eq!(parse_trajectory(&text).unwrap(), tr, "{name}");
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_concept("concept 1 2 2\ncovariates independent\nattr 0.5 x\n").unwrap_err();
        assert_eq!(
            err,
            DriftError::Parse {
                line: 3,
                msg: "bad number 'x'".into()
            }
        );
    }

    #[test]
    fn stream_round_trip() {
        let s = AttributeSchema::new(2, 3, 2).unwrap();
        let recs = vec![
            StreamRecord { step: 1, x: vec![0, 2], y: 1 },
            StreamRecord { step: 2, x: vec![1, 1], y: 0 },
        ];
        let header = vec![("seed".to_string(), "7".to_string())];
        let mut buf = Vec::new();
        write_stream(&mut buf, &header, &s, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=7\nstep,x1,x2,y\n1,0,2,1\n"));
        let (h, r) = read_stream(&buf[..]).unwrap();
        assert_eq!(h, header);
        assert_eq!(r, recs);
    }
}
