//! Categorical concepts over a one-layer star network: independent
//! categorical covariates `x_1..x_n` all feeding a single class node `y`
//! through a full conditional probability table.
//!
//! Covariate combinations ("cells") are indexed mixed-radix with attribute 0
//! most significant, so `[x_0, x_1, .., x_{n-1}]` maps to
//! `x_0 * arity^(n-1) + .. + x_{n-1}`.

use rand::Rng;

use crate::error::{DriftError, Result};

/// Tolerance used when validating that a probability vector sums to one.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Shape of the covariate space and the class variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AttributeSchema {
    n_attributes: usize,
    arity: usize,
    n_classes: usize,
}

impl AttributeSchema {
    pub fn new(n_attributes: usize, arity: usize, n_classes: usize) -> Result<Self> {
        if n_attributes < 1 {
            return Err(DriftError::InvalidSchema("n_attributes must be >= 1".into()));
        }
        if arity < 2 {
            return Err(DriftError::InvalidSchema("arity must be >= 2".into()));
        }
        if n_classes < 2 {
            return Err(DriftError::InvalidSchema("n_classes must be >= 2".into()));
        }
        let cells = (arity as u128).checked_pow(n_attributes as u32);
        match cells {
            Some(c) if c <= (1u128 << 32) => {}
            _ => {
                return Err(DriftError::InvalidSchema(format!(
                    "{arity}^{n_attributes} cells is too large"
                )))
            }
        }
        Ok(Self {
            n_attributes,
            arity,
            n_classes,
        })
    }

    /// Five ternary attributes and three classes: 243 cells.
    pub fn benchmark() -> Self {
        Self {
            n_attributes: 5,
            arity: 3,
            n_classes: 3,
        }
    }

    pub fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    /// Number of covariate combinations, `arity ^ n_attributes`.
    pub fn cell_count(&self) -> usize {
        self.arity.pow(self.n_attributes as u32)
    }

    /// Size of the joint (cell, class) outcome space.
    pub fn outcome_count(&self) -> usize {
        self.cell_count() * self.n_classes
    }

    pub fn encode(&self, x: &[usize]) -> Result<usize> {
        if x.len() != self.n_attributes {
            return Err(DriftError::SchemaMismatch(format!(
                "expected {} attribute values, got {}",
                self.n_attributes,
                x.len()
            )));
        }
        let mut cell = 0usize;
        for &v in x {
            if v >= self.arity {
                return Err(DriftError::OutOfRange {
                    what: "attribute value",
                    index: v,
                    limit: self.arity,
                });
            }
            cell = cell * self.arity + v;
        }
        Ok(cell)
    }

    pub fn decode(&self, cell: usize) -> Result<Vec<usize>> {
        self.check_cell(cell)?;
        let mut x = vec![0; self.n_attributes];
        let mut rest = cell;
        for slot in x.iter_mut().rev() {
            *slot = rest % self.arity;
            rest /= self.arity;
        }
        Ok(x)
    }

    pub fn check_cell(&self, cell: usize) -> Result<()> {
        if cell >= self.cell_count() {
            return Err(DriftError::OutOfRange {
                what: "cell",
                index: cell,
                limit: self.cell_count(),
            });
        }
        Ok(())
    }

    pub fn check_class(&self, y: usize) -> Result<()> {
        if y >= self.n_classes {
            return Err(DriftError::OutOfRange {
                what: "class",
                index: y,
                limit: self.n_classes,
            });
        }
        Ok(())
    }

    fn ensure_same(&self, other: &AttributeSchema) -> Result<()> {
        if self != other {
            return Err(DriftError::SchemaMismatch(format!(
                "{self:?} vs {other:?}"
            )));
        }
        Ok(())
    }
}

fn check_probability_vector(v: &[f64], what: impl Fn() -> String) -> Result<()> {
    if v.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(DriftError::InvalidDistribution(format!(
            "{} has a negative or non-finite entry",
            what()
        )));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > NORMALIZATION_TOL {
        return Err(DriftError::InvalidDistribution(format!(
            "{} sums to {s}, not 1",
            what()
        )));
    }
    Ok(())
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|p| *p /= s);
    }
}

/// Inverse-CDF draw; always consumes exactly one uniform.
fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_positive = i;
        }
        acc += p;
        if u < acc {
            return i;
        }
    }
    last_positive
}

/// Draw from a flat Dirichlet by normalizing unit-exponential variates.
pub fn sample_flat_dirichlet<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len)
        .map(|_| {
            let u: f64 = rng.gen();
            -(1.0 - u).ln()
        })
        .collect();
    normalize(&mut v);
    v
}

/// Distribution of the covariates `P(X)`.
///
/// Freshly sampled concepts are always `Independent`. A `Joint` table only
/// appears when two concepts with different covariates are mixed, since a
/// mixture of product distributions is not a product distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum CovariateDistribution {
    Independent { per_attribute: Vec<Vec<f64>> },
    Joint { cells: Vec<f64> },
}

impl CovariateDistribution {
    pub fn independent(schema: &AttributeSchema, per_attribute: Vec<Vec<f64>>) -> Result<Self> {
        if per_attribute.len() != schema.n_attributes() {
            return Err(DriftError::SchemaMismatch(format!(
                "expected {} attribute vectors, got {}",
                schema.n_attributes(),
                per_attribute.len()
            )));
        }
        for (i, v) in per_attribute.iter().enumerate() {
            if v.len() != schema.arity() {
                return Err(DriftError::SchemaMismatch(format!(
                    "attribute {i} has {} values, expected {}",
                    v.len(),
                    schema.arity()
                )));
            }
            check_probability_vector(v, || format!("attribute {i}"))?;
        }
        Ok(Self::Independent { per_attribute })
    }

    pub fn joint(schema: &AttributeSchema, cells: Vec<f64>) -> Result<Self> {
        if cells.len() != schema.cell_count() {
            return Err(DriftError::SchemaMismatch(format!(
                "expected {} cells, got {}",
                schema.cell_count(),
                cells.len()
            )));
        }
        check_probability_vector(&cells, || "joint covariate table".into())?;
        Ok(Self::Joint { cells })
    }

    pub fn uniform(schema: &AttributeSchema) -> Self {
        let a = schema.arity();
        Self::Independent {
            per_attribute: vec![vec![1.0 / a as f64; a]; schema.n_attributes()],
        }
    }

    pub fn is_independent(&self) -> bool {
        matches!(self, Self::Independent { .. })
    }

    fn shape_matches(&self, schema: &AttributeSchema) -> bool {
        match self {
            Self::Independent { per_attribute } => {
                per_attribute.len() == schema.n_attributes()
                    && per_attribute.iter().all(|v| v.len() == schema.arity())
            }
            Self::Joint { cells } => cells.len() == schema.cell_count(),
        }
    }

    /// `P(X = x)` for every cell in canonical order.
    pub fn cell_table(&self) -> Vec<f64> {
        match self {
            Self::Joint { cells } => cells.clone(),
            Self::Independent { per_attribute } => {
                let mut table = vec![1.0];
                for v in per_attribute {
                    table = table
                        .iter()
                        .flat_map(|&p| v.iter().map(move |&q| p * q))
                        .collect();
                }
                table
            }
        }
    }

    fn draw_cell<R: Rng + ?Sized>(&self, schema: &AttributeSchema, rng: &mut R) -> (usize, Vec<usize>) {
        match self {
            Self::Independent { per_attribute } => {
                let x: Vec<usize> = per_attribute.iter().map(|v| sample_index(v, rng)).collect();
                let mut cell = 0;
                for &v in &x {
                    cell = cell * schema.arity() + v;
                }
                (cell, x)
            }
            Self::Joint { cells } => {
                let cell = sample_index(cells, rng);
                let x = schema.decode(cell).expect("sampled cell in range");
                (cell, x)
            }
        }
    }
}

/// Full conditional probability table `P(Y | X)`, one row per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable {
    n_classes: usize,
    rows: Vec<f64>,
}

impl PosteriorTable {
    pub fn new(schema: &AttributeSchema, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != schema.cell_count() {
            return Err(DriftError::SchemaMismatch(format!(
                "expected {} posterior rows, got {}",
                schema.cell_count(),
                rows.len()
            )));
        }
        let mut flat = Vec::with_capacity(schema.outcome_count());
        for (c, row) in rows.iter().enumerate() {
            if row.len() != schema.n_classes() {
                return Err(DriftError::SchemaMismatch(format!(
                    "row {c} has {} classes, expected {}",
                    row.len(),
                    schema.n_classes()
                )));
            }
            check_probability_vector(row, || format!("posterior row {c}"))?;
            flat.extend_from_slice(row);
        }
        Ok(Self {
            n_classes: schema.n_classes(),
            rows: flat,
        })
    }

    /// Deterministic table assigning `classes[cell]` to each cell.
    pub fn from_assignments(schema: &AttributeSchema, classes: &[usize]) -> Result<Self> {
        if classes.len() != schema.cell_count() {
            return Err(DriftError::SchemaMismatch(format!(
                "expected {} assignments, got {}",
                schema.cell_count(),
                classes.len()
            )));
        }
        let k = schema.n_classes();
        let mut rows = vec![0.0; classes.len() * k];
        for (c, &y) in classes.iter().enumerate() {
            schema.check_class(y)?;
            rows[c * k + y] = 1.0;
        }
        Ok(Self { n_classes: k, rows })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn cell_count(&self) -> usize {
        self.rows.len() / self.n_classes
    }

    pub fn row(&self, cell: usize) -> &[f64] {
        &self.rows[cell * self.n_classes..(cell + 1) * self.n_classes]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks_exact(self.n_classes)
    }

    /// True iff every row is one-hot.
    pub fn is_deterministic(&self) -> bool {
        self.rows().all(|r| {
            r.iter().filter(|&&p| p == 1.0).count() == 1 && r.iter().all(|&p| p == 0.0 || p == 1.0)
        })
    }

    /// The class with probability one in `cell`, if the row is one-hot.
    pub fn assigned_class(&self, cell: usize) -> Option<usize> {
        let r = self.row(cell);
        let hot = r.iter().position(|&p| p == 1.0)?;
        r.iter()
            .enumerate()
            .all(|(i, &p)| i == hot || p == 0.0)
            .then_some(hot)
    }

    /// Most probable class in `cell`, ties toward the lowest index.
    pub fn argmax_class(&self, cell: usize) -> usize {
        argmax(self.row(cell))
    }

    /// Row-wise blend: row `c` becomes `(1-w_c) a_c + w_c b_c`.
    pub fn blend(a: &PosteriorTable, b: &PosteriorTable, weights: &[f64]) -> Result<Self> {
        if a.n_classes != b.n_classes || a.rows.len() != b.rows.len() {
            return Err(DriftError::SchemaMismatch("posterior tables differ in shape".into()));
        }
        if weights.len() != a.cell_count() {
            return Err(DriftError::SchemaMismatch(format!(
                "expected {} cell weights, got {}",
                a.cell_count(),
                weights.len()
            )));
        }
        let k = a.n_classes;
        let mut rows = Vec::with_capacity(a.rows.len());
        for (c, &w) in weights.iter().enumerate() {
            let mut row: Vec<f64> = a
                .row(c)
                .iter()
                .zip(b.row(c))
                .map(|(&p, &q)| if w == 0.0 { p } else if w == 1.0 { q } else { (1.0 - w) * p + w * q })
                .collect();
            normalize(&mut row);
            rows.extend(row);
        }
        Ok(Self { n_classes: k, rows })
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in v.iter().enumerate() {
        if p > v[best] {
            best = i;
        }
    }
    best
}

/// A concept: the joint distribution `P(X, Y) = P(X) P(Y | X)`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointConcept {
    schema: AttributeSchema,
    covariates: CovariateDistribution,
    posterior: PosteriorTable,
}

impl JointConcept {
    pub fn new(
        schema: AttributeSchema,
        covariates: CovariateDistribution,
        posterior: PosteriorTable,
    ) -> Result<Self> {
        if !covariates.shape_matches(&schema) {
            return Err(DriftError::SchemaMismatch("covariates do not match schema".into()));
        }
        if posterior.n_classes() != schema.n_classes() || posterior.cell_count() != schema.cell_count() {
            return Err(DriftError::SchemaMismatch("posterior does not match schema".into()));
        }
        Ok(Self {
            schema,
            covariates,
            posterior,
        })
    }

    /// Random concept: flat-Dirichlet covariates and a one-hot posterior.
    pub fn sample<R: Rng + ?Sized>(schema: &AttributeSchema, rng: &mut R) -> Self {
        let covariates = sample_covariate_distribution(schema, rng);
        let posterior = sample_posterior_table(schema, rng);
        Self {
            schema: *schema,
            covariates,
            posterior,
        }
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn covariates(&self) -> &CovariateDistribution {
        &self.covariates
    }

    pub fn posterior(&self) -> &PosteriorTable {
        &self.posterior
    }

    pub fn with_posterior(&self, posterior: PosteriorTable) -> Result<Self> {
        Self::new(self.schema, self.covariates.clone(), posterior)
    }

    pub fn with_covariates(&self, covariates: CovariateDistribution) -> Result<Self> {
        Self::new(self.schema, covariates, self.posterior.clone())
    }

    pub fn ensure_same_schema(&self, other: &JointConcept) -> Result<()> {
        self.schema.ensure_same(&other.schema)
    }

    /// `P(X = x, Y = y)` for every outcome, indexed `cell * n_classes + y`.
    pub fn joint_table(&self) -> Vec<f64> {
        let k = self.schema.n_classes();
        let px = self.covariates.cell_table();
        let mut out = Vec::with_capacity(px.len() * k);
        for (c, p) in px.iter().enumerate() {
            out.extend(self.posterior.row(c).iter().map(|q| p * q));
        }
        out
    }

    /// Convex combination `(1-w) a + w b` of two joint distributions.
    ///
    /// Covariates stay factored when both sides share them exactly;
    /// otherwise the mixed covariate table is stored in joint form.
    pub fn mix(a: &JointConcept, b: &JointConcept, w: f64) -> Result<JointConcept> {
        a.ensure_same_schema(b)?;
        if !(0.0..=1.0).contains(&w) {
            return Err(DriftError::InvalidParameter(format!("mixture weight {w} outside [0, 1]")));
        }
        if w == 0.0 {
            return Ok(a.clone());
        }
        if w == 1.0 {
            return Ok(b.clone());
        }
        if a.covariates == b.covariates {
            let weights = vec![w; a.schema.cell_count()];
            let posterior = PosteriorTable::blend(&a.posterior, &b.posterior, &weights)?;
            return a.with_posterior(posterior);
        }
        let pa = a.covariates.cell_table();
        let pb = b.covariates.cell_table();
        let k = a.schema.n_classes();
        let mut cells: Vec<f64> = pa.iter().zip(&pb).map(|(p, q)| (1.0 - w) * p + w * q).collect();
        normalize(&mut cells);
        let mut rows = Vec::with_capacity(cells.len() * k);
        for c in 0..cells.len() {
            let ra = a.posterior.row(c);
            let rb = b.posterior.row(c);
            let mass = (1.0 - w) * pa[c] + w * pb[c];
            let start = rows.len();
            if mass > 0.0 {
                rows.extend((0..k).map(|y| ((1.0 - w) * pa[c] * ra[y] + w * pb[c] * rb[y]) / mass));
            } else {
                rows.extend((0..k).map(|y| (1.0 - w) * ra[y] + w * rb[y]));
            }
            normalize(&mut rows[start..]);
        }
        JointConcept::new(
            a.schema,
            CovariateDistribution::Joint { cells },
            PosteriorTable { n_classes: k, rows },
        )
    }
}

/// Per-attribute flat-Dirichlet covariate multinomials.
pub fn sample_covariate_distribution<R: Rng + ?Sized>(
    schema: &AttributeSchema,
    rng: &mut R,
) -> CovariateDistribution {
    CovariateDistribution::Independent {
        per_attribute: (0..schema.n_attributes())
            .map(|_| sample_flat_dirichlet(schema.arity(), rng))
            .collect(),
    }
}

/// One-hot posterior with a uniformly drawn class per cell.
pub fn sample_posterior_table<R: Rng + ?Sized>(schema: &AttributeSchema, rng: &mut R) -> PosteriorTable {
    let classes: Vec<usize> = (0..schema.cell_count())
        .map(|_| rng.gen_range(0..schema.n_classes()))
        .collect();
    PosteriorTable::from_assignments(schema, &classes).expect("classes drawn within schema")
}

pub fn joint_probability(concept: &JointConcept, x: &[usize], y: usize) -> Result<f64> {
    let cell = concept.schema.encode(x)?;
    concept.schema.check_class(y)?;
    let px = match &concept.covariates {
        CovariateDistribution::Independent { per_attribute } => {
            x.iter().zip(per_attribute).map(|(&v, p)| p[v]).product()
        }
        CovariateDistribution::Joint { cells } => cells[cell],
    };
    Ok(px * concept.posterior.row(cell)[y])
}

/// Class prior `P(Y)` obtained by marginalizing the joint.
pub fn class_marginal(concept: &JointConcept) -> Vec<f64> {
    let k = concept.schema.n_classes();
    let mut out = vec![0.0; k];
    for (i, p) in concept.joint_table().into_iter().enumerate() {
        out[i % k] += p;
    }
    out
}

/// Draw one `(x, y)` instance. Consumes one uniform per attribute (one for
/// joint covariate tables) plus one for the class, whatever the posterior.
pub fn draw_instance<R: Rng + ?Sized>(concept: &JointConcept, rng: &mut R) -> (Vec<usize>, usize) {
    let (cell, x) = concept.covariates.draw_cell(&concept.schema, rng);
    let y = sample_index(concept.posterior.row(cell), rng);
    (x, y)
}
