use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CHECK_TOL, PRUNE_EPS};
use crate::error::{Error, Result};

/// Register layouts understood by the simulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Schema {
    /// `[z_0, .., z_k, i]`: workspace registers followed by one query index.
    Generic,
    /// `[z_0, .., z_k, i, i']`: workspace registers followed by a compared pair.
    Comparison,
    /// `[node, color, bit, query]`: one frame of the tree search.
    ///
    /// `node` is `1 + node id` (0 means cleared), `color` is `1 + color id`
    /// (0 means none) and `bit` is `1 + bit` (0 means none).
    Tree,
}

impl Schema {
    pub fn id(self) -> u8 {
        match self {
            Schema::Generic => 0,
            Schema::Comparison => 1,
            Schema::Tree => 2,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(Schema::Generic),
            1 => Ok(Schema::Comparison),
            2 => Ok(Schema::Tree),
            other => Err(Error::Schema(format!("unknown schema id {other}"))),
        }
    }

    pub fn validate(self, regs: &[u32]) -> Result<()> {
        match self {
            Schema::Generic if regs.len() < 2 => Err(Error::Schema(format!(
                "generic labels need a workspace and a query register, got {} registers",
                regs.len()
            ))),
            Schema::Comparison if regs.len() < 3 => Err(Error::Schema(format!(
                "comparison labels need a workspace and an index pair, got {} registers",
                regs.len()
            ))),
            Schema::Tree if regs.len() != 4 => Err(Error::Schema(format!(
                "tree labels have exactly 4 registers, got {}",
                regs.len()
            ))),
            Schema::Tree if regs[2] > 2 => Err(Error::Schema(format!(
                "tree bit register holds {} (allowed: 0 = none, 1, 2)",
                regs[2]
            ))),
            _ => Ok(()),
        }
    }

    /// Position of the single query-index register, if the layout has one.
    pub fn query_position(self, len: usize) -> Option<usize> {
        match self {
            Schema::Generic => Some(len - 1),
            Schema::Tree => Some(3),
            Schema::Comparison => None,
        }
    }
}

/// A computational basis vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    schema: Schema,
    regs: Vec<u32>,
}

impl BasisLabel {
    pub fn new(schema: Schema, regs: Vec<u32>) -> Result<Self> {
        schema.validate(&regs)?;
        Ok(Self { schema, regs })
    }

    /// Builds a label whose layout the caller already guarantees.
    pub(crate) fn trusted(schema: Schema, regs: Vec<u32>) -> Self {
        debug_assert!(schema.validate(&regs).is_ok());
        Self { schema, regs }
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }

    pub fn regs(&self) -> &[u32] {
        &self.regs
    }

    pub fn reg(&self, position: usize) -> u32 {
        self.regs[position]
    }

    /// Copy of this label with one register replaced.
    pub fn with(&self, position: usize, value: u32) -> Self {
        let mut regs = self.regs.clone();
        regs[position] = value;
        Self {
            schema: self.schema,
            regs,
        }
    }

    /// Copy of this label with several registers replaced.
    pub fn with_all(&self, updates: &[(usize, u32)]) -> Self {
        let mut regs = self.regs.clone();
        for &(position, value) in updates {
            regs[position] = value;
        }
        Self {
            schema: self.schema,
            regs,
        }
    }

    /// The query index, for layouts that carry one.
    pub fn query_index(&self) -> Option<u32> {
        self.schema
            .query_position(self.regs.len())
            .map(|p| self.regs[p])
    }

    /// The compared pair, for comparison labels.
    pub fn compared_pair(&self) -> Option<(u32, u32)> {
        match self.schema {
            Schema::Comparison => {
                let n = self.regs.len();
                Some((self.regs[n - 2], self.regs[n - 1]))
            }
            _ => None,
        }
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|")?;
        for (k, r) in self.regs.iter().enumerate() {
            if k > 0 {
                write!(f, ";")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "⟩@{}", self.schema.id())
    }
}

/// A sparse vector of amplitudes over one schema.
///
/// States produced by constructors and by [`super::apply_op`] on normalized
/// input have unit norm. Projections return sub-normalized vectors of the
/// same type.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    schema: Schema,
    amps: BTreeMap<BasisLabel, Complex64>,
}

impl PureState {
    pub fn zero(schema: Schema) -> Self {
        Self {
            schema,
            amps: BTreeMap::new(),
        }
    }

    pub fn basis(label: BasisLabel) -> Self {
        let schema = label.schema;
        let mut amps = BTreeMap::new();
        amps.insert(label, Complex64::new(1.0, 0.0));
        Self { schema, amps }
    }

    /// Sums the given terms and requires the result to be normalized.
    pub fn from_terms(
        schema: Schema,
        terms: impl IntoIterator<Item = (BasisLabel, Complex64)>,
    ) -> Result<Self> {
        let state = Self::accumulate(schema, terms)?;
        state.require_normalized()?;
        Ok(state)
    }

    /// Sums the given terms without a normalization requirement.
    pub fn accumulate(
        schema: Schema,
        terms: impl IntoIterator<Item = (BasisLabel, Complex64)>,
    ) -> Result<Self> {
        let mut amps: BTreeMap<BasisLabel, Complex64> = BTreeMap::new();
        for (label, amp) in terms {
            if label.schema != schema {
                return Err(Error::SchemaMismatch {
                    expected: schema.id(),
                    found: label.schema.id(),
                });
            }
            *amps.entry(label).or_default() += amp;
        }
        let mut state = Self { schema, amps };
        state.prune();
        Ok(state)
    }

    pub(crate) fn from_map(schema: Schema, amps: BTreeMap<BasisLabel, Complex64>) -> Self {
        let mut state = Self { schema, amps };
        state.prune();
        state
    }

    fn prune(&mut self) {
        self.amps.retain(|_, a| a.norm() >= PRUNE_EPS);
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn amplitude(&self, label: &BasisLabel) -> Complex64 {
        self.amps.get(label).copied().unwrap_or_default()
    }

    /// Terms in label order.
    pub fn terms(&self) -> impl Iterator<Item = (&BasisLabel, &Complex64)> {
        self.amps.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm() - 1.0).abs() <= CHECK_TOL
    }

    pub fn require_normalized(&self) -> Result<()> {
        if self.is_normalized() {
            Ok(())
        } else {
            Err(Error::NotNormalized { norm: self.norm() })
        }
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self::from_map(
            self.schema,
            self.amps
                .iter()
                .map(|(l, a)| (l.clone(), a * factor))
                .collect(),
        )
    }

    /// `self - other`, used for distance checks.
    pub fn sub(&self, other: &PureState) -> Result<Self> {
        same_schema(self, other)?;
        let mut amps = self.amps.clone();
        for (label, amp) in &other.amps {
            *amps.entry(label.clone()).or_default() -= amp;
        }
        Ok(Self::from_map(self.schema, amps))
    }

    /// Keeps only the terms whose label satisfies `keep`.
    pub fn filter(&self, keep: impl Fn(&BasisLabel) -> bool) -> Self {
        Self {
            schema: self.schema,
            amps: self
                .amps
                .iter()
                .filter(|(l, _)| keep(l))
                .map(|(l, a)| (l.clone(), *a))
                .collect(),
        }
    }

    pub fn to_doc(&self) -> StateDoc {
        StateDoc {
            schema: self.schema.id(),
            terms: self
                .amps
                .iter()
                .map(|(l, a)| TermDoc {
                    label: l.regs.clone(),
                    re: a.re,
                    im: a.im,
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &StateDoc) -> Result<Self> {
        let schema = Schema::from_id(doc.schema)?;
        let terms = doc
            .terms
            .iter()
            .map(|t| {
                Ok((
                    BasisLabel::new(schema, t.label.clone())?,
                    Complex64::new(t.re, t.im),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::accumulate(schema, terms)
    }
}

impl Serialize for PureState {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let doc = StateDoc::deserialize(deserializer)?;
        PureState::from_doc(&doc).map_err(serde::de::Error::custom)
    }
}

/// JSON form of a state: `{"schema": int, "terms": [{"label", "re", "im"}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDoc {
    pub schema: u8,
    pub terms: Vec<TermDoc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub label: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

fn same_schema(a: &PureState, b: &PureState) -> Result<()> {
    if a.schema == b.schema {
        Ok(())
    } else {
        Err(Error::SchemaMismatch {
            expected: a.schema.id(),
            found: b.schema.id(),
        })
    }
}

pub fn make_basis_state(schema: Schema, registers: &[u32]) -> Result<PureState> {
    Ok(PureState::basis(BasisLabel::new(
        schema,
        registers.to_vec(),
    )?))
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn inner_product(a: &PureState, b: &PureState) -> Result<Complex64> {
    same_schema(a, b)?;
    // Walk the smaller support.
    let (small, large, conj_small) = if a.len() <= b.len() {
        (a, b, true)
    } else {
        (b, a, false)
    };
    let mut acc = Complex64::new(0.0, 0.0);
    for (label, amp) in &small.amps {
        if let Some(other) = large.amps.get(label) {
            acc += if conj_small {
                amp.conj() * other
            } else {
                other.conj() * amp
            };
        }
    }
    Ok(acc)
}

/// The projection onto labels whose query register equals `index`.
///
/// Negative indices give the zero projection.
pub fn project_query_index(s: &PureState, index: i64) -> Result<PureState> {
    if s.schema.query_position(1).is_none() {
        return Err(Error::Schema(
            "query-index projection needs a layout with a query register".into(),
        ));
    }
    if index < 0 || index > i64::from(u32::MAX) {
        return Ok(PureState::zero(s.schema));
    }
    let index = index as u32;
    Ok(s.filter(|l| l.query_index() == Some(index)))
}

/// The projection onto labels comparing the unordered pair `{i, j}`.
pub fn project_comparison_pair(s: &PureState, i: usize, j: usize) -> Result<PureState> {
    if s.schema != Schema::Comparison {
        return Err(Error::SchemaMismatch {
            expected: Schema::Comparison.id(),
            found: s.schema.id(),
        });
    }
    if i == j {
        return Err(Error::InvalidPair(i));
    }
    let (i, j) = (i as u64, j as u64);
    Ok(s.filter(|l| {
        let (a, b) = l.compared_pair().expect("comparison label");
        let (a, b) = (u64::from(a), u64::from(b));
        (a == i && b == j) || (a == j && b == i)
    }))
}

/// Marginal outcome distribution of one register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementResult {
    pub distribution: BTreeMap<u32, f64>,
}

impl MeasurementResult {
    pub fn probability(&self, value: u32) -> f64 {
        self.distribution.get(&value).copied().unwrap_or(0.0)
    }

    /// The most likely outcome and its probability.
    pub fn mode(&self) -> Option<(u32, f64)> {
        self.distribution
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(v, p)| (*v, *p))
    }
}

pub fn measure_register(s: &PureState, position: usize) -> Result<MeasurementResult> {
    s.require_normalized()?;
    let mut distribution = BTreeMap::new();
    for (label, amp) in &s.amps {
        let len = label.regs.len();
        if position >= len {
            return Err(Error::RegisterPosition { position, len });
        }
        *distribution.entry(label.regs[position]).or_insert(0.0) += amp.norm_sqr();
    }
    Ok(MeasurementResult { distribution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn g(z: u32, i: u32) -> BasisLabel {
        BasisLabel::new(Schema::Generic, vec![z, i]).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn basis_state_is_unit() {
        let s = make_basis_state(Schema::Generic, &[0, 0]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.amplitude(&g(0, 0)), c(1.0));
        assert_abs_diff_eq!(s.norm(), 1.0);
        let t = make_basis_state(Schema::Generic, &[0, 1]).unwrap();
        assert_eq!(inner_product(&s, &t).unwrap(), c(0.0));
    }

    #[test]
    fn schema_violations_are_rejected() {
        assert!(make_basis_state(Schema::Generic, &[3]).is_err());
        assert!(make_basis_state(Schema::Comparison, &[0, 1]).is_err());
        assert!(make_basis_state(Schema::Tree, &[1, 0, 3, 0]).is_err());
        assert!(Schema::from_id(9).is_err());
    }

    #[test]
    fn inner_product_of_plus_and_minus_vanishes() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus =
            PureState::from_terms(Schema::Generic, [(g(0, 0), c(h)), (g(0, 1), c(h))]).unwrap();
        let minus =
            PureState::from_terms(Schema::Generic, [(g(0, 0), c(h)), (g(0, 1), c(-h))]).unwrap();
        assert_abs_diff_eq!(
            inner_product(&plus, &minus).unwrap().norm(),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            inner_product(&plus, &plus).unwrap().re,
            1.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn inner_product_is_conjugate_linear_in_first_argument() {
        let a =
            PureState::from_terms(Schema::Generic, [(g(0, 0), Complex64::new(0.0, 1.0))]).unwrap();
        let b = PureState::basis(g(0, 0));
        assert_eq!(inner_product(&a, &b).unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(inner_product(&b, &a).unwrap(), Complex64::new(0.0, 1.0));
    }

    #[test]
    fn schema_mismatch_in_inner_product() {
        let a = PureState::basis(g(0, 0));
        let b = make_basis_state(Schema::Comparison, &[0, 0, 1]).unwrap();
        assert!(matches!(
            inner_product(&a, &b),
            Err(Error::SchemaMismatch { .. })
        ));
    }

    #[test]
    fn query_projection() {
        let s = PureState::basis(g(0, 1));
        assert_eq!(project_query_index(&s, 1).unwrap(), s);
        assert!(project_query_index(&s, 0).unwrap().is_empty());
        assert!(project_query_index(&s, -1).unwrap().is_empty());
    }

    #[test]
    fn comparison_projection_matches_both_orders() {
        let l01 = BasisLabel::new(Schema::Comparison, vec![0, 0, 1]).unwrap();
        let l10 = BasisLabel::new(Schema::Comparison, vec![0, 1, 0]).unwrap();
        let l02 = BasisLabel::new(Schema::Comparison, vec![0, 0, 2]).unwrap();
        for l in [&l01, &l10] {
            let s = PureState::basis(l.clone());
            assert_eq!(project_comparison_pair(&s, 0, 1).unwrap(), s);
        }
        let s = PureState::basis(l02);
        assert!(project_comparison_pair(&s, 0, 1).unwrap().is_empty());
        assert!(matches!(
            project_comparison_pair(&s, 1, 1),
            Err(Error::InvalidPair(1))
        ));
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mixed = PureState::from_terms(
            Schema::Comparison,
            [
                (l01, c(h)),
                (
                    BasisLabel::new(Schema::Comparison, vec![0, 0, 2]).unwrap(),
                    c(h),
                ),
            ],
        )
        .unwrap();
        let once = project_comparison_pair(&mixed, 0, 1).unwrap();
        assert_eq!(project_comparison_pair(&once, 0, 1).unwrap(), once);
    }

    #[test]
    fn measurement_marginals() {
        let s = PureState::basis(g(4, 2));
        let m = measure_register(&s, 1).unwrap();
        assert_eq!(m.distribution.len(), 1);
        assert_eq!(m.probability(2), 1.0);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = PureState::from_terms(Schema::Generic, [(g(0, 3), c(h)), (g(0, 5), c(h))]).unwrap();
        let m = measure_register(&s, 1).unwrap();
        assert_abs_diff_eq!(m.probability(3), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(m.probability(5), 0.5, epsilon = 1e-15);
        assert!(measure_register(&s, 7).is_err());
    }

    #[test]
    fn dust_is_pruned() {
        let s = PureState::accumulate(Schema::Generic, [(g(0, 0), c(1.0)), (g(0, 1), c(1e-17))])
            .unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn json_document_round_trip() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = PureState::from_terms(
            Schema::Generic,
            [
                (g(0, 0), Complex64::new(h, 0.0)),
                (g(2, 7), Complex64::new(0.0, -h)),
            ],
        )
        .unwrap();
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.starts_with("{\"schema\":0,\"terms\":[{\"label\":[0,0],\"re\":"));
        let back: PureState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
