use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::state::{BasisLabel, PureState};
use super::CHECK_TOL;
use crate::error::{Error, Result};

type Domain = dyn Fn(&BasisLabel) -> bool + Send + Sync;
type Rule = dyn Fn(&BasisLabel) -> Vec<(BasisLabel, Complex64)> + Send + Sync;

/// A linear map given by its action on basis labels.
///
/// The map is only defined on labels accepted by the domain predicate and
/// must be an isometry there; [`LinearOp::check_isometry`] verifies this on
/// an explicit label set, and [`LinearOp::apply`] rejects any application
/// that changes the norm of its input.
#[derive(Clone)]
pub struct LinearOp {
    name: Arc<str>,
    domain: Arc<Domain>,
    rule: Arc<Rule>,
}

impl fmt::Debug for LinearOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearOp")
            .field("name", &self.name)
            .finish()
    }
}

impl LinearOp {
    pub fn new(
        name: impl Into<String>,
        domain: impl Fn(&BasisLabel) -> bool + Send + Sync + 'static,
        rule: impl Fn(&BasisLabel) -> Vec<(BasisLabel, Complex64)> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into().into(),
            domain: Arc::new(domain),
            rule: Arc::new(rule),
        }
    }

    pub fn identity() -> Self {
        Self::new(
            "identity",
            |_| true,
            |l| vec![(l.clone(), Complex64::new(1.0, 0.0))],
        )
    }

    /// A diagonal operator multiplying each label by `phase(label)`.
    pub fn diagonal(
        name: impl Into<String>,
        domain: impl Fn(&BasisLabel) -> bool + Send + Sync + 'static,
        phase: impl Fn(&BasisLabel) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, domain, move |l| vec![(l.clone(), phase(l))])
    }

    /// An operator given by explicit image columns over a finite basis.
    pub fn dense(
        name: impl Into<String>,
        basis: Vec<BasisLabel>,
        columns: Vec<Vec<(BasisLabel, Complex64)>>,
    ) -> Self {
        assert_eq!(
            basis.len(),
            columns.len(),
            "one image column per basis label"
        );
        let table: Arc<HashMap<BasisLabel, Vec<(BasisLabel, Complex64)>>> =
            Arc::new(basis.into_iter().zip(columns).collect());
        let lookup = Arc::clone(&table);
        Self::new(
            name,
            move |l| table.contains_key(l),
            move |l| lookup[l].clone(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn in_domain(&self, label: &BasisLabel) -> bool {
        (self.domain)(label)
    }

    /// Image of a single basis label, or a domain error.
    pub fn image(&self, label: &BasisLabel) -> Result<Vec<(BasisLabel, Complex64)>> {
        if !(self.domain)(label) {
            return Err(Error::Domain {
                op: self.name.to_string(),
                label: label.clone(),
            });
        }
        Ok((self.rule)(label))
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &LinearOp) -> LinearOp {
        let (first, second) = (self.clone(), next.clone());
        let (first_d, second_d) = (self.clone(), next.clone());
        LinearOp::new(
            format!("{}∘{}", next.name, self.name),
            move |l| {
                first_d.in_domain(l) && (first_d.rule)(l).iter().all(|(m, _)| second_d.in_domain(m))
            },
            move |l| {
                let mut out: BTreeMap<BasisLabel, Complex64> = BTreeMap::new();
                for (mid, a) in (first.rule)(l) {
                    for (end, b) in (second.rule)(&mid) {
                        *out.entry(end).or_default() += a * b;
                    }
                }
                out.into_iter().collect()
            },
        )
    }

    /// Applies the operator; fails on labels outside the domain or if the
    /// norm of the input is not preserved within [`CHECK_TOL`].
    pub fn apply(&self, s: &PureState) -> Result<PureState> {
        let mut out: BTreeMap<BasisLabel, Complex64> = BTreeMap::new();
        for (label, amp) in s.terms() {
            for (image, coeff) in self.image(label)? {
                if image.schema() != s.schema() {
                    return Err(Error::SchemaMismatch {
                        expected: s.schema().id(),
                        found: image.schema().id(),
                    });
                }
                *out.entry(image).or_default() += amp * coeff;
            }
        }
        let result = PureState::from_map(s.schema(), out);
        let (before, after) = (s.norm(), result.norm());
        if (before - after).abs() > CHECK_TOL {
            return Err(Error::NormDrift {
                op: self.name.to_string(),
                before,
                after,
            });
        }
        Ok(result)
    }

    /// Checks that the images of `labels` are orthonormal: the Gram matrix
    /// equals the identity within `tol`.
    pub fn check_isometry(&self, labels: &[BasisLabel], tol: f64) -> Result<()> {
        // Gram entries only accumulate between inputs sharing an output label.
        let mut by_output: HashMap<BasisLabel, Vec<(usize, Complex64)>> = HashMap::new();
        for (k, label) in labels.iter().enumerate() {
            let mut image: BTreeMap<BasisLabel, Complex64> = BTreeMap::new();
            for (out, c) in self.image(label)? {
                *image.entry(out).or_default() += c;
            }
            for (out, c) in image {
                by_output.entry(out).or_default().push((k, c));
            }
        }
        let mut gram: HashMap<(usize, usize), Complex64> = HashMap::new();
        for column in by_output.values() {
            for &(a, ca) in column {
                for &(b, cb) in column {
                    if a <= b {
                        *gram.entry((a, b)).or_default() += ca.conj() * cb;
                    }
                }
            }
        }
        for k in 0..labels.len() {
            let diag = gram.get(&(k, k)).copied().unwrap_or_default();
            let deviation = (diag - Complex64::new(1.0, 0.0)).norm();
            if deviation > tol {
                return Err(self.not_isometry(k, k, deviation));
            }
        }
        for (&(a, b), value) in &gram {
            if a != b && value.norm() > tol {
                return Err(self.not_isometry(a, b, value.norm()));
            }
        }
        Ok(())
    }

    fn not_isometry(&self, row: usize, col: usize, deviation: f64) -> Error {
        Error::NotIsometry {
            op: self.name.to_string(),
            row,
            col,
            deviation,
        }
    }
}

pub fn apply_op(op: &LinearOp, s: &PureState) -> Result<PureState> {
    op.apply(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{inner_product, Schema, ALGEBRA_TOL};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn g(z: u32, i: u32) -> BasisLabel {
        BasisLabel::new(Schema::Generic, vec![z, i]).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn hadamard() -> LinearOp {
        let (a, b) = (g(0, 0), g(0, 1));
        LinearOp::dense(
            "H",
            vec![a.clone(), b.clone()],
            vec![
                vec![(a.clone(), c(FRAC_1_SQRT_2)), (b.clone(), c(FRAC_1_SQRT_2))],
                vec![(a, c(FRAC_1_SQRT_2)), (b, c(-FRAC_1_SQRT_2))],
            ],
        )
    }

    #[test]
    fn identity_and_involution() {
        let s = PureState::from_terms(
            Schema::Generic,
            [(g(0, 0), c(0.6)), (g(1, 3), Complex64::new(0.0, 0.8))],
        )
        .unwrap();
        assert_eq!(apply_op(&LinearOp::identity(), &s).unwrap(), s);
        let flip = LinearOp::diagonal("flip", |_| true, |_| c(-1.0));
        let twice = flip.apply(&flip.apply(&s).unwrap()).unwrap();
        assert_eq!(twice, s);
    }

    #[test]
    fn hadamard_overlap_with_start() {
        let start = PureState::basis(g(0, 0));
        let out = hadamard().apply(&start).unwrap();
        assert_abs_diff_eq!(
            inner_product(&out, &start).unwrap().re,
            FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        hadamard()
            .check_isometry(&[g(0, 0), g(0, 1)], ALGEBRA_TOL)
            .unwrap();
        let back = hadamard().apply(&out).unwrap();
        assert_abs_diff_eq!(
            inner_product(&back, &start).unwrap().re,
            1.0,
            epsilon = 1e-15
        );
        assert_eq!(back.len(), 1);
    }

    #[test]
    fn domain_error_names_the_label() {
        let s = PureState::basis(g(5, 5));
        match hadamard().apply(&s) {
            Err(Error::Domain { op, label }) => {
                assert_eq!(op, "H");
                assert_eq!(label, g(5, 5));
            }
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn non_isometric_rules_are_caught() {
        // Both labels collapse onto one output.
        let collapse = LinearOp::new("collapse", |_| true, |_| vec![(g(0, 0), c(1.0))]);
        assert!(matches!(
            collapse.check_isometry(&[g(0, 0), g(0, 1)], ALGEBRA_TOL),
            Err(Error::NotIsometry { .. })
        ));
        let s = PureState::from_terms(
            Schema::Generic,
            [(g(0, 0), c(FRAC_1_SQRT_2)), (g(0, 1), c(FRAC_1_SQRT_2))],
        )
        .unwrap();
        assert!(matches!(collapse.apply(&s), Err(Error::NormDrift { .. })));
    }

    #[test]
    fn composition_matches_sequential_application() {
        let h = hadamard();
        let z = LinearOp::diagonal("Z", |_| true, |l| c(if l.reg(1) == 1 { -1.0 } else { 1.0 }));
        let hz = h.then(&z);
        let s = PureState::basis(g(0, 0));
        let seq = z.apply(&h.apply(&s).unwrap()).unwrap();
        assert_eq!(hz.apply(&s).unwrap(), seq);
    }
}
