//! Expansions of the free group into the truncated tensor algebra:
//! Magnus, group-like and special expansions.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freegroup::FreeGroupWord;
use crate::lie::{lyndon_basis, LieElement};
use crate::linalg::{Matrix, PivotOrder};
use crate::milnor::conjugator_log;
use crate::rational::{serde_pq, Q};
use crate::tensor::{TensorSeries, Word};

/// A Magnus expansion, given by the images `θ(x_1), ..., θ(x_n)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expansion {
    values: Vec<TensorSeries>,
    inverses: Vec<TensorSeries>,
}

/// Longest word evaluated letter by letter.
const LETTERWISE_MAX: usize = 16;

/// How the free choices in [`build_special`] are made.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Every free variable of every linear system is set to zero.
    #[default]
    Canonical,
    /// Free variables are small integers drawn from a seeded ChaCha8 stream.
    Randomized { seed: u64 },
}

impl Expansion {
    /// Checks the Magnus condition `θ(x_i) = 1 + X_i + (degree >= 2)`.
    pub fn new(values: Vec<TensorSeries>) -> Result<Self> {
        let n = values.len();
        let trunc = values.first().map_or(0, TensorSeries::truncation);
        for (k, v) in values.iter().enumerate() {
            if v.n() != n || v.truncation() != trunc {
                return Err(Error::Mismatch(format!("θ(x{}) has shape ({}, {})", k + 1, v.n(), v.truncation())));
            }
            let lin = TensorSeries::one(n, trunc) + TensorSeries::generator(n, trunc, k + 1);
            if v.first_difference(&lin).is_some_and(|d| d <= 1) {
                return Err(Error::Precondition(format!("θ(x{}) is not 1 + X{} modulo degree 2", k + 1, k + 1)));
            }
        }
        let inverses = values.iter().map(TensorSeries::inverse).collect::<Result<_>>()?;
        Ok(Expansion { values, inverses })
    }

    /// `x_i -> 1 + X_i`.
    pub fn magnus(n: usize, trunc: usize) -> Self {
        Self::new((1..=n).map(|i| TensorSeries::one(n, trunc) + TensorSeries::generator(n, trunc, i)).collect())
            .expect("Magnus condition holds")
    }

    /// `x_i -> exp(X_i)`.
    pub fn exponential(n: usize, trunc: usize) -> Self {
        Self::new((1..=n).map(|i| TensorSeries::generator(n, trunc, i).exp().unwrap()).collect())
            .expect("Magnus condition holds")
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn truncation(&self) -> usize {
        self.values.first().map_or(0, TensorSeries::truncation)
    }

    pub fn values(&self) -> &[TensorSeries] {
        &self.values
    }

    /// `θ(x_i)`.
    pub fn value(&self, i: usize) -> &TensorSeries {
        &self.values[i - 1]
    }

    pub fn retruncate(&self, trunc: usize) -> Expansion {
        Expansion::new(self.values.iter().map(|v| v.retruncate(trunc)).collect()).expect("still Magnus")
    }

    /// Multiplicative extension to words.
    pub fn evaluate(&self, w: &FreeGroupWord) -> Result<TensorSeries> {
        if w.n() != self.n() {
            return Err(Error::Mismatch(format!("word in F_{} vs expansion of rank {}", w.n(), self.n())));
        }
        if w.len() <= LETTERWISE_MAX {
            let mut acc = TensorSeries::one(self.n(), self.truncation());
            for l in w.letters() {
                let f = if l.exponent > 0 { &self.values[l.generator - 1] } else { &self.inverses[l.generator - 1] };
                acc = acc.try_mul(f)?;
            }
            return Ok(acc);
        }
        // θ(w) is the standard Magnus series of w with X_i -> θ(x_i) - 1.
        let one = TensorSeries::one(self.n(), self.truncation());
        let shifted: Vec<TensorSeries> = self.values.iter().map(|v| v.try_sub(&one)).collect::<Result<_>>()?;
        w.magnus(self.truncation()).substitute(&shifted)
    }

    /// Every `θ(x_i)` is group-like.
    pub fn is_grouplike(&self) -> bool {
        self.values.iter().all(TensorSeries::is_grouplike)
    }

    /// Full speciality check, with the conjugators `log U_i` when they exist.
    pub fn check_special(&self) -> SpecialReport {
        let n = self.n();
        let trunc = self.truncation();
        let mut report = SpecialReport {
            grouplike: true,
            tangential: true,
            normalized: true,
            first_failing_degree: None,
            diagnostic: String::new(),
            conjugators: None,
        };
        let fail = |report: &mut SpecialReport, d: usize, msg: String| {
            if report.first_failing_degree.is_none_or(|e| d < e) {
                report.first_failing_degree = Some(d);
                report.diagnostic = msg;
            }
        };
        let mut logs = Vec::new();
        for (k, v) in self.values.iter().enumerate() {
            match v.log().map(|l| (l.first_nonprimitive_degree(), l)) {
                Ok((None, l)) => logs.push(LieElement::from_tensor(&l).expect("primitive")),
                Ok((Some(d), _)) => {
                    report.grouplike = false;
                    fail(&mut report, d, format!("θ(x{}) is not group-like in degree {d}", k + 1));
                }
                Err(_) => {
                    report.grouplike = false;
                    fail(&mut report, 0, format!("θ(x{}) has constant term != 1", k + 1));
                }
            }
        }
        if !report.grouplike {
            report.tangential = false;
            report.normalized = false;
            return report;
        }
        let mut us = Vec::new();
        for (k, z) in logs.iter().enumerate() {
            match conjugator_log(z, k + 1) {
                Ok(y) => us.push(y),
                Err(Error::NotConjugate { degree, .. }) => {
                    report.tangential = false;
                    fail(
                        &mut report,
                        degree,
                        format!("θ(x{}) is not conjugate to exp(X{}) in degree {degree}", k + 1, k + 1),
                    );
                }
                Err(e) => {
                    report.tangential = false;
                    fail(&mut report, 0, e.to_string());
                }
            }
        }
        let total = self.evaluate(&FreeGroupWord::boundary(n)).and_then(|b| b.log()).expect("group-like values");
        let sum = (1..=n).fold(TensorSeries::zero(n, trunc), |acc, i| acc + TensorSeries::generator(n, trunc, i));
        if let Some(d) = total.first_difference(&sum) {
            report.normalized = false;
            fail(&mut report, d, format!("log θ(x1...x{n}) differs from X1+...+X{n} in degree {d}"));
        }
        if report.tangential {
            report.conjugators = Some(us);
        }
        report
    }

    pub fn is_special(&self) -> bool {
        self.check_special().is_special()
    }

    pub fn to_file(&self) -> ExpansionFile {
        ExpansionFile {
            n: self.n(),
            truncation: self.truncation(),
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(k, v)| GeneratorImage {
                    generator: k + 1,
                    terms: v.terms().map(|(w, c)| TermJson { word: w.to_vec(), coefficient: c.clone() }).collect(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: &ExpansionFile) -> Result<Self> {
        if file.values.len() != file.n {
            return Err(Error::Mismatch(format!("{} images for n = {}", file.values.len(), file.n)));
        }
        let mut values = vec![None; file.n];
        for img in &file.values {
            if !(1..=file.n).contains(&img.generator) {
                return Err(Error::Index { index: img.generator, n: file.n });
            }
            let terms = img
                .terms
                .iter()
                .map(|t| Ok((Word::from_letters(&t.word)?, t.coefficient.clone())))
                .collect::<Result<Vec<_>>>()?;
            values[img.generator - 1] = Some(TensorSeries::from_terms(file.n, file.truncation, terms)?);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(k, v)| v.ok_or_else(|| Error::Parse(format!("missing image of x{}", k + 1))))
            .collect::<Result<_>>()?;
        Self::new(values)
    }
}

/// Outcome of [`Expansion::check_special`].
#[derive(Debug, Clone)]
pub struct SpecialReport {
    pub grouplike: bool,
    pub tangential: bool,
    pub normalized: bool,
    pub first_failing_degree: Option<usize>,
    pub diagnostic: String,
    /// `log U_i`, normalized to have no `X_i` term, when tangential.
    pub conjugators: Option<Vec<LieElement>>,
}

impl SpecialReport {
    pub fn is_special(&self) -> bool {
        self.grouplike && self.tangential && self.normalized
    }
}

/// A verified special expansion together with `u_i = log U_i`.
#[derive(Debug, Clone)]
pub struct SpecialExpansion {
    theta: Expansion,
    u: Vec<LieElement>,
}

impl SpecialExpansion {
    pub fn new(theta: Expansion) -> Result<Self> {
        let report = theta.check_special();
        if !report.is_special() {
            return Err(Error::Precondition(format!("expansion is not special: {}", report.diagnostic)));
        }
        Ok(SpecialExpansion { u: report.conjugators.expect("tangential"), theta })
    }

    pub fn theta(&self) -> &Expansion {
        &self.theta
    }

    /// `log U_i`.
    pub fn log_u(&self, i: usize) -> &LieElement {
        &self.u[i - 1]
    }

    pub fn n(&self) -> usize {
        self.theta.n()
    }

    pub fn truncation(&self) -> usize {
        self.theta.truncation()
    }

    /// The same expansion modulo degree `> trunc`.
    pub fn retruncate(&self, trunc: usize) -> SpecialExpansion {
        SpecialExpansion {
            theta: self.theta.retruncate(trunc),
            u: self.u.iter().map(|x| x.retruncate(trunc.saturating_sub(1))).collect(),
        }
    }
}

fn exp_lie(x: &LieElement) -> TensorSeries {
    x.to_tensor().exp().expect("Lie elements have no constant term")
}

/// Builds a special expansion degree by degree.
///
/// Starting from `U_i = 1`, at step `m` the degree-`(m+1)` part `d` of
/// `log θ(x_1...x_n)` is removed by solving `sum_i [v_i, X_i] = -d` for
/// degree-`m` Lie elements `v_i` and replacing `U_i` by `exp(v_i) U_i`.
pub fn build_special(n: usize, trunc: usize, strategy: Strategy) -> Result<Expansion> {
    if n == 0 || trunc == 0 {
        return Err(Error::Precondition("need n >= 1 and N >= 1".into()));
    }
    let mut rng = match strategy {
        Strategy::Canonical => None,
        Strategy::Randomized { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let gens: Vec<LieElement> = (1..=n).map(|i| LieElement::generator(n, trunc, i)).collect();
    let mut u: Vec<LieElement> = vec![LieElement::zero(n, trunc); n];
    let theta_of = |u: &[LieElement]| -> Vec<TensorSeries> {
        u.iter().zip(&gens).map(|(ui, xi)| exp_lie(&ui.exp_ad(xi).unwrap())).collect()
    };
    for m in 1..trunc {
        let values = theta_of(&u);
        let prod = values.iter().skip(1).fold(values[0].clone(), |acc, v| acc * v);
        let log = LieElement::from_tensor(&prod.log()?)?;
        let d = log.degree_coords(m + 1);
        if d.is_empty() {
            continue;
        }
        let target_basis = lyndon_basis(n, m + 1);
        let row_of = |w: &Word| target_basis.binary_search(w).expect("Lyndon word of degree m+1");
        let source = lyndon_basis(n, m);
        let mut cols = Vec::new();
        for x in &gens {
            for w in source.iter() {
                let b = LieElement::basis(n, trunc, *w)?.bracket(x)?;
                cols.push(b.degree_coords(m + 1).iter().map(|(v, c)| (row_of(v), c.clone())).collect());
            }
        }
        let mat = Matrix::from_sparse_columns(target_basis.len(), &cols);
        let mut rhs = vec![Q::zero(); target_basis.len()];
        for (w, c) in d {
            rhs[row_of(w)] = -c.clone();
        }
        let sol = match rng.as_mut() {
            None => mat.solve(&rhs, PivotOrder::Forward),
            Some(r) => {
                mat.solve_with_free(&rhs, PivotOrder::Forward, |_| Q::from_integer(r.gen_range(-3i64..=3).into()))
            }
        }
        .ok_or_else(|| Error::Internal(format!("normalizing system inconsistent in degree {}", m + 1)))?;
        for (i, ui) in u.iter_mut().enumerate() {
            let coords = source
                .iter()
                .enumerate()
                .map(|(k, w)| (*w, sol[i * source.len() + k].clone()))
                .filter(|(_, c)| !c.is_zero());
            let v = LieElement::from_coords(n, trunc, coords)?;
            if v.is_zero() {
                continue;
            }
            let z = TensorSeries::bch(&v.to_tensor(), &ui.to_tensor())?;
            *ui = LieElement::from_tensor(&z)?;
        }
    }
    Expansion::new(theta_of(&u))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub word: Vec<usize>,
    #[serde(with = "serde_pq")]
    pub coefficient: Q,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorImage {
    pub generator: usize,
    pub terms: Vec<TermJson>,
}

/// JSON document for an expansion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionFile {
    pub n: usize,
    #[serde(rename = "N")]
    pub truncation: usize,
    pub values: Vec<GeneratorImage>,
}
