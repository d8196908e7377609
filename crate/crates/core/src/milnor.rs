//! The special Artin representation and total Milnor invariants.
//!
//! For a special expansion `θ` and a pure braid (or longitude tuple) `L`,
//! `Art^θ(L) = θ ∘ Art(L) ∘ θ^-1` acts on the completed tensor algebra by
//! `X_i -> exp(Y_i) X_i exp(-Y_i)` with `Y_i` a Lie series whose `X_i`
//! coefficient vanishes. The total Milnor invariant is `sum_i X_i ⊗ Y_i`.

use std::collections::HashMap;
use std::sync::{OnceLock, RwLock};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expansion::SpecialExpansion;
use crate::freegroup::{longitudes, BraidWord, LongitudeTuple};
use crate::lie::{lyndon_basis, HTensorLie, LieElement};
use crate::linalg::{Matrix, PivotOrder};
use crate::rational::Q;
use crate::tensor::{TensorSeries, Word};

use num_traits::Zero;

/// The unique `Y` with `exp(ad Y) X_i = z` and no `X_i` term, where `z` is
/// known up to degree `N = z.max_degree()`; `Y` is returned up to `N - 1`.
pub fn conjugator_log(z: &LieElement, i: usize) -> Result<LieElement> {
    let n = z.n();
    let top = z.max_degree();
    if top == 0 {
        return Ok(LieElement::zero(n, 0));
    }
    let x = LieElement::generator(n, top, i);
    if z.degree_coords(1) != x.degree_coords(1) {
        return Err(Error::NotConjugate { generator: i, degree: 1 });
    }
    let mut y = LieElement::zero(n, top - 1);
    for m in 1..top {
        let residual = z.try_sub(&y.exp_ad(&x)?)?;
        let r = residual.degree_coords(m + 1);
        if r.is_empty() {
            continue;
        }
        let source: Vec<Word> = lyndon_basis(n, m).iter().copied().filter(|w| *w != Word::letter(i)).collect();
        let target = lyndon_basis(n, m + 1);
        let row_of = |w: &Word| target.binary_search(w).expect("Lyndon word of degree m+1");
        let cols: Vec<Vec<(usize, Q)>> = source
            .iter()
            .map(|w| {
                let b = LieElement::basis(n, m + 1, *w).and_then(|p| p.bracket(&x.retruncate(m + 1)))?;
                Ok(b.degree_coords(m + 1).iter().map(|(v, c)| (row_of(v), c.clone())).collect())
            })
            .collect::<Result<_>>()?;
        let mut rhs = vec![Q::zero(); target.len()];
        for (w, c) in r {
            rhs[row_of(w)] = c.clone();
        }
        let sol = Matrix::from_sparse_columns(target.len(), &cols)
            .solve(&rhs, PivotOrder::Forward)
            .ok_or(Error::NotConjugate { generator: i, degree: m + 1 })?;
        let step = LieElement::from_coords(n, top - 1, source.into_iter().zip(sol))?;
        y = y.try_add(&step)?;
    }
    Ok(y)
}

/// [`conjugator_log`] for a group-like series `W = exp(z)`.
pub fn conjugator(w: &TensorSeries, i: usize) -> Result<LieElement> {
    let z = w.log().map_err(|_| Error::NotGroupLike)?;
    let z = LieElement::from_tensor(&z).map_err(|_| Error::NotGroupLike)?;
    conjugator_log(&z, i)
}

/// A special automorphism `X_i -> exp(Y_i) X_i exp(-Y_i)`, known modulo
/// degree `> N`; each `Y_i` is kept up to degree `N - 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialAutData {
    trunc: usize,
    y: Vec<LieElement>,
}

impl SpecialAutData {
    /// Checks the normalization and the speciality condition.
    pub fn new(y: Vec<LieElement>, trunc: usize) -> Result<Self> {
        let n = y.len();
        if trunc == 0 || y.iter().any(|e| e.n() != n) {
            return Err(Error::Mismatch("conjugators must share n and a truncation >= 1".into()));
        }
        let y: Vec<LieElement> = y.into_iter().map(|e| e.retruncate(trunc - 1)).collect();
        for (k, e) in y.iter().enumerate() {
            if !e.coeff(Word::letter(k + 1)).is_zero() {
                return Err(Error::Precondition(format!("Y{} has a nonzero X{} coefficient", k + 1, k + 1)));
            }
        }
        let data = SpecialAutData { trunc, y };
        let sum = data.sum_of_images()?;
        let expected = (1..=n)
            .fold(LieElement::zero(n, trunc), |acc, i| acc.try_add(&LieElement::generator(n, trunc, i)).unwrap());
        if sum != expected {
            return Err(Error::Precondition("X1 + ... + Xn is not fixed".into()));
        }
        Ok(data)
    }

    pub fn identity(n: usize, trunc: usize) -> Self {
        SpecialAutData { trunc, y: vec![LieElement::zero(n, trunc.saturating_sub(1)); n] }
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn truncation(&self) -> usize {
        self.trunc
    }

    /// `Y_i`.
    pub fn y(&self, i: usize) -> &LieElement {
        &self.y[i - 1]
    }

    pub fn ys(&self) -> &[LieElement] {
        &self.y
    }

    /// `exp(ad Y_i) X_i`.
    pub fn image(&self, i: usize) -> Result<LieElement> {
        let x = LieElement::generator(self.n(), self.trunc, i);
        self.y[i - 1].exp_ad(&x)
    }

    pub fn images(&self) -> Result<Vec<LieElement>> {
        (1..=self.n()).map(|i| self.image(i)).collect()
    }

    fn sum_of_images(&self) -> Result<LieElement> {
        self.images()?.into_iter().try_fold(LieElement::zero(self.n(), self.trunc), |acc, e| acc.try_add(&e))
    }

    /// Whether `X_1 + ... + X_n` is fixed up to degree `N`.
    pub fn is_special(&self) -> bool {
        let n = self.n();
        let expected = (1..=n).fold(LieElement::zero(n, self.trunc), |acc, i| {
            acc.try_add(&LieElement::generator(n, self.trunc, i)).unwrap()
        });
        self.sum_of_images().map(|s| s == expected).unwrap_or(false)
    }

    /// Action on an arbitrary Lie series.
    pub fn apply(&self, x: &LieElement) -> Result<LieElement> {
        x.retruncate(self.trunc).substitute(&self.images()?)
    }

    /// `self ∘ other`, whose conjugators are `BCH(self(Y'_i), Y_i)` with
    /// the `X_i` coefficient removed.
    pub fn compose(&self, other: &SpecialAutData) -> Result<SpecialAutData> {
        if self.n() != other.n() {
            return Err(Error::Mismatch("automorphisms of different rank".into()));
        }
        let trunc = self.trunc.min(other.trunc);
        let outer: Vec<LieElement> = self.images()?.into_iter().map(|e| e.retruncate(trunc - 1)).collect();
        let y = (1..=self.n())
            .map(|i| {
                let moved = other.y(i).retruncate(trunc - 1).substitute(&outer)?;
                let z = TensorSeries::bch(&moved.to_tensor(), &self.y(i).retruncate(trunc - 1).to_tensor())?;
                normalize(z, i)
            })
            .collect::<Result<_>>()?;
        Ok(SpecialAutData { trunc, y })
    }

    /// `self ∘ other` through [`conjugator_log`]; slower, kept as a cross-check.
    pub fn compose_by_conjugation(&self, other: &SpecialAutData) -> Result<SpecialAutData> {
        if self.n() != other.n() {
            return Err(Error::Mismatch("automorphisms of different rank".into()));
        }
        let trunc = self.trunc.min(other.trunc);
        let outer = self.images()?;
        let y = (1..=self.n())
            .map(|i| {
                let z = other.image(i)?.retruncate(trunc).substitute(&outer)?;
                conjugator_log(&z, i)
            })
            .collect::<Result<_>>()?;
        Ok(SpecialAutData { trunc, y })
    }

    /// `sum_i X_i ⊗ Y_i`.
    pub fn milnor(&self) -> HTensorLie {
        HTensorLie::new(self.y.clone()).expect("entries share n")
    }
}

fn exp_lie(x: &LieElement) -> Result<TensorSeries> {
    x.to_tensor().exp()
}

fn check_theta(n: usize, theta: &SpecialExpansion, trunc: usize) -> Result<SpecialExpansion> {
    if trunc == 0 {
        return Err(Error::Precondition("truncation N must be >= 1".into()));
    }
    if n != theta.n() {
        return Err(Error::Mismatch(format!("input on {n} strands, expansion of rank {}", theta.n())));
    }
    if trunc > theta.truncation() {
        return Err(Error::Precondition(format!(
            "expansion is known to degree {} but degree {trunc} was requested",
            theta.truncation()
        )));
    }
    Ok(theta.retruncate(trunc))
}

fn effective_trunc(t: &LongitudeTuple, theta: &SpecialExpansion, trunc: usize) -> Result<SpecialExpansion> {
    let theta = check_theta(t.n(), theta, trunc)?;
    if let Some(k) = t.truncation() {
        if trunc > k + 1 {
            return Err(Error::Precondition(format!(
                "longitude tuple is valid modulo Γ_{} only; truncation {trunc} needs K >= {}",
                k + 1,
                trunc - 1
            )));
        }
    }
    Ok(theta)
}

/// `Art^θ(L)` up to degree `N`.
///
/// With `θ(x_i) = U_i exp(X_i) U_i^-1`, the automorphism `Ψ = θ ∘ Art(L) ∘ θ^-1`
/// satisfies `exp Ψ(X_i) = V_i exp(X_i) V_i^-1` with
/// `V_i = Ψ(U_i)^-1 θ(y_i) U_i`. Since `Ψ(U_i)` depends on `Ψ` only through
/// lower degrees, iterating from `Ψ = id` gains a degree per round.
pub fn art_theta(t: &LongitudeTuple, theta: &SpecialExpansion, trunc: usize) -> Result<SpecialAutData> {
    let theta = effective_trunc(t, theta, trunc)?;
    let n = t.n();
    let theta_y: Vec<TensorSeries> = t.words().iter().map(|y| theta.theta().evaluate(y)).collect::<Result<_>>()?;
    let u: Vec<TensorSeries> = (1..=n).map(|i| exp_lie(&theta.log_u(i).retruncate(trunc))).collect::<Result<_>>()?;
    let mut psi = SpecialAutData::identity(n, trunc);
    for _ in 0..=trunc {
        let images = psi.images()?;
        let mut y = Vec::with_capacity(n);
        for i in 1..=n {
            let psi_u = exp_lie(&theta.log_u(i).retruncate(trunc).substitute(&images)?)?;
            let v = psi_u.inverse()?.try_mul(&theta_y[i - 1])?.try_mul(&u[i - 1])?;
            y.push(normalized_log(&v, i)?.retruncate(trunc - 1));
        }
        let next = SpecialAutData { trunc, y };
        if next == psi {
            if !psi.is_special() {
                return Err(Error::Internal("Art^θ does not fix X1 + ... + Xn".into()));
            }
            return Ok(psi);
        }
        psi = next;
    }
    Err(Error::Internal("Art^θ iteration did not stabilize".into()))
}

/// `Y` with `exp(Y) = V exp(-t X_i)`, `t` the `X_i` coefficient of `log V`,
/// so that `Y` has no `X_i` term and conjugates `X_i` like `V`.
fn normalized_log(v: &TensorSeries, i: usize) -> Result<LieElement> {
    normalize(v.log()?, i)
}

/// Removes the `X_i` term of a primitive `lv` by a right BCH factor.
fn normalize(lv: TensorSeries, i: usize) -> Result<LieElement> {
    let n = lv.n();
    let trunc = lv.truncation();
    let t = lv.coeff(Word::letter(i));
    let z = if t.is_zero() { lv } else { TensorSeries::bch(&lv, &TensorSeries::generator(n, trunc, i).scale(&-t))? };
    LieElement::from_tensor(&z)
}

/// The single-substitution formula `V_i = U_i^-1 θ(y_i) U_i`, which agrees
/// with [`art_theta`] only in the lowest nonvanishing degree.
pub fn art_theta_first_order(t: &LongitudeTuple, theta: &SpecialExpansion, trunc: usize) -> Result<SpecialAutData> {
    let theta = effective_trunc(t, theta, trunc)?;
    let y = (1..=t.n())
        .map(|i| {
            let u = exp_lie(&theta.log_u(i).retruncate(trunc))?;
            let v = u.inverse()?.try_mul(&theta.theta().evaluate(t.word(i))?)?.try_mul(&u)?;
            Ok(normalized_log(&v, i)?.retruncate(trunc - 1))
        })
        .collect::<Result<_>>()?;
    Ok(SpecialAutData { trunc, y })
}

/// Input to the invariant computations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkData {
    Braid(BraidWord),
    Tuple(LongitudeTuple),
}

impl LinkData {
    pub fn n(&self) -> usize {
        match self {
            LinkData::Braid(b) => b.n(),
            LinkData::Tuple(t) => t.n(),
        }
    }

    pub fn longitudes(&self) -> Result<LongitudeTuple> {
        match self {
            LinkData::Braid(b) => longitudes(b),
            LinkData::Tuple(t) => Ok(t.clone()),
        }
    }
}

impl From<BraidWord> for LinkData {
    fn from(b: BraidWord) -> Self {
        LinkData::Braid(b)
    }
}

impl From<LongitudeTuple> for LinkData {
    fn from(t: LongitudeTuple) -> Self {
        LinkData::Tuple(t)
    }
}

/// Cache key of an expansion: a hash of its serialized values.
fn expansion_key(theta: &SpecialExpansion) -> [u8; 32] {
    let json = serde_json::to_vec(&theta.theta().to_file()).expect("expansion serializes");
    Sha256::digest(json).into()
}

/// `Art^θ` of `A(i,j)^{±1}`, memoized per expansion and truncation.
fn generator_action(
    theta: &SpecialExpansion,
    key: [u8; 32],
    i: usize,
    j: usize,
    positive: bool,
) -> Result<SpecialAutData> {
    type Cache = HashMap<([u8; 32], usize, usize, bool), SpecialAutData>;
    static CACHE: OnceLock<RwLock<Cache>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(a) = cache.read().unwrap().get(&(key, i, j, positive)) {
        return Ok(a.clone());
    }
    let g = BraidWord::generator(theta.n(), i, j)?;
    let g = if positive { g } else { g.inverse() };
    let a = art_theta(&longitudes(&g)?, theta, theta.truncation())?;
    cache.write().unwrap().insert((key, i, j, positive), a.clone());
    Ok(a)
}

/// `Art^θ` of a braid word, composed from its letters. Agrees with
/// [`art_theta`] on its longitudes, without evaluating `θ` on them.
pub fn art_theta_braid(braid: &BraidWord, theta: &SpecialExpansion, trunc: usize) -> Result<SpecialAutData> {
    let theta = check_theta(braid.n(), theta, trunc)?;
    let key = expansion_key(&theta);
    let mut acc = SpecialAutData::identity(braid.n(), trunc);
    for letter in braid.letters() {
        let g = generator_action(&theta, key, letter.i, letter.j, letter.exponent > 0)?;
        for _ in 0..letter.exponent.unsigned_abs() {
            acc = acc.compose(&g)?;
        }
    }
    Ok(acc)
}

/// `Art^θ(L)` for either kind of input.
pub fn art_theta_data(data: &LinkData, theta: &SpecialExpansion, trunc: usize) -> Result<SpecialAutData> {
    match data {
        LinkData::Braid(b) => art_theta_braid(b, theta, trunc),
        LinkData::Tuple(t) => art_theta(t, theta, trunc),
    }
}

/// `μ^θ(L) = sum_i X_i ⊗ Y_i` with `Y_i` up to degree `N - 1`.
pub fn total_milnor(data: &LinkData, theta: &SpecialExpansion, trunc: usize) -> Result<HTensorLie> {
    Ok(art_theta_data(data, theta, trunc)?.milnor())
}

/// Errors unless every degree below `k` vanishes.
pub fn check_filtration(mu: &HTensorLie, k: usize) -> Result<()> {
    match mu.min_degree() {
        Some(d) if d < k => Err(Error::NotInFiltration { level: k, degree: d }),
        _ => Ok(()),
    }
}

/// The degree-`k` Milnor invariant of an input in filtration level `k`.
pub fn milnor_degree_k(data: &LinkData, theta: &SpecialExpansion, k: usize) -> Result<HTensorLie> {
    if k == 0 {
        return Err(Error::Precondition("k must be >= 1".into()));
    }
    let mu = total_milnor(data, theta, k + 1)?;
    check_filtration(&mu, k)?;
    Ok(mu.degree_part(k))
}

/// Degrees `k..=2k-1` of the total Milnor invariant.
pub fn truncated_milnor(data: &LinkData, theta: &SpecialExpansion, k: usize) -> Result<HTensorLie> {
    if k == 0 {
        return Err(Error::Precondition("k must be >= 1".into()));
    }
    let mu = total_milnor(data, theta, 2 * k)?;
    check_filtration(&mu, k)?;
    Ok(mu.degree_range(k, 2 * k - 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::{build_special, Strategy};
    use crate::freegroup::FreeGroupWord;
    use crate::rational::q;

    fn special(n: usize, trunc: usize, s: Strategy) -> SpecialExpansion {
        SpecialExpansion::new(build_special(n, trunc, s).unwrap()).unwrap()
    }

    fn a(n: usize, i: usize, j: usize) -> BraidWord {
        BraidWord::generator(n, i, j).unwrap()
    }

    fn gen(n: usize, t: usize, i: usize) -> LieElement {
        LieElement::generator(n, t, i)
    }

    #[test]
    fn conjugator_trivial_and_constructed() {
        let t = 4;
        let z = gen(2, t, 1);
        assert!(conjugator_log(&z, 1).unwrap().is_zero());
        let y = gen(2, t, 1).bracket(&gen(2, t, 2)).unwrap();
        let w = y.exp_ad(&gen(2, t, 1)).unwrap();
        assert_eq!(conjugator_log(&w, 1).unwrap(), y.retruncate(t - 1));
        let wt = exp_lie(&w).unwrap();
        assert_eq!(conjugator(&wt, 1).unwrap(), y.retruncate(t - 1));
    }

    #[test]
    fn conjugator_rejects_non_conjugates() {
        assert_eq!(conjugator_log(&gen(2, 3, 2), 1), Err(Error::NotConjugate { generator: 1, degree: 1 }));
        let z = gen(2, 3, 1)
            .try_add(&gen(2, 3, 1).bracket(&gen(2, 3, 2)).unwrap().bracket(&gen(2, 3, 2)).unwrap())
            .unwrap();
        assert_eq!(conjugator_log(&z, 1), Err(Error::NotConjugate { generator: 1, degree: 3 }));
    }

    #[test]
    fn identity_has_zero_invariant() {
        let th = special(3, 4, Strategy::Canonical);
        let mu = total_milnor(&BraidWord::identity(3).into(), &th, 4).unwrap();
        assert!(mu.is_zero());
    }

    #[test]
    fn linking_numbers() {
        let th = special(2, 3, Strategy::Canonical);
        let mu = milnor_degree_k(&a(2, 1, 2).into(), &th, 1).unwrap();
        assert_eq!(mu.entry(1).coeff(Word::letter(2)), q(1));
        assert_eq!(mu.entry(2).coeff(Word::letter(1)), q(1));
        assert_eq!(mu.to_entries().len(), 2);
    }

    #[test]
    fn art_theta_conjugates_theta_images() {
        let n = 3;
        let t = 4;
        let th = special(n, t, Strategy::Randomized { seed: 5 });
        let b = a(3, 1, 2).mul(&a(3, 2, 3).inverse()).mul(&a(3, 1, 3));
        let lt = longitudes(&b).unwrap();
        let psi = art_theta(&lt, &th, t).unwrap();
        // Ψ(θ(x_j)) = θ(Art(L)(x_j)), with Ψ applied by substitution.
        let imgs: Vec<TensorSeries> = psi.images().unwrap().iter().map(LieElement::to_tensor).collect();
        for j in 1..=n {
            let lhs = th.theta().value(j).try_sub(&TensorSeries::one(n, t)).unwrap().substitute(&imgs).unwrap()
                + TensorSeries::one(n, t);
            let x = FreeGroupWord::generator(n, j).unwrap();
            let rhs = th.theta().evaluate(&lt.word(j).conjugate(&x)).unwrap();
            assert_eq!(lhs, rhs, "generator {j}");
        }
    }

    #[test]
    fn functoriality() {
        let th = special(3, 4, Strategy::Canonical);
        let l1 = a(3, 1, 2).mul(&a(3, 1, 3));
        let l2 = a(3, 2, 3).inverse().mul(&a(3, 1, 2));
        let p1 = art_theta(&longitudes(&l1).unwrap(), &th, 4).unwrap();
        let p2 = art_theta(&longitudes(&l2).unwrap(), &th, 4).unwrap();
        let p12 = art_theta(&longitudes(&l1.mul(&l2)).unwrap(), &th, 4).unwrap();
        assert_eq!(art_theta_braid(&l1.mul(&l2), &th, 4).unwrap(), p12);
        assert_eq!(p1.compose(&p2).unwrap(), p12);
        assert_eq!(p1.compose_by_conjugation(&p2).unwrap(), p12);
    }

    #[test]
    fn filtration_errors() {
        let th = special(3, 4, Strategy::Canonical);
        let e = milnor_degree_k(&a(3, 1, 2).into(), &th, 2);
        assert_eq!(e, Err(Error::NotInFiltration { level: 2, degree: 1 }));
    }

    #[test]
    fn first_order_formula_agrees_in_lowest_degree() {
        let th = special(3, 5, Strategy::Randomized { seed: 3 });
        let c = BraidWord::commutator(&a(3, 1, 2), &a(3, 1, 3));
        let lt = longitudes(&c).unwrap();
        let exact = art_theta(&lt, &th, 5).unwrap().milnor();
        let approx = art_theta_first_order(&lt, &th, 5).unwrap().milnor();
        assert_eq!(exact.degree_part(2), approx.degree_part(2));
    }
}
