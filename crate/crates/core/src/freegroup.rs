//! Free groups, pure braids in the band generators `A(i,j)`, and the
//! Artin action of pure braids on the free group.
//!
//! # Conventions
//!
//! `x_1, ..., x_n` generate `F_n`. The band generator `A(i,j)` (`i < j`)
//! acts by
//!
//! ```text
//! x_i -> (x_i x_j) x_i (x_i x_j)^-1
//! x_j -> x_i x_j x_i^-1
//! x_k -> C x_k C^-1      for i < k < j, where C = x_i x_j x_i^-1 x_j^-1
//! x_k -> x_k             otherwise
//! ```
//!
//! and `A(i,j)^-1` by the inverse automorphism
//!
//! ```text
//! x_i -> x_j^-1 x_i x_j
//! x_j -> (x_i x_j)^-1 x_j (x_i x_j)
//! x_k -> C' x_k C'^-1    for i < k < j, where C' = x_j^-1 x_i^-1 x_j x_i
//! ```
//!
//! A braid word `b_1 b_2 ... b_m` acts as `Art(b_1) ∘ Art(b_2) ∘ ... ∘ Art(b_m)`,
//! so `Art(L L') = Art(L) ∘ Art(L')`. With these choices every relation of
//! the standard presentation of `PB_n` holds as an identity of
//! automorphisms, the product `x_1 ... x_n` is fixed, and the linking
//! number of `A(i,j)` is `+1`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::TensorSeries;

/// One letter `x_generator^exponent`, `exponent ∈ {+1, -1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub generator: usize,
    pub exponent: i8,
}

impl Letter {
    pub fn new(generator: usize, exponent: i8) -> Self {
        debug_assert!(exponent == 1 || exponent == -1);
        Letter { generator, exponent }
    }

    pub fn inverse(self) -> Self {
        Letter { generator: self.generator, exponent: -self.exponent }
    }

    /// Signed-integer form: `+i` for `x_i`, `-i` for `x_i^-1`.
    pub fn to_signed(self) -> i64 {
        self.generator as i64 * self.exponent as i64
    }
}

/// A freely reduced word in `x_1, ..., x_n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FreeGroupWord {
    n: usize,
    letters: Vec<Letter>,
}

fn check_rank(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::Precondition(format!("free group rank must be >= 2, got {n}")));
    }
    Ok(())
}

fn push_reduced(out: &mut Vec<Letter>, l: Letter) {
    if out.last().is_some_and(|&last| last == l.inverse()) {
        out.pop();
    } else {
        out.push(l);
    }
}

impl FreeGroupWord {
    /// Validates indices and freely reduces.
    pub fn new(n: usize, letters: impl IntoIterator<Item = Letter>) -> Result<Self> {
        check_rank(n)?;
        let mut out = Vec::new();
        for l in letters {
            if l.generator == 0 || l.generator > n {
                return Err(Error::Index { index: l.generator, n });
            }
            if l.exponent != 1 && l.exponent != -1 {
                return Err(Error::Parse(format!("exponent must be +1 or -1, got {}", l.exponent)));
            }
            push_reduced(&mut out, l);
        }
        Ok(FreeGroupWord { n, letters: out })
    }

    /// From signed integers (`-2` is `x_2^-1`).
    pub fn from_signed(n: usize, letters: &[i64]) -> Result<Self> {
        let ls = letters
            .iter()
            .map(|&s| {
                if s == 0 {
                    Err(Error::Parse("letter 0 is not a generator".into()))
                } else {
                    Ok(Letter::new(s.unsigned_abs() as usize, s.signum() as i8))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, ls)
    }

    pub fn identity(n: usize) -> Self {
        FreeGroupWord { n, letters: Vec::new() }
    }

    pub fn generator(n: usize, i: usize) -> Result<Self> {
        Self::new(n, [Letter::new(i, 1)])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn to_signed(&self) -> Vec<i64> {
        self.letters.iter().map(|l| l.to_signed()).collect()
    }

    pub fn mul(&self, other: &FreeGroupWord) -> FreeGroupWord {
        debug_assert_eq!(self.n, other.n);
        let mut out = self.letters.clone();
        for &l in &other.letters {
            push_reduced(&mut out, l);
        }
        FreeGroupWord { n: self.n, letters: out }
    }

    pub fn inverse(&self) -> FreeGroupWord {
        FreeGroupWord { n: self.n, letters: self.letters.iter().rev().map(|l| l.inverse()).collect() }
    }

    /// `a b a^-1 b^-1`.
    pub fn commutator(a: &FreeGroupWord, b: &FreeGroupWord) -> FreeGroupWord {
        a.mul(b).mul(&a.inverse()).mul(&b.inverse())
    }

    /// `self * x * self^-1`.
    pub fn conjugate(&self, x: &FreeGroupWord) -> FreeGroupWord {
        self.mul(x).mul(&self.inverse())
    }

    pub fn pow(&self, e: i64) -> FreeGroupWord {
        let base = if e < 0 { self.inverse() } else { self.clone() };
        (0..e.unsigned_abs()).fold(FreeGroupWord::identity(self.n), |acc, _| acc.mul(&base))
    }

    pub fn exponent_sum(&self, generator: usize) -> i64 {
        self.letters.iter().filter(|l| l.generator == generator).map(|l| l.exponent as i64).sum()
    }

    /// `x_1 x_2 ... x_n`, the boundary word.
    pub fn boundary(n: usize) -> FreeGroupWord {
        FreeGroupWord { n, letters: (1..=n).map(|i| Letter::new(i, 1)).collect() }
    }

    /// Image under the monoid map sending `x_i` to `images[i-1]`.
    pub fn substitute(&self, images: &[FreeGroupWord]) -> FreeGroupWord {
        let n = images.first().map_or(self.n, |w| w.n);
        let mut out = Vec::new();
        for l in &self.letters {
            let img = &images[l.generator - 1];
            if l.exponent > 0 {
                for &m in &img.letters {
                    push_reduced(&mut out, m);
                }
            } else {
                for m in img.letters.iter().rev() {
                    push_reduced(&mut out, m.inverse());
                }
            }
        }
        FreeGroupWord { n, letters: out }
    }

    /// The standard Magnus expansion `x_i -> 1 + X_i`, truncated at `trunc`.
    pub fn magnus(&self, trunc: usize) -> TensorSeries {
        let mut gens = Vec::with_capacity(self.n);
        let mut invs = Vec::with_capacity(self.n);
        for i in 1..=self.n {
            let g = TensorSeries::one(self.n, trunc) + TensorSeries::generator(self.n, trunc, i);
            invs.push(g.inverse().expect("constant term is 1"));
            gens.push(g);
        }
        self.letters.iter().fold(TensorSeries::one(self.n, trunc), |acc, l| {
            let f = if l.exponent > 0 { &gens[l.generator - 1] } else { &invs[l.generator - 1] };
            &acc * f
        })
    }

    /// Largest `d <= cap` with the word in the `d`-th lower central series
    /// term, via the vanishing of the Magnus expansion below degree `d`.
    pub fn lcs_depth(&self, cap: usize) -> usize {
        if cap <= 1 {
            return cap;
        }
        let m = self.magnus(cap - 1);
        (1..cap).find(|&d| !m.degree_part_is_zero(d)).unwrap_or(cap)
    }
}

impl fmt::Display for FreeGroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|l| if l.exponent > 0 { format!("x{}", l.generator) } else { format!("x{}^-1", l.generator) })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// One letter `A(i,j)^exponent` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BraidLetter {
    pub i: usize,
    pub j: usize,
    pub exponent: i8,
}

impl BraidLetter {
    pub fn inverse(self) -> Self {
        BraidLetter { exponent: -self.exponent, ..self }
    }
}

/// A word in the pure braid generators. Not reduced beyond cancelling
/// adjacent inverse pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BraidWord {
    n: usize,
    letters: Vec<BraidLetter>,
}

impl BraidWord {
    pub fn new(n: usize, letters: impl IntoIterator<Item = BraidLetter>) -> Result<Self> {
        check_rank(n)?;
        let mut out: Vec<BraidLetter> = Vec::new();
        for l in letters {
            if !(1 <= l.i && l.i < l.j && l.j <= n) {
                return Err(Error::Index { index: if l.i == 0 || l.i >= l.j { l.i } else { l.j }, n });
            }
            if l.exponent != 1 && l.exponent != -1 {
                return Err(Error::Parse(format!("braid exponent must be +1 or -1, got {}", l.exponent)));
            }
            if out.last().is_some_and(|&last| last == l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Ok(BraidWord { n, letters: out })
    }

    pub fn identity(n: usize) -> Self {
        BraidWord { n, letters: Vec::new() }
    }

    /// `A(i,j)`.
    pub fn generator(n: usize, i: usize, j: usize) -> Result<Self> {
        Self::new(n, [BraidLetter { i, j, exponent: 1 }])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn letters(&self) -> &[BraidLetter] {
        &self.letters
    }

    pub fn is_identity_word(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn mul(&self, other: &BraidWord) -> BraidWord {
        BraidWord::new(self.n, self.letters.iter().chain(&other.letters).copied()).expect("letters already validated")
    }

    pub fn inverse(&self) -> BraidWord {
        BraidWord { n: self.n, letters: self.letters.iter().rev().map(|l| l.inverse()).collect() }
    }

    pub fn pow(&self, e: i64) -> BraidWord {
        let base = if e < 0 { self.inverse() } else { self.clone() };
        (0..e.unsigned_abs()).fold(BraidWord::identity(self.n), |acc, _| acc.mul(&base))
    }

    /// `a b a^-1 b^-1`.
    pub fn commutator(a: &BraidWord, b: &BraidWord) -> BraidWord {
        a.mul(b).mul(&a.inverse()).mul(&b.inverse())
    }
}

impl fmt::Display for BraidWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|l| if l.exponent > 0 { format!("A({},{})", l.i, l.j) } else { format!("A({},{})^-1", l.i, l.j) })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// An endomorphism of `F_n` given by the images of the generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeAutomorphism {
    images: Vec<FreeGroupWord>,
}

impl FreeAutomorphism {
    pub fn identity(n: usize) -> Self {
        FreeAutomorphism { images: (1..=n).map(|i| FreeGroupWord::generator(n, i).unwrap()).collect() }
    }

    pub fn from_images(images: Vec<FreeGroupWord>) -> Self {
        FreeAutomorphism { images }
    }

    pub fn images(&self) -> &[FreeGroupWord] {
        &self.images
    }

    pub fn image(&self, generator: usize) -> &FreeGroupWord {
        &self.images[generator - 1]
    }

    pub fn apply(&self, w: &FreeGroupWord) -> FreeGroupWord {
        w.substitute(&self.images)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &FreeAutomorphism) -> FreeAutomorphism {
        FreeAutomorphism { images: other.images.iter().map(|w| self.apply(w)).collect() }
    }

    /// Action of a single band generator (or its inverse).
    pub fn band(n: usize, letter: BraidLetter) -> FreeAutomorphism {
        let x = |k: usize| FreeGroupWord::generator(n, k).unwrap();
        let (i, j) = (letter.i, letter.j);
        let (xi, xj) = (x(i), x(j));
        let mut images: Vec<FreeGroupWord> = (1..=n).map(x).collect();
        if letter.exponent > 0 {
            let xixj = xi.mul(&xj);
            let c = FreeGroupWord::commutator(&xi, &xj);
            images[i - 1] = xixj.conjugate(&xi);
            images[j - 1] = xi.conjugate(&xj);
            for k in i + 1..j {
                images[k - 1] = c.conjugate(&x(k));
            }
        } else {
            let xixj = xi.mul(&xj);
            let c = FreeGroupWord::commutator(&xj.inverse(), &xi.inverse());
            images[i - 1] = xj.inverse().conjugate(&xi);
            images[j - 1] = xixj.inverse().conjugate(&xj);
            for k in i + 1..j {
                images[k - 1] = c.conjugate(&x(k));
            }
        }
        FreeAutomorphism { images }
    }
}

/// `Art(braid)`.
pub fn artin(braid: &BraidWord) -> FreeAutomorphism {
    let n = braid.n();
    braid.letters().iter().fold(FreeAutomorphism::identity(n), |acc, &l| acc.compose(&FreeAutomorphism::band(n, l)))
}

/// Image of `word` under `Art(braid)`.
pub fn artin_action(braid: &BraidWord, word: &FreeGroupWord) -> Result<FreeGroupWord> {
    if braid.n() != word.n() {
        return Err(Error::Mismatch(format!("braid on {} strands vs word in F_{}", braid.n(), word.n())));
    }
    Ok(artin(braid).apply(word))
}

/// The longitude words `y_1, ..., y_n` of a pure braid or string link,
/// so that the action is `x_i -> y_i x_i y_i^-1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LongitudeTuple {
    n: usize,
    words: Vec<FreeGroupWord>,
    /// `Some(K)`: the tuple is only known to describe an automorphism of
    /// `F_n / Γ_{K+1}`. `None`: exact (e.g. derived from a braid).
    truncation: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LongitudeTupleFile {
    pub n: usize,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    /// Each word as signed generator indices.
    pub words: Vec<Vec<i64>>,
}

impl LongitudeTuple {
    /// User-supplied tuple. Checks the normalization exactly and the
    /// boundary condition modulo `Γ_{K+1}` (or exactly when `K` is absent).
    pub fn new(words: Vec<FreeGroupWord>, truncation: Option<usize>) -> Result<Self> {
        let n = words.first().map(FreeGroupWord::n).unwrap_or(0);
        check_rank(n)?;
        if words.len() != n || words.iter().any(|w| w.n() != n) {
            return Err(Error::Mismatch(format!("expected {n} longitude words in F_{n}")));
        }
        for (i, w) in words.iter().enumerate() {
            if w.exponent_sum(i + 1) != 0 {
                return Err(Error::Precondition(format!(
                    "exponent sum of x{} in y{} must be 0, got {}",
                    i + 1,
                    i + 1,
                    w.exponent_sum(i + 1)
                )));
            }
        }
        if truncation == Some(0) {
            return Err(Error::Precondition("truncation K must be >= 1".into()));
        }
        let t = LongitudeTuple { n, words, truncation };
        let defect = t.boundary_defect();
        match truncation {
            None if !defect.is_empty() => {
                return Err(Error::Precondition(format!("x_1...x_n is not fixed: defect {defect}")));
            }
            Some(k) if defect.lcs_depth(k + 1) <= k => {
                return Err(Error::Precondition(format!("boundary condition fails modulo Γ_{}", k + 1)));
            }
            _ => {}
        }
        Ok(t)
    }

    pub fn from_file(file: &LongitudeTupleFile) -> Result<Self> {
        let words = file.words.iter().map(|w| FreeGroupWord::from_signed(file.n, w)).collect::<Result<Vec<_>>>()?;
        if words.len() != file.n {
            return Err(Error::Mismatch(format!("expected {} words, got {}", file.n, words.len())));
        }
        Self::new(words, file.truncation)
    }

    pub fn to_file(&self) -> LongitudeTupleFile {
        LongitudeTupleFile {
            n: self.n,
            truncation: self.truncation,
            words: self.words.iter().map(FreeGroupWord::to_signed).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn words(&self) -> &[FreeGroupWord] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &FreeGroupWord {
        &self.words[i - 1]
    }

    pub fn truncation(&self) -> Option<usize> {
        self.truncation
    }

    /// The automorphism `x_i -> y_i x_i y_i^-1`.
    pub fn automorphism(&self) -> FreeAutomorphism {
        FreeAutomorphism::from_images(
            self.words
                .iter()
                .enumerate()
                .map(|(i, y)| y.conjugate(&FreeGroupWord::generator(self.n, i + 1).unwrap()))
                .collect(),
        )
    }

    /// `φ(x_1...x_n) (x_1...x_n)^-1`.
    pub fn boundary_defect(&self) -> FreeGroupWord {
        let b = FreeGroupWord::boundary(self.n);
        self.automorphism().apply(&b).mul(&b.inverse())
    }

    /// Tuple of a product `L L'`, from `y_i(L L') = Art(L)(y_i(L')) y_i(L)`
    /// renormalized.
    pub fn compose(&self, other: &LongitudeTuple) -> Result<LongitudeTuple> {
        let phi = self.automorphism();
        let words = (0..self.n)
            .map(|i| {
                let y = phi.apply(&other.words[i]).mul(&self.words[i]);
                normalize_conjugator(&y, i + 1)
            })
            .collect();
        let truncation = match (self.truncation, other.truncation) {
            (None, t) | (t, None) => t,
            (Some(a), Some(b)) => Some(a.min(b)),
        };
        LongitudeTuple::new(words, truncation)
    }
}

fn normalize_conjugator(y: &FreeGroupWord, i: usize) -> FreeGroupWord {
    let e = y.exponent_sum(i);
    y.mul(&FreeGroupWord::generator(y.n(), i).unwrap().pow(-e))
}

/// Reads off `y` from a reduced word of the form `u x_i u^-1`.
fn extract_conjugator(w: &FreeGroupWord, i: usize) -> Option<FreeGroupWord> {
    let len = w.len();
    if len.is_multiple_of(2) {
        return None;
    }
    let mid = len / 2;
    if w.letters()[mid] != Letter::new(i, 1) {
        return None;
    }
    let u = FreeGroupWord { n: w.n(), letters: w.letters()[..mid].to_vec() };
    if u.inverse().letters() != &w.letters()[mid + 1..] {
        return None;
    }
    Some(normalize_conjugator(&u, i))
}

/// Longitudes of a pure braid.
pub fn longitudes(braid: &BraidWord) -> Result<LongitudeTuple> {
    let n = braid.n();
    let art = artin(braid);
    let words = (1..=n)
        .map(|i| {
            extract_conjugator(art.image(i), i).ok_or_else(|| {
                Error::Internal(format!("Art(braid)(x{i}) = {} is not a conjugate of x{i}", art.image(i)))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LongitudeTuple { n, words, truncation: None })
}

/// Magnus expansions of the longitudes up to degree `trunc`.
///
/// Uses `y(L g)_i = Art(L)(y(g)_i) y(L)_i`, so the (exponentially long)
/// longitude words are never formed.
pub fn magnus_longitudes(braid: &BraidWord, trunc: usize) -> Result<Vec<TensorSeries>> {
    let n = braid.n();
    let one = TensorSeries::one(n, trunc);
    let mut ys = vec![one.clone(); n];
    let mut factors: HashMap<(usize, usize, bool), Vec<FreeGroupWord>> = HashMap::new();
    for letter in braid.letters() {
        let key = (letter.i, letter.j, letter.exponent > 0);
        if let std::collections::hash_map::Entry::Vacant(e) = factors.entry(key) {
            let g = BraidWord::generator(n, letter.i, letter.j)?;
            let g = if key.2 { g } else { g.inverse() };
            e.insert(longitudes(&g)?.words);
        }
        let gl = &factors[&key];
        for _ in 0..letter.exponent.unsigned_abs() {
            let images: Vec<(TensorSeries, TensorSeries)> = ys
                .iter()
                .enumerate()
                .map(|(j, y)| {
                    let x = one.clone() + TensorSeries::generator(n, trunc, j + 1);
                    let img = &(y * &x) * &y.inverse()?;
                    let inv = img.inverse()?;
                    Ok((img, inv))
                })
                .collect::<Result<_>>()?;
            ys = ys
                .iter()
                .zip(gl)
                .map(|(y, w)| {
                    let moved = w.letters().iter().fold(one.clone(), |acc, l| {
                        let (img, inv) = &images[l.generator - 1];
                        &acc * if l.exponent > 0 { img } else { inv }
                    });
                    &moved * y
                })
                .collect();
        }
    }
    Ok(ys)
}

/// Largest `k <= max_k` such that every longitude lies in `Γ_k F_n`.
pub fn milnor_level(braid: &BraidWord, max_k: usize) -> Result<usize> {
    if max_k == 0 {
        return Err(Error::Precondition("maxK must be >= 1".into()));
    }
    if max_k == 1 {
        return Ok(1);
    }
    let ys = magnus_longitudes(braid, max_k - 1)?;
    Ok(ys.iter().map(|m| (1..max_k).find(|&d| !m.degree_part_is_zero(d)).unwrap_or(max_k)).min().unwrap_or(max_k))
}

/// Filtration level of a longitude tuple, capped at `max_k` (and at the
/// tuple's own truncation).
pub fn tuple_level(t: &LongitudeTuple, max_k: usize) -> usize {
    let cap = t.truncation().map_or(max_k, |k| k.min(max_k));
    t.words().iter().map(|y| y.lcs_depth(cap)).min().unwrap_or(cap)
}
