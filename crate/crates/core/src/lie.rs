//! The free Lie algebra on `X_1..X_n` in Lyndon coordinates.
//!
//! The Lyndon word `w` stands for its standard bracketing `P_w`: letters
//! are generators and `P_w = [P_u, P_v]` where `v` is the longest proper
//! Lyndon suffix of `w`. As a tensor, `P_w = w + (lexicographically larger
//! words)`, which makes the change of coordinates triangular.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rational::{serde_pq, signed_prefix, Q};
use crate::tensor::{TensorSeries, Word, MAX_GENERATORS, MAX_LENGTH};
use crate::Memo;

fn is_lyndon(w: Word) -> bool {
    let d = w.len();
    d >= 1 && (1..d).all(|k| w < w.split_at(k).1)
}

/// Public check that `w` is a Lyndon word over `{1..n}`.
pub fn is_lyndon_word(w: Word, n: usize) -> bool {
    w.max_letter() <= n && is_lyndon(w)
}

/// Lyndon words of length exactly `d` over `{1..n}`, in lexicographic order.
pub fn lyndon_basis(n: usize, d: usize) -> Arc<Vec<Word>> {
    static CACHE: Memo<(usize, usize), Vec<Word>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(v) = cache.read().unwrap().get(&(n, d)) {
        return v.clone();
    }
    assert!(n <= MAX_GENERATORS && d <= MAX_LENGTH, "Lyndon basis ({n}, {d}) out of range");
    let words = Arc::new(duval(n, d));
    cache.write().unwrap().insert((n, d), words.clone());
    words
}

fn duval(n: usize, d: usize) -> Vec<Word> {
    let mut out = Vec::new();
    if d == 0 || n == 0 {
        return out;
    }
    let mut w: Vec<usize> = vec![1];
    while !w.is_empty() {
        if w.len() == d {
            out.push(Word::from_letters(&w).unwrap());
        }
        let m = w.len();
        while w.len() < d {
            w.push(w[w.len() - m]);
        }
        while w.last() == Some(&n) {
            w.pop();
        }
        if let Some(last) = w.last_mut() {
            *last += 1;
        }
    }
    out
}

/// Dimension of the degree-`d` part, from the Witt formula.
pub fn witt_dim(n: usize, d: usize) -> usize {
    if d == 0 {
        return 0;
    }
    let mut total: i128 = 0;
    for e in 1..=d {
        if d.is_multiple_of(e) {
            total += mobius(e) as i128 * (n as i128).pow((d / e) as u32);
        }
    }
    (total / d as i128) as usize
}

fn mobius(mut m: usize) -> i64 {
    let mut result = 1;
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            m /= p;
            if m.is_multiple_of(p) {
                return 0;
            }
            result = -result;
        }
        p += 1;
    }
    if m > 1 {
        result = -result;
    }
    result
}

/// `(u, v)` with `w = uv` and `v` the longest proper Lyndon suffix.
pub fn standard_factorization(w: Word) -> Option<(Word, Word)> {
    let d = w.len();
    (1..d).map(|k| w.split_at(k)).find(|(_, v)| is_lyndon(*v))
}

/// Bracketing string such as `[[X1,X2],X3]`.
pub fn bracketing(w: Word) -> String {
    match standard_factorization(w) {
        Some((u, v)) if w.len() > 1 => format!("[{},{}]", bracketing(u), bracketing(v)),
        _ => format!("X{}", w.first()),
    }
}

type IntPoly = BTreeMap<Word, i64>;

/// `P_w` as a homogeneous tensor with integer coefficients.
fn basis_tensor(w: Word) -> Arc<IntPoly> {
    static CACHE: Memo<Word, IntPoly> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(p) = cache.read().unwrap().get(&w) {
        return p.clone();
    }
    let p = match standard_factorization(w) {
        None => BTreeMap::from([(w, 1)]),
        Some((u, v)) => {
            let (pu, pv) = (basis_tensor(u), basis_tensor(v));
            let mut out = IntPoly::new();
            for (a, ca) in pu.iter() {
                for (b, cb) in pv.iter() {
                    *out.entry(a.concat(*b)).or_default() += ca * cb;
                    *out.entry(b.concat(*a)).or_default() -= ca * cb;
                }
            }
            out.retain(|_, c| *c != 0);
            out
        }
    };
    let p = Arc::new(p);
    cache.write().unwrap().insert(w, p.clone());
    p
}

/// Lyndon coordinates of a homogeneous tensor, or the degree at which it
/// fails to be a Lie polynomial.
fn decompose(mut p: BTreeMap<Word, Q>) -> Result<BTreeMap<Word, Q>> {
    let mut out = BTreeMap::new();
    while let Some((&m, c)) = p.iter().next() {
        if !is_lyndon(m) {
            return Err(Error::NotPrimitive { degree: m.len() });
        }
        let c = c.clone();
        for (w, e) in basis_tensor(m).iter() {
            let entry = p.entry(*w).or_insert_with(Q::zero);
            *entry -= &c * Q::from_integer((*e).into());
            if entry.is_zero() {
                p.remove(w);
            }
        }
        out.insert(m, c);
    }
    Ok(out)
}

/// `[P_u, P_v]` in Lyndon coordinates.
fn basis_bracket(u: Word, v: Word) -> Arc<Vec<(Word, Q)>> {
    static CACHE: Memo<(Word, Word), Vec<(Word, Q)>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(r) = cache.read().unwrap().get(&(u, v)) {
        return r.clone();
    }
    let r = if u == v {
        Vec::new()
    } else if u > v {
        basis_bracket(v, u).iter().map(|(w, c)| (*w, -c)).collect()
    } else {
        let uv = u.concat(v);
        if standard_factorization(uv) == Some((u, v)) {
            vec![(uv, Q::one())]
        } else {
            let (pu, pv) = (basis_tensor(u), basis_tensor(v));
            let mut t: BTreeMap<Word, Q> = BTreeMap::new();
            let mut acc: IntPoly = IntPoly::new();
            for (a, ca) in pu.iter() {
                for (b, cb) in pv.iter() {
                    *acc.entry(a.concat(*b)).or_default() += ca * cb;
                    *acc.entry(b.concat(*a)).or_default() -= ca * cb;
                }
            }
            for (w, c) in acc {
                if c != 0 {
                    t.insert(w, Q::from_integer(c.into()));
                }
            }
            decompose(t).expect("bracket of Lie polynomials is Lie").into_iter().collect()
        }
    };
    let r = Arc::new(r);
    cache.write().unwrap().insert((u, v), r.clone());
    r
}

type Part = BTreeMap<Word, Q>;

fn add_term(part: &mut Part, w: Word, c: Q) {
    if c.is_zero() {
        return;
    }
    let e = part.entry(w).or_insert_with(Q::zero);
    *e += c;
    if e.is_zero() {
        part.remove(&w);
    }
}

/// An element of the free Lie algebra truncated above `max_degree`.
#[derive(Clone, PartialEq, Eq)]
pub struct LieElement {
    n: usize,
    max_degree: usize,
    /// `parts[d]` holds degree-`d` Lyndon coordinates; `parts[0]` stays empty.
    parts: Vec<Part>,
}

impl LieElement {
    pub fn zero(n: usize, max_degree: usize) -> Self {
        assert!(n <= MAX_GENERATORS && max_degree <= MAX_LENGTH);
        LieElement { n, max_degree, parts: vec![Part::new(); max_degree + 1] }
    }

    /// `X_i`.
    pub fn generator(n: usize, max_degree: usize, i: usize) -> Self {
        assert!((1..=n).contains(&i), "generator X{i} out of range 1..={n}");
        let mut s = Self::zero(n, max_degree);
        if max_degree >= 1 {
            s.parts[1].insert(Word::letter(i), Q::one());
        }
        s
    }

    /// `P_w` for a Lyndon word `w`.
    pub fn basis(n: usize, max_degree: usize, w: Word) -> Result<Self> {
        Self::from_coords(n, max_degree, [(w, Q::one())])
    }

    /// Validates that keys are Lyndon words over `{1..n}`; drops keys above
    /// `max_degree`.
    pub fn from_coords(n: usize, max_degree: usize, coords: impl IntoIterator<Item = (Word, Q)>) -> Result<Self> {
        if n > MAX_GENERATORS || max_degree > MAX_LENGTH {
            return Err(Error::ScaleLimit(format!("Lie element shape ({n}, {max_degree})")));
        }
        let mut s = Self::zero(n, max_degree);
        for (w, c) in coords {
            if !is_lyndon_word(w, n) {
                return Err(Error::Parse(format!("{w:?} is not a Lyndon word over 1..={n}")));
            }
            if w.len() <= max_degree {
                add_term(&mut s.parts[w.len()], w, c);
            }
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn coeff(&self, w: Word) -> Q {
        self.parts.get(w.len()).and_then(|p| p.get(&w)).cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.parts.iter().all(BTreeMap::is_empty)
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.parts.iter().position(|p| !p.is_empty())
    }

    pub fn top_degree(&self) -> Option<usize> {
        self.parts.iter().rposition(|p| !p.is_empty())
    }

    /// Terms ordered by degree, then lexicographically.
    pub fn terms(&self) -> impl Iterator<Item = (Word, &Q)> {
        self.parts.iter().flat_map(|p| p.iter().map(|(w, c)| (*w, c)))
    }

    pub fn degree_coords(&self, d: usize) -> &BTreeMap<Word, Q> {
        static EMPTY: BTreeMap<Word, Q> = BTreeMap::new();
        self.parts.get(d).unwrap_or(&EMPTY)
    }

    /// The degree-`d` component.
    pub fn degree_part(&self, d: usize) -> LieElement {
        let mut s = Self::zero(self.n, self.max_degree);
        if d <= self.max_degree {
            s.parts[d] = self.parts[d].clone();
        }
        s
    }

    /// Components with degree in `lo..=hi`.
    pub fn degree_range(&self, lo: usize, hi: usize) -> LieElement {
        let mut s = Self::zero(self.n, self.max_degree);
        for d in lo..=hi.min(self.max_degree) {
            s.parts[d] = self.parts[d].clone();
        }
        s
    }

    /// Change of truncation (drops or pads).
    pub fn retruncate(&self, max_degree: usize) -> LieElement {
        let mut s = Self::zero(self.n, max_degree);
        for d in 0..=max_degree.min(self.max_degree) {
            s.parts[d] = self.parts[d].clone();
        }
        s
    }

    fn check_n(&self, other: &LieElement) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Mismatch(format!("Lie elements over {} and {} generators", self.n, other.n)));
        }
        Ok(())
    }

    pub fn scale(&self, c: &Q) -> LieElement {
        if c.is_zero() {
            return Self::zero(self.n, self.max_degree);
        }
        let mut s = self.clone();
        for p in &mut s.parts {
            for v in p.values_mut() {
                *v *= c;
            }
        }
        s
    }

    /// `self + c * other`, truncated at the smaller `max_degree`.
    pub fn add_scaled(&self, other: &LieElement, c: &Q) -> Result<LieElement> {
        self.check_n(other)?;
        let mut s = self.retruncate(self.max_degree.min(other.max_degree));
        for d in 1..=s.max_degree {
            for (w, v) in &other.parts[d] {
                add_term(&mut s.parts[d], *w, v * c);
            }
        }
        Ok(s)
    }

    pub fn try_add(&self, other: &LieElement) -> Result<LieElement> {
        self.add_scaled(other, &Q::one())
    }

    pub fn try_sub(&self, other: &LieElement) -> Result<LieElement> {
        self.add_scaled(other, &-Q::one())
    }

    /// `[self, other]`, truncated at the smaller `max_degree`.
    pub fn bracket(&self, other: &LieElement) -> Result<LieElement> {
        self.check_n(other)?;
        let top = self.max_degree.min(other.max_degree);
        let mut s = Self::zero(self.n, top);
        for d1 in 1..=top {
            for d2 in 1..=top.saturating_sub(d1) {
                for (u, cu) in &self.parts[d1] {
                    for (v, cv) in &other.parts[d2] {
                        let c = cu * cv;
                        for (w, e) in basis_bracket(*u, *v).iter() {
                            add_term(&mut s.parts[d1 + d2], *w, &c * e);
                        }
                    }
                }
            }
        }
        Ok(s)
    }

    /// `exp(ad self)(x) = x + [self, x] + [self, [self, x]]/2 + ...`.
    /// Truncated at `x.max_degree()`.
    pub fn exp_ad(&self, x: &LieElement) -> Result<LieElement> {
        let s = self.retruncate(x.max_degree);
        let mut acc = x.clone();
        let mut term = x.clone();
        for m in 1..=x.max_degree {
            term = s.bracket(&term)?.scale(&Q::new(1.into(), (m as i64).into()));
            if term.is_zero() {
                break;
            }
            acc = acc.try_add(&term)?;
        }
        Ok(acc)
    }

    /// Tensor form, a primitive series of truncation `max_degree`.
    pub fn to_tensor(&self) -> TensorSeries {
        let terms = self.terms().flat_map(|(w, c)| {
            let c = c.clone();
            basis_tensor(w).iter().map(move |(v, e)| (*v, &c * Q::from_integer((*e).into()))).collect::<Vec<_>>()
        });
        TensorSeries::from_terms(self.n, self.max_degree, terms).expect("shape already valid")
    }

    /// Lyndon coordinates of a primitive series.
    pub fn from_tensor(p: &TensorSeries) -> Result<LieElement> {
        if !p.constant().is_zero() {
            return Err(Error::NotPrimitive { degree: 0 });
        }
        let mut s = Self::zero(p.n(), p.truncation());
        for d in 1..=p.truncation() {
            s.parts[d] = decompose(p.degree_part(d).clone())?;
        }
        Ok(s)
    }

    /// Image under the Lie algebra map `X_i -> images[i-1]`, truncated at
    /// `self.max_degree`. Images must have no degree-0 part (always true).
    pub fn substitute(&self, images: &[LieElement]) -> Result<LieElement> {
        if images.len() != self.n {
            return Err(Error::Mismatch(format!("{} images for {} generators", images.len(), self.n)));
        }
        let top = self.max_degree;
        let m = images.first().map_or(self.n, LieElement::n);
        let mut memo: HashMap<Word, LieElement> = HashMap::new();
        fn image(w: Word, images: &[LieElement], top: usize, memo: &mut HashMap<Word, LieElement>) -> LieElement {
            if let Some(x) = memo.get(&w) {
                return x.clone();
            }
            let r = match standard_factorization(w) {
                None => images[w.first() - 1].retruncate(top),
                Some((u, v)) => {
                    let a = image(u, images, top, memo);
                    let b = image(v, images, top, memo);
                    a.bracket(&b).expect("same generator count")
                }
            };
            memo.insert(w, r.clone());
            r
        }
        let mut out = LieElement::zero(m, top);
        for (w, c) in self.terms() {
            let img = image(w, images, top, &mut memo);
            out = out.add_scaled(&img, c)?;
        }
        Ok(out)
    }
}

impl fmt::Debug for LieElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LieElement(n={}, max={}; {})", self.n, self.max_degree, self.render_inline())
    }
}

impl LieElement {
    /// Terms on one line, `0` when empty.
    pub fn render_inline(&self) -> String {
        let mut s = String::new();
        for (k, (w, c)) in self.terms().enumerate() {
            s.push_str(&signed_prefix(c, k == 0));
            s.push_str(&bracketing(w));
        }
        if s.is_empty() {
            s.push('0');
        }
        s
    }
}

impl fmt::Display for LieElement {
    /// One `coef * [bracketing]` line per term, in Lyndon order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return writeln!(f, "0");
        }
        for (w, c) in self.terms() {
            writeln!(f, "{}{}", signed_prefix(c, true), bracketing(w))?;
        }
        Ok(())
    }
}

/// `sum_i X_i ⊗ Y_i` in `H ⊗ L`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HTensorLie {
    n: usize,
    entries: Vec<LieElement>,
}

/// One serialized coordinate of an [`HTensorLie`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HTensorLieEntry {
    pub i: usize,
    pub lyndon_word: Vec<usize>,
    pub bracketing: String,
    #[serde(with = "serde_pq")]
    pub coefficient: Q,
}

impl HTensorLie {
    pub fn zero(n: usize, max_degree: usize) -> Self {
        HTensorLie { n, entries: (0..n).map(|_| LieElement::zero(n, max_degree)).collect() }
    }

    pub fn new(entries: Vec<LieElement>) -> Result<Self> {
        let n = entries.len();
        if entries.iter().any(|e| e.n() != n) {
            return Err(Error::Mismatch("every partner must live over the same n generators".into()));
        }
        Ok(HTensorLie { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[LieElement] {
        &self.entries
    }

    /// Partner of `X_i`.
    pub fn entry(&self, i: usize) -> &LieElement {
        &self.entries[i - 1]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(LieElement::is_zero)
    }

    pub fn min_degree(&self) -> Option<usize> {
        self.entries.iter().filter_map(LieElement::min_degree).min()
    }

    pub fn top_degree(&self) -> Option<usize> {
        self.entries.iter().filter_map(LieElement::top_degree).max()
    }

    pub fn degree_part(&self, d: usize) -> HTensorLie {
        HTensorLie { n: self.n, entries: self.entries.iter().map(|e| e.degree_part(d)).collect() }
    }

    pub fn degree_range(&self, lo: usize, hi: usize) -> HTensorLie {
        HTensorLie { n: self.n, entries: self.entries.iter().map(|e| e.degree_range(lo, hi)).collect() }
    }

    pub fn retruncate(&self, max_degree: usize) -> HTensorLie {
        HTensorLie { n: self.n, entries: self.entries.iter().map(|e| e.retruncate(max_degree)).collect() }
    }

    pub fn add_scaled(&self, other: &HTensorLie, c: &Q) -> Result<HTensorLie> {
        if self.n != other.n {
            return Err(Error::Mismatch("H ⊗ L elements over different n".into()));
        }
        let entries =
            self.entries.iter().zip(&other.entries).map(|(a, b)| a.add_scaled(b, c)).collect::<Result<_>>()?;
        Ok(HTensorLie { n: self.n, entries })
    }

    pub fn try_add(&self, other: &HTensorLie) -> Result<HTensorLie> {
        self.add_scaled(other, &Q::one())
    }

    pub fn try_sub(&self, other: &HTensorLie) -> Result<HTensorLie> {
        self.add_scaled(other, &-Q::one())
    }

    pub fn scale(&self, c: &Q) -> HTensorLie {
        HTensorLie { n: self.n, entries: self.entries.iter().map(|e| e.scale(c)).collect() }
    }

    /// The pure degree, or an error when several degrees are present.
    /// Zero has no degree.
    pub fn pure_degree(&self) -> Result<Option<usize>> {
        match (self.min_degree(), self.top_degree()) {
            (Some(a), Some(b)) if a != b => {
                Err(Error::Precondition(format!("expected a pure-degree element, found degrees {a}..={b}")))
            }
            (a, _) => Ok(a),
        }
    }

    /// `sum_i [X_i, Y_i]`.
    pub fn bracket_map(&self) -> Result<LieElement> {
        self.pure_degree()?;
        let top = self.entries.iter().map(LieElement::max_degree).max().unwrap_or(0) + 1;
        let mut acc = LieElement::zero(self.n, top);
        for (i, y) in self.entries.iter().enumerate() {
            let x = LieElement::generator(self.n, top, i + 1);
            acc = acc.try_add(&x.bracket(&y.retruncate(top))?)?;
        }
        Ok(acc)
    }

    /// Membership in `D(H)`, the kernel of the bracket map, for a pure-degree element.
    pub fn in_d(&self) -> Result<bool> {
        Ok(self.bracket_map()?.is_zero())
    }

    /// Membership in `D(H)` degree by degree.
    pub fn in_d_graded(&self) -> bool {
        let top = self.top_degree().unwrap_or(0);
        (1..=top).all(|d| self.degree_part(d).in_d().unwrap_or(false))
    }

    pub fn to_entries(&self) -> Vec<HTensorLieEntry> {
        let mut out = Vec::new();
        for (i, y) in self.entries.iter().enumerate() {
            for (w, c) in y.terms() {
                out.push(HTensorLieEntry {
                    i: i + 1,
                    lyndon_word: w.to_vec(),
                    bracketing: bracketing(w),
                    coefficient: c.clone(),
                });
            }
        }
        out
    }

    pub fn from_entries(n: usize, max_degree: usize, entries: &[HTensorLieEntry]) -> Result<HTensorLie> {
        let mut coords: Vec<Vec<(Word, Q)>> = vec![Vec::new(); n];
        for e in entries {
            if !(1..=n).contains(&e.i) {
                return Err(Error::Index { index: e.i, n });
            }
            coords[e.i - 1].push((Word::from_letters(&e.lyndon_word)?, e.coefficient.clone()));
        }
        let entries = coords.into_iter().map(|c| LieElement::from_coords(n, max_degree, c)).collect::<Result<_>>()?;
        Ok(HTensorLie { n, entries })
    }
}

impl fmt::Display for HTensorLie {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return writeln!(f, "0");
        }
        for (i, y) in self.entries.iter().enumerate() {
            if !y.is_zero() {
                writeln!(f, "X{} ⊗ ({})", i + 1, y.render_inline())?;
            }
        }
        Ok(())
    }
}

/// Matrix of the bracket map `H ⊗ L_l -> L_{l+1}`: columns indexed by
/// `(i, w)` with `i` outer, rows by the degree-`(l+1)` Lyndon basis.
pub fn bracket_map_matrix(n: usize, l: usize) -> Matrix {
    let target = lyndon_basis(n, l + 1);
    let index: HashMap<Word, usize> = target.iter().enumerate().map(|(k, w)| (*w, k)).collect();
    let mut cols = Vec::new();
    for i in 1..=n {
        for w in lyndon_basis(n, l).iter() {
            let col = basis_bracket(Word::letter(i), *w).iter().map(|(v, c)| (index[v], c.clone())).collect();
            cols.push(col);
        }
    }
    Matrix::from_sparse_columns(target.len(), &cols)
}

/// `dim D_l(H)` as the nullity of the bracket map.
pub fn d_dimension(n: usize, l: usize) -> usize {
    n * lyndon_basis(n, l).len() - bracket_map_matrix(n, l).rank()
}
