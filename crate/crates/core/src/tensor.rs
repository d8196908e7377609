//! Truncated formal power series in non-commuting variables `X_1..X_n`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::{signed_prefix, to_short, Q};

/// Largest supported alphabet.
pub const MAX_GENERATORS: usize = 15;
/// Longest supported word (and so the largest truncation degree).
pub const MAX_LENGTH: usize = 16;

/// A word over `{1..=15}` of length at most 16, packed into a `u64` four
/// bits per letter from the most significant end. Integer order on the
/// packing is lexicographic order with a proper prefix sorting first.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word(u64);

impl Word {
    pub const EMPTY: Word = Word(0);

    pub fn letter(i: usize) -> Word {
        debug_assert!((1..=MAX_GENERATORS).contains(&i));
        Word((i as u64) << 60)
    }

    pub fn from_letters(letters: &[usize]) -> Result<Word> {
        if letters.len() > MAX_LENGTH {
            return Err(Error::ScaleLimit(format!("word length {} exceeds {MAX_LENGTH}", letters.len())));
        }
        let mut bits = 0u64;
        for (k, &l) in letters.iter().enumerate() {
            if !(1..=MAX_GENERATORS).contains(&l) {
                return Err(Error::Index { index: l, n: MAX_GENERATORS });
            }
            bits |= (l as u64) << (60 - 4 * k);
        }
        Ok(Word(bits))
    }

    pub fn len(self) -> usize {
        if self.0 == 0 {
            0
        } else {
            (64 - self.0.trailing_zeros() as usize).div_ceil(4)
        }
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    /// The `k`-th letter, 0-based.
    pub fn get(self, k: usize) -> usize {
        ((self.0 >> (60 - 4 * k)) & 0xf) as usize
    }

    pub fn first(self) -> usize {
        self.get(0)
    }

    pub fn letters(self) -> impl Iterator<Item = usize> {
        (0..self.len()).map(move |k| self.get(k))
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.letters().collect()
    }

    /// Concatenation; the caller keeps the total length within bounds.
    pub fn concat(self, other: Word) -> Word {
        let l = self.len();
        if l == 0 {
            return other;
        }
        debug_assert!(l + other.len() <= MAX_LENGTH);
        Word(self.0 | (other.0 >> (4 * l)))
    }

    /// Split into the first `k` letters and the rest.
    pub fn split_at(self, k: usize) -> (Word, Word) {
        if k == 0 {
            return (Word::EMPTY, self);
        }
        if k >= 16 {
            return (self, Word::EMPTY);
        }
        let mask = !0u64 << (64 - 4 * k);
        (Word(self.0 & mask), Word(self.0 << (4 * k)))
    }

    pub fn max_letter(self) -> usize {
        self.letters().max().unwrap_or(0)
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word({})", self.letters().map(|l| l.to_string()).collect::<Vec<_>>().join(","))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "1");
        }
        for l in self.letters() {
            write!(f, "X{l}")?;
        }
        Ok(())
    }
}

type Part = BTreeMap<Word, Q>;

fn add_term(part: &mut Part, w: Word, c: Q) {
    if c.is_zero() {
        return;
    }
    match part.entry(w) {
        std::collections::btree_map::Entry::Vacant(e) => {
            e.insert(c);
        }
        std::collections::btree_map::Entry::Occupied(mut e) => {
            *e.get_mut() += c;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

/// An element of `Q<<X_1..X_n>>` modulo words of length `> N`.
///
/// Coefficients are stored per degree; zero coefficients are never stored.
#[derive(Clone, PartialEq, Eq)]
pub struct TensorSeries {
    n: usize,
    trunc: usize,
    parts: Vec<Part>,
}

impl TensorSeries {
    pub fn zero(n: usize, trunc: usize) -> Self {
        assert!(n <= MAX_GENERATORS && trunc <= MAX_LENGTH, "series shape ({n}, {trunc}) out of range");
        TensorSeries { n, trunc, parts: vec![Part::new(); trunc + 1] }
    }

    pub fn scalar(n: usize, trunc: usize, c: Q) -> Self {
        let mut s = Self::zero(n, trunc);
        add_term(&mut s.parts[0], Word::EMPTY, c);
        s
    }

    pub fn one(n: usize, trunc: usize) -> Self {
        Self::scalar(n, trunc, Q::one())
    }

    /// `X_i`.
    pub fn generator(n: usize, trunc: usize, i: usize) -> Self {
        assert!((1..=n).contains(&i), "generator X{i} out of range 1..={n}");
        let mut s = Self::zero(n, trunc);
        if trunc >= 1 {
            s.parts[1].insert(Word::letter(i), Q::one());
        }
        s
    }

    /// Builds a series from terms, dropping words longer than `trunc`.
    pub fn from_terms(n: usize, trunc: usize, terms: impl IntoIterator<Item = (Word, Q)>) -> Result<Self> {
        if n > MAX_GENERATORS || trunc > MAX_LENGTH {
            return Err(Error::ScaleLimit(format!("series shape ({n}, {trunc})")));
        }
        let mut s = Self::zero(n, trunc);
        for (w, c) in terms {
            if w.max_letter() > n {
                return Err(Error::Index { index: w.max_letter(), n });
            }
            let d = w.len();
            if d <= trunc {
                add_term(&mut s.parts[d], w, c);
            }
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn truncation(&self) -> usize {
        self.trunc
    }

    fn check_shape(&self, other: &TensorSeries) -> Result<()> {
        if self.n != other.n || self.trunc != other.trunc {
            return Err(Error::Mismatch(format!(
                "series shapes (n={}, N={}) and (n={}, N={})",
                self.n, self.trunc, other.n, other.trunc
            )));
        }
        Ok(())
    }

    pub fn coeff(&self, w: Word) -> Q {
        let d = w.len();
        if d > self.trunc {
            return Q::zero();
        }
        self.parts[d].get(&w).cloned().unwrap_or_else(Q::zero)
    }

    pub fn constant(&self) -> Q {
        self.coeff(Word::EMPTY)
    }

    pub fn degree_part(&self, d: usize) -> &BTreeMap<Word, Q> {
        &self.parts[d]
    }

    pub fn degree_part_is_zero(&self, d: usize) -> bool {
        d > self.trunc || self.parts[d].is_empty()
    }

    /// The series consisting of the degree-`d` terms only.
    pub fn homogeneous(&self, d: usize) -> TensorSeries {
        let mut s = Self::zero(self.n, self.trunc);
        if d <= self.trunc {
            s.parts[d] = self.parts[d].clone();
        }
        s
    }

    pub fn is_zero(&self) -> bool {
        self.parts.iter().all(BTreeMap::is_empty)
    }

    /// Lowest degree with a nonzero term.
    pub fn min_degree(&self) -> Option<usize> {
        self.parts.iter().position(|p| !p.is_empty())
    }

    pub fn terms(&self) -> impl Iterator<Item = (Word, &Q)> {
        self.parts.iter().flat_map(|p| p.iter().map(|(w, c)| (*w, c)))
    }

    pub fn num_terms(&self) -> usize {
        self.parts.iter().map(BTreeMap::len).sum()
    }

    /// Explicit change of truncation degree (drops or pads).
    pub fn retruncate(&self, trunc: usize) -> TensorSeries {
        let mut s = Self::zero(self.n, trunc);
        for d in 0..=trunc.min(self.trunc) {
            s.parts[d] = self.parts[d].clone();
        }
        s
    }

    pub fn scale(&self, c: &Q) -> TensorSeries {
        if c.is_zero() {
            return Self::zero(self.n, self.trunc);
        }
        let mut s = self.clone();
        for p in &mut s.parts {
            for v in p.values_mut() {
                *v *= c;
            }
        }
        s
    }

    pub fn try_add(&self, other: &TensorSeries) -> Result<TensorSeries> {
        self.check_shape(other)?;
        let mut s = self.clone();
        s.add_assign_unchecked(other, &Q::one());
        Ok(s)
    }

    pub fn try_sub(&self, other: &TensorSeries) -> Result<TensorSeries> {
        self.check_shape(other)?;
        let mut s = self.clone();
        s.add_assign_unchecked(other, &-Q::one());
        Ok(s)
    }

    fn add_assign_unchecked(&mut self, other: &TensorSeries, c: &Q) {
        for (d, p) in other.parts.iter().enumerate() {
            for (w, v) in p {
                add_term(&mut self.parts[d], *w, v * c);
            }
        }
    }

    /// `self += c * other`.
    pub fn add_scaled(&mut self, other: &TensorSeries, c: &Q) -> Result<()> {
        self.check_shape(other)?;
        self.add_assign_unchecked(other, c);
        Ok(())
    }

    /// Concatenation product truncated at `N`.
    pub fn try_mul(&self, other: &TensorSeries) -> Result<TensorSeries> {
        self.check_shape(other)?;
        Ok(self.mul_up_to(other, self.trunc))
    }

    /// Product keeping only degrees `<= top`.
    fn mul_up_to(&self, other: &TensorSeries, top: usize) -> TensorSeries {
        let mut s = Self::zero(self.n, self.trunc);
        for (d1, p1) in self.parts.iter().enumerate().take(top + 1) {
            if p1.is_empty() {
                continue;
            }
            for (d2, p2) in other.parts.iter().enumerate().take(top - d1 + 1) {
                if p2.is_empty() {
                    continue;
                }
                let target = &mut s.parts[d1 + d2];
                for (w1, c1) in p1 {
                    for (w2, c2) in p2 {
                        add_term(target, w1.concat(*w2), c1 * c2);
                    }
                }
            }
        }
        s
    }

    /// `self * other - other * self`.
    pub fn commutator(&self, other: &TensorSeries) -> Result<TensorSeries> {
        self.try_mul(other)?.try_sub(&other.try_mul(self)?)
    }

    /// Multiplicative inverse; requires an invertible constant term.
    pub fn inverse(&self) -> Result<TensorSeries> {
        let c = self.constant();
        if c.is_zero() {
            return Err(Error::Precondition("series with zero constant term is not invertible".into()));
        }
        let cinv = Q::one() / &c;
        // self = c (1 - a)  =>  self^-1 = c^-1 (1 + a + a^2 + ...)
        let a = Self::one(self.n, self.trunc).try_sub(&self.scale(&cinv))?;
        let mut acc = Self::one(self.n, self.trunc);
        let mut power = Self::one(self.n, self.trunc);
        for _ in 0..self.trunc {
            power = power.try_mul(&a)?;
            if power.is_zero() {
                break;
            }
            acc.add_assign_unchecked(&power, &Q::one());
        }
        Ok(acc.scale(&cinv))
    }

    /// `exp(a)`; requires zero constant term.
    pub fn exp(&self) -> Result<TensorSeries> {
        if !self.constant().is_zero() {
            return Err(Error::Precondition("exp requires a zero constant term".into()));
        }
        let mut acc = Self::one(self.n, self.trunc);
        let mut power = Self::one(self.n, self.trunc);
        for m in 1..=self.trunc {
            power = power.try_mul(self)?.scale(&Q::new(1.into(), (m as i64).into()));
            if power.is_zero() {
                break;
            }
            acc.add_assign_unchecked(&power, &Q::one());
        }
        Ok(acc)
    }

    /// `log(u)`; requires constant term 1.
    pub fn log(&self) -> Result<TensorSeries> {
        if !self.constant().is_one() {
            return Err(Error::Precondition("log requires constant term 1".into()));
        }
        let a = self.try_sub(&Self::one(self.n, self.trunc))?;
        let mut acc = Self::zero(self.n, self.trunc);
        let mut power = Self::one(self.n, self.trunc);
        for m in 1..=self.trunc {
            power = power.try_mul(&a)?;
            if power.is_zero() {
                break;
            }
            let sign = if m % 2 == 1 { 1 } else { -1 };
            acc.add_assign_unchecked(&power, &Q::new(sign.into(), (m as i64).into()));
        }
        Ok(acc)
    }

    /// First degree at which the primitivity test fails, if any.
    ///
    /// Uses the Dynkin-Specht-Wever criterion: a homogeneous `p` of degree
    /// `d >= 1` is a Lie polynomial iff `D(p) = d p`, where `D` replaces each
    /// word by its left-normed bracketing.
    pub fn first_nonprimitive_degree(&self) -> Option<usize> {
        if !self.constant().is_zero() {
            return Some(0);
        }
        (1..=self.trunc).find(|&d| {
            let p = &self.parts[d];
            if p.is_empty() {
                return false;
            }
            let mut dp = Part::new();
            for (w, c) in p {
                for (v, e) in left_normed(*w) {
                    add_term(&mut dp, v, c * Q::from_integer(e.into()));
                }
            }
            let dq = Q::from_integer((d as i64).into());
            dp.len() != p.len() || p.iter().any(|(w, c)| dp.get(w) != Some(&(c * &dq)))
        })
    }

    pub fn is_primitive(&self) -> bool {
        self.first_nonprimitive_degree().is_none()
    }

    /// Constant term 1 and primitive logarithm.
    pub fn is_grouplike(&self) -> bool {
        self.constant().is_one() && self.log().map(|l| l.is_primitive()).unwrap_or(false)
    }

    /// `log(exp(a) exp(b))` for primitive `a`, `b`.
    pub fn bch(a: &TensorSeries, b: &TensorSeries) -> Result<TensorSeries> {
        a.check_shape(b)?;
        for x in [a, b] {
            if let Some(d) = x.first_nonprimitive_degree() {
                return Err(Error::NotPrimitive { degree: d });
            }
        }
        a.exp()?.try_mul(&b.exp()?)?.log()
    }

    /// Image under the continuous algebra map `X_i -> images[i-1]`. Every
    /// image must have zero constant term.
    pub fn substitute(&self, images: &[TensorSeries]) -> Result<TensorSeries> {
        if images.len() != self.n {
            return Err(Error::Mismatch(format!("{} images for {} generators", images.len(), self.n)));
        }
        for img in images {
            self.check_shape(img)?;
            if !img.constant().is_zero() {
                return Err(Error::Precondition("substituted images need zero constant term".into()));
            }
        }
        // Horner scheme on the first letter: f = c + sum_i X_i f_i. At depth
        // `depth` only degrees `<= N - depth` can survive.
        fn go(f: &TensorSeries, images: &[TensorSeries], depth: usize) -> TensorSeries {
            let n = f.n;
            let trunc = f.trunc;
            let top = trunc - depth;
            let mut out = TensorSeries::scalar(n, trunc, f.constant());
            if top == 0 {
                return out;
            }
            for (i, img) in images.iter().enumerate() {
                let mut rest = TensorSeries::zero(n, trunc);
                let mut any = false;
                for d in 1..=top {
                    for (w, c) in &f.parts[d] {
                        if w.first() == i + 1 {
                            let (_, tail) = w.split_at(1);
                            rest.parts[d - 1].insert(tail, c.clone());
                            any = true;
                        }
                    }
                }
                if any {
                    let sub = go(&rest, images, depth + 1);
                    let prod = img.mul_up_to(&sub, top);
                    out.add_assign_unchecked(&prod, &Q::one());
                }
            }
            out
        }
        Ok(go(self, images, 0))
    }

    /// Degree-by-degree comparison; returns the first degree where the two
    /// series differ.
    pub fn first_difference(&self, other: &TensorSeries) -> Option<usize> {
        (0..=self.trunc.max(other.trunc)).find(|&d| {
            let empty = Part::new();
            let a = self.parts.get(d).unwrap_or(&empty);
            let b = other.parts.get(d).unwrap_or(&empty);
            a != b
        })
    }
}

/// `D(w)` for a word `w = w_1...w_d`: the expansion of
/// `[..[[X_{w_1}, X_{w_2}], X_{w_3}], ..., X_{w_d}]` with integer coefficients.
fn left_normed(w: Word) -> Vec<(Word, i64)> {
    let mut acc: BTreeMap<Word, i64> = BTreeMap::new();
    let mut letters = w.letters();
    let Some(first) = letters.next() else {
        return vec![(Word::EMPTY, 1)];
    };
    acc.insert(Word::letter(first), 1);
    for l in letters {
        let x = Word::letter(l);
        let mut next: BTreeMap<Word, i64> = BTreeMap::new();
        for (u, c) in &acc {
            *next.entry(u.concat(x)).or_default() += c;
            *next.entry(x.concat(*u)).or_default() -= c;
        }
        next.retain(|_, c| *c != 0);
        acc = next;
    }
    acc.into_iter().collect()
}

impl fmt::Debug for TensorSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TensorSeries(n={}, N={}; {})", self.n, self.trunc, self)
    }
}

impl fmt::Display for TensorSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (w, c) in self.terms() {
            if w.is_empty() {
                if first {
                    write!(f, "{}", to_short(c))?;
                } else {
                    let p = signed_prefix(c, false);
                    write!(f, "{}", p.trim_end_matches(" * "))?;
                }
            } else {
                write!(f, "{}{}", signed_prefix(c, first), w)?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident, $checked:ident) => {
        impl $tr<&TensorSeries> for &TensorSeries {
            type Output = TensorSeries;
            fn $m(self, rhs: &TensorSeries) -> TensorSeries {
                self.$checked(rhs).unwrap_or_else(|e| panic!("{e}"))
            }
        }
        impl $tr<TensorSeries> for TensorSeries {
            type Output = TensorSeries;
            fn $m(self, rhs: TensorSeries) -> TensorSeries {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&TensorSeries> for TensorSeries {
            type Output = TensorSeries;
            fn $m(self, rhs: &TensorSeries) -> TensorSeries {
                (&self).$m(rhs)
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);

impl Neg for TensorSeries {
    type Output = TensorSeries;
    fn neg(self) -> TensorSeries {
        self.scale(&-Q::one())
    }
}

impl Neg for &TensorSeries {
    type Output = TensorSeries;
    fn neg(self) -> TensorSeries {
        self.scale(&-Q::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};

    fn x(n: usize, t: usize, i: usize) -> TensorSeries {
        TensorSeries::generator(n, t, i)
    }

    fn w(l: &[usize]) -> Word {
        Word::from_letters(l).unwrap()
    }

    #[test]
    fn word_packing() {
        let a = w(&[1, 2, 3]);
        assert_eq!(a.len(), 3);
        assert_eq!(a.to_vec(), vec![1, 2, 3]);
        assert_eq!(w(&[1]).concat(w(&[2, 3])), a);
        assert_eq!(a.split_at(1), (w(&[1]), w(&[2, 3])));
        assert!(w(&[1]) < w(&[1, 2]));
        assert!(w(&[1, 2]) < w(&[2]));
        assert_eq!(w(&[15; 16]).len(), 16);
        assert!(Word::from_letters(&[16]).is_err());
    }

    #[test]
    fn unit_and_concatenation() {
        let a = x(2, 3, 1) + x(2, 3, 2).scale(&q(3));
        assert_eq!(&TensorSeries::one(2, 3) * &a, a);
        let p = x(2, 3, 1) * x(2, 3, 2);
        assert_eq!(p.num_terms(), 1);
        assert_eq!(p.coeff(w(&[1, 2])), q(1));
    }

    #[test]
    fn mismatched_shapes_error() {
        assert!(x(2, 3, 1).try_mul(&x(2, 4, 1)).is_err());
        assert!(x(2, 3, 1).try_add(&x(3, 3, 1)).is_err());
    }

    #[test]
    fn geometric_inverse() {
        let n = 6;
        let u = TensorSeries::one(1, n) + x(1, n, 1);
        let mut geo = TensorSeries::zero(1, n);
        for m in 0..=n {
            let sign = if m % 2 == 0 { 1 } else { -1 };
            geo = geo + TensorSeries::from_terms(1, n, [(w(&vec![1; m]), q(sign))]).unwrap();
        }
        assert_eq!(u.inverse().unwrap(), geo);
        assert_eq!(&u * &geo, TensorSeries::one(1, n));
    }

    #[test]
    fn exp_of_generator() {
        let e = x(2, 5, 1).exp().unwrap();
        let mut fact = 1i64;
        for m in 0..=5 {
            if m > 0 {
                fact *= m as i64;
            }
            assert_eq!(e.coeff(w(&vec![1; m])), qf(1, fact));
        }
        assert_eq!(e.num_terms(), 6);
        assert_eq!(TensorSeries::zero(2, 4).exp().unwrap(), TensorSeries::one(2, 4));
        assert_eq!(e.log().unwrap(), x(2, 5, 1));
    }

    #[test]
    fn exp_log_preconditions() {
        assert!(TensorSeries::one(2, 3).exp().is_err());
        assert!(x(2, 3, 1).log().is_err());
        assert!(TensorSeries::zero(2, 3).inverse().is_err());
    }

    #[test]
    fn primitive_and_grouplike() {
        let a = x(2, 4, 1) + x(2, 4, 2);
        assert!(a.is_primitive());
        assert!(x(2, 4, 1).exp().unwrap().is_grouplike());
        let m = TensorSeries::one(2, 4) + x(2, 4, 1);
        assert!(!m.is_grouplike());
        assert!(!(x(2, 4, 1) * x(2, 4, 2)).is_primitive());
        assert!(x(2, 4, 1).commutator(&x(2, 4, 2)).unwrap().is_primitive());
    }

    #[test]
    fn bch_low_degree() {
        let (a, b) = (x(2, 2, 1), x(2, 2, 2));
        let z = TensorSeries::bch(&a, &b).unwrap();
        let expected = &(&a + &b) + &a.commutator(&b).unwrap().scale(&qf(1, 2));
        assert_eq!(z, expected);
        assert!(TensorSeries::bch(&a, &-a.clone()).unwrap().is_zero());
        assert_eq!(TensorSeries::bch(&a, &TensorSeries::zero(2, 2)).unwrap(), a);
        assert_eq!(TensorSeries::bch(&(&a * &b), &b), Err(Error::NotPrimitive { degree: 2 }));
    }

    #[test]
    fn substitute_is_identity_on_generators() {
        let t = 4;
        let f = (TensorSeries::one(2, t) + x(2, t, 1)).inverse().unwrap() * x(2, t, 2);
        let gens = [x(2, t, 1), x(2, t, 2)];
        assert_eq!(f.substitute(&gens).unwrap(), f);
        let swapped = [x(2, t, 2), x(2, t, 1)];
        assert_eq!(f.substitute(&swapped).unwrap().substitute(&swapped).unwrap(), f);
    }

    #[test]
    fn render() {
        let a = TensorSeries::one(2, 2) + x(2, 2, 1).scale(&qf(-1, 2)) + (x(2, 2, 1) * x(2, 2, 2));
        assert_eq!(a.to_string(), "1 - 1/2 * X1 + 1 * X1X2");
        assert_eq!(TensorSeries::zero(2, 2).to_string(), "0");
    }
}
