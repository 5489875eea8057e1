//! Sparse polynomials in `x1, x2, x3, x4` over `F_q`.
//!
//! A [`Monomial`] packs its four exponents into one `u64` (16 bits each,
//! `x1` most significant), so the derived `Ord` is lexicographic order on
//! exponent vectors. Polynomials keep their terms sorted by decreasing
//! monomial with no zero coefficients, which makes structural equality the
//! same as polynomial equality.

use std::fmt;

use thiserror::Error;

use crate::gf::{FieldElement, FieldSpec, GfError};
use crate::linalg::MatrixFq;

pub const NVARS: usize = 4;

/// Exponents must stay below this bound.
pub const EXPONENT_LIMIT: u32 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("polynomials are over different fields")]
    FieldMismatch,
    #[error("exponent {0} exceeds the limit of {EXPONENT_LIMIT}")]
    ExponentOverflow(u64),
    #[error("polynomial is not homogeneous of degree {0}")]
    NotHomogeneous(u32),
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("a substitution needs a 4x4 matrix, got {0}x{1}")]
    SubstitutionShape(usize, usize),
}

pub type Result<T> = std::result::Result<T, PolyError>;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial(u64);

const SHIFT: [u32; NVARS] = [48, 32, 16, 0];

impl Monomial {
    pub const ONE: Monomial = Monomial(0);

    pub fn new(exps: [u32; NVARS]) -> Result<Self> {
        let mut packed = 0u64;
        for (i, &e) in exps.iter().enumerate() {
            if e >= EXPONENT_LIMIT {
                return Err(PolyError::ExponentOverflow(e as u64));
            }
            packed |= (e as u64) << SHIFT[i];
        }
        Ok(Monomial(packed))
    }

    /// The variable `x_{i+1}`.
    pub fn var(i: usize) -> Self {
        Monomial(1 << SHIFT[i])
    }

    #[inline]
    pub fn exponent(self, i: usize) -> u32 {
        ((self.0 >> SHIFT[i]) & 0xffff) as u32
    }

    pub fn exponents(self) -> [u32; NVARS] {
        [self.exponent(0), self.exponent(1), self.exponent(2), self.exponent(3)]
    }

    #[inline]
    pub fn degree(self) -> u32 {
        (0..NVARS).map(|i| self.exponent(i)).sum()
    }

    pub fn checked_mul(self, other: Monomial) -> Result<Monomial> {
        for i in 0..NVARS {
            let e = self.exponent(i) + other.exponent(i);
            if e >= EXPONENT_LIMIT {
                return Err(PolyError::ExponentOverflow(e as u64));
            }
        }
        Ok(Monomial(self.0 + other.0))
    }

    /// Product without overflow checks; callers guarantee every exponent sum fits.
    #[inline]
    pub(crate) fn mul_unchecked(self, other: Monomial) -> Monomial {
        Monomial(self.0 + other.0)
    }

    pub fn divides(self, other: Monomial) -> bool {
        (0..NVARS).all(|i| self.exponent(i) <= other.exponent(i))
    }

    /// `other / self` when `self` divides `other`.
    pub fn quotient_of(self, other: Monomial) -> Option<Monomial> {
        self.divides(other).then(|| Monomial(other.0 - self.0))
    }

    pub fn lcm(self, other: Monomial) -> Monomial {
        let mut packed = 0u64;
        for i in 0..NVARS {
            packed |= (self.exponent(i).max(other.exponent(i)) as u64) << SHIFT[i];
        }
        Monomial(packed)
    }

    pub fn is_coprime(self, other: Monomial) -> bool {
        (0..NVARS).all(|i| self.exponent(i) == 0 || other.exponent(i) == 0)
    }

    /// `Some(i)` when this is a positive power of the single variable `x_{i+1}`.
    pub fn pure_power_of(self) -> Option<usize> {
        let support: Vec<usize> = (0..NVARS).filter(|&i| self.exponent(i) > 0).collect();
        (support.len() == 1).then(|| support[0])
    }

    fn with_exponent(self, i: usize, e: u32) -> Monomial {
        debug_assert!(e < EXPONENT_LIMIT);
        Monomial((self.0 & !(0xffffu64 << SHIFT[i])) | ((e as u64) << SHIFT[i]))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = (0..NVARS)
            .filter(|&i| self.exponent(i) > 0)
            .map(|i| match self.exponent(i) {
                1 => format!("x{}", i + 1),
                e => format!("x{}^{e}", i + 1),
            })
            .collect();
        if parts.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(&parts.join("*"))
        }
    }
}

/// Number of degree-`d` monomials in four variables, `C(d+3, 3)`.
pub fn count_of_degree(d: u32) -> usize {
    let d = d as usize;
    (d + 1) * (d + 2) * (d + 3) / 6
}

/// All degree-`d` monomials in decreasing lexicographic order.
pub fn monomials_of_degree(d: u32) -> Vec<Monomial> {
    let mut out = Vec::with_capacity(count_of_degree(d));
    for e1 in (0..=d).rev() {
        for e2 in (0..=d - e1).rev() {
            for e3 in (0..=d - e1 - e2).rev() {
                let e4 = d - e1 - e2 - e3;
                out.push(Monomial::new([e1, e2, e3, e4]).expect("degree within exponent limit"));
            }
        }
    }
    out
}

/// Position of `m` in [`monomials_of_degree`]`(m.degree())`.
pub fn monomial_index(m: Monomial) -> usize {
    let [e1, e2, e3, _] = m.exponents().map(|e| e as usize);
    let d = m.degree() as usize;
    let n1 = d - e1;
    let n2 = n1 - e2;
    // C(n1+2, 3) monomials have a larger x1 exponent, C(n2+1, 2) a larger x2 exponent.
    (n1 + 2) * (n1 + 1) * n1 / 6 + (n2 + 1) * n2 / 2 + (n2 - e3)
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Polynomial {
    field: FieldSpec,
    terms: Vec<(Monomial, u32)>,
}

impl Polynomial {
    pub fn zero(field: &FieldSpec) -> Self {
        Polynomial { field: field.clone(), terms: Vec::new() }
    }

    pub fn one(field: &FieldSpec) -> Self {
        Self::constant(field, 1)
    }

    /// Constant polynomial with packed value `c`.
    pub fn constant(field: &FieldSpec, c: u32) -> Self {
        Self::term(field, Monomial::ONE, c)
    }

    pub fn term(field: &FieldSpec, m: Monomial, c: u32) -> Self {
        let terms = if c == 0 { vec![] } else { vec![(m, c)] };
        Polynomial { field: field.clone(), terms }
    }

    /// The variable `x_i`, `i` in `1..=4`.
    pub fn var(field: &FieldSpec, i: usize) -> Self {
        assert!((1..=NVARS).contains(&i), "variables are x1..x4");
        Self::term(field, Monomial::var(i - 1), 1)
    }

    /// `c[0] x1 + c[1] x2 + c[2] x3 + c[3] x4` with packed coefficients.
    pub fn linear(field: &FieldSpec, c: [u32; NVARS]) -> Self {
        Self::from_terms(field, (0..NVARS).map(|i| (Monomial::var(i), c[i])))
    }

    /// Canonicalise an arbitrary list of terms: combine duplicates, drop zeros.
    pub fn from_terms(field: &FieldSpec, terms: impl IntoIterator<Item = (Monomial, u32)>) -> Self {
        let mut v: Vec<(Monomial, u32)> = terms.into_iter().collect();
        canonicalize(field, &mut v);
        Polynomial { field: field.clone(), terms: v }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    /// Terms with packed coefficients, in decreasing lexicographic order.
    pub fn raw_terms(&self) -> &[(Monomial, u32)] {
        &self.terms
    }

    pub fn terms(&self) -> impl Iterator<Item = (Monomial, FieldElement)> + '_ {
        self.terms.iter().map(|&(m, c)| (m, self.field.element(c)))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: Monomial) -> FieldElement {
        let c = self
            .terms
            .binary_search_by(|(x, _)| m.cmp(x))
            .map_or(0, |i| self.terms[i].1);
        self.field.element(c)
    }

    /// Largest total degree of a term; `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.iter().map(|(m, _)| m.degree()).max()
    }

    /// The common degree of all terms, if there is one.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let d = self.terms.first()?.0.degree();
        self.terms.iter().all(|(m, _)| m.degree() == d).then_some(d)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.is_zero() || self.homogeneous_degree().is_some()
    }

    fn check_field(&self, other: &Self) -> Result<()> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(PolyError::FieldMismatch)
        }
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_field(other)?;
        Ok(self.merge(other, false))
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_field(other)?;
        Ok(self.merge(other, true))
    }

    fn merge(&self, other: &Self, negate: bool) -> Self {
        let f = &self.field;
        let (a, b) = (&self.terms, &other.terms);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        let conv = |c: u32| if negate { f.neg(c) } else { c };
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Greater => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Less => {
                    out.push((b[j].0, conv(b[j].1)));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let c = f.add(a[i].1, conv(b[j].1));
                    if c != 0 {
                        out.push((a[i].0, c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend(b[j..].iter().map(|&(m, c)| (m, conv(c))));
        Polynomial { field: f.clone(), terms: out }
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_field(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(&self.field));
        }
        let (ma, mb) = (self.max_exponents(), other.max_exponents());
        if let Some(e) = (0..NVARS).map(|i| ma[i] as u64 + mb[i] as u64).find(|&e| e >= EXPONENT_LIMIT as u64) {
            return Err(PolyError::ExponentOverflow(e));
        }
        let f = &self.field;
        let (small, large) = if self.terms.len() <= other.terms.len() { (self, other) } else { (other, self) };
        let mut acc: Vec<(Monomial, u32)> = Vec::with_capacity(small.terms.len() * large.terms.len());
        for &(ms, cs) in &small.terms {
            for &(ml, cl) in &large.terms {
                acc.push((ms.mul_unchecked(ml), f.mul(cs, cl)));
            }
        }
        canonicalize(f, &mut acc);
        Ok(Polynomial { field: f.clone(), terms: acc })
    }

    pub fn neg(&self) -> Self {
        let f = &self.field;
        Polynomial { field: f.clone(), terms: self.terms.iter().map(|&(m, c)| (m, f.neg(c))).collect() }
    }

    /// Multiply by a packed scalar.
    pub fn scale(&self, c: u32) -> Self {
        if c == 0 {
            return Self::zero(&self.field);
        }
        let f = &self.field;
        Polynomial { field: f.clone(), terms: self.terms.iter().map(|&(m, x)| (m, f.mul(x, c))).collect() }
    }

    pub fn pow(&self, e: u32) -> Result<Self> {
        let mut acc = Self::one(&self.field);
        for _ in 0..e {
            acc = acc.checked_mul(self)?;
        }
        Ok(acc)
    }

    pub fn max_exponents(&self) -> [u32; NVARS] {
        let mut out = [0; NVARS];
        for (m, _) in &self.terms {
            for (i, o) in out.iter_mut().enumerate() {
                *o = (*o).max(m.exponent(i));
            }
        }
        out
    }

    /// Coordinates in the [`monomials_of_degree`] basis.
    pub fn coefficient_vector(&self, d: u32) -> Result<Vec<u32>> {
        let mut v = vec![0u32; count_of_degree(d)];
        for &(m, c) in &self.terms {
            if m.degree() != d {
                return Err(PolyError::NotHomogeneous(d));
            }
            v[monomial_index(m)] = c;
        }
        Ok(v)
    }

    /// Inverse of [`coefficient_vector`](Self::coefficient_vector).
    pub fn from_coefficient_vector(field: &FieldSpec, d: u32, v: &[u32]) -> Self {
        let basis = monomials_of_degree(d);
        assert_eq!(basis.len(), v.len(), "vector length must be C(d+3,3)");
        let terms = basis.into_iter().zip(v.iter().copied()).filter(|&(_, c)| c != 0).collect();
        Polynomial { field: field.clone(), terms }
    }

    /// Divide through by the leading (lexicographically largest) coefficient.
    pub fn monic(&self) -> Self {
        match self.terms.first() {
            None => self.clone(),
            Some(&(_, c)) => self.scale(self.field.inv(c).expect("nonzero")),
        }
    }

    pub fn substitute(&self, sub: &LinearSubstitution) -> Result<Self> {
        if sub.field() != &self.field {
            return Err(PolyError::FieldMismatch);
        }
        if sub.is_identity() || self.is_zero() {
            return Ok(self.clone());
        }
        match sub.elementary_factors() {
            Some(ops) => {
                let mut cur = self.clone();
                for op in ops.iter().rev() {
                    cur = cur.apply_elementary(*op)?;
                }
                Ok(cur)
            }
            None => self.substitute_by_expansion(sub),
        }
    }

    /// Substitution by expanding every term as a product of powers of the
    /// image linear forms. Works for singular substitutions too; the
    /// factored route in [`substitute`](Self::substitute) is much faster.
    pub fn substitute_by_expansion(&self, sub: &LinearSubstitution) -> Result<Self> {
        if sub.field() != &self.field {
            return Err(PolyError::FieldMismatch);
        }
        let f = &self.field;
        let maxe = self.max_exponents();
        let images: Vec<Polynomial> = (0..NVARS).map(|j| sub.image(j)).collect();
        let mut powers: Vec<Vec<Polynomial>> = Vec::with_capacity(NVARS);
        for j in 0..NVARS {
            let mut row = vec![Polynomial::one(f)];
            for k in 1..=maxe[j] as usize {
                let next = row[k - 1].checked_mul(&images[j])?;
                row.push(next);
            }
            powers.push(row);
        }
        let mut acc: Vec<(Monomial, u32)> = Vec::new();
        for &(m, c) in &self.terms {
            let mut prod = Polynomial::constant(f, c);
            for (j, pw) in powers.iter().enumerate() {
                let e = m.exponent(j) as usize;
                if e > 0 {
                    prod = prod.checked_mul(&pw[e])?;
                }
            }
            acc.extend_from_slice(&prod.terms);
        }
        canonicalize(f, &mut acc);
        Ok(Polynomial { field: f.clone(), terms: acc })
    }

    fn apply_elementary(&self, op: Elementary) -> Result<Self> {
        let f = &self.field;
        match op {
            Elementary::Swap(a, b) => {
                let terms = self.terms.iter().map(|&(m, c)| {
                    let (ea, eb) = (m.exponent(a), m.exponent(b));
                    (m.with_exponent(a, eb).with_exponent(b, ea), c)
                });
                Ok(Polynomial::from_terms(f, terms))
            }
            Elementary::Scale(a, mu) => {
                // x_a -> mu * x_a; order is unchanged and no coefficient vanishes.
                let terms = self.terms.iter().map(|&(m, c)| (m, f.mul(c, f.pow(mu, m.exponent(a) as u64)))).collect();
                Ok(Polynomial { field: f.clone(), terms })
            }
            Elementary::Transvection { target, source, lambda } => {
                // x_target -> x_target + lambda * x_source
                let maxe = self.max_exponents()[target];
                let binom = Binomials::new(f.p(), maxe);
                let mut lpow = vec![1u32; maxe as usize + 1];
                for k in 1..lpow.len() {
                    lpow[k] = f.mul(lpow[k - 1], lambda);
                }
                let mut acc = Vec::with_capacity(self.terms.len() * 2);
                for &(m, c) in &self.terms {
                    let e = m.exponent(target);
                    let es = m.exponent(source);
                    if es + e >= EXPONENT_LIMIT {
                        return Err(PolyError::ExponentOverflow((es + e) as u64));
                    }
                    for k in 0..=e {
                        let b = binom.get(e, k);
                        if b == 0 {
                            continue;
                        }
                        let coeff = f.mul(f.mul(c, f.from_int(b as i64)), lpow[k as usize]);
                        if coeff != 0 {
                            acc.push((m.with_exponent(target, e - k).with_exponent(source, es + k), coeff));
                        }
                    }
                }
                canonicalize(f, &mut acc);
                Ok(Polynomial { field: f.clone(), terms: acc })
            }
        }
    }

    /// Parse text in the grammar `term (("+" | "-") term)*`, where a term is a
    /// `*`-separated product of coefficients and factors `x<i>` or `x<i>^<e>`.
    pub fn parse(field: &FieldSpec, text: &str) -> Result<Self> {
        Parser { field, src: text, chars: text.char_indices().collect(), pos: 0 }.parse()
    }
}

fn canonicalize(f: &FieldSpec, v: &mut Vec<(Monomial, u32)>) {
    v.sort_unstable_by(|a, b| b.0.cmp(&a.0));
    let mut out = 0;
    let mut i = 0;
    while i < v.len() {
        let m = v[i].0;
        let mut c = v[i].1;
        let mut j = i + 1;
        while j < v.len() && v[j].0 == m {
            c = f.add(c, v[j].1);
            j += 1;
        }
        if c != 0 {
            v[out] = (m, c);
            out += 1;
        }
        i = j;
    }
    v.truncate(out);
}

/// Binomial coefficients mod `p`.
struct Binomials {
    p: u32,
    table: Option<Vec<Vec<u32>>>,
}

impl Binomials {
    fn new(p: u32, nmax: u32) -> Self {
        let table = (nmax <= 512).then(|| {
            let mut rows: Vec<Vec<u32>> = vec![vec![1]];
            for n in 1..=nmax as usize {
                let prev = &rows[n - 1];
                let mut row = vec![1u32; n + 1];
                for k in 1..n {
                    row[k] = (prev[k - 1] + prev[k]) % p;
                }
                rows.push(row);
            }
            rows
        });
        Binomials { p, table }
    }

    fn get(&self, n: u32, k: u32) -> u32 {
        if let Some(t) = &self.table {
            return t[n as usize][k as usize];
        }
        // Lucas: product of digit binomials in base p.
        let p = self.p as u64;
        let (mut n, mut k) = (n as u64, k as u64);
        let mut acc = 1u64;
        while n > 0 || k > 0 {
            let (ni, ki) = (n % p, k % p);
            if ki > ni {
                return 0;
            }
            let mut num = 1u64;
            let mut den = 1u64;
            for j in 0..ki {
                num = num * (ni - j) % p;
                den = den * (j + 1) % p;
            }
            acc = acc * num % p * pow_mod(den, p - 2, p) % p;
            n /= p;
            k /= p;
        }
        acc as u32
    }
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

impl std::ops::Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        self.checked_add(rhs).expect("polynomial addition across fields")
    }
}

impl std::ops::Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self.checked_sub(rhs).expect("polynomial subtraction across fields")
    }
}

impl std::ops::Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        self.checked_mul(rhs).expect("polynomial multiplication failed")
    }
}

impl std::ops::Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::neg(self)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, &(m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                f.write_str(" + ")?;
            }
            let coeff = self.field.format_raw(c);
            if m == Monomial::ONE {
                f.write_str(&coeff)?;
            } else if c == 1 {
                write!(f, "{m}")?;
            } else {
                write!(f, "{coeff}*{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self} (over F_{})", self.field.q())
    }
}

struct Parser<'a> {
    field: &'a FieldSpec,
    src: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let pos = self.chars.get(self.pos).map_or(self.src.len(), |&(i, _)| i);
        Err(PolyError::Syntax { pos, msg: msg.into() })
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|(_, c)| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|&(_, c)| c)
    }

    fn digits(&mut self) -> String {
        self.skip_ws();
        let mut s = String::new();
        while let Some(&(_, c)) = self.chars.get(self.pos) {
            if c.is_ascii_digit() {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        s
    }

    fn parse(mut self) -> Result<Polynomial> {
        let f = self.field;
        let mut acc: Vec<(Monomial, u32)> = Vec::new();
        let mut first = true;
        loop {
            let negate = match self.peek() {
                None if first => return self.err("empty polynomial"),
                None => break,
                Some('+') => {
                    self.pos += 1;
                    false
                }
                Some('-') | Some('\u{2212}') => {
                    self.pos += 1;
                    true
                }
                Some(_) if first => false,
                Some(c) => return self.err(format!("expected '+' or '-', found {c:?}")),
            };
            first = false;
            let (m, c) = self.term()?;
            acc.push((m, if negate { f.neg(c) } else { c }));
        }
        canonicalize(f, &mut acc);
        Ok(Polynomial { field: f.clone(), terms: acc })
    }

    fn term(&mut self) -> Result<(Monomial, u32)> {
        let f = self.field;
        let mut mon = Monomial::ONE;
        let mut coeff = 1u32;
        loop {
            match self.peek() {
                Some('x') => {
                    self.pos += 1;
                    let idx = self.digits();
                    let i = match idx.as_str() {
                        "1" => 0,
                        "2" => 1,
                        "3" => 2,
                        "4" => 3,
                        _ => return self.err(format!("unknown variable x{idx}")),
                    };
                    let mut e = 1u64;
                    if self.peek() == Some('^') {
                        self.pos += 1;
                        let d = self.digits();
                        if d.is_empty() {
                            return self.err("expected exponent after '^'");
                        }
                        e = d.parse::<u64>().unwrap_or(u64::MAX);
                    }
                    let total = mon.exponent(i) as u64 + e;
                    if total >= EXPONENT_LIMIT as u64 {
                        return Err(PolyError::ExponentOverflow(total));
                    }
                    mon = mon.with_exponent(i, total as u32);
                }
                Some('[') => {
                    let start = self.pos;
                    while self.chars.get(self.pos).is_some_and(|&(_, c)| c != ']') {
                        self.pos += 1;
                    }
                    if self.pos >= self.chars.len() {
                        return self.err("unterminated coefficient vector");
                    }
                    self.pos += 1;
                    let text: String = self.chars[start..self.pos].iter().map(|&(_, c)| c).collect();
                    coeff = f.mul(coeff, f.parse_raw(&text)?);
                }
                Some(c) if c.is_ascii_digit() => {
                    let d = self.digits();
                    coeff = f.mul(coeff, f.parse_raw(&d)?);
                }
                Some(c) => return self.err(format!("unexpected {c:?}")),
                None => return self.err("unexpected end of input"),
            }
            if self.peek() == Some('*') {
                self.pos += 1;
            } else {
                return Ok((mon, coeff));
            }
        }
    }
}

/// An elementary factor of an invertible substitution matrix, already in the
/// form applied to the variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Elementary {
    Swap(usize, usize),
    Scale(usize, u32),
    Transvection { target: usize, source: usize, lambda: u32 },
}

/// A linear change of variables. Column `j` of the matrix holds the
/// coefficients of the image of `x_{j+1}`: entry `(i, j)` is the coefficient
/// of `x_{i+1}` in that image.
///
/// Composition: substituting by `A` after `B` is substituting by `A * B`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LinearSubstitution {
    matrix: MatrixFq,
}

impl LinearSubstitution {
    pub fn new(matrix: MatrixFq) -> Result<Self> {
        if matrix.rows() != NVARS || matrix.cols() != NVARS {
            return Err(PolyError::SubstitutionShape(matrix.rows(), matrix.cols()));
        }
        Ok(LinearSubstitution { matrix })
    }

    pub fn identity(field: &FieldSpec) -> Self {
        LinearSubstitution { matrix: MatrixFq::identity(field, NVARS) }
    }

    /// Build from the images of `x1..x4`, each a linear form.
    pub fn from_images(field: &FieldSpec, images: [[u32; NVARS]; NVARS]) -> Self {
        let mut m = MatrixFq::zeros(field, NVARS, NVARS);
        for (j, img) in images.iter().enumerate() {
            for (i, &c) in img.iter().enumerate() {
                m.set(i, j, c);
            }
        }
        LinearSubstitution { matrix: m }
    }

    pub fn field(&self) -> &FieldSpec {
        self.matrix.field()
    }

    pub fn matrix(&self) -> &MatrixFq {
        &self.matrix
    }

    pub fn is_identity(&self) -> bool {
        self.matrix.is_identity()
    }

    /// The linear form that replaces `x_{j+1}`.
    pub fn image(&self, j: usize) -> Polynomial {
        let c = self.matrix.column(j);
        Polynomial::linear(self.field(), [c[0], c[1], c[2], c[3]])
    }

    /// `self` applied after `other`.
    pub fn compose(&self, other: &Self) -> std::result::Result<Self, crate::linalg::LinalgError> {
        Ok(LinearSubstitution { matrix: self.matrix.mul(&other.matrix)? })
    }

    /// Gauss-Jordan factorisation `M = E_1 E_2 ... E_k` into elementary
    /// substitutions; `None` if `M` is singular. Substituting by `M` equals
    /// substituting by `E_k` first and `E_1` last.
    fn elementary_factors(&self) -> Option<Vec<Elementary>> {
        let f = self.field().clone();
        let mut m = self.matrix.clone();
        let mut ops = Vec::new();
        for c in 0..NVARS {
            let pr = (c..NVARS).find(|&r| m.get(r, c) != 0)?;
            if pr != c {
                for j in 0..NVARS {
                    let (a, b) = (m.get(pr, j), m.get(c, j));
                    m.set(pr, j, b);
                    m.set(c, j, a);
                }
                // Row swap R is its own inverse: x_c <-> x_pr.
                ops.push(Elementary::Swap(c, pr));
            }
            let piv = m.get(c, c);
            if piv != 1 {
                let inv = f.inv(piv).expect("pivot is nonzero");
                for j in 0..NVARS {
                    m.set(c, j, f.mul(m.get(c, j), inv));
                }
                // R scales row c by 1/piv, so R^{-1} sends x_c to piv * x_c.
                ops.push(Elementary::Scale(c, piv));
            }
            for r in 0..NVARS {
                let factor = m.get(r, c);
                if r != c && factor != 0 {
                    for j in 0..NVARS {
                        m.set(r, j, f.sub(m.get(r, j), f.mul(factor, m.get(c, j))));
                    }
                    // R adds -factor * row c to row r; R^{-1} sends x_c to x_c + factor * x_r.
                    ops.push(Elementary::Transvection { target: c, source: r, lambda: factor });
                }
            }
        }
        Some(ops)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fq(q: u32) -> FieldSpec {
        FieldSpec::of_order(q).unwrap()
    }

    fn p(f: &FieldSpec, s: &str) -> Polynomial {
        Polynomial::parse(f, s).unwrap()
    }

    #[test]
    fn addition_and_products() {
        let f = fq(5);
        assert_eq!(&p(&f, "x1 + x2") + &p(&f, "-x2"), p(&f, "x1"));
        let f3 = fq(3);
        let prod = &(&p(&f3, "x3 - x1") * &p(&f3, "x3 - 2*x1")) * &p(&f3, "x3");
        assert_eq!(prod, p(&f3, "x3^3 - x1^2*x3"));
        let det = p(&f, "x1*x4 - x2*x3");
        assert_eq!((&det * &det).num_terms(), 3);
        // (ab - cd)^2 = a^2b^2 - 2abcd + c^2d^2: three distinct monomials
        let sq = det.pow(2).unwrap();
        assert_eq!(sq, p(&f, "x1^2*x4^2 - 2*x1*x2*x3*x4 + x2^2*x3^2"));
        assert!(p(&f, "x1").checked_add(&p(&f3, "x1")).is_err());
    }

    #[test]
    fn monomial_enumeration() {
        assert_eq!(monomials_of_degree(0), vec![Monomial::ONE]);
        assert_eq!(monomials_of_degree(1), (0..4).map(Monomial::var).collect::<Vec<_>>());
        assert_eq!(monomials_of_degree(3).len(), 20);
        for d in 0..12 {
            let ms = monomials_of_degree(d);
            assert_eq!(ms.len(), count_of_degree(d));
            assert!(ms.windows(2).all(|w| w[0] > w[1]));
            for (i, &m) in ms.iter().enumerate() {
                assert_eq!(monomial_index(m), i);
                assert_eq!(m.degree(), d);
            }
        }
    }

    #[test]
    fn coefficient_vectors() {
        let f = fq(5);
        assert_eq!(p(&f, "x2 - x3").coefficient_vector(1).unwrap(), vec![0, 1, 4, 0]);
        assert_eq!(Polynomial::zero(&f).coefficient_vector(3).unwrap(), vec![0; 20]);
        assert_eq!(p(&f, "x1 + x2^2").coefficient_vector(2), Err(PolyError::NotHomogeneous(2)));
        let g = p(&f, "x1^2*x3 + 3*x4^3");
        assert_eq!(Polynomial::from_coefficient_vector(&f, 3, &g.coefficient_vector(3).unwrap()), g);
    }

    #[test]
    fn parse_and_format() {
        let f3 = fq(3);
        let zeta = p(&f3, "x3^3 + 2*x1^2*x3");
        assert_eq!(zeta, p(&f3, "x3^3 - x1^2 * x3"));
        assert_eq!(zeta.to_string(), "2*x1^2*x3 + x3^3");
        assert!(matches!(Polynomial::parse(&f3, "x1^70000"), Err(PolyError::ExponentOverflow(70000))));
        assert!(matches!(Polynomial::parse(&f3, "x5"), Err(PolyError::Syntax { .. })));
        assert!(matches!(Polynomial::parse(&f3, "x1 + "), Err(PolyError::Syntax { .. })));
        assert!(matches!(Polynomial::parse(&f3, "3*x1"), Err(PolyError::Field(_))));
        let f9 = fq(9);
        let g = p(&f9, "[1,2]*x1*x2 + [0,1] + x4");
        assert_eq!(g.to_string(), "[1,2]*x1*x2 + x4 + [0,1]");
        assert_eq!(p(&f9, &g.to_string()), g);
        assert_eq!(Polynomial::zero(&f9).to_string(), "0");
        assert_eq!(p(&f9, "0"), Polynomial::zero(&f9));
    }

    #[test]
    fn transvection_examples() {
        let f = fq(5);
        // x2 -> x2 - 2 x1
        let sub = LinearSubstitution::from_images(&f, [[1, 0, 0, 0], [3, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]);
        assert_eq!(p(&f, "x2").substitute(&sub).unwrap(), p(&f, "x2 - 2*x1"));
        let g = p(&f, "x1^3 + x2*x4 + 4");
        assert_eq!(g.substitute(&LinearSubstitution::identity(&f)).unwrap(), g);
    }

    fn arb_poly(q: u32) -> impl Strategy<Value = Polynomial> {
        let f = fq(q);
        proptest::collection::vec(((0u32..4, 0u32..4, 0u32..3, 0u32..3), 0..q), 0..6).prop_map(move |ts| {
            Polynomial::from_terms(&f, ts.into_iter().map(|((a, b, c, d), k)| (Monomial::new([a, b, c, d]).unwrap(), k)))
        })
    }

    fn arb_matrix(q: u32) -> impl Strategy<Value = LinearSubstitution> {
        let f = fq(q);
        proptest::collection::vec(0..q, 16).prop_map(move |v| {
            LinearSubstitution::new(MatrixFq::from_data(&f, 4, 4, v).unwrap()).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn substitution_is_ring_hom(
            (a, b, m) in prop::sample::select(vec![3u32, 5, 9])
                .prop_flat_map(|q| (arb_poly(q), arb_poly(q), arb_matrix(q)))
        ) {
            let sa = a.substitute(&m).unwrap();
            let sb = b.substitute(&m).unwrap();
            prop_assert_eq!((&a + &b).substitute(&m).unwrap(), &sa + &sb);
            prop_assert_eq!((&a * &b).substitute(&m).unwrap(), &sa * &sb);
            // factored route agrees with direct expansion
            prop_assert_eq!(sa, a.substitute_by_expansion(&m).unwrap());
        }

        #[test]
        fn substitution_composes(a in arb_poly(5), m1 in arb_matrix(5), m2 in arb_matrix(5)) {
            let seq = a.substitute(&m2).unwrap().substitute(&m1).unwrap();
            let prod = a.substitute(&m1.compose(&m2).unwrap()).unwrap();
            prop_assert_eq!(seq, prod);
        }

        #[test]
        fn substitution_keeps_homogeneity(m in arb_matrix(7), e in (0u32..5, 0u32..5, 0u32..5, 0u32..5)) {
            let f = fq(7);
            let mono = Polynomial::term(&f, Monomial::new([e.0, e.1, e.2, e.3]).unwrap(), 3);
            let img = mono.substitute(&m).unwrap();
            prop_assert!(img.is_zero() || img.homogeneous_degree() == Some(e.0 + e.1 + e.2 + e.3));
        }

        #[test]
        fn text_round_trip(a in arb_poly(9)) {
            prop_assert_eq!(Polynomial::parse(a.field(), &a.to_string()).unwrap(), a);
        }
    }

    #[test]
    fn large_exponent_binomials_use_lucas() {
        let b = Binomials::new(7, 1000);
        let t = Binomials::new(7, 60);
        for n in [0u32, 1, 13, 49, 50, 60] {
            for k in 0..=n {
                assert_eq!(b.get(n, k), t.get(n, k), "C({n},{k}) mod 7");
            }
        }
    }
}
