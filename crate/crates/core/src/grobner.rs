//! Buchberger's algorithm under graded reverse lexicographic order.
//!
//! Only what a zero-dimensionality test needs: normal forms, reduced bases,
//! and the standard-monomial count of the quotient.

use std::cmp::Ordering;

use thiserror::Error;

use crate::gf::FieldSpec;
use crate::mpoly::{Monomial, PolyError, Polynomial, NVARS};

/// Default bound on the number of basis polynomials.
pub const DEFAULT_BASIS_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrobnerError {
    #[error("no generators given")]
    Empty,
    #[error("polynomials are over different fields")]
    FieldMismatch,
    #[error("basis grew past the cap of {0} polynomials")]
    CapExceeded(usize),
    #[error("degree {0} is too large for the grevlex key")]
    DegreeTooLarge(u32),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

pub type Result<T> = std::result::Result<T, GrobnerError>;

/// Packed grevlex key: larger key means larger monomial.
#[inline]
fn key(m: Monomial) -> u64 {
    let [_, e2, e3, e4] = m.exponents();
    ((m.degree() as u64) << 48) | (((0xffff - e4) as u64) << 32) | (((0xffff - e3) as u64) << 16) | (0xffff - e2) as u64
}

/// Compares two monomials in grevlex order.
pub fn grevlex_cmp(a: Monomial, b: Monomial) -> Ordering {
    key(a).cmp(&key(b))
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct GPoly {
    /// (key, monomial, coefficient), strictly decreasing keys.
    terms: Vec<(u64, Monomial, u32)>,
}

impl GPoly {
    fn from_poly(p: &Polynomial) -> Result<Self> {
        if let Some(d) = p.total_degree().filter(|&d| d > 0xffff) {
            return Err(GrobnerError::DegreeTooLarge(d));
        }
        let mut terms: Vec<(u64, Monomial, u32)> = p.raw_terms().iter().map(|&(m, c)| (key(m), m, c)).collect();
        terms.sort_unstable_by(|a, b| b.0.cmp(&a.0));
        Ok(GPoly { terms })
    }

    fn to_poly(&self, field: &FieldSpec) -> Polynomial {
        Polynomial::from_terms(field, self.terms.iter().map(|&(_, m, c)| (m, c)))
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn lm(&self) -> Monomial {
        self.terms[0].1
    }

    fn lc(&self) -> u32 {
        self.terms[0].2
    }

    fn monic(mut self, f: &FieldSpec) -> Self {
        if let Some(&(_, _, c)) = self.terms.first() {
            if c != 1 {
                let inv = f.inv(c).expect("nonzero");
                for t in &mut self.terms {
                    t.2 = f.mul(t.2, inv);
                }
            }
        }
        self
    }

    /// `self - c * m * g`, starting the merge at term index `from` of `self`.
    fn sub_scaled(&self, from: usize, f: &FieldSpec, c: u32, m: Monomial, g: &GPoly) -> Result<GPoly> {
        let a = &self.terms[from..];
        let nc = f.neg(c);
        let mut b = Vec::with_capacity(g.terms.len());
        for &(_, gm, gc) in &g.terms {
            let prod = gm.checked_mul(m)?;
            b.push((key(prod), prod, f.mul(gc, nc)));
        }
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Greater => {
                    out.push(a[i]);
                    i += 1;
                }
                Ordering::Less => {
                    out.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    let s = f.add(a[i].2, b[j].2);
                    if s != 0 {
                        out.push((a[i].0, a[i].1, s));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Ok(GPoly { terms: out })
    }
}

/// Full reduction of `p` by `basis`; `quotients[k]` collects the multiples of
/// `basis[k]` that were subtracted.
fn reduce(f: &FieldSpec, p: &GPoly, basis: &[GPoly], mut quotients: Option<&mut Vec<Vec<(Monomial, u32)>>>) -> Result<GPoly> {
    let mut cur = p.clone();
    let mut start = 0;
    let mut rem: Vec<(u64, Monomial, u32)> = Vec::new();
    while start < cur.terms.len() {
        let (_, m, c) = cur.terms[start];
        match basis.iter().position(|g| !g.is_zero() && g.lm().divides(m)) {
            Some(k) => {
                let g = &basis[k];
                let t = g.lm().quotient_of(m).expect("divides");
                let factor = f.mul(c, f.inv(g.lc()).expect("nonzero"));
                if let Some(qs) = quotients.as_deref_mut() {
                    qs[k].push((t, factor));
                }
                cur = cur.sub_scaled(start, f, factor, t, g)?;
                start = 0;
            }
            None => {
                rem.push(cur.terms[start]);
                start += 1;
            }
        }
    }
    Ok(GPoly { terms: rem })
}

fn gpolys(f: &FieldSpec, polys: &[Polynomial]) -> Result<Vec<GPoly>> {
    polys
        .iter()
        .map(|p| if p.field() == f { GPoly::from_poly(p) } else { Err(GrobnerError::FieldMismatch) })
        .collect()
}

/// Remainder of `f` on division by `basis` (grevlex leading terms, first
/// divisor in list order wins).
pub fn normal_form(f: &Polynomial, basis: &[Polynomial]) -> Result<Polynomial> {
    let field = f.field();
    let gs = gpolys(field, basis)?;
    Ok(reduce(field, &GPoly::from_poly(f)?, &gs, None)?.to_poly(field))
}

/// Quotients and remainder: `f = sum q_k basis[k] + r`.
pub fn divide(f: &Polynomial, basis: &[Polynomial]) -> Result<(Vec<Polynomial>, Polynomial)> {
    let field = f.field();
    let gs = gpolys(field, basis)?;
    let mut qs = vec![Vec::new(); gs.len()];
    let r = reduce(field, &GPoly::from_poly(f)?, &gs, Some(&mut qs))?;
    let quotients = qs.into_iter().map(|t| Polynomial::from_terms(field, t)).collect();
    Ok((quotients, r.to_poly(field)))
}

fn s_poly(f: &FieldSpec, a: &GPoly, b: &GPoly) -> Result<GPoly> {
    let l = a.lm().lcm(b.lm());
    let ta = a.lm().quotient_of(l).expect("lcm");
    let tb = b.lm().quotient_of(l).expect("lcm");
    // both inputs are monic
    let scaled_a = GPoly { terms: vec![] }.sub_scaled(0, f, f.neg(1), ta, a)?;
    scaled_a.sub_scaled(0, f, 1, tb, b)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroebnerBasis {
    field: FieldSpec,
    polys: Vec<Polynomial>,
    leading: Vec<Monomial>,
    reduced: bool,
}

impl GroebnerBasis {
    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    pub fn leading_monomials(&self) -> &[Monomial] {
        &self.leading
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    pub fn len(&self) -> usize {
        self.polys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polys.is_empty()
    }

    /// For each variable, the smallest pure power among the leading monomials.
    pub fn pure_powers(&self) -> [Option<Monomial>; NVARS] {
        let mut out = [None; NVARS];
        for &m in &self.leading {
            if let Some(i) = m.pure_power_of() {
                if out[i].is_none_or(|o: Monomial| m.exponent(i) < o.exponent(i)) {
                    out[i] = Some(m);
                }
            }
        }
        out
    }

    pub fn is_zero_dimensional(&self) -> bool {
        self.pure_powers().iter().all(Option::is_some)
    }

    /// Dimension of the quotient ring, counted by standard monomials.
    /// `None` unless the ideal is zero-dimensional.
    pub fn quotient_dimension(&self) -> Option<u64> {
        let bounds: Vec<u32> = self.pure_powers().iter().map(|m| m.map(|m| m.exponent(m.pure_power_of().unwrap()))).collect::<Option<_>>()?;
        let mut count = 0u64;
        for e1 in 0..bounds[0] {
            for e2 in 0..bounds[1] {
                for e3 in 0..bounds[2] {
                    for e4 in 0..bounds[3] {
                        let m = Monomial::new([e1, e2, e3, e4]).expect("below pure powers");
                        if !self.leading.iter().any(|l| l.divides(m)) {
                            count += 1;
                        }
                    }
                }
            }
        }
        Some(count)
    }

    pub fn normal_form(&self, f: &Polynomial) -> Result<Polynomial> {
        normal_form(f, &self.polys)
    }

    /// Every S-polynomial of a pair reduces to zero.
    pub fn verify_s_pairs(&self) -> Result<bool> {
        let f = &self.field;
        let gs = gpolys(f, &self.polys)?;
        for i in 0..gs.len() {
            for j in i + 1..gs.len() {
                if !reduce(f, &s_poly(f, &gs[i], &gs[j])?, &gs, None)?.is_zero() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// Reduced Gröbner basis of the ideal generated by `gens`.
pub fn buchberger(gens: &[Polynomial], cap: usize) -> Result<GroebnerBasis> {
    let field = gens.first().ok_or(GrobnerError::Empty)?.field().clone();
    let f = &field;
    let mut basis: Vec<GPoly> = Vec::new();
    for g in gpolys(f, gens)? {
        if !g.is_zero() {
            basis.push(g.monic(f));
        }
    }
    if basis.is_empty() {
        return Err(GrobnerError::Empty);
    }
    let mut pairs: Vec<(usize, usize)> = (0..basis.len()).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    while !pairs.is_empty() {
        // normal strategy: smallest lcm degree, ties by pair index
        let (pos, _) = pairs
            .iter()
            .enumerate()
            .min_by_key(|&(_, &(i, j))| (basis[i].lm().lcm(basis[j].lm()).degree(), i, j))
            .expect("nonempty");
        let (i, j) = pairs.swap_remove(pos);
        if basis[i].lm().is_coprime(basis[j].lm()) {
            continue;
        }
        let r = reduce(f, &s_poly(f, &basis[i], &basis[j])?, &basis, None)?;
        if !r.is_zero() {
            if basis.len() >= cap {
                return Err(GrobnerError::CapExceeded(cap));
            }
            let k = basis.len();
            basis.push(r.monic(f));
            pairs.extend((0..k).map(|i| (i, k)));
        }
    }
    // minimalize: drop any element whose leading monomial another one divides
    let mut keep: Vec<GPoly> = Vec::new();
    for (i, g) in basis.iter().enumerate() {
        let redundant = basis.iter().enumerate().any(|(j, h)| {
            j != i && h.lm().divides(g.lm()) && (h.lm() != g.lm() || j < i)
        });
        if !redundant {
            keep.push(g.clone());
        }
    }
    // interreduce
    for i in 0..keep.len() {
        let others: Vec<GPoly> = keep.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, g)| g.clone()).collect();
        let lead = GPoly { terms: vec![keep[i].terms[0]] };
        let tail = GPoly { terms: keep[i].terms[1..].to_vec() };
        let reduced_tail = reduce(f, &tail, &others, None)?;
        let mut terms = lead.terms;
        terms.extend(reduced_tail.terms);
        keep[i] = GPoly { terms }.monic(f);
    }
    keep.sort_by(|a, b| b.terms[0].0.cmp(&a.terms[0].0));
    let leading = keep.iter().map(GPoly::lm).collect();
    let polys = keep.iter().map(|g| g.to_poly(f)).collect();
    Ok(GroebnerBasis { field, polys, leading, reduced: true })
}
