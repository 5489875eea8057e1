//! Exact arithmetic in finite fields `F_q`, `q = p^s`.
//!
//! Elements are stored as their coordinate vector with respect to the power
//! basis `1, t, ..., t^(s-1)` of `F_p[t] / (m(t))`, packed into a single
//! `u32` as `c_0 + c_1 p + ... + c_(s-1) p^(s-1)`. The packed value is the
//! canonical form: two elements are equal iff their packed values are equal.
//!
//! [`FieldSpec`] carries the raw arithmetic on packed values, which is what
//! the polynomial and linear-algebra engines use in their inner loops.
//! [`FieldElement`] pairs a packed value with its field and is the checked,
//! user-facing element type.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use thiserror::Error;

/// Largest field order supported. Keeps packed values and lookup tables in `u16`.
pub const MAX_ORDER: u32 = 1 << 16;

/// Extension fields up to this order get full addition/multiplication tables.
const TABLE_LIMIT: u32 = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GfError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {0} exceeds the supported maximum {MAX_ORDER}")]
    TooLarge(u64),
    #[error("modulus must have {expected} coefficients (degree {degree}), got {got}")]
    ModulusLength { expected: usize, degree: u32, got: usize },
    #[error("modulus is not monic")]
    NotMonic,
    #[error("modulus coefficient {0} is not reduced mod p")]
    ModulusCoefficient(u32),
    #[error("modulus is reducible over F_p")]
    Reducible,
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("zero has no inverse")]
    ZeroInverse,
    #[error("zero is neither a square nor a non-square here")]
    ZeroResidue,
    #[error("quadratic residue classes need odd characteristic (q = {0})")]
    EvenCharacteristic(u32),
    #[error("cannot parse field element {text:?}: {reason}")]
    Parse { text: String, reason: String },
}

pub type Result<T> = std::result::Result<T, GfError>;

struct Inner {
    p: u32,
    s: u32,
    q: u32,
    /// `s + 1` coefficients, low degree first, monic. `None` for prime fields.
    modulus: Option<Vec<u32>>,
    add_table: Option<Vec<u16>>,
    mul_table: Option<Vec<u16>>,
}

/// The field `F_q = F_p[t]/(m(t))`. Cheap to clone; identity is `(p, s, modulus)`.
#[derive(Clone)]
pub struct FieldSpec(Arc<Inner>);

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.p == other.0.p && self.0.s == other.0.s && self.0.modulus == other.0.modulus)
    }
}

impl Eq for FieldSpec {}

impl Hash for FieldSpec {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.p.hash(state);
        self.0.s.hash(state);
        self.0.modulus.hash(state);
    }
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldSpec({self})")
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.modulus {
            None => write!(f, "F_{}", self.0.q),
            Some(m) => write!(f, "F_{} = F_{}[t]/({})", self.0.q, self.0.p, format_upoly(m)),
        }
    }
}

fn format_upoly(c: &[u32]) -> String {
    let mut parts = Vec::new();
    for (i, &a) in c.iter().enumerate().rev() {
        if a == 0 {
            continue;
        }
        let mon = match i {
            0 => String::new(),
            1 => "t".to_string(),
            _ => format!("t^{i}"),
        };
        parts.push(match (a, i) {
            (_, 0) => a.to_string(),
            (1, _) => mon,
            _ => format!("{a}{mon}"),
        });
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join(" + ")
    }
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Decompose `q` as `p^s` with `p` prime.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q % d == 0)?;
    let mut rest = q;
    let mut s = 0;
    while rest % p == 0 {
        rest /= p;
        s += 1;
    }
    (rest == 1).then_some((p, s))
}

// Dense univariate polynomials over Z/p, low degree first, used for the
// modulus search and for inversion.

fn upoly_trim(a: &mut Vec<u32>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn inv_mod_prime(a: u32, p: u32) -> u32 {
    // Extended Euclid on integers; a != 0 mod p.
    let (mut r0, mut r1) = (p as i64, a as i64 % p as i64);
    let (mut t0, mut t1) = (0i64, 1i64);
    while r1 != 0 {
        let k = r0 / r1;
        (r0, r1) = (r1, r0 - k * r1);
        (t0, t1) = (t1, t0 - k * t1);
    }
    debug_assert_eq!(r0, 1);
    t0.rem_euclid(p as i64) as u32
}

fn upoly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    upoly_trim(&mut r);
    let db = b.len() - 1;
    let lead_inv = inv_mod_prime(b[db], p);
    while r.len() > db {
        let shift = r.len() - 1 - db;
        let f = (r[r.len() - 1] as u64 * lead_inv as u64 % p as u64) as u32;
        for (i, &bc) in b.iter().enumerate() {
            let idx = shift + i;
            r[idx] = ((r[idx] as u64 + (p - f) as u64 * bc as u64) % p as u64) as u32;
        }
        upoly_trim(&mut r);
    }
    r
}

/// `(q, r)` with `a = q b + r`.
fn upoly_divrem(a: &[u32], b: &[u32], p: u32) -> (Vec<u32>, Vec<u32>) {
    let mut r = a.to_vec();
    upoly_trim(&mut r);
    let db = b.len() - 1;
    if r.len() <= db {
        return (vec![], r);
    }
    let mut quot = vec![0u32; r.len() - db];
    let lead_inv = inv_mod_prime(b[db], p);
    while r.len() > db {
        let shift = r.len() - 1 - db;
        let f = (r[r.len() - 1] as u64 * lead_inv as u64 % p as u64) as u32;
        quot[shift] = f;
        for (i, &bc) in b.iter().enumerate() {
            let idx = shift + i;
            r[idx] = ((r[idx] as u64 + (p - f) as u64 * bc as u64) % p as u64) as u32;
        }
        upoly_trim(&mut r);
    }
    upoly_trim(&mut quot);
    (quot, r)
}

fn upoly_sub_mul(a: &[u32], k: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    // a - k*b
    let len = a.len().max(k.len() + b.len());
    let mut out = vec![0u32; len];
    out[..a.len()].copy_from_slice(a);
    for (i, &kc) in k.iter().enumerate() {
        for (j, &bc) in b.iter().enumerate() {
            let prod = (kc as u64 * bc as u64 % p as u64) as u32;
            out[i + j] = (out[i + j] + p - prod) % p;
        }
    }
    upoly_trim(&mut out);
    out
}

/// Irreducibility by trial division with every monic polynomial of degree `1..=deg/2`.
fn upoly_is_irreducible(m: &[u32], p: u32) -> bool {
    let deg = m.len() - 1;
    if deg <= 1 {
        return deg == 1;
    }
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for idx in 0..count {
            let mut div = Vec::with_capacity(d + 1);
            let mut x = idx;
            for _ in 0..d {
                div.push((x % p as u64) as u32);
                x /= p as u64;
            }
            div.push(1);
            if upoly_rem(m, &div, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Monic degree-`s` polynomials over `F_p` in lexicographic order of their
/// coefficient lists compared from the constant term upward.
fn smallest_irreducible(p: u32, s: u32) -> Vec<u32> {
    let count = (p as u64).pow(s);
    // Lex on (c_0, c_1, ..., c_(s-1)) means c_0 is the most significant digit.
    for idx in 0..count {
        let mut digits = vec![0u32; s as usize];
        let mut x = idx;
        for k in (0..s as usize).rev() {
            digits[k] = (x % p as u64) as u32;
            x /= p as u64;
        }
        digits.push(1);
        if upoly_is_irreducible(&digits, p) {
            return digits;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

impl FieldSpec {
    /// Build `F_{p^s}`. Without an explicit modulus the lexicographically
    /// smallest monic irreducible of degree `s` is used.
    pub fn new(p: u32, s: u32, modulus: Option<Vec<u32>>) -> Result<Self> {
        if !is_prime(p) {
            return Err(GfError::NotPrime(p));
        }
        if s == 0 {
            return Err(GfError::ZeroDegree);
        }
        let q = (p as u64).checked_pow(s).unwrap_or(u64::MAX);
        if q > MAX_ORDER as u64 {
            return Err(GfError::TooLarge(q));
        }
        let q = q as u32;
        let modulus = match (s, modulus) {
            (1, None) => None,
            (1, Some(m)) => {
                // A degree-1 modulus is accepted but carries no information.
                Self::check_modulus(&m, p, 1)?;
                None
            }
            (_, Some(m)) => {
                Self::check_modulus(&m, p, s)?;
                if !upoly_is_irreducible(&m, p) {
                    return Err(GfError::Reducible);
                }
                Some(m)
            }
            (_, None) => Some(smallest_irreducible(p, s)),
        };
        let mut inner = Inner { p, s, q, modulus, add_table: None, mul_table: None };
        if s > 1 && q <= TABLE_LIMIT {
            let n = q as usize;
            let mut add = vec![0u16; n * n];
            let mut mul = vec![0u16; n * n];
            for a in 0..q {
                for b in 0..q {
                    add[(a * q + b) as usize] = slow_add(&inner, a, b) as u16;
                    mul[(a * q + b) as usize] = slow_mul(&inner, a, b) as u16;
                }
            }
            inner.add_table = Some(add);
            inner.mul_table = Some(mul);
        }
        Ok(FieldSpec(Arc::new(inner)))
    }

    /// The prime field `F_p`.
    pub fn prime(p: u32) -> Result<Self> {
        Self::new(p, 1, None)
    }

    /// `F_q` for a prime power `q`, with the default modulus.
    pub fn of_order(q: u32) -> Result<Self> {
        let (p, s) = prime_power(q).ok_or(GfError::NotPrime(q))?;
        Self::new(p, s, None)
    }

    fn check_modulus(m: &[u32], p: u32, s: u32) -> Result<()> {
        if m.len() != s as usize + 1 {
            return Err(GfError::ModulusLength { expected: s as usize + 1, degree: s, got: m.len() });
        }
        if let Some(&c) = m.iter().find(|&&c| c >= p) {
            return Err(GfError::ModulusCoefficient(c));
        }
        if m[s as usize] != 1 {
            return Err(GfError::NotMonic);
        }
        Ok(())
    }

    pub fn p(&self) -> u32 {
        self.0.p
    }

    pub fn s(&self) -> u32 {
        self.0.s
    }

    pub fn q(&self) -> u32 {
        self.0.q
    }

    pub fn is_prime_field(&self) -> bool {
        self.0.s == 1
    }

    pub fn is_odd(&self) -> bool {
        self.0.p != 2
    }

    /// Modulus coefficients, low degree first (only for `s > 1`).
    pub fn modulus(&self) -> Option<&[u32]> {
        self.0.modulus.as_deref()
    }

    // ---- raw arithmetic on packed values ----

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let f = &*self.0;
        if f.s == 1 {
            let r = a + b;
            if r >= f.p {
                r - f.p
            } else {
                r
            }
        } else if let Some(t) = &f.add_table {
            t[(a * f.q + b) as usize] as u32
        } else {
            slow_add(f, a, b)
        }
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        let f = &*self.0;
        if a == 0 {
            0
        } else if f.s == 1 {
            f.p - a
        } else {
            self.map_digits(a, |d| if d == 0 { 0 } else { f.p - d })
        }
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        let f = &*self.0;
        if f.s == 1 {
            (a as u64 * b as u64 % f.p as u64) as u32
        } else if let Some(t) = &f.mul_table {
            t[(a * f.q + b) as usize] as u32
        } else {
            slow_mul(f, a, b)
        }
    }

    /// Multiplicative inverse by extended Euclid; `None` for zero.
    pub fn inv(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        let f = &*self.0;
        if f.s == 1 {
            return Some(inv_mod_prime(a, f.p));
        }
        let p = f.p;
        let m = f.modulus.as_ref().expect("extension field has a modulus");
        // Extended Euclid in F_p[t]: track s_i with s_i * a = r_i (mod m).
        let (mut r0, mut r1) = (m.clone(), self.unpack(a));
        upoly_trim(&mut r1);
        let (mut s0, mut s1): (Vec<u32>, Vec<u32>) = (vec![], vec![1]);
        while !r1.is_empty() {
            let (k, r) = upoly_divrem(&r0, &r1, p);
            let s2 = upoly_sub_mul(&s0, &k, &s1, p);
            r0 = std::mem::replace(&mut r1, r);
            s0 = std::mem::replace(&mut s1, s2);
        }
        // r0 is a nonzero constant since m is irreducible.
        debug_assert_eq!(r0.len(), 1);
        let c = inv_mod_prime(r0[0], p);
        let inv: Vec<u32> = s0.iter().map(|&x| (x as u64 * c as u64 % p as u64) as u32).collect();
        let inv = upoly_rem(&inv, m, p);
        Some(self.pack(&inv))
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a;
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// The image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> u32 {
        n.rem_euclid(self.0.p as i64) as u32
    }

    /// `dst[k] -= factor * src[k]` for every `k`.
    pub fn sub_mul_assign(&self, dst: &mut [u32], src: &[u32], factor: u32) {
        if factor == 0 {
            return;
        }
        let f = &*self.0;
        if f.s == 1 {
            let p = f.p as u64;
            let nf = (f.p - factor) as u64;
            for (d, &x) in dst.iter_mut().zip(src) {
                if x != 0 {
                    *d = ((*d as u64 + nf * x as u64) % p) as u32;
                }
            }
        } else {
            let nf = self.neg(factor);
            for (d, &x) in dst.iter_mut().zip(src) {
                if x != 0 {
                    *d = self.add(*d, self.mul(nf, x));
                }
            }
        }
    }

    pub fn scale_slice(&self, v: &mut [u32], factor: u32) {
        for x in v.iter_mut() {
            *x = self.mul(*x, factor);
        }
    }

    fn map_digits(&self, a: u32, g: impl Fn(u32) -> u32) -> u32 {
        let p = self.0.p;
        let mut x = a;
        let mut out = 0;
        let mut place = 1;
        for _ in 0..self.0.s {
            out += g(x % p) * place;
            x /= p;
            place *= p;
        }
        out
    }

    /// Coefficient vector (length `s`, low degree first) of a packed value.
    pub fn unpack(&self, a: u32) -> Vec<u32> {
        let p = self.0.p;
        let mut x = a;
        (0..self.0.s)
            .map(|_| {
                let d = x % p;
                x /= p;
                d
            })
            .collect()
    }

    /// Packed value of a coefficient vector; entries beyond degree `s-1` must already be reduced away.
    pub fn pack(&self, coeffs: &[u32]) -> u32 {
        coeffs.iter().rev().fold(0, |acc, &c| acc * self.0.p + c)
    }

    /// An `F_p`-basis of `F_q`: the powers `1, t, ..., t^(s-1)`.
    pub fn prime_basis(&self) -> Vec<u32> {
        (0..self.0.s).map(|i| self.0.p.pow(i)).collect()
    }

    /// The smallest packed value that generates the multiplicative group.
    pub fn primitive_element(&self) -> u32 {
        let n = (self.0.q - 1) as u64;
        let mut factors = Vec::new();
        let mut m = n;
        let mut d = 2;
        while d * d <= m {
            if m % d == 0 {
                factors.push(d);
                while m % d == 0 {
                    m /= d;
                }
            }
            d += 1;
        }
        if m > 1 {
            factors.push(m);
        }
        (1..self.0.q)
            .find(|&g| factors.iter().all(|&r| self.pow(g, n / r) != 1))
            .expect("multiplicative group is cyclic")
    }

    /// `a` is a nonzero square. Every nonzero element is a square when `p = 2`.
    pub fn is_square_raw(&self, a: u32) -> bool {
        if self.0.p == 2 {
            return a != 0;
        }
        a != 0 && self.pow(a, ((self.0.q - 1) / 2) as u64) == 1
    }

    // ---- element-level API ----

    pub fn element(&self, packed: u32) -> FieldElement {
        assert!(packed < self.0.q, "packed value {packed} out of range for {self}");
        FieldElement { field: self.clone(), value: packed }
    }

    pub fn zero(&self) -> FieldElement {
        self.element(0)
    }

    pub fn one(&self) -> FieldElement {
        self.element(1)
    }

    /// Element from its coefficient vector (low degree first).
    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<FieldElement> {
        if coeffs.len() > self.0.s as usize {
            return Err(GfError::Parse {
                text: format!("{coeffs:?}"),
                reason: format!("at most {} coefficients allowed", self.0.s),
            });
        }
        if let Some(&c) = coeffs.iter().find(|&&c| c >= self.0.p) {
            return Err(GfError::Parse { text: format!("{coeffs:?}"), reason: format!("{c} is not reduced mod {}", self.0.p) });
        }
        Ok(self.element(self.pack(coeffs)))
    }

    /// All `q` elements, in increasing packed order; the first is zero.
    pub fn enumerate(&self) -> Vec<FieldElement> {
        (0..self.0.q).map(|v| self.element(v)).collect()
    }

    /// Quadratic residues and non-residues of `F_q^×` (odd `q` only).
    pub fn residue_sets(&self) -> Result<(Vec<FieldElement>, Vec<FieldElement>)> {
        if !self.is_odd() {
            return Err(GfError::EvenCharacteristic(self.0.q));
        }
        let (squares, nonsquares) = (1..self.0.q).partition(|&a| self.is_square_raw(a));
        let wrap = |v: Vec<u32>| v.into_iter().map(|a| self.element(a)).collect();
        Ok((wrap(squares), wrap(nonsquares)))
    }

    /// Parse a packed element from text: a decimal residue below `p`, or a
    /// bracketed coefficient vector `[c0,c1,...]` (low degree first).
    pub fn parse_raw(&self, text: &str) -> Result<u32> {
        let t = text.trim();
        let err = |reason: String| GfError::Parse { text: text.to_string(), reason };
        if let Some(inner) = t.strip_prefix('[') {
            let inner = inner.strip_suffix(']').ok_or_else(|| err("missing ']'".into()))?;
            let coeffs = inner
                .split(',')
                .map(|c| c.trim().parse::<u32>().map_err(|e| err(e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            if coeffs.len() > self.0.s as usize {
                return Err(err(format!("at most {} coefficients allowed", self.0.s)));
            }
            if let Some(&c) = coeffs.iter().find(|&&c| c >= self.0.p) {
                return Err(err(format!("{c} is not reduced mod {}", self.0.p)));
            }
            Ok(self.pack(&coeffs))
        } else {
            let v = t.parse::<u64>().map_err(|e| err(e.to_string()))?;
            if v >= self.0.p as u64 {
                return Err(err(format!("{v} is not reduced mod {}", self.0.p)));
            }
            Ok(v as u32)
        }
    }

    /// Text form of a packed element: decimal for prime fields, `[c0,...]` otherwise.
    pub fn format_raw(&self, a: u32) -> String {
        if self.0.s == 1 {
            a.to_string()
        } else {
            let c = self.unpack(a);
            let body: Vec<String> = c.iter().map(u32::to_string).collect();
            format!("[{}]", body.join(","))
        }
    }
}

fn slow_add(f: &Inner, a: u32, b: u32) -> u32 {
    let (mut x, mut y) = (a, b);
    let mut out = 0;
    let mut place = 1;
    for _ in 0..f.s {
        out += ((x % f.p + y % f.p) % f.p) * place;
        x /= f.p;
        y /= f.p;
        place *= f.p;
    }
    out
}

fn slow_mul(f: &Inner, a: u32, b: u32) -> u32 {
    let p = f.p as u64;
    let s = f.s as usize;
    let digits = |mut x: u32| -> Vec<u64> {
        (0..s)
            .map(|_| {
                let d = (x % f.p) as u64;
                x /= f.p;
                d
            })
            .collect()
    };
    let (da, db) = (digits(a), digits(b));
    let mut prod = vec![0u64; 2 * s - 1];
    for (i, &x) in da.iter().enumerate() {
        for (j, &y) in db.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    let m = f.modulus.as_ref().expect("extension field has a modulus");
    for top in (s..prod.len()).rev() {
        let c = prod[top];
        if c == 0 {
            continue;
        }
        prod[top] = 0;
        // t^top = -sum_{k<s} m_k t^(top - s + k)
        for k in 0..s {
            let idx = top - s + k;
            prod[idx] = (prod[idx] + (p - c) * m[k] as u64) % p;
        }
    }
    prod[..s].iter().rev().fold(0u32, |acc, &c| acc * f.p + c as u32)
}

/// An element of a specific field. Operations between elements of different
/// fields fail with [`GfError::FieldMismatch`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FieldElement {
    field: FieldSpec,
    value: u32,
}

impl FieldElement {
    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    /// The packed representation.
    pub fn packed(&self) -> u32 {
        self.value
    }

    /// Coefficients with respect to the power basis, low degree first.
    pub fn coeffs(&self) -> Vec<u32> {
        self.field.unpack(self.value)
    }

    pub fn is_zero(&self) -> bool {
        self.value == 0
    }

    fn same_field(&self, other: &Self) -> Result<()> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(GfError::FieldMismatch)
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.field.element(self.field.add(self.value, other.value)))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.field.element(self.field.sub(self.value, other.value)))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.field.element(self.field.mul(self.value, other.value)))
    }

    pub fn neg(&self) -> Self {
        self.field.element(self.field.neg(self.value))
    }

    pub fn inv(&self) -> Result<Self> {
        self.field.inv(self.value).map(|v| self.field.element(v)).ok_or(GfError::ZeroInverse)
    }

    pub fn pow(&self, e: u64) -> Self {
        self.field.element(self.field.pow(self.value, e))
    }

    /// Whether this nonzero element is a square in `F_q^×`.
    pub fn is_square(&self) -> Result<bool> {
        if self.value == 0 {
            return Err(GfError::ZeroResidue);
        }
        Ok(self.field.is_square_raw(self.value))
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.field.format_raw(self.value))
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} in F_{}", self.field.format_raw(self.value), self.field.q())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(q: u32) -> FieldSpec {
        FieldSpec::of_order(q).unwrap()
    }

    /// Brute-force irreducibility for small degree: no roots (deg <= 3).
    fn has_root(m: &[u32], p: u32) -> bool {
        (0..p).any(|x| m.iter().rev().fold(0u64, |acc, &c| (acc * x as u64 + c as u64) % p as u64) == 0)
    }

    #[test]
    fn construction_examples() {
        let f7 = FieldSpec::new(7, 1, None).unwrap();
        assert_eq!((f7.q(), f7.modulus()), (7, None));

        // Monic quadratics over F_3 in constant-term-first lex order; first rootless one is t^2 + 1.
        let first_rootless = (0..9u32)
            .map(|i| vec![i / 3, i % 3, 1])
            .find(|m| !has_root(m, 3))
            .unwrap();
        assert_eq!(first_rootless, vec![1, 0, 1]);
        assert_eq!(FieldSpec::new(3, 2, None).unwrap().modulus(), Some(&[1, 0, 1][..]));

        assert!(FieldSpec::new(2, 2, Some(vec![1, 1, 1])).is_ok());
        assert_eq!(FieldSpec::new(2, 2, Some(vec![1, 0, 1])), Err(GfError::Reducible));
        assert_eq!(FieldSpec::new(2, 2, Some(vec![1, 1, 0])), Err(GfError::NotMonic));
        assert_eq!(FieldSpec::new(6, 1, None).unwrap_err(), GfError::NotPrime(6));
        assert_eq!(FieldSpec::new(5, 0, None).unwrap_err(), GfError::ZeroDegree);
    }

    #[test]
    fn default_modulus_degree_four_has_no_quadratic_factor() {
        let f16 = FieldSpec::new(2, 4, None).unwrap();
        let m = f16.modulus().unwrap().to_vec();
        assert!(!has_root(&m, 2));
        // only irreducible quadratic over F_2
        assert!(!upoly_rem(&m, &[1, 1, 1], 2).is_empty());
    }

    #[test]
    fn arithmetic_examples() {
        let f7 = f(7);
        assert_eq!(f7.element(3).try_add(&f7.element(5)).unwrap(), f7.element(1));
        let f9 = f(9);
        let t = f9.from_coeffs(&[0, 1]).unwrap();
        assert_eq!(t.try_mul(&t).unwrap(), f9.element(2));
        let f5 = f(5);
        assert_eq!(f5.element(2).inv().unwrap(), f5.element(3));
        assert_eq!(f5.zero().inv(), Err(GfError::ZeroInverse));
        assert_eq!(f5.one().try_add(&f7.one()), Err(GfError::FieldMismatch));
    }

    #[test]
    fn field_axioms_exhaustive() {
        for q in [2, 3, 4, 5, 7, 8, 9] {
            let fq = f(q);
            for a in 0..q {
                if a != 0 {
                    assert_eq!(fq.mul(a, fq.inv(a).unwrap()), 1, "q={q} a={a}");
                }
                assert_eq!(fq.add(a, fq.neg(a)), 0);
                for b in 0..q {
                    assert_eq!(fq.add(a, b), fq.add(b, a));
                    assert_eq!(fq.mul(a, b), fq.mul(b, a));
                    for c in 0..q {
                        assert_eq!(fq.mul(a, fq.add(b, c)), fq.add(fq.mul(a, b), fq.mul(a, c)));
                        assert_eq!(fq.mul(a, fq.mul(b, c)), fq.mul(fq.mul(a, b), c));
                    }
                }
            }
        }
    }

    #[test]
    fn untabled_extension_matches_definition() {
        // q = 2^11 is above the table limit, so arithmetic is computed on the fly.
        let fq = FieldSpec::new(2, 11, None).unwrap();
        for a in [1u32, 2, 3, 1000, 2047] {
            assert_eq!(fq.mul(a, fq.inv(a).unwrap()), 1);
            assert_eq!(fq.pow(a, 2047), 1);
        }
    }

    #[test]
    fn enumeration_order() {
        let f3: Vec<u32> = f(3).enumerate().iter().map(|e| e.packed()).collect();
        assert_eq!(f3, vec![0, 1, 2]);
        let f4: Vec<String> = f(4).enumerate().iter().map(|e| e.to_string()).collect();
        assert_eq!(f4, vec!["[0,0]", "[1,0]", "[0,1]", "[1,1]"]);
        let f9 = f(9).enumerate();
        assert_eq!(f9.len(), 9);
        assert!(f9[0].is_zero());
        assert_eq!(f9[8].coeffs(), vec![2, 2]);
        for q in [3, 4, 5, 7, 8, 9] {
            let fq = f(q);
            let sum = (0..q).fold(0, |acc, a| fq.add(acc, a));
            assert_eq!(sum, 0);
        }
    }

    #[test]
    fn squares_match_brute_force() {
        for q in [3u32, 5, 7, 9, 11, 13, 25, 27, 49] {
            let fq = f(q);
            let brute: std::collections::BTreeSet<u32> = (1..q).map(|c| fq.mul(c, c)).collect();
            let (a0, a1) = fq.residue_sets().unwrap();
            assert_eq!(a0.len() as u32, (q - 1) / 2);
            assert_eq!(a1.len() as u32, (q - 1) / 2);
            for a in 1..q {
                assert_eq!(fq.element(a).is_square().unwrap(), brute.contains(&a), "q={q} a={a}");
            }
        }
        let packed = |v: Vec<FieldElement>| v.iter().map(|e| e.packed()).collect::<Vec<_>>();
        let (a0, a1) = f(5).residue_sets().unwrap();
        assert_eq!((packed(a0), packed(a1)), (vec![1, 4], vec![2, 3]));
        let (a0, a1) = f(7).residue_sets().unwrap();
        assert_eq!((packed(a0), packed(a1)), (vec![1, 2, 4], vec![3, 5, 6]));
        let (a0, a1) = f(3).residue_sets().unwrap();
        assert_eq!((packed(a0), packed(a1)), (vec![1], vec![2]));
        assert!(f(7).element(2).is_square().unwrap());
        assert!(!f(5).element(3).is_square().unwrap());
        assert!(f(4).element(2).is_square().unwrap());
        assert_eq!(f(5).zero().is_square(), Err(GfError::ZeroResidue));
        assert_eq!(f(4).residue_sets().unwrap_err(), GfError::EvenCharacteristic(4));
    }

    #[test]
    fn element_text_round_trip() {
        let f9 = f(9);
        for a in 0..9 {
            assert_eq!(f9.parse_raw(&f9.format_raw(a)).unwrap(), a);
        }
        assert_eq!(f9.parse_raw("[1,2]").unwrap(), 1 + 2 * 3);
        assert_eq!(f9.parse_raw("2").unwrap(), 2);
        assert!(f9.parse_raw("[1,3]").is_err());
        assert!(f9.parse_raw("[1,1,1]").is_err());
        assert!(f(5).parse_raw("5").is_err());
    }

    #[test]
    fn primitive_elements() {
        for q in [2u32, 3, 4, 5, 7, 8, 9, 25] {
            let fq = f(q);
            let g = fq.primitive_element();
            let mut seen = std::collections::HashSet::new();
            let mut x = 1;
            for _ in 0..q - 1 {
                seen.insert(x);
                x = fq.mul(x, g);
            }
            assert_eq!(seen.len() as u32, q - 1);
        }
    }
}
