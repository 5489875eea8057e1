//! Named invariants, orbit products and invariance checks.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::gf::{FieldSpec, GfError};
use crate::groups::{act, GroupError, GroupName, GroupSpec};
use crate::mpoly::{PolyError, Polynomial};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvariantError {
    #[error("unknown invariant {0:?}")]
    UnknownName(String),
    #[error("{0} needs odd characteristic")]
    NeedsOddCharacteristic(InvariantName),
    #[error("orbit exceeds the cap of {0} polynomials")]
    OrbitCap(usize),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Field(#[from] GfError),
}

pub type Result<T> = std::result::Result<T, InvariantError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InvariantName {
    F0,
    F1,
    F2,
    F3,
    F4,
    Zeta,
    /// `h_a` with packed parameter `a`.
    H(u32),
    G0,
    G1,
    G2,
    K1,
    /// `prod h_a` over all nonzero `a`.
    HProd,
}

impl fmt::Display for InvariantName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvariantName::F0 => f.write_str("f0"),
            InvariantName::F1 => f.write_str("f1"),
            InvariantName::F2 => f.write_str("f2"),
            InvariantName::F3 => f.write_str("f3"),
            InvariantName::F4 => f.write_str("f4"),
            InvariantName::Zeta => f.write_str("zeta"),
            InvariantName::H(a) => write!(f, "h({a})"),
            InvariantName::G0 => f.write_str("g0"),
            InvariantName::G1 => f.write_str("g1"),
            InvariantName::G2 => f.write_str("g2"),
            InvariantName::K1 => f.write_str("k1"),
            InvariantName::HProd => f.write_str("hprod"),
        }
    }
}

impl FromStr for InvariantName {
    type Err = InvariantError;
    fn from_str(s: &str) -> Result<Self> {
        let name = match s {
            "f0" => InvariantName::F0,
            "f1" => InvariantName::F1,
            "f2" => InvariantName::F2,
            "f3" => InvariantName::F3,
            "f4" => InvariantName::F4,
            "zeta" => InvariantName::Zeta,
            "g0" => InvariantName::G0,
            "g1" => InvariantName::G1,
            "g2" => InvariantName::G2,
            "k1" => InvariantName::K1,
            "hprod" => InvariantName::HProd,
            _ => {
                let a = s
                    .strip_prefix("h(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|a| a.parse::<u32>().ok())
                    .ok_or_else(|| InvariantError::UnknownName(s.to_string()))?;
                InvariantName::H(a)
            }
        };
        Ok(name)
    }
}

impl InvariantName {
    /// Degree of the invariant over `F_q`.
    pub fn declared_degree(self, q: u32) -> u32 {
        match self {
            InvariantName::F1 | InvariantName::F2 => 1,
            InvariantName::F3 => 2,
            InvariantName::F4 | InvariantName::Zeta | InvariantName::F0 | InvariantName::H(_) => q,
            InvariantName::G0 => q + 1,
            InvariantName::G1 => q * (q - 1) / 2,
            InvariantName::G2 => q * (q + 1) / 2,
            InvariantName::K1 | InvariantName::HProd => q * (q - 1),
        }
    }

    /// The largest of the named groups the invariant is built for.
    pub fn constructing_group(self) -> GroupName {
        match self {
            InvariantName::F1 | InvariantName::F4 => GroupName::U2Tilde,
            InvariantName::F2 | InvariantName::F3 | InvariantName::G0 | InvariantName::G1 => GroupName::SL2Tilde,
            InvariantName::Zeta | InvariantName::F0 | InvariantName::H(_) => GroupName::U2,
            InvariantName::K1 => GroupName::SL2Tilde,
            InvariantName::G2 | InvariantName::HProd => GroupName::SL2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedInvariant {
    pub name: InvariantName,
    pub poly: Polynomial,
    pub degree: u32,
    pub group: GroupName,
}

/// Distinct images of `f` under the group, in breadth-first order from `f`.
pub fn orbit(f: &Polynomial, spec: &GroupSpec, cap: usize) -> Result<Vec<Polynomial>> {
    let mut seen: HashSet<Polynomial> = HashSet::from([f.clone()]);
    let mut out = vec![f.clone()];
    let mut queue = VecDeque::from([f.clone()]);
    while let Some(p) = queue.pop_front() {
        for g in spec.generators() {
            let img = act(g, &p)?;
            if seen.insert(img.clone()) {
                if out.len() >= cap {
                    return Err(InvariantError::OrbitCap(cap));
                }
                out.push(img.clone());
                queue.push_back(img);
            }
        }
    }
    Ok(out)
}

pub fn orbit_product(f: &Polynomial, spec: &GroupSpec, cap: usize) -> Result<Polynomial> {
    product(f.field(), &orbit(f, spec, cap)?)
}

fn product(field: &FieldSpec, factors: &[Polynomial]) -> Result<Polynomial> {
    let mut acc = Polynomial::one(field);
    for p in factors {
        acc = acc.checked_mul(p)?;
    }
    Ok(acc)
}

/// `x4 - c x3 - c x2 + (c^2 - a) x1`.
pub fn ell(field: &FieldSpec, a: u32, c: u32) -> Polynomial {
    let nc = field.neg(c);
    Polynomial::linear(field, [field.sub(field.mul(c, c), a), nc, nc, 1])
}

/// `h_a`, the product of `ell(a, c)` over all `c`.
pub fn h(field: &FieldSpec, a: u32) -> Result<Polynomial> {
    let factors: Vec<Polynomial> = field.enumerate().iter().map(|c| ell(field, a, c.packed())).collect();
    product(field, &factors)
}

pub fn build_named(name: InvariantName, field: &FieldSpec) -> Result<NamedInvariant> {
    let f = field;
    let q = f.q();
    let x = |i| Polynomial::var(f, i);
    let linear_product = |form: &dyn Fn(u32) -> [u32; 4]| {
        let factors: Vec<Polynomial> = f.enumerate().iter().map(|c| Polynomial::linear(f, form(c.packed()))).collect();
        product(f, &factors)
    };
    let poly = match name {
        InvariantName::F1 => x(1),
        InvariantName::F2 => &x(2) - &x(3),
        InvariantName::F3 => &(&x(1) * &x(4)) - &(&x(2) * &x(3)),
        InvariantName::F4 => h(f, 0)?,
        InvariantName::H(a) => {
            if a >= q {
                return Err(GfError::Parse { text: a.to_string(), reason: "not a field element".into() }.into());
            }
            h(f, a)?
        }
        InvariantName::Zeta => linear_product(&|c| [f.neg(c), 0, 1, 0])?,
        InvariantName::F0 => linear_product(&|c| [f.neg(f.add(c, c)), 1, 1, 0])?,
        InvariantName::G0 => {
            let a = &x(1).pow(q)? * &x(4);
            let b = &x(1) * &x(4).pow(q)?;
            let c = &x(2).pow(q)? * &x(3);
            let d = &x(2) * &x(3).pow(q)?;
            &(&a + &b) - &(&c + &d)
        }
        InvariantName::G1 | InvariantName::G2 => {
            if !f.is_odd() {
                return Err(InvariantError::NeedsOddCharacteristic(name));
            }
            let (a0, a1) = f.residue_sets()?;
            let (set, start) = if name == InvariantName::G1 {
                (a1, Polynomial::one(f))
            } else {
                (a0, build_named(InvariantName::F0, f)?.poly)
            };
            let mut acc = start;
            for a in set {
                acc = acc.checked_mul(&h(f, a.packed())?)?;
            }
            acc
        }
        InvariantName::K1 if !f.is_odd() => even_line_orbit_product(f)?,
        InvariantName::K1 | InvariantName::HProd => {
            let mut acc = Polynomial::one(f);
            for a in 1..q {
                acc = acc.checked_mul(&h(f, a)?)?;
            }
            acc
        }
    };
    let degree = name.declared_degree(q);
    debug_assert_eq!(poly.homogeneous_degree(), Some(degree));
    Ok(NamedInvariant { name, poly, degree, group: name.constructing_group() })
}

/// Absolute trace `F_q -> F_2` for even `q`.
fn trace2(field: &FieldSpec, r: u32) -> u32 {
    let mut acc = 0;
    let mut x = r;
    for _ in 0..field.s() {
        acc = field.add(acc, x);
        x = field.mul(x, x);
    }
    acc
}

/// Even `q`: product of the linear forms `u1 x1 + u2 x2 + (u2 + 1) x3 + u4 x4`
/// with `u1 u4 + u2 (u2 + 1) = r`, for the smallest `r` of trace 1.
///
/// These `q(q-1)` lines form one projective orbit of `SL2`, stable under
/// `alpha`. The forms `x4 + a x1` lie in an orbit of size `q^2 - 1`, so
/// `prod h_a` is not invariant in characteristic 2.
pub fn even_line_orbit_product(field: &FieldSpec) -> Result<Polynomial> {
    let f = field;
    let r = (1..f.q()).find(|&r| trace2(f, r) == 1).expect("trace is onto");
    let mut acc = Polynomial::one(f);
    for u2 in 0..f.q() {
        let u3 = f.add(u2, 1);
        let s = f.add(r, f.mul(u2, u3));
        for u4 in 1..f.q() {
            let u1 = f.mul(s, f.inv(u4).expect("nonzero"));
            acc = acc.checked_mul(&Polynomial::linear(f, [u1, u2, u3, u4]))?;
        }
    }
    Ok(acc)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvarianceVerdict {
    pub invariant: bool,
    /// First generator that moves the polynomial, with `act(g, f) - f`.
    pub witness: Option<(String, Polynomial)>,
}

/// Checks `act(g, f) = f` for every generator.
pub fn verify_invariant(f: &Polynomial, spec: &GroupSpec) -> Result<InvarianceVerdict> {
    for g in spec.generators() {
        let diff = act(g, f)?.checked_sub(f)?;
        if !diff.is_zero() {
            return Ok(InvarianceVerdict { invariant: false, witness: Some((g.label().to_string(), diff)) });
        }
    }
    Ok(InvarianceVerdict { invariant: true, witness: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{enumerate_image, DEFAULT_GROUP_CAP};
    use crate::mpoly::LinearSubstitution;

    fn fq(q: u32) -> FieldSpec {
        FieldSpec::of_order(q).unwrap()
    }

    fn p(f: &FieldSpec, s: &str) -> Polynomial {
        Polynomial::parse(f, s).unwrap()
    }

    fn built(name: InvariantName, f: &FieldSpec) -> Polynomial {
        build_named(name, f).unwrap().poly
    }

    #[test]
    fn orbits() {
        let f = fq(3);
        let u2 = GroupSpec::new(GroupName::U2, &f);
        let o: HashSet<Polynomial> = orbit(&p(&f, "x3"), &u2, 100).unwrap().into_iter().collect();
        let expected: HashSet<Polynomial> = ["x3", "x3 - x1", "x3 - 2*x1"].iter().map(|s| p(&f, s)).collect();
        assert_eq!(o, expected);
        assert_eq!(orbit(&built(InvariantName::F3, &f), &u2, 100).unwrap().len(), 1);
        let f5 = fq(5);
        assert_eq!(orbit(&p(&f5, "x4"), &GroupSpec::new(GroupName::U2, &f5), 100).unwrap().len(), 5);
        assert_eq!(orbit(&p(&f5, "x4"), &GroupSpec::new(GroupName::SL2, &f5), 3), Err(InvariantError::OrbitCap(3)));
    }

    #[test]
    fn orbit_products_match_closed_forms() {
        for q in [3, 5] {
            let f = fq(q);
            let u2 = GroupSpec::new(GroupName::U2, &f);
            let zeta = p(&f, &format!("x3^{q} - x1^{}*x3", q - 1));
            assert_eq!(orbit_product(&p(&f, "x3"), &u2, 100).unwrap(), zeta);
            assert_eq!(built(InvariantName::Zeta, &f), zeta);
            let s = p(&f, "x2 + x3");
            let f0 = &s.pow(q).unwrap() - &(&s * &p(&f, &format!("x1^{}", q - 1)));
            assert_eq!(orbit_product(&s, &u2, 100).unwrap(), f0);
            assert_eq!(built(InvariantName::F0, &f), f0);
            let f3 = built(InvariantName::F3, &f);
            assert_eq!(orbit_product(&f3, &u2, 100).unwrap(), f3);
            assert_eq!(orbit_product(&p(&f, "x4"), &u2, 100).unwrap(), built(InvariantName::F4, &f));
        }
    }

    #[test]
    fn named_examples() {
        let f5 = fq(5);
        assert_eq!(built(InvariantName::H(0), &f5), built(InvariantName::F4, &f5));
        let g1 = build_named(InvariantName::G1, &f5).unwrap();
        assert_eq!(g1.poly, &h(&f5, 2).unwrap() * &h(&f5, 3).unwrap());
        assert_eq!(g1.degree, 10);
        assert_eq!(build_named(InvariantName::G2, &fq(7)).unwrap().poly.homogeneous_degree(), Some(28));
        assert_eq!(
            build_named(InvariantName::G1, &fq(4)),
            Err(InvariantError::NeedsOddCharacteristic(InvariantName::G1))
        );
        // g0 over F_3 has four terms
        let g0 = built(InvariantName::G0, &fq(3));
        assert_eq!(g0.num_terms(), 4);
        assert_eq!(g0.coefficient_vector(4).unwrap().iter().filter(|&&c| c != 0).count(), 4);
        for s in ["f0", "f1", "zeta", "h(3)", "k1"] {
            assert_eq!(s.parse::<InvariantName>().unwrap().to_string(), s);
        }
        assert!("h(x)".parse::<InvariantName>().is_err());
    }

    #[test]
    fn degrees_match_table() {
        for q in [3, 4, 5, 7, 8, 9] {
            let f = fq(q);
            let mut names = vec![InvariantName::F0, InvariantName::F1, InvariantName::F2, InvariantName::F3, InvariantName::F4];
            names.extend([InvariantName::Zeta, InvariantName::H(1), InvariantName::G0]);
            if f.is_odd() {
                names.extend([InvariantName::G1, InvariantName::G2]);
            }
            if q <= 8 {
                names.push(InvariantName::K1);
            }
            for name in names {
                let inv = build_named(name, &f).unwrap();
                assert_eq!(inv.poly.homogeneous_degree(), Some(name.declared_degree(q)), "{name} q={q}");
            }
        }
    }

    #[test]
    fn invariance_under_constructing_group() {
        for q in [3, 5, 7, 9] {
            let f = fq(q);
            let mut names = vec![InvariantName::F1, InvariantName::F2, InvariantName::F3, InvariantName::F4];
            names.extend([InvariantName::Zeta, InvariantName::F0, InvariantName::H(1), InvariantName::G0]);
            if q != 3 {
                names.extend([InvariantName::G1, InvariantName::G2]);
            }
            for name in names {
                let inv = build_named(name, &f).unwrap();
                let spec = GroupSpec::new(inv.group, &f);
                assert!(verify_invariant(&inv.poly, &spec).unwrap().invariant, "{name} under {} q={q}", inv.group);
            }
        }
        for q in [2, 4, 8] {
            let f = fq(q);
            for group in [GroupName::SL2, GroupName::SL2Tilde] {
                let spec = GroupSpec::new(group, &f);
                for name in [InvariantName::F2, InvariantName::F3, InvariantName::G0, InvariantName::K1] {
                    assert!(verify_invariant(&built(name, &f), &spec).unwrap().invariant, "{name} under {group} q={q}");
                }
            }
        }
    }

    #[test]
    fn non_invariance_witnesses() {
        let f = fq(3);
        let v = verify_invariant(&built(InvariantName::Zeta, &f), &GroupSpec::new(GroupName::U2Tilde, &f)).unwrap();
        assert!(!v.invariant);
        assert_eq!(v.witness.unwrap().0, "alpha");
        assert!(verify_invariant(&Polynomial::one(&f), &GroupSpec::new(GroupName::GL2, &f)).unwrap().invariant);
        let f5 = fq(5);
        let v = verify_invariant(&built(InvariantName::G2, &f5), &GroupSpec::new(GroupName::SL2Tilde, &f5)).unwrap();
        assert_eq!(v.witness.map(|w| w.0), Some("alpha".to_string()));
    }

    #[test]
    fn h_product_moves_in_even_characteristic() {
        for q in [4, 8] {
            let f = fq(q);
            let v = verify_invariant(&built(InvariantName::HProd, &f), &GroupSpec::new(GroupName::SL2, &f)).unwrap();
            assert_eq!(v.witness.map(|w| w.0), Some("tau".to_string()));
        }
    }

    #[test]
    fn g1_g2_k1_identity() {
        for q in [5, 7] {
            let f = fq(q);
            let lhs = &built(InvariantName::G1, &f) * &built(InvariantName::G2, &f);
            let rhs = &built(InvariantName::F0, &f) * &built(InvariantName::HProd, &f);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn orbit_products_fixed_by_whole_image() {
        let f = fq(5);
        let spec = GroupSpec::new(GroupName::U2, &f);
        let prod = orbit_product(&p(&f, "x4 + 2*x1"), &spec, 100).unwrap();
        for m in enumerate_image(&spec, DEFAULT_GROUP_CAP).unwrap() {
            let sub = LinearSubstitution::new(m).unwrap();
            assert_eq!(prod.substitute(&sub).unwrap(), prod);
        }
        // products of q distinct linear forms
        for name in [InvariantName::F4, InvariantName::Zeta, InvariantName::F0, InvariantName::H(2)] {
            let inv = built(name, &f);
            let seed = match name {
                InvariantName::F4 => p(&f, "x4"),
                InvariantName::Zeta => p(&f, "x3"),
                InvariantName::F0 => p(&f, "x2 + x3"),
                _ => p(&f, "x4 - 2*x1"),
            };
            let o = orbit(&seed, &spec, 100).unwrap();
            assert_eq!(o.len(), 5);
            assert_eq!(product(&f, &o).unwrap(), inv);
        }
    }
}
