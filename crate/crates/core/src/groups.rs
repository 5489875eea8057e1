//! The matrix groups, their transpose action on `M_2(F_q)` and the induced
//! substitutions on `x1..x4`.
//!
//! Coordinates of `M = [[a1, a3], [a2, a4]]` are `(a1, a2, a3, a4)`. The space
//! matrix `[g]` has row `i` equal to the coordinates of `g e_i g^t`, and the
//! dual substitution of `g` is `([g]^t)^{-1}` read column-wise: column `j` is
//! the image of `x_j`.
//!
//! With this convention `act(g, act(h, f)) = act(g * h, f)` holds for products
//! of dual matrices. On 2x2 matrices the same law reads
//! `act(g, act(h, f)) = act(h g, f)`, so [`GroupElement::compose`] multiplies
//! dual matrices rather than 2x2 matrices.

use std::collections::{HashSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::gf::FieldSpec;
use crate::linalg::MatrixFq;
use crate::mpoly::{count_of_degree, monomial_index, monomials_of_degree, LinearSubstitution, Monomial, PolyError, Polynomial, NVARS};

/// Default bound on the size of an enumerated group image.
pub const DEFAULT_GROUP_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GroupError {
    #[error("matrix is singular")]
    Singular,
    #[error("group image exceeds the cap of {cap} elements")]
    CapExceeded { cap: usize },
    #[error("unknown group {0:?}; expected one of u2, u2tilde, sl2, sl2tilde, gl2")]
    UnknownGroup(String),
    #[error("elements are over different fields")]
    FieldMismatch,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

pub type Result<T> = std::result::Result<T, GroupError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GroupName {
    U2,
    U2Tilde,
    SL2,
    SL2Tilde,
    GL2,
}

impl GroupName {
    pub const ALL: [GroupName; 5] = [GroupName::U2, GroupName::U2Tilde, GroupName::SL2, GroupName::SL2Tilde, GroupName::GL2];

    pub fn cli_name(self) -> &'static str {
        match self {
            GroupName::U2 => "u2",
            GroupName::U2Tilde => "u2tilde",
            GroupName::SL2 => "sl2",
            GroupName::SL2Tilde => "sl2tilde",
            GroupName::GL2 => "gl2",
        }
    }

    pub fn is_tilde(self) -> bool {
        matches!(self, GroupName::U2Tilde | GroupName::SL2Tilde)
    }

    /// The group without the extra involution.
    pub fn base(self) -> GroupName {
        match self {
            GroupName::U2Tilde => GroupName::U2,
            GroupName::SL2Tilde => GroupName::SL2,
            g => g,
        }
    }
}

impl fmt::Display for GroupName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupName::U2 => "U2",
            GroupName::U2Tilde => "U2~",
            GroupName::SL2 => "SL2",
            GroupName::SL2Tilde => "SL2~",
            GroupName::GL2 => "GL2",
        })
    }
}

impl FromStr for GroupName {
    type Err = GroupError;
    fn from_str(s: &str) -> Result<Self> {
        GroupName::ALL
            .into_iter()
            .find(|g| g.cli_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| GroupError::UnknownGroup(s.to_string()))
    }
}

/// A group element, given either as an invertible 2x2 matrix acting by
/// `M -> g M g^t` or directly by its dual substitution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupElement {
    label: String,
    matrix2: Option<[u32; 4]>,
    dual: LinearSubstitution,
}

impl GroupElement {
    /// `m` is row-major: `[[m0, m1], [m2, m3]]`.
    pub fn from_matrix2(field: &FieldSpec, label: impl Into<String>, m: [u32; 4]) -> Result<Self> {
        let dual = dual_action_of_matrix2(field, m)?;
        Ok(GroupElement { label: label.into(), matrix2: Some(m), dual })
    }

    pub fn from_dual(label: impl Into<String>, dual: MatrixFq) -> Result<Self> {
        if dual.inverse().is_none() {
            return Err(GroupError::Singular);
        }
        Ok(GroupElement { label: label.into(), matrix2: None, dual: LinearSubstitution::new(dual)? })
    }

    pub fn identity(field: &FieldSpec) -> Self {
        GroupElement { label: "1".into(), matrix2: Some([1, 0, 0, 1]), dual: LinearSubstitution::identity(field) }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn field(&self) -> &FieldSpec {
        self.dual.field()
    }

    pub fn matrix2(&self) -> Option<[u32; 4]> {
        self.matrix2
    }

    /// The dual substitution on `x1..x4`.
    pub fn dual(&self) -> &LinearSubstitution {
        &self.dual
    }

    /// The element whose dual matrix is `dual(self) * dual(other)`, so that
    /// `act(self.compose(other), f) = act(self, act(other, f))`.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement> {
        let dual = self.dual.compose(&other.dual).map_err(|_| GroupError::FieldMismatch)?;
        let f = self.field();
        let matrix2 = match (self.matrix2, other.matrix2) {
            (Some(a), Some(b)) => Some(mul2(f, b, a)),
            _ => None,
        };
        Ok(GroupElement { label: format!("{}*{}", self.label, other.label), matrix2, dual })
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn mul2(f: &FieldSpec, a: [u32; 4], b: [u32; 4]) -> [u32; 4] {
    let dot = |x: u32, y: u32, z: u32, w: u32| f.add(f.mul(x, y), f.mul(z, w));
    [dot(a[0], b[0], a[1], b[2]), dot(a[0], b[1], a[1], b[3]), dot(a[2], b[0], a[3], b[2]), dot(a[2], b[1], a[3], b[3])]
}

/// `delta_c = [[1, c], [0, 1]]`.
pub fn delta(field: &FieldSpec, c: u32) -> GroupElement {
    GroupElement::from_matrix2(field, format!("delta_{}", field.format_raw(c)), [1, c, 0, 1]).expect("unipotent")
}

/// `tau = [[0, 1], [-1, 0]]`.
pub fn tau(field: &FieldSpec) -> GroupElement {
    GroupElement::from_matrix2(field, "tau", [0, 1, field.neg(1), 0]).expect("det 1")
}

/// The involution fixing `x1, x4` with `x2 -> -x3`, `x3 -> -x2`.
pub fn alpha(field: &FieldSpec) -> GroupElement {
    let m1 = field.neg(1);
    let m = MatrixFq::from_rows(field, &[vec![1, 0, 0, 0], vec![0, 0, m1, 0], vec![0, m1, 0, 0], vec![0, 0, 0, 1]])
        .expect("4x4");
    GroupElement::from_dual("alpha", m).expect("involution")
}

/// Matrix of `M -> g M g^t` on `M_2(F_q)`; row `i` holds the coordinates of
/// `g e_i g^t`.
pub fn transpose_action_on_space(field: &FieldSpec, g: [u32; 4]) -> Result<MatrixFq> {
    let det = field.sub(field.mul(g[0], g[3]), field.mul(g[1], g[2]));
    if det == 0 {
        return Err(GroupError::Singular);
    }
    // (row, col) of the nonzero entry of e1..e4
    const POS: [(usize, usize); 4] = [(0, 0), (1, 0), (0, 1), (1, 1)];
    let gm = |r: usize, c: usize| g[2 * r + c];
    let mut out = MatrixFq::zeros(field, 4, 4);
    for (i, &(k, l)) in POS.iter().enumerate() {
        // (g E_kl g^t)[r][c] = g[r][k] * g[c][l]
        for (j, &(r, c)) in POS.iter().enumerate() {
            out.set(i, j, field.mul(gm(r, k), gm(c, l)));
        }
    }
    Ok(out)
}

fn dual_action_of_matrix2(field: &FieldSpec, g: [u32; 4]) -> Result<LinearSubstitution> {
    let space = transpose_action_on_space(field, g)?;
    let dual = space.transpose().inverse().ok_or(GroupError::Singular)?;
    Ok(LinearSubstitution::new(dual)?)
}

pub fn dual_action(g: &GroupElement) -> &LinearSubstitution {
    g.dual()
}

pub fn act(g: &GroupElement, f: &Polynomial) -> Result<Polynomial> {
    Ok(f.substitute(g.dual())?)
}

/// Matrix of `f -> f(sub)` on degree-`d` forms in the [`monomials_of_degree`]
/// basis; column `j` is the image of the `j`-th monomial.
pub fn induced_degree_matrix(sub: &LinearSubstitution, d: u32) -> MatrixFq {
    let f = sub.field();
    let forms: Vec<Vec<u32>> = (0..NVARS).map(|j| sub.matrix().column(j)).collect();
    // sparse images (index, coefficient) of the previous degree's monomials
    let mut prev: Vec<Vec<(u32, u32)>> = vec![vec![(0, 1)]];
    let mut prev_basis = vec![Monomial::ONE];
    for k in 1..=d {
        let basis = monomials_of_degree(k);
        let mut scratch = vec![0u32; basis.len()];
        let mut cur = Vec::with_capacity(basis.len());
        for &m in &basis {
            let v = (0..NVARS).find(|&i| m.exponent(i) > 0).expect("positive degree");
            let parent = Monomial::var(v).quotient_of(m).expect("divides");
            let form = &forms[v];
            for &(idx, c) in &prev[monomial_index(parent)] {
                let pm = prev_basis[idx as usize];
                for (w, &lw) in form.iter().enumerate() {
                    if lw != 0 {
                        let t = monomial_index(pm.mul_unchecked(Monomial::var(w)));
                        scratch[t] = f.add(scratch[t], f.mul(c, lw));
                    }
                }
            }
            let mut img = Vec::new();
            for (t, x) in scratch.iter_mut().enumerate() {
                if *x != 0 {
                    img.push((t as u32, *x));
                    *x = 0;
                }
            }
            cur.push(img);
        }
        prev = cur;
        prev_basis = basis;
    }
    let n = count_of_degree(d);
    let mut out = MatrixFq::zeros(f, n, n);
    for (j, img) in prev.iter().enumerate() {
        for &(i, c) in img {
            out.set(i as usize, j, c);
        }
    }
    out
}

/// A named group over a field together with its generators.
#[derive(Clone, Debug)]
pub struct GroupSpec {
    name: GroupName,
    field: FieldSpec,
    generators: Vec<GroupElement>,
}

impl GroupSpec {
    /// Generators: `delta_b` for `b` in an `F_p`-basis of `F_q` (U2), plus
    /// `tau` (SL2), plus `diag(w, 1)` for a primitive `w` (GL2, omitted when
    /// `q = 2`), plus `alpha` for the tilde variants.
    pub fn new(name: GroupName, field: &FieldSpec) -> Self {
        let mut generators: Vec<GroupElement> = field.prime_basis().into_iter().map(|b| delta(field, b)).collect();
        if matches!(name, GroupName::SL2 | GroupName::SL2Tilde | GroupName::GL2) {
            generators.push(tau(field));
        }
        if name == GroupName::GL2 && field.q() > 2 {
            let w = field.primitive_element();
            generators.push(
                GroupElement::from_matrix2(field, format!("diag({},1)", field.format_raw(w)), [w, 0, 0, 1])
                    .expect("invertible"),
            );
        }
        if name.is_tilde() {
            generators.push(alpha(field));
        }
        GroupSpec { name, field: field.clone(), generators }
    }

    /// A group given by arbitrary generators; its name is only a label.
    pub fn custom(name: GroupName, field: &FieldSpec, generators: Vec<GroupElement>) -> Self {
        GroupSpec { name, field: field.clone(), generators }
    }

    pub fn name(&self) -> GroupName {
        self.name
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    /// Order of the image in `GL_4(F_q)`.
    pub fn image_order(&self) -> u64 {
        let q = self.field.q() as u64;
        let odd = self.field.is_odd();
        let halve = |n: u64| if odd { n / 2 } else { n };
        match self.name {
            GroupName::U2 => q,
            GroupName::U2Tilde => 2 * q,
            GroupName::SL2 => halve(q * q * q - q),
            GroupName::SL2Tilde => 2 * halve(q * q * q - q),
            GroupName::GL2 => halve((q * q - 1) * (q * q - q)),
        }
    }
}

/// Every dual matrix of the group, identity first, by breadth-first closure
/// under right multiplication with the generators.
pub fn enumerate_image(spec: &GroupSpec, cap: usize) -> Result<Vec<MatrixFq>> {
    let id = MatrixFq::identity(&spec.field, NVARS);
    let gens: Vec<&MatrixFq> = spec.generators.iter().map(|g| g.dual().matrix()).collect();
    let mut seen: HashSet<Vec<u32>> = HashSet::from([id.data().to_vec()]);
    let mut out = vec![id.clone()];
    let mut queue = VecDeque::from([id]);
    while let Some(m) = queue.pop_front() {
        for g in &gens {
            let next = m.mul(g).map_err(|_| GroupError::FieldMismatch)?;
            if seen.insert(next.data().to_vec()) {
                if out.len() >= cap {
                    return Err(GroupError::CapExceeded { cap });
                }
                out.push(next.clone());
                queue.push_back(next);
            }
        }
    }
    Ok(out)
}

/// `m != I` and `rank(m - I) = 1`.
pub fn is_reflection(m: &MatrixFq) -> bool {
    !m.is_identity() && m.minus_identity().rank() == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fq(q: u32) -> FieldSpec {
        FieldSpec::of_order(q).unwrap()
    }

    fn x(f: &FieldSpec, i: usize) -> Polynomial {
        Polynomial::var(f, i)
    }

    #[test]
    fn delta_formulas() {
        for q in [3, 5, 7, 9] {
            let f = fq(q);
            for c in f.enumerate() {
                let c = c.packed();
                let g = delta(&f, c);
                let nc = f.neg(c);
                let expected = [
                    Polynomial::linear(&f, [1, 0, 0, 0]),
                    Polynomial::linear(&f, [nc, 1, 0, 0]),
                    Polynomial::linear(&f, [nc, 0, 1, 0]),
                    Polynomial::linear(&f, [f.mul(c, c), nc, nc, 1]),
                ];
                for (i, e) in expected.iter().enumerate() {
                    assert_eq!(&act(&g, &x(&f, i + 1)).unwrap(), e, "q={q} c={c} x{}", i + 1);
                }
            }
        }
    }

    #[test]
    fn tau_and_alpha_formulas() {
        for q in [3, 5, 7, 9] {
            let f = fq(q);
            let t = tau(&f);
            let a = alpha(&f);
            let m1 = f.neg(1);
            assert_eq!(act(&t, &x(&f, 1)).unwrap(), x(&f, 4));
            assert_eq!(act(&t, &x(&f, 4)).unwrap(), x(&f, 1));
            assert_eq!(act(&t, &x(&f, 2)).unwrap(), x(&f, 3).scale(m1));
            assert_eq!(act(&t, &x(&f, 3)).unwrap(), x(&f, 2).scale(m1));
            assert_eq!(act(&a, &x(&f, 1)).unwrap(), x(&f, 1));
            assert_eq!(act(&a, &x(&f, 4)).unwrap(), x(&f, 4));
            assert_eq!(act(&a, &x(&f, 2)).unwrap(), x(&f, 3).scale(m1));
            assert_eq!(act(&a, &x(&f, 3)).unwrap(), x(&f, 2).scale(m1));
        }
    }

    #[test]
    fn space_matrices() {
        let f = fq(3);
        let m = transpose_action_on_space(&f, [1, 1, 0, 1]).unwrap();
        let rows: Vec<Vec<u32>> = (0..4).map(|i| m.row(i).to_vec()).collect();
        assert_eq!(rows, vec![vec![1, 0, 0, 0], vec![1, 1, 0, 0], vec![1, 0, 1, 0], vec![1, 1, 1, 1]]);
        assert_eq!(m.minus_identity().rank(), 2);
        assert!(transpose_action_on_space(&f, [1, 0, 0, 1]).unwrap().is_identity());
        let t = transpose_action_on_space(&f, [0, 1, 2, 0]).unwrap();
        let expected = MatrixFq::from_rows(&f, &[vec![0, 0, 0, 1], vec![0, 0, 2, 0], vec![0, 2, 0, 0], vec![1, 0, 0, 0]]).unwrap();
        assert_eq!(t, expected);
        assert_eq!(t.transpose().inverse().unwrap(), t);
        assert_eq!(transpose_action_on_space(&f, [1, 1, 1, 1]), Err(GroupError::Singular));
        // -I acts trivially for odd q
        assert!(transpose_action_on_space(&f, [2, 0, 0, 2]).unwrap().is_identity());
    }

    #[test]
    fn induced_matrices() {
        let f = fq(5);
        let d1 = delta(&f, 1);
        assert_eq!(&induced_degree_matrix(d1.dual(), 1), d1.dual().matrix());
        assert!(induced_degree_matrix(d1.dual(), 0).is_identity());
        let d2 = d1.compose(&d1).unwrap();
        assert_eq!(d2.dual(), delta(&f, 2).dual());
        let m = induced_degree_matrix(d1.dual(), 2);
        assert_eq!(induced_degree_matrix(d2.dual(), 2), m.mul(&m).unwrap());
        // columns agree with direct substitution
        let t = tau(&f);
        let big = induced_degree_matrix(t.dual(), 4);
        for (j, mono) in monomials_of_degree(4).into_iter().enumerate() {
            let img = Polynomial::term(&f, mono, 1).substitute(t.dual()).unwrap();
            assert_eq!(big.column(j), img.coefficient_vector(4).unwrap());
        }
    }

    #[test]
    fn image_orders() {
        for q in [2, 3, 4, 5, 7, 9] {
            let f = fq(q);
            for name in [GroupName::U2, GroupName::U2Tilde, GroupName::SL2, GroupName::SL2Tilde] {
                let spec = GroupSpec::new(name, &f);
                let img = enumerate_image(&spec, DEFAULT_GROUP_CAP).unwrap();
                assert_eq!(img.len() as u64, spec.image_order(), "{name} q={q}");
            }
        }
        for q in [2, 3, 4, 5] {
            let spec = GroupSpec::new(GroupName::GL2, &fq(q));
            assert_eq!(enumerate_image(&spec, DEFAULT_GROUP_CAP).unwrap().len() as u64, spec.image_order());
        }
        let spec = GroupSpec::new(GroupName::SL2, &fq(5));
        assert_eq!(enumerate_image(&spec, 10), Err(GroupError::CapExceeded { cap: 10 }));
    }

    #[test]
    fn alpha_normalizes_u2() {
        for q in [3, 4, 5, 9] {
            let f = fq(q);
            let a = alpha(&f);
            assert!(a.compose(&a).unwrap().dual().is_identity());
            let u2: HashSet<Vec<u32>> = enumerate_image(&GroupSpec::new(GroupName::U2, &f), 100)
                .unwrap()
                .into_iter()
                .map(|m| m.data().to_vec())
                .collect();
            for c in f.enumerate() {
                let conj = a.compose(&delta(&f, c.packed())).unwrap().compose(&a).unwrap();
                assert!(u2.contains(conj.dual().matrix().data()));
            }
        }
    }

    #[test]
    fn reflections() {
        let f = fq(5);
        assert!(!is_reflection(&MatrixFq::identity(&f, 4)));
        assert!(!is_reflection(delta(&f, 3).dual().matrix()));
        let diag = MatrixFq::from_rows(&f, &[vec![1, 0, 0, 0], vec![0, 1, 0, 0], vec![0, 0, 1, 0], vec![0, 0, 0, 4]]).unwrap();
        assert!(is_reflection(&diag));
    }

    #[test]
    fn group_names() {
        for g in GroupName::ALL {
            assert_eq!(g.cli_name().parse::<GroupName>().unwrap(), g);
        }
        assert!("so3".parse::<GroupName>().is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn action_is_multiplicative(
            a in prop::array::uniform4(0u32..7),
            b in prop::array::uniform4(0u32..7),
            terms in proptest::collection::vec((prop::array::uniform4(0u32..3), 1u32..7), 1..5),
        ) {
            let f = fq(7);
            let det = |m: [u32; 4]| f.sub(f.mul(m[0], m[3]), f.mul(m[1], m[2]));
            prop_assume!(det(a) != 0 && det(b) != 0);
            let g = GroupElement::from_matrix2(&f, "g", a).unwrap();
            let h = GroupElement::from_matrix2(&f, "h", b).unwrap();
            let poly = Polynomial::from_terms(&f, terms.into_iter().map(|(e, c)| (Monomial::new(e).unwrap(), c)));
            let seq = act(&g, &act(&h, &poly).unwrap()).unwrap();
            prop_assert_eq!(&seq, &act(&g.compose(&h).unwrap(), &poly).unwrap());
            // on 2x2 matrices the product is taken in the opposite order
            let hg = GroupElement::from_matrix2(&f, "hg", mul2(&f, b, a)).unwrap();
            prop_assert_eq!(&seq, &act(&hg, &poly).unwrap());
        }
    }
}
