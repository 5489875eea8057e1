//! Graded invariant dimensions, Hilbert series, hsop certificates, module
//! decompositions, the hypersurface relation and secondary-invariant search.
//!
//! The group order is divisible by `p`, so there is no averaging operator.
//! Invariants of degree `d` are computed as the joint fixed space of the
//! generators acting on degree-`d` forms.

use std::collections::HashMap;
use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::gf::FieldSpec;
use crate::grobner::{buchberger, GrobnerError, DEFAULT_BASIS_CAP};
use crate::groups::{enumerate_image, induced_degree_matrix, is_reflection, GroupError, GroupName, GroupSpec, DEFAULT_GROUP_CAP};
use crate::linalg::{stack_rows, LinalgError, MatrixFq};
use crate::mpoly::{count_of_degree, LinearSubstitution, Monomial, PolyError, Polynomial};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("{what} of size {size} exceeds the cap of {cap}")]
    CapExceeded { what: &'static str, size: usize, cap: usize },
    #[error("products span more than the invariants in degree {0}; an input is not invariant")]
    NotInvariant(u32),
    #[error("secondary^2 is not in the span of the module basis; the decomposition is inconsistent")]
    NoSolution,
    #[error("no prediction: the group image contains reflections")]
    NoPrediction,
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Grobner(#[from] GrobnerError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

pub type Result<T> = std::result::Result<T, StructureError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    /// Largest graded component `C(d+3, 3)` handled.
    pub monomials: usize,
    pub group: usize,
    pub basis: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { monomials: 20_000, group: DEFAULT_GROUP_CAP, basis: DEFAULT_BASIS_CAP }
    }
}

impl Caps {
    fn check_degree(&self, d: u32) -> Result<usize> {
        let n = count_of_degree(d);
        if n > self.monomials {
            return Err(StructureError::CapExceeded { what: "graded component", size: n, cap: self.monomials });
        }
        Ok(n)
    }
}

/// Basis of the degree-`d` forms fixed by every substitution, as coefficient
/// vectors in rref (each starts with a pivot 1).
pub fn joint_fixed_space(field: &FieldSpec, subs: &[&LinearSubstitution], d: u32) -> Result<Vec<Vec<u32>>> {
    let n = count_of_degree(d);
    let mut basis: Option<Vec<Vec<u32>>> = None;
    for sub in subs {
        let a = induced_degree_matrix(sub, d).minus_identity();
        basis = Some(match basis {
            None => a.nullspace_basis(),
            Some(b) if b.is_empty() => b,
            Some(b) => {
                let bm = MatrixFq::from_columns(field, n, &b)?;
                let ys = a.mul(&bm)?.nullspace_basis();
                ys.iter().map(|y| bm.mul_vec(y)).collect::<std::result::Result<_, _>>()?
            }
        });
    }
    // no generators: everything is fixed
    let basis = basis.unwrap_or_else(|| {
        let id = MatrixFq::identity(field, n);
        (0..n).map(|i| id.row(i).to_vec()).collect()
    });
    if basis.is_empty() {
        return Ok(basis);
    }
    let (r, pivots) = MatrixFq::from_rows(field, &basis)?.rref();
    Ok((0..pivots.len()).map(|i| r.row(i).to_vec()).collect())
}

/// Basis of the degree-`d` invariants of the group.
pub fn invariant_basis(spec: &GroupSpec, d: u32, caps: &Caps) -> Result<Vec<Vec<u32>>> {
    caps.check_degree(d)?;
    let subs: Vec<&LinearSubstitution> = spec.generators().iter().map(|g| g.dual()).collect();
    joint_fixed_space(spec.field(), &subs, d)
}

pub fn graded_invariant_dimension(spec: &GroupSpec, d: u32, caps: &Caps) -> Result<usize> {
    Ok(invariant_basis(spec, d, caps)?.len())
}

/// The same dimension from the whole enumerated image: nullity of the
/// stacked `induced(g, d) - I` over every element.
pub fn graded_dimension_from_image(spec: &GroupSpec, d: u32, caps: &Caps) -> Result<usize> {
    let n = caps.check_degree(d)?;
    let image = enumerate_image(spec, caps.group)?;
    let field = spec.field();
    let mut acc = MatrixFq::zeros(field, 0, n);
    for chunk in image.chunks(16) {
        let mut parts = vec![acc];
        for m in chunk {
            let sub = LinearSubstitution::new(m.clone())?;
            parts.push(induced_degree_matrix(&sub, d).minus_identity());
        }
        let (r, pivots) = stack_rows(&parts)?.rref();
        let rows: Vec<Vec<u32>> = (0..pivots.len()).map(|i| r.row(i).to_vec()).collect();
        acc = if rows.is_empty() { MatrixFq::zeros(field, 0, n) } else { MatrixFq::from_rows(field, &rows)? };
    }
    Ok(n - acc.rows())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradedDims {
    pub group: GroupName,
    pub q: u32,
    /// `(d, dim)` for `d = 0..=D`.
    pub dims: Vec<(u32, usize)>,
}

/// Dimensions for every degree up to `max_degree`, computed in parallel.
pub fn graded_dimensions(spec: &GroupSpec, max_degree: u32, caps: &Caps) -> Result<GradedDims> {
    let dims = (0..=max_degree)
        .into_par_iter()
        .map(|d| graded_invariant_dimension(spec, d, caps).map(|n| (d, n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(GradedDims { group: spec.name(), q: spec.field().q(), dims })
}

/// `sum_e lambda^e / prod_i (1 - lambda^{d_i})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosedFormSeries {
    pub numerator: Vec<u32>,
    pub denominators: Vec<u32>,
}

impl ClosedFormSeries {
    pub fn new(numerator: Vec<u32>, denominators: Vec<u32>) -> Self {
        ClosedFormSeries { numerator, denominators }
    }

    /// The expected series of the named group, where one is known.
    ///
    /// U2: `(1 + l^q) / ((1-l)^2 (1-l^2) (1-l^q))`. SL2, odd `q`:
    /// `(1 + l^{q(q+1)/2}) / ((1-l)(1-l^2)(1-l^{q+1})(1-l^{q(q-1)/2}))`.
    /// SL2, even `q`: numerator term `l^{q^2}` over degrees `1, 2, q+1, q(q-1)`.
    /// The tilde groups drop the numerator term.
    pub fn for_group(name: GroupName, q: u32) -> Option<Self> {
        let (num, den) = match name.base() {
            GroupName::U2 => (q, vec![1, 1, 2, q]),
            GroupName::SL2 if q % 2 == 1 => (q * (q + 1) / 2, vec![1, 2, q + 1, q * (q - 1) / 2]),
            GroupName::SL2 => (q * q, vec![1, 2, q + 1, q * (q - 1)]),
            _ => return None,
        };
        let numerator = if name.is_tilde() { vec![0] } else { vec![0, num] };
        Some(ClosedFormSeries { numerator, denominators: den })
    }

    /// Coefficients of `lambda^0 .. lambda^D`.
    pub fn expand(&self, max_degree: u32) -> Vec<u64> {
        let len = max_degree as usize + 1;
        let mut c = vec![0u64; len];
        for &e in &self.numerator {
            if (e as usize) < len {
                c[e as usize] += 1;
            }
        }
        for &d in &self.denominators {
            let d = d as usize;
            // divide by (1 - lambda^d): prefix recurrence c[k] += c[k-d]
            for k in d..len {
                c[k] += c[k - d];
            }
        }
        c
    }
}

impl fmt::Display for ClosedFormSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num: Vec<String> = self.numerator.iter().map(|&e| if e == 0 { "1".into() } else { format!("l^{e}") }).collect();
        let den: Vec<String> = self.denominators.iter().map(|&d| if d == 1 { "(1-l)".into() } else { format!("(1-l^{d})") }).collect();
        write!(f, "({}) / ({})", num.join(" + "), den.join(""))
    }
}

pub fn expand_series(cf: &ClosedFormSeries, max_degree: u32) -> Vec<u64> {
    cf.expand(max_degree)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertRow {
    pub degree: u32,
    pub computed: usize,
    pub expected: u64,
}

impl HilbertRow {
    pub fn matches(&self) -> bool {
        self.computed as u64 == self.expected
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HilbertReport {
    pub series: ClosedFormSeries,
    pub rows: Vec<HilbertRow>,
}

impl HilbertReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(HilbertRow::matches)
    }

    pub fn first_mismatch(&self) -> Option<u32> {
        self.rows.iter().find(|r| !r.matches()).map(|r| r.degree)
    }
}

pub fn hilbert_check(spec: &GroupSpec, cf: &ClosedFormSeries, max_degree: u32, caps: &Caps) -> Result<HilbertReport> {
    let dims = graded_dimensions(spec, max_degree, caps)?;
    let expected = cf.expand(max_degree);
    let rows = dims.dims.iter().map(|&(d, n)| HilbertRow { degree: d, computed: n, expected: expected[d as usize] }).collect();
    Ok(HilbertReport { series: cf.clone(), rows })
}

fn check_homogeneous(polys: &[&Polynomial]) -> Result<Vec<u32>> {
    polys
        .iter()
        .map(|p| match p.homogeneous_degree() {
            Some(d) if d > 0 => Ok(d),
            _ => Err(StructureError::InvalidInput(format!("{p} is not a nonzero homogeneous form of positive degree"))),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HsopReport {
    pub degrees: Vec<u32>,
    pub zero_dimensional: bool,
    /// Smallest pure power of each variable among the leading monomials.
    pub pure_powers: Vec<Option<Monomial>>,
    pub basis_size: usize,
    pub quotient_dimension: Option<u64>,
}

impl HsopReport {
    pub fn degree_product(&self) -> u64 {
        self.degrees.iter().map(|&d| d as u64).product()
    }

    /// A homogeneous system of parameters is a regular sequence, so the
    /// quotient has dimension equal to the degree product.
    pub fn quotient_matches_degree_product(&self) -> bool {
        self.quotient_dimension == Some(self.degree_product())
    }
}

pub fn hsop_certify(polys: &[Polynomial], caps: &Caps) -> Result<HsopReport> {
    if polys.len() != 4 {
        return Err(StructureError::InvalidInput(format!("need 4 polynomials, got {}", polys.len())));
    }
    let degrees = check_homogeneous(&polys.iter().collect::<Vec<_>>())?;
    let gb = buchberger(polys, caps.basis)?;
    Ok(HsopReport {
        degrees,
        zero_dimensional: gb.is_zero_dimensional(),
        pure_powers: gb.pure_powers().to_vec(),
        basis_size: gb.len(),
        quotient_dimension: gb.quotient_dimension(),
    })
}

/// Exponent vectors `a` with `sum a_i * degrees_i = d`, in lexicographic
/// descending order.
pub fn weighted_compositions(degrees: &[u32], d: u32) -> Vec<Vec<u32>> {
    fn rec(degrees: &[u32], i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == degrees.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for a in (0..=left / degrees[i]).rev() {
            cur.push(a);
            rec(degrees, i + 1, left - a * degrees[i], cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(degrees, 0, d, &mut Vec::new(), &mut out);
    out
}

/// Memoised power products of a fixed list of polynomials.
pub struct ProductCache<'a> {
    field: FieldSpec,
    factors: &'a [Polynomial],
    memo: HashMap<Vec<u32>, Polynomial>,
}

impl<'a> ProductCache<'a> {
    pub fn new(field: &FieldSpec, factors: &'a [Polynomial]) -> Self {
        ProductCache { field: field.clone(), factors, memo: HashMap::new() }
    }

    pub fn get(&mut self, a: &[u32]) -> Result<Polynomial> {
        if let Some(p) = self.memo.get(a) {
            return Ok(p.clone());
        }
        // peel off the factor with the fewest terms
        let Some(i) = (0..a.len()).filter(|&i| a[i] > 0).min_by_key(|&i| (self.factors[i].num_terms(), i)) else {
            return Ok(Polynomial::one(&self.field));
        };
        let mut parent = a.to_vec();
        parent[i] -= 1;
        let p = self.get(&parent)?.checked_mul(&self.factors[i])?;
        self.memo.insert(a.to_vec(), p.clone());
        Ok(p)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionRow {
    pub degree: u32,
    pub invariant_dim: usize,
    /// Number of module-basis products of this degree.
    pub products: usize,
    pub span_rank: usize,
}

impl DecompositionRow {
    pub fn spans(&self) -> bool {
        self.span_rank == self.invariant_dim
    }

    pub fn independent(&self) -> bool {
        self.span_rank == self.products
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecompositionReport {
    pub primary_degrees: Vec<u32>,
    pub secondary_degree: Option<u32>,
    pub rows: Vec<DecompositionRow>,
}

impl DecompositionReport {
    /// The module spans the invariants in every checked degree.
    pub fn verdict(&self) -> bool {
        self.rows.iter().all(DecompositionRow::spans)
    }

    /// The spanning products are linearly independent in every degree,
    /// i.e. the module over the primaries is free on `{1, s}`.
    pub fn free(&self) -> bool {
        self.rows.iter().all(DecompositionRow::independent)
    }

    pub fn first_failure(&self) -> Option<u32> {
        self.rows.iter().find(|r| !r.spans()).map(|r| r.degree)
    }
}

fn rank_of(field: &FieldSpec, vectors: &[Vec<u32>]) -> Result<usize> {
    if vectors.is_empty() {
        return Ok(0);
    }
    Ok(MatrixFq::from_rows(field, vectors)?.rank())
}

/// Compares the span of `{products of primaries} ∪ {products · secondary}`
/// with the invariants, degree by degree through `max_degree`. A `None`
/// secondary checks whether the primaries alone generate.
pub fn decompose(
    primaries: &[Polynomial],
    secondary: Option<&Polynomial>,
    spec: &GroupSpec,
    max_degree: u32,
    caps: &Caps,
) -> Result<DecompositionReport> {
    let field = spec.field();
    let primary_degrees = check_homogeneous(&primaries.iter().collect::<Vec<_>>())?;
    let secondary_degree = match secondary {
        Some(s) => Some(check_homogeneous(&[s])?[0]),
        None => None,
    };
    for d in 0..=max_degree {
        caps.check_degree(d)?;
    }
    let dims = graded_dimensions(spec, max_degree, caps)?;
    let mut cache = ProductCache::new(field, primaries);
    let mut rows = Vec::new();
    for (d, invariant_dim) in dims.dims {
        let mut vectors = Vec::new();
        for a in weighted_compositions(&primary_degrees, d) {
            vectors.push(cache.get(&a)?.coefficient_vector(d)?);
        }
        if let (Some(s), Some(ds)) = (secondary, secondary_degree) {
            if ds <= d {
                for a in weighted_compositions(&primary_degrees, d - ds) {
                    vectors.push(cache.get(&a)?.checked_mul(s)?.coefficient_vector(d)?);
                }
            }
        }
        let span_rank = rank_of(field, &vectors)?;
        if span_rank > invariant_dim {
            return Err(StructureError::NotInvariant(d));
        }
        rows.push(DecompositionRow { degree: d, invariant_dim, products: vectors.len(), span_rank });
    }
    Ok(DecompositionReport { primary_degrees, secondary_degree, rows })
}

/// One term `coeff * X^x * Y^y` of the relation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationTerm {
    pub x: Vec<u32>,
    pub y: u32,
    pub coeff: u32,
}

/// `Q(X1..Xk, Y) = Y^2 - B(X) Y - A(X)` with `Q(primaries, secondary) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationReport {
    pub field: FieldSpec,
    pub terms: Vec<RelationTerm>,
    pub weighted_degree: u32,
    pub residual_zero: bool,
}

impl RelationReport {
    pub fn y_degree(&self) -> u32 {
        self.terms.iter().map(|t| t.y).max().unwrap_or(0)
    }

    /// Substitute concrete polynomials for `X1..Xk` and `Y`.
    pub fn evaluate(&self, primaries: &[Polynomial], secondary: &Polynomial) -> Result<Polynomial> {
        let mut acc = Polynomial::zero(&self.field);
        for t in &self.terms {
            let mut term = Polynomial::constant(&self.field, t.coeff).checked_mul(&secondary.pow(t.y)?)?;
            for (p, &e) in primaries.iter().zip(&t.x) {
                term = term.checked_mul(&p.pow(e)?)?;
            }
            acc = acc.checked_add(&term)?;
        }
        Ok(acc)
    }
}

impl fmt::Display for RelationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|t| {
                let mut factors: Vec<String> = t
                    .x
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| e > 0)
                    .map(|(i, &e)| if e == 1 { format!("X{}", i + 1) } else { format!("X{}^{e}", i + 1) })
                    .collect();
                match t.y {
                    0 => {}
                    1 => factors.push("Y".into()),
                    y => factors.push(format!("Y^{y}")),
                }
                let c = self.field.format_raw(t.coeff);
                match (t.coeff, factors.is_empty()) {
                    (_, true) => c,
                    (1, false) => factors.join("*"),
                    _ => format!("{c}*{}", factors.join("*")),
                }
            })
            .collect();
        f.write_str(&parts.join(" + "))
    }
}

/// Solves `s^2 = A + B s` in degree `2 deg(s)` and verifies the relation by
/// substitution.
pub fn find_relation(primaries: &[Polynomial], secondary: &Polynomial, caps: &Caps) -> Result<RelationReport> {
    let field = secondary.field().clone();
    let degrees = check_homogeneous(&primaries.iter().collect::<Vec<_>>())?;
    let ds = check_homogeneous(&[secondary])?[0];
    let top = 2 * ds;
    let n = caps.check_degree(top)?;
    let a_exps = weighted_compositions(&degrees, top);
    let b_exps = weighted_compositions(&degrees, ds);
    let mut cache = ProductCache::new(&field, primaries);
    let mut columns = Vec::with_capacity(a_exps.len() + b_exps.len());
    for a in &a_exps {
        columns.push(cache.get(a)?.coefficient_vector(top)?);
    }
    for b in &b_exps {
        columns.push(cache.get(b)?.checked_mul(secondary)?.coefficient_vector(top)?);
    }
    let square = secondary.checked_mul(secondary)?;
    let m = MatrixFq::from_columns(&field, n, &columns)?;
    let x = m.solve(&square.coefficient_vector(top)?)?.ok_or(StructureError::NoSolution)?;
    let k = primaries.len();
    let mut terms = vec![RelationTerm { x: vec![0; k], y: 2, coeff: 1 }];
    for (b, &c) in b_exps.iter().zip(&x[a_exps.len()..]) {
        if c != 0 {
            terms.push(RelationTerm { x: b.clone(), y: 1, coeff: field.neg(c) });
        }
    }
    for (a, &c) in a_exps.iter().zip(&x[..a_exps.len()]) {
        if c != 0 {
            terms.push(RelationTerm { x: a.clone(), y: 0, coeff: field.neg(c) });
        }
    }
    let mut report = RelationReport { field, terms, weighted_degree: top, residual_zero: false };
    report.residual_zero = report.evaluate(primaries, secondary)?.is_zero();
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReflectionReport {
    pub image_order: usize,
    pub reflections: usize,
    /// Up to the first few reflections found.
    pub witnesses: Vec<MatrixFq>,
}

pub fn reflection_scan(spec: &GroupSpec, caps: &Caps) -> Result<ReflectionReport> {
    let image = enumerate_image(spec, caps.group)?;
    let flags: Vec<bool> = image.par_iter().map(is_reflection).collect();
    let witnesses = image.iter().zip(&flags).filter(|(_, &f)| f).map(|(m, _)| m.clone()).take(8).collect();
    Ok(ReflectionReport { image_order: image.len(), reflections: flags.iter().filter(|&&f| f).count(), witnesses })
}

/// Sum of the hsop degrees minus 4; declines when the image has reflections.
pub fn predict_secondary_degree(hsop_degrees: &[u32], reflection_free: bool) -> Result<i64> {
    if !reflection_free {
        return Err(StructureError::NoPrediction);
    }
    Ok(hsop_degrees.iter().map(|&d| d as i64).sum::<i64>() - 4)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AInvariantReport {
    pub hsop_degrees: Vec<u32>,
    pub degree_sum: u32,
    pub variables: u32,
    pub reflections: usize,
    pub predicted_secondary_degree: Option<i64>,
}

pub fn a_invariant_report(spec: &GroupSpec, hsop_degrees: &[u32], caps: &Caps) -> Result<AInvariantReport> {
    let scan = reflection_scan(spec, caps)?;
    Ok(AInvariantReport {
        hsop_degrees: hsop_degrees.to_vec(),
        degree_sum: hsop_degrees.iter().sum(),
        variables: 4,
        reflections: scan.reflections,
        predicted_secondary_degree: predict_secondary_degree(hsop_degrees, scan.reflections == 0).ok(),
    })
}

/// First degree-`d` invariant outside the span of products of the primaries,
/// scanning the rref invariant basis in order; its leading coordinate is 1.
pub fn secondary_search(spec: &GroupSpec, primaries: &[Polynomial], d: u32, caps: &Caps) -> Result<Option<Polynomial>> {
    let field = spec.field();
    let degrees = check_homogeneous(&primaries.iter().collect::<Vec<_>>())?;
    let basis = invariant_basis(spec, d, caps)?;
    let mut cache = ProductCache::new(field, primaries);
    let mut span = Vec::new();
    for a in weighted_compositions(&degrees, d) {
        span.push(cache.get(&a)?.coefficient_vector(d)?);
    }
    let base_rank = rank_of(field, &span)?;
    for v in basis {
        span.push(v.clone());
        if rank_of(field, &span)? > base_rank {
            return Ok(Some(Polynomial::from_coefficient_vector(field, d, &v)));
        }
        span.pop();
    }
    Ok(None)
}

/// Product of the degrees of a polynomial invariant ring's generators.
pub fn degree_product(degrees: &[u32]) -> u64 {
    degrees.iter().map(|&d| d as u64).product()
}
