//! Orchestration behind the `invar` binary: runs one command for one
//! `(q, group)` and collects the checks into a serialisable [`Report`].

use std::fmt::Write as _;

use invar_core::gf::{prime_power, FieldSpec, GfError};
use invar_core::groups::{GroupName, GroupSpec};
use invar_core::invgen::{build_named, verify_invariant, InvariantError, InvariantName as N};
use invar_core::mpoly::Polynomial;
use invar_core::structure::{
    decompose, find_relation, graded_dimensions, hilbert_check, hsop_certify, predict_secondary_degree, reflection_scan,
    secondary_search, weighted_compositions, Caps, ClosedFormSeries, StructureError,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_MAX_Q: u32 = 81;
/// Polynomials with more terms are elided in reports.
const MAX_PRINTED_TERMS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Gens,
    Verify,
    Hilbert,
    Hsop,
    Decompose,
    Relation,
    Reflections,
    Search,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Gens => "gens",
            Command::Verify => "verify",
            Command::Hilbert => "hilbert",
            Command::Hsop => "hsop",
            Command::Decompose => "decompose",
            Command::Relation => "relation",
            Command::Reflections => "reflections",
            Command::Search => "search",
            Command::Report => "report",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub q: u32,
    /// Coefficients `c0, c1, ..., 1`, low degree first.
    pub modulus: Option<Vec<u32>>,
    pub group: GroupName,
    pub command: Command,
    /// Signed so that negative input can be rejected with a clear message.
    pub max_degree: Option<i64>,
    /// Required by `search`.
    pub degree: Option<i64>,
    pub max_q: u32,
    pub caps: Caps,
}

impl RunConfig {
    pub fn new(q: u32, group: GroupName, command: Command) -> Self {
        RunConfig { q, modulus: None, group, command, max_degree: None, degree: None, max_q: DEFAULT_MAX_Q, caps: Caps::default() }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Invariant(#[from] InvariantError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

impl CliError {
    /// 2 for bad input or resource caps, 1 for anything that went wrong mid-check.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) | CliError::Field(_) => 2,
            CliError::Structure(StructureError::CapExceeded { .. } | StructureError::InvalidInput(_)) => 2,
            CliError::Structure(StructureError::Group(_)) => 2,
            CliError::Invariant(InvariantError::NeedsOddCharacteristic(_) | InvariantError::OrbitCap(_)) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check: String,
    /// The mathematical statement being checked.
    pub claim: String,
    pub expected: Option<String>,
    pub observed: String,
    pub passed: bool,
    /// Per-degree tables and similar detail.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
}

impl CheckResult {
    fn new(check: impl Into<String>, claim: impl Into<String>, expected: Option<String>, observed: String, passed: bool) -> Self {
        CheckResult { check: check.into(), claim: claim.into(), expected, observed, passed, data: None }
    }

    fn info(check: impl Into<String>, claim: impl Into<String>, observed: String) -> Self {
        Self::new(check, claim, None, observed, true)
    }

    fn with_data(mut self, data: Value) -> Self {
        self.data = Some(data);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub q: u32,
    pub p: u32,
    pub s: u32,
    pub modulus: Option<Vec<u32>>,
    pub group: String,
    pub command: String,
    pub results: Vec<CheckResult>,
    pub verdict: bool,
}

impl Report {
    pub fn exit_code(&self) -> u8 {
        if self.verdict {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let field = match &self.modulus {
            Some(m) => format!("q={} (p={}, s={}, modulus {:?})", self.q, self.p, self.s, m),
            None => format!("q={}", self.q),
        };
        let _ = writeln!(out, "invar {} {} group={}", self.command, field, self.group);
        for r in &self.results {
            let mark = if r.passed { "PASS" } else { "FAIL" };
            let _ = write!(out, "[{mark}] {}: {}", r.check, r.observed);
            if let Some(e) = &r.expected {
                let _ = write!(out, " (expected {e})");
            }
            out.push('\n');
            match &r.data {
                Some(Value::Array(rows)) => render_rows(&mut out, rows),
                Some(Value::Object(map)) => {
                    for (k, v) in map {
                        let v = v.as_str().map_or_else(|| v.to_string(), str::to_string);
                        let _ = writeln!(out, "    {k}: {v}");
                    }
                }
                _ => {}
            }
        }
        let _ = writeln!(out, "verdict: {}", if self.verdict { "PASS" } else { "FAIL" });
        out
    }
}

/// Aligned columns for an array of flat objects; anything else is skipped.
fn render_rows(out: &mut String, rows: &[Value]) {
    let Some(Value::Object(first)) = rows.first() else { return };
    let keys: Vec<&String> = first.keys().collect();
    let cell = |v: &Value| match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let mut table: Vec<Vec<String>> = vec![keys.iter().map(|k| k.to_string()).collect()];
    for row in rows {
        let Value::Object(map) = row else { return };
        table.push(keys.iter().map(|k| map.get(*k).map(cell).unwrap_or_default()).collect());
    }
    let widths: Vec<usize> = (0..keys.len()).map(|i| table.iter().map(|r| r[i].chars().count()).max().unwrap_or(0)).collect();
    for row in table {
        let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(out, "    {}", line.join("  "));
    }
}

fn poly_text(p: &Polynomial) -> String {
    if p.num_terms() <= MAX_PRINTED_TERMS {
        p.to_string()
    } else {
        format!("<{} terms>", p.num_terms())
    }
}

fn degree_arg(value: Option<i64>, what: &str) -> Result<Option<u32>> {
    match value {
        None => Ok(None),
        Some(d) if d < 0 => Err(CliError::Invalid(format!("{what} must be non-negative, got {d}"))),
        Some(d) => u32::try_from(d).map(Some).map_err(|_| CliError::Invalid(format!("{what} {d} is too large"))),
    }
}

fn field_of(config: &RunConfig) -> Result<FieldSpec> {
    if config.q > config.max_q {
        return Err(CliError::Invalid(format!("q={} exceeds the limit {} (raise it with --max-q)", config.q, config.max_q)));
    }
    let (p, s) = prime_power(config.q).ok_or_else(|| CliError::Invalid(format!("q={} is not a prime power", config.q)))?;
    Ok(FieldSpec::new(p, s, config.modulus.clone())?)
}

/// Where a generator comes from.
#[derive(Clone, Copy, Debug)]
enum Source {
    Named(N),
    /// First new invariant of this degree, searched in the given group.
    Search(GroupName, u32),
}

/// Known generators: primaries (an hsop) and at most one secondary.
struct Structure {
    primaries: Vec<Source>,
    secondary: Option<Source>,
    series: ClosedFormSeries,
    /// Image order times module rank.
    degree_product: u64,
}

fn structure_of(spec: &GroupSpec) -> Option<Structure> {
    let q = spec.field().q();
    let name = spec.name();
    let series = ClosedFormSeries::for_group(name, q)?;
    let rank = if name.is_tilde() { 1 } else { 2 };
    let (primaries, secondary) = match name.base() {
        GroupName::U2 => (vec![Source::Named(N::F1), Source::Named(N::F2), Source::Named(N::F3), Source::Named(N::F4)], Source::Named(N::Zeta)),
        GroupName::SL2 => {
            let base = vec![Source::Named(N::F2), Source::Named(N::F3), Source::Named(N::G0)];
            let (fourth, secondary) = match q {
                2 => (Source::Search(GroupName::SL2Tilde, 2), Source::Search(GroupName::SL2, 4)),
                _ if q % 2 == 1 => (Source::Named(N::G1), Source::Named(N::G2)),
                _ => (Source::Named(N::K1), Source::Search(GroupName::SL2, q * q)),
            };
            ([base, vec![fourth]].concat(), secondary)
        }
        _ => return None,
    };
    Some(Structure {
        primaries,
        secondary: if name.is_tilde() { None } else { Some(secondary) },
        series,
        degree_product: spec.image_order() * rank,
    })
}

struct Ctx {
    field: FieldSpec,
    spec: GroupSpec,
    caps: Caps,
}

impl Ctx {
    fn structure(&self) -> Result<Structure> {
        structure_of(&self.spec)
            .ok_or_else(|| CliError::Invalid(format!("no known generating set for {} (only u2, u2tilde, sl2, sl2tilde)", self.spec.name())))
    }

    fn resolve(&self, src: Source, found: &[Polynomial]) -> Result<(String, Polynomial)> {
        match src {
            Source::Named(n) => Ok((n.to_string(), build_named(n, &self.field)?.poly)),
            Source::Search(group, d) => {
                let spec = GroupSpec::new(group, &self.field);
                let label = if group.is_tilde() { "k1" } else { "k2" };
                let p = secondary_search(&spec, found, d, &self.caps)?
                    .ok_or_else(|| CliError::Structure(StructureError::InvalidInput(format!("no new {group} invariant in degree {d}"))))?;
                Ok((format!("{label} (searched, degree {d})"), p))
            }
        }
    }

    /// Primaries and the optional secondary, with display labels.
    fn generators(&self, st: &Structure) -> Result<(Vec<(String, Polynomial)>, Option<(String, Polynomial)>)> {
        let mut prim: Vec<(String, Polynomial)> = Vec::new();
        for &src in &st.primaries {
            let polys: Vec<Polynomial> = prim.iter().map(|(_, p)| p.clone()).collect();
            prim.push(self.resolve(src, &polys)?);
        }
        let polys: Vec<Polynomial> = prim.iter().map(|(_, p)| p.clone()).collect();
        let sec = st.secondary.map(|s| self.resolve(s, &polys)).transpose()?;
        Ok((prim, sec))
    }
}

/// Named invariants relevant to a group, with the expected verdict where known.
fn invariance_table(group: GroupName, q: u32) -> Vec<(N, Option<bool>)> {
    let odd = q % 2 == 1;
    match group {
        GroupName::U2 => [N::F1, N::F2, N::F3, N::F4, N::Zeta, N::F0].map(|n| (n, Some(true))).to_vec(),
        GroupName::U2Tilde => vec![(N::F1, Some(true)), (N::F2, Some(true)), (N::F3, Some(true)), (N::F4, Some(true)), (N::Zeta, Some(false))],
        GroupName::SL2 | GroupName::SL2Tilde => {
            let tilde = group.is_tilde();
            let mut t = vec![(N::F2, Some(true)), (N::F3, Some(true)), (N::G0, Some(true))];
            if odd {
                t.push((N::G1, Some(true)));
                t.push((N::G2, Some(!tilde)));
                t.push((N::K1, None));
            } else {
                t.push((N::K1, Some(true)));
                t.push((N::HProd, if q >= 4 { Some(false) } else { None }));
            }
            t
        }
        GroupName::GL2 => {
            let mut t = vec![(N::F2, None), (N::F3, None), (N::G0, None), (N::K1, None)];
            if odd {
                t.push((N::G1, None));
            }
            t
        }
    }
}

fn invariance_checks(ctx: &Ctx, with_polys: bool) -> Result<Vec<CheckResult>> {
    let group = ctx.spec.name();
    let q = ctx.field.q();
    let mut out = Vec::new();
    for (name, expected) in invariance_table(group, q) {
        let inv = build_named(name, &ctx.field)?;
        let verdict = verify_invariant(&inv.poly, &ctx.spec)?;
        let observed = match &verdict.witness {
            None => "invariant".to_string(),
            Some((g, _)) => format!("moved by {g}"),
        };
        let passed = expected.map_or(true, |e| e == verdict.invariant);
        let want = |e: bool| if e { "invariant".to_string() } else { "not invariant".to_string() };
        let claim = match expected {
            Some(true) => format!("{name} is fixed by {group}"),
            Some(false) => format!("{name} is not fixed by {group}"),
            None => format!("{name} under {group} (exploratory)"),
        };
        let mut r = CheckResult::new(format!("invariance of {name}"), claim, expected.map(want), observed, passed);
        if with_polys {
            r = r.with_data(json!({
                "degree": inv.degree,
                "terms": inv.poly.num_terms(),
                "polynomial": poly_text(&inv.poly),
            }));
        }
        out.push(r);
    }
    Ok(out)
}

fn default_hilbert_degree(st: Option<&Structure>, q: u32) -> u32 {
    let base = 2 * q + 2;
    match st {
        // past the numerator term of the series, within a default budget
        Some(st) => (st.series.numerator.iter().copied().max().unwrap_or(0) + 1).max(base).min(base.max(20)),
        None => base,
    }
}

fn hilbert_checks(ctx: &Ctx, max_degree: Option<u32>) -> Result<Vec<CheckResult>> {
    let q = ctx.field.q();
    let st = structure_of(&ctx.spec);
    let d = max_degree.unwrap_or_else(|| default_hilbert_degree(st.as_ref(), q));
    match st {
        Some(st) => {
            let rep = hilbert_check(&ctx.spec, &st.series, d, &ctx.caps)?;
            let rows: Vec<Value> =
                rep.rows.iter().map(|r| json!({"d": r.degree, "computed": r.computed, "expected": r.expected, "match": r.matches()})).collect();
            let observed = match rep.first_mismatch() {
                None => format!("all degrees 0..={d} match"),
                Some(e) => format!("first mismatch at degree {e}"),
            };
            Ok(vec![CheckResult::new(
                "hilbert series",
                format!("graded dimensions of the {} invariants follow {}", ctx.spec.name(), st.series),
                Some(format!("match through degree {d}")),
                observed,
                rep.passed(),
            )
            .with_data(Value::Array(rows))])
        }
        None => {
            let dims = graded_dimensions(&ctx.spec, d, &ctx.caps)?;
            let rows: Vec<Value> = dims.dims.iter().map(|&(d, n)| json!({"d": d, "computed": n})).collect();
            Ok(vec![CheckResult::info("graded dimensions", "no closed form known; dimensions only", format!("degrees 0..={d}"))
                .with_data(Value::Array(rows))])
        }
    }
}

fn hsop_checks(ctx: &Ctx, st: &Structure, prim: &[(String, Polynomial)]) -> Result<Vec<CheckResult>> {
    let names: Vec<&str> = prim.iter().map(|(n, _)| n.as_str()).collect();
    let polys: Vec<Polynomial> = prim.iter().map(|(_, p)| p.clone()).collect();
    let rep = hsop_certify(&polys, &ctx.caps)?;
    let powers: Vec<Value> = rep
        .pure_powers
        .iter()
        .enumerate()
        .map(|(i, m)| json!({"variable": format!("x{}", i + 1), "pure_power": m.map_or("none".to_string(), |m| m.to_string())}))
        .collect();
    let dim = rep.quotient_dimension.map_or("infinite".to_string(), |d| d.to_string());
    Ok(vec![
        CheckResult::new(
            "hsop",
            format!("{{{}}} is a homogeneous system of parameters", names.join(", ")),
            Some("zero-dimensional".into()),
            format!(
                "{} (reduced basis of {} elements)",
                if rep.zero_dimensional { "zero-dimensional" } else { "not zero-dimensional" },
                rep.basis_size
            ),
            rep.zero_dimensional,
        )
        .with_data(Value::Array(powers)),
        CheckResult::new(
            "quotient dimension",
            "a regular sequence has quotient dimension equal to its degree product",
            Some(rep.degree_product().to_string()),
            dim,
            rep.quotient_matches_degree_product(),
        ),
        CheckResult::new(
            "degree-product law",
            format!("product of hsop degrees {:?} equals image order times module rank", rep.degrees),
            Some(st.degree_product.to_string()),
            rep.degree_product().to_string(),
            rep.degree_product() == st.degree_product,
        ),
    ])
}

/// `2 deg(s) + 2` while that stays small; one past the secondary otherwise.
fn default_decompose_degree(secondary_degree: Option<u32>, q: u32) -> u32 {
    match secondary_degree {
        Some(ds) if 2 * ds + 2 <= 20 => 2 * ds + 2,
        Some(ds) => ds + 1,
        None => 2 * q + 2,
    }
}

fn decompose_checks(ctx: &Ctx, prim: &[(String, Polynomial)], sec: Option<&(String, Polynomial)>, max_degree: Option<u32>) -> Result<Vec<CheckResult>> {
    let polys: Vec<Polynomial> = prim.iter().map(|(_, p)| p.clone()).collect();
    let s = sec.map(|(_, p)| p);
    let d = max_degree.unwrap_or_else(|| default_decompose_degree(s.and_then(Polynomial::homogeneous_degree), ctx.field.q()));
    let rep = decompose(&polys, s, &ctx.spec, d, &ctx.caps)?;
    let names: Vec<&str> = prim.iter().map(|(n, _)| n.as_str()).collect();
    let claim = match sec {
        Some((n, _)) => format!("invariants = F_q[{0}] + {1}*F_q[{0}], certified through degree {d} only", names.join(","), n),
        None => format!("invariants = F_q[{}], certified through degree {d} only", names.join(",")),
    };
    let rows: Vec<Value> = rep
        .rows
        .iter()
        .map(|r| json!({"d": r.degree, "invariants": r.invariant_dim, "products": r.products, "rank": r.span_rank, "spans": r.spans(), "independent": r.independent()}))
        .collect();
    let observed = match rep.first_failure() {
        None => format!("spans every degree 0..={d}; {}", if rep.free() { "products independent" } else { "products dependent" }),
        Some(e) => format!("span falls short at degree {e}"),
    };
    Ok(vec![CheckResult::new("decomposition", claim, Some("rank = invariant dimension in every degree".into()), observed, rep.verdict())
        .with_data(Value::Array(rows))])
}

fn relation_checks(ctx: &Ctx, prim: &[(String, Polynomial)], sec: &(String, Polynomial)) -> Result<Vec<CheckResult>> {
    let polys: Vec<Polynomial> = prim.iter().map(|(_, p)| p.clone()).collect();
    let rel = find_relation(&polys, &sec.1, &ctx.caps)?;
    let vars: Vec<String> = prim.iter().enumerate().map(|(i, (n, _))| format!("X{}={n}", i + 1)).collect();
    let ok = rel.residual_zero && rel.y_degree() == 2;
    Ok(vec![CheckResult::new(
        "relation",
        format!("a single relation Y^2 - B(X) Y - A(X) with Y={}, {}", sec.0, vars.join(", ")),
        Some("zero residual after substitution".into()),
        format!("weighted degree {}, {} terms, residual {}", rel.weighted_degree, rel.terms.len(), if rel.residual_zero { "zero" } else { "NONZERO" }),
        ok,
    )
    .with_data(json!({ "relation": rel.to_string() }))])
}

fn reflection_checks(ctx: &Ctx) -> Result<Vec<CheckResult>> {
    let scan = reflection_scan(&ctx.spec, &ctx.caps)?;
    let group = ctx.spec.name();
    let mut out = Vec::new();
    let expect_free = !group.is_tilde() && group != GroupName::GL2;
    let observed = format!("{} reflections among {} image elements", scan.reflections, scan.image_order);
    if group == GroupName::GL2 {
        out.push(CheckResult::info("reflections", format!("reflections in the {group} image"), observed));
    } else {
        let (expected, claim) = if expect_free {
            ("0".to_string(), format!("the {group} image is reflection-free"))
        } else {
            ("> 0".to_string(), format!("the {group} image contains alpha, a reflection"))
        };
        out.push(CheckResult::new("reflections", claim, Some(expected), observed, (scan.reflections == 0) == expect_free));
    }
    if let Some(st) = structure_of(&ctx.spec) {
        let degrees = st.series.denominators.clone();
        let prediction = predict_secondary_degree(&degrees, scan.reflections == 0);
        let observed = match prediction {
            Ok(d) => d.to_string(),
            Err(_) => "no prediction (reflections present)".to_string(),
        };
        let expected = st.series.numerator.iter().copied().max().filter(|&e| e > 0);
        let passed = match (prediction, expected) {
            (Ok(d), Some(e)) => d == e as i64,
            (Err(_), None) => true,
            _ => false,
        };
        out.push(CheckResult::new(
            "secondary degree",
            format!("sum of hsop degrees {degrees:?} minus 4 gives the secondary degree when reflection-free"),
            Some(expected.map_or("no prediction".to_string(), |e| e.to_string())),
            observed,
            passed,
        ));
    }
    Ok(out)
}

fn search_checks(ctx: &Ctx, st: &Structure, prim: &[(String, Polynomial)], d: u32) -> Result<Vec<CheckResult>> {
    let polys: Vec<Polynomial> = prim.iter().map(|(_, p)| p.clone()).collect();
    let names: Vec<&str> = prim.iter().map(|(n, _)| n.as_str()).collect();
    let found = secondary_search(&ctx.spec, &polys, d, &ctx.caps)?;
    // the series exceeds the product count exactly when something new appears
    let expected = st.series.expand(d)[d as usize] as usize > weighted_compositions(&st.series.denominators, d).len();
    let observed = match &found {
        Some(p) => format!("new invariant of degree {d} with {} terms", p.num_terms()),
        None => format!("none in degree {d}"),
    };
    let mut r = CheckResult::new(
        "secondary search",
        format!("invariants of degree {d} outside the span of products of {{{}}}", names.join(", ")),
        Some(if expected { "found".into() } else { "none".into() }),
        observed,
        found.is_some() == expected,
    );
    if let Some(p) = &found {
        r = r.with_data(json!({ "polynomial": poly_text(p) }));
    }
    Ok(vec![r])
}

fn generator_listing(prim: &[(String, Polynomial)], sec: Option<&(String, Polynomial)>) -> CheckResult {
    let rows: Vec<Value> = prim
        .iter()
        .map(|(n, p)| ("primary", n, p))
        .chain(sec.map(|(n, p)| ("secondary", n, p)))
        .map(|(role, n, p)| json!({"role": role, "name": n, "degree": p.homogeneous_degree(), "terms": p.num_terms()}))
        .collect();
    CheckResult::info("generators", "primary and secondary invariants used below", format!("{} primaries", prim.len())).with_data(Value::Array(rows))
}

/// Within `report`, a step that outgrows the caps is listed as skipped.
fn skip_over_cap(check: &str, r: Result<Vec<CheckResult>>) -> Result<Vec<CheckResult>> {
    match r {
        Err(CliError::Structure(e @ StructureError::CapExceeded { .. })) => {
            Ok(vec![CheckResult::info(check, "not run", format!("skipped: {e} (raise --cap-monomials)"))])
        }
        other => other,
    }
}

pub fn run(config: &RunConfig) -> Result<Report> {
    let field = field_of(config)?;
    let max_degree = degree_arg(config.max_degree, "--max-degree")?;
    let spec = GroupSpec::new(config.group, &field);
    let ctx = Ctx { field: field.clone(), spec, caps: config.caps };
    let results = match config.command {
        Command::Gens => invariance_checks(&ctx, true)?,
        Command::Verify => invariance_checks(&ctx, false)?,
        Command::Hilbert => hilbert_checks(&ctx, max_degree)?,
        Command::Reflections => reflection_checks(&ctx)?,
        Command::Hsop => {
            let st = ctx.structure()?;
            let (prim, _) = ctx.generators(&st)?;
            hsop_checks(&ctx, &st, &prim)?
        }
        Command::Decompose => {
            let st = ctx.structure()?;
            let (prim, sec) = ctx.generators(&st)?;
            decompose_checks(&ctx, &prim, sec.as_ref(), max_degree)?
        }
        Command::Relation => {
            let st = ctx.structure()?;
            let (prim, sec) = ctx.generators(&st)?;
            let sec = sec.ok_or_else(|| CliError::Invalid(format!("{} invariants form a polynomial ring; there is no relation", config.group)))?;
            relation_checks(&ctx, &prim, &sec)?
        }
        Command::Search => {
            let d = degree_arg(config.degree, "--degree")?.ok_or_else(|| CliError::Invalid("search needs --degree".into()))?;
            let st = ctx.structure()?;
            let (prim, _) = ctx.generators(&st)?;
            search_checks(&ctx, &st, &prim, d)?
        }
        Command::Report => {
            let mut all = invariance_checks(&ctx, false)?;
            all.extend(reflection_checks(&ctx)?);
            all.extend(hilbert_checks(&ctx, max_degree)?);
            if let Some(st) = structure_of(&ctx.spec) {
                let (prim, sec) = ctx.generators(&st)?;
                all.push(generator_listing(&prim, sec.as_ref()));
                all.extend(hsop_checks(&ctx, &st, &prim)?);
                all.extend(skip_over_cap("decomposition", decompose_checks(&ctx, &prim, sec.as_ref(), None))?);
                if let Some(sec) = &sec {
                    all.extend(skip_over_cap("relation", relation_checks(&ctx, &prim, sec))?);
                }
            }
            all
        }
    };
    let verdict = results.iter().all(|r| r.passed);
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        q: field.q(),
        p: field.p(),
        s: field.s(),
        modulus: field.modulus().map(<[u32]>::to_vec),
        group: config.group.cli_name().to_string(),
        command: config.command.name().to_string(),
        results,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let rep = run(&RunConfig::new(3, GroupName::U2, Command::Hilbert)).unwrap();
        let text = rep.to_json();
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back, rep);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn negative_degree_is_invalid() {
        let mut c = RunConfig::new(5, GroupName::U2, Command::Hilbert);
        c.max_degree = Some(-1);
        assert_eq!(run(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn invalid_fields() {
        assert_eq!(run(&RunConfig::new(6, GroupName::U2, Command::Gens)).unwrap_err().exit_code(), 2);
        assert_eq!(run(&RunConfig::new(125, GroupName::U2, Command::Gens)).unwrap_err().exit_code(), 2);
        let mut c = RunConfig::new(9, GroupName::U2, Command::Gens);
        c.modulus = Some(vec![1, 0, 1]);
        // t^2 + 1 is irreducible over F_3
        assert!(run(&c).is_ok());
        c.modulus = Some(vec![2, 0, 1]);
        assert_eq!(run(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn defaults() {
        assert_eq!(default_decompose_degree(Some(3), 3), 8);
        assert_eq!(default_decompose_degree(Some(15), 5), 16);
        let f = FieldSpec::of_order(5).unwrap();
        let st = structure_of(&GroupSpec::new(GroupName::SL2, &f)).unwrap();
        assert_eq!(default_hilbert_degree(Some(&st), 5), 16);
        assert_eq!(st.degree_product, 120);
        assert!(structure_of(&GroupSpec::new(GroupName::GL2, &f)).is_none());
    }

    #[test]
    fn table_rendering() {
        let rep = run(&RunConfig::new(3, GroupName::U2, Command::Hilbert)).unwrap();
        let table = rep.to_table();
        assert!(table.contains("[PASS] hilbert series"));
        assert!(table.lines().any(|l| l.split_whitespace().collect::<Vec<_>>() == ["5", "20", "20", "true"]));
        assert!(table.ends_with("verdict: PASS\n"));
    }
}
