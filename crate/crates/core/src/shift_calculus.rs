//! The rule calculus for Gorenstein shift functions.
//!
//! A shift function assigns an integer (possibly expressed through the
//! symbolic quantities `coht(p)` and `g`) to each catalog prime of a graded
//! ring, piecewise by membership conditions. Rules build shift functions
//! from presentations (base, adjunction, quotient, periodicity, restriction
//! along localization, per-prime parameter counts), upgrade their scope when
//! a hypothesis certifies it, convert algebraic shifts into local-duality
//! shifts, and move them along finite ring maps in both directions. Every
//! derived function carries its rule trace, and scope is enforced: a
//! function certified on maximal ideals only refuses to answer elsewhere.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::cech_oracle::{GorensteinCertificate, GradedHilbert};
use crate::graded_rings::{
    self, elem_in_shape, enumerate_shapes, fiber_shapes, is_equicodimensional,
    is_regular_sequence, krull_dimension, maximal_shapes, restrict_shape, shape_coheight,
    shape_height, PrimeShape, PrimeSpec, RingError, RingMapDescriptor,
};
use crate::ring_dsl::{format_ring, BaseRing, GradedRingExpr, Layer, RingElem};

// ---------------------------------------------------------------------------
// Values and conditions
// ---------------------------------------------------------------------------

/// A case value: `constant + coht·coht(p) + g·(group dimension)`. The two
/// symbolic parts stay symbolic until an evaluation provides them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinValue {
    pub constant: i64,
    /// Coefficient of `coht(p)`.
    pub coht: i8,
    /// Coefficient of the symbolic group dimension `g`.
    pub g: i8,
}

impl LinValue {
    pub const fn constant(c: i64) -> Self {
        LinValue { constant: c, coht: 0, g: 0 }
    }

    pub fn shift_by(self, c: i64) -> Self {
        LinValue { constant: self.constant + c, ..self }
    }

    pub fn plus(self, o: LinValue) -> Self {
        LinValue { constant: self.constant + o.constant, coht: self.coht + o.coht, g: self.g + o.g }
    }

    pub fn minus(self, o: LinValue) -> Self {
        LinValue { constant: self.constant - o.constant, coht: self.coht - o.coht, g: self.g - o.g }
    }

    pub fn is_plain(&self) -> bool {
        self.coht == 0 && self.g == 0
    }

    /// Fold a known coheight into the constant part.
    pub fn resolve_coht(self, coht: u32) -> Self {
        LinValue {
            constant: self.constant + i64::from(self.coht) * i64::from(coht),
            coht: 0,
            g: self.g,
        }
    }

    /// Fully numeric value, given whatever symbolic inputs are needed.
    pub fn eval(self, coht: Option<u32>, g: Option<i64>) -> Result<i64, RingError> {
        let mut out = self.constant;
        if self.coht != 0 {
            let c = coht.ok_or_else(|| {
                RingError::Unsupported("the value involves coht(p), which was not supplied".to_owned())
            })?;
            out += i64::from(self.coht) * i64::from(c);
        }
        if self.g != 0 {
            let gv = g.ok_or_else(|| {
                RingError::Unsupported(
                    "the value involves the symbolic group dimension g, which was not supplied"
                        .to_owned(),
                )
            })?;
            out += i64::from(self.g) * gv;
        }
        Ok(out)
    }

    pub fn text(&self) -> String {
        let mut parts: Vec<(i64, String)> = Vec::new();
        if self.g != 0 {
            parts.push((i64::from(self.g), "g".to_owned()));
        }
        if self.coht != 0 {
            parts.push((i64::from(self.coht), "coht(p)".to_owned()));
        }
        let mut out = String::new();
        for (coef, name) in &parts {
            let mag = coef.abs();
            let piece = if mag == 1 { name.clone() } else { format!("{mag}*{name}") };
            if out.is_empty() {
                if *coef < 0 {
                    out.push('-');
                }
                out.push_str(&piece);
            } else {
                out.push_str(if *coef < 0 { " - " } else { " + " });
                out.push_str(&piece);
            }
        }
        if self.constant != 0 || out.is_empty() {
            if out.is_empty() {
                out.push_str(&self.constant.to_string());
            } else {
                out.push_str(if self.constant < 0 { " - " } else { " + " });
                out.push_str(&self.constant.abs().to_string());
            }
        }
        out
    }
}

/// A membership condition on catalog primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Cond {
    /// Every listed element lies in the prime.
    Contains(Vec<RingElem>),
    /// Fallback; always matches.
    Else,
}

impl Cond {
    pub fn text(&self) -> String {
        match self {
            Cond::Contains(es) => {
                let names: Vec<String> = es.iter().map(|e| e.text()).collect();
                format!("contains {}", names.join(", "))
            }
            Cond::Else => "else".to_owned(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    AllPrimes,
    MaximalOnly,
}

impl Scope {
    pub fn text(&self) -> &'static str {
        match self {
            Scope::AllPrimes => "all primes",
            Scope::MaximalOnly => "maximal ideals only",
        }
    }
}

// ---------------------------------------------------------------------------
// Shift functions
// ---------------------------------------------------------------------------

/// A piecewise shift function on the catalog primes of `domain`. Cases are
/// ordered; the first matching condition wins, and the final case is always
/// the `else` fallback, so the list is exhaustive and unambiguous.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftFunction {
    pub domain: GradedRingExpr,
    pub cases: Vec<(Cond, LinValue)>,
    pub scope: Scope,
    pub trace: Vec<String>,
}

impl ShiftFunction {
    pub fn constant_fn(
        domain: GradedRingExpr,
        value: LinValue,
        scope: Scope,
        rule: &str,
    ) -> ShiftFunction {
        ShiftFunction {
            domain,
            cases: vec![(Cond::Else, value)],
            scope,
            trace: vec![rule.to_owned()],
        }
    }

    pub fn is_constant(&self) -> Option<LinValue> {
        let v = self.cases.first()?.1;
        self.cases.iter().all(|(_, x)| *x == v).then_some(v)
    }

    pub fn cases_exhaustive(&self) -> bool {
        matches!(self.cases.last(), Some((Cond::Else, _)))
    }

    fn scope_check(&self, shape: &PrimeShape) -> Result<(), RingError> {
        if self.scope == Scope::MaximalOnly {
            let c = shape_coheight(&self.domain, shape)?;
            if c != 0 {
                return Err(RingError::Unsupported(format!(
                    "this shift is certified on maximal ideals only; {} has coheight {c}",
                    shape.text()
                )));
            }
        }
        Ok(())
    }

    /// The matching case value, unevaluated. Errors outside the scope.
    pub fn value_at_shape(&self, shape: &PrimeShape) -> Result<LinValue, RingError> {
        self.scope_check(shape)?;
        for (cond, v) in &self.cases {
            if cond_matches(&self.domain, shape, cond)? {
                return Ok(*v);
            }
        }
        Err(RingError::Internal("shift cases are not exhaustive".to_owned()))
    }

    /// The matching value with `coht(p)` folded in; `g` stays symbolic.
    pub fn resolved_at_shape(&self, shape: &PrimeShape) -> Result<LinValue, RingError> {
        let v = self.value_at_shape(shape)?;
        if v.coht != 0 {
            Ok(v.resolve_coht(shape_coheight(&self.domain, shape)?))
        } else {
            Ok(v)
        }
    }

    /// Fully numeric evaluation at a catalog prime.
    pub fn eval_at_prime(&self, p: &PrimeSpec, g: Option<i64>) -> Result<i64, RingError> {
        let shape = p.shape();
        let v = self.value_at_shape(&shape)?;
        let coht = if v.coht != 0 {
            Some(graded_rings::coheight(&self.domain, p)?)
        } else {
            None
        };
        v.eval(coht, g)
    }

    pub fn eval_at_shape(&self, shape: &PrimeShape, g: Option<i64>) -> Result<i64, RingError> {
        let v = self.resolved_at_shape(shape)?;
        v.eval(None, g)
    }

    pub fn text(&self) -> String {
        let cases: Vec<String> = self
            .cases
            .iter()
            .map(|(c, v)| format!("{} -> {}", c.text(), v.text()))
            .collect();
        format!("[{}] on {}", cases.join("; "), self.scope.text())
    }

    fn with_line(mut self, line: String) -> Self {
        self.trace.push(line);
        self
    }
}

fn cond_matches(
    domain: &GradedRingExpr,
    shape: &PrimeShape,
    cond: &Cond,
) -> Result<bool, RingError> {
    match cond {
        Cond::Else => Ok(true),
        Cond::Contains(es) => {
            for e in es {
                if !elem_in_shape(domain, e, shape)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// A derived local-duality (or plain) shift with its audit trail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShiftReport {
    pub ring: GradedRingExpr,
    pub shift: ShiftFunction,
    /// Whether the shift is a local-duality shift (σ) rather than an
    /// algebraic one (ν).
    pub lgd: bool,
    pub trace: Vec<String>,
}

// ---------------------------------------------------------------------------
// Structural rules
// ---------------------------------------------------------------------------

/// Regular base rings carry the constant shift 0 on all primes.
pub fn base_shift(base: &BaseRing) -> Result<ShiftFunction, RingError> {
    if !base.is_regular() {
        return Err(RingError::Unsupported(format!(
            "the base ring {} is not certified regular",
            base.text()
        )));
    }
    Ok(ShiftFunction::constant_fn(
        GradedRingExpr { base: base.clone(), layers: Vec::new() },
        LinValue::constant(0),
        Scope::AllPrimes,
        &format!("base {} is regular: shift 0 on all primes", base.text()),
    ))
}

/// The single appended layer of `extended` relative to `inner`.
fn added_layer<'a>(
    inner: &GradedRingExpr,
    extended: &'a GradedRingExpr,
) -> Result<&'a Layer, RingError> {
    let n = inner.layers.len();
    if extended.base != inner.base
        || extended.layers.len() != n + 1
        || extended.layers[..n] != inner.layers[..]
    {
        return Err(RingError::Unsupported(
            "the extended presentation must append exactly one layer to the shift's domain"
                .to_owned(),
        ));
    }
    Ok(&extended.layers[n])
}

/// Adjoining polynomial or power-series generators of even nonzero degree:
/// the shift drops by the degree sum, certified on maximal ideals.
pub fn adjoin_shift(
    nu: &ShiftFunction,
    extended: &GradedRingExpr,
) -> Result<ShiftFunction, RingError> {
    let layer = added_layer(&nu.domain, extended)?;
    let gens = match layer {
        Layer::Poly(gs) | Layer::PowerSeries(gs) => gs,
        _ => {
            return Err(RingError::Unsupported(
                "the adjunction rule expects a generator layer".to_owned(),
            ))
        }
    };
    if gens.iter().any(|g| g.laurent) {
        return Err(RingError::Unsupported(
            "invertible generators follow the periodicity rule, not adjunction".to_owned(),
        ));
    }
    for g in gens {
        if g.degree == 0 || g.degree % 2 != 0 {
            return Err(RingError::Unsupported(format!(
                "adjoined generator {} must have even nonzero degree, got {}",
                g.name, g.degree
            )));
        }
    }
    let total: i64 = gens.iter().map(|g| g.degree).sum();
    let names: Vec<&str> = gens.iter().map(|g| g.name.as_str()).collect();
    let cases = nu.cases.iter().map(|(c, v)| (c.clone(), v.shift_by(-total))).collect();
    Ok(ShiftFunction {
        domain: extended.clone(),
        cases,
        scope: Scope::MaximalOnly,
        trace: nu.trace.clone(),
    }
    .with_line(format!(
        "adjoin {} (degree sum {total}): shift decreases by {total}, certified on maximal ideals",
        names.join(", ")
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuotientDirection {
    /// From the shift of R to the shift of R/(x⃗): add the degree sum.
    Forward,
    /// From the shift of R/(x⃗) back to the shift of R: subtract it.
    Backward,
}

fn certify_regular(ring: &GradedRingExpr, elems: &[RingElem]) -> Result<(), RingError> {
    match is_regular_sequence(ring, elems) {
        Ok(true) => Ok(()),
        Ok(false) => {
            let texts: Vec<String> = elems.iter().map(|e| e.text()).collect();
            Err(RingError::NotRegular(format!(
                "the sequence [{}] is not regular",
                texts.join(", ")
            )))
        }
        Err(e) => Err(e),
    }
}

/// Quotient by a verified regular sequence moves the shift by the degree
/// sum, forward or backward.
pub fn quotient_shift(
    nu: &ShiftFunction,
    elems: &[RingElem],
    dir: QuotientDirection,
) -> Result<ShiftFunction, RingError> {
    if elems.is_empty() {
        return Ok(nu.clone());
    }
    let total: i64 = elems.iter().map(|e| e.degree).sum();
    let texts: Vec<String> = elems.iter().map(|e| e.text()).collect();
    match dir {
        QuotientDirection::Forward => {
            certify_regular(&nu.domain, elems)?;
            let mut domain = nu.domain.clone();
            domain.layers.push(Layer::Quotient(elems.to_vec()));
            // An ungraded quotient of an ungraded ring with constant shift 0
            // keeps the all-primes certificate; otherwise the rule is stated
            // on maximal ideals.
            let ungraded = domain.gens().iter().all(|(g, _)| g.degree == 0)
                && elems.iter().all(|e| e.degree == 0)
                && nu.scope == Scope::AllPrimes
                && nu.is_constant() == Some(LinValue::constant(0));
            let scope = if ungraded { Scope::AllPrimes } else { Scope::MaximalOnly };
            let cases = nu.cases.iter().map(|(c, v)| (c.clone(), v.shift_by(total))).collect();
            Ok(ShiftFunction { domain, cases, scope, trace: nu.trace.clone() }.with_line(
                format!(
                    "quotient by the regular sequence [{}] (degree sum {total}): shift increases by {total}",
                    texts.join(", ")
                ),
            ))
        }
        QuotientDirection::Backward => {
            let matches_tail = matches!(
                nu.domain.layers.last(),
                Some(Layer::Quotient(last)) if last.as_slice() == elems
            );
            if !matches_tail {
                return Err(RingError::Unsupported(
                    "the shift's domain does not end with this quotient".to_owned(),
                ));
            }
            let stripped = GradedRingExpr {
                base: nu.domain.base.clone(),
                layers: nu.domain.layers[..nu.domain.layers.len() - 1].to_vec(),
            };
            certify_regular(&stripped, elems)?;
            let cases = nu.cases.iter().map(|(c, v)| (c.clone(), v.shift_by(-total))).collect();
            Ok(ShiftFunction {
                domain: stripped,
                cases,
                scope: Scope::MaximalOnly,
                trace: nu.trace.clone(),
            }
            .with_line(format!(
                "un-quotient the regular sequence [{}]: shift decreases by {total}",
                texts.join(", ")
            )))
        }
    }
}

/// Adjoining invertible generators of even nonzero degree over a coefficient
/// ring concentrated in degree zero with constant shift 0: the result keeps
/// the constant shift 0 on all primes.
pub fn periodic_shift(
    r_nu: &ShiftFunction,
    extended: &GradedRingExpr,
) -> Result<ShiftFunction, RingError> {
    let layer = added_layer(&r_nu.domain, extended)?;
    let gens = match layer {
        Layer::Poly(gs) => gs,
        _ => {
            return Err(RingError::Unsupported(
                "the periodicity rule expects a polynomial layer of invertible generators"
                    .to_owned(),
            ))
        }
    };
    if gens.is_empty() || !gens.iter().all(|g| g.laurent) {
        return Err(RingError::Unsupported(
            "the periodicity rule applies to invertible generators only".to_owned(),
        ));
    }
    for g in gens {
        if g.degree == 0 || g.degree % 2 != 0 {
            return Err(RingError::Unsupported(format!(
                "invertible generator {} must have even nonzero degree, got {}",
                g.name, g.degree
            )));
        }
    }
    if r_nu.domain.gens().iter().any(|(g, _)| g.degree != 0) {
        return Err(RingError::Unsupported(
            "the coefficient ring under a periodicity generator must be concentrated in degree zero"
                .to_owned(),
        ));
    }
    if r_nu.scope != Scope::AllPrimes || r_nu.is_constant() != Some(LinValue::constant(0)) {
        return Err(RingError::Unsupported(
            "the coefficient ring must carry the constant shift 0 on all primes".to_owned(),
        ));
    }
    let names: Vec<&str> = gens.iter().map(|g| g.name.as_str()).collect();
    Ok(ShiftFunction {
        domain: extended.clone(),
        cases: vec![(Cond::Else, LinValue::constant(0))],
        scope: Scope::AllPrimes,
        trace: r_nu.trace.clone(),
    }
    .with_line(format!(
        "invert {} over a degree-zero coefficient ring of shift 0: constant 0 on all primes",
        names.join(", ")
    )))
}

/// Free adjunction of degree-zero generators over an ungraded ring with
/// constant shift 0 keeps the shift.
fn ungraded_extension(
    nu: &ShiftFunction,
    extended: &GradedRingExpr,
) -> Result<ShiftFunction, RingError> {
    added_layer(&nu.domain, extended)?;
    if nu.domain.gens().iter().any(|(g, _)| g.degree != 0) {
        return Err(RingError::Unsupported(
            "a degree-zero extension is only certified over a degree-zero ring".to_owned(),
        ));
    }
    if nu.scope != Scope::AllPrimes || nu.is_constant() != Some(LinValue::constant(0)) {
        return Err(RingError::Unsupported(
            "a degree-zero extension is only certified over constant shift 0".to_owned(),
        ));
    }
    Ok(ShiftFunction {
        domain: extended.clone(),
        cases: nu.cases.clone(),
        scope: Scope::AllPrimes,
        trace: nu.trace.clone(),
    }
    .with_line("free degree-zero extension: shift unchanged".to_owned()))
}

/// Restriction along inverting elements: primes of the localization are
/// primes of the ring, so an all-primes shift restricts unchanged.
pub fn localize_shift(
    nu: &ShiftFunction,
    extended: &GradedRingExpr,
) -> Result<ShiftFunction, RingError> {
    let layer = added_layer(&nu.domain, extended)?;
    let elems = match layer {
        Layer::LocalizeAway(es) => es,
        _ => {
            return Err(RingError::Unsupported(
                "the localization rule expects an inverted-elements layer".to_owned(),
            ))
        }
    };
    if nu.scope != Scope::AllPrimes {
        return Err(RingError::Unsupported(
            "restriction along a localization needs an all-primes shift".to_owned(),
        ));
    }
    let texts: Vec<String> = elems.iter().map(|e| e.text()).collect();
    Ok(ShiftFunction {
        domain: extended.clone(),
        cases: nu.cases.clone(),
        scope: Scope::AllPrimes,
        trace: nu.trace.clone(),
    }
    .with_line(format!(
        "invert [{}]: primes of the localization are primes of the ring; shift restricts",
        texts.join(", ")
    )))
}

/// Drive the structural rules over a presentation, layer by layer.
pub fn pipeline_shift(ring: &GradedRingExpr) -> Result<ShiftFunction, RingError> {
    let mut acc = base_shift(&ring.base)?;
    for layer in &ring.layers {
        let mut extended = acc.domain.clone();
        extended.layers.push(layer.clone());
        acc = match layer {
            Layer::Poly(gs) if !gs.is_empty() && gs.iter().all(|g| g.laurent) => {
                periodic_shift(&acc, &extended)?
            }
            Layer::Poly(gs) | Layer::PowerSeries(gs) => {
                if gs.iter().any(|g| g.laurent) {
                    return Err(RingError::Unsupported(
                        "mixed invertible and polynomial generators in one layer".to_owned(),
                    ));
                }
                if !gs.is_empty() && gs.iter().all(|g| g.degree == 0) {
                    ungraded_extension(&acc, &extended)?
                } else {
                    adjoin_shift(&acc, &extended)?
                }
            }
            Layer::Quotient(es) => quotient_shift(&acc, es, QuotientDirection::Forward)?,
            Layer::LocalizeAway(_) => localize_shift(&acc, &extended)?,
        };
    }
    Ok(acc)
}

// ---------------------------------------------------------------------------
// Per-prime parameter rule
// ---------------------------------------------------------------------------

/// Certify that every catalog localization of the ring is regular: no
/// relations, except registered unramified quadratic extensions in a
/// degree-zero variable over a characteristic-zero base.
fn localizations_regular(ring: &GradedRingExpr) -> Result<(), RingError> {
    for r in ring.relations() {
        let support = r.support();
        let ok = support.len() == 1
            && graded_rings::relation_is_monic_univariate(r, &support[0])
            && graded_rings::is_cyclotomic_quadratic(r, &support[0])
            && !matches!(ring.base, BaseRing::Fp(_))
            && ring.find_gen(&support[0]).map(|(g, _)| g.degree == 0) == Some(true);
        if !ok {
            return Err(RingError::NotRegular(format!(
                "cannot certify all localizations regular: relation {} is not a registered \
                 unramified extension",
                r.text()
            )));
        }
    }
    Ok(())
}

/// Shift at one catalog prime of a ring with regular localizations: minus
/// the degree sum of the regular system of parameters (base part and exotic
/// generators sit in degree zero).
pub fn rsop_shift(ring: &GradedRingExpr, p: &PrimeSpec) -> Result<i64, RingError> {
    localizations_regular(ring)?;
    let mut total = 0i64;
    for v in &p.vars {
        let (g, _) = ring
            .find_gen(v)
            .ok_or_else(|| RingError::Unknown(format!("unknown generator {v:?}")))?;
        total += g.degree;
    }
    Ok(-total)
}

/// Shape-class variant of [`rsop_shift`]: only the named generators carry
/// nonzero degrees, so the shape determines the parameter degree sum.
pub fn rsop_shift_at_shape(ring: &GradedRingExpr, s: &PrimeShape) -> Result<i64, RingError> {
    localizations_regular(ring)?;
    let mut total = 0i64;
    for v in &s.vars {
        let (g, _) = ring
            .find_gen(v)
            .ok_or_else(|| RingError::Unknown(format!("unknown generator {v:?}")))?;
        total += g.degree;
    }
    Ok(-total)
}

/// The full per-prime parameter rule as a piecewise function over the
/// catalog shapes, with a built-in cross-check of every enumerated shape.
pub fn rsop_function(ring: &GradedRingExpr) -> Result<ShiftFunction, RingError> {
    localizations_regular(ring)?;
    let shapes = enumerate_shapes(ring)?;
    if shapes.is_empty() {
        return Err(RingError::Unknown("no catalog primes to build the shift on".to_owned()));
    }
    let degree_of = |v: &String| -> i64 {
        ring.find_gen(v).map(|(g, _)| g.degree).unwrap_or(0)
    };
    let mut table: Vec<(BTreeSet<String>, i64)> = Vec::new();
    for s in &shapes {
        if !table.iter().any(|(vs, _)| *vs == s.vars) {
            let val = -s.vars.iter().map(degree_of).sum::<i64>();
            table.push((s.vars.clone(), val));
        }
    }
    table.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
    let else_val = table.iter().find(|(vs, _)| vs.is_empty()).map(|(_, v)| *v).unwrap_or(0);
    let mut cases: Vec<(Cond, LinValue)> = Vec::new();
    for (vs, val) in &table {
        if vs.is_empty() {
            continue;
        }
        let elems: Vec<RingElem> = vs
            .iter()
            .map(|v| {
                let mut e = RingElem::var(v);
                e.degree = degree_of(v);
                e
            })
            .collect();
        cases.push((Cond::Contains(elems), LinValue::constant(*val)));
    }
    cases.push((Cond::Else, LinValue::constant(else_val)));
    let mut f = ShiftFunction {
        domain: ring.clone(),
        cases,
        scope: Scope::AllPrimes,
        trace: vec![
            "regular system of parameters at each catalog prime: value is minus the degree sum \
             of the parameters"
                .to_owned(),
        ],
    };
    if let Some(v) = f.is_constant() {
        f.cases = vec![(Cond::Else, v)];
    }
    for s in &shapes {
        let want = -s.vars.iter().map(degree_of).sum::<i64>();
        let got = f.value_at_shape(s)?;
        if got != LinValue::constant(want) {
            return Err(RingError::Internal(format!(
                "parameter rule disagrees with its own case list at {}: {} vs {}",
                s.text(),
                got.text(),
                want
            )));
        }
    }
    Ok(f)
}

/// For a coconnected algebra over a field the maximal ideal is unique and
/// the shift extends to all primes with that constant value.
pub fn extend_constant(
    nu: &ShiftFunction,
    ring: &GradedRingExpr,
) -> Result<ShiftFunction, RingError> {
    if nu.domain != *ring {
        return Err(RingError::Unsupported(
            "the shift's domain must be the ring whose scope is upgraded".to_owned(),
        ));
    }
    if !ring.is_coconnected_over_field() {
        return Err(RingError::Unsupported(format!(
            "constant extension applies to coconnected algebras over a field only; {} is not one",
            format_ring(ring)
        )));
    }
    let (maximals, complete) = maximal_shapes(ring)?;
    if !complete || maximals.len() != 1 {
        return Err(RingError::Unknown(
            "could not certify a unique maximal catalog prime".to_owned(),
        ));
    }
    let v = nu.value_at_shape(&maximals[0])?.resolve_coht(0);
    Ok(ShiftFunction {
        domain: ring.clone(),
        cases: vec![(Cond::Else, v)],
        scope: Scope::AllPrimes,
        trace: nu.trace.clone(),
    }
    .with_line(format!(
        "coconnected over a field: the value {} at the unique maximal ideal extends to all primes",
        v.text()
    )))
}

// ---------------------------------------------------------------------------
// Local duality
// ---------------------------------------------------------------------------

/// Convert an algebraic shift ν into the local-duality shift
/// σ(p) = ν(p) − ht(p), written through coht(p) via the dimension formula
/// (which equicodimensionality certifies on every catalog shape). Every
/// enumerable shape in scope is re-checked against the direct height route.
pub fn lgd_shift(nu: &ShiftFunction, ring: &GradedRingExpr) -> Result<ShiftReport, RingError> {
    if nu.domain != *ring {
        return Err(RingError::Unsupported(
            "the shift's domain must be the ring whose duality shift is requested".to_owned(),
        ));
    }
    if nu.cases.iter().any(|(_, v)| v.coht != 0) {
        return Err(RingError::Unsupported(
            "the algebraic shift may not already involve coht(p)".to_owned(),
        ));
    }
    match is_equicodimensional(ring) {
        Ok(true) => {}
        Ok(false) => {
            return Err(RingError::Unsupported(
                "no uniform coheight form: the ring is not equicodimensional, so ht(p) + coht(p) \
                 is not constant"
                    .to_owned(),
            ))
        }
        Err(e) => return Err(e),
    }
    let dim = krull_dimension(ring)? as i64;
    let cases: Vec<(Cond, LinValue)> = nu
        .cases
        .iter()
        .map(|(c, v)| {
            (c.clone(), LinValue { constant: v.constant - dim, coht: 1, g: v.g })
        })
        .collect();
    let mut shift = ShiftFunction {
        domain: ring.clone(),
        cases,
        scope: nu.scope,
        trace: nu.trace.clone(),
    }
    .with_line(format!(
        "local duality: σ(p) = ν(p) - ht(p) = ν(p) - {dim} + coht(p) by the dimension formula"
    ));
    // Cross-check every enumerable shape in scope against the height route.
    let shapes = match nu.scope {
        Scope::MaximalOnly => maximal_shapes(ring)?.0,
        Scope::AllPrimes => enumerate_shapes(ring)?,
    };
    let mut unchecked = 0usize;
    for s in &shapes {
        match (shape_height(ring, s), shape_coheight(ring, s)) {
            (Ok(h), Ok(c)) => {
                let direct = nu.value_at_shape(s)?.shift_by(-(h as i64));
                let closed = shift.value_at_shape(s)?.resolve_coht(c);
                if direct != closed {
                    return Err(RingError::Internal(format!(
                        "duality shift disagrees at {}: direct {} vs closed {}",
                        s.text(),
                        direct.text(),
                        closed.text()
                    )));
                }
            }
            _ => unchecked += 1,
        }
    }
    if unchecked > 0 {
        shift = shift.with_line(format!(
            "{unchecked} shape class(es) not re-checked: heights unavailable there"
        ));
    }
    let trace = shift.trace.clone();
    Ok(ShiftReport { ring: ring.clone(), shift, lgd: true, trace })
}

/// Relative duality shifts compose along composite maps.
pub fn compose_relgor(a_g: LinValue, a_f: LinValue) -> LinValue {
    a_g.plus(a_f)
}

/// Recover one factor of a composite relative shift from the total.
pub fn solve_relgor(total: LinValue, known: LinValue) -> LinValue {
    total.minus(known)
}

// ---------------------------------------------------------------------------
// Transport along ring maps
// ---------------------------------------------------------------------------

fn elem_power(e: &RingElem, k: u32) -> Option<RingElem> {
    if e.terms.len() != 1 || k == 0 {
        return None;
    }
    let t = &e.terms[0];
    if t.coeff.abs() != 1 || t.pi_pow != 0 {
        return None;
    }
    let mut out = e.clone();
    out.terms[0].coeff = if t.coeff < 0 && k % 2 == 1 { -1 } else { 1 };
    for f in &mut out.terms[0].factors {
        f.1 *= k;
    }
    out.degree = e.degree * i64::from(k);
    Some(out)
}

/// A condition element as a single-variable power, if it is one.
fn as_var_power(e: &RingElem) -> Option<(String, u32)> {
    if e.terms.len() == 1
        && e.terms[0].coeff.abs() == 1
        && e.terms[0].pi_pow == 0
        && e.terms[0].factors.len() == 1
    {
        let (n, k) = &e.terms[0].factors[0];
        Some((n.clone(), *k))
    } else {
        None
    }
}

fn transport_cond_forward(f: &RingMapDescriptor, cond: &Cond) -> Result<Cond, RingError> {
    match cond {
        Cond::Else => Ok(Cond::Else),
        Cond::Contains(es) => {
            let mut out = Vec::new();
            for e in es {
                let (var, k) = as_var_power(e).ok_or_else(|| {
                    RingError::Unsupported(format!(
                        "condition element {} is too complex to transport",
                        e.text()
                    ))
                })?;
                let img = f.image_of(&var).ok_or_else(|| {
                    RingError::Unsupported(format!(
                        "no recorded image for generator {var:?} along {}",
                        f.name
                    ))
                })?;
                let powered = elem_power(img, k).ok_or_else(|| {
                    RingError::Unsupported(format!(
                        "image of {var:?} is not a unit monomial; cannot transport"
                    ))
                })?;
                out.push(powered);
            }
            Ok(Cond::Contains(out))
        }
    }
}

fn transport_cond_backward(f: &RingMapDescriptor, cond: &Cond) -> Result<Cond, RingError> {
    match cond {
        Cond::Else => Ok(Cond::Else),
        Cond::Contains(es) => {
            let mut out = Vec::new();
            for e in es {
                let (var, _) = as_var_power(e).ok_or_else(|| {
                    RingError::Unsupported(format!(
                        "condition element {} is too complex to transport",
                        e.text()
                    ))
                })?;
                // A source generator whose image is a power of this target
                // variable detects the condition upstairs: membership of the
                // distinguished generator is constant along fibers.
                let source = f
                    .generator_images
                    .iter()
                    .find(|(_, img)| {
                        as_var_power(img).map(|(n, k)| n == var && k >= 1) == Some(true)
                    })
                    .map(|(n, _)| n.clone())
                    .ok_or_else(|| {
                        RingError::Unsupported(format!(
                            "no source generator detects membership of {var:?} along {}",
                            f.name
                        ))
                    })?;
                let (g, _) = f.source.find_gen(&source).ok_or_else(|| {
                    RingError::Internal(format!("map {} names an unknown generator", f.name))
                })?;
                let mut elem = RingElem::var(&source);
                elem.degree = g.degree;
                out.push(elem);
            }
            Ok(Cond::Contains(out))
        }
    }
}

/// Push a local-duality shift forward along a relatively-Gorenstein map:
/// σ(q) = ν(res_f(q)) − a, with ν the source's duality shift. Every
/// enumerable target shape is re-checked against direct restriction.
pub fn ascent_shift(
    f: &RingMapDescriptor,
    a: i64,
    sigma_source: &ShiftFunction,
) -> Result<ShiftReport, RingError> {
    if f.relative_gorenstein_shift != Some(a) {
        return Err(RingError::Unsupported(format!(
            "the catalog does not record {} as relatively Gorenstein of shift {a}",
            f.name
        )));
    }
    if sigma_source.domain != f.source {
        return Err(RingError::Unsupported(
            "the shift must live on the map's source".to_owned(),
        ));
    }
    if sigma_source.cases.iter().any(|(_, v)| v.coht != 0) && !f.finite {
        return Err(RingError::Unsupported(
            "transporting a coheight-valued shift needs a finite map".to_owned(),
        ));
    }
    let mut cases = Vec::new();
    for (cond, v) in &sigma_source.cases {
        cases.push((transport_cond_forward(f, cond)?, v.shift_by(-a)));
    }
    let shift = ShiftFunction {
        domain: f.target.clone(),
        cases,
        scope: sigma_source.scope,
        trace: sigma_source.trace.clone(),
    }
    .with_line(format!(
        "ascent along {} (relative shift {a}): σ(q) = ν(restriction of q) - {a}",
        f.name
    ));
    for q in enumerate_shapes(&f.target)? {
        if shift.scope == Scope::MaximalOnly && shape_coheight(&f.target, &q)? != 0 {
            continue;
        }
        let p = restrict_shape(f, &q)?;
        let want = sigma_source.resolved_at_shape(&p)?.shift_by(-a);
        let got = shift.resolved_at_shape(&q)?;
        if want != got {
            return Err(RingError::Internal(format!(
                "ascent disagrees at {}: transported {} vs restricted {}",
                q.text(),
                got.text(),
                want.text()
            )));
        }
    }
    let trace = shift.trace.clone();
    Ok(ShiftReport { ring: f.target.clone(), shift, lgd: true, trace })
}

/// Whether a shift on the map's target takes one value on every catalog
/// fiber of the restriction, for every source prime.
pub fn check_locally_constant(
    f: &RingMapDescriptor,
    nu_s: &ShiftFunction,
) -> Result<bool, RingError> {
    if !f.finite {
        return Err(RingError::Unsupported(
            "local constancy along a map is defined for finite maps".to_owned(),
        ));
    }
    if nu_s.domain != f.target {
        return Err(RingError::Unsupported(
            "the shift must live on the map's target".to_owned(),
        ));
    }
    for p in enumerate_shapes(&f.source)? {
        let fibers = fiber_shapes(f, &p)?;
        let mut value: Option<LinValue> = None;
        for q in &fibers {
            let v = nu_s.resolved_at_shape(q)?;
            if let Some(prev) = value {
                if prev != v {
                    return Ok(false);
                }
            }
            value = Some(v);
        }
    }
    Ok(true)
}

/// Pull a local-duality shift back along a finite descendable
/// relatively-Gorenstein map: σ(p) = ν(p↓) + a for any catalog prime p↓
/// above p; the locally-constant check makes the choice immaterial.
pub fn descent_shift(
    f: &RingMapDescriptor,
    a: i64,
    nu_s: &ShiftFunction,
) -> Result<ShiftReport, RingError> {
    if f.relative_gorenstein_shift != Some(a) {
        return Err(RingError::Unsupported(format!(
            "the catalog does not record {} as relatively Gorenstein of shift {a}",
            f.name
        )));
    }
    if !f.finite {
        return Err(RingError::Unsupported("descent needs a finite map".to_owned()));
    }
    if !f.descendable {
        return Err(RingError::Unsupported(format!(
            "the catalog does not record {} as descendable",
            f.name
        )));
    }
    if nu_s.domain != f.target {
        return Err(RingError::Unsupported(
            "the shift must live on the map's target".to_owned(),
        ));
    }
    if !check_locally_constant(f, nu_s)? {
        return Err(RingError::Unsupported(
            "the shift is not constant along the catalog fibers; descent refused".to_owned(),
        ));
    }
    let mut cases = Vec::new();
    for (cond, v) in &nu_s.cases {
        cases.push((transport_cond_backward(f, cond)?, v.shift_by(a)));
    }
    let shift = ShiftFunction {
        domain: f.source.clone(),
        cases,
        scope: nu_s.scope,
        trace: nu_s.trace.clone(),
    }
    .with_line(format!(
        "descent along {} (relative shift {a}): σ(p) = ν(any prime above p) + {a}; the value is \
         constant along fibers",
        f.name
    ));
    for p in enumerate_shapes(&f.source)? {
        if shift.scope == Scope::MaximalOnly && shape_coheight(&f.source, &p)? != 0 {
            continue;
        }
        let fibers = fiber_shapes(f, &p)?;
        let Some(q) = fibers.first() else {
            return Err(RingError::Unknown(format!(
                "no catalog prime above {}; cannot certify the descent value there",
                p.text()
            )));
        };
        // Coheight is preserved along finite maps, so the coht(p) part of
        // the transported value agrees; check the resolved numbers.
        let want = nu_s.resolved_at_shape(q)?.shift_by(a);
        let got = shift.resolved_at_shape(&p)?;
        if want != got {
            return Err(RingError::Internal(format!(
                "descent disagrees at {}: transported {} vs fiber value {}",
                p.text(),
                got.text(),
                want.text()
            )));
        }
    }
    let trace = shift.trace.clone();
    Ok(ShiftReport { ring: f.source.clone(), shift, lgd: true, trace })
}

// ---------------------------------------------------------------------------
// Collapse and consistency
// ---------------------------------------------------------------------------

/// Homotopy of the local-cohomology object when the computation collapses:
/// π_n = I_{n−ν}, a pure reindexing of the injective hull's Hilbert data.
/// The caller owes the concentration certificate (see `concentrated_index`).
pub fn collapse_homotopy(nu: i64, injective_hull: &GradedHilbert) -> GradedHilbert {
    let window = (injective_hull.window.0 + nu, injective_hull.window.1 + nu);
    let mut ranks = BTreeMap::new();
    for n in window.0..=window.1 {
        ranks.insert(n, injective_hull.rank_at(n - nu).unwrap_or(0));
    }
    GradedHilbert { window, ranks }
}

/// The unique cohomological degree carrying a nonzero piece, if any;
/// refuses when the data is spread over several degrees.
pub fn concentrated_index(cohomology: &[GradedHilbert]) -> Result<Option<usize>, RingError> {
    let nonzero: Vec<usize> = cohomology
        .iter()
        .enumerate()
        .filter(|(_, h)| !h.is_zero_on_window())
        .map(|(i, _)| i)
        .collect();
    match nonzero.len() {
        0 => Ok(None),
        1 => Ok(Some(nonzero[0])),
        _ => Err(RingError::Unsupported(format!(
            "cohomology is not concentrated in one degree (nonzero in {nonzero:?}); \
             the collapse is not justified"
        ))),
    }
}

/// Homotopy read off a concentrated cohomology table: the single nonzero
/// piece in its own internal degrees.
pub fn collapse_from_cohomology(
    cohomology: &[GradedHilbert],
) -> Result<GradedHilbert, RingError> {
    match concentrated_index(cohomology)? {
        Some(j) => Ok(cohomology[j].clone()),
        None => Ok(cohomology
            .first()
            .cloned()
            .unwrap_or_else(|| GradedHilbert::new((0, 0)))),
    }
}

/// Cross-module sanity gate: with local duality in hand, a single
/// nonvanishing cohomological degree (Cohen–Macaulayness on the window) must
/// coincide with the oracle's Gorenstein verdict. Without local duality the
/// gate does not apply and holds vacuously.
pub fn cm_gorenstein_consistency(
    report: &ShiftReport,
    cohomology: &[GradedHilbert],
    cert: &GorensteinCertificate,
) -> bool {
    if !report.lgd {
        return true;
    }
    let cm = cohomology.iter().filter(|h| !h.is_zero_on_window()).count() <= 1;
    cm == cert.passed
}

// ---------------------------------------------------------------------------
