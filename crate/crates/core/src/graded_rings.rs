//! Structural calculus on graded ring presentations: dimension of the
//! homogeneous spectrum, heights and coheights of catalog primes,
//! equicodimensionality, prime restriction along finite maps, and regular
//! sequences.
//!
//! The engine works over a *prime catalog*: homogeneous primes generated by
//! (i) a prime of the base ring, (ii) a subset of the adjoined generators,
//! and (iii) finitely many registered exotic polynomial generators (the
//! `pi*T - 1` pattern over a one-dimensional local base, and `x - c` roots
//! over a field base). Full primary decomposition is out of scope; every
//! question the catalog cannot certify is answered with an explicit error,
//! never a guess.
//!
//! Heights are computed twice where possible: by brute-force chain
//! enumeration in the catalog poset and by counting a regular system of
//! parameters. A disagreement is reported as an internal error, since it
//! can only mean a catalog bug.

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cech_oracle;
use crate::ring_dsl::{BaseRing, Generator, GradedRingExpr, Layer, LayerKind, RingElem, Term};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RingError {
    /// The prime or shape is outside the supported catalog.
    OutsideCatalog(String),
    /// The structural rules cannot certify a dimension-like value.
    Unknown(String),
    /// A quotient sequence was not verified regular.
    NotRegular(String),
    /// A map cannot restrict the given prime.
    Unsupported(String),
    /// Cross-check mismatch: two independent routes disagreed. A catalog bug.
    Internal(String),
}

impl core::fmt::Display for RingError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            RingError::OutsideCatalog(m) => write!(f, "outside the prime catalog: {m}"),
            RingError::Unknown(m) => write!(f, "unknown: {m}"),
            RingError::NotRegular(m) => write!(f, "not a verified regular sequence: {m}"),
            RingError::Unsupported(m) => write!(f, "unsupported: {m}"),
            RingError::Internal(m) => write!(f, "internal cross-check failure: {m}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Primes: concrete specs and shape classes
// ---------------------------------------------------------------------------

/// Base-ring part of a prime: the zero ideal or a maximal ideal of the base,
/// cited by the token that generates it ("5", "p", "pi").
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum BasePart {
    Zero,
    Max(String),
}

/// A registered exotic prime generator.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExoticGen {
    /// `pi*T - 1` over a one-dimensional local base: inverts the uniformizer,
    /// so the quotient is the fraction field. Registered facts: prime,
    /// maximal, one parameter.
    UniformizerRecip { var: String },
    /// `x - c` for a degree-zero generator over a field base.
    VarMinusConst { var: String, c: i64 },
}

impl ExoticGen {
    pub fn to_elem(&self) -> RingElem {
        match self {
            ExoticGen::UniformizerRecip { var } => RingElem {
                terms: vec![
                    Term { coeff: 1, pi_pow: 1, factors: vec![(var.clone(), 1)] },
                    Term { coeff: -1, pi_pow: 0, factors: vec![] },
                ],
                degree: 0,
            },
            ExoticGen::VarMinusConst { var, c } => RingElem {
                terms: vec![
                    Term { coeff: 1, pi_pow: 0, factors: vec![(var.clone(), 1)] },
                    Term { coeff: -c, pi_pow: 0, factors: vec![] },
                ],
                degree: 0,
            },
        }
    }

    fn classify(elem: &RingElem) -> Option<ExoticGen> {
        if elem.terms.len() != 2 {
            return None;
        }
        let (a, b) = (&elem.terms[0], &elem.terms[1]);
        let (varterm, consterm) = if a.factors.len() == 1 && b.factors.is_empty() {
            (a, b)
        } else if b.factors.len() == 1 && a.factors.is_empty() {
            (b, a)
        } else {
            return None;
        };
        let (name, exp) = &varterm.factors[0];
        if *exp != 1 {
            return None;
        }
        // pi * T - 1 up to global sign.
        if varterm.pi_pow == 1
            && consterm.pi_pow == 0
            && varterm.coeff == -consterm.coeff
            && varterm.coeff.abs() == 1
        {
            return Some(ExoticGen::UniformizerRecip { var: name.clone() });
        }
        // x - c up to global sign.
        if varterm.pi_pow == 0 && consterm.pi_pow == 0 && varterm.coeff.abs() == 1 {
            let c = -consterm.coeff * varterm.coeff;
            if c != 0 {
                return Some(ExoticGen::VarMinusConst { var: name.clone(), c });
            }
        }
        None
    }
}

/// A shape class of catalog primes. `base: Max(None)` denotes a generic
/// nonzero prime of the base (meaningful for base `Z`: "some prime number q
/// avoiding the localized constants"); `Max(Some(tok))` a named one.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PrimeShape {
    pub base: ShapeBase,
    pub vars: BTreeSet<String>,
    pub exotics: Vec<ExoticGen>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum ShapeBase {
    Zero,
    Max(Option<String>),
}

impl PrimeShape {
    pub fn zero() -> Self {
        PrimeShape { base: ShapeBase::Zero, vars: BTreeSet::new(), exotics: Vec::new() }
    }

    pub fn contains_var(&self, name: &str) -> bool {
        self.vars.contains(name)
    }

    pub fn is_zero_ideal(&self) -> bool {
        self.base == ShapeBase::Zero && self.vars.is_empty() && self.exotics.is_empty()
    }

    pub fn text(&self) -> String {
        let mut gens: Vec<String> = Vec::new();
        match &self.base {
            ShapeBase::Zero => {}
            ShapeBase::Max(Some(t)) => gens.push(t.clone()),
            ShapeBase::Max(None) => gens.push("q".to_owned()),
        }
        gens.extend(self.vars.iter().cloned());
        gens.extend(self.exotics.iter().map(|e| e.to_elem().text()));
        if gens.is_empty() {
            "(0)".to_owned()
        } else {
            format!("({})", gens.join(", "))
        }
    }
}

/// A concrete catalog prime of a ring, with cached invariants. Built by
/// [`PrimeSpec::build`], which validates the shape against the catalog and
/// fills the caches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeSpec {
    pub base_part: BasePart,
    /// Non-Laurent generator names, in declaration order.
    pub vars: Vec<String>,
    pub exotics: Vec<RingElem>,
    pub cached_height: Option<u32>,
    pub cached_coheight: Option<u32>,
    pub is_maximal: Option<bool>,
}

impl PrimeSpec {
    /// Validate a candidate prime against the catalog and cache its height,
    /// coheight, and maximality.
    pub fn build(
        ring: &GradedRingExpr,
        base_part: BasePart,
        vars: Vec<String>,
        exotics: Vec<RingElem>,
    ) -> Result<PrimeSpec, RingError> {
        // Base part.
        if let BasePart::Max(name) = &base_part {
            validate_base_token(ring, name)?;
        }
        // Variables exist, are not invertible, sorted by declaration order.
        let declared: Vec<String> = ring.gens().iter().map(|(g, _)| g.name.clone()).collect();
        let mut vars = vars;
        for v in &vars {
            let (g, _) = ring
                .find_gen(v)
                .ok_or_else(|| RingError::OutsideCatalog(format!("unknown generator {v:?}")))?;
            if g.laurent {
                return Err(RingError::OutsideCatalog(format!(
                    "generator {v:?} is invertible and lies in no prime"
                )));
            }
        }
        vars.sort_by_key(|v| declared.iter().position(|d| d == v));
        vars.dedup();

        // Exotic generators must match a registered pattern.
        let mut exotic_gens = Vec::new();
        for e in &exotics {
            let g = ExoticGen::classify(e).ok_or_else(|| {
                RingError::OutsideCatalog(format!(
                    "polynomial generator {:?} matches no registered prime pattern",
                    e.text()
                ))
            })?;
            exotic_gens.push(g);
        }

        let shape = PrimeShape {
            base: match &base_part {
                BasePart::Zero => ShapeBase::Zero,
                BasePart::Max(n) => ShapeBase::Max(Some(n.clone())),
            },
            vars: vars.iter().cloned().collect(),
            exotics: {
                let mut e = exotic_gens.clone();
                e.sort();
                e
            },
        };
        validate_shape(ring, &shape)?;

        let ht = shape_height(ring, &shape)?;
        let coht = shape_coheight(ring, &shape)?;
        let dim = krull_dimension(ring)?;
        if ht > dim || coht > dim || ht + coht > dim {
            return Err(RingError::Internal(format!(
                "invariant violation for {}: ht {ht}, coht {coht}, dim {dim}",
                shape.text()
            )));
        }
        Ok(PrimeSpec {
            base_part,
            vars,
            exotics,
            cached_height: Some(ht),
            cached_coheight: Some(coht),
            is_maximal: Some(coht == 0),
        })
    }

    pub fn shape(&self) -> PrimeShape {
        let mut exotics: Vec<ExoticGen> =
            self.exotics.iter().filter_map(ExoticGen::classify).collect();
        exotics.sort();
        PrimeShape {
            base: match &self.base_part {
                BasePart::Zero => ShapeBase::Zero,
                BasePart::Max(n) => ShapeBase::Max(Some(n.clone())),
            },
            vars: self.vars.iter().cloned().collect(),
            exotics,
        }
    }
}

fn validate_base_token(ring: &GradedRingExpr, name: &str) -> Result<(), RingError> {
    match &ring.base {
        BaseRing::Q | BaseRing::Fp(_) => Err(RingError::OutsideCatalog(
            "the base is a field and has no nonzero prime".to_owned(),
        )),
        BaseRing::Z => {
            // A concrete prime number or a symbolic name.
            if let Ok(n) = name.parse::<u64>() {
                if !crate::ring_dsl::is_prime_u64(n) {
                    return Err(RingError::OutsideCatalog(format!("{n} is not a prime number")));
                }
                // Must not be inverted by a localized constant.
                for e in ring.loc_elems() {
                    if let Some(c) = constant_value(e) {
                        if c.unsigned_abs() % n == 0 {
                            return Err(RingError::OutsideCatalog(format!(
                                "the prime {n} is inverted in this ring"
                            )));
                        }
                    }
                }
                Ok(())
            } else if ring.find_gen(name).is_some() {
                Err(RingError::OutsideCatalog(format!(
                    "{name:?} names a generator, not a prime of the base"
                )))
            } else {
                Ok(())
            }
        }
        base => {
            let tok = base.uniformizer_token().expect("local non-field base");
            if name == tok || name == "pi" {
                Ok(())
            } else {
                Err(RingError::OutsideCatalog(format!(
                    "{name:?} does not generate the maximal ideal of the base (expected {tok:?})"
                )))
            }
        }
    }
}

/// The integer value of a constant element, if it is one.
fn constant_value(e: &RingElem) -> Option<i64> {
    if e.terms.len() == 1 && e.terms[0].is_constant() {
        Some(e.terms[0].coeff)
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// Membership by substitution
// ---------------------------------------------------------------------------

/// Residue modulus for integer constants modulo the base part of a shape.
fn shape_modulus(ring: &GradedRingExpr, base: &ShapeBase) -> Option<u64> {
    match base {
        ShapeBase::Zero => None,
        ShapeBase::Max(name) => match name {
            Some(tok) => {
                if let Ok(n) = tok.parse::<u64>() {
                    Some(n)
                } else {
                    // "pi" or a symbolic prime: concrete only when the base
                    // fixes the residue characteristic.
                    ring.base.residue_char()
                }
            }
            None => match &ring.base {
                // Generic prime of Z: no nonzero integer is generically zero.
                BaseRing::Z => None,
                base => base.residue_char(),
            },
        },
    }
}

/// Reduce an element by the generators of a shape: shape variables map to 0,
/// `x - c` substitutes `x := c`, `pi*T - 1` substitutes `T := pi^(-1)`.
/// Returns, per surviving monomial in the remaining generators, a Laurent
/// polynomial in the uniformizer.
fn reduce_by_shape(
    elem: &RingElem,
    shape: &PrimeShape,
) -> BTreeMap<Vec<(String, u32)>, BTreeMap<i64, i128>> {
    let mut parts: BTreeMap<Vec<(String, u32)>, BTreeMap<i64, i128>> = BTreeMap::new();
    'terms: for t in &elem.terms {
        let mut coeff: i128 = t.coeff as i128;
        let mut pi_exp: i64 = t.pi_pow as i64;
        let mut rest: Vec<(String, u32)> = Vec::new();
        for (name, exp) in &t.factors {
            if shape.vars.contains(name) {
                continue 'terms; // the term dies
            }
            let mut substituted = false;
            for ex in &shape.exotics {
                match ex {
                    ExoticGen::VarMinusConst { var, c } if var == name => {
                        coeff *= (*c as i128).pow(*exp);
                        substituted = true;
                        break;
                    }
                    ExoticGen::UniformizerRecip { var } if var == name => {
                        pi_exp -= *exp as i64;
                        substituted = true;
                        break;
                    }
                    _ => {}
                }
            }
            if !substituted {
                rest.push((name.clone(), *exp));
            }
        }
        *parts.entry(rest).or_default().entry(pi_exp).or_insert(0) += coeff;
    }
    parts.retain(|_, pis| {
        pis.retain(|_, c| *c != 0);
        !pis.is_empty()
    });
    parts
}

/// Whether a constant-with-pi-powers part vanishes modulo the base part.
fn part_is_zero(ring: &GradedRingExpr, base: &ShapeBase, pis: &BTreeMap<i64, i128>) -> bool {
    let is_max = matches!(base, ShapeBase::Max(_));
    if is_max {
        // The uniformizer lies in the ideal; only pi^0 coefficients survive.
        let surviving: Vec<i128> =
            pis.iter().filter(|(e, _)| **e == 0).map(|(_, c)| *c).collect();
        debug_assert!(pis.keys().all(|e| *e >= 0), "uniformizer inverse under a maximal base part");
        match shape_modulus(ring, base) {
            Some(p) => surviving.iter().all(|c| c.rem_euclid(p as i128) == 0),
            None => surviving.iter().all(|c| *c == 0),
        }
    } else {
        match &ring.base {
            // pi is literally the residue characteristic inside the base.
            BaseRing::ZLoc(crate::ring_dsl::BasePrimeName::Concrete(_)) | BaseRing::Witt(_) => {
                let p = ring.base.residue_char().expect("concrete local base");
                let min = pis.keys().copied().min().unwrap_or(0).min(0);
                let mut sum: i128 = 0;
                for (e, c) in pis {
                    sum += c * (p as i128).pow((e - min) as u32);
                }
                sum == 0
            }
            BaseRing::Fp(p) => pis.iter().all(|(e, c)| {
                debug_assert!(*e == 0);
                c.rem_euclid(*p as i128) == 0
            }),
            // Z, Q, symbolic Z_(p), abstract DVR: pi powers are formally
            // independent and nonzero integers are nonzero.
            _ => pis.values().all(|c| *c == 0),
        }
    }
}

/// Decide whether `elem` lies in the prime named by `shape`, working modulo
/// the ring's quotient relations. Conservative: a question the catalog rules
/// cannot settle returns an explicit error.
pub fn elem_in_shape(
    ring: &GradedRingExpr,
    elem: &RingElem,
    shape: &PrimeShape,
) -> Result<bool, RingError> {
    let mut parts = reduce_by_shape(elem, shape);
    parts.retain(|_, pis| !part_is_zero(ring, &shape.base, pis));
    if parts.is_empty() {
        return Ok(true);
    }
    // Survivors: reduce further by relations that are monomial modulo the
    // shape, then decide by support disjointness.
    let mut monomial_rules: Vec<Vec<(String, u32)>> = Vec::new();
    let mut surviving_relations: Vec<BTreeMap<Vec<(String, u32)>, BTreeMap<i64, i128>>> = Vec::new();
    for r in ring.relations() {
        let mut red = reduce_by_shape(r, shape);
        red.retain(|_, pis| !part_is_zero(ring, &shape.base, pis));
        if red.is_empty() {
            continue;
        }
        if red.len() == 1 {
            let (mono, pis) = red.iter().next().unwrap();
            let unit_coeff = pis.len() == 1
                && pis.keys().all(|e| *e == 0)
                && pis.values().all(|c| coeff_is_unit(ring, &shape.base, *c));
            if unit_coeff && !mono.is_empty() {
                monomial_rules.push(mono.clone());
                continue;
            }
        }
        surviving_relations.push(red);
    }
    // Kill parts divisible by a monomial relation.
    parts.retain(|mono, _| {
        !monomial_rules.iter().any(|rule| monomial_divides(rule, mono))
    });
    if parts.is_empty() {
        return Ok(true);
    }
    // Remaining monomials involve only generators untouched by any surviving
    // relation: they stay independent in the quotient.
    let elem_support: BTreeSet<&String> =
        parts.keys().flat_map(|m| m.iter().map(|(n, _)| n)).collect();
    let rel_support: BTreeSet<&String> = surviving_relations
        .iter()
        .flat_map(|r| r.keys().flat_map(|m| m.iter().map(|(n, _)| n)))
        .collect();
    if elem_support.is_disjoint(&rel_support)
        && surviving_relations.iter().all(|r| relation_is_monic_certified(r))
    {
        return Ok(false);
    }
    if surviving_relations.is_empty() {
        return Ok(false);
    }
    Err(RingError::Unknown(format!(
        "cannot decide membership of {:?} in {} modulo the quotient relations",
        elem.text(),
        shape.text()
    )))
}

fn coeff_is_unit(ring: &GradedRingExpr, base: &ShapeBase, c: i128) -> bool {
    match shape_modulus(ring, base) {
        Some(p) => c.rem_euclid(p as i128) != 0 && {
            // Over a residue field every nonzero class is a unit.
            matches!(base, ShapeBase::Max(_)) || c.abs() == 1
        },
        None => {
            if matches!(base, ShapeBase::Max(_)) {
                // Symbolic residue field: nonzero integers are generically units.
                c != 0
            } else if ring.base.is_field() {
                c != 0
            } else {
                c.abs() == 1
            }
        }
    }
}

fn monomial_divides(rule: &[(String, u32)], mono: &[(String, u32)]) -> bool {
    rule.iter().all(|(n, e)| {
        mono.iter().any(|(m, f)| m == n && f >= e)
    })
}

/// A surviving relation adds an honest parameter only when it is monic in a
/// generator that appears in none of the others; the catalog certifies
/// exactly the "monic in a fresh variable over a domain" pattern.
fn relation_is_monic_certified(
    red: &BTreeMap<Vec<(String, u32)>, BTreeMap<i64, i128>>,
) -> bool {
    // Find the variable of highest power; require the relation univariate
    // with a leading coefficient ±1 and no pi content.
    let mut var: Option<&String> = None;
    for mono in red.keys() {
        for (n, _) in mono {
            match var {
                None => var = Some(n),
                Some(v) if v == n => {}
                _ => return false,
            }
        }
    }
    let Some(_) = var else { return false };
    if red.values().any(|pis| pis.keys().any(|e| *e != 0)) {
        return false;
    }
    let lead = red.keys().map(|m| m.first().map(|(_, e)| *e).unwrap_or(0)).max().unwrap_or(0);
    if lead == 0 {
        return false;
    }
    red.iter()
        .filter(|(m, _)| m.first().map(|(_, e)| *e) == Some(lead))
        .all(|(_, pis)| pis.values().all(|c| c.abs() == 1))
}

// ---------------------------------------------------------------------------
// Registered facts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegisteredFacts {
    pub dim: u32,
    pub equicodimensional: bool,
    /// Provenance note rendered in reports: the value is recorded from the
    /// coefficient-ring catalog, not derived structurally.
    pub note: &'static str,
}

/// Localized arithmetic surfaces whose dimension and equicodimensionality
/// are recorded facts: the elliptic-curve level rings with inverted
/// discriminant factors. Matching is structural, not by name.
pub fn registered_assertions(ring: &GradedRingExpr) -> Option<RegisteredFacts> {
    let note = "dimension and equicodimensionality recorded from the \
                coefficient-ring catalog for localized arithmetic surfaces";
    // Pattern A: Z, constants inverted, one degree-0 polynomial generator s
    // with s and s - c localized away, Laurent generators of nonzero even
    // degree, no quotient relations.
    let pattern_a = |ring: &GradedRingExpr| -> bool {
        if ring.base != BaseRing::Z || !ring.relations().is_empty() {
            return false;
        }
        let gens = ring.gens();
        let plain: Vec<&&Generator> =
            gens.iter().map(|(g, _)| g).filter(|g| !g.laurent).collect();
        let laurent: Vec<&&Generator> =
            gens.iter().map(|(g, _)| g).filter(|g| g.laurent).collect();
        if plain.len() != 1 || plain[0].degree != 0 || laurent.is_empty() {
            return false;
        }
        let s = &plain[0].name;
        let mut saw_const = false;
        let mut saw_s = false;
        for e in ring.loc_elems() {
            if constant_value(e).map(|c| c.abs() >= 2) == Some(true) {
                saw_const = true;
            } else if e.support() == vec![s.clone()] {
                if *e == RingElem::var(s) {
                    saw_s = true;
                } else if !matches!(ExoticGen::classify(e), Some(ExoticGen::VarMinusConst { .. })) {
                    return false;
                }
            } else {
                return false;
            }
        }
        saw_const && saw_s
    };
    // Pattern B: Z, a constant inverted, a degree-0 generator zeta with a
    // monic quadratic relation, a degree-0 generator t with t and binomials
    // const ± monomial(zeta, t) localized away, Laurent generators of
    // nonzero even degree.
    let pattern_b = |ring: &GradedRingExpr| -> bool {
        if ring.base != BaseRing::Z {
            return false;
        }
        let gens = ring.gens();
        let plain: Vec<&&Generator> =
            gens.iter().map(|(g, _)| g).filter(|g| !g.laurent).collect();
        let laurent: Vec<&&Generator> =
            gens.iter().map(|(g, _)| g).filter(|g| g.laurent).collect();
        if plain.len() != 2 || plain.iter().any(|g| g.degree != 0) || laurent.is_empty() {
            return false;
        }
        let rels = ring.relations();
        if rels.len() != 1 {
            return false;
        }
        let zeta = match rels[0].support().as_slice() {
            [z] => z.clone(),
            _ => return false,
        };
        if !relation_is_monic_univariate(rels[0], &zeta) {
            return false;
        }
        let t = plain.iter().find(|g| g.name != zeta).map(|g| g.name.clone());
        let Some(t) = t else { return false };
        let mut saw_const = false;
        let mut saw_t = false;
        for e in ring.loc_elems() {
            if constant_value(e).map(|c| c.abs() >= 2) == Some(true) {
                saw_const = true;
            } else if *e == RingElem::var(&t) {
                saw_t = true;
            } else if e.terms.len() == 2
                && e.terms.iter().any(|x| x.is_constant() && x.coeff.abs() == 1)
                && e.terms.iter().any(|x| !x.factors.is_empty() && x.coeff.abs() == 1)
            {
                // const ± monomial: cuts out a closed locus away from which
                // we localize.
            } else {
                return false;
            }
        }
        saw_const && saw_t
    };
    if pattern_a(ring) || pattern_b(ring) {
        return Some(RegisteredFacts { dim: 2, equicodimensional: true, note });
    }
    // A trailing layer of fresh nonzero-even-degree generators over a
    // registered ring: a free extension adds its generator count to the
    // dimension and preserves equicodimensionality (maximal ideals of the
    // extension are maximal ideals below plus all the new generators).
    if let Some(Layer::Poly(gs) | Layer::PowerSeries(gs)) = ring.layers.last() {
        let fresh = !gs.is_empty()
            && gs.iter().all(|g| !g.laurent && g.degree != 0 && g.degree % 2 == 0)
            && ring
                .relations()
                .iter()
                .chain(ring.loc_elems().iter())
                .all(|e| gs.iter().all(|g| !e.support().contains(&g.name)));
        if fresh {
            let inner = GradedRingExpr {
                base: ring.base.clone(),
                layers: ring.layers[..ring.layers.len() - 1].to_vec(),
            };
            if let Some(f) = registered_assertions(&inner) {
                return Some(RegisteredFacts {
                    dim: f.dim + gs.len() as u32,
                    equicodimensional: f.equicodimensional,
                    note: f.note,
                });
            }
        }
    }
    None
}

pub(crate) fn relation_is_monic_univariate(rel: &RingElem, var: &str) -> bool {
    let mut lead_exp = 0;
    for t in &rel.terms {
        if t.pi_pow != 0 {
            return false;
        }
        match t.factors.as_slice() {
            [] => {}
            [(n, e)] if n == var => lead_exp = lead_exp.max(*e),
            _ => return false,
        }
    }
    lead_exp >= 1
        && rel
            .terms
            .iter()
            .filter(|t| t.factors.first().map(|(_, e)| *e) == Some(lead_exp))
            .all(|t| t.coeff.abs() == 1)
}

/// A field-base ring `k[x]/(x^2 - 1)` in degree zero: its primes are the two
/// registered roots `x - 1`, `x + 1`.
pub fn registered_two_point(ring: &GradedRingExpr) -> Option<(String, Vec<i64>)> {
    if !ring.base.is_field() || !ring.loc_elems().is_empty() {
        return None;
    }
    let gens = ring.gens();
    if gens.len() != 1 || gens[0].0.laurent || gens[0].0.degree != 0 {
        return None;
    }
    let x = gens[0].0.name.clone();
    let rels = ring.relations();
    if rels.len() != 1 || rels[0].terms.len() != 2 {
        return None;
    }
    let square = rels[0]
        .terms
        .iter()
        .find(|t| t.factors.as_slice() == [(x.clone(), 2)] && t.coeff == 1 && t.pi_pow == 0);
    let constant = rels[0].terms.iter().find(|t| t.is_constant() && t.coeff == -1);
    if square.is_some() && constant.is_some() {
        Some((x, vec![1, -1]))
    } else {
        None
    }
}

/// Structural domain certificate: no relations, or every relation is a
/// registered monic irreducible over a characteristic-zero base part.
fn domain_certified(ring: &GradedRingExpr) -> bool {
    if registered_two_point(ring).is_some() {
        return false;
    }
    ring.relations().iter().all(|r| {
        // Monic univariate quadratic of the cyclotomic pattern z^2 + z + 1
        // over a characteristic-zero base: registered irreducible.
        let support = r.support();
        support.len() == 1
            && relation_is_monic_univariate(r, &support[0])
            && is_cyclotomic_quadratic(r, &support[0])
            && !matches!(ring.base, BaseRing::Fp(_))
    })
}

pub(crate) fn is_cyclotomic_quadratic(rel: &RingElem, var: &str) -> bool {
    let mut want: BTreeMap<u32, i64> = BTreeMap::new();
    for t in &rel.terms {
        let e = match t.factors.as_slice() {
            [] => 0,
            [(n, e)] if n == var => *e,
            _ => return false,
        };
        *want.entry(e).or_insert(0) += t.coeff;
    }
    let sign = *want.get(&2).unwrap_or(&0);
    sign.abs() == 1
        && want.get(&1).copied().unwrap_or(0) == sign
        && want.get(&0).copied().unwrap_or(0) == sign
}

// ---------------------------------------------------------------------------
// Shape validity and enumeration
// ---------------------------------------------------------------------------

/// Check that a shape names a prime of the ring within the catalog rules.
pub fn validate_shape(ring: &GradedRingExpr, shape: &PrimeShape) -> Result<(), RingError> {
    // Base part sanity.
    if matches!(shape.base, ShapeBase::Max(_)) && ring.base.is_field() {
        return Err(RingError::OutsideCatalog(
            "the base is a field and has no nonzero prime".to_owned(),
        ));
    }
    // Exotic structural constraints.
    let mut seen_exotic_vars: BTreeSet<&String> = BTreeSet::new();
    for ex in &shape.exotics {
        match ex {
            ExoticGen::UniformizerRecip { var } => {
                if !matches!(ring.base, BaseRing::ZLoc(_) | BaseRing::Witt(_) | BaseRing::Dvr) {
                    return Err(RingError::OutsideCatalog(
                        "the uniformizer pattern needs a one-dimensional local base".to_owned(),
                    ));
                }
                let (g, kind) = ring.find_gen(var).ok_or_else(|| {
                    RingError::OutsideCatalog(format!("unknown generator {var:?}"))
                })?;
                if g.degree != 0 || g.laurent || kind != LayerKind::Poly {
                    return Err(RingError::OutsideCatalog(
                        "the uniformizer pattern needs a degree-zero polynomial generator"
                            .to_owned(),
                    ));
                }
                if matches!(shape.base, ShapeBase::Max(_)) || shape.vars.contains(var) {
                    return Err(RingError::OutsideCatalog(
                        "the uniformizer pattern generates a maximal ideal on its own".to_owned(),
                    ));
                }
            }
            ExoticGen::VarMinusConst { var, c } => {
                if !ring.base.is_field() {
                    return Err(RingError::OutsideCatalog(
                        "root generators are registered over field bases only".to_owned(),
                    ));
                }
                let (g, kind) = ring.find_gen(var).ok_or_else(|| {
                    RingError::OutsideCatalog(format!("unknown generator {var:?}"))
                })?;
                if g.degree != 0 || g.laurent || kind != LayerKind::Poly {
                    return Err(RingError::OutsideCatalog(
                        "root generators need a degree-zero polynomial generator".to_owned(),
                    ));
                }
                if shape.vars.contains(var) || !seen_exotic_vars.insert(var) {
                    return Err(RingError::OutsideCatalog(
                        "conflicting root generators for one variable".to_owned(),
                    ));
                }
                if *c == 0 {
                    return Err(RingError::OutsideCatalog(
                        "a zero root is just the variable itself".to_owned(),
                    ));
                }
            }
        }
    }
    // No localized element may lie in the prime.
    for e in ring.loc_elems() {
        if elem_in_shape(ring, e, shape)? {
            return Err(RingError::OutsideCatalog(format!(
                "{:?} is inverted in this ring and lies in {}",
                e.text(),
                shape.text()
            )));
        }
    }
    // Primality: the quotient by the shape must be a domain. Relations that
    // survive the shape substitution must be certified monic irreducibles
    // over a characteristic-zero part; a surviving unit is a proper-ideal
    // violation; a surviving monomial makes the quotient non-reduced.
    for r in ring.relations() {
        let mut red = reduce_by_shape(r, shape);
        red.retain(|_, pis| !part_is_zero(ring, &shape.base, pis));
        if red.is_empty() {
            continue;
        }
        if red.keys().any(|m| m.is_empty()) && red.len() == 1 {
            return Err(RingError::OutsideCatalog(format!(
                "relations reduce to a unit modulo {}",
                shape.text()
            )));
        }
        if red.len() == 1 {
            return Err(RingError::OutsideCatalog(format!(
                "relations reduce to a monomial modulo {}: the quotient is not a domain",
                shape.text()
            )));
        }
        let char_zero_part = shape_modulus(ring, &shape.base).is_none()
            && !matches!(ring.base, BaseRing::Fp(_))
            && !(matches!(shape.base, ShapeBase::Max(_)) && matches!(ring.base, BaseRing::Z));
        if !(relation_is_monic_certified(&red) && char_zero_part && domain_certified(ring)) {
            return Err(RingError::OutsideCatalog(format!(
                "cannot certify that the quotient by {} is a domain",
                shape.text()
            )));
        }
    }
    // The zero ideal needs the ring itself to be a domain.
    if shape.is_zero_ideal() && !ring.relations().is_empty() && !domain_certified(ring) {
        return Err(RingError::OutsideCatalog(
            "the zero ideal is prime only in a domain, which the catalog cannot certify here"
                .to_owned(),
        ));
    }
    Ok(())
}

/// Enumerate the catalog prime shape classes of a ring. Generic base primes
/// of `Z` are one class `Max(None)`.
pub fn enumerate_shapes(ring: &GradedRingExpr) -> Result<Vec<PrimeShape>, RingError> {
    let gens = ring.gens();
    let plain: Vec<&Generator> =
        gens.iter().map(|(g, _)| *g).filter(|g| !g.laurent).collect();
    if plain.len() > 12 {
        return Err(RingError::Unknown("too many generators to enumerate".to_owned()));
    }
    let base_cases: Vec<ShapeBase> = if ring.base.is_field() {
        vec![ShapeBase::Zero]
    } else {
        vec![ShapeBase::Zero, ShapeBase::Max(None)]
    };
    let mut out = Vec::new();
    for base in &base_cases {
        for mask in 0..(1u32 << plain.len()) {
            let vars: BTreeSet<String> = plain
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, g)| g.name.clone())
                .collect();
            let shape = PrimeShape { base: base.clone(), vars, exotics: Vec::new() };
            if validate_shape(ring, &shape).is_ok() {
                out.push(shape);
            }
        }
    }
    // Registered exotic shapes.
    if matches!(ring.base, BaseRing::ZLoc(_) | BaseRing::Witt(_) | BaseRing::Dvr)
        && plain.len() == 1
        && plain[0].degree == 0
        && ring.relations().is_empty()
    {
        let shape = PrimeShape {
            base: ShapeBase::Zero,
            vars: BTreeSet::new(),
            exotics: vec![ExoticGen::UniformizerRecip { var: plain[0].name.clone() }],
        };
        if validate_shape(ring, &shape).is_ok() {
            out.push(shape);
        }
    }
    if let Some((x, roots)) = registered_two_point(ring) {
        for c in roots {
            let shape = PrimeShape {
                base: ShapeBase::Zero,
                vars: BTreeSet::new(),
                exotics: vec![ExoticGen::VarMinusConst { var: x.clone(), c }],
            };
            if validate_shape(ring, &shape).is_ok() {
                out.push(shape);
            }
        }
    }
    Ok(out)
}

/// Whether the enumerated shapes exhaust the homogeneous maximal ideals, so
/// that universally quantified claims (equicodimensionality, chain-computed
/// dimension) are sound.
fn catalog_complete(ring: &GradedRingExpr) -> bool {
    if registered_two_point(ring).is_some() {
        return true;
    }
    // Degree-zero polynomial generators open ungraded directions whose
    // maximal ideals the catalog cannot list; power-series generators over a
    // local base stay inside the unique maximal shape.
    for (g, kind) in ring.gens() {
        if g.laurent {
            continue;
        }
        if g.degree == 0 {
            match kind {
                LayerKind::PowerSeries if ring.base.is_local() => {}
                _ => return false,
            }
        }
    }
    // Localizing away a generator-involving element needs registered facts.
    if ring.loc_elems().iter().any(|e| !e.support().is_empty()) {
        return false;
    }
    // Relations must vanish into catalog shapes: monomials always do; other
    // relations only when every generator is nilpotent (then the single
    // maximal shape is everything).
    let rels = ring.relations();
    if rels.iter().all(|r| r.is_monomial()) {
        return true;
    }
    cech_oracle::all_vars_nilpotent(ring) == Some(true)
}

// ---------------------------------------------------------------------------
// Chains, heights, coheights, dimension
// ---------------------------------------------------------------------------

fn shape_le(ring: &GradedRingExpr, a: &PrimeShape, b: &PrimeShape) -> Result<bool, RingError> {
    match (&a.base, &b.base) {
        (ShapeBase::Zero, _) => {}
        (ShapeBase::Max(x), ShapeBase::Max(y)) if x == y => {}
        _ => return Ok(false),
    }
    if !a.vars.is_subset(&b.vars) {
        return Ok(false);
    }
    for ex in &a.exotics {
        if !b.exotics.contains(ex) && !elem_in_shape(ring, &ex.to_elem(), b)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All valid shapes below `p` obtained by weakening its generators.
fn shapes_below(ring: &GradedRingExpr, p: &PrimeShape) -> Result<Vec<PrimeShape>, RingError> {
    let vars: Vec<&String> = p.vars.iter().collect();
    let mut out = Vec::new();
    let base_cases: Vec<ShapeBase> = match &p.base {
        ShapeBase::Zero => vec![ShapeBase::Zero],
        b => vec![ShapeBase::Zero, b.clone()],
    };
    for base in base_cases {
        for mask in 0..(1u32 << vars.len()) {
            let sub: BTreeSet<String> = vars
                .iter()
                .enumerate()
                .filter(|(i, _)| mask & (1 << i) != 0)
                .map(|(_, v)| (*v).clone())
                .collect();
            for emask in 0..(1u32 << p.exotics.len()) {
                let exotics: Vec<ExoticGen> = p
                    .exotics
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| emask & (1 << i) != 0)
                    .map(|(_, e)| e.clone())
                    .collect();
                let s = PrimeShape { base: base.clone(), vars: sub.clone(), exotics };
                if validate_shape(ring, &s).is_ok() {
                    out.push(s);
                }
            }
        }
    }
    Ok(out)
}

/// Longest chain of strict inclusions of valid shapes ending at `p`
/// (its length in edges), i.e. the chain-enumerated height.
fn chain_height(ring: &GradedRingExpr, p: &PrimeShape) -> Result<u32, RingError> {
    let below = shapes_below(ring, p)?;
    // Longest path in the inclusion DAG ending at p.
    fn longest(
        ring: &GradedRingExpr,
        nodes: &[PrimeShape],
        target: &PrimeShape,
        memo: &mut BTreeMap<PrimeShape, u32>,
    ) -> Result<u32, RingError> {
        if let Some(v) = memo.get(target) {
            return Ok(*v);
        }
        let mut best = 0;
        for n in nodes {
            if n != target && shape_le(ring, n, target)? {
                let v = longest(ring, nodes, n, memo)? + 1;
                best = best.max(v);
            }
        }
        memo.insert(target.clone(), best);
        Ok(best)
    }
    let mut memo = BTreeMap::new();
    longest(ring, &below, p, &mut memo)
}

/// Parameter-count height: base contribution plus generator and exotic
/// counts, minus the relations that die in the shape. Valid only when the
/// relations are a verified regular sequence and every surviving relation is
/// a certified fresh parameter.
fn param_height(ring: &GradedRingExpr, p: &PrimeShape) -> Result<Option<u32>, RingError> {
    if !ring.relations().is_empty() && !relations_regular_rule_based(ring) {
        return Ok(None);
    }
    let base_contrib = match p.base {
        ShapeBase::Zero => 0,
        ShapeBase::Max(_) => ring.base.dimension(),
    };
    let mut dying = 0u32;
    for r in ring.relations() {
        let mut red = reduce_by_shape(r, p);
        red.retain(|_, pis| !part_is_zero(ring, &p.base, pis));
        if red.is_empty() {
            dying += 1;
        } else if !relation_is_monic_certified(&red) {
            return Ok(None);
        }
    }
    Ok(Some(base_contrib + p.vars.len() as u32 + p.exotics.len() as u32 - dying))
}

/// Height of a catalog shape: chain enumeration cross-checked against the
/// parameter count whenever both routes apply.
pub fn shape_height(ring: &GradedRingExpr, p: &PrimeShape) -> Result<u32, RingError> {
    validate_shape(ring, p)?;
    let chain = chain_height(ring, p)?;
    if let Some(params) = param_height(ring, p)? {
        if params != chain {
            return Err(RingError::Internal(format!(
                "height of {} disagrees: chains give {chain}, parameters give {params}",
                p.text()
            )));
        }
    }
    Ok(chain)
}

/// Coheight of a catalog shape: the dimension of the quotient presentation.
pub fn shape_coheight(ring: &GradedRingExpr, p: &PrimeShape) -> Result<u32, RingError> {
    validate_shape(ring, p)?;
    if p.is_zero_ideal() {
        return krull_dimension(ring);
    }
    // The uniformizer-reciprocal pattern inverts pi, so the quotient is the
    // fraction field of the base: a field.
    if p.exotics.iter().any(|e| matches!(e, ExoticGen::UniformizerRecip { .. })) {
        let killed: BTreeSet<&String> = p
            .exotics
            .iter()
            .filter_map(|e| match e {
                ExoticGen::UniformizerRecip { var } => Some(var),
                _ => None,
            })
            .collect();
        let extra = ring
            .gens()
            .iter()
            .filter(|(g, _)| !g.laurent && !p.vars.contains(&g.name) && !killed.contains(&g.name))
            .count();
        if extra > 0 {
            return Err(RingError::Unknown(
                "coheight of a uniformizer-reciprocal prime with extra generators".to_owned(),
            ));
        }
        return Ok(0);
    }
    let view = quotient_view(ring, p)?;
    view_dimension(ring, &view)
}

/// The quotient of a ring by a shape, flattened to the data that dimension
/// counting needs.
struct QuotientView {
    base_dim: u32,
    base_is_field: bool,
    gens: Vec<Generator>,
    relations: Vec<RingElem>,
    /// Supports of the surviving localized elements.
    loc_supports: Vec<Vec<String>>,
    loc_all_certified: bool,
}

fn quotient_view(ring: &GradedRingExpr, p: &PrimeShape) -> Result<QuotientView, RingError> {
    let base_killed = matches!(p.base, ShapeBase::Max(_));
    let killed_by_exotic: BTreeSet<String> = p
        .exotics
        .iter()
        .map(|e| match e {
            ExoticGen::UniformizerRecip { var } | ExoticGen::VarMinusConst { var, .. } => {
                var.clone()
            }
        })
        .collect();
    let gens: Vec<Generator> = ring
        .gens()
        .iter()
        .map(|(g, _)| (*g).clone())
        .filter(|g| !g.laurent && !p.vars.contains(&g.name) && !killed_by_exotic.contains(&g.name))
        .collect();
    let mut relations = Vec::new();
    for r in ring.relations() {
        let mut red = reduce_by_shape(r, p);
        red.retain(|_, pis| !part_is_zero(ring, &p.base, pis));
        if red.is_empty() {
            continue;
        }
        relations.push(reconstitute(red, r.degree));
    }
    let mut loc_supports = Vec::new();
    let mut loc_all_certified = true;
    for e in ring.loc_elems() {
        let mut red = reduce_by_shape(e, p);
        red.retain(|_, pis| !part_is_zero(ring, &p.base, pis));
        let support: BTreeSet<String> = red
            .keys()
            .flat_map(|m| m.iter().map(|(n, _)| n.clone()))
            .collect();
        if support.is_empty() {
            // A surviving constant. Over a residue field or the retained
            // base part, constants invert trivially or are certified by the
            // generic-prime rule below.
            if !(base_killed || ring.base.is_field() || loc_constant_certified(ring, e)) {
                loc_all_certified = false;
            }
            continue;
        }
        loc_supports.push(support.into_iter().collect());
    }
    Ok(QuotientView {
        base_dim: if base_killed { 0 } else { ring.base.dimension() },
        base_is_field: base_killed || ring.base.is_field(),
        gens,
        relations,
        loc_supports,
        loc_all_certified,
    })
}

fn reconstitute(
    red: BTreeMap<Vec<(String, u32)>, BTreeMap<i64, i128>>,
    degree: i64,
) -> RingElem {
    let mut terms = Vec::new();
    for (mono, pis) in red {
        for (e, c) in pis {
            terms.push(Term {
                coeff: c.clamp(i128::from(i64::MIN), i128::from(i64::MAX)) as i64,
                pi_pow: e.max(0) as u32,
                factors: mono.clone(),
            });
        }
    }
    RingElem { terms, degree }
}

/// Whether localizing away a constant provably keeps the dimension: units,
/// or nonzero integers over the non-local base Z (a generic prime survives).
fn loc_constant_certified(ring: &GradedRingExpr, e: &RingElem) -> bool {
    let Some(c) = constant_value(e) else { return false };
    if c == 0 {
        return false;
    }
    match &ring.base {
        BaseRing::Z => true,
        BaseRing::Q | BaseRing::Fp(_) => true,
        BaseRing::Dvr => true, // equal characteristic zero: integers are units
        BaseRing::ZLoc(crate::ring_dsl::BasePrimeName::Concrete(_)) | BaseRing::Witt(_) => {
            let p = ring.base.residue_char().expect("concrete local base");
            c.unsigned_abs() % p != 0
        }
        BaseRing::ZLoc(crate::ring_dsl::BasePrimeName::Symbolic(_)) => true, // generic p divides no fixed constant
    }
}

fn view_dimension(_ring: &GradedRingExpr, view: &QuotientView) -> Result<u32, RingError> {
    // Localized directions: certified when every generator-involving element
    // has support inside a single degree-zero generator over a field part
    // ("finitely many points removed from an affine line"), or when nothing
    // generator-involving survives.
    for support in &view.loc_supports {
        let ok = view.base_is_field
            && support.len() == 1
            && view.gens.iter().any(|g| g.name == support[0] && g.degree == 0);
        if !ok {
            return Err(RingError::Unknown(format!(
                "cannot certify the dimension of the localized locus (support {support:?})"
            )));
        }
    }
    if !view.loc_all_certified {
        return Err(RingError::Unknown(
            "cannot certify that localizing away this constant keeps the dimension".to_owned(),
        ));
    }
    // Surviving relations must be certified fresh parameters.
    let mut rel_count = 0u32;
    for r in &view.relations {
        let red = reduce_by_shape(r, &PrimeShape::zero());
        if !relation_is_monic_certified(&red) {
            return Err(RingError::Unknown(format!(
                "cannot certify the surviving relation {:?} as a parameter",
                r.text()
            )));
        }
        rel_count += 1;
    }
    Ok(view.base_dim + view.gens.len() as u32 - rel_count)
}

/// Rule-based regularity of the ring's own quotient relations (without the
/// oracle): used where a cheap certificate suffices.
fn relations_regular_rule_based(ring: &GradedRingExpr) -> bool {
    matches!(ring_relations_regular(ring, false), Ok(true))
}

/// Krull dimension of the homogeneous spectrum.
pub fn krull_dimension(ring: &GradedRingExpr) -> Result<u32, RingError> {
    if let Some(facts) = registered_assertions(ring) {
        return Ok(facts.dim);
    }
    // Structural route.
    let structural: Option<u32> = (|| {
        // Localizations must be certified dimension-preserving.
        for e in ring.loc_elems() {
            if !e.support().is_empty() || !loc_constant_certified(ring, e) {
                return None;
            }
        }
        let rels = ring.relations();
        if !rels.is_empty() {
            match ring_relations_regular(ring, true) {
                Ok(true) => {}
                _ => return None,
            }
        }
        let plain = ring.gens().iter().filter(|(g, _)| !g.laurent).count() as u32;
        Some(ring.base.dimension() + plain - rels.len() as u32)
    })();
    // Chain route.
    let complete = catalog_complete(ring);
    let chain: Option<u32> = if complete {
        let shapes = enumerate_shapes(ring)?;
        let mut best = 0;
        for s in &shapes {
            best = best.max(chain_height(ring, s)?);
        }
        if shapes.is_empty() {
            None
        } else {
            Some(best)
        }
    } else {
        None
    };
    match (structural, chain) {
        (Some(s), Some(c)) => {
            if s != c {
                Err(RingError::Internal(format!(
                    "dimension disagrees: structural {s}, chains {c}"
                )))
            } else {
                Ok(s)
            }
        }
        (Some(s), None) => Ok(s),
        (None, Some(c)) => Ok(c),
        (None, None) => Err(RingError::Unknown(
            "the structural rules cannot certify this ring's dimension".to_owned(),
        )),
    }
}

/// Height of a catalog prime: dimension of the localization.
pub fn height(ring: &GradedRingExpr, p: &PrimeSpec) -> Result<u32, RingError> {
    if let Some(h) = p.cached_height {
        return Ok(h);
    }
    shape_height(ring, &p.shape())
}

/// Coheight of a catalog prime: dimension of the quotient.
pub fn coheight(ring: &GradedRingExpr, p: &PrimeSpec) -> Result<u32, RingError> {
    if let Some(c) = p.cached_coheight {
        return Ok(c);
    }
    shape_coheight(ring, &p.shape())
}

/// Whether ht(p) + coht(p) = dim(R).
pub fn check_dimension_formula(ring: &GradedRingExpr, p: &PrimeSpec) -> Result<bool, RingError> {
    Ok(height(ring, p)? + coheight(ring, p)? == krull_dimension(ring)?)
}

pub fn shape_dimension_formula(ring: &GradedRingExpr, s: &PrimeShape) -> Result<bool, RingError> {
    Ok(shape_height(ring, s)? + shape_coheight(ring, s)? == krull_dimension(ring)?)
}

/// The maximal catalog shapes (coheight zero) and whether they exhaust the
/// homogeneous maximal ideals.
pub fn maximal_shapes(ring: &GradedRingExpr) -> Result<(Vec<PrimeShape>, bool), RingError> {
    let mut out = Vec::new();
    let mut all_certified = true;
    for s in enumerate_shapes(ring)? {
        match shape_coheight(ring, &s) {
            Ok(0) => out.push(s),
            Ok(_) => {}
            // A shape whose coheight the rules cannot certify leaves the
            // listing incomplete without invalidating the certified entries.
            Err(_) => all_certified = false,
        }
    }
    Ok((out, catalog_complete(ring) && all_certified))
}

/// True iff all maximal ideals share one height. Registered facts answer the
/// localized arithmetic surfaces; otherwise the catalog enumerates maximal
/// shape classes. Unequal heights among enumerated maximals refute
/// equicodimensionality even when the enumeration is incomplete; an
/// all-equal answer is only asserted when it is complete.
pub fn is_equicodimensional(ring: &GradedRingExpr) -> Result<bool, RingError> {
    if let Some(facts) = registered_assertions(ring) {
        return Ok(facts.equicodimensional);
    }
    let (maximals, complete) = maximal_shapes(ring)?;
    let mut heights = BTreeSet::new();
    for m in &maximals {
        heights.insert(shape_height(ring, m)?);
    }
    if heights.len() > 1 {
        return Ok(false);
    }
    if !complete {
        return Err(RingError::Unknown(
            "maximal-ideal shape classes are not enumerable for this ring".to_owned(),
        ));
    }
    if maximals.is_empty() {
        return Err(RingError::Unknown("no maximal catalog shapes found".to_owned()));
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Ring maps
// ---------------------------------------------------------------------------

/// A named map of ring presentations with the catalog facts the engine
/// consumes: finiteness, descendability, an optional relative duality shift,
/// and enough generator images to restrict catalog primes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RingMapDescriptor {
    pub name: String,
    pub source: GradedRingExpr,
    pub target: GradedRingExpr,
    pub finite: bool,
    pub descendable: bool,
    pub relative_gorenstein_shift: Option<i64>,
    /// Source generator name -> its image in the target.
    pub generator_images: Vec<(String, RingElem)>,
}

impl RingMapDescriptor {
    pub fn identity(ring: &GradedRingExpr) -> Self {
        let images = ring
            .gens()
            .iter()
            .map(|(g, _)| {
                let mut e = RingElem::var(&g.name);
                e.degree = g.degree;
                (g.name.clone(), e)
            })
            .collect();
        RingMapDescriptor {
            name: "identity".to_owned(),
            source: ring.clone(),
            target: ring.clone(),
            finite: true,
            descendable: true,
            relative_gorenstein_shift: Some(0),
            generator_images: images,
        }
    }

    pub fn image_of(&self, gen: &str) -> Option<&RingElem> {
        self.generator_images.iter().find(|(n, _)| n == gen).map(|(_, e)| e)
    }
}

/// Restrict a target shape along the map: a source generator lies in the
/// restriction iff its image lies in the given prime.
pub fn restrict_shape(
    f: &RingMapDescriptor,
    q: &PrimeShape,
) -> Result<PrimeShape, RingError> {
    if f.source.base != f.target.base {
        return Err(RingError::Unsupported(
            "prime restriction needs identical base rings".to_owned(),
        ));
    }
    let mut vars = BTreeSet::new();
    for (g, _) in f.source.gens() {
        if g.laurent {
            continue;
        }
        let img = f.image_of(&g.name).ok_or_else(|| {
            RingError::Unsupported(format!(
                "generator images do not cover {:?}; cannot restrict",
                g.name
            ))
        })?;
        if elem_in_shape(&f.target, img, q)? {
            vars.insert(g.name.clone());
        }
    }
    let shape = PrimeShape { base: q.base.clone(), vars, exotics: Vec::new() };
    validate_shape(&f.source, &shape)?;
    Ok(shape)
}

/// Restrict a catalog prime along a ring map. For finite maps the coheight
/// is preserved; the equality is asserted and a violation reported as a
/// catalog bug.
pub fn restrict_prime(f: &RingMapDescriptor, q: &PrimeSpec) -> Result<PrimeSpec, RingError> {
    let shape = restrict_shape(f, &q.shape())?;
    let base_part = match &shape.base {
        ShapeBase::Zero => BasePart::Zero,
        ShapeBase::Max(Some(t)) => BasePart::Max(t.clone()),
        ShapeBase::Max(None) => {
            return Err(RingError::Unsupported("generic base prime in a concrete spec".to_owned()))
        }
    };
    let spec = PrimeSpec::build(
        &f.source,
        base_part,
        shape.vars.iter().cloned().collect(),
        Vec::new(),
    )?;
    if f.finite {
        let src = coheight(&f.source, &spec)?;
        let tgt = coheight(&f.target, q)?;
        if src != tgt {
            return Err(RingError::Internal(format!(
                "coheight not preserved along finite map {}: source {src}, target {tgt}",
                f.name
            )));
        }
    }
    Ok(spec)
}

/// Catalog target shapes restricting onto the given source shape.
pub fn fiber_shapes(
    f: &RingMapDescriptor,
    source_shape: &PrimeShape,
) -> Result<Vec<PrimeShape>, RingError> {
    let mut out = Vec::new();
    for q in enumerate_shapes(&f.target)? {
        if restrict_shape(f, &q)? == *source_shape {
            out.push(q);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Regular sequences
// ---------------------------------------------------------------------------

/// Decide regularity of a sequence of elements. Rule-based certificates
/// first (fresh variables are universally regular; disjoint-support
/// monomials over a domain; a single nonzero element of a domain); then the
/// oracle's degreewise annihilator check on field-coefficient algebras.
/// Returns an explicit error when undecidable.
pub fn is_regular_sequence(ring: &GradedRingExpr, elems: &[RingElem]) -> Result<bool, RingError> {
    is_regular_sequence_inner(ring, elems, true)
}

fn is_regular_sequence_inner(
    ring: &GradedRingExpr,
    elems: &[RingElem],
    allow_oracle: bool,
) -> Result<bool, RingError> {
    if elems.is_empty() {
        return Ok(true);
    }
    // Rule 1: distinct fresh variables (no relation or localized element
    // mentions them) are regular over any nonzero coefficient ring.
    let fresh_vars = |e: &RingElem| -> Option<String> {
        if e.terms.len() == 1
            && e.terms[0].coeff.abs() == 1
            && e.terms[0].pi_pow == 0
            && e.terms[0].factors.len() == 1
            && e.terms[0].factors[0].1 == 1
        {
            let name = e.terms[0].factors[0].0.clone();
            let used = ring
                .relations()
                .iter()
                .chain(ring.loc_elems().iter())
                .any(|r| r.support().contains(&name));
            let is_gen = ring.find_gen(&name).map(|(g, _)| !g.laurent) == Some(true);
            if is_gen && !used {
                return Some(name);
            }
        }
        None
    };
    let names: Vec<Option<String>> = elems.iter().map(fresh_vars).collect();
    if names.iter().all(|n| n.is_some()) {
        let mut seen = BTreeSet::new();
        if names.iter().all(|n| seen.insert(n.clone().unwrap())) {
            return Ok(true);
        }
    }
    let is_domain = ring.relations().is_empty() || domain_certified(ring);
    // Rule 2: pairwise-disjoint-support monomials over a domain.
    if is_domain
        && elems.iter().all(|e| e.is_monomial() && !e.support().is_empty())
        && pairwise_disjoint(elems)
    {
        return Ok(true);
    }
    // Rule 3: a single nonzero element of a domain.
    if is_domain && elems.len() == 1 && !elems[0].is_zero() {
        // Nonzero in the quotient: its support must avoid the relations or
        // there are none.
        let rel_support: BTreeSet<String> =
            ring.relations().iter().flat_map(|r| r.support()).collect();
        if ring.relations().is_empty()
            || elems[0].support().iter().all(|n| !rel_support.contains(n))
        {
            return Ok(true);
        }
    }
    // Oracle route: iterated annihilator checks in a degree window.
    if allow_oracle {
        match cech_oracle::regular_sequence_by_annihilators(ring, elems) {
            Ok(v) => return Ok(v),
            Err(e) => {
                return Err(RingError::Unknown(format!(
                    "regularity undecidable within the window: {e}"
                )))
            }
        }
    }
    Err(RingError::Unknown("no regularity rule applies".to_owned()))
}

fn pairwise_disjoint(elems: &[RingElem]) -> bool {
    for (i, a) in elems.iter().enumerate() {
        for b in &elems[i + 1..] {
            let sa: BTreeSet<String> = a.support().into_iter().collect();
            let sb: BTreeSet<String> = b.support().into_iter().collect();
            if !sa.is_disjoint(&sb) {
                return false;
            }
        }
    }
    true
}

/// Verify each quotient layer's elements as a regular sequence in the ring
/// built so far.
pub fn ring_relations_regular(
    ring: &GradedRingExpr,
    allow_oracle: bool,
) -> Result<bool, RingError> {
    let mut prefix = GradedRingExpr { base: ring.base.clone(), layers: Vec::new() };
    for layer in &ring.layers {
        if let Layer::Quotient(elems) = layer {
            match is_regular_sequence_inner(&prefix, elems, allow_oracle) {
                Ok(true) => {}
                other => return other,
            }
        }
        prefix.layers.push(layer.clone());
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Catalog maps
// ---------------------------------------------------------------------------

/// The finite ring maps the engine knows: the real-to-complex K-theory
/// inclusions (connective and periodic), a Chern-class squaring map, the
/// identity, and a synthetic two-point fiber used to exhibit a failure of
/// local constancy.
pub fn catalog_maps() -> Vec<RingMapDescriptor> {
    use crate::ring_dsl::parse_ring;
    let mut out = Vec::new();

    let ku = parse_ring("Z[v:2]").unwrap();
    let ko = parse_ring("Z[beta:8]").unwrap();
    out.push(RingMapDescriptor {
        name: "ko->ku".to_owned(),
        source: ko,
        target: ku.clone(),
        finite: true,
        descendable: true,
        relative_gorenstein_shift: Some(-2),
        generator_images: vec![("beta".to_owned(), RingElem::var_power("v", 4, 2))],
    });

    let ku_per = parse_ring("Z[v^+-1:2]").unwrap();
    let ko_per = parse_ring("Z[beta^+-1:8]").unwrap();
    out.push(RingMapDescriptor {
        name: "KO->KU".to_owned(),
        source: ko_per,
        target: ku_per,
        finite: true,
        descendable: true,
        relative_gorenstein_shift: Some(-2),
        generator_images: vec![("beta".to_owned(), RingElem::var_power("v", 4, 2))],
    });

    let cx = parse_ring("Z[x:-2]").unwrap();
    let cc = parse_ring("Z[c:-4]").unwrap();
    out.push(RingMapDescriptor {
        name: "chern-square".to_owned(),
        source: cc,
        target: cx,
        finite: true,
        descendable: false,
        relative_gorenstein_shift: None,
        generator_images: vec![("c".to_owned(), RingElem::var_power("x", 2, -2))],
    });

    let q = parse_ring("Q").unwrap();
    let two_point = parse_ring("Q[x:0]/(x^2-1)").unwrap();
    out.push(RingMapDescriptor {
        name: "two-point-fiber".to_owned(),
        source: q.clone(),
        target: two_point,
        finite: true,
        descendable: false,
        relative_gorenstein_shift: None,
        generator_images: vec![],
    });

    out.push(RingMapDescriptor::identity(&ku));
    out
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring_dsl::{parse_prime, parse_ring};

    fn ring(t: &str) -> GradedRingExpr {
        parse_ring(t).unwrap()
    }

    #[test]
    fn dimension_examples() {
        assert_eq!(krull_dimension(&ring("Z_(p)[T:0]")).unwrap(), 2);
        assert_eq!(krull_dimension(&ring("F_2")).unwrap(), 0);
        assert_eq!(krull_dimension(&ring("Z[v:2]")).unwrap(), 2);
        assert_eq!(krull_dimension(&ring("Z[v^+-1:2]")).unwrap(), 1);
        assert_eq!(krull_dimension(&ring("Q[x:-2,y:-2]")).unwrap(), 2);
        assert_eq!(krull_dimension(&ring("F_2[x:-2]/(x^4)")).unwrap(), 0);
        assert_eq!(krull_dimension(&ring("Z_(5)[c4:8,c6:12]")).unwrap(), 3);
        assert_eq!(krull_dimension(&ring("W(F_9)[[u1:0,u2:0]][beta^+-1:2]")).unwrap(), 3);
    }

    #[test]
    fn dimension_of_localized_surfaces_is_registered() {
        let tmf2 = ring("Z loc(2)[s^+-1:0] loc(s-1)[alpha^+-1:4]");
        assert!(registered_assertions(&tmf2).is_some());
        assert_eq!(krull_dimension(&tmf2).unwrap(), 2);
        let tmf3 =
            ring("Z loc(3)[zeta:0]/(zeta^2+zeta+1)[t:0] loc(t, 1-zeta*t, 1+zeta^2*t)[beta^+-1:2]");
        assert!(registered_assertions(&tmf3).is_some());
        assert_eq!(krull_dimension(&tmf3).unwrap(), 2);
        assert!(is_equicodimensional(&tmf2).unwrap());
        assert!(is_equicodimensional(&tmf3).unwrap());
    }

    #[test]
    fn non_regular_quotient_dimension_by_chains() {
        // (x^2, x*y) is not regular; the chain route alone answers.
        let r = ring("Q[x:-2,y:-2]/(x^2,x*y)");
        assert_eq!(krull_dimension(&r).unwrap(), 1);
    }

    #[test]
    fn height_examples() {
        let dvr_t = ring("DVR[T:0]");
        let p = parse_prime("(pi*T-1)", &dvr_t).unwrap();
        assert_eq!(height(&dvr_t, &p).unwrap(), 1);
        assert_eq!(coheight(&dvr_t, &p).unwrap(), 0);
        assert_eq!(p.is_maximal, Some(true));

        let zp_x = ring("Z_(p)[x:2]");
        let m = parse_prime("(p,x)", &zp_x).unwrap();
        assert_eq!(height(&zp_x, &m).unwrap(), 2);
        let q = parse_prime("(p)", &zp_x).unwrap();
        assert_eq!(height(&zp_x, &q).unwrap(), 1);
        assert_eq!(coheight(&zp_x, &q).unwrap(), 1);

        let z = ring("Z[v:2]");
        let zero = parse_prime("(0)", &z).unwrap();
        assert_eq!(height(&z, &zero).unwrap(), 0);
        assert_eq!(coheight(&z, &zero).unwrap(), 2);
    }

    #[test]
    fn dimension_formula_examples() {
        let dvr_t = ring("DVR[T:0]");
        let exotic = parse_prime("(pi*T-1)", &dvr_t).unwrap();
        assert!(!check_dimension_formula(&dvr_t, &exotic).unwrap());
        let max = parse_prime("(pi,T)", &dvr_t).unwrap();
        assert!(check_dimension_formula(&dvr_t, &max).unwrap());

        let f = ring("F_3");
        let zero = parse_prime("(0)", &f).unwrap();
        assert!(check_dimension_formula(&f, &zero).unwrap());
    }

    #[test]
    fn equicodimensionality_examples() {
        assert!(!is_equicodimensional(&ring("Z_(p)[T:0]")).unwrap());
        assert!(!is_equicodimensional(&ring("DVR[T:0]")).unwrap());
        assert!(is_equicodimensional(&ring("F_2[x:-2]/(x^4)")).unwrap());
        assert!(is_equicodimensional(&ring("Z[v:2]")).unwrap());
        assert!(is_equicodimensional(&ring("Z")).unwrap());
        assert!(is_equicodimensional(&ring("Q[x:0]/(x^2-1)")).unwrap());
    }

    #[test]
    fn artinian_quotient_heights() {
        let r = ring("F_2[x:-2]/(x^4)");
        let p = parse_prime("(x)", &r).unwrap();
        assert_eq!(height(&r, &p).unwrap(), 0);
        assert_eq!(coheight(&r, &p).unwrap(), 0);
        // The zero ideal is not prime here.
        assert!(parse_prime("(0)", &r).is_err());
    }

    #[test]
    fn non_cm_ring_shapes() {
        let r = ring("Q[x:-2,y:-2]/(x^2,x*y)");
        let shapes = enumerate_shapes(&r).unwrap();
        // Primes must contain the nilpotent x: only (x) and (x, y).
        assert_eq!(shapes.len(), 2);
        let px = parse_prime("(x)", &r).unwrap();
        assert_eq!(height(&r, &px).unwrap(), 0);
        assert_eq!(coheight(&r, &px).unwrap(), 1);
        let pxy = parse_prime("(x,y)", &r).unwrap();
        assert_eq!(height(&r, &pxy).unwrap(), 1);
        assert_eq!(coheight(&r, &pxy).unwrap(), 0);
        assert!(parse_prime("(y)", &r).is_err());
    }

    #[test]
    fn two_point_ring() {
        let r = ring("Q[x:0]/(x^2-1)");
        let shapes = enumerate_shapes(&r).unwrap();
        assert_eq!(shapes.len(), 2);
        let p1 = parse_prime("(x-1)", &r).unwrap();
        assert_eq!(height(&r, &p1).unwrap(), 0);
        assert_eq!(coheight(&r, &p1).unwrap(), 0);
        assert_eq!(krull_dimension(&r).unwrap(), 0);
    }

    #[test]
    fn restriction_examples() {
        let maps = catalog_maps();
        let ko_ku = maps.iter().find(|m| m.name == "ko->ku").unwrap();
        let q = parse_prime("(2, v)", &ko_ku.target).unwrap();
        let res = restrict_prime(ko_ku, &q).unwrap();
        assert_eq!(res.base_part, BasePart::Max("2".to_owned()));
        assert_eq!(res.vars, vec!["beta".to_owned()]);

        let idm = maps.iter().find(|m| m.name == "identity").unwrap();
        let p = parse_prime("(v)", &idm.target).unwrap();
        let res = restrict_prime(idm, &p).unwrap();
        assert_eq!(res.vars, vec!["v".to_owned()]);

        let sq = maps.iter().find(|m| m.name == "chern-square").unwrap();
        let p = parse_prime("(2, x)", &sq.target).unwrap();
        let res = restrict_prime(sq, &p).unwrap();
        assert_eq!(res.vars, vec!["c".to_owned()]);
    }

    #[test]
    fn coheight_preserved_along_finite_maps() {
        for f in catalog_maps().iter().filter(|f| f.finite) {
            for q in enumerate_shapes(&f.target).unwrap() {
                let res = restrict_shape(f, &q).unwrap();
                assert_eq!(
                    shape_coheight(&f.source, &res).unwrap(),
                    shape_coheight(&f.target, &q).unwrap(),
                    "map {} at {}",
                    f.name,
                    q.text()
                );
            }
        }
    }

    #[test]
    fn two_point_fiber_has_two_primes_over_zero() {
        let maps = catalog_maps();
        let f = maps.iter().find(|m| m.name == "two-point-fiber").unwrap();
        let fibers = fiber_shapes(f, &PrimeShape::zero()).unwrap();
        assert_eq!(fibers.len(), 2);
    }

    #[test]
    fn regular_sequence_rules() {
        let r = ring("Q[x:-2,y:-2]");
        assert!(is_regular_sequence(&r, &[RingElem::var("x"), RingElem::var("y")]).unwrap());

        let art = ring("F_2[x:-2]/(x^4)");
        let xsq = RingElem::var_power("x", 2, -2);
        assert!(!is_regular_sequence(&art, &[xsq]).unwrap());

        let ps = ring("Z_(5)[c4:8,c6:12][[c1:-2,c2:-4]]");
        assert!(is_regular_sequence(
            &ps,
            &[RingElem::var("c1"), RingElem::var("c2")]
        )
        .unwrap());
    }

    #[test]
    fn binomial_pair_is_regular_by_the_oracle() {
        let r = ring("Q[x:-2,y:-2]");
        let sq_diff = crate::ring_dsl::parse_ring("Q[x:-2,y:-2]/(x^2-y^2, x*y)")
            .unwrap()
            .relations()
            .into_iter()
            .cloned()
            .collect::<alloc::vec::Vec<_>>();
        assert!(is_regular_sequence(&r, &sq_diff).unwrap());
        assert_eq!(krull_dimension(&ring("Q[x:-2,y:-2]/(x^2-y^2, x*y)")).unwrap(), 0);
    }

    #[test]
    fn maximality_iff_coheight_zero() {
        for text in ["Z[v:2]", "Z_(p)[x:2]", "F_2[x:-2]/(x^4)", "DVR[T:0]"] {
            let r = ring(text);
            for s in enumerate_shapes(&r).unwrap() {
                let coht = shape_coheight(&r, &s).unwrap();
                let ht = shape_height(&r, &s).unwrap();
                let dim = krull_dimension(&r).unwrap();
                assert!(ht + coht <= dim, "{} in {}", s.text(), text);
            }
        }
    }
}
