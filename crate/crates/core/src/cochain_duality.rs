//! Duality shifts for cochain rings of classifying spaces.
//!
//! Input data: a compact Lie group described by flags (dimension, an
//! embedding rank into a unitary group, orientability of its adjoint
//! representation, finiteness) and an even coefficient ring with its
//! algebraic shift. The main formula expresses the duality shift of the
//! group's cochain ring through the coefficient ring's shift and Krull
//! dimension; a per-prime parameter route re-derives every enumerable
//! maximal shape independently. The group dimension may stay symbolic
//! (`g`), in which case all outputs carry it symbolically.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::graded_rings::{
    is_equicodimensional, krull_dimension, maximal_shapes, shape_height, RingError,
};
use crate::ring_dsl::{format_ring, Generator, GradedRingExpr, Layer};
use crate::shift_calculus::{
    adjoin_shift, lgd_shift, pipeline_shift, rsop_shift_at_shape, Cond, LinValue, Scope,
    ShiftFunction, ShiftReport,
};

// ---------------------------------------------------------------------------
// Input data
// ---------------------------------------------------------------------------

/// A compact Lie group, described by the flags the shift formulas consume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupData {
    pub name: String,
    /// Manifold dimension; `None` keeps it symbolic (printed `g`).
    pub dim: Option<u32>,
    /// Some `n` with a faithful embedding into the rank-`n` unitary group.
    pub embedding_rank: u32,
    /// Whether the adjoint representation is orientable.
    pub lg_orientable: bool,
    pub finite: bool,
}

impl GroupData {
    /// A finite group: dimension zero, always orientable.
    pub fn finite(name: &str) -> Self {
        GroupData {
            name: name.to_owned(),
            dim: Some(0),
            embedding_rank: 1,
            lg_orientable: true,
            finite: true,
        }
    }

    /// A compact Lie group of unspecified (symbolic) dimension.
    pub fn generic(name: &str, lg_orientable: bool) -> Self {
        GroupData {
            name: name.to_owned(),
            dim: None,
            embedding_rank: 2,
            lg_orientable,
            finite: false,
        }
    }

    /// The rank-`n` unitary group; its dimension is `n^2`.
    pub fn unitary(n: u32) -> Self {
        GroupData {
            name: format!("U({n})"),
            dim: Some(n * n),
            embedding_rank: n.max(1),
            lg_orientable: true,
            finite: false,
        }
    }

    /// The rank-`k` torus.
    pub fn torus(k: u32) -> Self {
        GroupData {
            name: format!("T^{k}"),
            dim: Some(k),
            embedding_rank: k.max(1),
            lg_orientable: true,
            finite: false,
        }
    }

    /// Structural invariants of the flags themselves.
    pub fn validate(&self) -> Result<(), RingError> {
        if self.finite && self.dim != Some(0) {
            return Err(RingError::Unsupported(format!(
                "group {} is flagged finite but has nonzero dimension",
                self.name
            )));
        }
        if self.embedding_rank == 0 {
            return Err(RingError::Unsupported(format!(
                "group {} needs a positive embedding rank",
                self.name
            )));
        }
        Ok(())
    }

    /// The dimension as a case value: concrete, or the symbol `g`.
    pub fn dim_value(&self) -> LinValue {
        match self.dim {
            Some(d) => LinValue::constant(i64::from(d)),
            None => LinValue { constant: 0, coht: 0, g: 1 },
        }
    }
}

/// An even coefficient ring with its algebraic shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoefficientData {
    pub ring: GradedRingExpr,
    /// Whether every generator sits in an even degree.
    pub even: bool,
    /// Whether the ring spectrum behind the presentation has finite global
    /// dimension (a flagged hypothesis; it is not derivable from the
    /// presentation).
    pub finite_global_dimension: bool,
    pub shift: ShiftFunction,
}

impl CoefficientData {
    /// Derive the shift from the presentation's layers.
    pub fn new(ring: &GradedRingExpr, finite_global_dimension: bool) -> Result<Self, RingError> {
        let shift = pipeline_shift(ring)?;
        Ok(Self::with_shift(ring.clone(), finite_global_dimension, shift))
    }

    /// Supply the shift directly (for presentations the layer rules do not
    /// cover).
    pub fn with_shift(
        ring: GradedRingExpr,
        finite_global_dimension: bool,
        shift: ShiftFunction,
    ) -> Self {
        let even = ring.is_even();
        CoefficientData { ring, even, finite_global_dimension, shift }
    }
}

// ---------------------------------------------------------------------------
// Construction of the unitary-group cochain ring
// ---------------------------------------------------------------------------

/// The cochain ring of the rank-`n` unitary classifying space over `R`: the
/// coefficient ring with power-series generators `c1..cn` adjoined in
/// degrees `-2, -4, .., -2n`.
pub fn bu_cochain_ring(r: &CoefficientData, n: u32) -> Result<GradedRingExpr, RingError> {
    if !r.even {
        return Err(RingError::Unsupported(
            "hypothesis `even` fails: the coefficient ring has an odd-degree generator"
                .to_owned(),
        ));
    }
    if n == 0 {
        return Err(RingError::Unsupported("the embedding rank must be positive".to_owned()));
    }
    // Pick a label stem that collides with no coefficient-ring generator.
    let stem = ["c", "ch", "chc", "chcl"]
        .iter()
        .find(|stem| (1..=n).all(|i| r.ring.find_gen(&format!("{stem}{i}")).is_none()))
        .ok_or_else(|| {
            RingError::Unsupported(
                "no collision-free label stem for the adjoined generators".to_owned(),
            )
        })?;
    let mut gens = Vec::new();
    for i in 1..=n {
        gens.push(Generator {
            name: format!("{stem}{i}"),
            degree: -2 * i64::from(i),
            laurent: false,
        });
    }
    let mut out = r.ring.clone();
    out.layers.push(Layer::PowerSeries(gens));
    Ok(out)
}

/// The relative duality shift of a subgroup inclusion: the dimension
/// difference of the two groups. Both adjoint representations must be
/// orientable for the relative class to be trivializable.
pub fn subgroup_relgor_shift(g: &GroupData, h: &GroupData) -> Result<LinValue, RingError> {
    g.validate()?;
    h.validate()?;
    for grp in [g, h] {
        if !grp.lg_orientable {
            return Err(RingError::Unsupported(format!(
                "hypothesis `lg_orientable` fails for {}: the adjoint representation is not \
                 flagged orientable",
                grp.name
            )));
        }
    }
    if g.dim.is_none() && h.dim.is_none() && g.name != h.name {
        return Err(RingError::Unsupported(
            "two distinct groups with symbolic dimensions: the difference is not expressible"
                .to_owned(),
        ));
    }
    if g.name == h.name {
        return Ok(LinValue::constant(0));
    }
    Ok(g.dim_value().minus(h.dim_value()))
}

// ---------------------------------------------------------------------------
// The shift formulas
// ---------------------------------------------------------------------------

fn require_hypotheses(r: &CoefficientData, g: &GroupData) -> Result<(), RingError> {
    g.validate()?;
    if !r.even {
        return Err(RingError::Unsupported(format!(
            "hypothesis `even` fails: {} has an odd-degree generator",
            format_ring(&r.ring)
        )));
    }
    if !r.finite_global_dimension {
        return Err(RingError::Unsupported(format!(
            "hypothesis `finite_global_dimension` fails for {}",
            format_ring(&r.ring)
        )));
    }
    if !g.lg_orientable {
        return Err(RingError::Unsupported(format!(
            "hypothesis `lg_orientable` fails for {}: the adjoint representation is not flagged \
             orientable",
            g.name
        )));
    }
    Ok(())
}

/// Duality shift of the cochain ring of the classifying space of `g` over
/// `r`, at maximal ideals: σ(m) = dim(g) + ν(m ∩ R) − ht(m ∩ R), presented
/// in the closed form dim(g) + ν − dim(R) that equicodimensionality
/// certifies. Cases live on the coefficient ring, conditioned on m ∩ R.
/// Every enumerable maximal shape is re-derived through the per-prime
/// parameter route as an independent check.
pub fn cochain_shift(r: &CoefficientData, g: &GroupData) -> Result<ShiftReport, RingError> {
    require_hypotheses(r, g)?;
    if r.shift.domain != r.ring {
        return Err(RingError::Unsupported(
            "the coefficient shift must live on the coefficient ring".to_owned(),
        ));
    }
    if r.shift.cases.iter().any(|(_, v)| v.coht != 0) {
        return Err(RingError::Unsupported(
            "the coefficient shift may not already involve coht(p)".to_owned(),
        ));
    }
    match is_equicodimensional(&r.ring) {
        Ok(true) => {}
        Ok(false) => {
            return Err(RingError::Unsupported(format!(
                "no closed form: {} is not equicodimensional, so ht(m ∩ R) is not determined \
                 by the dimension",
                format_ring(&r.ring)
            )))
        }
        Err(e) => return Err(e),
    }
    let dim = krull_dimension(&r.ring)? as i64;
    let gdim = g.dim_value();
    let cases: Vec<(Cond, LinValue)> = r
        .shift
        .cases
        .iter()
        .map(|(c, v)| (c.clone(), v.shift_by(-dim).plus(gdim)))
        .collect();
    let mut shift = ShiftFunction {
        domain: r.ring.clone(),
        cases,
        scope: Scope::MaximalOnly,
        trace: r.shift.trace.clone(),
    };
    shift.trace.push(format!(
        "cochain ring of the classifying space of {}: σ(m) = dim({}) + ν(m ∩ R) − ht(m ∩ R) \
         = {} + ν − {dim} at maximal ideals",
        g.name,
        g.name,
        gdim.text()
    ));
    // Independent route: at each enumerable maximal shape the parameters of
    // the contraction give ν directly and the height replaces the dimension.
    let (maximals, _complete) = maximal_shapes(&r.ring)?;
    let mut checked = 0usize;
    for m in &maximals {
        let nu_m = match rsop_shift_at_shape(&r.ring, m) {
            Ok(v) => v,
            Err(_) => continue,
        };
        let ht = shape_height(&r.ring, m)? as i64;
        let want = gdim.shift_by(nu_m - ht);
        let got = shift.resolved_at_shape(m)?;
        if got != want {
            return Err(RingError::Internal(format!(
                "cochain shift disagrees at {}: closed form {} vs parameter route {}",
                m.text(),
                got.text(),
                want.text()
            )));
        }
        checked += 1;
    }
    shift.trace.push(format!(
        "{checked} maximal shape(s) re-derived through the per-prime parameter route"
    ));
    let trace = shift.trace.clone();
    Ok(ShiftReport { ring: r.ring.clone(), shift, lgd: true, trace })
}

/// Over a field the shift extends to every prime of the cochain ring:
/// σ(p) = dim(g) + coht(p). The returned function is indexed by the
/// abstract coheight of primes of the cochain ring; its domain field `k`
/// has no catalog primes of positive coheight of its own.
pub fn field_cochain_shift(k: &GradedRingExpr, g: &GroupData) -> Result<ShiftReport, RingError> {
    g.validate()?;
    if !k.base.is_field() || !k.layers.is_empty() {
        return Err(RingError::Unsupported(format!(
            "the field pathway needs a field of coefficients; {} is not one",
            format_ring(k)
        )));
    }
    if !g.lg_orientable {
        return Err(RingError::Unsupported(format!(
            "hypothesis `lg_orientable` fails for {}: the adjoint representation is not flagged \
             orientable",
            g.name
        )));
    }
    let value = g.dim_value().plus(LinValue { constant: 0, coht: 1, g: 0 });
    let shift = ShiftFunction {
        domain: k.clone(),
        cases: vec![(Cond::Else, value)],
        scope: Scope::AllPrimes,
        trace: vec![format!(
            "field coefficients {}: σ(p) = dim({}) + coht(p) on all primes of the cochain ring",
            format_ring(k),
            g.name
        )],
    };
    let trace = shift.trace.clone();
    Ok(ShiftReport { ring: k.clone(), shift, lgd: true, trace })
}

/// The closed-form value of a cochain shift at maximal ideals, when the
/// shift is a single case (the layer-derived coefficient shifts always
/// are): the symbolic answer a table row prints.
pub fn maximal_value(report: &ShiftReport) -> Result<LinValue, RingError> {
    match report.shift.is_constant() {
        Some(v) => Ok(v.resolve_coht(0)),
        None => Err(RingError::Unsupported(
            "the shift is piecewise; there is no single closed-form value".to_owned(),
        )),
    }
}

/// The manual ascent route through the unitary embedding: adjoin the rank-n
/// generators, apply local duality there, then subtract the relative shift
/// of the subgroup inclusion. Must agree with `cochain_shift` for every
/// embedding rank — the rank cancels.
pub fn manual_ascent_value(
    r: &CoefficientData,
    g: &GroupData,
    n: u32,
) -> Result<LinValue, RingError> {
    require_hypotheses(r, g)?;
    let bu = bu_cochain_ring(r, n)?;
    let nu_bu = adjoin_shift(&r.shift, &bu)?;
    let sigma_bu = lgd_shift(&nu_bu, &bu)?;
    let at_max = sigma_bu
        .shift
        .is_constant()
        .ok_or_else(|| {
            RingError::Unsupported(
                "the ascent route needs a single-case shift on the unitary cochain ring"
                    .to_owned(),
            )
        })?
        .resolve_coht(0);
    let a = subgroup_relgor_shift(&GroupData::unitary(n), g)?;
    Ok(at_max.minus(a))
}

// ---------------------------------------------------------------------------
