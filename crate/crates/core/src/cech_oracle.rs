//! Brute-force graded local cohomology over exact fields.
//!
//! Computes Hilbert functions of small graded algebras k[x1..xn]/I with
//! monomial or binomial relations, graded pieces of truncated Čech
//! complexes with exact linear algebra (finite-field or rational rank,
//! never floating point), Matlis-dual Hilbert functions, and Gorenstein
//! certificates in a degree window. The module is deliberately independent
//! of the rule engine: it answers by enumeration and elimination only, so
//! the two can check each other.
//!
//! Truncation semantics: in a localization `A[1/x_S]` the exponents of the
//! inverted variables are bounded below by `-N`. A computation is accepted
//! only when the ranks at `N` and `N + 1` agree on the whole window; the
//! result carries that certificate. Degree slices of the complex are
//! independent, so results merge by disjoint-key union.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::ring_dsl::{BaseRing, GradedRingExpr, Layer, RingElem};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CechError {
    /// Coefficients must be an exact field (F_p or Q).
    NotAField(String),
    /// All generator degrees must be nonzero and share one sign per run.
    MixedSigns(String),
    /// Outside the oracle's scope (power series, Laurent generators,
    /// localizations, non-monomial bases it cannot orient).
    Unsupported(String),
    /// Rewriting did not complete within the budget.
    NonConfluent(String),
    /// Ranks at truncation N and N + 1 disagree somewhere in the window.
    NotStabilized { budget: u32 },
    /// The window or basis exceeds the resource budget.
    TooLarge(String),
}

impl core::fmt::Display for CechError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CechError::NotAField(m) => write!(f, "coefficients are not an exact field: {m}"),
            CechError::MixedSigns(m) => write!(f, "generator degrees break the sign convention: {m}"),
            CechError::Unsupported(m) => write!(f, "outside the oracle's scope: {m}"),
            CechError::NonConfluent(m) => write!(f, "rewriting did not complete: {m}"),
            CechError::NotStabilized { budget } => {
                write!(f, "ranks did not stabilize at truncation {budget}")
            }
            CechError::TooLarge(m) => write!(f, "resource budget exceeded: {m}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Graded Hilbert data
// ---------------------------------------------------------------------------

/// Graded dimensions on an explicit window. Outside the window the ranks are
/// unknown, never assumed zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedHilbert {
    pub window: (i64, i64),
    pub ranks: BTreeMap<i64, u64>,
}

impl GradedHilbert {
    pub fn new(window: (i64, i64)) -> Self {
        let mut ranks = BTreeMap::new();
        for d in window.0..=window.1 {
            ranks.insert(d, 0);
        }
        GradedHilbert { window, ranks }
    }

    pub fn rank_at(&self, d: i64) -> Option<u64> {
        if d < self.window.0 || d > self.window.1 {
            None
        } else {
            Some(*self.ranks.get(&d).unwrap_or(&0))
        }
    }

    pub fn is_zero_on_window(&self) -> bool {
        self.ranks.values().all(|r| *r == 0)
    }

    /// Degreewise equality with `other` shifted by `nu` (the shifted module
    /// has `(shifted other)_d = other_{d - nu}`), on the overlap where both
    /// windows are defined.
    pub fn matches_shifted(&self, other: &GradedHilbert, nu: i64) -> bool {
        let mut overlap = false;
        for d in self.window.0..=self.window.1 {
            match other.rank_at(d - nu) {
                Some(r) => {
                    overlap = true;
                    if self.rank_at(d) != Some(r) {
                        return false;
                    }
                }
                None => {}
            }
        }
        overlap
    }
}

/// Degree reflection `D(H)_d = H_{-d}` with the window negated.
pub fn matlis_dual_hilbert(h: &GradedHilbert) -> GradedHilbert {
    let window = (-h.window.1, -h.window.0);
    let mut ranks = BTreeMap::new();
    for d in window.0..=window.1 {
        ranks.insert(d, h.rank_at(-d).unwrap_or(0));
    }
    GradedHilbert { window, ranks }
}

// ---------------------------------------------------------------------------
// Exact field scalars
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldSpec {
    Fp(u64),
    Rational,
}

#[derive(Debug, Clone, PartialEq)]
enum K {
    Fp { v: u64, p: u64 },
    Q(BigRational),
}

impl K {
    fn zero(field: FieldSpec) -> K {
        match field {
            FieldSpec::Fp(p) => K::Fp { v: 0, p },
            FieldSpec::Rational => K::Q(BigRational::zero()),
        }
    }

    fn from_i64(field: FieldSpec, v: i64) -> K {
        match field {
            FieldSpec::Fp(p) => K::Fp { v: (v.rem_euclid(p as i64)) as u64, p },
            FieldSpec::Rational => K::Q(BigRational::from_integer(BigInt::from(v))),
        }
    }

    fn is_zero(&self) -> bool {
        match self {
            K::Fp { v, .. } => *v == 0,
            K::Q(r) => r.is_zero(),
        }
    }

    fn add(&self, o: &K) -> K {
        match (self, o) {
            (K::Fp { v: a, p }, K::Fp { v: b, .. }) => K::Fp { v: (a + b) % p, p: *p },
            (K::Q(a), K::Q(b)) => K::Q(a + b),
            _ => unreachable!("mixed field scalars"),
        }
    }

    fn neg(&self) -> K {
        match self {
            K::Fp { v, p } => K::Fp { v: (p - v % p) % p, p: *p },
            K::Q(r) => K::Q(-r),
        }
    }

    fn mul(&self, o: &K) -> K {
        match (self, o) {
            (K::Fp { v: a, p }, K::Fp { v: b, .. }) => {
                K::Fp { v: ((*a as u128 * *b as u128) % *p as u128) as u64, p: *p }
            }
            (K::Q(a), K::Q(b)) => K::Q(a * b),
            _ => unreachable!("mixed field scalars"),
        }
    }

    fn inv(&self) -> Option<K> {
        match self {
            K::Fp { v, p } => {
                if *v == 0 {
                    None
                } else {
                    // Fermat: v^(p-2) mod p.
                    let mut base = *v as u128;
                    let mut exp = *p as u128 - 2;
                    let m = *p as u128;
                    let mut acc: u128 = 1;
                    while exp > 0 {
                        if exp & 1 == 1 {
                            acc = acc * base % m;
                        }
                        base = base * base % m;
                        exp >>= 1;
                    }
                    Some(K::Fp { v: acc as u64, p: *p })
                }
            }
            K::Q(r) => {
                if r.is_zero() {
                    None
                } else {
                    Some(K::Q(BigRational::one() / r))
                }
            }
        }
    }
}

/// Rank by Gaussian elimination with exact arithmetic.
fn rank(field: FieldSpec, mut rows: Vec<Vec<K>>) -> usize {
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    let _ = field;
    let mut rank = 0;
    let mut col = 0;
    while col < ncols && rank < rows.len() {
        let pivot = (rank..rows.len()).find(|&r| !rows[r][col].is_zero());
        let Some(pr) = pivot else {
            col += 1;
            continue;
        };
        rows.swap(rank, pr);
        let inv = rows[rank][col].inv().expect("nonzero pivot");
        for c in col..ncols {
            rows[rank][c] = rows[rank][c].mul(&inv);
        }
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in col..ncols {
                    let sub = rows[rank][c].mul(&factor).neg();
                    rows[r][c] = rows[r][c].add(&sub);
                }
            }
        }
        rank += 1;
        col += 1;
    }
    rank
}

// ---------------------------------------------------------------------------
// Monomial rewriting
// ---------------------------------------------------------------------------

type Mono = Vec<u32>;
type Poly = BTreeMap<Mono, K>;

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn mono_divides(a: &Mono, b: &Mono) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn mono_div(b: &Mono, a: &Mono) -> Mono {
    b.iter().zip(a).map(|(y, x)| y - x).collect()
}

fn mono_lcm(a: &Mono, b: &Mono) -> Mono {
    a.iter().zip(b).map(|(x, y)| *x.max(y)).collect()
}

/// A field-coefficient graded algebra presented by a rewriting system on
/// monomials. Rules rewrite a leading monomial to a strictly smaller
/// polynomial under the graded-lexicographic order, so normal forms exist;
/// completion makes them unique.
pub struct OracleAlgebra {
    pub field: FieldSpec,
    /// Generator names with degrees, all nonzero of one sign.
    pub gens: Vec<(String, i64)>,
    weights: Vec<u64>,
    sign: i64,
    rules: Vec<(Mono, Poly)>,
}

const RULE_BUDGET: usize = 160;
const EXP_BUDGET: u32 = 128;
const BASIS_BUDGET: usize = 200_000;

impl OracleAlgebra {
    fn weight(&self, m: &Mono) -> u64 {
        m.iter().zip(&self.weights).map(|(e, w)| *e as u64 * w).sum()
    }

    /// Graded-lex: compare by total weight, then lexicographically.
    fn mono_cmp(&self, a: &Mono, b: &Mono) -> core::cmp::Ordering {
        self.weight(a).cmp(&self.weight(b)).then_with(|| a.cmp(b))
    }

    fn leading(&self, p: &Poly) -> Option<Mono> {
        p.keys().max_by(|a, b| self.mono_cmp(a, b)).cloned()
    }

    fn add_poly(&self, a: &mut Poly, b: &Poly) {
        for (m, c) in b {
            let entry = a.entry(m.clone()).or_insert_with(|| K::zero(self.field));
            *entry = entry.add(c);
            if entry.is_zero() {
                a.remove(m);
            }
        }
    }

    fn scale_poly(&self, p: &Poly, c: &K, by: &Mono) -> Poly {
        let mut out = Poly::new();
        for (m, k) in p {
            out.insert(mono_mul(m, by), k.mul(c));
        }
        out
    }

    /// Normal form: rewrite until no term is divisible by a rule's leading
    /// monomial.
    fn nf(&self, mut p: Poly) -> Result<Poly, CechError> {
        let mut steps: u64 = 0;
        loop {
            let mut target: Option<(Mono, usize)> = None;
            'outer: for m in p.keys().rev() {
                for (i, (lhs, _)) in self.rules.iter().enumerate() {
                    if mono_divides(lhs, m) {
                        target = Some((m.clone(), i));
                        break 'outer;
                    }
                }
            }
            let Some((m, i)) = target else { return Ok(p) };
            let c = p.remove(&m).expect("term present");
            let (lhs, rhs) = &self.rules[i];
            let q = mono_div(&m, lhs);
            let replacement = self.scale_poly(rhs, &c, &q);
            self.add_poly(&mut p, &replacement);
            steps += 1;
            if steps > 2_000_000 {
                return Err(CechError::NonConfluent("rewrite step budget exceeded".to_owned()));
            }
        }
    }

    /// Orient a polynomial into a rule `leading -> lower terms` (monic).
    fn orient(&self, p: Poly) -> Result<Option<(Mono, Poly)>, CechError> {
        if p.is_empty() {
            return Ok(None);
        }
        let lead = self.leading(&p).expect("nonempty");
        if lead.iter().any(|e| *e > EXP_BUDGET) {
            return Err(CechError::NonConfluent("exponent budget exceeded".to_owned()));
        }
        let lc = p.get(&lead).expect("leading coefficient").clone();
        let inv = lc.inv().expect("field scalar");
        let mut rhs = Poly::new();
        for (m, c) in &p {
            if *m != lead {
                rhs.insert(m.clone(), c.mul(&inv).neg());
            }
        }
        Ok(Some((lead, rhs)))
    }

    /// Knuth–Bendix/Buchberger completion, budget-limited: resolve all
    /// overlaps of leading monomials until every S-polynomial reduces to
    /// zero.
    fn complete(&mut self) -> Result<(), CechError> {
        // Seed: reduce each rule against the others until stable.
        let mut pending: Vec<(usize, usize)> = Vec::new();
        let mut i = 0;
        while i < self.rules.len() {
            for j in 0..i {
                pending.push((j, i));
            }
            i += 1;
        }
        let mut guard = 0usize;
        while let Some((a, b)) = pending.pop() {
            guard += 1;
            if guard > 4000 {
                return Err(CechError::NonConfluent("pair budget exceeded".to_owned()));
            }
            let (la, ra) = self.rules[a].clone();
            let (lb, rb) = self.rules[b].clone();
            let lcm = mono_lcm(&la, &lb);
            // Disjoint leading monomials give trivial S-pairs.
            if mono_mul(&la, &lb) == lcm {
                continue;
            }
            // S-poly: rewrite lcm two ways and subtract.
            let via_a = self.scale_poly(&ra, &K::from_i64(self.field, 1), &mono_div(&lcm, &la));
            let via_b = self.scale_poly(&rb, &K::from_i64(self.field, 1), &mono_div(&lcm, &lb));
            let mut s = via_a;
            let negated = self.scale_poly(&via_b, &K::from_i64(self.field, -1), &vec![0; self.gens.len()]);
            self.add_poly(&mut s, &negated);
            let reduced = self.nf(s)?;
            if let Some((lhs, rhs)) = self.orient(reduced)? {
                if self.rules.len() >= RULE_BUDGET {
                    return Err(CechError::NonConfluent("rule budget exceeded".to_owned()));
                }
                let idx = self.rules.len();
                self.rules.push((lhs, rhs));
                for k in 0..idx {
                    pending.push((k, idx));
                }
            }
        }
        Ok(())
    }

    fn gen_index(&self, name: &str) -> Option<usize> {
        self.gens.iter().position(|(n, _)| n == name)
    }

    /// Degree of a monomial.

    fn is_normal(&self, m: &Mono) -> bool {
        !self.rules.iter().any(|(lhs, _)| mono_divides(lhs, m))
    }

    /// Normal monomials of one degree: the basis of the graded piece.
    pub fn basis(&self, d: i64) -> Result<Vec<Mono>, CechError> {
        let mut out = Vec::new();
        let target = d * self.sign; // nonnegative total weight
        if target < 0 {
            return Ok(out);
        }
        let mut current = vec![0u32; self.gens.len()];
        self.enumerate(0, target as u64, &mut current, &mut out)?;
        Ok(out.into_iter().filter(|m| self.is_normal(m)).collect())
    }

    fn enumerate(
        &self,
        idx: usize,
        remaining: u64,
        current: &mut Mono,
        out: &mut Vec<Mono>,
    ) -> Result<(), CechError> {
        if idx == self.gens.len() {
            if remaining == 0 {
                out.push(current.clone());
                if out.len() > BASIS_BUDGET {
                    return Err(CechError::TooLarge("graded piece too large".to_owned()));
                }
            }
            return Ok(());
        }
        let w = self.weights[idx];
        let max_e = remaining / w;
        for e in 0..=max_e {
            current[idx] = e as u32;
            self.enumerate(idx + 1, remaining - e * w, current, out)?;
        }
        current[idx] = 0;
        Ok(())
    }

    /// Whether every generator has a pure-power leading monomial: then the
    /// normal basis is finite, and (degrees being nonzero) every generator
    /// is nilpotent.
    pub fn finite_dimensional(&self) -> bool {
        (0..self.gens.len()).all(|i| {
            self.rules.iter().any(|(lhs, _)| {
                lhs.iter().enumerate().all(|(j, e)| if j == i { *e > 0 } else { *e == 0 })
            })
        })
    }

    /// All degrees that can carry a nonzero graded piece, for finite
    /// dimensional algebras.
    fn occupied_degrees(&self) -> Result<Vec<i64>, CechError> {
        let mut bound: u64 = 0;
        for i in 0..self.gens.len() {
            let cap = self
                .rules
                .iter()
                .filter(|(lhs, _)| {
                    lhs.iter().enumerate().all(|(j, e)| if j == i { *e > 0 } else { *e == 0 })
                })
                .map(|(lhs, _)| lhs[i])
                .min()
                .ok_or_else(|| CechError::Unsupported("not finite dimensional".to_owned()))?;
            bound += (cap as u64) * self.weights[i];
        }
        Ok((0..=bound as i64).map(|w| w * self.sign).collect())
    }

    fn elem_to_poly(&self, e: &RingElem) -> Result<Poly, CechError> {
        let mut p = Poly::new();
        for t in &e.terms {
            if t.pi_pow != 0 {
                return Err(CechError::Unsupported(
                    "uniformizer terms have no field-coefficient meaning".to_owned(),
                ));
            }
            let mut m = vec![0u32; self.gens.len()];
            for (name, exp) in &t.factors {
                let i = self.gen_index(name).ok_or_else(|| {
                    CechError::Unsupported(format!("element mentions unknown generator {name:?}"))
                })?;
                m[i] += exp;
            }
            let c = K::from_i64(self.field, t.coeff);
            let entry = p.entry(m).or_insert_with(|| K::zero(self.field));
            *entry = entry.add(&c);
            if entry.is_zero() {
                let dead: Vec<Mono> =
                    p.iter().filter(|(_, c)| c.is_zero()).map(|(m, _)| m.clone()).collect();
                for m in dead {
                    p.remove(&m);
                }
            }
        }
        Ok(p)
    }
}

/// Build and complete the oracle presentation of a field-coefficient
/// polynomial quotient with nonzero same-sign generator degrees.
pub fn algebra_from_expr(ring: &GradedRingExpr) -> Result<OracleAlgebra, CechError> {
    let field = match &ring.base {
        BaseRing::Fp(p) => FieldSpec::Fp(*p),
        BaseRing::Q => FieldSpec::Rational,
        other => return Err(CechError::NotAField(other.text())),
    };
    let mut gens: Vec<(String, i64)> = Vec::new();
    for layer in &ring.layers {
        match layer {
            Layer::Poly(vs) => {
                for g in vs {
                    if g.laurent {
                        return Err(CechError::Unsupported(format!(
                            "invertible generator {:?}",
                            g.name
                        )));
                    }
                    gens.push((g.name.clone(), g.degree));
                }
            }
            Layer::PowerSeries(_) => {
                return Err(CechError::Unsupported(
                    "power-series algebras are outside the oracle; the rule engine covers them"
                        .to_owned(),
                ))
            }
            Layer::Quotient(_) => {}
            Layer::LocalizeAway(_) => {
                return Err(CechError::Unsupported("localized algebras".to_owned()))
            }
        }
    }
    if gens.is_empty() {
        return Err(CechError::Unsupported("no generators to take cohomology over".to_owned()));
    }
    if gens.iter().any(|(_, d)| *d == 0) {
        return Err(CechError::MixedSigns("zero-degree generator".to_owned()));
    }
    let sign = if gens[0].1 > 0 { 1 } else { -1 };
    if gens.iter().any(|(_, d)| d.signum() as i64 != sign) {
        return Err(CechError::MixedSigns(
            "generator degrees must share one sign per run".to_owned(),
        ));
    }
    let weights: Vec<u64> = gens.iter().map(|(_, d)| d.unsigned_abs()).collect();
    let mut alg = OracleAlgebra { field, gens, weights, sign, rules: Vec::new() };
    for r in ring.relations() {
        let p = alg.elem_to_poly(r)?;
        let reduced = alg.nf(p)?;
        if let Some(rule) = alg.orient(reduced)? {
            alg.rules.push(rule);
        }
    }
    alg.complete()?;
    Ok(alg)
}

// ---------------------------------------------------------------------------
// Hilbert functions
// ---------------------------------------------------------------------------

/// Graded dimensions of the algebra by normal-monomial enumeration.
pub fn hilbert_function(
    ring: &GradedRingExpr,
    window: (i64, i64),
) -> Result<GradedHilbert, CechError> {
    let alg = algebra_from_expr(ring)?;
    hilbert_of_algebra(&alg, window)
}

fn hilbert_of_algebra(
    alg: &OracleAlgebra,
    window: (i64, i64),
) -> Result<GradedHilbert, CechError> {
    check_window(window)?;
    let mut h = GradedHilbert::new(window);
    for d in window.0..=window.1 {
        let n = alg.basis(d)?.len() as u64;
        h.ranks.insert(d, n);
    }
    Ok(h)
}

fn check_window(window: (i64, i64)) -> Result<(), CechError> {
    if window.0 > window.1 {
        return Err(CechError::TooLarge("empty window".to_owned()));
    }
    if window.1 - window.0 > 512 {
        return Err(CechError::TooLarge("window wider than the budget".to_owned()));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Truncated Čech complexes
// ---------------------------------------------------------------------------

/// The data of one oracle run: the algebra, the ideal generators (a subset
/// of at most four variables), the truncation, and the degree window.
#[derive(Debug, Clone)]
pub struct CechSetup {
    pub algebra: GradedRingExpr,
    pub ideal: Vec<String>,
    pub truncation: u32,
    pub window: (i64, i64),
}

/// Cohomology of the truncated complex, one Hilbert function per
/// cohomological degree `0..=ideal.len()`, with the stabilization
/// certificate (ranks at N and N + 1 agree on the window).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CechReport {
    pub cohomology: Vec<GradedHilbert>,
    pub truncation: u32,
    pub window: (i64, i64),
    pub stabilized: bool,
}

/// One basis vector of the degree-d piece of the localized summand indexed
/// by a subset S: a Laurent exponent vector, bounded below by -N on S and
/// by 0 elsewhere.
type LaurentMono = Vec<i64>;

struct CechDegreeSlice {
    /// Per subset (by index into `subsets`), the alive Laurent monomials.
    bases: Vec<Vec<LaurentMono>>,
}

struct CechMachine<'a> {
    alg: &'a OracleAlgebra,
    /// Indices of the inverted generators.
    ideal_idx: Vec<usize>,
    /// All subsets of the ideal, grouped by cardinality: subsets[j] lists
    /// the bitmasks with j bits set, in increasing mask order.
    subsets: Vec<Vec<u32>>,
    truncation: u32,
}

impl<'a> CechMachine<'a> {
    fn new(alg: &'a OracleAlgebra, ideal_idx: Vec<usize>, truncation: u32) -> Self {
        let n = ideal_idx.len();
        let mut subsets: Vec<Vec<u32>> = vec![Vec::new(); n + 1];
        for mask in 0u32..(1 << n) {
            subsets[mask.count_ones() as usize].push(mask);
        }
        CechMachine { alg, ideal_idx, subsets, truncation }
    }

    fn inverted(&self, mask: u32, gen: usize) -> bool {
        self.ideal_idx
            .iter()
            .enumerate()
            .any(|(bit, g)| *g == gen && mask & (1 << bit) != 0)
    }

    /// A monomial survives in A[1/x_S] iff no relation's leading monomial
    /// divides it using only the non-inverted coordinates (powers of
    /// inverted variables can always be absorbed by the localization).
    fn alive(&self, mask: u32, e: &LaurentMono) -> bool {
        !self.alg.rules.iter().any(|(lhs, _)| {
            lhs.iter().enumerate().all(|(i, need)| {
                if *need == 0 {
                    true
                } else if self.inverted(mask, i) {
                    true
                } else {
                    e[i] >= *need as i64
                }
            })
        })
    }

    /// Enumerate the degree-d basis of the summand for `mask`.
    fn basis(&self, mask: u32, d: i64) -> Result<Vec<LaurentMono>, CechError> {
        let n = self.alg.gens.len();
        let mut lo = vec![0i64; n];
        for (bit, g) in self.ideal_idx.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                lo[*g] = -(self.truncation as i64);
            }
        }
        // Solve sum e_i * deg_i = d with e_i >= lo_i. Substitute
        // f_i = e_i - lo_i >= 0: sum f_i deg_i = d - sum lo_i deg_i.
        let offset: i64 = lo.iter().zip(&self.alg.gens).map(|(l, (_, deg))| l * deg).sum();
        let target = (d - offset) * self.alg.sign;
        let mut out: Vec<Mono> = Vec::new();
        if target < 0 {
            return Ok(Vec::new());
        }
        let mut current = vec![0u32; n];
        self.alg.enumerate(0, target as u64, &mut current, &mut out)?;
        Ok(out
            .into_iter()
            .map(|f| f.iter().zip(&lo).map(|(x, l)| *x as i64 + l).collect::<LaurentMono>())
            .filter(|e| self.alive(mask, e))
            .collect())
    }

    fn slice(&self, d: i64) -> Result<CechDegreeSlice, CechError> {
        let total = 1u32 << self.ideal_idx.len();
        let mut bases = Vec::with_capacity(total as usize);
        for mask in 0..total {
            bases.push(self.basis(mask, d)?);
        }
        Ok(CechDegreeSlice { bases })
    }

    /// Rank of the differential from cohomological degree j to j + 1 in one
    /// graded degree.
    fn differential_rank(&self, slice: &CechDegreeSlice, j: usize) -> usize {
        let sources = &self.subsets[j];
        let targets = &self.subsets[j + 1];
        // Column index per (mask, basis position).
        let mut col_of: BTreeMap<(u32, LaurentMono), usize> = BTreeMap::new();
        let mut ncols = 0;
        for mask in sources {
            for e in &slice.bases[*mask as usize] {
                col_of.insert((*mask, e.clone()), ncols);
                ncols += 1;
            }
        }
        if ncols == 0 {
            return 0;
        }
        let mut rows: Vec<Vec<K>> = Vec::new();
        for mask in targets {
            for e in &slice.bases[*mask as usize] {
                let mut row = vec![K::zero(self.alg.field); ncols];
                let mut nonzero = false;
                // The target subset drops one bit to give each source.
                for bit in 0..self.ideal_idx.len() {
                    if mask & (1 << bit) == 0 {
                        continue;
                    }
                    let source_mask = mask & !(1u32 << bit);
                    // Sign: parity of the inserted position among set bits.
                    let position = (mask & ((1 << bit) - 1)).count_ones();
                    if let Some(col) = col_of.get(&(source_mask, e.clone())) {
                        let sign = if position % 2 == 0 { 1 } else { -1 };
                        row[*col] = K::from_i64(self.alg.field, sign);
                        nonzero = true;
                    }
                }
                if nonzero {
                    rows.push(row);
                }
            }
        }
        rank(self.alg.field, rows)
    }

    fn cohomology_at(&self, d: i64) -> Result<Vec<u64>, CechError> {
        let slice = self.slice(d)?;
        let n = self.ideal_idx.len();
        let dims: Vec<usize> =
            (0..=n).map(|j| self.subsets[j].iter().map(|m| slice.bases[*m as usize].len()).sum()).collect();
        let ranks: Vec<usize> = (0..n).map(|j| self.differential_rank(&slice, j)).collect();
        let mut h = Vec::with_capacity(n + 1);
        for j in 0..=n {
            let below = if j == 0 { 0 } else { ranks[j - 1] };
            let here = if j == n { 0 } else { ranks[j] };
            h.push((dims[j] - below - here) as u64);
        }
        Ok(h)
    }
}

/// Compute the truncated Čech cohomology of `setup.algebra` with respect to
/// the listed variables, in the window, at truncations N and N + 1; error
/// unless the two agree everywhere (the stabilization certificate).
pub fn cech_cohomology(setup: &CechSetup) -> Result<CechReport, CechError> {
    check_window(setup.window)?;
    if setup.truncation < 1 {
        return Err(CechError::Unsupported("truncation must be at least 1".to_owned()));
    }
    let alg = algebra_from_expr(&setup.algebra)?;
    if setup.ideal.is_empty() || setup.ideal.len() > 4 {
        return Err(CechError::Unsupported(
            "the ideal must list between one and four variables".to_owned(),
        ));
    }
    let mut ideal_idx = Vec::new();
    for name in &setup.ideal {
        let i = alg.gen_index(name).ok_or_else(|| {
            CechError::Unsupported(format!("ideal generator {name:?} is not a variable"))
        })?;
        if ideal_idx.contains(&i) {
            return Err(CechError::Unsupported(format!("repeated ideal generator {name:?}")));
        }
        ideal_idx.push(i);
    }
    // Localizations of a non-monomial quotient have no monomial basis. The
    // finite-dimensional case still works: every generator has nonzero
    // degree, hence is nilpotent, hence every proper localization vanishes —
    // exactly what the divisibility rule below computes.
    let monomial_rules = alg.rules.iter().all(|(_, rhs)| rhs.is_empty());
    if !monomial_rules && !alg.finite_dimensional() {
        return Err(CechError::Unsupported(
            "non-monomial relations need a finite-dimensional algebra for the truncated complex"
                .to_owned(),
        ));
    }
    let run = |n: u32| -> Result<Vec<GradedHilbert>, CechError> {
        let machine = CechMachine::new(&alg, ideal_idx.clone(), n);
        let mut out: Vec<GradedHilbert> =
            (0..=ideal_idx.len()).map(|_| GradedHilbert::new(setup.window)).collect();
        for d in setup.window.0..=setup.window.1 {
            let h = machine.cohomology_at(d)?;
            for (j, v) in h.into_iter().enumerate() {
                out[j].ranks.insert(d, v);
            }
        }
        Ok(out)
    };
    let at_n = run(setup.truncation)?;
    let at_n1 = run(setup.truncation + 1)?;
    if at_n != at_n1 {
        return Err(CechError::NotStabilized { budget: setup.truncation });
    }
    Ok(CechReport {
        cohomology: at_n,
        truncation: setup.truncation,
        window: setup.window,
        stabilized: true,
    })
}

// ---------------------------------------------------------------------------
// Gorenstein certificates
// ---------------------------------------------------------------------------

/// The oracle's verdict on a claimed shift: local cohomology at the
/// irrelevant ideal vanishes away from the dimension, and the top piece
/// matches the Matlis-dual Hilbert function shifted by `nu`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GorensteinCertificate {
    pub vanishing: bool,
    pub matches: bool,
    pub nu: i64,
    pub window: (i64, i64),
    pub truncation: u32,
    pub passed: bool,
}

const TRUNCATION_BUDGET: u32 = 8;

/// Verify a claimed Gorenstein shift in a window, picking the smallest
/// truncation whose certificate fires (budget 8).
pub fn verify_gorenstein(
    ring: &GradedRingExpr,
    expected_nu: i64,
    window: (i64, i64),
) -> Result<GorensteinCertificate, CechError> {
    let mut last = Err(CechError::NotStabilized { budget: TRUNCATION_BUDGET });
    for n in 1..=TRUNCATION_BUDGET {
        match verify_gorenstein_at(ring, expected_nu, window, n) {
            Ok(cert) => return Ok(cert),
            Err(CechError::NotStabilized { .. }) => {
                last = Err(CechError::NotStabilized { budget: TRUNCATION_BUDGET });
            }
            Err(e) => return Err(e),
        }
    }
    last
}

/// Verify a claimed Gorenstein shift at an explicit truncation.
pub fn verify_gorenstein_at(
    ring: &GradedRingExpr,
    expected_nu: i64,
    window: (i64, i64),
    truncation: u32,
) -> Result<GorensteinCertificate, CechError> {
    let dim = crate::graded_rings::krull_dimension(ring)
        .map_err(|e| CechError::Unsupported(format!("dimension not certified: {e}")))? as usize;
    let ideal: Vec<String> = {
        let gens = ring.gens();
        gens.iter().filter(|(g, _)| !g.laurent).map(|(g, _)| g.name.clone()).collect()
    };
    let setup = CechSetup { algebra: ring.clone(), ideal, truncation, window };
    let report = cech_cohomology(&setup)?;
    let vanishing = report
        .cohomology
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != dim)
        .all(|(_, h)| h.is_zero_on_window());
    // Expected top piece: the Matlis dual of the algebra, shifted by nu:
    // (shifted dual)_d = dual_{d - nu} = A_{nu - d}.
    let reflected = (expected_nu - window.1, expected_nu - window.0);
    let a_hilbert = hilbert_function(ring, reflected)?;
    let dual = matlis_dual_hilbert(&a_hilbert);
    let top = report
        .cohomology
        .get(dim)
        .cloned()
        .unwrap_or_else(|| GradedHilbert::new(window));
    let matches = top.matches_shifted(&dual, expected_nu);
    Ok(GorensteinCertificate {
        vanishing,
        matches,
        nu: expected_nu,
        window,
        truncation: report.truncation,
        passed: vanishing && matches,
    })
}

// ---------------------------------------------------------------------------
// Helpers consumed by the structural calculus
// ---------------------------------------------------------------------------

/// Whether every generator is nilpotent (equivalently here: the algebra is
/// finite dimensional). `None` when the presentation is outside the
/// oracle's scope or completion fails.
pub fn all_vars_nilpotent(ring: &GradedRingExpr) -> Option<bool> {
    match algebra_from_expr(ring) {
        Ok(alg) => Some(alg.finite_dimensional()),
        Err(_) => None,
    }
}

/// Decide regularity of a sequence by iterated multiplication-injectivity:
/// at each step, multiplication by the element must be injective on every
/// graded piece (all pieces of a finite-dimensional algebra; a derived
/// degree window otherwise). A kernel vector is a definitive refutation;
/// injectivity across the window certifies the step.
pub fn regular_sequence_by_annihilators(
    ring: &GradedRingExpr,
    elems: &[RingElem],
) -> Result<bool, CechError> {
    let mut expr = ring.clone();
    for (step, elem) in elems.iter().enumerate() {
        let alg = algebra_from_expr(&expr)?;
        let poly = alg.elem_to_poly(elem)?;
        let reduced = alg.nf(poly)?;
        if reduced.is_empty() {
            return Ok(false); // the element is zero in the current quotient
        }
        let elem_degree = elem.degree;
        let degrees: Vec<i64> = if alg.finite_dimensional() {
            alg.occupied_degrees()?
        } else {
            let span: u64 = alg
                .rules
                .iter()
                .map(|(lhs, _)| alg.weight(lhs))
                .chain(core::iter::once(elem_degree.unsigned_abs() * 2))
                .sum::<u64>()
                + alg.weights.iter().sum::<u64>() * 4
                + 8;
            (0..=span as i64).map(|w| w * alg.sign).collect()
        };
        for d in degrees {
            let basis = alg.basis(d)?;
            if basis.is_empty() {
                continue;
            }
            let target = alg.basis(d + elem_degree)?;
            let col_of: BTreeMap<&Mono, usize> =
                target.iter().enumerate().map(|(i, m)| (m, i)).collect();
            // One row per source basis vector: coordinates of its image.
            let mut rows = Vec::with_capacity(basis.len());
            for b in &basis {
                let mut image = alg.scale_poly(&reduced, &K::from_i64(alg.field, 1), b);
                image = alg.nf(image)?;
                let mut row = vec![K::zero(alg.field); target.len().max(1)];
                for (m, c) in &image {
                    let col = col_of.get(m).ok_or_else(|| {
                        CechError::Unsupported("image leaves the normal basis".to_owned())
                    })?;
                    row[*col] = c.clone();
                }
                rows.push(row);
            }
            if rank(alg.field, rows) < basis.len() {
                return Ok(false);
            }
        }
        // Quotient by the element and continue.
        let _ = step;
        expr.layers.push(Layer::Quotient(vec![elem.clone()]));
    }
    Ok(true)
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring_dsl::parse_ring;

    fn ring(t: &str) -> GradedRingExpr {
        parse_ring(t).unwrap()
    }

    #[test]
    fn hilbert_of_polynomial_line() {
        let h = hilbert_function(&ring("Q[x:-2]"), (-6, 0)).unwrap();
        assert_eq!(h.rank_at(0), Some(1));
        assert_eq!(h.rank_at(-2), Some(1));
        assert_eq!(h.rank_at(-4), Some(1));
        assert_eq!(h.rank_at(-6), Some(1));
        assert_eq!(h.rank_at(-3), Some(0));
    }

    #[test]
    fn hilbert_of_truncated_line() {
        let h = hilbert_function(&ring("F_2[x:-2]/(x^4)"), (-8, 0)).unwrap();
        assert_eq!(h.rank_at(0), Some(1));
        assert_eq!(h.rank_at(-6), Some(1));
        assert_eq!(h.rank_at(-8), Some(0));
    }

    #[test]
    fn hilbert_of_plane_degree_minus_four() {
        let h = hilbert_function(&ring("Q[x:-2,y:-2]"), (-4, -4)).unwrap();
        assert_eq!(h.rank_at(-4), Some(3));
    }

    #[test]
    fn dual_reflects_and_involutes() {
        let h = hilbert_function(&ring("F_2[x:-2]/(x^4)"), (-8, 0)).unwrap();
        let d = matlis_dual_hilbert(&h);
        assert_eq!(d.rank_at(6), Some(1));
        assert_eq!(d.rank_at(0), Some(1));
        assert_eq!(d.rank_at(8), Some(0));
        assert_eq!(matlis_dual_hilbert(&d), h);
    }

    #[test]
    fn cech_of_the_line_is_inverse_polynomials() {
        let setup = CechSetup {
            algebra: ring("Q[x:-2]"),
            ideal: alloc::vec!["x".to_owned()],
            truncation: 6,
            window: (-4, 10),
        };
        let report = cech_cohomology(&setup).unwrap();
        assert!(report.cohomology[0].is_zero_on_window());
        let h1 = &report.cohomology[1];
        assert_eq!(h1.rank_at(2), Some(1));
        assert_eq!(h1.rank_at(4), Some(1));
        assert_eq!(h1.rank_at(10), Some(1));
        assert_eq!(h1.rank_at(0), Some(0));
        assert_eq!(h1.rank_at(-2), Some(0));
    }

    #[test]
    fn cech_of_artinian_is_identity() {
        let setup = CechSetup {
            algebra: ring("F_2[x:-2]/(x^4)"),
            ideal: alloc::vec!["x".to_owned()],
            truncation: 2,
            window: (-8, 2),
        };
        let report = cech_cohomology(&setup).unwrap();
        let h = hilbert_function(&ring("F_2[x:-2]/(x^4)"), (-8, 2)).unwrap();
        assert_eq!(report.cohomology[0], h);
        assert!(report.cohomology[1].is_zero_on_window());
    }

    #[test]
    fn cech_detects_non_cm_behavior() {
        let setup = CechSetup {
            algebra: ring("Q[x:-2,y:-2]/(x^2,x*y)"),
            ideal: alloc::vec!["x".to_owned(), "y".to_owned()],
            truncation: 5,
            window: (-6, 8),
        };
        let report = cech_cohomology(&setup).unwrap();
        // H^0 is the x-torsion: exactly the class of x in degree -2.
        assert_eq!(report.cohomology[0].rank_at(-2), Some(1));
        assert_eq!(
            report.cohomology[0].ranks.values().sum::<u64>(),
            1,
            "H^0 is one dimensional on this window"
        );
        assert!(!report.cohomology[1].is_zero_on_window());
    }

    #[test]
    fn gorenstein_certificate_for_the_line() {
        let cert = verify_gorenstein(&ring("Q[x:-2]"), 2, (-6, 8)).unwrap();
        assert!(cert.vanishing);
        assert!(cert.matches);
        assert!(cert.passed);
    }

    #[test]
    fn gorenstein_certificate_for_truncated_line() {
        let cert = verify_gorenstein(&ring("F_2[x:-2]/(x^4)"), -6, (-10, 4)).unwrap();
        assert!(cert.passed, "socle sits in degree -6");
        let off = verify_gorenstein(&ring("F_2[x:-2]/(x^4)"), -4, (-10, 4)).unwrap();
        assert!(!off.passed);
    }

    #[test]
    fn non_gorenstein_fails_every_nu() {
        for nu in [-6, -4, -2, 0, 2] {
            let cert = verify_gorenstein(&ring("Q[x:-2,y:-2]/(x^2,x*y)"), nu, (-6, 8)).unwrap();
            assert!(!cert.passed, "nu = {nu}");
        }
    }

    #[test]
    fn binomial_completion_closes() {
        let alg = algebra_from_expr(&ring("Q[x:-2,y:-2]/(x^2-y^2, x*y)")).unwrap();
        assert!(alg.finite_dimensional());
        // Basis: 1, x, y, y^2 (x^2 = y^2 identified, xy = 0, y^3 = 0).
        let h = hilbert_of_algebra(&alg, (-8, 0)).unwrap();
        assert_eq!(h.rank_at(0), Some(1));
        assert_eq!(h.rank_at(-2), Some(2));
        assert_eq!(h.rank_at(-4), Some(1));
        assert_eq!(h.rank_at(-6), Some(0));
    }

    #[test]
    fn nilpotence_detection() {
        assert_eq!(all_vars_nilpotent(&ring("F_2[x:-2]/(x^4)")), Some(true));
        assert_eq!(all_vars_nilpotent(&ring("Q[x:-2,y:-2]/(x^2-y^2, x*y)")), Some(true));
        assert_eq!(all_vars_nilpotent(&ring("Q[x:-2,y:-2]/(x^2-y^2)")), Some(false));
        assert_eq!(all_vars_nilpotent(&ring("Q[x:-2]")), Some(false));
        assert_eq!(all_vars_nilpotent(&ring("Z[v:2]")), None);
    }

    #[test]
    fn annihilator_route_decides_regularity() {
        let r = ring("Q[x:-2,y:-2]");
        let quotiented = ring("Q[x:-2,y:-2]/(x^2-y^2, x*y)");
        let elems: Vec<RingElem> = quotiented.relations().into_iter().cloned().collect();
        assert!(regular_sequence_by_annihilators(&r, &elems).unwrap());

        let art = ring("F_2[x:-2]");
        let x2 = RingElem::var_power("x", 2, -2);
        let x4 = RingElem::var_power("x", 4, -2);
        assert!(regular_sequence_by_annihilators(&art, &[x4.clone()]).unwrap());
        // x^2 is a zerodivisor mod x^4.
        let mut with_rel = art.clone();
        with_rel.layers.push(Layer::Quotient(alloc::vec![x4]));
        assert!(!regular_sequence_by_annihilators(&with_rel, &[x2]).unwrap());
    }

    #[test]
    fn stabilization_is_certified() {
        // A window reaching degree 10 needs exponents down to -5; N = 2 is
        // too small and must be reported, not guessed.
        let setup = CechSetup {
            algebra: ring("Q[x:-2]"),
            ideal: alloc::vec!["x".to_owned()],
            truncation: 2,
            window: (-4, 10),
        };
        assert_eq!(
            cech_cohomology(&setup).unwrap_err(),
            CechError::NotStabilized { budget: 2 }
        );
    }

    #[test]
    fn positive_degree_generators_work_too() {
        let h = hilbert_function(&ring("F_3[v:2]"), (0, 8)).unwrap();
        assert_eq!(h.rank_at(8), Some(1));
        assert_eq!(h.rank_at(7), Some(0));
        let cert = verify_gorenstein(&ring("F_3[v:2]"), -2, (-8, 6)).unwrap();
        assert!(cert.passed, "polynomial generator in degree +2 has shift -2");
    }
}
