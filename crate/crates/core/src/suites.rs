//! Verification suites run by `drm verify`: each check records how many
//! cases it examined and up to a few failing witnesses.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::class_groups::{FinIdele, RayClassGroup};
use crate::dr_monoid::{DrElement, DrLevel, Transition};
use crate::error::Result;
use crate::field_core::{FieldData, IdealHNF, KElement};
use crate::reconstruction::{self, LocalView};

const MAX_WITNESSES: usize = 5;

/// Levels up to this size are checked on all pairs or triples; larger ones
/// on seeded random samples.
pub const EXHAUSTIVE_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Idempotents,
    Omega,
    Local,
    Sigma,
    Reciprocity,
    U1,
    Transitions,
    All,
}

impl Suite {
    pub fn expand(self) -> Vec<Suite> {
        use Suite::*;
        match self {
            All => vec![Idempotents, Omega, Local, Sigma, Reciprocity, U1, Transitions],
            s => vec![s],
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub level: Option<IdealHNF>,
    pub checked: usize,
    pub failures: usize,
    pub passed: bool,
    pub witnesses: Vec<Value>,
}

impl Check {
    fn new(name: &str, level: Option<IdealHNF>) -> Self {
        Check { name: name.to_string(), level, checked: 0, failures: 0, passed: true, witnesses: Vec::new() }
    }

    fn record(&mut self, ok: bool, witness: impl FnOnce() -> Value) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
            self.passed = false;
            if self.witnesses.len() < MAX_WITNESSES {
                self.witnesses.push(witness());
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: Suite, checks: Vec<Check>) -> Self {
        SuiteReport { suite, passed: checks.iter().all(|c| c.passed), checks }
    }
}

/// Everything a suite may look at: the field, the tower of levels (sorted by
/// norm) and sampling parameters.
pub struct Context<'a> {
    pub field: &'a FieldData,
    pub tower: &'a [DrLevel],
    pub seed: u64,
    pub samples: usize,
    pub u1_norm: i64,
    pub box_norm: i64,
    pub reciprocity_norm: i64,
}

fn subsets(n: usize) -> Vec<BTreeSet<usize>> {
    (0..1u32 << n).map(|mask| (0..n).filter(|i| mask >> i & 1 == 1).collect()).collect()
}

fn el(m: &DrLevel, x: DrElement) -> Value {
    json!(m.display(x))
}

pub fn run(ctx: &Context, suite: Suite) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::Idempotents => per_level(ctx, idempotent_checks)?,
        Suite::Omega => per_level(ctx, |m| Ok(omega_checks(m, ctx.seed, ctx.samples)))?,
        Suite::Local => per_level(ctx, local_checks)?,
        Suite::Sigma => per_level(ctx, sigma_checks)?,
        Suite::Reciprocity => reciprocity_checks(ctx)?,
        Suite::U1 => u1_checks(ctx)?,
        Suite::Transitions => transition_checks(ctx)?,
        Suite::All => unreachable!("expanded by the caller"),
    };
    Ok(SuiteReport::new(suite, checks))
}

fn per_level(ctx: &Context, f: impl Fn(&DrLevel) -> Result<Vec<Check>>) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for m in ctx.tower {
        out.extend(f(m)?);
    }
    Ok(out)
}

pub fn idempotent_checks(m: &DrLevel) -> Result<Vec<Check>> {
    let lvl = Some(m.conductor);
    let n = m.supp().len();
    let records = m.all_idempotents();

    let mut count = Check::new("idempotent count is 2^|supp|", lvl);
    count.record(records.len() == 1 << n, || json!({"found": records.len(), "expected": 1usize << n}));

    let mut round = Check::new("classification round trip", lvl);
    for s in subsets(n) {
        let e = m.e_s(&s)?;
        let back = m.classify_idempotent(e)?;
        round.record(back == s, || json!({"subset": s, "classified": back}));
    }
    for r in &records {
        let s: BTreeSet<usize> = r.subset.iter().copied().collect();
        round.record(m.e_s(&s)? == r.element, || json!({"idempotent": m.display(r.element)}));
    }

    let mut product = Check::new("e_S e_T = e_(S and T)", lvl);
    let mut poset = Check::new("e_S <= e_T iff S is a subset of T", lvl);
    for s in subsets(n) {
        for t in subsets(n) {
            let (es, et) = (m.e_s(&s)?, m.e_s(&t)?);
            let meet: BTreeSet<usize> = s.intersection(&t).copied().collect();
            product.record(m.mul(es, et) == m.e_s(&meet)?, || json!({"S": s, "T": t}));
            poset.record(m.idempotent_leq(es, et) == s.is_subset(&t), || json!({"S": s, "T": t}));
        }
    }

    let mut maximal = Check::new("maximal idempotents are labelled by supp", lvl);
    let labels: Vec<_> = m.maximal_idempotents().into_iter().map(|(_, p)| p).collect();
    maximal.record(labels == m.supp(), || json!({"labels": labels, "supp": m.supp()}));
    Ok(vec![count, round, product, poset, maximal])
}

fn sample_tuples<const N: usize>(m: &DrLevel, seed: u64, samples: usize) -> Vec<[DrElement; N]> {
    let n = m.size();
    if n.pow(N as u32) <= EXHAUSTIVE_LIMIT.pow(N as u32).min(1 << 18) {
        let mut out = Vec::new();
        for i in 0..n.pow(N as u32) {
            let mut t = [DrElement(0); N];
            let mut r = i;
            for slot in t.iter_mut() {
                *slot = DrElement((r % n) as u32);
                r /= n;
            }
            out.push(t);
        }
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples).map(|_| std::array::from_fn(|_| DrElement(rng.gen_range(0..n as u32)))).collect()
}

pub fn omega_checks(m: &DrLevel, seed: u64, samples: usize) -> Vec<Check> {
    let lvl = Some(m.conductor);
    let one = m.identity();

    let mut assoc = Check::new("associativity", lvl);
    for [x, y, z] in sample_tuples::<3>(m, seed, samples) {
        assoc.record(m.mul(m.mul(x, y), z) == m.mul(x, m.mul(y, z)), || json!([el(m, x), el(m, y), el(m, z)]));
    }
    let mut comm = Check::new("commutativity", lvl);
    for [x, y] in sample_tuples::<2>(m, seed, samples) {
        comm.record(m.mul(x, y) == m.mul(y, x), || json!([el(m, x), el(m, y)]));
    }

    let mut idem = Check::new("omega is idempotent and stable", lvl);
    let mut inv = Check::new("omega(x) = 1 iff x is invertible", lvl);
    let omegas: Vec<DrElement> = m.elements().map(|x| m.omega(x)).collect();
    let invertible: BTreeSet<DrElement> = if m.size() <= 10_000 {
        m.elements().filter(|&x| m.elements().any(|y| m.mul(x, y) == one)).collect()
    } else {
        m.units().into_iter().collect()
    };
    for x in m.elements() {
        let w = omegas[x.0 as usize];
        idem.record(m.omega(w) == w && m.mul(w, w) == w, || el(m, x));
        inv.record((w == one) == invertible.contains(&x), || el(m, x));
    }
    vec![assoc, comm, idem, inv]
}

pub fn local_checks(m: &DrLevel) -> Result<Vec<Check>> {
    let lvl = Some(m.conductor);
    let view = LocalView::new(m)?;
    let mut ohat = Check::new("in_ohat matches representatives with trivial class", lvl);
    let mut op = Check::new("O_P: idempotent equations match coordinates", lvl);
    let mut units = Check::new("O_P^x: idempotent equations match coordinates", lvl);
    let mut star = Check::new("O_P^*: idempotent equations match coordinates", lvl);
    let mut chain = Check::new("O_P^x in O_P^* in O_P in O^", lvl);
    let mut zero = Check::new("local zero is the unique absorbing element of O_P", lvl);
    for x in m.elements() {
        let h = view.in_ohat(x);
        ohat.record(h == !view.trivial_class_reps(x).is_empty(), || el(m, x));
    }
    for p in 0..m.supp().len() {
        let prime = m.supp()[p];
        let mut o_p = Vec::new();
        for x in m.elements() {
            let (a, b, c) = (view.in_op(x, p)?, view.in_op_units(x, p)?, view.in_op_star(x, p)?);
            let w = || json!({"element": m.display(x), "prime": prime.to_string()});
            op.record(a == view.in_op_coordinates(x, p), w);
            units.record(b == view.in_op_units_coordinates(x, p), w);
            star.record(c == view.in_op_star_coordinates(x, p), w);
            chain.record((!b || c) && (!c || a) && (!a || view.in_ohat(x)), w);
            if a {
                o_p.push(x);
            }
        }
        let absorbing: Vec<DrElement> =
            o_p.iter().copied().filter(|&z| o_p.iter().all(|&y| m.mul(y, z) == z)).collect();
        let lz = view.local_zero(p)?;
        zero.record(absorbing == vec![lz], || json!({"prime": prime.to_string(), "absorbing": absorbing.len()}));
    }
    Ok(vec![ohat, op, units, star, chain, zero])
}

pub fn sigma_checks(m: &DrLevel) -> Result<Vec<Check>> {
    let lvl = Some(m.conductor);
    let view = LocalView::new(m)?;
    let mut unique = Check::new("exactly one sigma", lvl);
    let mut oracle = Check::new("sigma matches [1, rho_P^-1]", lvl);
    let mut mult = Check::new("sigma is multiplicative", lvl);
    for p in 0..m.supp().len() {
        let star = view.op_star_elements(p)?;
        let mut found = std::collections::BTreeMap::new();
        for &x in &star {
            let r = view.sigma_of(x, p)?;
            let w = || json!({"element": m.display(x), "prime": r.prime.to_string(), "count": r.count,
                              "candidates": r.candidates.iter().map(|&c| m.display(c)).collect::<Vec<_>>()});
            unique.record(r.count == 1, w);
            oracle.record(r.oracle_matches, w);
            if r.count == 1 {
                found.insert(x, r.candidates[0]);
            }
        }
        for (&x, &sx) in &found {
            for (&y, &sy) in &found {
                if let Some(&sxy) = found.get(&m.mul(x, y)) {
                    mult.record(sxy == m.mul(sx, sy), || json!([el(m, x), el(m, y)]));
                }
            }
        }
    }
    Ok(vec![unique, oracle, mult])
}

/// Levels for the kernel tests: the tower plus every conductor of norm up to
/// `ctx.reciprocity_norm`.
fn reciprocity_levels(ctx: &Context) -> Result<Vec<RayClassGroup>> {
    let mut conductors: BTreeSet<IdealHNF> = ctx.tower.iter().map(|m| m.conductor).collect();
    for n in 1..=ctx.reciprocity_norm {
        conductors.extend(ctx.field.ideals_of_norm(n));
    }
    conductors.into_iter().map(|c| RayClassGroup::new(ctx.field, c)).collect()
}

fn reciprocity_checks(ctx: &Context) -> Result<Vec<Check>> {
    let k = ctx.field;
    let levels = reciprocity_levels(ctx)?;
    let elements = reconstruction::norm_box(k, ctx.box_norm)?;
    let report = reconstruction::recover_global(k, &elements, &levels, 6)?;

    let mut kernel = Check::new("box elements lie in the kernel at every level", None);
    for a in &elements {
        kernel.record(report.passed.contains(a), || json!(a.to_string()));
    }
    let mut designated = Check::new("designated non-global ideles are rejected", None);
    for d in &report.designated {
        designated.record(d.rejected_at.is_some(), || json!(d.label));
    }
    let mut mono = Check::new("verdicts are monotone under refinement", None);
    mono.record(report.monotone, || json!(null));

    let mut shift = Check::new("idele class is independent of the approximant", None);
    for g in &levels {
        for (_, v) in reconstruction::designated_ideles(k, 6)? {
            let base = g.idele_class(&v)?;
            for t in [(1, 0), (0, 1), (2, 3)] {
                if let Ok(c) = g.idele_class_with_shift(&v, t) {
                    shift.record(c == base, || json!({"level": g.modulus, "shift": [t.0, t.1]}));
                }
            }
        }
    }
    let mut rec = Check::new("unit ideles evaluate to rec", None);
    for g in &levels {
        for &u in &g.units.generators {
            let comps = g
                .modulus_primes()
                .into_iter()
                .map(|p| (p, KElement::integral(g.ring.lift(u))))
                .collect();
            let v = FinIdele::from_components(comps);
            rec.record(g.idele_class(&v)? == g.rec(u)?, || json!({"level": g.modulus}));
        }
    }
    Ok(vec![kernel, designated, mono, shift, rec])
}

/// Sample for the `1 + P O_{K,P}` comparison: small integral elements and
/// fractions with small denominators.
pub fn u1_sample(k: &FieldData) -> Result<Vec<KElement>> {
    let mut out: Vec<KElement> = reconstruction::norm_box(k, 30)?.into_iter().map(KElement::integral).collect();
    for a in reconstruction::norm_box(k, 10)? {
        for d in 2..=6 {
            out.push(KElement::ratio(a, d));
        }
    }
    Ok(out)
}

fn u1_checks(ctx: &Context) -> Result<Vec<Check>> {
    let k = ctx.field;
    let sample = u1_sample(k)?;
    let mut ident = Check::new("(N P - 1)-th powers equal U^(1)", None);
    let mut membership = Check::new("1 + P O_(K,P) matches U^(1) residues", None);
    for (p, e) in prime_powers(k, ctx.u1_norm)? {
        let r = reconstruction::verify_u1_identity(k, &p, e, if p.norm().pow(e) <= 1000 { &sample } else { &[] })?;
        ident.record(r.identity_holds, || json!({"prime": p.to_string(), "exponent": e}));
        for a in &r.box_disagreements {
            membership.record(false, || json!({"prime": p.to_string(), "exponent": e, "element": a}));
        }
        membership.checked += r.box_checked - r.box_disagreements.len();
    }
    Ok(vec![ident, membership])
}

/// Every `(P, e)` with `N(P)^e <= bound`.
pub fn prime_powers(k: &FieldData, bound: i64) -> Result<Vec<(crate::field_core::PrimeIdeal, u32)>> {
    let mut out = Vec::new();
    for p in crate::arith::primes_up_to(bound) {
        for q in k.primes_above(p)? {
            let mut e = 1;
            while q.norm().checked_pow(e).is_some_and(|n| n <= bound) {
                out.push((q, e));
                e += 1;
            }
        }
    }
    Ok(out)
}

fn transition_checks(ctx: &Context) -> Result<Vec<Check>> {
    let k = ctx.field;
    let mut hom = Check::new("transition is a monoid homomorphism", None);
    let mut omega = Check::new("transition commutes with omega", None);
    let mut idem = Check::new("transition sends e_S to e_(S restricted)", None);
    let mut ideals = Check::new("transition commutes with ideal_to_dr", None);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    for big in ctx.tower {
        for small in ctx.tower {
            if big.conductor == small.conductor || !small.conductor.divides(&big.conductor) {
                continue;
            }
            let t = Transition::new(big, small)?;
            let w = || json!({"from": big.conductor, "to": small.conductor});
            hom.record(t.apply(big.identity()) == small.identity(), w);
            for [x, y] in sample_tuples::<2>(big, rng.gen(), ctx.samples) {
                hom.record(t.apply(big.mul(x, y)) == small.mul(t.apply(x), t.apply(y)), w);
            }
            for x in big.elements() {
                omega.record(t.apply(big.omega(x)) == small.omega(t.apply(x)), w);
            }
            for s in subsets(big.supp().len()) {
                idem.record(t.apply(big.e_s(&s)?) == small.e_s(&t.restrict_subset(&s))?, w);
            }
            let mut test_ideals: Vec<IdealHNF> = big.supp().iter().map(|p| p.ideal).collect();
            for n in 1..=20 {
                test_ideals.extend(k.ideals_of_norm(n));
            }
            for a in test_ideals {
                ideals.record(t.apply(big.ideal_to_dr(&a)?) == small.ideal_to_dr(&a)?, w);
            }
        }
    }
    Ok(vec![hom, omega, idem, ideals])
}
