//! Recovering local and global field data from a finite level of the
//! monoid: local monoids `O_P`, `O_P^x`, `O_P^*` cut out by idempotent
//! equations, the unit `sigma_P`, the reciprocity kernel, local rings, the
//! `U^(1)` identity and invariant-based field comparison.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::abelian::{EnumeratedGroup, GroupElem};
use crate::class_groups::{FinIdele, RayClassGroup};
use crate::dr_monoid::{DrElement, DrLevel};
use crate::error::{Error, Result};
use crate::field_core::{FieldData, FieldElement, IdealHNF, KElement, PrimeIdeal};
use crate::residue_ring::{LocalUnitGroup, ResidueElement, ResidueRing};

/// Precomputed data for local membership questions on one level.
pub struct LocalView<'a> {
    pub level: &'a DrLevel,
    /// For each ray class `s`, the units `u` with `rec(u) = s`.
    rec_fibers: Vec<Vec<ResidueElement>>,
    singletons: Vec<DrElement>,
}

impl<'a> LocalView<'a> {
    pub fn new(level: &'a DrLevel) -> Result<Self> {
        let g = level.class_group();
        let mut rec_fibers = vec![Vec::new(); level.ray.order() as usize];
        for u in level.ring().units() {
            rec_fibers[g.index_of(&level.ray.rec(u)?)].push(u);
        }
        let singletons = (0..level.supp().len())
            .map(|i| level.e_s(&BTreeSet::from([i])))
            .collect::<Result<Vec<_>>>()?;
        Ok(LocalView { level, rec_fibers, singletons })
    }

    fn check_prime(&self, p: usize) -> Result<()> {
        if p >= self.singletons.len() {
            return Err(Error::PrimeNotInSupport);
        }
        Ok(())
    }

    /// `x . e_empty = e_empty`.
    pub fn in_ohat(&self, x: DrElement) -> bool {
        let m = self.level;
        m.mul(x, m.e_empty()) == m.e_empty()
    }

    /// The first coordinates of all representatives `(rho', 1)` of `x`.
    pub fn trivial_class_reps(&self, x: DrElement) -> Vec<ResidueElement> {
        let m = self.level;
        let (rho, s) = m.pair(x);
        let s = m.class_group().index_of(&s);
        self.rec_fibers[s].iter().map(|&u| m.ring().mul(u, rho)).collect()
    }

    /// `in_ohat(x)` and `x . e_{q} = e_{q}` for every `q != p` in `supp(f)`.
    pub fn in_op(&self, x: DrElement, p: usize) -> Result<bool> {
        self.check_prime(p)?;
        let m = self.level;
        Ok(self.in_ohat(x)
            && self.singletons.iter().enumerate().all(|(q, &e)| q == p || m.mul(x, e) == e))
    }

    pub fn local_zero(&self, p: usize) -> Result<DrElement> {
        self.check_prime(p)?;
        let s: BTreeSet<usize> = (0..self.singletons.len()).filter(|&q| q != p).collect();
        self.level.e_s(&s)
    }

    pub fn in_op_units(&self, x: DrElement, p: usize) -> Result<bool> {
        Ok(self.in_op(x, p)? && self.level.omega(x) == self.level.identity())
    }

    pub fn in_op_star(&self, x: DrElement, p: usize) -> Result<bool> {
        Ok(self.in_op(x, p)? && x != self.local_zero(p)?)
    }

    /// Representatives `(rho', 1)` of `x` with `rho' = 1` at every `q != p`.
    pub fn local_reps(&self, x: DrElement, p: usize) -> Vec<ResidueElement> {
        let ring = self.level.ring();
        let one = FieldElement::ONE;
        self.trivial_class_reps(x)
            .into_iter()
            .filter(|&r| {
                (0..self.singletons.len()).all(|q| q == p || ring.local_ring(q).from_element(ring.local(r, q)) == ring.local_ring(q).from_element(one))
            })
            .collect()
    }

    /// Coordinate form of `in_op`: some representative `(rho, 1)` has
    /// `rho = 1` away from `p`.
    pub fn in_op_coordinates(&self, x: DrElement, p: usize) -> bool {
        !self.local_reps(x, p).is_empty()
    }

    pub fn in_op_units_coordinates(&self, x: DrElement, p: usize) -> bool {
        let ring = self.level.ring();
        self.local_reps(x, p).iter().any(|&r| ring.valuation_at(r, p) == 0)
    }

    pub fn in_op_star_coordinates(&self, x: DrElement, p: usize) -> bool {
        let ring = self.level.ring();
        let e = ring.factors[p].exponent;
        self.local_reps(x, p).iter().any(|&r| ring.valuation_at(r, p) < e)
    }

    /// All `x` in the image of `O_P^*`, by the idempotent equations.
    pub fn op_star_elements(&self, p: usize) -> Result<Vec<DrElement>> {
        let mut out = Vec::new();
        for x in self.level.elements() {
            if self.in_op_star(x, p)? {
                out.push(x);
            }
        }
        Ok(out)
    }

    /// Every `sigma` in `DR^x` with `x . sigma` in the image of `I_K`.
    pub fn sigma_of(&self, x: DrElement, p: usize) -> Result<SigmaResult> {
        if !self.in_op_star(x, p)? {
            return Err(Error::Invalid(format!("{} is not in the image of O_P^*", self.level.display(x))));
        }
        let m = self.level;
        let candidates: Vec<DrElement> = m.units().into_iter().filter(|&s| m.is_in_ik(m.mul(x, s))).collect();
        let oracle = self.sigma_oracle(x, p)?;
        Ok(SigmaResult {
            element: x,
            prime: m.supp()[p],
            count: candidates.len(),
            oracle_matches: candidates.len() == 1 && Some(candidates[0]) == oracle,
            oracle,
            candidates,
        })
    }

    /// `[1, idele_class(rho_P)^-1]` for a representative `(rho, 1)` of `x`
    /// with `rho = 1` away from `P`, read as the idele concentrated at `P`.
    pub fn sigma_oracle(&self, x: DrElement, p: usize) -> Result<Option<DrElement>> {
        let m = self.level;
        let Some(&rho) = self.local_reps(x, p).first() else {
            return Ok(None);
        };
        let prime = m.supp()[p];
        let v = FinIdele::single(prime, KElement::integral(m.ring().local(rho, p)));
        let s = m.class_group().neg(&m.ray.idele_class(&v)?);
        Ok(Some(m.element(m.ring().one(), &s)))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SigmaResult {
    pub element: DrElement,
    pub prime: PrimeIdeal,
    pub count: usize,
    pub candidates: Vec<DrElement>,
    pub oracle: Option<DrElement>,
    pub oracle_matches: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelVerdict {
    pub conductor: IdealHNF,
    pub class: GroupElem,
    pub trivial: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReciprocityReport {
    pub idele: FinIdele,
    pub levels: Vec<LevelVerdict>,
    /// Trivial at `f'` implies trivial at every listed `f | f'`.
    pub monotone: bool,
}

impl ReciprocityReport {
    pub fn in_kernel(&self) -> bool {
        self.levels.iter().all(|l| l.trivial)
    }

    pub fn first_rejection(&self) -> Option<IdealHNF> {
        self.levels.iter().find(|l| !l.trivial).map(|l| l.conductor)
    }
}

/// `reciprocity_image`: the class of `v` at every level.
pub fn reciprocity_image(v: &FinIdele, levels: &[RayClassGroup]) -> Result<ReciprocityReport> {
    let mut out = Vec::with_capacity(levels.len());
    for g in levels {
        let class = g.idele_class(v)?;
        out.push(LevelVerdict { conductor: g.modulus, trivial: g.group().is_zero(&class), class });
    }
    let monotone = out.iter().all(|big| {
        !big.trivial || out.iter().filter(|small| small.conductor.divides(&big.conductor)).all(|small| small.trivial)
    });
    Ok(ReciprocityReport { idele: v.clone(), levels: out, monotone })
}

/// `{alpha in O_K : N(alpha) <= bound}` without zero; contains the units.
pub fn norm_box(k: &FieldData, bound: i64) -> Result<Vec<FieldElement>> {
    let mut out = Vec::new();
    for n in 1..=bound {
        out.extend(k.elements_of_norm(n)?);
    }
    Ok(out)
}

/// Ideles that are not diagonal images of elements of `K^x`: a uniformizer
/// `pi` alone at one prime, and `1 + pi` alone at that prime.
pub fn designated_ideles(k: &FieldData, count: usize) -> Result<Vec<(String, FinIdele)>> {
    let mut primes: Vec<PrimeIdeal> = Vec::new();
    for p in crate::arith::primes_up_to(4 * count as i64 + 10) {
        primes.extend(k.primes_above(p)?);
    }
    primes.sort_by_key(|q| (q.norm(), *q));
    let mut out = Vec::new();
    for q in primes {
        let pi = KElement::integral(k.uniformizer(&q));
        out.push((format!("uniformizer {} at {q}", pi.num), FinIdele::single(q, pi)));
        if out.len() == count {
            break;
        }
        let u = KElement::integral(pi.num.add(FieldElement::ONE));
        out.push((format!("1 + pi = {} at {q}", u.num), FinIdele::single(q, u)));
        if out.len() == count {
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct DesignatedReport {
    pub label: String,
    pub idele: FinIdele,
    pub rejected_at: Option<IdealHNF>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    pub field: String,
    pub levels: Vec<IdealHNF>,
    pub box_size: usize,
    pub passed: Vec<FieldElement>,
    pub failed: Vec<FieldElement>,
    pub designated: Vec<DesignatedReport>,
    pub monotone: bool,
}

/// `recover_global`: box elements whose principal ideles lie in the kernel at
/// every level, plus the verdicts on designated non-global ideles.
pub fn recover_global(k: &FieldData, elements: &[FieldElement], levels: &[RayClassGroup], designated: usize) -> Result<RecoveryReport> {
    let mut supp: Vec<PrimeIdeal> = levels.iter().flat_map(|g| g.modulus_primes()).collect();
    supp.sort();
    supp.dedup();
    let mut passed = Vec::new();
    let mut failed = Vec::new();
    let mut monotone = true;
    for &alpha in elements {
        let v = FinIdele::principal(k, KElement::integral(alpha), &supp)?;
        let r = reciprocity_image(&v, levels)?;
        monotone &= r.monotone;
        if r.in_kernel() {
            passed.push(alpha);
        } else {
            failed.push(alpha);
        }
    }
    let mut reports = Vec::new();
    for (label, v) in designated_ideles(k, designated)? {
        let r = reciprocity_image(&v, levels)?;
        monotone &= r.monotone;
        reports.push(DesignatedReport { label, rejected_at: r.first_rejection(), idele: v });
    }
    Ok(RecoveryReport {
        field: k.label(),
        levels: levels.iter().map(|g| g.modulus).collect(),
        box_size: elements.len(),
        passed,
        failed,
        designated: reports,
        monotone,
    })
}

/// `alpha in O_{K,P}`, i.e. `v_P(alpha) >= 0`.
pub fn local_ring_intersection(k: &FieldData, alpha: &KElement, p: &PrimeIdeal) -> bool {
    k.valuation_k(p, alpha) >= 0
}

/// Residue of a `P`-integral `alpha` modulo `P^e`, as an element of `ring`
/// (whose modulus is `P^e`).
pub fn local_residue(k: &FieldData, ring: &ResidueRing, alpha: &KElement) -> Option<ResidueElement> {
    let p = ring.factors[0].prime;
    if k.valuation_k(&p, alpha) < 0 {
        return None;
    }
    let extra = k.valuation(&p, FieldElement::int(alpha.den));
    let wide = k.ideal_mul(&ring.modulus, &k.ideal_pow(&p.ideal, extra));
    ring.elements().find(|&r| wide.contains(ring.lift(r).scale(alpha.den).sub(alpha.num)))
}

/// The image of a `P`-integral `alpha` in `DR_{K,f}` for `P | f`: the element
/// `[rho, 1]` with `rho = alpha` at `P` and `1` elsewhere.
pub fn local_image(level: &DrLevel, alpha: &KElement, p: usize) -> Option<DrElement> {
    let ring = level.ring();
    let local = ring.local_ring(p);
    let r = local_residue(&level.field, &local, alpha)?;
    let mut locals = vec![FieldElement::ONE; level.supp().len()];
    locals[p] = local.lift(r);
    Some(level.element(ring.from_locals(&locals), &level.class_group().zero()))
}

/// Elements of `candidates` lying in `O_{K,P}` for every listed prime.
pub fn integral_at_all(k: &FieldData, candidates: &[KElement], primes: &[PrimeIdeal]) -> Vec<KElement> {
    candidates
        .iter()
        .filter(|a| primes.iter().all(|p| local_ring_intersection(k, a, p)))
        .copied()
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct U1Report {
    pub prime: PrimeIdeal,
    pub exponent: u32,
    pub unit_count: usize,
    pub powers_count: usize,
    pub kernel_count: usize,
    pub identity_holds: bool,
    /// Box elements checked for `alpha in 1 + P O_{K,P}` against membership
    /// of their residue in the `(N P - 1)`-th powers.
    pub box_checked: usize,
    pub box_disagreements: Vec<KElement>,
}

/// `verify_u1_identity`: `(O/P^e)^x` raised to `N P - 1` equals the kernel of
/// reduction mod `P`.
pub fn verify_u1_identity(k: &FieldData, p: &PrimeIdeal, e: u32, sample: &[KElement]) -> Result<U1Report> {
    let local = LocalUnitGroup::new(k, p, e)?;
    let powers = local.u1_subgroup();
    let kernel = local.reduction_kernel();
    let mut disagreements = Vec::new();
    let mut checked = 0;
    for alpha in sample {
        if alpha.num.is_zero() {
            continue;
        }
        let Some(r) = local_residue(k, &local.ring, alpha) else { continue };
        checked += 1;
        let one = KElement::integral(FieldElement::ONE);
        let diff = KElement::ratio(alpha.num.sub(one.num.scale(alpha.den)), alpha.den);
        let in_one_plus_p = diff.num.is_zero() || k.valuation_k(p, &diff) >= 1;
        if in_one_plus_p != powers.contains(&r) {
            disagreements.push(*alpha);
        }
    }
    Ok(U1Report {
        prime: *p,
        exponent: e,
        unit_count: local.units().len(),
        powers_count: powers.len(),
        kernel_count: kernel.len(),
        identity_holds: powers == kernel,
        box_checked: checked,
        box_disagreements: disagreements,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalDatum {
    pub prime: PrimeIdeal,
    pub norm: i64,
    pub exponent: u32,
    /// `[(O/P^e)^x : U^(1)]`, which is `N P - 1`.
    pub u1_index: usize,
}

/// The local data `(P, N P, O^<_{K,P})` at level `P^e` for the given primes.
pub fn hoshi_data(k: &FieldData, primes: &[PrimeIdeal], e: u32) -> Result<Vec<LocalDatum>> {
    primes
        .iter()
        .map(|p| {
            let local = LocalUnitGroup::new(k, p, e)?;
            Ok(LocalDatum {
                prime: *p,
                norm: p.norm(),
                exponent: e,
                u1_index: local.units().len() / local.u1_subgroup().len(),
            })
        })
        .collect()
}

/// Isomorphism invariants of one level, computed from the monoid structure.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct LevelInvariants {
    pub elements: usize,
    pub idempotents: usize,
    pub maximal_idempotents: usize,
    pub unit_group: Vec<i64>,
    /// `(|O_P^x image|, |O_P^* image|)` per maximal idempotent, sorted.
    pub local_units: Vec<(usize, usize)>,
    pub ik_image: usize,
}

pub fn level_invariants(m: &DrLevel) -> Result<LevelInvariants> {
    let view = LocalView::new(m)?;
    let units = m.units();
    let unit_group = EnumeratedGroup::from_elements(m.identity(), &units, |a, b| m.mul(*a, *b));
    let idempotents = m.all_idempotents();
    let mut local_units = Vec::new();
    for (_, label) in m.maximal_idempotents() {
        let p = m.ring().factor_index(&label)?;
        let mut n_units = 0;
        let mut n_star = 0;
        for x in m.elements() {
            if view.in_op_star(x, p)? {
                n_star += 1;
                if m.omega(x) == m.identity() {
                    n_units += 1;
                }
            }
        }
        local_units.push((n_units, n_star));
    }
    local_units.sort();
    Ok(LevelInvariants {
        elements: m.size(),
        idempotents: idempotents.len(),
        maximal_idempotents: idempotents.iter().filter(|r| r.maximal).count(),
        unit_group: unit_group.group.invariants,
        local_units,
        ik_image: m.ik_image().len(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NormComparison {
    pub norm: i64,
    pub left: Vec<(IdealHNF, LevelInvariants)>,
    pub right: Vec<(IdealHNF, LevelInvariants)>,
    pub differs: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Distinguished,
    IndistinguishableAtTestedLevels,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub left: String,
    pub right: String,
    pub norms: Vec<NormComparison>,
    pub verdict: Verdict,
}

/// Conductors of norm `n` used for comparisons: every integral ideal of that
/// norm.
pub fn conductors_of_norm(k: &FieldData, n: i64) -> Vec<IdealHNF> {
    k.ideals_of_norm(n)
}

/// `compare_fields` over all conductors of each listed norm.
pub fn compare_fields(k: &FieldData, l: &FieldData, norms: &[i64]) -> Result<ComparisonReport> {
    let side = |f: &FieldData, n: i64| -> Result<Vec<(IdealHNF, LevelInvariants)>> {
        conductors_of_norm(f, n)
            .into_iter()
            .map(|c| Ok((c, level_invariants(&DrLevel::build(f, c)?)?)))
            .collect()
    };
    let mut out = Vec::new();
    for &n in norms {
        let left = side(k, n)?;
        let right = side(l, n)?;
        let multiset = |v: &[(IdealHNF, LevelInvariants)]| {
            let mut m: BTreeMap<LevelInvariants, usize> = BTreeMap::new();
            for (_, inv) in v {
                *m.entry(inv.clone()).or_default() += 1;
            }
            m
        };
        let differs = multiset(&left) != multiset(&right);
        out.push(NormComparison { norm: n, left, right, differs });
    }
    let verdict = if out.iter().any(|c| c.differs) {
        Verdict::Distinguished
    } else {
        Verdict::IndistinguishableAtTestedLevels
    };
    Ok(ComparisonReport { left: k.label(), right: l.label(), norms: out, verdict })
}
