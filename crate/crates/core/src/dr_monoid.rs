//! Finite levels `DR_{K,f} = (O/f x Cl_f) / (O/f)^x` of the Deligne-Ribet
//! monoid, with `u.(rho, s) = (u rho, s - rec(u))`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::abelian::{FiniteAbelianGroup, GroupElem};
use crate::class_groups::{self, FinIdele, RayClassGroup};
use crate::error::{Error, Result};
use crate::field_core::{FieldData, FieldElement, IdealHNF, PrimeIdeal};
use crate::residue_ring::{ResidueElement, ResidueRing};

/// Index of a canonical orbit in its level; elements are numbered in the
/// lexicographic order of their canonical pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DrElement(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdempotentRecord {
    pub element: DrElement,
    /// Indices into `supp(f)` of the primes where `rho` is a unit.
    pub subset: Vec<usize>,
    pub maximal: bool,
}

#[derive(Debug)]
pub struct DrLevel {
    pub field: FieldData,
    pub conductor: IdealHNF,
    pub ray: RayClassGroup,
    /// raw pair index (rho * |Cl_f| + s) -> element
    canon: Vec<u32>,
    /// element -> canonical raw index
    reps: Vec<u32>,
    /// `s + t` on class indices, when `|Cl_f|^2` is small enough to tabulate
    class_add: Option<Vec<u32>>,
    ik_image: BTreeSet<DrElement>,
}

struct UnionFind(Vec<u32>);

impl UnionFind {
    fn find(&mut self, mut x: u32) -> u32 {
        while self.0[x as usize] != x {
            let next = self.0[x as usize];
            self.0[x as usize] = self.0[next as usize];
            x = next;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        // keep the smaller index as root so roots are orbit minima
        if ra < rb {
            self.0[rb as usize] = ra;
        } else if rb < ra {
            self.0[ra as usize] = rb;
        }
    }
}

impl DrLevel {
    pub fn build(k: &FieldData, conductor: IdealHNF) -> Result<Self> {
        Self::from_ray(class_groups::ray_class_group(k, conductor)?)
    }

    pub fn from_ray(ray: RayClassGroup) -> Result<Self> {
        let ring = &ray.ring;
        let h = ray.order() as usize;
        let raw = ring.size() as u64 * h as u64;
        if raw > ray.field.bounds.orbit_cap {
            return Err(Error::CapExceeded { what: "orbit", size: raw, cap: ray.field.bounds.orbit_cap });
        }
        let g = ray.group();
        let mut uf = UnionFind((0..raw as u32).collect());
        for &u in &ray.units.generators {
            let r = ray.rec(u)?;
            let shift: Vec<u32> = (0..h).map(|s| g.index_of(&g.sub(&g.from_index(s), &r)) as u32).collect();
            for rho in ring.elements() {
                let urho = ring.mul(u, rho).0 as usize;
                for s in 0..h {
                    uf.union((rho.0 as usize * h + s) as u32, (urho * h + shift[s] as usize) as u32);
                }
            }
        }
        let mut canon = vec![u32::MAX; raw as usize];
        let mut reps = Vec::new();
        for i in 0..raw as u32 {
            let root = uf.find(i);
            if root == i {
                canon[i as usize] = reps.len() as u32;
                reps.push(i);
            } else {
                canon[i as usize] = canon[root as usize];
            }
        }
        let mut level = DrLevel {
            field: ray.field.clone(),
            conductor: ray.modulus,
            ray,
            canon,
            reps,
            class_add: None,
            ik_image: BTreeSet::new(),
        };
        if h * h <= 1 << 22 {
            let g = level.class_group();
            let elems: Vec<GroupElem> = (0..h).map(|i| g.from_index(i)).collect();
            let table = (0..h * h).map(|i| g.index_of(&g.add(&elems[i / h], &elems[i % h])) as u32).collect();
            level.class_add = Some(table);
        }
        level.ik_image = level.compute_ik_image()?;
        Ok(level)
    }

    pub fn ring(&self) -> &ResidueRing {
        &self.ray.ring
    }

    pub fn class_group(&self) -> &FiniteAbelianGroup {
        self.ray.group()
    }

    pub fn supp(&self) -> Vec<PrimeIdeal> {
        self.ray.ring.primes()
    }

    pub fn size(&self) -> usize {
        self.reps.len()
    }

    pub fn raw_size(&self) -> usize {
        self.canon.len()
    }

    pub fn elements(&self) -> impl Iterator<Item = DrElement> {
        (0..self.reps.len() as u32).map(DrElement)
    }

    fn h(&self) -> usize {
        self.ray.order() as usize
    }

    /// Canonical element of the orbit of `(rho, s)`.
    pub fn element(&self, rho: ResidueElement, s: &[i64]) -> DrElement {
        self.element_from_index(rho, self.class_group().index_of(s))
    }

    fn element_from_index(&self, rho: ResidueElement, s: usize) -> DrElement {
        DrElement(self.canon[rho.0 as usize * self.h() + s])
    }

    /// The canonical pair `(rho, s)`.
    pub fn pair(&self, x: DrElement) -> (ResidueElement, GroupElem) {
        let (rho, s) = self.pair_index(x);
        (rho, self.class_group().from_index(s))
    }

    fn pair_index(&self, x: DrElement) -> (ResidueElement, usize) {
        let raw = self.reps[x.0 as usize] as usize;
        (ResidueElement((raw / self.h()) as u32), raw % self.h())
    }

    pub fn rho(&self, x: DrElement) -> ResidueElement {
        self.pair_index(x).0
    }

    /// Every raw pair in the orbit of `x`.
    pub fn orbit(&self, x: DrElement) -> Vec<(ResidueElement, GroupElem)> {
        let h = self.h();
        (0..self.canon.len())
            .filter(|&i| self.canon[i] == x.0)
            .map(|i| (ResidueElement((i / h) as u32), self.class_group().from_index(i % h)))
            .collect()
    }

    pub fn identity(&self) -> DrElement {
        self.element_from_index(self.ring().one(), 0)
    }

    pub fn e_empty(&self) -> DrElement {
        self.element_from_index(self.ring().zero(), 0)
    }

    pub fn mul(&self, x: DrElement, y: DrElement) -> DrElement {
        let (r1, s1) = self.pair_index(x);
        let (r2, s2) = self.pair_index(y);
        let rho = self.ring().mul(r1, r2);
        match &self.class_add {
            Some(t) => self.element_from_index(rho, t[s1 * self.h() + s2] as usize),
            None => {
                let g = self.class_group();
                self.element(rho, &g.add(&g.from_index(s1), &g.from_index(s2)))
            }
        }
    }

    pub fn pow(&self, x: DrElement, mut k: u64) -> DrElement {
        let mut acc = self.identity();
        let mut b = x;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            k >>= 1;
        }
        acc
    }

    /// Index and period of the cyclic subsemigroup generated by `x`.
    pub fn index_period(&self, x: DrElement) -> (u64, u64) {
        let mut seen = std::collections::HashMap::new();
        let mut cur = x;
        let mut n = 1u64;
        loop {
            if let Some(&first) = seen.get(&cur) {
                return (first, n - first);
            }
            seen.insert(cur, n);
            cur = self.mul(cur, x);
            n += 1;
        }
    }

    /// The idempotent power `x^omega`.
    pub fn omega(&self, x: DrElement) -> DrElement {
        let (index, period) = self.index_period(x);
        self.pow(x, period * index.div_ceil(period))
    }

    pub fn is_idempotent(&self, x: DrElement) -> bool {
        self.mul(x, x) == x
    }

    pub fn is_unit(&self, x: DrElement) -> bool {
        self.ring().is_unit(self.rho(x))
    }

    /// `DR^x`, the elements with invertible `rho`.
    pub fn units(&self) -> Vec<DrElement> {
        self.elements().filter(|&x| self.is_unit(x)).collect()
    }

    /// `e_S = [1_S, 1]` for `S` given as indices into `supp(f)`.
    pub fn e_s(&self, s: &BTreeSet<usize>) -> Result<DrElement> {
        if s.iter().any(|&i| i >= self.supp().len()) {
            return Err(Error::PrimeNotInSupport);
        }
        Ok(self.element_from_index(self.ring().indicator(s), 0))
    }

    pub fn e_s_primes(&self, s: &[PrimeIdeal]) -> Result<DrElement> {
        let idx = s.iter().map(|p| self.ring().factor_index(p)).collect::<Result<BTreeSet<_>>>()?;
        self.e_s(&idx)
    }

    /// `S_e`: the primes of `supp(f)` where `rho_e` is a unit.
    pub fn classify_idempotent(&self, e: DrElement) -> Result<BTreeSet<usize>> {
        if !self.is_idempotent(e) {
            return Err(Error::NotIdempotent);
        }
        let rho = self.rho(e);
        Ok((0..self.supp().len()).filter(|&i| self.ring().valuation_at(rho, i) == 0).collect())
    }

    pub fn all_idempotents(&self) -> Vec<IdempotentRecord> {
        let n = self.supp().len();
        self.elements()
            .filter(|&x| self.is_idempotent(x))
            .map(|e| {
                let subset: Vec<usize> = self.classify_idempotent(e).expect("idempotent").into_iter().collect();
                IdempotentRecord { element: e, maximal: subset.len() + 1 == n, subset }
            })
            .collect()
    }

    pub fn idempotent_leq(&self, e: DrElement, f: DrElement) -> bool {
        self.mul(e, f) == e
    }

    /// Maximal idempotents with the prime of `supp(f)` they omit.
    pub fn maximal_idempotents(&self) -> Vec<(DrElement, PrimeIdeal)> {
        let supp = self.supp();
        self.all_idempotents()
            .into_iter()
            .filter(|r| r.maximal)
            .map(|r| {
                let missing = (0..supp.len()).find(|i| !r.subset.contains(i)).expect("one prime missing");
                (r.element, supp[missing])
            })
            .collect()
    }

    /// `[rho_a, idele_class(rho_a)^-1]` for the idele `rho_a` of uniformizer
    /// powers at the primes of `a`.
    pub fn ideal_to_dr(&self, a: &IdealHNF) -> Result<DrElement> {
        let k = &self.field;
        let v = FinIdele::of_ideal(k, a)?;
        let one = FieldElement::ONE;
        let locals: Vec<FieldElement> =
            self.supp().iter().map(|p| v.component(p).map_or(one, |e| e.num)).collect();
        let rho = self.ring().from_locals(&locals);
        let s = self.class_group().neg(&self.ray.idele_class(&v)?);
        Ok(self.element(rho, &s))
    }

    /// Submonoid generated by the images of the primes of `supp(f)`.
    fn compute_ik_image(&self) -> Result<BTreeSet<DrElement>> {
        let gens = self.supp().iter().map(|p| self.ideal_to_dr(&p.ideal)).collect::<Result<Vec<_>>>()?;
        let mut seen = BTreeSet::from([self.identity()]);
        let mut queue = VecDeque::from([self.identity()]);
        while let Some(x) = queue.pop_front() {
            for &g in &gens {
                let y = self.mul(x, g);
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        Ok(seen)
    }

    pub fn ik_image(&self) -> &BTreeSet<DrElement> {
        &self.ik_image
    }

    pub fn is_in_ik(&self, x: DrElement) -> bool {
        self.ik_image.contains(&x)
    }

    pub fn display(&self, x: DrElement) -> String {
        let (rho, s) = self.pair(x);
        let locals: Vec<String> = self.ring().locals(rho).iter().map(|e| e.to_string()).collect();
        let s: Vec<String> = s.iter().map(|c| c.to_string()).collect();
        format!("[({}), ({})]", locals.join(","), s.join(","))
    }

    pub fn to_json(&self) -> LevelDump {
        LevelDump {
            field: self.field.label(),
            discriminant: self.field.disc,
            conductor: self.conductor,
            conductor_norm: self.conductor.norm(),
            supp: self.supp(),
            ray_class_invariants: self.class_group().invariants.clone(),
            raw_pairs: self.raw_size(),
            elements: self
                .elements()
                .map(|x| {
                    let (rho, s) = self.pair(x);
                    ElementDump { index: x.0, rho: self.ring().locals(rho), s }
                })
                .collect(),
            units: self.units().iter().map(|x| x.0).collect(),
            ik_image: self.ik_image.iter().map(|x| x.0).collect(),
            idempotents: self.all_idempotents(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ElementDump {
    pub index: u32,
    /// Local components of `rho`, one per prime of `supp(f)`.
    pub rho: Vec<FieldElement>,
    pub s: GroupElem,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelDump {
    pub field: String,
    pub discriminant: i64,
    pub conductor: IdealHNF,
    pub conductor_norm: i64,
    pub supp: Vec<PrimeIdeal>,
    pub ray_class_invariants: Vec<i64>,
    pub raw_pairs: usize,
    pub elements: Vec<ElementDump>,
    pub units: Vec<u32>,
    pub ik_image: Vec<u32>,
    pub idempotents: Vec<IdempotentRecord>,
}

/// `build_dr` operation.
pub fn build_dr(k: &FieldData, conductor: IdealHNF) -> Result<DrLevel> {
    DrLevel::build(k, conductor)
}

/// The projection `DR_{K,f'} -> DR_{K,f}` for `f | f'`.
pub struct Transition<'a> {
    pub source: &'a DrLevel,
    pub target: &'a DrLevel,
    images: Vec<GroupElem>,
}

impl<'a> Transition<'a> {
    pub fn new(source: &'a DrLevel, target: &'a DrLevel) -> Result<Self> {
        if source.field != target.field {
            return Err(Error::LevelMismatch);
        }
        let images = source.ray.projection_images(&target.ray)?;
        Ok(Transition { source, target, images })
    }

    pub fn apply(&self, x: DrElement) -> DrElement {
        let (rho, s) = self.source.pair(x);
        let rho = self.source.ring().reduce_to(rho, self.target.ring());
        let s = class_groups::project(&self.images, self.target.class_group(), &s);
        self.target.element(rho, &s)
    }

    /// Index map from the source `supp` into the target `supp`.
    pub fn restrict_subset(&self, s: &BTreeSet<usize>) -> BTreeSet<usize> {
        let src = self.source.supp();
        let tgt = self.target.supp();
        s.iter().filter_map(|&i| tgt.iter().position(|p| *p == src[i])).collect()
    }
}

impl fmt::Display for DrElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q_level(n: i64) -> DrLevel {
        let q = FieldData::rational();
        build_dr(&q, q.int_ideal(n)).unwrap()
    }

    #[test]
    fn rational_level_four() {
        let m = q_level(4);
        assert_eq!(m.raw_size(), 8);
        assert_eq!(m.size(), 4);
        let reps: Vec<(i64, usize)> = m
            .elements()
            .map(|x| {
                let (rho, s) = m.pair(x);
                (m.ring().lift(rho).x, m.class_group().index_of(&s))
            })
            .collect();
        assert_eq!(reps, vec![(0, 0), (1, 0), (1, 1), (2, 0)]);
        let two = m.element(m.ring().from_int(2), &[0]);
        assert_eq!(m.mul(two, two), m.e_empty());
        assert_eq!(m.omega(two), m.e_empty());
        assert_eq!(m.all_idempotents().len(), 2);
    }

    #[test]
    fn ideal_images_rational() {
        let m = q_level(4);
        let q = &m.field;
        // (3) is coprime to 4: rho = 1 and s = P(3)^-1, the orbit of [3, 1]
        assert_eq!(m.ideal_to_dr(&q.int_ideal(3)).unwrap(), m.element(m.ring().from_int(3), &[0]));
        assert_eq!(m.ideal_to_dr(&IdealHNF::unit()).unwrap(), m.identity());
        let two = m.ideal_to_dr(&q.int_ideal(2)).unwrap();
        assert_eq!(m.ring().lift(m.rho(two)).x, 2);
        assert!(m.is_in_ik(two));
        assert!(!m.is_in_ik(m.element(m.ring().one(), &[1])));
    }

    #[test]
    fn gaussian_level_ten() {
        let k = FieldData::new(-4).unwrap();
        let m = build_dr(&k, k.int_ideal(10)).unwrap();
        assert_eq!(m.supp().len(), 3);
        assert_eq!(m.all_idempotents().len(), 8);
        let labels: Vec<i64> = m.maximal_idempotents().iter().map(|(_, p)| p.p).collect();
        assert_eq!(labels, vec![2, 5, 5]);
        assert_eq!(m.units().len() as u64, m.ray.order());
    }

    #[test]
    fn transitions_respect_idempotents() {
        let big = q_level(12);
        let small = q_level(4);
        let t = Transition::new(&big, &small).unwrap();
        for x in big.elements() {
            for y in big.elements() {
                assert_eq!(t.apply(big.mul(x, y)), small.mul(t.apply(x), t.apply(y)));
            }
        }
        let s = BTreeSet::from([1]);
        assert_eq!(t.apply(big.e_s(&s).unwrap()), small.e_s(&t.restrict_subset(&s)).unwrap());
    }
}
