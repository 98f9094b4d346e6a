//! `O_K / f` with its CRT decomposition into local rings `O_K / P^e`.

use std::collections::BTreeSet;

use crate::abelian::EnumeratedGroup;
use crate::error::{Error, Result};
use crate::field_core::{FieldData, FieldElement, IdealHNF, PrimeIdeal};

/// One CRT factor `O_K / P^e`.
#[derive(Debug, Clone)]
pub struct LocalFactor {
    pub prime: PrimeIdeal,
    pub exponent: u32,
    pub modulus: IdealHNF,
    /// `P^k` for `k = 0..=e`.
    powers: Vec<IdealHNF>,
}

impl LocalFactor {
    pub fn size(&self) -> usize {
        self.modulus.norm() as usize
    }

    /// Canonical lift `(x, y)` with index `x * c + y`.
    fn index(&self, e: FieldElement) -> usize {
        let r = self.modulus.reduce(e);
        (r.x * self.modulus.c + r.y) as usize
    }

    fn element(&self, i: usize) -> FieldElement {
        let c = self.modulus.c as usize;
        FieldElement::new((i / c) as i64, (i % c) as i64)
    }

    fn valuation(&self, e: FieldElement) -> u32 {
        (1..=self.exponent).rev().find(|&k| self.powers[k as usize].contains(e)).unwrap_or(0)
    }
}

/// An element of a `ResidueRing`, identified with its tuple of local
/// residues through a mixed-radix index (first factor most significant,
/// each local lift ordered lexicographically by `(x, y)`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ResidueElement(pub u32);

#[derive(Debug, Clone)]
pub struct ResidueRing {
    pub field: FieldData,
    pub modulus: IdealHNF,
    pub factors: Vec<LocalFactor>,
    strides: Vec<usize>,
    size: usize,
    lift: Vec<FieldElement>,
}

impl ResidueRing {
    pub fn new(field: &FieldData, modulus: IdealHNF) -> Result<Self> {
        let cap = field.bounds.conductor_norm_cap;
        if modulus.norm() > cap {
            return Err(Error::CapExceeded { what: "conductor norm", size: modulus.norm() as u64, cap: cap as u64 });
        }
        Self::new_uncapped(field, modulus)
    }

    /// Same as `new` without the conductor cap; used for the auxiliary moduli
    /// of the approximation step.
    pub(crate) fn new_uncapped(field: &FieldData, modulus: IdealHNF) -> Result<Self> {
        let factors: Vec<LocalFactor> = field
            .ideal_factor(&modulus)?
            .into_iter()
            .map(|(prime, e)| {
                let powers: Vec<IdealHNF> = (0..=e).map(|k| field.ideal_pow(&prime.ideal, k)).collect();
                LocalFactor { prime, exponent: e, modulus: powers[e as usize], powers }
            })
            .collect();
        let mut strides = vec![1usize; factors.len()];
        for i in (0..factors.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * factors[i + 1].size();
        }
        let size: usize = factors.iter().map(|f| f.size()).product();
        assert_eq!(size as i64, modulus.norm(), "CRT sizes must multiply to the norm");
        let mut ring = ResidueRing {
            field: field.clone(),
            modulus,
            factors,
            strides,
            size,
            lift: Vec::new(),
        };
        let mut lift = vec![None; size];
        for x in 0..modulus.a {
            for y in 0..modulus.c {
                let e = FieldElement::new(x, y);
                let id = ring.from_element(e).0 as usize;
                assert!(lift[id].is_none(), "CRT map is not injective");
                lift[id] = Some(e);
            }
        }
        ring.lift = lift.into_iter().map(|e| e.expect("CRT map is surjective")).collect();
        Ok(ring)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn primes(&self) -> Vec<PrimeIdeal> {
        self.factors.iter().map(|f| f.prime).collect()
    }

    pub fn factor_index(&self, p: &PrimeIdeal) -> Result<usize> {
        self.factors.iter().position(|f| f.prime == *p).ok_or(Error::PrimeNotInSupport)
    }

    pub fn elements(&self) -> impl Iterator<Item = ResidueElement> {
        (0..self.size as u32).map(ResidueElement)
    }

    pub fn from_element(&self, e: FieldElement) -> ResidueElement {
        let id: usize = self.factors.iter().zip(&self.strides).map(|(f, s)| f.index(e) * s).sum();
        ResidueElement(id as u32)
    }

    pub fn from_int(&self, n: i64) -> ResidueElement {
        self.from_element(FieldElement::int(n))
    }

    /// Canonical global lift in the HNF box of the modulus.
    pub fn lift(&self, x: ResidueElement) -> FieldElement {
        self.lift[x.0 as usize]
    }

    fn local_index(&self, x: ResidueElement, i: usize) -> usize {
        (x.0 as usize / self.strides[i]) % self.factors[i].size()
    }

    pub fn local(&self, x: ResidueElement, i: usize) -> FieldElement {
        self.factors[i].element(self.local_index(x, i))
    }

    pub fn locals(&self, x: ResidueElement) -> Vec<FieldElement> {
        (0..self.factors.len()).map(|i| self.local(x, i)).collect()
    }

    pub fn from_locals(&self, locals: &[FieldElement]) -> ResidueElement {
        assert_eq!(locals.len(), self.factors.len());
        let id: usize = locals
            .iter()
            .zip(&self.factors)
            .zip(&self.strides)
            .map(|((&e, f), s)| f.index(e) * s)
            .sum();
        ResidueElement(id as u32)
    }

    fn zip_with(&self, x: ResidueElement, y: ResidueElement, op: impl Fn(FieldElement, FieldElement) -> FieldElement) -> ResidueElement {
        let mut id = 0usize;
        for (i, f) in self.factors.iter().enumerate() {
            id += f.index(op(self.local(x, i), self.local(y, i))) * self.strides[i];
        }
        ResidueElement(id as u32)
    }

    pub fn mul(&self, x: ResidueElement, y: ResidueElement) -> ResidueElement {
        self.zip_with(x, y, |a, b| self.field.mul(a, b))
    }

    pub fn add(&self, x: ResidueElement, y: ResidueElement) -> ResidueElement {
        self.zip_with(x, y, |a, b| a.add(b))
    }

    pub fn sub(&self, x: ResidueElement, y: ResidueElement) -> ResidueElement {
        self.zip_with(x, y, |a, b| a.sub(b))
    }

    pub fn pow(&self, x: ResidueElement, mut k: u64) -> ResidueElement {
        let mut r = self.one();
        let mut b = x;
        while k > 0 {
            if k & 1 == 1 {
                r = self.mul(r, b);
            }
            b = self.mul(b, b);
            k >>= 1;
        }
        r
    }

    pub fn zero(&self) -> ResidueElement {
        ResidueElement(0)
    }

    pub fn one(&self) -> ResidueElement {
        self.from_int(1)
    }

    /// `1_S`: one at the factors in `s`, zero elsewhere.
    pub fn indicator(&self, s: &BTreeSet<usize>) -> ResidueElement {
        let locals: Vec<FieldElement> = (0..self.factors.len())
            .map(|i| if s.contains(&i) { FieldElement::ONE } else { FieldElement::ZERO })
            .collect();
        self.from_locals(&locals)
    }

    /// `min(v_P(x), e_P)` at the `i`-th factor.
    pub fn valuation_at(&self, x: ResidueElement, i: usize) -> u32 {
        self.factors[i].valuation(self.local(x, i))
    }

    /// Truncated valuation at a prime of the support; `e_P` means `>= e_P`.
    pub fn truncated_valuation(&self, x: ResidueElement, p: &PrimeIdeal) -> Result<u32> {
        Ok(self.valuation_at(x, self.factor_index(p)?))
    }

    pub fn is_unit(&self, x: ResidueElement) -> bool {
        (0..self.factors.len()).all(|i| self.valuation_at(x, i) == 0)
    }

    pub fn units(&self) -> Vec<ResidueElement> {
        self.elements().filter(|&x| self.is_unit(x)).collect()
    }

    /// `(O/f)^x` by enumeration and SNF, with discrete logs.
    pub fn unit_group(&self) -> EnumeratedGroup<ResidueElement> {
        EnumeratedGroup::from_elements(self.one(), &self.units(), |a, b| self.mul(*a, *b))
    }

    /// The single-factor ring `O / P_i^{e_i}`.
    pub fn local_ring(&self, i: usize) -> ResidueRing {
        ResidueRing::new_uncapped(&self.field, self.factors[i].modulus).expect("prime power factors")
    }

    /// Reduce an element of this ring into a ring whose modulus divides ours.
    pub fn reduce_to(&self, x: ResidueElement, target: &ResidueRing) -> ResidueElement {
        target.from_element(self.lift(x))
    }
}

/// `(O/P^e)^x` with its distinguished subgroup `U^(1)`.
#[derive(Debug, Clone)]
pub struct LocalUnitGroup {
    pub ring: ResidueRing,
    pub group: EnumeratedGroup<ResidueElement>,
}

impl LocalUnitGroup {
    pub fn new(field: &FieldData, prime: &PrimeIdeal, exponent: u32) -> Result<Self> {
        if exponent == 0 {
            return Err(Error::Invalid("exponent must be positive".into()));
        }
        let ring = ResidueRing::new_uncapped(field, field.ideal_pow(&prime.ideal, exponent))?;
        let group = ring.unit_group();
        Ok(LocalUnitGroup { ring, group })
    }

    pub fn prime(&self) -> PrimeIdeal {
        self.ring.factors[0].prime
    }

    pub fn units(&self) -> Vec<ResidueElement> {
        self.ring.units()
    }

    /// Kernel of reduction `(O/P^e)^x -> (O/P)^x`.
    pub fn reduction_kernel(&self) -> BTreeSet<ResidueElement> {
        let one = self.ring.one();
        self.units()
            .into_iter()
            .filter(|&u| self.ring.valuation_at(self.ring.sub(u, one), 0) >= 1)
            .collect()
    }

    /// `U^(1)` computed as the `(N(P) - 1)`-th powers.
    pub fn u1_subgroup(&self) -> BTreeSet<ResidueElement> {
        let k = (self.prime().norm() - 1) as u64;
        self.units().into_iter().map(|u| self.ring.pow(u, k)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian() -> FieldData {
        FieldData::new(-4).unwrap()
    }

    #[test]
    fn build_sizes() {
        let q = FieldData::rational();
        let r = ResidueRing::new(&q, q.int_ideal(4)).unwrap();
        assert_eq!(r.size(), 4);
        assert_eq!(r.factors.len(), 1);

        let k = gaussian();
        let r = ResidueRing::new(&k, k.int_ideal(5)).unwrap();
        assert_eq!(r.size(), 25);
        assert_eq!(r.factors.len(), 2);
        assert!(r.factors.iter().all(|f| f.size() == 5));

        let r = ResidueRing::new(&k, k.int_ideal(2)).unwrap();
        assert_eq!(r.factors.len(), 1);
        assert_eq!(r.factors[0].exponent, 2);
        assert_eq!(r.size(), 4);

        let big = ResidueRing::new(&k, k.int_ideal(101));
        assert!(matches!(big, Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn crt_round_trip() {
        for d in [1, -4, -23] {
            let k = FieldData::new(d).unwrap();
            for n in [12, 30, 45] {
                let r = ResidueRing::new(&k, k.int_ideal(n)).unwrap();
                for x in r.elements() {
                    assert_eq!(r.from_element(r.lift(x)), x);
                    assert_eq!(r.from_locals(&r.locals(x)), x);
                }
            }
        }
    }

    #[test]
    fn unit_groups() {
        let q = FieldData::rational();
        let r = ResidueRing::new(&q, q.int_ideal(4)).unwrap();
        assert_eq!(r.unit_group().group.invariants, vec![2]);

        let k = gaussian();
        // brute force over O/(5): units are pairs with nonzero residues at both primes
        let r = ResidueRing::new(&k, k.int_ideal(5)).unwrap();
        let brute = (0..5)
            .flat_map(|x| (0..5).map(move |y| FieldElement::new(x, y)))
            .filter(|&e| (0..5).flat_map(|x| (0..5).map(move |y| FieldElement::new(x, y))).any(|f| {
                let p = k.mul(e, f);
                p.x.rem_euclid(5) == 1 && p.y.rem_euclid(5) == 0
            }))
            .count();
        assert_eq!(brute, 16);
        assert_eq!(r.unit_group().order(), 16);

        // O/(4) where (2) = P2^2 so (4) = P2^4
        let r = ResidueRing::new(&k, k.int_ideal(4)).unwrap();
        assert_eq!(r.factors[0].exponent, 4);
        assert_eq!(r.unit_group().order(), 8);
    }

    #[test]
    fn unit_count_formula() {
        for d in [1, -3, -4, -7, -23] {
            let k = FieldData::new(d).unwrap();
            for n in 1..=60 {
                for f in k.ideals_of_norm(n) {
                    let r = ResidueRing::new(&k, f).unwrap();
                    let expect: i64 = r
                        .factors
                        .iter()
                        .map(|lf| lf.prime.norm().pow(lf.exponent - 1) * (lf.prime.norm() - 1))
                        .product();
                    assert_eq!(r.units().len() as i64, expect);
                }
            }
        }
    }

    #[test]
    fn truncated_valuations() {
        let q = FieldData::rational();
        let r = ResidueRing::new(&q, q.int_ideal(8)).unwrap();
        let p2 = q.primes_above(2).unwrap()[0];
        assert_eq!(r.truncated_valuation(r.one(), &p2).unwrap(), 0);
        assert_eq!(r.truncated_valuation(r.zero(), &p2).unwrap(), 3);
        assert_eq!(r.truncated_valuation(r.from_int(6), &p2).unwrap(), 1);
        let p3 = q.primes_above(3).unwrap()[0];
        assert_eq!(r.truncated_valuation(r.one(), &p3), Err(Error::PrimeNotInSupport));

        let r = ResidueRing::new(&q, q.int_ideal(72)).unwrap();
        for x in r.elements() {
            for y in r.elements() {
                for (i, f) in r.factors.iter().enumerate() {
                    let v = r.valuation_at(r.mul(x, y), i);
                    assert_eq!(v, (r.valuation_at(x, i) + r.valuation_at(y, i)).min(f.exponent));
                }
            }
        }
    }

    #[test]
    fn u1_examples() {
        let q = FieldData::rational();
        let p3 = q.primes_above(3).unwrap()[0];
        let l = LocalUnitGroup::new(&q, &p3, 1).unwrap();
        assert_eq!(l.u1_subgroup(), [l.ring.one()].into_iter().collect());
        let l = LocalUnitGroup::new(&q, &p3, 2).unwrap();
        let squares: BTreeSet<i64> = l.u1_subgroup().iter().map(|&x| l.ring.lift(x).x).collect();
        assert_eq!(squares, [1, 4, 7].into_iter().collect());
        assert_eq!(l.u1_subgroup(), l.reduction_kernel());

        let k = gaussian();
        let p5 = k.primes_above(5).unwrap()[0];
        let l = LocalUnitGroup::new(&k, &p5, 2).unwrap();
        assert_eq!(l.group.order(), 20);
        assert_eq!(l.u1_subgroup().len(), 5);
        assert_eq!(l.u1_subgroup(), l.reduction_kernel());
    }
}
