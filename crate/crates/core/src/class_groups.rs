//! Class groups, ray class groups `Cl_f` and the evaluation of finite ideles
//! in `Cl_f`.
//!
//! Sign convention: for `u in (O/f)^x` let `P(u)` be the ray class of the
//! principal ideal `(lambda)` with `lambda = u mod f` (and `lambda > 0` for
//! `Q`, whose modulus carries the real place). The class of the unit idele
//! `u` is then `rec(u) = P(u)^-1`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::abelian::{EnumeratedGroup, FiniteAbelianGroup, GroupElem, Presentation};
use crate::arith;
use crate::error::{Error, Result};
use crate::field_core::{FieldData, FieldElement, IdealHNF, KElement, PrimeIdeal};
use crate::residue_ring::{ResidueElement, ResidueRing};

/// Positive definite binary quadratic form `a x^2 + b x y + c y^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_reduced(&self) -> bool {
        let QuadForm { a, b, c } = *self;
        -a < b && b <= a && a <= c && !(a == c && b < 0)
    }

    pub fn reduce(self) -> QuadForm {
        let QuadForm { mut a, mut b, mut c } = self;
        loop {
            // normalize b into (-a, a]
            if !(-a < b && b <= a) {
                let r = (a - b).div_euclid(2 * a);
                let nb = b + 2 * a * r;
                c += r * (b + a * r);
                b = nb;
            }
            if a > c {
                std::mem::swap(&mut a, &mut c);
                b = -b;
                continue;
            }
            if a == c && b < 0 {
                b = -b;
            }
            return QuadForm { a, b, c };
        }
    }
}

/// All reduced forms of discriminant `d < 0`, sorted.
pub fn reduced_forms(d: i64) -> Vec<QuadForm> {
    let mut out = Vec::new();
    let amax = arith::isqrt(d.abs() / 3);
    for a in 1..=amax {
        for b in -a + 1..=a {
            if (b * b - d) % (4 * a) != 0 {
                continue;
            }
            let f = QuadForm { a, b, c: (b * b - d) / (4 * a) };
            if f.is_reduced() && arith::gcd(arith::gcd(f.a, f.b), f.c) == 1 {
                out.push(f);
            }
        }
    }
    out.sort();
    out
}

fn form_to_ideal(k: &FieldData, f: &QuadForm) -> IdealHNF {
    // a Z + ((-b + sqrt D)/2) Z, and (-b + sqrt D)/2 = (-b - D)/2 + w
    IdealHNF { a: f.a, b: ((-f.b - k.disc) / 2).rem_euclid(f.a), c: 1 }
}

fn ideal_to_form(k: &FieldData, i: &IdealHNF) -> QuadForm {
    let n = i.a / i.c;
    let t = i.b / i.c;
    let b = -2 * t - k.disc;
    QuadForm { a: n, b, c: (b * b - k.disc) / (4 * n) }.reduce()
}

/// `Cl(K)` realized on reduced forms, composition through ideal products.
#[derive(Debug, Clone)]
pub struct ClassGroup {
    pub field: FieldData,
    pub forms: EnumeratedGroup<QuadForm>,
}

impl ClassGroup {
    pub fn new(k: &FieldData) -> Self {
        if k.is_rational() {
            let one = QuadForm { a: 1, b: 0, c: 0 };
            return ClassGroup { field: k.clone(), forms: EnumeratedGroup::from_elements(one, &[one], |a, _| *a) };
        }
        let identity = ideal_to_form(k, &IdealHNF::unit());
        let elems = reduced_forms(k.disc);
        let forms = EnumeratedGroup::from_elements(identity, &elems, |f, g| {
            ideal_to_form(k, &k.ideal_mul(&form_to_ideal(k, f), &form_to_ideal(k, g)))
        });
        ClassGroup { field: k.clone(), forms }
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.forms.group
    }

    pub fn class_number(&self) -> u64 {
        self.forms.order()
    }

    pub fn class_of(&self, i: &IdealHNF) -> GroupElem {
        if self.field.is_rational() {
            return Vec::new();
        }
        self.forms.log(&ideal_to_form(&self.field, i)).expect("reduced form is a class").clone()
    }

    pub fn generator_form(&self, j: usize) -> QuadForm {
        self.forms.generators[j]
    }
}

/// `class_group` operation.
pub fn class_group(k: &FieldData) -> FiniteAbelianGroup {
    ClassGroup::new(k).group().clone()
}

/// Finitely supported idele data: at each listed prime an element of `K^x`
/// standing for its image in `K_P^x`; the component is `1` elsewhere.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinIdele {
    pub components: Vec<(PrimeIdeal, KElement)>,
    /// Sign at the real place of `Q`; always `false` for imaginary quadratic fields.
    #[serde(default)]
    pub negative_at_infinity: bool,
}

impl FinIdele {
    pub fn one() -> Self {
        FinIdele::default()
    }

    pub fn from_components(mut components: Vec<(PrimeIdeal, KElement)>) -> Self {
        components.sort_by(|a, b| a.0.cmp(&b.0));
        components.dedup_by(|a, b| a.0 == b.0);
        FinIdele { components, negative_at_infinity: false }
    }

    pub fn single(p: PrimeIdeal, e: KElement) -> Self {
        FinIdele { components: vec![(p, e)], negative_at_infinity: false }
    }

    pub fn component(&self, p: &PrimeIdeal) -> Option<&KElement> {
        self.components.iter().find(|(q, _)| q == p).map(|(_, e)| e)
    }

    pub fn support(&self) -> Vec<PrimeIdeal> {
        self.components.iter().map(|(p, _)| *p).collect()
    }

    /// The diagonal image of `alpha` at every prime where it is not a unit,
    /// at the `extra` primes, and at the real place of `Q`.
    pub fn principal(k: &FieldData, alpha: KElement, extra: &[PrimeIdeal]) -> Result<Self> {
        let mut primes: Vec<PrimeIdeal> = extra.to_vec();
        for (p, _) in k.ideal_factor(&k.principal_ideal(alpha.num))? {
            primes.push(p);
        }
        for (p, _) in k.ideal_factor(&k.int_ideal(alpha.den))? {
            primes.push(p);
        }
        let mut v = FinIdele::from_components(primes.into_iter().map(|p| (p, alpha)).collect());
        v.negative_at_infinity = k.is_rational() && alpha.num.x < 0;
        Ok(v)
    }

    /// Uniformizer powers at the primes of `a`, `1` elsewhere.
    pub fn of_ideal(k: &FieldData, a: &IdealHNF) -> Result<Self> {
        Ok(FinIdele::from_components(
            k.ideal_factor(a)?
                .into_iter()
                .map(|(p, e)| (p, KElement::integral(k.pow(k.uniformizer(&p), e))))
                .collect(),
        ))
    }

    pub fn mul(&self, k: &FieldData, other: &FinIdele) -> FinIdele {
        let mut map: BTreeMap<PrimeIdeal, KElement> = self.components.iter().copied().collect();
        for (p, e) in &other.components {
            let cur = map.get(p).copied().unwrap_or(KElement::integral(FieldElement::ONE));
            map.insert(*p, KElement::ratio(k.mul(cur.num, e.num), cur.den * e.den));
        }
        FinIdele {
            components: map.into_iter().collect(),
            negative_at_infinity: self.negative_at_infinity != other.negative_at_infinity,
        }
    }
}

/// `Cl_f(K)` as a presentation over `(O/f)^x` generators and lifts of the
/// `Cl(K)` generators.
#[derive(Debug)]
pub struct RayClassGroup {
    pub field: FieldData,
    pub modulus: IdealHNF,
    pub ring: ResidueRing,
    pub units: EnumeratedGroup<ResidueElement>,
    pub class_group: ClassGroup,
    /// Prime ideals coprime to `f` (and with `N P` coprime to `N f`), one per
    /// `Cl(K)` generator.
    pub class_lifts: Vec<IdealHNF>,
    pres: Presentation,
    principal_index: Vec<u32>,
    representatives: OnceLock<Result<Vec<IdealHNF>>>,
}

impl RayClassGroup {
    pub fn new(k: &FieldData, modulus: IdealHNF) -> Result<Self> {
        Self::with_class_group(k, modulus, ClassGroup::new(k))
    }

    pub fn with_class_group(k: &FieldData, modulus: IdealHNF, cl: ClassGroup) -> Result<Self> {
        let ring = ResidueRing::new(k, modulus)?;
        let units = ring.unit_group();
        let r = units.group.rank();
        let m = cl.group().rank();
        let n = r + m;

        let mut rels: Vec<Vec<i64>> = Vec::new();
        for (i, &d) in units.group.invariants.iter().enumerate() {
            let mut row = vec![0; n];
            row[i] = d;
            rels.push(row);
        }
        let unit_coords = |x: FieldElement| -> Vec<i64> {
            let mut v = units.log(&ring.from_element(x)).expect("coprime to f").clone();
            v.resize(n, 0);
            v
        };
        if !k.is_rational() {
            let zeta = k.roots_of_unity()[1];
            rels.push(unit_coords(zeta));
        }

        let mut class_lifts = Vec::with_capacity(m);
        for j in 0..m {
            let mut target = cl.group().zero();
            target[j] = 1;
            let lift = Self::find_class_lift(k, &cl, &modulus, &target)?;
            let h = cl.group().invariants[j];
            let power = k.ideal_pow(&lift, h as u32);
            let gamma = k
                .principal_generator(&power)?
                .ok_or_else(|| Error::Invalid("class group generator power is not principal".into()))?;
            let mut row: Vec<i64> = unit_coords(gamma).iter().map(|c| -c).collect();
            row[r + j] += h;
            rels.push(row);
            class_lifts.push(lift);
        }
        if n == 0 {
            rels.clear();
        }
        let pres = Presentation::new(&rels, n);

        let mut principal_index = vec![u32::MAX; ring.size()];
        for (u, idx) in principal_index.iter_mut().enumerate() {
            let u = ResidueElement(u as u32);
            if let Some(c) = units.log(&u) {
                let mut v = c.clone();
                v.resize(n, 0);
                *idx = pres.group.index_of(&pres.reduce(&v)) as u32;
            }
        }

        Ok(RayClassGroup {
            field: k.clone(),
            modulus,
            ring,
            units,
            class_group: cl,
            class_lifts,
            pres,
            principal_index,
            representatives: OnceLock::new(),
        })
    }

    fn find_class_lift(k: &FieldData, cl: &ClassGroup, modulus: &IdealHNF, target: &GroupElem) -> Result<IdealHNF> {
        let nf = modulus.norm();
        for p in arith::primes_up_to(k.bounds.prime_bound) {
            if nf % p == 0 {
                continue;
            }
            for q in k.primes_above(p)? {
                if &cl.class_of(&q.ideal) == target {
                    return Ok(q.ideal);
                }
            }
        }
        Err(Error::SearchBound("no prime found in class".into()))
    }

    pub fn group(&self) -> &FiniteAbelianGroup {
        &self.pres.group
    }

    pub fn order(&self) -> u64 {
        self.pres.group.order()
    }

    pub fn identity(&self) -> GroupElem {
        self.pres.group.zero()
    }

    /// `P(u)`: the class of `(lambda)` for `lambda = u mod f`.
    pub fn principal_class(&self, u: ResidueElement) -> Result<GroupElem> {
        match self.principal_index[u.0 as usize] {
            u32::MAX => Err(Error::NotCoprime),
            i => Ok(self.pres.group.from_index(i as usize)),
        }
    }

    /// Index of `P(u)` in mixed radix, for hot loops.
    pub fn principal_class_index(&self, u: ResidueElement) -> Option<usize> {
        match self.principal_index[u.0 as usize] {
            u32::MAX => None,
            i => Some(i as usize),
        }
    }

    /// The reciprocity arrow `(O/f)^x -> Cl_f`, `u -> rec(u) = P(u)^-1`.
    pub fn rec(&self, u: ResidueElement) -> Result<GroupElem> {
        Ok(self.pres.group.neg(&self.principal_class(u)?))
    }

    /// Projection `Cl_f -> Cl(K)`.
    pub fn to_class_group(&self, x: &[i64]) -> GroupElem {
        let g = self.class_group.group();
        let mut out = g.zero();
        for (k, &xk) in x.iter().enumerate() {
            let coeffs = self.pres.snf_generator(k);
            let r = self.units.group.rank();
            for j in 0..g.rank() {
                let mut e = g.zero();
                e[j] = coeffs[r + j] * xk;
                out = g.add(&out, &e);
            }
        }
        out
    }

    fn principal_class_of(&self, e: FieldElement) -> Result<GroupElem> {
        self.principal_class(self.ring.from_element(e))
    }

    /// `ideal_class`: the ray class of an integral ideal coprime to `f`.
    pub fn ideal_class(&self, a: &IdealHNF) -> Result<GroupElem> {
        let k = &self.field;
        if !k.coprime(a, &self.modulus) {
            return Err(Error::NotCoprime);
        }
        if k.is_rational() {
            return self.principal_class_of(FieldElement::int(a.a));
        }
        let g = self.pres.group.clone();
        let c = self.class_group.class_of(a);
        let r = self.units.group.rank();
        // b = a * prod conj(g_j)^c_j = a * prod g_j^-c_j * prod N(g_j)^c_j is principal
        let mut b = *a;
        let mut acc = g.zero();
        for (j, &cj) in c.iter().enumerate() {
            let lift = &self.class_lifts[j];
            let conj = k.ideal_conj(lift);
            b = k.ideal_mul(&b, &k.ideal_pow(&conj, cj as u32));
            let mut gen = vec![0; self.pres.num_gens()];
            gen[r + j] = cj;
            acc = g.add(&acc, &self.pres.reduce(&gen));
            let nj = self.principal_class_of(FieldElement::int(lift.norm().pow(cj as u32)))?;
            acc = g.sub(&acc, &nj);
        }
        let beta = k
            .principal_generator(&b)?
            .ok_or_else(|| Error::Invalid("class group discrete log failed".into()))?;
        Ok(g.add(&acc, &self.principal_class_of(beta)?))
    }

    /// Class of a fractional ideal given as `num / den`, both coprime to `f`.
    fn fractional_class(&self, num: &IdealHNF, den: &IdealHNF) -> Result<GroupElem> {
        Ok(self.pres.group.sub(&self.ideal_class(num)?, &self.ideal_class(den)?))
    }

    fn strip_support(&self, i: &IdealHNF) -> Result<IdealHNF> {
        let k = &self.field;
        let f: Vec<_> = k
            .ideal_factor(i)?
            .into_iter()
            .filter(|(p, _)| !self.modulus_primes().contains(p))
            .collect();
        Ok(k.ideal_from_factors(&f))
    }

    pub fn modulus_primes(&self) -> Vec<PrimeIdeal> {
        self.ring.primes()
    }

    /// `idele_class` with the default approximant.
    pub fn idele_class(&self, v: &FinIdele) -> Result<GroupElem> {
        self.idele_class_with_shift(v, (0, 0))
    }

    /// Evaluate `v` in `Cl_f`: pick `lambda` in `K^x` with `v_P / lambda` in
    /// `1 + P^e_P` at every `P | f`, then take the class of the ideal of
    /// `v / lambda`. `shift` moves the approximant by a lattice vector of the
    /// auxiliary modulus; the result must not depend on it.
    pub fn idele_class_with_shift(&self, v: &FinIdele, shift: (i64, i64)) -> Result<GroupElem> {
        let k = &self.field;
        let one = KElement::integral(FieldElement::ONE);
        let supp = self.modulus_primes();

        // common denominator for the components at P | f
        let comps: Vec<KElement> = supp.iter().map(|p| v.component(p).copied().unwrap_or(one)).collect();
        let m = comps.iter().fold(1, |acc, e| arith::lcm(acc, e.den));
        let targets: Vec<FieldElement> = comps.iter().map(|e| e.num.scale(m / e.den)).collect();

        let mut aux = IdealHNF::unit();
        for ((p, lf), t) in supp.iter().zip(&self.ring.factors).zip(&targets) {
            let extra = k.valuation(p, *t);
            aux = k.ideal_mul(&aux, &k.ideal_pow(&p.ideal, lf.exponent + extra));
        }
        let gamma = if supp.is_empty() {
            FieldElement::ONE
        } else {
            let aux_ring = ResidueRing::new_uncapped(k, aux)?;
            let locals: Vec<FieldElement> = targets.clone();
            let g0 = aux_ring.lift(aux_ring.from_locals(&locals));
            let moved = g0
                .add(FieldElement::int(aux.a).scale(shift.0))
                .add(FieldElement::new(aux.b, aux.c).scale(shift.1));
            if k.is_rational() && moved.x <= 0 {
                return Err(Error::Invalid("shift must keep the approximant positive".into()));
            }
            moved
        };
        debug_assert!(!gamma.is_zero());

        // ideal of v / lambda away from f, lambda = gamma / m
        let mut pos = k.int_ideal(m);
        pos = self.strip_support(&pos)?;
        let mut neg = self.strip_support(&k.principal_ideal(gamma))?;
        for (p, e) in &v.components {
            if supp.contains(p) {
                continue;
            }
            let val = k.valuation_k(p, e);
            let pw = k.ideal_pow(&p.ideal, val.unsigned_abs() as u32);
            if val > 0 {
                pos = k.ideal_mul(&pos, &pw);
            } else {
                neg = k.ideal_mul(&neg, &pw);
            }
        }
        let c = self.fractional_class(&pos, &neg)?;
        if v.negative_at_infinity && k.is_rational() {
            // (1, -1 at infinity) = (-1) * (-1 at f, 1 at infinity)
            return Ok(self.pres.group.add(&c, &self.rec(self.ring.from_int(-1))?));
        }
        Ok(c)
    }

    /// Least-norm (then HNF-lexicographic) ideal coprime to `f` in each class,
    /// indexed by the mixed-radix class index.
    pub fn representatives(&self) -> Result<&Vec<IdealHNF>> {
        self.representatives
            .get_or_init(|| {
                let n = self.order() as usize;
                let mut reps: Vec<Option<IdealHNF>> = vec![None; n];
                let mut left = n;
                let mut norm = 1;
                while left > 0 {
                    if norm > self.field.bounds.conductor_norm_cap * 100 {
                        return Err(Error::SearchBound("ray class representatives".into()));
                    }
                    for i in self.field.ideals_of_norm(norm) {
                        if !self.field.coprime(&i, &self.modulus) {
                            continue;
                        }
                        let c = self.pres.group.index_of(&self.ideal_class(&i)?);
                        if reps[c].is_none() {
                            reps[c] = Some(i);
                            left -= 1;
                        }
                    }
                    norm += 1;
                }
                Ok(reps.into_iter().map(|r| r.expect("filled")).collect())
            })
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// Images in `target` of the SNF generators of `self`, for `target`'s
    /// modulus dividing ours.
    pub fn projection_images(&self, target: &RayClassGroup) -> Result<Vec<GroupElem>> {
        if !target.modulus.divides(&self.modulus) {
            return Err(Error::NotDivisible(target.modulus.to_string(), self.modulus.to_string()));
        }
        let tg = target.group();
        let mut gen_images: Vec<GroupElem> = Vec::new();
        for u in &self.units.generators {
            gen_images.push(target.principal_class(self.ring.reduce_to(*u, &target.ring))?);
        }
        for lift in &self.class_lifts {
            gen_images.push(target.ideal_class(lift)?);
        }
        Ok((0..self.group().rank())
            .map(|kidx| {
                self.pres
                    .snf_generator(kidx)
                    .iter()
                    .zip(&gen_images)
                    .fold(tg.zero(), |acc, (&c, img)| tg.add(&acc, &tg.scale(img, c)))
            })
            .collect())
    }
}

/// `ray_class_group` operation.
pub fn ray_class_group(k: &FieldData, modulus: IdealHNF) -> Result<RayClassGroup> {
    RayClassGroup::new(k, modulus)
}

/// Push a class through precomputed `projection_images`.
pub fn project(images: &[GroupElem], target: &FiniteAbelianGroup, x: &[i64]) -> GroupElem {
    x.iter().zip(images).fold(target.zero(), |acc, (&c, img)| target.add(&acc, &target.scale(img, c)))
}
