use std::collections::{BTreeSet, HashSet};

use dr_core::dr_monoid::{DrElement, DrLevel, Transition};
use dr_core::field_core::{FieldData, FieldElement, IdealHNF};
use dr_core::residue_ring::ResidueElement;
use proptest::prelude::*;

fn field(d: i64) -> FieldData {
    if d == 1 {
        FieldData::rational()
    } else {
        FieldData::new(d).unwrap()
    }
}

fn level(d: i64, norm: i64, pick: usize) -> DrLevel {
    let k = field(d);
    let fs = k.ideals_of_norm(norm);
    DrLevel::build(&k, fs[pick % fs.len()]).unwrap()
}

type Raw = (u32, Vec<i64>);

/// Orbits of `(O/f) x Cl_f` under `u.(rho, s) = (u rho, s - rec(u))`, by
/// flooding with every unit.
fn brute_orbits(m: &DrLevel) -> Vec<BTreeSet<Raw>> {
    let ring = m.ring();
    let g = m.class_group();
    let units = ring.units();
    let recs: Vec<_> = units.iter().map(|&u| m.ray.rec(u).unwrap()).collect();
    let mut seen: HashSet<Raw> = HashSet::new();
    let mut orbits = Vec::new();
    for rho in ring.elements() {
        for s in g.elements() {
            if seen.contains(&(rho.0, s.clone())) {
                continue;
            }
            let orbit: BTreeSet<Raw> = units
                .iter()
                .zip(&recs)
                .map(|(&u, r)| (ring.mul(u, rho).0, g.sub(&s, r)))
                .collect();
            seen.extend(orbit.iter().cloned());
            orbits.push(orbit);
        }
    }
    orbits
}

const SMALL: [(i64, i64); 12] =
    [(1, 4), (1, 8), (1, 12), (1, 15), (-4, 5), (-4, 10), (-4, 4), (-3, 7), (-3, 12), (-7, 8), (-23, 2), (-23, 6)];

#[test]
fn orbits_match_brute_force() {
    for (d, n) in SMALL {
        let k = field(d);
        for f in k.ideals_of_norm(n) {
            let m = DrLevel::build(&k, f).unwrap();
            let brute = brute_orbits(&m);
            assert_eq!(m.size(), brute.len(), "{} f={f}", k.label());
            for x in m.elements() {
                let mine: BTreeSet<Raw> = m.orbit(x).into_iter().map(|(r, s)| (r.0, s)).collect();
                assert!(brute.contains(&mine), "{} f={f} {}", k.label(), m.display(x));
                let (rho, s) = m.pair(x);
                assert_eq!(mine.iter().next().unwrap(), &(rho.0, s));
            }
        }
    }
}

#[test]
fn rational_four_has_four_elements() {
    let m = level(1, 4, 0);
    assert_eq!(m.raw_size(), 8);
    let pairs: Vec<(u32, Vec<i64>)> = m.elements().map(|x| {
        let (r, s) = m.pair(x);
        (m.ring().lift(r).x as u32, s)
    }).collect();
    assert_eq!(pairs.len(), 4);
    let residues: BTreeSet<u32> = pairs.iter().map(|p| p.0).collect();
    assert_eq!(residues, BTreeSet::from([0, 1, 2]));
    let three = m.ideal_to_dr(&m.field.int_ideal(3)).unwrap();
    // (3) has trivial ray class at 4, so its image is the orbit of [3, 0]
    assert_eq!(three, m.element(m.ring().from_int(3), &m.class_group().zero()));
    assert!(m.is_unit(three) && three != m.identity());
}

#[test]
fn gaussian_five_orbit_count() {
    let k = field(-4);
    let m = DrLevel::build(&k, k.int_ideal(5)).unwrap();
    assert_eq!(m.size(), brute_orbits(&m).len());
    assert_eq!(m.all_idempotents().len(), 4);
    assert_eq!(m.maximal_idempotents().len(), 2);
}

#[test]
fn rational_twelve_e_two() {
    let q = field(1);
    let m = DrLevel::build(&q, q.int_ideal(12)).unwrap();
    let p2 = q.primes_above(2).unwrap()[0];
    let e = m.e_s_primes(&[p2]).unwrap();
    let ring = m.ring();
    let i2 = ring.factor_index(&p2).unwrap();
    let locals = ring.locals(m.rho(e));
    assert_eq!(locals[i2], FieldElement::ONE);
    assert_eq!(locals[1 - i2], FieldElement::int(0));
    assert!(m.is_idempotent(e));
    assert_eq!(m.classify_idempotent(e).unwrap(), BTreeSet::from([i2]));
}

fn factorial_power(m: &DrLevel, x: DrElement) -> DrElement {
    // x^(20!) is idempotent once 20! covers the index and the period
    let mut y = x;
    for k in 2..=20u64 {
        y = m.pow(y, k);
    }
    y
}

#[test]
fn omega_matches_factorial_power() {
    for (d, n) in SMALL {
        let k = field(d);
        for f in k.ideals_of_norm(n) {
            let m = DrLevel::build(&k, f).unwrap();
            for x in m.elements() {
                let w = m.omega(x);
                assert!(m.is_idempotent(w));
                assert_eq!(w, factorial_power(&m, x));
            }
        }
    }
}

#[test]
fn idempotents_are_indicators() {
    for (d, n) in SMALL {
        let k = field(d);
        for f in k.ideals_of_norm(n) {
            let m = DrLevel::build(&k, f).unwrap();
            let brute: BTreeSet<DrElement> = m.elements().filter(|&x| m.mul(x, x) == x).collect();
            let records = m.all_idempotents();
            assert_eq!(records.len(), 1 << m.supp().len());
            let listed: BTreeSet<DrElement> = records.iter().map(|r| r.element).collect();
            assert_eq!(listed, brute);
            for r in &records {
                let s: BTreeSet<usize> = r.subset.iter().copied().collect();
                assert_eq!(m.e_s(&s).unwrap(), r.element);
                assert_eq!(r.maximal, s.len() + 1 == m.supp().len());
            }
        }
    }
}

#[test]
fn units_are_invertible_by_search() {
    for (d, n) in SMALL {
        let m = level(d, n, 0);
        let one = m.identity();
        let brute: BTreeSet<DrElement> =
            m.elements().filter(|&x| m.elements().any(|y| m.mul(x, y) == one)).collect();
        assert_eq!(brute, m.units().into_iter().collect());
    }
}

#[test]
fn zero_times_class_collapses_exactly_on_rec_image() {
    for (d, n) in SMALL {
        let m = level(d, n, 0);
        let ring = m.ring();
        let g = m.class_group();
        let image: BTreeSet<Vec<i64>> = ring.units().into_iter().map(|u| m.ray.rec(u).unwrap()).collect();
        let zero = m.element(ring.zero(), &g.zero());
        for s in g.elements() {
            let x = m.element(ResidueElement(ring.one().0), &s);
            let prod = m.mul(zero, x);
            assert_eq!(prod, m.element(ring.zero(), &s));
            assert_eq!(prod == zero, image.contains(&s));
        }
    }
}

#[test]
fn transitions_are_homomorphisms() {
    for (d, small, big) in [(1, 2, 12), (1, 4, 8), (-4, 5, 10), (-3, 3, 12), (-7, 2, 8)] {
        let k = field(d);
        for f in k.ideals_of_norm(big) {
            let target = k.ideals_of_norm(small).into_iter().find(|g| g.divides(&f));
            let Some(g) = target else { continue };
            let (src, tgt) = (DrLevel::build(&k, f).unwrap(), DrLevel::build(&k, g).unwrap());
            let t = Transition::new(&src, &tgt).unwrap();
            assert_eq!(t.apply(src.identity()), tgt.identity());
            for x in src.elements() {
                for y in src.elements().step_by(3) {
                    assert_eq!(t.apply(src.mul(x, y)), tgt.mul(t.apply(x), t.apply(y)));
                }
            }
            let hit: BTreeSet<DrElement> = src.elements().map(|x| t.apply(x)).collect();
            assert_eq!(hit.len(), tgt.size(), "transition onto");
        }
    }
}

fn ideals_up_to(k: &FieldData, n: i64) -> Vec<IdealHNF> {
    (1..=n).flat_map(|m| k.ideals_of_norm(m)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mul_is_associative_and_commutative(idx in 0usize..12, pick in 0usize..4, a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
        let (d, n) = SMALL[idx];
        let m = level(d, n, pick);
        let s = m.size() as u32;
        let (x, y, z) = (DrElement(a % s), DrElement(b % s), DrElement(c % s));
        prop_assert_eq!(m.mul(m.mul(x, y), z), m.mul(x, m.mul(y, z)));
        prop_assert_eq!(m.mul(x, y), m.mul(y, x));
        prop_assert_eq!(m.mul(x, m.identity()), x);
    }

    #[test]
    fn omega_is_the_idempotent_power(idx in 0usize..12, pick in 0usize..4, a in any::<u32>()) {
        let (d, n) = SMALL[idx];
        let m = level(d, n, pick);
        let x = DrElement(a % m.size() as u32);
        let w = m.omega(x);
        prop_assert!(m.is_idempotent(w));
        prop_assert_eq!(m.omega(w), w);
        prop_assert_eq!(m.mul(w, m.omega(m.mul(x, x))), w);
        let (index, period) = m.index_period(x);
        prop_assert_eq!(m.pow(x, index), m.pow(x, index + period));
    }

    #[test]
    fn ideal_map_is_multiplicative(idx in 0usize..12, pick in 0usize..4, i in 0usize..80, j in 0usize..80) {
        let (d, n) = SMALL[idx];
        let m = level(d, n, pick);
        let ideals = ideals_up_to(&m.field, 40);
        let (a, b) = (ideals[i % ideals.len()], ideals[j % ideals.len()]);
        let ab = m.field.ideal_mul(&a, &b);
        let lhs = m.ideal_to_dr(&ab).unwrap();
        prop_assert_eq!(lhs, m.mul(m.ideal_to_dr(&a).unwrap(), m.ideal_to_dr(&b).unwrap()));
        let supp = m.supp();
        if m.field.ideal_factor(&ab).unwrap().iter().all(|(p, _)| supp.contains(p)) {
            prop_assert!(m.is_in_ik(lhs));
        }
        prop_assert_eq!(m.is_unit(lhs), m.field.coprime(&ab, &m.conductor));
    }
}
