use dr_core::class_groups::{FinIdele, RayClassGroup};
use dr_core::field_core::{FieldData, FieldElement, IdealHNF, KElement};
use proptest::prelude::*;

const DISCS: [i64; 6] = [1, -3, -4, -7, -20, -23];

fn field(d: i64) -> FieldData {
    if d == 1 {
        FieldData::rational()
    } else {
        FieldData::new(d).unwrap()
    }
}

fn element(k: &FieldData, x: i64, y: i64) -> FieldElement {
    if k.is_rational() {
        FieldElement::int(x)
    } else {
        FieldElement::new(x, y)
    }
}

/// Ideals of norm 1..=n, listed once.
fn small_ideals(k: &FieldData, n: i64) -> Vec<IdealHNF> {
    (1..=n).flat_map(|m| k.ideals_of_norm(m)).collect()
}

proptest! {
    #[test]
    fn norm_is_multiplicative(d in prop::sample::select(DISCS.to_vec()), a in -30i64..30, b in -30i64..30, c in -30i64..30, e in -30i64..30) {
        let k = field(d);
        let (x, y) = (element(&k, a, b), element(&k, c, e));
        prop_assert_eq!(k.norm(k.mul(x, y)), k.norm(x) * k.norm(y));
        if !k.is_rational() {
            prop_assert_eq!(k.mul(x, k.conj(x)), FieldElement::int(k.norm(x)));
        }
    }

    #[test]
    fn principal_ideals_ignore_units(d in prop::sample::select(DISCS.to_vec()), a in -30i64..30, b in -30i64..30) {
        let k = field(d);
        let x = element(&k, a, b);
        prop_assume!(!x.is_zero());
        let i = k.principal_ideal(x);
        prop_assert_eq!(i.norm(), k.norm(x).abs());
        for z in k.roots_of_unity() {
            prop_assert_eq!(k.principal_ideal(k.mul(z, x)), i);
        }
        prop_assert_eq!(k.ideal_from_factors(&k.ideal_factor(&i).unwrap()), i);
    }

    #[test]
    fn ideal_norms_multiply(d in prop::sample::select(DISCS.to_vec()), i in 0usize..40, j in 0usize..40) {
        let k = field(d);
        let ideals = small_ideals(&k, 30);
        let (a, b) = (ideals[i % ideals.len()], ideals[j % ideals.len()]);
        let ab = k.ideal_mul(&a, &b);
        prop_assert_eq!(ab.norm(), a.norm() * b.norm());
        prop_assert!(a.divides(&ab) && b.divides(&ab));
        prop_assert_eq!(k.ideal_mul(&b, &a), ab);
    }

    #[test]
    fn valuations_add(d in prop::sample::select(DISCS.to_vec()), a in 1i64..40, b in -20i64..20, c in 1i64..40, e in -20i64..20) {
        let k = field(d);
        let (x, y) = (element(&k, a, b), element(&k, c, e));
        for p in [2, 3, 5] {
            for q in k.primes_above(p).unwrap() {
                prop_assert_eq!(k.valuation(&q, k.mul(x, y)), k.valuation(&q, x) + k.valuation(&q, y));
            }
        }
    }

    #[test]
    fn ray_classes_are_multiplicative(d in prop::sample::select(DISCS.to_vec()), f in 0usize..12, i in 0usize..60, j in 0usize..60) {
        let k = field(d);
        let conductors = small_ideals(&k, 12);
        let g = RayClassGroup::new(&k, conductors[f % conductors.len()]).unwrap();
        let ideals: Vec<IdealHNF> = small_ideals(&k, 40).into_iter().filter(|a| k.coprime(a, &g.modulus)).collect();
        let (a, b) = (ideals[i % ideals.len()], ideals[j % ideals.len()]);
        let lhs = g.ideal_class(&k.ideal_mul(&a, &b)).unwrap();
        let rhs = g.group().add(&g.ideal_class(&a).unwrap(), &g.ideal_class(&b).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn idele_class_ignores_the_approximant(d in prop::sample::select(DISCS.to_vec()), f in 0usize..12, a in 1i64..30, b in -10i64..10, s in 0i64..4, t in 0i64..4) {
        let k = field(d);
        let conductors = small_ideals(&k, 12);
        let g = RayClassGroup::new(&k, conductors[f % conductors.len()]).unwrap();
        let x = element(&k, a, b);
        let primes: Vec<_> = g.modulus_primes();
        let v = FinIdele::from_components(primes.iter().map(|&p| (p, KElement::integral(x))).collect());
        prop_assume!(!primes.is_empty());
        let base = g.idele_class(&v).unwrap();
        prop_assert_eq!(g.idele_class_with_shift(&v, (s, t)).unwrap(), base);
    }

    #[test]
    fn principal_ideles_are_trivial(d in prop::sample::select(DISCS.to_vec()), f in 0usize..16, a in -30i64..30, b in -30i64..30, den in 1i64..12) {
        let k = field(d);
        let conductors = small_ideals(&k, 16);
        let g = RayClassGroup::new(&k, conductors[f % conductors.len()]).unwrap();
        let x = element(&k, a, b);
        prop_assume!(!x.is_zero());
        let v = FinIdele::principal(&k, KElement::ratio(x, den), &g.modulus_primes()).unwrap();
        prop_assert!(g.group().is_zero(&g.idele_class(&v).unwrap()));
    }
}

#[test]
fn rec_is_a_homomorphism_and_matches_unit_ideles() {
    for d in DISCS {
        let k = field(d);
        for f in small_ideals(&k, 30) {
            let g = RayClassGroup::new(&k, f).unwrap();
            let units = g.ring.units();
            for &u in units.iter().take(12) {
                for &w in units.iter().take(12) {
                    let lhs = g.rec(g.ring.mul(u, w)).unwrap();
                    assert_eq!(lhs, g.group().add(&g.rec(u).unwrap(), &g.rec(w).unwrap()));
                }
                let v = FinIdele::from_components(
                    g.modulus_primes().into_iter().map(|p| (p, KElement::integral(g.ring.lift(u)))).collect(),
                );
                assert_eq!(g.idele_class(&v).unwrap(), g.rec(u).unwrap(), "{} f={f}", k.label());
            }
        }
    }
}

#[test]
fn rational_idele_of_three_is_the_class_of_three() {
    let q = field(1);
    let p3 = q.primes_above(3).unwrap()[0];
    let v = FinIdele::single(p3, KElement::integral(FieldElement::int(3)));
    for n in [4, 5, 7, 8, 10, 16, 20] {
        let g = RayClassGroup::new(&q, q.int_ideal(n)).unwrap();
        assert_eq!(g.idele_class(&v).unwrap(), g.principal_class(g.ring.from_int(3)).unwrap());
    }
}

#[test]
fn representatives_cover_every_class() {
    for d in [1, -4, -23] {
        let k = field(d);
        for f in small_ideals(&k, 10) {
            let g = RayClassGroup::new(&k, f).unwrap();
            let reps = g.representatives().unwrap();
            assert_eq!(reps.len() as u64, g.order());
            for (i, r) in reps.iter().enumerate() {
                assert!(k.coprime(r, &f));
                assert_eq!(g.group().index_of(&g.ideal_class(r).unwrap()), i);
            }
        }
    }
}
