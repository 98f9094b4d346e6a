//! Exact arithmetic in `K = Q` or `K = Q(sqrt(D))`, `D < 0` fundamental.
//!
//! Elements of `O_K` are written `x + y*w` with `w = (D + sqrt(D)) / 2`, so
//! `w^2 = D*w - (D^2 - D)/4`. For `Q` the `w` coordinate is always zero and
//! ideals use the degenerate HNF `(N, 0, 1)`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::arith::{self, gcd};
use crate::error::{Error, Result};

/// Discriminant sentinel used for the rational field.
pub const RATIONAL_SENTINEL: i64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Rational,
    ImaginaryQuadratic,
}

/// Desk-scale limits. Every search or enumeration checks one of these and
/// fails loudly instead of truncating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bounds {
    /// Trial-division bound for factoring rational integers (norms).
    pub prime_bound: i64,
    /// Largest conductor norm a residue ring may be built for.
    pub conductor_norm_cap: i64,
    /// Largest norm searched by `principal_generator` and friends.
    pub search_norm_cap: i64,
    /// Largest number of raw `(rho, s)` pairs enumerated by a DR level.
    pub orbit_cap: u64,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            prime_bound: 100_000,
            conductor_norm_cap: 10_000,
            search_norm_cap: 1_000_000_000_000,
            orbit_cap: 100_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FieldElement {
    pub x: i64,
    pub y: i64,
}

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement { x: 0, y: 0 };
    pub const ONE: FieldElement = FieldElement { x: 1, y: 0 };

    pub fn new(x: i64, y: i64) -> Self {
        FieldElement { x, y }
    }

    pub fn int(x: i64) -> Self {
        FieldElement { x, y: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.x == 0 && self.y == 0
    }

    pub fn add(self, o: FieldElement) -> FieldElement {
        FieldElement::new(self.x + o.x, self.y + o.y)
    }

    pub fn sub(self, o: FieldElement) -> FieldElement {
        FieldElement::new(self.x - o.x, self.y - o.y)
    }

    pub fn scale(self, k: i64) -> FieldElement {
        FieldElement::new(self.x * k, self.y * k)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.x, self.y) {
            (x, 0) => write!(f, "{x}"),
            (0, y) => write!(f, "{y}w"),
            (x, y) if y < 0 => write!(f, "{x}-{}w", -y),
            (x, y) => write!(f, "{x}+{y}w"),
        }
    }
}

/// An element of `K^x` as `num / den` with `num` integral and `den > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KElement {
    pub num: FieldElement,
    pub den: i64,
}

impl KElement {
    pub fn integral(num: FieldElement) -> Self {
        KElement { num, den: 1 }
    }

    pub fn ratio(num: FieldElement, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let s = den.signum();
        let g = gcd(gcd(num.x, num.y), den);
        KElement {
            num: FieldElement::new(s * num.x / g, s * num.y / g),
            den: den.abs() / g,
        }
    }
}

/// Nonzero integral ideal `a*Z + (b + c*w)*Z` in Hermite normal form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IdealHNF {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl IdealHNF {
    pub fn unit() -> Self {
        IdealHNF { a: 1, b: 0, c: 1 }
    }

    pub fn norm(&self) -> i64 {
        self.a * self.c
    }

    pub fn is_unit(&self) -> bool {
        self.norm() == 1
    }

    pub fn contains(&self, e: FieldElement) -> bool {
        if e.y % self.c != 0 {
            return false;
        }
        let k = e.y / self.c;
        (e.x - k * self.b) % self.a == 0
    }

    /// Canonical representative of `e` modulo this ideal: `0 <= x < a`, `0 <= y < c`.
    pub fn reduce(&self, e: FieldElement) -> FieldElement {
        let y = e.y.rem_euclid(self.c);
        let k = (e.y - y) / self.c;
        let x = (e.x - k * self.b).rem_euclid(self.a);
        FieldElement::new(x, y)
    }

    /// `self` divides `other`, i.e. `other` is contained in `self`.
    pub fn divides(&self, other: &IdealHNF) -> bool {
        self.contains(FieldElement::int(other.a)) && self.contains(FieldElement::new(other.b, other.c))
    }

    fn key(&self) -> (i64, i64, i64, i64) {
        (self.norm(), self.a, self.b, self.c)
    }
}

impl Ord for IdealHNF {
    fn cmp(&self, o: &Self) -> Ordering {
        self.key().cmp(&o.key())
    }
}

impl PartialOrd for IdealHNF {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl fmt::Display for IdealHNF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{}]", self.a, self.b, self.c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplittingType {
    Split,
    Inert,
    Ramified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimeIdeal {
    pub ideal: IdealHNF,
    /// The rational prime below.
    pub p: i64,
    pub residue_degree: u32,
}

impl PrimeIdeal {
    pub fn norm(&self) -> i64 {
        self.ideal.norm()
    }
}

impl fmt::Display for PrimeIdeal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}{}", self.p, self.ideal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldData {
    pub kind: FieldKind,
    /// Fundamental discriminant, or `1` for `Q`.
    pub disc: i64,
    /// Order of the unit group `mu_K`.
    pub unit_order: u32,
    #[serde(skip, default)]
    pub bounds: Bounds,
}

fn is_fundamental_negative(d: i64) -> std::result::Result<(), &'static str> {
    if d >= 0 {
        return Err("only negative discriminants or the Q sentinel are supported");
    }
    let squarefree = |n: i64| {
        let n = n.abs();
        let mut k = 2;
        while k * k <= n {
            if n % (k * k) == 0 {
                return false;
            }
            k += 1;
        }
        true
    };
    match d.rem_euclid(4) {
        1 if squarefree(d) => Ok(()),
        0 => {
            let m = d / 4;
            if matches!(m.rem_euclid(4), 2 | 3) && squarefree(m) {
                Ok(())
            } else {
                Err("D = 4m requires m = 2,3 mod 4 and m squarefree")
            }
        }
        1 => Err("D = 1 mod 4 must be squarefree"),
        _ => Err("discriminant must be 0 or 1 mod 4"),
    }
}

impl FieldData {
    pub fn rational() -> Self {
        FieldData {
            kind: FieldKind::Rational,
            disc: RATIONAL_SENTINEL,
            unit_order: 2,
            bounds: Bounds::default(),
        }
    }

    /// `make_field`: `1` selects `Q`, otherwise `d` must be a negative fundamental discriminant.
    pub fn new(d: i64) -> Result<Self> {
        if d == RATIONAL_SENTINEL {
            return Ok(Self::rational());
        }
        is_fundamental_negative(d).map_err(|why| Error::BadDiscriminant(d, why))?;
        let unit_order = match d {
            -3 => 6,
            -4 => 4,
            _ => 2,
        };
        Ok(FieldData {
            kind: FieldKind::ImaginaryQuadratic,
            disc: d,
            unit_order,
            bounds: Bounds::default(),
        })
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Self {
        self.bounds = bounds;
        self
    }

    pub fn is_rational(&self) -> bool {
        self.kind == FieldKind::Rational
    }

    pub fn degree(&self) -> u32 {
        if self.is_rational() {
            1
        } else {
            2
        }
    }

    /// Short label: `Q` or the discriminant.
    pub fn label(&self) -> String {
        if self.is_rational() {
            "Q".to_string()
        } else {
            self.disc.to_string()
        }
    }

    /// Constant term of the minimal polynomial `t^2 - D t + n0` of `w`.
    fn n0(&self) -> i64 {
        (self.disc * self.disc - self.disc) / 4
    }

    pub fn mul(&self, u: FieldElement, v: FieldElement) -> FieldElement {
        if self.is_rational() {
            return FieldElement::int(u.x * v.x);
        }
        let yy = u.y * v.y;
        FieldElement::new(u.x * v.x - self.n0() * yy, u.x * v.y + u.y * v.x + self.disc * yy)
    }

    pub fn pow(&self, u: FieldElement, k: u32) -> FieldElement {
        let mut r = FieldElement::ONE;
        for _ in 0..k {
            r = self.mul(r, u);
        }
        r
    }

    /// Absolute norm; nonnegative in both cases (for `Q` this is `|x|`).
    pub fn norm(&self, u: FieldElement) -> i64 {
        if self.is_rational() {
            return u.x.abs();
        }
        u.x * u.x + self.disc * u.x * u.y + self.n0() * u.y * u.y
    }

    pub fn conj(&self, u: FieldElement) -> FieldElement {
        if self.is_rational() {
            return u;
        }
        FieldElement::new(u.x + u.y * self.disc, -u.y)
    }

    /// Every element of norm exactly `n`, in a fixed order (`y` ascending
    /// by absolute value with positive first, then `x` descending).
    pub fn elements_of_norm(&self, n: i64) -> Result<Vec<FieldElement>> {
        if n > self.bounds.search_norm_cap {
            return Err(Error::SearchBound(format!(
                "norm {n} above search cap {}",
                self.bounds.search_norm_cap
            )));
        }
        if self.is_rational() {
            return Ok(if n == 0 {
                vec![FieldElement::ZERO]
            } else {
                vec![FieldElement::int(n), FieldElement::int(-n)]
            });
        }
        // 4N = (2x + D y)^2 + |D| y^2
        let d = self.disc;
        let ymax = arith::isqrt(4 * n / d.abs());
        let mut out = Vec::new();
        for ya in 0..=ymax {
            for y in if ya == 0 { vec![0] } else { vec![ya, -ya] } {
                let rest = 4 * n + d * y * y;
                if rest < 0 {
                    continue;
                }
                let s = arith::isqrt(rest);
                if s * s != rest {
                    continue;
                }
                let mut roots = vec![s];
                if s != 0 {
                    roots.push(-s);
                }
                for t in roots {
                    let twice = t - d * y;
                    if twice % 2 == 0 {
                        out.push(FieldElement::new(twice / 2, y));
                    }
                }
            }
        }
        Ok(out)
    }

    /// The roots of unity, starting with 1 and ordered by powers of a generator.
    pub fn roots_of_unity(&self) -> Vec<FieldElement> {
        let all = self.elements_of_norm(1).expect("norm 1 within bounds");
        let gen = all
            .iter()
            .copied()
            .find(|&z| {
                let mut p = z;
                let mut k = 1;
                while p != FieldElement::ONE {
                    p = self.mul(p, z);
                    k += 1;
                }
                k == self.unit_order
            })
            .expect("unit group generator exists");
        let mut out = vec![FieldElement::ONE];
        let mut p = gen;
        while p != FieldElement::ONE {
            out.push(p);
            p = self.mul(p, gen);
        }
        out
    }

    /// HNF of the lattice spanned by `gens` (must have full rank).
    pub fn ideal_from_gens(&self, gens: &[FieldElement]) -> IdealHNF {
        if self.is_rational() {
            let g = gens.iter().fold(0, |g, e| gcd(g, e.x));
            assert!(g != 0, "zero ideal");
            return IdealHNF { a: g, b: 0, c: 1 };
        }
        let mut pivot = FieldElement::ZERO;
        let mut xs = 0i64;
        for &v in gens {
            if v.y == 0 {
                xs = gcd(xs, v.x);
                continue;
            }
            let (g, u, w) = arith::ext_gcd(pivot.y, v.y);
            let np = pivot.scale(u).add(v.scale(w));
            let other = pivot.scale(v.y / g).sub(v.scale(pivot.y / g));
            debug_assert_eq!(other.y, 0);
            xs = gcd(xs, other.x);
            pivot = np;
            if xs != 0 {
                pivot.x = pivot.x.rem_euclid(xs);
            }
        }
        assert!(xs != 0 && pivot.y != 0, "lattice is not of full rank");
        if pivot.y < 0 {
            pivot = pivot.scale(-1);
        }
        IdealHNF { a: xs, b: pivot.x.rem_euclid(xs), c: pivot.y }
    }

    pub fn principal_ideal(&self, e: FieldElement) -> IdealHNF {
        assert!(!e.is_zero(), "zero ideal");
        if self.is_rational() {
            return IdealHNF { a: e.x.abs(), b: 0, c: 1 };
        }
        self.ideal_from_gens(&[e, self.mul(e, FieldElement::new(0, 1))])
    }

    pub fn int_ideal(&self, n: i64) -> IdealHNF {
        self.principal_ideal(FieldElement::int(n))
    }

    fn ideal_gens(&self, i: &IdealHNF) -> [FieldElement; 2] {
        [FieldElement::int(i.a), FieldElement::new(i.b, i.c)]
    }

    /// Is the lattice `(a, b, c)` closed under multiplication by `w`?
    pub fn is_ideal(&self, i: &IdealHNF) -> bool {
        if self.is_rational() {
            return i.b == 0 && i.c == 1;
        }
        let w = FieldElement::new(0, 1);
        self.ideal_gens(i).iter().all(|&g| i.contains(self.mul(g, w)))
    }

    pub fn ideal_mul(&self, p: &IdealHNF, q: &IdealHNF) -> IdealHNF {
        let gp = self.ideal_gens(p);
        let gq = self.ideal_gens(q);
        let mut gens = Vec::with_capacity(4);
        for u in gp {
            for v in gq {
                gens.push(self.mul(u, v));
            }
        }
        self.ideal_from_gens(&gens)
    }

    pub fn ideal_pow(&self, p: &IdealHNF, k: u32) -> IdealHNF {
        let mut r = IdealHNF::unit();
        for _ in 0..k {
            r = self.ideal_mul(&r, p);
        }
        r
    }

    pub fn ideal_norm(&self, p: &IdealHNF) -> i64 {
        p.norm()
    }

    pub fn ideal_conj(&self, p: &IdealHNF) -> IdealHNF {
        let g = self.ideal_gens(p);
        self.ideal_from_gens(&[self.conj(g[0]), self.conj(g[1])])
    }

    /// `gcd(p, q) = p + q`.
    pub fn ideal_sum(&self, p: &IdealHNF, q: &IdealHNF) -> IdealHNF {
        let mut g = self.ideal_gens(p).to_vec();
        g.extend(self.ideal_gens(q));
        self.ideal_from_gens(&g)
    }

    pub fn coprime(&self, p: &IdealHNF, q: &IdealHNF) -> bool {
        self.ideal_sum(p, q).is_unit()
    }

    /// Divide by a rational integer known to divide the ideal.
    fn ideal_div_int(&self, p: &IdealHNF, n: i64) -> IdealHNF {
        if self.is_rational() {
            return IdealHNF { a: p.a / n, b: 0, c: 1 };
        }
        debug_assert!(p.a % n == 0 && p.b % n == 0 && p.c % n == 0);
        IdealHNF { a: p.a / n, b: p.b / n, c: p.c / n }
    }

    pub fn splitting_type(&self, p: i64) -> Result<SplittingType> {
        if !arith::is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if self.is_rational() {
            return Ok(SplittingType::Split);
        }
        Ok(match arith::kronecker(self.disc, p) {
            1 => SplittingType::Split,
            -1 => SplittingType::Inert,
            _ => SplittingType::Ramified,
        })
    }

    /// Primes above `p`, sorted by `IdealHNF` order.
    pub fn primes_above(&self, p: i64) -> Result<Vec<PrimeIdeal>> {
        let st = self.splitting_type(p)?;
        if self.is_rational() {
            return Ok(vec![PrimeIdeal { ideal: IdealHNF { a: p, b: 0, c: 1 }, p, residue_degree: 1 }]);
        }
        if st == SplittingType::Inert {
            return Ok(vec![PrimeIdeal { ideal: IdealHNF { a: p, b: 0, c: p }, p, residue_degree: 2 }]);
        }
        let n0 = self.n0();
        let mut out = Vec::new();
        for r in 0..p {
            if (r * r - self.disc * r + n0).rem_euclid(p) == 0 {
                let ideal = IdealHNF { a: p, b: (-r).rem_euclid(p), c: 1 };
                debug_assert!(self.is_ideal(&ideal));
                out.push(PrimeIdeal { ideal, p, residue_degree: 1 });
            }
        }
        out.sort();
        out.dedup();
        debug_assert_eq!(out.len(), if st == SplittingType::Split { 2 } else { 1 });
        Ok(out)
    }

    /// The prime ideal given by an HNF, if it is one.
    pub fn as_prime(&self, i: &IdealHNF) -> Option<PrimeIdeal> {
        let f = self.ideal_factor(i).ok()?;
        match f.as_slice() {
            [(p, 1)] => Some(*p),
            _ => None,
        }
    }

    /// Prime factorization, primes in ascending order.
    pub fn ideal_factor(&self, i: &IdealHNF) -> Result<Vec<(PrimeIdeal, u32)>> {
        let mut rest = *i;
        let mut out = Vec::new();
        for (p, _) in arith::factor(i.norm(), self.bounds.prime_bound)? {
            for prime in self.primes_above(p)? {
                let mut e = 0;
                while prime.ideal.divides(&rest) {
                    rest = if prime.ideal == self.int_ideal(p) {
                        self.ideal_div_int(&rest, p)
                    } else {
                        // P * conj(P) = (p) for split and ramified P
                        let conj = self.ideal_conj(&prime.ideal);
                        self.ideal_div_int(&self.ideal_mul(&rest, &conj), p)
                    };
                    e += 1;
                }
                if e > 0 {
                    out.push((prime, e));
                }
            }
        }
        debug_assert!(rest.is_unit());
        Ok(out)
    }

    pub fn ideal_from_factors(&self, f: &[(PrimeIdeal, u32)]) -> IdealHNF {
        f.iter()
            .fold(IdealHNF::unit(), |acc, (p, e)| self.ideal_mul(&acc, &self.ideal_pow(&p.ideal, *e)))
    }

    /// All integral divisors of `a`, sorted.
    pub fn ideal_divisors(&self, a: &IdealHNF) -> Result<Vec<IdealHNF>> {
        let mut out = vec![IdealHNF::unit()];
        for (p, e) in self.ideal_factor(a)? {
            let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
            for d in &out {
                for k in 0..=e {
                    next.push(self.ideal_mul(d, &self.ideal_pow(&p.ideal, k)));
                }
            }
            out = next;
        }
        out.sort();
        Ok(out)
    }

    /// `v_P(e)` for a nonzero integral element.
    pub fn valuation(&self, p: &PrimeIdeal, e: FieldElement) -> u32 {
        assert!(!e.is_zero(), "valuation of zero");
        let mut k = 0;
        let mut pk = p.ideal;
        while pk.contains(e) {
            k += 1;
            pk = self.ideal_mul(&pk, &p.ideal);
        }
        k
    }

    /// `v_P` of a field element `num/den`.
    pub fn valuation_k(&self, p: &PrimeIdeal, e: &KElement) -> i64 {
        self.valuation(p, e.num) as i64 - self.valuation(p, FieldElement::int(e.den)) as i64
    }

    /// A generator of `i` if it is principal.
    pub fn principal_generator(&self, i: &IdealHNF) -> Result<Option<FieldElement>> {
        if self.is_rational() {
            return Ok(Some(FieldElement::int(i.a)));
        }
        Ok(self.elements_of_norm(i.norm())?.into_iter().find(|&e| i.contains(e)))
    }

    /// Fixed uniformizer at `p`: the first element of least norm with `v_p = 1`.
    pub fn uniformizer(&self, p: &PrimeIdeal) -> FieldElement {
        if self.is_rational() {
            return FieldElement::int(p.p);
        }
        let np = p.norm();
        let mut m = 1;
        loop {
            for e in self.elements_of_norm(np * m).expect("uniformizer search within bounds") {
                if p.ideal.contains(e) && self.valuation(p, e) == 1 {
                    return e;
                }
            }
            m += 1;
        }
    }

    /// All integral ideals of norm `n`, sorted.
    pub fn ideals_of_norm(&self, n: i64) -> Vec<IdealHNF> {
        if self.is_rational() {
            return vec![IdealHNF { a: n, b: 0, c: 1 }];
        }
        let mut out = Vec::new();
        for c in 1..=n {
            if n % c != 0 {
                continue;
            }
            let a = n / c;
            if a % c != 0 {
                continue;
            }
            let mut b = 0;
            while b < a {
                let i = IdealHNF { a, b, c };
                if self.is_ideal(&i) {
                    out.push(i);
                }
                b += c;
            }
        }
        out.sort();
        out
    }
}
