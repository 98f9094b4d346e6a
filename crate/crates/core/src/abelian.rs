//! Finite abelian groups given by generators and relations, reduced to Smith
//! normal form.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

/// Smith normal form `D = U * A * V` of an integer relation matrix. Only the
/// column transform `V` and its inverse are kept.
#[derive(Debug, Clone)]
pub struct Snf {
    pub diag: Vec<i64>,
    pub v: Vec<Vec<i64>>,
    pub vinv: Vec<Vec<i64>>,
}

pub fn smith_normal_form(rels: &[Vec<i64>], ncols: usize) -> Snf {
    let mut a: Vec<Vec<i64>> = rels.to_vec();
    let nrows = a.len();
    let mut v: Vec<Vec<i64>> = (0..ncols).map(|i| unit_row(ncols, i)).collect();
    let mut vinv = v.clone();

    let swap_cols = |a: &mut Vec<Vec<i64>>, v: &mut Vec<Vec<i64>>, vinv: &mut Vec<Vec<i64>>, i: usize, j: usize| {
        for row in a.iter_mut() {
            row.swap(i, j);
        }
        for row in v.iter_mut() {
            row.swap(i, j);
        }
        vinv.swap(i, j);
    };
    // col_j -= q * col_i
    let col_op = |a: &mut Vec<Vec<i64>>, v: &mut Vec<Vec<i64>>, vinv: &mut Vec<Vec<i64>>, i: usize, j: usize, q: i64| {
        if q == 0 {
            return;
        }
        for row in a.iter_mut() {
            row[j] -= q * row[i];
        }
        for row in v.iter_mut() {
            row[j] -= q * row[i];
        }
        let rj = vinv[j].clone();
        for (x, y) in vinv[i].iter_mut().zip(rj) {
            *x += q * y;
        }
    };

    let mut diag = Vec::new();
    for t in 0..ncols.min(nrows) {
        loop {
            // smallest nonzero entry of the trailing block
            let mut best: Option<(usize, usize, i64)> = None;
            for (i, row) in a.iter().enumerate().skip(t) {
                for (j, &x) in row.iter().enumerate().skip(t) {
                    if x != 0 && best.map_or(true, |(_, _, b)| x.abs() < b) {
                        best = Some((i, j, x.abs()));
                    }
                }
            }
            let Some((bi, bj, _)) = best else {
                break;
            };
            a.swap(t, bi);
            if bj != t {
                swap_cols(&mut a, &mut v, &mut vinv, t, bj);
            }
            let p = a[t][t];
            let mut clean = true;
            for i in t + 1..nrows {
                let q = a[i][t].div_euclid(p);
                if q != 0 {
                    let rt = a[t].clone();
                    for (x, y) in a[i].iter_mut().zip(rt) {
                        *x -= q * y;
                    }
                }
                if a[i][t] != 0 {
                    clean = false;
                }
            }
            for j in t + 1..ncols {
                let q = a[t][j].div_euclid(p);
                col_op(&mut a, &mut v, &mut vinv, t, j, q);
                if a[t][j] != 0 {
                    clean = false;
                }
            }
            if !clean {
                continue;
            }
            // divisibility condition on the trailing block
            let bad = (t + 1..nrows).find(|&i| a[i][t + 1..].iter().any(|&x| x % p != 0));
            match bad {
                Some(i) => {
                    let ri = a[i].clone();
                    for (x, y) in a[t].iter_mut().zip(ri) {
                        *x += y;
                    }
                }
                None => break,
            }
        }
        if t >= nrows || a[t][t] == 0 {
            diag.push(0);
            continue;
        }
        if a[t][t] < 0 {
            for row in a.iter_mut() {
                row[t] = -row[t];
            }
            for row in v.iter_mut() {
                row[t] = -row[t];
            }
            for x in vinv[t].iter_mut() {
                *x = -*x;
            }
        }
        diag.push(a[t][t]);
    }
    while diag.len() < ncols {
        diag.push(0);
    }
    Snf { diag, v, vinv }
}

fn unit_row(n: usize, i: usize) -> Vec<i64> {
    let mut r = vec![0; n];
    r[i] = 1;
    r
}

/// `d1 | d2 | ... | dk`, all `> 1`. Elements are exponent vectors reduced
/// into `[0, d_i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FiniteAbelianGroup {
    pub invariants: Vec<i64>,
}

pub type GroupElem = Vec<i64>;

impl FiniteAbelianGroup {
    pub fn trivial() -> Self {
        FiniteAbelianGroup { invariants: Vec::new() }
    }

    pub fn order(&self) -> u64 {
        self.invariants.iter().map(|&d| d as u64).product()
    }

    pub fn rank(&self) -> usize {
        self.invariants.len()
    }

    pub fn zero(&self) -> GroupElem {
        vec![0; self.rank()]
    }

    pub fn reduce(&self, x: &[i64]) -> GroupElem {
        x.iter().zip(&self.invariants).map(|(&a, &d)| a.rem_euclid(d)).collect()
    }

    pub fn add(&self, x: &[i64], y: &[i64]) -> GroupElem {
        x.iter().zip(y).zip(&self.invariants).map(|((a, b), d)| (a + b).rem_euclid(*d)).collect()
    }

    pub fn neg(&self, x: &[i64]) -> GroupElem {
        x.iter().zip(&self.invariants).map(|(a, d)| (-a).rem_euclid(*d)).collect()
    }

    pub fn sub(&self, x: &[i64], y: &[i64]) -> GroupElem {
        self.add(x, &self.neg(y))
    }

    pub fn scale(&self, x: &[i64], k: i64) -> GroupElem {
        x.iter().zip(&self.invariants).map(|(a, d)| ((*a as i128 * k as i128).rem_euclid(*d as i128)) as i64).collect()
    }

    pub fn is_zero(&self, x: &[i64]) -> bool {
        x.iter().all(|&a| a == 0)
    }

    pub fn element_order(&self, x: &[i64]) -> i64 {
        x.iter()
            .zip(&self.invariants)
            .map(|(&a, &d)| d / crate::arith::gcd(a, d))
            .fold(1, crate::arith::lcm)
    }

    /// Mixed-radix index, first coordinate most significant.
    pub fn index_of(&self, x: &[i64]) -> usize {
        x.iter().zip(&self.invariants).fold(0usize, |acc, (&a, &d)| acc * d as usize + a as usize)
    }

    pub fn from_index(&self, mut i: usize) -> GroupElem {
        let mut out = vec![0; self.rank()];
        for k in (0..self.rank()).rev() {
            let d = self.invariants[k] as usize;
            out[k] = (i % d) as i64;
            i /= d;
        }
        out
    }

    pub fn elements(&self) -> impl Iterator<Item = GroupElem> + '_ {
        (0..self.order() as usize).map(move |i| self.from_index(i))
    }
}

/// A presentation `Z^n / rows(R)` together with the change of coordinates to
/// its Smith form.
#[derive(Debug, Clone)]
pub struct Presentation {
    pub group: FiniteAbelianGroup,
    num_gens: usize,
    v: Vec<Vec<i64>>,
    vinv: Vec<Vec<i64>>,
    keep: Vec<usize>,
}

impl Presentation {
    /// Relations must have full rank (finite quotient).
    pub fn new(rels: &[Vec<i64>], num_gens: usize) -> Self {
        let snf = smith_normal_form(rels, num_gens);
        assert!(snf.diag.iter().all(|&d| d > 0), "relations do not present a finite group");
        let keep: Vec<usize> = (0..num_gens).filter(|&i| snf.diag[i] > 1).collect();
        let group = FiniteAbelianGroup { invariants: keep.iter().map(|&i| snf.diag[i]).collect() };
        Presentation { group, num_gens, v: snf.v, vinv: snf.vinv, keep }
    }

    pub fn num_gens(&self) -> usize {
        self.num_gens
    }

    /// Class of the generator combination `x` in SNF coordinates.
    pub fn reduce(&self, x: &[i64]) -> GroupElem {
        debug_assert_eq!(x.len(), self.num_gens);
        let out: Vec<i64> = self
            .keep
            .iter()
            .map(|&k| {
                x.iter().enumerate().fold(0i128, |acc, (i, &xi)| acc + xi as i128 * self.v[i][k] as i128) as i64
            })
            .collect();
        self.group.reduce(&out)
    }

    /// Coefficients, over the original generators, of the `k`-th SNF generator.
    pub fn snf_generator(&self, k: usize) -> &[i64] {
        &self.vinv[self.keep[k]]
    }
}

/// A group given by an explicit list of its elements, with discrete log by table.
#[derive(Debug, Clone)]
pub struct EnumeratedGroup<T: Clone + Eq + Hash> {
    pub group: FiniteAbelianGroup,
    pub generators: Vec<T>,
    elements: Vec<T>,
    log: HashMap<T, GroupElem>,
}

impl<T: Clone + Eq + Hash> EnumeratedGroup<T> {
    /// Greedy generation over `elements` (which must be the whole group),
    /// then SNF of the triangular relation matrix.
    pub fn from_elements(identity: T, elements: &[T], mul: impl Fn(&T, &T) -> T) -> Self {
        let mut greedy: Vec<T> = Vec::new();
        let mut coords: HashMap<T, Vec<i64>> = HashMap::new();
        coords.insert(identity.clone(), Vec::new());
        let mut members: Vec<T> = vec![identity.clone()];
        let mut rels: Vec<Vec<i64>> = Vec::new();

        for g in elements {
            if coords.contains_key(g) {
                continue;
            }
            let n = greedy.len();
            let mut m = 1i64;
            let mut gm = g.clone();
            while !coords.contains_key(&gm) {
                gm = mul(&gm, g);
                m += 1;
            }
            let mut rel: Vec<i64> = coords[&gm].iter().map(|c| -c).collect();
            rel.resize(n, 0);
            rel.push(m);
            for r in rels.iter_mut() {
                r.push(0);
            }
            rels.push(rel);
            for c in coords.values_mut() {
                c.resize(n + 1, 0);
            }
            let old = members.clone();
            let mut gt = g.clone();
            for t in 1..m {
                for h in &old {
                    let e = mul(h, &gt);
                    let mut c = coords[h].clone();
                    c[n] = t;
                    coords.insert(e.clone(), c);
                    members.push(e);
                }
                gt = mul(&gt, g);
            }
            greedy.push(g.clone());
        }

        let ngens = greedy.len();
        let pres = Presentation::new(&rels, ngens);
        let order = members.len() as i64;
        let log: HashMap<T, GroupElem> = coords
            .into_iter()
            .map(|(k, mut c)| {
                c.resize(ngens, 0);
                (k, pres.reduce(&c))
            })
            .collect();
        let pow = |x: &T, e: i64| {
            let mut r = identity.clone();
            for _ in 0..e.rem_euclid(order) {
                r = mul(&r, x);
            }
            r
        };
        let generators = (0..pres.group.rank())
            .map(|k| {
                pres.snf_generator(k)
                    .iter()
                    .zip(&greedy)
                    .fold(identity.clone(), |acc, (&e, g)| mul(&acc, &pow(g, e)))
            })
            .collect();
        let mut elements = vec![identity; pres.group.order() as usize];
        for (k, c) in &log {
            elements[pres.group.index_of(c)] = k.clone();
        }
        EnumeratedGroup { group: pres.group, generators, elements, log }
    }

    pub fn log(&self, x: &T) -> Option<&GroupElem> {
        self.log.get(x)
    }

    pub fn exp(&self, c: &[i64]) -> &T {
        &self.elements[self.group.index_of(&self.group.reduce(c))]
    }

    pub fn order(&self) -> u64 {
        self.group.order()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snf_diagonal_examples() {
        let p = Presentation::new(&[vec![2, 0], vec![0, 3]], 2);
        assert_eq!(p.group.invariants, vec![6]);
        let p = Presentation::new(&[vec![2, 0], vec![0, 4]], 2);
        assert_eq!(p.group.invariants, vec![2, 4]);
        let p = Presentation::new(&[vec![1, 0], vec![0, 1]], 2);
        assert!(p.group.invariants.is_empty());
        let p = Presentation::new(&[vec![4, 6], vec![6, 4], vec![2, 2]], 2);
        // gcd of the 2x2 minors (-20, -4, 4)
        assert_eq!(p.group.order(), 4);
    }

    #[test]
    fn presentation_reduce_respects_relations() {
        let rels = vec![vec![4, 6, 0], vec![0, 6, 9], vec![2, 0, 3]];
        let p = Presentation::new(&rels, 3);
        for r in &rels {
            assert!(p.group.is_zero(&p.reduce(r)));
        }
        // reduce is a surjective homomorphism onto the group
        let mut seen = std::collections::HashSet::new();
        for a in 0..12 {
            for b in 0..12 {
                for c in 0..12 {
                    seen.insert(p.reduce(&[a, b, c]));
                }
            }
        }
        assert_eq!(seen.len() as u64, p.group.order());
    }

    #[test]
    fn enumerated_units_mod_n() {
        for n in [4i64, 8, 9, 15, 16, 21, 24, 125] {
            let units: Vec<i64> = (1..n).filter(|&x| crate::arith::gcd(x, n) == 1).collect();
            let g = EnumeratedGroup::from_elements(1 % n, &units, |a, b| a * b % n);
            assert_eq!(g.order() as usize, units.len(), "n={n}");
            for &x in &units {
                for &y in &units {
                    let lx = g.log(&x).unwrap();
                    let ly = g.log(&y).unwrap();
                    assert_eq!(g.log(&(x * y % n)).unwrap(), &g.group.add(lx, ly));
                }
                assert_eq!(*g.exp(g.log(&x).unwrap()), x);
            }
            for (k, gen) in g.generators.iter().enumerate() {
                let mut e = g.group.zero();
                e[k] = 1;
                assert_eq!(g.log(gen).unwrap(), &e);
            }
        }
        let g8 = EnumeratedGroup::from_elements(1, &[1i64, 3, 5, 7], |a, b| a * b % 8);
        assert_eq!(g8.group.invariants, vec![2, 2]);
    }
}
