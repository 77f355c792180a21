//! Roots, affine roots and the affine Weyl group of type `C_n`.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use num_rational::Rational64;
use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Root {
    coeffs: Vec<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootShape {
    /// `s·ε_j + t·ε_k` with `j < k`.
    Short { j: usize, k: usize, sj: i32, sk: i32 },
    /// `s·2ε_j`.
    Long { j: usize, s: i32 },
}

impl Root {
    pub fn new(coeffs: Vec<i32>) -> Result<Self> {
        let nz: Vec<(usize, i32)> = coeffs.iter().copied().enumerate().filter(|&(_, c)| c != 0).collect();
        let ok = match nz.as_slice() {
            [(_, c)] => c.abs() == 2,
            [(_, a), (_, b)] => a.abs() == 1 && b.abs() == 1,
            _ => false,
        };
        if !ok {
            return Err(Error::InvalidRoot(coeffs));
        }
        Ok(Root { coeffs })
    }

    /// `s_j ε_j + s_k ε_k` (or `2 s_j ε_j` when `j == k`), zero-based indices.
    pub fn from_pair(n: usize, j: usize, sj: i32, k: usize, sk: i32) -> Result<Self> {
        let mut c = vec![0; n];
        if j >= n || k >= n {
            return Err(Error::OutOfRange { index: j.max(k), max: n - 1 });
        }
        c[j] += sj;
        c[k] += sk;
        Root::new(c)
    }

    pub fn long(n: usize, j: usize, s: i32) -> Result<Self> {
        Root::from_pair(n, j, s, j, s)
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[i32] {
        &self.coeffs
    }

    pub fn shape(&self) -> RootShape {
        let nz: Vec<(usize, i32)> = self.coeffs.iter().copied().enumerate().filter(|&(_, c)| c != 0).collect();
        match nz.as_slice() {
            [(j, c)] => RootShape::Long { j: *j, s: c.signum() },
            [(j, a), (k, b)] => RootShape::Short { j: *j, k: *k, sj: *a, sk: *b },
            _ => unreachable!("validated at construction"),
        }
    }

    pub fn neg(&self) -> Root {
        Root { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn is_long(&self) -> bool {
        matches!(self.shape(), RootShape::Long { .. })
    }

    /// Positive for the ordering in which `ε_1 > ε_2 > ... > ε_n > 0`.
    pub fn is_positive(&self) -> bool {
        self.coeffs.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
    }

    pub fn pair(&self, a: &[Rational64]) -> Rational64 {
        self.coeffs.iter().zip(a).map(|(&c, x)| x * c as i64).sum()
    }
}

impl fmt::Display for Root {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let sign = if c < 0 { "-" } else if first { "" } else { "+" };
            let mag = if c.abs() == 1 { String::new() } else { c.abs().to_string() };
            write!(f, "{sign}{mag}e{}", j + 1)?;
            first = false;
        }
        Ok(())
    }
}

/// The affine functional `α + m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct AffineRoot {
    pub root: Root,
    pub offset: i32,
}

impl AffineRoot {
    pub fn new(root: Root, offset: i32) -> Self {
        AffineRoot { root, offset }
    }

    pub fn eval(&self, a: &[Rational64]) -> Rational64 {
        self.root.pair(a) + Rational64::from_integer(self.offset as i64)
    }

    /// `−(α + m) + 1`.
    pub fn opposite_plus_one(&self) -> AffineRoot {
        AffineRoot { root: self.root.neg(), offset: 1 - self.offset }
    }
}

impl fmt::Display for AffineRoot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:+}", self.root, self.offset)
    }
}

pub fn all_roots(n: usize) -> Vec<Root> {
    let mut out = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for k in j + 1..n {
            for (sj, sk) in [(1, -1), (-1, 1), (1, 1), (-1, -1)] {
                out.push(Root::from_pair(n, j, sj, k, sk).unwrap());
            }
        }
    }
    for j in 0..n {
        out.push(Root::long(n, j, 1).unwrap());
        out.push(Root::long(n, j, -1).unwrap());
    }
    out.sort();
    out
}

pub fn positive_roots(n: usize) -> Vec<Root> {
    all_roots(n).into_iter().filter(Root::is_positive).collect()
}

/// `[α_0, ..., α_n]` with `α_0 = −2ε_1 + 1`, `α_i = ε_i − ε_{i+1}`, `α_n = 2ε_n`.
pub fn simple_affine(n: usize) -> Vec<AffineRoot> {
    let mut out = vec![AffineRoot::new(Root::long(n, 0, -1).unwrap(), 1)];
    for i in 0..n.saturating_sub(1) {
        out.push(AffineRoot::new(Root::from_pair(n, i, 1, i + 1, -1).unwrap(), 0));
    }
    out.push(AffineRoot::new(Root::long(n, n - 1, 1).unwrap(), 0));
    out
}

/// The coroot `α̌`, with `(α̌, α) = 2`.
pub fn coroot(a: &Root) -> Vec<i32> {
    match a.shape() {
        RootShape::Long { .. } => a.coeffs.iter().map(|c| c / 2).collect(),
        RootShape::Short { .. } => a.coeffs.clone(),
    }
}

pub fn affine_reflect(mu: &AffineRoot, a: &[Rational64]) -> Vec<Rational64> {
    let v = mu.eval(a);
    a.iter().zip(coroot(&mu.root)).map(|(x, c)| x - v * c as i64).collect()
}

pub fn vertex(n: usize, i: usize) -> Result<Vec<Rational64>> {
    if i > n {
        return Err(Error::OutOfRange { index: i, max: n });
    }
    Ok((0..n).map(|j| if j < i { Rational64::new(1, 2) } else { Rational64::zero() }).collect())
}

pub fn chamber_contains(a: &[Rational64]) -> bool {
    let one = Rational64::from_integer(1);
    simple_affine(a.len()).iter().all(|mu| {
        let v = mu.eval(a);
        v.is_positive() && v < one
    })
}

/// Affine roots generating `K_i` together with the torus: every simple
/// affine root and `−α_i + 1`.
pub fn ki_affine_roots(n: usize, i: usize) -> Result<Vec<AffineRoot>> {
    if i > n {
        return Err(Error::OutOfRange { index: i, max: n });
    }
    let mut out = simple_affine(n);
    let extra = out[i].opposite_plus_one();
    out.push(extra);
    Ok(out)
}

/// An element `a ↦ A a + d` of the affine Weyl group.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AffineWeylElement {
    /// Signed permutation: row `r` has the single entry `sign` in column `col`.
    linear: Vec<(usize, i32)>,
    translation: Vec<i32>,
}

impl AffineWeylElement {
    pub fn identity(n: usize) -> Self {
        AffineWeylElement { linear: (0..n).map(|j| (j, 1)).collect(), translation: vec![0; n] }
    }

    pub fn translation(d: Vec<i32>) -> Self {
        let mut t = Self::identity(d.len());
        t.translation = d;
        t
    }

    /// Reflection `s_α` of the finite Weyl group.
    pub fn reflection(a: &Root) -> Self {
        let n = a.rank();
        let c = coroot(a);
        // s_α(x) = x − (α, x) α̌; acts on basis vectors as a signed permutation
        let mut cols: Vec<Vec<i32>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut v = vec![0; n];
            v[j] = 1;
            let pair = a.coeffs[j];
            for (vk, ck) in v.iter_mut().zip(&c) {
                *vk -= pair * ck;
            }
            cols.push(v);
        }
        let mut linear = vec![(0, 0); n];
        for (j, col) in cols.iter().enumerate() {
            let (r, &s) = col.iter().enumerate().find(|(_, &x)| x != 0).unwrap();
            linear[r] = (j, s);
        }
        AffineWeylElement { linear, translation: vec![0; n] }
    }

    /// `s_{α+m} = T(−m α̌) s_α`.
    pub fn affine_reflection(mu: &AffineRoot) -> Self {
        let t: Vec<i32> = coroot(&mu.root).iter().map(|c| -mu.offset * c).collect();
        Self::translation(t).compose(&Self::reflection(&mu.root))
    }

    pub fn rank(&self) -> usize {
        self.translation.len()
    }

    pub fn linear_matrix(&self) -> Vec<Vec<i32>> {
        let n = self.rank();
        let mut m = vec![vec![0; n]; n];
        for (r, &(c, s)) in self.linear.iter().enumerate() {
            m[r][c] = s;
        }
        m
    }

    pub fn translation_part(&self) -> &[i32] {
        &self.translation
    }

    fn apply_linear_int(&self, v: &[i32]) -> Vec<i32> {
        self.linear.iter().map(|&(c, s)| s * v[c]).collect()
    }

    /// `(A, d)(B, e) = (AB, d + A e)`.
    pub fn compose(&self, other: &Self) -> Self {
        let linear = self.linear.iter().map(|&(c, s)| (other.linear[c].0, s * other.linear[c].1)).collect();
        let ae = self.apply_linear_int(&other.translation);
        let translation = self.translation.iter().zip(ae).map(|(d, x)| d + x).collect();
        AffineWeylElement { linear, translation }
    }

    pub fn apply(&self, a: &[Rational64]) -> Vec<Rational64> {
        self.linear
            .iter()
            .zip(&self.translation)
            .map(|(&(c, s), &d)| a[c] * s as i64 + d as i64)
            .collect()
    }

    pub fn is_minus_identity(&self) -> bool {
        self.linear.iter().enumerate().all(|(r, &(c, s))| r == c && s == -1)
            && self.translation.iter().all(|&d| d == 0)
    }
}

/// The finite Weyl group `W(C_n)` as the closure of the simple reflections.
pub fn generate_finite_weyl(n: usize) -> Result<Vec<AffineWeylElement>> {
    if n == 0 || n > 4 {
        return Err(Error::BoundExceeded(format!("Weyl group enumeration for n = {n}")));
    }
    let gens: Vec<AffineWeylElement> =
        simple_affine(n)[1..].iter().map(|mu| AffineWeylElement::reflection(&mu.root)).collect();
    let id = AffineWeylElement::identity(n);
    let mut seen: HashSet<AffineWeylElement> = HashSet::from([id.clone()]);
    let mut queue = VecDeque::from([id]);
    let mut out = Vec::new();
    while let Some(g) = queue.pop_front() {
        for s in &gens {
            let h = g.compose(s);
            if seen.insert(h.clone()) {
                queue.push_back(h);
            }
        }
        out.push(g);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DynkinEdge {
    pub a: usize,
    pub b: usize,
    pub bond: u32,
    /// Index of the shorter root, toward which the arrow points, for multiple bonds.
    pub arrow_to: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DynkinDiagram {
    pub vertices: Vec<usize>,
    pub edges: Vec<DynkinEdge>,
}

impl DynkinDiagram {
    /// Connected components, as sorted lists of node indices.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = HashSet::new();
        let mut comps = Vec::new();
        for &v in &self.vertices {
            if !seen.insert(v) {
                continue;
            }
            let mut comp = vec![v];
            let mut queue = VecDeque::from([v]);
            while let Some(x) = queue.pop_front() {
                for e in &self.edges {
                    let y = if e.a == x { e.b } else if e.b == x { e.a } else { continue };
                    if seen.insert(y) {
                        comp.push(y);
                        queue.push_back(y);
                    }
                }
            }
            comp.sort();
            comps.push(comp);
        }
        comps
    }
}

fn dot(a: &[i32], b: &[i32]) -> i32 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// The extended Dynkin diagram on `α_0, ..., α_n`, optionally with one node removed.
pub fn dynkin_adjacency(n: usize, removed: Option<usize>) -> Result<DynkinDiagram> {
    if let Some(i) = removed {
        if i > n {
            return Err(Error::OutOfRange { index: i, max: n });
        }
    }
    let roots: Vec<Vec<i32>> = simple_affine(n).iter().map(|mu| mu.root.coeffs.clone()).collect();
    let vertices: Vec<usize> = (0..=n).filter(|&v| Some(v) != removed).collect();
    let mut edges = Vec::new();
    for (x, &a) in vertices.iter().enumerate() {
        for &b in &vertices[x + 1..] {
            let (ra, rb) = (&roots[a], &roots[b]);
            let ab = dot(ra, rb);
            if ab == 0 {
                continue;
            }
            // a_ab · a_ba = 4(α,β)² / ((α,α)(β,β))
            let (aa, bb) = (dot(ra, ra), dot(rb, rb));
            let bond = (4 * ab * ab / (aa * bb)) as u32;
            let arrow_to = match aa.cmp(&bb) {
                std::cmp::Ordering::Less => Some(a),
                std::cmp::Ordering::Greater => Some(b),
                std::cmp::Ordering::Equal => None,
            };
            edges.push(DynkinEdge { a, b, bond, arrow_to });
        }
    }
    Ok(DynkinDiagram { vertices, edges })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(v: &[i32]) -> Root {
        Root::new(v.to_vec()).unwrap()
    }

    fn q(a: i64, b: i64) -> Rational64 {
        Rational64::new(a, b)
    }

    #[test]
    fn root_counts() {
        assert_eq!(all_roots(1).len(), 2);
        assert_eq!(all_roots(2).len(), 8);
        assert_eq!(all_roots(3).len(), 18);
        assert!(Root::new(vec![1, 1, 1]).is_err());
        assert!(Root::new(vec![2, 1]).is_err());
        let s = simple_affine(1);
        assert_eq!(s, vec![AffineRoot::new(r(&[-2]), 1), AffineRoot::new(r(&[2]), 0)]);
    }

    #[test]
    fn coroots() {
        assert_eq!(coroot(&r(&[2, 0])), vec![1, 0]);
        assert_eq!(coroot(&r(&[1, -1])), vec![1, -1]);
        assert_eq!(coroot(&r(&[0, 0, -2])), vec![0, 0, -1]);
        for a in all_roots(3) {
            assert_eq!(dot(&coroot(&a), a.coeffs()), 2);
        }
    }

    #[test]
    fn reflections() {
        let a0 = &simple_affine(2)[0];
        assert_eq!(affine_reflect(a0, &[q(0, 1), q(0, 1)]), vec![q(1, 1), q(0, 1)]);
        let mu = AffineRoot::new(r(&[2, 0]), 0);
        assert_eq!(affine_reflect(&mu, &[q(1, 2), q(0, 1)]), vec![q(-1, 2), q(0, 1)]);
        for mu in ki_affine_roots(3, 1).unwrap() {
            let a = vec![q(1, 3), q(-2, 5), q(7, 4)];
            assert_eq!(affine_reflect(&mu, &affine_reflect(&mu, &a)), a);
            let w = AffineWeylElement::affine_reflection(&mu);
            assert_eq!(w.apply(&a), affine_reflect(&mu, &a));
        }
    }

    #[test]
    fn delta_relation() {
        let delta = r(&[2, 0]);
        let lhs = AffineWeylElement::affine_reflection(&AffineRoot::new(delta.neg(), 1));
        let rhs = AffineWeylElement::translation(coroot(&delta))
            .compose(&AffineWeylElement::reflection(&delta.neg()));
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn vertices_and_chamber() {
        assert_eq!(vertex(3, 1).unwrap(), vec![q(1, 2), q(0, 1), q(0, 1)]);
        assert_eq!(vertex(2, 2).unwrap(), vec![q(1, 2), q(1, 2)]);
        assert!(vertex(2, 3).is_err());
        for n in 1..=3 {
            for i in 0..=n {
                assert!(!chamber_contains(&vertex(n, i).unwrap()));
            }
        }
        assert!(chamber_contains(&[q(3, 8), q(1, 8)]));
    }

    #[test]
    fn ki_roots_nonnegative() {
        let k = ki_affine_roots(1, 0).unwrap();
        assert_eq!(k[2], AffineRoot::new(r(&[2]), 0));
        let k = ki_affine_roots(1, 1).unwrap();
        assert_eq!(k[2], k[0]);
        let z1 = vertex(2, 1).unwrap();
        let vals: Vec<Rational64> = ki_affine_roots(2, 1).unwrap().iter().map(|mu| mu.eval(&z1)).collect();
        assert_eq!(vals, vec![q(0, 1), q(1, 2), q(0, 1), q(1, 2)]);
        for n in 1..=3 {
            for i in 0..=n {
                let z = vertex(n, i).unwrap();
                for mu in ki_affine_roots(n, i).unwrap() {
                    assert!(mu.eval(&z) >= q(0, 1), "{mu} at z_{i}");
                }
            }
        }
    }

    #[test]
    fn weyl_orders() {
        for (n, order) in [(1, 2), (2, 8), (3, 48), (4, 384)] {
            let w = generate_finite_weyl(n).unwrap();
            assert_eq!(w.len(), order);
            assert!(w.iter().any(AffineWeylElement::is_minus_identity));
        }
        assert!(generate_finite_weyl(5).is_err());
    }

    #[test]
    fn dynkin() {
        let d = dynkin_adjacency(2, None).unwrap();
        assert_eq!(d.vertices.len(), 3);
        assert_eq!(d.edges.len(), 2);
        assert!(d.edges.iter().all(|e| e.bond == 2));
        let d = dynkin_adjacency(3, Some(1)).unwrap();
        assert_eq!(d.components(), vec![vec![0], vec![2, 3]]);
        let d = dynkin_adjacency(2, Some(0)).unwrap();
        assert_eq!(d.components(), vec![vec![1, 2]]);
        assert_eq!(d.edges[0].arrow_to, Some(1));
        let d = dynkin_adjacency(1, None).unwrap();
        assert_eq!(d.edges[0].bond, 4);
    }
}
