//! The Schrödinger model on finite quotients `⊕_j π^{supp_j}𝔬 / π^{inv_j}𝔬`
//! of `Y = 𝐤^n`.
//!
//! Everything is projective: the scalars attached to `w̃` and to torus
//! elements are dropped and the Fourier sum carries no measure factor, so all
//! matrix entries lie in `Z[ζ]`.

use std::fmt;
use once_cell::sync::OnceCell;

use crate::error::{Error, Result};
use crate::localfield::{AdditiveCharacter, FieldSpec, TruncatedElement, EXACT_WIDTH};
use crate::rootsystem::RootShape;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;

use crate::linalg;
use crate::scalars::{euler_phi, Cyclotomic, RootOfUnity, ZetaSum};
use crate::symplectic::{GeneratorLabel, SymplecticMatrix};

/// Coefficients of a Schwartz function, one per coset in index order.
pub type SchwartzVector = Vec<ZetaSum>;

const MAX_COSETS: u64 = 1 << 20;

/// Functions on `⊕_j π^{supp_j}𝔬 / π^{inv_j}𝔬`. Cosets are indexed in mixed
/// radix with coordinate 0 most significant; coordinate `j` of a coset is the
/// digit code of its representative on the window `[supp_j, inv_j)`.
#[derive(Debug, Clone)]
pub struct QuotientSpace {
    field: FieldSpec,
    supp: Vec<i32>,
    inv: Vec<i32>,
    radix: Vec<u64>,
    size: usize,
    neg: OnceCell<Vec<usize>>,
}

impl PartialEq for QuotientSpace {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field && self.supp == other.supp && self.inv == other.inv
    }
}

impl fmt::Display for QuotientSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w: Vec<String> = self.supp.iter().zip(&self.inv).map(|(s, v)| format!("[{s},{v})")).collect();
        write!(f, "S({})", w.join("x"))
    }
}

impl QuotientSpace {
    pub fn new(field: &FieldSpec, supp: Vec<i32>, inv: Vec<i32>) -> Result<Self> {
        if supp.len() != inv.len() || supp.is_empty() {
            return Err(Error::InvalidSpace(format!("parameter lengths {} and {}", supp.len(), inv.len())));
        }
        let mut radix = Vec::with_capacity(supp.len());
        let mut total: u64 = 1;
        for (j, (&s, &v)) in supp.iter().zip(&inv).enumerate() {
            if s > v {
                return Err(Error::InvalidSpace(format!("coordinate {j}: support {s} exceeds invariance {v}")));
            }
            let r = field.q_pow(v - s)?;
            total = total.saturating_mul(r);
            if total > MAX_COSETS {
                return Err(Error::BoundExceeded(format!("more than {MAX_COSETS} cosets")));
            }
            radix.push(r);
        }
        Ok(QuotientSpace { field: field.clone(), supp, inv, radix, size: total as usize, neg: OnceCell::new() })
    }

    fn neg_table(&self) -> &[usize] {
        self.neg.get_or_init(|| {
            let coord_neg: Vec<Vec<u64>> =
                (0..self.n()).map(|j| (0..self.radix[j]).map(|c| self.neg_code(j, c)).collect()).collect();
            (0..self.size)
                .map(|idx| {
                    let negs: Vec<u64> =
                        self.codes(idx).iter().enumerate().map(|(j, &c)| coord_neg[j][c as usize]).collect();
                    self.index(&negs)
                })
                .collect()
        })
    }

    /// `S_{i,m} = S(π^{−m} L'_i / 2π^m L_i)`.
    pub fn s_im(field: &FieldSpec, n: usize, i: usize, m: i32) -> Result<Self> {
        check_vertex(n, i)?;
        let e = field.e();
        let inv = (0..n).map(|j| if j < i { e + m + 1 } else { e + m }).collect();
        QuotientSpace::new(field, vec![-m; n], inv)
    }

    /// `S'_{i,m} = S(π^{−m} L_i / 2π^m L'_i)`.
    pub fn s_prime_im(field: &FieldSpec, n: usize, i: usize, m: i32) -> Result<Self> {
        check_vertex(n, i)?;
        let supp = (0..n).map(|j| if j < i { 1 - m } else { -m }).collect();
        QuotientSpace::new(field, supp, vec![field.e() + m; n])
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn n(&self) -> usize {
        self.supp.len()
    }

    pub fn supp(&self) -> &[i32] {
        &self.supp
    }

    pub fn inv(&self) -> &[i32] {
        &self.inv
    }

    pub fn radix(&self) -> &[u64] {
        &self.radix
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn codes(&self, idx: usize) -> Vec<u64> {
        let mut rest = idx as u64;
        let mut out = vec![0; self.n()];
        for j in (0..self.n()).rev() {
            out[j] = rest % self.radix[j];
            rest /= self.radix[j];
        }
        out
    }

    pub fn index(&self, codes: &[u64]) -> usize {
        codes.iter().zip(&self.radix).fold(0u64, |acc, (&c, &r)| acc * r + c) as usize
    }

    /// Index of the coset of `−x`.
    pub fn neg_index(&self, idx: usize) -> usize {
        self.neg_table()[idx]
    }

    /// The representative of coordinate code `c`, exact on a wide window.
    pub fn lift(&self, j: usize, code: u64) -> TruncatedElement {
        let s = self.supp[j];
        let w = EXACT_WIDTH.min(self.field.width_cap()).max(self.inv[j] - s);
        self.field.element(s, s + w, code).expect("window within cap")
    }

    /// Code of `x` in coordinate `j`, or `None` outside the support.
    pub fn locate(&self, j: usize, x: &TruncatedElement) -> Result<Option<u64>> {
        let (s, v) = (self.supp[j], self.inv[j]);
        if s == v {
            return Ok(self.field.code_in(x, s, s + 1)?.map(|_| 0));
        }
        self.field.code_in(x, s, v)
    }

    fn neg_code(&self, j: usize, c: u64) -> u64 {
        let x = self.lift(j, c);
        self.locate(j, &self.field.neg(&x)).ok().flatten().expect("negation preserves the lattice")
    }

    pub fn self_negative_count(&self) -> usize {
        self.neg_table().iter().enumerate().filter(|&(i, &n)| i == n).count()
    }

    /// `(dim S^+, dim S^−)`.
    pub fn dims(&self) -> (usize, usize) {
        let (total, fixed) = (self.size(), self.self_negative_count());
        ((total + fixed) / 2, (total - fixed) / 2)
    }

    pub fn indicator(&self, idx: usize) -> SchwartzVector {
        let mut v = vec![ZetaSum::zero(); self.size()];
        v[idx] = ZetaSum::from_int(1);
        v
    }

    /// The bases `φ_x^+` and `φ_x^−`, one representative per pair `{x, −x}`.
    pub fn basis_pm(&self) -> (Vec<SchwartzVector>, Vec<SchwartzVector>) {
        let (mut plus, mut minus) = (Vec::new(), Vec::new());
        for idx in 0..self.size() {
            let n = self.neg_table()[idx];
            if n < idx {
                continue;
            }
            let mut p = self.indicator(idx);
            if n == idx {
                plus.push(p);
                continue;
            }
            p[n] = ZetaSum::from_int(1);
            let mut m = self.indicator(idx);
            m[n] = ZetaSum::from_int(-1);
            plus.push(p);
            minus.push(m);
        }
        (plus, minus)
    }

    /// Target of the Fourier transform: `(e − inv, e − supp)`.
    pub fn dual(&self) -> Result<Self> {
        let e = self.field.e();
        QuotientSpace::new(
            &self.field,
            self.inv.iter().map(|v| e - v).collect(),
            self.supp.iter().map(|s| e - s).collect(),
        )
    }

    /// The space shifted by `−shift_j` in each coordinate.
    pub fn shifted(&self, shift: &[i32]) -> Result<Self> {
        QuotientSpace::new(
            &self.field,
            self.supp.iter().zip(shift).map(|(s, d)| s - d).collect(),
            self.inv.iter().zip(shift).map(|(v, d)| v - d).collect(),
        )
    }

    /// True when `small` is a filtration stage inside `self`.
    pub fn includes(&self, small: &QuotientSpace) -> bool {
        self.field == small.field
            && self.n() == small.n()
            && (0..self.n()).all(|j| self.supp[j] <= small.supp[j] && small.inv[j] <= self.inv[j])
    }

    /// Coordinate `j` of the coset of `stage` containing the coset `c` of
    /// `self`, or `None` when `c` lies outside the support of `stage`.
    pub fn stage_code(&self, stage: &QuotientSpace, j: usize, c: u64) -> Option<u64> {
        let q = self.field.q();
        let low = q.pow((stage.supp[j] - self.supp[j]) as u32);
        c.is_multiple_of(low).then(|| (c / low) % stage.radix[j])
    }

    /// Code `c` reduced to the canonical representative of its `stage` class.
    fn class_rep(&self, stage: &QuotientSpace, j: usize, c: u64) -> u64 {
        c % self.field.q().pow((stage.inv[j] - self.supp[j]) as u32)
    }

    pub fn stage_index(&self, stage: &QuotientSpace, idx: usize) -> Option<usize> {
        let codes = self.codes(idx);
        let mut small = Vec::with_capacity(self.n());
        for (j, &c) in codes.iter().enumerate() {
            small.push(self.stage_code(stage, j, c)?);
        }
        Some(stage.index(&small))
    }

    /// True when `v` (a vector of `self`) lies in the embedded `stage`.
    pub fn stage_contains(&self, stage: &QuotientSpace, v: &[ZetaSum]) -> Result<bool> {
        if !self.includes(stage) {
            return Err(Error::NotAnInclusion(format!("{stage} in {self}")));
        }
        for idx in 0..self.size() {
            if self.stage_index(stage, idx).is_none() {
                if !v[idx].vanishes() {
                    return Ok(false);
                }
                continue;
            }
            let rep: Vec<u64> =
                self.codes(idx).iter().enumerate().map(|(j, &c)| self.class_rep(stage, j, c)).collect();
            if !v[idx].same_value(&v[self.index(&rep)]) {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn check_vertex(n: usize, i: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("rank must be positive".into()));
    }
    if i > n {
        return Err(Error::OutOfRange { index: i, max: n });
    }
    Ok(())
}

/// Columns of the inclusion `S(small) → S(big)` in the indicator bases.
pub fn embed(small: &QuotientSpace, big: &QuotientSpace) -> Result<Vec<SchwartzVector>> {
    if !big.includes(small) {
        return Err(Error::NotAnInclusion(format!("{small} in {big}")));
    }
    let mut cols = vec![vec![ZetaSum::zero(); big.size()]; small.size()];
    for idx in 0..big.size() {
        if let Some(s) = big.stage_index(small, idx) {
            cols[s][idx] = ZetaSum::from_int(1);
        }
    }
    Ok(cols)
}

/// One factor of a Weil operator, acting on coset coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    /// `φ ↦ Σ_v ψ(sign · 2 u·v) φ(v)`; the sign `−1` is the inverse up to scalar.
    Fourier { sign: i64 },
    /// Multiplication by `ψ(t y_j²)`.
    Square { j: usize, t: TruncatedElement },
    /// Multiplication by `ψ(2t y_j y_k)`.
    Cross { j: usize, k: usize, t: TruncatedElement },
    /// `φ ↦ φ(h_1 y_1, ..., h_n y_n)`.
    Scale { h: Vec<TruncatedElement> },
    /// `φ ↦ φ(y + t y_j f_k)`.
    Shear { j: usize, k: usize, t: TruncatedElement },
}

fn val(field: &FieldSpec, t: &TruncatedElement) -> Option<i32> {
    field.valuation(t).ok()
}

impl Step {
    /// The space this step maps `dom` onto, after checking that the step is
    /// well defined on cosets.
    fn target(&self, dom: &QuotientSpace, label: &str) -> Result<QuotientSpace> {
        let f = dom.field();
        let e = f.e();
        let (s, v) = (dom.supp(), dom.inv());
        let n = dom.n();
        let fail = |reason: String| Error::NotPreserved { generator: label.to_string(), reason };
        let check_idx = |idx: &[usize]| -> Result<()> {
            match idx.iter().find(|&&j| j >= n) {
                Some(&j) => Err(Error::OutOfRange { index: j, max: n - 1 }),
                None => Ok(()),
            }
        };
        match self {
            Step::Fourier { .. } => dom.dual(),
            Step::Square { j, t } => {
                check_idx(&[*j])?;
                if let Some(vt) = val(f, t) {
                    if vt + s[*j] + v[*j] < e || vt + 2 * v[*j] < 2 * e {
                        return Err(fail(format!("ψ(t y_{}²) with val(t) = {vt} is not constant on cosets", j + 1)));
                    }
                }
                Ok(dom.clone())
            }
            Step::Cross { j, k, t } => {
                check_idx(&[*j, *k])?;
                if let Some(vt) = val(f, t) {
                    if vt + v[*j] + s[*k] < e || vt + s[*j] + v[*k] < e {
                        return Err(fail(format!(
                            "ψ(2t y_{} y_{}) with val(t) = {vt} is not constant on cosets",
                            j + 1,
                            k + 1
                        )));
                    }
                }
                Ok(dom.clone())
            }
            Step::Shear { j, k, t } => {
                check_idx(&[*j, *k])?;
                if let Some(vt) = val(f, t) {
                    if vt + s[*j] < s[*k] || vt + v[*j] < v[*k] {
                        return Err(fail(format!("y_{} += t y_{} with val(t) = {vt} moves the lattices", k + 1, j + 1)));
                    }
                }
                Ok(dom.clone())
            }
            Step::Scale { h } => {
                if h.len() != n {
                    return Err(Error::SpaceMismatch(format!("torus element of rank {} on rank {n}", h.len())));
                }
                let shift = h.iter().map(|x| f.valuation(x).map_err(|_| Error::NotUnit)).collect::<Result<Vec<_>>>()?;
                dom.shifted(&shift)
            }
        }
    }
}

fn psi_of(field: &FieldSpec, x: &TruncatedElement) -> Result<RootOfUnity> {
    AdditiveCharacter::standard(field).eval(x)
}

fn square_values(dom: &QuotientSpace, j: usize, t: &TruncatedElement) -> Result<Vec<RootOfUnity>> {
    let f = dom.field();
    if t.is_zero() {
        return Ok(vec![RootOfUnity::ONE; dom.radix()[j] as usize]);
    }
    (0..dom.radix()[j])
        .map(|c| {
            let y = dom.lift(j, c);
            psi_of(f, &f.mul(t, &f.mul(&y, &y)?)?)
        })
        .collect()
}

/// Values indexed by `c_j · radix_k + c_k`.
fn cross_values(dom: &QuotientSpace, j: usize, k: usize, t: &TruncatedElement) -> Result<Vec<RootOfUnity>> {
    let f = dom.field();
    let (rj, rk) = (dom.radix()[j], dom.radix()[k]);
    if t.is_zero() {
        return Ok(vec![RootOfUnity::ONE; (rj * rk) as usize]);
    }
    let two_t = f.mul(&f.two(), t)?;
    let mut out = Vec::with_capacity((rj * rk) as usize);
    for cj in 0..rj {
        let a = f.mul(&two_t, &dom.lift(j, cj))?;
        for ck in 0..rk {
            out.push(psi_of(f, &f.mul(&a, &dom.lift(k, ck))?)?);
        }
    }
    Ok(out)
}

/// New `k`-code of `e_x` under the shear, indexed by `c_j · radix_k + c_k`.
fn shear_map(dom: &QuotientSpace, j: usize, k: usize, t: &TruncatedElement) -> Result<Vec<u64>> {
    let f = dom.field();
    let (rj, rk) = (dom.radix()[j], dom.radix()[k]);
    let mut out = Vec::with_capacity((rj * rk) as usize);
    for cj in 0..rj {
        let ty = f.mul(t, &dom.lift(j, cj))?;
        for ck in 0..rk {
            let y = f.sub(&dom.lift(k, ck), &ty)?;
            let c = dom
                .locate(k, &y)?
                .ok_or_else(|| Error::PrecisionInsufficient(format!("shear image of coordinate {}", k + 1)))?;
            out.push(c);
        }
    }
    Ok(out)
}

/// Image code of `e_x ↦ e_{h^{−1}x}` in coordinate `j`.
fn scale_map(dom: &QuotientSpace, cod: &QuotientSpace, j: usize, h: &TruncatedElement) -> Result<Vec<u64>> {
    let f = dom.field();
    let hinv = f.inv(h)?;
    (0..dom.radix()[j])
        .map(|c| {
            let y = f.mul(&hinv, &dom.lift(j, c))?;
            cod.locate(j, &y)?
                .ok_or_else(|| Error::PrecisionInsufficient(format!("scaled coordinate {}", j + 1)))
        })
        .collect()
}

/// `K[u][v] = ψ(sign · 2uv)` for coordinate `j`.
fn fourier_kernel(dom: &QuotientSpace, cod: &QuotientSpace, j: usize, sign: i64) -> Result<Vec<Vec<RootOfUnity>>> {
    let f = dom.field();
    let two = f.mul_int(&f.two(), sign)?;
    (0..cod.radix()[j])
        .map(|u| {
            let a = f.mul(&two, &cod.lift(j, u))?;
            (0..dom.radix()[j]).map(|v| psi_of(f, &f.mul(&a, &dom.lift(j, v))?)).collect()
        })
        .collect()
}

enum Table {
    Perm(Vec<usize>),
    Diag(Vec<RootOfUnity>),
    Kernel(Vec<Vec<Vec<RootOfUnity>>>),
}

fn build_table(step: &Step, dom: &QuotientSpace, cod: &QuotientSpace) -> Result<Table> {
    let size = dom.size();
    Ok(match step {
        Step::Fourier { sign } => {
            Table::Kernel((0..dom.n()).map(|j| fourier_kernel(dom, cod, j, *sign)).collect::<Result<_>>()?)
        }
        Step::Square { j, t } => {
            let vals = square_values(dom, *j, t)?;
            Table::Diag((0..size).map(|idx| vals[dom.codes(idx)[*j] as usize]).collect())
        }
        Step::Cross { j, k, t } => {
            let vals = cross_values(dom, *j, *k, t)?;
            let rk = dom.radix()[*k];
            Table::Diag(
                (0..size)
                    .map(|idx| {
                        let c = dom.codes(idx);
                        vals[(c[*j] * rk + c[*k]) as usize]
                    })
                    .collect(),
            )
        }
        Step::Shear { j, k, t } => {
            let map = shear_map(dom, *j, *k, t)?;
            let rk = dom.radix()[*k];
            Table::Perm(
                (0..size)
                    .map(|idx| {
                        let mut c = dom.codes(idx);
                        c[*k] = map[(c[*j] * rk + c[*k]) as usize];
                        cod.index(&c)
                    })
                    .collect(),
            )
        }
        Step::Scale { h } => {
            let maps = (0..dom.n()).map(|j| scale_map(dom, cod, j, &h[j])).collect::<Result<Vec<_>>>()?;
            Table::Perm(
                (0..size)
                    .map(|idx| {
                        let c: Vec<u64> = dom.codes(idx).iter().enumerate().map(|(j, &c)| maps[j][c as usize]).collect();
                        cod.index(&c)
                    })
                    .collect(),
            )
        }
    })
}

fn decode(radix: &[u64], idx: usize) -> Vec<u64> {
    let mut rest = idx as u64;
    let mut out = vec![0; radix.len()];
    for j in (0..radix.len()).rev() {
        out[j] = rest % radix[j];
        rest /= radix[j];
    }
    out
}

fn encode(radix: &[u64], codes: &[u64]) -> usize {
    codes.iter().zip(radix).fold(0u64, |acc, (&c, &r)| acc * r + c) as usize
}

fn apply_table(table: &Table, dom: &QuotientSpace, cod: &QuotientSpace, v: &[ZetaSum]) -> SchwartzVector {
    match table {
        Table::Perm(p) => {
            let mut out = vec![ZetaSum::zero(); cod.size()];
            for (idx, x) in v.iter().enumerate() {
                out[p[idx]] = x.clone();
            }
            out
        }
        Table::Diag(d) => v.iter().zip(d).map(|(x, &z)| x.rotated(z)).collect(),
        Table::Kernel(kernels) => {
            let mut radix = dom.radix().to_vec();
            let mut cur = v.to_vec();
            for (j, k) in kernels.iter().enumerate() {
                let mut next_radix = radix.clone();
                next_radix[j] = cod.radix()[j];
                let total: u64 = next_radix.iter().product();
                let mut next = vec![ZetaSum::zero(); total as usize];
                for (idx, x) in cur.iter().enumerate() {
                    if x.is_zero() {
                        continue;
                    }
                    let mut c = decode(&radix, idx);
                    let src = c[j] as usize;
                    for (u, row) in k.iter().enumerate() {
                        c[j] = u as u64;
                        next[encode(&next_radix, &c)].add_rotated(x, row[src]);
                    }
                }
                radix = next_radix;
                cur = next;
            }
            cur
        }
    }
}

/// A projective operator between quotient spaces, kept as a product of
/// [`Step`]s applied left to right.
#[derive(Debug, Clone)]
pub struct WeilOperator {
    label: String,
    steps: Vec<Step>,
    spaces: Vec<QuotientSpace>,
}

/// Largest space on which dense matrices are formed.
pub const DENSE_LIMIT: usize = 1024;

impl WeilOperator {
    pub fn new(label: impl Into<String>, domain: &QuotientSpace, steps: Vec<Step>) -> Result<Self> {
        let label = label.into();
        let mut spaces = vec![domain.clone()];
        for step in &steps {
            let next = step.target(spaces.last().unwrap(), &label)?;
            spaces.push(next);
        }
        Ok(WeilOperator { label, steps, spaces })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn domain(&self) -> &QuotientSpace {
        &self.spaces[0]
    }

    pub fn codomain(&self) -> &QuotientSpace {
        self.spaces.last().unwrap()
    }

    pub fn is_endomorphism(&self) -> bool {
        self.domain() == self.codomain()
    }

    /// `next ∘ self`.
    pub fn then(mut self, next: &WeilOperator) -> Result<WeilOperator> {
        if next.domain() != self.codomain() {
            return Err(Error::SpaceMismatch(format!("{} then {}", self.codomain(), next.domain())));
        }
        self.label = format!("{}*{}", next.label, self.label);
        self.steps.extend(next.steps.iter().cloned());
        self.spaces.extend(next.spaces[1..].iter().cloned());
        Ok(self)
    }

    fn tables(&self) -> Result<Vec<Table>> {
        self.steps
            .iter()
            .enumerate()
            .map(|(k, s)| build_table(s, &self.spaces[k], &self.spaces[k + 1]))
            .collect()
    }

    fn apply_with(&self, tables: &[Table], v: &[ZetaSum]) -> SchwartzVector {
        let mut cur = v.to_vec();
        for (k, t) in tables.iter().enumerate() {
            cur = apply_table(t, &self.spaces[k], &self.spaces[k + 1], &cur);
        }
        cur
    }

    pub fn apply(&self, v: &[ZetaSum]) -> Result<SchwartzVector> {
        if v.len() != self.domain().size() {
            return Err(Error::SpaceMismatch(format!("vector of length {} on {}", v.len(), self.domain())));
        }
        Ok(self.apply_with(&self.tables()?, v))
    }

    pub fn apply_all(&self, vs: &[SchwartzVector]) -> Result<Vec<SchwartzVector>> {
        let tables = self.tables()?;
        Ok(vs.iter().map(|v| self.apply_with(&tables, v)).collect())
    }

    /// Columns: the images of the coset indicators.
    pub fn matrix(&self) -> Result<Vec<SchwartzVector>> {
        let size = self.domain().size();
        if size.max(self.codomain().size()) > DENSE_LIMIT {
            return Err(Error::BoundExceeded(format!("dense matrix on {size} cosets")));
        }
        let basis: Vec<SchwartzVector> = (0..size).map(|i| self.domain().indicator(i)).collect();
        self.apply_all(&basis)
    }

    /// Whether the operator maps the embedded `stage` into itself. Each step
    /// carries the stage to its image, verified coset by coset for the
    /// monomial steps; a Fourier step carries `S(A/B)` onto the dual stage.
    pub fn preserves(&self, stage: &QuotientSpace) -> Result<bool> {
        if !self.domain().includes(stage) {
            return Err(Error::NotAnInclusion(format!("{stage} in {}", self.domain())));
        }
        let mut cur = stage.clone();
        for (k, step) in self.steps.iter().enumerate() {
            let (dom, cod) = (&self.spaces[k], &self.spaces[k + 1]);
            let inside = |c: u64, j: usize, st: &QuotientSpace| dom.stage_code(st, j, c).is_some();
            match step {
                Step::Fourier { .. } => cur = cur.dual()?,
                Step::Square { j, t } => {
                    let vals = square_values(dom, *j, t)?;
                    for c in 0..dom.radix()[*j] {
                        if inside(c, *j, &cur) && vals[c as usize] != vals[dom.class_rep(&cur, *j, c) as usize] {
                            return Ok(false);
                        }
                    }
                }
                Step::Cross { j, k, t } => {
                    let vals = cross_values(dom, *j, *k, t)?;
                    let rk = dom.radix()[*k];
                    for cj in (0..dom.radix()[*j]).filter(|&c| inside(c, *j, &cur)) {
                        let rj = dom.class_rep(&cur, *j, cj);
                        for ck in (0..rk).filter(|&c| inside(c, *k, &cur)) {
                            let rep = (rj * rk + dom.class_rep(&cur, *k, ck)) as usize;
                            if vals[(cj * rk + ck) as usize] != vals[rep] {
                                return Ok(false);
                            }
                        }
                    }
                }
                Step::Shear { j, k, t } => {
                    let map = shear_map(dom, *j, *k, t)?;
                    let rk = dom.radix()[*k];
                    for cj in (0..dom.radix()[*j]).filter(|&c| inside(c, *j, &cur)) {
                        let rj = dom.class_rep(&cur, *j, cj);
                        for ck in (0..rk).filter(|&c| inside(c, *k, &cur)) {
                            let image = map[(cj * rk + ck) as usize];
                            let from_rep = map[(rj * rk + dom.class_rep(&cur, *k, ck)) as usize];
                            if !inside(image, *k, &cur)
                                || dom.class_rep(&cur, *k, image) != dom.class_rep(&cur, *k, from_rep)
                            {
                                return Ok(false);
                            }
                        }
                    }
                }
                Step::Scale { h } => {
                    let shift: Vec<i32> = (0..dom.n()).map(|j| cod.supp()[j] - dom.supp()[j]).collect();
                    let next = cur.shifted(&shift.iter().map(|d| -d).collect::<Vec<_>>())?;
                    for j in 0..dom.n() {
                        let map = scale_map(dom, cod, j, &h[j])?;
                        for c in (0..dom.radix()[j]).filter(|&c| inside(c, j, &cur)) {
                            let image = map[c as usize];
                            let from_rep = map[dom.class_rep(&cur, j, c) as usize];
                            if cod.stage_code(&next, j, image).is_none()
                                || cod.class_rep(&next, j, image) != cod.class_rep(&next, j, from_rep)
                            {
                                return Ok(false);
                            }
                        }
                    }
                    cur = next;
                }
            }
        }
        Ok(cur == *stage)
    }
}

/// The discrete Fourier transform `F φ(u) = Σ_v ψ(2 u·v) φ(v)`.
pub fn fourier_op(space: &QuotientSpace) -> Result<WeilOperator> {
    WeilOperator::new("F", space, vec![Step::Fourier { sign: 1 }])
}

/// `x̃(a)` for a symmetric matrix `a`: multiplication by `ψ(yᵀ a y)`.
pub fn op_sym(space: &QuotientSpace, a: &[Vec<TruncatedElement>]) -> Result<WeilOperator> {
    let n = space.n();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(Error::SpaceMismatch(format!("symmetric matrix is not {n}x{n}")));
    }
    let mut steps = Vec::new();
    for j in 0..n {
        steps.push(Step::Square { j, t: a[j][j] });
        for k in j + 1..n {
            if !space.field().congruent(&a[j][k], &a[k][j])? {
                return Err(Error::InvalidSpace(format!("matrix entry ({j},{k}) is not symmetric")));
            }
            steps.push(Step::Cross { j, k, t: a[j][k] });
        }
    }
    WeilOperator::new("x(a)", space, steps)
}

/// `h̃`: `φ ↦ φ(h_1 y_1, ..., h_n y_n)`.
pub fn op_torus(space: &QuotientSpace, h: &[TruncatedElement]) -> Result<WeilOperator> {
    WeilOperator::new("h", space, vec![Step::Scale { h: h.to_vec() }])
}

/// `x̃_{ε_j − ε_k}(t)`: `φ ↦ φ(y + t y_j f_k)` (indices from 0).
pub fn op_transvection(space: &QuotientSpace, j: usize, k: usize, t: &TruncatedElement) -> Result<WeilOperator> {
    if j == k {
        return Err(Error::InvalidRoot(vec![]));
    }
    WeilOperator::new(format!("x[e{}-e{}]", j + 1, k + 1), space, vec![Step::Shear { j, k, t: *t }])
}

fn root_steps(field: &FieldSpec, shape: RootShape, s: TruncatedElement) -> Vec<Step> {
    let conj = |m: Step| vec![Step::Fourier { sign: -1 }, m, Step::Fourier { sign: 1 }];
    let ms = field.neg(&s);
    match shape {
        RootShape::Short { j, k, sj, sk } if sj != sk => {
            let (p, q) = if sj > 0 { (j, k) } else { (k, j) };
            vec![Step::Shear { j: p, k: q, t: s }]
        }
        RootShape::Short { j, k, sj, .. } if sj > 0 => vec![Step::Cross { j, k, t: s }],
        RootShape::Short { j, k, .. } => conj(Step::Cross { j, k, t: ms }),
        RootShape::Long { j, s: sign } if sign > 0 => vec![Step::Square { j, t: s }],
        RootShape::Long { j, .. } => conj(Step::Square { j, t: ms }),
    }
}

/// The operator of a labeled generator on `space`, which it must map onto
/// itself. Negative root groups use `x_{−α}(t) = w x_α(−t) w^{−1}`.
pub fn op_generator(g: &SymplecticMatrix, space: &QuotientSpace) -> Result<WeilOperator> {
    let f = space.field();
    let n = space.n();
    if g.n() != n {
        return Err(Error::SpaceMismatch(format!("generator of rank {} on rank {n}", g.n())));
    }
    let eta_h = |i: usize| -> Vec<TruncatedElement> {
        (0..n).map(|j| if j < i { f.pi_pow(-1) } else { f.one() }).collect()
    };
    let steps = match &g.label {
        GeneratorLabel::X { root, offset, t } => root_steps(f, root.shape(), f.shift(t, *offset)),
        GeneratorLabel::Torus { h } => vec![Step::Scale { h: h.clone() }],
        GeneratorLabel::Eta { i } => vec![Step::Scale { h: eta_h(*i) }],
        GeneratorLabel::EtaW { i } => vec![Step::Fourier { sign: 1 }, Step::Scale { h: eta_h(*i) }],
        GeneratorLabel::W => vec![Step::Fourier { sign: 1 }],
        other => return Err(Error::UnknownLabel(other.to_string())),
    };
    let op = WeilOperator::new(g.label.to_string(), space, steps)?;
    if !op.is_endomorphism() {
        return Err(Error::SpaceMismatch(format!("{} maps {space} onto {}", op.label, op.codomain())));
    }
    Ok(op)
}

/// Equality up to a nonzero scalar, comparing at the first nonzero entry in
/// row-major order.
pub fn projectively_equal(a: &[SchwartzVector], b: &[SchwartzVector]) -> bool {
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.len() != y.len()) {
        return false;
    }
    let rows = a.first().map_or(0, |c| c.len());
    let pivot = (0..rows).flat_map(|r| (0..a.len()).map(move |c| (r, c))).find(|&(r, c)| !a[c][r].vanishes());
    let Some((r, c)) = pivot else {
        return b.iter().flatten().all(|z| z.vanishes());
    };
    let (a0, b0) = (&a[c][r], &b[c][r]);
    if b0.vanishes() {
        return false;
    }
    a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| x.mul(b0).same_value(&y.mul(a0)))
}

/// Matrix of an operator on an invariant subspace, when it is invariant.
#[derive(Debug, Clone)]
pub struct Restriction {
    /// `op(sub_c) = Σ_r matrix[r][c] sub_r`; empty when not invariant.
    pub matrix: Vec<Vec<Cyclotomic>>,
    pub invariant: bool,
}

/// Restricts an endomorphism to `span(sub)`.
pub fn restrict(op: &WeilOperator, sub: &[SchwartzVector]) -> Result<Restriction> {
    if !op.is_endomorphism() {
        return Err(Error::SpaceMismatch(format!("{} is not an endomorphism", op.label())));
    }
    let images = op.apply_all(sub)?;
    let mut cols = Vec::with_capacity(sub.len());
    for w in &images {
        match coordinates(sub, w)? {
            Some(c) => cols.push(c),
            None => return Ok(Restriction { matrix: Vec::new(), invariant: false }),
        }
    }
    let d = sub.len();
    let matrix = (0..d).map(|r| (0..d).map(|c| cols[c][r].clone()).collect()).collect();
    Ok(Restriction { matrix, invariant: true })
}

fn unit_sign(z: &ZetaSum, order: u64) -> Option<i64> {
    let r = z.reduced(order).ok()?;
    match r.split_first() {
        Some((&c, rest)) if (c == 1 || c == -1) && rest.iter().all(|&x| x == 0) => Some(c),
        _ => None,
    }
}

/// Coordinates of `w` in the basis `sub`, or `None` outside the span.
pub fn coordinates(sub: &[SchwartzVector], w: &[ZetaSum]) -> Result<Option<Vec<Cyclotomic>>> {
    let order = sub.iter().flatten().chain(w).fold(1u64, |acc, z| acc.lcm(&z.order()));
    let len = w.len();
    let pivots: Option<Vec<(usize, i64)>> = sub
        .iter()
        .enumerate()
        .map(|(b, v)| {
            (0..len).find_map(|p| {
                let alone = sub.iter().enumerate().all(|(o, u)| o == b || u[p].vanishes());
                if alone { unit_sign(&v[p], order).map(|s| (p, s)) } else { None }
            })
        })
        .collect();
    if let Some(pivots) = pivots {
        let coefs: Vec<ZetaSum> = pivots
            .iter()
            .map(|&(p, s)| if s == 1 { w[p].clone() } else { w[p].neg() })
            .collect();
        for p in 0..len {
            let mut acc = ZetaSum::zero();
            for (c, v) in coefs.iter().zip(sub) {
                if !v[p].is_zero() {
                    acc.add(&c.mul(&v[p]));
                }
            }
            if !acc.same_value(&w[p]) {
                return Ok(None);
            }
        }
        return coefs.iter().map(|c| c.to_cyclotomic(order)).collect::<Result<Vec<_>>>().map(Some);
    }
    let phi = euler_phi(order) as usize;
    let flat = |v: &[ZetaSum]| -> Result<Vec<BigRational>> {
        let mut out = Vec::with_capacity(len * phi);
        for z in v {
            out.extend(z.to_cyclotomic(order)?.coeffs().iter().cloned());
        }
        Ok(out)
    };
    let mut cols = Vec::with_capacity(sub.len() * phi);
    for v in sub {
        for l in 0..phi {
            let z = RootOfUnity::new(l as i64, order)?;
            let rotated: Vec<ZetaSum> = v.iter().map(|x| x.rotated(z)).collect();
            cols.push(flat(&rotated)?);
        }
    }
    let Some(x) = linalg::solve_columns(&cols, &flat(w)?) else {
        return Ok(None);
    };
    let mut out = Vec::with_capacity(sub.len());
    for chunk in x.chunks(phi) {
        let mut acc = Cyclotomic::zero(order);
        for (l, r) in chunk.iter().enumerate() {
            if !r.is_zero() {
                acc = acc + Cyclotomic::zeta_pow(order, l as u64).scale(r);
            }
        }
        out.push(acc);
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localfield::from_ratio;
    use crate::rootsystem::Root;
    use crate::symplectic::{affine_x, chev_x, eta_w, ki_group_generators, w_long};

    fn q(p: u64) -> FieldSpec {
        FieldSpec::padic(p).unwrap()
    }

    fn ints(v: &[ZetaSum]) -> Vec<Vec<i64>> {
        v.iter().map(|z| z.reduced(8).unwrap()).collect()
    }

    fn z(n: i64) -> Vec<i64> {
        let mut v = vec![0; 4];
        v[0] = n;
        v
    }

    fn explicit_preserves(op: &WeilOperator, stage: &QuotientSpace) -> bool {
        let cols = embed(stage, op.domain()).unwrap();
        op.apply_all(&cols).unwrap().iter().all(|w| op.domain().stage_contains(stage, w).unwrap())
    }

    #[test]
    fn dims_examples() {
        assert_eq!(QuotientSpace::s_im(&q(2), 1, 0, 0).unwrap().dims(), (2, 0));
        assert_eq!(QuotientSpace::s_im(&q(2), 1, 1, 0).unwrap().dims(), (3, 1));
        let s = QuotientSpace::s_im(&q(3), 2, 1, 0).unwrap();
        assert_eq!((s.supp(), s.inv(), s.size()), (&[0, 0][..], &[1, 0][..], 3));
        assert_eq!(s.dims(), (2, 1));
        assert!(QuotientSpace::new(&q(2), vec![1], vec![0]).is_err());
        let sp = QuotientSpace::s_prime_im(&q(2), 1, 0, 1).unwrap();
        assert_eq!((sp.supp(), sp.inv()), (&[-1][..], &[2][..]));
    }

    #[test]
    fn parity_basis() {
        let s = QuotientSpace::s_im(&q(2), 1, 1, 0).unwrap();
        let (plus, minus) = s.basis_pm();
        assert_eq!(plus.len() + minus.len(), s.size());
        assert_eq!(minus.len(), 1);
        assert_eq!(ints(&minus[0]), vec![z(0), z(1), z(0), z(-1)]);
        let s0 = QuotientSpace::s_im(&q(2), 1, 0, 0).unwrap();
        assert!(s0.basis_pm().1.is_empty());
    }

    #[test]
    fn fourier_examples() {
        let s = QuotientSpace::s_im(&q(2), 1, 0, 0).unwrap();
        let f = fourier_op(&s).unwrap();
        assert_eq!(f.codomain(), &s);
        let m = f.matrix().unwrap();
        assert_eq!(ints(&m[0]), vec![z(1), z(1)]);
        assert_eq!(ints(&m[1]), vec![z(1), z(-1)]);
        for (p, i, mm) in [(2, 1, 0), (3, 1, 1), (2, 2, 0)] {
            let s = QuotientSpace::s_im(&q(p), i, i, mm).unwrap();
            let f = fourier_op(&s).unwrap();
            let back = fourier_op(f.codomain()).unwrap();
            let ff = f.clone().then(&back).unwrap().matrix().unwrap();
            let size = s.size() as i64;
            for (c, col) in ff.iter().enumerate() {
                for (r, x) in col.iter().enumerate() {
                    let want = if r == s.neg_index(c) { size } else { 0 };
                    assert!(x.same_value(&ZetaSum::from_int(want)));
                }
            }
            let all = f.apply(&s.indicator(0)).unwrap();
            assert!(all.iter().all(|x| x.same_value(&ZetaSum::from_int(1))));
        }
    }

    #[test]
    fn multiplier_example() {
        let f = q(2);
        let s = QuotientSpace::s_im(&f, 1, 1, 0).unwrap();
        let half = from_ratio(&f, 1, 2).unwrap();
        let op = op_sym(&s, &[vec![half]]).unwrap();
        let m = op.matrix().unwrap();
        let diag: Vec<Vec<i64>> = (0..4).map(|i| m[i][i].reduced(8).unwrap()).collect();
        assert_eq!(diag, vec![z(1), vec![0, 1, 0, 0], z(-1), vec![0, 1, 0, 0]]);
        let id = op_sym(&s, &[vec![f.zero()]]).unwrap().matrix().unwrap();
        assert!(projectively_equal(&id, &op_torus(&s, &[f.one()]).unwrap().matrix().unwrap()));
        let bad = op_sym(&QuotientSpace::s_im(&q(3), 1, 0, 0).unwrap(), &[vec![q(3).pi_pow(-2)]]);
        assert!(matches!(bad, Err(Error::NotPreserved { .. })));
    }

    #[test]
    fn torus_and_transvection() {
        let f = q(3);
        let s = QuotientSpace::s_im(&f, 2, 1, 1).unwrap();
        let minus = op_torus(&s, &[f.neg(&f.one()), f.neg(&f.one())]).unwrap();
        let m = minus.matrix().unwrap();
        for (c, col) in m.iter().enumerate() {
            for (r, x) in col.iter().enumerate() {
                assert_eq!(x.same_value(&ZetaSum::from_int(1)), r == s.neg_index(c));
            }
        }
        let s10 = QuotientSpace::s_im(&f, 2, 1, 0).unwrap();
        assert!(op_transvection(&s10, 1, 0, &f.one()).is_err());
        let t = op_transvection(&s10, 0, 1, &f.one()).unwrap();
        let m = t.matrix().unwrap();
        for col in &m {
            assert_eq!(col.iter().filter(|x| !x.vanishes()).count(), 1);
        }
        let eta = op_torus(&QuotientSpace::new(&f, vec![-1], vec![0]).unwrap(), &[f.pi_pow(-1)]).unwrap();
        assert_eq!((eta.codomain().supp(), eta.codomain().inv()), (&[0][..], &[1][..]));
    }

    #[test]
    fn generator_examples() {
        let f = q(2);
        let s00 = QuotientSpace::s_im(&f, 1, 0, 0).unwrap();
        let w = op_generator(&w_long(&f, 1), &s00).unwrap().matrix().unwrap();
        assert_eq!(w, fourier_op(&s00).unwrap().matrix().unwrap());
        let a = Root::long(1, 0, 1).unwrap();
        let x = op_generator(&chev_x(&f, &a, &f.one()), &s00).unwrap().matrix().unwrap();
        assert_eq!((ints(&x[0]), ints(&x[1])), (vec![z(1), z(0)], vec![z(0), vec![0, 0, 1, 0]]));
        let s10 = QuotientSpace::s_im(&f, 1, 1, 0).unwrap();
        let ew = op_generator(&eta_w(&f, 1, 1).unwrap(), &s10).unwrap();
        let (plus, _) = s10.basis_pm();
        let img = ew.apply(&plus[0]).unwrap();
        assert!(img.iter().all(|x| x.same_value(&img[0])) && !img[0].vanishes());
        assert!(op_generator(&w_long(&f, 1), &s10).is_err());
    }

    #[test]
    fn weyl_word_is_fourier() {
        for (p, m) in [(2, 0), (2, 1), (3, 1)] {
            let f = q(p);
            let s = QuotientSpace::s_im(&f, 1, 0, m).unwrap();
            let a = Root::long(1, 0, 1).unwrap();
            let x = op_generator(&chev_x(&f, &a, &f.one()), &s).unwrap();
            let y = op_generator(&chev_x(&f, &a.neg(), &f.neg(&f.one())), &s).unwrap();
            let word = x.clone().then(&y).unwrap().then(&x).unwrap().matrix().unwrap();
            assert!(projectively_equal(&word, &fourier_op(&s).unwrap().matrix().unwrap()));
            let wrong = x.clone().then(&x).unwrap().then(&x).unwrap().matrix().unwrap();
            assert!(!projectively_equal(&wrong, &word));
        }
    }

    #[test]
    fn root_group_additive() {
        let f = q(2);
        let s = QuotientSpace::s_im(&f, 2, 1, 0).unwrap();
        let a = Root::from_pair(2, 0, 1, 1, 1).unwrap();
        for root in [a.clone(), a.neg()] {
            let off = if root.is_positive() { 0 } else { 1 };
            let (t1, t2) = (f.from_int(1), f.from_int(3));
            let op = |t: &TruncatedElement| op_generator(&affine_x(&f, &root, off, t), &s).unwrap();
            let prod = op(&t1).then(&op(&t2)).unwrap().matrix().unwrap();
            let sum = op(&f.add(&t1, &t2).unwrap()).matrix().unwrap();
            assert!(projectively_equal(&prod, &sum));
        }
    }

    #[test]
    fn structural_matches_explicit() {
        let f = q(2);
        let big = QuotientSpace::s_im(&f, 1, 1, 1).unwrap();
        let stages = [
            QuotientSpace::s_im(&f, 1, 1, 0).unwrap(),
            QuotientSpace::s_prime_im(&f, 1, 1, 1).unwrap(),
            QuotientSpace::new(&f, vec![0], vec![1]).unwrap(),
        ];
        let mut outcomes = [0usize; 2];
        for g in ki_group_generators(&f, 1, 1, 3).unwrap() {
            let op = op_generator(&g, &big).unwrap();
            for st in &stages {
                let fast = op.preserves(st).unwrap();
                assert_eq!(fast, explicit_preserves(&op, st), "{} on {st}", op.label());
                outcomes[fast as usize] += 1;
            }
        }
        assert!(outcomes[0] > 0 && outcomes[1] > 0);
        let f3 = q(3);
        let s = QuotientSpace::s_im(&f3, 1, 1, 0).unwrap();
        let third = op_sym(&s, &[vec![f3.pi_pow(-1)]]).unwrap();
        let st = QuotientSpace::s_im(&f3, 1, 0, 0).unwrap();
        assert!(!third.preserves(&st).unwrap());
        assert!(!explicit_preserves(&third, &st));
    }

    #[test]
    fn restriction() {
        let f = q(2);
        let s = QuotientSpace::s_im(&f, 1, 1, 0).unwrap();
        let (plus, minus) = s.basis_pm();
        let full: Vec<SchwartzVector> = (0..s.size()).map(|i| s.indicator(i)).collect();
        for g in ki_group_generators(&f, 1, 1, 2).unwrap() {
            let op = op_generator(&g, &s).unwrap();
            assert!(restrict(&op, &full).unwrap().invariant);
            assert!(restrict(&op, &plus).unwrap().invariant);
            assert!(restrict(&op, &minus).unwrap().invariant);
        }
        let big = QuotientSpace::s_im(&f, 1, 1, 1).unwrap();
        let sub = embed(&s, &big).unwrap();
        let ew = op_generator(&eta_w(&f, 1, 1).unwrap(), &big).unwrap();
        let r = restrict(&ew, &sub).unwrap();
        assert!(r.invariant && r.matrix.len() == 4);
        let mixed: Vec<SchwartzVector> = vec![plus[0].iter().zip(&plus[1]).map(|(a, b)| {
            let mut c = a.clone();
            c.add(b);
            c
        }).collect()];
        assert!(!restrict(&ew, &mixed).unwrap().invariant);
        let e = embed(&s, &s).unwrap();
        assert_eq!(e, full);
        assert!(embed(&big, &s).is_err());
    }
}
