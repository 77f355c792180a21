//! Truncated arithmetic in a nonarchimedean local field of residue
//! characteristic `p`, and its additive character of conductor `2e`.
//!
//! Every element is stored as a [`TruncatedElement`]: a window
//! `π^floor 𝔬 mod π^modulus 𝔬` and a code listing the base-`q` digits of
//! `x · π^{-floor}`, least significant first. Digit expansions are canonical
//! for all three kinds, so raising or lowering the floor is a digit shift and
//! truncation is a reduction modulo a power of `q`.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::scalars::RootOfUnity;

/// Widest window, in digits, used for exact integer constants.
pub const EXACT_WIDTH: i32 = 24;

const EIS_BITS: u32 = 60;
const EIS_MASK: i128 = (1i128 << EIS_BITS) - 1;
const THETA_NEG: i32 = 48;
const THETA_POS: i32 = 140;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    PAdic,
    Laurent,
    Eisenstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TruncatedElement {
    floor: i32,
    modulus: i32,
    code: u64,
}

impl TruncatedElement {
    pub fn floor(&self) -> i32 {
        self.floor
    }

    pub fn modulus(&self) -> i32 {
        self.modulus
    }

    pub fn width(&self) -> i32 {
        self.modulus - self.floor
    }

    /// Digits of `x · π^{-floor}` in base `q`, least significant first.
    pub fn code(&self) -> u64 {
        self.code
    }

    /// True when the element is zero modulo `π^modulus`.
    pub fn is_zero(&self) -> bool {
        self.code == 0
    }
}

impl fmt::Display for TruncatedElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "π^{}·[{}] mod π^{}", self.floor, self.code, self.modulus)
    }
}

#[derive(Debug)]
struct FiniteField {
    q: u64,
    add: Vec<u32>,
    mul: Vec<u32>,
    neg: Vec<u32>,
    trace: Vec<u32>,
}

impl FiniteField {
    fn new(p: u64, f: u32) -> Result<Self> {
        let q = p.pow(f);
        if q > 1 << 10 {
            return Err(Error::InvalidField(format!("residue field of size {q} is too large")));
        }
        let modulus = irreducible_poly(p, f);
        let digits = |x: u64| -> Vec<u64> { (0..f).map(|k| (x / p.pow(k)) % p).collect() };
        let undigits = |v: &[u64]| -> u32 { v.iter().rev().fold(0u64, |acc, &d| acc * p + d) as u32 };
        let qs = q as usize;
        let (mut add, mut mul, mut neg) = (vec![0; qs * qs], vec![0; qs * qs], vec![0; qs]);
        for a in 0..q {
            let da = digits(a);
            neg[a as usize] = undigits(&da.iter().map(|&x| (p - x) % p).collect::<Vec<_>>());
            for b in 0..q {
                let db = digits(b);
                let s: Vec<u64> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                add[a as usize * qs + b as usize] = undigits(&s);
                let mut prod = vec![0u64; 2 * f as usize];
                for (i, x) in da.iter().enumerate() {
                    for (j, y) in db.iter().enumerate() {
                        prod[i + j] = (prod[i + j] + x * y) % p;
                    }
                }
                for k in (f as usize..prod.len()).rev() {
                    let c = prod[k];
                    if c != 0 {
                        prod[k] = 0;
                        for (j, m) in modulus.iter().take(f as usize).enumerate() {
                            let idx = k - f as usize + j;
                            prod[idx] = (prod[idx] + (p - c) * m) % p;
                        }
                    }
                }
                mul[a as usize * qs + b as usize] = undigits(&prod[..f as usize]);
            }
        }
        let mut field = FiniteField { q, add, mul, neg, trace: vec![0; qs] };
        // Tr(a) = a + a^p + ... + a^{p^{f-1}}, which lies in the prime field.
        for a in 0..q as u32 {
            let mut acc = 0u32;
            let mut frob = a;
            for _ in 0..f {
                acc = field.add(acc, frob);
                frob = field.pow(frob, p);
            }
            debug_assert!((acc as u64) < p);
            field.trace[a as usize] = acc;
        }
        Ok(field)
    }

    fn add(&self, a: u32, b: u32) -> u32 {
        self.add[a as usize * self.q as usize + b as usize]
    }

    fn mul(&self, a: u32, b: u32) -> u32 {
        self.mul[a as usize * self.q as usize + b as usize]
    }

    fn pow(&self, a: u32, mut k: u64) -> u32 {
        let (mut acc, mut base) = (1u32, a);
        while k > 0 {
            if k & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            k >>= 1;
        }
        acc
    }
}

/// Monic irreducible polynomial of degree `f` over `F_p`, lowest coefficient first.
fn irreducible_poly(p: u64, f: u32) -> Vec<u64> {
    if f == 1 {
        return vec![0, 1];
    }
    let count = p.pow(f);
    'candidate: for c in 0..count {
        let mut poly: Vec<u64> = (0..f).map(|k| (c / p.pow(k)) % p).collect();
        poly.push(1);
        if poly[0] == 0 {
            continue;
        }
        // no factor of degree d <= f/2
        for d in 1..=f / 2 {
            for g in 0..p.pow(d) {
                let mut fac: Vec<u64> = (0..d).map(|k| (g / p.pow(k)) % p).collect();
                fac.push(1);
                if poly_rem_zero(&poly, &fac, p) {
                    continue 'candidate;
                }
            }
        }
        return poly;
    }
    unreachable!("irreducible polynomials exist in every degree")
}

fn poly_rem_zero(num: &[u64], den: &[u64], p: u64) -> bool {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    for k in (dd..rem.len()).rev() {
        let c = rem[k];
        if c != 0 {
            for (j, &d) in den.iter().enumerate() {
                let idx = k - dd + j;
                rem[idx] = (rem[idx] + (p - c) * d % p) % p;
            }
        }
    }
    rem[..dd].iter().all(|&x| x == 0)
}

#[derive(Debug)]
struct EisensteinData {
    degree: usize,
    /// Coordinates of ϖ^k in the basis 1, ϖ, ..., ϖ^{d-1}, modulo 2^60.
    pow_coords: Vec<Vec<i128>>,
    two_over_pi: Vec<i128>,
    /// `frac_2(Tr(ϖ^j)/4)` for `j` in `-THETA_NEG..=THETA_POS`.
    theta: Vec<RootOfUnity>,
    shift: i32,
}

#[derive(Debug)]
struct FieldData {
    kind: FieldKind,
    p: u64,
    f: u32,
    q: u64,
    e: i32,
    cap: i32,
    label: String,
    residue: Option<FiniteField>,
    eis: Option<EisensteinData>,
}

/// A local field together with its truncated arithmetic. Cloning is cheap.
#[derive(Debug, Clone)]
pub struct FieldSpec(Arc<FieldData>);

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.label == other.0.label
    }
}

impl Eq for FieldSpec {}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.label)
    }
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

fn width_cap(q: u64) -> i32 {
    let mut cap = 0;
    let mut acc: u128 = 1;
    while acc * (q as u128) <= 1u128 << 62 {
        acc *= q as u128;
        cap += 1;
    }
    cap
}

impl FieldSpec {
    pub fn padic(p: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidField(format!("{p} is not prime")));
        }
        Ok(FieldSpec(Arc::new(FieldData {
            kind: FieldKind::PAdic,
            p,
            f: 1,
            q: p,
            e: if p == 2 { 1 } else { 0 },
            cap: width_cap(p),
            label: format!("p:{p}"),
            residue: None,
            eis: None,
        })))
    }

    pub fn laurent(p: u64, f: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidField(format!("{p} is not prime")));
        }
        if p == 2 {
            return Err(Error::InvalidField("F_2^f((t)) has characteristic 2".into()));
        }
        if f == 0 {
            return Err(Error::InvalidField("residue degree must be positive".into()));
        }
        let residue = FiniteField::new(p, f)?;
        let q = residue.q;
        Ok(FieldSpec(Arc::new(FieldData {
            kind: FieldKind::Laurent,
            p,
            f,
            q,
            e: 0,
            cap: width_cap(q),
            label: format!("laurent:{p}:{f}"),
            residue: Some(residue),
            eis: None,
        })))
    }

    /// Totally ramified extension of `Q_2` cut out by an Eisenstein polynomial,
    /// given highest coefficient first.
    pub fn eisenstein(coeffs_high_first: &[i64]) -> Result<Self> {
        let mut poly: Vec<i64> = coeffs_high_first.iter().rev().copied().collect();
        while poly.len() > 1 && *poly.last().unwrap() == 0 {
            poly.pop();
        }
        let d = poly.len().saturating_sub(1);
        if d == 0 || poly[d] != 1 {
            return Err(Error::InvalidField("Eisenstein polynomial must be monic of positive degree".into()));
        }
        if d > 8 {
            return Err(Error::InvalidField("Eisenstein degree above 8 is not supported".into()));
        }
        if poly[..d].iter().any(|c| c.rem_euclid(2) != 0) || poly[0].rem_euclid(4) != 2 {
            return Err(Error::InvalidField(format!("{coeffs_high_first:?} is not Eisenstein at 2")));
        }
        let label = format!(
            "eis2:{}",
            coeffs_high_first.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        );
        let mut pow_coords = Vec::with_capacity(2 * 64 + 2);
        let mut cur = vec![0i128; d];
        cur[0] = 1;
        for _ in 0..130 {
            pow_coords.push(cur.clone());
            let top = cur[d - 1];
            for j in (1..d).rev() {
                cur[j] = cur[j - 1];
            }
            cur[0] = 0;
            for j in 0..d {
                cur[j] = (cur[j] - top * poly[j] as i128) & EIS_MASK;
            }
        }
        let u = (poly[0] / 2) as i128;
        let u_inv = inverse_mod_pow2(u, EIS_BITS);
        let two_over_pi: Vec<i128> = (0..d).map(|k| (-(u_inv * poly[k + 1] as i128)) & EIS_MASK).collect();
        let theta = eisenstein_theta(&poly);
        let e = d as i32;
        let make = |shift: i32| {
            FieldSpec(Arc::new(FieldData {
                kind: FieldKind::Eisenstein,
                p: 2,
                f: 1,
                q: 2,
                e,
                cap: width_cap(2),
                label: label.clone(),
                residue: None,
                eis: Some(EisensteinData {
                    degree: d,
                    pow_coords: pow_coords.clone(),
                    two_over_pi: two_over_pi.clone(),
                    theta: theta.clone(),
                    shift,
                }),
            }))
        };
        let found = (0..=16)
            .flat_map(|s: i32| if s == 0 { vec![0] } else { vec![-s, s] })
            .map(make)
            .find(|f| f.basis_conductor_ok() && verify_conductor(&AdditiveCharacter::standard(f), 3));
        found.ok_or_else(|| Error::InvalidField(format!("no trace shift gives conductor 2e for {label}")))
    }

    /// Parses "p:2", "laurent:3:1" or "eis2:1,0,-2".
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidField(format!("cannot parse field {s:?}"));
        let mut parts = s.trim().splitn(2, ':');
        let head = parts.next().ok_or_else(bad)?;
        let rest = parts.next().ok_or_else(bad)?;
        match head {
            "p" => Self::padic(rest.parse().map_err(|_| bad())?),
            "laurent" => {
                let (p, f) = rest.split_once(':').unwrap_or((rest, "1"));
                Self::laurent(p.parse().map_err(|_| bad())?, f.parse().map_err(|_| bad())?)
            }
            "eis2" => {
                let coeffs: std::result::Result<Vec<i64>, _> = rest.split(',').map(|c| c.trim().parse()).collect();
                Self::eisenstein(&coeffs.map_err(|_| bad())?)
            }
            _ => Err(bad()),
        }
    }

    pub fn kind(&self) -> FieldKind {
        self.0.kind
    }

    pub fn p(&self) -> u64 {
        self.0.p
    }

    pub fn f(&self) -> u32 {
        self.0.f
    }

    pub fn q(&self) -> u64 {
        self.0.q
    }

    /// Valuation of 2.
    pub fn e(&self) -> i32 {
        self.0.e
    }

    /// Largest window width, in digits, representable in a code.
    pub fn width_cap(&self) -> i32 {
        self.0.cap
    }

    pub fn label(&self) -> &str {
        &self.0.label
    }

    /// Trace-shift exponent of the additive character (Eisenstein kind only).
    pub fn character_shift(&self) -> i32 {
        self.0.eis.as_ref().map_or(0, |d| d.shift)
    }

    /// `q^k`, or an error if it does not fit a code.
    pub fn q_pow(&self, k: i32) -> Result<u64> {
        if k < 0 || k > self.0.cap {
            return Err(Error::BoundExceeded(format!("window width {k} exceeds {} digits", self.0.cap)));
        }
        Ok(self.0.q.pow(k as u32))
    }

    fn qp(&self, k: i32) -> u64 {
        self.0.q.pow(k as u32)
    }

    pub fn element(&self, floor: i32, modulus: i32, code: u64) -> Result<TruncatedElement> {
        if modulus <= floor {
            return Err(Error::WindowTooCoarse { modulus, required: floor + 1 });
        }
        let size = self.q_pow(modulus - floor)?;
        Ok(TruncatedElement { floor, modulus, code: code % size })
    }

    pub fn zero_at(&self, floor: i32, modulus: i32) -> Result<TruncatedElement> {
        self.element(floor, modulus, 0)
    }

    /// The integer `n`, exact to `EXACT_WIDTH` digits beyond its valuation.
    pub fn from_int(&self, n: i64) -> TruncatedElement {
        let w = EXACT_WIDTH.min(self.0.cap);
        if n == 0 {
            return TruncatedElement { floor: 0, modulus: w, code: 0 };
        }
        match self.0.kind {
            FieldKind::PAdic => {
                let p = self.0.p as i64;
                let (mut m, mut v) = (n, 0);
                while m % p == 0 {
                    m /= p;
                    v += 1;
                }
                let size = self.qp(w) as i128;
                let code = (m as i128).rem_euclid(size) as u64;
                TruncatedElement { floor: v, modulus: v + w, code }
            }
            FieldKind::Laurent => {
                let p = self.0.p as i64;
                let r = n.rem_euclid(p) as u64;
                TruncatedElement { floor: 0, modulus: w, code: r }
            }
            FieldKind::Eisenstein => {
                let (mut m, mut k) = (n, 0);
                while m % 2 == 0 {
                    m /= 2;
                    k += 1;
                }
                // 2 = ϖ^d · unit, so the valuation is d·k.
                let d = self.0.e;
                let v = d * k;
                let mut coords = vec![0i128; d as usize];
                coords[0] = (n as i128) & EIS_MASK;
                let digits = self.coords_to_digits(coords, v + w);
                TruncatedElement { floor: v, modulus: v + w, code: digits >> v }
            }
        }
    }

    pub fn zero(&self) -> TruncatedElement {
        self.from_int(0)
    }

    pub fn one(&self) -> TruncatedElement {
        self.from_int(1)
    }

    pub fn two(&self) -> TruncatedElement {
        self.from_int(2)
    }

    pub fn uniformizer(&self) -> TruncatedElement {
        self.pi_pow(1)
    }

    /// `ϖ^k`, exact to `EXACT_WIDTH` digits.
    pub fn pi_pow(&self, k: i32) -> TruncatedElement {
        let w = EXACT_WIDTH.min(self.0.cap);
        TruncatedElement { floor: k, modulus: k + w, code: 1 }
    }

    /// Multiplication by `ϖ^k` (exact).
    pub fn shift(&self, x: &TruncatedElement, k: i32) -> TruncatedElement {
        TruncatedElement { floor: x.floor + k, modulus: x.modulus + k, code: x.code }
    }

    /// Valuation, or the known lower bound `modulus` as an error when `x ≡ 0`.
    pub fn valuation(&self, x: &TruncatedElement) -> Result<i32> {
        if x.code == 0 {
            return Err(Error::UnknownValuation(x.modulus));
        }
        let mut v = x.floor;
        let mut c = x.code;
        while c.is_multiple_of(self.0.q) {
            c /= self.0.q;
            v += 1;
        }
        Ok(v)
    }

    /// Raises the floor to the valuation when it is known.
    pub fn normalize(&self, x: &TruncatedElement) -> TruncatedElement {
        let mut y = *x;
        if y.code == 0 {
            return y;
        }
        while y.code.is_multiple_of(self.0.q) {
            y.code /= self.0.q;
            y.floor += 1;
        }
        y
    }

    /// Same element on the window `[floor, modulus)`, or `None` when
    /// `x ∉ π^floor 𝔬`. Fails when `x` is not known modulo `π^modulus`.
    pub fn reframe(&self, x: &TruncatedElement, floor: i32, modulus: i32) -> Result<Option<TruncatedElement>> {
        if x.modulus < modulus {
            return Err(Error::WindowTooCoarse { modulus: x.modulus, required: modulus });
        }
        let width = self.q_pow(modulus - floor)?;
        if floor >= modulus {
            return Err(Error::WindowTooCoarse { modulus, required: floor + 1 });
        }
        let code = if floor >= x.floor {
            let k = floor - x.floor;
            if k >= x.width() {
                return Ok(if x.code.is_multiple_of(self.q_pow(x.width().min(modulus - x.floor))?) {
                    Some(TruncatedElement { floor, modulus, code: 0 })
                } else {
                    None
                });
            }
            let low = self.qp(k);
            if !x.code.is_multiple_of(low) {
                return Ok(None);
            }
            x.code / low
        } else {
            let k = x.floor - floor;
            if k >= modulus - floor {
                0
            } else {
                let rel = x.code % self.qp(modulus - x.floor);
                rel * self.qp(k)
            }
        };
        Ok(Some(TruncatedElement { floor, modulus, code: code % width }))
    }

    /// Code of `x` on the window `[floor, modulus)`, or `None` when `x ∉ π^floor 𝔬`.
    pub fn code_in(&self, x: &TruncatedElement, floor: i32, modulus: i32) -> Result<Option<u64>> {
        Ok(self.reframe(x, floor, modulus)?.map(|y| y.code))
    }

    /// Truncates to a coarser modulus.
    pub fn truncate(&self, x: &TruncatedElement, modulus: i32) -> Result<TruncatedElement> {
        if modulus > x.modulus {
            return Err(Error::WindowTooCoarse { modulus: x.modulus, required: modulus });
        }
        if modulus <= x.floor {
            return Ok(TruncatedElement { floor: modulus - 1, modulus, code: 0 });
        }
        Ok(TruncatedElement { floor: x.floor, modulus, code: x.code % self.qp(modulus - x.floor) })
    }

    /// Digit of `x` at absolute position `pos`, i.e. the coefficient of `ϖ^pos`.
    pub fn digit(&self, x: &TruncatedElement, pos: i32) -> Result<u64> {
        if pos >= x.modulus {
            return Err(Error::WindowTooCoarse { modulus: x.modulus, required: pos + 1 });
        }
        if pos < x.floor {
            return Ok(0);
        }
        Ok((x.code / self.qp(pos - x.floor)) % self.0.q)
    }

    fn lower(&self, x: &TruncatedElement, floor: i32, modulus: i32) -> Result<u64> {
        debug_assert!(floor <= x.floor && modulus <= x.modulus);
        let w = modulus - floor;
        self.q_pow(w)?;
        let k = x.floor - floor;
        if k >= w {
            return Ok(0);
        }
        Ok((x.code % self.qp(w - k)) * self.qp(k))
    }

    pub fn add(&self, x: &TruncatedElement, y: &TruncatedElement) -> Result<TruncatedElement> {
        let floor = x.floor.min(y.floor);
        let modulus = x.modulus.min(y.modulus);
        let (a, b) = (self.lower(x, floor, modulus)?, self.lower(y, floor, modulus)?);
        Ok(TruncatedElement { floor, modulus, code: self.add_rel(a, b, modulus - floor) })
    }

    pub fn neg(&self, x: &TruncatedElement) -> TruncatedElement {
        TruncatedElement { code: self.neg_rel(x.code, x.width()), ..*x }
    }

    pub fn sub(&self, x: &TruncatedElement, y: &TruncatedElement) -> Result<TruncatedElement> {
        self.add(x, &self.neg(y))
    }

    pub fn mul(&self, x: &TruncatedElement, y: &TruncatedElement) -> Result<TruncatedElement> {
        let (x, y) = (self.normalize(x), self.normalize(y));
        if x.code == 0 || y.code == 0 {
            let vx = if x.code == 0 { x.modulus } else { x.floor };
            let vy = if y.code == 0 { y.modulus } else { y.floor };
            let modulus = (x.modulus + vy).min(y.modulus + vx);
            return Ok(TruncatedElement { floor: modulus - 1, modulus, code: 0 });
        }
        let floor = x.floor + y.floor;
        let modulus = (x.floor + y.modulus).min(y.floor + x.modulus);
        let w = modulus - floor;
        let size = self.q_pow(w)?;
        let code = self.mul_rel(x.code % size, y.code % size, w);
        Ok(TruncatedElement { floor, modulus, code })
    }

    /// Integer multiple `n·x`.
    pub fn mul_int(&self, x: &TruncatedElement, n: i64) -> Result<TruncatedElement> {
        self.mul(x, &self.from_int(n))
    }

    /// Inverse of an element of known valuation `v`: the result lies on the
    /// window `[-v, -v + width)` where `width` is the width after normalizing.
    pub fn inv(&self, x: &TruncatedElement) -> Result<TruncatedElement> {
        if x.code == 0 {
            return Err(Error::NotUnit);
        }
        let x = self.normalize(x);
        let w = x.width();
        let code = self.inv_unit_rel(x.code, w);
        Ok(TruncatedElement { floor: -x.floor, modulus: -x.floor + w, code })
    }

    /// Inverse of a unit; errors unless the valuation is zero.
    pub fn inv_unit(&self, x: &TruncatedElement) -> Result<TruncatedElement> {
        match self.valuation(x) {
            Ok(0) => self.inv(x),
            _ => Err(Error::NotUnit),
        }
    }

    pub fn pow(&self, x: &TruncatedElement, k: u32) -> Result<TruncatedElement> {
        let mut acc = self.one();
        for _ in 0..k {
            acc = self.mul(&acc, x)?;
        }
        Ok(acc)
    }

    /// Agreement on the coarser of the two windows.
    pub fn congruent(&self, x: &TruncatedElement, y: &TruncatedElement) -> Result<bool> {
        Ok(self.sub(x, y)?.code == 0)
    }

    /// Agreement modulo `π^modulus` (both must be known that far).
    pub fn congruent_mod(&self, x: &TruncatedElement, y: &TruncatedElement, modulus: i32) -> Result<bool> {
        let d = self.sub(x, y)?;
        if d.modulus < modulus {
            return Err(Error::WindowTooCoarse { modulus: d.modulus, required: modulus });
        }
        Ok(self.truncate(&d, modulus)?.code == 0)
    }

    /// Residues `𝔬/π^w` whose first digit is nonzero.
    pub fn units(&self, w: i32) -> Result<Vec<TruncatedElement>> {
        let size = self.q_pow(w)?;
        Ok((0..size)
            .filter(|c| c % self.0.q != 0)
            .map(|code| TruncatedElement { floor: 0, modulus: w, code })
            .collect())
    }

    fn add_rel(&self, a: u64, b: u64, w: i32) -> u64 {
        match self.0.kind {
            FieldKind::PAdic => ((a as u128 + b as u128) % self.qp(w) as u128) as u64,
            FieldKind::Laurent => {
                let fq = self.0.residue.as_ref().unwrap();
                self.digitwise(a, b, w, |x, y| fq.add(x, y))
            }
            FieldKind::Eisenstein => {
                let mut ca = self.digits_to_coords(a);
                let cb = self.digits_to_coords(b);
                for (x, y) in ca.iter_mut().zip(cb) {
                    *x = (*x + y) & EIS_MASK;
                }
                self.coords_to_digits(ca, w)
            }
        }
    }

    fn neg_rel(&self, a: u64, w: i32) -> u64 {
        match self.0.kind {
            FieldKind::PAdic => {
                let size = self.qp(w);
                (size - a % size) % size
            }
            FieldKind::Laurent => {
                let fq = self.0.residue.as_ref().unwrap();
                self.digitwise(a, 0, w, |x, _| fq.neg[x as usize])
            }
            FieldKind::Eisenstein => {
                let c = self.digits_to_coords(a).into_iter().map(|x| (-x) & EIS_MASK).collect();
                self.coords_to_digits(c, w)
            }
        }
    }

    fn mul_rel(&self, a: u64, b: u64, w: i32) -> u64 {
        match self.0.kind {
            FieldKind::PAdic => ((a as u128 * b as u128) % self.qp(w) as u128) as u64,
            FieldKind::Laurent => {
                let fq = self.0.residue.as_ref().unwrap();
                let q = self.0.q;
                let da: Vec<u32> = (0..w).map(|k| ((a / self.qp(k)) % q) as u32).collect();
                let db: Vec<u32> = (0..w).map(|k| ((b / self.qp(k)) % q) as u32).collect();
                let mut out = vec![0u32; w as usize];
                for (i, &x) in da.iter().enumerate() {
                    if x == 0 {
                        continue;
                    }
                    for (j, &y) in db.iter().take(w as usize - i).enumerate() {
                        out[i + j] = fq.add(out[i + j], fq.mul(x, y));
                    }
                }
                out.iter().rev().fold(0u64, |acc, &d| acc * q + d as u64)
            }
            FieldKind::Eisenstein => {
                let eis = self.0.eis.as_ref().unwrap();
                let ca = self.digits_to_coords(a);
                let cb = self.digits_to_coords(b);
                let mut out = vec![0i128; eis.degree];
                for (i, &x) in ca.iter().enumerate() {
                    if x == 0 {
                        continue;
                    }
                    for (j, &y) in cb.iter().enumerate() {
                        let xy = (x * y) & EIS_MASK;
                        for (o, &v) in out.iter_mut().zip(&eis.pow_coords[i + j]) {
                            *o = (*o + ((xy * v) & EIS_MASK)) & EIS_MASK;
                        }
                    }
                }
                self.coords_to_digits(out, w)
            }
        }
    }

    fn digitwise(&self, a: u64, b: u64, w: i32, op: impl Fn(u32, u32) -> u32) -> u64 {
        let q = self.0.q;
        let mut out = 0u64;
        for k in (0..w).rev() {
            let pk = self.qp(k);
            let d = op(((a / pk) % q) as u32, ((b / pk) % q) as u32);
            out = out * q + d as u64;
        }
        out
    }

    fn inv_unit_rel(&self, a: u64, w: i32) -> u64 {
        let q = self.0.q;
        let r = a % q;
        let r_inv = (1..q).find(|&c| self.mul_rel(r, c, 1) == 1).expect("unit residue");
        // Newton iteration y ← y + y(1 − ay) doubles the precision each step.
        let mut y = r_inv;
        let mut prec = 1;
        while prec < w {
            prec = (2 * prec).min(w);
            let size = self.qp(prec);
            let ay = self.mul_rel(a % size, y % size, prec);
            let err = self.add_rel(1, self.neg_rel(ay, prec), prec);
            y = self.add_rel(y % size, self.mul_rel(y % size, err, prec), prec);
        }
        y % self.qp(w)
    }

    fn digits_to_coords(&self, code: u64) -> Vec<i128> {
        let eis = self.0.eis.as_ref().unwrap();
        let mut out = vec![0i128; eis.degree];
        let mut c = code;
        let mut k = 0;
        while c != 0 {
            if c & 1 == 1 {
                for (o, &v) in out.iter_mut().zip(&eis.pow_coords[k]) {
                    *o = (*o + v) & EIS_MASK;
                }
            }
            c >>= 1;
            k += 1;
        }
        out
    }

    fn coords_to_digits(&self, mut coords: Vec<i128>, w: i32) -> u64 {
        let eis = self.0.eis.as_ref().unwrap();
        let d = eis.degree;
        let mut out = 0u64;
        for k in 0..w {
            let c = coords[0] & 1;
            out |= (c as u64) << k;
            let half = ((coords[0] - c) & EIS_MASK) >> 1;
            for j in 0..d {
                let next = if j + 1 < d { coords[j + 1] } else { 0 };
                coords[j] = (next + ((half * eis.two_over_pi[j]) & EIS_MASK)) & EIS_MASK;
            }
        }
        out
    }

    /// Checks on the Z_2-basis `1, ϖ, ..., ϖ^{d-1}` that the shifted trace
    /// character is trivial on `π^{2e}` and not on `π^{2e-1}`.
    fn basis_conductor_ok(&self) -> bool {
        let chi = AdditiveCharacter::standard(self);
        let e2 = 2 * self.e();
        let w = EXACT_WIDTH;
        let trivial_on = |floor: i32| -> bool {
            (0..self.e().max(1)).all(|r| {
                let x = TruncatedElement { floor: floor + r, modulus: floor + r + w, code: 1 };
                chi.eval(&x).map(|z| z.is_one()).unwrap_or(false)
            })
        };
        trivial_on(e2) && !trivial_on(e2 - 1)
    }
}

fn inverse_mod_pow2(u: i128, bits: u32) -> i128 {
    let mask = (1i128 << bits) - 1;
    let mut y: i128 = 1;
    for _ in 0..7 {
        y = (y * ((2 - u * y) & mask)) & mask;
    }
    debug_assert_eq!((u * y) & mask, 1);
    y
}

/// Power sums `Σ r^k` over the roots of a monic polynomial (lowest coefficient
/// first), for `k = 0..count`.
fn power_sums(poly: &[BigRational], count: usize) -> Vec<BigRational> {
    let d = poly.len() - 1;
    let c = |i: usize| poly[i].clone();
    let mut p: Vec<BigRational> = Vec::with_capacity(count);
    p.push(BigRational::from_integer(BigInt::from(d)));
    for k in 1..count {
        let mut s = BigRational::zero();
        for i in 1..k.min(d + 1) {
            s += c(d - i) * &p[k - i];
        }
        if k <= d {
            s += c(d - k) * BigRational::from_integer(BigInt::from(k));
        }
        p.push(-s);
    }
    p
}

fn frac_2(r: &BigRational) -> RootOfUnity {
    let num = r.numer();
    let den = r.denom();
    let k = den.trailing_zeros().unwrap_or(0);
    if k == 0 {
        return RootOfUnity::ONE;
    }
    assert!(k <= 62, "2-adic denominator too large");
    let modulus = BigInt::one() << k;
    let odd = den >> k;
    let inv = odd.extended_gcd(&modulus).x.mod_floor(&modulus);
    let c = (num * inv).mod_floor(&modulus);
    RootOfUnity::new(c.to_i64().unwrap(), 1u64 << k).unwrap()
}

fn eisenstein_theta(poly: &[i64]) -> Vec<RootOfUnity> {
    let d = poly.len() - 1;
    let q = |n: i64| BigRational::from_integer(BigInt::from(n));
    let forward: Vec<BigRational> = poly.iter().map(|&c| q(c)).collect();
    let c0 = q(poly[0]);
    let reversed: Vec<BigRational> = (0..=d).map(|i| q(poly[d - i]) / &c0).collect();
    let pos = power_sums(&forward, THETA_POS as usize + 1);
    let neg = power_sums(&reversed, THETA_NEG as usize + 1);
    let four = q(4);
    let mut out = Vec::with_capacity((THETA_NEG + THETA_POS + 1) as usize);
    for j in -THETA_NEG..=THETA_POS {
        let t = if j >= 0 { &pos[j as usize] } else { &neg[(-j) as usize] };
        out.push(frac_2(&(t / &four)));
    }
    out
}

/// The additive character `ψ` of conductor `2e`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdditiveCharacter {
    field: FieldSpec,
    scale: i32,
}

impl AdditiveCharacter {
    pub fn standard(field: &FieldSpec) -> Self {
        AdditiveCharacter { field: field.clone(), scale: 0 }
    }

    /// `x ↦ ψ(ϖ^k x)`; only `k = 0` has conductor `2e`.
    pub fn scaled(field: &FieldSpec, k: i32) -> Self {
        AdditiveCharacter { field: field.clone(), scale: k }
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    /// `ψ(x)`, defined once `x` is known modulo `4𝔬`.
    pub fn eval(&self, x: &TruncatedElement) -> Result<RootOfUnity> {
        let fld = &self.field;
        let e2 = 2 * fld.e();
        let x = fld.shift(x, self.scale);
        if x.modulus < e2 {
            return Err(Error::WindowTooCoarse { modulus: x.modulus - self.scale, required: e2 - self.scale });
        }
        if x.code == 0 {
            return Ok(RootOfUnity::ONE);
        }
        match fld.kind() {
            FieldKind::PAdic => {
                // angle of the p-fractional part of x/4
                let p = fld.p();
                if p == 2 {
                    let k = 2 - x.floor;
                    if k <= 0 {
                        return Ok(RootOfUnity::ONE);
                    }
                    let size = fld.q_pow(k)?;
                    RootOfUnity::new((x.code % size) as i64, size)
                } else {
                    let k = -x.floor;
                    if k <= 0 {
                        return Ok(RootOfUnity::ONE);
                    }
                    let size = fld.q_pow(k)?;
                    let inv4 = mod_inverse(4, size);
                    let num = ((x.code % size) as u128 * inv4 as u128 % size as u128) as i64;
                    RootOfUnity::new(num, size)
                }
            }
            FieldKind::Laurent => {
                let fq = fld.0.residue.as_ref().unwrap();
                let c = fld.digit(&x, -1)? as u32;
                let inv4 = mod_inverse(4, fld.p()) as u32;
                let t = fq.trace[fq.mul(c, inv4) as usize];
                RootOfUnity::new(t as i64, fld.p())
            }
            FieldKind::Eisenstein => {
                let eis = fld.0.eis.as_ref().unwrap();
                let mut acc = RootOfUnity::ONE;
                let mut c = x.code;
                let mut j = x.floor + eis.shift;
                while c != 0 {
                    if c & 1 == 1 {
                        if j < -THETA_NEG {
                            return Err(Error::BoundExceeded(format!("trace of ϖ^{j}")));
                        }
                        if j <= THETA_POS {
                            acc = acc * eis.theta[(j + THETA_NEG) as usize];
                        }
                    }
                    c >>= 1;
                    j += 1;
                }
                Ok(acc)
            }
        }
    }
}

fn mod_inverse(a: u64, m: u64) -> u64 {
    let g = (a as i128).extended_gcd(&(m as i128));
    debug_assert!(g.gcd == 1);
    g.x.rem_euclid(m as i128) as u64
}

/// Coset representatives of `(π^a 𝔬 / π^b 𝔬)^n` in mixed radix, coordinate 0
/// most significant, together with the index of the representative of `−x`.
pub fn enumerate_quotient(
    field: &FieldSpec,
    a: i32,
    b: i32,
    n: usize,
) -> Result<(Vec<Vec<TruncatedElement>>, Vec<usize>)> {
    if b < a {
        return Err(Error::InvalidSpace(format!("window [{a}, {b}) is empty")));
    }
    let per = field.q_pow(b - a)?;
    let total = (per as u128).checked_pow(n as u32).filter(|&t| t <= 1 << 24).ok_or_else(|| {
        Error::BoundExceeded(format!("{per}^{n} cosets"))
    })? as usize;
    let mut reps = Vec::with_capacity(total);
    let mut neg = Vec::with_capacity(total);
    for idx in 0..total {
        let mut rest = idx as u64;
        let mut codes = vec![0u64; n];
        for j in (0..n).rev() {
            codes[j] = rest % per;
            rest /= per;
        }
        let elems: Vec<TruncatedElement> = codes
            .iter()
            .map(|&code| match a == b {
                true => TruncatedElement { floor: a - 1, modulus: a, code: 0 },
                false => TruncatedElement { floor: a, modulus: b, code },
            })
            .collect();
        let ni = codes.iter().fold(0u64, |acc, &c| {
            let nc = if a == b { 0 } else { field.neg_rel(c, b - a) };
            acc * per + nc
        });
        reps.push(elems);
        neg.push(ni as usize);
    }
    Ok((reps, neg))
}

/// Exhaustive test that `ψ(t x) = 1` for every `t ∈ 𝔬` exactly when
/// `x ∈ 4𝔬`, over `x ∈ π^{-V}𝔬 / 4𝔬`, plus triviality on `4𝔬 / 4π^V 𝔬`.
pub fn verify_conductor(chi: &AdditiveCharacter, depth: i32) -> bool {
    let field = chi.field();
    let e2 = 2 * field.e();
    let (Ok(xs), Ok(ts)) = (field.q_pow(depth + e2), field.q_pow(depth + e2)) else {
        return false;
    };
    for xc in 0..xs {
        let x = TruncatedElement { floor: -depth, modulus: e2, code: xc };
        let annihilated = (0..ts).all(|tc| {
            let t = TruncatedElement { floor: 0, modulus: depth + e2, code: tc };
            field.mul(&t, &x).and_then(|tx| chi.eval(&tx)).map(|z| z.is_one()).unwrap_or(false)
        });
        if annihilated != (xc == 0) {
            return false;
        }
    }
    let Ok(fine) = field.q_pow(depth) else {
        return false;
    };
    (0..fine).all(|c| {
        let x = TruncatedElement { floor: e2, modulus: e2 + depth, code: c };
        chi.eval(&x).map(|z| z.is_one()).unwrap_or(false)
    })
}

/// True when `x ≡ −x` on its window.
pub fn is_self_negative(field: &FieldSpec, x: &TruncatedElement) -> bool {
    field.neg(x).code == x.code
}

/// Exact rational to element helper used for small constants like `1/2`.
pub fn from_ratio(field: &FieldSpec, num: i64, den: i64) -> Result<TruncatedElement> {
    if den == 0 {
        return Err(Error::DivisionByZero);
    }
    let d = field.inv(&field.from_int(den))?;
    field.mul(&field.from_int(num), &d)
}
