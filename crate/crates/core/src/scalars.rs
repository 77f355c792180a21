//! Roots of unity and exact arithmetic in cyclotomic fields `Q(ζ_N)`.
//!
//! [`RootOfUnity`] is a point of `Q/Z` and multiplies by adding angles.
//! [`Cyclotomic`] stores coordinates in the power basis `1, ζ, …, ζ^{φ(N)-1}`
//! after reduction by the `N`-th cyclotomic polynomial, so equal values at the
//! same order have equal coefficient lists. [`ZetaSum`] is the unreduced
//! group-ring form `Σ c_k ζ^k` with integer coefficients, used where long
//! runs of additions and root-of-unity multiplications happen before any
//! reduction is needed.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use once_cell::sync::Lazy;

use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RootOfUnity {
    num: u64,
    den: u64,
}

impl RootOfUnity {
    pub const ONE: RootOfUnity = RootOfUnity { num: 0, den: 1 };

    /// The root `exp(2πi · num/den)`.
    pub fn new(num: i64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::ZeroDenominator);
        }
        let r = (num as i128).rem_euclid(den as i128) as u64;
        Ok(Self::reduced(r, den))
    }

    fn reduced(num: u64, den: u64) -> Self {
        if num == 0 {
            return Self::ONE;
        }
        let g = num.gcd(&den);
        RootOfUnity { num: num / g, den: den / g }
    }

    pub fn num(&self) -> u64 {
        self.num
    }

    pub fn den(&self) -> u64 {
        self.den
    }

    pub fn is_one(&self) -> bool {
        self.num == 0
    }

    pub fn inv(self) -> Self {
        Self::reduced((self.den - self.num) % self.den, self.den)
    }

    pub fn pow(self, k: i64) -> Self {
        let r = ((self.num as i128) * (k as i128)).rem_euclid(self.den as i128) as u64;
        Self::reduced(r, self.den)
    }

    /// Exponent `k` with `self = ζ_order^k`, if the order is compatible.
    pub fn exponent_at(&self, order: u64) -> Option<u64> {
        order.is_multiple_of(self.den).then(|| self.num * (order / self.den))
    }
}

impl Mul for RootOfUnity {
    type Output = RootOfUnity;

    fn mul(self, rhs: RootOfUnity) -> RootOfUnity {
        let den = self.den.lcm(&rhs.den);
        let num = (self.num * (den / self.den) + rhs.num * (den / rhs.den)) % den;
        Self::reduced(num, den)
    }
}

impl fmt::Display for RootOfUnity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            write!(f, "1")
        } else {
            write!(f, "e(2πi·{}/{})", self.num, self.den)
        }
    }
}

pub fn euler_phi(mut n: u64) -> u64 {
    let mut result = n;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result
}

/// Integer coefficients of the `n`-th cyclotomic polynomial, lowest degree first.
pub fn cyclotomic_polynomial(n: u64) -> Vec<i64> {
    // x^n - 1 divided by Φ_d for every proper divisor d of n.
    let mut num = vec![0i64; n as usize + 1];
    num[0] = -1;
    num[n as usize] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            num = poly_div_exact(&num, &cyclotomic_polynomial(d));
        }
    }
    num
}

fn poly_div_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let nd = num.len() - 1;
    let mut quot = vec![0i64; nd - dd + 1];
    for k in (0..=nd - dd).rev() {
        let c = rem[k + dd];
        quot[k] = c;
        for (j, &dc) in den.iter().enumerate() {
            rem[k + j] -= c * dc;
        }
    }
    debug_assert!(rem.iter().all(|&c| c == 0));
    quot
}

struct CycloData {
    phi: usize,
    /// Power-basis coordinates of `ζ^k` for `0 <= k < N`.
    powers: Vec<Vec<i64>>,
}

static CYCLO_CACHE: Lazy<Mutex<HashMap<u64, Arc<CycloData>>>> = Lazy::new(Default::default);

fn cyclo_data(order: u64) -> Arc<CycloData> {
    if let Some(d) = CYCLO_CACHE.lock().unwrap().get(&order) {
        return d.clone();
    }
    let poly = cyclotomic_polynomial(order);
    let phi = poly.len() - 1;
    let mut powers = Vec::with_capacity(order as usize);
    let mut cur = vec![0i64; phi];
    cur[0] = 1;
    for _ in 0..order {
        powers.push(cur.clone());
        // multiply by x and reduce with the monic Φ_N
        let top = cur[phi - 1];
        for j in (1..phi).rev() {
            cur[j] = cur[j - 1];
        }
        cur[0] = 0;
        if top != 0 {
            for j in 0..phi {
                cur[j] -= top * poly[j];
            }
        }
    }
    let data = Arc::new(CycloData { phi, powers });
    CYCLO_CACHE.lock().unwrap().insert(order, data.clone());
    data
}

fn q_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// An element of `Q(ζ_N)` in canonical power-basis form.
#[derive(Debug, Clone)]
pub struct Cyclotomic {
    order: u64,
    coeffs: Vec<BigRational>,
}

impl Cyclotomic {
    pub fn zero(order: u64) -> Self {
        let phi = euler_phi(order.max(1)) as usize;
        Cyclotomic { order: order.max(1), coeffs: vec![BigRational::zero(); phi] }
    }

    pub fn one(order: u64) -> Self {
        Self::from_rational(order, BigRational::one())
    }

    pub fn from_rational(order: u64, r: BigRational) -> Self {
        let mut z = Self::zero(order);
        z.coeffs[0] = r;
        z
    }

    pub fn from_int(order: u64, n: i64) -> Self {
        Self::from_rational(order, q_int(n))
    }

    /// Builds a value from raw power-basis coordinates, which must already
    /// have length `φ(order)`.
    pub fn from_coeffs(order: u64, coeffs: Vec<BigRational>) -> Result<Self> {
        if coeffs.len() as u64 != euler_phi(order) {
            return Err(Error::OrderMismatch { order, den: coeffs.len() as u64 });
        }
        Ok(Cyclotomic { order, coeffs })
    }

    /// `ζ_order^k` reduced into the power basis.
    pub fn zeta_pow(order: u64, k: u64) -> Self {
        let data = cyclo_data(order);
        let coeffs = data.powers[(k % order) as usize].iter().map(|&c| q_int(c)).collect();
        Cyclotomic { order, coeffs }
    }

    pub fn from_root(z: RootOfUnity, order: u64) -> Result<Self> {
        let k = z.exponent_at(order).ok_or(Error::OrderMismatch { order, den: z.den() })?;
        Ok(Self::zeta_pow(order, k))
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(|c| c.is_zero())
    }

    /// Re-expresses the value in `Q(ζ_M)` via `ζ_N ↦ ζ_M^{M/N}`.
    pub fn lift(&self, order: u64) -> Result<Self> {
        if !order.is_multiple_of(self.order) {
            return Err(Error::OrderMismatch { order, den: self.order });
        }
        if order == self.order {
            return Ok(self.clone());
        }
        let step = order / self.order;
        let data = cyclo_data(order);
        let mut out = vec![BigRational::zero(); data.phi];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            for (o, &v) in out.iter_mut().zip(&data.powers[i * step as usize]) {
                if v != 0 {
                    *o += c * q_int(v);
                }
            }
        }
        Ok(Cyclotomic { order, coeffs: out })
    }

    fn common(a: &Self, b: &Self) -> (Self, Self) {
        let order = a.order.lcm(&b.order);
        (a.lift(order).unwrap(), b.lift(order).unwrap())
    }

    pub fn mul_root(&self, z: RootOfUnity) -> Self {
        let order = self.order.lcm(&z.den());
        let a = self.lift(order).unwrap();
        a * Cyclotomic::from_root(z, order).unwrap()
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        Cyclotomic { order: self.order, coeffs: self.coeffs.iter().map(|c| c * r).collect() }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Cyclotomic::one(self.order);
        for _ in 0..k {
            acc = acc * self.clone();
        }
        acc
    }

    /// Multiplicative inverse, by solving the multiplication-by-self system
    /// over `Q`.
    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let phi = self.coeffs.len();
        let cols: Vec<Vec<BigRational>> = (0..phi)
            .map(|j| (self.clone() * Cyclotomic::zeta_pow(self.order, j as u64)).coeffs)
            .collect();
        let mut e0 = vec![BigRational::zero(); phi];
        e0[0] = BigRational::one();
        let x = linalg::solve_columns(&cols, &e0).ok_or(Error::DivisionByZero)?;
        Ok(Cyclotomic { order: self.order, coeffs: x })
    }
}

impl PartialEq for Cyclotomic {
    fn eq(&self, other: &Self) -> bool {
        if self.order == other.order {
            return self.coeffs == other.coeffs;
        }
        let (a, b) = Self::common(self, other);
        a.coeffs == b.coeffs
    }
}

impl Eq for Cyclotomic {}

impl Add for Cyclotomic {
    type Output = Cyclotomic;

    fn add(self, rhs: Cyclotomic) -> Cyclotomic {
        let (mut a, b) = if self.order == rhs.order { (self, rhs) } else { Self::common(&self, &rhs) };
        for (x, y) in a.coeffs.iter_mut().zip(b.coeffs) {
            *x += y;
        }
        a
    }
}

impl Neg for Cyclotomic {
    type Output = Cyclotomic;

    fn neg(mut self) -> Cyclotomic {
        for x in self.coeffs.iter_mut() {
            *x = -x.clone();
        }
        self
    }
}

impl Sub for Cyclotomic {
    type Output = Cyclotomic;

    fn sub(self, rhs: Cyclotomic) -> Cyclotomic {
        self + (-rhs)
    }
}

impl Mul for Cyclotomic {
    type Output = Cyclotomic;

    fn mul(self, rhs: Cyclotomic) -> Cyclotomic {
        let (a, b) = if self.order == rhs.order { (self, rhs) } else { Self::common(&self, &rhs) };
        let order = a.order;
        let data = cyclo_data(order);
        let mut out = vec![BigRational::zero(); data.phi];
        for (i, x) in a.coeffs.iter().enumerate() {
            if x.is_zero() {
                continue;
            }
            for (j, y) in b.coeffs.iter().enumerate() {
                if y.is_zero() {
                    continue;
                }
                let xy = x * y;
                let k = (i + j) % order as usize;
                for (o, &v) in out.iter_mut().zip(&data.powers[k]) {
                    if v != 0 {
                        *o += &xy * q_int(v);
                    }
                }
            }
        }
        Cyclotomic { order, coeffs: out }
    }
}

impl fmt::Display for Cyclotomic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                _ => write!(f, "({c})ζ{}^{k}", self.order)?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Integer combination `Σ c_k ζ_N^k` kept in the group ring `Z[Z/N]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZetaSum {
    order: u64,
    coeffs: Vec<i64>,
}

impl ZetaSum {
    pub fn zero() -> Self {
        ZetaSum { order: 1, coeffs: vec![0] }
    }

    pub fn root(z: RootOfUnity) -> Self {
        let mut coeffs = vec![0; z.den() as usize];
        coeffs[z.num() as usize] = 1;
        ZetaSum { order: z.den(), coeffs }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    fn lift_to(&mut self, order: u64) {
        if order == self.order {
            return;
        }
        let step = (order / self.order) as usize;
        let mut coeffs = vec![0; order as usize];
        for (k, &c) in self.coeffs.iter().enumerate() {
            coeffs[k * step] = c;
        }
        self.order = order;
        self.coeffs = coeffs;
    }

    /// `self += z · other`.
    pub fn add_rotated(&mut self, other: &ZetaSum, z: RootOfUnity) {
        let order = self.order.lcm(&other.order).lcm(&z.den());
        self.lift_to(order);
        let step = (order / other.order) as usize;
        let shift = z.exponent_at(order).unwrap() as usize;
        let n = order as usize;
        for (k, &c) in other.coeffs.iter().enumerate() {
            if c != 0 {
                self.coeffs[(k * step + shift) % n] += c;
            }
        }
    }

    pub fn from_int(n: i64) -> Self {
        ZetaSum { order: 1, coeffs: vec![n] }
    }

    pub fn neg(&self) -> Self {
        ZetaSum { order: self.order, coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    pub fn add(&mut self, other: &ZetaSum) {
        self.add_rotated(other, RootOfUnity::ONE);
    }

    /// `z · self`.
    pub fn rotated(&self, z: RootOfUnity) -> Self {
        let mut out = ZetaSum::zero();
        out.add_rotated(self, z);
        out
    }

    pub fn mul(&self, other: &ZetaSum) -> Self {
        let mut out = ZetaSum::zero();
        for (k, &c) in other.coeffs.iter().enumerate() {
            if c != 0 {
                let z = RootOfUnity::new(k as i64, other.order).unwrap();
                let mut term = self.rotated(z);
                term.coeffs.iter_mut().for_each(|x| *x *= c);
                out.add(&term);
            }
        }
        out
    }

    /// Integer coordinates in the power basis of `Q(ζ_order)`.
    pub fn reduced(&self, order: u64) -> Result<Vec<i64>> {
        if !order.is_multiple_of(self.order) {
            return Err(Error::OrderMismatch { order, den: self.order });
        }
        let step = (order / self.order) as usize;
        let data = cyclo_data(order);
        let mut acc = vec![0i64; data.phi];
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            for (a, &v) in acc.iter_mut().zip(&data.powers[k * step]) {
                *a += c * v;
            }
        }
        Ok(acc)
    }

    /// Value equality (the group-ring representation is not unique).
    pub fn same_value(&self, other: &ZetaSum) -> bool {
        let order = self.order.lcm(&other.order);
        self.reduced(order).ok() == other.reduced(order).ok()
    }

    pub fn vanishes(&self) -> bool {
        self.is_zero() || self.reduced(self.order).map(|v| v.iter().all(|&c| c == 0)).unwrap_or(false)
    }

    pub fn to_cyclotomic(&self, order: u64) -> Result<Cyclotomic> {
        let acc = self.reduced(order)?;
        Ok(Cyclotomic { order, coeffs: acc.into_iter().map(q_int).collect() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_reduction() {
        let z = RootOfUnity::new(2, 4).unwrap();
        assert_eq!((z.num(), z.den()), (1, 2));
        assert!(RootOfUnity::new(0, 7).unwrap().is_one());
        let i = RootOfUnity::new(1, 4).unwrap();
        assert_eq!(i * i, RootOfUnity::new(1, 2).unwrap());
        assert_eq!(RootOfUnity::new(1, 0), Err(Error::ZeroDenominator));
        assert_eq!(RootOfUnity::new(-1, 4).unwrap(), RootOfUnity::new(3, 4).unwrap());
    }

    #[test]
    fn cyclotomic_polynomials() {
        assert_eq!(cyclotomic_polynomial(1), vec![-1, 1]);
        assert_eq!(cyclotomic_polynomial(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_polynomial(8), vec![1, 0, 0, 0, 1]);
        assert_eq!(cyclotomic_polynomial(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_polynomial(9), vec![1, 0, 0, 1, 0, 0, 1]);
    }

    #[test]
    fn to_cyclotomic_examples() {
        let minus_one = Cyclotomic::from_root(RootOfUnity::new(1, 2).unwrap(), 4).unwrap();
        assert_eq!(minus_one.coeffs(), &[q_int(-1), q_int(0)]);
        let one = Cyclotomic::from_root(RootOfUnity::ONE, 8).unwrap();
        assert_eq!(one.coeffs(), &[q_int(1), q_int(0), q_int(0), q_int(0)]);
        for p in [2u64, 3, 5, 7] {
            let s = (0..p)
                .map(|k| Cyclotomic::from_root(RootOfUnity::new(k as i64, p).unwrap(), p).unwrap())
                .fold(Cyclotomic::zero(p), |a, b| a + b);
            assert!(s.is_zero(), "sum of {p}-th roots");
        }
        assert!(Cyclotomic::from_root(RootOfUnity::new(1, 3).unwrap(), 4).is_err());
    }

    #[test]
    fn ring_examples() {
        let i = Cyclotomic::zeta_pow(4, 1);
        let one = Cyclotomic::one(4);
        assert_eq!((i.clone() + one.clone()) * (i - one), Cyclotomic::from_int(4, -2));
        let z8 = Cyclotomic::zeta_pow(8, 1);
        let inv = z8.inv().unwrap();
        assert_eq!(inv, Cyclotomic::zeta_pow(8, 7));
        assert!((z8 * inv).is_one());
        assert_eq!(Cyclotomic::zero(5).inv(), Err(Error::DivisionByZero));
    }

    #[test]
    fn lifting_commutes_with_equality() {
        let a = Cyclotomic::zeta_pow(4, 1);
        let b = Cyclotomic::zeta_pow(8, 2);
        assert_eq!(a, b);
        assert_eq!(a.lift(24).unwrap(), b.lift(24).unwrap());
        assert_eq!(a.lift(8).unwrap(), b);
    }

    #[test]
    fn zeta_sum_reduction() {
        let mut s = ZetaSum::zero();
        for k in 0..3 {
            s.add_rotated(&ZetaSum::root(RootOfUnity::ONE), RootOfUnity::new(k, 3).unwrap());
        }
        assert!(s.to_cyclotomic(3).unwrap().is_zero());
        let mut t = ZetaSum::root(RootOfUnity::new(1, 4).unwrap());
        t.add_rotated(&ZetaSum::root(RootOfUnity::ONE), RootOfUnity::new(1, 8).unwrap());
        let expect = Cyclotomic::zeta_pow(8, 2) + Cyclotomic::zeta_pow(8, 1);
        assert_eq!(t.to_cyclotomic(8).unwrap(), expect);
    }
}
