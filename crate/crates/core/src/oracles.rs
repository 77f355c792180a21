//! Brute-force checks of the standalone lemmas: the Fourier support lemma,
//! the square lemma and its symmetric-character corollary, and the conductor
//! of `ψ`. Only field and scalar primitives are used here, so these are
//! independent of the operator code in `schrodinger`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::localfield::{verify_conductor, AdditiveCharacter, FieldSpec, TruncatedElement};
use crate::scalars::{RootOfUnity, ZetaSum};

/// Field specs accepted by the command line.
pub const SUPPORTED_FIELDS: &[&str] = &[
    "p:2",
    "p:3",
    "p:5",
    "p:7",
    "laurent:3:1",
    "laurent:3:2",
    "laurent:5:1",
    "eis2:1,0,-2",
    "eis2:1,0,2",
    "eis2:1,2,2",
];

const CONDUCTOR_DEPTH: i32 = 2;
/// Root multiplications allowed for one Fourier case in `run_all`.
const FOURIER_BUDGET: u64 = 50_000_000;
/// Points allowed at the default window in the corollary checks of `run_all`.
const POINT_BUDGET: u64 = 4096;

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct OracleOutcome {
    pub name: String,
    pub ok: bool,
    /// Size of the exhaustive domain.
    pub enumerated: u64,
    /// Non-trivial instances of the hypothesis that were met.
    pub witnesses: u64,
    pub detail: String,
}

impl OracleOutcome {
    fn new(name: String, enumerated: u64, witnesses: u64, failure: Option<String>) -> Self {
        let vacuous = witnesses == 0;
        let ok = failure.is_none() && !vacuous;
        let detail = match (failure, vacuous) {
            (Some(f), _) => f,
            (None, true) => "vacuous: no non-trivial instance enumerated".into(),
            (None, false) => String::new(),
        };
        OracleOutcome { name, ok, enumerated, witnesses, detail }
    }
}

fn config(msg: String) -> Error {
    Error::Config(msg)
}

/// All elements of `π^a 𝔬 / π^b 𝔬`.
fn window(field: &FieldSpec, a: i32, b: i32) -> Result<Vec<TruncatedElement>> {
    let size = field.q_pow(b - a)?;
    (0..size).map(|c| field.element(a, b, c)).collect()
}

fn psi_of_product(field: &FieldSpec, psi: &AdditiveCharacter, factors: &[&TruncatedElement]) -> Result<RootOfUnity> {
    let mut acc = field.one();
    for f in factors {
        acc = field.mul(&acc, f)?;
    }
    psi.eval(&acc)
}

/// Fourier lemma on `S(π^r L / 2π^s L)`, `L = 𝔬^n`: every indicator has a
/// transform supported in `π^{-s}L` and invariant under `2π^{-r}L`, and the
/// transform of the zero coset is a nonzero constant on `π^{-s}L`.
///
/// Transforms are evaluated pointwise on `π^{-s-1}L`, integrating over the
/// subcosets of each indicator one level finer, and invariance is probed by
/// single-coordinate shifts by additive generators of `π^{e-r}𝔬 / π^{e-r+1}𝔬`.
pub fn fourier_lemma(field: &FieldSpec, n: usize, r: i32, s: i32) -> Result<OracleOutcome> {
    let e = field.e();
    let q = field.q();
    if r > e + s {
        return Err(config(format!("Fourier lemma needs r <= e + s, got r={r}, s={s}, e={e}")));
    }
    if n == 0 {
        return Err(config("rank must be positive".into()));
    }
    let name = format!("fourier[{} n={n} r={r} s={s}]", field.label());
    let psi = AdditiveCharacter::standard(field);
    let two = field.two();

    // y ranges over π^r 𝔬 / π^{e+s+1} 𝔬; the indicator of v collects the q lifts
    let y_width = e + s + 1 - r;
    let v_size = field.q_pow(y_width - 1)?;
    // u ranges over π^{-s-1} 𝔬 / π^{e-r+1} 𝔬; base points have top digit 0
    let u_width = e - r + s + 2;
    let base_size = field.q_pow(u_width - 1)?;
    let ys = window(field, r, e + s + 1)?;
    let us = window(field, -s - 1, e - r + 1)?;
    let table: Vec<Vec<RootOfUnity>> = us
        .par_iter()
        .map(|u| ys.iter().map(|y| psi_of_product(field, &psi, &[&two, u, y])).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let total = (v_size as usize).pow(n as u32);
    let base_points = (base_size as usize).pow(n as u32);
    let digits = |mut idx: usize, radix: u64| -> Vec<u64> {
        let mut out = vec![0u64; n];
        for j in (0..n).rev() {
            out[j] = idx as u64 % radix;
            idx /= radix as usize;
        }
        out
    };
    let shifts = shift_digits(field);
    let subs: Vec<Vec<u64>> = (0..(q as usize).pow(n as u32)).map(|z| digits(z, q)).collect();
    let value = |v: &[u64], u: &[u64]| -> ZetaSum {
        let mut acc = ZetaSum::zero();
        let one = ZetaSum::from_int(1);
        for z in &subs {
            let mut root = RootOfUnity::ONE;
            for j in 0..n {
                let y = v[j] + v_size * z[j];
                root = root * table[u[j] as usize][y as usize];
            }
            acc.add_rotated(&one, root);
        }
        acc
    };

    let results: Vec<(u64, u64, Option<String>)> = (0..total)
        .into_par_iter()
        .map(|vi| {
            let v = digits(vi, v_size);
            let mut checked = 0u64;
            let mut nonzero = 0u64;
            let mut zero_value: Option<ZetaSum> = None;
            for ui in 0..base_points {
                let u = digits(ui, base_size);
                let f = value(&v, &u);
                checked += 1;
                let inside = u.iter().all(|c| c % q == 0);
                if !inside {
                    if !f.vanishes() {
                        return (checked, nonzero, Some(format!("indicator {v:?} is nonzero at u={u:?} outside π^(-s)L")));
                    }
                    continue;
                }
                if !f.vanishes() {
                    nonzero += 1;
                }
                if vi == 0 {
                    match &zero_value {
                        None if f.vanishes() => return (checked, nonzero, Some("zero-coset transform vanishes at 0".into())),
                        None => zero_value = Some(f.clone()),
                        Some(z) if !z.same_value(&f) => {
                            return (checked, nonzero, Some(format!("zero-coset transform is not constant at u={u:?}")))
                        }
                        Some(_) => {}
                    }
                }
                for j in 0..n {
                    for &c in &shifts {
                        let mut w = u.clone();
                        w[j] += base_size * c;
                        checked += 1;
                        if !value(&v, &w).same_value(&f) {
                            return (checked, nonzero, Some(format!("indicator {v:?} is not invariant at u={u:?}, shift {c} in coordinate {j}")));
                        }
                    }
                }
            }
            (checked, nonzero, None)
        })
        .collect();
    let enumerated = results.iter().map(|r| r.0).sum();
    let witnesses = results.iter().map(|r| r.1).sum();
    let failure = results.into_iter().find_map(|r| r.2);
    Ok(OracleOutcome::new(name, enumerated, witnesses, failure))
}

/// Digits generating the residue field additively.
fn shift_digits(field: &FieldSpec) -> Vec<u64> {
    if field.f() == 1 {
        vec![1]
    } else {
        (1..field.q()).collect()
    }
}

fn fourier_cost(field: &FieldSpec, n: usize, r: i32, s: i32) -> Option<u64> {
    let e = field.e();
    let v = field.q_pow(e + s - r).ok()?;
    let u = field.q_pow(e - r + s + 1).ok()?;
    let per = v.checked_mul(u)?.checked_mul(field.q())?;
    let probes = 1 + n as u64 * shift_digits(field).len() as u64;
    per.checked_pow(n as u32)?.checked_mul(probes)?.checked_mul(n as u64)
}

pub fn check_fourier_lemma(field: &FieldSpec, n: usize, r: i32, s: i32) -> bool {
    fourier_lemma(field, n, r, s).map(|o| o.ok).unwrap_or(false)
}

fn floor_half(m: i32) -> i32 {
    m.div_euclid(2)
}

/// `x ≡ ±y` modulo `π^modulus`, trivially true when `modulus <= 0`.
fn congruent_up_to_sign(field: &FieldSpec, x: &[TruncatedElement], y: &[TruncatedElement], modulus: i32) -> Result<bool> {
    if modulus <= 0 {
        return Ok(true);
    }
    for sign in [false, true] {
        let mut all = true;
        for (a, b) in x.iter().zip(y) {
            let b = if sign { field.neg(b) } else { *b };
            if !field.congruent_mod(a, &b, modulus)? {
                all = false;
                break;
            }
        }
        if all {
            return Ok(true);
        }
    }
    Ok(false)
}

fn congruent_all(field: &FieldSpec, x: &[TruncatedElement], y: &[TruncatedElement], modulus: i32) -> Result<bool> {
    if modulus <= 0 {
        return Ok(true);
    }
    for (a, b) in x.iter().zip(y) {
        if !field.congruent_mod(a, b, modulus)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Groups points by their character signature and tests a conclusion on
/// every pair inside a group. Returns `(pairs enumerated, nontrivial pairs
/// meeting the hypothesis, first counterexample)`.
fn pairs_by_signature<F>(
    field: &FieldSpec,
    points: &[Vec<TruncatedElement>],
    signatures: &[Vec<RootOfUnity>],
    conclusion: F,
) -> Result<(u64, u64, Option<String>)>
where
    F: Fn(&[TruncatedElement], &[TruncatedElement]) -> Result<bool> + Sync,
{
    let mut groups: HashMap<&[RootOfUnity], Vec<usize>> = HashMap::new();
    for (k, sig) in signatures.iter().enumerate() {
        groups.entry(sig.as_slice()).or_default().push(k);
    }
    let enumerated = (points.len() as u64).pow(2);
    let mut keys: Vec<&[RootOfUnity]> = groups.keys().copied().collect();
    keys.sort();
    let mut witnesses = 0u64;
    for key in keys {
        let members = &groups[key];
        let found: Vec<(u64, Option<String>)> = members
            .par_iter()
            .map(|&a| -> Result<(u64, Option<String>)> {
                let mut hits = 0;
                for &b in members {
                    let (x, y) = (&points[a], &points[b]);
                    if !congruent_up_to_sign(field, x, y, x[0].modulus())? {
                        hits += 1;
                    }
                    if !conclusion(x, y)? {
                        let show = |p: &[TruncatedElement]| p.iter().map(|t| t.code()).collect::<Vec<_>>();
                        return Ok((hits, Some(format!("counterexample x={:?} y={:?}", show(x), show(y)))));
                    }
                }
                Ok((hits, None))
            })
            .collect::<Result<_>>()?;
        witnesses += found.iter().map(|f| f.0).sum::<u64>();
        if let Some(bad) = found.into_iter().find_map(|f| f.1) {
            return Ok((enumerated, witnesses, Some(bad)));
        }
    }
    Ok((enumerated, witnesses, None))
}

/// Smallest window `N` on which both sides of the square lemma are decided.
pub fn square_window(field: &FieldSpec, m: i32) -> i32 {
    let e = field.e();
    (2 * e - m).max(e - floor_half(m)).max(1)
}

fn square_lemma_at(field: &FieldSpec, m: i32, n_win: i32, tighten: i32) -> Result<OracleOutcome> {
    let e = field.e();
    if n_win < square_window(field, m) {
        return Err(config(format!("window {n_win} is below {} for m={m}", square_window(field, m))));
    }
    let psi = AdditiveCharacter::standard(field);
    let modulus = e - floor_half(m) + tighten;
    let name = format!("square[{} m={m} N={n_win}]", field.label());
    let points: Vec<Vec<TruncatedElement>> = window(field, 0, n_win)?.into_iter().map(|r| vec![r]).collect();
    // ψ(t r²) only sees t modulo π^{2e} since r² is integral
    let ts = if m < 2 * e { window(field, m, 2 * e)? } else { Vec::new() };
    let signatures: Vec<Vec<RootOfUnity>> = points
        .par_iter()
        .map(|p| ts.iter().map(|t| psi_of_product(field, &psi, &[t, &p[0], &p[0]])).collect())
        .collect::<Result<_>>()?;
    let (enumerated, witnesses, failure) =
        pairs_by_signature(field, &points, &signatures, |x, y| congruent_up_to_sign(field, x, y, modulus))?;
    Ok(OracleOutcome::new(name, enumerated, witnesses, failure))
}

/// Exhaustive square lemma over `r, s ∈ 𝔬/π^N`: if `ψ(t r²) = ψ(t s²)` for
/// all `t ∈ π^m 𝔬`, then `r ≡ ±s` modulo `2π^{-⌊m/2⌋}𝔬`.
pub fn square_lemma(field: &FieldSpec, m: i32, n_win: i32) -> Result<OracleOutcome> {
    square_lemma_at(field, m, n_win, 0)
}

pub fn check_square_lemma(field: &FieldSpec, m: i32, n_win: i32) -> bool {
    square_lemma(field, m, n_win).map(|o| o.ok).unwrap_or(false)
}

/// Smallest window on which the symmetric-character corollary is decided
/// and can have pairs that differ beyond its conclusion.
pub fn sym_window(field: &FieldSpec, m: i32) -> i32 {
    let e = field.e();
    (2 * e - m).max(e + 2)
}

fn sym_characters_at(field: &FieldSpec, n: usize, m: i32, n_win: i32, tighten: i32) -> Result<OracleOutcome> {
    let e = field.e();
    if m > 1 {
        return Err(config(format!("symmetric-character corollary needs m <= 1, got {m}")));
    }
    if n == 0 {
        return Err(config("rank must be positive".into()));
    }
    if n_win < sym_window(field, m) {
        return Err(config(format!("window {n_win} is below {} for m={m}", sym_window(field, m))));
    }
    let psi = AdditiveCharacter::standard(field);
    let two = field.two();
    let name = format!("sym[{} n={n} m={m} N={n_win}]", field.label());
    let coords = window(field, 0, n_win)?;
    let size = coords.len();
    let total = size.checked_pow(n as u32).filter(|&t| t <= 1 << 16).ok_or_else(|| {
        Error::BoundExceeded(format!("{size}^{n} points"))
    })?;
    let points: Vec<Vec<TruncatedElement>> = (0..total)
        .map(|mut idx| {
            let mut p = vec![coords[0]; n];
            for j in (0..n).rev() {
                p[j] = coords[idx % size];
                idx /= size;
            }
            p
        })
        .collect();
    // the spanning family t·E_jj and t·(E_jk + E_kj) of Sym_n(π^m 𝔬)
    let ts = if m < 2 * e { window(field, m, 2 * e)? } else { Vec::new() };
    let signatures: Vec<Vec<RootOfUnity>> = points
        .par_iter()
        .map(|x| {
            let mut sig = Vec::new();
            for j in 0..n {
                for t in &ts {
                    sig.push(psi_of_product(field, &psi, &[t, &x[j], &x[j]])?);
                }
                for k in j + 1..n {
                    for t in &ts {
                        sig.push(psi_of_product(field, &psi, &[&two, t, &x[j], &x[k]])?);
                    }
                }
            }
            Ok(sig)
        })
        .collect::<Result<_>>()?;
    let (enumerated, witnesses, failure) = pairs_by_signature(field, &points, &signatures, |x, y| {
        let part1 = congruent_all(field, x, y, e + tighten)?;
        let part2 = m > -1 || congruent_up_to_sign(field, x, y, e + 1 + tighten)?;
        Ok(part1 && part2)
    })?;
    Ok(OracleOutcome::new(name, enumerated, witnesses, failure))
}

/// Exhaustive corollary over `x, y ∈ (𝔬/π^N)^n`: equal characters
/// `a ↦ ψ(xᵀax)` on `Sym_n(π^m 𝔬)` force `x ≡ y mod 2𝔬^n` (`m ≤ 1`) and
/// `x ≡ ±y mod 2ϖ𝔬^n` (`m ≤ −1`).
pub fn sym_characters(field: &FieldSpec, n: usize, m: i32, n_win: i32) -> Result<OracleOutcome> {
    sym_characters_at(field, n, m, n_win, 0)
}

pub fn check_sym_characters(field: &FieldSpec, n: usize, m: i32, n_win: i32) -> bool {
    sym_characters(field, n, m, n_win).map(|o| o.ok).unwrap_or(false)
}

/// `ψ(tx) = 1` for all `t ∈ 𝔬` exactly when `x ∈ 4𝔬`, exhaustively at
/// depth `V`.
pub fn conductor(field: &FieldSpec, depth: i32) -> Result<OracleOutcome> {
    let w = depth + 2 * field.e();
    let coarse = field.q_pow(w)?;
    let fine = field.q_pow(depth)?;
    let ok = verify_conductor(&AdditiveCharacter::standard(field), depth);
    let failure = (!ok).then(|| "conductor is not 2e".to_string());
    let name = format!("conductor[{} V={depth}]", field.label());
    Ok(OracleOutcome::new(name, coarse * coarse + fine, coarse - 1, failure))
}

/// Default window for both corollary checks: `2e + |m| + 2`.
pub fn default_window(field: &FieldSpec, m: i32) -> i32 {
    2 * field.e() + m.abs() + 2
}

/// Every oracle at the standard parameters for one field. Fourier cases whose
/// precondition fails, or whose exhaustive domain is beyond desk scale, are
/// left out; corollary windows fall back to the smallest decidable one when
/// the default window has too many points.
pub fn run_all(field: &FieldSpec) -> Result<Vec<OracleOutcome>> {
    let mut out = Vec::new();
    let e = field.e();
    for n in 1..=2 {
        for (r, s) in [(0, 0), (-1, 1), (0, 1)] {
            if r <= e + s && fourier_cost(field, n, r, s).is_some_and(|c| c <= FOURIER_BUDGET) {
                out.push(fourier_lemma(field, n, r, s)?);
            }
        }
    }
    let within = |n: usize, w: i32| field.q_pow(w).ok().and_then(|s| s.checked_pow(n as u32)).is_some_and(|t| t <= POINT_BUDGET);
    for m in [-2, -1, 0] {
        let w = default_window(field, m);
        let w = if within(1, w) { w } else { square_window(field, m) };
        out.push(square_lemma(field, m, w)?);
    }
    for m in [1, -1] {
        let w = default_window(field, m);
        let w = if within(2, w) { w } else { sym_window(field, m) };
        out.push(sym_characters(field, 2, m, w)?);
    }
    out.push(conductor(field, CONDUCTOR_DEPTH)?);
    Ok(out)
}

/// The conductor oracle on every supported field.
pub fn conductor_all() -> Result<Vec<OracleOutcome>> {
    SUPPORTED_FIELDS.iter().map(|s| conductor(&FieldSpec::parse(s)?, CONDUCTOR_DEPTH)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: u64) -> FieldSpec {
        FieldSpec::padic(p).unwrap()
    }

    #[test]
    fn fourier_examples() {
        assert!(check_fourier_lemma(&q(2), 1, 0, 0));
        let o = fourier_lemma(&q(3), 1, -1, 1).unwrap();
        assert!(o.ok, "{}", o.detail);
        assert!(check_fourier_lemma(&q(2), 2, 0, 1));
        assert!(fourier_lemma(&q(3), 1, 1, 0).is_err());
    }

    #[test]
    fn square_examples() {
        let o = square_lemma(&q(3), -2, 3).unwrap();
        assert!(o.ok && o.witnesses > 0, "{o:?}");
        assert!(check_square_lemma(&q(2), 0, 4));
        assert!(check_square_lemma(&q(3), 0, 4));
        for m in [-2, -1, 0] {
            assert!(check_square_lemma(&q(2), m, default_window(&q(2), m)), "m={m}");
        }
    }

    #[test]
    fn square_lemma_is_sharp() {
        for (p, m) in [(2, -2), (2, -1), (2, 0), (3, -2), (3, -1)] {
            let o = square_lemma_at(&q(p), m, default_window(&q(p), m), 1).unwrap();
            assert!(!o.ok && o.detail.starts_with("counterexample"), "p={p} m={m}: {o:?}");
        }
    }

    #[test]
    fn r1_s8_example() {
        let f = q(3);
        let (r, s) = (f.element(0, 3, 1).unwrap(), f.element(0, 3, 8).unwrap());
        let psi = AdditiveCharacter::standard(&f);
        for t in window(&f, -2, 0).unwrap() {
            assert_eq!(psi_of_product(&f, &psi, &[&t, &r, &r]).unwrap(), psi_of_product(&f, &psi, &[&t, &s, &s]).unwrap());
        }
        assert!(f.congruent_mod(&r, &f.neg(&s), 1).unwrap());
    }

    #[test]
    fn sym_examples() {
        assert!(check_sym_characters(&q(2), 2, 1, 4));
        assert!(check_sym_characters(&q(2), 2, -1, 4));
        assert!(check_sym_characters(&q(3), 2, -1, default_window(&q(3), -1)));
        assert!(!check_sym_characters(&q(2), 2, 2, 4));
        let sharp = sym_characters_at(&q(2), 2, -1, 4, 1).unwrap();
        assert!(!sharp.ok);
        let sharp = sym_characters_at(&q(2), 2, 1, 4, 1).unwrap();
        assert!(!sharp.ok);
    }

    #[test]
    fn conductors() {
        for o in conductor_all().unwrap() {
            assert!(o.ok, "{o:?}");
        }
    }

    #[test]
    fn run_all_small_fields() {
        for p in [2, 3] {
            for o in run_all(&q(p)).unwrap() {
                assert!(o.ok, "{o:?}");
            }
        }
    }
}
