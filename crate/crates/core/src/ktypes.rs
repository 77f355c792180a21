//! Truncated `K̃_i` actions on the filtration stages `S_{i,m}`, `S'_{i,m}`:
//! invariance of the chain, the parity splitting of `S_{i,0}`, and
//! irreducibility by exact commutant dimension.

use std::collections::HashSet;
use std::time::Instant;

use num_integer::Integer;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::localfield::FieldSpec;
use crate::scalars::{euler_phi, Cyclotomic};
use crate::schrodinger::{embed, op_generator, restrict, QuotientSpace, SchwartzVector, WeilOperator};
use crate::symplectic::{iwahori_generators, ki_group_generators, SymplecticMatrix};

/// Largest `S_{i,0}` on which irreducibility is decided.
pub const MAX_IRREDUCIBLE_DIM: usize = 64;
/// Ambient spaces up to this size get an explicit vector-level cross-check.
pub const EXPLICIT_LIMIT: usize = 128;
const EXPLICIT_SAMPLE: usize = 48;

/// `2e + 2m + 2`.
pub fn default_depth(field: &FieldSpec, m: i32) -> i32 {
    2 * field.e() + 2 * m.max(0) + 2
}

/// Rows of a square matrix over a cyclotomic field.
pub type CycloMatrix = Vec<Vec<Cyclotomic>>;

#[derive(Debug, Clone)]
pub struct GeneratorBundle {
    pub field: FieldSpec,
    pub n: usize,
    pub i: usize,
    pub depth: i32,
    pub space: QuotientSpace,
    pub operators: Vec<WeilOperator>,
}

/// Operators of the truncated `K̃_i` generators on `S_{i,m}`.
pub fn build_bundle(field: &FieldSpec, n: usize, i: usize, m: i32, depth: i32) -> Result<GeneratorBundle> {
    let space = QuotientSpace::s_im(field, n, i, m)?;
    let gens = ki_group_generators(field, n, i, depth)?;
    let operators = operators_on(&gens, &space)?;
    Ok(GeneratorBundle { field: field.clone(), n, i, depth, space, operators })
}

pub fn operators_on(gens: &[SymplecticMatrix], space: &QuotientSpace) -> Result<Vec<WeilOperator>> {
    gens.par_iter().map(|g| op_generator(g, space)).collect()
}

/// `S_{i,0} ⊂ S'_{i,1} ⊂ S_{i,1} ⊂ ... ⊂ S_{i,M}`, with repeated stages dropped.
pub fn filtration_chain(field: &FieldSpec, n: usize, i: usize, levels: i32) -> Result<Vec<(String, QuotientSpace)>> {
    let mut out: Vec<(String, QuotientSpace)> = vec![(format!("S[{i},0]"), QuotientSpace::s_im(field, n, i, 0)?)];
    for m in 1..=levels {
        for (name, s) in [
            (format!("S'[{i},{m}]"), QuotientSpace::s_prime_im(field, n, i, m)?),
            (format!("S[{i},{m}]"), QuotientSpace::s_im(field, n, i, m)?),
        ] {
            if out.last().map(|(_, t)| t != &s).unwrap_or(true) {
                out.push((name, s));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct InvarianceVerdict {
    pub level: String,
    pub generator: String,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub field: String,
    pub n: usize,
    pub i: usize,
    pub levels: i32,
    pub depth: i32,
    pub ambient: String,
    pub stages: Vec<String>,
    pub generators: usize,
    pub explicit_checked: usize,
    pub verdicts: Vec<InvarianceVerdict>,
    pub all_ok: bool,
}

/// True when the operator maps the embedded `stage` into itself, decided by
/// applying it to every basis vector of the stage.
pub fn explicit_preserves(op: &WeilOperator, stage: &QuotientSpace) -> Result<bool> {
    let cols = embed(stage, op.domain())?;
    for w in op.apply_all(&cols)? {
        if !op.domain().stage_contains(stage, &w)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Verdicts of one generator on every stage of a chain inside `ambient`.
/// A generator that does not act on the ambient space fails every stage.
pub fn check_generator(
    g: &SymplecticMatrix,
    ambient: &QuotientSpace,
    stages: &[(String, QuotientSpace)],
    explicit: bool,
) -> Vec<InvarianceVerdict> {
    let label = g.label.to_string();
    let verdict = |level: &str, ok: bool| InvarianceVerdict { level: level.to_string(), generator: label.clone(), ok };
    let op = match op_generator(g, ambient) {
        Ok(op) => op,
        Err(e) => return vec![verdict(&format!("ambient: {e}"), false)],
    };
    stages
        .iter()
        .map(|(name, st)| {
            let ok = match op.preserves(st) {
                Ok(fast) if explicit => explicit_preserves(&op, st).map(|x| x == fast && fast).unwrap_or(false),
                Ok(fast) => fast,
                Err(_) => false,
            };
            verdict(name, ok)
        })
        .collect()
}

/// Checks that every truncated `K̃_i` generator preserves each stage of the
/// chain through level `levels`, inside the ambient space `S_{i,levels}`.
pub fn invariance_report(field: &FieldSpec, n: usize, i: usize, levels: i32, depth: Option<i32>) -> Result<InvarianceReport> {
    if levels < 0 {
        return Err(Error::Config(format!("level {levels} is negative")));
    }
    let depth = depth.unwrap_or_else(|| default_depth(field, levels));
    let stages = filtration_chain(field, n, i, levels)?;
    let ambient = stages.last().unwrap().1.clone();
    let gens = ki_group_generators(field, n, i, depth)?;
    let stride = if ambient.size() <= EXPLICIT_LIMIT { gens.len().div_ceil(EXPLICIT_SAMPLE).max(1) } else { 0 };
    let verdicts: Vec<InvarianceVerdict> = gens
        .par_iter()
        .enumerate()
        .flat_map_iter(|(k, g)| check_generator(g, &ambient, &stages, stride > 0 && k % stride == 0))
        .collect();
    let explicit_checked = if stride > 0 { gens.len().div_ceil(stride) } else { 0 };
    let all_ok = verdicts.iter().all(|v| v.ok);
    Ok(InvarianceReport {
        field: field.label().to_string(),
        n,
        i,
        levels,
        depth,
        ambient: ambient.to_string(),
        stages: stages.iter().map(|(s, _)| s.clone()).collect(),
        generators: gens.len(),
        explicit_checked,
        verdicts,
        all_ok,
    })
}

fn lift(x: &Cyclotomic, order: u64) -> Result<Vec<BigRational>> {
    Ok(x.lift(order)?.coeffs().to_vec())
}

fn is_diagonal(a: &CycloMatrix) -> bool {
    a.iter().enumerate().all(|(r, row)| row.iter().enumerate().all(|(c, x)| r == c || x.is_zero()))
}

/// Dimension over `Q(ζ)` of `{X : XA = AX for all A in ops}` for `d × d`
/// matrices, solved over `Q` in the power-basis coordinates of `X`.
pub fn commutant_dim(ops: &[CycloMatrix], d: usize) -> Result<usize> {
    if d == 0 {
        return Ok(0);
    }
    if ops.iter().any(|a| a.len() != d || a.iter().any(|r| r.len() != d)) {
        return Err(Error::SpaceMismatch(format!("operators are not all {d}x{d}")));
    }
    let order = ops.iter().flatten().flatten().fold(1u64, |acc, x| acc.lcm(&x.order()));
    let phi = euler_phi(order) as usize;
    let powers: Vec<Vec<BigRational>> =
        (0..2 * phi).map(|k| Cyclotomic::zeta_pow(order, k as u64).coeffs().to_vec()).collect();

    let mut allowed = vec![vec![true; d]; d];
    let mut general = Vec::new();
    for a in ops {
        if is_diagonal(a) {
            for (r, row) in allowed.iter_mut().enumerate() {
                for (c, ok) in row.iter_mut().enumerate() {
                    *ok &= a[r][r] == a[c][c];
                }
            }
        } else {
            general.push(a);
        }
    }
    let vars: Vec<(usize, usize, usize)> = (0..d)
        .flat_map(|a| (0..d).map(move |b| (a, b)))
        .filter(|&(a, b)| allowed[a][b])
        .flat_map(|(a, b)| (0..phi).map(move |l| (a, b, l)))
        .collect();
    let mut basis: Option<Vec<Vec<BigRational>>> = None;
    let mut dim = vars.len();
    let rows_len = d * d * phi;

    for a in general {
        if dim == phi {
            break;
        }
        let entries: Vec<Vec<Vec<BigRational>>> =
            a.iter().map(|row| row.iter().map(|x| lift(x, order)).collect::<Result<_>>()).collect::<Result<_>>()?;
        // ζ^l · A[r][c] in coordinates
        let rot = |l: usize, x: &[BigRational]| -> Vec<BigRational> {
            let mut out = vec![BigRational::zero(); phi];
            for (k, c) in x.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                for (o, p) in out.iter_mut().zip(&powers[k + l]) {
                    if !p.is_zero() {
                        *o += c * p;
                    }
                }
            }
            out
        };
        // constraint column of X = ζ^l E_ab: (XA − AX)[r][c] = δ_ra ζ^l A[b][c] − δ_cb ζ^l A[r][a]
        let column = |&(va, vb, l): &(usize, usize, usize)| -> Vec<(usize, BigRational)> {
            let mut col = Vec::new();
            for c in 0..d {
                for (s, x) in rot(l, &entries[vb][c]).into_iter().enumerate() {
                    if !x.is_zero() {
                        col.push(((va * d + c) * phi + s, x));
                    }
                }
            }
            for r in 0..d {
                for (s, x) in rot(l, &entries[r][va]).into_iter().enumerate() {
                    if !x.is_zero() {
                        col.push(((r * d + vb) * phi + s, -x));
                    }
                }
            }
            col
        };
        let cols: Vec<Vec<(usize, BigRational)>> = vars.par_iter().map(column).collect();
        let current: Vec<Vec<(usize, BigRational)>> = match &basis {
            None => cols.clone(),
            Some(b) => b
                .par_iter()
                .map(|kv| {
                    let mut acc = vec![BigRational::zero(); rows_len];
                    for (v, coef) in kv.iter().enumerate() {
                        if coef.is_zero() {
                            continue;
                        }
                        for (row, x) in &cols[v] {
                            acc[*row] += coef * x;
                        }
                    }
                    acc.into_iter().enumerate().filter(|(_, x)| !x.is_zero()).collect()
                })
                .collect(),
        };
        let k = current.len();
        let mut rows = vec![vec![BigRational::zero(); k]; rows_len];
        for (c, col) in current.iter().enumerate() {
            for (r, x) in col {
                rows[*r][c] += x;
            }
        }
        rows.retain(|r| r.iter().any(|x| !x.is_zero()));
        let null = linalg::nullspace(rows, k);
        let next: Vec<Vec<BigRational>> = match &basis {
            None => null,
            Some(b) => null
                .iter()
                .map(|coefs| {
                    let mut acc = vec![BigRational::zero(); vars.len()];
                    for (c, kv) in coefs.iter().zip(b) {
                        if c.is_zero() {
                            continue;
                        }
                        for (o, x) in acc.iter_mut().zip(kv) {
                            if !x.is_zero() {
                                *o += c * x;
                            }
                        }
                    }
                    acc
                })
                .collect(),
        };
        dim = next.len();
        basis = Some(next);
    }
    if !dim.is_multiple_of(phi) {
        return Err(Error::PrecisionInsufficient(format!("commutant has Q-dimension {dim}, not a multiple of {phi}")));
    }
    Ok(dim / phi)
}

fn matmul(a: &CycloMatrix, b: &CycloMatrix, order: u64) -> CycloMatrix {
    let d = a.len();
    (0..d)
        .map(|r| {
            (0..d)
                .map(|c| {
                    (0..d).fold(Cyclotomic::zero(order), |acc, k| {
                        if a[r][k].is_zero() || b[k][c].is_zero() {
                            acc
                        } else {
                            acc + a[r][k].clone() * b[k][c].clone()
                        }
                    })
                })
                .collect()
        })
        .collect()
}

/// Dimension over `Q(ζ)` of the algebra generated by `ops`.
pub fn algebra_dim(ops: &[CycloMatrix], d: usize) -> Result<usize> {
    let order = ops.iter().flatten().flatten().fold(1u64, |acc, x| acc.lcm(&x.order()));
    let phi = euler_phi(order) as usize;
    let flat = |m: &CycloMatrix| -> Result<Vec<BigRational>> {
        let mut out = Vec::with_capacity(d * d * phi);
        for x in m.iter().flatten() {
            out.extend(lift(x, order)?);
        }
        Ok(out)
    };
    let ncols = d * d * phi;
    let mut echelon: linalg::QMatrix = Vec::new();
    let identity: CycloMatrix = (0..d)
        .map(|r| (0..d).map(|c| Cyclotomic::from_int(order, (r == c) as i64)).collect())
        .collect();
    let mut queue = vec![identity];
    while let Some(m) = queue.pop() {
        let mut trial = echelon.clone();
        for l in 0..phi {
            let z = Cyclotomic::zeta_pow(order, l as u64);
            let scaled: CycloMatrix = m.iter().map(|r| r.iter().map(|x| x.clone() * z.clone()).collect()).collect();
            trial.push(flat(&scaled)?);
        }
        linalg::rref(&mut trial, ncols);
        if trial.len() == echelon.len() {
            continue;
        }
        echelon = trial;
        for a in ops {
            queue.push(matmul(a, &m, order));
        }
    }
    Ok(echelon.len() / phi.max(1))
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct BlockResult {
    pub block: String,
    pub dim: usize,
    pub commutant: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct KTypeReport {
    pub field: String,
    pub n: usize,
    pub i: usize,
    pub m: i32,
    pub depth: i32,
    pub dims: (usize, usize, usize),
    pub generators: usize,
    pub distinct_operators: usize,
    pub parity_split: bool,
    pub blocks: Vec<BlockResult>,
    pub irreducible: bool,
    pub stabilized: Option<bool>,
    pub timing_ms: u128,
}

/// Commutant dimensions of `ops` on the parity blocks of `space`.
/// `None` when some operator does not preserve the parity splitting.
pub fn block_commutants(ops: &[WeilOperator], space: &QuotientSpace) -> Result<Option<Vec<BlockResult>>> {
    let (plus, minus) = space.basis_pm();
    let mut out = Vec::new();
    for (name, basis) in [("+", plus), ("-", minus)] {
        if basis.is_empty() {
            continue;
        }
        let restricted: Vec<_> = ops.par_iter().map(|op| restrict(op, &basis)).collect::<Result<_>>()?;
        if restricted.iter().any(|r| !r.invariant) {
            return Ok(None);
        }
        let mats: Vec<CycloMatrix> = restricted.into_iter().map(|r| r.matrix).collect();
        out.push(BlockResult { block: name.into(), dim: basis.len(), commutant: commutant_dim(&mats, basis.len())? });
    }
    Ok(Some(out))
}

fn dedupe_ops(ops: Vec<WeilOperator>) -> Result<Vec<WeilOperator>> {
    let mats: Vec<Vec<SchwartzVector>> = ops.par_iter().map(|op| op.matrix()).collect::<Result<_>>()?;
    let order = mats.iter().flatten().flatten().fold(1u64, |acc, z| acc.lcm(&z.order()));
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (op, m) in ops.into_iter().zip(mats) {
        let key: Vec<Vec<i64>> = m.iter().flatten().map(|z| z.reduced(order)).collect::<Result<_>>()?;
        if seen.insert(key) {
            out.push(op);
        }
    }
    Ok(out)
}

fn report_on(
    field: &FieldSpec,
    n: usize,
    i: usize,
    m: i32,
    depth: i32,
    space: &QuotientSpace,
    gens: &[SymplecticMatrix],
    start: Instant,
) -> Result<KTypeReport> {
    let ops = dedupe_ops(operators_on(gens, space)?)?;
    let distinct = ops.len();
    let (even, odd) = space.dims();
    let blocks = block_commutants(&ops, space)?;
    let parity_split = blocks.is_some();
    let blocks = blocks.unwrap_or_default();
    let irreducible = parity_split && blocks.iter().all(|b| b.commutant == 1);
    Ok(KTypeReport {
        field: field.label().to_string(),
        n,
        i,
        m,
        depth,
        dims: (space.size(), even, odd),
        generators: gens.len(),
        distinct_operators: distinct,
        parity_split,
        blocks,
        irreducible,
        stabilized: None,
        timing_ms: start.elapsed().as_millis(),
    })
}

fn check_bound(space: &QuotientSpace) -> Result<()> {
    if space.size() > MAX_IRREDUCIBLE_DIM {
        return Err(Error::BoundExceeded(format!("{space} has {} cosets", space.size())));
    }
    Ok(())
}

/// Commutant dimensions of the truncated `K̃_i` on `S_{i,0}^±`.
pub fn irreducibility_report(field: &FieldSpec, n: usize, i: usize, depth: Option<i32>) -> Result<KTypeReport> {
    let start = Instant::now();
    let depth = depth.unwrap_or_else(|| default_depth(field, 0));
    let space = QuotientSpace::s_im(field, n, i, 0)?;
    check_bound(&space)?;
    let gens = ki_group_generators(field, n, i, depth)?;
    report_on(field, n, i, 0, depth, &space, &gens, start)
}

/// True when the parity-block commutant dimensions agree at depths `D` and `D + 1`.
pub fn stabilization_check(field: &FieldSpec, n: usize, i: usize, depth: i32) -> Result<bool> {
    let a = irreducibility_report(field, n, i, Some(depth))?;
    let b = irreducibility_report(field, n, i, Some(depth + 1))?;
    Ok(a.parity_split && b.parity_split && a.blocks == b.blocks)
}

/// Irreducibility report with the stabilization flag filled in.
pub fn full_report(field: &FieldSpec, n: usize, i: usize, depth: Option<i32>) -> Result<KTypeReport> {
    let start = Instant::now();
    let depth = depth.unwrap_or_else(|| default_depth(field, 0));
    let mut r = irreducibility_report(field, n, i, Some(depth))?;
    let next = irreducibility_report(field, n, i, Some(depth + 1))?;
    r.stabilized = Some(r.parity_split && next.parity_split && r.blocks == next.blocks);
    r.timing_ms = start.elapsed().as_millis();
    Ok(r)
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub report: KTypeReport,
    /// Lower stages of the chain, each with whether it is invariant.
    pub invariant_stages: Vec<(String, bool)>,
    pub reducible: bool,
}

/// On `S_{i,m}` with `m ≥ 1`: the lower stages are invariant and some parity
/// block has commutant dimension at least 2.
pub fn reducibility_witness(field: &FieldSpec, n: usize, i: usize, m: i32, depth: Option<i32>) -> Result<WitnessReport> {
    let start = Instant::now();
    if m < 0 {
        return Err(Error::Config(format!("level {m} is negative")));
    }
    let depth = depth.unwrap_or_else(|| default_depth(field, m));
    let stages = filtration_chain(field, n, i, m)?;
    let space = stages.last().unwrap().1.clone();
    check_bound(&space)?;
    let gens = ki_group_generators(field, n, i, depth)?;
    let report = report_on(field, n, i, m, depth, &space, &gens, start)?;
    let ops = dedupe_ops(operators_on(&gens, &space)?)?;
    let mut invariant_stages = Vec::new();
    for (name, st) in &stages[..stages.len() - 1] {
        let sub = embed(st, &space)?;
        let mut ok = true;
        for op in &ops {
            ok &= restrict(op, &sub)?.invariant;
        }
        invariant_stages.push((name.clone(), ok));
    }
    let reducible = report.blocks.iter().any(|b| b.commutant >= 2)
        && !invariant_stages.is_empty()
        && invariant_stages.iter().all(|(_, ok)| *ok);
    Ok(WitnessReport { report, invariant_stages, reducible })
}

/// Commutant dimension of the truncated Iwahori subgroup on `S_{0,0}`.
pub fn iwahori_report(field: &FieldSpec, n: usize, depth: Option<i32>) -> Result<KTypeReport> {
    let start = Instant::now();
    let depth = depth.unwrap_or_else(|| default_depth(field, 0));
    let space = QuotientSpace::s_im(field, n, 0, 0)?;
    check_bound(&space)?;
    let gens = iwahori_generators(field, n, depth)?;
    report_on(field, n, 0, 0, depth, &space, &gens, start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rootsystem::Root;
    use crate::symplectic::chev_x;

    fn q(p: u64) -> FieldSpec {
        FieldSpec::padic(p).unwrap()
    }

    fn cyc(order: u64, rows: &[&[(i64, u64)]]) -> CycloMatrix {
        rows.iter()
            .map(|r| {
                r.iter()
                    .map(|&(c, k)| Cyclotomic::zeta_pow(order, k) * Cyclotomic::from_int(order, c))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn commutant_examples() {
        let id = cyc(1, &[&[(1, 0), (0, 0), (0, 0)], &[(0, 0), (1, 0), (0, 0)], &[(0, 0), (0, 0), (1, 0)]]);
        assert_eq!(commutant_dim(std::slice::from_ref(&id), 3).unwrap(), 9);
        assert_eq!(commutant_dim(&[], 2).unwrap(), 4);
        let h = cyc(4, &[&[(1, 0), (1, 0)], &[(1, 0), (-1, 0)]]);
        let s = cyc(4, &[&[(1, 0), (0, 0)], &[(0, 0), (1, 1)]]);
        assert_eq!(commutant_dim(&[h.clone(), s.clone()], 2).unwrap(), 1);
        assert_eq!(commutant_dim(std::slice::from_ref(&h), 2).unwrap(), 2);
        assert_eq!(commutant_dim(std::slice::from_ref(&s), 2).unwrap(), 2);
        assert_eq!(algebra_dim(&[h.clone(), s.clone()], 2).unwrap(), 4);
        assert_eq!(algebra_dim(&[h], 2).unwrap(), 2);
    }

    #[test]
    fn bundle_examples() {
        let b = build_bundle(&q(2), 1, 0, 0, 4).unwrap();
        assert_eq!(b.operators.len(), 3 * 16 + 8 + 1);
        assert!(b.operators.iter().all(|op| op.is_endomorphism()));
        assert!(build_bundle(&q(2), 1, 1, 0, 4).is_ok());
    }

    #[test]
    fn invariance_examples() {
        let r = invariance_report(&q(2), 1, 0, 1, None).unwrap();
        assert!(r.all_ok && r.explicit_checked > 0);
        let r = invariance_report(&q(3), 1, 1, 1, None).unwrap();
        assert!(r.all_ok, "{:?}", r.verdicts.iter().filter(|v| !v.ok).collect::<Vec<_>>());
        let f = q(3);
        let a = Root::long(1, 0, 1).unwrap();
        let bad = chev_x(&f, &a, &f.pi_pow(-2));
        let s = QuotientSpace::s_im(&f, 1, 0, 0).unwrap();
        let v = check_generator(&bad, &s, &[("S".into(), s.clone())], true);
        assert!(v.iter().all(|x| !x.ok));
    }

    #[test]
    fn irreducibility_examples() {
        let r = irreducibility_report(&q(2), 1, 1, None).unwrap();
        assert_eq!((r.dims.1, r.dims.2), (3, 1));
        assert!(r.irreducible && r.blocks.iter().all(|b| b.commutant == 1));
        let r = irreducibility_report(&q(3), 1, 0, None).unwrap();
        assert_eq!(r.dims, (1, 1, 0));
        assert!(r.irreducible);
        let r = irreducibility_report(&q(2), 2, 1, None).unwrap();
        assert_eq!((r.dims.1, r.dims.2), (6, 2));
        assert!(r.irreducible, "{:?}", r.blocks);
    }

    #[test]
    fn stabilization_and_controls() {
        assert!(stabilization_check(&q(2), 1, 0, 4).unwrap());
        assert!(stabilization_check(&q(3), 1, 1, 2).unwrap());
        let r = irreducibility_report(&q(2), 1, 1, Some(0)).unwrap();
        assert!(!r.irreducible);
        assert!(!stabilization_check(&q(2), 1, 1, 0).unwrap());
    }

    #[test]
    fn witness_examples() {
        let w = reducibility_witness(&q(3), 1, 0, 1, None).unwrap();
        assert_eq!(w.report.dims.0, 9);
        assert!(w.reducible, "{:?}", w.report.blocks);
        let w = reducibility_witness(&q(2), 1, 0, 1, None).unwrap();
        assert!(w.invariant_stages.iter().all(|(_, ok)| *ok));
        let w = reducibility_witness(&q(3), 1, 0, 0, None).unwrap();
        assert!(!w.reducible && w.report.blocks.iter().all(|b| b.commutant == 1));
    }

    #[test]
    fn iwahori_examples() {
        for (p, n) in [(2, 1), (2, 2), (3, 1)] {
            let r = iwahori_report(&q(p), n, None).unwrap();
            assert!(r.irreducible, "{p} {n}: {:?}", r.blocks);
        }
    }
}
