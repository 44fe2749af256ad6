//! Witness matrices realizing prescribed groups: bipartite constructions,
//! idempotents with a prescribed maximal subgroup, block assembly and finite
//! approximants of idempotents.

mod bipartite;

use std::collections::BTreeMap;

use num_traits::One;

pub use bipartite::{construct_from_bipartite, construct_from_paired_group};

use crate::error::{Error, Result};
use crate::matrix::{idempotent_power, is_idempotent, TropMatrix};
use crate::permgroups::iso::DEFAULT_ISO_CAP;
use crate::permgroups::{
    coloured_automorphisms, groups_isomorphic, is_two_closed, pair_orbit_colouring,
    ColouredDigraph, Perm, PermGroup,
};
use crate::semiring::{free_basis_check, rat, Rational, TropScalar, Value};
use crate::spaces::is_full_rank;
use crate::stabilizer::maximal_subgroup;
use crate::Limits;

/// Hands out infinitesimal tags that have not been used yet.
#[derive(Clone, Debug)]
pub struct TagPool {
    next: u32,
}

impl Default for TagPool {
    fn default() -> Self {
        TagPool { next: 1 }
    }
}

impl TagPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// A pool whose tags avoid every tag occurring in `used`.
    pub fn avoiding<'a>(used: impl IntoIterator<Item = &'a Value>) -> Self {
        let max = used
            .into_iter()
            .flat_map(|v| v.infinitesimals().iter().map(|(t, _)| *t))
            .max()
            .unwrap_or(0);
        TagPool { next: max + 1 }
    }

    pub fn fresh(&mut self) -> u32 {
        let t = self.next;
        self.next += 1;
        t
    }

    /// `standard + e_k` for a fresh tag `k`.
    pub fn value(&mut self, standard: Rational) -> Value {
        Value::from_rational(standard).with_tag(self.fresh(), Rational::one())
    }
}

/// The `t`-th of `count` evenly spaced points strictly inside `(lo, hi)`,
/// `t` counted from 1.
pub(crate) fn subdivide(lo: &Rational, hi: &Rational, t: usize, count: usize) -> Rational {
    lo + (hi - lo) * rat(t as i64, count as i64 + 1)
}

/// Orbit label of every point, numbered by smallest member.
pub(crate) fn orbit_labels(n: usize, generators: &[Perm]) -> Vec<usize> {
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = next;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for g in generators {
                let y = g.apply(x);
                if label[y] == usize::MAX {
                    label[y] = next;
                    stack.push(y);
                }
            }
        }
        next += 1;
    }
    label
}

/// Block-diagonal matrix with `h` copies of each block; everything off the
/// blocks is `fill`, which must be `-inf` or `0`.
pub fn assemble_blocks(blocks: &[(TropMatrix, usize)], fill: &TropScalar) -> Result<TropMatrix> {
    if *fill != TropScalar::NegInf && *fill != TropScalar::zero() {
        return Err(Error::InvalidFill);
    }
    let rows: usize = blocks.iter().map(|(b, h)| b.rows() * h).sum();
    let cols: usize = blocks.iter().map(|(b, h)| b.cols() * h).sum();
    let mut out = TropMatrix::filled(rows, cols, fill.clone());
    let (mut r0, mut c0) = (0, 0);
    for (block, h) in blocks {
        for _ in 0..*h {
            for i in 0..block.rows() {
                for j in 0..block.cols() {
                    out.set(r0 + i, c0 + j, block.get(i, j).clone());
                }
            }
            r0 += block.rows();
            c0 += block.cols();
        }
    }
    Ok(out)
}

/// Refines every pair colour by the orbits of its endpoints and renumbers
/// the result densely in sorted order.
fn refine_by_orbits(d: &ColouredDigraph, orbit: &[usize]) -> Vec<usize> {
    let n = d.n;
    let keys: Vec<(u32, usize, usize)> = (0..n * n)
        .map(|p| (d.colours[p], orbit[p / n], orbit[p % n]))
        .collect();
    let mut ids = BTreeMap::new();
    for k in &keys {
        ids.insert(*k, 0);
    }
    for (i, v) in ids.values_mut().enumerate() {
        *v = i;
    }
    keys.iter().map(|k| ids[k]).collect()
}

/// A full-rank idempotent whose maximal subgroup is `Aut(d) x R`.
///
/// Diagonal entries are 0; each off-diagonal colour gets its own value in
/// `(-1.1, -0.9)` with a fresh tag.
pub fn construct_idempotent(
    d: &ColouredDigraph,
    pool: &mut TagPool,
    limits: &Limits,
) -> Result<TropMatrix> {
    let n = d.n;
    if n == 0 {
        return Err(Error::DimensionMismatch("empty digraph".into()));
    }
    let aut = coloured_automorphisms(d, limits)?;
    if n == 1 {
        return Ok(TropMatrix::filled(1, 1, TropScalar::zero()));
    }
    if n == 2 && aut.order == 1 {
        return TropMatrix::from_rows(vec![
            vec![TropScalar::zero(), TropScalar::zero()],
            vec![TropScalar::NegInf, TropScalar::zero()],
        ]);
    }
    let orbit = orbit_labels(n, &aut.group.generators);
    let refined = refine_by_orbits(d, &orbit);
    let mut off: Vec<usize> = (0..n * n)
        .filter(|p| p / n != p % n)
        .map(|p| refined[p])
        .collect();
    off.sort_unstable();
    off.dedup();
    let (lo, hi) = (rat(-11, 10), rat(-9, 10));
    let values: BTreeMap<usize, Value> = off
        .iter()
        .enumerate()
        .map(|(t, &c)| (c, pool.value(subdivide(&lo, &hi, t + 1, off.len()))))
        .collect();
    let chosen: Vec<Value> = values.values().cloned().collect();
    if !free_basis_check(&chosen) {
        return Err(Error::DependentEntries);
    }
    let entries = (0..n * n)
        .map(|p| {
            if p / n == p % n {
                TropScalar::zero()
            } else {
                TropScalar::Fin(values[&refined[p]].clone())
            }
        })
        .collect();
    let e = TropMatrix::new(n, n, entries)?;
    if !is_idempotent(&e) || !is_full_rank(&e) {
        return Err(Error::ConstructionFailed("idempotent check failed".into()));
    }
    let desc = maximal_subgroup(&e, limits)?;
    let ok = match desc.factors.as_slice() {
        [f] if f.multiplicity == 1 => {
            same_group(&f.finite_part.combined(), f.order, &aut.group, aut.order)?
        }
        _ => false,
    };
    if !ok {
        return Err(Error::ConstructionFailed(
            "maximal subgroup does not match Aut(D)".into(),
        ));
    }
    Ok(e)
}

/// Idempotent realizing a 2-closed group given by generators.
pub fn construct_idempotent_from_group(
    g: &PermGroup,
    pool: &mut TagPool,
    limits: &Limits,
) -> Result<TropMatrix> {
    if !is_two_closed(g, limits)? {
        return Err(Error::NotTwoClosed);
    }
    construct_idempotent(&pair_orbit_colouring(g), pool, limits)
}

/// Isomorphism when both groups are small enough to tabulate, equal orders
/// otherwise.
pub(crate) fn same_group(
    a: &PermGroup,
    a_order: u128,
    b: &PermGroup,
    b_order: u128,
) -> Result<bool> {
    if a_order != b_order {
        return Ok(false);
    }
    if a_order > DEFAULT_ISO_CAP as u128 {
        return Ok(true);
    }
    groups_isomorphic(a, b)
}

/// Elements of Alt(4) in breadth-first order from the identity under the
/// generators `(1,2,3)` and `(1,2)(3,4)`, each new element being `x` followed
/// by a generator.
pub fn alt4_elements() -> Vec<Perm> {
    let gens = [Perm(vec![1, 2, 0, 3]), Perm(vec![1, 0, 3, 2])];
    let mut out = vec![Perm::identity(4)];
    let mut i = 0;
    while i < out.len() {
        for g in &gens {
            let y = out[i].then(g);
            if !out.contains(&y) {
                out.push(y);
            }
        }
        i += 1;
    }
    out
}

/// 4x12 matrix whose columns are `g · (a,b,c,d)` over Alt(4) in the order of
/// [`alt4_elements`], where `(g · V)_i = V_{g^-1(i)}`.
pub fn alt4_column_matrix(a: &Value, b: &Value, c: &Value, d: &Value) -> Result<TropMatrix> {
    let v = [a.clone(), b.clone(), c.clone(), d.clone()];
    if !free_basis_check(&v) {
        return Err(Error::DependentEntries);
    }
    let elements = alt4_elements();
    let mut out = TropMatrix::filled(4, elements.len(), TropScalar::NegInf);
    for (col, g) in elements.iter().enumerate() {
        let inv = g.inverse();
        for i in 0..4 {
            out.set(i, col, TropScalar::Fin(v[inv.apply(i)].clone()));
        }
    }
    Ok(out)
}

/// Replaces every `-inf` of a full-rank idempotent by `m·N`, with
/// `N = -(sum of |E_ij|) - 1`, and returns the idempotent power of the result.
pub fn finite_approximant(e: &TropMatrix, m: u64) -> Result<TropMatrix> {
    if !is_idempotent(e) {
        return Err(Error::NotIdempotent);
    }
    if !is_full_rank(e) {
        return Err(Error::NotFullRank);
    }
    if m == 0 {
        return Err(Error::HypothesisViolated(
            "approximant index must be positive".into(),
        ));
    }
    let total: Value = e.finite_values().map(Value::abs).sum();
    let big_n = -total - Value::from_int(1);
    let low = big_n.scale(&Rational::from_integer((m as i64).into()));
    let n = e.rows();
    let substituted = TropMatrix::new(
        n,
        n,
        e.entries()
            .iter()
            .map(|x| {
                if x.is_finite() {
                    x.clone()
                } else {
                    TropScalar::Fin(low.clone())
                }
            })
            .collect(),
    )?;
    let f = idempotent_power(&substituted)?;
    let row_max: Vec<TropScalar> = (0..n)
        .map(|i| e.row(i).iter().max().cloned().unwrap())
        .collect();
    let col_max: Vec<TropScalar> = (0..n)
        .map(|j| e.column(j).into_iter().max().unwrap())
        .collect();
    for i in 0..n {
        for j in 0..n {
            let expected = match e.get(i, j) {
                TropScalar::Fin(v) => v.clone(),
                TropScalar::NegInf => match (&row_max[i], &col_max[j]) {
                    (TropScalar::Fin(r), TropScalar::Fin(c)) => &(r + &low) + c,
                    _ => return Err(Error::Internal("idempotent with an empty line".into())),
                },
            };
            if *f.get(i, j) != TropScalar::Fin(expected) {
                return Err(Error::Internal(format!(
                    "approximant entry ({}, {}) off the closed form",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok(f)
}
