//! Matrices whose unit stabilizer has a prescribed finite part, built from a
//! coloured bipartite graph.

use std::collections::BTreeMap;

use super::{orbit_labels, same_group, subdivide, TagPool};
use crate::error::{Error, Result};
use crate::matrix::TropMatrix;
use crate::permgroups::{
    bigraph_automorphisms, is_irreducible, is_paired_two_closed, paired_orbit_colouring,
    ColouredBigraph, PairedGroup,
};
use crate::semiring::{free_basis_check, rat, Rational, TropScalar, Value};
use crate::spaces::is_full_rank;
use crate::stabilizer::group_description;
use crate::Limits;

/// Complete bigraph with dense colours; row `i` is `colours[i]`.
#[derive(Clone, Debug)]
struct Grid {
    colours: Vec<Vec<usize>>,
}

impl Grid {
    fn rows(&self) -> usize {
        self.colours.len()
    }

    fn cols(&self) -> usize {
        self.colours.first().map_or(0, Vec::len)
    }

    fn bigraph(&self) -> ColouredBigraph {
        ColouredBigraph {
            n: self.rows(),
            m: self.cols(),
            colours: self
                .colours
                .iter()
                .flatten()
                .map(|&c| Some(c as u32))
                .collect(),
        }
    }

    fn transpose(&self) -> Grid {
        Grid {
            colours: (0..self.cols())
                .map(|j| self.colours.iter().map(|r| r[j]).collect())
                .collect(),
        }
    }

    fn restrict(&self, rows: &[usize], cols: &[usize]) -> Grid {
        Grid {
            colours: rows
                .iter()
                .map(|&i| cols.iter().map(|&j| self.colours[i][j]).collect())
                .collect(),
        }
    }

    /// Orbits of rows and columns under the automorphism group.
    fn orbits(&self, limits: &Limits) -> Result<(Vec<usize>, Vec<usize>, u128)> {
        let aut = bigraph_automorphisms(&self.bigraph(), limits)?;
        let left: Vec<_> = aut
            .group
            .generators
            .iter()
            .map(|(l, _)| l.clone())
            .collect();
        let right: Vec<_> = aut
            .group
            .generators
            .iter()
            .map(|(_, r)| r.clone())
            .collect();
        Ok((
            orbit_labels(self.rows(), &left),
            orbit_labels(self.cols(), &right),
            aut.order,
        ))
    }

    /// Tags every colour with the orbits of its endpoints.
    fn refine(&self, row_orbit: &[usize], col_orbit: &[usize]) -> Grid {
        let mut ids = BTreeMap::new();
        for (i, row) in self.colours.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                ids.insert((c, row_orbit[i], col_orbit[j]), 0usize);
            }
        }
        for (k, v) in ids.values_mut().enumerate() {
            *v = k;
        }
        Grid {
            colours: self
                .colours
                .iter()
                .enumerate()
                .map(|(i, row)| {
                    row.iter()
                        .enumerate()
                        .map(|(j, &c)| ids[&(c, row_orbit[i], col_orbit[j])])
                        .collect()
                })
                .collect(),
        }
    }
}

/// `u ≤ v` on rows: equal colours in row `u` stay equal in row `v`, over the
/// live columns.
fn row_below(g: &Grid, u: usize, v: usize, cols: &[usize]) -> bool {
    cols.iter().all(|&s| {
        cols.iter()
            .all(|&t| g.colours[u][s] != g.colours[u][t] || g.colours[v][s] == g.colours[v][t])
    })
}

/// Removes one orbit dominated by a node of another orbit; false if none.
fn drop_dominated(g: &Grid, orbit: &[usize], live: &mut Vec<usize>, other: &[usize]) -> bool {
    let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for &x in live.iter() {
        classes.entry(orbit[x]).or_default().push(x);
    }
    for (&i, members_i) in &classes {
        let u = members_i[0];
        for (&j, members_j) in &classes {
            if i != j && members_j.iter().any(|&v| row_below(g, u, v, other)) {
                live.retain(|x| orbit[*x] != j);
                return true;
            }
        }
    }
    false
}

/// Removes fixed nodes (for nontrivial groups) and dominated orbits until
/// stable.
fn prune(
    g: &Grid,
    rows_orbit: &[usize],
    cols_orbit: &[usize],
    nontrivial: bool,
) -> (Vec<usize>, Vec<usize>) {
    let singleton =
        |orbit: &[usize], x: usize| orbit.iter().filter(|&&o| o == orbit[x]).count() == 1;
    let mut rows: Vec<usize> = (0..g.rows()).collect();
    let mut cols: Vec<usize> = (0..g.cols()).collect();
    if !nontrivial {
        return (rows, cols);
    }
    rows.retain(|&x| !singleton(rows_orbit, x));
    cols.retain(|&x| !singleton(cols_orbit, x));
    let t = g.transpose();
    loop {
        if drop_dominated(g, rows_orbit, &mut rows, &cols) {
            continue;
        }
        if drop_dominated(&t, cols_orbit, &mut cols, &rows) {
            continue;
        }
        return (rows, cols);
    }
}

/// Centre of the interval each colour must lie in, when there are not
/// exactly two row orbits.
fn centres_general(
    g: &Grid,
    rows_orbit: &[usize],
    cols_orbit: &[usize],
) -> BTreeMap<usize, Rational> {
    let first: Vec<usize> = (0..g.rows()).filter(|&i| rows_orbit[i] == 0).collect();
    let size = first.len() as i64;
    let k_cols = cols_orbit.iter().max().map_or(0, |m| m + 1);
    let mut centre = BTreeMap::new();
    for j in 0..k_cols {
        let p = (0..g.cols()).find(|&t| cols_orbit[t] == j).unwrap();
        let mut classes: Vec<(usize, usize)> = Vec::new();
        for &w in &first {
            let c = g.colours[w][p];
            match classes.iter_mut().find(|(col, _)| *col == c) {
                Some(entry) => entry.1 += 1,
                None => classes.push((c, 1)),
            }
        }
        let mut offset = 0i64;
        for (c, count) in classes {
            centre.insert(c, Rational::from_integer((-offset).into()));
            offset += count as i64;
        }
    }
    for i in 0..g.rows() {
        if rows_orbit[i] == 0 {
            continue;
        }
        for t in 0..g.cols() {
            let (oi, oj) = (rows_orbit[i] as i64 + 1, cols_orbit[t] as i64 + 1);
            let level = if oj == 1 {
                0
            } else {
                let sign = if (oi + oj) % 2 == 0 { 1 } else { -1 };
                sign * (oi + oj) * size
            };
            centre.insert(g.colours[i][t], Rational::from_integer(level.into()));
        }
    }
    centre
}

fn values_general(
    g: &Grid,
    rows_orbit: &[usize],
    cols_orbit: &[usize],
    pool: &mut TagPool,
) -> BTreeMap<usize, Value> {
    let centre = centres_general(g, rows_orbit, cols_orbit);
    let mut groups: BTreeMap<Rational, Vec<usize>> = BTreeMap::new();
    for (c, x) in &centre {
        groups.entry(x.clone()).or_default().push(*c);
    }
    let tenth = rat(1, 10);
    let mut out = BTreeMap::new();
    for (x, colours) in groups {
        let (lo, hi) = (&x - &tenth, &x + &tenth);
        for (t, c) in colours.iter().enumerate() {
            out.insert(*c, pool.value(subdivide(&lo, &hi, t + 1, colours.len())));
        }
    }
    out
}

/// Two row orbits: the spread of the values in each block shrinks
/// geometrically along the first row orbit and grows along the second, so
/// that every gap in an earlier block beats every gap in a later one (and
/// the reverse on the second row orbit).
fn values_two_orbits(
    g: &Grid,
    rows_orbit: &[usize],
    cols_orbit: &[usize],
    pool: &mut TagPool,
) -> BTreeMap<usize, Value> {
    let k_cols = cols_orbit.iter().max().map_or(0, |m| m + 1);
    let mut blocks: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for i in 0..g.rows() {
        for t in 0..g.cols() {
            let entry = blocks.entry((rows_orbit[i], cols_orbit[t])).or_default();
            let c = g.colours[i][t];
            if !entry.contains(&c) {
                entry.push(c);
            }
        }
    }
    let base = Rational::from_integer(
        (blocks.values().map(Vec::len).max().unwrap_or(0) as i64 + 1).into(),
    );
    let tenth = rat(1, 10);
    let step = |power: usize| {
        let mut s = tenth.clone();
        for _ in 0..power {
            s /= &base;
        }
        s
    };
    let mut out = BTreeMap::new();
    for ((i, j), mut colours) in blocks {
        colours.sort_unstable();
        let (start, width) = if i == 0 {
            (rat(-1, 20), step(j + 1))
        } else {
            (
                Rational::from_integer((-(j as i64) - 1).into()) - rat(1, 20),
                step(k_cols - j),
            )
        };
        for (t, c) in colours.iter().enumerate() {
            let x = &start + &width * Rational::from_integer((t as i64 + 1).into());
            out.insert(*c, pool.value(x));
        }
    }
    out
}

/// A finitary matrix whose unit stabilizer has finite part `Aut(d)` and
/// which has full rank with no constant row or column.
///
/// Missing edges get a colour of their own. Requires `d` irreducible, and
/// `Aut(d)` nontrivial or both sides larger than 2.
pub fn construct_from_bipartite(
    d: &ColouredBigraph,
    pool: &mut TagPool,
    limits: &Limits,
) -> Result<TropMatrix> {
    if d.n == 0 || d.m == 0 || !is_irreducible(d) {
        return Err(Error::ReducibleInput);
    }
    let missing = d
        .colours
        .iter()
        .flatten()
        .max()
        .map_or(0, |&c| c as usize + 1);
    let full = Grid {
        colours: (0..d.n)
            .map(|i| {
                (0..d.m)
                    .map(|j| d.colour(i, j).map_or(missing, |c| c as usize))
                    .collect()
            })
            .collect(),
    };
    let target = bigraph_automorphisms(d, limits)?;
    if target.order == 1 && !(d.n > 2 && d.m > 2) {
        return Err(Error::HypothesisViolated(
            "trivial group needs more than two nodes on each side".into(),
        ));
    }
    let (ro, co, _) = full.orbits(limits)?;
    let refined = full.refine(&ro, &co);
    let (rows, cols) = prune(&refined, &ro, &co, target.order > 1);
    let mut b = refined.restrict(&rows, &cols);
    let (mut ro, mut co, _) = b.orbits(limits)?;
    let k = ro.iter().max().map_or(0, |x| x + 1);
    let k_cols = co.iter().max().map_or(0, |x| x + 1);
    let transposed = k > k_cols;
    if transposed {
        b = b.transpose();
        std::mem::swap(&mut ro, &mut co);
    }
    let b = b.refine(&ro, &co);
    let k = ro.iter().max().map_or(0, |x| x + 1);
    let values = if k == 2 {
        values_two_orbits(&b, &ro, &co, pool)
    } else {
        values_general(&b, &ro, &co, pool)
    };
    let chosen: Vec<Value> = values.values().cloned().collect();
    if !free_basis_check(&chosen) {
        return Err(Error::DependentEntries);
    }
    let entries = b
        .colours
        .iter()
        .flatten()
        .map(|c| TropScalar::Fin(values[c].clone()))
        .collect();
    let mut a = TropMatrix::new(b.rows(), b.cols(), entries)?;
    if transposed {
        a = a.transpose();
    }
    check(&a, &target.group, target.order, limits)?;
    Ok(a)
}

fn check(a: &TropMatrix, group: &PairedGroup, order: u128, limits: &Limits) -> Result<()> {
    if !is_full_rank(a) {
        return Err(Error::ConstructionFailed(
            "constructed matrix is not of full rank".into(),
        ));
    }
    let constant = |line: Vec<TropScalar>| line.windows(2).all(|w| w[0] == w[1]);
    if (a.rows() > 1 && (0..a.cols()).any(|j| constant(a.column(j))))
        || (a.cols() > 1 && (0..a.rows()).any(|i| constant(a.row(i).to_vec())))
    {
        return Err(Error::ConstructionFailed(
            "constructed matrix has a constant line".into(),
        ));
    }
    let desc = group_description(a, limits)?;
    let ok = match desc.factors.as_slice() {
        [f] if f.multiplicity == 1 => {
            same_group(&f.finite_part.combined(), f.order, &group.combined(), order)?
        }
        _ => false,
    };
    if !ok {
        return Err(Error::ConstructionFailed(
            "stabilizer does not match Aut(D)".into(),
        ));
    }
    Ok(())
}

/// Bipartite construction for a paired 2-closed group given by generators.
pub fn construct_from_paired_group(
    g: &PairedGroup,
    pool: &mut TagPool,
    limits: &Limits,
) -> Result<TropMatrix> {
    if !is_paired_two_closed(g, limits)? {
        return Err(Error::NotTwoClosed);
    }
    construct_from_bipartite(&paired_orbit_colouring(g), pool, limits)
}
