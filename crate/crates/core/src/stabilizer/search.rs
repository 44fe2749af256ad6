//! Backtracking search for unit pairs `(P, Q)` with `P ⊗ T = S ⊗ Q`.
//!
//! Rows of `S` are assigned rows of `T` (via `σ`), columns of `S` columns of
//! `T` (via `τ`), together with potentials `λ`, `μ` satisfying
//! `λ_i + T[σ(i), τ(j)] = S[i, j] + μ_j` on every finite entry of `S` and
//! matching `-inf` patterns elsewhere.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::matrix::{MonomialMatrix, TropMatrix};
use crate::semiring::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    First,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Vertex {
    Row(usize),
    Col(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnitPair {
    pub p: MonomialMatrix,
    pub q: MonomialMatrix,
}

type Entries = Vec<Vec<Option<Value>>>;

fn entries(a: &TropMatrix) -> Entries {
    (0..a.rows())
        .map(|i| a.row(i).iter().map(|x| x.finite().cloned()).collect())
        .collect()
}

fn transpose(e: &Entries) -> Entries {
    let cols = e.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| e.iter().map(|r| r[j].clone()).collect())
        .collect()
}

/// Per-line profile that is unchanged by permuting and scaling rows and
/// columns: for every other line, its class, the entrywise differences on
/// the common support (shifted to start at zero) tagged with the class of
/// the crossing line, and the crossing classes of the two one-sided
/// supports.
type Profile = Vec<(u32, Vec<(u32, Value)>, Vec<u32>, Vec<u32>)>;

fn profile(lines: &Entries, i: usize, class: &[u32], cross: &[u32]) -> Profile {
    let mut out: Profile = Vec::with_capacity(lines.len());
    for (k, other) in lines.iter().enumerate() {
        if k == i {
            continue;
        }
        let mut diffs = Vec::new();
        let (mut only_here, mut only_there) = (Vec::new(), Vec::new());
        for (j, (x, y)) in lines[i].iter().zip(other).enumerate() {
            match (x, y) {
                (Some(x), Some(y)) => diffs.push((cross[j], x - y)),
                (Some(_), None) => only_here.push(cross[j]),
                (None, Some(_)) => only_there.push(cross[j]),
                (None, None) => {}
            }
        }
        if let Some(min) = diffs.iter().map(|(_, d)| d).min().cloned() {
            for (_, d) in &mut diffs {
                *d = &*d - &min;
            }
        }
        diffs.sort();
        only_here.sort_unstable();
        only_there.sort_unstable();
        out.push((class[k], diffs, only_here, only_there));
    }
    out.sort();
    out
}

/// Row and column classes of `S` (first) and `T` (second) under one naming.
#[derive(Clone, Debug)]
struct Classes {
    rows: (Vec<u32>, Vec<u32>),
    cols: (Vec<u32>, Vec<u32>),
}

/// Lines of `S` and `T` split by profile; `None` when some class has
/// different sizes on the two sides, so that no pair can exist.
fn split(
    s: &Entries,
    t: &Entries,
    class: &(Vec<u32>, Vec<u32>),
    cross: &(Vec<u32>, Vec<u32>),
) -> Option<((Vec<u32>, Vec<u32>), usize)> {
    let ps: Vec<(u32, Profile)> = (0..s.len())
        .map(|i| (class.0[i], profile(s, i, &class.0, &cross.0)))
        .collect();
    let pt: Vec<(u32, Profile)> = (0..t.len())
        .map(|i| (class.1[i], profile(t, i, &class.1, &cross.1)))
        .collect();
    let mut names: BTreeMap<&(u32, Profile), (u32, i64)> = BTreeMap::new();
    for p in &ps {
        names.entry(p).or_insert((0, 0)).1 += 1;
    }
    for p in &pt {
        names.entry(p).or_insert((0, 0)).1 -= 1;
    }
    if names.values().any(|(_, balance)| *balance != 0) {
        return None;
    }
    for (k, (id, _)) in names.values_mut().enumerate() {
        *id = k as u32;
    }
    let count = names.len();
    let named = (
        ps.iter().map(|p| names[p].0).collect(),
        pt.iter().map(|p| names[p].0).collect(),
    );
    Some((named, count))
}

/// Alternately refines row and column classes until both are stable.
fn refine(
    s: &Entries,
    t: &Entries,
    s_cols: &Entries,
    t_cols: &Entries,
    mut c: Classes,
) -> Option<Classes> {
    let (mut rows_before, mut cols_before) = (usize::MAX, usize::MAX);
    loop {
        let (rows, nr) = split(s, t, &c.rows, &c.cols)?;
        c.rows = rows;
        let (cols, nc) = split(s_cols, t_cols, &c.cols, &c.rows)?;
        c.cols = cols;
        if nr == rows_before && nc == cols_before {
            return Some(c);
        }
        (rows_before, cols_before) = (nr, nc);
    }
}

pub struct Search<'a> {
    s: &'a TropMatrix,
    s_rows: Entries,
    t_rows: Entries,
    s_cols: Entries,
    t_cols: Entries,
    classes: Classes,
}

pub struct Query {
    pub mode: Mode,
    pub forced_rows: Vec<Option<usize>>,
    pub root: Option<Vertex>,
    pub max_nodes: u64,
    pub max_solutions: Option<u64>,
}

impl Query {
    pub fn all(rows: usize, max_nodes: u64) -> Query {
        Query {
            mode: Mode::All,
            forced_rows: vec![None; rows],
            root: None,
            max_nodes,
            max_solutions: None,
        }
    }

    pub fn first(rows: usize, max_nodes: u64) -> Query {
        Query {
            mode: Mode::First,
            ..Query::all(rows, max_nodes)
        }
    }
}

struct State<'q> {
    classes: Classes,
    order: Vec<Vertex>,
    sigma: Vec<Option<usize>>,
    tau: Vec<Option<usize>>,
    lambda: Vec<Option<Value>>,
    mu: Vec<Option<Value>>,
    row_used: Vec<bool>,
    col_used: Vec<bool>,
    nodes: u64,
    query: &'q Query,
    found: Vec<UnitPair>,
}

impl<'a> Search<'a> {
    /// Prepares a search mapping `s` onto `t`; `None` when no pair can
    /// exist because the shapes or line invariants disagree.
    pub fn new(s: &'a TropMatrix, t: &'a TropMatrix) -> Option<Search<'a>> {
        if s.shape() != t.shape() {
            return None;
        }
        let s_rows = entries(s);
        let t_rows = entries(t);
        let (s_cols, t_cols) = (transpose(&s_rows), transpose(&t_rows));
        let zero = |n: usize| (vec![0u32; n], vec![0u32; n]);
        let start = Classes {
            rows: zero(s.rows()),
            cols: zero(s.cols()),
        };
        let classes = refine(&s_rows, &t_rows, &s_cols, &t_cols, start)?;
        Some(Search {
            s,
            s_rows,
            t_rows,
            s_cols,
            t_cols,
            classes,
        })
    }

    pub fn row_classes(&self) -> &[u32] {
        &self.classes.rows.0
    }

    /// Classes after giving every forced row, and its image, a class of its
    /// own; `None` if the forcing is already contradictory.
    fn individualized(&self, forced: &[Option<usize>]) -> Option<Classes> {
        if forced.iter().all(Option::is_none) {
            return Some(self.classes.clone());
        }
        let mut c = self.classes.clone();
        let fresh = c.rows.0.iter().chain(&c.rows.1).max().map_or(0, |m| m + 1);
        let mut used = vec![false; self.s.rows()];
        for (i, k) in forced.iter().enumerate() {
            let Some(k) = *k else { continue };
            if used[k] || self.classes.rows.0[i] != self.classes.rows.1[k] {
                return None;
            }
            used[k] = true;
            c.rows.0[i] = fresh + i as u32;
            c.rows.1[k] = fresh + i as u32;
        }
        refine(&self.s_rows, &self.t_rows, &self.s_cols, &self.t_cols, c)
    }

    /// Connected greedy order over the bipartite support of `s`: each next
    /// vertex has the most finite entries towards vertices already placed,
    /// forced rows first. A new component starts at its heaviest column.
    fn vertex_order(&self, root: Option<Vertex>, forced: &[Option<usize>]) -> Vec<Vertex> {
        let (r, c) = self.s.shape();
        let mut placed_row = vec![false; r];
        let mut placed_col = vec![false; c];
        let mut row_links = vec![0usize; r];
        let mut col_links = vec![0usize; c];
        let mut order = Vec::with_capacity(r + c);
        let col_weight = |j: usize| (0..r).filter(|&i| self.s_rows[i][j].is_some()).count();
        let mut pending_root = root;
        while order.len() < r + c {
            let rows = (0..r)
                .filter(|&i| !placed_row[i] && row_links[i] > 0)
                .map(|i| {
                    (
                        (
                            forced[i].is_some(),
                            row_links[i],
                            true,
                            std::cmp::Reverse(i),
                        ),
                        Vertex::Row(i),
                    )
                });
            let cols = (0..c)
                .filter(|&j| !placed_col[j] && col_links[j] > 0)
                .map(|j| {
                    (
                        (false, col_links[j], false, std::cmp::Reverse(j)),
                        Vertex::Col(j),
                    )
                });
            let next = match rows.chain(cols).max_by(|a, b| a.0.cmp(&b.0)) {
                Some((_, v)) => v,
                None => match pending_root.take() {
                    Some(v) => v,
                    None => {
                        let col = (0..c)
                            .filter(|&j| !placed_col[j])
                            .max_by_key(|&j| (col_weight(j), std::cmp::Reverse(j)));
                        match col {
                            Some(j) => Vertex::Col(j),
                            None => Vertex::Row((0..r).find(|&i| !placed_row[i]).unwrap()),
                        }
                    }
                },
            };
            order.push(next);
            match next {
                Vertex::Row(i) => {
                    placed_row[i] = true;
                    for j in 0..c {
                        if self.s_rows[i][j].is_some() {
                            col_links[j] += 1;
                        }
                    }
                }
                Vertex::Col(j) => {
                    placed_col[j] = true;
                    for i in 0..r {
                        if self.s_rows[i][j].is_some() {
                            row_links[i] += 1;
                        }
                    }
                }
            }
        }
        order
    }

    pub fn run(&self, query: &Query) -> Result<Vec<UnitPair>> {
        let (r, c) = self.s.shape();
        let Some(classes) = self.individualized(&query.forced_rows) else {
            return Ok(Vec::new());
        };
        let mut state = State {
            classes,
            order: self.vertex_order(query.root, &query.forced_rows),
            sigma: vec![None; r],
            tau: vec![None; c],
            lambda: vec![None; r],
            mu: vec![None; c],
            row_used: vec![false; r],
            col_used: vec![false; c],
            nodes: 0,
            query,
            found: Vec::new(),
        };
        self.descend(&mut state, 0)?;
        Ok(state.found)
    }

    /// The potential row `i` must take if mapped to row `k`, given the columns
    /// assigned so far; `None` if the assignment is inconsistent.
    fn row_potential(&self, st: &State, i: usize, k: usize) -> Option<Value> {
        let mut pot: Option<Value> = None;
        for j in 0..self.s.cols() {
            let Some(l) = st.tau[j] else { continue };
            match (&self.s_rows[i][j], &self.t_rows[k][l]) {
                (None, None) => {}
                (Some(x), Some(y)) => {
                    let v = &(x + st.mu[j].as_ref().unwrap()) - y;
                    match &pot {
                        None => pot = Some(v),
                        Some(p) if *p == v => {}
                        Some(_) => return None,
                    }
                }
                _ => return None,
            }
        }
        Some(pot.unwrap_or_default())
    }

    fn col_potential(&self, st: &State, j: usize, l: usize) -> Option<Value> {
        let mut pot: Option<Value> = None;
        for i in 0..self.s.rows() {
            let Some(k) = st.sigma[i] else { continue };
            match (&self.s_rows[i][j], &self.t_rows[k][l]) {
                (None, None) => {}
                (Some(x), Some(y)) => {
                    let v = &(st.lambda[i].as_ref().unwrap() + y) - x;
                    match &pot {
                        None => pot = Some(v),
                        Some(p) if *p == v => {}
                        Some(_) => return None,
                    }
                }
                _ => return None,
            }
        }
        Some(pot.unwrap_or_default())
    }

    fn descend(&self, st: &mut State, depth: usize) -> Result<bool> {
        st.nodes += 1;
        if st.nodes > st.query.max_nodes {
            return Err(Error::SearchBudgetExceeded(st.query.max_nodes));
        }
        if depth == st.order.len() {
            let pair = UnitPair {
                p: MonomialMatrix::new(
                    st.sigma.iter().map(|x| x.unwrap()).collect(),
                    st.lambda.iter().map(|x| x.clone().unwrap()).collect(),
                ),
                q: MonomialMatrix::new(
                    st.tau.iter().map(|x| x.unwrap()).collect(),
                    st.mu.iter().map(|x| x.clone().unwrap()).collect(),
                ),
            };
            st.found.push(pair);
            if let Some(cap) = st.query.max_solutions {
                if st.found.len() as u64 > cap {
                    return Err(Error::OrderCapExceeded(cap));
                }
            }
            return Ok(st.query.mode == Mode::First);
        }
        match st.order[depth] {
            Vertex::Row(i) => {
                let candidates: Vec<usize> = match st.query.forced_rows[i] {
                    Some(k) => vec![k],
                    None => (0..self.s.rows()).collect(),
                };
                for k in candidates {
                    if st.row_used[k] || st.classes.rows.0[i] != st.classes.rows.1[k] {
                        continue;
                    }
                    let Some(pot) = self.row_potential(st, i, k) else {
                        continue;
                    };
                    st.sigma[i] = Some(k);
                    st.lambda[i] = Some(pot);
                    st.row_used[k] = true;
                    let stop = self.descend(st, depth + 1)?;
                    st.row_used[k] = false;
                    st.sigma[i] = None;
                    st.lambda[i] = None;
                    if stop {
                        return Ok(true);
                    }
                }
            }
            Vertex::Col(j) => {
                for l in 0..self.s.cols() {
                    if st.col_used[l] || st.classes.cols.0[j] != st.classes.cols.1[l] {
                        continue;
                    }
                    let Some(pot) = self.col_potential(st, j, l) else {
                        continue;
                    };
                    st.tau[j] = Some(l);
                    st.mu[j] = Some(pot);
                    st.col_used[l] = true;
                    let stop = self.descend(st, depth + 1)?;
                    st.col_used[l] = false;
                    st.tau[j] = None;
                    st.mu[j] = None;
                    if stop {
                        return Ok(true);
                    }
                }
            }
        }
        Ok(false)
    }
}

/// The unique column unit `Q` with `P ⊗ A = A ⊗ Q`, if `P ⊗ A` is a
/// column permutation and scaling of `A`.
pub fn column_side(p: &MonomialMatrix, a: &TropMatrix) -> Option<MonomialMatrix> {
    let pa = p.left_mul(a);
    let c = a.cols();
    let mut tau = vec![usize::MAX; c];
    let mut mu = vec![Value::zero(); c];
    let mut used = vec![false; c];
    for k in 0..c {
        let col = a.column(k);
        let found = (0..c).find_map(|l| {
            if used[l] {
                return None;
            }
            let mut shift: Option<Value> = None;
            for (x, y) in col.iter().zip(pa.column(l)) {
                match (x.finite(), y.finite()) {
                    (None, None) => {}
                    (Some(x), Some(y)) => {
                        let d = y - x;
                        match &shift {
                            None => shift = Some(d),
                            Some(s) if *s == d => {}
                            Some(_) => return None,
                        }
                    }
                    _ => return None,
                }
            }
            Some((l, shift.unwrap_or_default()))
        })?;
        used[found.0] = true;
        tau[k] = found.0;
        mu[k] = found.1;
    }
    Some(MonomialMatrix::new(tau, mu))
}
