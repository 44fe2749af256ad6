//! The unit stabilizer `G_A`, its finite part `Σ` (eigenvalue-0 elements),
//! eigenvector normalization, and the product decomposition of `G_A`.

pub mod search;

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::components::{class_partition, connected_components, Component, ComponentPartition};
use crate::error::{Error, Result};
use crate::matrix::{
    is_idempotent, monomial_eigenvalue, monomial_invert, MonomialMatrix, TropMatrix,
};
use crate::permgroups::{is_paired_two_closed, name_small_group, PairedGroup, Perm};
use crate::semiring::Value;
use crate::spaces::{is_full_rank, reduce_full_rank, Reduction};
use crate::Limits;
use search::{Query, Search, UnitPair, Vertex};

/// A pair with `P ⊗ A = A ⊗ Q`, scaled so that its eigenvalue is recorded.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StabilizerElement {
    pub p: MonomialMatrix,
    pub q: MonomialMatrix,
    pub eigenvalue: Value,
}

impl StabilizerElement {
    pub fn identity(r: usize, c: usize) -> Self {
        StabilizerElement {
            p: MonomialMatrix::identity(r),
            q: MonomialMatrix::identity(c),
            eigenvalue: Value::zero(),
        }
    }

    pub fn compose(&self, other: &StabilizerElement) -> StabilizerElement {
        let p = self.p.compose(&other.p);
        let q = self.q.compose(&other.q);
        let eigenvalue = monomial_eigenvalue(&p).unwrap_or_default();
        StabilizerElement { p, q, eigenvalue }
    }

    pub fn inverse(&self) -> StabilizerElement {
        StabilizerElement {
            p: monomial_invert(&self.p),
            q: monomial_invert(&self.q),
            eigenvalue: -&self.eigenvalue,
        }
    }

    /// Ordering key: the permutation parts first.
    fn key(&self) -> (&[usize], &[usize]) {
        (&self.p.sigma, &self.q.sigma)
    }
}

/// `Σ`: generators, its order, and all elements when the order is within
/// the enumeration cap. Elements are sorted by `(σ, τ)`.
#[derive(Clone, Debug)]
pub struct Sigma {
    pub rows: usize,
    pub cols: usize,
    pub generators: Vec<StabilizerElement>,
    pub order: u128,
    pub elements: Option<Vec<StabilizerElement>>,
}

fn normalize(pair: UnitPair) -> Result<StabilizerElement> {
    let e = monomial_eigenvalue(&pair.p)?;
    let shift = -&e;
    Ok(StabilizerElement {
        p: pair.p.shift(&shift),
        q: pair.q.shift(&shift),
        eigenvalue: Value::zero(),
    })
}

fn orbit(point: usize, gens: &[StabilizerElement], n: usize) -> Vec<bool> {
    let mut seen = vec![false; n];
    seen[point] = true;
    let mut stack = vec![point];
    while let Some(x) = stack.pop() {
        for g in gens {
            let y = g.p.sigma[x];
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen
}

/// All elements generated by `gens`, breadth first, at most `cap`.
fn enumerate(
    gens: &[StabilizerElement],
    r: usize,
    c: usize,
    cap: u64,
) -> Result<Vec<StabilizerElement>> {
    let id = StabilizerElement::identity(r, c);
    let mut seen: HashSet<StabilizerElement> = HashSet::from([id.clone()]);
    let mut out = vec![id.clone()];
    let mut queue = VecDeque::from([id]);
    while let Some(x) = queue.pop_front() {
        for g in gens {
            let y = x.compose(g);
            if !seen.contains(&y) {
                if seen.len() as u64 >= cap {
                    return Err(Error::OrderCapExceeded(cap));
                }
                seen.insert(y.clone());
                out.push(y.clone());
                queue.push_back(y);
            }
        }
    }
    out.sort_by(|a, b| a.key().cmp(&b.key()));
    Ok(out)
}

fn finish(
    r: usize,
    c: usize,
    generators: Vec<StabilizerElement>,
    order: u128,
    limits: &Limits,
) -> Result<Sigma> {
    let elements = if order <= limits.max_order as u128 {
        Some(enumerate(&generators, r, c, limits.max_order)?)
    } else {
        None
    };
    if let Some(e) = &elements {
        if e.len() as u128 != order {
            return Err(Error::Internal(format!(
                "stabilizer order {} disagrees with enumeration {}",
                order,
                e.len()
            )));
        }
    }
    Ok(Sigma {
        rows: r,
        cols: c,
        generators,
        order,
        elements,
    })
}

/// `Σ` for a full-rank matrix with connected bipartite graph, built level by
/// level over the rows: at level `i` the rows before `i` are fixed and every
/// candidate image of row `i` is tested by a single search.
fn sigma_connected(a: &TropMatrix, limits: &Limits) -> Result<Sigma> {
    let (r, c) = a.shape();
    let search = Search::new(a, a).ok_or_else(|| Error::Internal("self-search rejected".into()))?;
    let classes = search.row_classes().to_vec();
    let mut generators: Vec<StabilizerElement> = Vec::new();
    let mut order: u128 = 1;
    for level in (0..r).rev() {
        let mut seen = orbit(level, &generators, r);
        for x in level + 1..r {
            if seen[x] || classes[x] != classes[level] {
                continue;
            }
            let mut forced: Vec<Option<usize>> = (0..r).map(|i| (i < level).then_some(i)).collect();
            forced[level] = Some(x);
            let query = Query {
                forced_rows: forced,
                root: Some(Vertex::Row(level)),
                ..Query::first(r, limits.max_nodes)
            };
            if let Some(pair) = search.run(&query)?.into_iter().next() {
                generators.push(normalize(pair)?);
                seen = orbit(level, &generators, r);
            }
        }
        order *= seen.iter().filter(|&&s| s).count() as u128;
    }
    generators.sort_by(|a, b| a.key().cmp(&b.key()));
    finish(r, c, generators, order, limits)
}

/// Places a unit on a component into the identity of the full matrix.
fn embed(unit: &MonomialMatrix, from: &[usize], to: &[usize], n: usize) -> MonomialMatrix {
    let mut out = MonomialMatrix::identity(n);
    for (k, &i) in from.iter().enumerate() {
        out.sigma[i] = to[unit.sigma[k]];
        out.scalings[i] = unit.scalings[k].clone();
    }
    out
}

/// The element swapping component `first` with component `other`, given
/// units with `P ⊗ A|other = A|first ⊗ Q`.
fn swap_lift(
    first: &Component,
    other: &Component,
    w_p: &MonomialMatrix,
    w_q: &MonomialMatrix,
    r: usize,
    c: usize,
) -> StabilizerElement {
    let forward_p = embed(w_p, &first.rows, &other.rows, r);
    let back_p = embed(&monomial_invert(w_p), &other.rows, &first.rows, r);
    let forward_q = embed(w_q, &first.cols, &other.cols, c);
    let back_q = embed(&monomial_invert(w_q), &other.cols, &first.cols, c);
    let merge = |a: MonomialMatrix, b: MonomialMatrix, moved: &[usize]| {
        let mut out = a;
        for &i in moved {
            out.sigma[i] = b.sigma[i];
            out.scalings[i] = b.scalings[i].clone();
        }
        out
    };
    StabilizerElement {
        p: merge(forward_p, back_p, &other.rows),
        q: merge(forward_q, back_q, &other.cols),
        eigenvalue: Value::zero(),
    }
}

/// `Σ` for a full-rank matrix whose bipartite graph is disconnected: each
/// component's own `Σ`, plus lifts permuting isomorphic components.
fn sigma_disconnected(
    a: &TropMatrix,
    partition: &ComponentPartition,
    limits: &Limits,
) -> Result<Sigma> {
    let (r, c) = a.shape();
    let mut generators = Vec::new();
    let mut order: u128 = 1;
    for comp in &partition.components {
        let block = a.submatrix(&comp.rows, &comp.cols)?;
        let sigma = sigma_connected(&block, limits)?;
        order *= sigma.order;
        for g in sigma.generators {
            generators.push(StabilizerElement {
                p: embed(&g.p, &comp.rows, &comp.rows, r),
                q: embed(&g.q, &comp.cols, &comp.cols, c),
                eigenvalue: Value::zero(),
            });
        }
    }
    for class in &partition.classes {
        let first = &partition.components[class.representative()];
        for (k, (&member, w)) in class
            .members
            .iter()
            .zip(&class.witnesses)
            .enumerate()
            .skip(1)
        {
            order *= (k + 1) as u128;
            let lift = swap_lift(
                first,
                &partition.components[member],
                &w.unit,
                &w.column_unit,
                r,
                c,
            );
            if lift.p.left_mul(a) != lift.q.right_mul(a) {
                return Err(Error::Internal(
                    "component swap is not a stabilizer element".into(),
                ));
            }
            generators.push(lift);
        }
    }
    finish(r, c, generators, order, limits)
}

fn require_full_rank(a: &TropMatrix) -> Result<()> {
    if a.all_neg_inf() || !is_full_rank(a) {
        Err(Error::NotFullRank)
    } else {
        Ok(())
    }
}

/// `Σ` of a full-rank matrix: every `(P, Q)` with `P ⊗ A = A ⊗ Q` and
/// eigenvalue 0.
pub fn stabilizer_pairs(a: &TropMatrix, limits: &Limits) -> Result<Sigma> {
    require_full_rank(a)?;
    let partition = class_partition(a, limits)?;
    if partition.components.len() == 1 {
        sigma_connected(a, limits)
    } else {
        sigma_disconnected(a, &partition, limits)
    }
}

/// Diagonal rescaling making every element of `Σ` a plain permutation pair.
#[derive(Clone, Debug)]
pub struct Normalization {
    /// `diag(-u)`.
    pub u: MonomialMatrix,
    /// `diag(-v)`.
    pub v: MonomialMatrix,
    /// `U ⊗ A ⊗ V`.
    pub b: TropMatrix,
    /// Permutation parts `(σ, τ)` of the generators of `Σ_B`.
    pub generators: Vec<(Perm, Perm)>,
}

/// Spreads potentials from the least point of each orbit along `step`,
/// which gives the potential of a neighbour of an already-set point.
fn spread<F>(n: usize, gens: &[StabilizerElement], step: F) -> Vec<Value>
where
    F: Fn(&StabilizerElement, usize, &[Option<Value>]) -> Option<(usize, Value)>,
{
    let mut pot: Vec<Option<Value>> = vec![None; n];
    for root in 0..n {
        if pot[root].is_some() {
            continue;
        }
        pot[root] = Some(Value::zero());
        let mut changed = true;
        while changed {
            changed = false;
            for g in gens {
                for x in 0..n {
                    if let Some((y, val)) = step(g, x, &pot) {
                        if pot[y].is_none() {
                            pot[y] = Some(val);
                            changed = true;
                        }
                    }
                }
            }
        }
    }
    pot.into_iter().map(Option::unwrap).collect()
}

/// Common eigenvector normalization for a connected full-rank matrix.
pub fn normalize_with(a: &TropMatrix, sigma: &Sigma) -> Result<Normalization> {
    let (r, c) = a.shape();
    let gens = &sigma.generators;
    // u_i = λ_i + u_σ(i): a known u at σ(i) fixes u_i
    let u = spread(r, gens, |g, i, pot| {
        pot[g.p.sigma[i]]
            .as_ref()
            .map(|x| (i, &g.p.scalings[i] + x))
    });
    // v_τ(j) = v_j + μ_j: a known v at j fixes v_τ(j)
    let v = spread(c, gens, |g, j, pot| {
        pot[j]
            .as_ref()
            .map(|x| (g.q.sigma[j], x + &g.q.scalings[j]))
    });
    let um = MonomialMatrix::diagonal(u.iter().map(|x| -x).collect());
    let vm = MonomialMatrix::diagonal(v.iter().map(|x| -x).collect());
    let b = vm.right_mul(&um.left_mul(a));
    let mut generators = Vec::with_capacity(gens.len());
    for g in gens {
        let p_b = um.compose(&g.p).compose(&monomial_invert(&um));
        let q_b = monomial_invert(&vm).compose(&g.q).compose(&vm);
        if !p_b.is_permutation() || !q_b.is_permutation() {
            return Err(Error::Internal(
                "no common eigenvector for the finite part".into(),
            ));
        }
        generators.push((Perm(p_b.sigma), Perm(q_b.sigma)));
    }
    Ok(Normalization {
        u: um,
        v: vm,
        b,
        generators,
    })
}

pub fn normalize_eigenvectors(a: &TropMatrix, limits: &Limits) -> Result<Normalization> {
    let sigma = stabilizer_pairs(a, limits)?;
    if connected_components(a)?.len() != 1 {
        return Err(Error::NotConnected);
    }
    normalize_with(a, &sigma)
}

/// One factor `(R x G) wr S_h` of the decomposition.
#[derive(Clone, Debug)]
pub struct Factor {
    pub finite_part: PairedGroup,
    pub n: usize,
    pub m: usize,
    pub multiplicity: usize,
    /// Index of the representative component.
    pub representative: usize,
    /// Indices of all components in the class.
    pub members: Vec<usize>,
    pub order: u128,
    pub name: Option<String>,
    /// The representative block after eigenvector normalization.
    pub normalized_block: TropMatrix,
}

#[derive(Clone, Debug)]
pub struct GroupDescription {
    pub input_shape: (usize, usize),
    pub reduction: Reduction,
    pub partition: ComponentPartition,
    pub factors: Vec<Factor>,
}

const NAMING_CAP: u128 = 10_000;

impl GroupDescription {
    pub fn real_rank(&self) -> usize {
        self.factors.iter().map(|f| f.multiplicity).sum()
    }

    /// Order of the finite part of the whole group, `∏ |G_α|^h_α h_α!`.
    pub fn finite_order(&self) -> u128 {
        self.factors
            .iter()
            .map(|f| {
                f.order.pow(f.multiplicity as u32) * (1..=f.multiplicity as u128).product::<u128>()
            })
            .product()
    }

    /// Human-readable form such as `(R x G1) wr S_2  x  (R x G2)`.
    pub fn formula(&self) -> String {
        let parts: Vec<String> = self
            .factors
            .iter()
            .enumerate()
            .map(|(k, f)| {
                let base = if f.order == 1 {
                    "R".to_string()
                } else {
                    let g = f.name.clone().unwrap_or_else(|| format!("G{}", k + 1));
                    format!("(R x {})", g)
                };
                if f.multiplicity > 1 {
                    format!("{} wr S_{}", base, f.multiplicity)
                } else {
                    base
                }
            })
            .collect();
        parts.join("  x  ")
    }
}

/// Reduces to full rank, splits into classes of components and computes the
/// normalized finite part of each class representative.
pub fn group_description(a: &TropMatrix, limits: &Limits) -> Result<GroupDescription> {
    let reduction = reduce_full_rank(a)?;
    let z = &reduction.matrix;
    let partition = class_partition(z, limits)?;
    let mut factors = Vec::with_capacity(partition.classes.len());
    for class in &partition.classes {
        let rep = &partition.components[class.representative()];
        let block = z.submatrix(&rep.rows, &rep.cols)?;
        let sigma = sigma_connected(&block, limits)?;
        let norm = normalize_with(&block, &sigma)?;
        let finite_part = PairedGroup::new(block.rows(), block.cols(), norm.generators)?;
        let name = if sigma.order <= NAMING_CAP {
            name_small_group(&finite_part.combined())?
        } else {
            None
        };
        factors.push(Factor {
            finite_part,
            n: block.rows(),
            m: block.cols(),
            multiplicity: class.multiplicity(),
            representative: class.representative(),
            members: class.members.clone(),
            order: sigma.order,
            name,
            normalized_block: norm.b,
        });
    }
    Ok(GroupDescription {
        input_shape: a.shape(),
        reduction,
        partition,
        factors,
    })
}

pub fn maximal_subgroup(e: &TropMatrix, limits: &Limits) -> Result<GroupDescription> {
    if !is_idempotent(e) {
        return Err(Error::NotIdempotent);
    }
    group_description(e, limits)
}

/// Units `P` with `P ⊗ E = E ⊗ P` for a connected full-rank idempotent,
/// normalized to eigenvalue 0 and sorted by permutation.
pub fn commuting_units(e: &TropMatrix, limits: &Limits) -> Result<Vec<StabilizerElement>> {
    if !is_idempotent(e) {
        return Err(Error::NotIdempotent);
    }
    require_full_rank(e)?;
    if connected_components(e)?.len() != 1 {
        return Err(Error::NotConnected);
    }
    let n = e.rows();
    let entry = |i: usize, j: usize| e.get(i, j).finite().cloned();
    // breadth-first order over the undirected support
    let mut order = vec![0usize];
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut k = 0;
    while k < order.len() {
        let i = order[k];
        for j in 0..n {
            if !seen[j] && (entry(i, j).is_some() || entry(j, i).is_some()) {
                seen[j] = true;
                order.push(j);
            }
        }
        k += 1;
    }

    struct St {
        sigma: Vec<Option<usize>>,
        lambda: Vec<Option<Value>>,
        used: Vec<bool>,
        nodes: u64,
        found: Vec<MonomialMatrix>,
    }
    // λ_i + E[σi, σj] = E[i, j] + λ_j on every finite entry
    fn potential(e: &TropMatrix, st: &St, i: usize, k: usize) -> Option<Value> {
        let mut pot: Option<Value> = None;
        let mut agree = |v: Value| match &pot {
            None => {
                pot = Some(v);
                true
            }
            Some(p) => *p == v,
        };
        if e.get(i, i) != e.get(k, k) {
            return None;
        }
        for j in 0..e.rows() {
            let (Some(sj), Some(lj)) = (st.sigma[j], st.lambda[j].as_ref()) else {
                continue;
            };
            match (e.get(i, j).finite(), e.get(k, sj).finite()) {
                (None, None) => {}
                (Some(x), Some(y)) => {
                    if !agree(&(x + lj) - y) {
                        return None;
                    }
                }
                _ => return None,
            }
            match (e.get(j, i).finite(), e.get(sj, k).finite()) {
                (None, None) => {}
                (Some(x), Some(y)) => {
                    if !agree(&(lj + y) - x) {
                        return None;
                    }
                }
                _ => return None,
            }
        }
        Some(pot.unwrap_or_default())
    }
    fn descend(
        e: &TropMatrix,
        order: &[usize],
        st: &mut St,
        depth: usize,
        limits: &Limits,
    ) -> Result<()> {
        st.nodes += 1;
        if st.nodes > limits.max_nodes {
            return Err(Error::SearchBudgetExceeded(limits.max_nodes));
        }
        if depth == order.len() {
            if st.found.len() as u64 >= limits.max_order {
                return Err(Error::OrderCapExceeded(limits.max_order));
            }
            st.found.push(MonomialMatrix::new(
                st.sigma.iter().map(|x| x.unwrap()).collect(),
                st.lambda.iter().map(|x| x.clone().unwrap()).collect(),
            ));
            return Ok(());
        }
        let i = order[depth];
        for k in 0..e.rows() {
            if st.used[k] {
                continue;
            }
            let Some(pot) = potential(e, st, i, k) else {
                continue;
            };
            st.sigma[i] = Some(k);
            st.lambda[i] = Some(pot);
            st.used[k] = true;
            descend(e, order, st, depth + 1, limits)?;
            st.used[k] = false;
            st.sigma[i] = None;
            st.lambda[i] = None;
        }
        Ok(())
    }

    let mut st = St {
        sigma: vec![None; n],
        lambda: vec![None; n],
        used: vec![false; n],
        nodes: 0,
        found: Vec::new(),
    };
    descend(e, &order, &mut st, 0, limits)?;
    let mut out = st
        .found
        .into_iter()
        .map(|p| normalize(UnitPair { q: p.clone(), p }))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.key().cmp(&b.key()));
    Ok(out)
}

/// The classification conditions on a description of a matrix of shape
/// `(n, m)`.
pub fn classification_conditions(
    desc: &GroupDescription,
    n: usize,
    m: usize,
    limits: &Limits,
) -> bool {
    classification_report(desc, n, m, limits).all()
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct ConditionReport {
    pub row_budget: bool,
    pub column_budget: bool,
    pub paired_two_closed: bool,
    pub at_most_one_line_factor: bool,
    pub no_three_small_trivial_factors: bool,
}

impl ConditionReport {
    pub fn all(&self) -> bool {
        self.row_budget
            && self.column_budget
            && self.paired_two_closed
            && self.at_most_one_line_factor
            && self.no_three_small_trivial_factors
    }
}

pub fn classification_report(
    desc: &GroupDescription,
    n: usize,
    m: usize,
    limits: &Limits,
) -> ConditionReport {
    let f = &desc.factors;
    let small = |x: &Factor| x.n.min(x.m);
    ConditionReport {
        row_budget: f.iter().map(|x| x.n * x.multiplicity).sum::<usize>() <= n,
        column_budget: f.iter().map(|x| x.m * x.multiplicity).sum::<usize>() <= m,
        paired_two_closed: f
            .iter()
            .all(|x| is_paired_two_closed(&x.finite_part, limits).unwrap_or(false)),
        at_most_one_line_factor: f.iter().filter(|x| small(x) == 1).count() <= 1,
        no_three_small_trivial_factors: f.iter().filter(|x| x.order == 1 && small(x) <= 2).count()
            < 3,
    }
}

/// For idempotents: each finite part must be 2-closed on its `n_α` points.
pub fn maximal_classification_conditions(
    desc: &GroupDescription,
    n: usize,
    limits: &Limits,
) -> bool {
    let f = &desc.factors;
    f.iter().map(|x| x.n * x.multiplicity).sum::<usize>() <= n
        && f.iter().all(|x| x.n == x.m)
        && f.iter().all(|x| {
            x.finite_part
                .faithful_left(limits.max_order)
                .and_then(|g| crate::permgroups::is_two_closed(&g, limits))
                .unwrap_or(false)
        })
        && f.iter().filter(|x| x.n == 1).count() <= 1
        && f.iter().filter(|x| x.order == 1 && x.n <= 2).count() < 3
}
