//! Finite permutation groups, orbit colourings of pairs, 2-closures and
//! paired 2-closures.

pub mod automorphism;
pub mod iso;
mod perm;

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

pub use iso::{groups_isomorphic, name_small_group};
pub use perm::Perm;

use crate::error::{Error, Result};
use crate::Limits;
use automorphism::{automorphisms, Structure};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermGroup {
    pub degree: usize,
    pub generators: Vec<Perm>,
}

impl PermGroup {
    pub fn new(degree: usize, generators: Vec<Perm>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.degree() != degree) {
            return Err(Error::DimensionMismatch(format!(
                "generator {} has degree {}, expected {}",
                g,
                g.degree(),
                degree
            )));
        }
        Ok(PermGroup { degree, generators })
    }

    pub fn trivial(degree: usize) -> Self {
        PermGroup {
            degree,
            generators: Vec::new(),
        }
    }

    pub fn from_cycles<S: AsRef<str>>(degree: usize, cycles: &[S]) -> Result<Self> {
        let gens = cycles
            .iter()
            .map(|c| Perm::parse(c.as_ref(), degree))
            .collect::<Result<_>>()?;
        PermGroup::new(degree, gens)
    }

    /// All elements in breadth-first order from the identity.
    pub fn elements(&self, cap: u64) -> Result<Vec<Perm>> {
        let id = Perm::identity(self.degree);
        let mut seen: HashSet<Perm> = HashSet::from([id.clone()]);
        let mut order = vec![id.clone()];
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for g in &self.generators {
                let y = x.then(g);
                if !seen.contains(&y) {
                    if seen.len() as u64 >= cap {
                        return Err(Error::OrderCapExceeded(cap));
                    }
                    seen.insert(y.clone());
                    order.push(y.clone());
                    queue.push_back(y);
                }
            }
        }
        Ok(order)
    }

    pub fn order(&self, cap: u64) -> Result<u64> {
        self.elements(cap).map(|e| e.len() as u64)
    }

    pub fn cycle_strings(&self) -> Vec<String> {
        self.generators.iter().map(ToString::to_string).collect()
    }
}

pub fn group_order(g: &PermGroup) -> Result<u64> {
    g.order(Limits::default().max_order)
}

/// A group acting on two sets at once, as a subgroup of `S_n x S_m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairedGroup {
    pub left_degree: usize,
    pub right_degree: usize,
    pub generators: Vec<(Perm, Perm)>,
}

impl PairedGroup {
    pub fn new(
        left_degree: usize,
        right_degree: usize,
        generators: Vec<(Perm, Perm)>,
    ) -> Result<Self> {
        if generators
            .iter()
            .any(|(l, r)| l.degree() != left_degree || r.degree() != right_degree)
        {
            return Err(Error::DimensionMismatch(
                "paired generator has wrong degree".into(),
            ));
        }
        Ok(PairedGroup {
            left_degree,
            right_degree,
            generators,
        })
    }

    /// The action on the disjoint union, right points shifted by `n`.
    pub fn combined(&self) -> PermGroup {
        let n = self.left_degree;
        let gens = self
            .generators
            .iter()
            .map(|(l, r)| {
                Perm(
                    l.0.iter()
                        .copied()
                        .chain(r.0.iter().map(|&x| x + n))
                        .collect(),
                )
            })
            .collect();
        PermGroup {
            degree: n + self.right_degree,
            generators: gens,
        }
    }

    fn split(&self, p: &Perm) -> (Perm, Perm) {
        let n = self.left_degree;
        (
            Perm(p.0[..n].to_vec()),
            Perm(p.0[n..].iter().map(|&x| x - n).collect()),
        )
    }

    pub fn elements(&self, cap: u64) -> Result<Vec<(Perm, Perm)>> {
        Ok(self
            .combined()
            .elements(cap)?
            .iter()
            .map(|p| self.split(p))
            .collect())
    }

    pub fn order(&self, cap: u64) -> Result<u64> {
        self.combined().order(cap)
    }

    pub fn left(&self) -> PermGroup {
        PermGroup {
            degree: self.left_degree,
            generators: self.generators.iter().map(|(l, _)| l.clone()).collect(),
        }
    }

    pub fn right(&self) -> PermGroup {
        PermGroup {
            degree: self.right_degree,
            generators: self.generators.iter().map(|(_, r)| r.clone()).collect(),
        }
    }

    /// The action on the left set alone, if it is faithful.
    pub fn faithful_left(&self, cap: u64) -> Result<PermGroup> {
        let left = self.left();
        if left.order(cap)? != self.order(cap)? {
            return Err(Error::NotFaithful);
        }
        Ok(left)
    }

    pub fn cycle_strings(&self) -> Vec<String> {
        self.generators
            .iter()
            .map(|(l, r)| format!("{}|{}", l, r))
            .collect()
    }
}

/// Complete digraph with a colour on every ordered pair; `(i, i)` carries the
/// vertex colour.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColouredDigraph {
    pub n: usize,
    pub colours: Vec<u32>,
}

impl ColouredDigraph {
    pub fn colour(&self, i: usize, j: usize) -> u32 {
        self.colours[i * self.n + j]
    }

    fn structure(&self) -> Structure {
        Structure {
            n: self.n,
            vertex: vec![0; self.n],
            pair: self.colours.iter().map(|&c| c as u64).collect(),
        }
    }
}

/// Bipartite digraph `Ω -> Γ`; `None` marks a missing edge.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColouredBigraph {
    pub n: usize,
    pub m: usize,
    pub colours: Vec<Option<u32>>,
}

impl ColouredBigraph {
    pub fn colour(&self, i: usize, j: usize) -> Option<u32> {
        self.colours[i * self.m + j]
    }

    pub fn reversed(&self) -> ColouredBigraph {
        let mut colours = Vec::with_capacity(self.colours.len());
        for j in 0..self.m {
            for i in 0..self.n {
                colours.push(self.colour(i, j));
            }
        }
        ColouredBigraph {
            n: self.m,
            m: self.n,
            colours,
        }
    }

    fn structure(&self) -> Structure {
        let (n, m) = (self.n, self.m);
        let total = n + m;
        let mut pair = vec![0u64; total * total];
        for i in 0..n {
            for j in 0..m {
                let c = self.colour(i, j).map_or(0, |c| c as u64 + 1);
                pair[i * total + n + j] = (1 << 40) | c;
                pair[(n + j) * total + i] = (2 << 40) | c;
            }
        }
        Structure {
            n: total,
            vertex: (0..total).map(|v| (v >= n) as u64).collect(),
            pair,
        }
    }
}

#[derive(Clone, Debug)]
pub struct AutGroup {
    pub group: PermGroup,
    pub order: u128,
}

#[derive(Clone, Debug)]
pub struct PairedAutGroup {
    pub group: PairedGroup,
    pub order: u128,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }

    /// Class ids numbered by first appearance.
    fn labels(&mut self) -> Vec<u32> {
        let len = self.0.len();
        let mut name = vec![u32::MAX; len];
        let mut next = 0;
        (0..len)
            .map(|x| {
                let r = self.find(x);
                if name[r] == u32::MAX {
                    name[r] = next;
                    next += 1;
                }
                name[r]
            })
            .collect()
    }
}

/// Colours every ordered pair by its orbit under `g`.
pub fn pair_orbit_colouring(g: &PermGroup) -> ColouredDigraph {
    let n = g.degree;
    let mut uf = UnionFind((0..n * n).collect());
    for p in &g.generators {
        for i in 0..n {
            for j in 0..n {
                uf.union(i * n + j, p.apply(i) * n + p.apply(j));
            }
        }
    }
    ColouredDigraph {
        n,
        colours: uf.labels(),
    }
}

/// Colours every pair in `Ω x Γ` by its orbit under the paired action.
pub fn paired_orbit_colouring(g: &PairedGroup) -> ColouredBigraph {
    let (n, m) = (g.left_degree, g.right_degree);
    let mut uf = UnionFind((0..n * m).collect());
    for (l, r) in &g.generators {
        for i in 0..n {
            for j in 0..m {
                uf.union(i * m + j, l.apply(i) * m + r.apply(j));
            }
        }
    }
    ColouredBigraph {
        n,
        m,
        colours: uf.labels().into_iter().map(Some).collect(),
    }
}

pub fn coloured_automorphisms(d: &ColouredDigraph, limits: &Limits) -> Result<AutGroup> {
    let aut = automorphisms(&d.structure(), limits.max_nodes)?;
    Ok(AutGroup {
        group: PermGroup {
            degree: d.n,
            generators: aut.generators,
        },
        order: aut.order,
    })
}

pub fn bigraph_automorphisms(b: &ColouredBigraph, limits: &Limits) -> Result<PairedAutGroup> {
    let aut = automorphisms(&b.structure(), limits.max_nodes)?;
    let group = PairedGroup {
        left_degree: b.n,
        right_degree: b.m,
        generators: Vec::new(),
    };
    let generators = aut.generators.iter().map(|p| group.split(p)).collect();
    Ok(PairedAutGroup {
        group: PairedGroup {
            generators,
            ..group
        },
        order: aut.order,
    })
}

pub fn two_closure(g: &PermGroup, limits: &Limits) -> Result<AutGroup> {
    coloured_automorphisms(&pair_orbit_colouring(g), limits)
}

pub fn is_two_closed(g: &PermGroup, limits: &Limits) -> Result<bool> {
    let closure = two_closure(g, limits)?;
    Ok(closure.order == g.order(limits.max_order)? as u128)
}

pub fn paired_two_closure(g: &PairedGroup, limits: &Limits) -> Result<PairedAutGroup> {
    bigraph_automorphisms(&paired_orbit_colouring(g), limits)
}

pub fn is_paired_two_closed(g: &PairedGroup, limits: &Limits) -> Result<bool> {
    let closure = paired_two_closure(g, limits)?;
    Ok(closure.order == g.order(limits.max_order)? as u128)
}

/// False iff some node has no edges or two nodes on one side have identical
/// coloured neighbourhoods.
pub fn is_irreducible(d: &ColouredBigraph) -> bool {
    let rows: Vec<Vec<Option<u32>>> = (0..d.n)
        .map(|i| (0..d.m).map(|j| d.colour(i, j)).collect())
        .collect();
    let cols: Vec<Vec<Option<u32>>> = (0..d.m)
        .map(|j| (0..d.n).map(|i| d.colour(i, j)).collect())
        .collect();
    let no_isolated =
        |lines: &[Vec<Option<u32>>]| lines.iter().all(|l| l.iter().any(Option::is_some));
    let distinct = |lines: &[Vec<Option<u32>>]| {
        let set: HashSet<&Vec<Option<u32>>> = lines.iter().collect();
        set.len() == lines.len()
    };
    no_isolated(&rows) && no_isolated(&cols) && distinct(&rows) && distinct(&cols)
}
