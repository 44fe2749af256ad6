//! Automorphisms of complete structures with coloured vertices and coloured
//! ordered pairs, by individualization and refinement.

use std::collections::BTreeMap;

use super::perm::Perm;
use crate::error::{Error, Result};

pub const DEFAULT_MAX_NODES: u64 = 5_000_000;

/// Vertex colours plus a colour for every ordered pair (diagonal included).
#[derive(Clone, Debug)]
pub struct Structure {
    pub n: usize,
    pub vertex: Vec<u64>,
    pub pair: Vec<u64>,
}

impl Structure {
    fn pair(&self, u: usize, v: usize) -> u64 {
        self.pair[u * self.n + v]
    }

    pub fn is_automorphism(&self, p: &Perm) -> bool {
        let n = self.n;
        (0..n).all(|u| self.vertex[p.apply(u)] == self.vertex[u])
            && (0..n).all(|u| (0..n).all(|v| self.pair(p.apply(u), p.apply(v)) == self.pair(u, v)))
    }
}

#[derive(Clone, Debug)]
pub struct AutomorphismGroup {
    pub generators: Vec<Perm>,
    pub order: u128,
}

type Signature = (u32, Vec<(u64, u64, u32)>);

/// Refines two colourings with one shared naming of signatures until both
/// are stable. Returns false as soon as their histograms differ.
fn refine_jointly(s: &Structure, left: &mut Vec<u32>, right: &mut Vec<u32>) -> bool {
    let n = s.n;
    let signature = |colours: &[u32], v: usize| -> Signature {
        let mut nbrs: Vec<(u64, u64, u32)> = (0..n)
            .filter(|&w| w != v)
            .map(|w| (s.pair(v, w), s.pair(w, v), colours[w]))
            .collect();
        nbrs.sort_unstable();
        (colours[v], nbrs)
    };
    loop {
        let before = count_cells(left);
        let ls: Vec<Signature> = (0..n).map(|v| signature(left, v)).collect();
        let rs: Vec<Signature> = (0..n).map(|v| signature(right, v)).collect();
        let mut names: BTreeMap<&Signature, u32> = BTreeMap::new();
        for sig in ls.iter().chain(&rs) {
            names.insert(sig, 0);
        }
        for (k, id) in names.values_mut().enumerate() {
            *id = k as u32;
        }
        *left = ls.iter().map(|sig| names[sig]).collect();
        *right = rs.iter().map(|sig| names[sig]).collect();
        if histogram(left) != histogram(right) {
            return false;
        }
        if count_cells(left) == before {
            return true;
        }
    }
}

fn count_cells(colours: &[u32]) -> usize {
    let mut c = colours.to_vec();
    c.sort_unstable();
    c.dedup();
    c.len()
}

fn histogram(colours: &[u32]) -> BTreeMap<u32, usize> {
    let mut h = BTreeMap::new();
    for &c in colours {
        *h.entry(c).or_insert(0) += 1;
    }
    h
}

/// Gives `v` a colour of its own, keeping all other colours distinct from it.
fn individualize(colours: &mut [u32], v: usize) {
    for c in colours.iter_mut() {
        *c = *c * 2 + 1;
    }
    colours[v] -= 1;
}

fn initial_colours(s: &Structure) -> Vec<u32> {
    let mut names: BTreeMap<(u64, u64), u32> = BTreeMap::new();
    for v in 0..s.n {
        names.insert((s.vertex[v], s.pair(v, v)), 0);
    }
    for (k, id) in names.values_mut().enumerate() {
        *id = k as u32;
    }
    (0..s.n)
        .map(|v| names[&(s.vertex[v], s.pair(v, v))])
        .collect()
}

/// The smallest vertex in a smallest non-singleton cell.
fn target_cell_vertex(colours: &[u32]) -> Option<usize> {
    let h = histogram(colours);
    let best = h
        .iter()
        .filter(|(_, &size)| size > 1)
        .min_by_key(|(&c, &size)| (size, c))?;
    colours.iter().position(|c| c == best.0)
}

struct Searcher<'a> {
    s: &'a Structure,
    nodes: u64,
    max_nodes: u64,
}

impl<'a> Searcher<'a> {
    fn tick(&mut self) -> Result<()> {
        self.nodes += 1;
        if self.nodes > self.max_nodes {
            Err(Error::SearchBudgetExceeded(self.max_nodes))
        } else {
            Ok(())
        }
    }

    /// Some automorphism mapping each left-coloured cell onto the
    /// equally-coloured right cell, if one exists.
    fn extend(&mut self, left: Vec<u32>, right: Vec<u32>) -> Result<Option<Perm>> {
        self.tick()?;
        let Some(u) = target_cell_vertex(&left) else {
            let mut images = vec![0; self.s.n];
            for v in 0..self.s.n {
                images[v] = right.iter().position(|&c| c == left[v]).unwrap();
            }
            let p = Perm(images);
            return Ok(self.s.is_automorphism(&p).then_some(p));
        };
        let cell = left[u];
        for w in (0..self.s.n).filter(|&w| right[w] == cell) {
            let (mut l, mut r) = (left.clone(), right.clone());
            individualize(&mut l, u);
            individualize(&mut r, w);
            if refine_jointly(self.s, &mut l, &mut r) {
                if let Some(p) = self.extend(l, r)? {
                    return Ok(Some(p));
                }
            }
        }
        Ok(None)
    }
}

fn orbit_of(point: usize, gens: &[Perm], n: usize) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![point];
    seen[point] = true;
    while let Some(x) = stack.pop() {
        for g in gens {
            let y = g.apply(x);
            if !seen[y] {
                seen[y] = true;
                stack.push(y);
            }
        }
    }
    seen
}

/// Generators and order of the automorphism group of `s`.
pub fn automorphisms(s: &Structure, max_nodes: u64) -> Result<AutomorphismGroup> {
    let n = s.n;
    if n == 0 {
        return Ok(AutomorphismGroup {
            generators: Vec::new(),
            order: 1,
        });
    }
    let mut searcher = Searcher {
        s,
        nodes: 0,
        max_nodes,
    };

    // base points and the refined partition before each is individualized
    let mut base = Vec::new();
    let mut partitions = Vec::new();
    let mut colours = initial_colours(s);
    let mut twin = colours.clone();
    refine_jointly(s, &mut colours, &mut twin);
    while let Some(b) = target_cell_vertex(&colours) {
        base.push(b);
        partitions.push(colours.clone());
        individualize(&mut colours, b);
        let mut twin = colours.clone();
        refine_jointly(s, &mut colours, &mut twin);
    }

    let mut generators: Vec<Perm> = Vec::new();
    let mut order: u128 = 1;
    for level in (0..base.len()).rev() {
        let b = base[level];
        let partition = &partitions[level];
        let mut orbit = orbit_of(b, &generators, n);
        for x in 0..n {
            if orbit[x] || partition[x] != partition[b] {
                continue;
            }
            let (mut l, mut r) = (partition.clone(), partition.clone());
            individualize(&mut l, b);
            individualize(&mut r, x);
            if !refine_jointly(s, &mut l, &mut r) {
                continue;
            }
            if let Some(p) = searcher.extend(l, r)? {
                generators.push(p);
                orbit = orbit_of(b, &generators, n);
            }
        }
        order *= orbit.iter().filter(|&&o| o).count() as u128;
    }
    Ok(AutomorphismGroup { generators, order })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_perms(n: usize) -> Vec<Perm> {
        let mut out = Vec::new();
        let mut p: Vec<usize> = (0..n).collect();
        fn rec(k: usize, p: &mut Vec<usize>, out: &mut Vec<Perm>) {
            if k == p.len() {
                out.push(Perm(p.clone()));
                return;
            }
            for i in k..p.len() {
                p.swap(k, i);
                rec(k + 1, p, out);
                p.swap(k, i);
            }
        }
        rec(0, &mut p, &mut out);
        out
    }

    #[test]
    fn order_matches_brute_force_on_small_structures() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..200 {
            let n = 1 + trial % 6;
            let k = 1 + trial % 3;
            let s = Structure {
                n,
                vertex: (0..n).map(|_| rng.gen_range(0..2)).collect(),
                pair: (0..n * n).map(|_| rng.gen_range(0..k as u64)).collect(),
            };
            let brute = all_perms(n)
                .into_iter()
                .filter(|p| s.is_automorphism(p))
                .count();
            let aut = automorphisms(&s, DEFAULT_MAX_NODES).unwrap();
            assert_eq!(aut.order, brute as u128, "{:?}", s);
            assert!(aut.generators.iter().all(|g| s.is_automorphism(g)));
        }
    }

    #[test]
    fn symmetric_group_order() {
        let n = 12;
        let s = Structure {
            n,
            vertex: vec![0; n],
            pair: vec![0; n * n],
        };
        assert_eq!(
            automorphisms(&s, DEFAULT_MAX_NODES).unwrap().order,
            479_001_600
        );
    }

    #[test]
    fn budget_is_enforced() {
        let n = 8;
        let s = Structure {
            n,
            vertex: vec![0; n],
            pair: vec![0; n * n],
        };
        assert_eq!(
            automorphisms(&s, 3).unwrap_err(),
            Error::SearchBudgetExceeded(3)
        );
    }
}
