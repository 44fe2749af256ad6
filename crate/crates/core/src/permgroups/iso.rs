//! Isomorphism testing for small permutation groups via Cayley tables.

use std::collections::HashMap;

use super::perm::Perm;
use super::PermGroup;
use crate::error::Result;

pub const DEFAULT_ISO_CAP: u64 = 10_000;

struct Table {
    mul: Vec<Vec<usize>>,
    identity: usize,
    orders: Vec<u64>,
}

impl Table {
    fn new(elements: &[Perm]) -> Table {
        let index: HashMap<&Perm, usize> =
            elements.iter().enumerate().map(|(i, p)| (p, i)).collect();
        let mul: Vec<Vec<usize>> = elements
            .iter()
            .map(|a| elements.iter().map(|b| index[&a.then(b)]).collect())
            .collect();
        let identity = elements.iter().position(Perm::is_identity).unwrap();
        let orders = elements.iter().map(Perm::order).collect();
        Table {
            mul,
            identity,
            orders,
        }
    }

    fn len(&self) -> usize {
        self.mul.len()
    }

    fn is_abelian(&self) -> bool {
        (0..self.len()).all(|a| (0..a).all(|b| self.mul[a][b] == self.mul[b][a]))
    }

    fn generated(&self, gens: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        seen[self.identity] = true;
        let mut stack = vec![self.identity];
        while let Some(x) = stack.pop() {
            for &g in gens {
                let y = self.mul[x][g];
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen
    }

    /// Greedy generating set, preferring elements of large order.
    fn generating_set(&self) -> Vec<usize> {
        let mut by_order: Vec<usize> = (0..self.len()).collect();
        by_order.sort_by_key(|&x| (std::cmp::Reverse(self.orders[x]), x));
        let mut gens = Vec::new();
        let mut covered = self.generated(&gens);
        for x in by_order {
            if !covered[x] {
                gens.push(x);
                covered = self.generated(&gens);
            }
        }
        gens
    }

    fn order_profile(&self) -> Vec<u64> {
        let mut o = self.orders.clone();
        o.sort_unstable();
        o
    }
}

/// Extends `gens[k] -> images[k]` to the generated subgroup; `None` if the
/// assignment is not a well-defined homomorphism there.
fn extend_hom(g: &Table, h: &Table, gens: &[usize], images: &[usize]) -> Option<Vec<usize>> {
    let mut phi = vec![usize::MAX; g.len()];
    phi[g.identity] = h.identity;
    let mut stack = vec![g.identity];
    while let Some(x) = stack.pop() {
        for (&s, &t) in gens.iter().zip(images) {
            let y = g.mul[x][s];
            let fy = h.mul[phi[x]][t];
            if phi[y] == usize::MAX {
                phi[y] = fy;
                stack.push(y);
            } else if phi[y] != fy {
                return None;
            }
        }
    }
    Some(phi)
}

fn search(g: &Table, h: &Table, gens: &[usize], images: &mut Vec<usize>) -> bool {
    let k = images.len();
    if k == gens.len() {
        let phi = extend_hom(g, h, gens, images).unwrap();
        let mut hit = vec![false; h.len()];
        return phi.iter().all(|&y| !std::mem::replace(&mut hit[y], true));
    }
    for t in 0..h.len() {
        if h.orders[t] != g.orders[gens[k]] {
            continue;
        }
        images.push(t);
        if extend_hom(g, h, &gens[..=k], images).is_some() && search(g, h, gens, images) {
            return true;
        }
        images.pop();
    }
    false
}

pub fn groups_isomorphic(a: &PermGroup, b: &PermGroup) -> Result<bool> {
    groups_isomorphic_capped(a, b, DEFAULT_ISO_CAP)
}

pub fn groups_isomorphic_capped(a: &PermGroup, b: &PermGroup, cap: u64) -> Result<bool> {
    let ea = a.elements(cap)?;
    let eb = b.elements(cap)?;
    if ea.len() != eb.len() {
        return Ok(false);
    }
    let (g, h) = (Table::new(&ea), Table::new(&eb));
    if g.order_profile() != h.order_profile() || g.is_abelian() != h.is_abelian() {
        return Ok(false);
    }
    let gens = g.generating_set();
    Ok(search(&g, &h, &gens, &mut Vec::new()))
}

fn gens(degree: usize, cycles: &[&str]) -> PermGroup {
    PermGroup::from_cycles(degree, cycles).expect("catalogue generators are valid")
}

pub fn cyclic(n: usize) -> PermGroup {
    let images = (0..n).map(|i| (i + 1) % n).collect();
    PermGroup::new(n, vec![Perm(images)]).unwrap()
}

pub fn dihedral(n: usize) -> PermGroup {
    let rotation = Perm((0..n).map(|i| (i + 1) % n).collect());
    let reflection = Perm((0..n).map(|i| (n - i) % n).collect());
    PermGroup::new(n, vec![rotation, reflection]).unwrap()
}

pub fn symmetric(n: usize) -> PermGroup {
    if n < 2 {
        return PermGroup::trivial(n.max(1));
    }
    let mut swap: Vec<usize> = (0..n).collect();
    swap.swap(0, 1);
    let cycle = (0..n).map(|i| (i + 1) % n).collect();
    PermGroup::new(n, vec![Perm(swap), Perm(cycle)]).unwrap()
}

pub fn alternating(n: usize) -> PermGroup {
    let three_cycles = (2..n)
        .map(|k| {
            let mut p: Vec<usize> = (0..n).collect();
            p[0] = 1;
            p[1] = k;
            p[k] = 0;
            Perm(p)
        })
        .collect();
    PermGroup::new(n, three_cycles).unwrap()
}

pub fn direct_product(a: &PermGroup, b: &PermGroup) -> PermGroup {
    let (n, m) = (a.degree, b.degree);
    let mut out = Vec::new();
    for g in &a.generators {
        out.push(Perm(g.0.iter().copied().chain(n..n + m).collect()));
    }
    for g in &b.generators {
        out.push(Perm((0..n).chain(g.0.iter().map(|&x| x + n)).collect()));
    }
    PermGroup::new(n + m, out).unwrap()
}

/// A conventional name for small groups in a fixed catalogue, if it matches.
pub fn name_small_group(g: &PermGroup) -> Result<Option<String>> {
    let order = g.order(DEFAULT_ISO_CAP)?;
    if order == 1 {
        return Ok(Some("1".into()));
    }
    let mut candidates: Vec<(String, PermGroup)> =
        vec![(format!("C{}", order), cyclic(order as usize))];
    if order == 4 {
        candidates.push(("C2xC2".into(), gens(4, &["(1,2)", "(3,4)"])));
    }
    if order % 2 == 0 && order >= 6 {
        candidates.push((format!("D{}", order / 2), dihedral(order as usize / 2)));
    }
    for n in 3..=5u64 {
        let fact: u64 = (1..=n).product();
        if order == fact {
            candidates.push((format!("S{}", n), symmetric(n as usize)));
        }
        if order * 2 == fact && n >= 4 {
            candidates.push((format!("A{}", n), alternating(n as usize)));
        }
    }
    if order == 144 {
        let a4 = alternating(4);
        candidates.push(("A4xA4".into(), direct_product(&a4, &a4)));
    }
    for (name, h) in candidates {
        if groups_isomorphic(g, &h)? {
            return Ok(Some(name));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!(groups_isomorphic(&gens(2, &["(1,2)"]), &gens(4, &["(3,4)"])).unwrap());
        assert!(!groups_isomorphic(&cyclic(4), &gens(4, &["(1,2)", "(3,4)"])).unwrap());
        assert!(groups_isomorphic(&dihedral(4), &gens(4, &["(1,2,3,4)", "(1,3)"])).unwrap());
        assert!(groups_isomorphic(&symmetric(3), &dihedral(3)).unwrap());
        let c2c2c2 = gens(6, &["(1,2)", "(3,4)", "(5,6)"]);
        assert!(!groups_isomorphic(&dihedral(4), &c2c2c2).unwrap());
        // C6 vs S3
        assert!(!groups_isomorphic(&cyclic(6), &symmetric(3)).unwrap());
        // C2 x C3 is C6
        assert!(groups_isomorphic(&cyclic(6), &gens(5, &["(1,2)", "(3,4,5)"])).unwrap());
    }

    #[test]
    fn names() {
        assert_eq!(
            name_small_group(&PermGroup::trivial(3)).unwrap().as_deref(),
            Some("1")
        );
        assert_eq!(
            name_small_group(&gens(4, &["(1,3)", "(1,2,3,4)"]))
                .unwrap()
                .as_deref(),
            Some("D4")
        );
        assert_eq!(
            name_small_group(&gens(4, &["(1,2)", "(3,4)"]))
                .unwrap()
                .as_deref(),
            Some("C2xC2")
        );
        assert_eq!(
            name_small_group(&symmetric(4)).unwrap().as_deref(),
            Some("S4")
        );
        let alt10 = gens(
            10,
            &[
                "(1,3,2)(5,10,7)(6,8,9)",
                "(1,4)(2,3)(6,10)(7,8)",
                "(1,3)(2,4)(5,9)(6,10)",
            ],
        );
        assert_eq!(name_small_group(&alt10).unwrap().as_deref(), Some("A4"));
        assert_eq!(
            name_small_group(&gens(3, &["(1,2,3)"])).unwrap().as_deref(),
            Some("C3")
        );
        assert_eq!(
            name_small_group(&gens(2, &["(1,2)"])).unwrap().as_deref(),
            Some("C2")
        );
    }
}
