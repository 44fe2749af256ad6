//! The coloured bipartite graph of finite entries, its connected components,
//! and isomorphism of column spaces between components.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{MonomialMatrix, TropMatrix};
use crate::semiring::Value;
use crate::stabilizer::search::{Query, Search, UnitPair};
use crate::Limits;

/// Edge `(i, j)` from row `ω_i` to column `θ_j`, coloured by `A[i, j]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColouredBipartiteGraph {
    pub n: usize,
    pub m: usize,
    pub edges: Vec<(usize, usize, Value)>,
}

/// A connected component: the rows and columns it contains, ascending.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Component {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    /// `U` with `C(U ⊗ A|member) = C(A|representative)`.
    pub unit: MonomialMatrix,
    /// The column unit `Q` with `U ⊗ A|member = A|representative ⊗ Q`.
    pub column_unit: MonomialMatrix,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentClass {
    /// Indices into the component list; the first is the representative.
    pub members: Vec<usize>,
    pub witnesses: Vec<Witness>,
}

impl ComponentClass {
    pub fn representative(&self) -> usize {
        self.members[0]
    }

    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentPartition {
    pub components: Vec<Component>,
    pub classes: Vec<ComponentClass>,
}

fn check_nondegenerate(a: &TropMatrix) -> Result<()> {
    if let Some(i) = (0..a.rows()).find(|&i| a.row(i).iter().all(|x| !x.is_finite())) {
        return Err(Error::DegenerateRowOrColumn(format!("row {}", i + 1)));
    }
    if let Some(j) = (0..a.cols()).find(|&j| (0..a.rows()).all(|i| !a.get(i, j).is_finite())) {
        return Err(Error::DegenerateRowOrColumn(format!("column {}", j + 1)));
    }
    Ok(())
}

pub fn bipartite_graph(a: &TropMatrix) -> Result<ColouredBipartiteGraph> {
    check_nondegenerate(a)?;
    let mut edges = Vec::new();
    for i in 0..a.rows() {
        for j in 0..a.cols() {
            if let Some(v) = a.get(i, j).finite() {
                edges.push((i, j, v.clone()));
            }
        }
    }
    Ok(ColouredBipartiteGraph {
        n: a.rows(),
        m: a.cols(),
        edges,
    })
}

/// Components ordered by their smallest row index.
pub fn connected_components(a: &TropMatrix) -> Result<Vec<Component>> {
    check_nondegenerate(a)?;
    let (r, c) = a.shape();
    let mut row_comp = vec![usize::MAX; r];
    let mut col_comp = vec![usize::MAX; c];
    let mut out = Vec::new();
    for start in 0..r {
        if row_comp[start] != usize::MAX {
            continue;
        }
        let id = out.len();
        let mut comp = Component {
            rows: Vec::new(),
            cols: Vec::new(),
        };
        let mut stack = vec![(true, start)];
        row_comp[start] = id;
        while let Some((is_row, x)) = stack.pop() {
            if is_row {
                comp.rows.push(x);
                for j in 0..c {
                    if a.get(x, j).is_finite() && col_comp[j] == usize::MAX {
                        col_comp[j] = id;
                        stack.push((false, j));
                    }
                }
            } else {
                comp.cols.push(x);
                for i in 0..r {
                    if a.get(i, x).is_finite() && row_comp[i] == usize::MAX {
                        row_comp[i] = id;
                        stack.push((true, i));
                    }
                }
            }
        }
        comp.rows.sort_unstable();
        comp.cols.sort_unstable();
        out.push(comp);
    }
    Ok(out)
}

/// The submatrix on a component, rows and columns in ascending order.
pub fn restrict(a: &TropMatrix, x: &Component) -> Result<TropMatrix> {
    if !connected_components(a)?.contains(x) {
        return Err(Error::NotAComponent);
    }
    a.submatrix(&x.rows, &x.cols)
}

/// A unit pair `(U, Q)` with `U ⊗ b = a ⊗ Q`, if one exists.
pub fn col_space_isomorphism(
    a: &TropMatrix,
    b: &TropMatrix,
    limits: &Limits,
) -> Result<Option<UnitPair>> {
    let Some(search) = Search::new(a, b) else {
        return Ok(None);
    };
    let found = search.run(&Query::first(a.rows(), limits.max_nodes))?;
    Ok(found.into_iter().next())
}

/// A unit `U` with `C(U ⊗ b) = C(a)`, for full-rank `a` and `b`.
pub fn col_space_isomorphic(
    a: &TropMatrix,
    b: &TropMatrix,
    limits: &Limits,
) -> Result<Option<MonomialMatrix>> {
    Ok(col_space_isomorphism(a, b, limits)?.map(|pair| pair.p))
}

/// Groups the components into classes of isomorphic column spaces.
pub fn class_partition(a: &TropMatrix, limits: &Limits) -> Result<ComponentPartition> {
    let components = connected_components(a)?;
    let restrictions: Vec<TropMatrix> = components
        .iter()
        .map(|c| a.submatrix(&c.rows, &c.cols))
        .collect::<Result<_>>()?;
    let mut classes: Vec<ComponentClass> = Vec::new();
    for (idx, block) in restrictions.iter().enumerate() {
        let tests: Vec<Result<Option<UnitPair>>> = classes
            .par_iter()
            .map(|class| {
                let rep = &restrictions[class.representative()];
                if rep.shape() != block.shape() {
                    Ok(None)
                } else {
                    col_space_isomorphism(rep, block, limits)
                }
            })
            .collect();
        let mut placed = false;
        for (class, test) in classes.iter_mut().zip(tests) {
            if let Some(pair) = test? {
                class.members.push(idx);
                class.witnesses.push(Witness {
                    unit: pair.p,
                    column_unit: pair.q,
                });
                placed = true;
                break;
            }
        }
        if !placed {
            let (r, c) = block.shape();
            classes.push(ComponentClass {
                members: vec![idx],
                witnesses: vec![Witness {
                    unit: MonomialMatrix::identity(r),
                    column_unit: MonomialMatrix::identity(c),
                }],
            });
        }
    }
    Ok(ComponentPartition {
        components,
        classes,
    })
}
