//! Column and row spaces: membership by residuation, Green's relations,
//! extremal generators and reduction to full rank.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::TropMatrix;
use crate::semiring::TropScalar;

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct SpanWitness {
    pub coefficients: Vec<TropScalar>,
}

/// Greatest `λ` with `gens ⊗ λ ≤ x`.
fn principal_solution(x: &[TropScalar], a: &TropMatrix, cols: &[usize]) -> Vec<TropScalar> {
    cols.iter()
        .map(|&j| {
            let mut best: Option<TropScalar> = None;
            for (i, xi) in x.iter().enumerate() {
                if let TropScalar::Fin(aij) = a.get(i, j) {
                    let cand = xi.minus(aij);
                    if best.as_ref().map_or(true, |b| cand < *b) {
                        best = Some(cand);
                    }
                }
            }
            best.unwrap_or(TropScalar::NegInf)
        })
        .collect()
}

fn combine(a: &TropMatrix, cols: &[usize], coeffs: &[TropScalar]) -> Vec<TropScalar> {
    (0..a.rows())
        .map(|i| {
            let mut acc = TropScalar::NegInf;
            for (&j, c) in cols.iter().zip(coeffs) {
                if let (TropScalar::Fin(p), TropScalar::Fin(q)) = (a.get(i, j), c) {
                    let s = TropScalar::Fin(p + q);
                    if s > acc {
                        acc = s;
                    }
                }
            }
            acc
        })
        .collect()
}

fn member_of_columns(x: &[TropScalar], a: &TropMatrix, cols: &[usize]) -> Option<Vec<TropScalar>> {
    let lambda = principal_solution(x, a, cols);
    (combine(a, cols, &lambda) == x).then_some(lambda)
}

/// A witness that `x` lies in the column space of `a`, if it does.
pub fn member(x: &[TropScalar], a: &TropMatrix) -> Option<SpanWitness> {
    assert_eq!(x.len(), a.rows(), "vector length must equal row count");
    let cols: Vec<usize> = (0..a.cols()).collect();
    member_of_columns(x, a, &cols).map(|coefficients| SpanWitness { coefficients })
}

pub fn col_space_equal(a: &TropMatrix, b: &TropMatrix) -> bool {
    a.rows() == b.rows()
        && (0..b.cols()).all(|j| member(&b.column(j), a).is_some())
        && (0..a.cols()).all(|j| member(&a.column(j), b).is_some())
}

pub fn row_space_equal(a: &TropMatrix, b: &TropMatrix) -> bool {
    col_space_equal(&a.transpose(), &b.transpose())
}

pub fn h_related(a: &TropMatrix, b: &TropMatrix) -> bool {
    a.shape() == b.shape() && col_space_equal(a, b) && row_space_equal(a, b)
}

fn scalar_multiples(a: &TropMatrix, j: usize, k: usize) -> bool {
    let mut diff = None;
    for i in 0..a.rows() {
        match (a.get(i, j), a.get(i, k)) {
            (TropScalar::NegInf, TropScalar::NegInf) => {}
            (TropScalar::Fin(x), TropScalar::Fin(y)) => {
                let d = x - y;
                match &diff {
                    None => diff = Some(d),
                    Some(prev) if *prev == d => {}
                    Some(_) => return false,
                }
            }
            _ => return false,
        }
    }
    true
}

/// Indices of the columns forming the minimal generating set of the column
/// space; among columns equal up to scaling the earliest is kept.
pub fn extremal_columns(a: &TropMatrix) -> Vec<usize> {
    let nonzero: Vec<usize> = (0..a.cols())
        .filter(|&j| (0..a.rows()).any(|i| a.get(i, j).is_finite()))
        .collect();
    let mut out = Vec::new();
    for &j in &nonzero {
        let twins: Vec<usize> = nonzero
            .iter()
            .copied()
            .filter(|&k| k != j && scalar_multiples(a, j, k))
            .collect();
        if twins.iter().any(|&k| k < j) {
            continue;
        }
        let others: Vec<usize> = nonzero
            .iter()
            .copied()
            .filter(|&k| k != j && !twins.contains(&k))
            .collect();
        if member_of_columns(&a.column(j), a, &others).is_none() {
            out.push(j);
        }
    }
    out
}

pub fn extremal_rows(a: &TropMatrix) -> Vec<usize> {
    extremal_columns(&a.transpose())
}

pub fn column_rank(a: &TropMatrix) -> usize {
    extremal_columns(a).len()
}

pub fn row_rank(a: &TropMatrix) -> usize {
    extremal_rows(a).len()
}

pub fn is_full_rank(a: &TropMatrix) -> bool {
    row_rank(a) == a.rows() && column_rank(a) == a.cols()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduction {
    pub matrix: TropMatrix,
    pub row_keep: Vec<usize>,
    pub col_keep: Vec<usize>,
}

/// Restricts to extremal rows, then to the extremal columns of that.
pub fn reduce_full_rank(x: &TropMatrix) -> Result<Reduction> {
    if x.all_neg_inf() {
        return Err(Error::ZeroMatrix);
    }
    let row_keep = extremal_rows(x);
    let all_cols: Vec<usize> = (0..x.cols()).collect();
    let y = x.submatrix(&row_keep, &all_cols)?;
    let col_keep = extremal_columns(&y);
    let matrix = y.submatrix(&(0..row_keep.len()).collect::<Vec<_>>(), &col_keep)?;
    Ok(Reduction {
        matrix,
        row_keep,
        col_keep,
    })
}
