//! Dense tropical matrices and monomial (unit) matrices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semiring::{trop_add, trop_mul, TropScalar, Value};

pub const DEFAULT_SQUARING_CAP: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct TropMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<TropScalar>,
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    entries: Vec<Vec<TropScalar>>,
}

impl TropMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<TropScalar>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(
                "matrix must be at least 1x1".into(),
            ));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {}x{} matrix",
                entries.len(),
                rows,
                cols
            )));
        }
        Ok(TropMatrix {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows(rows: Vec<Vec<TropScalar>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        TropMatrix::new(r, c, rows.into_iter().flatten().collect())
    }

    pub fn filled(rows: usize, cols: usize, value: TropScalar) -> Self {
        assert!(rows > 0 && cols > 0);
        TropMatrix {
            rows,
            cols,
            entries: vec![value; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = TropMatrix::filled(n, n, TropScalar::NegInf);
        for i in 0..n {
            m.set(i, i, TropScalar::zero());
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &TropScalar {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: TropScalar) {
        self.entries[i * self.cols + j] = value;
    }

    pub fn entries(&self) -> &[TropScalar] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[TropScalar] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<TropScalar> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn transpose(&self) -> TropMatrix {
        let mut entries = Vec::with_capacity(self.entries.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                entries.push(self.get(i, j).clone());
            }
        }
        TropMatrix {
            rows: self.cols,
            cols: self.rows,
            entries,
        }
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<TropMatrix> {
        let entries = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| self.get(i, j).clone()))
            .collect();
        TropMatrix::new(rows.len(), cols.len(), entries)
    }

    pub fn all_neg_inf(&self) -> bool {
        self.entries.iter().all(|e| !e.is_finite())
    }

    /// Finite entries as values, skipping `-inf`.
    pub fn finite_values(&self) -> impl Iterator<Item = &Value> {
        self.entries.iter().filter_map(TropScalar::finite)
    }

    /// `A ⊗ x` for a column vector `x`.
    pub fn apply(&self, x: &[TropScalar]) -> Vec<TropScalar> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(TropScalar::NegInf, |acc, (a, b)| {
                        trop_add(&acc, &trop_mul(a, b))
                    })
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(MatrixJson {
            rows: self.rows,
            cols: self.cols,
            entries: (0..self.rows).map(|i| self.row(i).to_vec()).collect(),
        })
        .expect("matrix serializes")
    }

    /// Parses either the JSON object form or the plain text form.
    pub fn parse(text: &str) -> Result<TropMatrix> {
        if text.trim_start().starts_with('{') {
            let json: MatrixJson =
                serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
            if json.entries.len() != json.rows || json.entries.iter().any(|r| r.len() != json.cols)
            {
                return Err(Error::Parse("entries do not match rows/cols".into()));
            }
            return TropMatrix::from_rows(json.entries).map_err(|e| Error::Parse(e.to_string()));
        }
        let mut rows = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<Vec<TropScalar>>>()?;
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse("empty matrix".into()));
        }
        TropMatrix::from_rows(rows).map_err(|e| Error::Parse(e.to_string()))
    }
}

impl FromStr for TropMatrix {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        TropMatrix::parse(s)
    }
}

impl Serialize for TropMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            rows: self.rows,
            cols: self.cols,
            entries: (0..self.rows).map(|i| self.row(i).to_vec()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TropMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let json = MatrixJson::deserialize(d)?;
        if json.entries.len() != json.rows {
            return Err(serde::de::Error::custom("row count mismatch"));
        }
        TropMatrix::from_rows(json.entries).map_err(serde::de::Error::custom)
    }
}

/// Text form: one row per line, columns padded to a common width.
impl fmt::Display for TropMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.entries.iter().map(ToString::to_string).collect();
        let widths: Vec<usize> = (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .map(|i| cells[i * self.cols + j].len())
                    .max()
                    .unwrap()
            })
            .collect();
        for i in 0..self.rows {
            let line: Vec<String> = (0..self.cols)
                .map(|j| format!("{:>w$}", cells[i * self.cols + j], w = widths[j]))
                .collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

pub fn mat_mul(a: &TropMatrix, b: &TropMatrix) -> Result<TropMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut entries = Vec::with_capacity(a.rows * b.cols);
    for i in 0..a.rows {
        for j in 0..b.cols {
            let mut acc = TropScalar::NegInf;
            for k in 0..a.cols {
                if let (TropScalar::Fin(x), TropScalar::Fin(y)) = (a.get(i, k), b.get(k, j)) {
                    let s = TropScalar::Fin(x + y);
                    if s > acc {
                        acc = s;
                    }
                }
            }
            entries.push(acc);
        }
    }
    TropMatrix::new(a.rows, b.cols, entries)
}

pub fn is_idempotent(e: &TropMatrix) -> bool {
    e.is_square() && mat_mul(e, e).map_or(false, |sq| &sq == e)
}

/// Repeated squaring until a fixpoint `E ⊗ E = E`.
pub fn idempotent_power(a: &TropMatrix) -> Result<TropMatrix> {
    idempotent_power_capped(a, DEFAULT_SQUARING_CAP)
}

pub fn idempotent_power_capped(a: &TropMatrix, cap: usize) -> Result<TropMatrix> {
    if !a.is_square() {
        return Err(Error::DimensionMismatch(
            "idempotent power of a non-square matrix".into(),
        ));
    }
    let mut current = a.clone();
    for _ in 0..cap {
        let sq = mat_mul(&current, &current)?;
        if sq == current {
            return Ok(current);
        }
        current = sq;
    }
    Err(Error::NoIdempotentPower(cap))
}

/// A unit matrix: row `i` has its single finite entry `scalings[i]` in
/// column `sigma[i]`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct MonomialMatrix {
    pub sigma: Vec<usize>,
    pub scalings: Vec<Value>,
}

impl MonomialMatrix {
    pub fn new(sigma: Vec<usize>, scalings: Vec<Value>) -> Self {
        assert_eq!(sigma.len(), scalings.len());
        debug_assert!({
            let mut seen = vec![false; sigma.len()];
            sigma
                .iter()
                .all(|&s| s < seen.len() && !std::mem::replace(&mut seen[s], true))
        });
        MonomialMatrix { sigma, scalings }
    }

    pub fn identity(n: usize) -> Self {
        MonomialMatrix::permutation((0..n).collect())
    }

    pub fn permutation(sigma: Vec<usize>) -> Self {
        let n = sigma.len();
        MonomialMatrix::new(sigma, vec![Value::zero(); n])
    }

    pub fn diagonal(scalings: Vec<Value>) -> Self {
        MonomialMatrix::new((0..scalings.len()).collect(), scalings)
    }

    pub fn degree(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_permutation(&self) -> bool {
        self.scalings.iter().all(Value::is_zero)
    }

    pub fn to_matrix(&self) -> TropMatrix {
        let n = self.degree();
        let mut m = TropMatrix::filled(n, n, TropScalar::NegInf);
        for i in 0..n {
            m.set(i, self.sigma[i], TropScalar::Fin(self.scalings[i].clone()));
        }
        m
    }

    pub fn from_matrix(a: &TropMatrix) -> Option<MonomialMatrix> {
        if !a.is_square() {
            return None;
        }
        let n = a.rows();
        let mut sigma = Vec::with_capacity(n);
        let mut scalings = Vec::with_capacity(n);
        let mut used = vec![false; n];
        for i in 0..n {
            let mut finite = (0..n).filter(|&j| a.get(i, j).is_finite());
            let j = finite.next()?;
            if finite.next().is_some() || used[j] {
                return None;
            }
            used[j] = true;
            sigma.push(j);
            scalings.push(a.get(i, j).finite().unwrap().clone());
        }
        Some(MonomialMatrix { sigma, scalings })
    }

    /// Matrix product `self ⊗ other`.
    pub fn compose(&self, other: &MonomialMatrix) -> MonomialMatrix {
        assert_eq!(self.degree(), other.degree());
        let sigma = self.sigma.iter().map(|&s| other.sigma[s]).collect();
        let scalings = self
            .sigma
            .iter()
            .zip(&self.scalings)
            .map(|(&s, l)| l + &other.scalings[s])
            .collect();
        MonomialMatrix { sigma, scalings }
    }

    /// `λ ⊗ self`.
    pub fn shift(&self, lambda: &Value) -> MonomialMatrix {
        MonomialMatrix {
            sigma: self.sigma.clone(),
            scalings: self.scalings.iter().map(|s| s + lambda).collect(),
        }
    }

    /// `self ⊗ A`: row `i` becomes `scalings[i] + row sigma[i]` of `A`.
    pub fn left_mul(&self, a: &TropMatrix) -> TropMatrix {
        assert_eq!(self.degree(), a.rows());
        let mut entries = Vec::with_capacity(a.entries().len());
        for i in 0..a.rows() {
            for x in a.row(self.sigma[i]) {
                entries.push(match x {
                    TropScalar::Fin(v) => TropScalar::Fin(v + &self.scalings[i]),
                    TropScalar::NegInf => TropScalar::NegInf,
                });
            }
        }
        TropMatrix::new(a.rows(), a.cols(), entries).unwrap()
    }

    /// `A ⊗ self`: column `k` of `A`, shifted by `scalings[k]`, lands in
    /// column `sigma[k]`.
    pub fn right_mul(&self, a: &TropMatrix) -> TropMatrix {
        assert_eq!(self.degree(), a.cols());
        let mut out = TropMatrix::filled(a.rows(), a.cols(), TropScalar::NegInf);
        for k in 0..a.cols() {
            let target = self.sigma[k];
            for i in 0..a.rows() {
                out.set(i, target, a.get(i, k).minus(&-&self.scalings[k]));
            }
        }
        out
    }

    /// Cycles of `sigma`, each starting at its smallest point.
    pub fn cycles(&self) -> Vec<Vec<usize>> {
        let n = self.degree();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut cycle = Vec::new();
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                cycle.push(x);
                x = self.sigma[x];
            }
            out.push(cycle);
        }
        out
    }
}

pub fn monomial_invert(p: &MonomialMatrix) -> MonomialMatrix {
    let n = p.degree();
    let mut sigma = vec![0; n];
    let mut scalings = vec![Value::zero(); n];
    for i in 0..n {
        sigma[p.sigma[i]] = i;
        scalings[p.sigma[i]] = -&p.scalings[i];
    }
    MonomialMatrix { sigma, scalings }
}

/// The common cycle mean of `p`.
pub fn monomial_eigenvalue(p: &MonomialMatrix) -> Result<Value> {
    let mut mean: Option<Value> = None;
    for cycle in p.cycles() {
        let total: Value = cycle.iter().map(|&i| p.scalings[i].clone()).sum();
        let m = total.div_int(cycle.len() as u64);
        match &mean {
            None => mean = Some(m),
            Some(prev) if *prev == m => {}
            Some(_) => return Err(Error::MultipleEigenvalues),
        }
    }
    mean.ok_or_else(|| Error::DimensionMismatch("empty monomial matrix".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(s: &str) -> TropMatrix {
        s.parse().unwrap()
    }

    fn v(s: &str) -> Value {
        s.parse().unwrap()
    }

    #[test]
    fn identity_is_neutral() {
        let a = m("0 1 -inf\n2 -3 e1");
        assert_eq!(mat_mul(&TropMatrix::identity(2), &a).unwrap(), a);
        assert_eq!(mat_mul(&a, &TropMatrix::identity(3)).unwrap(), a);
    }

    #[test]
    fn commuting_pair() {
        let e = m("0 -1+e1\n-1+e2 0");
        let p = m("-inf -1+e1\n-1+e2 -inf");
        let expected = m("-2+e1+e2 -1+e1\n-1+e2 -2+e1+e2");
        assert_eq!(mat_mul(&p, &e).unwrap(), expected);
        assert_eq!(mat_mul(&e, &p).unwrap(), expected);
    }

    #[test]
    fn small_product() {
        assert_eq!(mat_mul(&m("0 0\n-inf 1"), &m("0\n-1")).unwrap(), m("0\n0"));
        assert!(mat_mul(&m("0 0"), &m("0 0")).is_err());
    }

    #[test]
    fn inverse() {
        let p = MonomialMatrix::new(vec![1, 0], vec![v("-1+e1"), v("-1+e2")]);
        let inv = monomial_invert(&p);
        assert_eq!(inv.to_matrix(), m("-inf 1-e2\n1-e1 -inf"));
        assert_eq!(p.compose(&inv), MonomialMatrix::identity(2));
        assert_eq!(inv.compose(&p), MonomialMatrix::identity(2));
        let d = MonomialMatrix::diagonal(vec![v("3"), v("e1")]);
        assert_eq!(
            monomial_invert(&d),
            MonomialMatrix::diagonal(vec![v("-3"), v("-e1")])
        );
        assert_eq!(
            monomial_invert(&MonomialMatrix::identity(3)),
            MonomialMatrix::identity(3)
        );
    }

    #[test]
    fn eigenvalues() {
        let lam = v("5/2-e3");
        let p = MonomialMatrix::identity(3).shift(&lam);
        assert_eq!(monomial_eigenvalue(&p).unwrap(), lam);
        let p = MonomialMatrix::new(vec![1, 0], vec![v("-1+e1"), v("-1+e2")]);
        assert_eq!(monomial_eigenvalue(&p).unwrap(), v("-1+1/2e1+1/2e2"));
        let p = MonomialMatrix::permutation(vec![2, 0, 1, 3]);
        assert_eq!(monomial_eigenvalue(&p).unwrap(), Value::zero());
        let p = MonomialMatrix::diagonal(vec![v("0"), v("1")]);
        assert_eq!(monomial_eigenvalue(&p), Err(Error::MultipleEigenvalues));
    }

    #[test]
    fn idempotents() {
        assert!(is_idempotent(&TropMatrix::identity(3)));
        assert!(is_idempotent(&m("0 -1\n-1 0")));
        assert!(!is_idempotent(&m("0 1\n1 0")));
        for e in ["0 0\n-5 0", "0 0\n-inf 0"] {
            assert_eq!(idempotent_power(&m(e)).unwrap(), m(e));
        }
        assert_eq!(
            idempotent_power(&m("0 1\n1 0")),
            Err(Error::NoIdempotentPower(64))
        );
        assert_eq!(idempotent_power(&m("-1 0\n0 -1")).unwrap(), m("0 -1\n-1 0"));
    }

    #[test]
    fn text_and_json_formats() {
        let a = m("# comment\n0 -inf\n\n 1/2+e1  -3 # trailing\n");
        assert_eq!(a.shape(), (2, 2));
        assert_eq!(a.to_string().parse::<TropMatrix>().unwrap(), a);
        let json = serde_json::to_string(&a).unwrap();
        assert_eq!(
            json,
            r#"{"rows":2,"cols":2,"entries":[["0","-inf"],["1/2+e1","-3"]]}"#
        );
        assert_eq!(TropMatrix::parse(&json).unwrap(), a);
        assert!(TropMatrix::parse("0 1\n2").is_err());
        assert!(TropMatrix::parse("").is_err());
        assert!(TropMatrix::parse(r#"{"rows":1,"cols":2,"entries":[["0"]]}"#).is_err());
    }

    fn scalar() -> impl Strategy<Value = TropScalar> {
        prop_oneof![1 => Just(TropScalar::NegInf), 4 => (-3i64..=3).prop_map(TropScalar::int)]
    }

    fn matrix(r: usize, c: usize) -> impl Strategy<Value = TropMatrix> {
        prop::collection::vec(scalar(), r * c).prop_map(move |e| TropMatrix::new(r, c, e).unwrap())
    }

    fn monomial(n: usize) -> impl Strategy<Value = MonomialMatrix> {
        (
            Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            prop::collection::vec(-3i64..=3, n),
        )
            .prop_map(|(s, l)| MonomialMatrix::new(s, l.into_iter().map(Value::from_int).collect()))
    }

    proptest! {
        #[test]
        fn associativity(a in matrix(2, 3), b in matrix(3, 2), c in matrix(2, 4)) {
            let left = mat_mul(&mat_mul(&a, &b).unwrap(), &c).unwrap();
            let right = mat_mul(&a, &mat_mul(&b, &c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn monomial_actions_match_products(p in monomial(3), a in matrix(3, 3)) {
            prop_assert_eq!(p.left_mul(&a), mat_mul(&p.to_matrix(), &a).unwrap());
            prop_assert_eq!(p.right_mul(&a), mat_mul(&a, &p.to_matrix()).unwrap());
            // rows of P⊗A are scaled rows of A
            let pa = p.left_mul(&a);
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert_eq!(pa.get(i, j), &a.get(p.sigma[i], j).minus(&-&p.scalings[i]));
                }
            }
        }

        #[test]
        fn inverse_eigenvalue_negates(p in monomial(4)) {
            let inv = monomial_invert(&p);
            prop_assert_eq!(p.compose(&inv), MonomialMatrix::identity(4));
            match monomial_eigenvalue(&p) {
                Ok(e) => prop_assert_eq!(monomial_eigenvalue(&inv).unwrap(), -e),
                Err(_) => prop_assert!(monomial_eigenvalue(&inv).is_err()),
            }
            prop_assert_eq!(p.compose(&inv).to_matrix(), mat_mul(&p.to_matrix(), &inv.to_matrix()).unwrap());
        }
    }
}
