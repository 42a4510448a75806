//! Standard-form linear programs `min c^T x, Ax = b, x >= 0`, their bases,
//! and classification of bases by primal and dual feasibility.

use std::fmt;

use itertools::Itertools;
use thiserror::Error;

use crate::dense::{self, lu_factor, lu_solve, Matrix, SquareMatrix};

/// Relative tolerance used when none is given.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Upper limit on `C(n, m)` for exhaustive basis enumeration.
pub const MAX_BASES: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("dimensions must satisfy 1 <= m <= n, got m = {m}, n = {n}")]
    Dimensions { m: usize, n: usize },
    #[error("{what} has {got} entries, expected {expected}")]
    Shape {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("C({n}, {m}) = {count} bases exceeds the enumeration limit {MAX_BASES}")]
    TooManyBases { m: usize, n: usize, count: u64 },
}

/// The data `(A, b, c)` of a standard-form program, `A` stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataTriple {
    m: usize,
    n: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
}

impl DataTriple {
    pub fn new(m: usize, n: usize, a: Vec<f64>, b: Vec<f64>, c: Vec<f64>) -> Result<Self, LpError> {
        if m == 0 || m > n {
            return Err(LpError::Dimensions { m, n });
        }
        for (what, v, len) in [("A", &a, m * n), ("b", &b, m), ("c", &c, n)] {
            if v.len() != len {
                return Err(LpError::Shape {
                    what,
                    expected: len,
                    got: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(LpError::NonFinite(what));
            }
        }
        Ok(Self { m, n, a, b, c })
    }

    pub fn from_rows(a: &[Vec<f64>], b: Vec<f64>, c: Vec<f64>) -> Result<Self, LpError> {
        let n = a.first().map_or(0, Vec::len);
        if a.iter().any(|r| r.len() != n) {
            return Err(LpError::Shape {
                what: "A",
                expected: n,
                got: a.iter().map(Vec::len).find(|&l| l != n).unwrap_or(0),
            });
        }
        Self::new(a.len(), n, a.concat(), b, c)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn a(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    pub fn a_data(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let s = |v: &[f64]| v.iter().map(|x| alpha * x).collect::<Vec<_>>();
        Self {
            m: self.m,
            n: self.n,
            a: s(&self.a),
            b: s(&self.b),
            c: s(&self.c),
        }
    }

    pub(crate) fn from_parts_unchecked(
        m: usize,
        n: usize,
        a: Vec<f64>,
        b: Vec<f64>,
        c: Vec<f64>,
    ) -> Self {
        Self { m, n, a, b, c }
    }

    /// `M_d = [[c^T, 0], [A, b]]`, of size `(m+1) x (n+1)`.
    pub fn embedding_matrix(&self) -> Matrix {
        let (m, n) = (self.m, self.n);
        let mut data = Vec::with_capacity((m + 1) * (n + 1));
        data.extend_from_slice(&self.c);
        data.push(0.0);
        for i in 0..m {
            data.extend_from_slice(&self.a[i * n..(i + 1) * n]);
            data.push(self.b[i]);
        }
        Matrix::new(m + 1, n + 1, data).expect("validated triple")
    }

    /// `|M_d|_{12}`, the largest Euclidean norm among the columns of `M_d`.
    pub fn norm_12(&self) -> f64 {
        dense::norm_12(&self.embedding_matrix())
    }

    /// `a_j^T y`.
    pub fn column_dot(&self, j: usize, y: &[f64]) -> f64 {
        (0..self.m).map(|i| self.a(i, j) * y[i]).sum()
    }

    /// The square matrix `A_B`.
    pub fn basis_matrix(&self, basis: &Basis) -> SquareMatrix {
        let m = self.m;
        let mut data = Vec::with_capacity(m * m);
        for i in 0..m {
            data.extend(basis.indices().iter().map(|&j| self.a(i, j)));
        }
        SquareMatrix::new(m, data).expect("validated triple")
    }
}

/// A set of `m` column indices, stored 0-based and strictly increasing.
/// Displayed 1-based, e.g. `{1,3}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Basis(Vec<usize>);

impl Basis {
    pub fn new(indices: Vec<usize>, m: usize, n: usize) -> Result<Self, LpError> {
        if indices.len() != m {
            return Err(LpError::InvalidBasis(format!(
                "expected {m} indices, got {}",
                indices.len()
            )));
        }
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LpError::InvalidBasis(
                "indices must be strictly increasing".into(),
            ));
        }
        if indices.last().is_some_and(|&j| j >= n) {
            return Err(LpError::InvalidBasis(format!("index out of range 1..={n}")));
        }
        Ok(Self(indices))
    }

    /// From 1-based indices in any order.
    pub fn from_one_based(indices: &[usize], m: usize, n: usize) -> Result<Self, LpError> {
        if indices.contains(&0) {
            return Err(LpError::InvalidBasis("indices are 1-based".into()));
        }
        let mut v: Vec<usize> = indices.iter().map(|&j| j - 1).collect();
        v.sort_unstable();
        Self::new(v, m, n)
    }

    /// `{1, ..., m}` in 1-based terms.
    pub fn leading(m: usize) -> Self {
        Self((0..m).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    /// Indices in `0..n` not in the basis, increasing.
    pub fn complement(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|&j| !self.contains(j)).collect()
    }

    /// Every `m`-subset of `0..n` in lexicographic order.
    pub fn all(m: usize, n: usize) -> impl Iterator<Item = Basis> {
        (0..n).combinations(m).map(Basis)
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.iter().map(|j| j + 1).join(","))
    }
}

/// Primal and dual basic solutions for a basis.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicPair {
    pub x_star: Vec<f64>,
    pub y_star: Vec<f64>,
}

/// `x*_B = A_B^{-1} b` (zero off the basis) and `y* = A_B^{-T} c_B`.
/// `None` when `A_B` is singular.
pub fn basic_pair(d: &DataTriple, basis: &Basis) -> Option<BasicPair> {
    let f = lu_factor(&d.basis_matrix(basis), 0.0);
    if f.is_singular() {
        return None;
    }
    let xb = lu_solve(&f, d.b(), false).ok()?;
    let cb: Vec<f64> = basis.indices().iter().map(|&j| d.c()[j]).collect();
    let y_star = lu_solve(&f, &cb, true).ok()?;
    let mut x_star = vec![0.0; d.n()];
    for (&j, v) in basis.indices().iter().zip(xb) {
        x_star[j] = v;
    }
    Some(BasicPair { x_star, y_star })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisClass {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    BothInfeasible,
    Degenerate,
    Singular,
}

impl fmt::Display for BasisClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BasisClass::Optimal => "optimal",
            BasisClass::PrimalInfeasible => "primal-infeasible",
            BasisClass::DualInfeasible => "dual-infeasible",
            BasisClass::BothInfeasible => "both-infeasible",
            BasisClass::Degenerate => "degenerate",
            BasisClass::Singular => "singular",
        };
        f.write_str(s)
    }
}

/// The quantities whose signs decide optimality of a basis: `x*_j` for
/// `j` in the basis, and the reduced costs `c_j - a_j^T y*` elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SignData {
    pub pair: BasicPair,
    /// `(j, x*_j)` for `j` in the basis.
    pub primal: Vec<(usize, f64)>,
    /// `(j, c_j - a_j^T y*)` for `j` outside the basis.
    pub reduced_costs: Vec<(usize, f64)>,
    pub primal_band: f64,
    pub dual_band: f64,
}

impl SignData {
    /// True when some quantity falls inside its tolerance band.
    pub fn is_degenerate(&self) -> bool {
        self.primal
            .iter()
            .any(|&(_, x)| x.abs() <= self.primal_band)
            || self
                .reduced_costs
                .iter()
                .any(|&(_, s)| s.abs() <= self.dual_band)
    }
}

/// Computes [`SignData`] for `basis`, or `None` if `A_B` is singular.
///
/// The primal band is `tol * max_j |x*_j|` and the dual band is
/// `tol * |d|_12`; both are unchanged by scaling `d`.
pub fn sign_data(d: &DataTriple, basis: &Basis, tol: f64) -> Option<SignData> {
    let norm = d.norm_12();
    sign_data_with_norm(d, basis, tol, norm)
}

pub(crate) fn sign_data_with_norm(
    d: &DataTriple,
    basis: &Basis,
    tol: f64,
    norm: f64,
) -> Option<SignData> {
    let pair = basic_pair(d, basis)?;
    let primal: Vec<(usize, f64)> = basis
        .indices()
        .iter()
        .map(|&j| (j, pair.x_star[j]))
        .collect();
    let reduced_costs = basis
        .complement(d.n())
        .into_iter()
        .map(|j| (j, d.c()[j] - d.column_dot(j, &pair.y_star)))
        .collect();
    let xmax = primal.iter().fold(0.0f64, |a, &(_, x)| a.max(x.abs()));
    Some(SignData {
        pair,
        primal,
        reduced_costs,
        primal_band: tol * xmax,
        dual_band: tol * norm,
    })
}

fn class_of(data: Option<&SignData>) -> BasisClass {
    let Some(s) = data else {
        return BasisClass::Singular;
    };
    if s.is_degenerate() {
        return BasisClass::Degenerate;
    }
    let primal_ok = s.primal.iter().all(|&(_, x)| x > 0.0);
    let dual_ok = s.reduced_costs.iter().all(|&(_, r)| r > 0.0);
    match (primal_ok, dual_ok) {
        (true, true) => BasisClass::Optimal,
        (false, true) => BasisClass::PrimalInfeasible,
        (true, false) => BasisClass::DualInfeasible,
        (false, false) => BasisClass::BothInfeasible,
    }
}

/// Classifies `basis` for `d`. `tol` is relative; see [`sign_data`].
pub fn classify_basis(d: &DataTriple, basis: &Basis, tol: f64) -> BasisClass {
    class_of(sign_data(d, basis, tol).as_ref())
}

/// Membership of a triple in the set of programs with a unique optimal basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Exactly one optimal basis and no degenerate basis.
    InU(Basis),
    /// Zero or several optimal bases, none degenerate.
    NotInU,
    /// Some basis is degenerate within tolerance.
    Boundary,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::InU(b) => write!(f, "InU({b})"),
            Verdict::NotInU => f.write_str("NotInU"),
            Verdict::Boundary => f.write_str("Boundary"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    pub classes: Vec<(Basis, BasisClass)>,
    pub verdict: Verdict,
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| {
        acc.saturating_mul((n - i) as u64) / (i as u64 + 1)
    })
}

/// Classifies every basis of `d` and decides membership.
pub fn optimal_basis_set(d: &DataTriple, tol: f64) -> Result<BasisSet, LpError> {
    let count = binomial(d.n(), d.m());
    if count > MAX_BASES {
        return Err(LpError::TooManyBases {
            m: d.m(),
            n: d.n(),
            count,
        });
    }
    let norm = d.norm_12();
    let classes: Vec<(Basis, BasisClass)> = Basis::all(d.m(), d.n())
        .map(|b| {
            let class = class_of(sign_data_with_norm(d, &b, tol, norm).as_ref());
            (b, class)
        })
        .collect();
    let verdict = if classes.iter().any(|(_, c)| *c == BasisClass::Degenerate) {
        Verdict::Boundary
    } else {
        let mut optimal = classes.iter().filter(|(_, c)| *c == BasisClass::Optimal);
        match (optimal.next(), optimal.next()) {
            (Some((b, _)), None) => Verdict::InU(b.clone()),
            _ => Verdict::NotInU,
        }
    };
    Ok(BasisSet { classes, verdict })
}

/// Membership verdict only; stops as soon as the answer is known.
pub fn verdict(d: &DataTriple, tol: f64) -> Result<Verdict, LpError> {
    let count = binomial(d.n(), d.m());
    if count > MAX_BASES {
        return Err(LpError::TooManyBases {
            m: d.m(),
            n: d.n(),
            count,
        });
    }
    let norm = d.norm_12();
    let mut optimal: Option<Basis> = None;
    let mut several = false;
    for b in Basis::all(d.m(), d.n()) {
        match class_of(sign_data_with_norm(d, &b, tol, norm).as_ref()) {
            BasisClass::Degenerate => return Ok(Verdict::Boundary),
            BasisClass::Optimal => {
                if optimal.is_some() {
                    several = true;
                } else {
                    optimal = Some(b);
                }
            }
            _ => {}
        }
    }
    Ok(match optimal {
        Some(b) if !several => Verdict::InU(b),
        _ => Verdict::NotInU,
    })
}
