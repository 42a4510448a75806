//! Distance to ill-posedness and the condition number `K(d) = |d| / rho(d)`.
//!
//! For a triple with a unique optimal basis `B`, the distance to the set of
//! triples without one equals `h_B(d)`: the smallest distance to singularity
//! over a fixed family of `n + 1` square submatrices built from `A_B`.

use thiserror::Error;

use crate::dense::{rho_sing, DenseError, SquareMatrix};
use crate::lp::{optimal_basis_set, Basis, BasisClass, DataTriple, LpError, Verdict};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CondError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Dense(#[from] DenseError),
}

/// Which member of the submatrix family an entry refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmatrixKind {
    /// `[A_B, b]` with its column `dropped` (0-based, `m` is `b`) removed.
    Rhs { dropped: usize },
    /// Rows of `A` plus the row `c^T`, restricted to `B` plus column `added`.
    Cost { added: usize },
}

impl std::fmt::Display for SubmatrixKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SubmatrixKind::Rhs { dropped } => write!(f, "S1 drop col {}", dropped + 1),
            SubmatrixKind::Cost { added } => write!(f, "S2 add col {}", added + 1),
        }
    }
}

/// The `n + 1` submatrices whose smallest distance to singularity is `h_B(d)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubmatrixFamily {
    /// `m + 1` matrices of size `m`, deleting column 1..=m+1 of `[A_B, b]` in order.
    pub s1: Vec<SquareMatrix>,
    /// `n - m` matrices of size `m + 1`, one per `j` outside `B` in increasing order.
    pub s2: Vec<SquareMatrix>,
    pub kinds: Vec<SubmatrixKind>,
}

impl SubmatrixFamily {
    pub fn len(&self) -> usize {
        self.s1.len() + self.s2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &SquareMatrix> {
        self.s1.iter().chain(self.s2.iter())
    }
}

pub fn submatrix_family(d: &DataTriple, basis: &Basis) -> SubmatrixFamily {
    let (m, n) = (d.m(), d.n());
    let cols = basis.indices();
    // Columns of [A_B, b]: entry (i, t) for t < m is a(i, cols[t]), t = m is b_i.
    let ab = |i: usize, t: usize| if t < m { d.a(i, cols[t]) } else { d.b()[i] };

    let mut s1 = Vec::with_capacity(m + 1);
    let mut kinds = Vec::with_capacity(n + 1);
    for drop in 0..=m {
        let mut data = Vec::with_capacity(m * m);
        for i in 0..m {
            data.extend((0..=m).filter(|&t| t != drop).map(|t| ab(i, t)));
        }
        s1.push(SquareMatrix::new(m, data).expect("finite m x m"));
        kinds.push(SubmatrixKind::Rhs { dropped: drop });
    }

    let mut s2 = Vec::with_capacity(n - m);
    for j in basis.complement(n) {
        let mut sel: Vec<usize> = cols.to_vec();
        let pos = sel.partition_point(|&x| x < j);
        sel.insert(pos, j);
        let mut data = Vec::with_capacity((m + 1) * (m + 1));
        for i in 0..m {
            data.extend(sel.iter().map(|&col| d.a(i, col)));
        }
        data.extend(sel.iter().map(|&col| d.c()[col]));
        s2.push(SquareMatrix::new(m + 1, data).expect("finite (m+1) x (m+1)"));
        kinds.push(SubmatrixKind::Cost { added: j });
    }
    SubmatrixFamily { s1, s2, kinds }
}

/// `rho_sing` of every family member, in family order.
pub fn rho_per_submatrix(d: &DataTriple, basis: &Basis) -> Result<Vec<f64>, CondError> {
    submatrix_family(d, basis)
        .iter()
        .map(|s| rho_sing(s).map_err(CondError::from))
        .collect()
}

/// `h_B(d) = min_{S in S_B(d)} rho_sing(S)`.
pub fn h_b(d: &DataTriple, basis: &Basis) -> Result<f64, CondError> {
    Ok(rho_per_submatrix(d, basis)?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

pub fn triple_norm_12(d: &DataTriple) -> f64 {
    d.norm_12()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub norm_d: f64,
    /// Distance to ill-posedness; `Some(0.0)` on the boundary, `None` when undefined.
    pub rho: Option<f64>,
    /// `+inf` on the boundary, `None` when the triple has no unique optimal basis.
    pub kappa: Option<f64>,
    pub basis: Option<Basis>,
    pub rho_per_submatrix: Vec<(SubmatrixKind, f64)>,
    pub verdict: Verdict,
    pub classes: Vec<(Basis, BasisClass)>,
}

/// Condition report for `d`, locating the optimal basis by enumeration.
pub fn kappa(d: &DataTriple, tol: f64) -> Result<ConditionReport, CondError> {
    let set = optimal_basis_set(d, tol)?;
    let norm_d = triple_norm_12(d);
    let mut report = ConditionReport {
        norm_d,
        rho: None,
        kappa: None,
        basis: None,
        rho_per_submatrix: Vec::new(),
        verdict: set.verdict.clone(),
        classes: set.classes,
    };
    match set.verdict {
        Verdict::InU(basis) => {
            let family = submatrix_family(d, &basis);
            let mut rho = f64::INFINITY;
            for (s, kind) in family.iter().zip(&family.kinds) {
                let r = rho_sing(s)?;
                rho = rho.min(r);
                report.rho_per_submatrix.push((*kind, r));
            }
            report.rho = Some(rho);
            report.kappa = Some(if rho > 0.0 {
                norm_d / rho
            } else {
                f64::INFINITY
            });
            report.basis = Some(basis);
        }
        Verdict::Boundary => {
            report.rho = Some(0.0);
            report.kappa = Some(f64::INFINITY);
        }
        Verdict::NotInU => {}
    }
    Ok(report)
}
