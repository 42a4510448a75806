//! The sign group `{-1, 1}^n` acting on triples by flipping columns of `A`
//! together with the matching entries of `c`.
//!
//! For a fixed basis `B` with `h_B(d) > 0`, exactly one element of the group
//! sends `d` to a triple whose unique optimal basis is `B`; [`sign_fix`]
//! constructs it and [`orbit_partition_check`] confirms uniqueness by brute
//! force.

use std::fmt;

use thiserror::Error;

use crate::lp::{
    classify_basis, sign_data, verdict, Basis, BasisClass, DataTriple, LpError, Verdict,
};

/// Largest `n` for which [`orbit_partition_check`] walks the whole group.
pub const MAX_ORBIT_N: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SymmetryError {
    #[error("sign vector has length {got}, triple has n = {n}")]
    LengthMismatch { n: usize, got: usize },
    #[error("basis matrix A_B is singular")]
    Singular,
    #[error("boundary: a sign argument lies within tolerance of zero")]
    Boundary,
    #[error("group of size 2^{n} exceeds the enumeration limit 2^{MAX_ORBIT_N}")]
    TooLarge { n: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// An element of `{-1, 1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Option<Self> {
        signs
            .iter()
            .all(|&s| s == 1 || s == -1)
            .then_some(Self(signs))
    }

    pub fn ones(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Bit `j` of `mask` set means `u_j = -1`.
    pub fn from_mask(mask: u64, n: usize) -> Self {
        Self(
            (0..n)
                .map(|j| if (mask >> j) & 1 == 1 { -1 } else { 1 })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    #[inline]
    pub fn get(&self, j: usize) -> f64 {
        f64::from(self.0[j])
    }

    /// Componentwise product.
    pub fn compose(&self, other: &SignVector) -> SignVector {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a * b).collect())
    }

    /// `u(x) = D_u x`.
    pub fn act_on_vector(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(j, v)| self.get(j) * v).collect()
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// `u(d) = (A D_u, b, D_u c)`.
pub fn apply_sign(d: &DataTriple, u: &SignVector) -> Result<DataTriple, SymmetryError> {
    let (m, n) = (d.m(), d.n());
    if u.len() != n {
        return Err(SymmetryError::LengthMismatch { n, got: u.len() });
    }
    let a = d
        .a_data()
        .iter()
        .enumerate()
        .map(|(p, v)| u.get(p % n) * v)
        .collect();
    Ok(DataTriple::from_parts_unchecked(
        m,
        n,
        a,
        d.b().to_vec(),
        u.act_on_vector(d.c()),
    ))
}

/// The unique `u` with `B` the only optimal basis of `u(d)`:
/// `u_j = sign(x*_j)` on `B` and `u_j = sign(c_j - a_j^T y*)` off it.
///
/// Errors with [`SymmetryError::Boundary`] when any of those arguments lies
/// in the tolerance band of [`crate::lp::classify_basis`].
pub fn sign_fix(d: &DataTriple, basis: &Basis, tol: f64) -> Result<SignVector, SymmetryError> {
    let data = sign_data(d, basis, tol).ok_or(SymmetryError::Singular)?;
    if data.is_degenerate() {
        return Err(SymmetryError::Boundary);
    }
    let mut u = vec![1i8; d.n()];
    for &(j, v) in data.primal.iter().chain(&data.reduced_costs) {
        u[j] = if v > 0.0 { 1 } else { -1 };
    }
    Ok(SignVector(u))
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitCheck {
    /// Number of `u` for which `B` is an optimal basis of `u(d)`.
    pub count: usize,
    /// The first such `u` in mask order.
    pub found: Option<SignVector>,
    /// Whether `found(d)` has `B` as its only optimal basis.
    pub unique_optimal: bool,
}

/// Walks all `2^n` sign vectors and counts those making `B` optimal.
pub fn orbit_partition_check(
    d: &DataTriple,
    basis: &Basis,
    tol: f64,
) -> Result<OrbitCheck, SymmetryError> {
    let n = d.n();
    if n > MAX_ORBIT_N {
        return Err(SymmetryError::TooLarge { n });
    }
    let mut count = 0;
    let mut found = None;
    for mask in 0..(1u64 << n) {
        let u = SignVector::from_mask(mask, n);
        if classify_basis(&apply_sign(d, &u)?, basis, tol) == BasisClass::Optimal {
            count += 1;
            found.get_or_insert(u);
        }
    }
    let unique_optimal = match &found {
        Some(u) => verdict(&apply_sign(d, u)?, tol)? == Verdict::InU(basis.clone()),
        None => false,
    };
    Ok(OrbitCheck {
        count,
        found,
        unique_optimal,
    })
}
