//! Small dense matrix kernel.
//!
//! Everything here is sized for the submatrices that show up when
//! conditioning a linear program: at most a few dozen rows, usually 1 to 4.
//! The only nontrivial quantity is [`rho_sing`], the distance to the
//! nearest singular matrix measured in the operator norm from `l1` to `l2`.

use rand::Rng;
use thiserror::Error;

/// Largest dimension accepted by [`SquareMatrix`].
pub const MAX_DIM: usize = 32;

/// Largest dimension for which [`norm_21`] enumerates sign vectors.
pub const MAX_NORM21_DIM: usize = 25;

/// Largest dimension accepted by [`rho_sing_oracle`].
pub const MAX_ORACLE_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DenseError {
    #[error("matrix has no entries")]
    Empty,
    #[error("expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("dimension {0} outside 1..={MAX_DIM}")]
    DimensionOutOfRange(usize),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("enumeration too large: dimension {dim} exceeds {max}")]
    EnumerationTooLarge { dim: usize, max: usize },
    #[error("factors are singular")]
    Singular,
    #[error("right-hand side has length {got}, expected {expected}")]
    RhsLength { expected: usize, got: usize },
}

/// Rectangular row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, DenseError> {
        if rows == 0 || cols == 0 {
            return Err(DenseError::Empty);
        }
        if data.len() != rows * cols {
            return Err(DenseError::ShapeMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(DenseError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, DenseError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(DenseError::ShapeMismatch {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        (0..self.rows)
            .map(|i| self.get(i, j).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| alpha * v).collect(),
        }
    }
}

/// A `k x k` matrix with `1 <= k <= MAX_DIM` and finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix(Matrix);

impl SquareMatrix {
    pub fn new(k: usize, data: Vec<f64>) -> Result<Self, DenseError> {
        if k == 0 || k > MAX_DIM {
            return Err(DenseError::DimensionOutOfRange(k));
        }
        Matrix::new(k, k, data).map(Self)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, DenseError> {
        Self::new(rows.len(), rows.concat())
    }

    pub fn identity(k: usize) -> Result<Self, DenseError> {
        let mut data = vec![0.0; k * k];
        for i in 0..k {
            data[i * k + i] = 1.0;
        }
        Self::new(k, data)
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0.get(i, j)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn data(&self) -> &[f64] {
        self.0.data()
    }

    /// Multiplies column `j` by `signs[j]`.
    pub fn with_column_signs(&self, signs: &[f64]) -> Self {
        let k = self.dim();
        let data = (0..k * k).map(|p| self.0.data[p] * signs[p % k]).collect();
        Self(Matrix {
            rows: k,
            cols: k,
            data,
        })
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let k = self.dim();
        (0..k)
            .map(|i| (0..k).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let k = self.dim();
        (0..k)
            .map(|j| (0..k).map(|i| self.get(i, j) * x[i]).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

/// Partial-pivoting LU factors `P S = L U`, stored packed.
#[derive(Debug, Clone)]
pub struct LuFactors {
    k: usize,
    // Unit lower part below the diagonal, upper part on and above.
    packed: Vec<f64>,
    // Row `i` of `P S` is row `permutation[i]` of `S`.
    permutation: Vec<usize>,
    singular: bool,
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.k
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    pub fn lower(&self) -> Vec<f64> {
        let k = self.k;
        let mut l = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..i {
                l[i * k + j] = self.packed[i * k + j];
            }
            l[i * k + i] = 1.0;
        }
        l
    }

    pub fn upper(&self) -> Vec<f64> {
        let k = self.k;
        let mut u = vec![0.0; k * k];
        for i in 0..k {
            for j in i..k {
                u[i * k + j] = self.packed[i * k + j];
            }
        }
        u
    }
}

/// Factors `s` with partial pivoting.
///
/// The singular flag is set when some pivot has magnitude at most
/// `pivot_tol * max|s_ij|`; with `pivot_tol = 0` only exact zero pivots count.
pub fn lu_factor(s: &SquareMatrix, pivot_tol: f64) -> LuFactors {
    let k = s.dim();
    let mut a = s.data().to_vec();
    let mut perm: Vec<usize> = (0..k).collect();
    let threshold = pivot_tol.max(0.0) * s.max_abs();
    let mut singular = false;

    for col in 0..k {
        let mut piv = col;
        let mut best = a[col * k + col].abs();
        for r in col + 1..k {
            let v = a[r * k + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if piv != col {
            for j in 0..k {
                a.swap(col * k + j, piv * k + j);
            }
            perm.swap(col, piv);
        }
        let p = a[col * k + col];
        if p.abs() <= threshold {
            singular = true;
            continue;
        }
        for r in col + 1..k {
            let l = a[r * k + col] / p;
            a[r * k + col] = l;
            if l != 0.0 {
                for j in col + 1..k {
                    a[r * k + j] -= l * a[col * k + j];
                }
            }
        }
    }

    LuFactors {
        k,
        packed: a,
        permutation: perm,
        singular,
    }
}

/// Solves `S x = rhs`, or `S^T x = rhs` when `transpose` is set.
pub fn lu_solve(f: &LuFactors, rhs: &[f64], transpose: bool) -> Result<Vec<f64>, DenseError> {
    if f.singular {
        return Err(DenseError::Singular);
    }
    let k = f.k;
    if rhs.len() != k {
        return Err(DenseError::RhsLength {
            expected: k,
            got: rhs.len(),
        });
    }
    let a = &f.packed;
    if !transpose {
        // L z = P rhs, then U x = z.
        let mut x: Vec<f64> = f.permutation.iter().map(|&p| rhs[p]).collect();
        for i in 0..k {
            let mut acc = x[i];
            for j in 0..i {
                acc -= a[i * k + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..k).rev() {
            let mut acc = x[i];
            for j in i + 1..k {
                acc -= a[i * k + j] * x[j];
            }
            x[i] = acc / a[i * k + i];
        }
        Ok(x)
    } else {
        // U^T z = rhs, L^T w = z, x = P^T w.
        let mut w = rhs.to_vec();
        for i in 0..k {
            let mut acc = w[i];
            for j in 0..i {
                acc -= a[j * k + i] * w[j];
            }
            w[i] = acc / a[i * k + i];
        }
        for i in (0..k).rev() {
            let mut acc = w[i];
            for j in i + 1..k {
                acc -= a[j * k + i] * w[j];
            }
            w[i] = acc;
        }
        let mut x = vec![0.0; k];
        for (i, &p) in f.permutation.iter().enumerate() {
            x[p] = w[i];
        }
        Ok(x)
    }
}

/// Inverse of `s`, or `None` when the factorization flags it singular.
pub fn inverse(s: &SquareMatrix) -> Option<SquareMatrix> {
    let f = lu_factor(s, 0.0);
    if f.is_singular() {
        return None;
    }
    let k = s.dim();
    let mut data = vec![0.0; k * k];
    let mut e = vec![0.0; k];
    for j in 0..k {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = lu_solve(&f, &e, false).ok()?;
        for i in 0..k {
            data[i * k + j] = col[i];
        }
    }
    SquareMatrix::new(k, data).ok()
}

/// Operator norm from `l1` to `l2`: the largest Euclidean column norm.
pub fn norm_12(m: &Matrix) -> f64 {
    (0..m.cols()).map(|j| m.column_norm(j)).fold(0.0, f64::max)
}

/// Operator norm from `l2` to `l1`, `max_{u in {-1,1}^k} |M^T u|_2`.
///
/// Exhaustive over the `2^(k-1)` sign vectors with `u_0 = +1`.
pub fn norm_21(m: &SquareMatrix) -> Result<f64, DenseError> {
    let k = m.dim();
    if k > MAX_NORM21_DIM {
        return Err(DenseError::EnumerationTooLarge {
            dim: k,
            max: MAX_NORM21_DIM,
        });
    }
    let mut best = 0.0f64;
    let mut v = vec![0.0; k];
    for mask in 0u64..(1u64 << (k - 1)) {
        v.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..k {
            let row = &m.data()[i * k..(i + 1) * k];
            if i > 0 && (mask >> (i - 1)) & 1 == 1 {
                v.iter_mut().zip(row).for_each(|(acc, r)| *acc -= r);
            } else {
                v.iter_mut().zip(row).for_each(|(acc, r)| *acc += r);
            }
        }
        best = best.max(v.iter().map(|x| x * x).sum::<f64>());
    }
    Ok(best.sqrt())
}

/// Distance from `s` to the nearest singular matrix in the `l1 -> l2`
/// operator norm, `1 / |s^{-1}|_{2->1}`. Zero when `s` is singular.
pub fn rho_sing(s: &SquareMatrix) -> Result<f64, DenseError> {
    if s.dim() > MAX_NORM21_DIM {
        return Err(DenseError::EnumerationTooLarge {
            dim: s.dim(),
            max: MAX_NORM21_DIM,
        });
    }
    match inverse(s) {
        None => Ok(0.0),
        Some(inv) => Ok(1.0 / norm_21(&inv)?),
    }
}

fn det_small(a: &[f64], k: usize) -> f64 {
    match k {
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        _ => {
            // Laplace expansion along the first row.
            let mut total = 0.0;
            let mut minor = vec![0.0; (k - 1) * (k - 1)];
            for c in 0..k {
                let mut p = 0;
                for i in 1..k {
                    for j in 0..k {
                        if j != c {
                            minor[p] = a[i * k + j];
                            p += 1;
                        }
                    }
                }
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                total += sign * a[c] * det_small(&minor, k - 1);
            }
            total
        }
    }
}

/// Randomized upper estimate of [`rho_sing`] that never touches the
/// factorization or the sign enumeration.
///
/// Searches rank-one perturbations `sigma w v^T`. For fixed `(v, w)`,
/// `det(S + sigma w v^T)` is affine in `sigma`, so the root is read off two
/// cofactor determinants and the perturbation costs
/// `|sigma| |w|_2 |v|_inf`. Each restart runs a step-adapting random walk
/// over `(v, w)` and then polishes the result by alternating exact
/// maximization of `v^T adj(S) w` in `w` and in `v`.
pub fn rho_sing_oracle<R: Rng + ?Sized>(
    s: &SquareMatrix,
    iterations: usize,
    rng: &mut R,
) -> Result<f64, DenseError> {
    let k = s.dim();
    if k > MAX_ORACLE_DIM {
        return Err(DenseError::EnumerationTooLarge {
            dim: k,
            max: MAX_ORACLE_DIM,
        });
    }
    let base = s.data();
    let det0 = det_small(base, k);
    if det0 == 0.0 {
        return Ok(0.0);
    }

    let mut scratch = vec![0.0; k * k];
    let mut cost = |v: &[f64], w: &[f64]| -> f64 {
        for i in 0..k {
            for j in 0..k {
                scratch[i * k + j] = base[i * k + j] + w[i] * v[j];
            }
        }
        let slope = det_small(&scratch, k) - det0;
        if slope == 0.0 {
            return f64::INFINITY;
        }
        let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let vn = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        (det0 / slope).abs() * wn * vn
    };

    let adj = adjugate(base, k);
    let restarts = 16usize;
    let per_restart = (iterations / restarts).max(1);
    let mut best = f64::INFINITY;
    let gauss = |rng: &mut R| -> f64 {
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };

    for _ in 0..restarts {
        let mut v: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let mut w: Vec<f64> = (0..k).map(|_| gauss(rng)).collect();
        let mut cur = cost(&v, &w);
        let mut step = 0.5;
        let mut cand_v = v.clone();
        let mut cand_w = w.clone();
        for _ in 0..per_restart {
            for j in 0..k {
                cand_v[j] = (v[j] + step * gauss(rng)).clamp(-1.0, 1.0);
                cand_w[j] = w[j] + step * gauss(rng);
            }
            let c = cost(&cand_v, &cand_w);
            if c < cur {
                cur = c;
                std::mem::swap(&mut v, &mut cand_v);
                std::mem::swap(&mut w, &mut cand_w);
                let wn = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                w.iter_mut().for_each(|x| *x /= wn);
                step *= 1.5;
            } else {
                step *= 0.92;
            }
            if step < 1e-12 {
                step = 1e-3;
            }
        }
        // Polish: alternate the exact best w for fixed v and best vertex v for
        // fixed w, both read off the adjugate.
        for _ in 0..8 * k {
            let g = adj_t_mul(&adj, &v, k);
            let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if gn == 0.0 {
                break;
            }
            let new_w: Vec<f64> = g.iter().map(|x| x / gn).collect();
            let h = adj_mul(&adj, &new_w, k);
            let new_v: Vec<f64> = h
                .iter()
                .map(|x| if *x < 0.0 { -1.0 } else { 1.0 })
                .collect();
            let c = cost(&new_v, &new_w);
            if c < cur {
                cur = c;
                v = new_v;
                w = new_w;
            } else {
                break;
            }
        }
        best = best.min(cur);
    }
    Ok(best)
}

/// Adjugate of a `k x k` matrix by cofactors, row-major.
fn adjugate(a: &[f64], k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    let mut adj = vec![0.0; k * k];
    let mut minor = vec![0.0; (k - 1) * (k - 1)];
    for i in 0..k {
        for j in 0..k {
            let mut p = 0;
            for r in (0..k).filter(|&r| r != i) {
                for c in (0..k).filter(|&c| c != j) {
                    minor[p] = a[r * k + c];
                    p += 1;
                }
            }
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            adj[j * k + i] = sign * det_small(&minor, k - 1);
        }
    }
    adj
}

fn adj_mul(adj: &[f64], w: &[f64], k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| (0..k).map(|j| adj[i * k + j] * w[j]).sum())
        .collect()
}

fn adj_t_mul(adj: &[f64], v: &[f64], k: usize) -> Vec<f64> {
    (0..k)
        .map(|j| (0..k).map(|i| adj[i * k + j] * v[i]).sum())
        .collect()
}
