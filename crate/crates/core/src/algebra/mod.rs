//! Skew-symmetric brackets on g = k ⊕ p stored as dense structure-constant
//! tensors, together with the membership conditions for the space of
//! homogeneous spaces and the natural GL(g) action on brackets.
//!
//! Basis convention: indices `0..q` span the isotropy subspace k and
//! `q..q+n` span p. The background inner product is the identity in this
//! basis, so "changing the metric" always means changing the bracket.

pub mod random;

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;

use crate::error::{Condition, Error, Result};

/// Default tolerance for residual checks.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Isotropy dimension `q` and space dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dimensions {
    q: usize,
    n: usize,
}

impl Dimensions {
    pub fn new(q: usize, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDimensions(
                "space dimension n must be at least 1".into(),
            ));
        }
        Ok(Self { q, n })
    }

    /// Lie group case, no isotropy.
    pub fn group(n: usize) -> Result<Self> {
        Self::new(0, n)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Total dimension `q + n`.
    pub fn total(&self) -> usize {
        self.q + self.n
    }

    /// Indices of the p-basis inside the full basis.
    pub fn p_range(&self) -> std::ops::Range<usize> {
        self.q..self.q + self.n
    }

    pub fn k_range(&self) -> std::ops::Range<usize> {
        0..self.q
    }
}

/// An endomorphism of p, extended by zero on k whenever it acts on g.
#[derive(Debug, Clone, PartialEq)]
pub struct EndomorphismOnP(pub DMatrix<f64>);

impl EndomorphismOnP {
    pub fn new(a: DMatrix<f64>) -> Self {
        Self(a)
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
            diag,
        )))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// The block matrix diag(0, a) on g.
    pub fn extend_to(&self, dims: Dimensions) -> Result<DMatrix<f64>> {
        let n = dims.n();
        if self.0.nrows() != n || self.0.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.0.nrows(),
            });
        }
        let d = dims.total();
        let q = dims.q();
        let mut full = DMatrix::zeros(d, d);
        full.view_mut((q, q), (n, n)).copy_from(&self.0);
        Ok(full)
    }
}

/// A skew-symmetric bilinear bracket `mu` on g, stored as
/// `c[i][j][k] = <mu(X_i, X_j), X_k>` in the fixed orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct LieBracket {
    dims: Dimensions,
    c: Vec<f64>,
}

impl LieBracket {
    pub fn zero(dims: Dimensions) -> Self {
        let d = dims.total();
        Self {
            dims,
            c: vec![0.0; d * d * d],
        }
    }

    /// Builds a bracket from `(i, j, k, value)` entries meaning
    /// `mu(e_i, e_j) = value * e_k + ...` (0-indexed). The `(j, i)` entry is
    /// mirrored automatically; repeated entries accumulate.
    pub fn from_triples(dims: Dimensions, triples: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut mu = Self::zero(dims);
        let d = dims.total();
        for &(i, j, k, v) in triples {
            if i >= d || j >= d || k >= d {
                return Err(Error::IndexOutOfRange { i, j, k, dim: d });
            }
            if i == j {
                if v != 0.0 {
                    return Err(Error::NotSkew { i });
                }
                continue;
            }
            let idx = mu.index(i, j, k);
            mu.c[idx] += v;
            let idx = mu.index(j, i, k);
            mu.c[idx] -= v;
        }
        Ok(mu)
    }

    /// Builds a bracket from a dense `d^3` tensor. Only the `i < j` entries
    /// are read; the rest is mirrored, so the result is skew by construction.
    pub fn from_tensor(dims: Dimensions, tensor: &[f64]) -> Result<Self> {
        let d = dims.total();
        if tensor.len() != d * d * d {
            return Err(Error::DimensionMismatch {
                expected: d * d * d,
                got: tensor.len(),
            });
        }
        let mut c = vec![0.0; d * d * d];
        for i in 0..d {
            for j in (i + 1)..d {
                for k in 0..d {
                    let v = tensor[(i * d + j) * d + k];
                    c[(i * d + j) * d + k] = v;
                    c[(j * d + i) * d + k] = -v;
                }
            }
        }
        Ok(Self { dims, c })
    }

    #[inline]
    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        let d = self.dims.total();
        (i * d + j) * d + k
    }

    pub fn dims(&self) -> Dimensions {
        self.dims
    }

    /// Total dimension `q + n`.
    pub fn dim(&self) -> usize {
        self.dims.total()
    }

    /// `<mu(e_i, e_j), e_k>`.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c[self.index(i, j, k)]
    }

    /// Flat row-major view of the tensor.
    pub fn as_slice(&self) -> &[f64] {
        &self.c
    }

    pub fn is_zero(&self) -> bool {
        self.c.iter().all(|&v| v == 0.0)
    }

    /// `mu(x, y)` for coordinate vectors `x, y` in the full basis.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for (i, &xi) in x.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            for (j, &yj) in y.iter().enumerate() {
                let w = xi * yj;
                if w == 0.0 {
                    continue;
                }
                let base = (i * d + j) * d;
                for (o, c) in out.iter_mut().zip(&self.c[base..base + d]) {
                    *o += w * c;
                }
            }
        }
        out
    }

    /// Matrix of `ad_mu(e_i)` on g: column `j` holds `mu(e_i, e_j)`.
    pub fn ad_matrix(&self, i: usize) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |k, j| self.get(i, j, k))
    }

    /// Matrix of `ad_mu(e_i)` restricted to p and projected back onto p.
    pub fn ad_on_p(&self, i: usize) -> DMatrix<f64> {
        let q = self.dims.q();
        let n = self.dims.n();
        DMatrix::from_fn(n, n, |y, x| self.get(i, q + x, q + y))
    }

    /// Componentwise `c * mu`.
    pub fn scale(&self, c: f64) -> Self {
        Self {
            dims: self.dims,
            c: self.c.iter().map(|v| c * v).collect(),
        }
    }

    /// The natural action `(h.mu)(x, y) = h mu(h^-1 x, h^-1 y)` of an
    /// invertible `h` on g.
    pub fn act(&self, h: &DMatrix<f64>) -> Result<Self> {
        let d = self.dim();
        if h.nrows() != d || h.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: h.nrows(),
            });
        }
        let h_inv = h
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotApplicable("group action needs an invertible matrix".into()))?;
        Ok(self.act_with_inverse(h, &h_inv))
    }

    pub(crate) fn act_with_inverse(&self, h: &DMatrix<f64>, h_inv: &DMatrix<f64>) -> Self {
        let d = self.dim();
        // t1[a][b][k] = sum_ij hinv[i][a] hinv[j][b] c[i][j][k], then apply h on k.
        let mut stage = vec![0.0; d * d * d];
        for a in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut s = 0.0;
                    for i in 0..d {
                        s += h_inv[(i, a)] * self.get(i, j, k);
                    }
                    stage[(a * d + j) * d + k] = s;
                }
            }
        }
        let mut stage2 = vec![0.0; d * d * d];
        for a in 0..d {
            for b in 0..d {
                for k in 0..d {
                    let mut s = 0.0;
                    for j in 0..d {
                        s += h_inv[(j, b)] * stage[(a * d + j) * d + k];
                    }
                    stage2[(a * d + b) * d + k] = s;
                }
            }
        }
        let mut out = vec![0.0; d * d * d];
        for a in 0..d {
            for b in 0..d {
                for m in 0..d {
                    let mut s = 0.0;
                    for k in 0..d {
                        s += h[(m, k)] * stage2[(a * d + b) * d + k];
                    }
                    out[(a * d + b) * d + m] = s;
                }
            }
        }
        // Exactly skew by mirroring.
        LieBracket::from_tensor(self.dims, &out).expect("same shape")
    }
}

impl Add for &LieBracket {
    type Output = LieBracket;

    fn add(self, rhs: &LieBracket) -> LieBracket {
        assert_eq!(self.dims, rhs.dims, "bracket dimensions differ");
        LieBracket {
            dims: self.dims,
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &LieBracket {
    type Output = LieBracket;

    fn sub(self, rhs: &LieBracket) -> LieBracket {
        assert_eq!(self.dims, rhs.dims, "bracket dimensions differ");
        LieBracket {
            dims: self.dims,
            c: self.c.iter().zip(&rhs.c).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &LieBracket {
    type Output = LieBracket;

    fn neg(self) -> LieBracket {
        self.scale(-1.0)
    }
}

impl Mul<&LieBracket> for f64 {
    type Output = LieBracket;

    fn mul(self, rhs: &LieBracket) -> LieBracket {
        rhs.scale(self)
    }
}

/// `|mu| = sqrt(sum_{i,j,k} c[i][j][k]^2)` over ordered index pairs.
pub fn bracket_norm(mu: &LieBracket) -> f64 {
    mu.c.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `<mu, lambda>` on the space of brackets.
pub fn bracket_inner(mu: &LieBracket, lambda: &LieBracket) -> f64 {
    mu.c.iter().zip(&lambda.c).map(|(a, b)| a * b).sum()
}

pub fn scale_bracket(mu: &LieBracket, c: f64) -> LieBracket {
    mu.scale(c)
}

/// `pi(diag(0, a)) mu = A mu(.,.) - mu(A.,.) - mu(.,A.)`.
pub fn pi_action(a: &EndomorphismOnP, mu: &LieBracket) -> Result<LieBracket> {
    let full = a.extend_to(mu.dims())?;
    pi_action_full(&full, mu)
}

/// The representation `pi` for an arbitrary endomorphism `a` of g.
pub fn pi_action_full(a: &DMatrix<f64>, mu: &LieBracket) -> Result<LieBracket> {
    let d = mu.dim();
    if a.nrows() != d || a.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: a.nrows(),
        });
    }
    let mut out = vec![0.0; d * d * d];
    for i in 0..d {
        for j in (i + 1)..d {
            for k in 0..d {
                let mut s = 0.0;
                for l in 0..d {
                    s += a[(k, l)] * mu.get(i, j, l);
                    s -= a[(l, i)] * mu.get(l, j, k);
                    s -= a[(l, j)] * mu.get(i, l, k);
                }
                out[(i * d + j) * d + k] = s;
            }
        }
    }
    LieBracket::from_tensor(mu.dims(), &out)
}

/// Residuals of the membership conditions (h1), (h3), (h4) and Jacobi.
/// Condition (h2), closedness of the isotropy subgroup, is not decidable from
/// structure constants and only travels as a provenance note.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub jacobi_residual: f64,
    pub h1_residual: f64,
    pub h3_residual: f64,
    pub h4_kernel_dim: usize,
    pub h2_note: String,
}

impl ConditionReport {
    /// First failed condition. Residuals are compared against `tol` scaled by
    /// the bracket size: the Jacobiator is quadratic in mu, (h1) and (h3)
    /// are linear, so thresholds are `tol * max(1, |mu|)^2` and
    /// `tol * max(1, |mu|)`.
    pub fn first_violation(&self, norm: f64, tol: f64) -> Option<(Condition, f64)> {
        let s = norm.max(1.0);
        if self.jacobi_residual > tol * s * s {
            return Some((Condition::Jacobi, self.jacobi_residual));
        }
        if self.h1_residual > tol * s {
            return Some((Condition::H1, self.h1_residual));
        }
        if self.h3_residual > tol * s {
            return Some((Condition::H3, self.h3_residual));
        }
        if self.h4_kernel_dim > 0 {
            return Some((Condition::H4, self.h4_kernel_dim as f64));
        }
        None
    }
}

/// Max-norm of the Jacobiator `mu(mu(x,y),z) + mu(mu(y,z),x) + mu(mu(z,x),y)`
/// over basis triples.
pub fn jacobi_residual(mu: &LieBracket) -> f64 {
    let d = mu.dim();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in (i + 1)..d {
            for k in (j + 1)..d {
                for m in 0..d {
                    let mut s = 0.0;
                    for l in 0..d {
                        s += mu.get(i, j, l) * mu.get(l, k, m)
                            + mu.get(j, k, l) * mu.get(l, i, m)
                            + mu.get(k, i, l) * mu.get(l, j, m);
                    }
                    worst = worst.max(s.abs());
                }
            }
        }
    }
    worst
}

fn h1_residual(mu: &LieBracket) -> f64 {
    let dims = mu.dims();
    let mut worst = 0.0f64;
    // mu(k, k) must lie in k.
    for a in dims.k_range() {
        for b in dims.k_range() {
            for l in dims.p_range() {
                worst = worst.max(mu.get(a, b, l).abs());
            }
        }
    }
    // mu(k, p) must lie in p.
    for a in dims.k_range() {
        for x in dims.p_range() {
            for b in dims.k_range() {
                worst = worst.max(mu.get(a, x, b).abs());
            }
        }
    }
    worst
}

fn h3_residual(mu: &LieBracket) -> f64 {
    let mut worst = 0.0f64;
    for a in mu.dims().k_range() {
        let ad = mu.ad_on_p(a);
        let sym = &ad + ad.transpose();
        worst = worst.max(sym.amax());
    }
    worst
}

fn h4_kernel_dim(mu: &LieBracket, tol: f64) -> usize {
    let dims = mu.dims();
    let (q, n) = (dims.q(), dims.n());
    if q == 0 {
        return 0;
    }
    // Columns: Z -> ad Z|_p flattened (component along p only; (h1) handles the rest).
    let mut map = DMatrix::zeros(n * dims.total(), q);
    for a in 0..q {
        for x in 0..n {
            for k in 0..dims.total() {
                map[(x * dims.total() + k, a)] = mu.get(a, q + x, k);
            }
        }
    }
    let scale = map.amax().max(1.0);
    let rank = map.svd(false, false).rank(tol * scale);
    q - rank
}

pub fn check_conditions(mu: &LieBracket, tol: f64) -> ConditionReport {
    ConditionReport {
        jacobi_residual: jacobi_residual(mu),
        h1_residual: h1_residual(mu),
        h3_residual: h3_residual(mu),
        h4_kernel_dim: h4_kernel_dim(mu, tol),
        h2_note: "not computed: closedness of the isotropy subgroup is a group-level property"
            .to_string(),
    }
}

/// Fails with the first violated condition at tolerance `tol`.
pub fn ensure_member(mu: &LieBracket, tol: f64) -> Result<ConditionReport> {
    let report = check_conditions(mu, tol);
    match report.first_violation(bracket_norm(mu), tol) {
        Some((condition, residual)) => Err(Error::NotMember {
            condition,
            residual,
        }),
        None => Ok(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn heisenberg() -> LieBracket {
        LieBracket::from_triples(Dimensions::group(3).unwrap(), &[(0, 1, 2, 1.0)]).unwrap()
    }

    fn su2() -> LieBracket {
        LieBracket::from_triples(
            Dimensions::group(3).unwrap(),
            &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)],
        )
        .unwrap()
    }

    fn sphere2() -> LieBracket {
        LieBracket::from_triples(
            Dimensions::new(1, 2).unwrap(),
            &[(0, 1, 2, 1.0), (0, 2, 1, -1.0), (1, 2, 0, 1.0)],
        )
        .unwrap()
    }

    // Independent summation over ordered pairs.
    fn norm_by_loops(mu: &LieBracket) -> f64 {
        let d = mu.dim();
        let mut s = 0.0;
        for i in 0..d {
            for j in 0..d {
                let v = mu.apply(
                    &(0..d).map(|a| (a == i) as u8 as f64).collect::<Vec<_>>(),
                    &(0..d).map(|a| (a == j) as u8 as f64).collect::<Vec<_>>(),
                );
                s += v.iter().map(|x| x * x).sum::<f64>();
            }
        }
        s.sqrt()
    }

    #[test]
    fn norms_of_reference_brackets() {
        let zero = LieBracket::zero(Dimensions::group(3).unwrap());
        assert_eq!(bracket_norm(&zero), 0.0);
        assert_relative_eq!(bracket_norm(&heisenberg()), 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(norm_by_loops(&heisenberg()), 2f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(bracket_norm(&su2()), 6f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(norm_by_loops(&su2()), 6f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(
            bracket_norm(&scale_bracket(&heisenberg(), 2.0)),
            2.0 * 2f64.sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn construction_is_skew() {
        let mu = heisenberg();
        assert_eq!(mu.get(0, 1, 2), 1.0);
        assert_eq!(mu.get(1, 0, 2), -1.0);
        assert!(matches!(
            LieBracket::from_triples(mu.dims(), &[(1, 1, 0, 2.0)]),
            Err(Error::NotSkew { i: 1 })
        ));
        assert!(matches!(
            LieBracket::from_triples(mu.dims(), &[(0, 3, 0, 2.0)]),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn scale_identities() {
        let mu = su2();
        assert_eq!(scale_bracket(&mu, 1.0), mu);
        assert!(scale_bracket(&mu, 0.0).is_zero());
    }

    #[test]
    fn pi_identity_negates() {
        for mu in [heisenberg(), su2()] {
            let out = pi_action(&EndomorphismOnP::identity(3), &mu).unwrap();
            assert_eq!(out, mu.scale(-1.0));
        }
    }

    #[test]
    fn pi_on_zero_bracket() {
        let a = EndomorphismOnP::new(DMatrix::from_fn(3, 3, |i, j| (i * 3 + j) as f64));
        let zero = LieBracket::zero(Dimensions::group(3).unwrap());
        assert!(pi_action(&a, &zero).unwrap().is_zero());
    }

    #[test]
    fn pi_diagonal_on_heisenberg() {
        let (r, s) = (0.7, -1.3);
        let out = pi_action(&EndomorphismOnP::from_diagonal(&[r, r, s]), &heisenberg()).unwrap();
        let expected =
            LieBracket::from_triples(Dimensions::group(3).unwrap(), &[(0, 1, 2, s - 2.0 * r)])
                .unwrap();
        assert!((&out - &expected).as_slice().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn pi_dimension_mismatch() {
        let err = pi_action(&EndomorphismOnP::identity(2), &heisenberg()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn pi_leaves_isotropy_block_alone() {
        // On S^2 = SU(2)/U(1), pi(diag(0, I)) fixes mu(Z, p) and doubles down on mu(p, p).
        let out = pi_action(&EndomorphismOnP::identity(2), &sphere2()).unwrap();
        assert_eq!(out.get(0, 1, 2), 0.0);
        assert_eq!(out.get(0, 2, 1), 0.0);
        assert_eq!(out.get(1, 2, 0), -2.0);
    }

    #[test]
    fn conditions_on_reference_brackets() {
        let r = check_conditions(&heisenberg(), DEFAULT_TOL);
        assert_eq!(r.jacobi_residual, 0.0);
        assert_eq!(r.h1_residual, 0.0);
        assert_eq!(r.h3_residual, 0.0);
        assert_eq!(r.h4_kernel_dim, 0);

        let r = check_conditions(&sphere2(), DEFAULT_TOL);
        assert_eq!(r.jacobi_residual, 0.0);
        assert_eq!(r.h1_residual, 0.0);
        assert_eq!(r.h3_residual, 0.0);
        assert_eq!(r.h4_kernel_dim, 0);
        assert!(ensure_member(&sphere2(), DEFAULT_TOL).is_ok());
    }

    #[test]
    fn perturbing_heisenberg_along_e1_stays_lie() {
        // mu(e1,e2) = e3 + 0.5 e1 still satisfies Jacobi: every Jacobiator term
        // passes through mu(e3, .) or mu(e1, e1).
        let mu = LieBracket::from_triples(
            Dimensions::group(3).unwrap(),
            &[(0, 1, 2, 1.0), (0, 1, 0, 0.5)],
        )
        .unwrap();
        assert_eq!(jacobi_residual(&mu), 0.0);
    }

    #[test]
    fn jacobi_violation_is_detected() {
        // Adding mu(e2,e3) = e2 on top breaks it: J(e1,e2,e3) = -e3 - 0.5 e1.
        let mu = LieBracket::from_triples(
            Dimensions::group(3).unwrap(),
            &[(0, 1, 2, 1.0), (0, 1, 0, 0.5), (1, 2, 1, 1.0)],
        )
        .unwrap();
        let r = check_conditions(&mu, DEFAULT_TOL);
        assert!(r.jacobi_residual > 0.1, "{r:?}");
        let err = ensure_member(&mu, DEFAULT_TOL).unwrap_err();
        assert!(matches!(
            err,
            Error::NotMember {
                condition: Condition::Jacobi,
                ..
            }
        ));
    }

    #[test]
    fn isotropy_failures() {
        let dims = Dimensions::new(1, 2).unwrap();
        // ad Z symmetric on p violates (h3).
        let mu = LieBracket::from_triples(dims, &[(0, 1, 2, 1.0), (0, 2, 1, 1.0)]).unwrap();
        assert!(check_conditions(&mu, DEFAULT_TOL).h3_residual > 0.0);
        // mu(Z, e1) with a k-component violates (h1).
        let mu = LieBracket::from_triples(dims, &[(0, 1, 0, 1.0)]).unwrap();
        assert!(check_conditions(&mu, DEFAULT_TOL).h1_residual > 0.0);
        // Z acting trivially on p violates (h4).
        let mu = LieBracket::zero(dims);
        assert_eq!(check_conditions(&mu, DEFAULT_TOL).h4_kernel_dim, 1);
    }

    #[test]
    fn orthogonal_action_preserves_norm() {
        let theta: f64 = 0.4;
        let rot = DMatrix::from_row_slice(
            3,
            3,
            &[theta.cos(), -theta.sin(), 0.0, theta.sin(), theta.cos(), 0.0, 0.0, 0.0, 1.0],
        );
        let mu = su2().act(&rot).unwrap();
        assert_relative_eq!(bracket_norm(&mu), 6f64.sqrt(), epsilon = 1e-14);
        assert!(jacobi_residual(&mu) < 1e-14);
    }
}
