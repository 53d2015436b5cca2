//! Ricci operator of the homogeneous space attached to a bracket.
//!
//! The algebraic route assembles `Ric = M - B/2 - S(ad H|_p)` from the
//! moment part `M`, the Killing form `B` of `(g, mu)` restricted to p, and the
//! mean curvature vector `H`. For Lie groups (`q = 0`) an independent route
//! through the Levi-Civita connection is provided as an oracle.

use nalgebra::{DMatrix, DVector};

use crate::algebra::{ensure_member, LieBracket, DEFAULT_TOL};
use crate::error::{Error, Result};

/// Ricci operator on p and its constituents.
#[derive(Debug, Clone, PartialEq)]
pub struct RicciData {
    pub ric: DMatrix<f64>,
    pub scalar: f64,
    pub ric_sq_trace: f64,
    pub killing_p: DMatrix<f64>,
    pub mean_curvature: DVector<f64>,
    pub moment_part: DMatrix<f64>,
}

impl RicciData {
    /// Frobenius norm of the Ricci operator.
    pub fn norm(&self) -> f64 {
        self.ric.norm()
    }

    /// Eigenvalues of the Ricci operator in ascending order.
    pub fn sorted_eigenvalues(&self) -> Vec<f64> {
        sorted_symmetric_eigenvalues(&self.ric)
    }
}

pub(crate) fn sorted_symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut eig: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// `H` in p with `<H, X> = tr ad_mu X`. The trace runs over all of g; when
/// (h1) holds the k-block contributes nothing, so this equals the trace over p.
pub fn mean_curvature(mu: &LieBracket) -> DVector<f64> {
    let dims = mu.dims();
    let q = dims.q();
    let d = dims.total();
    DVector::from_fn(dims.n(), |x, _| (0..d).map(|k| mu.get(q + x, k, k)).sum())
}

/// `B(X, Y) = tr(ad X ad Y)` for X, Y in the p-basis, ad acting on all of g.
pub fn killing_form_p(mu: &LieBracket) -> DMatrix<f64> {
    let dims = mu.dims();
    let (q, n, d) = (dims.q(), dims.n(), dims.total());
    let mut b = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in x..n {
            let mut s = 0.0;
            for k in 0..d {
                for l in 0..d {
                    s += mu.get(q + x, l, k) * mu.get(q + y, k, l);
                }
            }
            b[(x, y)] = s;
            b[(y, x)] = s;
        }
    }
    b
}

/// The quadratic part
/// `M(X,Y) = -1/2 sum <mu_p(X,e_i),e_j><mu_p(Y,e_i),e_j> + 1/4 sum <mu_p(e_i,e_j),X><mu_p(e_i,e_j),Y>`
/// with all sums over ordered pairs of the p-basis.
pub fn moment_part(mu: &LieBracket) -> DMatrix<f64> {
    let dims = mu.dims();
    let (q, n) = (dims.q(), dims.n());
    let mut m = DMatrix::zeros(n, n);
    for x in 0..n {
        for y in x..n {
            let mut first = 0.0;
            let mut second = 0.0;
            for i in 0..n {
                for j in 0..n {
                    first += mu.get(q + x, q + i, q + j) * mu.get(q + y, q + i, q + j);
                    second += mu.get(q + i, q + j, q + x) * mu.get(q + i, q + j, q + y);
                }
            }
            let v = -0.5 * first + 0.25 * second;
            m[(x, y)] = v;
            m[(y, x)] = v;
        }
    }
    m
}

/// Symmetric part of `ad_mu H` restricted and projected to p.
fn symmetric_ad(mu: &LieBracket, h: &DVector<f64>) -> DMatrix<f64> {
    let dims = mu.dims();
    let (q, n) = (dims.q(), dims.n());
    // a[(y, x)] = <mu(H, e_x), e_y>
    let a = DMatrix::from_fn(n, n, |y, x| {
        (0..n).map(|z| h[z] * mu.get(q + z, q + x, q + y)).sum::<f64>()
    });
    (&a + a.transpose()) * 0.5
}

/// Ricci data without the membership check. Meaningful only for brackets in
/// the homogeneous variety; callers that already validated `mu` use this.
pub fn ricci_unchecked(mu: &LieBracket) -> RicciData {
    let moment = moment_part(mu);
    let killing = killing_form_p(mu);
    let h = mean_curvature(mu);
    let ric = &moment - &killing * 0.5 - symmetric_ad(mu, &h);
    let scalar = ric.trace();
    let ric_sq_trace = ric.iter().map(|v| v * v).sum();
    RicciData {
        ric,
        scalar,
        ric_sq_trace,
        killing_p: killing,
        mean_curvature: h,
        moment_part: moment,
    }
}

/// Ricci operator of the homogeneous space of `mu`; rejects brackets that
/// fail the membership conditions at the default tolerance.
pub fn ricci_operator(mu: &LieBracket) -> Result<RicciData> {
    ensure_member(mu, DEFAULT_TOL)?;
    Ok(ricci_unchecked(mu))
}

/// Upper bound `C1` with `|Ric_mu| <= C1 |mu|^2` (Frobenius norms), valid for
/// every bracket on a space of total dimension `d`: the moment part
/// contributes 3/4, the Killing term 1/2 and the mean-curvature term `sqrt(d)`.
pub fn ricci_quadratic_constant(d: usize) -> f64 {
    1.25 + (d as f64).sqrt()
}

/// Curvature computed through the Levi-Civita connection of the
/// left-invariant metric. Independent of the algebraic formula.
#[derive(Debug, Clone, PartialEq)]
pub struct KoszulCurvature {
    pub ric: DMatrix<f64>,
    pub scalar: f64,
    pub ric_sq_trace: f64,
    /// Norm of the full curvature tensor, `sqrt(sum R_ijkl^2)`.
    pub riem_norm: f64,
}

pub fn koszul_ricci_oracle(mu: &LieBracket) -> Result<KoszulCurvature> {
    let dims = mu.dims();
    if dims.q() != 0 {
        return Err(Error::IsotropyNotSupported { q: dims.q() });
    }
    let n = dims.n();
    // nabla[i][(k, j)] = <nabla_{e_i} e_j, e_k>
    let nabla: Vec<DMatrix<f64>> = (0..n)
        .map(|i| {
            DMatrix::from_fn(n, n, |k, j| {
                0.5 * (mu.get(i, j, k) - mu.get(j, k, i) + mu.get(k, i, j))
            })
        })
        .collect();

    // curvature[i][j] is the matrix of R(e_i, e_j).
    let mut curvature = vec![vec![DMatrix::zeros(n, n); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut r = &nabla[i] * &nabla[j] - &nabla[j] * &nabla[i];
            for (l, nl) in nabla.iter().enumerate() {
                let c = mu.get(i, j, l);
                if c != 0.0 {
                    r -= nl * c;
                }
            }
            curvature[i][j] = r;
        }
    }

    let mut riem_sq = 0.0;
    for row in &curvature {
        for r in row {
            riem_sq += r.iter().map(|v| v * v).sum::<f64>();
        }
    }

    // Ric(Y, Z) = sum_i <R(e_i, Y) Z, e_i>
    let ric = DMatrix::from_fn(n, n, |y, z| (0..n).map(|i| curvature[i][y][(i, z)]).sum());
    let scalar = ric.trace();
    let ric_sq_trace = ric.iter().map(|v| v * v).sum();
    Ok(KoszulCurvature {
        ric,
        scalar,
        ric_sq_trace,
        riem_norm: riem_sq.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Dimensions;
    use approx::assert_relative_eq;

    fn dims3() -> Dimensions {
        Dimensions::group(3).unwrap()
    }

    fn heisenberg() -> LieBracket {
        LieBracket::from_triples(dims3(), &[(0, 1, 2, 1.0)]).unwrap()
    }

    fn su2() -> LieBracket {
        LieBracket::from_triples(dims3(), &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)])
            .unwrap()
    }

    fn hyperbolic3() -> LieBracket {
        LieBracket::from_triples(dims3(), &[(2, 0, 0, 1.0), (2, 1, 1, 1.0)]).unwrap()
    }

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(v))
    }

    fn close(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn mean_curvature_examples() {
        assert_eq!(mean_curvature(&heisenberg()).amax(), 0.0);
        assert_eq!(mean_curvature(&su2()).amax(), 0.0);
        assert_eq!(
            mean_curvature(&hyperbolic3()),
            DVector::from_column_slice(&[0.0, 0.0, 2.0])
        );
        assert_eq!(mean_curvature(&LieBracket::zero(dims3())).amax(), 0.0);
    }

    #[test]
    fn killing_form_examples() {
        assert!(close(&killing_form_p(&su2()), &diag(&[-2.0, -2.0, -2.0]), 0.0));
        assert!(close(&killing_form_p(&heisenberg()), &DMatrix::zeros(3, 3), 0.0));
        assert!(close(&killing_form_p(&hyperbolic3()), &diag(&[0.0, 0.0, 2.0]), 0.0));
    }

    #[test]
    fn moment_part_examples() {
        assert!(close(&moment_part(&heisenberg()), &diag(&[-0.5, -0.5, 0.5]), 0.0));
        assert!(close(&moment_part(&LieBracket::zero(dims3())), &DMatrix::zeros(3, 3), 0.0));
        assert!(close(&moment_part(&hyperbolic3()), &diag(&[0.0, 0.0, -1.0]), 0.0));
        // Brute force on su(2): first term -1/2 * 2 = -1, second 1/4 * 2 = 1/2.
        let m = moment_part(&su2());
        assert!(close(&m, &diag(&[-0.5, -0.5, -0.5]), 0.0));
        // Bi-invariant check: M - B/2 = Ric = I/2.
        let ric = &m - killing_form_p(&su2()) * 0.5;
        assert!(close(&ric, &diag(&[0.5, 0.5, 0.5]), 1e-15));
    }

    #[test]
    fn ricci_examples() {
        let h = ricci_operator(&heisenberg()).unwrap();
        assert!(close(&h.ric, &diag(&[-0.5, -0.5, 0.5]), 1e-15));
        assert_relative_eq!(h.scalar, -0.5);
        assert_relative_eq!(h.ric_sq_trace, 0.75);

        let s = ricci_operator(&su2()).unwrap();
        assert!(close(&s.ric, &diag(&[0.5, 0.5, 0.5]), 1e-15));
        assert_relative_eq!(s.scalar, 1.5);

        let y = ricci_operator(&hyperbolic3()).unwrap();
        assert!(close(&y.ric, &diag(&[-2.0, -2.0, -2.0]), 1e-12));
        assert_relative_eq!(y.scalar, -6.0);
    }

    #[test]
    fn round_two_sphere_with_isotropy() {
        let mu = LieBracket::from_triples(
            Dimensions::new(1, 2).unwrap(),
            &[(0, 1, 2, 1.0), (0, 2, 1, -1.0), (1, 2, 0, 1.0)],
        )
        .unwrap();
        let r = ricci_operator(&mu).unwrap();
        // Gaussian curvature 1: Ric = I, R = 2.
        assert!(close(&r.ric, &diag(&[1.0, 1.0]), 1e-15));
        assert_relative_eq!(r.scalar, 2.0);
        assert_eq!(r.mean_curvature.amax(), 0.0);
    }

    #[test]
    fn ricci_rejects_non_members() {
        let mu = LieBracket::from_triples(
            dims3(),
            &[(0, 1, 2, 1.0), (0, 1, 0, 0.5), (1, 2, 1, 1.0)],
        )
        .unwrap();
        assert!(matches!(ricci_operator(&mu), Err(Error::NotMember { .. })));
    }

    #[test]
    fn koszul_oracle_matches_closed_forms() {
        let k = koszul_ricci_oracle(&su2()).unwrap();
        assert!(close(&k.ric, &diag(&[0.5, 0.5, 0.5]), 1e-15));
        // Constant sectional curvature 1/4 in dimension 3: |Riem|^2 = 12 K^2.
        assert_relative_eq!(k.riem_norm, (12.0f64).sqrt() / 4.0, epsilon = 1e-14);

        let k = koszul_ricci_oracle(&heisenberg()).unwrap();
        assert!(close(&k.ric, &diag(&[-0.5, -0.5, 0.5]), 1e-15));

        let flat = koszul_ricci_oracle(&LieBracket::zero(dims3())).unwrap();
        assert_eq!(flat.ric.amax(), 0.0);
        assert_eq!(flat.riem_norm, 0.0);

        let sphere = LieBracket::zero(Dimensions::new(1, 2).unwrap());
        assert!(matches!(
            koszul_ricci_oracle(&sphere),
            Err(Error::IsotropyNotSupported { q: 1 })
        ));
    }

    #[test]
    fn ricci_bound_constant_holds_on_reference_brackets() {
        for mu in [heisenberg(), su2(), hyperbolic3()] {
            let r = ricci_unchecked(&mu);
            let norm = crate::algebra::bracket_norm(&mu);
            assert!(r.norm() <= ricci_quadratic_constant(3) * norm * norm);
        }
    }
}
