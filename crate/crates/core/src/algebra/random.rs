//! Random Lie brackets with trivial isotropy, built so that the Jacobi
//! identity holds by construction.

use nalgebra::DMatrix;
use rand::Rng;

use super::{Dimensions, LieBracket};

/// A 2-step nilpotent bracket on R^n: p splits as V1 ⊕ V2 with
/// `mu(V1, V1) ⊆ V2` random and everything else zero. Requires `n >= 3`.
pub fn two_step_nilpotent<R: Rng + ?Sized>(rng: &mut R, n: usize) -> LieBracket {
    assert!(n >= 3, "2-step nilpotent brackets need n >= 3");
    let center = rng.gen_range(1..=(n - 2));
    let generators = n - center;
    let dims = Dimensions::group(n).expect("n >= 3");
    let mut triples = Vec::new();
    for i in 0..generators {
        for j in (i + 1)..generators {
            for k in generators..n {
                triples.push((i, j, k, rng.gen_range(-2.0..2.0)));
            }
        }
    }
    LieBracket::from_triples(dims, &triples).expect("indices in range")
}

/// An almost-abelian bracket `R ⋉_A R^{n-1}`: `mu(e_n, e_i) = A e_i` for a
/// random matrix `A`, all other brackets zero. Requires `n >= 2`.
pub fn almost_abelian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> LieBracket {
    assert!(n >= 2, "almost-abelian brackets need n >= 2");
    let dims = Dimensions::group(n).expect("n >= 2");
    let last = n - 1;
    let mut triples = Vec::new();
    for i in 0..last {
        for j in 0..last {
            triples.push((last, i, j, rng.gen_range(-1.5..1.5)));
        }
    }
    LieBracket::from_triples(dims, &triples).expect("indices in range")
}

/// A random invertible matrix near the identity scale.
pub fn invertible_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    loop {
        let m = DMatrix::from_fn(d, d, |i, j| {
            let base: f64 = if i == j { 1.0 } else { 0.0 };
            base + rng.gen_range(-0.6..0.6)
        });
        if m.determinant().abs() > 0.2 {
            return m;
        }
    }
}

/// A random orthogonal matrix (QR of a Gaussian-ish matrix).
pub fn orthogonal_matrix<R: Rng + ?Sized>(rng: &mut R, d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    m.qr().q()
}

/// su(2) with structure constants moved by a random element of GL(3).
pub fn deformed_su2<R: Rng + ?Sized>(rng: &mut R) -> LieBracket {
    let dims = Dimensions::group(3).expect("n = 3");
    let su2 = LieBracket::from_triples(dims, &[(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)])
        .expect("indices in range");
    su2.act(&invertible_matrix(rng, 3)).expect("invertible")
}

/// A random Lie bracket on R^n drawn from the families above.
pub fn lie_bracket<R: Rng + ?Sized>(rng: &mut R, n: usize) -> LieBracket {
    let choice = if n == 3 { rng.gen_range(0..3) } else { rng.gen_range(0..2) };
    match choice {
        0 if n >= 3 => two_step_nilpotent(rng, n),
        2 => deformed_su2(rng),
        _ => almost_abelian(rng, n),
    }
}
