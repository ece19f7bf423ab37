//! Small dense complex matrices (M x M per frequency bin).

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::C64;

pub type CMat = DMatrix<C64>;

pub fn identity(m: usize) -> CMat {
    CMat::identity(m, m)
}

pub fn frobenius_sq(a: &CMat) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum()
}

/// Haar-distributed random unitary (QR of a complex Ginibre matrix with the
/// phase ambiguity of R removed).
pub fn haar_unitary<R: Rng + ?Sized>(m: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(m, m, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let qr = g.qr();
    let (q, r) = qr.unpack();
    let mut u = q;
    for j in 0..m {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..m {
            u[(i, j)] *= phase;
        }
    }
    u
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut sv: Vec<f64> = a
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// `y = A x` into a preallocated buffer.
#[inline]
pub fn mat_vec(a: &CMat, x: &[C64], y: &mut [C64]) {
    let m = a.nrows();
    for (i, yi) in y.iter_mut().enumerate().take(m) {
        let mut acc = C64::new(0.0, 0.0);
        for (j, xj) in x.iter().enumerate() {
            acc += a[(i, j)] * xj;
        }
        *yi = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn haar_unitary_is_unitary() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for m in [2, 3, 6] {
            let u = haar_unitary(m, &mut rng);
            let err = frobenius_sq(&(u.adjoint() * &u - identity(m)));
            assert!(err < 1e-24);
            for s in singular_values(&u) {
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_values_sorted_descending() {
        let a = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(0.5, 0.0),
            C64::new(0.0, 2.0),
            C64::new(1.0, 0.0),
        ]));
        let sv = singular_values(&a);
        assert!((sv[0] - 2.0).abs() < 1e-12);
        assert!((sv[1] - 1.0).abs() < 1e-12);
        assert!((sv[2] - 0.5).abs() < 1e-12);
    }
}
