//! Small dense linear-algebra helpers shared across modules.
//!
//! nalgebra provides the matrix containers and factorizations; nonsymmetric
//! eigenvalues go through faer, which stays fast for the large collocation
//! matrices produced by the delay analysis.

use faer::Mat;
use nalgebra::{Complex, DMatrix};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// All eigenvalues of a real square matrix.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<C64>> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::InvalidParameter("eigenvalues: matrix must be square".into()));
    }
    let m = Mat::from_fn(n, n, |i, j| a[(i, j)]);
    let ev: Vec<faer::c64> = m
        .eigenvalues()
        .map_err(|e| Error::Numerical(format!("eigenvalue computation failed: {e:?}")))?;
    Ok(ev.into_iter().map(|z| Complex::new(z.re, z.im)).collect())
}

/// Largest real part over the spectrum of a real square matrix.
pub fn max_real_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(a)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Solve A X = B for complex dense A via LU with partial pivoting.
pub fn solve_complex(a: DMatrix<C64>, b: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let lu = a.lu();
    lu.solve(b)
        .ok_or_else(|| Error::Numerical("singular resolvent in complex solve".into()))
}

/// Frobenius norm of a real matrix.
pub fn fro_norm(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Max absolute entry of a real matrix.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn eigenvalues_of_rotation_block() {
        // [[0,-1],[1,0]] has eigenvalues +-i
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let mut ev = eigenvalues(&a).unwrap();
        ev.sort_by(|p, q| p.im.partial_cmp(&q.im).unwrap());
        assert_relative_eq!(ev[0].im, -1.0, epsilon = 1e-14);
        assert_relative_eq!(ev[1].im, 1.0, epsilon = 1e-14);
        assert!(ev.iter().all(|z| z.re.abs() < 1e-14));
    }

    #[test]
    fn max_real_of_diagonal() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-3.0, -1.5, -7.0]));
        assert_relative_eq!(max_real_eigenvalue(&a).unwrap(), -1.5, epsilon = 1e-14);
    }

    #[test]
    fn complex_solve_roundtrip() {
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 1.0), C64::new(0.0, -1.0), C64::new(1.0, 0.0), C64::new(3.0, 0.5)],
        );
        let x = DMatrix::from_row_slice(2, 1, &[C64::new(1.0, -2.0), C64::new(0.5, 0.25)]);
        let b = &a * &x;
        let got = solve_complex(a, &b).unwrap();
        for i in 0..2 {
            assert_relative_eq!(got[(i, 0)].re, x[(i, 0)].re, epsilon = 1e-13);
            assert_relative_eq!(got[(i, 0)].im, x[(i, 0)].im, epsilon = 1e-13);
        }
    }
}
