//! Matrix exponential and logarithm for the small (m ≤ 4) matrices used here.
//!
//! Closed forms cover rotations and rigid motions. Everything else uses
//! scaling and squaring with a diagonal Padé(6) approximant, scaled until
//! the 1-norm drops below one half.

use nalgebra::{DMatrix, Matrix3, Vector3};

use super::algebra::{max_abs, ExpForm};
use crate::error::{Error, Result};

const PADE_ORDER: usize = 6;
const SCALED_NORM: f64 = 0.5;

/// Diagonal Padé(6) coefficients `c_k = (2p-k)! p! / ((2p)! k! (p-k)!)`.
fn pade_coefficients() -> [f64; PADE_ORDER + 1] {
    let mut c = [0.0; PADE_ORDER + 1];
    c[0] = 1.0;
    let p = PADE_ORDER as f64;
    for k in 1..=PADE_ORDER {
        let kf = k as f64;
        c[k] = c[k - 1] * (p - kf + 1.0) / (kf * (2.0 * p - kf + 1.0));
    }
    c
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Generic scaling-and-squaring exponential.
pub fn expm_pade(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > SCALED_NORM { (norm / SCALED_NORM).log2().ceil() as i32 } else { 0 };
    let scaled = a * 2f64.powi(-squarings);

    let c = pade_coefficients();
    let id = DMatrix::<f64>::identity(n, n);
    let mut num = &id * c[0];
    let mut den = &id * c[0];
    let mut power = id.clone();
    for (k, ck) in c.iter().enumerate().skip(1) {
        power = &power * &scaled;
        num += &power * *ck;
        den += &power * if k % 2 == 0 { *ck } else { -*ck };
    }
    let mut result = den.lu().solve(&num).expect("Padé denominator is invertible for ‖A‖ < 1/2");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// `sin θ / θ`, `(1 - cos θ)/θ²`, `(θ - sin θ)/θ³` with series near zero.
fn rotation_coefficients(theta: f64) -> (f64, f64, f64) {
    if theta < 1e-3 {
        let t2 = theta * theta;
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0,
        )
    } else {
        let (s, c) = theta.sin_cos();
        (s / theta, (1.0 - c) / (theta * theta), (theta - s) / (theta * theta * theta))
    }
}

fn rodrigues(w: &Matrix3<f64>) -> (Matrix3<f64>, Matrix3<f64>) {
    let axis = Vector3::new(w[(2, 1)], w[(0, 2)], w[(1, 0)]);
    let theta = axis.norm();
    let (a, b, c) = rotation_coefficients(theta);
    let w2 = w * w;
    let r = Matrix3::identity() + w * a + w2 * b;
    // V = Σ W^k/(k+1)!, the left Jacobian that carries translations.
    let v = Matrix3::identity() + w * b + w2 * c;
    (r, v)
}

pub fn exp_with_form(a: &DMatrix<f64>, form: ExpForm) -> DMatrix<f64> {
    match form {
        ExpForm::Generic => expm_pade(a),
        ExpForm::Rotation3 => {
            let w = Matrix3::from_iterator(a.iter().copied());
            let (r, _) = rodrigues(&w);
            DMatrix::from_iterator(3, 3, r.iter().copied())
        }
        ExpForm::Euclidean2 => {
            let omega = a[(1, 0)];
            let (sin_c, cos_c, _) = rotation_coefficients(omega.abs());
            let (s, c) = omega.sin_cos();
            // V = (sin ω/ω) I + ((1 - cos ω)/ω) J, J the unit generator.
            let v00 = sin_c;
            let v01 = -cos_c * omega;
            let (tx, ty) = (a[(0, 2)], a[(1, 2)]);
            let mut g = DMatrix::identity(3, 3);
            g[(0, 0)] = c;
            g[(0, 1)] = -s;
            g[(1, 0)] = s;
            g[(1, 1)] = c;
            g[(0, 2)] = v00 * tx + v01 * ty;
            g[(1, 2)] = -v01 * tx + v00 * ty;
            g
        }
        ExpForm::Euclidean3 => {
            let w = Matrix3::from_fn(|i, j| a[(i, j)]);
            let (r, v) = rodrigues(&w);
            let t = v * Vector3::new(a[(0, 3)], a[(1, 3)], a[(2, 3)]);
            let mut g = DMatrix::identity(4, 4);
            for i in 0..3 {
                for j in 0..3 {
                    g[(i, j)] = r[(i, j)];
                }
                g[(i, 3)] = t[i];
            }
            g
        }
    }
}

/// Principal logarithm of a matrix close to the identity (`‖M - I‖ < 1/2`),
/// by the Mercator series.
pub fn log_near_identity(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    let x = m - DMatrix::<f64>::identity(n, n);
    let norm = one_norm(&x);
    if norm >= 0.5 {
        return Err(Error::BadParams(format!("logarithm needs ‖M - I‖ < 1/2, got {norm:.3e}")));
    }
    let mut sum = x.clone();
    let mut power = x.clone();
    for k in 2..400 {
        power = &power * &x;
        let term = &power * (if k % 2 == 0 { -1.0 } else { 1.0 } / k as f64);
        sum += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    Ok(sum)
}
