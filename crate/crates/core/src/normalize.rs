//! Change of basis taking a controllable planar pair with a rotation-like
//! spectrum into the companion form `([[0, 1], [-1, 2a]], [0, 1]^T)`.

use nalgebra::{Matrix2, Vector2};

use crate::dynamics::NsModel;
use crate::error::{Error, Result};

const SPECTRUM_TOL: f64 = 1e-9;

/// Returns the model and `T` with `T^-1 A0 T = [[0, 1], [-1, 2a]]` and
/// `T^-1 B0 = [0, 1]^T`.
///
/// The columns of `T` are `A0 B0 - 2a B0` and `B0`. With `det A0 = 1` the
/// Cayley-Hamilton identity `A0^2 - 2a A0 + I = 0` gives
/// `A0 (A0 B0 - 2a B0) = -B0`, which is exactly the first companion column.
pub fn normalize_ns(a0: &Matrix2<f64>, b0: &Vector2<f64>) -> Result<(NsModel<f64>, Matrix2<f64>)> {
    if a0.iter().chain(b0.iter()).any(|x| !x.is_finite()) {
        return Err(Error::Spectrum("non-finite entries".into()));
    }
    let det = a0.determinant();
    let a = a0.trace() / 2.0;
    if (det - 1.0).abs() > SPECTRUM_TOL * (1.0 + a0.norm()) {
        return Err(Error::Spectrum(format!("eigenvalues are not on the unit circle (det = {det})")));
    }
    if a.abs() >= 1.0 - SPECTRUM_TOL {
        return Err(Error::Spectrum(format!("eigenvalue at {} (trace/2 = {a})", a.signum())));
    }
    if a.abs() <= SPECTRUM_TOL {
        return Err(Error::Spectrum("eigenvalues at +/-j".into()));
    }

    let ab = a0 * b0;
    let ctrb = Matrix2::from_columns(&[*b0, ab]);
    if ctrb.determinant().abs() <= SPECTRUM_TOL * (1.0 + b0.norm_squared() * (1.0 + a0.norm())) {
        return Err(Error::NotControllable);
    }

    let first = ab - b0 * (2.0 * a);
    let t = Matrix2::from_columns(&[first, *b0]);
    Ok((NsModel::new(a)?, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn companion(a: f64) -> Matrix2<f64> {
        Matrix2::new(0.0, 1.0, -1.0, 2.0 * a)
    }

    fn check(a0: &Matrix2<f64>, b0: &Vector2<f64>, expect_a: f64) {
        let (model, t) = normalize_ns(a0, b0).unwrap();
        assert!((model.a() - expect_a).abs() < 1e-12);
        let tinv = t.try_inverse().unwrap();
        let at = tinv * a0 * t;
        let bt = tinv * b0;
        for (got, want) in at.iter().zip(companion(expect_a).iter()) {
            assert!((got - want).abs() < 1e-10, "{at} vs companion");
        }
        assert!(bt[0].abs() < 1e-10 && (bt[1] - 1.0).abs() < 1e-10, "{bt}");
    }

    #[test]
    fn companion_form_is_a_fixed_point() {
        let (model, t) = normalize_ns(&companion(0.5), &Vector2::new(0.0, 1.0)).unwrap();
        assert_eq!(*model.a(), 0.5);
        assert!((t - Matrix2::identity()).norm() < 1e-15);
    }

    #[test]
    fn rotation_by_sixty_degrees() {
        let th = PI / 3.0;
        let a0 = Matrix2::new(th.cos(), -th.sin(), th.sin(), th.cos());
        check(&a0, &Vector2::new(1.0, 0.0), 0.5);
    }

    #[test]
    fn rejects_excluded_spectra() {
        let jordan = Matrix2::new(1.0, 1.0, 0.0, 1.0);
        assert!(matches!(normalize_ns(&jordan, &Vector2::new(0.0, 1.0)), Err(Error::Spectrum(_))));
        let quarter = Matrix2::new(0.0, -1.0, 1.0, 0.0);
        assert!(matches!(normalize_ns(&quarter, &Vector2::new(1.0, 0.0)), Err(Error::Spectrum(_))));
        let contracting = Matrix2::new(0.5, 0.0, 0.0, 0.5);
        assert!(normalize_ns(&contracting, &Vector2::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn rejects_uncontrollable_pair() {
        let th = 1.0_f64;
        let a0 = Matrix2::new(th.cos(), -th.sin(), th.sin(), th.cos());
        assert!(matches!(normalize_ns(&a0, &Vector2::new(0.0, 0.0)), Err(Error::NotControllable)));
    }
}
