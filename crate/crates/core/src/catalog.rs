//! Closed-form test surfaces with known invariants.
//!
//! * `clifford`: the flat minimal Lagrangian torus
//!   𝔣 = i·3^{−1/2}(e^{iθ₁}, e^{iθ₂}, e^{iθ₃}), θₖ = √2(cos(2πk/3)x + sin(2πk/3)y).
//!   The factor i makes the lift special (det F ≡ 1).
//! * `real`: the totally geodesic Lagrangian RP² through inverse stereographic
//!   projection onto S² ⊂ R³ ⊂ C³.
//! * `holomorphic`: a complex line, used to exercise complex-point rejection.
//! * `sigma2_synthetic`: Maurer–Cartan data with a = 1.2, b = 0.8, φ = 0
//!   that is not realised by any lift.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{Mat3, Vec3, I};
use crate::error::{Error, Result};
use crate::frames::{
    compatibility_residuals, derive_invariants_with, FrameOptions, InvariantField, LiftField,
};
use crate::grid::{Field, GridDomain, Scheme};

pub const NAMES: [&str; 4] = ["clifford", "real", "holomorphic", "sigma2_synthetic"];

/// Expected pointwise invariants of a catalog surface.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Expected {
    pub a: f64,
    pub b: f64,
    pub exp_omega: f64,
    pub phi: Complex64,
    pub psi: Complex64,
    pub rho: Complex64,
}

pub fn clifford_point(z: Complex64) -> Vec3 {
    let s = 2f64.sqrt();
    let comp = |k: f64| {
        let t = 2.0 * PI * k / 3.0;
        Complex64::from_polar(1.0 / 3f64.sqrt(), s * (t.cos() * z.re + t.sin() * z.im))
    };
    Vec3::new(comp(1.0), comp(2.0), comp(3.0)) * I
}

pub fn real_point(z: Complex64) -> Vec3 {
    let r2 = z.norm_sqr();
    let d = 1.0 + r2;
    Vec3::new(
        Complex64::new(2.0 * z.re / d, 0.0),
        Complex64::new(2.0 * z.im / d, 0.0),
        Complex64::new((r2 - 1.0) / d, 0.0),
    )
}

pub fn holomorphic_point(z: Complex64) -> Vec3 {
    let d = (1.0 + z.norm_sqr()).sqrt();
    Vec3::new(
        z / d,
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0 / d, 0.0),
    )
}

pub fn expected(name: &str, z: Complex64) -> Result<Expected> {
    let zero = Complex64::new(0.0, 0.0);
    match name {
        "clifford" => Ok(Expected {
            a: 1.0,
            b: 1.0,
            exp_omega: 0.5,
            phi: zero,
            psi: I * (2f64.sqrt() / 4.0),
            rho: zero,
        }),
        "real" => Ok(Expected {
            a: 1.0,
            b: 1.0,
            exp_omega: 2.0 / (1.0 + z.norm_sqr()).powi(2),
            phi: zero,
            psi: zero,
            rho: zero,
        }),
        "sigma2_synthetic" => Ok(Expected {
            a: 1.2,
            b: 0.8,
            exp_omega: 1.0,
            phi: zero,
            psi: Complex64::new(0.3, 0.0),
            rho: zero,
        }),
        "holomorphic" => Err(Error::UnknownCatalog(
            "holomorphic has no invariants".into(),
        )),
        other => Err(Error::UnknownCatalog(other.into())),
    }
}

/// Sampled lift of a catalog surface.
pub fn lift(name: &str, grid: GridDomain) -> Result<LiftField> {
    let f: fn(Complex64) -> Vec3 = match name {
        "clifford" => clifford_point,
        "real" => real_point,
        "holomorphic" => holomorphic_point,
        "sigma2_synthetic" => {
            return Err(Error::UnknownCatalog(
                "sigma2_synthetic is Maurer-Cartan data, not a lift".into(),
            ))
        }
        other => return Err(Error::UnknownCatalog(other.into())),
    };
    Ok(Field::from_fn(grid, |i, j| f(grid.z(i, j))))
}

/// The σ²-only datum as an invariant field.
pub fn sigma2_synthetic(grid: GridDomain, scheme: Scheme) -> InvariantField {
    let e = expected("sigma2_synthetic", Complex64::new(0.0, 0.0)).expect("catalog entry");
    InvariantField::from_data(
        grid,
        scheme,
        |_| e.exp_omega.ln(),
        |_| e.a,
        |_| e.phi,
        |_| e.psi,
        |_| e.rho,
    )
}

/// The constant E ∈ 𝔤₅ whose vacuum potential λ⁻¹E dz produces the Clifford
/// torus at λ = 1: it is the Maurer–Cartan matrix 𝒰 of the catalog frame.
pub fn vacuum_coefficient() -> Mat3 {
    let r = I * (1.0 / 2f64.sqrt());
    let z = Complex64::new(0.0, 0.0);
    Mat3::new(z, z, r, r, z, z, z, r, z)
}

#[derive(Clone, Debug, Serialize)]
pub struct Validation {
    pub name: String,
    pub h: f64,
    /// Max deviation from the expected invariants (a, b, e^ω, φ, ψ, ρ).
    pub invariant_dev: f64,
    pub residual_max: [f64; 4],
}

/// Loads a catalog lift and checks it against its documented invariants and
/// the integrability conditions.
pub fn load(
    name: &str,
    grid: GridDomain,
    opts: &FrameOptions,
) -> Result<(LiftField, InvariantField, Validation)> {
    let lift = lift(name, grid)?;
    let inv = derive_invariants_with(&lift, opts)?;
    let m = opts.scheme.trusted_margin(2);
    let mut dev: f64 = 0.0;
    for (i, j) in grid.nodes(m) {
        let e = expected(name, grid.z(i, j))?;
        dev = dev
            .max((inv.a.at(i, j).re - e.a).abs())
            .max((inv.b.at(i, j).re - e.b).abs())
            .max((inv.omega.at(i, j).re.exp() - e.exp_omega).abs())
            .max((inv.phi.at(i, j) - e.phi).norm())
            .max((inv.psi.at(i, j) - e.psi).norm())
            .max((inv.rho.at(i, j) - e.rho).norm());
    }
    let h = grid.h();
    let tol = 10.0 * h * h;
    if !(dev <= tol) {
        return Err(Error::CrossCheckFailure {
            what: format!("catalog `{name}` invariants"),
            dev,
            tol,
        });
    }
    let res = compatibility_residuals(&inv);
    let worst = res.summary.max.iter().copied().fold(0.0, f64::max);
    let rtol = 100.0 * h * h;
    if !(worst <= rtol) {
        return Err(Error::CrossCheckFailure {
            what: format!("catalog `{name}` compatibility"),
            dev: worst,
            tol: rtol,
        });
    }
    let v = Validation {
        name: name.into(),
        h,
        invariant_dev: dev,
        residual_max: res.summary.max,
    };
    Ok((lift, inv, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frames::{build_frame, derive_invariants};

    #[test]
    fn lifts_are_unit() {
        let g = GridDomain::centered(0.1, 11).unwrap();
        for name in ["clifford", "real", "holomorphic"] {
            let l = lift(name, g).unwrap();
            assert!(l.values.iter().all(|v| (v.norm() - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn surfaces_validate_on_load() {
        let g = GridDomain::centered(0.02, 51).unwrap();
        for name in ["clifford", "real"] {
            load(name, g, &FrameOptions::default()).unwrap();
        }
    }

    #[test]
    fn real_lift_has_constant_imaginary_determinant() {
        let g = GridDomain::centered(0.02, 31).unwrap();
        let l = lift("real", g).unwrap();
        let fr = build_frame(&l, &derive_invariants(&l).unwrap()).unwrap();
        let d0 = fr.frame.at(15, 15).determinant();
        assert!((d0.re).abs() < 1e-8 && (d0.im.abs() - 1.0).abs() < 1e-8);
        for f in &fr.frame.values {
            assert!((f.determinant() - d0).norm() < 1e-6);
        }
    }

    #[test]
    fn unknown_names_are_rejected() {
        let g = GridDomain::centered(0.1, 11).unwrap();
        assert!(matches!(lift("torus", g), Err(Error::UnknownCatalog(_))));
    }
}
