//! sl(3,C) with its order-6 outer automorphism σ, the compact real form
//! involution τ, and the ε-eigenspace grading 𝔤₀ ⊕ … ⊕ 𝔤₅.
//!
//! σ(X) = −P Xᵀ P on the algebra and σ(g) = P (gᵀ)⁻¹ P on SL(3,C), with
//! P = [[0, ε², 0], [ε⁴, 0, 0], [0, 0, 1]] and ε = e^{iπ/3}. P² = I, so σ² is
//! conjugation by P₂ = PPᵀ = diag(ε⁴, ε², 1) and σ³(X) = −P₃ Xᵀ P₃ with
//! P₃ = PPᵀP.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Neg};
use std::sync::OnceLock;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type Mat3 = Matrix3<Complex64>;
pub type Vec3 = Vector3<Complex64>;

/// Shared tolerance for exact-algebra identities.
pub const ALGEBRA_TOL: f64 = 1e-12;

pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn eps_table() -> &'static [Complex64; 6] {
    static TABLE: OnceLock<[Complex64; 6]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let e = Complex64::from_polar(1.0, PI / 3.0);
        let mut t = [Complex64::new(1.0, 0.0); 6];
        for k in 1..6 {
            t[k] = t[k - 1] * e;
        }
        t
    })
}

/// ε^k with ε = e^{iπ/3}, for any integer k.
pub fn eps_pow(k: i64) -> Complex64 {
    eps_table()[k.rem_euclid(6) as usize]
}

pub fn p_matrix() -> Mat3 {
    let z = Complex64::new(0.0, 0.0);
    Mat3::new(
        z,
        eps_pow(2),
        z,
        eps_pow(4),
        z,
        z,
        z,
        z,
        Complex64::new(1.0, 0.0),
    )
}

/// P₂ = PPᵀ = diag(ε⁴, ε², 1).
pub fn p2_matrix() -> Mat3 {
    Mat3::from_diagonal(&Vec3::new(eps_pow(4), eps_pow(2), Complex64::new(1.0, 0.0)))
}

/// P₃ = PPᵀP, the permutation swapping the first two coordinates.
pub fn p3_matrix() -> Mat3 {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    Mat3::new(z, o, z, o, z, z, z, z, o)
}

pub fn basis_vector(k: usize) -> Vec3 {
    let mut v = Vec3::zeros();
    v[k] = Complex64::new(1.0, 0.0);
    v
}

/// Index k of the eigenvalue ε^k of σ, always reduced to 0..6.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EigenIndex(u8);

impl EigenIndex {
    pub fn new(k: i64) -> Self {
        EigenIndex(k.rem_euclid(6) as u8)
    }

    pub fn value(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = EigenIndex> {
        (0..6).map(EigenIndex::new)
    }

    /// Eigenvalue ε^k.
    pub fn eigenvalue(self) -> Complex64 {
        eps_pow(self.0 as i64)
    }
}

impl Add for EigenIndex {
    type Output = EigenIndex;
    fn add(self, rhs: EigenIndex) -> EigenIndex {
        EigenIndex::new(self.0 as i64 + rhs.0 as i64)
    }
}

impl Neg for EigenIndex {
    type Output = EigenIndex;
    fn neg(self) -> EigenIndex {
        EigenIndex::new(-(self.0 as i64))
    }
}

impl fmt::Display for EigenIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Algebra,
    Group,
}

pub fn is_finite(x: &Mat3) -> bool {
    x.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn frob(x: &Mat3) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(x: &Mat3) -> Complex64 {
    x[(0, 0)] + x[(1, 1)] + x[(2, 2)]
}

pub fn bracket(x: &Mat3, y: &Mat3) -> Mat3 {
    x * y - y * x
}

/// ‖X X* − I‖_F.
pub fn unitarity_defect(x: &Mat3) -> f64 {
    frob(&(x * x.adjoint() - Mat3::identity()))
}

fn checked_inverse(x: &Mat3) -> Result<Mat3> {
    let det = x.determinant();
    if det.norm() < 1e-14 {
        return Err(Error::Singular(det.norm()));
    }
    x.try_inverse().ok_or(Error::Singular(det.norm()))
}

fn sigma_once(x: &Mat3, level: Level) -> Result<Mat3> {
    let p = p_matrix();
    Ok(match level {
        Level::Algebra => -(p * x.transpose() * p),
        Level::Group => p * checked_inverse(&x.transpose())? * p,
    })
}

/// σ^power(X). Negative powers are reduced modulo 6.
pub fn sigma_apply(x: &Mat3, power: i64, level: Level) -> Result<Mat3> {
    if !is_finite(x) {
        return Err(Error::NonFinite);
    }
    if level == Level::Group {
        let det = x.determinant().norm();
        if det < 1e-14 {
            return Err(Error::Singular(det));
        }
    }
    let mut out = *x;
    for _ in 0..power.rem_euclid(6) {
        out = sigma_once(&out, level)?;
    }
    Ok(out)
}

/// τ(X) = −X̄ᵀ on the algebra, τ(g) = (ḡᵀ)⁻¹ on the group.
pub fn tau_apply(x: &Mat3, level: Level) -> Result<Mat3> {
    if !is_finite(x) {
        return Err(Error::NonFinite);
    }
    match level {
        Level::Algebra => Ok(-x.adjoint()),
        Level::Group => checked_inverse(&x.adjoint()),
    }
}

fn check_trace_free(x: &Mat3) -> Result<()> {
    if !is_finite(x) {
        return Err(Error::NonFinite);
    }
    let t = trace(x).norm();
    if t > ALGEBRA_TOL * (1.0 + frob(x)) {
        return Err(Error::NotTraceFree(t));
    }
    Ok(())
}

/// All six components X = Σₖ Xₖ with Xₖ ∈ 𝔤ₖ, by averaging over the cyclic
/// group generated by σ: Xₖ = (1/6) Σⱼ ε^{−kj} σʲ(X).
pub fn eigenspace_decompose(x: &Mat3) -> Result<[Mat3; 6]> {
    check_trace_free(x)?;
    let mut orbit = [*x; 6];
    for j in 1..6 {
        orbit[j] = sigma_once(&orbit[j - 1], Level::Algebra)?;
    }
    let mut parts = [Mat3::zeros(); 6];
    for (k, part) in parts.iter_mut().enumerate() {
        for (j, s) in orbit.iter().enumerate() {
            *part += s * eps_pow(-((k * j) as i64));
        }
        *part /= Complex64::new(6.0, 0.0);
    }
    Ok(parts)
}

pub fn eigenspace_project(x: &Mat3, k: EigenIndex) -> Result<Mat3> {
    Ok(eigenspace_decompose(x)?[k.value()])
}

/// Basis matrices of 𝔤ₖ exactly as tabulated (one free parameter set to 1
/// and the others to 0).
pub fn eigenspace_basis(k: EigenIndex) -> Vec<Mat3> {
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let m = |rows: [[Complex64; 3]; 3]| Mat3::from_fn(|i, j| rows[i][j]);
    match k.value() {
        0 => vec![m([[o, z, z], [z, -o, z], [z, z, z]])],
        1 => vec![
            m([[z, z, z], [z, z, o], [o, z, z]]),
            m([[z, o, z], [z, z, z], [z, z, z]]),
        ],
        2 => vec![m([[z, z, o], [z, z, z], [z, -o, z]])],
        3 => vec![m([[o, z, z], [z, o, z], [z, z, -o * 2.0]])],
        4 => vec![m([[z, z, z], [z, z, o], [-o, z, z]])],
        5 => vec![
            m([[z, z, o], [z, z, z], [z, o, z]]),
            m([[z, z, z], [o, z, z], [z, z, z]]),
        ],
        _ => unreachable!(),
    }
}

/// The 𝔤ₖ that make up the ε^m-eigenspace of σ^power.
pub fn eigenspace_union(power: u32, m: EigenIndex) -> Vec<EigenIndex> {
    EigenIndex::all()
        .filter(|k| EigenIndex::new(power as i64 * k.value() as i64) == m)
        .collect()
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn exp_mat(x: &Mat3) -> Mat3 {
    let norm = frob(x);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a = x * Complex64::new(scale, 0.0);
    let mut term = Mat3::identity();
    let mut sum = Mat3::identity();
    for n in 1..=18 {
        term = term * a / Complex64::new(n as f64, 0.0);
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}
