//! Gauss maps into the flag spaces FL₁, FL₂, FL₃ and their projections, with
//! the equivariance and Ruh–Vilms checks.
//!
//! All seven maps are read off one special frame F (det F = 1). Harmonicity is
//! not tested intrinsically: a Gauss map is reported primitive exactly when the
//! frame's Maurer–Cartan form has the primitivity shape for the relevant power
//! of σ.

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{frob, p2_matrix, p3_matrix, p_matrix, unitarity_defect, Mat3, Vec3};
use crate::error::{Error, Result};
use crate::frames::{
    build_frame, classify_mc, derive_invariants, special_lift, Classification, FrameField,
    FrameOptions, LiftField, MatField, SurfaceClass,
};
use crate::grid::{GridDomain, Scheme};

const STAB_TOL: f64 = 1e-10;

/// ẽ₁ = ((1+i)/2, (1−i)/2, 0).
pub fn e1_tilde() -> Vec3 {
    Vec3::new(
        Complex64::new(0.5, 0.5),
        Complex64::new(0.5, -0.5),
        Complex64::new(0.0, 0.0),
    )
}

/// ẽ₂ = ((1−i)/2, (1+i)/2, 0).
pub fn e2_tilde() -> Vec3 {
    Vec3::new(
        Complex64::new(0.5, -0.5),
        Complex64::new(0.5, 0.5),
        Complex64::new(0.0, 0.0),
    )
}

/// Conjugator taking the 𝔰𝔬₃ used here to the standard real one.
pub fn h_matrix() -> Mat3 {
    let (a, b) = (Complex64::new(0.5, -0.5), Complex64::new(0.5, 0.5));
    let (z, o) = (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
    Mat3::new(a, b, z, b, a, z, z, z, o)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FlagSpace {
    Fl1,
    Fl2,
    Fl3,
}

impl FlagSpace {
    pub fn from_index(j: u8) -> Result<Self> {
        match j {
            1 => Ok(FlagSpace::Fl1),
            2 => Ok(FlagSpace::Fl2),
            3 => Ok(FlagSpace::Fl3),
            _ => Err(Error::VariantMismatch(format!("no flag space FL{j}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Projection {
    H1,
    H2,
    H31,
    H32,
}

#[derive(Clone, Debug)]
pub enum FlagPoint {
    /// A point v of a special Lagrangian 3-space V, stored by an orthonormal
    /// real frame of V.
    Fl1 { v: Vec3, frame: [Vec3; 3] },
    /// A unit vector w with the flag ℂq₃ ⊂ ℂq₃ ⊕ ℂq₂ ⊂ ℂ³, stored as the
    /// orthonormal triple (q₃ = w, q₂, q₁).
    Fl2 { w: Vec3, flag: [Vec3; 3] },
    /// S = U P Uᵀ.
    Fl3 { s: Mat3 },
}

#[derive(Clone, Debug)]
pub enum ProjectedPoint {
    /// The Lagrangian subspace V as its real-structure matrix Σ vᵢvᵢᵀ.
    SlGr(Mat3),
    /// Orthogonal projectors onto the line and the plane of the flag.
    Fl2 { line: Mat3, plane: Mat3 },
    /// F(PPᵀP)Fᵀ, symmetric and unitary.
    SlGrTilde(Mat3),
    /// F(PPᵀ)F⁻¹, unitary with spectrum {ε⁴, ε², 1}.
    Fl2Tilde(Mat3),
}

fn outer(u: &Vec3, v: &Vec3) -> Mat3 {
    u * v.transpose()
}

fn projector(u: &Vec3) -> Mat3 {
    u * u.adjoint()
}

fn vdist(a: &Vec3, b: &Vec3) -> f64 {
    (a - b).norm()
}

impl FlagPoint {
    /// π_j(F) for a single SU(3) frame.
    pub fn from_frame(f: &Mat3, space: FlagSpace) -> Self {
        let col = |k: usize| -> Vec3 { f.column(k).into_owned() };
        match space {
            FlagSpace::Fl1 => FlagPoint::Fl1 {
                v: col(2),
                frame: [f * e1_tilde(), f * e2_tilde(), col(2)],
            },
            FlagSpace::Fl2 => FlagPoint::Fl2 {
                w: col(2),
                flag: [col(2), col(0), col(1)],
            },
            FlagSpace::Fl3 => FlagPoint::Fl3 {
                s: f * p_matrix() * f.transpose(),
            },
        }
    }

    pub fn space(&self) -> FlagSpace {
        match self {
            FlagPoint::Fl1 { .. } => FlagSpace::Fl1,
            FlagPoint::Fl2 { .. } => FlagSpace::Fl2,
            FlagPoint::Fl3 { .. } => FlagSpace::Fl3,
        }
    }

    pub fn project(&self, which: Projection) -> Result<ProjectedPoint> {
        match (self, which) {
            (FlagPoint::Fl1 { frame, .. }, Projection::H1) => Ok(ProjectedPoint::SlGr(
                frame.iter().map(|v| outer(v, v)).sum(),
            )),
            (FlagPoint::Fl2 { flag, .. }, Projection::H2) => {
                let line = projector(&flag[0]);
                Ok(ProjectedPoint::Fl2 {
                    plane: line + projector(&flag[1]),
                    line,
                })
            }
            // with PP̄ = PPᵀ these need S only: S S̄ = F PPᵀ F*, S S̄ S = F PPᵀP Fᵀ
            (FlagPoint::Fl3 { s }, Projection::H32) => {
                Ok(ProjectedPoint::Fl2Tilde(s * s.conjugate()))
            }
            (FlagPoint::Fl3 { s }, Projection::H31) => {
                Ok(ProjectedPoint::SlGrTilde(s * s.conjugate() * s))
            }
            (p, w) => Err(Error::VariantMismatch(format!(
                "{w:?} does not apply to {:?}",
                p.space()
            ))),
        }
    }

    /// Image under g ∈ SU(3).
    pub fn act(&self, g: &Mat3) -> Self {
        match self {
            FlagPoint::Fl1 { v, frame } => FlagPoint::Fl1 {
                v: g * v,
                frame: frame.map(|x| g * x),
            },
            FlagPoint::Fl2 { w, flag } => FlagPoint::Fl2 {
                w: g * w,
                flag: flag.map(|x| g * x),
            },
            FlagPoint::Fl3 { s } => FlagPoint::Fl3 {
                s: g * s * g.transpose(),
            },
        }
    }

    /// Distance in the matrix models; FL₁ and FL₂ compare the basepoint and
    /// the frame-independent subspace data.
    pub fn distance(&self, other: &FlagPoint) -> Result<f64> {
        match (self, other) {
            (FlagPoint::Fl1 { v: a, .. }, FlagPoint::Fl1 { v: b, .. }) => Ok(vdist(a, b).max(
                self.project(Projection::H1)?
                    .distance(&other.project(Projection::H1)?)?,
            )),
            (FlagPoint::Fl2 { w: a, .. }, FlagPoint::Fl2 { w: b, .. }) => Ok(vdist(a, b).max(
                self.project(Projection::H2)?
                    .distance(&other.project(Projection::H2)?)?,
            )),
            (FlagPoint::Fl3 { s: a }, FlagPoint::Fl3 { s: b }) => Ok(frob(&(a - b))),
            _ => Err(Error::VariantMismatch(
                "comparing points of different flag spaces".into(),
            )),
        }
    }

    /// Max |Im⟨vᵢ, vⱼ⟩| over the stored real frame (FL₁ only).
    pub fn totally_real_defect(&self) -> Option<f64> {
        match self {
            FlagPoint::Fl1 { frame, .. } => {
                let mut worst: f64 = 0.0;
                for a in frame {
                    for b in frame {
                        worst = worst.max(b.dotc(a).im.abs());
                    }
                }
                Some(worst)
            }
            _ => None,
        }
    }
}

impl ProjectedPoint {
    pub fn matrix(&self) -> Mat3 {
        match self {
            ProjectedPoint::SlGr(m)
            | ProjectedPoint::SlGrTilde(m)
            | ProjectedPoint::Fl2Tilde(m) => *m,
            ProjectedPoint::Fl2 { plane, .. } => *plane,
        }
    }

    pub fn distance(&self, other: &ProjectedPoint) -> Result<f64> {
        use ProjectedPoint::*;
        match (self, other) {
            (SlGr(a), SlGr(b)) | (SlGrTilde(a), SlGrTilde(b)) | (Fl2Tilde(a), Fl2Tilde(b)) => {
                Ok(frob(&(a - b)))
            }
            (
                Fl2 {
                    line: l1,
                    plane: p1,
                },
                Fl2 {
                    line: l2,
                    plane: p2,
                },
            ) => Ok(frob(&(l1 - l2)).max(frob(&(p1 - p2)))),
            _ => Err(Error::VariantMismatch(
                "comparing points of different targets".into(),
            )),
        }
    }

    /// g·x in the target's natural action.
    pub fn act(&self, g: &Mat3) -> Self {
        use ProjectedPoint::*;
        match self {
            SlGr(m) => SlGr(g * m * g.transpose()),
            SlGrTilde(m) => SlGrTilde(g * m * g.transpose()),
            Fl2Tilde(m) => Fl2Tilde(g * m * g.adjoint()),
            Fl2 { line, plane } => Fl2 {
                line: g * line * g.adjoint(),
                plane: g * plane * g.adjoint(),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct GaussField {
    pub grid: GridDomain,
    pub points: Vec<FlagPoint>,
}

#[derive(Clone, Debug)]
pub struct ProjectedField {
    pub grid: GridDomain,
    pub points: Vec<ProjectedPoint>,
}

fn check_special(frame: &FrameField) -> Result<()> {
    let d = frame.det_defect();
    if !(d <= FrameOptions::default().gauge_floor(frame.grid.h())) {
        return Err(Error::InconsistentGauge(d));
    }
    Ok(())
}

/// 𝒢ⱼ = πⱼ ∘ F.
pub fn gauss_map(frame: &FrameField, space: FlagSpace) -> Result<GaussField> {
    check_special(frame)?;
    Ok(GaussField {
        grid: frame.grid,
        points: frame
            .frame
            .values
            .iter()
            .map(|f| FlagPoint::from_frame(f, space))
            .collect(),
    })
}

pub fn project_gauss(g: &GaussField, which: Projection) -> Result<ProjectedField> {
    Ok(ProjectedField {
        grid: g.grid,
        points: g
            .points
            .iter()
            .map(|p| p.project(which))
            .collect::<Result<_>>()?,
    })
}

fn check_special_unitary(g: &Mat3) -> Result<()> {
    let d = unitarity_defect(g).max((g.determinant() - Complex64::new(1.0, 0.0)).norm());
    if !(d <= STAB_TOL) {
        return Err(Error::NotUnitary(d));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Stabilizer {
    U1,
    D3,
    SO3,
}

pub fn stabilizer_membership(g: &Mat3, which: Stabilizer) -> Result<bool> {
    check_special_unitary(g)?;
    let off_diag = (0..3)
        .flat_map(|i| (0..3).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| g[(i, j)].norm())
        .fold(0.0, f64::max);
    let one = Complex64::new(1.0, 0.0);
    Ok(match which {
        Stabilizer::D3 => off_diag <= STAB_TOL,
        Stabilizer::U1 => {
            off_diag <= STAB_TOL
                && (g[(2, 2)] - one).norm() <= STAB_TOL
                && (g[(0, 0)] * g[(1, 1)] - one).norm() <= STAB_TOL
        }
        Stabilizer::SO3 => {
            let h = h_matrix();
            let r = h * g * h.adjoint();
            r.iter().all(|x| x.im.abs() <= STAB_TOL)
        }
    })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct EquivarianceReport {
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub h1: f64,
    pub h2: f64,
    pub h31: f64,
    pub h32: f64,
}

impl EquivarianceReport {
    pub fn max(&self) -> f64 {
        [
            self.g1, self.g2, self.g3, self.h1, self.h2, self.h31, self.h32,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn special_frame(lift: &LiftField) -> Result<FrameField> {
    let s = special_lift(lift)?;
    let inv = derive_invariants(&s)?;
    build_frame(&s, &inv)
}

/// Compares the Gauss maps of T·𝔣 with the T-translates of those of 𝔣. The
/// same special lift is used for both, so the comparison is free of the
/// cube-root ambiguity.
pub fn equivariance_check(lift: &LiftField, t: &Mat3) -> Result<EquivarianceReport> {
    check_special_unitary(t)?;
    let base = special_lift(lift)?;
    let moved = base.map(|v| t * v);
    let frame_of = |l: &LiftField| -> Result<FrameField> { build_frame(l, &derive_invariants(l)?) };
    let (f0, f1) = (frame_of(&base)?, frame_of(&moved)?);
    let mut r = EquivarianceReport::default();
    for (space, slot) in [
        (FlagSpace::Fl1, 0),
        (FlagSpace::Fl2, 1),
        (FlagSpace::Fl3, 2),
    ] {
        let (a, b) = (gauss_map(&f0, space)?, gauss_map(&f1, space)?);
        for (p, q) in a.points.iter().zip(&b.points) {
            let d = q.distance(&p.act(t))?;
            match slot {
                0 => r.g1 = r.g1.max(d),
                1 => r.g2 = r.g2.max(d),
                _ => r.g3 = r.g3.max(d),
            }
            let projections: &[Projection] = match space {
                FlagSpace::Fl1 => &[Projection::H1],
                FlagSpace::Fl2 => &[Projection::H2],
                FlagSpace::Fl3 => &[Projection::H31, Projection::H32],
            };
            for &w in projections {
                let d = q.project(w)?.distance(&p.project(w)?.act(t))?;
                match w {
                    Projection::H1 => r.h1 = r.h1.max(d),
                    Projection::H2 => r.h2 = r.h2.max(d),
                    Projection::H31 => r.h31 = r.h31.max(d),
                    Projection::H32 => r.h32 = r.h32.max(d),
                }
            }
        }
    }
    Ok(r)
}

/// Which Gauss maps are primitive harmonic, decided at the frame level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GaussPrimitivity {
    pub g1: bool,
    pub g2: bool,
    pub g3: bool,
    pub h1: bool,
    pub h2: bool,
    pub h31: bool,
    pub h32: bool,
}

impl GaussPrimitivity {
    pub fn from_classification(c: &Classification) -> Self {
        GaussPrimitivity {
            g1: c.sigma,
            g2: c.sigma,
            g3: c.sigma,
            h1: c.sigma3,
            h31: c.sigma3,
            h2: c.sigma2,
            h32: c.sigma2,
        }
    }

    pub fn primitive_maps(&self) -> Vec<&'static str> {
        [
            ("G1", self.g1),
            ("G2", self.g2),
            ("G3", self.g3),
            ("H1", self.h1),
            ("H2", self.h2),
            ("H31", self.h31),
            ("H32", self.h32),
        ]
        .into_iter()
        .filter(|(_, b)| *b)
        .map(|(n, _)| n)
        .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RuhVilmsReport {
    pub classification: Classification,
    pub flags: Vec<&'static str>,
    pub label: SurfaceClass,
    pub primitive: GaussPrimitivity,
    pub primitive_maps: Vec<&'static str>,
    /// minimal Lagrangian ⟺ σ ⟺ 𝒢₁, 𝒢₂, 𝒢₃ primitive.
    pub sigma_equivalence: bool,
    /// minimal ⟺ σ² ⟺ H₂, H₃₂ primitive.
    pub sigma2_equivalence: bool,
    /// (minimal Lagrangian or flat homogeneous) ⟺ σ³ ⟺ H₁, H₃₁ primitive.
    pub sigma3_equivalence: bool,
    pub method: &'static str,
}

impl RuhVilmsReport {
    pub fn holds(&self) -> bool {
        self.sigma_equivalence && self.sigma2_equivalence && self.sigma3_equivalence
    }
}

const METHOD: &str =
    "Gauss-map primitivity is read from the eigenspace decomposition of the common frame's \
Maurer-Cartan form: all FL_j maps need sigma, H2 and H32 need sigma^2, H1 and H31 need sigma^3";

pub fn ruh_vilms_from_classification(c: Classification) -> RuhVilmsReport {
    let p = GaussPrimitivity::from_classification(&c);
    let ml = c.label == SurfaceClass::MinimalLagrangian;
    let minimal = matches!(
        c.label,
        SurfaceClass::MinimalLagrangian | SurfaceClass::MinimalNonLagrangian
    );
    let fh = c.label == SurfaceClass::FlatHomogeneous || c.flat_homogeneous;
    RuhVilmsReport {
        flags: c.flags(),
        label: c.label,
        primitive: p,
        primitive_maps: p.primitive_maps(),
        sigma_equivalence: ml == c.sigma && c.sigma == (p.g1 && p.g2 && p.g3),
        sigma2_equivalence: minimal == c.sigma2 && c.sigma2 == (p.h2 && p.h32),
        sigma3_equivalence: (ml || fh) == c.sigma3 && c.sigma3 == (p.h1 && p.h31),
        method: METHOD,
        classification: c,
    }
}

pub fn ruh_vilms_report(lift: &LiftField) -> Result<RuhVilmsReport> {
    let frame = special_frame(lift)?;
    let c = crate::frames::classify_primitivity(&frame)?;
    Ok(ruh_vilms_from_classification(c))
}

/// The report for Maurer–Cartan data that need not come from a lift.
pub fn ruh_vilms_from_mc(u: &MatField, scheme: Scheme) -> RuhVilmsReport {
    ruh_vilms_from_classification(classify_mc(u, scheme, FrameOptions::default().class_tol))
}

/// The base values PPᵀP and PPᵀ, for reference.
pub fn base_projections() -> (Mat3, Mat3) {
    (p3_matrix(), p2_matrix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{c, eps_pow, exp_mat};

    fn identity_point(space: FlagSpace) -> FlagPoint {
        FlagPoint::from_frame(&Mat3::identity(), space)
    }

    #[test]
    fn base_point_values() {
        let g3 = identity_point(FlagSpace::Fl3);
        let FlagPoint::Fl3 { s } = &g3 else {
            unreachable!()
        };
        assert_eq!(*s, p_matrix());
        let h31 = g3.project(Projection::H31).unwrap().matrix();
        let h32 = g3.project(Projection::H32).unwrap().matrix();
        assert!(frob(&(h31 - p3_matrix())) < 1e-15);
        let d = Mat3::from_diagonal(&Vec3::new(eps_pow(4), eps_pow(2), c(1.0, 0.0)));
        assert!(frob(&(h32 - d)) < 1e-15);
    }

    #[test]
    fn slgr_matches_h31() {
        let x = Mat3::new(
            c(0.0, 0.3),
            c(0.2, 0.1),
            c(-0.1, 0.0),
            c(-0.2, 0.1),
            c(0.0, -0.5),
            c(0.3, 0.3),
            c(0.1, 0.0),
            c(-0.3, 0.3),
            c(0.0, 0.2),
        );
        let f = exp_mat(&x);
        let h1 = FlagPoint::from_frame(&f, FlagSpace::Fl1)
            .project(Projection::H1)
            .unwrap()
            .matrix();
        let h31 = FlagPoint::from_frame(&f, FlagSpace::Fl3)
            .project(Projection::H31)
            .unwrap()
            .matrix();
        assert!(frob(&(h1 - h31)) < 1e-14);
        assert!(frob(&(h31 - f * p3_matrix() * f.transpose())) < 1e-14);
        let h32 = FlagPoint::from_frame(&f, FlagSpace::Fl3)
            .project(Projection::H32)
            .unwrap()
            .matrix();
        assert!(frob(&(h32 - f * p2_matrix() * f.adjoint())) < 1e-14);
        assert!(
            FlagPoint::from_frame(&f, FlagSpace::Fl1)
                .totally_real_defect()
                .unwrap()
                < 1e-14
        );
    }

    #[test]
    fn u1_fixes_the_base_point() {
        let k = Mat3::from_diagonal(&Vec3::new(c(0.6, 0.8), c(0.6, -0.8), c(1.0, 0.0)));
        for space in [FlagSpace::Fl1, FlagSpace::Fl2, FlagSpace::Fl3] {
            let p = identity_point(space);
            assert!(p.act(&k).distance(&p).unwrap() < 1e-15, "{space:?}");
        }
    }

    #[test]
    fn stabilizers() {
        let u1 = Mat3::from_diagonal(&Vec3::new(c(0.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)));
        assert!(stabilizer_membership(&u1, Stabilizer::U1).unwrap());
        let e2 = Mat3::from_diagonal(&Vec3::new(eps_pow(2), eps_pow(2), eps_pow(2)));
        assert!(stabilizer_membership(&e2, Stabilizer::D3).unwrap());
        assert!(!stabilizer_membership(&e2, Stabilizer::U1).unwrap());
        let t = 0.3;
        let (z, r) = (c(0.0, 0.0), c(t, 0.0));
        let gen = Mat3::new(z, z, r, z, z, r, -r, -r, z);
        assert!(stabilizer_membership(&exp_mat(&gen), Stabilizer::SO3).unwrap());
        assert!(!stabilizer_membership(&e2, Stabilizer::SO3).unwrap());
        assert!(matches!(
            stabilizer_membership(&(u1 * c(2.0, 0.0)), Stabilizer::D3),
            Err(Error::NotUnitary(_))
        ));
    }

    #[test]
    fn variant_mismatch() {
        assert!(matches!(
            identity_point(FlagSpace::Fl1).project(Projection::H31),
            Err(Error::VariantMismatch(_))
        ));
        assert!(FlagSpace::from_index(4).is_err());
    }
}
