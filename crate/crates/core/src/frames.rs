//! Invariants and moving frames of a sampled lift 𝔣: D → S⁵ of a surface in
//! CP² without complex points.
//!
//! Everything here works on [`Field`]s over a [`GridDomain`]. Real-valued
//! invariants (ω, a, b, θ) are stored as complex fields with zero imaginary
//! part so that the same difference operators apply to all of them.

use std::collections::VecDeque;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{eigenspace_decompose, frob, trace, Mat3, Vec3, I};
use crate::error::{Error, Result};
use crate::grid::{Field, GridDomain, ScalarField, Scheme};

pub type LiftField = Field<Vec3>;
pub type MatField = Field<Mat3>;

/// Largest admissible change of the cube-root phase between neighbouring
/// nodes. Branches are 2π/3 apart, so anything near π/3 is ambiguous.
pub const MAX_PHASE_JUMP: f64 = PI / 6.0;

#[derive(Clone, Copy, Debug)]
pub struct FrameOptions {
    pub scheme: Scheme,
    /// Complex-point threshold on min(a, b).
    pub eps_a: f64,
    /// Bound on e^{−ω}|ξ·η̄|.
    pub conformal_tol: f64,
    /// Classifier tolerance on eigenspace components.
    pub class_tol: f64,
    /// Bound on |det F − 1| accepted as the special gauge.
    pub gauge_tol: f64,
}

impl Default for FrameOptions {
    fn default() -> Self {
        FrameOptions {
            scheme: Scheme::Central4,
            eps_a: 1e-6,
            conformal_tol: 1e-3,
            class_tol: 1e-6,
            gauge_tol: 1e-9,
        }
    }
}

impl FrameOptions {
    /// Smallest det defect that can be demanded on a grid of spacing h: below
    /// h^order the measured det F is dominated by truncation error, and a
    /// nonconstant phase correction no longer contracts.
    pub fn gauge_floor(&self, h: f64) -> f64 {
        self.gauge_tol.max(h.powi(self.scheme.order()))
    }
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Hermitian pairing u·v̄ = Σ uₖ v̄ₖ.
pub fn hdot(u: &Vec3, v: &Vec3) -> Complex64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b.conj()).sum()
}

#[derive(Clone, Debug)]
pub struct InvariantField {
    pub grid: GridDomain,
    pub scheme: Scheme,
    pub omega: ScalarField,
    pub a: ScalarField,
    pub b: ScalarField,
    pub theta: ScalarField,
    pub phi: ScalarField,
    pub psi: ScalarField,
    pub rho: ScalarField,
    pub xi: Field<Vec3>,
    pub eta: Field<Vec3>,
    /// e^{−ω} ξ·η̄, zero for a conformal parametrization.
    pub conformality: ScalarField,
}

impl InvariantField {
    /// Invariants given directly as functions of the node, for data that do
    /// not come from a lift. ξ and η are left at zero.
    #[allow(clippy::too_many_arguments)]
    pub fn from_data(
        grid: GridDomain,
        scheme: Scheme,
        omega: impl Fn(Complex64) -> f64,
        a: impl Fn(Complex64) -> f64,
        phi: impl Fn(Complex64) -> Complex64,
        psi: impl Fn(Complex64) -> Complex64,
        rho: impl Fn(Complex64) -> Complex64,
    ) -> Self {
        let sf = |f: &dyn Fn(Complex64) -> Complex64| Field::from_fn(grid, |i, j| f(grid.z(i, j)));
        let a_f = sf(&|z| re(a(z)));
        InvariantField {
            grid,
            scheme,
            omega: sf(&|z| re(omega(z))),
            b: a_f.map(|v| re(2.0) - v),
            theta: a_f.map(|v| re(kahler_angle(v.re))),
            a: a_f,
            phi: sf(&phi),
            psi: sf(&psi),
            rho: sf(&rho),
            xi: Field::constant(grid, Vec3::zeros()),
            eta: Field::constant(grid, Vec3::zeros()),
            conformality: Field::constant(grid, re(0.0)),
        }
    }

    /// Coefficient of dz in the mean curvature form Ξ = i(Φ − Φ̄).
    pub fn mean_curvature_form(&self) -> ScalarField {
        self.phi.map(|p| I * p)
    }

    pub fn conformal_factor(&self) -> ScalarField {
        self.omega.map(|w| w.exp())
    }
}

/// θ = 2 arccos √(a/2).
pub fn kahler_angle(a: f64) -> f64 {
    2.0 * (a / 2.0).sqrt().clamp(0.0, 1.0).acos()
}

pub fn check_unit_norm(lift: &LiftField) -> Result<()> {
    for (i, j) in lift.grid.nodes(0) {
        let n = lift.at(i, j).norm();
        if !n.is_finite() || (n - 1.0).abs() > 1e-10 {
            return Err(Error::NotUnitNorm { i, j, norm: n });
        }
    }
    Ok(())
}

pub fn derive_invariants(lift: &LiftField) -> Result<InvariantField> {
    derive_invariants_with(lift, &FrameOptions::default())
}

pub fn derive_invariants_with(lift: &LiftField, opts: &FrameOptions) -> Result<InvariantField> {
    check_unit_norm(lift)?;
    let grid = lift.grid;
    let (fz, fzb) = lift.dz_dzbar(opts.scheme);
    let n = grid.len();
    let mut rho = Vec::with_capacity(n);
    let mut xi = Vec::with_capacity(n);
    let mut eta = Vec::with_capacity(n);
    for k in 0..n {
        let f = lift.values[k];
        let r = hdot(&fz.values[k], &f);
        rho.push(r);
        xi.push(fz.values[k] - f * r);
        eta.push(fzb.values[k] - f * hdot(&fzb.values[k], &f));
    }
    let mut omega = Vec::with_capacity(n);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut conf = Vec::with_capacity(n);
    for k in 0..n {
        let (x2, e2) = (xi[k].norm_squared(), eta[k].norm_squared());
        let ew = 0.5 * (x2 + e2);
        let (ak, bk) = (x2 / ew, e2 / ew);
        let (i, j) = grid.coords(k);
        if !(ak.min(bk) >= opts.eps_a) {
            return Err(Error::ComplexPointDetected { i, j, a: ak, b: bk });
        }
        let c = hdot(&xi[k], &eta[k]) / ew;
        if c.norm() > opts.conformal_tol {
            return Err(Error::NonConformal {
                i,
                j,
                defect: c.norm(),
            });
        }
        omega.push(re(ew.ln()));
        a.push(re(ak));
        b.push(re(bk));
        conf.push(c);
    }
    let xi = Field { grid, values: xi };
    let eta = Field { grid, values: eta };
    let (xi_z, xi_zb) = xi.dz_dzbar(opts.scheme);
    let mut phi = Vec::with_capacity(n);
    let mut psi = Vec::with_capacity(n);
    for k in 0..n {
        let emw = (-omega[k].re).exp();
        phi.push(hdot(&xi_zb.values[k], &eta.values[k]) * emw);
        psi.push(hdot(&xi_z.values[k], &eta.values[k]));
    }
    let a = Field { grid, values: a };
    Ok(InvariantField {
        grid,
        scheme: opts.scheme,
        omega: Field {
            grid,
            values: omega,
        },
        theta: a.map(|v| re(kahler_angle(v.re))),
        a,
        b: Field { grid, values: b },
        phi: Field { grid, values: phi },
        psi: Field { grid, values: psi },
        rho: Field { grid, values: rho },
        xi,
        eta,
        conformality: Field { grid, values: conf },
    })
}

/// Gauge matrix R = diag(−i e^{−ω/2} a^{−1/2}, −i e^{−ω/2} b^{−1/2}, 1).
fn gauge_scales(omega: f64, a: f64, b: f64) -> (Complex64, Complex64) {
    let s = (-0.5 * omega).exp();
    (-I * s / a.sqrt(), -I * s / b.sqrt())
}

/// F = (ξ, η, 𝔣)·R at every node.
pub fn frame_matrices(lift: &LiftField, inv: &InvariantField) -> MatField {
    Field::from_fn(lift.grid, |i, j| {
        let (r1, r2) = gauge_scales(inv.omega.at(i, j).re, inv.a.at(i, j).re, inv.b.at(i, j).re);
        let c1 = inv.xi.at(i, j) * r1;
        let c2 = inv.eta.at(i, j) * r2;
        Mat3::from_columns(&[c1, c2, lift.at(i, j)])
    })
}

/// The matrix 𝒰 of F⁻¹dF = 𝒰dz + 𝒱dz̄ in terms of the invariants and the
/// z-derivatives of a, b and ω.
#[allow(clippy::too_many_arguments)]
pub fn mc_matrix(
    a: f64,
    b: f64,
    omega: f64,
    phi: Complex64,
    psi: Complex64,
    rho: Complex64,
    a_z: Complex64,
    b_z: Complex64,
    omega_z: Complex64,
) -> Mat3 {
    let z = re(0.0);
    let sab = (a * b).sqrt();
    let ew2 = (0.5 * omega).exp();
    let d1 = a_z / (2.0 * a) + omega_z * 0.5 + rho + phi / a;
    let d2 = -b_z / (2.0 * b) - omega_z * 0.5 + rho + phi / b;
    Mat3::new(
        d1,
        -phi.conj() / sab,
        I * a.sqrt() * ew2,
        psi * (-omega).exp() / sab,
        d2,
        z,
        z,
        I * b.sqrt() * ew2,
        rho,
    )
}

#[derive(Clone, Debug)]
pub struct FrameField {
    pub grid: GridDomain,
    pub scheme: Scheme,
    pub frame: MatField,
    /// 𝒰 = F⁻¹F_z computed from the sampled frame.
    pub u: MatField,
    /// 𝒰 from the closed-form expression in the invariants.
    pub u_analytic: MatField,
    /// 𝒱 = −𝒰̄ᵀ.
    pub v: MatField,
    pub cross_check_dev: f64,
    /// Deviation of tr 𝒰 from (a⁻¹ + b⁻¹)φ + 3ρ + (a_z/a − b_z/b)/2.
    pub trace_defect: f64,
}

impl FrameField {
    /// 𝔣 = F e₃.
    pub fn lift(&self) -> LiftField {
        self.frame.map(|f| f.column(2).into_owned())
    }

    /// max |det F − 1| over the trusted interior.
    pub fn det_defect(&self) -> f64 {
        self.grid
            .nodes(self.scheme.margin())
            .map(|(i, j)| (self.frame.at(i, j).determinant() - 1.0).norm())
            .fold(0.0, f64::max)
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.frame
            .values
            .iter()
            .map(crate::algebra::unitarity_defect)
            .fold(0.0, f64::max)
    }

    /// Frame from sampled matrices only; the analytic 𝒰 is not available and
    /// mirrors the numerical one.
    pub fn from_matrices(frame: MatField, scheme: Scheme) -> Result<Self> {
        let u = maurer_cartan(&frame, scheme)?;
        Ok(FrameField {
            grid: frame.grid,
            scheme,
            v: u.map(|m| -m.adjoint()),
            u_analytic: u.clone(),
            u,
            frame,
            cross_check_dev: 0.0,
            trace_defect: 0.0,
        })
    }
}

/// F⁻¹F_z at every node.
pub fn maurer_cartan(frame: &MatField, scheme: Scheme) -> Result<MatField> {
    let fz = frame.dz(scheme);
    let mut out = Vec::with_capacity(frame.values.len());
    for (f, d) in frame.values.iter().zip(&fz.values) {
        let inv = f
            .try_inverse()
            .ok_or(Error::Singular(f.determinant().norm()))?;
        out.push(inv * d);
    }
    Ok(Field {
        grid: frame.grid,
        values: out,
    })
}

pub fn build_frame(lift: &LiftField, inv: &InvariantField) -> Result<FrameField> {
    let scheme = inv.scheme;
    let grid = lift.grid;
    let frame = frame_matrices(lift, inv);
    let u = maurer_cartan(&frame, scheme)?;
    let (a_z, b_z, w_z) = (inv.a.dz(scheme), inv.b.dz(scheme), inv.omega.dz(scheme));
    let u_analytic = Field::from_fn(grid, |i, j| {
        mc_matrix(
            inv.a.at(i, j).re,
            inv.b.at(i, j).re,
            inv.omega.at(i, j).re,
            inv.phi.at(i, j),
            inv.psi.at(i, j),
            inv.rho.at(i, j),
            a_z.at(i, j),
            b_z.at(i, j),
            w_z.at(i, j),
        )
    });
    let margin = scheme.trusted_margin(2);
    let dev = u.max_deviation(&u_analytic, margin)?;
    let h = grid.h();
    let tol = 50.0 * h * h;
    if !(dev <= tol) {
        return Err(Error::CrossCheckFailure {
            what: "F^-1 F_z against closed-form U".into(),
            dev,
            tol,
        });
    }
    let trace_defect = grid
        .nodes(margin)
        .map(|(i, j)| {
            let (a, b) = (inv.a.at(i, j).re, inv.b.at(i, j).re);
            let expected = inv.phi.at(i, j) * (1.0 / a + 1.0 / b)
                + inv.rho.at(i, j) * 3.0
                + (a_z.at(i, j) / a - b_z.at(i, j) / b) * 0.5;
            (trace(&u.at(i, j)) - expected).norm()
        })
        .fold(0.0, f64::max);
    Ok(FrameField {
        grid,
        scheme,
        v: u.map(|m| -m.adjoint()),
        frame,
        u,
        u_analytic,
        cross_check_dev: dev,
        trace_defect,
    })
}

/// det F nodewise.
pub fn frame_determinants(lift: &LiftField, inv: &InvariantField) -> ScalarField {
    frame_matrices(lift, inv).map(|f| f.determinant())
}

/// A cube root δ of `w` (|w| = 1) that varies continuously over the grid.
/// The base node (grid centre) takes the principal root; every other node
/// takes the branch nearest to its breadth-first parent, and the result is
/// checked against all previously assigned neighbours.
pub fn continuous_cube_root(w: &ScalarField) -> Result<ScalarField> {
    let grid = w.grid;
    let roots = [
        re(1.0),
        Complex64::from_polar(1.0, 2.0 * PI / 3.0),
        Complex64::from_polar(1.0, -2.0 * PI / 3.0),
    ];
    let mut out: Vec<Option<Complex64>> = vec![None; grid.len()];
    let (ci, cj) = grid.center();
    let base = grid.index(ci, cj);
    out[base] = Some(w.values[base].powf(1.0 / 3.0));
    let mut queue = VecDeque::from([(ci, cj)]);
    let neighbours = |i: usize, j: usize| {
        let mut v = Vec::with_capacity(4);
        if i > 0 {
            v.push((i - 1, j));
        }
        if i + 1 < grid.nx {
            v.push((i + 1, j));
        }
        if j > 0 {
            v.push((i, j - 1));
        }
        if j + 1 < grid.ny {
            v.push((i, j + 1));
        }
        v
    };
    while let Some((i, j)) = queue.pop_front() {
        let parent = out[grid.index(i, j)].expect("queued nodes are assigned");
        for (ni, nj) in neighbours(i, j) {
            let k = grid.index(ni, nj);
            if out[k].is_some() {
                continue;
            }
            let principal = w.values[k].powf(1.0 / 3.0);
            let best = roots
                .iter()
                .map(|r| principal * r)
                .min_by(|x, y| {
                    (x / parent)
                        .arg()
                        .abs()
                        .total_cmp(&(y / parent).arg().abs())
                })
                .expect("three roots");
            for (mi, mj) in neighbours(ni, nj) {
                if let Some(m) = out[grid.index(mi, mj)] {
                    let jump = (best / m).arg().abs();
                    if jump > MAX_PHASE_JUMP {
                        return Err(Error::PhaseUnwrapFailure { i: ni, j: nj, jump });
                    }
                }
            }
            out[k] = Some(best);
            queue.push_back((ni, nj));
        }
    }
    Ok(Field {
        grid,
        values: out
            .into_iter()
            .map(|v| v.expect("grid is connected"))
            .collect(),
    })
}

pub fn special_lift(lift: &LiftField) -> Result<LiftField> {
    special_lift_with(lift, &FrameOptions::default())
}

/// Multiplies the lift by a smooth phase so that det F = 1.
///
/// The discrete derivative does not obey the product rule exactly, so one
/// cube-root correction leaves a residual of the order of the truncation
/// error; the correction is repeated until it stops improving.
pub fn special_lift_with(lift: &LiftField, opts: &FrameOptions) -> Result<LiftField> {
    let mut cur = lift.clone();
    let mut best: Option<(LiftField, f64)> = None;
    let floor = opts.gauge_floor(lift.grid.h());
    for _ in 0..60 {
        let inv = derive_invariants_with(&cur, opts)?;
        let det = frame_determinants(&cur, &inv);
        // only the phase can be corrected; |det F| − 1 is truncation error
        let defect: f64 = cur
            .grid
            .nodes(opts.scheme.margin())
            .map(|(i, j)| det.at(i, j).arg().abs())
            .fold(0.0, f64::max);
        if defect < 1e-2 * opts.gauge_tol {
            return Ok(cur);
        }
        if let Some((prev, last)) = &best {
            if defect > 0.9 * last {
                return if *last <= floor {
                    Ok(prev.clone())
                } else {
                    Err(Error::InconsistentGauge(*last))
                };
            }
        }
        let mut delta = continuous_cube_root(&det.map(|d| d.conj() / d.norm()))?;
        extend_from_interior(&mut delta, opts.scheme.margin());
        let next = cur.zip_map(&delta, |f, d| f * d);
        best = Some((cur, defect));
        cur = next;
        renormalize(&mut cur);
    }
    match best {
        Some((prev, last)) if last <= floor => Ok(prev),
        b => Err(Error::InconsistentGauge(b.map_or(f64::INFINITY, |b| b.1))),
    }
}

/// Replaces the `m` outer rings by quartic extrapolation from the interior
/// (then restores unit modulus). Corrections computed from one-sided boundary
/// stencils are rough on the grid scale and would leak inward.
fn extend_from_interior(f: &mut ScalarField, m: usize) {
    let g = f.grid;
    if m == 0 || g.nx < 2 * m + 5 || g.ny < 2 * m + 5 {
        return;
    }
    // Lagrange weights on nodes 0..5 evaluated at t < 0
    let weights = |t: f64| -> [f64; 5] {
        let mut w = [1.0; 5];
        for (k, wk) in w.iter_mut().enumerate() {
            for l in 0..5 {
                if l != k {
                    *wk *= (t - l as f64) / (k as f64 - l as f64);
                }
            }
        }
        w
    };
    let extrapolate = |get: &dyn Fn(usize) -> Complex64, t: f64| -> Complex64 {
        weights(t)
            .iter()
            .enumerate()
            .map(|(k, w)| get(k) * *w)
            .sum::<Complex64>()
    };
    for j in 0..g.ny {
        for d in 1..=m {
            let lo = extrapolate(&|k| f.values[g.index(m + k, j)], -(d as f64));
            let hi = extrapolate(&|k| f.values[g.index(g.nx - 1 - m - k, j)], -(d as f64));
            f.values[g.index(m - d, j)] = lo / lo.norm();
            f.values[g.index(g.nx - 1 - m + d, j)] = hi / hi.norm();
        }
    }
    for i in 0..g.nx {
        for d in 1..=m {
            let lo = extrapolate(&|k| f.values[g.index(i, m + k)], -(d as f64));
            let hi = extrapolate(&|k| f.values[g.index(i, g.ny - 1 - m - k)], -(d as f64));
            f.values[g.index(i, m - d)] = lo / lo.norm();
            f.values[g.index(i, g.ny - 1 - m + d)] = hi / hi.norm();
        }
    }
}

fn renormalize(lift: &mut LiftField) {
    for v in &mut lift.values {
        let n = v.norm();
        *v /= re(n);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GaugeReport {
    /// Max deviation of a, b, ω, φ, ψ between 𝔣 and h𝔣.
    pub invariant_dev: f64,
    /// Max |ρ[h𝔣] − ρ[𝔣] − h⁻¹h_z|.
    pub rho_dev: f64,
    /// Max |det F(h𝔣) − det F(𝔣)|.
    pub det_dev: f64,
}

pub fn phase_gauge_invariance_check(lift: &LiftField, h: &ScalarField) -> Result<GaugeReport> {
    if !lift.grid.same_as(&h.grid) {
        return Err(Error::GridMismatch);
    }
    let opts = FrameOptions::default();
    let moved = lift.zip_map(h, |f, c| f * c);
    let i0 = derive_invariants_with(lift, &opts)?;
    let i1 = derive_invariants_with(&moved, &opts)?;
    let m = opts.scheme.trusted_margin(2);
    let mut dev: f64 = 0.0;
    for (x, y) in [
        (&i0.a, &i1.a),
        (&i0.b, &i1.b),
        (&i0.omega, &i1.omega),
        (&i0.phi, &i1.phi),
        (&i0.psi, &i1.psi),
    ] {
        dev = dev.max(x.max_deviation(y, m)?);
    }
    let hz = h.dz(opts.scheme);
    let expected = Field::from_fn(lift.grid, |i, j| i0.rho.at(i, j) + hz.at(i, j) / h.at(i, j));
    let rho_dev = i1.rho.max_deviation(&expected, m)?;
    let d0 = frame_determinants(lift, &i0);
    let d1 = frame_determinants(&moved, &i1);
    Ok(GaugeReport {
        invariant_dev: dev,
        rho_dev,
        det_dev: d0.max_deviation(&d1, m)?,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResidualSummary {
    pub max: [f64; 4],
    pub rms: [f64; 4],
}

#[derive(Clone, Debug)]
pub struct CompatibilityResiduals {
    pub fields: [ScalarField; 4],
    pub summary: ResidualSummary,
}

/// Residuals of the four scalar integrability conditions, each written as
/// lhs − rhs. Max and RMS are taken away from the boundary.
pub fn compatibility_residuals(inv: &InvariantField) -> CompatibilityResiduals {
    let s = inv.scheme;
    let g = inv.grid;
    let ew = inv.omega.map(|w| w.exp());
    let log_a = inv.a.map(|a| a.ln());
    let log_b = inv.b.map(|b| b.ln());
    let lap = |f: &ScalarField| f.dzbar(s).dz(s);
    let (w_zz, la_zz, lb_zz) = (lap(&inv.omega), lap(&log_a), lap(&log_b));
    let w_z = inv.omega.dz(s);
    let phi_a = inv.phi.zip_map(&inv.a, |p, a| p / a);
    let phib_a = inv.phi.zip_map(&inv.a, |p, a| p.conj() / a);
    let phi_b = inv.phi.zip_map(&inv.b, |p, b| p / b);
    let phib_b = inv.phi.zip_map(&inv.b, |p, b| p.conj() / b);
    let (phi_a_zb, phib_a_z) = (phi_a.dzbar(s), phib_a.dz(s));
    let (phi_b_zb, phib_b_z) = (phi_b.dzbar(s), phib_b.dz(s));
    let rho_zb = inv.rho.dzbar(s);
    let rhob_z = inv.rho.map(|r| r.conj()).dz(s);
    let psi_zb = inv.psi.dzbar(s);
    let phi_z = inv.phi.dz(s);
    let log_ab_z = log_a.zip_map(&log_b, |x, y| x + y).dz(s);

    let node = |f: &dyn Fn(usize) -> Complex64| Field {
        grid: g,
        values: (0..g.len()).map(f).collect(),
    };
    let c1 = node(&|k| {
        rho_zb.values[k] + rhob_z.values[k] - (inv.a.values[k] - inv.b.values[k]) * ew.values[k]
    });
    let common = |k: usize| {
        let (a, b) = (inv.a.values[k], inv.b.values[k]);
        let p = inv.phi.values[k];
        (-p.norm_sqr() + (-2.0 * inv.omega.values[k].re).exp() * inv.psi.values[k].norm_sqr())
            / (a * b)
    };
    let c2 = node(&|k| {
        let (a, b) = (inv.a.values[k], inv.b.values[k]);
        let rhs =
            (b - a * 2.0) * ew.values[k] - phi_a_zb.values[k] - phib_a_z.values[k] + common(k);
        la_zz.values[k] + w_zz.values[k] - rhs
    });
    let c3 = node(&|k| {
        let (a, b) = (inv.a.values[k], inv.b.values[k]);
        let (p, q, e) = (inv.phi.values[k], inv.psi.values[k], ew.values[k]);
        let d = a.inv() - b.inv();
        let lhs = psi_zb.values[k] + d * p.conj() * q + d * e * p * p;
        let rhs = e * (phi_z.values[k] - w_z.values[k] * p) - e * p * log_ab_z.values[k];
        lhs - rhs
    });
    let c4 = node(&|k| {
        let (a, b) = (inv.a.values[k], inv.b.values[k]);
        let rhs =
            (a - b * 2.0) * ew.values[k] + phi_b_zb.values[k] + phib_b_z.values[k] + common(k);
        lb_zz.values[k] + w_zz.values[k] - rhs
    });
    let fields = [c1, c2, c3, c4];
    let margin = s.trusted_margin(3);
    let summary = ResidualSummary {
        max: std::array::from_fn(|n| fields[n].max_norm(margin)),
        rms: std::array::from_fn(|n| fields[n].rms_norm(margin)),
    };
    CompatibilityResiduals { fields, summary }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SurfaceClass {
    #[serde(rename = "minimal Lagrangian")]
    MinimalLagrangian,
    #[serde(rename = "minimal, non-Lagrangian")]
    MinimalNonLagrangian,
    #[serde(rename = "flat homogeneous")]
    FlatHomogeneous,
    #[serde(rename = "generic")]
    Generic,
}

impl SurfaceClass {
    pub fn as_str(self) -> &'static str {
        match self {
            SurfaceClass::MinimalLagrangian => "minimal Lagrangian",
            SurfaceClass::MinimalNonLagrangian => "minimal, non-Lagrangian",
            SurfaceClass::FlatHomogeneous => "flat homogeneous",
            SurfaceClass::Generic => "generic",
        }
    }
}

impl std::fmt::Display for SurfaceClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub sigma: bool,
    pub sigma2: bool,
    pub sigma3: bool,
    /// a = b = 1 and ω, φ, ψ constant with ψ ≠ 0.
    pub flat_homogeneous: bool,
    pub label: SurfaceClass,
    /// Max over the interior of ‖(𝒰 − tr𝒰/3)ₖ‖ for k = 0..5.
    pub component_max: [f64; 6],
    pub trace_max: f64,
}

impl Classification {
    pub fn flags(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.sigma {
            v.push("sigma");
        }
        if self.sigma2 {
            v.push("sigma2");
        }
        if self.sigma3 {
            v.push("sigma3");
        }
        v
    }
}

/// Gauge-invariant reading of (a, b, ω, φ, ψ, ρ) off a Maurer–Cartan matrix of
/// the standard shape. Valid for any diagonal gauge of the first two frame
/// columns. None when u₁₃ or u₃₂ vanishes.
#[derive(Clone, Copy, Debug)]
pub struct McInvariants {
    pub a: f64,
    pub b: f64,
    pub omega: f64,
    pub phi: Complex64,
    pub psi: Complex64,
    pub rho: Complex64,
}

pub fn mc_invariants(u: &Mat3, eps: f64) -> Option<McInvariants> {
    let (u13, u32_, u21, u12) = (u[(0, 2)], u[(2, 1)], u[(1, 0)], u[(0, 1)]);
    let (aa, bb) = (u13.norm(), u32_.norm());
    if aa < eps || bb < eps {
        return None;
    }
    let s = aa * aa + bb * bb;
    let a = 2.0 * aa * aa / s;
    let b = 2.0 * bb * bb / s;
    let phi_bar = u12 / (u13 * u32_) * ((a * b).sqrt() * aa * bb);
    Some(McInvariants {
        a,
        b,
        omega: (0.5 * s).ln(),
        phi: phi_bar.conj(),
        psi: -u13 * u32_ * u21,
        rho: u[(2, 2)],
    })
}

/// Primitivity classification from the dz-part 𝒰 of the Maurer–Cartan form.
pub fn classify_mc(u: &MatField, scheme: Scheme, tol: f64) -> Classification {
    let grid = u.grid;
    let margin = scheme.trusted_margin(2);
    let mut comp = [0.0f64; 6];
    let mut trace_max: f64 = 0.0;
    let mut data = Vec::new();
    for (i, j) in grid.nodes(margin) {
        let m = u.at(i, j);
        let t = trace(&m);
        trace_max = trace_max.max(t.norm());
        let mut tf = m;
        for d in 0..3 {
            tf[(d, d)] -= t / 3.0;
        }
        let parts = eigenspace_decompose(&tf).expect("trace removed");
        for k in 0..6 {
            comp[k] = comp[k].max(frob(&parts[k]));
        }
        data.push(mc_invariants(&m, 1e-8));
    }
    let sigma = comp[1..=4].iter().all(|&c| c < tol) && trace_max < tol;
    let sigma2 = comp[1] < tol && comp[4] < tol;
    let h = grid.h();
    let flat_homogeneous = flat_homogeneous(&data, tol, 10.0 * h * h);
    let sigma3 = sigma || flat_homogeneous;
    let label = if sigma {
        SurfaceClass::MinimalLagrangian
    } else if sigma2 {
        SurfaceClass::MinimalNonLagrangian
    } else if sigma3 {
        SurfaceClass::FlatHomogeneous
    } else {
        SurfaceClass::Generic
    };
    Classification {
        sigma,
        sigma2,
        sigma3,
        flat_homogeneous,
        label,
        component_max: comp,
        trace_max,
    }
}

fn flat_homogeneous(data: &[Option<McInvariants>], tol: f64, const_tol: f64) -> bool {
    let Some(Some(first)) = data.first() else {
        return false;
    };
    data.iter().all(|d| match d {
        None => false,
        Some(m) => {
            (m.a - 1.0).abs() < tol
                && (m.b - 1.0).abs() < tol
                && m.psi.norm() > tol
                && (m.omega - first.omega).abs() < const_tol
                && (m.phi - first.phi).norm() < const_tol
                && (m.psi - first.psi).norm() < const_tol
        }
    })
}

pub fn classify_primitivity(frame: &FrameField) -> Result<Classification> {
    classify_primitivity_with(frame, &FrameOptions::default())
}

pub fn classify_primitivity_with(
    frame: &FrameField,
    opts: &FrameOptions,
) -> Result<Classification> {
    let d = frame.det_defect();
    if !(d <= opts.gauge_floor(frame.grid.h())) {
        return Err(Error::InconsistentGauge(d));
    }
    Ok(classify_mc(&frame.u, frame.scheme, opts.class_tol))
}

/// 𝒰 built from invariant data alone, for Maurer–Cartan data that need not
/// come from a sampled lift.
pub fn mc_field(inv: &InvariantField) -> MatField {
    let s = inv.scheme;
    let (a_z, b_z, w_z) = (inv.a.dz(s), inv.b.dz(s), inv.omega.dz(s));
    Field::from_fn(inv.grid, |i, j| {
        mc_matrix(
            inv.a.at(i, j).re,
            inv.b.at(i, j).re,
            inv.omega.at(i, j).re,
            inv.phi.at(i, j),
            inv.psi.at(i, j),
            inv.rho.at(i, j),
            a_z.at(i, j),
            b_z.at(i, j),
            w_z.at(i, j),
        )
    })
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub lift: LiftField,
    /// Invariants read off the Maurer–Cartan form.
    pub invariants: InvariantField,
    /// Invariants recomputed from the extracted lift.
    pub derived: InvariantField,
    pub max_deviation: f64,
}

/// Recovers the surface 𝔣 = Fe₃ and its invariants from a frame whose
/// Maurer–Cartan form has the standard shape, and checks them against the
/// invariants recomputed from 𝔣.
pub fn reconstruct_surface(frame: &FrameField) -> Result<Reconstruction> {
    let opts = FrameOptions {
        scheme: frame.scheme,
        ..FrameOptions::default()
    };
    let grid = frame.grid;
    let h = grid.h();
    let shape_tol = (50.0 * h * h).max(1e-6);
    let mut rec = Vec::with_capacity(grid.len());
    for (i, j) in grid.nodes(0) {
        let u = frame.u.at(i, j);
        for (entry, idx) in [("u13", (0, 2)), ("u32", (2, 1))] {
            if u[idx].norm() < opts.eps_a {
                return Err(Error::VanishingEntry {
                    entry,
                    i,
                    j,
                    value: u[idx].norm(),
                });
            }
        }
        rec.push(mc_invariants(&u, opts.eps_a).expect("entries checked"));
    }
    for (i, j) in grid.nodes(frame.scheme.trusted_margin(2)) {
        let u = frame.u.at(i, j);
        for (entry, idx) in [("u23", (1, 2)), ("u31", (2, 0))] {
            if u[idx].norm() > shape_tol {
                return Err(Error::ShapeViolation {
                    entry,
                    value: u[idx].norm(),
                });
            }
        }
    }
    let lift = frame.lift();
    let sf = |f: &dyn Fn(&McInvariants) -> Complex64| Field {
        grid,
        values: rec.iter().map(f).collect(),
    };
    let a = sf(&|m| re(m.a));
    let omega = sf(&|m| re(m.omega));
    let b = sf(&|m| re(m.b));
    let xi = Field::from_fn(grid, |i, j| {
        let k = grid.index(i, j);
        let (r1, _) = gauge_scales(rec[k].omega, rec[k].a, rec[k].b);
        frame.frame.at(i, j).column(0).into_owned() / r1
    });
    let eta = Field::from_fn(grid, |i, j| {
        let k = grid.index(i, j);
        let (_, r2) = gauge_scales(rec[k].omega, rec[k].a, rec[k].b);
        frame.frame.at(i, j).column(1).into_owned() / r2
    });
    let invariants = InvariantField {
        grid,
        scheme: frame.scheme,
        theta: a.map(|v| re(kahler_angle(v.re))),
        a,
        b,
        omega,
        phi: sf(&|m| m.phi),
        psi: sf(&|m| m.psi),
        rho: sf(&|m| m.rho),
        xi,
        eta,
        conformality: Field::constant(grid, re(0.0)),
    };
    let derived = derive_invariants_with(&lift, &opts)?;
    let m = frame.scheme.trusted_margin(2);
    let mut dev: f64 = 0.0;
    for (x, y) in [
        (&invariants.a, &derived.a),
        (&invariants.b, &derived.b),
        (&invariants.omega, &derived.omega),
        (&invariants.phi, &derived.phi),
        (&invariants.psi, &derived.psi),
        (&invariants.rho, &derived.rho),
    ] {
        dev = dev.max(x.max_deviation(y, m)?);
    }
    let tol = (50.0 * h * h).max(1e-8);
    if !(dev <= tol) {
        return Err(Error::CrossCheckFailure {
            what: "invariants of Fe3 against the frame".into(),
            dev,
            tol,
        });
    }
    Ok(Reconstruction {
        lift,
        invariants,
        derived,
        max_deviation: dev,
    })
}

/// Frame → surface → frame. Returns the larger of the frame deviation and
/// the invariant deviation found by [`reconstruct_surface`].
pub fn frame_round_trip(frame: &FrameField) -> Result<f64> {
    let rec = reconstruct_surface(frame)?;
    let again = build_frame(&rec.lift, &rec.derived)?;
    let fdev = again
        .frame
        .max_deviation(&frame.frame, frame.scheme.margin())?;
    Ok(fdev.max(rec.max_deviation))
}

#[derive(Clone, Debug, Serialize)]
pub struct CongruenceReport {
    pub omega: f64,
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
    pub tolerance: f64,
    pub congruent: bool,
}

pub fn congruence_check(a: &InvariantField, b: &InvariantField) -> Result<CongruenceReport> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch);
    }
    let m = a.scheme.trusted_margin(2).max(b.scheme.trusted_margin(2));
    let h = a.grid.h();
    let tolerance = 10.0 * h * h;
    let omega = a.omega.max_deviation(&b.omega, m)?;
    let theta = a.theta.max_deviation(&b.theta, m)?;
    let phi = a.phi.max_deviation(&b.phi, m)?;
    let psi = a.psi.max_deviation(&b.psi, m)?;
    let congruent = [omega, theta, phi, psi].iter().all(|&d| d < tolerance);
    Ok(CongruenceReport {
        omega,
        theta,
        phi,
        psi,
        tolerance,
        congruent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clifford(grid: GridDomain) -> LiftField {
        let s = 2f64.sqrt();
        Field::from_fn(grid, |i, j| {
            let (x, y) = (grid.x(i), grid.y(j));
            let comp = |k: f64| {
                let t = 2.0 * PI * k / 3.0;
                Complex64::from_polar(1.0 / 3f64.sqrt(), s * (t.cos() * x + t.sin() * y))
            };
            Vec3::new(comp(1.0), comp(2.0), comp(3.0)) * I
        })
    }

    #[test]
    fn clifford_invariants_are_constant() {
        let g = GridDomain::centered(0.02, 31).unwrap();
        let inv = derive_invariants(&clifford(g)).unwrap();
        for (i, j) in g.nodes(2) {
            assert!((inv.a.at(i, j).re - 1.0).abs() < 1e-12);
            assert!((inv.omega.at(i, j).re.exp() - 0.5).abs() < 1e-7);
            assert!(inv.phi.at(i, j).norm() < 1e-6);
            assert!(inv.rho.at(i, j).norm() < 1e-7);
            assert!((inv.psi.at(i, j) - I * 2f64.sqrt() / 4.0).norm() < 1e-6);
        }
    }

    #[test]
    fn clifford_frame_is_special_and_constant_mc() {
        let g = GridDomain::centered(0.02, 21).unwrap();
        let lift = clifford(g);
        let inv = derive_invariants(&lift).unwrap();
        let fr = build_frame(&lift, &inv).unwrap();
        assert!(fr.det_defect() < 1e-7, "{}", fr.det_defect());
        let r = 1.0 / 2f64.sqrt();
        let expected = Mat3::new(
            re(0.0),
            re(0.0),
            I * r,
            I * r,
            re(0.0),
            re(0.0),
            re(0.0),
            I * r,
            re(0.0),
        );
        for (i, j) in g.nodes(2) {
            assert!(frob(&(fr.u.at(i, j) - expected)) < 1e-5);
        }
    }

    #[test]
    fn cube_root_is_continuous_and_exact() {
        let g = GridDomain::centered(0.05, 15).unwrap();
        let w = Field::from_fn(g, |i, j| {
            Complex64::from_polar(1.0, 2.0 * g.x(i) + g.y(j) + 2.5)
        });
        let r = continuous_cube_root(&w).unwrap();
        for k in 0..g.len() {
            assert!((r.values[k].powu(3) - w.values[k]).norm() < 1e-13);
        }
    }

    #[test]
    fn winding_phase_is_rejected() {
        let g = GridDomain::centered(0.5, 7).unwrap();
        let w = Field::from_fn(g, |i, j| {
            let z = g.z(i, j) - Complex64::new(0.25, 0.25);
            (z / z.norm()).powu(8)
        });
        assert!(matches!(
            continuous_cube_root(&w),
            Err(Error::PhaseUnwrapFailure { .. })
        ));
    }

    #[test]
    fn mc_invariants_invert_mc_matrix() {
        let phi = Complex64::new(0.2, -0.1);
        let psi = Complex64::new(-0.3, 0.4);
        let rho = Complex64::new(0.05, 0.02);
        let u = mc_matrix(1.3, 0.7, -0.4, phi, psi, rho, re(0.1), re(-0.2), re(0.3));
        let m = mc_invariants(&u, 1e-12).unwrap();
        assert!((m.a - 1.3).abs() < 1e-14 && (m.b - 0.7).abs() < 1e-14);
        assert!((m.omega + 0.4).abs() < 1e-14);
        assert!((m.phi - phi).norm() < 1e-14);
        assert!((m.psi - psi).norm() < 1e-14);
        assert!((m.rho - rho).norm() < 1e-14);
    }
}
