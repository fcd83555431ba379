//! Holomorphic potentials and the loop-group construction of primitive
//! frames: integrate dC = Cη from a base point, split C = F·V₊ nodewise, and
//! read surfaces off F at points of the unit circle.

use num_complex::Complex64;
use rand::{rngs::StdRng, Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{eigenspace_decompose, frob, EigenIndex, Mat3, Vec3};
use crate::catalog;
use crate::error::{Error, Result};
use crate::frames::{
    classify_primitivity, derive_invariants, Classification, FrameField, InvariantField, LiftField,
};
use crate::grid::{Field, GridDomain, Scheme};
use crate::loops::{
    flatten, iwasawa_split_with, unflatten, FactorOptions, Reality, Twist, TwistedLoop, DEFAULT_N,
};

/// Coefficient function of one λ-degree.
#[derive(Clone, Debug)]
pub enum CoeffFn {
    /// Σᵢ Aᵢ zⁱ.
    Poly(Vec<Mat3>),
    /// Values at the nodes of a grid (recovered potentials).
    Sampled(Field<Mat3>),
}

#[derive(Clone, Debug)]
pub struct Term {
    pub degree: i32,
    pub coeff: CoeffFn,
}

/// η = Σⱼ λʲ ηⱼ(z) dz.
#[derive(Clone, Debug, Default)]
pub struct Potential {
    pub terms: Vec<Term>,
}

impl Potential {
    pub fn zero() -> Self {
        Potential { terms: Vec::new() }
    }

    /// λ⁻¹E dz.
    pub fn vacuum(e: Mat3) -> Self {
        Potential {
            terms: vec![Term {
                degree: -1,
                coeff: CoeffFn::Poly(vec![e]),
            }],
        }
    }

    pub fn with_term(mut self, degree: i32, poly: Vec<Mat3>) -> Self {
        self.terms.push(Term {
            degree,
            coeff: CoeffFn::Poly(poly),
        });
        self
    }

    pub fn named(name: &str) -> Result<Self> {
        match name {
            "vacuum" => Ok(Self::vacuum(catalog::vacuum_coefficient())),
            other => Err(Error::UnknownCatalog(other.into())),
        }
    }

    /// ηⱼ(z) for polynomial terms.
    pub fn coefficient(&self, degree: i32, z: Complex64) -> Result<Mat3> {
        let mut acc = Mat3::zeros();
        for t in self.terms.iter().filter(|t| t.degree == degree) {
            match &t.coeff {
                CoeffFn::Poly(p) => {
                    for a in p.iter().rev() {
                        acc = acc * z + a;
                    }
                }
                CoeffFn::Sampled(_) => {
                    return Err(Error::DegreeViolation(
                        "sampled coefficients cannot be evaluated off the grid".into(),
                    ))
                }
            }
        }
        Ok(acc)
    }

    pub fn degrees(&self) -> Vec<i32> {
        let mut d: Vec<i32> = self.terms.iter().map(|t| t.degree).collect();
        d.sort_unstable();
        d.dedup();
        d
    }

    /// η(z) as an algebra loop.
    pub fn loop_at(&self, z: Complex64, n: usize) -> Result<TwistedLoop> {
        let mut l = TwistedLoop::zero(n, Twist::Twisted, Reality::None);
        for d in self.degrees() {
            l.set(d, self.coefficient(d, z)?)?;
        }
        Ok(l)
    }

    pub fn to_json(&self) -> Result<PotentialJson> {
        let mut terms = Vec::new();
        for t in &self.terms {
            match &t.coeff {
                CoeffFn::Poly(p) => terms.push(TermJson {
                    degree: t.degree,
                    poly: Some(
                        p.iter()
                            .enumerate()
                            .map(|(i, m)| PolyJson {
                                i: i as u32,
                                j_unused: 0,
                                coeff_matrix: flatten(m),
                            })
                            .collect(),
                    ),
                    named_catalog: None,
                }),
                CoeffFn::Sampled(_) => {
                    return Err(Error::DegreeViolation(
                        "sampled potentials have no polynomial form".into(),
                    ))
                }
            }
        }
        Ok(PotentialJson { terms })
    }

    pub fn from_json(v: &PotentialJson) -> Result<Self> {
        let mut out = Potential::zero();
        for t in &v.terms {
            match (&t.poly, &t.named_catalog) {
                (Some(poly), None) => {
                    let deg = poly.iter().map(|p| p.i as usize).max().map_or(0, |d| d + 1);
                    let mut coeffs = vec![Mat3::zeros(); deg];
                    for p in poly {
                        if p.j_unused != 0 {
                            return Err(Error::Parse(
                                "potentials are polynomial in z only (j_unused must be 0)".into(),
                            ));
                        }
                        coeffs[p.i as usize] += unflatten(&p.coeff_matrix)?;
                    }
                    out.terms.push(Term {
                        degree: t.degree,
                        coeff: CoeffFn::Poly(coeffs),
                    });
                }
                (None, Some(name)) => {
                    for term in Potential::named(name)?.terms {
                        out.terms.push(Term {
                            degree: t.degree,
                            ..term
                        });
                    }
                }
                _ => {
                    return Err(Error::Parse(
                        "each term needs exactly one of `poly` or `named_catalog`".into(),
                    ))
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolyJson {
    pub i: u32,
    #[serde(default)]
    pub j_unused: u32,
    pub coeff_matrix: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermJson {
    pub degree: i32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub poly: Option<Vec<PolyJson>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub named_catalog: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialJson {
    pub terms: Vec<TermJson>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PotentialReport {
    pub lowest_degree: Option<i32>,
    /// (degree, max ‖ηⱼ − (ηⱼ)_{j mod 6}‖ over the sample points).
    pub defects: Vec<(i32, f64)>,
}

pub const GRADING_TOL: f64 = 1e-10;

/// Checks the grading ηⱼ ∈ 𝔤_{j mod 6} at 20 pseudo-random points of the unit
/// disk and that the lowest degree is −1.
pub fn validate_potential(p: &Potential) -> Result<PotentialReport> {
    let degrees = p.degrees();
    if let Some(&d) = degrees.first() {
        if d != -1 {
            return Err(Error::DegreeViolation(format!(
                "lowest degree is {d}, expected -1"
            )));
        }
    }
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let zs: Vec<Complex64> = (0..20)
        .map(|_| {
            Complex64::from_polar(
                rng.gen_range(0.0..1.0f64).sqrt(),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    let mut defects = Vec::new();
    for &d in &degrees {
        let mut worst: f64 = 0.0;
        for &z in &zs {
            let x = p.coefficient(d, z)?;
            let parts = eigenspace_decompose(&x).map_err(|_| Error::GradingViolation {
                degree: d,
                defect: frob(&x),
            })?;
            worst = worst.max(frob(&(x - parts[EigenIndex::new(d as i64).value()])));
        }
        if worst > GRADING_TOL {
            return Err(Error::GradingViolation {
                degree: d,
                defect: worst,
            });
        }
        defects.push((d, worst));
    }
    Ok(PotentialReport {
        lowest_degree: degrees.first().copied(),
        defects,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct DpwOptions {
    /// Truncation N of the integrated loops.
    pub n: usize,
    /// Base node (i, j); the grid centre when None.
    pub base: Option<(usize, usize)>,
    pub scheme: Scheme,
    /// RK4 steps per grid spacing.
    pub substeps: usize,
}

impl Default for DpwOptions {
    fn default() -> Self {
        DpwOptions {
            n: DEFAULT_N,
            base: None,
            scheme: Scheme::Central4,
            substeps: 4,
        }
    }
}

/// Loop-valued field over a grid.
#[derive(Clone, Debug)]
pub struct LoopField {
    pub grid: GridDomain,
    pub loops: Vec<TwistedLoop>,
}

impl LoopField {
    pub fn at(&self, i: usize, j: usize) -> &TwistedLoop {
        &self.loops[self.grid.index(i, j)]
    }

    /// Coefficient of λʲ as a matrix field.
    pub fn degree_field(&self, j: i32) -> Field<Mat3> {
        Field {
            grid: self.grid,
            values: self.loops.iter().map(|l| l.coeff(j)).collect(),
        }
    }

    /// Max coefficient-wise distance to another field.
    pub fn max_deviation(&self, other: &LoopField) -> f64 {
        self.loops
            .iter()
            .zip(&other.loops)
            .map(|(a, b)| {
                let n = a.n().max(b.n()) as i32;
                (-n..=n)
                    .map(|j| frob(&(a.coeff(j) - b.coeff(j))))
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IntegrationReport {
    /// Rows-then-columns against columns-then-rows.
    pub path_dev: f64,
    /// Max ‖∂_z̄ C‖ over the interior.
    pub holomorphy_defect: f64,
    /// Max |det C − 1| on 8 circle samples per node.
    pub det_defect: f64,
    pub max_tail: f64,
}

pub const DIVERGENCE_NORM: f64 = 1e6;

fn lerp(a: &TwistedLoop, k: &TwistedLoop, s: f64) -> TwistedLoop {
    a.add(&k.scale(Complex64::new(s, 0.0)))
}

/// One classical RK4 step of dC/ds = C·η(z + sδ)·δ over s ∈ [0, 1].
fn rk4_step(
    c: &TwistedLoop,
    p: &Potential,
    z: Complex64,
    delta: Complex64,
    n: usize,
) -> Result<TwistedLoop> {
    let f = |c: &TwistedLoop, s: f64| -> Result<TwistedLoop> {
        let eta = p.loop_at(z + delta * s, n)?;
        Ok(c.mul_with(&eta, n, f64::INFINITY)?.scale(delta))
    };
    let k1 = f(c, 0.0)?;
    let k2 = f(&lerp(c, &k1, 0.5), 0.5)?;
    let k3 = f(&lerp(c, &k2, 0.5), 0.5)?;
    let k4 = f(&lerp(c, &k3, 1.0), 1.0)?;
    let sum = k1
        .add(&k2.scale(Complex64::new(2.0, 0.0)))
        .add(&k3.scale(Complex64::new(2.0, 0.0)))
        .add(&k4);
    let out = lerp(c, &sum, 1.0 / 6.0);
    let norm = out.terms().map(|(_, m)| frob(m)).fold(0.0, f64::max);
    if !(norm <= DIVERGENCE_NORM) {
        return Err(Error::StepDiverged(norm));
    }
    Ok(out)
}

fn advance(
    c: &TwistedLoop,
    p: &Potential,
    z: Complex64,
    delta: Complex64,
    n: usize,
    substeps: usize,
) -> Result<TwistedLoop> {
    let d = delta / substeps as f64;
    let mut cur = c.clone();
    for k in 0..substeps {
        cur = rk4_step(&cur, p, z + d * k as f64, d, n)?;
    }
    Ok(cur)
}

/// Integrates along the row (or column) through `start`, in both directions.
fn sweep(
    p: &Potential,
    grid: &GridDomain,
    start: (usize, usize),
    horizontal: bool,
    init: &TwistedLoop,
    n: usize,
    substeps: usize,
) -> Result<Vec<(usize, TwistedLoop)>> {
    let h = grid.h();
    let (len, pos) = if horizontal {
        (grid.nx, start.0)
    } else {
        (grid.ny, start.1)
    };
    let step = if horizontal {
        Complex64::new(h, 0.0)
    } else {
        Complex64::new(0.0, h)
    };
    let node = |k: usize| {
        if horizontal {
            grid.index(k, start.1)
        } else {
            grid.index(start.0, k)
        }
    };
    let zat = |k: usize| {
        if horizontal {
            grid.z(k, start.1)
        } else {
            grid.z(start.0, k)
        }
    };
    let mut out = vec![(node(pos), init.clone())];
    let mut cur = init.clone();
    for k in pos..len - 1 {
        cur = advance(&cur, p, zat(k), step, n, substeps)?;
        out.push((node(k + 1), cur.clone()));
    }
    let mut cur = init.clone();
    for k in (1..=pos).rev() {
        cur = advance(&cur, p, zat(k), -step, n, substeps)?;
        out.push((node(k - 1), cur.clone()));
    }
    Ok(out)
}

fn integrate_order(
    p: &Potential,
    grid: &GridDomain,
    base: (usize, usize),
    opts: &DpwOptions,
    rows_first: bool,
) -> Result<Vec<TwistedLoop>> {
    let (n, sub) = (opts.n, opts.substeps.max(1));
    let id = {
        let mut l = TwistedLoop::identity(n);
        l.reality = Reality::None;
        l
    };
    let first = sweep(p, grid, base, rows_first, &id, n, sub)?;
    let lines: Vec<Vec<(usize, TwistedLoop)>> = first
        .par_iter()
        .map(|(idx, c)| {
            let (i, j) = grid.coords(*idx);
            sweep(p, grid, (i, j), !rows_first, c, n, sub)
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<Option<TwistedLoop>> = vec![None; grid.len()];
    for line in lines {
        for (idx, c) in line {
            out[idx] = Some(c);
        }
    }
    Ok(out
        .into_iter()
        .map(|c| c.expect("every node reached"))
        .collect())
}

/// Solves dC = Cη with C(z₀) = I: first along the row through z₀, then along
/// every column. The same solve in the other order checks flatness.
pub fn integrate_potential(
    p: &Potential,
    grid: &GridDomain,
    opts: &DpwOptions,
) -> Result<(LoopField, IntegrationReport)> {
    grid.validate()?;
    validate_potential(p)?;
    if p.terms
        .iter()
        .any(|t| t.degree.unsigned_abs() as usize > opts.n)
    {
        return Err(Error::DegreeViolation(format!(
            "potential degree exceeds truncation N = {}",
            opts.n
        )));
    }
    let base = opts.base.unwrap_or_else(|| grid.center());
    let a = integrate_order(p, grid, base, opts, true)?;
    let b = integrate_order(p, grid, base, opts, false)?;
    let field = LoopField {
        grid: *grid,
        loops: a,
    };
    let other = LoopField {
        grid: *grid,
        loops: b,
    };
    let path_dev = field.max_deviation(&other);
    let n = opts.n as i32;
    let margin = opts.scheme.margin();
    let mut holomorphy_defect: f64 = 0.0;
    for j in -n..=n {
        let f = field.degree_field(j);
        holomorphy_defect = holomorphy_defect.max(f.dzbar(opts.scheme).max_norm(margin));
    }
    let det_defect = field
        .loops
        .par_iter()
        .map(|l| l.det_defect(8))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let max_tail = field
        .loops
        .iter()
        .map(|l| l.tail_mass())
        .fold(0.0, f64::max);
    Ok((
        field,
        IntegrationReport {
            path_dev,
            holomorphy_defect,
            det_defect,
            max_tail,
        },
    ))
}

#[derive(Clone, Debug)]
pub struct ExtendedFrameField {
    pub grid: GridDomain,
    pub base: (usize, usize),
    pub scheme: Scheme,
    pub frames: LoopField,
    pub plus: LoopField,
    /// The holomorphic C field, kept for potential recovery.
    pub generating: Option<LoopField>,
    pub integration: Option<IntegrationReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct McDegreeReport {
    /// Max coefficient norm of F⁻¹F_z at each degree, from −n to n.
    pub dz: Vec<(i32, f64)>,
    pub dzbar: Vec<(i32, f64)>,
    /// Largest coefficient outside degrees {−1, 0} (dz) and {0, 1} (dz̄).
    pub off_degree: f64,
}

/// Iwasawa split at every node.
pub fn frames_from_potential(
    p: &Potential,
    grid: &GridDomain,
    opts: &DpwOptions,
) -> Result<ExtendedFrameField> {
    let (c, report) = integrate_potential(p, grid, opts)?;
    let fo = FactorOptions {
        section: 2 * opts.n,
        n_out: 2 * opts.n,
        tol: 1e-9,
        max_enlargements: 2,
    };
    let split: Vec<(TwistedLoop, TwistedLoop)> = c
        .loops
        .par_iter()
        .map(|l| iwasawa_split_with(l, &fo))
        .collect::<Result<_>>()?;
    let (frames, plus): (Vec<_>, Vec<_>) = split.into_iter().unzip();
    Ok(ExtendedFrameField {
        grid: *grid,
        base: opts.base.unwrap_or_else(|| grid.center()),
        scheme: opts.scheme,
        frames: LoopField {
            grid: *grid,
            loops: frames,
        },
        plus: LoopField {
            grid: *grid,
            loops: plus,
        },
        generating: Some(c),
        integration: Some(report),
    })
}

impl ExtendedFrameField {
    /// λ-degree content of the Maurer–Cartan form F⁻¹dF over the interior.
    pub fn mc_degrees(&self) -> Result<McDegreeReport> {
        let n = self.frames.loops[0].n() as i32;
        let s = self.scheme;
        let (mut dz_fields, mut dzb_fields) = (Vec::new(), Vec::new());
        for j in -n..=n {
            let (a, b) = self.frames.degree_field(j).dz_dzbar(s);
            dz_fields.push(a);
            dzb_fields.push(b);
        }
        let to_loop = |fields: &[Field<Mat3>], k: usize| {
            let terms: Vec<(i32, Mat3)> = (-n..=n)
                .map(|j| (j, fields[(j + n) as usize].values[k]))
                .collect();
            TwistedLoop::from_terms(n as usize, &terms, Twist::Twisted, Reality::None)
        };
        let nodes: Vec<(usize, usize)> = self.grid.nodes(s.trusted_margin(1)).collect();
        let per_node: Vec<(Vec<f64>, Vec<f64>)> = nodes
            .par_iter()
            .map(|&(i, j)| {
                let k = self.grid.index(i, j);
                let mut finv = self.frames.loops[k].unitary_inverse();
                finv.reality = Reality::None;
                let az = finv.mul_with(&to_loop(&dz_fields, k)?, 2 * n as usize, f64::INFINITY)?;
                let azb =
                    finv.mul_with(&to_loop(&dzb_fields, k)?, 2 * n as usize, f64::INFINITY)?;
                let norms = |l: &TwistedLoop| {
                    (-2 * n..=2 * n)
                        .map(|d| frob(&l.coeff(d)))
                        .collect::<Vec<f64>>()
                };
                Ok((norms(&az), norms(&azb)))
            })
            .collect::<Result<_>>()?;
        let width = (4 * n + 1) as usize;
        let mut dz = vec![0.0f64; width];
        let mut dzb = vec![0.0f64; width];
        for (a, b) in per_node {
            for d in 0..width {
                dz[d] = dz[d].max(a[d]);
                dzb[d] = dzb[d].max(b[d]);
            }
        }
        let degs: Vec<i32> = (-2 * n..=2 * n).collect();
        let off_degree = degs
            .iter()
            .enumerate()
            .map(|(k, &d)| {
                let a = if d == -1 || d == 0 { 0.0 } else { dz[k] };
                let b = if d == 0 || d == 1 { 0.0 } else { dzb[k] };
                a.max(b)
            })
            .fold(0.0, f64::max);
        Ok(McDegreeReport {
            dz: degs.iter().copied().zip(dz).collect(),
            dzbar: degs.iter().copied().zip(dzb).collect(),
            off_degree,
        })
    }

    /// Max ‖F(z₀, λ) − I‖ on circle samples.
    pub fn base_defect(&self) -> Result<f64> {
        let id = TwistedLoop::identity(1);
        self.frames
            .at(self.base.0, self.base.1)
            .sample_distance(&id, 16)
    }

    /// F(·, λ₀) as a matrix field.
    pub fn frame_at(&self, lambda: Complex64) -> Result<Field<Mat3>> {
        check_on_circle(lambda)?;
        let values = self
            .frames
            .loops
            .iter()
            .map(|l| l.eval(lambda))
            .collect::<Result<_>>()?;
        Ok(Field {
            grid: self.grid,
            values,
        })
    }
}

fn check_on_circle(lambda: Complex64) -> Result<()> {
    if !lambda.re.is_finite() || !lambda.im.is_finite() || (lambda.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::NotOnCircle(lambda));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct SurfaceAtLambda {
    pub lambda: Complex64,
    /// 𝔣 = F(·, λ₀) e₃.
    pub lift: LiftField,
    pub invariants: InvariantField,
    pub classification: Classification,
}

/// The member λ₀ of the associated family. F(λ₀) is already an SU(3) frame of
/// 𝔣 = F(λ₀)e₃, so it is classified directly; rebuilding a frame from 𝔣 would
/// differ by a diagonal gauge and need a special lift first.
pub fn surface_at_lambda(
    frames: &ExtendedFrameField,
    lambda: Complex64,
) -> Result<SurfaceAtLambda> {
    let f = frames.frame_at(lambda)?;
    let lift: LiftField = f.map(|m| -> Vec3 { m.column(2).into_owned() });
    let invariants = derive_invariants(&lift)?;
    let frame = FrameField::from_matrices(f, frames.scheme)?;
    let classification = classify_primitivity(&frame)?;
    Ok(SurfaceAtLambda {
        lambda,
        lift,
        invariants,
        classification,
    })
}

/// η = C⁻¹ ∂_z C recomputed from the retained C field. Degrees below −1 are
/// kept so that round-trip errors stay visible.
pub fn potential_from_frame(frames: &ExtendedFrameField) -> Result<Potential> {
    let c = frames.generating.as_ref().ok_or(Error::MissingProvenance)?;
    let n = c.loops[0].n() as i32;
    let s = frames.scheme;
    let cz: Vec<Field<Mat3>> = (-n..=n).map(|j| c.degree_field(j).dz(s)).collect();
    let per_node: Vec<TwistedLoop> = c
        .loops
        .par_iter()
        .enumerate()
        .map(|(k, l)| {
            let inv = l.adjugate()?;
            let terms: Vec<(i32, Mat3)> = (-n..=n)
                .map(|j| (j, cz[(j + n) as usize].values[k]))
                .collect();
            let d = TwistedLoop::from_terms(n as usize, &terms, inv.twist, Reality::None)?;
            inv.mul_with(&d, n as usize, f64::INFINITY)
        })
        .collect::<Result<_>>()?;
    let field = LoopField {
        grid: c.grid,
        loops: per_node,
    };
    let mut terms = Vec::new();
    for j in -n..=n {
        let f = field.degree_field(j);
        if f.values.iter().any(|m| frob(m) > 0.0) {
            terms.push(Term {
                degree: j,
                coeff: CoeffFn::Sampled(f),
            });
        }
    }
    Ok(Potential { terms })
}

/// Max over the trusted interior and all degrees of the difference between a
/// recovered (sampled) potential and a polynomial one.
pub fn potential_deviation(
    recovered: &Potential,
    reference: &Potential,
    scheme: Scheme,
) -> Result<f64> {
    let mut degrees: Vec<i32> = recovered.degrees();
    degrees.extend(reference.degrees());
    degrees.sort_unstable();
    degrees.dedup();
    let mut worst: f64 = 0.0;
    for d in degrees {
        for t in recovered.terms.iter().filter(|t| t.degree == d) {
            let CoeffFn::Sampled(f) = &t.coeff else {
                return Err(Error::DegreeViolation(
                    "expected a sampled potential".into(),
                ));
            };
            for (i, j) in f.grid.nodes(scheme.trusted_margin(1)) {
                let expected = reference.coefficient(d, f.grid.z(i, j))?;
                worst = worst.max(frob(&(f.at(i, j) - expected)));
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{c, eigenspace_basis, exp_mat};

    #[test]
    fn grading_is_enforced() {
        let e5 = eigenspace_basis(EigenIndex::new(5))[0];
        assert!(validate_potential(&Potential::vacuum(e5)).is_ok());
        let e2 = eigenspace_basis(EigenIndex::new(2))[0];
        assert!(matches!(
            validate_potential(&Potential::vacuum(e2)),
            Err(Error::GradingViolation { degree: -1, .. })
        ));
        let e1 = eigenspace_basis(EigenIndex::new(1))[1];
        assert!(validate_potential(&Potential::vacuum(e5).with_term(1, vec![e1])).is_ok());
        let bad = Potential::zero().with_term(1, vec![e1]);
        assert!(matches!(
            validate_potential(&bad),
            Err(Error::DegreeViolation(_))
        ));
    }

    #[test]
    fn vacuum_integrates_to_exponential() {
        let g = GridDomain::centered(0.05, 9).unwrap();
        let e = catalog::vacuum_coefficient();
        let (cf, rep) =
            integrate_potential(&Potential::vacuum(e), &g, &DpwOptions::default()).unwrap();
        assert!(rep.path_dev < 1e-12);
        let lam = c(0.6, 0.8);
        for (i, j) in g.nodes(0) {
            let z = g.z(i, j);
            let exact = exp_mat(&(e * (z / lam)));
            let d = frob(&(cf.at(i, j).eval(lam).unwrap() - exact));
            assert!(d < 1e-10, "{d}");
        }
    }

    #[test]
    fn potential_json_round_trip() {
        let p = Potential::named("vacuum").unwrap();
        let s = serde_json::to_string(&p.to_json().unwrap()).unwrap();
        let back = Potential::from_json(&serde_json::from_str(&s).unwrap()).unwrap();
        let z = c(0.2, -0.1);
        assert_eq!(
            back.coefficient(-1, z).unwrap(),
            p.coefficient(-1, z).unwrap()
        );
        let named: PotentialJson =
            serde_json::from_str(r#"{"terms":[{"degree":-1,"named_catalog":"vacuum"}]}"#).unwrap();
        assert_eq!(
            Potential::from_json(&named)
                .unwrap()
                .coefficient(-1, z)
                .unwrap(),
            p.coefficient(-1, z).unwrap()
        );
    }

    #[test]
    fn off_circle_lambda_rejected() {
        assert!(matches!(
            check_on_circle(c(1.1, 0.0)),
            Err(Error::NotOnCircle(_))
        ));
        assert!(check_on_circle(c(0.0, 1.0)).is_ok());
    }
}
