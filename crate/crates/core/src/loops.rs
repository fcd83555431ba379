//! Truncated matrix Laurent series in the spectral parameter λ, and the
//! Birkhoff and Iwasawa factorizations.
//!
//! A loop stores the coefficients X_j for j ∈ [−N, N]. Multiplication
//! truncates back to [−N, N] and records the norm of what was dropped.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    eigenspace_basis, eigenspace_decompose, exp_mat, frob, sigma_apply, tau_apply, EigenIndex,
    Level, Mat3,
};
use crate::error::{Error, Result};

pub const DEFAULT_N: usize = 12;
pub const DEFAULT_TAIL_BUDGET: f64 = 1e-8;
/// Condition number above which a loop is treated as outside the big cell.
pub const BIG_CELL_COND: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Twist {
    #[serde(rename = "sigma-twisted")]
    Twisted,
    #[serde(rename = "untwisted")]
    Untwisted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Reality {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "real-form")]
    RealForm,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistedLoop {
    n: usize,
    coeffs: Vec<Mat3>,
    pub twist: Twist,
    pub reality: Reality,
    dropped: f64,
}

fn cpx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// The m-th roots of unity.
pub fn circle_samples(m: usize) -> Vec<Complex64> {
    (0..m)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64))
        .collect()
}

impl TwistedLoop {
    pub fn zero(n: usize, twist: Twist, reality: Reality) -> Self {
        TwistedLoop {
            n,
            coeffs: vec![Mat3::zeros(); 2 * n + 1],
            twist,
            reality,
            dropped: 0.0,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(Mat3::identity(), n, Twist::Twisted, Reality::RealForm)
    }

    pub fn constant(m: Mat3, n: usize, twist: Twist, reality: Reality) -> Self {
        let mut l = Self::zero(n, twist, reality);
        l.coeffs[n] = m;
        l
    }

    /// Loop with the given (degree, coefficient) pairs; degrees must lie in [−n, n].
    pub fn from_terms(
        n: usize,
        terms: &[(i32, Mat3)],
        twist: Twist,
        reality: Reality,
    ) -> Result<Self> {
        let mut l = Self::zero(n, twist, reality);
        for &(j, m) in terms {
            l.set(j, m)?;
        }
        Ok(l)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn slot(&self, j: i32) -> Option<usize> {
        let k = j + self.n as i32;
        (0..self.coeffs.len() as i32)
            .contains(&k)
            .then_some(k as usize)
    }

    pub fn coeff(&self, j: i32) -> Mat3 {
        self.slot(j)
            .map(|k| self.coeffs[k])
            .unwrap_or_else(Mat3::zeros)
    }

    pub fn set(&mut self, j: i32, m: Mat3) -> Result<()> {
        let k = self.slot(j).ok_or_else(|| {
            Error::DegreeViolation(format!("degree {j} outside [-{}, {}]", self.n, self.n))
        })?;
        self.coeffs[k] = m;
        Ok(())
    }

    /// (degree, coefficient) for every stored degree.
    pub fn terms(&self) -> impl Iterator<Item = (i32, &Mat3)> {
        let n = self.n as i32;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, m)| (k as i32 - n, m))
    }

    /// Lowest and highest degree with a coefficient above `tol`.
    pub fn degree_range(&self, tol: f64) -> Option<(i32, i32)> {
        let nz: Vec<i32> = self
            .terms()
            .filter(|(_, m)| frob(m) > tol)
            .map(|(j, _)| j)
            .collect();
        Some((*nz.first()?, *nz.last()?))
    }

    /// Accumulated norm of coefficients discarded by truncation.
    pub fn dropped_tail(&self) -> f64 {
        self.dropped
    }

    /// max(‖X_N‖, ‖X_{−N}‖).
    pub fn tail_mass(&self) -> f64 {
        frob(&self.coeffs[0]).max(frob(&self.coeffs[2 * self.n]))
    }

    pub fn eval(&self, lambda: Complex64) -> Result<Mat3> {
        let n = self.n as i32;
        if lambda == cpx(0.0) {
            if self.terms().any(|(j, m)| j < 0 && frob(m) > 0.0) {
                return Err(Error::ZeroEvaluation);
            }
            return Ok(self.coeff(0));
        }
        // Horner in λ for j ≥ 0 and in λ⁻¹ for j < 0.
        let mut pos = Mat3::zeros();
        for j in (0..=n).rev() {
            pos = pos * lambda + self.coeff(j);
        }
        let inv = lambda.inv();
        let mut neg = Mat3::zeros();
        for j in (1..=n).rev() {
            neg = (neg + self.coeff(-j)) * inv;
        }
        Ok(pos + neg)
    }

    /// Same loop stored with truncation `n`; coefficients beyond it are dropped
    /// and their norm recorded.
    pub fn resized(&self, n: usize) -> Self {
        let mut out = Self::zero(n, self.twist, self.reality);
        out.dropped = self.dropped;
        let mut lost = 0.0f64;
        for (j, m) in self.terms() {
            if j.unsigned_abs() as usize <= n {
                out.coeffs[(j + n as i32) as usize] = *m;
            } else {
                lost += frob(m);
            }
        }
        out.dropped += lost;
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.mul_with(other, self.n.max(other.n), DEFAULT_TAIL_BUDGET)
    }

    /// Cauchy product truncated to [−n, n]. Fails when the dropped tail,
    /// including what the factors had already dropped, exceeds `budget`.
    pub fn mul_with(&self, other: &Self, n: usize, budget: f64) -> Result<Self> {
        if self.twist != other.twist {
            return Err(Error::IncompatibleLoops(
                "cannot multiply twisted and untwisted loops".into(),
            ));
        }
        let reality = if self.reality == Reality::RealForm && other.reality == Reality::RealForm {
            Reality::RealForm
        } else {
            Reality::None
        };
        let mut out = Self::zero(n, self.twist, reality);
        let ni = n as i32;
        let mut lost = Mat3Acc::default();
        for (ja, a) in self.terms() {
            if frob(a) == 0.0 {
                continue;
            }
            for (jb, b) in other.terms() {
                let d = ja + jb;
                if d.abs() <= ni {
                    out.coeffs[(d + ni) as usize] += a * b;
                } else {
                    lost.add(d, a * b);
                }
            }
        }
        out.dropped = self.dropped + other.dropped + lost.norm();
        if out.dropped > budget {
            return Err(Error::TailOverflow {
                dropped: out.dropped,
                budget,
            });
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.n.max(other.n);
        let mut out = Self::zero(
            n,
            self.twist,
            if self.reality == other.reality {
                self.reality
            } else {
                Reality::None
            },
        );
        for j in -(n as i32)..=(n as i32) {
            out.coeffs[(j + n as i32) as usize] = self.coeff(j) + other.coeff(j);
        }
        out.dropped = self.dropped + other.dropped;
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = self.clone();
        for m in &mut out.coeffs {
            *m *= s;
        }
        out
    }

    /// λ ↦ X(λ)* on the unit circle: coefficients (X*)_j = (X_{−j})*.
    pub fn adjoint_on_circle(&self) -> Self {
        let mut out = Self::zero(self.n, self.twist, self.reality);
        for (j, m) in self.terms() {
            out.coeffs[(-j + self.n as i32) as usize] = m.adjoint();
        }
        out.dropped = self.dropped;
        out
    }

    /// Inverse of a loop that is unitary on the circle.
    pub fn unitary_inverse(&self) -> Self {
        self.adjoint_on_circle()
    }

    /// Multiplies λ by a constant: coefficient j picks up c^j.
    pub fn rescale_lambda(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        for (k, m) in out.coeffs.iter_mut().enumerate() {
            *m *= c.powi(k as i32 - self.n as i32);
        }
        out
    }

    /// Inverse of a plus-series (degrees ≥ 0) as a power series up to degree n.
    pub fn plus_inverse(&self, n: usize) -> Result<Self> {
        self.series_inverse(n, 1)
    }

    /// Inverse of a minus-series (degrees ≤ 0) as a series in λ⁻¹ up to degree −n.
    pub fn minus_inverse(&self, n: usize) -> Result<Self> {
        self.series_inverse(n, -1)
    }

    fn series_inverse(&self, n: usize, dir: i32) -> Result<Self> {
        if self.terms().any(|(j, m)| j * dir < 0 && frob(m) > 0.0) {
            return Err(Error::DegreeViolation(
                "series inverse needs a one-sided loop".into(),
            ));
        }
        let x0 = self.coeff(0);
        let inv0 = x0
            .try_inverse()
            .ok_or(Error::Singular(x0.determinant().norm()))?;
        let mut out = Self::zero(n, self.twist, self.reality);
        let mut w = vec![inv0];
        for k in 1..=n as i32 {
            let mut acc = Mat3::zeros();
            for m in 1..=k.min(self.n as i32) {
                acc += self.coeff(dir * m) * w[(k - m) as usize];
            }
            w.push(-inv0 * acc);
        }
        for (k, m) in w.into_iter().enumerate() {
            out.coeffs[(dir * k as i32 + n as i32) as usize] = m;
        }
        out.dropped = self.dropped;
        Ok(out)
    }

    /// Adjugate loop; equals the inverse when det ≡ 1.
    pub fn adjugate(&self) -> Result<Self> {
        let n = self.n;
        let entry = |r: usize, c: usize| {
            let mut l = Self::zero(n, Twist::Untwisted, Reality::None);
            for (k, m) in self.coeffs.iter().enumerate() {
                l.coeffs[k][(0, 0)] = m[(r, c)];
            }
            l
        };
        let mut out = Self::zero(n, self.twist, Reality::None);
        let mut lost = 0.0;
        for r in 0..3 {
            for c in 0..3 {
                // adj[r][c] = cofactor of entry (c, r)
                let (r1, r2) = others(c);
                let (c1, c2) = others(r);
                let p = entry(r1, c1).mul_with(&entry(r2, c2), n, f64::INFINITY)?;
                let q = entry(r1, c2).mul_with(&entry(r2, c1), n, f64::INFINITY)?;
                let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
                lost += p.dropped + q.dropped;
                for k in 0..2 * n + 1 {
                    out.coeffs[k][(r, c)] = (p.coeffs[k][(0, 0)] - q.coeffs[k][(0, 0)]) * sign;
                }
            }
        }
        out.dropped = self.dropped + lost;
        Ok(out)
    }

    pub fn samples(&self, m: usize) -> Result<Vec<(Complex64, Mat3)>> {
        circle_samples(m)
            .into_iter()
            .map(|l| Ok((l, self.eval(l)?)))
            .collect()
    }

    /// Coefficients from values at the m-th roots of unity (discrete Fourier
    /// transform); exact when the loop has degrees in [−n, n] and m > 2n.
    pub fn from_samples(values: &[Mat3], n: usize, twist: Twist, reality: Reality) -> Result<Self> {
        let m = values.len();
        if m <= 2 * n {
            return Err(Error::DegreeViolation(format!(
                "{m} samples cannot resolve degree {n}"
            )));
        }
        let mut out = Self::zero(n, twist, reality);
        let lams = circle_samples(m);
        for j in -(n as i32)..=(n as i32) {
            let mut acc = Mat3::zeros();
            for (l, v) in lams.iter().zip(values) {
                acc += v * l.powi(-j);
            }
            out.coeffs[(j + n as i32) as usize] = acc / cpx(m as f64);
        }
        Ok(out)
    }

    /// Algebra loops: max_j ‖X_j − (X_j)_{j mod 6}‖.
    pub fn algebra_twist_defect(&self) -> Result<f64> {
        let mut d: f64 = 0.0;
        for (j, m) in self.terms() {
            let parts = eigenspace_decompose(m)?;
            d = d.max(frob(&(m - parts[EigenIndex::new(j as i64).value()])));
        }
        Ok(d)
    }

    /// Algebra loops: max_j ‖τ(X_j) − X_{−j}‖.
    pub fn algebra_reality_defect(&self) -> Result<f64> {
        let mut d: f64 = 0.0;
        for (j, m) in self.terms() {
            d = d.max(frob(&(tau_apply(m, Level::Algebra)? - self.coeff(-j))));
        }
        Ok(d)
    }

    /// Group loops: max over m circle samples of ‖σ(g(ε⁻¹λ)) − g(λ)‖.
    pub fn group_twist_defect(&self, m: usize) -> Result<f64> {
        let e_inv = Complex64::from_polar(1.0, -PI / 3.0);
        let mut d: f64 = 0.0;
        for l in circle_samples(m) {
            let g = self.eval(l)?;
            let s = sigma_apply(&self.eval(e_inv * l)?, 1, Level::Group)?;
            d = d.max(frob(&(s - g)));
        }
        Ok(d)
    }

    /// max over m circle samples of ‖g g* − I‖.
    pub fn unitarity_defect(&self, m: usize) -> Result<f64> {
        let mut d: f64 = 0.0;
        for l in circle_samples(m) {
            d = d.max(crate::algebra::unitarity_defect(&self.eval(l)?));
        }
        Ok(d)
    }

    /// max over m circle samples of |det g − 1|.
    pub fn det_defect(&self, m: usize) -> Result<f64> {
        let mut d: f64 = 0.0;
        for l in circle_samples(m) {
            d = d.max((self.eval(l)?.determinant() - 1.0).norm());
        }
        Ok(d)
    }

    /// max over m circle samples of ‖self − other‖.
    pub fn sample_distance(&self, other: &Self, m: usize) -> Result<f64> {
        let mut d: f64 = 0.0;
        for l in circle_samples(m) {
            d = d.max(frob(&(self.eval(l)? - other.eval(l)?)));
        }
        Ok(d)
    }

    pub fn to_json(&self) -> LoopJson {
        LoopJson {
            n: self.n,
            twist: self.twist,
            reality: self.reality,
            coeffs: self
                .terms()
                .filter(|(_, m)| frob(m) > 0.0)
                .map(|(j, m)| CoeffJson {
                    j,
                    matrix: flatten(m),
                })
                .collect(),
        }
    }

    pub fn from_json(v: &LoopJson) -> Result<Self> {
        let mut l = Self::zero(v.n, v.twist, v.reality);
        for c in &v.coeffs {
            l.set(c.j, unflatten(&c.matrix)?)?;
        }
        Ok(l)
    }
}

fn others(k: usize) -> (usize, usize) {
    match k {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// Collects dropped products per degree so the recorded tail is the norm of
/// the discarded coefficients, not a sum of partial products.
#[derive(Default)]
struct Mat3Acc(std::collections::BTreeMap<i32, Mat3>);

impl Mat3Acc {
    fn add(&mut self, d: i32, m: Mat3) {
        *self.0.entry(d).or_insert_with(Mat3::zeros) += m;
    }
    fn norm(&self) -> f64 {
        self.0.values().map(frob).sum()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoeffJson {
    pub j: i32,
    /// Row-major entries, interleaved re/im.
    pub matrix: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LoopJson {
    #[serde(rename = "N")]
    pub n: usize,
    pub twist: Twist,
    pub reality: Reality,
    pub coeffs: Vec<CoeffJson>,
}

pub fn flatten(m: &Mat3) -> Vec<f64> {
    let mut v = Vec::with_capacity(18);
    for r in 0..3 {
        for c in 0..3 {
            v.push(m[(r, c)].re);
            v.push(m[(r, c)].im);
        }
    }
    v
}

pub fn unflatten(v: &[f64]) -> Result<Mat3> {
    if v.len() != 18 {
        return Err(Error::Parse(format!(
            "matrix needs 18 floats, got {}",
            v.len()
        )));
    }
    Ok(Mat3::from_fn(|r, c| {
        Complex64::new(v[6 * r + 2 * c], v[6 * r + 2 * c + 1])
    }))
}

fn block(m: &mut DMatrix<Complex64>, bi: usize, bj: usize, x: &Mat3) {
    for r in 0..3 {
        for c in 0..3 {
            m[(3 * bi + r, 3 * bj + c)] = x[(r, c)];
        }
    }
}

fn get_block(m: &DMatrix<Complex64>, bi: usize, bj: usize) -> Mat3 {
    Mat3::from_fn(|r, c| m[(3 * bi + r, 3 * bj + c)])
}

fn condition_number(m: &DMatrix<Complex64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FactorOptions {
    /// Size of the block-Toeplitz finite section (number of unknown blocks).
    pub section: usize,
    /// Truncation of the factors.
    pub n_out: usize,
    /// Accuracy demanded of the factorization on circle samples.
    pub tol: f64,
    /// Number of section enlargements before giving up.
    pub max_enlargements: usize,
}

impl FactorOptions {
    pub fn for_loop(l: &TwistedLoop) -> Self {
        FactorOptions {
            section: 2 * l.n.max(4),
            n_out: 2 * l.n.max(4),
            tol: 1e-9,
            max_enlargements: 3,
        }
    }
}

/// L = L₋·L₊ with L₋ = I + O(λ⁻¹) and L₊ holding degrees ≥ 0.
pub fn birkhoff_split(l: &TwistedLoop) -> Result<(TwistedLoop, TwistedLoop)> {
    birkhoff_split_with(l, &FactorOptions::for_loop(l))
}

/// Solves for M = L₋⁻¹ = I + Σ_{k≥1} M_{−k}λ⁻ᵏ such that M·L has no negative
/// degrees, as one block-Toeplitz system, then inverts M as a series.
pub fn birkhoff_split_with(
    l: &TwistedLoop,
    opts: &FactorOptions,
) -> Result<(TwistedLoop, TwistedLoop)> {
    let mut section = opts.section;
    let samples = 4 * opts.n_out.max(l.n) + 2;
    let mut last_err = f64::INFINITY;
    for _ in 0..=opts.max_enlargements {
        let k = section;
        // Σ_{k'=1..K} M_{−k'} L_{k'−m} = −L_{−m}, m = 1..K, transposed to A X = B.
        let mut a = DMatrix::<Complex64>::zeros(3 * k, 3 * k);
        let mut b = DMatrix::<Complex64>::zeros(3 * k, 3);
        for m in 1..=k {
            for kk in 1..=k {
                block(
                    &mut a,
                    m - 1,
                    kk - 1,
                    &l.coeff(kk as i32 - m as i32).transpose(),
                );
            }
            let rhs = -l.coeff(-(m as i32)).transpose();
            for r in 0..3 {
                for c in 0..3 {
                    b[(3 * (m - 1) + r, c)] = rhs[(r, c)];
                }
            }
        }
        let cond = condition_number(&a);
        if !(cond <= BIG_CELL_COND) {
            return Err(Error::OutsideBigCell(cond));
        }
        let x = a
            .lu()
            .solve(&b)
            .ok_or(Error::OutsideBigCell(f64::INFINITY))?;
        let mut minv = TwistedLoop::zero(k, l.twist, Reality::None);
        minv.set(0, Mat3::identity())?;
        for kk in 1..=k {
            let blk = Mat3::from_fn(|r, c| x[(3 * (kk - 1) + r, c)]);
            minv.set(-(kk as i32), blk.transpose())?;
        }
        let lp_full = minv.mul_with(&l.resized(k.max(l.n)), k.max(l.n), f64::INFINITY)?;
        let mut lplus = TwistedLoop::zero(opts.n_out, l.twist, Reality::None);
        for j in 0..=opts.n_out as i32 {
            lplus.set(j, lp_full.coeff(j))?;
        }
        let lminus = minv.minus_inverse(opts.n_out)?;
        let recon = lminus.mul_with(&lplus, opts.n_out, f64::INFINITY)?;
        let err = recon.sample_distance(l, samples)?;
        if err <= opts.tol {
            return Ok((lminus, lplus));
        }
        last_err = err;
        section *= 2;
    }
    Err(Error::FactorizationDiverged(format!(
        "Birkhoff reconstruction error {last_err:e}"
    )))
}

/// C = F·V₊ with F unitary on the circle and V₊ holding degrees ≥ 0,
/// V₊(0) upper triangular with positive diagonal.
pub fn iwasawa_split(c: &TwistedLoop) -> Result<(TwistedLoop, TwistedLoop)> {
    iwasawa_split_with(c, &FactorOptions::for_loop(c))
}

/// Spectral factorization X = C*C = V₊*V₊ on the circle. With W = V₊⁻¹,
/// X·W = V₊* has no positive degrees; writing Y = W (V₀*)⁻¹ gives the block
/// Toeplitz system Σ_k X_{m−k} Y_k = δ_{m0} I. Then Y₀⁻¹ = V₀*V₀ fixes V₀ by
/// Cholesky, V₊⁻¹ = Y V₀*, and F = C V₊⁻¹.
pub fn iwasawa_split_with(
    c: &TwistedLoop,
    opts: &FactorOptions,
) -> Result<(TwistedLoop, TwistedLoop)> {
    let mut section = opts.section;
    let samples = 4 * opts.n_out.max(c.n) + 2;
    let mut last_err = f64::INFINITY;
    let cstar = c.adjoint_on_circle();
    let x = cstar.mul_with(c, 2 * c.n, f64::INFINITY)?;
    for _ in 0..=opts.max_enlargements {
        let k = section;
        let dim = 3 * (k + 1);
        let mut t = DMatrix::<Complex64>::zeros(dim, dim);
        for m in 0..=k {
            for kk in 0..=k {
                block(&mut t, m, kk, &x.coeff(m as i32 - kk as i32));
            }
        }
        let mut rhs = DMatrix::<Complex64>::zeros(dim, 3);
        for r in 0..3 {
            rhs[(r, r)] = cpx(1.0);
        }
        let y = match t.clone().cholesky() {
            Some(ch) => ch.solve(&rhs),
            None => {
                return Err(Error::FactorizationDiverged(
                    "C*C is not positive definite on the circle".into(),
                ))
            }
        };
        let y0 = get_block(&y, 0, 0);
        let y0inv = y0
            .try_inverse()
            .ok_or(Error::Singular(y0.determinant().norm()))?;
        let herm = (y0inv + y0inv.adjoint()) * cpx(0.5);
        let l = Cholesky::new(herm)
            .ok_or_else(|| {
                Error::FactorizationDiverged("degree-zero block is not positive definite".into())
            })?
            .l();
        let v0 = l.adjoint();
        let mut winv = TwistedLoop::zero(k, c.twist, Reality::None);
        for kk in 0..=k {
            winv.set(kk as i32, get_block(&y, kk, 0) * v0.adjoint())?;
        }
        let n_out = opts.n_out.max(k);
        let f_full = c
            .resized(n_out)
            .mul_with(&winv.resized(n_out), n_out, f64::INFINITY)?;
        let mut f = f_full.resized(opts.n_out);
        f.reality = Reality::RealForm;
        f.twist = c.twist;
        let mut vplus = winv.plus_inverse(opts.n_out)?;
        vplus.twist = c.twist;
        let unit = f.unitarity_defect(samples)?;
        let recon = f
            .mul_with(&vplus, opts.n_out, f64::INFINITY)?
            .sample_distance(c, samples)?;
        let err = unit.max(recon);
        if err <= opts.tol {
            return Ok((f, vplus));
        }
        last_err = err;
        section *= 2;
    }
    Err(Error::FactorizationDiverged(format!(
        "Iwasawa defect {last_err:e} after enlarging the section"
    )))
}

/// Random element of 𝔤ₖ with Frobenius norm at most `max_norm`.
pub fn random_eigen_element<R: Rng + ?Sized>(rng: &mut R, k: EigenIndex, max_norm: f64) -> Mat3 {
    let mut m = Mat3::zeros();
    for b in eigenspace_basis(k) {
        m += b * Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let norm = frob(&m);
    if norm == 0.0 {
        return m;
    }
    m * cpx(max_norm * rng.gen_range(0.0..1.0) / norm)
}

/// Random twisted group loop Π exp(λʲXⱼ), j = −d..d, Xⱼ ∈ 𝔤_{j mod 6},
/// ‖Xⱼ‖ ≤ `max_norm`, truncated to [−n, n].
pub fn random_twisted_loop<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: i32,
    max_norm: f64,
) -> Result<TwistedLoop> {
    let mut acc = TwistedLoop::identity(n);
    acc.reality = Reality::None;
    for j in -d..=d {
        let x = random_eigen_element(rng, EigenIndex::new(j as i64), max_norm);
        let factor = exp_loop(&x, j, n)?;
        acc = acc.mul_with(&factor, n, DEFAULT_TAIL_BUDGET)?;
    }
    Ok(acc)
}

/// exp(λʲX) as a truncated loop.
pub fn exp_loop(x: &Mat3, j: i32, n: usize) -> Result<TwistedLoop> {
    let mut out = TwistedLoop::zero(n, Twist::Twisted, Reality::None);
    if j == 0 {
        out.set(0, exp_mat(x))?;
        return Ok(out);
    }
    let mut term = Mat3::identity();
    let mut lost = 0.0;
    for k in 0..200 {
        let d = j * k;
        if d.unsigned_abs() as usize <= n {
            out.set(d, term)?;
        } else {
            lost += frob(&term);
        }
        term = term * x / cpx((k + 1) as f64);
        if frob(&term) < 1e-300 {
            break;
        }
    }
    out.dropped = lost;
    Ok(out)
}
