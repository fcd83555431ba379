//! Uniform square-cell sampling of a planar domain, fields over it, and the
//! finite-difference versions of the Cauchy–Riemann operators
//! ∂_z = (∂_x − i∂_y)/2 and ∂_z̄ = (∂_x + i∂_y)/2.

use std::io::{BufRead, Write};
use std::ops::{Add, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{Mat3, Vec3};
use crate::error::{Error, Result};
use crate::numfmt::g17;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridDomain {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = GridDomain {
            x0,
            x1,
            y0,
            y1,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    /// Square grid [x0, x0 + (n−1)h] × [y0, y0 + (n−1)h].
    pub fn square(x0: f64, y0: f64, h: f64, n: usize) -> Result<Self> {
        let len = h * (n as f64 - 1.0);
        Self::new(x0, x0 + len, y0, y0 + len, n, n)
    }

    /// Square grid of n × n nodes centred at the origin.
    pub fn centered(h: f64, n: usize) -> Result<Self> {
        let half = 0.5 * h * (n as f64 - 1.0);
        Self::new(-half, half, -half, half, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 5 || self.ny < 5 {
            return Err(Error::InvalidGrid(format!(
                "need at least 5 nodes per direction, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.x1 > self.x0) || !(self.y1 > self.y0) {
            return Err(Error::InvalidGrid("bounds must be increasing".into()));
        }
        let hx = (self.x1 - self.x0) / (self.nx - 1) as f64;
        let hy = (self.y1 - self.y0) / (self.ny - 1) as f64;
        if (hx - hy).abs() > 1e-12 * hx.max(1.0) {
            return Err(Error::InvalidGrid(format!(
                "cells are not square: hx = {hx}, hy = {hy}"
            )));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        (self.x1 - self.x0) / (self.nx - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.nx, idx / self.nx)
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.h()
    }

    pub fn z(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.x(i), self.y(j))
    }

    pub fn center(&self) -> (usize, usize) {
        (self.nx / 2, self.ny / 2)
    }

    /// Node pairs (i, j) at distance ≥ `margin` from the boundary, row-major.
    pub fn nodes(&self, margin: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        let (nx, ny) = (self.nx, self.ny);
        (margin..ny.saturating_sub(margin))
            .flat_map(move |j| (margin..nx.saturating_sub(margin)).map(move |i| (i, j)))
    }

    /// Same domain with every other node removed (spacing 2h).
    pub fn coarsened(&self) -> Result<Self> {
        if self.nx % 2 == 0 || self.ny % 2 == 0 {
            return Err(Error::InvalidGrid(
                "coarsening needs odd node counts".into(),
            ));
        }
        Self::new(
            self.x0,
            self.x1,
            self.y0,
            self.y1,
            self.nx / 2 + 1,
            self.ny / 2 + 1,
        )
    }

    pub fn same_as(&self, other: &GridDomain) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.x0 - other.x0).abs() < 1e-12
            && (self.y0 - other.y0).abs() < 1e-12
            && (self.h() - other.h()).abs() < 1e-12
    }
}

/// Finite-difference stencil family. Both use one-sided stencils of the same
/// order on the two outermost rings so every node gets a derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Scheme {
    Central2,
    #[default]
    Central4,
}

impl Scheme {
    pub fn order(self) -> i32 {
        match self {
            Scheme::Central2 => 2,
            Scheme::Central4 => 4,
        }
    }

    /// Stencil half-width.
    pub fn margin(self) -> usize {
        match self {
            Scheme::Central2 => 1,
            Scheme::Central4 => 2,
        }
    }

    /// Boundary ring to exclude for a quantity built from `depth` nested
    /// derivatives. Inside it only central stencils contribute, so the
    /// nominal order holds.
    pub fn trusted_margin(self, depth: usize) -> usize {
        depth * self.margin()
    }
}

/// Values that fields can hold: complex scalars, C³ vectors, 3×3 matrices.
pub trait FieldValue:
    Copy + Add<Output = Self> + Sub<Output = Self> + PartialEq + std::fmt::Debug + Send + Sync
{
    fn zero() -> Self;
    fn scale(self, s: Complex64) -> Self;
    fn components(&self) -> Vec<Complex64>;
    fn from_components(c: &[Complex64]) -> Option<Self>;
    fn norm(&self) -> f64 {
        self.components()
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl FieldValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn scale(self, s: Complex64) -> Self {
        self * s
    }
    fn components(&self) -> Vec<Complex64> {
        vec![*self]
    }
    fn from_components(c: &[Complex64]) -> Option<Self> {
        (c.len() == 1).then(|| c[0])
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
}

impl FieldValue for Vec3 {
    fn zero() -> Self {
        Vec3::zeros()
    }
    fn scale(self, s: Complex64) -> Self {
        self * s
    }
    fn components(&self) -> Vec<Complex64> {
        self.iter().copied().collect()
    }
    fn from_components(c: &[Complex64]) -> Option<Self> {
        (c.len() == 3).then(|| Vec3::new(c[0], c[1], c[2]))
    }
}

impl FieldValue for Mat3 {
    fn zero() -> Self {
        Mat3::zeros()
    }
    fn scale(self, s: Complex64) -> Self {
        self * s
    }
    /// Row-major.
    fn components(&self) -> Vec<Complex64> {
        (0..3)
            .flat_map(|r| (0..3).map(move |col| (r, col)))
            .map(|rc| self[rc])
            .collect()
    }
    fn from_components(c: &[Complex64]) -> Option<Self> {
        (c.len() == 9).then(|| Mat3::from_fn(|r, col| c[3 * r + col]))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    pub grid: GridDomain,
    pub values: Vec<T>,
}

pub type ScalarField = Field<Complex64>;

impl<T: FieldValue> Field<T> {
    pub fn new(grid: GridDomain, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Field { grid, values })
    }

    pub fn from_fn(grid: GridDomain, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                values.push(f(i, j));
            }
        }
        Field { grid, values }
    }

    pub fn constant(grid: GridDomain, v: T) -> Self {
        Field {
            grid,
            values: vec![v; grid.len()],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[self.grid.index(i, j)]
    }

    pub fn map<U: FieldValue>(&self, f: impl Fn(T) -> U) -> Field<U> {
        Field {
            grid: self.grid,
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }

    pub fn zip_map<U: FieldValue, V: FieldValue>(
        &self,
        other: &Field<U>,
        f: impl Fn(T, U) -> V,
    ) -> Field<V> {
        Field {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    pub fn dx(&self, scheme: Scheme) -> Self {
        let (nx, ny, h) = (self.grid.nx, self.grid.ny, self.grid.h());
        let mut out = vec![T::zero(); self.values.len()];
        let mut line = vec![T::zero(); nx];
        for j in 0..ny {
            let row = &self.values[j * nx..(j + 1) * nx];
            diff_line(row, h, scheme, &mut line);
            out[j * nx..(j + 1) * nx].copy_from_slice(&line);
        }
        Field {
            grid: self.grid,
            values: out,
        }
    }

    pub fn dy(&self, scheme: Scheme) -> Self {
        let (nx, ny, h) = (self.grid.nx, self.grid.ny, self.grid.h());
        let mut out = vec![T::zero(); self.values.len()];
        let mut col = vec![T::zero(); ny];
        let mut line = vec![T::zero(); ny];
        for i in 0..nx {
            for j in 0..ny {
                col[j] = self.values[j * nx + i];
            }
            diff_line(&col, h, scheme, &mut line);
            for j in 0..ny {
                out[j * nx + i] = line[j];
            }
        }
        Field {
            grid: self.grid,
            values: out,
        }
    }

    /// (∂_z f, ∂_z̄ f).
    pub fn dz_dzbar(&self, scheme: Scheme) -> (Self, Self) {
        let fx = self.dx(scheme);
        let fy = self.dy(scheme);
        let half = Complex64::new(0.5, 0.0);
        let ihalf = Complex64::new(0.0, 0.5);
        let dz = fx.zip_map(&fy, |a, b| a.scale(half) - b.scale(ihalf));
        let dzb = fx.zip_map(&fy, |a, b| a.scale(half) + b.scale(ihalf));
        (dz, dzb)
    }

    pub fn dz(&self, scheme: Scheme) -> Self {
        self.dz_dzbar(scheme).0
    }

    pub fn dzbar(&self, scheme: Scheme) -> Self {
        self.dz_dzbar(scheme).1
    }

    /// max ‖f‖ over nodes at distance ≥ margin from the boundary.
    pub fn max_norm(&self, margin: usize) -> f64 {
        self.grid
            .nodes(margin)
            .map(|(i, j)| self.at(i, j).norm())
            .fold(0.0, f64::max)
    }

    pub fn rms_norm(&self, margin: usize) -> f64 {
        let mut s = 0.0;
        let mut n = 0usize;
        for (i, j) in self.grid.nodes(margin) {
            s += self.at(i, j).norm().powi(2);
            n += 1;
        }
        if n == 0 {
            0.0
        } else {
            (s / n as f64).sqrt()
        }
    }

    /// max ‖f − g‖ over the trusted interior.
    pub fn max_deviation(&self, other: &Self, margin: usize) -> Result<f64> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(self
            .grid
            .nodes(margin)
            .map(|(i, j)| (self.at(i, j) - other.at(i, j)).norm())
            .fold(0.0, f64::max))
    }

    /// Every other node in both directions.
    pub fn coarsened(&self) -> Result<Self> {
        let g = self.grid.coarsened()?;
        Ok(Field::from_fn(g, |i, j| self.at(2 * i, 2 * j)))
    }

    /// CSV with header `x,y,re_0,im_0,...`, one row per node in row-major order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let ncomp = self
            .values
            .first()
            .map(|v| v.components().len())
            .unwrap_or(0);
        let mut header = String::from("x,y");
        for k in 0..ncomp {
            header.push_str(&format!(",re_{k},im_{k}"));
        }
        writeln!(w, "{header}")?;
        for (i, j) in self.grid.nodes(0) {
            let mut line = format!("{},{}", g17(self.grid.x(i)), g17(self.grid.y(j)));
            for z in self.at(i, j).components() {
                line.push(',');
                line.push_str(&g17(z.re));
                line.push(',');
                line.push_str(&g17(z.im));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Reads a field written by [`Field::write_csv`]; the grid is recovered
    /// from the coordinate columns.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty CSV".into()))??;
        let cols: Vec<&str> = header.trim().split(',').collect();
        if cols.len() < 4 || cols[0] != "x" || cols[1] != "y" || (cols.len() - 2) % 2 != 0 {
            return Err(Error::Parse(format!("bad CSV header `{header}`")));
        }
        let ncomp = (cols.len() - 2) / 2;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut vals = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let nums: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
            if nums.len() != cols.len() {
                return Err(Error::Parse(format!(
                    "line {}: wrong column count",
                    lineno + 2
                )));
            }
            xs.push(nums[0]);
            ys.push(nums[1]);
            let comps: Vec<Complex64> = (0..ncomp)
                .map(|k| Complex64::new(nums[2 + 2 * k], nums[3 + 2 * k]))
                .collect();
            vals.push(
                T::from_components(&comps)
                    .ok_or_else(|| Error::Parse(format!("{ncomp} components do not fit")))?,
            );
        }
        let nx = ys.iter().take_while(|&&y| y == ys[0]).count();
        if nx == 0 || vals.len() % nx != 0 {
            return Err(Error::Parse("rows do not form a rectangular grid".into()));
        }
        let ny = vals.len() / nx;
        let grid = GridDomain::new(xs[0], xs[nx - 1], ys[0], ys[vals.len() - 1], nx, ny)?;
        Field::new(grid, vals)
    }
}

fn diff_line<T: FieldValue>(f: &[T], h: f64, scheme: Scheme, out: &mut [T]) {
    let n = f.len();
    let s = |w: f64| Complex64::new(w, 0.0);
    match scheme {
        Scheme::Central2 => {
            let inv = s(1.0 / (2.0 * h));
            out[0] = (f[1].scale(s(4.0)) - f[0].scale(s(3.0)) - f[2]).scale(inv);
            out[n - 1] = (f[n - 1].scale(s(3.0)) - f[n - 2].scale(s(4.0)) + f[n - 3]).scale(inv);
            for i in 1..n - 1 {
                out[i] = (f[i + 1] - f[i - 1]).scale(inv);
            }
        }
        Scheme::Central4 => {
            let inv = s(1.0 / (12.0 * h));
            let w0 = [-25.0, 48.0, -36.0, 16.0, -3.0];
            let w1 = [-3.0, -10.0, 18.0, -6.0, 1.0];
            let comb = |idx: [usize; 5], w: [f64; 5], sign: f64| {
                let mut acc = T::zero();
                for k in 0..5 {
                    acc = acc + f[idx[k]].scale(s(sign * w[k]));
                }
                acc.scale(inv)
            };
            out[0] = comb([0, 1, 2, 3, 4], w0, 1.0);
            out[1] = comb([0, 1, 2, 3, 4], w1, 1.0);
            out[n - 1] = comb([n - 1, n - 2, n - 3, n - 4, n - 5], w0, -1.0);
            out[n - 2] = comb([n - 1, n - 2, n - 3, n - 4, n - 5], w1, -1.0);
            for i in 2..n - 2 {
                out[i] = (f[i - 2] - f[i + 2] + (f[i + 1] - f[i - 1]).scale(s(8.0))).scale(inv);
            }
        }
    }
}

/// Observed convergence order from errors at spacing h and h/2.
pub fn observed_order(err_coarse: f64, err_fine: f64) -> f64 {
    (err_coarse / err_fine).log2()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly_grid() -> GridDomain {
        GridDomain::square(-0.3, 0.1, 0.05, 11).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridDomain::new(0.0, 1.0, 0.0, 1.0, 4, 10).is_err());
        assert!(GridDomain::new(0.0, 1.0, 0.0, 2.0, 11, 11).is_err());
        assert!(GridDomain::new(0.0, 1.0, 0.0, 1.0, 11, 11).is_ok());
    }

    #[test]
    fn stencils_are_exact_on_low_degree_polynomials() {
        let g = poly_grid();
        // degree 2 for the second-order family, degree 4 for the fourth-order one
        let f2 = Field::from_fn(g, |i, j| {
            let z = g.z(i, j);
            z * z + z.conj() * 3.0
        });
        let (dz, dzb) = f2.dz_dzbar(Scheme::Central2);
        for (i, j) in g.nodes(0) {
            let z = g.z(i, j);
            assert!((dz.at(i, j) - z * 2.0).norm() < 1e-11);
            assert!((dzb.at(i, j) - Complex64::new(3.0, 0.0)).norm() < 1e-11);
        }
        let f4 = Field::from_fn(g, |i, j| {
            let z = g.z(i, j);
            z.powu(4) + z * z.conj() * z.conj()
        });
        let (dz, dzb) = f4.dz_dzbar(Scheme::Central4);
        for (i, j) in g.nodes(0) {
            let z = g.z(i, j);
            assert!((dz.at(i, j) - (z.powu(3) * 4.0 + z.conj() * z.conj())).norm() < 1e-10);
            assert!((dzb.at(i, j) - z * z.conj() * 2.0).norm() < 1e-10);
        }
    }

    #[test]
    fn orders_observed_on_a_smooth_function() {
        for scheme in [Scheme::Central2, Scheme::Central4] {
            let err = |n: usize| {
                let g = GridDomain::square(0.0, 0.0, 1.0 / (n - 1) as f64, n).unwrap();
                let f = Field::from_fn(g, |i, j| (g.z(i, j) * Complex64::new(0.0, 2.0)).exp());
                let d = f.dz(scheme);
                g.nodes(0)
                    .map(|(i, j)| {
                        (d.at(i, j)
                            - (g.z(i, j) * Complex64::new(0.0, 2.0)).exp()
                                * Complex64::new(0.0, 2.0))
                        .norm()
                    })
                    .fold(0.0, f64::max)
            };
            let order = observed_order(err(21), err(41));
            assert!(order > scheme.order() as f64 - 0.3, "{scheme:?}: {order}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let g = GridDomain::square(0.0, 0.0, 0.1, 5).unwrap();
        let f = Field::from_fn(g, |i, j| {
            Vec3::new(
                g.z(i, j),
                Complex64::new(1.0 / 3.0, -0.1),
                Complex64::new(0.0, 1e-20),
            )
        });
        let s = f.to_csv_string();
        assert!(s.starts_with("x,y,re_0,im_0,re_1,im_1,re_2,im_2\n"));
        assert_eq!(s.lines().count(), 26);
        let back = Field::<Vec3>::read_csv(s.as_bytes()).unwrap();
        assert_eq!(back.values, f.values);
        assert!(back.grid.same_as(&g));
    }
}
