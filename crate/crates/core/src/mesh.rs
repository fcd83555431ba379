//! Wavefront OBJ export of sampled surfaces.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::frames::{InvariantField, LiftField};
use crate::grid::GridDomain;
use crate::numfmt::g17;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Chart {
    /// [z₁ : z₂ : z₃] ↦ (Re z₁/z₃, Im z₁/z₃, Re z₂/z₃).
    Affine12,
    /// (x, y, θ(x, y)) with θ the Kähler angle.
    GraphTheta,
}

impl std::str::FromStr for Chart {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "affine12" => Ok(Chart::Affine12),
            "graph_theta" => Ok(Chart::GraphTheta),
            other => Err(Error::Parse(format!(
                "unknown chart `{other}` (expected affine12 or graph_theta)"
            ))),
        }
    }
}

pub const CHART_EPS: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    /// 1-based vertex indices.
    pub faces: Vec<[usize; 3]>,
}

impl Mesh {
    /// Triangulated grid; each cell is split along its (i, j)–(i+1, j+1)
    /// diagonal.
    pub fn from_grid(grid: &GridDomain, vertices: Vec<[f64; 3]>) -> Self {
        let mut faces = Vec::with_capacity(2 * (grid.nx - 1) * (grid.ny - 1));
        for j in 0..grid.ny - 1 {
            for i in 0..grid.nx - 1 {
                let a = grid.index(i, j) + 1;
                let b = grid.index(i + 1, j) + 1;
                let c = grid.index(i + 1, j + 1) + 1;
                let d = grid.index(i, j + 1) + 1;
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            }
        }
        Mesh { vertices, faces }
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {} {} {}", g17(v[0]), g17(v[1]), g17(v[2]));
        }
        for f in &self.faces {
            let _ = writeln!(s, "f {} {} {}", f[0], f[1], f[2]);
        }
        s
    }
}

pub fn affine12(lift: &LiftField) -> Result<Mesh> {
    let g = lift.grid;
    let mut vertices = Vec::with_capacity(g.len());
    for (k, v) in lift.values.iter().enumerate() {
        if v[2].norm() < CHART_EPS {
            let (i, j) = g.coords(k);
            return Err(Error::ChartSingular { i, j });
        }
        let (w1, w2) = (v[0] / v[2], v[1] / v[2]);
        vertices.push([w1.re, w1.im, w2.re]);
    }
    Ok(Mesh::from_grid(&g, vertices))
}

pub fn graph_theta(inv: &InvariantField) -> Mesh {
    let g = inv.grid;
    let vertices = (0..g.len())
        .map(|k| {
            let (i, j) = g.coords(k);
            [g.x(i), g.y(j), inv.theta.values[k].re]
        })
        .collect();
    Mesh::from_grid(&g, vertices)
}
