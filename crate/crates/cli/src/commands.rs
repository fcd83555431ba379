use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use cp2geom::algebra::{exp_mat, Mat3};
use cp2geom::catalog;
use cp2geom::dpw::{
    frames_from_potential, potential_deviation, potential_from_frame, surface_at_lambda, CoeffFn,
    DpwOptions, Potential, PotentialJson,
};
use cp2geom::frames::{
    build_frame, compatibility_residuals, derive_invariants_with, frame_round_trip, mc_field,
    special_lift_with, InvariantField,
};
use cp2geom::gauss::{equivariance_check, ruh_vilms_from_mc, ruh_vilms_report};
use cp2geom::grid::ScalarField;
use cp2geom::mesh::{affine12, graph_theta, Chart, Mesh};
use cp2geom::Error;

use crate::config::RunConfig;

#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

type Out = Result<(), Failure>;

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub seed: u64,
}

impl Context {
    fn write(&self, name: &str, contents: &str) -> Out {
        fs::create_dir_all(&self.out)?;
        fs::write(self.out.join(name), contents)?;
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, v: &T) -> Out {
        let mut s =
            serde_json::to_string_pretty(v).map_err(|e| Failure::Validation(e.to_string()))?;
        s.push('\n');
        self.write(name, &s)
    }

    fn catalog(&self, command: &str) -> Result<&str, Failure> {
        let name = self
            .config
            .catalog
            .as_deref()
            .ok_or_else(|| Failure::Validation(format!("`{command}` needs catalog=<name>")))?;
        if !catalog::NAMES.contains(&name) {
            return Err(Error::UnknownCatalog(name.into()).into());
        }
        Ok(name)
    }

    fn invariants(&self, name: &str) -> Result<InvariantField, Failure> {
        let cfg = &self.config;
        if name == "sigma2_synthetic" {
            return Ok(catalog::sigma2_synthetic(cfg.grid, cfg.frame.scheme));
        }
        Ok(catalog::load(name, cfg.grid, &cfg.frame)?.1)
    }

    fn potential(&self) -> Result<Potential, Failure> {
        let p = &self.config.potential;
        if !p.ends_with(".json") {
            return Ok(Potential::named(p)?);
        }
        let text = fs::read_to_string(Path::new(p))?;
        let json: PotentialJson =
            serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{p}: {e}")))?;
        Ok(Potential::from_json(&json)?)
    }

    fn dpw_options(&self) -> DpwOptions {
        DpwOptions {
            n: self.config.n,
            base: None,
            scheme: self.config.frame.scheme,
            substeps: self.config.substeps,
        }
    }
}

fn grid_json(ctx: &Context) -> Value {
    let g = &ctx.config.grid;
    json!({ "nx": g.nx, "ny": g.ny, "h": g.h(), "x0": g.x0, "y0": g.y0 })
}

fn scalar_range(f: &ScalarField, margin: usize, abs: bool) -> [f64; 2] {
    let vals: Vec<f64> = f
        .grid
        .nodes(margin)
        .map(|(i, j)| {
            if abs {
                f.at(i, j).norm()
            } else {
                f.at(i, j).re
            }
        })
        .collect();
    [
        vals.iter().copied().fold(f64::INFINITY, f64::min),
        vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    ]
}

fn invariant_ranges(inv: &InvariantField) -> Value {
    let m = inv.scheme.trusted_margin(2);
    json!({
        "omega": scalar_range(&inv.omega, m, false),
        "a": scalar_range(&inv.a, m, false),
        "b": scalar_range(&inv.b, m, false),
        "abs_phi": scalar_range(&inv.phi, m, true),
        "abs_psi": scalar_range(&inv.psi, m, true),
    })
}

pub fn analyze(ctx: &Context) -> Out {
    let name = ctx.catalog("analyze")?;
    let inv = ctx.invariants(name)?;
    let res = compatibility_residuals(&inv);
    let mut fields = vec![
        ("omega", &inv.omega),
        ("a", &inv.a),
        ("b", &inv.b),
        ("phi", &inv.phi),
        ("psi", &inv.psi),
        ("rho", &inv.rho),
    ];
    if name != "sigma2_synthetic" {
        fields.push(("theta", &inv.theta));
    }
    for (key, f) in fields {
        ctx.write(&format!("{key}.csv"), &f.to_csv_string())?;
    }
    for (k, f) in res.fields.iter().enumerate() {
        ctx.write(&format!("residual_comp{}.csv", k + 1), &f.to_csv_string())?;
    }
    ctx.write_json(
        "residuals.json",
        &json!({
            "catalog": name,
            "grid": grid_json(ctx),
            "residual_max": res.summary.max,
            "residual_rms": res.summary.rms,
            "invariants": invariant_ranges(&inv),
        }),
    )
}

fn random_su3(rng: &mut ChaCha8Rng) -> Mat3 {
    let mut x = Mat3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            x[(i, j)] = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    let mut a = (x - x.adjoint()) * Complex64::new(0.5, 0.0);
    let tr = a.trace() / Complex64::new(3.0, 0.0);
    for k in 0..3 {
        a[(k, k)] -= tr;
    }
    exp_mat(&a)
}

pub fn classify(ctx: &Context) -> Out {
    let name = ctx.catalog("classify")?;
    let cfg = &ctx.config;
    let report = if name == "sigma2_synthetic" {
        let inv = catalog::sigma2_synthetic(cfg.grid, cfg.frame.scheme);
        json!({ "catalog": name, "source": "maurer-cartan data", "report": ruh_vilms_from_mc(&mc_field(&inv), cfg.frame.scheme) })
    } else {
        let lift = catalog::lift(name, cfg.grid)?;
        let rv = ruh_vilms_report(&lift)?;
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
        let t = random_su3(&mut rng);
        let eq = equivariance_check(&lift, &t)?;
        json!({
            "catalog": name,
            "source": "lift",
            "report": rv,
            "equivariance": { "seed": ctx.seed, "max_deviation": eq.max(), "per_map": eq },
        })
    };
    ctx.write_json("classify.json", &report)
}

fn mesh_for(ctx: &Context, name: &str) -> Result<Mesh, Failure> {
    let cfg = &ctx.config;
    match cfg.chart {
        Chart::GraphTheta => Ok(graph_theta(&ctx.invariants(name)?)),
        Chart::Affine12 => Ok(affine12(&catalog::lift(name, cfg.grid)?)?),
    }
}

pub fn export(ctx: &Context) -> Out {
    let name = ctx.catalog("export")?;
    let mesh = mesh_for(ctx, name)?;
    ctx.write("surface.obj", &mesh.to_obj())
}

pub fn construct(ctx: &Context) -> Out {
    let cfg = &ctx.config;
    let p = ctx.potential()?;
    let ef = frames_from_potential(&p, &cfg.grid, &ctx.dpw_options())?;
    let mc = ef.mc_degrees()?;
    let mut surfaces = Vec::new();
    let mut meshes = Vec::new();
    for (k, lambda) in cfg.lambda_samples().into_iter().enumerate() {
        let s = surface_at_lambda(&ef, lambda)?;
        ctx.write(
            &format!("frame_lambda{k}.csv"),
            &ef.frame_at(lambda)?.to_csv_string(),
        )?;
        ctx.write(&format!("lift_lambda{k}.csv"), &s.lift.to_csv_string())?;
        let mesh = match cfg.chart {
            Chart::GraphTheta => graph_theta(&s.invariants),
            Chart::Affine12 => affine12(&s.lift)?,
        };
        meshes.push(format!("mesh_lambda{k}.obj"));
        ctx.write(&format!("mesh_lambda{k}.obj"), &mesh.to_obj())?;
        surfaces.push(json!({
            "index": k,
            "lambda": [lambda.re, lambda.im],
            "label": s.classification.label,
            "flags": s.classification.flags(),
            "invariants": invariant_ranges(&s.invariants),
        }));
    }
    if let Ok(pj) = p.to_json() {
        ctx.write_json("potential.json", &pj)?;
    }
    ctx.write_json(
        "construct.json",
        &json!({
            "potential": cfg.potential,
            "grid": grid_json(ctx),
            "N": cfg.n,
            "integration": ef.integration,
            "base_defect": ef.base_defect()?,
            "mc_off_degree": mc.off_degree,
            "surfaces": surfaces,
            "meshes": meshes,
        }),
    )
}

pub fn roundtrip(ctx: &Context) -> Out {
    let cfg = &ctx.config;
    if let Some(name) = cfg.catalog.as_deref() {
        let name = ctx.catalog("roundtrip").map(|_| name)?;
        if name == "sigma2_synthetic" {
            return Err(Failure::Validation(
                "sigma2_synthetic has no lift to round-trip".into(),
            ));
        }
        let lift = special_lift_with(&catalog::lift(name, cfg.grid)?, &cfg.frame)?;
        let frame = build_frame(&lift, &derive_invariants_with(&lift, &cfg.frame)?)?;
        let dev = frame_round_trip(&frame)?;
        return ctx.write_json(
            "roundtrip.json",
            &json!({ "mode": "frame", "catalog": name, "grid": grid_json(ctx), "max_deviation": dev }),
        );
    }
    let p = ctx.potential()?;
    let ef = frames_from_potential(&p, &cfg.grid, &ctx.dpw_options())?;
    let rec = potential_from_frame(&ef)?;
    let dev = potential_deviation(&rec, &p, cfg.frame.scheme)?;
    let m = cfg.frame.scheme.trusted_margin(1);
    let degrees: Vec<(i32, f64)> = rec
        .terms
        .iter()
        .filter_map(|t| match &t.coeff {
            CoeffFn::Sampled(f) => Some((t.degree, f.max_norm(m))),
            CoeffFn::Poly(_) => None,
        })
        .collect();
    ctx.write_json(
        "roundtrip.json",
        &json!({
            "mode": "potential",
            "potential": cfg.potential,
            "grid": grid_json(ctx),
            "N": cfg.n,
            "recovered_max_norm": degrees,
            "max_deviation": dev,
        }),
    )
}
