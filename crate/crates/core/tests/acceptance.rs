//! Acceptance suite: one PASS/FAIL line per criterion, with the measured
//! quantities and runtime. Runs as a plain binary so the lines always show.

use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cp2geom::algebra::{
    bracket, c, eigenspace_basis, eigenspace_decompose, eps_pow, exp_mat, frob, p2_matrix,
    p3_matrix, sigma_apply, tau_apply, EigenIndex, Level, Mat3, Vec3,
};
use cp2geom::catalog;
use cp2geom::dpw::{
    frames_from_potential, potential_from_frame, surface_at_lambda, CoeffFn, DpwOptions, Potential,
};
use cp2geom::frames::{
    build_frame, compatibility_residuals, derive_invariants, frame_round_trip, mc_field,
    reconstruct_surface, special_lift, FrameField, InvariantField, LiftField, SurfaceClass,
};
use cp2geom::gauss::{
    equivariance_check, ruh_vilms_from_mc, ruh_vilms_report, FlagPoint, FlagSpace, Projection,
};
use cp2geom::grid::{observed_order, Field, GridDomain, Scheme};
use cp2geom::loops::{birkhoff_split, iwasawa_split, random_twisted_loop};
use cp2geom::Error;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Debug>(e: E) -> String {
    format!("error: {e:?}")
}

/// Centred square grid of side 1.
fn unit_grid(h: f64) -> GridDomain {
    GridDomain::centered(h, (1.0 / h).round() as usize + 1).unwrap()
}

fn random_traceless(rng: &mut ChaCha8Rng) -> Mat3 {
    let mut x = Mat3::zeros();
    for v in x.iter_mut() {
        *v = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    let t = x.trace() / c(3.0, 0.0);
    for k in 0..3 {
        x[(k, k)] -= t;
    }
    x
}

fn random_su3(rng: &mut ChaCha8Rng) -> Mat3 {
    let x = random_traceless(rng);
    exp_mat(&((x - x.adjoint()) * c(0.5, 0.0)))
}

fn algebra_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (x, y) = (random_traceless(&mut rng), random_traceless(&mut rng));
        let s6 = sigma_apply(&x, 6, Level::Algebra).map_err(err)?;
        worst = worst.max(frob(&(s6 - x)));
        let st = sigma_apply(
            &tau_apply(&x, Level::Algebra).map_err(err)?,
            1,
            Level::Algebra,
        )
        .map_err(err)?;
        let ts = tau_apply(
            &sigma_apply(&x, 1, Level::Algebra).map_err(err)?,
            Level::Algebra,
        )
        .map_err(err)?;
        worst = worst.max(frob(&(st - ts)));
        let (px, py) = (
            eigenspace_decompose(&x).map_err(err)?,
            eigenspace_decompose(&y).map_err(err)?,
        );
        worst = worst.max(frob(&(px.iter().sum::<Mat3>() - x)));
        for j in 0..6 {
            for k in 0..6 {
                let b = bracket(&px[j], &py[k]);
                let parts = eigenspace_decompose(&b).map_err(err)?;
                worst = worst.max(frob(&(b - parts[(j + k) % 6])));
            }
        }
    }
    let dims: Vec<usize> = EigenIndex::all()
        .map(|k| eigenspace_basis(k).len())
        .collect();
    check(
        worst < 1e-12 && dims == [1, 2, 1, 1, 1, 2],
        format!("max defect {worst:.2e}, dims {dims:?}"),
    )
}

fn clifford_deviation(h: f64) -> Result<f64, String> {
    let g = unit_grid(h);
    let inv = derive_invariants(&catalog::lift("clifford", g).map_err(err)?).map_err(err)?;
    let m = inv.scheme.trusted_margin(2);
    let mut dev: f64 = 0.0;
    for (i, j) in g.nodes(m) {
        dev = dev
            .max((inv.a.at(i, j).re - 1.0).abs())
            .max((inv.b.at(i, j).re - 1.0).abs())
            .max((inv.omega.at(i, j).re.exp() - 0.5).abs())
            .max(inv.phi.at(i, j).norm())
            .max(inv.rho.at(i, j).norm())
            .max((inv.psi.at(i, j).norm() - 2f64.sqrt() / 4.0).abs());
    }
    Ok(dev)
}

fn catalog_invariants() -> Outcome {
    let (d1, d2) = (clifford_deviation(0.02)?, clifford_deviation(0.01)?);
    let order = observed_order(d1, d2);
    check(
        d1 < 10.0 * 0.02f64.powi(2) && d2 < 10.0 * 0.01f64.powi(2) && order >= 1.8,
        format!("dev h=0.02 {d1:.2e}, h=0.01 {d2:.2e}, order {order:.2}"),
    )
}

fn residual_max(inv: &InvariantField) -> [f64; 4] {
    compatibility_residuals(inv).summary.max
}

fn compatibility() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["clifford", "real"] {
        let r: Vec<[f64; 4]> = [0.02, 0.01]
            .iter()
            .map(|&h| {
                derive_invariants(&catalog::lift(name, unit_grid(h)).unwrap())
                    .map(|i| residual_max(&i))
            })
            .collect::<Result<_, _>>()
            .map_err(err)?;
        for k in 0..4 {
            let (a, b) = (r[0][k], r[1][k]);
            // residuals already at round-off level carry no order information
            let converged =
                b < 1e-9 || (a <= 100.0 * 0.02f64.powi(2) && observed_order(a, b) >= 1.8);
            ok &= converged;
            if !converged || b >= 1e-9 {
                lines.push(format!("{name} comp{} {a:.1e}->{b:.1e}", k + 1));
            }
        }
        let worst = r[1].iter().copied().fold(0.0, f64::max);
        lines.push(format!("{name} max {worst:.1e}"));
    }
    for h in [0.02, 0.01] {
        let g = unit_grid(h);
        let inv = derive_invariants(&catalog::lift("clifford", g).unwrap()).map_err(err)?;
        let mut bad = inv.clone();
        bad.psi = Field::from_fn(g, |i, j| inv.psi.at(i, j) + g.z(i, j).conj() * 0.1);
        let r3 = residual_max(&bad)[2];
        ok &= r3 > 1e-2;
        lines.push(format!("corrupted comp3 h={h} {r3:.2e}"));
    }
    check(ok, lines.join(", "))
}

fn special_lift_check() -> Outcome {
    let h = 0.02;
    let g = unit_grid(h);
    let base = catalog::lift("clifford", g).map_err(err)?;
    let reference = special_lift(&base).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut det_worst, mut root_dev): (f64, f64) = (0.0, 0.0);
    let mut roots = Vec::new();
    for _ in 0..10 {
        let k: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let pert = Field::from_fn(g, |i, j| {
            let (x, y) = (g.x(i), g.y(j));
            Complex64::from_polar(
                1.0,
                3.0 * k[0] + k[1] * x + k[2] * y + k[3] * x * y + k[4] * (x * x - y * y),
            )
        });
        let s = special_lift(&base.zip_map(&pert, |f, p| f * p)).map_err(err)?;
        let frame = build_frame(&s, &derive_invariants(&s).map_err(err)?).map_err(err)?;
        det_worst = det_worst.max(frame.det_defect());
        // ratio to the reference normalization: one cube root of unity on the
        // nodes where det F is asserted
        let mut ks = std::collections::BTreeSet::new();
        for (i, j) in g.nodes(Scheme::Central4.margin()) {
            let r = reference.at(i, j).dotc(&s.at(i, j));
            let kk = (r.arg() / (TAU / 3.0)).round() as i64;
            ks.insert(kk.rem_euclid(3));
            root_dev = root_dev.max((r - Complex64::from_polar(1.0, kk as f64 * TAU / 3.0)).norm());
        }
        if ks.len() != 1 {
            return Err(format!("ratio switches between cube roots {ks:?}"));
        }
        roots.push(eps_pow(2 * ks.into_iter().next().unwrap()));
    }
    check(
        det_worst < 1e-9 && root_dev < 1e-6,
        format!("max |det F - 1| {det_worst:.2e}, ratio off a cube root by {root_dev:.2e}, roots used {}", {
            let mut s: Vec<String> = roots.iter().map(|r| format!("{:.0}", r.arg().to_degrees())).collect();
            s.dedup();
            s.join("/")
        }),
    )
}

fn loop_factorizations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut birk, mut iwa, mut unit, mut twist): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for _ in 0..50 {
        let l = random_twisted_loop(&mut rng, 12, 2, 0.2).map_err(err)?;
        let (lm, lp) = birkhoff_split(&l).map_err(err)?;
        birk = birk.max(
            lm.mul(&lp)
                .map_err(err)?
                .sample_distance(&l, 64)
                .map_err(err)?,
        );
        let (f, v) = iwasawa_split(&l).map_err(err)?;
        iwa = iwa.max(
            f.mul(&v)
                .map_err(err)?
                .sample_distance(&l, 64)
                .map_err(err)?,
        );
        unit = unit.max(f.unitarity_defect(16).map_err(err)?);
        for x in [&lm, &lp, &f, &v] {
            twist = twist.max(x.group_twist_defect(16).map_err(err)?);
        }
    }
    check(
        birk < 1e-8 && iwa < 1e-8 && unit < 1e-8 && twist < 1e-10,
        format!("Birkhoff {birk:.2e}, Iwasawa {iwa:.2e}, unitarity {unit:.2e}, twist {twist:.2e}"),
    )
}

fn dpw_pipeline() -> Outcome {
    let g = GridDomain::centered(0.02, 61).map_err(err)?;
    let e = catalog::vacuum_coefficient();
    let p = Potential::vacuum(e);
    let ef = frames_from_potential(&p, &g, &DpwOptions::default()).map_err(err)?;
    let off = ef.mc_degrees().map_err(err)?.off_degree;
    let m = Scheme::Central4.trusted_margin(2);
    let s1 = surface_at_lambda(&ef, c(1.0, 0.0)).map_err(err)?;
    let expect = catalog::expected("clifford", c(0.0, 0.0)).map_err(err)?;
    let inv = &s1.invariants;
    let mut cdev: f64 = 0.0;
    for (i, j) in g.nodes(m) {
        cdev = cdev
            .max((inv.a.at(i, j).re - expect.a).abs())
            .max((inv.b.at(i, j).re - expect.b).abs())
            .max((inv.omega.at(i, j).re.exp() - expect.exp_omega).abs())
            .max((inv.phi.at(i, j) - expect.phi).norm())
            .max((inv.psi.at(i, j) - expect.psi).norm())
            .max((inv.rho.at(i, j) - expect.rho).norm());
    }
    let mut fam: f64 = 0.0;
    let mut all_ml = s1.classification.label == SurfaceClass::MinimalLagrangian;
    for k in 0..8 {
        let s = surface_at_lambda(&ef, Complex64::from_polar(1.0, TAU * k as f64 / 8.0))
            .map_err(err)?;
        all_ml &= s.classification.label == SurfaceClass::MinimalLagrangian;
        let b = &s.invariants;
        for (i, j) in g.nodes(m) {
            fam = fam
                .max((inv.omega.at(i, j) - b.omega.at(i, j)).norm())
                .max((inv.a.at(i, j) - b.a.at(i, j)).norm())
                .max((inv.b.at(i, j) - b.b.at(i, j)).norm())
                .max((inv.psi.at(i, j).norm() - b.psi.at(i, j).norm()).abs());
        }
    }
    let rec = potential_from_frame(&ef).map_err(err)?;
    let mut rdev = f64::INFINITY;
    if let Some(CoeffFn::Sampled(f)) = rec.terms.iter().find(|t| t.degree == -1).map(|t| &t.coeff) {
        rdev = g
            .nodes(Scheme::Central4.trusted_margin(1))
            .map(|(i, j)| frob(&(f.at(i, j) - e)))
            .fold(0.0, f64::max);
    }
    check(
        off < 1e-6 && all_ml && cdev < 1e-5 && fam < 1e-6 && rdev < 1e-8,
        format!(
            "off-degree {off:.2e}, lambda=1 '{}' dev {cdev:.2e}, family {fam:.2e} (all minimal Lagrangian: {all_ml}), recovered E {rdev:.2e}",
            s1.classification.label
        ),
    )
}

fn ruh_vilms() -> Outcome {
    let cases: Vec<(&str, Vec<&str>, Vec<&str>)> = vec![
        (
            "clifford",
            vec!["sigma", "sigma2", "sigma3"],
            vec!["G1", "G2", "G3", "H1", "H2", "H31", "H32"],
        ),
        (
            "real",
            vec!["sigma", "sigma2", "sigma3"],
            vec!["G1", "G2", "G3", "H1", "H2", "H31", "H32"],
        ),
        ("sigma2_synthetic", vec!["sigma2"], vec!["H2", "H32"]),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, flags, maps) in cases {
        let report = if name == "sigma2_synthetic" {
            let g = unit_grid(0.02);
            ruh_vilms_from_mc(
                &mc_field(&catalog::sigma2_synthetic(g, Scheme::Central4)),
                Scheme::Central4,
            )
        } else {
            ruh_vilms_report(&catalog::lift(name, unit_grid(0.01)).map_err(err)?).map_err(err)?
        };
        let good = report.flags == flags && report.primitive_maps == maps && report.holds();
        ok &= good;
        lines.push(format!(
            "{name} {{{}}} [{}]",
            report.flags.join(","),
            report.primitive_maps.join(",")
        ));
    }
    check(ok, lines.join("; "))
}

fn gauss_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    // 𝒢₃ under right U₁ gauge
    let mut gauge: f64 = 0.0;
    for _ in 0..20 {
        let f = random_su3(&mut rng);
        let a = Complex64::from_polar(1.0, rng.gen_range(0.0..TAU));
        let k = Mat3::from_diagonal(&Vec3::new(a, a.inv(), c(1.0, 0.0)));
        let d = FlagPoint::from_frame(&(f * k), FlagSpace::Fl3)
            .distance(&FlagPoint::from_frame(&f, FlagSpace::Fl3))
            .map_err(err)?;
        gauge = gauge.max(d);
    }
    let base = FlagPoint::from_frame(&Mat3::identity(), FlagSpace::Fl3);
    let h31 = base.project(Projection::H31).map_err(err)?.matrix();
    let h32 = base.project(Projection::H32).map_err(err)?.matrix();
    let d31 = frob(&(h31 - p3_matrix()));
    let expected32 = Mat3::from_diagonal(&Vec3::new(eps_pow(4), eps_pow(2), c(1.0, 0.0)));
    let d32 = frob(&(h32 - expected32)).max(frob(&(p2_matrix() - expected32)));
    let lift: LiftField =
        catalog::lift("clifford", GridDomain::centered(0.05, 21).map_err(err)?).map_err(err)?;
    let mut equi: f64 = 0.0;
    for _ in 0..20 {
        equi = equi.max(
            equivariance_check(&lift, &random_su3(&mut rng))
                .map_err(err)?
                .max(),
        );
    }
    check(
        gauge < 1e-12 && d31 < 1e-15 && d32 < 1e-15 && equi < 1e-8,
        format!("U1 gauge {gauge:.2e}, H31 {d31:.1e}, H32 {d32:.1e}, equivariance {equi:.2e}"),
    )
}

fn reconstruction() -> Outcome {
    let g = unit_grid(0.01);
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["clifford", "real"] {
        let s = special_lift(&catalog::lift(name, g).map_err(err)?).map_err(err)?;
        let frame = build_frame(&s, &derive_invariants(&s).map_err(err)?).map_err(err)?;
        let dev = frame_round_trip(&frame).map_err(err)?;
        ok &= dev < 1e-5;
        lines.push(format!("{name} {dev:.2e}"));
    }
    // a frame whose Maurer–Cartan form has u₁₃ ≡ 0
    let (z, r) = (c(0.0, 0.0), c(0.0, 0.4));
    let x = Mat3::new(
        r,
        c(0.3, 0.0),
        z,
        c(-0.3, 0.0),
        -r,
        c(0.2, 0.0),
        z,
        c(-0.2, 0.0),
        z,
    );
    let frames = Field::from_fn(g, |i, _| exp_mat(&(x * c(g.x(i), 0.0))));
    let bad = FrameField::from_matrices(frames, Scheme::Central4).map_err(err)?;
    let rejected = matches!(
        reconstruct_surface(&bad),
        Err(Error::VanishingEntry { entry: "u13", .. })
    );
    ok &= rejected;
    lines.push(format!("u13 = 0 rejected: {rejected}"));
    check(ok, lines.join(", "))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 9] = [
        (
            "1 algebra exactness",
            algebra_exactness,
            Some(Duration::from_secs(1)),
        ),
        (
            "2 catalog invariants",
            catalog_invariants,
            Some(Duration::from_secs(10)),
        ),
        ("3 compatibility", compatibility, None),
        ("4 special lift", special_lift_check, None),
        (
            "5 loop factorizations",
            loop_factorizations,
            Some(Duration::from_secs(30)),
        ),
        (
            "6 DPW pipeline",
            dpw_pipeline,
            Some(Duration::from_secs(60)),
        ),
        ("7 Ruh-Vilms truth table", ruh_vilms, None),
        ("8 Gauss-map algebra", gauss_algebra, None),
        ("9 reconstruction", reconstruction, None),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let t = Instant::now();
        let mut out = f();
        let dt = t.elapsed();
        if let (Ok(detail), Some(b)) = (&out, budget) {
            if dt > b {
                out = Err(format!("{detail}; runtime {dt:.2?} over budget {b:?}"));
            }
        }
        match out {
            Ok(d) => println!("PASS criterion {name}: {d} [{dt:.2?}]"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d} [{dt:.2?}]");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
