use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cp2geom::algebra::{
    bracket, c, eigenspace_decompose, eigenspace_project, exp_mat, frob, sigma_apply, tau_apply,
    EigenIndex, Level, Mat3, Vec3,
};
use cp2geom::gauss::{FlagPoint, FlagSpace, Projection};
use cp2geom::grid::{GridDomain, ScalarField, Scheme};
use cp2geom::loops::{birkhoff_split, iwasawa_split, random_twisted_loop};

fn traceless() -> impl Strategy<Value = Mat3> {
    prop::array::uniform18(-1.0f64..1.0).prop_map(|v| {
        let mut x = Mat3::from_fn(|i, j| c(v[2 * (3 * i + j)], v[2 * (3 * i + j) + 1]));
        let t = x.trace() / c(3.0, 0.0);
        for k in 0..3 {
            x[(k, k)] -= t;
        }
        x
    })
}

fn su3() -> impl Strategy<Value = Mat3> {
    traceless().prop_map(|x| exp_mat(&((x - x.adjoint()) * c(0.5, 0.0))))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sigma_has_order_six(x in traceless()) {
        for level in [Level::Algebra, Level::Group] {
            let y = if level == Level::Group { exp_mat(&((x - x.adjoint()) * c(0.5, 0.0))) } else { x };
            prop_assert!(frob(&(sigma_apply(&y, 6, level).unwrap() - y)) < 1e-12);
            prop_assert!(frob(&(sigma_apply(&y, -1, level).unwrap() - sigma_apply(&y, 5, level).unwrap())) < 1e-12);
        }
    }

    #[test]
    fn sigma_is_a_homomorphism(g in su3(), k in su3()) {
        let lhs = sigma_apply(&(g * k), 1, Level::Group).unwrap();
        let rhs = sigma_apply(&g, 1, Level::Group).unwrap() * sigma_apply(&k, 1, Level::Group).unwrap();
        prop_assert!(frob(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn tau_is_an_involution_commuting_with_sigma(x in traceless()) {
        let tt = tau_apply(&tau_apply(&x, Level::Algebra).unwrap(), Level::Algebra).unwrap();
        prop_assert!(frob(&(tt - x)) < 1e-12);
        let st = sigma_apply(&tau_apply(&x, Level::Algebra).unwrap(), 1, Level::Algebra).unwrap();
        let ts = tau_apply(&sigma_apply(&x, 1, Level::Algebra).unwrap(), Level::Algebra).unwrap();
        prop_assert!(frob(&(st - ts)) < 1e-12);
    }

    #[test]
    fn eigenprojections_are_idempotent_and_graded(x in traceless(), y in traceless(), j in 0i64..6, k in 0i64..6) {
        let (ej, ek) = (EigenIndex::new(j), EigenIndex::new(k));
        let pj = eigenspace_project(&x, ej).unwrap();
        prop_assert!(frob(&(eigenspace_project(&pj, ej).unwrap() - pj)) < 1e-12);
        let s = sigma_apply(&pj, 1, Level::Algebra).unwrap();
        prop_assert!(frob(&(s - pj * ej.eigenvalue())) < 1e-12);
        let b = bracket(&pj, &eigenspace_project(&y, ek).unwrap());
        prop_assert!(frob(&(eigenspace_project(&b, EigenIndex::new(j + k)).unwrap() - b)) < 1e-12);
        let parts = eigenspace_decompose(&x).unwrap();
        prop_assert!(frob(&(parts.iter().sum::<Mat3>() - x)) < 1e-12);
    }

    #[test]
    fn flag_points_are_equivariant(f in su3(), g in su3()) {
        let pairs = [
            (FlagSpace::Fl1, Projection::H1),
            (FlagSpace::Fl2, Projection::H2),
            (FlagSpace::Fl3, Projection::H31),
            (FlagSpace::Fl3, Projection::H32),
        ];
        for (space, proj) in pairs {
            let moved = FlagPoint::from_frame(&(g * f), space);
            let acted = FlagPoint::from_frame(&f, space).act(&g);
            prop_assert!(moved.distance(&acted).unwrap() < 1e-12);
            let d = moved.project(proj).unwrap().distance(&acted.project(proj).unwrap()).unwrap();
            prop_assert!(d < 1e-12);
        }
    }

    #[test]
    fn projections_ignore_u1_gauge(f in su3(), t in 0.0f64..std::f64::consts::TAU) {
        let a = Complex64::from_polar(1.0, t);
        let k = Mat3::from_diagonal(&Vec3::new(a, a.inv(), c(1.0, 0.0)));
        for (space, proj) in [(FlagSpace::Fl1, Projection::H1), (FlagSpace::Fl2, Projection::H2), (FlagSpace::Fl3, Projection::H32)] {
            let p = FlagPoint::from_frame(&f, space).project(proj).unwrap();
            let q = FlagPoint::from_frame(&(f * k), space).project(proj).unwrap();
            prop_assert!(p.distance(&q).unwrap() < 1e-12);
        }
        let s = FlagPoint::from_frame(&f, FlagSpace::Fl3);
        prop_assert!(s.distance(&FlagPoint::from_frame(&(f * k), FlagSpace::Fl3)).unwrap() < 1e-12);
    }

    #[test]
    fn two_routes_to_the_real_grassmannian_agree(f in su3()) {
        let h1 = FlagPoint::from_frame(&f, FlagSpace::Fl1).project(Projection::H1).unwrap().matrix();
        let h31 = FlagPoint::from_frame(&f, FlagSpace::Fl3).project(Projection::H31).unwrap().matrix();
        prop_assert!(frob(&(h1 - h31)) < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn loop_factorizations_reconstruct(seed in any::<u64>(), norm in 0.01f64..0.2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = random_twisted_loop(&mut rng, 12, 2, norm).unwrap();
        let (lm, lp) = birkhoff_split(&l).unwrap();
        prop_assert!(lm.mul(&lp).unwrap().sample_distance(&l, 48).unwrap() < 1e-8);
        let (f, v) = iwasawa_split(&l).unwrap();
        prop_assert!(f.mul(&v).unwrap().sample_distance(&l, 48).unwrap() < 1e-8);
        prop_assert!(f.unitarity_defect(16).unwrap() < 1e-8);
        // splitting the unitary factor again stays well posed
        let (f2, v2) = iwasawa_split(&f).unwrap();
        prop_assert!(f2.mul(&v2).unwrap().sample_distance(&f, 48).unwrap() < 1e-8);
        prop_assert!(f2.unitarity_defect(16).unwrap() < 1e-8);
    }

    #[test]
    fn central4_differentiates_cubics_exactly(a in -1.0f64..1.0, b in -1.0f64..1.0, d in -1.0f64..1.0) {
        let g = GridDomain::centered(0.1, 11).unwrap();
        let f = ScalarField::from_fn(g, |i, j| {
            let z = g.z(i, j);
            z * z * z * a + z.conj() * z * b + c(d, 0.0)
        });
        let dz = f.dz(Scheme::Central4);
        for (i, j) in g.nodes(0) {
            let z = g.z(i, j);
            let want = z * z * 3.0 * a + z.conj() * b;
            prop_assert!((dz.at(i, j) - want).norm() < 1e-10);
        }
    }

    #[test]
    fn csv_round_trip_is_exact(vals in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 25)) {
        let g = GridDomain::centered(0.25, 5).unwrap();
        let f = ScalarField::new(g, vals.iter().map(|&(re, im)| c(re, im)).collect()).unwrap();
        let back = ScalarField::read_csv(f.to_csv_string().as_bytes()).unwrap();
        prop_assert_eq!(back.values, f.values);
    }
}
