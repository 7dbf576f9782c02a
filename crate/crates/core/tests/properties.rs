use cmc_lab::checks::{equation_scale, linearization_defect, normal_defect};
use cmc_lab::geometry::{
    connection_frame, frame_at, killing_defect_fd, lie_bracket_fd, lie_bracket_frame, metric_at, ModelParams, Point3,
};
use cmc_lab::graph::{
    gradient_w, gradient_w_lambda_form, mean_curvature, residual_eq1, residual_eq_h, solve_fxx, Jet2,
};
use cmc_lab::solver::{
    apply_t, barrier_field, barrier_h, frozen_coefficients, AnnulusField, AnnulusSpec, PolarGrid, Sign,
};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point3> {
    (-10.0..10.0f64, 0.1..10.0f64, -10.0..10.0f64).prop_map(|(x, y, t)| Point3::new(x, y, t))
}

fn params() -> impl Strategy<Value = ModelParams> {
    (-2.0..2.0f64).prop_map(|tau| ModelParams { tau })
}

fn jet() -> impl Strategy<Value = Jet2> {
    (0.1..10.0f64, -2.0..2.0f64, -2.0..2.0f64, -5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64)
        .prop_map(|(f, fx, ft, fxx, fxt, ftt)| Jet2::new(f, fx, ft, fxx, fxt, ftt))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn frame_is_orthonormal(p in point(), m in params()) {
        let gram = frame_at(p, m).unwrap().gram(&metric_at(p, m).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                let id = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gram[i][j] - id).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn connection_is_torsion_free(p in point(), m in params()) {
        for i in 1..=3 {
            for j in 1..=3 {
                let a = connection_frame(i, j, p, m).unwrap();
                let b = connection_frame(j, i, p, m).unwrap();
                let br = lie_bracket_frame(i, j, p, m).unwrap();
                for k in 0..3 {
                    prop_assert!((a[k] - b[k] - br[k]).abs() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn connection_is_metric(p in point(), m in params()) {
        for k in 1..=3 {
            for i in 1..=3 {
                let di = connection_frame(k, i, p, m).unwrap();
                for j in 1..=3 {
                    let dj = connection_frame(k, j, p, m).unwrap();
                    prop_assert!((di[j - 1] + dj[i - 1]).abs() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn brackets_match_finite_differences(p in point(), m in params()) {
        for i in 1..=3 {
            for j in 1..=3 {
                let fd = lie_bracket_fd(i, j, p, m, 1e-4).unwrap();
                let exact = lie_bracket_frame(i, j, p, m).unwrap();
                for k in 0..3 {
                    prop_assert!((fd[k] - exact[k]).abs() <= 1e-6);
                }
            }
        }
    }

    #[test]
    fn fibers_are_killing(p in point(), m in params()) {
        prop_assert!(killing_defect_fd(p, m, 1e-4).unwrap() <= 1e-10);
    }

    #[test]
    fn horocylinders_have_half_mean_curvature(c in 0.1..10.0f64, m in params()) {
        let h = mean_curvature(&Jet2::constant(c), m).unwrap();
        prop_assert!((h - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn both_forms_of_w_agree(j in jet(), m in params()) {
        let w = gradient_w(&j, m);
        prop_assert!(w >= j.f);
        prop_assert!((w - gradient_w_lambda_form(&j, m)).abs() <= 1e-14 * w);
    }

    #[test]
    fn equation_displays_agree(j in jet(), m in params()) {
        let scale = equation_scale(&j, m);
        let a = residual_eq1(&j, m);
        let b = residual_eq_h(&j, 0.5, m);
        prop_assert!((a + b).abs() <= 1e-12 * scale);
        let sol = solve_fxx(&j, 0.5, m).unwrap();
        let s = equation_scale(&sol, m);
        prop_assert!(residual_eq1(&sol, m).abs() <= 1e-10 * s);
        prop_assert!(residual_eq_h(&sol, 0.5, m).abs() <= 1e-10 * s);
    }

    #[test]
    fn mean_curvature_solves_its_equation(j in jet(), m in params()) {
        let h = mean_curvature(&j, m).unwrap();
        let w = gradient_w(&j, m);
        let scale = equation_scale(&j, m).max(2.0 * h.abs() * w.powi(3) / (j.f * j.f));
        prop_assert!(residual_eq_h(&j, h, m).abs() <= 1e-9 * scale);
    }

    #[test]
    fn linearization_reproduces_equation(j in jet(), m in params()) {
        prop_assert!(linearization_defect(&j, m).unwrap() <= 1e-9);
    }

    #[test]
    fn frozen_operator_is_elliptic(j in jet(), m in params()) {
        let c = frozen_coefficients(j.f, j.fx, j.ft, m).unwrap();
        let w = gradient_w(&j, m);
        prop_assert!(c.ellipticity() > 0.0);
        prop_assert!((c.ellipticity() - w * w).abs() <= 1e-12 * w * w);
    }

    #[test]
    fn unit_normal_is_unit_and_normal(j in jet(), m in params()) {
        prop_assert!(normal_defect(&j, m).unwrap() <= 1e-12);
    }

    #[test]
    fn mean_curvature_even_at_tau_zero(j in jet()) {
        let m = ModelParams { tau: 0.0 };
        let h = mean_curvature(&j, m).unwrap();
        let both = Jet2 { fx: -j.fx, ft: -j.ft, ..j };
        let one = Jet2 { fx: -j.fx, fxt: -j.fxt, ..j };
        let tol = 1e-12 * h.abs().max(1.0);
        prop_assert!((mean_curvature(&both, m).unwrap() - h).abs() <= tol);
        prop_assert!((mean_curvature(&one, m).unwrap() - h).abs() <= tol);
    }

    #[test]
    fn barrier_stays_between_bounds(r in 1.0..8.0f64, eps in 0.0..0.5f64, minus in any::<bool>()) {
        let sign = if minus { Sign::Minus } else { Sign::Plus };
        let spec = AnnulusSpec::new(1.0, 8.0, eps, sign, ModelParams::default()).unwrap();
        let (lo, hi) = spec.bounds();
        let h = barrier_h(r, &spec).unwrap();
        prop_assert!(h >= lo && h <= hi);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// One application of `T` to a perturbed freeze stays inside the boundary data.
    #[test]
    fn apply_t_obeys_maximum_principle(
        tau in -1.0..1.0f64,
        eps in 0.005..0.05f64,
        amp in 0.0..0.01f64,
        k in 1usize..4,
        minus in any::<bool>(),
    ) {
        let sign = if minus { Sign::Minus } else { Sign::Plus };
        let spec = AnnulusSpec::new(1.0, 4.0, eps, sign, ModelParams { tau }).unwrap();
        let grid = PolarGrid::new(1.0, 4.0, 32, 64).unwrap();
        let h = barrier_field(grid, &spec).unwrap();
        let bump = AnnulusField::from_fn(grid, |r, th| amp * (k as f64 * th).sin() * (r - 1.0) * (4.0 - r));
        let freeze = h.zip_with(&bump, |a, b| a + b);
        let w = apply_t(&freeze, &spec).unwrap();
        let (lo, hi) = spec.bounds();
        prop_assert!(w.min() >= lo - 1e-8 && w.max() <= hi + 1e-8, "{} {}", w.min(), w.max());
    }
}
