use std::sync::OnceLock;

use proptest::prelude::*;
use statrs::function::beta::beta;

use logwave_core::functionals::Functionals;
use logwave_core::model::{conformal_exponent, f1, kappa, log_arg, nonlinearity, NonlinearityTable};
use logwave_core::pde::{InitialData, SimilarityRunConfig, SimilaritySolver};
use logwave_core::quad::{integrate_ball, sphere_area, RadialGrid, Weight};
use logwave_core::record::TrajectoryRecord;
use logwave_core::simvars::{ln_phi, SimilarityFrame};
use logwave_core::verify::growth::{fit_envelope, GrowthModel};
use logwave_core::verify::{check_identity_multiplier, check_identity_pohozaev, hardy_suite, random_fields};
use logwave_core::ModelParams;

fn table() -> &'static NonlinearityTable {
    static T: OnceLock<NonlinearityTable> = OnceLock::new();
    T.get_or_init(|| NonlinearityTable::new(ModelParams::new(3, -1.0).unwrap()))
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of the defining integral of `f`.
fn f_by_quadrature(u: f64, params: &ModelParams) -> f64 {
    let g = |v: f64| nonlinearity(v, params).unwrap();
    let (fa, fm, fb) = (g(0.0), g(0.5 * u), g(u));
    let whole = u / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&g, 0.0, u, fa, fm, fb, whole, 1e-14 * u.abs().powf(params.p() + 1.0), 40)
}

fn short_run(amplitude: f64, slope: f64) -> TrajectoryRecord {
    let p = ModelParams::new(3, -1.0).unwrap();
    let mut cfg = SimilarityRunConfig::starting_at(p, 20.0, 22.0);
    cfg.grid_size = 10;
    cfg.cadence = 0.5;
    let solver = SimilaritySolver::new(cfg).unwrap();
    let k = kappa(&p);
    solver.run(solver.initial_state(&InitialData::Profile { amplitude: amplitude * k, slope }, 0.0).unwrap()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conformal_exponent_and_kappa_identity(n in 2usize..12, a in -5.0f64..-0.01) {
        let pr = ModelParams::new(n, a).unwrap();
        let p = 1.0 + 4.0 / (n as f64 - 1.0);
        prop_assert_eq!(pr.p(), p);
        prop_assert_eq!(conformal_exponent(n), p);
        let lhs = kappa(&pr).powf(p - 1.0) * (4.0 / (p - 1.0)).powf(a);
        let rhs = 2.0 * (p + 1.0) / ((p - 1.0) * (p - 1.0));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs);
    }

    #[test]
    fn nonnegative_a_needs_exploratory(n in 2usize..8, a in 0.0f64..3.0) {
        prop_assert!(ModelParams::new(n, a).is_err());
        prop_assert!(ModelParams::exploratory(n, a).is_ok());
    }

    #[test]
    fn parity(u in -1e6f64..1e6) {
        let pr = table().params();
        prop_assert_eq!(nonlinearity(-u, pr).unwrap(), -nonlinearity(u, pr).unwrap());
        prop_assert_eq!(table().f(-u).unwrap(), table().f(u).unwrap());
    }

    #[test]
    fn antiderivative_matches_quadrature(u in 1e-3f64..1e3) {
        let want = f_by_quadrature(u, table().params());
        let got = table().f(u).unwrap();
        prop_assert!((got - want).abs() <= 1e-10 * want.abs(), "u = {}: {} vs {}", u, got, want);
    }

    #[test]
    fn antiderivative_differentiates_to_nonlinearity(ln_u in -8.0f64..40.0) {
        let u = ln_u.exp();
        let h = 1e-4 * u;
        let t = table();
        let d = (-t.f(u + 2.0 * h).unwrap() + 8.0 * t.f(u + h).unwrap() - 8.0 * t.f(u - h).unwrap() + t.f(u - 2.0 * h).unwrap())
            / (12.0 * h);
        let want = nonlinearity(u, t.params()).unwrap();
        prop_assert!((d - want).abs() <= 1e-7 * want.abs());
    }

    #[test]
    fn three_term_decomposition(ln_u in -10.0f64..60.0) {
        let u = ln_u.exp();
        let t = table();
        let f = t.f(u).unwrap();
        let split = t.leading(u).unwrap() + f1(u, t.params()).unwrap() + t.f2(u).unwrap();
        prop_assert!((f - split).abs() <= 1e-12 * f.abs());
    }

    #[test]
    fn log_arg_is_safe(ln_u in -700.0f64..700.0) {
        let u = ln_u.exp();
        let v = log_arg(u);
        prop_assert!(v.is_finite() && v >= std::f64::consts::LN_2);
    }

    #[test]
    fn ln_phi_is_linear_plus_log(s in 1.0f64..1e4, a in -4.0f64..-0.1, n in 2usize..6) {
        let pr = ModelParams::new(n, a).unwrap();
        let pm1 = pr.p() - 1.0;
        let r = ln_phi(s, &pr) - 2.0 * s / pm1 + a / pm1 * s.ln();
        prop_assert!(r.abs() <= 1e-12 * s.max(1.0));
    }

    #[test]
    fn similarity_round_trip(
        t0 in 0.01f64..0.9,
        frac in 0.0f64..0.999,
        y in -0.95f64..0.95,
        u in -10.0f64..10.0,
        ut in -10.0f64..10.0,
        ux in -10.0f64..10.0,
    ) {
        let frame = SimilarityFrame::radial(t0, ModelParams::new(3, -1.0).unwrap()).unwrap();
        let t = frac * t0;
        let x = y * (t0 - t);
        let sp = frame.to_similarity(&[x], t, u, ut, &[ux]).unwrap();
        let back = frame.from_similarity(&sp.y, sp.s, sp.w, sp.dw_ds, &sp.grad_w).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + b.abs());
        prop_assert!(close(back.t, t) && close(back.x[0], x) && close(back.u, u));
        prop_assert!(close(back.du_dt, ut) && close(back.grad_u[0], ux));
    }

    #[test]
    fn beta_moments_of_the_ball(n in 2usize..6, eta in 0.05f64..3.0) {
        let grid = RadialGrid::new(n, 12).unwrap();
        let ones = vec![1.0; grid.len()];
        let got = integrate_ball(&ones, Weight::RhoEta(eta), 0.0, &grid, 1e-12).unwrap();
        let exact = sphere_area(n) / 2.0 * beta(n as f64 / 2.0, eta + 1.0);
        prop_assert!((got.value - exact).abs() <= 1e-8 * exact);
    }

    #[test]
    fn envelope_is_certified_and_ordered(
        base in 0.1f64..10.0,
        rate in -0.2f64..0.2,
        noise in proptest::collection::vec(0.0f64..0.2, 10),
    ) {
        let samples: Vec<(f64, f64)> = noise
            .iter()
            .enumerate()
            .map(|(k, e)| {
                let s = 20.0 + k as f64;
                (s, base * (rate * (s - 20.0)).exp() * (1.0 + e))
            })
            .collect();
        let params = ModelParams::new(3, -1.0).unwrap();
        let fits: Vec<_> = GrowthModel::hierarchy(&params, 0.5)
            .into_iter()
            .map(|m| fit_envelope("q".into(), samples.clone(), m).unwrap())
            .collect();
        for f in &fits {
            let sup = samples.iter().map(|&(s, q)| q / f.model.eval(s)).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(f.constant >= sup);
        }
        // sharper passing implies looser passing
        for k in 1..fits.len() {
            if fits[k].passed {
                prop_assert!(fits[..k].iter().all(|f| f.passed), "{:?}", fits.iter().map(|f| f.passed).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn identities_hold_on_random_fields(seed in any::<u64>(), eta in 0.05f64..0.95) {
        for field in random_fields(seed, 3) {
            let a = check_identity_pohozaev(&field, eta).unwrap();
            let b = check_identity_multiplier(&field, eta).unwrap();
            prop_assert!(a.residual <= 1e-8 && b.residual <= 1e-8, "{:e} {:e}", a.residual, b.residual);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn hardy_holds_on_random_fields(seed in any::<u64>()) {
        let r = hardy_suite(seed, 10, &[0.1, 0.5, 1.0]).unwrap();
        prop_assert!(r.passed && r.min_slack >= -1e-8 && r.min_corollary_slack >= -1e-8);
    }

    #[test]
    fn records_round_trip_and_recombine(amplitude in 0.1f64..1.2, slope in 0.0f64..1.5) {
        let rec = short_run(amplitude, slope);
        let text = rec.to_json_lines();
        let back = TrajectoryRecord::from_json_lines(&text).unwrap();
        prop_assert_eq!(&back, &rec);
        prop_assert_eq!(back.to_json_lines(), text);
        prop_assert!(rec.snapshots.windows(2).all(|w| w[1].s > w[0].s));
        for r in &rec.snapshots {
            let f = &r.functionals;
            let tol = |x: f64| 1e-14 * (1.0 + x.abs());
            prop_assert!((f.g - (f.e + f.j)).abs() <= tol(f.g));
            prop_assert!((f.p_poly - (f.e + f.constants.nu * f.f_poly)).abs() <= tol(f.p_poly));
            for e in &f.eta {
                prop_assert!((e.h_eta - (e.e_eta + e.i_eta)).abs() <= tol(e.h_eta));
            }
        }
    }

    #[test]
    fn runs_are_deterministic(amplitude in 0.1f64..1.2) {
        prop_assert_eq!(short_run(amplitude, 0.5).to_json_lines(), short_run(amplitude, 0.5).to_json_lines());
    }

    #[test]
    fn functionals_are_refinement_invariant(amplitude in 0.2f64..1.5, slope in 0.0f64..1.0) {
        let p = ModelParams::new(3, -1.0).unwrap();
        let funcs = Functionals::for_params(p, Default::default()).unwrap();
        let k = kappa(&p);
        let snap = |size: usize| {
            let grid = std::sync::Arc::new(RadialGrid::new(3, size).unwrap());
            let st = InitialData::Profile { amplitude: amplitude * k, slope }.state(grid, p, 20.0, 0.0).unwrap();
            funcs.snapshot(&st).unwrap()
        };
        let (a, b) = (snap(12), snap(24));
        for (x, y) in [(a.e, b.e), (a.j, b.j), (a.l, b.l), (a.e0, b.e0), (a.f_poly, b.f_poly)] {
            prop_assert!((x - y).abs() <= 1e-6 * (x.abs().max(y.abs()) + 1e-12), "{} vs {}", x, y);
        }
    }
}
