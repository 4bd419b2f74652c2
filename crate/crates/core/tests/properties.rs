use std::f64::consts::{PI, SQRT_2, TAU};

use proptest::prelude::*;

use porosurf_core::analysis::{
    band_metrics, fluctuation_sd, path_loss_fit, CenterlineProfile, Spectrum,
};
use porosurf_core::geometry::{build_model, lattice_porosity, porosity_of, LatticeParams, Rect};
use porosurf_core::material::{
    effective_permittivity, skin_depth, solve_thickness, surface_reactance, COPPER_CONDUCTIVITY,
};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(1000))]

    #[test]
    fn thickness_round_trip(
        eps_eff in 1.001f64..4.0,
        f in 1e9f64..100e9,
        sigma in 1e6f64..1e8,
        extra in 1.0f64..600.0,
    ) {
        let delta = skin_depth(sigma, f).unwrap();
        let floor = PI * f * 4e-7 * PI * delta;
        let target = floor + extra;
        let h = solve_thickness(eps_eff, f, delta, target).unwrap();
        let x = surface_reactance(eps_eff, h, f, delta).unwrap();
        prop_assert!((x - target).abs() < 0.01, "residual {}", x - target);
    }
}

proptest! {
    #![proptest_config(config(256))]

    #[test]
    fn permittivity_decreases_with_porosity(eps_r in 1.01f64..10.0, a in 0.0f64..0.99, b in 0.0f64..0.99) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(effective_permittivity(eps_r, hi).unwrap() < effective_permittivity(eps_r, lo).unwrap());
    }

    #[test]
    fn permittivity_boundaries(eps_r in 1.0f64..10.0, rho in 0.0f64..0.99) {
        let e0 = effective_permittivity(eps_r, 0.0).unwrap();
        prop_assert!((e0 - eps_r).abs() <= 4.0 * f64::EPSILON * eps_r);
        prop_assert_eq!(effective_permittivity(1.0, rho).unwrap(), 1.0);
    }

    #[test]
    fn reactance_increases_with_thickness(eps_eff in 1.01f64..4.0, h in 0.0f64..5e-3, dh in 1e-6f64..1e-3) {
        let delta = skin_depth(COPPER_CONDUCTIVITY, 26e9).unwrap();
        let a = surface_reactance(eps_eff, h, 26e9, delta).unwrap();
        let b = surface_reactance(eps_eff, h + dh, 26e9, delta).unwrap();
        prop_assert!(b > a);
    }

    #[test]
    fn sd_ignores_offsets_and_scales_with_residuals(
        amp in 0.01f64..3.0,
        shift in -50.0f64..50.0,
        scale in 0.1f64..10.0,
        phase in 0.0f64..TAU,
    ) {
        let dx = 1e-4;
        let x: Vec<f64> = (0..2000).map(|i| i as f64 * dx).collect();
        let base: Vec<f64> = x
            .iter()
            .map(|&x| -1.1 * x + amp * (2.0 * PI * x / 4.7e-3 + phase).sin() + 0.3 * amp * (2.0 * PI * x / 1.3e-3).cos())
            .collect();
        let sd = |p: Vec<f64>| {
            let prof = CenterlineProfile::from_db(x.clone(), p, 1.0).unwrap().with_local_mean(9.4e-3).unwrap();
            fluctuation_sd(&prof).unwrap()
        };
        let s0 = sd(base.clone());
        let shifted = sd(base.iter().map(|v| v + shift).collect());
        prop_assert!((shifted - s0).abs() <= 1e-9 * (1.0 + s0));
        // scaling the whole profile scales the residuals about a linear mean
        let scaled = sd(base.iter().map(|v| v * scale).collect());
        prop_assert!((scaled - scale * s0).abs() <= 1e-9 * (1.0 + scale * s0));
    }

    #[test]
    fn path_loss_ignores_aligned_ripple(slope in 0.2f64..3.0, ripple in 0.0f64..0.5, phase in 0.0f64..TAU) {
        let lambda = 9.4e-3;
        let dx = 1e-4;
        let x: Vec<f64> = (0..3000).map(|i| i as f64 * dx).collect();
        let p: Vec<f64> = x.iter().map(|&x| -slope * x + ripple * (4.0 * PI * x / lambda + phase).sin()).collect();
        let prof = CenterlineProfile::from_db(x, p, 1.0).unwrap().with_local_mean(2.0 * lambda).unwrap();
        let l = path_loss_fit(&prof, lambda).unwrap();
        prop_assert!((l - slope).abs() < 0.02, "{} vs {}", l, slope);
    }

    #[test]
    fn band_metrics_ignore_db_offset(offset in -60.0f64..60.0, peak in 23e9f64..32e9, width in 1e9f64..4e9) {
        let f: Vec<f64> = (0..45).map(|k| 22e9 + 0.25e9 * k as f64).collect();
        let db: Vec<f64> = f.iter().map(|&f| -3.0 * ((f - peak) / width).powi(2)).collect();
        let a = band_metrics(&Spectrum { frequencies: f.clone(), db: db.clone() });
        let b = band_metrics(&Spectrum { frequencies: f, db: db.iter().map(|v| v + offset).collect() });
        match (a, b) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a.f_peak, b.f_peak);
                prop_assert!((a.band_3db.0 - b.band_3db.0).abs() < 1.0);
                prop_assert!((a.band_3db.1 - b.band_3db.1).abs() < 1.0);
                prop_assert_eq!(a.truncated, b.truncated);
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{:?} vs {:?}", a, b),
        }
    }

    #[test]
    fn lattice_porosity_matches_nominal(model in 1u8..=5, start in 0usize..40, cells in 1usize..40) {
        let params = LatticeParams::model(model).unwrap();
        let lattice = build_model(&params).unwrap();
        let column_pitch = if params.interleaved { params.w_l * SQRT_2 } else { params.w_l };
        let rows = params
            .interior_rows
            .unwrap_or(((params.w_c + 1e-12) / params.row_pitch()).floor() as usize);
        let half = rows as f64 * params.row_pitch() / 2.0;
        let x0 = start as f64 * column_pitch;
        let x1 = x0 + cells as f64 * column_pitch;
        prop_assume!(x1 <= params.d);
        let region = Rect::new(x0, -half, x1, half);
        let measured = lattice_porosity(&lattice, &region).unwrap();
        let nominal = porosity_of(params.w_l, params.w_h, params.r, params.interleaved).unwrap();
        prop_assert!((measured - nominal).abs() < 1e-3, "{} vs {}", measured, nominal);
    }
}

#[test]
fn porosity_rises_from_model_one_to_five() {
    let rho: Vec<f64> = (1..=5)
        .map(|m| LatticeParams::model(m).unwrap().porosity().unwrap())
        .collect();
    assert!(rho.windows(2).all(|w| w[1] > w[0]), "{rho:?}");
}

#[test]
fn build_model_is_pure() {
    for m in 0..=5 {
        let p = LatticeParams::model(m).unwrap();
        assert_eq!(build_model(&p).unwrap(), build_model(&p).unwrap());
    }
}
