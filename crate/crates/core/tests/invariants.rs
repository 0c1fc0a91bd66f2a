use hps_core::device::{gap_velocity, oxram_current, Orientation, OxRamParams, OxRamState, PhotodiodeParams};
use hps_core::experiments::{
    gain_factor, operating_dr, readable_window_bounds, ReadableWindow, SweepRow, SweepTable,
};
use hps_core::io::{parse_config, parse_trace_csv, trace_csv};
use hps_core::pixel::{PixelConfig, Stimulus, Topology};
use hps_core::solver::{charge_balance, integrate, SolverOptions};
use proptest::prelude::*;

fn full() -> SolverOptions {
    SolverOptions { max_trace_points: 0, ..SolverOptions::default() }
}

fn hybrid(k: usize) -> PixelConfig {
    let t = [Topology::HybridCaseI, Topology::HybridCaseII, Topology::HybridCaseIII][k];
    PixelConfig::hybrid(t).unwrap()
}

fn table(vpd: &[f64]) -> SweepTable {
    let n = vpd.len();
    SweepTable {
        topology: Topology::Bare3T,
        vrst: 1.42,
        dark_vpd: Some(1.42),
        noise_volts: 0.0,
        rows: vpd
            .iter()
            .enumerate()
            .map(|(k, &v)| SweepRow {
                i_exp: 1e-12 * 10f64.powf(k as f64 * 4.0 / (n - 1) as f64),
                final_vpd: Some(v),
                events: vec![],
                error: None,
            })
            .collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn current_is_odd(frac in 0.0..=1.0f64, v in 0.0..3.0f64) {
        let p = OxRamParams::default();
        let st = OxRamState::new(p.gap_min + frac * p.gap_span(), Orientation::BeAtPd);
        let vg = v * st.gap / p.gap_max;
        let a = oxram_current(&st, v, vg, &p).unwrap();
        let b = oxram_current(&st, -v, -vg, &p).unwrap();
        prop_assert_eq!(a, -b);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn velocity_is_finite(frac in 0.0..=1.0f64, v in -3.0..3.0f64) {
        let p = OxRamParams::default();
        for o in [Orientation::BeAtPd, Orientation::TeAtPd] {
            let st = OxRamState::new(p.gap_min + frac * p.gap_span(), o);
            prop_assert!(gap_velocity(&st, v, &p).unwrap().is_finite());
        }
    }

    #[test]
    fn dr_is_additive(a in -14.0..-8.0f64, b in -14.0..-8.0f64, c in -14.0..-8.0f64) {
        let (a, b, c) = (10f64.powf(a), 10f64.powf(b), 10f64.powf(c));
        let sum = operating_dr(a, b).unwrap() + operating_dr(b, c).unwrap();
        prop_assert!((sum - operating_dr(a, c).unwrap()).abs() < 1e-9);
        prop_assert!((operating_dr(a, b).unwrap() + operating_dr(b, a).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn gain_is_one_for_equal_drops(v in 0.0..1.4f64, w in 0.0..1.4f64) {
        prop_assert_eq!(gain_factor(1.42, v, v).unwrap(), 1.0);
        let g = gain_factor(1.42, v, w).unwrap();
        prop_assert!(g >= 0.0);
        prop_assert!((g >= 1.0) == (w <= v));
    }

    #[test]
    fn wider_swing_never_narrows_window(
        drops in proptest::collection::vec(0.0..0.02f64, 9),
        lo in 0.01..0.2f64,
        hi in 0.5..1.0f64,
        shrink in 0.0..0.3f64,
    ) {
        let mut v = 1.42;
        let vpd: Vec<f64> = drops.iter().map(|d| { v -= d * 50.0; v.max(0.4) }).collect();
        let t = table(&vpd);
        let narrow = ReadableWindow { min_detect: lo, max_swing: hi - shrink, dark_sigmas: 1.0 };
        let wide = ReadableWindow { min_detect: lo * 0.5, max_swing: hi, dark_sigmas: 1.0 };
        let n = readable_window_bounds(&t, &narrow).unwrap().span();
        let w = readable_window_bounds(&t, &wide).unwrap().span();
        if let Some((a, b)) = n {
            let (c, d) = w.expect("wide window must contain the narrow one");
            prop_assert!(c <= a * (1.0 + 1e-12) && d >= b * (1.0 - 1e-12));
        }
    }

    #[test]
    fn config_text_round_trips(
        c_pd in 1.0..50.0f64,
        texp in 1.0..20.0f64,
        topo in 0usize..4,
        vg in 0.4..1.5f64,
        ppd in 1u64..40,
    ) {
        let name = ["bare", "case_i", "case_ii", "case_iii"][topo];
        let text = format!(
            "[photodiode]\nc_pd = {c_pd}fF\ntexp = {texp}us\n[pixel]\ntopology = {name}\nvg = {vg}V\n[sweep]\npoints_per_decade = {ppd}\n"
        );
        let a = parse_config(&text).unwrap().config;
        let b = parse_config(&a.to_text()).unwrap().config;
        prop_assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn charge_is_conserved(k in 0usize..3, log_i in -13.0..-8.4f64) {
        let c = hybrid(k);
        let stim = Stimulus::new(10f64.powf(log_i));
        let trace = integrate(&c, &stim, &full()).unwrap();
        let cb = charge_balance(&trace, &c, &stim).unwrap();
        prop_assert!(cb.relative_error <= 0.005, "{:?}", cb);
    }

    #[test]
    fn gap_stays_bounded(k in 0usize..3, log_i in -13.0..-8.4f64) {
        let c = hybrid(k);
        let p = c.oxram.unwrap();
        let trace = integrate(&c, &Stimulus::new(10f64.powf(log_i)), &SolverOptions::default()).unwrap();
        prop_assert!(trace.gap.iter().all(|&g| g >= p.gap_min && g <= p.gap_max));
    }

    #[test]
    fn brighter_never_ends_higher(k in 0usize..2, log_i in -13.0..-8.6f64, step in 0.05..0.5f64) {
        let c = hybrid(k);
        let o = SolverOptions::default();
        let a = integrate(&c, &Stimulus::new(10f64.powf(log_i)), &o).unwrap().final_vpd;
        let b = integrate(&c, &Stimulus::new(10f64.powf(log_i + step)), &o).unwrap().final_vpd;
        prop_assert!(b <= a + 1e-9, "{a} -> {b}");
    }

    #[test]
    fn bare_matches_closed_form(log_i in -14.0..-8.0f64) {
        let i = 10f64.powf(log_i);
        let v = integrate(&PixelConfig::bare(), &Stimulus::new(i), &SolverOptions::default()).unwrap().final_vpd;
        prop_assert!((v - PhotodiodeParams::default().ideal_final_vpd(i)).abs() < 1e-6);
    }

    #[test]
    fn runs_are_deterministic(k in 0usize..3, log_i in -13.0..-8.4f64) {
        let c = hybrid(k);
        let stim = Stimulus::new(10f64.powf(log_i));
        let a = integrate(&c, &stim, &SolverOptions::default()).unwrap();
        let b = integrate(&c, &stim, &SolverOptions::default()).unwrap();
        prop_assert_eq!(&a, &b);
        let cols = parse_trace_csv(&trace_csv(&a)).unwrap();
        prop_assert_eq!(cols.vpd, a.vpd);
        prop_assert_eq!(cols.gap, a.gap);
    }
}
