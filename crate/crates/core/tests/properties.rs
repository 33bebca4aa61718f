use std::f64::consts::PI;

use boussinesq_ist::algebra::{a_conj, b_conj, max_abs_diff};
use boussinesq_ist::fredholm::{sector_for, symmetry_a_residual, symmetry_b_residual, NystromOptions};
use boussinesq_ist::potentials::builtin_bump;
use boussinesq_ist::scattering::{cofactor_residual, scattering, VolterraOptions};
use boussinesq_ist::{C64, OMEGA};
use proptest::prelude::*;

// keep |k| off 0 and off the rays where sectors meet
fn k_strategy() -> impl Strategy<Value = C64> {
    (0.2f64..4.0, 0usize..6, 0.05f64..0.95).prop_map(|(r, n, f)| C64::from_polar(r, (n as f64 + f) * PI / 3.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn s_invariants(k in k_strategy()) {
        let d = builtin_bump();
        let vo = VolterraOptions::default();
        let m = scattering(&d, k, &vo).unwrap();
        prop_assert!((m.s.determinant() - 1.0).norm() < 1e-9);
        prop_assert!(cofactor_residual(&m) < 1e-8);
        let mw = scattering(&d, OMEGA * k, &vo).unwrap();
        prop_assert!(max_abs_diff(&m.s, &a_conj(&mw.s)) < 1e-9);
        let mb = scattering(&d, k.conj(), &vo).unwrap();
        prop_assert!(max_abs_diff(&m.s, &b_conj(&mb.s)) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn m_symmetries(k in k_strategy(), x in -1.5f64..1.5) {
        let d = builtin_bump();
        let no = NystromOptions::default();
        let n = sector_for(k);
        prop_assert!(symmetry_a_residual(&d, n, x, k, &no).unwrap() < 1e-8);
        prop_assert!(symmetry_b_residual(&d, n, x, k, &no).unwrap() < 1e-8);
    }
}
