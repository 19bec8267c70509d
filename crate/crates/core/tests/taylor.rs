use kst_core::taylor_rep::{synthetic_cubics, truncation_study};
use kst_core::{build_psi, KstParams};

#[test]
fn truncation_order_with_identity_inner_table() {
    let params = KstParams::new(2, 10, 1, 4).unwrap();
    let table = build_psi(&params).unwrap();
    let outer = synthetic_cubics(5);
    let shifts = [1e-2, 5e-3, 2.5e-3];
    for x in [[0.2, 0.35], [0.61, 0.07]] {
        for order in 0..=2 {
            let (errors, fitted) = truncation_study(&outer, &x, order, &shifts, &table, &params).unwrap();
            assert!(errors.windows(2).all(|e| e[1] < e[0]));
            assert!(fitted >= order as f64 + 0.5, "M = {order}: order {fitted}");
        }
    }
}
