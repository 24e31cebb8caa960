//! Predictions for quadratic Dirichlet L-functions and quadratic twists of an elliptic curve.

use mom_core::asymptotics::GammaConfig;
use mom_core::lfunctions::{
    euler_product_b, family_discriminants, family_mom_demo, predicted_mom, ArithmeticFamily, DemoConfig,
    EllipticCurveData,
};
use mom_core::MomOrder;

fn main() -> mom_core::Result<()> {
    let mut curve = EllipticCurveData::default_curve();
    curve.compute_ap_table(1_000)?;
    curve.check_hasse()?;
    let small: Vec<String> = curve.ap_table.iter().take(8).map(|(p, a)| format!("a_{p}={a}")).collect();
    println!("y^2 = x^3 - x: {}", small.join(" "));
    println!("B(0) for k=1, beta=2: {:.6e}", euler_product_b(MomOrder::new(1, 2)?, &curve, 1_000)?);

    let dirichlet = ArithmeticFamily::QuadraticDirichlet;
    let twists = ArithmeticFamily::EllipticTwists(curve);
    let o11 = MomOrder::new(1, 1)?;
    for d in [1e3, 1e4, 1e5] {
        let p = predicted_mom(&dirichlet, o11, d, 1_000, GammaConfig::default())?;
        let e = predicted_mom(&twists, MomOrder::new(1, 2)?, d, 1_000, GammaConfig::default())?;
        println!("D={d:.0e}: quadratic {:.4} (A={:.6}, gamma={:.4}), twists {:.4e}", p.value, p.euler_product, p.gamma, e.value);
    }

    println!("{} twists with root number +1 and |d| <= 1000", family_discriminants(&twists, 1_000).len());
    for d_max in [100, 1_000] {
        let demo = family_mom_demo(&dirichlet, o11, d_max, DemoConfig::default())?;
        println!(
            "D={d_max}: average over {} discriminants {:.4}, Q alone {:.4}",
            demo.num_discriminants, demo.value, demo.without_root_factor
        );
    }
    Ok(())
}
