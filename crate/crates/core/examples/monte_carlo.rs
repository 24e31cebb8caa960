//! Monte Carlo estimates of the moments of moments next to the exact values.

use mom_core::autocorr::{min_theta_grid, mom_exact, ExactOptions};
use mom_core::montecarlo::{mom_estimate_orders, McOptions};
use mom_core::{Family, GroupSpec, MomOrder};

fn main() -> mom_core::Result<()> {
    let orders = [MomOrder::new(1, 1)?, MomOrder::new(2, 1)?, MomOrder::new(1, 2)?];
    for family in [Family::Symplectic, Family::EvenOrthogonal] {
        for n in 1..=3 {
            let g = GroupSpec::new(family, n)?;
            let est = mom_estimate_orders(g, &orders, 20_000, 7, McOptions::default())?;
            for (o, e) in orders.iter().zip(&est) {
                let exact = mom_exact(g, *o, min_theta_grid(g, *o), ExactOptions::default())?;
                println!(
                    "{family} N={n} k={} beta={}: {:.4} ± {:.4} (exact {exact:.4}, {:+.1} SE)",
                    o.k,
                    o.beta,
                    e.mean,
                    e.std_error,
                    (e.mean - exact) / e.std_error
                );
            }
        }
    }
    Ok(())
}
