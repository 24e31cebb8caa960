//! Exact moments of moments for small N by residues and trapezoid quadrature.

use std::time::Instant;

use mom_core::autocorr::{min_theta_grid, mom_exact, ExactOptions};
use mom_core::{Family, GroupSpec, MomOrder};

fn main() -> mom_core::Result<()> {
    let cases = [
        (Family::Symplectic, 1, 1),
        (Family::EvenOrthogonal, 1, 1),
        (Family::Symplectic, 2, 1),
        (Family::EvenOrthogonal, 2, 1),
        (Family::Symplectic, 1, 2),
        (Family::EvenOrthogonal, 1, 2),
    ];
    for (family, k, beta) in cases {
        let order = MomOrder::new(k, beta)?;
        let start = Instant::now();
        let values: Vec<String> = (1..=4)
            .map(|n| {
                let g = GroupSpec::new(family, n)?;
                let v = mom_exact(g, order, min_theta_grid(g, order), ExactOptions::default())?;
                Ok(format!("{v:.6}"))
            })
            .collect::<mom_core::Result<_>>()?;
        println!("{family} k={k} beta={beta}: N=1..4 -> [{}]  ({:.2?})", values.join(", "), start.elapsed());
    }
    Ok(())
}
