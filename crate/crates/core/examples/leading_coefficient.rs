//! Leading coefficients: the contour formula against fits of exact values.

use mom_core::asymptotics::{gamma_coefficient, leading_fit, psi_integral, GammaConfig, OscillatoryQuadratureConfig, VPoint};
use mom_core::autocorr::{min_theta_grid, mom_exact, ExactOptions};
use mom_core::params::{leading_exponent, ConfigurationVector};
use mom_core::{Family, GroupSpec, MomOrder};

fn main() -> mom_core::Result<()> {
    for (family, k, beta) in [
        (Family::Symplectic, 1, 1),
        (Family::Symplectic, 2, 1),
        (Family::Symplectic, 1, 2),
        (Family::EvenOrthogonal, 2, 1),
        (Family::EvenOrthogonal, 1, 2),
    ] {
        let order = MomOrder::new(k, beta)?;
        let deg = leading_exponent(family, order) as usize;
        let values = (1..=deg + 2)
            .map(|n| {
                let g = GroupSpec::new(family, n)?;
                Ok((n, mom_exact(g, order, min_theta_grid(g, order), ExactOptions::default())?))
            })
            .collect::<mom_core::Result<Vec<_>>>()?;
        let fit = leading_fit(&values, deg, 1e-6)?;
        let gamma = gamma_coefficient(family, order, GammaConfig::default())?;
        println!("{family} k={k} beta={beta}: N^{deg} coefficient {:.12e} (fit {:.12e})", gamma.value, fit.leading);
    }

    let order = MomOrder::new(1, 1)?;
    let l = ConfigurationVector::new(order, vec![1])?;
    let v = VPoint::on_circle(0.25, &[0.4, 2.2])?;
    let psi = psi_integral(&v, order, &l, Family::Symplectic, &OscillatoryQuadratureConfig::default())?;
    println!("Psi at angles (0.4, 2.2) on |v| = 1/4: {:.12}", psi.value);
    Ok(())
}
