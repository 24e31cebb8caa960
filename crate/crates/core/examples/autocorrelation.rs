//! Autocorrelations of characteristic polynomials as sums of multiple residues.

use mom_core::autocorr::{autocorrelation, config_residue, IntegrandSpec, ResidueOptions, ShiftVector};
use mom_core::params::{combinatorial_coefficient, enumerate_configurations};
use mom_core::{Family, GroupSpec, MomOrder};

fn main() -> mom_core::Result<()> {
    let order = MomOrder::new(1, 1)?;
    for t in [0.3, 1.0, 2.0] {
        let th = ShiftVector::new(vec![t])?;
        let sp = autocorrelation(GroupSpec::symplectic(1)?, order, &th)?;
        let so = autocorrelation(GroupSpec::orthogonal(1)?, order, &th)?;
        println!("theta={t}: Sp(2) {sp:.6} vs {:.6}, SO(2) {so:.6} vs {:.6}", 3.0 + 2.0 * (2.0 * t).cos(), 4.0 + 2.0 * (2.0 * t).cos());
    }

    // Per-configuration contributions for k = 2, β = 1 on Sp(6).
    let g = GroupSpec::new(Family::Symplectic, 3)?;
    let order = MomOrder::new(2, 1)?;
    let th = ShiftVector::new(vec![0.7, 1.9])?;
    let spec = IntegrandSpec::rmt(g);
    for l in enumerate_configurations(order) {
        let r = config_residue(&spec, order, &l, &th, ResidueOptions::default())?;
        println!("l={l} c_l={} residue {:.6e}{:+.6e}i", combinatorial_coefficient(order, &l), r.re, r.im);
    }
    println!("total {:.10}", autocorrelation(g, order, &th)?);
    Ok(())
}
