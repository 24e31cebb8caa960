//! Haar eigenangles from matrix sampling and from the Metropolis backend, against the Weyl density.

use mom_core::haar::{normalize_density, sample_eigenangles, tensor_midpoint, weyl_density, MetropolisSampler};
use mom_core::{Family, GroupSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> mom_core::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for family in [Family::Symplectic, Family::EvenOrthogonal] {
        let g = GroupSpec::new(family, 2)?;
        let z = normalize_density(g)?;
        let exact = tensor_midpoint(2, 400, |a| weyl_density(g, a) * a.iter().map(|x| x.cos()).sum::<f64>().powi(2)) / z;

        let n = 50_000;
        let mut direct = 0.0;
        for _ in 0..n {
            direct += sample_eigenangles(g, &mut rng)?.as_slice().iter().map(|x| x.cos()).sum::<f64>().powi(2);
        }
        let mut chain = MetropolisSampler::new(g, &mut rng)?;
        let mut mcmc = 0.0;
        for _ in 0..n {
            mcmc += chain.next_sample(&mut rng).as_slice().iter().map(|x| x.cos()).sum::<f64>().powi(2);
        }
        println!(
            "{family}: E[(cos a + cos b)^2] quadrature {exact:.4}, matrices {:.4}, Metropolis {:.4} (acceptance {:.2})",
            direct / n as f64,
            mcmc / n as f64,
            chain.acceptance_rate()
        );
    }
    Ok(())
}
