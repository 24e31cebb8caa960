//! Monte Carlo estimates of the moments of moments.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, MomError, Result};
use crate::haar::{sample_eigenangles, EigenAngles, RngStream};
use crate::params::{GroupSpec, MomOrder};

/// Samples drawn from each random stream.
pub const CHUNK_SIZE: usize = 4096;

/// |P(θ)|² = Π_j |1 − e^{i(φ_j − θ)}|² |1 − e^{−i(φ_j + θ)}|².
pub fn abs_charpoly_sq(angles: &EigenAngles, theta: f64) -> f64 {
    let c = theta.cos();
    angles
        .as_slice()
        .iter()
        .map(|a| {
            let d = 2.0 * (a.cos() - c);
            d * d
        })
        .product()
}

pub fn min_inner_grid(n: usize, beta: usize) -> usize {
    4 * n * beta + 2
}

/// (1/2π)∫|P(θ)|^{2β} dθ by the trapezoid rule, exact once the grid resolves the trigonometric polynomial.
pub fn inner_moment(angles: &EigenAngles, beta: usize, grid: usize) -> Result<f64> {
    if grid < min_inner_grid(angles.len(), beta) {
        return invalid(format!("theta grid {grid} below {}", min_inner_grid(angles.len(), beta)));
    }
    Ok(inner_moment_unchecked(angles, beta, grid))
}

fn inner_moment_unchecked(angles: &EigenAngles, beta: usize, grid: usize) -> f64 {
    let mut acc = Neumaier::default();
    for i in 0..grid {
        let theta = 2.0 * PI * i as f64 / grid as f64;
        acc.add(abs_charpoly_sq(angles, theta).powi(beta as i32));
    }
    acc.value() / grid as f64
}

/// Compensated running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Count, mean and centred sum of squares of a block of samples.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn from_values(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mut s = Neumaier::default();
        xs.iter().for_each(|&x| s.add(x));
        let mean = s.value() / n;
        let mut q = Neumaier::default();
        xs.iter().for_each(|&x| q.add((x - mean) * (x - mean)));
        Moments { n, mean, m2: q.value() }
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + delta * other.n / n,
            m2: self.m2 + other.m2 + delta * delta * self.n * other.n / n,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub num_samples: usize,
    pub config_digest: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McOptions {
    pub threads: usize,
    pub antithetic: bool,
    pub inner_grid: Option<usize>,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions { threads: 1, antithetic: false, inner_grid: None }
    }
}

fn chunk_values(spec: GroupSpec, orders: &[MomOrder], grids: &[usize], stream: RngStream, count: usize, antithetic: bool) -> Result<Vec<Vec<f64>>> {
    let mut rng = stream.generator();
    let mut out = vec![Vec::with_capacity(count); orders.len()];
    for _ in 0..count {
        let a = sample_eigenangles(spec, &mut rng)?;
        let b = antithetic.then(|| a.negated());
        for ((o, &g), vals) in orders.iter().zip(grids).zip(out.iter_mut()) {
            let f = |x: &EigenAngles| inner_moment_unchecked(x, o.beta, g).powi(o.k as i32);
            let v = match &b {
                Some(b) => 0.5 * (f(&a) + f(b)),
                None => f(&a),
            };
            vals.push(v);
        }
    }
    Ok(out)
}

/// Estimates several orders from one shared set of samples.
///
/// Each result equals what `mom_estimate` returns for that order alone.
pub fn mom_estimate_orders(spec: GroupSpec, orders: &[MomOrder], num_samples: usize, seed: u64, opts: McOptions) -> Result<Vec<MomEstimate>> {
    if num_samples < 2 {
        return invalid("at least two samples are required");
    }
    let grids: Vec<usize> = orders
        .iter()
        .map(|o| {
            let min = min_inner_grid(spec.half_dim, o.beta);
            match opts.inner_grid {
                Some(g) if g < min => invalid(format!("theta grid {g} below {min}")),
                Some(g) => Ok(g),
                None => Ok(min),
            }
        })
        .collect::<Result<_>>()?;
    let chunks = num_samples.div_ceil(CHUNK_SIZE);
    let sizes: Vec<usize> = (0..chunks).map(|c| CHUNK_SIZE.min(num_samples - c * CHUNK_SIZE)).collect();
    let threads = opts.threads.max(1).min(chunks);
    let mut per_chunk: Vec<Option<Result<Vec<Moments>>>> = (0..chunks).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let grids = &grids;
                let sizes = &sizes;
                scope.spawn(move || {
                    (t..chunks)
                        .step_by(threads)
                        .map(|c| {
                            let stream = RngStream::new(seed, c as u64);
                            let r = chunk_values(spec, orders, grids, stream, sizes[c], opts.antithetic)
                                .map(|vals| vals.iter().map(|v| Moments::from_values(v)).collect());
                            (c, r)
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (c, r) in h.join().expect("worker panicked") {
                per_chunk[c] = Some(r);
            }
        }
    });
    let mut totals = vec![Moments::default(); orders.len()];
    for r in per_chunk {
        let ms = r.ok_or_else(|| MomError::Numeric("missing chunk".into()))??;
        for (t, m) in totals.iter_mut().zip(ms) {
            *t = t.merge(m);
        }
    }
    Ok(orders
        .iter()
        .zip(&grids)
        .zip(totals)
        .map(|((o, g), m)| {
            let var = m.m2 / (m.n - 1.0);
            MomEstimate {
                mean: m.mean,
                std_error: (var / m.n).sqrt(),
                num_samples,
                config_digest: format!(
                    "{spec} k={} beta={} grid={g} seed={seed} chunk={CHUNK_SIZE} antithetic={}",
                    o.k, o.beta, opts.antithetic
                ),
            }
        })
        .collect())
}

/// Mean of (inner moment)^k over Haar samples with its standard error.
pub fn mom_estimate(spec: GroupSpec, order: MomOrder, num_samples: usize, seed: u64, opts: McOptions) -> Result<MomEstimate> {
    Ok(mom_estimate_orders(spec, &[order], num_samples, seed, opts)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn angles(v: &[f64]) -> EigenAngles {
        EigenAngles::new(v.to_vec()).unwrap()
    }

    #[test]
    fn charpoly_examples() {
        assert_relative_eq!(abs_charpoly_sq(&angles(&[PI / 2.0]), 0.0), 4.0, max_relative = 1e-14);
        assert!(abs_charpoly_sq(&angles(&[0.8]), 0.8) < 1e-28);
        assert_relative_eq!(abs_charpoly_sq(&angles(&[PI / 3.0]), 0.0), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn inner_moment_examples() {
        assert_relative_eq!(inner_moment(&angles(&[PI / 2.0]), 1, 6).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(inner_moment(&angles(&[PI / 3.0]), 1, 6).unwrap(), 3.0, max_relative = 1e-14);
        assert_relative_eq!(inner_moment(&angles(&[0.0]), 1, 6).unwrap(), 6.0, max_relative = 1e-14);
        assert!(inner_moment(&angles(&[0.0]), 1, 5).is_err());
    }

    #[test]
    fn grid_doubling_is_exact() {
        let a = angles(&[0.3, 1.1, 2.9]);
        let g = min_inner_grid(3, 2);
        let x = inner_moment(&a, 2, g).unwrap();
        let y = inner_moment(&a, 2, 2 * g).unwrap();
        assert!((x - y).abs() < 1e-12 * y);
    }

    #[test]
    fn small_group_means() {
        let o = MomOrder::new(1, 1).unwrap();
        let so = mom_estimate(GroupSpec::orthogonal(1).unwrap(), o, 100_000, 7, McOptions::default()).unwrap();
        assert!((so.mean - 4.0).abs() < 3.0 * so.std_error, "{so:?}");
        let sp = mom_estimate(GroupSpec::symplectic(1).unwrap(), o, 100_000, 7, McOptions::default()).unwrap();
        assert!((sp.mean - 3.0).abs() < 3.0 * sp.std_error, "{sp:?}");
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let spec = GroupSpec::symplectic(2).unwrap();
        let o = MomOrder::new(2, 1).unwrap();
        let one = mom_estimate(spec, o, 10_000, 3, McOptions { threads: 1, ..Default::default() }).unwrap();
        let three = mom_estimate(spec, o, 10_000, 3, McOptions { threads: 3, ..Default::default() }).unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn shared_samples_match_single_runs() {
        let spec = GroupSpec::orthogonal(2).unwrap();
        let orders = [MomOrder::new(1, 1).unwrap(), MomOrder::new(1, 2).unwrap()];
        let both = mom_estimate_orders(spec, &orders, 5000, 4, McOptions::default()).unwrap();
        let single = mom_estimate(spec, orders[1], 5000, 4, McOptions::default()).unwrap();
        assert_eq!(both[1], single);
    }

    #[test]
    fn antithetic_estimate_is_unbiased() {
        let spec = GroupSpec::orthogonal(1).unwrap();
        let o = MomOrder::new(1, 1).unwrap();
        let opts = McOptions { antithetic: true, ..Default::default() };
        let e = mom_estimate(spec, o, 50_000, 1, opts).unwrap();
        assert!((e.mean - 4.0).abs() < 4.0 * e.std_error.max(1e-3), "{e:?}");
    }
}
