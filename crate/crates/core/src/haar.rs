//! Haar-random eigenangles for Sp(2N) and SO(2N) and the Weyl densities.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, MomError, Result};
use crate::params::{Family, GroupSpec};

/// The N eigenangles in [0, π], ascending; the spectrum is {e^{±iφ_j}}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenAngles(Vec<f64>);

impl EigenAngles {
    pub fn new(mut angles: Vec<f64>) -> Result<Self> {
        if angles.iter().any(|a| !(0.0..=PI).contains(a)) {
            return invalid("eigenangles must lie in [0, pi]");
        }
        angles.sort_by(f64::total_cmp);
        Ok(EigenAngles(angles))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Angles of −A.
    pub fn negated(&self) -> EigenAngles {
        let mut v: Vec<f64> = self.0.iter().map(|a| PI - a).collect();
        v.reverse();
        EigenAngles(v)
    }
}

/// A reproducible random stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream { seed, stream_id }
    }

    pub fn generator(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

fn haar_symplectic<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex<f64>> {
    let dim = 2 * n;
    let j_conj = |c: &DVector<Complex<f64>>| {
        DVector::from_fn(dim, |i, _| if i < n { -c[i + n].conj() } else { c[i - n].conj() })
    };
    let mut cols: Vec<DVector<Complex<f64>>> = Vec::with_capacity(dim);
    for _ in 0..n {
        let mut c = DVector::from_fn(dim, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(re, im)
        });
        for _ in 0..2 {
            for b in cols.iter() {
                let proj = b.dotc(&c);
                c -= b * proj;
            }
        }
        c /= Complex::new(c.norm(), 0.0);
        let d = j_conj(&c);
        cols.push(c);
        cols.push(d);
    }
    let mut m = DMatrix::zeros(dim, dim);
    for j in 0..n {
        m.set_column(j, &cols[2 * j]);
        m.set_column(j + n, &cols[2 * j + 1]);
    }
    m
}

fn pair_angles(mut args: Vec<f64>) -> Vec<f64> {
    args.sort_by(f64::total_cmp);
    args.into_iter().step_by(2).collect()
}

/// Draws the eigenangles of a Haar-random element of the group.
pub fn sample_eigenangles<R: Rng + ?Sized>(spec: GroupSpec, rng: &mut R) -> Result<EigenAngles> {
    let n = spec.half_dim;
    let args: Vec<f64> = match spec.family {
        Family::EvenOrthogonal => {
            let q = haar_orthogonal(2 * n, rng);
            q.complex_eigenvalues().iter().map(|z| z.arg().abs()).collect()
        }
        Family::Symplectic => {
            let u = haar_symplectic(n, rng);
            let ev = u
                .schur()
                .eigenvalues()
                .ok_or_else(|| MomError::Numeric("Schur decomposition failed".into()))?;
            ev.iter().map(|z| z.arg().abs()).collect()
        }
    };
    EigenAngles::new(pair_angles(args).into_iter().map(|a| a.clamp(0.0, PI)).collect())
}

/// Draws from a stream; equal streams give equal samples.
pub fn sample_from_stream(spec: GroupSpec, stream: RngStream) -> Result<EigenAngles> {
    sample_eigenangles(spec, &mut stream.generator())
}

/// Unnormalised Weyl eigenangle density.
pub fn weyl_density(spec: GroupSpec, angles: &[f64]) -> f64 {
    let mut d = 1.0;
    for (j, &a) in angles.iter().enumerate() {
        for &b in &angles[j + 1..] {
            let diff = a.cos() - b.cos();
            d *= diff * diff;
        }
        if spec.family == Family::Symplectic {
            let s = a.sin();
            d *= s * s;
        }
    }
    d
}

/// Midpoint nodes on [0, π].
pub fn midpoint_nodes(m: usize) -> Vec<f64> {
    (0..m).map(|i| (i as f64 + 0.5) * PI / m as f64).collect()
}

/// Tensor midpoint rule over [0, π]^n; exact for polynomials in cos φ_j of degree < 2m.
pub fn tensor_midpoint<F: FnMut(&[f64]) -> f64>(n: usize, m: usize, mut f: F) -> f64 {
    let nodes = midpoint_nodes(m);
    let w = (PI / m as f64).powi(n as i32);
    let mut idx = vec![0usize; n];
    let mut point = vec![nodes[0]; n];
    let mut acc = 0.0;
    let mut comp = 0.0;
    loop {
        let y = f(&point) - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
        let mut d = 0;
        loop {
            if d == n {
                return acc * w;
            }
            idx[d] += 1;
            if idx[d] < m {
                point[d] = nodes[idx[d]];
                break;
            }
            idx[d] = 0;
            point[d] = nodes[0];
            d += 1;
        }
    }
}

/// ∫ weyl_density over [0, π]^N, verified under node doubling.
pub fn normalize_density(spec: GroupSpec) -> Result<f64> {
    let n = spec.half_dim;
    if n > 4 {
        return invalid("normalize_density supports N <= 4");
    }
    let m = n + 3;
    let z1 = tensor_midpoint(n, m, |a| weyl_density(spec, a));
    let z2 = tensor_midpoint(n, 2 * m, |a| weyl_density(spec, a));
    if (z1 - z2).abs() > 1e-10 * z2.abs() {
        return Err(MomError::Convergence(format!("density normalisation unstable: {z1} vs {z2}")));
    }
    Ok(z2)
}

/// Random-walk Metropolis sampler on [0, π]^N targeting the Weyl density.
#[derive(Clone, Debug)]
pub struct MetropolisSampler {
    spec: GroupSpec,
    state: Vec<f64>,
    density: f64,
    step: f64,
    thin: usize,
    accepted: u64,
    proposed: u64,
}

impl MetropolisSampler {
    pub fn new<R: Rng + ?Sized>(spec: GroupSpec, rng: &mut R) -> Result<Self> {
        if spec.half_dim > 4 {
            return invalid("Metropolis backend supports N <= 4");
        }
        let state: Vec<f64> = (0..spec.half_dim).map(|_| rng.random_range(0.0..PI)).collect();
        let density = weyl_density(spec, &state);
        let mut s = MetropolisSampler { spec, state, density, step: 0.6, thin: 10, accepted: 0, proposed: 0 };
        for _ in 0..200 {
            s.advance(rng);
        }
        Ok(s)
    }

    fn advance<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for j in 0..self.state.len() {
            let mut cand = self.state.clone();
            let x = cand[j] + self.step * (rng.random::<f64>() - 0.5) * 2.0;
            // Reflect at the boundary; the proposal stays symmetric.
            cand[j] = if x < 0.0 {
                -x
            } else if x > PI {
                2.0 * PI - x
            } else {
                x
            };
            let d = weyl_density(self.spec, &cand);
            self.proposed += 1;
            if d >= self.density || rng.random::<f64>() * self.density < d {
                self.state = cand;
                self.density = d;
                self.accepted += 1;
            }
        }
    }

    pub fn next_sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> EigenAngles {
        for _ in 0..self.thin {
            self.advance(rng);
        }
        EigenAngles::new(self.state.clone()).expect("state stays in [0, pi]")
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accepted as f64 / self.proposed.max(1) as f64
    }
}
