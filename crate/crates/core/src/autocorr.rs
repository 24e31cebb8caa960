//! Exact finite-N autocorrelations and moments of moments by residues.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C;
use num_traits::ToPrimitive;

use crate::error::{invalid, MomError, Result};
use crate::haar::{normalize_density, tensor_midpoint, weyl_density, EigenAngles};
use crate::montecarlo::{inner_moment, min_inner_grid, Neumaier};
use crate::params::{
    build_mu_assignment, combinatorial_coefficient, enumerate_configurations, ConfigurationVector, Family, GroupSpec,
    MomOrder, MuAssignment, Sign, Slot,
};
use crate::series::{pair_table, uni, MultiSeries, PairKernel, RmtKernel};

/// Shifts θ_1, …, θ_k with the 2k poles ±θ_m pairwise distinct.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftVector(Vec<f64>);

impl ShiftVector {
    /// Shifts in the open interval (0, π).
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|&t| !(t > 0.0 && t < PI)) {
            return invalid("shifts must lie strictly between 0 and pi");
        }
        Self::unreduced(theta)
    }

    /// Any real shifts whose poles ±θ_m are distinct modulo 2π.
    pub fn unreduced(theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return invalid("at least one shift is required");
        }
        let mut poles: Vec<f64> = theta.iter().flat_map(|&t| [t, -t]).map(|x| x.rem_euclid(2.0 * PI)).collect();
        poles.sort_by(f64::total_cmp);
        let wrap = poles[0] + 2.0 * PI - poles[poles.len() - 1];
        if poles.windows(2).any(|w| w[1] - w[0] < 1e-9) || wrap < 1e-9 {
            return invalid(format!("shifts {theta:?} give coalescing poles"));
        }
        Ok(ShiftVector(theta))
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
}

/// Analytic factors of the integrand besides the kernel, Vandermonde and exponential.
pub trait AnalyticPrefactor: Send + Sync {
    /// Taylor coefficients of the per-variable factor at z = center + v.
    fn per_variable(&self, center: C, cap: usize) -> Result<Vec<C>>;

    /// Joint factor in all variables about the pole centres; `None` when identically 1.
    fn joint(&self, _centers: &[C], _template: &MultiSeries) -> Result<Option<MultiSeries>> {
        Ok(None)
    }
}

/// The integrand of a 2kβ-fold contour integral of autocorrelation type.
#[derive(Clone)]
pub struct IntegrandSpec {
    pub kernel: Arc<dyn PairKernel>,
    pub prefactor: Option<Arc<dyn AnalyticPrefactor>>,
    pub exponent_scale: f64,
    /// Kernel product over m ≤ n rather than m < n.
    pub include_diagonal: bool,
}

impl IntegrandSpec {
    /// The random-matrix integrand for a group.
    pub fn rmt(group: GroupSpec) -> Self {
        IntegrandSpec {
            kernel: Arc::new(RmtKernel),
            prefactor: None,
            exponent_scale: group.half_dim as f64,
            include_diagonal: group.family.includes_diagonal(),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ResidueOptions {
    /// Extra per-variable degree beyond the 2β − 1 needed.
    pub extra_cap: usize,
    /// Optional total-degree truncation.
    pub max_total: Option<usize>,
}

fn inv_power(a: C, power: usize, len: usize) -> Result<Vec<C>> {
    let base = uni::inv(&[a, C::new(1.0, 0.0)], len)?;
    let mut out = vec![C::new(0.0, 0.0); len];
    out[0] = C::new(1.0, 0.0);
    for _ in 0..power {
        out = uni::mul(&out, &base, len);
    }
    Ok(out)
}

/// Residue of the integrand at the poles named by `mu`, each of order 2β.
///
/// Returns the coefficient of Π v_n^{2β−1} after z_n = iμ_n + v_n.
pub fn slot_residue(spec: &IntegrandSpec, beta: usize, mu: &MuAssignment, theta: &ShiftVector, opts: ResidueOptions) -> Result<C> {
    let th: Vec<C> = theta.as_slice().iter().map(|&t| C::new(t, 0.0)).collect();
    slot_residue_at(spec, beta, mu, &th, opts)
}

/// As [`slot_residue`] at complex shifts, where the residue sum continues analytically.
pub fn slot_residue_at(spec: &IntegrandSpec, beta: usize, mu: &MuAssignment, th: &[C], opts: ResidueOptions) -> Result<C> {
    let (series, centers) = slot_series_at(spec, beta, mu, th, opts)?;
    let phase = (centers.iter().sum::<C>() * spec.exponent_scale).exp();
    Ok(phase * series.taylor_coefficient(&vec![2 * beta - 1; mu.len()]))
}

/// A residue as a function of the exponential scale s: e^{s·c} Σ_j a_j s^j.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalePolynomial {
    pub phase: C,
    pub coefficients: Vec<C>,
}

impl ScalePolynomial {
    pub fn eval(&self, s: f64) -> C {
        let poly = self.coefficients.iter().rev().fold(C::new(0.0, 0.0), |acc, &a| acc * s + a);
        (self.phase * s).exp() * poly
    }
}

/// The residue of `spec` with its exponential scale left symbolic.
pub fn slot_residue_polynomial(spec: &IntegrandSpec, beta: usize, mu: &MuAssignment, th: &[C], opts: ResidueOptions) -> Result<ScalePolynomial> {
    let bare = IntegrandSpec { exponent_scale: 0.0, ..spec.clone() };
    let (mut series, centers) = slot_series_at(&bare, beta, mu, th, opts)?;
    let target = vec![2 * beta - 1; mu.len()];
    let mut linear = series.constant_like(C::new(0.0, 0.0));
    for n in 0..mu.len() {
        linear = linear.add(&series.variable_like(n))?;
    }
    let mut coefficients = Vec::new();
    let mut fact = 1.0;
    for j in 0..=target.iter().sum::<usize>() {
        if j > 0 {
            series = series.mul(&linear)?;
            fact *= j as f64;
        }
        coefficients.push(series.taylor_coefficient(&target) / fact);
    }
    Ok(ScalePolynomial { phase: centers.iter().sum(), coefficients })
}

/// The local series in v at z = iμ + v, and the centres iμ_n.
fn slot_series_at(spec: &IntegrandSpec, beta: usize, mu: &MuAssignment, th: &[C], opts: ResidueOptions) -> Result<(MultiSeries, Vec<C>)> {
    if th.len() != mu.k() {
        return invalid("shift count does not match k");
    }
    let v = mu.len();
    let cap = 2 * beta - 1 + opts.extra_cap;
    let len = cap + 1;
    let max_total = opts.max_total.unwrap_or(v * cap);
    let i = C::new(0.0, 1.0);
    let slot_value = |s: &Slot| th[s.index] * s.sign.value() as f64;
    let mu_val: Vec<C> = mu.slots().iter().map(slot_value).collect();
    let centers: Vec<C> = mu_val.iter().map(|&m| i * m).collect();
    let poles: Vec<Slot> = (0..mu.k()).flat_map(|m| [Slot::plus(m), Slot::minus(m)]).collect();

    let mut factors = Vec::with_capacity(v);
    for n in 0..v {
        let own = mu.slots()[n];
        let mut f = uni::exp_linear(spec.exponent_scale, len);
        f = uni::mul(&f, &[centers[n], C::new(1.0, 0.0)], len);
        for p in &poles {
            if *p == own {
                continue;
            }
            let gap = i * (mu_val[n] - slot_value(p));
            f = uni::mul(&f, &inv_power(gap, 2 * beta, len)?, len);
        }
        if spec.include_diagonal {
            let k = spec.kernel.taylor_at(centers[n] * 2.0, cap)?;
            f = uni::mul(&f, &uni::dilate(&k, C::new(2.0, 0.0)), len);
        }
        if let Some(pre) = &spec.prefactor {
            f = uni::mul(&f, &pre.per_variable(centers[n], cap)?, len);
        }
        factors.push(f);
    }
    let mut acc = MultiSeries::outer_product(vec![cap; v], max_total, &factors)?;

    let pair_len = 2 * cap + 1;
    let pole_part = spec.kernel.pole_part(pair_len)?;
    let a_sum: Vec<C> = std::iter::once(C::new(0.0, 0.0)).chain(pole_part.iter().copied()).take(pair_len).collect();
    for m in 0..v {
        for n in m + 1..v {
            let sigma = mu_val[m] + mu_val[n];
            let delta = mu_val[n] - mu_val[m];
            let p = if mu.sum_form(m, n).is_zero() {
                a_sum.clone()
            } else {
                let c = i * sigma;
                let k = spec.kernel.taylor_at(c, pair_len)?;
                let sq = uni::mul(&[c, C::new(1.0, 0.0)], &[c, C::new(1.0, 0.0)], pair_len);
                uni::mul(&sq, &k, pair_len)
            };
            let d = if mu.diff_form(m, n).is_zero() { C::new(0.0, 0.0) } else { i * delta };
            let q = uni::mul(&[d, C::new(1.0, 0.0)], &[d, C::new(1.0, 0.0)], pair_len);
            acc.mul_bivariate(m, n, &pair_table(&p, &q, cap, cap));
        }
    }
    if let Some(pre) = &spec.prefactor {
        if let Some(joint) = pre.joint(&centers, &acc)? {
            acc = acc.mul(&joint)?;
        }
    }
    Ok((acc, centers))
}

/// Residue for the block layout of configuration `l`.
pub fn config_residue(spec: &IntegrandSpec, order: MomOrder, l: &ConfigurationVector, theta: &ShiftVector, opts: ResidueOptions) -> Result<C> {
    let mu = build_mu_assignment(order, l)?;
    slot_residue(spec, order.beta, &mu, theta, opts)
}

/// (−1)^{kβ} 2^{2kβ} / (2kβ)!
pub fn assembly_prefactor(order: MomOrder) -> f64 {
    let kb = order.k_beta();
    let sign = if kb.is_multiple_of(2) { 1.0 } else { -1.0 };
    let fact: f64 = (1..=2 * kb).map(|x| x as f64).product();
    sign * 2f64.powi(2 * kb as i32) / fact
}

/// The configuration sum, before the realness check.
pub fn autocorrelation_with(spec: &IntegrandSpec, order: MomOrder, theta: &ShiftVector, opts: ResidueOptions) -> Result<C> {
    let th: Vec<C> = theta.as_slice().iter().map(|&t| C::new(t, 0.0)).collect();
    autocorrelation_at(spec, order, &th, opts)
}

/// The configuration sum at complex shifts.
pub fn autocorrelation_at(spec: &IntegrandSpec, order: MomOrder, theta: &[C], opts: ResidueOptions) -> Result<C> {
    let mut total = C::new(0.0, 0.0);
    for l in enumerate_configurations(order) {
        let c = combinatorial_coefficient(order, &l).to_f64().unwrap_or(f64::INFINITY);
        let mu = build_mu_assignment(order, &l)?;
        total += slot_residue_at(spec, order.beta, &mu, theta, opts)? * c;
    }
    Ok(total * assembly_prefactor(order))
}

fn check_real(z: C) -> Result<f64> {
    if z.im.abs() > 1e-8 * z.norm().max(1e-300) {
        return Err(MomError::Numeric(format!("imaginary part {} of {} exceeds tolerance", z.im, z.re)));
    }
    Ok(z.re)
}

/// I_{k,β}(G(2N); θ), the group average of Π_m |P(θ_m)|^{2β}.
pub fn autocorrelation(group: GroupSpec, order: MomOrder, theta: &ShiftVector) -> Result<f64> {
    check_real(autocorrelation_with(&IntegrandSpec::rmt(group), order, theta, ResidueOptions::default())?)
}

pub fn min_theta_grid(group: GroupSpec, order: MomOrder) -> usize {
    8 * group.half_dim * order.beta + 2
}

/// Grid offsets in units of the spacing; distinct per dimension so no node tuple coalesces.
pub fn grid_offsets(k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![0.5];
    }
    (0..k).map(|j| (j + 1) as f64 / (2 * k + 1) as f64).collect()
}

fn reduce_angle(t: f64) -> f64 {
    let r = t.rem_euclid(2.0 * PI);
    if r > PI {
        2.0 * PI - r
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactOptions {
    pub threads: usize,
    /// Shift θ_j to the line Im θ_j = (j + 1)·y. `None` picks y from the degree; zero keeps the real offset grid.
    pub imag_shift: Option<f64>,
    /// Permit kβ = 3. Residues there lose several digits to cancellation.
    pub allow_large: bool,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions { threads: 1, imag_shift: None, allow_large: false }
    }
}

/// Coefficients in one residue series, (2β)^{2kβ}.
pub fn residue_series_terms(order: MomOrder) -> u128 {
    (2 * order.beta as u128).pow(order.num_vars() as u32)
}

/// Default imaginary offset: far from coalescing poles while e^{2Nβ·Σy} stays moderate.
pub fn auto_imag_shift(group: GroupSpec, order: MomOrder) -> f64 {
    let degree = (2 * group.half_dim * order.beta * order.k) as f64;
    (8.0 / degree).min(0.2)
}

/// MoM by the k-dimensional trapezoid rule over the autocorrelation.
pub fn mom_exact(group: GroupSpec, order: MomOrder, grid: usize, opts: ExactOptions) -> Result<f64> {
    match order.k_beta() {
        0..=2 => {}
        3 if opts.allow_large => {}
        3 => return Err(MomError::Unsupported("k*beta = 3 needs allow_large".into())),
        kb => return Err(MomError::Unsupported(format!("exact values are limited to k*beta <= 3, got {kb}"))),
    }
    let min = min_theta_grid(group, order);
    if grid < min {
        return invalid(format!("theta grid {grid} below {min}"));
    }
    let spec = IntegrandSpec::rmt(group);
    let k = order.k;
    let y = opts.imag_shift.unwrap_or_else(|| auto_imag_shift(group, order));
    let shifted = y != 0.0;
    let offsets = if shifted { vec![0.5; k] } else { grid_offsets(k) };
    let nodes: Vec<Vec<C>> = offsets
        .iter()
        .enumerate()
        .map(|(j, d)| {
            (0..grid)
                .map(|i| {
                    let x = (i as f64 + d) * 2.0 * PI / grid as f64;
                    if shifted {
                        C::new(x, (j + 1) as f64 * y)
                    } else {
                        C::new(reduce_angle(x), 0.0)
                    }
                })
                .collect()
        })
        .collect();
    let inner_count = grid.pow(k as u32 - 1);
    let row = |i0: usize| -> Result<C> {
        let mut re = Neumaier::default();
        let mut im = Neumaier::default();
        let mut theta = vec![nodes[0][i0]; k];
        for flat in 0..inner_count {
            let mut rem = flat;
            for j in (1..k).rev() {
                theta[j] = nodes[j][rem % grid];
                rem /= grid;
            }
            let z = autocorrelation_at(&spec, order, &theta, ResidueOptions::default())?;
            if !shifted {
                check_real(z)?;
            }
            re.add(z.re);
            im.add(z.im);
        }
        Ok(C::new(re.value(), im.value()))
    };
    let threads = opts.threads.max(1).min(grid);
    let mut rows: Vec<Option<Result<C>>> = (0..grid).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                let row = &row;
                scope.spawn(move || (t..grid).step_by(threads).map(|i| (i, row(i))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("worker panicked") {
                rows[i] = Some(r);
            }
        }
    });
    let mut re = Neumaier::default();
    let mut im = Neumaier::default();
    for r in rows {
        let z = r.ok_or_else(|| MomError::Numeric("missing grid row".into()))??;
        re.add(z.re);
        im.add(z.im);
    }
    let scale = (grid as f64).powi(k as i32);
    check_real(C::new(re.value(), im.value()) / scale)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleValue {
    /// The value on the doubled node set.
    pub value: f64,
    /// The value on the base node set.
    pub base: f64,
    pub relative_change: f64,
}

/// MoM by tensor quadrature of the Weyl integration formula, N ≤ 3.
pub fn weyl_oracle_mom(group: GroupSpec, order: MomOrder, nodes: Option<usize>) -> Result<OracleValue> {
    let n = group.half_dim;
    if n > 3 {
        return invalid("Weyl oracle supports N <= 3");
    }
    let m = nodes.unwrap_or(order.k_beta() + n + 2);
    let grid = min_inner_grid(n, order.beta);
    let z = normalize_density(group)?;
    let eval = |m: usize| -> Result<f64> {
        let mut err = None;
        let v = tensor_midpoint(n, m, |a| {
            let angles = EigenAngles::new(a.to_vec()).expect("nodes lie in [0, pi]");
            match inner_moment(&angles, order.beta, grid) {
                Ok(x) => weyl_density(group, a) * x.powi(order.k as i32),
                Err(e) => {
                    err = Some(e);
                    0.0
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(v / z),
        }
    };
    let base = eval(m)?;
    let value = eval(2 * m)?;
    let relative_change = (value - base).abs() / value.abs();
    if relative_change > 1e-7 {
        return Err(MomError::Convergence(format!("Weyl quadrature changed by {relative_change:e} under node doubling")));
    }
    Ok(OracleValue { value, base, relative_change })
}

/// Slot sequence for an assignment of each variable to a pole (index, sign).
pub fn slots_from_counts(k: usize, plus: &[usize], minus: &[usize]) -> Result<MuAssignment> {
    let mut slots = Vec::new();
    for m in 0..k {
        slots.extend(std::iter::repeat_n(Slot { index: m, sign: Sign::Plus }, plus[m]));
        slots.extend(std::iter::repeat_n(Slot { index: m, sign: Sign::Minus }, minus[m]));
    }
    MuAssignment::from_slots(k, slots)
}

/// The family whose integrand includes the diagonal kernel factors.
pub fn family_of(include_diagonal: bool) -> Family {
    if include_diagonal {
        Family::Symplectic
    } else {
        Family::EvenOrthogonal
    }
}
