//! The acceptance matrix: each check runs at its stated tolerance and reports pass or fail.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64 as C;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{gamma_coefficient, leading_fit, psi_integral, GammaConfig, OscillatoryQuadratureConfig, VPoint};
use crate::autocorr::{
    autocorrelation, autocorrelation_with, min_theta_grid, mom_exact, slot_residue, slots_from_counts, weyl_oracle_mom,
    ExactOptions, IntegrandSpec, ResidueOptions, ShiftVector,
};
use crate::error::Result;
use crate::lfunctions::{euler_product_a, q_integrand, upsilon_integrand, ArithmeticConfig, EllipticCurveData};
use crate::montecarlo::{mom_estimate_orders, McOptions};
use crate::params::{
    combinatorial_coefficient, enumerate_configurations, leading_exponent, ConfigurationVector, Family, GroupSpec,
    MomOrder,
};
use crate::series::RmtKernel;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SuiteMode {
    Quick,
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub id: String,
    pub name: String,
    pub passed: bool,
    /// Fails because the stated target is itself wrong; the corrected target is checked separately.
    pub known_defect: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CheckOutcome {
    /// A failure that is not a documented defect of the target.
    pub fn is_unexpected_failure(&self) -> bool {
        !self.passed && !self.known_defect
    }

    pub fn line(&self) -> String {
        let status = match (self.passed, self.known_defect) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known defect in target)",
            (false, false) => "FAIL",
        };
        format!("[{status}] {} {}: {} ({:.1}s)", self.id, self.name, self.detail, self.seconds)
    }
}

fn run(id: &str, name: &str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckOutcome {
    let start = Instant::now();
    let (passed, detail) = f().unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckOutcome { id: id.into(), name: name.into(), passed, known_defect: false, detail, seconds: start.elapsed().as_secs_f64() }
}

fn order(k: usize, beta: usize) -> MomOrder {
    MomOrder::new(k, beta).expect("valid order")
}

fn group(family: Family, n: usize) -> GroupSpec {
    GroupSpec::new(family, n).expect("valid group")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn exact(family: Family, n: usize, o: MomOrder) -> Result<f64> {
    let g = group(family, n);
    mom_exact(g, o, min_theta_grid(g, o), ExactOptions::default())
}

/// Exact values at N = 1..=count.
fn exact_series(family: Family, o: MomOrder, count: usize) -> Result<Vec<(usize, f64)>> {
    (1..=count).map(|n| Ok((n, exact(family, n, o)?))).collect()
}

pub fn anchor_so_linear() -> CheckOutcome {
    run("1", "exact anchor 2(N+1)", || {
        let start = Instant::now();
        let mut worst: f64 = 0.0;
        for n in 1..=6 {
            worst = worst.max(rel(exact(Family::EvenOrthogonal, n, order(1, 1))?, 2.0 * (n as f64 + 1.0)));
        }
        let secs = start.elapsed().as_secs_f64();
        Ok((worst < 1e-8 && secs < 60.0, format!("max rel err {worst:.1e}, {secs:.1}s")))
    })
}

pub fn oracle_equivalence() -> CheckOutcome {
    run("2", "exact vs Weyl quadrature", || {
        let mut worst: f64 = 0.0;
        for family in [Family::Symplectic, Family::EvenOrthogonal] {
            for n in 1..=2 {
                for (k, b) in [(1, 1), (2, 1), (1, 2)] {
                    let o = order(k, b);
                    let oracle = weyl_oracle_mom(group(family, n), o, None)?;
                    worst = worst.max(rel(exact(family, n, o)?, oracle.value));
                }
            }
        }
        Ok((worst < 1e-6, format!("max rel diff {worst:.1e} over 12 cases")))
    })
}

pub fn weyl_closed_forms() -> CheckOutcome {
    run("3", "closed-form autocorrelations", || {
        let mut worst: f64 = 0.0;
        for j in 0..20 {
            let t = 0.05 + (PI - 0.1) * j as f64 / 19.0;
            let th = ShiftVector::new(vec![t])?;
            let sp = autocorrelation(group(Family::Symplectic, 1), order(1, 1), &th)?;
            let so = autocorrelation(group(Family::EvenOrthogonal, 1), order(1, 1), &th)?;
            worst = worst.max((sp - (3.0 + 2.0 * (2.0 * t).cos())).abs());
            worst = worst.max((so - (4.0 + 2.0 * (2.0 * t).cos())).abs());
        }
        Ok((worst < 1e-8, format!("max abs err {worst:.1e} at 20 points")))
    })
}

/// Count vectors (plus_m, minus_m) with Σ = total.
fn count_vectors(k: usize, total: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
    fn rec(slots: usize, total: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == slots - 1 {
            cur.push(total);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for x in 0..=total {
            cur.push(x);
            rec(slots, total - x, cur, out);
            cur.pop();
        }
    }
    let mut flat = Vec::new();
    rec(2 * k, total, &mut Vec::new(), &mut flat);
    flat.into_iter().map(|v| (v[..k].to_vec(), v[k..].to_vec())).collect()
}

pub fn zero_summands() -> CheckOutcome {
    run("4", "overfull poles contribute zero", || {
        let mut worst: f64 = 0.0;
        let mut count = 0;
        for family in [Family::Symplectic, Family::EvenOrthogonal] {
            for (k, b) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
                let o = order(k, b);
                let th = ShiftVector::new([0.7, 1.9][..k].to_vec())?;
                let spec = IntegrandSpec::rmt(group(family, 2));
                let total = autocorrelation_with(&spec, o, &th, ResidueOptions::default())?.norm();
                for (plus, minus) in count_vectors(k, 2 * k * b) {
                    if (0..k).all(|m| plus[m] + minus[m] <= 2 * b) {
                        continue;
                    }
                    let mu = slots_from_counts(k, &plus, &minus)?;
                    let r = slot_residue(&spec, b, &mu, &th, ResidueOptions::default())?;
                    worst = worst.max(r.norm() / total);
                    count += 1;
                }
            }
        }
        Ok((worst < 1e-10, format!("{count} overfull configurations, max relative size {worst:.1e}")))
    })
}

/// (family, k, β) with kβ ≤ 2.
const SMALL_CASES: [(Family, usize, usize); 6] = [
    (Family::Symplectic, 1, 1),
    (Family::Symplectic, 2, 1),
    (Family::Symplectic, 1, 2),
    (Family::EvenOrthogonal, 1, 1),
    (Family::EvenOrthogonal, 2, 1),
    (Family::EvenOrthogonal, 1, 2),
];

type ExactCache = HashMap<(Family, usize, usize), Vec<(usize, f64)>>;

fn exact_cache() -> Result<ExactCache> {
    let mut out = HashMap::new();
    for (f, k, b) in SMALL_CASES {
        let e = leading_exponent(f, order(k, b)) as usize;
        out.insert((f, k, b), exact_series(f, order(k, b), e + 2)?);
    }
    Ok(out)
}

pub fn polynomiality(cache: &ExactCache) -> CheckOutcome {
    run("5", "polynomial of the stated degree", || {
        let mut ok = true;
        let mut notes = Vec::new();
        for (f, k, b) in SMALL_CASES {
            let deg = leading_exponent(f, order(k, b)) as usize;
            let vals = &cache[&(f, k, b)];
            let fit = leading_fit(vals, deg, 1e-6);
            let lower = leading_fit(vals, deg - 1, 1e-6);
            let good = matches!(&fit, Ok(r) if r.leading.abs() > 1e-9) && lower.is_err();
            ok &= good;
            let res = fit.map(|r| r.residual.unwrap_or(0.0)).unwrap_or(f64::NAN);
            notes.push(format!("{}({k},{b}) deg {deg} res {res:.0e}", f.short_name()));
        }
        Ok((ok, notes.join("; ")))
    })
}

pub fn gamma_cross_validation(cache: &ExactCache) -> CheckOutcome {
    run("6", "gamma vs finite-difference leading coefficient", || {
        let mut ok = true;
        let mut notes = Vec::new();
        for (f, k, b) in SMALL_CASES {
            let o = order(k, b);
            if o.is_special_for(f) {
                continue;
            }
            let g = gamma_coefficient(f, o, GammaConfig::default())?;
            let lead = leading_fit(&cache[&(f, k, b)], leading_exponent(f, o) as usize, 1e-6)?.leading;
            let r = rel(g.value, lead);
            ok &= g.value > 0.0 && r < 1e-3;
            notes.push(format!("{}({k},{b}) {:.6e} rel {r:.0e}", f.short_name(), g.value));
        }
        Ok((ok, notes.join("; ")))
    })
}

fn random_circle_points(count: usize) -> Vec<VPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..count)
        .map(|_| VPoint::on_circle(0.25, &[rng.random_range(0.0..2.0 * PI), rng.random_range(0.0..2.0 * PI)]).expect("valid point"))
        .collect()
}

fn psi_errors(formula: impl Fn(C, C) -> C) -> Result<f64> {
    let o = order(1, 1);
    let l = ConfigurationVector::new(o, vec![1])?;
    let cfg = OscillatoryQuadratureConfig::default();
    let mut worst: f64 = 0.0;
    for v in random_circle_points(10) {
        let psi = psi_integral(&v, o, &l, Family::Symplectic, &cfg)?.value;
        let want = formula(v.values()[0], v.values()[1]);
        worst = worst.max((psi - want).norm() / want.norm());
    }
    Ok(worst)
}

pub fn psi_closed_form_as_stated() -> CheckOutcome {
    let mut out = run("7", "Psi against (pi - i log(v2/v1))/4", || {
        let worst = psi_errors(|v1, v2| (PI - C::i() * (v2 / v1).ln()) / 4.0)?;
        Ok((worst < 1e-6, format!("max rel err {worst:.2e} at 10 points")))
    });
    out.known_defect = !out.passed;
    out
}

pub fn psi_closed_form_corrected() -> CheckOutcome {
    run("7*", "Psi against i(log(-i v1) - log(i v2))/(4(v1+v2))", || {
        let i = C::i();
        let worst = psi_errors(|v1, v2| i * ((-i * v1).ln() - (i * v2).ln()) / (4.0 * (v1 + v2)))?;
        Ok((worst < 1e-6, format!("max rel err {worst:.1e} at 10 points")))
    })
}

pub fn monte_carlo_consistency(seeds: u64) -> CheckOutcome {
    run("8", "Monte Carlo within 3 standard errors", || {
        let orders = [order(1, 1), order(2, 1), order(1, 2)];
        let mut total = 0;
        let mut within = 0;
        for n in 1..=4 {
            let g = group(Family::Symplectic, n);
            let exact: Vec<f64> = orders.iter().map(|&o| mom_exact(g, o, min_theta_grid(g, o), ExactOptions::default())).collect::<Result<_>>()?;
            for seed in 0..seeds {
                let est = mom_estimate_orders(g, &orders, 100_000, seed, McOptions::default())?;
                for (e, x) in est.iter().zip(&exact) {
                    total += 1;
                    within += usize::from((e.mean - x).abs() <= 3.0 * e.std_error);
                }
            }
        }
        let rate = within as f64 / total as f64;
        Ok((rate >= 0.99, format!("{within}/{total} runs within 3 SE ({:.1}%)", 100.0 * rate)))
    })
}

/// Assignments of 2kβ labelled variables to the 2k poles with every ±θ_m pair receiving exactly 2β.
pub fn surviving_assignments(k: usize, beta: usize) -> u128 {
    let vars = 2 * k * beta;
    let poles = 2 * k;
    if (poles as f64).powi(vars as i32) <= 2e7 {
        let mut count = 0u128;
        let mut occ = vec![0usize; poles];
        fn rec(left: usize, occ: &mut Vec<usize>, k: usize, beta: usize, count: &mut u128) {
            if left == 0 {
                if (0..k).all(|m| occ[2 * m] + occ[2 * m + 1] == 2 * beta) {
                    *count += 1;
                }
                return;
            }
            for p in 0..occ.len() {
                occ[p] += 1;
                rec(left - 1, occ, k, beta, count);
                occ[p] -= 1;
            }
        }
        rec(vars, &mut occ, k, beta, &mut count);
        return count;
    }
    // Same count with the variables added one at a time and states merged by occupation.
    let mut states: HashMap<Vec<usize>, u128> = HashMap::from([(vec![0; poles], 1)]);
    for _ in 0..vars {
        let mut next = HashMap::new();
        for (occ, c) in states {
            for p in 0..poles {
                let mut o = occ.clone();
                o[p] += 1;
                if o[p - p % 2] + o[p - p % 2 + 1] <= 2 * beta {
                    *next.entry(o).or_insert(0) += c;
                }
            }
        }
        states = next;
    }
    states.into_iter().filter(|(o, _)| (0..k).all(|m| o[2 * m] + o[2 * m + 1] == 2 * beta)).map(|(_, c)| c).sum()
}

pub fn combinatorial_identity() -> CheckOutcome {
    run("9", "sum of c_l equals surviving assignments", || {
        let mut ok = true;
        for k in 1..=3 {
            for b in 1..=3 {
                let o = order(k, b);
                let sum: u128 = enumerate_configurations(o).iter().map(|l| combinatorial_coefficient(o, l).to_u128().unwrap_or(u128::MAX)).sum();
                ok &= sum == surviving_assignments(k, b);
            }
        }
        Ok((ok, "k, beta <= 3".into()))
    })
}

pub fn kernel_substitution() -> CheckOutcome {
    run("10", "arithmetic engines with the random-matrix kernel", || {
        let mut worst: f64 = 0.0;
        let curve = EllipticCurveData::default_curve();
        let cfg = ArithmeticConfig { series_prime_cutoff: 1 };
        for (k, b) in [(1, 1), (2, 1), (1, 2)] {
            let o = order(k, b);
            let th = ShiftVector::new([0.7, 1.9][..k].to_vec())?;
            for n in 1..=4 {
                for family in [Family::Symplectic, Family::EvenOrthogonal] {
                    let mut spec = match family {
                        Family::Symplectic => q_integrand(2.0 * n as f64, 0, cfg)?,
                        Family::EvenOrthogonal => upsilon_integrand(n as f64, &curve, cfg)?,
                    };
                    spec.kernel = Arc::new(RmtKernel);
                    spec.prefactor = None;
                    let a = autocorrelation_with(&spec, o, &th, ResidueOptions::default())?;
                    let want = autocorrelation(group(family, n), o, &th)?;
                    worst = worst.max((a - want).norm() / want.abs());
                }
            }
        }
        Ok((worst < 1e-10, format!("max rel diff {worst:.1e}")))
    })
}

pub fn arithmetic_constants() -> CheckOutcome {
    run("11", "Euler product stability and Hasse bound", || {
        let o = order(1, 1);
        let a3 = euler_product_a(o, 1_000)?;
        let a4 = euler_product_a(o, 10_000)?;
        let mut curve = EllipticCurveData::default_curve();
        curve.compute_ap_table(10_000)?;
        let hasse = curve.ap_table.iter().all(|(&p, &a)| (a * a) as u64 <= 4 * p);
        let r = rel(a3, a4);
        Ok((r < 1e-3 && hasse, format!("A(0) {a4:.6}, cutoff change {r:.1e}, {} a_p within Hasse", curve.ap_table.len())))
    })
}

pub fn convergence_diagnostics() -> CheckOutcome {
    run("12", "node doubling", || {
        let o = order(1, 2);
        let g32 = gamma_coefficient(Family::Symplectic, o, GammaConfig { nodes: 32, ..Default::default() })?.value;
        let g64 = gamma_coefficient(Family::Symplectic, o, GammaConfig { nodes: 64, ..Default::default() })?.value;
        let dg = rel(g32, g64);
        let grp = group(Family::Symplectic, 3);
        let o2 = order(2, 1);
        let m = min_theta_grid(grp, o2);
        let e1 = mom_exact(grp, o2, m, ExactOptions::default())?;
        let e2 = mom_exact(grp, o2, 2 * m, ExactOptions::default())?;
        let de = rel(e1, e2);
        let v = VPoint::on_circle(0.25, &[0.4, 2.2])?;
        let l = ConfigurationVector::new(order(1, 1), vec![0])?;
        let base = OscillatoryQuadratureConfig::default();
        let fine = OscillatoryQuadratureConfig { t_nodes: 2 * base.t_nodes, ..base.clone() };
        let p1 = psi_integral(&v, order(1, 1), &l, Family::Symplectic, &base)?.value;
        let p2 = psi_integral(&v, order(1, 1), &l, Family::Symplectic, &fine)?.value;
        let dp = (p1 - p2).norm() / p2.norm();
        Ok((dg < 1e-6 && de < 1e-8 && dp < 1e-6, format!("contour {dg:.0e}, theta grid {de:.0e}, t-quadrature {dp:.0e}")))
    })
}

/// Runs the whole matrix. Quick mode uses fewer Monte Carlo seeds.
pub fn run_suite(mode: SuiteMode, mut progress: impl FnMut(&CheckOutcome)) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let mut push = |c: CheckOutcome| {
        progress(&c);
        out.push(c);
    };
    push(anchor_so_linear());
    push(oracle_equivalence());
    push(weyl_closed_forms());
    push(zero_summands());
    match exact_cache() {
        Ok(cache) => {
            push(polynomiality(&cache));
            push(gamma_cross_validation(&cache));
        }
        Err(e) => {
            for (id, name) in [("5", "polynomial of the stated degree"), ("6", "gamma vs finite-difference leading coefficient")] {
                push(CheckOutcome { id: id.into(), name: name.into(), passed: false, known_defect: false, detail: format!("error: {e}"), seconds: 0.0 });
            }
        }
    }
    push(psi_closed_form_as_stated());
    push(psi_closed_form_corrected());
    push(monte_carlo_consistency(if mode == SuiteMode::Quick { 2 } else { 20 }));
    push(combinatorial_identity());
    push(kernel_substitution());
    push(arithmetic_constants());
    push(convergence_diagnostics());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn surviving_counts_agree_between_enumerations() {
        // (2kβ)!/((2β)!)^k · 2^{2kβ}
        assert_eq!(surviving_assignments(1, 1), 4);
        assert_eq!(surviving_assignments(2, 1), 6 * 16);
        assert_eq!(surviving_assignments(3, 3), 17_153_136 * (1 << 18));
    }
}
