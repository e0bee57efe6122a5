//! Idle labor as a forgone Pareto improvement.

use super::CheckCertificate;
use crate::control::{fbsm_solve, ControlMode, CostateMode, SolverConfig};
use crate::economy::{
    cobb_douglas, phi_map, reallocate, ControlValue, FactorAllocation, IdeationParams, NeedParams,
    ProductionParams, ShareFunction,
};
use crate::error::{check_dim, EmtError, Result};
use crate::needspace::{weighted_sum, ExperientialState};
use crate::scenario_io::{seeded_rng, ScenarioConfig};

/// A reallocation of idle factors and its one-period effect.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoImprovement {
    pub dl: f64,
    pub dk: f64,
    pub delta_y: f64,
    pub delta_u: f64,
    pub before: Vec<f64>,
    pub after: Vec<f64>,
}

/// Employs `dl` idle labor and `dk` idle capital and routes the extra output
/// through the production-to-experience map for one unit of time, on top of
/// the current state. Satisfaction is capped at the desired level.
pub fn pareto_gain(
    scenario: &ScenarioConfig,
    x: &ExperientialState,
    dl: f64,
    dk: f64,
) -> Result<ParetoImprovement> {
    check_dim(scenario.dim(), x.dim())?;
    let f = &scenario.factors;
    let moved = reallocate(f, dl, dk)?;
    let p = &scenario.production;
    let y0 = cobb_douglas(&ProductionParams {
        capital: f.capital_employed,
        labor: f.labor_employed,
        ..*p
    })?;
    let y1 = cobb_douglas(&ProductionParams {
        capital: moved.capital_employed,
        labor: moved.labor_employed,
        ..*p
    })?;
    let delta_y = (y1 - y0).max(0.0);
    let inflow = phi_map(
        x.time(),
        x.sat(),
        &scenario.needs,
        &scenario.ideation,
        &ControlValue::Scalar(delta_y),
        scenario.share,
    )?;
    let before = x.sat().to_vec();
    let after: Vec<f64> = before
        .iter()
        .zip(&inflow)
        .zip(&scenario.needs)
        .map(|((xi, r), n)| {
            if *r > 0.0 {
                (xi + r).min(n.desired.max(*xi))
            } else {
                *xi
            }
        })
        .collect();
    if let Some(i) = (0..after.len()).find(|&i| after[i] < before[i]) {
        return Err(EmtError::ContractViolation(format!(
            "reallocation lowered satisfaction of need {}",
            i + 1
        )));
    }
    let w: Vec<f64> = scenario.needs.iter().map(|n| n.weight).collect();
    let delta_u = weighted_sum(&w, &after) - weighted_sum(&w, &before);
    Ok(ParetoImprovement {
        dl,
        dk,
        delta_y,
        delta_u,
        before,
        after,
    })
}

/// Planner value before and after employing `dl` labor and `dk` capital,
/// each from a full re-solve with the output capacity of that employment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedGain {
    pub capacity_before: f64,
    pub capacity_after: f64,
    pub value_before: f64,
    pub value_after: f64,
    pub converged: bool,
}

impl ResolvedGain {
    pub fn gain(&self) -> f64 {
        self.value_after - self.value_before
    }
}

/// Cross-checks [`pareto_gain`] over the whole horizon: solves the planner
/// problem once at the current capacity and once with the idle factors
/// employed, and compares discounted utility integrals.
pub fn resolved_pareto_gain(scenario: &ScenarioConfig, dl: f64, dk: f64) -> Result<ResolvedGain> {
    let f = &scenario.factors;
    let moved = reallocate(f, dl, dk)?;
    let p = &scenario.production;
    let capacity = |k: f64, l: f64| {
        cobb_douglas(&ProductionParams {
            capital: k,
            labor: l,
            ..*p
        })
    };
    let capacity_before = capacity(f.capital_employed, f.labor_employed)?;
    let capacity_after = capacity(moved.capital_employed, moved.labor_employed)?;
    let solve = |y_max: f64| {
        let mut problem = scenario.problem();
        problem.solver.y_max = y_max;
        fbsm_solve(&problem)
    };
    let before = solve(capacity_before)?;
    let after = solve(capacity_after)?;
    Ok(ResolvedGain {
        capacity_before,
        capacity_after,
        value_before: before.utility_integral,
        value_after: after.utility_integral,
        converged: before.converged && after.converged,
    })
}

/// Whether a need can absorb extra output: unmet, unmasked, valued and
/// responsive.
fn absorbs(n: &NeedParams, xi: f64) -> bool {
    n.ethics_mask && xi < n.desired && n.weight > 0.0 && n.effectiveness > 0.0
}

/// Employs all idle labor and capital when labor is idle and some unmasked
/// need is unmet; `None` otherwise, or when the extra output cannot raise
/// utility (no capital, or no unmet need carries weight and responds to
/// output).
pub fn find_pareto_improvement(
    scenario: &ScenarioConfig,
    x: &ExperientialState,
) -> Result<Option<ParetoImprovement>> {
    check_dim(scenario.dim(), x.dim())?;
    let f = &scenario.factors;
    if !(f.labor_idle > 0.0) {
        return Ok(None);
    }
    if !scenario
        .needs
        .iter()
        .zip(x.sat())
        .any(|(n, xi)| absorbs(n, *xi))
    {
        return Ok(None);
    }
    let imp = pareto_gain(scenario, x, f.labor_idle, f.capital_idle)?;
    Ok((imp.delta_u > 0.0).then_some(imp))
}

/// Seeded family of small economies with random idle factors and states.
/// About a third have no idle labor and about a fifth have every need met.
pub fn pareto_family(seed: u64, count: usize) -> Vec<(ScenarioConfig, ExperientialState)> {
    let mut rng = seeded_rng(seed);
    (0..count)
        .map(|_| {
            let n = 1 + rng.below(6) as usize;
            let all_met = rng.bernoulli(0.2);
            let mut needs = Vec::with_capacity(n);
            let mut sat = Vec::with_capacity(n);
            for i in 0..n {
                let desired = rng.uniform(0.2, 1.0);
                let met = all_met || rng.bernoulli(0.3);
                sat.push(if met {
                    desired
                } else {
                    rng.uniform(0.0, desired)
                });
                needs.push(NeedParams {
                    label: format!("need{}", i + 1),
                    weight: rng.uniform(0.05, 1.0),
                    delta: rng.uniform(0.05, 1.0),
                    desired,
                    effectiveness: rng.uniform(0.05, 1.0),
                    error_bound: 1.0,
                    ethics_mask: !rng.bernoulli(0.2),
                    initial: 0.0,
                });
            }
            let labor = rng.uniform(0.5, 5.0);
            let capital = rng.uniform(0.5, 5.0);
            let labor_idle = if rng.bernoulli(0.35) {
                0.0
            } else {
                rng.uniform(0.1, 5.0)
            };
            let capital_idle = if rng.bernoulli(0.5) {
                0.0
            } else {
                rng.uniform(0.1, 5.0)
            };
            let production = ProductionParams {
                tfp: rng.uniform(0.5, 3.0),
                alpha: rng.uniform(0.2, 0.8),
                capital,
                labor,
            };
            let t = rng.uniform(0.0, 10.0);
            let cfg = ScenarioConfig {
                name: "family".into(),
                seed,
                sat_max: 1.0,
                production,
                ideation: IdeationParams {
                    c0: rng.uniform(0.1, 2.0),
                    lambda_decay: rng.uniform(0.0, 1.0),
                },
                solver: SolverConfig {
                    rho: 0.05,
                    horizon: 40.0,
                    steps: 2000,
                    relaxation: 0.5,
                    tol: 1e-6,
                    max_iter: 500,
                    costate_mode: CostateMode::CurrentValue,
                    control_mode: ControlMode::AllocationSimplex,
                    y_max: 1.0,
                },
                explicit_y_max: false,
                share: ShareFunction::Saturating {
                    eta: rng.uniform(0.5, 2.0),
                },
                factors: FactorAllocation {
                    labor_employed: labor,
                    labor_idle,
                    capital_employed: capital,
                    capital_idle,
                },
                needs,
                meaning_index: None,
                frontier: None,
            };
            let x = ExperientialState::new(t, sat, 1.0).expect("generated state is valid");
            (cfg, x)
        })
        .collect()
}

/// Runs [`find_pareto_improvement`] over a seeded family and checks that an
/// improvement appears exactly when labor is idle and some unmasked need is
/// unmet, with a positive gain and no satisfaction lowered.
pub fn check_pareto_family(seed: u64, count: usize) -> Result<CheckCertificate> {
    check_pareto_family_with(seed, count, find_pareto_improvement)
}

/// [`check_pareto_family`] with a substitute search routine.
pub fn check_pareto_family_with(
    seed: u64,
    count: usize,
    finder: impl Fn(&ScenarioConfig, &ExperientialState) -> Result<Option<ParetoImprovement>>,
) -> Result<CheckCertificate> {
    let mut mismatches = 0usize;
    let mut pareto_violations = 0usize;
    let mut found = 0usize;
    let mut min_gain = f64::INFINITY;
    for (cfg, x) in pareto_family(seed, count) {
        let premise = cfg.factors.labor_idle > 0.0
            && cfg
                .needs
                .iter()
                .zip(x.sat())
                .any(|(n, xi)| n.ethics_mask && *xi < n.desired);
        let got = finder(&cfg, &x)?;
        if got.is_some() != premise {
            mismatches += 1;
        }
        if let Some(imp) = got {
            found += 1;
            min_gain = min_gain.min(imp.delta_u);
            if imp.after.iter().zip(&imp.before).any(|(a, b)| a < b) || !(imp.delta_u > 0.0) {
                pareto_violations += 1;
            }
        }
    }
    let mut b = CheckCertificate::builder("pareto_unemployment", 0.0)
        .bounded("premise_mismatches", mismatches as f64)
        .bounded("pareto_violations", pareto_violations as f64)
        .info("scenarios", count as f64)
        .info("improvements", found as f64);
    if min_gain.is_finite() {
        b = b.info("min_delta_u", min_gain);
    }
    Ok(b.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_need(labor_idle: f64, x: f64) -> (ScenarioConfig, ExperientialState) {
        let (mut cfg, _) = pareto_family(1, 1).remove(0);
        cfg.needs.truncate(1);
        cfg.needs[0].ethics_mask = true;
        cfg.needs[0].desired = 0.8;
        cfg.needs[0].weight = 0.5;
        cfg.factors.labor_idle = labor_idle;
        (cfg, ExperientialState::new(1.0, vec![x], 1.0).unwrap())
    }

    #[test]
    fn idle_unit_of_labor_helps_at_every_grid_draw() {
        let (cfg, x) = one_need(1.0, 0.3);
        let imp = find_pareto_improvement(&cfg, &x).unwrap().unwrap();
        assert!(imp.dl > 0.0 && imp.dl <= 1.0);
        assert!(imp.delta_u > 0.0);
        for k in 1..=100 {
            let dl = k as f64 / 100.0;
            let g = pareto_gain(&cfg, &x, dl, 0.0).unwrap();
            assert!(g.delta_u > 0.0, "dL = {dl}");
        }
    }

    #[test]
    fn none_without_idle_labor_or_unmet_need() {
        let (cfg, x) = one_need(0.0, 0.3);
        assert_eq!(find_pareto_improvement(&cfg, &x).unwrap(), None);
        let (cfg, x) = one_need(1.0, 0.8);
        assert_eq!(find_pareto_improvement(&cfg, &x).unwrap(), None);
    }

    #[test]
    fn masked_unmet_need_does_not_count() {
        let (mut cfg, x) = one_need(1.0, 0.3);
        cfg.needs[0].ethics_mask = false;
        assert_eq!(find_pareto_improvement(&cfg, &x).unwrap(), None);
    }

    #[test]
    fn family_is_reproducible_and_passes() {
        let a = pareto_family(5, 20);
        let b = pareto_family(5, 20);
        assert_eq!(a, b);
        let c = check_pareto_family(5, 200).unwrap();
        assert!(c.passed, "{c}");
        assert!(c.witness("improvements").unwrap() > 20.0);
        assert!(c.witness("improvements").unwrap() < 180.0);
    }

    #[test]
    fn planted_finders_fail() {
        let never = check_pareto_family_with(5, 50, |_, _| Ok(None)).unwrap();
        assert!(!never.passed);
        let harmful = check_pareto_family_with(5, 50, |c, x| {
            Ok(find_pareto_improvement(c, x)?.map(|mut imp| {
                imp.after[0] = imp.before[0] - 0.1;
                imp
            }))
        })
        .unwrap();
        assert!(!harmful.passed);
    }

    #[test]
    fn overdraw_is_an_error() {
        let (cfg, x) = one_need(1.0, 0.3);
        assert!(pareto_gain(&cfg, &x, 2.0, 0.0).is_err());
    }

    #[test]
    fn resolve_agrees_in_sign() {
        let (mut cfg, x) = one_need(1.0, 0.3);
        cfg.solver.steps = 400;
        cfg.solver.horizon = 20.0;
        let r = resolved_pareto_gain(&cfg, 1.0, 0.0).unwrap();
        assert!(r.converged);
        assert!(r.capacity_after > r.capacity_before);
        assert!(r.gain() > 0.0);
        assert!(pareto_gain(&cfg, &x, 1.0, 0.0).unwrap().delta_u > 0.0);
        let none = resolved_pareto_gain(&cfg, 0.0, 0.0).unwrap();
        assert_eq!(none.gain(), 0.0);
    }
}
