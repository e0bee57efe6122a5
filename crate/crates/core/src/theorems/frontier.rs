//! Growth of the need space: scheduled dimension additions and discovery
//! driven by human labor.

use super::CheckCertificate;
use crate::error::{EmtError, Result};
use crate::needspace::{extend_dimensions, utility, ExperientialState, WeightVector, TOL_ABS};

/// A new need dimension entering at `time` with its attainable level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionAdd {
    pub time: f64,
    pub weight: f64,
    pub attainable: f64,
}

/// Active dimension count and the accumulated measure of needs discovered
/// beyond what production already addresses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierState {
    pub active_dims: usize,
    pub beyond_measure: f64,
    /// σ in the linear discovery rate `σ·L_h`.
    pub discovery_slope: f64,
}

/// Result of one discovery step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscoveryStep {
    pub next: FrontierState,
    pub discovered: f64,
    pub new_dims: usize,
    pub delta_u: f64,
}

impl FrontierState {
    pub fn new(active_dims: usize, discovery_slope: f64) -> Result<Self> {
        if !(discovery_slope.is_finite() && discovery_slope >= 0.0) {
            return Err(EmtError::InvalidParameter(format!(
                "discovery slope must be non-negative, got {discovery_slope}"
            )));
        }
        Ok(Self {
            active_dims,
            beyond_measure: 0.0,
            discovery_slope,
        })
    }

    /// Applies `L_h` units of human labor for `dt`. The measure grows by
    /// `σ·L_h·dt`; every whole unit crossed becomes a new dimension, and the
    /// partial unit in progress counts pro rata toward utility.
    pub fn discover(
        &self,
        human_labor: f64,
        new_weight: f64,
        attainable: f64,
        dt: f64,
    ) -> Result<DiscoveryStep> {
        if !(self.discovery_slope.is_finite() && self.discovery_slope >= 0.0) {
            return Err(EmtError::InvalidParameter(format!(
                "discovery slope must be non-negative, got {}",
                self.discovery_slope
            )));
        }
        for (name, v) in [
            ("human labor", human_labor),
            ("new weight", new_weight),
            ("attainable", attainable),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(EmtError::InvalidParameter(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(EmtError::InvalidParameter(format!(
                "dt must be positive, got {dt}"
            )));
        }
        let discovered = self.discovery_slope * human_labor * dt;
        let measure = self.beyond_measure + discovered;
        let new_dims = (measure.floor() - self.beyond_measure.floor()) as usize;
        Ok(DiscoveryStep {
            next: FrontierState {
                active_dims: self.active_dims + new_dims,
                beyond_measure: measure,
                discovery_slope: self.discovery_slope,
            },
            discovered,
            new_dims,
            delta_u: new_weight * attainable * discovered,
        })
    }
}

/// Utility supremum after each add event, starting from `base`. Entry 0 is
/// the base supremum; entry `j` follows the `j`-th add.
pub fn frontier_supremum_series(
    base_levels: &ExperientialState,
    base_weights: &WeightVector,
    adds: &[DimensionAdd],
) -> Result<Vec<f64>> {
    let mut x = base_levels.clone();
    let mut w = base_weights.clone();
    let mut out = vec![utility(&w, &x)?];
    for a in adds {
        let (nx, nw) = extend_dimensions(&x, &w, &[(a.weight, a.attainable)])?;
        x = nx;
        w = nw;
        out.push(utility(&w, &x)?);
    }
    Ok(out)
}

/// The supremum rises by exactly `w·attainable` at each add and strictly at
/// every add with positive weight and attainable level.
pub fn check_frontier_expansion(
    base_levels: &ExperientialState,
    base_weights: &WeightVector,
    adds: &[DimensionAdd],
) -> Result<CheckCertificate> {
    let sup = frontier_supremum_series(base_levels, base_weights, adds)?;
    Ok(frontier_certificate(adds, &sup))
}

/// Judges a supremum series (base value first) against its add events.
pub fn frontier_certificate(adds: &[DimensionAdd], sup: &[f64]) -> CheckCertificate {
    let mut b = CheckCertificate::builder("frontier_expansion", TOL_ABS);
    if adds.is_empty() {
        return b.note("no dimension additions scheduled; vacuous").finish();
    }
    if sup.len() != adds.len() + 1 {
        return b.require("series_length", false).finish();
    }
    let mut accounting = 0.0_f64;
    let mut min_increment = f64::INFINITY;
    let mut non_strict = 0usize;
    let mut flat = Vec::new();
    for (j, a) in adds.iter().enumerate() {
        let inc = sup[j + 1] - sup[j];
        accounting = accounting.max((inc - a.weight * a.attainable).abs());
        if a.weight > 0.0 && a.attainable > 0.0 {
            min_increment = min_increment.min(inc);
            if !(inc > 0.0) {
                non_strict += 1;
            }
        } else {
            flat.push(j + 1);
            if inc != 0.0 {
                non_strict += 1;
            }
        }
    }
    b = b
        .bounded("accounting_error", accounting)
        .limited("non_strict_events", non_strict as f64, 0.0)
        .info("events", adds.len() as f64)
        .info("final_supremum", sup[sup.len() - 1]);
    if min_increment.is_finite() {
        b = b.info("min_increment", min_increment);
    }
    if !flat.is_empty() {
        b = b.note(format!(
            "non-expanding events (zero weight or attainable level): {flat:?}"
        ));
    }
    b.finish()
}

/// Discovery from human labor must raise utility exactly when labor, slope
/// and weight are all positive, and leave it unchanged without labor.
pub fn check_full_employment_value(
    frontier: &FrontierState,
    human_labor: f64,
    new_weight: f64,
    attainable: f64,
    dt: f64,
) -> Result<CheckCertificate> {
    let step = frontier.discover(human_labor, new_weight, attainable, dt)?;
    Ok(full_employment_certificate(
        frontier,
        human_labor,
        new_weight,
        attainable,
        dt,
        &step,
    ))
}

/// Judges an observed discovery step against the labor that produced it.
pub fn full_employment_certificate(
    frontier: &FrontierState,
    human_labor: f64,
    new_weight: f64,
    attainable: f64,
    dt: f64,
    step: &DiscoveryStep,
) -> CheckCertificate {
    let expected = new_weight * attainable * frontier.discovery_slope * human_labor * dt;
    let productive =
        human_labor > 0.0 && frontier.discovery_slope > 0.0 && new_weight > 0.0 && attainable > 0.0;
    let mut b = CheckCertificate::builder("full_employment", TOL_ABS)
        .info("delta_u", step.delta_u)
        .info("new_dims", step.new_dims as f64)
        .bounded("accounting_error", (step.delta_u - expected).abs())
        .require(
            "measure_non_decreasing",
            step.next.beyond_measure >= frontier.beyond_measure,
        );
    if productive {
        b = b.require("positive_gain", step.delta_u > 0.0);
    }
    if human_labor == 0.0 {
        b = b.require("zero_gain_without_labor", step.delta_u == 0.0);
    }
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> (ExperientialState, WeightVector) {
        (
            ExperientialState::new(0.0, vec![0.4, 0.9], 1.0).unwrap(),
            WeightVector::new(vec![0.5, 0.5]).unwrap(),
        )
    }

    fn add(w: f64, a: f64) -> DimensionAdd {
        DimensionAdd {
            time: 1.0,
            weight: w,
            attainable: a,
        }
    }

    #[test]
    fn one_add_raises_supremum_by_product() {
        let (x, w) = base();
        let s = frontier_supremum_series(&x, &w, &[add(0.1, 0.5)]).unwrap();
        assert!((s[1] - s[0] - 0.05).abs() < 1e-15);
        assert!(
            check_frontier_expansion(&x, &w, &[add(0.1, 0.5)])
                .unwrap()
                .passed
        );
    }

    #[test]
    fn three_adds_three_increases() {
        let (x, w) = base();
        let adds = [add(0.1, 0.5), add(0.2, 0.25), add(0.05, 1.0)];
        let s = frontier_supremum_series(&x, &w, &adds).unwrap();
        assert!(s.windows(2).all(|p| p[1] > p[0]));
        let c = check_frontier_expansion(&x, &w, &adds).unwrap();
        assert!(c.passed);
        assert_eq!(
            c.witness("min_increment"),
            Some(
                s.windows(2)
                    .map(|p| p[1] - p[0])
                    .fold(f64::INFINITY, f64::min)
            )
        );
    }

    #[test]
    fn zero_weight_add_is_flagged_not_failed() {
        let (x, w) = base();
        let c = check_frontier_expansion(&x, &w, &[add(0.0, 0.5)]).unwrap();
        assert!(c.passed);
        assert!(c.notes[0].contains("non-expanding"));
    }

    #[test]
    fn empty_schedule_is_vacuous() {
        let (x, w) = base();
        let c = check_frontier_expansion(&x, &w, &[]).unwrap();
        assert!(c.passed);
        assert!(c.notes[0].contains("vacuous"));
    }

    #[test]
    fn discovery_examples() {
        let f = FrontierState::new(3, 1.0).unwrap();
        let s = f.discover(1.0, 0.1, 0.5, 1.0).unwrap();
        assert!((s.delta_u - 0.05).abs() < 1e-15);
        assert_eq!(s.new_dims, 1);
        assert_eq!(s.next.active_dims, 4);
        let z = f.discover(0.0, 0.1, 0.5, 1.0).unwrap();
        assert_eq!(z.delta_u, 0.0);
        assert_eq!(z.next, f);
        assert!(FrontierState::new(0, -1.0).is_err());
        assert!(f.discover(1.0, 0.1, 0.5, 0.0).is_err());
    }

    #[test]
    fn partial_units_accumulate_into_dimensions() {
        let mut f = FrontierState::new(0, 0.25).unwrap();
        let mut dims = Vec::new();
        for _ in 0..12 {
            f = f.discover(1.0, 0.1, 0.5, 1.0).unwrap().next;
            dims.push(f.active_dims);
        }
        assert!(dims.windows(2).all(|p| p[1] >= p[0]));
        assert_eq!(f.active_dims, 3);
    }

    #[test]
    fn full_employment_check() {
        let f = FrontierState::new(0, 1.0).unwrap();
        assert!(
            check_full_employment_value(&f, 0.0, 0.1, 0.5, 1.0)
                .unwrap()
                .passed
        );
        assert!(
            check_full_employment_value(&f, 2.0, 0.1, 0.5, 1.0)
                .unwrap()
                .passed
        );
        let flat = FrontierState::new(0, 0.0).unwrap();
        let c = check_full_employment_value(&flat, 2.0, 0.1, 0.5, 1.0).unwrap();
        assert!(c.passed);
        assert_eq!(c.witness("delta_u"), Some(0.0));
    }

    #[test]
    fn planted_failures() {
        let adds = [add(0.1, 0.5), add(0.2, 0.5)];
        assert!(!frontier_certificate(&adds, &[1.0, 1.05, 1.05]).passed);
        assert!(!frontier_certificate(&adds, &[1.0, 1.06, 1.16]).passed);
        let f = FrontierState::new(0, 1.0).unwrap();
        let mut step = f.discover(1.0, 0.1, 0.5, 1.0).unwrap();
        step.delta_u = 0.0;
        assert!(!full_employment_certificate(&f, 1.0, 0.1, 0.5, 1.0, &step).passed);
        let mut idle = f.discover(0.0, 0.1, 0.5, 1.0).unwrap();
        idle.delta_u = 0.01;
        assert!(!full_employment_certificate(&f, 0.0, 0.1, 0.5, 1.0, &idle).passed);
    }

    #[test]
    fn gain_strictly_increasing_in_labor() {
        let f = FrontierState::new(0, 0.7).unwrap();
        let gains: Vec<f64> = (0..10)
            .map(|k| f.discover(k as f64 * 0.5, 0.2, 0.8, 1.0).unwrap().delta_u)
            .collect();
        assert_eq!(gains[0], 0.0);
        assert!(gains.windows(2).all(|p| p[1] > p[0]));
    }
}
