//! Production, ideation-cost decay, and the staged production-to-experience
//! map Φ = A ∘ F ∘ D.

use crate::error::{check_dim, EmtError, Result};

/// Cobb-Douglas production inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductionParams {
    pub tfp: f64,
    pub alpha: f64,
    pub capital: f64,
    pub labor: f64,
}

impl ProductionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(EmtError::InvalidParameter(format!(
                "alpha outside (0,1): {}",
                self.alpha
            )));
        }
        if !(self.tfp.is_finite() && self.tfp > 0.0) {
            return Err(EmtError::InvalidParameter(format!(
                "tfp must be positive: {}",
                self.tfp
            )));
        }
        for (name, v) in [("capital", self.capital), ("labor", self.labor)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(EmtError::InvalidParameter(format!(
                    "{name} must be non-negative: {v}"
                )));
            }
        }
        Ok(())
    }
}

/// `A K^α L^(1-α)`.
pub fn cobb_douglas(p: &ProductionParams) -> Result<f64> {
    p.validate()?;
    if p.capital == 0.0 || p.labor == 0.0 {
        return Ok(0.0);
    }
    Ok(p.tfp * p.capital.powf(p.alpha) * p.labor.powf(1.0 - p.alpha))
}

/// Exponentially collapsing ideation cost `c(t) = c0 e^{-λt}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdeationParams {
    pub c0: f64,
    pub lambda_decay: f64,
}

impl IdeationParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c0.is_finite() && self.c0 > 0.0) {
            return Err(EmtError::InvalidParameter(format!(
                "c0 must be positive: {}",
                self.c0
            )));
        }
        if !(self.lambda_decay.is_finite() && self.lambda_decay >= 0.0) {
            return Err(EmtError::InvalidParameter(format!(
                "lambda_decay must be non-negative: {}",
                self.lambda_decay
            )));
        }
        Ok(())
    }
}

pub fn ideation_cost(ip: &IdeationParams, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(EmtError::InvalidInput(format!(
            "ideation cost queried at negative time {t}"
        )));
    }
    Ok(ip.c0 * (-ip.lambda_decay * t).exp())
}

/// `a(t) = 1 / (1 + c(t))`, the fraction of an output unit that reaches the
/// need it was aimed at.
pub fn alignment_efficiency(ip: &IdeationParams, t: f64) -> Result<f64> {
    Ok(1.0 / (1.0 + ideation_cost(ip, t)?))
}

/// How efficiently output turns into satisfaction over time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Efficiency {
    /// `a(t) = 1/(1 + c0 e^{-λt})`.
    Ideation(IdeationParams),
    /// `a(t) = 1`: the ideal, frictionless mapping.
    Perfect,
}

impl Efficiency {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Efficiency::Ideation(ip) => 1.0 / (1.0 + ip.c0 * (-ip.lambda_decay * t).exp()),
            Efficiency::Perfect => 1.0,
        }
    }
}

/// Per-need constants.
#[derive(Debug, Clone, PartialEq)]
pub struct NeedParams {
    pub label: String,
    pub weight: f64,
    /// Satisfaction decay rate δ_i.
    pub delta: f64,
    pub desired: f64,
    /// Satisfaction inflow per unit of (shared) output, φ_i.
    pub effectiveness: f64,
    /// Error-envelope constant k_i.
    pub error_bound: f64,
    /// Ethics mask m_i; masked needs never receive inflow.
    pub ethics_mask: bool,
    /// Satisfaction at t = 0.
    pub initial: f64,
}

impl NeedParams {
    pub fn validate(&self, sat_max: f64) -> std::result::Result<(), Vec<String>> {
        let mut issues = Vec::new();
        let mut nonneg = |name: &str, v: f64| {
            if !(v.is_finite() && v >= 0.0) {
                issues.push(format!("{name} must be finite and non-negative, got {v}"));
            }
        };
        nonneg("weight", self.weight);
        nonneg("delta", self.delta);
        nonneg("effectiveness", self.effectiveness);
        nonneg("error_bound", self.error_bound);
        nonneg("desired", self.desired);
        nonneg("initial", self.initial);
        if self.desired > sat_max {
            issues.push(format!(
                "desired {} exceeds sat_max {sat_max}",
                self.desired
            ));
        }
        if self.initial > sat_max {
            issues.push(format!(
                "initial {} exceeds sat_max {sat_max}",
                self.initial
            ));
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }
}

/// Employed and idle factor stocks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorAllocation {
    pub labor_employed: f64,
    pub labor_idle: f64,
    pub capital_employed: f64,
    pub capital_idle: f64,
}

impl FactorAllocation {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("labor_employed", self.labor_employed),
            ("labor_idle", self.labor_idle),
            ("capital_employed", self.capital_employed),
            ("capital_idle", self.capital_idle),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(EmtError::InvalidInput(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn total_labor(&self) -> f64 {
        self.labor_employed + self.labor_idle
    }

    pub fn total_capital(&self) -> f64 {
        self.capital_employed + self.capital_idle
    }
}

/// Moves `dl` idle labor and `dk` idle capital into employment.
pub fn reallocate(f: &FactorAllocation, dl: f64, dk: f64) -> Result<FactorAllocation> {
    f.validate()?;
    if !(dl >= 0.0 && dl <= f.labor_idle) {
        return Err(EmtError::InvalidInput(format!(
            "labor draw {dl} outside [0, {}]",
            f.labor_idle
        )));
    }
    if !(dk >= 0.0 && dk <= f.capital_idle) {
        return Err(EmtError::InvalidInput(format!(
            "capital draw {dk} outside [0, {}]",
            f.capital_idle
        )));
    }
    // Drawing the whole pool sets idle to exactly zero; the employed side may
    // round, so totals are conserved to one ulp.
    let labor_idle = if dl == f.labor_idle {
        0.0
    } else {
        f.labor_idle - dl
    };
    let capital_idle = if dk == f.capital_idle {
        0.0
    } else {
        f.capital_idle - dk
    };
    Ok(FactorAllocation {
        labor_employed: f.labor_employed + dl,
        labor_idle,
        capital_employed: f.capital_employed + dk,
        capital_idle,
    })
}

/// The fraction of its potential that a need realizes from the output routed
/// to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShareFunction {
    /// `s(y) = 1 - e^{-ηy}`; smooth and strictly concave.
    Saturating { eta: f64 },
    /// `s(y) = min(ηy, 1)`; piecewise linear, kink at `y = 1/η`.
    Linear { eta: f64 },
}

impl ShareFunction {
    pub fn eta(&self) -> f64 {
        match *self {
            ShareFunction::Saturating { eta } | ShareFunction::Linear { eta } => eta,
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        match *self {
            ShareFunction::Saturating { eta } => -(-eta * y).exp_m1(),
            ShareFunction::Linear { eta } => (eta * y).min(1.0),
        }
    }

    /// Derivative in `y`. For the linear share this is the right derivative
    /// at the kink.
    pub fn derivative(&self, y: f64) -> f64 {
        match *self {
            ShareFunction::Saturating { eta } => eta * (-eta * y).exp(),
            ShareFunction::Linear { eta } => {
                if eta * y < 1.0 {
                    eta
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self, ShareFunction::Saturating { .. })
    }
}

/// A control value at one instant.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlValue {
    /// Total productive effort `Y`, split by the filter stage's priorities.
    Scalar(f64),
    /// Output routed to each need, `y_i`.
    Allocation(Vec<f64>),
}

impl ControlValue {
    pub fn total(&self) -> f64 {
        match self {
            ControlValue::Scalar(y) => *y,
            ControlValue::Allocation(v) => v.iter().sum(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        match self {
            ControlValue::Scalar(y) => std::slice::from_ref(y),
            ControlValue::Allocation(v) => v,
        }
    }
}

/// D stage: unmet demand `max(0, desired_i - x_i)`.
pub fn demand_gaps(x: &[f64], needs: &[NeedParams]) -> Vec<f64> {
    x.iter()
        .zip(needs)
        .map(|(xi, n)| (n.desired - xi).max(0.0))
        .collect()
}

/// Output of the F stage.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredDemand {
    /// Gap surviving the ethics mask, `gap_i · m_i`.
    pub passed: Vec<f64>,
    /// Indices of passing needs, highest weight first (ties by index).
    pub priority: Vec<usize>,
    /// Weight-proportional split of a scalar output across passing needs.
    pub split: Vec<f64>,
}

impl FilteredDemand {
    pub fn is_open(&self, i: usize) -> bool {
        self.passed[i] > 0.0
    }
}

/// F stage: ethics mask and weight priority.
pub fn filter_demand(gaps: &[f64], needs: &[NeedParams]) -> FilteredDemand {
    let passed: Vec<f64> = gaps
        .iter()
        .zip(needs)
        .map(|(g, n)| if n.ethics_mask { *g } else { 0.0 })
        .collect();
    let mut priority: Vec<usize> = (0..passed.len()).filter(|&i| passed[i] > 0.0).collect();
    priority.sort_by(|&a, &b| needs[b].weight.total_cmp(&needs[a].weight).then(a.cmp(&b)));

    let wsum: f64 = priority.iter().map(|&i| needs[i].weight).sum();
    let mut split = vec![0.0; passed.len()];
    if !priority.is_empty() {
        for &i in &priority {
            split[i] = if wsum > 0.0 {
                needs[i].weight / wsum
            } else {
                1.0 / priority.len() as f64
            };
        }
    }
    FilteredDemand {
        passed,
        priority,
        split,
    }
}

/// Output share reaching need `i` under a control value, before the
/// efficiency and effectiveness factors.
pub(crate) fn routed_output(ctrl: &ControlValue, filtered: &FilteredDemand, i: usize) -> f64 {
    match ctrl {
        ControlValue::Scalar(y) => filtered.split[i] * y,
        ControlValue::Allocation(v) => v[i],
    }
}

fn check_control(ctrl: &ControlValue, n: usize) -> Result<()> {
    match ctrl {
        ControlValue::Scalar(y) => {
            if !(y.is_finite() && *y >= 0.0) {
                return Err(EmtError::InvalidInput(format!(
                    "output must be non-negative, got {y}"
                )));
            }
        }
        ControlValue::Allocation(v) => {
            check_dim(n, v.len())?;
            if let Some(y) = v.iter().find(|y| !(y.is_finite() && **y >= 0.0)) {
                return Err(EmtError::InvalidInput(format!(
                    "allocation entries must be non-negative, got {y}"
                )));
            }
        }
    }
    Ok(())
}

/// A stage: inflow `a · φ_i · s(y_i)` for every need that passed D and F.
pub fn phi_with_efficiency(
    efficiency: f64,
    x: &[f64],
    needs: &[NeedParams],
    ctrl: &ControlValue,
    share: ShareFunction,
) -> Result<Vec<f64>> {
    check_dim(needs.len(), x.len())?;
    check_control(ctrl, needs.len())?;
    let filtered = filter_demand(&demand_gaps(x, needs), needs);
    Ok(inflow_unchecked(efficiency, needs, ctrl, share, &filtered))
}

pub(crate) fn inflow_unchecked(
    efficiency: f64,
    needs: &[NeedParams],
    ctrl: &ControlValue,
    share: ShareFunction,
    filtered: &FilteredDemand,
) -> Vec<f64> {
    (0..needs.len())
        .map(|i| {
            if filtered.is_open(i) {
                efficiency * needs[i].effectiveness * share.value(routed_output(ctrl, filtered, i))
            } else {
                0.0
            }
        })
        .collect()
}

/// Satisfaction inflow rates Φ(Y) at time `t`.
pub fn phi_map(
    t: f64,
    x: &[f64],
    needs: &[NeedParams],
    ip: &IdeationParams,
    ctrl: &ControlValue,
    share: ShareFunction,
) -> Result<Vec<f64>> {
    let a = alignment_efficiency(ip, t)?;
    phi_with_efficiency(a, x, needs, ctrl, share)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn need(weight: f64, desired: f64) -> NeedParams {
        NeedParams {
            label: String::new(),
            weight,
            delta: 0.1,
            desired,
            effectiveness: 1.0,
            error_bound: 1.0,
            ethics_mask: true,
            initial: 0.0,
        }
    }

    fn prod(tfp: f64, capital: f64, labor: f64, alpha: f64) -> ProductionParams {
        ProductionParams {
            tfp,
            alpha,
            capital,
            labor,
        }
    }

    #[test]
    fn cobb_douglas_examples() {
        assert_eq!(cobb_douglas(&prod(1.0, 1.0, 1.0, 0.5)).unwrap(), 1.0);
        assert_eq!(cobb_douglas(&prod(2.0, 4.0, 1.0, 0.5)).unwrap(), 4.0);
        assert_eq!(cobb_douglas(&prod(2.0, 4.0, 0.0, 0.5)).unwrap(), 0.0);
        let err = cobb_douglas(&prod(1.0, 1.0, 1.0, 1.5)).unwrap_err();
        assert!(err.to_string().contains("alpha outside (0,1)"));
    }

    #[test]
    fn ideation_examples() {
        let flat = IdeationParams {
            c0: 1.0,
            lambda_decay: 0.0,
        };
        assert_eq!(ideation_cost(&flat, 0.0).unwrap(), 1.0);
        assert_eq!(ideation_cost(&flat, 37.0).unwrap(), 1.0);
        let half = IdeationParams {
            c0: 2.0,
            lambda_decay: std::f64::consts::LN_2,
        };
        assert!((ideation_cost(&half, 1.0).unwrap() - 1.0).abs() < 1e-15);
        let slow = IdeationParams {
            c0: 1.0,
            lambda_decay: 0.1,
        };
        assert!((ideation_cost(&slow, 10.0).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!(ideation_cost(&slow, -1.0).is_err());
    }

    #[test]
    fn efficiency_examples() {
        let ip = IdeationParams {
            c0: 1.0,
            lambda_decay: 0.3,
        };
        assert_eq!(alignment_efficiency(&ip, 0.0).unwrap(), 0.5);
        let mut prev = 0.0;
        for k in 0..1000 {
            let t = k as f64 * 0.1;
            let a = alignment_efficiency(&ip, t).unwrap();
            assert!(a > prev && a <= 1.0);
            // shortfall envelope, evaluated independently of the code path
            assert!(1.0 - a <= ip.c0 * (-ip.lambda_decay * t).exp() + f64::EPSILON);
            prev = a;
        }
        assert!(1.0 - alignment_efficiency(&ip, 200.0).unwrap() < 1e-20);
    }

    #[test]
    fn phi_zero_gap_means_zero_inflow() {
        let needs = vec![need(1.0, 0.5), need(2.0, 0.3)];
        let ip = IdeationParams {
            c0: 1.0,
            lambda_decay: 0.0,
        };
        let inflow = phi_map(
            0.0,
            &[0.5, 0.9],
            &needs,
            &ip,
            &ControlValue::Allocation(vec![3.0, 3.0]),
            ShareFunction::Saturating { eta: 1.0 },
        )
        .unwrap();
        assert_eq!(inflow, vec![0.0, 0.0]);
    }

    #[test]
    fn phi_single_need_composition() {
        let needs = vec![need(1.0, 1.0)];
        let ip = IdeationParams {
            c0: 1.0,
            lambda_decay: 0.0,
        };
        let inflow = phi_map(
            0.0,
            &[0.2],
            &needs,
            &ip,
            &ControlValue::Scalar(2.0),
            ShareFunction::Saturating { eta: 1.0 },
        )
        .unwrap();
        assert!((inflow[0] - 0.432_332_358_381_693_6).abs() < 1e-15);
    }

    #[test]
    fn phi_symmetric_split_and_mask() {
        let mut needs = vec![need(1.0, 1.0), need(1.0, 1.0)];
        let share = ShareFunction::Saturating { eta: 1.0 };
        let out = phi_with_efficiency(1.0, &[0.1, 0.1], &needs, &ControlValue::Scalar(3.0), share)
            .unwrap();
        assert_eq!(out[0], out[1]);
        assert!(out[0] > 0.0);

        needs[1].ethics_mask = false;
        let out = phi_with_efficiency(
            1.0,
            &[0.1, 0.1],
            &needs,
            &ControlValue::Allocation(vec![1.0, 1.0]),
            share,
        )
        .unwrap();
        assert_eq!(out[1], 0.0);

        needs[0].ethics_mask = false;
        let out = phi_with_efficiency(1.0, &[0.1, 0.1], &needs, &ControlValue::Scalar(3.0), share)
            .unwrap();
        assert_eq!(out, vec![0.0, 0.0]);

        assert!(
            phi_with_efficiency(1.0, &[0.1, 0.1], &needs, &ControlValue::Scalar(-1.0), share)
                .is_err()
        );
    }

    #[test]
    fn filter_orders_by_weight() {
        let needs = vec![
            need(0.2, 1.0),
            need(0.9, 1.0),
            need(0.5, 0.0),
            need(0.9, 1.0),
        ];
        let f = filter_demand(&demand_gaps(&[0.0; 4], &needs), &needs);
        assert_eq!(f.priority, vec![1, 3, 0]);
        assert_eq!(f.split[2], 0.0);
        assert!((f.split.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reallocate_examples() {
        let f = FactorAllocation {
            labor_employed: 3.0,
            labor_idle: 1.5,
            capital_employed: 2.0,
            capital_idle: 0.25,
        };
        let full = reallocate(&f, 1.5, 0.0).unwrap();
        assert_eq!(full.labor_idle, 0.0);
        assert_eq!(reallocate(&f, 0.0, 0.0).unwrap(), f);
        assert!(reallocate(&f, 1.6, 0.0).is_err());
        assert!(reallocate(&f, 0.0, 0.3).is_err());
        assert!(reallocate(&f, -0.1, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn cobb_douglas_degree_one(
            tfp in 0.1..10.0f64, k in 0.01..100.0f64, l in 0.01..100.0f64,
            alpha in 0.01..0.99f64, c in 0.01..50.0f64,
        ) {
            let base = cobb_douglas(&prod(tfp, k, l, alpha)).unwrap();
            let scaled = cobb_douglas(&prod(tfp, c * k, c * l, alpha)).unwrap();
            prop_assert!((scaled - c * base).abs() <= 1e-12 * (c * base).abs());
        }

        #[test]
        fn cobb_douglas_increasing_in_labor(
            k in 0.01..100.0f64, l in 0.0..100.0f64, dl in 1e-6..10.0f64, alpha in 0.01..0.99f64,
        ) {
            let lo = cobb_douglas(&prod(1.0, k, l, alpha)).unwrap();
            let hi = cobb_douglas(&prod(1.0, k, l + dl, alpha)).unwrap();
            prop_assert!(hi > lo);
        }

        #[test]
        fn reallocation_conserves_totals(
            le in 0.0..10.0f64, li in 0.0..10.0f64, ke in 0.0..10.0f64, ki in 0.0..10.0f64,
            fl in 0.0..=1.0f64, fk in 0.0..=1.0f64,
        ) {
            let f = FactorAllocation { labor_employed: le, labor_idle: li, capital_employed: ke, capital_idle: ki };
            let g = reallocate(&f, fl * li, fk * ki).unwrap();
            prop_assert!((g.total_labor() - f.total_labor()).abs() <= 1e-14 * f.total_labor().max(1.0));
            prop_assert!((g.total_capital() - f.total_capital()).abs() <= 1e-14 * f.total_capital().max(1.0));
            prop_assert!(g.labor_idle >= 0.0 && g.capital_idle >= 0.0);
        }

        #[test]
        fn phi_nonnegative_and_continuous_in_output(
            x in proptest::collection::vec(0.0..=1.0f64, 3),
            y in 0.0..20.0f64,
            mask in proptest::collection::vec(any::<bool>(), 3),
        ) {
            let needs: Vec<NeedParams> = mask.iter().map(|&m| NeedParams { ethics_mask: m, ..need(1.0, 0.8) }).collect();
            let share = ShareFunction::Saturating { eta: 1.0 };
            let a = phi_with_efficiency(0.7, &x, &needs, &ControlValue::Scalar(y), share).unwrap();
            let b = phi_with_efficiency(0.7, &x, &needs, &ControlValue::Scalar(y + 1e-9), share).unwrap();
            for i in 0..3 {
                prop_assert!(a[i] >= 0.0);
                prop_assert!((a[i] - b[i]).abs() < 1e-8);
                if !mask[i] || x[i] >= 0.8 {
                    prop_assert_eq!(a[i], 0.0);
                }
            }
        }
    }
}
