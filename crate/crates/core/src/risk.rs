//! Obstacle-level risk functions and the Beta sensor model.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta as BetaDensity, Continuous};

use crate::env::{Obstacle, ObstacleStatus};
use crate::error::{RcdpError, Result};
use crate::geometry::Point;

/// Finite stand-in for penalties that diverge at a mark of exactly 1.
pub const RISK_CAP: f64 = 1e9;

const MARK_EPS: f64 = 1e-9;

pub fn risk_rd(delta: f64, pi: f64) -> f64 {
    if pi >= 1.0 {
        return RISK_CAP;
    }
    (delta / (1.0 - pi)).min(RISK_CAP)
}

/// `d` is the distance from the obstacle center to the target.
pub fn risk_dt(delta: f64, pi: f64, d: f64) -> f64 {
    if pi >= 1.0 {
        return RISK_CAP;
    }
    let q = 1.0 - pi;
    (delta + (d / q).powf(-q.ln())).min(RISK_CAP)
}

pub fn risk_lu(alpha: f64, pi: f64) -> f64 {
    if pi >= 1.0 {
        return RISK_CAP;
    }
    (-alpha * (1.0 - pi).ln()).min(RISK_CAP)
}

pub fn risk_lu_bayes(delta: f64, pi: f64, alpha_max: f64, pi_adj: f64) -> f64 {
    if pi >= 1.0 {
        return RISK_CAP;
    }
    (delta - pi_adj * alpha_max * (1.0 - pi).ln()).min(RISK_CAP)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaParams {
    pub a: f64,
    pub b: f64,
}

impl BetaParams {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(RcdpError::InvalidRiskModel(format!("beta parameters must be positive, got ({a}, {b})")));
        }
        Ok(Self { a, b })
    }

    pub fn mean(&self) -> f64 {
        self.a / (self.a + self.b)
    }

    fn ln_pdf(&self, x: f64) -> f64 {
        BetaDensity::new(self.a, self.b).expect("validated parameters").ln_pdf(x)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        Beta::new(self.a, self.b).expect("validated parameters").sample(rng)
    }
}

/// Two-component Beta model for sensor marks of true and false obstacles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    pub true_density: BetaParams,
    pub false_density: BetaParams,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self::from_precision(2.0).expect("valid precision")
    }
}

impl SensorModel {
    /// Precision `l` maps to Beta(2+2l, 2) for true and Beta(2, 2+2l) for false obstacles.
    pub fn from_precision(l: f64) -> Result<Self> {
        if !(0.0..=4.0).contains(&l) {
            return Err(RcdpError::InvalidRiskModel(format!("sensor precision {l} outside [0, 4]")));
        }
        Ok(Self { true_density: BetaParams::new(2.0 + 2.0 * l, 2.0)?, false_density: BetaParams::new(2.0, 2.0 + 2.0 * l)? })
    }

    pub fn sample_mark<R: Rng + ?Sized>(&self, status: ObstacleStatus, rng: &mut R) -> f64 {
        match status {
            ObstacleStatus::True => self.true_density.sample(rng),
            ObstacleStatus::False => self.false_density.sample(rng),
        }
    }
}

pub fn sample_marks<R: Rng + ?Sized>(statuses: &[ObstacleStatus], sensor: &SensorModel, rng: &mut R) -> Vec<f64> {
    statuses.iter().map(|&s| sensor.sample_mark(s, rng)).collect()
}

/// Posterior probability of a true obstacle given its mark, combined in log-odds.
pub fn posterior_adjust(pi: f64, sensor: &SensorModel, prior: f64) -> f64 {
    let x = pi.clamp(MARK_EPS, 1.0 - MARK_EPS);
    let log_odds = sensor.true_density.ln_pdf(x) - sensor.false_density.ln_pdf(x) + (prior / (1.0 - prior)).ln();
    1.0 / (1.0 + (-log_odds).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RiskKind {
    Rd,
    Dt,
    LuFixed { alpha: f64 },
    LuDelta,
    LuBayes { alpha_max: f64, prior: Option<f64>, sensor: SensorModel },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskModel {
    pub kind: RiskKind,
    pub cap: f64,
}

impl From<RiskKind> for RiskModel {
    fn from(kind: RiskKind) -> Self {
        Self { kind, cap: RISK_CAP }
    }
}

impl RiskModel {
    pub fn rd() -> Self {
        RiskKind::Rd.into()
    }

    pub fn dt() -> Self {
        RiskKind::Dt.into()
    }

    pub fn lu(alpha: f64) -> Self {
        RiskKind::LuFixed { alpha }.into()
    }

    pub fn lu_delta() -> Self {
        RiskKind::LuDelta.into()
    }

    pub fn lu_bayes(alpha_max: f64, prior: f64, sensor: SensorModel) -> Self {
        RiskKind::LuBayes { alpha_max, prior: Some(prior), sensor }.into()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(RcdpError::InvalidRiskModel(m));
        if !(self.cap > 0.0) {
            return bad(format!("cap must be positive, got {}", self.cap));
        }
        match self.kind {
            RiskKind::LuFixed { alpha } if !(alpha > 0.0 && alpha.is_finite()) => bad(format!("alpha must be positive, got {alpha}")),
            RiskKind::LuBayes { alpha_max, prior, .. } => {
                if !(alpha_max > 0.0 && alpha_max.is_finite()) {
                    return bad(format!("alpha_max must be positive, got {alpha_max}"));
                }
                match prior {
                    Some(p) if !(p > 0.0 && p < 1.0) => bad(format!("prior must lie in (0, 1), got {p}")),
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }

    /// Fill an unset Bayesian prior; other models are returned unchanged.
    pub fn with_default_prior(mut self, prior: f64) -> Self {
        if let RiskKind::LuBayes { prior: p @ None, .. } = &mut self.kind {
            *p = Some(prior.clamp(MARK_EPS, 1.0 - MARK_EPS));
        }
        self
    }

    pub fn with_sensor(mut self, model: SensorModel) -> Self {
        if let RiskKind::LuBayes { sensor, .. } = &mut self.kind {
            *sensor = model;
        }
        self
    }

    /// Penalty for crossing obstacle `o` when planning toward `target`.
    pub fn risk(&self, o: &Obstacle, target: Point) -> Result<f64> {
        let (delta, pi) = (o.disamb_cost, o.mark);
        let value = match self.kind {
            RiskKind::Rd => risk_rd(delta, pi),
            RiskKind::Dt => {
                let d = o.center.distance(target);
                if d == 0.0 {
                    return Err(RcdpError::ObstacleAtTarget(o.id));
                }
                risk_dt(delta, pi, d)
            }
            RiskKind::LuFixed { alpha } => risk_lu(alpha, pi),
            RiskKind::LuDelta => risk_lu(delta, pi),
            RiskKind::LuBayes { alpha_max, prior, sensor } => {
                let prior = prior.unwrap_or(0.5);
                risk_lu_bayes(delta, pi, alpha_max, posterior_adjust(pi, &sensor, prior))
            }
        };
        let value = value.min(self.cap);
        if !value.is_finite() || value < 0.0 {
            return Err(RcdpError::InvalidRiskModel(format!("non-finite risk {value} for obstacle {}", o.id)));
        }
        Ok(value)
    }
}

impl FromStr for RiskModel {
    type Err = RcdpError;

    /// Grammar: `rd | dt | lu:<alpha> | lu-delta | lu-bayes:<alpha_max>`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            let a = a.ok_or_else(|| RcdpError::InvalidRiskModel(format!("`{s}` needs a numeric argument")))?;
            a.trim().parse::<f64>().map_err(|_| RcdpError::InvalidRiskModel(format!("bad number in `{s}`")))
        };
        let model = match (head.to_ascii_lowercase().as_str(), arg) {
            ("rd", None) => Self::rd(),
            ("dt", None) => Self::dt(),
            ("lu", a) => Self::lu(num(a)?),
            ("lu-delta", None) => Self::lu_delta(),
            ("lu-bayes", a) => {
                RiskKind::LuBayes { alpha_max: num(a)?, prior: None, sensor: SensorModel::default() }.into()
            }
            _ => return Err(RcdpError::InvalidRiskModel(format!("unknown risk model `{s}`"))),
        };
        model.validate()?;
        Ok(model)
    }
}

impl fmt::Display for RiskModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            RiskKind::Rd => write!(f, "rd"),
            RiskKind::Dt => write!(f, "dt"),
            RiskKind::LuFixed { alpha } => write!(f, "lu:{alpha}"),
            RiskKind::LuDelta => write!(f, "lu-delta"),
            RiskKind::LuBayes { alpha_max, .. } => write!(f, "lu-bayes:{alpha_max}"),
        }
    }
}
