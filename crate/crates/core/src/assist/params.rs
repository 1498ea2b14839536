use serde::{Deserialize, Serialize};

use crate::scalar::Real;

use super::AssistError;

/// Barrier, QP and engagement constants for the CBF filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct CbfParams<T> {
    /// Nominal clearance height of the flat barrier.
    pub z0: T,
    /// Funnel depth.
    pub zeta: T,
    /// Funnel width.
    pub sigma: T,
    /// Safety margin above the surface.
    pub eps: T,
    pub gamma: T,
    pub beta: T,
    /// Per-axis speed limit.
    pub v_max: T,
    /// Engagement radius around the target.
    pub eps_engage: T,
    pub breakaway_speed: T,
    pub orient_weight: T,
    pub dt: T,
    /// Post-grasp handover ramp length in seconds.
    pub handover_duration: T,
    /// Lift a step that ends below the curved surface back onto it.
    pub sampled_data_guard: bool,
}

impl<T: Real> Default for CbfParams<T> {
    fn default() -> Self {
        Self {
            z0: T::lit(0.10),
            zeta: T::lit(0.02),
            sigma: T::lit(0.02),
            eps: T::lit(0.02),
            gamma: T::lit(100.0),
            beta: T::lit(20.0),
            v_max: T::lit(0.2),
            eps_engage: T::lit(0.3),
            breakaway_speed: T::lit(0.005),
            orient_weight: T::lit(0.1),
            dt: T::lit(0.01),
            handover_duration: T::lit(1.0),
            sampled_data_guard: true,
        }
    }
}

impl<T: Real> CbfParams<T> {
    pub fn validate(&self) -> Result<(), AssistError> {
        let positive = [
            ("z0", self.z0),
            ("zeta", self.zeta),
            ("sigma", self.sigma),
            ("eps", self.eps),
            ("gamma", self.gamma),
            ("beta", self.beta),
            ("v_max", self.v_max),
            ("eps_engage", self.eps_engage),
            ("breakaway_speed", self.breakaway_speed),
            ("orient_weight", self.orient_weight),
            ("dt", self.dt),
            ("handover_duration", self.handover_duration),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite() {
                return Err(AssistError::InvalidParams(format!("{name} must be positive and finite")));
            }
        }
        if self.zeta > self.z0 {
            return Err(AssistError::InvalidParams("zeta must not exceed z0".into()));
        }
        Ok(())
    }

    /// Extended class-K function `γh + βh³`.
    #[inline]
    pub fn kappa(&self, h: T) -> T {
        self.gamma * h + self.beta * h * h * h
    }
}

/// Sigmoid arbitration constants for linear blending.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct LbParams<T> {
    /// Distance scale.
    pub h: T,
    /// Steepness.
    pub c: T,
    /// Transition center as a fraction of `h`.
    pub r: T,
}

impl<T: Real> Default for LbParams<T> {
    fn default() -> Self {
        Self {
            h: T::lit(0.6),
            c: T::lit(10.0),
            r: T::lit(0.4),
        }
    }
}

impl<T: Real> LbParams<T> {
    pub fn validate(&self) -> Result<(), AssistError> {
        if !(self.h > T::zero()) || !(self.c > T::zero()) {
            return Err(AssistError::InvalidParams("lb.h and lb.c must be positive".into()));
        }
        if !(self.r > T::zero() && self.r < T::one()) {
            return Err(AssistError::InvalidParams("lb.r must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Complete filter configuration. In a config file the CBF keys sit at the
/// top level and the blending keys under `[lb]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct AssistParams<T> {
    #[serde(flatten)]
    pub cbf: CbfParams<T>,
    pub lb: LbParams<T>,
}

impl<T: Real> Default for AssistParams<T> {
    fn default() -> Self {
        Self {
            cbf: CbfParams::default(),
            lb: LbParams::default(),
        }
    }
}

impl<T: Real + for<'de> Deserialize<'de>> AssistParams<T> {
    pub fn from_toml_str(s: &str) -> Result<Self, AssistError> {
        let p: Self = toml::from_str(s).map_err(|e| AssistError::InvalidParams(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, AssistError> {
        let s = std::fs::read_to_string(path).map_err(|e| AssistError::InvalidParams(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }
}

impl<T: Real> AssistParams<T> {
    pub fn validate(&self) -> Result<(), AssistError> {
        self.cbf.validate()?;
        self.lb.validate()
    }
}
