//! The single table of runtime verification tolerances.
//!
//! Every threshold the pipelines check against lives here, selectable by
//! named profile and overridable per job, so reported numbers are
//! reproducible from the job file alone.

use serde::Deserialize;

/// Verification thresholds and discretization defaults for a solve run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceProfile {
    /// Max relative violation of the prescribed-energy law per node.
    pub energy_law_max: f64,
    /// Max norm of the equation-of-motion residual on the time grid.
    pub ode_residual_max: f64,
    /// Max distance between start and end of one independently integrated
    /// period.
    pub periodicity_max: f64,
    /// Max relative spread of the first integral after reparameterization.
    pub constancy_spread_max: f64,
    /// Integrator tolerances for verification runs.
    pub integrator_rtol: f64,
    pub integrator_atol: f64,
    /// Time-grid size for the produced periodic solution.
    pub n_time: usize,
}

pub const DEFAULT_PROFILE: ToleranceProfile = ToleranceProfile {
    energy_law_max: 1e-8,
    ode_residual_max: 1e-4,
    periodicity_max: 1e-4,
    constancy_spread_max: 1e-6,
    integrator_rtol: 1e-11,
    integrator_atol: 1e-13,
    n_time: 1024,
};

pub const STRICT_PROFILE: ToleranceProfile = ToleranceProfile {
    energy_law_max: 1e-9,
    ode_residual_max: 1e-5,
    periodicity_max: 1e-5,
    constancy_spread_max: 1e-7,
    integrator_rtol: 1e-12,
    integrator_atol: 1e-14,
    n_time: 2048,
};

pub const QUICK_PROFILE: ToleranceProfile = ToleranceProfile {
    energy_law_max: 1e-6,
    ode_residual_max: 1e-2,
    periodicity_max: 1e-2,
    constancy_spread_max: 1e-4,
    integrator_rtol: 1e-9,
    integrator_atol: 1e-11,
    n_time: 512,
};

impl ToleranceProfile {
    pub fn named(name: &str) -> Option<ToleranceProfile> {
        match name {
            "default" => Some(DEFAULT_PROFILE),
            "strict" => Some(STRICT_PROFILE),
            "quick" => Some(QUICK_PROFILE),
            _ => None,
        }
    }
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        DEFAULT_PROFILE
    }
}

/// Per-job overrides of individual thresholds.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverrides {
    pub energy_law_max: Option<f64>,
    pub ode_residual_max: Option<f64>,
    pub periodicity_max: Option<f64>,
    pub constancy_spread_max: Option<f64>,
    pub integrator_rtol: Option<f64>,
    pub integrator_atol: Option<f64>,
    pub n_time: Option<usize>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base: ToleranceProfile) -> ToleranceProfile {
        ToleranceProfile {
            energy_law_max: self.energy_law_max.unwrap_or(base.energy_law_max),
            ode_residual_max: self.ode_residual_max.unwrap_or(base.ode_residual_max),
            periodicity_max: self.periodicity_max.unwrap_or(base.periodicity_max),
            constancy_spread_max: self
                .constancy_spread_max
                .unwrap_or(base.constancy_spread_max),
            integrator_rtol: self.integrator_rtol.unwrap_or(base.integrator_rtol),
            integrator_atol: self.integrator_atol.unwrap_or(base.integrator_atol),
            n_time: self.n_time.unwrap_or(base.n_time),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_named_profiles() {
        assert_eq!(ToleranceProfile::named("default"), Some(DEFAULT_PROFILE));
        assert_eq!(ToleranceProfile::named("strict"), Some(STRICT_PROFILE));
        assert_eq!(ToleranceProfile::named("quick"), Some(QUICK_PROFILE));
        assert_eq!(ToleranceProfile::named("nope"), None);
    }

    #[test]
    fn test_overrides_apply() {
        let o: ToleranceOverrides =
            serde_json::from_str(r#"{"ode_residual_max": 1e-5, "n_time": 256}"#).unwrap();
        let t = o.apply(DEFAULT_PROFILE);
        assert_eq!(t.ode_residual_max, 1e-5);
        assert_eq!(t.n_time, 256);
        assert_eq!(t.energy_law_max, DEFAULT_PROFILE.energy_law_max);
    }
}
