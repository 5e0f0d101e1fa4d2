use crate::error::{Error, Result};

/// Step sizes `gamma_t` shared by all agents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSizeSchedule {
    Constant { gamma0: f64 },
    /// `gamma0 * (t + 1)^(-alpha)`
    Polynomial { gamma0: f64, alpha: f64 },
    /// `gamma_t = 0`: the primal variables never move, only the estimates mix.
    Frozen,
}

impl Default for StepSizeSchedule {
    fn default() -> Self {
        StepSizeSchedule::Polynomial {
            gamma0: 0.5,
            alpha: 0.6,
        }
    }
}

impl StepSizeSchedule {
    pub fn gamma(&self, t: usize) -> f64 {
        match *self {
            StepSizeSchedule::Constant { gamma0 } => gamma0,
            StepSizeSchedule::Polynomial { gamma0, alpha } => gamma0 * ((t + 1) as f64).powf(-alpha),
            StepSizeSchedule::Frozen => 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let gamma0 = match *self {
            StepSizeSchedule::Constant { gamma0 } => gamma0,
            StepSizeSchedule::Polynomial { gamma0, alpha } => {
                if !(alpha > 0.0) || !alpha.is_finite() {
                    return Err(Error::Config(format!("step exponent alpha = {alpha} must be > 0")));
                }
                gamma0
            }
            StepSizeSchedule::Frozen => return Ok(()),
        };
        if !(gamma0 > 0.0) || !gamma0.is_finite() {
            return Err(Error::Config(format!("gamma0 = {gamma0} must be > 0")));
        }
        Ok(())
    }

    /// Positive, not summable, square summable. Only the polynomial form with
    /// `alpha` in `(0.5, 1]` qualifies.
    pub fn check_assumption(&self) -> Result<()> {
        self.validate()?;
        let detail = match *self {
            StepSizeSchedule::Polynomial { alpha, .. } if alpha > 0.5 && alpha <= 1.0 => {
                return Ok(())
            }
            StepSizeSchedule::Polynomial { alpha, .. } => {
                format!("alpha must be in (0.5, 1], got {alpha}")
            }
            StepSizeSchedule::Constant { .. } => {
                "constant steps are not square summable".to_string()
            }
            StepSizeSchedule::Frozen => "zero steps are not positive".to_string(),
        };
        Err(Error::Assumption {
            assumption: "Assumption 4",
            detail,
        })
    }
}
