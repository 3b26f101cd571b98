//! Sensing-capacitor models.

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, Error, Result};

/// Monolithic humidity capacitor, linear in relative humidity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HumiditySensorModel {
    pub c_at_0rh: f64,
    pub c_at_100rh: f64,
}

impl Default for HumiditySensorModel {
    fn default() -> Self {
        Self {
            c_at_0rh: 180e-12,
            c_at_100rh: 500e-12,
        }
    }
}

impl HumiditySensorModel {
    pub fn validate(&self) -> Result<()> {
        require_positive("c_at_0rh", self.c_at_0rh)?;
        require_positive("c_at_100rh", self.c_at_100rh)?;
        if self.c_at_100rh <= self.c_at_0rh {
            return Err(Error::invalid("c_at_100rh", "must exceed c_at_0rh"));
        }
        Ok(())
    }

    /// Capacitance at `rh` percent.
    pub fn capacitance(&self, rh: f64) -> Result<f64> {
        self.validate()?;
        if !(0.0..=100.0).contains(&rh) {
            return Err(Error::HumidityOutOfRange(rh));
        }
        Ok(self.c_at_0rh + rh / 100.0 * (self.c_at_100rh - self.c_at_0rh))
    }
}

pub fn humidity_capacitance(model: &HumiditySensorModel, rh: f64) -> Result<f64> {
    model.capacitance(rh)
}

/// Differential comb-drive half-bridge: one movable electrode between two
/// fixed ones. Acceleration moves the shared electrode, raising one
/// capacitance and lowering the other by the same amount.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AccelHalfBridge {
    /// Each capacitor at zero acceleration (F).
    pub c_rest: f64,
    /// Capacitance change per g (F/g).
    pub sensitivity: f64,
}

impl Default for AccelHalfBridge {
    fn default() -> Self {
        Self {
            c_rest: 7.048e-12,
            sensitivity: 61.84e-15,
        }
    }
}

impl AccelHalfBridge {
    pub fn validate(&self) -> Result<()> {
        require_positive("c_rest", self.c_rest)?;
        require_positive("sensitivity", self.sensitivity)
    }

    /// Largest |acceleration| before a plate capacitance reaches zero.
    pub fn over_range_limit(&self) -> f64 {
        self.c_rest / self.sensitivity
    }

    /// Capacitance change ΔC at `accel` g.
    pub fn delta_c(&self, accel: f64) -> f64 {
        self.sensitivity * accel
    }

    /// `(c_plus, c_minus) = (c_rest + ΔC, c_rest − ΔC)`.
    pub fn capacitances(&self, accel: f64) -> Result<(f64, f64)> {
        self.validate()?;
        if !accel.is_finite() || accel.abs() * self.sensitivity >= self.c_rest {
            return Err(Error::OverRange {
                accel,
                limit: self.over_range_limit(),
            });
        }
        let dc = self.delta_c(accel);
        Ok((self.c_rest + dc, self.c_rest - dc))
    }
}

pub fn halfbridge_capacitances(model: &AccelHalfBridge, accel: f64) -> Result<(f64, f64)> {
    model.capacitances(accel)
}
