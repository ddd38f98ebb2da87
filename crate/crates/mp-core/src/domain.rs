use crate::error::CoreError;

/// Closed box of continuous arguments specializing a primitive.
///
/// Dimension zero encodes the empty argument set.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgumentDomain {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ArgumentDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self, CoreError> {
        assert_eq!(lower.len(), upper.len(), "bound vectors must match");
        for i in 0..lower.len() {
            if lower[i] > upper[i] {
                return Err(CoreError::InvalidDomain {
                    index: i,
                    lower: lower[i],
                    upper: upper[i],
                });
            }
        }
        Ok(Self { lower, upper })
    }

    /// The empty argument set.
    pub fn empty() -> Self {
        Self {
            lower: Vec::new(),
            upper: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn width(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    /// Closed-box containment test.
    pub fn contains(&self, xi: &[f64]) -> bool {
        xi.len() == self.lower.len()
            && xi
                .iter()
                .enumerate()
                .all(|(i, v)| *v >= self.lower[i] && *v <= self.upper[i])
    }

    /// Componentwise clamp into the box.
    pub fn clamp(&self, xi: &[f64]) -> Vec<f64> {
        xi.iter()
            .enumerate()
            .map(|(i, v)| v.clamp(self.lower[i], self.upper[i]))
            .collect()
    }
}

/// Exponential-stability constants of a primitive's closed loop, plus the
/// deviation threshold below which tracking error is treated as negligible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityEnvelope {
    /// Overshoot constant, dimensionless, >= 1.
    pub overshoot: f64,
    /// Decay rate in 1/s, > 0.
    pub rate: f64,
    /// Negligible-deviation threshold in state-norm units, > 0.
    pub epsilon: f64,
}

impl StabilityEnvelope {
    pub fn new(overshoot: f64, rate: f64, epsilon: f64) -> Result<Self, CoreError> {
        if !(overshoot >= 1.0) {
            return Err(CoreError::InvalidEnvelope(format!(
                "overshoot {overshoot} must be >= 1"
            )));
        }
        if !(rate > 0.0) {
            return Err(CoreError::InvalidEnvelope(format!(
                "rate {rate} must be > 0"
            )));
        }
        if !(epsilon > 0.0) {
            return Err(CoreError::InvalidEnvelope(format!(
                "epsilon {epsilon} must be > 0"
            )));
        }
        Ok(Self {
            overshoot,
            rate,
            epsilon,
        })
    }
}
