use serde::{Deserialize, Serialize};

use super::{FieldError, ScalarField, TorusGrid};

/// `amplitude · cos(⟨wave, x⟩ + phase)` with one integer frequency per
/// active coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub amplitude: f64,
    pub wave: Vec<i64>,
    #[serde(default)]
    pub phase: f64,
}

impl Mode {
    pub fn new(amplitude: f64, wave: Vec<i64>, phase: f64) -> Self {
        Mode { amplitude, wave, phase }
    }

    fn argument(&self, x: &[f64]) -> f64 {
        self.wave.iter().zip(x).map(|(&w, &xi)| w as f64 * xi).sum::<f64>() + self.phase
    }
}

/// Band-limited trigonometric sum used to describe test functions and data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ModeSum {
    pub modes: Vec<Mode>,
}

impl ModeSum {
    pub fn new(modes: Vec<Mode>) -> Self {
        ModeSum { modes }
    }

    pub fn constant(c: f64, axes: usize) -> Self {
        ModeSum::new(vec![Mode::new(c, vec![0; axes], 0.0)])
    }

    /// Checks one frequency per active axis, each strictly below Nyquist.
    /// The error names the offending `modes[i].wave[a]`.
    pub fn validate(&self, grid: &TorusGrid) -> Result<(), FieldError> {
        let axes = grid.active().len();
        for (i, m) in self.modes.iter().enumerate() {
            if m.wave.len() != axes {
                return Err(FieldError::Mode {
                    path: format!("[{i}].wave"),
                    message: format!("expected {axes} frequencies, found {}", m.wave.len()),
                });
            }
            for (a, &w) in m.wave.iter().enumerate() {
                if w.unsigned_abs() as usize >= grid.nyquist(a) {
                    return Err(FieldError::Mode {
                        path: format!("[{i}].wave[{a}]"),
                        message: format!(
                            "frequency {w} reaches the Nyquist limit {} of axis {}",
                            grid.nyquist(a),
                            grid.active()[a]
                        ),
                    });
                }
            }
            if !m.amplitude.is_finite() || !m.phase.is_finite() {
                return Err(FieldError::Mode {
                    path: format!("[{i}]"),
                    message: "amplitude and phase must be finite".into(),
                });
            }
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.modes.iter().map(|m| m.amplitude * m.argument(x).cos()).sum()
    }

    /// `∂_a` evaluated symbolically.
    pub fn derivative(&self, x: &[f64], a: usize) -> f64 {
        self.modes
            .iter()
            .map(|m| -m.amplitude * m.wave[a] as f64 * m.argument(x).sin())
            .sum()
    }

    /// `∂_a ∂_b` evaluated symbolically.
    pub fn second_derivative(&self, x: &[f64], a: usize, b: usize) -> f64 {
        self.modes
            .iter()
            .map(|m| -m.amplitude * (m.wave[a] * m.wave[b]) as f64 * m.argument(x).cos())
            .sum()
    }

    /// Largest `|wave_a|` over all modes and axes.
    pub fn max_frequency(&self) -> i64 {
        self.modes
            .iter()
            .flat_map(|m| m.wave.iter().map(|w| w.abs()))
            .max()
            .unwrap_or(0)
    }

    pub fn sample(&self, grid: &TorusGrid) -> Result<ScalarField, FieldError> {
        self.validate(grid)?;
        Ok(ScalarField::from_fn(grid, |x| self.value(x)))
    }
}
