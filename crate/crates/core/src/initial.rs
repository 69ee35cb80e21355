//! Compactly supported Lipschitz initial profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    /// `amplitude * (radius^2 - |x|^2)_+^exponent`.
    Cap { amplitude: f64, radius: f64, exponent: f64 },
    /// `min(amplitude * dist(x, complement of B(0, radius))^exponent, height)`.
    #[serde(rename_all = "camelCase")]
    PowerDist { amplitude: f64, exponent: f64, radius: f64, height: Option<f64> },
    /// Smoothed indicator of `B(0, radius)`: `height` inside, C^1 ramp of `width` at the rim.
    IndicatorSmoothed { height: f64, radius: f64, width: f64 },
}

impl InitialData {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInitialData(msg));
        let finite_nonneg = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidInitialData(format!("{name} = {v} must be finite and non-negative")))
            }
        };
        match *self {
            InitialData::Cap { amplitude, radius, exponent } => {
                finite_nonneg("amplitude", amplitude)?;
                if !(radius > 0.0) {
                    return bad(format!("cap radius {radius} must be positive"));
                }
                if !(exponent >= 1.0) {
                    return bad(format!("cap exponent {exponent} < 1 is not Lipschitz at the rim"));
                }
            }
            InitialData::PowerDist { amplitude, exponent, radius, height } => {
                finite_nonneg("amplitude", amplitude)?;
                if !(radius > 0.0) {
                    return bad(format!("support radius {radius} must be positive"));
                }
                if !(exponent >= 1.0) {
                    return bad(format!("distance exponent {exponent} < 1 is not Lipschitz at the rim"));
                }
                if let Some(h) = height {
                    finite_nonneg("height", h)?;
                }
            }
            InitialData::IndicatorSmoothed { height, radius, width } => {
                finite_nonneg("height", height)?;
                if !(radius > 0.0) || !(width > 0.0) || width > radius {
                    return bad(format!("need 0 < width <= radius, got width {width}, radius {radius}"));
                }
            }
        }
        Ok(())
    }

    /// Radius of the ball containing the support.
    pub fn support_radius(&self) -> f64 {
        match *self {
            InitialData::Cap { radius, .. }
            | InitialData::PowerDist { radius, .. }
            | InitialData::IndicatorSmoothed { radius, .. } => radius,
        }
    }

    pub fn eval<T: Real>(&self, r: T) -> T {
        let zero = T::zero();
        match *self {
            InitialData::Cap { amplitude, radius, exponent } => {
                let rr = T::lit(radius);
                let base = (rr * rr - r * r).max(zero);
                T::lit(amplitude) * base.powf(T::lit(exponent))
            }
            InitialData::PowerDist { amplitude, exponent, radius, height } => {
                let d = (T::lit(radius) - r).max(zero);
                let v = T::lit(amplitude) * d.powf(T::lit(exponent));
                match height {
                    Some(h) => v.min(T::lit(h)),
                    None => v,
                }
            }
            InitialData::IndicatorSmoothed { height, radius, width } => {
                let s = ((T::lit(radius) - r) / T::lit(width)).max(zero).min(T::one());
                T::lit(height) * s * s * (T::lit(3.0) - T::lit(2.0) * s)
            }
        }
    }

    pub fn sample<T: Real>(&self, grid: Grid<T>) -> Result<Field<T>> {
        initial_bump(self, grid)
    }
}

/// Samples a profile at the cell centers of `grid`.
pub fn initial_bump<T: Real>(kind: &InitialData, grid: Grid<T>) -> Result<Field<T>> {
    kind.validate()?;
    Ok(Field::from_fn(grid, |[x, y]| kind.eval((x * x + y * y).sqrt())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cap_values() {
        let cap = InitialData::Cap { amplitude: 1.0, radius: 1.0, exponent: 2.0 };
        assert_relative_eq!(cap.eval(0.0f64), 1.0);
        assert_eq!(cap.eval(1.0f64), 0.0);
        assert_eq!(cap.eval(-1.0f64), 0.0);
        let grid = Grid::<f64>::new(1, 4.0, 512).unwrap();
        let f = initial_bump(&cap, grid).unwrap();
        assert!((f.positivity_set(0.0).support_radius() - 1.0).abs() <= grid.dx());
    }

    #[test]
    fn power_profiles() {
        let a0 = 1.0 / 48.0;
        let compliant = InitialData::PowerDist { amplitude: a0, exponent: 3.0, radius: 1.0, height: Some(a0) };
        assert_relative_eq!(compliant.eval(0.5f64), a0 * 0.125);
        assert_relative_eq!(compliant.eval(0.0f64), a0);
        let steep = InitialData::PowerDist { amplitude: 50.0 * a0, exponent: 3.0, radius: 1.0, height: None };
        assert_relative_eq!(steep.eval(0.9f64), 50.0 * a0 * 1e-3, max_relative = 1e-12);
        // The steep profile exceeds the barrier a0 |x - x0|^3 near x0 = 1.
        assert!(steep.eval(0.95f64) > a0 * 0.05f64.powi(3));
    }

    #[test]
    fn rejects_non_lipschitz() {
        assert!(InitialData::Cap { amplitude: 1.0, radius: 1.0, exponent: 0.5 }.validate().is_err());
        assert!(InitialData::PowerDist { amplitude: 1.0, exponent: 0.9, radius: 1.0, height: None }
            .validate()
            .is_err());
        assert!(InitialData::IndicatorSmoothed { height: 1.0, radius: 1.0, width: 0.0 }.validate().is_err());
        assert!(InitialData::Cap { amplitude: -1.0, radius: 1.0, exponent: 2.0 }.validate().is_err());
    }

    #[test]
    fn smoothed_indicator() {
        let ind = InitialData::IndicatorSmoothed { height: 2.0, radius: 1.0, width: 0.25 };
        assert_eq!(ind.eval(0.5f64), 2.0);
        assert_eq!(ind.eval(1.0f64), 0.0);
        assert_relative_eq!(ind.eval(0.875f64), 1.0);
    }

    #[test]
    fn json_shape() {
        let d: InitialData =
            serde_json::from_str(r#"{"kind":"power-dist","amplitude":0.5,"exponent":3,"radius":1,"height":null}"#)
                .unwrap();
        assert!(matches!(d, InitialData::PowerDist { .. }));
    }
}
