//! Exponents `(p, q, N)`, their closed-form derived constants and the regime classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// The triple `(p, q, N)`: diffusion exponent, absorption exponent, space dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams<T>", into = "RawParams<T>")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Params<T> {
    p: T,
    q: T,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct RawParams<T> {
    p: T,
    q: T,
    dim: usize,
}

impl<T: Real> TryFrom<RawParams<T>> for Params<T> {
    type Error = Error;
    fn try_from(raw: RawParams<T>) -> Result<Self> {
        Params::new(raw.p, raw.q, raw.dim)
    }
}

impl<T: Real> From<Params<T>> for RawParams<T> {
    fn from(p: Params<T>) -> Self {
        RawParams { p: p.p, q: p.q, dim: p.dim }
    }
}

impl<T: Real> Params<T> {
    pub fn new(p: T, q: T, dim: usize) -> Result<Self> {
        if !(p > T::lit(2.0)) {
            return Err(Error::InvalidParams(format!("p = {p} must exceed 2")));
        }
        if !(q > T::one()) {
            return Err(Error::InvalidParams(format!("q = {q} must exceed 1")));
        }
        if dim == 0 {
            return Err(Error::InvalidParams("dimension must be at least 1".into()));
        }
        Ok(Params { p, q, dim })
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `q < p - 1`: the range where diffusion becomes negligible and the support localizes.
    pub fn is_absorption_dominated(&self) -> bool {
        self.q < self.p - T::one()
    }

    /// Errors unless `q < p - 1`, naming the violated assumption.
    pub fn require_absorption_dominated(&self) -> Result<()> {
        if self.is_absorption_dominated() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "assumption p > 2 and 1 < q < p - 1 violated: q = {} >= p - 1 = {}",
                self.q,
                self.p - T::one()
            )))
        }
    }

    /// Same exponents with a different absorption exponent.
    pub fn with_q(&self, q: T) -> Result<Self> {
        Params::new(self.p, q, self.dim)
    }

    pub fn derive(&self) -> DerivedConstants<T> {
        derive(self)
    }

    pub fn classify(&self) -> Regime {
        classify(self)
    }
}

/// Closed-form exponents and constants attached to `(p, q, N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedConstants<T> {
    /// `p - 1`.
    pub q1: T,
    /// `p - N/(N+1)`.
    pub q_star: T,
    /// `min{p - 2N/(N+1), p/2}`.
    pub q2: T,
    /// `1/(q(N+1) - N)`.
    pub xi: T,
    /// `1/(N(p-2) + p)`, the spreading exponent of the pure p-Laplacian flow.
    pub eta: T,
    /// `1/(q - 1)`, the self-similar decay exponent.
    pub decay_exp: T,
    /// Amplitude of the stationary barrier; only defined for `q < p - 1`.
    pub a0: Option<T>,
    /// `(p - q)/(p - 1 - q)`; only defined for `q < p - 1`.
    pub wait_exp: Option<T>,
}

pub fn derive<T: Real>(params: &Params<T>) -> DerivedConstants<T> {
    let one = T::one();
    let (p, q) = (params.p, params.q);
    let n = T::count(params.dim);
    let gap = p - one - q;
    let (a0, wait_exp) = if gap > T::zero() {
        let a0 = gap / (p - q) * (n - one + (p - one) / gap).powf(-one / gap);
        (Some(a0), Some((p - q) / gap))
    } else {
        (None, None)
    };
    DerivedConstants {
        q1: p - one,
        q_star: p - n / (n + one),
        q2: (p - T::lit(2.0) * n / (n + one)).min(p / T::lit(2.0)),
        xi: one / (q * (n + one) - n),
        eta: one / (n * (p - T::lit(2.0)) + p),
        decay_exp: one / (q - one),
        a0,
        wait_exp,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegimeLabel {
    /// `1 < q < p - 1`: absorption wins, solutions stay localized.
    SubcriticalLocalized,
    /// `q = p - 1`.
    CriticalQ1,
    /// `p - 1 < q < q*`.
    Intermediate,
    /// `q >= q*`.
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Regime {
    pub label: RegimeLabel,
    /// Strict `q < q2`, the hypothesis for a moving boundary under steep data.
    pub below_q2: bool,
}

pub fn classify<T: Real>(params: &Params<T>) -> Regime {
    let c = derive(params);
    let q = params.q;
    let label = if q < c.q1 {
        RegimeLabel::SubcriticalLocalized
    } else if q == c.q1 {
        RegimeLabel::CriticalQ1
    } else if q < c.q_star {
        RegimeLabel::Intermediate
    } else {
        RegimeLabel::Supercritical
    };
    Regime { label, below_q2: q < c.q2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derived_constants_p3_q15_n1() {
        let c = Params::new(3.0, 1.5, 1).unwrap().derive();
        assert_relative_eq!(c.q1, 2.0);
        assert_relative_eq!(c.q_star, 2.5);
        assert_relative_eq!(c.q2, 1.5);
        assert_relative_eq!(c.xi, 0.5);
        assert_relative_eq!(c.eta, 0.25);
        assert_relative_eq!(c.decay_exp, 2.0);
        assert_relative_eq!(c.wait_exp.unwrap(), 3.0);
        assert_relative_eq!(c.a0.unwrap(), 1.0 / 48.0, max_relative = 1e-14);
    }

    #[test]
    fn derived_constants_p4_q2_n2() {
        let c = Params::new(4.0, 2.0, 2).unwrap().derive();
        assert_relative_eq!(c.q1, 3.0);
        assert_relative_eq!(c.q_star, 10.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(c.q2, 2.0);
        assert_relative_eq!(c.xi, 0.25);
        assert_relative_eq!(c.eta, 0.125);
        assert_relative_eq!(c.a0.unwrap(), 0.125, max_relative = 1e-14);
    }

    #[test]
    fn rejects_invalid_exponents() {
        assert!(Params::new(2.0, 1.5, 1).is_err());
        assert!(Params::new(3.0, 1.0, 1).is_err());
        assert!(Params::new(3.0, 1.5, 0).is_err());
        assert!(Params::new(f64::NAN, 1.5, 1).is_err());
    }

    #[test]
    fn a0_undefined_outside_absorption_range() {
        let c = Params::new(3.0, 2.0, 1).unwrap().derive();
        assert!(c.a0.is_none() && c.wait_exp.is_none());
    }

    #[test]
    fn regime_labels() {
        let r = Params::new(3.0, 1.5, 1).unwrap().classify();
        assert_eq!(r.label, RegimeLabel::SubcriticalLocalized);
        assert!(!r.below_q2);
        let r = Params::new(3.0, 1.4, 1).unwrap().classify();
        assert_eq!(r.label, RegimeLabel::SubcriticalLocalized);
        assert!(r.below_q2);
        assert_eq!(Params::new(3.0, 2.0, 1).unwrap().classify().label, RegimeLabel::CriticalQ1);
        assert_eq!(Params::new(3.0, 2.2, 1).unwrap().classify().label, RegimeLabel::Intermediate);
        assert_eq!(Params::new(3.0, 2.5, 1).unwrap().classify().label, RegimeLabel::Supercritical);
    }

    #[test]
    fn a0_vanishes_at_q1() {
        let p = 3.0;
        let mut prev = f64::INFINITY;
        for k in 1..200 {
            let q = 1.0 + (p - 2.0) * k as f64 / 200.0;
            let a0 = Params::new(p, q, 1).unwrap().derive().a0.unwrap();
            assert!(a0 >= 0.0 && a0 <= prev);
            prev = a0;
        }
        assert!(prev < 1e-3);
        let near = Params::new(p, p - 1.0 - 1e-4, 1).unwrap().derive().a0.unwrap();
        assert!(near < 1e-10);
    }

    #[test]
    fn json_keys() {
        let params: Params<f64> = serde_json::from_str(r#"{"p":3.0,"q":1.5,"dim":1}"#).unwrap();
        assert_eq!(params.q(), 1.5);
        let bad: std::result::Result<Params<f64>, _> =
            serde_json::from_str(r#"{"p":1.5,"q":1.2,"dim":1}"#);
        assert!(bad.is_err());
        let back = serde_json::to_string(&params).unwrap();
        assert_eq!(back, r#"{"p":3.0,"q":1.5,"dim":1}"#);
    }

    proptest::proptest! {
        #[test]
        fn constants_positive_in_absorption_range(p in 2.05f64..6.0, frac in 0.01f64..0.99, dim in 1usize..3) {
            let q = 1.0 + frac * (p - 2.0);
            let params = Params::new(p, q, dim).unwrap();
            let c = params.derive();
            proptest::prop_assert!(c.q1 < c.q_star);
            proptest::prop_assert!(c.q2 < c.q1);
            proptest::prop_assert!(c.xi > 0.0 && c.eta > 0.0 && c.decay_exp > 0.0);
            proptest::prop_assert!(c.a0.unwrap() >= 0.0 && c.a0.unwrap().is_finite());
            proptest::prop_assert_eq!(params.classify().label, RegimeLabel::SubcriticalLocalized);
        }
    }
}
