//! Spatial covariance families for the score fields and the decay envelopes
//! `h` (covariance of curves) and `H` (covariance of their tensor squares).

use std::f64::consts::E;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Half-integer Matern smoothness values with closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl TryFrom<f64> for MaternNu {
    type Error = crate::Error;

    fn try_from(nu: f64) -> Result<Self> {
        match nu {
            v if v == 0.5 => Ok(MaternNu::Half),
            v if v == 1.5 => Ok(MaternNu::ThreeHalves),
            v if v == 2.5 => Ok(MaternNu::FiveHalves),
            other => Err(param(format!("unsupported Matern smoothness {other} (use 0.5, 1.5 or 2.5)"))),
        }
    }
}

impl From<MaternNu> for f64 {
    fn from(nu: MaternNu) -> f64 {
        match nu {
            MaternNu::Half => 0.5,
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
        }
    }
}

/// Isotropic covariance `phi(||s1 - s2||)` of a scalar score field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CovFamily {
    /// `sigma2 * exp(-(x / range)^power)`, `power` in `(0, 2]`.
    PoweredExponential { variance: f64, range: f64, power: f64 },
    /// Normalized Matern, `phi(0) = sigma2`.
    Matern { variance: f64, range: f64, nu: MaternNu },
    Spherical { variance: f64, range: f64 },
    /// `sigma2 / (1 + (x / range)^2)`.
    RationalQuadratic { variance: f64, range: f64 },
    /// `(1 - x)_+`.
    Tent,
    /// `sigma2 * exp(-(x / scale)^2)`.
    SquaredExponential { variance: f64, scale: f64 },
}

impl CovFamily {
    pub fn exponential(variance: f64, range: f64) -> Self {
        CovFamily::PoweredExponential {
            variance,
            range,
            power: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |variance: f64, range: f64| -> Result<()> {
            if !(variance >= 0.0 && variance.is_finite()) {
                return Err(param(format!("covariance variance must be >= 0, got {variance}")));
            }
            if !(range > 0.0 && range.is_finite()) {
                return Err(param(format!("covariance range must be > 0, got {range}")));
            }
            Ok(())
        };
        match *self {
            CovFamily::PoweredExponential { variance, range, power } => {
                check(variance, range)?;
                if !(power > 0.0 && power <= 2.0) {
                    return Err(param(format!("powered-exponential power must lie in (0, 2], got {power}")));
                }
                Ok(())
            }
            CovFamily::Matern { variance, range, .. }
            | CovFamily::Spherical { variance, range }
            | CovFamily::RationalQuadratic { variance, range } => check(variance, range),
            CovFamily::SquaredExponential { variance, scale } => check(variance, scale),
            CovFamily::Tent => Ok(()),
        }
    }

    /// `phi(0)`.
    pub fn variance(&self) -> f64 {
        match *self {
            CovFamily::PoweredExponential { variance, .. }
            | CovFamily::Matern { variance, .. }
            | CovFamily::Spherical { variance, .. }
            | CovFamily::RationalQuadratic { variance, .. }
            | CovFamily::SquaredExponential { variance, .. } => variance,
            CovFamily::Tent => 1.0,
        }
    }

    pub fn range(&self) -> f64 {
        match *self {
            CovFamily::PoweredExponential { range, .. }
            | CovFamily::Matern { range, .. }
            | CovFamily::Spherical { range, .. }
            | CovFamily::RationalQuadratic { range, .. } => range,
            CovFamily::SquaredExponential { scale, .. } => scale,
            CovFamily::Tent => 1.0,
        }
    }

    /// Support radius, `None` for families with unbounded support.
    pub fn support(&self) -> Option<f64> {
        match *self {
            CovFamily::Spherical { range, .. } => Some(range),
            CovFamily::Tent => Some(1.0),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        debug_assert!(x >= 0.0);
        match *self {
            CovFamily::PoweredExponential { variance, range, power } => {
                variance * (-(x / range).powf(power)).exp()
            }
            CovFamily::Matern { variance, range, nu } => {
                let r = x / range;
                let poly = match nu {
                    MaternNu::Half => 1.0,
                    MaternNu::ThreeHalves => 1.0 + r,
                    MaternNu::FiveHalves => 1.0 + r + r * r / 3.0,
                };
                variance * poly * (-r).exp()
            }
            CovFamily::Spherical { variance, range } => {
                let r = x / range;
                if r >= 1.0 {
                    0.0
                } else {
                    variance * (1.0 - 1.5 * r + 0.5 * r * r * r)
                }
            }
            CovFamily::RationalQuadratic { variance, range } => {
                let r = x / range;
                variance / (1.0 + r * r)
            }
            CovFamily::Tent => (1.0 - x).max(0.0),
            CovFamily::SquaredExponential { variance, scale } => {
                let r = x / scale;
                variance * (-r * r).exp()
            }
        }
    }
}

impl fmt::Display for CovFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            CovFamily::PoweredExponential { variance, range, power } => {
                write!(f, "powered-exponential(var={variance}, range={range}, p={power})")
            }
            CovFamily::Matern { variance, range, nu } => {
                write!(f, "matern(var={variance}, range={range}, nu={})", f64::from(nu))
            }
            CovFamily::Spherical { variance, range } => write!(f, "spherical(var={variance}, range={range})"),
            CovFamily::RationalQuadratic { variance, range } => {
                write!(f, "rational-quadratic(var={variance}, range={range})")
            }
            CovFamily::Tent => write!(f, "tent"),
            CovFamily::SquaredExponential { variance, scale } => {
                write!(f, "squared-exponential(var={variance}, scale={scale})")
            }
        }
    }
}

/// Evaluates a covariance family, rejecting invalid parameters or distances.
pub fn phi_eval(family: &CovFamily, x: f64) -> Result<f64> {
    family.validate()?;
    if !(x >= 0.0) {
        return Err(param(format!("distance must be >= 0, got {x}")));
    }
    Ok(family.eval(x))
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecayKind {
    /// `h(x) = sum_j phi_j(x)`.
    Envelope(Vec<CovFamily>),
    /// `H(x) = 2 sum_j phi_j(x)^2 + (sum_j phi_j(x))^2` for independent
    /// Gaussian score fields.
    GaussianSquare(Vec<CovFamily>),
    /// `1 / ln(max(x, e))`.
    LogDecay,
    /// `1 / (1 + x)^2`.
    InverseSquare,
}

/// Nonincreasing envelope used in the consistency bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFunction {
    kind: DecayKind,
    factor: f64,
}

impl DecayFunction {
    pub fn new(kind: DecayKind) -> Self {
        Self { kind, factor: 1.0 }
    }

    pub fn log_decay() -> Self {
        Self::new(DecayKind::LogDecay)
    }

    pub fn inverse_square() -> Self {
        Self::new(DecayKind::InverseSquare)
    }

    pub fn zero() -> Self {
        Self::new(DecayKind::Envelope(Vec::new()))
    }

    /// The same envelope multiplied by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            kind: self.kind.clone(),
            factor: self.factor * c,
        }
    }

    pub fn kind(&self) -> &DecayKind {
        &self.kind
    }

    pub fn eval(&self, x: f64) -> f64 {
        let base = match &self.kind {
            DecayKind::Envelope(components) => components.iter().map(|c| c.eval(x)).sum(),
            DecayKind::GaussianSquare(components) => {
                let (sum, sum_sq) = components.iter().fold((0.0, 0.0), |(s, q), c| {
                    let v = c.eval(x);
                    (s + v, q + v * v)
                });
                2.0 * sum_sq + sum * sum
            }
            DecayKind::LogDecay => 1.0 / x.max(E).ln(),
            DecayKind::InverseSquare => 1.0 / ((1.0 + x) * (1.0 + x)),
        };
        self.factor * base
    }

    pub fn at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    pub fn components(&self) -> &[CovFamily] {
        match &self.kind {
            DecayKind::Envelope(c) | DecayKind::GaussianSquare(c) => c,
            _ => &[],
        }
    }

    /// `sum_j sigma_j^2` over the components (finite-sum summability check).
    pub fn total_variance(&self) -> f64 {
        self.components().iter().map(|c| c.variance()).sum()
    }

    /// `max_j rho_j` over the components.
    pub fn max_range(&self) -> f64 {
        self.components().iter().map(|c| c.range()).fold(0.0, f64::max)
    }
}

fn validate_components(components: &[CovFamily]) -> Result<()> {
    components.iter().try_for_each(|c| c.validate())
}

/// `h(x) = sum_j phi_j(x)`.
pub fn h_from_components(components: &[CovFamily]) -> Result<DecayFunction> {
    validate_components(components)?;
    Ok(DecayFunction::new(DecayKind::Envelope(components.to_vec())))
}

/// `H(x) = 2 sum_j phi_j(x)^2 + (sum_j phi_j(x))^2`, the covariance envelope of
/// `X(s) (x) X(s)` when the score fields are independent Gaussian processes.
pub fn h_gaussian_independent(components: &[CovFamily]) -> Result<DecayFunction> {
    validate_components(components)?;
    Ok(DecayFunction::new(DecayKind::GaussianSquare(components.to_vec())))
}

/// `cov(X^2, Y^2) = 2 rho^2 sigma^2 nu^2` for jointly normal, mean-zero `X, Y`
/// with standard deviations `sigma, nu` and correlation `rho`.
pub fn gaussian_sq_cov(sigma: f64, nu: f64, rho: f64) -> Result<f64> {
    if !(rho.abs() <= 1.0) {
        return Err(param(format!("correlation must lie in [-1, 1], got {rho}")));
    }
    if !(sigma >= 0.0 && nu >= 0.0) {
        return Err(param("standard deviations must be nonnegative"));
    }
    Ok(2.0 * rho * rho * sigma * sigma * nu * nu)
}

/// `f(l) = (3 - 2 sqrt2)(1 + l^2) + 2 [1 + l + l^2 - (1 + l^{3/2})(1 + l)^{1/2}]`.
///
/// The closed form is reproduced as printed. It does not agree with
/// [`kappa_isserlis_two_component`] (which is the direct fourth-moment
/// calculation for independent Gaussian scores); both are positive, increasing
/// in `l` and proportional to the spatial correlation.
pub fn f_lambda(lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(param(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    let l = lambda;
    Ok((3.0 - 2.0 * 2f64.sqrt()) * (1.0 + l * l)
        + 2.0 * (1.0 + l + l * l - (1.0 + l.powf(1.5)) * (1.0 + l).sqrt()))
}

/// `sum_{i,j} cov(xi_i(s1) xi_j(s1), xi_i(s2) xi_j(s2))` for two independent
/// Gaussian score fields with variances `1, lambda` and common correlation `r`:
/// `2 r^2 (1 + lambda + lambda^2)`.
pub fn kappa_isserlis_two_component(lambda: f64, r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(param(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    if !(r.abs() <= 1.0) {
        return Err(param(format!("correlation must lie in [-1, 1], got {r}")));
    }
    Ok(2.0 * r * r * (1.0 + lambda + lambda * lambda))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt` by the trapezoid rule,
    /// which converges geometrically for this integrand.
    fn bessel_k(nu: f64, x: f64) -> f64 {
        let h: f64 = 1e-3;
        let mut sum = 0.5 * (-x).exp();
        let mut t = h;
        loop {
            let term = (-x * t.cosh()).exp() * (nu * t).cosh();
            sum += term;
            if term < 1e-300 || t > 50.0 {
                break;
            }
            t += h;
        }
        sum * h
    }

    fn gamma_half_integer(nu: f64) -> f64 {
        // Gamma(1/2) = sqrt(pi), Gamma(z + 1) = z Gamma(z)
        let mut g = std::f64::consts::PI.sqrt();
        let mut z = 0.5;
        while z < nu {
            g *= z;
            z += 1.0;
        }
        g
    }

    #[test]
    fn matern_matches_bessel_oracle() {
        for nu in [0.5, 1.5, 2.5] {
            let fam = CovFamily::Matern {
                variance: 1.0,
                range: 1.0,
                nu: MaternNu::try_from(nu).unwrap(),
            };
            for x in [0.1f64, 1.0, 5.0] {
                let oracle = 2f64.powf(1.0 - nu) / gamma_half_integer(nu) * x.powf(nu) * bessel_k(nu, x);
                assert!((fam.eval(x) - oracle).abs() < 1e-10, "nu={nu} x={x}");
            }
        }
        let half = CovFamily::Matern {
            variance: 1.0,
            range: 1.0,
            nu: MaternNu::Half,
        };
        for x in [0.1f64, 1.0, 5.0] {
            assert!((half.eval(x) - (-x).exp()).abs() < 1e-10);
        }
        assert!(MaternNu::try_from(1.0).is_err());
    }

    #[test]
    fn phi_examples() {
        let pe = CovFamily::exponential(2.0, 1.0);
        assert_eq!(phi_eval(&pe, 0.0).unwrap(), 2.0);
        let sph = CovFamily::Spherical {
            variance: 1.0,
            range: 1.0,
        };
        assert_eq!(phi_eval(&sph, 1.0).unwrap(), 0.0);
        assert_eq!(phi_eval(&sph, 3.0).unwrap(), 0.0);
        assert_eq!(CovFamily::Tent.eval(0.0), 1.0);
        assert!(phi_eval(&pe, -1.0).is_err());
        let bad = CovFamily::PoweredExponential {
            variance: 1.0,
            range: 1.0,
            power: 2.5,
        };
        assert!(phi_eval(&bad, 1.0).is_err());
    }

    #[test]
    fn families_are_monotone() {
        let families = [
            CovFamily::exponential(1.0, 0.7),
            CovFamily::PoweredExponential {
                variance: 2.0,
                range: 3.0,
                power: 0.5,
            },
            CovFamily::PoweredExponential {
                variance: 1.0,
                range: 1.0,
                power: 2.0,
            },
            CovFamily::Matern {
                variance: 1.0,
                range: 2.0,
                nu: MaternNu::FiveHalves,
            },
            CovFamily::Matern {
                variance: 1.0,
                range: 2.0,
                nu: MaternNu::ThreeHalves,
            },
            CovFamily::Spherical {
                variance: 1.5,
                range: 4.0,
            },
            CovFamily::RationalQuadratic {
                variance: 1.0,
                range: 1.0,
            },
            CovFamily::Tent,
            CovFamily::SquaredExponential {
                variance: 1.0,
                scale: 1.0,
            },
        ];
        let h = h_from_components(&families).unwrap();
        let big_h = h_gaussian_independent(&families).unwrap();
        let evals: Vec<Box<dyn Fn(f64) -> f64>> = families
            .iter()
            .map(|f| Box::new(move |x| f.eval(x)) as Box<dyn Fn(f64) -> f64>)
            .chain([
                Box::new(|x| h.eval(x)) as Box<dyn Fn(f64) -> f64>,
                Box::new(|x| big_h.eval(x)),
                Box::new(|x| DecayFunction::log_decay().eval(x)),
                Box::new(|x| DecayFunction::inverse_square().eval(x)),
            ])
            .collect();
        for f in &evals {
            let mut prev = f(0.0);
            for i in 1..=5000 {
                let v = f(i as f64 * 0.01);
                assert!(v >= 0.0 && v <= prev + 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn envelopes_at_zero() {
        let h = h_from_components(&[CovFamily::exponential(1.0, 1.0)]).unwrap();
        assert_eq!(h.at_zero(), 1.0);
        assert!((h.eval(2.0) - (-2.0f64).exp()).abs() < 1e-15);
        let comps = [CovFamily::exponential(1.0, 1.0), CovFamily::exponential(0.5, 2.0)];
        let h = h_from_components(&comps).unwrap();
        assert_eq!(h.at_zero(), 1.5);
        assert_eq!(h.total_variance(), 1.5);
        assert_eq!(h.max_range(), 2.0);
        let big_h = h_gaussian_independent(&comps).unwrap();
        assert_eq!(big_h.at_zero(), 2.0 * (1.0 + 0.25) + 1.5 * 1.5);
        assert_eq!(h_from_components(&[]).unwrap().eval(0.3), 0.0);
        assert!(h_from_components(&[CovFamily::exponential(-1.0, 1.0)]).is_err());
    }

    #[test]
    fn gaussian_h_single_exponential() {
        for rho in [0.5, 1.0, 3.0] {
            let big_h = h_gaussian_independent(&[CovFamily::exponential(1.0, rho)]).unwrap();
            for x in [0.0, 0.3, 2.0, 7.0] {
                assert!((big_h.eval(x) - 3.0 * (-2.0 * x / rho).exp()).abs() < 1e-14);
            }
        }
        let zero = h_gaussian_independent(&[CovFamily::exponential(0.0, 1.0)]).unwrap();
        assert_eq!(zero.eval(0.0), 0.0);
    }

    #[test]
    fn gaussian_h_equispaced_line_sums_bounded() {
        // N^{-1} sum_{k,l} H(|k - l| d) stays bounded for exponential components
        let comps = [CovFamily::exponential(1.0, 0.8), CovFamily::exponential(0.3, 1.5)];
        let big_h = h_gaussian_independent(&comps).unwrap();
        let normalized = |n: usize| {
            let mut s = big_h.at_zero() * n as f64;
            for m in 1..n {
                s += 2.0 * (n - m) as f64 * big_h.eval(m as f64);
            }
            s / n as f64
        };
        let limit = big_h.at_zero() + 2.0 * (1..400).map(|m| big_h.eval(m as f64)).sum::<f64>();
        for n in [10, 100, 1000] {
            assert!(normalized(n) <= limit + 1e-12);
        }
        assert!((normalized(1000) - limit).abs() < 0.05 * limit);
    }

    #[test]
    fn gaussian_sq_cov_examples() {
        assert_eq!(gaussian_sq_cov(1.0, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(gaussian_sq_cov(1.0, 1.0, 1.0).unwrap(), 2.0);
        assert!((gaussian_sq_cov(2.0, 1.0, 0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!(gaussian_sq_cov(1.0, 1.0, 1.5).is_err());
    }

    #[test]
    fn f_lambda_examples() {
        assert!((f_lambda(0.0).unwrap() - (3.0 - 2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((f_lambda(1.0).unwrap() - 4.0 * (3.0 - 2.0 * 2f64.sqrt())).abs() < 1e-14);
        let vals: Vec<f64> = (0..100).map(|i| f_lambda(i as f64 / 99.0).unwrap()).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
        assert!(f_lambda(1.1).is_err());
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa_isserlis_two_component(0.3, 0.0).unwrap(), 0.0);
        assert_eq!(kappa_isserlis_two_component(0.0, 1.0).unwrap(), 2.0);
        assert!((kappa_isserlis_two_component(0.5, 0.5).unwrap() - 0.875).abs() < 1e-15);
        assert_eq!(
            kappa_isserlis_two_component(0.0, 1.0).unwrap(),
            gaussian_sq_cov(1.0, 1.0, 1.0).unwrap()
        );
    }

    #[test]
    fn rational_quadratic_tail() {
        let rq = CovFamily::RationalQuadratic {
            variance: 1.3,
            range: 2.0,
        };
        for x in [1e3, 1e4] {
            let ratio = x * x * rq.eval(x) / (1.3 * 4.0);
            assert!((ratio - 1.0).abs() < 0.01);
        }
    }
}
