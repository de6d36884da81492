//! The potential φ: catalog entries with exact certificates, generic
//! closures with sampled estimates, pointwise (Nemytskii) application to
//! fields and Lipschitz bounds on symmetric intervals.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mesh::Field;

/// Number of uniform sample points used for sampled Lipschitz estimates.
pub const LIPSCHITZ_SAMPLES: usize = 10_000;

/// Tolerance of the nonnegativity spot check in [`nemytskii`].
pub const NONNEGATIVE_TOL: f64 = 1e-14;

/// Catalog names accepted by [`catalog`].
pub const CATALOG_NAMES: [&str; 6] = [
    "zero",
    "constant",
    "quadratic",
    "absval",
    "bounded_sine",
    "linear_growth",
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Zero,
    Constant(f64),
    Quadratic,
    AbsVal,
    /// `a (1 + sin(ω s))`
    BoundedSine {
        a: f64,
        omega: f64,
    },
    /// `a (1 + |s|) / 2`
    LinearGrowth(f64),
}

impl Kind {
    fn eval(self, s: f64) -> f64 {
        match self {
            Kind::Zero => 0.0,
            Kind::Constant(c) => c,
            Kind::Quadratic => s * s,
            Kind::AbsVal => s.abs(),
            Kind::BoundedSine { a, omega } => a * (1.0 + (omega * s).sin()),
            Kind::LinearGrowth(a) => 0.5 * a * (1.0 + s.abs()),
        }
    }

    /// Exact `sup |φ(s) − φ(t)| / |s − t|` over `[−S₀, S₀]`.
    fn lipschitz(self, s0: f64) -> f64 {
        match self {
            Kind::Zero | Kind::Constant(_) => 0.0,
            Kind::Quadratic => 2.0 * s0,
            Kind::AbsVal => 1.0,
            // |cos| reaches 1 at s = 0, which every interval contains
            Kind::BoundedSine { a, omega } => a.abs() * omega.abs(),
            Kind::LinearGrowth(a) => 0.5 * a.abs(),
        }
    }
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Source {
    Catalog(Kind),
    Generic {
        eval: Evaluator,
        locally_lipschitz: bool,
    },
}

/// A potential together with the certificates it carries.
#[derive(Clone)]
pub struct Potential {
    name: String,
    source: Source,
    nonnegative: bool,
    growth: Option<f64>,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Potential")
            .field("name", &self.name)
            .field("nonnegative", &self.nonnegative)
            .field("growth", &self.growth)
            .finish_non_exhaustive()
    }
}

/// Upper estimate of the Lipschitz constant of φ on `[−S₀, S₀]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum LipschitzBound {
    /// Closed-form constant of a catalog potential.
    Exact(f64),
    /// Largest adjacent difference quotient over a uniform sample; biased low.
    Estimate(f64),
    /// φ is declared merely continuous.
    NotApplicable,
}

impl LipschitzBound {
    pub fn value(self) -> Option<f64> {
        match self {
            LipschitzBound::Exact(v) | LipschitzBound::Estimate(v) => Some(v),
            LipschitzBound::NotApplicable => None,
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, LipschitzBound::Exact(_))
    }
}

impl Potential {
    /// Wraps an arbitrary continuous function.
    ///
    /// Claimed certificates are spot-checked on a sample of `[−100, 100]`
    /// and again on every [`nemytskii`] call.
    pub fn generic(
        name: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        nonnegative: bool,
        growth: Option<f64>,
        locally_lipschitz: bool,
    ) -> Result<Self> {
        let phi = Potential {
            name: name.into(),
            source: Source::Generic {
                eval: Arc::new(eval),
                locally_lipschitz,
            },
            nonnegative,
            growth,
        };
        if let Some(a) = growth {
            if !(a.is_finite() && a >= 0.0) {
                return Err(invalid("growth", format!("constant must be ≥ 0, got {a}")));
            }
        }
        for i in 0..=2000 {
            let s = -100.0 + 0.1 * i as f64;
            phi.check_certificates(s, phi.eval(s))?;
        }
        Ok(phi)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, s: f64) -> f64 {
        match &self.source {
            Source::Catalog(k) => k.eval(s),
            Source::Generic { eval, .. } => eval(s),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }

    /// Constant `a` certifying `φ(s) ≤ a(1 + |s|)`, if known.
    pub fn growth(&self) -> Option<f64> {
        self.growth
    }

    /// True when φ does not depend on its argument, so Φ is constant.
    pub fn is_constant(&self) -> bool {
        matches!(
            self.source,
            Source::Catalog(Kind::Zero) | Source::Catalog(Kind::Constant(_))
        )
    }

    pub fn lipschitz_on(&self, s0: f64) -> LipschitzBound {
        let s0 = s0.max(0.0);
        match &self.source {
            Source::Catalog(k) => LipschitzBound::Exact(k.lipschitz(s0)),
            Source::Generic {
                locally_lipschitz: false,
                ..
            } => LipschitzBound::NotApplicable,
            Source::Generic { eval, .. } => {
                if s0 == 0.0 {
                    return LipschitzBound::Estimate(0.0);
                }
                let m = LIPSCHITZ_SAMPLES;
                let ds = 2.0 * s0 / (m - 1) as f64;
                let mut prev = eval(-s0);
                let mut best: f64 = 0.0;
                for i in 1..m {
                    let v = eval(-s0 + i as f64 * ds);
                    best = best.max((v - prev).abs() / ds);
                    prev = v;
                }
                LipschitzBound::Estimate(best)
            }
        }
    }

    fn check_certificates(&self, s: f64, value: f64) -> Result<()> {
        if self.nonnegative && value < -NONNEGATIVE_TOL {
            return Err(Error::CertificateViolation {
                potential: self.name.clone(),
                certificate: "nonnegativity",
                argument: s,
                value,
            });
        }
        if let Some(a) = self.growth {
            let bound = a * (1.0 + s.abs());
            if value > bound + 1e-12 * bound.abs().max(1.0) {
                return Err(Error::CertificateViolation {
                    potential: self.name.clone(),
                    certificate: "linear growth",
                    argument: s,
                    value,
                });
            }
        }
        Ok(())
    }
}

/// Builds a catalog potential.
///
/// | name            | params     | φ(s)                 |
/// |-----------------|------------|----------------------|
/// | `zero`          | –          | 0                    |
/// | `constant`      | `[c]`      | c                    |
/// | `quadratic`     | –          | s²                   |
/// | `absval`        | –          | \|s\|                |
/// | `bounded_sine`  | `[a, ω]`   | a(1 + sin ωs)        |
/// | `linear_growth` | `[a]`      | a(1 + \|s\|)/2       |
pub fn catalog(name: &str, params: &[f64]) -> Result<Potential> {
    if let Some(p) = params.iter().find(|p| !p.is_finite()) {
        return Err(invalid("params", format!("non-finite parameter {p}")));
    }
    let arity = |expected: usize| -> Result<()> {
        if params.len() == expected {
            Ok(())
        } else {
            Err(invalid(
                "params",
                format!(
                    "`{name}` takes {expected} parameter(s), got {}",
                    params.len()
                ),
            ))
        }
    };
    let (kind, nonnegative, growth) = match name {
        "zero" => {
            arity(0)?;
            (Kind::Zero, true, Some(0.0))
        }
        "constant" => {
            arity(1)?;
            let c = params[0];
            (Kind::Constant(c), c >= 0.0, Some(c.max(0.0)))
        }
        "quadratic" => {
            arity(0)?;
            (Kind::Quadratic, true, None)
        }
        "absval" => {
            arity(0)?;
            (Kind::AbsVal, true, Some(1.0))
        }
        "bounded_sine" => {
            arity(2)?;
            let (a, omega) = (params[0], params[1]);
            if a < 0.0 {
                return Err(invalid("params", "bounded_sine amplitude must be ≥ 0"));
            }
            (Kind::BoundedSine { a, omega }, true, Some(2.0 * a))
        }
        "linear_growth" => {
            arity(1)?;
            let a = params[0];
            if a <= 0.0 {
                return Err(invalid("params", "linear_growth constant must be > 0"));
            }
            (Kind::LinearGrowth(a), true, Some(a))
        }
        other => return Err(Error::UnknownPotential(other.to_string())),
    };
    Ok(Potential {
        name: name.to_string(),
        source: Source::Catalog(kind),
        nonnegative,
        growth,
    })
}

/// Pointwise `w_i = φ(v_i)`.
pub fn nemytskii(phi: &Potential, v: &Field) -> Result<Field> {
    let mut out = Vec::with_capacity(v.len());
    for (node, &s) in v.values().iter().enumerate() {
        let value = phi.eval(s);
        if !value.is_finite() {
            return Err(Error::Evaluation {
                node,
                argument: s,
                value,
            });
        }
        phi.check_certificates(s, value)?;
        out.push(value);
    }
    Field::new(*v.grid(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Grid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::line(1.0, 17).unwrap()
    }

    #[test]
    fn nemytskii_examples() {
        let zero = catalog("zero", &[]).unwrap();
        let v = Field::from_fn(grid(), |x| (PI * x[0]).sin()).unwrap();
        assert_eq!(nemytskii(&zero, &v).unwrap(), Field::zeros(grid()));

        let sq = catalog("quadratic", &[]).unwrap();
        let w = nemytskii(&sq, &v).unwrap();
        for (wi, vi) in w.values().iter().zip(v.values()) {
            assert_eq!(*wi, vi * vi);
        }

        let abs = catalog("absval", &[]).unwrap();
        let w = nemytskii(&abs, &Field::constant(grid(), -3.0).unwrap()).unwrap();
        assert!(w.values().iter().all(|&x| x == 3.0));
    }

    #[test]
    fn nemytskii_reports_non_finite_node() {
        let phi = Potential::generic("recip", |s| 1.0 / s, false, None, false).unwrap();
        let v = Field::new(Grid::line(1.0, 3).unwrap(), vec![1.0, 0.0, 2.0]).unwrap();
        match nemytskii(&phi, &v) {
            Err(Error::Evaluation { node, .. }) => assert_eq!(node, 1),
            other => panic!("expected evaluation error, got {other:?}"),
        }
    }

    #[test]
    fn certificates_are_enforced() {
        assert!(matches!(
            Potential::generic("neg", |s| s, true, None, true),
            Err(Error::CertificateViolation {
                certificate: "nonnegativity",
                ..
            })
        ));
        assert!(matches!(
            Potential::generic("fast", |s| s * s, true, Some(1.0), true),
            Err(Error::CertificateViolation {
                certificate: "linear growth",
                ..
            })
        ));
        // a certificate that only fails outside the construction sample
        let sneaky = Potential::generic(
            "sneaky",
            |s: f64| if s.abs() > 500.0 { -1.0 } else { 0.0 },
            true,
            None,
            true,
        )
        .unwrap();
        let v = Field::constant(grid(), 1000.0).unwrap();
        assert!(matches!(
            nemytskii(&sneaky, &v),
            Err(Error::CertificateViolation { .. })
        ));
    }

    #[test]
    fn catalog_certificates() {
        let c = catalog("constant", &[2.0]).unwrap();
        assert!(c.is_nonnegative());
        assert_eq!(c.lipschitz_on(10.0), LipschitzBound::Exact(0.0));
        assert!(!catalog("constant", &[-1.0]).unwrap().is_nonnegative());

        let q = catalog("quadratic", &[]).unwrap();
        assert!(q.is_nonnegative());
        assert_eq!(q.growth(), None);
        assert_eq!(q.lipschitz_on(2.0), LipschitzBound::Exact(4.0));

        let lg = catalog("linear_growth", &[3.0]).unwrap();
        assert_eq!(lg.growth(), Some(3.0));
        assert_eq!(lg.eval(-1.0), 3.0);
        assert_eq!(lg.lipschitz_on(5.0), LipschitzBound::Exact(1.5));

        let bs = catalog("bounded_sine", &[0.5, 3.0]).unwrap();
        assert_eq!(bs.lipschitz_on(0.1), LipschitzBound::Exact(1.5));
        assert_eq!(bs.growth(), Some(1.0));
    }

    #[test]
    fn catalog_errors() {
        assert!(matches!(
            catalog("cubic", &[]),
            Err(Error::UnknownPotential(_))
        ));
        assert!(catalog("constant", &[]).is_err());
        assert!(catalog("quadratic", &[1.0]).is_err());
        assert!(catalog("linear_growth", &[0.0]).is_err());
        assert!(catalog("constant", &[f64::NAN]).is_err());
        for name in CATALOG_NAMES {
            let params: &[f64] = match name {
                "constant" | "linear_growth" => &[1.0],
                "bounded_sine" => &[1.0, 1.0],
                _ => &[],
            };
            assert_eq!(catalog(name, params).unwrap().name(), name);
        }
    }

    #[test]
    fn sampled_lipschitz_of_sine() {
        let phi = Potential::generic("sin", f64::sin, false, None, true).unwrap();
        let l = phi.lipschitz_on(10.0);
        assert!(!l.is_exact());
        let v = l.value().unwrap();
        assert!((0.999..=1.0).contains(&v), "{v}");
        // dense brute-force oracle over all pairs of a coarse sample
        let pts: Vec<f64> = (0..400).map(|i| -10.0 + 20.0 * i as f64 / 399.0).collect();
        let mut brute: f64 = 0.0;
        for (i, s) in pts.iter().enumerate() {
            for t in &pts[i + 1..] {
                brute = brute.max((s.sin() - t.sin()).abs() / (t - s));
            }
        }
        assert!(v >= brute - 1e-12);
    }

    #[test]
    fn non_lipschitz_potential_is_flagged() {
        let phi =
            Potential::generic("sqrt", |s: f64| s.abs().sqrt(), true, Some(1.0), false).unwrap();
        assert_eq!(phi.lipschitz_on(1.0), LipschitzBound::NotApplicable);
        assert_eq!(phi.lipschitz_on(1.0).value(), None);
    }

    fn catalog_strategy() -> impl Strategy<Value = Potential> {
        prop_oneof![
            Just(catalog("zero", &[]).unwrap()),
            (0.0f64..5.0).prop_map(|c| catalog("constant", &[c]).unwrap()),
            Just(catalog("quadratic", &[]).unwrap()),
            Just(catalog("absval", &[]).unwrap()),
            (0.0f64..3.0, 0.1f64..4.0).prop_map(|(a, w)| catalog("bounded_sine", &[a, w]).unwrap()),
            (0.1f64..3.0).prop_map(|a| catalog("linear_growth", &[a]).unwrap()),
        ]
    }

    proptest! {
        #[test]
        fn lipschitz_monotone_in_radius(phi in catalog_strategy(), a in 0.0f64..20.0, b in 0.0f64..20.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(phi.lipschitz_on(lo).value().unwrap() <= phi.lipschitz_on(hi).value().unwrap());
        }

        #[test]
        fn exact_lipschitz_bounds_quotients(phi in catalog_strategy(), s0 in 0.01f64..10.0, x in -1.0f64..1.0, y in -1.0f64..1.0) {
            prop_assume!(x != y);
            let l = phi.lipschitz_on(s0).value().unwrap();
            let (s, t) = (x * s0, y * s0);
            let q = (phi.eval(s) - phi.eval(t)).abs() / (s - t).abs();
            prop_assert!(q <= l * (1.0 + 1e-9) + 1e-12);
        }

        #[test]
        fn nemytskii_is_pointwise(phi in catalog_strategy(), vals in proptest::collection::vec(-50.0f64..50.0, 1..40)) {
            let g = Grid::line(1.0, vals.len()).unwrap();
            let v = Field::new(g, vals.clone()).unwrap();
            let w = nemytskii(&phi, &v).unwrap();
            for (i, s) in vals.iter().enumerate() {
                prop_assert_eq!(w.values()[i], phi.eval(*s));
                prop_assert!(w.values()[i] >= -NONNEGATIVE_TOL);
            }
        }
    }
}
