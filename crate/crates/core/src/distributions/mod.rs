//! Offspring laws and their generating functions.
//!
//! Every law is evaluated through three complement-coordinate primitives at
//! `u = 1 - z`: `Q(1-u) - (1-u)`, `1 - Q'(1-u)` and `Q''(1-u)`. Each kind
//! implements them without subtracting nearly equal numbers, so quantities
//! such as `S(z)` and the pruning operator stay accurate as `z -> 1`, where
//! the attractor dynamics live.

mod coefficients;
mod igw;
mod order;
mod oscillatory;
mod regularity;
mod tokunaga;
mod zipf;

pub use coefficients::{CoefficientLaw, TailBound, CRITICAL_SNAP};
pub use order::{order_distribution, order_distribution_by_recursion, OrderDistribution};
pub use oscillatory::{criticality_constant, normalization_constraint, OscillatoryLaw};
pub use regularity::{regularity_probe, LambdaEstimate, ProbeConfig, RegularityReport, RegularityStatus};
pub use tokunaga::{
    horton_exponent, horton_exponent_self_similar, horton_numbers, igw_constants, tokunaga_analytic, IgwConstants,
    Provenance, TokunagaSequence, TokunagaTable,
};

use serde::{Deserialize, Serialize};

use igw::Igw;
pub(crate) use zipf::survival as zipf_survival;

use crate::{Error, Result};

/// The representation behind an [`OffspringDistribution`].
#[derive(Clone, Debug, PartialEq)]
pub enum Kind {
    /// Finitely many coefficients `q_0..q_b`.
    ExplicitFinite(CoefficientLaw),
    /// `IGW(q)`, `Q(z) = z + q (1-z)^(1/q)`.
    Igw(f64),
    /// `q_0 = 2/3`, `q_k = (4/3)/(k(k^2-1))`.
    ZipfCriticalExample,
    /// Lattice-sum law invariant under pruning but without `S'(1)`.
    OscillatorySum(OscillatoryLaw),
    /// Coefficients up to a cutoff plus certified tail bounds.
    ExplicitWithTail(CoefficientLaw),
    /// The law of `R(T) | T != φ` after one or more prunings of `base`.
    ///
    /// Pruning acts on generating functions as a zoom toward `z = 1`:
    /// with `rho = 1 - q_0`,
    /// `Q_1(z) - z = [Q(1 - rho u) - (1 - rho u)] / (rho (1 - Q'(1 - rho)))`.
    /// Zooms compose by multiplying `rho`, so `n` prunings of `base` are
    /// represented exactly by one accumulated factor.
    Pruned {
        base: Box<OffspringDistribution>,
        rho: f64,
        steps: u32,
    },
}

/// A subcritical or critical offspring law with `q_1 = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRecord", into = "DistributionRecord")]
pub struct OffspringDistribution {
    kind: Kind,
    /// `1 - mean`, zero for critical laws.
    deficit: f64,
}

/// `IGW(q)` for `q` in `[1/2, 1)`.
pub fn igw(q: f64) -> Result<OffspringDistribution> {
    if !(0.5..1.0).contains(&q) {
        return Err(Error::Domain {
            what: "q",
            value: q,
            expected: "[1/2, 1)",
        });
    }
    Ok(OffspringDistribution {
        kind: Kind::Igw(q),
        deficit: 0.0,
    })
}

impl OffspringDistribution {
    /// Law with finite support from `q_0..q_b`.
    pub fn finite(coefficients: Vec<f64>) -> Result<Self> {
        let law = CoefficientLaw::new(coefficients, None)?;
        Ok(Self {
            deficit: law.deficit,
            kind: Kind::ExplicitFinite(law),
        })
    }

    /// Critical binary law `q_0 = q_2 = 1/2`, as explicit coefficients.
    pub fn binary() -> Self {
        Self::finite(vec![0.5, 0.0, 0.5]).expect("binary law is valid")
    }

    pub fn zipf_example() -> Self {
        Self {
            kind: Kind::ZipfCriticalExample,
            deficit: 0.0,
        }
    }

    /// Truncated law with certified bounds on the omitted tail.
    pub fn with_tail(coefficients: Vec<f64>, tail: TailBound) -> Result<Self> {
        let law = CoefficientLaw::new(coefficients, Some(tail))?;
        Ok(Self {
            deficit: law.deficit,
            kind: Kind::ExplicitWithTail(law),
        })
    }

    pub(crate) fn oscillatory(law: OscillatoryLaw) -> Self {
        Self {
            kind: Kind::OscillatorySum(law),
            deficit: 0.0,
        }
    }

    /// Composes one more pruning zoom with factor `rho` onto `self`.
    pub(crate) fn zoomed(&self, rho: f64) -> Self {
        let (base, rho, steps) = match &self.kind {
            Kind::Pruned { base, rho: r, steps } => (base.clone(), r * rho, steps + 1),
            _ => (Box::new(self.clone()), rho, 1),
        };
        let deficit = if base.deficit == 0.0 {
            0.0
        } else {
            base.deficit / base.omq(rho)
        };
        Self {
            kind: Kind::Pruned { base, rho, steps },
            deficit,
        }
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    /// Short name of the representation.
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            Kind::ExplicitFinite(_) => "explicit_finite",
            Kind::Igw(_) => "igw",
            Kind::ZipfCriticalExample => "zipf_critical_example",
            Kind::OscillatorySum(_) => "oscillatory_sum",
            Kind::ExplicitWithTail(_) => "explicit_with_tail",
            Kind::Pruned { .. } => "pruned",
        }
    }

    /// Mean offspring number `Q'(1)`.
    pub fn mean(&self) -> f64 {
        1.0 - self.deficit
    }

    pub fn is_critical(&self) -> bool {
        self.deficit == 0.0
    }

    pub fn q0(&self) -> f64 {
        match &self.kind {
            Kind::ExplicitFinite(c) | Kind::ExplicitWithTail(c) => c.q0(),
            Kind::Igw(q) => *q,
            Kind::ZipfCriticalExample => 2.0 / 3.0,
            Kind::OscillatorySum(o) => o.q0,
            Kind::Pruned { .. } => self.qmz(1.0),
        }
    }

    /// Largest `k` with `q_k > 0`, if finite.
    pub fn support_bound(&self) -> Option<usize> {
        match &self.kind {
            Kind::ExplicitFinite(c) => Some(c.coefficients().len() - 1),
            Kind::Igw(q) if *q == 0.5 => Some(2),
            _ => None,
        }
    }

    /// `Q(1-u) - (1-u)`, computed without cancellation.
    pub fn qmz(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::ExplicitFinite(c) | Kind::ExplicitWithTail(c) => c.qmz(u),
            Kind::Igw(q) => Igw { q: *q }.qmz(u),
            Kind::ZipfCriticalExample => zipf::qmz(u),
            Kind::OscillatorySum(o) => o.qmz(u),
            Kind::Pruned { base, rho, .. } => base.qmz(rho * u) / (rho * base.omq(*rho)),
        }
    }

    /// `1 - Q'(1-u)`, computed without cancellation.
    pub fn omq(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::ExplicitFinite(c) | Kind::ExplicitWithTail(c) => c.omq(u),
            Kind::Igw(q) => Igw { q: *q }.omq(u),
            Kind::ZipfCriticalExample => zipf::omq(u),
            Kind::OscillatorySum(o) => o.omq(u),
            Kind::Pruned { base, rho, .. } => base.omq(rho * u) / base.omq(*rho),
        }
    }

    /// `1 - S(1-u) = u - [Q-z](u)/[1-Q'](u)`, computed without cancellation
    /// where the kind allows it; for subcritical laws it is `O(u^2)`.
    pub fn oms(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::ExplicitFinite(c) | Kind::ExplicitWithTail(c) => c.oms(u),
            Kind::Igw(q) => (1.0 - q) * u,
            Kind::Pruned { base, rho, .. } => base.oms(rho * u) / rho,
            _ => u - self.qmz(u) / self.omq(u),
        }
    }

    /// `Q''(1-u)`; `+inf` at `u = 0` for laws with infinite second moment.
    pub fn d2(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::ExplicitFinite(c) | Kind::ExplicitWithTail(c) => c.d2(u),
            Kind::Igw(q) => Igw { q: *q }.d2(u),
            Kind::ZipfCriticalExample => zipf::d2(u),
            Kind::OscillatorySum(o) => o.d2(u),
            Kind::Pruned { base, rho, .. } => rho * base.d2(rho * u) / base.omq(*rho),
        }
    }

    /// Scaled Taylor coefficients `s^k Q^(k)(1-u)/k!` for `k = 0..=kmax`.
    pub fn taylor(&self, u: f64, s: f64, kmax: usize) -> Vec<f64> {
        let mut out = vec![0.0; kmax + 1];
        out[0] = 1.0 - u + self.qmz(u);
        if kmax >= 1 {
            out[1] = s * (1.0 - self.omq(u));
        }
        self.taylor_high(u, s, kmax, &mut out);
        out
    }

    fn taylor_high(&self, u: f64, s: f64, kmax: usize, out: &mut [f64]) {
        if kmax < 2 {
            return;
        }
        match &self.kind {
            Kind::ExplicitFinite(c) | Kind::ExplicitWithTail(c) => c.taylor_high(u, s, kmax, out),
            Kind::Igw(q) => Igw { q: *q }.taylor_high(u, s, kmax, out),
            Kind::ZipfCriticalExample => zipf::taylor_high(u, s, kmax, out),
            Kind::OscillatorySum(o) => o.taylor_high(u, s, kmax, out),
            Kind::Pruned { base, rho, .. } => {
                let d = rho * base.omq(*rho);
                base.taylor_high(rho * u, rho * s, kmax, out);
                for v in out.iter_mut().skip(2) {
                    *v /= d;
                }
            }
        }
    }

    /// `q_0..=q_kmax`.
    pub fn pmf(&self, kmax: usize) -> Vec<f64> {
        match &self.kind {
            Kind::ExplicitFinite(c) | Kind::ExplicitWithTail(c) => {
                let mut p = c.coefficients().to_vec();
                p.resize(kmax + 1, 0.0);
                p
            }
            Kind::Igw(q) => Igw { q: *q }.pmf(kmax),
            Kind::ZipfCriticalExample => (0..=kmax).map(zipf::pmf_term).collect(),
            _ => {
                let mut p = self.taylor(1.0, 1.0, kmax);
                p[0] = self.q0();
                if kmax >= 1 {
                    p[1] = 0.0;
                }
                p
            }
        }
    }

    /// `Q(z)` from the law's defining representation.
    fn q_value(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::OscillatorySum(o) => o.q_direct(z),
            _ => z + self.qmz(1.0 - z),
        }
    }

    fn dq_value(&self, z: f64) -> f64 {
        match &self.kind {
            Kind::OscillatorySum(o) => o.dq_direct(z),
            _ => 1.0 - self.omq(1.0 - z),
        }
    }

    /// Bound on the evaluation error from an uncertified tail; zero except
    /// for [`Kind::ExplicitWithTail`] and laws built on it.
    pub fn tail_error(&self, z: f64, deriv: u8) -> f64 {
        match &self.kind {
            Kind::ExplicitWithTail(c) => c.tail_error(z, deriv),
            Kind::Pruned { base, rho, .. } => {
                let w = 1.0 - rho * (1.0 - z);
                let d = rho * base.omq(*rho);
                let scale = match deriv {
                    0 => 1.0,
                    1 => *rho,
                    _ => rho * rho,
                };
                scale * base.tail_error(w, deriv) / d
            }
            _ => 0.0,
        }
    }
}

fn check_unit(z: f64, closed: bool) -> Result<()> {
    let ok = if closed {
        (0.0..=1.0).contains(&z)
    } else {
        (0.0..1.0).contains(&z)
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "z",
            value: z,
            expected: if closed { "[0, 1]" } else { "[0, 1)" },
        })
    }
}

/// `Q(z)`, `Q'(z)` or `Q''(z)`. Derivatives at `z = 1` may be `+inf`.
pub fn gf_eval(dist: &OffspringDistribution, z: f64, derivative: u8) -> Result<f64> {
    check_unit(z, true)?;
    match derivative {
        0 => Ok(dist.q_value(z)),
        1 => Ok(dist.dq_value(z)),
        2 => Ok(dist.d2(1.0 - z)),
        _ => Err(Error::Domain {
            what: "derivative",
            value: derivative as f64,
            expected: "{0, 1, 2}",
        }),
    }
}

/// `S(z) = (Q(z) - z Q'(z)) / (1 - Q'(z))`, evaluated as
/// `z + (Q(z) - z)/(1 - Q'(z))`; `S(1) = 1`.
pub fn s_eval(dist: &OffspringDistribution, z: f64) -> Result<f64> {
    check_unit(z, true)?;
    if z == 1.0 {
        return Ok(1.0);
    }
    if let Kind::Igw(q) = dist.kind {
        return Ok(q + (1.0 - q) * z);
    }
    let u = 1.0 - z;
    let den = dist.omq(u);
    if den <= 0.0 {
        return Err(Error::Numerical(format!("Q'({z}) >= 1")));
    }
    Ok(z + dist.qmz(u) / den)
}

/// `g(z) = sum_m E[(X - m - 1)_+] z^m`, so that
/// `Q(z) - z = (1 - z)(1 - mean) + (1 - z)^2 g(z)`.
pub fn g_eval(dist: &OffspringDistribution, z: f64) -> Result<f64> {
    check_unit(z, false)?;
    let u = 1.0 - z;
    Ok(match &dist.kind {
        Kind::ExplicitFinite(c) | Kind::ExplicitWithTail(c) => c.g(z),
        Kind::Igw(q) => Igw { q: *q }.g(u),
        Kind::ZipfCriticalExample => zipf::g(z),
        _ => (dist.qmz(u) - dist.deficit * u) / (u * u),
    })
}

/// Serialized form: `{"kind", "params", "coefficients", "tail_bound"}`, plus
/// `"base"` for pruned laws.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct DistributionRecord {
    kind: String,
    #[serde(default)]
    params: serde_json::Map<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coefficients: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail_bound: Option<TailBound>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    base: Option<Box<OffspringDistribution>>,
}

impl From<OffspringDistribution> for DistributionRecord {
    fn from(d: OffspringDistribution) -> Self {
        let mut params = serde_json::Map::new();
        let mut coefficients = None;
        let mut tail_bound = None;
        let mut base = None;
        let kind = d.kind_name().to_string();
        match d.kind {
            Kind::ExplicitFinite(c) => coefficients = Some(c.q),
            Kind::ExplicitWithTail(c) => {
                tail_bound = c.tail;
                coefficients = Some(c.q);
            }
            Kind::Igw(q) => {
                params.insert("q".into(), q.into());
            }
            Kind::ZipfCriticalExample => {}
            Kind::OscillatorySum(o) => {
                params.insert("q0".into(), o.q0.into());
                params.insert("a".into(), o.a.into());
                params.insert("b".into(), o.b.into());
            }
            Kind::Pruned { base: b, rho, steps } => {
                params.insert("rho".into(), rho.into());
                params.insert("steps".into(), steps.into());
                base = Some(b);
            }
        }
        Self {
            kind,
            params,
            coefficients,
            tail_bound,
            base,
        }
    }
}

impl TryFrom<DistributionRecord> for OffspringDistribution {
    type Error = Error;

    fn try_from(r: DistributionRecord) -> Result<Self> {
        let param = |name: &str| -> Result<f64> {
            r.params
                .get(name)
                .and_then(serde_json::Value::as_f64)
                .ok_or_else(|| Error::InvalidDistribution(format!("missing parameter {name}")))
        };
        let coefficients = || {
            r.coefficients
                .clone()
                .ok_or_else(|| Error::InvalidDistribution("missing coefficients".into()))
        };
        match r.kind.as_str() {
            "explicit_finite" => Self::finite(coefficients()?),
            "explicit_with_tail" => {
                let tail = r
                    .tail_bound
                    .ok_or_else(|| Error::InvalidDistribution("missing tail_bound".into()))?;
                Self::with_tail(coefficients()?, tail)
            }
            "igw" => igw(param("q")?),
            "zipf_critical_example" => Ok(Self::zipf_example()),
            "oscillatory_sum" => {
                let law = OscillatoryLaw {
                    q0: param("q0")?,
                    a: param("a")?,
                    b: param("b")?,
                };
                if !(law.q0 > 0.5 && law.q0 < 1.0) || law.a <= 0.0 {
                    return Err(Error::InvalidDistribution("bad lattice parameters".into()));
                }
                let rho = law.rho();
                if !(law.b > 1.0 / rho && law.b < 1.0 / (rho * rho)) {
                    return Err(Error::InvalidDistribution(format!(
                        "B = {} outside ((1-q0)^-1, (1-q0)^-2)",
                        law.b
                    )));
                }
                Ok(Self::oscillatory(law))
            }
            "pruned" => {
                let base = r
                    .base
                    .clone()
                    .ok_or_else(|| Error::InvalidDistribution("missing base".into()))?;
                let rho = param("rho")?;
                if !(rho > 0.0 && rho <= 0.5) {
                    return Err(Error::InvalidDistribution(format!("zoom factor {rho}")));
                }
                let steps = param("steps")? as u32;
                let mut d = base.zoomed(rho);
                if let Kind::Pruned { steps: s, .. } = &mut d.kind {
                    *s = steps;
                }
                Ok(d)
            }
            other => Err(Error::InvalidDistribution(format!("unknown kind {other}"))),
        }
    }
}
