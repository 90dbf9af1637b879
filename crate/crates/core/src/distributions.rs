//! Unit-mean service-time laws.
//!
//! Every constructor normalizes to mean 1, so all simulator times are in
//! "service units". A distribution is immutable once built and can be
//! shared freely between threads.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};

const MEAN_TOL: f64 = 1e-9;

/// Distribution family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Deterministic,
    Exponential,
    Pareto,
    Weibull,
    TwoPoint,
    Discrete,
}

/// How probability vectors are drawn for random discrete laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplexScheme {
    /// Flat Dirichlet: uniform over the probability simplex.
    UniformSimplex,
    /// Symmetric Dirichlet with concentration 0.1.
    Dirichlet01,
}

impl SimplexScheme {
    pub fn concentration(self) -> f64 {
        match self {
            SimplexScheme::UniformSimplex => 1.0,
            SimplexScheme::Dirichlet01 => 0.1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SimplexScheme::UniformSimplex => "uniform",
            SimplexScheme::Dirichlet01 => "dirichlet01",
        }
    }
}

impl FromStr for SimplexScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" | "uniform_simplex" | "uniformsimplex" | "flat" => {
                Ok(SimplexScheme::UniformSimplex)
            }
            "dirichlet01" | "dirichlet" => Ok(SimplexScheme::Dirichlet01),
            other => Err(invalid("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

/// First two moments of a service law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    /// Squared coefficient of variation, variance / mean^2.
    pub scv: f64,
}

/// Finite atoms, ascending by value.
#[derive(Debug, Clone, PartialEq)]
struct Atoms {
    values: Vec<f64>,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl Atoms {
    fn new(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probs.len() {
            return Err(invalid(
                "discrete",
                "values and probs must be nonempty and of equal length",
            ));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(invalid("values", format!("support value {v} is not strictly positive")));
        }
        if let Some(p) = probs.iter().find(|p| !(**p >= 0.0)) {
            return Err(invalid("probs", format!("probability {p} is negative")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid("probs", format!("probabilities sum to {total}, not 1")));
        }
        let mut pairs: Vec<(f64, f64)> = values.into_iter().zip(probs).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (values, mut probs): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if (total - 1.0).abs() > 1e-12 {
            probs.iter_mut().for_each(|p| *p /= total);
        }
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // Every atom at or after the last positive mass closes the CDF.
        let last_positive = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        cumulative[last_positive..].iter_mut().for_each(|c| *c = 1.0);
        Ok(Atoms {
            values,
            probs,
            cumulative,
        })
    }

    fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }

    fn second_moment(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * v * p).sum()
    }

    fn index_for(&self, u: f64) -> usize {
        // first atom whose cumulative mass strictly exceeds u; zero-mass
        // atoms are never selected
        self.cumulative
            .partition_point(|&c| c <= u)
            .min(self.values.len() - 1)
    }

    fn quantile(&self, q: f64) -> f64 {
        let i = self
            .cumulative
            .partition_point(|&c| c < q)
            .min(self.values.len() - 1);
        self.values[i]
    }

    fn cdf(&self, x: f64) -> f64 {
        match self.values.partition_point(|&v| v <= x) {
            0 => 0.0,
            i => self.cumulative[i - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Law {
    Deterministic,
    Exponential,
    Pareto { alpha: f64, scale: f64 },
    Weibull { shape: f64, scale: f64 },
    TwoPoint { p: f64, atoms: Atoms },
    Discrete(Atoms),
}

/// A unit-mean service-time distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ServiceDistribution {
    law: Law,
}

impl ServiceDistribution {
    pub fn deterministic() -> Self {
        Self {
            law: Law::Deterministic,
        }
    }

    pub fn exponential() -> Self {
        Self {
            law: Law::Exponential,
        }
    }

    /// Pareto with tail index `alpha` and scale `(alpha - 1) / alpha`.
    pub fn pareto(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0) || !alpha.is_finite() {
            return Err(invalid("alpha", format!("{alpha} must exceed 1 for a finite mean")));
        }
        Ok(Self {
            law: Law::Pareto {
                alpha,
                scale: (alpha - 1.0) / alpha,
            },
        })
    }

    /// Weibull with the given shape and scale `1 / Gamma(1 + 1/shape)`.
    pub fn weibull(shape: f64) -> Result<Self> {
        if !(shape > 0.0) || !shape.is_finite() {
            return Err(invalid("shape", format!("{shape} must be positive")));
        }
        Ok(Self {
            law: Law::Weibull {
                shape,
                scale: 1.0 / gamma(1.0 + 1.0 / shape),
            },
        })
    }

    /// Mass `p` at 0.5 and `1 - p` at `(1 - 0.5p) / (1 - p)`.
    pub fn two_point(p: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p) {
            return Err(invalid("p", format!("{p} must lie in [0, 1)")));
        }
        let high = (1.0 - 0.5 * p) / (1.0 - p);
        let atoms = if p == 0.0 {
            Atoms::new(vec![1.0], vec![1.0])?
        } else {
            Atoms::new(vec![0.5, high], vec![p, 1.0 - p])?
        };
        Ok(Self {
            law: Law::TwoPoint { p, atoms },
        })
    }

    /// Explicit finite law. The mean must already be 1.
    pub fn discrete(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let atoms = Atoms::new(values, probs)?;
        let mean = atoms.mean();
        if (mean - 1.0).abs() > MEAN_TOL {
            return Err(invalid("values", format!("mean is {mean}, expected 1")));
        }
        Ok(Self {
            law: Law::Discrete(atoms),
        })
    }

    /// Finite law whose support values are divided by the realized mean.
    pub fn discrete_rescaled(values: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        let atoms = Atoms::new(values, probs)?;
        let mean = atoms.mean();
        let values = atoms.values.iter().map(|v| v / mean).collect();
        Ok(Self {
            law: Law::Discrete(Atoms::new(values, atoms.probs)?),
        })
    }

    /// Random unit-mean law over `support_size` atoms.
    ///
    /// Probabilities over {1, ..., N} come from a symmetric Dirichlet
    /// (normalized Gamma draws); the support is then divided by the
    /// realized mean.
    pub fn random_unit_mean<R: Rng + ?Sized>(
        support_size: usize,
        scheme: SimplexScheme,
        rng: &mut R,
    ) -> Result<Self> {
        if support_size == 0 {
            return Err(invalid("n", "support size must be at least 1"));
        }
        let g = Gamma::new(scheme.concentration(), 1.0).expect("positive concentration");
        let weights = loop {
            let w: Vec<f64> = (0..support_size).map(|_| g.sample(rng)).collect();
            let total: f64 = w.iter().sum();
            if total > 0.0 && total.is_finite() {
                break w.into_iter().map(|x| x / total).collect::<Vec<_>>();
            }
        };
        let mu: f64 = weights
            .iter()
            .enumerate()
            .map(|(i, q)| (i + 1) as f64 * q)
            .sum();
        let values = (1..=support_size).map(|i| i as f64 / mu).collect();
        Ok(Self {
            law: Law::Discrete(Atoms::new(values, weights)?),
        })
    }

    pub fn family(&self) -> Family {
        match self.law {
            Law::Deterministic => Family::Deterministic,
            Law::Exponential => Family::Exponential,
            Law::Pareto { .. } => Family::Pareto,
            Law::Weibull { .. } => Family::Weibull,
            Law::TwoPoint { .. } => Family::TwoPoint,
            Law::Discrete(_) => Family::Discrete,
        }
    }

    /// Support atoms `(value, probability)` for finite laws.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.law {
            Law::TwoPoint { atoms, .. } | Law::Discrete(atoms) => Some(
                atoms
                    .values
                    .iter()
                    .copied()
                    .zip(atoms.probs.iter().copied())
                    .collect(),
            ),
            Law::Deterministic => Some(vec![(1.0, 1.0)]),
            _ => None,
        }
    }

    /// Pareto scale parameter (the support lower bound).
    pub fn pareto_scale(&self) -> Option<f64> {
        match self.law {
            Law::Pareto { scale, .. } => Some(scale),
            _ => None,
        }
    }

    /// Pareto tail index.
    pub fn tail_index(&self) -> Option<f64> {
        match self.law {
            Law::Pareto { alpha, .. } => Some(alpha),
            _ => None,
        }
    }

    /// Whether E[S^order] is finite. Only Pareto laws have infinite moments.
    pub fn has_finite_moment(&self, order: f64) -> bool {
        self.tail_index().is_none_or(|alpha| alpha > order)
    }

    /// Draw one service time.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.law {
            Law::Deterministic => 1.0,
            // 1 - U lies in (0, 1], so the logarithms stay finite
            Law::Exponential => -(1.0 - rng.random::<f64>()).ln(),
            Law::Pareto { alpha, scale } => scale * (1.0 - rng.random::<f64>()).powf(-1.0 / alpha),
            Law::Weibull { shape, scale } => {
                scale * (-(1.0 - rng.random::<f64>()).ln()).powf(1.0 / shape)
            }
            Law::TwoPoint { atoms, .. } | Law::Discrete(atoms) => {
                if atoms.values.len() == 1 {
                    atoms.values[0]
                } else {
                    atoms.values[atoms.index_for(rng.random::<f64>())]
                }
            }
        }
    }

    pub fn moments(&self) -> Moments {
        let (mean, variance) = match &self.law {
            Law::Deterministic => (1.0, 0.0),
            Law::Exponential => (1.0, 1.0),
            Law::Pareto { alpha, scale } => {
                let mean = alpha * scale / (alpha - 1.0);
                let var = if *alpha > 2.0 {
                    scale * scale * alpha / ((alpha - 1.0).powi(2) * (alpha - 2.0))
                } else {
                    f64::INFINITY
                };
                (mean, var)
            }
            Law::Weibull { shape, scale } => {
                let g1 = gamma(1.0 + 1.0 / shape);
                let g2 = gamma(1.0 + 2.0 / shape);
                (scale * g1, scale * scale * (g2 - g1 * g1))
            }
            Law::TwoPoint { atoms, .. } | Law::Discrete(atoms) => {
                let m = atoms.mean();
                (m, (atoms.second_moment() - m * m).max(0.0))
            }
        };
        Moments {
            mean,
            variance,
            scv: variance / (mean * mean),
        }
    }

    /// P(S <= x).
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.law {
            Law::Deterministic => {
                if x >= 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Law::Exponential => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x).exp_m1()
                }
            }
            Law::Pareto { alpha, scale } => {
                if x < *scale {
                    0.0
                } else {
                    1.0 - (scale / x).powf(*alpha)
                }
            }
            Law::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(*shape)).exp_m1()
                }
            }
            Law::TwoPoint { atoms, .. } | Law::Discrete(atoms) => atoms.cdf(x),
        }
    }

    /// Generalized inverse CDF: the smallest x with P(S <= x) >= q.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(invalid("q", format!("{q} must lie strictly inside (0, 1)")));
        }
        Ok(match &self.law {
            Law::Deterministic => 1.0,
            Law::Exponential => -(-q).ln_1p(),
            Law::Pareto { alpha, scale } => scale * (1.0 - q).powf(-1.0 / alpha),
            Law::Weibull { shape, scale } => scale * (-(-q).ln_1p()).powf(1.0 / shape),
            Law::TwoPoint { atoms, .. } | Law::Discrete(atoms) => atoms.quantile(q),
        })
    }

    /// E[min of k independent draws].
    pub fn expected_min_of(&self, k: usize) -> f64 {
        let k = k.max(1);
        let kf = k as f64;
        match &self.law {
            Law::Deterministic => 1.0,
            Law::Exponential => 1.0 / kf,
            Law::Pareto { alpha, scale } => scale * kf * alpha / (kf * alpha - 1.0),
            Law::Weibull { shape, scale } => scale * kf.powf(-1.0 / shape) * gamma(1.0 + 1.0 / shape),
            Law::TwoPoint { atoms, .. } | Law::Discrete(atoms) => {
                // integral of P(S > x)^k over the step function
                let mut prev = 0.0;
                let mut acc = 0.0;
                for (i, &v) in atoms.values.iter().enumerate() {
                    let survival = if i == 0 { 1.0 } else { 1.0 - atoms.cumulative[i - 1] };
                    acc += (v - prev) * survival.max(0.0).powi(k as i32);
                    prev = v;
                }
                acc
            }
        }
    }
}

impl fmt::Display for ServiceDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn list(xs: &[f64]) -> String {
            xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        }
        match &self.law {
            Law::Deterministic => write!(f, "deterministic"),
            Law::Exponential => write!(f, "exponential"),
            Law::Pareto { alpha, .. } => write!(f, "pareto:alpha={alpha}"),
            Law::Weibull { shape, .. } => write!(f, "weibull:shape={shape}"),
            Law::TwoPoint { p, .. } => write!(f, "twopoint:p={p}"),
            Law::Discrete(atoms) => write!(
                f,
                "discrete:values={};probs={}",
                list(&atoms.values),
                list(&atoms.probs)
            ),
        }
    }
}

fn parse_params(spec: &str, body: &str) -> Result<Vec<(String, String)>> {
    body.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::ParseSpec {
                spec: spec.to_string(),
                reason: format!("expected key=value, found `{kv}`"),
            })?;
            Ok((k.trim().to_ascii_lowercase(), v.trim().to_string()))
        })
        .collect()
}

impl FromStr for ServiceDistribution {
    type Err = Error;

    /// Parses `family[:key=value;...]`, e.g. `pareto:alpha=2.1`,
    /// `discrete:values=0.5,1.5;probs=0.5,0.5` or
    /// `random:n=10;scheme=dirichlet01;seed=42`.
    fn from_str(spec: &str) -> Result<Self> {
        let bad = |reason: String| Error::ParseSpec {
            spec: spec.to_string(),
            reason,
        };
        let (family, body) = spec.trim().split_once(':').unwrap_or((spec.trim(), ""));
        let params = parse_params(spec, body)?;
        let get = |key: &str| -> Result<&str> {
            params
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.as_str())
                .ok_or_else(|| bad(format!("missing parameter `{key}`")))
        };
        let num = |key: &str| -> Result<f64> {
            let raw = get(key)?;
            raw.parse::<f64>()
                .map_err(|_| bad(format!("`{key}={raw}` is not a number")))
        };
        let nums = |key: &str| -> Result<Vec<f64>> {
            get(key)?
                .split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| bad(format!("`{x}` in `{key}` is not a number")))
                })
                .collect()
        };
        let allowed: &[&str] = match family.to_ascii_lowercase().as_str() {
            "deterministic" | "det" | "exponential" | "exp" => &[],
            "pareto" => &["alpha"],
            "weibull" => &["shape"],
            "twopoint" | "two_point" | "two-point" => &["p"],
            "discrete" => &["values", "probs"],
            "random" => &["n", "scheme", "seed"],
            other => return Err(bad(format!("unknown family `{other}`"))),
        };
        if let Some((k, _)) = params.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
            return Err(bad(format!("unexpected parameter `{k}`")));
        }
        match family.to_ascii_lowercase().as_str() {
            "deterministic" | "det" => Ok(Self::deterministic()),
            "exponential" | "exp" => Ok(Self::exponential()),
            "pareto" => Self::pareto(num("alpha")?),
            "weibull" => Self::weibull(num("shape")?),
            "twopoint" | "two_point" | "two-point" => Self::two_point(num("p")?),
            "discrete" => Self::discrete(nums("values")?, nums("probs")?),
            "random" => {
                let n = get("n")?
                    .parse::<usize>()
                    .map_err(|_| bad("`n` must be a positive integer".into()))?;
                let scheme: SimplexScheme = get("scheme")?.parse()?;
                let seed = get("seed")?
                    .parse::<u64>()
                    .map_err(|_| bad("`seed` must be an unsigned integer".into()))?;
                let mut rng = crate::rng::child(seed, &[n as u64]);
                Self::random_unit_mean(n, scheme, &mut rng)
            }
            _ => unreachable!(),
        }
    }
}

impl TryFrom<String> for ServiceDistribution {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ServiceDistribution> for String {
    fn from(d: ServiceDistribution) -> String {
        d.to_string()
    }
}
