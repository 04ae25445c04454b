//! Symmetric convex bodies and the norms they induce.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BodyKind {
    Euclidean,
    Ellipsoid { axes: Vec<f64> },
    PNorm { p: f64 },
}

/// A symmetric convex body `B` in `R^d`, identified with the gauge `||x||_B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBody {
    kind: BodyKind,
    dim: usize,
    #[serde(skip)]
    inv_axes: Vec<f64>,
}

impl NormBody {
    pub fn euclidean(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(NormBody { kind: BodyKind::Euclidean, dim, inv_axes: Vec::new() })
    }

    /// Ellipsoid with semi-axes `axes` along the coordinate directions.
    pub fn ellipsoid(axes: Vec<f64>) -> Result<Self> {
        check_dim(axes.len())?;
        if let Some(a) = axes.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::input(format!("ellipsoid axes must be positive and finite, got {a}")));
        }
        let inv_axes = axes.iter().map(|a| 1.0 / a).collect();
        Ok(NormBody { dim: axes.len(), kind: BodyKind::Ellipsoid { axes }, inv_axes })
    }

    pub fn pnorm(dim: usize, p: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(p.is_finite() && p > 1.0) {
            return Err(Error::input(format!("p-norm exponent must lie in (1, inf), got {p}")));
        }
        Ok(NormBody { kind: BodyKind::PNorm { p }, dim, inv_axes: Vec::new() })
    }

    /// Parse `"euclidean"`, `"ellipsoid:a1,a2,..."` or `"pnorm:p"`. The ellipsoid
    /// fixes its own dimension; the other two take `dim`.
    pub fn parse(spec: &str, dim: usize) -> Result<Self> {
        let spec = spec.trim();
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (spec, None),
        };
        match (name.to_ascii_lowercase().as_str(), arg) {
            ("euclidean", None) => NormBody::euclidean(dim),
            ("ellipsoid", Some(a)) => {
                let axes = a
                    .split(',')
                    .map(|t| parse_f64(t.trim()))
                    .collect::<Result<Vec<_>>>()?;
                let body = NormBody::ellipsoid(axes)?;
                if body.dim != dim {
                    return Err(Error::input(format!(
                        "ellipsoid has {} axes but dimension is {dim}",
                        body.dim
                    )));
                }
                Ok(body)
            }
            ("pnorm", Some(p)) => NormBody::pnorm(dim, parse_f64(p)?),
            _ => Err(Error::input(format!(
                "unknown body spec {spec:?} (expected euclidean, ellipsoid:a1,..,ad or pnorm:p)"
            ))),
        }
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether the body meets the smooth, everywhere-curved boundary hypothesis of
    /// the thin-annulus bound. p-norms with `p != 2` have flat or singular points
    /// on the axes and are only stress inputs.
    pub fn has_curved_boundary(&self) -> bool {
        match self.kind {
            BodyKind::Euclidean | BodyKind::Ellipsoid { .. } => true,
            BodyKind::PNorm { p } => p == 2.0,
        }
    }

    /// `||x||_B`.
    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::input(format!(
                "vector has dimension {} but body has dimension {}",
                x.len(),
                self.dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("vector has a non-finite coordinate"));
        }
        Ok(self.gauge_diff(x, &vec![0.0; self.dim]))
    }

    /// `||a - b||_B` without allocation or validation. Both slices must have
    /// length `dim`. This is the single expression every pair counter uses, so
    /// the grid and brute-force counters agree bit for bit.
    #[inline]
    pub fn gauge_diff(&self, a: &[f64], b: &[f64]) -> f64 {
        match &self.kind {
            BodyKind::Euclidean => {
                let mut s = 0.0;
                for i in 0..self.dim {
                    let t = a[i] - b[i];
                    s += t * t;
                }
                s.sqrt()
            }
            BodyKind::Ellipsoid { .. } => {
                let mut s = 0.0;
                for i in 0..self.dim {
                    let t = (a[i] - b[i]) * self.inv_axes[i];
                    s += t * t;
                }
                s.sqrt()
            }
            BodyKind::PNorm { p } => {
                let mut s = 0.0;
                for i in 0..self.dim {
                    s += (a[i] - b[i]).abs().powf(*p);
                }
                s.powf(1.0 / p)
            }
        }
    }

    /// Constants `(c1, c2)` with `c1 |x| <= ||x||_B <= c2 |x|`.
    pub fn equivalence_constants(&self) -> (f64, f64) {
        match &self.kind {
            BodyKind::Euclidean => (1.0, 1.0),
            BodyKind::Ellipsoid { axes } => {
                let max = axes.iter().cloned().fold(f64::MIN, f64::max);
                let min = axes.iter().cloned().fold(f64::MAX, f64::min);
                (1.0 / max, 1.0 / min)
            }
            BodyKind::PNorm { p } => {
                let e = (self.dim as f64).powf(1.0 / p - 0.5);
                if *p >= 2.0 {
                    (e, 1.0)
                } else {
                    (1.0, e)
                }
            }
        }
    }
}

impl fmt::Display for NormBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            BodyKind::Euclidean => write!(f, "euclidean"),
            BodyKind::Ellipsoid { axes } => {
                let parts: Vec<String> = axes.iter().map(|a| a.to_string()).collect();
                write!(f, "ellipsoid:{}", parts.join(","))
            }
            BodyKind::PNorm { p } => write!(f, "pnorm:{p}"),
        }
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(Error::input(format!("dimension must be at least 2, got {dim}")));
    }
    Ok(())
}

fn parse_f64(s: &str) -> Result<f64> {
    f64::from_str(s).map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}
