use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Descriptor of the ambient space and its boundedness.
///
/// | kind          | X            | forbidden set C | K_m                                  |
/// |---------------|--------------|-----------------|--------------------------------------|
/// | `euclidean`   | R^k          | none            | open ball of radius m about 0        |
/// | `weak`        | R^k          | none            | X                                    |
/// | `punctured`   | R^k \ {0}    | {0}             | {\|x\| > 1/m} (and \|x\| < m if capped) |
/// | `halfline_hl` | (0, inf)     | {0}             | (1/m, inf)                           |
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceKind {
    Euclidean {
        dim: usize,
    },
    Weak {
        dim: usize,
    },
    Punctured {
        dim: usize,
        #[serde(default)]
        cap: bool,
    },
    HalflineHl,
}

/// Which metric to use for distances and thickenings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricChoice {
    /// The ambient Euclidean metric d'.
    Base,
    /// The metric whose bounded sets are exactly the space's bounded sets.
    #[default]
    Hu,
}

/// A point of the ground space. Coordinates are finite; `-0.0` is stored as `0.0`
/// so that exact coordinate equality is well behaved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(
            coords
                .into_iter()
                .map(|c| if c == 0.0 { 0.0 } else { c })
                .collect(),
        )
    }

    pub fn scalar(x: f64) -> Self {
        Point::new(vec![x])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        if self.0.len() == 1 {
            self.0[0].abs()
        } else {
            self.0.iter().map(|c| c * c).sum::<f64>().sqrt()
        }
    }

    /// Lexicographic total order on coordinates.
    pub fn total_cmp(&self, other: &Point) -> Ordering {
        for (a, b) in self.0.iter().zip(&other.0) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.0.len().cmp(&other.0.len())
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.len() == 1 {
            write!(f, "{}", self.0[0])
        } else {
            write!(f, "{:?}", self.0)
        }
    }
}

pub(crate) fn euclid(x: &[f64], y: &[f64]) -> f64 {
    if x.len() == 1 {
        (x[0] - y[0]).abs()
    } else {
        x.iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// A metric space from the catalogue together with its proper localizing sequence.
///
/// Values are immutable and `Copy`; sharing across threads needs no synchronization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SpaceKind", into = "SpaceKind")]
pub struct GroundSpace {
    kind: SpaceKind,
}

impl TryFrom<SpaceKind> for GroundSpace {
    type Error = Error;

    fn try_from(kind: SpaceKind) -> Result<Self> {
        match kind {
            SpaceKind::Euclidean { dim } | SpaceKind::Weak { dim } | SpaceKind::Punctured { dim, .. }
                if dim == 0 =>
            {
                Err(Error::InvalidSpace("dimension must be at least 1".into()))
            }
            _ => Ok(GroundSpace { kind }),
        }
    }
}

impl From<GroundSpace> for SpaceKind {
    fn from(s: GroundSpace) -> Self {
        s.kind
    }
}

impl fmt::Display for GroundSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SpaceKind::Euclidean { dim } => write!(f, "euclidean({dim})"),
            SpaceKind::Weak { dim } => write!(f, "weak({dim})"),
            SpaceKind::Punctured { dim, cap: false } => write!(f, "punctured({dim})"),
            SpaceKind::Punctured { dim, cap: true } => write!(f, "punctured({dim}, capped)"),
            SpaceKind::HalflineHl => write!(f, "halfline_hl"),
        }
    }
}

impl GroundSpace {
    pub fn new(kind: SpaceKind) -> Result<Self> {
        GroundSpace::try_from(kind)
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        GroundSpace::new(SpaceKind::Euclidean { dim })
    }

    pub fn weak(dim: usize) -> Result<Self> {
        GroundSpace::new(SpaceKind::Weak { dim })
    }

    pub fn punctured(dim: usize, cap: bool) -> Result<Self> {
        GroundSpace::new(SpaceKind::Punctured { dim, cap })
    }

    pub fn halfline() -> Self {
        GroundSpace {
            kind: SpaceKind::HalflineHl,
        }
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            SpaceKind::Euclidean { dim } | SpaceKind::Weak { dim } | SpaceKind::Punctured { dim, .. } => {
                dim
            }
            SpaceKind::HalflineHl => 1,
        }
    }

    /// True for the kinds whose bounded sets are those bounded away from C = {0}.
    pub fn has_forbidden_set(&self) -> bool {
        matches!(self.kind, SpaceKind::Punctured { .. } | SpaceKind::HalflineHl)
    }

    pub fn is_weak(&self) -> bool {
        matches!(self.kind, SpaceKind::Weak { .. })
    }

    pub(crate) fn capped(&self) -> bool {
        matches!(self.kind, SpaceKind::Punctured { cap: true, .. })
    }

    pub(crate) fn ensure_same(&self, other: &GroundSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }

    /// Validates that `x` is a point of X.
    pub fn check_point(&self, x: &Point) -> Result<()> {
        let bad = |reason: &str| {
            Err(Error::InvalidPoint {
                coords: x.coords().to_vec(),
                reason: reason.to_string(),
            })
        };
        if x.dim() != self.dim() {
            return bad(&format!("expected {} coordinates", self.dim()));
        }
        if x.coords().iter().any(|c| !c.is_finite()) {
            return bad("coordinates must be finite");
        }
        match self.kind {
            SpaceKind::HalflineHl if x.coords()[0] <= 0.0 => bad("halfline points must be > 0"),
            SpaceKind::Punctured { .. } if x.coords().iter().all(|&c| c == 0.0) => {
                bad("the origin is excluded from the punctured space")
            }
            _ => Ok(()),
        }
    }

    /// Builds a validated point.
    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        let p = Point::new(coords);
        self.check_point(&p)?;
        Ok(p)
    }

    /// The ambient Euclidean metric d'.
    pub fn base_metric(&self, x: &Point, y: &Point) -> f64 {
        euclid(x.coords(), y.coords())
    }

    /// x -> d'(x, C); identically +inf for kinds without a forbidden set.
    pub fn forbidden_set_dist(&self, x: &Point) -> f64 {
        match self.kind {
            SpaceKind::HalflineHl => x.coords()[0],
            SpaceKind::Punctured { .. } => x.norm(),
            _ => f64::INFINITY,
        }
    }

    /// Metric generating both the topology and the boundedness.
    ///
    /// For kinds with C = {0} this is `(d' ∧ 1) ∨ |1/d'(x,C) - 1/d'(y,C)|`.
    /// Euclidean kind uses d' itself; weak kind uses the bounded metric d' ∧ 1.
    pub fn hu_metric(&self, x: &Point, y: &Point) -> f64 {
        let d = self.base_metric(x, y);
        match self.kind {
            SpaceKind::Euclidean { .. } => d,
            SpaceKind::Weak { .. } => d.min(1.0),
            _ => {
                let rx = self.forbidden_set_dist(x);
                let ry = self.forbidden_set_dist(y);
                hu_from_parts(d, rx, ry)
            }
        }
    }

    pub fn distance(&self, x: &Point, y: &Point, metric: MetricChoice) -> f64 {
        match metric {
            MetricChoice::Base => self.base_metric(x, y),
            MetricChoice::Hu => self.hu_metric(x, y),
        }
    }

    /// Membership of `x` in the m-th localizing set K_m.
    pub fn in_level(&self, x: &Point, m: u32) -> bool {
        let m = m.max(1) as f64;
        match self.kind {
            SpaceKind::Euclidean { .. } => x.norm() < m,
            SpaceKind::Weak { .. } => true,
            SpaceKind::Punctured { cap, .. } => {
                let r = x.norm();
                r > 1.0 / m && (!cap || r < m)
            }
            SpaceKind::HalflineHl => x.coords()[0] > 1.0 / m,
        }
    }

    /// Membership of `x` in the closure (within X) of K_m.
    pub fn in_level_closure(&self, x: &Point, m: u32) -> bool {
        let m = m.max(1) as f64;
        match self.kind {
            SpaceKind::Euclidean { .. } => x.norm() <= m,
            SpaceKind::Weak { .. } => true,
            SpaceKind::Punctured { cap, .. } => {
                let r = x.norm();
                r >= 1.0 / m && (!cap || r <= m)
            }
            SpaceKind::HalflineHl => x.coords()[0] >= 1.0 / m,
        }
    }

    /// Smallest m with x in K_m (saturating at `u32::MAX`).
    pub fn level_of(&self, x: &Point) -> u32 {
        let guess = match self.kind {
            SpaceKind::Euclidean { .. } => x.norm().floor() + 1.0,
            SpaceKind::Weak { .. } => 1.0,
            SpaceKind::Punctured { cap, .. } => {
                let r = x.norm();
                let inner = (1.0 / r).floor() + 1.0;
                if cap {
                    inner.max(r.floor() + 1.0)
                } else {
                    inner
                }
            }
            SpaceKind::HalflineHl => (1.0 / x.coords()[0]).floor() + 1.0,
        };
        smallest_level(|m| self.in_level(x, m), guess).unwrap_or(u32::MAX)
    }

    /// Urysohn-type bump g_m with 1 on the closure of K_m and 0 off K_{m+1},
    /// piecewise linear in the localizing parameter (|x| for the Euclidean kind,
    /// 1/d'(x, C) for kinds with C, and |x| again for the cap of a capped space).
    pub fn bump(&self, m: u32, x: &Point) -> f64 {
        let m = m.max(1);
        let mf = m as f64;
        match self.kind {
            SpaceKind::Weak { .. } => 1.0,
            SpaceKind::Euclidean { .. } => outer_ramp(x.norm(), mf),
            SpaceKind::HalflineHl => inner_ramp(x.coords()[0], mf),
            SpaceKind::Punctured { cap, .. } => {
                let r = x.norm();
                let g = inner_ramp(r, mf);
                if cap {
                    g.min(outer_ramp(r, mf))
                } else {
                    g
                }
            }
        }
    }
}

/// Combines base distance and radial distances into the Hu metric value.
pub(crate) fn hu_from_parts(d: f64, rx: f64, ry: f64) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    d.min(1.0).max((1.0 / rx - 1.0 / ry).abs())
}

// 1 for r >= 1/m, 0 for r <= 1/(m+1), linear in 1/r in between.
fn inner_ramp(r: f64, m: f64) -> f64 {
    if r >= 1.0 / m {
        1.0
    } else if r <= 1.0 / (m + 1.0) {
        0.0
    } else {
        (m + 1.0 - 1.0 / r).clamp(0.0, 1.0)
    }
}

// 1 for r <= m, 0 for r >= m+1, linear in r in between.
fn outer_ramp(r: f64, m: f64) -> f64 {
    if r <= m {
        1.0
    } else if r >= m + 1.0 {
        0.0
    } else {
        (m + 1.0 - r).clamp(0.0, 1.0)
    }
}

/// Smallest positive level satisfying a predicate that is monotone in m, searched
/// around a floating-point guess. Returns `None` when the guess overflows u32.
pub(crate) fn smallest_level(pred: impl Fn(u32) -> bool, guess: f64) -> Option<u32> {
    if !(guess < u32::MAX as f64 - 2.0) {
        return None;
    }
    let mut m = (guess.max(1.0)) as u32;
    while !pred(m) {
        m = m.checked_add(1)?;
        if m == u32::MAX {
            return None;
        }
    }
    while m > 1 && pred(m - 1) {
        m -= 1;
    }
    Some(m)
}
