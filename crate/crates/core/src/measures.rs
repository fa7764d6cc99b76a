//! Purely atomic measures.
//!
//! [`DiscreteMeasure`] holds finitely many weighted atoms. A
//! [`LocallyFiniteMeasure`] is a lazily materialized family of restrictions to the
//! localizing sets K_m, which lets measures of infinite total mass be handled at
//! bounded cost.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::boundedness::{GroundSpace, Point, Region};
use crate::error::{Error, Result};

/// A weighted point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Atom {
    pub x: Point,
    pub w: f64,
}

/// A finite measure with finitely many atoms, sorted by coordinates and merged
/// on exact coordinate equality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MeasureFile", into = "MeasureFile")]
pub struct DiscreteMeasure {
    space: GroundSpace,
    atoms: Vec<Atom>,
}

/// On-disk layout of a measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureFile {
    pub space: GroundSpace,
    pub atoms: Vec<Atom>,
    /// When set, every listed weight must equal 1.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub point_measure: bool,
}

impl TryFrom<MeasureFile> for DiscreteMeasure {
    type Error = Error;

    fn try_from(file: MeasureFile) -> Result<Self> {
        if file.point_measure {
            if let Some(a) = file.atoms.iter().find(|a| a.w != 1.0) {
                return Err(Error::NotPointMeasure(format!(
                    "atom at {} has weight {}, expected 1",
                    a.x, a.w
                )));
            }
        }
        DiscreteMeasure::new(file.space, file.atoms.into_iter().map(|a| (a.x, a.w)).collect())
    }
}

impl From<DiscreteMeasure> for MeasureFile {
    fn from(m: DiscreteMeasure) -> Self {
        MeasureFile {
            space: m.space,
            atoms: m.atoms,
            point_measure: false,
        }
    }
}

impl DiscreteMeasure {
    /// Builds a measure, validating points and weights and merging duplicates.
    pub fn new(space: GroundSpace, atoms: Vec<(Point, f64)>) -> Result<Self> {
        for (x, w) in &atoms {
            space.check_point(x)?;
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::InvalidWeight(*w));
            }
        }
        Ok(Self::from_valid(space, atoms.into_iter().map(|(x, w)| Atom { x, w }).collect()))
    }

    /// Unit-weight atoms; repeated points become integer multiplicities.
    pub fn from_points(space: GroundSpace, points: Vec<Point>) -> Result<Self> {
        Self::new(space, points.into_iter().map(|x| (x, 1.0)).collect())
    }

    /// One-dimensional convenience constructor.
    pub fn from_scalars(space: GroundSpace, atoms: &[(f64, f64)]) -> Result<Self> {
        Self::new(space, atoms.iter().map(|&(x, w)| (Point::scalar(x), w)).collect())
    }

    pub fn dirac(space: GroundSpace, x: Point, w: f64) -> Result<Self> {
        Self::new(space, vec![(x, w)])
    }

    pub fn zero(space: GroundSpace) -> Self {
        DiscreteMeasure {
            space,
            atoms: Vec::new(),
        }
    }

    pub(crate) fn from_valid(space: GroundSpace, mut atoms: Vec<Atom>) -> Self {
        atoms.sort_by(|a, b| a.x.total_cmp(&b.x));
        let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
        for a in atoms {
            match merged.last_mut() {
                Some(last) if last.x == a.x => last.w += a.w,
                _ => merged.push(a),
            }
        }
        DiscreteMeasure { space, atoms: merged }
    }

    pub fn space(&self) -> GroundSpace {
        self.space
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.w).sum()
    }

    /// True when every weight is a positive integer (a counting measure).
    pub fn is_point_measure(&self) -> bool {
        self.atoms.iter().all(|a| a.w.fract() == 0.0)
    }

    /// Atoms lying in `region`, weights unchanged.
    pub fn restrict(&self, region: &Region) -> Result<Self> {
        let c = self.space.compile(region)?;
        Ok(self.filter(|x| c.contains(x)))
    }

    /// Restriction to the localizing set K_m.
    pub fn restrict_to_level(&self, m: u32) -> Self {
        self.filter(|x| self.space.in_level(x, m))
    }

    fn filter(&self, keep: impl Fn(&Point) -> bool) -> Self {
        DiscreteMeasure {
            space: self.space,
            atoms: self.atoms.iter().filter(|a| keep(&a.x)).cloned().collect(),
        }
    }

    /// Σ weight · f(point).
    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.atoms.iter().map(|a| a.w * f(&a.x)).sum()
    }

    pub fn mass(&self, region: &Region) -> Result<f64> {
        let c = self.space.compile(region)?;
        Ok(self.atoms.iter().filter(|a| c.contains(&a.x)).map(|a| a.w).sum())
    }

    /// Mass of the atoms lying exactly on the boundary of `region` (relative to X).
    pub fn boundary_mass(&self, region: &Region) -> Result<f64> {
        let c = self.space.compile(region)?;
        Ok(self.atoms.iter().filter(|a| c.on_boundary(&a.x)).map(|a| a.w).sum())
    }

    pub fn add(&self, other: &DiscreteMeasure) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        let atoms = self.atoms.iter().chain(&other.atoms).cloned().collect();
        Ok(Self::from_valid(self.space, atoms))
    }

    /// Multiplies every weight by `c >= 0`; `c = 0` gives the zero measure.
    pub fn scale(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::InvalidArgument(format!("scale factor must be finite and >= 0, got {c}")));
        }
        Ok(self.map_weights(|_, w| c * w))
    }

    /// Reweights atoms, dropping those whose new weight is not positive.
    pub(crate) fn map_weights(&self, f: impl Fn(&Point, f64) -> f64) -> Self {
        DiscreteMeasure {
            space: self.space,
            atoms: self
                .atoms
                .iter()
                .filter_map(|a| {
                    let w = f(&a.x, a.w);
                    (w > 0.0).then(|| Atom { x: a.x.clone(), w })
                })
                .collect(),
        }
    }

    /// Smallest m with every atom in K_m (1 for the zero measure).
    pub fn support_level(&self) -> u32 {
        self.atoms.iter().map(|a| self.space.level_of(&a.x)).max().unwrap_or(1)
    }
}

/// Produces the restriction of a measure to K_m. Must be pure.
pub type LevelGenerator = dyn Fn(u32) -> Result<DiscreteMeasure> + Send + Sync;

/// A measure that is finite on every K_m, materialized one level at a time.
///
/// Levels are cached. Concurrent materialization of the same level is harmless
/// because generators are pure, so whichever result lands in the cache is equal
/// to any other.
#[derive(Clone)]
pub struct LocallyFiniteMeasure {
    space: GroundSpace,
    generator: Arc<LevelGenerator>,
    max_level: Option<u32>,
    cache: Arc<RwLock<BTreeMap<u32, Arc<DiscreteMeasure>>>>,
}

impl fmt::Debug for LocallyFiniteMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cached: Vec<u32> = self.cache.read().map(|c| c.keys().copied().collect()).unwrap_or_default();
        f.debug_struct("LocallyFiniteMeasure")
            .field("space", &self.space)
            .field("max_level", &self.max_level)
            .field("cached_levels", &cached)
            .finish()
    }
}

impl LocallyFiniteMeasure {
    /// `generator(m)` must return a measure supported in K_m whose restriction to
    /// K_j equals `generator(j)` for j <= m. `max_level = None` means unlimited.
    pub fn from_generator(
        space: GroundSpace,
        max_level: Option<u32>,
        generator: impl Fn(u32) -> Result<DiscreteMeasure> + Send + Sync + 'static,
    ) -> Self {
        LocallyFiniteMeasure {
            space,
            generator: Arc::new(generator),
            max_level,
            cache: Arc::new(RwLock::new(BTreeMap::new())),
        }
    }

    /// Wraps a finite measure; level m is its restriction to K_m.
    pub fn from_finite(mu: DiscreteMeasure) -> Self {
        let space = mu.space();
        Self::from_generator(space, None, move |m| Ok(mu.restrict_to_level(m)))
    }

    pub fn space(&self) -> GroundSpace {
        self.space
    }

    pub fn max_level(&self) -> Option<u32> {
        self.max_level
    }

    /// The restriction to K_m.
    pub fn level(&self, m: u32) -> Result<Arc<DiscreteMeasure>> {
        if m == 0 {
            return Err(Error::Materialization {
                level: m,
                reason: "levels start at 1".into(),
            });
        }
        if let Some(max) = self.max_level {
            if m > max {
                return Err(Error::Materialization {
                    level: m,
                    reason: format!("only levels up to {max} can be materialized"),
                });
            }
        }
        if let Some(hit) = self.cache.read().expect("cache lock poisoned").get(&m) {
            return Ok(Arc::clone(hit));
        }
        let mu = (self.generator)(m)?;
        if mu.space() != self.space {
            return Err(Error::SpaceMismatch {
                left: self.space.to_string(),
                right: mu.space().to_string(),
            });
        }
        if let Some(a) = mu.atoms().iter().find(|a| !self.space.in_level(&a.x, m)) {
            return Err(Error::Materialization {
                level: m,
                reason: format!("generator returned atom {} outside K_{m}", a.x),
            });
        }
        let mu = Arc::new(mu);
        let mut cache = self.cache.write().expect("cache lock poisoned");
        Ok(Arc::clone(cache.entry(m).or_insert(mu)))
    }

    /// T_m(μ): level m+1 reweighted by the bump g_m.
    pub fn truncate(&self, m: u32) -> Result<DiscreteMeasure> {
        let m = m.max(1);
        let upper = self.level(m + 1)?;
        Ok(upper.map_weights(|x, w| w * self.space.bump(m, x)))
    }

    /// Checks that restricting level `hi` to K_lo reproduces level `lo` exactly.
    pub fn is_consistent(&self, lo: u32, hi: u32) -> Result<bool> {
        let a = self.level(lo)?;
        let b = self.level(hi)?;
        Ok(b.restrict_to_level(lo) == *a)
    }
}
