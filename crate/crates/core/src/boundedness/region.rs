use serde::{Deserialize, Serialize};

use super::space::{euclid, hu_from_parts, smallest_level, GroundSpace, MetricChoice, Point, SpaceKind};
use crate::error::{Error, Result};
use crate::serde_ext::{neg_inf_null, pos_inf_null};

/// Closed catalogue of regions. Every element has exact membership, boundary,
/// distance and boundedness tests.
///
/// Annuli are `{x : lo < d'(x, C) <= hi}` (or `< hi` when `hi_open`) and only make
/// sense on spaces with a forbidden set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Region {
    Whole,
    Interval {
        #[serde(with = "neg_inf_null", default = "neg_inf_null::default")]
        lo: f64,
        #[serde(with = "pos_inf_null", default = "pos_inf_null::default")]
        hi: f64,
        #[serde(default)]
        lo_open: bool,
        #[serde(default)]
        hi_open: bool,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
        #[serde(default)]
        open: bool,
    },
    Annulus {
        lo: f64,
        #[serde(with = "pos_inf_null", default = "pos_inf_null::default")]
        hi: f64,
        #[serde(default)]
        hi_open: bool,
    },
    Union {
        parts: Vec<Region>,
    },
}

impl Region {
    /// Closed interval [lo, hi].
    pub fn closed(lo: f64, hi: f64) -> Self {
        Region::interval(lo, hi, false, false)
    }

    /// Open interval (lo, hi).
    pub fn open(lo: f64, hi: f64) -> Self {
        Region::interval(lo, hi, true, true)
    }

    pub fn interval(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Self {
        Region::Interval {
            lo,
            hi,
            lo_open,
            hi_open,
        }
    }

    pub fn ball(center: Vec<f64>, radius: f64, open: bool) -> Self {
        Region::Ball {
            center,
            radius,
            open,
        }
    }

    pub fn cube(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        Region::Box { lo, hi }
    }

    /// `{lo < d'(x, C) <= hi}`.
    pub fn annulus(lo: f64, hi: f64) -> Self {
        Region::Annulus {
            lo,
            hi,
            hi_open: false,
        }
    }

    pub fn union(parts: Vec<Region>) -> Self {
        Region::Union { parts }
    }
}

/// A maximal piece of a one-dimensional region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Iv {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Iv {
    fn new(lo: f64, hi: f64, lo_closed: bool, hi_closed: bool) -> Self {
        Iv {
            lo,
            hi,
            lo_closed: lo_closed && lo.is_finite(),
            hi_closed: hi_closed && hi.is_finite(),
        }
    }

    fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    fn contains(&self, c: f64) -> bool {
        (self.lo < c || (self.lo_closed && self.lo == c)) && (c < self.hi || (self.hi_closed && self.hi == c))
    }

    fn interior_contains(&self, c: f64) -> bool {
        self.lo < c && c < self.hi
    }

    fn closure_contains(&self, c: f64) -> bool {
        self.lo <= c && c <= self.hi
    }
}

/// Radial extent of a region inside X: the infimum and supremum of |x| over it,
/// with flags recording whether they are attained.
#[derive(Debug, Clone, Copy)]
struct Profile {
    inf: f64,
    inf_attained: bool,
    sup: f64,
    sup_attained: bool,
}

impl Profile {
    fn merge(self, o: Profile) -> Profile {
        let (inf, inf_attained) = if self.inf < o.inf {
            (self.inf, self.inf_attained)
        } else if o.inf < self.inf {
            (o.inf, o.inf_attained)
        } else {
            (self.inf, self.inf_attained || o.inf_attained)
        };
        let (sup, sup_attained) = if self.sup > o.sup {
            (self.sup, self.sup_attained)
        } else if o.sup > self.sup {
            (o.sup, o.sup_attained)
        } else {
            (self.sup, self.sup_attained || o.sup_attained)
        };
        Profile {
            inf,
            inf_attained,
            sup,
            sup_attained,
        }
    }
}

/// A region bound to a space, with the one-dimensional normal form precomputed.
///
/// Use this when the same region is queried for many points.
#[derive(Debug, Clone)]
pub struct CompiledRegion {
    space: GroundSpace,
    region: Region,
    ivs: Option<Vec<Iv>>,
}

impl GroundSpace {
    /// Checks that a region descriptor is well formed for this space.
    pub fn validate_region(&self, region: &Region) -> Result<()> {
        let dim = self.dim();
        let bad = |msg: String| Err(Error::InvalidRegion(msg));
        match region {
            Region::Whole => Ok(()),
            Region::Interval { lo, hi, .. } => {
                if dim != 1 {
                    return bad(format!("interval regions need a one-dimensional space, got {self}"));
                }
                if lo.is_nan() || hi.is_nan() {
                    return bad("interval endpoints must not be NaN".into());
                }
                Ok(())
            }
            Region::Box { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    return bad(format!("box corners need {dim} coordinates"));
                }
                if lo.iter().chain(hi).any(|c| !c.is_finite()) {
                    return bad("box corners must be finite".into());
                }
                if lo.iter().zip(hi).any(|(a, b)| a > b) {
                    return bad("box needs lo <= hi in every coordinate".into());
                }
                Ok(())
            }
            Region::Ball { center, radius, .. } => {
                if center.len() != dim {
                    return bad(format!("ball center needs {dim} coordinates"));
                }
                if center.iter().any(|c| !c.is_finite()) || !radius.is_finite() || *radius < 0.0 {
                    return bad("ball needs a finite center and a finite radius >= 0".into());
                }
                Ok(())
            }
            Region::Annulus { lo, hi, .. } => {
                if !self.has_forbidden_set() {
                    return bad(format!("annulus regions need a space with a forbidden set, got {self}"));
                }
                if !lo.is_finite() || *lo < 0.0 || hi.is_nan() {
                    return bad("annulus needs a finite lo >= 0".into());
                }
                Ok(())
            }
            Region::Union { parts } => parts.iter().try_for_each(|p| self.validate_region(p)),
        }
    }

    pub fn compile(&self, region: &Region) -> Result<CompiledRegion> {
        self.validate_region(region)?;
        let ivs = (self.dim() == 1).then(|| self.normal_form(region));
        Ok(CompiledRegion {
            space: *self,
            region: region.clone(),
            ivs,
        })
    }

    /// Infimum and supremum of |x| over the region's points in X; `None` when empty.
    pub fn radial_extent(&self, region: &Region) -> Result<Option<(f64, f64)>> {
        self.validate_region(region)?;
        Ok(self.profile(region).map(|p| (p.inf, p.sup)))
    }

    /// The localizing set K_m as a catalogue region.
    pub fn localizing_set(&self, m: u32) -> Region {
        let mf = m.max(1) as f64;
        match self.kind() {
            SpaceKind::Euclidean { dim } => Region::ball(vec![0.0; dim], mf, true),
            SpaceKind::Weak { .. } => Region::Whole,
            SpaceKind::Punctured { cap, .. } => Region::Annulus {
                lo: 1.0 / mf,
                hi: if cap { mf } else { f64::INFINITY },
                hi_open: cap,
            },
            SpaceKind::HalflineHl => Region::Annulus {
                lo: 1.0 / mf,
                hi: f64::INFINITY,
                hi_open: false,
            },
        }
    }

    /// Smallest m with `region ⊆ K_m`, or `None` if the region is not bounded.
    pub fn is_bounded(&self, region: &Region) -> Result<Option<u32>> {
        self.validate_region(region)?;
        if self.is_weak() {
            return Ok(Some(1));
        }
        let profile = match self.profile(region) {
            None => return Ok(Some(1)),
            Some(p) => p,
        };
        let outer = |p: &Profile| -> Option<u32> {
            if !p.sup.is_finite() {
                return None;
            }
            smallest_level(
                |m| {
                    let mf = m as f64;
                    if p.sup_attained {
                        p.sup < mf
                    } else {
                        p.sup <= mf
                    }
                },
                p.sup.floor() + 1.0,
            )
        };
        let inner = |p: &Profile| -> Option<u32> {
            if !(p.inf > 0.0) {
                return None;
            }
            smallest_level(
                |m| {
                    let inv = 1.0 / m as f64;
                    if p.inf_attained {
                        p.inf > inv
                    } else {
                        p.inf >= inv
                    }
                },
                (1.0 / p.inf).floor() + 1.0,
            )
        };
        Ok(match self.kind() {
            SpaceKind::Euclidean { .. } => outer(&profile),
            SpaceKind::Weak { .. } => Some(1),
            SpaceKind::Punctured { cap: true, .. } => match (inner(&profile), outer(&profile)) {
                (Some(a), Some(b)) => Some(a.max(b)),
                _ => None,
            },
            SpaceKind::Punctured { cap: false, .. } | SpaceKind::HalflineHl => inner(&profile),
        })
    }

    /// True when the region has no point of X.
    pub fn region_is_empty(&self, region: &Region) -> Result<bool> {
        self.validate_region(region)?;
        Ok(self.empty_unchecked(region))
    }

    fn empty_unchecked(&self, region: &Region) -> bool {
        if self.dim() == 1 {
            return self.normal_form(region).is_empty();
        }
        match region {
            Region::Whole => false,
            Region::Interval { .. } => true,
            Region::Box { lo, hi } => self.has_forbidden_set() && lo.iter().chain(hi).all(|&c| c == 0.0),
            Region::Ball { center, radius, open } => {
                (*open && *radius == 0.0)
                    || (*radius == 0.0 && self.has_forbidden_set() && center.iter().all(|&c| c == 0.0))
            }
            Region::Annulus { lo, hi, hi_open } => lo > hi || (lo == hi) || (*hi_open && lo >= hi),
            Region::Union { parts } => parts.iter().all(|p| self.empty_unchecked(p)),
        }
    }

    /// Membership of a point of X in the region.
    pub fn region_contains(&self, region: &Region, x: &Point) -> bool {
        let c = x.coords();
        match region {
            Region::Whole => true,
            Region::Interval {
                lo,
                hi,
                lo_open,
                hi_open,
            } => Iv::new(*lo, *hi, !lo_open, !hi_open).contains(c[0]),
            Region::Box { lo, hi } => c.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a <= v && v <= b),
            Region::Ball { center, radius, open } => {
                if c.len() == 1 {
                    let (a, b) = (center[0] - radius, center[0] + radius);
                    if *open {
                        a < c[0] && c[0] < b
                    } else {
                        a <= c[0] && c[0] <= b
                    }
                } else {
                    let d = euclid(c, center);
                    if *open {
                        d < *radius
                    } else {
                        d <= *radius
                    }
                }
            }
            Region::Annulus { lo, hi, hi_open } => {
                let r = self.forbidden_set_dist(x);
                *lo < r && (r < *hi || (!hi_open && r <= *hi))
            }
            Region::Union { parts } => parts.iter().any(|p| self.region_contains(p, x)),
        }
    }

    /// Inf of the chosen metric from `x` to the region; zero iff `x` lies in its closure.
    pub fn region_distance(&self, x: &Point, region: &Region, metric: MetricChoice) -> Result<f64> {
        let compiled = self.compile(region)?;
        if compiled.is_empty() {
            return Err(Error::EmptyRegion);
        }
        compiled.check_metric(metric)?;
        Ok(compiled.distance(x, metric))
    }

    /// One-dimensional normal form: sorted, disjoint, non-touching pieces inside X.
    pub(crate) fn normal_form(&self, region: &Region) -> Vec<Iv> {
        let mut raw = Vec::new();
        self.raw_intervals(region, &mut raw);
        self.normalize(raw)
    }

    fn raw_intervals(&self, region: &Region, out: &mut Vec<Iv>) {
        match region {
            Region::Whole => out.push(Iv::new(f64::NEG_INFINITY, f64::INFINITY, false, false)),
            Region::Interval {
                lo,
                hi,
                lo_open,
                hi_open,
            } => out.push(Iv::new(*lo, *hi, !lo_open, !hi_open)),
            Region::Box { lo, hi } => out.push(Iv::new(lo[0], hi[0], true, true)),
            Region::Ball { center, radius, open } => {
                out.push(Iv::new(center[0] - radius, center[0] + radius, !open, !open))
            }
            Region::Annulus { lo, hi, hi_open } => {
                out.push(Iv::new(*lo, *hi, false, !hi_open));
                if matches!(self.kind(), SpaceKind::Punctured { .. }) {
                    out.push(Iv::new(-hi, -lo, !hi_open, false));
                }
            }
            Region::Union { parts } => parts.iter().for_each(|p| self.raw_intervals(p, out)),
        }
    }

    fn normalize(&self, raw: Vec<Iv>) -> Vec<Iv> {
        let mut pieces: Vec<Iv> = Vec::with_capacity(raw.len() + 1);
        for iv in raw {
            match self.kind() {
                SpaceKind::HalflineHl => {
                    let mut iv = iv;
                    if iv.lo <= 0.0 {
                        iv.lo = 0.0;
                        iv.lo_closed = false;
                    }
                    pieces.push(iv);
                }
                SpaceKind::Punctured { .. } => {
                    if iv.lo < 0.0 && iv.hi > 0.0 {
                        pieces.push(Iv::new(iv.lo, 0.0, iv.lo_closed, false));
                        pieces.push(Iv::new(0.0, iv.hi, false, iv.hi_closed));
                    } else {
                        let mut iv = iv;
                        if iv.lo == 0.0 {
                            iv.lo_closed = false;
                        }
                        if iv.hi == 0.0 {
                            iv.hi_closed = false;
                        }
                        pieces.push(iv);
                    }
                }
                _ => pieces.push(iv),
            }
        }
        pieces.retain(|iv| !iv.is_empty());
        pieces.sort_by(|a, b| {
            a.lo.total_cmp(&b.lo)
                .then_with(|| b.lo_closed.cmp(&a.lo_closed))
        });
        let mut merged: Vec<Iv> = Vec::with_capacity(pieces.len());
        for iv in pieces {
            if let Some(last) = merged.last_mut() {
                let touches = iv.lo < last.hi
                    || (iv.lo == last.hi && (iv.lo_closed || last.hi_closed) && !(iv.lo == 0.0 && self.has_forbidden_set()));
                if touches {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                        last.hi_closed = iv.hi_closed;
                    } else if iv.hi == last.hi {
                        last.hi_closed |= iv.hi_closed;
                    }
                    continue;
                }
            }
            merged.push(iv);
        }
        merged
    }

    /// Radial profile over the region's points in X; `None` for an empty region.
    fn profile(&self, region: &Region) -> Option<Profile> {
        if self.dim() == 1 {
            let ivs = self.normal_form(region);
            return ivs
                .iter()
                .map(|iv| {
                    let (sup, sup_attained) = if iv.hi.abs() > iv.lo.abs() {
                        (iv.hi.abs(), iv.hi_closed)
                    } else if iv.lo.abs() > iv.hi.abs() {
                        (iv.lo.abs(), iv.lo_closed)
                    } else {
                        (iv.hi.abs(), iv.hi_closed || iv.lo_closed)
                    };
                    let (inf, inf_attained) = if iv.lo <= 0.0 && 0.0 <= iv.hi {
                        (0.0, iv.contains(0.0))
                    } else if iv.lo > 0.0 {
                        (iv.lo, iv.lo_closed)
                    } else {
                        (-iv.hi, iv.hi_closed)
                    };
                    Profile {
                        inf,
                        inf_attained,
                        sup,
                        sup_attained,
                    }
                })
                .reduce(Profile::merge);
        }
        if self.empty_unchecked(region) {
            return None;
        }
        match region {
            Region::Whole => Some(Profile {
                inf: 0.0,
                inf_attained: !self.has_forbidden_set(),
                sup: f64::INFINITY,
                sup_attained: false,
            }),
            Region::Interval { .. } => None,
            Region::Box { lo, hi } => {
                let far = lo
                    .iter()
                    .zip(hi)
                    .map(|(a, b)| a.abs().max(b.abs()).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let near = lo
                    .iter()
                    .zip(hi)
                    .map(|(a, b)| 0.0f64.clamp(*a, *b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                Some(Profile {
                    inf: near,
                    inf_attained: near > 0.0 || !self.has_forbidden_set(),
                    sup: far,
                    sup_attained: true,
                })
            }
            Region::Ball { center, radius, open } => {
                let cn = center.iter().map(|c| c * c).sum::<f64>().sqrt();
                let inf = (cn - radius).max(0.0);
                Some(Profile {
                    inf,
                    inf_attained: if inf > 0.0 { !open } else { !self.has_forbidden_set() },
                    sup: cn + radius,
                    sup_attained: !open || *radius == 0.0,
                })
            }
            Region::Annulus { lo, hi, hi_open } => Some(Profile {
                inf: *lo,
                inf_attained: false,
                sup: *hi,
                sup_attained: !hi_open && hi.is_finite(),
            }),
            Region::Union { parts } => parts.iter().filter_map(|p| self.profile(p)).reduce(Profile::merge),
        }
    }
}

impl CompiledRegion {
    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn space(&self) -> GroundSpace {
        self.space
    }

    pub fn is_empty(&self) -> bool {
        match &self.ivs {
            Some(ivs) => ivs.is_empty(),
            None => self.space.empty_unchecked(&self.region),
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        match &self.ivs {
            Some(ivs) => ivs.iter().any(|iv| iv.contains(x.coords()[0])),
            None => self.space.region_contains(&self.region, x),
        }
    }

    /// Membership in the boundary of the region relative to X.
    ///
    /// Exact in one dimension. In higher dimensions a point where two union parts
    /// abut is reported as a boundary point.
    pub fn on_boundary(&self, x: &Point) -> bool {
        match &self.ivs {
            Some(ivs) => {
                let c = x.coords()[0];
                ivs.iter().any(|iv| iv.closure_contains(c)) && !ivs.iter().any(|iv| iv.interior_contains(c))
            }
            None => closure_nd(&self.space, &self.region, x) && !interior_nd(&self.space, &self.region, x),
        }
    }

    pub fn in_interior(&self, x: &Point) -> bool {
        match &self.ivs {
            Some(ivs) => ivs.iter().any(|iv| iv.interior_contains(x.coords()[0])),
            None => interior_nd(&self.space, &self.region, x),
        }
    }

    pub fn in_closure(&self, x: &Point) -> bool {
        match &self.ivs {
            Some(ivs) => ivs.iter().any(|iv| iv.closure_contains(x.coords()[0])),
            None => closure_nd(&self.space, &self.region, x),
        }
    }

    /// Errors when the Hu-metric distance has no closed form for this region.
    pub fn check_metric(&self, metric: MetricChoice) -> Result<()> {
        if metric == MetricChoice::Hu
            && self.ivs.is_none()
            && matches!(self.space.kind(), SpaceKind::Punctured { .. })
            && has_non_radial(&self.region)
        {
            return Err(Error::Unsupported(
                "Hu-metric distances in punctured spaces of dimension >= 2 are available for annuli and the whole space only"
                    .into(),
            ));
        }
        Ok(())
    }

    /// Distance from `x` to the closure of the region (+inf when empty).
    pub fn distance(&self, x: &Point, metric: MetricChoice) -> f64 {
        match &self.ivs {
            Some(ivs) => ivs
                .iter()
                .map(|iv| iv_distance(&self.space, x.coords()[0], iv, metric))
                .fold(f64::INFINITY, f64::min),
            None => distance_nd(&self.space, &self.region, x, metric),
        }
    }

    /// Distance from `x` to the complement (in X) of the region's interior;
    /// +inf when that complement is empty.
    ///
    /// Exact in one dimension; for unions in higher dimensions the largest
    /// per-part value is returned, which never exceeds the exact distance.
    pub fn interior_complement_distance(&self, x: &Point, metric: MetricChoice) -> f64 {
        match &self.ivs {
            Some(ivs) => {
                let c = x.coords()[0];
                if !ivs.iter().any(|iv| iv.interior_contains(c)) {
                    return 0.0;
                }
                let mut gaps = Vec::with_capacity(ivs.len() + 1);
                let mut left = f64::NEG_INFINITY;
                for iv in ivs {
                    gaps.push(Iv::new(left, iv.lo, true, true));
                    left = iv.hi;
                }
                gaps.push(Iv::new(left, f64::INFINITY, true, false));
                let gaps: Vec<Iv> = gaps
                    .into_iter()
                    .filter(|g| !(g.lo == f64::NEG_INFINITY && g.hi == f64::NEG_INFINITY))
                    .filter(|g| !(g.lo == f64::INFINITY))
                    .collect();
                self.space
                    .normalize(gaps)
                    .iter()
                    .map(|g| iv_distance(&self.space, c, g, metric))
                    .fold(f64::INFINITY, f64::min)
            }
            None => complement_distance_nd(&self.space, &self.region, x, metric),
        }
    }
}

fn has_non_radial(region: &Region) -> bool {
    match region {
        Region::Whole | Region::Annulus { .. } => false,
        Region::Union { parts } => parts.iter().any(has_non_radial),
        _ => true,
    }
}

/// Distance from a scalar point of X to the closure of a one-dimensional piece.
fn iv_distance(space: &GroundSpace, c: f64, iv: &Iv, metric: MetricChoice) -> f64 {
    let p = c.clamp(iv.lo, iv.hi);
    let base = (c - p).abs();
    if metric == MetricChoice::Base {
        return base;
    }
    match space.kind() {
        SpaceKind::Euclidean { .. } => base,
        SpaceKind::Weak { .. } => base.min(1.0),
        SpaceKind::HalflineHl => hu_from_parts(base, c, p),
        SpaceKind::Punctured { .. } => {
            let same_side = if c > 0.0 { iv.hi > 0.0 } else { iv.lo < 0.0 };
            if same_side {
                hu_from_parts(base, c.abs(), p.abs())
            } else {
                let (s_lo, s_hi) = if c > 0.0 { (-iv.hi, -iv.lo) } else { (iv.lo, iv.hi) };
                opposite_side_hu(c.abs(), s_lo, s_hi)
            }
        }
    }
}

/// min over s in [s_lo, s_hi] of max(min(r + s, 1), |1/r - 1/s|): the Hu distance
/// from a point at radius r to points at radius s on the other side of the origin.
/// The objective is quasi-convex in s, so its minimum is attained at an endpoint,
/// at s = r, or where the two terms cross.
fn opposite_side_hu(r: f64, s_lo: f64, s_hi: f64) -> f64 {
    let h = |s: f64| -> f64 {
        if s == f64::INFINITY {
            1.0f64.max(1.0 / r)
        } else {
            (r + s).min(1.0).max((1.0 / r - 1.0 / s).abs())
        }
    };
    let b = r + 1.0 / r;
    let crossing_linear = (-b + (b * b + 4.0).sqrt()) / 2.0;
    let crossing_unit = r / (r + 1.0);
    [s_lo, s_hi, r, crossing_linear, crossing_unit]
        .into_iter()
        .filter(|&s| s > 0.0 && s >= s_lo && s <= s_hi)
        .map(h)
        .fold(f64::INFINITY, f64::min)
}

fn radial_hu(r: f64, s: f64) -> f64 {
    hu_from_parts((r - s).abs(), r, s)
}

fn closure_nd(space: &GroundSpace, region: &Region, x: &Point) -> bool {
    let c = x.coords();
    match region {
        Region::Whole => true,
        Region::Interval { .. } => false,
        Region::Box { lo, hi } => c.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a <= v && v <= b),
        Region::Ball { center, radius, .. } => euclid(c, center) <= *radius,
        Region::Annulus { lo, hi, .. } => {
            let r = space.forbidden_set_dist(x);
            *lo <= r && r <= *hi
        }
        Region::Union { parts } => parts.iter().any(|p| closure_nd(space, p, x)),
    }
}

fn interior_nd(space: &GroundSpace, region: &Region, x: &Point) -> bool {
    let c = x.coords();
    match region {
        Region::Whole => true,
        Region::Interval { .. } => false,
        Region::Box { lo, hi } => c.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| a < v && v < b),
        Region::Ball { center, radius, .. } => euclid(c, center) < *radius,
        Region::Annulus { lo, hi, .. } => {
            let r = space.forbidden_set_dist(x);
            *lo < r && r < *hi
        }
        Region::Union { parts } => parts.iter().any(|p| interior_nd(space, p, x)),
    }
}

fn distance_nd(space: &GroundSpace, region: &Region, x: &Point, metric: MetricChoice) -> f64 {
    let c = x.coords();
    let base = match region {
        Region::Whole => 0.0,
        Region::Interval { .. } => f64::INFINITY,
        Region::Box { lo, hi } => c
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(v, (a, b))| (v - v.clamp(*a, *b)).powi(2))
            .sum::<f64>()
            .sqrt(),
        Region::Ball { center, radius, .. } => (euclid(c, center) - radius).max(0.0),
        Region::Annulus { lo, hi, .. } => {
            let r = space.forbidden_set_dist(x);
            if metric == MetricChoice::Hu {
                return radial_hu(r, r.clamp(*lo, *hi));
            }
            (r - hi).max(lo - r).max(0.0)
        }
        Region::Union { parts } => {
            return parts
                .iter()
                .filter(|p| !space.empty_unchecked(p))
                .map(|p| distance_nd(space, p, x, metric))
                .fold(f64::INFINITY, f64::min)
        }
    };
    match (metric, space.kind()) {
        (MetricChoice::Hu, SpaceKind::Weak { .. }) => base.min(1.0),
        _ => base,
    }
}

fn complement_distance_nd(space: &GroundSpace, region: &Region, x: &Point, metric: MetricChoice) -> f64 {
    let c = x.coords();
    let base = match region {
        Region::Whole => f64::INFINITY,
        Region::Interval { .. } => 0.0,
        Region::Box { lo, hi } => c
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(v, (a, b))| (v - a).min(b - v))
            .fold(f64::INFINITY, f64::min)
            .max(0.0),
        Region::Ball { center, radius, .. } => (radius - euclid(c, center)).max(0.0),
        Region::Annulus { lo, hi, .. } => {
            let r = space.forbidden_set_dist(x);
            if !(*lo < r && r < *hi) {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for s in [*lo, *hi] {
                if s > 0.0 && s.is_finite() {
                    best = best.min(match metric {
                        MetricChoice::Base => (r - s).abs(),
                        MetricChoice::Hu => radial_hu(r, s),
                    });
                }
            }
            return best;
        }
        Region::Union { parts } => {
            return parts
                .iter()
                .map(|p| complement_distance_nd(space, p, x, metric))
                .fold(0.0, f64::max)
        }
    };
    match (metric, space.kind()) {
        (MetricChoice::Hu, SpaceKind::Weak { .. }) => base.min(1.0),
        _ => base,
    }
}
