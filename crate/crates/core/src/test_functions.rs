//! Certified nonnegative test functions.
//!
//! Functions are built from JSON-serializable expression trees ([`FnExpr`]).
//! Construction computes a Lipschitz constant, a support level L (the function
//! vanishes outside K_L) and a sup bound, so integrals against locally finite
//! measures only need level L.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boundedness::{CompiledRegion, GroundSpace, MetricChoice, Point, Region, SpaceKind};
use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, LocallyFiniteMeasure};
use crate::rng::StreamKey;

/// Expression tree of a test function.
///
/// `upper` is f⁺ = 1 − (m·d(x, B̄) ∧ 1), `lower` is f⁻ = m·d(x, (B°)ᶜ) ∧ 1,
/// `bump` is the localizing bump g_m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum FnExpr {
    Upper {
        region: Region,
        m: u32,
        #[serde(default)]
        metric: MetricChoice,
    },
    Lower {
        region: Region,
        m: u32,
        #[serde(default)]
        metric: MetricChoice,
    },
    Bump {
        m: u32,
    },
    Cone {
        alpha: f64,
        f: Box<FnExpr>,
        beta: f64,
        g: Box<FnExpr>,
    },
    Prod {
        f: Box<FnExpr>,
        g: Box<FnExpr>,
    },
    Zero,
}

/// Certified metadata of a test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionCertificate {
    pub lipschitz: f64,
    /// Metric the Lipschitz constant refers to; `None` for constant functions.
    pub metric: Option<MetricChoice>,
    pub support_level: u32,
    pub sup_bound: f64,
}

#[derive(Debug)]
enum Node {
    Upper { region: CompiledRegion, m: f64, metric: MetricChoice },
    Lower { region: CompiledRegion, m: f64, metric: MetricChoice },
    Bump { m: u32 },
    Cone { alpha: f64, f: Box<Node>, beta: f64, g: Box<Node> },
    Prod { f: Box<Node>, g: Box<Node> },
    Zero,
}

impl Node {
    fn eval(&self, space: &GroundSpace, x: &Point) -> f64 {
        match self {
            Node::Upper { region, m, metric } => 1.0 - (m * region.distance(x, *metric)).min(1.0),
            Node::Lower { region, m, metric } => (m * region.interior_complement_distance(x, *metric)).min(1.0),
            Node::Bump { m } => space.bump(*m, x),
            Node::Cone { alpha, f, beta, g } => alpha * f.eval(space, x) + beta * g.eval(space, x),
            Node::Prod { f, g } => {
                let a = f.eval(space, x);
                if a == 0.0 {
                    0.0
                } else {
                    a * g.eval(space, x)
                }
            }
            Node::Zero => 0.0,
        }
    }
}

/// An evaluable, certified nonnegative function on a ground space.
#[derive(Debug, Clone)]
pub struct TestFunction {
    space: GroundSpace,
    expr: FnExpr,
    node: Arc<Node>,
    cert: FunctionCertificate,
}

impl PartialEq for TestFunction {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.expr == other.expr
    }
}

fn check_m(m: u32) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be a positive integer".into()));
    }
    Ok(m as f64)
}

fn join_metric(a: Option<MetricChoice>, b: Option<MetricChoice>) -> Result<Option<MetricChoice>> {
    match (a, b) {
        (Some(x), Some(y)) if x != y => Err(Error::InvalidArgument(
            "cannot combine functions certified against different metrics".into(),
        )),
        (Some(x), _) | (_, Some(x)) => Ok(Some(x)),
        _ => Ok(None),
    }
}

/// Smallest L such that every point with d'(x, C) strictly above `inner` and
/// strictly below `outer` lies in K_L. A small relative margin absorbs rounding
/// in the distance computations.
fn level_for_radii(space: &GroundSpace, inner: f64, outer: f64) -> Result<u32> {
    const MARGIN: f64 = 1e-12;
    let unbounded = || Error::Unbounded("the support of the function is not a bounded set".into());
    let outer_level = |r: f64| -> Result<u32> {
        if !r.is_finite() {
            return Err(unbounded());
        }
        let r = r * (1.0 + MARGIN);
        crate::boundedness::smallest_level(|l| r < l as f64, r.floor() + 1.0).ok_or_else(unbounded)
    };
    let inner_level = |r: f64| -> Result<u32> {
        if !(r > 0.0) {
            return Err(unbounded());
        }
        let r = r * (1.0 - MARGIN);
        crate::boundedness::smallest_level(|l| r > 1.0 / l as f64, (1.0 / r).floor() + 1.0).ok_or_else(unbounded)
    };
    match space.kind() {
        SpaceKind::Weak { .. } => Ok(1),
        SpaceKind::Euclidean { .. } => outer_level(outer),
        SpaceKind::HalflineHl | SpaceKind::Punctured { cap: false, .. } => inner_level(inner),
        SpaceKind::Punctured { cap: true, .. } => Ok(inner_level(inner)?.max(outer_level(outer)?)),
    }
}

fn certify(space: &GroundSpace, expr: &FnExpr) -> Result<(Node, FunctionCertificate)> {
    match expr {
        FnExpr::Zero => Ok((
            Node::Zero,
            FunctionCertificate {
                lipschitz: 0.0,
                metric: None,
                support_level: 1,
                sup_bound: 0.0,
            },
        )),
        FnExpr::Bump { m } => {
            check_m(*m)?;
            let weak = space.is_weak();
            Ok((
                Node::Bump { m: *m },
                FunctionCertificate {
                    lipschitz: if weak { 0.0 } else { 1.0 },
                    metric: Some(MetricChoice::Hu),
                    support_level: if weak { 1 } else { m + 1 },
                    sup_bound: 1.0,
                },
            ))
        }
        FnExpr::Upper { region, m, metric } => {
            let mf = check_m(*m)?;
            let compiled = space.compile(region)?;
            compiled.check_metric(*metric)?;
            if space.is_bounded(region)?.is_none() {
                return Err(Error::Unbounded("upper approximant needs a bounded region".into()));
            }
            let support_level = match space.radial_extent(region)? {
                None => 1,
                Some((rho, big_r)) => {
                    let eps = 1.0 / mf;
                    let (inner, outer) = match metric {
                        MetricChoice::Base => (rho - eps, big_r + eps),
                        MetricChoice::Hu if space.has_forbidden_set() => {
                            let inner = (rho - eps).max(1.0 / (1.0 / rho + eps));
                            let outer = if 1.0 / big_r > eps {
                                (big_r + eps).min(1.0 / (1.0 / big_r - eps))
                            } else {
                                big_r + eps
                            };
                            (inner, outer)
                        }
                        MetricChoice::Hu => (rho - eps, big_r + eps),
                    };
                    level_for_radii(space, inner, outer).map_err(|_| {
                        Error::Unbounded(format!(
                            "the 1/{m}-thickening of the region is not bounded; increase m"
                        ))
                    })?
                }
            };
            Ok((
                Node::Upper {
                    region: compiled,
                    m: mf,
                    metric: *metric,
                },
                FunctionCertificate {
                    lipschitz: mf,
                    metric: Some(*metric),
                    support_level,
                    sup_bound: 1.0,
                },
            ))
        }
        FnExpr::Lower { region, m, metric } => {
            let mf = check_m(*m)?;
            let compiled = space.compile(region)?;
            compiled.check_metric(*metric)?;
            let support_level = space
                .is_bounded(region)?
                .ok_or_else(|| Error::Unbounded("lower approximant needs a bounded region".into()))?;
            Ok((
                Node::Lower {
                    region: compiled,
                    m: mf,
                    metric: *metric,
                },
                FunctionCertificate {
                    lipschitz: mf,
                    metric: Some(*metric),
                    support_level,
                    sup_bound: 1.0,
                },
            ))
        }
        FnExpr::Cone { alpha, f, beta, g } => {
            for c in [alpha, beta] {
                if !(c.is_finite() && *c >= 0.0) {
                    return Err(Error::InvalidArgument(format!("cone coefficients must be finite and >= 0, got {c}")));
                }
            }
            let (nf, cf) = certify(space, f)?;
            let (ng, cg) = certify(space, g)?;
            Ok((
                Node::Cone {
                    alpha: *alpha,
                    f: Box::new(nf),
                    beta: *beta,
                    g: Box::new(ng),
                },
                FunctionCertificate {
                    lipschitz: alpha * cf.lipschitz + beta * cg.lipschitz,
                    metric: join_metric(cf.metric, cg.metric)?,
                    support_level: cf.support_level.max(cg.support_level),
                    sup_bound: alpha * cf.sup_bound + beta * cg.sup_bound,
                },
            ))
        }
        FnExpr::Prod { f, g } => {
            let (nf, cf) = certify(space, f)?;
            let (ng, cg) = certify(space, g)?;
            Ok((
                Node::Prod {
                    f: Box::new(nf),
                    g: Box::new(ng),
                },
                FunctionCertificate {
                    lipschitz: cf.sup_bound * cg.lipschitz + cg.sup_bound * cf.lipschitz,
                    metric: join_metric(cf.metric, cg.metric)?,
                    support_level: cf.support_level.min(cg.support_level),
                    sup_bound: cf.sup_bound * cg.sup_bound,
                },
            ))
        }
    }
}

impl TestFunction {
    pub fn new(space: GroundSpace, expr: FnExpr) -> Result<Self> {
        let (node, cert) = certify(&space, &expr)?;
        Ok(TestFunction {
            space,
            expr,
            node: Arc::new(node),
            cert,
        })
    }

    /// f⁺_m for region B: 1 on B̄, 0 at Hu-distance ≥ 1/m from B̄.
    pub fn upper_approx(space: GroundSpace, region: Region, m: u32) -> Result<Self> {
        Self::new(
            space,
            FnExpr::Upper {
                region,
                m,
                metric: MetricChoice::Hu,
            },
        )
    }

    /// f⁻_m for region B: 0 off B°, 1 at Hu-depth ≥ 1/m inside B°.
    pub fn lower_approx(space: GroundSpace, region: Region, m: u32) -> Result<Self> {
        Self::new(
            space,
            FnExpr::Lower {
                region,
                m,
                metric: MetricChoice::Hu,
            },
        )
    }

    pub fn bump(space: GroundSpace, m: u32) -> Result<Self> {
        Self::new(space, FnExpr::Bump { m })
    }

    pub fn zero(space: GroundSpace) -> Self {
        Self::new(space, FnExpr::Zero).expect("the zero function is always valid")
    }

    pub fn cone(&self, alpha: f64, beta: f64, other: &TestFunction) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        Self::new(
            self.space,
            FnExpr::Cone {
                alpha,
                f: Box::new(self.expr.clone()),
                beta,
                g: Box::new(other.expr.clone()),
            },
        )
    }

    pub fn product(&self, other: &TestFunction) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        Self::new(
            self.space,
            FnExpr::Prod {
                f: Box::new(self.expr.clone()),
                g: Box::new(other.expr.clone()),
            },
        )
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.node.eval(&self.space, x)
    }

    pub fn space(&self) -> GroundSpace {
        self.space
    }

    pub fn expr(&self) -> &FnExpr {
        &self.expr
    }

    pub fn certificate(&self) -> &FunctionCertificate {
        &self.cert
    }

    pub fn lipschitz(&self) -> f64 {
        self.cert.lipschitz
    }

    pub fn metric(&self) -> Option<MetricChoice> {
        self.cert.metric
    }

    pub fn support_level(&self) -> u32 {
        self.cert.support_level
    }

    pub fn sup_bound(&self) -> f64 {
        self.cert.sup_bound
    }

    pub fn integrate(&self, mu: &DiscreteMeasure) -> Result<f64> {
        self.space.ensure_same(&mu.space())?;
        Ok(mu.integrate(|x| self.eval(x)))
    }

    /// μ(f) using only the level that contains the support.
    pub fn integrate_lf(&self, mu: &LocallyFiniteMeasure) -> Result<f64> {
        self.space.ensure_same(&mu.space())?;
        Ok(mu.level(self.support_level())?.integrate(|x| self.eval(x)))
    }
}

/// Closure properties declared by a family.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureFlags {
    pub cone: bool,
    pub multiplicative: bool,
}

/// A finite indexed list of test functions.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionFamily {
    space: GroundSpace,
    members: Vec<TestFunction>,
    closure: ClosureFlags,
}

/// JSON form of a family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDescriptor {
    pub space: GroundSpace,
    pub members: Vec<FnExpr>,
    pub closure: ClosureFlags,
}

impl FunctionFamily {
    pub fn new(space: GroundSpace, members: Vec<TestFunction>, closure: ClosureFlags) -> Result<Self> {
        for f in &members {
            space.ensure_same(&f.space)?;
        }
        Ok(FunctionFamily { space, members, closure })
    }

    pub fn from_descriptor(d: &FamilyDescriptor) -> Result<Self> {
        let members = d
            .members
            .iter()
            .map(|e| TestFunction::new(d.space, e.clone()))
            .collect::<Result<_>>()?;
        Self::new(d.space, members, d.closure)
    }

    pub fn descriptor(&self) -> FamilyDescriptor {
        FamilyDescriptor {
            space: self.space,
            members: self.members.iter().map(|f| f.expr.clone()).collect(),
            closure: self.closure,
        }
    }

    pub fn space(&self) -> GroundSpace {
        self.space
    }

    pub fn members(&self) -> &[TestFunction] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn closure(&self) -> ClosureFlags {
        self.closure
    }

    /// Largest support level over the members.
    pub fn support_level(&self) -> u32 {
        self.members.iter().map(|f| f.support_level()).max().unwrap_or(1)
    }

    fn member(&self, i: usize) -> Result<&TestFunction> {
        self.members
            .get(i)
            .ok_or_else(|| Error::InvalidArgument(format!("family has no member {i}")))
    }

    /// α f_i + β f_j as a formal combination.
    pub fn cone(&self, i: usize, j: usize, alpha: f64, beta: f64) -> Result<TestFunction> {
        self.member(i)?.cone(alpha, beta, self.member(j)?)
    }

    /// f_i · f_j as a formal product.
    pub fn product(&self, i: usize, j: usize) -> Result<TestFunction> {
        self.member(i)?.product(self.member(j)?)
    }
}

/// Seeded region inside K_level, shaped to suit the space.
fn seeded_region(space: &GroundSpace, level: u32, key: StreamKey) -> Region {
    let mut rng = key.rng();
    let (u1, u2, u3) = (rng.open01(), rng.open01(), rng.open01());
    // K_1 is empty for capped spaces, so regions there are drawn one level up.
    let l = if space.capped() { level as f64 + 1.0 } else { level as f64 };
    let dim = space.dim();
    match space.kind() {
        SpaceKind::HalflineHl | SpaceKind::Punctured { .. } => {
            let a = (1.2 + u1) / l;
            let mut b = a * (1.5 + 1.5 * u2);
            if space.capped() {
                b = b.min(l * 0.9).max(a * 1.01);
            }
            if dim == 1 {
                if matches!(space.kind(), SpaceKind::Punctured { .. }) && u3 < 0.5 {
                    Region::closed(-b, -a)
                } else {
                    Region::closed(a, b)
                }
            } else {
                Region::annulus(a, b)
            }
        }
        SpaceKind::Euclidean { .. } | SpaceKind::Weak { .. } => {
            if dim == 1 {
                let c = l * (u1 - 0.5) / 4.0;
                let w = l * (0.375 + 0.25 * u2);
                Region::closed(c - w, c + w)
            } else {
                let scale = l / (4.0 * (dim as f64).sqrt());
                let center: Vec<f64> = (0..dim).map(|_| scale * (2.0 * rng.open01() - 1.0)).collect();
                Region::ball(center, l * (0.2 + 0.2 * u3), false)
            }
        }
    }
}

/// Deterministic battery of `count` certified Lipschitz functions.
///
/// Member i works at level ℓ = i/2 + 1 on a seeded region B_ℓ ⊆ K_ℓ: even members
/// are f⁻ with m = ℓ, odd members f⁺ with m = ℓ + 1. On every third level the
/// f⁺ member is replaced by a convex combination with the preceding member.
pub fn lipschitz_battery(space: GroundSpace, count: usize, seed: u64) -> Result<FunctionFamily> {
    if count == 0 {
        return Err(Error::InvalidArgument("battery size must be at least 1".into()));
    }
    let root = StreamKey::new(seed);
    let mut members: Vec<TestFunction> = Vec::with_capacity(count);
    for i in 0..count {
        let level = (i / 2 + 1) as u32;
        let key = root.child(level as u64);
        let region = seeded_region(&space, level, key);
        let f = if i % 2 == 0 {
            TestFunction::lower_approx(space, region, level)?
        } else {
            let upper = TestFunction::upper_approx(space, region, level + 1)?;
            if level % 3 == 0 {
                let u = key.child(u64::MAX).rng().open01();
                upper.cone(u, 1.0 - u, &members[i - 1])?
            } else {
                upper
            }
        };
        members.push(f);
    }
    FunctionFamily::new(
        space,
        members,
        ClosureFlags {
            cone: true,
            multiplicative: false,
        },
    )
}

/// Family of bumps h_m (with h_m ≥ 1 on K_m), seeded f⁺ generators and their
/// formal products and cone combinations.
///
/// The first ⌈generator_count / 2⌉ generators are bumps h_1, h_2, …; the rest are
/// seeded f⁺ functions. Members are the generators followed by h·s products, h_1·h_1,
/// 2h_1 + 3h_2 (with two or more bumps) and s_1·s_2 (with two or more f⁺ generators).
pub fn multiplicative_family(space: GroundSpace, generator_count: usize, seed: u64) -> Result<FunctionFamily> {
    if generator_count == 0 {
        return Err(Error::InvalidArgument("generator count must be at least 1".into()));
    }
    let levels = generator_count.div_ceil(2);
    let root = StreamKey::new(seed);
    let bumps: Vec<TestFunction> = (1..=levels as u32)
        .map(|m| TestFunction::bump(space, m))
        .collect::<Result<_>>()?;
    let mut seeded = Vec::new();
    for j in 0..generator_count - levels {
        let level = (j % levels + 1) as u32;
        let region = seeded_region(&space, level, root.child(j as u64));
        seeded.push((level, TestFunction::upper_approx(space, region, level + 1)?));
    }
    let mut members: Vec<TestFunction> = bumps.clone();
    members.extend(seeded.iter().map(|(_, s)| s.clone()));
    for (level, s) in &seeded {
        members.push(bumps[*level as usize - 1].product(s)?);
    }
    members.push(bumps[0].product(&bumps[0])?);
    if levels >= 2 {
        members.push(bumps[0].cone(2.0, 3.0, &bumps[1])?);
    }
    if seeded.len() >= 2 {
        members.push(seeded[0].1.product(&seeded[1].1)?);
    }
    FunctionFamily::new(
        space,
        members,
        ClosureFlags {
            cone: true,
            multiplicative: true,
        },
    )
}

/// Σ_i 2^{-i} |f_i(x) − f_i(y)| over the members (i from 1).
///
/// A finite family gives a pseudo-metric: distinct points may be at distance 0.
pub fn induced_metric(family: &FunctionFamily, x: &Point, y: &Point) -> Result<f64> {
    if let Some(f) = family.members.iter().find(|f| f.sup_bound() > 1.0) {
        return Err(Error::InvalidArgument(format!(
            "induced metric needs members bounded by 1, found sup bound {}",
            f.sup_bound()
        )));
    }
    Ok(family
        .members
        .iter()
        .enumerate()
        .map(|(i, f)| 0.5f64.powi(i as i32 + 1) * (f.eval(x) - f.eval(y)).abs())
        .sum())
}
