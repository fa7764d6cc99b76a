//! Bottleneck matching between the points of two point measures inside a region.

use serde::{Deserialize, Serialize};

use crate::boundedness::{MetricChoice, Point, Region};
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;

/// Above this many points the lexicographic tie-breaking pass is skipped.
const LEXICOGRAPHIC_LIMIT: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    pub region: Region,
    pub count: usize,
    /// (point of μ_n, matched point of μ).
    pub pairs: Vec<(Point, Point)>,
    pub max_displacement: f64,
}

/// Expands integer weights into repeated points.
fn unit_points(mu: &DiscreteMeasure, which: &str) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    for a in mu.atoms() {
        if a.w.fract() != 0.0 {
            return Err(Error::NotPointMeasure(format!("{which} has weight {} at {}", a.w, a.x)));
        }
        for _ in 0..a.w as u64 {
            out.push(a.x.clone());
        }
    }
    Ok(out)
}

/// Kuhn's augmenting-path matching on the graph `allowed(i, j)`; returns
/// `match_of_right` or `None` if no perfect matching exists.
fn perfect_matching(k: usize, allowed: &dyn Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    let mut match_right = vec![usize::MAX; k];
    for i in 0..k {
        let mut seen = vec![false; k];
        if !try_augment(i, k, allowed, &mut seen, &mut match_right) {
            return None;
        }
    }
    Some(match_right)
}

fn try_augment(
    i: usize,
    k: usize,
    allowed: &dyn Fn(usize, usize) -> bool,
    seen: &mut [bool],
    match_right: &mut [usize],
) -> bool {
    for j in 0..k {
        if allowed(i, j) && !seen[j] {
            seen[j] = true;
            if match_right[j] == usize::MAX || try_augment(match_right[j], k, allowed, seen, match_right) {
                match_right[j] = i;
                return true;
            }
        }
    }
    false
}

/// Bottleneck matching of μ_n|_B to μ|_B under the Hu metric.
///
/// Among matchings attaining the optimal maximal displacement, the one whose
/// assignment vector (indexed by μ_n's points in coordinate order) is
/// lexicographically smallest is returned.
pub fn match_points(mu_n: &DiscreteMeasure, mu: &DiscreteMeasure, region: &Region) -> Result<Matching> {
    let space = mu.space();
    space.ensure_same(&mu_n.space())?;
    let boundary = mu.boundary_mass(region)?;
    if boundary > 0.0 {
        return Err(Error::BoundaryMass(boundary));
    }
    let left = unit_points(&mu_n.restrict(region)?, "sequence measure")?;
    let right = unit_points(&mu.restrict(region)?, "limit measure")?;
    if left.len() != right.len() {
        return Err(Error::CountMismatch {
            sequence: left.len(),
            limit: right.len(),
        });
    }
    let k = left.len();
    let dist: Vec<Vec<f64>> = left
        .iter()
        .map(|x| right.iter().map(|y| space.distance(x, y, MetricChoice::Hu)).collect())
        .collect();
    if k == 0 {
        return Ok(Matching {
            region: region.clone(),
            count: 0,
            pairs: Vec::new(),
            max_displacement: 0.0,
        });
    }
    let mut thresholds: Vec<f64> = dist.iter().flatten().copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    let (mut lo, mut hi) = (0usize, thresholds.len() - 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let t = thresholds[mid];
        if perfect_matching(k, &|i, j| dist[i][j] <= t).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let t = thresholds[lo];
    let assignment = if k <= LEXICOGRAPHIC_LIMIT {
        lexicographic_assignment(k, &|i, j| dist[i][j] <= t)
    } else {
        let right_of = perfect_matching(k, &|i, j| dist[i][j] <= t).expect("threshold admits a matching");
        let mut a = vec![0; k];
        for (j, &i) in right_of.iter().enumerate() {
            a[i] = j;
        }
        a
    };
    let pairs: Vec<(Point, Point)> = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| (left[i].clone(), right[j].clone()))
        .collect();
    let max_displacement = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| dist[i][j])
        .fold(0.0, f64::max);
    Ok(Matching {
        region: region.clone(),
        count: k,
        pairs,
        max_displacement,
    })
}

/// Fixes left points in order to the smallest right index that still admits a
/// perfect matching of the remaining points.
fn lexicographic_assignment(k: usize, allowed: &dyn Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut fixed: Vec<Option<usize>> = vec![None; k];
    let mut used = vec![false; k];
    for i in 0..k {
        for j in 0..k {
            if used[j] || !allowed(i, j) {
                continue;
            }
            fixed[i] = Some(j);
            let ok = perfect_matching(k, &|a, b| match fixed[a] {
                Some(fj) => b == fj,
                None => !(used[b] || b == j) && allowed(a, b),
            })
            .is_some();
            if ok {
                used[j] = true;
                break;
            }
            fixed[i] = None;
        }
    }
    fixed.into_iter().map(|j| j.expect("a perfect matching exists at this threshold")).collect()
}
