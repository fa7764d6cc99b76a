//! Example sequences with known behaviour, used to cross-check the checkers.

use super::{MeasureSequence, Tri};
use crate::boundedness::{GroundSpace, Point, Region};
use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, LocallyFiniteMeasure};
use crate::test_functions::{lipschitz_battery, FunctionFamily};

/// Battery size and seed used for catalogue entries.
const BATTERY_SIZE: usize = 8;
const BATTERY_SEED: u64 = 1;

#[derive(Debug, Clone)]
pub struct CatalogueEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub sequence: MeasureSequence,
    /// Behaviour known analytically on the default grid.
    pub expected: Tri,
    pub battery: FunctionFamily,
    pub regions: Vec<Region>,
}

/// Names of the eight core entries followed by the two weak-space embeddings.
pub const CATALOGUE_NAMES: [&str; 10] = [
    "delta_shift",
    "vanish_at_origin",
    "mass_ramp",
    "lattice_shift",
    "escape",
    "wrong_limit",
    "oscillating",
    "mass_blowup",
    "weak_vanish_to_null",
    "weak_vanish_to_origin",
];

fn finite(space: GroundSpace, atoms: &[(f64, f64)]) -> Result<LocallyFiniteMeasure> {
    Ok(LocallyFiniteMeasure::from_finite(DiscreteMeasure::from_scalars(space, atoms)?))
}

/// Σ_{k ∈ Z} δ_{k + shift} on the line, materialized level by level.
fn lattice(space: GroundSpace, shift: f64) -> LocallyFiniteMeasure {
    LocallyFiniteMeasure::from_generator(space, None, move |m| {
        let m = m as i64;
        let pts = (-m..=m)
            .map(|k| Point::scalar(k as f64 + shift))
            .filter(|x| space.in_level(x, m as u32))
            .collect();
        DiscreteMeasure::from_points(space, pts)
    })
}

/// One catalogue entry by name.
pub fn catalogue_entry(name: &str) -> Result<CatalogueEntry> {
    let line = GroundSpace::euclidean(1)?;
    let hl = GroundSpace::halfline();
    let weak = GroundSpace::weak(1)?;
    let recip = |n: u64| 1.0 / n as f64;
    let (description, expected, space, sequence, regions): (&'static str, Tri, GroundSpace, MeasureSequence, Vec<Region>) =
        match name {
            "delta_shift" => (
                "δ_{1+1/n} → δ_1 on the line",
                Tri::Pass,
                line,
                MeasureSequence::new(name, finite(line, &[(1.0, 1.0)])?, move |n| {
                    finite(line, &[(1.0 + recip(n), 1.0)])
                }),
                vec![Region::closed(0.0, 1.5), Region::closed(0.0, 1.0), Region::closed(2.0, 3.0)],
            ),
            "vanish_at_origin" => (
                "δ_{1/n} → 0 on the half-line bounded away from 0",
                Tri::Pass,
                hl,
                MeasureSequence::new(name, finite(hl, &[])?, move |n| finite(hl, &[(recip(n), 1.0)])),
                vec![
                    Region::annulus(0.5, 2.0),
                    Region::closed(1.0, 2.0),
                    Region::closed(0.1, 5.0),
                ],
            ),
            "mass_ramp" => (
                "(1 − 1/n) δ_1 → δ_1 on the line",
                Tri::Pass,
                line,
                MeasureSequence::new(name, finite(line, &[(1.0, 1.0)])?, move |n| {
                    finite(line, &[(1.0, 1.0 - recip(n))])
                }),
                vec![Region::closed(0.5, 1.5), Region::closed(-2.0, 0.0)],
            ),
            "lattice_shift" => (
                "Σ_k δ_{k + 1/(2n)} → Σ_k δ_k on the line (infinite total mass)",
                Tri::Pass,
                line,
                MeasureSequence::new(name, lattice(line, 0.0), move |n| Ok(lattice(line, 0.5 * recip(n)))),
                vec![Region::closed(-1.5, 2.5), Region::closed(0.25, 3.5)],
            ),
            "escape" => (
                "δ_n against the claimed limit δ_0 on the line",
                Tri::Fail,
                line,
                MeasureSequence::new(name, finite(line, &[(0.0, 1.0)])?, move |n| {
                    finite(line, &[(n as f64, 1.0)])
                }),
                vec![Region::closed(-1.0, 1.0), Region::closed(-0.5, 0.5)],
            ),
            "wrong_limit" => (
                "δ_{1/n} against the claimed limit δ_1 on the half-line",
                Tri::Fail,
                hl,
                MeasureSequence::new(name, finite(hl, &[(1.0, 1.0)])?, move |n| finite(hl, &[(recip(n), 1.0)])),
                vec![Region::closed(0.5, 2.0)],
            ),
            "oscillating" => (
                "δ_{(−1)^n} against the claimed limit δ_0 on the line",
                Tri::Fail,
                line,
                MeasureSequence::new(name, finite(line, &[(0.0, 1.0)])?, move |n| {
                    finite(line, &[(if n % 2 == 0 { 1.0 } else { -1.0 }, 1.0)])
                }),
                vec![Region::closed(-0.5, 0.5), Region::closed(0.5, 1.5)],
            ),
            "mass_blowup" => (
                "n δ_1 against the claimed limit δ_1 on the line",
                Tri::Fail,
                line,
                MeasureSequence::new(name, finite(line, &[(1.0, 1.0)])?, move |n| {
                    finite(line, &[(1.0, n as f64)])
                }),
                vec![Region::closed(0.5, 1.5)],
            ),
            "weak_vanish_to_null" => (
                "δ_{1/n} against the zero measure on the line with the weak boundedness",
                Tri::Fail,
                weak,
                MeasureSequence::new(name, finite(weak, &[])?, move |n| finite(weak, &[(recip(n), 1.0)])),
                vec![Region::Whole, Region::closed(-1.0, 1.0)],
            ),
            "weak_vanish_to_origin" => (
                "δ_{1/n} → δ_0 on the line with the weak boundedness",
                Tri::Pass,
                weak,
                MeasureSequence::new(name, finite(weak, &[(0.0, 1.0)])?, move |n| {
                    finite(weak, &[(recip(n), 1.0)])
                }),
                vec![Region::Whole, Region::closed(-1.0, 1.0)],
            ),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown catalogue entry {other:?}; known entries: {}",
                    CATALOGUE_NAMES.join(", ")
                )))
            }
        };
    let name = CATALOGUE_NAMES.iter().find(|n| **n == name).copied().expect("matched above");
    Ok(CatalogueEntry {
        name,
        description,
        sequence,
        expected,
        battery: lipschitz_battery(space, BATTERY_SIZE, BATTERY_SEED)?,
        regions,
    })
}

/// All catalogue entries, in [`CATALOGUE_NAMES`] order.
pub fn catalogue() -> Result<Vec<CatalogueEntry>> {
    CATALOGUE_NAMES.iter().map(|n| catalogue_entry(n)).collect()
}
