//! Knot type of an assembled heteroclinic curve, checked over a fan of
//! projection directions.

use nalgebra::Vector3;
use serde::Serialize;

use crate::heteroclinic::HeteroclinicKnot;
use crate::knots::{
    alexander, direction_fan, identify_polynomial, is_positive, project, KnotError, KnotName, LaurentPoly,
};

/// The plane x = y seen face on.
pub fn default_view() -> Vector3<f64> {
    Vector3::new(1.0, -1.0, 0.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct ViewResult {
    pub direction: [f64; 3],
    pub crossings: usize,
    pub positive: bool,
    pub alexander: LaurentPoly,
}

#[derive(Debug, Clone, Serialize)]
pub struct Classification {
    pub sigma: f64,
    pub r: f64,
    pub beta: f64,
    pub gap_norm: f64,
    pub alexander: LaurentPoly,
    pub identification: KnotName,
    pub verdict: String,
    /// Every view gave the same polynomial.
    pub stable: bool,
    pub views: Vec<ViewResult>,
    pub passages: usize,
    pub min_separation: f64,
    pub far_radius: f64,
    pub vertices: usize,
}

/// Projects along `count` directions fanned around `base` and reads off the
/// Alexander polynomial of each diagram. The first direction is `base` itself
/// and determines the reported polynomial.
pub fn classify_knot(
    knot: &HeteroclinicKnot,
    base: Vector3<f64>,
    count: usize,
    spread: f64,
    seed: u64,
) -> Result<Classification, KnotError> {
    let views = direction_fan(base, count.max(1), spread, seed)
        .into_iter()
        .map(|dir| {
            let d = project(&knot.curve, dir)?;
            let dir = dir.normalize();
            Ok(ViewResult {
                direction: [dir.x, dir.y, dir.z],
                crossings: d.crossings.len(),
                positive: is_positive(&d),
                alexander: alexander(&d)?,
            })
        })
        .collect::<Result<Vec<_>, KnotError>>()?;
    let first = views[0].alexander.clone();
    let identification = identify_polynomial(&first);
    Ok(Classification {
        sigma: knot.params.sigma,
        r: knot.params.r,
        beta: knot.params.beta,
        gap_norm: knot.gap_norm,
        stable: views.iter().all(|v| v.alexander == first),
        verdict: identification.verdict(),
        identification,
        alexander: first,
        views,
        passages: knot.passages,
        min_separation: knot.min_separation,
        far_radius: knot.far_radius,
        vertices: knot.curve.vertices.len(),
    })
}
