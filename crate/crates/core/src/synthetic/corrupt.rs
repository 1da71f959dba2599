//! Planted displacement of reference points.

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{ErrorLaw, Result, SceneSpec};
use crate::io::{Point3, PointCloud};
use crate::rng::{derive_seed_path, substream, tags};

const BLOCK: usize = 4096;
const MAX_REDRAWS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenePair {
    pub reference: PointCloud,
    /// Carries `true_error_mm`, `sigma_mm` and the reference `primitive`.
    pub mls: PointCloud,
}

impl ScenePair {
    pub fn true_error_mm(&self) -> &[f64] {
        self.mls
            .scalar("true_error_mm")
            .expect("set by generate_pair")
    }
}

/// Displaces every point by an isotropic Gaussian of scale `sigma(p)`,
/// redrawing magnitudes above the truncation limit. The local density is
/// read from the `sample_density` scalar when present, else taken as
/// `fallback_density`.
///
/// Returns the displaced cloud (with `true_error_mm` and `sigma_mm` scalars)
/// and the displacement magnitudes in mm.
pub fn corrupt(
    reference: &PointCloud,
    law: &ErrorLaw,
    fallback_density: f64,
    seed: u64,
) -> Result<(PointCloud, Vec<f64>)> {
    law.validate()?;
    let density = reference.scalar("sample_density");
    let limit_m = law.truncate_mm / 1000.0;
    let blocks: Vec<(Vec<Point3>, Vec<f64>, Vec<f64>)> = reference
        .points()
        .par_chunks(BLOCK)
        .enumerate()
        .map(|(b, chunk)| {
            let mut rng = substream(seed, &[tags::CORRUPT, b as u64]);
            let mut pts = Vec::with_capacity(chunk.len());
            let mut err = Vec::with_capacity(chunk.len());
            let mut sig = Vec::with_capacity(chunk.len());
            for (j, p) in chunk.iter().enumerate() {
                let d = density.map_or(fallback_density, |s| s[b * BLOCK + j]);
                let sigma_m = law.sigma_mm(p, d) / 1000.0;
                let mut disp = [0.0; 3];
                if sigma_m > 0.0 {
                    for attempt in 0..=MAX_REDRAWS {
                        for v in disp.iter_mut() {
                            *v = sigma_m
                                * <StandardNormal as Distribution<f64>>::sample(
                                    &StandardNormal,
                                    &mut rng,
                                );
                        }
                        let len =
                            (disp[0] * disp[0] + disp[1] * disp[1] + disp[2] * disp[2]).sqrt();
                        if len < limit_m {
                            break;
                        }
                        if attempt == MAX_REDRAWS {
                            // Heavy truncation: keep the direction, clamp the length.
                            let s = 0.999 * limit_m / len;
                            disp = [disp[0] * s, disp[1] * s, disp[2] * s];
                        }
                    }
                }
                let q = Point3::new(p.x + disp[0], p.y + disp[1], p.z + disp[2]);
                err.push(p.distance(&q) * 1000.0);
                sig.push(sigma_m * 1000.0);
                pts.push(q);
            }
            (pts, err, sig)
        })
        .collect();
    let mut points = Vec::with_capacity(reference.len());
    let mut errors = Vec::with_capacity(reference.len());
    let mut sigmas = Vec::with_capacity(reference.len());
    for (p, e, s) in blocks {
        points.extend(p);
        errors.extend(e);
        sigmas.extend(s);
    }
    let mls = PointCloud::new(points)
        .with_scalar("true_error_mm", errors.clone())
        .and_then(|c| c.with_scalar("sigma_mm", sigmas))
        .expect("scalar lengths match");
    Ok((mls, errors))
}

/// Reference cloud plus a corrupted subsample of `mls_fraction` of its points.
pub fn generate_pair(spec: &SceneSpec) -> Result<ScenePair> {
    let reference = super::generate_reference(spec)?;
    let n = reference.len();
    let keep = ((spec.scene.mls_fraction * n as f64).round() as usize).min(n);
    let mut rng = substream(spec.scene.seed, &[tags::CORRUPT]);
    let mut picked = index::sample(&mut rng, n, keep).into_vec();
    picked.sort_unstable();
    let subset = reference.select(&picked);
    let seed = derive_seed_path(spec.scene.seed, &[tags::CORRUPT, 1]);
    let (mut mls, _) = corrupt(&subset, &spec.error, spec.scene.density, seed)?;
    let primitive = subset
        .scalar("primitive")
        .expect("set by generate_reference")
        .to_vec();
    mls.set_scalar("primitive", primitive)
        .expect("lengths match");
    Ok(ScenePair { reference, mls })
}
