//! Randomized primitive detection on an organized cloud.
//!
//! Each trial draws four oriented points from a pixel window around a random
//! seed, fits every enabled class from its minimal subset, and keeps the
//! candidates consistent with all four samples. Candidates are scored on a
//! random subset of the unexplained points. The best one is extracted once
//! the chance of having missed a larger shape drops below
//! `DetectionParams::probability`: it is refined on the largest
//! 8-connected component of its inliers, compared against simpler classes
//! fitted to the same points, and its inliers are removed.

use nalgebra::Vector3;
use quadric_core::QuadricClass;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::refine::refine;
use crate::shapes::{fit_from_samples, minimal_samples, Primitive, ShapeDetection};
use crate::{OrganizedCloud, PerceptionError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionParams {
    /// Inlier distance band (metres).
    pub epsilon: f64,
    /// Largest normal deviation of an inlier (radians).
    pub normal_threshold: f64,
    pub min_inliers: usize,
    /// Acceptable probability of having missed a better candidate.
    pub probability: f64,
    pub classes: Vec<QuadricClass>,
    pub seed: u64,
    pub batch_size: usize,
    /// Points used to estimate candidate scores.
    pub subset_size: usize,
    /// Half-widths (pixels) of the sampling windows.
    pub sample_windows: Vec<usize>,
    pub max_radius: f64,
    pub min_half_angle: f64,
    pub max_half_angle: f64,
    /// Trials after which the current extraction round gives up.
    pub max_samples: usize,
    /// A simpler class wins if it explains at least `1 − margin` as many
    /// points.
    pub class_margin: f64,
    /// Consecutive failed extractions before detection stops.
    pub max_failures: usize,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            epsilon: 0.01,
            normal_threshold: 25f64.to_radians(),
            min_inliers: 500,
            probability: 0.05,
            classes: QuadricClass::CONSTRAINED.to_vec(),
            seed: 0,
            batch_size: 256,
            subset_size: 2048,
            sample_windows: vec![8, 16, 32, 64],
            max_radius: 5.0,
            min_half_angle: 5f64.to_radians(),
            max_half_angle: 80f64.to_radians(),
            max_samples: 40_000,
            class_margin: 0.02,
            max_failures: 8,
        }
    }
}

pub fn detect_shapes(cloud: &OrganizedCloud, params: &DetectionParams) -> Result<Vec<ShapeDetection>> {
    let remaining: Vec<bool> = (0..cloud.len())
        .map(|i| cloud.points[i].is_some() && cloud.normals[i].is_some())
        .collect();
    if !remaining.iter().any(|&r| r) {
        return Err(PerceptionError::EmptyCloud);
    }
    let mut detector = Detector {
        cloud,
        params,
        cos_threshold: params.normal_threshold.cos(),
        remaining,
    };
    Ok(detector.run())
}

struct Detector<'a> {
    cloud: &'a OrganizedCloud,
    params: &'a DetectionParams,
    cos_threshold: f64,
    remaining: Vec<bool>,
}

fn round_rng(seed: u64, round: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(round.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ batch);
    rng
}

impl Detector<'_> {
    fn run(&mut self) -> Vec<ShapeDetection> {
        let params = self.params;
        let mut detections = Vec::new();
        let mut failures = 0;
        let mut round = 0u64;
        loop {
            let candidates: Vec<usize> = (0..self.remaining.len()).filter(|&i| self.remaining[i]).collect();
            if candidates.len() < params.min_inliers {
                break;
            }
            let mut rng = round_rng(params.seed, round, 0);
            let Some(best) = self.search(&candidates, round, &mut rng) else {
                break;
            };
            match self.extract(best, &mut rng) {
                Some(det) if det.inliers.len() >= params.min_inliers => {
                    log::debug!("extracted {:?} with {} inliers", det.class(), det.score);
                    for &i in &det.inliers {
                        self.remaining[i] = false;
                    }
                    detections.push(det);
                    failures = 0;
                }
                _ => {
                    failures += 1;
                    if failures >= params.max_failures {
                        break;
                    }
                }
            }
            round += 1;
        }
        detections
    }

    fn oriented(&self, i: usize) -> (Vector3<f64>, Vector3<f64>) {
        (
            self.cloud.points[i].expect("oriented point"),
            self.cloud.normals[i].expect("oriented point"),
        )
    }

    /// Probability that one trial samples a given shape of `n` points out of
    /// `total`, for localized four-point samples.
    fn trial_probability(&self, n: f64, total: f64) -> f64 {
        let levels = self.params.sample_windows.len().max(1) as f64;
        (n / (total * levels * 4.0)).min(1.0)
    }

    /// Sample candidates until the best one is reliable; `None` once no
    /// shape of the minimum size is likely to remain.
    fn search(&self, candidates: &[usize], round: u64, rng: &mut ChaCha8Rng) -> Option<Primitive> {
        let params = self.params;
        let total = candidates.len() as f64;
        let subset_len = params.subset_size.min(candidates.len());
        let subset: Vec<(Vector3<f64>, Vector3<f64>)> = index::sample(rng, candidates.len(), subset_len)
            .into_iter()
            .map(|k| self.oriented(candidates[k]))
            .collect();
        let scale = total / subset.len() as f64;
        let min = params.min_inliers as f64;

        let mut best: Option<(Primitive, f64)> = None;
        let mut drawn = 0usize;
        let mut batch = 0u64;
        loop {
            batch += 1;
            let mut brng = round_rng(params.seed, round, batch);
            let samples: Vec<[usize; 4]> = (0..params.batch_size)
                .filter_map(|_| self.draw_sample(&mut brng, candidates))
                .collect();
            drawn += params.batch_size;
            let proposals: Vec<Primitive> = samples
                .par_iter()
                .flat_map_iter(|s| self.proposals(s))
                .collect();
            let scores: Vec<usize> = proposals
                .par_iter()
                .map(|c| {
                    subset
                        .iter()
                        .filter(|(p, n)| c.is_compatible(p, n, params.epsilon, self.cos_threshold))
                        .count()
                })
                .collect();
            for (c, &s) in proposals.iter().zip(&scores) {
                let est = s as f64 * scale;
                let better = match best {
                    None => true,
                    Some((b, e)) => est > e || (est == e && c.class().dof() < b.class().dof()),
                };
                if better {
                    best = Some((*c, est));
                }
            }
            let best_est = best.map_or(0.0, |b| b.1);
            let miss = |n: f64| (1.0 - self.trial_probability(n, total)).powf(drawn as f64);
            if best_est >= min && miss(best_est) < params.probability {
                return best.map(|b| b.0);
            }
            if best_est < min && miss(min) < params.probability {
                return None;
            }
            if drawn >= params.max_samples {
                return best.filter(|b| b.1 >= min).map(|b| b.0);
            }
        }
    }

    fn draw_sample(&self, rng: &mut ChaCha8Rng, candidates: &[usize]) -> Option<[usize; 4]> {
        let windows = &self.params.sample_windows;
        let seed = candidates[rng.random_range(0..candidates.len())];
        let w = windows[rng.random_range(0..windows.len())] as i64;
        let (u0, v0) = self.cloud.pixel(seed);
        let (width, height) = (self.cloud.width() as isize, self.cloud.height() as isize);
        let mut out = [seed; 4];
        let mut k = 1;
        for _ in 0..40 {
            let u = (u0 as i64 + rng.random_range(-w..=w)) as isize;
            let v = (v0 as i64 + rng.random_range(-w..=w)) as isize;
            if u < 0 || v < 0 || u >= width || v >= height {
                continue;
            }
            let i = v as usize * width as usize + u as usize;
            if self.remaining[i] && !out[..k].contains(&i) {
                out[k] = i;
                k += 1;
                if k == 4 {
                    return Some(out);
                }
            }
        }
        None
    }

    fn admissible(&self, p: &Primitive) -> bool {
        match *p {
            Primitive::Plane { .. } => true,
            Primitive::Sphere { radius, .. } | Primitive::Cylinder { radius, .. } => {
                radius <= self.params.max_radius
            }
            Primitive::Cone { half_angle, .. } => {
                half_angle >= self.params.min_half_angle && half_angle <= self.params.max_half_angle
            }
        }
    }

    /// Candidates of every enabled class consistent with all four samples.
    fn proposals(&self, sample: &[usize; 4]) -> Vec<Primitive> {
        let (pts, nrm): (Vec<_>, Vec<_>) = sample.iter().map(|&i| self.oriented(i)).unzip();
        self.params
            .classes
            .iter()
            .filter(|c| minimal_samples(**c) <= 4)
            .filter_map(|&class| fit_from_samples(class, &pts, &nrm))
            .filter(|c| {
                self.admissible(c)
                    && pts
                        .iter()
                        .zip(&nrm)
                        .all(|(p, n)| c.is_compatible(p, n, self.params.epsilon, self.cos_threshold))
            })
            .collect()
    }

    /// Largest 8-connected set of unexplained pixels compatible with `p`.
    fn component(&self, p: &Primitive) -> Vec<usize> {
        let eps = self.params.epsilon;
        let mask: Vec<bool> = (0..self.remaining.len())
            .into_par_iter()
            .map(|i| {
                self.remaining[i] && {
                    let (x, n) = self.oriented(i);
                    p.is_compatible(&x, &n, eps, self.cos_threshold)
                }
            })
            .collect();
        largest_component(&mask, self.cloud.width(), self.cloud.height())
    }

    /// Alternate refitting and inlier recollection.
    fn polish(&self, start: Primitive) -> Option<(Primitive, Vec<usize>)> {
        let mut prim = start;
        let mut comp = self.component(&prim);
        for _ in 0..8 {
            if comp.len() < 8 {
                break;
            }
            let pts: Vec<Vector3<f64>> = comp.iter().map(|&i| self.oriented(i).0).collect();
            let Some(next) = refine(&prim, &pts).filter(|c| self.admissible(c)) else {
                break;
            };
            let next_comp = self.component(&next);
            if (next_comp.len() as f64) < 0.98 * comp.len() as f64 {
                break;
            }
            let unchanged = next_comp == comp;
            prim = next;
            comp = next_comp;
            if unchanged {
                break;
            }
        }
        (!comp.is_empty()).then_some((prim, comp))
    }

    fn extract(&self, candidate: Primitive, rng: &mut ChaCha8Rng) -> Option<ShapeDetection> {
        let (mut prim, mut comp) = self.polish(candidate)?;
        let mut simpler: Vec<QuadricClass> = self
            .params
            .classes
            .iter()
            .copied()
            .filter(|c| c.dof() < prim.class().dof())
            .collect();
        simpler.sort_by_key(|c| c.dof());
        for class in simpler {
            let Some(alt) = self.fit_on(class, &comp, rng) else {
                continue;
            };
            // Only the region already explained counts, so a simpler shape
            // cannot win by reaching into unrelated surfaces.
            let covered = self.count_compatible(&alt, &comp);
            if covered as f64 >= (1.0 - self.params.class_margin) * comp.len() as f64 {
                if let Some(polished) = self.polish(alt) {
                    (prim, comp) = polished;
                    break;
                }
            }
        }
        let score = comp.len();
        Some(ShapeDetection {
            primitive: prim,
            inliers: comp,
            score,
        })
    }

    fn count_compatible(&self, p: &Primitive, indices: &[usize]) -> usize {
        indices
            .iter()
            .filter(|&&i| {
                let (x, n) = self.oriented(i);
                p.is_compatible(&x, &n, self.params.epsilon, self.cos_threshold)
            })
            .count()
    }

    /// Best fit of `class` to the points of `region`: a short RANSAC
    /// followed by refinement on the region's compatible points.
    fn fit_on(&self, class: QuadricClass, region: &[usize], rng: &mut ChaCha8Rng) -> Option<Primitive> {
        if region.len() < 4 {
            return None;
        }
        let probe: Vec<usize> = index::sample(rng, region.len(), region.len().min(1024))
            .into_iter()
            .map(|k| region[k])
            .collect();
        let mut best: Option<(Primitive, usize)> = None;
        for _ in 0..48 {
            let picks = index::sample(rng, region.len(), 4);
            let (pts, nrm): (Vec<_>, Vec<_>) = picks.into_iter().map(|k| self.oriented(region[k])).unzip();
            let Some(c) = fit_from_samples(class, &pts, &nrm).filter(|c| self.admissible(c)) else {
                continue;
            };
            let s = self.count_compatible(&c, &probe);
            if best.is_none_or(|b| s > b.1) {
                best = Some((c, s));
            }
        }
        let mut prim = best?.0;
        for _ in 0..3 {
            let pts: Vec<Vector3<f64>> = region
                .iter()
                .map(|&i| self.oriented(i))
                .filter(|(x, n)| prim.is_compatible(x, n, self.params.epsilon, self.cos_threshold))
                .map(|(x, _)| x)
                .collect();
            match refine(&prim, &pts).filter(|c| self.admissible(c)) {
                Some(next) if pts.len() >= 8 => prim = next,
                _ => break,
            }
        }
        Some(prim)
    }
}

fn largest_component(mask: &[bool], width: usize, height: usize) -> Vec<usize> {
    let mut label = vec![false; mask.len()];
    let mut best: Vec<usize> = Vec::new();
    let mut stack = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || label[start] {
            continue;
        }
        let mut comp = Vec::new();
        label[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            comp.push(i);
            let (u, v) = ((i % width) as isize, (i / width) as isize);
            for dv in -1..=1 {
                for du in -1..=1 {
                    let (uu, vv) = (u + du, v + dv);
                    if uu < 0 || vv < 0 || uu >= width as isize || vv >= height as isize {
                        continue;
                    }
                    let j = vv as usize * width + uu as usize;
                    if mask[j] && !label[j] {
                        label[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best.sort_unstable();
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_use_eight_connectivity() {
        // Two diagonal-touching pixels plus a separate pair.
        let w = 5;
        let mut mask = vec![false; 25];
        for i in [0, 6, 12, 4, 9] {
            mask[i] = true;
        }
        assert_eq!(largest_component(&mask, w, 5), vec![0, 6, 12]);
    }
}
