//! Two-stage weight calibration: Dirichlet coarse search ranked by
//! hypervolume contribution, then Gaussian fine-tuning ranked by the
//! geometric mean of normalised PDR and inverse energy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Dirichlet, Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cost::{normalize, WeightVector, FEATURES};

#[derive(Debug, Error, PartialEq)]
pub enum CalibError {
    #[error("point (pdr={pdr}, energy={energy}) does not dominate the reference point")]
    InvalidReference { pdr: f64, energy: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePoint {
    pub pdr: f64,
    /// Joules; lower is better.
    pub energy: f64,
}

impl ObjectivePoint {
    pub fn new(pdr: f64, energy: f64) -> Self {
        ObjectivePoint { pdr, energy }
    }

    /// Weakly better on both objectives and strictly better on one.
    pub fn dominates(&self, other: &ObjectivePoint) -> bool {
        self.pdr >= other.pdr
            && self.energy <= other.energy
            && (self.pdr > other.pdr || self.energy < other.energy)
    }
}

/// `count` draws from a symmetric Dirichlet(`alpha`) over `dim` components.
pub fn dirichlet_sample(dim: usize, alpha: f64, count: usize, seed: u64) -> Result<Vec<Vec<f64>>, CalibError> {
    if dim < 2 {
        return Err(CalibError::InvalidArgument("dimension must be at least 2".into()));
    }
    if !(alpha > 0.0) {
        return Err(CalibError::InvalidArgument("alpha must be > 0".into()));
    }
    // `Dirichlet` in rand_distr is const-generic, so a runtime dimension
    // goes through normalised gamma draws.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gamma = rand_distr::Gamma::new(alpha, 1.0).map_err(|e| CalibError::InvalidArgument(e.to_string()))?;
    Ok((0..count)
        .map(|_| {
            let g: Vec<f64> = (0..dim).map(|_| gamma.sample(&mut rng)).collect();
            let s: f64 = g.iter().sum();
            g.into_iter().map(|x| x / s).collect()
        })
        .collect())
}

/// Dirichlet samples as six-component weight vectors.
pub fn dirichlet_weights(alpha: f64, count: usize, seed: u64) -> Result<Vec<WeightVector>, CalibError> {
    if !(alpha > 0.0) {
        return Err(CalibError::InvalidArgument("alpha must be > 0".into()));
    }
    let dist = Dirichlet::<f64, FEATURES>::new([alpha; FEATURES]).map_err(|e| CalibError::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            WeightVector::normalized(dist.sample(&mut rng)).map_err(|e| CalibError::InvalidArgument(e.to_string()))
        })
        .collect()
}

/// Indices of the non-dominated points (maximise pdr, minimise energy), in
/// input order.
pub fn pareto_front(points: &[ObjectivePoint]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|q| q.dominates(&points[i])))
        .collect()
}

/// Area dominated by `points` and bounded by `reference`.
pub fn hypervolume_2d(points: &[ObjectivePoint], reference: ObjectivePoint) -> Result<f64, CalibError> {
    for p in points {
        if !(p.pdr >= reference.pdr && p.energy <= reference.energy) {
            return Err(CalibError::InvalidReference { pdr: p.pdr, energy: p.energy });
        }
    }
    let mut sorted: Vec<ObjectivePoint> = points.to_vec();
    sorted.sort_by(|a, b| b.pdr.total_cmp(&a.pdr).then(a.energy.total_cmp(&b.energy)));
    let mut area = 0.0;
    let mut min_energy = reference.energy;
    for (i, p) in sorted.iter().enumerate() {
        min_energy = min_energy.min(p.energy);
        let next = sorted.get(i + 1).map_or(reference.pdr, |q| q.pdr);
        area += (p.pdr - next) * (reference.energy - min_energy);
    }
    Ok(area)
}

/// Volume lost when each point is removed from the set.
pub fn exclusive_contributions(points: &[ObjectivePoint], reference: ObjectivePoint) -> Result<Vec<f64>, CalibError> {
    let total = hypervolume_2d(points, reference)?;
    (0..points.len())
        .map(|i| {
            let rest: Vec<ObjectivePoint> =
                points.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, p)| *p).collect();
            Ok((total - hypervolume_2d(&rest, reference)?).max(0.0))
        })
        .collect()
}

/// Reference point just beyond the worst observed values: 1.1 x the largest
/// energy and the smallest pdr divided by 1.1.
pub fn reference_point(points: &[ObjectivePoint]) -> ObjectivePoint {
    let max_e = points.iter().map(|p| p.energy).fold(0.0, f64::max);
    let min_pdr = points.iter().map(|p| p.pdr).fold(f64::INFINITY, f64::min);
    ObjectivePoint { pdr: if min_pdr.is_finite() { min_pdr / 1.1 } else { 0.0 }, energy: 1.1 * max_e }
}

/// Gaussian perturbations of `base`, clamped at zero and renormalised.
pub fn fine_tune(base: &WeightVector, sigma: f64, count: usize, seed: u64) -> Result<Vec<WeightVector>, CalibError> {
    if !(sigma >= 0.0) {
        return Err(CalibError::InvalidArgument("sigma must be >= 0".into()));
    }
    if sigma == 0.0 {
        return Ok(vec![*base; count]);
    }
    let noise = Normal::new(0.0, sigma).map_err(|e| CalibError::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let w = base.as_array().map(|x| (x + noise.sample(&mut rng)).max(0.0));
        if w.iter().sum::<f64>() > 0.0 {
            out.push(WeightVector::normalized(w).map_err(|e| CalibError::InvalidArgument(e.to_string()))?);
        }
    }
    Ok(out)
}

pub fn geometric_mean_score(norm_pdr: f64, norm_inv_energy: f64) -> f64 {
    (norm_pdr.max(0.0) * norm_inv_energy.max(0.0)).sqrt()
}

/// Geometric-mean scores with min-max normalisation over `points`.
pub fn score_set(points: &[ObjectivePoint]) -> Vec<f64> {
    let inv: Vec<f64> = points.iter().map(|p| 1.0 / p.energy.max(f64::MIN_POSITIVE)).collect();
    let (pmin, pmax) = min_max(points.iter().map(|p| p.pdr));
    let (imin, imax) = min_max(inv.iter().copied());
    points
        .iter()
        .zip(&inv)
        .map(|(p, i)| geometric_mean_score(normalize(p.pdr, pmin, pmax), normalize(*i, imin, imax)))
        .collect()
}

fn min_max(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub coarse: usize,
    pub keep: usize,
    pub fine: usize,
    pub sigma: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig { coarse: 150, keep: 10, fine: 50, sigma: 0.03, alpha: 1.0, seed: 0 }
    }
}

impl CalibrationConfig {
    pub fn smoke() -> Self {
        CalibrationConfig { coarse: 5, keep: 5, fine: 5, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Coarse,
    Fine,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateRow {
    pub id: usize,
    pub weights: WeightVector,
    pub objective: ObjectivePoint,
    /// Exclusive hypervolume contribution (coarse) or geometric-mean score (fine).
    pub score: f64,
    pub stage: Stage,
}

#[derive(Debug, Clone)]
pub struct CalibrationReport {
    pub rows: Vec<CandidateRow>,
    /// Ids of the coarse candidates kept after ranking, best first.
    pub retained: Vec<usize>,
    pub base: WeightVector,
    pub base_score: f64,
    pub chosen: WeightVector,
    pub chosen_score: f64,
}

impl CalibrationReport {
    /// CSV with columns `id,w1..w6,pdr,energy,score,stage`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("id,w1,w2,w3,w4,w5,w6,pdr,energy,score,stage\n");
        for r in &self.rows {
            let w = r.weights.as_array();
            let stage = match r.stage {
                Stage::Coarse => "coarse",
                Stage::Fine => "fine",
            };
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.id, w[0], w[1], w[2], w[3], w[4], w[5], r.objective.pdr, r.objective.energy, r.score, stage
            ));
        }
        s
    }
}

/// Runs both stages. `evaluate` maps a batch of weight vectors to their
/// objective points (in order), so callers may evaluate in parallel.
pub fn calibrate<E>(
    config: &CalibrationConfig,
    mut evaluate: impl FnMut(&[WeightVector]) -> Result<Vec<ObjectivePoint>, E>,
) -> Result<CalibrationReport, E>
where
    E: From<CalibError>,
{
    if config.coarse == 0 || config.keep == 0 {
        return Err(CalibError::InvalidArgument("coarse and keep must be positive".into()).into());
    }
    let coarse = dirichlet_weights(config.alpha, config.coarse, config.seed)?;
    let coarse_obj = evaluate(&coarse)?;
    let reference = reference_point(&coarse_obj);
    let contrib = exclusive_contributions(&coarse_obj, reference)?;
    let mut order: Vec<usize> = (0..coarse.len()).collect();
    order.sort_by(|a, b| contrib[*b].total_cmp(&contrib[*a]).then(a.cmp(b)));
    let retained: Vec<usize> = order.iter().take(config.keep).copied().collect();
    let best = retained[0];
    let base = coarse[best];

    let fine = fine_tune(&base, config.sigma, config.fine, config.seed.wrapping_add(1))?;
    let fine_obj = evaluate(&fine)?;
    let mut pool = vec![coarse_obj[best]];
    pool.extend(fine_obj.iter().copied());
    let scores = score_set(&pool);
    let mut pick = 0;
    for i in 1..scores.len() {
        if scores[i] > scores[pick] {
            pick = i;
        }
    }
    let chosen = if pick == 0 { base } else { fine[pick - 1] };

    let mut rows = Vec::with_capacity(coarse.len() + fine.len());
    for (i, w) in coarse.iter().enumerate() {
        rows.push(CandidateRow { id: i, weights: *w, objective: coarse_obj[i], score: contrib[i], stage: Stage::Coarse });
    }
    for (i, w) in fine.iter().enumerate() {
        rows.push(CandidateRow {
            id: coarse.len() + i,
            weights: *w,
            objective: fine_obj[i],
            score: scores[i + 1],
            stage: Stage::Fine,
        });
    }
    Ok(CalibrationReport { rows, retained, base, base_score: scores[0], chosen, chosen_score: scores[pick] })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(pdr: f64, energy: f64) -> ObjectivePoint {
        ObjectivePoint::new(pdr, energy)
    }

    #[test]
    fn dirichlet_on_simplex() {
        let ws = dirichlet_weights(1.0, 150, 3).unwrap();
        assert_eq!(ws.len(), 150);
        for w in ws {
            let a = w.as_array();
            assert!(a.iter().all(|x| *x >= 0.0));
            assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn pareto_examples() {
        assert_eq!(pareto_front(&[p(0.5, 1.0)]), vec![0]);
        assert_eq!(pareto_front(&[p(0.9, 2.0), p(0.8, 3.0)]), vec![0]);
        assert_eq!(pareto_front(&[p(0.9, 3.0), p(0.8, 2.0)]), vec![0, 1]);
    }

    #[test]
    fn hypervolume_examples() {
        let r = p(0.0, 1.0);
        assert_eq!(hypervolume_2d(&[p(1.0, 0.0)], r).unwrap(), 1.0);
        assert_eq!(hypervolume_2d(&[], r).unwrap(), 0.0);
        // Union of [0,0.5]x[0.5,1] and [0,0.75]x[0.75,1].
        assert!((hypervolume_2d(&[p(0.5, 0.5), p(0.75, 0.75)], r).unwrap() - 0.3125).abs() < 1e-12);
        assert!(matches!(hypervolume_2d(&[p(0.5, 1.5)], r), Err(CalibError::InvalidReference { .. })));
    }

    #[test]
    fn fine_tune_examples() {
        let base = WeightVector::default();
        assert_eq!(fine_tune(&base, 0.0, 50, 1).unwrap(), vec![base; 50]);
        let c = fine_tune(&base, 0.03, 50, 1).unwrap();
        assert_eq!(c.len(), 50);
        for w in c {
            assert!((w.as_array().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn geometric_mean_examples() {
        assert_eq!(geometric_mean_score(1.0, 1.0), 1.0);
        assert_eq!(geometric_mean_score(1.0, 0.0), 0.0);
        assert_eq!(geometric_mean_score(0.5, 0.5), 0.5);
    }

    #[test]
    fn calibrate_smoke_with_synthetic_objective() {
        // PDR rewards weight on ETX, energy rewards weight on tx energy.
        let eval = |ws: &[WeightVector]| -> Result<Vec<ObjectivePoint>, CalibError> {
            Ok(ws.iter().map(|w| p(0.5 + 0.5 * w.get(4), 2.0 - w.get(1))).collect())
        };
        let r = calibrate(&CalibrationConfig::smoke(), eval).unwrap();
        assert_eq!(r.rows.len(), 10);
        assert!(r.chosen_score >= r.base_score);
        assert!((r.chosen.as_array().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        assert_eq!(r.to_csv().lines().count(), 11);
    }
}
