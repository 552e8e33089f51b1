//! Seeded k-means: k-means++ initialization, Lloyd's iterations to an
//! assignment fixpoint, best of a fixed number of restarts.

use rand::Rng;

use crate::seeding;

use super::ClusterError;

pub const RESTARTS: u64 = 5;
const MAX_ITERS: usize = 300;

#[derive(Clone, Debug)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    /// Within-cluster sum of squares of the final assignment.
    pub objective: f64,
    /// Objective after each assignment phase of the winning run;
    /// non-increasing by construction of Lloyd's algorithm.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}

fn nearest(point: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centers.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    (best, best_d)
}

fn kmeans_pp_init(points: &[Vec<f64>], k: usize, rng: &mut rand_chacha::ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..points.len())].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| squared_distance(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // all remaining mass at distance zero: pick any point
            rng.gen_range(0..points.len())
        } else {
            let mut target = rng.gen_range(0.0..total);
            let mut chosen = points.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        };
        centers.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            let d = squared_distance(p, centers.last().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centers
}

fn lloyd(points: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> KMeansResult {
    let k = centers.len();
    let dim = points[0].len();
    let mut assignments = vec![usize::MAX; points.len()];
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut changed = false;
        let mut objective = 0.0;
        for (i, p) in points.iter().enumerate() {
            let (j, d) = nearest(p, &centers);
            objective += d;
            if assignments[i] != j {
                assignments[i] = j;
                changed = true;
            }
        }
        history.push(objective);
        if !changed || iterations >= MAX_ITERS {
            return KMeansResult { assignments, centers, objective, objective_history: history, iterations };
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[assignments[i]] += 1;
            for (d, v) in p.iter().enumerate() {
                sums[assignments[i]][d] += v;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                for d in 0..dim {
                    centers[j][d] = sums[j][d] / counts[j] as f64;
                }
            }
            // an emptied cluster keeps its previous center
        }
    }
}

/// Cluster `points` into `k` cells. Deterministic given the seed; runs
/// [`RESTARTS`] seeded restarts and keeps the best objective.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult, ClusterError> {
    if points.is_empty() || k == 0 {
        return Err(ClusterError::KTooLarge { k, distinct: 0 });
    }
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    'outer: for p in points {
        for q in &distinct {
            if p == *q {
                continue 'outer;
            }
        }
        distinct.push(p);
        if distinct.len() > k {
            break;
        }
    }
    if distinct.len() < k {
        return Err(ClusterError::KTooLarge { k, distinct: distinct.len() });
    }

    let mut best: Option<KMeansResult> = None;
    for restart in 0..RESTARTS {
        let mut rng = seeding::rng(seed, restart);
        let centers = kmeans_pp_init(points, k, &mut rng);
        let result = lloyd(points, centers);
        if best.as_ref().map(|b| result.objective < b.objective).unwrap_or(true) {
            best = Some(result);
        }
    }
    Ok(best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k1_center_is_arithmetic_mean() {
        let points = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 0.0]];
        let r = kmeans(&points, 1, 0).unwrap();
        assert_eq!(r.centers.len(), 1);
        assert!((r.centers[0][0] - 3.0).abs() < 1e-12);
        assert!((r.centers[0][1] - 2.0).abs() < 1e-12);
        assert!(r.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn two_blobs_recovered() {
        use rand::Rng;
        let mut rng = crate::seeding::rng(5, 0);
        let mut points = Vec::new();
        let blob_a = [0.0, 0.0];
        let blob_b = [10.0, 10.0];
        for _ in 0..50 {
            points.push(vec![blob_a[0] + rng.gen_range(-1.0..1.0), blob_a[1] + rng.gen_range(-1.0..1.0)]);
            points.push(vec![blob_b[0] + rng.gen_range(-1.0..1.0), blob_b[1] + rng.gen_range(-1.0..1.0)]);
        }
        let r = kmeans(&points, 2, 1).unwrap();
        // brute-force oracle: true blob membership by nearest true center
        for (i, p) in points.iter().enumerate() {
            let to_a = squared_distance(p, &blob_a.to_vec());
            let to_b = squared_distance(p, &blob_b.to_vec());
            let oracle = to_a < to_b;
            let assigned_center = &r.centers[r.assignments[i]];
            let center_is_a = squared_distance(assigned_center, &blob_a.to_vec())
                < squared_distance(assigned_center, &blob_b.to_vec());
            assert_eq!(oracle, center_is_a, "point {} misclustered", i);
        }
    }

    #[test]
    fn k_too_large_is_rejected() {
        let points = vec![vec![1.0], vec![1.0], vec![2.0]];
        assert!(matches!(kmeans(&points, 3, 0), Err(ClusterError::KTooLarge { distinct: 2, .. })));
        assert!(kmeans(&points, 2, 0).is_ok());
    }

    #[test]
    fn objective_history_is_non_increasing() {
        use rand::Rng;
        let mut rng = crate::seeding::rng(8, 0);
        let points: Vec<Vec<f64>> =
            (0..300).map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let r = kmeans(&points, 10, 3).unwrap();
        for w in r.objective_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "objective rose: {:?}", w);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        use rand::Rng;
        let mut rng = crate::seeding::rng(9, 0);
        let points: Vec<Vec<f64>> =
            (0..200).map(|_| (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let a = kmeans(&points, 7, 42).unwrap();
        let b = kmeans(&points, 7, 42).unwrap();
        assert_eq!(a.assignments, b.assignments);
        assert_eq!(a.centers, b.centers);
    }
}
