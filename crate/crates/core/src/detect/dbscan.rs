//! Density-based clustering reduced to what scoring needs: the core points
//! and the number of clusters they form.

pub const DEFAULT_MIN_PTS: usize = 4;
/// Percentile of k-nearest-neighbour distances used as the default radius.
pub const DEFAULT_EPS_PERCENTILE: f64 = 90.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Dbscan {
    pub eps: f64,
    pub min_pts: usize,
    /// Distinct core points.
    pub core: Vec<Vec<f64>>,
    pub n_clusters: usize,
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Distance from each row to its `k`-th nearest other row.
pub fn k_distances(rows: &[Vec<f64>], k: usize) -> Vec<f64> {
    rows.iter()
        .enumerate()
        .map(|(i, a)| {
            let mut d: Vec<f64> = rows
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| euclidean(a, b))
                .collect();
            d.sort_by(f64::total_cmp);
            d.get(k.saturating_sub(1)).copied().unwrap_or(f64::INFINITY)
        })
        .collect()
}

impl Dbscan {
    /// A row is core when at least `min_pts` rows, itself included, lie
    /// within `eps`. Returns `None` when no row is core.
    pub fn fit(rows: &[Vec<f64>], eps: f64, min_pts: usize) -> Option<Dbscan> {
        let n = rows.len();
        let neighbours: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                (0..n)
                    .filter(|&j| euclidean(&rows[i], &rows[j]) <= eps)
                    .collect()
            })
            .collect();
        let is_core: Vec<bool> = neighbours.iter().map(|nb| nb.len() >= min_pts).collect();
        if !is_core.iter().any(|&c| c) {
            return None;
        }

        let mut cluster = vec![usize::MAX; n];
        let mut n_clusters = 0;
        for start in 0..n {
            if !is_core[start] || cluster[start] != usize::MAX {
                continue;
            }
            cluster[start] = n_clusters;
            let mut queue = vec![start];
            while let Some(p) = queue.pop() {
                for &q in &neighbours[p] {
                    if cluster[q] == usize::MAX {
                        cluster[q] = n_clusters;
                        if is_core[q] {
                            queue.push(q);
                        }
                    }
                }
            }
            n_clusters += 1;
        }

        let mut core: Vec<Vec<f64>> = Vec::new();
        for (row, _) in rows.iter().zip(&is_core).filter(|(_, c)| **c) {
            if !core.contains(row) {
                core.push(row.clone());
            }
        }
        Some(Dbscan {
            eps,
            min_pts,
            core,
            n_clusters,
        })
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.core
            .iter()
            .map(|c| euclidean(c, x))
            .fold(f64::INFINITY, f64::min)
    }
}
