//! Density-based clustering of angles under the wrapped circular metric.
//!
//! Plain DBSCAN with `d(a, b) = min(|a − b|, 2π − |a − b|)`. The cluster
//! count decides how many mixture components a cell gets, so points that
//! end up as noise are excluded from seeding but are still handed to EM.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::angle::{circular_stats, Angle};

/// One discovered mode: member indices into the input slice plus the
/// circular mean and resultant length of the members.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    pub members: Vec<usize>,
    pub mean: Angle,
    pub rbar: f64,
}

/// Runs DBSCAN over wrapped angles. A point is a core point when at least
/// `min_pts` points (itself included) lie within `eps`; clusters grow from
/// core points, border points join the first cluster that reaches them.
pub fn dbscan_angles(angles: &[Angle], eps: f64, min_pts: usize) -> Vec<ClusterSummary> {
    let n = angles.len();
    let mut cluster_of: Vec<Option<usize>> = alloc::vec![None; n];
    let mut visited = alloc::vec![false; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();

    let neighbors = |i: usize| -> Vec<usize> {
        (0..n)
            .filter(|&j| angles[i].dist(angles[j]) <= eps)
            .collect()
    };

    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let seed_neighbors = neighbors(i);
        if seed_neighbors.len() < min_pts {
            continue; // noise, unless a later cluster claims it as a border point
        }
        let id = clusters.len();
        clusters.push(Vec::new());
        cluster_of[i] = Some(id);
        clusters[id].push(i);
        let mut queue: VecDeque<usize> = seed_neighbors.into();
        while let Some(j) = queue.pop_front() {
            if cluster_of[j].is_none() {
                cluster_of[j] = Some(id);
                clusters[id].push(j);
            }
            if !visited[j] {
                visited[j] = true;
                let next = neighbors(j);
                if next.len() >= min_pts {
                    queue.extend(next);
                }
            }
        }
    }

    clusters
        .into_iter()
        .map(|mut members| {
            members.sort_unstable();
            let angle_values: Vec<Angle> = members.iter().map(|&i| angles[i]).collect();
            let stats = circular_stats(&angle_values).expect("cluster is nonempty");
            ClusterSummary {
                members,
                // A cluster tight enough to pass the density test always has
                // a defined mean direction.
                mean: stats.mean.unwrap_or(Angle::new(0.0)),
                rbar: stats.rbar,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn deg(d: f64) -> Angle {
        Angle::from_degrees(d)
    }

    #[test]
    fn two_tight_groups() {
        let mut angles = Vec::new();
        for i in 0..20 {
            angles.push(deg(i as f64 * 0.5)); // near 0°..10°
            angles.push(deg(180.0 + i as f64 * 0.5));
        }
        let clusters = dbscan_angles(&angles, 15.0_f64.to_radians(), 5);
        assert_eq!(clusters.len(), 2);
        let mut means: Vec<f64> = clusters.iter().map(|c| c.mean.degrees()).collect();
        means.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(means[0] < 15.0);
        assert!((means[1] - 185.0).abs() < 10.0);
    }

    #[test]
    fn cluster_straddling_the_wrap() {
        let angles: Vec<Angle> = [358.0, 359.0, 0.5, 1.0, 2.0, 3.0, 357.0, 359.5]
            .iter()
            .map(|&d| deg(d))
            .collect();
        let clusters = dbscan_angles(&angles, 15.0_f64.to_radians(), 5);
        assert_eq!(clusters.len(), 1);
        let mean = clusters[0].mean;
        assert!(
            mean.dist(deg(0.0)) < 3.0_f64.to_radians(),
            "mean = {}",
            mean.degrees()
        );
        assert_eq!(clusters[0].members.len(), 8);
    }

    #[test]
    fn isolated_points_are_noise() {
        // Eleven points evenly spaced 32.7° apart: every neighborhood at
        // eps = 15° holds only the point itself.
        let angles: Vec<Angle> = (0..11)
            .map(|i| Angle::new(i as f64 / 11.0 * 2.0 * PI))
            .collect();
        let clusters = dbscan_angles(&angles, 15.0_f64.to_radians(), 5);
        assert!(clusters.is_empty());
    }

    #[test]
    fn empty_input() {
        assert!(dbscan_angles(&[], 0.1, 5).is_empty());
    }

    #[test]
    fn members_partition_without_overlap() {
        let angles: Vec<Angle> = (0..60)
            .map(|i| deg((i % 3) as f64 * 120.0 + (i / 3) as f64))
            .collect();
        let clusters = dbscan_angles(&angles, 15.0_f64.to_radians(), 5);
        let mut seen = alloc::vec![false; angles.len()];
        for c in &clusters {
            for &m in &c.members {
                assert!(!seen[m], "point {m} in two clusters");
                seen[m] = true;
            }
        }
    }
}
