//! Point-cloud preprocessing between reconstruction and registration:
//! hole inversion, height filtering, planar projection, and density-based
//! background removal.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::cloud::{Point2, PointCloud2, PointCloud3};
use crate::error::{Error, Result};
use crate::sim::SensorModel;
use crate::spatial::KdTree;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineParams {
    /// Height threshold in mm; points with z above it survive filtering.
    pub z_th: f64,
    /// DBSCAN neighbourhood radius in mm.
    pub dbscan_eps: f64,
    /// DBSCAN core-point threshold, counting the point itself.
    pub dbscan_min_pts: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams::for_sensor(&SensorModel::default())
    }
}

impl PipelineParams {
    /// Defaults derived from the sensor: threshold at half the press depth,
    /// clustering radius at three pixel pitches.
    pub fn for_sensor(sensor: &SensorModel) -> Self {
        let (dx, dy) = sensor.pitch_mm();
        PipelineParams {
            z_th: 0.5 * sensor.press_depth_mm,
            dbscan_eps: 3.0 * dx.max(dy),
            dbscan_min_pts: 8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.z_th < 0.0 {
            return Err(Error::Config("z_th must be >= 0".into()));
        }
        if self.dbscan_eps <= 0.0 {
            return Err(Error::Config("dbscan_eps must be > 0".into()));
        }
        if self.dbscan_min_pts < 1 {
            return Err(Error::Config("dbscan_min_pts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Invert a cloud along z about its own maximum: `z -> z_max - z`. Turns
/// the concave hole signature into a convex bump while keeping depths
/// non-negative.
pub fn flip_z(cloud: &PointCloud3) -> Result<PointCloud3> {
    let z_max = cloud.max_z().ok_or(Error::EmptyCloud { stage: "flip_z" })?;
    Ok(PointCloud3::new(
        cloud
            .points
            .iter()
            .map(|p| crate::cloud::Point3::new(p.x, p.y, z_max - p.z))
            .collect(),
    ))
}

/// Keep points with `z > z_th` (deep contact under the indentation-positive
/// convention). An empty result signals contact loss.
pub fn height_filter(cloud: &PointCloud3, z_th: f64) -> Result<PointCloud3> {
    let kept: Vec<_> = cloud.points.iter().copied().filter(|p| p.z > z_th).collect();
    if kept.is_empty() {
        return Err(Error::ContactLoss { z_th });
    }
    Ok(PointCloud3::new(kept))
}

/// Drop the z component; point count and order preserved, no deduplication.
pub fn project_to_plane(cloud: &PointCloud3) -> PointCloud2 {
    PointCloud2::new(cloud.points.iter().map(|p| p.xy()).collect())
}

/// DBSCAN labelling: `labels[i]` is `Some(cluster)` or `None` for noise.
/// Clusters are numbered in order of discovery while scanning points in
/// input order; border points belong to the first cluster that reaches
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub labels: Vec<Option<usize>>,
    pub n_clusters: usize,
}

impl Clustering {
    pub fn cluster_indices(&self, cluster: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(cluster))
            .map(|(i, _)| i)
            .collect()
    }

    pub fn noise_indices(&self) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_none())
            .map(|(i, _)| i)
            .collect()
    }
}

/// Standard DBSCAN. A core point has at least `min_pts` neighbours within
/// `eps` (inclusive, counting itself).
pub fn dbscan(cloud: &PointCloud2, eps: f64, min_pts: usize) -> Clustering {
    let n = cloud.len();
    let mut labels = vec![None; n];
    if n == 0 {
        return Clustering { labels, n_clusters: 0 };
    }
    let pts: Vec<[f64; 2]> = cloud.points.iter().map(|p| [p.x, p.y]).collect();
    let tree = KdTree::build(&pts);

    let mut visited = vec![false; n];
    let mut n_clusters = 0;
    let mut queue = VecDeque::new();
    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        let neighbours = tree.within_radius(&pts[i], eps);
        if neighbours.len() < min_pts {
            continue; // noise unless a later cluster claims it
        }
        let cluster = n_clusters;
        n_clusters += 1;
        labels[i] = Some(cluster);
        queue.extend(neighbours);
        while let Some(j) = queue.pop_front() {
            if labels[j].is_none() {
                labels[j] = Some(cluster);
            }
            if !visited[j] {
                visited[j] = true;
                let nj = tree.within_radius(&pts[j], eps);
                if nj.len() >= min_pts {
                    queue.extend(nj);
                }
            }
        }
    }
    Clustering { labels, n_clusters }
}

/// Area of the 2D convex hull (shoelace over the hull polygon); degenerate
/// inputs give zero.
pub fn convex_hull_area(points: &[Point2]) -> f64 {
    let hull = convex_hull(points);
    if hull.len() < 3 {
        return 0.0;
    }
    let mut acc = 0.0;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        acc += a.x * b.y - b.x * a.y;
    }
    acc.abs() / 2.0
}

/// Monotone-chain convex hull, counter-clockwise, collinear points dropped.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup_by(|a, b| a.x == b.x && a.y == b.y);
    let n = pts.len();
    if n < 3 {
        return pts;
    }
    let cross = |o: Point2, a: Point2, b: Point2| (a - o).cross(b - o);
    let mut hull: Vec<Point2> = Vec::with_capacity(2 * n);
    for &p in pts.iter() {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Discard the background cluster and the noise set.
///
/// With two or more clusters the one with the largest hull area is treated
/// as background and dropped (ties broken by larger point count, then lower
/// cluster index). A single cluster is returned unchanged: a clean
/// observation has no background to remove. No clusters at all means the
/// observation is unusable.
pub fn remove_background(cloud: &PointCloud2, clustering: &Clustering) -> Result<PointCloud2> {
    if clustering.n_clusters == 0 {
        return Err(Error::NoClusters);
    }
    let drop_cluster = if clustering.n_clusters == 1 {
        None
    } else {
        let mut stats = vec![(0.0f64, 0usize); clustering.n_clusters];
        for k in 0..clustering.n_clusters {
            let members: Vec<Point2> = clustering
                .cluster_indices(k)
                .into_iter()
                .map(|i| cloud.points[i])
                .collect();
            stats[k] = (convex_hull_area(&members), members.len());
        }
        let background = (0..clustering.n_clusters)
            .max_by(|&a, &b| {
                stats[a]
                    .0
                    .total_cmp(&stats[b].0)
                    .then(stats[a].1.cmp(&stats[b].1))
                    .then(b.cmp(&a)) // lower index wins ties
            })
            .unwrap();
        Some(background)
    };
    let kept: Vec<Point2> = cloud
        .points
        .iter()
        .zip(clustering.labels.iter())
        .filter(|(_, label)| matches!(label, Some(k) if Some(*k) != drop_cluster))
        .map(|(p, _)| *p)
        .collect();
    if kept.is_empty() {
        return Err(Error::NoClusters);
    }
    Ok(PointCloud2::new(kept))
}

/// Full preprocessing: the peg cloud is filtered and projected; the hole
/// cloud is flipped, filtered, projected, clustered, and cleaned of its
/// background. The peg image contains nothing but the peg, so it never goes
/// through clustering.
pub fn preprocess_pair(
    peg: &PointCloud3,
    hole: &PointCloud3,
    params: &PipelineParams,
) -> Result<(PointCloud2, PointCloud2)> {
    params.validate()?;
    let peg_filtered = height_filter(peg, params.z_th).map_err(|e| e.in_stage("peg_filter"))?;
    let peg_flat = project_to_plane(&peg_filtered);

    let hole_flipped = flip_z(hole).map_err(|e| e.in_stage("hole_flip"))?;
    let hole_filtered =
        height_filter(&hole_flipped, params.z_th).map_err(|e| e.in_stage("hole_filter"))?;
    let hole_flat = project_to_plane(&hole_filtered);
    let clustering = dbscan(&hole_flat, params.dbscan_eps, params.dbscan_min_pts);
    let hole_clean =
        remove_background(&hole_flat, &clustering).map_err(|e| e.in_stage("hole_background"))?;

    Ok((peg_flat, hole_clean))
}
