//! Planar point-cloud registration: nearest-neighbour correspondences,
//! closed-form rigid least squares, ICP, and the multi-initialization sweep
//! that estimates the hole pose relative to the peg.
//!
//! ICP here matches in both directions (each source point to its nearest
//! target and each target point to its nearest source) and solves the joint
//! least-squares problem. One-directional matching of a smaller region into
//! a strictly larger one has no unique minimum: once the source region is
//! contained in the target, every pose inside the clearance margin scores
//! the same, so estimates land anywhere within the connector clearance. The
//! reverse correspondences add the uncovered-rim term that pins the pose to
//! the centred alignment. Inlier counting stays one-directional
//! (source-to-target) for candidate selection.

use rayon::prelude::*;

use crate::cloud::{Point2, PointCloud2};
use crate::error::{Error, Result};
use crate::se2::Pose2;
use crate::spatial::KdTree;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct IcpParams {
    /// Iteration cap for a single ICP run.
    pub max_icp_iters: usize,
    /// Convergence threshold on the change in mean matched distance, mm.
    pub convergence_tol: f64,
    /// Distance below which a matched source point counts as an inlier, mm.
    pub inlier_dist: f64,
    /// Step of the initial-rotation sweep, degrees; must divide 360.
    pub delta_alpha_deg: f64,
    /// Outer restarts of the whole sweep; restarts beyond the first get a
    /// small deterministic translation jitter.
    pub n_max_restarts: usize,
}

impl Default for IcpParams {
    fn default() -> Self {
        IcpParams {
            max_icp_iters: 50,
            convergence_tol: 1e-4,
            inlier_dist: 0.3,
            delta_alpha_deg: 10.0,
            n_max_restarts: 1,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_icp_iters == 0 || self.n_max_restarts == 0 {
            return Err(Error::Config("iteration counts must be positive".into()));
        }
        if self.convergence_tol <= 0.0 || self.inlier_dist <= 0.0 {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.delta_alpha_deg <= 0.0 {
            return Err(Error::Config("delta_alpha must be positive".into()));
        }
        let steps = 360.0 / self.delta_alpha_deg;
        if (steps - steps.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "delta_alpha {} does not divide 360",
                self.delta_alpha_deg
            )));
        }
        Ok(())
    }

    fn alpha_steps(&self) -> usize {
        (360.0 / self.delta_alpha_deg).round() as usize
    }
}

/// Result of one ICP run. The pose maps source coordinates to target
/// coordinates with the initialization already folded in.
#[derive(Debug, Clone, PartialEq)]
pub struct IcpResult {
    pub pose: Pose2,
    /// Fraction of source points whose final match distance is within the
    /// inlier threshold.
    pub inlier_ratio: f64,
    /// RMSE over inlier correspondences, mm; infinite when nothing matched
    /// within the threshold.
    pub rmse: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Outcome of the multi-initialization sweep.
#[derive(Debug, Clone)]
pub struct RegistrationResult {
    /// Best estimate mapping peg coordinates to hole coordinates.
    pub best: Pose2,
    /// Initial rotation of the winning candidate, degrees.
    pub best_alpha_deg: f64,
    pub best_inlier_ratio: f64,
    /// All candidates as (alpha_deg, result), poses already expressed in
    /// original peg coordinates.
    pub candidates: Vec<(f64, IcpResult)>,
}

/// Index of the nearest `dst` point for every `src` point. Ties go to the
/// lowest target index; results are identical to exhaustive search.
pub fn nearest_correspondences(src: &PointCloud2, dst: &PointCloud2) -> Vec<usize> {
    assert!(!src.is_empty() && !dst.is_empty(), "clouds must be non-empty");
    let dst_pts: Vec<[f64; 2]> = dst.points.iter().map(|p| [p.x, p.y]).collect();
    let tree = KdTree::build(&dst_pts);
    src.points
        .iter()
        .map(|p| tree.nearest(&[p.x, p.y]).0)
        .collect()
}

/// Closed-form least-squares rigid fit: the SE(2) transform minimizing
/// `sum ||dst_i - T src_i||^2` (demeaned cross-covariance, rotation from
/// its polar angle, translation from the centroids).
pub fn solve_rigid_2d(pairs: &[(Point2, Point2)]) -> Result<Pose2> {
    if pairs.len() < 2 {
        return Err(Error::DegenerateSolve(format!(
            "need at least 2 pairs, got {}",
            pairs.len()
        )));
    }
    let n = pairs.len() as f64;
    let mut cs = Point2::new(0.0, 0.0);
    let mut cd = Point2::new(0.0, 0.0);
    for (s, d) in pairs {
        cs = cs + *s;
        cd = cd + *d;
    }
    cs = cs * (1.0 / n);
    cd = cd * (1.0 / n);

    let mut cross = 0.0;
    let mut dot = 0.0;
    let mut src_spread = 0.0;
    for (s, d) in pairs {
        let sp = *s - cs;
        let dp = *d - cd;
        cross += sp.cross(dp);
        dot += sp.dot(dp);
        src_spread += sp.norm_squared();
    }
    if src_spread < 1e-20 {
        return Err(Error::DegenerateSolve(
            "all source points coincide; rotation is indeterminate".into(),
        ));
    }
    let theta = cross.atan2(dot);
    let (sin, cos) = theta.sin_cos();
    let rotated_cs = Point2::new(cos * cs.x - sin * cs.y, sin * cs.x + cos * cs.y);
    let t = cd - rotated_cs;
    Ok(Pose2::new(theta, t.x, t.y))
}

/// Fraction of (already transformed) source points whose nearest target
/// neighbour lies within `inlier_dist`.
pub fn compute_inlier_ratio(src_transformed: &PointCloud2, dst: &PointCloud2, inlier_dist: f64) -> f64 {
    assert!(!src_transformed.is_empty(), "source cloud must be non-empty");
    let dst_pts: Vec<[f64; 2]> = dst.points.iter().map(|p| [p.x, p.y]).collect();
    let tree = KdTree::build(&dst_pts);
    let hits = src_transformed
        .points
        .iter()
        .filter(|p| tree.nearest(&[p.x, p.y]).1.sqrt() <= inlier_dist)
        .count();
    hits as f64 / src_transformed.len() as f64
}

/// ICP in SE(2) from a given initialization. Alternates correspondence
/// search on the transformed source with the closed-form rigid solve until
/// the mean matched distance changes by less than `convergence_tol` or the
/// iteration cap is reached.
pub fn icp_2d(
    src: &PointCloud2,
    dst: &PointCloud2,
    init: Pose2,
    params: &IcpParams,
) -> Result<IcpResult> {
    icp_2d_with_trace(src, dst, init, params).map(|(result, _)| result)
}

/// Like [`icp_2d`] but also returns the mean matched distance observed at
/// the start of every iteration, for convergence diagnostics.
pub fn icp_2d_with_trace(
    src: &PointCloud2,
    dst: &PointCloud2,
    init: Pose2,
    params: &IcpParams,
) -> Result<(IcpResult, Vec<f64>)> {
    params.validate()?;
    if src.len() < 3 || dst.len() < 3 {
        return Err(Error::DegenerateSolve(format!(
            "registration needs at least 3 points per cloud, got {} and {}",
            src.len(),
            dst.len()
        )));
    }
    let src_pts: Vec<[f64; 2]> = src.points.iter().map(|p| [p.x, p.y]).collect();
    let dst_pts: Vec<[f64; 2]> = dst.points.iter().map(|p| [p.x, p.y]).collect();
    let src_tree = KdTree::build(&src_pts);
    let dst_tree = KdTree::build(&dst_pts);

    let mut pose = init;
    let mut prev_mean: Option<f64> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut trace = Vec::new();
    let mut pairs: Vec<(Point2, Point2)> = Vec::with_capacity(src.len() + dst.len());

    for _ in 0..params.max_icp_iters {
        let inv = pose.inverse();
        pairs.clear();
        let mut dist_sum = 0.0;

        // Forward: every source point to its nearest target point.
        for (j, p) in src.points.iter().enumerate() {
            let q = pose.apply(*p);
            let (i, d2) = dst_tree.nearest(&[q.x, q.y]);
            dist_sum += d2.sqrt();
            pairs.push((src.points[j], dst.points[i]));
        }
        // Reverse: every target point to its nearest (transformed) source
        // point, queried in the source frame so the tree stays static.
        for (i, q) in dst.points.iter().enumerate() {
            let back = inv.apply(*q);
            let (j, d2) = src_tree.nearest(&[back.x, back.y]);
            dist_sum += d2.sqrt();
            pairs.push((src.points[j], dst.points[i]));
        }
        let mean = dist_sum / (src.len() + dst.len()) as f64;
        trace.push(mean);
        if let Some(prev) = prev_mean {
            if (prev - mean).abs() < params.convergence_tol {
                converged = true;
                break;
            }
        }
        prev_mean = Some(mean);

        pose = solve_rigid_2d(&pairs)
            .map_err(|e| e.in_stage("icp_iteration"))
            .map_err(|e| match e {
                Error::Stage { stage, source } => Error::DegenerateSolve(format!(
                    "{stage} {iterations}: {source}"
                )),
                other => other,
            })?;
        iterations += 1;
    }

    // Final forward correspondences for the inlier statistics.
    let mut inliers = 0usize;
    let mut sq_sum = 0.0;
    for p in &src.points {
        let q = pose.apply(*p);
        let (_, d2) = dst_tree.nearest(&[q.x, q.y]);
        if d2.sqrt() <= params.inlier_dist {
            inliers += 1;
            sq_sum += d2;
        }
    }
    let inlier_ratio = inliers as f64 / src.len() as f64;
    let rmse = if inliers > 0 {
        (sq_sum / inliers as f64).sqrt()
    } else {
        f64::INFINITY
    };
    Ok((
        IcpResult {
            pose,
            inlier_ratio,
            rmse,
            iterations,
            converged,
        },
        trace,
    ))
}

/// Deterministic winner selection: highest inlier ratio, ties broken by
/// lower RMSE, then lower alpha (list order for equal alphas).
fn select_best(candidates: &[(f64, IcpResult)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, (alpha, result)) in candidates.iter().enumerate() {
        let better = match best {
            None => true,
            Some(b) => {
                let (b_alpha, b_res) = &candidates[b];
                result.inlier_ratio > b_res.inlier_ratio
                    || (result.inlier_ratio == b_res.inlier_ratio
                        && (result.rmse < b_res.rmse
                            || (result.rmse == b_res.rmse && alpha < b_alpha)))
            }
        };
        if better {
            best = Some(k);
        }
    }
    best
}

/// Multi-initialization registration of the peg cloud onto the hole cloud.
///
/// The peg cloud is first translated so its centroid sits at the origin;
/// the sweep then rotates it by every multiple of `delta_alpha_deg` and
/// runs ICP from that initialization. Because the initial rotations are
/// about the origin of the centred cloud, the winning pose composed with
/// the centring translation has exactly the swept rotation folded into its
/// angle. Candidates run independently (in parallel) and the winner is
/// picked by the deterministic rule in [`select_best`], so candidate order
/// never changes the outcome.
pub fn multi_init_register(
    peg: &PointCloud2,
    hole: &PointCloud2,
    params: &IcpParams,
) -> Result<RegistrationResult> {
    params.validate()?;
    if peg.len() < 3 || hole.len() < 3 {
        return Err(Error::DegenerateSolve(format!(
            "registration needs at least 3 points per cloud, got {} and {}",
            peg.len(),
            hole.len()
        )));
    }
    let centroid = peg.centroid().expect("non-empty checked above");
    let centering = Pose2::from_translation(-centroid.x, -centroid.y);
    let centered = peg.translated(-centroid);

    let mut inits = Vec::with_capacity(params.alpha_steps() * params.n_max_restarts);
    for restart in 0..params.n_max_restarts {
        for k in 0..params.alpha_steps() {
            let alpha_deg = k as f64 * params.delta_alpha_deg;
            let jitter = restart_jitter(restart, k);
            inits.push((alpha_deg, Pose2::new(alpha_deg.to_radians(), jitter.x, jitter.y)));
        }
    }

    let outcomes: Vec<(f64, Result<IcpResult>)> = inits
        .par_iter()
        .map(|(alpha_deg, init)| (*alpha_deg, icp_2d(&centered, hole, *init, params)))
        .collect();

    let mut candidates = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (alpha, outcome) in outcomes {
        match outcome {
            Ok(mut result) => {
                // Conjugate back so the pose maps original peg coordinates.
                result.pose = result.pose.compose(&centering);
                candidates.push((alpha, result));
            }
            Err(e) => failures.push((alpha, e.to_string())),
        }
    }
    if candidates.is_empty() {
        return Err(Error::AllCandidatesFailed(failures));
    }
    let best_idx = select_best(&candidates).expect("candidates non-empty");
    let (best_alpha_deg, best_result) = candidates[best_idx].clone();
    Ok(RegistrationResult {
        best: best_result.pose,
        best_alpha_deg,
        best_inlier_ratio: best_result.inlier_ratio,
        candidates,
    })
}

/// Translation jitter applied to restarts after the first, +-0.2 mm,
/// deterministic in (restart, alpha index).
fn restart_jitter(restart: usize, alpha_idx: usize) -> Point2 {
    use rand::{Rng, SeedableRng};
    if restart == 0 {
        return Point2::new(0.0, 0.0);
    }
    let seed = ((restart as u64) << 32) ^ alpha_idx as u64;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    Point2::new(rng.random_range(-0.2..0.2), rng.random_range(-0.2..0.2))
}
