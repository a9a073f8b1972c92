//! Point-to-point ICP in 3D: the planar registration machinery lifted to
//! three dimensions for the no-preprocessing baseline, which registers raw
//! reconstructed clouds directly.

use nalgebra::{Matrix3, Vector3};

use crate::cloud::{Point3, PointCloud3};
use crate::error::{Error, Result};
use crate::registration::IcpParams;
use crate::se2::Pose2;
use crate::spatial::KdTree;

/// Rigid 3D transform `p -> R p + t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rigid3 {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Rigid3 {
    pub fn identity() -> Self {
        Rigid3 {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: Point3) -> Point3 {
        let v = self.rotation * Vector3::new(p.x, p.y, p.z) + self.translation;
        Point3::new(v.x, v.y, v.z)
    }

    pub fn inverse_apply(&self, p: Point3) -> Point3 {
        let v = self.rotation.transpose() * (Vector3::new(p.x, p.y, p.z) - self.translation);
        Point3::new(v.x, v.y, v.z)
    }

    /// Project onto SE(2) by discarding out-of-plane components: the yaw of
    /// the rotation (polar angle of its upper-left 2x2 block) and the
    /// in-plane translation.
    pub fn to_se2(&self) -> Pose2 {
        let r = &self.rotation;
        let theta = (r[(1, 0)] - r[(0, 1)]).atan2(r[(0, 0)] + r[(1, 1)]);
        Pose2::new(theta, self.translation.x, self.translation.y)
    }
}

#[derive(Debug, Clone)]
pub struct Icp3Result {
    pub transform: Rigid3,
    pub iterations: usize,
    pub converged: bool,
}

/// Least-squares rigid fit in 3D (Kabsch with SVD and reflection fix).
pub fn solve_rigid_3d(pairs: &[(Point3, Point3)]) -> Result<Rigid3> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateSolve(format!(
            "need at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    let n = pairs.len() as f64;
    let mut cs = Vector3::zeros();
    let mut cd = Vector3::zeros();
    for (s, d) in pairs {
        cs += Vector3::new(s.x, s.y, s.z);
        cd += Vector3::new(d.x, d.y, d.z);
    }
    cs /= n;
    cd /= n;

    let mut h = Matrix3::zeros();
    let mut spread = 0.0;
    for (s, d) in pairs {
        let sp = Vector3::new(s.x, s.y, s.z) - cs;
        let dp = Vector3::new(d.x, d.y, d.z) - cd;
        h += sp * dp.transpose();
        spread += sp.norm_squared();
    }
    if spread < 1e-20 {
        return Err(Error::DegenerateSolve(
            "all source points coincide; rotation is indeterminate".into(),
        ));
    }
    let svd = h.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::DegenerateSolve("SVD failed".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::DegenerateSolve("SVD failed".into()))?;
    let mut rotation = v_t.transpose() * u.transpose();
    if rotation.determinant() < 0.0 {
        let mut v = v_t.transpose();
        v.column_mut(2).neg_mut();
        rotation = v * u.transpose();
    }
    let translation = cd - rotation * cs;
    Ok(Rigid3 { rotation, translation })
}

/// Symmetric point-to-point ICP in 3D from the identity initialization.
pub fn icp_3d(src: &PointCloud3, dst: &PointCloud3, params: &IcpParams) -> Result<Icp3Result> {
    params.validate()?;
    if src.len() < 3 || dst.len() < 3 {
        return Err(Error::DegenerateSolve(format!(
            "registration needs at least 3 points per cloud, got {} and {}",
            src.len(),
            dst.len()
        )));
    }
    let src_pts: Vec<[f64; 3]> = src.points.iter().map(|p| [p.x, p.y, p.z]).collect();
    let dst_pts: Vec<[f64; 3]> = dst.points.iter().map(|p| [p.x, p.y, p.z]).collect();
    let src_tree = KdTree::build(&src_pts);
    let dst_tree = KdTree::build(&dst_pts);

    let mut transform = Rigid3::identity();
    let mut prev_mean: Option<f64> = None;
    let mut iterations = 0;
    let mut converged = false;
    let mut pairs: Vec<(Point3, Point3)> = Vec::with_capacity(src.len() + dst.len());

    for _ in 0..params.max_icp_iters {
        pairs.clear();
        let mut dist_sum = 0.0;
        for (j, p) in src.points.iter().enumerate() {
            let q = transform.apply(*p);
            let (i, d2) = dst_tree.nearest(&[q.x, q.y, q.z]);
            dist_sum += d2.sqrt();
            pairs.push((src.points[j], dst.points[i]));
        }
        for (i, q) in dst.points.iter().enumerate() {
            let back = transform.inverse_apply(*q);
            let (j, d2) = src_tree.nearest(&[back.x, back.y, back.z]);
            dist_sum += d2.sqrt();
            pairs.push((src.points[j], dst.points[i]));
        }
        let mean = dist_sum / (src.len() + dst.len()) as f64;
        if let Some(prev) = prev_mean {
            if (prev - mean).abs() < params.convergence_tol {
                converged = true;
                break;
            }
        }
        prev_mean = Some(mean);
        transform = solve_rigid_3d(&pairs)?;
        iterations += 1;
    }
    Ok(Icp3Result {
        transform,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_cloud3(n: usize, rng: &mut impl Rng) -> PointCloud3 {
        PointCloud3::new(
            (0..n)
                .map(|_| {
                    Point3::new(
                        rng.random_range(-3.0..3.0),
                        rng.random_range(-3.0..3.0),
                        rng.random_range(0.0..0.6),
                    )
                })
                .collect(),
        )
    }

    fn yaw_transform(theta: f64, tx: f64, ty: f64, tz: f64) -> Rigid3 {
        let (s, c) = theta.sin_cos();
        Rigid3 {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation: Vector3::new(tx, ty, tz),
        }
    }

    #[test]
    fn solve_recovers_known_transform() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let cloud = random_cloud3(50, &mut rng);
        let truth = yaw_transform(0.5, 1.0, -0.5, 0.2);
        let pairs: Vec<(Point3, Point3)> =
            cloud.points.iter().map(|p| (*p, truth.apply(*p))).collect();
        let fit = solve_rigid_3d(&pairs).unwrap();
        assert!((fit.rotation - truth.rotation).norm() < 1e-10);
        assert!((fit.translation - truth.translation).norm() < 1e-10);
    }

    #[test]
    fn icp_recovers_small_offsets() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let src = random_cloud3(300, &mut rng);
        let truth = yaw_transform(0.15, 0.4, -0.3, 0.0);
        let dst = PointCloud3::new(src.points.iter().map(|p| truth.apply(*p)).collect());
        let res = icp_3d(&src, &dst, &IcpParams::default()).unwrap();
        let se2 = res.transform.to_se2();
        assert!((se2.theta() - 0.15).abs() < 1e-3);
        assert!((se2.translation() - crate::cloud::Point2::new(0.4, -0.3)).norm() < 5e-3);
    }

    #[test]
    fn se2_projection_extracts_yaw() {
        let t = yaw_transform(0.8, 2.0, 3.0, 9.0);
        let p = t.to_se2();
        assert!((p.theta() - 0.8).abs() < 1e-12);
        assert_eq!(p.translation().x, 2.0);
        assert_eq!(p.translation().y, 3.0);
    }

    #[test]
    fn coincident_sources_rejected() {
        let p = Point3::new(1.0, 2.0, 3.0);
        let pairs = vec![
            (p, Point3::new(0.0, 0.0, 0.0)),
            (p, Point3::new(1.0, 0.0, 0.0)),
            (p, Point3::new(0.0, 1.0, 0.0)),
        ];
        assert!(solve_rigid_3d(&pairs).is_err());
    }
}
