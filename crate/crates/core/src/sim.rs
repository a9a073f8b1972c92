//! Analytic tactile-contact simulator.
//!
//! Renders indentation height maps and gradient maps for peg and hole
//! contacts at given in-plane poses. Gel compliance is modelled as a
//! Gaussian blur of the contact indicator; estimator error is modelled as
//! i.i.d. Gaussian noise added in gradient space. Indentation depth is
//! positive: contact regions carry high values.
//!
//! The sensor frame has its origin at the centre of the pixel grid, x along
//! columns and y along rows, so a shape at the identity pose sits in the
//! middle of the sensing area.

use serde::{Deserialize, Serialize};

use crate::cloud::Point2;
use crate::error::{Error, Result};
use crate::grid::{GradientGrid, ScalarGrid};
use crate::se2::Pose2;
use crate::shapes::{contains, CrossSection};

/// Sensor geometry and gel/noise parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorModel {
    pub width_px: usize,
    pub height_px: usize,
    /// Sensing area (x, y) in mm.
    pub area_mm: (f64, f64),
    /// Indentation depth of full contact, mm.
    pub press_depth_mm: f64,
    /// Gaussian smoothing radius mimicking gel compliance, mm.
    pub gel_sigma_mm: f64,
    /// Std of additive per-pixel gradient noise (dimensionless slope).
    pub gradient_noise_sigma: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        SensorModel {
            width_px: 320,
            height_px: 240,
            area_mm: (18.6, 14.3),
            press_depth_mm: 0.5,
            gel_sigma_mm: 0.15,
            gradient_noise_sigma: 0.02,
        }
    }
}

impl SensorModel {
    /// Pixel pitch (dx, dy) in mm.
    pub fn pitch_mm(&self) -> (f64, f64) {
        (
            self.area_mm.0 / self.width_px as f64,
            self.area_mm.1 / self.height_px as f64,
        )
    }

    /// Offset from the sensor-frame origin (grid centre) to the pixel-(0,0)
    /// corner frame used by grid-to-cloud conversion.
    pub fn center_offset_mm(&self) -> (f64, f64) {
        let (dx, dy) = self.pitch_mm();
        (
            (self.width_px as f64 - 1.0) / 2.0 * dx,
            (self.height_px as f64 - 1.0) / 2.0 * dy,
        )
    }

    /// Sensor-frame position of a pixel centre.
    pub fn pixel_center(&self, row: usize, col: usize) -> Point2 {
        let (dx, dy) = self.pitch_mm();
        let (cx, cy) = self.center_offset_mm();
        Point2::new(col as f64 * dx - cx, row as f64 * dy - cy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width_px == 0 || self.height_px == 0 {
            return Err(Error::Config("sensor pixel counts must be positive".into()));
        }
        if self.area_mm.0 <= 0.0 || self.area_mm.1 <= 0.0 {
            return Err(Error::Config("sensing area must be positive".into()));
        }
        if self.press_depth_mm <= 0.0 {
            return Err(Error::Config("press depth must be positive".into()));
        }
        if self.gel_sigma_mm < 0.0 || self.gradient_noise_sigma < 0.0 {
            return Err(Error::Config("gel sigma and noise sigma must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Peg,
    Hole,
}

/// One simulated contact: ground-truth height map (post gel blur, pre
/// noise) plus the noisy gradient map the pipeline consumes.
#[derive(Debug, Clone)]
pub struct ContactObservation {
    pub height: ScalarGrid,
    pub gradients: GradientGrid,
    pub true_pose: Pose2,
    pub side: Side,
}

/// Render a peg contact: full indentation inside the cross-section.
pub fn render_peg_contact(
    shape: &CrossSection,
    pose: Pose2,
    sensor: &SensorModel,
    seed: u64,
) -> Result<ContactObservation> {
    render_contact(shape, pose, sensor, seed, Side::Peg)
}

/// Render a hole contact: the face around the opening indents the gel and
/// the opening itself stays untouched (complement of the peg rendering).
pub fn render_hole_contact(
    shape: &CrossSection,
    pose: Pose2,
    sensor: &SensorModel,
    seed: u64,
) -> Result<ContactObservation> {
    render_contact(shape, pose, sensor, seed, Side::Hole)
}

fn render_contact(
    shape: &CrossSection,
    pose: Pose2,
    sensor: &SensorModel,
    seed: u64,
    side: Side,
) -> Result<ContactObservation> {
    sensor.validate()?;
    let rows = sensor.height_px;
    let cols = sensor.width_px;
    let inv = pose.inverse();
    let mut height = ScalarGrid::zeros(rows, cols, sensor.pitch_mm());

    let mut touches_border = false;
    for row in 0..rows {
        for col in 0..cols {
            let local = inv.apply(sensor.pixel_center(row, col));
            let inside = contains(shape, local);
            if inside && (row == 0 || row == rows - 1 || col == 0 || col == cols - 1) {
                touches_border = true;
            }
            let contact = match side {
                Side::Peg => inside,
                Side::Hole => !inside,
            };
            if contact {
                height.set(row, col, sensor.press_depth_mm);
            }
        }
    }
    if touches_border {
        return Err(Error::SensingArea(format!(
            "cross-section at pose ({:.2} deg, {:.2}, {:.2}) reaches the sensor border; \
             the whole cross-section must lie inside the sensing area",
            pose.theta_deg(),
            pose.translation().x,
            pose.translation().y
        )));
    }

    let height = gaussian_blur(&height, sensor.gel_sigma_mm);
    let clean = gradients_from_height(&height)?;
    let gradients = add_noise(&clean, sensor.gradient_noise_sigma, seed);
    Ok(ContactObservation {
        height,
        gradients,
        true_pose: pose,
        side,
    })
}

/// Separable Gaussian blur with half-sample symmetric (reflective) borders.
/// `sigma_mm` of zero returns the input unchanged.
pub fn gaussian_blur(grid: &ScalarGrid, sigma_mm: f64) -> ScalarGrid {
    if sigma_mm == 0.0 {
        return grid.clone();
    }
    let (dx, dy) = grid.pitch_mm;
    let mut out = grid.clone();
    blur_axis(&mut out, sigma_mm / dx, true);
    blur_axis(&mut out, sigma_mm / dy, false);
    out
}

fn blur_axis(grid: &mut ScalarGrid, sigma_px: f64, along_x: bool) {
    let radius = (4.0 * sigma_px).ceil() as i64;
    if radius == 0 {
        return;
    }
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    for k in -radius..=radius {
        kernel.push((-(k as f64).powi(2) / (2.0 * sigma_px * sigma_px)).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for w in &mut kernel {
        *w /= norm;
    }

    let (rows, cols) = (grid.rows, grid.cols);
    let n = if along_x { cols } else { rows } as i64;
    let lines = if along_x { rows } else { cols };
    let mut line = vec![0.0; n as usize];
    for li in 0..lines {
        for i in 0..n as usize {
            line[i] = if along_x { grid.at(li, i) } else { grid.at(i, li) };
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (ki, w) in kernel.iter().enumerate() {
                let mut j = i + ki as i64 - radius;
                // Half-sample symmetric reflection keeps total mass exact.
                if j < 0 {
                    j = -1 - j;
                }
                if j >= n {
                    j = 2 * n - 1 - j;
                }
                acc += w * line[j as usize];
            }
            if along_x {
                grid.set(li, i as usize, acc);
            } else {
                grid.set(i as usize, li, acc);
            }
        }
    }
}

/// Finite-difference gradients, central in the interior and one-sided on
/// the borders, scaled by the physical pitch. Exact for affine fields.
pub fn gradients_from_height(h: &ScalarGrid) -> Result<GradientGrid> {
    if h.rows < 3 || h.cols < 3 {
        return Err(Error::DimensionMismatch {
            expected: "grid of at least 3x3".into(),
            got: format!("{}x{}", h.rows, h.cols),
        });
    }
    let (dx, dy) = h.pitch_mm;
    let mut g = GradientGrid::zeros(h.rows, h.cols, h.pitch_mm);
    for r in 0..h.rows {
        for c in 0..h.cols {
            let i = g.idx(r, c);
            g.gx[i] = if c == 0 {
                (h.at(r, 1) - h.at(r, 0)) / dx
            } else if c == h.cols - 1 {
                (h.at(r, c) - h.at(r, c - 1)) / dx
            } else {
                (h.at(r, c + 1) - h.at(r, c - 1)) / (2.0 * dx)
            };
            g.gy[i] = if r == 0 {
                (h.at(1, c) - h.at(0, c)) / dy
            } else if r == h.rows - 1 {
                (h.at(r, c) - h.at(r - 1, c)) / dy
            } else {
                (h.at(r + 1, c) - h.at(r - 1, c)) / (2.0 * dy)
            };
        }
    }
    Ok(g)
}

/// Add i.i.d. zero-mean Gaussian noise to both gradient channels,
/// deterministic for a fixed seed. Channel gx is drawn first, then gy,
/// row-major within each channel.
pub fn add_noise(g: &GradientGrid, sigma: f64, seed: u64) -> GradientGrid {
    use rand::SeedableRng;
    use rand_distr::Distribution;

    if sigma == 0.0 {
        return g.clone();
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, sigma).expect("sigma validated non-negative");
    let mut out = g.clone();
    for v in &mut out.gx {
        *v += normal.sample(&mut rng);
    }
    for v in &mut out.gy {
        *v += normal.sample(&mut rng);
    }
    out
}

/// The full evaluation grid of hole-pose perturbations:
/// offsets -4..=4 mm (step 1, zero excluded) in x and y crossed with
/// rotations 0..315 degrees (step 45), 8 x 8 x 8 = 512 poses, ordered
/// x-major, then y, then rotation.
pub fn perturbation_grid() -> Vec<Pose2> {
    let mut out = Vec::with_capacity(512);
    let offsets: Vec<f64> = (-4..=4).filter(|v| *v != 0).map(f64::from).collect();
    for &dx in &offsets {
        for &dy in &offsets {
            for k in 0..8 {
                let theta = (45.0 * k as f64).to_radians();
                out.push(Pose2::new(theta, dx, dy));
            }
        }
    }
    out
}

/// One uniformly random perturbation: offsets in [-4, 4] mm, rotation in
/// [0, 360) degrees, deterministic per seed.
pub fn random_perturbation(seed: u64) -> Pose2 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dx = rng.random_range(-4.0..4.0);
    let dy = rng.random_range(-4.0..4.0);
    let theta_deg = rng.random_range(0.0..360.0);
    Pose2::new(theta_deg.to_radians(), dx, dy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::preset_catalog;

    fn quiet_sensor() -> SensorModel {
        SensorModel {
            gel_sigma_mm: 0.0,
            gradient_noise_sigma: 0.0,
            ..SensorModel::default()
        }
    }

    #[test]
    fn peg_indicator_is_exact_without_gel() {
        let sensor = quiet_sensor();
        let shape = CrossSection::circle(2.0);
        let obs = render_peg_contact(&shape, Pose2::identity(), &sensor, 0).unwrap();
        for row in 0..sensor.height_px {
            for col in 0..sensor.width_px {
                let p = sensor.pixel_center(row, col);
                let expected = if p.norm() < 2.0 { sensor.press_depth_mm } else { 0.0 };
                assert_eq!(obs.height.at(row, col), expected, "pixel ({row},{col})");
            }
        }
    }

    #[test]
    fn indented_area_matches_circle_area() {
        let sensor = SensorModel {
            gradient_noise_sigma: 0.0,
            ..SensorModel::default()
        };
        let obs = render_peg_contact(&CrossSection::circle(3.0), Pose2::identity(), &sensor, 0)
            .unwrap();
        let (dx, dy) = sensor.pitch_mm();
        let count = obs
            .height
            .values
            .iter()
            .filter(|v| **v > sensor.press_depth_mm / 2.0)
            .count();
        let measured = count as f64 * dx * dy;
        let analytic = std::f64::consts::PI * 9.0;
        assert!(
            (measured - analytic).abs() / analytic < 0.02,
            "measured {measured} vs {analytic}"
        );
    }

    #[test]
    fn translating_by_one_pitch_shifts_by_one_pixel() {
        let sensor = SensorModel {
            gradient_noise_sigma: 0.0,
            ..SensorModel::default()
        };
        let (dx, _) = sensor.pitch_mm();
        let shape = CrossSection::circle(2.0);
        let base = render_peg_contact(&shape, Pose2::identity(), &sensor, 0).unwrap();
        let moved =
            render_peg_contact(&shape, Pose2::from_translation(dx, 0.0), &sensor, 0).unwrap();
        for row in 0..sensor.height_px {
            for col in 1..sensor.width_px {
                assert_eq!(moved.height.at(row, col), base.height.at(row, col - 1));
            }
        }
    }

    #[test]
    fn hole_render_is_complement_of_peg_render() {
        let sensor = quiet_sensor();
        let shape = CrossSection::circle(2.0);
        let peg = render_peg_contact(&shape, Pose2::identity(), &sensor, 0).unwrap();
        let hole = render_hole_contact(&shape, Pose2::identity(), &sensor, 0).unwrap();

        // Height is ~0 at the grid centre and press depth far away.
        let centre = hole.height.at(sensor.height_px / 2, sensor.width_px / 2);
        assert_eq!(centre, 0.0);
        assert_eq!(hole.height.at(5, 5), sensor.press_depth_mm);

        // Indicator partition: the two renders cover every pixel exactly once.
        let indicated = |g: &ScalarGrid| g.values.iter().filter(|v| **v > 0.0).count();
        assert_eq!(
            indicated(&peg.height) + indicated(&hole.height),
            sensor.width_px * sensor.height_px
        );
    }

    #[test]
    fn opening_area_matches_analytic_area_for_presets() {
        // Rotated off-lattice pose so straight edges do not align with
        // pixel rows.
        let pose = Pose2::new(0.52, 0.37, -0.22);
        let sensor = quiet_sensor();
        for preset in preset_catalog() {
            let hole = &preset.hole;
            let analytic = match &hole.primitive {
                crate::shapes::Primitive::RoundedRect { width, height, corner_radius } => {
                    let outer = width * height
                        - (4.0 - std::f64::consts::PI) * corner_radius * corner_radius;
                    let tongue: f64 = hole
                        .inner_features
                        .iter()
                        .map(|f| match &f.shape.primitive {
                            crate::shapes::Primitive::RoundedRect { width, height, corner_radius } => {
                                width * height
                                    - (4.0 - std::f64::consts::PI) * corner_radius * corner_radius
                            }
                            _ => 0.0,
                        })
                        .sum();
                    outer - tongue
                }
                _ => continue,
            };
            let obs = render_hole_contact(hole, pose, &sensor, 0).unwrap();
            let (dx, dy) = sensor.pitch_mm();
            let opening = obs.height.values.iter().filter(|v| **v == 0.0).count();
            let measured = opening as f64 * dx * dy;
            assert!(
                (measured - analytic).abs() / analytic < 0.02,
                "{}: measured {measured} vs analytic {analytic}",
                preset.name
            );
        }
    }

    #[test]
    fn footprint_reaching_border_is_rejected() {
        let sensor = quiet_sensor();
        let shape = CrossSection::circle(3.0);
        let err = render_peg_contact(&shape, Pose2::from_translation(7.0, 0.0), &sensor, 0)
            .unwrap_err();
        assert_eq!(err.category(), "sensing_area");
        let err = render_hole_contact(&shape, Pose2::from_translation(0.0, 5.0), &sensor, 0)
            .unwrap_err();
        assert_eq!(err.category(), "sensing_area");
    }

    #[test]
    fn gel_blur_preserves_total_mass() {
        let sensor = SensorModel::default();
        let shape = CrossSection::circle(2.5);
        let sharp = {
            let s = quiet_sensor();
            render_peg_contact(&shape, Pose2::identity(), &s, 0).unwrap().height
        };
        let blurred = gaussian_blur(&sharp, sensor.gel_sigma_mm);
        let rel = (blurred.sum() - sharp.sum()).abs() / sharp.sum();
        assert!(rel < 0.005, "mass drift {rel}");
    }

    #[test]
    fn gradients_zero_for_constant_field() {
        let mut h = ScalarGrid::zeros(10, 12, (0.5, 0.5));
        for v in &mut h.values {
            *v = 3.7;
        }
        let g = gradients_from_height(&h).unwrap();
        assert!(g.gx.iter().all(|v| v.abs() < 1e-12));
        assert!(g.gy.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn gradients_exact_on_ramp() {
        let (dx, dy) = (0.25, 0.5);
        let mut h = ScalarGrid::zeros(8, 9, (dx, dy));
        for r in 0..8 {
            for c in 0..9 {
                h.set(r, c, c as f64 * dx); // f = x
            }
        }
        let g = gradients_from_height(&h).unwrap();
        for r in 0..8 {
            for c in 0..9 {
                assert!((g.gx[g.idx(r, c)] - 1.0).abs() < 1e-12);
                assert!(g.gy[g.idx(r, c)].abs() < 1e-12);
            }
        }
    }

    #[test]
    fn central_difference_exact_on_quadratic() {
        let dx = 0.1;
        let mut h = ScalarGrid::zeros(5, 20, (dx, dx));
        for r in 0..5 {
            for c in 0..20 {
                let x = c as f64 * dx;
                h.set(r, c, x * x);
            }
        }
        let g = gradients_from_height(&h).unwrap();
        for c in 1..19 {
            let x = c as f64 * dx;
            assert!((g.gx[g.idx(2, c)] - 2.0 * x).abs() < 1e-10, "col {c}");
        }
    }

    #[test]
    fn gradient_grid_too_small_is_rejected() {
        let h = ScalarGrid::zeros(2, 5, (1.0, 1.0));
        assert!(gradients_from_height(&h).is_err());
    }

    #[test]
    fn noise_is_deterministic_and_sized() {
        let g = GradientGrid::zeros(240, 320, (0.058, 0.0596));
        assert_eq!(add_noise(&g, 0.0, 7), g);

        let a = add_noise(&g, 0.02, 42);
        let b = add_noise(&g, 0.02, 42);
        assert_eq!(a, b);
        let c = add_noise(&g, 0.02, 43);
        assert_ne!(a, c);

        let n = a.gx.len() as f64;
        let mean: f64 = a.gx.iter().sum::<f64>() / n;
        let var: f64 = a.gx.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        assert!((std - 0.02).abs() / 0.02 < 0.03, "sample std {std}");
    }

    #[test]
    fn perturbation_grid_layout() {
        let grid = perturbation_grid();
        assert_eq!(grid.len(), 512);
        assert!(grid
            .iter()
            .all(|p| p.translation().x != 0.0 && p.translation().y != 0.0));
        let first = grid[0];
        assert_eq!(first.translation().x, -4.0);
        assert_eq!(first.translation().y, -4.0);
        assert_eq!(first.theta(), 0.0);
        // x-major ordering: rotation varies fastest, then y.
        assert_eq!(grid[1].theta(), 45.0_f64.to_radians());
        assert_eq!(grid[8].translation().y, -3.0);
        assert_eq!(grid[64].translation().x, -3.0);
    }

    #[test]
    fn random_perturbation_ranges_and_mean() {
        let mut sum_dx = 0.0;
        for seed in 0..10_000u64 {
            let p = random_perturbation(seed);
            let t = p.translation();
            assert!(t.x.abs() <= 4.0 && t.y.abs() <= 4.0);
            assert!(p.theta() > -std::f64::consts::PI && p.theta() <= std::f64::consts::PI);
            sum_dx += t.x;
        }
        assert!((sum_dx / 10_000.0).abs() < 0.15);
        assert_eq!(random_perturbation(99), random_perturbation(99));
    }
}
