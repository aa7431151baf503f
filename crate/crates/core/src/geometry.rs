//! Satellite and UT placement on spherical caps and per-link geometry.
//!
//! The Earth is a sphere of radius [`EARTH_RADIUS`]. Satellites live on a shell
//! at the configured altitude and UTs on the ground; both are drawn
//! area-uniformly (uniform azimuth, uniform cosine of the polar angle) over caps
//! that share one centre on the equator at longitude 0.
//!
//! Local antenna frames use an east-aligned tangent basis: x points east, the
//! z-axis is the array normal (outward for UTs, toward the Earth centre for
//! satellites) and y completes a right-handed frame.

use rand::Rng;

use crate::config::ScenarioConfig;
use crate::consts::{EARTH_RADIUS, SPEED_OF_LIGHT};

pub type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn unit(a: Vec3) -> Vec3 {
    scale(a, 1.0 / norm(a))
}

/// Unit vector pointing east at `p`. Falls back to +y on the polar axis.
fn east_at(p: Vec3) -> Vec3 {
    let e = cross([0.0, 0.0, 1.0], unit(p));
    if norm(e) < 1e-12 {
        [0.0, 1.0, 0.0]
    } else {
        unit(e)
    }
}

/// Zenith/azimuth of a link at both ends, in each end's local array frame (radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalAngles {
    pub sat_zenith: f64,
    pub sat_azimuth: f64,
    pub ut_zenith: f64,
    pub ut_azimuth: f64,
}

impl LocalAngles {
    /// (sin θ cos φ, sin θ sin φ) at the satellite.
    pub fn sat_direction_cosines(&self) -> [f64; 2] {
        direction_cosines(self.sat_zenith, self.sat_azimuth)
    }

    pub fn ut_direction_cosines(&self) -> [f64; 2] {
        direction_cosines(self.ut_zenith, self.ut_azimuth)
    }
}

pub fn direction_cosines(zenith: f64, azimuth: f64) -> [f64; 2] {
    let s = zenith.sin();
    [s * azimuth.cos(), s * azimuth.sin()]
}

fn angles_in_frame(dir: Vec3, x: Vec3, y: Vec3, z: Vec3) -> (f64, f64) {
    let cz = dot(dir, z).clamp(-1.0, 1.0);
    let cx = dot(dir, x);
    let cy = dot(dir, y);
    let zenith = cz.acos();
    // boresight: azimuth undefined, 0 by convention
    let azimuth = if cx.hypot(cy) < 1e-12 { 0.0 } else { cy.atan2(cx) };
    (zenith, azimuth)
}

/// Local departure angles at the satellite and arrival angles at the UT.
pub fn local_angles(sat_pos: Vec3, ut_pos: Vec3) -> LocalAngles {
    let los = unit(sub(sat_pos, ut_pos));

    let ut_z = unit(ut_pos);
    let ut_x = east_at(ut_pos);
    let ut_y = cross(ut_z, ut_x);
    let (ut_zenith, ut_azimuth) = angles_in_frame(los, ut_x, ut_y, ut_z);

    let sat_z = scale(unit(sat_pos), -1.0);
    let sat_x = east_at(sat_pos);
    let sat_y = cross(sat_z, sat_x);
    let (sat_zenith, sat_azimuth) = angles_in_frame(scale(los, -1.0), sat_x, sat_y, sat_z);

    LocalAngles {
        sat_zenith,
        sat_azimuth,
        ut_zenith,
        ut_azimuth,
    }
}

/// Per-link geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    /// m
    pub slant_range: f64,
    /// s, exactly `slant_range / c`
    pub delay: f64,
    /// deg, negative when the satellite is below the UT horizon
    pub elevation: f64,
    pub angles: LocalAngles,
    /// elevation >= min_elevation
    pub visible: bool,
}

impl LinkGeometry {
    /// Line of sight exists (satellite above the horizon).
    pub fn has_los(&self) -> bool {
        self.elevation >= 0.0
    }
}

/// One random drop of satellites and UTs.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometrySample {
    pub sat_positions: Vec<Vec3>,
    pub ut_positions: Vec<Vec3>,
    /// Row-major by satellite: index `m * n_uts + k`.
    links: Vec<LinkGeometry>,
}

impl GeometrySample {
    /// Builds all per-link quantities from explicit positions.
    pub fn from_positions(sat_positions: Vec<Vec3>, ut_positions: Vec<Vec3>, min_elevation: f64) -> Self {
        let mut links = Vec::with_capacity(sat_positions.len() * ut_positions.len());
        for &sat in &sat_positions {
            for &ut in &ut_positions {
                let d = sub(sat, ut);
                let r = norm(d);
                let elevation = (dot(d, unit(ut)) / r).clamp(-1.0, 1.0).asin().to_degrees();
                links.push(LinkGeometry {
                    slant_range: r,
                    delay: r / SPEED_OF_LIGHT,
                    elevation,
                    angles: local_angles(sat, ut),
                    visible: elevation >= min_elevation,
                });
            }
        }
        Self {
            sat_positions,
            ut_positions,
            links,
        }
    }

    pub fn n_sats(&self) -> usize {
        self.sat_positions.len()
    }

    pub fn n_uts(&self) -> usize {
        self.ut_positions.len()
    }

    pub fn link(&self, sat: usize, ut: usize) -> &LinkGeometry {
        &self.links[sat * self.n_uts() + ut]
    }

    pub fn links(&self) -> &[LinkGeometry] {
        &self.links
    }

    /// Visible satellites of UT `ut`.
    pub fn visible_sats(&self, ut: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_sats()).filter(move |&m| self.link(m, ut).visible)
    }
}

/// Centre of the shared sampling caps (unit vector).
pub const CAP_CENTER: Vec3 = [1.0, 0.0, 0.0];

/// Draws a point area-uniformly on the cap of half-angle `cap_angle` (rad)
/// around unit vector `center`, at distance `radius` from the Earth centre.
pub fn sample_cap<R: Rng + ?Sized>(rng: &mut R, center: Vec3, cap_angle: f64, radius: f64) -> Vec3 {
    let cos_min = cap_angle.cos();
    let cos_polar = 1.0 - rng.gen::<f64>() * (1.0 - cos_min);
    let sin_polar = (1.0 - cos_polar * cos_polar).max(0.0).sqrt();
    let azimuth = rng.gen::<f64>() * std::f64::consts::TAU;
    let c = unit(center);
    let e1 = east_at(c);
    let e2 = cross(c, e1);
    let dir = [
        cos_polar * c[0] + sin_polar * (azimuth.cos() * e1[0] + azimuth.sin() * e2[0]),
        cos_polar * c[1] + sin_polar * (azimuth.cos() * e1[1] + azimuth.sin() * e2[1]),
        cos_polar * c[2] + sin_polar * (azimuth.cos() * e1[2] + azimuth.sin() * e2[2]),
    ];
    scale(dir, radius)
}

/// Satellites and UTs drawn over the shared caps of `config`.
pub fn sample_geometry<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> GeometrySample {
    let shell = EARTH_RADIUS + config.altitude;
    let sat_cap = config.sat_cap_angle.to_radians();
    let ut_cap = config.ut_cap_angle.to_radians();
    let sats = (0..config.n_sats)
        .map(|_| sample_cap(rng, CAP_CENTER, sat_cap, shell))
        .collect();
    let uts = (0..config.n_uts)
        .map(|_| sample_cap(rng, CAP_CENTER, ut_cap, EARTH_RADIUS))
        .collect();
    GeometrySample::from_positions(sats, uts, config.min_elevation)
}

/// A single UT at the cap centre with `config.n_sats` satellites drawn
/// uniformly over its own visibility cap (every link at or above the minimum elevation).
pub fn sample_visibility_cone<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> GeometrySample {
    let shell = EARTH_RADIUS + config.altitude;
    let cone = visibility_central_angle(config.altitude, config.min_elevation);
    let sats = (0..config.n_sats)
        .map(|_| sample_cap(rng, CAP_CENTER, cone, shell))
        .collect();
    let ut = scale(CAP_CENTER, EARTH_RADIUS);
    // widen the threshold by a hair so rim satellites are not lost to rounding
    GeometrySample::from_positions(sats, vec![ut], config.min_elevation - 1e-9)
}

/// Earth-central angle between a UT and the sub-satellite point at which the
/// satellite sits at elevation `elevation_deg` (rad).
pub fn visibility_central_angle(altitude: f64, elevation_deg: f64) -> f64 {
    let e = elevation_deg.to_radians();
    (EARTH_RADIUS * e.cos() / (EARTH_RADIUS + altitude)).acos() - e
}

/// Slant range to a satellite at `altitude` seen at `elevation_deg`.
pub fn slant_range_at_elevation(altitude: f64, elevation_deg: f64) -> f64 {
    let e = elevation_deg.to_radians();
    let rs = EARTH_RADIUS * e.sin();
    -rs + (rs * rs + altitude * altitude + 2.0 * EARTH_RADIUS * altitude).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nadir_link() {
        let ut = [EARTH_RADIUS, 0.0, 0.0];
        let sat = [EARTH_RADIUS + 600e3, 0.0, 0.0];
        let g = GeometrySample::from_positions(vec![sat], vec![ut], 10.0);
        let l = g.link(0, 0);
        assert!((l.slant_range - 600e3).abs() < 1e-6);
        assert!((l.elevation - 90.0).abs() < 1e-9);
        assert!((l.delay - 600e3 / SPEED_OF_LIGHT).abs() < 1e-18);
        assert!((l.delay * 1e3 - 2.001_384_6).abs() < 1e-6);
        assert_eq!(l.angles.ut_zenith, 0.0);
        assert_eq!(l.angles.sat_zenith, 0.0);
        assert_eq!(l.angles.ut_azimuth, 0.0);
    }

    #[test]
    fn max_slant_range_law_of_cosines() {
        // independent route: triangle (Earth centre, UT, satellite) with angle 90+elev at the UT
        let (re, h, e) = (EARTH_RADIUS, 600e3_f64, 10f64.to_radians());
        let rs = re + h;
        // rs^2 = re^2 + r^2 - 2 re r cos(90 + e) -> r^2 + 2 re sin(e) r + re^2 - rs^2 = 0
        let b = 2.0 * re * e.sin();
        let r = (-b + (b * b - 4.0 * (re * re - rs * rs)).sqrt()) / 2.0;
        let got = slant_range_at_elevation(600e3, 10.0);
        assert!((got - r).abs() < 1e-6);
        assert!((got / 1e3 - 1932.0).abs() < 1.0, "{got}");
    }

    #[test]
    fn visibility_angle_matches_cap() {
        let g = visibility_central_angle(600e3, 10.0).to_degrees();
        assert!((g - 15.84).abs() < 0.01, "{g}");
    }

    #[test]
    fn sampled_links_respect_range_bounds() {
        let cfg = ScenarioConfig::desk();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = sample_geometry(&cfg, &mut rng);
        let horizon = slant_range_at_elevation(cfg.altitude, 0.0);
        for l in g.links() {
            assert_eq!(l.delay, l.slant_range / SPEED_OF_LIGHT);
            assert_eq!(l.visible, l.elevation >= cfg.min_elevation);
            if l.has_los() {
                assert!(l.slant_range >= cfg.altitude - 1e-6);
                assert!(l.slant_range <= horizon + 1e-6);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = ScenarioConfig::desk();
        let a = sample_geometry(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
        let b = sample_geometry(&cfg, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn cos_zenith_matches_vector_algebra() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let sat = sample_cap(&mut rng, CAP_CENTER, 0.3, EARTH_RADIUS + 700e3);
            let ut = sample_cap(&mut rng, CAP_CENTER, 0.3, EARTH_RADIUS);
            let a = local_angles(sat, ut);
            let los = unit(sub(sat, ut));
            assert!((a.ut_zenith.cos() - dot(los, unit(ut))).abs() < 1e-12);
            assert!((a.sat_zenith.cos() - dot(scale(los, -1.0), scale(unit(sat), -1.0))).abs() < 1e-12);
            // direction cosines reconstruct a unit vector together with cos(zenith)
            let [x, y] = a.ut_direction_cosines();
            assert!((x * x + y * y + a.ut_zenith.cos().powi(2) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn swapping_roles_preserves_los_angle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let p = sample_cap(&mut rng, CAP_CENTER, 0.2, EARTH_RADIUS + 600e3);
            let q = sample_cap(&mut rng, CAP_CENTER, 0.2, EARTH_RADIUS + 600e3);
            let angle = |a: Vec3, b: Vec3| dot(unit(a), unit(b)).clamp(-1.0, 1.0).acos();
            assert!((angle(p, q) - angle(q, p)).abs() < 1e-15);
            let la = local_angles(p, q);
            let lb = local_angles(q, p);
            assert!(la.sat_zenith.is_finite() && lb.ut_zenith.is_finite());
        }
    }

    #[test]
    fn elevation_decreases_with_central_angle() {
        let ut = [EARTH_RADIUS, 0.0, 0.0];
        let shell = EARTH_RADIUS + 600e3;
        let mut last = f64::INFINITY;
        for i in 0..30 {
            let g = (i as f64 * 0.5).to_radians();
            let sat = [shell * g.cos(), shell * g.sin(), 0.0];
            let geo = GeometrySample::from_positions(vec![sat], vec![ut], 10.0);
            let e = geo.link(0, 0).elevation;
            assert!(e < last);
            last = e;
        }
    }
}
