//! Rank-1 line-of-sight channel per (satellite, UT, subcarrier).
//!
//! `H[m][k][n] = sqrt(beta) * alpha * a_ut(n) * a_sat(n)^H`, kept in factored
//! form. `alpha` is a unit-modulus phase drawn once per link and flat across
//! subcarriers; the deterministic propagation phase is not folded into it
//! because the precoder compensates the delay explicitly.

use num_complex::Complex64;
use rand::Rng;

use crate::config::ScenarioConfig;
use crate::consts::SPEED_OF_LIGHT;
use crate::geometry::GeometrySample;

/// Uniform planar array with `nx * ny` elements at `spacing` meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
}

/// (1/n) * sum_{i<n} exp(j i psi)
fn dirichlet(n: usize, psi: f64) -> Complex64 {
    let half = 0.5 * psi;
    let s = half.sin();
    if n <= 4 || s.abs() < 1e-6 {
        let sum: Complex64 = (0..n).map(|i| Complex64::from_polar(1.0, i as f64 * psi)).sum();
        return sum / n as f64;
    }
    let mag = (n as f64 * half).sin() / (n as f64 * s);
    Complex64::from_polar(mag, (n as f64 - 1.0) * half)
}

impl ArrayGeometry {
    pub fn new(dims: [usize; 2], spacing: f64) -> Self {
        Self {
            nx: dims[0],
            ny: dims[1],
            spacing,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Array response for direction cosines `dc = (sin θ cos φ, sin θ sin φ)` at frequency `freq`.
    /// Kronecker ordering: element `(ix, iy)` sits at index `ix * ny + iy`.
    pub fn response(&self, dc: [f64; 2], freq: f64) -> Vec<Complex64> {
        let k = std::f64::consts::TAU * freq / SPEED_OF_LIGHT * self.spacing;
        let ax: Vec<Complex64> = (0..self.nx)
            .map(|i| Complex64::from_polar(1.0 / (self.nx as f64).sqrt(), -k * i as f64 * dc[0]))
            .collect();
        let ay: Vec<Complex64> = (0..self.ny)
            .map(|i| Complex64::from_polar(1.0 / (self.ny as f64).sqrt(), -k * i as f64 * dc[1]))
            .collect();
        ax.iter().flat_map(|x| ay.iter().map(move |y| x * y)).collect()
    }

    /// `response(dc1, f1)^H * response(dc2, f2)` in closed form.
    pub fn inner(&self, dc1: [f64; 2], f1: f64, dc2: [f64; 2], f2: f64) -> Complex64 {
        let k = std::f64::consts::TAU * self.spacing / SPEED_OF_LIGHT;
        let px = k * (f1 * dc1[0] - f2 * dc2[0]);
        let py = k * (f1 * dc1[1] - f2 * dc2[1]);
        dirichlet(self.nx, px) * dirichlet(self.ny, py)
    }
}

/// Array response of a UPA (convenience wrapper around [`ArrayGeometry::response`]).
pub fn array_response(
    zenith: f64,
    azimuth: f64,
    dims: [usize; 2],
    freq: f64,
    spacing_wavelengths: f64,
    carrier_freq: f64,
) -> Vec<Complex64> {
    let spacing = spacing_wavelengths * SPEED_OF_LIGHT / carrier_freq;
    ArrayGeometry::new(dims, spacing).response(crate::geometry::direction_cosines(zenith, azimuth), freq)
}

/// Free-space path-loss amplitude c / (4 pi r f).
pub fn fspl_amplitude(range: f64, freq: f64) -> f64 {
    SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * range * freq)
}

/// Factored channel of one (satellite, UT) link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkChannel {
    /// sqrt(beta); zero for Earth-blocked links
    pub amplitude: f64,
    /// unit-modulus small-scale term
    pub small_scale: Complex64,
    pub sat_dc: [f64; 2],
    pub ut_dc: [f64; 2],
}

impl LinkChannel {
    pub fn beta(&self) -> f64 {
        self.amplitude * self.amplitude
    }

    pub fn is_blocked(&self) -> bool {
        self.amplitude == 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    n_sats: usize,
    n_uts: usize,
    freqs: Vec<f64>,
    pub sat_array: ArrayGeometry,
    pub ut_array: ArrayGeometry,
    links: Vec<LinkChannel>,
}

impl ChannelRealization {
    /// Assembles a realization from explicit per-link factors (row-major by satellite).
    pub fn from_links(
        n_sats: usize,
        n_uts: usize,
        freqs: Vec<f64>,
        sat_array: ArrayGeometry,
        ut_array: ArrayGeometry,
        links: Vec<LinkChannel>,
    ) -> Self {
        assert_eq!(links.len(), n_sats * n_uts);
        Self {
            n_sats,
            n_uts,
            freqs,
            sat_array,
            ut_array,
            links,
        }
    }

    pub fn n_sats(&self) -> usize {
        self.n_sats
    }

    pub fn n_uts(&self) -> usize {
        self.n_uts
    }

    pub fn n_subcarriers(&self) -> usize {
        self.freqs.len()
    }

    pub fn freq(&self, n: usize) -> f64 {
        self.freqs[n]
    }

    pub fn link(&self, sat: usize, ut: usize) -> &LinkChannel {
        &self.links[sat * self.n_uts + ut]
    }

    pub fn sat_response(&self, sat: usize, ut: usize, n: usize) -> Vec<Complex64> {
        self.sat_array.response(self.link(sat, ut).sat_dc, self.freqs[n])
    }

    pub fn ut_response(&self, sat: usize, ut: usize, n: usize) -> Vec<Complex64> {
        self.ut_array.response(self.link(sat, ut).ut_dc, self.freqs[n])
    }

    /// `a_sat(sat, ut1, n1)^H a_sat(sat, ut2, n2)`: correlation of two departure
    /// directions of the same satellite.
    pub fn sat_correlation(&self, sat: usize, ut1: usize, n1: usize, ut2: usize, n2: usize) -> Complex64 {
        self.sat_array.inner(
            self.link(sat, ut1).sat_dc,
            self.freqs[n1],
            self.link(sat, ut2).sat_dc,
            self.freqs[n2],
        )
    }

    /// Explicit `N_rx x N_tx` channel matrix (rows are receive elements).
    pub fn matrix(&self, sat: usize, ut: usize, n: usize) -> Vec<Vec<Complex64>> {
        let l = self.link(sat, ut);
        let a_ut = self.ut_response(sat, ut, n);
        let a_sat = self.sat_response(sat, ut, n);
        let g = l.small_scale * l.amplitude;
        a_ut.iter()
            .map(|r| a_sat.iter().map(|t| g * r * t.conj()).collect())
            .collect()
    }
}

/// Builds the channel of every link of a drop. Phases are drawn in link order.
pub fn build_channels<R: Rng + ?Sized>(
    geom: &GeometrySample,
    config: &ScenarioConfig,
    rng: &mut R,
) -> ChannelRealization {
    let n = config.n_subcarriers;
    let freqs = (0..n).map(|i| config.subcarrier_freq(i)).collect();
    let spacing = config.element_spacing();
    let links = geom
        .links()
        .iter()
        .map(|g| {
            let phase = rng.gen::<f64>() * std::f64::consts::TAU;
            LinkChannel {
                amplitude: if g.has_los() {
                    fspl_amplitude(g.slant_range, config.carrier_freq)
                } else {
                    0.0
                },
                small_scale: Complex64::from_polar(1.0, phase),
                sat_dc: g.angles.sat_direction_cosines(),
                ut_dc: g.angles.ut_direction_cosines(),
            }
        })
        .collect();
    ChannelRealization {
        n_sats: geom.n_sats(),
        n_uts: geom.n_uts(),
        freqs,
        sat_array: ArrayGeometry::new(config.sat_array, spacing),
        ut_array: ArrayGeometry::new(config.ut_array, spacing),
        links,
    }
}
