//! Closed-form ergodic expectations under random sync and the CP-length
//! trade-off bound.
//!
//! Under random sync each satellite's residual offset is uniform over the
//! symbol, so a satellite is attachable with probability
//! `p = guard / (N + guard)` and `|M_k| ~ Binomial(M, p)`. A satellite outside
//! the window contributes its power to MUI, ICI and ISI in fixed proportions
//! that depend only on `N` and the guard length.

use crate::config::ScenarioConfig;
use crate::error::{Result, SimError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticInputs {
    pub n_sats: usize,
    pub n_uts: usize,
    pub n_subcarriers: usize,
    pub cp_add: usize,
    /// Conventional CP added to the guard and symbol; zero reproduces the
    /// closed form with the additional CP only.
    pub cp_len: usize,
    /// Received power of one satellite at the PFD limit (W per subcarrier).
    pub pfd0: f64,
    /// Noise power per subcarrier (W).
    pub noise: f64,
    pub n_tx: usize,
    /// E|alpha|
    pub mu1: f64,
    /// E|alpha|^2
    pub mu2: f64,
    /// Expected squared array correlation between two UTs.
    pub rho2: f64,
}

impl AnalyticInputs {
    /// Inputs matching a scenario, with unit fading moments, `rho2 = 1/N_tx`
    /// and the conventional CP left out.
    pub fn from_config(config: &ScenarioConfig) -> Self {
        let n_tx = config.sat_elements();
        Self {
            n_sats: config.n_sats,
            n_uts: config.n_uts,
            n_subcarriers: config.n_subcarriers,
            cp_add: config.cp_add,
            cp_len: 0,
            pfd0: config.pfd0(),
            noise: config.noise_per_subcarrier(),
            n_tx,
            mu1: 1.0,
            mu2: 1.0,
            rho2: 1.0 / n_tx as f64,
        }
    }

    pub fn with_cp_add(self, cp_add: usize) -> Self {
        Self { cp_add, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subcarriers == 0 || self.n_sats == 0 || self.n_uts == 0 || self.n_tx == 0 {
            return Err(SimError::InvalidConfig("analysis counts must be >= 1".into()));
        }
        if self.mu2 < self.mu1 * self.mu1 - 1e-12 {
            return Err(SimError::InvalidConfig("fading moments need mu2 >= mu1^2".into()));
        }
        if !(self.noise >= 0.0 && self.pfd0 > 0.0 && self.rho2 >= 0.0) {
            return Err(SimError::InvalidConfig("pfd0 must be > 0, noise and rho2 >= 0".into()));
        }
        Ok(())
    }

    fn guard(&self) -> usize {
        self.cp_len + self.cp_add
    }

    fn symbol_len(&self) -> f64 {
        (self.n_subcarriers + self.guard()) as f64
    }

    /// Probability that a uniformly offset satellite is attachable.
    pub fn attach_probability(&self) -> f64 {
        self.cp_add as f64 / self.symbol_len()
    }
}

/// MUI, ICI and ISI shares of an interferer whose offset is uniform over a
/// symbol of `fft + guard` samples: `(N/3 + G)/(N + G)`, `N/(6(N + G))`, `N/(2(N + G))`.
pub fn window_factors(fft: usize, guard: usize) -> (f64, f64, f64) {
    let n = fft as f64;
    let s = (fft + guard) as f64;
    ((n / 3.0 + guard as f64) / s, n / (6.0 * s), n / (2.0 * s))
}

/// `PFD0 (mu2 + (M p - 1) mu1^2)`.
pub fn expected_desired(inputs: &AnalyticInputs) -> f64 {
    let mp = inputs.n_sats as f64 * inputs.attach_probability();
    inputs.pfd0 * (inputs.mu2 + (mp - 1.0) * inputs.mu1 * inputs.mu1)
}

/// `(MUI, ICI, ISI)` expected at one UT from the other `K - 1` streams.
pub fn expected_interference(inputs: &AnalyticInputs) -> (f64, f64, f64) {
    let scale = (inputs.n_uts as f64 - 1.0) * inputs.pfd0 * inputs.rho2;
    let (a, b, c) = window_factors(inputs.n_subcarriers, inputs.guard());
    (scale * a, scale * b, scale * c)
}

/// `(N^2 / (N + G)) log2(1 + PFD0 M p / ((K - 1) PFD0 rho2 + noise))`, a per-UT sum
/// over subcarriers in bits/s/Hz of one subcarrier.
pub fn spectral_efficiency_bound(inputs: &AnalyticInputs) -> f64 {
    let n = inputs.n_subcarriers as f64;
    let desired = inputs.pfd0 * inputs.n_sats as f64 * inputs.attach_probability();
    let interference = (inputs.n_uts as f64 - 1.0) * inputs.pfd0 * inputs.rho2 + inputs.noise;
    n * n / inputs.symbol_len() * (desired / interference).ln_1p() / std::f64::consts::LN_2
}

/// The bound divided by `N`, comparable to a simulated rate divided by the bandwidth.
pub fn spectral_efficiency_bound_per_hz(inputs: &AnalyticInputs) -> f64 {
    spectral_efficiency_bound(inputs) / inputs.n_subcarriers as f64
}

/// `cp_add` on `grid` maximizing the bound; ties go to the smaller value.
pub fn optimal_cp_length(inputs: &AnalyticInputs, grid: &[usize]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &l in grid {
        let v = spectral_efficiency_bound(&inputs.with_cp_add(l));
        best = match best {
            Some((bl, bv)) if bv > v || (bv == v && bl <= l) => Some((bl, bv)),
            _ => Some((l, v)),
        };
    }
    best.map(|b| b.0).ok_or(SimError::EmptyInput("cp_add grid"))
}

/// One row of the bound-versus-`cp_add` curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub cp_add: usize,
    pub attach_probability: f64,
    pub desired: f64,
    pub mui: f64,
    pub ici: f64,
    pub isi: f64,
    pub bound: f64,
    pub bound_per_hz: f64,
}

pub fn bound_curve(inputs: &AnalyticInputs, grid: &[usize]) -> Vec<BoundPoint> {
    grid.iter()
        .map(|&l| {
            let x = inputs.with_cp_add(l);
            let (mui, ici, isi) = expected_interference(&x);
            BoundPoint {
                cp_add: l,
                attach_probability: x.attach_probability(),
                desired: expected_desired(&x),
                mui,
                ici,
                isi,
                bound: spectral_efficiency_bound(&x),
                bound_per_hz: spectral_efficiency_bound_per_hz(&x),
            }
        })
        .collect()
}
