//! MRT precoding with delay-phase compensation, PFD-limited power and MRC.

use num_complex::Complex64;

use crate::association::AssociationDecision;
use crate::channel::ChannelRealization;
use crate::config::{db_to_linear, ScenarioConfig};
use crate::error::{Result, SimError};
use crate::geometry::GeometrySample;
use crate::ofdm::{compensation_phase, ici_leakage};

/// Transmit power per subcarrier that puts the ground flux of one satellite at
/// `pfd_limit / n_serving` (dBW/m^2 per 4 kHz, scaled linearly to `subcarrier_bw`).
pub fn pfd_power(range: f64, pfd_limit: f64, n_serving: usize, subcarrier_bw: f64) -> Result<f64> {
    if n_serving == 0 {
        return Err(SimError::InvalidConfig("pfd_power needs at least one serving satellite".into()));
    }
    if !range.is_finite() || range <= 0.0 {
        return Err(SimError::InvalidConfig(format!("slant range must be positive, got {range}")));
    }
    let flux = db_to_linear(pfd_limit) * subcarrier_bw / 4000.0;
    Ok(4.0 * std::f64::consts::PI * range * range * flux / n_serving as f64)
}

/// MRT precoder for an explicit rank-1 channel matrix (rows = receive elements).
///
/// The beam direction is the conjugate of the strongest row, normalized, so the
/// common phase is that of the first receive element of maximal gain.
pub fn mrt_precoder(h: &[Vec<Complex64>], delta: usize, power: f64, n: usize, fft: usize) -> Result<Vec<Complex64>> {
    let energies: Vec<f64> = h.iter().map(|r| r.iter().map(|x| x.norm_sqr()).sum()).collect();
    let max = energies.iter().cloned().fold(0.0, f64::max);
    if !max.is_finite() || max <= 0.0 {
        return Err(SimError::DegenerateLink { sat: usize::MAX, ut: usize::MAX });
    }
    // equal-gain rows differ only by rounding; take the first
    let pick = energies.iter().position(|&e| e >= max * (1.0 - 1e-9)).unwrap_or(0);
    let (row, energy) = (&h[pick], energies[pick]);
    let scale = compensation_phase(n, delta, fft) * (power.max(0.0).sqrt() / energy.sqrt());
    Ok(row.iter().map(|x| x.conj() * scale).collect())
}

/// MRC combiner: the normalized effective channel, or the first basis vector
/// when the effective channel is zero.
pub fn mrc_combiner(effective: &[Complex64]) -> Vec<Complex64> {
    let norm = effective.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 && norm.is_finite() {
        effective.iter().map(|x| x / norm).collect()
    } else {
        let mut u = vec![Complex64::new(0.0, 0.0); effective.len()];
        if let Some(first) = u.first_mut() {
            *first = Complex64::new(1.0, 0.0);
        }
        u
    }
}

/// Per-link power and delay compensation of the MRT precoders of one drop.
/// Vectors are built on demand from the factored channel.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    power: Vec<f64>,
    serving: Vec<bool>,
    delta: Vec<usize>,
    n_uts: usize,
    fft: usize,
}

impl PrecoderSet {
    pub fn build(
        geom: &GeometrySample,
        channels: &ChannelRealization,
        decision: &AssociationDecision,
        config: &ScenarioConfig,
    ) -> Result<Self> {
        let (m_sats, k_uts) = (channels.n_sats(), channels.n_uts());
        if geom.n_sats() != m_sats || geom.n_uts() != k_uts || decision.n_uts() != k_uts || decision.n_sats() != m_sats {
            return Err(SimError::DimensionMismatch(format!(
                "geometry {}x{}, channels {}x{}, association {}x{}",
                geom.n_sats(),
                geom.n_uts(),
                m_sats,
                k_uts,
                decision.n_sats(),
                decision.n_uts()
            )));
        }
        let mut power = vec![0.0; m_sats * k_uts];
        let mut serving = vec![false; m_sats * k_uts];
        let mut delta = vec![0; m_sats * k_uts];
        for k in 0..k_uts {
            let set = &decision.serving[k];
            for &m in set {
                let link = geom.link(m, k);
                if !link.visible {
                    return Err(SimError::InvisibleServing { sat: m, ut: k });
                }
                if channels.link(m, k).is_blocked() {
                    return Err(SimError::DegenerateLink { sat: m, ut: k });
                }
                let i = m * k_uts + k;
                power[i] = pfd_power(link.slant_range, config.pfd_limit, set.len(), config.subcarrier_bandwidth())?;
                serving[i] = true;
                delta[i] = decision.offset(m, k).delta;
            }
        }
        Ok(Self {
            power,
            serving,
            delta,
            n_uts: k_uts,
            fft: config.n_subcarriers,
        })
    }

    pub fn power(&self, sat: usize, ut: usize) -> f64 {
        self.power[sat * self.n_uts + ut]
    }

    pub fn is_serving(&self, sat: usize, ut: usize) -> bool {
        self.serving[sat * self.n_uts + ut]
    }

    /// Residual offset the precoder of this link compensates.
    pub fn delta(&self, sat: usize, ut: usize) -> usize {
        self.delta[sat * self.n_uts + ut]
    }

    pub fn compensation(&self, sat: usize, ut: usize, n: usize) -> Complex64 {
        compensation_phase(n, self.delta(sat, ut), self.fft)
    }

    /// Scalar part of the precoder, `e^{j2π n delta/N} sqrt(P) conj(alpha)`; the
    /// vector is this times the satellite array response.
    pub fn scalar(&self, channels: &ChannelRealization, sat: usize, ut: usize, n: usize) -> Complex64 {
        if !self.is_serving(sat, ut) {
            return Complex64::new(0.0, 0.0);
        }
        self.compensation(sat, ut, n) * self.power(sat, ut).sqrt() * channels.link(sat, ut).small_scale.conj()
    }

    pub fn vector(&self, channels: &ChannelRealization, sat: usize, ut: usize, n: usize) -> Vec<Complex64> {
        let s = self.scalar(channels, sat, ut, n);
        channels.sat_response(sat, ut, n).into_iter().map(|a| a * s).collect()
    }
}

/// Unit-norm receive combiners `u[k][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerSet {
    u: Vec<Vec<Complex64>>,
    fft: usize,
}

impl CombinerSet {
    /// MRC on the compensated desired-signal channel of each UT and subcarrier.
    pub fn build(channels: &ChannelRealization, precoders: &PrecoderSet, decision: &AssociationDecision) -> Self {
        let fft = channels.n_subcarriers();
        let n_rx = channels.ut_array.len();
        let mut u = Vec::with_capacity(channels.n_uts() * fft);
        for k in 0..channels.n_uts() {
            for n in 0..fft {
                let mut eff = vec![Complex64::new(0.0, 0.0); n_rx];
                for &m in &decision.serving[k] {
                    let o = decision.offset(m, k);
                    let link = channels.link(m, k);
                    // A_nn * sqrt(beta) alpha * (a_sat^H a_sat = 1) * precoder scalar
                    let gain = ici_leakage(n, n, o.delta, o.excess.min(fft), fft)
                        * link.small_scale
                        * link.amplitude
                        * precoders.scalar(channels, m, k, n);
                    for (e, a) in eff.iter_mut().zip(channels.ut_response(m, k, n)) {
                        *e += gain * a;
                    }
                }
                u.push(mrc_combiner(&eff));
            }
        }
        Self { u, fft }
    }

    pub fn get(&self, ut: usize, n: usize) -> &[Complex64] {
        &self.u[ut * self.fft + n]
    }

    /// `u[k][n]^H a_ut(m, k, n)`.
    pub fn response_gain(&self, channels: &ChannelRealization, sat: usize, ut: usize, n: usize) -> Complex64 {
        let u = self.get(ut, n);
        if u.len() == 1 {
            return u[0].conj();
        }
        u.iter()
            .zip(channels.ut_response(sat, ut, n))
            .map(|(x, a)| x.conj() * a)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::association::associate;
    use crate::channel::build_channels;
    use crate::config::{AssociationMode, SyncMode};
    use crate::geometry::sample_geometry;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pfd_power_examples() {
        let p = pfd_power(600e3, -144.0, 1, 4000.0).unwrap();
        let direct = 4.0 * std::f64::consts::PI * 3.6e11 * 10f64.powf(-14.4);
        assert!((p - direct).abs() < 1e-15 * direct);
        assert!((p - 0.0180).abs() < 5e-5, "{p}");
        let half = pfd_power(600e3, -144.0, 2, 4000.0).unwrap();
        assert_eq!(half, p / 2.0);
        assert!(pfd_power(600e3, -144.0, 0, 4000.0).is_err());
        for r in [5e5, 1e6, 1.9e6] {
            let p = pfd_power(r, -144.0, 1, 4000.0).unwrap();
            let flux_db = 10.0 * (p / (4.0 * std::f64::consts::PI * r * r)).log10();
            assert!((flux_db + 144.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mrt_phase_and_norm() {
        let h = vec![vec![Complex64::new(0.3, -0.4), Complex64::new(0.1, 0.2)]];
        let v0 = mrt_precoder(&h, 0, 2.0, 3, 8).unwrap();
        let norm: f64 = v0.iter().map(|x| x.norm_sqr()).sum();
        assert!((norm - 2.0).abs() < 1e-14);
        let v = mrt_precoder(&h, 2, 2.0, 2, 8).unwrap();
        for (a, b) in v.iter().zip(&v0) {
            assert!((a + b).norm() < 1e-14);
        }
        let zero = vec![vec![Complex64::new(0.0, 0.0); 3]];
        assert!(mrt_precoder(&zero, 0, 1.0, 0, 8).is_err());
    }

    #[test]
    fn mrc_examples() {
        assert_eq!(mrc_combiner(&[Complex64::new(3.0, 0.0)]), vec![Complex64::new(1.0, 0.0)]);
        let z = mrc_combiner(&[Complex64::new(0.0, 0.0); 2]);
        assert_eq!(z[0], Complex64::new(1.0, 0.0));
        // grid search over unit-norm combiners never beats MRC
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h: Vec<Complex64> = (0..4).map(|_| Complex64::new(rng.gen(), rng.gen())).collect();
        let u = mrc_combiner(&h);
        let mrc: f64 = u.iter().zip(&h).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm_sqr();
        let energy: f64 = h.iter().map(|x| x.norm_sqr()).sum();
        assert!((mrc - energy).abs() < 1e-12);
        for _ in 0..2000 {
            let w: Vec<Complex64> = (0..4)
                .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let w = mrc_combiner(&w);
            let p: f64 = w.iter().zip(&h).map(|(a, b)| a.conj() * b).sum::<Complex64>().norm_sqr();
            assert!(p <= mrc + 1e-12);
        }
    }

    #[test]
    fn factored_precoder_matches_explicit() {
        let mut cfg = ScenarioConfig::desk();
        cfg.sat_array = [3, 2];
        cfg.ut_array = [2, 1];
        cfg.n_sats = 4;
        cfg.n_uts = 2;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let geom = sample_geometry(&cfg, &mut rng);
        let ch = build_channels(&geom, &cfg, &mut rng);
        let dec = associate(AssociationMode::Full, SyncMode::Random, &geom, &cfg, &mut rng);
        let pre = PrecoderSet::build(&geom, &ch, &dec, &cfg).unwrap();
        for k in 0..2 {
            for &m in &dec.serving[k] {
                for n in [0, 9, 127] {
                    let v = pre.vector(&ch, m, k, n);
                    let e = mrt_precoder(&ch.matrix(m, k, n), pre.delta(m, k), pre.power(m, k), n, 128).unwrap();
                    let norm: f64 = v.iter().map(|x| x.norm_sqr()).sum();
                    assert!((norm - pre.power(m, k)).abs() < 1e-12 * norm);
                    for (a, b) in v.iter().zip(&e) {
                        assert!((a - b).norm() < 1e-12 * norm.sqrt());
                    }
                }
            }
        }
    }

    #[test]
    fn desired_terms_add_coherently() {
        let cfg = ScenarioConfig::desk();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let geom = sample_geometry(&cfg, &mut rng);
        let ch = build_channels(&geom, &cfg, &mut rng);
        let dec = associate(AssociationMode::Proposed, SyncMode::Optimized, &geom, &cfg, &mut rng);
        let pre = PrecoderSet::build(&geom, &ch, &dec, &cfg).unwrap();
        for k in 0..cfg.n_uts {
            let n = 17;
            let terms: Vec<Complex64> = dec.serving[k]
                .iter()
                .map(|&m| {
                    let o = dec.offset(m, k);
                    let l = ch.link(m, k);
                    ici_leakage(n, n, o.delta, o.excess, 128) * l.small_scale * l.amplitude * pre.scalar(&ch, m, k, n)
                })
                .collect();
            let coherent = terms.iter().sum::<Complex64>().norm_sqr();
            let aligned = terms.iter().map(|t| t.norm()).sum::<f64>().powi(2);
            assert!((coherent - aligned).abs() <= 1e-12 * aligned.max(1e-300));
        }
    }
}
