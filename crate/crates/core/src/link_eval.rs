//! Per-UT, per-subcarrier power decomposition, SINR and throughput.
//!
//! Every transmit source is a (satellite `m`, intended UT `k'`) pair. Its data on
//! subcarrier `n'` reaches subcarrier `n` of UT `k` through
//!
//! ```text
//! T[n,n'] = A_nn'(delta_mk) * (u^H a_ut) sqrt(beta_mk) alpha_mk * a_sat(k,n)^H a_sat(k',n')
//!           * conj(alpha_mk') sqrt(P_mk') e^{j2π n' delta_mk'/N}
//! ```
//!
//! and through the same expression with `B` for the previous symbol. Sources of
//! the same UT carry the same data, so their contributions add coherently.

use num_complex::Complex64;

use crate::association::AssociationDecision;
use crate::beamforming::{CombinerSet, PrecoderSet};
use crate::channel::ChannelRealization;
use crate::config::{AssociationMode, InterferenceMode, ScenarioConfig, EXACT_MODE_MAX_SUBCARRIERS};
use crate::error::{Result, SimError};
use crate::geometry::GeometrySample;
use crate::ofdm::{compensation_phase, LeakageProfile};

/// Per-(k, n) powers in watts, flattened as `k * N + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTerms {
    pub n_uts: usize,
    pub n_subcarriers: usize,
    pub desired: Vec<f64>,
    pub mui: Vec<f64>,
    /// All inter-carrier interference, own serving set included.
    pub ici: Vec<f64>,
    /// All inter-symbol interference, own serving set included.
    pub isi: Vec<f64>,
    /// Part of `ici` caused by the UT's own serving set.
    pub self_ici: Vec<f64>,
    /// Part of `isi` caused by the UT's own serving set.
    pub self_isi: Vec<f64>,
    pub noise: Vec<f64>,
}

impl PowerTerms {
    fn zeros(n_uts: usize, n: usize) -> Self {
        let z = vec![0.0; n_uts * n];
        Self {
            n_uts,
            n_subcarriers: n,
            desired: z.clone(),
            mui: z.clone(),
            ici: z.clone(),
            isi: z.clone(),
            self_ici: z.clone(),
            self_isi: z.clone(),
            noise: z,
        }
    }

    fn idx(&self, k: usize, n: usize) -> usize {
        k * self.n_subcarriers + n
    }

    /// Interference plus noise.
    pub fn interference(&self, k: usize, n: usize) -> f64 {
        let i = self.idx(k, n);
        self.mui[i] + self.ici[i] + self.isi[i] + self.noise[i]
    }

    /// Sum over subcarriers of one term of UT `k`.
    pub fn total(term: &[f64], n: usize, k: usize) -> f64 {
        term[k * n..(k + 1) * n].iter().sum()
    }
}

/// Everything the evaluator needs about one drop.
pub struct DropView<'a> {
    pub channels: &'a ChannelRealization,
    pub precoders: &'a PrecoderSet,
    pub combiners: &'a CombinerSet,
    pub decision: &'a AssociationDecision,
}

impl DropView<'_> {
    fn check(&self, config: &ScenarioConfig) -> Result<()> {
        let ch = self.channels;
        if ch.n_subcarriers() != config.n_subcarriers
            || self.decision.n_uts() != ch.n_uts()
            || self.decision.n_sats() != ch.n_sats()
            || self.decision.serving.len() != ch.n_uts()
        {
            return Err(SimError::DimensionMismatch(format!(
                "channels {}x{}x{}, association {}x{}, config N = {}",
                ch.n_sats(),
                ch.n_uts(),
                ch.n_subcarriers(),
                self.decision.n_sats(),
                self.decision.n_uts(),
                config.n_subcarriers
            )));
        }
        Ok(())
    }

    /// Gain from source (m, k') to UT k without leakage and delay phases:
    /// `(u^H a_ut) sqrt(beta) alpha a_sat(k,n)^H a_sat(k',n') conj(alpha') sqrt(P')`.
    fn cross_gain(&self, ut_gain: Complex64, m: usize, k: usize, n: usize, kp: usize, np: usize) -> Complex64 {
        let ch = self.channels;
        let l = ch.link(m, k);
        let lp = ch.link(m, kp);
        let rho = if k == kp && n == np {
            Complex64::new(1.0, 0.0)
        } else {
            ch.sat_correlation(m, k, n, kp, np)
        };
        ut_gain * l.amplitude * l.small_scale * rho * lp.small_scale.conj() * self.precoders.power(m, kp).sqrt()
    }

    /// Sources (m, k') that reach UT k: serving links with a line of sight to k.
    fn sources(&self, k: usize) -> Vec<(usize, usize)> {
        let ch = self.channels;
        (0..ch.n_sats())
            .filter(|&m| !ch.link(m, k).is_blocked())
            .flat_map(|m| (0..ch.n_uts()).map(move |kp| (m, kp)))
            .filter(|&(m, kp)| self.precoders.is_serving(m, kp))
            .collect()
    }
}

/// Power decomposition of a drop in the configured interference mode.
pub fn power_terms(view: &DropView<'_>, config: &ScenarioConfig) -> Result<PowerTerms> {
    view.check(config)?;
    match config.interference_mode {
        InterferenceMode::Exact => {
            if config.n_subcarriers > EXACT_MODE_MAX_SUBCARRIERS {
                return Err(SimError::InvalidConfig(format!(
                    "exact interference mode is limited to n_subcarriers <= {EXACT_MODE_MAX_SUBCARRIERS}"
                )));
            }
            Ok(exact_terms(view, config))
        }
        InterferenceMode::Statistical => Ok(statistical_terms(view, config)),
    }
}

fn exact_terms(view: &DropView<'_>, config: &ScenarioConfig) -> PowerTerms {
    let fft = config.n_subcarriers;
    let ch = view.channels;
    let (m_sats, k_uts) = (ch.n_sats(), ch.n_uts());
    let mut out = PowerTerms::zeros(k_uts, fft);
    let sigma2 = config.noise_per_subcarrier();

    for k in 0..k_uts {
        let profiles: Vec<LeakageProfile> = (0..m_sats)
            .map(|m| LeakageProfile::new(view.decision.offset(m, k), fft))
            .collect();
        let sources = view.sources(k);
        for n in 0..fft {
            let i = out.idx(k, n);
            out.noise[i] = sigma2;
            if view.decision.excluded[k] {
                continue;
            }
            let ut_gain: Vec<Complex64> = (0..m_sats).map(|m| view.combiners.response_gain(ch, m, k, n)).collect();
            for kp in 0..k_uts {
                let own = kp == k;
                let group: Vec<usize> = sources.iter().filter(|s| s.1 == kp).map(|s| s.0).collect();
                if group.is_empty() {
                    continue;
                }
                let (mut ici, mut isi) = (0.0, 0.0);
                for np in 0..fft {
                    let (mut cur, mut prev) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
                    for &m in &group {
                        let p = &profiles[m];
                        let shift = p.delay_phase(np) * compensation_phase(np, view.precoders.delta(m, kp), fft);
                        let g = view.cross_gain(ut_gain[m], m, k, n, kp, np) * shift;
                        cur += p.current_compensated(n, np) * g;
                        prev += p.previous_compensated(n, np) * g;
                    }
                    isi += prev.norm_sqr();
                    if np == n {
                        if own {
                            out.desired[i] = cur.norm_sqr();
                        } else {
                            out.mui[i] += cur.norm_sqr();
                        }
                    } else {
                        ici += cur.norm_sqr();
                    }
                }
                out.ici[i] += ici;
                out.isi[i] += isi;
                if own {
                    out.self_ici[i] = ici;
                    out.self_isi[i] = isi;
                }
            }
        }
    }
    out
}

/// `(1/N) Σ_l |W(l) - mean(W)|^2` and `(1/N) Σ_l |total - W(l)|^2` for
/// `W(l) = Σ_m g_m 1[l >= excess_m]`, plus `mean(W)`.
fn coherent_self_terms(gains: &mut [(usize, Complex64)], fft: usize) -> (Complex64, f64, f64) {
    gains.sort_by_key(|g| g.0);
    let total: Complex64 = gains.iter().map(|g| g.1).sum();
    // W is piecewise constant between consecutive excess values
    let mut segments = Vec::with_capacity(gains.len() + 1);
    let mut w = Complex64::new(0.0, 0.0);
    let mut start = 0usize;
    for &(ex, g) in gains.iter() {
        let ex = ex.min(fft);
        if ex > start {
            segments.push((ex - start, w));
            start = ex;
        }
        w += g;
    }
    if fft > start {
        segments.push((fft - start, w));
    }
    let nf = fft as f64;
    let mean = segments.iter().map(|&(len, w)| w * len as f64).sum::<Complex64>() / nf;
    let ici = segments.iter().map(|&(len, w)| (w - mean).norm_sqr() * len as f64).sum::<f64>() / nf;
    let isi = segments.iter().map(|&(len, w)| (total - w).norm_sqr() * len as f64).sum::<f64>() / nf;
    (mean, ici, isi)
}

fn statistical_terms(view: &DropView<'_>, config: &ScenarioConfig) -> PowerTerms {
    let fft = config.n_subcarriers;
    let nf = fft as f64;
    let ch = view.channels;
    let (m_sats, k_uts) = (ch.n_sats(), ch.n_uts());
    let mut out = PowerTerms::zeros(k_uts, fft);
    let sigma2 = config.noise_per_subcarrier();

    for k in 0..k_uts {
        let offsets: Vec<_> = (0..m_sats).map(|m| view.decision.offset(m, k)).collect();
        let sources = view.sources(k);
        for n in 0..fft {
            let i = out.idx(k, n);
            out.noise[i] = sigma2;
            if view.decision.excluded[k] {
                continue;
            }
            let ut_gain: Vec<Complex64> = (0..m_sats).map(|m| view.combiners.response_gain(ch, m, k, n)).collect();
            for kp in 0..k_uts {
                let group = sources.iter().filter(|s| s.1 == kp).map(|s| s.0);
                if kp == k {
                    let mut gains: Vec<(usize, Complex64)> = group
                        .map(|m| (offsets[m].excess, view.cross_gain(ut_gain[m], m, k, n, k, n)))
                        .collect();
                    let (amp, ici, isi) = coherent_self_terms(&mut gains, fft);
                    out.desired[i] = amp.norm_sqr();
                    out.self_ici[i] = ici;
                    out.self_isi[i] = isi;
                    out.ici[i] += ici;
                    out.isi[i] += isi;
                    continue;
                }
                let mut mui = Complex64::new(0.0, 0.0);
                for m in group {
                    let o = offsets[m];
                    let g = view.cross_gain(ut_gain[m], m, k, n, kp, n);
                    let w = (nf - o.excess.min(fft) as f64) / nf;
                    let shift = compensation_phase(n, view.precoders.delta(m, kp), fft)
                        * compensation_phase(n, o.delta, fft).conj();
                    mui += g * shift * w;
                    let e = g.norm_sqr();
                    out.ici[i] += e * (w - w * w);
                    out.isi[i] += e * (1.0 - w);
                }
                out.mui[i] += mui.norm_sqr();
            }
        }
    }
    out
}

/// `desired / (MUI + ICI + ISI + noise)` per (k, n), unclamped.
pub fn sinr(terms: &PowerTerms) -> Vec<f64> {
    (0..terms.n_uts)
        .flat_map(|k| (0..terms.n_subcarriers).map(move |n| (k, n)))
        .map(|(k, n)| terms.desired[terms.idx(k, n)] / terms.interference(k, n))
        .collect()
}

/// `prelog * Σ_n B_sc log2(1 + SINR[n])` in bits/s.
pub fn throughput(sinr: &[f64], subcarrier_bw: f64, prelog: f64) -> f64 {
    prelog * sinr.iter().map(|s| subcarrier_bw * (1.0 + s).log2()).sum::<f64>()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    pub mode: AssociationMode,
    pub interference_mode: InterferenceMode,
    pub prelog: f64,
    pub terms: PowerTerms,
    pub sinr: Vec<f64>,
    /// bits/s per UT
    pub rate: Vec<f64>,
    /// bits/s/Hz per UT
    pub spectral_efficiency: Vec<f64>,
    pub attach: Vec<usize>,
    pub excluded: Vec<bool>,
}

impl ThroughputReport {
    pub fn n_uts(&self) -> usize {
        self.rate.len()
    }

    /// Mean SINR of UT `k` over subcarriers (linear).
    pub fn mean_sinr(&self, k: usize) -> f64 {
        let n = self.terms.n_subcarriers;
        self.sinr[k * n..(k + 1) * n].iter().sum::<f64>() / n as f64
    }
}

/// Rates from a power decomposition.
pub fn report(terms: PowerTerms, decision: &AssociationDecision, config: &ScenarioConfig) -> ThroughputReport {
    let n = terms.n_subcarriers;
    let s = sinr(&terms);
    let prelog = config.prelog(decision.mode);
    let rate: Vec<f64> = (0..terms.n_uts)
        .map(|k| {
            if decision.excluded[k] {
                0.0
            } else {
                throughput(&s[k * n..(k + 1) * n], config.subcarrier_bandwidth(), prelog)
            }
        })
        .collect();
    ThroughputReport {
        mode: decision.mode,
        interference_mode: config.interference_mode,
        prelog,
        spectral_efficiency: rate.iter().map(|r| r / config.bandwidth).collect(),
        rate,
        sinr: s,
        attach: (0..terms.n_uts).map(|k| decision.attach_count(k)).collect(),
        excluded: decision.excluded.clone(),
        terms,
    }
}

/// Precoders, combiners, power terms and rates of one drop.
pub fn evaluate(
    geom: &GeometrySample,
    channels: &ChannelRealization,
    decision: &AssociationDecision,
    config: &ScenarioConfig,
) -> Result<ThroughputReport> {
    let precoders = PrecoderSet::build(geom, channels, decision, config)?;
    let combiners = CombinerSet::build(channels, &precoders, decision);
    let view = DropView {
        channels,
        precoders: &precoders,
        combiners: &combiners,
        decision,
    };
    Ok(report(power_terms(&view, config)?, decision, config))
}
