//! Sample-level reference receiver.
//!
//! Each serving link transmits precoded OFDM symbols per antenna (unitary IFFT,
//! cyclic prefix of the mode's guard length), the stream reaches the UT delayed
//! by the link's residual offset, and the UT cuts its FFT window and applies the
//! per-subcarrier channel and combiner. Powers are estimated by averaging over
//! random Gaussian data, so the result is independent of the closed-form
//! leakage coefficients.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::association::AssociationDecision;
use crate::beamforming::{CombinerSet, PrecoderSet};
use crate::channel::ChannelRealization;
use crate::error::{Result, SimError};

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TermStat {
    pub mean: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TermTotals {
    pub desired: TermStat,
    pub mui: TermStat,
    pub ici: TermStat,
    pub isi: TermStat,
}

/// Empirical power decomposition. Per-(k, n) means are flattened as `k * N + n`;
/// `totals[k]` holds the subcarrier sums of UT `k` with standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTerms {
    pub n_uts: usize,
    pub n_subcarriers: usize,
    pub n_symbols: usize,
    pub desired: Vec<f64>,
    pub mui: Vec<f64>,
    pub ici: Vec<f64>,
    pub isi: Vec<f64>,
    pub totals: Vec<TermTotals>,
}

#[derive(Default, Clone, Copy)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn stat(&self) -> TermStat {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        TermStat {
            mean: self.mean,
            std_err: (var / self.n.max(1.0)).sqrt(),
        }
    }
}

/// One transmit link (m, k') as seen by the receiving UT k.
struct Path {
    /// residual offset at the receiving UT
    delay: usize,
    /// per tx antenna, frequency-domain precoder weights over subcarriers
    weights: Vec<Vec<Complex64>>,
    /// per subcarrier, `u^H H^n` (length N_tx)
    rx_rows: Vec<Vec<Complex64>>,
}

struct Engine {
    fft: usize,
    guard: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl Engine {
    /// Received subcarrier values `(current epoch, previous epoch)` of one group
    /// of paths carrying the same data.
    fn receive(&self, paths: &[Path], cur: &[Complex64], prev: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.fft;
        let g = self.guard;
        let sym = n + g;
        let mut z_cur = vec![Complex64::new(0.0, 0.0); n];
        let mut z_prev = vec![Complex64::new(0.0, 0.0); n];
        let mut x_cur = vec![Complex64::new(0.0, 0.0); n];
        let mut x_prev = vec![Complex64::new(0.0, 0.0); n];
        let mut w_cur = vec![Complex64::new(0.0, 0.0); n];
        let mut w_prev = vec![Complex64::new(0.0, 0.0); n];
        for p in paths {
            for (t, weights) in p.weights.iter().enumerate() {
                for i in 0..n {
                    x_cur[i] = weights[i] * cur[i];
                    x_prev[i] = weights[i] * prev[i];
                }
                self.inverse.process(&mut x_cur);
                self.inverse.process(&mut x_prev);
                // transmitted frame sample p (CP first) of a symbol with time samples x
                let frame = |x: &[Complex64], q: usize| if q < g { x[n - g + q] } else { x[q - g] };
                for i in 0..n {
                    let j = sym + g + i - p.delay;
                    if j >= sym {
                        w_cur[i] = frame(&x_cur, j - sym) * self.scale;
                        w_prev[i] = Complex64::new(0.0, 0.0);
                    } else {
                        w_cur[i] = Complex64::new(0.0, 0.0);
                        w_prev[i] = frame(&x_prev, j) * self.scale;
                    }
                }
                self.forward.process(&mut w_cur);
                self.forward.process(&mut w_prev);
                for i in 0..n {
                    let r = p.rx_rows[i][t] * self.scale;
                    z_cur[i] += r * w_cur[i];
                    z_prev[i] += r * w_prev[i];
                }
            }
        }
        (z_cur, z_prev)
    }
}

fn gaussian_symbols<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re * s, im * s)
        })
        .collect()
}

/// Monte Carlo power decomposition over `n_symbols` independent symbol pairs
/// (current and previous epoch) per UT stream. Excluded UTs report zeros.
pub fn time_domain_oracle<R: Rng + ?Sized>(
    channels: &ChannelRealization,
    precoders: &PrecoderSet,
    combiners: &CombinerSet,
    decision: &AssociationDecision,
    n_symbols: usize,
    rng: &mut R,
) -> Result<OracleTerms> {
    if n_symbols == 0 {
        return Err(SimError::EmptyInput("oracle symbol count"));
    }
    let fft = channels.n_subcarriers();
    let (m_sats, k_uts) = (channels.n_sats(), channels.n_uts());
    if decision.n_uts() != k_uts || decision.n_sats() != m_sats {
        return Err(SimError::DimensionMismatch("association does not match channels".into()));
    }
    let mut planner = FftPlanner::new();
    let engine = Engine {
        fft,
        guard: decision.guard,
        forward: planner.plan_fft_forward(fft),
        inverse: planner.plan_fft_inverse(fft),
        scale: 1.0 / (fft as f64).sqrt(),
    };
    let n_tx = channels.sat_array.len();

    // groups[k][k']: paths from the serving satellites of k' to UT k
    let groups: Vec<Vec<Vec<Path>>> = (0..k_uts)
        .map(|k| {
            (0..k_uts)
                .map(|kp| {
                    (0..m_sats)
                        .filter(|&m| precoders.is_serving(m, kp) && !channels.link(m, k).is_blocked())
                        .map(|m| {
                            let v: Vec<Vec<Complex64>> = (0..fft).map(|n| precoders.vector(channels, m, kp, n)).collect();
                            let weights = (0..n_tx).map(|t| v.iter().map(|vn| vn[t]).collect()).collect();
                            let l = channels.link(m, k);
                            let rx_rows = (0..fft)
                                .map(|n| {
                                    let g = combiners.response_gain(channels, m, k, n) * l.small_scale * l.amplitude;
                                    channels.sat_response(m, k, n).iter().map(|a| g * a.conj()).collect()
                                })
                                .collect();
                            Path {
                                delay: decision.offset(m, k).delta,
                                weights,
                                rx_rows,
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    // diagonal gains by impulse probing: gains[k][k'][n]
    let zeros = vec![Complex64::new(0.0, 0.0); fft];
    let gains: Vec<Vec<Vec<Complex64>>> = groups
        .iter()
        .map(|row| {
            row.iter()
                .map(|paths| {
                    (0..fft)
                        .map(|n| {
                            if paths.is_empty() {
                                return Complex64::new(0.0, 0.0);
                            }
                            let mut e = zeros.clone();
                            e[n] = Complex64::new(1.0, 0.0);
                            engine.receive(paths, &e, &zeros).0[n]
                        })
                        .collect()
                })
                .collect()
        })
        .collect();

    let cells = k_uts * fft;
    let mut sums = [vec![0.0; cells], vec![0.0; cells], vec![0.0; cells], vec![0.0; cells]];
    let mut totals = vec![[Welford::default(); 4]; k_uts];
    let mut draw = [vec![0.0; cells], vec![0.0; cells], vec![0.0; cells], vec![0.0; cells]];

    for _ in 0..n_symbols {
        let data: Vec<(Vec<Complex64>, Vec<Complex64>)> =
            (0..k_uts).map(|_| (gaussian_symbols(rng, fft), gaussian_symbols(rng, fft))).collect();
        draw.iter_mut().for_each(|d| d.iter_mut().for_each(|x| *x = 0.0));
        for k in (0..k_uts).filter(|&k| !decision.excluded[k]) {
            for kp in 0..k_uts {
                let paths = &groups[k][kp];
                if paths.is_empty() {
                    continue;
                }
                let (cur, prev) = &data[kp];
                let (z_cur, z_prev) = engine.receive(paths, cur, prev);
                for n in 0..fft {
                    let i = k * fft + n;
                    let diag = gains[k][kp][n] * cur[n];
                    draw[if kp == k { 0 } else { 1 }][i] += diag.norm_sqr();
                    draw[2][i] += (z_cur[n] - diag).norm_sqr();
                    draw[3][i] += z_prev[n].norm_sqr();
                }
            }
        }
        for (t, d) in draw.iter().enumerate() {
            for (s, x) in sums[t].iter_mut().zip(d) {
                *s += x;
            }
            for (k, acc) in totals.iter_mut().enumerate() {
                acc[t].push(d[k * fft..(k + 1) * fft].iter().sum());
            }
        }
    }

    let ns = n_symbols as f64;
    let [desired, mui, ici, isi] = sums.map(|v| v.into_iter().map(|x| x / ns).collect::<Vec<_>>());
    Ok(OracleTerms {
        n_uts: k_uts,
        n_subcarriers: fft,
        n_symbols,
        desired,
        mui,
        ici,
        isi,
        totals: totals
            .iter()
            .map(|t| TermTotals {
                desired: t[0].stat(),
                mui: t[1].stat(),
                ici: t[2].stat(),
                isi: t[3].stat(),
            })
            .collect(),
    })
}
