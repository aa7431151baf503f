//! Sample-offset arithmetic and ICI/ISI leakage coefficients.
//!
//! A signal arriving `delta` samples late relative to the UT's FFT window
//! contributes its current symbol on window samples `[excess, N)` and the tail
//! of its previous symbol on `[0, excess)`, where `excess = max(delta - guard, 0)`.
//! After the FFT, data on subcarrier `n'` leaks onto subcarrier `n` through
//!
//! ```text
//! A_nn'(delta) = (1/N) e^{-j2π n' delta/N} Σ_{l=excess}^{N-1} e^{j2π(n'-n)l/N}   (current symbol)
//! B_nn'(delta) = (1/N) e^{-j2π n' delta/N} Σ_{l=0}^{excess-1} e^{j2π(n'-n)l/N}   (previous symbol)
//! ```

pub mod oracle;

use num_complex::Complex64;

/// Residual timing offset of one link after the UT's sync point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleOffset {
    /// Offset in samples, in `[0, symbol_len)`.
    pub delta: usize,
    /// Samples beyond the guard, `max(delta - guard, 0)`.
    pub excess: usize,
    /// Guard window the offset was measured against.
    pub guard: usize,
}

impl SampleOffset {
    pub fn new(delta: usize, guard: usize) -> Self {
        Self {
            delta,
            excess: delta.saturating_sub(guard),
            guard,
        }
    }

    /// Inside the guard: no ICI and no ISI.
    pub fn is_orthogonal(&self) -> bool {
        self.excess == 0
    }
}

/// `floor(tau / ts)` with values within 1e-9 of an integer snapped to it, so
/// that delays that are exact sample multiples are not pushed down by rounding.
pub fn delay_in_samples(tau: f64, ts: f64) -> i64 {
    let x = tau / ts;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as i64
    } else {
        x.floor() as i64
    }
}

/// `delta = (floor(tau / ts) - s) mod symbol_len`, `excess = max(delta - guard, 0)`.
pub fn sample_offset(tau: f64, ts: f64, sync: usize, symbol_len: usize, guard: usize) -> SampleOffset {
    offset_from_samples(delay_in_samples(tau, ts), sync, symbol_len, guard)
}

/// Same as [`sample_offset`] for a delay already expressed in whole samples.
pub fn offset_from_samples(delay: i64, sync: usize, symbol_len: usize, guard: usize) -> SampleOffset {
    let delta = (delay - sync as i64).rem_euclid(symbol_len as i64) as usize;
    SampleOffset::new(delta, guard)
}

/// exp(j 2π num / den) with the numerator reduced exactly first.
fn unit_phase(num: i64, den: usize) -> Complex64 {
    let r = num.rem_euclid(den as i64) as f64;
    Complex64::from_polar(1.0, std::f64::consts::TAU * r / den as f64)
}

/// (1/N) Σ_{l=lo}^{N-1} e^{j2π q l/N} in closed form.
fn tail_sum(q: usize, lo: usize, n: usize) -> Complex64 {
    if q.is_multiple_of(n) {
        return Complex64::new((n - lo) as f64 / n as f64, 0.0);
    }
    // r^lo (1 - r^{N-lo}) / (1 - r) = (r^lo - 1) / (1 - r) since r^N = 1
    let r = unit_phase(q as i64, n);
    let rl = unit_phase((q * lo) as i64, n);
    (rl - 1.0) / (1.0 - r) / n as f64
}

/// (1/N) Σ_{l=0}^{hi-1} e^{j2π q l/N} in closed form.
fn head_sum(q: usize, hi: usize, n: usize) -> Complex64 {
    if q.is_multiple_of(n) {
        return Complex64::new(hi as f64 / n as f64, 0.0);
    }
    let r = unit_phase(q as i64, n);
    let rh = unit_phase((q * hi) as i64, n);
    (1.0 - rh) / (1.0 - r) / n as f64
}

fn subcarrier_gap(n: usize, n_prime: usize, fft: usize) -> usize {
    (n_prime + fft - n % fft) % fft
}

/// ICI leakage coefficient `A_nn'(delta)` from subcarrier `n_prime` onto `n`.
pub fn ici_leakage(n: usize, n_prime: usize, delta: usize, excess: usize, fft: usize) -> Complex64 {
    debug_assert!(excess <= fft);
    let q = subcarrier_gap(n, n_prime, fft);
    unit_phase(-((n_prime * delta) as i64), fft) * tail_sum(q, excess, fft)
}

/// ISI leakage coefficient `B_nn'(delta)` from subcarrier `n_prime` of the previous symbol onto `n`.
pub fn isi_leakage(n: usize, n_prime: usize, delta: usize, excess: usize, fft: usize) -> Complex64 {
    debug_assert!(excess <= fft);
    let q = subcarrier_gap(n, n_prime, fft);
    unit_phase(-((n_prime * delta) as i64), fft) * head_sum(q, excess, fft)
}

/// Parseval row energies `(Σ_n' |A_nn'|^2, Σ_n' |B_nn'|^2) = ((N - excess)/N, excess/N)`.
pub fn leakage_row_energy(excess: usize, fft: usize) -> (f64, f64) {
    let n = fft as f64;
    let e = excess.min(fft) as f64;
    ((n - e) / n, e / n)
}

/// Same energies by explicit summation over `n'` for row `n` (slow path).
pub fn leakage_row_energy_explicit(n: usize, delta: usize, excess: usize, fft: usize) -> (f64, f64) {
    (0..fft).fold((0.0, 0.0), |(a, b), np| {
        (
            a + ici_leakage(n, np, delta, excess, fft).norm_sqr(),
            b + isi_leakage(n, np, delta, excess, fft).norm_sqr(),
        )
    })
}

/// Delay-independent part of the leakage of one link, indexed by subcarrier
/// gap `q = (n' - n) mod N`; `A_nn' = e^{-j2π n' delta/N} * current[q]`.
#[derive(Debug, Clone)]
pub struct LeakageProfile {
    pub offset: SampleOffset,
    current: Vec<Complex64>,
    previous: Vec<Complex64>,
    fft: usize,
}

impl LeakageProfile {
    pub fn new(offset: SampleOffset, fft: usize) -> Self {
        let excess = offset.excess.min(fft);
        Self {
            offset,
            current: (0..fft).map(|q| tail_sum(q, excess, fft)).collect(),
            previous: (0..fft).map(|q| head_sum(q, excess, fft)).collect(),
            fft,
        }
    }

    /// e^{j2π n' delta/N} A_nn'
    pub fn current_compensated(&self, n: usize, n_prime: usize) -> Complex64 {
        self.current[subcarrier_gap(n, n_prime, self.fft)]
    }

    /// e^{j2π n' delta/N} B_nn'
    pub fn previous_compensated(&self, n: usize, n_prime: usize) -> Complex64 {
        self.previous[subcarrier_gap(n, n_prime, self.fft)]
    }

    pub fn delay_phase(&self, n_prime: usize) -> Complex64 {
        unit_phase(-((n_prime * self.offset.delta) as i64), self.fft)
    }

    pub fn ici(&self, n: usize, n_prime: usize) -> Complex64 {
        self.delay_phase(n_prime) * self.current_compensated(n, n_prime)
    }

    pub fn isi(&self, n: usize, n_prime: usize) -> Complex64 {
        self.delay_phase(n_prime) * self.previous_compensated(n, n_prime)
    }

    /// Diagonal window gain (N - excess)/N.
    pub fn window_gain(&self) -> f64 {
        self.current[0].re
    }
}

/// Precoder delay-compensation phase e^{j2π n delta / N}.
pub fn compensation_phase(n: usize, delta: usize, fft: usize) -> Complex64 {
    unit_phase((n * delta) as i64, fft)
}
