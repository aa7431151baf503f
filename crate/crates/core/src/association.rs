//! Satellite association and downlink sync-point selection.
//!
//! * `single`: nearest visible satellite, UT synchronized to it.
//! * `full`: every visible satellite, UT synchronized to the nearest one.
//! * `proposed`: the visible satellites whose residual offset at the UT's sync
//!   point falls inside the additional CP (`delta <= cp_add`); the sync point is
//!   drawn at random or chosen to maximize the number of such satellites.

use rand::Rng;

use crate::config::{AssociationMode, ScenarioConfig, SyncMode, SyncSearch};
use crate::geometry::GeometrySample;
use crate::ofdm::{delay_in_samples, offset_from_samples, SampleOffset};

#[derive(Debug, Clone, PartialEq)]
pub struct AssociationDecision {
    pub mode: AssociationMode,
    pub sync_mode: SyncMode,
    /// Sync point per UT (samples).
    pub sync: Vec<usize>,
    /// Serving satellites per UT, ascending.
    pub serving: Vec<Vec<usize>>,
    /// Pre-access candidates per UT (window widened by `cp_margin`); equal to
    /// `serving` outside proposed mode.
    pub candidates: Vec<Vec<usize>>,
    /// UTs without any visible satellite; they are left out of the drop.
    pub excluded: Vec<bool>,
    /// Residual offset of every link at its UT's sync point, index `m * n_uts + k`.
    offsets: Vec<SampleOffset>,
    pub symbol_len: usize,
    pub guard: usize,
    n_uts: usize,
}

impl AssociationDecision {
    pub fn offset(&self, sat: usize, ut: usize) -> SampleOffset {
        self.offsets[sat * self.n_uts + ut]
    }

    pub fn n_uts(&self) -> usize {
        self.n_uts
    }

    pub fn n_sats(&self) -> usize {
        self.offsets.len() / self.n_uts.max(1)
    }

    pub fn is_serving(&self, sat: usize, ut: usize) -> bool {
        self.serving[ut].binary_search(&sat).is_ok()
    }

    pub fn attach_count(&self, ut: usize) -> usize {
        self.serving[ut].len()
    }

    pub fn excluded_count(&self) -> usize {
        self.excluded.iter().filter(|&&x| x).count()
    }

    /// Builds a decision from explicit serving sets and sync points.
    pub fn from_parts(
        mode: AssociationMode,
        sync_mode: SyncMode,
        geom: &GeometrySample,
        config: &ScenarioConfig,
        sync: Vec<usize>,
        serving: Vec<Vec<usize>>,
    ) -> Self {
        let symbol_len = config.symbol_len(mode);
        let guard = config.guard_len(mode);
        let n_uts = geom.n_uts();
        let ts = config.sampling_period();
        let offsets = (0..geom.n_sats())
            .flat_map(|m| (0..n_uts).map(move |k| (m, k)))
            .map(|(m, k)| {
                let d = delay_in_samples(geom.link(m, k).delay, ts);
                offset_from_samples(d, sync[k], symbol_len, guard)
            })
            .collect();
        let excluded = (0..n_uts).map(|k| geom.visible_sats(k).next().is_none()).collect();
        let mut serving = serving;
        serving.iter_mut().for_each(|s| s.sort_unstable());
        Self {
            mode,
            sync_mode,
            sync,
            candidates: serving.clone(),
            serving,
            excluded,
            offsets,
            symbol_len,
            guard,
            n_uts,
        }
    }
}

/// Satellites whose residual offset at `sync` lies within `window` samples.
pub fn attachable_set(delays: &[i64], visible: &[bool], sync: usize, symbol_len: usize, window: usize) -> Vec<usize> {
    delays
        .iter()
        .zip(visible)
        .enumerate()
        .filter(|(_, (&d, &v))| v && offset_from_samples(d, sync, symbol_len, 0).delta <= window)
        .map(|(m, _)| m)
        .collect()
}

/// Number of attachable satellites for every sync point `s in [0, symbol_len)`.
///
/// Each satellite with delay `d` is attachable for `s` in the circular interval
/// `[d - window, d]`; a difference array over the circle accumulates them.
pub fn attach_counts(delays: &[i64], visible: &[bool], symbol_len: usize, window: usize) -> Vec<usize> {
    let len = symbol_len as i64;
    let mut diff = vec![0i64; symbol_len + 1];
    for (&d, _) in delays.iter().zip(visible).filter(|(_, &v)| v) {
        let hi = d.rem_euclid(len);
        if window + 1 >= symbol_len {
            diff[0] += 1;
            diff[symbol_len] -= 1;
            continue;
        }
        let lo = hi - window as i64;
        if lo >= 0 {
            diff[lo as usize] += 1;
            diff[hi as usize + 1] -= 1;
        } else {
            diff[0] += 1;
            diff[hi as usize + 1] -= 1;
            diff[(lo + len) as usize] += 1;
            diff[symbol_len] -= 1;
        }
    }
    let mut acc = 0i64;
    diff[..symbol_len]
        .iter()
        .map(|x| {
            acc += x;
            acc as usize
        })
        .collect()
}

/// Sync point in `[0, search_len)` maximizing the attachable count; ties go to
/// the smallest point. Returns `(sync, count)`.
pub fn optimize_sync(delays: &[i64], visible: &[bool], symbol_len: usize, window: usize, search_len: usize) -> (usize, usize) {
    let counts = attach_counts(delays, visible, symbol_len, window);
    let search = search_len.min(symbol_len);
    let mut best = (0, counts[0]);
    for (s, &c) in counts.iter().enumerate().take(search).skip(1) {
        if c > best.1 {
            best = (s, c);
        }
    }
    best
}

fn ut_delays(geom: &GeometrySample, ut: usize, ts: f64) -> (Vec<i64>, Vec<bool>) {
    (0..geom.n_sats())
        .map(|m| {
            let l = geom.link(m, ut);
            (delay_in_samples(l.delay, ts), l.visible)
        })
        .unzip()
}

fn search_len(config: &ScenarioConfig) -> usize {
    match config.sync_search {
        SyncSearch::FftSize => config.n_subcarriers,
        SyncSearch::FullSymbol => config.symbol_len(AssociationMode::Proposed),
    }
}

/// Sync point that puts the nearest visible satellite at the start of the FFT window
/// (or inside the CP when that start lies beyond `N - 1`).
fn anchored_sync(delay: i64, config: &ScenarioConfig) -> usize {
    let len = config.symbol_len(AssociationMode::Full) as i64;
    (delay.rem_euclid(len) as usize).min(config.n_subcarriers - 1)
}

/// Associates every UT of a drop. `rng` is consumed only by random sync
/// (one draw per UT, excluded UTs included, so streams stay aligned).
pub fn associate<R: Rng + ?Sized>(
    mode: AssociationMode,
    sync_mode: SyncMode,
    geom: &GeometrySample,
    config: &ScenarioConfig,
    rng: &mut R,
) -> AssociationDecision {
    let ts = config.sampling_period();
    let n_uts = geom.n_uts();
    let proposed_len = config.symbol_len(AssociationMode::Proposed);
    let mut sync = Vec::with_capacity(n_uts);
    let mut serving = Vec::with_capacity(n_uts);
    let mut candidates = Vec::with_capacity(n_uts);

    for k in 0..n_uts {
        let random_sync = rng.gen_range(0..config.n_subcarriers);
        let (delays, visible) = ut_delays(geom, k, ts);
        let nearest = geom
            .visible_sats(k)
            .min_by(|&a, &b| geom.link(a, k).slant_range.total_cmp(&geom.link(b, k).slant_range));
        let Some(nearest) = nearest else {
            sync.push(0);
            serving.push(Vec::new());
            candidates.push(Vec::new());
            continue;
        };
        match mode {
            AssociationMode::Single | AssociationMode::Full => {
                sync.push(anchored_sync(delays[nearest], config));
                let set = if mode == AssociationMode::Single {
                    vec![nearest]
                } else {
                    geom.visible_sats(k).collect()
                };
                candidates.push(set.clone());
                serving.push(set);
            }
            AssociationMode::Proposed => {
                let s = match sync_mode {
                    SyncMode::Random => random_sync,
                    SyncMode::Optimized => {
                        optimize_sync(&delays, &visible, proposed_len, config.cp_add, search_len(config)).0
                    }
                };
                sync.push(s);
                serving.push(attachable_set(&delays, &visible, s, proposed_len, config.cp_add));
                candidates.push(attachable_set(
                    &delays,
                    &visible,
                    s,
                    proposed_len,
                    config.cp_add + config.cp_margin,
                ));
            }
        }
    }

    let mut decision = AssociationDecision::from_parts(mode, sync_mode, geom, config, sync, serving);
    decision.candidates = candidates;
    decision
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consts::{EARTH_RADIUS, SPEED_OF_LIGHT};
    use crate::geometry::{sample_geometry, GeometrySample};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute_counts(delays: &[i64], visible: &[bool], len: usize, window: usize) -> Vec<usize> {
        (0..len)
            .map(|s| attachable_set(delays, visible, s, len, window).len())
            .collect()
    }

    #[test]
    fn window_boundary() {
        assert_eq!(attachable_set(&[500], &[true], 0, 1688, 600), vec![0]);
        assert_eq!(attachable_set(&[600], &[true], 0, 1688, 600), vec![0]);
        assert!(attachable_set(&[601], &[true], 0, 1688, 600).is_empty());
        assert!(attachable_set(&[500], &[false], 0, 1688, 600).is_empty());
    }

    #[test]
    fn two_far_offsets_never_both_attach() {
        let delays = [0, 900];
        let vis = [true, true];
        let best = (0..1024)
            .map(|s| attachable_set(&delays, &vis, s, 1688, 600).len())
            .max()
            .unwrap();
        assert_eq!(best, 1);
        assert_eq!(optimize_sync(&delays, &vis, 1688, 600, 1024), (0, 1));
    }

    #[test]
    fn equal_offsets_tie_break() {
        for d in [0i64, 300, 599, 600, 601, 1023] {
            let delays = vec![d + 1688 * 37; 5];
            let vis = vec![true; 5];
            let (s, c) = optimize_sync(&delays, &vis, 1688, 600, 1024);
            assert_eq!(c, 5);
            assert_eq!(s, (d - 600).max(0) as usize, "d = {d}");
        }
    }

    #[test]
    fn single_satellite_smallest_sync() {
        let (s, c) = optimize_sync(&[1200], &[true], 1688, 600, 1024);
        assert_eq!((s, c), (600, 1));
    }

    #[test]
    fn difference_array_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let len = rng.gen_range(20..300);
            let window = rng.gen_range(0..len);
            let m = rng.gen_range(1..12);
            let delays: Vec<i64> = (0..m).map(|_| rng.gen_range(0..100_000)).collect();
            let vis: Vec<bool> = (0..m).map(|_| rng.gen_bool(0.8)).collect();
            assert_eq!(attach_counts(&delays, &vis, len, window), brute_counts(&delays, &vis, len, window));
        }
    }

    #[test]
    fn modulo_shift_invariance() {
        let cfg = ScenarioConfig::desk();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let geom = sample_geometry(&cfg, &mut rng);
        let len = cfg.symbol_len(AssociationMode::Proposed);
        let ts = cfg.sampling_period();
        for k in 0..geom.n_uts() {
            let (d, v) = ut_delays(&geom, k, ts);
            let shifted: Vec<i64> = d.iter().map(|x| x + 3 * len as i64).collect();
            assert_eq!(optimize_sync(&d, &v, len, cfg.cp_add, 128), optimize_sync(&shifted, &v, len, cfg.cp_add, 128));
        }
    }

    #[test]
    fn modes_follow_their_rules() {
        let cfg = ScenarioConfig::desk();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let geom = sample_geometry(&cfg, &mut rng);
        let single = associate(AssociationMode::Single, SyncMode::Optimized, &geom, &cfg, &mut rng);
        let full = associate(AssociationMode::Full, SyncMode::Optimized, &geom, &cfg, &mut rng);
        let prop = associate(AssociationMode::Proposed, SyncMode::Optimized, &geom, &cfg, &mut rng);
        for k in 0..geom.n_uts() {
            if single.excluded[k] {
                continue;
            }
            let vis: Vec<usize> = geom.visible_sats(k).collect();
            let nearest = *vis
                .iter()
                .min_by(|&&a, &&b| geom.link(a, k).slant_range.total_cmp(&geom.link(b, k).slant_range))
                .unwrap();
            assert_eq!(single.serving[k], vec![nearest]);
            assert!(single.offset(nearest, k).is_orthogonal());
            assert_eq!(full.serving[k], vis);
            assert!(full.offset(nearest, k).is_orthogonal());
            for &m in &prop.serving[k] {
                assert!(prop.offset(m, k).delta <= cfg.cp_add);
            }
            assert!(prop.sync[k] < cfg.n_subcarriers);
        }
    }

    #[test]
    fn nadir_anchor_gives_zero_offset() {
        let cfg = ScenarioConfig::desk();
        let ut = [EARTH_RADIUS, 0.0, 0.0];
        let sat = [EARTH_RADIUS + cfg.altitude, 0.0, 0.0];
        let geom = GeometrySample::from_positions(vec![sat], vec![ut], cfg.min_elevation);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let d = associate(AssociationMode::Single, SyncMode::Random, &geom, &cfg, &mut rng);
        let samples = delay_in_samples(cfg.altitude / SPEED_OF_LIGHT, cfg.sampling_period());
        let expect = samples.rem_euclid(136) as usize;
        if expect < 128 {
            assert_eq!(d.offset(0, 0).delta, 0);
        } else {
            assert!(d.offset(0, 0).is_orthogonal());
        }
    }
}
