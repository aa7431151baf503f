//! Monte Carlo campaigns: seeding, parallel drops, aggregation.
//!
//! Every drop draws its geometry, channel phases and association randomness
//! from separate ChaCha8 streams seeded by `(base seed, point, drop)`, and all
//! association modes of a drop share the same geometry and channel, so mode
//! comparisons are paired. Results depend only on the seed, never on the
//! worker count or execution order.

pub mod output;
pub mod stats;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::association::associate;
use crate::channel::build_channels;
use crate::config::{AssociationMode, ScenarioConfig, SyncMode};
use crate::error::{Result, SimError};
use crate::geometry::{sample_geometry, sample_visibility_cone};
use crate::link_eval::{evaluate, PowerTerms, ThroughputReport};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "LEOJT_WORKERS";

const STREAM_GEOMETRY: u64 = 0;
const STREAM_CHANNEL: u64 = 1;
const STREAM_ASSOCIATION: u64 = 2;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one drop.
pub fn drop_seed(base: u64, point: usize, drop: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ point as u64) ^ drop as u64)
}

/// Independent generator for one purpose within a drop.
pub fn drop_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    None,
    NSats,
    NUts,
    CpAdd,
    SyncMode,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::NSats => "n_sats",
            Self::NUts => "n_uts",
            Self::CpAdd => "cp_add",
            Self::SyncMode => "sync_mode",
        }
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => Self::None,
            "n_sats" => Self::NSats,
            "n_uts" => Self::NUts,
            "cp_add" => Self::CpAdd,
            "sync_mode" => Self::SyncMode,
            _ => return Err(SimError::InvalidConfig(format!("unknown sweep axis '{s}'"))),
        })
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

/// Expands `a:b:c` (start, step, inclusive end) or a comma list into values.
pub fn parse_values(spec: &str) -> Result<Vec<String>> {
    let bad = || SimError::InvalidConfig(format!("bad sweep values '{spec}': expected start:step:end or a comma list"));
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [a, b, c] => {
            let (a, b, c): (usize, usize, usize) =
                (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?);
            if b == 0 || c < a {
                return Err(bad());
            }
            Ok((a..=c).step_by(b).map(|v| v.to_string()).collect())
        }
        [_] => {
            let v: Vec<String> = spec.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
            if v.is_empty() {
                Err(bad())
            } else {
                Ok(v)
            }
        }
        _ => Err(bad()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSpec {
    pub base: ScenarioConfig,
    pub axis: SweepAxis,
    pub values: Vec<String>,
    pub drops: usize,
    pub modes: Vec<AssociationMode>,
    /// Reuse the same drop seeds at every sweep point.
    pub paired_points: bool,
    /// `None` defers to the environment variable, then to all cores.
    pub workers: Option<usize>,
    pub emit_plots: bool,
}

impl CampaignSpec {
    pub fn new(base: ScenarioConfig, drops: usize) -> Self {
        Self {
            base,
            axis: SweepAxis::None,
            values: Vec::new(),
            drops,
            modes: AssociationMode::ALL.to_vec(),
            paired_points: false,
            workers: None,
            emit_plots: false,
        }
    }

    /// Scenario of every sweep point, with its label.
    pub fn points(&self) -> Result<Vec<(String, ScenarioConfig)>> {
        if self.drops == 0 {
            return Err(SimError::InvalidConfig("drops must be >= 1".into()));
        }
        if self.modes.is_empty() {
            return Err(SimError::InvalidConfig("at least one association mode is required".into()));
        }
        if self.axis == SweepAxis::None {
            self.base.validate()?;
            return Ok(vec![(String::new(), self.base.clone())]);
        }
        if self.values.is_empty() {
            return Err(SimError::InvalidConfig(format!("sweep over {} needs values", self.axis)));
        }
        self.values
            .iter()
            .map(|v| {
                let mut c = self.base.clone();
                let num = || {
                    v.parse::<usize>()
                        .map_err(|_| SimError::InvalidConfig(format!("sweep value '{v}' is not a count")))
                };
                match self.axis {
                    SweepAxis::NSats => c.n_sats = num()?,
                    SweepAxis::NUts => c.n_uts = num()?,
                    SweepAxis::CpAdd => c.cp_add = num()?,
                    SweepAxis::SyncMode => c.sync_mode = v.parse()?,
                    SweepAxis::None => unreachable!(),
                }
                c.validate()?;
                Ok((v.clone(), c))
            })
            .collect()
    }

    fn worker_count(&self) -> Result<Option<usize>> {
        if let Some(w) = self.workers {
            return Ok(Some(w.max(1)));
        }
        match std::env::var(WORKERS_ENV) {
            Ok(s) => s
                .trim()
                .parse::<usize>()
                .map(|w| Some(w.max(1)))
                .map_err(|_| SimError::InvalidConfig(format!("{WORKERS_ENV} must be a positive integer, got '{s}'"))),
            Err(_) => Ok(None),
        }
    }
}

/// Per-UT outcome of one mode in one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRecord {
    pub point: usize,
    pub drop: usize,
    pub ut: usize,
    pub mode: AssociationMode,
    pub sync: SyncMode,
    pub attach: usize,
    /// bits/s
    pub rate: f64,
    /// bits/s/Hz
    pub spectral_efficiency: f64,
    pub mean_sinr_db: f64,
    /// subcarrier sums, W
    pub desired: f64,
    pub mui: f64,
    pub ici: f64,
    pub isi: f64,
    pub noise: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub point: usize,
    pub label: String,
    pub mode: AssociationMode,
    pub mean_rate: f64,
    pub median_rate: f64,
    pub stderr: f64,
    pub mean_attach: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub axis: SweepAxis,
    pub labels: Vec<String>,
    pub drops: usize,
    pub modes: Vec<AssociationMode>,
    /// Ordered by point, drop, mode, UT.
    pub records: Vec<RateRecord>,
    /// UTs left out per (point, drop) for lack of visible satellites.
    pub excluded: Vec<(usize, usize, usize)>,
    pub summaries: Vec<PointSummary>,
}

impl CampaignResult {
    /// Rates of one mode at one point, in record order.
    pub fn rates(&self, point: usize, mode: AssociationMode) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.point == point && r.mode == mode)
            .map(|r| r.rate)
            .collect()
    }

    pub fn summary(&self, point: usize, mode: AssociationMode) -> Option<&PointSummary> {
        self.summaries.iter().find(|s| s.point == point && s.mode == mode)
    }

    pub fn total_excluded(&self) -> usize {
        self.excluded.iter().map(|e| e.2).sum()
    }
}

fn records_of(point: usize, drop: usize, report: &ThroughputReport, sync: SyncMode) -> Vec<RateRecord> {
    let n = report.terms.n_subcarriers;
    let t = &report.terms;
    (0..report.n_uts())
        .filter(|&k| !report.excluded[k])
        .map(|k| RateRecord {
            point,
            drop,
            ut: k,
            mode: report.mode,
            sync,
            attach: report.attach[k],
            rate: report.rate[k],
            spectral_efficiency: report.spectral_efficiency[k],
            mean_sinr_db: 10.0 * report.mean_sinr(k).log10(),
            desired: PowerTerms::total(&t.desired, n, k),
            mui: PowerTerms::total(&t.mui, n, k),
            ici: PowerTerms::total(&t.ici, n, k),
            isi: PowerTerms::total(&t.isi, n, k),
            noise: PowerTerms::total(&t.noise, n, k),
        })
        .collect()
}

/// Evaluates every requested mode on one drop.
pub fn run_drop(
    config: &ScenarioConfig,
    modes: &[AssociationMode],
    seed: u64,
    point: usize,
    drop: usize,
) -> Result<(Vec<RateRecord>, usize)> {
    let geom = sample_geometry(config, &mut drop_rng(seed, STREAM_GEOMETRY));
    let channels = build_channels(&geom, config, &mut drop_rng(seed, STREAM_CHANNEL));
    let mut records = Vec::new();
    let mut excluded = 0;
    for &mode in modes {
        let mut rng = drop_rng(seed, STREAM_ASSOCIATION);
        let decision = associate(mode, config.sync_mode, &geom, config, &mut rng);
        excluded = decision.excluded_count();
        let report = evaluate(&geom, &channels, &decision, config)?;
        records.extend(records_of(point, drop, &report, config.sync_mode));
    }
    Ok((records, excluded))
}

/// Full report of one mode on the drop seeded by `seed`, drawn from the same
/// streams as [`run_drop`].
pub fn drop_report(config: &ScenarioConfig, mode: AssociationMode, seed: u64) -> Result<ThroughputReport> {
    let geom = sample_geometry(config, &mut drop_rng(seed, STREAM_GEOMETRY));
    let channels = build_channels(&geom, config, &mut drop_rng(seed, STREAM_CHANNEL));
    let decision = associate(mode, config.sync_mode, &geom, config, &mut drop_rng(seed, STREAM_ASSOCIATION));
    evaluate(&geom, &channels, &decision, config)
}

fn in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(job()),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map(|pool| pool.install(job))
            .map_err(|e| SimError::InvalidConfig(format!("cannot start {w} workers: {e}"))),
    }
}

pub fn run_campaign(spec: &CampaignSpec) -> Result<CampaignResult> {
    let points = spec.points()?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|p| (0..spec.drops).map(move |d| (p, d)))
        .collect();
    let outcomes: Vec<Result<(Vec<RateRecord>, usize)>> = in_pool(spec.worker_count()?, || {
        jobs.par_iter()
            .map(|&(p, d)| {
                let cfg = &points[p].1;
                let seed = drop_seed(cfg.seed, if spec.paired_points { 0 } else { p }, d);
                run_drop(cfg, &spec.modes, seed, p, d)
            })
            .collect()
    })?;

    let mut records = Vec::new();
    let mut excluded = Vec::new();
    for (&(p, d), out) in jobs.iter().zip(outcomes) {
        let (r, e) = out?;
        records.extend(r);
        if e > 0 {
            excluded.push((p, d, e));
        }
    }

    let mut summaries = Vec::new();
    for (p, (label, _)) in points.iter().enumerate() {
        for &mode in &spec.modes {
            let sel: Vec<&RateRecord> = records.iter().filter(|r| r.point == p && r.mode == mode).collect();
            if sel.is_empty() {
                continue;
            }
            let rates: Vec<f64> = sel.iter().map(|r| r.rate).collect();
            let (mean, se) = stats::mean_stderr(&rates)?;
            summaries.push(PointSummary {
                point: p,
                label: label.clone(),
                mode,
                mean_rate: mean,
                median_rate: stats::median(&rates)?,
                stderr: se,
                mean_attach: sel.iter().map(|r| r.attach as f64).sum::<f64>() / sel.len() as f64,
                samples: sel.len(),
            });
        }
    }

    Ok(CampaignResult {
        axis: spec.axis,
        labels: points.into_iter().map(|p| p.0).collect(),
        drops: spec.drops,
        modes: spec.modes.clone(),
        records,
        excluded,
        summaries,
    })
}

/// Attach counts of a single UT at the centre of its own visibility cone,
/// under random and optimized sync, one pair per drop.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncDemo {
    pub random: Vec<usize>,
    pub optimized: Vec<usize>,
}

impl SyncDemo {
    /// `(attach count, random frequency, optimized frequency)` for every count in `0..=M`.
    pub fn histogram(&self, n_sats: usize) -> Vec<(usize, usize, usize)> {
        let mut h = vec![(0, 0, 0); n_sats + 1];
        for (i, row) in h.iter_mut().enumerate() {
            row.0 = i;
        }
        for &c in &self.random {
            h[c.min(n_sats)].1 += 1;
        }
        for &c in &self.optimized {
            h[c.min(n_sats)].2 += 1;
        }
        h
    }
}

pub fn sync_demo(config: &ScenarioConfig, drops: usize, workers: Option<usize>) -> Result<SyncDemo> {
    config.validate()?;
    if drops == 0 {
        return Err(SimError::InvalidConfig("drops must be >= 1".into()));
    }
    let spec = CampaignSpec {
        workers,
        ..CampaignSpec::new(config.clone(), drops)
    };
    let pairs: Vec<(usize, usize)> = in_pool(spec.worker_count()?, || {
        (0..drops)
            .into_par_iter()
            .map(|d| {
                let seed = drop_seed(config.seed, 0, d);
                let geom = sample_visibility_cone(config, &mut drop_rng(seed, STREAM_GEOMETRY));
                let count = |sync| {
                    let mut rng = drop_rng(seed, STREAM_ASSOCIATION);
                    associate(AssociationMode::Proposed, sync, &geom, config, &mut rng).attach_count(0)
                };
                (count(SyncMode::Random), count(SyncMode::Optimized))
            })
            .collect()
    })?;
    let (random, optimized) = pairs.into_iter().unzip();
    Ok(SyncDemo { random, optimized })
}
