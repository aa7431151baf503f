use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use leojt::analysis::{bound_curve, optimal_cp_length, AnalyticInputs};
use leojt::association::associate;
use leojt::beamforming::{CombinerSet, PrecoderSet};
use leojt::channel::build_channels;
use leojt::experiment::output::{emit_outputs, write_bound_csv, write_sync_demo_csv};
use leojt::experiment::{parse_values, run_campaign, stats, sync_demo, CampaignSpec, SweepAxis};
use leojt::geometry::sample_geometry;
use leojt::link_eval::{power_terms, DropView, PowerTerms};
use leojt::ofdm::oracle::time_domain_oracle;
use leojt::{AssociationMode, InterferenceMode, Result, ScenarioConfig, SyncMode};

#[derive(Parser)]
#[command(name = "leojt", version, about = "Multi-satellite cooperative downlink link-level simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scenario file (TOML); may name a `preset` to start from
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in preset used when no config file is given
    #[arg(long, default_value = "desk")]
    preset: String,
    /// Override the base seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the interference evaluation
    #[arg(long)]
    interference: Option<InterferenceMode>,
}

impl ScenarioArgs {
    fn load(&self) -> Result<ScenarioConfig> {
        let mut c = match &self.config {
            Some(p) => ScenarioConfig::from_file(p)?,
            None => ScenarioConfig::preset(&self.preset)?,
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(m) = self.interference {
            c.interference_mode = m;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 200)]
    drops: usize,
    /// Association modes to evaluate (repeatable); all three by default
    #[arg(long = "mode")]
    modes: Vec<AssociationMode>,
    #[arg(long)]
    sync: Option<SyncMode>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Also write SVG charts
    #[arg(long)]
    plots: bool,
    /// Worker threads (defaults to LEOJT_WORKERS, then all cores)
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo throughput campaign at one scenario
    Simulate(RunArgs),
    /// Campaign over a parameter sweep
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        axis: SweepAxis,
        /// start:step:end (inclusive) or a comma list
        #[arg(long)]
        values: String,
        /// Reuse the same drops at every sweep point
        #[arg(long)]
        paired: bool,
    },
    /// Closed-form bound versus additional CP length
    Analyze {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// cp_add grid, start:step:end
        #[arg(long)]
        grid: Option<String>,
        /// Count the conventional CP in the guard and symbol length
        #[arg(long)]
        include_cp: bool,
        #[arg(long, default_value = "bound.csv")]
        out: PathBuf,
    },
    /// Attach-count histograms of random versus optimized sync
    SyncDemo {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 1000)]
        drops: usize,
        #[arg(long, default_value = "sync_demo.csv")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compare the exact power terms with the sample-level receiver
    Oracle {
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 10_000)]
        symbols: usize,
        #[arg(long, default_value_t = AssociationMode::Full)]
        mode: AssociationMode,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn campaign(run: &RunArgs, axis: SweepAxis, values: Vec<String>, paired: bool) -> Result<()> {
    let mut base = run.scenario.load()?;
    if let Some(s) = run.sync {
        base.sync_mode = s;
    }
    let spec = CampaignSpec {
        axis,
        values,
        modes: if run.modes.is_empty() { AssociationMode::ALL.to_vec() } else { run.modes.clone() },
        paired_points: paired,
        workers: run.workers,
        emit_plots: run.plots,
        ..CampaignSpec::new(base, run.drops)
    };
    let result = run_campaign(&spec)?;
    let files = emit_outputs(&result, &spec, &run.out)?;
    println!("point  value      mode      mean_R(Mbps)  median_R(Mbps)  stderr   mean_attach");
    for s in &result.summaries {
        println!(
            "{:<6} {:<10} {:<9} {:>12.4} {:>15.4} {:>8.4} {:>11.2}",
            s.point,
            s.label,
            s.mode,
            s.mean_rate / 1e6,
            s.median_rate / 1e6,
            s.stderr / 1e6,
            s.mean_attach
        );
    }
    if result.total_excluded() > 0 {
        println!("excluded UTs without visible satellites: {}", result.total_excluded());
    }
    println!("wrote {} files to {}", files.len(), run.out.display());
    Ok(())
}

fn analyze(scenario: &ScenarioArgs, grid: Option<&str>, include_cp: bool, out: &Path) -> Result<()> {
    let config = scenario.load()?;
    let mut inputs = AnalyticInputs::from_config(&config);
    if include_cp {
        inputs.cp_len = config.cp_len;
    }
    inputs.validate()?;
    let grid: Vec<usize> = match grid {
        Some(g) => parse_values(g)?
            .iter()
            .map(|v| v.parse().map_err(|_| leojt::SimError::InvalidConfig(format!("bad grid value '{v}'"))))
            .collect::<Result<_>>()?,
        None => (0..config.n_subcarriers).step_by((config.n_subcarriers / 64).max(1)).collect(),
    };
    let curve = bound_curve(&inputs, &grid);
    write_bound_csv(out, &curve)?;
    let best = optimal_cp_length(&inputs, &grid)?;
    println!("optimal cp_add on grid: {best} samples; wrote {}", out.display());
    Ok(())
}

fn demo(scenario: &ScenarioArgs, drops: usize, out: &Path, workers: Option<usize>) -> Result<()> {
    let config = scenario.load()?;
    let d = sync_demo(&config, drops, workers)?;
    write_sync_demo_csv(out, &d, config.n_sats)?;
    for (name, v) in [("random", &d.random), ("optimized", &d.optimized)] {
        let f: Vec<f64> = v.iter().map(|&x| x as f64).collect();
        let (mean, _) = stats::mean_stderr(&f)?;
        println!(
            "{name:<9} attach count: min {} max {} mean {mean:.2}",
            v.iter().min().unwrap_or(&0),
            v.iter().max().unwrap_or(&0)
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn oracle(n: usize, symbols: usize, mode: AssociationMode, seed: u64) -> Result<()> {
    let mut cfg = ScenarioConfig::desk();
    let bsc = cfg.subcarrier_bandwidth();
    cfg.n_subcarriers = n;
    cfg.bandwidth = bsc * n as f64;
    cfg.cp_len = (n / 16).max(1);
    cfg.cp_add = n / 2;
    cfg.sat_array = [2, 2];
    cfg.n_sats = 3;
    cfg.n_uts = 2;
    cfg.interference_mode = InterferenceMode::Exact;
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geom = sample_geometry(&cfg, &mut rng);
    let ch = build_channels(&geom, &cfg, &mut rng);
    let dec = associate(mode, SyncMode::Random, &geom, &cfg, &mut rng);
    let pre = PrecoderSet::build(&geom, &ch, &dec, &cfg)?;
    let comb = CombinerSet::build(&ch, &pre, &dec);
    let view = DropView {
        channels: &ch,
        precoders: &pre,
        combiners: &comb,
        decision: &dec,
    };
    let exact = power_terms(&view, &cfg)?;
    let emp = time_domain_oracle(&ch, &pre, &comb, &dec, symbols, &mut rng)?;
    println!("ut  term     exact          time-domain    stderr      z");
    for k in 0..cfg.n_uts {
        let t = emp.totals[k];
        for (name, s, term) in [
            ("desired", t.desired, &exact.desired),
            ("mui", t.mui, &exact.mui),
            ("ici", t.ici, &exact.ici),
            ("isi", t.isi, &exact.isi),
        ] {
            let e = PowerTerms::total(term, n, k);
            let z = if s.std_err > 0.0 { (s.mean - e) / s.std_err } else { 0.0 };
            println!("{k:<3} {name:<8} {e:<14.6e} {:<14.6e} {:<11.3e} {z:+.2}", s.mean, s.std_err);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(run) => campaign(run, SweepAxis::None, Vec::new(), false),
        Command::Sweep {
            run,
            axis,
            values,
            paired,
        } => parse_values(values).and_then(|v| campaign(run, *axis, v, *paired)),
        Command::Analyze {
            scenario,
            grid,
            include_cp,
            out,
        } => analyze(scenario, grid.as_deref(), *include_cp, out),
        Command::SyncDemo {
            scenario,
            drops,
            out,
            workers,
        } => demo(scenario, *drops, out, *workers),
        Command::Oracle { n, symbols, mode, seed } => oracle(*n, *symbols, *mode, *seed),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
