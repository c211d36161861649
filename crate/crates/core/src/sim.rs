//! Command orchestration shared by the CLI and the integration tests.
//!
//! Every stochastic draw uses a stream keyed by (seed, purpose, realization),
//! and realizations are reduced in index order, so outputs do not depend on
//! the thread count.

use std::path::{Path, PathBuf};

use num_complex::Complex;
use rayon::prelude::*;

use crate::absorption::{absorption_approx, ApproxVariant};
use crate::channel::{BeamTarget, Link, Scenario};
use crate::config::{MediumConfig, MediumModel, SimulationConfig};
use crate::error::Result;
use crate::geometry::{direction_between, field_region, rayleigh_distance, FieldRegion};
use crate::io::{fmt_f64, read_tensor, report_bytes, OutputSet, Provenance};
use crate::misalignment::{misalignment_params, sample_misalignment, MisalignmentParams};
use crate::multipath::MultipathRealization;
use crate::num::wavelength;
use crate::rng::{stream, Purpose};
use crate::stats::{capacity, capacity_upper_bound, coherence_bandwidth, mean_excess_delay, rms_delay_spread};
use crate::timevariant::{channel_tv, empirical_acf, TvSampling};

/// Report lines plus the files a command produced.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub report: Vec<(String, String)>,
    pub outputs: Vec<PathBuf>,
}

impl RunSummary {
    fn push(&mut self, k: &str, v: impl Into<String>) {
        self.report.push((k.to_string(), v.into()));
    }
}

pub fn build_link(cfg: &SimulationConfig, scenario: Scenario, beam_target: BeamTarget) -> Result<Link<f64>> {
    let mut options = cfg.options.channel.clone();
    options.scenario = scenario;
    options.beam_target = beam_target;
    let model = cfg.medium.absorption_model()?;
    Link::new(cfg.tx.clone(), cfg.rx.clone(), cfg.grid, options, &model)
}

pub fn realization(cfg: &SimulationConfig, seed: u64, r: usize) -> MultipathRealization<f64> {
    MultipathRealization::generate(&cfg.multipath, &mut stream(seed, Purpose::Multipath, r as u64))
}

/// Misalignment parameters of the link, if enabled.
pub fn link_misalignment(cfg: &SimulationConfig, link: &Link<f64>) -> Result<Option<MisalignmentParams<f64>>> {
    let Some(m) = &cfg.options.misalignment else { return Ok(None) };
    let (_, target) = direction_between(link.tx.center, link.rx.center, &link.tx.rotation_matrix())?;
    misalignment_params(&link.tx, &link.rx, link.center_distance(), &target, cfg.grid.center, m.sigma_m).map(Some)
}

fn misalignment_draw(params: Option<&MisalignmentParams<f64>>, seed: u64, r: usize) -> f64 {
    params.map_or(1.0, |p| sample_misalignment(p.epsilon, &mut stream(seed, Purpose::Misalignment, r as u64)))
}

fn phase_errors(
    cfg: &SimulationConfig,
    link: &Link<f64>,
    seed: u64,
    r: usize,
) -> Option<crate::channel::PhaseErrors<f64>> {
    cfg.options
        .phase_error
        .map(|dm| link.sample_phase_errors(dm, &mut stream(seed, Purpose::PhaseError, r as u64)))
}

/// Unbeamformed power-delay profile at the delay reference subcarrier,
/// summed over SA pairs.
pub fn path_pdp(link: &Link<f64>, mp: Option<&MultipathRealization<f64>>, k: usize) -> Result<Vec<(f64, f64)>> {
    let mut pdp: Vec<(f64, f64)> = link
        .all_pair_paths(mp)?
        .iter()
        .flat_map(|p| p.terms.iter().map(|t| (t.delay, t.gain[k].norm_sqr())).collect::<Vec<_>>())
        .collect();
    pdp.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pdp)
}

fn field_entries(cfg: &SimulationConfig, link: &Link<f64>, s: &mut RunSummary) {
    let d_max = link.tx.max_dimension().max(link.rx.max_dimension());
    let lambda = wavelength(cfg.grid.center);
    let region = match field_region(d_max, lambda, link.center_distance()) {
        FieldRegion::ReactiveNear => "reactive_near",
        FieldRegion::Fresnel => "fresnel",
        FieldRegion::Far => "far",
    };
    s.push("link_distance_m", fmt_f64(link.center_distance()));
    s.push("rayleigh_distance_m", fmt_f64(rayleigh_distance(d_max, lambda)));
    s.push("field_region", region);
}

fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

/// K(f) over the `[absorb]` grid for the exact model and both approximations.
pub fn run_absorb(cfg: &SimulationConfig, out: &mut OutputSet) -> Result<RunSummary> {
    let freqs = cfg.absorb.frequencies();
    let exact_cfg = MediumConfig {
        model: MediumModel::Exact,
        ..cfg.medium.clone()
    };
    let exact = exact_cfg.absorption_model()?.spectrum(&freqs)?.k;
    let mu = cfg.medium.mixing_ratio.get("H2O").copied().unwrap_or(0.0);
    let rows: Vec<Vec<String>> = freqs
        .iter()
        .zip(&exact)
        .map(|(&f, &ke)| {
            let a1 = absorption_approx(f, ApproxVariant::Approx1, mu);
            let a2 = absorption_approx(f, ApproxVariant::Approx2, mu);
            vec![
                fmt_f64(f),
                fmt_f64(ke),
                fmt_f64(a1.k),
                fmt_f64(a2.k),
                (a1.in_band as u8).to_string(),
                (a2.in_band as u8).to_string(),
            ]
        })
        .collect();
    let path = out_path(&cfg.run.out_dir, "absorption.csv");
    out.write_csv(
        &path,
        &[
            "frequency_hz",
            "k_exact_per_m",
            "k_approx1_per_m",
            "k_approx2_per_m",
            "approx1_in_band",
            "approx2_in_band",
        ],
        &rows,
    )?;
    let mut s = RunSummary::default();
    s.push("rows", rows.len().to_string());
    s.push("h2o_mixing_ratio", fmt_f64(mu));
    s.outputs.push(path);
    Ok(s)
}

/// Time-invariant tensors and statistics for every realization.
pub fn run_channel(cfg: &SimulationConfig, seed: u64, out: &mut OutputSet) -> Result<RunSummary> {
    let link = build_link(cfg, cfg.scenario, cfg.options.channel.beam_target)?;
    let mis = link_misalignment(cfg, &link)?;
    let dir = &cfg.run.out_dir;
    let mut s = RunSummary::default();
    let mut rows = Vec::new();
    let (mut tau_sum, mut bcoh_sum, mut n_ok) = (0.0, 0.0, 0usize);
    for r in 0..cfg.run.realizations {
        let mp = realization(cfg, seed, r);
        let errors = phase_errors(cfg, &link, seed, r);
        let b = misalignment_draw(mis.as_ref(), seed, r);

        let mut h = link.channel_tiv_freq(Some(&mp))?;
        let mut eff = link.effective_channel(Some(&mp), errors.as_ref())?;
        h.scale(b);
        eff.scale(b);
        let p = out_path(dir, &format!("channel_freq_r{r:03}.tsim"));
        out.write_tensor(&p, &h)?;
        s.outputs.push(p);
        let p = out_path(dir, &format!("channel_eff_r{r:03}.tsim"));
        out.write_tensor(&p, &eff)?;
        s.outputs.push(p);
        let mut truncated = 0;
        if cfg.run.delay_domain {
            let mut hd = link.channel_tiv_delay(Some(&mp), cfg.run.delay_reference, cfg.run.sample_interval, cfg.run.taps)?;
            hd.scale(b);
            truncated = hd.truncated_paths;
            let p = out_path(dir, &format!("channel_delay_r{r:03}.tsim"));
            out.write_tensor(&p, &hd)?;
            s.outputs.push(p);
        }

        let pdp = path_pdp(&link, Some(&mp), cfg.run.delay_reference)?;
        let p = out_path(dir, &format!("pdp_r{r:03}.csv"));
        let pdp_rows: Vec<_> = pdp.iter().map(|&(t, w)| vec![fmt_f64(t), fmt_f64(w * b * b)]).collect();
        out.write_csv(&p, &["delay_s", "power"], &pdp_rows)?;
        s.outputs.push(p);

        let tau = rms_delay_spread(&pdp).ok();
        let bcoh = tau.and_then(|t| coherence_bandwidth(t).ok());
        if let (Some(t), Some(bc)) = (tau, bcoh) {
            tau_sum += t;
            bcoh_sum += bc;
            n_ok += 1;
        }
        let opt = |v: Option<f64>| v.map_or_else(|| "nan".to_string(), fmt_f64);
        rows.push(vec![
            r.to_string(),
            mp.clusters.len().to_string(),
            mp.num_rays().to_string(),
            opt(mean_excess_delay(&pdp).ok()),
            opt(tau),
            opt(bcoh),
            fmt_f64(b),
            truncated.to_string(),
        ]);
    }
    let p = out_path(dir, "channel_stats.csv");
    out.write_csv(
        &p,
        &[
            "realization",
            "clusters",
            "rays",
            "mean_excess_delay_s",
            "tau_rms_s",
            "coherence_bandwidth_hz",
            "misalignment",
            "truncated_paths",
        ],
        &rows,
    )?;
    s.outputs.push(p);

    s.push("realizations", cfg.run.realizations.to_string());
    if n_ok > 0 {
        s.push("tau_rms_s", fmt_f64(tau_sum / n_ok as f64));
        s.push("coherence_bandwidth_hz", fmt_f64(bcoh_sum / n_ok as f64));
    } else {
        // A single LoS path has no delay spread.
        s.push("tau_rms_s", fmt_f64(0.0));
        s.push("coherence_bandwidth_hz", "inf");
    }
    s.push("absorption_out_of_band_subbands", link.out_of_band.to_string());
    field_entries(cfg, &link, &mut s);
    if let Some(m) = &mis {
        s.push("misalignment_epsilon", fmt_f64(m.epsilon));
        s.push("misalignment_w_r0", fmt_f64(m.w_r0));
    }
    write_report(dir, "channel_report.txt", out, &mut s)?;
    Ok(s)
}

fn write_report(dir: &Path, name: &str, out: &mut OutputSet, s: &mut RunSummary) -> Result<()> {
    let p = out_path(dir, name);
    out.write(&p, &report_bytes(&s.report))?;
    s.outputs.push(p);
    Ok(())
}

/// Time-variant tensors for every realization plus the pooled fading ACF.
pub fn run_tv(cfg: &SimulationConfig, seed: u64, out: &mut OutputSet) -> Result<RunSummary> {
    let link = build_link(cfg, cfg.scenario, cfg.options.channel.beam_target)?;
    let mis = link_misalignment(cfg, &link)?;
    let dir = &cfg.run.out_dir;
    let doppler = cfg.options.doppler;
    let sampling = TvSampling {
        time_samples: cfg.run.time_samples,
        time_step: cfg.run.time_step,
        sample_interval: cfg.run.sample_interval,
        taps: cfg.run.taps,
        k_ref: cfg.run.delay_reference,
    };
    let mut s = RunSummary::default();
    let mut processes: Vec<Vec<Complex<f64>>> = Vec::new();
    for r in 0..cfg.run.realizations {
        let mp = realization(cfg, seed, r);
        let errors = phase_errors(cfg, &link, seed, r);
        let b = misalignment_draw(mis.as_ref(), seed, r);
        let mut tv = channel_tv(&link, Some(&mp), errors.as_ref(), &doppler, &sampling, seed, r as u64)?;
        tv.freq.scale(b);
        tv.delay.scale(b);
        let p = out_path(dir, &format!("tv_freq_r{r:03}.tsim"));
        out.write_tensor(&p, &tv.freq)?;
        s.outputs.push(p);
        let p = out_path(dir, &format!("tv_delay_r{r:03}.tsim"));
        out.write_tensor(&p, &tv.delay)?;
        s.outputs.push(p);
        processes.extend(tv.fading);
    }
    let rows: Vec<Vec<String>> = (0..cfg.run.time_samples)
        .map(|lag| {
            let dt = lag as f64 * cfg.run.time_step;
            let emp = empirical_acf(&processes, lag).ok();
            vec![
                fmt_f64(dt),
                emp.map_or_else(|| "nan".into(), |v| fmt_f64(v.re)),
                emp.map_or_else(|| "nan".into(), |v| fmt_f64(v.im)),
                fmt_f64(doppler.acf(dt)),
            ]
        })
        .collect();
    let p = out_path(dir, "tv_acf.csv");
    out.write_csv(&p, &["lag_s", "acf_empirical_re", "acf_empirical_im", "acf_model"], &rows)?;
    s.outputs.push(p);

    s.push("realizations", cfg.run.realizations.to_string());
    s.push("max_doppler_hz", fmt_f64(doppler.max_doppler()));
    s.push("coherence_time_s", fmt_f64(doppler.coherence_time()));
    s.push("time_samples", cfg.run.time_samples.to_string());
    s.push("time_step_s", fmt_f64(cfg.run.time_step));
    s.push("fading_processes", processes.len().to_string());
    field_entries(cfg, &link, &mut s);
    write_report(dir, "tv_report.txt", out, &mut s)?;
    Ok(s)
}

/// Per-realization capacity samples of one link configuration.
pub fn capacity_samples(cfg: &SimulationConfig, link: &Link<f64>, seed: u64) -> Result<Vec<f64>> {
    let mis = link_misalignment(cfg, link)?;
    let snr = cfg.capacity.snr();
    (0..cfg.run.realizations)
        .into_par_iter()
        .map(|r| {
            let mp = realization(cfg, seed, r);
            let errors = phase_errors(cfg, link, seed, r);
            let b = misalignment_draw(mis.as_ref(), seed, r);
            let mut h = link.effective_channel(Some(&mp), errors.as_ref())?;
            h.scale(b);
            capacity(&h, snr)
        })
        .collect()
}

/// Mean, standard error and 95% half-width of a sample.
pub fn mean_ci(x: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    if x.len() < 2 {
        return (m, f64::NAN, f64::NAN);
    }
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    let se = (v / n).sqrt();
    (m, se, 1.959_963_984_540_054 * se)
}

/// Monte-Carlo ergodic capacity and its bound.
pub fn run_capacity(cfg: &SimulationConfig, seed: u64, out: &mut OutputSet) -> Result<RunSummary> {
    let link = build_link(cfg, cfg.capacity.scenario, cfg.capacity.beam_target)?;
    let samples = capacity_samples(cfg, &link, seed)?;
    let bound = capacity_upper_bound(&link, &cfg.multipath, cfg.capacity.snr())?;
    let dir = &cfg.run.out_dir;
    let rows: Vec<_> = samples.iter().enumerate().map(|(r, c)| vec![r.to_string(), fmt_f64(*c)]).collect();
    let mut s = RunSummary::default();
    let p = out_path(dir, "capacity.csv");
    out.write_csv(&p, &["realization", "capacity_bps"], &rows)?;
    s.outputs.push(p);
    let (m, se, ci) = mean_ci(&samples);
    s.push("realizations", samples.len().to_string());
    s.push("capacity_mean_bps", fmt_f64(m));
    s.push("capacity_stderr_bps", fmt_f64(se));
    s.push("capacity_ci95_halfwidth_bps", fmt_f64(ci));
    s.push("capacity_bound_bps", fmt_f64(bound));
    s.push("snr_db", fmt_f64(cfg.capacity.tx_power_dbm - cfg.capacity.noise_dbm));
    field_entries(cfg, &link, &mut s);
    write_report(dir, "capacity_report.txt", out, &mut s)?;
    Ok(s)
}

/// Delay spread and coherence bandwidth recomputed from a tensor file.
///
/// Delay tensors use their tap powers directly; frequency tensors are first
/// brought to the delay domain by an inverse DFT over subcarriers.
pub fn tensor_stats(path: &Path) -> Result<Vec<(String, String)>> {
    let t = read_tensor(path)?;
    let n_ent = t.n_rx * t.n_tx;
    let mut power = vec![0.0; t.n_bins];
    for tt in 0..t.n_time {
        match t.axis {
            crate::channel::Axis::Delay => {
                for (u, p) in power.iter_mut().enumerate() {
                    *p += t.matrix(tt, u).iter().map(|v| v.norm_sqr()).sum::<f64>();
                }
            }
            crate::channel::Axis::Frequency => {
                let kk = t.n_bins;
                let mut planner = rustfft::FftPlanner::<f64>::new();
                let fft = planner.plan_fft_inverse(kk);
                for e in 0..n_ent {
                    let mut col: Vec<Complex<f64>> = (0..kk).map(|k| t.data[t.index(tt, k, 0, 0) + e]).collect();
                    fft.process(&mut col);
                    for (p, v) in power.iter_mut().zip(&col) {
                        *p += v.norm_sqr();
                    }
                }
            }
        }
    }
    let ts = match t.axis {
        crate::channel::Axis::Delay => t.sample_interval,
        crate::channel::Axis::Frequency => 1.0 / t.grid.bandwidth,
    };
    let pdp: Vec<(f64, f64)> = power.iter().enumerate().map(|(u, &p)| (u as f64 * ts, p)).collect();
    let tau = rms_delay_spread(&pdp)?;
    let mut out = vec![
        ("source".to_string(), path.display().to_string()),
        ("dims".to_string(), format!("{}x{}x{}x{}", t.n_time, t.n_bins, t.n_rx, t.n_tx)),
        ("tap_interval_s".to_string(), fmt_f64(ts)),
        ("tau_rms_s".to_string(), fmt_f64(tau)),
        ("mean_excess_delay_s".to_string(), fmt_f64(mean_excess_delay(&pdp)?)),
    ];
    out.push((
        "coherence_bandwidth_hz".to_string(),
        coherence_bandwidth(tau).map_or_else(|_| "inf".to_string(), fmt_f64),
    ));
    Ok(out)
}

pub fn run_stats(tensor: &Path, out_dir: &Path, out: &mut OutputSet) -> Result<RunSummary> {
    let mut s = RunSummary {
        report: tensor_stats(tensor)?,
        outputs: Vec::new(),
    };
    write_report(out_dir, "stats_report.txt", out, &mut s)?;
    Ok(s)
}

/// Writes `<command>.provenance.toml` next to the outputs.
pub fn write_provenance(
    out_dir: &Path,
    command: &str,
    seed: u64,
    config_text: &str,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
    out: &mut OutputSet,
) -> Result<PathBuf> {
    let prov = Provenance {
        tool: "terasim".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.into(),
        seed,
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outputs
            .iter()
            .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned()))
            .collect(),
        config: config_text.into(),
    };
    let p = out_dir.join(format!("{command}.provenance.toml"));
    out.write(&p, prov.to_toml()?.as_bytes())?;
    Ok(p)
}
