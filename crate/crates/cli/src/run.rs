//! Subcommand implementations. Each returns the CSV text it would print;
//! `main.rs` handles I/O and exit codes.

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;

use homodyne_core::algebra::{ModeId, Sideband, C64};
use homodyne_core::fock::oracle_network;
use homodyne_core::noise::{
    eight_port_noise, mc_counts, signal_referred, t_theta_noise, ResponseModel,
};
use homodyne_core::schemes::{
    check_quadrature_accessibility, observable_s, recover_b, two_photon_assignment,
    HomodyneConfig,
};
use homodyne_core::states::StateAssignment;

use crate::config::{parse_complex, ConfigFile};

/// 17 significant digits, per the CSV contract.
fn f17(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct SweepRange {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl SweepRange {
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.steps == 0 {
            bail!("sweep needs at least one step");
        }
        if self.min > self.max {
            bail!("sweep range has min > max");
        }
        Ok((0..self.steps)
            .map(|k| {
                if self.steps == 1 {
                    self.min
                } else {
                    self.min + (self.max - self.min) * k as f64 / (self.steps - 1) as f64
                }
            })
            .collect())
    }
}

fn local_oscillator(cfg: &ConfigFile) -> Result<C64> {
    let gamma = cfg.states.mean_amplitude(&ModeId::single("l_i"));
    if gamma.norm() == 0.0 {
        bail!("local oscillator l_i has zero amplitude; declare `source l_i coherent RE IM`");
    }
    Ok(gamma)
}

fn gamma_magnitude(cfg: &ConfigFile, flag: Option<f64>) -> Result<f64> {
    if let Some(mag) = flag {
        if mag <= 0.0 {
            bail!("gamma magnitude must be positive");
        }
        return Ok(mag);
    }
    let from_config = cfg.states.mean_amplitude(&ModeId::single("l_i")).norm();
    if from_config > 0.0 {
        Ok(from_config)
    } else {
        bail!("no local oscillator magnitude: pass --gamma-mag or declare `source l_i coherent`")
    }
}

fn sideband_signal(cfg: &ConfigFile, config: &HomodyneConfig) -> StateAssignment {
    two_photon_assignment(
        cfg.states.state(&ModeId::at("b", Sideband::Plus)),
        cfg.states.state(&ModeId::at("b", Sideband::Minus)),
        config,
    )
}

/// `(csv, ok)`; callers turn `ok = false` into a nonzero exit code.
pub fn cmd_validate(cfg: &ConfigFile) -> (String, bool) {
    let violations = cfg.network.validate();
    let mut out = String::from("status,detail\n");
    if violations.is_empty() {
        out.push_str("ok,\n");
        (out, true)
    } else {
        for v in &violations {
            out.push_str(&format!("violation,{v}\n"));
        }
        (out, false)
    }
}

pub fn cmd_analyze(cfg: &ConfigFile) -> Result<String> {
    let obs = observable_s(&cfg.network)?;
    let v = obs.expectation(&cfg.states)?;
    Ok(format!("s_re,s_im\n{},{}\n", f17(v.re), f17(v.im)))
}

pub fn cmd_eight_port(cfg: &ConfigFile) -> Result<String> {
    let gamma = local_oscillator(cfg)?;
    let (t_plus, t_minus) = recover_b(&cfg.network, gamma)?;
    let vp = t_plus.expectation(&cfg.states)?;
    let vm = t_minus.expectation(&cfg.states)?;
    Ok(format!(
        "t_plus_re,t_plus_im,t_minus_re,t_minus_im\n{},{},{},{}\n",
        f17(vp.re),
        f17(vp.im),
        f17(vm.re),
        f17(vm.im)
    ))
}

pub fn cmd_noise(cfg: &ConfigFile) -> Result<String> {
    let gamma = local_oscillator(cfg)?;
    let r = eight_port_noise(&cfg.network, gamma, &cfg.states, 0.0)?;
    Ok(format!(
        "total,intrinsic,photon_penalty,vacuum_floor\n{},{},{},{}\n",
        f17(r.total),
        f17(r.intrinsic),
        f17(r.photon_penalty),
        f17(r.vacuum_floor)
    ))
}

pub fn cmd_sweep_theta(
    cfg: &ConfigFile,
    range: &SweepRange,
    gamma_mag: Option<f64>,
) -> Result<String> {
    let mag = gamma_magnitude(cfg, gamma_mag)?;
    let rows: Vec<String> = range
        .points()?
        .into_par_iter()
        .map(|theta| -> Result<String> {
            let config = HomodyneConfig::phase_matched(mag, theta)?;
            let s = sideband_signal(cfg, &config);
            let r = t_theta_noise(&cfg.network, &config, &s, 0.0)?;
            Ok(format!(
                "{},{},{},{},{}",
                f17(theta),
                f17(r.total),
                f17(r.intrinsic),
                f17(r.photon_penalty),
                f17(r.vacuum_floor)
            ))
        })
        .collect::<Result<_>>()?;
    Ok(format!(
        "theta,total,intrinsic,photon_penalty,vacuum_floor\n{}\n",
        rows.join("\n")
    ))
}

pub fn cmd_sweep_omega(
    cfg: &ConfigFile,
    range: &SweepRange,
    theta: f64,
    gamma_mag: Option<f64>,
) -> Result<String> {
    let mag = gamma_magnitude(cfg, gamma_mag)?;
    let config = HomodyneConfig::phase_matched(mag, theta)?;
    let s = sideband_signal(cfg, &config);
    let rows: Vec<String> = range
        .points()?
        .into_par_iter()
        .map(|omega| -> Result<String> {
            let r = t_theta_noise(&cfg.network, &config, &s, omega)?;
            Ok(format!(
                "{},{},{},{},{}",
                f17(omega),
                f17(r.total),
                f17(r.intrinsic),
                f17(r.photon_penalty),
                f17(r.vacuum_floor)
            ))
        })
        .collect::<Result<_>>()?;
    Ok(format!(
        "omega,total,intrinsic,photon_penalty,vacuum_floor\n{}\n",
        rows.join("\n")
    ))
}

/// Response table rows: `omega, Re R, Im R, S_hn` (an optional header line
/// is skipped).
fn parse_response_table(text: &str) -> Result<Vec<(f64, C64, f64)>> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            bail!("response file line {}: expected 4 comma-separated fields", idx + 1);
        }
        let parsed: Option<Vec<f64>> = fields.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) => rows.push((v[0], C64::new(v[1], v[2]), v[3])),
            None if idx == 0 => continue, // header
            None => bail!("response file line {}: malformed number", idx + 1),
        }
    }
    if rows.is_empty() {
        bail!("response file contains no data rows");
    }
    Ok(rows)
}

pub fn cmd_refer(
    cfg: &ConfigFile,
    response_text: &str,
    theta: f64,
    gamma_mag: Option<f64>,
) -> Result<String> {
    let mag = gamma_magnitude(cfg, gamma_mag)?;
    let config = HomodyneConfig::phase_matched(mag, theta)?;
    let s = sideband_signal(cfg, &config);
    let table = parse_response_table(response_text)?;
    let rows: Vec<String> = table
        .into_par_iter()
        .map(|(omega, response, s_hn)| -> Result<String> {
            let noise = t_theta_noise(&cfg.network, &config, &s, omega)?;
            let model = ResponseModel::new(move |_| response, move |_| s_hn);
            let referred = signal_referred(&noise, &model, omega)?;
            Ok(format!(
                "{},{},{},{},{}",
                f17(omega),
                f17(response.norm()),
                f17(s_hn),
                f17(noise.total),
                f17(referred)
            ))
        })
        .collect::<Result<_>>()?;
    Ok(format!(
        "omega,response_mag,s_hn,noise_total,referred\n{}\n",
        rows.join("\n")
    ))
}

pub fn cmd_nogo(gamma_plus: &str, gamma_minus: &str) -> Result<String> {
    let gp = parse_complex(gamma_plus)
        .ok_or_else(|| anyhow!("malformed complex literal {gamma_plus:?}"))?;
    let gm = parse_complex(gamma_minus)
        .ok_or_else(|| anyhow!("malformed complex literal {gamma_minus:?}"))?;
    let d = check_quadrature_accessibility(gp, gm)?;
    let verdict = if d.accessible { "accessible" } else { "inaccessible" };
    Ok(format!(
        "verdict,det_re,det_im\n{verdict},{},{}\n",
        f17(d.determinant.re),
        f17(d.determinant.im)
    ))
}

pub fn cmd_mc(cfg: &ConfigFile, shots: u64, seed: u64) -> Result<String> {
    let r = mc_counts(&cfg.network, &cfg.states, shots, seed)?;
    let mut out = String::from("name,mean,variance,expected\n");
    for (name, stats) in &r.detectors {
        out.push_str(&format!(
            "{name},{},{},{}\n",
            f17(stats.mean),
            f17(stats.variance),
            f17(stats.expected)
        ));
    }
    // balanced-homodyne networks also get the post-processed estimate
    if let Ok(obs) = observable_s(&cfg.network) {
        let est = r.estimate(&obs);
        let se = r.standard_error(&obs);
        let exact = obs.expectation(&cfg.states)?;
        out.push_str(&format!(
            "s_estimate,{},{},{}\n",
            f17(est.re),
            f17(se),
            f17(exact.re)
        ));
    }
    Ok(out)
}

pub fn cmd_oracle(cfg: &ConfigFile, cutoff: usize) -> Result<String> {
    let means = oracle_network(&cfg.network, &cfg.states, cutoff)
        .context("truncated-Fock evaluation failed")?;
    let mut out = String::from("detector,mean_photons\n");
    for (name, mean) in &means {
        out.push_str(&format!("{name},{}\n", f17(*mean)));
    }
    Ok(out)
}
