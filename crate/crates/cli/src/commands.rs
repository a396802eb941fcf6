//! One function per subcommand; each returns an in-memory bundle.

use serde_json::json;

use fds_core::experiments::{
    calibrate_noise, calibration_grid, run_dd_experiment, run_qfi_scaling, run_rabi_scan, run_robustness_sweep,
    uniform_grid, Calibration, DecayFit, ErrorAxis, NoiseModel, Preset, RobustnessSweep, Scenario, SimulationConfig,
};
use fds_core::hamiltonian::{build_fds_prime, effective_hamiltonian, quasi_energy_shift, ControlErrorParams};
use fds_core::measurement::{MonteCarloConfig, Readout};
use fds_core::metrology::{optimal_sensing_time, sensitivity};
use fds_core::propagator::{micromotion_error, PropagatorOptions};
use fds_core::rng::derive_seed;
use fds_core::units::{angular_to_mhz, mhz_to_angular};
use fds_core::Result;

use crate::config::{Command, Loaded, RunConfig};
use crate::output::{col, text, Cell, ResultBundle, Table};

const NOISE_STREAM: u64 = 1;
const READOUT_STREAM: u64 = 2;
const PIPELINE_STREAM: u64 = 3;

struct Seeds {
    noise: u64,
    readout: u64,
    pipeline: u64,
}

fn seeds(cfg: &RunConfig, bundle: &mut ResultBundle, roles: &[&str]) -> Seeds {
    let s = Seeds {
        noise: derive_seed(cfg.seed, &[NOISE_STREAM]),
        readout: derive_seed(cfg.seed, &[READOUT_STREAM]),
        pipeline: derive_seed(cfg.seed, &[PIPELINE_STREAM]),
    };
    bundle.seed("master", cfg.seed);
    for role in roles {
        match *role {
            "noise" => bundle.seed("noise", s.noise),
            "readout" => bundle.seed("readout", s.readout),
            "pipeline" => bundle.seed("pipeline", s.pipeline),
            _ => unreachable!("unknown seed role"),
        }
    }
    s
}

/// Presets named by the scenario, or the full figure series.
fn presets(cfg: &RunConfig) -> Vec<Preset> {
    match &cfg.scenario {
        Some(name) => vec![name.parse().expect("validated scenario")],
        None => Preset::STANDARD.to_vec(),
    }
}

fn mhz(omega: f64) -> f64 {
    angular_to_mhz(omega)
}

pub fn run(command: Command, loaded: &Loaded) -> Result<ResultBundle> {
    match command {
        Command::Rabi => cmd_rabi(loaded),
        Command::Qfi => cmd_qfi(loaded),
        Command::Effective => cmd_effective(loaded),
        Command::Robustness => cmd_robustness(loaded),
        Command::Sensitivity => cmd_sensitivity(loaded),
        Command::Dd => cmd_dd(loaded),
        Command::Calibrate => cmd_calibrate(loaded),
    }
}

fn noise_template(cfg: &RunConfig, seed: u64) -> Result<NoiseModel> {
    let n = &cfg.noise;
    NoiseModel::new(n.kind, mhz_to_angular(n.sigma_z_mhz.unwrap_or(0.0)), n.tau_c_us, seed)
}

fn noisy_config(cfg: &RunConfig, seeds: &Seeds) -> Result<SimulationConfig> {
    Ok(SimulationConfig {
        dynamics: cfg.dd.dynamics,
        realizations: cfg.noise.realizations,
        shots: cfg.shots,
        seed: seeds.readout,
        noise_dt: cfg.noise.dt_us,
        readout: cfg.readout()?,
        propagator: PropagatorOptions::default(),
    })
}

pub fn cmd_rabi(loaded: &Loaded) -> Result<ResultBundle> {
    let cfg = &loaded.config;
    let mut b = ResultBundle::new("rabi");
    let seeds = seeds(cfg, &mut b, if cfg.rabi.with_noise { &["noise", "readout"] } else { &["readout"] });
    let sensor = loaded.sensor()?;
    let grid = cfg
        .rabi
        .times_us
        .clone()
        .unwrap_or_else(|| uniform_grid(cfg.rabi.t_max_us, cfg.rabi.t_step_us));
    let noise = if cfg.rabi.with_noise { noise_template(cfg, seeds.noise)? } else { NoiseModel::none() };
    let sim = SimulationConfig {
        dynamics: cfg.rabi.dynamics,
        ..noisy_config(cfg, &seeds)?
    };
    let mut contrasts = serde_json::Map::new();
    for preset in presets(cfg) {
        let s = cfg.scenario(preset, sensor);
        let rows = run_rabi_scan(&s, &grid, &noise, &sim)?;
        let mut t = Table::new(
            format!("rabi-{preset}"),
            vec![text("series"), col("t", "us"), col("p0", "1"), col("p0_stderr", "1")],
        );
        for r in &rows {
            t.push(vec![preset.name().into(), r.t.into(), r.p0.into(), r.stderr.into()]);
        }
        let contrast = 1.0 - rows.iter().map(|r| r.p0).fold(f64::INFINITY, f64::min);
        contrasts.insert(preset.name(), json!(contrast));
        b.say(format!("{preset}: {} points, contrast {contrast:.4}", rows.len()));
        b.tables.push(t);
    }
    b.result("contrast", contrasts.into());
    Ok(b)
}

pub fn cmd_qfi(loaded: &Loaded) -> Result<ResultBundle> {
    let cfg = &loaded.config;
    let mut b = ResultBundle::new("qfi");
    let seeds = seeds(cfg, &mut b, if cfg.shots.is_some() { &["pipeline"] } else { &[] });
    let sensor = loaded.sensor()?;
    let readout = match cfg.shots {
        Some(shots) => Readout::Poisson(MonteCarloConfig::new(shots, cfg.repeats, seeds.pipeline)?),
        None => Readout::Noiseless,
    };
    let sim = SimulationConfig {
        readout: cfg.readout()?,
        ..Default::default()
    };
    let mut summary = serde_json::Map::new();
    for preset in presets(cfg) {
        let s = cfg.scenario(preset, sensor);
        let rows = run_qfi_scaling(&s, &cfg.qfi.times_us, cfg.qfi.grid_half_width, cfg.qfi.grid_points, readout, &sim)?;
        let mut t = Table::new(
            format!("qfi-{preset}"),
            vec![
                text("series"),
                col("t", "us"),
                col("qfi", "us^2"),
                col("qfi_stderr", "us^2"),
                col("qfi_exact", "us^2"),
                col("ratio", "1"),
                col("exact_ratio", "1"),
                text("failure"),
            ],
        );
        for r in &rows {
            t.push(vec![
                preset.name().into(),
                r.t.into(),
                r.qfi.into(),
                r.stderr.into(),
                r.exact.into(),
                r.ratio.into(),
                r.exact_ratio.into(),
                r.failure.clone().map_or(Cell::Empty, Cell::Text),
            ]);
        }
        let ratios: Vec<f64> = rows.iter().filter_map(|r| r.exact_ratio).collect();
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        summary.insert(preset.name(), json!({ "exact_ratio_min": min, "exact_ratio_max": max }));
        b.say(format!("{preset}: exact QFI/t² in [{min:.4}, {max:.4}]"));
        b.tables.push(t);
    }
    b.result("qfi", summary.into());
    b.result("readout", json!(if cfg.shots.is_some() { "poisson" } else { "noiseless" }));
    Ok(b)
}

pub fn cmd_effective(loaded: &Loaded) -> Result<ResultBundle> {
    let cfg = &loaded.config;
    let mut b = ResultBundle::new("effective");
    seeds(cfg, &mut b, &[]);
    let sensor = loaded.sensor()?;
    let harmonics: Vec<u32> = match &cfg.scenario {
        Some(name) => vec![name.parse::<Preset>().expect("validated").harmonics().expect("fds preset")],
        None => cfg.effective.harmonics.clone(),
    };
    let opts = PropagatorOptions::default();
    let mut shift = Table::new(
        "effective",
        vec![
            text("series"),
            col("harmonics", "1"),
            col("delta_f", "MHz"),
            col("residual_detuning", "MHz"),
            col("omega_effective", "MHz"),
            col("detuning_effective", "MHz"),
            col("omega_floquet", "MHz"),
            col("detuning_floquet", "MHz"),
            col("validity_ratio", "1"),
            col("validity_required", "1"),
            text("validity_ok"),
        ],
    );
    let mut micro = Table::new(
        "micromotion",
        vec![
            text("series"),
            col("harmonics", "1"),
            col("frequency_multiplier", "1"),
            col("drive_frequency", "MHz"),
            col("t", "us"),
            col("factorization_error", "1"),
        ],
    );
    let mut results = serde_json::Map::new();
    for k in harmonics {
        let s = cfg.scenario(Preset::Fds(k), sensor);
        let drive = cfg.drive(k);
        let signal = s.signal(s.omega_s)?;
        let delta_f = quasi_energy_shift(&drive);
        let residual = s.detuning - delta_f;
        let analytic = s.effective_bloch(s.omega_s)?;
        let floquet = s.floquet_bloch(s.omega_s, &opts)?;
        let validity = drive.validity(s.omega_s, s.detuning);
        let name = format!("fds-k{k}");
        shift.push(vec![
            name.clone().into(),
            k.into(),
            mhz(delta_f).into(),
            mhz(residual).into(),
            mhz(2.0 * analytic[0]).into(),
            mhz(2.0 * analytic[2]).into(),
            mhz(2.0 * floquet[0]).into(),
            mhz(2.0 * floquet[2]).into(),
            validity.ratio.into(),
            validity.required.into(),
            validity.satisfied.into(),
        ]);
        // Fixed window of one base period, so only ω_F changes.
        let window = drive.period();
        for &m in &cfg.effective.frequency_multipliers {
            let d = fds_core::hamiltonian::FloquetDriveParams {
                frequency: m * drive.frequency,
                ..drive
            };
            let spec = build_fds_prime(&sensor, &signal, &d, &ControlErrorParams::default())?;
            let eff = effective_hamiltonian(&sensor, &signal, &d);
            let e = micromotion_error(&spec, &d, &eff, window, &opts)?;
            micro.push(vec![name.clone().into(), k.into(), m.into(), mhz(d.frequency).into(), window.into(), e.into()]);
        }
        results.insert(
            name.clone(),
            json!({
                "delta_f_mhz": mhz(delta_f),
                "residual_detuning_mhz": mhz(residual),
                "detuning_mhz": mhz(s.detuning),
                "omega_floquet_mhz": mhz(2.0 * floquet[0]),
                "detuning_floquet_mhz": mhz(2.0 * floquet[2]),
                "validity": { "ratio": validity.ratio, "required": validity.required, "satisfied": validity.satisfied },
            }),
        );
        b.say(format!(
            "{name}: Δ_F/2π = {:.6} MHz, residual detuning {:.3e} MHz, ω_F/max(Ω_F, Ω_s, |Δ|) = {:.2} ({})",
            mhz(delta_f),
            mhz(residual),
            validity.ratio,
            if validity.satisfied { "valid" } else { "outside validity" }
        ));
    }
    b.result("effective", results.into());
    b.tables.push(shift);
    b.tables.push(micro);
    Ok(b)
}

fn error_grid(min: f64, max: f64, step: f64) -> Vec<f64> {
    let n = ((max - min) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| min + i as f64 * step).collect()
}

fn sweep_summary(s: &RobustnessSweep) -> serde_json::Value {
    let best = s.rows.iter().max_by(|a, b| a.qfi_fds.total_cmp(&b.qfi_fds)).expect("nonempty sweep");
    let zero = s.rows.iter().min_by(|a, b| a.error.abs().total_cmp(&b.error.abs())).expect("nonempty sweep");
    json!({
        "t_us": s.t,
        "interval_mhz": s.interval.map(|i| json!({
            "lower": mhz(i.lower), "upper": mhz(i.upper),
            "lower_open": i.lower_open, "upper_open": i.upper_open,
        })),
        "qfi_ods_us2": zero.qfi_ods,
        "qfi_fds_at_zero_us2": zero.qfi_fds,
        "qfi_fds_max_us2": best.qfi_fds,
        "argmax_error_mhz": mhz(best.error),
    })
}

pub fn cmd_robustness(loaded: &Loaded) -> Result<ResultBundle> {
    let cfg = &loaded.config;
    let r = &cfg.robustness;
    let mut b = ResultBundle::new("robustness");
    seeds(cfg, &mut b, &[]);
    let base = cfg.scenario(Preset::Fds(cfg.drive.harmonics), loaded.sensor()?);
    let axes: Vec<ErrorAxis> = match cfg.scenario.as_deref() {
        Some("robustness-amp") => vec![ErrorAxis::Amplitude],
        Some("robustness-freq") => vec![ErrorAxis::Frequency],
        _ => vec![ErrorAxis::Amplitude, ErrorAxis::Frequency],
    };
    let mut results = serde_json::Map::new();
    for axis in axes {
        let grid_mhz = match axis {
            ErrorAxis::Amplitude => error_grid(r.amplitude_min_mhz, r.amplitude_max_mhz, r.amplitude_step_mhz),
            ErrorAxis::Frequency => error_grid(r.frequency_min_mhz, r.frequency_max_mhz, r.frequency_step_mhz),
        };
        let grid: Vec<f64> = grid_mhz.iter().map(|&e| mhz_to_angular(e)).collect();
        let sweep = run_robustness_sweep(&base, axis, &grid, r.t_us, &PropagatorOptions::default())?;
        let mut t = Table::new(
            format!("robustness-{}", axis.name()),
            vec![text("series"), col("error", "MHz"), col("qfi_fds", "us^2"), col("qfi_ods", "us^2"), text("advantage")],
        );
        for (row, e) in sweep.rows.iter().zip(&grid_mhz) {
            t.push(vec![
                axis.name().into(),
                (*e).into(),
                row.qfi_fds.into(),
                row.qfi_ods.into(),
                (row.qfi_fds > row.qfi_ods).into(),
            ]);
        }
        let line = match sweep.interval {
            Some(i) => format!(
                "{}: advantage for error/2π in [{}{:.3}, {:.3}{}] MHz",
                axis.name(),
                if i.lower_open { "≤" } else { "" },
                mhz(i.lower),
                mhz(i.upper),
                if i.upper_open { "+" } else { "" }
            ),
            None => format!("{}: no advantage around zero error", axis.name()),
        };
        b.say(line);
        results.insert(axis.name().into(), sweep_summary(&sweep));
        b.tables.push(t);
    }
    b.result("robustness", results.into());
    Ok(b)
}

pub fn cmd_sensitivity(loaded: &Loaded) -> Result<ResultBundle> {
    let cfg = &loaded.config;
    let s = &cfg.sensitivity;
    let mut b = ResultBundle::new("sensitivity");
    seeds(cfg, &mut b, &[]);
    let mut curves = Table::new("sensitivity", vec![text("series"), col("t", "us"), col("eta", "nT/sqrt(Hz)")]);
    let mut optimum = Table::new(
        "sensitivity-optimum",
        vec![
            text("series"),
            col("t2", "us"),
            col("t_opt", "us"),
            col("eta_opt", "nT/sqrt(Hz)"),
            col("eta_at_t2", "nT/sqrt(Hz)"),
        ],
    );
    let mut results = Vec::new();
    for &t2 in &s.t2_us {
        let p = cfg.sensitivity_params(t2)?;
        let series = format!("t2={t2}us");
        let t0 = 0.1 * cfg.readout.t_det_us;
        let t1 = s.t_max_factor * t2;
        for i in 0..s.points {
            let t = t0 + (t1 - t0) * i as f64 / (s.points - 1) as f64;
            curves.push(vec![series.clone().into(), t.into(), sensitivity(&p, t).into()]);
        }
        let o = optimal_sensing_time(&p);
        optimum.push(vec![series.into(), t2.into(), o.t_opt.into(), o.eta_opt.into(), o.eta_at_t2.into()]);
        results.push(json!({ "t2_us": t2, "t_opt_us": o.t_opt, "eta_opt": o.eta_opt, "eta_at_t2": o.eta_at_t2 }));
        b.say(format!(
            "T₂ = {t2} µs: η(T₂) = {:.1} nT·Hz^-1/2, optimum η = {:.1} at t = {:.2} µs",
            o.eta_at_t2, o.eta_opt, o.t_opt
        ));
    }
    b.result("sensitivity", json!(results));
    b.result("units", json!({ "eta": "nT/sqrt(Hz)", "gamma_e_hz_per_nt": cfg.sensor.gamma_e_mhz_per_g * 10.0 }));
    b.tables.push(curves);
    b.tables.push(optimum);
    Ok(b)
}

fn fit_json(f: &DecayFit) -> serde_json::Value {
    json!({
        "t2_us": f.t2,
        "t2_lower_bound": f.t2_lower_bound,
        "amplitude": f.amplitude,
        "frequency_mhz": mhz(f.frequency),
        "phase_rad": f.phase,
        "offset": f.offset,
        "residual_rms": f.residual,
        "iterations": f.iterations,
    })
}

fn scan_table(name: &str, rows: &[fds_core::experiments::ScanRow]) -> Table {
    let mut t = Table::new(name, vec![text("series"), col("t", "us"), col("p0", "1"), col("p0_stderr", "1")]);
    for r in rows {
        t.push(vec![name.into(), r.t.into(), r.p0.into(), r.stderr.into()]);
    }
    t
}

fn calibrate(cfg: &RunConfig, scenario: &Scenario, seeds: &Seeds) -> Result<Calibration> {
    let template = noise_template(cfg, seeds.noise)?;
    // Calibrated on exact populations: readout noise would make σ_z random.
    let sim = SimulationConfig {
        shots: None,
        ..noisy_config(cfg, seeds)?
    };
    calibrate_noise(scenario, cfg.noise.target_t2_us, &template, &sim, cfg.noise.grid_step_us)
}

fn calibration_json(c: &Calibration) -> serde_json::Value {
    json!({
        "sigma_z_mhz": mhz(c.noise.sigma_z),
        "sigma_z_rad_per_us": c.noise.sigma_z,
        "evaluations": c.evaluations,
        "fit": fit_json(&c.fit),
    })
}

pub fn cmd_calibrate(loaded: &Loaded) -> Result<ResultBundle> {
    let cfg = &loaded.config;
    let mut b = ResultBundle::new("calibrate");
    let seeds = seeds(cfg, &mut b, &["noise", "readout"]);
    let scenario = cfg.scenario(Preset::Fds(cfg.drive.harmonics), loaded.sensor()?);
    let cal = calibrate(cfg, &scenario, &seeds)?;
    let grid = calibration_grid(cfg.noise.target_t2_us, cfg.noise.grid_step_us);
    let run = run_dd_experiment(&scenario, None, &cal.noise, &grid, &noisy_config(cfg, &seeds)?)?;
    b.say(format!(
        "σ_z/2π = {:.6} MHz gives T₂ = {:.2} µs (target {} µs, {} evaluations)",
        mhz(cal.noise.sigma_z),
        cal.fit.t2,
        cfg.noise.target_t2_us,
        cal.evaluations
    ));
    b.result("target_t2_us", json!(cfg.noise.target_t2_us));
    b.result("calibration", calibration_json(&cal));
    b.tables.push(scan_table("calibrate", &run.rows));
    Ok(b)
}

pub fn cmd_dd(loaded: &Loaded) -> Result<ResultBundle> {
    let cfg = &loaded.config;
    let mut b = ResultBundle::new("dd");
    let seeds = seeds(cfg, &mut b, &["noise", "readout"]);
    let scenario = cfg.scenario(Preset::Fds(cfg.drive.harmonics), loaded.sensor()?);
    let noise = match cfg.noise.sigma_z_mhz {
        Some(_) => noise_template(cfg, seeds.noise)?,
        None => {
            let cal = calibrate(cfg, &scenario, &seeds)?;
            b.result("calibration", calibration_json(&cal));
            cal.noise
        }
    };
    b.result("sigma_z_mhz", json!(mhz(noise.sigma_z)));
    let sim = noisy_config(cfg, &seeds)?;
    let dd = cfg.dd_config()?;
    let runs: Vec<(&str, bool, f64)> = match cfg.scenario.as_deref() {
        Some("dd-off") => vec![("dd-off", false, cfg.dd.t_max_off_us)],
        Some("dd-on") => vec![("dd-on", true, cfg.dd.t_max_on_us)],
        _ => vec![("dd-off", false, cfg.dd.t_max_off_us), ("dd-on", true, cfg.dd.t_max_on_us)],
    };
    let mut fits = serde_json::Map::new();
    let mut t2 = Vec::new();
    for (name, pulses, span) in runs {
        let grid = uniform_grid(span, cfg.noise.grid_step_us);
        let r = run_dd_experiment(&scenario, pulses.then_some(&dd), &noise, &grid, &sim)?;
        b.say(format!(
            "{name}: T₂ {} {:.2} µs",
            if r.fit.t2_lower_bound { "≥" } else { "=" },
            r.fit.t2
        ));
        fits.insert(name.into(), fit_json(&r.fit));
        t2.push(r.fit.t2);
        b.tables.push(scan_table(name, &r.rows));
    }
    b.result("fits", fits.into());
    if t2.len() == 2 {
        b.result("extension", json!(t2[1] / t2[0]));
        b.say(format!("extension factor {:.2}", t2[1] / t2[0]));
    }
    b.result("tau_us", json!(cfg.sequence.tau_us));
    Ok(b)
}
