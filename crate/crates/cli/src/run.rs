//! Scenario execution: turn a resolved config into scalar results and tables.

use rayon::prelude::*;
use serde_json::{json, Value};

use heliox_core::dft::{
    barrier_height, dipole_element, electron_spectrum, evolve_radial_realtime, relax_bubble, relax_profile,
    solve_bulk_eos, transition_dipole, AbsorbingLayer, DftParams, LevelLabel, RadialGrid, RealtimeOptions,
    RelaxOptions, Spectrum,
};
use heliox_core::lindblad::TimeSeries;
use heliox_core::scenarios::{
    angular_from_ghz, build_driven_bubble, build_jc_cavity, build_two_bubble, build_two_photon, cooperativity,
    default_level_table, dressed_states, oscillation_peaks, quality_factor, rate_from_ghz, CavityParams, CavityRun, LevelTable,
    PulseParams, Scenario, TwoBubbleParams,
};
use heliox_core::units::{HBAR, METER_PER_SECOND, PER_SECOND};

use crate::config::*;
use crate::defaults::DefaultsFile;
use crate::figures::{emit_figure_data, sweep_table, FigureId, FigureSource, SweepRow, Table};
use crate::RunError;

/// Everything a successful run produces, before it is written to disk.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub results: Value,
    pub diagnostics: Value,
    /// (file name, table)
    pub tables: Vec<(String, Table)>,
    /// Whether the calibrated coefficients were used (and are written out).
    pub uses_dft: bool,
}

pub fn execute(config: &ScenarioConfig, defaults: &DefaultsFile) -> Result<Outcome, RunError> {
    match config {
        ScenarioConfig::Eos(c) => eos(c, defaults),
        ScenarioConfig::Bubble(c) => bubble(c, defaults),
        ScenarioConfig::Spectrum(c) => spectrum(c, defaults),
        ScenarioConfig::Drive(c) => drive(c, defaults),
        ScenarioConfig::TwoPhoton(c) => two_photon(c, defaults),
        ScenarioConfig::Cavity(c) => cavity(c),
        ScenarioConfig::Entangle(c) => entangle(c),
        ScenarioConfig::Expand2s(c) => expand2s(c, defaults),
    }
}

fn figure(source: FigureSource<'_>, id: FigureId) -> Result<(String, Table), RunError> {
    let table = emit_figure_data(source, id).map_err(|e| RunError::Validation(e.to_string()))?;
    Ok((id.file_name(), table))
}

fn grid(r_max: f64, n: usize) -> Result<RadialGrid, RunError> {
    RadialGrid::new(r_max, n).map_err(RunError::from)
}

fn json_num(x: f64) -> Value {
    // NaN and infinities have no JSON form
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn eos(c: &EosConfig, defaults: &DefaultsFile) -> Result<Outcome, RunError> {
    let params = defaults.params(c.scattering_length_nm);
    let pressures = c.pressure_sweep_bar.values();
    let rows = pressures
        .par_iter()
        .map(|&p| {
            let bulk = solve_bulk_eos(&params, p)?;
            Ok((p, bulk, barrier_height(&params, &bulk)))
        })
        .collect::<Result<Vec<_>, heliox_core::dft::DftError>>()?;
    let mut table = Table { columns: vec![], rows: vec![] };
    table.columns = ["pressure_bar", "n_bulk_nm3", "mu_eV", "sound_speed_m_s", "U_eV"].map(String::from).to_vec();
    for (p, bulk, u) in &rows {
        table.rows.push(
            [*p, bulk.n, bulk.mu, params.sound_speed(bulk.n) / METER_PER_SECOND, *u]
                .map(crate::figures::Cell::Num)
                .to_vec(),
        );
    }
    let first = rows.first().map(|r| r.2).unwrap_or(f64::NAN);
    let last = rows.last().map(|r| r.2).unwrap_or(f64::NAN);
    let targets = &defaults.targets;
    let sat = params.saturation_density();
    Ok(Outcome {
        results: json!({
            "U_first_eV": first,
            "U_last_eV": last,
            "saturation_density_nm3": sat,
            "spinodal_density_nm3": params.spinodal_density(),
            "f0_eV_nm3": params.f0(),
        }),
        diagnostics: json!({
            "calibration_targets": targets,
            "mu_at_saturation_eV": sat.map(|n| params.chemical_potential(n)),
            "sound_speed_at_saturation_m_s": sat.map(|n| params.sound_speed(n) / METER_PER_SECOND),
        }),
        tables: vec![("eos.csv".into(), table)],
        uses_dft: true,
    })
}

fn relax_options(c: &BubbleConfig) -> RelaxOptions {
    RelaxOptions { tolerance: c.tolerance_eV, max_iterations: c.max_iterations, ..RelaxOptions::default() }
}

fn sweep_row(params: &DftParams, grid: RadialGrid, p: f64, opts: &RelaxOptions) -> Result<SweepRow, RunError> {
    let b = relax_bubble(params, grid, p, LevelLabel::S1, opts)?;
    let s = electron_spectrum(&b, 1, 2);
    let energy = |l| s.get(l).map(|x| x.energy).unwrap_or(f64::NAN);
    let (e1s, e1p, e2s) = (energy(LevelLabel::S1), energy(LevelLabel::P1), energy(LevelLabel::S2));
    let lambda = |de: f64| heliox_core::units::energy_to_wavelength(heliox_core::units::ElectronVolts(de)).map(|l| l.0).unwrap_or(f64::NAN);
    let d = match (s.get(LevelLabel::S1), s.get(LevelLabel::P1)) {
        (Some(a), Some(b)) => transition_dipole(a, b)?.d,
        _ => f64::NAN,
    };
    Ok(SweepRow {
        pressure_bar: p,
        n_bulk_nm3: b.bulk.n,
        mu_eV: b.bulk.mu,
        U_eV: b.barrier,
        R_nm: b.radius.unwrap_or(f64::NAN),
        E_1S_eV: e1s,
        E_1P_eV: e1p,
        E_2S_eV: e2s,
        lambda_1S1P_um: lambda(e1p - e1s),
        lambda_1S2S_2photon_um: 2.0 * lambda(e2s - e1s),
        d_1S1P_enm: d,
    })
}

fn bubble(c: &BubbleConfig, defaults: &DefaultsFile) -> Result<Outcome, RunError> {
    let params = defaults.params(c.scattering_length_nm);
    let grid = grid(c.grid_r_max_nm, c.grid_points)?;
    let opts = relax_options(c);
    if let Some(sweep) = &c.pressure_sweep_bar {
        let rows = sweep
            .values()
            .par_iter()
            .map(|&p| sweep_row(&params, grid, p, &opts))
            .collect::<Result<Vec<_>, _>>()?;
        let monotone = rows.windows(2).all(|w| w[1].R_nm < w[0].R_nm);
        let fig = figure(FigureSource::Sweep(&rows), FigureId::Fig1c)?;
        return Ok(Outcome {
            results: json!({
                "points": rows.len(),
                "R_decreasing_with_pressure": monotone,
                "rows": rows,
            }),
            diagnostics: json!({}),
            tables: vec![("sweep.csv".into(), sweep_table(&rows)), fig],
            uses_dft: true,
        });
    }
    let b = relax_bubble(&params, grid, c.pressure_bar, LevelLabel::S1, &opts)?;
    let mut table = Table { columns: ["r_nm", "n_he_nm3", "phi_1S"].map(String::from).to_vec(), rows: vec![] };
    for (i, r) in grid.radii().iter().enumerate() {
        table.rows.push([*r, b.density[i], b.wavefunction[i]].map(crate::figures::Cell::Num).to_vec());
    }
    Ok(Outcome {
        results: json!({
            "R_nm": b.radius,
            "U_eV": b.barrier,
            "E_1S_eV": b.level_energy,
            "interface_width_nm": b.interface_width(),
            "n_bulk_nm3": b.bulk.n,
            "mu_eV": b.bulk.mu,
        }),
        diagnostics: json!({
            "iterations": b.diagnostics.iterations,
            "rejected_steps": b.diagnostics.rejected_steps,
            "residual_helium_eV": b.diagnostics.residual_helium,
            "residual_electron_eV": b.diagnostics.residual_electron,
            "electron_norm": b.electron_norm(),
            "final_energy_eV": b.diagnostics.energy_history.last(),
        }),
        tables: vec![("profile.csv".into(), table)],
        uses_dft: true,
    })
}

fn levels_json(s: &Spectrum) -> Value {
    Value::Array(
        s.bound()
            .map(|l| json!({"label": l.label.to_string(), "energy_eV": l.energy, "nodes": l.node_count(), "residual": l.residual}))
            .collect(),
    )
}

fn spectrum(c: &SpectrumConfig, defaults: &DefaultsFile) -> Result<Outcome, RunError> {
    let params = defaults.params(c.scattering_length_nm);
    let grid = grid(c.grid_r_max_nm, c.grid_points)?;
    let b = relax_bubble(&params, grid, c.pressure_bar, LevelLabel::S1, &RelaxOptions::default())?;
    let s = electron_spectrum(&b, c.l_max.max(1), c.n_max.max(2));
    let fig_a = figure(FigureSource::Spectrum { profile: &b, spectrum: &s }, FigureId::Fig2a)?;
    let fig_b = figure(FigureSource::Spectrum { profile: &b, spectrum: &s }, FigureId::Fig2b)?;
    let unbound: Vec<String> = s
        .slots
        .iter()
        .filter_map(|slot| match slot {
            heliox_core::dft::LevelSlot::Unbound { label, .. } => Some(label.to_string()),
            _ => None,
        })
        .collect();
    let d = transition_dipole(s.get(LevelLabel::S1).unwrap(), s.get(LevelLabel::P1).unwrap())?;
    Ok(Outcome {
        results: json!({
            "R_nm": b.radius,
            "U_eV": b.barrier,
            "levels": levels_json(&s),
            "unbound": unbound,
            "lambda_1S1P_um": d.wavelength_um,
            "d_1S1P_enm": d.d,
        }),
        diagnostics: json!({"residual_helium_eV": b.diagnostics.residual_helium}),
        tables: vec![fig_a, fig_b],
        uses_dft: true,
    })
}

fn final_populations(table: &LevelTable, ts: &TimeSeries) -> Value {
    let mut m = serde_json::Map::new();
    for label in &table.labels {
        let name = format!("pop_{label}");
        m.insert(name.clone(), json!(ts.last(&name)));
    }
    Value::Object(m)
}

fn engine_diagnostics(ts: &TimeSeries, dt: f64) -> Value {
    json!({
        "steps": ts.steps,
        "dt_fs": dt,
        "max_trace_drift": ts.max_trace_drift,
        "min_eigenvalue": ts.min_eigenvalue,
        "max_hermiticity_error": ts.max_hermiticity_error,
    })
}

fn level_table_json(t: &LevelTable) -> Value {
    let s = t.index("1S");
    let p = t.index("1P");
    json!({
        "labels": t.labels,
        "energies_eV": (0..t.len()).map(|k| t.energy_ev(k)).collect::<Vec<_>>(),
        "d_1S1P_enm": s.zip(p).map(|(s, p)| t.dipole[s][p].abs()),
    })
}

fn pulse_for(w: f64, e: f64, carrier_ev: Option<f64>, dt: Option<f64>, stride: usize) -> PulseParams {
    let mut pulse = PulseParams::new(w, e);
    pulse.carrier = carrier_ev.map(|x| x / HBAR);
    pulse.dt_fs = dt;
    pulse.stride = stride.max(1);
    pulse
}

fn run_scenario(s: &Scenario) -> Result<TimeSeries, RunError> {
    s.run().map_err(RunError::from)
}

fn drive(c: &DriveConfig, defaults: &DefaultsFile) -> Result<Outcome, RunError> {
    let params = defaults.params(c.scattering_length_nm);
    let (w, e) = c.pulse()?;
    let (table, _, _) = default_level_table(&params, grid(c.grid_r_max_nm, c.grid_points)?, c.pressure_bar)?;
    let scenario = build_driven_bubble(&table, &pulse_for(w, e, c.carrier_eV, c.dt_fs, c.stride))?;
    let ts = run_scenario(&scenario)?;
    let envelope = scenario.drives[0].drive;
    let id = match c.panel.as_deref() {
        Some("b") => FigureId::Fig3b,
        Some("c") => FigureId::Fig3c,
        _ => FigureId::Fig3a,
    };
    let (name, t) = figure(FigureSource::Drive { series: &ts, drive: &envelope }, id)?;
    let name = if c.panel.is_some() { name } else { "drive.csv".to_string() };
    Ok(Outcome {
        results: json!({
            "final": final_populations(&table, &ts),
            "leakage": ts.last("leakage"),
            "carrier_eV": envelope.carrier * HBAR,
            "level_table": level_table_json(&table),
        }),
        diagnostics: engine_diagnostics(&ts, scenario.spec.dt),
        tables: vec![(name, t)],
        uses_dft: true,
    })
}

fn two_photon(c: &TwoPhotonConfig, defaults: &DefaultsFile) -> Result<Outcome, RunError> {
    let params = defaults.params(c.scattering_length_nm);
    let (table, _, _) = default_level_table(&params, grid(c.grid_r_max_nm, c.grid_points)?, c.pressure_bar)?;
    let scenario = build_two_photon(&table, &pulse_for(c.W_fs, c.E_VperNm, None, c.dt_fs, c.stride))?;
    let ts = run_scenario(&scenario)?;
    let envelope = scenario.drives[0].drive;
    let fig = figure(FigureSource::Drive { series: &ts, drive: &envelope }, FigureId::Fig6a)?;
    Ok(Outcome {
        results: json!({
            "final": final_populations(&table, &ts),
            "P_2S": ts.last("pop_2S"),
            "carrier_eV": envelope.carrier * HBAR,
            "level_table": level_table_json(&table),
        }),
        diagnostics: engine_diagnostics(&ts, scenario.spec.dt),
        tables: vec![fig],
        uses_dft: true,
    })
}

fn cavity(c: &CavityConfig) -> Result<Outcome, RunError> {
    let omega_eg = c.transition_eV / HBAR;
    let g = angular_from_ghz(c.coupling_GHz);
    let detuning = angular_from_ghz(c.detuning_GHz);
    let cav = CavityParams { omega_c: omega_eg - detuning, g, kappa: rate_from_ghz(c.kappa_GHz), photon_dim: c.photon_dim };
    let run = CavityRun { frame: c.frame, t_end_fs: c.t_end_ps * 1e3, dt_fs: c.dt_fs, samples: c.samples };
    let scenario = build_jc_cavity(&cav, omega_eg, c.gamma_r_per_s * PER_SECOND, &run)?;
    let ts = run_scenario(&scenario)?;
    let fig = figure(FigureSource::Cavity(&ts), FigureId::Fig4c)?;

    let cav_pop = ts.get("pop_photon_in_cavity").unwrap_or(&[]);
    let peaks = oscillation_peaks(&ts.times, cav_pop);
    let period_ps = if peaks.len() >= 2 {
        Some((peaks[peaks.len() - 1].0 - peaks[0].0) / (peaks.len() - 1) as f64 * 1e-3)
    } else {
        None
    };
    let excitations = ts.get("excitations").unwrap_or(&[]);
    let excitation_drift = excitations.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    let dressed = dressed_states(0.0, omega_eg, g, detuning)?;
    let q = quality_factor(cav.omega_c, cav.kappa);
    let coop = if c.kappa_GHz > 0.0 {
        cooperativity(g, cav.kappa, rate_from_ghz(heliox_core::scenarios::prolate::GAMMA_NR_GHZ)).ok()
    } else {
        None
    };
    let e_vac = if c.dipole_enm > 0.0 { Some(HBAR * g / c.dipole_enm) } else { None };
    Ok(Outcome {
        results: json!({
            "period_ps": period_ps,
            "period_expected_ps": if g > 0.0 { Some(std::f64::consts::PI / g * 1e-3) } else { None },
            "peak_values": peaks.iter().map(|p| p.1).collect::<Vec<_>>(),
            "rabi_frequency_GHz": dressed.omega_rabi / (2.0 * std::f64::consts::PI) * 1e6,
            "dressed_splitting_ueV": (dressed.e_plus - dressed.e_minus) * HBAR * 1e6,
            "cooperativity_with_default_gamma_nr": coop,
            "quality_factor": {"angular": json_num(q.angular), "cyclic": json_num(q.cyclic)},
            "single_photon_field_VperNm": e_vac,
        }),
        diagnostics: json!({
            "engine": engine_diagnostics(&ts, scenario.spec.dt),
            "max_excitation_deviation": excitation_drift,
        }),
        tables: vec![fig],
        uses_dft: false,
    })
}

fn entangle(c: &EntangleConfig) -> Result<Outcome, RunError> {
    let (ga, gb) = c.couplings_ghz();
    let omega_eg = c.transition_eV / HBAR;
    let p = TwoBubbleParams {
        omega_eg,
        g_alpha: angular_from_ghz(ga),
        g_beta: angular_from_ghz(gb),
        gamma_r: c.gamma_r_per_s * PER_SECOND,
        gamma_nr: rate_from_ghz(c.gamma_nr_GHz),
        cavity: CavityParams {
            omega_c: omega_eg,
            g: angular_from_ghz(gb),
            kappa: rate_from_ghz(c.kappa_GHz),
            photon_dim: c.photon_dim,
        },
        initial: c.initial,
        weighted_projections: c.weighted_projections,
    };
    let run = CavityRun { frame: c.frame, t_end_fs: c.t_end_ns * 1e6, dt_fs: c.dt_fs, samples: c.samples };
    let scenario = build_two_bubble(&p, &run)?;
    let ts = run_scenario(&scenario)?;
    let id = if ga == gb { FigureId::Fig5a } else { FigureId::Fig5b };
    let fig = figure(FigureSource::Entangle(&ts), id)?;
    let ae = ts.get("pop_AE").unwrap_or(&[]);
    let conc = ts.get("concurrence").unwrap_or(&[]);
    let n = conc.len();
    let tail = &conc[n - (n / 5).max(1)..];
    Ok(Outcome {
        results: json!({
            "pop_AE_min": ae.iter().copied().fold(f64::INFINITY, f64::min),
            "pop_AE_max": ae.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            "concurrence_peak": conc.iter().copied().fold(0.0, f64::max),
            "concurrence_late": tail.iter().sum::<f64>() / tail.len() as f64,
            "concurrence_final": conc.last(),
            "pop_SE_final": ts.last("pop_SE"),
            "pop_AE_final": ts.last("pop_AE"),
        }),
        diagnostics: engine_diagnostics(&ts, scenario.spec.dt),
        tables: vec![fig],
        uses_dft: false,
    })
}

fn expand2s(c: &Expand2sConfig, defaults: &DefaultsFile) -> Result<Outcome, RunError> {
    let params = defaults.params(c.scattering_length_nm);
    let grid = grid(c.grid_r_max_nm, c.grid_points)?;
    let ground = relax_bubble(&params, grid, c.pressure_bar, LevelLabel::S1, &RelaxOptions::default())?;
    let relaxed_2s = relax_profile(&ground, LevelLabel::S2, &RelaxOptions::default())?;
    let layer = (c.layer_width_nm > 0.0).then_some(AbsorbingLayer { width_nm: c.layer_width_nm, rate_per_ps: c.layer_rate_per_ps });
    let opts = RealtimeOptions { t_end_ps: c.t_end_ps, dt_fs: c.dt_fs, absorbing_layer: layer, sample_fs: c.sample_fs, snapshot_ps: None };
    let run = evolve_radial_realtime(&ground, LevelLabel::S2, &opts)?;
    let fig = figure(FigureSource::Expansion(&run), FigureId::Fig6c)?;
    let r_eq = relaxed_2s.radius.unwrap_or(f64::NAN);
    let (k_peak, r_peak) = run
        .radius
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, &r)| if r > acc.1 { (k, r) } else { acc });
    let mean = run.radius.iter().sum::<f64>() / run.radius.len() as f64;
    let atoms_drift = run.atoms.iter().map(|a| (a / run.atoms[0] - 1.0).abs()).fold(0.0, f64::max);
    // dipole of the relaxed 2S bubble for its 2S→1P emission
    let s = electron_spectrum(&relaxed_2s, 1, 2);
    let emission = match (s.get(LevelLabel::S2), s.get(LevelLabel::P1)) {
        (Some(a), Some(b)) => {
            let td = transition_dipole(a, b)?;
            json!({"d_enm": dipole_element(a, b)?.abs(), "lambda_um": td.wavelength_um,
                   "rate_per_s": heliox_core::dft::spontaneous_rate(td.d, td.wavelength_um)})
        }
        _ => Value::Null,
    };
    Ok(Outcome {
        results: json!({
            "R_initial_nm": json_num(run.radius[0]),
            "R_relaxed_2S_nm": json_num(r_eq),
            "R_peak_nm": json_num(r_peak),
            "t_peak_ps": run.times_ps[k_peak],
            "R_mean_nm": json_num(mean),
            "R_final_nm": json_num(*run.radius.last().unwrap()),
            "rise_time_ps": run.rise_time_ps(r_eq, 1.0),
            "rise_time_90_ps": run.rise_time_ps(r_eq, 0.9),
            "emission_2S_1P": emission,
        }),
        diagnostics: json!({
            "max_atom_count_change": atoms_drift,
            "layer": layer,
            "samples": run.times_ps.len(),
        }),
        tables: vec![fig],
        uses_dft: true,
    })
}
