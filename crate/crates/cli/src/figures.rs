//! Figure-ready tables with a fixed column order per figure id.

#![allow(non_snake_case)]

use std::path::Path;

use heliox_core::dft::{dipole_element, BubbleProfile, LevelLabel, RealtimeRun, Spectrum};
use heliox_core::lindblad::{DriveEnvelope, TimeSeries};
use heliox_core::units::{energy_to_wavelength, ElectronVolts};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig1c,
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
    Fig3c,
    Fig4c,
    Fig5a,
    Fig5b,
    Fig6a,
    Fig6c,
}

impl FigureId {
    pub const ALL: [FigureId; 11] = [
        Self::Fig1c,
        Self::Fig2a,
        Self::Fig2b,
        Self::Fig3a,
        Self::Fig3b,
        Self::Fig3c,
        Self::Fig4c,
        Self::Fig5a,
        Self::Fig5b,
        Self::Fig6a,
        Self::Fig6c,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Fig1c => "fig1c",
            Self::Fig2a => "fig2a",
            Self::Fig2b => "fig2b",
            Self::Fig3a => "fig3a",
            Self::Fig3b => "fig3b",
            Self::Fig3c => "fig3c",
            Self::Fig4c => "fig4c",
            Self::Fig5a => "fig5a",
            Self::Fig5b => "fig5b",
            Self::Fig6a => "fig6a",
            Self::Fig6c => "fig6c",
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.as_str())
    }

    /// Header of the table this figure produces.
    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Self::Fig1c => &["pressure_bar", "R_nm", "U_eV"],
            Self::Fig2a => &["r_nm", "n_he_nm3", "V_eV", "phi_1S", "phi_1P", "phi_2S"],
            Self::Fig2b => &["transition", "photons", "delta_E_eV", "lambda_um", "d_enm"],
            Self::Fig3a | Self::Fig3b | Self::Fig3c => &["t_fs", "field_VperNm", "pop_1S", "pop_1P", "leakage"],
            Self::Fig4c => &["t_ps", "pop_photon_in_cavity", "pop_photon_in_bubble"],
            Self::Fig5a | Self::Fig5b => &["t_ns", "pop_SE", "pop_AE", "concurrence"],
            Self::Fig6a => &["t_fs", "field_VperNm", "pop_1S", "pop_1P", "pop_2S"],
            Self::Fig6c => &["t_ps", "R_nm", "E_2S_eV"],
        }
    }
}

/// One pressure point of a bubble sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub pressure_bar: f64,
    pub n_bulk_nm3: f64,
    pub mu_eV: f64,
    pub U_eV: f64,
    pub R_nm: f64,
    pub E_1S_eV: f64,
    pub E_1P_eV: f64,
    pub E_2S_eV: f64,
    pub lambda_1S1P_um: f64,
    pub lambda_1S2S_2photon_um: f64,
    pub d_1S1P_enm: f64,
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "pressure_bar",
    "n_bulk_nm3",
    "mu_eV",
    "U_eV",
    "R_nm",
    "E_1S_eV",
    "E_1P_eV",
    "E_2S_eV",
    "lambda_1S1P_um",
    "lambda_1S2S_2photon_um",
    "d_1S1P_enm",
];

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // Debug formatting is the shortest string that round-trips
            Cell::Num(x) => format!("{x:?}"),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    fn push_nums(&mut self, row: impl IntoIterator<Item = f64>) {
        self.rows.push(row.into_iter().map(Cell::Num).collect());
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Result types that figures are drawn from.
#[derive(Clone, Copy)]
pub enum FigureSource<'a> {
    Sweep(&'a [SweepRow]),
    Spectrum { profile: &'a BubbleProfile, spectrum: &'a Spectrum },
    Drive { series: &'a TimeSeries, drive: &'a DriveEnvelope },
    Cavity(&'a TimeSeries),
    Entangle(&'a TimeSeries),
    Expansion(&'a RealtimeRun),
}

impl FigureSource<'_> {
    fn kind(&self) -> &'static str {
        match self {
            Self::Sweep(_) => "pressure sweep",
            Self::Spectrum { .. } => "spectrum",
            Self::Drive { .. } => "driven time series",
            Self::Cavity(_) => "cavity time series",
            Self::Entangle(_) => "two-bubble time series",
            Self::Expansion(_) => "real-time expansion",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FigureError {
    #[error("{figure} cannot be drawn from a {source_kind}")]
    Mismatch { figure: &'static str, source_kind: &'static str },
    #[error("{figure} needs `{what}`, which the result does not contain")]
    Missing { figure: &'static str, what: String },
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(&SWEEP_COLUMNS);
    for r in rows {
        t.push_nums([
            r.pressure_bar,
            r.n_bulk_nm3,
            r.mu_eV,
            r.U_eV,
            r.R_nm,
            r.E_1S_eV,
            r.E_1P_eV,
            r.E_2S_eV,
            r.lambda_1S1P_um,
            r.lambda_1S2S_2photon_um,
            r.d_1S1P_enm,
        ]);
    }
    t
}

fn column<'a>(ts: &'a TimeSeries, figure: FigureId, name: &str) -> Result<&'a [f64], FigureError> {
    ts.get(name).ok_or_else(|| FigureError::Missing { figure: figure.as_str(), what: name.to_string() })
}

fn wavelength_um(delta_e: f64) -> f64 {
    energy_to_wavelength(ElectronVolts(delta_e)).map(|l| l.0).unwrap_or(f64::NAN)
}

/// Build the table for `figure` from `source`.
pub fn emit_figure_data(source: FigureSource<'_>, figure: FigureId) -> Result<Table, FigureError> {
    let mut t = Table::new(figure.columns());
    let mismatch = || FigureError::Mismatch { figure: figure.as_str(), source_kind: source.kind() };
    match (figure, source) {
        (FigureId::Fig1c, FigureSource::Sweep(rows)) => {
            for r in rows {
                t.push_nums([r.pressure_bar, r.R_nm, r.U_eV]);
            }
        }
        (FigureId::Fig2a, FigureSource::Spectrum { profile, spectrum }) => {
            let radii = profile.grid.radii();
            let f0 = profile.params.f0();
            let phi = |label: LevelLabel| -> Result<Vec<f64>, FigureError> {
                let level = spectrum
                    .get(label)
                    .ok_or_else(|| FigureError::Missing { figure: figure.as_str(), what: format!("bound {label}") })?;
                Ok(level.u.iter().zip(&radii).map(|(u, r)| u / r).collect())
            };
            let (s1, p1, s2) = (phi(LevelLabel::S1)?, phi(LevelLabel::P1)?, phi(LevelLabel::S2)?);
            for i in 0..radii.len() {
                let n = profile.density[i];
                t.push_nums([radii[i], n, f0 * n, s1[i], p1[i], s2[i]]);
            }
        }
        (FigureId::Fig2b, FigureSource::Spectrum { spectrum, .. }) => {
            let get = |label: LevelLabel| {
                spectrum
                    .get(label)
                    .ok_or_else(|| FigureError::Missing { figure: figure.as_str(), what: format!("bound {label}") })
            };
            let (s1, p1, s2) = (get(LevelLabel::S1)?, get(LevelLabel::P1)?, get(LevelLabel::S2)?);
            let dipole = |a, b| dipole_element(a, b).map(f64::abs).unwrap_or(f64::NAN);
            for (name, photons, a, b) in [("1S-1P", 1.0, s1, p1), ("1P-2S", 1.0, p1, s2), ("1S-2S", 2.0, s1, s2)] {
                let de = b.energy - a.energy;
                t.rows.push(vec![
                    Cell::Text(name.to_string()),
                    Cell::Num(photons),
                    Cell::Num(de),
                    Cell::Num(photons * wavelength_um(de)),
                    Cell::Num(dipole(a, b)),
                ]);
            }
        }
        (FigureId::Fig3a | FigureId::Fig3b | FigureId::Fig3c | FigureId::Fig6a, FigureSource::Drive { series, drive }) => {
            let names: &[&str] =
                if figure == FigureId::Fig6a { &["pop_1S", "pop_1P", "pop_2S"] } else { &["pop_1S", "pop_1P", "leakage"] };
            let cols = names.iter().map(|n| column(series, figure, n)).collect::<Result<Vec<_>, _>>()?;
            for (k, &time) in series.times.iter().enumerate() {
                let mut row = vec![time, drive.field(time)];
                row.extend(cols.iter().map(|c| c[k]));
                t.push_nums(row);
            }
        }
        (FigureId::Fig4c, FigureSource::Cavity(series)) => {
            let cav = column(series, figure, "pop_photon_in_cavity")?;
            let bub = column(series, figure, "pop_photon_in_bubble")?;
            for (k, &time) in series.times.iter().enumerate() {
                t.push_nums([time * 1e-3, cav[k], bub[k]]);
            }
        }
        (FigureId::Fig5a | FigureId::Fig5b, FigureSource::Entangle(series)) => {
            let se = column(series, figure, "pop_SE")?;
            let ae = column(series, figure, "pop_AE")?;
            let c = column(series, figure, "concurrence")?;
            for (k, &time) in series.times.iter().enumerate() {
                t.push_nums([time * 1e-6, se[k], ae[k], c[k]]);
            }
        }
        (FigureId::Fig6c, FigureSource::Expansion(run)) => {
            for k in 0..run.times_ps.len() {
                t.push_nums([run.times_ps[k], run.radius[k], run.level_energy[k]]);
            }
        }
        _ => return Err(mismatch()),
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers_are_fixed() {
        assert_eq!(FigureId::Fig4c.columns(), ["t_ps", "pop_photon_in_cavity", "pop_photon_in_bubble"]);
        assert_eq!(FigureId::Fig5a.columns(), ["t_ns", "pop_SE", "pop_AE", "concurrence"]);
        assert_eq!(FigureId::Fig1c.columns(), ["pressure_bar", "R_nm", "U_eV"]);
        assert_eq!(SWEEP_COLUMNS.len(), 11);
    }

    #[test]
    fn mismatched_source_is_rejected() {
        let rows: Vec<SweepRow> = Vec::new();
        let err = emit_figure_data(FigureSource::Sweep(&rows), FigureId::Fig4c).err().unwrap();
        assert!(matches!(err, FigureError::Mismatch { figure: "fig4c", .. }));
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0] {
            let s = Cell::Num(x).render();
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn csv_layout() {
        let rows = vec![SweepRow {
            pressure_bar: 25.0,
            n_bulk_nm3: 23.0,
            mu_eV: 0.001,
            U_eV: 1.2,
            R_nm: 1.14,
            E_1S_eV: 0.22,
            E_1P_eV: 0.44,
            E_2S_eV: 0.83,
            lambda_1S1P_um: 5.5,
            lambda_1S2S_2photon_um: 4.0,
            d_1S1P_enm: 0.4,
        }];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fig1c.csv");
        emit_figure_data(FigureSource::Sweep(&rows), FigureId::Fig1c).unwrap().write_csv(&path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "pressure_bar,R_nm,U_eV\n25.0,1.14,1.2\n");
    }
}
