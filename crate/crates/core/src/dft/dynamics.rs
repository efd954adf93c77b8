//! Real-time helium dynamics around an electron that follows its level
//! adiabatically.
//!
//! The helium order parameter ψ is complex and obeys iħ ∂ψ/∂t = Hψ with the
//! same H that imaginary-time relaxation descends. The electron is re-solved
//! in the instantaneous helium potential once per helium step. Outgoing sound
//! is removed by a sponge near r_max: after every step the deviation of ψ
//! from the bulk value is multiplied by exp(−γ(r)·dt).

use serde::{Deserialize, Serialize};

use super::bubble::{crossing, solve_level, BubbleProfile, Context};
use super::grid::stiffness_apply;
use super::{DftError, LevelLabel};
use crate::units::HBAR;

/// Quadratic sponge γ(r) = rate·((r − r_max + width)/width)² over the outer
/// `width_nm` of the box, `rate_per_ps` at the wall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingLayer {
    pub width_nm: f64,
    pub rate_per_ps: f64,
}

impl Default for AbsorbingLayer {
    fn default() -> Self {
        Self { width_nm: 4.0, rate_per_ps: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealtimeOptions {
    pub t_end_ps: f64,
    pub dt_fs: f64,
    /// `None` keeps the evolution unitary (sound reflects off r_max).
    pub absorbing_layer: Option<AbsorbingLayer>,
    /// Spacing of the R(t) samples, fs.
    pub sample_fs: f64,
    /// Spacing of full profile snapshots, ps; `None` stores only the last one.
    pub snapshot_ps: Option<f64>,
}

impl Default for RealtimeOptions {
    fn default() -> Self {
        Self { t_end_ps: 10.0, dt_fs: 0.25, absorbing_layer: Some(AbsorbingLayer::default()), sample_fs: 10.0, snapshot_ps: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealtimeRun {
    pub times_ps: Vec<f64>,
    /// Half-bulk-density radius, nm (NaN when there is no crossing).
    pub radius: Vec<f64>,
    /// Occupied level energy, eV.
    pub level_energy: Vec<f64>,
    /// Helium atoms in the box.
    pub atoms: Vec<f64>,
    pub snapshot_times_ps: Vec<f64>,
    pub snapshots: Vec<BubbleProfile>,
}

impl RealtimeRun {
    /// Mean radius over the final `fraction` of the run.
    pub fn late_radius(&self, fraction: f64) -> f64 {
        let t_end = self.times_ps.last().copied().unwrap_or(0.0);
        let cut = t_end * (1.0 - fraction);
        let tail: Vec<f64> = self.times_ps.iter().zip(&self.radius).filter(|(t, _)| **t >= cut).map(|(_, r)| *r).collect();
        tail.iter().sum::<f64>() / tail.len().max(1) as f64
    }

    /// First time R covers `fraction` of the way from R(0) to `target`.
    pub fn rise_time_ps(&self, target: f64, fraction: f64) -> Option<f64> {
        let r0 = *self.radius.first()?;
        let goal = r0 + fraction * (target - r0);
        let up = target >= r0;
        self.radius
            .iter()
            .position(|&r| if up { r >= goal } else { r <= goal })
            .map(|k| self.times_ps[k])
    }
}

/// Evolve `profile` in real time with the electron held in `occupied`.
///
/// Fails with [`DftError::UnboundDuringEvolution`] (carrying the last profile)
/// if the level rises to the barrier.
pub fn evolve_radial_realtime(
    profile: &BubbleProfile,
    occupied: LevelLabel,
    opts: &RealtimeOptions,
) -> Result<RealtimeRun, DftError> {
    if !(opts.dt_fs > 0.0 && opts.t_end_ps >= 0.0 && opts.sample_fs > 0.0) {
        return Err(DftError::Grid(format!(
            "invalid real-time options: dt {} fs, t_end {} ps, sample {} fs",
            opts.dt_fs, opts.t_end_ps, opts.sample_fs
        )));
    }
    let grid = profile.grid;
    let ctx = Context::new(&profile.params, grid, profile.bulk);
    let n_pts = grid.n;

    let mut re: Vec<f64> = profile.density.iter().map(|n| n.max(0.0).sqrt()).collect();
    let mut im = vec![0.0; n_pts];
    let mut electron: Option<(f64, Vec<f64>)> = None;

    let mut solve_electron = |re: &[f64], im: &[f64]| -> (f64, Vec<f64>) {
        let n: Vec<f64> = re.iter().zip(im).map(|(a, b)| a * a + b * b).collect();
        let v = ctx.electron_potential(&n);
        let scale = (4.0 * std::f64::consts::PI * grid.dr()).sqrt();
        let guess = electron.as_ref().map(|(e, u)| (*e, u.iter().map(|x| x * scale).collect::<Vec<_>>()));
        let (e, u, _) = solve_level(&grid, ctx.kin_e, &v, occupied, guess.as_ref().map(|(e, u)| (*e, u.as_slice())));
        electron = Some((e, u.clone()));
        (e, u)
    };

    let snapshot = |re: &[f64], im: &[f64], e: f64, u: &[f64]| -> BubbleProfile {
        let density: Vec<f64> = re.iter().zip(im).map(|(a, b)| a * a + b * b).collect();
        let radius = crossing(&ctx.radii, &density, 0.5 * profile.bulk.n);
        let mut p = profile.clone();
        p.wavefunction = u.iter().zip(&ctx.radii).map(|(u, r)| u / r).collect();
        p.density = density;
        p.level = occupied;
        p.level_energy = e;
        p.radius = radius;
        p.diagnostics = Default::default();
        p
    };

    let steps = (opts.t_end_ps * 1000.0 / opts.dt_fs).round() as usize;
    let dt = if steps > 0 { opts.t_end_ps * 1000.0 / steps as f64 } else { opts.dt_fs };
    // per-step sponge factors
    let psi_bulk = profile.bulk.n.sqrt();
    let sponge: Vec<f64> = match opts.absorbing_layer {
        Some(layer) if layer.width_nm > 0.0 && layer.rate_per_ps > 0.0 => {
            let start = grid.r_max - layer.width_nm;
            ctx.radii
                .iter()
                .map(|&r| {
                    let x = ((r - start) / layer.width_nm).max(0.0);
                    (-layer.rate_per_ps * 1e-3 * dt * x * x).exp()
                })
                .collect()
        }
        _ => vec![1.0; n_pts],
    };
    let sample_every = ((opts.sample_fs / dt).round() as usize).max(1);
    let snap_every = opts.snapshot_ps.map(|s| ((s * 1000.0 / dt).round() as usize).max(1));

    let mut run = RealtimeRun {
        times_ps: Vec::new(),
        radius: Vec::new(),
        level_energy: Vec::new(),
        atoms: Vec::new(),
        snapshot_times_ps: Vec::new(),
        snapshots: Vec::new(),
    };

    let mut k = [vec![0.0; n_pts], vec![0.0; n_pts], vec![0.0; n_pts], vec![0.0; n_pts]];
    let mut l = [vec![0.0; n_pts], vec![0.0; n_pts], vec![0.0; n_pts], vec![0.0; n_pts]];
    let mut stage_re = vec![0.0; n_pts];
    let mut stage_im = vec![0.0; n_pts];
    let mut work = Workspace::new(n_pts);

    for step in 0..=steps {
        let (e, u) = solve_electron(&re, &im);
        let t_ps = step as f64 * dt * 1e-3;
        if e >= profile.barrier {
            return Err(DftError::UnboundDuringEvolution {
                level: occupied,
                time_ps: t_ps,
                energy: e,
                snapshot: Box::new(snapshot(&re, &im, e, &u)),
            });
        }
        if step % sample_every == 0 || step == steps {
            let n: Vec<f64> = re.iter().zip(&im).map(|(a, b)| a * a + b * b).collect();
            run.times_ps.push(t_ps);
            run.radius.push(crossing(&ctx.radii, &n, 0.5 * profile.bulk.n).unwrap_or(f64::NAN));
            run.level_energy.push(e);
            run.atoms.push(ctx.weights.iter().zip(&n).map(|(w, n)| w * n).sum());
        }
        if snap_every.is_some_and(|s| step % s == 0) || step == steps {
            run.snapshot_times_ps.push(t_ps);
            run.snapshots.push(snapshot(&re, &im, e, &u));
        }
        if step == steps {
            break;
        }

        let rho_e = ctx.electron_density(&u);
        // classic RK4 with the electron density frozen over the step
        for s in 0..4 {
            let (a, b) = match s {
                0 => (&re, &im),
                _ => {
                    let h = if s == 3 { dt } else { 0.5 * dt };
                    for i in 0..n_pts {
                        stage_re[i] = re[i] + h * k[s - 1][i];
                        stage_im[i] = im[i] + h * l[s - 1][i];
                    }
                    (&stage_re, &stage_im)
                }
            };
            let (ks, ls) = (&mut k[s], &mut l[s]);
            work.rhs(&ctx, &rho_e, a, b, ks, ls);
        }
        for i in 0..n_pts {
            re[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
            im[i] += dt / 6.0 * (l[0][i] + 2.0 * l[1][i] + 2.0 * l[2][i] + l[3][i]);
            re[i] = psi_bulk + (re[i] - psi_bulk) * sponge[i];
            im[i] *= sponge[i];
        }
        if re.iter().chain(&im).any(|x| !x.is_finite()) {
            return Err(DftError::Diverged { time_ps: t_ps });
        }
    }
    Ok(run)
}

struct Workspace {
    n: Vec<f64>,
    v: Vec<f64>,
    scratch: Vec<f64>,
    lap_re: Vec<f64>,
    lap_im: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self { n: vec![0.0; n], v: vec![0.0; n], scratch: vec![0.0; n], lap_re: vec![0.0; n], lap_im: vec![0.0; n] }
    }

    /// dψ/dt = −i Hψ / ħ split into real and imaginary parts.
    fn rhs(&mut self, ctx: &Context, rho_e: &[f64], re: &[f64], im: &[f64], d_re: &mut [f64], d_im: &mut [f64]) {
        for i in 0..re.len() {
            self.n[i] = re[i] * re[i] + im[i] * im[i];
        }
        ctx.helium_potential(&self.n, rho_e, &mut self.v, &mut self.scratch);
        stiffness_apply(&ctx.faces, re, &mut self.lap_re);
        stiffness_apply(&ctx.faces, im, &mut self.lap_im);
        for i in 0..re.len() {
            let a = ctx.kin_he * self.lap_re[i] / ctx.weights[i] + self.v[i] * re[i];
            let b = ctx.kin_he * self.lap_im[i] / ctx.weights[i] + self.v[i] * im[i];
            d_re[i] = b / HBAR;
            d_im[i] = -a / HBAR;
        }
    }
}
