//! Self-consistent electron bubble: imaginary-time relaxation of the coupled
//! helium/electron functional in spherical symmetry.

use serde::{Deserialize, Serialize};

use super::grid::{stiffness_apply, RadialGrid};
use super::params::{solve_bulk_eos, BulkState, DftParams};
use super::tridiag::{solve_spd, SymTridiag};
use super::{DftError, LevelLabel};
use crate::units::BAR;

/// Relaxation controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaxOptions {
    /// Converged once both residuals (eV) fall below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Initial imaginary-time step, 1/eV.
    pub initial_step: f64,
    pub max_step: f64,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self { tolerance: 1e-8, max_iterations: 200_000, initial_step: 10.0, max_step: 1e7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct RelaxDiagnostics {
    pub iterations: usize,
    pub rejected_steps: usize,
    pub residual_helium: f64,
    pub residual_electron: f64,
    /// Excess grand potential after every accepted step, eV.
    pub energy_history: Vec<f64>,
}

/// Relaxed (or evolving) helium density with the electron in one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BubbleProfile {
    pub grid: RadialGrid,
    pub params: DftParams,
    pub bulk: BulkState,
    /// Helium number density n(r), nm⁻³.
    pub density: Vec<f64>,
    /// Electron radial wavefunction φ(r), normalised as 4π∫φ² r² dr = 1.
    pub wavefunction: Vec<f64>,
    pub level: LevelLabel,
    /// Eigenvalue of the occupied level, eV.
    pub level_energy: f64,
    /// Half-bulk-density radius, nm; `None` when helium never drops below half.
    pub radius: Option<f64>,
    /// Barrier height f0·n_bulk, eV.
    pub barrier: f64,
    pub pressure_bar: f64,
    pub diagnostics: RelaxDiagnostics,
}

impl BubbleProfile {
    pub fn u(&self) -> Vec<f64> {
        self.grid.radii().iter().zip(&self.wavefunction).map(|(r, p)| r * p).collect()
    }

    pub fn electron_norm(&self) -> f64 {
        self.grid.weights().iter().zip(&self.wavefunction).map(|(w, p)| w * p * p).sum()
    }

    pub fn helium_atoms(&self) -> f64 {
        self.grid.weights().iter().zip(&self.density).map(|(w, n)| w * n).sum()
    }

    /// Interface 10–90 % width, nm.
    pub fn interface_width(&self) -> Option<f64> {
        let r = self.grid.radii();
        let lo = crossing(&r, &self.density, 0.1 * self.bulk.n)?;
        let hi = crossing(&r, &self.density, 0.9 * self.bulk.n)?;
        Some(hi - lo)
    }

    /// Excess grand potential of this profile, eV.
    pub fn energy(&self) -> f64 {
        let psi: Vec<f64> = self.density.iter().map(|n| n.max(0.0).sqrt()).collect();
        let ctx = Context::new(&self.params, self.grid, self.bulk);
        ctx.energy(&psi, &self.u())
    }
}

/// Electron radial Hamiltonian acting on u = rφ with u(0) = u(r_max) = 0, for
/// angular momentum `l` in a local potential sampled on the grid.
pub fn electron_hamiltonian(grid: &RadialGrid, kinetic: f64, potential: &[f64], l: usize) -> SymTridiag {
    let dr = grid.dr();
    let t = kinetic / (dr * dr);
    let ll = (l * (l + 1)) as f64;
    let mut d: Vec<f64> = (0..grid.n)
        .map(|i| 2.0 * t + potential[i] + kinetic * ll / grid.r(i).powi(2))
        .collect();
    // ghost u(-r0) = (-1)^(l+1) u(r0)
    d[0] += if l % 2 == 0 { t } else { -t };
    SymTridiag::new(d, vec![-t; grid.n - 1])
}

/// Energy of level (n_r, l) in a potential, and u scaled so 4π∫u² dr = 1.
pub(crate) fn solve_level(
    grid: &RadialGrid,
    kinetic: f64,
    potential: &[f64],
    level: LevelLabel,
    guess: Option<(f64, &[f64])>,
) -> (f64, Vec<f64>, f64) {
    let h = electron_hamiltonian(grid, kinetic, potential, level.l);
    let (e, mut v) = h.eigenpair(level.n_r, guess);
    let hv = h.mul_vec(&v);
    let res = hv.iter().zip(&v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt();
    let scale = 1.0 / (4.0 * std::f64::consts::PI * grid.dr()).sqrt();
    v.iter_mut().for_each(|x| *x *= scale);
    (e, v, res)
}

/// Evaluation context shared by relaxation and real-time evolution.
pub(crate) struct Context {
    pub params: DftParams,
    pub grid: RadialGrid,
    pub mu: f64,
    pub p_internal: f64,
    pub f0: f64,
    pub kin_he: f64,
    pub kin_e: f64,
    pub weights: Vec<f64>,
    pub faces: Vec<f64>,
    pub radii: Vec<f64>,
}

impl Context {
    pub fn new(params: &DftParams, grid: RadialGrid, bulk: BulkState) -> Self {
        Self {
            params: *params,
            grid,
            mu: bulk.mu,
            p_internal: bulk.p * BAR,
            f0: params.f0(),
            kin_he: params.kinetic_he(),
            kin_e: params.kinetic_e(),
            weights: grid.weights(),
            faces: grid.face_couplings(),
            radii: grid.radii(),
        }
    }

    pub fn electron_density(&self, u: &[f64]) -> Vec<f64> {
        u.iter().zip(&self.radii).map(|(u, r)| (u / r).powi(2)).collect()
    }

    pub fn electron_potential(&self, n: &[f64]) -> Vec<f64> {
        n.iter().map(|n| self.f0 * n).collect()
    }

    /// Excess grand potential E[ψ, u] + p·V, eV.
    pub fn energy(&self, psi: &[f64], u: &[f64]) -> f64 {
        let p = &self.params;
        let w = p.w;
        let mut e = 0.0;
        for f in 0..psi.len() - 1 {
            let dpsi = psi[f] - psi[f + 1];
            let dn = psi[f] * psi[f] - psi[f + 1] * psi[f + 1];
            e += self.faces[f] * (self.kin_he * dpsi * dpsi + 0.5 * w * dn * dn);
        }
        for i in 0..psi.len() {
            let n = psi[i] * psi[i];
            e += self.weights[i] * (p.energy_density(n) - self.mu * n + self.p_internal);
        }
        // electron: 4π dr uᵀ H u
        let dr = self.grid.dr();
        let t = self.kin_e / (dr * dr);
        let mut ee = 0.0;
        for i in 0..u.len() {
            let n = psi[i] * psi[i];
            ee += self.f0 * n * u[i] * u[i];
            if i + 1 < u.len() {
                ee += t * (u[i + 1] - u[i]).powi(2);
            }
        }
        // ghost terms: (2u0)² half-face at the origin and u_{N-1}² at the wall
        ee += t * (2.0 * u[0] * u[0] + u[u.len() - 1].powi(2));
        e + 4.0 * std::f64::consts::PI * dr * ee
    }

    /// Local helium Hamiltonian potential V_i so that H ψ = κ L ψ + V ψ.
    pub fn helium_potential(&self, n: &[f64], rho_e: &[f64], out: &mut [f64], scratch: &mut [f64]) {
        stiffness_apply(&self.faces, n, scratch);
        let p = &self.params;
        for i in 0..n.len() {
            out[i] = p.chemical_potential(n[i]) - self.mu
                + self.f0 * rho_e[i]
                + p.w * scratch[i] / self.weights[i];
        }
    }

    /// Gradient G = H ψ (per unit volume), eV·nm^-3/2.
    pub fn helium_gradient(&self, psi: &[f64], rho_e: &[f64], out: &mut [f64]) {
        let n: Vec<f64> = psi.iter().map(|x| x * x).collect();
        let mut v = vec![0.0; psi.len()];
        let mut scratch = vec![0.0; psi.len()];
        self.helium_potential(&n, rho_e, &mut v, &mut scratch);
        stiffness_apply(&self.faces, psi, out);
        for i in 0..psi.len() {
            out[i] = self.kin_he * out[i] / self.weights[i] + v[i] * psi[i];
        }
    }
}

/// Initial bubble radius from a sharp infinite-wall estimate balancing the
/// electron's kinetic energy against surface and pressure–volume work.
fn sharp_wall_radius(params: &DftParams, bulk: &BulkState, level: LevelLabel) -> f64 {
    let sigma = params.planar_surface_tension(params.saturation_density().unwrap_or(bulk.n));
    let x = bessel_zero(level);
    let p = bulk.p * BAR;
    let pi = std::f64::consts::PI;
    let energy = |r: f64| {
        params.kinetic_e() * x * x / (r * r) + 4.0 * pi * sigma * r * r + 4.0 / 3.0 * pi * r.powi(3) * p
    };
    let mut best = (f64::INFINITY, 1.0);
    for k in 1..=400 {
        let r = 0.01 * k as f64;
        let e = energy(r);
        if e < best.0 {
            best = (e, r);
        }
    }
    best.1
}

/// Zeros of spherical Bessel functions for the lowest few levels.
fn bessel_zero(level: LevelLabel) -> f64 {
    const TABLE: [[f64; 3]; 4] = [
        [std::f64::consts::PI, 2.0 * std::f64::consts::PI, 3.0 * std::f64::consts::PI],
        [4.493_409, 7.725_252, 10.904_122],
        [5.763_459, 9.095_011, 12.322_941],
        [6.987_932, 10.417_119, 13.698_023],
    ];
    TABLE
        .get(level.l)
        .and_then(|row| row.get(level.n_r))
        .copied()
        .unwrap_or(std::f64::consts::PI * (level.n_r as f64 + 1.0 + 0.5 * level.l as f64))
}

/// Relax the joint ground state with the electron in (n_r = 0, l = 0).
pub fn relax_ground_bubble(
    params: &DftParams,
    grid: RadialGrid,
    pressure_bar: f64,
) -> Result<BubbleProfile, DftError> {
    relax_bubble(params, grid, pressure_bar, LevelLabel::S1, &RelaxOptions::default())
}

/// Relax the helium with the electron held in `level`.
pub fn relax_bubble(
    params: &DftParams,
    grid: RadialGrid,
    pressure_bar: f64,
    level: LevelLabel,
    opts: &RelaxOptions,
) -> Result<BubbleProfile, DftError> {
    let bulk = solve_bulk_eos(params, pressure_bar)?;
    let r0 = sharp_wall_radius(params, &bulk, level);
    let width = 0.08;
    let psi0: Vec<f64> = grid
        .radii()
        .iter()
        .map(|&r| {
            if params.f0() == 0.0 {
                bulk.n.sqrt()
            } else {
                (bulk.n * 0.5 * (1.0 + ((r - r0) / width).tanh())).sqrt()
            }
        })
        .collect();
    relax_from(params, grid, bulk, pressure_bar, level, psi0, None, opts)
}

/// Continue relaxing from an existing profile (e.g. after changing the level).
pub fn relax_profile(profile: &BubbleProfile, level: LevelLabel, opts: &RelaxOptions) -> Result<BubbleProfile, DftError> {
    let psi0 = profile.density.iter().map(|n| n.max(0.0).sqrt()).collect();
    relax_from(&profile.params, profile.grid, profile.bulk, profile.pressure_bar, level, psi0, None, opts)
}

#[allow(clippy::too_many_arguments)]
fn relax_from(
    params: &DftParams,
    grid: RadialGrid,
    bulk: BulkState,
    pressure_bar: f64,
    level: LevelLabel,
    mut psi: Vec<f64>,
    u_guess: Option<(f64, Vec<f64>)>,
    opts: &RelaxOptions,
) -> Result<BubbleProfile, DftError> {
    let ctx = Context::new(params, grid, bulk);
    let n_pts = grid.n;
    let pw = params.w;

    let density = |psi: &[f64]| -> Vec<f64> { psi.iter().map(|x| x * x).collect() };
    let mut n = density(&psi);
    let mut electron = u_guess;
    let mut diag = RelaxDiagnostics::default();
    let mut tau = opts.initial_step;
    let mut grad = vec![0.0; n_pts];
    let mut scratch = vec![0.0; n_pts];
    let mut history_res = Vec::new();

    let mut converged = false;
    for iter in 0..opts.max_iterations {
        diag.iterations = iter;
        // electron: exact minimisation in the frozen helium potential
        let v = ctx.electron_potential(&n);
        let guess = electron.as_ref().map(|(e, u)| {
            let scale = (4.0 * std::f64::consts::PI * grid.dr()).sqrt();
            (*e, u.iter().map(|x| x * scale).collect::<Vec<_>>())
        });
        let (e_lvl, u, res_e) = solve_level(&grid, ctx.kin_e, &v, level, guess.as_ref().map(|(e, v)| (*e, v.as_slice())));
        electron = Some((e_lvl, u));
        let u = &electron.as_ref().unwrap().1;
        let rho_e = ctx.electron_density(u);

        ctx.helium_gradient(&psi, &rho_e, &mut grad);
        let psi_max = psi.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let res_he = grad.iter().fold(0.0f64, |a, b| a.max(b.abs())) / psi_max;
        diag.residual_helium = res_he;
        diag.residual_electron = res_e;
        if iter % 100 == 0 {
            history_res.push(res_he);
        }
        if res_he < opts.tolerance && res_e < opts.tolerance {
            converged = true;
            diag.energy_history.push(ctx.energy(&psi, u));
            break;
        }

        // semi-implicit step: (W + τ A) δ = τ W G with A the stiff linear part
        let mut v_he = vec![0.0; n_pts];
        ctx.helium_potential(&n, &rho_e, &mut v_he, &mut scratch);
        let mut kd = vec![0.0; n_pts];
        let mut ke = vec![0.0; n_pts - 1];
        for f in 0..n_pts - 1 {
            let c = ctx.faces[f];
            let a = ctx.kin_he * c;
            let b = 2.0 * pw * c;
            kd[f] += a + b * psi[f] * psi[f];
            kd[f + 1] += a + b * psi[f + 1] * psi[f + 1];
            ke[f] = -a - b * psi[f] * psi[f + 1];
        }
        let curv: Vec<f64> = (0..n_pts)
            .map(|i| (v_he[i] + 2.0 * n[i] * params.chemical_potential_slope(n[i])).max(0.0))
            .collect();
        let e_old = ctx.energy(&psi, u);
        if diag.energy_history.is_empty() {
            diag.energy_history.push(e_old);
        }
        let mut accepted = false;
        for _ in 0..60 {
            let d: Vec<f64> = (0..n_pts)
                .map(|i| ctx.weights[i] * (1.0 + tau * curv[i]) + tau * kd[i])
                .collect();
            let e: Vec<f64> = ke.iter().map(|x| tau * x).collect();
            let b: Vec<f64> = (0..n_pts).map(|i| tau * ctx.weights[i] * grad[i]).collect();
            let delta = solve_spd(&d, &e, &b);
            let trial: Vec<f64> = psi.iter().zip(&delta).map(|(p, d)| p - d).collect();
            let e_new = ctx.energy(&trial, u);
            if e_new <= e_old + 1e-12 * e_old.abs() {
                psi = trial;
                n = density(&psi);
                diag.energy_history.push(e_new);
                tau = (tau * 1.5).min(opts.max_step);
                accepted = true;
                break;
            }
            diag.rejected_steps += 1;
            tau *= 0.25;
        }
        if !accepted {
            // no descent direction left at round-off level
            if res_he < 1e3 * opts.tolerance {
                converged = true;
                break;
            }
            return Err(DftError::NotConverged { iterations: iter, residual_history: history_res });
        }
    }
    if !converged {
        return Err(DftError::NotConverged { iterations: opts.max_iterations, residual_history: history_res });
    }

    let (level_energy, u) = electron.expect("electron solved at least once");
    let wavefunction: Vec<f64> = u.iter().zip(&ctx.radii).map(|(u, r)| u / r).collect();
    let tail = n[n_pts - 1];
    if (tail / bulk.n - 1.0).abs() > 1e-3 {
        return Err(DftError::Grid(format!(
            "density at r_max = {tail:.6} differs from bulk {:.6} by more than 1e-3",
            bulk.n
        )));
    }
    let radius = crossing(&ctx.radii, &n, 0.5 * bulk.n);
    if let Some(r) = radius {
        if r > 0.25 * grid.r_max {
            return Err(DftError::Grid(format!("r_max {} is under four bubble radii ({r:.3} nm)", grid.r_max)));
        }
    }
    Ok(BubbleProfile {
        grid,
        params: *params,
        bulk,
        density: n,
        wavefunction,
        level,
        level_energy,
        radius,
        barrier: params.f0() * bulk.n,
        pressure_bar,
        diagnostics: diag,
    })
}

/// Smallest r at which `y` first reaches `level` from below, using monotone
/// cubic (Fritsch–Carlson) interpolation between samples.
pub fn crossing(x: &[f64], y: &[f64], level: f64) -> Option<f64> {
    let k = (0..y.len() - 1).find(|&i| y[i] < level && y[i + 1] >= level)?;
    if y[0] >= level {
        return None;
    }
    let slopes = pchip_slopes(x, y);
    let (x0, x1, y0, y1) = (x[k], x[k + 1], y[k], y[k + 1]);
    let h = x1 - x0;
    let (m0, m1) = (slopes[k], slopes[k + 1]);
    let eval = |t: f64| {
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * m1
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if eval(mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(x0 + 0.5 * (lo + hi) * h)
}

fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::{calibrate_params, electron_spectrum, SaturationTargets};

    fn params() -> DftParams {
        calibrate_params(&SaturationTargets::helium4()).unwrap()
    }

    #[test]
    fn no_contact_coupling_means_no_bubble() {
        let p = params().with_scattering_length(0.0);
        let b = relax_ground_bubble(&p, RadialGrid::new(8.0, 512).unwrap(), 0.0).unwrap();
        assert_eq!(b.radius, None);
        let worst = b.density.iter().map(|n| (n / b.bulk.n - 1.0).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-10, "{worst}");
    }

    #[test]
    fn relaxed_bubble_at_25_bar() {
        let b = relax_ground_bubble(&params(), RadialGrid::new(8.0, 1024).unwrap(), 25.0).unwrap();
        assert!((b.electron_norm() - 1.0).abs() < 1e-8);
        let tail = *b.density.last().unwrap();
        assert!((tail / b.bulk.n - 1.0).abs() < 1e-4);
        assert!(b.density[0] < 1e-3 * b.bulk.n);
        let h = &b.diagnostics.energy_history;
        assert!(h.len() > 2);
        for w in h.windows(2) {
            assert!(w[1] <= w[0] + 1e-12 * w[0].abs(), "energy rose: {} -> {}", w[0], w[1]);
        }
        assert!(b.diagnostics.residual_helium < 1e-5);
        let width = b.interface_width().unwrap();
        assert!(width > 0.05 && width < 0.6, "interface width {width}");

        let s = electron_spectrum(&b, 1, 2);
        let e = |l| s.get(l).unwrap().energy;
        assert!(e(LevelLabel::S1) < e(LevelLabel::P1) && e(LevelLabel::P1) < e(LevelLabel::S2));
        assert!((e(LevelLabel::S1) - b.level_energy).abs() < 1e-8);
        // 2S has one radial node inside the bubble, 1S and 1P none
        let nodes = |l: LevelLabel| {
            let u = &s.get(l).unwrap().u;
            let peak = u.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let sig: Vec<f64> = u.iter().copied().filter(|x| x.abs() > 1e-6 * peak).collect();
            sig.windows(2).filter(|w| w[0] * w[1] < 0.0).count()
        };
        assert_eq!(nodes(LevelLabel::S1), 0);
        assert_eq!(nodes(LevelLabel::P1), 0);
        assert_eq!(nodes(LevelLabel::S2), 1);
    }

    #[test]
    fn grid_doubling_is_stable() {
        let p = params();
        let coarse = relax_ground_bubble(&p, RadialGrid::new(8.0, 1024).unwrap(), 25.0).unwrap();
        let fine = relax_ground_bubble(&p, RadialGrid::new(8.0, 2048).unwrap(), 25.0).unwrap();
        let dr = (coarse.radius.unwrap() / fine.radius.unwrap() - 1.0).abs();
        let de = (coarse.level_energy / fine.level_energy - 1.0).abs();
        assert!(dr < 5e-3 && de < 5e-3, "dR {dr}, dE {de}");
    }

    #[test]
    fn small_box_is_reported() {
        let err = relax_ground_bubble(&params(), RadialGrid::new(3.0, 512).unwrap(), 0.0).unwrap_err();
        assert!(matches!(err, DftError::Grid(_)), "{err:?}");
    }

    #[test]
    fn crossing_interpolates_between_samples() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v).collect();
        let r = crossing(&x, &y, 20.0).unwrap();
        assert!(r > 4.0 && r < 5.0);
        assert!((r - 20f64.sqrt()).abs() < 0.05);
        assert_eq!(crossing(&x, &y, 200.0), None);
        assert_eq!(crossing(&x, &y, -1.0), None);
    }
}
