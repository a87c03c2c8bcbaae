//! Steady-state coupled-mode solver.
//!
//! In the frame rotating at the laser frequency, the slowly varying amplitudes
//! of every travelling resonator mode and every emitter coherence obey a
//! linear first-order system `dx/dt = M·x + d`. Its steady state `M·x = −d`
//! yields the complex amplitudes behind all port observables.
//!
//! Row structure (rates and detunings in GHz, ordinary frequency):
//!
//! * CW mode `a_p`:   `(i(ω_L−ω_r,p) − κ_p/2)·a_p − i·h_p·b_p − i·Σ_j g_{j,p}·e^{−iχ_{j,p}}·σ_j
//!   − ½·Σ_{q≠p,w} √(κ_ext,p[w]·κ_ext,q[w])·a_q + √(κ_ext,p[in])·s_in = 0`
//! * CCW mode `b_p`:  mirror image (conjugated coupling phases, no drive)
//! * emitter `σ_j`:   `(i(ω_L−ω_m,j) − (γ⁰_j+2γ*_j)/2)·σ_j − i·Σ_p g_{j,p}(e^{+iχ}a_p + e^{−iχ}b_p) = 0`
//!
//! Modes of different pairs travelling in the same direction share the bus
//! waveguides, so they carry the usual dissipative cross-coupling through the
//! common continua; this is what makes the input/output power bookkeeping
//! close exactly for multi-pair models.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Direction, ModePair, Port, SystemModel};
use crate::units;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative residual bound guaranteed by [`solve_steady_state`].
pub const SOLVE_RESIDUAL_REL: f64 = 1e-12;

// ---------------------------------------------------------------------------
// Index map and LinearSystem
// ---------------------------------------------------------------------------

/// Which row/column of the linear system is which amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IndexMap {
    pub n_pairs: usize,
    pub n_emitters: usize,
}

impl IndexMap {
    pub fn dim(&self) -> usize {
        2 * self.n_pairs + self.n_emitters
    }
    pub fn cw(&self, pair: usize) -> usize {
        2 * pair
    }
    pub fn ccw(&self, pair: usize) -> usize {
        2 * pair + 1
    }
    pub fn emitter(&self, j: usize) -> usize {
        2 * self.n_pairs + j
    }
}

/// Assembled steady-state system `M·x + d = 0` at one laser frequency.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: DMatrix<Complex64>,
    pub drive: DVector<Complex64>,
    pub index: IndexMap,
    pub omega_l_thz: f64,
}

fn mode_detuning_ghz(pair: &ModePair, omega_l_thz: f64) -> f64 {
    units::detuning_ghz(omega_l_thz, pair.center_frequency_thz)
}

fn fill_cavity_block(model: &SystemModel, omega_l_thz: f64, m: &mut DMatrix<Complex64>) {
    let pairs = &model.mode_pairs;
    for (p, pair) in pairs.iter().enumerate() {
        let diag = I * mode_detuning_ghz(pair, omega_l_thz) - pair.total_linewidth_ghz / 2.0;
        m[(2 * p, 2 * p)] = diag;
        m[(2 * p + 1, 2 * p + 1)] = diag;
        let h = pair.backscatter_coupling_ghz;
        m[(2 * p, 2 * p + 1)] = -I * h;
        m[(2 * p + 1, 2 * p)] = -I * h;
        for (q, other) in pairs.iter().enumerate() {
            if q == p {
                continue;
            }
            let cross: f64 = (0..2)
                .map(|w| (pair.external_coupling_ghz[w] * other.external_coupling_ghz[w]).sqrt())
                .sum();
            m[(2 * p, 2 * q)] += Complex64::from(-0.5 * cross);
            m[(2 * p + 1, 2 * q + 1)] += Complex64::from(-0.5 * cross);
        }
    }
}

/// Coupling phase factors of emitter `j` for pair `p`: the CW row carries
/// `e^{−iχ}`, the CCW row `e^{+iχ}`, and the emitter row the conjugates.
fn phase_factor(model: &SystemModel, j: usize, p: usize) -> Complex64 {
    let chi = model.emitters[j].coupling_phase(&model.mode_pairs[p]);
    Complex64::from_polar(1.0, chi)
}

fn assemble_inner(
    model: &SystemModel,
    omega_l_thz: f64,
    drive_direction: Direction,
) -> LinearSystem {
    let index = IndexMap {
        n_pairs: model.mode_pairs.len(),
        n_emitters: model.emitters.len(),
    };
    let n = index.dim();
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    let mut d = DVector::<Complex64>::zeros(n);

    fill_cavity_block(model, omega_l_thz, &mut m);

    for (j, emitter) in model.emitters.iter().enumerate() {
        let row = index.emitter(j);
        let delta = units::detuning_ghz(omega_l_thz, emitter.transition_frequency_thz);
        m[(row, row)] = I * delta - emitter.coherence_decay_ghz() / 2.0;
        for p in 0..index.n_pairs {
            let g = emitter.coupling_ghz(p);
            let phase = phase_factor(model, j, p);
            m[(index.cw(p), row)] = -I * g * phase.conj();
            m[(index.ccw(p), row)] = -I * g * phase;
            m[(row, index.cw(p))] = -I * g * phase;
            m[(row, index.ccw(p))] = -I * g * phase.conj();
        }
    }

    let input_wg = (model.topology.input.waveguide - 1) as usize;
    for p in 0..index.n_pairs {
        let amp = model.mode_pairs[p].external_coupling_ghz[input_wg].sqrt();
        let row = match drive_direction {
            Direction::Cw => index.cw(p),
            Direction::Ccw => index.ccw(p),
        };
        d[row] = Complex64::from(amp);
    }

    LinearSystem {
        matrix: m,
        drive: d,
        index,
        omega_l_thz,
    }
}

/// Largest real part among the eigenvalues of the evolution matrix,
/// computed through the real 2n×2n equivalent.
fn max_eigenvalue_real_part(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    if n == 0 {
        return f64::NEG_INFINITY;
    }
    let mut real = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = m[(i, j)];
            real[(i, j)] = z.re;
            real[(i, j + n)] = -z.im;
            real[(i + n, j)] = z.im;
            real[(i + n, j + n)] = z.re;
        }
    }
    real.complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Assembles the steady-state system at laser frequency `omega_l_thz` (THz)
/// and verifies that the homogeneous part is dynamically stable.
pub fn assemble_linear_system(model: &SystemModel, omega_l_thz: f64) -> Result<LinearSystem> {
    let system = assemble_inner(model, omega_l_thz, model.topology.input.direction);
    check_stability(&system)?;
    Ok(system)
}

/// Same system with the drive injected against the nominal input direction
/// (light entering waveguide 1 from the transmission side).
pub fn assemble_linear_system_driven(
    model: &SystemModel,
    omega_l_thz: f64,
    direction: Direction,
) -> Result<LinearSystem> {
    let system = assemble_inner(model, omega_l_thz, direction);
    check_stability(&system)?;
    Ok(system)
}

fn check_stability(system: &LinearSystem) -> Result<()> {
    let scale = system
        .matrix
        .iter()
        .map(|z| z.norm())
        .fold(1.0_f64, f64::max);
    let max_re = max_eigenvalue_real_part(&system.matrix);
    if max_re > 1e-9 * scale {
        return Err(Error::Model(format!(
            "homogeneous part is not dynamically stable: max Re(eigenvalue) = {max_re:.3e} GHz"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Steady-state solve
// ---------------------------------------------------------------------------

/// Complex steady-state amplitudes at one laser frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct StateAmplitudes {
    pub omega_l_thz: f64,
    /// CW amplitude a_p per mode pair.
    pub cw: Vec<Complex64>,
    /// CCW amplitude b_p per mode pair.
    pub ccw: Vec<Complex64>,
    /// Coherence σ_j per emitter.
    pub coherences: Vec<Complex64>,
}

impl StateAmplitudes {
    fn from_vector(system: &LinearSystem, x: &DVector<Complex64>) -> Self {
        let idx = system.index;
        StateAmplitudes {
            omega_l_thz: system.omega_l_thz,
            cw: (0..idx.n_pairs).map(|p| x[idx.cw(p)]).collect(),
            ccw: (0..idx.n_pairs).map(|p| x[idx.ccw(p)]).collect(),
            coherences: (0..idx.n_emitters).map(|j| x[idx.emitter(j)]).collect(),
        }
    }
}

/// Solves `M·x = −d` by LU with one step of iterative refinement; the result
/// satisfies `‖M·x + d‖ ≤ 1e-12·‖d‖`.
pub fn solve_steady_state(system: &LinearSystem) -> Result<StateAmplitudes> {
    let rhs = -&system.drive;
    let drive_norm = system.drive.norm();
    if drive_norm == 0.0 {
        let x = DVector::<Complex64>::zeros(system.index.dim());
        return Ok(StateAmplitudes::from_vector(system, &x));
    }
    let lu = system.matrix.clone().lu();
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Numerics("singular steady-state matrix".into()))?;
    // one refinement pass tightens the residual to well below the guarantee
    let residual = &rhs - &system.matrix * &x;
    if let Some(correction) = lu.solve(&residual) {
        x += correction;
    }
    let rel = (&system.matrix * &x - &rhs).norm() / drive_norm;
    if !rel.is_finite() || rel > SOLVE_RESIDUAL_REL {
        return Err(Error::Numerics(format!(
            "steady-state solve reached relative residual {rel:.3e} (bound {SOLVE_RESIDUAL_REL:.0e})"
        )));
    }
    Ok(StateAmplitudes::from_vector(system, &x))
}

// ---------------------------------------------------------------------------
// Port outputs
// ---------------------------------------------------------------------------

fn out_coupled(model: &SystemModel, state: &StateAmplitudes, waveguide: u8, dir: Direction) -> Complex64 {
    let w = (waveguide - 1) as usize;
    model
        .mode_pairs
        .iter()
        .enumerate()
        .map(|(p, pair)| {
            let amp = match dir {
                Direction::Cw => state.cw[p],
                Direction::Ccw => state.ccw[p],
            };
            -Complex64::from(pair.external_coupling_ghz[w].sqrt()) * amp
        })
        .sum()
}

/// Output amplitude at one physical port for unit input power.
pub fn output_amplitude(model: &SystemModel, state: &StateAmplitudes, port: Port) -> Result<Complex64> {
    let topo = &model.topology;
    let s_in = Complex64::from(1.0);
    match port {
        Port::Input => Err(Error::Interface(
            "'input' is not an output port".to_string(),
        )),
        Port::Transmission => {
            let a = topo.transmission;
            Ok(s_in + out_coupled(model, state, a.waveguide, a.direction))
        }
        Port::Drop => {
            let a = topo.drop;
            Ok(out_coupled(model, state, a.waveguide, a.direction))
        }
        Port::Add => {
            let a = topo.add;
            Ok(out_coupled(model, state, a.waveguide, a.direction))
        }
        Port::Interferometer1 | Port::Interferometer2 => {
            let a = topo.assignment(port);
            let reference = Complex64::from_polar(
                topo.interferometer_reference.amplitude_ratio,
                topo.interferometer_reference.phase_rad,
            );
            let sample = out_coupled(model, state, a.waveguide, a.direction);
            let sqrt2 = std::f64::consts::SQRT_2;
            Ok(match port {
                Port::Interferometer1 => (reference + sample) / sqrt2,
                _ => (reference - sample) / sqrt2,
            })
        }
    }
}

/// Per-port complex amplitude and intensity over the drive grid.
#[derive(Debug, Clone)]
pub struct PortSpectra {
    pub origin_thz: f64,
    pub detunings_ghz: Vec<f64>,
    pub ports: Vec<Port>,
    /// `amplitudes[k][i]` is port `ports[k]` at grid point `i`.
    pub amplitudes: Vec<Vec<Complex64>>,
}

impl PortSpectra {
    pub fn frequency_thz(&self, i: usize) -> f64 {
        self.origin_thz + units::ghz_to_thz(self.detunings_ghz[i])
    }

    pub fn intensities(&self, port: Port) -> Option<Vec<f64>> {
        let k = self.ports.iter().position(|p| *p == port)?;
        Some(self.amplitudes[k].iter().map(|a| a.norm_sqr()).collect())
    }

    pub fn amplitudes_of(&self, port: Port) -> Option<&[Complex64]> {
        let k = self.ports.iter().position(|p| *p == port)?;
        Some(&self.amplitudes[k])
    }
}

/// Solves the model over its drive grid and evaluates the requested ports.
///
/// Grid points are independent; they are dispatched to the current rayon pool
/// and reassembled in grid order, so results do not depend on the worker
/// count.
pub fn port_spectrum(model: &SystemModel, ports: &[Port]) -> Result<PortSpectra> {
    if ports.is_empty() {
        return Err(Error::Interface("no output ports requested".into()));
    }
    if ports.contains(&Port::Input) {
        return Err(Error::Interface("'input' is not an output port".into()));
    }
    let freqs = model.drive.frequencies_thz();
    if freqs.is_empty() {
        return Err(Error::Validation("model drive grid is empty".into()));
    }
    // stability is frequency-independent (ω_L only shifts the diagonal by a
    // common imaginary amount), so one check covers the sweep
    assemble_linear_system(model, freqs[0])?;

    let rows: Vec<Vec<Complex64>> = freqs
        .par_iter()
        .map(|f| -> Result<Vec<Complex64>> {
            let system = assemble_inner(model, *f, model.topology.input.direction);
            let state = solve_steady_state(&system)?;
            ports
                .iter()
                .map(|port| output_amplitude(model, &state, *port))
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut amplitudes = vec![Vec::with_capacity(freqs.len()); ports.len()];
    for row in rows {
        for (k, amp) in row.into_iter().enumerate() {
            amplitudes[k].push(amp);
        }
    }
    Ok(PortSpectra {
        origin_thz: model.drive.origin_thz(),
        detunings_ghz: model.drive.detunings_ghz(),
        ports: ports.to_vec(),
        amplitudes,
    })
}

// ---------------------------------------------------------------------------
// Intracavity field
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct IntracavityField {
    pub azimuth_rad: Vec<f64>,
    pub field: Vec<Complex64>,
    /// Standing-wave visibility 2|a||b|/(|a|²+|b|²).
    pub visibility: f64,
    /// Azimuth of the field minimum on the supplied grid.
    pub node_azimuth_rad: f64,
}

/// Field of one mode pair around the rim: `a·e^{imφ} + b·e^{−imφ}`.
pub fn intracavity_field(
    model: &SystemModel,
    state: &StateAmplitudes,
    pair_index: usize,
    azimuth_grid: &[f64],
) -> Result<IntracavityField> {
    let pair = model
        .mode_pairs
        .get(pair_index)
        .ok_or_else(|| Error::Interface(format!("no mode pair {pair_index}")))?;
    let a = state.cw[pair_index];
    let b = state.ccw[pair_index];
    let m = f64::from(pair.azimuthal_order);
    let field: Vec<Complex64> = azimuth_grid
        .iter()
        .map(|phi| a * Complex64::from_polar(1.0, m * phi) + b * Complex64::from_polar(1.0, -m * phi))
        .collect();
    let pa = a.norm_sqr();
    let pb = b.norm_sqr();
    let visibility = if pa + pb > 0.0 {
        2.0 * a.norm() * b.norm() / (pa + pb)
    } else {
        0.0
    };
    let node_azimuth_rad = field
        .iter()
        .enumerate()
        .min_by(|(_, x), (_, y)| x.norm().total_cmp(&y.norm()))
        .map(|(i, _)| azimuth_grid[i])
        .unwrap_or(0.0);
    Ok(IntracavityField {
        azimuth_rad: azimuth_grid.to_vec(),
        field,
        visibility,
        node_azimuth_rad,
    })
}

// ---------------------------------------------------------------------------
// Adiabatic elimination of the cavity
// ---------------------------------------------------------------------------

/// Effective emitter matrix after eliminating all cavity rows, evaluated at
/// laser frequency `omega_l_thz`: `E_jk = δ_jk(iδ_j − Γ_j/2) + [v_j C⁻¹ w_k]`.
pub(crate) fn emitter_effective_matrix(
    model: &SystemModel,
    omega_l_thz: f64,
) -> Result<DMatrix<Complex64>> {
    let n_pairs = model.mode_pairs.len();
    let n = model.emitters.len();
    let mut cavity = DMatrix::<Complex64>::zeros(2 * n_pairs, 2 * n_pairs);
    fill_cavity_block(model, omega_l_thz, &mut cavity);
    let lu = cavity.lu();

    let mut effective = DMatrix::<Complex64>::zeros(n, n);
    // solve C y_k = w_k once per emitter, then dot with every v_j
    for k in 0..n {
        let mut w = DVector::<Complex64>::zeros(2 * n_pairs);
        for p in 0..n_pairs {
            let g = model.emitters[k].coupling_ghz(p);
            let phase = phase_factor(model, k, p);
            w[2 * p] = g * phase.conj();
            w[2 * p + 1] = g * phase;
        }
        let y = lu
            .solve(&w)
            .ok_or_else(|| Error::Numerics("cavity block is singular".into()))?;
        for j in 0..n {
            let mut dot = Complex64::default();
            for p in 0..n_pairs {
                let g = model.emitters[j].coupling_ghz(p);
                let phase = phase_factor(model, j, p);
                dot += g * phase * y[2 * p] + g * phase.conj() * y[2 * p + 1];
            }
            effective[(j, k)] += dot;
        }
    }
    for j in 0..n {
        let e = &model.emitters[j];
        let delta = units::detuning_ghz(omega_l_thz, e.transition_frequency_thz);
        effective[(j, j)] += I * delta - e.coherence_decay_ghz() / 2.0;
    }
    Ok(effective)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveResponse {
    /// Effective linewidth γ_eff = γ⁰ + 2γ* + 2·Re Σ (MHz).
    pub gamma_eff_mhz: f64,
    /// Lamb shift −Im Σ (MHz). With the e^{−iωt} frame frozen here, a
    /// positive value displaces the observed line below the bare frequency.
    pub lamb_shift_mhz: f64,
}

/// Self-energy of one emitter probed at its own frequency, as a function of
/// the cavity detuning Δ = ω_m − ω_r of the fundamental pair. All pairs are
/// rigidly shifted so inter-pair offsets are preserved; other emitters do not
/// enter the single-emitter self-energy.
pub fn effective_emitter_response(
    model: &SystemModel,
    emitter_index: usize,
    cavity_detuning_ghz: f64,
) -> Result<EffectiveResponse> {
    let emitter = model
        .emitters
        .get(emitter_index)
        .ok_or_else(|| Error::Interface(format!("no emitter {emitter_index}")))?
        .clone();
    let omega_m = emitter.transition_frequency_thz;

    let mut probe = model.clone();
    let fundamental = probe.fundamental_index();
    let target_center = omega_m - units::ghz_to_thz(cavity_detuning_ghz);
    let shift = target_center - probe.mode_pairs[fundamental].center_frequency_thz;
    for pair in &mut probe.mode_pairs {
        pair.center_frequency_thz += shift;
    }
    probe.emitters = vec![emitter.clone()];

    let effective = emitter_effective_matrix(&probe, omega_m)?;
    // E_00 = iδ − Γ/2 − Σ with δ = 0 here, so Σ = −(E_00 + Γ/2)
    let gamma_ghz = emitter.coherence_decay_ghz();
    let sigma = -(effective[(0, 0)] + Complex64::from(gamma_ghz / 2.0));
    Ok(EffectiveResponse {
        gamma_eff_mhz: units::ghz_to_mhz(gamma_ghz + 2.0 * sigma.re),
        lamb_shift_mhz: units::ghz_to_mhz(-sigma.im),
    })
}

// ---------------------------------------------------------------------------
// Time-domain oracle
// ---------------------------------------------------------------------------

/// Integrates `dx/dt = 2π(M·x + d)` (t in ns) from `x(0) = 0` with a
/// fixed-step RK4 until the relative residual `‖M·x + d‖/‖d‖` drops below
/// `tol`, then reports the state. Independent of the linear solve.
pub fn time_domain_oracle(
    model: &SystemModel,
    omega_l_thz: f64,
    t_end_ns: f64,
    tol: f64,
) -> Result<StateAmplitudes> {
    let system = assemble_linear_system(model, omega_l_thz)?;
    let n = system.index.dim();
    let d = &system.drive;
    let m = &system.matrix;
    let drive_norm = d.norm().max(f64::MIN_POSITIVE);
    let mut x = DVector::<Complex64>::zeros(n);
    if d.norm() == 0.0 {
        return Ok(StateAmplitudes::from_vector(&system, &x));
    }

    // conservative explicit-stability bound from the max row sum (≥ ρ(M))
    let row_sum = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0_f64, f64::max)
        .max(1e-12);
    let dt = 1.0 / (units::angular_rad_per_ns(row_sum));
    let rate = |x: &DVector<Complex64>| -> DVector<Complex64> {
        (m * x + d).map(|z| z * units::angular_rad_per_ns(1.0))
    };

    let check_every = 32;
    let mut t = 0.0;
    let mut last_residual = f64::INFINITY;
    let mut last_t = 0.0;
    let mut step = 0usize;
    while t < t_end_ns {
        let k1 = rate(&x);
        let k2 = rate(&(&x + &k1 * Complex64::from(dt / 2.0)));
        let k3 = rate(&(&x + &k2 * Complex64::from(dt / 2.0)));
        let k4 = rate(&(&x + &k3 * Complex64::from(dt)));
        x += (k1 + k2 * Complex64::from(2.0) + k3 * Complex64::from(2.0) + k4)
            * Complex64::from(dt / 6.0);
        t += dt;
        step += 1;
        if step % check_every == 0 {
            let residual = (m * &x + d).norm() / drive_norm;
            if residual <= tol {
                return Ok(StateAmplitudes::from_vector(&system, &x));
            }
            last_residual = residual;
            last_t = t;
        }
    }
    let final_residual = (m * &x + d).norm() / drive_norm;
    if final_residual <= tol {
        return Ok(StateAmplitudes::from_vector(&system, &x));
    }
    let slope = if last_t > 0.0 && last_residual.is_finite() {
        (final_residual.ln() - last_residual.ln()) / (t_end_ns - last_t).max(f64::MIN_POSITIVE)
    } else {
        f64::NAN
    };
    Err(Error::Numerics(format!(
        "time-domain oracle did not converge by t = {t_end_ns} ns: relative residual {final_residual:.3e} \
         (decay slope {slope:.3e} /ns)"
    )))
}

// ---------------------------------------------------------------------------
// Passivity audit
// ---------------------------------------------------------------------------

/// Power bookkeeping for one solved state, treating intrinsic cavity loss and
/// every emitter decay channel as monitored virtual ports.
#[derive(Debug, Clone)]
pub struct PassivityReport {
    pub input_power: f64,
    pub transmitted: f64,
    pub waveguide1_backward: f64,
    pub waveguide2_cw: f64,
    pub waveguide2_ccw: f64,
    pub intrinsic: f64,
    /// Per-emitter dissipated power, split into (zpl, red, dephasing).
    pub emitter_channels: Vec<(f64, f64, f64)>,
    pub relative_imbalance: f64,
}

pub fn passivity_report(model: &SystemModel, state: &StateAmplitudes) -> PassivityReport {
    let s_in = Complex64::from(1.0);
    let input_dir = model.topology.input.direction;
    let backward = match input_dir {
        Direction::Cw => Direction::Ccw,
        Direction::Ccw => Direction::Cw,
    };
    let transmitted = (s_in + out_coupled(model, state, 1, input_dir)).norm_sqr();
    let waveguide1_backward = out_coupled(model, state, 1, backward).norm_sqr();
    let waveguide2_cw = out_coupled(model, state, 2, Direction::Cw).norm_sqr();
    let waveguide2_ccw = out_coupled(model, state, 2, Direction::Ccw).norm_sqr();
    let intrinsic: f64 = model
        .mode_pairs
        .iter()
        .enumerate()
        .map(|(p, pair)| {
            pair.intrinsic_loss_ghz * (state.cw[p].norm_sqr() + state.ccw[p].norm_sqr())
        })
        .sum();
    let emitter_channels: Vec<(f64, f64, f64)> = model
        .emitters
        .iter()
        .enumerate()
        .map(|(j, e)| {
            let pop = state.coherences[j].norm_sqr();
            (
                units::mhz_to_ghz(e.zpl_linewidth_mhz()) * pop,
                units::mhz_to_ghz(e.red_linewidth_mhz()) * pop,
                units::mhz_to_ghz(2.0 * e.pure_dephasing_mhz) * pop,
            )
        })
        .collect();
    let emitter_total: f64 = emitter_channels.iter().map(|(a, b, c)| a + b + c).sum();
    let output_total = transmitted
        + waveguide1_backward
        + waveguide2_cw
        + waveguide2_ccw
        + intrinsic
        + emitter_total;
    let input_power = s_in.norm_sqr();
    PassivityReport {
        input_power,
        transmitted,
        waveguide1_backward,
        waveguide2_cw,
        waveguide2_ccw,
        intrinsic,
        emitter_channels,
        relative_imbalance: (output_total - input_power).abs() / input_power,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DriveSpec, ModeLabel};
    use crate::presets;
    use approx::assert_relative_eq;

    fn solve_at(model: &SystemModel, omega_l_thz: f64) -> StateAmplitudes {
        let system = assemble_linear_system(model, omega_l_thz).unwrap();
        solve_steady_state(&system).unwrap()
    }

    fn resonator_only() -> SystemModel {
        let mut m = presets::resonator_model();
        m.mode_pairs.truncate(1);
        m
    }

    #[test]
    fn resonator_only_on_resonance_matches_add_drop_formula() {
        let model = resonator_only();
        let state = solve_at(&model, presets::RESONANCE_THZ);
        let k1 = model.mode_pairs[0].external_coupling_ghz[0];
        let kappa = model.mode_pairs[0].total_linewidth_ghz;
        assert_relative_eq!(
            state.cw[0].norm_sqr(),
            4.0 * k1 / (kappa * kappa),
            max_relative = 1e-12
        );
        assert_eq!(state.ccw[0], Complex64::default());
    }

    #[test]
    fn no_emitters_h0_is_block_diagonal_per_pair() {
        let mut model = resonator_only();
        model.emitters.clear();
        let sys = assemble_linear_system(&model, presets::RESONANCE_THZ).unwrap();
        assert_eq!(sys.matrix.nrows(), 2);
        assert_eq!(sys.matrix[(0, 1)], Complex64::default());
        assert_eq!(sys.matrix[(1, 0)], Complex64::default());
    }

    #[test]
    fn two_pairs_share_the_bus_cross_damping() {
        let model = presets::resonator_model();
        let sys = assemble_linear_system(&model, presets::RESONANCE_THZ).unwrap();
        let expected: f64 = (0..2)
            .map(|w| {
                (model.mode_pairs[0].external_coupling_ghz[w]
                    * model.mode_pairs[1].external_coupling_ghz[w])
                    .sqrt()
            })
            .sum();
        assert_relative_eq!(sys.matrix[(0, 2)].re, -0.5 * expected, max_relative = 1e-12);
        assert_eq!(sys.matrix[(0, 2)].im, 0.0);
        // CW never cross-damps into CCW
        assert_eq!(sys.matrix[(0, 3)], Complex64::default());
    }

    #[test]
    fn emitter_phase_entries_match_convention() {
        let model = presets::resonant_pair_model();
        let sys = assemble_linear_system(&model, presets::RESONANCE_THZ).unwrap();
        let g2 = model.emitters[1].coupling_ghz(0);
        // second emitter has χ = π/2: CCW row carries −i·g·e^{+iπ/2} = g
        let entry = sys.matrix[(1, sys.index.emitter(1))];
        assert_relative_eq!(entry.re, g2, max_relative = 1e-12);
        assert_relative_eq!(entry.im, 0.0, epsilon = 1e-15);
        // interchanging the two emitters only relabels rows
        let mut swapped = model.clone();
        swapped.emitters.swap(0, 1);
        let sys2 = assemble_linear_system(&swapped, presets::RESONANCE_THZ).unwrap();
        assert_eq!(sys.matrix[(0, 2)], sys2.matrix[(0, 3)]);
        assert_eq!(sys.matrix[(0, 3)], sys2.matrix[(0, 2)]);
    }

    #[test]
    fn zero_drive_gives_zero_state() {
        let mut model = presets::m1_model();
        model.topology.input.direction = Direction::Cw;
        let mut sys = assemble_linear_system(&model, presets::RESONANCE_THZ).unwrap();
        sys.drive.fill(Complex64::default());
        let state = solve_steady_state(&sys).unwrap();
        assert!(state.cw[0].norm() == 0.0 && state.ccw[0].norm() == 0.0);
        assert!(state.coherences[0].norm() == 0.0);
    }

    #[test]
    fn negative_rate_is_rejected_as_unstable() {
        let mut model = resonator_only();
        model.mode_pairs[0].intrinsic_loss_ghz = -30.0;
        model.mode_pairs[0].total_linewidth_ghz =
            model.mode_pairs[0].intrinsic_loss_ghz + 2.0 * presets::external_coupling_ghz();
        assert!(matches!(
            assemble_linear_system(&model, presets::RESONANCE_THZ),
            Err(Error::Model(_))
        ));
    }

    #[test]
    fn singular_at_exact_lossless_resonance() {
        let mut model = resonator_only();
        model.mode_pairs[0].total_linewidth_ghz = 0.0;
        model.mode_pairs[0].intrinsic_loss_ghz = 0.0;
        model.mode_pairs[0].external_coupling_ghz = [0.0, 0.0];
        let sys = assemble_inner(&model, presets::RESONANCE_THZ, Direction::Cw);
        let mut sys = sys;
        sys.drive[0] = Complex64::from(1.0);
        assert!(matches!(
            solve_steady_state(&sys),
            Err(Error::Numerics(_))
        ));
    }

    #[test]
    fn drop_peak_is_lorentzian_of_fwhm_kappa() {
        let model = resonator_only();
        let spectra = port_spectrum(&model, &[Port::Drop]).unwrap();
        let ints = spectra.intensities(Port::Drop).unwrap();
        let dets = &spectra.detunings_ghz;
        let peak = ints.iter().cloned().fold(0.0_f64, f64::max);
        let kappa = model.mode_pairs[0].total_linewidth_ghz;
        for (d, i) in dets.iter().zip(&ints) {
            let expected = peak * (kappa / 2.0).powi(2) / ((kappa / 2.0).powi(2) + d * d);
            assert_relative_eq!(*i, expected, max_relative = 1e-9);
        }
    }

    #[test]
    fn transmission_dip_is_40_percent_for_calibrated_split() {
        let model = resonator_only();
        let state = solve_at(&model, presets::RESONANCE_THZ);
        let t = output_amplitude(&model, &state, Port::Transmission).unwrap();
        assert_relative_eq!(1.0 - t.norm_sqr(), 0.40, epsilon = 1e-9);
    }

    #[test]
    fn backscatter_splits_the_doublet() {
        // resolved splitting needs 2h > κ; the CCW intensity
        // ∝ h²/|c²+h²|² peaks at ±√(h²−κ²/4)
        let h = 40.0;
        let kappa = presets::KAPPA_GHZ;
        let mut model = resonator_only();
        model.mode_pairs[0].backscatter_coupling_ghz = h;
        model.drive = DriveSpec::grid(presets::RESONANCE_THZ, -60.0, 60.0, 6001);
        let spectra = port_spectrum(&model, &[Port::Add]).unwrap();
        let ints = spectra.intensities(Port::Add).unwrap();
        let dets = &spectra.detunings_ghz;
        let imax = ints
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let expected = (h * h - kappa * kappa / 4.0).sqrt();
        assert!(
            (dets[imax].abs() - expected).abs() < 0.05,
            "peak at {} vs {expected}",
            dets[imax]
        );
        // symmetric twin on the other side
        let mirrored = ints[dets.iter().position(|d| (*d + dets[imax]).abs() < 1e-9).unwrap()];
        assert_relative_eq!(ints[imax], mirrored, max_relative = 1e-9);
    }

    #[test]
    fn superposition_output_is_linear_in_drive() {
        let model = presets::m1_model();
        let sys = assemble_linear_system(&model, presets::RESONANCE_THZ).unwrap();
        let x1 = solve_steady_state(&sys).unwrap();
        let mut doubled = sys.clone();
        doubled.drive *= Complex64::from(2.0);
        let x2 = solve_steady_state(&doubled).unwrap();
        for (u, v) in x1.cw.iter().zip(&x2.cw) {
            assert_relative_eq!(2.0 * u.re, v.re, max_relative = 1e-12);
            assert_relative_eq!(2.0 * u.im, v.im, max_relative = 1e-12);
        }
    }

    #[test]
    fn parity_conjugated_phases_with_mirrored_drive_relabels_ports() {
        let model = presets::resonant_pair_model();
        let state = solve_at(&model, presets::RESONANCE_THZ);

        let mut mirrored = model.clone();
        for e in &mut mirrored.emitters {
            if let Some(c) = e.coupling_phase_rad {
                e.coupling_phase_rad = Some(-c);
            }
            if let Some(a) = e.azimuthal_angle_rad {
                e.azimuthal_angle_rad = Some((std::f64::consts::TAU - a) % std::f64::consts::TAU);
            }
        }
        let sys = assemble_linear_system_driven(&mirrored, presets::RESONANCE_THZ, Direction::Ccw)
            .unwrap();
        let mirrored_state = solve_steady_state(&sys).unwrap();
        // swapped labels reproduce the original amplitudes
        for p in 0..model.mode_pairs.len() {
            assert_relative_eq!(
                mirrored_state.ccw[p].norm(),
                state.cw[p].norm(),
                max_relative = 1e-10
            );
            assert_relative_eq!(
                mirrored_state.cw[p].norm(),
                state.ccw[p].norm(),
                max_relative = 1e-10
            );
        }
        for j in 0..model.emitters.len() {
            assert_relative_eq!(
                mirrored_state.coherences[j].norm(),
                state.coherences[j].norm(),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn g0_reduces_to_resonator_only_bit_for_bit() {
        let mut coupled = presets::m1_model();
        coupled.emitters[0].coupling_mhz = vec![0.0];
        let mut bare = coupled.clone();
        bare.emitters.clear();
        let sc = port_spectrum(&coupled, &Port::OUTPUTS).unwrap();
        let sb = port_spectrum(&bare, &Port::OUTPUTS).unwrap();
        for (ac, ab) in sc.amplitudes.iter().zip(&sb.amplitudes) {
            assert_eq!(ac, ab);
        }
        let state = solve_at(&coupled, presets::RESONANCE_THZ);
        assert_eq!(state.coherences[0], Complex64::default());
    }

    #[test]
    fn m1_drop_dip_and_add_peak() {
        let model = presets::m1_gamma125_model();
        let spectra = port_spectrum(&model, &[Port::Drop, Port::Add]).unwrap();
        let drop = spectra.intensities(Port::Drop).unwrap();
        let add = spectra.intensities(Port::Add).unwrap();
        let bare = {
            let mut m = model.clone();
            m.emitters.clear();
            port_spectrum(&m, &[Port::Drop]).unwrap()
        };
        let drop_bg = bare.intensities(Port::Drop).unwrap();
        let dip = 1.0
            - drop
                .iter()
                .zip(&drop_bg)
                .map(|(i, b)| i / b)
                .fold(f64::INFINITY, f64::min);
        assert!((dip - 0.6006).abs() < 0.005, "dip {dip}");
        // add port shows a molecular peak on a tiny background
        let center = add[add.len() / 2];
        assert!(center > 10.0 * add[0], "no add-port peak: {center} vs {}", add[0]);
    }

    #[test]
    fn visibility_and_node_for_m1() {
        let model = presets::m1_model();
        let state = solve_at(&model, presets::RESONANCE_THZ);
        let grid: Vec<f64> = (0..=3600).map(|i| i as f64 * std::f64::consts::TAU / 3600.0).collect();
        let field = intracavity_field(&model, &state, 0, &grid).unwrap();
        assert_relative_eq!(field.visibility, 0.8823529411764706, max_relative = 1e-6);
        // node sits at the emitter azimuth (φ = 0 modulo the standing-wave period π/m)
        let m = f64::from(model.mode_pairs[0].azimuthal_order);
        let period = std::f64::consts::PI / m;
        let offset = (field.node_azimuth_rad % period).min(period - field.node_azimuth_rad % period);
        assert!(offset < 2.0 * std::f64::consts::TAU / 3600.0, "offset {offset}");
    }

    #[test]
    fn visibility_limits() {
        let model = presets::m1_model();
        let grid: Vec<f64> = (0..1000).map(|i| i as f64 * 0.006283).collect();
        let traveling = StateAmplitudes {
            omega_l_thz: presets::RESONANCE_THZ,
            cw: vec![Complex64::from(0.3)],
            ccw: vec![Complex64::default()],
            coherences: vec![],
        };
        let f = intracavity_field(&model, &traveling, 0, &grid).unwrap();
        assert_eq!(f.visibility, 0.0);
        let standing = StateAmplitudes {
            omega_l_thz: presets::RESONANCE_THZ,
            cw: vec![Complex64::from(0.3)],
            ccw: vec![Complex64::from(0.3) * Complex64::from_polar(1.0, 0.7)],
            coherences: vec![],
        };
        let f = intracavity_field(&model, &standing, 0, &grid).unwrap();
        assert_relative_eq!(f.visibility, 1.0, max_relative = 1e-12);
        // grid node sits within one grid step of the analytic node
        // (|field|² minimal at 2mφ + arg(a·b̄) = π, repeating every π/m)
        let m = f64::from(model.mode_pairs[0].azimuthal_order);
        let period = std::f64::consts::PI / m;
        let analytic = (std::f64::consts::PI - (standing.cw[0] * standing.ccw[0].conj()).arg())
            / (2.0 * m);
        let step = grid[1] - grid[0];
        let diff = (f.node_azimuth_rad - analytic).rem_euclid(period);
        let offset = diff.min(period - diff);
        assert!(offset <= step, "node offset {offset} vs grid step {step}");
    }

    #[test]
    fn effective_response_far_detuned_limit() {
        let model = presets::m1_model();
        let r = effective_emitter_response(&model, 0, 20.0 * presets::KAPPA_GHZ).unwrap();
        assert!((r.gamma_eff_mhz - 33.0).abs() / 33.0 < 0.005, "{}", r.gamma_eff_mhz);
    }

    #[test]
    fn effective_response_is_lorentzian_for_single_pair() {
        let model = presets::m1_model();
        let g = model.emitters[0].coupling_ghz(0);
        let kappa = presets::KAPPA_GHZ;
        let gamma0 = presets::GAMMA0_MHZ;
        for delta in [-80.0, -27.0, -5.0, 0.0, 3.0, 27.0, 60.0, 200.0] {
            let r = effective_emitter_response(&model, 0, delta).unwrap();
            let lorentz =
                2.0 * g * g * kappa / (delta * delta + kappa * kappa / 4.0) * 1e3; // MHz
            assert_relative_eq!(r.gamma_eff_mhz - gamma0, lorentz, max_relative = 1e-9);
            // positive detuning (emitter above cavity) → line pushed up → negative reported shift
            if delta > 0.0 {
                assert!(r.lamb_shift_mhz < 0.0);
            }
        }
    }

    #[test]
    fn effective_response_m1_on_resonance() {
        let model = presets::m1_gamma125_model();
        let r = effective_emitter_response(&model, 0, 0.0).unwrap();
        assert!((r.gamma_eff_mhz - 125.0).abs() / 125.0 < 0.02, "{}", r.gamma_eff_mhz);
        let beta_model = presets::m1_model();
        let r2 = effective_emitter_response(&beta_model, 0, 0.0).unwrap();
        assert_relative_eq!(r2.gamma_eff_mhz, 132.0, max_relative = 1e-9);
    }

    #[test]
    fn time_oracle_matches_closed_form_and_solver() {
        let model = resonator_only();
        let state = time_domain_oracle(&model, presets::RESONANCE_THZ, 50.0, 1e-9).unwrap();
        let k1 = model.mode_pairs[0].external_coupling_ghz[0];
        let kappa = model.mode_pairs[0].total_linewidth_ghz;
        assert_relative_eq!(
            state.cw[0].norm_sqr(),
            4.0 * k1 / (kappa * kappa),
            max_relative = 1e-6
        );

        let m1 = presets::m1_gamma125_model();
        for det in [-0.3_f64, 0.0, 0.45] {
            let f = presets::RESONANCE_THZ + units::ghz_to_thz(det);
            let oracle = time_domain_oracle(&m1, f, 400.0, 1e-9).unwrap();
            let direct = solve_at(&m1, f);
            for (u, v) in oracle
                .cw
                .iter()
                .chain(&oracle.ccw)
                .chain(&oracle.coherences)
                .zip(direct.cw.iter().chain(&direct.ccw).chain(&direct.coherences))
            {
                assert!((u - v).norm() <= 1e-6 * v.norm().max(1e-6), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn time_oracle_zero_drive() {
        let mut model = resonator_only();
        model.topology.input.direction = Direction::Cw;
        model.mode_pairs[0].external_coupling_ghz = [0.0, presets::external_coupling_ghz()];
        model.mode_pairs[0].intrinsic_loss_ghz =
            model.mode_pairs[0].total_linewidth_ghz - presets::external_coupling_ghz();
        let state = time_domain_oracle(&model, presets::RESONANCE_THZ, 10.0, 1e-9).unwrap();
        assert_eq!(state.cw[0], Complex64::default());
    }

    #[test]
    fn time_oracle_reports_non_convergence() {
        let model = presets::m1_model();
        let err = time_domain_oracle(&model, presets::RESONANCE_THZ, 0.01, 1e-12).unwrap_err();
        assert!(matches!(err, Error::Numerics(_)));
    }

    #[test]
    fn passivity_closes_for_presets() {
        for model in [
            resonator_only(),
            presets::resonator_model(),
            presets::m1_model(),
            presets::m1_two_pair_model(),
            presets::resonant_pair_model(),
        ] {
            for det in [-40.0, -3.0, 0.0, 1.0, 55.0] {
                let f = presets::RESONANCE_THZ + units::ghz_to_thz(det);
                let state = solve_at(&model, f);
                let report = passivity_report(&model, &state);
                assert!(
                    report.relative_imbalance < 1e-9,
                    "imbalance {} at det {det}",
                    report.relative_imbalance
                );
            }
        }
    }

    #[test]
    fn interferometer_conserves_its_inputs() {
        let model = presets::m1_model();
        let state = solve_at(&model, presets::RESONANCE_THZ + units::ghz_to_thz(0.02));
        let i1 = output_amplitude(&model, &state, Port::Interferometer1).unwrap();
        let i2 = output_amplitude(&model, &state, Port::Interferometer2).unwrap();
        let r = model.topology.interferometer_reference.amplitude_ratio;
        let y = out_coupled(&model, &state, 1, Direction::Ccw);
        assert_relative_eq!(
            i1.norm_sqr() + i2.norm_sqr(),
            r * r + y.norm_sqr(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn unknown_port_is_an_interface_error() {
        assert!(matches!(Port::parse("dorp"), Err(Error::Interface(_))));
        let model = presets::m1_model();
        let state = solve_at(&model, presets::RESONANCE_THZ);
        assert!(matches!(
            output_amplitude(&model, &state, Port::Input),
            Err(Error::Interface(_))
        ));
        assert!(matches!(
            port_spectrum(&model, &[]),
            Err(Error::Interface(_))
        ));
    }

    #[test]
    fn second_order_label_counts() {
        let model = presets::m1_two_pair_model();
        assert_eq!(model.mode_pairs[1].label, ModeLabel::SecondOrder);
        assert_eq!(model.fundamental_index(), 0);
    }
}
