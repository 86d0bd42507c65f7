//! Time evolution engines.
//!
//! Three propagation paths, chosen by what the generator looks like:
//!
//! - [`Spectral`]: exact propagation of a static Hermitian operator by
//!   eigendecomposition. Also provides the dense unitary `e^{-i H t}` used
//!   for displacement operators. Capped at [`SPECTRAL_DIM_CAP`].
//! - [`propagate_rk4`]: fixed-step fourth-order Runge-Kutta for explicitly
//!   time-dependent Hamiltonians (the [`TimeDependentHamiltonian`] trait).
//!   The state is renormalized each step and the accumulated norm drift is
//!   reported, so integrator error is visible rather than silently absorbed.
//! - [`lindblad_evolve`]: fixed-step RK4 for the Lindblad master equation on
//!   a dense density matrix, with Hermiticity restored each step and trace
//!   and positivity checked against hard limits. Capped at
//!   [`LINDBLAD_DIM_CAP`].
//!
//! [`jcm_analytic`] gives the closed-form solution of the resonant
//! control-mode exchange inside one excitation doublet; it is the oracle the
//! numerical paths are tested against.

use ndarray as nd;
use ndarray_linalg::{Eigh, UPLO};

use crate::hilbert::{DensityMatrix, Factor, Operator, PureState, SpaceDescriptor};
use crate::model::EffectiveParams;
use crate::{Error, Result, C64};

/// Largest dimension accepted by the eigendecomposition-based propagator.
pub const SPECTRAL_DIM_CAP: usize = 4096;

/// Largest dimension accepted by the density-matrix integrator.
pub const LINDBLAD_DIM_CAP: usize = 512;

pub(crate) fn eigh(m: &nd::Array2<C64>) -> Result<(nd::Array1<f64>, nd::Array2<C64>)> {
    let (vals, mut vecs) = m.eigh(UPLO::Lower).map_err(|e| Error::Linalg(e.to_string()))?;
    // LAPACK reads our row-major buffer as its transpose, so for a complex
    // Hermitian input the returned columns can be eigenvectors of the
    // conjugate matrix instead. Real symmetric inputs are unaffected, which
    // makes the flip easy to miss; test one column's residual and conjugate
    // everything if that fixes it.
    let dim = m.nrows();
    if dim > 0 {
        let k = vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap();
        let residual = |conjugate: bool| -> f64 {
            let mut worst = 0.0f64;
            for i in 0..dim {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..dim {
                    let v = if conjugate { vecs[[j, k]].conj() } else { vecs[[j, k]] };
                    acc += m[[i, j]] * v;
                }
                let v = if conjugate { vecs[[i, k]].conj() } else { vecs[[i, k]] };
                worst = worst.max((acc - v * vals[k]).norm());
            }
            worst
        };
        if residual(true) < residual(false) {
            vecs.mapv_inplace(|v| v.conj());
        }
    }
    Ok((vals, vecs))
}

/// Exact propagator for a static Hermitian generator, built once and
/// evaluated at arbitrary times.
#[derive(Debug, Clone)]
pub struct Spectral {
    space: SpaceDescriptor,
    vals: nd::Array1<f64>,
    vecs: nd::Array2<C64>,
}

impl Spectral {
    pub fn new(h: &Operator) -> Result<Self> {
        let dim = h.dim();
        if dim > SPECTRAL_DIM_CAP {
            return Err(Error::DimensionCap {
                dim,
                what: "spectral propagator",
                cap: SPECTRAL_DIM_CAP,
            });
        }
        let scale = h.max_abs_entry();
        if scale > 0.0 && h.hermiticity_defect() > 1e-9 * scale {
            return Err(Error::InvalidParameter(
                "spectral propagation needs a Hermitian generator".into(),
            ));
        }
        let (vals, vecs) = eigh(&h.to_dense())?;
        Ok(Spectral { space: h.space().clone(), vals, vecs })
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn eigenvalues(&self) -> &nd::Array1<f64> {
        &self.vals
    }

    /// `e^{-i H t} |state>`.
    pub fn evolve(&self, state: &PureState, t: f64) -> Result<PureState> {
        if state.space() != &self.space {
            return Err(Error::SpaceMismatch("spectral evolution".into()));
        }
        let dim = self.space.dim();
        let psi = state.amplitudes();
        let mut coeff = vec![C64::new(0.0, 0.0); dim];
        for k in 0..dim {
            let mut acc = C64::new(0.0, 0.0);
            for (i, p) in psi.iter().enumerate() {
                acc += self.vecs[[i, k]].conj() * p;
            }
            coeff[k] = acc * C64::new(0.0, -self.vals[k] * t).exp();
        }
        let mut out = vec![C64::new(0.0, 0.0); dim];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (k, c) in coeff.iter().enumerate() {
                acc += self.vecs[[i, k]] * c;
            }
            *o = acc;
        }
        PureState::new(self.space.clone(), out)
    }

    /// The dense unitary `e^{-i H t}`.
    pub fn unitary(&self, t: f64) -> nd::Array2<C64> {
        let dim = self.space.dim();
        let mut scaled = self.vecs.clone();
        for k in 0..dim {
            let phase = C64::new(0.0, -self.vals[k] * t).exp();
            for i in 0..dim {
                scaled[[i, k]] *= phase;
            }
        }
        let mut adj = nd::Array2::zeros((dim, dim));
        for i in 0..dim {
            for k in 0..dim {
                adj[[k, i]] = self.vecs[[i, k]].conj();
            }
        }
        scaled.dot(&adj)
    }
}

/// `e^{-i H t} |state>` for a static Hermitian `h`; builds the propagator
/// internally. Use [`Spectral`] directly when evolving to many times.
pub fn propagate_static(h: &Operator, state: &PureState, t: f64) -> Result<PureState> {
    Spectral::new(h)?.evolve(state, t)
}

/// A Hamiltonian with explicit time dependence, exposed both as a
/// materialized sparse operator (for inspection) and as a fast
/// matrix-vector product (for integration).
pub trait TimeDependentHamiltonian {
    fn space(&self) -> &SpaceDescriptor;
    fn at(&self, t: f64) -> Operator;
    /// `y = H(t) x`. Overwrites `y`.
    fn apply(&self, t: f64, x: &[C64], y: &mut [C64]);
}

/// A static operator viewed through the time-dependent interface, mostly for
/// step-doubling checks that reuse the RK4 path.
#[derive(Debug, Clone)]
pub struct StaticHamiltonian(pub Operator);

impl TimeDependentHamiltonian for StaticHamiltonian {
    fn space(&self) -> &SpaceDescriptor {
        self.0.space()
    }

    fn at(&self, _t: f64) -> Operator {
        self.0.clone()
    }

    fn apply(&self, _t: f64, x: &[C64], y: &mut [C64]) {
        self.0.apply(x, y);
    }
}

/// Settings for [`propagate_rk4`].
#[derive(Debug, Clone)]
pub struct Rk4Options {
    /// Requested step; the actual step is shrunk so the snapshot times and
    /// the final time land exactly on step boundaries.
    pub dt: f64,
    /// Number of evenly spaced snapshots after `t = 0` (the last one is
    /// `t_final`). `0` records only the final state.
    pub snapshots: usize,
    /// Hard limit on the accumulated per-step norm drift; exceeding it is a
    /// [`Error::NonConverged`]. `None` only records the drift.
    pub norm_drift_limit: Option<f64>,
}

impl Rk4Options {
    pub fn new(dt: f64) -> Self {
        Rk4Options { dt, snapshots: 0, norm_drift_limit: None }
    }
}

/// Outcome of an RK4 propagation.
#[derive(Debug, Clone)]
pub struct PropagationReport {
    /// Snapshot times, starting at `t = 0`.
    pub times: Vec<f64>,
    /// Normalized states at `times`.
    pub states: Vec<PureState>,
    pub final_state: PureState,
    /// Sum over steps of `|1 - norm|` before renormalization.
    pub norm_drift: f64,
    pub steps: usize,
    /// The step actually used.
    pub dt: f64,
}

fn scale_to_derivative(buf: &mut [C64]) {
    // psi' = -i H psi: multiply H psi by -i in place.
    for v in buf.iter_mut() {
        *v = C64::new(v.im, -v.re);
    }
}

/// Fixed-step RK4 integration of the Schrodinger equation
/// `psi' = -i H(t) psi` from `t = 0` to `t_final`.
pub fn propagate_rk4(
    h: &dyn TimeDependentHamiltonian,
    state0: &PureState,
    t_final: f64,
    opts: &Rk4Options,
) -> Result<PropagationReport> {
    if state0.space() != h.space() {
        return Err(Error::SpaceMismatch("RK4 propagation".into()));
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter("t_final must be finite and >= 0".into()));
    }
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    let psi0 = state0.normalized()?;
    if t_final == 0.0 {
        return Ok(PropagationReport {
            times: vec![0.0],
            states: vec![psi0.clone()],
            final_state: psi0,
            norm_drift: 0.0,
            steps: 0,
            dt: opts.dt,
        });
    }

    let snapshots = opts.snapshots.max(1);
    let steps_per = ((t_final / (opts.dt * snapshots as f64)).ceil() as usize).max(1);
    let steps = steps_per * snapshots;
    let dt = t_final / steps as f64;

    let dim = psi0.space().dim();
    let mut psi: Vec<C64> = psi0.amplitudes().to_vec();
    let mut k1 = vec![C64::new(0.0, 0.0); dim];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();

    let mut times = vec![0.0];
    let mut states = vec![psi0.clone()];
    let mut drift = 0.0f64;

    for step in 0..steps {
        let t = step as f64 * dt;

        h.apply(t, &psi, &mut k1);
        scale_to_derivative(&mut k1);

        for i in 0..dim {
            tmp[i] = psi[i] + k1[i] * (dt / 2.0);
        }
        h.apply(t + dt / 2.0, &tmp, &mut k2);
        scale_to_derivative(&mut k2);

        for i in 0..dim {
            tmp[i] = psi[i] + k2[i] * (dt / 2.0);
        }
        h.apply(t + dt / 2.0, &tmp, &mut k3);
        scale_to_derivative(&mut k3);

        for i in 0..dim {
            tmp[i] = psi[i] + k3[i] * dt;
        }
        h.apply(t + dt, &tmp, &mut k4);
        scale_to_derivative(&mut k4);

        for i in 0..dim {
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }

        let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        drift += (1.0 - norm).abs();
        let inv = 1.0 / norm;
        for v in psi.iter_mut() {
            *v *= inv;
        }

        if (step + 1) % steps_per == 0 {
            times.push((step + 1) as f64 * dt);
            states.push(PureState::new(psi0.space().clone(), psi.clone())?);
        }
    }

    if let Some(limit) = opts.norm_drift_limit {
        if drift > limit {
            return Err(Error::NonConverged(format!(
                "norm drift {drift:.3e} exceeds limit {limit:.3e}; reduce dt"
            )));
        }
    }

    let final_state = states.last().expect("at least one snapshot").clone();
    Ok(PropagationReport { times, states, final_state, norm_drift: drift, steps, dt })
}

/// Initial condition for the closed-form resonant exchange solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JcmBranch {
    /// `|g, 0>`: decoupled, picks up only the control Stark phase.
    GroundVacuum,
    /// `|e, n>`.
    Excited(usize),
    /// `|g, n + 1>` (the partner of `|e, n>` in the same doublet).
    GroundAbove(usize),
}

/// Closed-form evolution of one doublet of the bosonized control-mode
/// Hamiltonian at exact resonance (`dispersive_detuning = 0`):
///
/// `|e, n>   -> e^{-i w (n + 1/2) t} [ cos(r t) |e, n> - i sin(r t) |g, n+1> ]`
/// `|g, n+1> -> e^{-i w (n + 1/2) t} [ -i sin(r t) |e, n> + cos(r t) |g, n+1> ]`
///
/// with `w = mode_frequency` and `r = mode_coupling sqrt(n + 1)`; `|g, 0>`
/// only acquires `e^{+i w t / 2}`. The space must be
/// `[control qubit, boson mode]` in either order.
pub fn jcm_analytic(
    eff: &EffectiveParams,
    space: &SpaceDescriptor,
    branch: JcmBranch,
    t: f64,
) -> Result<PureState> {
    if space.factors().len() != 2 {
        return Err(Error::InvalidSpace(
            "analytic exchange needs exactly [control qubit, boson mode]".into(),
        ));
    }
    let control = space.unique_position("control qubit", |f| matches!(f, Factor::ControlQubit))?;
    let mode = space.unique_position("boson mode", |f| matches!(f, Factor::BosonMode { .. }))?;
    let n_max = match space.factor(mode)? {
        Factor::BosonMode { n_max } => n_max,
        _ => unreachable!(),
    };
    if eff.dispersive_detuning.abs() > 1e-9 * eff.cavity_shift.abs() {
        return Err(Error::InvalidParameter(format!(
            "analytic exchange solution holds on resonance; dispersive detuning is {:.3e}",
            eff.dispersive_detuning
        )));
    }

    let w = eff.mode_frequency();
    let mut amp = vec![C64::new(0.0, 0.0); space.dim()];
    let mut set = |c: usize, n: usize, v: C64| -> Result<()> {
        let mut idx = [0usize; 2];
        idx[control] = c;
        idx[mode] = n;
        amp[space.compose(&idx)?] = v;
        Ok(())
    };

    match branch {
        JcmBranch::GroundVacuum => {
            set(0, 0, C64::new(0.0, w * t / 2.0).exp())?;
        }
        JcmBranch::Excited(n) | JcmBranch::GroundAbove(n) => {
            if n + 1 > n_max {
                return Err(Error::Truncation(format!(
                    "doublet ({n}, {}) above mode truncation n_max = {n_max}",
                    n + 1
                )));
            }
            let phase = C64::new(0.0, -w * (n as f64 + 0.5) * t).exp();
            let r = eff.mode_coupling * ((n + 1) as f64).sqrt();
            let c = C64::new((r * t).cos(), 0.0);
            let s = C64::new(0.0, -(r * t).sin());
            if matches!(branch, JcmBranch::Excited(_)) {
                set(1, n, phase * c)?;
                set(0, n + 1, phase * s)?;
            } else {
                set(1, n, phase * s)?;
                set(0, n + 1, phase * c)?;
            }
        }
    }
    PureState::new(space.clone(), amp)
}

/// One decay channel of a Lindblad master equation: jump operator `op`
/// applied at `rate` (the full linewidth multiplying `L rho L+ - ...`).
#[derive(Debug, Clone)]
pub struct CollapseChannel {
    pub op: Operator,
    pub rate: f64,
}

/// Settings for [`lindblad_evolve`].
#[derive(Debug, Clone)]
pub struct LindbladOptions {
    pub dt: f64,
    /// Snapshots after `t = 0`, as in [`Rk4Options::snapshots`].
    pub snapshots: usize,
    /// Hard limit on `max |Tr rho - 1|` over the run.
    pub trace_drift_limit: f64,
    /// How negative the smallest eigenvalue may go at the checkpoints
    /// (snapshot times and the final time) before the run is rejected.
    pub positivity_floor: f64,
}

impl LindbladOptions {
    pub fn new(dt: f64) -> Self {
        LindbladOptions {
            dt,
            snapshots: 0,
            trace_drift_limit: 1e-6,
            positivity_floor: 1e-7,
        }
    }
}

/// Outcome of a master-equation integration.
#[derive(Debug, Clone)]
pub struct LindbladReport {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub final_state: DensityMatrix,
    /// `max |Tr rho - 1|` seen over the run.
    pub trace_drift: f64,
    /// Smallest density-matrix eigenvalue seen at the checkpoints.
    pub min_eigenvalue: f64,
    pub steps: usize,
    pub dt: f64,
}

/// Fixed-step RK4 integration of
/// `rho' = -i [H, rho] + sum_k rate_k (L rho L+ - {L+ L, rho} / 2)`
/// from `t = 0` to `t_final`. `rho` is re-Hermitized every step; the trace
/// is monitored but never renormalized, so integrator error shows up as
/// drift instead of being hidden.
pub fn lindblad_evolve(
    h: &Operator,
    rho0: &DensityMatrix,
    channels: &[CollapseChannel],
    t_final: f64,
    opts: &LindbladOptions,
) -> Result<LindbladReport> {
    let space = rho0.space().clone();
    let dim = space.dim();
    if dim > LINDBLAD_DIM_CAP {
        return Err(Error::DimensionCap { dim, what: "master equation", cap: LINDBLAD_DIM_CAP });
    }
    if h.space() != &space {
        return Err(Error::SpaceMismatch("master equation Hamiltonian".into()));
    }
    let scale = h.max_abs_entry();
    if scale > 0.0 && h.hermiticity_defect() > 1e-9 * scale {
        return Err(Error::InvalidParameter(
            "master equation needs a Hermitian Hamiltonian".into(),
        ));
    }
    for ch in channels {
        if ch.op.space() != &space {
            return Err(Error::SpaceMismatch("collapse channel".into()));
        }
        if ch.rate < 0.0 || !ch.rate.is_finite() {
            return Err(Error::InvalidParameter("collapse rates must be >= 0".into()));
        }
    }
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Error::InvalidParameter("t_final must be finite and >= 0".into()));
    }
    if !(opts.dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }

    // Drift generator G = -i H - (1/2) sum rate L+ L, so that
    // rho' = G rho + rho G+ + sum (sqrt(rate) L) rho (sqrt(rate) L)+.
    let minus_i = C64::new(0.0, -1.0);
    let mut drift_gen = h.to_dense().mapv(|v| v * minus_i);
    let mut jumps: Vec<(nd::Array2<C64>, nd::Array2<C64>)> = Vec::new();
    for ch in channels {
        if ch.rate == 0.0 {
            continue;
        }
        let amp = ch.rate.sqrt();
        let l = ch.op.to_dense().mapv(|v| v * amp);
        let l_adj = adjoint_dense(&l);
        drift_gen = drift_gen - l_adj.dot(&l).mapv(|v| v * 0.5);
        jumps.push((l, l_adj));
    }
    let drift_adj = adjoint_dense(&drift_gen);

    let mut rho = rho0.clone();
    rho.symmetrize();
    let mut trace_drift = (rho.trace().re - 1.0).abs().max(rho.trace().im.abs());
    let mut min_eig = f64::INFINITY;

    let check_positivity = |rho: &DensityMatrix, min_eig: &mut f64, t: f64| -> Result<()> {
        let (vals, _) = eigh(rho.matrix())?;
        let low = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        *min_eig = min_eig.min(low);
        if low < -opts.positivity_floor {
            return Err(Error::NonConverged(format!(
                "density matrix eigenvalue {low:.3e} at t = {t:.3e}; reduce dt"
            )));
        }
        Ok(())
    };

    if t_final == 0.0 {
        check_positivity(&rho, &mut min_eig, 0.0)?;
        return Ok(LindbladReport {
            times: vec![0.0],
            states: vec![rho.clone()],
            final_state: rho,
            trace_drift,
            min_eigenvalue: min_eig,
            steps: 0,
            dt: opts.dt,
        });
    }

    let snapshots = opts.snapshots.max(1);
    let steps_per = ((t_final / (opts.dt * snapshots as f64)).ceil() as usize).max(1);
    let steps = steps_per * snapshots;
    let dt = t_final / steps as f64;

    let derivative = |rho: &nd::Array2<C64>| -> nd::Array2<C64> {
        let mut d = drift_gen.dot(rho) + rho.dot(&drift_adj);
        for (l, l_adj) in &jumps {
            d = d + l.dot(rho).dot(l_adj);
        }
        d
    };

    let mut times = vec![0.0];
    let mut states = vec![rho.clone()];
    let mut mat = rho.matrix().clone();

    for step in 0..steps {
        let k1 = derivative(&mat);
        let k2 = derivative(&(&mat + &k1.mapv(|v| v * (dt / 2.0))));
        let k3 = derivative(&(&mat + &k2.mapv(|v| v * (dt / 2.0))));
        let k4 = derivative(&(&mat + &k3.mapv(|v| v * dt)));
        mat = &mat
            + &(k1 + k2.mapv(|v| v * 2.0) + k3.mapv(|v| v * 2.0) + k4).mapv(|v| v * (dt / 6.0));

        // restore Hermiticity lost to roundoff
        for i in 0..dim {
            for j in i..dim {
                let avg = (mat[[i, j]] + mat[[j, i]].conj()) * 0.5;
                mat[[i, j]] = avg;
                mat[[j, i]] = avg.conj();
            }
        }

        let tr: C64 = (0..dim).map(|i| mat[[i, i]]).sum();
        trace_drift = trace_drift.max((tr.re - 1.0).abs().max(tr.im.abs()));
        if trace_drift > opts.trace_drift_limit {
            return Err(Error::NonConverged(format!(
                "trace drift {trace_drift:.3e} exceeds {:.3e} at step {step}; reduce dt",
                opts.trace_drift_limit
            )));
        }

        if (step + 1) % steps_per == 0 {
            let t = (step + 1) as f64 * dt;
            let snap = DensityMatrix::from_matrix(space.clone(), mat.clone())?;
            check_positivity(&snap, &mut min_eig, t)?;
            times.push(t);
            states.push(snap);
        }
    }

    let final_state = states.last().expect("at least one snapshot").clone();
    Ok(LindbladReport {
        times,
        states,
        final_state,
        trace_drift,
        min_eigenvalue: min_eig,
        steps,
        dt,
    })
}

fn adjoint_dense(m: &nd::Array2<C64>) -> nd::Array2<C64> {
    let (r, c) = m.dim();
    let mut out = nd::Array2::zeros((c, r));
    for i in 0..r {
        for j in 0..c {
            out[[j, i]] = m[[i, j]].conj();
        }
    }
    out
}
