//! System parameters and Hamiltonian builders.
//!
//! The physical setting: a driven two-level control atom and one or more
//! `N`-atom ensembles couple to a common cavity mode with strength `g`. The
//! cavity is detuned by `delta_c` from the shared atomic transition and the
//! classical drive on the control atom (Rabi frequency `rabi`) is detuned by
//! `delta_d`. In the regime `delta_c >> g sqrt(N (nbar + 1))` and
//! `delta_d >> rabi` neither the cavity nor the drive exchanges real quanta;
//! both act in second order and produce the static effective Hamiltonians
//! built here:
//!
//! - [`FullModel`]: the unapproximated interaction-picture Hamiltonian
//!   `H(t) = rabi (Sc+ e^{i delta_d t} + h.c.)
//!   + g e^{-i delta_c t} a+ (Sc- + sum_j S_j-) + h.c.`,
//!   kept time-dependent for convergence studies.
//! - [`effective_vacuum_hamiltonian`]: the cavity eliminated at second order
//!   with the cavity in vacuum, acting on control + collective spin.
//! - [`jcm_hamiltonian`]: the same model after bosonizing the collective
//!   spin, which is a Jaynes-Cummings Hamiltonian for the collective mode.
//! - [`dispersive_mode_hamiltonian`]: the control-mode coupling pushed to
//!   second order (exchange suppressed by a large effective detuning).
//! - [`multi_sample_hamiltonian`]: several ensembles sharing the cavity;
//!   only the bright combination of their modes couples to the control.
//!
//! All frequencies are angular (rad/s); times are seconds. The builders are
//! deterministic: equal inputs produce identical sparse operators.

use crate::dynamics::TimeDependentHamiltonian;
use crate::hilbert::{
    boson_annihilation, collective_lowering, control_excited_projector,
    control_ground_projector, control_lowering, control_raising, control_sz, excitation_number,
    mode_lowering, Factor, Operator, SpaceDescriptor,
};
use crate::{Error, Result, C64};

/// Soft lower bound on the detuning ratios for the second-order picture.
/// Ratios below this produce a [`RegimeWarning`] but never an error.
pub const REGIME_RATIO_MIN: f64 = 10.0;

/// A regime condition that is satisfied only marginally (or not at all).
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeWarning {
    /// Which scale separation is marginal.
    pub condition: String,
    /// The achieved ratio.
    pub ratio: f64,
    /// The soft threshold it was compared against.
    pub threshold: f64,
}

impl std::fmt::Display for RegimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} ratio {:.3} below {:.0}",
            self.condition, self.ratio, self.threshold
        )
    }
}

/// Microscopic parameters of the driven cavity model.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Atom-cavity coupling `g` (each atom, control and ensemble alike).
    pub g: f64,
    /// Rabi frequency of the classical drive on the control atom.
    pub rabi: f64,
    /// Detuning of the atomic transition from the cavity, `delta_c`.
    pub cavity_detuning: f64,
    /// Detuning of the atomic transition from the drive, `delta_d`.
    pub drive_detuning: f64,
    /// Atoms per ensemble, `N`.
    pub atoms_per_sample: usize,
    /// Number of ensembles sharing the cavity.
    pub samples: usize,
    /// Mean cavity photon number assumed in the regime checks (the cavity
    /// stays in vacuum in all protocols here, so usually 0).
    pub mean_cavity_photons: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::InvalidParameter("g must be positive".into()));
        }
        if self.rabi < 0.0 || !self.rabi.is_finite() {
            return Err(Error::InvalidParameter("rabi must be finite and >= 0".into()));
        }
        if self.cavity_detuning == 0.0 || !self.cavity_detuning.is_finite() {
            return Err(Error::InvalidParameter("cavity_detuning must be nonzero".into()));
        }
        if self.drive_detuning == 0.0 || !self.drive_detuning.is_finite() {
            return Err(Error::InvalidParameter("drive_detuning must be nonzero".into()));
        }
        if self.atoms_per_sample == 0 {
            return Err(Error::InvalidParameter("atoms_per_sample must be >= 1".into()));
        }
        if self.samples == 0 {
            return Err(Error::InvalidParameter("samples must be >= 1".into()));
        }
        if self.mean_cavity_photons < 0.0 || !self.mean_cavity_photons.is_finite() {
            return Err(Error::InvalidParameter("mean_cavity_photons must be >= 0".into()));
        }
        Ok(())
    }

    /// Second-order (effective) parameters implied by these settings.
    pub fn effective(&self) -> Result<EffectiveParams> {
        self.validate()?;
        EffectiveParams::new(
            self.g * self.g / self.cavity_detuning,
            self.rabi * self.rabi / self.drive_detuning,
            self.atoms_per_sample,
            self.samples,
        )
    }
}

/// Parameters of the second-order effective models.
///
/// Derived quantities are stored, not recomputed by callers:
/// `mode_coupling = sqrt(N) * cavity_shift` is the control-mode exchange
/// rate and `dispersive_detuning = 2 drive_shift - (n N - 1) cavity_shift`
/// is the mismatch between the control transition (Stark-shifted by the
/// drive) and the collective mode. The exchange is resonant when the
/// dispersive detuning vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveParams {
    /// Per-atom cavity Stark/exchange scale `g^2 / delta_c`.
    pub cavity_shift: f64,
    /// Drive-induced Stark scale `rabi^2 / delta_d`.
    pub drive_shift: f64,
    /// Atoms per ensemble, `N`.
    pub atoms_per_sample: usize,
    /// Number of ensembles.
    pub samples: usize,
    /// Control-mode exchange rate `sqrt(N) * cavity_shift`.
    pub mode_coupling: f64,
    /// `2 drive_shift - (samples * N - 1) cavity_shift`.
    pub dispersive_detuning: f64,
}

impl EffectiveParams {
    pub fn new(
        cavity_shift: f64,
        drive_shift: f64,
        atoms_per_sample: usize,
        samples: usize,
    ) -> Result<Self> {
        if cavity_shift == 0.0 || !cavity_shift.is_finite() {
            return Err(Error::InvalidParameter("cavity_shift must be nonzero".into()));
        }
        if !drive_shift.is_finite() {
            return Err(Error::InvalidParameter("drive_shift must be finite".into()));
        }
        if atoms_per_sample == 0 || samples == 0 {
            return Err(Error::InvalidParameter(
                "atoms_per_sample and samples must be >= 1".into(),
            ));
        }
        let n = atoms_per_sample as f64;
        let total = (samples * atoms_per_sample) as f64;
        Ok(EffectiveParams {
            cavity_shift,
            drive_shift,
            atoms_per_sample,
            samples,
            mode_coupling: n.sqrt() * cavity_shift,
            dispersive_detuning: 2.0 * drive_shift - (total - 1.0) * cavity_shift,
        })
    }

    /// Oscillation frequency of the collective mode in the effective models,
    /// `sqrt(N) * mode_coupling = N * cavity_shift`.
    pub fn mode_frequency(&self) -> f64 {
        (self.atoms_per_sample as f64).sqrt() * self.mode_coupling
    }

    /// Drive shift that puts the control-mode exchange on resonance for the
    /// stored sample count: `(n N - 1) cavity_shift / 2`.
    pub fn resonant_drive_shift(&self) -> f64 {
        let total = (self.samples * self.atoms_per_sample) as f64;
        (total - 1.0) * self.cavity_shift / 2.0
    }

    /// Effective parameters pinned to the exchange resonance: the drive shift
    /// is chosen so the dispersive detuning vanishes exactly.
    pub fn resonant(cavity_shift: f64, atoms_per_sample: usize, samples: usize) -> Result<Self> {
        let total = (samples * atoms_per_sample) as f64;
        Self::new(cavity_shift, (total - 1.0) * cavity_shift / 2.0, atoms_per_sample, samples)
    }

    /// Resonant effective parameters specified through the exchange coupling
    /// `mode_coupling = sqrt(N) cavity_shift` instead of the shift itself.
    /// Convenient when the coupling comes from a measured or derived rate.
    pub fn resonant_from_mode_coupling(
        mode_coupling: f64,
        atoms_per_sample: usize,
        samples: usize,
    ) -> Result<Self> {
        if atoms_per_sample == 0 {
            return Err(Error::InvalidParameter("atoms_per_sample must be >= 1".into()));
        }
        Self::resonant(mode_coupling / (atoms_per_sample as f64).sqrt(), atoms_per_sample, samples)
    }
}

/// Returns a copy of `params` with the drive Rabi frequency set so the
/// control-mode exchange is resonant: `drive_shift = (n N - 1) cavity_shift
/// / 2`, i.e. `rabi = sqrt(drive_shift * delta_d)`.
pub fn resonance_drive(params: &SystemParams) -> Result<SystemParams> {
    params.validate()?;
    let eff = params.effective()?;
    let target = eff.resonant_drive_shift();
    let square = target * params.drive_detuning;
    if square < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "resonant drive needs drive_shift {target:.3e} with detuning {:.3e}: \
             no real Rabi frequency exists (detunings of opposite sign)",
            params.drive_detuning
        )));
    }
    let mut tuned = params.clone();
    tuned.rabi = square.sqrt();
    Ok(tuned)
}

/// Scale-separation warnings for the second-order elimination: the cavity
/// detuning against the collectively enhanced coupling, and the drive
/// detuning against the Rabi frequency.
pub fn regime_warnings(params: &SystemParams) -> Vec<RegimeWarning> {
    let mut warnings = Vec::new();
    let total_atoms = (params.samples * params.atoms_per_sample) as f64;
    let collective = params.g * (total_atoms * (params.mean_cavity_photons + 1.0)).sqrt();
    let ratio = params.cavity_detuning.abs() / collective;
    if ratio < REGIME_RATIO_MIN {
        warnings.push(RegimeWarning {
            condition: "cavity detuning vs collective coupling g sqrt(N (nbar + 1))".into(),
            ratio,
            threshold: REGIME_RATIO_MIN,
        });
    }
    if params.rabi > 0.0 {
        let ratio = params.drive_detuning.abs() / params.rabi;
        if ratio < REGIME_RATIO_MIN {
            warnings.push(RegimeWarning {
                condition: "drive detuning vs Rabi frequency".into(),
                ratio,
                threshold: REGIME_RATIO_MIN,
            });
        }
    }
    warnings
}

/// Scale-separation warning for the dispersive control-mode model.
pub fn dispersive_regime_warnings(eff: &EffectiveParams) -> Vec<RegimeWarning> {
    let mut warnings = Vec::new();
    if eff.mode_coupling != 0.0 {
        let ratio = eff.dispersive_detuning.abs() / eff.mode_coupling.abs();
        if ratio < REGIME_RATIO_MIN {
            warnings.push(RegimeWarning {
                condition: "dispersive detuning vs mode coupling".into(),
                ratio,
                threshold: REGIME_RATIO_MIN,
            });
        }
    }
    warnings
}

/// The interaction-picture Hamiltonian of the driven cavity model, stored as
/// a sum of static sparse operators with harmonic coefficients
/// `H(t) = sum_k O_k e^{i omega_k t}` (conjugate pairs included explicitly,
/// so `H(t)` is Hermitian for every `t`).
#[derive(Debug, Clone)]
pub struct FullModel {
    space: SpaceDescriptor,
    terms: Vec<(Operator, f64)>,
}

impl FullModel {
    /// Builds the model on a space holding exactly one control qubit, one
    /// collective ensemble per sample, and one cavity factor.
    pub fn new(params: &SystemParams, space: &SpaceDescriptor) -> Result<Self> {
        params.validate()?;
        let control = space.unique_position("control qubit", |f| {
            matches!(f, Factor::ControlQubit)
        })?;
        let cavity = space.unique_position("cavity", |f| matches!(f, Factor::CavityFock { .. }))?;
        if !space.boson_positions().is_empty() {
            return Err(Error::InvalidSpace(
                "the time-dependent model uses ensemble factors, not pre-bosonized modes".into(),
            ));
        }
        let ensembles = space.ensemble_positions();
        if ensembles.len() != params.samples {
            return Err(Error::InvalidSpace(format!(
                "expected {} ensemble factor(s), found {}",
                params.samples,
                ensembles.len()
            )));
        }
        for &pos in &ensembles {
            if let Factor::CollectiveDicke { atoms, .. } = space.factor(pos)? {
                if atoms != params.atoms_per_sample {
                    return Err(Error::InvalidSpace(format!(
                        "ensemble at factor {pos} has {atoms} atoms, params say {}",
                        params.atoms_per_sample
                    )));
                }
            }
        }

        let rabi = C64::new(params.rabi, 0.0);
        let g = C64::new(params.g, 0.0);
        let drive_up = control_raising(space, control)?.scaled(rabi);
        let drive_down = control_lowering(space, control)?.scaled(rabi);

        // a+ (Sc- + sum_j S_j-)
        let mut lower_all = control_lowering(space, control)?;
        for &pos in &ensembles {
            lower_all = lower_all.add(&collective_lowering(space, pos)?)?;
        }
        let a_dag = boson_annihilation(space, cavity)?.adjoint();
        let cavity_down = a_dag.matmul(&lower_all)?.scaled(g);
        let cavity_up = cavity_down.adjoint();

        let terms = vec![
            (drive_up, params.drive_detuning),
            (drive_down, -params.drive_detuning),
            (cavity_down, -params.cavity_detuning),
            (cavity_up, params.cavity_detuning),
        ];
        Ok(FullModel { space: space.clone(), terms })
    }

    /// The harmonic terms `(O_k, omega_k)` with `H(t) = sum O_k e^{i omega_k t}`.
    pub fn terms(&self) -> &[(Operator, f64)] {
        &self.terms
    }
}

impl TimeDependentHamiltonian for FullModel {
    fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    fn at(&self, t: f64) -> Operator {
        let mut h = Operator::zero(self.space.clone());
        for (op, omega) in &self.terms {
            let phase = C64::new(0.0, omega * t).exp();
            h = h.add(&op.scaled(phase)).expect("terms share the space");
        }
        h
    }

    fn apply(&self, t: f64, x: &[C64], y: &mut [C64]) {
        y.fill(C64::new(0.0, 0.0));
        for (op, omega) in &self.terms {
            let phase = C64::new(0.0, omega * t).exp();
            op.apply_accumulate(phase, x, y);
        }
    }
}

fn control_and_single(
    space: &SpaceDescriptor,
    other: &'static str,
    pred: impl Fn(&Factor) -> bool,
) -> Result<(usize, usize)> {
    if space.factors().len() != 2 {
        return Err(Error::InvalidSpace(format!(
            "expected exactly [control qubit, {other}], got {} factors",
            space.factors().len()
        )));
    }
    let control = space.unique_position("control qubit", |f| matches!(f, Factor::ControlQubit))?;
    let mode = space.unique_position(other, pred)?;
    Ok((control, mode))
}

/// Cavity-eliminated Hamiltonian on `[control qubit, collective ensemble]`
/// with the cavity in vacuum (single ensemble):
///
/// `H = 2 drive_shift Sz_c + cavity_shift |e_c><e_c|
///  + cavity_shift (Sc+ S- + Sc- S+) + cavity_shift S+ S-`
///
/// `S+-` are the unnormalized collective operators. The last term carries
/// the ensemble's own photon-exchange Stark structure; on the Dicke ladder
/// `S+ S- |m> = m (N - m + 1) |m>`, which includes the excitation-number
/// shift that the bosonized model approximates by `N n_b`.
pub fn effective_vacuum_hamiltonian(
    eff: &EffectiveParams,
    space: &SpaceDescriptor,
) -> Result<Operator> {
    if eff.samples != 1 {
        return Err(Error::InvalidParameter(
            "the vacuum-cavity effective model covers a single ensemble".into(),
        ));
    }
    let (control, ensemble) =
        control_and_single(space, "collective ensemble", |f| {
            matches!(f, Factor::CollectiveDicke { .. })
        })?;
    if let Factor::CollectiveDicke { atoms, .. } = space.factor(ensemble)? {
        if atoms != eff.atoms_per_sample {
            return Err(Error::InvalidSpace(format!(
                "ensemble has {atoms} atoms, params say {}",
                eff.atoms_per_sample
            )));
        }
    }
    let lc = C64::new(eff.cavity_shift, 0.0);

    let sz = control_sz(space, control)?.scaled(C64::new(2.0 * eff.drive_shift, 0.0));
    let pe = control_excited_projector(space, control)?.scaled(lc);
    let s_minus = collective_lowering(space, ensemble)?;
    let s_plus = s_minus.adjoint();
    let flip = control_raising(space, control)?
        .matmul(&s_minus)?
        .add(&control_lowering(space, control)?.matmul(&s_plus)?)?
        .scaled(lc);
    let ensemble_stark = s_plus.matmul(&s_minus)?.scaled(lc);

    sz.add(&pe)?.add(&flip)?.add(&ensemble_stark)
}

/// Bosonized effective Hamiltonian on `[control qubit, boson mode]`:
///
/// `H = (2 drive_shift + cavity_shift) Sz_c
///  + mode_frequency b+ b + mode_coupling (Sc+ b + Sc- b+)`
///
/// This is a Jaynes-Cummings model for the collective mode; the exchange is
/// resonant when `dispersive_detuning = 0`.
pub fn jcm_hamiltonian(eff: &EffectiveParams, space: &SpaceDescriptor) -> Result<Operator> {
    let (control, mode) =
        control_and_single(space, "boson mode", |f| matches!(f, Factor::BosonMode { .. }))?;
    let sz = control_sz(space, control)?
        .scaled(C64::new(2.0 * eff.drive_shift + eff.cavity_shift, 0.0));
    let number = excitation_number(space, mode)?.scaled(C64::new(eff.mode_frequency(), 0.0));
    let b = boson_annihilation(space, mode)?;
    let exchange = control_raising(space, control)?
        .matmul(&b)?
        .add(&control_lowering(space, control)?.matmul(&b.adjoint())?)?
        .scaled(C64::new(eff.mode_coupling, 0.0));
    sz.add(&number)?.add(&exchange)
}

/// Dispersive control-mode Hamiltonian on `[control qubit, boson mode]`,
/// valid when `|dispersive_detuning| >> |mode_coupling|`:
///
/// `H = (mode_coupling^2 / dispersive_detuning)
///      (|e_c><e_c| b b+  -  |g_c><g_c| b+ b)`
///
/// Both signs follow from pushing the exchange to second order; the
/// ground-state branch is light-shifted downward per quantum and the excited
/// branch upward per quantum plus one.
pub fn dispersive_mode_hamiltonian(
    eff: &EffectiveParams,
    space: &SpaceDescriptor,
) -> Result<Operator> {
    if eff.dispersive_detuning == 0.0 {
        return Err(Error::InvalidParameter(
            "dispersive model undefined on resonance (zero dispersive detuning)".into(),
        ));
    }
    let (control, mode) =
        control_and_single(space, "boson mode", |f| matches!(f, Factor::BosonMode { .. }))?;
    let chi = eff.mode_coupling * eff.mode_coupling / eff.dispersive_detuning;
    let b = boson_annihilation(space, mode)?;
    let n = excitation_number(space, mode)?;
    let nn = b.matmul(&b.adjoint())?; // b b+ = n + 1 on the truncated ladder interior
    let up = control_excited_projector(space, control)?.matmul(&nn)?;
    let down = control_ground_projector(space, control)?.matmul(&n)?;
    up.sub(&down).map(|h| h.scaled(C64::new(chi, 0.0)))
}

/// Effective Hamiltonian for several ensembles sharing the cavity, on
/// `[control qubit, mode_1, ..., mode_n]` (boson or collective factors):
///
/// `H = (2 drive_shift + cavity_shift) Sz_c
///  + mode_frequency sum_{j,k} b_j+ b_k
///  + mode_coupling (Sc+ sum_j b_j + h.c.)`
///
/// The cavity couples every ensemble to every other one, so only the bright
/// mode `(sum_j b_j)/sqrt(n)` couples to the control, with enhanced strength
/// `sqrt(n) mode_coupling` and frequency `n mode_frequency`.
pub fn multi_sample_hamiltonian(
    eff: &EffectiveParams,
    space: &SpaceDescriptor,
) -> Result<Operator> {
    let control = space.unique_position("control qubit", |f| matches!(f, Factor::ControlQubit))?;
    if !space.cavity_positions().is_empty() {
        return Err(Error::InvalidSpace(
            "the effective multi-ensemble model has no cavity factor".into(),
        ));
    }
    let modes: Vec<usize> = space.positions(|f| {
        matches!(f, Factor::BosonMode { .. } | Factor::CollectiveDicke { .. })
    });
    if modes.len() != eff.samples || eff.samples < 2 {
        return Err(Error::InvalidSpace(format!(
            "expected {} sample modes (>= 2), found {}",
            eff.samples,
            modes.len()
        )));
    }
    if modes.len() + 1 != space.factors().len() {
        return Err(Error::InvalidSpace("unexpected extra factors".into()));
    }

    let mut sum_b = Operator::zero(space.clone());
    for &pos in &modes {
        sum_b = sum_b.add(&mode_lowering(space, pos)?)?;
    }
    let sum_b_dag = sum_b.adjoint();

    let sz = control_sz(space, control)?
        .scaled(C64::new(2.0 * eff.drive_shift + eff.cavity_shift, 0.0));
    let hop = sum_b_dag
        .matmul(&sum_b)?
        .scaled(C64::new(eff.mode_frequency(), 0.0));
    let exchange = control_raising(space, control)?
        .matmul(&sum_b)?
        .add(&control_lowering(space, control)?.matmul(&sum_b_dag)?)?
        .scaled(C64::new(eff.mode_coupling, 0.0));
    sz.add(&hop)?.add(&exchange)
}

/// Inputs of the cavity-assisted Raman realization: each atom is driven on
/// one leg of a Raman pair by a classical field (Rabi frequency
/// `classical_rabi`) detuned by `one_photon_detuning + raman_detuning` from
/// the excited state, and on the other leg by the cavity (coupling
/// `cavity_g`) detuned by `one_photon_detuning`.
#[derive(Debug, Clone, PartialEq)]
pub struct RamanParams {
    /// Atom-cavity coupling on its Raman leg.
    pub cavity_g: f64,
    /// Classical-field Rabi frequency on the other leg.
    pub classical_rabi: f64,
    /// Detuning of the cavity leg from the electronic excited state.
    pub one_photon_detuning: f64,
    /// Two-photon (Raman) detuning between the effective ground states.
    pub raman_detuning: f64,
    /// Atoms in the ensemble.
    pub atoms: usize,
    /// Electronic excited-state linewidth.
    pub atomic_linewidth: f64,
    /// Cavity linewidth.
    pub cavity_linewidth: f64,
}

impl RamanParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("cavity_g", self.cavity_g),
            ("classical_rabi", self.classical_rabi),
            ("one_photon_detuning", self.one_photon_detuning),
            ("raman_detuning", self.raman_detuning),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        // Zero linewidths are allowed: they describe the decoherence-free
        // limit of the same realization.
        for (name, v) in [
            ("atomic_linewidth", self.atomic_linewidth),
            ("cavity_linewidth", self.cavity_linewidth),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0")));
            }
        }
        if self.atoms == 0 {
            return Err(Error::InvalidParameter("atoms must be >= 1".into()));
        }
        Ok(())
    }
}

/// Effective rates of the Raman realization.
#[derive(Debug, Clone, PartialEq)]
pub struct RamanEffective {
    /// Effective two-photon coupling `g' = (g A / 2)(1/(D + d) + 1/D)` with
    /// `A` the classical Rabi frequency, `D` the one-photon detuning, and
    /// `d` the Raman detuning.
    pub coupling: f64,
    /// Collective exchange rate `sqrt(N) g'^2 / d`.
    pub mode_coupling: f64,
    /// Residual spontaneous-emission rate `Gamma g^2 / D^2`.
    pub atom_decay: f64,
    /// Residual cavity-induced decay `kappa g'^2 / d^2`.
    pub cavity_decay: f64,
}

/// Second-order rates of the Raman realization.
pub fn raman_effective(params: &RamanParams) -> Result<RamanEffective> {
    params.validate()?;
    let big = params.one_photon_detuning;
    let small = params.raman_detuning;
    let coupling =
        params.cavity_g * params.classical_rabi / 2.0 * (1.0 / (big + small) + 1.0 / big);
    let mode_coupling = (params.atoms as f64).sqrt() * coupling * coupling / small;
    let atom_decay = params.atomic_linewidth * params.cavity_g * params.cavity_g / (big * big);
    let cavity_decay = params.cavity_linewidth * coupling * coupling / (small * small);
    Ok(RamanEffective { coupling, mode_coupling, atom_decay, cavity_decay })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{make_space, PureState};
    use approx::assert_abs_diff_eq;
    use num_complex::ComplexFloat;

    const TWO_PI: f64 = std::f64::consts::TAU;

    fn base_params() -> SystemParams {
        SystemParams {
            g: 1.0,
            rabi: 2.0,
            cavity_detuning: 100.0,
            drive_detuning: 80.0,
            atoms_per_sample: 100,
            samples: 1,
            mean_cavity_photons: 0.0,
        }
    }

    #[test]
    fn effective_parameter_arithmetic() {
        let eff = base_params().effective().unwrap();
        assert_abs_diff_eq!(eff.cavity_shift, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(eff.drive_shift, 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(eff.mode_coupling, 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(eff.mode_frequency(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            eff.dispersive_detuning,
            2.0 * 0.05 - 99.0 * 0.01,
            epsilon = 1e-15
        );
    }

    #[test]
    fn resonance_drive_hits_the_crossing() {
        let tuned = resonance_drive(&base_params()).unwrap();
        let eff = tuned.effective().unwrap();
        assert_abs_diff_eq!(eff.dispersive_detuning, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eff.drive_shift, 99.0 * 0.01 / 2.0, epsilon = 1e-12);

        let mut flipped = base_params();
        flipped.drive_detuning = -80.0;
        assert!(resonance_drive(&flipped).is_err());
    }

    #[test]
    fn full_model_matrix_elements() {
        let params = base_params();
        let space = make_space(vec![
            Factor::ControlQubit,
            Factor::CollectiveDicke { atoms: 100, m_max: 3 },
            Factor::CavityFock { n_max: 2 },
        ])
        .unwrap();
        let model = FullModel::new(&params, &space).unwrap();

        for &t in &[0.0, 0.37, 1.1] {
            let h = model.at(t);
            assert!(h.hermiticity_defect() < 1e-12, "non-Hermitian at t = {t}");
        }

        // <g, m=1, 0 photons | H(t) | g, m=0, 1 photon> = g sqrt(N) e^{i delta_c t}
        let t = 0.3;
        let h = model.at(t).to_dense();
        let row = space.compose(&[0, 1, 0]).unwrap();
        let col = space.compose(&[0, 0, 1]).unwrap();
        let expect = C64::new(0.0, params.cavity_detuning * t).exp() * 10.0;
        assert!((h[[row, col]] - expect).abs() < 1e-12);

        // Drive element: <e, 0, 0 | H(t) | g, 0, 0> = rabi e^{i delta_d t}
        let row = space.compose(&[1, 0, 0]).unwrap();
        let col = space.compose(&[0, 0, 0]).unwrap();
        let expect = C64::new(0.0, params.drive_detuning * t).exp() * params.rabi;
        assert!((h[[row, col]] - expect).abs() < 1e-12);
    }

    #[test]
    fn full_model_apply_matches_materialized_matrix() {
        let params = base_params();
        let space = make_space(vec![
            Factor::ControlQubit,
            Factor::CollectiveDicke { atoms: 100, m_max: 2 },
            Factor::CavityFock { n_max: 1 },
        ])
        .unwrap();
        let model = FullModel::new(&params, &space).unwrap();
        let dim = space.dim();
        let x: Vec<C64> = (0..dim)
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let t = 0.83;
        let mut fast = vec![C64::new(0.0, 0.0); dim];
        model.apply(t, &x, &mut fast);
        let mut slow = vec![C64::new(0.0, 0.0); dim];
        model.at(t).apply(&x, &mut slow);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuum_effective_elements() {
        let params = resonance_drive(&base_params()).unwrap();
        let eff = params.effective().unwrap();
        let n = params.atoms_per_sample as f64;
        let space = make_space(vec![
            Factor::ControlQubit,
            Factor::CollectiveDicke { atoms: 100, m_max: 4 },
        ])
        .unwrap();
        let h = effective_vacuum_hamiltonian(&eff, &space).unwrap().to_dense();

        let idx = |c: usize, m: usize| space.compose(&[c, m]).unwrap();
        // <e, 0|H|e, 0> = drive_shift + cavity_shift
        assert_abs_diff_eq!(
            h[[idx(1, 0), idx(1, 0)]].re,
            eff.drive_shift + eff.cavity_shift,
            epsilon = 1e-12
        );
        // <g, 1|H|e, 0> = cavity_shift sqrt(N)
        assert_abs_diff_eq!(
            h[[idx(0, 1), idx(1, 0)]].re,
            eff.cavity_shift * n.sqrt(),
            epsilon = 1e-12
        );
        // <g, m|H|g, m> = -drive_shift + cavity_shift m (N - m + 1)
        for m in 0..=4usize {
            assert_abs_diff_eq!(
                h[[idx(0, m), idx(0, m)]].re,
                -eff.drive_shift + eff.cavity_shift * (m as f64) * (n - m as f64 + 1.0),
                epsilon = 1e-12
            );
        }
        // Exchange between |e, 0> and |g, 1> is resonant once the drive is tuned.
        assert_abs_diff_eq!(
            h[[idx(1, 0), idx(1, 0)]].re,
            h[[idx(0, 1), idx(0, 1)]].re,
            epsilon = 1e-12
        );
    }

    #[test]
    fn jcm_ladder_structure() {
        let params = resonance_drive(&base_params()).unwrap();
        let eff = params.effective().unwrap();
        let space =
            make_space(vec![Factor::ControlQubit, Factor::BosonMode { n_max: 6 }]).unwrap();
        let h = jcm_hamiltonian(&eff, &space).unwrap();
        assert!(h.hermiticity_defect() < 1e-14);
        let hd = h.to_dense();
        let idx = |c: usize, n: usize| space.compose(&[c, n]).unwrap();
        for n in 0..=5usize {
            // coupling mode_coupling sqrt(n + 1) between |e, n> and |g, n+1>
            assert_abs_diff_eq!(
                hd[[idx(1, n), idx(0, n + 1)]].re,
                eff.mode_coupling * ((n + 1) as f64).sqrt(),
                epsilon = 1e-12
            );
            // pair degenerate at resonance
            assert_abs_diff_eq!(
                hd[[idx(1, n), idx(1, n)]].re,
                hd[[idx(0, n + 1), idx(0, n + 1)]].re,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn dispersive_mode_diagonal() {
        let eff = EffectiveParams::new(0.01, 0.3, 100, 1).unwrap();
        let chi = eff.mode_coupling * eff.mode_coupling / eff.dispersive_detuning;
        let space =
            make_space(vec![Factor::ControlQubit, Factor::BosonMode { n_max: 5 }]).unwrap();
        let h = dispersive_mode_hamiltonian(&eff, &space).unwrap().to_dense();
        let idx = |c: usize, n: usize| space.compose(&[c, n]).unwrap();
        for n in 0..=4usize {
            assert_abs_diff_eq!(
                h[[idx(0, n), idx(0, n)]].re,
                -chi * n as f64,
                epsilon = 1e-15
            );
            assert_abs_diff_eq!(
                h[[idx(1, n), idx(1, n)]].re,
                chi * (n as f64 + 1.0),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn multi_sample_bright_mode() {
        let eff = EffectiveParams::new(0.01, 0.3, 100, 2).unwrap();
        let mode = Factor::BosonMode { n_max: 2 };
        let space = make_space(vec![Factor::ControlQubit, mode, mode]).unwrap();
        let h = multi_sample_hamiltonian(&eff, &space).unwrap();
        assert!(h.hermiticity_defect() < 1e-14);

        // <W|H|e, vac> = sqrt(2) mode_coupling for the symmetric one-quantum state.
        let e_vac = PureState::basis(&space, &[1, 0, 0]).unwrap();
        let w = PureState::superpose(&[
            (C64::new(0.5f64.sqrt(), 0.0), &PureState::basis(&space, &[0, 1, 0]).unwrap()),
            (C64::new(0.5f64.sqrt(), 0.0), &PureState::basis(&space, &[0, 0, 1]).unwrap()),
        ])
        .unwrap();
        let hv = e_vac.applied(&h).unwrap();
        let elem = w.inner(&hv).unwrap();
        assert_abs_diff_eq!(elem.re, 2.0f64.sqrt() * eff.mode_coupling, epsilon = 1e-12);

        // Hopping between the two single-quantum states at mode_frequency.
        let s10 = PureState::basis(&space, &[0, 1, 0]).unwrap();
        let s01 = PureState::basis(&space, &[0, 0, 1]).unwrap();
        let elem = s01.inner(&s10.applied(&h).unwrap()).unwrap();
        assert_abs_diff_eq!(elem.re, eff.mode_frequency(), epsilon = 1e-12);

        // Three samples: the symmetric one-quantum state sits at
        // 3 mode_frequency (before the control Stark offset).
        let eff3 = EffectiveParams::new(0.01, 0.3, 100, 3).unwrap();
        let space3 = make_space(vec![Factor::ControlQubit, mode, mode, mode]).unwrap();
        let h3 = multi_sample_hamiltonian(&eff3, &space3).unwrap();
        let w3 = PureState::superpose(&[
            (C64::new((1f64 / 3.0).sqrt(), 0.0), &PureState::basis(&space3, &[0, 1, 0, 0]).unwrap()),
            (C64::new((1f64 / 3.0).sqrt(), 0.0), &PureState::basis(&space3, &[0, 0, 1, 0]).unwrap()),
            (C64::new((1f64 / 3.0).sqrt(), 0.0), &PureState::basis(&space3, &[0, 0, 0, 1]).unwrap()),
        ])
        .unwrap();
        let sz_offset = -(2.0 * eff3.drive_shift + eff3.cavity_shift) / 2.0;
        let energy = w3.inner(&w3.applied(&h3).unwrap()).unwrap().re;
        assert_abs_diff_eq!(energy - sz_offset, 3.0 * eff3.mode_frequency(), epsilon = 1e-12);
    }

    #[test]
    fn raman_rates() {
        let g = TWO_PI * 34e6;
        let params = RamanParams {
            cavity_g: g,
            classical_rabi: g,
            one_photon_detuning: 100.0 * g,
            raman_detuning: 10.0 * g,
            atoms: 10_000,
            atomic_linewidth: TWO_PI * 2.6e6,
            cavity_linewidth: TWO_PI * 4.1e6,
        };
        let eff = raman_effective(&params).unwrap();
        // g' = (g/2)(1/110 + 1/100) g = 21 g / 2200
        assert_abs_diff_eq!(eff.coupling / g, 21.0 / 2200.0, epsilon = 1e-15);
        // Gamma' = Gamma / 1e4 exactly for one_photon_detuning = 100 g
        assert_abs_diff_eq!(eff.atom_decay, TWO_PI * 260.0, epsilon = 1e-9);
        // epsilon = sqrt(N) g'^2 / d
        let expect = 100.0 * eff.coupling * eff.coupling / (10.0 * g);
        assert_abs_diff_eq!(eff.mode_coupling, expect, epsilon = 1e-9);
    }

    #[test]
    fn warnings_flag_marginal_regimes() {
        let mut params = base_params();
        assert!(regime_warnings(&params).is_empty());
        params.cavity_detuning = 20.0; // g sqrt(N) = 10, ratio 2
        let w = regime_warnings(&params);
        assert_eq!(w.len(), 1);
        assert_abs_diff_eq!(w[0].ratio, 2.0, epsilon = 1e-12);
        params.rabi = 30.0; // ratio 80/30 < 10
        assert_eq!(regime_warnings(&params).len(), 2);
    }

    #[test]
    fn builders_reject_malformed_spaces() {
        let params = base_params();
        let eff = params.effective().unwrap();
        let no_cavity = make_space(vec![
            Factor::ControlQubit,
            Factor::CollectiveDicke { atoms: 100, m_max: 2 },
        ])
        .unwrap();
        assert!(FullModel::new(&params, &no_cavity).is_err());

        let wrong_kind = make_space(vec![
            Factor::ControlQubit,
            Factor::CollectiveDicke { atoms: 100, m_max: 2 },
        ])
        .unwrap();
        assert!(jcm_hamiltonian(&eff, &wrong_kind).is_err());

        let one_mode =
            make_space(vec![Factor::ControlQubit, Factor::BosonMode { n_max: 2 }]).unwrap();
        assert!(multi_sample_hamiltonian(&eff, &one_mode).is_err());
    }
}
