//! State comparison and tomography-style observables: fidelities, reduced
//! states, entanglement entropy, and exact Wigner-function sampling for
//! single-mode states.
//!
//! Everything here is exact linear algebra on the truncated spaces (no
//! sampling noise); the protocols are tested against these quantities.

use ndarray as nd;

use crate::dynamics::{eigh, Spectral};
use crate::hilbert::{
    boson_annihilation, DensityMatrix, Factor, Operator, PureState, SpaceDescriptor,
};
use crate::{Error, Result, C64};

/// Eigenvalues below this are treated as exact zeros in entropies and
/// Uhlmann fidelities (they are truncation/roundoff artifacts).
const EIGENVALUE_FLOOR: f64 = 1e-12;

/// `|<a|b>|^2` for normalized pure states.
pub fn fidelity_pure(a: &PureState, b: &PureState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr())
}

/// `<psi| rho |psi>` for a normalized pure state against a density matrix.
pub fn fidelity_pure_mixed(rho: &DensityMatrix, psi: &PureState) -> Result<f64> {
    if rho.space() != psi.space() {
        return Err(Error::SpaceMismatch("pure-mixed fidelity".into()));
    }
    let amps = psi.amplitudes();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..amps.len() {
        if amps[i].norm_sqr() == 0.0 {
            continue;
        }
        for j in 0..amps.len() {
            acc += amps[i].conj() * rho.matrix()[[i, j]] * amps[j];
        }
    }
    Ok(acc.re.max(0.0))
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
///
/// Negative eigenvalues from roundoff are clamped to zero on both the square
/// root and the trace, so the result is always in `[0, 1]` up to roundoff.
pub fn fidelity_mixed(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.space() != sigma.space() {
        return Err(Error::SpaceMismatch("mixed-mixed fidelity".into()));
    }
    let dim = rho.dim();
    let (vals, vecs) = eigh(rho.matrix())?;
    // sqrt(rho) = V sqrt(diag) V+
    let mut scaled = vecs.clone();
    for k in 0..dim {
        let root = vals[k].max(0.0).sqrt();
        for i in 0..dim {
            scaled[[i, k]] *= root;
        }
    }
    let mut adj = nd::Array2::zeros((dim, dim));
    for i in 0..dim {
        for k in 0..dim {
            adj[[k, i]] = vecs[[i, k]].conj();
        }
    }
    let sqrt_rho = scaled.dot(&adj);
    let inner = sqrt_rho.dot(sigma.matrix()).dot(&sqrt_rho);
    let (m_vals, _) = eigh(&inner)?;
    let trace_root: f64 = m_vals.iter().map(|v| v.max(0.0).sqrt()).sum();
    Ok(trace_root * trace_root)
}

fn split_keep_env(
    space: &SpaceDescriptor,
    keep: &[usize],
) -> Result<(SpaceDescriptor, Vec<usize>, Vec<usize>)> {
    let n_factors = space.factors().len();
    if keep.is_empty() {
        return Err(Error::InvalidSpace("partial trace must keep at least one factor".into()));
    }
    for w in keep.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::InvalidSpace(
                "kept factors must be strictly increasing".into(),
            ));
        }
    }
    if *keep.last().unwrap() >= n_factors {
        return Err(Error::FactorOutOfRange {
            index: *keep.last().unwrap(),
            count: n_factors,
        });
    }
    let kept_factors: Vec<Factor> = keep.iter().map(|&i| space.factors()[i]).collect();
    let kept_space = SpaceDescriptor::new(kept_factors)?;

    // For each flat index of the full space, its flat index in the kept
    // space and a flat label over the traced-out factors.
    let dim = space.dim();
    let mut keep_of = Vec::with_capacity(dim);
    let mut env_of = Vec::with_capacity(dim);
    for flat in 0..dim {
        let parts = space.split(flat);
        let kept: Vec<usize> = keep.iter().map(|&i| parts[i]).collect();
        keep_of.push(kept_space.compose(&kept)?);
        let mut env = 0usize;
        for (i, &p) in parts.iter().enumerate() {
            if !keep.contains(&i) {
                env = env * space.factors()[i].dim() + p;
            }
        }
        env_of.push(env);
    }
    Ok((kept_space, keep_of, env_of))
}

/// Reduced density matrix of a pure state over the kept factors (strictly
/// increasing positions; the rest are traced out).
pub fn partial_trace_pure(state: &PureState, keep: &[usize]) -> Result<DensityMatrix> {
    let (kept_space, keep_of, env_of) = split_keep_env(state.space(), keep)?;
    let mut buckets: std::collections::BTreeMap<usize, Vec<(usize, C64)>> =
        std::collections::BTreeMap::new();
    for (flat, &a) in state.amplitudes().iter().enumerate() {
        if a.norm_sqr() == 0.0 {
            continue;
        }
        buckets.entry(env_of[flat]).or_default().push((keep_of[flat], a));
    }
    let mut mat = nd::Array2::zeros((kept_space.dim(), kept_space.dim()));
    for bucket in buckets.values() {
        for &(ki, ai) in bucket {
            for &(kj, aj) in bucket {
                mat[[ki, kj]] += ai * aj.conj();
            }
        }
    }
    DensityMatrix::from_matrix(kept_space, mat)
}

/// Reduced density matrix of a mixed state over the kept factors.
pub fn partial_trace_density(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let (kept_space, keep_of, env_of) = split_keep_env(rho.space(), keep)?;
    let mut buckets: std::collections::BTreeMap<usize, Vec<usize>> =
        std::collections::BTreeMap::new();
    for flat in 0..rho.dim() {
        buckets.entry(env_of[flat]).or_default().push(flat);
    }
    let mut mat = nd::Array2::zeros((kept_space.dim(), kept_space.dim()));
    for bucket in buckets.values() {
        for &i in bucket {
            for &j in bucket {
                mat[[keep_of[i], keep_of[j]]] += rho.matrix()[[i, j]];
            }
        }
    }
    DensityMatrix::from_matrix(kept_space, mat)
}

/// Von Neumann entropy in bits, `-sum_k p_k log2 p_k`, with eigenvalues
/// below the floor treated as zero.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    let (vals, _) = eigh(rho.matrix())?;
    let mut s = 0.0;
    for &p in vals.iter() {
        if p > EIGENVALUE_FLOOR {
            s -= p * p.log2();
        }
    }
    Ok(s)
}

/// Entanglement entropy (bits) of a pure state across the cut defined by
/// the kept factors.
pub fn entanglement_entropy(state: &PureState, keep: &[usize]) -> Result<f64> {
    von_neumann_entropy(&partial_trace_pure(state, keep)?)
}

/// How far a collective-ladder state is from the bosonic description:
/// `2 <m> / N`, the size of the leading correction to the ladder matrix
/// elements.
pub fn bosonization_defect(state: &PureState, factor: usize) -> Result<f64> {
    let atoms = match state.space().factor(factor)? {
        Factor::CollectiveDicke { atoms, .. } => atoms,
        _ => {
            return Err(Error::WrongFactorKind {
                index: factor,
                expected: "a collective ensemble",
            })
        }
    };
    let m = crate::hilbert::excitation_number(state.space(), factor)?;
    Ok(2.0 * m.expectation(state)?.re / atoms as f64)
}

/// Hermitian generator `K` of the displacement `D(beta) = e^{-i K}`
/// (`K = i beta b+ - i beta* b`) acting on the bosonic factor `factor`.
/// Exponentiate with [`Spectral::unitary`] or apply with
/// [`Spectral::evolve`] at `t = 1`.
pub fn displacement_generator(
    space: &SpaceDescriptor,
    factor: usize,
    beta: C64,
) -> Result<Operator> {
    match space.factor(factor)? {
        Factor::BosonMode { .. } | Factor::CavityFock { .. } => {}
        _ => {
            return Err(Error::WrongFactorKind { index: factor, expected: "a bosonic factor" })
        }
    }
    let b = boson_annihilation(space, factor)?;
    let i_beta = C64::new(0.0, 1.0) * beta;
    b.adjoint().scaled(i_beta).add(&b.scaled(i_beta.conj()))
}

/// Support bound for displaced-state truncation: after displacing a state
/// with mean occupation `n_mean` by `beta`, essentially all weight sits
/// below `s + 4 sqrt(s) + 8` with `s = (sqrt(n_mean) + |beta|)^2`.
pub fn displaced_support(n_mean: f64, beta: C64) -> f64 {
    let s = (n_mean.max(0.0).sqrt() + beta.norm()).powi(2);
    s + 4.0 * s.sqrt() + 8.0
}

/// Exact Wigner function `W(beta) = (2/pi) Tr[D+(beta) rho D(beta) P]` of a
/// single-mode state, with `P` the photon-number parity.
///
/// The space must consist of exactly one bosonic factor, and the truncation
/// must cover the displaced support (checked; [`Error::Truncation`]
/// otherwise).
pub fn wigner_exact(rho: &DensityMatrix, beta: C64) -> Result<f64> {
    let space = rho.space();
    if space.factors().len() != 1 {
        return Err(Error::InvalidSpace(
            "Wigner sampling expects a single-mode state; trace out the rest first".into(),
        ));
    }
    let n_max = match space.factor(0)? {
        Factor::BosonMode { n_max } | Factor::CavityFock { n_max } => n_max,
        _ => {
            return Err(Error::WrongFactorKind { index: 0, expected: "a bosonic factor" })
        }
    };
    let number = crate::hilbert::excitation_number(space, 0)?;
    let n_mean = rho.expectation(&number)?.re;
    let needed = displaced_support(n_mean, beta);
    if (n_max as f64) < needed {
        return Err(Error::Truncation(format!(
            "Wigner sampling at |beta| = {:.2} on <n> = {n_mean:.2} needs n_max >= {}, got {n_max}",
            beta.norm(),
            needed.ceil() as usize
        )));
    }

    let generator = displacement_generator(space, 0, beta)?;
    let d = Spectral::new(&generator)?.unitary(1.0);
    let shifted = rho.matrix().dot(&d);
    // sum_n (-1)^n <n| D+ rho D |n> = sum_n (-1)^n  D[:, n]+ (rho D)[:, n]
    let dim = space.dim();
    let mut acc = C64::new(0.0, 0.0);
    let mut sign = 1.0;
    for n in 0..dim {
        let mut col = C64::new(0.0, 0.0);
        for i in 0..dim {
            col += d[[i, n]].conj() * shifted[[i, n]];
        }
        acc += col * sign;
        sign = -sign;
    }
    Ok(std::f64::consts::FRAC_2_PI * acc.re)
}

/// A square grid of phase-space points, row-major with the real part as the
/// outer (slow) coordinate. Deterministic: equal inputs give identical
/// point sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    coords: Vec<f64>,
}

impl PhaseGrid {
    /// `side x side` points covering `[-half_extent, half_extent]` on both
    /// axes.
    pub fn centered(half_extent: f64, side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidParameter("grid needs at least one point".into()));
        }
        if !(half_extent > 0.0) && side > 1 {
            return Err(Error::InvalidParameter("half_extent must be positive".into()));
        }
        let coords = if side == 1 {
            vec![0.0]
        } else {
            (0..side)
                .map(|i| -half_extent + 2.0 * half_extent * i as f64 / (side - 1) as f64)
                .collect()
        };
        Ok(PhaseGrid { coords })
    }

    pub fn side(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Grid spacing along one axis (0 for a single-point grid).
    pub fn spacing(&self) -> f64 {
        if self.coords.len() < 2 { 0.0 } else { self.coords[1] - self.coords[0] }
    }

    /// All points in row-major order: outer loop over the real part, inner
    /// over the imaginary part.
    pub fn points(&self) -> Vec<C64> {
        self.points_around(C64::new(0.0, 0.0))
    }

    /// The same grid translated so it is centered on `center`.
    pub fn points_around(&self, center: C64) -> Vec<C64> {
        let mut pts = Vec::with_capacity(self.coords.len() * self.coords.len());
        for &re in &self.coords {
            for &im in &self.coords {
                pts.push(center + C64::new(re, im));
            }
        }
        pts
    }
}
