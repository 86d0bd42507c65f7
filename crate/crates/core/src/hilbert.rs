//! Tensor-product Hilbert spaces and sparse operators.
//!
//! A space is an ordered list of factors. Basis states are indexed row-major:
//! the first factor is the most significant digit, so for factors of
//! dimension `d0, d1, d2` the flat index of `(i0, i1, i2)` is
//! `(i0 * d1 + i1) * d2 + i2`.
//!
//! Collective-spin factors ([`Factor::CollectiveDicke`]) carry the symmetric
//! (maximum-spin) ladder of an `N`-atom ensemble truncated at `m_max`
//! excitations, with the unnormalized lowering element
//! `<m-1|S-|m> = sqrt(m (N - m + 1))`. A single-atom ladder
//! (`CollectiveDicke { atoms: 1, m_max: 1 }`) is exactly a qubit, which is
//! how the brute-force per-atom comparison spaces are assembled.
//!
//! Operators are stored as sparse triplets in a canonical order (sorted by
//! row, then column, duplicates summed, exact zeros dropped), so identical
//! construction sequences yield bit-identical entry lists.

use ndarray as nd;
use num_complex::ComplexFloat;

use crate::{Error, Result, C64};

/// One tensor factor of a composite space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    /// The driven control atom: basis `{|g> = 0, |e> = 1}`.
    ControlQubit,
    /// Symmetric Dicke ladder of an ensemble of `atoms` two-level atoms,
    /// truncated at `m_max` collective excitations (dimension `m_max + 1`).
    CollectiveDicke { atoms: usize, m_max: usize },
    /// Bosonic mode truncated at `n_max` quanta (dimension `n_max + 1`).
    /// Used for the bosonized collective mode.
    BosonMode { n_max: usize },
    /// The cavity mode, truncated at `n_max` photons. Same ladder as
    /// [`Factor::BosonMode`]; the distinct kind keeps model builders honest
    /// about which factor plays which role.
    CavityFock { n_max: usize },
}

impl Factor {
    pub fn dim(&self) -> usize {
        match *self {
            Factor::ControlQubit => 2,
            Factor::CollectiveDicke { m_max, .. } => m_max + 1,
            Factor::BosonMode { n_max } | Factor::CavityFock { n_max } => n_max + 1,
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        match *self {
            Factor::ControlQubit => Ok(()),
            Factor::CollectiveDicke { atoms, m_max } => {
                if atoms == 0 {
                    Err(Error::InvalidSpace(format!(
                        "factor {index}: ensemble must contain at least one atom"
                    )))
                } else if m_max == 0 {
                    Err(Error::InvalidSpace(format!(
                        "factor {index}: excitation truncation must be at least 1"
                    )))
                } else if m_max > atoms {
                    Err(Error::InvalidSpace(format!(
                        "factor {index}: truncation m_max = {m_max} exceeds atom number {atoms}"
                    )))
                } else {
                    Ok(())
                }
            }
            Factor::BosonMode { n_max } | Factor::CavityFock { n_max } => {
                if n_max == 0 {
                    Err(Error::InvalidSpace(format!(
                        "factor {index}: quantum truncation must be at least 1"
                    )))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// An ordered tensor product of [`Factor`]s.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceDescriptor {
    factors: Vec<Factor>,
    dim: usize,
}

impl SpaceDescriptor {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidSpace("empty factor list".into()));
        }
        let mut dim: usize = 1;
        for (i, f) in factors.iter().enumerate() {
            f.validate(i)?;
            dim = dim.checked_mul(f.dim()).ok_or_else(|| {
                Error::InvalidSpace("total dimension overflows usize".into())
            })?;
        }
        Ok(SpaceDescriptor { factors, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn factor(&self, index: usize) -> Result<Factor> {
        self.factors.get(index).copied().ok_or(Error::FactorOutOfRange {
            index,
            count: self.factors.len(),
        })
    }

    /// Flat index of a basis state given one index per factor.
    pub fn compose(&self, indices: &[usize]) -> Result<usize> {
        if indices.len() != self.factors.len() {
            return Err(Error::InvalidSpace(format!(
                "expected {} factor indices, got {}",
                self.factors.len(),
                indices.len()
            )));
        }
        let mut flat = 0usize;
        for (f, &i) in self.factors.iter().zip(indices) {
            if i >= f.dim() {
                return Err(Error::InvalidSpace(format!(
                    "basis index {i} outside factor of dimension {}",
                    f.dim()
                )));
            }
            flat = flat * f.dim() + i;
        }
        Ok(flat)
    }

    /// Per-factor indices of a flat basis index (row-major split).
    pub fn split(&self, flat: usize) -> Vec<usize> {
        let mut out = vec![0usize; self.factors.len()];
        let mut rest = flat;
        for (slot, f) in out.iter_mut().zip(&self.factors).rev() {
            let (f_slot, f_factor) = (slot, f);
            *f_slot = rest % f_factor.dim();
            rest /= f_factor.dim();
        }
        out
    }

    /// Index of the factor-`index` digit stride: product of the dimensions of
    /// all later factors.
    fn stride(&self, index: usize) -> usize {
        self.factors[index + 1..].iter().map(Factor::dim).product()
    }

    /// Positions of all factors of a given coarse kind.
    pub fn positions(&self, pred: impl Fn(&Factor) -> bool) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter_map(|(i, f)| pred(f).then_some(i))
            .collect()
    }

    pub fn control_positions(&self) -> Vec<usize> {
        self.positions(|f| matches!(f, Factor::ControlQubit))
    }

    pub fn ensemble_positions(&self) -> Vec<usize> {
        self.positions(|f| matches!(f, Factor::CollectiveDicke { .. }))
    }

    pub fn boson_positions(&self) -> Vec<usize> {
        self.positions(|f| matches!(f, Factor::BosonMode { .. }))
    }

    pub fn cavity_positions(&self) -> Vec<usize> {
        self.positions(|f| matches!(f, Factor::CavityFock { .. }))
    }

    /// The unique factor position satisfying `pred`, or an error naming `what`.
    pub fn unique_position(
        &self,
        what: &'static str,
        pred: impl Fn(&Factor) -> bool,
    ) -> Result<usize> {
        let pos = self.positions(pred);
        match pos.as_slice() {
            [p] => Ok(*p),
            _ => Err(Error::InvalidSpace(format!(
                "expected exactly one {what} factor, found {}",
                pos.len()
            ))),
        }
    }
}

/// Convenience constructor mirroring [`SpaceDescriptor::new`].
pub fn make_space(factors: Vec<Factor>) -> Result<SpaceDescriptor> {
    SpaceDescriptor::new(factors)
}

fn canonicalize(entries: &mut Vec<(usize, usize, C64)>) {
    entries.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut out: Vec<(usize, usize, C64)> = Vec::with_capacity(entries.len());
    for &(r, c, v) in entries.iter() {
        match out.last_mut() {
            Some(last) if last.0 == r && last.1 == c => last.2 += v,
            _ => out.push((r, c, v)),
        }
    }
    out.retain(|e| e.2.re != 0.0 || e.2.im != 0.0);
    *entries = out;
}

/// A sparse square operator on a [`SpaceDescriptor`].
///
/// Entries are kept in canonical order: sorted by `(row, col)`, duplicate
/// positions summed, exact zeros dropped. Every method below preserves that
/// normal form, so equal construction sequences produce identical entry
/// lists and all floating-point reductions run in a deterministic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: SpaceDescriptor,
    entries: Vec<(usize, usize, C64)>,
}

impl Operator {
    pub fn zero(space: SpaceDescriptor) -> Self {
        Operator { space, entries: Vec::new() }
    }

    pub fn identity(space: SpaceDescriptor) -> Self {
        let entries = (0..space.dim()).map(|i| (i, i, C64::new(1.0, 0.0))).collect();
        Operator { space, entries }
    }

    pub fn from_entries(
        space: SpaceDescriptor,
        mut entries: Vec<(usize, usize, C64)>,
    ) -> Result<Self> {
        let dim = space.dim();
        for &(r, c, _) in &entries {
            if r >= dim || c >= dim {
                return Err(Error::EntryOutOfRange { row: r, col: c, dim });
            }
        }
        canonicalize(&mut entries);
        Ok(Operator { space, entries })
    }

    /// Diagonal operator from per-basis-state values.
    pub fn diagonal(space: SpaceDescriptor, values: impl Fn(usize) -> f64) -> Self {
        let entries = (0..space.dim())
            .map(|i| (i, i, C64::new(values(i), 0.0)))
            .filter(|e| e.2.re != 0.0)
            .collect();
        Operator { space, entries }
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn entries(&self) -> &[(usize, usize, C64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    fn check_same_space(&self, other: &Operator, what: &str) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch(what.to_string()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_same_space(other, "operator addition")?;
        let mut entries = self.entries.clone();
        entries.extend_from_slice(&other.entries);
        canonicalize(&mut entries);
        Ok(Operator { space: self.space.clone(), entries })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.add(&other.scaled(C64::new(-1.0, 0.0)))
    }

    pub fn scaled(&self, factor: C64) -> Operator {
        let entries = self
            .entries
            .iter()
            .map(|&(r, c, v)| (r, c, v * factor))
            .filter(|e| e.2.re != 0.0 || e.2.im != 0.0)
            .collect();
        Operator { space: self.space.clone(), entries }
    }

    pub fn adjoint(&self) -> Operator {
        let mut entries: Vec<_> = self
            .entries
            .iter()
            .map(|&(r, c, v)| (c, r, v.conj()))
            .collect();
        canonicalize(&mut entries);
        Operator { space: self.space.clone(), entries }
    }

    /// Sparse matrix product `self * other`.
    pub fn matmul(&self, other: &Operator) -> Result<Operator> {
        self.check_same_space(other, "operator product")?;
        let dim = self.dim();
        // Row ranges of `other` (entries are sorted by row).
        let mut row_start = vec![other.entries.len(); dim + 1];
        for (k, &(r, _, _)) in other.entries.iter().enumerate().rev() {
            row_start[r] = k;
        }
        for r in (0..dim).rev() {
            if row_start[r] > row_start[r + 1] {
                row_start[r] = row_start[r + 1];
            }
        }
        let mut entries = Vec::new();
        let mut acc: Vec<C64> = vec![C64::new(0.0, 0.0); dim];
        let mut touched: Vec<usize> = Vec::new();
        let mut i = 0;
        while i < self.entries.len() {
            let row = self.entries[i].0;
            let mut j = i;
            while j < self.entries.len() && self.entries[j].0 == row {
                let (_, k, a) = self.entries[j];
                for &(_, col, b) in &other.entries[row_start[k]..row_start[k + 1]] {
                    if acc[col].re == 0.0 && acc[col].im == 0.0 {
                        touched.push(col);
                    }
                    acc[col] += a * b;
                }
                j += 1;
            }
            touched.sort_unstable();
            for &col in &touched {
                let v = acc[col];
                if v.re != 0.0 || v.im != 0.0 {
                    entries.push((row, col, v));
                }
                acc[col] = C64::new(0.0, 0.0);
            }
            touched.clear();
            i = j;
        }
        // Rows were visited in increasing order and columns sorted per row,
        // so the result is already canonical.
        Ok(Operator { space: self.space.clone(), entries })
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.matmul(other)?.sub(&other.matmul(self)?)
    }

    /// `y = A x` (y is overwritten).
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim());
        debug_assert_eq!(y.len(), self.dim());
        y.fill(C64::new(0.0, 0.0));
        for &(r, c, v) in &self.entries {
            y[r] += v * x[c];
        }
    }

    /// `y += scale * A x`.
    pub fn apply_accumulate(&self, scale: C64, x: &[C64], y: &mut [C64]) {
        for &(r, c, v) in &self.entries {
            y[r] += scale * v * x[c];
        }
    }

    pub fn expectation(&self, state: &PureState) -> Result<C64> {
        if self.space != state.space {
            return Err(Error::SpaceMismatch("expectation value".into()));
        }
        let mut acc = C64::new(0.0, 0.0);
        for &(r, c, v) in &self.entries {
            acc += state.amp[r].conj() * v * state.amp[c];
        }
        Ok(acc)
    }

    pub fn to_dense(&self) -> nd::Array2<C64> {
        let dim = self.dim();
        let mut m = nd::Array2::zeros((dim, dim));
        for &(r, c, v) in &self.entries {
            m[[r, c]] += v;
        }
        m
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|e| e.2.abs()).fold(0.0, f64::max)
    }

    /// Max-abs entry of `A - A†`; zero for an exactly Hermitian operator.
    pub fn hermiticity_defect(&self) -> f64 {
        match self.sub(&self.adjoint()) {
            Ok(d) => d.max_abs_entry(),
            Err(_) => unreachable!("adjoint preserves the space"),
        }
    }

    /// Restriction to entries whose row and column both satisfy `keep` on the
    /// basis index of factor `factor`. Used to compare truncated ladder
    /// identities away from the truncation edge.
    pub fn masked_by_factor(
        &self,
        factor: usize,
        keep: impl Fn(usize) -> bool,
    ) -> Result<Operator> {
        self.space.factor(factor)?;
        let entries = self
            .entries
            .iter()
            .filter(|&&(r, c, _)| {
                keep(self.space.split(r)[factor]) && keep(self.space.split(c)[factor])
            })
            .copied()
            .collect();
        Ok(Operator { space: self.space.clone(), entries })
    }
}

/// Kronecker product of two operators; the left factor list is concatenated
/// with the right one. Entry values are `a * b` in that fixed order.
pub fn kron(a: &Operator, b: &Operator) -> Result<Operator> {
    let mut factors = a.space.factors.clone();
    factors.extend_from_slice(&b.space.factors);
    let space = SpaceDescriptor::new(factors)?;
    let db = b.dim();
    let mut entries = Vec::with_capacity(a.nnz() * b.nnz());
    for &(ra, ca, va) in &a.entries {
        for &(rb, cb, vb) in &b.entries {
            entries.push((ra * db + rb, ca * db + cb, va * vb));
        }
    }
    canonicalize(&mut entries);
    Ok(Operator { space, entries })
}

/// Embed a single-factor operator at position `factor` of `space`, acting as
/// the identity on every other factor.
pub fn embed(local: &Operator, space: &SpaceDescriptor, factor: usize) -> Result<Operator> {
    let f = space.factor(factor)?;
    if local.space.factors() != [f] {
        return Err(Error::SpaceMismatch(format!(
            "local operator factor {:?} does not match target factor {:?}",
            local.space.factors(),
            f
        )));
    }
    let d = f.dim();
    let post: usize = space.stride(factor);
    let pre: usize = space.dim() / (d * post);
    let mut entries = Vec::with_capacity(local.nnz() * pre * post);
    for &(r, c, v) in &local.entries {
        for p in 0..pre {
            let base = p * d * post;
            for q in 0..post {
                entries.push((base + r * post + q, base + c * post + q, v));
            }
        }
    }
    canonicalize(&mut entries);
    Ok(Operator { space: space.clone(), entries })
}

fn single_factor_space(f: Factor) -> SpaceDescriptor {
    SpaceDescriptor::new(vec![f]).expect("single validated factor")
}

/// Lowering operator on one factor, as a single-factor operator.
///
/// - control qubit: `|g><e|`
/// - collective Dicke ladder: `<m-1|S-|m> = sqrt(m (N - m + 1))`
/// - boson / cavity mode: `<n-1|a|n> = sqrt(n)`
pub fn lowering_local(f: Factor) -> Operator {
    let entries = match f {
        Factor::ControlQubit => vec![(0, 1, C64::new(1.0, 0.0))],
        Factor::CollectiveDicke { atoms, m_max } => (1..=m_max)
            .map(|m| {
                let elem = ((m as f64) * ((atoms - m + 1) as f64)).sqrt();
                (m - 1, m, C64::new(elem, 0.0))
            })
            .collect(),
        Factor::BosonMode { n_max } | Factor::CavityFock { n_max } => (1..=n_max)
            .map(|n| (n - 1, n, C64::new((n as f64).sqrt(), 0.0)))
            .collect(),
    };
    Operator { space: single_factor_space(f), entries }
}

/// Unnormalized collective lowering operator `S-` of the Dicke factor at
/// `factor`, embedded in `space`.
pub fn collective_lowering(space: &SpaceDescriptor, factor: usize) -> Result<Operator> {
    let f = space.factor(factor)?;
    if !matches!(f, Factor::CollectiveDicke { .. }) {
        return Err(Error::WrongFactorKind { index: factor, expected: "a collective ensemble" });
    }
    embed(&lowering_local(f), space, factor)
}

/// Annihilation operator of the bosonic factor at `factor`, embedded in
/// `space`. Accepts both [`Factor::BosonMode`] and [`Factor::CavityFock`].
pub fn boson_annihilation(space: &SpaceDescriptor, factor: usize) -> Result<Operator> {
    let f = space.factor(factor)?;
    if !matches!(f, Factor::BosonMode { .. } | Factor::CavityFock { .. }) {
        return Err(Error::WrongFactorKind { index: factor, expected: "a bosonic mode" });
    }
    embed(&lowering_local(f), space, factor)
}

/// Normalized mode-lowering operator for a sample factor: the annihilation
/// operator of a boson factor, or `S- / sqrt(N)` of a Dicke factor. This is
/// the operator that becomes bosonic in the large-`N` limit.
pub fn mode_lowering(space: &SpaceDescriptor, factor: usize) -> Result<Operator> {
    match space.factor(factor)? {
        Factor::CollectiveDicke { atoms, .. } => Ok(collective_lowering(space, factor)?
            .scaled(C64::new(1.0 / (atoms as f64).sqrt(), 0.0))),
        Factor::BosonMode { .. } | Factor::CavityFock { .. } => {
            boson_annihilation(space, factor)
        }
        Factor::ControlQubit => {
            Err(Error::WrongFactorKind { index: factor, expected: "a sample mode" })
        }
    }
}

/// Excitation-number operator of any factor: diagonal in the local basis with
/// value equal to the basis index (photon number, collective excitation
/// number, or `|e><e|` for a qubit).
pub fn excitation_number(space: &SpaceDescriptor, factor: usize) -> Result<Operator> {
    let f = space.factor(factor)?;
    let local = Operator::diagonal(single_factor_space(f), |i| i as f64);
    embed(&local, space, factor)
}

fn control_local(space: &SpaceDescriptor, factor: usize) -> Result<()> {
    if !matches!(space.factor(factor)?, Factor::ControlQubit) {
        return Err(Error::WrongFactorKind { index: factor, expected: "the control qubit" });
    }
    Ok(())
}

/// `Sz = (|e><e| - |g><g|) / 2` on the control qubit at `factor`.
pub fn control_sz(space: &SpaceDescriptor, factor: usize) -> Result<Operator> {
    control_local(space, factor)?;
    let local = Operator::diagonal(single_factor_space(Factor::ControlQubit), |i| {
        if i == 1 { 0.5 } else { -0.5 }
    });
    embed(&local, space, factor)
}

/// `|e><e|` projector on the control qubit at `factor`.
pub fn control_excited_projector(space: &SpaceDescriptor, factor: usize) -> Result<Operator> {
    control_local(space, factor)?;
    let local = Operator::diagonal(single_factor_space(Factor::ControlQubit), |i| {
        if i == 1 { 1.0 } else { 0.0 }
    });
    embed(&local, space, factor)
}

/// `|g><g|` projector on the control qubit at `factor`.
pub fn control_ground_projector(space: &SpaceDescriptor, factor: usize) -> Result<Operator> {
    control_local(space, factor)?;
    let local = Operator::diagonal(single_factor_space(Factor::ControlQubit), |i| {
        if i == 0 { 1.0 } else { 0.0 }
    });
    embed(&local, space, factor)
}

/// `sigma_x = |e><g| + |g><e|` on the control qubit at `factor`. Applied as a
/// hard pulse it swaps `|g>` and `|e>`.
pub fn control_sx(space: &SpaceDescriptor, factor: usize) -> Result<Operator> {
    control_local(space, factor)?;
    let local = Operator {
        space: single_factor_space(Factor::ControlQubit),
        entries: vec![(0, 1, C64::new(1.0, 0.0)), (1, 0, C64::new(1.0, 0.0))],
    };
    embed(&local, space, factor)
}

/// `sigma_y = i |g><e| - i |e><g|` on the control qubit at `factor`.
pub fn control_sy(space: &SpaceDescriptor, factor: usize) -> Result<Operator> {
    control_local(space, factor)?;
    let local = Operator {
        space: single_factor_space(Factor::ControlQubit),
        entries: vec![(0, 1, C64::new(0.0, 1.0)), (1, 0, C64::new(0.0, -1.0))],
    };
    embed(&local, space, factor)
}

/// Raising operator on the control qubit: `|e><g|`.
pub fn control_raising(space: &SpaceDescriptor, factor: usize) -> Result<Operator> {
    control_local(space, factor)?;
    Ok(embed(&lowering_local(Factor::ControlQubit), space, factor)?.adjoint())
}

/// Lowering operator on the control qubit: `|g><e|`.
pub fn control_lowering(space: &SpaceDescriptor, factor: usize) -> Result<Operator> {
    control_local(space, factor)?;
    embed(&lowering_local(Factor::ControlQubit), space, factor)
}

/// Truncated coherent-state amplitudes `c_n = exp(-|alpha|^2 / 2) alpha^n /
/// sqrt(n!)`, renormalized on the truncated ladder.
///
/// Guards: `|alpha|^2 <= n_max / 4` keeps the lost tail mass below 1e-8 for
/// every regime used here; the renormalization correction is checked against
/// that bound as well.
pub fn coherent_amplitudes(n_max: usize, alpha: C64) -> Result<Vec<C64>> {
    let nbar = alpha.norm_sqr();
    if nbar > n_max as f64 / 4.0 {
        return Err(Error::Truncation(format!(
            "coherent state with |alpha|^2 = {nbar:.3} needs n_max >= {}, got {n_max}",
            (4.0 * nbar).ceil() as usize
        )));
    }
    let mut amps = Vec::with_capacity(n_max + 1);
    let mut c = C64::new((-nbar / 2.0).exp(), 0.0);
    amps.push(c);
    for n in 1..=n_max {
        c = c * alpha / C64::new((n as f64).sqrt(), 0.0);
        amps.push(c);
    }
    let mass: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if (1.0 - mass).abs() > 1e-8 {
        return Err(Error::Truncation(format!(
            "coherent-state tail mass {:.3e} above truncation n_max = {n_max}",
            1.0 - mass
        )));
    }
    let scale = C64::new(1.0 / mass.sqrt(), 0.0);
    for a in &mut amps {
        *a *= scale;
    }
    Ok(amps)
}

/// Specification of one factor's state inside a product state.
#[derive(Debug, Clone)]
pub enum FactorState {
    /// A single basis state of the factor.
    Basis(usize),
    /// An arbitrary superposition; the amplitude list must match the factor
    /// dimension. Not normalized automatically.
    Superposition(Vec<C64>),
    /// A truncated coherent state. Only valid on bosonic factors.
    Coherent(C64),
}

/// A (not necessarily normalized) state vector on a composite space.
#[derive(Debug, Clone)]
pub struct PureState {
    space: SpaceDescriptor,
    amp: Vec<C64>,
}

impl PureState {
    pub fn new(space: SpaceDescriptor, amp: Vec<C64>) -> Result<Self> {
        if amp.len() != space.dim() {
            return Err(Error::InvalidSpace(format!(
                "amplitude vector of length {} on a space of dimension {}",
                amp.len(),
                space.dim()
            )));
        }
        Ok(PureState { space, amp })
    }

    /// Basis state with one index per factor.
    pub fn basis(space: &SpaceDescriptor, indices: &[usize]) -> Result<Self> {
        let flat = space.compose(indices)?;
        let mut amp = vec![C64::new(0.0, 0.0); space.dim()];
        amp[flat] = C64::new(1.0, 0.0);
        Ok(PureState { space: space.clone(), amp })
    }

    /// Product state assembled from one [`FactorState`] per factor.
    pub fn product(space: &SpaceDescriptor, parts: &[FactorState]) -> Result<Self> {
        if parts.len() != space.factors().len() {
            return Err(Error::InvalidSpace(format!(
                "expected {} factor states, got {}",
                space.factors().len(),
                parts.len()
            )));
        }
        let mut locals: Vec<Vec<C64>> = Vec::with_capacity(parts.len());
        for (i, (part, f)) in parts.iter().zip(space.factors()).enumerate() {
            let d = f.dim();
            let local = match part {
                FactorState::Basis(k) => {
                    if *k >= d {
                        return Err(Error::InvalidSpace(format!(
                            "basis index {k} outside factor {i} of dimension {d}"
                        )));
                    }
                    let mut v = vec![C64::new(0.0, 0.0); d];
                    v[*k] = C64::new(1.0, 0.0);
                    v
                }
                FactorState::Superposition(v) => {
                    if v.len() != d {
                        return Err(Error::InvalidSpace(format!(
                            "superposition of length {} on factor {i} of dimension {d}",
                            v.len()
                        )));
                    }
                    v.clone()
                }
                FactorState::Coherent(alpha) => match f {
                    Factor::BosonMode { n_max } | Factor::CavityFock { n_max } => {
                        coherent_amplitudes(*n_max, *alpha)?
                    }
                    _ => {
                        return Err(Error::WrongFactorKind {
                            index: i,
                            expected: "a bosonic mode (coherent states live on modes)",
                        })
                    }
                },
            };
            locals.push(local);
        }
        let mut amp = vec![C64::new(1.0, 0.0)];
        for local in &locals {
            let mut next = Vec::with_capacity(amp.len() * local.len());
            for a in &amp {
                for l in local {
                    next.push(a * l);
                }
            }
            amp = next;
        }
        Ok(PureState { space: space.clone(), amp })
    }

    /// Coherent state `|alpha>` on the bosonic factor at `factor`, with every
    /// other factor in its lowest basis state.
    pub fn coherent_state(
        space: &SpaceDescriptor,
        factor: usize,
        alpha: C64,
    ) -> Result<Self> {
        let parts: Vec<FactorState> = (0..space.factors().len())
            .map(|i| {
                if i == factor {
                    FactorState::Coherent(alpha)
                } else {
                    FactorState::Basis(0)
                }
            })
            .collect();
        PureState::product(space, &parts)
    }

    /// Linear combination of states on a common space.
    pub fn superpose(terms: &[(C64, &PureState)]) -> Result<Self> {
        let (_, first) = terms.first().ok_or_else(|| {
            Error::InvalidSpace("superposition of zero states".into())
        })?;
        let mut amp = vec![C64::new(0.0, 0.0); first.space.dim()];
        for (w, s) in terms {
            if s.space != first.space {
                return Err(Error::SpaceMismatch("state superposition".into()));
            }
            for (a, b) in amp.iter_mut().zip(&s.amp) {
                *a += w * b;
            }
        }
        Ok(PureState { space: first.space.clone(), amp })
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amp
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch("inner product".into()));
        }
        Ok(self
            .amp
            .iter()
            .zip(&other.amp)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn norm(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Result<PureState> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::InvalidParameter("cannot normalize the zero vector".into()));
        }
        Ok(self.scaled(C64::new(1.0 / n, 0.0)))
    }

    pub fn scaled(&self, factor: C64) -> PureState {
        PureState {
            space: self.space.clone(),
            amp: self.amp.iter().map(|a| a * factor).collect(),
        }
    }

    /// Applies `op`, returning a new state.
    pub fn applied(&self, op: &Operator) -> Result<PureState> {
        if self.space != *op.space() {
            return Err(Error::SpaceMismatch("operator application".into()));
        }
        let mut out = vec![C64::new(0.0, 0.0); self.amp.len()];
        op.apply(&self.amp, &mut out);
        Ok(PureState { space: self.space.clone(), amp: out })
    }

    /// Probability of the basis state with the given factor indices.
    pub fn population(&self, indices: &[usize]) -> Result<f64> {
        Ok(self.amp[self.space.compose(indices)?].norm_sqr())
    }
}

/// A density matrix on a composite space, stored densely.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    space: SpaceDescriptor,
    mat: nd::Array2<C64>,
}

impl DensityMatrix {
    pub fn from_pure(state: &PureState) -> Self {
        let d = state.space.dim();
        let mut mat = nd::Array2::zeros((d, d));
        for (i, a) in state.amp.iter().enumerate() {
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            for (j, b) in state.amp.iter().enumerate() {
                mat[[i, j]] = a * b.conj();
            }
        }
        DensityMatrix { space: state.space.clone(), mat }
    }

    pub fn from_matrix(space: SpaceDescriptor, mat: nd::Array2<C64>) -> Result<Self> {
        if mat.nrows() != space.dim() || mat.ncols() != space.dim() {
            return Err(Error::InvalidSpace(format!(
                "matrix of shape {:?} on a space of dimension {}",
                mat.shape(),
                space.dim()
            )));
        }
        Ok(DensityMatrix { space, mat })
    }

    pub fn space(&self) -> &SpaceDescriptor {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> &nd::Array2<C64> {
        &self.mat
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.mat[[i, i]]).sum()
    }

    /// `Tr[rho^2]`, computed as the squared Frobenius norm (valid for
    /// Hermitian `rho`).
    pub fn purity(&self) -> f64 {
        self.mat.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        if self.space != *op.space() {
            return Err(Error::SpaceMismatch("expectation value".into()));
        }
        // Tr[rho A] = sum_{rc} A[r, c] rho[c, r]
        let mut acc = C64::new(0.0, 0.0);
        for &(r, c, v) in op.entries() {
            acc += v * self.mat[[c, r]];
        }
        Ok(acc)
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in i..self.dim() {
                let d = (self.mat[[i, j]] - self.mat[[j, i]].conj()).abs();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Replaces `rho` by `(rho + rho†) / 2`.
    pub fn symmetrize(&mut self) {
        for i in 0..self.dim() {
            for j in i..self.dim() {
                let avg = (self.mat[[i, j]] + self.mat[[j, i]].conj()) * 0.5;
                self.mat[[i, j]] = avg;
                self.mat[[j, i]] = avg.conj();
            }
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * ((n - i) as f64) / ((i + 1) as f64);
    }
    acc
}

/// Maps a state whose factor `dicke_factor` is a collective `N`-atom ladder
/// onto the corresponding symmetric state of `N` explicit single-atom factors.
///
/// The target space must equal the source space with the Dicke factor
/// replaced, in place, by `N` single-atom ladders
/// (`CollectiveDicke { atoms: 1, m_max: 1 }`). Each `|m>` maps to the equal
/// superposition of all weight-`m` excitation patterns. Intended for
/// brute-force cross-checks at small `N`.
pub fn symmetric_to_product(
    state: &PureState,
    dicke_factor: usize,
    target: &SpaceDescriptor,
) -> Result<PureState> {
    use itertools::Itertools;

    let src = state.space();
    let f = src.factor(dicke_factor)?;
    let Factor::CollectiveDicke { atoms, m_max } = f else {
        return Err(Error::WrongFactorKind {
            index: dicke_factor,
            expected: "a collective ensemble",
        });
    };
    if atoms > 12 {
        return Err(Error::InvalidParameter(format!(
            "brute-force product space for {atoms} atoms is too large"
        )));
    }
    let single = Factor::CollectiveDicke { atoms: 1, m_max: 1 };
    let mut expected = src.factors()[..dicke_factor].to_vec();
    expected.extend(std::iter::repeat_n(single, atoms));
    expected.extend_from_slice(&src.factors()[dicke_factor + 1..]);
    if target.factors() != expected {
        return Err(Error::SpaceMismatch(
            "target is not the source space with the ensemble factor expanded".into(),
        ));
    }

    let mut amp = vec![C64::new(0.0, 0.0); target.dim()];
    let mut tgt_indices = vec![0usize; target.factors().len()];
    for (flat, a) in state.amplitudes().iter().enumerate() {
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        let src_indices = src.split(flat);
        let m = src_indices[dicke_factor];
        debug_assert!(m <= m_max);
        tgt_indices[..dicke_factor].copy_from_slice(&src_indices[..dicke_factor]);
        tgt_indices[dicke_factor + atoms..].copy_from_slice(&src_indices[dicke_factor + 1..]);
        let weight = a / C64::new(binomial(atoms, m).sqrt(), 0.0);
        for excited in (0..atoms).combinations(m) {
            tgt_indices[dicke_factor..dicke_factor + atoms].fill(0);
            for &j in &excited {
                tgt_indices[dicke_factor + j] = 1;
            }
            amp[target.compose(&tgt_indices)?] += weight;
        }
    }
    PureState::new(target.clone(), amp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn composite_dimensions() {
        let s = make_space(vec![
            Factor::ControlQubit,
            Factor::CollectiveDicke { atoms: 10, m_max: 10 },
            Factor::CavityFock { n_max: 2 },
        ])
        .unwrap();
        assert_eq!(s.dim(), 66);

        let s = make_space(vec![Factor::ControlQubit, Factor::BosonMode { n_max: 3 }]).unwrap();
        assert_eq!(s.dim(), 8);
    }

    #[test]
    fn space_validation() {
        assert!(make_space(vec![]).is_err());
        assert!(make_space(vec![Factor::CollectiveDicke { atoms: 5, m_max: 6 }]).is_err());
        assert!(make_space(vec![Factor::CollectiveDicke { atoms: 5, m_max: 0 }]).is_err());
        assert!(make_space(vec![Factor::BosonMode { n_max: 0 }]).is_err());
    }

    #[test]
    fn index_round_trip() {
        let s = make_space(vec![
            Factor::ControlQubit,
            Factor::CollectiveDicke { atoms: 4, m_max: 3 },
            Factor::CavityFock { n_max: 2 },
        ])
        .unwrap();
        for flat in 0..s.dim() {
            assert_eq!(s.compose(&s.split(flat)).unwrap(), flat);
        }
        assert_eq!(s.compose(&[1, 2, 0]).unwrap(), 1 * 12 + 2 * 3);
    }

    #[test]
    fn dicke_ladder_elements() {
        let s = make_space(vec![Factor::CollectiveDicke { atoms: 10, m_max: 10 }]).unwrap();
        let sm = collective_lowering(&s, 0).unwrap();
        // <4|S-|5> = sqrt(5 * 6) = sqrt(30)
        let elem = sm
            .entries()
            .iter()
            .find(|e| e.0 == 4 && e.1 == 5)
            .unwrap()
            .2;
        assert_abs_diff_eq!(elem.re, 30.0f64.sqrt(), epsilon = 1e-15);
        assert_eq!(elem.im, 0.0);
    }

    #[test]
    fn single_atom_ladder_is_a_qubit_lowering() {
        let s1 = make_space(vec![Factor::CollectiveDicke { atoms: 1, m_max: 1 }]).unwrap();
        let sm = collective_lowering(&s1, 0).unwrap();
        assert_eq!(sm.entries(), &[(0, 1, c(1.0, 0.0))]);
    }

    #[test]
    fn boson_ladder_elements() {
        let s = make_space(vec![Factor::BosonMode { n_max: 6 }]).unwrap();
        let a = boson_annihilation(&s, 0).unwrap();
        let elem = a.entries().iter().find(|e| e.0 == 3 && e.1 == 4).unwrap().2;
        assert_abs_diff_eq!(elem.re, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn bosonized_commutators_on_the_untruncated_block() {
        let atoms = 10;
        let m_max = 6;
        let s = make_space(vec![Factor::CollectiveDicke { atoms, m_max }]).unwrap();
        let b = mode_lowering(&s, 0).unwrap();
        let bdag = b.adjoint();
        let nb = excitation_number(&s, 0).unwrap();

        // [b, b+] = 1 - 2 n_b / N away from the truncation edge.
        let comm = b.commutator(&bdag).unwrap().masked_by_factor(0, |m| m < m_max).unwrap();
        let expected = Operator::diagonal(s.clone(), |m| 1.0 - 2.0 * m as f64 / atoms as f64)
            .masked_by_factor(0, |m| m < m_max)
            .unwrap();
        let defect = comm.sub(&expected).unwrap().max_abs_entry();
        assert!(defect < 1e-14, "commutator defect {defect}");

        // [n_b, b+] = b+ and [n_b, b] = -b on the same block: identical
        // sparsity pattern, values equal to within one rounding of the
        // (m + 1) x - m x subtraction.
        let assert_same = |lhs: &Operator, rhs: &Operator| {
            assert_eq!(lhs.nnz(), rhs.nnz());
            for (a, b) in lhs.entries().iter().zip(rhs.entries()) {
                assert_eq!((a.0, a.1), (b.0, b.1));
                assert!((a.2 - b.2).abs() < 1e-15, "entry mismatch {a:?} vs {b:?}");
            }
        };
        let lhs = nb.commutator(&bdag).unwrap().masked_by_factor(0, |m| m < m_max).unwrap();
        let rhs = bdag.masked_by_factor(0, |m| m < m_max).unwrap();
        assert_same(&lhs, &rhs);

        let lhs = nb.commutator(&b).unwrap().masked_by_factor(0, |m| m < m_max).unwrap();
        let rhs = b.scaled(c(-1.0, 0.0)).masked_by_factor(0, |m| m < m_max).unwrap();
        assert_same(&lhs, &rhs);
    }

    #[test]
    fn embedding_matches_explicit_kron() {
        let qubit = make_space(vec![Factor::ControlQubit]).unwrap();
        let mode = make_space(vec![Factor::BosonMode { n_max: 2 }]).unwrap();
        let both = make_space(vec![Factor::ControlQubit, Factor::BosonMode { n_max: 2 }]).unwrap();

        let sz_local = {
            let s = qubit.clone();
            Operator::diagonal(s, |i| if i == 1 { 0.5 } else { -0.5 })
        };
        let embedded = embed(&sz_local, &both, 0).unwrap();
        let direct = kron(&sz_local, &Operator::identity(mode)).unwrap();
        assert_eq!(embedded.entries(), direct.entries());
    }

    #[test]
    fn embedding_grouping_is_bit_identical() {
        // Padding with identities in two different groupings must give the
        // same canonical entry list, bit for bit.
        let f0 = Factor::ControlQubit;
        let f1 = Factor::CollectiveDicke { atoms: 3, m_max: 3 };
        let f2 = Factor::CavityFock { n_max: 2 };
        let full = make_space(vec![f0, f1, f2]).unwrap();
        let mid = make_space(vec![f1]).unwrap();
        let sm = collective_lowering(&mid, 0).unwrap();

        let grouped_left = {
            let left = kron(&Operator::identity(make_space(vec![f0]).unwrap()), &sm).unwrap();
            kron(&left, &Operator::identity(make_space(vec![f2]).unwrap())).unwrap()
        };
        let grouped_right = {
            let right = kron(&sm, &Operator::identity(make_space(vec![f2]).unwrap())).unwrap();
            kron(&Operator::identity(make_space(vec![f0]).unwrap()), &right).unwrap()
        };
        let embedded = embed(&sm, &full, 1).unwrap();
        assert_eq!(grouped_left.entries(), grouped_right.entries());
        assert_eq!(grouped_left.entries(), embedded.entries());
    }

    #[test]
    fn construction_is_deterministic() {
        let s = make_space(vec![
            Factor::ControlQubit,
            Factor::CollectiveDicke { atoms: 8, m_max: 5 },
        ])
        .unwrap();
        let build = || {
            let sm = collective_lowering(&s, 0).unwrap_err();
            let _ = sm; // wrong index on purpose: factor 0 is the control
            let sm = collective_lowering(&s, 1).unwrap();
            let sp = sm.adjoint();
            control_sz(&s, 0)
                .unwrap()
                .add(&sp.matmul(&sm).unwrap())
                .unwrap()
        };
        let a = build();
        let b = build();
        assert_eq!(a.entries(), b.entries());
    }

    #[test]
    fn matmul_matches_dense() {
        let s = make_space(vec![
            Factor::ControlQubit,
            Factor::CollectiveDicke { atoms: 3, m_max: 3 },
        ])
        .unwrap();
        let a = collective_lowering(&s, 1).unwrap().add(&control_sx(&s, 0).unwrap()).unwrap();
        let b = a.adjoint();
        let sparse = a.matmul(&b).unwrap().to_dense();
        let dense = a.to_dense().dot(&b.to_dense());
        let defect = (&sparse - &dense)
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max);
        assert!(defect < 1e-14);
    }

    #[test]
    fn coherent_state_basics() {
        let s = make_space(vec![Factor::BosonMode { n_max: 16 }]).unwrap();
        // alpha = 0 is the vacuum.
        let vac = PureState::coherent_state(&s, 0, c(0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(vac.amplitudes()[0].re, 1.0, epsilon = 1e-15);
        assert!(vac.amplitudes()[1..].iter().all(|a| a.abs() == 0.0));

        // Mean occupation |alpha|^2.
        let alpha = c(1.1, -0.4);
        let st = PureState::coherent_state(&s, 0, alpha).unwrap();
        let n = excitation_number(&s, 0).unwrap();
        let mean = n.expectation(&st).unwrap().re;
        assert_abs_diff_eq!(mean, alpha.norm_sqr(), epsilon = 1e-8);
        assert_abs_diff_eq!(st.norm(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn coherent_state_truncation_guard() {
        let s = make_space(vec![Factor::BosonMode { n_max: 20 }]).unwrap();
        let err = PureState::coherent_state(&s, 0, c(4.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Truncation(_)));
        // Coherent parts are rejected on non-bosonic factors.
        let s2 = make_space(vec![Factor::CollectiveDicke { atoms: 20, m_max: 20 }]).unwrap();
        assert!(PureState::coherent_state(&s2, 0, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn expectation_and_population() {
        let s = make_space(vec![Factor::ControlQubit, Factor::BosonMode { n_max: 2 }]).unwrap();
        let st = PureState::superpose(&[
            (c(0.6, 0.0), &PureState::basis(&s, &[1, 0]).unwrap()),
            (c(0.0, 0.8), &PureState::basis(&s, &[0, 2]).unwrap()),
        ])
        .unwrap();
        let pe = control_excited_projector(&s, 0).unwrap();
        assert_abs_diff_eq!(pe.expectation(&st).unwrap().re, 0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(st.population(&[0, 2]).unwrap(), 0.64, epsilon = 1e-15);
    }

    #[test]
    fn symmetric_expansion_intertwines_the_lowering_operators() {
        let atoms = 3;
        let dicke = make_space(vec![
            Factor::ControlQubit,
            Factor::CollectiveDicke { atoms, m_max: atoms },
        ])
        .unwrap();
        let single = Factor::CollectiveDicke { atoms: 1, m_max: 1 };
        let product = make_space(vec![Factor::ControlQubit, single, single, single]).unwrap();

        // V S- |psi> must equal (sum_j sigma_j^-) V |psi> for every basis state.
        let sm = collective_lowering(&dicke, 1).unwrap();
        let mut sum_sigma = Operator::zero(product.clone());
        for j in 1..=atoms {
            sum_sigma = sum_sigma.add(&collective_lowering(&product, j).unwrap()).unwrap();
        }
        for flat in 0..dicke.dim() {
            let mut amp = vec![c(0.0, 0.0); dicke.dim()];
            amp[flat] = c(1.0, 0.0);
            let psi = PureState::new(dicke.clone(), amp).unwrap();
            let lhs = symmetric_to_product(&psi.applied(&sm).unwrap(), 1, &product).unwrap();
            let rhs = symmetric_to_product(&psi, 1, &product)
                .unwrap()
                .applied(&sum_sigma)
                .unwrap();
            let diff: f64 = lhs
                .amplitudes()
                .iter()
                .zip(rhs.amplitudes())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff < 1e-13, "intertwining defect {diff} at basis {flat}");
        }
    }

    #[test]
    fn symmetric_expansion_normalizes() {
        let dicke = make_space(vec![Factor::CollectiveDicke { atoms: 2, m_max: 2 }]).unwrap();
        let single = Factor::CollectiveDicke { atoms: 1, m_max: 1 };
        let product = make_space(vec![single, single]).unwrap();
        let one = PureState::basis(&dicke, &[1]).unwrap();
        let mapped = symmetric_to_product(&one, 0, &product).unwrap();
        // |m=1> -> (|10> + |01>) / sqrt(2)
        let expect = 0.5f64.sqrt();
        assert_abs_diff_eq!(mapped.amplitudes()[1].re, expect, epsilon = 1e-15);
        assert_abs_diff_eq!(mapped.amplitudes()[2].re, expect, epsilon = 1e-15);
        assert_abs_diff_eq!(mapped.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn hermiticity_defect_detects_non_hermitian() {
        let s = make_space(vec![Factor::ControlQubit]).unwrap();
        let sp = control_raising(&s, 0).unwrap();
        assert!(sp.hermiticity_defect() > 0.9);
        let h = sp.add(&sp.adjoint()).unwrap();
        assert_eq!(h.hermiticity_defect(), 0.0);
    }
}
