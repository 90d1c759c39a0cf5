//! Effective time-independent transfer matrices for modulated arrays:
//! virtual ports per normal mode, rotating frames fixed by the input carriers
//! and drive tones, RWA truncation, and the DC-probe transfer matrix.
//! Closed-form constructors for the worked device classes live here too and
//! cross-validate the generic pipeline.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{NormalModeBasis, ResonatorArray, Side};
use crate::modulation::{pattern_from_signs, ModulationSpec};
use crate::slh::{abcd_from_slh, SlhTriple};

type CMatrix = DMatrix<Complex64>;

pub const PASSIVITY_TOL: f64 = 1e-10;

/// A virtual input-output port: one normal mode on one waveguide side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortLabel {
    pub mode: usize,
    pub side: Side,
    /// Lab-frame carrier frequency of the port, when known (rad/s).
    pub freq: Option<f64>,
}

impl PortLabel {
    fn matches(&self, other: &PortLabel) -> bool {
        if self.mode != other.mode || self.side != other.side {
            return false;
        }
        match (self.freq, other.freq) {
            (Some(a), Some(b)) => {
                let scale = a.abs().max(b.abs()).max(1.0);
                (a - b).abs() <= 1e-9 * scale
            }
            _ => true,
        }
    }
}

impl std::fmt::Display for PortLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}{}", self.mode + 1, self.side)
    }
}

/// The composable artifact: a complex square matrix with labeled ports.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    entries: CMatrix,
    ports: Vec<PortLabel>,
}

impl TransferMatrix {
    pub fn new(entries: CMatrix, ports: Vec<PortLabel>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() != ports.len() {
            return Err(Error::DimensionMismatch(format!(
                "transfer matrix {}x{} with {} port labels",
                entries.nrows(),
                entries.ncols(),
                ports.len()
            )));
        }
        for j in 0..entries.ncols() {
            let norm2: f64 = (0..entries.nrows())
                .map(|i| entries[(i, j)].norm_sqr())
                .sum();
            if norm2 > 1.0 + PASSIVITY_TOL {
                return Err(Error::DimensionMismatch(format!(
                    "column {} violates passivity: norm^2 = {}",
                    j, norm2
                )));
            }
        }
        Ok(Self { entries, ports })
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn ports(&self) -> &[PortLabel] {
        &self.ports
    }

    pub fn dim(&self) -> usize {
        self.ports.len()
    }

    pub fn get(&self, out: usize, into: usize) -> Complex64 {
        self.entries[(out, into)]
    }

    pub fn abs2(&self, out: usize, into: usize) -> f64 {
        self.entries[(out, into)].norm_sqr()
    }

    pub fn ports_match(&self, other: &TransferMatrix) -> bool {
        self.dim() == other.dim()
            && self
                .ports
                .iter()
                .zip(other.ports.iter())
                .all(|(a, b)| a.matches(b))
    }

    /// Largest entrywise deviation from another matrix.
    pub fn max_abs_diff(&self, other: &TransferMatrix) -> f64 {
        (self.entries.clone() - other.entries.clone())
            .iter()
            .fold(0.0f64, |a, x| a.max(x.norm()))
    }
}

/// Time-independent effective system A + W with virtual-port B, C, D and the
/// frame bookkeeping that produced it.
#[derive(Debug, Clone)]
pub struct EffectiveSystem {
    pub a_eff: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub d: CMatrix,
    pub ports: Vec<PortLabel>,
    /// Carrier frequency -> resonant mode index.
    pub input_assignment: Vec<(f64, usize)>,
    /// Active pattern pair -> tone index in the modulation spec.
    pub tone_assignment: Vec<((usize, usize), usize)>,
    /// Modes outside every active pair; they respond as bare lossy cavities.
    pub passthrough_modes: Vec<usize>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EffectiveOptions {
    /// Tone-to-splitting matching tolerance; defaults to min gap / 4.
    pub detuning_tol: Option<f64>,
    /// Carrier-to-mode matching tolerance; defaults to min gap / 4.
    pub carrier_tol: Option<f64>,
}

pub fn effective_system(
    array: &ResonatorArray,
    basis: &NormalModeBasis,
    modspec: &ModulationSpec,
    input_carriers: &[f64],
) -> Result<EffectiveSystem> {
    effective_system_with(array, basis, modspec, input_carriers, &EffectiveOptions::default())
}

pub fn effective_system_with(
    array: &ResonatorArray,
    basis: &NormalModeBasis,
    modspec: &ModulationSpec,
    input_carriers: &[f64],
    options: &EffectiveOptions,
) -> Result<EffectiveSystem> {
    let n = basis.n();
    let kappa_int = array.kappa_int();
    let mut warnings = Vec::new();

    let kappa: Vec<f64> = (0..n)
        .map(|k| basis.gamma_l()[k] + basis.gamma_r()[k] + kappa_int)
        .collect();
    let max_kappa = kappa.iter().fold(0.0f64, |a, &x| a.max(x));

    let min_gap = basis.min_consecutive_gap();
    if let Some(gap) = min_gap {
        if max_kappa > gap / 5.0 {
            return Err(Error::UnresolvedModes {
                kappa: max_kappa,
                limit: gap / 5.0,
            });
        }
        let eps_max = modspec
            .tones()
            .iter()
            .fold(0.0f64, |a, t| a.max(t.eps));
        if eps_max >= gap {
            return Err(Error::ValidityViolation {
                eps: eps_max,
                limit: gap,
            });
        }
        if eps_max >= gap / 2.0 {
            warnings.push(format!(
                "modulation amplitude {eps_max} is above half the minimum level splitting {gap}; \
                 RWA accuracy degrades"
            ));
        }
    }

    let pattern = pattern_from_signs(basis, modspec.signs())?;
    if !pattern.has_unit_weights() && !pattern.is_empty() {
        warnings.push("pattern carries non-unit weights; they are kept in A(t) faithfully".into());
    }
    if pattern.diagonal().iter().any(|d| d.abs() > 1e-9) {
        warnings.push(
            "drive has residual diagonal terms in the normal-mode basis; \
             they time-average to zero under the RWA and are dropped"
                .into(),
        );
    }

    let default_tol = min_gap.map(|g| g / 4.0).unwrap_or(max_kappa.max(1e-12));
    let detuning_tol = options.detuning_tol.unwrap_or(default_tol);
    let carrier_tol = options.carrier_tol.unwrap_or(default_tol);

    // Match each pattern pair to the nearest tone; unmatched pairs rotate fast
    // and drop out of the effective model.
    let freqs = basis.frequencies();
    let mut active: Vec<(usize, usize, f64, usize)> = Vec::new();
    for &(i, j, w) in pattern.pairs() {
        let split = freqs[j] - freqs[i];
        let best = modspec
            .tones()
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (a.omega_d - split)
                    .abs()
                    .partial_cmp(&(b.omega_d - split).abs())
                    .unwrap()
            });
        match best {
            Some((k, tone)) if (tone.omega_d - split).abs() <= detuning_tol => {
                active.push((i, j, w, k));
            }
            _ => {
                if !modspec.tones().is_empty() {
                    warnings.push(format!(
                        "pattern pair ({i}, {j}) with splitting {split} has no resonant tone; dropped"
                    ));
                }
            }
        }
    }
    if active.is_empty() && !pattern.is_empty() && !modspec.tones().is_empty() {
        return Err(Error::NoResonantTone(
            "every tone is detuned from every pattern splitting".into(),
        ));
    }

    // Resolve each carrier onto exactly one mode.
    let mut input_assignment: Vec<(f64, usize)> = Vec::new();
    for &carrier in input_carriers {
        let (mode, dist) = (0..n)
            .map(|k| (k, (freqs[k] - carrier).abs()))
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if dist > carrier_tol {
            return Err(Error::NoResonantTone(format!(
                "input carrier {carrier} is not resonant with any mode (nearest miss {dist})"
            )));
        }
        if input_assignment.iter().any(|&(_, m)| m == mode) {
            return Err(Error::NoResonantTone(format!(
                "two input carriers resonate with mode {mode}"
            )));
        }
        input_assignment.push((carrier, mode));
    }

    // Rotating-frame frequency nu per mode, fixed by chaining tone hops from
    // each cluster's anchor (the carrier when present, the lowest mode else).
    let mut nu: Vec<Option<f64>> = vec![None; n];
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for &(i, j, _, k) in &active {
        let omega_d = modspec.tones()[k].omega_d;
        adjacency[i].push((j, omega_d));
        adjacency[j].push((i, -omega_d));
    }
    let mut anchor = |root: usize, value: f64, nu: &mut Vec<Option<f64>>| {
        let mut stack = vec![root];
        if nu[root].is_none() {
            nu[root] = Some(value);
        }
        while let Some(m) = stack.pop() {
            let base = nu[m].unwrap();
            for &(other, hop) in &adjacency[m] {
                let expect = base + hop;
                match nu[other] {
                    None => {
                        nu[other] = Some(expect);
                        stack.push(other);
                    }
                    Some(v) => {
                        let scale = v.abs().max(expect.abs()).max(1.0);
                        if (v - expect).abs() > 1e-9 * scale {
                            warnings.push(format!(
                                "inconsistent rotating frame on mode {other}: tones disagree by {}",
                                v - expect
                            ));
                        }
                    }
                }
            }
        }
    };
    for &(carrier, mode) in &input_assignment {
        if nu[mode].is_some() {
            return Err(Error::NoResonantTone(format!(
                "mode {mode} sits in a cluster already anchored by another carrier"
            )));
        }
        anchor(mode, carrier, &mut nu);
    }
    for k in 0..n {
        if nu[k].is_none() {
            anchor(k, freqs[k], &mut nu);
        }
    }
    let nu: Vec<f64> = nu.into_iter().map(|x| x.unwrap()).collect();

    let mut in_pair = vec![false; n];
    for &(i, j, _, _) in &active {
        in_pair[i] = true;
        in_pair[j] = true;
    }
    let passthrough_modes: Vec<usize> = (0..n).filter(|&k| !in_pair[k]).collect();
    for &(_, mode) in &input_assignment {
        if !in_pair[mode] {
            warnings.push(format!(
                "input carrier drives mode {mode} outside every active pair; \
                 it passes through with the bare lossy-cavity response"
            ));
        }
    }

    // RWA mode matrix in the rotating frames (Hermitian) and virtual ports.
    let mut omega_rwa = CMatrix::zeros(n, n);
    for k in 0..n {
        omega_rwa[(k, k)] = Complex64::new(freqs[k] - nu[k], 0.0);
    }
    for &(i, j, w, k) in &active {
        let tone = modspec.tones()[k];
        let half = 0.5 * tone.eps * w;
        let phase = Complex64::from_polar(1.0, tone.phi);
        omega_rwa[(i, j)] = half * phase;
        omega_rwa[(j, i)] = half * phase.conj();
    }

    let sides: Vec<Side> = [Side::L, Side::R]
        .into_iter()
        .filter(|&s| array.waveguide(s).is_some())
        .collect();
    let n_ports = sides.len() * n;
    let mut phi = CMatrix::zeros(n_ports, n);
    let mut ports = Vec::with_capacity(n_ports);
    for k in 0..n {
        for (si, &side) in sides.iter().enumerate() {
            let (gamma, sign) = match side {
                Side::L => (basis.gamma_l()[k], basis.sign_l()[k]),
                Side::R => (basis.gamma_r()[k], basis.sign_r()[k]),
            };
            let row = sides.len() * k + si;
            phi[(row, k)] = Complex64::new(sign * gamma.sqrt(), 0.0);
            ports.push(PortLabel {
                mode: k,
                side,
                freq: Some(nu[k]),
            });
        }
    }

    let triple = SlhTriple::new(CMatrix::identity(n_ports, n_ports), omega_rwa, phi)?;
    let abcd = abcd_from_slh(&triple).with_internal_loss(kappa_int);

    Ok(EffectiveSystem {
        a_eff: abcd.a,
        b: abcd.b,
        c: abcd.c,
        d: abcd.d,
        ports,
        input_assignment,
        tone_assignment: active.iter().map(|&(i, j, _, k)| ((i, j), k)).collect(),
        passthrough_modes,
        warnings,
    })
}

/// Effective transfer matrix at slow-frame frequency omega (diagnostics).
pub fn effective_transfer_at(effsys: &EffectiveSystem, omega: f64) -> Result<TransferMatrix> {
    let n = effsys.a_eff.nrows();
    let mut resolvent = -effsys.a_eff.clone();
    for i in 0..n {
        resolvent[(i, i)] += Complex64::new(0.0, omega);
    }
    let lu = resolvent.lu();
    let x = lu.solve(&effsys.b).ok_or(Error::SingularAeff)?;
    let entries = &effsys.c * x + &effsys.d;
    TransferMatrix::new(entries, effsys.ports.clone())
}

/// The supported DC probe: Xi(0) = -C Aeff^-1 B + D.
pub fn effective_transfer(effsys: &EffectiveSystem) -> Result<TransferMatrix> {
    effective_transfer_at(effsys, 0.0)
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn phase(phi: f64) -> Complex64 {
    Complex64::from_polar(1.0, phi)
}

fn one_wg_ports(modes: [usize; 2], freqs: Option<[f64; 2]>) -> Vec<PortLabel> {
    modes
        .iter()
        .enumerate()
        .map(|(idx, &m)| PortLabel {
            mode: m,
            side: Side::L,
            freq: freqs.map(|f| f[idx]),
        })
        .collect()
}

/// Two-mode block of a single-waveguide device with per-mode rates
/// gamma_i, gamma_j; the two-resonator device is the gamma_i = gamma_j case.
pub fn block_2x2(
    eps: f64,
    gamma_i: f64,
    gamma_j: f64,
    kappa_int: f64,
    phi: f64,
) -> Result<TransferMatrix> {
    let kappa_i = gamma_i + kappa_int;
    let kappa_j = gamma_j + kappa_int;
    let den = eps * eps + kappa_i * kappa_j;
    let root = (gamma_i * gamma_j).sqrt();
    let off = Complex64::i() * c(2.0 * eps * root / den);
    let entries = CMatrix::from_row_slice(
        2,
        2,
        &[
            c(1.0 - 2.0 * kappa_j * gamma_i / den),
            off * phase(phi),
            off * phase(-phi),
            c(1.0 - 2.0 * kappa_i * gamma_j / den),
        ],
    );
    TransferMatrix::new(entries, one_wg_ports([0, 1], None))
}

/// The two-resonator, single-waveguide transfer matrix.
pub fn two_ring_1wg(eps: f64, gamma_l: f64, kappa_int: f64, phi: f64) -> Result<TransferMatrix> {
    let kappa = gamma_l + kappa_int;
    let den = eps * eps + kappa * kappa;
    let diag = c(1.0 - 2.0 * kappa * gamma_l / den);
    let off = Complex64::i() * c(2.0 * eps * gamma_l / den);
    let entries = CMatrix::from_row_slice(
        2,
        2,
        &[diag, off * phase(phi), off * phase(-phi), diag],
    );
    TransferMatrix::new(entries, one_wg_ports([0, 1], None))
}

fn two_wg_ports(modes: [usize; 2]) -> Vec<PortLabel> {
    let mut ports = Vec::with_capacity(4);
    for &m in &modes {
        for side in [Side::L, Side::R] {
            ports.push(PortLabel {
                mode: m,
                side,
                freq: None,
            });
        }
    }
    ports
}

/// Four-port block mixing modes i and j when each couples to both waveguides.
/// `rates_*` are (gamma_L, gamma_R, g) with g the +-1 sign of the mode on the
/// second attachment.
#[allow(clippy::too_many_arguments)]
pub fn block_4x4(
    eps: f64,
    rates_i: (f64, f64, f64),
    rates_j: (f64, f64, f64),
    kappa_int: f64,
    phi: f64,
) -> Result<TransferMatrix> {
    let (gli, gri, gi) = rates_i;
    let (glj, grj, gj) = rates_j;
    let kappa_i = gli + gri + kappa_int;
    let kappa_j = glj + grj + kappa_int;
    let den = kappa_i * kappa_j + eps * eps;
    let e = |x: f64| Complex64::i() * c(2.0 * eps * x / den);
    let entries = CMatrix::from_row_slice(
        4,
        4,
        &[
            c(1.0 - 2.0 * kappa_j * gli / den),
            c(-gi * 2.0 * kappa_j * (gli * gri).sqrt() / den),
            e((gli * glj).sqrt()) * phase(phi),
            e(gj * (gli * grj).sqrt()) * phase(phi),
            //
            c(-gi * 2.0 * kappa_j * (gli * gri).sqrt() / den),
            c(1.0 - 2.0 * kappa_j * gri / den),
            e(gi * (glj * gri).sqrt()) * phase(phi),
            e(gi * gj * (gri * grj).sqrt()) * phase(phi),
            //
            e((gli * glj).sqrt()) * phase(-phi),
            e(gi * (glj * gri).sqrt()) * phase(-phi),
            c(1.0 - 2.0 * kappa_i * glj / den),
            c(-gj * 2.0 * kappa_i * (glj * grj).sqrt() / den),
            //
            e(gj * (gli * grj).sqrt()) * phase(-phi),
            e(gi * gj * (gri * grj).sqrt()) * phase(-phi),
            c(-gj * 2.0 * kappa_i * (glj * grj).sqrt() / den),
            c(1.0 - 2.0 * kappa_i * grj / den),
        ],
    );
    TransferMatrix::new(entries, two_wg_ports([0, 1]))
}

/// The two-resonator device in the two-waveguide configuration.
pub fn two_ring_2wg(
    eps: f64,
    gamma_l: f64,
    gamma_r: f64,
    kappa_int: f64,
    phi: f64,
) -> Result<TransferMatrix> {
    let kappa = gamma_l + gamma_r + kappa_int;
    let den = kappa * kappa + eps * eps;
    let root = (gamma_l * gamma_r).sqrt();
    let k = |x: f64| c(2.0 * kappa * x / den);
    let e = |x: f64| Complex64::i() * c(2.0 * eps * x / den);
    let entries = CMatrix::from_row_slice(
        4,
        4,
        &[
            c(1.0) - k(gamma_l),
            k(root),
            e(gamma_l) * phase(phi),
            e(root) * phase(phi),
            //
            k(root),
            c(1.0) - k(gamma_r),
            -e(root) * phase(phi),
            -e(gamma_r) * phase(phi),
            //
            e(gamma_l) * phase(-phi),
            -e(root) * phase(-phi),
            c(1.0) - k(gamma_l),
            -k(root),
            //
            e(root) * phase(-phi),
            -e(gamma_r) * phase(-phi),
            -k(root),
            c(1.0) - k(gamma_r),
        ],
    );
    TransferMatrix::new(entries, two_wg_ports([0, 1]))
}

/// The four-resonator device driven through two of its rings, in the
/// real-entry phase convention phi_1 = pi/2, phi_2 = -pi/2. `eps` is the
/// physical per-tone amplitude; the half-weight pattern gives eps_tilde = eps/2.
pub fn four_way(eps: f64, gamma_l: f64, kappa_int: f64) -> Result<TransferMatrix> {
    let et = eps / 2.0;
    let kappa = gamma_l + kappa_int;
    let den = kappa * kappa + 4.0 * et * et;
    let diag = 1.0 - 2.0 * gamma_l * (kappa * kappa + 2.0 * et * et) / (kappa * den);
    let a = 2.0 * gamma_l * et / den;
    let b = 4.0 * gamma_l * et * et / (kappa * den);
    // circulant rows of [diag, -a, -b, a]
    let first = [diag, -a, -b, a];
    let mut entries = CMatrix::zeros(4, 4);
    for row in 0..4 {
        for col in 0..4 {
            entries[(row, col)] = c(first[(col + 4 - row) % 4]);
        }
    }
    let ports = (0..4)
        .map(|m| PortLabel {
            mode: m,
            side: Side::L,
            freq: None,
        })
        .collect();
    TransferMatrix::new(entries, ports)
}

/// Asymptotic eps -> infinity form of the four-way device: a c1<->c3,
/// c2<->c4 swap with residual kappa_int/kappa diagonal.
pub fn four_way_limit(gamma_l: f64, kappa_int: f64) -> Result<TransferMatrix> {
    let kappa = gamma_l + kappa_int;
    let mut entries = CMatrix::zeros(4, 4);
    for m in 0..4 {
        entries[(m, m)] = c(kappa_int / kappa);
        entries[(m, (m + 2) % 4)] = c(-gamma_l / kappa);
    }
    let ports = (0..4)
        .map(|m| PortLabel {
            mode: m,
            side: Side::L,
            freq: None,
        })
        .collect();
    TransferMatrix::new(entries, ports)
}

/// Closed-form device classes exposed by name (CLI surface).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeviceClass {
    TwoRingOneWg,
    TwoRingTwoWg,
    Block2x2,
    Block4x4,
    FourWay,
}

impl std::str::FromStr for DeviceClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_ring_1wg" => Ok(Self::TwoRingOneWg),
            "two_ring_2wg" => Ok(Self::TwoRingTwoWg),
            "block2x2" => Ok(Self::Block2x2),
            "block4x4" => Ok(Self::Block4x4),
            "four_way" => Ok(Self::FourWay),
            other => Err(Error::UnknownDevice(other.to_string())),
        }
    }
}

/// Block-diagonal assembly of per-pair transfer matrices under the global
/// port ordering (mode ascending, L before R). The pairs must cover every
/// mode exactly once.
pub fn assemble_blocks(
    n_modes: usize,
    pairs: &[(usize, usize)],
    blocks: &[TransferMatrix],
) -> Result<TransferMatrix> {
    if pairs.len() != blocks.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} pairs but {} blocks",
            pairs.len(),
            blocks.len()
        )));
    }
    let mut seen = vec![false; n_modes];
    for &(i, j) in pairs {
        for m in [i, j] {
            if m >= n_modes {
                return Err(Error::IndexOutOfRange {
                    index: m,
                    n: n_modes,
                });
            }
            if seen[m] {
                return Err(Error::OverlappingPairs { mode: m });
            }
            seen[m] = true;
        }
    }
    if let Some(m) = seen.iter().position(|&s| !s) {
        return Err(Error::DimensionMismatch(format!(
            "mode {m} is not covered by any pair"
        )));
    }
    let per_mode = match blocks.first().map(|b| b.dim()) {
        Some(2) => 1,
        Some(4) => 2,
        _ => {
            return Err(Error::DimensionMismatch(
                "blocks must be 2x2 or 4x4".into(),
            ))
        }
    };
    if blocks.iter().any(|b| b.dim() != per_mode * 2) {
        return Err(Error::DimensionMismatch(
            "all blocks must share the same waveguide configuration".into(),
        ));
    }
    let dim = per_mode * n_modes;
    let mut entries = CMatrix::zeros(dim, dim);
    let mut ports = vec![
        PortLabel {
            mode: 0,
            side: Side::L,
            freq: None
        };
        dim
    ];
    for (&(i, j), block) in pairs.iter().zip(blocks.iter()) {
        let global = |local: usize| -> usize {
            let mode = if local < per_mode { i } else { j };
            per_mode * mode + (local % per_mode)
        };
        for r in 0..block.dim() {
            for cidx in 0..block.dim() {
                entries[(global(r), global(cidx))] = block.get(r, cidx);
            }
            let mut label = block.ports()[r];
            label.mode = if r < per_mode { i } else { j };
            ports[global(r)] = label;
        }
    }
    TransferMatrix::new(entries, ports)
}
