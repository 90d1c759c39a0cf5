//! Resonator arrays as weighted coupling graphs, and their normal modes.
//!
//! An array of identical-frequency rings is a weighted simple connected graph;
//! diagonalizing the quadratic Hamiltonian h0 = omega0*I + u yields the normal
//! modes together with their per-mode waveguide coupling rates.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance below which two mode frequencies are treated as degenerate.
pub const DEGENERACY_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl std::fmt::Display for Side {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Side::L => write!(f, "L"),
            Side::R => write!(f, "R"),
        }
    }
}

/// Waveguide attachment: a single resonator coupled to a bus at rate `rate` (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waveguide {
    pub node: usize,
    pub rate: f64,
    pub side: Side,
}

/// A validated array of coupled ring resonators.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonatorArray {
    n: usize,
    omega0: f64,
    couplings: Vec<(usize, usize, f64)>,
    waveguides: Vec<Waveguide>,
    kappa_int: f64,
}

impl ResonatorArray {
    /// Build and validate an array. The coupling graph must be simple and
    /// connected, with positive coupling strengths and nonnegative rates.
    pub fn new(
        n: usize,
        omega0: f64,
        couplings: Vec<(usize, usize, f64)>,
        waveguides: Vec<Waveguide>,
        kappa_int: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch("array needs n >= 1".into()));
        }
        if kappa_int < 0.0 {
            return Err(Error::NegativeRate {
                what: "kappa_int",
                value: kappa_int,
            });
        }
        let mut seen = std::collections::HashSet::new();
        for &(i, j, u) in &couplings {
            if i >= n {
                return Err(Error::IndexOutOfRange { index: i, n });
            }
            if j >= n {
                return Err(Error::IndexOutOfRange { index: j, n });
            }
            if i == j {
                return Err(Error::SelfLoop { i });
            }
            if u <= 0.0 {
                return Err(Error::NegativeRate {
                    what: "coupling strength",
                    value: u,
                });
            }
            let key = (i.min(j), i.max(j));
            if !seen.insert(key) {
                return Err(Error::DuplicateEdge { i: key.0, j: key.1 });
            }
        }
        let mut sides = std::collections::HashSet::new();
        for w in &waveguides {
            if w.node >= n {
                return Err(Error::IndexOutOfRange { index: w.node, n });
            }
            if w.rate < 0.0 {
                return Err(Error::NegativeRate {
                    what: "waveguide rate",
                    value: w.rate,
                });
            }
            if !sides.insert(w.side) {
                return Err(Error::DimensionMismatch(format!(
                    "more than one waveguide on side {}",
                    w.side
                )));
            }
        }
        let array = Self {
            n,
            omega0,
            couplings,
            waveguides,
            kappa_int,
        };
        if !array.is_connected() {
            return Err(Error::DisconnectedGraph);
        }
        Ok(array)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn kappa_int(&self) -> f64 {
        self.kappa_int
    }

    pub fn couplings(&self) -> &[(usize, usize, f64)] {
        &self.couplings
    }

    pub fn waveguides(&self) -> &[Waveguide] {
        &self.waveguides
    }

    pub fn waveguide(&self, side: Side) -> Option<&Waveguide> {
        self.waveguides.iter().find(|w| w.side == side)
    }

    /// Weighted coupling matrix u (zero diagonal).
    pub fn coupling_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for &(i, j, u) in &self.couplings {
            m[(i, j)] = u;
            m[(j, i)] = u;
        }
        m
    }

    /// Hamiltonian matrix h0 = omega0*I + u.
    pub fn h0(&self) -> DMatrix<f64> {
        let mut m = self.coupling_matrix();
        for i in 0..self.n {
            m[(i, i)] += self.omega0;
        }
        m
    }

    /// Unweighted adjacency as an edge list (i < j).
    pub fn edges_unweighted(&self) -> Vec<(usize, usize)> {
        self.couplings
            .iter()
            .map(|&(i, j, _)| (i.min(j), i.max(j)))
            .collect()
    }

    fn is_connected(&self) -> bool {
        if self.n == 1 {
            return true;
        }
        let mut adj = vec![Vec::new(); self.n];
        for &(i, j, _) in &self.couplings {
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }
}

/// Orthonormal normal modes of an array, sorted by frequency ascending,
/// with per-mode waveguide coupling rates and signs.
#[derive(Debug, Clone)]
pub struct NormalModeBasis {
    /// Columns are modes expressed in the resonator basis.
    vectors: DMatrix<f64>,
    frequencies: Vec<f64>,
    gamma_l: Vec<f64>,
    gamma_r: Vec<f64>,
    sign_l: Vec<f64>,
    sign_r: Vec<f64>,
}

impl NormalModeBasis {
    pub fn n(&self) -> usize {
        self.frequencies.len()
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn gamma_l(&self) -> &[f64] {
        &self.gamma_l
    }

    pub fn gamma_r(&self) -> &[f64] {
        &self.gamma_r
    }

    /// Sign of the attachment-row entry for the first waveguide, +1 when absent.
    pub fn sign_l(&self) -> &[f64] {
        &self.sign_l
    }

    /// Sign of the attachment-row entry for the second waveguide, +1 when absent.
    pub fn sign_r(&self) -> &[f64] {
        &self.sign_r
    }

    pub fn has_right_waveguide(&self) -> bool {
        self.gamma_r.iter().any(|&g| g > 0.0)
    }

    /// Splitting omega_j - omega_i for a mode pair.
    pub fn splitting(&self, i: usize, j: usize) -> f64 {
        self.frequencies[j] - self.frequencies[i]
    }

    /// Smallest gap between consecutive mode frequencies (None for one mode).
    pub fn min_consecutive_gap(&self) -> Option<f64> {
        self.frequencies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(None, |acc, g| match acc {
                None => Some(g),
                Some(a) => Some(a.min(g)),
            })
    }

    /// Groups of mode indices whose frequencies coincide within the
    /// degeneracy tolerance.
    pub fn degenerate_groups(&self) -> Vec<Vec<usize>> {
        let scale = self
            .frequencies
            .iter()
            .fold(0.0f64, |a, &x| a.max(x.abs()))
            .max(1.0);
        let tol = DEGENERACY_REL_TOL * scale;
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for k in 0..self.frequencies.len() {
            match groups.last_mut() {
                Some(g) if (self.frequencies[k] - self.frequencies[g[0]]).abs() < tol => {
                    g.push(k)
                }
                _ => groups.push(vec![k]),
            }
        }
        groups
    }

    fn from_vectors(array: &ResonatorArray, vectors: DMatrix<f64>, frequencies: Vec<f64>) -> Self {
        let n = frequencies.len();
        let rate_of = |side: Side| -> (Vec<f64>, Vec<f64>) {
            let mut gamma = vec![0.0; n];
            let mut sign = vec![1.0; n];
            if let Some(w) = array.waveguide(side) {
                for k in 0..n {
                    let entry = vectors[(w.node, k)];
                    gamma[k] = w.rate * entry * entry;
                    if entry < 0.0 {
                        sign[k] = -1.0;
                    }
                }
            }
            (gamma, sign)
        };
        let (gamma_l, sign_l) = rate_of(Side::L);
        let (gamma_r, sign_r) = rate_of(Side::R);
        NormalModeBasis {
            vectors,
            frequencies,
            gamma_l,
            gamma_r,
            sign_l,
            sign_r,
        }
    }
}

/// Fix the overall sign of each column: first entry above threshold positive.
fn normalize_column_signs(m: &mut DMatrix<f64>) {
    for k in 0..m.ncols() {
        let mut flip = false;
        for i in 0..m.nrows() {
            let x = m[(i, k)];
            if x.abs() > 1e-9 {
                flip = x < 0.0;
                break;
            }
        }
        if flip {
            for i in 0..m.nrows() {
                m[(i, k)] = -m[(i, k)];
            }
        }
    }
}

/// Diagonalize the static Hamiltonian of an array. Modes are sorted by
/// frequency ascending; exact ties are broken by lexicographic comparison of
/// the sign-normalized eigenvectors so outputs are deterministic.
pub fn normal_modes(array: &ResonatorArray) -> NormalModeBasis {
    let h0 = array.h0();
    let eig = nalgebra::SymmetricEigen::new(h0);
    let n = array.n();
    let mut order: Vec<usize> = (0..n).collect();
    let mut vectors = eig.eigenvectors.clone();
    normalize_column_signs(&mut vectors);
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap()
            .then_with(|| {
                for i in 0..n {
                    let cmp = vectors[(i, a)].partial_cmp(&vectors[(i, b)]).unwrap();
                    if cmp != std::cmp::Ordering::Equal {
                        return cmp;
                    }
                }
                std::cmp::Ordering::Equal
            })
    });
    let sorted_vectors = DMatrix::from_fn(n, n, |i, k| vectors[(i, order[k])]);
    let frequencies: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    NormalModeBasis::from_vectors(array, sorted_vectors, frequencies)
}

/// A rectangular L x M array with horizontal coupling `u` (within a row)
/// and vertical coupling `v` (within a column). Resonator (l, m) maps to the
/// flat index (l-1)*M + (m-1) with 1-based lattice coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectangularLattice {
    pub rows: usize,
    pub cols: usize,
    pub u: f64,
    pub v: f64,
}

impl RectangularLattice {
    pub fn n(&self) -> usize {
        self.rows * self.cols
    }

    /// Flat index of lattice site (l, m), 1-based.
    pub fn node(&self, l: usize, m: usize) -> usize {
        (l - 1) * self.cols + (m - 1)
    }

    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut edges = Vec::new();
        for l in 1..=self.rows {
            for m in 1..self.cols {
                edges.push((self.node(l, m), self.node(l, m + 1), self.u));
            }
        }
        for m in 1..=self.cols {
            for l in 1..self.rows {
                edges.push((self.node(l, m), self.node(l + 1, m), self.v));
            }
        }
        edges
    }

    pub fn array(
        &self,
        omega0: f64,
        waveguides: Vec<Waveguide>,
        kappa_int: f64,
    ) -> Result<ResonatorArray> {
        ResonatorArray::new(self.n(), omega0, self.edges(), waveguides, kappa_int)
    }

    /// Discrete-sine mode coefficient mu_{(p,q)}^{(l,m)}.
    pub fn mode_coefficient(&self, p: usize, q: usize, l: usize, m: usize) -> f64 {
        let lf = (self.rows + 1) as f64;
        let mf = (self.cols + 1) as f64;
        2.0 * (std::f64::consts::PI * (l as f64) * (p as f64) / lf).sin()
            * (std::f64::consts::PI * (m as f64) * (q as f64) / mf).sin()
            / (lf * mf).sqrt()
    }

    /// Closed-form mode frequency omega_{(p,q)}.
    pub fn mode_frequency(&self, omega0: f64, p: usize, q: usize) -> f64 {
        let lf = (self.rows + 1) as f64;
        let mf = (self.cols + 1) as f64;
        omega0
            + 2.0 * self.v * (std::f64::consts::PI * (p as f64) / lf).cos()
            + 2.0 * self.u * (std::f64::consts::PI * (q as f64) / mf).cos()
    }
}

/// Closed-form normal modes of a rectangular lattice, from products of
/// discrete sines. Agrees with `normal_modes` of the same lattice up to
/// rotations within degenerate subspaces.
pub fn rectangular_modes(
    lattice: &RectangularLattice,
    omega0: f64,
    waveguides: &[Waveguide],
) -> Result<NormalModeBasis> {
    let n = lattice.n();
    for w in waveguides {
        if w.node >= n {
            return Err(Error::IndexOutOfRange { index: w.node, n });
        }
    }
    // One column per (p, q), then sort ascending by frequency.
    let mut labels: Vec<(usize, usize)> = Vec::with_capacity(n);
    for p in 1..=lattice.rows {
        for q in 1..=lattice.cols {
            labels.push((p, q));
        }
    }
    labels.sort_by(|&(pa, qa), &(pb, qb)| {
        let fa = lattice.mode_frequency(omega0, pa, qa);
        let fb = lattice.mode_frequency(omega0, pb, qb);
        fa.partial_cmp(&fb).unwrap().then((pa, qa).cmp(&(pb, qb)))
    });
    let mut vectors = DMatrix::zeros(n, n);
    let mut frequencies = Vec::with_capacity(n);
    for (k, &(p, q)) in labels.iter().enumerate() {
        for l in 1..=lattice.rows {
            for m in 1..=lattice.cols {
                vectors[(lattice.node(l, m), k)] = lattice.mode_coefficient(p, q, l, m);
            }
        }
        frequencies.push(lattice.mode_frequency(omega0, p, q));
    }
    normalize_column_signs(&mut vectors);
    // Rates need an array context only for the attachment rows; synthesize one.
    let array = ResonatorArray::new(
        n,
        omega0,
        lattice.edges(),
        waveguides.to_vec(),
        0.0,
    )?;
    Ok(NormalModeBasis::from_vectors(&array, vectors, frequencies))
}
