//! Time-dependent drive descriptions and the normal-mode coupling patterns
//! they induce.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{NormalModeBasis, RectangularLattice};

/// Entries of V^T diag(f) V below this magnitude are pruned.
pub const PATTERN_PRUNE_TOL: f64 = 1e-12;

/// One harmonic tone of the common modulation: eps * cos(omega_d t + phi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    /// Amplitude (rad/s).
    pub eps: f64,
    /// Frequency (rad/s), strictly positive.
    pub omega_d: f64,
    /// Phase (rad).
    pub phi: f64,
}

/// Per-resonator sign coefficients f_j in {-1, 0, +1} plus the tone list.
#[derive(Debug, Clone, PartialEq)]
pub struct ModulationSpec {
    signs: Vec<i8>,
    tones: Vec<Tone>,
}

impl ModulationSpec {
    pub fn new(signs: Vec<i8>, tones: Vec<Tone>) -> Result<Self> {
        if !signs.iter().all(|s| matches!(s, -1 | 0 | 1)) {
            return Err(Error::DimensionMismatch(
                "sign coefficients must be in {-1, 0, +1}".into(),
            ));
        }
        if !tones.is_empty() && signs.iter().all(|&s| s == 0) {
            return Err(Error::DimensionMismatch(
                "tones present but every sign coefficient is zero".into(),
            ));
        }
        for t in &tones {
            if t.omega_d <= 0.0 {
                return Err(Error::NegativeRate {
                    what: "tone frequency",
                    value: t.omega_d,
                });
            }
            if t.eps < 0.0 {
                return Err(Error::NegativeRate {
                    what: "tone amplitude",
                    value: t.eps,
                });
            }
        }
        Ok(Self { signs, tones })
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    pub fn tones(&self) -> &[Tone] {
        &self.tones
    }

    /// Common drive waveform eps(t) = sum_k eps_k cos(omega_k t + phi_k).
    pub fn eps_at(&self, t: f64) -> f64 {
        self.tones
            .iter()
            .map(|tone| tone.eps * (tone.omega_d * t + tone.phi).cos())
            .sum()
    }

    /// Replace every tone amplitude by a shared value (used by sweeps).
    pub fn with_amplitude(&self, eps: f64) -> Self {
        let tones = self
            .tones
            .iter()
            .map(|t| Tone { eps, ..*t })
            .collect();
        Self {
            signs: self.signs.clone(),
            tones,
        }
    }
}

/// Off-diagonal and diagonal weights of V^T diag(f) V: which mode pairs the
/// chosen signs couple, and any residual diagonal drive.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingPattern {
    /// (i, j, weight) with i < j, |weight| <= 1.
    pairs: Vec<(usize, usize, f64)>,
    /// Residual diagonal weights d_i (same length as the mode count).
    diagonal: Vec<f64>,
}

impl CouplingPattern {
    pub fn pairs(&self) -> &[(usize, usize, f64)] {
        &self.pairs
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn n_modes(&self) -> usize {
        self.diagonal.len()
    }

    /// True when every pair carries weight 1 (the generic pipeline's nominal
    /// assumption); non-unit weights are legal but worth a caller warning.
    pub fn has_unit_weights(&self) -> bool {
        self.pairs.iter().all(|&(_, _, w)| (w.abs() - 1.0).abs() < 1e-9)
    }

    /// Pairs as an incidence set, ignoring weights.
    pub fn pair_set(&self) -> Vec<(usize, usize)> {
        self.pairs.iter().map(|&(i, j, _)| (i, j)).collect()
    }

    /// Connected components of the pattern graph (modes as nodes).
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let n = self.n_modes();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            if parent[x] != x {
                let root = find(parent, parent[x]);
                parent[x] = root;
            }
            parent[x]
        }
        for &(i, j, _) in &self.pairs {
            let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
            if ri != rj {
                parent[ri] = rj;
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for k in 0..n {
            let r = find(&mut parent, k);
            groups.entry(r).or_default().push(k);
        }
        groups.into_values().collect()
    }
}

/// Project a sign choice onto the normal-mode basis: M = V^T diag(f) V.
pub fn pattern_from_signs(basis: &NormalModeBasis, signs: &[i8]) -> Result<CouplingPattern> {
    let n = basis.n();
    if signs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: signs.len(),
        });
    }
    let v = basis.vectors();
    let f = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            signs[i] as f64
        } else {
            0.0
        }
    });
    let m = v.transpose() * f * v;
    let mut pairs = Vec::new();
    let mut diagonal = vec![0.0; n];
    for i in 0..n {
        if m[(i, i)].abs() > PATTERN_PRUNE_TOL {
            diagonal[i] = m[(i, i)];
        }
        for j in (i + 1)..n {
            if m[(i, j)].abs() > PATTERN_PRUNE_TOL {
                pairs.push((i, j, m[(i, j)]));
            }
        }
    }
    Ok(CouplingPattern { pairs, diagonal })
}

/// The three generalized nonoverlapping patterns of a rectangular array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RectangularPattern {
    P1,
    P2,
    P3,
}

/// Sign choices realizing the generalized patterns: P1 = (-1)^(l+m),
/// P2 = (-1)^(m+1), P3 = (-1)^(l+1). P2 needs an even number of columns and
/// P3 an even number of rows, otherwise the drive activates forbidden
/// diagonal terms.
pub fn rectangular_pattern_signs(
    lattice: &RectangularLattice,
    which: RectangularPattern,
) -> Result<Vec<i8>> {
    match which {
        RectangularPattern::P2 if lattice.cols % 2 == 1 => {
            return Err(Error::OddSideForbidden {
                pattern: "P2",
                rows: lattice.rows,
                cols: lattice.cols,
            })
        }
        RectangularPattern::P3 if lattice.rows % 2 == 1 => {
            return Err(Error::OddSideForbidden {
                pattern: "P3",
                rows: lattice.rows,
                cols: lattice.cols,
            })
        }
        _ => {}
    }
    let mut signs = vec![0i8; lattice.n()];
    for l in 1..=lattice.rows {
        for m in 1..=lattice.cols {
            let exponent = match which {
                RectangularPattern::P1 => l + m,
                RectangularPattern::P2 => m + 1,
                RectangularPattern::P3 => l + 1,
            };
            signs[lattice.node(l, m)] = if exponent % 2 == 0 { 1 } else { -1 };
        }
    }
    Ok(signs)
}

/// Distinct level splittings |omega_j - omega_i| over the pattern pairs,
/// with the pair -> splitting-index mapping. Splittings closer than the
/// degeneracy tolerance are merged.
pub fn required_tones(
    pattern: &CouplingPattern,
    frequencies: &[f64],
) -> Result<(Vec<f64>, Vec<usize>)> {
    if pattern.is_empty() {
        return Err(Error::NoResonantTone(
            "pattern has no coupled pairs".into(),
        ));
    }
    let scale = frequencies
        .iter()
        .fold(0.0f64, |a, &x| a.max(x.abs()))
        .max(1.0);
    let tol = crate::graph::DEGENERACY_REL_TOL * scale;
    let mut splittings: Vec<f64> = Vec::new();
    let mut assignment = Vec::with_capacity(pattern.pairs().len());
    for &(i, j, _) in pattern.pairs() {
        let d = (frequencies[j] - frequencies[i]).abs();
        match splittings.iter().position(|&s| (s - d).abs() < tol) {
            Some(k) => assignment.push(k),
            None => {
                splittings.push(d);
                assignment.push(splittings.len() - 1);
            }
        }
    }
    Ok((splittings, assignment))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{normal_modes, rectangular_modes, ResonatorArray, Side, Waveguide};
    use approx::assert_abs_diff_eq;

    fn two_ring_basis() -> NormalModeBasis {
        let array = ResonatorArray::new(
            2,
            100.0,
            vec![(0, 1, 3.0)],
            vec![Waveguide {
                node: 0,
                rate: 2.0,
                side: Side::L,
            }],
            0.0,
        )
        .unwrap();
        normal_modes(&array)
    }

    fn four_ring_basis(u: f64, v: f64) -> NormalModeBasis {
        let array = ResonatorArray::new(
            4,
            50.0,
            vec![(0, 1, u), (2, 3, u), (1, 2, v), (0, 3, v)],
            vec![Waveguide {
                node: 0,
                rate: 4.0,
                side: Side::L,
            }],
            0.0,
        )
        .unwrap();
        normal_modes(&array)
    }

    #[test]
    fn two_ring_antisymmetric_drive() {
        let pattern = pattern_from_signs(&two_ring_basis(), &[1, -1]).unwrap();
        assert_eq!(pattern.pairs().len(), 1);
        let (i, j, w) = pattern.pairs()[0];
        assert_eq!((i, j), (0, 1));
        assert_abs_diff_eq!(w.abs(), 1.0, epsilon = 1e-12);
        assert!(pattern.diagonal().iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn four_ring_half_drive_gives_p4() {
        let pattern = pattern_from_signs(&four_ring_basis(1.0, 2.0), &[1, -1, 0, 0]).unwrap();
        let set = pattern.pair_set();
        assert_eq!(set, vec![(0, 1), (0, 3), (1, 2), (2, 3)]);
        for &(_, _, w) in pattern.pairs() {
            assert_abs_diff_eq!(w.abs(), 0.5, epsilon = 1e-12);
        }
        assert!(pattern.diagonal().iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn uniform_signs_commute_with_basis() {
        let pattern = pattern_from_signs(&four_ring_basis(1.0, 2.0), &[1, 1, 1, 1]).unwrap();
        assert!(pattern.is_empty());
        for d in pattern.diagonal() {
            assert_abs_diff_eq!(*d, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn three_patterns_partition_all_pairs() {
        let basis = four_ring_basis(1.0, 2.0);
        let p1 = pattern_from_signs(&basis, &[1, -1, 1, -1]).unwrap();
        let p2 = pattern_from_signs(&basis, &[1, -1, -1, 1]).unwrap();
        let p3 = pattern_from_signs(&basis, &[1, 1, -1, -1]).unwrap();
        assert_eq!(p1.pair_set(), vec![(0, 3), (1, 2)]);
        assert_eq!(p2.pair_set(), vec![(0, 1), (2, 3)]);
        assert_eq!(p3.pair_set(), vec![(0, 2), (1, 3)]);
        let mut all: Vec<(usize, usize)> = [p1, p2, p3]
            .iter()
            .flat_map(|p| p.pair_set())
            .collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 6);
        for p in [&[1, -1, 1, -1], &[1, -1, -1, 1], &[1, 1, -1, -1]] {
            let pat = pattern_from_signs(&basis, *p).unwrap();
            assert!(pat.has_unit_weights());
            let trace: f64 =
                pat.diagonal().iter().sum::<f64>();
            let f_sum: f64 = p.iter().map(|&s| s as f64).sum();
            assert_abs_diff_eq!(trace, f_sum, epsilon = 1e-12);
        }
    }

    #[test]
    fn pattern_symmetry_and_trace_preserved() {
        let basis = four_ring_basis(1.3, 2.9);
        let signs = [1i8, 0, -1, 1];
        let pattern = pattern_from_signs(&basis, &signs).unwrap();
        let trace: f64 = pattern.diagonal().iter().sum();
        let f_sum: f64 = signs.iter().map(|&s| s as f64).sum();
        assert_abs_diff_eq!(trace, f_sum, epsilon = 1e-12);
        for &(_, _, w) in pattern.pairs() {
            assert!(w.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn rectangular_p1_signs_and_pattern() {
        let lat = RectangularLattice {
            rows: 2,
            cols: 2,
            u: 1.0,
            v: 2.0,
        };
        let f = rectangular_pattern_signs(&lat, RectangularPattern::P1).unwrap();
        assert_eq!(f, vec![1, -1, -1, 1]);
        let basis = rectangular_modes(&lat, 0.0, &[]).unwrap();
        let pattern = pattern_from_signs(&basis, &f).unwrap();
        assert_eq!(pattern.pair_set(), vec![(0, 3), (1, 2)]);
    }

    #[test]
    fn rectangular_p1_diagonal_free_for_many_sizes() {
        for rows in 1..=4usize {
            for cols in 1..=4usize {
                if rows * cols < 2 {
                    continue;
                }
                let lat = RectangularLattice {
                    rows,
                    cols,
                    u: 1.0,
                    v: 1.618,
                };
                let f = rectangular_pattern_signs(&lat, RectangularPattern::P1).unwrap();
                let basis = rectangular_modes(&lat, 0.0, &[]).unwrap();
                let pattern = pattern_from_signs(&basis, &f).unwrap();
                for d in pattern.diagonal() {
                    assert!(d.abs() < 1e-12, "{rows}x{cols}: diagonal {d}");
                }
            }
        }
    }

    #[test]
    fn rectangular_p3_on_2x3() {
        let lat = RectangularLattice {
            rows: 2,
            cols: 3,
            u: 1.0,
            v: 3.0 / 2.0f64.sqrt(),
        };
        let f = rectangular_pattern_signs(&lat, RectangularPattern::P3).unwrap();
        assert_eq!(f, vec![1, 1, 1, -1, -1, -1]);
        let basis = rectangular_modes(&lat, 0.0, &[]).unwrap();
        let pattern = pattern_from_signs(&basis, &f).unwrap();
        // pairs the modes three consecutive gaps apart: (1,4),(2,5),(3,6)
        assert_eq!(pattern.pair_set(), vec![(0, 3), (1, 4), (2, 5)]);
        assert!(pattern.has_unit_weights());
    }

    #[test]
    fn rectangular_p2_odd_cols_forbidden() {
        let lat = RectangularLattice {
            rows: 2,
            cols: 3,
            u: 1.0,
            v: 1.0,
        };
        let err = rectangular_pattern_signs(&lat, RectangularPattern::P2).unwrap_err();
        assert!(matches!(err, crate::error::Error::OddSideForbidden { .. }));
    }

    #[test]
    fn tones_for_four_ring_patterns() {
        let basis = four_ring_basis(1.0, 2.0);
        let p2 = pattern_from_signs(&basis, &[1, -1, -1, 1]).unwrap();
        let (tones, map) = required_tones(&p2, basis.frequencies()).unwrap();
        assert_eq!(tones.len(), 1);
        assert_abs_diff_eq!(tones[0], 2.0, epsilon = 1e-10);
        assert_eq!(map, vec![0, 0]);

        let p4 = pattern_from_signs(&basis, &[1, -1, 0, 0]).unwrap();
        let (tones, _) = required_tones(&p4, basis.frequencies()).unwrap();
        assert_eq!(tones.len(), 2);
        assert_abs_diff_eq!(tones[0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(tones[1], 6.0, epsilon = 1e-10);
    }

    #[test]
    fn tones_for_2x3_p3() {
        // With v = 3u/sqrt(2) the three P3 pairs share the single splitting
        // 2v = 3*sqrt(2)*u (three consecutive gaps of sqrt(2)*u).
        let u = 1.0;
        let lat = RectangularLattice {
            rows: 2,
            cols: 3,
            u,
            v: 3.0 * u / 2.0f64.sqrt(),
        };
        let basis = rectangular_modes(&lat, 0.0, &[]).unwrap();
        let f = rectangular_pattern_signs(&lat, RectangularPattern::P3).unwrap();
        let pattern = pattern_from_signs(&basis, &f).unwrap();
        let (tones, map) = required_tones(&pattern, basis.frequencies()).unwrap();
        assert_eq!(tones.len(), 1);
        assert_abs_diff_eq!(tones[0], 3.0 * 2.0f64.sqrt() * u, epsilon = 1e-10);
        assert_eq!(map, vec![0, 0, 0]);
    }

    #[test]
    fn empty_pattern_has_no_tones() {
        let basis = four_ring_basis(1.0, 2.0);
        let empty = pattern_from_signs(&basis, &[1, 1, 1, 1]).unwrap();
        assert!(required_tones(&empty, basis.frequencies()).is_err());
    }

    #[test]
    fn spec_rejects_zero_sign_drive() {
        let tone = Tone {
            eps: 1.0,
            omega_d: 2.0,
            phi: 0.0,
        };
        assert!(ModulationSpec::new(vec![0, 0], vec![tone]).is_err());
        assert!(ModulationSpec::new(vec![0, 0], vec![]).is_ok());
    }
}
