//! SLH triples for passive linear networks and their ABCD state-space form.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::modulation::ModulationSpec;

type CMatrix = DMatrix<Complex64>;

pub const UNITARITY_TOL: f64 = 1e-12;
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Time-dependent part of the mode matrix: Omega(t) = Omega + eps(t) * drive.
#[derive(Debug, Clone, PartialEq)]
pub struct DriveTerm {
    /// Real symmetric matrix multiplying the common waveform eps(t).
    pub matrix: DMatrix<f64>,
    pub modulation: ModulationSpec,
}

/// (S, Omega, Phi) description of a passive linear component: scattering
/// matrix, Hermitian mode matrix and ports-by-modes coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SlhTriple {
    s: CMatrix,
    omega: CMatrix,
    phi: CMatrix,
    drive: Option<DriveTerm>,
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.norm()))
}

impl SlhTriple {
    pub fn new(s: CMatrix, omega: CMatrix, phi: CMatrix) -> Result<Self> {
        Self::with_drive(s, omega, phi, None)
    }

    pub fn with_drive(
        s: CMatrix,
        omega: CMatrix,
        phi: CMatrix,
        drive: Option<DriveTerm>,
    ) -> Result<Self> {
        let ports = s.nrows();
        let modes = omega.nrows();
        if s.ncols() != ports || omega.ncols() != modes {
            return Err(Error::DimensionMismatch("S and Omega must be square".into()));
        }
        if phi.nrows() != ports || phi.ncols() != modes {
            return Err(Error::DimensionMismatch(format!(
                "Phi must be ports x modes = {} x {}, got {} x {}",
                ports,
                modes,
                phi.nrows(),
                phi.ncols()
            )));
        }
        let eye = CMatrix::identity(ports, ports);
        if max_abs(&(s.adjoint() * &s - eye)) > UNITARITY_TOL {
            return Err(Error::DimensionMismatch("S is not unitary".into()));
        }
        if max_abs(&(omega.adjoint() - &omega)) > HERMITICITY_TOL {
            return Err(Error::DimensionMismatch("Omega is not Hermitian".into()));
        }
        if let Some(d) = &drive {
            if d.matrix.nrows() != modes || d.matrix.ncols() != modes {
                return Err(Error::DimensionMismatch(
                    "drive matrix must be modes x modes".into(),
                ));
            }
        }
        Ok(Self {
            s,
            omega,
            phi,
            drive,
        })
    }

    pub fn s(&self) -> &CMatrix {
        &self.s
    }

    pub fn omega(&self) -> &CMatrix {
        &self.omega
    }

    pub fn phi(&self) -> &CMatrix {
        &self.phi
    }

    pub fn drive(&self) -> Option<&DriveTerm> {
        self.drive.as_ref()
    }

    pub fn modes(&self) -> usize {
        self.omega.nrows()
    }

    pub fn ports(&self) -> usize {
        self.s.nrows()
    }
}

/// State-space form of the Heisenberg equations and input-output relation.
#[derive(Debug, Clone, PartialEq)]
pub struct AbcdSystem {
    pub a: CMatrix,
    pub b: CMatrix,
    pub c: CMatrix,
    pub d: CMatrix,
    /// Present when A carries a time-dependent part A(t) = a + (-i eps(t)) * drive.
    pub drive: Option<DriveTerm>,
}

impl AbcdSystem {
    pub fn modes(&self) -> usize {
        self.a.nrows()
    }

    pub fn ports(&self) -> usize {
        self.d.nrows()
    }

    pub fn is_time_dependent(&self) -> bool {
        self.drive.is_some()
    }

    /// Add the phenomenological internal loss -kappa_int/2 to every mode.
    pub fn with_internal_loss(mut self, kappa_int: f64) -> Self {
        let half = Complex64::new(kappa_int / 2.0, 0.0);
        for i in 0..self.a.nrows() {
            self.a[(i, i)] -= half;
        }
        self
    }
}

/// A = -1/2 Phi^dag Phi - i Omega, B = -Phi^dag S, C = Phi, D = S.
pub fn abcd_from_slh(triple: &SlhTriple) -> AbcdSystem {
    let phi = triple.phi();
    let phi_dag = phi.adjoint();
    let a = -(&phi_dag * phi).scale(0.5) - triple.omega().map(|x| Complex64::i() * x);
    let b = -(&phi_dag * triple.s());
    AbcdSystem {
        a,
        b,
        c: phi.clone(),
        d: triple.s().clone(),
        drive: triple.drive().cloned(),
    }
}

/// Frequency-domain transfer function Xi(omega) = C (i omega I - A)^-1 B + D.
/// Only defined for time-independent systems.
pub fn transfer_function(system: &AbcdSystem, omega: f64) -> Result<CMatrix> {
    if system.is_time_dependent() {
        return Err(Error::TimeDependentA);
    }
    let m = system.modes();
    let mut resolvent = -system.a.clone();
    for i in 0..m {
        resolvent[(i, i)] += Complex64::new(0.0, omega);
    }
    let lu = resolvent.lu();
    match lu.solve(&system.b) {
        Some(x) => Ok(&system.c * x + &system.d),
        None => Err(Error::SingularResolvent { omega }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cplx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_mode(gamma: f64, omega0: f64) -> AbcdSystem {
        let s = CMatrix::identity(1, 1);
        let omega = CMatrix::from_element(1, 1, cplx(omega0, 0.0));
        let phi = CMatrix::from_element(1, 1, cplx(gamma.sqrt(), 0.0));
        abcd_from_slh(&SlhTriple::new(s, omega, phi).unwrap())
    }

    #[test]
    fn single_mode_abcd_entries() {
        let sys = single_mode(4.0, 3.0);
        assert_abs_diff_eq!(sys.a[(0, 0)].re, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sys.a[(0, 0)].im, -3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sys.b[(0, 0)].re, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sys.c[(0, 0)].re, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sys.d[(0, 0)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn lossless_cavity_reflects_with_pi_phase() {
        let sys = single_mode(4.0, 0.0);
        let xi = transfer_function(&sys, 0.0).unwrap();
        assert_abs_diff_eq!(xi[(0, 0)].re, -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(xi[(0, 0)].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn far_off_resonance_passthrough() {
        let sys = single_mode(4.0, 0.0);
        let xi = transfer_function(&sys, 1.0e9).unwrap();
        assert!((xi[(0, 0)] - cplx(1.0, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn decoupled_cavity() {
        let s = CMatrix::identity(1, 1);
        let omega = CMatrix::from_element(1, 1, cplx(2.0, 0.0));
        let phi = CMatrix::zeros(1, 1);
        let sys = abcd_from_slh(&SlhTriple::new(s, omega, phi).unwrap());
        assert_abs_diff_eq!(sys.a[(0, 0)].im, -2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sys.b[(0, 0)].norm(), 0.0, epsilon = 1e-12);
        let xi = transfer_function(&sys, 0.5).unwrap();
        assert_abs_diff_eq!(xi[(0, 0)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn time_dependent_a_is_rejected() {
        let spec = ModulationSpec::new(
            vec![1, -1],
            vec![crate::modulation::Tone {
                eps: 0.1,
                omega_d: 2.0,
                phi: 0.0,
            }],
        )
        .unwrap();
        let drive = DriveTerm {
            matrix: DMatrix::identity(1, 1),
            modulation: spec,
        };
        let triple = SlhTriple::with_drive(
            CMatrix::identity(1, 1),
            CMatrix::zeros(1, 1),
            CMatrix::from_element(1, 1, cplx(1.0, 0.0)),
            Some(drive),
        )
        .unwrap();
        let sys = abcd_from_slh(&triple);
        assert!(matches!(
            transfer_function(&sys, 0.0),
            Err(Error::TimeDependentA)
        ));
    }

    #[test]
    fn undamped_resonance_is_singular() {
        let sys = single_mode(0.0, 2.0);
        assert!(matches!(
            transfer_function(&sys, 2.0),
            Err(Error::SingularResolvent { .. })
        ));
    }

    #[test]
    fn passivity_bookkeeping() {
        // lossless time-independent: A + A^dag = -C^dag C
        let sys = single_mode(3.0, 1.0);
        let lhs = &sys.a + sys.a.adjoint();
        let rhs = -(sys.c.adjoint() * &sys.c);
        assert!(max_abs(&(lhs - rhs)) < 1e-10);
    }

    proptest! {
        /// Any lossless passive system has a unitary transfer function on the
        /// real axis.
        #[test]
        fn lossless_transfer_is_unitary(seed in 0u64..200, omega in -5.0f64..5.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let modes = rng.gen_range(1..4usize);
            let ports = rng.gen_range(1..4usize);
            let sym = DMatrix::<f64>::from_fn(modes, modes, |_, _| rng.gen_range(-1.0..1.0));
            let omega_m = (&sym + sym.transpose()).map(|x| cplx(x, 0.0));
            let phi = DMatrix::<f64>::from_fn(ports, modes, |_, _| rng.gen_range(-1.0..1.0))
                .map(|x| cplx(x, 0.0));
            let triple = SlhTriple::new(CMatrix::identity(ports, ports), omega_m, phi).unwrap();
            let sys = abcd_from_slh(&triple);
            if let Ok(xi) = transfer_function(&sys, omega) {
                let gram = xi.adjoint() * &xi;
                let eye = CMatrix::identity(ports, ports);
                prop_assert!(max_abs(&(gram - eye)) < 1e-10);
            }
        }
    }
}
