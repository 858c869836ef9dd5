//! Rotating-frame dipole-dipole interactions on the two-atom dressed
//! manifold.
//!
//! The 9x9 [`PairOperator`] in the ordered product basis
//! `(s, p0, p+) x (s, p0, p+)` is the single source of truth: every named
//! matrix element (`vcc`, `vtt`, `vct`, the off-diagonal exchange term)
//! delegates to [`expectation`] rather than a hand-derived prefactor.

use nalgebra::{SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dressing::{DressedState, DriveConfig};
use crate::scalar::{cxr, Cx, Scalar};

/// Errors from geometry or drive bookkeeping.
#[derive(Debug, Error)]
pub enum InteractionError {
    #[error("separation must be positive and finite, got {0}")]
    BadSeparation(f64),
    #[error("drive frequencies are not set; attach a dataset first")]
    MissingDriveFrequencies,
}

/// Pair geometry: separation `r` (um) and angle `theta` (radians) between
/// the displacement vector and the quantization axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry<T: Scalar> {
    pub r: T,
    pub theta: T,
}

impl<T: Scalar> Geometry<T> {
    pub fn new(r: T, theta: T) -> Result<Self, InteractionError> {
        let rf = r.as_f64();
        if !(rf.is_finite() && rf > 0.0) {
            return Err(InteractionError::BadSeparation(rf));
        }
        Ok(Geometry { r, theta })
    }

    /// Angular factor `(1 - 3 cos^2 theta) / r^3`.
    pub fn angular_over_r3(&self) -> T {
        let c = self.theta.cos();
        (T::one() - T::fl(3.0) * c * c) / (self.r * self.r * self.r)
    }

    /// The magic angle `arccos(1/sqrt(3))` where the angular factor vanishes.
    pub fn magic_angle() -> T {
        (T::one() / T::fl(3.0).sqrt()).acos()
    }
}

/// Single-atom basis order used for all 9x9 pair operators.
pub const PAIR_BASIS: [&str; 3] = ["s", "p0", "p+"];

fn pair_index(i: usize, j: usize) -> usize {
    3 * i + j
}

/// Two-atom dipole-dipole operator on the dressed-manifold product basis,
/// retaining only the terms that are static in the rotating frame.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairOperator<T: Scalar> {
    /// 9x9 matrix in MHz; entry `(3 i + j, 3 k + l) = <ij| V |kl>`.
    pub matrix: SMatrix<T, 9, 9>,
    pub geometry: Geometry<T>,
    pub mu0: T,
    pub muplus: T,
}

/// Build the rotating-frame dipole-dipole operator: exchange couplings
/// `mu0^2` on `|s p0><p0 s|` and `-mu+^2/2` on `|s p+><p+ s|` (plus
/// conjugates), all multiplied by `(1 - 3 cos^2 theta) / r^3`.
pub fn dd_operator<T: Scalar>(
    mu0: T,
    muplus: T,
    g: Geometry<T>,
) -> Result<PairOperator<T>, InteractionError> {
    Geometry::new(g.r, g.theta)?;
    let k = g.angular_over_r3();
    let mut m = SMatrix::<T, 9, 9>::zeros();
    let (s, p0, pp) = (0, 1, 2);

    let ex0 = k * mu0 * mu0;
    m[(pair_index(s, p0), pair_index(p0, s))] = ex0;
    m[(pair_index(p0, s), pair_index(s, p0))] = ex0;

    let exp = -k * muplus * muplus * T::fl(0.5);
    m[(pair_index(s, pp), pair_index(pp, s))] = exp;
    m[(pair_index(pp, s), pair_index(s, pp))] = exp;

    Ok(PairOperator {
        matrix: m,
        geometry: g,
        mu0,
        muplus,
    })
}

/// Two-atom product state on the 9-dimensional pair basis.
#[derive(Clone, Debug)]
pub struct ProductState<T: Scalar> {
    pub amps: SVector<Cx<T>, 9>,
}

/// Tensor product of two normalized single-atom dressed states.
pub fn product<T: Scalar>(a: &DressedState<T>, b: &DressedState<T>) -> ProductState<T> {
    let mut amps = SVector::<Cx<T>, 9>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            amps[pair_index(i, j)] = a.coeffs[i] * b.coeffs[j];
        }
    }
    ProductState { amps }
}

/// `<left| op |right>` by tensor contraction, in MHz.
pub fn expectation<T: Scalar>(
    op: &PairOperator<T>,
    left: &ProductState<T>,
    right: &ProductState<T>,
) -> Cx<T> {
    let mut acc = Cx::new(T::zero(), T::zero());
    for r in 0..9 {
        for c in 0..9 {
            let m = op.matrix[(r, c)];
            if m != T::zero() {
                acc += left.amps[r].conj() * cxr(m) * right.amps[c];
            }
        }
    }
    acc
}

/// Intraspecies interaction `<cc| V |cc>` (real part; the imaginary part
/// vanishes for Hermitian operators).
pub fn vcc<T: Scalar>(c: &DressedState<T>, mu0: T, muplus: T, g: Geometry<T>) -> T {
    let op = dd_operator(mu0, muplus, g).expect("validated geometry");
    let cc = product(c, c);
    expectation(&op, &cc, &cc).re
}

/// Intraspecies interaction `<tt| V |tt>`.
pub fn vtt<T: Scalar>(t: &DressedState<T>, mu0: T, muplus: T, g: Geometry<T>) -> T {
    vcc(t, mu0, muplus, g)
}

/// Interspecies interaction `<ct| V |ct>`: the blockade strength.
pub fn vct<T: Scalar>(
    c: &DressedState<T>,
    t: &DressedState<T>,
    mu0: T,
    muplus: T,
    g: Geometry<T>,
) -> T {
    let op = dd_operator(mu0, muplus, g).expect("validated geometry");
    let ct = product(c, t);
    expectation(&op, &ct, &ct).re
}

/// Resonant off-diagonal exchange element `<ct| V |tc>`.
pub fn vct_exchange<T: Scalar>(
    c: &DressedState<T>,
    t: &DressedState<T>,
    mu0: T,
    muplus: T,
    g: Geometry<T>,
) -> T {
    let op = dd_operator(mu0, muplus, g).expect("validated geometry");
    let ct = product(c, t);
    let tc = product(t, c);
    expectation(&op, &ct, &tc).re
}

/// Same-drive maximum of the interspecies interaction and the coefficient
/// realizing it.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VctMax<T: Scalar> {
    /// `min(mu0^2/(mu+^2/2), (mu+^2/2)/mu0^2) * (mu0^2 - mu+^2/2)` times the
    /// angular factor, MHz.
    pub value: T,
    /// `c0_max = |2 M^2 - 1|^(-1/2)`; `None` at the degenerate ratio.
    pub c0_at_max: Option<T>,
    /// Set when `mu0^2 = mu+^2/2`, where the bound collapses to zero.
    pub degenerate: bool,
}

/// Maximal same-drive interspecies interaction: the smaller undressed
/// interaction strength ratio times the difference of the two strengths.
pub fn vct_max<T: Scalar>(mu0: T, muplus: T, g: Geometry<T>) -> VctMax<T> {
    let half = T::fl(0.5);
    let a = mu0 * mu0;
    let b = muplus * muplus * half;
    let diff = a - b;
    let m = (mu0 / muplus).abs();
    if diff.abs() < T::fl(1e-12) * a.max(b) {
        return VctMax {
            value: T::zero(),
            c0_at_max: None,
            degenerate: true,
        };
    }
    let ratio = (a / b).min(b / a);
    VctMax {
        value: ratio * diff * g.angular_over_r3(),
        c0_at_max: Some(T::one() / (T::fl(2.0) * m * m - T::one()).abs().sqrt()),
        degenerate: false,
    }
}

/// Different-drive maximum of the interspecies interaction.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DifferentDrivesMax<T: Scalar> {
    /// Harmonic mean `(mu0^-2 + 2 mu+^-2)^-1` of the two undressed
    /// interactions, times the angular factor, MHz.
    pub value: T,
    /// Optimizing coefficient magnitude `(1 + 2 M^2)^(-1/2)`.
    pub c0_opt: T,
}

/// Maximal interspecies interaction when control and target atoms are
/// dressed by independent fields (`c0 = -t0`, opposite-sign `p+` legs).
pub fn different_drives_max<T: Scalar>(mu0: T, muplus: T, g: Geometry<T>) -> DifferentDrivesMax<T> {
    let two = T::fl(2.0);
    let inv = T::one() / (T::one() / (mu0 * mu0) + two / (muplus * muplus));
    let m = (mu0 / muplus).abs();
    DifferentDrivesMax {
        value: inv * g.angular_over_r3(),
        c0_opt: T::one() / (T::one() + two * m * m).sqrt(),
    }
}

/// Both sides of the off-diagonal proportionality: the exchange element
/// `<ct| V |tc>` and the normalization-weighted intraspecies combination
/// `(N_c^4 V_cc + N_t^4 V_tt) / (N_c^2 N_t^2)`.
///
/// The ratio `lhs / combo` is a design-independent constant at fixed
/// geometry; it is measured by the tests, not assumed here.
pub fn offdiag_relation<T: Scalar>(
    c: &DressedState<T>,
    t: &DressedState<T>,
    mu0: T,
    muplus: T,
    g: Geometry<T>,
) -> (T, T) {
    let lhs = vct_exchange(c, t, mu0, muplus, g);
    let nc2 = c.norm * c.norm;
    let nt2 = t.norm * t.norm;
    let combo = (nc2 * nc2 * vcc(c, mu0, muplus, g) + nt2 * nt2 * vtt(t, mu0, muplus, g))
        / (nc2 * nt2);
    (lhs, combo)
}

/// Term classes dropped from the rotating-frame operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum RotatingTermClass {
    /// `|ss><p0 p0|`-type terms at `2 nu0`.
    TwoPhotonP0,
    /// `|ss><p+ p+|`-type terms at `2 nu+`.
    TwoPhotonPPlus,
    /// `|ss><p0 p+|`-type terms at `nu+ + nu0`.
    CrossSum,
    /// `|s p+><p0 s|`-type terms at `nu+ - nu0`.
    CrossDifference,
}

/// Frequencies of the non-conserving terms dropped from [`dd_operator`].
pub fn rotating_frequencies<T: Scalar>(
    d: &DriveConfig<T>,
) -> Result<Vec<(RotatingTermClass, T)>, InteractionError> {
    let (Some(nu0), Some(nup)) = (d.nu0, d.nuplus) else {
        return Err(InteractionError::MissingDriveFrequencies);
    };
    Ok(vec![
        (RotatingTermClass::TwoPhotonP0, T::fl(2.0) * nu0),
        (RotatingTermClass::TwoPhotonPPlus, T::fl(2.0) * nup),
        (RotatingTermClass::CrossSum, nup + nu0),
        (RotatingTermClass::CrossDifference, nup - nu0),
    ])
}

/// Rotating-wave safety report for the dropped term classes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RwaReport<T: Scalar> {
    pub entries: Vec<(RotatingTermClass, T)>,
    /// Smallest dropped-term frequency magnitude, MHz.
    pub min_frequency: T,
    /// True when every dropped term oscillates at or above `threshold`.
    pub safe_to_drop: bool,
    pub threshold: T,
}

/// Compare every dropped-term frequency against `threshold` (MHz).
pub fn rwa_report<T: Scalar>(
    d: &DriveConfig<T>,
    threshold: T,
) -> Result<RwaReport<T>, InteractionError> {
    let entries = rotating_frequencies(d)?;
    let min_frequency = entries
        .iter()
        .map(|(_, f)| f.abs())
        .fold(T::fl(f64::INFINITY), |a, b| a.min(b));
    Ok(RwaReport {
        entries,
        min_frequency,
        safe_to_drop: min_frequency >= threshold,
        threshold,
    })
}

/// Convenience: a [`DressedState`] from explicit real raw coefficients, for
/// callers that bypass the drive solver.
pub fn dressed_from_raw<T: Scalar>(raw: Vector3<T>) -> DressedState<T> {
    let norm = raw.norm();
    let unit = raw / norm;
    DressedState {
        coeffs: [cxr(unit[0]), cxr(unit[1]), cxr(unit[2])],
        raw: [cxr(raw[0]), cxr(raw[1]), cxr(raw[2])],
        norm,
        shift: T::zero(),
        lifetime: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dressing::design_states;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn geometry(r: f64, theta: f64) -> Geometry<f64> {
        Geometry::new(r, theta).unwrap()
    }

    #[test]
    fn magic_angle_kills_operator() {
        let g = geometry(1.0, Geometry::<f64>::magic_angle());
        let op = dd_operator(1.0, 1.0, g).unwrap();
        assert!(op.matrix.norm() < 1e-14);
    }

    #[test]
    fn entry_placement_matches_hand_built() {
        let op = dd_operator(1.0, 0.0, geometry(1.0, std::f64::consts::FRAC_PI_2)).unwrap();
        let mut expected = SMatrix::<f64, 9, 9>::zeros();
        // (s p0) <-> (p0 s): indices 1 and 3.
        expected[(1, 3)] = 1.0;
        expected[(3, 1)] = 1.0;
        assert_eq!(op.matrix, expected);
    }

    #[test]
    fn hermitian_and_inverse_cube_scaling() {
        let g1 = geometry(1.3, 0.7);
        let g2 = geometry(2.6, 0.7);
        let a = dd_operator(1.1, 0.6, g1).unwrap();
        let b = dd_operator(1.1, 0.6, g2).unwrap();
        assert_eq!(a.matrix, a.matrix.transpose());
        assert!((a.matrix / 8.0 - b.matrix).norm() < 1e-15 * a.matrix.norm());
    }

    #[test]
    fn undressed_ss_has_no_diagonal_term() {
        let op = dd_operator(1.0, 0.8, geometry(1.0, std::f64::consts::FRAC_PI_2)).unwrap();
        let ss = dressed_from_raw(Vector3::new(1.0, 0.0, 0.0));
        let pr = product(&ss, &ss);
        assert_eq!(expectation(&op, &pr, &pr), num_complex::Complex::new(0.0, 0.0));
    }

    #[test]
    fn nullified_designs_kill_intraspecies_terms() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = geometry(1.0, std::f64::consts::FRAC_PI_2);
        for _ in 0..50 {
            let m = rng.gen_range(0.3..3.0);
            if (2.0 * m * m - 1.0f64).abs() < 0.05 {
                continue;
            }
            let c0 = rng.gen_range(0.2..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let (c, t) = design_states(m, c0).unwrap();
            let cs = dressed_from_raw(c);
            let ts = dressed_from_raw(t);
            let muplus = rng.gen_range(0.5..2.0);
            let mu0 = m * muplus;
            assert!(vcc(&cs, mu0, muplus, g).abs() < 1e-12 * mu0 * mu0);
            assert!(vtt(&ts, mu0, muplus, g).abs() < 1e-12 * mu0 * mu0);
            assert!(vct_exchange(&cs, &ts, mu0, muplus, g).abs() < 1e-12 * mu0 * mu0);
        }
    }

    #[test]
    fn vct_zero_for_same_phase_target() {
        // t with the same sign structure as c (both p legs positive).
        let g = geometry(1.0, std::f64::consts::FRAC_PI_2);
        let m: f64 = 1.2;
        let root2m = 2f64.sqrt() * m;
        let c = dressed_from_raw(Vector3::new(1.0, 0.7, root2m * 0.7));
        let t = dressed_from_raw(Vector3::new(1.0, 1.9, root2m * 1.9));
        let muplus = 1.0;
        let mu0 = m * muplus;
        // Same-phase coefficients: the two exchange contributions cancel.
        assert_abs_diff_eq!(vct(&c, &t, mu0, muplus, g), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn vct_closed_form_matches_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = geometry(1.7, 1.1);
        let ang = g.angular_over_r3();
        for _ in 0..30 {
            let m = rng.gen_range(0.4..2.5);
            if (2.0 * m * m - 1.0f64).abs() < 0.05 {
                continue;
            }
            let c0 = rng.gen_range(0.3..2.0);
            let (c, t) = design_states(m, c0).unwrap();
            let muplus = rng.gen_range(0.5..1.5);
            let mu0 = m * muplus;
            let cs = dressed_from_raw(c);
            let ts = dressed_from_raw(t);
            let got = vct(&cs, &ts, mu0, muplus, g);
            // Closed form from the exchange structure with the measured
            // normalization constant.
            let nc2 = cs.norm * cs.norm;
            let nt2 = ts.norm * ts.norm;
            let closed = ang
                * (2.0 * c[1] * t[1] * mu0 * mu0 - c[2] * t[2] * muplus * muplus)
                / (nc2 * nt2);
            assert_abs_diff_eq!(got, closed, epsilon = 1e-12 * mu0 * mu0);
        }
    }

    #[test]
    fn vct_max_values_and_branch_continuity() {
        let g = geometry(1.0, std::f64::consts::FRAC_PI_2);
        let vm = vct_max(1.0, 1.0, g);
        assert_abs_diff_eq!(vm.value, 0.25, epsilon = 1e-15);
        assert!(!vm.degenerate);

        // mu0^2 = mu+^2/2: bound collapses with the degeneracy flag.
        let deg = vct_max(1.0, 2f64.sqrt(), g);
        assert_eq!(deg.value, 0.0);
        assert!(deg.degenerate);

        // Continuity across the branch point of the min().
        let below = vct_max(1.0, 2f64.sqrt() * (1.0 - 1e-7), g);
        let above = vct_max(1.0, 2f64.sqrt() * (1.0 + 1e-7), g);
        assert!(below.value.abs() < 1e-6);
        assert!(above.value.abs() < 1e-6);
    }

    #[test]
    fn different_drives_limits() {
        let g = geometry(1.0, std::f64::consts::FRAC_PI_2);
        let dd = different_drives_max(1.0, 1.0, g);
        assert_abs_diff_eq!(dd.value, 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dd.c0_opt, 1.0 / 3f64.sqrt(), epsilon = 1e-15);
        // Dominated by the smaller interaction as mu+ grows.
        let big = different_drives_max(1.0, 1e6, g);
        assert_abs_diff_eq!(big.value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn offdiag_proportionality_constant_is_design_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = geometry(1.4, 0.9);
        // Generic (non-nullified) states with the same-drive sign structure.
        let sample = |rng: &mut ChaCha8Rng| {
            let c = dressed_from_raw(Vector3::new(
                1.0,
                rng.gen_range(0.3..2.0),
                rng.gen_range(0.3..2.0),
            ));
            let t = dressed_from_raw(Vector3::new(
                1.0,
                rng.gen_range(0.3..2.0),
                -rng.gen_range(0.3..2.0),
            ));
            (c, t)
        };
        let (mu0, muplus) = (1.3, 0.9);
        let (c, t) = sample(&mut rng);
        let (lhs, combo) = offdiag_relation(&c, &t, mu0, muplus, g);
        let kappa = lhs / combo;
        for _ in 0..10 {
            let (c, t) = sample(&mut rng);
            let (lhs, combo) = offdiag_relation(&c, &t, mu0, muplus, g);
            assert_abs_diff_eq!(lhs, kappa * combo, epsilon = 1e-9 * lhs.abs().max(1e-3));
        }
        // Magic angle: both sides vanish identically.
        let gm = geometry(1.4, Geometry::<f64>::magic_angle());
        let (c, t) = sample(&mut rng);
        let (lhs, combo) = offdiag_relation(&c, &t, mu0, muplus, gm);
        assert_abs_diff_eq!(lhs, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(combo, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn rotating_frequency_arithmetic() {
        let d = DriveConfig {
            omega0: 1.0,
            omegaplus: 1.0,
            delta0: 0.0,
            deltaplus: 0.0,
            nu0: Some(1000.0),
            nuplus: Some(3000.0),
        };
        let freqs = rotating_frequencies(&d).unwrap();
        let values: Vec<f64> = freqs.iter().map(|&(_, f)| f).collect();
        assert_eq!(values, vec![2000.0, 6000.0, 4000.0, 2000.0]);

        let report = rwa_report(&d, 1500.0).unwrap();
        assert!(report.safe_to_drop);
        assert_eq!(report.min_frequency, 2000.0);

        // Degenerate drives: the difference term stops rotating.
        let deg = DriveConfig {
            nuplus: Some(1000.0),
            ..d
        };
        let report = rwa_report(&deg, 1.0).unwrap();
        assert!(!report.safe_to_drop);
        assert_eq!(report.min_frequency, 0.0);
    }
}
