//! Microwave dressing of the `(s, p0, p+)` triple: designed dressed states,
//! the inverse eigenproblem for the drive parameters, light shifts, and the
//! basis rotation between bare and dressed states.
//!
//! Conventions: Rabi frequencies, detunings, and light shifts are ordinary
//! frequencies in MHz. The drive Hamiltonian is real symmetric in the basis
//! `(|s>, |p0>, |p+>)` with diagonal `(0, -Delta0, -Delta+)`; coefficient
//! phases are absorbed into the basis states so designed coefficients are
//! real.

use nalgebra::{ComplexField, Matrix3, SMatrix, SVector, Vector3};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LevelDataset;
use crate::scalar::Scalar;

/// Errors from dressing design and the inverse eigenproblem.
#[derive(Debug, Error)]
pub enum DressingError {
    #[error("degenerate moment ratio: M^2 = 1/2 admits no orthogonal same-drive pair")]
    DegenerateRatio,
    #[error("moment ratio must be positive and finite, got {0}")]
    BadRatio(f64),
    #[error("design coefficient c0 must be nonzero and finite, got {0}")]
    BadCoefficient(f64),
    #[error("input states are not orthogonal: <c|t> = {0:.3e} (unnormalized)")]
    NonOrthogonal(f64),
    #[error("coefficients not real after phase canonicalization (residual {0:.3e})")]
    NotRealizable(f64),
    #[error("drive system is rank-deficient: {detail}")]
    RankDeficient { detail: String },
    #[error("eigen-residual {residual:.3e} exceeds bound {bound:.3e}")]
    ResidualTooLarge { residual: f64, bound: f64 },
    #[error("scale must be positive and finite, got {0}")]
    BadScale(f64),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
}

/// The two microwave drives in the rotating frame.
///
/// `delta = nu - omega` relates detunings to drive (`nu`) and transition
/// (`omega`) frequencies; the `nu` fields are populated once a dataset
/// supplies the transition frequencies.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveConfig<T: Scalar> {
    pub omega0: T,
    pub omegaplus: T,
    pub delta0: T,
    pub deltaplus: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu0: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nuplus: Option<T>,
}

impl<T: Scalar> DriveConfig<T> {
    pub fn zero() -> Self {
        DriveConfig {
            omega0: T::zero(),
            omegaplus: T::zero(),
            delta0: T::zero(),
            deltaplus: T::zero(),
            nu0: None,
            nuplus: None,
        }
    }

    /// Multiply every drive parameter (and drive frequencies via the
    /// detunings) by `lambda`. Eigenvectors are unchanged, shifts scale.
    pub fn scaled(&self, lambda: T) -> Self {
        DriveConfig {
            omega0: self.omega0 * lambda,
            omegaplus: self.omegaplus * lambda,
            delta0: self.delta0 * lambda,
            deltaplus: self.deltaplus * lambda,
            nu0: None,
            nuplus: None,
        }
    }
}

/// One dressed eigenstate of the drive Hamiltonian.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DressedState<T: Scalar> {
    /// Normalized amplitudes on `(|s>, |p0>, |p+>)`.
    pub coeffs: [Complex<T>; 3],
    /// Unnormalized `(1, c0, c+)` form (third state: unit-norm vector as-is).
    pub raw: [Complex<T>; 3],
    /// Normalization factor, `norm^2 = 1 + |c0|^2 + |c+|^2`.
    pub norm: T,
    /// Light shift in the rotating frame, MHz.
    pub shift: T,
    /// Coefficient-weighted radiative lifetime, ms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime: Option<T>,
}

impl<T: Scalar> DressedState<T> {
    fn from_real_raw(raw: Vector3<T>, shift: T) -> Self {
        let norm = raw.norm();
        let unit = raw / norm;
        DressedState {
            coeffs: [
                Complex::new(unit[0], T::zero()),
                Complex::new(unit[1], T::zero()),
                Complex::new(unit[2], T::zero()),
            ],
            raw: [
                Complex::new(raw[0], T::zero()),
                Complex::new(raw[1], T::zero()),
                Complex::new(raw[2], T::zero()),
            ],
            norm,
            shift,
            lifetime: None,
        }
    }

    /// Real parts of the normalized coefficients (imaginary parts vanish
    /// under the phase convention used throughout).
    pub fn real_coeffs(&self) -> Vector3<T> {
        Vector3::new(self.coeffs[0].re, self.coeffs[1].re, self.coeffs[2].re)
    }

    /// Inverse coefficient-weighted decay rate from per-state lifetimes.
    fn attach_lifetime(&mut self, taus: [Option<T>; 3]) {
        let mut rate = T::zero();
        for (a, tau) in self.coeffs.iter().zip(taus) {
            match tau {
                Some(tau) => rate += a.norm_sqr() / tau,
                None => return,
            }
        }
        self.lifetime = Some(T::one() / rate);
    }
}

/// The complete dressed triple: designed `|c>` and `|t>`, the spectator
/// third state, the basis rotation, and the drives that realize them.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DressedTriple<T: Scalar> {
    pub c: DressedState<T>,
    pub t: DressedState<T>,
    pub third: DressedState<T>,
    /// Orthogonal matrix whose columns are the `(c, t, third)` eigenvectors
    /// in the `(s, p0, p+)` basis; row sigma of column d is `R[sigma][d]`.
    pub rotation: [[T; 3]; 3],
    pub drives: DriveConfig<T>,
}

impl<T: Scalar> DressedTriple<T> {
    pub fn rotation_matrix(&self) -> Matrix3<T> {
        Matrix3::from_fn(|r, c| self.rotation[r][c])
    }

    /// Shifts `(E_c, E_t, E_3)` in MHz.
    pub fn shifts(&self) -> [T; 3] {
        [self.c.shift, self.t.shift, self.third.shift]
    }

    /// Shift gap relative to the Rabi magnitude; near zero the pulses can
    /// no longer address `|c>` and `|t>` separately. The degenerate point
    /// (`alpha = 1`) is allowed for scans but worth flagging.
    pub fn degenerate_shifts(&self) -> bool {
        let rabi = self.drives.omega0.abs().max(self.drives.omegaplus.abs());
        (self.c.shift - self.t.shift).abs() <= T::fl(1e-6) * rabi.max(T::fl(1e-300))
    }

    /// Rescale the whole drive Hamiltonian by `lambda` (sign allowed):
    /// eigenvectors are unchanged, drives and shifts scale linearly. Drive
    /// frequencies are invalidated until a dataset is re-attached.
    pub fn scaled_by(&self, lambda: T) -> Self {
        let mut out = self.clone();
        out.drives = self.drives.scaled(lambda);
        out.c.shift = self.c.shift * lambda;
        out.t.shift = self.t.shift * lambda;
        out.third.shift = self.third.shift * lambda;
        out
    }

    /// Populate drive frequencies `nu = omega + delta` and dressed-state
    /// lifetimes from a dataset.
    pub fn attach_dataset(&mut self, dataset: &LevelDataset<T>) {
        let (omega0, omegaplus) = dataset.transition_frequencies();
        self.drives.nu0 = Some(omega0 + self.drives.delta0);
        self.drives.nuplus = Some(omegaplus + self.drives.deltaplus);
        let [s, p0, pp] = dataset.triple_indices();
        let taus = [
            dataset.state(s).lifetime,
            dataset.state(p0).lifetime,
            dataset.state(pp).lifetime,
        ];
        self.c.attach_lifetime(taus);
        self.t.attach_lifetime(taus);
        self.third.attach_lifetime(taus);
    }
}

/// Dimensionless design parameters `(M, alpha)` plus the drive energy scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressingDesign<T: Scalar> {
    /// Moment ratio `M = mu0 / mu+`.
    pub m_ratio: T,
    /// Fraction of the maximizing coefficient: `c0 = alpha * c0_max(M)`.
    pub alpha: T,
    /// Overall drive scale in MHz: `max(|Omega0|, |Omega+|, |Delta0|, |Delta+|)`.
    pub scale: T,
}

fn check_ratio<T: Scalar>(m: T) -> Result<(), DressingError> {
    let mf = m.as_f64();
    if !(mf.is_finite() && mf > 0.0) {
        return Err(DressingError::BadRatio(mf));
    }
    if (T::fl(2.0) * m * m - T::one()).abs() < T::fl(1e-12) {
        return Err(DressingError::DegenerateRatio);
    }
    Ok(())
}

/// Drive Hamiltonian of the two microwave fields in the rotating frame,
/// basis `(|s>, |p0>, |p+>)`: diagonal `(0, -Delta0, -Delta+)`, couplings
/// `Omega0` on `s <-> p0` and `Omega+` on `s <-> p+`.
pub fn mw_hamiltonian<T: Scalar>(d: &DriveConfig<T>) -> Matrix3<T> {
    let z = T::zero();
    Matrix3::new(
        z,
        d.omega0,
        d.omegaplus,
        d.omega0,
        -d.delta0,
        z,
        d.omegaplus,
        z,
        -d.deltaplus,
    )
}

/// Coefficient magnitude at which the same-drive interspecies interaction
/// is maximal: `|2 M^2 - 1|^(-1/2)`.
pub fn c0_max<T: Scalar>(m: T) -> Result<T, DressingError> {
    check_ratio(m)?;
    Ok(T::one() / (T::fl(2.0) * m * m - T::one()).abs().sqrt())
}

/// Raw coefficient triples for the nullified, mutually orthogonal pair:
/// `c = (1, c0, sqrt(2) M c0)` and `t = (1, t0, -sqrt(2) M t0)` with
/// `t0 = 1 / ((2 M^2 - 1) c0)`.
pub fn design_states<T: Scalar>(m: T, c0: T) -> Result<(Vector3<T>, Vector3<T>), DressingError> {
    check_ratio(m)?;
    let c0f = c0.as_f64();
    if !(c0f.is_finite() && c0f != 0.0) {
        return Err(DressingError::BadCoefficient(c0f));
    }
    let root2m = T::fl(2.0).sqrt() * m;
    let t0 = T::one() / ((T::fl(2.0) * m * m - T::one()) * c0);
    let c = Vector3::new(T::one(), c0, root2m * c0);
    let t = Vector3::new(T::one(), t0, -root2m * t0);
    Ok((c, t))
}

fn canonicalize<T: Scalar>(
    c: &[Complex<T>; 3],
    t: &[Complex<T>; 3],
) -> Result<(Vector3<T>, Vector3<T>), DressingError> {
    // Divide out the leading amplitude, then rotate the phase of each p
    // component of |c> into the basis; |t> must come out real under the
    // same basis rotation.
    let c0 = c[0];
    let t0 = t[0];
    let cv = [c[0] / c0, c[1] / c0, c[2] / c0];
    let tv = [t[0] / t0, t[1] / t0, t[2] / t0];
    let mut phases = [Complex::new(T::one(), T::zero()); 3];
    for k in 1..3 {
        let mag = cv[k].modulus();
        if mag > T::fl(1e-300) {
            phases[k] = cv[k].conj() / mag;
        }
    }
    let mut resid = T::zero();
    let mut cr = Vector3::zeros();
    let mut tr = Vector3::zeros();
    for k in 0..3 {
        let cc = cv[k] * phases[k];
        let tc = tv[k] * phases[k];
        resid = resid.max(cc.im.abs()).max(tc.im.abs());
        cr[k] = cc.re;
        tr[k] = tc.re;
    }
    if resid > T::residual_tol() * T::fl(10.0) {
        return Err(DressingError::NotRealizable(resid.as_f64()));
    }
    Ok((cr, tr))
}

/// Solve the inverse eigenproblem: find drives and shifts making both raw
/// coefficient vectors eigenvectors of [`mw_hamiltonian`].
///
/// The six component equations of `H v = E v` for the two vectors form a
/// homogeneous linear system in `(Omega0, Omega+, Delta0, Delta+, E_c, E_t)`;
/// the one-dimensional null space fixes everything up to the overall scale,
/// which is then set so `max(|Omega0|, |Omega+|, |Delta0|, |Delta+|) = scale`
/// with `Omega0 >= 0`.
pub fn solve_drives<T: Scalar>(
    c_raw: &[Complex<T>; 3],
    t_raw: &[Complex<T>; 3],
    scale: T,
) -> Result<DressedTriple<T>, DressingError> {
    let sf = scale.as_f64();
    if !(sf.is_finite() && sf > 0.0) {
        return Err(DressingError::BadScale(sf));
    }
    let (c, t) = canonicalize(c_raw, t_raw)?;

    let dot = c.dot(&t);
    if dot.abs() > T::residual_tol() * T::fl(10.0) * c.norm() * t.norm() {
        return Err(DressingError::NonOrthogonal(dot.as_f64()));
    }

    // Unknown ordering: (Omega0, Omega+, Delta0, Delta+, E_c, E_t).
    let mut a = SMatrix::<T, 6, 6>::zeros();
    let z = T::zero();
    for (block, (v, ecol)) in [(&c, 4usize), (&t, 5usize)].into_iter().enumerate() {
        let r = 3 * block;
        let (v0, vp) = (v[1], v[2]);
        // Row s: Omega0 v0 + Omega+ vp - E = 0
        a[(r, 0)] = v0;
        a[(r, 1)] = vp;
        a[(r, ecol)] = -T::one();
        // Row p0: Omega0 - Delta0 v0 - E v0 = 0
        a[(r + 1, 0)] = T::one();
        a[(r + 1, 2)] = -v0;
        a[(r + 1, ecol)] = -v0;
        // Row p+: Omega+ - Delta+ vp - E vp = 0
        a[(r + 2, 1)] = T::one();
        a[(r + 2, 3)] = -vp;
        a[(r + 2, ecol)] = -vp;
        let _ = z;
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let mut order: Vec<usize> = (0..6).collect();
    order.sort_by(|&i, &j| {
        svd.singular_values[i]
            .partial_cmp(&svd.singular_values[j])
            .unwrap()
    });
    let smin = svd.singular_values[order[0]];
    let snext = svd.singular_values[order[1]];
    let smax = svd.singular_values[order[5]];
    if smin > T::residual_tol() * smax {
        // No exact solution; inputs fail eigenvector consistency.
        return Err(DressingError::RankDeficient {
            detail: format!(
                "no null direction (smallest singular value {:.3e} of {:.3e})",
                smin.as_f64(),
                smax.as_f64()
            ),
        });
    }
    if snext <= T::residual_tol() * smax {
        let names = ["Omega0", "Omega+", "Delta0", "Delta+", "E_c", "E_t"];
        let row = v_t.row(order[1]);
        let (worst, _) = row
            .iter()
            .enumerate()
            .max_by(|(_, x), (_, y)| x.abs().partial_cmp(&y.abs()).unwrap())
            .unwrap();
        return Err(DressingError::RankDeficient {
            detail: format!(
                "null space has dimension >= 2; extra freedom dominated by {}",
                names[worst]
            ),
        });
    }

    let mut x: SVector<T, 6> = v_t.row(order[0]).transpose();
    // Fix the free overall factor: max drive parameter = scale, Omega0 >= 0
    // (falling back through the parameter list when earlier ones vanish).
    let drive_mag = x[0].abs().max(x[1].abs()).max(x[2].abs()).max(x[3].abs());
    if drive_mag < T::fl(1e-14) {
        return Err(DressingError::RankDeficient {
            detail: "null direction has vanishing drive components".into(),
        });
    }
    let mut lambda = scale / drive_mag;
    for k in 0..4 {
        if x[k].abs() > T::fl(1e-12) * drive_mag {
            if x[k] < T::zero() {
                lambda = -lambda;
            }
            break;
        }
    }
    x *= lambda;

    let drives = DriveConfig {
        omega0: x[0],
        omegaplus: x[1],
        delta0: x[2],
        deltaplus: x[3],
        nu0: None,
        nuplus: None,
    };
    let (e_c, e_t) = (x[4], x[5]);

    let h = mw_hamiltonian(&drives);
    let bound = T::residual_tol() * scale;
    for (v, e) in [(&c, e_c), (&t, e_t)] {
        let resid = (h * v - v * e).norm() / v.norm();
        if resid > bound {
            return Err(DressingError::ResidualTooLarge {
                residual: resid.as_f64(),
                bound: bound.as_f64(),
            });
        }
    }

    // Complete the basis: the remaining eigenvector is orthogonal to both.
    let cu = c.normalize();
    let tu = t.normalize();
    let mut third = cu.cross(&tu);
    third.normalize_mut();
    for k in 0..3 {
        if third[k].abs() > T::fl(1e-9) {
            if third[k] < T::zero() {
                third = -third;
            }
            break;
        }
    }
    let e_3 = (h * third).dot(&third);

    let rotation = [
        [cu[0], tu[0], third[0]],
        [cu[1], tu[1], third[1]],
        [cu[2], tu[2], third[2]],
    ];

    Ok(DressedTriple {
        c: DressedState::from_real_raw(c, e_c),
        t: DressedState::from_real_raw(t, e_t),
        third: DressedState::from_real_raw(third, e_3),
        rotation,
        drives,
    })
}

/// Design a dressed triple from `(M, alpha, scale)`.
pub fn design_triple<T: Scalar>(
    design: &DressingDesign<T>,
) -> Result<DressedTriple<T>, DressingError> {
    let c0 = design.alpha * c0_max(design.m_ratio)?;
    if c0.as_f64() == 0.0 {
        return Err(DressingError::BadCoefficient(0.0));
    }
    let (c, t) = design_states(design.m_ratio, c0)?;
    let to_cx = |v: Vector3<T>| {
        [
            Complex::new(v[0], T::zero()),
            Complex::new(v[1], T::zero()),
            Complex::new(v[2], T::zero()),
        ]
    };
    solve_drives(&to_cx(c), &to_cx(t), design.scale)
}

/// Design a dressed triple against a dataset: `M` from the designated
/// moments, drive frequencies and lifetimes attached.
pub fn design_triple_on<T: Scalar>(
    dataset: &LevelDataset<T>,
    alpha: T,
    scale: T,
) -> Result<DressedTriple<T>, DressingError> {
    let (mu0, muplus) = dataset.triple_moments();
    let mut triple = design_triple(&DressingDesign {
        m_ratio: (mu0 / muplus).abs(),
        alpha,
        scale,
    })?;
    triple.attach_dataset(dataset);
    Ok(triple)
}

/// Design a dressed triple whose solved `Omega0` equals the requested
/// signed value (the natural scan coordinate). `omega0 = 0` collapses the
/// drives entirely, leaving degenerate zero-shift dressed states.
pub fn design_triple_with_omega0<T: Scalar>(
    dataset: &LevelDataset<T>,
    alpha: T,
    omega0: T,
) -> Result<DressedTriple<T>, DressingError> {
    let (mu0, muplus) = dataset.triple_moments();
    let base = design_triple(&DressingDesign {
        m_ratio: (mu0 / muplus).abs(),
        alpha,
        scale: T::one(),
    })?;
    if base.drives.omega0.abs() < T::fl(1e-12) {
        return Err(DressingError::RankDeficient {
            detail: "solved Omega0 vanishes; the Omega0 scale rule cannot apply".into(),
        });
    }
    let mut triple = base.scaled_by(omega0 / base.drives.omega0);
    triple.attach_dataset(dataset);
    Ok(triple)
}

/// One side of the dressing validity window.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RegimeCheck<T: Scalar> {
    pub lhs: T,
    pub rhs: T,
    pub margin: T,
    pub ok: bool,
}

/// Report for the validity window `C3/l_dd^3 << Omega_mw << delta`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegimeReport<T: Scalar> {
    /// Largest bare dipole-dipole coupling at the closest spacing, MHz.
    pub max_dd_coupling: T,
    /// Smallest microwave Rabi frequency, MHz.
    pub drive_scale: T,
    /// Smallest two-atom defect from a triple pair state to a dipole-dipole
    /// connected pair state outside the triple, MHz (`None` when the dataset
    /// has no connected outside states).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_pair_defect: Option<T>,
    /// `max_dd_coupling * margin <= drive_scale`.
    pub coupling_check: RegimeCheck<T>,
    /// `drive_scale * margin <= min_pair_defect`.
    pub defect_check: RegimeCheck<T>,
}

/// Default multiplicative margin for both regime inequalities.
pub fn default_regime_margin<T: Scalar>() -> T {
    T::fl(10.0)
}

/// Check the dressing validity window at dipole-dipole distance `l_dd` (um).
///
/// Report-only: both inequalities are flagged with the given margin, nothing
/// is rejected.
pub fn validate_regime<T: Scalar>(
    triple: &DressedTriple<T>,
    dataset: &LevelDataset<T>,
    l_dd: T,
    margin: T,
) -> RegimeReport<T> {
    let n = dataset.len();
    let inv_r3 = T::one() / (l_dd * l_dd * l_dd);

    // Largest pair coupling magnitude |c_q mu mu'| / l_dd^3 over all
    // m-conserving transition pairs.
    let mut max_dd = T::zero();
    for xi in 0..n {
        for ai in 0..n {
            let Some((qa, mua)) = dataset.dipole_between(xi, ai) else {
                continue;
            };
            for yi in 0..n {
                for bi in 0..n {
                    let Some((qb, mub)) = dataset.dipole_between(yi, bi) else {
                        continue;
                    };
                    if qa + qb != 0 {
                        continue;
                    }
                    let cq = if qa == 0 { T::one() } else { T::fl(0.5) };
                    max_dd = max_dd.max((cq * mua * mub).abs() * inv_r3);
                }
            }
        }
    }

    let drive_scale = triple.drives.omega0.abs().min(triple.drives.omegaplus.abs());

    // Smallest defect between a triple pair state and a connected pair state
    // with at least one member outside the triple.
    let triple_idx = dataset.triple_indices();
    let mut min_defect: Option<T> = None;
    for &a in &triple_idx {
        for &b in &triple_idx {
            for x in 0..n {
                for y in 0..n {
                    if triple_idx.contains(&x) && triple_idx.contains(&y) {
                        continue;
                    }
                    let (Some((qa, _)), Some((qb, _))) =
                        (dataset.dipole_between(a, x), dataset.dipole_between(b, y))
                    else {
                        continue;
                    };
                    if qa + qb != 0 {
                        continue;
                    }
                    let ea = dataset.state(a).energy + dataset.state(b).energy;
                    let ex = dataset.state(x).energy + dataset.state(y).energy;
                    let defect = (ea - ex).abs();
                    min_defect = Some(match min_defect {
                        Some(m) => m.min(defect),
                        None => defect,
                    });
                }
            }
        }
    }

    let coupling_check = RegimeCheck {
        lhs: max_dd * margin,
        rhs: drive_scale,
        margin,
        ok: max_dd * margin <= drive_scale,
    };
    let defect_check = RegimeCheck {
        lhs: drive_scale * margin,
        rhs: min_defect.unwrap_or_else(|| T::fl(f64::INFINITY)),
        margin,
        ok: match min_defect {
            Some(d) => drive_scale * margin <= d,
            None => true,
        },
    };

    RegimeReport {
        max_dd_coupling: max_dd,
        drive_scale,
        min_pair_defect: min_defect,
        coupling_check,
        defect_check,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn to_cx(v: Vector3<f64>) -> [Complex<f64>; 3] {
        [
            Complex::new(v[0], 0.0),
            Complex::new(v[1], 0.0),
            Complex::new(v[2], 0.0),
        ]
    }

    #[test]
    fn mw_hamiltonian_zero_config() {
        let h = mw_hamiltonian(&DriveConfig::<f64>::zero());
        assert_eq!(h, Matrix3::zeros());
    }

    #[test]
    fn mw_hamiltonian_decoupled_spectator() {
        let d = DriveConfig {
            omega0: 1.0,
            omegaplus: 0.0,
            delta0: 0.0,
            deltaplus: 5.0,
            nu0: None,
            nuplus: None,
        };
        let mut eig: Vec<f64> = mw_hamiltonian(&d)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_abs_diff_eq!(eig[0], -5.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig[1], -1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig[2], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mw_hamiltonian_symmetric() {
        let d = DriveConfig {
            omega0: 1.3,
            omegaplus: -0.4,
            delta0: 2.2,
            deltaplus: -7.1,
            nu0: None,
            nuplus: None,
        };
        let h = mw_hamiltonian(&d);
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn design_states_m1() {
        let (c, t) = design_states(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(c[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c[2], 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(t[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t[2], -(2f64.sqrt()), epsilon = 1e-15);
    }

    #[test]
    fn design_states_orthogonality_forced() {
        let (c, t) = design_states(1.0, 2.0).unwrap();
        assert_abs_diff_eq!(t[1], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(c.dot(&t), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn degenerate_ratio_rejected() {
        assert!(matches!(
            design_states(1.0 / 2f64.sqrt(), 1.0),
            Err(DressingError::DegenerateRatio)
        ));
        assert!(matches!(
            c0_max(1.0 / 2f64.sqrt()),
            Err(DressingError::DegenerateRatio)
        ));
    }

    #[test]
    fn c0_max_values() {
        assert_abs_diff_eq!(c0_max(1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c0_max(0.5).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        // Monotone decrease toward zero for M > 1/sqrt(2).
        let mut prev = c0_max(0.8).unwrap();
        for m in [1.0, 2.0, 5.0, 20.0, 100.0] {
            let v = c0_max(m).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-2);
    }

    #[test]
    fn solve_drives_m1_alpha1() {
        let (c, t) = design_states(1.0, 1.0).unwrap();
        let triple = solve_drives(&to_cx(c), &to_cx(t), 50.0).unwrap();
        let h = mw_hamiltonian(&triple.drives);
        for (v, e) in [(c, triple.c.shift), (t, triple.t.shift)] {
            let resid = (h * v - v * e).norm() / v.norm();
            assert!(resid <= 1e-10 * 50.0, "residual {resid}");
        }
        // alpha = 1: shifts degenerate by design.
        assert_abs_diff_eq!(triple.c.shift, triple.t.shift, epsilon = 1e-9);
        assert!(triple.drives.omega0 > 0.0);
    }

    #[test]
    fn solve_drives_scaling_linearity() {
        let (c, t) = design_states(1.4, 0.6).unwrap();
        let t1 = solve_drives(&to_cx(c), &to_cx(t), 10.0).unwrap();
        let t2 = solve_drives(&to_cx(c), &to_cx(t), 30.0).unwrap();
        assert_abs_diff_eq!(t2.drives.omega0, 3.0 * t1.drives.omega0, epsilon = 1e-9);
        assert_abs_diff_eq!(t2.drives.deltaplus, 3.0 * t1.drives.deltaplus, epsilon = 1e-9);
        assert_abs_diff_eq!(t2.c.shift, 3.0 * t1.c.shift, epsilon = 1e-9);
        for k in 0..3 {
            assert_abs_diff_eq!(t2.c.coeffs[k].re, t1.c.coeffs[k].re, epsilon = 1e-12);
        }
    }

    #[test]
    fn non_orthogonal_inputs_rejected() {
        let c = to_cx(Vector3::new(1.0, 1.0, 2f64.sqrt()));
        let t = to_cx(Vector3::new(1.0, 1.0, 2f64.sqrt() * 0.9));
        assert!(matches!(
            solve_drives(&c, &t, 1.0),
            Err(DressingError::NonOrthogonal(_))
        ));
    }

    #[test]
    fn rotation_orthogonal_and_rediagonalization_consistent() {
        let design = DressingDesign::<f64> {
            m_ratio: 1.3,
            alpha: 1.7,
            scale: 40.0,
        };
        let triple = design_triple(&design).unwrap();
        let r = triple.rotation_matrix();
        let rtr = r.transpose() * r;
        assert!((rtr - Matrix3::identity()).norm() < 1e-12);

        // Re-diagonalizing the drive Hamiltonian recovers the designed
        // coefficients up to phase.
        let h = mw_hamiltonian(&triple.drives);
        let eig = h.symmetric_eigen();
        for (col, shift) in [(0, triple.c.shift), (1, triple.t.shift)] {
            let target = Vector3::new(
                triple.rotation[0][col],
                triple.rotation[1][col],
                triple.rotation[2][col],
            );
            // Find the eigenpair with matching eigenvalue.
            let mut best = (f64::INFINITY, 0);
            for k in 0..3 {
                let d = (eig.eigenvalues[k] - shift).abs();
                if d < best.0 {
                    best = (d, k);
                }
            }
            assert!(best.0 < 1e-10 * design.scale);
            let v = eig.eigenvectors.column(best.1);
            let overlap = v.dot(&target).abs();
            assert!((overlap - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn shift_degeneracy_gap_closes_at_alpha_one() {
        // The overall energy scale is free, so the meaningful degeneracy
        // measure is the shift gap relative to the Rabi magnitude; it
        // decreases monotonically to zero as alpha -> 1.
        let mut prev_gap = None;
        for k in (0..=20).rev() {
            let alpha = 1.0 + 0.05 * k as f64;
            let triple = design_triple(&DressingDesign {
                m_ratio: 1.2,
                alpha,
                scale: 25.0,
            })
            .unwrap();
            let rabi = triple.drives.omega0.abs().max(triple.drives.omegaplus.abs());
            let gap = (triple.c.shift - triple.t.shift).abs() / rabi;
            if let Some(p) = prev_gap {
                assert!(gap <= p + 1e-12, "gap not monotone: {gap} > {p}");
            }
            prev_gap = Some(gap);
        }
        assert!(prev_gap.unwrap() < 1e-9);
    }

    #[test]
    fn regime_report_flags() {
        let ds: LevelDataset<f64> =
            LevelDataset::load(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/toy_alkali.json"))
                .unwrap();
        let triple = design_triple_on(&ds, 1.8, 60.0).unwrap();
        // Large spacing: coupling check passes trivially.
        let far = validate_regime(&triple, &ds, 1e6, 10.0);
        assert!(far.coupling_check.ok);
        // Tiny spacing: coupling overwhelms the drives.
        let near = validate_regime(&triple, &ds, 1e-3, 10.0);
        assert!(!near.coupling_check.ok);
        // Drive scale far above the defect: right inequality flagged.
        let strong = design_triple_on(&ds, 1.8, 1e9).unwrap();
        let rep = validate_regime(&strong, &ds, 10.0, 10.0);
        assert!(!rep.defect_check.ok);
        assert!(rep.min_pair_defect.is_some());
    }
}

