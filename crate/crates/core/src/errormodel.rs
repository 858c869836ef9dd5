//! Gate error budgets: decay, imperfect blockade, and residual van der
//! Waals shifts, with optimization over the gate Rabi frequency.
//!
//! Unit convention: every user-facing Rabi frequency and interaction is an
//! ordinary frequency in MHz and every lifetime is in ms; the `2 pi` needed
//! for angular-frequency formulas is applied internally. The step-1 GHZ
//! value pins the convention in the tests.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Errors from lattice validation or degenerate inputs.
#[derive(Debug, Error)]
pub enum ErrorModelError {
    #[error("positions and roles lengths differ ({positions} vs {roles})")]
    LengthMismatch { positions: usize, roles: usize },
    #[error("duplicate lattice position at index {0}")]
    DuplicatePosition(usize),
    #[error("site {index} is not a {expected}")]
    WrongRole { index: usize, expected: String },
    #[error("lattice needs at least one control and one target")]
    MissingRoles,
    #[error("parameter {name} must be positive, got {value}")]
    NonPositive { name: String, value: f64 },
    #[error("configuration average over {0} controls exceeds the 2^24 pattern cap")]
    TooManyControls(usize),
}

/// Role of one lattice site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Control,
    Target,
    Idle,
}

/// Planar lattice of controls, targets, and idle sites. Positions are in
/// units of the lattice constant; the quantization axis is normal to the
/// plane, so every in-plane pair shares the angular factor (theta = pi/2),
/// which is absorbed into the nearest-neighbor interaction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Lattice<T: Scalar> {
    pub positions: Vec<[T; 2]>,
    pub roles: Vec<Role>,
    /// Physical spacing in um per lattice unit (bookkeeping only: error
    /// formulas depend on distance ratios and the calibrated `v_nn`).
    pub spacing: T,
}

impl<T: Scalar> Lattice<T> {
    pub fn new(positions: Vec<[T; 2]>, roles: Vec<Role>, spacing: T) -> Result<Self, ErrorModelError> {
        if positions.len() != roles.len() {
            return Err(ErrorModelError::LengthMismatch {
                positions: positions.len(),
                roles: roles.len(),
            });
        }
        for (i, p) in positions.iter().enumerate() {
            for q in positions.iter().skip(i + 1) {
                if p[0] == q[0] && p[1] == q[1] {
                    return Err(ErrorModelError::DuplicatePosition(i));
                }
            }
        }
        Ok(Lattice {
            positions,
            roles,
            spacing,
        })
    }

    /// The 4x4 checkerboard: controls and targets on opposite sublattices.
    pub fn checkerboard_4x4() -> Self {
        let mut positions = Vec::new();
        let mut roles = Vec::new();
        for i in 0..4u32 {
            for j in 0..4u32 {
                positions.push([T::fl(i as f64), T::fl(j as f64)]);
                roles.push(if (i + j) % 2 == 0 {
                    Role::Control
                } else {
                    Role::Target
                });
            }
        }
        Lattice {
            positions,
            roles,
            spacing: T::one(),
        }
    }

    pub fn controls(&self) -> Vec<usize> {
        self.role_indices(Role::Control)
    }

    pub fn targets(&self) -> Vec<usize> {
        self.role_indices(Role::Target)
    }

    fn role_indices(&self, role: Role) -> Vec<usize> {
        self.roles
            .iter()
            .enumerate()
            .filter_map(|(i, &r)| (r == role).then_some(i))
            .collect()
    }

    fn distance(&self, a: usize, b: usize) -> T {
        let dx = self.positions[a][0] - self.positions[b][0];
        let dy = self.positions[a][1] - self.positions[b][1];
        (dx * dx + dy * dy).sqrt()
    }

    /// Smallest control-target distance (the `v_nn` calibration distance).
    pub fn nn_distance(&self) -> Result<T, ErrorModelError> {
        let controls = self.controls();
        let targets = self.targets();
        if controls.is_empty() || targets.is_empty() {
            return Err(ErrorModelError::MissingRoles);
        }
        let mut best = T::fl(f64::INFINITY);
        for &c in &controls {
            for &t in &targets {
                best = best.min(self.distance(c, t));
            }
        }
        Ok(best)
    }
}

/// Physical parameters of the error budget.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ErrorParams<T: Scalar> {
    /// Nearest-neighbor control-target interaction, ordinary MHz.
    pub v_nn: T,
    /// Control-species Rydberg lifetime, ms.
    pub tau_c: T,
    /// Target-species Rydberg lifetime, ms.
    pub tau_t: T,
    /// Residual van der Waals blockade shift, ordinary MHz.
    pub v_vdw_total: T,
}

impl<T: Scalar> ErrorParams<T> {
    /// Single-lifetime parameters.
    pub fn new(v_nn: T, tau: T) -> Self {
        ErrorParams {
            v_nn,
            tau_c: tau,
            tau_t: tau,
            v_vdw_total: T::zero(),
        }
    }

    /// Species-split lifetimes.
    pub fn with_split_tau(v_nn: T, tau_c: T, tau_t: T) -> Self {
        ErrorParams {
            v_nn,
            tau_c,
            tau_t,
            v_vdw_total: T::zero(),
        }
    }

    /// Single-lifetime reduction of split lifetimes: the harmonic mean
    /// `2 / (1/tau_c + 1/tau_t)`.
    pub fn effective_tau(&self) -> T {
        T::fl(2.0) / (T::one() / self.tau_c + T::one() / self.tau_t)
    }
}

/// How the budget treats the spread of control excitation patterns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AveragingConvention {
    /// Every control excited: each target is blockaded by the full control
    /// sum; decay is counted for all `N_c + N_t` atoms at the half-occupancy
    /// rate. This is the convention behind the GHZ step formula.
    WorstCaseBlockade,
    /// Average `V_b^-2` over all `2^N_c` control patterns, counting only the
    /// excited controls in each pattern's blockade sum; decay is counted for
    /// the targets only (the control pulses are not Rabi-limited and their
    /// error can be driven down independently).
    ConfigurationAverage,
}

/// Error budget at the optimized Rabi frequency.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErrorBudget<T: Scalar> {
    pub eps_decay: T,
    pub eps_blockade: T,
    pub eps_vdw: T,
    pub total: T,
    /// Optimizing gate Rabi frequency, ordinary MHz.
    pub omega_opt: T,
    pub convention: AveragingConvention,
    /// Targets whose blockade sum vanished under the convention.
    pub unblockaded_targets: Vec<usize>,
}

const MHZ_MS_ANGULAR: f64 = 2.0 * std::f64::consts::PI * 1e3; // (2 pi MHz) * ms

fn check_positive<T: Scalar>(name: &str, value: T) -> Result<(), ErrorModelError> {
    let v = value.as_f64();
    if !(v.is_finite() && v > 0.0) {
        return Err(ErrorModelError::NonPositive {
            name: name.into(),
            value: v,
        });
    }
    Ok(())
}

/// Blockade sum `sum_c (d_nn / d)^3` for one target over a control subset,
/// in units of `v_nn`. Flags an empty (or vanishing) sum instead of erroring.
pub fn blockade_ratio_sum<T: Scalar>(
    controls: &[[T; 2]],
    target: [T; 2],
    d_nn: T,
) -> (T, bool) {
    let mut acc = T::zero();
    for c in controls {
        let dx = c[0] - target[0];
        let dy = c[1] - target[1];
        let d = (dx * dx + dy * dy).sqrt();
        let ratio = d_nn / d;
        acc += ratio * ratio * ratio;
    }
    (acc, controls.is_empty())
}

/// Blockade strength of one target site from a subset of control sites,
/// ordinary MHz: `V_b = sum_c v_nn (d_nn / d)^3`.
pub fn blockade_strength<T: Scalar>(
    lat: &Lattice<T>,
    control_subset: &[usize],
    target: usize,
    v_nn: T,
) -> Result<(T, bool), ErrorModelError> {
    if lat.roles.get(target) != Some(&Role::Target) {
        return Err(ErrorModelError::WrongRole {
            index: target,
            expected: "target".into(),
        });
    }
    for &c in control_subset {
        if lat.roles.get(c) != Some(&Role::Control) {
            return Err(ErrorModelError::WrongRole {
                index: c,
                expected: "control".into(),
            });
        }
    }
    let d_nn = lat.nn_distance()?;
    let controls: Vec<[T; 2]> = control_subset.iter().map(|&i| lat.positions[i]).collect();
    let (sum, empty) = blockade_ratio_sum(&controls, lat.positions[target], d_nn);
    Ok((v_nn * sum, empty))
}

/// Decay probability of a single Rydberg state over a square `2 pi` pulse
/// (or two `pi` pulses): `(pi/2) / (Omega tau)` with `Omega` angular.
pub fn eps_decay<T: Scalar>(omega: T, tau: T) -> Result<T, ErrorModelError> {
    check_positive("omega", omega)?;
    check_positive("tau", tau)?;
    let omega_tau = omega * tau * T::fl(MHZ_MS_ANGULAR);
    Ok(T::fl(0.5) * T::pi() / omega_tau)
}

/// Imperfect-blockade error `(2 Omega_t / V_b)^2`; `V_b = 0` reports an
/// infinite-error flag instead of dividing by zero.
pub fn eps_blockade<T: Scalar>(omega_t: T, v_b: T) -> (T, bool) {
    if v_b == T::zero() {
        return (T::fl(f64::INFINITY), true);
    }
    let x = T::fl(2.0) * omega_t / v_b;
    (x * x, false)
}

/// Residual van der Waals error `(V_vdw / (2 Omega))^2`.
pub fn eps_vdw<T: Scalar>(v_vdw: T, omega: T) -> T {
    let x = v_vdw / (T::fl(2.0) * omega);
    x * x
}

/// Single-step error `(N_c + N_t) pi / (4 Omega tau) + N_t <V_b^-2> Omega^2`
/// for `omega` in ordinary MHz, `tau` in ms, `mean_vb_inv2` in MHz^-2.
pub fn step_error<T: Scalar>(
    n_c: usize,
    n_t: usize,
    omega: T,
    tau: T,
    mean_vb_inv2: T,
) -> T {
    let decay = T::fl((n_c + n_t) as f64) * T::pi()
        / (T::fl(4.0) * omega * tau * T::fl(MHZ_MS_ANGULAR));
    let blockade = T::fl(n_t as f64) * mean_vb_inv2 * omega * omega;
    decay + blockade
}

/// Closed-form minimum of [`step_error`] and its minimizer.
///
/// `v = <V_b^-2>^(-1/2)` in ordinary MHz. Returns `(eps_min, omega_opt)`
/// with `omega_opt` in ordinary MHz.
pub fn optimal_step_error<T: Scalar>(
    n_c: usize,
    n_t: usize,
    tau: T,
    v: T,
) -> Result<(T, T), ErrorModelError> {
    check_positive("tau", tau)?;
    check_positive("v", v)?;
    if n_c == 0 || n_t == 0 {
        return Err(ErrorModelError::MissingRoles);
    }
    let nt = T::fl(n_t as f64);
    let nsum = T::fl((n_c + n_t) as f64);
    let third = T::fl(1.0 / 3.0);
    let two_thirds = T::fl(2.0 / 3.0);
    let v_tau = v * tau * T::fl(MHZ_MS_ANGULAR); // dimensionless angular product
    let eps = T::fl(3.0) * T::pi().powf(two_thirds) * nt.powf(third) * nsum.powf(two_thirds)
        / (T::fl(4.0) * v_tau.powf(two_thirds));
    // Omega^3 = (N_c + N_t) pi v^2 / (8 N_t tau), all angular; reported in
    // ordinary MHz.
    let v_ang = v * T::fl(2.0e6 * std::f64::consts::PI);
    let tau_s = tau * T::fl(1e-3);
    let omega_ang = (nsum * T::pi() * v_ang * v_ang / (T::fl(8.0) * nt * tau_s)).powf(third);
    let omega = omega_ang / T::fl(2.0e6 * std::f64::consts::PI);
    Ok((eps, omega))
}

/// Golden-section minimum of a unimodal function on `[a, b]`.
pub(crate) fn golden_min<T: Scalar>(mut a: T, mut b: T, f: impl Fn(T) -> T, rel_tol: T) -> (T, T) {
    let phi = (T::fl(5.0).sqrt() - T::one()) * T::fl(0.5);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > rel_tol * (a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) * T::fl(0.5);
    (x, f(x))
}

/// Full gate error budget for a lattice under the given convention,
/// optimizing the target Rabi frequency numerically.
pub fn gate_error<T: Scalar>(
    lat: &Lattice<T>,
    params: &ErrorParams<T>,
    convention: AveragingConvention,
) -> Result<ErrorBudget<T>, ErrorModelError> {
    check_positive("v_nn", params.v_nn)?;
    check_positive("tau_c", params.tau_c)?;
    check_positive("tau_t", params.tau_t)?;
    let controls = lat.controls();
    let targets = lat.targets();
    if controls.is_empty() || targets.is_empty() {
        return Err(ErrorModelError::MissingRoles);
    }
    let n_c = controls.len();
    let n_t = targets.len();
    let d_nn = lat.nn_distance()?;
    let control_pos: Vec<[T; 2]> = controls.iter().map(|&i| lat.positions[i]).collect();

    let mut unblockaded = Vec::new();

    // Mean V_b^-2 over targets (and patterns), in MHz^-2, plus the decay
    // atom-count-over-lifetime sum for the convention (ms^-1 units).
    let (mean_vb_inv2, decay_rate) = match convention {
        AveragingConvention::WorstCaseBlockade => {
            let mut acc = T::zero();
            for &t in &targets {
                let (sum, _) = blockade_ratio_sum(&control_pos, lat.positions[t], d_nn);
                if sum == T::zero() {
                    unblockaded.push(t);
                    continue;
                }
                let vb = params.v_nn * sum;
                acc += T::one() / (vb * vb);
            }
            (
                acc / T::fl(n_t as f64),
                T::fl(n_c as f64) / params.tau_c + T::fl(n_t as f64) / params.tau_t,
            )
        }
        AveragingConvention::ConfigurationAverage => {
            if n_c > 24 {
                return Err(ErrorModelError::TooManyControls(n_c));
            }
            let patterns = 1u64 << n_c;
            let weight = T::one() / T::fl(patterns as f64);
            let mut acc = T::zero();
            for &t in &targets {
                let per_control: Vec<T> = control_pos
                    .iter()
                    .map(|c| {
                        let (s, _) = blockade_ratio_sum(std::slice::from_ref(c), lat.positions[t], d_nn);
                        s
                    })
                    .collect();
                let mut any = false;
                for pattern in 1..patterns {
                    let mut sum = T::zero();
                    for (k, s) in per_control.iter().enumerate() {
                        if pattern & (1 << k) != 0 {
                            sum += *s;
                        }
                    }
                    if sum > T::zero() {
                        any = true;
                        let vb = params.v_nn * sum;
                        acc += weight / (vb * vb);
                    }
                }
                if !any {
                    unblockaded.push(t);
                }
            }
            (acc / T::fl(n_t as f64), T::fl(n_t as f64) / params.tau_t)
        }
    };

    // eps(omega) = A / omega + B omega^2 + C / omega^2 in ordinary-MHz units.
    let a = decay_rate * T::pi() / (T::fl(4.0) * T::fl(MHZ_MS_ANGULAR));
    let b = T::fl(n_t as f64) * mean_vb_inv2;
    let half_vdw = params.v_vdw_total * T::fl(0.5);
    let c_vdw = T::fl(n_t as f64) * half_vdw * half_vdw;

    let objective = |omega: T| a / omega + b * omega * omega + c_vdw / (omega * omega);
    // Bracket around the vdW-free closed-form minimizer.
    let omega_guess = (a / (T::fl(2.0) * b)).powf(T::fl(1.0 / 3.0));
    let (omega_opt, _) = golden_min(
        omega_guess * T::fl(1e-3),
        omega_guess * T::fl(1e3),
        objective,
        T::fl(1e-14),
    );

    let eps_decay_v = a / omega_opt;
    let eps_blockade_v = b * omega_opt * omega_opt;
    let eps_vdw_v = c_vdw / (omega_opt * omega_opt);
    Ok(ErrorBudget {
        eps_decay: eps_decay_v,
        eps_blockade: eps_blockade_v,
        eps_vdw: eps_vdw_v,
        total: eps_decay_v + eps_blockade_v + eps_vdw_v,
        omega_opt,
        convention,
        unblockaded_targets: unblockaded,
    })
}
