//! Exact (noise-free) algebra of the multi-qubit gate constructions: the
//! three-pulse blockade sequence, `C_k Z^m` and `C_k NOT^m`, the
//! `A Z B Z C` single-qubit decomposition with the `Z_delta` phase trick,
//! full controlled-unitary assembly, and sparse-state GHZ growth.
//!
//! Qubit convention: `n = k + m` qubits with controls first; qubit 0 is the
//! leftmost (most significant) bit of a basis index.

use std::collections::BTreeMap;

use nalgebra::{ComplexField, DMatrix, Matrix2};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ghzplan;
use crate::scalar::{cx, cxr, Cx, Scalar};

/// Dense-form size cap (`2^12` amplitudes per column).
pub const MAX_DENSE_QUBITS: usize = 12;
/// Pulse-level cap (three-level sites).
pub const MAX_PULSE_SITES: usize = 8;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("gate on {0} qubits exceeds the dense cap of {MAX_DENSE_QUBITS}")]
    SizeCap(usize),
    #[error("pulse simulation on {0} sites exceeds the cap of {MAX_PULSE_SITES}")]
    PulseSizeCap(usize),
    #[error("counts must satisfy k >= 1 and m >= 1, got k = {k}, m = {m}")]
    BadCounts { k: usize, m: usize },
    #[error("input matrix is not unitary (defect {0:.3e})")]
    NonUnitary(f64),
    #[error("population {0:.3e} leaked outside the computational subspace")]
    Leakage(f64),
    #[error("sparse support {support} exceeded the bound {bound}")]
    SupportBound { support: usize, bound: usize },
    #[error("growth simulation limited to {max} sites, requested {requested}")]
    TooManySites { requested: usize, max: usize },
    #[error(transparent)]
    Plan(#[from] ghzplan::GhzPlanError),
}

/// Dense unitary on `dim` amplitudes.
#[derive(Clone, Debug)]
pub struct DenseUnitary<T: Scalar> {
    pub dim: usize,
    pub entries: DMatrix<Cx<T>>,
}

impl<T: Scalar> DenseUnitary<T> {
    pub fn identity(dim: usize) -> Self {
        DenseUnitary {
            dim,
            entries: DMatrix::identity(dim, dim),
        }
    }

    /// `max |(U^dag U - I)_ij|`.
    pub fn unitarity_defect(&self) -> T {
        let product = self.entries.adjoint() * &self.entries;
        let mut worst = T::zero();
        for r in 0..self.dim {
            for c in 0..self.dim {
                let expect = if r == c { T::one() } else { T::zero() };
                worst = worst.max((product[(r, c)] - cxr(expect)).modulus());
            }
        }
        worst
    }

    /// `max |(A - B)_ij|`.
    pub fn max_entry_distance(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for r in 0..self.dim {
            for c in 0..self.dim {
                worst = worst.max((self.entries[(r, c)] - other.entries[(r, c)]).modulus());
            }
        }
        worst
    }
}

fn check_counts(k: usize, m: usize) -> Result<usize, CircuitError> {
    if k == 0 || m == 0 {
        return Err(CircuitError::BadCounts { k, m });
    }
    let n = k + m;
    if n > MAX_DENSE_QUBITS {
        return Err(CircuitError::SizeCap(n));
    }
    Ok(n)
}

fn bit(index: usize, n: usize, qubit: usize) -> usize {
    (index >> (n - 1 - qubit)) & 1
}

/// `C_k Z^m`: applies a Pauli-Z to each of the `m` targets iff all `k`
/// controls are `|1>`.
pub fn ckzm_unitary<T: Scalar>(k: usize, m: usize) -> Result<DenseUnitary<T>, CircuitError> {
    let n = check_counts(k, m)?;
    let dim = 1 << n;
    let mut u = DMatrix::<Cx<T>>::zeros(dim, dim);
    for idx in 0..dim {
        let controls_on = (0..k).all(|q| bit(idx, n, q) == 1);
        let phase = if controls_on {
            let ones = (k..n).filter(|&q| bit(idx, n, q) == 1).count();
            if ones % 2 == 1 {
                -T::one()
            } else {
                T::one()
            }
        } else {
            T::one()
        };
        u[(idx, idx)] = cxr(phase);
    }
    Ok(DenseUnitary { dim, entries: u })
}

/// Single-qubit layer `op[0] (x) op[1] (x) ... (x) op[n-1]` (identity where
/// `ops` has no entry for a qubit).
pub fn single_qubit_layer<T: Scalar>(
    n: usize,
    ops: &[(usize, Matrix2<Cx<T>>)],
) -> DenseUnitary<T> {
    let dim = 1 << n;
    let mut factors: Vec<Matrix2<Cx<T>>> = vec![Matrix2::identity(); n];
    for (q, op) in ops {
        factors[*q] = *op;
    }
    let mut u = DMatrix::<Cx<T>>::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            let mut amp = cxr(T::one());
            for q in 0..n {
                amp *= factors[q][(bit(r, n, q), bit(c, n, q))];
                if amp == Complex::new(T::zero(), T::zero()) {
                    break;
                }
            }
            u[(r, c)] = amp;
        }
    }
    DenseUnitary { dim, entries: u }
}

/// Hadamard.
pub fn hadamard<T: Scalar>() -> Matrix2<Cx<T>> {
    let s = T::one() / T::fl(2.0).sqrt();
    Matrix2::new(cxr(s), cxr(s), cxr(s), cxr(-s))
}

/// Pauli X.
pub fn pauli_x<T: Scalar>() -> Matrix2<Cx<T>> {
    let z = Cx::new(T::zero(), T::zero());
    Matrix2::new(z, cxr(T::one()), cxr(T::one()), z)
}

/// Pauli Z.
pub fn pauli_z<T: Scalar>() -> Matrix2<Cx<T>> {
    let z = Cx::new(T::zero(), T::zero());
    Matrix2::new(cxr(T::one()), z, z, cxr(-T::one()))
}

/// `Z_delta = e^{i delta / 2} Z`: a Z gate carrying a controllable global
/// phase, realized by phase-shifted pi-pulse pairs.
pub fn zdelta<T: Scalar>(delta: T) -> Matrix2<Cx<T>> {
    let half = delta * T::fl(0.5);
    let phase = cx(half.cos(), half.sin());
    let z = Cx::new(T::zero(), T::zero());
    Matrix2::new(phase, z, z, -phase)
}

/// Ideal-blockade pulse simulation of the `C_k Z^m`-generating sequence.
///
/// Three-level sites (`0`, `1`, Rydberg): a pi pulse takes control `|0>` to
/// the Rydberg level, each target then sees a `2 pi` pulse through its own
/// Rydberg level (as two pi pulses) that is blockaded whenever any control
/// sits in the Rydberg level, and a `-pi` pulse restores the controls.
/// Returns the induced unitary on the computational subspace.
pub fn pulse_simulate<T: Scalar>(k: usize, m: usize) -> Result<DenseUnitary<T>, CircuitError> {
    if k == 0 || m == 0 {
        return Err(CircuitError::BadCounts { k, m });
    }
    let n = k + m;
    if n > MAX_PULSE_SITES {
        return Err(CircuitError::PulseSizeCap(n));
    }
    let dim3: usize = 3usize.pow(n as u32);
    let dim2: usize = 1 << n;
    let place: Vec<usize> = (0..n).map(|q| 3usize.pow((n - 1 - q) as u32)).collect();
    let digit = |idx: usize, q: usize| (idx / place[q]) % 3;

    // pi pulse on the (0, rydberg) pair of `site`, phase `sign * -i`,
    // conditionally blocked.
    let pi_pulse = |state: &mut Vec<Cx<T>>, site: usize, up_sign: T, blocked: &dyn Fn(usize) -> bool| {
        let mut next = vec![Complex::new(T::zero(), T::zero()); dim3];
        for (idx, &amp) in state.iter().enumerate() {
            if amp == Complex::new(T::zero(), T::zero()) {
                continue;
            }
            let d = digit(idx, site);
            if d == 1 || blocked(idx) {
                next[idx] += amp;
            } else {
                // |0> -> -i |r>, |r> -> -i |0> (sign flips for the -pi pulse)
                let swapped = if d == 0 { idx + 2 * place[site] } else { idx - 2 * place[site] };
                next[swapped] += amp * cx(T::zero(), -up_sign);
            }
        }
        *state = next;
    };

    let no_block = |_: usize| false;
    let mut u = DMatrix::<Cx<T>>::zeros(dim2, dim2);
    for input in 0..dim2 {
        // Embed the computational basis state into the three-level register.
        let mut idx3 = 0usize;
        for (q, pl) in place.iter().enumerate() {
            idx3 += bit(input, n, q) * pl;
        }
        let mut state = vec![Complex::new(T::zero(), T::zero()); dim3];
        state[idx3] = cxr(T::one());

        // (1) pi pulse exciting control |0> to the Rydberg level.
        for ctl in 0..k {
            pi_pulse(&mut state, ctl, T::one(), &no_block);
        }
        // (2) two pi pulses per target, blockaded by any excited control.
        for tgt in k..n {
            let blocked = |idx: usize| (0..k).any(|c| digit(idx, c) == 2);
            pi_pulse(&mut state, tgt, T::one(), &blocked);
            pi_pulse(&mut state, tgt, T::one(), &blocked);
        }
        // (3) -pi pulse restoring the controls.
        for ctl in 0..k {
            pi_pulse(&mut state, ctl, -T::one(), &no_block);
        }

        let mut leak = T::zero();
        for (idx, amp) in state.iter().enumerate() {
            if (0..n).any(|q| digit(idx, q) == 2) {
                leak += amp.norm_sqr();
            }
        }
        if leak > T::fl(1e-12) {
            return Err(CircuitError::Leakage(leak.as_f64()));
        }

        for out in 0..dim2 {
            let mut idx3 = 0usize;
            for (q, pl) in place.iter().enumerate() {
                idx3 += bit(out, n, q) * pl;
            }
            u[(out, input)] = state[idx3];
        }
    }
    Ok(DenseUnitary { dim: dim2, entries: u })
}

/// Conjugate a gate by Pauli-X on every target qubit.
pub fn conjugate_targets_by_x<T: Scalar>(
    gate: &DenseUnitary<T>,
    k: usize,
    m: usize,
) -> DenseUnitary<T> {
    let n = k + m;
    let ops: Vec<(usize, Matrix2<Cx<T>>)> = (k..n).map(|q| (q, pauli_x())).collect();
    let x_layer = single_qubit_layer(n, &ops);
    DenseUnitary {
        dim: gate.dim,
        entries: &x_layer.entries * &gate.entries * &x_layer.entries,
    }
}

/// `A Z B Z C` decomposition of a single-qubit unitary `U = e^{i delta} W`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Su2Decomposition<T: Scalar> {
    /// Row-major 2x2 complex entries of `A`, `B`, `C` (all in SU(2)).
    pub a: [[Cx<T>; 2]; 2],
    pub b: [[Cx<T>; 2]; 2],
    pub c: [[Cx<T>; 2]; 2],
    /// Global phase angle, `delta` in `(-pi/2, pi/2]`.
    pub delta: T,
}

fn to_array<T: Scalar>(m: &Matrix2<Cx<T>>) -> [[Cx<T>; 2]; 2] {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn from_array<T: Scalar>(a: &[[Cx<T>; 2]; 2]) -> Matrix2<Cx<T>> {
    Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1])
}

impl<T: Scalar> Su2Decomposition<T> {
    pub fn a_mat(&self) -> Matrix2<Cx<T>> {
        from_array(&self.a)
    }
    pub fn b_mat(&self) -> Matrix2<Cx<T>> {
        from_array(&self.b)
    }
    pub fn c_mat(&self) -> Matrix2<Cx<T>> {
        from_array(&self.c)
    }
}

fn rz<T: Scalar>(theta: T) -> Matrix2<Cx<T>> {
    let half = theta * T::fl(0.5);
    let z = Cx::new(T::zero(), T::zero());
    Matrix2::new(cx(half.cos(), -half.sin()), z, z, cx(half.cos(), half.sin()))
}

fn ry<T: Scalar>(theta: T) -> Matrix2<Cx<T>> {
    let half = theta * T::fl(0.5);
    Matrix2::new(
        cxr(half.cos()),
        cxr(-half.sin()),
        cxr(half.sin()),
        cxr(half.cos()),
    )
}

/// Decompose a 2x2 unitary into `U = e^{i delta} A Z B Z C` with
/// `A B C = I` and `A, B, C` special-unitary.
pub fn su2_decompose<T: Scalar>(u: &Matrix2<Cx<T>>) -> Result<Su2Decomposition<T>, CircuitError> {
    let defect = (u.adjoint() * u - Matrix2::identity()).norm();
    if defect > T::fl(1e-9) {
        return Err(CircuitError::NonUnitary(defect.as_f64()));
    }
    // det U = e^{2 i delta}; branch delta in (-pi/2, pi/2].
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let delta = det.im.atan2(det.re) * T::fl(0.5);
    let w = u * cx(delta.cos(), -delta.sin());

    // ZYZ Euler angles of W in SU(2).
    let a = w[(0, 0)];
    let b = w[(0, 1)];
    let gamma = T::fl(2.0) * b.modulus().atan2(a.modulus());
    let (beta, phi) = if b.modulus() < T::fl(1e-12) {
        (-T::fl(2.0) * a.im.atan2(a.re), T::zero())
    } else if a.modulus() < T::fl(1e-12) {
        let nb = -b;
        (-T::fl(2.0) * nb.im.atan2(nb.re), T::zero())
    } else {
        let sum = -T::fl(2.0) * a.im.atan2(a.re);
        let nb = -b;
        let diff = -T::fl(2.0) * nb.im.atan2(nb.re);
        ((sum + diff) * T::fl(0.5), (sum - diff) * T::fl(0.5))
    };

    // X-basis triple, then conjugation by the special-unitary Hadamard
    // i*H (Z = (iH)^dag X (iH)) keeps all three factors in SU(2).
    let a_x = rz(beta) * ry(gamma * T::fl(0.5));
    let b_x = ry(-gamma * T::fl(0.5)) * rz(-(phi + beta) * T::fl(0.5));
    let c_x = rz((phi - beta) * T::fl(0.5));
    let ih = hadamard::<T>() * cx(T::zero(), T::one());
    let ih_dag = ih.adjoint();
    let a_m = a_x * ih;
    let b_m = ih_dag * b_x * ih;
    let c_m = ih_dag * c_x;

    Ok(Su2Decomposition {
        a: to_array(&a_m),
        b: to_array(&b_m),
        c: to_array(&c_m),
        delta,
    })
}

/// Controlled layer applying `Z_delta` to every target when all controls
/// are `|1>`.
pub fn controlled_zdelta_layer<T: Scalar>(
    k: usize,
    m: usize,
    delta: T,
) -> Result<DenseUnitary<T>, CircuitError> {
    let n = check_counts(k, m)?;
    let dim = 1 << n;
    let half = delta * T::fl(0.5);
    let mut u = DMatrix::<Cx<T>>::zeros(dim, dim);
    for idx in 0..dim {
        let controls_on = (0..k).all(|q| bit(idx, n, q) == 1);
        let amp = if controls_on {
            let ones = (k..n).filter(|&q| bit(idx, n, q) == 1).count();
            let sign = if ones % 2 == 1 { -T::one() } else { T::one() };
            let total = half * T::fl(m as f64);
            cx(total.cos(), total.sin()) * cxr(sign)
        } else {
            cxr(T::one())
        };
        u[(idx, idx)] = amp;
    }
    Ok(DenseUnitary { dim, entries: u })
}

/// Gate description of the assembled controlled-unitary sequence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CkuDescription<T: Scalar> {
    pub k: usize,
    pub m: usize,
    /// Global-phase angles of the individual targets.
    pub deltas: Vec<T>,
    /// Shared phase `<delta>` carried by both controlled layers.
    pub mean_delta: T,
    /// Per-target decompositions.
    pub factors: Vec<Su2Decomposition<T>>,
    /// Layer order, first applied first.
    pub sequence: Vec<String>,
}

/// Assemble `C_k U_1 ... U_m` from per-target `A Z B Z C` factors and two
/// controlled `Z_<delta>` layers; also returns the dense unitary.
pub fn cku_assemble<T: Scalar>(
    k: usize,
    unitaries: &[Matrix2<Cx<T>>],
) -> Result<(CkuDescription<T>, DenseUnitary<T>), CircuitError> {
    let m = unitaries.len();
    let n = check_counts(k, m)?;

    let factors: Vec<Su2Decomposition<T>> = unitaries
        .iter()
        .map(su2_decompose)
        .collect::<Result<_, _>>()?;
    let deltas: Vec<T> = factors.iter().map(|f| f.delta).collect();
    let mean_delta = deltas.iter().fold(T::zero(), |acc, &d| acc + d) / T::fl(m as f64);

    let layer = |pick: &dyn Fn(&Su2Decomposition<T>) -> Matrix2<Cx<T>>| {
        let ops: Vec<(usize, Matrix2<Cx<T>>)> = factors
            .iter()
            .enumerate()
            .map(|(i, f)| (k + i, pick(f)))
            .collect();
        single_qubit_layer(n, &ops)
    };

    let c_layer = layer(&|f| f.c_mat());
    let b_layer = layer(&|f| f.b_mat());
    let a_layer = layer(&|f| f.a_mat());
    let cz = controlled_zdelta_layer(k, m, mean_delta)?;

    let entries = &a_layer.entries
        * &cz.entries
        * &b_layer.entries
        * &cz.entries
        * &c_layer.entries;

    let description = CkuDescription {
        k,
        m,
        deltas,
        mean_delta,
        factors,
        sequence: vec![
            "C layer".into(),
            "controlled Z_<delta>".into(),
            "B layer".into(),
            "controlled Z_<delta>".into(),
            "A layer".into(),
        ],
    };
    Ok((
        description,
        DenseUnitary {
            dim: 1 << n,
            entries,
        },
    ))
}

/// Reference block gate: `U_1 (x) ... (x) U_m` on targets iff all controls
/// are `|1>`, identity otherwise.
pub fn controlled_block<T: Scalar>(
    k: usize,
    unitaries: &[Matrix2<Cx<T>>],
) -> Result<DenseUnitary<T>, CircuitError> {
    let m = unitaries.len();
    let n = check_counts(k, m)?;
    let dim = 1 << n;
    let mut u = DMatrix::<Cx<T>>::zeros(dim, dim);
    for col in 0..dim {
        let controls_on = (0..k).all(|q| bit(col, n, q) == 1);
        if !controls_on {
            u[(col, col)] = cxr(T::one());
            continue;
        }
        // Rows differing only in target bits.
        for row in 0..dim {
            if (0..k).any(|q| bit(row, n, q) != bit(col, n, q)) {
                continue;
            }
            let mut amp = cxr(T::one());
            for (i, ui) in unitaries.iter().enumerate() {
                amp *= ui[(bit(row, n, k + i), bit(col, n, k + i))];
            }
            u[(row, col)] = amp;
        }
    }
    Ok(DenseUnitary { dim, entries: u })
}

/// `C_k NOT^m`: Hadamards on the targets before and after `C_k Z^m`.
pub fn cknotm<T: Scalar>(k: usize, m: usize) -> Result<DenseUnitary<T>, CircuitError> {
    let n = check_counts(k, m)?;
    let h_ops: Vec<(usize, Matrix2<Cx<T>>)> = (k..n).map(|q| (q, hadamard())).collect();
    let h_layer = single_qubit_layer(n, &h_ops);
    let z = ckzm_unitary::<T>(k, m)?;
    Ok(DenseUnitary {
        dim: z.dim,
        entries: &h_layer.entries * &z.entries * &h_layer.entries,
    })
}

/// Sparse state over up to 64 qubit sites, amplitudes keyed by bitmask.
#[derive(Clone, Debug)]
pub struct SparseState<T: Scalar> {
    pub n_sites: usize,
    pub amps: BTreeMap<u64, Cx<T>>,
}

const PRUNE_TOL: f64 = 1e-14;

impl<T: Scalar> SparseState<T> {
    /// Basis state `|mask>`.
    pub fn basis(n_sites: usize, mask: u64) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(mask, cxr(T::one()));
        SparseState { n_sites, amps }
    }

    pub fn support(&self) -> usize {
        self.amps.len()
    }

    pub fn norm(&self) -> T {
        self.amps
            .values()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
            .sqrt()
    }

    fn prune(&mut self) {
        let tol = T::fl(PRUNE_TOL);
        self.amps.retain(|_, a| a.modulus() > tol);
    }

    /// Apply a Hadamard on one site.
    pub fn hadamard(&mut self, site: usize) {
        let s = T::one() / T::fl(2.0).sqrt();
        let bit = 1u64 << site;
        let mut next: BTreeMap<u64, Cx<T>> = BTreeMap::new();
        for (&mask, &amp) in &self.amps {
            let low = mask & !bit;
            let high = mask | bit;
            let sign = if mask & bit == 0 { T::one() } else { -T::one() };
            *next.entry(low).or_insert_with(|| cxr(T::zero())) += amp * cxr(s);
            *next.entry(high).or_insert_with(|| cxr(T::zero())) += amp * cxr(s * sign);
        }
        self.amps = next;
        self.prune();
    }

    /// Apply `C_k Z^m` with the given control and target site sets.
    pub fn ckz(&mut self, controls: &[usize], targets: &[usize]) {
        let cmask: u64 = controls.iter().map(|&s| 1u64 << s).sum();
        for (&mask, amp) in self.amps.iter_mut() {
            if mask & cmask == cmask {
                let ones = targets.iter().filter(|&&t| mask & (1 << t) != 0).count();
                if ones % 2 == 1 {
                    *amp = -*amp;
                }
            }
        }
    }

    /// Overlap-squared with the GHZ state over all sites.
    pub fn ghz_fidelity(&self) -> T {
        let all: u64 = if self.n_sites == 64 {
            u64::MAX
        } else {
            (1u64 << self.n_sites) - 1
        };
        let inv_sqrt2 = T::one() / T::fl(2.0).sqrt();
        let zero = self.amps.get(&0).copied().unwrap_or_else(|| cxr(T::zero()));
        let ones = self.amps.get(&all).copied().unwrap_or_else(|| cxr(T::zero()));
        ((zero + ones) * cxr(inv_sqrt2)).norm_sqr()
    }

    /// Deterministic amplitude listing `(bitstring, re, im)`, site 0 first.
    pub fn amplitude_list(&self) -> Vec<(String, T, T)> {
        self.amps
            .iter()
            .map(|(&mask, amp)| {
                let bits: String = (0..self.n_sites)
                    .map(|s| if mask & (1 << s) != 0 { '1' } else { '0' })
                    .collect();
                (bits, amp.re, amp.im)
            })
            .collect()
    }
}

/// Outcome of a sparse GHZ growth run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GhzRunReport<T: Scalar> {
    pub steps: usize,
    pub n_sites: usize,
    pub fidelity: T,
    /// Largest support observed at any point of the run.
    pub max_support: usize,
    /// Support right after each step's first Hadamard layer.
    pub support_after_h: Vec<usize>,
}

/// Simulate `steps` rounds of GHZ growth on the diamond lattice via the
/// Hadamard / `C_k Z^m` / Hadamard sequence, verifying the support bound
/// `2^(N_t + 1)` throughout.
pub fn ghz_simulate<T: Scalar>(steps: usize) -> Result<(SparseState<T>, GhzRunReport<T>), CircuitError> {
    let plan = ghzplan::plan_steps::<T>(steps)?;
    // Deterministic site indexing over the final diamond.
    let mut coords: Vec<[i64; 2]> = Vec::new();
    coords.push([0, 0]);
    for step in &plan {
        coords.extend_from_slice(&step.targets);
    }
    if coords.len() > 64 {
        return Err(CircuitError::TooManySites {
            requested: coords.len(),
            max: 64,
        });
    }
    let site_of = |p: &[i64; 2]| coords.iter().position(|q| q == p).expect("known site");

    let n_sites = coords.len();
    let mut state = SparseState::<T>::basis(n_sites, 0);
    // Origin in (|0> + |1>)/sqrt(2).
    state.hadamard(0);

    let mut max_support = state.support();
    let mut support_after_h = Vec::with_capacity(steps);
    for step in &plan {
        let controls: Vec<usize> = step.controls.iter().map(&site_of).collect();
        let targets: Vec<usize> = step.targets.iter().map(&site_of).collect();
        let bound = 1usize << (step.n_t + 1);
        for &t in &targets {
            state.hadamard(t);
            max_support = max_support.max(state.support());
        }
        support_after_h.push(state.support());
        if state.support() > bound {
            return Err(CircuitError::SupportBound {
                support: state.support(),
                bound,
            });
        }
        state.ckz(&controls, &targets);
        for &t in &targets {
            state.hadamard(t);
        }
        max_support = max_support.max(state.support());
        if state.support() > bound {
            return Err(CircuitError::SupportBound {
                support: state.support(),
                bound,
            });
        }
    }

    let report = GhzRunReport {
        steps,
        n_sites,
        fidelity: state.ghz_fidelity(),
        max_support,
        support_after_h,
    };
    Ok((state, report))
}
