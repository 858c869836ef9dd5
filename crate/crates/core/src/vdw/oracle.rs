//! Exact-diagonalization oracle for the dressed `C6` coefficients.
//!
//! The two-atom Hamiltonian is assembled in an extended Floquet basis:
//! pair states times harmonic indices `(n0, n+)` over the two drive-frame
//! frequencies, with every total-m-conserving dipole-dipole coupling placed
//! at its harmonic offset. The dressed-pair quasi-energy is tracked across
//! a list of separations by overlap continuation (shifted inverse
//! iteration) and fitted to `E(r) = E_inf - C6 / r^6 - C9 / r^9`; the
//! `1/r^9` nuisance term absorbs the leading third-order bias.

use nalgebra::{DMatrix, DVector};

use crate::dataset::LevelDataset;
use crate::dressing::DressedTriple;
use crate::scalar::Scalar;

use super::{build_channels, Species, VdwError};

/// Oracle configuration.
#[derive(Clone, Copy, Debug)]
pub struct OracleConfig<T: Scalar> {
    /// Harmonic truncation per frame frequency.
    pub n_max: i32,
    /// Minimum overlap for eigenvector continuation.
    pub overlap_min: T,
    /// Perturbative-regime precondition: largest coupling/defect ratio at
    /// the smallest separation.
    pub max_ratio: T,
    /// Maximum allowed relative fit residual.
    pub fit_rel_residual_max: T,
}

impl<T: Scalar> Default for OracleConfig<T> {
    fn default() -> Self {
        OracleConfig {
            n_max: 2,
            overlap_min: T::fl(0.9),
            max_ratio: T::fl(1e-2),
            fit_rel_residual_max: T::fl(1e-3),
        }
    }
}

/// Fitted oracle output.
#[derive(Clone, Debug)]
pub struct OracleC6<T: Scalar> {
    /// Fitted coefficient, GHz um^6, convention `V = -C6 / r^6`.
    pub c6: T,
    /// Fitted asymptote `E_inf`, MHz.
    pub e_inf: T,
    /// Relative fit residual (rms against the `1/r^6` term scale).
    pub residual: T,
    /// `(r, quasi-energy)` samples, MHz.
    pub samples: Vec<(T, T)>,
}

struct FloquetModel<T: Scalar> {
    /// Single-atom static Hamiltonian in the rotating frame (MHz).
    h1: DMatrix<T>,
    /// Pair couplings: `(row_pair, col_pair, dn0, dnp, strength)` with
    /// strength in MHz um^3 (multiply by `1/r^3`).
    couplings: Vec<(usize, usize, i32, i32, T)>,
    n_states: usize,
    nu0: T,
    nuplus: T,
}

fn cq<T: Scalar>(q: i32) -> T {
    if q == 0 {
        T::one()
    } else {
        T::fl(0.5)
    }
}

impl<T: Scalar> FloquetModel<T> {
    fn new(
        dataset: &LevelDataset<T>,
        triple: &DressedTriple<T>,
        theta: T,
    ) -> Result<Self, VdwError> {
        let (Some(nu0), Some(nuplus)) = (triple.drives.nu0, triple.drives.nuplus) else {
            return Err(VdwError::MissingDriveFrequencies);
        };
        let n = dataset.len();
        let [s_idx, p0_idx, pp_idx] = dataset.triple_indices();
        let e_s = dataset.state(s_idx).energy;
        let frame = |x: usize| -> T {
            if x == p0_idx {
                nu0
            } else if x == pp_idx {
                nuplus
            } else {
                T::zero()
            }
        };

        let mut h1 = DMatrix::<T>::zeros(n, n);
        for x in 0..n {
            h1[(x, x)] = dataset.state(x).energy - e_s - frame(x);
        }
        h1[(s_idx, p0_idx)] = triple.drives.omega0;
        h1[(p0_idx, s_idx)] = triple.drives.omega0;
        h1[(s_idx, pp_idx)] = triple.drives.omegaplus;
        h1[(pp_idx, s_idx)] = triple.drives.omegaplus;

        let cth = theta.cos();
        let angular = T::one() - T::fl(3.0) * cth * cth;
        let harmonic = |x: usize| -> (i32, i32) {
            if x == p0_idx {
                (1, 0)
            } else if x == pp_idx {
                (0, 1)
            } else {
                (0, 0)
            }
        };

        let mut couplings = Vec::new();
        for x in 0..n {
            for a in 0..n {
                let Some((qa, mua)) = dataset.dipole_between(x, a) else {
                    continue;
                };
                for y in 0..n {
                    for b in 0..n {
                        let Some((qb, mub)) = dataset.dipole_between(y, b) else {
                            continue;
                        };
                        if qa + qb != 0 {
                            continue;
                        }
                        let strength = cq::<T>(qa) * mua * mub * angular;
                        let (ha0, hap) = harmonic(a);
                        let (hx0, hxp) = harmonic(x);
                        let (hb0, hbp) = harmonic(b);
                        let (hy0, hyp) = harmonic(y);
                        let dn0 = ha0 - hx0 + hb0 - hy0;
                        let dnp = hap - hxp + hbp - hyp;
                        couplings.push((a * n + b, x * n + y, dn0, dnp, strength));
                    }
                }
            }
        }

        Ok(FloquetModel {
            h1,
            couplings,
            n_states: n,
            nu0,
            nuplus,
        })
    }

    fn block_count(&self, n_max: i32) -> usize {
        (2 * n_max + 1) as usize
    }

    fn dim(&self, n_max: i32) -> usize {
        let b = self.block_count(n_max);
        self.n_states * self.n_states * b * b
    }

    fn index(&self, pair: usize, n0: i32, np: i32, n_max: i32) -> usize {
        let b = self.block_count(n_max);
        (pair * b + (n0 + n_max) as usize) * b + (np + n_max) as usize
    }

    /// Assemble the full quasi-energy matrix at separation `r`.
    fn matrix(&self, r: T, n_max: i32) -> DMatrix<T> {
        let n = self.n_states;
        let dim = self.dim(n_max);
        let mut k = DMatrix::<T>::zeros(dim, dim);

        // Static single-atom part plus the harmonic diagonal.
        for n0 in -n_max..=n_max {
            for np in -n_max..=n_max {
                let offset = T::fl(n0 as f64) * self.nu0 + T::fl(np as f64) * self.nuplus;
                for x in 0..n {
                    for y in 0..n {
                        let pair = x * n + y;
                        let row = self.index(pair, n0, np, n_max);
                        k[(row, row)] = self.h1[(x, x)] + self.h1[(y, y)] + offset;
                        // Drive couplings act on one atom at a time.
                        for x2 in 0..n {
                            if x2 != x && self.h1[(x2, x)] != T::zero() {
                                let row2 = self.index(x2 * n + y, n0, np, n_max);
                                k[(row2, row)] += self.h1[(x2, x)];
                            }
                        }
                        for y2 in 0..n {
                            if y2 != y && self.h1[(y2, y)] != T::zero() {
                                let row2 = self.index(x * n + y2, n0, np, n_max);
                                k[(row2, row)] += self.h1[(y2, y)];
                            }
                        }
                    }
                }
            }
        }

        // Dipole-dipole couplings at their harmonic offsets.
        let inv_r3 = T::one() / (r * r * r);
        for &(row_pair, col_pair, dn0, dnp, strength) in &self.couplings {
            let v = strength * inv_r3;
            for n0 in -n_max..=n_max {
                let m0 = n0 + dn0;
                if m0.abs() > n_max {
                    continue;
                }
                for np in -n_max..=n_max {
                    let mp = np + dnp;
                    if mp.abs() > n_max {
                        continue;
                    }
                    let row = self.index(row_pair, m0, mp, n_max);
                    let col = self.index(col_pair, n0, np, n_max);
                    k[(row, col)] += v;
                }
            }
        }
        k
    }

    /// Embedding of the dressed pair `|DD>` at harmonic (0, 0).
    fn seed_vector(&self, triple: &DressedTriple<T>, species: Species, dataset: &LevelDataset<T>, n_max: i32) -> DVector<T> {
        let n = self.n_states;
        let [s_idx, p0_idx, pp_idx] = dataset.triple_indices();
        let coeffs = match species {
            Species::Control => triple.c.real_coeffs(),
            Species::Target => triple.t.real_coeffs(),
        };
        let mut single = vec![T::zero(); n];
        single[s_idx] = coeffs[0];
        single[p0_idx] = coeffs[1];
        single[pp_idx] = coeffs[2];
        let mut v = DVector::<T>::zeros(self.dim(n_max));
        for x in 0..n {
            for y in 0..n {
                let amp = single[x] * single[y];
                if amp != T::zero() {
                    v[self.index(x * n + y, 0, 0, n_max)] = amp;
                }
            }
        }
        v
    }
}

/// Shifted inverse iteration for the eigenpair continuing `seed` near
/// `sigma`. Returns `(eigenvalue, eigenvector)`.
fn track_eigenpair<T: Scalar>(
    k: &DMatrix<T>,
    seed: &DVector<T>,
    sigma0: T,
    r: T,
) -> Result<(T, DVector<T>), VdwError> {
    let dim = k.nrows();
    let mut sigma = sigma0;
    let mut x = seed.normalize();
    let mut rho = sigma0;
    for _round in 0..6 {
        let mut shifted = k.clone();
        for i in 0..dim {
            shifted[(i, i)] -= sigma;
        }
        let lu = shifted.lu();
        let mut converged = false;
        for _iter in 0..4 {
            let Some(y) = lu.solve(&x) else {
                return Err(VdwError::SolveFailed(r.as_f64()));
            };
            let norm = y.norm();
            if !(norm.as_f64().is_finite() && norm > T::zero()) {
                return Err(VdwError::SolveFailed(r.as_f64()));
            }
            x = y / norm;
            rho = (k * &x).dot(&x);
            let resid = (k * &x - &x * rho).norm();
            if resid <= T::fl(1e-10) * (T::one() + rho.abs()) {
                converged = true;
                break;
            }
        }
        if converged {
            return Ok((rho, x));
        }
        sigma = rho;
    }
    Ok((rho, x))
}

/// Fit `E(r) = e_inf + a6 / r^6 + a9 / r^9` by least squares; returns
/// `(e_inf, a6, rel_residual)`.
fn fit_inverse_powers<T: Scalar>(samples: &[(T, T)]) -> (T, T, T) {
    let m = samples.len();
    let mut design = DMatrix::<T>::zeros(m, 3);
    let mut rhs = DVector::<T>::zeros(m);
    for (i, &(r, e)) in samples.iter().enumerate() {
        let r3 = r * r * r;
        let r6 = r3 * r3;
        design[(i, 0)] = T::one();
        design[(i, 1)] = T::one() / r6;
        design[(i, 2)] = T::one() / (r6 * r3);
        rhs[i] = e;
    }
    let svd = design.clone().svd(true, true);
    let coef = svd.solve(&rhs, T::fl(1e-300)).expect("least squares");
    let fitted = design * &coef;
    let mut ss = T::zero();
    for i in 0..m {
        let d = fitted[i] - rhs[i];
        ss += d * d;
    }
    let rms = (ss / T::fl(m as f64)).sqrt();
    // Scale against the smallest-separation 1/r^6 term.
    let r_min = samples
        .iter()
        .map(|&(r, _)| r)
        .fold(T::fl(f64::INFINITY), |a, b| a.min(b));
    let scale = (coef[1] / r_min.powi(6)).abs().max(T::fl(1e-300));
    (coef[0], coef[1], rms / scale)
}

/// Exactly diagonalize the extended Floquet pair problem on `r_list` and
/// fit the dressed-pair quasi-energy to extract `C6` (GHz um^6).
pub fn oracle_c6<T: Scalar>(
    dataset: &LevelDataset<T>,
    triple: &DressedTriple<T>,
    species: Species,
    theta: T,
    r_list: &[T],
    cfg: &OracleConfig<T>,
) -> Result<OracleC6<T>, VdwError> {
    if r_list.len() < 4 {
        return Err(VdwError::TooFewRadii {
            need: 4,
            got: r_list.len(),
        });
    }
    // Perturbative-regime precondition from the channel table.
    let channels = build_channels(dataset, triple, species, theta)?;
    let mut radii: Vec<T> = r_list.to_vec();
    radii.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let r_min = radii[radii.len() - 1];
    let ratio = channels.max_ratio_at(r_min);
    if ratio > cfg.max_ratio {
        return Err(VdwError::NotPerturbative {
            ratio: ratio.as_f64(),
            max: cfg.max_ratio.as_f64(),
        });
    }

    let model = FloquetModel::new(dataset, triple, theta)?;
    let seed = model.seed_vector(triple, species, dataset, cfg.n_max);
    let e0 = T::fl(2.0)
        * match species {
            Species::Control => triple.c.shift,
            Species::Target => triple.t.shift,
        };

    let mut reference = seed.clone();
    let mut sigma = e0;
    let mut samples = Vec::with_capacity(radii.len());
    for &r in &radii {
        let k = model.matrix(r, cfg.n_max);
        let (rho, vec) = track_eigenpair(&k, &reference, sigma, r)?;
        let overlap = vec.dot(&reference).abs();
        if overlap < cfg.overlap_min {
            return Err(VdwError::TrackingAmbiguity {
                overlap: overlap.as_f64(),
                min: cfg.overlap_min.as_f64(),
                r: r.as_f64(),
            });
        }
        samples.push((r, rho));
        reference = vec;
        sigma = rho;
    }

    let (e_inf, a6, residual) = fit_inverse_powers(&samples);
    if residual > cfg.fit_rel_residual_max {
        return Err(VdwError::FitResidual {
            residual: residual.as_f64(),
            max: cfg.fit_rel_residual_max.as_f64(),
        });
    }
    Ok(OracleC6 {
        c6: -a6 * T::fl(1e-3),
        e_inf,
        residual,
        samples,
    })
}

/// Geometric ladder of separations spanning the perturbative window:
/// `count` points from the radius where the worst coupling/defect ratio
/// equals `target_ratio` up to `span` times that radius.
pub fn perturbative_radii<T: Scalar>(
    channels: &super::ChannelSet<T>,
    target_ratio: T,
    span: T,
    count: usize,
) -> Vec<T> {
    let mut worst = T::zero();
    for ch in &channels.channels {
        if ch.numerator() == T::zero() {
            continue;
        }
        worst = worst.max((ch.coupling / ch.defect).abs());
    }
    let r_min = (worst / target_ratio).powf(T::fl(1.0 / 3.0));
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let t = T::fl(i as f64 / (count - 1) as f64);
        out.push(r_min * span.powf(t));
    }
    out
}
