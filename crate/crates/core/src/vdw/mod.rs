//! Dressed van der Waals coefficients by Floquet second-order perturbation
//! theory.
//!
//! Multiple rotating frames leave no single frame in which the two-atom
//! Hamiltonian is static, so each perturbative channel carries an explicit
//! frequency shift `n . nu` on its energy defect. Channels come in three
//! kinds: both atoms leaving the dressed manifold (`V1`), both staying
//! (`V2`), and one of each (`V3`). The `C6` sign convention is pinned to
//! `V_vdW = -C6 / r^6` and enforced against the exact-diagonalization
//! oracle in [`oracle`], never by hand derivation.

pub mod oracle;
pub mod scan;

use nalgebra::{Matrix3, SMatrix};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LevelDataset;
use crate::dressing::DressedTriple;
use crate::interactions::{dd_operator, Geometry};
use crate::scalar::{Cx, Scalar};

/// Errors from channel construction, summation, or the oracle.
#[derive(Debug, Error)]
pub enum VdwError {
    #[error("drive frequencies are not set; attach a dataset to the triple first")]
    MissingDriveFrequencies,
    #[error(
        "resonant channel: {kind:?} via ({bra_a}, {bra_b}) has defect {defect:.6} MHz, \
         below threshold {threshold} MHz"
    )]
    ResonantChannel {
        kind: ChannelKind,
        bra_a: String,
        bra_b: String,
        defect: f64,
        threshold: f64,
    },
    #[error("not in the perturbative regime: max coupling/defect ratio {ratio:.3e} > {max:.3e}")]
    NotPerturbative { ratio: f64, max: f64 },
    #[error("eigenvalue tracking ambiguity: overlap {overlap:.3} below {min:.3} at r = {r}")]
    TrackingAmbiguity { overlap: f64, min: f64, r: f64 },
    #[error("oracle fit residual {residual:.3e} exceeds {max:.3e}")]
    FitResidual { residual: f64, max: f64 },
    #[error("linear solve failed during inverse iteration at r = {0}")]
    SolveFailed(f64),
    #[error("oracle needs at least {need} separations, got {got}")]
    TooFewRadii { need: usize, got: usize },
    #[error("zero-finding evaluator returned a non-finite value at ({alpha}, {omega0})")]
    NonFiniteEvaluation { alpha: f64, omega0: f64 },
    #[error(transparent)]
    Dressing(#[from] crate::dressing::DressingError),
    #[error(transparent)]
    Dataset(#[from] crate::dataset::DatasetError),
}

/// Which dressed species a calculation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Control,
    Target,
}

impl Species {
    /// Column of the dressed state in the rotation matrix.
    pub fn column(self) -> usize {
        match self {
            Species::Control => 0,
            Species::Target => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Species::Control => "c",
            Species::Target => "t",
        }
    }
}

/// Perturbative channel kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChannelKind {
    /// Undressed intermediate pair.
    V1,
    /// Dressed intermediate pair.
    V2,
    /// Mixed dressed/undressed intermediate pair.
    V3,
}

/// One second-order channel.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Channel<T: Scalar> {
    pub kind: ChannelKind,
    /// Intermediate pair-state labels.
    pub bra: (String, String),
    /// Initial pair-state label (the species, twice).
    pub ket: (String, String),
    /// Coupling coefficient in MHz um^3 (angular factor folded in, `1/r^3`
    /// left out).
    pub coupling: T,
    /// Full energy defect in MHz, light and Floquet shifts included.
    pub defect: T,
    /// The `n . nu` part of the defect, MHz.
    pub floquet_shift: T,
    /// Amplitude prefactor (products of state coefficients or rotation
    /// entries).
    pub weight: Cx<T>,
    /// Mirror-intermediate count (2 for the mixed kind).
    pub multiplicity: u32,
}

impl<T: Scalar> Channel<T> {
    /// `|weight * coupling|^2 * multiplicity`, the numerator of the
    /// second-order term, in (MHz um^3)^2.
    pub fn numerator(&self) -> T {
        self.weight.norm_sqr() * self.coupling * self.coupling * T::fl(self.multiplicity as f64)
    }
}

/// Channels for one species plus construction warnings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelSet<T: Scalar> {
    pub species: Species,
    pub channels: Vec<Channel<T>>,
    pub warnings: Vec<String>,
}

impl<T: Scalar> ChannelSet<T> {
    /// Largest `|coupling| / r^3` to `|defect|` ratio over contributing
    /// channels at separation `r` (um).
    pub fn max_ratio_at(&self, r: T) -> T {
        let r3 = r * r * r;
        let mut worst = T::zero();
        for ch in &self.channels {
            if ch.numerator() == T::zero() {
                continue;
            }
            worst = worst.max((ch.coupling / r3 / ch.defect).abs());
        }
        worst
    }

    /// Smallest `|defect|` over contributing channels.
    pub fn min_defect(&self) -> T {
        self.channels
            .iter()
            .filter(|ch| ch.numerator() > T::zero())
            .map(|ch| ch.defect.abs())
            .fold(T::fl(f64::INFINITY), |a, b| a.min(b))
    }
}

/// A channel flagged as too close to resonance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResonantFlag<T: Scalar> {
    pub kind: ChannelKind,
    pub bra: (String, String),
    pub defect: T,
}

/// Second-order result with its per-kind breakdown.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct C6Result<T: Scalar> {
    /// Total, GHz um^6, sign convention `V_vdW = -C6 / r^6`.
    pub c6: T,
    pub v1: T,
    pub v2: T,
    pub v3: T,
    pub resonant_flags: Vec<ResonantFlag<T>>,
}

/// Summation configuration.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct C6Config<T: Scalar> {
    /// Channels with `|defect|` below this are resonant, MHz.
    pub resonance_threshold: T,
    /// Sum resonant channels anyway (scans); otherwise they are an error.
    pub override_resonant: bool,
}

impl<T: Scalar> Default for C6Config<T> {
    fn default() -> Self {
        C6Config {
            resonance_threshold: T::one(),
            override_resonant: false,
        }
    }
}

/// Frequencies `(nu_s, nu_0, nu_+) = (0, nu0, nu+)` indexed like the bare
/// triple.
fn frame_frequencies<T: Scalar>(triple: &DressedTriple<T>) -> Result<[T; 3], VdwError> {
    let (Some(nu0), Some(nup)) = (triple.drives.nu0, triple.drives.nuplus) else {
        return Err(VdwError::MissingDriveFrequencies);
    };
    Ok([T::zero(), nu0, nup])
}

/// Enumerate every perturbative channel for one species at angle `theta`.
///
/// `V1`: both atoms reach undressed states `(u, u')` through bare-triple
/// components, shift `nu_sigma + nu_sigma'`. `V2`: the dressed-basis matrix
/// elements of the static pair operator, no shift. `V3`: one atom moves
/// within the dressed manifold while the other leaves, shift
/// `nu_sigma + nu_sigma' - nu_sigma''`, doubled for the mirrored atom order.
pub fn build_channels<T: Scalar>(
    dataset: &LevelDataset<T>,
    triple: &DressedTriple<T>,
    species: Species,
    theta: T,
) -> Result<ChannelSet<T>, VdwError> {
    let nu = frame_frequencies(triple)?;
    let triple_idx = dataset.triple_indices();
    let undressed = dataset.undressed_indices();
    let [s_idx, _, _] = triple_idx;
    let e_s = dataset.state(s_idx).energy;
    let e_rel = |i: usize| dataset.state(i).energy - e_s;

    let cth = theta.cos();
    let angular = T::one() - T::fl(3.0) * cth * cth;
    let cq = |q: i32| if q == 0 { T::one() } else { T::fl(0.5) };

    let d_col = species.column();
    let shifts = triple.shifts();
    let e_species = shifts[d_col];
    let two_e = T::fl(2.0) * e_species;
    let a_coeff = match species {
        Species::Control => triple.c.real_coeffs(),
        Species::Target => triple.t.real_coeffs(),
    };
    let rot = triple.rotation_matrix();
    let dressed_names = ["c", "t", "3"];
    let species_label = species.label().to_string();

    let mut channels = Vec::new();
    let mut warnings = Vec::new();

    // V1: (sigma, u) x (sigma', u') with opposite polarizations.
    for (si, &w) in triple_idx.iter().enumerate() {
        for &u in &undressed {
            let Some((q1, mu1)) = dataset.dipole_between(u, w) else {
                continue;
            };
            for (sj, &w2) in triple_idx.iter().enumerate() {
                for &u2 in &undressed {
                    let Some((q2, mu2)) = dataset.dipole_between(u2, w2) else {
                        continue;
                    };
                    if q1 + q2 != 0 {
                        continue;
                    }
                    let coupling = cq(q1) * mu1 * mu2 * angular;
                    let weight = Complex::new(a_coeff[si] * a_coeff[sj], T::zero());
                    let shift = nu[si] + nu[sj];
                    let defect = two_e + shift - e_rel(u) - e_rel(u2);
                    channels.push(Channel {
                        kind: ChannelKind::V1,
                        bra: (
                            dataset.state(u).label.id.clone(),
                            dataset.state(u2).label.id.clone(),
                        ),
                        ket: (species_label.clone(), species_label.clone()),
                        coupling,
                        defect,
                        floquet_shift: shift,
                        weight,
                        multiplicity: 1,
                    });
                }
            }
        }
    }

    // V2: static pair operator rotated into the dressed basis.
    let (mu0, muplus) = dataset.triple_moments();
    let geometry = Geometry { r: T::one(), theta };
    let v9 = dd_operator(mu0, muplus, geometry)
        .expect("unit separation")
        .matrix;
    let rotated = rotate_pair_operator(&v9, &rot);
    for d1 in 0..3 {
        for d2 in 0..3 {
            if d1 == d_col && d2 == d_col {
                continue;
            }
            let coupling = rotated[(3 * d1 + d2, 3 * d_col + d_col)];
            let defect = two_e - shifts[d1] - shifts[d2];
            channels.push(Channel {
                kind: ChannelKind::V2,
                bra: (dressed_names[d1].into(), dressed_names[d2].into()),
                ket: (species_label.clone(), species_label.clone()),
                coupling,
                defect,
                floquet_shift: T::zero(),
                weight: Complex::new(T::one(), T::zero()),
                multiplicity: 1,
            });
        }
    }

    // V3: atom i moves within the triple (sigma'' -> sigma), atom j leaves
    // to u (through sigma'); mirrored atom order gives multiplicity 2.
    for (si, &wi) in triple_idx.iter().enumerate() {
        for (sk, &wk) in triple_idx.iter().enumerate() {
            let Some((q1, mu1)) = dataset.dipole_between(wk, wi) else {
                continue;
            };
            for (sj, &wj) in triple_idx.iter().enumerate() {
                for &u in &undressed {
                    let Some((q2, mu2)) = dataset.dipole_between(u, wj) else {
                        continue;
                    };
                    if q1 + q2 != 0 {
                        continue;
                    }
                    let coupling = cq(q1) * mu1 * mu2 * angular;
                    let shift = nu[si] + nu[sj] - nu[sk];
                    for d in 0..3 {
                        let weight = Complex::new(
                            rot[(si, d_col)] * rot[(sj, d_col)] * rot[(sk, d)],
                            T::zero(),
                        );
                        let defect = two_e + shift - shifts[d] - e_rel(u);
                        channels.push(Channel {
                            kind: ChannelKind::V3,
                            bra: (
                                dressed_names[d].into(),
                                dataset.state(u).label.id.clone(),
                            ),
                            ket: (species_label.clone(), species_label.clone()),
                            coupling,
                            defect,
                            floquet_shift: shift,
                            weight,
                            multiplicity: 2,
                        });
                    }
                }
            }
        }
    }

    for &u in &undressed {
        let connected = triple_idx
            .iter()
            .any(|&w| dataset.dipole_between(u, w).is_some());
        if !connected {
            warnings.push(format!(
                "state `{}` has no dipole coupling to the dressed triple; it contributes no channel",
                dataset.state(u).label.id
            ));
        }
    }

    Ok(ChannelSet {
        species,
        channels,
        warnings,
    })
}

/// Rotate the 9x9 pair operator into the dressed basis: `(R (x) R)^T V (R (x) R)`.
fn rotate_pair_operator<T: Scalar>(v9: &SMatrix<T, 9, 9>, rot: &Matrix3<T>) -> SMatrix<T, 9, 9> {
    let mut kron = SMatrix::<T, 9, 9>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            for a in 0..3 {
                for b in 0..3 {
                    kron[(3 * i + j, 3 * a + b)] = rot[(i, a)] * rot[(j, b)];
                }
            }
        }
    }
    kron.transpose() * v9 * kron
}

/// Sum the channels into `C6 = -sum |weight coupling|^2 / defect` (GHz um^6),
/// with the per-kind breakdown recorded.
///
/// Channels whose defect magnitude falls below the resonance threshold are
/// flagged; without `override_resonant` the first one is an error.
pub fn c6_second_order<T: Scalar>(
    set: &ChannelSet<T>,
    cfg: &C6Config<T>,
) -> Result<C6Result<T>, VdwError> {
    let mut by_kind = [T::zero(); 3];
    let mut flags = Vec::new();
    for ch in &set.channels {
        let numerator = ch.numerator();
        if numerator == T::zero() {
            continue;
        }
        if ch.defect.abs() < cfg.resonance_threshold {
            if !cfg.override_resonant {
                return Err(VdwError::ResonantChannel {
                    kind: ch.kind,
                    bra_a: ch.bra.0.clone(),
                    bra_b: ch.bra.1.clone(),
                    defect: ch.defect.as_f64(),
                    threshold: cfg.resonance_threshold.as_f64(),
                });
            }
            flags.push(ResonantFlag {
                kind: ch.kind,
                bra: ch.bra.clone(),
                defect: ch.defect,
            });
        }
        let contribution = -numerator / ch.defect * T::fl(1e-3); // MHz -> GHz
        by_kind[match ch.kind {
            ChannelKind::V1 => 0,
            ChannelKind::V2 => 1,
            ChannelKind::V3 => 2,
        }] += contribution;
    }
    Ok(C6Result {
        c6: by_kind[0] + by_kind[1] + by_kind[2],
        v1: by_kind[0],
        v2: by_kind[1],
        v3: by_kind[2],
        resonant_flags: flags,
    })
}

/// Both species' coefficients at one design point.
pub fn c6_pair<T: Scalar>(
    dataset: &LevelDataset<T>,
    triple: &DressedTriple<T>,
    theta: T,
    cfg: &C6Config<T>,
) -> Result<(C6Result<T>, C6Result<T>), VdwError> {
    let c = c6_second_order(&build_channels(dataset, triple, Species::Control, theta)?, cfg)?;
    let t = c6_second_order(&build_channels(dataset, triple, Species::Target, theta)?, cfg)?;
    Ok((c, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{DipoleElement, Roles, StateLabel, StateRecord};
    use crate::dressing::{design_triple_on, DressedState, DriveConfig};
    use crate::scalar::cxr;
    use approx::assert_abs_diff_eq;
    use nalgebra::Vector3;

    fn state(id: &str, l: u32, mj: f64, energy: f64) -> StateRecord<f64> {
        StateRecord {
            label: StateLabel {
                id: id.into(),
                n: 60,
                l,
                j: if l == 0 { 0.5 } else { l as f64 - 0.5 },
                mj,
            },
            energy,
            lifetime: None,
        }
    }

    fn dip(from: &str, to: &str, q: i32, mu: f64) -> DipoleElement<f64> {
        DipoleElement {
            from: from.into(),
            to: to.into(),
            q,
            mu,
        }
    }

    /// Triple plus one undressed pair partner coupled to p0 only.
    fn one_u_dataset() -> LevelDataset<f64> {
        LevelDataset::new(
            vec![
                state("s", 0, -0.5, 0.0),
                state("p0", 1, -0.5, -150_000.0),
                state("pp", 1, 0.5, 210_000.0),
                state("u1", 0, -0.5, -149_500.0),
            ],
            vec![
                dip("s", "p0", 0, 1.0),
                dip("s", "pp", 1, 0.8),
                dip("p0", "u1", 0, 0.7),
            ],
            Roles {
                s_id: "s".into(),
                p0_id: "p0".into(),
                pplus_id: "pp".into(),
            },
        )
        .unwrap()
    }

    fn undressed_triple(dataset: &LevelDataset<f64>) -> DressedTriple<f64> {
        // Zero drives: |c> = |s>, rotation is the identity, nu = omega.
        let (omega0, omegaplus) = dataset.transition_frequencies();
        let unit = |k: usize| {
            let mut raw = Vector3::zeros();
            raw[k] = 1.0;
            raw
        };
        let mk = |k: usize| {
            let raw = unit(k);
            DressedState {
                coeffs: [cxr(raw[0]), cxr(raw[1]), cxr(raw[2])],
                raw: [cxr(raw[0]), cxr(raw[1]), cxr(raw[2])],
                norm: 1.0,
                shift: 0.0,
                lifetime: None,
            }
        };
        DressedTriple {
            c: mk(0),
            t: mk(1),
            third: mk(2),
            rotation: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            drives: DriveConfig {
                omega0: 0.0,
                omegaplus: 0.0,
                delta0: 0.0,
                deltaplus: 0.0,
                nu0: Some(omega0),
                nuplus: Some(omegaplus),
            },
        }
    }

    #[test]
    fn undressed_limit_with_unreachable_partner_is_zero() {
        // |c> = |s> and u1 couples only to p0: no second-order path exists
        // within the model, so every channel numerator vanishes.
        let ds = one_u_dataset();
        let triple = undressed_triple(&ds);
        let set = build_channels(&ds, &triple, Species::Control, std::f64::consts::FRAC_PI_2)
            .unwrap();
        let res = c6_second_order(&set, &C6Config::default()).unwrap();
        assert_eq!(res.c6, 0.0);
        for ch in set.channels.iter().filter(|c| c.numerator() > 0.0) {
            panic!("unexpected contributing channel {:?}", ch.kind);
        }
    }

    #[test]
    fn one_u_pair_channel_enumeration() {
        let ds = one_u_dataset();
        let triple = design_triple_on(&ds, 1.8, 40.0).unwrap();
        let set =
            build_channels(&ds, &triple, Species::Control, std::f64::consts::FRAC_PI_2).unwrap();
        // u1 couples only to p0 (q = 0): exactly one V1 channel has a
        // nonzero dipole product, (sigma, sigma') = (p0, p0).
        let v1: Vec<_> = set
            .channels
            .iter()
            .filter(|c| c.kind == ChannelKind::V1)
            .collect();
        assert_eq!(v1.len(), 1);
        let (nu0, _) = (triple.drives.nu0.unwrap(), triple.drives.nuplus.unwrap());
        assert_abs_diff_eq!(v1[0].floquet_shift, 2.0 * nu0, epsilon = 1e-9);

        // V2: all dressed pairs except (c, c).
        let v2: Vec<_> = set
            .channels
            .iter()
            .filter(|c| c.kind == ChannelKind::V2)
            .collect();
        assert_eq!(v2.len(), 8);

        let t_set =
            build_channels(&ds, &triple, Species::Target, std::f64::consts::FRAC_PI_2).unwrap();
        let v2_t = t_set
            .channels
            .iter()
            .filter(|c| c.kind == ChannelKind::V2 && c.bra == ("t".to_string(), "t".to_string()))
            .count();
        assert_eq!(v2_t, 0, "the (t,t) intermediate is excluded for species t");
    }

    #[test]
    fn breakdown_additivity_and_defect_sign() {
        let ds = one_u_dataset();
        let triple = design_triple_on(&ds, 1.8, 40.0).unwrap();
        let set =
            build_channels(&ds, &triple, Species::Control, std::f64::consts::FRAC_PI_2).unwrap();
        let cfg = C6Config::default();
        let res = c6_second_order(&set, &cfg).unwrap();
        assert_abs_diff_eq!(res.c6, res.v1 + res.v2 + res.v3, epsilon = 1e-18);

        // Flipping one defect sign flips its contribution sign.
        let mut flipped = set.clone();
        let target = flipped
            .channels
            .iter_mut()
            .find(|c| c.kind == ChannelKind::V1)
            .unwrap();
        target.defect = -target.defect;
        let res2 = c6_second_order(&flipped, &cfg).unwrap();
        assert_abs_diff_eq!(res2.v1, -res.v1, epsilon = 1e-18);
    }

    #[test]
    fn resonant_channel_is_an_error_unless_overridden() {
        let ds = one_u_dataset();
        let triple = design_triple_on(&ds, 1.8, 40.0).unwrap();
        let mut set =
            build_channels(&ds, &triple, Species::Control, std::f64::consts::FRAC_PI_2).unwrap();
        set.channels[0].defect = 0.2;
        let err = c6_second_order(&set, &C6Config::default()).unwrap_err();
        assert!(matches!(err, VdwError::ResonantChannel { .. }));
        let res = c6_second_order(
            &set,
            &C6Config {
                resonance_threshold: 1.0,
                override_resonant: true,
            },
        )
        .unwrap();
        assert_eq!(res.resonant_flags.len(), 1);
    }

    /// Triple plus an s-reachable undressed state and a p0-reachable one.
    fn two_u_dataset() -> LevelDataset<f64> {
        LevelDataset::new(
            vec![
                state("s", 0, -0.5, 0.0),
                state("p0", 1, -0.5, -150_000.0),
                state("pp", 1, 0.5, 210_000.0),
                state("u1", 0, -0.5, -149_500.0),
                state("u2", 1, -0.5, -148_700.0),
            ],
            vec![
                dip("s", "p0", 0, 1.0),
                dip("s", "pp", 1, 0.8),
                dip("p0", "u1", 0, 0.7),
                dip("s", "u2", 0, 0.65),
            ],
            Roles {
                s_id: "s".into(),
                p0_id: "p0".into(),
                pplus_id: "pp".into(),
            },
        )
        .unwrap()
    }

    #[test]
    fn undressed_limit_matches_direct_summation() {
        // Independent oracle: textbook second-order sum over every pair
        // intermediate reachable from |ss> with at least one atom outside
        // the triple, using bare couplings and bare defects.
        let ds = two_u_dataset();
        let triple = undressed_triple(&ds);
        let theta = std::f64::consts::FRAC_PI_2;
        let set = build_channels(&ds, &triple, Species::Control, theta).unwrap();
        let res = c6_second_order(&set, &C6Config::default()).unwrap();

        let n = ds.len();
        let s = ds.idx("s").unwrap();
        let angular = 1.0 - 3.0 * theta.cos().powi(2);
        let triple_idx = ds.triple_indices();
        let mut direct = 0.0;
        for x in 0..n {
            for y in 0..n {
                if triple_idx.contains(&x) && triple_idx.contains(&y) {
                    continue;
                }
                let (Some((qa, mua)), Some((qb, mub))) =
                    (ds.dipole_between(s, x), ds.dipole_between(s, y))
                else {
                    continue;
                };
                if qa + qb != 0 {
                    continue;
                }
                let cq = if qa == 0 { 1.0 } else { 0.5 };
                let v = cq * mua * mub * angular;
                let defect = 2.0 * ds.state(s).energy
                    - ds.state(x).energy
                    - ds.state(y).energy;
                direct += -(v * v) / defect * 1e-3;
            }
        }
        assert!(direct != 0.0, "test dataset should produce a nonzero sum");
        assert_abs_diff_eq!(res.c6, direct, epsilon = 1e-12 * direct.abs());
    }
}
