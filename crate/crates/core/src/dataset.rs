//! Rydberg level datasets: states, energies, and transition dipole moments.
//!
//! A [`LevelDataset`] is the single source of atomic-structure input for the
//! rest of the crate. Energies are ordinary frequencies in MHz, lifetimes in
//! ms, and dipole moments are pre-scaled so that a pair coupling evaluates to
//! `mu_a * mu_b * (1 - 3 cos^2 theta) / r^3` in MHz with `r` in um.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

/// Errors raised while loading or validating a dataset.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("failed to read dataset file: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to parse dataset: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate state id `{0}`")]
    DuplicateId(String),
    #[error("state `{id}` has invalid quantum numbers: {detail}")]
    BadQuantumNumbers { id: String, detail: String },
    #[error("state `{id}` has a non-finite energy")]
    NonFiniteEnergy { id: String },
    #[error("state `{id}` has a non-positive or non-finite lifetime")]
    BadLifetime { id: String },
    #[error("dipole element {index} ({from} -> {to}) references unknown state `{id}`")]
    UnknownStateRef {
        index: usize,
        from: String,
        to: String,
        id: String,
    },
    #[error("dipole element {index} ({from} -> {to}) has q = {q}, outside {{-1, 0, +1}}")]
    QOutOfRange {
        index: usize,
        from: String,
        to: String,
        q: i32,
    },
    #[error("dipole element {index} ({from} -> {to}) violates a selection rule: {detail}")]
    SelectionRule {
        index: usize,
        from: String,
        to: String,
        detail: String,
    },
    #[error("dipole element {index} ({from} -> {to}) has a non-finite moment")]
    NonFiniteMu {
        index: usize,
        from: String,
        to: String,
    },
    #[error("dipole elements {first} and {second} define the same transition {from} <-> {to}")]
    DuplicateDipole {
        first: usize,
        second: usize,
        from: String,
        to: String,
    },
    #[error("designated role `{role}` names unknown state `{id}`")]
    MissingRoleState { role: String, id: String },
    #[error("designated triple is not connected as required: {detail}")]
    RoleTripleDisconnected { detail: String },
    #[error("unknown state id `{0}`")]
    UnknownId(String),
}

/// Identity and quantum numbers of one Rydberg state.
///
/// `j` and `mj` are half-integers stored as floats; validation rejects
/// anything that is not an exact multiple of 1/2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateLabel {
    pub id: String,
    pub n: u32,
    pub l: u32,
    pub j: f64,
    pub mj: f64,
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (n={} l={} j={} mj={})",
            self.id, self.n, self.l, self.j, self.mj
        )
    }
}

/// One state entry: label plus rotating-frame-independent energy data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateRecord<T: Scalar> {
    #[serde(flatten)]
    pub label: StateLabel,
    /// Energy in MHz (common offset is irrelevant; only differences enter).
    pub energy: T,
    /// Radiative lifetime in ms, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime: Option<T>,
}

/// Directed transition dipole element `<to| d_q |from> = mu`.
///
/// Storage is single-direction; the reverse element is implied with the
/// physical sign `(-1)^q mu` (real-moment convention).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleElement<T: Scalar> {
    pub from: String,
    pub to: String,
    pub q: i32,
    pub mu: T,
}

/// Which states play the `s`, `p0`, `p+` roles in the dressing scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Roles {
    pub s_id: String,
    pub p0_id: String,
    pub pplus_id: String,
}

/// Validated level dataset. Immutable after load; safe to share across
/// threads for read-only use.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawDataset<T>", into = "RawDataset<T>")]
pub struct LevelDataset<T: Scalar> {
    states: Vec<StateRecord<T>>,
    dipoles: Vec<DipoleElement<T>>,
    roles: Roles,
    #[serde(skip)]
    index: HashMap<String, usize>,
    /// `<to| d_q |from>` lookup keyed by `(from, to)` state indices.
    #[serde(skip)]
    transitions: HashMap<(usize, usize), (i32, T)>,
}

/// Serialized form: exactly the three documented top-level keys.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct RawDataset<T: Scalar> {
    states: Vec<StateRecord<T>>,
    dipoles: Vec<DipoleElement<T>>,
    roles: Roles,
}

impl<T: Scalar> From<LevelDataset<T>> for RawDataset<T> {
    fn from(d: LevelDataset<T>) -> Self {
        RawDataset {
            states: d.states,
            dipoles: d.dipoles,
            roles: d.roles,
        }
    }
}

impl<T: Scalar> TryFrom<RawDataset<T>> for LevelDataset<T> {
    type Error = DatasetError;

    fn try_from(raw: RawDataset<T>) -> Result<Self, Self::Error> {
        LevelDataset::new(raw.states, raw.dipoles, raw.roles)
    }
}

fn is_half_integer(x: f64) -> bool {
    let doubled = 2.0 * x;
    doubled.is_finite() && (doubled - doubled.round()).abs() < 1e-9
}

impl<T: Scalar> LevelDataset<T> {
    /// Build and validate a dataset from its parts.
    pub fn new(
        states: Vec<StateRecord<T>>,
        dipoles: Vec<DipoleElement<T>>,
        roles: Roles,
    ) -> Result<Self, DatasetError> {
        let mut index = HashMap::new();
        for (i, st) in states.iter().enumerate() {
            let lab = &st.label;
            if index.insert(lab.id.clone(), i).is_some() {
                return Err(DatasetError::DuplicateId(lab.id.clone()));
            }
            if !is_half_integer(lab.j) || !is_half_integer(lab.mj) {
                return Err(DatasetError::BadQuantumNumbers {
                    id: lab.id.clone(),
                    detail: "j and mj must be half-integers".into(),
                });
            }
            if lab.mj.abs() > lab.j + 1e-9 {
                return Err(DatasetError::BadQuantumNumbers {
                    id: lab.id.clone(),
                    detail: format!("|mj| = {} exceeds j = {}", lab.mj.abs(), lab.j),
                });
            }
            let l = lab.l as f64;
            if (lab.j - (l - 0.5)).abs() > 1e-9 && (lab.j - (l + 0.5)).abs() > 1e-9 {
                return Err(DatasetError::BadQuantumNumbers {
                    id: lab.id.clone(),
                    detail: format!("j = {} not in {{l - 1/2, l + 1/2}} for l = {}", lab.j, lab.l),
                });
            }
            if !st.energy.as_f64().is_finite() {
                return Err(DatasetError::NonFiniteEnergy { id: lab.id.clone() });
            }
            if let Some(tau) = st.lifetime {
                let tau = tau.as_f64();
                if !tau.is_finite() || tau <= 0.0 {
                    return Err(DatasetError::BadLifetime { id: lab.id.clone() });
                }
            }
        }

        let mut transitions: HashMap<(usize, usize), (i32, T)> = HashMap::new();
        let mut first_seen: HashMap<(usize, usize), usize> = HashMap::new();
        for (k, el) in dipoles.iter().enumerate() {
            let lookup = |id: &str| {
                index
                    .get(id)
                    .copied()
                    .ok_or_else(|| DatasetError::UnknownStateRef {
                        index: k,
                        from: el.from.clone(),
                        to: el.to.clone(),
                        id: id.to_string(),
                    })
            };
            let fi = lookup(&el.from)?;
            let ti = lookup(&el.to)?;
            if el.q.abs() > 1 {
                return Err(DatasetError::QOutOfRange {
                    index: k,
                    from: el.from.clone(),
                    to: el.to.clone(),
                    q: el.q,
                });
            }
            let lf = states[fi].label.l as i64;
            let lt = states[ti].label.l as i64;
            if (lf - lt).abs() != 1 {
                return Err(DatasetError::SelectionRule {
                    index: k,
                    from: el.from.clone(),
                    to: el.to.clone(),
                    detail: format!("|l_from - l_to| = {} != 1", (lf - lt).abs()),
                });
            }
            let expected = states[fi].label.mj + el.q as f64;
            if (states[ti].label.mj - expected).abs() > 1e-9 {
                return Err(DatasetError::SelectionRule {
                    index: k,
                    from: el.from.clone(),
                    to: el.to.clone(),
                    detail: format!(
                        "mj_to = {} but mj_from + q = {}",
                        states[ti].label.mj, expected
                    ),
                });
            }
            if !el.mu.as_f64().is_finite() {
                return Err(DatasetError::NonFiniteMu {
                    index: k,
                    from: el.from.clone(),
                    to: el.to.clone(),
                });
            }
            for key in [(fi, ti), (ti, fi)] {
                if let Some(&first) = first_seen.get(&key) {
                    return Err(DatasetError::DuplicateDipole {
                        first,
                        second: k,
                        from: el.from.clone(),
                        to: el.to.clone(),
                    });
                }
            }
            first_seen.insert((fi, ti), k);
            first_seen.insert((ti, fi), k);
            // <to| d_q |from> = mu, and the implied reverse
            // <from| d_{-q} |to> = (-1)^q mu for real moments.
            transitions.insert((fi, ti), (el.q, el.mu));
            let sign = if el.q == 0 { T::one() } else { -T::one() };
            transitions.insert((ti, fi), (-el.q, sign * el.mu));
        }

        let ds = LevelDataset {
            states,
            dipoles,
            roles,
            index,
            transitions,
        };

        for (role, id) in [
            ("s_id", &ds.roles.s_id),
            ("p0_id", &ds.roles.p0_id),
            ("pplus_id", &ds.roles.pplus_id),
        ] {
            if !ds.index.contains_key(id) {
                return Err(DatasetError::MissingRoleState {
                    role: role.into(),
                    id: id.clone(),
                });
            }
        }
        let s = ds.idx(&ds.roles.s_id).unwrap();
        let p0 = ds.idx(&ds.roles.p0_id).unwrap();
        let pp = ds.idx(&ds.roles.pplus_id).unwrap();
        match ds.transitions.get(&(s, p0)) {
            Some(&(0, _)) => {}
            Some(&(q, _)) => {
                return Err(DatasetError::RoleTripleDisconnected {
                    detail: format!("s <-> p0 element has q = {q}, expected q = 0"),
                })
            }
            None => {
                return Err(DatasetError::RoleTripleDisconnected {
                    detail: "no dipole element connects s and p0".into(),
                })
            }
        }
        match ds.transitions.get(&(s, pp)) {
            Some(&(1, _)) => {}
            Some(&(q, _)) => {
                return Err(DatasetError::RoleTripleDisconnected {
                    detail: format!("s <-> p+ element has q = {q}, expected q = +1"),
                })
            }
            None => {
                return Err(DatasetError::RoleTripleDisconnected {
                    detail: "no dipole element connects s and p+".into(),
                })
            }
        }

        Ok(ds)
    }

    /// Load a dataset from a JSON file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError>
    where
        T: serde::de::DeserializeOwned,
    {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Parse a dataset from JSON text.
    pub fn from_json(text: &str) -> Result<Self, DatasetError>
    where
        T: serde::de::DeserializeOwned,
    {
        let raw: RawDataset<T> = serde_json::from_str(text)?;
        Self::try_from(raw)
    }

    /// Serialize back to JSON (round-trips through [`Self::from_json`]).
    pub fn to_json(&self) -> String
    where
        T: serde::Serialize,
    {
        serde_json::to_string_pretty(&RawDataset::from(self.clone())).expect("serializable")
    }

    pub fn states(&self) -> &[StateRecord<T>] {
        &self.states
    }

    pub fn dipoles(&self) -> &[DipoleElement<T>] {
        &self.dipoles
    }

    pub fn roles(&self) -> &Roles {
        &self.roles
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of a state id.
    pub fn idx(&self, id: &str) -> Result<usize, DatasetError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| DatasetError::UnknownId(id.to_string()))
    }

    pub fn state(&self, i: usize) -> &StateRecord<T> {
        &self.states[i]
    }

    pub fn energy(&self, id: &str) -> Result<T, DatasetError> {
        Ok(self.states[self.idx(id)?].energy)
    }

    /// `<to| d_q |from>` with the implied-reverse sign convention; `None`
    /// when the two states are not dipole-connected.
    pub fn dipole_between(&self, from: usize, to: usize) -> Option<(i32, T)> {
        self.transitions.get(&(from, to)).copied()
    }

    /// Indices of the designated `(s, p0, p+)` triple.
    pub fn triple_indices(&self) -> [usize; 3] {
        [
            self.idx(&self.roles.s_id).unwrap(),
            self.idx(&self.roles.p0_id).unwrap(),
            self.idx(&self.roles.pplus_id).unwrap(),
        ]
    }

    /// Indices of every state outside the designated triple.
    pub fn undressed_indices(&self) -> Vec<usize> {
        let triple = self.triple_indices();
        (0..self.states.len())
            .filter(|i| !triple.contains(i))
            .collect()
    }

    /// Dipole moments `(mu0, muplus)` of the designated triple.
    pub fn triple_moments(&self) -> (T, T) {
        let [s, p0, pp] = self.triple_indices();
        let (_, mu0) = self.dipole_between(s, p0).expect("validated s <-> p0");
        let (_, mup) = self.dipole_between(s, pp).expect("validated s <-> p+");
        (mu0, mup)
    }

    /// Bare transition frequencies `(omega0, omegaplus)` of the two drives,
    /// in MHz: `E(p0) - E(s)` and `E(p+) - E(s)`.
    pub fn transition_frequencies(&self) -> (T, T) {
        let [s, p0, pp] = self.triple_indices();
        (
            self.states[p0].energy - self.states[s].energy,
            self.states[pp].energy - self.states[s].energy,
        )
    }

    /// Two-atom energy defect `(E_a + E_b) - (E_a2 + E_b2)` in MHz.
    pub fn pair_defect(&self, a: &str, b: &str, a2: &str, b2: &str) -> Result<T, DatasetError> {
        let e = |id: &str| self.energy(id);
        Ok((e(a)? + e(b)?) - (e(a2)? + e(b2)?))
    }
}
