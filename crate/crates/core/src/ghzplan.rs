//! Square-lattice GHZ growth scheduling.
//!
//! Growth proceeds on the diamond `|x| + |y| <= s`: step 1 uses the origin
//! as the single control and its four nearest neighbors as targets; each
//! later step promotes the previous targets to controls and targets their
//! outward nearest neighbors. Blockade statistics come from geometric brute
//! force over the step's full control set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::errormodel::{blockade_ratio_sum, optimal_step_error, ErrorModelError, ErrorParams};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum GhzPlanError {
    #[error("step count must be >= 1, got {0}")]
    BadStepCount(usize),
    #[error("asymptotic extrapolation needs max_steps >= 10, got {0}")]
    TooFewSteps(usize),
    #[error(transparent)]
    ErrorModel(#[from] ErrorModelError),
}

/// One growth step: geometry plus its target-averaged blockade statistic.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthStep<T: Scalar> {
    /// 1-based step number.
    pub index: usize,
    /// Control sites (the ring `|x| + |y| = index - 1`).
    pub controls: Vec<[i64; 2]>,
    /// Target sites (the ring `|x| + |y| = index`).
    pub targets: Vec<[i64; 2]>,
    pub n_c: usize,
    pub n_t: usize,
    /// `<(V_nn / V_b)^2>` averaged over this step's targets.
    pub mean_ratio: T,
}

/// Growth schedule with per-step and cumulative error estimates.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthPlan<T: Scalar> {
    pub steps: Vec<GrowthStep<T>>,
    pub per_step_eps: Vec<T>,
    pub cumulative_eps: Vec<T>,
    /// Optimizing Rabi frequency per step, ordinary MHz.
    pub omega_opt: Vec<T>,
    pub params: ErrorParams<T>,
    pub combination: Combination,
    /// Cumulative totals under the other combination rule, for comparison.
    pub alternative_cumulative: Vec<T>,
    /// Convention notes emitted with every plan.
    pub notes: Vec<String>,
}

/// How per-step errors combine into a cumulative figure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combination {
    /// Plain sum (small-error regime).
    Sum,
    /// `1 - prod(1 - eps_s)`.
    Product,
}

/// Lattice points on the diamond ring `|x| + |y| = s`.
fn ring(s: usize) -> Vec<[i64; 2]> {
    if s == 0 {
        return vec![[0, 0]];
    }
    let s = s as i64;
    let mut pts = Vec::with_capacity(4 * s as usize);
    for x in -s..=s {
        let rem = s - x.abs();
        if rem == 0 {
            pts.push([x, 0]);
        } else {
            pts.push([x, rem]);
            pts.push([x, -rem]);
        }
    }
    pts.sort();
    pts
}

/// Number of lattice points with `|x| + |y| <= k`: `2 k^2 + 2 k + 1`.
pub fn ghz_size(k: usize) -> usize {
    2 * k * k + 2 * k + 1
}

fn mean_ratio_of<T: Scalar>(controls: &[[i64; 2]], targets: &[[i64; 2]]) -> T {
    let cpos: Vec<[T; 2]> = controls
        .iter()
        .map(|p| [T::fl(p[0] as f64), T::fl(p[1] as f64)])
        .collect();
    let mut acc = T::zero();
    for t in targets {
        let tp = [T::fl(t[0] as f64), T::fl(t[1] as f64)];
        let (sum, _) = blockade_ratio_sum(&cpos, tp, T::one());
        acc += T::one() / (sum * sum);
    }
    acc / T::fl(targets.len() as f64)
}

/// Generate the first `k` growth steps with their blockade statistics.
pub fn plan_steps<T: Scalar>(k: usize) -> Result<Vec<GrowthStep<T>>, GhzPlanError> {
    if k == 0 {
        return Err(GhzPlanError::BadStepCount(0));
    }
    let mut steps = Vec::with_capacity(k);
    for s in 1..=k {
        let controls = ring(s - 1);
        let targets = ring(s);
        let mean_ratio = mean_ratio_of::<T>(&controls, &targets);
        steps.push(GrowthStep {
            index: s,
            n_c: controls.len(),
            n_t: targets.len(),
            controls,
            targets,
            mean_ratio,
        });
    }
    Ok(steps)
}

/// Target-averaged `<(V_nn / V_b)^2>` of one step.
pub fn mean_ratio<T: Scalar>(step: &GrowthStep<T>) -> T {
    mean_ratio_of(&step.controls, &step.targets)
}

/// Richardson extrapolation of the step statistic to the large-step limit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AsymptoticRatio<T: Scalar> {
    /// Extrapolated `<(V_nn / V_b)^2>` limit.
    pub limit: T,
    /// Steps sampled for the extrapolation.
    pub samples: Vec<(usize, T)>,
    pub converged: bool,
}

/// Extrapolate `mean_ratio(s)` to `s -> infinity` using Richardson steps on
/// the `1/s` expansion over `max_steps`, `max_steps/2`, `max_steps/4`.
pub fn asymptotic_ratio<T: Scalar>(max_steps: usize) -> Result<AsymptoticRatio<T>, GhzPlanError> {
    if max_steps < 10 {
        return Err(GhzPlanError::TooFewSteps(max_steps));
    }
    let s2 = max_steps / 2;
    let s1 = max_steps / 4;
    let eval = |s: usize| -> T {
        let controls = ring(s - 1);
        let targets = ring(s);
        mean_ratio_of(&controls, &targets)
    };
    let m1 = eval(s1);
    let m2 = eval(s2);
    let m3 = eval(max_steps);
    // First-order eliminations of the 1/s term, then one second-order step.
    let l_a = T::fl(2.0) * m2 - m1;
    let l_b = T::fl(2.0) * m3 - m2;
    let limit = (T::fl(4.0) * l_b - l_a) / T::fl(3.0);
    let converged = (l_b - l_a).abs() < T::fl(0.02) * limit.abs();
    Ok(AsymptoticRatio {
        limit,
        samples: vec![(s1, m1), (s2, m2), (max_steps, m3)],
        converged,
    })
}

/// Build the full plan: per-step optima from the closed form with
/// `v = v_nn / sqrt(mean_ratio)`, combined under the chosen rule.
pub fn plan_errors<T: Scalar>(
    k: usize,
    v_nn: T,
    tau: T,
    combination: Combination,
) -> Result<GrowthPlan<T>, GhzPlanError> {
    let steps = plan_steps::<T>(k)?;
    let mut per_step = Vec::with_capacity(k);
    let mut omegas = Vec::with_capacity(k);
    for step in &steps {
        let v = v_nn / step.mean_ratio.sqrt();
        let (eps, omega) = optimal_step_error(step.n_c, step.n_t, tau, v)?;
        per_step.push(eps);
        omegas.push(omega);
    }
    let accumulate = |rule: Combination| -> Vec<T> {
        let mut out = Vec::with_capacity(k);
        let mut sum = T::zero();
        let mut survival = T::one();
        for &eps in &per_step {
            sum += eps;
            survival *= T::one() - eps;
            out.push(match rule {
                Combination::Sum => sum,
                Combination::Product => T::one() - survival,
            });
        }
        out
    };
    let cumulative = accumulate(combination);
    let alternative = accumulate(match combination {
        Combination::Sum => Combination::Product,
        Combination::Product => Combination::Sum,
    });
    let notes = vec![
        "per-step errors use the closed-form optimum with v = v_nn / sqrt(mean_ratio); \
         each step re-optimizes its own Rabi frequency"
            .to_string(),
        format!(
            "cumulative column uses the `{}` rule; `alternative_cumulative` reports the \
             other rule, since the two bracket the cross-step correlations this model ignores",
            match combination {
                Combination::Sum => "sum",
                Combination::Product => "product",
            }
        ),
    ];
    Ok(GrowthPlan {
        steps,
        per_step_eps: per_step,
        cumulative_eps: cumulative,
        omega_opt: omegas,
        params: ErrorParams::new(v_nn, tau),
        combination,
        alternative_cumulative: alternative,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ring_counts() {
        assert_eq!(ring(0).len(), 1);
        assert_eq!(ring(1).len(), 4);
        assert_eq!(ring(2).len(), 8);
        assert_eq!(ring(3).len(), 12);
    }

    #[test]
    fn step_geometry_and_sizes() {
        let steps = plan_steps::<f64>(3).unwrap();
        assert_eq!((steps[0].n_c, steps[0].n_t), (1, 4));
        assert_eq!((steps[1].n_c, steps[1].n_t), (4, 8));
        assert_eq!((steps[2].n_c, steps[2].n_t), (8, 12));
        // GHZ sizes 5, 13, 25 after steps 1..3.
        let mut size = 1;
        for (step, expect) in steps.iter().zip([5usize, 13, 25]) {
            size += step.n_t;
            assert_eq!(size, expect);
            assert_eq!(size, ghz_size(step.index));
        }
        // Controls of step s+1 are exactly the targets of step s, and no
        // target ever lies inside the already-grown set.
        assert_eq!(steps[1].controls, steps[0].targets);
        assert_eq!(steps[2].controls, steps[1].targets);
        for step in &steps {
            for t in &step.targets {
                let inside = (t[0].abs() + t[1].abs()) as usize <= step.index - 1;
                assert!(!inside, "target {t:?} inside the grown set at step {}", step.index);
            }
        }
        assert_eq!(ghz_size(6), 85);
    }

    #[test]
    fn step_sets_have_square_symmetry() {
        let steps = plan_steps::<f64>(4).unwrap();
        for step in &steps {
            for set in [&step.controls, &step.targets] {
                for &[x, y] in set {
                    assert!(set.contains(&[-y, x]), "missing rotation of ({x},{y})");
                    assert!(set.contains(&[x, -y]), "missing reflection of ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn mean_ratio_first_steps() {
        let steps = plan_steps::<f64>(3).unwrap();
        assert_abs_diff_eq!(steps[0].mean_ratio, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(steps[1].mean_ratio, 0.4435, epsilon = 5e-4);
        // Brute-force geometric value for the third ring.
        assert_abs_diff_eq!(steps[2].mean_ratio, 0.3397, epsilon = 5e-4);
    }

    #[test]
    fn mean_ratio_strictly_decreasing() {
        let steps = plan_steps::<f64>(12).unwrap();
        for pair in steps.windows(2) {
            assert!(pair[1].mean_ratio < pair[0].mean_ratio);
        }
    }

    #[test]
    fn asymptotic_limit() {
        let res = asymptotic_ratio::<f64>(40).unwrap();
        assert!(res.converged);
        assert_abs_diff_eq!(res.limit, 0.196, epsilon = 5e-3);
        // Step values stay above the extrapolated limit.
        for &(_, m) in &res.samples {
            assert!(m > res.limit);
        }
    }

    #[test]
    fn plan_errors_reference_scale() {
        let plan = plan_errors::<f64>(3, 2.7, 0.44, Combination::Sum).unwrap();
        assert_abs_diff_eq!(plan.per_step_eps[0], 0.0196, epsilon = 2e-4);
        // Cumulative is monotone and additive-consistent under `sum`.
        for (s, pair) in plan.cumulative_eps.windows(2).enumerate() {
            assert!(pair[1] >= pair[0]);
            assert_abs_diff_eq!(
                pair[1] - pair[0],
                plan.per_step_eps[s + 1],
                epsilon = 1e-15
            );
        }
        assert!(!plan.notes.is_empty());

        // tau -> infinity: every step error vanishes.
        let quiet = plan_errors::<f64>(3, 2.7, 1e9, Combination::Sum).unwrap();
        assert!(quiet.cumulative_eps[2] < 1e-6);
    }
}
