//! Finite sequences `p_n = p_0 + 2^{-n} v` converging to an anchor.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::certificate::{Sequence, Step};
use crate::geometry::{normalized, AxisBox, Point};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SequenceSpec {
    /// Steps `n = 1..=depth`.
    pub depth: usize,
    /// Seeded random unit directions added to `± e_i`.
    pub random_directions: usize,
    pub seed: u64,
    /// Sequences with fewer in-bounds steps are dropped.
    pub min_steps: usize,
}

impl Default for SequenceSpec {
    fn default() -> Self {
        Self {
            depth: 12,
            random_directions: 4,
            seed: 42,
            min_steps: 4,
        }
    }
}

/// `± e_i` for each active axis, then seeded random unit directions supported
/// on the active axes, with near-duplicates removed.
pub fn unit_directions(dim: usize, axes: &[usize], spec: &SequenceSpec) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::new();
    let push = |v: Vec<f64>, out: &mut Vec<Vec<f64>>| {
        let dup = out
            .iter()
            .any(|u| u.iter().zip(&v).all(|(a, b)| (a - b).abs() < 1e-9));
        if !dup {
            out.push(v);
        }
    };
    for &i in axes {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; dim];
            e[i] = s;
            push(e, &mut out);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    for _ in 0..spec.random_directions {
        let mut v = vec![0.0; dim];
        for &i in axes {
            v[i] = StandardNormal.sample(&mut rng);
        }
        if let Some(u) = normalized(&v) {
            push(u, &mut out);
        }
    }
    out
}

fn build(
    anchor: &[f64],
    bounds: &AxisBox,
    spec: &SequenceSpec,
    dirs: &[Vec<f64>],
    eps: impl Fn(usize) -> Option<f64>,
    id0: usize,
) -> Vec<Sequence> {
    let mut out = Vec::new();
    for v in dirs {
        let steps: Vec<Step> = (1..=spec.depth)
            .filter_map(|n| {
                let s = 0.5f64.powi(n as i32);
                let p: Vec<f64> = anchor.iter().zip(v).map(|(a, d)| a + s * d).collect();
                bounds.contains(&p, 0.0).then(|| Step {
                    n,
                    param: Point::new(p),
                    epsilon: eps(n),
                })
            })
            .collect();
        if steps.len() >= spec.min_steps {
            out.push(Sequence {
                id: id0 + out.len(),
                direction: v.clone(),
                steps,
            });
        }
    }
    out
}

/// Sequences in every direction of the parameter space.
pub fn parameter_sequences(anchor: &[f64], bounds: &AxisBox, spec: &SequenceSpec) -> Vec<Sequence> {
    let axes: Vec<usize> = (0..anchor.len()).collect();
    axis_sequences(anchor, bounds, spec, &axes)
}

/// Sequences that move only the coordinates listed in `axes`.
pub fn axis_sequences(
    anchor: &[f64],
    bounds: &AxisBox,
    spec: &SequenceSpec,
    axes: &[usize],
) -> Vec<Sequence> {
    let dirs = unit_directions(anchor.len(), axes, spec);
    build(anchor, bounds, spec, &dirs, |_| None, 0)
}

/// Joint sequences `(lambda_n, eps_n)` with `eps_n = eps0 (1 ± 2^{-n})`,
/// crossed with every parameter direction and with the fixed parameter.
pub fn approx_sequences(
    anchor: &[f64],
    eps0: f64,
    bounds: &AxisBox,
    spec: &SequenceSpec,
) -> Vec<Sequence> {
    let axes: Vec<usize> = (0..anchor.len()).collect();
    let mut dirs = vec![vec![0.0; anchor.len()]];
    dirs.extend(unit_directions(anchor.len(), &axes, spec));
    let mut out = Vec::new();
    for sign in [1.0, -1.0] {
        let eps = |n: usize| Some(eps0 * (1.0 + sign * 0.5f64.powi(n as i32)));
        let next = build(anchor, bounds, spec, &dirs, eps, out.len());
        out.extend(next);
    }
    out
}
