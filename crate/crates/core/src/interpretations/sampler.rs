use std::io::{self, Write};
use std::sync::Arc;

use indexmap::IndexMap;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::hilbert::{ProductSpace, BLANK};
use crate::measurement::apply_step;
use crate::scenarios::Scenario;

use super::kernel::{build_kernel, total_variation, KernelKind, TransportKernel};

/// Kernels of one step, one per fiber of the untouched factors.
struct StepKernels {
    /// Fiber index of every configuration.
    fiber_of: Vec<usize>,
    /// Position of every configuration inside its fiber.
    local_of: Vec<usize>,
    /// Configurations of each fiber, in local order.
    members: Vec<Vec<usize>>,
    kernels: Vec<Option<TransportKernel>>,
}

/// Per-factor record changes across the sampled trajectories.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlipStat {
    pub factor: String,
    /// Trajectories in which the factor left a non-blank label at least once.
    pub trajectories_with_flip: usize,
    pub frequency: f64,
    /// `"from->to"` counts over all steps.
    pub transitions: IndexMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarginalCheck {
    pub step: usize,
    pub factor: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Exact properties of the kernel tables of one step and factor.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelCheck {
    pub step: usize,
    pub factor: String,
    /// Largest `|Σ_i p_i K(j|i) − q_j|` over the fibers.
    pub marginal_error: f64,
    /// Probability that the factor's label changes during the step.
    pub change_probability: f64,
    /// Total variation between the factor's marginals before and after.
    pub total_variation: f64,
}

#[derive(Clone, Debug)]
pub struct SampleReport {
    pub kind: KernelKind,
    pub n: usize,
    pub seed: u64,
    pub space: Arc<ProductSpace>,
    /// Configuration indices per trajectory: the initial one, then one per step.
    pub trajectories: Vec<Vec<usize>>,
    /// Born distribution over configurations at every point of the path.
    pub born: Vec<Vec<f64>>,
    pub flips: Vec<FlipStat>,
    pub marginal_checks: Vec<MarginalCheck>,
    pub kernel_checks: Vec<KernelCheck>,
}

impl SampleReport {
    pub fn flip(&self, factor: &str) -> Option<&FlipStat> {
        self.flips.iter().find(|f| f.factor == factor)
    }

    pub fn marginals_pass(&self) -> bool {
        self.marginal_checks.iter().all(|c| c.passed)
    }

    pub fn max_kernel_error(&self) -> f64 {
        self.kernel_checks
            .iter()
            .map(|c| c.marginal_error)
            .fold(0.0, f64::max)
    }

    pub fn summary_json(&self) -> serde_json::Value {
        json!({
            "kernel": self.kind.to_string(),
            "n": self.n,
            "seed": self.seed,
            "flips": self.flips,
            "marginals_pass": self.marginals_pass(),
            "marginal_checks": self.marginal_checks,
            "kernel_checks": self.kernel_checks,
        })
    }

    /// One JSON object per trajectory: `{"id": n, "path": [[step, {factor: label}], ...]}`.
    pub fn write_log<W: Write>(&self, mut out: W) -> io::Result<()> {
        for (id, path) in self.trajectories.iter().enumerate() {
            let path: Vec<serde_json::Value> = path
                .iter()
                .enumerate()
                .map(|(step, &c)| json!([step, self.config(c)]))
                .collect();
            serde_json::to_writer(&mut out, &json!({ "id": id, "path": path }))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Labels of a configuration keyed by factor, in factor order.
    pub fn config(&self, index: usize) -> IndexMap<String, String> {
        self.space
            .factors()
            .iter()
            .zip(self.space.labels_of(index))
            .map(|(f, l)| (f.label().to_string(), l.to_string()))
            .collect()
    }
}

fn born(amps: &[num_complex::Complex64]) -> Vec<f64> {
    let w: Vec<f64> = amps.iter().map(|a| a.norm_sqr()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn step_kernels(
    space: &ProductSpace,
    touched: &[usize],
    pre: &[f64],
    post: &[f64],
    kind: KernelKind,
) -> Result<StepKernels> {
    let blocks = space.blocks(touched);
    let mut fiber_of = vec![0; space.dimension()];
    let mut local_of = vec![0; space.dimension()];
    let mut members = Vec::new();
    let mut kernels = Vec::new();
    for (f, block) in blocks.iter().enumerate() {
        let idx: Vec<usize> = block.collect();
        for (k, &i) in idx.iter().enumerate() {
            fiber_of[i] = f;
            local_of[i] = k;
        }
        let mass_pre: f64 = idx.iter().map(|&i| pre[i]).sum();
        let mass_post: f64 = idx.iter().map(|&i| post[i]).sum();
        let kernel = if mass_pre > 1e-14 && mass_post > 1e-14 {
            let p: Vec<f64> = idx.iter().map(|&i| pre[i] / mass_pre).collect();
            let q: Vec<f64> = idx.iter().map(|&i| post[i] / mass_post).collect();
            Some(build_kernel(&p, &q, kind)?)
        } else {
            None
        };
        members.push(idx);
        kernels.push(kernel);
    }
    Ok(StepKernels {
        fiber_of,
        local_of,
        members,
        kernels,
    })
}

fn factor_marginal(space: &ProductSpace, position: usize, p: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; space.factor(position).dim()];
    for (i, x) in p.iter().enumerate() {
        m[space.digit(i, position)] += x;
    }
    m
}

/// Samples configuration trajectories along the coherent run of `scenario`.
/// Each step moves the configuration with kernels built between the Born
/// distributions before and after it, conditioned on the factors the step
/// does not touch. Trajectory `i` draws from its own ChaCha stream `i` of
/// `seed`, so results do not depend on the thread count.
pub fn sample_trajectories(scenario: &Scenario, kind: KernelKind, n: usize, seed: u64) -> Result<SampleReport> {
    if scenario
        .measurements()
        .any(|(_, m)| m.collapse || m.selected_outcome.is_some())
    {
        return Err(Error::InvalidScenario(
            "sampling needs a scenario without collapse".into(),
        ));
    }
    let space = scenario.space.clone();
    let mut states = vec![scenario.initial.clone()];
    for step in &scenario.steps {
        let next = apply_step(states.last().expect("nonempty"), step)?;
        states.push(next);
    }
    let born: Vec<Vec<f64>> = states.iter().map(|s| born(s.amplitudes())).collect();

    let mut steps = Vec::new();
    let mut kernel_checks = Vec::new();
    for (s, step) in scenario.steps.iter().enumerate() {
        let touched = space.positions(&step.touched())?;
        let k = step_kernels(&space, &touched, &born[s], &born[s + 1], kind)?;
        for (pos, factor) in space.factors().iter().enumerate() {
            let mut change = 0.0;
            let mut err = 0.0f64;
            for (members, kernel) in k.members.iter().zip(&k.kernels) {
                let Some(kernel) = kernel else { continue };
                let mass: f64 = members.iter().map(|&i| born[s][i]).sum();
                change += mass * kernel.change_probability(|l| space.digit(members[l], pos));
                err = err.max(mass * kernel.marginal_error());
            }
            kernel_checks.push(KernelCheck {
                step: s + 1,
                factor: factor.label().to_string(),
                marginal_error: err,
                change_probability: change,
                total_variation: total_variation(
                    &factor_marginal(&space, pos, &born[s]),
                    &factor_marginal(&space, pos, &born[s + 1]),
                ),
            });
        }
        steps.push(k);
    }

    let trajectories: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|id| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(id as u64);
            let mut c = draw(&born[0], rng.random());
            let mut path = Vec::with_capacity(steps.len() + 1);
            path.push(c);
            for k in &steps {
                let fiber = k.fiber_of[c];
                let u: f64 = rng.random();
                if let Some(kernel) = &k.kernels[fiber] {
                    c = k.members[fiber][kernel.draw(k.local_of[c], u)];
                }
                path.push(c);
            }
            path
        })
        .collect();

    let flips = flip_statistics(&space, &trajectories);
    let tolerance = 4.0 / (n.max(1) as f64).sqrt();
    let mut marginal_checks = Vec::new();
    for (s, b) in born.iter().enumerate() {
        for (pos, factor) in space.factors().iter().enumerate() {
            let mut counts = vec![0usize; factor.dim()];
            for t in &trajectories {
                counts[space.digit(t[s], pos)] += 1;
            }
            let expected = factor_marginal(&space, pos, b);
            let dev = counts
                .iter()
                .zip(&expected)
                .map(|(c, e)| (*c as f64 / n.max(1) as f64 - e).abs())
                .fold(0.0, f64::max);
            marginal_checks.push(MarginalCheck {
                step: s,
                factor: factor.label().to_string(),
                max_deviation: dev,
                tolerance,
                passed: dev <= tolerance,
            });
        }
    }

    Ok(SampleReport {
        kind,
        n,
        seed,
        space,
        trajectories,
        born,
        flips,
        marginal_checks,
        kernel_checks,
    })
}

fn draw(p: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, x) in p.iter().enumerate() {
        if *x <= 0.0 {
            continue;
        }
        acc += x;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

fn flip_statistics(space: &ProductSpace, trajectories: &[Vec<usize>]) -> Vec<FlipStat> {
    space
        .factors()
        .iter()
        .enumerate()
        .map(|(pos, factor)| {
            let mut with_flip = 0;
            let mut transitions: IndexMap<String, usize> = IndexMap::new();
            for t in trajectories {
                let mut flipped = false;
                for w in t.windows(2) {
                    let (a, b) = (space.digit(w[0], pos), space.digit(w[1], pos));
                    if a == b {
                        continue;
                    }
                    let (la, lb) = (&factor.labels()[a], &factor.labels()[b]);
                    *transitions.entry(format!("{la}->{lb}")).or_default() += 1;
                    if la != BLANK {
                        flipped = true;
                    }
                }
                if flipped {
                    with_flip += 1;
                }
            }
            FlipStat {
                factor: factor.label().to_string(),
                trajectories_with_flip: with_flip,
                frequency: with_flip as f64 / trajectories.len().max(1) as f64,
                transitions,
            }
        })
        .collect()
}
