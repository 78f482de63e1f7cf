//! Interpretation policies: agent-level GRW collapse, and a discrete
//! pointer-configuration ("beable") dynamics that keeps Born marginals.

mod kernel;
mod sampler;

use crate::error::Result;
use crate::exact::Surd;
use crate::hilbert::StateVector;
use crate::measurement::ProtocolStep;
use crate::scenarios::{build_fr_scenario, FrOptions, Scenario};

pub use kernel::{build_kernel, total_variation, KernelKind, TransportKernel};
pub use sampler::{sample_trajectories, FlipStat, KernelCheck, MarginalCheck, SampleReport};

/// Every recorded measurement collapses at its own time; postselections are
/// kept.
pub fn grw_scenario(base: &Scenario) -> Scenario {
    let mut s = base.clone();
    for step in &mut s.steps {
        if let ProtocolStep::Measure(m) = step {
            if m.recorder.is_some() {
                m.collapse = true;
            }
        }
    }
    s
}

/// F̄ has read tails and sent the transverse spin, F has measured it; then
/// W̄ and W measure coherently. W̄'s measurement moves half of F̄'s record
/// from tails to heads.
pub fn beable_flip_scenario() -> Result<Scenario> {
    let fr = build_fr_scenario(&FrOptions::default())?;
    let space = fr.space.clone();
    let half = Surd::sqrt(&num_rational::BigRational::new(1.into(), 2.into()))?;
    let initial = StateVector::superpose(
        space.clone(),
        &[
            (half.clone(), vec!["tails", "tails", "down", "down", "blank", "blank"]),
            (half, vec!["tails", "tails", "up", "up", "blank", "blank"]),
        ],
    )?;
    let steps: Vec<ProtocolStep> = fr
        .steps
        .iter()
        .filter(|s| {
            s.measurement()
                .is_some_and(|m| matches!(m.variable(), "Wbar" | "W"))
        })
        .cloned()
        .collect();
    let mut s = Scenario::new("Fbar read tails, then Wbar and W", initial, steps, Vec::new())?;
    s.report = Some(vec!["Wbar".into(), "W".into()]);
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::Agent;

    #[test]
    fn grw_is_idempotent_and_matches_all_collapse() {
        let base = build_fr_scenario(&FrOptions::default()).unwrap();
        let grw = grw_scenario(&base);
        let all = build_fr_scenario(&FrOptions::default().collapse(&Agent::ALL)).unwrap();
        assert_eq!(grw.steps, all.steps);
        assert_eq!(grw_scenario(&grw).steps, grw.steps);
    }
}
