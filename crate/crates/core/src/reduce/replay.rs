use crate::net::{Net, NetError};

use super::{ReduceError, ReductionStep, RuleKind};

fn step_error(step: usize) -> impl Fn(NetError) -> ReduceError {
    move |e| ReduceError::Replay {
        step,
        message: e.to_string(),
    }
}

/// Applies `steps` to `initial`, returning every intermediate net: element
/// `i` is the net before step `i`, the last one is the residual net.
pub fn replay(initial: &Net, steps: &[ReductionStep]) -> Result<Vec<Net>, ReduceError> {
    let mut nets = Vec::with_capacity(steps.len() + 1);
    let mut net = initial.clone();
    nets.push(net.clone());
    for (i, s) in steps.iter().enumerate() {
        let err = step_error(i);
        match s.kind {
            RuleKind::T | RuleKind::D => {
                let ts = s
                    .removed_transitions
                    .iter()
                    .map(|t| net.transition(t))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(&err)?;
                net.remove_transitions(&ts);
            }
            RuleKind::R => {
                let ps = s
                    .removed_places
                    .iter()
                    .map(|p| net.place(p))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(&err)?;
                net.remove_places(&ps);
            }
            RuleKind::A => {
                let parts = s
                    .removed_places
                    .iter()
                    .map(|p| net.place(p))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(&err)?;
                let fresh = s.introduced_place.as_deref().ok_or_else(|| ReduceError::Replay {
                    step: i,
                    message: "agglomeration without a fresh place".into(),
                })?;
                if net.has_name(fresh) {
                    return Err(ReduceError::Replay {
                        step: i,
                        message: format!("fresh place `{fresh}` already exists"),
                    });
                }
                net.merge_places(&parts, fresh);
            }
            RuleKind::L => {
                let pname = s.removed_places.first().ok_or_else(|| ReduceError::Replay {
                    step: i,
                    message: "source-sink step without a place".into(),
                })?;
                let p = net.place(pname).map_err(&err)?;
                let ts = if s.removed_transitions.is_empty() {
                    net.adjacency().consumers[p.index()].clone()
                } else {
                    s.removed_transitions
                        .iter()
                        .map(|t| net.transition(t))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(&err)?
                };
                net.remove_transitions(&ts);
                let p = net.place(pname).map_err(&err)?;
                net.remove_places(&[p]);
            }
            RuleKind::F => {
                let tname = s.removed_transitions.first().ok_or_else(|| ReduceError::Replay {
                    step: i,
                    message: "fire-once step without a transition".into(),
                })?;
                let t = net.transition(tname).map_err(&err)?;
                let m = net.fire(&net.initial_marking(), t).map_err(&err)?;
                net.set_initial_marking(&m);
                net.remove_transitions(&[t]);
            }
        }
        nets.push(net.clone());
    }
    Ok(nets)
}
