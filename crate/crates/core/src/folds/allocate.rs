use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::instances::{expanded_instances, node_instances};
use super::{instance_set, panel_eval_window, InstanceSet, Window};
use crate::graph::NuisanceGraph;
use crate::spec::MethodSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Allocation {
    #[default]
    Overlap,
    Disjoint,
    Independence,
}

impl Allocation {
    pub const ALL: [Allocation; 3] = [Allocation::Overlap, Allocation::Disjoint, Allocation::Independence];
}

impl fmt::Display for Allocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Allocation::Overlap => "overlap",
            Allocation::Disjoint => "disjoint",
            Allocation::Independence => "independence",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AllocationError {
    #[error("panel {p} out of range for K = {k}")]
    PanelOutOfRange { p: usize, k: usize },
    #[error("eval_fold {eval_fold} must be smaller than K = {k}")]
    EvalTooWide { eval_fold: usize, k: usize },
    #[error("instance {instance} needs {width} training folds but only {available} are outside the evaluation window")]
    TooWide { instance: String, width: usize, available: usize },
    #[error("packing needs {required} training folds but only {available} are outside the evaluation window")]
    Infeasible { required: usize, available: usize },
}

/// Training windows for one panel, aligned with the instance order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PanelAllocation {
    pub panel: usize,
    pub eval_window: Window,
    pub training: Vec<Window>,
}

/// Assigns training windows to `instances` for panel `p`.
pub fn allocate(
    mode: Allocation,
    instances: &InstanceSet,
    p: usize,
    eval_fold: usize,
    k: usize,
) -> Result<PanelAllocation, AllocationError> {
    let eval_window = panel_eval_window(p, eval_fold, k)?;
    let available = k - eval_fold;
    let first = p + eval_fold;
    let training = match mode {
        Allocation::Overlap => instances
            .instances
            .iter()
            .map(|inst| {
                if inst.train_fold > available {
                    Err(AllocationError::TooWide {
                        instance: inst.label(),
                        width: inst.train_fold,
                        available,
                    })
                } else {
                    Ok(Window::new(first, inst.train_fold, k))
                }
            })
            .collect::<Result<Vec<_>, _>>()?,
        Allocation::Disjoint | Allocation::Independence => {
            let required: usize = instances.widths().iter().sum();
            if required > available {
                return Err(AllocationError::Infeasible { required, available });
            }
            let mut offset = first;
            instances
                .instances
                .iter()
                .map(|inst| {
                    let w = Window::new(offset, inst.train_fold, k);
                    offset += inst.train_fold;
                    w
                })
                .collect()
        }
    };
    Ok(PanelAllocation {
        panel: p,
        eval_window,
        training,
    })
}

pub(crate) fn required_folds(
    graph: &NuisanceGraph<'_>,
    target_args: &[String],
    mode: Allocation,
    eval_fold: usize,
) -> usize {
    let widths = match mode {
        Allocation::Overlap => {
            return eval_fold
                + node_instances(graph, target_args)
                    .widths()
                    .into_iter()
                    .max()
                    .unwrap_or(0)
        }
        Allocation::Disjoint => node_instances(graph, target_args).widths(),
        Allocation::Independence => expanded_instances(graph, target_args).widths(),
    };
    eval_fold + widths.iter().sum::<usize>()
}

/// Smallest `K` for which the method's allocation mode can be packed.
pub fn min_folds_required(m: &MethodSpec) -> usize {
    required_folds(
        &NuisanceGraph::resolve(m.nuisances()),
        m.target().args(),
        m.allocation(),
        m.eval_fold(),
    )
}

/// Full panel schedule of one repetition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Schedule {
    pub instances: InstanceSet,
    pub panels: Vec<PanelAllocation>,
}

pub fn schedule(m: &MethodSpec) -> Result<Schedule, AllocationError> {
    let instances = instance_set(m);
    let panels = (0..m.folds())
        .map(|p| allocate(m.allocation(), &instances, p, m.eval_fold(), m.folds()))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Schedule { instances, panels })
}
