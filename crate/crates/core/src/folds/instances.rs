use indexmap::IndexMap;
use serde::Serialize;

use super::Allocation;
use crate::graph::NuisanceGraph;
use crate::spec::{MethodSpec, NuisanceSpec};

/// Edge from a consumer to the instance that supplies one of its inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceDep {
    /// Name under which the consumer receives the predictions.
    pub name: String,
    /// Index into [`InstanceSet::instances`].
    pub instance: usize,
}

/// One fitted copy of a nuisance node within a panel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NuisanceInstance {
    /// Nuisance name (first name under which the node was registered).
    pub node: String,
    /// Consumers from the target down to this instance's direct consumer.
    /// Empty when instances are graph nodes rather than tree copies.
    pub path: Vec<String>,
    pub train_fold: usize,
    pub deps: Vec<InstanceDep>,
}

impl NuisanceInstance {
    /// `node` for graph nodes, `node@target/...` for tree copies.
    pub fn label(&self) -> String {
        if self.path.is_empty() {
            self.node.clone()
        } else {
            format!("{}@{}", self.node, self.path.join("/"))
        }
    }
}

/// Instances in fitting order: every instance appears after its deps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceSet {
    pub instances: Vec<NuisanceInstance>,
    /// Target argument names bound to the instance supplying them.
    pub roots: Vec<InstanceDep>,
}

impl InstanceSet {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn widths(&self) -> Vec<usize> {
        self.instances.iter().map(|i| i.train_fold).collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.instances.iter().map(NuisanceInstance::label).collect()
    }
}

pub(crate) const TARGET: &str = "target";

/// One instance per graph node, deps first, in depth-first order over the
/// target arguments.
pub(crate) fn node_instances(graph: &NuisanceGraph<'_>, target_args: &[String]) -> InstanceSet {
    fn visit(graph: &NuisanceGraph<'_>, i: usize, slot: &mut [Option<usize>], on_path: &mut [bool], out: &mut Vec<NuisanceInstance>) -> Option<usize> {
        if let Some(s) = slot[i] {
            return Some(s);
        }
        if std::mem::replace(&mut on_path[i], true) {
            return None;
        }
        let node = &graph.nodes[i];
        let deps = node
            .deps
            .iter()
            .filter_map(|&(name, j)| {
                visit(graph, j, slot, on_path, out).map(|instance| InstanceDep {
                    name: name.to_string(),
                    instance,
                })
            })
            .collect();
        on_path[i] = false;
        out.push(NuisanceInstance {
            node: node.name.to_string(),
            path: Vec::new(),
            train_fold: node.spec.train_fold(),
            deps,
        });
        slot[i] = Some(out.len() - 1);
        slot[i]
    }

    let mut slot = vec![None; graph.nodes.len()];
    let mut on_path = vec![false; graph.nodes.len()];
    let mut instances = Vec::new();
    let mut roots = Vec::new();
    for arg in target_args {
        if let Some(i) = graph.node_of(arg) {
            if let Some(instance) = visit(graph, i, &mut slot, &mut on_path, &mut instances) {
                roots.push(InstanceDep {
                    name: arg.clone(),
                    instance,
                });
            }
        }
    }
    InstanceSet { instances, roots }
}

/// Tree expansion: every dependency edge gets a fresh copy of its node, so
/// each instance has exactly one consumer.
pub(crate) fn expanded_instances(graph: &NuisanceGraph<'_>, target_args: &[String]) -> InstanceSet {
    fn expand(graph: &NuisanceGraph<'_>, i: usize, path: &mut Vec<String>, on_path: &mut [bool], out: &mut Vec<NuisanceInstance>) -> Option<usize> {
        if std::mem::replace(&mut on_path[i], true) {
            return None;
        }
        let node = &graph.nodes[i];
        let here = path.clone();
        path.push(node.name.to_string());
        let deps = node
            .deps
            .iter()
            .filter_map(|&(name, j)| {
                expand(graph, j, path, on_path, out).map(|instance| InstanceDep {
                    name: name.to_string(),
                    instance,
                })
            })
            .collect();
        path.pop();
        on_path[i] = false;
        out.push(NuisanceInstance {
            node: node.name.to_string(),
            path: here,
            train_fold: node.spec.train_fold(),
            deps,
        });
        Some(out.len() - 1)
    }

    let mut on_path = vec![false; graph.nodes.len()];
    let mut instances = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; graph.nodes.len()];
    let mut roots = Vec::new();
    for arg in target_args {
        let Some(i) = graph.node_of(arg) else { continue };
        let instance = match root_of[i] {
            Some(s) => s,
            None => {
                let mut path = vec![TARGET.to_string()];
                let Some(s) = expand(graph, i, &mut path, &mut on_path, &mut instances) else { continue };
                root_of[i] = Some(s);
                s
            }
        };
        roots.push(InstanceDep {
            name: arg.clone(),
            instance,
        });
    }
    InstanceSet { instances, roots }
}

/// Tree-expands the nuisance graph below the given target arguments.
pub fn tree_expand(nuisances: &IndexMap<String, NuisanceSpec>, target_args: &[String]) -> InstanceSet {
    expanded_instances(&NuisanceGraph::resolve(nuisances), target_args)
}

/// Instances scheduled in every panel of `m`.
pub fn instance_set(m: &MethodSpec) -> InstanceSet {
    let graph = NuisanceGraph::resolve(m.nuisances());
    match m.allocation() {
        Allocation::Overlap | Allocation::Disjoint => node_instances(&graph, m.target().args()),
        Allocation::Independence => expanded_instances(&graph, m.target().args()),
    }
}
