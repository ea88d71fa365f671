//! Name resolution over a method's nuisance map.

use std::collections::HashMap;

use indexmap::IndexMap;

use crate::spec::NuisanceSpec;

pub(crate) struct GraphNode<'a> {
    pub name: &'a str,
    pub spec: &'a NuisanceSpec,
    /// (declared dependency name, node index)
    pub deps: Vec<(&'a str, usize)>,
}

/// Nodes in declaration order. Names mapping to clones of an earlier spec
/// collapse onto that node.
pub(crate) struct NuisanceGraph<'a> {
    pub nodes: Vec<GraphNode<'a>>,
    lookup: HashMap<&'a str, usize>,
    /// (node name, dependency name) pairs with no mapping.
    pub unresolved: Vec<(&'a str, &'a str)>,
}

impl<'a> NuisanceGraph<'a> {
    pub fn resolve(nuisances: &'a IndexMap<String, NuisanceSpec>) -> Self {
        let mut nodes: Vec<GraphNode<'a>> = Vec::new();
        let mut lookup = HashMap::new();
        for (name, spec) in nuisances {
            let idx = match nodes.iter().position(|n| spec.is_alias_of(n.spec)) {
                Some(i) => i,
                None => {
                    nodes.push(GraphNode {
                        name,
                        spec,
                        deps: Vec::new(),
                    });
                    nodes.len() - 1
                }
            };
            lookup.insert(name.as_str(), idx);
        }
        let mut unresolved = Vec::new();
        for node in &mut nodes {
            for dep in node.spec.deps() {
                match lookup.get(dep.as_str()) {
                    Some(&j) => node.deps.push((dep.as_str(), j)),
                    None => unresolved.push((node.name, dep.as_str())),
                }
            }
        }
        Self {
            nodes,
            lookup,
            unresolved,
        }
    }

    pub fn node_of(&self, name: &str) -> Option<usize> {
        self.lookup.get(name).copied()
    }

    /// One cycle per back edge found by depth-first search in declaration
    /// order, each listed as node names with the first repeated at the end.
    pub fn cycles(&self) -> Vec<Vec<&'a str>> {
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        fn visit<'a>(
            g: &NuisanceGraph<'a>,
            i: usize,
            marks: &mut [Mark],
            stack: &mut Vec<usize>,
            out: &mut Vec<Vec<&'a str>>,
        ) {
            marks[i] = Mark::Active;
            stack.push(i);
            for &(_, j) in &g.nodes[i].deps {
                match marks[j] {
                    Mark::New => visit(g, j, marks, stack, out),
                    Mark::Active => {
                        let from = stack.iter().position(|&s| s == j).unwrap_or(0);
                        let mut cycle: Vec<&str> =
                            stack[from..].iter().map(|&s| g.nodes[s].name).collect();
                        cycle.push(g.nodes[j].name);
                        out.push(cycle);
                    }
                    Mark::Done => {}
                }
            }
            stack.pop();
            marks[i] = Mark::Done;
        }
        let mut marks = vec![Mark::New; self.nodes.len()];
        let mut out = Vec::new();
        for i in 0..self.nodes.len() {
            if marks[i] == Mark::New {
                visit(self, i, &mut marks, &mut Vec::new(), &mut out);
            }
        }
        out
    }

    pub fn reachable(&self, roots: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut todo: Vec<usize> = roots.to_vec();
        while let Some(i) = todo.pop() {
            if !std::mem::replace(&mut seen[i], true) {
                todo.extend(self.nodes[i].deps.iter().map(|&(_, j)| j));
            }
        }
        seen
    }

    /// Distinct root nodes for the target's arguments, in declared order.
    pub fn roots(&self, target_args: &[String]) -> Vec<(&'a str, usize)> {
        let mut out: Vec<(&str, usize)> = Vec::new();
        for arg in target_args {
            if let Some((name, i)) = self.lookup.get_key_value(arg.as_str()) {
                if !out.iter().any(|&(_, j)| j == *i) {
                    out.push((name, *i));
                }
            }
        }
        out
    }
}
