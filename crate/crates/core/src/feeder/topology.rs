use std::collections::VecDeque;

use super::{Branch, Bus, FeederError};

/// Breadth-first view of a radial feeder rooted at the source bus.
#[derive(Debug, Clone, PartialEq)]
pub struct Traversal {
    /// Index of the source bus.
    pub root: usize,
    /// Branch indices in breadth-first order, parents before children.
    pub order: Vec<usize>,
    /// Branch feeding each bus; `None` only for the root.
    pub parent_branch: Vec<Option<usize>>,
    /// Number of branches between each bus and the root.
    pub depth: Vec<usize>,
    /// Outgoing branches of each bus, in file order.
    pub children: Vec<Vec<usize>>,
    pub branch_from: Vec<usize>,
    pub branch_to: Vec<usize>,
}

impl Traversal {
    /// Depth of the receiving end of branch `b`.
    pub fn branch_depth(&self, b: usize) -> usize {
        self.depth[self.branch_to[b]]
    }
}

/// Checks that `branches` form a spanning tree over `buses` rooted at
/// `source_bus`, with every branch oriented away from the root.
pub fn validate_radial(buses: &[Bus], branches: &[Branch], source_bus: &str) -> Result<Traversal, FeederError> {
    let find = |id: &str, element: &str| -> Result<usize, FeederError> {
        buses.iter().position(|b| b.id == id).ok_or_else(|| FeederError::UnknownBus {
            element: element.to_string(),
            bus: id.to_string(),
        })
    };
    let root = find(source_bus, "source")?;

    let n = buses.len();
    let mut branch_from = Vec::with_capacity(branches.len());
    let mut branch_to = Vec::with_capacity(branches.len());
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (e, br) in branches.iter().enumerate() {
        let element = format!("branch {}", br.id);
        let from = find(&br.from, &element)?;
        let to = find(&br.to, &element)?;
        if from == to {
            return Err(FeederError::CycleDetected { branch: br.id.clone() });
        }
        branch_from.push(from);
        branch_to.push(to);
        incident[from].push(e);
        incident[to].push(e);
    }

    let mut visited = vec![false; n];
    let mut used = vec![false; branches.len()];
    let mut parent_branch = vec![None; n];
    let mut depth = vec![0usize; n];
    let mut children = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(branches.len());
    let mut queue = VecDeque::from([root]);
    visited[root] = true;

    while let Some(u) = queue.pop_front() {
        for &e in &incident[u] {
            if used[e] {
                continue;
            }
            used[e] = true;
            let v = if branch_from[e] == u { branch_to[e] } else { branch_from[e] };
            if visited[v] {
                return Err(FeederError::NotRadial {
                    detail: format!("cycle detected: branch {} closes a loop", branches[e].id),
                });
            }
            if branch_from[e] != u {
                return Err(FeederError::NotRadial {
                    detail: format!("branch {} is oriented toward the source", branches[e].id),
                });
            }
            visited[v] = true;
            parent_branch[v] = Some(e);
            depth[v] = depth[u] + 1;
            children[u].push(e);
            order.push(e);
            queue.push_back(v);
        }
    }

    if let Some(orphan) = visited.iter().position(|v| !v) {
        return Err(FeederError::NotRadial {
            detail: format!("bus {} is unreachable from the source (missing branch)", buses[orphan].id),
        });
    }
    if branches.len() != n - 1 {
        let extra = (0..branches.len()).find(|e| !used[*e]).map(|e| branches[e].id.clone());
        return Err(FeederError::NotRadial {
            detail: format!(
                "{} buses need {} branches, found {}{}",
                n,
                n - 1,
                branches.len(),
                extra.map(|id| format!("; extra branch {id}")).unwrap_or_default()
            ),
        });
    }

    Ok(Traversal {
        root,
        order,
        parent_branch,
        depth,
        children,
        branch_from,
        branch_to,
    })
}
