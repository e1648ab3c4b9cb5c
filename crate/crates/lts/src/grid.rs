//! Movement LTS over a discretised workspace: a controlled `go.j` command
//! followed by an uncontrolled `at.j` arrival, restricted to adjacent cells.

use std::collections::BTreeSet;

use crate::{Label, Lts, StateId};

/// 4-neighbour adjacency of a `rows x cols` grid with row-major ids. Cells in
/// `blocked` are left out.
pub fn grid_adjacency(rows: u32, cols: u32, blocked: &BTreeSet<u32>) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let id = r * cols + c;
            if blocked.contains(&id) {
                continue;
            }
            let mut push = |n: u32| {
                if !blocked.contains(&n) {
                    edges.push((id, n));
                }
            };
            if r > 0 {
                push(id - cols);
            }
            if c > 0 {
                push(id - 1);
            }
            if c + 1 < cols {
                push(id + 1);
            }
            if r + 1 < rows {
                push(id + cols);
            }
        }
    }
    edges
}

/// Movement LTS over the given cells. `edges` are directed `(from, to)` pairs.
///
/// State `k` is "hovering at `cells[k]`"; state `n + k` is "flying to
/// `cells[k]`". State names are `c<id>` and `m<id>`.
pub fn movement_lts(cells: &[u32], edges: &[(u32, u32)], initial: u32) -> Lts {
    let n = cells.len();
    let pos = |c: u32| cells.iter().position(|&x| x == c).expect("edge endpoint is a cell") as StateId;
    let mut transitions = Vec::new();
    let mut alphabet = BTreeSet::new();
    for &c in cells {
        let go = Label::new(&format!("go.{c}")).unwrap();
        let at = Label::new(&format!("at.{c}")).unwrap();
        transitions.push((n as StateId + pos(c), at.clone(), pos(c)));
        alphabet.insert(go);
        alphabet.insert(at);
    }
    for &(a, b) in edges {
        let go = Label::new(&format!("go.{b}")).unwrap();
        transitions.push((pos(a), go, n as StateId + pos(b)));
    }
    let names = cells
        .iter()
        .map(|c| format!("c{c}"))
        .chain(cells.iter().map(|c| format!("m{c}")))
        .collect();
    Lts::from_parts(alphabet, 2 * n, pos(initial), transitions)
        .expect("well-formed movement lts")
        .with_names(names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_three() {
        let adj = grid_adjacency(2, 3, &BTreeSet::new());
        assert_eq!(adj.len(), 14);
        let m = movement_lts(&[0, 1, 2, 3, 4, 5], &adj, 0);
        assert_eq!(m.num_states(), 12);
        assert!(m.is_enabled(0, "go.1"));
        assert!(m.is_enabled(0, "go.3"));
        assert!(!m.is_enabled(0, "go.5"));
        assert!(m.is_deterministic());
    }

    #[test]
    fn single_cell_has_no_moves() {
        let m = movement_lts(&[0], &grid_adjacency(1, 1, &BTreeSet::new()), 0);
        assert_eq!(m.transitions().filter(|t| t.1.as_str().starts_with("go.")).count(), 0);
    }
}
