//! Divisive (bisecting 2-means) binary tree over one class's latents.

use ndarray::{Array1, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::{gather_rows, row_mean, squared_distance};

#[derive(Debug, Clone, PartialEq)]
pub struct TreeNode {
    pub id: usize,
    pub depth: usize,
    pub parent: Option<usize>,
    pub children: Option<[usize; 2]>,
    /// Row indices into the class matrix the tree was built from.
    pub members: Vec<usize>,
    pub centroid: Array1<f64>,
    pub sse: f64,
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_none()
    }
}

/// Node ids are indices into `nodes` and follow creation order; the root is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct DivisiveTree {
    pub nodes: Vec<TreeNode>,
    pub max_depth: usize,
}

impl DivisiveTree {
    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    /// Node ids grouped by depth, ascending ids within each level.
    pub fn levels(&self) -> Vec<Vec<usize>> {
        let deepest = self.nodes.iter().map(|n| n.depth).max().unwrap_or(0);
        let mut levels = vec![Vec::new(); deepest.max(self.max_depth) + 1];
        for n in &self.nodes {
            levels[n.depth].push(n.id);
        }
        levels
    }

    /// Members of the frontier obtained by cutting the tree at `depth`:
    /// nodes at that depth plus shallower leaves.
    pub fn cut(&self, depth: usize) -> Vec<&TreeNode> {
        self.nodes.iter().filter(|n| n.depth == depth || (n.depth < depth && n.is_leaf())).collect()
    }
}

fn node_stats(points: ArrayView2<f64>, members: &[usize]) -> (Array1<f64>, f64) {
    let sub = gather_rows(points, members);
    let centroid = row_mean(sub.view()).expect("nonempty members");
    let sse = sub.outer_iter().map(|p| squared_distance(p, centroid.view())).sum();
    (centroid, sse)
}

/// Builds the tree by repeatedly bisecting the largest-SSE splittable leaf
/// (ties to the lowest id) until every leaf is at `max_depth`, holds fewer
/// than two points, or cannot be split.
pub fn build_divisive_tree(points: ArrayView2<f64>, max_depth: usize) -> Result<DivisiveTree> {
    build(points, max_depth, usize::MAX)
}

/// Plain bisecting k-means: splits largest-SSE leaves, without a depth cap,
/// until `leaves` leaves exist or nothing can be split.
pub fn build_bisecting_tree(points: ArrayView2<f64>, leaves: usize) -> Result<DivisiveTree> {
    build(points, usize::MAX, leaves)
}

fn build(points: ArrayView2<f64>, mut max_depth: usize, max_leaves: usize) -> Result<DivisiveTree> {
    if points.nrows() == 0 {
        return Err(Error::Empty("class latents"));
    }
    let members: Vec<usize> = (0..points.nrows()).collect();
    let (centroid, sse) = node_stats(points, &members);
    let mut nodes = vec![TreeNode { id: 0, depth: 0, parent: None, children: None, members, centroid, sse }];
    let mut frontier = vec![0usize];
    let mut leaf_count = 1usize;

    while leaf_count < max_leaves {
        frontier.retain(|&id| nodes[id].depth < max_depth && nodes[id].members.len() >= 2);
        let Some(pos) = frontier
            .iter()
            .enumerate()
            .max_by(|(_, &a), (_, &b)| nodes[a].sse.total_cmp(&nodes[b].sse).then(b.cmp(&a)))
            .map(|(pos, _)| pos)
        else {
            break;
        };
        let id = frontier.swap_remove(pos);
        let Some((left, right)) = bisect(points, &nodes[id].members) else {
            continue;
        };
        let depth = nodes[id].depth + 1;
        let mut child_ids = [0usize; 2];
        for (slot, part) in [left, right].into_iter().enumerate() {
            let (centroid, sse) = node_stats(points, &part);
            let cid = nodes.len();
            nodes.push(TreeNode { id: cid, depth, parent: Some(id), children: None, members: part, centroid, sse });
            frontier.push(cid);
            child_ids[slot] = cid;
        }
        nodes[id].children = Some(child_ids);
        leaf_count += 1;
    }
    if max_depth == usize::MAX {
        max_depth = nodes.iter().map(|n| n.depth).max().unwrap_or(0);
    }
    Ok(DivisiveTree { nodes, max_depth })
}

const TWO_MEANS_MAX_ITER: usize = 100;

/// 2-means on the given members, seeded with the farthest pair (lowest
/// index pair on ties). Returns `None` when all members coincide.
pub(crate) fn bisect(points: ArrayView2<f64>, members: &[usize]) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut best = (0.0_f64, 0usize, 0usize);
    for (a, &i) in members.iter().enumerate() {
        for &j in &members[a + 1..] {
            let d = squared_distance(points.row(i), points.row(j));
            if d > best.0 {
                best = (d, i, j);
            }
        }
    }
    if best.0 == 0.0 {
        return None;
    }
    let seeds = [points.row(best.1).to_owned(), points.row(best.2).to_owned()];
    let assign = lloyd(points, members, seeds.to_vec(), TWO_MEANS_MAX_ITER).1;
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for (&m, &a) in members.iter().zip(&assign) {
        if a == 0 {
            left.push(m);
        } else {
            right.push(m);
        }
    }
    if left.is_empty() || right.is_empty() {
        return None;
    }
    Some((left, right))
}

/// Lloyd iterations over `members` from the given initial centers, until
/// the assignment stops changing or `max_iter` passes. An emptied cluster
/// takes the point farthest from its current center.
pub(crate) fn lloyd(
    points: ArrayView2<f64>,
    members: &[usize],
    mut centers: Vec<Array1<f64>>,
    max_iter: usize,
) -> (Vec<Array1<f64>>, Vec<usize>) {
    let k = centers.len();
    let mut assign = vec![usize::MAX; members.len()];
    for _ in 0..max_iter {
        let mut next: Vec<usize> = members
            .iter()
            .map(|&m| {
                let p = points.row(m);
                let mut best = (f64::INFINITY, 0usize);
                for (c, center) in centers.iter().enumerate() {
                    let d = squared_distance(p, center.view());
                    if d < best.0 {
                        best = (d, c);
                    }
                }
                best.1
            })
            .collect();

        let mut counts = vec![0usize; k];
        for &a in &next {
            counts[a] += 1;
        }
        for empty in 0..k {
            if counts[empty] != 0 {
                continue;
            }
            // farthest point from its own center, among clusters that can spare one
            let mut far = (f64::NEG_INFINITY, usize::MAX);
            for (pos, &m) in members.iter().enumerate() {
                let a = next[pos];
                if counts[a] < 2 {
                    continue;
                }
                let d = squared_distance(points.row(m), centers[a].view());
                if d > far.0 {
                    far = (d, pos);
                }
            }
            if far.1 != usize::MAX {
                counts[next[far.1]] -= 1;
                next[far.1] = empty;
                counts[empty] += 1;
            }
        }

        let converged = next == assign;
        assign = next;
        for (c, center) in centers.iter_mut().enumerate() {
            let idx: Vec<usize> = members.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(&m, _)| m).collect();
            if !idx.is_empty() {
                *center = row_mean(gather_rows(points, &idx).view()).expect("nonempty");
            }
        }
        if converged {
            break;
        }
    }
    (centers, assign)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn singleton_is_root_leaf() {
        let z = array![[0.0, 0.0]];
        let t = build_divisive_tree(z.view(), 3).unwrap();
        assert_eq!(t.len(), 1);
        assert!(t.root().is_leaf());
        assert_eq!(t.root().depth, 0);
    }

    #[test]
    fn four_points_split_into_two_pairs() {
        let z = array![[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0]];
        let t = build_divisive_tree(z.view(), 1).unwrap();
        assert_eq!(t.len(), 3);
        let [a, b] = t.root().children.unwrap();
        assert_eq!(t.nodes[a].members, vec![0, 1]);
        assert_eq!(t.nodes[b].members, vec![2, 3]);
        assert_eq!(t.nodes[a].centroid.to_vec(), vec![0.0, 0.5]);
        assert_eq!(t.nodes[b].centroid.to_vec(), vec![10.0, 0.5]);
    }

    #[test]
    fn identical_points_never_split() {
        let z = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]];
        let t = build_divisive_tree(z.view(), 4).unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn depth_zero_keeps_root_only() {
        let z = array![[0.0, 0.0], [5.0, 0.0]];
        let t = build_divisive_tree(z.view(), 0).unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn bisecting_stops_at_leaf_count() {
        let z = array![[0.0, 0.0], [0.0, 1.0], [10.0, 0.0], [10.0, 1.0], [30.0, 0.0]];
        let t = build_bisecting_tree(z.view(), 3).unwrap();
        assert_eq!(t.leaves().count(), 3);
        let mut all: Vec<usize> = t.leaves().flat_map(|n| n.members.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn empty_input_rejected() {
        let z = ndarray::Array2::<f64>::zeros((0, 2));
        assert!(build_divisive_tree(z.view(), 2).is_err());
    }
}
