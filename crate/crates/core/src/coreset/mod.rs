//! IPC coreset selection: divisive tree, level-wise node selection, static
//! latent neighborhoods, plus the k-means baseline and hull coverage.

mod hull;
mod kmeans;
mod select;
mod tree;

pub use hull::{convex_hull, hull_area_ratio, polygon_area, HullRatio};
pub use kmeans::kmeans_baseline;
pub use select::{select_levelwise, Selection};
pub use tree::{build_bisecting_tree, build_divisive_tree, DivisiveTree, TreeNode};

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{distance, gather_rows, row_mean, squared_distance};

/// How IPC centroids are chosen within a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusteringMethod {
    /// Divisive tree with two-stage level-wise selection.
    #[default]
    DivisiveLevelwise,
    /// Divisive tree, leaf frontier after K − 1 largest-SSE splits.
    Divisive,
    /// Lloyd's k-means from farthest-first seeds.
    Kmeans,
}

/// Representative point of a selected node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentroidKind {
    #[default]
    Mean,
    /// Member nearest the mean (lowest index on ties).
    Medoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoresetEntry {
    pub centroid: Array1<f64>,
    /// Row indices (into the class matrix) within the radius of `centroid`.
    pub neighborhood: Vec<usize>,
    pub node_id: Option<usize>,
    pub node_depth: Option<usize>,
    /// The radius ball was empty and the nearest latent was used instead.
    pub fallback: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpcCoreset {
    pub entries: Vec<CoresetEntry>,
    pub radius: f64,
    pub warnings: Vec<String>,
}

/// Exact radius-r ball of `center` in `points`, or the single nearest point
/// (lowest index on ties) when the ball is empty. The flag reports the
/// fallback.
pub fn radius_ball(points: ArrayView2<f64>, center: ArrayView1<f64>, r: f64) -> (Vec<usize>, bool) {
    let dists: Vec<f64> = points.outer_iter().map(|p| distance(p, center)).collect();
    let ball: Vec<usize> = dists.iter().enumerate().filter(|(_, &d)| d <= r).map(|(i, _)| i).collect();
    if !ball.is_empty() || dists.is_empty() {
        return (ball, false);
    }
    let nearest = (0..dists.len()).min_by(|&a, &b| dists[a].total_cmp(&dists[b])).expect("nonempty");
    (vec![nearest], true)
}

/// The `k` points of `points` nearest `center` (ties by lower index),
/// returned in index order.
pub fn nearest_points(points: ArrayView2<f64>, center: ArrayView1<f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<(f64, usize)> = points.outer_iter().map(|p| squared_distance(p, center)).zip(0..).collect();
    idx.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut out: Vec<usize> = idx.into_iter().take(k).map(|(_, i)| i).collect();
    out.sort_unstable();
    out
}

/// Builds one entry per centroid with its static radius-r neighborhood.
pub fn build_neighborhoods(
    points: ArrayView2<f64>,
    centroids: &[(Array1<f64>, Option<usize>, Option<usize>)],
    r: f64,
) -> Result<IpcCoreset> {
    if !(r > 0.0) {
        return Err(Error::invalid("neighborhood radius must be positive"));
    }
    if points.nrows() == 0 {
        return Err(Error::Empty("class latents"));
    }
    let mut warnings = Vec::new();
    let entries = centroids
        .iter()
        .enumerate()
        .map(|(s, (c, node_id, node_depth))| {
            let (neighborhood, fallback) = radius_ball(points, c.view(), r);
            if fallback {
                warnings.push(format!("entry {s}: radius {r} ball empty, using nearest latent"));
            }
            CoresetEntry { centroid: c.clone(), neighborhood, node_id: *node_id, node_depth: *node_depth, fallback }
        })
        .collect();
    Ok(IpcCoreset { entries, radius: r, warnings })
}

fn representative(points: ArrayView2<f64>, node: &TreeNode, kind: CentroidKind) -> Array1<f64> {
    match kind {
        CentroidKind::Mean => node.centroid.clone(),
        CentroidKind::Medoid => {
            let best = node
                .members
                .iter()
                .copied()
                .min_by(|&a, &b| {
                    squared_distance(points.row(a), node.centroid.view())
                        .total_cmp(&squared_distance(points.row(b), node.centroid.view()))
                        .then(a.cmp(&b))
                })
                .expect("nonempty node");
            points.row(best).to_owned()
        }
    }
}

fn node_centroids(
    points: ArrayView2<f64>,
    tree: &DivisiveTree,
    ids: &[usize],
    kind: CentroidKind,
) -> Vec<(Array1<f64>, Option<usize>, Option<usize>)> {
    ids.iter()
        .map(|&id| {
            let n = &tree.nodes[id];
            (representative(points, n, kind), Some(n.id), Some(n.depth))
        })
        .collect()
}

/// Selection parameters for one class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassCoresetParams {
    pub budget: usize,
    pub max_depth: usize,
    pub s_start: usize,
    pub radius: f64,
    pub method: ClusteringMethod,
    pub centroid: CentroidKind,
}

/// Selects up to `budget` centroids for one class and attaches their static
/// neighborhoods. Classes with fewer than two points collapse to their mean.
pub fn build_class_coreset<R: Rng + ?Sized>(
    points: ArrayView2<f64>,
    params: &ClassCoresetParams,
    rng: &mut R,
) -> Result<IpcCoreset> {
    if points.nrows() == 0 {
        return Err(Error::Empty("class latents"));
    }
    if params.budget == 0 {
        return Err(Error::invalid("IPC budget must be at least 1"));
    }
    if points.nrows() < 2 {
        let mean = row_mean(points)?;
        let mut cs = build_neighborhoods(points, &[(mean, None, None)], params.radius)?;
        cs.warnings.push("degenerate class: fewer than two points, using the class mean".into());
        return Ok(cs);
    }

    let mut warnings = Vec::new();
    let centroids: Vec<(Array1<f64>, Option<usize>, Option<usize>)> = match params.method {
        ClusteringMethod::Kmeans => {
            let k = params.budget.min(points.nrows());
            if k < params.budget {
                warnings.push(format!("budget {} exceeds class size; using k = {k}", params.budget));
            }
            kmeans_baseline(points, k)?.outer_iter().map(|c| (c.to_owned(), None, None)).collect()
        }
        ClusteringMethod::Divisive => {
            let tree = build_bisecting_tree(points, params.budget)?;
            let leaves: Vec<usize> = tree.leaves().map(|n| n.id).collect();
            if leaves.len() < params.budget {
                warnings.push(format!(
                    "only {} distinct leaves; budget short by {}",
                    leaves.len(),
                    params.budget - leaves.len()
                ));
            }
            node_centroids(points, &tree, &leaves, params.centroid)
        }
        ClusteringMethod::DivisiveLevelwise => {
            let tree = build_divisive_tree(points, params.max_depth)?;
            let sel = select_levelwise(&tree, params.budget, params.s_start, rng)?;
            if sel.shortfall > 0 {
                warnings.push(format!("tree has only {} nodes; budget short by {}", tree.len(), sel.shortfall));
            }
            node_centroids(points, &tree, &sel.ids, params.centroid)
        }
    };
    let mut cs = build_neighborhoods(points, &centroids, params.radius)?;
    cs.warnings.splice(0..0, warnings);
    Ok(cs)
}

/// Stacks the entry centroids into a matrix.
pub fn centroid_matrix(coreset: &IpcCoreset) -> Array2<f64> {
    let d = coreset.entries.first().map_or(0, |e| e.centroid.len());
    let mut m = Array2::zeros((coreset.entries.len(), d));
    for (i, e) in coreset.entries.iter().enumerate() {
        m.row_mut(i).assign(&e.centroid);
    }
    m
}

/// Points of an entry's neighborhood.
pub fn neighborhood_points(points: ArrayView2<f64>, entry: &CoresetEntry) -> Array2<f64> {
    gather_rows(points, &entry.neighborhood)
}
