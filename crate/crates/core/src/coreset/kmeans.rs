//! Plain k-means baseline for centroid selection.

use ndarray::{Array2, ArrayView2};

use super::tree::lloyd;
use crate::error::{Error, Result};
use crate::linalg::{row_mean, squared_distance};

const KMEANS_MAX_ITER: usize = 100;

/// Lloyd's algorithm from a deterministic farthest-first start: the first
/// center is the point nearest the data mean, each next one the point
/// farthest from all chosen centers (lowest index on ties).
pub fn kmeans_baseline(points: ArrayView2<f64>, k: usize) -> Result<Array2<f64>> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let n = points.nrows();
    if k > n {
        return Err(Error::invalid(format!("k = {k} exceeds {n} points")));
    }
    let mean = row_mean(points)?;
    let first = (0..n)
        .min_by(|&a, &b| {
            squared_distance(points.row(a), mean.view()).total_cmp(&squared_distance(points.row(b), mean.view()))
        })
        .expect("nonempty");
    let mut chosen = vec![first];
    let mut nearest: Vec<f64> = (0..n).map(|i| squared_distance(points.row(i), points.row(first))).collect();
    while chosen.len() < k {
        let mut far = (f64::NEG_INFINITY, 0usize);
        for (i, &d) in nearest.iter().enumerate() {
            if d > far.0 {
                far = (d, i);
            }
        }
        chosen.push(far.1);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(squared_distance(points.row(i), points.row(far.1)));
        }
    }

    let members: Vec<usize> = (0..n).collect();
    let seeds = chosen.iter().map(|&i| points.row(i).to_owned()).collect();
    let (centers, _) = lloyd(points, &members, seeds, KMEANS_MAX_ITER);
    let mut out = Array2::zeros((k, points.ncols()));
    for (i, c) in centers.iter().enumerate() {
        out.row_mut(i).assign(c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn single_center_is_mean() {
        let z = array![[0.0, 0.0], [2.0, 0.0], [4.0, 6.0]];
        let c = kmeans_baseline(z.view(), 1).unwrap();
        assert_eq!(c.row(0).to_vec(), vec![2.0, 2.0]);
    }

    #[test]
    fn one_center_per_point() {
        let z = array![[0.0, 0.0], [2.0, 0.0], [4.0, 6.0]];
        let c = kmeans_baseline(z.view(), 3).unwrap();
        let mut rows: Vec<Vec<f64>> = c.outer_iter().map(|r| r.to_vec()).collect();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(rows, vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![4.0, 6.0]]);
    }

    #[test]
    fn rejects_zero_and_oversized_k() {
        let z = array![[0.0, 0.0]];
        assert!(kmeans_baseline(z.view(), 0).is_err());
        assert!(kmeans_baseline(z.view(), 2).is_err());
    }
}
