//! CSV persistence for latent sets, coresets, synthetic sets, and
//! trajectory logs. Floats use the shortest representation that parses
//! back to the same value; line endings are LF.

use std::io::{Read, Write};

use ndarray::Array2;

use crate::data::LabeledLatentSet;
use crate::error::{Error, Result};
use crate::sampler::{ClassPlan, StepRecord, SyntheticSet, TrajectoryRecord};

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn coord_header(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("x{i}")).collect()
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn write_latent_csv<W: Write>(w: W, set: &LabeledLatentSet) -> Result<()> {
    let mut out = writer(w);
    let mut header = coord_header(set.dim());
    header.push("label".into());
    out.write_record(&header)?;
    for (p, l) in set.points.outer_iter().zip(&set.labels) {
        let mut row: Vec<String> = p.iter().map(|&v| fmt(v)).collect();
        row.push(l.to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_synthetic_csv<W: Write>(w: W, set: &SyntheticSet) -> Result<()> {
    let mut out = writer(w);
    let mut header = coord_header(set.points.ncols());
    header.extend(["label", "centroid_id", "seed"].map(String::from));
    out.write_record(&header)?;
    for (i, p) in set.points.outer_iter().enumerate() {
        let mut row: Vec<String> = p.iter().map(|&v| fmt(v)).collect();
        row.push(set.labels[i].to_string());
        row.push(set.centroid_ids[i].to_string());
        row.push(set.seeds[i].to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads any CSV with `x0..x{D-1}` and `label` columns (extra columns,
/// such as those of a synthetic-set file, are ignored).
pub fn read_labeled_csv<R: Read>(r: R) -> Result<LabeledLatentSet> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(r);
    let headers = rdr.headers()?.clone();
    let mut coord_cols = Vec::new();
    while let Some(c) = headers.iter().position(|h| h == format!("x{}", coord_cols.len())) {
        coord_cols.push(c);
    }
    if coord_cols.is_empty() {
        return Err(Error::Parse { line: 1, msg: "no x0 column".into() });
    }
    let label_col =
        headers.iter().position(|h| h == "label").ok_or(Error::Parse { line: 1, msg: "no label column".into() })?;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let field = |c: usize| rec.get(c).ok_or(Error::Parse { line, msg: format!("missing column {c}") });
        for &c in &coord_cols {
            let s = field(c)?;
            values.push(s.trim().parse::<f64>().map_err(|e| Error::Parse { line, msg: format!("{s:?}: {e}") })?);
        }
        let s = field(label_col)?;
        labels.push(s.trim().parse::<usize>().map_err(|e| Error::Parse { line, msg: format!("label {s:?}: {e}") })?);
    }
    let points =
        Array2::from_shape_vec((labels.len(), coord_cols.len()), values).map_err(|e| Error::invalid(e.to_string()))?;
    LabeledLatentSet::new(points, labels)
}

/// One row per coreset entry: class, entry index, centroid coordinates,
/// neighborhood size, and tree depth (empty for non-tree methods).
pub fn write_coreset_csv<W: Write>(w: W, plans: &[ClassPlan]) -> Result<()> {
    let mut out = writer(w);
    let dim = plans.first().map_or(0, |p| p.points.ncols());
    let mut header = vec!["class".to_string(), "entry".to_string()];
    header.extend((0..dim).map(|i| format!("cx{i}")));
    header.extend(["neighborhood_size", "node_depth"].map(String::from));
    out.write_record(&header)?;
    for plan in plans {
        for (e, entry) in plan.coreset.entries.iter().enumerate() {
            let mut row = vec![plan.class.to_string(), e.to_string()];
            row.extend(entry.centroid.iter().map(|&v| fmt(v)));
            row.push(entry.neighborhood.len().to_string());
            row.push(entry.node_depth.map(|d| d.to_string()).unwrap_or_default());
            out.write_record(&row)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub const TRAJECTORY_HEADER: [&str; 7] = ["traj", "t", "norm_x", "norm_gmode", "norm_normal", "active", "step"];

pub fn write_trajectory_csv<W: Write>(w: W, records: &[TrajectoryRecord]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(TRAJECTORY_HEADER)?;
    for r in records {
        for s in &r.steps {
            out.write_record([
                r.traj.to_string(),
                s.t.to_string(),
                fmt(s.norm_x),
                fmt(s.norm_gmode),
                fmt(s.norm_normal),
                s.active.to_string(),
                s.step.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub traj: usize,
    pub step: StepRecord,
}

pub fn read_trajectory_csv<R: Read>(r: R) -> Result<Vec<TrajectoryRow>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(r);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(TRAJECTORY_HEADER) {
        return Err(Error::Parse {
            line: 1,
            msg: format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |c: &str| Error::Parse { line, msg: format!("bad {c}") };
        let int = |c: usize| rec[c].parse::<usize>().map_err(|_| bad(TRAJECTORY_HEADER[c]));
        let num = |c: usize| rec[c].parse::<f64>().map_err(|_| bad(TRAJECTORY_HEADER[c]));
        rows.push(TrajectoryRow {
            traj: int(0)?,
            step: StepRecord {
                t: int(1)?,
                norm_x: num(2)?,
                norm_gmode: num(3)?,
                norm_normal: num(4)?,
                active: rec[5].parse::<bool>().map_err(|_| bad("active"))?,
                step: int(6)?,
            },
        });
    }
    Ok(rows)
}

/// Groups rows by trajectory id (in order of first appearance) and returns
/// the ‖x‖ series of each.
pub fn norm_series(rows: &[TrajectoryRow]) -> Vec<(usize, Vec<f64>)> {
    let mut out: Vec<(usize, Vec<f64>)> = Vec::new();
    for r in rows {
        match out.iter_mut().find(|(t, _)| *t == r.traj) {
            Some((_, v)) => v.push(r.step.norm_x),
            None => out.push((r.traj, vec![r.step.norm_x])),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn latent_roundtrip_is_exact() {
        let set = LabeledLatentSet::new(array![[0.1, -2.5e-17], [1.0 / 3.0, 7.0]], vec![0, 3]).unwrap();
        let mut buf = Vec::new();
        write_latent_csv(&mut buf, &set).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x0,x1,label\n"));
        assert!(!text.contains('\r'));
        assert_eq!(read_labeled_csv(buf.as_slice()).unwrap(), set);
    }

    #[test]
    fn synthetic_file_reads_as_labeled() {
        let s = SyntheticSet { points: array![[1.5, 2.0]], labels: vec![1], centroid_ids: vec![4], seeds: vec![99] };
        let mut buf = Vec::new();
        write_synthetic_csv(&mut buf, &s).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "x0,x1,label,centroid_id,seed\n1.5,2,1,4,99\n");
        let back = read_labeled_csv(buf.as_slice()).unwrap();
        assert_eq!(back.labels, vec![1]);
    }

    #[test]
    fn bad_latent_csv_names_line() {
        let err = read_labeled_csv("x0,label\n1.0,0\nabc,1\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn trajectory_roundtrip() {
        let rec = TrajectoryRecord {
            traj: 2,
            class: 0,
            centroid_id: 0,
            seed: 1,
            steps: vec![
                StepRecord { t: 2, step: 0, norm_x: 1.25, norm_gmode: 0.5, norm_normal: 0.1, active: true },
                StepRecord { t: 1, step: 1, norm_x: 1.0, norm_gmode: 0.25, norm_normal: 0.0, active: false },
            ],
            final_point: None,
            aborted: None,
        };
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, std::slice::from_ref(&rec)).unwrap();
        let rows = read_trajectory_csv(buf.as_slice()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].step, rec.steps[0]);
        assert_eq!(norm_series(&rows), vec![(2, vec![1.25, 1.0])]);
    }
}
