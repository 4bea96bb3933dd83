//! CSV report and dataset files.
//!
//! | file                    | header                                                              |
//! |-------------------------|---------------------------------------------------------------------|
//! | `<shape>_<color>_<r>.csv` | `t_index,in0,..,in{n-1},shape,color,repeat`                       |
//! | `pb_table.csv`          | `sequence,shape,color,repeat,rho_d0..,rho_v0..,pb_d0..,pb_v0..`      |
//! | `cost_curve.csv`        | `epoch,cost`                                                        |
//! | `recognition_trace.csv` | `sequence,shape,color,epoch,cost,rho_d0..,rho_v0..,pb_d0..,pb_v0..` |
//! | `prediction_trace.csv`  | `sequence,shape,color,step,gen0..,true0..,sq_err`                   |

use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::persist::write_atomic;
use crate::error::{Error, Result};
use crate::modes::{PbEntry, PbTable, RecognitionTrace};
use crate::net::{transfer, Vector};
use crate::sequence::{LabeledSequence, ObservationSequence, SequenceLabel};

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Data(format!("{}: {e}", path.display()))
}

fn finish(path: &Path, w: csv::Writer<Vec<u8>>) -> Result<()> {
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Persistence(format!("{}: {e}", path.display())))?;
    write_atomic(path, &bytes)
}

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().from_writer(Vec::new())
}

fn numbered(prefix: &str, n: usize) -> impl Iterator<Item = String> + '_ {
    (0..n).map(move |i| format!("{prefix}{i}"))
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

fn write_row(w: &mut csv::Writer<Vec<u8>>, path: &Path, row: Vec<String>) -> Result<()> {
    w.write_record(&row).map_err(|e| csv_err(path, e))
}

pub fn sequence_file_name(label: &SequenceLabel) -> String {
    format!("{label}.csv")
}

pub fn write_sequence(path: &Path, item: &LabeledSequence) -> Result<()> {
    let n = item.sequence.width();
    let mut w = writer();
    let mut header = vec!["t_index".to_string()];
    header.extend(numbered("in", n));
    header.extend(["shape", "color", "repeat"].map(String::from));
    write_row(&mut w, path, header)?;
    for t in 0..item.sequence.len() {
        let mut row = vec![t.to_string()];
        row.extend(item.sequence.frame(t).iter().map(|&x| fmt(x)));
        row.push(item.label.shape.to_string());
        row.push(item.label.color.to_string());
        row.push(item.label.repeat.to_string());
        write_row(&mut w, path, row)?;
    }
    finish(path, w)
}

/// Writes one CSV per sequence into `dir`; returns the paths written.
pub fn write_dataset(dir: &Path, data: &[LabeledSequence]) -> Result<Vec<PathBuf>> {
    data.iter()
        .map(|item| {
            let path = dir.join(sequence_file_name(&item.label));
            write_sequence(&path, item).map(|_| path)
        })
        .collect()
}

pub fn read_sequence(path: &Path) -> Result<LabeledSequence> {
    let mut r = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Data(format!("{}: {other:?}", path.display())),
    })?;
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let inputs: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("in") && h[2..].parse::<usize>().is_ok())
        .map(|(i, _)| i)
        .collect();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("{}: missing column {name}", path.display())))
    };
    let (t_col, shape_col, color_col, repeat_col) =
        (col("t_index")?, col("shape")?, col("color")?, col("repeat")?);
    if inputs.is_empty() {
        return Err(Error::Data(format!("{}: no in<k> columns", path.display())));
    }
    let mut rows: Vec<f64> = Vec::new();
    let mut label: Option<SequenceLabel> = None;
    let mut count = 0;
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let t: usize = field(t_col)
            .parse()
            .map_err(|_| Error::Data(format!("{}: bad t_index on row {}", path.display(), line + 1)))?;
        if t != count {
            return Err(Error::Data(format!(
                "{}: t_index {t} out of order (expected {count})",
                path.display()
            )));
        }
        for &i in &inputs {
            let v: f64 = field(i)
                .parse()
                .map_err(|_| Error::Data(format!("{}: bad value on row {}", path.display(), line + 1)))?;
            rows.push(v);
        }
        let this = SequenceLabel {
            shape: field(shape_col).parse()?,
            color: field(color_col).parse()?,
            repeat: field(repeat_col)
                .parse()
                .map_err(|_| Error::Data(format!("{}: bad repeat", path.display())))?,
        };
        if label.is_some_and(|l| l != this) {
            return Err(Error::Data(format!("{}: label changes mid-sequence", path.display())));
        }
        label = Some(this);
        count += 1;
    }
    let label = label.ok_or_else(|| Error::Data(format!("{}: no rows", path.display())))?;
    let frames = Array2::from_shape_vec((count, inputs.len()), rows)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    Ok(LabeledSequence {
        label,
        sequence: ObservationSequence::new(frames),
    })
}

/// Reads a single sequence file, or every `*.csv` in a directory in name order.
pub fn read_dataset(path: &Path) -> Result<Vec<LabeledSequence>> {
    if path.is_file() {
        return Ok(vec![read_sequence(path)?]);
    }
    let mut files: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Data(format!("{}: no sequence files", path.display())));
    }
    files.iter().map(|p| read_sequence(p)).collect()
}

fn pb_columns(n_d: usize, n_v: usize) -> Vec<String> {
    numbered("rho_d", n_d)
        .chain(numbered("rho_v", n_v))
        .chain(numbered("pb_d", n_d))
        .chain(numbered("pb_v", n_v))
        .collect()
}

fn pb_values(rho_d: &Vector, rho_v: &Vector) -> Vec<String> {
    rho_d
        .iter()
        .chain(rho_v.iter())
        .map(|&x| fmt(x))
        .chain(rho_d.iter().chain(rho_v.iter()).map(|&x| fmt(transfer(x))))
        .collect()
}

pub fn write_pb_table(path: &Path, table: &PbTable, n_pb_d: usize, n_pb_v: usize) -> Result<()> {
    let mut w = writer();
    let mut header: Vec<String> = ["sequence", "shape", "color", "repeat"].map(String::from).to_vec();
    header.extend(pb_columns(n_pb_d, n_pb_v));
    write_row(&mut w, path, header)?;
    for e in table.entries() {
        let mut row = vec![
            e.label.to_string(),
            e.label.shape.to_string(),
            e.label.color.to_string(),
            e.label.repeat.to_string(),
        ];
        row.extend(pb_values(&e.rho_d, &e.rho_v));
        write_row(&mut w, path, row)?;
    }
    finish(path, w)
}

pub fn read_pb_table(path: &Path) -> Result<PbTable> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let cols = |prefix: &str| -> Vec<usize> {
        headers
            .iter()
            .enumerate()
            .filter(|(_, h)| h.strip_prefix(prefix).is_some_and(|n| n.parse::<usize>().is_ok()))
            .map(|(i, _)| i)
            .collect()
    };
    let (d_cols, v_cols) = (cols("rho_d"), cols("rho_v"));
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("{}: missing column {name}", path.display())))
    };
    let (shape_col, color_col, repeat_col) = (find("shape")?, find("color")?, find("repeat")?);
    let mut entries = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let num = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::Data(format!("{}: bad number", path.display())))
        };
        entries.push(PbEntry {
            label: SequenceLabel {
                shape: rec.get(shape_col).unwrap_or("").parse()?,
                color: rec.get(color_col).unwrap_or("").parse()?,
                repeat: rec
                    .get(repeat_col)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| Error::Data(format!("{}: bad repeat", path.display())))?,
            },
            rho_d: d_cols.iter().map(|&i| num(i)).collect::<Result<Vector>>()?,
            rho_v: v_cols.iter().map(|&i| num(i)).collect::<Result<Vector>>()?,
        });
    }
    PbTable::new(entries)
}

pub fn write_cost_curve(path: &Path, curve: &[f64]) -> Result<()> {
    let mut w = writer();
    write_row(&mut w, path, vec!["epoch".into(), "cost".into()])?;
    for (i, c) in curve.iter().enumerate() {
        write_row(&mut w, path, vec![(i + 1).to_string(), fmt(*c)])?;
    }
    finish(path, w)
}

pub fn write_recognition_traces(
    path: &Path,
    traces: &[(SequenceLabel, &RecognitionTrace)],
    n_pb_d: usize,
    n_pb_v: usize,
) -> Result<()> {
    let mut w = writer();
    let mut header: Vec<String> = ["sequence", "shape", "color", "epoch", "cost"].map(String::from).to_vec();
    header.extend(pb_columns(n_pb_d, n_pb_v));
    write_row(&mut w, path, header)?;
    for (label, trace) in traces {
        for (i, e) in trace.epochs.iter().enumerate() {
            let mut row = vec![
                label.to_string(),
                label.shape.to_string(),
                label.color.to_string(),
                (i + 1).to_string(),
                fmt(e.cost),
            ];
            row.extend(pb_values(&e.rho_d, &e.rho_v));
            write_row(&mut w, path, row)?;
        }
    }
    finish(path, w)
}

pub fn write_prediction_traces(
    path: &Path,
    traces: &[(SequenceLabel, &ObservationSequence, &ObservationSequence)],
    width: usize,
) -> Result<()> {
    let mut w = writer();
    let mut header: Vec<String> = ["sequence", "shape", "color", "step"].map(String::from).to_vec();
    header.extend(numbered("gen", width));
    header.extend(numbered("true", width));
    header.push("sq_err".into());
    write_row(&mut w, path, header)?;
    for (label, generated, truth) in traces {
        for t in 0..generated.len().min(truth.len()) {
            let (g, y) = (generated.frame(t), truth.frame(t));
            let err: f64 = g.iter().zip(y.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            let mut row = vec![
                label.to_string(),
                label.shape.to_string(),
                label.color.to_string(),
                t.to_string(),
            ];
            row.extend(g.iter().map(|&x| fmt(x)));
            row.extend(y.iter().map(|&x| fmt(x)));
            row.push(fmt(err));
            write_row(&mut w, path, row)?;
        }
    }
    finish(path, w)
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Persistence(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{Color, Shape};
    use crate::trajectories::{make_dataset, DatasetSpec};
    use ndarray::array;

    #[test]
    fn dataset_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let data = make_dataset(&DatasetSpec { repeats: 2, ..DatasetSpec::default() }).unwrap();
        let paths = write_dataset(dir.path(), &data).unwrap();
        assert_eq!(paths.len(), 8);
        let text = fs::read_to_string(&paths[0]).unwrap();
        assert!(text.starts_with("t_index,in0,in1,in2,in3,shape,color,repeat\n"));
        let mut back = read_dataset(dir.path()).unwrap();
        back.sort_by_key(|d| d.label);
        let mut orig = data.clone();
        orig.sort_by_key(|d| d.label);
        assert_eq!(back, orig);
        assert_eq!(read_dataset(&paths[3]).unwrap().len(), 1);
    }

    #[test]
    fn malformed_sequence_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        fs::write(&p, "t_index,in0,shape,color,repeat\n0,0.5,cosine,yellow,0\n2,0.1,cosine,yellow,0\n").unwrap();
        assert!(matches!(read_sequence(&p), Err(Error::Data(_))));
        fs::write(&p, "t_index,in0,shape,color,repeat\n0,abc,cosine,yellow,0\n").unwrap();
        assert!(matches!(read_sequence(&p), Err(Error::Data(_))));
        fs::write(&p, "t_index,in0,shape,color,repeat\n0,0.1,hexagon,yellow,0\n").unwrap();
        assert!(matches!(read_sequence(&p), Err(Error::Data(_))));
        let empty = tempfile::tempdir().unwrap();
        assert!(read_dataset(empty.path()).is_err());
    }

    #[test]
    fn pb_table_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pb_table.csv");
        let table = PbTable::new(vec![
            PbEntry {
                label: SequenceLabel { shape: Shape::Cosine, color: Color::Green, repeat: 3 },
                rho_d: array![0.25],
                rho_v: array![-1.0 / 7.0],
            },
            PbEntry {
                label: SequenceLabel { shape: Shape::Square, color: Color::Yellow, repeat: 0 },
                rho_d: array![1e-9],
                rho_v: array![2.5],
            },
        ])
        .unwrap();
        write_pb_table(&p, &table, 1, 1).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("sequence,shape,color,repeat,rho_d0,rho_v0,pb_d0,pb_v0\n"));
        assert_eq!(read_pb_table(&p).unwrap(), table);
    }

    #[test]
    fn cost_curve_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cost_curve.csv");
        write_cost_curve(&p, &[2.0, 0.5]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "epoch,cost\n1,2\n2,0.5\n");
        write_cost_curve(&p, &[]).unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "epoch,cost\n");
    }
}
