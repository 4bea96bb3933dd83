//! Trained PB values and nearest-centroid classification in PB space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{transfer, Vector};
use crate::sequence::{ClassLabel, SequenceLabel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbEntry {
    pub label: SequenceLabel,
    pub rho_d: Vector,
    pub rho_v: Vector,
}

impl PbEntry {
    /// PB activations, dorsal-attached group first.
    pub fn activation(&self) -> Vector {
        concat_activation(&self.rho_d, &self.rho_v)
    }
}

pub(crate) fn concat_activation(rho_d: &Vector, rho_v: &Vector) -> Vector {
    rho_d.iter().chain(rho_v.iter()).map(|&r| transfer(r)).collect()
}

/// One entry per training sequence, labels unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PbTable {
    entries: Vec<PbEntry>,
}

impl PbTable {
    pub fn new(entries: Vec<PbEntry>) -> Result<Self> {
        for (i, e) in entries.iter().enumerate() {
            if entries[..i].iter().any(|o| o.label == e.label) {
                return Err(Error::Data(format!("duplicate PB table label {}", e.label)));
            }
            if e.rho_d.len() != entries[0].rho_d.len() || e.rho_v.len() != entries[0].rho_v.len() {
                return Err(Error::Shape(format!("PB entry {} has inconsistent sizes", e.label)));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[PbEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Class centroids of the PB activations, in order of first appearance.
    pub fn centroids(&self) -> Vec<(ClassLabel, Vector)> {
        let mut sums: Vec<(ClassLabel, Vector, usize)> = Vec::new();
        for e in &self.entries {
            let act = e.activation();
            match sums.iter_mut().find(|(c, _, _)| *c == e.label.class()) {
                Some((_, sum, n)) => {
                    *sum += &act;
                    *n += 1;
                }
                None => sums.push((e.label.class(), act, 1)),
            }
        }
        sums.into_iter()
            .map(|(c, sum, n)| (c, sum / n as f64))
            .collect()
    }

    /// Mean absolute PB activation over all entries and units.
    pub fn mean_abs_activation(&self) -> f64 {
        let (sum, n) = self
            .entries
            .iter()
            .flat_map(|e| e.activation().into_iter())
            .fold((0.0, 0usize), |(s, n), a| (s + a.abs(), n + 1));
        if n == 0 {
            0.0
        } else {
            sum / n as f64
        }
    }
}

/// Label of the class centroid nearest to `pb` (concatenated PB activations,
/// dorsal-attached group first). Ties go to the earlier class.
pub fn classify_pb(pb: &Vector, table: &PbTable) -> Result<ClassLabel> {
    let centroids = table.centroids();
    if centroids.is_empty() {
        return Err(Error::Data("cannot classify against an empty PB table".into()));
    }
    if pb.len() != centroids[0].1.len() {
        return Err(Error::Shape(format!(
            "PB vector has {} entries, table has {}",
            pb.len(),
            centroids[0].1.len()
        )));
    }
    let mut best: Option<(ClassLabel, f64)> = None;
    for (label, c) in centroids {
        let d = euclidean(pb, &c);
        if best.map_or(true, |(_, bd)| d < bd) {
            best = Some((label, d));
        }
    }
    Ok(best.map(|(l, _)| l).expect("non-empty centroids"))
}

pub fn euclidean(a: &Vector, b: &Vector) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// PB dimensions that separate color and movement with one threshold each.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AxisAssignment {
    /// Index into the concatenated PB activation vector.
    pub color_axis: usize,
    pub movement_axis: usize,
}

/// Finds distinct PB dimensions such that a single threshold on one splits the
/// colors and a single threshold on the other splits the shapes, with no errors.
///
/// Requires exactly two colors and two shapes in the table.
pub fn axis_separability(table: &PbTable) -> Option<AxisAssignment> {
    let entries = table.entries();
    let first = entries.first()?;
    let other_color = entries.iter().find(|e| e.label.color != first.label.color)?;
    let other_shape = entries.iter().find(|e| e.label.shape != first.label.shape)?;
    if entries.iter().any(|e| {
        (e.label.color != first.label.color && e.label.color != other_color.label.color)
            || (e.label.shape != first.label.shape && e.label.shape != other_shape.label.shape)
    }) {
        return None;
    }
    let acts: Vec<Vector> = entries.iter().map(PbEntry::activation).collect();
    let dims = acts[0].len();
    let splits = |axis: usize, in_a: &dyn Fn(&PbEntry) -> bool| -> bool {
        let (mut a_lo, mut a_hi, mut b_lo, mut b_hi) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for (e, act) in entries.iter().zip(&acts) {
            let x = act[axis];
            if in_a(e) {
                a_lo = a_lo.min(x);
                a_hi = a_hi.max(x);
            } else {
                b_lo = b_lo.min(x);
                b_hi = b_hi.max(x);
            }
        }
        a_hi < b_lo || b_hi < a_lo
    };
    let color = first.label.color;
    let shape = first.label.shape;
    for c in 0..dims {
        if !splits(c, &|e| e.label.color == color) {
            continue;
        }
        for m in (0..dims).filter(|&m| m != c) {
            if splits(m, &|e| e.label.shape == shape) {
                return Some(AxisAssignment {
                    color_axis: c,
                    movement_axis: m,
                });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::TRANSFER_SCALE;
    use crate::sequence::{Color, Shape};
    use ndarray::array;

    fn entry(shape: Shape, color: Color, repeat: usize, d: f64, v: f64) -> PbEntry {
        PbEntry {
            label: SequenceLabel { shape, color, repeat },
            rho_d: array![d],
            rho_v: array![v],
        }
    }

    fn grid() -> PbTable {
        let mut e = Vec::new();
        for r in 0..3 {
            let j = 0.01 * r as f64;
            e.push(entry(Shape::Cosine, Color::Yellow, r, 1.0 + j, 1.0 - j));
            e.push(entry(Shape::Cosine, Color::Green, r, -1.0 + j, 1.0 + j));
            e.push(entry(Shape::Square, Color::Yellow, r, 1.0 - j, -1.0 + j));
            e.push(entry(Shape::Square, Color::Green, r, -1.0 - j, -1.0 - j));
        }
        PbTable::new(e).unwrap()
    }

    #[test]
    fn classify_at_centroid_and_ties() {
        let t = grid();
        for (label, c) in t.centroids() {
            assert_eq!(classify_pb(&c, &t).unwrap(), label);
        }
        let sym = PbTable::new(vec![
            entry(Shape::Square, Color::Green, 0, 1.0, 0.0),
            entry(Shape::Cosine, Color::Yellow, 0, -1.0, 0.0),
        ])
        .unwrap();
        assert_eq!(
            classify_pb(&array![0.0, 0.0], &sym).unwrap(),
            ClassLabel { shape: Shape::Square, color: Color::Green }
        );
    }

    #[test]
    fn empty_table_and_bad_width() {
        let t = PbTable::new(vec![]).unwrap();
        assert!(matches!(classify_pb(&array![0.0, 0.0], &t), Err(Error::Data(_))));
        assert!(matches!(classify_pb(&array![0.0], &grid()), Err(Error::Shape(_))));
    }

    #[test]
    fn duplicate_labels_rejected() {
        let e = entry(Shape::Cosine, Color::Yellow, 0, 0.0, 0.0);
        assert!(PbTable::new(vec![e.clone(), e]).is_err());
    }

    #[test]
    fn separability_on_grid_and_swapped_axes() {
        let t = grid();
        assert_eq!(
            axis_separability(&t),
            Some(AxisAssignment { color_axis: 0, movement_axis: 1 })
        );
        let swapped = PbTable::new(
            t.entries()
                .iter()
                .map(|e| PbEntry { rho_d: e.rho_v.clone(), rho_v: e.rho_d.clone(), ..e.clone() })
                .collect(),
        )
        .unwrap();
        assert_eq!(
            axis_separability(&swapped),
            Some(AxisAssignment { color_axis: 1, movement_axis: 0 })
        );
    }

    #[test]
    fn collinear_clusters_not_separable() {
        let e = vec![
            entry(Shape::Cosine, Color::Yellow, 0, -1.5, 0.0),
            entry(Shape::Cosine, Color::Green, 0, -0.5, 0.0),
            entry(Shape::Square, Color::Yellow, 0, 0.5, 0.0),
            entry(Shape::Square, Color::Green, 0, 1.5, 0.0),
        ];
        assert_eq!(axis_separability(&PbTable::new(e).unwrap()), None);
    }

    #[test]
    fn mean_abs_activation_bounded() {
        let m = grid().mean_abs_activation();
        assert!(m > 0.0 && m < TRANSFER_SCALE);
    }
}
