//! Observation sequences and the labels attached to them.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One input frame: `(yellow_x, yellow_y, green_x, green_y)` for the default layout.
pub type InputFrame = Array1<f64>;

/// Time-ordered frames, one row per time step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationSequence {
    frames: Array2<f64>,
}

impl ObservationSequence {
    pub fn new(frames: Array2<f64>) -> Self {
        Self { frames }
    }

    pub fn from_frames(frames: &[InputFrame]) -> Result<Self> {
        let width = frames
            .first()
            .map(|f| f.len())
            .ok_or_else(|| Error::Data("sequence has no frames".into()))?;
        let mut out = Array2::zeros((frames.len(), width));
        for (t, frame) in frames.iter().enumerate() {
            if frame.len() != width {
                return Err(Error::Shape(format!(
                    "frame {t} has {} values, expected {width}",
                    frame.len()
                )));
            }
            out.row_mut(t).assign(frame);
        }
        Ok(Self { frames: out })
    }

    pub fn len(&self) -> usize {
        self.frames.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.nrows() == 0
    }

    pub fn width(&self) -> usize {
        self.frames.ncols()
    }

    pub fn frame(&self, t: usize) -> ArrayView1<'_, f64> {
        self.frames.row(t)
    }

    pub fn frames(&self) -> &Array2<f64> {
        &self.frames
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Cosine,
    Square,
    Circle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Yellow,
    Green,
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Cosine, Shape::Square, Shape::Circle];

    pub fn as_str(self) -> &'static str {
        match self {
            Shape::Cosine => "cosine",
            Shape::Square => "square",
            Shape::Circle => "circle",
        }
    }
}

impl Color {
    pub const ALL: [Color; 2] = [Color::Yellow, Color::Green];

    pub fn as_str(self) -> &'static str {
        match self {
            Color::Yellow => "yellow",
            Color::Green => "green",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Shape::Cosine),
            "square" => Ok(Shape::Square),
            "circle" => Ok(Shape::Circle),
            other => Err(Error::Data(format!("unknown shape {other:?}"))),
        }
    }
}

impl FromStr for Color {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "yellow" => Ok(Color::Yellow),
            "green" => Ok(Color::Green),
            other => Err(Error::Data(format!("unknown color {other:?}"))),
        }
    }
}

/// A (shape, color) category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClassLabel {
    pub shape: Shape,
    pub color: Color,
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.shape, self.color)
    }
}

/// Identifies one recorded sequence: its class plus the repeat index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SequenceLabel {
    pub shape: Shape,
    pub color: Color,
    pub repeat: usize,
}

impl SequenceLabel {
    pub fn class(&self) -> ClassLabel {
        ClassLabel {
            shape: self.shape,
            color: self.color,
        }
    }
}

impl fmt::Display for SequenceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}_{}", self.shape, self.color, self.repeat)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSequence {
    pub label: SequenceLabel,
    pub sequence: ObservationSequence,
}
