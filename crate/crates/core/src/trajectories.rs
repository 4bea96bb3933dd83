//! Synthetic presenter trajectories and their noisy image-plane observations.
//!
//! Curves are given in centimetres in the presenter's torso frame for
//! `t ∈ (−π, π]`. Each point is projected to normalized image coordinates by a
//! fixed affine map of `(y, z)` plus Gaussian noise, then encoded into the
//! color channel of the observed ball.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::{Color, InputFrame, LabeledSequence, ObservationSequence, SequenceLabel, Shape};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub fn cosine_point(t: f64) -> Point3D {
    Point3D {
        x: 12.0,
        y: 8.0 * (-t / 2.0) + 0.04,
        z: 4.0 * (2.0 * t).cos() + 0.10,
    }
}

pub fn square_point(t: f64) -> Point3D {
    let k = 16.0 / PI;
    let y = if t <= -3.0 * PI / 4.0 {
        0.0
    } else if t <= -PI / 4.0 {
        k * t + 12.0
    } else if t <= PI / 4.0 {
        8.0
    } else if t <= 3.0 * PI / 4.0 {
        -k * t + 12.0
    } else {
        0.0
    };
    let z = if t <= -3.0 * PI / 4.0 {
        k * t + 20.0
    } else if t <= -PI / 4.0 {
        14.0
    } else if t <= PI / 4.0 {
        -k * t + 10.0
    } else if t <= 3.0 * PI / 4.0 {
        6.0
    } else {
        k * t - 6.0
    };
    Point3D { x: 12.0, y, z }
}

pub fn circle_point(t: f64) -> Point3D {
    Point3D {
        x: 12.0,
        y: 4.0 * (2.0 * t).sin() + 0.04,
        z: 4.0 * (2.0 * t).cos() + 0.10,
    }
}

pub fn shape_point(shape: Shape, t: f64) -> Point3D {
    match shape {
        Shape::Cosine => cosine_point(t),
        Shape::Square => square_point(t),
        Shape::Circle => circle_point(t),
    }
}

/// Sample times `t_k = −π + (k+1)·(2π/n)·speed`, wrapped into `(−π, π]`.
pub fn sample_times(points_per_loop: usize, speed_factor: f64) -> Vec<f64> {
    (0..points_per_loop)
        .map(|k| {
            let turns = (k + 1) as f64 * speed_factor / points_per_loop as f64;
            // Fraction of a loop in (0, 1]; whole turns land on t = π.
            let mut frac = turns - turns.floor();
            if frac == 0.0 {
                frac = 1.0;
            }
            -PI + 2.0 * PI * frac
        })
        .collect()
}

/// Affine image projection of `(y, z)` with additive Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraModel {
    pub scale_y: f64,
    pub scale_z: f64,
    pub offset_y: f64,
    pub offset_z: f64,
    pub noise_sigma: f64,
}

impl Default for CameraModel {
    /// Maps the union of all three curves' `(y, z)` ranges onto `[0.1, 0.9]²`.
    fn default() -> Self {
        // y spans 0.04 ± 4π (cosine); z spans [−3.9, 14] (cosine/circle low, square high).
        let scale_y = 0.4 / (4.0 * PI);
        let scale_z = 0.8 / 17.9;
        Self {
            scale_y,
            scale_z,
            offset_y: 0.5 - 0.04 * scale_y,
            offset_z: 0.1 + 3.9 * scale_z,
            noise_sigma: 0.005,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        if self.scale_y == 0.0 || self.scale_z == 0.0 {
            return Err(Error::Config("camera scale must be nonzero".into()));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Config("noise_sigma must be finite and non-negative".into()));
        }
        Ok(())
    }

    pub fn project(&self, p: Point3D, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let (ny, nz) = if self.noise_sigma > 0.0 {
            let n = Normal::new(0.0, self.noise_sigma).expect("validated sigma");
            (n.sample(rng), n.sample(rng))
        } else {
            (0.0, 0.0)
        };
        (
            self.scale_y * p.y + self.offset_y + ny,
            self.scale_z * p.z + self.offset_z + nz,
        )
    }
}

pub fn project_to_image(p: Point3D, cam: &CameraModel, rng: &mut ChaCha8Rng) -> (f64, f64) {
    cam.project(p, rng)
}

/// Yellow fills the first coordinate pair, green the second; the other pair is zero.
pub fn encode_frame(point: (f64, f64), color: Color) -> InputFrame {
    match color {
        Color::Yellow => InputFrame::from(vec![point.0, point.1, 0.0, 0.0]),
        Color::Green => InputFrame::from(vec![0.0, 0.0, point.0, point.1]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub shapes: Vec<Shape>,
    pub colors: Vec<Color>,
    pub repeats: usize,
    pub points_per_loop: usize,
    pub speed_factor: f64,
    pub noise_sigma: f64,
    pub seed: u64,
    /// Projection used for every sequence; its own `noise_sigma` is ignored in favour of the field above.
    pub camera: CameraModel,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            shapes: vec![Shape::Cosine, Shape::Square],
            colors: vec![Color::Yellow, Color::Green],
            repeats: 5,
            points_per_loop: 20,
            speed_factor: 1.0,
            noise_sigma: 0.005,
            seed: 0,
            camera: CameraModel::default(),
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        if self.shapes.is_empty() || self.colors.is_empty() {
            return Err(Error::Data("dataset needs at least one shape and one color".into()));
        }
        if self.repeats == 0 {
            return Err(Error::Data("repeats must be at least 1".into()));
        }
        if self.points_per_loop < 2 {
            return Err(Error::Data("points_per_loop must be at least 2".into()));
        }
        if !(self.speed_factor > 0.0 && self.speed_factor.is_finite()) {
            return Err(Error::Data("speed_factor must be positive".into()));
        }
        self.camera().validate()
    }

    pub fn camera(&self) -> CameraModel {
        CameraModel {
            noise_sigma: self.noise_sigma,
            ..self.camera
        }
    }
}

/// Noise-free torso-frame points of one loop of `shape`.
pub fn sample_trajectory(shape: Shape, spec: &DatasetSpec) -> Result<Vec<Point3D>> {
    if !spec.shapes.contains(&shape) {
        return Err(Error::Data(format!("shape {shape} is not part of the dataset spec")));
    }
    Ok(sample_times(spec.points_per_loop, spec.speed_factor)
        .into_iter()
        .map(|t| shape_point(shape, t))
        .collect())
}

/// All `shape × color × repeat` sequences, in that nesting order.
pub fn make_dataset(spec: &DatasetSpec) -> Result<Vec<LabeledSequence>> {
    spec.validate()?;
    let cam = spec.camera();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.shapes.len() * spec.colors.len() * spec.repeats);
    for &shape in &spec.shapes {
        let points = sample_trajectory(shape, spec)?;
        for &color in &spec.colors {
            for repeat in 0..spec.repeats {
                let frames: Vec<InputFrame> = points
                    .iter()
                    .map(|&p| encode_frame(cam.project(p, &mut rng), color))
                    .collect();
                out.push(LabeledSequence {
                    label: SequenceLabel { shape, color, repeat },
                    sequence: ObservationSequence::from_frames(&frames)?,
                });
            }
        }
    }
    Ok(out)
}
