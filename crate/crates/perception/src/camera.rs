use std::collections::BTreeMap;

use nalgebra::Vector3;

use crate::{PerceptionError, Result};

/// Pinhole intrinsics plus the raw-depth scale of the sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    /// Raw depth units per metre (5000 for TUM RGB-D PNGs).
    pub depth_scale: f64,
}

impl Intrinsics {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: usize,
        height: usize,
        depth_scale: f64,
    ) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            depth_scale,
        };
        k.validate()?;
        Ok(k)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(PerceptionError::InvalidIntrinsics(m.to_string()));
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return bad("focal lengths must be positive");
        }
        if self.width == 0 || self.height == 0 {
            return bad("image size must be positive");
        }
        if !(self.depth_scale > 0.0 && self.depth_scale.is_finite()) {
            return bad("depth scale must be positive");
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return bad("principal point must be finite");
        }
        Ok(())
    }

    /// Freiburg 2 calibration of the TUM RGB-D benchmark.
    pub fn tum_freiburg2() -> Self {
        Self {
            fx: 520.9,
            fy: 521.0,
            cx: 325.1,
            cy: 249.7,
            width: 640,
            height: 480,
            depth_scale: 5000.0,
        }
    }

    /// Reads `fx fy cx cy width height depth_scale` from a key-value map;
    /// missing keys fall back to `defaults`.
    pub fn from_key_values(map: &BTreeMap<String, String>, defaults: Self) -> Result<Self> {
        let get = |key: &str, default: f64| -> Result<f64> {
            match map.get(key) {
                Some(v) => v.parse().map_err(|_| {
                    PerceptionError::InvalidIntrinsics(format!("{key} = {v:?} is not a number"))
                }),
                None => Ok(default),
            }
        };
        let k = Self {
            fx: get("fx", defaults.fx)?,
            fy: get("fy", defaults.fy)?,
            cx: get("cx", defaults.cx)?,
            cy: get("cy", defaults.cy)?,
            width: get("width", defaults.width as f64)? as usize,
            height: get("height", defaults.height as f64)? as usize,
            depth_scale: get("depth_scale", defaults.depth_scale)?,
        };
        k.validate()?;
        Ok(k)
    }

    /// Same camera at `1/factor` resolution.
    pub fn downscaled(&self, factor: usize) -> Self {
        let f = factor as f64;
        Self {
            fx: self.fx / f,
            fy: self.fy / f,
            cx: (self.cx + 0.5) / f - 0.5,
            cy: (self.cy + 0.5) / f - 0.5,
            width: self.width / factor,
            height: self.height / factor,
            depth_scale: self.depth_scale,
        }
    }

    /// Continuous pixel coordinates of a camera-frame point in front of the
    /// camera.
    pub fn project(&self, p: &Vector3<f64>) -> Option<(f64, f64)> {
        (p.z > 0.0).then(|| (self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy))
    }

    /// Nearest pixel of a projected point, if inside the image.
    pub fn pixel(&self, p: &Vector3<f64>) -> Option<(usize, usize)> {
        let (u, v) = self.project(p)?;
        let (u, v) = (u.round(), v.round());
        (u >= 0.0 && v >= 0.0 && (u as usize) < self.width && (v as usize) < self.height)
            .then_some((u as usize, v as usize))
    }

    /// Ray through pixel `(u, v)` scaled to unit depth.
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }
}

/// Depth map in raw sensor units, row-major; 0 marks a missing reading.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl DepthImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height, "depth buffer size");
        Self {
            width,
            height,
            values,
        }
    }

    /// Depth image from metric depths (NaN or non-positive → missing).
    pub fn from_metres(width: usize, height: usize, metres: &[f64], depth_scale: f64) -> Self {
        let values = metres
            .iter()
            .map(|&z| if z.is_finite() && z > 0.0 { z * depth_scale } else { 0.0 })
            .collect();
        Self::new(width, height, values)
    }

    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.values[v * self.width + u]
    }
}
