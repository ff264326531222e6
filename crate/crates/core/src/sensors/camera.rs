use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pose_from_parts, rigid_inverse, Pose};

/// Frustum of a pinhole camera looking down its −z axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraIntrinsics {
    pub near: f64,
    pub far: f64,
    pub left: f64,
    pub right: f64,
    pub top: f64,
    pub bottom: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraIntrinsics {
    /// Roughly 60° horizontal field of view on a 1280×720 image.
    fn default() -> Self {
        CameraIntrinsics {
            near: 0.1,
            far: 500.0,
            left: -0.0577,
            right: 0.0577,
            top: 0.0325,
            bottom: -0.0325,
            width: 1280,
            height: 720,
        }
    }
}

impl CameraIntrinsics {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.near && self.near < self.far) {
            return Err(Error::invalid("camera.near", "must satisfy 0 < near < far"));
        }
        if !(self.left < self.right) {
            return Err(Error::invalid("camera.left", "must be < right"));
        }
        if !(self.bottom < self.top) {
            return Err(Error::invalid("camera.bottom", "must be < top"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invalid("camera.width", "image size must be nonzero"));
        }
        Ok(())
    }

    /// Image-height fraction per metre of object height at unit range.
    pub fn k_proj(&self) -> f64 {
        camera_projection_matrix(self)[(1, 1)] / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraConfig {
    pub intrinsics: CameraIntrinsics,
    /// Camera mount in the vehicle frame, `[x, y, z]`, m.
    pub mount_position: [f64; 3],
}

impl Default for CameraConfig {
    fn default() -> Self {
        CameraConfig {
            intrinsics: CameraIntrinsics::default(),
            mount_position: [1.8, 0.0, 0.4],
        }
    }
}

impl CameraConfig {
    pub fn mount(&self) -> Pose {
        forward_camera_mount(Vector3::from(self.mount_position))
    }
}

/// Mount that points the camera's −z axis along the vehicle's +x axis with
/// image up along +z.
pub fn forward_camera_mount(position: Vector3<f64>) -> Pose {
    let axes = Matrix3::from_columns(&[
        Vector3::new(0.0, -1.0, 0.0),
        Vector3::new(0.0, 0.0, 1.0),
        Vector3::new(-1.0, 0.0, 0.0),
    ]);
    pose_from_parts(&axes, &position)
}

/// World-to-camera transform.
pub fn camera_view_matrix(camera_pose: &Pose) -> Pose {
    rigid_inverse(camera_pose)
}

pub fn camera_projection_matrix(c: &CameraIntrinsics) -> Matrix4<f64> {
    let (n, f) = (c.near, c.far);
    let (l, r, t, b) = (c.left, c.right, c.top, c.bottom);
    Matrix4::new(
        2.0 * n / (r - l), 0.0, (r + l) / (r - l), 0.0,
        0.0, 2.0 * n / (t - b), (t + b) / (t - b), 0.0,
        0.0, 0.0, -(f + n) / (f - n), -2.0 * f * n / (f - n),
        0.0, 0.0, -1.0, 0.0,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    /// Pixel column, origin at the top-left corner.
    pub u: f64,
    /// Pixel row, growing downwards.
    pub v: f64,
    /// NDC depth, −1 at the near plane and +1 at the far plane.
    pub depth: f64,
}

/// Projects a world point to pixels; `None` when it falls outside the
/// view frustum.
pub fn project_point(
    point: &Vector3<f64>,
    view: &Matrix4<f64>,
    projection: &Matrix4<f64>,
    width: u32,
    height: u32,
) -> Option<Projection> {
    let clip = projection * view * Vector4::new(point.x, point.y, point.z, 1.0);
    if !(clip.w > 0.0) {
        return None;
    }
    let ndc = clip.xyz() / clip.w;
    const SLACK: f64 = 1e-12;
    if ndc.iter().any(|c| c.abs() > 1.0 + SLACK) {
        return None;
    }
    Some(Projection {
        u: (ndc.x + 1.0) / 2.0 * width as f64,
        v: (1.0 - ndc.y) / 2.0 * height as f64,
        depth: ndc.z,
    })
}
