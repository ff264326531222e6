//! Encoder, INS, camera and LIDAR models.

mod camera;
mod encoder;
mod ins;
mod lidar;
mod noise;

pub use camera::{
    camera_projection_matrix, camera_view_matrix, forward_camera_mount, project_point, CameraConfig,
    CameraIntrinsics, Projection,
};
pub use encoder::{encoder_read, EncoderConfig};
pub use ins::{ins_read, InsReading};
pub use lidar::{lidar_scan, ray_direction, scan_angles, LidarConfig, PointCloud};
pub use noise::{NoiseModel, NoiseSource};
