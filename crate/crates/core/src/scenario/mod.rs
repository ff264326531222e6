//! Scenes, environmental conditions and test-matrix expansion.

mod conditions;
mod matrix;
mod scene;

pub use conditions::{
    derive_conditions, ConditionTables, Conditions, TimeOfDay, TimeTable, Weather, WeatherTable,
};
pub use matrix::{expand_matrix, make_batches, BatchPlan, TestCase, TestMatrix};
pub use scene::{build_scene, Lane, Obstacle, ObstacleSpec, Scene, SceneSpec, Shape, ShapeKind, AEB_SCENE};
