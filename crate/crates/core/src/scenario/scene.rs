use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pose_xyz_rpy, rotation_of, translation_of, OrientedBox, Pose};

/// Name of the shipped emergency-braking scene.
pub const AEB_SCENE: &str = "aeb_jumpscare";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    /// Full extents (length, width, height), m.
    Box { dimensions: [f64; 3] },
    Sphere { radius: f64 },
    /// Infinite plane through the pose origin, normal along the pose z axis.
    Plane,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub tag: String,
    pub shape: Shape,
    pub pose: Pose,
}

impl Obstacle {
    pub fn oriented_box(&self) -> Option<OrientedBox> {
        match self.shape {
            Shape::Box { dimensions } => Some(OrientedBox::from_pose(&self.pose, &Vector3::from(dimensions))),
            _ => None,
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        translation_of(&self.pose)
    }

    /// Plane normal (pose z axis); meaningful for planes only.
    pub fn normal(&self) -> Vector3<f64> {
        rotation_of(&self.pose).column(2).into_owned()
    }

    /// Vertical extent used by the detector's bounding-box model.
    pub fn height(&self) -> f64 {
        match self.shape {
            Shape::Box { dimensions } => dimensions[2],
            Shape::Sphere { radius } => 2.0 * radius,
            Shape::Plane => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Lane {
    /// Start point `[x, y]` in the world frame, m.
    pub start: [f64; 2],
    pub heading: f64,
    pub length: f64,
    /// Cruise set-point, m/s.
    pub target_speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub name: String,
    pub obstacles: Vec<Obstacle>,
    pub lane: Lane,
    /// `[x, y, heading]` of the ego body origin.
    pub ego_spawn: [f64; 3],
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        let planes = self
            .obstacles
            .iter()
            .filter(|o| matches!(o.shape, Shape::Plane))
            .count();
        if planes != 1 {
            return Err(Error::invalid(
                "scene.obstacles",
                format!("exactly one ground plane required, found {planes}"),
            ));
        }
        for o in &self.obstacles {
            let ok = match o.shape {
                Shape::Box { dimensions } => dimensions.iter().all(|d| *d > 0.0 && d.is_finite()),
                Shape::Sphere { radius } => radius > 0.0 && radius.is_finite(),
                Shape::Plane => true,
            };
            if !ok {
                return Err(Error::invalid(
                    format!("scene.obstacles[{}]", o.tag),
                    "dimensions must be > 0",
                ));
            }
        }
        if !(self.lane.target_speed > 0.0) {
            return Err(Error::invalid("scene.lane.target_speed", "must be > 0"));
        }
        if !(self.lane.length > 0.0) {
            return Err(Error::invalid("scene.lane.length", "must be > 0"));
        }
        Ok(())
    }

    /// Everything except the ground plane.
    pub fn solid_obstacles(&self) -> impl Iterator<Item = &Obstacle> {
        self.obstacles.iter().filter(|o| !matches!(o.shape, Shape::Plane))
    }

    pub fn ground(&self) -> Option<&Obstacle> {
        self.obstacles.iter().find(|o| matches!(o.shape, Shape::Plane))
    }
}

/// Declarative obstacle as written in a campaign config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleSpec {
    pub tag: String,
    pub shape: ShapeKind,
    /// Box extents (length, width, height), m.
    #[serde(default)]
    pub dimensions: Option<[f64; 3]>,
    /// Sphere radius, m.
    #[serde(default)]
    pub radius: Option<f64>,
    pub position: [f64; 3],
    /// Roll, pitch, yaw in radians.
    #[serde(default)]
    pub rpy: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeKind {
    Box,
    Sphere,
    Plane,
}

impl ObstacleSpec {
    pub fn build(&self) -> Result<Obstacle> {
        let missing = |key: &str| Error::Config(format!("obstacle `{}` needs `{key}`", self.tag));
        let shape = match self.shape {
            ShapeKind::Box => Shape::Box {
                dimensions: self.dimensions.ok_or_else(|| missing("dimensions"))?,
            },
            ShapeKind::Sphere => Shape::Sphere {
                radius: self.radius.ok_or_else(|| missing("radius"))?,
            },
            ShapeKind::Plane => Shape::Plane,
        };
        let [x, y, z] = self.position;
        let [r, p, yaw] = self.rpy;
        Ok(Obstacle {
            tag: self.tag.clone(),
            shape,
            pose: pose_xyz_rpy(x, y, z, r, p, yaw),
        })
    }
}

/// Scene section of a campaign config: either a shipped preset, an explicit
/// obstacle list, or a preset with overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub preset: Option<String>,
    pub name: Option<String>,
    pub obstacles: Option<Vec<ObstacleSpec>>,
    pub lane: Option<Lane>,
    pub ego_spawn: Option<[f64; 3]>,
}

impl SceneSpec {
    pub fn build(&self) -> Result<Scene> {
        let mut scene = match &self.preset {
            Some(name) => build_scene(name)?,
            None => {
                let lane = self
                    .lane
                    .ok_or_else(|| Error::Config("scene.lane is required without a preset".into()))?;
                if self.obstacles.is_none() {
                    return Err(Error::Config("scene.obstacles is required without a preset".into()));
                }
                Scene {
                    name: self.name.clone().unwrap_or_else(|| "custom".into()),
                    obstacles: Vec::new(),
                    lane,
                    ego_spawn: [lane.start[0], lane.start[1], lane.heading],
                }
            }
        };
        if let Some(name) = &self.name {
            scene.name = name.clone();
        }
        if let Some(obstacles) = &self.obstacles {
            scene.obstacles = obstacles.iter().map(ObstacleSpec::build).collect::<Result<_>>()?;
        }
        if let Some(lane) = self.lane {
            scene.lane = lane;
        }
        if let Some(spawn) = self.ego_spawn {
            scene.ego_spawn = spawn;
        }
        scene.validate()?;
        Ok(scene)
    }
}

/// Shipped scene presets.
pub fn build_scene(name: &str) -> Result<Scene> {
    match name {
        AEB_SCENE => Ok(Scene {
            name: AEB_SCENE.to_string(),
            obstacles: vec![
                Obstacle {
                    tag: "ground".into(),
                    shape: Shape::Plane,
                    pose: Pose::identity(),
                },
                Obstacle {
                    tag: "stalled_vehicle".into(),
                    shape: Shape::Box {
                        dimensions: [4.5, 1.8, 1.5],
                    },
                    pose: pose_xyz_rpy(300.0, 0.0, 0.75, 0.0, 0.0, 0.0),
                },
            ],
            lane: Lane {
                start: [0.0, 0.0],
                heading: 0.0,
                length: 500.0,
                target_speed: 11.0,
            },
            ego_spawn: [0.0, 0.0, 0.0],
        }),
        _ => Err(Error::UnknownScene(name.to_string())),
    }
}
