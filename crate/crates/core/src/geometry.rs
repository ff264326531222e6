//! Rigid transforms and the analytic primitives used for ray casting,
//! distance-to-collision and interference checks.

use nalgebra::{Matrix3, Matrix4, Rotation3, Vector3};

/// Homogeneous rigid transform in SE(3), stored as a 4×4 matrix.
pub type Pose = Matrix4<f64>;

const EPS: f64 = 1e-12;

pub fn pose_from_parts(rotation: &Matrix3<f64>, translation: &Vector3<f64>) -> Pose {
    let mut m = Pose::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(rotation);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(translation);
    m
}

/// Pose from translation and intrinsic roll/pitch/yaw (applied as Rz·Ry·Rx).
pub fn pose_xyz_rpy(x: f64, y: f64, z: f64, roll: f64, pitch: f64, yaw: f64) -> Pose {
    let r = Rotation3::from_euler_angles(roll, pitch, yaw);
    pose_from_parts(r.matrix(), &Vector3::new(x, y, z))
}

pub fn rotation_of(pose: &Pose) -> Matrix3<f64> {
    pose.fixed_view::<3, 3>(0, 0).into_owned()
}

pub fn translation_of(pose: &Pose) -> Vector3<f64> {
    pose.fixed_view::<3, 1>(0, 3).into_owned()
}

/// Frobenius norm of `RᵀR − I` for the rotation block.
pub fn orthonormality_error(pose: &Pose) -> f64 {
    let r = rotation_of(pose);
    (r.transpose() * r - Matrix3::identity()).norm()
}

/// True when the rotation block is orthonormal, right-handed and the bottom
/// row is `[0 0 0 1]`.
pub fn is_rigid(pose: &Pose, tol: f64) -> bool {
    let bottom_ok = pose[(3, 0)].abs() <= tol
        && pose[(3, 1)].abs() <= tol
        && pose[(3, 2)].abs() <= tol
        && (pose[(3, 3)] - 1.0).abs() <= tol;
    bottom_ok && orthonormality_error(pose) < tol && rotation_of(pose).determinant() > 0.0
}

/// Closed-form inverse of a rigid transform: `[Rᵀ | −Rᵀt]`.
pub fn rigid_inverse(pose: &Pose) -> Pose {
    let rt = rotation_of(pose).transpose();
    let t = translation_of(pose);
    pose_from_parts(&rt, &(-(rt * t)))
}

pub fn transform_point(pose: &Pose, p: &Vector3<f64>) -> Vector3<f64> {
    rotation_of(pose) * p + translation_of(pose)
}

/// Oriented box described by its center, unit axes (columns) and half extents.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedBox {
    pub center: Vector3<f64>,
    pub axes: Matrix3<f64>,
    pub half: Vector3<f64>,
}

impl OrientedBox {
    /// Box of full `dimensions` (length, width, height) centered on `pose`.
    pub fn from_pose(pose: &Pose, dimensions: &Vector3<f64>) -> Self {
        OrientedBox {
            center: translation_of(pose),
            axes: rotation_of(pose),
            half: dimensions * 0.5,
        }
    }

    pub fn axis_aligned(center: Vector3<f64>, dimensions: Vector3<f64>) -> Self {
        OrientedBox {
            center,
            axes: Matrix3::identity(),
            half: dimensions * 0.5,
        }
    }

    pub fn vertices(&self) -> [Vector3<f64>; 8] {
        let mut out = [Vector3::zeros(); 8];
        for (i, v) in out.iter_mut().enumerate() {
            let sx = if i & 1 == 0 { -1.0 } else { 1.0 };
            let sy = if i & 2 == 0 { -1.0 } else { 1.0 };
            let sz = if i & 4 == 0 { -1.0 } else { 1.0 };
            *v = self.center
                + self.axes.column(0) * (sx * self.half.x)
                + self.axes.column(1) * (sy * self.half.y)
                + self.axes.column(2) * (sz * self.half.z);
        }
        out
    }

    /// The 12 edges as vertex index pairs into [`OrientedBox::vertices`].
    pub fn edges(&self) -> [(Vector3<f64>, Vector3<f64>); 12] {
        let v = self.vertices();
        const PAIRS: [(usize, usize); 12] = [
            (0, 1),
            (2, 3),
            (4, 5),
            (6, 7),
            (0, 2),
            (1, 3),
            (4, 6),
            (5, 7),
            (0, 4),
            (1, 5),
            (2, 6),
            (3, 7),
        ];
        PAIRS.map(|(a, b)| (v[a], v[b]))
    }

    /// Point expressed in the box frame (relative to the center).
    fn local(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.axes.transpose() * (p - self.center)
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let l = self.local(p);
        l.x.abs() <= self.half.x && l.y.abs() <= self.half.y && l.z.abs() <= self.half.z
    }

    pub fn distance_to_point(&self, p: &Vector3<f64>) -> f64 {
        let l = self.local(p);
        let dx = (l.x.abs() - self.half.x).max(0.0);
        let dy = (l.y.abs() - self.half.y).max(0.0);
        let dz = (l.z.abs() - self.half.z).max(0.0);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    /// Separating-axis test over the 15 candidate axes. Touching boxes count
    /// as overlapping.
    pub fn overlaps(&self, other: &OrientedBox) -> bool {
        let mut axes: Vec<Vector3<f64>> = Vec::with_capacity(15);
        for i in 0..3 {
            axes.push(self.axes.column(i).into_owned());
            axes.push(other.axes.column(i).into_owned());
        }
        for i in 0..3 {
            for j in 0..3 {
                let c = self.axes.column(i).cross(&other.axes.column(j));
                if c.norm_squared() > 1e-18 {
                    axes.push(c.normalize());
                }
            }
        }
        let d = other.center - self.center;
        axes.iter().all(|axis| {
            let ra = self.projected_radius(axis);
            let rb = other.projected_radius(axis);
            d.dot(axis).abs() <= ra + rb
        })
    }

    fn projected_radius(&self, axis: &Vector3<f64>) -> f64 {
        (0..3)
            .map(|i| self.half[i] * self.axes.column(i).dot(axis).abs())
            .sum()
    }

    /// Exact closest-point distance between two boxes, zero when they overlap.
    ///
    /// For separated convex polyhedra the closest pair is realised by a
    /// vertex against the other solid or by an edge pair, so the minimum over
    /// those candidates is exact.
    pub fn distance(&self, other: &OrientedBox) -> f64 {
        if self.overlaps(other) {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        for v in self.vertices() {
            best = best.min(other.distance_to_point(&v));
        }
        for v in other.vertices() {
            best = best.min(self.distance_to_point(&v));
        }
        let ea = self.edges();
        let eb = other.edges();
        for (p0, p1) in &ea {
            for (q0, q1) in &eb {
                best = best.min(segment_distance(p0, p1, q0, q1));
            }
        }
        best
    }

    /// Distance along the ray to the first boundary crossing at or beyond
    /// `t_min`, by the slab method in the box frame.
    pub fn ray_hit(&self, origin: &Vector3<f64>, dir: &Vector3<f64>, t_min: f64) -> Option<f64> {
        let o = self.local(origin);
        let d = self.axes.transpose() * dir;
        let mut t0 = f64::NEG_INFINITY;
        let mut t1 = f64::INFINITY;
        for i in 0..3 {
            if d[i].abs() < EPS {
                if o[i].abs() > self.half[i] {
                    return None;
                }
            } else {
                let a = (-self.half[i] - o[i]) / d[i];
                let b = (self.half[i] - o[i]) / d[i];
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                t0 = t0.max(lo);
                t1 = t1.min(hi);
                if t0 > t1 {
                    return None;
                }
            }
        }
        if t0 >= t_min {
            Some(t0)
        } else if t1 >= t_min {
            Some(t1)
        } else {
            None
        }
    }
}

/// Nearest ray parameter `t ≥ t_min` hitting a sphere.
pub fn ray_sphere(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    center: &Vector3<f64>,
    radius: f64,
    t_min: f64,
) -> Option<f64> {
    let oc = origin - center;
    let a = dir.dot(dir);
    let b = oc.dot(dir);
    let c = oc.dot(&oc) - radius * radius;
    let disc = b * b - a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let near = (-b - sq) / a;
    let far = (-b + sq) / a;
    if near >= t_min {
        Some(near)
    } else if far >= t_min {
        Some(far)
    } else {
        None
    }
}

/// Ray against an infinite plane through `point` with unit `normal`.
pub fn ray_plane(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    point: &Vector3<f64>,
    normal: &Vector3<f64>,
    t_min: f64,
) -> Option<f64> {
    let denom = dir.dot(normal);
    if denom.abs() < EPS {
        return None;
    }
    let t = (point - origin).dot(normal) / denom;
    (t >= t_min).then_some(t)
}

/// Minimum distance between segments `[p0,p1]` and `[q0,q1]`.
pub fn segment_distance(
    p0: &Vector3<f64>,
    p1: &Vector3<f64>,
    q0: &Vector3<f64>,
    q1: &Vector3<f64>,
) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);

    let (s, t) = if a <= EPS && e <= EPS {
        (0.0, 0.0)
    } else if a <= EPS {
        (0.0, (f / e).clamp(0.0, 1.0))
    } else {
        let c = d1.dot(&r);
        if e <= EPS {
            ((-c / a).clamp(0.0, 1.0), 0.0)
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s = if denom > EPS {
                ((b * f - c * e) / denom).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let mut t = (b * s + f) / e;
            if t < 0.0 {
                t = 0.0;
                s = (-c / a).clamp(0.0, 1.0);
            } else if t > 1.0 {
                t = 1.0;
                s = ((b - c) / a).clamp(0.0, 1.0);
            }
            (s, t)
        }
    };
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}
