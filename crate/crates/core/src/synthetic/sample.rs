//! Uniform surface sampling with Poisson point counts.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use super::{BoxSpec, CylinderSpec, Primitive, Result, SceneSpec};
use crate::io::{Point3, PointCloud};
use crate::rng::{substream, tags};

type V3 = [f64; 3];

fn add(a: V3, b: V3) -> V3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn mul(a: V3, s: f64) -> V3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn cross(a: V3, b: V3) -> V3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: V3) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// A parallelogram `origin + s u + t v`, `s, t` in [0, 1].
#[derive(Debug, Clone, Copy)]
struct Patch {
    origin: V3,
    u: V3,
    v: V3,
}

impl Patch {
    fn area(&self) -> f64 {
        norm(cross(self.u, self.v))
    }
}

fn box_faces(b: &BoxSpec) -> [Patch; 5] {
    let (s, c) = b.yaw_deg.to_radians().sin_cos();
    let ex = [c, s, 0.0];
    let ey = [-s, c, 0.0];
    let ez = [0.0, 0.0, 1.0];
    let [hx, hy, hz] = [b.size[0] / 2.0, b.size[1] / 2.0, b.size[2] / 2.0];
    let corner =
        |a: f64, b2: f64, c2: f64| add(b.center, add(mul(ex, a), add(mul(ey, b2), mul(ez, c2))));
    let (u_x, u_y, u_z) = (mul(ex, 2.0 * hx), mul(ey, 2.0 * hy), mul(ez, 2.0 * hz));
    [
        Patch {
            origin: corner(hx, -hy, -hz),
            u: u_y,
            v: u_z,
        },
        Patch {
            origin: corner(-hx, -hy, -hz),
            u: u_y,
            v: u_z,
        },
        Patch {
            origin: corner(-hx, hy, -hz),
            u: u_x,
            v: u_z,
        },
        Patch {
            origin: corner(-hx, -hy, -hz),
            u: u_x,
            v: u_z,
        },
        Patch {
            origin: corner(-hx, -hy, hz),
            u: u_x,
            v: u_y,
        },
    ]
}

fn cylinder_area(c: &CylinderSpec) -> f64 {
    2.0 * std::f64::consts::PI * c.radius * norm(c.axis)
}

/// Sampled surface area in m².
pub fn primitive_area(p: &Primitive<'_>) -> f64 {
    match p {
        Primitive::Plane(s) => Patch {
            origin: s.origin,
            u: s.u,
            v: s.v,
        }
        .area(),
        Primitive::Box(b) => {
            if b.size.iter().any(|&v| !(v > 0.0)) {
                0.0
            } else {
                box_faces(b).iter().map(Patch::area).sum()
            }
        }
        Primitive::Cylinder(c) | Primitive::Rod(c) => {
            if c.radius > 0.0 {
                cylinder_area(c)
            } else {
                0.0
            }
        }
    }
}

fn poisson_count(rng: &mut impl Rng, mean: f64) -> usize {
    Poisson::new(mean)
        .map(|d| d.sample(rng) as usize)
        .unwrap_or(0)
}

fn sample_patch(rng: &mut impl Rng, patch: &Patch, density: f64, out: &mut Vec<Point3>) {
    let n = poisson_count(rng, density * patch.area());
    for _ in 0..n {
        let (s, t): (f64, f64) = (rng.gen(), rng.gen());
        out.push(Point3::from(add(
            patch.origin,
            add(mul(patch.u, s), mul(patch.v, t)),
        )));
    }
}

fn sample_cylinder(rng: &mut impl Rng, c: &CylinderSpec, density: f64, out: &mut Vec<Point3>) {
    let len = norm(c.axis);
    let dir = mul(c.axis, 1.0 / len);
    let helper = if dir[2].abs() < 0.9 {
        [0.0, 0.0, 1.0]
    } else {
        [1.0, 0.0, 0.0]
    };
    let e1 = {
        let v = cross(dir, helper);
        mul(v, 1.0 / norm(v))
    };
    let e2 = cross(dir, e1);
    let n = poisson_count(rng, density * cylinder_area(c));
    for _ in 0..n {
        let t: f64 = rng.gen();
        let theta = rng.gen::<f64>() * std::f64::consts::TAU;
        let (s, co) = theta.sin_cos();
        let radial = add(mul(e1, c.radius * co), mul(e2, c.radius * s));
        out.push(Point3::from(add(c.base, add(mul(c.axis, t), radial))));
    }
}

/// Reference cloud with scalars `primitive` (index) and `sample_density`
/// (points/m²). Each primitive draws from its own substream.
pub fn generate_reference(spec: &SceneSpec) -> Result<PointCloud> {
    spec.validate()?;
    let prims = spec.primitives();
    let parts: Vec<Vec<Point3>> = prims
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = substream(spec.scene.seed, &[tags::SCENE, i as u64]);
            let density = spec.scene.density * p.density_scale();
            let mut pts = Vec::new();
            match p {
                Primitive::Plane(s) => sample_patch(
                    &mut rng,
                    &Patch {
                        origin: s.origin,
                        u: s.u,
                        v: s.v,
                    },
                    density,
                    &mut pts,
                ),
                Primitive::Box(b) => {
                    for face in box_faces(b).iter() {
                        sample_patch(&mut rng, face, density, &mut pts);
                    }
                }
                Primitive::Cylinder(c) | Primitive::Rod(c) => {
                    sample_cylinder(&mut rng, c, density, &mut pts)
                }
            }
            pts
        })
        .collect();
    let mut points = Vec::new();
    let mut primitive = Vec::new();
    let mut sample_density = Vec::new();
    for (i, part) in parts.into_iter().enumerate() {
        let d = spec.scene.density * prims[i].density_scale();
        primitive.extend(std::iter::repeat(i as f64).take(part.len()));
        sample_density.extend(std::iter::repeat(d).take(part.len()));
        points.extend(part);
    }
    let cloud = PointCloud::new(points)
        .with_scalar("primitive", primitive)
        .and_then(|c| c.with_scalar("sample_density", sample_density))
        .expect("scalar lengths match");
    Ok(cloud)
}
