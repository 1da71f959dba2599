//! Exact nearest-neighbour search and the global XY raster.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use thiserror::Error;

use crate::io::{Point3, PointCloud};

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("cannot index an empty cloud")]
    EmptyCloud,
    #[error("k = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("cell size must be positive and finite, got {0}")]
    BadCellSize(f64),
}

pub type Result<T> = std::result::Result<T, SpatialError>;

const BUCKET: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub distance: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: u32,
        end: u32,
    },
    Split {
        axis: u8,
        value: f64,
        left: u32,
        right: u32,
    },
}

/// Balanced 3D kd-tree over the points of a cloud.
///
/// Results are ordered by (distance, index), so equidistant points always
/// come back lowest index first.
#[derive(Debug, Clone)]
pub struct KdTree {
    coords: Vec<[f64; 3]>,
    ids: Vec<u32>,
    nodes: Vec<Node>,
}

/// Max-heap entry ordered by (squared distance, index).
#[derive(Debug, Clone, Copy)]
struct Candidate {
    d2: f64,
    id: u32,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.d2.total_cmp(&other.d2).then(self.id.cmp(&other.id))
    }
}

#[inline]
fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    dx * dx + dy * dy + dz * dz
}

impl KdTree {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        Self::from_points(cloud.points())
    }

    pub fn from_points(points: &[Point3]) -> Result<Self> {
        if points.is_empty() {
            return Err(SpatialError::EmptyCloud);
        }
        assert!(
            points.len() < u32::MAX as usize,
            "cloud too large for u32 indices"
        );
        let mut ids: Vec<u32> = (0..points.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / BUCKET + 1);
        build_node(points, &mut ids, 0, &mut nodes);
        let coords = ids.iter().map(|&i| points[i as usize].to_array()).collect();
        Ok(Self { coords, ids, nodes })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// The `k` nearest points to `query`, ascending by distance.
    pub fn knn(&self, query: Point3, k: usize) -> Result<Vec<Neighbor>> {
        let mut out = Vec::with_capacity(k);
        self.knn_sq_into(query, k, &mut out)?;
        Ok(out
            .into_iter()
            .map(|(index, d2)| Neighbor {
                index,
                distance: d2.sqrt(),
            })
            .collect())
    }

    /// Same as [`KdTree::knn`] but fills `out` with (index, squared distance).
    pub fn knn_sq_into(&self, query: Point3, k: usize, out: &mut Vec<(usize, f64)>) -> Result<()> {
        let n = self.len();
        if k == 0 || k > n {
            return Err(SpatialError::KOutOfRange { k, n });
        }
        let q = query.to_array();
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, &q, k, &mut heap);
        out.clear();
        out.extend(
            heap.into_sorted_vec()
                .into_iter()
                .map(|c| (c.id as usize, c.d2)),
        );
        Ok(())
    }

    fn search(&self, node: usize, q: &[f64; 3], k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start as usize..end as usize {
                    let c = Candidate {
                        d2: dist2(&self.coords[slot], q),
                        id: self.ids[slot],
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis as usize] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near as usize, q, k, heap);
                // Equality still descends: an equidistant point with a lower
                // index may sit on the far side.
                if heap.len() < k || diff * diff <= heap.peek().unwrap().d2 {
                    self.search(far as usize, q, k, heap);
                }
            }
        }
    }

    pub fn nearest(&self, query: Point3) -> Neighbor {
        let q = query.to_array();
        let mut best = Candidate {
            d2: f64::INFINITY,
            id: u32::MAX,
        };
        self.search_nearest(0, &q, &mut best);
        Neighbor {
            index: best.id as usize,
            distance: best.d2.sqrt(),
        }
    }

    fn search_nearest(&self, node: usize, q: &[f64; 3], best: &mut Candidate) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for slot in start as usize..end as usize {
                    let c = Candidate {
                        d2: dist2(&self.coords[slot], q),
                        id: self.ids[slot],
                    };
                    if c < *best {
                        *best = c;
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis as usize] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search_nearest(near as usize, q, best);
                if diff * diff <= best.d2 {
                    self.search_nearest(far as usize, q, best);
                }
            }
        }
    }
}

fn build_node(points: &[Point3], ids: &mut [u32], offset: usize, nodes: &mut Vec<Node>) -> u32 {
    let me = nodes.len();
    if ids.len() <= BUCKET {
        nodes.push(Node::Leaf {
            start: offset as u32,
            end: (offset + ids.len()) as u32,
        });
        return me as u32;
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in ids.iter() {
        let p = points[i as usize].to_array();
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let axis = (0..3)
        .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])).then(b.cmp(&a)))
        .unwrap();
    let mid = ids.len() / 2;
    let coord = |i: u32| points[i as usize].to_array()[axis];
    ids.select_nth_unstable_by(mid, |&a, &b| coord(a).total_cmp(&coord(b)).then(a.cmp(&b)));
    let value = coord(ids[mid]);
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (lhs, rhs) = ids.split_at_mut(mid);
    let left = build_node(points, lhs, offset, nodes);
    let right = build_node(points, rhs, offset + mid, nodes);
    nodes[me] = Node::Split {
        axis: axis as u8,
        value,
        left,
        right,
    };
    me as u32
}

/// Per-cell z statistics of the XY raster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub count: usize,
    pub z_min: f64,
    pub z_max: f64,
    /// Sample standard deviation (divisor n-1), 0 for a single point.
    pub z_std: f64,
}

impl CellStats {
    pub fn delta_z(&self) -> f64 {
        self.z_max - self.z_min
    }
}

/// Global 2D accumulator over XY cells of fixed size.
#[derive(Debug, Clone)]
pub struct GridRaster2D {
    cell_size: f64,
    origin: (f64, f64),
    cells: HashMap<(i64, i64), CellStats>,
}

impl GridRaster2D {
    /// Raster anchored at the cloud's (min x, min y).
    pub fn build(cloud: &PointCloud, cell_size: f64) -> Result<Self> {
        let (lo, _) = cloud.bounds().ok_or(SpatialError::EmptyCloud)?;
        Self::build_with_origin(cloud, cell_size, (lo.x, lo.y))
    }

    pub fn build_with_origin(
        cloud: &PointCloud,
        cell_size: f64,
        origin: (f64, f64),
    ) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(SpatialError::BadCellSize(cell_size));
        }
        if cloud.is_empty() {
            return Err(SpatialError::EmptyCloud);
        }
        let mut raster = Self {
            cell_size,
            origin,
            cells: HashMap::new(),
        };
        // Welford accumulation: (count, mean, m2, min, max).
        let mut acc: HashMap<(i64, i64), (usize, f64, f64, f64, f64)> = HashMap::new();
        for p in cloud.points() {
            let e = acc.entry(raster.cell_of(p)).or_insert((
                0,
                0.0,
                0.0,
                f64::INFINITY,
                f64::NEG_INFINITY,
            ));
            e.0 += 1;
            let d = p.z - e.1;
            e.1 += d / e.0 as f64;
            e.2 += d * (p.z - e.1);
            e.3 = e.3.min(p.z);
            e.4 = e.4.max(p.z);
        }
        raster.cells = acc
            .into_iter()
            .map(|(cell, (count, _, m2, z_min, z_max))| {
                let z_std = if count > 1 {
                    (m2.max(0.0) / (count - 1) as f64).sqrt()
                } else {
                    0.0
                };
                (
                    cell,
                    CellStats {
                        count,
                        z_min,
                        z_max,
                        z_std,
                    },
                )
            })
            .collect();
        Ok(raster)
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn cell_of(&self, p: &Point3) -> (i64, i64) {
        (
            ((p.x - self.origin.0) / self.cell_size).floor() as i64,
            ((p.y - self.origin.1) / self.cell_size).floor() as i64,
        )
    }

    pub fn stats_at(&self, p: &Point3) -> Option<&CellStats> {
        self.cells.get(&self.cell_of(p))
    }

    pub fn cells(&self) -> impl Iterator<Item = (&(i64, i64), &CellStats)> {
        self.cells.iter()
    }

    pub fn occupied_cells(&self) -> usize {
        self.cells.len()
    }
}
