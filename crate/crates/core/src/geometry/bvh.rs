//! Bounding-volume hierarchy over scene primitives.
//!
//! Built top-down with binned surface-area-heuristic splits over primitive
//! centroids and at most [`LEAF_SIZE`] primitives per leaf. Nodes are stored depth-first: the
//! left child of an interior node immediately follows it.

use super::aabb::{ray_inverse, Aabb};
use super::bundle::RayCone;
use super::primitives::{OrientedBox, Sphere, Triangle};
use crate::math::Vec3;

pub const LEAF_SIZE: usize = 4;
const BINS: usize = 16;

#[derive(Clone, Debug)]
pub(crate) enum PrimShape {
    Sphere(Sphere),
    Box(OrientedBox),
    Triangle(Triangle),
}

/// One query primitive; meshes contribute one per triangle.
#[derive(Clone, Debug)]
pub(crate) struct Primitive {
    pub shape: PrimShape,
    pub id: u32,
}

impl Primitive {
    pub fn bounds(&self) -> Aabb {
        match &self.shape {
            PrimShape::Sphere(s) => s.bounds(),
            PrimShape::Box(b) => b.bounds(),
            PrimShape::Triangle(t) => t.bounds(),
        }
    }

    #[inline]
    pub fn closest_point(&self, q: &Vec3) -> Vec3 {
        match &self.shape {
            PrimShape::Sphere(s) => s.closest_surface_point(q),
            PrimShape::Box(b) => b.closest_surface_point(q),
            PrimShape::Triangle(t) => t.closest_point(q),
        }
    }

    #[inline]
    pub fn ray_hit(&self, origin: &Vec3, dir: &Vec3) -> Option<f64> {
        match &self.shape {
            PrimShape::Sphere(s) => s.ray_hit(origin, dir),
            PrimShape::Box(b) => b.ray_hit(origin, dir),
            PrimShape::Triangle(t) => t.ray_hit(origin, dir),
        }
    }

    /// Solid primitives only; triangles have no interior.
    pub fn contains(&self, q: &Vec3) -> bool {
        match &self.shape {
            PrimShape::Sphere(s) => s.contains(q),
            PrimShape::Box(b) => b.contains(q),
            PrimShape::Triangle(_) => false,
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    bounds: Aabb,
    /// Leaf: first primitive. Interior: index of the right child.
    offset: u32,
    /// Number of primitives; 0 marks an interior node.
    count: u32,
}

/// Primitive bounds grown slightly. The padding absorbs rounding in the
/// per-primitive queries, so box pruning never rejects an exact tie.
fn padded_bounds(p: &Primitive) -> Aabb {
    let b = p.bounds();
    let pad = 1e-9 * (1.0 + b.extent().amax() + b.center().amax());
    b.inflate(pad)
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Bvh {
    nodes: Vec<Node>,
}

/// Closest primitive found by a nearest-point query.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Nearest {
    pub point: Vec3,
    pub distance: f64,
    pub id: u32,
}

impl Bvh {
    /// Reorders `prims` into leaf order and builds the tree over them.
    pub fn build(prims: &mut Vec<Primitive>) -> Self {
        let mut bvh = Bvh::default();
        if prims.is_empty() {
            return bvh;
        }
        let items: Vec<(Aabb, Vec3)> = prims
            .iter()
            .map(|p| (padded_bounds(p), p.bounds().center()))
            .collect();
        let mut order: Vec<u32> = (0..prims.len() as u32).collect();
        bvh.nodes.reserve(2 * prims.len() / LEAF_SIZE + 1);
        bvh.build_node(&items, &mut order, 0);
        let mut taken: Vec<Option<Primitive>> = prims.drain(..).map(Some).collect();
        prims.extend(order.iter().map(|&i| taken[i as usize].take().unwrap()));
        bvh
    }

    fn build_node(&mut self, items: &[(Aabb, Vec3)], order: &mut [u32], start: usize) -> usize {
        let bounds = order
            .iter()
            .fold(Aabb::empty(), |acc, &i| acc.union(&items[i as usize].0));
        let index = self.nodes.len();
        self.nodes.push(Node {
            bounds,
            offset: start as u32,
            count: order.len() as u32,
        });
        if order.len() <= LEAF_SIZE {
            return index;
        }
        let mid = split(items, order);
        let (left, right) = order.split_at_mut(mid);
        self.build_node(items, left, start);
        let right_index = self.build_node(items, right, start + mid);
        self.nodes[index].offset = right_index as u32;
        self.nodes[index].count = 0;
        index
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nearest(&self, prims: &[Primitive], q: &Vec3) -> Option<Nearest> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<Nearest> = None;
        let mut best_d = f64::INFINITY;
        let mut stack: Vec<(u32, f64)> = Vec::with_capacity(64);
        stack.push((0, self.nodes[0].bounds.distance_squared(q)));
        while let Some((ni, lower)) = stack.pop() {
            if lower > best_d * best_d {
                continue;
            }
            let node = &self.nodes[ni as usize];
            if node.count > 0 {
                let first = node.offset as usize;
                for prim in &prims[first..first + node.count as usize] {
                    let point = prim.closest_point(q);
                    let distance = (q - point).norm();
                    let better = match &best {
                        None => true,
                        Some(b) => distance < b.distance || (distance == b.distance && prim.id < b.id),
                    };
                    if better {
                        best_d = distance;
                        best = Some(Nearest { point, distance, id: prim.id });
                    }
                }
            } else {
                let left = ni + 1;
                let right = node.offset;
                let dl = self.nodes[left as usize].bounds.distance_squared(q);
                let dr = self.nodes[right as usize].bounds.distance_squared(q);
                // pop nearer child first
                if dl <= dr {
                    stack.push((right, dr));
                    stack.push((left, dl));
                } else {
                    stack.push((left, dl));
                    stack.push((right, dr));
                }
            }
        }
        best
    }

    /// Primitives whose bounds the cone may reach, with a lower bound on
    /// their distance from the cone origin, in primitive order.
    pub fn cull(&self, prims: &[Primitive], cone: &RayCone, out: &mut Vec<(f64, u32)>) {
        out.clear();
        if self.nodes.is_empty() {
            return;
        }
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if !cone.may_hit(&node.bounds) {
                continue;
            }
            if node.count > 0 {
                let first = node.offset as usize;
                for (k, prim) in prims[first..first + node.count as usize].iter().enumerate() {
                    let b = padded_bounds(prim);
                    if cone.may_hit(&b) {
                        out.push((b.distance_squared(&cone.origin).sqrt(), (first + k) as u32));
                    }
                }
            } else {
                stack.push(node.offset);
                stack.push(ni + 1);
            }
        }
    }

    /// Cast rays from `cone.origin` against the candidates produced by
    /// [`cull`](Self::cull). Same result as [`raycast`](Self::raycast) for
    /// every ray inside the cone.
    pub fn raycast_candidates(
        prims: &[Primitive],
        candidates: &[(f64, u32)],
        origin: &Vec3,
        dir: &Vec3,
        max_range: f64,
    ) -> Option<(f64, u32)> {
        let mut best: Option<(f64, u32)> = None;
        let mut best_t = max_range;
        for &(lower, pi) in candidates {
            if lower > best_t {
                break;
            }
            let prim = &prims[pi as usize];
            if let Some(t) = prim.ray_hit(origin, dir) {
                if t > best_t {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bt, bid)) => t < bt || (t == bt && prim.id < bid),
                };
                if better {
                    best_t = t;
                    best = Some((t, prim.id));
                }
            }
        }
        best
    }

    /// Nearest hit with `t` in `(0, max_range]`; ties go to the lowest id.
    pub fn raycast(&self, prims: &[Primitive], origin: &Vec3, dir: &Vec3, max_range: f64) -> Option<(f64, u32)> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = ray_inverse(dir);
        let mut best: Option<(f64, u32)> = None;
        let mut best_t = max_range;
        // (node, entry distance) pairs; children are tested before pushing
        let mut stack: [(u32, f64); 64] = [(0, 0.0); 64];
        let mut top = 0usize;
        match self.nodes[0].bounds.ray_entry(origin, &inv, best_t) {
            Some(t) => stack[0] = (0, t),
            None => return None,
        }
        top += 1;
        while top > 0 {
            top -= 1;
            let (ni, entry) = stack[top];
            if entry > best_t {
                continue;
            }
            let node = &self.nodes[ni as usize];
            if node.count > 0 {
                let first = node.offset as usize;
                for prim in &prims[first..first + node.count as usize] {
                    if let Some(t) = prim.ray_hit(origin, dir) {
                        if t > best_t {
                            continue;
                        }
                        let better = match best {
                            None => true,
                            Some((bt, bid)) => t < bt || (t == bt && prim.id < bid),
                        };
                        if better {
                            best_t = t;
                            best = Some((t, prim.id));
                        }
                    }
                }
            } else {
                let left = ni + 1;
                let right = node.offset;
                let tl = self.nodes[left as usize].bounds.ray_entry(origin, &inv, best_t);
                let tr = self.nodes[right as usize].bounds.ray_entry(origin, &inv, best_t);
                match (tl, tr) {
                    (Some(a), Some(b)) => {
                        let (near, far) = if a <= b { ((left, a), (right, b)) } else { ((right, b), (left, a)) };
                        stack[top] = far;
                        stack[top + 1] = near;
                        top += 2;
                    }
                    (Some(a), None) => {
                        stack[top] = (left, a);
                        top += 1;
                    }
                    (None, Some(b)) => {
                        stack[top] = (right, b);
                        top += 1;
                    }
                    (None, None) => {}
                }
            }
        }
        best
    }

    pub fn contains(&self, prims: &[Primitive], q: &Vec3) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        let mut stack = vec![0u32];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni as usize];
            if !node.bounds.contains(q) {
                continue;
            }
            if node.count > 0 {
                let first = node.offset as usize;
                if prims[first..first + node.count as usize].iter().any(|p| p.contains(q)) {
                    return true;
                }
            } else {
                stack.push(node.offset);
                stack.push(ni + 1);
            }
        }
        false
    }

    /// Every primitive index appears in exactly one leaf.
    #[cfg(test)]
    pub fn leaf_coverage(&self, n: usize) -> Vec<usize> {
        let mut seen = vec![0usize; n];
        for node in self.nodes.iter().filter(|n| n.count > 0) {
            for i in node.offset..node.offset + node.count {
                seen[i as usize] += 1;
            }
        }
        seen
    }

    #[cfg(test)]
    pub fn max_leaf(&self) -> usize {
        self.nodes.iter().map(|n| n.count as usize).max().unwrap_or(0)
    }
}

fn half_area(b: &Aabb) -> f64 {
    let e = b.extent();
    e.x * e.y + e.y * e.z + e.z * e.x
}

/// Binned surface-area-heuristic split over all three axes. Falls back to
/// an exact median when every centroid lands in one bin.
fn split(items: &[(Aabb, Vec3)], order: &mut [u32]) -> usize {
    let n = order.len();
    let cb = Aabb::from_points(order.iter().map(|&i| &items[i as usize].1));
    let bin_of = |i: u32, axis: usize| -> usize {
        let lo = cb.min[axis];
        let extent = cb.max[axis] - lo;
        let c = items[i as usize].1[axis];
        (((c - lo) / extent * BINS as f64) as usize).min(BINS - 1)
    };
    // (cost, axis, last bin on the left)
    let mut best: Option<(f64, usize, usize)> = None;
    for axis in 0..3 {
        if !(cb.max[axis] - cb.min[axis] > 0.0) {
            continue;
        }
        let mut counts = [0usize; BINS];
        let mut boxes = [Aabb::empty(); BINS];
        for &i in order.iter() {
            let b = bin_of(i, axis);
            counts[b] += 1;
            boxes[b] = boxes[b].union(&items[i as usize].0);
        }
        // right-to-left sweep: cost contribution of bins k+1..
        let mut right_cost = [0.0; BINS];
        let (mut acc_box, mut acc_n) = (Aabb::empty(), 0usize);
        for k in (1..BINS).rev() {
            acc_box = acc_box.union(&boxes[k]);
            acc_n += counts[k];
            right_cost[k - 1] = if acc_n > 0 { half_area(&acc_box) * acc_n as f64 } else { 0.0 };
        }
        let (mut acc_box, mut acc_n) = (Aabb::empty(), 0usize);
        for k in 0..BINS - 1 {
            acc_box = acc_box.union(&boxes[k]);
            acc_n += counts[k];
            if acc_n == 0 || acc_n == n {
                continue;
            }
            let cost = half_area(&acc_box) * acc_n as f64 + right_cost[k];
            if best.map_or(true, |(c, _, _)| cost < c) {
                best = Some((cost, axis, k));
            }
        }
    }
    let Some((_, axis, best_k)) = best else {
        // all centroids share one bin: exact median by coordinate
        let axis = cb.longest_axis();
        order.sort_by(|&a, &b| {
            items[a as usize].1[axis]
                .total_cmp(&items[b as usize].1[axis])
                .then(a.cmp(&b))
        });
        return n / 2;
    };
    // Stable partition keeps the build deterministic.
    let (left, right): (Vec<u32>, Vec<u32>) = order.iter().partition(|&&i| bin_of(i, axis) <= best_k);
    let mid = left.len();
    order[..mid].copy_from_slice(&left);
    order[mid..].copy_from_slice(&right);
    mid
}
