//! Binary bounding volume hierarchy over arbitrary primitives given by their boxes.
//!
//! Used for first-hit ray casts against layer triangles and for range queries over
//! skeleton edges inflated by the kernel support.

use crate::geom::{Aabb, Point, Vector};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
enum Node {
    Leaf { bounds: Aabb, start: usize, end: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl Node {
    fn bounds(&self) -> &Aabb {
        match self {
            Node::Leaf { bounds, .. } | Node::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<usize>,
    boxes: Vec<Aabb>,
}

impl Bvh {
    pub fn build(boxes: &[Aabb]) -> Self {
        let mut order: Vec<usize> = (0..boxes.len()).collect();
        let mut nodes = Vec::with_capacity(2 * boxes.len() / LEAF_SIZE + 1);
        if !boxes.is_empty() {
            let centers: Vec<Point> = boxes.iter().map(Aabb::center).collect();
            build_node(boxes, &centers, &mut order, 0, boxes.len(), &mut nodes);
        }
        Self {
            nodes,
            order,
            boxes: boxes.to_vec(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Calls `visit` for every primitive whose box contains `p`.
    pub fn for_each_containing(&self, p: &Point, mut visit: impl FnMut(usize)) {
        if self.nodes.is_empty() {
            return;
        }
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if !node.bounds().contains(p) {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &i in &self.order[start..end] {
                        if self.boxes[i].contains(p) {
                            visit(i);
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
    }

    /// Nearest hit along a ray. `hit` tests one primitive and returns its ray parameter.
    /// Ties in distance resolve to the lower primitive index.
    pub fn first_hit(
        &self,
        origin: &Point,
        dir: &Vector,
        t_max: f64,
        mut hit: impl FnMut(usize) -> Option<f64>,
    ) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = dir.map(|x| 1.0 / x);
        let mut best: Option<(usize, f64)> = None;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            let limit = best.map_or(t_max, |(_, t)| t);
            if node.bounds().ray_entry(origin, &inv, limit).is_none() {
                continue;
            }
            match *node {
                Node::Leaf { start, end, .. } => {
                    for &i in &self.order[start..end] {
                        if let Some(t) = hit(i) {
                            if t > t_max {
                                continue;
                            }
                            let better = match best {
                                None => true,
                                Some((bi, bt)) => t < bt || (t == bt && i < bi),
                            };
                            if better {
                                best = Some((i, t));
                            }
                        }
                    }
                }
                Node::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        best
    }
}

fn build_node(
    boxes: &[Aabb],
    centers: &[Point],
    order: &mut [usize],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let bounds = order[start..end]
        .iter()
        .fold(Aabb::empty(), |acc, &i| acc.join(&boxes[i]));
    let id = nodes.len();
    if end - start <= LEAF_SIZE {
        nodes.push(Node::Leaf { bounds, start, end });
        return id;
    }
    let cb = Aabb::from_points(order[start..end].iter().map(|&i| &centers[i]));
    let ext = cb.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
        centers[a][axis]
            .total_cmp(&centers[b][axis])
            .then(a.cmp(&b))
    });
    // placeholder, patched once children exist
    nodes.push(Node::Leaf { bounds, start, end });
    let left = build_node(boxes, centers, order, start, mid, nodes);
    let right = build_node(boxes, centers, order, mid, end, nodes);
    nodes[id] = Node::Inner { bounds, left, right };
    id
}
