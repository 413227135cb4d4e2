//! Layer-by-layer tracing: per face of a support layer the point carrying the most
//! branches (the host) drops straight down-field; nearby points (followers) either
//! merge into the host's landing point or turn toward it by at most alpha.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SkeletonGraph, PLATFORM_LAYER};
use crate::bvh::Bvh;
use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::geom::{angle_between, ray_triangle_slack, rotate_toward, Aabb, Point, Vector};
use crate::mesh::TetMesh;
use crate::overhang_hull::{vertex_directions, OverhangSet};
use crate::slicer::{Layer, LayerStack};

/// Smallest ray parameter accepted as a hit, so a point never hits its own layer.
const RAY_EPS: f64 = 1e-9;

/// Barycentric slack of the retry after a clean miss.
const NEAR_MISS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceConfig {
    pub alpha_deg: f64,
    pub n_ring: usize,
    pub rng_seed: u64,
    /// When false every point drops on its own and branches never join.
    pub merging: bool,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            alpha_deg: 45.0,
            n_ring: 3,
            rng_seed: 7,
            merging: true,
        }
    }
}

impl TraceConfig {
    fn validate(&self) -> Result<()> {
        crate::overhang_hull::check_alpha(self.alpha_deg)?;
        if self.merging && self.n_ring == 0 {
            return Err(Error::InvalidParameter("n_ring must be at least 1".into()));
        }
        Ok(())
    }
}

/// Diagnostic counters of a trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraceStats {
    pub leaves: usize,
    /// Leaf rays that met no layer.
    pub missed_leaves: usize,
    /// Clamped follower rays that fell back to the face normal.
    pub fallbacks: usize,
    /// Branches whose rays met nothing; their last node became a root.
    pub dropped: usize,
}

/// A branch currently sitting on a support layer face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivePoint {
    pub node: usize,
    pub position: Point,
    pub face: usize,
    pub count: u64,
}

/// Ray targets below one support layer.
pub struct LayerTargets<'a> {
    pub support: Option<(&'a Layer, &'a Bvh)>,
    pub model: Option<(&'a Layer, &'a Bvh)>,
    /// Layer index the targets belong to; the platform is hit only below layer 0.
    pub layer: i64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Surface {
    Support,
    Model,
    Platform,
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    surface: Surface,
    face: usize,
    t: f64,
    point: Point,
}

pub(crate) fn layer_bvh(layer: &Layer) -> Bvh {
    let boxes: Vec<Aabb> = (0..layer.surface.faces().len())
        .map(|f| Aabb::from_points(&layer.surface.face_points(f)).inflated(1e-4))
        .collect();
    Bvh::build(&boxes)
}

fn cast_layer(layer: &Layer, bvh: &Bvh, origin: &Point, dir: &Vector) -> Option<(usize, f64)> {
    let cast = |slack: f64| {
        bvh.first_hit(origin, dir, f64::INFINITY, |f| {
            let [a, b, c] = layer.surface.face_points(f);
            ray_triangle_slack(origin, dir, &a, &b, &c, slack).filter(|&t| t > RAY_EPS)
        })
    };
    // points on the layer rim sit a rounding error outside the next layer's rim
    cast(1e-10).or_else(|| cast(NEAR_MISS))
}

impl LayerTargets<'_> {
    fn cast(&self, origin: &Point, dir: &Vector) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        let mut consider = |h: Hit| {
            if best.is_none_or(|b| h.t < b.t) {
                best = Some(h);
            }
        };
        if let Some((layer, bvh)) = self.support {
            if let Some((face, t)) = cast_layer(layer, bvh, origin, dir) {
                consider(Hit { surface: Surface::Support, face, t, point: origin + dir * t });
            }
        }
        if let Some((layer, bvh)) = self.model {
            if let Some((face, t)) = cast_layer(layer, bvh, origin, dir) {
                consider(Hit { surface: Surface::Model, face, t, point: origin + dir * t });
            }
        }
        if self.layer == PLATFORM_LAYER && dir.z < 0.0 {
            let t = -origin.z / dir.z;
            if t > RAY_EPS {
                let mut point = origin + dir * t;
                point.z = 0.0;
                consider(Hit { surface: Surface::Platform, face: usize::MAX, t, point });
            }
        }
        best
    }
}

/// Adds the landing node of a ray; returns the active point when it landed on the
/// next support layer.
fn land(graph: &mut SkeletonGraph, targets: &LayerTargets<'_>, hit: &Hit, from: usize, count: u64) -> (usize, Option<ActivePoint>) {
    let (down, field) = match hit.surface {
        Surface::Support => {
            let l = targets.support.unwrap().0;
            (Some(-l.face_direction(hit.face)), Some(l.iso_value))
        }
        Surface::Model => (None, targets.model.map(|(l, _)| l.iso_value)),
        Surface::Platform => (None, None),
    };
    let node = graph.add_node(hit.point, targets.layer, count, down, field);
    graph.edges.push((from, node));
    let active = (hit.surface == Surface::Support).then_some(ActivePoint {
        node,
        position: hit.point,
        face: hit.face,
        count,
    });
    (node, active)
}

/// Leaves and their first active points.
#[derive(Debug, Clone, Default)]
pub struct Seeds {
    pub graph: SkeletonGraph,
    /// Active points per support layer index.
    pub active: BTreeMap<usize, Vec<ActivePoint>>,
    pub stats: TraceStats,
}

/// Turns overhang vertices into leaves and shoots each along its `-d_p` into the
/// highest support layer below its field value.
pub fn seed_leaves(
    model: &TetMesh,
    model_field: &ScalarField,
    overhangs: &OverhangSet,
    dirs: &VectorField,
    layers: &LayerStack,
) -> Result<Seeds> {
    let support_bvh: Vec<Bvh> = layers.support_layers.iter().map(layer_bvh).collect();
    let model_bvh: Vec<Bvh> = layers.model_layers.iter().map(layer_bvh).collect();
    seed_with(model, model_field, overhangs, dirs, layers, &support_bvh, &model_bvh)
}

fn seed_with(
    model: &TetMesh,
    model_field: &ScalarField,
    overhangs: &OverhangSet,
    dirs: &VectorField,
    layers: &LayerStack,
    support_bvh: &[Bvh],
    model_bvh: &[Bvh],
) -> Result<Seeds> {
    let mut seeds = Seeds::default();
    for (v, d_p) in vertex_directions(model, overhangs, dirs) {
        let p = model.nodes()[v];
        let g = model_field.values()[v];
        let down = -d_p;
        let below = layers.iso_values.iter().rposition(|&iso| iso < g);
        let Some(top) = below else {
            seeds.stats.missed_leaves += 1;
            continue;
        };
        let mut placed = false;
        for j in (0..=top).rev() {
            let targets = LayerTargets {
                support: Some((&layers.support_layers[j], &support_bvh[j])),
                model: Some((&layers.model_layers[j], &model_bvh[j])),
                layer: j as i64,
            };
            if let Some(hit) = targets.cast(&p, &down) {
                let leaf = seeds.graph.add_node(p, j as i64 + 1, 1, Some(down), Some(g));
                let (_, active) = land(&mut seeds.graph, &targets, &hit, leaf, 1);
                if let Some(a) = active {
                    seeds.active.entry(j).or_default().push(a);
                }
                placed = true;
                break;
            }
        }
        if !placed {
            seeds.stats.missed_leaves += 1;
        } else {
            seeds.stats.leaves += 1;
        }
    }
    if seeds.stats.missed_leaves > 0 {
        log::warn!("{} leaf rays met no layer and were dropped", seeds.stats.missed_leaves);
    }
    Ok(seeds)
}

/// Moves every active point on `layer` one layer down. Returns the active points on
/// the next support layer.
pub fn trace_layer(
    graph: &mut SkeletonGraph,
    active: &[ActivePoint],
    layer: &Layer,
    targets: &LayerTargets<'_>,
    cfg: &TraceConfig,
    rng: &mut ChaCha8Rng,
    stats: &mut TraceStats,
) -> Vec<ActivePoint> {
    let alpha = cfg.alpha_deg.to_radians();
    let mut next: Vec<ActivePoint> = Vec::new();
    let mut consumed = vec![false; active.len()];
    let mut by_face: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, a) in active.iter().enumerate() {
        by_face.entry(a.face).or_default().push(i);
    }
    // faces with the heaviest branches first, ties by face index
    let mut order: Vec<(u64, usize)> = by_face
        .iter()
        .map(|(&f, pts)| (pts.iter().map(|&i| active[i].count).max().unwrap_or(0), f))
        .collect();
    order.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));

    for &(_, face) in &order {
        loop {
            let candidates: Vec<usize> = by_face[&face].iter().copied().filter(|&i| !consumed[i]).collect();
            if candidates.is_empty() {
                break;
            }
            let best = candidates.iter().map(|&i| active[i].count).max().unwrap();
            let tied: Vec<usize> = candidates.into_iter().filter(|&i| active[i].count == best).collect();
            let host = if tied.len() == 1 { tied[0] } else { tied[rng.gen_range(0..tied.len())] };
            consumed[host] = true;
            let h = active[host];
            let down = -layer.face_direction(h.face);
            let Some(hit) = targets.cast(&h.position, &down) else {
                log::debug!("host at {:?} dir {:?} missed layer {}", h.position, down, targets.layer);
                stats.dropped += 1;
                continue;
            };
            let (landing, host_active) = land(graph, targets, &hit, h.node, h.count);
            let mut landed_count = h.count;
            if cfg.merging {
                let ring = layer.surface.n_ring(face, cfg.n_ring);
                for f in ring {
                    let Some(members) = by_face.get(&f) else { continue };
                    for &i in members {
                        if consumed[i] {
                            continue;
                        }
                        consumed[i] = true;
                        let a = active[i];
                        let own = -layer.face_direction(a.face);
                        let to_host = hit.point - a.position;
                        let theta = if to_host.norm() > 1e-12 { angle_between(&own, &to_host) } else { 0.0 };
                        if theta <= alpha {
                            graph.edges.push((a.node, landing));
                            landed_count += a.count;
                            continue;
                        }
                        let clamped = rotate_toward(&own, &to_host, alpha);
                        let hit = targets.cast(&a.position, &clamped).or_else(|| {
                            stats.fallbacks += 1;
                            targets.cast(&a.position, &own)
                        });
                        match hit {
                            Some(hit) => {
                                if let (_, Some(p)) = land(graph, targets, &hit, a.node, a.count) {
                                    next.push(p);
                                }
                            }
                            None => {
                                log::debug!("follower at {:?} missed layer {}", a.position, targets.layer);
                                stats.dropped += 1
                            }
                        }
                    }
                }
            }
            graph.nodes[landing].branch_count = landed_count;
            if let Some(mut p) = host_active {
                p.count = landed_count;
                next.push(p);
            }
            if cfg.merging {
                break;
            }
        }
    }
    next
}

/// Traces all seeds down to the platform or the model.
pub fn trace_tree(seeds: Seeds, layers: &LayerStack, cfg: &TraceConfig) -> Result<(SkeletonGraph, TraceStats)> {
    cfg.validate()?;
    let support_bvh: Vec<Bvh> = layers.support_layers.iter().map(layer_bvh).collect();
    let model_bvh: Vec<Bvh> = layers.model_layers.iter().map(layer_bvh).collect();
    trace_with(seeds, layers, cfg, &support_bvh, &model_bvh)
}

fn trace_with(
    seeds: Seeds,
    layers: &LayerStack,
    cfg: &TraceConfig,
    support_bvh: &[Bvh],
    model_bvh: &[Bvh],
) -> Result<(SkeletonGraph, TraceStats)> {
    let Seeds {
        mut graph,
        active: mut pending,
        mut stats,
    } = seeds;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let top = pending.keys().next_back().copied();
    if let Some(top) = top {
        for i in (0..=top).rev() {
            let active = pending.remove(&i).unwrap_or_default();
            if active.is_empty() {
                continue;
            }
            let targets = if i == 0 {
                LayerTargets {
                    support: None,
                    model: None,
                    layer: PLATFORM_LAYER,
                }
            } else {
                LayerTargets {
                    support: Some((&layers.support_layers[i - 1], &support_bvh[i - 1])),
                    model: Some((&layers.model_layers[i - 1], &model_bvh[i - 1])),
                    layer: i as i64 - 1,
                }
            };
            let next = trace_layer(
                &mut graph,
                &active,
                &layers.support_layers[i],
                &targets,
                cfg,
                &mut rng,
                &mut stats,
            );
            if i > 0 && !next.is_empty() {
                pending.entry(i - 1).or_default().extend(next);
            }
        }
    }
    if stats.dropped > 0 {
        log::warn!("{} branches met no layer below and end in mid-air", stats.dropped);
    }
    graph.classify();
    Ok((graph, stats))
}

/// Seeds and traces in one call, sharing the layer indices.
pub(crate) fn trace_all(
    model: &TetMesh,
    model_field: &ScalarField,
    overhangs: &OverhangSet,
    dirs: &VectorField,
    layers: &LayerStack,
    cfg: &TraceConfig,
) -> Result<(SkeletonGraph, TraceStats)> {
    cfg.validate()?;
    let support_bvh: Vec<Bvh> = layers.support_layers.iter().map(layer_bvh).collect();
    let model_bvh: Vec<Bvh> = layers.model_layers.iter().map(layer_bvh).collect();
    let seeds = seed_with(model, model_field, overhangs, dirs, layers, &support_bvh, &model_bvh)?;
    trace_with(seeds, layers, cfg, &support_bvh, &model_bvh)
}
