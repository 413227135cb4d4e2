//! Worked examples of the individual stages, checked against brute-force or
//! closed-form references.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use curvsup::fields::{direction_field, extrapolate_field, field_from_height, fit_field, objective, objective_gradient, ScalarField, VectorField, Weighting};
use curvsup::implicit::{assign_radii, calibrate_iso, edge_field, polygonize, ImplicitSolid};
use curvsup::mesh::fixtures::{make_fixture, Fixture, FixtureKind};
use curvsup::mesh::io::{load_tet_mesh, save_tet_mesh};
use curvsup::overhang_hull::{assemble_support_domain, detect_overhangs, exclude_platform_faces, trace_trajectory, DescentConfig};
use curvsup::pipeline::{compute_sliced, run_pipeline, PipelineConfig, Timings};
use curvsup::skeleton::{seed_leaves, NodeKind, SkeletonGraph, SkeletonNode};
use curvsup::slicer::{extract_iso_surface, slice_compatible, SliceInput};
use curvsup::toolpath::{boundary_contours, boundary_distance, emit_waypoints, offset_contours, Extrusion, LayerPatch};
use curvsup::trim::{cut_edge, trim_surface};
use curvsup::{Point, TetMesh, TriMesh, Vector};
use curvsup_oracles as oracle;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p3(p: &Point) -> oracle::P3 {
    [p.x, p.y, p.z]
}

fn tris(m: &TriMesh) -> Vec<[oracle::P3; 3]> {
    (0..m.faces().len()).map(|f| m.face_points(f).map(|p| p3(&p))).collect()
}

/// Planar ring mesh between radii `r0` (0 for a disc) and `r1` at height `z`.
fn ring(r0: f64, r1: f64, rings: usize, per_ring: usize, z: f64) -> TriMesh {
    let mut v = Vec::new();
    let mut f = Vec::new();
    let first = if r0 == 0.0 {
        v.push(Point::new(0.0, 0.0, z));
        1
    } else {
        0
    };
    for i in first..=rings {
        let r = r0 + (r1 - r0) * i as f64 / rings as f64;
        for k in 0..per_ring {
            let a = 2.0 * PI * k as f64 / per_ring as f64;
            v.push(Point::new(r * a.cos(), r * a.sin(), z));
        }
    }
    let id = |i: usize, k: usize| first + (i - first) * per_ring + k % per_ring;
    if first == 1 {
        for k in 0..per_ring {
            f.push([0, id(1, k), id(1, k + 1)]);
        }
    }
    for i in first.max(1)..rings {
        for k in 0..per_ring {
            f.push([id(i, k), id(i + 1, k), id(i + 1, k + 1)]);
            f.push([id(i, k), id(i + 1, k + 1), id(i, k + 1)]);
        }
    }
    if first == 0 {
        for k in 0..per_ring {
            f.push([id(0, k), id(1, k), id(1, k + 1)]);
            f.push([id(0, k), id(1, k + 1), id(0, k + 1)]);
        }
    }
    TriMesh::new(v, f).unwrap()
}

fn square(half: f64, n: usize, z: f64) -> TriMesh {
    let mut v = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            v.push(Point::new(-half + 2.0 * half * i as f64 / n as f64, -half + 2.0 * half * j as f64 / n as f64, z));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut f = Vec::new();
    for j in 0..n {
        for i in 0..n {
            f.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            f.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    TriMesh::new(v, f).unwrap()
}

#[test]
fn fixture_meshes_survive_a_file_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    for kind in FixtureKind::ALL {
        let mesh = make_fixture(kind.name(), &[]).unwrap();
        let path = tmp.path().join(kind.name());
        save_tet_mesh(&mesh, &path).unwrap();
        let back = load_tet_mesh(&path).unwrap();
        assert_eq!(back.nodes(), mesh.nodes(), "{kind}");
        assert_eq!(back.tets(), mesh.tets(), "{kind}");
    }
}

#[test]
fn t_shape_overhangs_are_the_cantilever_undersides() {
    let mesh = make_fixture("t_shape", &[]).unwrap();
    let dirs = VectorField::uniform(Vector::z(), mesh.tet_count());
    let found = exclude_platform_faces(&mesh, &detect_overhangs(&mesh, &dirs, 45.0).unwrap(), 0.0);

    let nodes: Vec<oracle::P3> = mesh.nodes().iter().map(p3).collect();
    let mut expected = Vec::new();
    for (key, tri, _) in oracle::brute_boundary_faces(&nodes, mesh.tets()) {
        let t = tri.map(|v| mesh.nodes()[v]);
        let n = (t[1] - t[0]).cross(&(t[2] - t[0])).normalize();
        let low = t.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
        if n.z < -1.0 + 1e-12 && low > 1e-6 {
            expected.push(key);
        }
    }
    expected.sort_unstable();
    let mut got: Vec<[usize; 3]> = found
        .faces
        .iter()
        .map(|&f| {
            let mut k = mesh.boundary_faces()[f];
            k.sort_unstable();
            k
        })
        .collect();
    got.sort_unstable();
    assert!(!got.is_empty());
    assert_eq!(got, expected);
    let stem_height = 30.0;
    for &v in &found.vertices {
        assert!((mesh.nodes()[v].z - stem_height).abs() < 1e-9);
    }
}

#[test]
fn fitted_field_beats_the_zero_field_on_a_curl_rich_target() {
    let mesh = make_fixture("dome", &[]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let raw: Vec<Vector> = (0..mesh.tet_count())
        .map(|t| {
            let c = mesh.tet_centroid(t);
            // swirl about the vertical axis plus noise
            Vector::new(-c.y, c.x, 0.0) * 0.1 + Vector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
        .collect();
    let target = VectorField::from_raw(raw);
    let fitted = fit_field(&mesh, &target, (0, 0.0)).unwrap();
    let zero = vec![0.0; mesh.node_count()];
    let e_fit = objective(&mesh, fitted.values(), &target, Weighting::Uniform).unwrap();
    let e_zero = objective(&mesh, &zero, &target, Weighting::Uniform).unwrap();
    assert!(e_fit <= e_zero, "{e_fit} > {e_zero}");
    // the anchor only removes the constant, so the fit is stationary everywhere else
    let g = objective_gradient(&mesh, fitted.values(), &target, Weighting::Uniform).unwrap();
    let scale = e_zero.max(1.0);
    assert!(g.iter().skip(1).all(|d| d.abs() < 1e-6 * scale));
}

#[test]
fn box_height_field_points_straight_up() {
    let mesh = make_fixture("box", &[]).unwrap();
    let (field, _) = field_from_height(&mesh).unwrap();
    let dirs = direction_field(&mesh, &field).unwrap();
    for d in dirs.vectors() {
        assert!((d - Vector::z()).norm() < 1e-12, "{d:?}");
    }
}

fn padded_box() -> (TetMesh, TetMesh) {
    let m = Fixture::new("box").unwrap().set("pad", 5.0).unwrap().build().unwrap();
    (m.model, m.envelope)
}

#[test]
fn extrapolated_height_field_stays_linear_and_shifts_with_the_model() {
    let (model, envelope) = padded_box();
    let domain = assemble_support_domain(&model, &envelope).unwrap();
    let (support, ids) = domain.support_mesh().unwrap();
    let interface = domain.support_interface(&ids);
    let z = ScalarField::new(model.nodes().iter().map(|p| p.z).collect()).unwrap();
    let ext = extrapolate_field(&model, &z, &support, &interface).unwrap();
    for (p, v) in support.nodes().iter().zip(ext.values()) {
        assert!((v - p.z).abs() < 1e-6, "{v} at {p:?}");
    }
    let c = 3.25;
    let shifted = extrapolate_field(&model, &z.shifted(c), &support, &interface).unwrap();
    for (a, b) in ext.values().iter().zip(shifted.values()) {
        assert!((b - a - c).abs() < 1e-9);
    }
}

#[test]
fn envelope_node_order_does_not_change_the_partition() {
    let m = Fixture::new("t_shape").unwrap().build().unwrap();
    let base = assemble_support_domain(&m.model, &m.envelope).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut perm: Vec<usize> = (0..m.envelope.node_count()).collect();
    perm.shuffle(&mut rng);
    let mut nodes = vec![Point::origin(); perm.len()];
    for (old, &new) in perm.iter().enumerate() {
        nodes[new] = m.envelope.nodes()[old];
    }
    let tets = m.envelope.tets().iter().map(|t| t.map(|v| perm[v])).collect();
    let shuffled = TetMesh::new(nodes, tets).unwrap();
    let again = assemble_support_domain(&m.model, &shuffled).unwrap();

    let centroids = |mesh: &TetMesh, ids: &[usize]| -> BTreeSet<[i64; 3]> {
        ids.iter()
            .map(|&t| {
                let c = mesh.tet_centroid(t);
                [c.x, c.y, c.z].map(|v| (v * 1e6).round() as i64)
            })
            .collect()
    };
    assert_eq!(centroids(&m.envelope, &base.support_tet_ids), centroids(&shuffled, &again.support_tet_ids));
    assert_eq!(centroids(&m.envelope, &base.model_tet_ids), centroids(&shuffled, &again.model_tet_ids));
    for (m_node, &e) in again.node_map.iter().enumerate() {
        assert_eq!(shuffled.nodes()[e], m.model.nodes()[m_node]);
    }
}

#[test]
fn trajectories_descend_and_turn_gradually() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..50 {
        let alpha = rng.gen_range(5.0..85.0);
        let cfg = DescentConfig::new(alpha, rng.gen_range(0.1..1.0));
        let start = Point::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(1.0..30.0));
        let d_p = Vector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0));
        let traj = trace_trajectory(&start, &d_p, &cfg).unwrap();
        let limit = alpha.to_radians() / 20.0 + 1e-12;
        for w in traj.points.windows(2) {
            assert!(w[1].z <= w[0].z + 1e-12);
        }
        for w in traj.points.windows(3) {
            let (a, b) = ((w[1] - w[0]).normalize(), (w[2] - w[1]).normalize());
            assert!(a.dot(&b).clamp(-1.0, 1.0).acos() <= limit);
        }
        assert!(traj.points.last().unwrap().z >= 0.0);
    }
}

#[test]
fn iso_value_outside_the_field_gives_nothing() {
    let mesh = make_fixture("dome", &[]).unwrap();
    let (field, _) = field_from_height(&mesh).unwrap();
    let (lo, hi) = field.range();
    assert!(extract_iso_surface(&mesh, &field, hi + 1.0).unwrap().is_empty());
    assert!(extract_iso_surface(&mesh, &field, lo - 1.0).unwrap().is_empty());
}

#[test]
fn dome_sections_match_sampled_area() {
    let mesh = make_fixture("dome", &[]).unwrap();
    let (field, _) = field_from_height(&mesh).unwrap();
    let nodes: Vec<oracle::P3> = mesh.nodes().iter().map(p3).collect();
    let (lo, hi) = field.range();
    for (i, frac) in [0.1, 0.4, 0.75].into_iter().enumerate() {
        let z = lo + frac * (hi - lo);
        let area = extract_iso_surface(&mesh, &field, z).unwrap().area();
        let mc = oracle::monte_carlo_section_area(&nodes, mesh.tets(), z, 1_000_000, 41 + i as u64);
        assert!((area - mc.value).abs() <= 0.02 * mc.value, "z {z}: {area} vs {}", mc.value);
    }
}

#[test]
fn box_in_box_layers_tile_the_envelope_section() {
    let (model, envelope) = padded_box();
    let domain = assemble_support_domain(&model, &envelope).unwrap();
    let (support, ids) = domain.support_mesh().unwrap();
    let z = ScalarField::new(model.nodes().iter().map(|p| p.z).collect()).unwrap();
    let sz = extrapolate_field(&model, &z, &support, &domain.support_interface(&ids)).unwrap();
    let iso = [0.5, 3.0, 6.2, 9.5];
    let stack = slice_compatible(
        &SliceInput {
            model: &model,
            model_field: &z,
            support: &support,
            support_field: &sz,
            model_ids: &domain.node_map,
            support_ids: &ids,
        },
        &iso,
    )
    .unwrap();
    let full = 20.0 * 20.0;
    for (m, s) in stack.model_layers.iter().zip(&stack.support_layers) {
        assert!((m.surface.area() - 100.0).abs() < 1e-9);
        assert!((m.surface.area() + s.surface.area() - full).abs() < 1e-9 * full);
        let key = |a: &Point, b: &Point| {
            let mut k = [[a.x, a.y], [b.x, b.y]].map(|q| q.map(|v| (v * 1e9).round() as i64));
            k.sort_unstable();
            k
        };
        let edges = |t: &TriMesh| -> BTreeSet<[[i64; 2]; 2]> {
            t.boundary_edges().iter().map(|&(a, b)| key(&t.vertices()[a], &t.vertices()[b])).collect()
        };
        let hole = edges(&m.surface);
        let outer = edges(&s.surface);
        assert!(hole.is_subset(&outer));
        for v in m.surface.vertices() {
            assert!((v.z - m.iso_value).abs() < 1e-9);
        }
    }
}

#[test]
fn t_shape_leaves_land_where_a_ray_scan_does() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::for_fixture("t_shape");
    cfg.output_dir = tmp.path().to_path_buf();
    let s = compute_sliced(&cfg, &mut Timings::default()).unwrap();
    let seeds = seed_leaves(&s.model, &s.model_field, &s.overhangs, &s.dirs, &s.stack).unwrap();
    assert_eq!(seeds.stats.leaves, s.overhangs.vertices.len());
    assert_eq!(seeds.stats.missed_leaves, 0);

    let layers: Vec<Vec<[oracle::P3; 3]>> = s
        .stack
        .support_layers
        .iter()
        .zip(&s.stack.model_layers)
        .map(|(a, b)| {
            let mut t = tris(&a.surface);
            t.extend(tris(&b.surface));
            t
        })
        .collect();
    let (mut landed, mut on_model) = (0, 0);
    for &(leaf, landing) in &seeds.graph.edges {
        let p = seeds.graph.nodes[leaf].position;
        let g = p.z;
        let top = s.stack.iso_values.iter().rposition(|&iso| iso < g).unwrap();
        let hit = (0..=top).rev().find_map(|j| {
            oracle::brute_first_hit(p3(&p), [0.0, 0.0, -1.0], &layers[j], 1e-9, 1e-6).map(|h| (j, h.1))
        });
        let (j, t) = hit.expect("ray scan found no layer");
        let q = seeds.graph.nodes[landing].position;
        assert_eq!(seeds.graph.nodes[landing].layer, j as i64);
        assert!((q.z - (p.z - t)).abs() < 1e-7 && (q.x - p.x).abs() < 1e-7 && (q.y - p.y).abs() < 1e-7);
        assert_eq!(j, top, "cantilever vertex skipped its first layer");
        if seeds.graph.nodes[landing].down_dir.is_none() {
            // grazing rays along the stem wall stop on the model layer
            assert!((p.x.abs() - 5.0).abs() < 1e-9, "{p:?}");
            on_model += 1;
        }
        landed += 1;
    }
    assert_eq!(landed, s.overhangs.vertices.len());
    let total: usize = seeds.active.values().map(|v| v.len()).sum();
    assert_eq!(total + on_model, landed);
    assert!(total > on_model);
}

#[test]
fn branch_counts_are_conserved_and_edges_are_covered() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig::for_fixture("t_shape");
    cfg.output_dir = tmp.path().to_path_buf();
    let out = run_pipeline(&cfg).unwrap();
    let g = &out.skeleton;
    let leaves: u64 = g.nodes.iter().filter(|n| n.kind == NodeKind::Leaf).map(|n| n.branch_count).sum();
    let roots: u64 = g.nodes.iter().filter(|n| n.kind == NodeKind::Root).map(|n| n.branch_count).sum();
    assert!(leaves > 0);
    assert_eq!(leaves, roots);

    let r = cfg.support_radius();
    let layers: Vec<Vec<[oracle::P3; 3]>> = out.trimmed.iter().map(|t| tris(&t.surface)).collect();
    let iso = &out.sliced.stack.iso_values;
    for &(a, b) in &g.edges {
        let m = Point::from((g.nodes[a].position.coords + g.nodes[b].position.coords) * 0.5);
        let nearest = (0..iso.len())
            .min_by(|&i, &j| (iso[i] - m.z).abs().total_cmp(&(iso[j] - m.z).abs()))
            .unwrap();
        let d = layers[nearest]
            .iter()
            .map(|t| oracle::point_triangle_distance(p3(&m), t))
            .fold(f64::INFINITY, f64::min);
        assert!(d <= r, "edge midpoint {m:?} is {d} from layer {nearest}");
    }
}

#[test]
fn short_segment_acts_like_a_point_source() {
    let r = 8.0;
    let l = 0.1 * r;
    let (a, b) = (Point::new(0.0, 0.0, -l / 2.0), Point::new(0.0, 0.0, l / 2.0));
    for d in [0.0, 1.0, 3.0, 5.0] {
        let p = Point::new(d, 0.0, 0.0);
        let f = edge_field(&p, &a, &b, 1.5, r).unwrap();
        let point = 1.5 * l * (1.0 - d * d / (r * r)).powi(2);
        assert!((f - point).abs() <= 0.01 * point, "d {d}: {f} vs {point}");
    }
}

#[test]
fn strut_is_positive_on_its_axis_and_exactly_minus_iso_at_the_support() {
    let iso = calibrate_iso(1.0, 8.0, 2.0).unwrap();
    let solid = ImplicitSolid::from_segments(&[(Point::new(0.0, 0.0, -50.0), Point::new(0.0, 0.0, 50.0), 1.0)], 8.0, iso).unwrap();
    assert!(solid.field_value(&Point::origin()) > 0.0);
    for a in [0.0, 1.0, 2.5] {
        let p = Point::new(8.0 * f64::cos(a), 8.0 * f64::sin(a), 3.0);
        assert_eq!(solid.field_value(&p), -iso);
    }
    let rho = oracle::bisect(|x| solid.field_value(&Point::new(x, 0.0, 0.0)), 0.0, 8.0);
    assert!((rho.value - 2.0).abs() < 1e-4, "{}", rho.value);
}

fn node(x: f64, z: f64, count: u64, kind: NodeKind) -> SkeletonNode {
    SkeletonNode {
        position: Point::new(x, 0.0, z),
        layer: 0,
        branch_count: count,
        kind,
        down_dir: None,
        field_value: None,
    }
}

#[test]
fn four_leaves_double_the_trunk() {
    let mut g = SkeletonGraph::default();
    for i in 0..4 {
        g.nodes.push(node(i as f64, 20.0, 1, NodeKind::Leaf));
    }
    g.nodes.push(node(1.5, 10.0, 4, NodeKind::Internal));
    g.nodes.push(node(1.5, 0.0, 4, NodeKind::Root));
    g.edges = vec![(0, 4), (1, 4), (2, 4), (3, 4), (4, 5)];
    let w = assign_radii(&g, 1.0);
    assert_eq!(&w[..4], &[1.0; 4]);
    assert!((w[4] - 2.0).abs() < 1e-15);
    let sq: f64 = w[..4].iter().map(|x| x * x).sum();
    assert!((sq - w[4] * w[4]).abs() < 1e-12);
}

fn y_junction() -> ImplicitSolid {
    let iso = calibrate_iso(1.0, 8.0, 2.0).unwrap();
    let hub = Point::new(0.0, 0.0, 10.0);
    ImplicitSolid::from_segments(
        &[
            (Point::new(-8.0, 0.0, 22.0), hub, 1.0),
            (Point::new(8.0, 0.0, 22.0), hub, 1.0),
            (hub, Point::new(0.0, 0.0, 0.0), 2f64.sqrt()),
        ],
        8.0,
        iso,
    )
    .unwrap()
}

#[test]
fn y_junction_polygonizes_to_one_sphere() {
    let m = polygonize(&y_junction(), 1.0).unwrap();
    assert!(m.is_closed() && m.is_edge_manifold());
    assert_eq!(m.face_components(), 1);
    assert_eq!(m.euler_characteristic(), 2);
    assert!(m.enclosed_volume() > 0.0);
}

#[test]
fn refined_polygonization_stays_within_a_cell() {
    let solid = y_junction();
    let cell = 1.0;
    let coarse = polygonize(&solid, cell).unwrap();
    let fine = polygonize(&solid, cell / 2.0).unwrap();
    let a: Vec<oracle::P3> = coarse.vertices().iter().map(p3).collect();
    let b: Vec<oracle::P3> = fine.vertices().iter().map(p3).collect();
    let h = oracle::directed_hausdorff(&a, &tris(&fine)).max(oracle::directed_hausdorff(&b, &tris(&coarse)));
    assert!(h < cell, "Hausdorff distance {h}");
}

#[test]
fn symmetric_crossing_is_cut_at_the_midpoint() {
    let iso = calibrate_iso(1.0, 8.0, 2.0).unwrap();
    let solid = ImplicitSolid::from_segments(&[(Point::new(0.0, 0.0, -100.0), Point::new(0.0, 0.0, 100.0), 1.0)], 8.0, iso).unwrap();
    let (a, b) = (Point::new(1.9, 0.0, 0.0), Point::new(2.1, 0.0, 0.0));
    let p = cut_edge(&solid, &a, 1.0, &b, -1.0).unwrap();
    assert!((p - Point::new(2.0, 0.0, 0.0)).norm() < 1e-9, "{p:?}");
}

#[test]
fn vanishing_iso_keeps_a_covered_layer_whole() {
    let solid = ImplicitSolid::from_segments(&[(Point::new(0.0, 0.0, -20.0), Point::new(0.0, 0.0, 20.0), 1.0)], 8.0, 1e-12).unwrap();
    let layer = square(3.0, 12, 1.0);
    let t = trim_surface(&layer, &solid, 0, 1.0).unwrap();
    // same triangles, possibly renumbered
    let keyed = |m: &TriMesh| -> BTreeSet<[[i64; 3]; 3]> {
        (0..m.faces().len())
            .map(|f| {
                let mut k = m.face_points(f).map(|p| [p.x, p.y, p.z].map(|v| (v * 1e9).round() as i64));
                let first = (0..3).min_by_key(|&i| k[i]).unwrap();
                k.rotate_left(first);
                k
            })
            .collect()
    };
    assert_eq!(t.surface.faces().len(), layer.faces().len());
    assert_eq!(keyed(&t.surface), keyed(&layer));
}

#[test]
fn annulus_has_two_boundary_loops() {
    let patch = LayerPatch::from_surface(ring(2.0, 5.0, 6, 48, 0.0));
    let loops = boundary_contours(&patch);
    assert_eq!(loops.len(), 2);
    assert!(loops.iter().all(|c| c.closed));
    let empty = LayerPatch::from_surface(TriMesh::default());
    assert!(boundary_contours(&empty).is_empty());
    assert!(offset_contours(&empty, 1.0).unwrap().is_empty());
}

#[test]
fn wide_spacing_leaves_no_interior_loops() {
    let patch = LayerPatch::from_surface(ring(0.0, 5.0, 20, 64, 0.0));
    assert!(offset_contours(&patch, 6.0).unwrap().is_empty());
}

#[test]
fn interior_contours_sit_at_their_offset_distance() {
    let mesh = ring(0.0, 5.0, 20, 64, 0.0);
    let max_edge = (0..mesh.faces().len())
        .flat_map(|f| {
            let p = mesh.face_points(f);
            (0..3).map(move |k| (p[(k + 1) % 3] - p[k]).norm())
        })
        .fold(0.0, f64::max);
    let dist = boundary_distance(&mesh);
    for (v, d) in mesh.vertices().iter().zip(&dist) {
        // exact distance to the rim is 5 - |p|
        assert!((d - (5.0 - v.coords.norm())).abs() <= max_edge / 2.0, "{d} at {v:?}");
    }
    let patch = LayerPatch::from_surface(mesh);
    let spacing = 1.0;
    let loops = offset_contours(&patch, spacing).unwrap();
    assert_eq!(loops.len(), 4);
    for c in &loops {
        let mean = c.points.iter().map(|p| 5.0 - p.coords.norm()).sum::<f64>() / c.len() as f64;
        let k = (mean / spacing).round();
        for p in &c.points {
            let d = 5.0 - p.coords.norm();
            assert!((d - k * spacing).abs() <= max_edge / 2.0, "{d} vs {}", k * spacing);
        }
    }
}

#[test]
fn no_contours_make_an_empty_program() {
    let p = emit_waypoints(&[], Extrusion::default());
    assert!(p.waypoints.is_empty());
    let p = emit_waypoints(&[Vec::new(), Vec::new()], Extrusion::default());
    assert!(p.waypoints.is_empty());
    assert_eq!(p.total_extrusion(), 0.0);
}
