//! Acceptance criteria. Each test prints one `criterion N: PASS|FAIL` line with its
//! runtime and fails when the check or its time budget is missed.

use std::collections::{BTreeMap, HashSet};
use std::path::PathBuf;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use curvsup::fields::{field_from_height, fit_field, objective, objective_gradient, VectorField, Weighting};
use curvsup::geom::angle_between;
use curvsup::implicit::{assign_radii, calibrate_iso, edge_field, skeleton_segments, ImplicitSolid};
use curvsup::mesh::fixtures::{make_fixture, FixtureKind};
use curvsup::overhang_hull::{detect_overhangs, is_overhang};
use curvsup::pipeline::{compute_sliced, implicit_params, run_pipeline, PipelineConfig, RunOutput, Timings};
use curvsup::skeleton::{NodeKind, SkeletonGraph};
use curvsup::slicer::Layer;
use curvsup::toolpath::{emit_waypoints, format_waypoints, parse_waypoints, Contour, Extrusion};
use curvsup::trim::{classify_face, refine_surface, trim_edge_length, trim_layer, trim_surface};
use curvsup::{Point, TetMesh, TriMesh, Vector};
use curvsup_oracles as oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p3(p: &Point) -> oracle::P3 {
    [p.x, p.y, p.z]
}

fn v3(v: &Vector) -> oracle::P3 {
    [v.x, v.y, v.z]
}

fn verdict(n: u32, what: &str, budget: Option<Duration>, elapsed: Duration, ok: bool, detail: String) {
    let in_time = budget.is_none_or(|b| elapsed < b);
    let status = if ok && in_time { "PASS" } else { "FAIL" };
    let budget_txt = budget.map_or(String::new(), |b| format!(" (budget {:.0} s)", b.as_secs_f64()));
    println!(
        "criterion {n}: {status} {what}: {detail}; {:.2} s{budget_txt}",
        elapsed.as_secs_f64()
    );
    assert!(ok, "criterion {n} failed: {detail}");
    assert!(in_time, "criterion {n} exceeded its time budget: {:.2} s", elapsed.as_secs_f64());
}

const OVERHANG_FIXTURES: [&str; 3] = ["t_shape", "dome", "bridge_slab"];

struct Runs {
    runs: Vec<(String, RunOutput, PathBuf)>,
    elapsed: Duration,
    _dir: tempfile::TempDir,
}

/// Default-parameter pipeline runs of the overhang fixtures, shared by the tests.
fn runs() -> &'static Runs {
    static RUNS: OnceLock<Runs> = OnceLock::new();
    RUNS.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let t = Instant::now();
        let runs = OVERHANG_FIXTURES
            .iter()
            .map(|name| {
                let mut cfg = PipelineConfig::for_fixture(name);
                cfg.output_dir = dir.path().join(name);
                let out = run_pipeline(&cfg).unwrap();
                (name.to_string(), out, cfg.output_dir)
            })
            .collect();
        Runs {
            runs,
            elapsed: t.elapsed(),
            _dir: dir,
        }
    })
}

#[test]
fn criterion_01_volume_reduction() {
    let r = runs();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, out, _) in &r.runs {
        let rep = &out.report;
        ok &= rep.trimmed_support_volume < rep.envelope_support_volume;
        if name == "t_shape" {
            ok &= rep.reduction_percent >= 30.0;
        }
        parts.push(format!(
            "{name} {:.1} -> {:.1} mm^3 ({:.1}%)",
            rep.envelope_support_volume, rep.trimmed_support_volume, rep.reduction_percent
        ));
    }
    verdict(1, "support volume reduction", Some(Duration::from_secs(60)), r.elapsed, ok, parts.join(", "));
}

#[test]
fn criterion_02_kernel_vs_quadrature() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut nonzero = 0;
    for _ in 0..1000 {
        let support = rng.gen_range(0.5..10.0);
        let pt = |rng: &mut ChaCha8Rng| Vector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let a = Point::from(pt(&mut rng) * support * 2.0);
        let mut b = Point::from(pt(&mut rng) * support * 2.0);
        if (b - a).norm() < 1e-3 {
            b.x += support;
        }
        // query points mostly within reach of the edge, some beyond it
        let along = rng.gen_range(-0.2..1.2);
        let q = a + (b - a) * along + pt(&mut rng) * support;
        let w = rng.gen_range(0.1..3.0);
        let closed = edge_field(&q, &a, &b, w, support).unwrap();
        let quad = oracle::quadrature_edge_field(p3(&q), p3(&a), p3(&b), w, support, 10_000);
        // values below this floor are zero for any practical purpose
        let floor = 1e-12 * w * support;
        let rel = (closed - quad.value).abs() / quad.value.abs().max(floor);
        if quad.value.abs() > floor {
            nonzero += 1;
        }
        worst = worst.max(rel);
    }
    verdict(
        2,
        "closed-form kernel vs quadrature",
        Some(Duration::from_secs(5)),
        t.elapsed(),
        worst < 1e-6 && nonzero > 500,
        format!("max relative error {worst:.2e} over 1000 configurations ({nonzero} non-zero)"),
    );
}

fn junction_check(g: &SkeletonGraph, r_leaf: f64) -> (usize, f64, bool) {
    let radii = assign_radii(g, r_leaf);
    let recount = oracle::dfs_recount(g.nodes.len(), &g.edges);
    let mut counts_ok = g.nodes.iter().zip(&recount).all(|(n, &c)| n.branch_count == c);
    let out = g.out_edges();
    let inc = g.in_edges();
    let mut junctions = 0;
    let mut worst: f64 = 0.0;
    for n in 0..g.nodes.len() {
        if inc[n].is_empty() {
            continue;
        }
        let branches: u64 = inc[n].iter().map(|&e| g.nodes[g.edges[e].0].branch_count).sum();
        counts_ok &= branches == g.nodes[n].branch_count;
        if let Some(e) = out[n] {
            if inc[n].len() >= 2 {
                junctions += 1;
            }
            let trunk = radii[e] * radii[e];
            let sum: f64 = inc[n].iter().map(|&e| radii[e] * radii[e]).sum();
            worst = worst.max((trunk - sum).abs() / sum);
        }
    }
    (junctions, worst, counts_ok)
}

#[test]
fn criterion_03_radius_rule() {
    let r = runs();
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, out, _) in &r.runs {
        let (junctions, worst, counts_ok) = junction_check(&out.skeleton, PipelineConfig::default().r_leaf);
        ok &= counts_ok && worst < 1e-12;
        parts.push(format!("{name} {junctions} junctions, max squared-radius mismatch {worst:.1e}"));
    }
    verdict(3, "squared radii add up at junctions", Some(Duration::from_secs(1)), t.elapsed(), ok, parts.join(", "));
}

#[test]
fn criterion_04_self_support() {
    let r = runs();
    let t = Instant::now();
    let limit = 45f64.to_radians() + 1e-6;
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, out, _) in &r.runs {
        let g = &out.skeleton;
        let mut worst: f64 = 0.0;
        let mut bad = 0;
        for &(a, b) in &g.edges {
            let e = g.nodes[b].position - g.nodes[a].position;
            if e.norm() < 1e-12 {
                continue;
            }
            let down = g.nodes[a].down_dir.expect("upper node without a direction");
            let ang = angle_between(&e, &down);
            worst = worst.max(ang);
            if ang > limit {
                bad += 1;
            }
        }
        ok &= bad == 0 && !g.edges.is_empty();
        parts.push(format!("{name} {} edges, max {:.4} deg", g.edges.len(), worst.to_degrees()));
    }
    verdict(4, "edges within the support cone", Some(Duration::from_secs(10)), t.elapsed(), ok, parts.join(", "));
}

/// Interface vertices of a layer keyed by the shared envelope edge they lie on.
fn interface_vertices(layer: &Layer, ids: &[usize], shared: &HashSet<(usize, usize)>) -> BTreeMap<(usize, usize), Point> {
    layer
        .vertex_sources
        .iter()
        .zip(layer.surface.vertices())
        .filter_map(|(s, p)| {
            let (a, b) = (ids[s.edge.0], ids[s.edge.1]);
            let key = (a.min(b), a.max(b));
            shared.contains(&key).then_some((key, *p))
        })
        .collect()
}

fn mesh_edges(mesh: &TetMesh, ids: &[usize]) -> HashSet<(usize, usize)> {
    let mut out = HashSet::new();
    for tet in mesh.tets() {
        for i in 0..4 {
            for j in i + 1..4 {
                let (a, b) = (ids[tet[i]], ids[tet[j]]);
                out.insert((a.min(b), a.max(b)));
            }
        }
    }
    out
}

#[test]
fn criterion_05_layer_compatibility() {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let mut ok = true;
    let mut checked = 0usize;
    let mut worst: f64 = 0.0;
    for n in 1..=50 {
        let mut cfg = PipelineConfig::for_fixture("dome");
        cfg.n_layers = n;
        cfg.output_dir = dir.path().to_path_buf();
        let s = compute_sliced(&cfg, &mut Timings::default()).unwrap();
        let model_edges = mesh_edges(&s.model, &s.domain.node_map);
        let shared: HashSet<_> = mesh_edges(&s.support, &s.support_env_ids).intersection(&model_edges).copied().collect();
        for (m, sp) in s.stack.model_layers.iter().zip(&s.stack.support_layers) {
            let mv = interface_vertices(m, &s.domain.node_map, &shared);
            let sv = interface_vertices(sp, &s.support_env_ids, &shared);
            if mv.keys().ne(sv.keys()) {
                ok = false;
                continue;
            }
            for (k, p) in &mv {
                worst = worst.max((p - sv[k]).norm());
            }
            checked += mv.len();
        }
    }
    ok &= worst <= 1e-9 && checked > 0;
    verdict(
        5,
        "model/support interface vertices coincide",
        Some(Duration::from_secs(30)),
        t.elapsed(),
        ok,
        format!("layer counts 1..=50, {checked} interface vertices, max offset {worst:.1e} mm"),
    );
}

fn solid_segments(g: &SkeletonGraph, r_leaf: f64, support: f64) -> Vec<(oracle::P3, oracle::P3, f64)> {
    skeleton_segments(g, &assign_radii(g, r_leaf), support)
        .iter()
        .map(|(a, b, w)| (p3(a), p3(b), *w))
        .collect()
}

/// Dense planar grid on `[-h, h]^2` at height `z`.
fn grid(h: f64, n: usize, z: f64) -> TriMesh {
    let mut v = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            v.push(Point::new(-h + 2.0 * h * i as f64 / n as f64, -h + 2.0 * h * j as f64 / n as f64, z));
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
fn criterion_06_trim_equivalence() {
    let r = runs();
    let t = Instant::now();
    let mut ok = true;
    let mut layers = 0;
    let mut faces = 0;
    let mut mismatches = 0;
    for (name, out, dir) in &r.runs {
        let mut cfg = PipelineConfig::for_fixture(name);
        cfg.output_dir = dir.clone();
        let params = implicit_params(&cfg).unwrap();
        let segs = solid_segments(&out.skeleton, params.r_leaf, params.support_radius);
        for layer in &out.sliced.stack.support_layers {
            let n = layer.surface.faces().len();
            if n == 0 || n > 200 {
                continue;
            }
            layers += 1;
            // the trim runs on the layer refined down to the thinnest strut
            let (surface, parent) = match trim_edge_length(&out.solid) {
                Some(h) if out.solid.bounds().intersects(&layer.surface.bounds()) => refine_surface(&layer.surface, h).unwrap(),
                _ => (layer.surface.clone(), (0..n).collect()),
            };
            let m = surface.faces().len();
            let tris: Vec<[oracle::P3; 3]> = (0..m).map(|f| surface.face_points(f).map(|p| p3(&p))).collect();
            let expect = oracle::brute_trim(&tris, |p| oracle::brute_field(p, &segs, params.support_radius, params.iso));
            let direct = trim_surface(&surface, &out.solid, layer.index, layer.iso_value).unwrap();
            let mut produced = vec![0usize; m];
            for &f in &direct.source_faces {
                produced[f] += 1;
            }
            for f in 0..m {
                let values = surface.face_points(f).map(|p| out.solid.field_value(&p));
                faces += 1;
                if classify_face(values) != expect[f].inside || produced[f] != expect[f].out_faces {
                    mismatches += 1;
                }
            }
            let trimmed = trim_layer(layer, &out.solid).unwrap();
            let mapped: Vec<usize> = direct.source_faces.iter().map(|&f| parent[f]).collect();
            if trimmed.source_faces != mapped || trimmed.surface.vertices() != direct.surface.vertices() {
                mismatches += 1;
            }
        }
    }
    ok &= mismatches == 0 && layers > 0;

    // planar layer through the middle of a long vertical strut
    let (r_leaf, support, target) = (1.0, 8.0, 2.0);
    let iso = calibrate_iso(r_leaf, support, target).unwrap();
    let (a, b) = (Point::new(0.0, 0.0, -20.0), Point::new(0.0, 0.0, 20.0));
    let solid = ImplicitSolid::from_segments(&[(a, b, r_leaf)], support, iso).unwrap();
    let seg = [(p3(&a), p3(&b), r_leaf)];
    let rho = oracle::bisect(|x| oracle::brute_field([x, 0.0, 0.0], &seg, support, iso), 0.0, support).value;
    let disc = trim_surface(&grid(4.0, 160, 0.0), &solid, 0, 0.0).unwrap();
    let exact = std::f64::consts::PI * rho * rho;
    let disc_err = (disc.area() - exact).abs() / exact;
    ok &= disc_err < 0.03;
    verdict(
        6,
        "trim vs exhaustive classification",
        Some(Duration::from_secs(10)),
        t.elapsed(),
        ok,
        format!(
            "{layers} layers, {faces} faces, {mismatches} mismatches; disc area {:.4} vs pi rho^2 {exact:.4} ({:.2}%)",
            disc.area(),
            100.0 * disc_err
        ),
    );
}

#[test]
fn criterion_07_overhang_detection() {
    let t = Instant::now();
    let mut ok = true;
    let mut cases = 0;
    for kind in FixtureKind::ALL {
        let mesh = make_fixture(kind.name(), &[]).unwrap();
        let nodes: Vec<oracle::P3> = mesh.nodes().iter().map(p3).collect();
        let (_, height_dirs) = field_from_height(&mesh).unwrap();
        let uniform = VectorField::uniform(Vector::z(), mesh.tet_count());
        for dirs in [&uniform, &height_dirs] {
            let raw: Vec<oracle::P3> = dirs.vectors().iter().map(v3).collect();
            for alpha in [0.0, 30.0, 45.0, 60.0] {
                let set = detect_overhangs(&mesh, dirs, alpha).unwrap();
                let mut got: Vec<[usize; 3]> = set
                    .faces
                    .iter()
                    .map(|&f| {
                        let mut k = mesh.boundary_faces()[f];
                        k.sort_unstable();
                        k
                    })
                    .collect();
                got.sort_unstable();
                let want = oracle::exhaustive_overhang_scan(&nodes, mesh.tets(), &raw, alpha);
                ok &= got == want;
                cases += 1;
            }
        }
    }
    let up = Vector::z();
    let hand = is_overhang(&-Vector::z(), &up, 45.0)
        && !is_overhang(&Vector::z(), &up, 45.0)
        && !is_overhang(&Vector::x(), &up, 45.0)
        && is_overhang(&Vector::x(), &up, 0.0)
        && is_overhang(&Vector::new(0.5, 0.0, -0.75f64.sqrt()), &up, 30.0)
        && !is_overhang(&Vector::new(0.75f64.sqrt(), 0.0, -0.5), &up, 60.0);
    ok &= hand;
    verdict(
        7,
        "overhang detection vs exhaustive scan",
        Some(Duration::from_secs(2)),
        t.elapsed(),
        ok,
        format!("{cases} fixture/direction/angle cases, hand cases {}", if hand { "ok" } else { "wrong" }),
    );
}

#[test]
fn criterion_08_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let mut cfg = PipelineConfig::for_fixture("t_shape");
        cfg.rng_seed = 7;
        cfg.output_dir = dir.path().join(run);
        run_pipeline(&cfg).unwrap();
        files.push((
            std::fs::read(cfg.output_dir.join("waypoints.txt")).unwrap(),
            std::fs::read(cfg.output_dir.join("report.txt")).unwrap(),
        ));
    }
    let same = files[0] == files[1] && !files[0].0.is_empty();
    verdict(
        8,
        "repeated runs are byte-identical",
        None,
        t.elapsed(),
        same,
        format!("waypoints {} bytes, report {} bytes", files[0].0.len(), files[0].1.len()),
    );
}

#[test]
fn criterion_09_field_fitting() {
    let t = Instant::now();
    let mesh = make_fixture("t_shape", &[]).unwrap();
    // targets are unit directions, so the planted gradient is one too
    let a = Vector::new(0.3, -0.7, 1.1).normalize();
    let b = 2.5;
    let planted: Vec<f64> = mesh.nodes().iter().map(|p| a.dot(&p.coords) + b).collect();
    let target = VectorField::from_raw(vec![a; mesh.tet_count()]);
    let fit = fit_field(&mesh, &target, (0, planted[0])).unwrap();
    let recover = fit.values().iter().zip(&planted).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noisy = VectorField::from_raw(
        (0..mesh.tet_count())
            .map(|_| Vector::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(0.5..1.5)))
            .collect(),
    );
    let mut worst_fd: f64 = 0.0;
    for _ in 0..20 {
        let g: Vec<f64> = mesh.nodes().iter().map(|p| p.z + rng.gen_range(-0.5..0.5)).collect();
        let dir: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let analytic: f64 = objective_gradient(&mesh, &g, &noisy, Weighting::Uniform)
            .unwrap()
            .iter()
            .zip(&dir)
            .map(|(x, d)| x * d)
            .sum();
        let h = 1e-4;
        let shift = |s: f64| g.iter().zip(&dir).map(|(x, d)| x + s * d).collect::<Vec<_>>();
        let fp = objective(&mesh, &shift(h), &noisy, Weighting::Uniform).unwrap();
        let fm = objective(&mesh, &shift(-h), &noisy, Weighting::Uniform).unwrap();
        let fd = (fp - fm) / (2.0 * h);
        worst_fd = worst_fd.max((fd - analytic).abs() / analytic.abs().max(1e-12));
    }
    verdict(
        9,
        "field fitting",
        Some(Duration::from_secs(10)),
        t.elapsed(),
        recover < 1e-6 && worst_fd < 1e-5,
        format!("planted field error {recover:.1e}, gradient vs finite difference {worst_fd:.1e}"),
    );
}

#[test]
fn criterion_10_waypoint_format() {
    let t = Instant::now();
    let side = 10.0;
    let square = Contour {
        points: vec![
            Point::new(0.0, 0.0, 1.0),
            Point::new(side, 0.0, 1.0),
            Point::new(side, side, 1.0),
            Point::new(0.0, side, 1.0),
        ],
        normals: vec![Vector::z(); 4],
        closed: true,
    };
    let ext = Extrusion { width: 0.8, thickness: 0.2 };
    let program = emit_waypoints(&[vec![square.clone()]], ext);
    let expected = square.length() * 0.8 * ext.thickness;
    let sum_err = (program.total_extrusion() - expected).abs() / expected;
    let text = format_waypoints(&program);
    let again = format_waypoints(&parse_waypoints(&text, "square").unwrap());

    let (_, out, dir) = &runs().runs[0];
    let file = std::fs::read_to_string(dir.join("waypoints.txt")).unwrap();
    let file_again = format_waypoints(&parse_waypoints(&file, "waypoints.txt").unwrap());
    verdict(
        10,
        "waypoint round trip and extrusion sum",
        None,
        t.elapsed(),
        text == again && file == file_again && sum_err <= 1e-15 && !out.program.waypoints.is_empty(),
        format!(
            "square sum e {:.12} vs {expected:.12} (rel {sum_err:.1e}); {} pipeline waypoints re-serialized identically",
            program.total_extrusion(),
            out.program.waypoints.len()
        ),
    );
}

#[test]
fn skeleton_kinds_are_consistent() {
    for (name, out, _) in &runs().runs {
        let g = &out.skeleton;
        assert!(g.count(NodeKind::Leaf) > 0, "{name}");
        assert_eq!(g.count(NodeKind::Leaf) + g.count(NodeKind::Root) + g.count(NodeKind::Internal), g.nodes.len());
    }
}
