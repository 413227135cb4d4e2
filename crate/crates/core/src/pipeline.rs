//! End-to-end orchestration: configuration, stages, on-disk artifacts and the run
//! report.
//!
//! Artifacts in the output directory:
//! `model.node/.ele/.field`, `envelope.node/.ele`, `support.field`, `hull.obj`,
//! `hull.poly`, `layer_model_<i>.obj`, `layer_support_<i>.obj`, `skeleton.skel`,
//! `implicit.toml`, `layer_trimmed_<i>.obj`, `waypoints.txt`, `report.txt` and
//! `timings.txt`. Every stage after `slice` rebuilds what it needs from these files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{direction_field, extrapolate_field, fit_field, ScalarField, VectorField};
use crate::geom::Vector;
use crate::implicit::{assign_radii, calibrate_iso, polygonize, ImplicitSolid};
use crate::mesh::fixtures::Fixture;
use crate::mesh::io::{format_poly, load_scalars, load_tet_mesh, load_vectors, save_obj, save_scalars, save_tet_mesh};
use crate::mesh::{component_labels, TetMesh};
use crate::overhang_hull::{
    assemble_support_domain, build_conservative_hull, clip_to_hull, detect_overhangs, exclude_platform_faces,
    merge_meshes, overhang_trajectories, ConvexHull, DescentConfig, OverhangSet, SupportDomain,
};
use crate::skeleton::{load_skel, save_skel, trace_all, NodeKind, SkeletonGraph, TraceConfig, TraceStats};
use crate::slicer::{choose_iso_values, extend_iso_values, slice_compatible, LayerStack, SliceInput};
use crate::toolpath::{emit_waypoints, layer_contours, save_waypoints, Extrusion, LayerPatch, WaypointProgram};
use crate::trim::{trim_stack, TrimmedLayer};

/// Pipeline parameters; lengths in mm, angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Base path of a `.node`/`.ele` model mesh.
    pub model: Option<PathBuf>,
    /// Built-in fixture used when no model path is given.
    pub fixture: Option<String>,
    pub fixture_params: BTreeMap<String, f64>,
    /// Governing field, one value per model node.
    pub field: Option<PathBuf>,
    /// Per-tet printing directions to fit the governing field to.
    pub vector_field: Option<PathBuf>,
    /// Pre-built envelope mesh containing the model tets.
    pub envelope: Option<PathBuf>,
    /// Tetrahedralizer command; `{poly}` is replaced by the `.poly` path and `{out}`
    /// by the base path whose `.node`/`.ele` it must write.
    pub tetgen_command: Option<String>,
    pub output_dir: PathBuf,
    pub alpha: f64,
    pub n_layers: usize,
    /// Explicit iso-values replacing the uniform model layers.
    pub iso_values: Option<Vec<f64>>,
    /// Trajectory step length.
    pub layer_thickness: f64,
    /// Hull offset; defaults to twice the layer thickness.
    pub inflate: Option<f64>,
    /// Per-step trajectory turn as a fraction of alpha.
    pub turn_fraction: f64,
    pub n_ring: usize,
    pub merging: bool,
    pub rng_seed: u64,
    /// Edge weight of a single branch.
    pub r_leaf: f64,
    /// Kernel support R; defaults to two trunk radii.
    pub support_radius: Option<f64>,
    /// Radius of a single-branch strut.
    pub trunk_radius: f64,
    pub toolpath_spacing: f64,
    pub max_segment: f64,
    pub extrusion_width: f64,
    /// Bead thickness; defaults to the layer spacing.
    pub extrusion_thickness: Option<f64>,
    /// Cell size for an inspection mesh of the implicit solid.
    pub polygonize_cell: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            model: None,
            fixture: None,
            fixture_params: BTreeMap::new(),
            field: None,
            vector_field: None,
            envelope: None,
            tetgen_command: None,
            output_dir: PathBuf::from("out"),
            alpha: 45.0,
            n_layers: 20,
            iso_values: None,
            layer_thickness: 1.0,
            inflate: None,
            turn_fraction: 1.0 / 20.0,
            n_ring: 3,
            merging: true,
            rng_seed: 7,
            r_leaf: 1.0,
            support_radius: None,
            trunk_radius: 2.0,
            toolpath_spacing: 0.8,
            max_segment: 2.0,
            extrusion_width: 0.8,
            extrusion_thickness: None,
            polygonize_cell: None,
        }
    }
}

impl PipelineConfig {
    pub fn for_fixture(name: &str) -> Self {
        Self {
            fixture: Some(name.to_string()),
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::InvalidParameter(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("layer_thickness", Some(self.layer_thickness)),
            ("turn_fraction", Some(self.turn_fraction)),
            ("r_leaf", Some(self.r_leaf)),
            ("trunk_radius", Some(self.trunk_radius)),
            ("toolpath_spacing", Some(self.toolpath_spacing)),
            ("max_segment", Some(self.max_segment)),
            ("extrusion_width", Some(self.extrusion_width)),
            ("support_radius", self.support_radius),
            ("extrusion_thickness", self.extrusion_thickness),
            ("polygonize_cell", self.polygonize_cell),
        ];
        for (name, v) in positive {
            if let Some(v) = v {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::InvalidParameter(format!("`{name}` must be positive, got {v}")));
                }
            }
        }
        if let Some(i) = self.inflate {
            if !(i >= 0.0) || !i.is_finite() {
                return Err(Error::InvalidParameter(format!("`inflate` must be non-negative, got {i}")));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 90.0) {
            return Err(Error::InvalidParameter(format!("`alpha` must lie in (0, 90), got {}", self.alpha)));
        }
        if self.n_layers == 0 {
            return Err(Error::InvalidParameter("`n_layers` must be at least 1".into()));
        }
        if self.n_ring == 0 {
            return Err(Error::InvalidParameter("`n_ring` must be at least 1".into()));
        }
        if self.model.is_none() && self.fixture.is_none() {
            return Err(Error::InvalidParameter("set either `model` or `fixture`".into()));
        }
        Ok(())
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius.unwrap_or(2.0 * self.trunk_radius)
    }

    pub fn inflate(&self) -> f64 {
        self.inflate.unwrap_or(2.0 * self.layer_thickness)
    }

    pub fn trace_config(&self) -> TraceConfig {
        TraceConfig {
            alpha_deg: self.alpha,
            n_ring: self.n_ring,
            rng_seed: self.rng_seed,
            merging: self.merging,
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }
}

fn staged<T>(stage: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(stage))
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::MissingArtifact(path))
    }
}

/// Everything the slicing stage produces.
#[derive(Debug, Clone)]
pub struct Sliced {
    pub model: TetMesh,
    pub model_field: ScalarField,
    pub dirs: VectorField,
    /// Overhangs not resting on the platform.
    pub overhangs: OverhangSet,
    pub hull: Option<ConvexHull>,
    pub domain: SupportDomain,
    pub support: TetMesh,
    pub support_env_ids: Vec<usize>,
    pub support_field: ScalarField,
    pub stack: LayerStack,
}

impl Sliced {
    /// Physical slab thickness used for volumes.
    pub fn slab_thickness(&self, cfg: &PipelineConfig) -> f64 {
        if self.stack.spacing > 0.0 {
            self.stack.spacing
        } else {
            cfg.layer_thickness
        }
    }
}

/// Model and, for fixtures, the envelope lattice, translated onto the platform.
fn ingest(cfg: &PipelineConfig) -> Result<(TetMesh, Option<TetMesh>)> {
    let (model, lattice) = if let Some(path) = &cfg.model {
        (load_tet_mesh(path)?, None)
    } else {
        let name = cfg.fixture.as_deref().unwrap_or_default();
        let mut f = Fixture::new(name)?;
        for (k, v) in &cfg.fixture_params {
            f = f.set(k, *v)?;
        }
        let m = f.build()?;
        (m.model, Some(m.envelope))
    };
    let shift = Vector::new(0.0, 0.0, -model.bounds().min.z);
    Ok((model.translated(&shift), lattice.map(|l| l.translated(&shift))))
}

fn governing_field(cfg: &PipelineConfig, model: &TetMesh) -> Result<ScalarField> {
    if let Some(path) = &cfg.field {
        let v = load_scalars(path)?;
        if v.len() != model.node_count() {
            return Err(Error::InvalidParameter(format!(
                "{} field values for {} nodes",
                v.len(),
                model.node_count()
            )));
        }
        return ScalarField::new(v);
    }
    if let Some(path) = &cfg.vector_field {
        let target = VectorField::from_raw(load_vectors(path)?);
        if target.len() != model.tet_count() {
            return Err(Error::InvalidParameter(format!(
                "{} target vectors for {} tets",
                target.len(),
                model.tet_count()
            )));
        }
        let lowest = (0..model.node_count())
            .min_by(|&a, &b| model.nodes()[a].z.total_cmp(&model.nodes()[b].z))
            .unwrap_or(0);
        return fit_field(model, &target, (lowest, 0.0));
    }
    ScalarField::new(model.nodes().iter().map(|p| p.z).collect())
}

fn active_overhangs(cfg: &PipelineConfig, model: &TetMesh, dirs: &VectorField) -> Result<OverhangSet> {
    Ok(exclude_platform_faces(model, &detect_overhangs(model, dirs, cfg.alpha)?, 0.0))
}

fn envelope_mesh(cfg: &PipelineConfig, model: &TetMesh, lattice: Option<&TetMesh>, hull: &ConvexHull) -> Result<TetMesh> {
    if let Some(path) = &cfg.envelope {
        return load_tet_mesh(path);
    }
    if let Some(template) = &cfg.tetgen_command {
        let (labels, count) = component_labels(model);
        let mut holes = vec![None; count];
        for (t, &c) in labels.iter().enumerate() {
            holes[c].get_or_insert_with(|| model.tet_centroid(t));
        }
        let holes: Vec<_> = holes.into_iter().flatten().collect();
        let poly = cfg.out("hull.poly");
        std::fs::write(&poly, format_poly(hull.mesh(), &[&model.extract_boundary()], &holes))?;
        let out = cfg.out("envelope_tet");
        let cmd = template
            .replace("{poly}", &poly.display().to_string())
            .replace("{out}", &out.display().to_string());
        let status = Command::new("sh").arg("-c").arg(&cmd).status()?;
        if !status.success() {
            return Err(Error::External(format!("`{cmd}` exited with {status}")));
        }
        return merge_meshes(model, &load_tet_mesh(&out)?);
    }
    if let Some(lattice) = lattice {
        let domain = assemble_support_domain(model, lattice)?;
        let mut keep = vec![false; lattice.tet_count()];
        for &t in &domain.model_tet_ids {
            keep[t] = true;
        }
        return clip_to_hull(lattice, hull, &keep);
    }
    Err(Error::InvalidParameter(
        "no envelope source: set `envelope` or `tetgen_command`".into(),
    ))
}

fn iso_values(cfg: &PipelineConfig, model_field: &ScalarField, support_field: Option<&ScalarField>) -> Result<Vec<f64>> {
    if let Some(v) = &cfg.iso_values {
        return Ok(v.clone());
    }
    let base = choose_iso_values(model_field.range(), cfg.n_layers)?;
    let Some(sf) = support_field else { return Ok(base) };
    let top = *base.last().unwrap();
    // support-only layers are added below the model, never above it
    Ok(extend_iso_values(&base, sf.range())
        .into_iter()
        .filter(|&v| v <= top)
        .collect())
}

#[allow(clippy::too_many_arguments)]
fn finish_slicing(
    cfg: &PipelineConfig,
    model: TetMesh,
    model_field: ScalarField,
    dirs: VectorField,
    overhangs: OverhangSet,
    hull: Option<ConvexHull>,
    envelope: &TetMesh,
    support_field: Option<ScalarField>,
) -> Result<Sliced> {
    let domain = assemble_support_domain(&model, envelope)?;
    let (support, support_env_ids) = domain.support_mesh()?;
    let support_field = match support_field {
        Some(f) => f,
        None if support.tet_count() == 0 => ScalarField::new(vec![0.0; support.node_count()])?,
        None => extrapolate_field(&model, &model_field, &support, &domain.support_interface(&support_env_ids))?,
    };
    if support_field.len() != support.node_count() {
        return Err(Error::InvalidParameter(format!(
            "{} support field values for {} nodes",
            support_field.len(),
            support.node_count()
        )));
    }
    let has_support = support.tet_count() > 0;
    let iso = iso_values(cfg, &model_field, has_support.then_some(&support_field))?;
    let stack = slice_compatible(
        &SliceInput {
            model: &model,
            model_field: &model_field,
            support: &support,
            support_field: &support_field,
            model_ids: &domain.node_map,
            support_ids: &support_env_ids,
        },
        &iso,
    )?;
    Ok(Sliced {
        model,
        model_field,
        dirs,
        overhangs,
        hull,
        domain,
        support,
        support_env_ids,
        support_field,
        stack,
    })
}

/// Fields, overhangs, envelope, support field and compatible layers.
pub fn compute_sliced(cfg: &PipelineConfig, timings: &mut Timings) -> Result<Sliced> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let t = Instant::now();
    let (model, lattice) = staged("fields", ingest(cfg))?;
    let model_field = staged("fields", governing_field(cfg, &model))?;
    let dirs = staged("fields", direction_field(&model, &model_field))?;
    timings.push("fields", t);

    let t = Instant::now();
    let (overhangs, hull) = staged("overhang_hull", (|| {
        let overhangs = active_overhangs(cfg, &model, &dirs)?;
        let mut descent = DescentConfig::new(cfg.alpha, cfg.layer_thickness);
        descent.turn_fraction = cfg.turn_fraction;
        let trajectories = overhang_trajectories(&model, &overhangs, &dirs, &descent)?;
        let hull = build_conservative_hull(&model, &trajectories, cfg.inflate())?;
        Ok((overhangs, hull))
    })())?;
    let envelope = staged("overhang_hull", envelope_mesh(cfg, &model, lattice.as_ref(), &hull))?;
    timings.push("overhang_hull", t);

    let t = Instant::now();
    let sliced = staged(
        "slice",
        finish_slicing(cfg, model, model_field, dirs, overhangs, Some(hull), &envelope, None),
    )?;
    timings.push("slice", t);
    Ok(sliced)
}

pub fn write_sliced(cfg: &PipelineConfig, s: &Sliced) -> Result<()> {
    save_tet_mesh(&s.model, cfg.out("model"))?;
    save_scalars(s.model_field.values(), cfg.out("model.field"))?;
    save_tet_mesh(&s.domain.envelope, cfg.out("envelope"))?;
    save_scalars(s.support_field.values(), cfg.out("support.field"))?;
    if let Some(h) = &s.hull {
        save_obj(h.mesh(), cfg.out("hull.obj"))?;
        if cfg.tetgen_command.is_none() {
            std::fs::write(cfg.out("hull.poly"), format_poly(h.mesh(), &[&s.model.extract_boundary()], &[]))?;
        }
    }
    for l in &s.stack.model_layers {
        save_obj(&l.surface, cfg.out(&format!("layer_model_{}.obj", l.index)))?;
    }
    for l in &s.stack.support_layers {
        save_obj(&l.surface, cfg.out(&format!("layer_support_{}.obj", l.index)))?;
    }
    Ok(())
}

/// Rebuilds the slicing result from the files written by [`write_sliced`].
pub fn load_sliced(cfg: &PipelineConfig) -> Result<Sliced> {
    cfg.validate()?;
    staged("slice", (|| {
        let model = load_tet_mesh(require(cfg.out("model.node"))?)?;
        let model_field = ScalarField::new(load_scalars(require(cfg.out("model.field"))?)?)?;
        let envelope = load_tet_mesh(require(cfg.out("envelope.node"))?)?;
        let support_field = ScalarField::new(load_scalars(require(cfg.out("support.field"))?)?)?;
        let dirs = direction_field(&model, &model_field)?;
        let overhangs = active_overhangs(cfg, &model, &dirs)?;
        finish_slicing(cfg, model, model_field, dirs, overhangs, None, &envelope, Some(support_field))
    })())
}

pub fn compute_skeleton(cfg: &PipelineConfig, s: &Sliced) -> Result<(SkeletonGraph, TraceStats)> {
    staged(
        "skeleton",
        trace_all(&s.model, &s.model_field, &s.overhangs, &s.dirs, &s.stack, &cfg.trace_config()),
    )
}

/// Parameters of the implicit solid as persisted in `implicit.toml`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImplicitParams {
    pub r_leaf: f64,
    pub support_radius: f64,
    pub iso: f64,
}

pub fn implicit_params(cfg: &PipelineConfig) -> Result<ImplicitParams> {
    let support_radius = cfg.support_radius();
    let iso = staged("implicit", calibrate_iso(cfg.r_leaf, support_radius, cfg.trunk_radius))?;
    Ok(ImplicitParams {
        r_leaf: cfg.r_leaf,
        support_radius,
        iso,
    })
}

pub fn build_solid(graph: &SkeletonGraph, p: &ImplicitParams) -> Result<ImplicitSolid> {
    staged(
        "implicit",
        ImplicitSolid::new(graph, &assign_radii(graph, p.r_leaf), p.support_radius, p.iso),
    )
}

pub fn write_implicit(cfg: &PipelineConfig, p: &ImplicitParams, solid: &ImplicitSolid) -> Result<()> {
    let text = toml::to_string(p).expect("parameters serialize");
    std::fs::write(cfg.out("implicit.toml"), text)?;
    if let Some(cell) = cfg.polygonize_cell {
        save_obj(&staged("implicit", polygonize(solid, cell))?, cfg.out("implicit.obj"))?;
    }
    Ok(())
}

pub fn load_implicit(cfg: &PipelineConfig) -> Result<ImplicitParams> {
    let path = require(cfg.out("implicit.toml"))?;
    toml::from_str(&std::fs::read_to_string(&path)?)
        .map_err(|e| Error::parse(path.display().to_string(), 1, e.to_string()))
}

pub fn compute_trim(s: &Sliced, solid: &ImplicitSolid) -> Result<Vec<TrimmedLayer>> {
    staged("trim", trim_stack(&s.stack, solid))
}

pub fn write_trimmed(cfg: &PipelineConfig, trimmed: &[TrimmedLayer]) -> Result<()> {
    for t in trimmed {
        save_obj(&t.surface, cfg.out(&format!("layer_trimmed_{}.obj", t.index)))?;
    }
    Ok(())
}

/// Contours bottom-up: per iso-value the model layer, then the trimmed support layer.
pub fn compute_toolpath(cfg: &PipelineConfig, s: &Sliced, trimmed: &[TrimmedLayer]) -> Result<WaypointProgram> {
    staged("toolpath", (|| {
        let mut layers = Vec::with_capacity(s.stack.len());
        for i in 0..s.stack.len() {
            let mut contours = Vec::new();
            let model = &s.stack.model_layers[i];
            if !model.is_empty() {
                contours.extend(layer_contours(&LayerPatch::from_layer(model), cfg.toolpath_spacing, cfg.max_segment)?);
            }
            if let Some(t) = trimmed.get(i).filter(|t| !t.is_empty()) {
                let patch = LayerPatch::from_trimmed(t, &s.stack.support_layers[i]);
                contours.extend(layer_contours(&patch, cfg.toolpath_spacing, cfg.max_segment)?);
            }
            layers.push(contours);
        }
        let ext = Extrusion {
            width: cfg.extrusion_width,
            thickness: cfg.extrusion_thickness.unwrap_or(s.slab_thickness(cfg)),
        };
        Ok(emit_waypoints(&layers, ext))
    })())
}

/// Stage wall times in seconds, kept out of the report so that reports are
/// reproducible.
#[derive(Debug, Clone, Default)]
pub struct Timings(pub Vec<(String, f64)>);

impl Timings {
    fn push(&mut self, stage: &str, since: Instant) {
        self.0.push((stage.to_string(), since.elapsed().as_secs_f64()));
    }

    pub fn format(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.0 {
            let _ = writeln!(s, "{k:<16} {v:.3}");
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub model_tets: usize,
    pub model_volume: f64,
    pub overhang_faces: usize,
    pub envelope_tets: usize,
    pub support_tets: usize,
    pub iso_values: usize,
    pub slab_thickness: f64,
    pub model_layers: usize,
    pub support_layers: usize,
    pub envelope_support_volume: f64,
    pub trimmed_support_volume: f64,
    pub reduction_percent: f64,
    pub skeleton_nodes: usize,
    pub skeleton_leaves: usize,
    pub skeleton_roots: usize,
    pub skeleton_edges: usize,
    pub waypoints: usize,
    pub total_extrusion: f64,
}

impl RunReport {
    pub fn new(cfg: &PipelineConfig, s: &Sliced, graph: &SkeletonGraph, trimmed: &[TrimmedLayer], program: &WaypointProgram) -> Self {
        let thickness = s.slab_thickness(cfg);
        let envelope: f64 = s.stack.support_layers.iter().map(|l| l.surface.area()).sum::<f64>() * thickness + 0.0;
        let kept: f64 = trimmed.iter().map(|t| t.area()).sum::<f64>() * thickness + 0.0;
        let reduction = if envelope > 0.0 { 100.0 * (1.0 - kept / envelope) } else { 0.0 };
        Self {
            model_tets: s.model.tet_count(),
            model_volume: s.model.total_volume(),
            overhang_faces: s.overhangs.faces.len(),
            envelope_tets: s.domain.envelope.tet_count(),
            support_tets: s.support.tet_count(),
            iso_values: s.stack.len(),
            slab_thickness: thickness,
            model_layers: s.stack.model_layers.iter().filter(|l| !l.is_empty()).count(),
            support_layers: s.stack.support_layers.iter().filter(|l| !l.is_empty()).count(),
            envelope_support_volume: envelope,
            trimmed_support_volume: kept,
            reduction_percent: reduction,
            skeleton_nodes: graph.nodes.len(),
            skeleton_leaves: graph.count(NodeKind::Leaf),
            skeleton_roots: graph.count(NodeKind::Root),
            skeleton_edges: graph.edges.len(),
            waypoints: program.waypoints.len(),
            total_extrusion: program.total_extrusion(),
        }
    }

    /// Aligned table followed by a JSON block.
    pub fn format(&self) -> String {
        let mut s = String::new();
        s.push_str("# support volumes = sum of layer areas x slab thickness (mm^3)\n");
        let rows: [(&str, String); 18] = [
            ("model tets", self.model_tets.to_string()),
            ("model volume (mm^3)", format!("{:.3}", self.model_volume)),
            ("overhang faces", self.overhang_faces.to_string()),
            ("envelope tets", self.envelope_tets.to_string()),
            ("support tets", self.support_tets.to_string()),
            ("iso-values", self.iso_values.to_string()),
            ("slab thickness (mm)", format!("{:.4}", self.slab_thickness)),
            ("model layers", self.model_layers.to_string()),
            ("support layers", self.support_layers.to_string()),
            ("envelope support (mm^3)", format!("{:.3}", self.envelope_support_volume)),
            ("trimmed support (mm^3)", format!("{:.3}", self.trimmed_support_volume)),
            ("reduction (%)", format!("{:.2}", self.reduction_percent)),
            ("skeleton nodes", self.skeleton_nodes.to_string()),
            ("skeleton leaves", self.skeleton_leaves.to_string()),
            ("skeleton roots", self.skeleton_roots.to_string()),
            ("skeleton edges", self.skeleton_edges.to_string()),
            ("waypoints", self.waypoints.to_string()),
            ("total extrusion (mm^3)", format!("{:.3}", self.total_extrusion)),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k:<26}{v:>14}");
        }
        s.push_str("\n# json\n");
        s.push_str(&serde_json::to_string_pretty(self).expect("report serializes"));
        s.push('\n');
        s
    }

    /// Reads the JSON block of a formatted report.
    pub fn parse(text: &str) -> Result<Self> {
        let json = text
            .split_once("# json\n")
            .map(|(_, j)| j)
            .ok_or_else(|| Error::parse("report", 1, "no json block"))?;
        serde_json::from_str(json).map_err(|e| Error::parse("report", e.line(), e.to_string()))
    }
}

/// Outputs of a full run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub sliced: Sliced,
    pub skeleton: SkeletonGraph,
    pub trace_stats: TraceStats,
    pub solid: ImplicitSolid,
    pub trimmed: Vec<TrimmedLayer>,
    pub program: WaypointProgram,
    pub report: RunReport,
    pub timings: Timings,
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<RunOutput> {
    let mut timings = Timings::default();
    let sliced = compute_sliced(cfg, &mut timings)?;
    write_sliced(cfg, &sliced)?;

    let t = Instant::now();
    let (skeleton, trace_stats) = compute_skeleton(cfg, &sliced)?;
    save_skel(&skeleton, cfg.out("skeleton.skel"))?;
    timings.push("skeleton", t);

    let t = Instant::now();
    let params = implicit_params(cfg)?;
    let solid = build_solid(&skeleton, &params)?;
    write_implicit(cfg, &params, &solid)?;
    timings.push("implicit", t);

    let t = Instant::now();
    let trimmed = compute_trim(&sliced, &solid)?;
    write_trimmed(cfg, &trimmed)?;
    timings.push("trim", t);

    let t = Instant::now();
    let program = compute_toolpath(cfg, &sliced, &trimmed)?;
    save_waypoints(&cfg.out("waypoints.txt"), &program)?;
    timings.push("toolpath", t);

    let report = RunReport::new(cfg, &sliced, &skeleton, &trimmed, &program);
    std::fs::write(cfg.out("report.txt"), report.format())?;
    std::fs::write(cfg.out("timings.txt"), timings.format())?;
    Ok(RunOutput {
        sliced,
        skeleton,
        trace_stats,
        solid,
        trimmed,
        program,
        report,
        timings,
    })
}

/// One stage of the pipeline run on the artifacts of the previous ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Slice,
    Skeleton,
    Implicit,
    Trim,
    Toolpath,
}

pub fn run_stage(cfg: &PipelineConfig, stage: Stage) -> Result<()> {
    match stage {
        Stage::Slice => {
            let s = compute_sliced(cfg, &mut Timings::default())?;
            write_sliced(cfg, &s)
        }
        Stage::Skeleton => {
            let s = load_sliced(cfg)?;
            let (g, _) = compute_skeleton(cfg, &s)?;
            save_skel(&g, cfg.out("skeleton.skel"))
        }
        Stage::Implicit => {
            let g = staged("implicit", load_skel(cfg.out("skeleton.skel")))?;
            let p = implicit_params(cfg)?;
            let solid = build_solid(&g, &p)?;
            write_implicit(cfg, &p, &solid)
        }
        Stage::Trim => {
            let s = load_sliced(cfg)?;
            let g = staged("trim", load_skel(cfg.out("skeleton.skel")))?;
            let p = staged("trim", load_implicit(cfg))?;
            let trimmed = compute_trim(&s, &build_solid(&g, &p)?)?;
            write_trimmed(cfg, &trimmed)
        }
        Stage::Toolpath => {
            let s = load_sliced(cfg)?;
            let g = staged("toolpath", load_skel(cfg.out("skeleton.skel")))?;
            let p = staged("toolpath", load_implicit(cfg))?;
            for i in 0..s.stack.len() {
                staged("toolpath", require(cfg.out(&format!("layer_trimmed_{i}.obj"))))?;
            }
            let trimmed = compute_trim(&s, &build_solid(&g, &p)?)?;
            let program = compute_toolpath(cfg, &s, &trimmed)?;
            save_waypoints(&cfg.out("waypoints.txt"), &program)?;
            let report = RunReport::new(cfg, &s, &g, &trimmed, &program);
            std::fs::write(cfg.out("report.txt"), report.format())?;
            Ok(())
        }
    }
}
