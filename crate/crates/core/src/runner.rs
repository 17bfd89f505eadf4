//! Run configuration, the time loop driver and the output writers.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::cases::{
    l2_error, make_case, primitives, reference_1d_solve, sample_line, CaseDefinition,
    InitialCondition, Sample, to_polar,
};
use crate::error::{Error, Result};
use crate::mesh::{read_mesh, Mesh, Point};
use crate::model::{BaerNunziato, State, System, PHI};
use crate::predictor::MeshMotion;
use crate::scheme::{FluxKind, SchemeConfig, Solver, StepDiagnostics};
use crate::weno::ReconstructionMode;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "ALEWENO_OUT";

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    /// `N` cells across the domain (rings for a disc).
    Resolution(usize),
    File(PathBuf),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub case: String,
    /// Polynomial degree `M`; the scheme is of order `M + 1`.
    pub degree: usize,
    pub flux: Option<FluxKind>,
    pub recon: ReconstructionMode,
    pub motion: Option<MeshMotion>,
    pub mesh: Option<MeshSource>,
    pub cfl: f64,
    pub t_end: Option<f64>,
    pub out: PathBuf,
    /// Snapshot every `n` steps; 0 writes the initial and final state only.
    pub output_every: usize,
    pub threads: Option<usize>,
    /// Cells of the 1D reference solution; 0 skips the comparison.
    pub reference_cells: usize,
    pub write_vtk: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case: "vortex".into(),
            degree: 2,
            flux: None,
            recon: ReconstructionMode::Characteristic,
            motion: None,
            mesh: None,
            cfl: 0.5,
            t_end: None,
            out: std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("out")),
            output_every: 0,
            threads: None,
            reference_cells: 0,
            write_vtk: true,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "case" => self.case = value.to_string(),
            "order" | "degree" => {
                let m: usize = parse(key, value)?;
                if !(1..=3).contains(&m) {
                    return Err(Error::Config(format!("order must be 1, 2 or 3, got {m}")));
                }
                self.degree = m;
            }
            "flux" => self.flux = Some(value.parse()?),
            "recon" => self.recon = value.parse()?,
            "mesh-velocity" | "mesh_velocity" => self.motion = Some(value.parse()?),
            "mesh" => {
                self.mesh = Some(match value.parse::<usize>() {
                    Ok(n) => MeshSource::Resolution(n),
                    Err(_) => MeshSource::File(PathBuf::from(value)),
                })
            }
            "cfl" => self.cfl = parse(key, value)?,
            "t-end" | "t_end" => self.t_end = Some(parse(key, value)?),
            "out" => self.out = PathBuf::from(value),
            "output-every" | "output_every" => self.output_every = parse(key, value)?,
            "threads" => self.threads = Some(parse(key, value)?),
            "reference-cells" | "reference_cells" => self.reference_cells = parse(key, value)?,
            "vtk" => self.write_vtk = parse(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: "expected key = value".into(),
            })?;
            self.set(k.trim(), v.trim()).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut c = Self::default();
        c.apply_text(&text, path)?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "case = {}", self.case);
        let _ = writeln!(s, "order = {}", self.degree);
        if let Some(f) = self.flux {
            let _ = writeln!(s, "flux = {}", f.as_str());
        }
        let _ = writeln!(s, "recon = {}", self.recon.as_str());
        if let Some(m) = &self.motion {
            let _ = writeln!(s, "mesh-velocity = {}", m.name());
        }
        match &self.mesh {
            Some(MeshSource::Resolution(n)) => {
                let _ = writeln!(s, "mesh = {n}");
            }
            Some(MeshSource::File(p)) => {
                let _ = writeln!(s, "mesh = {}", p.display());
            }
            None => {}
        }
        let _ = writeln!(s, "cfl = {}", self.cfl);
        if let Some(t) = self.t_end {
            let _ = writeln!(s, "t-end = {t}");
        }
        let _ = writeln!(s, "output-every = {}", self.output_every);
        let _ = writeln!(s, "reference-cells = {}", self.reference_cells);
        s
    }

    pub fn case_definition(&self) -> Result<CaseDefinition> {
        let mut case = make_case(&self.case)?;
        if let Some(f) = self.flux {
            case.flux = f;
        }
        if let Some(m) = &self.motion {
            case.motion = match (m, &case.motion) {
                (MeshMotion::Lagrangian, MeshMotion::LagrangianPlus(_)) => case.motion.clone(),
                _ => m.clone(),
            };
        }
        Ok(case)
    }

    pub fn scheme_config(&self, case: &CaseDefinition) -> SchemeConfig {
        let mut c = SchemeConfig {
            degree: self.degree,
            flux: case.flux,
            motion: case.motion.clone(),
            cfl: self.cfl,
            ..SchemeConfig::default()
        };
        c.weno.mode = self.recon;
        c
    }

    pub fn mesh(&self, case: &CaseDefinition) -> Result<Mesh> {
        match &self.mesh {
            Some(MeshSource::File(p)) => read_mesh(p),
            Some(MeshSource::Resolution(n)) => case.mesh(Some(*n)),
            None => case.mesh(None),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub case: String,
    pub degree: usize,
    pub flux: FluxKind,
    pub motion: String,
    pub elements: usize,
    pub steps: usize,
    pub time: f64,
    pub gcl_max: f64,
    /// `L2` error of `φ₁` against the exact solution, where one exists.
    pub l2_error_phi: Option<f64>,
    /// Mean absolute difference over range, per primitive field, against the
    /// 1D reference.
    pub reference_l1: Option<Vec<(String, f64)>>,
    pub first_order_elements: usize,
    pub predictor_fallbacks: usize,
    pub face_fallbacks: usize,
    pub osher_fallbacks: usize,
    pub retries: usize,
    pub predictor_iterations_max: usize,
    pub wall_time: f64,
    pub files: Vec<PathBuf>,
}

/// Sampling segment and point count of the line cut of a case.
pub fn profile_line(case: &CaseDefinition) -> (Point, Point, usize) {
    match &case.initial {
        InitialCondition::Explosion { .. } => ([-1.0, 0.0], [1.0, 0.0], 250),
        InitialCondition::Vortex(v) => ([v.domain[0], 0.0], [v.domain[1], 0.0], 200),
        InitialCondition::Uniform(_) => ([0.0, 0.5], [1.0, 0.5], 200),
        _ => ([-0.5, 0.0], [0.5, 0.0], 200),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Runs a case to its final time and writes all artifacts into `config.out`.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(|| run_inner(config)),
        None => run_inner(config),
    }
}

fn run_inner(config: &RunConfig) -> Result<RunSummary> {
    let start = Instant::now();
    let case = config.case_definition()?;
    let t_end = config.t_end.unwrap_or(case.t_end);
    let mesh = config.mesh(&case)?;
    let mut solver = Solver::new(
        mesh,
        case.system,
        config.scheme_config(&case),
        |x| case.conserved(x),
    )?;
    fs::create_dir_all(&config.out).map_err(io_err(&config.out))?;
    let mut files = Vec::new();
    let stem = case.name;
    let snapshot = |s: &Solver<BaerNunziato>, files: &mut Vec<PathBuf>, tag: &str| -> Result<()> {
        if config.write_vtk {
            let p = config.out.join(format!("{stem}_{tag}.vtk"));
            write_vtk(&p, s)?;
            files.push(p);
        }
        Ok(())
    };
    snapshot(&solver, &mut files, "0000")?;
    let mut totals = StepDiagnostics::default();
    let mut log = String::from(
        "step,time,dt,gcl_max,first_order,predictor_fallbacks,face_fallbacks,osher_fallbacks,retries,iterations_max\n",
    );
    let mut pending: Option<Result<()>> = None;
    solver.run_until(t_end, |s, d| {
        accumulate(&mut totals, d);
        let _ = writeln!(
            log,
            "{},{:.17e},{:.17e},{:.3e},{},{},{},{},{},{}",
            d.step,
            d.time,
            d.dt,
            d.gcl_max,
            d.first_order_elements,
            d.predictor_fallbacks,
            d.face_fallbacks,
            d.osher_fallbacks,
            d.retries,
            d.predictor_iterations_max
        );
        log::info!("step {} t = {:.6} dt = {:.3e}", d.step, d.time, d.dt);
        if config.output_every > 0 && d.step % config.output_every == 0 && pending.is_none() {
            let r = snapshot(s, &mut files, &format!("{:04}", d.step));
            if r.is_err() {
                pending = Some(r);
            }
        }
    })?;
    if let Some(r) = pending {
        r?;
    }
    snapshot(&solver, &mut files, "final")?;

    let diag_path = config.out.join(format!("{stem}_steps.csv"));
    fs::write(&diag_path, log).map_err(io_err(&diag_path))?;
    files.push(diag_path);

    let (a, b, n) = profile_line(&case);
    let samples = sample_line(&solver, a, b, n);
    let profile_path = config.out.join(format!("{stem}_profile.csv"));
    write_profile_csv(&profile_path, &solver.system, &samples)?;
    files.push(profile_path);

    let l2_error_phi = match case.exact(a, 0.0) {
        Some(_) => Some(l2_error(
            &solver.mesh,
            &solver.q,
            PHI,
            2 * config.degree,
            |x| case.exact(x, solver.time).expect("exact solution"),
        )?),
        None => None,
    };
    let reference_l1 = if config.reference_cells > 0 {
        Some(compare_with_reference(&case, &solver, &samples, config.reference_cells, t_end)?)
    } else {
        None
    };

    let summary = RunSummary {
        case: case.name.to_string(),
        degree: config.degree,
        flux: case.flux,
        motion: case.motion.name().to_string(),
        elements: solver.mesh.n_elements(),
        steps: solver.steps,
        time: solver.time,
        gcl_max: totals.gcl_max,
        l2_error_phi,
        reference_l1,
        first_order_elements: totals.first_order_elements,
        predictor_fallbacks: totals.predictor_fallbacks,
        face_fallbacks: totals.face_fallbacks,
        osher_fallbacks: totals.osher_fallbacks,
        retries: totals.retries,
        predictor_iterations_max: totals.predictor_iterations_max,
        wall_time: start.elapsed().as_secs_f64(),
        files: files.clone(),
    };
    let summary_path = config.out.join(format!("{stem}_summary.json"));
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(&summary_path, json).map_err(io_err(&summary_path))?;
    Ok(summary)
}

/// Folds per-step diagnostics: maxima for residuals, sums for counters.
pub fn accumulate(total: &mut StepDiagnostics, d: &StepDiagnostics) {
    total.step = d.step;
    total.time = d.time;
    total.gcl_max = total.gcl_max.max(d.gcl_max);
    total.first_order_elements += d.first_order_elements;
    total.predictor_fallbacks += d.predictor_fallbacks;
    total.face_fallbacks += d.face_fallbacks;
    total.osher_fallbacks += d.osher_fallbacks;
    total.retries += d.retries;
    total.predictor_iterations_max = total.predictor_iterations_max.max(d.predictor_iterations_max);
}

/// Fields shown in line-cut comparisons: all primitive variables except the
/// tangential velocities.
pub const PLOTTED_FIELDS: [usize; 7] = [0, 1, 3, 4, 5, 7, PHI];

/// Mean absolute difference over the reference range for each plotted field.
pub fn compare_with_reference(
    case: &CaseDefinition,
    solver: &Solver<BaerNunziato>,
    samples: &[Sample],
    cells: usize,
    t_end: f64,
) -> Result<Vec<(String, f64)>> {
    let reference = reference_1d_solve(case, cells, t_end)?;
    let radial = matches!(case.initial, InitialCondition::Explosion { .. });
    let mut numerical = primitives(&solver.system, samples)?;
    if radial {
        for (w, s) in numerical.iter_mut().zip(samples) {
            *w = to_polar(s.x, w);
        }
    }
    let exact: Vec<State> = samples
        .iter()
        .map(|s| reference.sample(if radial { s.x[0].hypot(s.x[1]) } else { s.x[0] }))
        .collect();
    let names = solver.system.primitive_names();
    Ok(PLOTTED_FIELDS
        .iter()
        .map(|&k| {
            let (lo, hi) = crate::cases::range(&exact, k);
            let d = crate::cases::l1_difference(&numerical, &exact, k);
            (names[k].to_string(), d / (hi - lo).max(f64::MIN_POSITIVE))
        })
        .collect())
}

/// Line samples as CSV: `x, y, element, extrapolated` and the primitive fields.
pub fn write_profile_csv<S: System>(path: &Path, system: &S, samples: &[Sample]) -> Result<()> {
    let mut out = String::from("x,y,element,extrapolated");
    for n in system.primitive_names() {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for s in samples {
        let w = system.to_primitive(&s.q)?;
        let _ = write!(out, "{:.10e},{:.10e},{},{}", s.x[0], s.x[1], s.element, s.extrapolated as u8);
        for v in w {
            let _ = write!(out, ",{v:.10e}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(io_err(path))
}

/// Legacy VTK 3.0 ASCII unstructured grid: conserved and primitive cell data,
/// node velocities as point data.
pub fn vtk_string<S: System>(solver: &Solver<S>) -> Result<String> {
    let mesh = &solver.mesh;
    let nn = mesh.n_nodes();
    let ne = mesh.n_elements();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "aleweno t={:.17e}", solver.time);
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    // periodic images are written as separate points
    let mut points: Vec<Point> = mesh.nodes().to_vec();
    let mut cells = Vec::with_capacity(ne);
    let mut velocity: Vec<Point> = solver.node_velocity.clone();
    velocity.resize(nn, [0.0; 2]);
    for i in 0..ne {
        let tri = mesh.triangles()[i];
        let off = mesh.offsets(i);
        let mut c = [0usize; 3];
        for k in 0..3 {
            if off[k] == [0.0, 0.0] {
                c[k] = tri[k];
            } else {
                let p = mesh.nodes()[tri[k]];
                points.push([p[0] + off[k][0], p[1] + off[k][1]]);
                velocity.push(velocity[tri[k]]);
                c[k] = points.len() - 1;
            }
        }
        cells.push(c);
    }
    let _ = writeln!(s, "POINTS {} double", points.len());
    for p in &points {
        let _ = writeln!(s, "{:.12e} {:.12e} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {} {}", ne, 4 * ne);
    for c in &cells {
        let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "CELL_DATA {ne}");
    let prim = solver
        .q
        .iter()
        .map(|q| solver.system.to_primitive(q))
        .collect::<Result<Vec<_>>>()?;
    let conserved_names = solver.system.conserved_names();
    let primitive_names = solver.system.primitive_names();
    let fields = conserved_names
        .iter()
        .enumerate()
        .map(|(k, n)| (format!("q_{n}"), k, &solver.q))
        .chain(
            primitive_names
                .iter()
                .enumerate()
                .map(|(k, n)| (n.to_string(), k, &prim)),
        );
    for (name, k, data) in fields {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in data.iter() {
            let _ = writeln!(s, "{:.12e}", v[k]);
        }
    }
    let _ = writeln!(s, "POINT_DATA {}", points.len());
    let _ = writeln!(s, "VECTORS mesh_velocity double");
    for v in &velocity {
        let _ = writeln!(s, "{:.12e} {:.12e} 0", v[0], v[1]);
    }
    Ok(s)
}

pub fn write_vtk<S: System>(path: &Path, solver: &Solver<S>) -> Result<()> {
    fs::write(path, vtk_string(solver)?).map_err(io_err(path))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub error: f64,
    pub order: Option<f64>,
}

/// `L2(φ₁)` of the vortex at `t_end` on a sequence of `N×N` meshes.
pub fn convergence_study(
    degree: usize,
    meshes: &[usize],
    t_end: f64,
    base: &RunConfig,
) -> Result<Vec<ConvergenceRow>> {
    let mut errors = Vec::new();
    for &n in meshes {
        let mut c = base.clone();
        c.degree = degree;
        let case = c.case_definition()?;
        if case.exact([0.0, 0.0], 0.0).is_none() {
            return Err(Error::Config(format!("case `{}` has no exact solution", case.name)));
        }
        let mesh = case.mesh(Some(n))?;
        let mut solver = Solver::new(mesh, case.system, c.scheme_config(&case), |x| {
            case.conserved(x)
        })?;
        solver.run_until(t_end, |_, _| {})?;
        let e = l2_error(&solver.mesh, &solver.q, PHI, 2 * degree, |x| {
            case.exact(x, solver.time).expect("exact solution")
        })?;
        log::info!("N = {n}: L2 = {e:e}");
        errors.push((n, e));
    }
    Ok(convergence_rows(&errors))
}

pub fn convergence_rows(errors: &[(usize, f64)]) -> Vec<ConvergenceRow> {
    errors
        .iter()
        .enumerate()
        .map(|(i, &(n, e))| ConvergenceRow {
            cells: n,
            error: e,
            order: (i > 0).then(|| {
                let (n0, e0) = errors[i - 1];
                (e0 / e).ln() / (n as f64 / n0 as f64).ln()
            }),
        })
        .collect()
}

/// Rows as `N_G  L2  order`.
pub fn format_convergence_table(degree: usize, rows: &[ConvergenceRow]) -> String {
    let mut s = format!("O{}\n{:>6} {:>12} {:>6}\n", degree + 1, "N_G", "L2", "order");
    for r in rows {
        let order = r.order.map(|o| format!("{o:.1}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(s, "{:>6} {:>12.4E} {:>6}", r.cells, r.error, order);
    }
    s
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let mut s = String::from("n,l2_error,order\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:.10e},{}",
            r.cells,
            r.error,
            r.order.map(|o| format!("{o:.4}")).unwrap_or_default()
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_text_roundtrip_and_overrides() {
        let mut c = RunConfig::default();
        c.apply_text(
            "case = rp2 # comment\norder=3\nflux = rusanov\nrecon=comp\nmesh = 40\ncfl=0.4\nt-end = 0.05\n",
            Path::new("x.cfg"),
        )
        .unwrap();
        assert_eq!(c.case, "rp2");
        assert_eq!(c.degree, 3);
        assert_eq!(c.flux, Some(FluxKind::Rusanov));
        assert_eq!(c.recon, ReconstructionMode::Componentwise);
        assert_eq!(c.mesh, Some(MeshSource::Resolution(40)));
        let mut d = RunConfig::default();
        d.apply_text(&c.to_text(), Path::new("y.cfg")).unwrap();
        assert_eq!(d.to_text(), c.to_text());
        assert!(c.set("order", "4").is_err());
        let e = c.apply_text("bogus = 1", Path::new("z.cfg")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn convergence_rows_orders() {
        let rows = convergence_rows(&[(24, 2.6916e-2), (32, 1.0906e-2)]);
        assert_eq!(rows[0].order, None);
        assert!((rows[1].order.unwrap() - 3.14).abs() < 0.01);
        let single = convergence_rows(&[(24, 1.0)]);
        assert!(single[0].order.is_none());
        let t = format_convergence_table(2, &rows);
        assert!(t.contains("O3") && t.contains("3.1"), "{t}");
    }

    #[test]
    fn vtk_of_initial_vortex_mesh() {
        let case = make_case("vortex").unwrap();
        let mesh = case.mesh(Some(24)).unwrap();
        let cfg = SchemeConfig {
            degree: 1,
            ..SchemeConfig::default()
        };
        let s = Solver::new(mesh, case.system, cfg, |x| case.conserved(x)).unwrap();
        let text = vtk_string(&s).unwrap();
        assert!(text.contains("CELLS 1152 4608"));
        assert!(text.contains("CELL_TYPES 1152"));
        assert_eq!(text.matches("SCALARS").count(), 18);
        assert_eq!(text, vtk_string(&s).unwrap());
    }

    #[test]
    fn vtk_rp1_volume_fraction_takes_table_values() {
        let case = make_case("rp1").unwrap();
        let mesh = case.mesh(Some(20)).unwrap();
        let s = Solver::new(mesh, case.system, SchemeConfig::default(), |x| {
            case.conserved(x)
        })
        .unwrap();
        let text = vtk_string(&s).unwrap();
        let block = text.split("SCALARS phi_s double 1\nLOOKUP_TABLE default\n").nth(1).unwrap();
        let mut values: Vec<f64> = block
            .lines()
            .take(s.mesh.n_elements())
            .map(|l| l.parse().unwrap())
            .collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        assert_eq!(values, vec![0.4, 0.8]);
    }
}
