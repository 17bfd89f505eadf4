use std::collections::HashMap;
use std::f64::consts::TAU;

use aleweno::cases::make_case;
use aleweno::mesh::{structured, BoundaryKind, Mesh, Point, StructuredSpec};
use aleweno::model::{BaerNunziato, Phase, State, System, NVAR};
use aleweno::predictor::MeshMotion;
use aleweno::runner::{run, RunConfig};
use aleweno::scheme::{SchemeConfig, Solver};

fn bn() -> BaerNunziato {
    BaerNunziato::new(Phase::new(1.4, 0.0), Phase::new(1.35, 0.0))
}

fn smooth(x: Point, uniform_phi: bool) -> [f64; NVAR] {
    let (sx, sy) = ((TAU * x[0]).sin(), (TAU * x[1]).cos());
    [
        1.0 + 0.2 * sx * sy,
        0.3 + 0.1 * sy,
        -0.2 + 0.1 * sx,
        1.0 + 0.1 * sx,
        0.5 + 0.1 * sy,
        0.1 * sx,
        0.4 - 0.05 * sy,
        1.0 + 0.1 * sx * sy,
        if uniform_phi { 0.4 } else { 0.5 + 0.2 * sx * sy },
    ]
}

fn config(motion: MeshMotion) -> SchemeConfig {
    SchemeConfig {
        degree: 2,
        motion,
        ..SchemeConfig::default()
    }
}

fn rotate(q: &State) -> State {
    let mut r = *q;
    r[1] = -q[2];
    r[2] = q[1];
    r[5] = -q[6];
    r[6] = q[5];
    r
}

#[test]
fn rotating_mesh_and_data_rotates_the_solution() {
    let spec = StructuredSpec {
        nx: 8,
        ny: 8,
        x: [-0.5, 0.5],
        y: [-0.5, 0.5],
        periodic: [false, false],
        boundary: BoundaryKind::Wall,
    };
    let s = bn();
    let a = structured(&spec).unwrap();
    let mut boundary = HashMap::new();
    for (i, tri) in a.triangles().iter().enumerate() {
        for e in 0..3 {
            if let aleweno::mesh::Neighbor::Boundary(kind) = a.neighbors(i)[e] {
                let (p, q) = (tri[e], tri[(e + 1) % 3]);
                boundary.insert((p.min(q), p.max(q)), kind);
            }
        }
    }
    let nodes: Vec<Point> = a.nodes().iter().map(|p| [-p[1], p[0]]).collect();
    let b = Mesh::new(nodes, a.triangles().to_vec(), None, &boundary, [None, None]).unwrap();
    let init = |x: Point| s.from_primitive(&smooth([x[0] + 0.5, x[1] + 0.5], false));
    let init_rotated = |x: Point| {
        let w = smooth([x[1] + 0.5, -x[0] + 0.5], false);
        let q = s.from_primitive(&w)?;
        Ok(rotate(&q))
    };
    let mut sa = Solver::new(a, s, config(MeshMotion::Lagrangian), init).unwrap();
    let mut sb = Solver::new(b, s, config(MeshMotion::Lagrangian), init_rotated).unwrap();
    let dt = sa.compute_dt().unwrap();
    assert!((sb.compute_dt().unwrap() - dt).abs() < 1e-12 * dt);
    sa.step(dt).unwrap();
    sb.step(dt).unwrap();
    for (qa, qb) in sa.q.iter().zip(&sb.q) {
        let ra = rotate(qa);
        for k in 0..NVAR {
            assert!((ra[k] - qb[k]).abs() <= 1e-10 * (1.0 + qb[k].abs()), "{k}: {} {}", ra[k], qb[k]);
        }
    }
    for (pa, pb) in sa.mesh.nodes().iter().zip(sb.mesh.nodes()) {
        assert!((-pa[1] - pb[0]).abs() < 1e-12 && (pa[0] - pb[1]).abs() < 1e-12);
    }
}

fn periodic_solver(uniform_phi: bool, motion: MeshMotion) -> Solver<BaerNunziato> {
    let s = bn();
    let mesh = structured(&StructuredSpec::periodic_square(10, [0.0, 1.0])).unwrap();
    Solver::new(mesh, s, config(motion), |x| s.from_primitive(&smooth(x, uniform_phi))).unwrap()
}

#[test]
fn periodic_totals_are_conserved() {
    let mut solver = periodic_solver(true, MeshMotion::Lagrangian);
    let before = solver.totals();
    for _ in 0..5 {
        let dt = solver.compute_dt().unwrap();
        solver.step(dt).unwrap();
    }
    let after = solver.totals();
    for k in 0..8 {
        assert!((after[k] - before[k]).abs() <= 1e-11 * before[k].abs().max(1.0), "row {k}");
    }
    assert!((solver.mesh.total_area() - 1.0).abs() < 1e-11);
}

#[test]
fn mixture_totals_are_conserved_across_volume_fraction_gradients() {
    let mut solver = periodic_solver(false, MeshMotion::Lagrangian);
    let before = solver.totals();
    for _ in 0..5 {
        let dt = solver.compute_dt().unwrap();
        solver.step(dt).unwrap();
    }
    let after = solver.totals();
    for k in [0, 4] {
        assert!((after[k] - before[k]).abs() <= 1e-11 * before[k].abs(), "mass {k}");
    }
    for k in 1..4 {
        let (b, a) = (before[k] + before[k + 4], after[k] + after[k + 4]);
        assert!((a - b).abs() <= 1e-11 * b.abs().max(1.0), "mixture row {k}: {b} -> {a}");
    }
    let initial = structured(&StructuredSpec::periodic_square(10, [0.0, 1.0])).unwrap();
    let moved = solver.mesh.nodes().iter().zip(initial.nodes());
    assert!(moved.map(|(a, b)| (a[0] - b[0]).abs()).fold(0.0, f64::max) > 1e-4);
    assert!((solver.mesh.total_area() - 1.0).abs() < 1e-11);
}

#[test]
fn final_time_is_hit_exactly() {
    let mut solver = periodic_solver(false, MeshMotion::Eulerian);
    let t_end = 0.0123;
    solver.run_until(t_end, |_, _| {}).unwrap();
    assert_eq!(solver.time, t_end);
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for threads in [1, 3] {
        let out = dir.path().join(format!("t{threads}"));
        let mut c = RunConfig {
            case: "vortex".into(),
            out: out.clone(),
            threads: Some(threads),
            ..RunConfig::default()
        };
        c.set("mesh", "8").unwrap();
        c.set("t-end", "0.1").unwrap();
        run(&c).unwrap();
        files.push(
            ["vortex_final.vtk", "vortex_profile.csv", "vortex_steps.csv"]
                .map(|f| std::fs::read(out.join(f)).unwrap()),
        );
    }
    assert!(files[0] == files[1]);
}

#[test]
fn case_definitions_build_valid_initial_states() {
    for name in aleweno::cases::CASES {
        let case = make_case(name).unwrap();
        let mesh = case.mesh(Some(6)).unwrap();
        let s = Solver::new(mesh, case.system, config(case.motion.clone()), |x| case.conserved(x)).unwrap();
        assert!(s.q.iter().all(|q| case.system.validate(q).is_ok()), "{name}");
    }
}
