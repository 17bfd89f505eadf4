//! Second-order MUSCL-Hancock path-conservative solver on a fixed 1D grid,
//! planar or with cylindrical geometric sources.

use std::fmt::Write as _;
use std::path::Path;

use super::{CaseDefinition, InitialCondition};
use crate::basis::LineRule;
use crate::error::{Error, Result};
use crate::model::{BaerNunziato, State, System, NVAR};
use crate::scheme::segment_path_jump;

const X: [f64; 2] = [1.0, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Geometry1D {
    Planar,
    /// `r ∈ [0, R]`, reflective at the axis.
    Radial,
}

#[derive(Debug, Clone)]
pub struct Reference1D {
    pub system: BaerNunziato,
    pub geometry: Geometry1D,
    pub cells: usize,
    pub range: [f64; 2],
    pub cfl: f64,
}

impl Reference1D {
    pub fn new(system: BaerNunziato, geometry: Geometry1D, cells: usize, range: [f64; 2]) -> Self {
        Self {
            system,
            geometry,
            cells,
            range,
            cfl: 0.8,
        }
    }

    pub fn dx(&self) -> f64 {
        (self.range[1] - self.range[0]) / self.cells as f64
    }

    pub fn centers(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.cells)
            .map(|i| self.range[0] + (i as f64 + 0.5) * dx)
            .collect()
    }

    /// Conserved cell values at `t_end`, starting from point values of `init`
    /// at the cell centers.
    pub fn solve(&self, init: impl Fn(f64) -> Result<State>, t_end: f64) -> Result<Vec<State>> {
        let mut q = self
            .centers()
            .into_iter()
            .map(init)
            .collect::<Result<Vec<_>>>()?;
        let rule = LineRule::gauss_legendre(3);
        let dx = self.dx();
        let mut t = 0.0;
        let mut steps = 0usize;
        while t < t_end * (1.0 - 1e-14) {
            let speed = q
                .iter()
                .map(|s| self.system.max_abs_eigenvalue(s, X))
                .fold(0.0, f64::max);
            let dt = (self.cfl * dx / speed).min(t_end - t);
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::Oracle(format!("time step {dt:e} at t = {t}")));
            }
            if self.geometry == Geometry1D::Radial {
                self.sources(&mut q, 0.5 * dt);
            }
            self.hancock(&mut q, dt, &rule)?;
            if self.geometry == Geometry1D::Radial {
                self.sources(&mut q, 0.5 * dt);
            }
            for (i, s) in q.iter().enumerate() {
                self.system
                    .validate(s)
                    .map_err(|e| Error::Oracle(format!("cell {i}, t = {t}: {e}")))?;
            }
            t += dt;
            steps += 1;
        }
        log::debug!("1D reference: {steps} steps on {} cells", self.cells);
        Ok(q)
    }

    fn ghosted(&self, q: &[State]) -> Vec<State> {
        let n = q.len();
        let mirror = |s: &State| {
            let mut m = *s;
            for k in [1, 5] {
                m[k] = -m[k];
            }
            m
        };
        let (l0, l1) = match self.geometry {
            Geometry1D::Planar => (q[0], q[0]),
            Geometry1D::Radial => (mirror(&q[1]), mirror(&q[0])),
        };
        let mut g = Vec::with_capacity(n + 4);
        g.extend([l0, l1]);
        g.extend_from_slice(q);
        g.extend([q[n - 1], q[n - 1]]);
        g
    }

    fn hancock(&self, q: &mut [State], dt: f64, rule: &LineRule) -> Result<()> {
        let sys = &self.system;
        let n = q.len();
        let g = self.ghosted(q);
        let r = 0.5 * dt / self.dx();
        // evolved boundary extrapolations of ghosted cells 1..=n+2
        let mut left = vec![[0.0; NVAR]; n + 4];
        let mut right = vec![[0.0; NVAR]; n + 4];
        let mut center = vec![[0.0; NVAR]; n + 4];
        for j in 1..n + 3 {
            let slope: State = std::array::from_fn(|k| minmod(g[j][k] - g[j - 1][k], g[j + 1][k] - g[j][k]));
            let a: State = std::array::from_fn(|k| g[j][k] - 0.5 * slope[k]);
            let b: State = std::array::from_fn(|k| g[j][k] + 0.5 * slope[k]);
            let (fa, fb) = (sys.normal_flux(&a, X), sys.normal_flux(&b, X));
            let bq = sys.ncp_apply(&g[j], X, &slope);
            let delta: State = std::array::from_fn(|k| -r * (fb[k] - fa[k] + bq[k]));
            let l: State = std::array::from_fn(|k| a[k] + delta[k]);
            let rr: State = std::array::from_fn(|k| b[k] + delta[k]);
            if sys.validate(&l).is_ok() && sys.validate(&rr).is_ok() {
                left[j] = l;
                right[j] = rr;
                center[j] = std::array::from_fn(|k| g[j][k] + delta[k]);
            } else {
                left[j] = g[j];
                right[j] = g[j];
                center[j] = g[j];
            }
        }
        // interface j+1/2 between ghosted cells j and j+1, j = 1..=n+1
        let mut out = vec![[0.0; NVAR]; n + 4];
        let mut into = vec![[0.0; NVAR]; n + 4];
        for j in 1..n + 2 {
            let (a, b) = (&right[j], &left[j + 1]);
            let s = sys.max_abs_eigenvalue(a, X).max(sys.max_abs_eigenvalue(b, X));
            let (fa, fb) = (sys.normal_flux(a, X), sys.normal_flux(b, X));
            let d = segment_path_jump(sys, a, b, X, rule)?;
            for k in 0..NVAR {
                let phi = 0.5 * (fa[k] + fb[k]) - 0.5 * s * (b[k] - a[k]);
                out[j][k] = phi + 0.5 * d[k];
                into[j + 1][k] = phi - 0.5 * d[k];
            }
        }
        let c = 2.0 * r;
        for i in 0..n {
            let j = i + 2;
            let dq: State = std::array::from_fn(|k| right[j][k] - left[j][k]);
            let bq = sys.ncp_apply(&center[j], X, &dq);
            for k in 0..NVAR {
                q[i][k] -= c * (out[j][k] - into[j][k] + bq[k]);
            }
        }
        Ok(())
    }

    /// Midpoint rule for the cylindrical sources over `dt`.
    fn sources(&self, q: &mut [State], dt: f64) {
        let centers = self.centers();
        for (s, r) in q.iter_mut().zip(centers) {
            let k1 = self.geometric_source(s, r);
            let mid: State = std::array::from_fn(|k| s[k] + 0.5 * dt * k1[k]);
            let k2 = self.geometric_source(&mid, r);
            for k in 0..NVAR {
                s[k] += dt * k2[k];
            }
        }
    }

    /// `−(1/r) (φρu, φρu², 0, u(φρE + φp))` per phase.
    pub fn geometric_source(&self, q: &State, r: f64) -> State {
        let p = self.system.pressures(q);
        let mut s = [0.0; NVAR];
        for k in 0..2 {
            let o = 4 * k;
            let phi = if k == 0 { q[NVAR - 1] } else { 1.0 - q[NVAR - 1] };
            let u = q[o + 1] / q[o];
            s[o] = -q[o + 1] / r;
            s[o + 1] = -q[o + 1] * u / r;
            s[o + 3] = -u * (q[o + 3] + phi * p[k]) / r;
        }
        s
    }
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

/// Primitive profile on a 1D grid, stored as CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub scheme: String,
    pub resolution: usize,
    pub commit: String,
    pub names: Vec<String>,
    pub x: Vec<f64>,
    pub values: Vec<State>,
}

pub const REFERENCE_SCHEME: &str = "muscl-hancock-minmod-rusanov";

impl Profile {
    /// Linear interpolation, constant beyond the end points.
    pub fn sample(&self, x: f64) -> State {
        let n = self.x.len();
        if x <= self.x[0] {
            return self.values[0];
        }
        if x >= self.x[n - 1] {
            return self.values[n - 1];
        }
        let j = self.x.partition_point(|&v| v <= x).max(1);
        let (x0, x1) = (self.x[j - 1], self.x[j]);
        let s = (x - x0) / (x1 - x0);
        std::array::from_fn(|k| (1.0 - s) * self.values[j - 1][k] + s * self.values[j][k])
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# scheme={} resolution={} commit={}\nx,{}\n",
            self.scheme,
            self.resolution,
            self.commit,
            self.names.join(",")
        );
        for (x, v) in self.x.iter().zip(&self.values) {
            let _ = write!(out, "{x:.10e}");
            for c in v {
                let _ = write!(out, ",{c:.10e}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text).map_err(|(line, message)| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        })
    }

    fn parse(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut lines = text.lines().enumerate();
        let (_, meta) = lines.next().ok_or((1, "empty file".to_string()))?;
        let mut scheme = String::new();
        let mut resolution = 0;
        let mut commit = String::new();
        for kv in meta.trim_start_matches('#').split_whitespace() {
            match kv.split_once('=') {
                Some(("scheme", v)) => scheme = v.to_string(),
                Some(("resolution", v)) => {
                    resolution = v.parse().map_err(|_| (1, format!("bad resolution `{v}`")))?
                }
                Some(("commit", v)) => commit = v.to_string(),
                _ => return Err((1, format!("bad header entry `{kv}`"))),
            }
        }
        let (_, head) = lines.next().ok_or((2, "missing column header".to_string()))?;
        let names: Vec<String> = head.split(',').skip(1).map(str::to_string).collect();
        if names.len() != NVAR {
            return Err((2, format!("expected {NVAR} value columns, found {}", names.len())));
        }
        let mut x = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let nums = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| (i + 1, e.to_string()))?;
            if nums.len() != NVAR + 1 {
                return Err((i + 1, format!("expected {} columns", NVAR + 1)));
            }
            x.push(nums[0]);
            values.push(std::array::from_fn(|k| nums[k + 1]));
        }
        Ok(Self {
            scheme,
            resolution,
            commit,
            names,
            x,
            values,
        })
    }
}

/// Reference profile of a planar Riemann problem or a cylindrical explosion.
pub fn reference_1d_solve(case: &CaseDefinition, cells: usize, t_end: f64) -> Result<Profile> {
    let (geometry, range) = match &case.initial {
        InitialCondition::Riemann { .. } => (Geometry1D::Planar, [-0.5, 0.5]),
        InitialCondition::Explosion { .. } => match case.domain {
            super::Domain::Disc { radius, .. } => (Geometry1D::Radial, [0.0, radius]),
            _ => return Err(Error::Oracle("explosion needs a disc domain".into())),
        },
        _ => return Err(Error::Oracle(format!("no 1D reduction of case `{}`", case.name))),
    };
    let solver = Reference1D::new(case.system.clone(), geometry, cells, range);
    let q = solver.solve(|x| case.conserved([x, 0.0]), t_end)?;
    let values = q
        .iter()
        .map(|s| case.system.to_primitive(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(Profile {
        scheme: REFERENCE_SCHEME.to_string(),
        resolution: cells,
        commit: String::new(),
        names: case
            .system
            .primitive_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        x: solver.centers(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::make_case;
    use crate::model::Phase;

    fn ideal() -> BaerNunziato {
        BaerNunziato::new(Phase::new(1.4, 0.0), Phase::new(1.4, 0.0))
    }

    #[test]
    fn constant_state_is_preserved() {
        let sys = ideal();
        let w = [1.3, 0.4, 0.0, 2.0, 0.7, -0.2, 0.0, 1.5, 0.35];
        let q0 = sys.from_primitive(&w).unwrap();
        for geometry in [Geometry1D::Planar] {
            let s = Reference1D::new(sys.clone(), geometry, 200, [-0.5, 0.5]);
            let q = s.solve(|_| Ok(q0), 0.05).unwrap();
            for c in &q {
                for k in 0..NVAR {
                    assert!((c[k] - q0[k]).abs() <= 1e-13 * q0[k].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn radial_state_at_rest_is_preserved() {
        let sys = ideal();
        let q0 = sys
            .from_primitive(&[1.0, 0.0, 0.0, 1.0, 0.5, 0.0, 0.0, 1.0, 0.4])
            .unwrap();
        let s = Reference1D::new(sys, Geometry1D::Radial, 100, [0.0, 1.0]);
        let q = s.solve(|_| Ok(q0), 0.05).unwrap();
        for c in &q {
            for k in 0..NVAR {
                assert!((c[k] - q0[k]).abs() <= 1e-13 * q0[k].abs().max(1.0));
            }
        }
    }

    /// Exact solution of the Euler Riemann problem, ideal gas.
    struct EulerRiemann {
        gamma: f64,
        l: [f64; 3],
        r: [f64; 3],
    }

    impl EulerRiemann {
        fn f(&self, p: f64, s: [f64; 3]) -> (f64, f64) {
            let g = self.gamma;
            let [rho, _, pk] = s;
            let c = (g * pk / rho).sqrt();
            if p > pk {
                let a = 2.0 / ((g + 1.0) * rho);
                let b = (g - 1.0) / (g + 1.0) * pk;
                let q = (a / (p + b)).sqrt();
                ((p - pk) * q, q * (1.0 - 0.5 * (p - pk) / (b + p)))
            } else {
                let e = (g - 1.0) / (2.0 * g);
                (
                    2.0 * c / (g - 1.0) * ((p / pk).powf(e) - 1.0),
                    (p / pk).powf(-(g + 1.0) / (2.0 * g)) / (rho * c),
                )
            }
        }

        fn star(&self) -> (f64, f64) {
            let mut p = 0.5 * (self.l[2] + self.r[2]);
            for _ in 0..100 {
                let (fl, dl) = self.f(p, self.l);
                let (fr, dr) = self.f(p, self.r);
                let dp = (fl + fr + self.r[1] - self.l[1]) / (dl + dr);
                p = (p - dp).max(1e-12);
                if dp.abs() < 1e-15 * p {
                    break;
                }
            }
            let u = 0.5 * (self.l[1] + self.r[1]) + 0.5 * (self.f(p, self.r).0 - self.f(p, self.l).0);
            (p, u)
        }

        fn density(&self, xi: f64) -> f64 {
            let g = self.gamma;
            let (ps, us) = self.star();
            let side = |s: [f64; 3], sign: f64| {
                let [rho, u, p] = s;
                let c = (g * p / rho).sqrt();
                let xi = sign * xi;
                let (u, us) = (sign * u, sign * us);
                if ps > p {
                    let shock = u - c * ((g + 1.0) / (2.0 * g) * ps / p + (g - 1.0) / (2.0 * g)).sqrt();
                    if xi < shock {
                        rho
                    } else {
                        let r = ps / p;
                        let k = (g - 1.0) / (g + 1.0);
                        rho * (r + k) / (k * r + 1.0)
                    }
                } else {
                    let cs = c * (ps / p).powf((g - 1.0) / (2.0 * g));
                    if xi < u - c {
                        rho
                    } else if xi > us - cs {
                        rho * (ps / p).powf(1.0 / g)
                    } else {
                        let k = 2.0 / (g + 1.0) + (g - 1.0) / ((g + 1.0) * c) * (u - xi);
                        rho * k.powf(2.0 / (g - 1.0))
                    }
                }
            };
            if xi < us {
                side(self.l, 1.0)
            } else {
                side(self.r, -1.0)
            }
        }
    }

    #[test]
    fn single_phase_limit_matches_exact_euler() {
        let sys = ideal();
        let phi = 1.0 - 1e-9;
        let exact = EulerRiemann {
            gamma: 1.4,
            l: [1.0, 0.0, 1.0],
            r: [0.125, 0.0, 0.1],
        };
        let init = |x: f64| {
            let [rho, u, p] = if x < 0.0 { exact.l } else { exact.r };
            sys.from_primitive(&[rho, u, 0.0, p, rho, u, 0.0, p, phi])
        };
        let cells = 10_000;
        let t = 0.2;
        let s = Reference1D::new(sys.clone(), Geometry1D::Planar, cells, [-0.5, 0.5]);
        let q = s.solve(init, t).unwrap();
        let dx = s.dx();
        let l1: f64 = s
            .centers()
            .iter()
            .zip(&q)
            .map(|(x, c)| (c[0] / phi - exact.density(x / t)).abs() * dx)
            .sum();
        assert!(l1 <= 2e-3, "L1(rho) = {l1:e}");
        assert!((exact.star().0 - 0.30313).abs() < 1e-4);
    }

    #[test]
    fn smooth_convergence_is_second_order() {
        let sys = ideal();
        let (u, p) = (0.5, 1.0);
        let front = |x: f64| (x / 0.08).tanh();
        let prim = |x: f64| {
            let f = front(x);
            [1.0 + 0.3 * f, u, 0.0, p, 0.8 - 0.2 * f, u, 0.0, p, 0.5 + 0.2 * f]
        };
        let t = 0.2;
        let errors: Vec<f64> = [200, 400, 800]
            .iter()
            .map(|&n| {
                let s = Reference1D::new(sys.clone(), Geometry1D::Planar, n, [-0.5, 0.5]);
                let q = s.solve(|x| sys.from_primitive(&prim(x)), t).unwrap();
                s.centers()
                    .iter()
                    .zip(&q)
                    .map(|(x, c)| (c[PHI_INDEX] - prim(x - u * t)[PHI_INDEX]).abs() * s.dx())
                    .sum()
            })
            .collect();
        for w in errors.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.8, "{errors:?}");
        }
    }

    const PHI_INDEX: usize = NVAR - 1;

    #[test]
    fn profile_roundtrip_and_sampling() {
        let p = Profile {
            scheme: REFERENCE_SCHEME.into(),
            resolution: 3,
            commit: "abc".into(),
            names: ideal().primitive_names().iter().map(|s| s.to_string()).collect(),
            x: vec![0.0, 1.0, 2.0],
            values: vec![[1.0; NVAR], [3.0; NVAR], [0.1 + 0.2; NVAR]],
        };
        let back = Profile::parse(&p.to_csv()).unwrap();
        assert_eq!((&back.scheme, back.resolution, &back.commit), (&p.scheme, 3, &p.commit));
        assert_eq!((&back.names, &back.x), (&p.names, &p.x));
        for (a, b) in back.values.iter().zip(&p.values) {
            for k in 0..NVAR {
                assert!((a[k] - b[k]).abs() <= 1e-10 * b[k].abs());
            }
        }
        assert_eq!(p.sample(0.5)[0], 2.0);
        assert_eq!(p.sample(-1.0)[0], 1.0);
        assert_eq!(p.sample(5.0)[0], 0.1 + 0.2);
    }

    #[test]
    fn rp1_reference_is_bounded() {
        let case = make_case("rp1").unwrap();
        let prof = reference_1d_solve(&case, 400, case.t_end).unwrap();
        let (lo, hi) = prof
            .values
            .iter()
            .fold((f64::MAX, f64::MIN), |(a, b), v| (a.min(v[8]), b.max(v[8])));
        assert!(lo >= 0.4 - 1e-12 && hi <= 0.8 + 1e-12);
    }
}
