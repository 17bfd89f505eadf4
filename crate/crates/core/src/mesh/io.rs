//! Plain-text mesh format:
//!
//! ```text
//! # comments and blank lines are ignored
//! <nodes> <triangles> <boundary edges>
//! x y                  (one line per node)
//! a b c                (1-based node indices, counterclockwise)
//! a b tag              (1-based node indices, tag = wall | transmissive)
//! ```

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use super::{BoundaryKind, Mesh, Neighbor};
use crate::error::{Error, Result};

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_mesh(&text, path)
}

fn parse_mesh(text: &str, path: &Path) -> Result<Mesh> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| err(0, format!("unexpected end of file while reading {what}")))
    };
    let (ln, header) = next("header")?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| err(ln, format!("bad count `{t}`"))))
        .collect::<Result<_>>()?;
    let [n_nodes, n_tris, n_bnd] = counts[..] else {
        return Err(err(ln, "header must hold three counts".into()));
    };
    let mut nodes = Vec::with_capacity(n_nodes);
    for _ in 0..n_nodes {
        let (ln, l) = next("nodes")?;
        let v: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(ln, format!("bad coordinate `{t}`"))))
            .collect::<Result<_>>()?;
        let [x, y] = v[..] else {
            return Err(err(ln, "node line must hold two coordinates".into()));
        };
        nodes.push([x, y]);
    }
    let index = |ln: usize, t: &str| -> Result<usize> {
        let k: usize = t.parse().map_err(|_| err(ln, format!("bad index `{t}`")))?;
        if k == 0 || k > n_nodes {
            return Err(err(ln, format!("node index {k} out of range 1..={n_nodes}")));
        }
        Ok(k - 1)
    };
    let mut triangles = Vec::with_capacity(n_tris);
    for _ in 0..n_tris {
        let (ln, l) = next("triangles")?;
        let v: Vec<usize> = l.split_whitespace().map(|t| index(ln, t)).collect::<Result<_>>()?;
        let [a, b, c] = v[..] else {
            return Err(err(ln, "triangle line must hold three indices".into()));
        };
        triangles.push([a, b, c]);
    }
    let mut boundary = HashMap::new();
    for _ in 0..n_bnd {
        let (ln, l) = next("boundary edges")?;
        let t: Vec<&str> = l.split_whitespace().collect();
        let [a, b, tag] = t[..] else {
            return Err(err(ln, "boundary line must hold two indices and a tag".into()));
        };
        let (a, b) = (index(ln, a)?, index(ln, b)?);
        let kind: BoundaryKind = tag.parse()?;
        boundary.insert((a.min(b), a.max(b)), kind);
    }
    Mesh::new(nodes, triangles, None, &boundary, [None, None])
}

/// Writes a non-periodic mesh in the import format.
pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    if mesh.period().iter().any(Option::is_some) {
        return Err(Error::MeshStructure("periodic meshes cannot be exported".into()));
    }
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = std::io::BufWriter::new(file);
    let mut edges = Vec::new();
    for i in 0..mesh.n_elements() {
        let t = mesh.triangles()[i];
        for (e, n) in mesh.neighbors(i).iter().enumerate() {
            if let Neighbor::Boundary(kind) = n {
                edges.push((t[e], t[(e + 1) % 3], *kind));
            }
        }
    }
    let mut out = String::new();
    out.push_str(&format!("{} {} {}\n", mesh.n_nodes(), mesh.n_elements(), edges.len()));
    for p in mesh.nodes() {
        out.push_str(&format!("{:.17e} {:.17e}\n", p[0], p[1]));
    }
    for t in mesh.triangles() {
        out.push_str(&format!("{} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    for (a, b, k) in edges {
        out.push_str(&format!("{} {} {}\n", a + 1, b + 1, k.as_str()));
    }
    w.write_all(out.as_bytes()).map_err(io_err)?;
    w.flush().map_err(io_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::disc;

    #[test]
    fn roundtrip_through_file() {
        let m = disc(1.0, 5, BoundaryKind::Wall).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("disc.mesh");
        write_mesh(&m, &path).unwrap();
        let r = read_mesh(&path).unwrap();
        assert_eq!(r.n_elements(), m.n_elements());
        assert_eq!(r.nodes(), m.nodes());
        assert_eq!(r.triangles(), m.triangles());
        for i in 0..m.n_elements() {
            assert_eq!(r.neighbors(i), m.neighbors(i));
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "# two triangles\n4 2 4\n0 0\n1 0\n1 1\n0 1\n1 2 3\n1 3 9\n";
        let e = parse_mesh(text, Path::new("x.mesh")).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 8, .. }), "{e}");
        let text = "4 2 4\n0 0\n1 0\n1 1\n0 1\n1 2 3\n1 3 4\n1 2 wall\n2 3 wall\n3 4 lava\n4 1 wall\n";
        let e = parse_mesh(text, Path::new("x.mesh")).unwrap_err();
        assert!(matches!(e, Error::UnknownBoundaryTag(_)));
    }
}
