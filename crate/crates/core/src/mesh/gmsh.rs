//! Gmsh MSH 2.2 ASCII import.

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use super::{boundary_faces, signed_volume, BoundaryFacet, Mesh, UNTAGGED};
use crate::linalg::Vec3;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct GmshMesh {
    pub mesh: Mesh,
    /// Elements of types other than 4-node tetrahedra and 3-node triangles.
    pub skipped_elements: usize,
    /// Tetrahedra whose node order was flipped to make their volume positive.
    pub reoriented_cells: usize,
}

pub fn read_gmsh(path: impl AsRef<Path>) -> Result<GmshMesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    read_gmsh_str(&text, path)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Option<&'a str> {
        for (i, l) in self.inner.by_ref() {
            self.line = i + 1;
            let t = l.trim();
            if !t.is_empty() {
                return Some(t);
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<&'a str> {
        self.next().ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::Parse {
            path: PathBuf::from(self.path),
            line: self.line,
            message: message.into(),
        }
    }

    fn numbers<T: std::str::FromStr>(&self, line: &str) -> Result<Vec<T>> {
        line.split_whitespace()
            .map(|tok| tok.parse::<T>().map_err(|_| self.err(format!("bad number `{tok}`"))))
            .collect()
    }
}

/// Parses MSH 2.2 ASCII text; `path` is only used in error messages.
pub fn read_gmsh_str(text: &str, path: &Path) -> Result<GmshMesh> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        path,
        line: 0,
    };
    let mut saw_format = false;
    let mut node_ids: HashMap<usize, usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut cells: Vec<[usize; 4]> = Vec::new();
    let mut tris: Vec<([usize; 3], i32)> = Vec::new();
    let mut skipped = 0usize;

    while let Some(header) = lines.next() {
        match header {
            "$MeshFormat" => {
                let fmt = lines.expect("format line")?;
                let parts: Vec<&str> = fmt.split_whitespace().collect();
                if parts.len() != 3 {
                    return Err(lines.err("malformed $MeshFormat line"));
                }
                if !parts[0].starts_with("2.") {
                    return Err(lines.err(format!("unsupported MSH version {}", parts[0])));
                }
                if parts[1] != "0" {
                    return Err(lines.err("binary MSH files are not supported"));
                }
                if lines.expect("$EndMeshFormat")? != "$EndMeshFormat" {
                    return Err(lines.err("expected $EndMeshFormat"));
                }
                saw_format = true;
            }
            "$Nodes" => {
                let n: usize = lines
                    .expect("node count")?
                    .parse()
                    .map_err(|_| lines.err("bad node count"))?;
                for _ in 0..n {
                    let l = lines.expect("node line")?;
                    let toks: Vec<&str> = l.split_whitespace().collect();
                    if toks.len() != 4 {
                        return Err(lines.err("node line must have id and three coordinates"));
                    }
                    let id: usize = toks[0].parse().map_err(|_| lines.err("bad node id"))?;
                    let xyz: Vec<f64> = lines.numbers(&toks[1..].join(" "))?;
                    if node_ids.insert(id, vertices.len()).is_some() {
                        return Err(lines.err(format!("duplicate node id {id}")));
                    }
                    vertices.push([xyz[0], xyz[1], xyz[2]]);
                }
                if lines.expect("$EndNodes")? != "$EndNodes" {
                    return Err(lines.err("expected $EndNodes"));
                }
            }
            "$Elements" => {
                let n: usize = lines
                    .expect("element count")?
                    .parse()
                    .map_err(|_| lines.err("bad element count"))?;
                for _ in 0..n {
                    let l = lines.expect("element line")?;
                    let f: Vec<i64> = lines.numbers(l)?;
                    if f.len() < 3 {
                        return Err(lines.err("element line too short"));
                    }
                    let (ty, ntags) = (f[1], f[2] as usize);
                    let nodes = f.get(3 + ntags..).ok_or_else(|| lines.err("element tags overrun line"))?;
                    let tag = if ntags > 0 { f[3] as i32 } else { UNTAGGED };
                    let map = |raw: &[i64]| -> Result<Vec<usize>> {
                        raw.iter()
                            .map(|&id| {
                                node_ids
                                    .get(&(id as usize))
                                    .copied()
                                    .ok_or_else(|| lines.err(format!("unknown node id {id}")))
                            })
                            .collect()
                    };
                    match ty {
                        4 => {
                            if nodes.len() != 4 {
                                return Err(lines.err("tetrahedron needs 4 nodes"));
                            }
                            let v = map(nodes)?;
                            cells.push([v[0], v[1], v[2], v[3]]);
                        }
                        2 => {
                            if nodes.len() != 3 {
                                return Err(lines.err("triangle needs 3 nodes"));
                            }
                            let v = map(nodes)?;
                            tris.push(([v[0], v[1], v[2]], tag));
                        }
                        _ => skipped += 1,
                    }
                }
                if lines.expect("$EndElements")? != "$EndElements" {
                    return Err(lines.err("expected $EndElements"));
                }
            }
            other if other.starts_with('$') && !other.starts_with("$End") => {
                // Unknown section such as $PhysicalNames: skip to its end marker.
                let end = format!("$End{}", &other[1..]);
                loop {
                    if lines.expect(&end)? == end {
                        break;
                    }
                }
            }
            other => return Err(lines.err(format!("unexpected line `{other}`"))),
        }
    }
    if !saw_format {
        return Err(lines.err("missing $MeshFormat section"));
    }
    if cells.is_empty() {
        return Err(lines.err("mesh has no tetrahedra"));
    }

    let mut reoriented = 0;
    for cell in cells.iter_mut() {
        if signed_volume(&cell.map(|v| vertices[v])) < 0.0 {
            cell.swap(2, 3);
            reoriented += 1;
        }
    }

    let mut tag_of: BTreeMap<[usize; 3], i32> = BTreeMap::new();
    for (tri, tag) in &tris {
        let mut key = *tri;
        key.sort_unstable();
        tag_of.insert(key, *tag);
    }
    let boundary_facets = boundary_faces(&cells)
        .into_iter()
        .map(|f| {
            let mut key = f;
            key.sort_unstable();
            BoundaryFacet {
                vertices: f,
                tag: tag_of.get(&key).copied().unwrap_or(UNTAGGED),
            }
        })
        .collect();
    let mesh = Mesh {
        vertices,
        cells,
        boundary_facets,
        region_tags: None,
    };
    mesh.validate()?;
    if tris.len() > mesh.boundary_facets.len() {
        log::warn!("{} triangles are not on the boundary and were ignored", tris.len() - mesh.boundary_facets.len());
    }
    Ok(GmshMesh {
        mesh,
        skipped_elements: skipped,
        reoriented_cells: reoriented,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_TETS: &str = "$MeshFormat
2.2 0 8
$EndMeshFormat
$PhysicalNames
1
2 7 \"clamp\"
$EndPhysicalNames
$Nodes
5
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
5 1 1 1
$EndNodes
$Elements
5
1 15 2 0 1 1
2 2 2 7 1 1 2 4
3 2 2 9 2 2 3 5
4 4 2 1 1 1 2 3 4
5 4 2 1 1 2 3 4 5
$EndElements
";

    #[test]
    fn reads_two_tets() {
        let g = read_gmsh_str(TWO_TETS, Path::new("fixture.msh")).unwrap();
        assert_eq!(g.mesh.num_cells(), 2);
        assert_eq!(g.skipped_elements, 1);
        let tagged: Vec<_> = g.mesh.boundary_facets.iter().filter(|f| f.tag != UNTAGGED).collect();
        assert_eq!(tagged.len(), 2);
        assert!(g.mesh.boundary_facets.iter().any(|f| f.tag == 7));
        assert!(g.mesh.boundary_facets.iter().any(|f| f.tag == 9));
    }

    #[test]
    fn reorients_inverted_tet() {
        let text = TWO_TETS.replace("4 4 2 1 1 1 2 3 4", "4 4 2 1 1 1 3 2 4");
        let g = read_gmsh_str(&text, Path::new("f.msh")).unwrap();
        assert_eq!(g.reoriented_cells, 1);
        assert!((g.mesh.cell_volume(0) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn empty_elements_is_an_error() {
        let text = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n1\n1 0 0 0\n$EndNodes\n$Elements\n0\n$EndElements\n";
        let err = read_gmsh_str(text, Path::new("e.msh")).unwrap_err();
        assert!(err.to_string().contains("mesh has no tetrahedra"), "{err}");
    }

    #[test]
    fn malformed_header_reports_line() {
        let text = "$MeshFormat\n2.2 0\n$EndMeshFormat\n";
        match read_gmsh_str(text, Path::new("h.msh")).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        let text = "$MeshFormat\n4.1 0 8\n$EndMeshFormat\n";
        assert!(read_gmsh_str(text, Path::new("h.msh")).is_err());
    }
}
