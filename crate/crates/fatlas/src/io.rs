//! Mesh and report serialization: OFF (canonical) and OBJ triangle meshes,
//! fixed-schema JSON reports, and CSV thickness histograms. Flat-quotient
//! complexes (per-simplex coordinate overrides) are exported as the unwrapped
//! fundamental domain, with duplicated seam vertices flagged in comments.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::complex::{HistBucket, SimplicialComplex};
use crate::error::{Error, Result};
use crate::simplex::Point;

/// Fixed top-level schema shared by every JSON report the tool emits.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub stage: String,
    pub inputs: Value,
    pub metrics: Value,
    pub witnesses: Value,
}

impl Report {
    pub fn new(stage: &str) -> Self {
        Report {
            stage: stage.to_string(),
            inputs: Value::Object(Default::default()),
            metrics: Value::Object(Default::default()),
            witnesses: Value::Object(Default::default()),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }
}

/// CSV rendering of a thickness histogram, one bucket per row.
pub fn histogram_csv(buckets: &[HistBucket]) -> String {
    let mut out = String::from("bucket_lo,bucket_hi,count\n");
    for b in buckets {
        let _ = writeln!(out, "{},{},{}", b.lo, b.hi, b.count);
    }
    out
}

fn pad3(p: &Point) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (o, c) in out.iter_mut().zip(p) {
        *o = *c;
    }
    out
}

/// Flattened export geometry: a plain vertex table plus triangle index
/// triples. Complexes with per-simplex coordinate overrides are unwrapped;
/// a vertex crossing the seam then has several realized copies, recorded in
/// `seams` as (copy vertex index, original vertex index).
struct FlatMesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    seams: Vec<(usize, usize)>,
}

fn flatten(complex: &SimplicialComplex) -> FlatMesh {
    if complex.simplex_coords.is_none() {
        return FlatMesh {
            vertices: complex.vertices.iter().map(pad3).collect(),
            faces: complex
                .simplices
                .iter()
                .map(|t| [t[0], t[1], t[2]])
                .collect(),
            seams: Vec::new(),
        };
    }
    // unwrap: one exported vertex per distinct (original id, realized coords)
    let mut ids: BTreeMap<(usize, [u64; 3]), usize> = BTreeMap::new();
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut origins: Vec<usize> = Vec::new();
    let mut faces = Vec::new();
    for sid in 0..complex.simplices.len() {
        let realized = complex.realized(sid);
        let mut face = [0usize; 3];
        for (slot, (&v, p)) in complex.simplices[sid].iter().zip(&realized).enumerate() {
            let c = pad3(p);
            let key = (v, [c[0].to_bits(), c[1].to_bits(), c[2].to_bits()]);
            let id = *ids.entry(key).or_insert_with(|| {
                vertices.push(c);
                origins.push(v);
                vertices.len() - 1
            });
            face[slot] = id;
        }
        faces.push(face);
    }
    // copies beyond the first of each original vertex are seam duplicates
    let mut first: BTreeMap<usize, usize> = BTreeMap::new();
    let mut seams = Vec::new();
    for (id, &orig) in origins.iter().enumerate() {
        if first.contains_key(&orig) {
            seams.push((id, orig));
        } else {
            first.insert(orig, id);
        }
    }
    FlatMesh {
        vertices,
        faces,
        seams,
    }
}

/// ASCII OFF serialization ("OFF / V F E / vertices / faces").
pub fn write_off(complex: &SimplicialComplex) -> String {
    let m = flatten(complex);
    let mut out = String::from("OFF\n");
    for &(id, orig) in &m.seams {
        let _ = writeln!(out, "# seam vertex {id} duplicates vertex {orig}");
    }
    let _ = writeln!(out, "{} {} 0", m.vertices.len(), m.faces.len());
    for v in &m.vertices {
        let _ = writeln!(out, "{} {} {}", v[0], v[1], v[2]);
    }
    for f in &m.faces {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}

/// Wavefront OBJ serialization (v/f records, 1-based indices).
pub fn write_obj(complex: &SimplicialComplex) -> String {
    let m = flatten(complex);
    let mut out = String::new();
    for &(id, orig) in &m.seams {
        let _ = writeln!(out, "# seam vertex {} duplicates vertex {}", id + 1, orig + 1);
    }
    for v in &m.vertices {
        let _ = writeln!(out, "v {} {} {}", v[0], v[1], v[2]);
    }
    for f in &m.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

fn meaningful_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
}

fn parse_f64(tok: &str) -> Result<f64> {
    tok.parse::<f64>()
        .map_err(|_| Error::Parse(format!("bad float '{tok}'")))
}

fn parse_usize(tok: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::Parse(format!("bad index '{tok}'")))
}

fn build_complex(vertices: Vec<Point>, faces: Vec<Vec<usize>>) -> Result<SimplicialComplex> {
    let nv = vertices.len();
    for f in &faces {
        if f.len() != 3 {
            return Err(Error::Parse(format!(
                "only triangle faces are supported, got arity {}",
                f.len()
            )));
        }
        if f.iter().any(|&v| v >= nv) {
            return Err(Error::Parse(format!("face index out of range in {f:?}")));
        }
        if f[0] == f[1] || f[0] == f[2] || f[1] == f[2] {
            return Err(Error::Parse(format!("degenerate face {f:?}")));
        }
    }
    if faces.is_empty() {
        return Err(Error::Parse("mesh has no faces".to_string()));
    }
    Ok(SimplicialComplex::new(2, 3, vertices, faces))
}

/// ASCII OFF parser (comments and blank lines tolerated).
pub fn read_off(text: &str) -> Result<SimplicialComplex> {
    let mut lines = meaningful_lines(text);
    match lines.next() {
        Some("OFF") => {}
        _ => return Err(Error::Parse("missing OFF header".to_string())),
    }
    let counts = lines
        .next()
        .ok_or_else(|| Error::Parse("missing count line".to_string()))?;
    let toks: Vec<&str> = counts.split_whitespace().collect();
    if toks.len() < 2 {
        return Err(Error::Parse("count line needs V and F".to_string()));
    }
    let nv = parse_usize(toks[0])?;
    let nf = parse_usize(toks[1])?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let l = lines
            .next()
            .ok_or_else(|| Error::Parse("truncated vertex list".to_string()))?;
        let c: Vec<f64> = l
            .split_whitespace()
            .map(parse_f64)
            .collect::<Result<_>>()?;
        if c.len() < 3 {
            return Err(Error::Parse(format!("vertex line '{l}' needs 3 coords")));
        }
        vertices.push(c[..3].to_vec());
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let l = lines
            .next()
            .ok_or_else(|| Error::Parse("truncated face list".to_string()))?;
        let toks: Vec<usize> = l
            .split_whitespace()
            .map(parse_usize)
            .collect::<Result<_>>()?;
        if toks.is_empty() || toks.len() != toks[0] + 1 {
            return Err(Error::Parse(format!("malformed face line '{l}'")));
        }
        faces.push(toks[1..].to_vec());
    }
    build_complex(vertices, faces)
}

/// Wavefront OBJ parser: v/f records only, attributes after slashes ignored.
pub fn read_obj(text: &str) -> Result<SimplicialComplex> {
    let mut vertices: Vec<Point> = Vec::new();
    let mut faces: Vec<Vec<usize>> = Vec::new();
    for l in meaningful_lines(text) {
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("v") => {
                let c: Vec<f64> = toks.map(parse_f64).collect::<Result<_>>()?;
                if c.len() < 3 {
                    return Err(Error::Parse(format!("vertex line '{l}' needs 3 coords")));
                }
                vertices.push(c[..3].to_vec());
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|t| {
                        let first = t.split('/').next().unwrap_or(t);
                        let i = parse_usize(first)?;
                        if i == 0 {
                            return Err(Error::Parse("OBJ indices are 1-based".to_string()));
                        }
                        Ok(i - 1)
                    })
                    .collect::<Result<_>>()?;
                faces.push(idx);
            }
            // ignore normals, texture coords, groups, materials, etc.
            Some(_) => {}
            None => {}
        }
    }
    build_complex(vertices, faces)
}

/// Read a triangle mesh, dispatching on the file extension (.off / .obj).
pub fn read_mesh_file(path: &Path) -> Result<SimplicialComplex> {
    let text = std::fs::read_to_string(path)?;
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("off") => read_off(&text),
        Some("obj") => read_obj(&text),
        _ => {
            // sniff: OFF files start with the OFF keyword
            if meaningful_lines(&text).next() == Some("OFF") {
                read_off(&text)
            } else {
                read_obj(&text)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use proptest::prelude::*;

    #[test]
    fn off_round_trip_octahedron() {
        let c = fixtures::unit_octahedron();
        let text = write_off(&c);
        let back = read_off(&text).unwrap();
        assert_eq!(back.vertices, c.vertices);
        assert_eq!(back.simplices, c.simplices);
    }

    #[test]
    fn obj_round_trip_octahedron() {
        let c = fixtures::unit_octahedron();
        let text = write_obj(&c);
        let back = read_obj(&text).unwrap();
        assert_eq!(back.vertices, c.vertices);
        assert_eq!(back.simplices, c.simplices);
    }

    #[test]
    fn unwrapped_export_flags_seams() {
        // two triangles sharing an edge, with per-simplex coordinate
        // overrides that disagree on one shared vertex (a seam crossing)
        let vertices = vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ];
        let coords = vec![
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        ];
        let mut c = SimplicialComplex::new(
            2,
            2,
            vertices,
            vec![vec![0, 1, 2], vec![1, 2, 3]],
        );
        c.simplex_coords = Some(coords);
        // shift the second triangle's copy of vertex 1 to fake an unwrap
        c.simplex_coords.as_mut().unwrap()[1][0] = vec![2.0, 0.0];
        let text = write_off(&c);
        assert!(text.contains("# seam vertex"));
        let back = read_off(&text).unwrap();
        assert_eq!(back.vertices.len(), 5); // vertex 1 exported twice
        assert_eq!(back.simplices.len(), 2);
    }

    #[test]
    fn malformed_inputs_are_parse_errors() {
        assert!(matches!(read_off("not a mesh"), Err(Error::Parse(_))));
        assert!(matches!(read_off("OFF\n3 1 0\n0 0 0\n"), Err(Error::Parse(_))));
        assert!(matches!(
            read_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 5\n"),
            Err(Error::Parse(_))
        ));
        assert!(matches!(read_obj("v 0 0 0\n"), Err(Error::Parse(_))));
        assert!(matches!(
            read_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n"),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn histogram_csv_schema() {
        let csv = histogram_csv(&[
            HistBucket {
                lo: 0.0,
                hi: 0.1,
                count: 3,
            },
            HistBucket {
                lo: 0.1,
                hi: 0.2,
                count: 0,
            },
        ]);
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("bucket_lo,bucket_hi,count"));
        assert_eq!(lines.next(), Some("0,0.1,3"));
        assert_eq!(lines.next(), Some("0.1,0.2,0"));
    }

    #[test]
    fn report_schema_fixed_keys() {
        let r = Report::new("triangulate");
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["inputs", "metrics", "stage", "witnesses"]);
    }

    proptest! {
        #[test]
        fn off_and_obj_round_trip_random_meshes(
            coords in proptest::collection::vec(-1.0e3f64..1.0e3, 12..60),
        ) {
            // build a fan of triangles over an arbitrary vertex cloud
            let nv = coords.len() / 3;
            let vertices: Vec<Point> =
                (0..nv).map(|i| coords[3 * i..3 * i + 3].to_vec()).collect();
            let faces: Vec<Vec<usize>> =
                (1..nv - 1).map(|i| vec![0, i, i + 1]).collect();
            let c = SimplicialComplex::new(2, 3, vertices, faces);
            let off = read_off(&write_off(&c)).unwrap();
            prop_assert_eq!(&off.vertices, &c.vertices);
            prop_assert_eq!(&off.simplices, &c.simplices);
            let obj = read_obj(&write_obj(&c)).unwrap();
            prop_assert_eq!(&obj.vertices, &c.vertices);
            prop_assert_eq!(&obj.simplices, &c.simplices);
        }
    }
}
