//! Minimal OBJ ingestion: `v` and triangular `f` records, everything else
//! skipped with a warning. Face indices are 1-based per the format; slash
//! forms (`f 1/2/3 ...`) keep only the vertex index.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{TriMesh, Vec3};

pub fn read_obj(path: &Path) -> Result<TriMesh> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_obj_from(BufReader::new(file), path)
}

/// Parses an OBJ stream. `path` is only for error messages.
pub fn read_obj_from<R: BufRead>(reader: R, path: &Path) -> Result<TriMesh> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let mut vertices: Vec<Vec3> = Vec::new();
    // Faces keep their source line so bounds errors can name it.
    let mut faces: Vec<(usize, [u32; 3])> = Vec::new();
    let mut ignored: BTreeSet<String> = BTreeSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let keyword = tokens.next().unwrap();
        match keyword {
            "v" => {
                let coords: Vec<&str> = tokens.collect();
                if coords.len() < 3 || coords.len() > 4 {
                    return Err(parse_err(
                        line_no,
                        format!("vertex needs 3 coordinates (optional w), got {}", coords.len()),
                    ));
                }
                let mut xyz = [0.0f64; 3];
                for (i, tok) in coords.iter().take(3).enumerate() {
                    xyz[i] = tok.parse().map_err(|_| {
                        parse_err(line_no, format!("bad vertex coordinate {tok:?}"))
                    })?;
                }
                vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
            }
            "f" => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(parse_err(
                        line_no,
                        format!("only triangles are supported, face has {} vertices", refs.len()),
                    ));
                }
                let mut tri = [0u32; 3];
                for (i, tok) in refs.iter().enumerate() {
                    let first = tok.split('/').next().unwrap();
                    let v: i64 = first.parse().map_err(|_| {
                        parse_err(line_no, format!("bad face index {first:?}"))
                    })?;
                    if v < 1 {
                        return Err(parse_err(
                            line_no,
                            format!("face index {v} is not a positive 1-based reference"),
                        ));
                    }
                    tri[i] = (v - 1) as u32;
                }
                faces.push((line_no, tri));
            }
            other => {
                ignored.insert(other.to_string());
            }
        }
    }

    if !ignored.is_empty() {
        log::warn!(
            "{}: ignored unsupported OBJ records: {}",
            path.display(),
            ignored.into_iter().collect::<Vec<_>>().join(", ")
        );
    }

    for (line_no, tri) in &faces {
        for &v in tri {
            if v as usize >= vertices.len() {
                return Err(parse_err(
                    *line_no,
                    format!(
                        "face references vertex {} but only {} vertices are defined",
                        v + 1,
                        vertices.len()
                    ),
                ));
            }
        }
    }

    TriMesh::new(vertices, faces.into_iter().map(|(_, t)| t).collect()).map_err(|e| {
        Error::InvalidMesh(format!("{}: {e}", path.display()))
    })
}

pub fn write_obj(mesh: &TriMesh, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_obj_to(mesh, BufWriter::new(file), path)
}

/// Plain `v`/`f` records. Coordinates use the shortest representation that
/// parses back to the same float, so a write-read cycle is exact.
pub fn write_obj_to<W: Write>(mesh: &TriMesh, mut writer: W, path: &Path) -> Result<()> {
    let io_err = |e| Error::io(path, e);
    for v in &mesh.vertices {
        writeln!(writer, "v {} {} {}", v.x, v.y, v.z).map_err(io_err)?;
    }
    for f in &mesh.faces {
        writeln!(writer, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).map_err(io_err)?;
    }
    writer.flush().map_err(io_err)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::box_mesh;
    use std::io::Cursor;
    use std::path::PathBuf;

    fn p() -> PathBuf {
        PathBuf::from("test.obj")
    }

    fn parse(text: &str) -> Result<TriMesh> {
        read_obj_from(Cursor::new(text.as_bytes()), &p())
    }

    #[test]
    fn parses_vertices_and_faces() {
        let m = parse(
            "# tetrahedron\n\
             v 0 0 0\n\
             v 1 0 0\n\
             v 0 1 0\n\
             v 0 0 1\n\
             f 1 3 2\n\
             f 1 2 4\n\
             f 1 4 3\n\
             f 2 3 4\n",
        )
        .unwrap();
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.faces.len(), 4);
        assert!(m.is_watertight());
    }

    #[test]
    fn slash_forms_take_the_vertex_index() {
        let m = parse(
            "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n\
             f 1/1 3/3 2/2\nf 1//1 2//2 4//4\nf 1/1/1 4/4/4 3/3/3\nf 2 3 4\n",
        )
        .unwrap();
        assert_eq!(m.faces.len(), 4);
    }

    #[test]
    fn unsupported_records_are_skipped() {
        let m = parse(
            "o thing\ns off\nvt 0 0\nvn 0 0 1\n\
             v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\n\
             f 1 3 2\nf 1 2 4\nf 1 4 3\nf 2 3 4\n",
        )
        .unwrap();
        assert_eq!(m.vertices.len(), 4);
    }

    #[test]
    fn zero_index_errors_with_line() {
        let err = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_index_errors_with_line() {
        let err = parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 3\nf 1 2 9\nf 1 4 3\nf 2 3 4\n")
            .unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 6);
                assert!(message.contains("9"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn quads_are_rejected() {
        let err = parse("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 5, .. }));
    }

    #[test]
    fn write_read_round_trip_is_exact() {
        let mesh = box_mesh(Vec3::new(0.3, 0.7, 0.11), 2);
        let mut buf = Vec::new();
        write_obj_to(&mesh, &mut buf, &p()).unwrap();
        let back = read_obj_from(Cursor::new(&buf[..]), &p()).unwrap();
        assert_eq!(back.vertices.len(), mesh.vertices.len());
        assert_eq!(back.faces, mesh.faces);
        for (a, b) in mesh.vertices.iter().zip(&back.vertices) {
            assert_eq!(a.x.to_bits(), b.x.to_bits());
            assert_eq!(a.y.to_bits(), b.y.to_bits());
            assert_eq!(a.z.to_bits(), b.z.to_bits());
        }
    }
}
