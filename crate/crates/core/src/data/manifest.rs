//! Line-oriented dataset index.
//!
//! ```text
//! # cvrnn dataset v1
//! <image>\t<truth>\t<seed>\t<shape>[;<shape>...]
//! ```
//!
//! Paths are relative to the manifest's directory and may not contain tabs.
//! A shape is `kind:size:intensity:row:col`. Blank lines and lines starting
//! with `#` are ignored.

use crate::data::{ShapeKind, ShapeSpec};
use crate::error::{Error, Result};

pub const HEADER: &str = "# cvrnn dataset v1";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub image: String,
    pub truth: String,
    pub seed: u64,
    pub shapes: Vec<ShapeSpec>,
}

pub fn format_shape(s: &ShapeSpec) -> String {
    format!("{}:{}:{}:{}:{}", s.kind, s.size, s.intensity, s.position.0, s.position.1)
}

pub fn write_manifest(entries: &[ManifestEntry]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for e in entries {
        let shapes: Vec<String> = e.shapes.iter().map(format_shape).collect();
        out.push_str(&format!("{}\t{}\t{}\t{}\n", e.image, e.truth, e.seed, shapes.join(";")));
    }
    out
}

fn parse_shape(text: &str) -> std::result::Result<ShapeSpec, String> {
    let f: Vec<&str> = text.split(':').collect();
    if f.len() != 5 {
        return Err(format!("shape `{text}` needs 5 fields"));
    }
    let kind: ShapeKind = f[0].parse().map_err(|e: Error| e.to_string())?;
    let num = |s: &str| s.parse::<usize>().map_err(|_| format!("bad integer `{s}` in shape"));
    let intensity = f[2].parse::<f64>().map_err(|_| format!("bad intensity `{}`", f[2]))?;
    Ok(ShapeSpec {
        kind,
        size: num(f[1])?,
        intensity,
        position: (num(f[3])?, num(f[4])?),
    })
}

/// Parses manifest text; errors carry the 1-based line number.
pub fn parse_manifest(text: &str, path: &str) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let err = |message: String| Error::Config {
            path: path.to_string(),
            line: i + 1,
            message,
        };
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(err(format!("expected 4 tab-separated fields, found {}", fields.len())));
        }
        let seed = fields[2].parse().map_err(|_| err(format!("bad seed `{}`", fields[2])))?;
        let shapes = if fields[3].is_empty() {
            Vec::new()
        } else {
            fields[3].split(';').map(parse_shape).collect::<std::result::Result<_, _>>().map_err(err)?
        };
        out.push(ManifestEntry {
            image: fields[0].to_string(),
            truth: fields[1].to_string(),
            seed,
            shapes,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let entries = vec![ManifestEntry {
            image: "image_00000.pgm".into(),
            truth: "truth_00000.pgm".into(),
            seed: 123,
            shapes: vec![
                ShapeSpec {
                    kind: ShapeKind::Triangle,
                    size: 9,
                    intensity: 1.0,
                    position: (3, 4),
                },
                ShapeSpec {
                    kind: ShapeKind::Circle,
                    size: 7,
                    intensity: 0.6,
                    position: (15, 2),
                },
            ],
        }];
        let text = write_manifest(&entries);
        assert!(text.starts_with(HEADER));
        assert_eq!(parse_manifest(&text, "m").unwrap(), entries);
    }

    #[test]
    fn errors_name_the_line() {
        let text = format!("{HEADER}\n\na\tb\tx\tsquare:1:1:0:0\n");
        match parse_manifest(&text, "m.tsv") {
            Err(Error::Config { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_manifest("a\tb\t1\thexagon:1:1:0:0\n", "m").is_err());
    }
}
