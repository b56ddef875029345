//! Deterministic file emission: fixed float formatting, stable ordering.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;

/// Float in CSV summaries: 9 significant digits, shortest spelling.
pub fn csv_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{x:.8e}").parse().expect("formatted float re-parses");
    if (1e-4..1e15).contains(&rounded.abs()) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Float in JSON: 17 significant digits in scientific notation.
pub fn json_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Pretty JSON whose floats always carry 17 significant digits.
struct FixedFloats<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for FixedFloats<'_> {
    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        end_object_key();
        begin_object_value();
        end_object_value();
    }

    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            w.write_all(json_float(value).as_bytes())
        } else {
            w.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// A simple CSV table; cells are pre-formatted strings.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("writing to memory");
        for r in &self.rows {
            w.write_record(r).expect("writing to memory");
        }
        w.into_inner().expect("flushing to memory")
    }
}

/// Binary greyscale PGM of a 2D grid, x along columns and y rows with y up.
pub fn pgm(values: &[f64], nx: usize, ny: usize) -> Vec<u8> {
    let max = values.iter().copied().fold(0.0, f64::max);
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    for y in (0..ny).rev() {
        for x in 0..nx {
            let v = if max > 0.0 { values[x * ny + y] / max } else { 0.0 };
            out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub kind: String,
    pub parameters: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub tool: &'static str,
    pub code_version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub files: Vec<ManifestEntry>,
}

/// Collects emitted files under an output directory.
pub struct Emitter {
    root: PathBuf,
    entries: Vec<ManifestEntry>,
}

impl Emitter {
    pub fn new(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, kind: &str, parameters: Value, bytes: &[u8]) -> io::Result<()> {
        let path = self.root.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        log::info!("wrote {}", path.display());
        self.entries.push(ManifestEntry {
            path: name.to_string(),
            kind: kind.to_string(),
            parameters,
        });
        Ok(())
    }

    pub fn table(&mut self, name: &str, kind: &str, parameters: Value, table: &Table) -> io::Result<()> {
        self.write(name, kind, parameters, &table.render())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, kind: &str, parameters: Value, value: &T) -> io::Result<()> {
        let text = to_json_string(value).map_err(io::Error::other)?;
        self.write(name, kind, parameters, text.as_bytes())
    }

    pub fn entries(&self) -> &[ManifestEntry] {
        &self.entries
    }

    /// Writes `manifest.json` and returns the files it lists.
    pub fn finish<C: Serialize>(self, command: &str, config: &C) -> io::Result<Vec<ManifestEntry>> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            code_version: env!("CARGO_PKG_VERSION"),
            command,
            config,
            files: self.entries,
        };
        let text = to_json_string(&manifest).map_err(io::Error::other)?;
        fs::write(self.root.join("manifest.json"), text)?;
        Ok(manifest.files)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_floats_have_nine_significant_digits() {
        assert_eq!(csv_float(0.24306277056269581), "0.243062771");
        assert_eq!(csv_float(1.0), "1");
        assert_eq!(csv_float(-0.0), "0");
        assert_eq!(csv_float(123456789012.0), "123456789000");
        assert_eq!(csv_float(1.2421578712e-15), "1.24215787e-15");
        assert_eq!(csv_float(-3e20), "-3e20");
    }

    #[test]
    fn json_floats_have_seventeen_digits_and_round_trip() {
        #[derive(Serialize)]
        struct S {
            x: f64,
            v: Vec<f64>,
            n: usize,
        }
        let s = S {
            x: 0.1,
            v: vec![std::f64::consts::PI, -2.5],
            n: 3,
        };
        let text = to_json_string(&s).unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert!(text.contains("\"n\": 3"));
        let back: Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.1));
        assert_eq!(back["v"][0].as_f64(), Some(std::f64::consts::PI));
    }

    #[test]
    fn pgm_scales_to_peak() {
        let img = pgm(&[0.0, 1.0, 0.5, 0.25], 2, 2);
        let header = b"P5\n2 2\n255\n";
        assert_eq!(&img[..header.len()], header);
        // top row is y = 1: (0,1)=1.0, (1,1)=0.25; bottom row y = 0
        assert_eq!(&img[header.len()..], &[255, 64, 0, 128]);
    }

    #[test]
    fn table_renders_rows() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x".into()]);
        t.push(vec!["2".into(), "y,z".into()]);
        assert_eq!(t.render(), b"a,b\n1,x\n2,\"y,z\"\n");
    }
}
