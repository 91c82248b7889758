//! Plain-text grid format.
//!
//! ```text
//! FQPTGRID v1 <rows> <cols> <real|complex> <plane> <prep> <proj>
//! v v v ...        one line per row; complex cells are `re im` pairs
//! ```
//!
//! `prep` and `proj` are polarization labels or `none`. Values are written
//! with 17 significant digits, which parse back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use fqpt_core::grid::{Grid, Plane};
use fqpt_core::su2::Polarization;
use num_complex::Complex;

use crate::error::{CliError, Result};

const MAGIC: &str = "FQPTGRID";
const VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq)]
pub enum GridData {
    Real(Grid<f64>),
    Complex(Grid<Complex<f64>>),
}

impl GridData {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            GridData::Real(g) => g.shape(),
            GridData::Complex(g) => g.shape(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFile {
    pub plane: Plane,
    pub prep: Option<Polarization>,
    pub proj: Option<Polarization>,
    pub data: GridData,
}

fn pol_label(p: Option<Polarization>) -> &'static str {
    p.map_or("none", |p| p.label())
}

fn push_value(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").expect("writing to a String");
}

impl GridFile {
    /// Real grid with no polarization tags.
    pub fn real(plane: Plane, values: Grid<f64>) -> Self {
        Self {
            plane,
            prep: None,
            proj: None,
            data: GridData::Real(values),
        }
    }

    pub fn render(&self) -> String {
        let (rows, cols) = self.data.shape();
        let kind = match self.data {
            GridData::Real(_) => "real",
            GridData::Complex(_) => "complex",
        };
        let mut out = format!(
            "{MAGIC} {VERSION} {rows} {cols} {kind} {} {} {}\n",
            self.plane.label(),
            pol_label(self.prep),
            pol_label(self.proj)
        );
        for r in 0..rows {
            for c in 0..cols {
                if c > 0 {
                    out.push(' ');
                }
                match &self.data {
                    GridData::Real(g) => push_value(&mut out, *g.get(r, c)),
                    GridData::Complex(g) => {
                        let z = g.get(r, c);
                        push_value(&mut out, z.re);
                        out.push(' ');
                        push_value(&mut out, z.im);
                    }
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |m: String| CliError::format(path, m);
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().unwrap_or("").split_whitespace().collect();
        if header.len() != 8 || header[0] != MAGIC || header[1] != VERSION {
            return Err(bad(format!("expected a `{MAGIC} {VERSION}` header with 8 fields")));
        }
        let rows: usize = header[2].parse().map_err(|_| bad(format!("bad row count {:?}", header[2])))?;
        let cols: usize = header[3].parse().map_err(|_| bad(format!("bad column count {:?}", header[3])))?;
        let complex = match header[4] {
            "real" => false,
            "complex" => true,
            k => return Err(bad(format!("unknown value kind {k:?}"))),
        };
        let plane = Plane::from_label(header[5]).ok_or_else(|| bad(format!("unknown plane {:?}", header[5])))?;
        let pol = |s: &str| -> Result<Option<Polarization>> {
            if s == "none" {
                Ok(None)
            } else {
                Polarization::from_label(s)
                    .map(Some)
                    .ok_or_else(|| bad(format!("unknown polarization {s:?}")))
            }
        };
        let prep = pol(header[6])?;
        let proj = pol(header[7])?;

        let per_cell = if complex { 2 } else { 1 };
        let expected = rows * cols * per_cell;
        let mut values = Vec::with_capacity(expected);
        for token in lines.flat_map(str::split_whitespace) {
            let v: f64 = token.parse().map_err(|_| bad(format!("bad value {token:?}")))?;
            values.push(v);
        }
        if values.len() != expected {
            return Err(bad(format!("header promises {expected} values, found {}", values.len())));
        }
        let data = if complex {
            let cells = values.chunks_exact(2).map(|p| Complex::new(p[0], p[1])).collect();
            GridData::Complex(Grid::from_vec(rows, cols, cells).map_err(|e| bad(e.to_string()))?)
        } else {
            GridData::Real(Grid::from_vec(rows, cols, values).map_err(|e| bad(e.to_string()))?)
        };
        Ok(Self { plane, prep, proj, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(CliError::io(path))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        Self::parse(&text, path)
    }

    pub fn into_real(self, path: &Path) -> Result<Grid<f64>> {
        match self.data {
            GridData::Real(g) => Ok(g),
            GridData::Complex(_) => Err(CliError::format(path, "expected a real grid")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn here() -> &'static Path {
        Path::new("test.grid")
    }

    #[test]
    fn header_layout() {
        let g = GridFile {
            plane: Plane::Far,
            prep: Some(Polarization::L),
            proj: None,
            data: GridData::Real(Grid::from_vec(1, 2, vec![0.5, -0.0]).unwrap()),
        };
        let text = g.render();
        assert_eq!(
            text,
            "FQPTGRID v1 1 2 real far L none\n5.0000000000000000e-1 -0.0000000000000000e0\n"
        );
        let back = GridFile::parse(&text, here()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn malformed_files_rejected() {
        for text in [
            "",
            "FQPTGRID v2 1 1 real near none none\n1\n",
            "FQPTGRID v1 1 2 real near none none\n1\n",
            "FQPTGRID v1 1 1 imag near none none\n1\n",
            "FQPTGRID v1 1 1 real side none none\n1\n",
            "FQPTGRID v1 1 1 real near Q none\n1\n",
            "FQPTGRID v1 1 1 real near none none\nx\n",
        ] {
            assert!(GridFile::parse(text, here()).is_err(), "{text:?}");
        }
    }

    proptest! {
        #[test]
        fn values_survive_text(
            rows in 1usize..5,
            cols in 1usize..5,
            seed in proptest::collection::vec(proptest::num::f64::ANY, 50),
            complex in any::<bool>(),
        ) {
            let data = if complex {
                GridData::Complex(Grid::from_fn(rows, cols, |r, c| {
                    Complex::new(seed[r * cols + c], seed[25 + r * cols + c])
                }))
            } else {
                GridData::Real(Grid::from_fn(rows, cols, |r, c| seed[r * cols + c]))
            };
            let g = GridFile { plane: Plane::Near, prep: Some(Polarization::H), proj: Some(Polarization::D), data };
            let back = GridFile::parse(&g.render(), here()).unwrap();
            let bits = |d: &GridData| -> Vec<u64> {
                match d {
                    GridData::Real(g) => g.iter().map(|v| v.to_bits()).collect(),
                    GridData::Complex(g) => g.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]).collect(),
                }
            };
            let (a, b) = (bits(&g.data), bits(&back.data));
            for (x, y) in a.iter().zip(&b) {
                let (fx, fy) = (f64::from_bits(*x), f64::from_bits(*y));
                prop_assert!(x == y || (fx.is_nan() && fy.is_nan()));
            }
        }
    }
}
