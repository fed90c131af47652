//! Self-describing container for sampled fields, in binary and CSV form.
//!
//! Both encodings round-trip bit-exactly. The layout is documented in
//! `docs/FORMAT.md`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, GridSpec, Lattice};
use crate::linalg::packed_len;
use crate::tensor_field::{ScalarField, SymTensorField, VectorField};

pub const MAGIC: &[u8; 8] = b"PDPTFLD\0";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldKind {
    Scalar,
    Vector,
    SymTensor,
    /// Density on a `(x, xi)` phase-space lattice.
    PhaseDensity,
    /// Time levels of a gas flow; components are the conserved variables.
    Flow,
}

impl FieldKind {
    fn code(self) -> u32 {
        match self {
            Self::Scalar => 0,
            Self::Vector => 1,
            Self::SymTensor => 2,
            Self::PhaseDensity => 3,
            Self::Flow => 4,
        }
    }

    fn from_code(code: u32) -> Result<Self> {
        Ok(match code {
            0 => Self::Scalar,
            1 => Self::Vector,
            2 => Self::SymTensor,
            3 => Self::PhaseDensity,
            4 => Self::Flow,
            _ => return Err(Error::Format(format!("unknown field kind {code}"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Scalar => "scalar",
            Self::Vector => "vector",
            Self::SymTensor => "sym-tensor",
            Self::PhaseDensity => "phase-density",
            Self::Flow => "flow",
        }
    }

    fn from_name(name: &str) -> Result<Self> {
        [Self::Scalar, Self::Vector, Self::SymTensor, Self::PhaseDensity, Self::Flow]
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Format(format!("unknown field kind '{name}'")))
    }
}

/// A lattice with `ncomp` interleaved components per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDump {
    pub kind: FieldKind,
    /// Spatial dimension of the underlying problem.
    pub d: usize,
    pub lattice: Lattice,
    pub ncomp: usize,
    pub data: Vec<f64>,
}

impl FieldDump {
    pub fn new(kind: FieldKind, d: usize, lattice: Lattice, ncomp: usize, data: Vec<f64>) -> Result<Self> {
        let expected = lattice.len() * ncomp;
        if data.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: data.len() });
        }
        Ok(Self { kind, d, lattice, ncomp, data })
    }

    fn column_names(&self) -> Vec<String> {
        if self.kind == FieldKind::SymTensor {
            let n = self.d + 1;
            let mut names = Vec::with_capacity(self.ncomp);
            for i in 0..n {
                for j in i..n {
                    names.push(format!("s{i}{j}"));
                }
            }
            names
        } else {
            (0..self.ncomp).map(|k| format!("c{k}")).collect()
        }
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for v in [VERSION, self.kind.code(), self.d as u32, self.lattice.ndim() as u32, self.ncomp as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        for a in self.lattice.axes() {
            w.write_all(&a.lo.to_le_bytes())?;
            w.write_all(&a.hi.to_le_bytes())?;
            w.write_all(&(a.n as u64).to_le_bytes())?;
            w.write_all(&[a.periodic as u8])?;
        }
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("bad magic, not a field dump".into()));
        }
        let mut u32s = [0u32; 5];
        for v in &mut u32s {
            *v = read_u32(&mut r)?;
        }
        let [version, kind, d, naxes, ncomp] = u32s;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let kind = FieldKind::from_code(kind)?;
        let mut axes = Vec::with_capacity(naxes as usize);
        for _ in 0..naxes {
            let lo = read_f64(&mut r)?;
            let hi = read_f64(&mut r)?;
            let mut n = [0u8; 8];
            r.read_exact(&mut n)?;
            let mut p = [0u8; 1];
            r.read_exact(&mut p)?;
            axes.push(Axis { lo, hi, n: u64::from_le_bytes(n) as usize, periodic: p[0] != 0 });
        }
        let lattice = Lattice::new(axes)?;
        let len = lattice.len() * ncomp as usize;
        let mut bytes = vec![0u8; len * 8];
        r.read_exact(&mut bytes)?;
        let data = bytes.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after field data".into()));
        }
        Self::new(kind, d as usize, lattice, ncomp as usize, data)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# pdpt-field {VERSION}")?;
        writeln!(w, "# kind {}", self.kind.name())?;
        writeln!(w, "# d {}", self.d)?;
        writeln!(w, "# ncomp {}", self.ncomp)?;
        for a in self.lattice.axes() {
            writeln!(w, "# axis {:e} {:e} {} {}", a.lo, a.hi, a.n, a.periodic as u8)?;
        }
        writeln!(w, "cell,{}", self.column_names().join(","))?;
        for (c, row) in self.data.chunks(self.ncomp.max(1)).enumerate() {
            write!(w, "{c}")?;
            for v in row {
                write!(w, ",{v:e}")?;
            }
            writeln!(w)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut kind = None;
        let mut d = None;
        let mut ncomp = None;
        let mut axes = Vec::new();
        let mut data = Vec::new();
        let mut seen_columns = false;
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let bad = |msg: &str| Error::Format(format!("line {}: {msg}", lineno + 1));
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                match it.next() {
                    Some("pdpt-field") => {
                        let v: u32 = it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad version"))?;
                        if v != VERSION {
                            return Err(bad("unsupported version"));
                        }
                    }
                    Some("kind") => kind = Some(FieldKind::from_name(it.next().unwrap_or(""))?),
                    Some("d") => d = Some(it.next().and_then(|s| s.parse().ok()).ok_or_else(|| bad("bad d"))?),
                    Some("ncomp") => {
                        ncomp = Some(it.next().and_then(|s| s.parse::<usize>().ok()).ok_or_else(|| bad("bad ncomp"))?)
                    }
                    Some("axis") => {
                        let f: Vec<&str> = it.collect();
                        if f.len() != 4 {
                            return Err(bad("axis needs lo hi n periodic"));
                        }
                        axes.push(Axis {
                            lo: f[0].parse().map_err(|_| bad("bad axis lo"))?,
                            hi: f[1].parse().map_err(|_| bad("bad axis hi"))?,
                            n: f[2].parse().map_err(|_| bad("bad axis n"))?,
                            periodic: f[3] == "1",
                        });
                    }
                    _ => {}
                }
                continue;
            }
            if !seen_columns {
                seen_columns = true;
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split(',');
            fields.next();
            for f in fields {
                data.push(f.parse::<f64>().map_err(|_| bad("bad number"))?);
            }
        }
        let kind = kind.ok_or_else(|| Error::Format("missing kind header".into()))?;
        let d = d.ok_or_else(|| Error::Format("missing d header".into()))?;
        let ncomp = ncomp.ok_or_else(|| Error::Format("missing ncomp header".into()))?;
        Self::new(kind, d, Lattice::new(axes)?, ncomp, data)
    }

    /// Writes CSV for a `.csv` extension, binary otherwise.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let w = BufWriter::new(File::create(path)?);
        if is_csv(path) {
            self.write_csv(w)
        } else {
            self.write_binary(w)
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let r = BufReader::new(File::open(path)?);
        if is_csv(path) {
            Self::read_csv(r)
        } else {
            Self::read_binary(r)
        }
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

impl From<&SymTensorField> for FieldDump {
    fn from(s: &SymTensorField) -> Self {
        Self {
            kind: FieldKind::SymTensor,
            d: s.d(),
            lattice: s.grid().lattice().clone(),
            ncomp: packed_len(s.n()),
            data: s.packed().to_vec(),
        }
    }
}

impl TryFrom<FieldDump> for SymTensorField {
    type Error = Error;
    fn try_from(dump: FieldDump) -> Result<Self> {
        if dump.kind != FieldKind::SymTensor {
            return Err(Error::Format(format!("expected sym-tensor, found {}", dump.kind.name())));
        }
        let grid = GridSpec::from_lattice(dump.lattice)?;
        if grid.d() != dump.d {
            return Err(Error::DimensionMismatch { expected: dump.d, found: grid.d() });
        }
        SymTensorField::from_packed(grid, dump.data)
    }
}

impl From<&ScalarField> for FieldDump {
    fn from(f: &ScalarField) -> Self {
        Self {
            kind: FieldKind::Scalar,
            d: f.grid.d(),
            lattice: f.grid.lattice().clone(),
            ncomp: 1,
            data: f.values.clone(),
        }
    }
}

impl From<&VectorField> for FieldDump {
    fn from(f: &VectorField) -> Self {
        Self {
            kind: FieldKind::Vector,
            d: f.grid.d(),
            lattice: f.grid.lattice().clone(),
            ncomp: f.ncomp,
            data: f.values.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;

    fn sample() -> SymTensorField {
        let g = GridSpec::uniform((0.0, 1.0), 3, &[(-1.0, 1.0)], &[5]).unwrap();
        SymTensorField::from_fn(&g, |p| {
            Mat::from_row_slice(2, 2, &[1.0 / 3.0 + p[0], p[1].sin(), p[1].sin(), std::f64::consts::PI * p[0]])
        })
    }

    #[test]
    fn binary_roundtrip_is_bit_exact() {
        let s = sample();
        let mut buf = Vec::new();
        FieldDump::from(&s).write_binary(&mut buf).unwrap();
        let back: SymTensorField = FieldDump::read_binary(buf.as_slice()).unwrap().try_into().unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let s = sample();
        let mut buf = Vec::new();
        FieldDump::from(&s).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("cell,s00,s01,s11"));
        let back: SymTensorField = FieldDump::read_csv(buf.as_slice()).unwrap().try_into().unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn truncated_binary_is_rejected() {
        let mut buf = Vec::new();
        FieldDump::from(&sample()).write_binary(&mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(FieldDump::read_binary(buf.as_slice()).is_err());
        assert!(FieldDump::read_binary(&b"NOTADUMP"[..]).is_err());
    }
}
