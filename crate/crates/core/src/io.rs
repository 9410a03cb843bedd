//! Binary dumps and CSV tables.
//!
//! Binary files are little-endian with a 32-byte header followed by raw
//! `f64` payload:
//!
//! ```text
//! STBL  magic[4] version:u16 dim:u16 alpha:f64 dt:f64 seed:u64
//!       payload n_steps × dim increments (n_steps = payload / (8·dim))
//! GRID  magic[4] version:u16 dim:u16 period:f64 n_points:u64 reserved:u64
//!       payload n_points^dim values, row-major
//! PATH  magic[4] version:u16 dim:u16 t0:f64 dt:f64 n_steps:u32 n_paths:u32
//!       payload n_paths × (n_steps + 1) × dim states
//! ```
//!
//! CSV tables start with a `#schema=<name>/v<k>` comment line and a header
//! row; numbers use the shortest round-trip representation, so equal data
//! give equal bytes. Later lines starting with `#` are comments.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use crate::averaging::RateReport;
use crate::error::{Error, Result};
use crate::pde::PdeSolution;
use crate::sde::{PathEnsemble, SamplePath};
use crate::spectral::{GridFunction, PeriodicGrid};
use crate::stable_noise::{StableParams, StablePathIncrements, TimeGrid};

pub const FORMAT_VERSION: u16 = 1;
const HEADER_LEN: usize = 32;

struct Header([u8; HEADER_LEN]);

impl Header {
    fn new(magic: &[u8; 4], dim: usize) -> Self {
        let mut h = [0u8; HEADER_LEN];
        h[..4].copy_from_slice(magic);
        h[4..6].copy_from_slice(&FORMAT_VERSION.to_le_bytes());
        h[6..8].copy_from_slice(&(dim as u16).to_le_bytes());
        Self(h)
    }

    fn put(&mut self, offset: usize, bytes: &[u8]) {
        self.0[offset..offset + bytes.len()].copy_from_slice(bytes);
    }

    fn f64_at(&self, offset: usize) -> f64 {
        f64::from_le_bytes(self.0[offset..offset + 8].try_into().unwrap())
    }

    fn u64_at(&self, offset: usize) -> u64 {
        u64::from_le_bytes(self.0[offset..offset + 8].try_into().unwrap())
    }

    fn u32_at(&self, offset: usize) -> u32 {
        u32::from_le_bytes(self.0[offset..offset + 4].try_into().unwrap())
    }

    fn read(r: &mut impl Read, magic: &[u8; 4]) -> Result<(Self, usize)> {
        let mut h = [0u8; HEADER_LEN];
        r.read_exact(&mut h)
            .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
        if &h[..4] != magic {
            return Err(Error::Format(format!(
                "expected magic {:?}, found {:?}",
                String::from_utf8_lossy(magic),
                String::from_utf8_lossy(&h[..4])
            )));
        }
        let version = u16::from_le_bytes([h[4], h[5]]);
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let dim = u16::from_le_bytes([h[6], h[7]]) as usize;
        if dim == 0 {
            return Err(Error::Format("zero dimension".into()));
        }
        Ok((Self(h), dim))
    }
}

fn write_payload(w: &mut impl Write, values: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_payload(r: &mut impl Read) -> Result<Vec<f64>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    if buf.len() % 8 != 0 {
        return Err(Error::Format("payload is not a whole number of f64 values".into()));
    }
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

pub fn write_increments(w: &mut impl Write, inc: &StablePathIncrements) -> Result<()> {
    let mut h = Header::new(b"STBL", inc.dim());
    h.put(8, &inc.params().alpha().to_le_bytes());
    h.put(16, &inc.grid().dt().to_le_bytes());
    h.put(24, &inc.seed().to_le_bytes());
    w.write_all(&h.0)?;
    write_payload(w, inc.as_slice())
}

/// Reads an `STBL` dump; the grid starts at `t = 0` and the path index is 0.
pub fn read_increments(r: &mut impl Read) -> Result<StablePathIncrements> {
    let (h, dim) = Header::read(r, b"STBL")?;
    let alpha = h.f64_at(8);
    let dt = h.f64_at(16);
    let seed = h.u64_at(24);
    let values = read_payload(r)?;
    if values.is_empty() || values.len() % dim != 0 {
        return Err(Error::Format("increment payload does not fill whole steps".into()));
    }
    let n_steps = values.len() / dim;
    let grid = TimeGrid::new(0.0, dt * n_steps as f64, n_steps)?;
    StablePathIncrements::from_parts(StableParams::standard(alpha)?, grid, dim, values, seed, 0)
}

pub fn write_grid_function(w: &mut impl Write, f: &GridFunction) -> Result<()> {
    let g = f.grid();
    let mut h = Header::new(b"GRID", g.dim());
    h.put(8, &g.period().to_le_bytes());
    h.put(16, &(g.n_points() as u64).to_le_bytes());
    w.write_all(&h.0)?;
    write_payload(w, f.values())
}

pub fn read_grid_function(r: &mut impl Read) -> Result<GridFunction> {
    let (h, dim) = Header::read(r, b"GRID")?;
    let grid = PeriodicGrid::new(dim, h.f64_at(8), h.u64_at(16) as usize)
        .map_err(|e| Error::Format(format!("bad grid header: {e}")))?;
    let values = read_payload(r)?;
    GridFunction::new(grid, values).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_paths(w: &mut impl Write, paths: &[SamplePath]) -> Result<()> {
    let first = paths.first().ok_or_else(|| Error::param("no paths to write"))?;
    let grid = first.grid();
    if paths.iter().any(|p| p.grid() != grid || p.dim() != first.dim()) {
        return Err(Error::Shape("paths differ in grid or dimension".into()));
    }
    let mut h = Header::new(b"PATH", first.dim());
    h.put(8, &grid.t0().to_le_bytes());
    h.put(16, &grid.dt().to_le_bytes());
    h.put(24, &(grid.n_steps() as u32).to_le_bytes());
    h.put(28, &(paths.len() as u32).to_le_bytes());
    w.write_all(&h.0)?;
    for p in paths {
        write_payload(w, p.values())?;
    }
    Ok(())
}

pub fn read_paths(r: &mut impl Read) -> Result<Vec<SamplePath>> {
    let (h, dim) = Header::read(r, b"PATH")?;
    let (t0, dt) = (h.f64_at(8), h.f64_at(16));
    let n_steps = h.u32_at(24) as usize;
    let n_paths = h.u32_at(28) as usize;
    let grid = TimeGrid::new(t0, t0 + dt * n_steps as f64, n_steps)?;
    let values = read_payload(r)?;
    let per_path = (n_steps + 1) * dim;
    if values.len() != per_path * n_paths {
        return Err(Error::Format(format!(
            "expected {} values, found {}",
            per_path * n_paths,
            values.len()
        )));
    }
    values
        .chunks(per_path)
        .map(|c| SamplePath::new(grid, dim, c.to_vec()))
        .collect()
}

pub fn save(path: &Path, write: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load<T>(path: &Path, read: impl FnOnce(&mut std::io::BufReader<std::fs::File>) -> Result<T>) -> Result<T> {
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    read(&mut r)
}

/// Shortest round-trip text, in exponent form outside `[1e-4, 1e15)`.
pub fn fmt_num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub schema: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(schema: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            schema: schema.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values.iter().map(|v| fmt_num(*v)).collect());
    }

    pub fn push_cells(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        self.rows.iter().map(|r| r[i].parse().ok()).collect()
    }

    pub fn render(&self) -> String {
        let mut s = format!("#schema={}\n{}\n", self.schema, self.columns.join(","));
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render())?;
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let schema = lines
            .next()
            .and_then(|l| l.strip_prefix("#schema="))
            .ok_or_else(|| Error::Format("missing #schema= line".into()))?
            .to_string();
        let columns: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Format("missing header row".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let rows = lines
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                let cells: Vec<String> = l.split(',').map(str::to_string).collect();
                if cells.len() == columns.len() {
                    Ok(cells)
                } else {
                    Err(Error::Format(format!("row has {} cells, expected {}", cells.len(), columns.len())))
                }
            })
            .collect::<Result<_>>()?;
        Ok(Self { schema, columns, rows })
    }
}

/// `(x, f)` in 1D or `(x1, x2, f)` in 2D.
pub fn grid_function_csv(f: &GridFunction) -> CsvTable {
    let g = f.grid();
    let mut t = match g.dim() {
        1 => CsvTable::new("grid_function/v1", &["x", "f"]),
        _ => CsvTable::new("grid_function/v1", &["x1", "x2", "f"]),
    };
    for (i, v) in f.values().iter().enumerate() {
        let p = g.point(i);
        match g.dim() {
            1 => t.push(&[p[0], *v]),
            _ => t.push(&[p[0], p[1], *v]),
        }
    }
    t
}

/// `(t, x, u)` rows for every stored snapshot of a one-dimensional solve.
pub fn snapshots_csv(sol: &PdeSolution) -> Result<CsvTable> {
    let g = sol.spec.grid();
    if g.dim() != 1 {
        return Err(Error::Unsupported("snapshot CSV is one-dimensional".into()));
    }
    let mut t = CsvTable::new("pde_snapshots/v1", &["t", "x", "u"]);
    for (time, u) in sol.times.iter().zip(&sol.snapshots) {
        for (i, v) in u.values().iter().enumerate() {
            t.push(&[*time, g.point(i)[0], *v]);
        }
    }
    Ok(t)
}

/// `(path_id, t, x1..x_d)` rows.
pub fn ensemble_csv(ens: &PathEnsemble) -> CsvTable {
    let d = ens.paths.first().map_or(1, SamplePath::dim);
    let mut cols = vec!["path_id".to_string(), "t".to_string()];
    cols.extend((1..=d).map(|i| format!("x{i}")));
    let mut t = CsvTable {
        schema: "ensemble/v1".into(),
        columns: cols,
        rows: Vec::new(),
    };
    for (id, p) in ens.paths.iter().enumerate() {
        for k in 0..=p.grid().n_steps() {
            let mut row = vec![id.to_string(), fmt_num(p.grid().time(k))];
            row.extend(p.state(k).iter().map(|v| fmt_num(*v)));
            t.rows.push(row);
        }
    }
    t
}

/// `(alpha, beta, gamma, iota, p, delta1, exponent, region)` rows.
pub fn rate_reports_csv(reports: &[RateReport]) -> CsvTable {
    let mut t = CsvTable::new(
        "rate_report/v1",
        &["alpha", "beta", "gamma", "iota", "p", "delta1", "exponent", "region"],
    );
    for r in reports {
        let mut cells: Vec<String> = [r.alpha, r.beta, r.gamma, r.iota, r.p, r.delta1, r.exponent]
            .iter()
            .map(|v| fmt_num(*v))
            .collect();
        cells.push(r.region.to_string());
        t.push_cells(cells);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stable_noise::sample_increments;

    #[test]
    fn increments_roundtrip() {
        let grid = TimeGrid::new(0.0, 1.0, 37).unwrap();
        let inc = sample_increments(StableParams::standard(1.3).unwrap(), grid, 2, 77, 0).unwrap();
        let mut buf = Vec::new();
        write_increments(&mut buf, &inc).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 37 * 2 * 8);
        assert_eq!(&buf[..4], b"STBL");
        let back = read_increments(&mut buf.as_slice()).unwrap();
        assert_eq!(back.checksum(), inc.checksum());
        assert_eq!(back.seed(), 77);
        assert_eq!(back.grid().n_steps(), 37);
        assert!((back.grid().dt() - grid.dt()).abs() < 1e-18);
    }

    #[test]
    fn grid_roundtrip_and_magic_check() {
        let g = PeriodicGrid::new(2, 3.0, 16).unwrap();
        let f = GridFunction::from_fn(g, |x| x[0] - 2.0 * x[1]);
        let mut buf = Vec::new();
        write_grid_function(&mut buf, &f).unwrap();
        assert_eq!(read_grid_function(&mut buf.as_slice()).unwrap(), f);
        assert!(matches!(read_increments(&mut buf.as_slice()), Err(Error::Format(_))));
        buf.truncate(10);
        assert!(read_grid_function(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn paths_roundtrip() {
        let grid = TimeGrid::new(0.5, 1.5, 4).unwrap();
        let a = SamplePath::new(grid, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let b = SamplePath::new(grid, 1, vec![5.0; 5]).unwrap();
        let mut buf = Vec::new();
        write_paths(&mut buf, &[a.clone(), b.clone()]).unwrap();
        let back = read_paths(&mut buf.as_slice()).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn csv_roundtrip() {
        let mut t = CsvTable::new("demo/v1", &["a", "b"]);
        t.push(&[0.1, 2.0]);
        t.push(&[1e-300, -3.5]);
        let text = t.render();
        assert!(text.starts_with("#schema=demo/v1\na,b\n"));
        let back = CsvTable::parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.column("a").unwrap(), vec![0.1, 1e-300]);
        assert!(text.contains("1e-300"));
        assert!(CsvTable::parse("a,b\n1,2\n").is_err());
    }
}
