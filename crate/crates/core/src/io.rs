//! Binary and CSV file formats.
//!
//! All binary files are little-endian: a six-byte magic, 32-bit unsigned
//! dimensions, then 64-bit floats in row-major order.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::forward::Trajectory;
use crate::grid::{Grid, ScalarField};
use crate::params::{ParamBlock, ParameterSet};
use crate::pet::{Projector, SinogramFrame, SinogramSequence};

pub const FIELD_MAGIC: &[u8; 6] = b"PDEF1\n";
pub const SINOGRAM_MAGIC: &[u8; 6] = b"PDES1\n";
pub const PROJECTOR_MAGIC: &[u8; 6] = b"PDEK1\n";

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn dim_u32(path: &Path, n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| format_err(path, format!("dimension {n} does not fit in 32 bits")))
}

struct Reader {
    path: PathBuf,
    inner: BufReader<File>,
}

impl Reader {
    fn open(path: &Path, magic: &[u8; 6]) -> Result<Self> {
        let mut r = Reader {
            path: path.to_path_buf(),
            inner: BufReader::new(File::open(path)?),
        };
        let mut m = [0u8; 6];
        r.exact(&mut m)?;
        if &m != magic {
            return Err(format_err(path, format!("bad magic, expected {:?}", String::from_utf8_lossy(magic))));
        }
        Ok(r)
    }

    fn exact(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => format_err(&self.path, "truncated file"),
            _ => Error::Io(e),
        })
    }

    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.exact(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let mut buf = vec![0u8; n * 8];
        self.exact(&mut buf)?;
        Ok(buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    fn finish(mut self) -> Result<()> {
        let mut extra = [0u8; 1];
        match self.inner.read(&mut extra)? {
            0 => Ok(()),
            _ => Err(format_err(&self.path, "trailing bytes")),
        }
    }
}

fn write_f64s(w: &mut impl Write, vals: &[f64]) -> Result<()> {
    for v in vals {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_field(path: &Path, f: &ScalarField) -> Result<()> {
    let g = f.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(FIELD_MAGIC)?;
    w.write_all(&dim_u32(path, g.nx)?.to_le_bytes())?;
    w.write_all(&dim_u32(path, g.ny)?.to_le_bytes())?;
    write_f64s(&mut w, f.values())?;
    w.flush()?;
    Ok(())
}

/// Read a field file; the grid must match the stored dimensions.
pub fn read_field(path: &Path, grid: Grid) -> Result<ScalarField> {
    let mut r = Reader::open(path, FIELD_MAGIC)?;
    let (nx, ny) = (r.u32()? as usize, r.u32()? as usize);
    if nx != grid.nx || ny != grid.ny {
        return Err(format_err(
            path,
            format!("field is {nx}x{ny}, expected {}x{}", grid.nx, grid.ny),
        ));
    }
    let vals = r.f64s(nx * ny)?;
    r.finish()?;
    ScalarField::from_vec(grid, vals)
}

/// Dimensions stored in a field file.
pub fn field_dims(path: &Path) -> Result<(usize, usize)> {
    let mut r = Reader::open(path, FIELD_MAGIC)?;
    Ok((r.u32()? as usize, r.u32()? as usize))
}

pub fn write_sinogram(path: &Path, s: &SinogramFrame) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(SINOGRAM_MAGIC)?;
    w.write_all(&dim_u32(path, s.n_angles())?.to_le_bytes())?;
    w.write_all(&dim_u32(path, s.n_bins())?.to_le_bytes())?;
    write_f64s(&mut w, s.values())?;
    w.flush()?;
    Ok(())
}

pub fn read_sinogram(path: &Path, frame: usize) -> Result<SinogramFrame> {
    let mut r = Reader::open(path, SINOGRAM_MAGIC)?;
    let (na, nb) = (r.u32()? as usize, r.u32()? as usize);
    let vals = r.f64s(na * nb)?;
    r.finish()?;
    Ok(SinogramFrame::from_values(na, nb, vals, frame))
}

fn frame_name(f: usize) -> String {
    format!("frame_{f:04}.sino")
}

/// Numbered sinogram files plus `manifest.txt` with the frame count and duration.
pub fn write_sequence(dir: &Path, seq: &SinogramSequence) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (f, frame) in seq.frames.iter().enumerate() {
        write_sinogram(&dir.join(frame_name(f)), frame)?;
    }
    let mut m = BufWriter::new(File::create(dir.join("manifest.txt"))?);
    writeln!(m, "n_frames {}", seq.len())?;
    writeln!(m, "frame_duration {:e}", seq.frame_duration)?;
    m.flush()?;
    Ok(())
}

fn read_manifest(path: &Path) -> Result<Vec<(String, String)>> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| format_err(path, format!("malformed manifest line {line:?}")))?;
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn manifest_value<T: std::str::FromStr>(path: &Path, entries: &[(String, String)], key: &str) -> Result<T> {
    let raw = entries
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v)
        .ok_or_else(|| format_err(path, format!("manifest lacks {key}")))?;
    raw.parse()
        .map_err(|_| format_err(path, format!("cannot parse {key} = {raw:?}")))
}

pub fn read_sequence(dir: &Path) -> Result<SinogramSequence> {
    let mpath = dir.join("manifest.txt");
    let entries = read_manifest(&mpath)?;
    let n: usize = manifest_value(&mpath, &entries, "n_frames")?;
    let duration: f64 = manifest_value(&mpath, &entries, "frame_duration")?;
    let frames = (0..n)
        .map(|f| read_sinogram(&dir.join(frame_name(f)), f))
        .collect::<Result<Vec<_>>>()?;
    SinogramSequence::new(frames, duration)
}

/// Coordinate-list dump: dims (n_angles, n_bins, nx, ny), the bin width,
/// a 64-bit entry count, then `(row u32, col u32, weight f64)` triples. The grid extent is
/// not stored; the reader supplies it.
pub fn write_projector(path: &Path, k: &Projector) -> Result<()> {
    let g = k.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(PROJECTOR_MAGIC)?;
    for n in [k.n_angles(), k.n_bins(), g.nx, g.ny] {
        w.write_all(&dim_u32(path, n)?.to_le_bytes())?;
    }
    w.write_all(&k.bin_width().to_le_bytes())?;
    let triples = k.triples();
    w.write_all(&(triples.len() as u64).to_le_bytes())?;
    for (r, c, v) in triples {
        w.write_all(&r.to_le_bytes())?;
        w.write_all(&c.to_le_bytes())?;
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_projector(path: &Path, grid: Grid) -> Result<Projector> {
    let mut r = Reader::open(path, PROJECTOR_MAGIC)?;
    let (na, nb, nx, ny) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
    if nx != grid.nx || ny != grid.ny {
        return Err(format_err(
            path,
            format!("projector acts on {nx}x{ny}, expected {}x{}", grid.nx, grid.ny),
        ));
    }
    let bin_width = f64::from_bits(r.u64()?);
    let nnz = r.u64()? as usize;
    let mut triples = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        let row = r.u32()?;
        let col = r.u32()?;
        let v = f64::from_bits(r.u64()?);
        triples.push((row, col, v));
    }
    r.finish()?;
    Projector::from_triples(grid, na, nb, bin_width, triples)
}

/// One text row per grid row (`j = 0` first), comma separated.
pub fn write_field_csv(path: &Path, f: &ScalarField) -> Result<()> {
    let g = f.grid();
    let mut w = BufWriter::new(File::create(path)?);
    for j in 0..g.ny {
        let row: Vec<String> = (0..g.nx).map(|i| format!("{}", f.at(i, j))).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_field_csv(path: &Path, grid: Grid) -> Result<ScalarField> {
    let text = fs::read_to_string(path)?;
    let mut vals = Vec::with_capacity(grid.len());
    let mut rows = 0;
    for (n, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let before = vals.len();
        for tok in line.split(',') {
            let v: f64 = tok
                .trim()
                .parse()
                .map_err(|_| format_err(path, format!("row {n}: cannot parse {tok:?}")))?;
            vals.push(v);
        }
        if vals.len() - before != grid.nx {
            return Err(format_err(path, format!("row {n} has {} values, expected {}", vals.len() - before, grid.nx)));
        }
        rows += 1;
    }
    if rows != grid.ny {
        return Err(format_err(path, format!("{rows} rows, expected {}", grid.ny)));
    }
    ScalarField::from_vec(grid, vals)
}

/// Every block as `<name>.fld` inside `dir`.
pub fn write_parameters(dir: &Path, p: &ParameterSet) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (b, f) in p.blocks() {
        write_field(&dir.join(format!("{}.fld", b.name())), f)?;
    }
    Ok(())
}

pub fn read_parameters(dir: &Path, grid: Grid) -> Result<ParameterSet> {
    let mut p = ParameterSet::zeros(grid);
    for b in ParamBlock::ALL {
        *p.block_mut(b) = read_field(&dir.join(format!("{}.fld", b.name())), grid)?;
    }
    Ok(p)
}

/// `cA_kkkk.fld`, `cT_kkkk.fld`, `cV_kkkk.fld` for every level, plus `manifest.txt`.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, s) in traj.states.iter().enumerate() {
        write_field(&dir.join(format!("cA_{k:04}.fld")), &s.ca)?;
        write_field(&dir.join(format!("cT_{k:04}.fld")), &s.ct)?;
        write_field(&dir.join(format!("cV_{k:04}.fld")), &s.cv)?;
    }
    let g = traj.grid();
    let (lx, ly) = g.extent();
    let mut m = BufWriter::new(File::create(dir.join("manifest.txt"))?);
    writeln!(m, "tau {:e}", traj.tau)?;
    writeln!(m, "n_steps {}", traj.n_steps())?;
    writeln!(m, "grid {} {} {:e} {:e}", g.nx, g.ny, lx, ly)?;
    writeln!(m, "clamped_cells {}", traj.clamped_cells)?;
    m.flush()?;
    Ok(())
}

pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let mpath = dir.join("manifest.txt");
    let entries = read_manifest(&mpath)?;
    let tau: f64 = manifest_value(&mpath, &entries, "tau")?;
    let n: usize = manifest_value(&mpath, &entries, "n_steps")?;
    let clamped_cells: usize = manifest_value(&mpath, &entries, "clamped_cells")?;
    let gs: String = manifest_value(&mpath, &entries, "grid")?;
    let parts: Vec<&str> = gs.split_whitespace().collect();
    let bad = || format_err(&mpath, format!("malformed grid line {gs:?}"));
    if parts.len() != 4 {
        return Err(bad());
    }
    let grid = Grid::new(
        parts[0].parse().map_err(|_| bad())?,
        parts[1].parse().map_err(|_| bad())?,
        parts[2].parse().map_err(|_| bad())?,
        parts[3].parse().map_err(|_| bad())?,
    )?;
    let mut states = Vec::with_capacity(n + 1);
    for k in 0..=n {
        states.push(crate::forward::ConcentrationState {
            ca: read_field(&dir.join(format!("cA_{k:04}.fld")), grid)?,
            ct: read_field(&dir.join(format!("cT_{k:04}.fld")), grid)?,
            cv: read_field(&dir.join(format!("cV_{k:04}.fld")), grid)?,
            time: k as f64 * tau,
        });
    }
    Ok(Trajectory {
        tau,
        states,
        clamped_cells,
    })
}
