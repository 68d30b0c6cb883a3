//! File formats: the binary dictionary/channel container, channel CSV,
//! sweep CSV with its metadata sidecar, and per-estimator plot series.
//!
//! Binary layout, all little-endian:
//!
//! | field   | type          |
//! |---------|---------------|
//! | magic   | `b"XLDZ"`     |
//! | version | u32 (= 1)     |
//! | N       | u32           |
//! | C       | u32           |
//! | kind    | u8: 0 angle, 1 polar, 2 channel |
//! | data    | N·C pairs of f64 (re, im), row-major |
//! | grid    | C pairs of f64 (angle, distance), dictionaries only |
//!
//! Far-field columns store `+inf` as their distance.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::dictionary::{Dictionary, DictionaryKind, GridPoint};
use crate::error::{bail, Error, Result};
use crate::experiments::SweepResult;
use crate::{CMatrix, CVector, Complex64};

pub const MAGIC: &[u8; 4] = b"XLDZ";
pub const FORMAT_VERSION: u32 = 1;

pub const CSV_HEADER: &str = "sweep_value,estimator,nmse_linear,nmse_db,trials,stderr_db";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    Angle = 0,
    Polar = 1,
    Channel = 2,
}

impl PayloadKind {
    fn from_u8(b: u8) -> Result<Self> {
        match b {
            0 => Ok(PayloadKind::Angle),
            1 => Ok(PayloadKind::Polar),
            2 => Ok(PayloadKind::Channel),
            other => Err(Error::Format(format!("unknown payload kind {other}"))),
        }
    }
}

fn dim_u32(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} = {v} does not fit in u32")))
}

fn write_header<W: Write>(w: &mut W, n: usize, c: usize, kind: PayloadKind) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&dim_u32(n, "N")?.to_le_bytes())?;
    w.write_all(&dim_u32(c, "C")?.to_le_bytes())?;
    w.write_all(&[kind as u8])?;
    Ok(())
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

fn read_header<R: Read>(r: &mut R) -> Result<(usize, usize, PayloadKind)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for a header".into()))?;
    if &magic != MAGIC {
        bail!(Format, "bad magic bytes {magic:?}");
    }
    let version = read_u32(r)?;
    if version != FORMAT_VERSION {
        bail!(Format, "unsupported format version {version}");
    }
    let n = read_u32(r)? as usize;
    let c = read_u32(r)? as usize;
    let mut kind = [0u8; 1];
    r.read_exact(&mut kind)?;
    Ok((n, c, PayloadKind::from_u8(kind[0])?))
}

fn write_matrix<W: Write>(w: &mut W, m: &CMatrix) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_matrix<R: Read>(r: &mut R, n: usize, c: usize) -> Result<CMatrix> {
    let mut m = CMatrix::zeros(n, c);
    for i in 0..n {
        for j in 0..c {
            let re = read_f64(r)?;
            let im = read_f64(r)?;
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

fn expect_eof<R: Read>(r: &mut R) -> Result<()> {
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        bail!(Format, "trailing bytes after payload");
    }
    Ok(())
}

pub fn write_dictionary<W: Write>(w: &mut W, dict: &Dictionary) -> Result<()> {
    let kind = match dict.kind() {
        DictionaryKind::Angle => PayloadKind::Angle,
        DictionaryKind::Polar => PayloadKind::Polar,
    };
    write_header(w, dict.num_rows(), dict.num_columns(), kind)?;
    write_matrix(w, dict.matrix())?;
    for g in dict.grid() {
        w.write_all(&g.angle.to_le_bytes())?;
        w.write_all(&g.distance.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_dictionary<R: Read>(r: &mut R) -> Result<Dictionary> {
    let (n, c, kind) = read_header(r)?;
    let kind = match kind {
        PayloadKind::Angle => DictionaryKind::Angle,
        PayloadKind::Polar => DictionaryKind::Polar,
        PayloadKind::Channel => bail!(Format, "file holds a channel, not a dictionary"),
    };
    let m = read_matrix(r, n, c)?;
    let mut grid = Vec::with_capacity(c);
    for _ in 0..c {
        let angle = read_f64(r)?;
        let distance = read_f64(r)?;
        grid.push(GridPoint { angle, distance });
    }
    expect_eof(r)?;
    Dictionary::from_parts(m, grid, kind)
}

pub fn save_dictionary(path: &Path, dict: &Dictionary) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    write_dictionary(&mut w, dict)?;
    w.flush()?;
    Ok(())
}

pub fn load_dictionary(path: &Path) -> Result<Dictionary> {
    read_dictionary(&mut BufReader::new(open(path)?))
}

/// Channel in the binary container: an `N × 1` payload with no grid.
pub fn write_channel_binary<W: Write>(w: &mut W, h: &CVector) -> Result<()> {
    write_header(w, h.len(), 1, PayloadKind::Channel)?;
    for z in h.iter() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_channel_binary<R: Read>(r: &mut R) -> Result<CVector> {
    let (n, c, kind) = read_header(r)?;
    if kind != PayloadKind::Channel || c != 1 {
        bail!(Format, "file does not hold a channel (kind {kind:?}, {c} columns)");
    }
    let m = read_matrix(r, n, 1)?;
    expect_eof(r)?;
    Ok(m.column(0).into_owned())
}

/// `index,re,im`, one row per antenna, 0-based.
pub fn write_channel_csv<W: Write>(w: &mut W, h: &CVector) -> Result<()> {
    writeln!(w, "index,re,im")?;
    for (i, z) in h.iter().enumerate() {
        writeln!(w, "{i},{},{}", z.re, z.im)?;
    }
    Ok(())
}

pub fn write_sweep_csv<W: Write>(w: &mut W, result: &SweepResult) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in &result.rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.sweep_value,
            r.estimator.name(),
            r.nmse_linear,
            r.nmse_db,
            r.trials,
            r.stderr_db
        )?;
    }
    Ok(())
}

pub fn write_metadata<W: Write>(w: &mut W, metadata: &[(String, String)]) -> Result<()> {
    for (k, v) in metadata {
        writeln!(w, "{k}={v}")?;
    }
    Ok(())
}

/// Sidecar path: `<out>.meta`.
pub fn metadata_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Writes the CSV and its `.meta` sidecar.
pub fn save_sweep(path: &Path, result: &SweepResult) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    write_sweep_csv(&mut w, result)?;
    w.flush()?;
    let meta = metadata_path(path);
    let mut w = BufWriter::new(create(&meta)?);
    write_metadata(&mut w, &result.metadata)?;
    w.flush()?;
    Ok(())
}

/// One parsed sweep CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub sweep_value: f64,
    pub estimator: String,
    pub nmse_linear: f64,
    pub nmse_db: f64,
    pub trials: usize,
    pub stderr_db: f64,
}

pub fn read_sweep_csv<R: BufRead>(r: R) -> Result<Vec<CsvRow>> {
    let mut lines = r.lines();
    match lines.next() {
        Some(Ok(h)) if h.trim_end() == CSV_HEADER => {}
        Some(Ok(h)) => bail!(Format, "line 1: expected header `{CSV_HEADER}`, found `{h}`"),
        Some(Err(e)) => return Err(e.into()),
        None => bail!(Format, "line 1: empty file, expected a header"),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            bail!(Format, "line {lineno}: expected 6 fields, found {}", fields.len());
        }
        let num = |k: usize, name: &str| -> Result<f64> {
            fields[k]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Format(format!("line {lineno}: {name} `{}` is not a number", fields[k])))
        };
        let estimator = fields[1].trim();
        if estimator.is_empty() {
            bail!(Format, "line {lineno}: empty estimator name");
        }
        rows.push(CsvRow {
            sweep_value: num(0, "sweep_value")?,
            estimator: estimator.to_string(),
            nmse_linear: num(2, "nmse_linear")?,
            nmse_db: num(3, "nmse_db")?,
            trials: fields[4]
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("line {lineno}: trials `{}` is not a count", fields[4])))?,
            stderr_db: num(5, "stderr_db")?,
        });
    }
    if rows.is_empty() {
        bail!(Format, "no data rows after the header");
    }
    Ok(rows)
}

/// Groups rows by estimator, in lexicographic order of the name. Each
/// series keeps the CSV row order.
pub fn plot_series(rows: &[CsvRow]) -> BTreeMap<String, Vec<(f64, f64)>> {
    let mut out: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for r in rows {
        out.entry(r.estimator.clone()).or_default().push((r.sweep_value, r.nmse_db));
    }
    out
}

/// Writes `<dir>/<estimator>.dat` with `x nmse_db` lines; returns the
/// paths in lexicographic order.
pub fn write_plotdata(dir: &Path, rows: &[CsvRow]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create output directory {}: {e}", dir.display())))?;
    let mut paths = Vec::new();
    for (name, series) in plot_series(rows) {
        if name.contains(['/', '\\']) || name.starts_with('.') {
            bail!(Format, "estimator name `{name}` is not usable as a file name");
        }
        let path = dir.join(format!("{name}.dat"));
        let mut w = BufWriter::new(create(&path)?);
        for (x, y) in series {
            writeln!(w, "{x} {y}")?;
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dictionary::{dft_dictionary, polar_dictionary, PolarGridParams};
    use crate::geometry::ArrayConfig;

    fn same_bits(a: &Dictionary, b: &Dictionary) {
        assert_eq!(a.kind(), b.kind());
        assert_eq!(a.matrix().shape(), b.matrix().shape());
        for (x, y) in a.matrix().iter().zip(b.matrix().iter()) {
            assert_eq!(x.re.to_bits(), y.re.to_bits());
            assert_eq!(x.im.to_bits(), y.im.to_bits());
        }
        for (x, y) in a.grid().iter().zip(b.grid()) {
            assert_eq!(x.angle.to_bits(), y.angle.to_bits());
            assert_eq!(x.distance.to_bits(), y.distance.to_bits());
        }
    }

    #[test]
    fn dictionary_round_trip() {
        let cfg = ArrayConfig::half_wavelength(32, 0.01).unwrap();
        let params = PolarGridParams {
            rho_min: cfg.guard_radius(),
            ..Default::default()
        };
        for d in [dft_dictionary(&cfg).unwrap(), polar_dictionary(&cfg, &params).unwrap()] {
            let mut buf = Vec::new();
            write_dictionary(&mut buf, &d).unwrap();
            assert_eq!(buf.len(), 17 + 16 * d.num_rows() * d.num_columns() + 16 * d.num_columns());
            assert_eq!(&buf[..4], b"XLDZ");
            let back = read_dictionary(&mut buf.as_slice()).unwrap();
            same_bits(&d, &back);
            let mut again = Vec::new();
            write_dictionary(&mut again, &back).unwrap();
            assert_eq!(buf, again);
        }
    }

    #[test]
    fn header_fields_little_endian() {
        let cfg = ArrayConfig::half_wavelength(4, 0.01).unwrap();
        let mut buf = Vec::new();
        write_dictionary(&mut buf, &dft_dictionary(&cfg).unwrap()).unwrap();
        assert_eq!(&buf[4..8], &[1, 0, 0, 0]);
        assert_eq!(&buf[8..12], &[4, 0, 0, 0]);
        assert_eq!(&buf[12..16], &[4, 0, 0, 0]);
        assert_eq!(buf[16], 0);
        // First entry is row 0, column 0: 1/2 + j·(imag part).
        let re = f64::from_le_bytes(buf[17..25].try_into().unwrap());
        assert!((re.hypot(f64::from_le_bytes(buf[25..33].try_into().unwrap())) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn corrupt_inputs_rejected() {
        let cfg = ArrayConfig::half_wavelength(4, 0.01).unwrap();
        let mut buf = Vec::new();
        write_dictionary(&mut buf, &dft_dictionary(&cfg).unwrap()).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'Y';
        assert!(read_dictionary(&mut bad.as_slice()).is_err());
        assert!(read_dictionary(&mut &buf[..buf.len() - 1]).is_err());
        let mut long = buf.clone();
        long.push(0);
        assert!(read_dictionary(&mut long.as_slice()).is_err());
        let mut v2 = buf.clone();
        v2[4] = 2;
        assert!(read_dictionary(&mut v2.as_slice()).is_err());
    }

    #[test]
    fn channel_formats() {
        let h = CVector::from_fn(3, |i, _| Complex64::new(i as f64 * 0.1, -1.0 / (i as f64 + 3.0)));
        let mut buf = Vec::new();
        write_channel_binary(&mut buf, &h).unwrap();
        assert_eq!(buf[16], 2);
        let back = read_channel_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back, h);
        let mut csv = Vec::new();
        write_channel_csv(&mut csv, &h).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "index,re,im");
        assert_eq!(lines.len(), 4);
        let f: Vec<f64> = lines[3].split(',').map(|s| s.parse().unwrap()).collect();
        assert_eq!(f[1].to_bits(), h[2].re.to_bits());
        assert_eq!(f[2].to_bits(), h[2].im.to_bits());
    }

    #[test]
    fn csv_parse_errors_carry_line_numbers() {
        let ok = format!("{CSV_HEADER}\n0,hf-omp,0.1,-10,5,0.2\n");
        assert_eq!(read_sweep_csv(ok.as_bytes()).unwrap().len(), 1);
        let bad = format!("{CSV_HEADER}\n0,hf-omp,0.1,-10,5,0.2\n2,ff-omp,x,-3,5,0.1\n");
        let err = read_sweep_csv(bad.as_bytes()).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        let short = format!("{CSV_HEADER}\n0,hf-omp,0.1\n");
        assert!(read_sweep_csv(short.as_bytes()).unwrap_err().to_string().contains("line 2"));
        assert!(read_sweep_csv(format!("{CSV_HEADER}\n").as_bytes()).is_err());
        assert!(read_sweep_csv("a,b\n".as_bytes()).unwrap_err().to_string().contains("line 1"));
    }

    #[test]
    fn series_are_sorted_by_name() {
        let text = format!("{CSV_HEADER}\n0,nf-omp,1,0,1,NaN\n0,ff-omp,1,0,1,NaN\n2,nf-omp,0.5,-3,1,NaN\n");
        let rows = read_sweep_csv(text.as_bytes()).unwrap();
        let s = plot_series(&rows);
        assert_eq!(s.keys().collect::<Vec<_>>(), vec!["ff-omp", "nf-omp"]);
        assert_eq!(s["nf-omp"], vec![(0.0, 0.0), (2.0, -3.0)]);
    }
}
