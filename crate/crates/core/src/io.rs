//! CSV output of diagnostics and binary checkpoints.
//!
//! Checkpoint layout (little-endian): the magic `BQCHK001`, `u32 nx`,
//! `u32 ny`, `f64 t`, then one block per field (`u1`, `u2`, `theta`) made of
//! a `u8` parity tag (0 cosine, 1 sine), a `u64` count and `count` pairs of
//! `f64` (real, imaginary) ordered by `k` from `-nx/2` to `nx/2 - 1`, then
//! by `n` (`0..=ny` for cosine fields, `1..=ny` for sine fields).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::diagnostics::DiagnosticsRecord;
use crate::dynamics::State;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::{Grid, Parity};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"BQCHK001";

/// Writes the header and one row per record, 17 significant digits.
pub fn write_csv(records: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let bad = |e: csv::Error| Error::Csv(format!("{}: {e}", path.display()));
    w.write_record(DiagnosticsRecord::COLUMNS).map_err(bad)?;
    for r in records {
        w.write_record(r.values().iter().map(|v| format!("{v:.16e}")))
            .map_err(bad)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a file written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rd = csv::Reader::from_reader(BufReader::new(file));
    let bad = |msg: String| Error::Csv(format!("{}: {msg}", path.display()));
    let header = rd.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(DiagnosticsRecord::COLUMNS) {
        return Err(bad("unexpected header".into()));
    }
    let mut out = Vec::new();
    for (i, row) in rd.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let mut v = [0.0; 21];
        for (slot, cell) in v.iter_mut().zip(row.iter()) {
            *slot = cell
                .parse()
                .map_err(|_| bad(format!("row {}: bad number `{cell}`", i + 1)))?;
        }
        out.push(DiagnosticsRecord::from_values(v));
    }
    Ok(out)
}

fn k_order(grid: &Grid) -> impl Iterator<Item = i64> {
    let half = grid.nx() as i64 / 2;
    -half..half
}

pub fn save_checkpoint(s: &State, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    encode(s, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

fn encode(s: &State, w: &mut impl Write) -> std::io::Result<()> {
    let g = s.grid();
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&(g.nx() as u32).to_le_bytes())?;
    w.write_all(&(g.ny() as u32).to_le_bytes())?;
    w.write_all(&s.t.to_le_bytes())?;
    for f in [&s.u1, &s.u2, &s.theta] {
        let first = f.parity().first_mode();
        let tag: u8 = match f.parity() {
            Parity::Cosine => 0,
            Parity::Sine => 1,
        };
        w.write_all(&[tag])?;
        let count = g.nx() * (g.ny() + 1 - first);
        w.write_all(&(count as u64).to_le_bytes())?;
        for k in k_order(g) {
            for n in first..=g.ny() {
                let c = f.get(k, n);
                w.write_all(&c.re.to_le_bytes())?;
                w.write_all(&c.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<State> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|msg| Error::Checkpoint(format!("{}: {msg}", path.display())))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], String> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| format!("truncated at byte {}", self.pos))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self) -> std::result::Result<[u8; N], String> {
        Ok(self.take(N)?.try_into().expect("slice has length N"))
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.array()?))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.array()?))
    }
}

fn decode(bytes: &[u8]) -> std::result::Result<State, String> {
    let mut c = Cursor { bytes, pos: 0 };
    if c.take(8)? != CHECKPOINT_MAGIC {
        return Err("bad magic".into());
    }
    let nx = c.u32()? as usize;
    let ny = c.u32()? as usize;
    let grid = Grid::new(nx, ny).map_err(|e| e.to_string())?;
    let t = c.f64()?;
    let mut fields = Vec::with_capacity(3);
    for expected in [Parity::Cosine, Parity::Sine, Parity::Sine] {
        let parity = match c.take(1)?[0] {
            0 => Parity::Cosine,
            1 => Parity::Sine,
            tag => return Err(format!("bad parity tag {tag}")),
        };
        if parity != expected {
            return Err(format!("expected a {expected:?} block, found {parity:?}"));
        }
        let first = parity.first_mode();
        let count = c.u64()?;
        if count != (nx * (ny + 1 - first)) as u64 {
            return Err(format!("block length {count} does not match a {nx} x {ny} grid"));
        }
        let mut raw = vec![Complex64::new(0.0, 0.0); grid.len()];
        for k in k_order(&grid) {
            let slot = grid.slot(k);
            for n in first..=ny {
                let re = c.f64()?;
                let im = c.f64()?;
                raw[slot * grid.nyp() + n] = Complex64::new(re, im);
            }
        }
        fields.push(SpectralField::from_coeffs(grid, parity, raw).map_err(|e| e.to_string())?);
    }
    if c.pos != bytes.len() {
        return Err(format!("{} trailing bytes", bytes.len() - c.pos));
    }
    let theta = fields.pop().expect("three blocks");
    let u2 = fields.pop().expect("three blocks");
    let u1 = fields.pop().expect("three blocks");
    if !t.is_finite() {
        return Err("non-finite time".into());
    }
    Ok(State { u1, u2, theta, t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientModel;
    use crate::diagnostics::record;
    use crate::initial::random_smooth;

    #[test]
    fn checkpoint_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bqchk");
        for s in [
            State::conduction(Grid::new(8, 4).unwrap()),
            random_smooth(Grid::new(32, 16).unwrap(), 1.0, 0.5, 3).unwrap(),
        ] {
            save_checkpoint(&s, &path).unwrap();
            let back = load_checkpoint(&path).unwrap();
            assert_eq!(back.t.to_bits(), s.t.to_bits());
            for (a, b) in [(&back.u1, &s.u1), (&back.u2, &s.u2), (&back.theta, &s.theta)] {
                for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
                    assert_eq!(x.re.to_bits(), y.re.to_bits());
                    assert_eq!(x.im.to_bits(), y.im.to_bits());
                }
            }
        }
    }

    #[test]
    fn checkpoint_size_matches_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bqchk");
        save_checkpoint(&State::conduction(Grid::new(8, 4).unwrap()), &path).unwrap();
        let len = std::fs::metadata(&path).unwrap().len() as usize;
        let blocks = 3 * 9 + 16 * (8 * 5 + 8 * 4 + 8 * 4);
        assert_eq!(len, 8 + 4 + 4 + 8 + blocks);
    }

    #[test]
    fn corrupted_checkpoints_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bqchk");
        save_checkpoint(&random_smooth(Grid::new(16, 8).unwrap(), 1.0, 0.5, 1).unwrap(), &path).unwrap();
        let good = std::fs::read(&path).unwrap();
        let mut cases = Vec::new();
        let mut magic = good.clone();
        magic[3] = b'X';
        cases.push(magic);
        cases.push(good[..good.len() - 1].to_vec());
        let mut long = good.clone();
        long.push(0);
        cases.push(long);
        let mut tag = good.clone();
        tag[24] = 7;
        cases.push(tag);
        let mut count = good.clone();
        count[25] ^= 1;
        cases.push(count);
        for bytes in cases {
            std::fs::write(&path, bytes).unwrap();
            assert!(matches!(load_checkpoint(&path), Err(Error::Checkpoint(_))));
        }
        let missing = dir.path().join("missing");
        assert!(matches!(load_checkpoint(&missing), Err(Error::Io { .. })));
    }

    #[test]
    fn csv_round_trip_keeps_full_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let g = Grid::new(16, 8).unwrap();
        let m = CoefficientModel::quadratic_kappa();
        let recs = vec![
            record(&random_smooth(g, 0.3, 0.7, 2).unwrap(), &m).unwrap(),
            record(&State::conduction(g), &m).unwrap(),
        ];
        write_csv(&recs, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,norm_u_l2,norm_theta_l2,"));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(read_csv(&path).unwrap(), recs);
    }
}
