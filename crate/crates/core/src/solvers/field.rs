use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::spatial::Grid1D;

/// Magic bytes of the binary field dump.
pub const FIELD_MAGIC: &[u8; 8] = b"FPKFLD01";

/// Values `u(t_k, x_i)` on a spatial grid at a list of times, with the
/// trapezoid mass recorded per time.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityField {
    grid: Grid1D,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
    mass: Vec<f64>,
}

impl DensityField {
    pub fn new(grid: Grid1D, times: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), got: values.len() });
        }
        for row in &values {
            if row.len() != grid.len() {
                return Err(Error::DimensionMismatch { expected: grid.len(), got: row.len() });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("values", "field contains non-finite entries"));
            }
        }
        let mass = values.iter().map(|r| grid.integrate(r)).collect();
        Ok(Self { grid, times, values, mass })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Index of `t` (relative match 1e-9).
    pub fn time_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * t.abs().max(1e-12);
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    pub fn at(&self, t: f64) -> Result<&[f64]> {
        self.time_index(t).map(|k| self.row(k)).ok_or(Error::TimeNotObserved(t))
    }

    /// Sub-field at the given times.
    pub fn select(&self, times: &[f64]) -> Result<Self> {
        let rows = times.iter().map(|&t| self.at(t).map(|r| r.to_vec())).collect::<Result<Vec<_>>>()?;
        Self::new(self.grid, times.to_vec(), rows)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }

    /// CSV with columns `t,x,value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x,value")?;
        let xs = self.grid.nodes();
        for (t, row) in self.times.iter().zip(&self.values) {
            for (x, v) in xs.iter().zip(row) {
                writeln!(w, "{t},{x},{v}")?;
            }
        }
        Ok(())
    }

    /// Binary dump, little-endian: magic `FPKFLD01`, `u64` time count,
    /// `u64` node count, `f64` a, `f64` b, the times, then the values
    /// row-major (one row per time).
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(FIELD_MAGIC)?;
        w.write_all(&(self.times.len() as u64).to_le_bytes())?;
        w.write_all(&(self.grid.len() as u64).to_le_bytes())?;
        w.write_all(&self.grid.a.to_le_bytes())?;
        w.write_all(&self.grid.b.to_le_bytes())?;
        for t in &self.times {
            w.write_all(&t.to_le_bytes())?;
        }
        for v in self.values.iter().flatten() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != FIELD_MAGIC {
            return Err(Error::Io("not a field dump (bad magic)".into()));
        }
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let rows = u64::from_le_bytes(next(&mut r)?) as usize;
        let cols = u64::from_le_bytes(next(&mut r)?) as usize;
        let a = f64::from_le_bytes(next(&mut r)?);
        let b = f64::from_le_bytes(next(&mut r)?);
        if cols < 5 {
            return Err(Error::Io(format!("field dump has {cols} nodes")));
        }
        let grid = Grid1D::new(a, b, cols - 2)?;
        let times = (0..rows).map(|_| next(&mut r).map(f64::from_le_bytes)).collect::<Result<Vec<_>>>()?;
        let mut values = Vec::with_capacity(rows);
        for _ in 0..rows {
            values.push((0..cols).map(|_| next(&mut r).map(f64::from_le_bytes)).collect::<Result<Vec<_>>>()?);
        }
        Self::new(grid, times, values)
    }
}
