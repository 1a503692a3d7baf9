use std::io::{BufRead, Read, Write};
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{IbcError, Result};

use super::space::FockSpace;

const BINARY_MAGIC: &[u8; 8] = b"FOCKVEC1";

/// A state on a truncated Fock space, stored as one flat coefficient array
/// split into sectors by [`FockSpace::sectors`].
#[derive(Debug, Clone)]
pub struct FockVector {
    space: Arc<FockSpace>,
    data: Vec<f64>,
}

impl FockVector {
    pub fn zeros(space: &Arc<FockSpace>) -> Self {
        Self {
            space: Arc::clone(space),
            data: vec![0.0; space.dim()],
        }
    }

    pub fn from_data(space: &Arc<FockSpace>, data: Vec<f64>) -> Result<Self> {
        if data.len() != space.dim() {
            return Err(IbcError::invalid(
                "data",
                format!("length {} does not match dimension {}", data.len(), space.dim()),
            ));
        }
        Ok(Self {
            space: Arc::clone(space),
            data,
        })
    }

    /// `psi^(0) = 1`, all other sectors zero.
    pub fn vacuum(space: &Arc<FockSpace>) -> Self {
        let mut v = Self::zeros(space);
        v.data[0] = 1.0;
        v
    }

    /// Independent standard normal coefficients scaled by `W^{-1/2}`, so the
    /// vector is isotropic in the weighted inner product.
    pub fn random<R: Rng>(space: &Arc<FockSpace>, rng: &mut R) -> Self {
        let data = space
            .measure
            .iter()
            .map(|w| {
                let g: f64 = rng.sample(StandardNormal);
                g / w.sqrt()
            })
            .collect();
        Self {
            space: Arc::clone(space),
            data,
        }
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn n_max(&self) -> usize {
        self.space.n_max
    }

    pub fn sector(&self, n: usize) -> &[f64] {
        &self.data[self.space.sector(n).range()]
    }

    pub fn sector_mut(&mut self, n: usize) -> &mut [f64] {
        let r = self.space.sector(n).range();
        &mut self.data[r]
    }

    /// Weighted inner product `sum W_b phi_b psi_b`.
    pub fn dot(&self, other: &Self) -> f64 {
        weighted_dot(&self.space.measure, &self.data, &other.data)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// `self + a * other`.
    pub fn axpy(&self, a: f64, other: &Self) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(x, y)| x + a * y).collect();
        Self {
            space: Arc::clone(&self.space),
            data,
        }
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            space: Arc::clone(&self.space),
            data: self.data.iter().map(|x| a * x).collect(),
        }
    }

    /// Pointwise product with a per-element multiplier.
    pub fn multiplied(&self, m: &[f64]) -> Self {
        Self {
            space: Arc::clone(&self.space),
            data: self.data.iter().zip(m).map(|(x, y)| x * y).collect(),
        }
    }

    /// CSV dump: a `# sector_sizes` header, then `sector,index,value` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let sizes: Vec<String> = self.space.sector_sizes().iter().map(|s| s.to_string()).collect();
        writeln!(out, "# sector_sizes: {}", sizes.join(";"))?;
        writeln!(out, "sector,index,value")?;
        for info in &self.space.sectors {
            for (i, x) in self.data[info.range()].iter().enumerate() {
                writeln!(out, "{},{},{:.17e}", info.n, i, x)?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(space: &Arc<FockSpace>, input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().ok_or_else(|| IbcError::Format("empty file".into()))??;
        let sizes = header
            .strip_prefix("# sector_sizes: ")
            .ok_or_else(|| IbcError::Format("missing sector_sizes header".into()))?;
        let sizes: Vec<usize> = sizes
            .split(';')
            .map(|s| s.parse().map_err(|_| IbcError::Format(format!("bad size {s:?}"))))
            .collect::<Result<_>>()?;
        check_sizes(space, &sizes)?;
        lines
            .next()
            .ok_or_else(|| IbcError::Format("missing column header".into()))??;
        let mut v = Self::zeros(space);
        let mut seen = 0;
        for line in lines {
            let line = line?;
            let mut parts = line.split(',');
            let mut field = || {
                parts
                    .next()
                    .ok_or_else(|| IbcError::Format(format!("short row {line:?}")))
            };
            let n: usize = parse(field()?)?;
            let i: usize = parse(field()?)?;
            let x: f64 = parse(field()?)?;
            let info = space
                .sectors
                .get(n)
                .filter(|s| i < s.len)
                .ok_or_else(|| IbcError::Format(format!("index ({n}, {i}) out of range")))?;
            v.data[info.offset + i] = x;
            seen += 1;
        }
        if seen != space.dim() {
            return Err(IbcError::Format(format!("expected {} rows, found {seen}", space.dim())));
        }
        Ok(v)
    }

    /// Binary dump: magic, sector count and sizes (u64 LE), then f64 LE data.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(BINARY_MAGIC)?;
        let sizes = self.space.sector_sizes();
        out.write_all(&(sizes.len() as u64).to_le_bytes())?;
        for s in sizes {
            out.write_all(&(s as u64).to_le_bytes())?;
        }
        for x in &self.data {
            out.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(space: &Arc<FockSpace>, mut input: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic)?;
        if &magic != BINARY_MAGIC {
            return Err(IbcError::Format("bad magic".into()));
        }
        let mut word = [0u8; 8];
        input.read_exact(&mut word)?;
        let count = u64::from_le_bytes(word) as usize;
        let mut sizes = Vec::with_capacity(count);
        for _ in 0..count {
            input.read_exact(&mut word)?;
            sizes.push(u64::from_le_bytes(word) as usize);
        }
        check_sizes(space, &sizes)?;
        let mut data = Vec::with_capacity(space.dim());
        for _ in 0..space.dim() {
            input.read_exact(&mut word)?;
            data.push(f64::from_le_bytes(word));
        }
        Self::from_data(space, data)
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| IbcError::Format(format!("cannot parse {s:?}")))
}

fn check_sizes(space: &FockSpace, sizes: &[usize]) -> Result<()> {
    if sizes != space.sector_sizes() {
        return Err(IbcError::Format(format!(
            "sector sizes {sizes:?} do not match space {:?}",
            space.sector_sizes()
        )));
    }
    Ok(())
}

pub(crate) fn weighted_dot(w: &[f64], x: &[f64], y: &[f64]) -> f64 {
    w.iter().zip(x).zip(y).map(|((w, x), y)| w * x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::grid::{build_grid, GridScheme};
    use crate::model::Model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn space() -> Arc<FockSpace> {
        let grid = build_grid(4, 2.0, GridScheme::GaussLegendre).unwrap();
        Arc::new(FockSpace::s_wave(&Model::nelson_massless(), &grid, 3, 2).unwrap())
    }

    #[test]
    fn csv_round_trip() {
        let s = space();
        let v = FockVector::random(&s, &mut ChaCha8Rng::seed_from_u64(1));
        let mut buf = Vec::new();
        v.write_csv(&mut buf).unwrap();
        let back = FockVector::read_csv(&s, buf.as_slice()).unwrap();
        assert_eq!(v.data(), back.data());
    }

    #[test]
    fn binary_round_trip() {
        let s = space();
        let v = FockVector::random(&s, &mut ChaCha8Rng::seed_from_u64(2));
        let mut buf = Vec::new();
        v.write_binary(&mut buf).unwrap();
        let back = FockVector::read_binary(&s, buf.as_slice()).unwrap();
        assert_eq!(v.data(), back.data());
        buf[0] = b'X';
        assert!(FockVector::read_binary(&s, buf.as_slice()).is_err());
    }

    #[test]
    fn weighted_norm() {
        let s = space();
        let v = FockVector::vacuum(&s);
        assert_eq!(v.norm(), 1.0);
        assert_eq!(v.sector(0), &[1.0]);
        assert!(v.sector(2).iter().all(|&x| x == 0.0));
    }
}
