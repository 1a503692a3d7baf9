use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{IbcError, Result};
use crate::model::{Model, Vec3};
use crate::quadrature::gauss_legendre;

use super::grid::RadialGrid;

/// One discrete boson momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BosonMode {
    pub k_norm: f64,
    pub omega: f64,
    /// Coupled form factor `g v(k)`.
    pub v: f64,
    /// Quadrature weight of the mode in `d^3k`.
    pub weight: f64,
}

/// How the basis was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceKind {
    /// Rotation-invariant functions at total momentum zero; sector 2 stores
    /// `(r_i <= r_j, cos theta_l)` on a Gauss grid in `cos theta`.
    SWave { angular_nodes: usize },
    /// Cubic lattice `h Z^3 \ {0}`, `|components| <= extent`, at total momentum `P`.
    LatticeFiber {
        spacing: f64,
        extent: i32,
        total_momentum: Vec3,
    },
    /// Same boson lattice with an explicit particle lattice of
    /// `|components| <= n_max * extent`; every total momentum is present.
    LatticeFull { spacing: f64, extent: i32 },
}

/// Position of a sector inside the flat coefficient array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorInfo {
    pub n: usize,
    pub offset: usize,
    pub len: usize,
}

impl SectorInfo {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

/// Compressed rows of `(column, coefficient, mode)` triples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModeCsr {
    pub ptr: Vec<usize>,
    pub col: Vec<u32>,
    pub coef: Vec<f64>,
    pub mode: Vec<u32>,
}

impl ModeCsr {
    fn with_rows(rows: usize) -> Self {
        let mut ptr = Vec::with_capacity(rows + 1);
        ptr.push(0);
        Self {
            ptr,
            ..Default::default()
        }
    }

    fn push(&mut self, col: usize, coef: f64, mode: usize) {
        self.col.push(col as u32);
        self.coef.push(coef);
        self.mode.push(mode as u32);
    }

    fn end_row(&mut self) {
        self.ptr.push(self.col.len());
    }

    pub fn row(&self, i: usize) -> std::ops::Range<usize> {
        self.ptr[i]..self.ptr[i + 1]
    }

    pub fn nnz(&self) -> usize {
        self.col.len()
    }

    /// Transpose with coefficients rescaled by `scale(row, col)`.
    fn transpose_scaled(&self, cols: usize, scale: impl Fn(usize, usize) -> f64) -> Self {
        let mut count = vec![0usize; cols + 1];
        for &c in &self.col {
            count[c as usize + 1] += 1;
        }
        for i in 0..cols {
            count[i + 1] += count[i];
        }
        let mut next = count.clone();
        let nnz = self.nnz();
        let mut out = Self {
            ptr: count,
            col: vec![0; nnz],
            coef: vec![0.0; nnz],
            mode: vec![0; nnz],
        };
        for row in 0..self.ptr.len() - 1 {
            for e in self.row(row) {
                let c = self.col[e] as usize;
                let slot = next[c];
                next[c] += 1;
                out.col[slot] = row as u32;
                out.coef[slot] = self.coef[e] * scale(row, c);
                out.mode[slot] = self.mode[e];
            }
        }
        out
    }
}

/// Truncated Fock space on a momentum discretisation, with the model baked in.
///
/// Every basis element carries its symmetric-subspace measure `W`, the
/// particle momentum `|p|^2` and the field energy. Creation is stored as
/// `(a* psi)(b) = sum coef * v(mode) * psi(src)`, annihilation as its exact
/// `W`-adjoint, and `new_boson` lists, for each element `b'` below the top
/// sector, the targets `b' + k` with weight `w_k`.
#[derive(Debug, Clone)]
pub struct FockSpace {
    pub kind: SpaceKind,
    pub model: Model,
    pub n_max: usize,
    pub grid_cutoff: f64,
    pub modes: Vec<BosonMode>,
    pub sectors: Vec<SectorInfo>,
    pub measure: Vec<f64>,
    pub p_sq: Vec<f64>,
    pub field_energy: Vec<f64>,
    pub number: Vec<f64>,
    pub creation: ModeCsr,
    pub annihilation: ModeCsr,
    pub new_boson: ModeCsr,
}

impl FockSpace {
    pub fn dim(&self) -> usize {
        self.measure.len()
    }

    pub fn sector(&self, n: usize) -> SectorInfo {
        self.sectors[n]
    }

    pub fn sector_sizes(&self) -> Vec<usize> {
        self.sectors.iter().map(|s| s.len).collect()
    }

    /// `L_0 = p^2 + Omega` per element.
    pub fn free_symbol(&self) -> Vec<f64> {
        self.p_sq.iter().zip(&self.field_energy).map(|(a, b)| a + b).collect()
    }

    /// Sum of `w |v|^2 / (k^2 + omega)` over modes with `|k| <= lambda`.
    pub fn e_grid(&self, lambda: f64) -> f64 {
        self.modes
            .iter()
            .filter(|m| m.k_norm <= lambda)
            .map(|m| m.weight * m.v * m.v / (m.k_norm * m.k_norm + m.omega))
            .sum()
    }

    /// `v(k) chi(|k| <= lambda)` per mode.
    pub fn cutoff_form_factor(&self, lambda: f64) -> Result<Vec<f64>> {
        if lambda > self.grid_cutoff * (1.0 + 1e-12) {
            return Err(IbcError::CutoffExceedsGrid {
                cutoff: lambda,
                grid_cutoff: self.grid_cutoff,
            });
        }
        Ok(self
            .modes
            .iter()
            .map(|m| if m.k_norm <= lambda { m.v } else { 0.0 })
            .collect())
    }

    /// Rotation-invariant fiber at `P = 0`, `n_max <= 2`.
    pub fn s_wave(model: &Model, grid: &RadialGrid, angular_nodes: usize, n_max: usize) -> Result<Self> {
        model.validate_coupling()?;
        if n_max > 2 {
            return Err(IbcError::Unsupported(format!(
                "s-wave basis supports n_max <= 2, got {n_max}"
            )));
        }
        if angular_nodes == 0 {
            return Err(IbcError::invalid("angular_nodes", "must be >= 1"));
        }
        let m = grid.len();
        let modes: Vec<BosonMode> = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .map(|(&r, &w)| BosonMode {
                k_norm: r,
                omega: model.omega(r),
                v: model.v(r),
                weight: w,
            })
            .collect();
        let (cos, cos_w) = gauss_legendre(angular_nodes);
        let nc = angular_nodes;
        let pair_count = m * (m + 1) / 2;
        let mut sectors = vec![SectorInfo {
            n: 0,
            offset: 0,
            len: 1,
        }];
        if n_max >= 1 {
            sectors.push(SectorInfo {
                n: 1,
                offset: 1,
                len: m,
            });
        }
        if n_max >= 2 {
            sectors.push(SectorInfo {
                n: 2,
                offset: 1 + m,
                len: pair_count * nc,
            });
        }
        let dim: usize = sectors.iter().map(|s| s.len).sum();
        let pair_index = |i: usize, j: usize| -> usize {
            // i <= j, row-major over the upper triangle
            i * (2 * m - i + 1) / 2 + (j - i)
        };
        let sector2 = |i: usize, j: usize, l: usize| 1 + m + pair_index(i, j) * nc + l;

        let mut measure = Vec::with_capacity(dim);
        let mut p_sq = Vec::with_capacity(dim);
        let mut field_energy = Vec::with_capacity(dim);
        let mut number = Vec::with_capacity(dim);
        let mut creation = ModeCsr::with_rows(dim);
        let mut new_boson = ModeCsr::with_rows(dim);

        // vacuum
        measure.push(1.0);
        p_sq.push(0.0);
        field_energy.push(0.0);
        number.push(0.0);
        creation.end_row();
        if n_max >= 1 {
            for (i, mode) in modes.iter().enumerate() {
                new_boson.push(1 + i, mode.weight, i);
            }
        }
        new_boson.end_row();

        if n_max >= 1 {
            for (j, mode) in modes.iter().enumerate() {
                measure.push(mode.weight);
                p_sq.push(mode.k_norm * mode.k_norm);
                field_energy.push(mode.omega);
                number.push(1.0);
                creation.push(0, 1.0, j);
                creation.end_row();
                if n_max >= 2 {
                    for (i, other) in modes.iter().enumerate() {
                        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
                        for (l, cw) in cos_w.iter().enumerate().take(nc) {
                            new_boson.push(sector2(lo, hi, l), other.weight * cw / 2.0, i);
                        }
                    }
                }
                new_boson.end_row();
            }
        }

        if n_max >= 2 {
            let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
            for i in 0..m {
                for j in i..m {
                    debug_assert_eq!(sector2(i, j, 0), measure.len());
                    let (ri, rj) = (modes[i].k_norm, modes[j].k_norm);
                    let mult = if i == j { 1.0 } else { 2.0 };
                    for l in 0..nc {
                        measure.push(mult * modes[i].weight * modes[j].weight * cos_w[l] / 2.0);
                        p_sq.push(ri * ri + rj * rj + 2.0 * ri * rj * cos[l]);
                        field_energy.push(modes[i].omega + modes[j].omega);
                        number.push(2.0);
                        if i == j {
                            creation.push(1 + i, std::f64::consts::SQRT_2, i);
                        } else {
                            creation.push(1 + j, inv_sqrt2, i);
                            creation.push(1 + i, inv_sqrt2, j);
                        }
                        creation.end_row();
                        new_boson.end_row();
                    }
                }
            }
        }

        Self::finish(
            SpaceKind::SWave { angular_nodes },
            *model,
            n_max,
            grid.lambda_grid,
            modes,
            sectors,
            measure,
            p_sq,
            field_energy,
            number,
            creation,
            new_boson,
        )
    }

    /// Lattice fiber at total momentum `total_momentum`.
    pub fn lattice_fiber(model: &Model, spacing: f64, extent: i32, n_max: usize, total_momentum: Vec3) -> Result<Self> {
        let lattice = Lattice::new(model, spacing, extent)?;
        let multisets = lattice.multisets(n_max);
        let mut index: HashMap<&[u16], usize> = HashMap::new();
        let mut sectors = Vec::new();
        let mut offset = 0;
        for (n, list) in multisets.iter().enumerate() {
            for (k, b) in list.iter().enumerate() {
                index.insert(b.as_slice(), offset + k);
            }
            sectors.push(SectorInfo {
                n,
                offset,
                len: list.len(),
            });
            offset += list.len();
        }
        let dim = offset;
        let mut acc = Accumulator::new(dim);
        for (n, list) in multisets.iter().enumerate() {
            for b in list {
                let p = lattice.particle_momentum(total_momentum, b);
                acc.push_element(&lattice, b, p[0] * p[0] + p[1] * p[1] + p[2] * p[2], 1.0);
                if n >= 1 {
                    for (mode, mult, rest) in removals(b) {
                        acc.creation
                            .push(index[rest.as_slice()], mult as f64 / (n as f64).sqrt(), mode);
                    }
                }
                acc.creation.end_row();
                if n < n_max {
                    for mode in 0..lattice.modes.len() {
                        let target = insert_sorted(b, mode as u16);
                        acc.new_boson
                            .push(index[target.as_slice()], lattice.modes[mode].weight, mode);
                    }
                }
                acc.new_boson.end_row();
            }
        }
        let grid_cutoff = lattice.max_norm();
        acc.finish(
            SpaceKind::LatticeFiber {
                spacing,
                extent,
                total_momentum,
            },
            *model,
            n_max,
            grid_cutoff,
            lattice.modes,
            sectors,
        )
    }

    /// Full space: particle lattice times boson multisets.
    pub fn lattice_full(model: &Model, spacing: f64, extent: i32, n_max: usize) -> Result<Self> {
        let lattice = Lattice::new(model, spacing, extent)?;
        let multisets = lattice.multisets(n_max);
        let reach = n_max as i32 * extent;
        let side = (2 * reach + 1) as usize;
        let particles: Vec<[i32; 3]> = (0..side.pow(3))
            .map(|idx| {
                let a = (idx / (side * side)) as i32 - reach;
                let b = ((idx / side) % side) as i32 - reach;
                let c = (idx % side) as i32 - reach;
                [a, b, c]
            })
            .collect();
        let particle_index = |p: [i32; 3]| -> Option<usize> {
            if p.iter().any(|c| c.abs() > reach) {
                return None;
            }
            let s = side as i32;
            Some((((p[0] + reach) * s + (p[1] + reach)) * s + (p[2] + reach)) as usize)
        };
        let mut index: HashMap<&[u16], usize> = HashMap::new();
        for list in &multisets {
            for (k, b) in list.iter().enumerate() {
                index.insert(b.as_slice(), k);
            }
        }
        let mut sectors = Vec::new();
        let mut offset = 0;
        for (n, list) in multisets.iter().enumerate() {
            sectors.push(SectorInfo {
                n,
                offset,
                len: list.len() * particles.len(),
            });
            offset += list.len() * particles.len();
        }
        let element = |n: usize, particle: usize, b: &[u16]| -> usize {
            sectors[n].offset + particle * multisets[n].len() + index[b]
        };
        let h3 = spacing.powi(3);
        let mut acc = Accumulator::new(offset);
        for (n, list) in multisets.iter().enumerate() {
            for &p in &particles {
                for b in list {
                    let pv = [p[0] as f64 * spacing, p[1] as f64 * spacing, p[2] as f64 * spacing];
                    acc.push_element(&lattice, b, pv[0] * pv[0] + pv[1] * pv[1] + pv[2] * pv[2], h3);
                    if n >= 1 {
                        for (mode, mult, rest) in removals(b) {
                            let k = lattice.points[mode];
                            let src = [p[0] + k[0], p[1] + k[1], p[2] + k[2]];
                            if let Some(pi) = particle_index(src) {
                                acc.creation
                                    .push(element(n - 1, pi, &rest), mult as f64 / (n as f64).sqrt(), mode);
                            }
                        }
                    }
                    acc.creation.end_row();
                    if n < n_max {
                        for mode in 0..lattice.modes.len() {
                            let k = lattice.points[mode];
                            let dst = [p[0] - k[0], p[1] - k[1], p[2] - k[2]];
                            if let Some(pi) = particle_index(dst) {
                                let target = insert_sorted(b, mode as u16);
                                acc.new_boson
                                    .push(element(n + 1, pi, &target), lattice.modes[mode].weight, mode);
                            }
                        }
                    }
                    acc.new_boson.end_row();
                }
            }
        }
        let grid_cutoff = lattice.max_norm();
        acc.finish(
            SpaceKind::LatticeFull { spacing, extent },
            *model,
            n_max,
            grid_cutoff,
            lattice.modes,
            sectors,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        kind: SpaceKind,
        model: Model,
        n_max: usize,
        grid_cutoff: f64,
        modes: Vec<BosonMode>,
        sectors: Vec<SectorInfo>,
        measure: Vec<f64>,
        p_sq: Vec<f64>,
        field_energy: Vec<f64>,
        number: Vec<f64>,
        creation: ModeCsr,
        new_boson: ModeCsr,
    ) -> Result<Self> {
        let dim = measure.len();
        let annihilation = creation.transpose_scaled(dim, |row, col| measure[row] / measure[col]);
        Ok(Self {
            kind,
            model,
            n_max,
            grid_cutoff,
            modes,
            sectors,
            measure,
            p_sq,
            field_energy,
            number,
            creation,
            annihilation,
            new_boson,
        })
    }
}

struct Lattice {
    points: Vec<[i32; 3]>,
    modes: Vec<BosonMode>,
    spacing: f64,
}

impl Lattice {
    fn new(model: &Model, spacing: f64, extent: i32) -> Result<Self> {
        model.validate_coupling()?;
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(IbcError::invalid("spacing", "must be finite and > 0"));
        }
        if extent < 1 {
            return Err(IbcError::invalid("extent", "must be >= 1"));
        }
        let mut points = Vec::new();
        for a in -extent..=extent {
            for b in -extent..=extent {
                for c in -extent..=extent {
                    if (a, b, c) != (0, 0, 0) {
                        points.push([a, b, c]);
                    }
                }
            }
        }
        if points.len() > u16::MAX as usize {
            return Err(IbcError::Unsupported("lattice too large".into()));
        }
        let h3 = spacing.powi(3);
        let modes = points
            .iter()
            .map(|p| {
                let k = spacing * ((p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) as f64).sqrt();
                BosonMode {
                    k_norm: k,
                    omega: model.omega(k),
                    v: model.v(k),
                    weight: h3,
                }
            })
            .collect();
        Ok(Self { points, modes, spacing })
    }

    fn max_norm(&self) -> f64 {
        self.modes.iter().map(|m| m.k_norm).fold(0.0, f64::max)
    }

    fn particle_momentum(&self, total: Vec3, b: &[u16]) -> Vec3 {
        let mut p = total;
        for &m in b {
            let k = self.points[m as usize];
            for d in 0..3 {
                p[d] -= k[d] as f64 * self.spacing;
            }
        }
        p
    }

    /// Sorted multisets of mode indices of each size `0..=n_max`.
    fn multisets(&self, n_max: usize) -> Vec<Vec<Vec<u16>>> {
        let count = self.modes.len() as u16;
        let mut out: Vec<Vec<Vec<u16>>> = vec![vec![vec![]]];
        for _ in 0..n_max {
            let prev = out.last().expect("non-empty");
            let mut next = Vec::new();
            for b in prev {
                let start = b.last().copied().unwrap_or(0);
                for m in start..count {
                    let mut c = b.clone();
                    c.push(m);
                    next.push(c);
                }
            }
            out.push(next);
        }
        out
    }
}

/// `(mode, multiplicity, multiset without one copy of mode)` per distinct mode.
fn removals(b: &[u16]) -> Vec<(usize, usize, Vec<u16>)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let mut j = i;
        while j < b.len() && b[j] == b[i] {
            j += 1;
        }
        let mut rest = b.to_vec();
        rest.remove(i);
        out.push((b[i] as usize, j - i, rest));
        i = j;
    }
    out
}

fn insert_sorted(b: &[u16], m: u16) -> Vec<u16> {
    let mut out = b.to_vec();
    let pos = out.partition_point(|&x| x <= m);
    out.insert(pos, m);
    out
}

/// `n! / prod(multiplicity!)`.
fn permutation_count(b: &[u16]) -> f64 {
    let mut count = (1..=b.len()).map(|k| k as f64).product::<f64>();
    for (_, mult, _) in removals(b) {
        count /= (1..=mult).map(|k| k as f64).product::<f64>();
    }
    count
}

struct Accumulator {
    measure: Vec<f64>,
    p_sq: Vec<f64>,
    field_energy: Vec<f64>,
    number: Vec<f64>,
    creation: ModeCsr,
    new_boson: ModeCsr,
}

impl Accumulator {
    fn new(dim: usize) -> Self {
        Self {
            measure: Vec::with_capacity(dim),
            p_sq: Vec::with_capacity(dim),
            field_energy: Vec::with_capacity(dim),
            number: Vec::with_capacity(dim),
            creation: ModeCsr::with_rows(dim),
            new_boson: ModeCsr::with_rows(dim),
        }
    }

    fn push_element(&mut self, lattice: &Lattice, b: &[u16], p_sq: f64, particle_weight: f64) {
        let w: f64 = b.iter().map(|&m| lattice.modes[m as usize].weight).product();
        self.measure.push(particle_weight * w * permutation_count(b));
        self.p_sq.push(p_sq);
        self.field_energy
            .push(b.iter().map(|&m| lattice.modes[m as usize].omega).sum());
        self.number.push(b.len() as f64);
    }

    fn finish(
        self,
        kind: SpaceKind,
        model: Model,
        n_max: usize,
        grid_cutoff: f64,
        modes: Vec<BosonMode>,
        sectors: Vec<SectorInfo>,
    ) -> Result<FockSpace> {
        FockSpace::finish(
            kind,
            model,
            n_max,
            grid_cutoff,
            modes,
            sectors,
            self.measure,
            self.p_sq,
            self.field_energy,
            self.number,
            self.creation,
            self.new_boson,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::grid::{build_grid, GridScheme};

    #[test]
    fn s_wave_sizes_and_measures() {
        let grid = build_grid(8, 4.0, GridScheme::GaussLegendre).unwrap();
        let s = FockSpace::s_wave(&Model::nelson_massless(), &grid, 4, 2).unwrap();
        assert_eq!(s.sector_sizes(), vec![1, 8, 36 * 4]);
        assert_eq!(s.dim(), 1 + 8 + 144);
        // sector-2 measure sums to (sum w)^2
        let w: f64 = grid.weights.iter().sum();
        let total: f64 = s.measure[s.sector(2).range()].iter().sum();
        assert!((total - w * w).abs() < 1e-10 * w * w);
        assert!(s.number[s.sector(2).range()].iter().all(|&n| n == 2.0));
    }

    #[test]
    fn s_wave_rejects_large_n_max() {
        let grid = build_grid(4, 1.0, GridScheme::Midpoint).unwrap();
        assert!(FockSpace::s_wave(&Model::nelson_massless(), &grid, 2, 3).is_err());
    }

    #[test]
    fn lattice_multiset_weights() {
        let s = FockSpace::lattice_fiber(&Model::nelson_massless(), 1.0, 1, 2, [0.0; 3]).unwrap();
        assert_eq!(s.sector_sizes(), vec![1, 26, 26 * 27 / 2]);
        assert_eq!(permutation_count(&[3, 3]), 1.0);
        assert_eq!(permutation_count(&[1, 3]), 2.0);
        assert_eq!(permutation_count(&[1, 1, 3]), 3.0);
        assert_eq!(removals(&[1, 1, 3]).len(), 2);
        assert_eq!(insert_sorted(&[1, 3], 2), vec![1, 2, 3]);
    }

    #[test]
    fn annihilation_is_transpose_of_creation() {
        let s = FockSpace::lattice_fiber(&Model::nelson_massless(), 0.7, 1, 2, [0.0; 3]).unwrap();
        assert_eq!(s.creation.nnz(), s.annihilation.nnz());
    }
}
