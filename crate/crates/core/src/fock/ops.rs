use std::sync::Arc;

use rayon::prelude::*;

use crate::error::Result;

use super::space::{FockSpace, ModeCsr};
use super::vector::FockVector;

const PAR_MIN_LEN: usize = 2048;

/// `y[row] = sum coef * v[mode] * x[col]` over the entries of `row`.
fn gather(csr: &ModeCsr, v: &[f64], x: &[f64], y: &mut [f64]) {
    y.par_iter_mut()
        .with_min_len(PAR_MIN_LEN)
        .enumerate()
        .for_each(|(row, out)| {
            let mut acc = 0.0;
            for e in csr.row(row) {
                acc += csr.coef[e] * v[csr.mode[e] as usize] * x[csr.col[e] as usize];
            }
            *out = acc;
        });
}

/// `y = a*(v) x`, dropping everything above `n_max`.
pub fn creation_into(space: &FockSpace, v: &[f64], x: &[f64], y: &mut [f64]) {
    gather(&space.creation, v, x, y);
}

/// `y = a(v) x`, the exact weighted adjoint of [`creation_into`].
pub fn annihilation_into(space: &FockSpace, v: &[f64], x: &[f64], y: &mut [f64]) {
    gather(&space.annihilation, v, x, y);
}

/// `y = (L_0 + a(v) + a*(v)) x + shift x` in one pass.
pub fn cutoff_hamiltonian_into(space: &FockSpace, l0: &[f64], v: &[f64], shift: f64, x: &[f64], y: &mut [f64]) {
    let (cr, an) = (&space.creation, &space.annihilation);
    y.par_iter_mut()
        .with_min_len(PAR_MIN_LEN)
        .enumerate()
        .for_each(|(row, out)| {
            let mut acc = (l0[row] + shift) * x[row];
            for e in cr.row(row) {
                acc += cr.coef[e] * v[cr.mode[e] as usize] * x[cr.col[e] as usize];
            }
            for e in an.row(row) {
                acc += an.coef[e] * v[an.mode[e] as usize] * x[an.col[e] as usize];
            }
            *out = acc;
        });
}

pub fn apply_annihilation(psi: &FockVector, lambda: f64) -> Result<FockVector> {
    let space = psi.space();
    let v = space.cutoff_form_factor(lambda)?;
    let mut out = FockVector::zeros(space);
    annihilation_into(space, &v, psi.data(), out.data_mut());
    Ok(out)
}

pub fn apply_creation(psi: &FockVector, lambda: f64) -> Result<FockVector> {
    let space = psi.space();
    let v = space.cutoff_form_factor(lambda)?;
    let mut out = FockVector::zeros(space);
    creation_into(space, &v, psi.data(), out.data_mut());
    Ok(out)
}

/// Multiplication by `L_mu = p^2 + Omega + mu`.
pub fn apply_free(psi: &FockVector, mu: f64) -> FockVector {
    let l: Vec<f64> = psi.space().free_symbol().iter().map(|l| l + mu).collect();
    psi.multiplied(&l)
}

pub fn apply_number(psi: &FockVector) -> FockVector {
    psi.multiplied(&psi.space().number)
}

pub fn apply_field_energy(psi: &FockVector) -> FockVector {
    psi.multiplied(&psi.space().field_energy)
}

type ApplyFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// A linear operator on a fixed [`FockSpace`] that only exposes `apply`.
#[derive(Clone)]
pub struct OperatorHandle {
    space: Arc<FockSpace>,
    apply_fn: Arc<ApplyFn>,
    is_symmetric: bool,
    diagonal: Option<Arc<Vec<f64>>>,
}

impl std::fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("dim", &self.space.dim())
            .field("is_symmetric", &self.is_symmetric)
            .finish()
    }
}

impl OperatorHandle {
    pub fn new(
        space: &Arc<FockSpace>,
        is_symmetric: bool,
        apply_fn: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            space: Arc::clone(space),
            apply_fn: Arc::new(apply_fn),
            is_symmetric,
            diagonal: None,
        }
    }

    /// Attaches the exact diagonal, used as a preconditioner by eigensolvers.
    pub fn with_diagonal(mut self, diagonal: Vec<f64>) -> Self {
        self.diagonal = Some(Arc::new(diagonal));
        self
    }

    pub fn space(&self) -> &Arc<FockSpace> {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_symmetric
    }

    pub fn diagonal(&self) -> Option<&[f64]> {
        self.diagonal.as_deref().map(Vec::as_slice)
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        (self.apply_fn)(x, y)
    }

    pub fn apply(&self, psi: &FockVector) -> FockVector {
        let mut out = FockVector::zeros(&self.space);
        self.apply_into(psi.data(), out.data_mut());
        out
    }
}

/// `H_Lambda = L + a(chi_Lambda v) + a*(chi_Lambda v)` with `L = p^2 + Omega`.
pub fn build_h_lambda(space: &Arc<FockSpace>, lambda: f64) -> Result<OperatorHandle> {
    let v = space.cutoff_form_factor(lambda)?;
    let l0 = space.free_symbol();
    let s = Arc::clone(space);
    // a and a* change the boson number, so the diagonal is L_0
    let diag = l0.clone();
    Ok(
        OperatorHandle::new(space, true, move |x, y| cutoff_hamiltonian_into(&s, &l0, &v, 0.0, x, y))
            .with_diagonal(diag),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::grid::{build_grid, GridScheme, RadialGrid};
    use crate::model::Model;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn desk_like() -> Arc<FockSpace> {
        let grid = build_grid(8, 8.0, GridScheme::default()).unwrap();
        Arc::new(FockSpace::s_wave(&Model::nelson_massless(), &grid, 4, 2).unwrap())
    }

    fn lattice() -> Arc<FockSpace> {
        Arc::new(FockSpace::lattice_fiber(&Model::nelson_massless(), 0.8, 1, 2, [0.0; 3]).unwrap())
    }

    #[test]
    fn vacuum_is_annihilated() {
        let s = desk_like();
        let out = apply_annihilation(&FockVector::vacuum(&s), 8.0).unwrap();
        assert!(out.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn top_sector_creation_is_dropped() {
        let s = desk_like();
        let mut psi = FockVector::zeros(&s);
        psi.sector_mut(2).iter_mut().for_each(|x| *x = 1.0);
        let out = apply_creation(&psi, 8.0).unwrap();
        assert!(out.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn cutoff_beyond_grid_is_rejected() {
        let s = desk_like();
        assert!(apply_creation(&FockVector::vacuum(&s), 9.0).is_err());
    }

    #[test]
    fn one_point_grid_closed_forms() {
        let r0 = 0.7;
        let w0 = 0.3;
        let grid = RadialGrid::from_nodes(vec![r0], vec![w0], 1.0).unwrap();
        let model = Model::nelson_massless();
        let s = Arc::new(FockSpace::s_wave(&model, &grid, 1, 1).unwrap());
        let v0 = model.v(r0);
        let mut psi = FockVector::zeros(&s);
        psi.data_mut().copy_from_slice(&[2.0, 5.0]);
        let a = apply_annihilation(&psi, 1.0).unwrap();
        assert!((a.data()[0] - v0 * w0 * 5.0).abs() < 1e-15);
        assert_eq!(a.data()[1], 0.0);
        let c = apply_creation(&psi, 1.0).unwrap();
        assert_eq!(c.data()[0], 0.0);
        assert!((c.data()[1] - v0 * 2.0).abs() < 1e-15);
        let l = apply_free(&psi, 1.5);
        assert!((l.data()[1] - (r0 * r0 + r0 + 1.5) * 5.0).abs() < 1e-14);
        assert_eq!(l.data()[0], 1.5 * 2.0);
    }

    fn adjointness_defect(s: &Arc<FockSpace>, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = FockVector::random(s, &mut rng);
        let psi = FockVector::random(s, &mut rng);
        let lambda = s.grid_cutoff;
        let lhs = apply_creation(&phi, lambda).unwrap().dot(&psi);
        let rhs = phi.dot(&apply_annihilation(&psi, lambda).unwrap());
        (lhs - rhs).abs() / (phi.norm() * psi.norm())
    }

    #[test]
    fn creation_and_annihilation_are_adjoint() {
        for seed in 0..5 {
            assert!(adjointness_defect(&desk_like(), seed) < 1e-12);
            assert!(adjointness_defect(&lattice(), seed) < 1e-12);
        }
    }

    /// Direct double-sum oracle for `(a psi)^(1)` from a full symmetric
    /// tensor, on the lattice where every point is a separate mode.
    #[test]
    fn annihilation_matches_tensor_oracle() {
        let s = lattice();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let psi = FockVector::random(&s, &mut rng);
        let modes = &s.modes;
        let nm = modes.len();
        // unpack sector 2 to a full symmetric tensor
        let mut full = vec![0.0; nm * nm];
        let sec2 = psi.sector(2);
        let mut idx = 0;
        for i in 0..nm {
            for j in i..nm {
                full[i * nm + j] = sec2[idx];
                full[j * nm + i] = sec2[idx];
                idx += 1;
            }
        }
        let out = apply_annihilation(&psi, s.grid_cutoff).unwrap();
        for j in 0..nm {
            let oracle: f64 = (0..nm)
                .map(|k| 2f64.sqrt() * modes[k].weight * modes[k].v * full[j * nm + k])
                .sum();
            assert!((out.sector(1)[j] - oracle).abs() < 1e-12 * oracle.abs().max(1.0));
        }
    }

    #[test]
    fn number_and_field_energy() {
        let s = desk_like();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = FockVector::random(&s, &mut rng);
        let n = apply_number(&psi);
        for (a, b) in n.sector(2).iter().zip(psi.sector(2)) {
            assert_eq!(*a, 2.0 * b);
        }
        assert!(psi.dot(&apply_field_energy(&psi)) >= 0.0);
        let e = apply_field_energy(&psi);
        assert!((e.sector(1)[0] - s.modes[0].k_norm * psi.sector(1)[0]).abs() < 1e-15);
    }

    #[test]
    fn h_lambda_is_symmetric_and_reduces_to_l_without_coupling() {
        let s = desk_like();
        let h = build_h_lambda(&s, 8.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let phi = FockVector::random(&s, &mut rng);
            let psi = FockVector::random(&s, &mut rng);
            let d = (phi.dot(&h.apply(&psi)) - h.apply(&phi).dot(&psi)).abs();
            let scale = phi.norm() * h.apply(&psi).norm();
            assert!(d <= 1e-12 * scale, "{d} vs {scale}");
        }
        let grid = build_grid(8, 8.0, GridScheme::default()).unwrap();
        let free = Arc::new(FockSpace::s_wave(&Model::nelson_massless().with_coupling(0.0), &grid, 4, 2).unwrap());
        let h0 = build_h_lambda(&free, 8.0).unwrap();
        let psi = FockVector::random(&free, &mut rng);
        assert_eq!(h0.apply(&psi).data(), apply_free(&psi, 0.0).data());
    }

    #[test]
    fn linearity() {
        let s = desk_like();
        let h = build_h_lambda(&s, 4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let phi = FockVector::random(&s, &mut rng);
        let psi = FockVector::random(&s, &mut rng);
        let lhs = h.apply(&phi.scaled(2.0).axpy(-3.0, &psi));
        let rhs = h.apply(&phi).scaled(2.0).axpy(-3.0, &h.apply(&psi));
        let d = lhs.axpy(-1.0, &rhs).norm();
        assert!(d <= 1e-12 * rhs.norm());
    }
}
