//! Seeded random instance generation: unitaries, isometries, states,
//! distributions, stochastic maps, and algebra isomorphisms. All functions
//! take an explicit RNG; nothing here touches a global generator.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::algebra::{Algebra, Element, State};
use crate::channel::{ad_map, BlockMap, Channel};
use crate::error::Result;
use crate::finstoch::{ProbVector, StochasticMatrix};
use crate::linalg::{self, CMat, Tolerance};

/// Complex matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Random isometry (`rows ≥ cols`): orthonormalized Gaussian columns, with
/// the QR phase convention fixed so results are reproducible.
pub fn random_isometry<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = ginibre(rng, rows, cols);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..cols {
        let d = r[(c, c)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for row in 0..rows {
                q[(row, c)] *= phase;
            }
        }
    }
    q
}

pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMat {
    random_isometry(rng, n, n)
}

/// Random state on an algebra. Faithful states get a small ridge so every
/// eigenvalue is bounded away from zero; non-faithful states are produced
/// by zeroing a random subset of eigenvalues and renormalizing.
pub fn random_state<R: Rng>(rng: &mut R, algebra: &Algebra, faithful: bool, tol: Tolerance) -> State {
    let mut blocks = Vec::with_capacity(algebra.n_blocks());
    let mut weights = Vec::with_capacity(algebra.n_blocks());
    for &m in algebra.block_dims() {
        let g = ginibre(rng, m, m);
        let mut rho = &g * g.adjoint();
        rho += CMat::identity(m, m) * Complex64::new(0.05 * m as f64, 0.0);
        let tr = rho.trace().re;
        blocks.push(rho / Complex64::new(tr, 0.0));
        weights.push(0.05 + rng.gen::<f64>());
    }
    let total: f64 = weights.iter().sum();
    let mut element_blocks: Vec<CMat> = blocks
        .iter()
        .zip(&weights)
        .map(|(b, &w)| b * Complex64::new(w / total, 0.0))
        .collect();

    if !faithful && algebra.total_dim() > 1 {
        // zero a random nonempty proper subset of the eigenvalues
        let n_total = algebra.total_dim();
        let mut mask: Vec<bool> = (0..n_total).map(|_| rng.gen::<f64>() < 0.35).collect();
        if mask.iter().all(|&k| k) {
            mask[rng.gen_range(0..n_total)] = false;
        }
        if mask.iter().all(|&k| !k) {
            mask[rng.gen_range(0..n_total)] = true;
        }
        let mut idx = 0;
        let mut kept_trace = 0.0;
        let mut new_blocks = Vec::with_capacity(element_blocks.len());
        for b in &element_blocks {
            let (values, vectors) = linalg::herm_eig(b, tol).expect("blocks are Hermitian");
            let m = b.nrows();
            let mut rebuilt = CMat::zeros(m, m);
            for (i, &v) in values.iter().enumerate() {
                if mask[idx] {
                    idx += 1;
                    continue;
                }
                idx += 1;
                kept_trace += v;
                let col = vectors.column(i);
                for r in 0..m {
                    for c in 0..m {
                        rebuilt[(r, c)] += Complex64::new(v, 0.0) * col[r] * col[c].conj();
                    }
                }
            }
            new_blocks.push(rebuilt);
        }
        element_blocks = new_blocks
            .into_iter()
            .map(|b| b / Complex64::new(kept_trace, 0.0))
            .collect();
    }

    let element = Element::new(algebra.clone(), element_blocks).expect("shapes match");
    State::from_element_hermitized(element, tol).expect("constructed state is valid")
}

/// Random distribution; a faithful one is bounded away from zero.
pub fn random_prob<R: Rng>(rng: &mut R, n: usize, faithful: bool) -> ProbVector {
    let mut values: Vec<f64> = (0..n)
        .map(|_| {
            let base: f64 = -rng.gen::<f64>().max(1e-12).ln();
            if faithful {
                base + 0.05
            } else {
                base
            }
        })
        .collect();
    if !faithful && n > 1 {
        let zeros = rng.gen_range(1..n);
        for k in 0..zeros {
            values[k] = 0.0;
        }
        // shuffle positions
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            values.swap(i, j);
        }
    }
    let total: f64 = values.iter().sum();
    ProbVector::new(values.iter().map(|v| v / total).collect()).expect("normalized")
}

/// Random column-stochastic matrix with strictly positive entries.
pub fn random_stoch<R: Rng>(rng: &mut R, n_out: usize, n_in: usize) -> StochasticMatrix {
    let mut rows = vec![vec![0.0; n_in]; n_out];
    for x in 0..n_in {
        let col: Vec<f64> = (0..n_out)
            .map(|_| -rng.gen::<f64>().max(1e-12).ln() + 0.01)
            .collect();
        let sum: f64 = col.iter().sum();
        for y in 0..n_out {
            rows[y][x] = col[y] / sum;
        }
    }
    StochasticMatrix::from_rows(rows).expect("columns normalized")
}

/// The channel `X ↦ P X P + Tr[P^⊥ X] · τ` for a projection `P` and a state
/// `τ`: it acts as the identity inside the range of `P` and reroutes the
/// remaining weight to `τ`.
pub fn support_reset_channel_with(projection: &Element, tau: &State, tol: Tolerance) -> Result<Channel> {
    let algebra = tau.algebra().clone();
    let p = projection.clone();
    let p_perp = algebra.unit().sub(&p)?;
    let tau_el = tau.element().clone();
    let map = BlockMap::from_action(algebra.clone(), algebra, move |el| {
        let kept = p.mul(el)?.mul(&p)?;
        let escaped = p_perp.mul(el)?.mul(&p_perp)?.trace();
        let blocks = kept
            .blocks()
            .iter()
            .zip(tau_el.blocks())
            .map(|(k, t)| k + t * escaped)
            .collect();
        Element::new(el.algebra().clone(), blocks)
    })?;
    Channel::new(map, tol)
}

/// Random support-squeezing channel: the identity on the support of a random
/// non-faithful state, rerouting the complement into that support. Outputs
/// are never faithful.
pub fn support_reset_channel<R: Rng>(rng: &mut R, algebra: &Algebra, tol: Tolerance) -> Result<Channel> {
    let sigma = random_state(rng, algebra, false, tol);
    let p = crate::algebra::support_projection_state(&sigma, tol);
    support_reset_channel_with(&p, &sigma, tol)
}

/// Random algebra isomorphism: a block permutation (between blocks of equal
/// dimension) composed with per-block unitary conjugations. Returns the
/// isomorphism, its inverse, and the codomain algebra.
pub fn random_isomorphism<R: Rng>(rng: &mut R, domain: &Algebra) -> Result<(Channel, Channel, Algebra)> {
    let k = domain.n_blocks();
    // random permutation of block indices
    let mut perm: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    // codomain block j is domain block perm[j]; equal dims within orbits are
    // guaranteed because we permute the dimension list itself
    let codomain = Algebra::new(perm.iter().map(|&x| domain.block_dims()[x]).collect())?;
    let unitaries: Vec<CMat> = perm
        .iter()
        .map(|&x| random_unitary(rng, domain.block_dims()[x]))
        .collect();

    let mut fwd = BlockMap::zeros(domain, &codomain);
    let mut bwd = BlockMap::zeros(&codomain, domain);
    for (j, &x) in perm.iter().enumerate() {
        let u = &unitaries[j];
        // forward: codomain block j receives U_j A_{perm[j]} U_j†
        let m = domain.block_dims()[x];
        let fwd_block = ad_map(&[u.clone()], &Algebra::matrix(m), &Algebra::matrix(m))?;
        let bwd_block = ad_map(&[u.adjoint()], &Algebra::matrix(m), &Algebra::matrix(m))?;
        *fwd.transfer_mut(j, x) = fwd_block.transfer(0, 0).clone();
        *bwd.transfer_mut(x, j) = bwd_block.transfer(0, 0).clone();
    }
    Ok((Channel::trusted(fwd), Channel::trusted(bwd), codomain))
}
