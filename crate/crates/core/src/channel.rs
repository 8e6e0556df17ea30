//! Linear maps between direct-sum algebras in the transfer-matrix
//! (superoperator) representation, with CP/TP certification.
//!
//! A map `E: ⊕_x M_{m_x} -> ⊕_y M_{n_y}` is stored as one transfer matrix
//! per block pair, acting on column-major vectorized blocks:
//! `vec(E(A)_y) = Σ_x T^{(y,x)} vec(A_x)`. Composition and the
//! Hilbert–Schmidt adjoint are then plain matrix algebra.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Algebra, Element, State};
use crate::error::{Error, Result};
use crate::generate::random_isometry;
use crate::linalg::{self, CMat, Tolerance};

/// A linear map between algebras with no positivity or trace constraints.
/// Intermediate results such as a channel compressed by a support
/// projection live here.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMap {
    domain: Algebra,
    codomain: Algebra,
    /// `transfer[y][x]` has shape `n_y² × m_x²`.
    transfer: Vec<Vec<CMat>>,
}

impl BlockMap {
    pub fn new(domain: Algebra, codomain: Algebra, transfer: Vec<Vec<CMat>>) -> Result<Self> {
        if transfer.len() != codomain.n_blocks() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} codomain block rows, got {}",
                codomain.n_blocks(),
                transfer.len()
            )));
        }
        for (y, row) in transfer.iter().enumerate() {
            if row.len() != domain.n_blocks() {
                return Err(Error::DimensionMismatch(format!(
                    "transfer row {y} has {} entries, expected {}",
                    row.len(),
                    domain.n_blocks()
                )));
            }
            let ny = codomain.block_dims()[y];
            for (x, t) in row.iter().enumerate() {
                let mx = domain.block_dims()[x];
                if t.nrows() != ny * ny || t.ncols() != mx * mx {
                    return Err(Error::DimensionMismatch(format!(
                        "transfer ({y},{x}) has shape {}x{}, expected {}x{}",
                        t.nrows(),
                        t.ncols(),
                        ny * ny,
                        mx * mx
                    )));
                }
            }
        }
        Ok(BlockMap { domain, codomain, transfer })
    }

    pub fn identity(algebra: &Algebra) -> Self {
        let transfer = (0..algebra.n_blocks())
            .map(|y| {
                (0..algebra.n_blocks())
                    .map(|x| {
                        let ny = algebra.block_dims()[y];
                        let mx = algebra.block_dims()[x];
                        if y == x {
                            CMat::identity(ny * ny, ny * ny)
                        } else {
                            CMat::zeros(ny * ny, mx * mx)
                        }
                    })
                    .collect()
            })
            .collect();
        BlockMap {
            domain: algebra.clone(),
            codomain: algebra.clone(),
            transfer,
        }
    }

    pub fn zeros(domain: &Algebra, codomain: &Algebra) -> Self {
        let transfer = codomain
            .block_dims()
            .iter()
            .map(|&ny| {
                domain
                    .block_dims()
                    .iter()
                    .map(|&mx| CMat::zeros(ny * ny, mx * mx))
                    .collect()
            })
            .collect();
        BlockMap {
            domain: domain.clone(),
            codomain: codomain.clone(),
            transfer,
        }
    }

    /// Build the transfer matrices of a linear action by evaluating it on
    /// every matrix unit of the domain.
    pub fn from_action<F>(domain: Algebra, codomain: Algebra, action: F) -> Result<Self>
    where
        F: Fn(&Element) -> Result<Element>,
    {
        let mut map = BlockMap::zeros(&domain, &codomain);
        for (x, &mx) in domain.block_dims().iter().enumerate() {
            for j in 0..mx {
                for i in 0..mx {
                    let mut basis = domain.zero();
                    let mut blocks: Vec<CMat> = basis.blocks().to_vec();
                    blocks[x][(i, j)] = Complex64::new(1.0, 0.0);
                    basis = Element::new(domain.clone(), blocks)?;
                    let image = action(&basis)?;
                    if image.algebra() != &codomain {
                        return Err(Error::DimensionMismatch(
                            "action image lands in the wrong algebra".into(),
                        ));
                    }
                    let col = i + mx * j;
                    for (y, out) in image.blocks().iter().enumerate() {
                        let v = linalg::vec_col(out);
                        for (r, value) in v.iter().enumerate() {
                            map.transfer[y][x][(r, col)] = *value;
                        }
                    }
                }
            }
        }
        Ok(map)
    }

    pub fn domain(&self) -> &Algebra {
        &self.domain
    }

    pub fn codomain(&self) -> &Algebra {
        &self.codomain
    }

    pub fn transfer(&self, y: usize, x: usize) -> &CMat {
        &self.transfer[y][x]
    }

    pub(crate) fn transfer_mut(&mut self, y: usize, x: usize) -> &mut CMat {
        &mut self.transfer[y][x]
    }

    /// Apply to an element of the domain.
    pub fn apply(&self, a: &Element) -> Result<Element> {
        if a.algebra() != &self.domain {
            return Err(Error::DimensionMismatch(
                "element does not live in the map's domain".into(),
            ));
        }
        let mut blocks = Vec::with_capacity(self.codomain.n_blocks());
        for (y, &ny) in self.codomain.block_dims().iter().enumerate() {
            let mut acc = vec![Complex64::new(0.0, 0.0); ny * ny];
            for (x, block) in a.blocks().iter().enumerate() {
                let image = &self.transfer[y][x] * CMat::from_column_slice(block.nrows() * block.ncols(), 1, block.as_slice());
                for (r, v) in image.column(0).iter().enumerate() {
                    acc[r] += v;
                }
            }
            blocks.push(linalg::unvec(&acc, ny, ny));
        }
        Element::new(self.codomain.clone(), blocks)
    }

    /// Composite `self ∘ inner`: blockwise matrix products of transfers.
    pub fn compose(&self, inner: &BlockMap) -> Result<BlockMap> {
        if inner.codomain != self.domain {
            return Err(Error::DimensionMismatch(
                "compose: codomain of inner map differs from domain of outer map".into(),
            ));
        }
        let mut out = BlockMap::zeros(&inner.domain, &self.codomain);
        for y in 0..self.codomain.n_blocks() {
            for x in 0..inner.domain.n_blocks() {
                for mid in 0..self.domain.n_blocks() {
                    out.transfer[y][x] += &self.transfer[y][mid] * &inner.transfer[mid][x];
                }
            }
        }
        Ok(out)
    }

    /// Tensor product with row-major pairing of block indices on both sides.
    pub fn tensor(&self, other: &BlockMap) -> BlockMap {
        let domain = self.domain.tensor(&other.domain);
        let codomain = self.codomain.tensor(&other.codomain);
        let mut out = BlockMap::zeros(&domain, &codomain);
        for (y, &ny) in self.codomain.block_dims().iter().enumerate() {
            for (yp, &nyp) in other.codomain.block_dims().iter().enumerate() {
                for (x, &mx) in self.domain.block_dims().iter().enumerate() {
                    for (xp, &mxp) in other.domain.block_dims().iter().enumerate() {
                        let t = &self.transfer[y][x];
                        let tp = &other.transfer[yp][xp];
                        let target =
                            &mut out.transfer[y * other.codomain.n_blocks() + yp][x * other.domain.n_blocks() + xp];
                        // column (i,k),(j,l) of the tensor map is
                        // vec(E(e_ij) ⊗ E'(e_kl))
                        for j in 0..mx {
                            for i in 0..mx {
                                let left = linalg::unvec(t.column(i + mx * j).as_slice(), ny, ny);
                                for l in 0..mxp {
                                    for k in 0..mxp {
                                        let right =
                                            linalg::unvec(tp.column(k + mxp * l).as_slice(), nyp, nyp);
                                        let image = left.kronecker(&right);
                                        let col = (i * mxp + k) + (mx * mxp) * (j * mxp + l);
                                        for (r, v) in image.as_slice().iter().enumerate() {
                                            target[(r, col)] = *v;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Hilbert–Schmidt adjoint: `Tr[E(A)† B] = Tr[A† E*(B)]` for all A, B.
    /// Blockwise this is the conjugate transpose of each transfer matrix
    /// with the block pair swapped.
    pub fn hs_adjoint(&self) -> BlockMap {
        let mut out = BlockMap::zeros(&self.codomain, &self.domain);
        for y in 0..self.codomain.n_blocks() {
            for x in 0..self.domain.n_blocks() {
                out.transfer[x][y] = self.transfer[y][x].adjoint();
            }
        }
        out
    }

    pub fn add(&self, other: &BlockMap) -> Result<BlockMap> {
        if self.domain != other.domain || self.codomain != other.codomain {
            return Err(Error::DimensionMismatch("map addition across different shapes".into()));
        }
        let mut out = self.clone();
        for y in 0..self.codomain.n_blocks() {
            for x in 0..self.domain.n_blocks() {
                out.transfer[y][x] += &other.transfer[y][x];
            }
        }
        Ok(out)
    }

    pub fn scale(&self, s: Complex64) -> BlockMap {
        let mut out = self.clone();
        for row in out.transfer.iter_mut() {
            for t in row.iter_mut() {
                *t *= s;
            }
        }
        out
    }

    /// Frobenius norm over all transfer blocks.
    pub fn norm(&self) -> f64 {
        self.transfer
            .iter()
            .flatten()
            .map(|t| t.norm_squared())
            .sum::<f64>()
            .sqrt()
    }

    /// Frobenius distance normalized by `max(1, ‖self‖, ‖other‖)`.
    pub fn residual(&self, other: &BlockMap) -> f64 {
        let mut diff = 0.0;
        for (row_a, row_b) in self.transfer.iter().zip(&other.transfer) {
            for (a, b) in row_a.iter().zip(row_b) {
                diff += (a - b).norm_squared();
            }
        }
        diff.sqrt() / 1.0_f64.max(self.norm()).max(other.norm())
    }

    pub fn fro_close(&self, other: &BlockMap, tol: Tolerance) -> bool {
        self.domain == other.domain
            && self.codomain == other.codomain
            && self.residual(other) <= tol.abs_eps
    }

    /// Choi matrix of the block-pair component `(y, x)`, an element of
    /// `M_{m_x} ⊗ M_{n_y}`.
    pub fn choi(&self, y: usize, x: usize) -> CMat {
        let mx = self.domain.block_dims()[x];
        let ny = self.codomain.block_dims()[y];
        let t = &self.transfer[y][x];
        let mut choi = CMat::zeros(mx * ny, mx * ny);
        for j in 0..mx {
            for i in 0..mx {
                let image = linalg::unvec(t.column(i + mx * j).as_slice(), ny, ny);
                for r in 0..ny {
                    for c in 0..ny {
                        choi[(i * ny + r, j * ny + c)] = image[(r, c)];
                    }
                }
            }
        }
        choi
    }

    /// CP and TP defects. The CP defect is the worst relative violation of
    /// Choi positivity (including any failure of Choi Hermiticity); the TP
    /// defect is the worst relative failure of the trace intertwining
    /// identity.
    pub fn cptp_defects(&self) -> CptpDefects {
        let mut cp = 0.0_f64;
        for y in 0..self.codomain.n_blocks() {
            for x in 0..self.domain.n_blocks() {
                let choi = self.choi(y, x);
                let scale = 1.0_f64.max(choi.norm());
                let herm_defect = (&choi - choi.adjoint()).norm() / scale;
                let (values, _) = linalg::herm_eig(&linalg::hermitize(&choi), Tolerance::default())
                    .expect("Choi matrix is square and hermitized");
                let lambda_max = values.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
                let lambda_min = values.iter().fold(0.0_f64, |a, &v| a.min(v));
                let neg = (-lambda_min).max(0.0) / 1.0_f64.max(lambda_max);
                cp = cp.max(herm_defect).max(neg);
            }
        }
        let mut tp = 0.0_f64;
        for (x, &mx) in self.domain.block_dims().iter().enumerate() {
            let mut row_sum = CMat::zeros(1, mx * mx);
            for (y, &ny) in self.codomain.block_dims().iter().enumerate() {
                row_sum += linalg::trace_functional(ny) * &self.transfer[y][x];
            }
            let target = linalg::trace_functional(mx);
            tp = tp.max((&row_sum - &target).norm() / 1.0_f64.max(row_sum.norm()));
        }
        CptpDefects { cp, tp }
    }

    pub fn is_cptp(&self, tol: Tolerance) -> bool {
        let d = self.cptp_defects();
        d.cp <= tol.eig_cut_rel.max(tol.abs_eps) && d.tp <= tol.abs_eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptpDefects {
    pub cp: f64,
    pub tp: f64,
}

impl CptpDefects {
    pub fn max(&self) -> f64 {
        self.cp.max(self.tp)
    }
}

/// A completely positive trace-preserving map, verified at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    map: BlockMap,
}

impl Channel {
    pub fn new(map: BlockMap, tol: Tolerance) -> Result<Self> {
        let d = map.cptp_defects();
        if d.cp > tol.eig_cut_rel.max(tol.abs_eps) || d.tp > tol.abs_eps {
            return Err(Error::NotCptp {
                cp_defect: d.cp,
                tp_defect: d.tp,
            });
        }
        Ok(Channel { map })
    }

    /// Wrap a map that is CPTP by construction; verified only in debug builds.
    pub(crate) fn trusted(map: BlockMap) -> Self {
        debug_assert!(
            map.is_cptp(Tolerance { abs_eps: 1e-7, eig_cut_rel: 1e-7 }),
            "map is not CPTP: {:?}",
            map.cptp_defects()
        );
        Channel { map }
    }

    pub fn identity(algebra: &Algebra) -> Self {
        Channel {
            map: BlockMap::identity(algebra),
        }
    }

    pub fn as_map(&self) -> &BlockMap {
        &self.map
    }

    pub fn into_map(self) -> BlockMap {
        self.map
    }

    pub fn compose(&self, inner: &Channel) -> Result<Channel> {
        Ok(Channel::trusted(self.map.compose(&inner.map)?))
    }

    pub fn tensor(&self, other: &Channel) -> Channel {
        Channel::trusted(self.map.tensor(&other.map))
    }

    /// Apply and re-validate the output as a state.
    pub fn apply_to_state(&self, state: &State, tol: Tolerance) -> Result<State> {
        State::from_element_hermitized(self.map.apply(state.element())?, tol)
    }
}

impl std::ops::Deref for Channel {
    type Target = BlockMap;

    fn deref(&self) -> &BlockMap {
        &self.map
    }
}

/// The conjugation `A ↦ V_k A V_k†` acting blockwise; `vs[k]` maps domain
/// block `k` into codomain block `k`. CP for any `vs`, TP iff `V†V = 1`.
pub fn ad_map(vs: &[CMat], domain: &Algebra, codomain: &Algebra) -> Result<BlockMap> {
    if vs.len() != domain.n_blocks() || domain.n_blocks() != codomain.n_blocks() {
        return Err(Error::DimensionMismatch(
            "conjugation needs one matrix per block, block counts matching".into(),
        ));
    }
    let mut map = BlockMap::zeros(domain, codomain);
    for (k, v) in vs.iter().enumerate() {
        let mx = domain.block_dims()[k];
        let ny = codomain.block_dims()[k];
        if v.nrows() != ny || v.ncols() != mx {
            return Err(Error::DimensionMismatch(format!(
                "conjugation block {k} has shape {}x{}, expected {ny}x{mx}",
                v.nrows(),
                v.ncols()
            )));
        }
        // vec(V A V†) = (conj(V) ⊗ V) vec(A)
        map.transfer[k][k] = v.conjugate().kronecker(v);
    }
    Ok(map)
}

/// Conjugation by an element of the algebra itself (same domain and codomain).
pub fn ad_element(v: &Element) -> BlockMap {
    ad_map(v.blocks(), v.algebra(), v.algebra()).expect("shapes match by construction")
}

/// Which tensor factor an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    First,
    Second,
}

/// Partial trace over one factor of `left ⊗ right`, as a channel.
pub fn partial_trace(left: &Algebra, right: &Algebra, traced: Factor) -> Channel {
    let joint = left.tensor(right);
    let (codomain, action): (Algebra, Box<dyn Fn(&Element) -> Result<Element>>) = match traced {
        Factor::Second => (
            left.clone(),
            Box::new({
                let (l, r) = (left.clone(), right.clone());
                move |e: &Element| marginal_first(e, &l, &r)
            }),
        ),
        Factor::First => (
            right.clone(),
            Box::new({
                let (l, r) = (left.clone(), right.clone());
                move |e: &Element| marginal_second(e, &l, &r)
            }),
        ),
    };
    let map = BlockMap::from_action(joint, codomain, action).expect("partial trace is well-shaped");
    Channel::trusted(map)
}

/// Partial trace checked against a declared joint algebra.
pub fn partial_trace_checked(
    joint: &Algebra,
    left: &Algebra,
    right: &Algebra,
    traced: Factor,
) -> Result<Channel> {
    if *joint != left.tensor(right) {
        return Err(Error::NotATensorAlgebra(format!(
            "blocks {:?} are not the row-major tensor of {:?} and {:?}",
            joint.block_dims(),
            left.block_dims(),
            right.block_dims()
        )));
    }
    Ok(partial_trace(left, right, traced))
}

/// Marginal of a joint element over the second factor: keeps `left`.
pub fn marginal_first(joint: &Element, left: &Algebra, right: &Algebra) -> Result<Element> {
    check_joint(joint, left, right)?;
    let mut blocks: Vec<CMat> = left.block_dims().iter().map(|&m| CMat::zeros(m, m)).collect();
    for (x, &m) in left.block_dims().iter().enumerate() {
        for (w, &e) in right.block_dims().iter().enumerate() {
            let jb = joint.block(x * right.n_blocks() + w);
            for i in 0..m {
                for j in 0..m {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for a in 0..e {
                        acc += jb[(i * e + a, j * e + a)];
                    }
                    blocks[x][(i, j)] += acc;
                }
            }
        }
    }
    Element::new(left.clone(), blocks)
}

/// Marginal of a joint element over the first factor: keeps `right`.
pub fn marginal_second(joint: &Element, left: &Algebra, right: &Algebra) -> Result<Element> {
    check_joint(joint, left, right)?;
    let mut blocks: Vec<CMat> = right.block_dims().iter().map(|&e| CMat::zeros(e, e)).collect();
    for (x, &m) in left.block_dims().iter().enumerate() {
        for (w, &e) in right.block_dims().iter().enumerate() {
            let jb = joint.block(x * right.n_blocks() + w);
            for a in 0..e {
                for b in 0..e {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for i in 0..m {
                        acc += jb[(i * e + a, i * e + b)];
                    }
                    blocks[w][(a, b)] += acc;
                }
            }
        }
    }
    Element::new(right.clone(), blocks)
}

fn check_joint(joint: &Element, left: &Algebra, right: &Algebra) -> Result<()> {
    if *joint.algebra() != left.tensor(right) {
        return Err(Error::NotATensorAlgebra(format!(
            "joint element blocks {:?} do not match {:?} ⊗ {:?}",
            joint.algebra().block_dims(),
            left.block_dims(),
            right.block_dims()
        )));
    }
    Ok(())
}

/// Apply `map ⊗ id_right` to a joint element without materializing the
/// tensor transfer matrix.
pub fn apply_left_tensor(map: &BlockMap, right: &Algebra, joint: &Element) -> Result<Element> {
    check_joint(joint, map.domain(), right)?;
    let cod = map.codomain().tensor(right);
    let mut blocks: Vec<CMat> = cod.block_dims().iter().map(|&d| CMat::zeros(d, d)).collect();
    for (y, &ny) in map.codomain().block_dims().iter().enumerate() {
        for (w, &e) in right.block_dims().iter().enumerate() {
            let target = &mut blocks[y * right.n_blocks() + w];
            for (x, &mx) in map.domain().block_dims().iter().enumerate() {
                let jb = joint.block(x * right.n_blocks() + w);
                let t = map.transfer(y, x);
                for a in 0..e {
                    for b in 0..e {
                        // slice S_ab ∈ M_{m_x}, S_ab[i,j] = J[(i,a),(j,b)]
                        let slice = CMat::from_fn(mx, mx, |i, j| jb[(i * e + a, j * e + b)]);
                        let image_vec = t * CMat::from_column_slice(mx * mx, 1, slice.as_slice());
                        let image = linalg::unvec(image_vec.column(0).as_slice(), ny, ny);
                        for u in 0..ny {
                            for v in 0..ny {
                                target[(u * e + a, v * e + b)] += image[(u, v)];
                            }
                        }
                    }
                }
            }
        }
    }
    Element::new(cod, blocks)
}

/// Apply `id_left ⊗ map` to a joint element without materializing the
/// tensor transfer matrix.
pub fn apply_right_tensor(left: &Algebra, map: &BlockMap, joint: &Element) -> Result<Element> {
    check_joint(joint, left, map.domain())?;
    let cod = left.tensor(map.codomain());
    let mut blocks: Vec<CMat> = cod.block_dims().iter().map(|&d| CMat::zeros(d, d)).collect();
    for (x, &m) in left.block_dims().iter().enumerate() {
        for (w, &ew) in map.codomain().block_dims().iter().enumerate() {
            let target = &mut blocks[x * map.codomain().n_blocks() + w];
            for (wp, &ewp) in map.domain().block_dims().iter().enumerate() {
                let jb = joint.block(x * map.domain().n_blocks() + wp);
                let t = map.transfer(w, wp);
                for i in 0..m {
                    for j in 0..m {
                        let slice = CMat::from_fn(ewp, ewp, |a, b| jb[(i * ewp + a, j * ewp + b)]);
                        let image_vec = t * CMat::from_column_slice(ewp * ewp, 1, slice.as_slice());
                        let image = linalg::unvec(image_vec.column(0).as_slice(), ew, ew);
                        for a in 0..ew {
                            for b in 0..ew {
                                target[(i * ew + a, j * ew + b)] += image[(a, b)];
                            }
                        }
                    }
                }
            }
        }
    }
    Element::new(cod, blocks)
}

/// Block-diagonal embedding of an algebra into a full matrix algebra.
///
/// Returns `(phi, psi, n)` with `n = Tr[1]`: `phi` places the blocks on the
/// diagonal of `M_n`, `psi` pinches `M_n` to the block diagonal and
/// restricts, and `psi ∘ phi = id` exactly. Both are CPTP and `psi` is
/// unital.
pub fn block_embedding(algebra: &Algebra) -> (Channel, Channel, usize) {
    let n = algebra.total_dim();
    let full = Algebra::matrix(n);
    let mut offsets = Vec::with_capacity(algebra.n_blocks());
    let mut acc = 0;
    for &m in algebra.block_dims() {
        offsets.push(acc);
        acc += m;
    }

    // phi: blockwise Ad_{V_x} with V_x the inclusion C^{m_x} -> C^n
    let mut phi = BlockMap::zeros(algebra, &full);
    for (x, (&m, &off)) in algebra.block_dims().iter().zip(&offsets).enumerate() {
        let mut v = CMat::zeros(n, m);
        for i in 0..m {
            v[(off + i, i)] = Complex64::new(1.0, 0.0);
        }
        phi.transfer[0][x] = v.conjugate().kronecker(&v);
    }

    // psi: blockwise Ad_{P_x} with P_x = V_x† the restriction C^n -> C^{m_x}
    let mut psi = BlockMap::zeros(&full, algebra);
    for (x, (&m, &off)) in algebra.block_dims().iter().zip(&offsets).enumerate() {
        let mut p = CMat::zeros(m, n);
        for i in 0..m {
            p[(i, off + i)] = Complex64::new(1.0, 0.0);
        }
        psi.transfer[x][0] = p.conjugate().kronecker(&p);
    }

    (Channel::trusted(phi), Channel::trusted(psi), n)
}

/// Seeded random channel via a Stinespring isometry through the
/// block-diagonal embeddings: `psi_cod ∘ Tr_env ∘ Ad_V ∘ phi_dom`.
pub fn random_channel(
    domain: &Algebra,
    codomain: &Algebra,
    env_dim: usize,
    seed: u64,
) -> Result<Channel> {
    let n_dom = domain.total_dim();
    let n_cod = codomain.total_dim();
    if env_dim == 0 || n_cod * env_dim < n_dom {
        return Err(Error::DimensionTooSmall {
            needed: n_dom,
            got: n_cod * env_dim,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = random_isometry(&mut rng, n_cod * env_dim, n_dom);

    let (phi, _, _) = block_embedding(domain);
    let (_, psi, _) = block_embedding(codomain);
    let big = Algebra::matrix(n_cod * env_dim);
    let ad_v = ad_map(&[v], &Algebra::matrix(n_dom), &big)?;
    let trace_env = partial_trace(&Algebra::matrix(n_cod), &Algebra::matrix(env_dim), Factor::Second);

    let map = psi
        .as_map()
        .compose(trace_env.as_map())?
        .compose(&ad_v)?
        .compose(phi.as_map())?;
    Channel::new(map, Tolerance::default())
}

/// Embed a stochastic map as a channel between classical algebras.
pub fn embed_stoch(f: &crate::finstoch::StochasticMatrix) -> Channel {
    let domain = Algebra::classical(f.n_in()).expect("nonempty");
    let codomain = Algebra::classical(f.n_out()).expect("nonempty");
    let mut map = BlockMap::zeros(&domain, &codomain);
    for y in 0..f.n_out() {
        for x in 0..f.n_in() {
            map.transfer[y][x][(0, 0)] = Complex64::new(f.entry(y, x), 0.0);
        }
    }
    Channel::trusted(map)
}

/// Read a stochastic map back off a channel between classical algebras.
pub fn extract_stoch(channel: &Channel) -> Result<crate::finstoch::StochasticMatrix> {
    if !channel.domain().is_commutative() || !channel.codomain().is_commutative() {
        return Err(Error::InvalidInput("channel is not between commutative algebras".into()));
    }
    let rows: Vec<Vec<f64>> = (0..channel.codomain().n_blocks())
        .map(|y| {
            (0..channel.domain().n_blocks())
                .map(|x| channel.transfer(y, x)[(0, 0)].re)
                .collect()
        })
        .collect();
    crate::finstoch::StochasticMatrix::from_rows(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{embed_prob, uniform_state};
    use crate::finstoch::{ProbVector, StochasticMatrix};
    use crate::generate::{random_state, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn depolarizing_m2() -> Channel {
        // E(A) = Tr[A] I/2 on M_2
        let a = Algebra::matrix(2);
        let map = BlockMap::from_action(a.clone(), a, |e| {
            let tr = e.trace();
            Ok(Element::new(
                Algebra::matrix(2),
                vec![CMat::identity(2, 2) * (tr * Complex64::new(0.5, 0.0))],
            )?)
        })
        .unwrap();
        Channel::new(map, tol()).unwrap()
    }

    #[test]
    fn identity_applies_trivially() {
        let a = Algebra::new(vec![2, 1]).unwrap();
        let id = Channel::identity(&a);
        let u = uniform_state(&a);
        let out = id.apply(u.element()).unwrap();
        assert!(out.fro_close(u.element(), tol()));
        assert!(id.is_cptp(tol()));
    }

    #[test]
    fn depolarizing_maps_everything_to_uniform() {
        let e = depolarizing_m2();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_state(&mut rng, &Algebra::matrix(2), true, tol());
        let out = e.apply(s.element()).unwrap();
        assert!(out.fro_close(uniform_state(&Algebra::matrix(2)).element(), tol()));
    }

    #[test]
    fn embedding_intertwines_application() {
        let f = StochasticMatrix::from_rows(vec![vec![1.0, 0.5], vec![0.0, 0.5]]).unwrap();
        let p = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let channel = embed_stoch(&f);
        let out = channel.apply(embed_prob(&p).element()).unwrap();
        let expected = embed_prob(&f.pushforward(&p).unwrap());
        assert!(out.fro_close(expected.element(), tol()));
        // Choi matrices of classical channels are diagonal with entries f_yx
        for y in 0..2 {
            for x in 0..2 {
                let choi = channel.choi(y, x);
                assert!((choi[(0, 0)].re - f.entry(y, x)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn compose_and_interchange() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = Algebra::matrix(2);
        let b = Algebra::new(vec![1, 1]).unwrap();
        let e = random_channel(&a, &b, 3, 100).unwrap();
        let f = random_channel(&b, &a, 2, 101).unwrap();
        let ep = random_channel(&b, &b, 2, 102).unwrap();
        let fp = random_channel(&b, &a, 2, 103).unwrap();

        let id = Channel::identity(&a);
        assert!(e.compose(&id).unwrap().fro_close(e.as_map(), tol()));

        // (F⊗F') ∘ (E⊗E') = (F∘E) ⊗ (F'∘E')
        let lhs = f.tensor(&fp).compose(&e.tensor(&ep)).unwrap();
        let rhs = f.compose(&e).unwrap().tensor(&fp.compose(&ep).unwrap());
        assert!(lhs.residual(rhs.as_map()) < 1e-9);

        // apply(compose(F,E), a) = apply(F, apply(E, a))
        let s = random_state(&mut rng, &a, true, tol());
        let via_compose = f.compose(&e).unwrap().apply(s.element()).unwrap();
        let via_apply = f.apply(&e.apply(s.element()).unwrap()).unwrap();
        assert!(via_compose.fro_close(&via_apply, tol()));

        // Ad_U ∘ Ad_V = Ad_{UV}
        let u = random_unitary(&mut rng, 2);
        let v = random_unitary(&mut rng, 2);
        let ad_u = ad_map(&[u.clone()], &a, &a).unwrap();
        let ad_v = ad_map(&[v.clone()], &a, &a).unwrap();
        let ad_uv = ad_map(&[&u * &v], &a, &a).unwrap();
        assert!(ad_u.compose(&ad_v).unwrap().fro_close(&ad_uv, tol()));
    }

    #[test]
    fn hs_adjoint_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let a = Algebra::new(vec![2, 1]).unwrap();
        let b = Algebra::matrix(2);
        let e = random_channel(&a, &b, 2, 55).unwrap();

        // involution is exact
        assert_eq!(&e.hs_adjoint().hs_adjoint(), e.as_map());

        // unital when E is TP
        let unit_image = e.hs_adjoint().apply(&b.unit()).unwrap();
        assert!(unit_image.fro_close(&a.unit(), tol()));

        // pairing identity on random elements
        for _ in 0..5 {
            let s = random_state(&mut rng, &a, true, tol());
            let t = random_state(&mut rng, &b, true, tol());
            let lhs = e
                .apply(s.element())
                .unwrap()
                .adjoint()
                .mul(t.element())
                .unwrap()
                .trace();
            let rhs = s
                .element()
                .adjoint()
                .mul(&e.hs_adjoint().apply(t.element()).unwrap())
                .unwrap()
                .trace();
            assert!((lhs - rhs).norm() < 1e-10);
        }

        // (Ad_U)* = Ad_{U†}
        let u = random_unitary(&mut rng, 2);
        let ad_u = ad_map(&[u.clone()], &b, &b).unwrap();
        let ad_udag = ad_map(&[u.adjoint()], &b, &b).unwrap();
        assert!(ad_u.hs_adjoint().fro_close(&ad_udag, tol()));

        // full depolarizing: E*(B) = Tr[B] I/2, checked on matrix units
        let dep = depolarizing_m2();
        let adj = dep.hs_adjoint();
        for i in 0..2 {
            for j in 0..2 {
                let mut unit = CMat::zeros(2, 2);
                unit[(i, j)] = Complex64::new(1.0, 0.0);
                let el = Element::new(Algebra::matrix(2), vec![unit.clone()]).unwrap();
                let img = adj.apply(&el).unwrap();
                let expected = CMat::identity(2, 2) * (unit.trace() * Complex64::new(0.5, 0.0));
                assert!((img.block(0) - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn ad_map_trace_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m2 = Algebra::matrix(2);
        let m3 = Algebra::matrix(3);

        // isometry: TP
        let v = random_isometry(&mut rng, 3, 2);
        let ad_v = ad_map(&[v], &m2, &m3).unwrap();
        let d = ad_v.cptp_defects();
        assert!(d.tp < 1e-9 && d.cp < 1e-9);

        // projection: CP, trace-nonincreasing, not TP
        let mut p = CMat::zeros(2, 2);
        p[(0, 0)] = Complex64::new(1.0, 0.0);
        let ad_p = ad_map(&[p], &m2, &m2).unwrap();
        let d = ad_p.cptp_defects();
        assert!(d.cp < 1e-12);
        assert!(d.tp > 0.1);

        // V = 1: identity map
        let ad_one = ad_map(&[CMat::identity(2, 2)], &m2, &m2).unwrap();
        assert!(ad_one.fro_close(&BlockMap::identity(&m2), tol()));
    }

    #[test]
    fn partial_trace_of_product_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = Algebra::new(vec![2, 1]).unwrap();
        let b = Algebra::matrix(2);
        let alpha = random_state(&mut rng, &a, true, tol());
        let beta = random_state(&mut rng, &b, true, tol());
        let joint = alpha.tensor(&beta);

        let tr2 = partial_trace(&a, &b, Factor::Second);
        let out = tr2.apply(joint.element()).unwrap();
        assert!(out.fro_close(alpha.element(), tol()));

        let m1 = marginal_first(joint.element(), &a, &b).unwrap();
        assert!(m1.fro_close(alpha.element(), tol()));
        let m2 = marginal_second(joint.element(), &a, &b).unwrap();
        assert!(m2.fro_close(beta.element(), tol()));
    }

    #[test]
    fn discard_is_natural() {
        // Tr_2 ∘ (E ⊗ F) = E ∘ Tr_2 for trace-preserving F
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let a = Algebra::matrix(2);
        let b = Algebra::new(vec![1, 1]).unwrap();
        let e = random_channel(&a, &b, 2, 200).unwrap();
        let f = random_channel(&a, &a, 2, 201).unwrap();
        let joint = random_state(&mut rng, &a.tensor(&a), true, tol());

        let lhs = marginal_first(
            &e.tensor(&f).apply(joint.element()).unwrap(),
            &b,
            &a,
        )
        .unwrap();
        let rhs = e
            .apply(&marginal_first(joint.element(), &a, &a).unwrap())
            .unwrap();
        assert!(lhs.fro_close(&rhs, tol()));
    }

    #[test]
    fn structured_tensor_application_matches_materialized() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let a = Algebra::new(vec![2, 1]).unwrap();
        let b = Algebra::matrix(2);
        let e = random_channel(&a, &b, 2, 300).unwrap();
        let env = Algebra::new(vec![1, 2]).unwrap();
        let joint = random_state(&mut rng, &a.tensor(&env), true, tol());

        let fast = apply_left_tensor(e.as_map(), &env, joint.element()).unwrap();
        let slow = e
            .as_map()
            .tensor(&BlockMap::identity(&env))
            .apply(joint.element())
            .unwrap();
        assert!(fast.fro_close(&slow, tol()));

        let joint2 = random_state(&mut rng, &env.tensor(&a), true, tol());
        let fast2 = apply_right_tensor(&env, e.as_map(), joint2.element()).unwrap();
        let slow2 = BlockMap::identity(&env)
            .tensor(e.as_map())
            .apply(joint2.element())
            .unwrap();
        assert!(fast2.fro_close(&slow2, tol()));
    }

    #[test]
    fn block_embedding_examples() {
        // commutative two-point algebra: dephasing then restrict
        let c2 = Algebra::classical(2).unwrap();
        let (phi, psi, n) = block_embedding(&c2);
        assert_eq!(n, 2);
        let composed = psi.compose(&phi).unwrap();
        assert!(composed.fro_close(&BlockMap::identity(&c2), tol()));

        // full matrix algebra embeds as itself
        let m2 = Algebra::matrix(2);
        let (phi2, psi2, n2) = block_embedding(&m2);
        assert_eq!(n2, 2);
        assert!(phi2.fro_close(&BlockMap::identity(&m2), tol()));
        assert!(psi2.fro_close(&BlockMap::identity(&m2), tol()));

        // mixed algebra: psi ∘ phi = id on a basis, psi unital, both CPTP
        let a = Algebra::new(vec![2, 1]).unwrap();
        let (phi3, psi3, n3) = block_embedding(&a);
        assert_eq!(n3, 3);
        assert!(psi3.compose(&phi3).unwrap().fro_close(&BlockMap::identity(&a), tol()));
        assert!(phi3.is_cptp(tol()) && psi3.is_cptp(tol()));
        let unital = psi3.apply(&Algebra::matrix(3).unit()).unwrap();
        assert!(unital.fro_close(&a.unit(), tol()));
    }

    #[test]
    fn random_channels_are_cptp_and_deterministic() {
        let a = Algebra::new(vec![2, 1]).unwrap();
        let b = Algebra::matrix(2);
        let e1 = random_channel(&a, &b, 2, 42).unwrap();
        let e2 = random_channel(&a, &b, 2, 42).unwrap();
        assert_eq!(e1.as_map(), e2.as_map());
        assert!(e1.is_cptp(tol()));

        // square isometry when env_dim = 1 and dims match
        let u = random_channel(&b, &b, 1, 43).unwrap();
        assert!(u.is_cptp(tol()));

        assert!(matches!(
            random_channel(&b, &Algebra::classical(1).unwrap(), 1, 44),
            Err(Error::DimensionTooSmall { .. })
        ));
    }

    #[test]
    fn non_cptp_maps_are_rejected() {
        let a = Algebra::matrix(2);
        // transpose map: positive but not completely positive
        let transpose = BlockMap::from_action(a.clone(), a.clone(), |e| {
            Ok(Element::new(a.clone(), vec![e.block(0).transpose()])?)
        })
        .unwrap();
        assert!(!transpose.is_cptp(tol()));
        assert!(Channel::new(transpose, tol()).is_err());
    }
}
