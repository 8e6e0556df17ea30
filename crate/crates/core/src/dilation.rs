//! Dilations and purifications of states: the canonical purification,
//! dilations derived from it, the dilational-equality decision procedure,
//! absolute continuity, and the factorization of arbitrary dilations
//! through the canonical one.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::algebra::{support_projection_state, Algebra, Element, State};
use crate::channel::{
    ad_element, apply_left_tensor, apply_right_tensor, block_embedding, marginal_first,
    random_channel, BlockMap, Channel,
};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, Tolerance};

/// A state on `A ⊗ E` together with the marginal on `A` it dilates.
#[derive(Debug, Clone)]
pub struct Dilation {
    base: State,
    environment: Algebra,
    joint: State,
}

impl Dilation {
    /// Validates that the joint state lives on `A ⊗ E` and that tracing out
    /// the environment recovers the base state.
    pub fn new(base: State, environment: Algebra, joint: State, tol: Tolerance) -> Result<Self> {
        if *joint.algebra() != base.algebra().tensor(&environment) {
            return Err(Error::NotATensorAlgebra(format!(
                "joint lives on {:?}, expected {:?} ⊗ {:?}",
                joint.algebra().block_dims(),
                base.algebra().block_dims(),
                environment.block_dims()
            )));
        }
        let marginal = marginal_first(joint.element(), base.algebra(), &environment)?;
        let residual = linalg_residual(&marginal, base.element());
        if residual > tol.abs_eps {
            return Err(Error::NotADilation { residual });
        }
        Ok(Dilation { base, environment, joint })
    }

    pub fn base_state(&self) -> &State {
        &self.base
    }

    pub fn environment(&self) -> &Algebra {
        &self.environment
    }

    pub fn joint(&self) -> &State {
        &self.joint
    }

    pub fn marginal_residual(&self) -> f64 {
        let marginal = marginal_first(self.joint.element(), self.base.algebra(), &self.environment)
            .expect("validated at construction");
        linalg_residual(&marginal, self.base.element())
    }
}

fn linalg_residual(a: &Element, b: &Element) -> f64 {
    a.sub(b)
        .map(|d| d.norm() / 1.0_f64.max(a.norm()).max(b.norm()))
        .unwrap_or(f64::INFINITY)
}

/// Eigendata of the embedded state `phi(α)`, shared by the purification
/// and factorization paths. Eigenvalues inside the clamp band are zeroed so
/// the purification is supported exactly on the support projection.
fn embedded_spectrum(state: &State, tol: Tolerance) -> Result<(Channel, Channel, usize, Vec<f64>, CMat)> {
    let (phi, psi, n) = block_embedding(state.algebra());
    let embedded = phi.apply(state.element())?;
    let (mut p, v) = linalg::herm_eig(embedded.block(0), tol)?;
    clamp_spectrum(&mut p, tol);
    Ok((phi, psi, n, p, v))
}

fn clamp_spectrum(values: &mut [f64], tol: Tolerance) {
    let lambda_max = values.iter().fold(0.0_f64, |a, &v| a.max(v.abs()));
    let cut = tol.eig_cut(lambda_max);
    for v in values.iter_mut() {
        if *v <= cut {
            *v = 0.0;
        }
    }
}

/// The purification vector `Σ_i sqrt(p_i) |i> ⊗ |i>` as a column.
fn purification_vector(p: &[f64], v: &CMat) -> CMat {
    let n = v.nrows();
    let mut omega = CMat::zeros(n * n, 1);
    for (i, &pi) in p.iter().enumerate() {
        if pi <= 0.0 {
            continue;
        }
        let root = pi.sqrt();
        let col = v.column(i);
        for r in 0..n {
            for s in 0..n {
                omega[(r * n + s, 0)] += Complex64::new(root, 0.0) * col[r] * col[s];
            }
        }
    }
    omega
}

fn purification_from_spectrum(
    state: &State,
    psi: &Channel,
    n: usize,
    p: &[f64],
    v: &CMat,
    tol: Tolerance,
) -> Result<Dilation> {
    let omega = purification_vector(p, v);
    let nu = &omega * omega.adjoint();
    let env = Algebra::matrix(n);
    let nu_element = Element::new(env.tensor(&env), vec![nu])?;
    let joint_element = apply_left_tensor(psi.as_map(), &env, &nu_element)?;
    let joint = State::from_element_hermitized(joint_element, tol)?;
    Dilation::new(state.clone(), env, joint, tol)
}

/// Canonical purification of a state through the block-diagonal embedding:
/// the environment is the full matrix algebra of dimension `Tr[1]`, and the
/// joint state is `(psi ⊗ id)` applied to the rank-one purification of the
/// embedded state.
pub fn canonical_purification(state: &State, tol: Tolerance) -> Result<Dilation> {
    let (_, psi, n, p, v) = embedded_spectrum(state, tol)?;
    purification_from_spectrum(state, &psi, n, &p, &v, tol)
}

/// Push the canonical environment through a channel: `(id ⊗ G) ∘ π` is again
/// a dilation of the same state.
pub fn derived_dilation(state: &State, g: &Channel, tol: Tolerance) -> Result<Dilation> {
    let pi = canonical_purification(state, tol)?;
    if g.domain() != pi.environment() {
        return Err(Error::DimensionMismatch(format!(
            "channel domain {:?} is not the canonical environment {:?}",
            g.domain().block_dims(),
            pi.environment().block_dims()
        )));
    }
    let joint_element = apply_right_tensor(state.algebra(), g.as_map(), pi.joint().element())?;
    let joint = State::from_element_hermitized(joint_element, tol)?;
    Dilation::new(state.clone(), g.codomain().clone(), joint, tol)
}

/// Decide dilational equality of two maps at a state via the support
/// criterion: `E ~_α F` iff `E ∘ Ad_{P_α} = F ∘ Ad_{P_α}`.
pub fn dilationally_equal(e: &BlockMap, f: &BlockMap, state: &State, tol: Tolerance) -> Result<bool> {
    if e.domain() != state.algebra() || f.domain() != state.algebra() || e.codomain() != f.codomain() {
        return Err(Error::DimensionMismatch(
            "maps must share the state's algebra as domain and a common codomain".into(),
        ));
    }
    let compress = ad_element(&support_projection_state(state, tol));
    let lhs = e.compose(&compress)?;
    let rhs = f.compose(&compress)?;
    Ok(lhs.residual(&rhs) <= tol.abs_eps)
}

/// Decide dilational equality empirically by sampling dilations: checks
/// `(E ⊗ id) ∘ D = (F ⊗ id) ∘ D` on the canonical purification and on
/// derived dilations with random environments of dimension 1, 2, and the
/// canonical size. Used to cross-validate the support criterion.
pub fn dilationally_equal_empirical(
    e: &BlockMap,
    f: &BlockMap,
    state: &State,
    trials: usize,
    seed: u64,
    tol: Tolerance,
) -> Result<bool> {
    if e.domain() != state.algebra() || f.domain() != state.algebra() || e.codomain() != f.codomain() {
        return Err(Error::DimensionMismatch(
            "maps must share the state's algebra as domain and a common codomain".into(),
        ));
    }
    let pi = canonical_purification(state, tol)?;
    let n = pi.environment().total_dim();

    let agree_on = |dilation: &Dilation| -> Result<bool> {
        let lhs = apply_left_tensor(e, dilation.environment(), dilation.joint().element())?;
        let rhs = apply_left_tensor(f, dilation.environment(), dilation.joint().element())?;
        Ok(linalg_residual(&lhs, &rhs) <= tol.abs_eps)
    };

    // the canonical purification is the universal witness
    if !agree_on(&pi)? {
        return Ok(false);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schedule = [1, 2, n];
    for t in 0..trials {
        let env_dim = schedule[t % schedule.len()];
        let stinespring = n.div_ceil(env_dim) + rng.gen_range(0..2);
        let g = random_channel(
            pi.environment(),
            &Algebra::matrix(env_dim),
            stinespring,
            rng.gen(),
        )?;
        let dilation = derived_dilation(state, &g, tol)?;
        if !agree_on(&dilation)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `eps ≪ beta`: support dominance of the projections,
/// `P_beta P_eps P_beta = P_eps`.
pub fn absolutely_continuous(eps: &State, beta: &State, tol: Tolerance) -> Result<bool> {
    if eps.algebra() != beta.algebra() {
        return Err(Error::DimensionMismatch(
            "absolute continuity needs states on the same algebra".into(),
        ));
    }
    let p_eps = support_projection_state(eps, tol);
    let p_beta = support_projection_state(beta, tol);
    let sandwich = p_beta.mul(&p_eps)?.mul(&p_beta)?;
    Ok(sandwich.fro_close(&p_eps, tol))
}

/// Factor an arbitrary dilation through the canonical purification: returns
/// a channel `G` from the canonical environment to the dilation's
/// environment with `(id ⊗ G) ∘ π = π'`.
///
/// The isometry matching the two purifications is determined on the support
/// of the embedded state by aligning Schmidt vectors, and extended off the
/// support by a deterministic orthonormal completion against the standard
/// basis.
pub fn factor_dilation(dilation: &Dilation, tol: Tolerance) -> Result<Channel> {
    let state = dilation.base_state();
    let env = dilation.environment();

    // re-verify the marginal so corrupted inputs fail loudly
    let marginal = marginal_first(dilation.joint().element(), state.algebra(), env)?;
    let residual = linalg_residual(&marginal, state.element());
    if residual > tol.abs_eps {
        return Err(Error::NotADilation { residual });
    }

    let (phi, _, n, p, v) = embedded_spectrum(state, tol)?;
    let (eta, zeta, n_env) = block_embedding(env);

    // embed both sides of the joint state into a single matrix algebra
    let lifted = apply_left_tensor(phi.as_map(), env, dilation.joint().element())?;
    let rho = apply_right_tensor(&Algebra::matrix(n), eta.as_map(), &lifted)?;
    let big_n = n * n_env;
    let rho_block = {
        // M_n ⊗ M_{n_env} has a single block of dimension n·n_env
        debug_assert_eq!(rho.algebra().block_dims(), &[big_n]);
        rho.block(0).clone()
    };

    // purify the embedded joint state
    let (mut q, u) = linalg::herm_eig(&rho_block, tol)?;
    clamp_spectrum(&mut q, tol);
    let omega_prime = purification_vector(&q, &u);

    // Schmidt vectors of the purification against the eigenbasis of phi(α):
    // w_i = (<i| ⊗ id) |Ω'> / sqrt(p_i) on the support
    let tail_dim = n_env * big_n;
    let p_max = p.iter().fold(0.0_f64, |a, &x| a.max(x));
    let cut = tol.eig_cut(p_max);
    let mut w = CMat::zeros(tail_dim, n);
    let mut on_support = vec![false; n];
    for (i, &pi_val) in p.iter().enumerate() {
        if pi_val <= cut {
            continue;
        }
        on_support[i] = true;
        let root = pi_val.sqrt();
        for tail in 0..tail_dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for h in 0..n {
                acc += v[(h, i)].conj() * omega_prime[(h * tail_dim + tail, 0)];
            }
            w[(tail, i)] = acc / Complex64::new(root, 0.0);
        }
    }

    // deterministic completion off the support: Gram–Schmidt the standard
    // basis against the existing columns
    let mut basis_cursor = 0usize;
    for i in 0..n {
        if on_support[i] {
            continue;
        }
        loop {
            if basis_cursor >= tail_dim {
                return Err(Error::InvalidInput(
                    "could not complete isometry to an orthonormal set".into(),
                ));
            }
            let mut candidate = CMat::zeros(tail_dim, 1);
            candidate[(basis_cursor, 0)] = Complex64::new(1.0, 0.0);
            basis_cursor += 1;
            // project against every column; unset columns are zero and
            // contribute nothing
            for k in 0..n {
                let overlap: Complex64 = w
                    .column(k)
                    .iter()
                    .zip(candidate.column(0).iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                for r in 0..tail_dim {
                    let delta = w[(r, k)] * overlap;
                    candidate[(r, 0)] -= delta;
                }
            }
            let norm = candidate.norm();
            if norm > 1e-6 {
                for r in 0..tail_dim {
                    w[(r, i)] = candidate[(r, 0)] / Complex64::new(norm, 0.0);
                }
                break;
            }
        }
    }

    if std::env::var("RETRO_DEBUG_FACTOR").is_ok() {
        let gram = w.adjoint() * &w;
        eprintln!("p = {p:?}");
        eprintln!("q = {q:?}");
        eprintln!("on_support = {on_support:?}");
        eprintln!("gram diag = {:?}", (0..n).map(|i| gram[(i, i)].re).collect::<Vec<_>>());
        eprintln!("gram offdiag norm = {:.3e}", (&gram - CMat::identity(n, n)).norm());
        // first marginal of the purification vector vs the embedded state
        let mut m_mat = CMat::zeros(n, n);
        for h in 0..n {
            for hp in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for t in 0..tail_dim {
                    acc += omega_prime[(h * tail_dim + t, 0)] * omega_prime[(hp * tail_dim + t, 0)].conj();
                }
                m_mat[(h, hp)] = acc;
            }
        }
        let embedded = phi.apply(state.element()).unwrap();
        eprintln!("marginal-of-omega vs phi(alpha): {:.3e}", (&m_mat - embedded.block(0)).norm());
        // second-factor marginal of rho vs trace over K
        let mut tr_k = CMat::zeros(n, n);
        for h in 0..n {
            for hp in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..n_env {
                    acc += rho_block[(h * n_env + k, hp * n_env + k)];
                }
                tr_k[(h, hp)] = acc;
            }
        }
        eprintln!("Tr_K(rho) vs phi(alpha): {:.3e}", (&tr_k - embedded.block(0)).norm());
        eprintln!("rho trace = {:?}", rho_block.trace());
        let (_qv, uv) = linalg::herm_eig(&rho_block, tol)?;
        eprintln!("eigvec gram defect: {:.3e}", (uv.adjoint() * &uv - CMat::identity(big_n, big_n)).norm());
        eprintln!("rho_block = {rho_block:?}");
        let raw = rho_block.clone().symmetric_eigen();
        eprintln!("raw nalgebra eigenvalues: {:?}", raw.eigenvalues.as_slice());
        let rec_raw = &raw.eigenvectors
            * CMat::from_fn(big_n, big_n, |r, c| if r == c { Complex64::new(raw.eigenvalues[r], 0.0) } else { Complex64::new(0.0, 0.0) })
            * raw.eigenvectors.adjoint();
        eprintln!("raw reconstruction defect: {:.3e}", (&rec_raw - &rho_block).norm());
        let rebuilt = {
            let mut out = CMat::zeros(big_n, big_n);
            for (i, &val) in q.iter().enumerate() {
                let col = u.column(i);
                for r in 0..big_n {
                    for c in 0..big_n {
                        out[(r, c)] += Complex64::new(val, 0.0) * col[r] * col[c].conj();
                    }
                }
            }
            out
        };
        eprintln!("rho reconstruction defect: {:.3e}", (&rebuilt - &rho_block).norm());
    }

    // columns of w are images of the eigenvectors; the isometry itself
    // sends |i> to w_i, so it is w composed with the basis change
    let w = &w * v.adjoint();

    // G = (zeta ⊗ Tr) ∘ Ad_W, evaluated directly on matrix units
    let env_matrix = Algebra::matrix(n_env);
    let g_map = BlockMap::from_action(Algebra::matrix(n), env.clone(), |el| {
        let conjugated = &w * el.block(0) * w.adjoint();
        let reduced = CMat::from_fn(n_env, n_env, |a, b| {
            (0..big_n)
                .map(|s| conjugated[(a * big_n + s, b * big_n + s)])
                .sum()
        });
        zeta.apply(&Element::new(env_matrix.clone(), vec![reduced])?)
    })?;
    Channel::new(g_map, tol)
}
