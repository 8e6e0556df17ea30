//! Finite-dimensional C*-algebras as direct sums of matrix blocks,
//! their elements and states, traces, uniform states, support projections,
//! and the embedding of finite stochastic maps.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::finstoch::ProbVector;
use crate::linalg::{self, CMat, Tolerance};

/// A direct sum of full matrix algebras, identified by its ordered list of
/// block dimensions. Algebras are structural values: equal iff the block
/// dimension lists are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Algebra {
    block_dims: Vec<usize>,
}

impl Algebra {
    pub fn new(block_dims: Vec<usize>) -> Result<Self> {
        if block_dims.is_empty() {
            return Err(Error::InvalidInput("algebra needs at least one block".into()));
        }
        if block_dims.iter().any(|&m| m == 0) {
            return Err(Error::InvalidInput("block dimensions must be positive".into()));
        }
        Ok(Algebra { block_dims })
    }

    /// The full matrix algebra on an `n`-dimensional space.
    pub fn matrix(n: usize) -> Self {
        Algebra { block_dims: vec![n] }
    }

    /// The commutative algebra of functions on an `n`-point set.
    pub fn classical(n: usize) -> Result<Self> {
        Algebra::new(vec![1; n])
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn n_blocks(&self) -> usize {
        self.block_dims.len()
    }

    /// `Tr[1] = Σ m_x`, also the dimension of the block-diagonal embedding space.
    pub fn total_dim(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn is_commutative(&self) -> bool {
        self.block_dims.iter().all(|&m| m == 1)
    }

    /// Tensor product: blocks indexed by pairs in row-major order, with
    /// dimensions multiplied.
    pub fn tensor(&self, other: &Algebra) -> Algebra {
        let mut block_dims = Vec::with_capacity(self.n_blocks() * other.n_blocks());
        for &m in &self.block_dims {
            for &mp in &other.block_dims {
                block_dims.push(m * mp);
            }
        }
        Algebra { block_dims }
    }

    /// The unit element `1`.
    pub fn unit(&self) -> Element {
        Element {
            algebra: self.clone(),
            blocks: self.block_dims.iter().map(|&m| CMat::identity(m, m)).collect(),
        }
    }

    pub fn zero(&self) -> Element {
        Element {
            algebra: self.clone(),
            blocks: self.block_dims.iter().map(|&m| CMat::zeros(m, m)).collect(),
        }
    }
}

/// An element of a direct-sum algebra: one square matrix per block.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    algebra: Algebra,
    blocks: Vec<CMat>,
}

impl Element {
    pub fn new(algebra: Algebra, blocks: Vec<CMat>) -> Result<Self> {
        if blocks.len() != algebra.n_blocks() {
            return Err(Error::InvalidElement(format!(
                "expected {} blocks, got {}",
                algebra.n_blocks(),
                blocks.len()
            )));
        }
        for (k, (b, &m)) in blocks.iter().zip(algebra.block_dims()).enumerate() {
            if b.nrows() != m || b.ncols() != m {
                return Err(Error::InvalidElement(format!(
                    "block {k} has shape {}x{}, expected {m}x{m}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        Ok(Element { algebra, blocks })
    }

    pub fn algebra(&self) -> &Algebra {
        &self.algebra
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &CMat {
        &self.blocks[k]
    }

    /// Sum of block traces.
    pub fn trace(&self) -> Complex64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    pub fn adjoint(&self) -> Element {
        Element {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|b| b.adjoint()).collect(),
        }
    }

    /// Blockwise product.
    pub fn mul(&self, other: &Element) -> Result<Element> {
        if self.algebra != other.algebra {
            return Err(Error::DimensionMismatch("element product across different algebras".into()));
        }
        Ok(Element {
            algebra: self.algebra.clone(),
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Element) -> Result<Element> {
        if self.algebra != other.algebra {
            return Err(Error::DimensionMismatch("element difference across different algebras".into()));
        }
        Ok(Element {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn scale(&self, s: Complex64) -> Element {
        Element {
            algebra: self.algebra.clone(),
            blocks: self.blocks.iter().map(|b| b * s).collect(),
        }
    }

    /// Frobenius norm over all blocks.
    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn fro_close(&self, other: &Element, tol: Tolerance) -> bool {
        self.algebra == other.algebra
            && self
                .sub(other)
                .map(|d| d.norm() <= tol.abs_eps.max(tol.abs_eps * self.norm().max(other.norm())))
                .unwrap_or(false)
    }

    /// Kronecker product of elements, blockwise over row-major pair indices.
    pub fn tensor(&self, other: &Element) -> Element {
        let algebra = self.algebra.tensor(&other.algebra);
        let mut blocks = Vec::with_capacity(algebra.n_blocks());
        for a in &self.blocks {
            for b in &other.blocks {
                blocks.push(a.kronecker(b));
            }
        }
        Element { algebra, blocks }
    }
}

/// A state: a blockwise Hermitian PSD element of total trace 1.
///
/// Validated at construction and trusted afterwards.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    element: Element,
}

impl State {
    pub fn new(element: Element, tol: Tolerance) -> Result<Self> {
        for (k, b) in element.blocks().iter().enumerate() {
            let defect = (b - b.adjoint()).norm();
            if defect > tol.abs_eps * 1.0_f64.max(b.norm()) {
                return Err(Error::NotAState(format!("block {k} is not Hermitian (defect {defect:.3e})")));
            }
            // PSD up to the clamp band
            if let Err(e) = linalg::support_projection(b, tol) {
                return Err(Error::NotAState(format!("block {k}: {e}")));
            }
        }
        let tr = element.trace();
        if (tr.re - 1.0).abs() > tol.abs_eps || tr.im.abs() > tol.abs_eps {
            return Err(Error::NotAState(format!("total trace is {}+{}i, expected 1", tr.re, tr.im)));
        }
        Ok(State { element })
    }

    /// Construct after symmetrizing each block; used for states produced by
    /// long chains of floating-point arithmetic.
    pub fn from_element_hermitized(element: Element, tol: Tolerance) -> Result<Self> {
        let blocks = element.blocks().iter().map(linalg::hermitize).collect();
        State::new(Element::new(element.algebra().clone(), blocks)?, tol)
    }

    pub fn element(&self) -> &Element {
        &self.element
    }

    pub fn algebra(&self) -> &Algebra {
        self.element.algebra()
    }

    pub fn tensor(&self, other: &State) -> State {
        State {
            element: self.element.tensor(&other.element),
        }
    }
}

/// The uniform (maximally mixed) state `1 / Tr[1]`.
pub fn uniform_state(algebra: &Algebra) -> State {
    let scale = Complex64::new(1.0 / algebra.total_dim() as f64, 0.0);
    State {
        element: algebra.unit().scale(scale),
    }
}

/// Blockwise support projection of a state: the minimal orthogonal
/// projection `P` with `P·α = α = α·P`.
pub fn support_projection_state(state: &State, tol: Tolerance) -> Element {
    let blocks = state
        .element()
        .blocks()
        .iter()
        .map(|b| linalg::support_projection(b, tol).expect("state blocks are PSD by construction"))
        .collect();
    Element::new(state.algebra().clone(), blocks).expect("shapes preserved")
}

/// A state is faithful iff its support projection is the unit.
pub fn is_faithful(state: &State, tol: Tolerance) -> bool {
    let p = support_projection_state(state, tol);
    p.fro_close(&state.algebra().unit(), tol)
}

/// The algebra of functions on a finite set: `n` blocks of dimension 1.
pub fn embed_classical(n: usize) -> Result<Algebra> {
    Algebra::classical(n)
}

/// A probability distribution as a state on the classical algebra.
pub fn embed_prob(p: &ProbVector) -> State {
    let algebra = Algebra::classical(p.len()).expect("nonempty by ProbVector invariant");
    let blocks = p
        .values()
        .iter()
        .map(|&v| CMat::from_element(1, 1, Complex64::new(v, 0.0)))
        .collect();
    State {
        element: Element::new(algebra, blocks).expect("shapes match"),
    }
}

/// Extract the distribution from a state on a commutative algebra.
pub fn extract_prob(state: &State) -> Result<ProbVector> {
    if !state.algebra().is_commutative() {
        return Err(Error::InvalidInput("state is not on a commutative algebra".into()));
    }
    ProbVector::new(state.element().blocks().iter().map(|b| b[(0, 0)].re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::random_state;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trace_of_unit_and_states() {
        let a = Algebra::new(vec![2, 3]).unwrap();
        assert_eq!(a.unit().trace(), Complex64::new(5.0, 0.0));
        let tol = Tolerance::default();
        let u = uniform_state(&a);
        assert!((u.element().trace().re - 1.0).abs() < 1e-12);
        let _ = tol;
    }

    #[test]
    fn trace_of_diagonal_blocks() {
        let a = Algebra::new(vec![2, 1]).unwrap();
        let blocks = vec![
            CMat::from_row_slice(2, 2, &[
                Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0),
            ]),
            CMat::from_element(1, 1, Complex64::new(3.0, 0.0)),
        ];
        let e = Element::new(a, blocks).unwrap();
        assert_eq!(e.trace(), Complex64::new(6.0, 0.0));
    }

    #[test]
    fn uniform_states() {
        let m2 = uniform_state(&Algebra::matrix(2));
        assert!((m2.element().block(0) - CMat::identity(2, 2) * Complex64::new(0.5, 0.0)).norm() < 1e-15);
        let c2 = uniform_state(&Algebra::classical(2).unwrap());
        assert!((c2.element().block(0)[(0, 0)].re - 0.5).abs() < 1e-15);
        let mixed = uniform_state(&Algebra::new(vec![2, 1]).unwrap());
        assert!((mixed.element().block(0)[(0, 0)].re - 1.0 / 3.0).abs() < 1e-15);
        assert!((mixed.element().block(1)[(0, 0)].re - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn support_projection_examples() {
        let tol = Tolerance::default();
        let a = Algebra::new(vec![2, 1]).unwrap();
        let u = uniform_state(&a);
        assert!(support_projection_state(&u, tol).fro_close(&a.unit(), tol));
        assert!(is_faithful(&u, tol));

        // half weight on |0><0| in the M_2 block, half on the scalar block
        let blocks = vec![
            CMat::from_row_slice(2, 2, &[
                Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0),
            ]),
            CMat::from_element(1, 1, Complex64::new(0.5, 0.0)),
        ];
        let s = State::new(Element::new(a.clone(), blocks).unwrap(), tol).unwrap();
        let p = support_projection_state(&s, tol);
        assert!((p.block(0)[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(p.block(0)[(1, 1)].norm() < 1e-12);
        assert!((p.block(1)[(0, 0)].re - 1.0).abs() < 1e-12);
        assert!(!is_faithful(&s, tol));
        // P·α = α = α·P
        assert!(p.mul(s.element()).unwrap().fro_close(s.element(), tol));
        assert!(s.element().mul(&p).unwrap().fro_close(s.element(), tol));

        // zero-weight block yields the zero projector there
        let blocks = vec![
            CMat::identity(2, 2) * Complex64::new(0.5, 0.0),
            CMat::zeros(1, 1),
        ];
        let s = State::new(Element::new(a, blocks).unwrap(), tol).unwrap();
        let p = support_projection_state(&s, tol);
        assert_eq!(p.block(1).norm(), 0.0);
        assert!(!is_faithful(&s, tol));
    }

    #[test]
    fn tensor_algebra_shapes() {
        let cx = Algebra::classical(2).unwrap();
        let cy = Algebra::classical(3).unwrap();
        assert_eq!(cx.tensor(&cy).block_dims(), &[1; 6]);
        let m2 = Algebra::matrix(2);
        assert_eq!(m2.tensor(&m2).block_dims(), &[4]);
    }

    #[test]
    fn tensor_of_uniform_states_is_uniform() {
        let tol = Tolerance::default();
        let a = Algebra::new(vec![2, 1]).unwrap();
        let b = Algebra::matrix(2);
        let lhs = uniform_state(&a).tensor(&uniform_state(&b));
        let rhs = uniform_state(&a.tensor(&b));
        assert!(lhs.element().fro_close(rhs.element(), tol));
    }

    #[test]
    fn trace_is_multiplicative_and_supports_tensor() {
        let tol = Tolerance::default();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_state(&mut rng, &Algebra::new(vec![2, 1]).unwrap(), true, tol);
            let b = random_state(&mut rng, &Algebra::matrix(2), false, tol);
            let t = a.element().tensor(b.element());
            let lhs = t.trace();
            let rhs = a.element().trace() * b.element().trace();
            assert!((lhs - rhs).norm() < 1e-10);
            // P_{a⊗b} = P_a ⊗ P_b
            let p_t = support_projection_state(&a.tensor(&b), tol);
            let p_split = support_projection_state(&a, tol).tensor(&support_projection_state(&b, tol));
            assert!(p_t.fro_close(&p_split, tol));
        }
    }

    #[test]
    fn embed_prob_matches() {
        let p = ProbVector::new(vec![0.75, 0.25]).unwrap();
        let s = embed_prob(&p);
        assert!((s.element().block(0)[(0, 0)].re - 0.75).abs() < 1e-15);
        assert!((s.element().block(1)[(0, 0)].re - 0.25).abs() < 1e-15);
        let back = extract_prob(&s).unwrap();
        assert!(back.max_abs_diff(&p) < 1e-15);
    }

    #[test]
    fn state_validation_rejects_bad_inputs() {
        let tol = Tolerance::default();
        let a = Algebra::matrix(2);
        // non-unit trace
        let e = a.unit();
        assert!(State::new(e, tol).is_err());
        // negative eigenvalue
        let blocks = vec![CMat::from_row_slice(2, 2, &[
            Complex64::new(1.5, 0.0), Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0), Complex64::new(-0.5, 0.0),
        ])];
        assert!(State::new(Element::new(a.clone(), blocks).unwrap(), tol).is_err());
        // non-Hermitian
        let blocks = vec![CMat::from_row_slice(2, 2, &[
            Complex64::new(0.5, 0.0), Complex64::new(0.3, 0.0),
            Complex64::new(0.0, 0.0), Complex64::new(0.5, 0.0),
        ])];
        assert!(State::new(Element::new(a, blocks).unwrap(), tol).is_err());
    }
}
