//! JSON schemas for every object the command-line front end exchanges:
//! probability vectors, stochastic matrices, algebras, elements, states,
//! and channels. Complex numbers are serialized as `[re, im]` pairs and
//! block-pair keys as `"y,x"` strings.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Element, State};
use crate::channel::{BlockMap, Channel};
use crate::error::{Error, Result};
use crate::finstoch::{ProbVector, StochasticMatrix};
use crate::linalg::{CMat, Tolerance};

pub type JsonComplex = [f64; 2];
/// A matrix as rows of `[re, im]` entries.
pub type JsonMatrix = Vec<Vec<JsonComplex>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProbDoc {
    pub prob: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StochDoc {
    pub stoch: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraBody {
    pub blocks: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraDoc {
    pub algebra: AlgebraBody,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementBody {
    pub algebra: AlgebraBody,
    pub blocks: Vec<JsonMatrix>,
}

/// An element document; `"state": true` triggers state validation on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ElementDoc {
    pub element: ElementBody,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelBody {
    pub domain: AlgebraBody,
    pub codomain: AlgebraBody,
    /// Transfer matrices keyed by `"y,x"`; absent pairs are zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer: Option<BTreeMap<String, JsonMatrix>>,
    /// Alternative input form: Kraus operators per block pair, converted to
    /// transfer matrices on load.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<BTreeMap<String, Vec<JsonMatrix>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelDoc {
    pub channel: ChannelBody,
}

pub fn matrix_to_json(m: &CMat) -> JsonMatrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub fn matrix_from_json(rows: &JsonMatrix, expect_rows: usize, expect_cols: usize) -> Result<CMat> {
    if rows.len() != expect_rows || rows.iter().any(|r| r.len() != expect_cols) {
        return Err(Error::InvalidInput(format!(
            "matrix must be {expect_rows}x{expect_cols}"
        )));
    }
    Ok(CMat::from_fn(expect_rows, expect_cols, |r, c| {
        Complex64::new(rows[r][c][0], rows[r][c][1])
    }))
}

pub fn algebra_to_body(a: &Algebra) -> AlgebraBody {
    AlgebraBody {
        blocks: a.block_dims().to_vec(),
    }
}

pub fn algebra_from_body(body: &AlgebraBody) -> Result<Algebra> {
    Algebra::new(body.blocks.clone())
}

pub fn element_to_doc(e: &Element) -> ElementDoc {
    ElementDoc {
        element: ElementBody {
            algebra: algebra_to_body(e.algebra()),
            blocks: e.blocks().iter().map(matrix_to_json).collect(),
        },
        state: None,
    }
}

pub fn state_to_doc(s: &State) -> ElementDoc {
    let mut doc = element_to_doc(s.element());
    doc.state = Some(true);
    doc
}

pub fn element_from_doc(doc: &ElementDoc) -> Result<Element> {
    let algebra = algebra_from_body(&doc.element.algebra)?;
    if doc.element.blocks.len() != algebra.n_blocks() {
        return Err(Error::InvalidInput(format!(
            "element has {} blocks, algebra has {}",
            doc.element.blocks.len(),
            algebra.n_blocks()
        )));
    }
    let blocks = doc
        .element
        .blocks
        .iter()
        .zip(algebra.block_dims())
        .map(|(rows, &m)| matrix_from_json(rows, m, m))
        .collect::<Result<Vec<_>>>()?;
    Element::new(algebra, blocks)
}

pub fn state_from_doc(doc: &ElementDoc, tol: Tolerance) -> Result<State> {
    State::new(element_from_doc(doc)?, tol)
}

pub fn prob_to_doc(p: &ProbVector) -> ProbDoc {
    ProbDoc {
        prob: p.values().to_vec(),
    }
}

pub fn prob_from_doc(doc: &ProbDoc) -> Result<ProbVector> {
    ProbVector::new(doc.prob.clone())
}

pub fn stoch_to_doc(f: &StochasticMatrix) -> StochDoc {
    StochDoc { stoch: f.rows() }
}

pub fn stoch_from_doc(doc: &StochDoc) -> Result<StochasticMatrix> {
    StochasticMatrix::from_rows(doc.stoch.clone())
}

fn pair_key(y: usize, x: usize) -> String {
    format!("{y},{x}")
}

fn parse_pair_key(key: &str) -> Result<(usize, usize)> {
    let mut parts = key.split(',');
    let y = parts
        .next()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .ok_or_else(|| Error::InvalidInput(format!("bad block-pair key {key:?}")))?;
    let x = parts
        .next()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .ok_or_else(|| Error::InvalidInput(format!("bad block-pair key {key:?}")))?;
    if parts.next().is_some() {
        return Err(Error::InvalidInput(format!("bad block-pair key {key:?}")));
    }
    Ok((y, x))
}

/// Serialize any block map in the channel schema. Zero transfer blocks are
/// omitted to keep documents small and diffable.
pub fn map_to_channel_doc(map: &BlockMap) -> ChannelDoc {
    let mut transfer = BTreeMap::new();
    for y in 0..map.codomain().n_blocks() {
        for x in 0..map.domain().n_blocks() {
            let t = map.transfer(y, x);
            if t.norm() > 0.0 {
                transfer.insert(pair_key(y, x), matrix_to_json(t));
            }
        }
    }
    ChannelDoc {
        channel: ChannelBody {
            domain: algebra_to_body(map.domain()),
            codomain: algebra_to_body(map.codomain()),
            transfer: Some(transfer),
            kraus: None,
        },
    }
}

pub fn channel_to_doc(channel: &Channel) -> ChannelDoc {
    map_to_channel_doc(channel.as_map())
}

pub fn map_from_channel_doc(doc: &ChannelDoc) -> Result<BlockMap> {
    let domain = algebra_from_body(&doc.channel.domain)?;
    let codomain = algebra_from_body(&doc.channel.codomain)?;
    let mut map = BlockMap::zeros(&domain, &codomain);
    match (&doc.channel.transfer, &doc.channel.kraus) {
        (Some(transfer), None) => {
            for (key, rows) in transfer {
                let (y, x) = parse_pair_key(key)?;
                if y >= codomain.n_blocks() || x >= domain.n_blocks() {
                    return Err(Error::InvalidInput(format!("block pair {key:?} out of range")));
                }
                let ny = codomain.block_dims()[y];
                let mx = domain.block_dims()[x];
                *map.transfer_mut(y, x) = matrix_from_json(rows, ny * ny, mx * mx)?;
            }
        }
        (None, Some(kraus)) => {
            for (key, operators) in kraus {
                let (y, x) = parse_pair_key(key)?;
                if y >= codomain.n_blocks() || x >= domain.n_blocks() {
                    return Err(Error::InvalidInput(format!("block pair {key:?} out of range")));
                }
                let ny = codomain.block_dims()[y];
                let mx = domain.block_dims()[x];
                let mut t = CMat::zeros(ny * ny, mx * mx);
                for rows in operators {
                    let k = matrix_from_json(rows, ny, mx)?;
                    t += k.conjugate().kronecker(&k);
                }
                *map.transfer_mut(y, x) = t;
            }
        }
        (Some(_), Some(_)) => {
            return Err(Error::InvalidInput(
                "channel carries both transfer and kraus data".into(),
            ))
        }
        (None, None) => {
            return Err(Error::InvalidInput(
                "channel needs either transfer or kraus data".into(),
            ))
        }
    }
    Ok(map)
}

pub fn channel_from_doc(doc: &ChannelDoc, tol: Tolerance) -> Result<Channel> {
    Channel::new(map_from_channel_doc(doc)?, tol)
}
