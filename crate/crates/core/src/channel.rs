//! Seeded random MIMO channel realizations.

use std::collections::BTreeMap;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{DirectedEdge, EisensteinPoint, InterferenceGraph};
use crate::linalg::{complex_gaussian, from_pairs, sigma_min, to_pairs, CMat};

/// Draws below this smallest singular value are rejected and redrawn.
pub const MIN_SINGULAR_VALUE: f64 = 1e-12;

const MAX_REDRAWS: usize = 64;

/// Source of raw channel matrices.
pub trait ChannelSampler {
    fn sample(&mut self, rows: usize, cols: usize) -> CMat;
}

/// Unit-variance circularly-symmetric complex Gaussian entries.
pub struct GaussianSampler {
    rng: ChaCha8Rng,
}

impl GaussianSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl ChannelSampler for GaussianSampler {
    fn sample(&mut self, rows: usize, cols: usize) -> CMat {
        complex_gaussian(&mut self.rng, rows, cols)
    }
}

/// Which cross links receive a matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coverage {
    /// Only the interference edges left after decode-and-cancel.
    Directed,
    /// Both directions of every undirected edge. The directed entries are
    /// drawn first, so they coincide with the [`Coverage::Directed`] set.
    BothDirections,
}

/// Direct and cross channel matrices, each `N × M`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSet {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub direct: BTreeMap<EisensteinPoint, CMat>,
    pub cross: BTreeMap<DirectedEdge, CMat>,
    /// Number of draws rejected as numerically rank deficient.
    pub redraws: usize,
}

impl ChannelSet {
    pub fn direct(&self, cell: EisensteinPoint) -> Option<&CMat> {
        self.direct.get(&cell)
    }

    /// Channel from transmitter `tx` to receiver `rx`.
    pub fn cross(&self, tx: EisensteinPoint, rx: EisensteinPoint) -> Option<&CMat> {
        self.cross.get(&DirectedEdge::new(tx, rx))
    }

    pub fn cross_or_err(&self, tx: EisensteinPoint, rx: EisensteinPoint) -> Result<&CMat> {
        self.cross(tx, rx)
            .ok_or(Error::MissingChannel(DirectedEdge::new(tx, rx)))
    }

    /// Channel from `tx` to `rx`, direct when they coincide.
    pub fn link(&self, tx: EisensteinPoint, rx: EisensteinPoint) -> Result<&CMat> {
        if tx == rx {
            self.direct(tx).ok_or(Error::MissingChannel(DirectedEdge::new(tx, rx)))
        } else {
            self.cross_or_err(tx, rx)
        }
    }
}

/// Channels on every direct link and every directed interference edge.
pub fn generate(graph: &InterferenceGraph, m: usize, n: usize, seed: u64) -> ChannelSet {
    generate_with(graph, m, n, seed, Coverage::Directed, &mut GaussianSampler::new(seed))
}

pub fn generate_with<S: ChannelSampler + ?Sized>(
    graph: &InterferenceGraph,
    m: usize,
    n: usize,
    seed: u64,
    coverage: Coverage,
    sampler: &mut S,
) -> ChannelSet {
    assert!(m >= 1 && n >= 1, "antenna counts must be positive");
    let mut redraws = 0;
    let mut draw = |label: &dyn Fn() -> String| -> CMat {
        for _ in 0..MAX_REDRAWS {
            let h = sampler.sample(n, m);
            if sigma_min(&h) > MIN_SINGULAR_VALUE {
                return h;
            }
            redraws += 1;
            warn!("rank-deficient channel draw on {}, redrawing", label());
        }
        panic!("channel sampler kept producing rank-deficient matrices for {}", label());
    };

    let direct = graph
        .vertices()
        .iter()
        .map(|&v| (v, draw(&|| format!("direct link {v}"))))
        .collect();
    let mut cross: BTreeMap<_, _> = graph
        .directed_edges()
        .iter()
        .map(|&e| (e, draw(&|| format!("edge {e}"))))
        .collect();
    if coverage == Coverage::BothDirections {
        for &e in graph.directed_edges() {
            let rev = DirectedEdge::new(e.rx, e.tx);
            cross.insert(rev, draw(&|| format!("edge {rev}")));
        }
    }
    ChannelSet {
        m,
        n,
        seed,
        direct,
        cross,
        redraws,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixDump {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `[re, im]` pairs.
    pub data: Vec<[f64; 2]>,
}

impl MatrixDump {
    pub fn new(m: &CMat) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: to_pairs(m),
        }
    }

    pub fn to_matrix(&self) -> Result<CMat> {
        from_pairs(self.rows, self.cols, &self.data)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DirectDump {
    pub cell: EisensteinPoint,
    pub h: MatrixDump,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossDump {
    pub tx: EisensteinPoint,
    pub rx: EisensteinPoint,
    pub h: MatrixDump,
}

/// JSON replay format for a [`ChannelSet`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChannelDump {
    pub m: usize,
    pub n: usize,
    pub seed: u64,
    pub direct: Vec<DirectDump>,
    pub cross: Vec<CrossDump>,
}

impl From<&ChannelSet> for ChannelDump {
    fn from(c: &ChannelSet) -> Self {
        Self {
            m: c.m,
            n: c.n,
            seed: c.seed,
            direct: c
                .direct
                .iter()
                .map(|(&cell, h)| DirectDump {
                    cell,
                    h: MatrixDump::new(h),
                })
                .collect(),
            cross: c
                .cross
                .iter()
                .map(|(e, h)| CrossDump {
                    tx: e.tx,
                    rx: e.rx,
                    h: MatrixDump::new(h),
                })
                .collect(),
        }
    }
}

impl ChannelDump {
    pub fn into_channel_set(self) -> Result<ChannelSet> {
        let check = |h: &MatrixDump| -> Result<CMat> {
            if (h.rows, h.cols) != (self.n, self.m) {
                return Err(Error::Dump(format!(
                    "matrix is {}x{}, expected {}x{}",
                    h.rows, h.cols, self.n, self.m
                )));
            }
            h.to_matrix()
        };
        let direct = self
            .direct
            .iter()
            .map(|d| Ok((d.cell, check(&d.h)?)))
            .collect::<Result<_>>()?;
        let cross = self
            .cross
            .iter()
            .map(|c| Ok((DirectedEdge::new(c.tx, c.rx), check(&c.h)?)))
            .collect::<Result<_>>()?;
        Ok(ChannelSet {
            m: self.m,
            n: self.n,
            seed: self.seed,
            direct,
            cross,
            redraws: 0,
        })
    }
}
