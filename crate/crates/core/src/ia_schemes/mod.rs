//! One-shot linear beamforming schemes for the 2×2, 2×3 and 2×4 networks.
//!
//! Every scheme first fixes the transmit matrices and then hands them to a
//! shared receive-filter stage: each receiver projects onto the orthogonal
//! complement of the interference it cannot cancel. A cell whose complement
//! is too small for its streams is silenced and reported as demoted rather
//! than left misaligned.

mod two_by_four;
mod two_by_three;
mod two_by_two;

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

use log::warn;
use num_complex::Complex64;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSet, MatrixDump};
use crate::error::{Error, Result};
use crate::lattice::{ClusterPartition, EisensteinPoint, InterferenceGraph};
use crate::linalg::{left_null_space, range_basis, sigma_min, CMat, CVec};

pub use two_by_four::{align_two_streams, solve_2x4, StreamAlignment};
pub use two_by_three::solve_2x3;
pub use two_by_two::solve_2x2;

/// Smallest admissible singular value of an effective link `U^H H V`.
pub const MIN_DIRECT_GAIN: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SchemeTag {
    #[serde(rename = "2x2")]
    TwoByTwo,
    #[serde(rename = "2x3")]
    TwoByThree,
    #[serde(rename = "2x4")]
    TwoByFour,
}

impl SchemeTag {
    pub fn for_antennas(m: usize, n: usize) -> Result<Self> {
        match (m, n) {
            (2, 2) => Ok(Self::TwoByTwo),
            (2, 3) => Ok(Self::TwoByThree),
            (2, 4) => Ok(Self::TwoByFour),
            _ => Err(Error::AntennaConfig {
                scheme: "one-shot alignment",
                m,
                n,
            }),
        }
    }

    pub fn antennas(self) -> (usize, usize) {
        match self {
            Self::TwoByTwo => (2, 2),
            Self::TwoByThree => (2, 3),
            Self::TwoByFour => (2, 4),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::TwoByTwo => "2x2",
            Self::TwoByThree => "2x3",
            Self::TwoByFour => "2x4",
        }
    }

    pub(crate) fn check(self, channels: &ChannelSet) -> Result<()> {
        if (channels.m, channels.n) != self.antennas() {
            return Err(Error::AntennaConfig {
                scheme: self.as_str(),
                m: channels.m,
                n: channels.n,
            });
        }
        Ok(())
    }
}

impl fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Transmit and receive beamformers of one cell; both have `dof` columns.
#[derive(Clone, Debug, PartialEq)]
pub struct CellBeamformer {
    pub dof: usize,
    /// `M × dof`.
    pub tx: CMat,
    /// `N × dof`.
    pub rx: CMat,
}

impl CellBeamformer {
    pub fn silent(m: usize, n: usize) -> Self {
        Self {
            dof: 0,
            tx: CMat::zeros(m, 0),
            rx: CMat::zeros(n, 0),
        }
    }

    pub fn is_active(&self) -> bool {
        self.dof > 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamformerSolution {
    pub scheme: SchemeTag,
    pub m: usize,
    pub n: usize,
    pub r: u32,
    pub seed: u64,
    pub cells: BTreeMap<EisensteinPoint, CellBeamformer>,
    /// Cells the construction intended to serve but had to silence.
    pub demoted: Vec<EisensteinPoint>,
    pub warnings: Vec<String>,
}

impl BeamformerSolution {
    pub fn cell(&self, p: EisensteinPoint) -> Option<&CellBeamformer> {
        self.cells.get(&p)
    }

    pub fn dof(&self, p: EisensteinPoint) -> usize {
        self.cells.get(&p).map_or(0, |c| c.dof)
    }

    pub fn dof_map(&self) -> BTreeMap<EisensteinPoint, usize> {
        self.cells.iter().map(|(&p, c)| (p, c.dof)).collect()
    }

    pub fn total_dof(&self) -> usize {
        self.cells.values().map(|c| c.dof).sum()
    }

    /// `(1/|V|) Σ d_v` as an exact fraction.
    pub fn average_dof(&self) -> Ratio<i64> {
        if self.cells.is_empty() {
            return Ratio::from_integer(0);
        }
        Ratio::new(self.total_dof() as i64, self.cells.len() as i64)
    }

    pub fn dump(&self, certificate: Option<CertificateSummary>) -> SolutionDump {
        SolutionDump {
            scheme: self.scheme,
            m: self.m,
            n: self.n,
            r: self.r,
            seed: self.seed,
            average_dof: self.average_dof().to_string(),
            cells: self
                .cells
                .iter()
                .map(|(&cell, c)| CellDump {
                    cell,
                    dof: c.dof,
                    v: MatrixDump::new(&c.tx),
                    u: MatrixDump::new(&c.rx),
                })
                .collect(),
            demoted: self.demoted.clone(),
            warnings: self.warnings.clone(),
            certificate,
        }
    }
}

/// Headline numbers of an alignment certificate, embedded in solution dumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub pass: bool,
    pub tolerance: f64,
    pub max_residual: f64,
    pub min_direct_gain: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellDump {
    pub cell: EisensteinPoint,
    pub dof: usize,
    #[serde(rename = "V")]
    pub v: MatrixDump,
    #[serde(rename = "U")]
    pub u: MatrixDump,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolutionDump {
    pub scheme: SchemeTag,
    pub m: usize,
    pub n: usize,
    pub r: u32,
    pub seed: u64,
    pub average_dof: String,
    pub cells: Vec<CellDump>,
    pub demoted: Vec<EisensteinPoint>,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub certificate: Option<CertificateSummary>,
}

impl SolutionDump {
    pub fn into_solution(self) -> Result<BeamformerSolution> {
        let mut cells = BTreeMap::new();
        for c in self.cells {
            let tx = c.v.to_matrix()?;
            let rx = c.u.to_matrix()?;
            if tx.shape() != (self.m, c.dof) || rx.shape() != (self.n, c.dof) {
                return Err(Error::Dump(format!(
                    "beamformer shapes of cell {} do not match dof {}",
                    c.cell, c.dof
                )));
            }
            cells.insert(c.cell, CellBeamformer { dof: c.dof, tx, rx });
        }
        Ok(BeamformerSolution {
            scheme: self.scheme,
            m: self.m,
            n: self.n,
            r: self.r,
            seed: self.seed,
            cells,
            demoted: self.demoted,
            warnings: self.warnings,
        })
    }
}

/// Run the scheme matching the channel set's antenna configuration.
pub fn solve(
    graph: &InterferenceGraph,
    partition: &ClusterPartition,
    channels: &ChannelSet,
) -> Result<BeamformerSolution> {
    match SchemeTag::for_antennas(channels.m, channels.n)? {
        SchemeTag::TwoByTwo => solve_2x2(graph, partition, channels),
        SchemeTag::TwoByThree => solve_2x3(graph, channels),
        SchemeTag::TwoByFour => solve_2x4(graph, channels),
    }
}

/// `U_v^H H_vv V_v` for every cell (empty for silent cells).
pub fn effective_links(
    solution: &BeamformerSolution,
    channels: &ChannelSet,
) -> Result<BTreeMap<EisensteinPoint, CMat>> {
    let mut out = BTreeMap::new();
    for (&p, cell) in &solution.cells {
        if !cell.is_active() {
            out.insert(p, CMat::zeros(0, 0));
            continue;
        }
        let h = channels
            .direct(p)
            .ok_or_else(|| Error::Inconsistent(format!("no direct channel for cell {p}")))?;
        if h.shape() != (cell.rx.nrows(), cell.tx.nrows()) {
            return Err(Error::Inconsistent(format!(
                "antenna counts of cell {p} disagree with the channel set"
            )));
        }
        let eff = cell.rx.adjoint() * h * &cell.tx;
        let s = sigma_min(&eff);
        if s <= MIN_DIRECT_GAIN {
            return Err(Error::RankDeficient { cell: p, sigma_min: s });
        }
        out.insert(p, eff);
    }
    Ok(out)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Deterministic generator for the free choices made at one cell.
pub(crate) fn cell_rng(seed: u64, p: EisensteinPoint, purpose: u64) -> ChaCha8Rng {
    let h = splitmix64(seed ^ splitmix64(p.a as u64 ^ splitmix64(p.b as u64 ^ splitmix64(purpose))));
    ChaCha8Rng::seed_from_u64(h)
}

/// `[1, 0]^T` rotated by an angle derived from the seed and the cell.
pub fn seed_direction(seed: u64, p: EisensteinPoint) -> CVec {
    let theta = cell_rng(seed, p, 0).random::<f64>() * TAU;
    CVec::from_vec(vec![Complex64::new(theta.cos(), 0.0), Complex64::new(theta.sin(), 0.0)])
}

/// Unit vector `v` with `w^H v = 0` for a nonzero 2-vector `w`.
pub(crate) fn orthogonal_to(w: &CVec) -> CVec {
    let v = CVec::from_vec(vec![-w[1].conj(), w[0].conj()]);
    crate::linalg::normalize(&v)
}

pub(crate) fn as_column(v: &CVec) -> CMat {
    CMat::from_column_slice(v.len(), 1, v.as_slice())
}

/// Compute receive filters for fixed transmit matrices and assemble the
/// solution. `tx` must hold an entry for every vertex.
pub(crate) fn finalize(
    scheme: SchemeTag,
    graph: &InterferenceGraph,
    channels: &ChannelSet,
    mut tx: BTreeMap<EisensteinPoint, CMat>,
    mut warnings: Vec<String>,
) -> Result<BeamformerSolution> {
    let (m, n) = (channels.m, channels.n);
    let mut cells = BTreeMap::new();
    let mut demoted = Vec::new();

    for &v in graph.vertices() {
        let v_tx = tx.get(&v).expect("every vertex has a transmit matrix").clone();
        let d = v_tx.ncols();
        if d == 0 {
            cells.insert(v, CellBeamformer::silent(m, n));
            continue;
        }
        let mut cols: Vec<CVec> = Vec::new();
        for u in graph.interferers_of(v) {
            let vu = &tx[&u];
            if vu.ncols() == 0 {
                continue;
            }
            let h = channels.cross_or_err(u, v)?;
            cols.extend((h * vu).column_iter().map(|c| c.into_owned()));
        }
        let complement = if cols.is_empty() {
            CMat::identity(n, n)
        } else {
            left_null_space(&CMat::from_columns(&cols))
        };
        let desired = channels.link(v, v)? * &v_tx;
        let rx = if complement.ncols() < d {
            None
        } else if complement.ncols() == d {
            Some(complement)
        } else {
            let basis = range_basis(&(complement.adjoint() * &desired));
            (basis.ncols() == d).then(|| &complement * basis)
        };
        match rx.filter(|u| sigma_min(&(u.adjoint() * &desired)) > MIN_DIRECT_GAIN) {
            Some(rx) => {
                cells.insert(v, CellBeamformer { dof: d, tx: v_tx, rx });
            }
            None => {
                let msg = format!("cell {v} cannot separate {d} stream(s) from its interference; silenced");
                warn!("{msg}");
                warnings.push(msg);
                demoted.push(v);
                tx.insert(v, CMat::zeros(m, 0));
                cells.insert(v, CellBeamformer::silent(m, n));
            }
        }
    }

    Ok(BeamformerSolution {
        scheme,
        m,
        n,
        r: graph.r(),
        seed: channels.seed,
        cells,
        demoted,
        warnings,
    })
}
