//! Independent certification of beamforming solutions.
//!
//! Everything here is recomputed from the raw channel matrices and the
//! beamformers in a [`BeamformerSolution`]; nothing is taken from the
//! scheme's own bookkeeping.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::ia_schemes::{BeamformerSolution, CertificateSummary, MIN_DIRECT_GAIN};
use crate::lattice::{DirectedEdge, EisensteinPoint, InterferenceGraph};

type Mat = DMatrix<Complex64>;

/// Default relative residual tolerance for the alignment certificate.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

/// Which transmitters count as interference at a receiver.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InterferenceModel {
    /// Only the edges left after decode-and-cancel.
    Directed,
    /// Both directions of every neighbour pair, as if no decoded messages
    /// were shared.
    AllNeighbors,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeResidual {
    pub edge: DirectedEdge,
    /// `‖U_rx^H H V_tx‖_F / ‖H‖_F`; infinite when the channel is missing.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellGain {
    pub cell: EisensteinPoint,
    pub sigma_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub pass: bool,
    pub model: InterferenceModel,
    pub tolerance: f64,
    pub edges_checked: usize,
    pub cells_checked: usize,
    pub max_residual: f64,
    pub min_direct_gain: Option<f64>,
    pub failing_edges: Vec<EdgeResidual>,
    pub weak_cells: Vec<CellGain>,
}

impl Certificate {
    pub fn summary(&self) -> CertificateSummary {
        CertificateSummary {
            pass: self.pass,
            tolerance: self.tolerance,
            max_residual: self.max_residual,
            min_direct_gain: self.min_direct_gain,
        }
    }
}

fn active(solution: &BeamformerSolution, p: EisensteinPoint) -> Option<(&Mat, &Mat)> {
    solution.cells.get(&p).filter(|c| c.dof > 0).map(|c| (&c.tx, &c.rx))
}

fn smallest_singular_value(m: &Mat) -> f64 {
    m.singular_values().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Check every interference link between active cells against `tol`
/// (relative to the channel norm) and every active direct link against
/// [`MIN_DIRECT_GAIN`].
pub fn certify_alignment(
    graph: &InterferenceGraph,
    channels: &ChannelSet,
    solution: &BeamformerSolution,
    tol: f64,
    model: InterferenceModel,
) -> Certificate {
    let edges: Vec<DirectedEdge> = match model {
        InterferenceModel::Directed => graph.directed_edges().to_vec(),
        InterferenceModel::AllNeighbors => graph
            .undirected_edges()
            .iter()
            .flat_map(|&(p, q)| [DirectedEdge::new(p, q), DirectedEdge::new(q, p)])
            .collect(),
    };

    let mut max_residual: f64 = 0.0;
    let mut failing_edges = Vec::new();
    let mut edges_checked = 0;
    for e in edges {
        let (Some((v_tx, _)), Some((_, u_rx))) = (active(solution, e.tx), active(solution, e.rx)) else {
            continue;
        };
        edges_checked += 1;
        let residual = match channels.cross.get(&e) {
            Some(h) => {
                let leak = u_rx.adjoint() * h * v_tx;
                leak.norm() / h.norm()
            }
            None => f64::INFINITY,
        };
        max_residual = max_residual.max(residual);
        if residual.is_nan() || residual > tol {
            failing_edges.push(EdgeResidual { edge: e, residual });
        }
    }

    let mut min_gain: Option<f64> = None;
    let mut weak_cells = Vec::new();
    let mut cells_checked = 0;
    for &p in graph.vertices() {
        let Some((v, u)) = active(solution, p) else {
            continue;
        };
        cells_checked += 1;
        let sigma_min = match channels.direct.get(&p) {
            Some(h) if h.shape() == (u.nrows(), v.nrows()) => smallest_singular_value(&(u.adjoint() * h * v)),
            _ => 0.0,
        };
        min_gain = Some(min_gain.map_or(sigma_min, |g| g.min(sigma_min)));
        if sigma_min.is_nan() || sigma_min <= MIN_DIRECT_GAIN {
            weak_cells.push(CellGain { cell: p, sigma_min });
        }
    }

    Certificate {
        pass: failing_edges.is_empty() && weak_cells.is_empty(),
        model,
        tolerance: tol,
        edges_checked,
        cells_checked,
        max_residual,
        min_direct_gain: min_gain,
        failing_edges,
        weak_cells,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellRate {
    pub cell: EisensteinPoint,
    pub dof: usize,
    /// Per-stream equivalent SINR `2^(R/d) - 1` at each power.
    pub sinr: Vec<f64>,
    /// Bits per channel use at each power.
    pub rate: Vec<f64>,
    pub dof_slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub powers: Vec<f64>,
    pub cells: Vec<CellRate>,
    pub average_rate: Vec<f64>,
    pub average_dof_slope: f64,
}

impl RateReport {
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "cell".to_string(),
            "a".into(),
            "b".into(),
            "dof_assigned".into(),
            "dof_slope".into(),
        ];
        header.extend(self.powers.iter().map(|p| format!("rate@{p}")));
        w.write_record(&header).expect("in-memory write");
        for c in &self.cells {
            let mut row = vec![
                c.cell.to_string(),
                c.cell.a.to_string(),
                c.cell.b.to_string(),
                c.dof.to_string(),
                c.dof_slope.to_string(),
            ];
            row.extend(c.rate.iter().map(|r| r.to_string()));
            w.write_record(&row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

fn log2_det_hermitian(k: &Mat) -> f64 {
    let l = k
        .clone()
        .cholesky()
        .expect("interference-plus-noise covariance is positive definite");
    2.0 * l.l_dirty().diagonal().iter().map(|z| z.re.ln()).sum::<f64>() / std::f64::consts::LN_2
}

/// Rates under decode-and-cancel in the graph's decoding order.
///
/// Receivers are visited in order; a neighbour whose message was decoded
/// earlier is cancelled, every other active neighbour is noise. Each stream
/// gets power `P/d`, and the rate of cell `v` at power `P` is
/// `log₂ det(K + (P/d) G G^H) − log₂ det K` with `G = U^H H_vv V` and
/// `K = U^H U + Σ (P/d_u) (U^H H_vu V_u)(·)^H` over the uncancelled
/// neighbours.
pub fn measure_rates(
    graph: &InterferenceGraph,
    channels: &ChannelSet,
    solution: &BeamformerSolution,
    powers: &[f64],
) -> Result<RateReport> {
    if powers.iter().any(|&p| !p.is_finite() || p <= 0.0) {
        return Err(Error::DegenerateSlope);
    }
    let mut ps: Vec<f64> = powers.to_vec();
    ps.sort_by(f64::total_cmp);
    ps.dedup();
    if ps.len() < 2 {
        return Err(Error::DegenerateSlope);
    }
    let log_span = ps[ps.len() - 1].log2() - ps[0].log2();

    let neighbours = |v: EisensteinPoint| v.neighbors().into_iter().filter(move |u| graph.contains(*u));
    let mut decoded: BTreeSet<EisensteinPoint> = BTreeSet::new();
    let mut cells = Vec::with_capacity(graph.len());
    for &v in graph.vertices() {
        let Some((v_tx, u_rx)) = active(solution, v) else {
            cells.push(CellRate {
                cell: v,
                dof: 0,
                sinr: vec![0.0; ps.len()],
                rate: vec![0.0; ps.len()],
                dof_slope: 0.0,
            });
            decoded.insert(v);
            continue;
        };
        let d = v_tx.ncols();
        let h = channels
            .direct
            .get(&v)
            .ok_or_else(|| Error::Inconsistent(format!("no direct channel for cell {v}")))?;
        let g = u_rx.adjoint() * h * v_tx;
        let mut leaks: Vec<(f64, Mat)> = Vec::new();
        for u in neighbours(v) {
            if decoded.contains(&u) {
                continue;
            }
            let Some((u_tx, _)) = active(solution, u) else {
                continue;
            };
            let h_vu = channels
                .cross
                .get(&DirectedEdge::new(u, v))
                .ok_or(Error::MissingChannel(DirectedEdge::new(u, v)))?;
            let a = u_rx.adjoint() * h_vu * u_tx;
            leaks.push((u_tx.ncols() as f64, &a * a.adjoint()));
        }
        let noise = u_rx.adjoint() * u_rx;
        let gram = &g * g.adjoint();
        let mut rate = Vec::with_capacity(ps.len());
        for &p in &ps {
            let mut k = noise.clone();
            for (du, cov) in &leaks {
                k += cov * Complex64::new(p / du, 0.0);
            }
            let total = &k + &gram * Complex64::new(p / d as f64, 0.0);
            rate.push((log2_det_hermitian(&total) - log2_det_hermitian(&k)).max(0.0));
        }
        let dof_slope = (rate[rate.len() - 1] - rate[0]) / log_span;
        cells.push(CellRate {
            cell: v,
            dof: d,
            sinr: rate.iter().map(|r| (r / d as f64).exp2() - 1.0).collect(),
            rate,
            dof_slope,
        });
        decoded.insert(v);
    }

    let n = cells.len().max(1) as f64;
    let average_rate = (0..ps.len())
        .map(|i| cells.iter().map(|c| c.rate[i]).sum::<f64>() / n)
        .collect();
    let average_dof_slope = cells.iter().map(|c| c.dof_slope).sum::<f64>() / n;
    Ok(RateReport {
        powers: ps,
        cells,
        average_rate,
        average_dof_slope,
    })
}
