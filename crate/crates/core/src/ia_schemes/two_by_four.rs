use std::collections::BTreeMap;

use super::{as_column, cell_rng, finalize, orthogonal_to, seed_direction, BeamformerSolution, SchemeTag};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::lattice::{EisensteinPoint, InterferenceGraph};
use crate::linalg::{
    complex_gaussian, left_null_space, normalize, normalize_columns, null_space, rank, sigma_min, CMat, CVec,
};

const DOUBLE_STREAM_RNG: u64 = 1;

/// Output of the two-stream alignment construction at receiver `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamAlignment {
    pub v_b: CVec,
    pub v_c: CVec,
    pub gamma: f64,
}

/// Choose `v_b`, `v_c` with norms at most one such that
/// `H_db v_b + H_dc v_c = γ · H_da v_a`, given the stream `h_a = H_da v_a`.
///
/// Takes the one-dimensional nullspace `x` of `F = [h_a, H_db, H_dc]` and
/// reads `ṽ_b = -x[1..3]/x₀`, `ṽ_c = -x[3..5]/x₀`, then rescales both by
/// `γ = min(1/‖ṽ_b‖, 1/‖ṽ_c‖)`.
pub fn align_two_streams(h_a: &CVec, h_db: &CMat, h_dc: &CMat) -> Result<StreamAlignment> {
    let n = h_a.len();
    if h_db.shape() != (n, 2) || h_dc.shape() != (n, 2) {
        return Err(Error::Inconsistent(format!(
            "alignment construction expects {n}x2 channels, got {:?} and {:?}",
            h_db.shape(),
            h_dc.shape()
        )));
    }
    let f = CMat::from_fn(n, 5, |i, j| match j {
        0 => h_a[i],
        1 | 2 => h_db[(i, j - 1)],
        _ => h_dc[(i, j - 3)],
    });
    let ns = null_space(&f);
    if ns.ncols() != 1 {
        return Err(Error::DegenerateNullspace {
            context: format!("F has a {}-dimensional nullspace, expected 1", ns.ncols()),
        });
    }
    let x = ns.column(0);
    if x[0].norm() <= 1e-12 * x.norm() {
        return Err(Error::DegenerateNullspace {
            context: "nullspace vector of F has a vanishing first entry".into(),
        });
    }
    let vb_tilde = CVec::from_vec(vec![-x[1] / x[0], -x[2] / x[0]]);
    let vc_tilde = CVec::from_vec(vec![-x[3] / x[0], -x[4] / x[0]]);
    let gamma = (1.0 / vb_tilde.norm()).min(1.0 / vc_tilde.norm());
    Ok(StreamAlignment {
        v_b: vb_tilde.scale(gamma),
        v_c: vc_tilde.scale(gamma),
        gamma,
    })
}

/// Stripe construction: rows are grouped in threes from the top. Every
/// other cell of each middle row sends two streams on a random subspace;
/// all other cells send one.
pub fn solve_2x4(graph: &InterferenceGraph, channels: &ChannelSet) -> Result<BeamformerSolution> {
    SchemeTag::TwoByFour.check(channels)?;
    let seed = channels.seed;
    let h = |rx: EisensteinPoint, tx: EisensteinPoint| channels.link(tx, rx);
    let (one, omega, one_omega) = (
        EisensteinPoint::ONE,
        EisensteinPoint::OMEGA,
        EisensteinPoint::ONE_PLUS_OMEGA,
    );
    let mut tx: BTreeMap<EisensteinPoint, CMat> = BTreeMap::new();

    let rows = graph.rows();
    for stripe in rows.chunks(3) {
        if let Some(middle) = stripe.get(1) {
            let doubles: Vec<EisensteinPoint> = middle.iter().copied().step_by(2).collect();
            for &d in &doubles {
                tx.insert(d, random_subspace(seed, d));
            }
            // Cluster {a, b, c, d}, right to left so that `b`'s outside
            // interferers are fixed before `a` is chosen.
            for &d in doubles.iter().rev() {
                let (a, b, c) = (d - omega, d + one, d - one_omega);
                if graph.contains(a) {
                    let v_a = if graph.contains(b) {
                        absorb(graph, channels, &tx, b, a, [b + one, b - omega])?
                    } else {
                        None
                    };
                    tx.insert(a, as_column(&v_a.unwrap_or_else(|| seed_direction(seed, a))));
                }
                if [a, b, c].iter().all(|p| graph.contains(*p)) {
                    let h_a = (h(d, a)? * &tx[&a]).column(0).into_owned();
                    let l = align_two_streams(&h_a, h(d, b)?, h(d, c)?).map_err(|e| match e {
                        Error::DegenerateNullspace { context } => Error::DegenerateNullspace {
                            context: format!("receiver {d}: {context}"),
                        },
                        other => other,
                    })?;
                    tx.insert(b, as_column(&normalize(&l.v_b)));
                    tx.insert(c, as_column(&normalize(&l.v_c)));
                } else {
                    for p in [b, c].into_iter().filter(|p| graph.contains(*p)) {
                        tx.insert(p, as_column(&seed_direction(seed, p)));
                    }
                }
            }
        }
        // Top row: transmitter `t + 1` hides inside the three streams that
        // receiver `t` already sees from the middle row.
        for pair in stripe[0].windows(2) {
            let (t, e) = (pair[0], pair[1]);
            let v_e = absorb(graph, channels, &tx, t, e, [t - omega, t - one_omega])?;
            tx.insert(e, as_column(&v_e.unwrap_or_else(|| seed_direction(seed, e))));
        }
    }
    for &v in graph.vertices() {
        tx.entry(v).or_insert_with(|| as_column(&seed_direction(seed, v)));
    }
    finalize(SchemeTag::TwoByFour, graph, channels, tx, Vec::new())
}

/// When the streams from `others` already fill all but one dimension at
/// receiver `rx`, return the direction for `free` that lands inside their
/// span; `None` when there is room to spare.
fn absorb(
    graph: &InterferenceGraph,
    channels: &ChannelSet,
    tx: &BTreeMap<EisensteinPoint, CMat>,
    rx: EisensteinPoint,
    free: EisensteinPoint,
    others: [EisensteinPoint; 2],
) -> Result<Option<CVec>> {
    let mut cols: Vec<CVec> = Vec::new();
    for u in others {
        if let (true, Some(v)) = (graph.contains(u), tx.get(&u)) {
            let s = channels.cross_or_err(u, rx)? * v;
            cols.extend(s.column_iter().map(|c| c.into_owned()));
        }
    }
    if cols.is_empty() {
        return Ok(None);
    }
    let s = CMat::from_columns(&cols);
    if rank(&s) + 1 < channels.n {
        return Ok(None);
    }
    let u = left_null_space(&s);
    if u.ncols() != 1 {
        return Err(Error::DegenerateNullspace {
            context: format!(
                "receiver {rx}: outside interference leaves {} free dimensions",
                u.ncols()
            ),
        });
    }
    let w = channels.cross_or_err(free, rx)?.adjoint() * u.column(0);
    if w.norm() == 0.0 {
        return Err(Error::DegenerateNullspace {
            context: format!("receiver {rx}: channel from {free} is orthogonal to the free dimension"),
        });
    }
    Ok(Some(orthogonal_to(&w)))
}

fn random_subspace(seed: u64, p: EisensteinPoint) -> CMat {
    let mut rng = cell_rng(seed, p, DOUBLE_STREAM_RNG);
    loop {
        let v = normalize_columns(&complex_gaussian(&mut rng, 2, 2));
        if sigma_min(&v) > 1e-3 {
            return v;
        }
    }
}
