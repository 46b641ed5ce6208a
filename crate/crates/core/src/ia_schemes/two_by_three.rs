use std::collections::BTreeMap;

use super::{as_column, finalize, seed_direction, BeamformerSolution, SchemeTag};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::lattice::{EisensteinPoint, InterferenceGraph};
use crate::linalg::{left_null_space, normalize, solve_checked, CMat};

/// Every cell serves one stream. Rows are swept top to bottom and each row
/// left to right: receiver `a = x + ω` first projects away its right
/// neighbour's stream, then the transmitter `x` is aligned with its left
/// neighbour `x - 1` inside the remaining two dimensions at `a`.
pub fn solve_2x3(graph: &InterferenceGraph, channels: &ChannelSet) -> Result<BeamformerSolution> {
    SchemeTag::TwoByThree.check(channels)?;
    let h = |rx: EisensteinPoint, tx: EisensteinPoint| channels.link(tx, rx);
    let mut tx: BTreeMap<EisensteinPoint, CMat> = BTreeMap::new();

    for row in graph.rows() {
        for (i, &x) in row.iter().enumerate() {
            let a = x + EisensteinPoint::OMEGA;
            let right = a + EisensteinPoint::ONE;
            if i == 0 || !graph.contains(a) || !graph.contains(right) {
                tx.insert(x, as_column(&seed_direction(channels.seed, x)));
                continue;
            }
            let left = row[i - 1];
            let leak = h(a, right)? * &tx[&right];
            let projector = left_null_space(&leak).adjoint();
            if projector.nrows() != 2 {
                return Err(Error::DegenerateNullspace {
                    context: format!("receiver {a}: projecting out transmitter {right}"),
                });
            }
            let target = &projector * h(a, left)? * &tx[&left];
            let v = solve_checked(&(&projector * h(a, x)?), &target, || {
                format!("edge [{x} -> {a}]: projected channel")
            })?;
            tx.insert(x, as_column(&normalize(&v.column(0).into_owned())));
        }
    }
    finalize(SchemeTag::TwoByThree, graph, channels, tx, Vec::new())
}
