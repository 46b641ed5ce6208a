use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;

use super::{as_column, finalize, seed_direction, BeamformerSolution, SchemeTag};
use crate::channel::ChannelSet;
use crate::error::Result;
use crate::lattice::{Cluster, ClusterPartition, EisensteinPoint, InterferenceGraph};
use crate::linalg::{eig2x2, normalize, solve_checked, CMat, CVec};

/// Clustered alignment with the inactive sublattice silenced.
///
/// In a complete cluster the three transmit directions close a cycle of
/// alignment conditions, solved by an eigenvector of the loop product. In a
/// boundary cluster the conditions that survive form a forest, so directions
/// are propagated from a seed vector.
pub fn solve_2x2(
    graph: &InterferenceGraph,
    partition: &ClusterPartition,
    channels: &ChannelSet,
) -> Result<BeamformerSolution> {
    SchemeTag::TwoByTwo.check(channels)?;
    let solved: Vec<Result<ClusterBeams>> = partition
        .clusters
        .par_iter()
        .map(|c| solve_cluster(graph, c, channels))
        .collect();

    let mut tx: BTreeMap<EisensteinPoint, CMat> = BTreeMap::new();
    let mut warnings = Vec::new();
    for beams in solved {
        let beams = beams?;
        warnings.extend(beams.warning);
        for (p, v) in beams.directions {
            tx.insert(p, as_column(&v));
        }
    }
    for &v in graph.vertices() {
        if partition.is_inactive(v) {
            tx.insert(v, CMat::zeros(channels.m, 0));
        } else {
            tx.entry(v)
                .or_insert_with(|| as_column(&seed_direction(channels.seed, v)));
        }
    }
    finalize(SchemeTag::TwoByTwo, graph, channels, tx, warnings)
}

struct ClusterBeams {
    directions: Vec<(EisensteinPoint, CVec)>,
    warning: Option<String>,
}

fn solve_cluster(graph: &InterferenceGraph, cluster: &Cluster, channels: &ChannelSet) -> Result<ClusterBeams> {
    let z = cluster.center;
    let roles = cluster.roles;
    let (a, b, c, d, e) = (roles.a, roles.b, roles.c, roles.d, roles.e);
    // H(rx, tx): channel from `tx` observed at `rx`.
    let h = |rx: EisensteinPoint, tx: EisensteinPoint| channels.link(tx, rx);
    let ctx = |what: &str| format!("cluster centred at {z}: {what}");

    if !cluster.partial {
        let x_ec = solve_checked(h(e, c)?, h(e, a)?, || ctx("inverting H_ec"))?;
        let x_ab = solve_checked(h(a, b)?, h(a, c)?, || ctx("inverting H_ab"))?;
        let x_da = solve_checked(h(d, a)?, h(d, b)?, || ctx("inverting H_da"))?;
        let loop_product = &x_da * &x_ab * &x_ec;
        let ([(_, v_a), _], tie) = eig2x2(&loop_product);
        let warning = tie.then(|| {
            let msg = format!("cluster centred at {z}: tied eigenvalues, picked lexicographically");
            warn!("{msg}");
            msg
        });
        let v_c = normalize(&(&x_ec * &v_a));
        let v_b = normalize(&(&x_ab * &v_c));
        return Ok(ClusterBeams {
            directions: vec![(a, v_a), (b, v_b), (c, v_c)],
            warning,
        });
    }

    // Alignment conditions (x, y, rx): H_{rx,x} v_x ∥ H_{rx,y} v_y.
    let present = |p: EisensteinPoint| graph.contains(p);
    let conditions: Vec<(EisensteinPoint, EisensteinPoint, EisensteinPoint)> = [(a, b, d), (a, c, e), (b, c, a)]
        .into_iter()
        .filter(|&(x, y, rx)| present(x) && present(y) && present(rx))
        .collect();

    let mut assigned: BTreeMap<EisensteinPoint, CVec> = BTreeMap::new();
    for root in [a, b, c].into_iter().filter(|&p| present(p)) {
        if assigned.contains_key(&root) {
            continue;
        }
        assigned.insert(root, seed_direction(channels.seed, root));
        let mut frontier = vec![root];
        while let Some(x) = frontier.pop() {
            for &(p, q, rx) in &conditions {
                let (from, to) = if p == x {
                    (p, q)
                } else if q == x {
                    (q, p)
                } else {
                    continue;
                };
                if assigned.contains_key(&to) {
                    continue;
                }
                let rhs = h(rx, from)? * &assigned[&from];
                let v = solve_checked(h(rx, to)?, &as_column(&rhs), || {
                    ctx(&format!("aligning {to} with {from} at receiver {rx}"))
                })?;
                assigned.insert(to, normalize(&v.column(0).into_owned()));
                frontier.push(to);
            }
        }
    }
    Ok(ClusterBeams {
        directions: assigned.into_iter().collect(),
        warning: None,
    })
}
