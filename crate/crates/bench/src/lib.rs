use cellia::channel::{generate, ChannelSet};
use cellia::lattice::{build_graph, inactive_set_and_clusters, ClusterPartition, InterferenceGraph};

/// Graph, cluster partition and seeded channels for an `r`-region with
/// two transmit and `n` receive antennas.
pub struct Fixture {
    pub graph: InterferenceGraph,
    pub partition: ClusterPartition,
    pub channels: ChannelSet,
}

pub fn fixture(r: u32, n: usize, seed: u64) -> Fixture {
    let graph = build_graph(r).expect("positive radius");
    let partition = inactive_set_and_clusters(&graph);
    let channels = generate(&graph, 2, n, seed);
    Fixture {
        graph,
        partition,
        channels,
    }
}
