//! Hexagonal cellular interference graph labelled by Eisenstein integers.
//!
//! A cell is identified by `z = a + b·ω` with `ω = (-1 + i√3)/2`. All label
//! arithmetic stays in integers: `2·Re z = 2a - b` and `Im z = b·√3/2`, so
//! region membership and decoding-order comparisons never touch floats.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default, Serialize, Deserialize)]
pub struct EisensteinPoint {
    pub a: i64,
    pub b: i64,
}

impl EisensteinPoint {
    pub const ZERO: Self = Self { a: 0, b: 0 };
    pub const ONE: Self = Self { a: 1, b: 0 };
    pub const OMEGA: Self = Self { a: 0, b: 1 };
    pub const ONE_PLUS_OMEGA: Self = Self { a: 1, b: 1 };

    pub const fn new(a: i64, b: i64) -> Self {
        Self { a, b }
    }

    /// Twice the real part, `2a - b`.
    pub fn re2(self) -> i64 {
        2 * self.a - self.b
    }

    /// Imaginary part in units of `√3/2`.
    pub fn im_units(self) -> i64 {
        self.b
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re2() as f64 / 2.0, self.b as f64 * 3f64.sqrt() / 2.0)
    }

    /// Membership in `B_r = {|Re z| <= r, |Im z| <= √3 r / 2}`.
    pub fn in_region(self, r: u32) -> bool {
        let r = r as i64;
        self.re2().abs() <= 2 * r && self.b.abs() <= r
    }

    /// Membership in the coset `2·Z(ω) + offset`.
    pub fn in_coset(self, offset: EisensteinPoint) -> bool {
        let d = self - offset;
        d.a.rem_euclid(2) == 0 && d.b.rem_euclid(2) == 0
    }

    /// The six nearest neighbours.
    pub fn neighbors(self) -> [EisensteinPoint; 6] {
        NEIGHBOR_STEPS.map(|s| self + s)
    }
}

const NEIGHBOR_STEPS: [EisensteinPoint; 6] = [
    EisensteinPoint::ONE,
    EisensteinPoint::OMEGA,
    EisensteinPoint::ONE_PLUS_OMEGA,
    EisensteinPoint::new(-1, 0),
    EisensteinPoint::new(0, -1),
    EisensteinPoint::new(-1, -1),
];

impl Add for EisensteinPoint {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.a + o.a, self.b + o.b)
    }
}

impl Sub for EisensteinPoint {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.a - o.a, self.b - o.b)
    }
}

impl Neg for EisensteinPoint {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a, -self.b)
    }
}

impl Mul<EisensteinPoint> for i64 {
    type Output = EisensteinPoint;
    fn mul(self, p: EisensteinPoint) -> EisensteinPoint {
        EisensteinPoint::new(self * p.a, self * p.b)
    }
}

impl fmt::Display for EisensteinPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.a, self.b)
    }
}

/// Interference from transmitter `tx` observed at receiver `rx`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(into = "[EisensteinPoint; 2]", from = "[EisensteinPoint; 2]")]
pub struct DirectedEdge {
    pub tx: EisensteinPoint,
    pub rx: EisensteinPoint,
}

impl DirectedEdge {
    pub const fn new(tx: EisensteinPoint, rx: EisensteinPoint) -> Self {
        Self { tx, rx }
    }
}

impl From<DirectedEdge> for [EisensteinPoint; 2] {
    fn from(e: DirectedEdge) -> Self {
        [e.tx, e.rx]
    }
}

impl From<[EisensteinPoint; 2]> for DirectedEdge {
    fn from([tx, rx]: [EisensteinPoint; 2]) -> Self {
        Self { tx, rx }
    }
}

impl fmt::Display for DirectedEdge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{} -> {}]", self.tx, self.rx)
    }
}

/// A decoding order: `precedes(v, u)` means the message of `v` is decoded
/// before the message of `u`.
pub trait DecodingOrder {
    fn precedes(&self, v: EisensteinPoint, u: EisensteinPoint) -> bool;
}

impl<F> DecodingOrder for F
where
    F: Fn(EisensteinPoint, EisensteinPoint) -> bool,
{
    fn precedes(&self, v: EisensteinPoint, u: EisensteinPoint) -> bool {
        self(v, u)
    }
}

/// Left-to-right, top-down: higher rows first, then smaller real part.
#[derive(Clone, Copy, Debug, Default)]
pub struct LeftToRightTopDown;

impl LeftToRightTopDown {
    /// Sort key whose ascending order is the decoding order.
    pub fn key(p: EisensteinPoint) -> (i64, i64) {
        (-p.im_units(), p.re2())
    }
}

impl DecodingOrder for LeftToRightTopDown {
    fn precedes(&self, v: EisensteinPoint, u: EisensteinPoint) -> bool {
        v.im_units() > u.im_units() || (v.im_units() == u.im_units() && v.re2() < u.re2())
    }
}

/// Orient every undirected edge: `[u, v]` is emitted iff `v` precedes `u`.
pub fn orient_edges<O: DecodingOrder + ?Sized>(
    edges: &[(EisensteinPoint, EisensteinPoint)],
    order: &O,
) -> Result<Vec<DirectedEdge>> {
    let mut out = Vec::with_capacity(edges.len());
    for &(p, q) in edges {
        match (order.precedes(q, p), order.precedes(p, q)) {
            (true, false) => out.push(DirectedEdge::new(p, q)),
            (false, true) => out.push(DirectedEdge::new(q, p)),
            _ => return Err(Error::UnorderedEdge(p, q)),
        }
    }
    out.sort();
    Ok(out)
}

/// The three segments of `Δ(z)`: `(z, z+ω)`, `(z, z+ω+1)`, `(z+ω, z+ω+1)`.
fn triangle_segments(z: EisensteinPoint) -> [(EisensteinPoint, EisensteinPoint); 3] {
    let w = z + EisensteinPoint::OMEGA;
    let x = z + EisensteinPoint::ONE_PLUS_OMEGA;
    [(z, w), (z, x), (w, x)]
}

fn canonical(p: EisensteinPoint, q: EisensteinPoint) -> (EisensteinPoint, EisensteinPoint) {
    if p <= q {
        (p, q)
    } else {
        (q, p)
    }
}

fn region_points(r: u32) -> impl Iterator<Item = EisensteinPoint> {
    let r = r as i64;
    (-r..=r).rev().flat_map(move |b| {
        // |2a - b| <= 2r
        let lo = (b - 2 * r).div_euclid(2) + i64::from((b - 2 * r).rem_euclid(2) != 0);
        let hi = (b + 2 * r).div_euclid(2);
        (lo..=hi).map(move |a| EisensteinPoint::new(a, b))
    })
}

/// The cellular interference graph on `Z(ω) ∩ B_r`, oriented by the
/// left-to-right, top-down decoding order.
#[derive(Clone, Debug)]
pub struct InterferenceGraph {
    r: u32,
    vertices: Vec<EisensteinPoint>,
    index: HashMap<EisensteinPoint, usize>,
    undirected: Vec<(EisensteinPoint, EisensteinPoint)>,
    directed: Vec<DirectedEdge>,
    triangles: Vec<[EisensteinPoint; 3]>,
    triangle_count: Vec<u8>,
}

/// Build the graph for region half-width `r >= 1`.
pub fn build_graph(r: u32) -> Result<InterferenceGraph> {
    if r < 1 {
        return Err(Error::InvalidRadius(r));
    }
    let mut vertices: Vec<_> = region_points(r).collect();
    vertices.sort_by_key(|&p| LeftToRightTopDown::key(p));
    let index: HashMap<_, _> = vertices.iter().enumerate().map(|(i, &p)| (p, i)).collect();

    // Every segment of D with both endpoints inside B_r. Any such segment
    // belongs to Δ(z) for some z within one step of the region.
    let mut undirected = BTreeSet::new();
    for z in region_points(r + 1) {
        for (p, q) in triangle_segments(z) {
            if index.contains_key(&p) && index.contains_key(&q) {
                undirected.insert(canonical(p, q));
            }
        }
    }
    let undirected: Vec<_> = undirected.into_iter().collect();
    let directed = orient_edges(&undirected, &LeftToRightTopDown)?;

    let mut triangles = Vec::new();
    let mut triangle_count = vec![0u8; vertices.len()];
    for &z in &vertices {
        let tri = [z, z + EisensteinPoint::OMEGA, z + EisensteinPoint::ONE_PLUS_OMEGA];
        if tri.iter().all(|p| index.contains_key(p)) {
            for p in &tri {
                triangle_count[index[p]] += 1;
            }
            triangles.push(tri);
        }
    }

    Ok(InterferenceGraph {
        r,
        vertices,
        index,
        undirected,
        directed,
        triangles,
        triangle_count,
    })
}

impl InterferenceGraph {
    pub fn r(&self) -> u32 {
        self.r
    }

    /// Vertices in decoding order (top row first, left to right).
    pub fn vertices(&self) -> &[EisensteinPoint] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, p: EisensteinPoint) -> bool {
        self.index.contains_key(&p)
    }

    pub fn index_of(&self, p: EisensteinPoint) -> Option<usize> {
        self.index.get(&p).copied()
    }

    /// Undirected edges as canonical `(min, max)` pairs, sorted.
    pub fn undirected_edges(&self) -> &[(EisensteinPoint, EisensteinPoint)] {
        &self.undirected
    }

    /// Directed interference edges `[tx, rx]` after decode-and-cancel.
    pub fn directed_edges(&self) -> &[DirectedEdge] {
        &self.directed
    }

    /// Ordered triplets `[z, z+ω, z+ω+1]` inside the region.
    pub fn triangles(&self) -> &[[EisensteinPoint; 3]] {
        &self.triangles
    }

    /// Number of triangles containing `p` (`n_v`).
    pub fn triangle_count(&self, p: EisensteinPoint) -> Option<u8> {
        self.index_of(p).map(|i| self.triangle_count[i])
    }

    /// Transmitters whose interference reaches receiver `rx`.
    pub fn interferers_of(&self, rx: EisensteinPoint) -> Vec<EisensteinPoint> {
        // With the left-to-right, top-down order the in-neighbours are the
        // right neighbour and the two neighbours on the row below.
        [
            rx + EisensteinPoint::ONE,
            rx - EisensteinPoint::OMEGA,
            rx - EisensteinPoint::ONE_PLUS_OMEGA,
        ]
        .into_iter()
        .filter(|p| self.contains(*p))
        .collect()
    }

    /// Horizontal rows from top to bottom, each sorted left to right.
    pub fn rows(&self) -> Vec<Vec<EisensteinPoint>> {
        let mut rows: Vec<Vec<EisensteinPoint>> = Vec::new();
        for &p in &self.vertices {
            match rows.last_mut() {
                Some(row) if row[0].b == p.b => row.push(p),
                _ => rows.push(vec![p]),
            }
        }
        rows
    }

    /// Split vertices into internal (`n_v = 3`) and external (`n_v < 3`).
    pub fn classify_boundary(&self) -> (Vec<EisensteinPoint>, Vec<EisensteinPoint>) {
        let mut internal = Vec::new();
        let mut external = Vec::new();
        for (&p, &n) in self.vertices.iter().zip(&self.triangle_count) {
            if n == 3 {
                internal.push(p);
            } else {
                external.push(p);
            }
        }
        (internal, external)
    }

    pub fn external_count(&self) -> usize {
        self.triangle_count.iter().filter(|&&n| n < 3).count()
    }
}

/// Closed-form cardinalities: `|V|`, `|T|` and the upper bound on `|V_ex|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Cardinalities {
    pub vertices: u64,
    pub triangles: u64,
    pub external_bound: u64,
}

pub fn cardinality_formulas(r: u32) -> Result<Cardinalities> {
    if r < 1 {
        return Err(Error::InvalidRadius(r));
    }
    let r = r as u64;
    let vertices = 4 * r * r + 3 * r + u64::from(r.is_multiple_of(2));
    Ok(Cardinalities {
        vertices,
        triangles: 4 * r * r - r,
        external_bound: 12 * r + 3,
    })
}

/// Transmitter/receiver roles of the cluster centred at `a = z`.
///
/// Transmitters `{a, b, c}` and receivers `{a, d, e}`; the alignment
/// conditions are `H_ab v_b ∥ H_ac v_c` at `a`, `H_da v_a ∥ H_db v_b` at `d`
/// and `H_ea v_a ∥ H_ec v_c` at `e`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ClusterRoles {
    pub a: EisensteinPoint,
    pub b: EisensteinPoint,
    pub c: EisensteinPoint,
    pub d: EisensteinPoint,
    pub e: EisensteinPoint,
}

impl ClusterRoles {
    pub fn around(z: EisensteinPoint) -> Self {
        use EisensteinPoint as P;
        Self {
            a: z,
            b: z - P::ONE_PLUS_OMEGA,
            c: z + P::ONE,
            d: z - P::ONE,
            e: z + P::ONE_PLUS_OMEGA,
        }
    }

    pub fn members(&self) -> [EisensteinPoint; 5] {
        [self.a, self.b, self.c, self.d, self.e]
    }

    /// The six directed edges of `S(z)`.
    pub fn edges(&self) -> [DirectedEdge; 6] {
        let e = DirectedEdge::new;
        [
            e(self.a, self.d),
            e(self.a, self.e),
            e(self.c, self.a),
            e(self.c, self.e),
            e(self.b, self.d),
            e(self.b, self.a),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cluster {
    pub center: EisensteinPoint,
    pub roles: ClusterRoles,
    /// Edges of `S(z)` whose endpoints both lie in the graph.
    pub edges: Vec<DirectedEdge>,
    /// Some role lies outside the region.
    pub partial: bool,
}

/// Inactive sublattice `Λ₀` and the clusters centred on `Λ₀ + ω`.
#[derive(Clone, Debug)]
pub struct ClusterPartition {
    /// Coset representative: `Λ₀ = 2·Z(ω) + offset`.
    pub offset: EisensteinPoint,
    pub inactive: Vec<EisensteinPoint>,
    pub clusters: Vec<Cluster>,
}

impl ClusterPartition {
    pub fn is_inactive(&self, p: EisensteinPoint) -> bool {
        p.in_coset(self.offset)
    }

    pub fn centers(&self) -> impl Iterator<Item = EisensteinPoint> + '_ {
        self.clusters.iter().map(|c| c.center)
    }
}

const COSET_OFFSETS: [EisensteinPoint; 4] = [
    EisensteinPoint::ZERO,
    EisensteinPoint::ONE,
    EisensteinPoint::OMEGA,
    EisensteinPoint::ONE_PLUS_OMEGA,
];

/// Coset of `2·Z(ω)` with the fewest points in `B_r`; ties go to the first of
/// `0, 1, ω, 1+ω`.
pub fn inactive_offset(graph: &InterferenceGraph) -> EisensteinPoint {
    let count = |o: EisensteinPoint| graph.vertices().iter().filter(|p| p.in_coset(o)).count();
    let mut best = COSET_OFFSETS[0];
    let mut best_count = count(best);
    for &o in &COSET_OFFSETS[1..] {
        let c = count(o);
        if c < best_count {
            best = o;
            best_count = c;
        }
    }
    best
}

/// Silence `Λ₀` and partition the remaining interference edges into the
/// clusters `S(z)`, `z ∈ Λ₀ + ω`. Clusters whose centre falls outside the
/// region are kept when any of their roles lies inside.
pub fn inactive_set_and_clusters(graph: &InterferenceGraph) -> ClusterPartition {
    let offset = inactive_offset(graph);
    let inactive: Vec<_> = graph
        .vertices()
        .iter()
        .copied()
        .filter(|p| p.in_coset(offset))
        .collect();

    let center_coset = offset + EisensteinPoint::OMEGA;
    let mut clusters = Vec::new();
    for z in region_points(graph.r() + 2) {
        if !z.in_coset(center_coset) {
            continue;
        }
        let roles = ClusterRoles::around(z);
        let present = roles.members().iter().filter(|p| graph.contains(**p)).count();
        if present == 0 {
            continue;
        }
        let edges = roles
            .edges()
            .into_iter()
            .filter(|e| graph.contains(e.tx) && graph.contains(e.rx))
            .collect();
        clusters.push(Cluster {
            center: z,
            roles,
            edges,
            partial: present < 5,
        });
    }
    clusters.sort_by_key(|c| c.center);
    ClusterPartition {
        offset,
        inactive,
        clusters,
    }
}

/// Stable JSON document describing the graph and its cluster partition.
#[derive(Clone, Debug, Serialize)]
pub struct GraphExport {
    pub r: u32,
    pub vertices: Vec<EisensteinPoint>,
    pub edges: Vec<[EisensteinPoint; 2]>,
    pub directed: Vec<DirectedEdge>,
    pub triangles: Vec<[EisensteinPoint; 3]>,
    pub external: Vec<EisensteinPoint>,
    pub v0: Vec<EisensteinPoint>,
    pub clusters: BTreeMap<String, Vec<DirectedEdge>>,
}

impl GraphExport {
    pub fn new(graph: &InterferenceGraph, partition: &ClusterPartition) -> Self {
        Self {
            r: graph.r(),
            vertices: graph.vertices().to_vec(),
            edges: graph.undirected_edges().iter().map(|&(p, q)| [p, q]).collect(),
            directed: graph.directed_edges().to_vec(),
            triangles: graph.triangles().to_vec(),
            external: graph.classify_boundary().1,
            v0: partition.inactive.clone(),
            clusters: partition
                .clusters
                .iter()
                .map(|c| (c.center.to_string(), c.edges.clone()))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: i64, b: i64) -> EisensteinPoint {
        EisensteinPoint::new(a, b)
    }

    #[test]
    fn rejects_zero_radius() {
        assert_eq!(build_graph(0).unwrap_err(), Error::InvalidRadius(0));
        assert!(cardinality_formulas(0).is_err());
    }

    #[test]
    fn small_vertex_and_triangle_counts() {
        assert_eq!(build_graph(1).unwrap().len(), 7);
        assert_eq!(build_graph(2).unwrap().len(), 23);
        assert_eq!(build_graph(1).unwrap().triangles().len(), 3);
        assert_eq!(build_graph(3).unwrap().triangles().len(), 33);
    }

    #[test]
    fn closed_forms() {
        assert_eq!(cardinality_formulas(4).unwrap().vertices, 77);
        assert_eq!(cardinality_formulas(5).unwrap().triangles, 95);
        assert_eq!(cardinality_formulas(2).unwrap().external_bound, 27);
    }

    #[test]
    fn orientation_examples() {
        let order = LeftToRightTopDown;
        let zero = EisensteinPoint::ZERO;
        let one = EisensteinPoint::ONE;
        let omega = EisensteinPoint::OMEGA;
        assert_eq!(
            orient_edges(&[(zero, one)], &order).unwrap(),
            vec![DirectedEdge::new(one, zero)]
        );
        assert_eq!(
            orient_edges(&[(zero, omega)], &order).unwrap(),
            vec![DirectedEdge::new(zero, omega)]
        );

        let g = build_graph(1).unwrap();
        assert_eq!(g.directed_edges().len(), g.undirected_edges().len());
        assert_eq!(g.undirected_edges().len(), 12);
    }

    #[test]
    fn orientation_reports_unordered_edges() {
        let never = |_: EisensteinPoint, _: EisensteinPoint| false;
        let err = orient_edges(&[(p(0, 0), p(1, 0))], &never).unwrap_err();
        assert_eq!(err, Error::UnorderedEdge(p(0, 0), p(1, 0)));
    }

    #[test]
    fn origin_is_internal_even_at_radius_one() {
        let g = build_graph(1).unwrap();
        assert_eq!(g.triangle_count(EisensteinPoint::ZERO), Some(3));
        let (internal, external) = g.classify_boundary();
        assert_eq!(internal, vec![EisensteinPoint::ZERO]);
        assert_eq!(external.len(), 6);
        for r in 2..5 {
            assert_eq!(build_graph(r).unwrap().triangle_count(EisensteinPoint::ZERO), Some(3));
        }
    }

    #[test]
    fn external_count_bound_at_three() {
        let g = build_graph(3).unwrap();
        assert!(g.external_count() <= 39);
    }

    #[test]
    fn inactive_set_sizes() {
        let g1 = build_graph(1).unwrap();
        let p1 = inactive_set_and_clusters(&g1);
        assert_eq!(p1.inactive, vec![EisensteinPoint::ZERO]);

        let g3 = build_graph(3).unwrap();
        let p3 = inactive_set_and_clusters(&g3);
        assert_eq!(p3.inactive.len(), 10);
        assert_eq!(g3.len(), 45);

        // Plain 2·Z(ω) would silence 11 cells at r = 3.
        assert_eq!(
            g3.vertices()
                .iter()
                .filter(|q| q.in_coset(EisensteinPoint::ZERO))
                .count(),
            11
        );
    }

    #[test]
    fn even_radius_uses_omega_coset_when_smallest() {
        let g = build_graph(2).unwrap();
        assert_eq!(inactive_offset(&g), EisensteinPoint::OMEGA);
        assert_eq!(inactive_set_and_clusters(&g).inactive.len(), 4);
    }

    #[test]
    fn full_cluster_role_map() {
        let roles = ClusterRoles::around(EisensteinPoint::OMEGA);
        assert_eq!(roles.b, p(-1, 0));
        assert_eq!(roles.c, p(1, 1));
        assert_eq!(roles.d, p(-1, 1));
        assert_eq!(roles.e, p(1, 2));
        // Every cluster edge is oriented consistently with the decoding order.
        let order = LeftToRightTopDown;
        for e in roles.edges() {
            assert!(order.precedes(e.rx, e.tx), "{e}");
        }
    }

    #[test]
    fn export_has_stable_keys() {
        let g = build_graph(1).unwrap();
        let part = inactive_set_and_clusters(&g);
        let json = serde_json::to_string(&GraphExport::new(&g, &part)).unwrap();
        assert!(json.starts_with("{\"r\":1,\"vertices\":[{\"a\":"));
        let again = serde_json::to_string(&GraphExport::new(&g, &part)).unwrap();
        assert_eq!(json, again);
    }
}
