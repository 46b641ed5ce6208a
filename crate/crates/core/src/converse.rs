//! Upper bounds on the average degrees of freedom of linear schemes.
//!
//! All arithmetic is exact: `s` and `g` are integers and every coefficient,
//! LP value and bound is a fraction.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lattice::{EisensteinPoint, InterferenceGraph};

pub type Q = Ratio<i128>;

/// Largest search space the integer oracle agrees to enumerate.
pub const ORACLE_LIMIT: f64 = 1e8;

pub fn q(n: i128, d: i128) -> Q {
    Q::new(n, d)
}

pub fn int(n: i128) -> Q {
    Q::from_integer(n)
}

pub fn to_f64(x: &Q) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// A fraction serialised as `{"exact": "n/d", "approx": f64}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Fraction(pub Q);

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Fraction", 2)?;
        st.serialize_field("exact", &self.0.to_string())?;
        st.serialize_field("approx", &to_f64(&self.0))?;
        st.end()
    }
}

impl From<Q> for Fraction {
    fn from(x: Q) -> Self {
        Self(x)
    }
}

/// Sorted DoF triple `i ≤ j ≤ k` of a triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(into = "[u32; 3]")]
pub struct TriangleConfig {
    pub i: u32,
    pub j: u32,
    pub k: u32,
}

impl From<TriangleConfig> for [u32; 3] {
    fn from(c: TriangleConfig) -> Self {
        [c.i, c.j, c.k]
    }
}

impl TriangleConfig {
    pub fn new(i: u32, j: u32, k: u32) -> Self {
        Self { i, j, k }
    }

    pub fn is_valid(&self, m: u32) -> bool {
        let (i, j, k) = (self.i, self.j, self.k);
        i <= j && j <= k && k <= m && i + j <= m && j + k <= m && i + k <= m
    }
}

impl fmt::Display for TriangleConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{},{}]", self.i, self.j, self.k)
    }
}

/// All valid configurations for `m` antennas, in lexicographic order.
pub fn enumerate_configs(m: u32) -> Vec<TriangleConfig> {
    let mut out = Vec::new();
    for i in 0..=m {
        for j in i..=m {
            for k in j..=m {
                let c = TriangleConfig::new(i, j, k);
                if c.is_valid(m) {
                    out.push(c);
                }
            }
        }
    }
    out
}

pub fn s_fn(c: TriangleConfig) -> i128 {
    (c.i + c.j + c.k) as i128
}

pub fn g_fn(c: TriangleConfig, m: u32) -> i128 {
    let (i, j, k, m) = (c.i as i128, c.j as i128, c.k as i128, m as i128);
    (i + j).pow(2) + (i + k).pow(2) + (j + k).pow(2) + i * j + i * k + j * k - 2 * m * (i + j + k)
}

pub fn f_m(c: TriangleConfig, m: u32) -> Q {
    (int(s_fn(c)) - q(g_fn(c, m), 2 * m as i128)) / int(3)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FmRow {
    pub config: TriangleConfig,
    pub s: i128,
    pub g: i128,
    pub f: Fraction,
    pub is_max: bool,
}

/// Configurations with their `f_M` values; the maximisers are flagged.
pub fn f_m_table(m: u32) -> Vec<FmRow> {
    let configs = enumerate_configs(m);
    let best = configs.iter().map(|&c| f_m(c, m)).max().unwrap_or_else(Q::zero);
    configs
        .into_iter()
        .map(|c| {
            let f = f_m(c, m);
            FmRow {
                config: c,
                s: s_fn(c),
                g: g_fn(c, m),
                f: Fraction(f),
                is_max: f == best,
            }
        })
        .collect()
}

pub fn general_m_bound(m: u32) -> Q {
    enumerate_configs(m)
        .into_iter()
        .map(|c| f_m(c, m))
        .max()
        .unwrap_or_else(Q::zero)
}

/// `max f_M ≤ 2M/5`.
pub fn ceiling_holds(m: u32) -> bool {
    general_m_bound(m) <= q(2 * m as i128, 5)
}

/// Necessary conditions for a per-cell DoF assignment: `d_v ≤ M`,
/// `d_u + d_v ≤ M` on every directed edge, and
/// `2 Σ_v (M − d_v) d_v ≥ Σ_[u,v] d_u d_v`.
pub fn feasibility_check(graph: &InterferenceGraph, dofs: &BTreeMap<EisensteinPoint, usize>, m: u32) -> bool {
    let m = m as i128;
    let mut d = Vec::with_capacity(graph.len());
    for v in graph.vertices() {
        match dofs.get(v) {
            Some(&x) if (x as i128) <= m => d.push(x as i128),
            _ => return false,
        }
    }
    let idx = |p: EisensteinPoint| graph.index_of(p).expect("edge endpoint in graph");
    let mut cross = 0;
    for e in graph.directed_edges() {
        let (du, dv) = (d[idx(e.tx)], d[idx(e.rx)]);
        if du + dv > m {
            return false;
        }
        cross += du * dv;
    }
    let own: i128 = d.iter().map(|&x| (m - x) * x).sum();
    2 * own >= cross
}

/// Coefficients of the triangle LP for one graph instance.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphCoefficients {
    pub m: u32,
    pub vertices: usize,
    pub triangles: usize,
    pub external: usize,
    pub alpha: Q,
    pub beta: Q,
    pub gamma: Q,
}

impl GraphCoefficients {
    /// `α = |T|/(3|V|)`, `β = M|V_ex|/|V|`, `γ = 3M²|V_ex|/(2|T|)` from the
    /// enumerated cardinalities.
    pub fn from_graph(graph: &InterferenceGraph, m: u32) -> Result<Self> {
        let v = graph.len() as i128;
        let t = graph.triangles().len() as i128;
        let ex = graph.external_count() as i128;
        if v == 0 || t == 0 {
            return Err(Error::InvalidLp("graph has no triangles".into()));
        }
        let mm = m as i128;
        Ok(Self {
            m,
            vertices: v as usize,
            triangles: t as usize,
            external: ex as usize,
            alpha: q(t, 3 * v),
            beta: q(mm * ex, v),
            gamma: q(3 * mm * mm * ex, 2 * t),
        })
    }
}

fn check_lp_input(s: &[Q], g: &[Q]) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidLp("no configurations".into()));
    }
    if s.len() != g.len() {
        return Err(Error::InvalidLp(format!(
            "{} s-values but {} g-values",
            s.len(),
            g.len()
        )));
    }
    Ok(())
}

fn max_line(s: &[Q], g: &[Q], lambda: Q) -> Q {
    s.iter()
        .zip(g)
        .map(|(si, gi)| si - lambda * gi)
        .max()
        .expect("nonempty")
}

/// `α · max_i (s_i − λ g_i) + λαγ + β`, an upper bound on the LP optimum
/// for every `λ ≥ 0`.
pub fn dual_bound(s: &[Q], g: &[Q], alpha: Q, beta: Q, gamma: Q, lambda: Q) -> Result<Q> {
    check_lp_input(s, g)?;
    if lambda.is_negative() {
        return Err(Error::InvalidLp(format!("lambda must be nonnegative, got {lambda}")));
    }
    Ok(alpha * max_line(s, g, lambda) + lambda * alpha * gamma + beta)
}

/// Minimise `max_i (s_i − λ g_i)` over `λ ≥ 0` by scanning `λ = 0` and
/// every nonnegative pairwise breakpoint. Returns `(λ*, minimum)`, taking
/// the smallest minimiser.
fn minimise_max_line(s: &[Q], g: &[Q]) -> Result<(Q, Q)> {
    check_lp_input(s, g)?;
    if g.iter().all(|x| x.is_positive()) {
        return Err(Error::UnboundedLambda);
    }
    let mut candidates = vec![Q::zero()];
    for a in 0..s.len() {
        for b in a + 1..s.len() {
            if g[a] != g[b] {
                let l = (s[a] - s[b]) / (g[a] - g[b]);
                if !l.is_negative() {
                    candidates.push(l);
                }
            }
        }
    }
    candidates.sort();
    candidates.dedup();
    let mut best: Option<(Q, Q)> = None;
    for l in candidates {
        let v = max_line(s, g, l);
        if best.is_none_or(|(_, bv)| v < bv) {
            best = Some((l, v));
        }
    }
    Ok(best.expect("λ = 0 is always a candidate"))
}

/// `λ*` minimising `max_i (s_i − λ g_i)/3` and the minimum value.
pub fn best_lambda(s: &[Q], g: &[Q]) -> Result<(Q, Q)> {
    let (l, v) = minimise_max_line(s, g)?;
    Ok((l, v / int(3)))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LpOutcome {
    pub configs: Vec<TriangleConfig>,
    pub s: Vec<Fraction>,
    pub g: Vec<Fraction>,
    pub x: Vec<Fraction>,
    pub value: Fraction,
    /// Tightest Lagrangian bound, attained at `lambda`.
    pub dual_bound: Fraction,
    pub lambda: Fraction,
}

/// Exact optimum of `max α sᵀx + β` s.t. `gᵀx ≤ γ`, `1ᵀx = 1`, `x ≥ 0`.
///
/// With a single inequality on top of the simplex, some optimal vertex has
/// at most two nonzero entries, so it suffices to compare every feasible
/// singleton with every mixture of a pair straddling `γ`. Ties keep the
/// first candidate (singletons before pairs, lowest indices first).
pub fn lp_solve_exact(s: &[Q], g: &[Q], alpha: Q, beta: Q, gamma: Q) -> Result<LpOutcome> {
    check_lp_input(s, g)?;
    let n = s.len();
    let min_g = *g.iter().min().expect("nonempty");
    if gamma < min_g {
        return Err(Error::Infeasible {
            gamma: gamma.to_string(),
            min_g: min_g.to_string(),
        });
    }

    let mut best: Option<(Q, Vec<Q>)> = None;
    let mut offer = |x: Vec<Q>| {
        let obj: Q = x.iter().zip(s).map(|(xi, si)| xi * si).sum();
        if best.as_ref().is_none_or(|(b, _)| obj > *b) {
            best = Some((obj, x));
        }
    };
    for i in 0..n {
        if g[i] <= gamma {
            let mut x = vec![Q::zero(); n];
            x[i] = int(1);
            offer(x);
        }
    }
    for i in 0..n {
        for j in 0..n {
            if g[i] < gamma && gamma < g[j] {
                let t = (gamma - g[i]) / (g[j] - g[i]);
                let mut x = vec![Q::zero(); n];
                x[i] = int(1) - t;
                x[j] = t;
                offer(x);
            }
        }
    }
    let (obj, x) = best.expect("a feasible singleton exists when γ ≥ min g");
    let value = alpha * obj + beta;

    let shifted: Vec<Q> = g.iter().map(|gi| gi - gamma).collect();
    let (lambda, line) = minimise_max_line(s, &shifted)?;
    let dual = alpha * line + beta;

    Ok(LpOutcome {
        configs: Vec::new(),
        s: s.iter().copied().map(Fraction).collect(),
        g: g.iter().copied().map(Fraction).collect(),
        x: x.into_iter().map(Fraction).collect(),
        value: Fraction(value),
        dual_bound: Fraction(dual),
        lambda: Fraction(lambda),
    })
}

/// `s` and `g` over the configurations for `m` antennas.
pub fn config_vectors(m: u32) -> (Vec<TriangleConfig>, Vec<Q>, Vec<Q>) {
    let configs = enumerate_configs(m);
    let s = configs.iter().map(|&c| int(s_fn(c))).collect();
    let g = configs.iter().map(|&c| int(g_fn(c, m))).collect();
    (configs, s, g)
}

/// Triangle LP of a graph instance.
pub fn graph_lp(graph: &InterferenceGraph, m: u32) -> Result<LpOutcome> {
    let coef = GraphCoefficients::from_graph(graph, m)?;
    let (configs, s, g) = config_vectors(m);
    let mut out = lp_solve_exact(&s, &g, coef.alpha, coef.beta, coef.gamma)?;
    out.configs = configs;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleResult {
    pub value: Fraction,
    pub total: u64,
    pub dofs: BTreeMap<String, u32>,
    #[serde(skip)]
    pub assignment: Vec<u32>,
}

/// Exact optimum of the integer program `max (1/|V|) Σ d_v` subject to the
/// conditions of [`feasibility_check`], by depth-first search over the
/// vertices in decoding order with edge-constraint pruning. Among optimal
/// assignments the lexicographically smallest is returned.
pub fn integer_oracle(graph: &InterferenceGraph, m: u32) -> Result<OracleResult> {
    let nv = graph.len();
    let size = (m as f64 + 1.0).powi(nv as i32);
    if size > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            size,
            limit: ORACLE_LIMIT,
        });
    }
    if nv == 0 {
        return Ok(OracleResult {
            value: Fraction(Q::zero()),
            total: 0,
            dofs: BTreeMap::new(),
            assignment: Vec::new(),
        });
    }
    let idx = |p: EisensteinPoint| graph.index_of(p).expect("edge endpoint in graph");
    // Constraints are checked once the later endpoint is assigned.
    let mut earlier: Vec<Vec<usize>> = vec![Vec::new(); nv];
    let mut edges = Vec::new();
    for e in graph.directed_edges() {
        let (a, b) = (idx(e.tx), idx(e.rx));
        earlier[a.max(b)].push(a.min(b));
        edges.push((a, b));
    }
    let search = Search {
        m,
        earlier: &earlier,
        edges: &edges,
    };

    let best = (0..=m)
        .into_par_iter()
        .map(|first| {
            let mut d = vec![0u32; nv];
            d[0] = first;
            let mut best = None;
            search.descend(&mut d, 1, first as u64, &mut best);
            best
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (None, x) | (x, None) => x,
                (Some(a), Some(b)) => Some(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a }),
            },
        );
    let (total, assignment) = best.expect("the all-zero assignment is feasible");
    Ok(OracleResult {
        value: Fraction(q(total as i128, nv as i128)),
        total,
        dofs: graph
            .vertices()
            .iter()
            .zip(&assignment)
            .map(|(p, &d)| (p.to_string(), d))
            .collect(),
        assignment,
    })
}

struct Search<'a> {
    m: u32,
    earlier: &'a [Vec<usize>],
    edges: &'a [(usize, usize)],
}

impl Search<'_> {
    fn descend(&self, d: &mut [u32], pos: usize, sum: u64, best: &mut Option<(u64, Vec<u32>)>) {
        if pos == d.len() {
            if self.quadratic_ok(d) && best.as_ref().is_none_or(|(b, _)| sum > *b) {
                *best = Some((sum, d.to_vec()));
            }
            return;
        }
        let remaining = (d.len() - pos) as u64 * self.m as u64;
        if best.as_ref().is_some_and(|(b, _)| sum + remaining <= *b) {
            return;
        }
        for x in 0..=self.m {
            if self.earlier[pos].iter().any(|&u| d[u] + x > self.m) {
                break;
            }
            d[pos] = x;
            self.descend(d, pos + 1, sum + x as u64, best);
        }
        d[pos] = 0;
    }

    fn quadratic_ok(&self, d: &[u32]) -> bool {
        let m = self.m as i64;
        let own: i64 = d.iter().map(|&x| (m - x as i64) * x as i64).sum();
        let cross: i64 = self.edges.iter().map(|&(a, b)| d[a] as i64 * d[b] as i64).sum();
        2 * own >= cross
    }
}

/// Everything the `bound` command reports for one graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    #[serde(rename = "M")]
    pub m: u32,
    pub r: u32,
    pub vertices: usize,
    pub triangles: usize,
    pub external: usize,
    pub alpha: Fraction,
    pub beta: Fraction,
    pub gamma: Fraction,
    pub lambda: Fraction,
    pub dual_bound: Fraction,
    pub lp_value: Fraction,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_value: Option<Fraction>,
}

/// Dual bound at `lambda` (default: the breakpoint minimiser of
/// `max (s − λg)`), the exact LP value and optionally the integer optimum.
pub fn bound_report(graph: &InterferenceGraph, m: u32, lambda: Option<Q>, with_oracle: bool) -> Result<BoundReport> {
    let coef = GraphCoefficients::from_graph(graph, m)?;
    let (_, s, g) = config_vectors(m);
    let lambda = match lambda {
        Some(l) => l,
        None => best_lambda(&s, &g)?.0,
    };
    let dual = dual_bound(&s, &g, coef.alpha, coef.beta, coef.gamma, lambda)?;
    let lp = lp_solve_exact(&s, &g, coef.alpha, coef.beta, coef.gamma)?;
    let oracle_value = if with_oracle {
        Some(integer_oracle(graph, m)?.value)
    } else {
        None
    };
    Ok(BoundReport {
        m,
        r: graph.r(),
        vertices: coef.vertices,
        triangles: coef.triangles,
        external: coef.external,
        alpha: Fraction(coef.alpha),
        beta: Fraction(coef.beta),
        gamma: Fraction(coef.gamma),
        lambda: Fraction(lambda),
        dual_bound: Fraction(dual),
        lp_value: lp.value,
        oracle_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_graph;

    fn ints(v: &[i128]) -> Vec<Q> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn config_counts() {
        assert_eq!(enumerate_configs(1).len(), 2);
        assert_eq!(enumerate_configs(2).len(), 5);
        assert_eq!(enumerate_configs(3).len(), 8);
        assert_eq!(enumerate_configs(4).len(), 14);
        assert_eq!(g_fn(TriangleConfig::new(0, 0, 0), 7), 0);
    }

    #[test]
    fn single_config_lp() {
        let out = lp_solve_exact(&ints(&[4]), &ints(&[1]), q(1, 2), int(1), int(3)).unwrap();
        assert_eq!(out.x, vec![Fraction(int(1))]);
        assert_eq!(out.value, Fraction(int(3)));
    }

    #[test]
    fn infeasible_lp_is_reported() {
        let err = lp_solve_exact(&ints(&[1, 2]), &ints(&[1, 2]), int(1), int(0), int(0)).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn loose_constraint_picks_best_s() {
        let (_, s, g) = config_vectors(3);
        let out = lp_solve_exact(&s, &g, q(1, 3), q(1, 7), int(1000)).unwrap();
        assert_eq!(out.value.0, q(1, 3) * int(4) + q(1, 7));
        assert_eq!(out.value, out.dual_bound);
    }

    #[test]
    fn lambda_edge_cases() {
        assert_eq!(best_lambda(&ints(&[2, 2]), &ints(&[0, 0])).unwrap(), (int(0), q(2, 3)));
        assert_eq!(best_lambda(&ints(&[2, 5]), &ints(&[1, 3])), Err(Error::UnboundedLambda));
        let (_, s, g) = config_vectors(2);
        assert_eq!(dual_bound(&s, &g, q(1, 3), int(0), int(0), int(0)).unwrap(), int(1));
    }

    #[test]
    fn oracle_on_single_vertex_region() {
        let g = build_graph(1).unwrap();
        let res = integer_oracle(&g, 2).unwrap();
        assert_eq!(res.value.0, int(1));
        assert_eq!(res.assignment, vec![1; 7]);
    }

    #[test]
    fn oracle_refuses_large_instances() {
        let g = build_graph(3).unwrap();
        assert!(matches!(integer_oracle(&g, 2), Err(Error::OracleTooLarge { .. })));
    }

    #[test]
    fn feasibility_extremes() {
        let g = build_graph(2).unwrap();
        let all = |d: usize| g.vertices().iter().map(|&p| (p, d)).collect::<BTreeMap<_, _>>();
        assert!(feasibility_check(&g, &all(0), 2));
        assert!(!feasibility_check(&g, &all(2), 2));
        assert!(!feasibility_check(&g, &all(3), 2));
        assert!(!feasibility_check(&g, &BTreeMap::new(), 2));
    }
}
