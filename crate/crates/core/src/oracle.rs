//! Exact conditional expectations for bounded-support laws.
//!
//! [`enumerate_conditional`] sums over every planted tree with at most
//! `max_vertices` nodes by dynamic programming over (order, size): a
//! subtree's law is the ordered product of its children's laws, so each
//! ordered realization is counted once with its exact probability. Trees
//! above the cap are handled by a certified bound. [`enumerate_shapes`]
//! lists the same trees shape by shape with multiplicity weights and serves
//! as an independent cross-check on small caps.

use serde::{Deserialize, Serialize};

use crate::distributions::{order_distribution, Kind, OffspringDistribution, Provenance, TokunagaTable};
use crate::table::OrderTable;
use crate::trees::{branch_statistics, Tree};
use crate::{Error, Result};

/// Largest conditioning order accepted.
pub const MAX_ORDER: usize = 4;

/// A closed interval `[lower, upper]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    fn shift(self, d: f64) -> Self {
        Self {
            lower: self.lower + d,
            upper: self.upper + d,
        }
    }

    fn ratio(num: Self, den: Self) -> Self {
        Self {
            lower: num.lower / den.upper,
            upper: num.upper / den.lower,
        }
    }
}

/// Exact partial sums over order-`K` trees with at most `max_vertices`
/// nodes, and intervals certain to contain the full expectations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerationResult {
    pub k: usize,
    pub max_vertices: usize,
    /// `pi_K` from the order recursion.
    pub pi_k: f64,
    /// Probability of the enumerated order-`K` trees.
    pub covered_mass: f64,
    /// Bound on `P(order K, more than max_vertices nodes)`.
    pub omitted_mass_bound: f64,
    /// Bound on `E[vertices; order K, more than max_vertices nodes]`. Every
    /// statistic counts vertices, so this bounds each omitted contribution.
    pub truncation_bound: f64,
    /// `covered_mass >= (1 - 1e-6) pi_K`.
    pub sufficient: bool,
    /// `sum P(T) N_k(T)` over enumerated trees, `k = 1..=K`.
    pub branch_sums: Vec<f64>,
    pub side_sums: OrderTable<f64>,
    pub regular_sums: OrderTable<f64>,
    /// `E_K[N_k]` intervals.
    pub branch_means: Vec<Interval>,
    /// `E_K[n_(i,j)]` intervals.
    pub side_means: OrderTable<Interval>,
    pub regular_means: OrderTable<Interval>,
    /// Point values from partial sums, certified intervals in the
    /// provenance.
    pub tokunaga: TokunagaTable,
}

impl EnumerationResult {
    /// Interval for `t_(i,j) = E_K[n_(i,j)] / E_K[N_j]`.
    pub fn total_interval(&self, i: usize, j: usize) -> Interval {
        Interval::ratio(self.side_means.get(i, j), self.branch_means[j - 1])
    }

    /// Interval for `T_(i,j)`.
    pub fn side_interval(&self, i: usize, j: usize) -> Interval {
        let d = if i + 1 == j { -2.0 } else { 0.0 };
        self.total_interval(i, j).shift(d)
    }

    pub fn regular_interval(&self, i: usize, j: usize) -> Interval {
        Interval::ratio(self.regular_means.get(i, j), self.branch_means[j - 1])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn finite_coefficients(dist: &OffspringDistribution) -> Result<Vec<f64>> {
    match dist.kind() {
        Kind::ExplicitFinite(law) => {
            let q = law.coefficients().to_vec();
            if q.get(1).copied().unwrap_or(0.0) != 0.0 {
                return Err(Error::InvalidDistribution("q_1 must be 0".into()));
            }
            Ok(q)
        }
        _ => Err(Error::InvalidDistribution(format!(
            "enumeration needs a bounded-support law, got {}",
            dist.kind_name()
        ))),
    }
}

/// Layout of the statistic vector: `N_k`, then `n_(i,j)`, then `n^o_(i,j)`.
struct Layout {
    k: usize,
}

impl Layout {
    fn dim(&self) -> usize {
        self.k + 2 * self.k * self.k
    }
    fn branch(&self, k: usize) -> usize {
        k - 1
    }
    fn side(&self, i: usize, j: usize) -> usize {
        self.k + (i - 1) * self.k + (j - 1)
    }
    fn regular(&self, i: usize, j: usize) -> usize {
        self.k + self.k * self.k + (i - 1) * self.k + (j - 1)
    }
}

/// Exact sums over order-`K` planted trees with at most `max_vertices`
/// nodes under a bounded-support law, with certified intervals for the
/// conditional expectations `E_K[N_k]`, `E_K[n_(i,j)]` and `E_K[n^o_(i,j)]`.
///
/// A cap too small to cover `(1 - 1e-6) pi_K` still returns a result, with
/// `sufficient = false` and correspondingly wide intervals.
pub fn enumerate_conditional(dist: &OffspringDistribution, k: usize, max_vertices: usize) -> Result<EnumerationResult> {
    let q = finite_coefficients(dist)?;
    if !(1..=MAX_ORDER).contains(&k) {
        return Err(Error::Domain {
            what: "K",
            value: k as f64,
            expected: "1 <= K <= 4",
        });
    }
    if max_vertices < 2 {
        return Err(Error::Domain {
            what: "max_vertices",
            value: max_vertices as f64,
            expected: "max_vertices >= 2",
        });
    }
    let pi_k = order_distribution(dist, k)?.pi(k);
    let lay = Layout { k };
    let d = lay.dim();
    let b = q.len() - 1;
    let smax = max_vertices - 1; // subtree below the root

    // full[s][ord - 1] = (mass, stats); part[m][s][state] = (mass, stats, child-order counts)
    let wf = 1 + d;
    let wp = 1 + d + k;
    let states = 2 * k;
    let fi = |s: usize, o: usize| (s * k + (o - 1)) * wf;
    let pi_ = |s: usize, st: usize| (s * states + st) * wp;
    let state = |r: usize, two: bool| 2 * (r - 1) + usize::from(two);
    let mut full = vec![0.0; (smax + 1) * k * wf];
    let mut part: Vec<Vec<f64>> = vec![Vec::new(); b + 1];
    for p in part.iter_mut().skip(1) {
        *p = vec![0.0; (smax + 1) * states * wp];
    }

    for s in 1..=smax {
        if s == 1 {
            full[fi(1, 1)] = q[0];
        } else {
            for (x, &qx) in q.iter().enumerate().skip(2) {
                if qx == 0.0 {
                    continue;
                }
                for r in 1..=k {
                    for two in [false, true] {
                        let src = pi_(s - 1, state(r, two));
                        let cell = &part[x][src..src + wp];
                        if cell[0] == 0.0 {
                            continue;
                        }
                        let ord = if two { r + 1 } else { r };
                        if ord > k {
                            continue;
                        }
                        let mut add = cell[1..1 + d].to_vec();
                        let mm = &cell[1 + d..];
                        for i in 1..ord {
                            let c = mm[i - 1];
                            add[lay.branch(i)] += c;
                            add[lay.side(i, ord)] += c;
                            if !two {
                                add[lay.regular(i, ord)] += c;
                            }
                        }
                        let dst = fi(s, ord);
                        full[dst] += qx * cell[0];
                        for (t, a) in add.iter().enumerate() {
                            full[dst + 1 + t] += qx * a;
                        }
                    }
                }
            }
        }
        if b >= 1 {
            // one child: the child itself
            for o in 1..=k {
                let src = fi(s, o);
                if full[src] == 0.0 {
                    continue;
                }
                let dst = pi_(s, state(o, false));
                part[1][dst..dst + 1 + d].copy_from_slice(&full[src..src + 1 + d]);
                part[1][dst + 1 + d + (o - 1)] = full[src];
            }
        }
        for m in 2..=b {
            let (lo, hi) = part.split_at_mut(m);
            let prev = &lo[m - 1];
            let cur = &mut hi[0];
            for a in (m - 1)..s {
                let sf = s - a;
                for r in 1..=k {
                    for two in [false, true] {
                        let g = pi_(a, state(r, two));
                        let pg = prev[g];
                        if pg == 0.0 {
                            continue;
                        }
                        for o in 1..=k {
                            let f = fi(sf, o);
                            let pf = full[f];
                            if pf == 0.0 {
                                continue;
                            }
                            let (nr, ntwo) = match o.cmp(&r) {
                                std::cmp::Ordering::Greater => (o, false),
                                std::cmp::Ordering::Equal => (r, true),
                                std::cmp::Ordering::Less => (r, two),
                            };
                            let dst = pi_(s, state(nr, ntwo));
                            cur[dst] += pg * pf;
                            for t in 0..d {
                                cur[dst + 1 + t] += prev[g + 1 + t] * pf + pg * full[f + 1 + t];
                            }
                            for t in 0..k {
                                cur[dst + 1 + d + t] += prev[g + 1 + d + t] * pf;
                            }
                            cur[dst + 1 + d + (o - 1)] += pg * pf;
                        }
                    }
                }
            }
        }
    }

    let mut covered = 0.0;
    let mut sums = vec![0.0; d];
    for s in 1..=smax {
        let c = fi(s, k);
        covered += full[c];
        for t in 0..d {
            sums[t] += full[c + 1 + t];
        }
        sums[lay.branch(k)] += full[c];
    }

    let (omitted_mass_bound, size_bound) = size_tail_bounds(&q, k, smax);
    // the full tree has one more node than the subtree
    let truncation_bound = size_bound * (1.0 + 1.0 / (smax + 1) as f64);
    let omitted_mass_bound = omitted_mass_bound.min((pi_k - covered).max(0.0) * (1.0 + 1e-12) + 1e-300);

    // floating-point slack for sums of positive terms over smax^2 products
    let eps = 1e-12 + 8.0 * f64::EPSILON * (smax * smax) as f64;
    let mean = |partial: f64| Interval {
        lower: partial / pi_k * (1.0 - eps),
        upper: (partial + truncation_bound) / pi_k * (1.0 + eps),
    };
    let branch_sums: Vec<f64> = (1..=k).map(|i| sums[lay.branch(i)]).collect();
    let mut side_sums = OrderTable::new(k);
    let mut regular_sums = OrderTable::new(k);
    for (i, j) in side_sums.pairs().collect::<Vec<_>>() {
        side_sums.set(i, j, sums[lay.side(i, j)]);
        regular_sums.set(i, j, sums[lay.regular(i, j)]);
    }
    let branch_means: Vec<Interval> = branch_sums.iter().map(|&v| mean(v)).collect();
    let side_means = side_sums.map(|_, _, &v| mean(v));
    let regular_means = regular_sums.map(|_, _, &v| mean(v));

    let total = side_sums.map(|_, j, &v| v / branch_sums[j - 1]);
    let regular = regular_sums.map(|_, j, &v| v / branch_sums[j - 1]);
    let bound = |t: &OrderTable<Interval>, up: bool| t.map(|_, _, iv| if up { iv.upper } else { iv.lower });
    let total_iv = side_means.map(|_, j, &v| Interval::ratio(v, branch_means[j - 1]));
    let regular_iv = regular_means.map(|_, j, &v| Interval::ratio(v, branch_means[j - 1]));
    let tokunaga = TokunagaTable::from_totals(
        total,
        regular,
        Provenance::Oracle {
            covered_mass: covered,
            total_lower: bound(&total_iv, false),
            total_upper: bound(&total_iv, true),
            regular_lower: bound(&regular_iv, false),
            regular_upper: bound(&regular_iv, true),
        },
    );

    Ok(EnumerationResult {
        k,
        max_vertices,
        pi_k,
        covered_mass: covered,
        omitted_mass_bound,
        truncation_bound,
        sufficient: covered >= (1.0 - 1e-6) * pi_k,
        branch_sums,
        side_sums,
        regular_sums,
        branch_means,
        side_means,
        regular_means,
        tokunaga,
    })
}

/// `E[y^size; order <= K]` of a Galton-Watson subtree, or `None` past the
/// radius of convergence. With `psi = phi_(k-1)(y)`, a vertex of order at
/// most `k` has all children of order below `k` or exactly one of order
/// `k`, so `phi_k = y A / (1 - y B)` with
/// `A = q_0 + sum q_x (1 - x) psi^x` and `B = sum q_x x psi^(x-1)`.
fn size_mgf(q: &[f64], k: usize, y: f64) -> Option<f64> {
    let mut phi = y * q[0];
    for _ in 2..=k {
        let psi = phi;
        let mut a = q[0];
        let mut b = 0.0;
        for (x, &qx) in q.iter().enumerate().skip(2) {
            let xf = x as f64;
            a += qx * (1.0 - xf) * psi.powi(x as i32);
            b += qx * xf * psi.powi(x as i32 - 1);
        }
        if !(y * b < 1.0) {
            return None;
        }
        phi = y * a / (1.0 - y * b);
        if !(phi.is_finite() && phi > 0.0) {
            return None;
        }
    }
    Some(phi)
}

/// Chernoff bounds for subtree sizes above `smax` among order-`<= K`
/// subtrees: `P(size > smax) <= y^-(smax+1) phi(y)` and, once
/// `smax + 1 >= 1 / ln y`, `E[size; size > smax] <= (smax+1) y^-(smax+1) phi(y)`.
fn size_tail_bounds(q: &[f64], k: usize, smax: usize) -> (f64, f64) {
    let n = (smax + 1) as f64;
    let mut best_mass = f64::INFINITY;
    let mut best_size = f64::INFINITY;
    for step in 0..=400 {
        let t = 10f64.powf(-6.0 + 6.5 * step as f64 / 400.0);
        let y = 1.0 + t;
        let Some(phi) = size_mgf(q, k, y) else { continue };
        let tail = (phi.ln() - n * y.ln()).exp();
        best_mass = best_mass.min(tail);
        if n * y.ln() >= 1.0 {
            best_size = best_size.min(n * tail);
        }
    }
    (best_mass, best_size)
}

/// All planted trees with at most `max_vertices` nodes, one per unlabeled
/// shape, each with the total probability of its ordered realizations.
pub fn enumerate_shapes(dist: &OffspringDistribution, max_vertices: usize) -> Result<Vec<(Tree, f64)>> {
    let q = finite_coefficients(dist)?;
    if max_vertices > 16 {
        return Err(Error::Domain {
            what: "max_vertices",
            value: max_vertices as f64,
            expected: "max_vertices <= 16 for shape enumeration",
        });
    }
    // shapes[id] = (size, sorted child ids, weight)
    let mut shapes: Vec<(usize, Vec<usize>, f64)> = Vec::new();
    let mut by_size: Vec<Vec<usize>> = vec![Vec::new(); max_vertices];
    for s in 1..max_vertices {
        if s == 1 {
            if q[0] > 0.0 {
                by_size[1].push(shapes.len());
                shapes.push((1, Vec::new(), q[0]));
            }
            continue;
        }
        for (x, &qx) in q.iter().enumerate().skip(2) {
            if qx == 0.0 {
                continue;
            }
            let mut found = Vec::new();
            multisets(&by_size, &shapes, x, s - 1, 0, &mut Vec::new(), &mut found);
            for kids in found {
                let mut w = qx * multinomial(&kids);
                for &c in &kids {
                    w *= shapes[c].2;
                }
                by_size[s].push(shapes.len());
                shapes.push((s, kids, w));
            }
        }
    }
    let mut out = Vec::new();
    for (id, shape) in shapes.iter().enumerate() {
        let mut children = vec![vec![1]];
        build(&shapes, id, &mut children);
        out.push((Tree::from_valid_children(children, 0), shape.2));
    }
    Ok(out)
}

/// Nondecreasing id sequences of length `x` whose sizes sum to `total`.
fn multisets(
    by_size: &[Vec<usize>],
    shapes: &[(usize, Vec<usize>, f64)],
    x: usize,
    total: usize,
    min_id: usize,
    cur: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if x == 0 {
        if total == 0 {
            out.push(cur.clone());
        }
        return;
    }
    if total < x {
        return;
    }
    for ids in by_size.iter().take(total - (x - 1) + 1).skip(1) {
        for &id in ids {
            if id < min_id {
                continue;
            }
            cur.push(id);
            multisets(by_size, shapes, x - 1, total - shapes[id].0, id, cur, out);
            cur.pop();
        }
    }
}

/// `x! / prod m_i!` over runs of equal ids.
fn multinomial(kids: &[usize]) -> f64 {
    let fact = |n: usize| (1..=n).map(|v| v as f64).product::<f64>();
    let mut w = fact(kids.len());
    let mut i = 0;
    while i < kids.len() {
        let j = kids[i..].iter().take_while(|&&c| c == kids[i]).count();
        w /= fact(j);
        i += j;
    }
    w
}

fn build(shapes: &[(usize, Vec<usize>, f64)], id: usize, children: &mut Vec<Vec<usize>>) {
    let v = children.len();
    children.push(Vec::new());
    for &c in &shapes[id].1 {
        let cv = children.len();
        children[v].push(cv);
        build(shapes, c, children);
    }
}

/// Sums of `P(T) stat(T)` over order-`K` shapes, for cross-checks.
pub fn shape_sums(shapes: &[(Tree, f64)], k: usize) -> Result<(f64, Vec<f64>, OrderTable<f64>, OrderTable<f64>)> {
    let mut mass = 0.0;
    let mut branch = vec![0.0; k];
    let mut side = OrderTable::new(k);
    let mut regular = OrderTable::new(k);
    for (t, w) in shapes {
        let s = branch_statistics(t)?;
        if s.order != k {
            continue;
        }
        mass += w;
        for (i, &n) in s.branch_counts.iter().enumerate() {
            branch[i] += w * n as f64;
        }
        for (i, j) in side.pairs().collect::<Vec<_>>() {
            *side.get_mut(i, j) += w * s.n_side.get(i, j) as f64;
            *regular.get_mut(i, j) += w * s.n_side_regular.get(i, j) as f64;
        }
    }
    Ok((mass, branch, side, regular))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::tokunaga_analytic;

    fn law() -> OffspringDistribution {
        OffspringDistribution::finite(vec![0.6, 0.0, 0.3, 0.1]).unwrap()
    }

    #[test]
    fn binary_order_one() {
        let r = enumerate_conditional(&OffspringDistribution::binary(), 1, 50).unwrap();
        assert!((r.covered_mass - 0.5).abs() < 1e-15);
        assert!((r.branch_sums[0] - 0.5).abs() < 1e-15);
        assert!(r.sufficient);
    }

    #[test]
    fn dp_matches_shape_enumeration() {
        for d in [OffspringDistribution::binary(), law()] {
            let shapes = enumerate_shapes(&d, 12).unwrap();
            for k in 1..=3 {
                let r = enumerate_conditional(&d, k, 12).unwrap();
                let (mass, branch, side, regular) = shape_sums(&shapes, k).unwrap();
                assert!((r.covered_mass - mass).abs() < 1e-14, "K={k}");
                for i in 0..k {
                    assert!((r.branch_sums[i] - branch[i]).abs() < 1e-14);
                }
                for (i, j) in side.pairs() {
                    assert!((r.side_sums.get(i, j) - side.get(i, j)).abs() < 1e-14);
                    assert!((r.regular_sums.get(i, j) - regular.get(i, j)).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn shape_weights_sum_to_size_probabilities() {
        // binary: P(subtree has 2m+1 nodes) = Catalan(m) / 2^(2m+1)
        let shapes = enumerate_shapes(&OffspringDistribution::binary(), 8).unwrap();
        let total: f64 = shapes.iter().map(|s| s.1).sum();
        let cat = [1.0, 1.0, 2.0, 5.0];
        let expected: f64 = (0..4).map(|m| cat[m] / 2f64.powi(2 * m as i32 + 1)).sum();
        assert!((total - expected).abs() < 1e-15);
        assert_eq!(shapes.len(), 1 + 1 + 1 + 2);
    }

    #[test]
    fn mgf_matches_dp_mass() {
        let q = [0.5, 0.0, 0.5];
        // phi_2(1) = pi_1 + pi_2 = 3/4
        assert!((size_mgf(&q, 2, 1.0).unwrap() - 0.75).abs() < 1e-15);
        assert!(size_mgf(&q, 2, 1.5).is_none());
    }

    #[test]
    fn analytic_values_inside_intervals() {
        for d in [OffspringDistribution::binary(), law()] {
            for k in 2..=3 {
                let r = enumerate_conditional(&d, k, 400).unwrap();
                assert!(r.sufficient, "{} K={k}: {}", d.kind_name(), r.covered_mass / r.pi_k);
                let a = tokunaga_analytic(&d, k).unwrap();
                for (i, j) in a.t_side.pairs() {
                    let iv = r.side_interval(i, j);
                    assert!(iv.contains(a.t_side.get(i, j)), "({i},{j}) {iv:?} vs {}", a.t_side.get(i, j));
                    assert!(r.regular_interval(i, j).contains(a.t_regular.get(i, j)));
                    assert!(iv.width() < 1e-4);
                }
            }
        }
    }

    #[test]
    fn small_cap_is_flagged() {
        let r = enumerate_conditional(&OffspringDistribution::binary(), 3, 10).unwrap();
        assert!(!r.sufficient);
        assert!(r.covered_mass < r.pi_k);
    }

    #[test]
    fn rejects_unbounded_laws_and_large_orders() {
        assert!(enumerate_conditional(&OffspringDistribution::zipf_example(), 2, 10).is_err());
        assert!(enumerate_conditional(&OffspringDistribution::binary(), 5, 10).is_err());
    }
}
