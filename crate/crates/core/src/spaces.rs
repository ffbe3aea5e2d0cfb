//! Finite metric spaces, probability vectors and the BL / TV distances.
//!
//! Both distances carry the factor one half: `tv = 1/2 sum |p - q|` and the
//! BL norm is the sup of `1/2 |sum h (p - q)|` over functions bounded by one
//! and 1-Lipschitz.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lp;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMetricSpace<S = f64> {
    labels: Vec<String>,
    metric: Vec<Vec<S>>,
}

impl<S: Scalar> FiniteMetricSpace<S> {
    pub fn new(labels: Vec<String>, metric: Vec<Vec<S>>) -> Result<Self> {
        let m = labels.len();
        if m == 0 {
            return invalid("metric space needs at least one point");
        }
        if metric.len() != m || metric.iter().any(|r| r.len() != m) {
            return invalid(format!("metric must be a {m}x{m} matrix"));
        }
        let scale = metric
            .iter()
            .flatten()
            .fold(S::one(), |acc, v| acc.max(v.abs()));
        let tol = S::mass_tol() * scale;
        for i in 0..m {
            if metric[i][i] != S::zero() {
                return invalid(format!("metric diagonal at {i} is not zero"));
            }
            for j in 0..m {
                let d = metric[i][j];
                if !d.is_finite() || d < S::zero() {
                    return invalid(format!("metric entry ({i},{j}) must be finite and >= 0"));
                }
                if i != j && d <= S::zero() {
                    return invalid(format!("points {i} and {j} are at distance zero"));
                }
                if (d - metric[j][i]).abs() > tol {
                    return invalid(format!("metric is not symmetric at ({i},{j})"));
                }
            }
        }
        for i in 0..m {
            for j in 0..m {
                for k in 0..m {
                    if metric[i][k] > metric[i][j] + metric[j][k] + tol {
                        return invalid(format!("triangle inequality fails for ({i},{j},{k})"));
                    }
                }
            }
        }
        Ok(Self { labels, metric })
    }

    /// `n` points, pairwise distance `d`.
    pub fn discrete(n: usize, d: S) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        let metric = (0..n)
            .map(|i| (0..n).map(|j| if i == j { S::zero() } else { d }).collect())
            .collect();
        Self::new(labels, metric)
    }

    /// Points `0..n` on a line with unit spacing.
    pub fn line(n: usize) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        let metric = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| S::from_usize(i.abs_diff(j)).unwrap())
                    .collect()
            })
            .collect();
        Self::new(labels, metric)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn metric(&self) -> &[Vec<S>] {
        &self.metric
    }

    pub fn d(&self, i: usize, j: usize) -> S {
        self.metric[i][j]
    }

    /// Product space with the sum metric; point `(x, a)` sits at `x * |A| + a`.
    pub fn product(&self, other: &Self) -> Self {
        let (m, k) = (self.len(), other.len());
        let mut labels = Vec::with_capacity(m * k);
        let mut metric = vec![vec![S::zero(); m * k]; m * k];
        for x in 0..m {
            for a in 0..k {
                labels.push(format!("{}|{}", self.labels[x], other.labels[a]));
                for y in 0..m {
                    for b in 0..k {
                        metric[x * k + a][y * k + b] = self.metric[x][y] + other.metric[a][b];
                    }
                }
            }
        }
        Self { labels, metric }
    }

    /// Relabel the points: new point `i` is old point `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        check_perm(perm, self.len())?;
        let labels = perm.iter().map(|&p| self.labels[p].clone()).collect();
        let metric = perm
            .iter()
            .map(|&p| perm.iter().map(|&q| self.metric[p][q]).collect())
            .collect();
        Ok(Self { labels, metric })
    }
}

pub(crate) fn check_perm(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return invalid("permutation has the wrong length");
    }
    for &p in perm {
        if p >= n || seen[p] {
            return invalid("not a permutation");
        }
        seen[p] = true;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Dist<S = f64> {
    weights: Vec<S>,
}

impl<S: Scalar> Dist<S> {
    pub fn new(weights: Vec<S>) -> Result<Self> {
        check_mass(&weights)?;
        Ok(Self { weights })
    }

    /// Accepts a vector whose mass is one up to accumulated rounding, clips
    /// tiny negative entries and rescales.
    pub fn renormalized(mut weights: Vec<S>) -> Result<Self> {
        let slack = S::lit(1e-9);
        if weights.is_empty() || weights.iter().any(|w| !w.is_finite() || *w < -slack) {
            return invalid("weights must be finite and nonnegative");
        }
        for w in weights.iter_mut() {
            if *w < S::zero() {
                *w = S::zero();
            }
        }
        let total: S = weights.iter().copied().sum();
        if (total - S::one()).abs() > slack {
            return invalid(format!("weights sum to {total}, not 1"));
        }
        for w in weights.iter_mut() {
            *w = *w / total;
        }
        Ok(Self { weights })
    }

    pub(crate) fn from_raw(weights: Vec<S>) -> Self {
        debug_assert!(check_mass(&weights).is_ok(), "bad raw dist {:?}", weights);
        Self { weights }
    }

    pub fn dirac(n: usize, i: usize) -> Self {
        let mut w = vec![S::zero(); n];
        w[i] = S::one();
        Self { weights: w }
    }

    pub fn uniform(n: usize) -> Self {
        let v = S::one() / S::from_usize(n).unwrap();
        Self { weights: vec![v; n] }
    }

    /// Empirical measure of the given sample of point indices.
    pub fn empirical(n: usize, sample: &[usize]) -> Result<Self> {
        if sample.is_empty() {
            return invalid("empirical measure of an empty sample");
        }
        let mut counts = vec![0usize; n];
        for &s in sample {
            if s >= n {
                return invalid(format!("sample point {s} outside space of size {n}"));
            }
            counts[s] += 1;
        }
        let total = S::from_usize(sample.len()).unwrap();
        Ok(Self {
            weights: counts
                .into_iter()
                .map(|c| S::from_usize(c).unwrap() / total)
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<S> {
        self.weights
    }

    pub fn get(&self, i: usize) -> S {
        self.weights[i]
    }

    pub fn expect(&self, f: &[S]) -> S {
        self.weights.iter().zip(f).map(|(w, v)| *w * *v).sum()
    }

    /// `gamma * self + (1 - gamma) * other`.
    pub fn mix(&self, other: &Self, gamma: S) -> Self {
        Self {
            weights: self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| gamma * *a + (S::one() - gamma) * *b)
                .collect(),
        }
    }

    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            weights: perm.iter().map(|&p| self.weights[p]).collect(),
        }
    }
}

fn check_mass<S: Scalar>(weights: &[S]) -> Result<()> {
    if weights.is_empty() {
        return invalid("distribution over an empty set");
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < S::zero()) {
        return invalid(format!("weight {i} is negative or not finite"));
    }
    let total: S = weights.iter().copied().sum();
    if (total - S::one()).abs() > S::mass_tol() {
        return invalid(format!("weights sum to {total}, not 1"));
    }
    Ok(())
}

/// Joint state-action distribution, row-major over (state, action).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDist<S = f64> {
    n_states: usize,
    n_actions: usize,
    weights: Vec<S>,
}

impl<S: Scalar> JointDist<S> {
    pub fn new(n_states: usize, n_actions: usize, weights: Vec<S>) -> Result<Self> {
        if n_states == 0 || n_actions == 0 || weights.len() != n_states * n_actions {
            return invalid(format!(
                "joint needs {}x{} weights, got {}",
                n_states,
                n_actions,
                weights.len()
            ));
        }
        check_mass(&weights)?;
        Ok(Self { n_states, n_actions, weights })
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n_states = rows.len();
        let n_actions = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n_actions) {
            return invalid("joint rows have unequal lengths");
        }
        Self::new(n_states, n_actions, rows.into_iter().flatten().collect())
    }

    pub(crate) fn from_raw(n_states: usize, n_actions: usize, weights: Vec<S>) -> Self {
        debug_assert_eq!(weights.len(), n_states * n_actions);
        Self { n_states, n_actions, weights }
    }

    /// `psi(x, a) = xi(x) * kernel[x](a)`.
    pub fn compose(xi: &Dist<S>, kernel: &[Dist<S>]) -> Result<Self> {
        if kernel.len() != xi.len() {
            return invalid("kernel must have one row per state");
        }
        let k = kernel[0].len();
        if kernel.iter().any(|r| r.len() != k) {
            return invalid("kernel rows have unequal lengths");
        }
        let mut w = Vec::with_capacity(xi.len() * k);
        for (x, row) in kernel.iter().enumerate() {
            for a in 0..k {
                w.push(xi.get(x) * row.get(a));
            }
        }
        Ok(Self { n_states: xi.len(), n_actions: k, weights: w })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn weights(&self) -> &[S] {
        &self.weights
    }

    pub fn get(&self, x: usize, a: usize) -> S {
        self.weights[x * self.n_actions + a]
    }

    pub fn row(&self, x: usize) -> &[S] {
        &self.weights[x * self.n_actions..(x + 1) * self.n_actions]
    }

    pub fn state_marginal(&self) -> Dist<S> {
        Dist {
            weights: (0..self.n_states).map(|x| self.row(x).iter().copied().sum()).collect(),
        }
    }

    /// View as a distribution on the product space (index `x * |A| + a`).
    pub fn as_dist(&self) -> Dist<S> {
        Dist { weights: self.weights.clone() }
    }

    pub fn mix(&self, other: &Self, gamma: S) -> Self {
        Self {
            n_states: self.n_states,
            n_actions: self.n_actions,
            weights: self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| gamma * *a + (S::one() - gamma) * *b)
                .collect(),
        }
    }
}

fn check_dims<S: Scalar>(n: usize, p: &Dist<S>, q: &Dist<S>) -> Result<()> {
    if p.len() != n || q.len() != n {
        return invalid(format!(
            "dimension mismatch: space has {} points, distributions have {} and {}",
            n,
            p.len(),
            q.len()
        ));
    }
    Ok(())
}

pub fn tv_distance<S: Scalar>(p: &Dist<S>, q: &Dist<S>) -> Result<S> {
    check_dims(p.len(), p, q)?;
    let s: S = p.weights.iter().zip(&q.weights).map(|(a, b)| (*a - *b).abs()).sum();
    Ok((s * S::lit(0.5)).min(S::one()))
}

/// BL distance as a linear program over `g = h + 1` in `[0, 2]^m`.
pub fn bl_distance<S: Scalar>(space: &FiniteMetricSpace<S>, p: &Dist<S>, q: &Dist<S>) -> Result<S> {
    let m = space.len();
    check_dims(m, p, q)?;
    if m == 1 {
        return Ok(S::zero());
    }
    let half = S::lit(0.5);
    let c: Vec<S> = (0..m).map(|i| half * (p.get(i) - q.get(i))).collect();
    let mut a = Vec::with_capacity(m * m);
    let mut b = Vec::with_capacity(m * m);
    for i in 0..m {
        let mut row = vec![S::zero(); m];
        row[i] = S::one();
        a.push(row);
        b.push(S::lit(2.0));
    }
    for i in 0..m {
        for j in 0..m {
            if i != j && space.d(i, j) < S::lit(2.0) {
                let mut row = vec![S::zero(); m];
                row[i] = S::one();
                row[j] = -S::one();
                a.push(row);
                b.push(space.d(i, j));
            }
        }
    }
    let sol = lp::maximize(&c, &a, &b)?;
    Ok(sol.value.max(S::zero()).min(S::one()))
}

/// `||p - q||_{L-BL} = L ||p - q||_BL`.
pub fn bl_distance_scaled<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    p: &Dist<S>,
    q: &Dist<S>,
    l: S,
) -> Result<S> {
    if !(l > S::zero()) {
        return invalid("scale must be positive");
    }
    Ok(l * bl_distance(space, p, q)?)
}

/// Smallest `K` such that `(g - m) / K` is a BL test function for some
/// constant `m`; gives `|sum g (p - q)| <= 2 K ||p - q||_BL`.
pub fn bl_dual_constant<S: Scalar>(space: &FiniteMetricSpace<S>, g: &[S]) -> S {
    let (lo, hi) = g
        .iter()
        .fold((S::infinity(), S::neg_infinity()), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let mut k = (hi - lo) * S::lit(0.5);
    for i in 0..g.len() {
        for j in 0..i {
            k = k.max((g[i] - g[j]).abs() / space.d(i, j));
        }
    }
    k
}

pub const COVERING_MAX_POINTS: usize = 8;
const COVERING_NODE_LIMIT: u64 = 50_000_000;

/// Grid centres `-1 + (2k + 1) / j`, `k = 0..j`.
fn grid(j: usize) -> Vec<f64> {
    (0..j).map(|k| -1.0 + (2 * k + 1) as f64 / j as f64).collect()
}

struct Cover<'a> {
    d: &'a [Vec<f64>],
    centers: Vec<f64>,
    r: f64,
    assign: Vec<usize>,
    count: u64,
    cap: u64,
    nodes: u64,
    keep: Option<Vec<Vec<f64>>>,
}

impl Cover<'_> {
    fn bounds(&self, c: f64) -> (f64, f64) {
        ((c - self.r).max(-1.0), (c + self.r).min(1.0))
    }

    // false aborts the search
    fn dfs(&mut self, depth: usize) -> bool {
        self.nodes += 1;
        if self.nodes > COVERING_NODE_LIMIT {
            return false;
        }
        let m = self.d.len();
        if depth == m {
            self.count += 1;
            if let Some(k) = self.keep.as_mut() {
                k.push(self.assign.iter().map(|&i| self.centers[i]).collect());
            }
            return self.count <= self.cap;
        }
        let tol = 1e-12;
        'outer: for ci in 0..self.centers.len() {
            let (lo, hi) = self.bounds(self.centers[ci]);
            for y in 0..depth {
                let (lo_y, hi_y) = self.bounds(self.centers[self.assign[y]]);
                let dxy = self.d[depth][y];
                if lo > hi_y + dxy + tol || lo_y > hi + dxy + tol {
                    continue 'outer;
                }
            }
            self.assign.push(ci);
            let go = self.dfs(depth + 1);
            self.assign.pop();
            if !go {
                return false;
            }
        }
        true
    }
}

fn cover_run<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    j: usize,
    cap: u64,
    keep: bool,
) -> Result<(Option<u64>, Option<Vec<Vec<f64>>>)> {
    if j == 0 {
        return invalid("covering grid index j must be positive");
    }
    if space.len() > COVERING_MAX_POINTS {
        return Err(Error::Capacity(format!(
            "covering enumeration supports at most {} points (got {}); supply n_j externally",
            COVERING_MAX_POINTS,
            space.len()
        )));
    }
    let d: Vec<Vec<f64>> = space
        .metric()
        .iter()
        .map(|r| r.iter().map(|v| v.to_f64_lossy()).collect())
        .collect();
    let mut c = Cover {
        d: &d,
        centers: grid(j),
        r: 1.0 / j as f64,
        assign: Vec::new(),
        count: 0,
        cap,
        nodes: 0,
        keep: keep.then(Vec::new),
    };
    let finished = c.dfs(0);
    if !finished && c.nodes > COVERING_NODE_LIMIT {
        return Err(Error::Capacity(format!(
            "covering enumeration for j = {j} exceeded {COVERING_NODE_LIMIT} nodes"
        )));
    }
    if c.count > cap {
        return Ok((None, None));
    }
    Ok((Some(c.count), c.keep))
}

/// Upper bound on the number of `1/j`-balls (sup norm) needed to cover the
/// BL test functions on `space`. Counts grid functions within `1/j` of some
/// BL function.
pub fn covering_number_upper<S: Scalar>(space: &FiniteMetricSpace<S>, j: usize) -> Result<u64> {
    Ok(cover_run(space, j, u64::MAX, false)?.0.unwrap_or(u64::MAX))
}

/// As [`covering_number_upper`] but gives up (returns `None`) once the count
/// exceeds `cap`.
pub fn covering_number_capped<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    j: usize,
    cap: u64,
) -> Result<Option<u64>> {
    Ok(cover_run(space, j, cap, false)?.0)
}

/// The retained grid centres themselves.
pub fn covering_centers<S: Scalar>(space: &FiniteMetricSpace<S>, j: usize) -> Result<Vec<Vec<f64>>> {
    Ok(cover_run(space, j, u64::MAX, true)?.1.unwrap_or_default())
}

/// `1/(2j) + sqrt(pi) n_j / sqrt(2N)`.
pub fn concentration_term(j: usize, n_j: u64, n: usize) -> f64 {
    0.5 / j as f64 + std::f64::consts::PI.sqrt() * n_j as f64 / (2.0 * n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationBound {
    pub value: f64,
    pub j: usize,
    pub n_j: u64,
    /// false when the trivial count `j^m` replaced the enumeration
    pub enumerated: bool,
}

pub const DEFAULT_J_MAX: usize = 64;

/// Minimises the concentration term over `j = 1..=j_max`. Spaces too large
/// for enumeration fall back to the trivial count `j^m`.
pub fn concentration_bound<S: Scalar>(
    space: &FiniteMetricSpace<S>,
    n: usize,
    j_max: usize,
) -> Result<ConcentrationBound> {
    if n == 0 {
        return invalid("N must be positive");
    }
    let m = space.len();
    let enumerate = m <= COVERING_MAX_POINTS;
    let mut best = ConcentrationBound { value: concentration_term(1, 1, n), j: 1, n_j: 1, enumerated: true };
    let scale = std::f64::consts::PI.sqrt() / (2.0 * n as f64).sqrt();
    for j in 2..=j_max.max(1) {
        let head = 0.5 / j as f64;
        if head >= best.value {
            break;
        }
        let room = (best.value - head) / scale;
        let cap = if room >= u64::MAX as f64 { u64::MAX } else { room.floor() as u64 };
        let count = if enumerate {
            match cover_run(space, j, cap, false) {
                Ok((c, _)) => c,
                Err(Error::Capacity(_)) => break,
                Err(e) => return Err(e),
            }
        } else {
            let t = (j as f64).powi(m as i32);
            (t <= cap as f64).then_some(t as u64)
        };
        if let Some(nj) = count {
            let v = concentration_term(j, nj, n);
            if v < best.value {
                best = ConcentrationBound { value: v, j, n_j: nj, enumerated: enumerate };
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two(d: f64) -> FiniteMetricSpace {
        FiniteMetricSpace::discrete(2, d).unwrap()
    }

    #[test]
    fn metric_validation() {
        let bad = FiniteMetricSpace::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]],
        );
        assert!(bad.is_err());
        assert!(FiniteMetricSpace::<f64>::new(vec![], vec![]).is_err());
        assert!(FiniteMetricSpace::new(vec!["a".into(), "b".into()], vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
    }

    #[test]
    fn bl_examples() {
        let p = Dist::dirac(2, 0);
        let q = Dist::dirac(2, 1);
        assert!((bl_distance(&two(3.0), &p, &q).unwrap() - 1.0).abs() < 1e-12);
        assert!((bl_distance(&two(1.0), &p, &q).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(bl_distance(&two(1.0), &p, &p).unwrap(), 0.0);
        let s = bl_distance_scaled(&two(1.0), &p, &q, 3.0).unwrap();
        assert!((s - 1.5).abs() < 1e-12);
    }

    #[test]
    fn bl_dimension_mismatch() {
        let r = bl_distance(&two(1.0), &Dist::uniform(3), &Dist::uniform(2));
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn tv_examples() {
        let a = Dist::new(vec![0.7f64, 0.3]).unwrap();
        let b = Dist::new(vec![0.4, 0.6]).unwrap();
        assert!((tv_distance(&a, &b).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(tv_distance(&Dist::<f64>::dirac(3, 0), &Dist::dirac(3, 2)).unwrap(), 1.0);
    }

    #[test]
    fn dist_validation() {
        assert!(Dist::new(vec![0.5, 0.6]).is_err());
        assert!(Dist::new(vec![-0.1, 1.1]).is_err());
        assert!(Dist::<f64>::new(vec![]).is_err());
        let e = Dist::<f64>::empirical(3, &[0, 0, 2, 1]).unwrap();
        assert_eq!(e.weights(), &[0.5, 0.25, 0.25]);
    }

    #[test]
    fn covering_small_cases() {
        let one = FiniteMetricSpace::<f64>::discrete(1, 1.0).unwrap();
        assert_eq!(covering_number_upper(&one, 1).unwrap(), 1);
        assert_eq!(covering_number_upper(&one, 2).unwrap(), 2);
        // frozen regression values from the DFS
        assert_eq!(covering_number_upper(&two(2.0), 1).unwrap(), 1);
        assert_eq!(covering_number_upper(&two(2.0), 2).unwrap(), 4);
        assert_eq!(covering_number_upper(&two(1.0), 4).unwrap(), 16);
    }

    #[test]
    fn covering_guard() {
        let big = FiniteMetricSpace::<f64>::discrete(9, 1.0).unwrap();
        assert!(matches!(covering_number_upper(&big, 2), Err(Error::Capacity(_))));
    }

    #[test]
    fn concentration_arithmetic() {
        let v = concentration_term(2, 2, 20000);
        assert!((v - 0.26772).abs() < 1e-5);
        let b = concentration_bound(&two(1.0), 20000, 64).unwrap();
        assert!(b.value <= concentration_term(1, 1, 20000));
    }

    #[test]
    fn dual_constant() {
        let s = FiniteMetricSpace::<f64>::line(3).unwrap();
        // slope 2 dominates half the oscillation (2)
        assert!((bl_dual_constant(&s, &[0.0, 2.0, 4.0]) - 2.0).abs() < 1e-12);
        assert!((bl_dual_constant(&s, &[0.0, 0.5, 0.0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn f32_distances() {
        let s = FiniteMetricSpace::<f32>::discrete(2, 1.0).unwrap();
        let v = bl_distance(&s, &Dist::dirac(2, 0), &Dist::dirac(2, 1)).unwrap();
        assert!((v - 0.5).abs() < 1e-6);
    }
}
