//! Finite surface-regular graphs, fattenings and decay-function sums.

use std::collections::VecDeque;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sorted set of site indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SiteSet(Vec<usize>);

impl SiteSet {
    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn new(sites: impl IntoIterator<Item = usize>) -> Self {
        let mut v: Vec<usize> = sites.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self(v)
    }

    pub fn single(site: usize) -> Self {
        Self(vec![site])
    }

    pub fn range(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, site: usize) -> bool {
        self.0.binary_search(&site).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::new(self.iter().chain(other.iter()))
    }

    pub fn intersection(&self, other: &Self) -> Self {
        Self(self.iter().filter(|&s| other.contains(s)).collect())
    }

    pub fn difference(&self, other: &Self) -> Self {
        Self(self.iter().filter(|&s| !other.contains(s)).collect())
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.iter().all(|s| other.contains(s))
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.iter().all(|s| !other.contains(s))
    }

    /// Complement within `0..n`.
    pub fn complement(&self, n: usize) -> Self {
        Self((0..n).filter(|&s| !self.contains(s)).collect())
    }

    pub fn remove(&self, site: usize) -> Self {
        Self(self.iter().filter(|&s| s != site).collect())
    }
}

impl fmt::Display for SiteSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, s) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{s}")?;
        }
        write!(f, "}}")
    }
}

impl FromIterator<usize> for SiteSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self::new(iter)
    }
}

/// Lattice family and size.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum LatticeSpec {
    Path { n: usize },
    Ring { n: usize },
    /// Sites `{-k..k}²` with the ℓ¹ metric.
    SquarePatch { k: usize },
    /// `n × n` periodic square lattice.
    SquareTorus { n: usize },
}

impl LatticeSpec {
    /// Parses a family name with its size parameter.
    pub fn from_name(family: &str, size: usize) -> Result<Self> {
        match family {
            "path" => Ok(Self::Path { n: size }),
            "ring" => Ok(Self::Ring { n: size }),
            "square_patch" | "square-patch" => Ok(Self::SquarePatch { k: size }),
            "square_torus" | "square-torus" => Ok(Self::SquareTorus { n: size }),
            other => Err(Error::UnknownFamily(other.to_string())),
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::Path { .. } | Self::Ring { .. } => 1,
            Self::SquarePatch { .. } | Self::SquareTorus { .. } => 2,
        }
    }

    pub fn site_count(&self) -> usize {
        match *self {
            Self::Path { n } | Self::Ring { n } => n,
            Self::SquarePatch { k } => (2 * k + 1) * (2 * k + 1),
            Self::SquareTorus { n } => n * n,
        }
    }
}

/// Finite metric graph with certified growth constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeGraph {
    spec: LatticeSpec,
    n: usize,
    dim: usize,
    edges: Vec<(usize, usize)>,
    coords: Vec<Vec<i64>>,
    dist: Vec<u32>,
    c_lambda: Ratio<u64>,
    c_v: Ratio<u64>,
}

/// Minimal growth constants together with where they are attained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub c_lambda: Ratio<u64>,
    pub c_v: Ratio<u64>,
    /// `(y, R)` attaining the sphere constant, if any sphere is nonempty.
    pub sphere_argmax: Option<(usize, usize)>,
    pub ball_argmax: (usize, usize),
    /// Whether `C_V ≤ max{1, C_Λ/D}` holds.
    pub volume_relation_holds: bool,
    /// Violations found when rechecking both growth inequalities.
    pub violations: usize,
}

/// Builds a lattice with exact all-pairs distances and minimal growth constants.
pub fn build_lattice(spec: &LatticeSpec) -> Result<LatticeGraph> {
    let (coords, edges): (Vec<Vec<i64>>, Vec<(usize, usize)>) = match *spec {
        LatticeSpec::Path { n } => {
            if n == 0 {
                return Err(Error::EmptyLattice);
            }
            let coords = (0..n as i64).map(|i| vec![i]).collect();
            let edges = (1..n).map(|i| (i - 1, i)).collect();
            (coords, edges)
        }
        LatticeSpec::Ring { n } => {
            if n == 0 {
                return Err(Error::EmptyLattice);
            }
            let coords = (0..n as i64).map(|i| vec![i]).collect();
            let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
            if n > 2 {
                edges.push((0, n - 1));
            }
            (coords, edges)
        }
        LatticeSpec::SquarePatch { k } => {
            if k == 0 {
                return Err(Error::EmptyLattice);
            }
            let side = 2 * k + 1;
            let k = k as i64;
            let mut coords = Vec::with_capacity(side * side);
            for x in -k..=k {
                for y in -k..=k {
                    coords.push(vec![x, y]);
                }
            }
            let mut edges = Vec::new();
            for i in 0..side {
                for j in 0..side {
                    let s = i * side + j;
                    if i + 1 < side {
                        edges.push((s, s + side));
                    }
                    if j + 1 < side {
                        edges.push((s, s + 1));
                    }
                }
            }
            (coords, edges)
        }
        LatticeSpec::SquareTorus { n } => {
            if n == 0 {
                return Err(Error::EmptyLattice);
            }
            let mut coords = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    coords.push(vec![i as i64, j as i64]);
                }
            }
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    let s = i * n + j;
                    let down = ((i + 1) % n) * n + j;
                    let right = i * n + (j + 1) % n;
                    for t in [down, right] {
                        if t != s {
                            edges.push((s.min(t), s.max(t)));
                        }
                    }
                }
            }
            edges.sort_unstable();
            edges.dedup();
            (coords, edges)
        }
    };
    Ok(LatticeGraph::from_edges(spec.clone(), spec.dimension(), coords, edges))
}

impl LatticeGraph {
    fn from_edges(
        spec: LatticeSpec,
        dim: usize,
        coords: Vec<Vec<i64>>,
        edges: Vec<(usize, usize)>,
    ) -> Self {
        let n = coords.len();
        let mut adj = vec![Vec::new(); n];
        for &(a, b) in &edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut dist = vec![u32::MAX; n * n];
        let mut queue = VecDeque::new();
        for src in 0..n {
            dist[src * n + src] = 0;
            queue.push_back(src);
            while let Some(u) = queue.pop_front() {
                let du = dist[src * n + u];
                for &w in &adj[u] {
                    if dist[src * n + w] == u32::MAX {
                        dist[src * n + w] = du + 1;
                        queue.push_back(w);
                    }
                }
            }
        }
        let mut g = Self {
            spec,
            n,
            dim,
            edges,
            coords,
            dist,
            c_lambda: Ratio::from_integer(1),
            c_v: Ratio::from_integer(1),
        };
        let report = certify_growth(&g);
        g.c_lambda = report.c_lambda;
        g.c_v = report.c_v;
        g
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn coords(&self, site: usize) -> &[i64] {
        &self.coords[site]
    }

    pub fn sites(&self) -> SiteSet {
        SiteSet::range(self.n)
    }

    /// Graph distance.
    #[inline]
    pub fn d(&self, x: usize, y: usize) -> usize {
        self.dist[x * self.n + y] as usize
    }

    /// `d(X, Y) = min_{x∈X, y∈Y} d(x, y)`; `usize::MAX` if either set is empty.
    pub fn set_distance(&self, a: &SiteSet, b: &SiteSet) -> usize {
        a.iter().flat_map(|x| b.iter().map(move |y| (x, y))).map(|(x, y)| self.d(x, y)).min().unwrap_or(usize::MAX)
    }

    pub fn diameter(&self) -> usize {
        self.dist.iter().copied().max().unwrap_or(0) as usize
    }

    /// Diameter of a subset (0 for empty or singleton sets).
    pub fn diam(&self, z: &SiteSet) -> usize {
        let s = z.as_slice();
        let mut best = 0;
        for (i, &x) in s.iter().enumerate() {
            for &y in &s[i + 1..] {
                best = best.max(self.d(x, y));
            }
        }
        best
    }

    pub fn c_lambda(&self) -> Ratio<u64> {
        self.c_lambda
    }

    pub fn c_v(&self) -> Ratio<u64> {
        self.c_v
    }

    pub fn c_lambda_f<T: Real>(&self) -> T {
        ratio_to::<T>(self.c_lambda)
    }

    pub fn c_v_f<T: Real>(&self) -> T {
        ratio_to::<T>(self.c_v)
    }

    /// `|S_y(R)|` for `R = 0..=diameter`.
    pub fn sphere_counts(&self, y: usize) -> Vec<usize> {
        let mut counts = vec![0; self.diameter() + 1];
        for z in 0..self.n {
            counts[self.d(y, z)] += 1;
        }
        counts
    }

    /// `X_m = {y : d(y, X) ≤ m}`.
    pub fn fatten(&self, x: &SiteSet, m: usize) -> SiteSet {
        (0..self.n).filter(|&y| x.iter().any(|s| self.d(y, s) <= m)).collect()
    }

    /// `‖F‖_Λ = sup_x Σ_z F(d(x, z))` for a function of the distance.
    pub fn sup_sum<T: Real>(&self, f: impl Fn(usize) -> T) -> T {
        let table: Vec<T> = (0..=self.diameter()).map(&f).collect();
        (0..self.n)
            .map(|x| (0..self.n).fold(T::zero(), |acc, z| acc + table[self.d(x, z)]))
            .fold(T::zero(), |a, b| a.max(b))
    }
}

fn ratio_to<T: Real>(r: Ratio<u64>) -> T {
    T::lit(*r.numer() as f64) / T::lit(*r.denom() as f64)
}

/// Smallest constants with `|S_y(R)| ≤ C_Λ R^{D-1}` (R ≥ 1) and `|B_y(R)| ≤ C_V (R+1)^D` (R ≥ 0).
///
/// Both are floored at 1.
pub fn certify_growth(g: &LatticeGraph) -> GrowthReport {
    let d = g.dim as u32;
    let mut c_lambda = Ratio::from_integer(1u64);
    let mut c_v = Ratio::from_integer(1u64);
    let mut sphere_argmax = None;
    let mut ball_argmax = (0, 0);
    for y in 0..g.n {
        let spheres = g.sphere_counts(y);
        let mut ball = 0u64;
        for (r, &s) in spheres.iter().enumerate() {
            ball += s as u64;
            let rv = Ratio::new(ball, (r as u64 + 1).pow(d));
            if rv > c_v {
                c_v = rv;
                ball_argmax = (y, r);
            }
            if r >= 1 && s > 0 {
                let sv = Ratio::new(s as u64, (r as u64).pow(d - 1));
                if sv > c_lambda || sphere_argmax.is_none() && sv == c_lambda {
                    c_lambda = sv;
                    sphere_argmax = Some((y, r));
                }
            }
        }
    }
    let mut violations = 0;
    for y in 0..g.n {
        let spheres = g.sphere_counts(y);
        let mut ball = 0u64;
        for (r, &s) in spheres.iter().enumerate() {
            ball += s as u64;
            if Ratio::from_integer(ball) > c_v * Ratio::from_integer((r as u64 + 1).pow(d)) {
                violations += 1;
            }
            if r >= 1 && Ratio::from_integer(s as u64) > c_lambda * Ratio::from_integer((r as u64).pow(d - 1)) {
                violations += 1;
            }
        }
    }
    let bound = std::cmp::max(Ratio::from_integer(1), c_lambda / Ratio::from_integer(d as u64));
    GrowthReport {
        c_lambda,
        c_v,
        sphere_argmax,
        ball_argmax,
        volume_relation_holds: c_v <= bound,
        violations,
    }
}

/// How `‖F_α‖_Λ` is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// Direct summation over the distance table.
    Exact,
    /// Lattice-independent bound `C_Λ·Σ_{r≥0}(r+1)^{D-1-α}`.
    AnalyticBound,
}

/// `F_α(r) = (r+1)^{-α}`.
#[inline]
pub fn decay<T: Real>(alpha: T, r: T) -> T {
    (r + T::one()).powf(-alpha)
}

/// `‖F_α‖_Λ` in the requested mode.
pub fn f_alpha_norm<T: Real>(g: &LatticeGraph, alpha: T, mode: NormMode) -> Result<T> {
    match mode {
        NormMode::Exact => Ok(g.sup_sum(|r| decay(alpha, T::count(r)))),
        NormMode::AnalyticBound => {
            let d = T::count(g.dim);
            if alpha <= d {
                return Err(Error::DecayTooSlow { alpha: alpha.as_f64(), dim: g.dim });
            }
            Ok(g.c_lambda_f::<T>() * zeta_upper(alpha - d + T::one()))
        }
    }
}

/// Upper bound on `ζ(p) = Σ_{k≥1} k^{-p}`, `p > 1`, accurate to about 1e-12.
///
/// Partial sum plus the midpoint-convexity tail `∫_{N+1/2}^∞ x^{-p} dx`.
pub fn zeta_upper<T: Real>(p: T) -> T {
    let tol = T::lit(1e-12);
    let mut sum = T::zero();
    let mut n = 0usize;
    loop {
        n += 1;
        sum += T::count(n).powf(-p);
        let nf = T::count(n);
        // Overshoot of the tail integral is about p·N^{-p-1}/24.
        let slack = p * nf.powf(-p - T::one()) / T::lit(24.0);
        if slack < tol || n > 50_000_000 {
            let tail = (nf + T::lit(0.5)).powf(T::one() - p) / (p - T::one());
            return sum + tail;
        }
    }
}
