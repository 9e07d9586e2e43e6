//! Response of gapped states to a localized perturbation, measured against distance.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{HamiltonianFn, IntegratorSettings, Propagator};
use crate::error::{invalid, Error, Result};
use crate::fock::FockContext;
use crate::interactions::{model, perturbation, perturbed_model, Model, ModelSpec, PerturbationSpec};
use crate::lattice::SiteSet;
use crate::linalg::{self, Eigh, Mat};
use crate::scalar::{Real, C};
use crate::spectral_flow::{filter_in_eigenbasis, gap_in_window, WeightSpectrum, Window};

/// `H(s) = H_0 + ΣΦ + sW` on `[0, 1]` with `Ḣ = W`.
pub fn build_perturbed_family<T: Real>(ctx: &FockContext, base: &ModelSpec, x: SiteSet, w: Mat<T>) -> Result<Model<T>> {
    perturbed_model(base, x, w, ctx)
}

/// `G_Y = E_{Λ\Y}(G)` for the Hastings generator `G = −𝒥(W)`, and `‖G_Y − G‖`.
pub fn localized_generator<T: Real>(ctx: &FockContext, h: &Mat<T>, spec: &WeightSpectrum, w: &Mat<T>, y: &SiteSet) -> Result<(Mat<T>, T)> {
    let eig = Eigh::new(h)?;
    let g = -filter_in_eigenbasis(&eig, spec, w);
    let rest = y.complement(ctx.sites());
    let gy = if y.is_empty() { g.clone() } else { ctx.conditional_expectation(&rest, &g) };
    let gap = linalg::spectral_norm(&(&gy - &g));
    Ok((gy, gap))
}

/// `‖U(s) − V_Y(s)‖` at the end of the path and `sup_s ‖G(s) − G_Y(s)‖` on the sampled grid.
pub fn localized_flow_defect<T: Real>(ctx: &FockContext, m: &Model<T>, g: f64, y: &SiteSet, grid: usize) -> Result<(T, T)> {
    let spec = WeightSpectrum::with_gap(g)?;
    let (lo, hi) = m.interaction.interval();
    let make = |restricted: bool| -> HamiltonianFn<T> {
        let (ctx, m, y) = (ctx.clone(), m.clone(), y.clone());
        Arc::new(move |s| {
            let (gy, _) = localized_generator(&ctx, &m.hamiltonian(&ctx, s)?, &spec, &m.derivative(&ctx, s)?, &y)?;
            if restricted {
                Ok(gy)
            } else {
                let eig = Eigh::new(&m.hamiltonian(&ctx, s)?)?;
                Ok(-filter_in_eigenbasis(&eig, &spec, &m.derivative(&ctx, s)?))
            }
        })
    };
    let settings = IntegratorSettings { tol: 1e-9, ..IntegratorSettings::default() };
    let u = Propagator::time_dependent(make(false), ctx.dim(), settings).propagate(hi, lo)?.unitary;
    let v = Propagator::time_dependent(make(true), ctx.dim(), settings).propagate(hi, lo)?.unitary;
    let mut sup = T::zero();
    for k in 0..grid.max(2) {
        let s = lo + (hi - lo) * T::count(k) / T::count(grid.max(2) - 1);
        let (_, d) = localized_generator(ctx, &m.hamiltonian(ctx, s)?, &spec, &m.derivative(ctx, s)?, y)?;
        sup = sup.max(d);
    }
    Ok((linalg::spectral_norm(&(u - v)), sup))
}

/// Observable placed on each site outside the perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObservableSpec {
    #[default]
    Number,
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpplConfig {
    pub base: ModelSpec,
    pub perturbation: PerturbationSpec,
    #[serde(default)]
    pub observable: ObservableSpec,
    #[serde(default = "default_window")]
    pub window: Window,
    /// Number of `s` samples on `[0, 1]`, endpoints included.
    #[serde(default = "default_points")]
    pub s_points: usize,
    /// Required gap along the path.
    #[serde(default = "default_gap")]
    pub min_gap: f64,
    /// Smallest distance in the decay fit.
    #[serde(default = "default_fit_from")]
    pub fit_from: usize,
    /// Added to `H` to test invariance under energy shifts.
    #[serde(default)]
    pub energy_shift: f64,
}

fn default_window() -> Window {
    Window::Lowest { count: 1 }
}

fn default_points() -> usize {
    2
}

fn default_gap() -> f64 {
    1.0
}

fn default_fit_from() -> usize {
    2
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpplRow {
    pub distance: usize,
    pub site: usize,
    pub s: f64,
    pub difference: f64,
    /// `2 rank(P(0)) ‖A‖`.
    pub cap: f64,
}

/// Least-squares fit of `ln y` against `ln(d + 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in log space.
    pub residual: f64,
    pub points: usize,
    /// Whether the fitted tail is non-increasing.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpplRun {
    pub rows: Vec<LpplRow>,
    pub rank: usize,
    pub min_gap_seen: f64,
    /// `(distance, max difference at s = 1)` over placements.
    pub series: Vec<(usize, f64)>,
    /// `None` when fewer than three distances carry a nonzero signal.
    pub fit: Option<DecayFit>,
}

/// Fit the tail `d ≥ from` of a distance series, skipping zero values.
pub fn fit_decay(series: &[(usize, f64)], from: usize) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> =
        series.iter().filter(|(d, y)| *d >= from && *y > 0.0).map(|&(d, y)| (((d + 1) as f64).ln(), y.ln())).collect();
    if pts.len() < 3 {
        return Err(Error::TooFewPoints(pts.len()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    let tail: Vec<f64> = series.iter().filter(|(d, _)| *d >= from).map(|p| p.1).collect();
    let monotone = tail.windows(2).all(|w| w[1] <= w[0]);
    Ok(DecayFit { slope, intercept, residual, points: pts.len(), monotone })
}

/// Sweep `Y = {y}` over every site outside `X` and record `|Tr(P(s)A) − Tr(P(0)A)|`.
pub fn lppl_measure<T: Real>(ctx: &FockContext, cfg: &LpplConfig) -> Result<LpplRun> {
    if cfg.s_points < 2 {
        return Err(invalid("s_points", "need both endpoints of the path"));
    }
    let (x, _) = perturbation::<T>(&cfg.perturbation, ctx)?;
    let spec = ModelSpec::Perturbation { base: Box::new(cfg.base.clone()), w: cfg.perturbation.clone() };
    let m = model::<T>(&spec, ctx)?;
    let shift = linalg::identity::<T>(ctx.dim()) * C::new(T::lit(cfg.energy_shift), T::zero());
    let mut projectors = Vec::with_capacity(cfg.s_points);
    let mut grid = Vec::with_capacity(cfg.s_points);
    let mut min_gap = f64::INFINITY;
    for k in 0..cfg.s_points {
        let s = k as f64 / (cfg.s_points - 1) as f64;
        let gap = gap_in_window(&(m.hamiltonian(ctx, T::lit(s))? + &shift), shift_window(cfg.window, cfg.energy_shift))?;
        if gap.gap.as_f64() < cfg.min_gap {
            return Err(Error::GapCollapse { s, gap: gap.gap.as_f64(), required: cfg.min_gap });
        }
        min_gap = min_gap.min(gap.gap.as_f64());
        projectors.push(gap);
        grid.push(s);
    }
    let rank = projectors[0].rank();
    let g = ctx.lattice();
    let mut rows = Vec::new();
    let mut by_distance: BTreeMap<usize, f64> = BTreeMap::new();
    for y in 0..ctx.sites() {
        if x.contains(y) {
            continue;
        }
        let ys = SiteSet::single(y);
        let a = match cfg.observable {
            ObservableSpec::Number => ctx.number_operator::<T>(&ys).matrix,
            ObservableSpec::Identity => linalg::identity(ctx.dim()),
        };
        let norm_a = linalg::spectral_norm(&a).as_f64();
        let d = g.set_distance(&x, &ys);
        let base = linalg::trace(&(&projectors[0].projector * &a)).re.as_f64();
        for (k, p) in projectors.iter().enumerate() {
            let diff = (linalg::trace(&(&p.projector * &a)).re.as_f64() - base).abs();
            rows.push(LpplRow { distance: d, site: y, s: grid[k], difference: diff, cap: 2.0 * rank as f64 * norm_a });
            if k + 1 == projectors.len() {
                let e = by_distance.entry(d).or_insert(0.0);
                *e = e.max(diff);
            }
        }
    }
    let series: Vec<(usize, f64)> = by_distance.into_iter().collect();
    let fit = match fit_decay(&series, cfg.fit_from) {
        Ok(f) => Some(f),
        Err(Error::TooFewPoints(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(LpplRun { rows, rank, min_gap_seen: min_gap, series, fit })
}

fn shift_window(w: Window, c: f64) -> Window {
    match w {
        Window::Fixed { lo, hi } => Window::Fixed { lo: lo + c, hi: hi + c },
        other => other,
    }
}
