//! Domain checks performed before any computation.

use std::fmt;

use lrlab::build_lattice;
use lrlab::fock::dimension_cap;
use lrlab::interactions::{ModelSpec, PerturbationSpec};
use lrlab::spectral_flow::Window;
use serde::Serialize;

use crate::config::{CurveName, ExperimentConfig, ExperimentKind, ParityChoice};

/// A violated constraint, naming the offending field.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

struct Findings(Vec<Finding>);

impl Findings {
    fn push(&mut self, field: impl Into<String>, reason: impl Into<String>) {
        self.0.push(Finding { field: field.into(), reason: reason.into() });
    }

    fn require(&mut self, ok: bool, field: &str, reason: impl FnOnce() -> String) {
        if !ok {
            self.push(field, reason());
        }
    }
}

/// Curves an experiment evaluates when none are listed.
pub fn default_curves(kind: ExperimentKind) -> Vec<CurveName> {
    match kind {
        ExperimentKind::BoundCurves => vec![
            CurveName::FiniteRange,
            CurveName::FiniteRangeSharp,
            CurveName::LongRange,
            CurveName::RootCone,
            CurveName::IteratedCertified,
        ],
        _ => vec![CurveName::FiniteRangeSharp, CurveName::LongRange, CurveName::RootCone, CurveName::IteratedCertified],
    }
}

pub fn selected_curves(cfg: &ExperimentConfig) -> Vec<CurveName> {
    if cfg.bounds.curves.is_empty() {
        default_curves(cfg.experiment)
    } else {
        cfg.bounds.curves.clone()
    }
}

/// Every domain constraint of `cfg`; an empty list means the run may start.
pub fn validate(cfg: &ExperimentConfig) -> Vec<Finding> {
    let mut f = Findings(Vec::new());
    let kind = cfg.experiment;
    let lattice = match build_lattice(&cfg.lattice) {
        Ok(g) => Some(g),
        Err(e) => {
            f.push("lattice", e.to_string());
            None
        }
    };
    let dim = cfg.lattice.dimension();
    let sites = cfg.lattice.site_count();

    // Hilbert space size.
    let needs_fock = match kind {
        ExperimentKind::BoundCurves => cfg.model.is_some(),
        ExperimentKind::SpinCompare => false,
        _ => true,
    };
    let cap = dimension_cap();
    if needs_fock {
        f.require(cfg.spin >= 1, "spin", || "at least one mode per site is required".into());
        let modes = cfg.spin * sites;
        f.require(modes < 64 && (1u128 << modes) <= cap as u128, "lattice", || {
            format!("dimension cap: {modes} fermion modes need dimension 2^{modes}, above the cap {cap} (raise it with LRLAB_DIM_CAP)")
        });
    }
    if kind == ExperimentKind::SpinCompare {
        let ok = (sites as u32) < 64 && (1u128 << sites) <= cap as u128;
        f.require(ok, "lattice", || format!("dimension cap: {sites} qubits need dimension 2^{sites}, above the cap {cap}"));
    }
    if matches!(kind, ExperimentKind::LrVerify | ExperimentKind::SpinCompare) {
        f.require(sites >= 2, "lattice", || "two distinct sites are needed for separated observables".into());
    }

    // Decay exponents and σ grids.
    let uses_bounds = matches!(kind, ExperimentKind::LrVerify | ExperimentKind::BoundCurves | ExperimentKind::SpinCompare);
    if uses_bounds {
        f.require(!cfg.grid.alpha.is_empty(), "grid.alpha", || "at least one decay exponent is required".into());
        for &a in &cfg.grid.alpha {
            f.require(a.is_finite() && a > dim as f64, "grid.alpha", || format!("α = {a} must exceed the lattice dimension {dim}"));
        }
        let curves = selected_curves(cfg);
        for &s in &cfg.grid.sigma {
            f.require(s > 0.0 && s < 1.0, "grid.sigma", || format!("σ = {s} outside (0, 1)"));
        }
        if curves.contains(&CurveName::IteratedCertified) && kind != ExperimentKind::SpinCompare {
            f.require(cfg.grid.depth >= 1, "grid.depth", || "iteration depth must be at least 1".into());
            for &a in &cfg.grid.alpha {
                let lo = (dim as f64 + 1.0) / (a + 1.0);
                for &s in &cfg.grid.sigma {
                    f.require(s > lo && s < 1.0, "grid.sigma", || {
                        format!("σ = {s} outside the admissibility interval ((D+1)/(α+1), 1) = ({lo:.4}, 1) of the iterated bound at α = {a}")
                    });
                }
            }
        }
        for &t in &cfg.grid.times {
            f.require(t.is_finite() && t >= 0.0, "grid.times", || format!("time {t} must be finite and non-negative"));
        }
        if let Some(t) = cfg.grid.t_max {
            f.require(t.is_finite() && t > 0.0, "grid.t_max", || format!("t_max = {t} must be positive"));
        }
        f.require(cfg.grid.t_points >= 1, "grid.t_points", || "at least one time point is required".into());
        f.require(cfg.bounds.size_x >= 1 && cfg.bounds.size_y >= 1, "bounds.size_x", || "support sizes must be positive".into());
        f.require(cfg.tolerances.bound_slack >= 0.0, "tolerances.bound_slack", || "slack must be non-negative".into());
    }

    if matches!(kind, ExperimentKind::LrVerify | ExperimentKind::SpinCompare) {
        f.require(cfg.sampling.instances >= 1, "sampling.instances", || "at least one instance is required".into());
        let [lo, hi] = cfg.sampling.coupling;
        f.require(lo > 0.0 && lo <= hi && hi.is_finite(), "sampling.coupling", || format!("need 0 < lo ≤ hi, got [{lo}, {hi}]"));
    }
    if kind == ExperimentKind::LrVerify {
        f.require(cfg.sampling.parity != ParityChoice::Neither, "sampling.parity", || {
            "one of the observables must be even for a Lieb–Robinson bound to apply".into()
        });
    }
    if kind == ExperimentKind::SpinCompare {
        f.require(!cfg.sampling.alpha_tb.is_empty(), "sampling.alpha_tb", || "at least one exponent is required".into());
        for &a in &cfg.sampling.alpha_tb {
            f.require(a.is_finite() && a > 0.0, "sampling.alpha_tb", || format!("α_tb = {a} must be positive"));
        }
    }

    if kind == ExperimentKind::BoundCurves {
        match (&cfg.model, cfg.bounds.norm0) {
            (None, None) => f.push("model", "bound-curves needs a model or a synthetic bounds.norm0"),
            (Some(_), Some(_)) => f.push("bounds.norm0", "give either a model or synthetic norms, not both"),
            (None, Some(n0)) => {
                let n1 = cfg.bounds.norm1.unwrap_or(n0);
                f.require(n0 >= 0.0 && n0.is_finite(), "bounds.norm0", || format!("norm {n0} must be non-negative"));
                f.require(n1 >= n0 && n1.is_finite(), "bounds.norm1", || format!("‖Φ‖_(α,1) = {n1} cannot be below ‖Φ‖_(α,0) = {n0}"));
            }
            (Some(_), None) => {}
        }
    }

    if matches!(kind, ExperimentKind::SpectralFlow | ExperimentKind::Lppl) {
        f.require(cfg.model.is_some(), "model", || format!("{} needs a model", kind.as_str()));
    }
    if kind == ExperimentKind::Lppl {
        f.require(cfg.grid.s_points >= 2, "grid.s_points", || "the s grid needs both endpoints".into());
    }
    if kind == ExperimentKind::SpectralFlow {
        let (g, d) = (cfg.flow.g, cfg.flow.delta);
        f.require(d >= 0.0, "flow.delta", || format!("δ = {d} must be non-negative"));
        f.require(g > d && g.is_finite(), "flow.g", || format!("requires g > δ, got g = {g}, δ = {d}"));
        f.require(!cfg.flow.generators.is_empty() || cfg.flow.envelope, "flow.generators", || "nothing to compute".into());
        f.require(cfg.flow.grid >= 2, "flow.grid", || "the s grid needs both endpoints".into());
        f.require(cfg.tolerances.flow > 0.0, "tolerances.flow", || "flow tolerance must be positive".into());
        if cfg.flow.envelope {
            let moving = matches!(cfg.model, Some(ModelSpec::Interpolation { .. } | ModelSpec::Perturbation { .. }));
            f.require(moving, "flow.envelope", || "the envelope needs an interpolation or perturbation model".into());
        }
        check_window(&mut f, "flow.window", cfg.flow.window, cfg.spin * sites);
    }
    if kind == ExperimentKind::Lppl {
        match &cfg.lppl {
            None => f.push("lppl", "lppl needs an [lppl] section with a perturbation"),
            Some(l) => {
                check_perturbation(&mut f, "lppl.perturbation", &l.perturbation, sites);
                f.require(l.min_gap > 0.0, "lppl.min_gap", || "required gap must be positive".into());
                check_window(&mut f, "lppl.window", l.window, cfg.spin * sites);
            }
        }
    }
    if let Some(m) = &cfg.model {
        check_model(&mut f, "model", m, sites);
    }
    if let Some(t) = cfg.threads {
        f.require(t >= 1, "threads", || "thread count must be positive".into());
    }
    if let (Some(g), Some(r)) = (&lattice, cfg.grid.max_distance) {
        f.require(r <= g.diameter(), "grid.max_distance", || format!("{r} exceeds the lattice diameter {}", g.diameter()));
    }
    f.0
}

fn check_window(f: &mut Findings, field: &str, w: Window, modes: usize) {
    match w {
        Window::Lowest { count } => {
            let dim = if modes < 64 { 1u128 << modes } else { u128::MAX };
            f.require(count >= 1 && (count as u128) < dim, field, || format!("count {count} must lie in [1, {dim})"));
        }
        Window::Fixed { lo, hi } => f.require(lo < hi, field, || format!("empty window [{lo}, {hi}]")),
    }
}

fn check_model(f: &mut Findings, field: &str, m: &ModelSpec, sites: usize) {
    match m {
        ModelSpec::Interpolation { from, to } => {
            check_model(f, &format!("{field}.from"), from, sites);
            check_model(f, &format!("{field}.to"), to, sites);
        }
        ModelSpec::Perturbation { base, w } => {
            check_model(f, &format!("{field}.base"), base, sites);
            check_perturbation(f, &format!("{field}.w"), w, sites);
        }
        ModelSpec::Hopping { alpha_tb, .. } | ModelSpec::DensityDensity { alpha_tb, .. } | ModelSpec::AtomicLimit { alpha_tb, .. } => {
            f.require(alpha_tb.is_finite() && *alpha_tb >= 0.0, field, || format!("α_tb = {alpha_tb} must be non-negative"));
        }
    }
}

/// Perturbations are even by construction; only their placement can be wrong.
fn check_perturbation(f: &mut Findings, field: &str, w: &PerturbationSpec, sites: usize) {
    match w {
        PerturbationSpec::Number { sites: xs, .. } => {
            f.require(!xs.is_empty(), field, || "perturbation support is empty".into());
            for &x in xs {
                f.require(x < sites, field, || format!("site {x} outside a lattice of {sites} sites"));
            }
        }
        PerturbationSpec::Hop { x, y, .. } => {
            f.require(*x < sites && *y < sites, field, || format!("hop ({x}, {y}) outside a lattice of {sites} sites"));
            f.require(x != y, field, || "a hop needs two distinct sites".into());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text).unwrap()
    }

    #[test]
    fn valid_config_has_no_findings() {
        assert!(validate(&cfg("experiment = \"lr-verify\"\n[lattice]\nfamily = \"path\"\nn = 5\n")).is_empty());
    }

    #[test]
    fn small_sigma_names_the_admissibility_interval() {
        let f = validate(&cfg("experiment = \"bound-curves\"\n[lattice]\nfamily = \"path\"\nn = 8\n[grid]\nsigma = [0.1]\n[bounds]\nnorm0 = 0.5\n"));
        assert_eq!(f.len(), 1, "{f:?}");
        assert_eq!(f[0].field, "grid.sigma");
        assert!(f[0].reason.contains("admissibility interval"), "{}", f[0].reason);
    }

    #[test]
    fn window_width_must_stay_below_gap() {
        let text = "experiment = \"spectral-flow\"\n[lattice]\nfamily = \"path\"\nn = 4\n[model]\nmodel = \"hopping\"\nj = 1.0\nalpha_tb = 3.0\n[flow]\ng = 0.5\ndelta = 0.5\n";
        let f = validate(&cfg(text));
        assert!(f.iter().any(|x| x.field == "flow.g" && x.reason.contains("requires g > δ")), "{f:?}");
    }

    #[test]
    fn thirteen_modes_hit_the_dimension_cap() {
        let f = validate(&cfg("experiment = \"lr-verify\"\n[lattice]\nfamily = \"path\"\nn = 13\n"));
        assert!(f.iter().any(|x| x.reason.contains("dimension cap")), "{f:?}");
    }

    #[test]
    fn parity_and_decay_findings() {
        let f = validate(&cfg("experiment = \"lr-verify\"\n[lattice]\nfamily = \"ring\"\nn = 4\n[grid]\nalpha = [0.5]\n[sampling]\nparity = \"neither\"\n"));
        let fields: Vec<&str> = f.iter().map(|x| x.field.as_str()).collect();
        assert!(fields.contains(&"grid.alpha") && fields.contains(&"sampling.parity"), "{fields:?}");
    }
}
