//! Configurations shipped with the binary, mirroring the acceptance suite at a smaller scale.

use crate::error::{CliError, Result};

pub struct Demo {
    pub name: &'static str,
    pub summary: &'static str,
    pub config: &'static str,
}

pub const DEMOS: &[Demo] = &[
    Demo { name: "bound-certificate", summary: "random even interactions on a ring against four bound curves", config: include_str!("../demos/bound-certificate.toml") },
    Demo { name: "iteration", summary: "certified iteration on a long chain: depth monotonicity and lattice sums", config: include_str!("../demos/iteration.toml") },
    Demo { name: "zero-interaction", summary: "bound curves of a vanishing interaction", config: include_str!("../demos/zero-interaction.toml") },
    Demo { name: "automorphic-equivalence", summary: "spectral flow from the atomic limit to weak hopping", config: include_str!("../demos/automorphic-equivalence.toml") },
    Demo { name: "generator-envelope", summary: "decay envelope of the generator's local decomposition on 8 sites", config: include_str!("../demos/generator-envelope.toml") },
    Demo { name: "local-perturbation", summary: "distance decay of a site-0 perturbation on 8 sites", config: include_str!("../demos/local-perturbation.toml") },
    Demo { name: "spin-trick", summary: "random Ising chains against the localization-trick curves", config: include_str!("../demos/spin-trick.toml") },
];

pub fn find(name: &str) -> Result<&'static Demo> {
    DEMOS.iter().find(|d| d.name == name).ok_or_else(|| CliError::UnknownDemo(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::validate::validate;

    #[test]
    fn every_demo_parses_and_validates() {
        for d in DEMOS {
            let cfg = ExperimentConfig::parse(d.config).unwrap_or_else(|e| panic!("{}: {e}", d.name));
            assert!(validate(&cfg).is_empty(), "{}: {:?}", d.name, validate(&cfg));
        }
    }

    #[test]
    fn unknown_demo_is_an_error() {
        assert!(find("nope").is_err());
    }
}
