use serde::{Deserialize, Serialize};

use crate::error::{usage, Result};
use crate::fields::{GridField, GridSpec};

use super::{DiscreteSignedMeasure, RegularDrift};

/// Terminal datum g of the backward problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TerminalDatum {
    /// a·exp(−|x − c|²/(2σ²)).
    Gaussian {
        amplitude: f64,
        sigma: f64,
        #[serde(default)]
        center: [f64; 2],
    },
    /// Values on an explicit lattice, row-major [iy][ix].
    Grid { spec: GridSpec, values: Vec<f64> },
}

impl TerminalDatum {
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { amplitude, sigma, center } => {
                if !(amplitude.is_finite() && *sigma > 0.0 && sigma.is_finite() && center.iter().all(|c| c.is_finite())) {
                    return usage("gaussian datum needs finite amplitude and positive sigma");
                }
            }
            Self::Grid { spec, values } => {
                if values.len() != spec.len() || values.iter().any(|v| !v.is_finite()) {
                    return usage("grid datum must have one finite value per node");
                }
                if spec.periodic {
                    return usage("grid datum lives on a non-periodic lattice");
                }
            }
        }
        Ok(())
    }

    /// The datum on `lattice`; grid data must already live there.
    pub fn on_lattice(&self, lattice: &GridSpec) -> Result<GridField> {
        self.validate()?;
        match self {
            Self::Gaussian { amplitude, sigma, center } => Ok(GridField::scalar_from_fn(*lattice, |x| {
                let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                amplitude * (-r2 / (2.0 * sigma * sigma)).exp()
            })),
            Self::Grid { spec, values } => {
                if spec != lattice {
                    return usage("grid datum lattice differs from the evaluation lattice");
                }
                GridField::new(*spec, 1, values.clone())
            }
        }
    }
}

/// The drift B of the distribution-dependent SDE. Only identity-scaled
/// noise is implemented for every variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum DriftSpec {
    Zero,
    Regular(RegularDrift),
    ForwardVortex {
        nu0: DiscreteSignedMeasure,
        eps: f64,
    },
    BackwardVortex {
        terminal: TerminalDatum,
        /// Norm bound for the truncated drift; `None` disables truncation.
        #[serde(default)]
        truncation: Option<f64>,
        eps: f64,
    },
}

impl DriftSpec {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::Regular(_) => "regular",
            Self::ForwardVortex { .. } => "forward-vortex",
            Self::BackwardVortex { .. } => "backward-vortex",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Zero => Ok(()),
            Self::Regular(r) => r.validate(),
            Self::ForwardVortex { eps, .. } => {
                if !(*eps > 0.0 && eps.is_finite()) {
                    return usage("forward vortex eps must be positive");
                }
                Ok(())
            }
            Self::BackwardVortex { terminal, truncation, eps } => {
                if !(*eps > 0.0 && eps.is_finite()) {
                    return usage("backward vortex eps must be positive");
                }
                if let Some(b) = truncation {
                    if !(*b > 0.0) {
                        return usage("truncation bound must be positive");
                    }
                }
                terminal.validate()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let specs = vec![
            DriftSpec::Zero,
            DriftSpec::Regular(RegularDrift::example(2.0)),
            DriftSpec::ForwardVortex {
                nu0: DiscreteSignedMeasure::dirac([0.0, 0.0], 1.0),
                eps: 0.05,
            },
            DriftSpec::BackwardVortex {
                terminal: TerminalDatum::Gaussian {
                    amplitude: 0.5,
                    sigma: 1.0,
                    center: [0.0, 0.0],
                },
                truncation: Some(2.0),
                eps: 0.05,
            },
        ];
        for s in specs {
            let text = serde_json::to_string(&s).unwrap();
            let back: DriftSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, s);
            back.validate().unwrap();
        }
    }

    #[test]
    fn rejects_bad_eps_and_unknown_keys() {
        let bad = DriftSpec::ForwardVortex {
            nu0: DiscreteSignedMeasure::empty(),
            eps: 0.0,
        };
        assert!(bad.validate().is_err());
        let text = r#"{"variant":"backward-vortex","terminal":{"kind":"gaussian","amplitude":1,"sigma":1,"extra":2},"eps":0.1}"#;
        assert!(serde_json::from_str::<DriftSpec>(text).is_err());
    }

    #[test]
    fn grid_datum_must_match_lattice() {
        let a = GridSpec::centered(1.0, 5).unwrap();
        let b = GridSpec::centered(2.0, 5).unwrap();
        let d = TerminalDatum::Grid {
            spec: a,
            values: vec![0.0; 25],
        };
        assert!(d.on_lattice(&a).is_ok());
        assert!(d.on_lattice(&b).is_err());
    }
}
