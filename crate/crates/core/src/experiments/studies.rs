use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sweep::with_workers;
use crate::error::{Result, SimError};
use crate::pixel::{preprogram, GateWaveform, PixelConfig, Stimulus};
use crate::solver::{integrate, EventKind, SolverOptions, TransientTrace};

/// Pre-programmed SET levels, highest resistance first (ohm). The last one
/// sits below 10 kohm.
pub const R_SET_LEVELS: [f64; 4] = [1.25e6, 300e3, 60e3, 8e3];
/// Pre-programmed soft-RESET levels (ohm).
pub const R_RESET_LEVELS: [f64; 2] = [2e6, 5e6];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRun {
    /// Programmed read resistance (ohm).
    pub level: f64,
    pub vrst: f64,
    pub final_vpd: Option<f64>,
    pub events: Vec<EventKind>,
    pub error: Option<String>,
}

impl LevelRun {
    pub fn has_event(&self, kind: EventKind) -> bool {
        self.events.contains(&kind)
    }
}

/// Run one exposure per programmed level, optionally at another reset level.
pub fn level_study(
    base: &PixelConfig,
    levels: &[f64],
    vrst: Option<f64>,
    i_exp: f64,
    options: &SolverOptions,
) -> Result<Vec<LevelRun>> {
    let configs = levels
        .iter()
        .map(|&level| {
            let c = preprogram(base, level)?;
            Ok((level, match vrst {
                Some(v) => c.with_vrst(v),
                None => c,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(with_workers(|| {
        configs
            .par_iter()
            .map(|(level, config)| {
                let vrst = config.pd.vrst;
                match integrate(config, &Stimulus::new(i_exp), options) {
                    Ok(t) => LevelRun {
                        level: *level,
                        vrst,
                        final_vpd: Some(t.final_vpd),
                        events: t.events.iter().map(|e| e.kind).collect(),
                        error: None,
                    },
                    Err(e) => LevelRun { level: *level, vrst, final_vpd: None, events: vec![], error: Some(e.to_string()) },
                }
            })
            .collect()
    }))
}

/// Largest minus smallest final VPD; `None` if any run failed.
pub fn final_vpd_spread(runs: &[LevelRun]) -> Option<f64> {
    let v: Vec<f64> = runs.iter().map(|r| r.final_vpd).collect::<Option<_>>()?;
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    (!v.is_empty()).then_some(hi - lo)
}

/// Same pixel with a different exposure time. Only constant gate waveforms
/// can be stretched.
pub fn with_exposure(config: &PixelConfig, texp: f64) -> Result<PixelConfig> {
    if config.vg.segments().len() != 1 {
        return Err(SimError::Unsupported("exposure change needs a constant gate waveform".into()));
    }
    let mut out = config.clone();
    out.pd.texp = texp;
    out.vg = GateWaveform::constant(config.vg.segments()[0].level, out.pd.t_end());
    out.validate()?;
    Ok(out)
}

pub fn long_exposure(config: &PixelConfig, texp: f64, i_exp: f64, options: &SolverOptions) -> Result<TransientTrace> {
    integrate(&with_exposure(config, texp)?, &Stimulus::new(i_exp), options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pixel::Topology;

    #[test]
    fn spread_of_levels() {
        let run = |v: Option<f64>| LevelRun { level: 1.0, vrst: 1.42, final_vpd: v, events: vec![], error: None };
        assert_eq!(final_vpd_spread(&[run(Some(1.0)), run(Some(1.25))]), Some(0.25));
        assert_eq!(final_vpd_spread(&[run(Some(1.0)), run(None)]), None);
        assert_eq!(final_vpd_spread(&[]), None);
    }

    #[test]
    fn exposure_stretch_keeps_gate_level() {
        let c = PixelConfig::hybrid(Topology::HybridCaseI).unwrap();
        let long = with_exposure(&c, 2e-3).unwrap();
        assert_eq!(long.pd.t_end(), 2e-3 + c.pd.trst);
        assert_eq!(long.vg.level_at(1e-3), c.vg.level_at(1e-6));
    }

    #[test]
    fn bare_pixel_cannot_be_programmed() {
        assert!(level_study(&PixelConfig::bare(), &[1e6], None, 1e-9, &SolverOptions::default()).is_err());
    }
}
