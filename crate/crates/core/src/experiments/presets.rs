//! Parameter sets of the five reference figures.

use super::{CodebookFamily, DecoderId, ExperimentSpec, GridPoint, DEFAULT_TRIALS};
use crate::bounds::FormulaId;
use crate::decoders::DEFAULT_EPSILON;
use crate::error::{Error, Result};

pub const DEFAULT_SEED: u64 = 20240101;
pub const FIGURE_IDS: [u8; 5] = [1, 2, 3, 4, 5];
pub const N_GRID: [usize; 10] = [20, 40, 60, 80, 100, 120, 140, 160, 180, 200];

const BLENDS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

fn n_grid(a: f64, d: f64, k: usize) -> impl Iterator<Item = GridPoint> {
    N_GRID.into_iter().map(move |n| GridPoint { n, a, d, k })
}

/// Spec reproducing figure `id`, with `m = 3`, `P = 0.1` and unit noise.
pub fn figure_preset(id: u8) -> Result<ExperimentSpec> {
    let base = ExperimentSpec {
        figure: Some(id),
        family: CodebookFamily::Simplex,
        m: 3,
        power: 0.1,
        noise_var: 1.0,
        decoders: Vec::new(),
        grid: Vec::new(),
        trials: DEFAULT_TRIALS,
        master_seed: DEFAULT_SEED,
        overlays: Vec::new(),
        epsilon: DEFAULT_EPSILON,
        alpha: 0.05,
    };
    let spec = match id {
        1 => ExperimentSpec {
            family: CodebookFamily::RandomUniformEnv,
            decoders: vec![DecoderId::IcpMethod1, DecoderId::IcpMethod2, DecoderId::Mdd],
            grid: n_grid(0.0, 1.0, 1).collect(),
            overlays: vec![FormulaId::Prop1],
            ..base
        },
        2 => ExperimentSpec {
            family: CodebookFamily::Inter,
            decoders: vec![DecoderId::Mdd],
            grid: BLENDS.into_iter().flat_map(|a| n_grid(a, 0.0, 1)).collect(),
            overlays: vec![FormulaId::Shannon],
            ..base
        },
        3 => ExperimentSpec {
            decoders: vec![DecoderId::OlsMdd, DecoderId::Mdd],
            grid: n_grid(0.0, 0.0, 1).collect(),
            overlays: vec![FormulaId::Shannon],
            ..base
        },
        4 => ExperimentSpec {
            decoders: vec![DecoderId::OlsMdd],
            grid: [1, 2].into_iter().flat_map(|k| n_grid(0.0, 0.0, k)).collect(),
            ..base
        },
        5 => ExperimentSpec {
            family: CodebookFamily::Inter,
            decoders: vec![DecoderId::Mdd, DecoderId::OlsMdd, DecoderId::Jin],
            grid: BLENDS
                .into_iter()
                .map(|a| GridPoint { n: 100, a, d: 0.0, k: 1 })
                .collect(),
            ..base
        },
        _ => return Err(Error::invalid("figure", format!("expected 1..=5, got {id}"))),
    };
    Ok(spec)
}
