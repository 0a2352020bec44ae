//! Regenerates the files in `fixtures/`:
//!
//! ```text
//! cargo run --example gen_fixtures
//! ```

use std::f64::consts::TAU;
use std::path::Path;

use serde_json::json;
use shapealign::estimator::{BandRule, FitConfig};
use shapealign::grid::make_grid;
use shapealign::io::{panel_to_csv, write_atomic};
use shapealign::montecarlo::{StudyConfig, TruthSpec};
use shapealign::panel::{
    generate_panel, CoeffEntry, ConstraintRegime, CurvePanel, ModelTruth, ParameterSet, RegimeKind,
    Shape, ShapeSpec, ShapeSpectrum,
};
use shapealign::Complex64;

fn main() -> shapealign::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    std::fs::create_dir_all(&dir)?;

    // noiseless, band-limited, three curves
    let shape = ShapeSpectrum::from_positive(
        None,
        &[Complex64::new(1.0, 0.3), Complex64::new(-0.4, 0.2), Complex64::new(0.1, -0.25)],
    );
    let (a2, a3) = (-0.8f64, 1.1f64);
    let a1 = (3.0 - a2 * a2 - a3 * a3).sqrt();
    let truth = ParameterSet::new(
        vec![0.0, 1.3, 4.0],
        vec![a1, a2, a3],
        vec![1.0, -2.0, 0.5],
        0.0,
        ConstraintRegime::a0(),
    )?;
    let grid = make_grid(101)?;
    let panel = generate_panel(&truth, &shape, &grid, 0)?;
    let panel = CurvePanel::new(
        grid,
        panel.rows().to_vec(),
        Some(vec!["c1".into(), "c2".into(), "c3".into()]),
    )?;
    write_atomic(&dir.join("noiseless_j3.csv"), &panel_to_csv(&panel)?)?;
    let meta = json!({
        "theta": truth.theta(),
        "a": truth.a(),
        "upsilon": truth.upsilon(),
        "sigma": 0.0,
        "m": 5,
        "shape_coeffs": shape.entries(),
    });
    write_atomic(
        &dir.join("noiseless_j3_truth.json"),
        format!("{}\n", serde_json::to_string_pretty(&meta)?).as_bytes(),
    )?;

    // three temperature-like daily series over one year
    let annual = ShapeSpectrum::from_entries(
        &[
            CoeffEntry { l: 1, re: -3.5, im: 0.0 },
            CoeffEntry { l: -1, re: -3.5, im: 0.0 },
            CoeffEntry { l: 2, re: 0.35, im: 0.2 },
            CoeffEntry { l: -2, re: 0.35, im: -0.2 },
            CoeffEntry { l: 3, re: 0.0, im: -0.1 },
            CoeffEntry { l: -3, re: 0.0, im: 0.1 },
        ],
        false,
    )?;
    let day = TAU / 365.0;
    let cities = ModelTruth::from_raw(
        &[0.0, 6.0 * day, 14.0 * day],
        &[1.0, 0.7, 1.25],
        &[12.5, 11.8, 13.4],
        1.5,
        &Shape::spectrum(annual),
        ConstraintRegime::a0(),
    )?;
    let grid = make_grid(365)?;
    let panel = generate_panel(&cities.params, &cities.shape, &grid, 2024)?;
    let panel = CurvePanel::new(
        grid,
        panel.rows().to_vec(),
        Some(vec!["harbor".into(), "inland".into(), "valley".into()]),
    )?;
    write_atomic(&dir.join("three_cities.csv"), &panel_to_csv(&panel)?)?;

    // the two-curve parabola study
    let study = StudyConfig {
        truth: TruthSpec {
            shape: ShapeSpec::Parabola { scale: 20.0 },
            theta: vec![0.0, 0.8],
            a: vec![0.75, 1.199],
            upsilon: vec![2.5, 0.5],
            sigma: 1.0,
        },
        n_list: vec![201],
        replicates: 100,
        base_seed: 1,
        fit_config: FitConfig {
            m_rule: BandRule::Explicit(4),
            ..FitConfig::default()
        },
        regimes: vec![RegimeKind::A0, RegimeKind::A1],
        upsilon_max: None,
        level: 0.95,
    };
    write_atomic(
        &dir.join("figure2.json"),
        format!("{}\n", serde_json::to_string_pretty(&study)?).as_bytes(),
    )?;
    Ok(())
}
