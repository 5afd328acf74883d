//! GEE against a reference fit produced by an independent implementation
//! (statsmodels, exchangeable working correlation, robust covariance) on
//! an unbalanced synthetic panel stored as a fixture.

use pearl::stats::{gee_fit, GeeCluster, GeeData, GeeOptions, TABLE6_COVARIATES};
use serde::Deserialize;

#[derive(Deserialize)]
struct Fixture {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    groups: Vec<u32>,
    params: Vec<f64>,
    bse: Vec<f64>,
    rho: f64,
    scale: f64,
}

fn load() -> (GeeData, Fixture) {
    let f: Fixture = serde_json::from_str(include_str!("fixtures/gee_statsmodels.json")).unwrap();
    let mut clusters: Vec<GeeCluster> = Vec::new();
    let mut last = None;
    for ((x, y), g) in f.x.iter().zip(&f.y).zip(&f.groups) {
        if last != Some(*g) {
            clusters.push(GeeCluster { x: Vec::new(), y: Vec::new() });
            last = Some(*g);
        }
        let c = clusters.last_mut().unwrap();
        c.x.extend(x);
        c.y.push(*y);
    }
    let names = TABLE6_COVARIATES.iter().map(|s| s.to_string()).collect();
    (GeeData { names, clusters }, f)
}

#[test]
fn matches_reference_implementation() {
    let (data, f) = load();
    let g = gee_fit(&data, &GeeOptions::default()).unwrap();
    assert!((g.rho - f.rho).abs() < 1e-6, "rho {} vs {}", g.rho, f.rho);
    assert!((g.scale / f.scale - 1.0).abs() < 1e-6, "scale {} vs {}", g.scale, f.scale);
    for k in 0..8 {
        let tol = 1e-6 * f.bse[k];
        assert!((g.estimates[k] - f.params[k]).abs() < tol, "{}: {} vs {}", g.names[k], g.estimates[k], f.params[k]);
        assert!((g.se[k] / f.bse[k] - 1.0).abs() < 1e-5, "{} se: {} vs {}", g.names[k], g.se[k], f.bse[k]);
    }
}
