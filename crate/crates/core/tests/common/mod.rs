#![allow(dead_code)]

use std::path::PathBuf;

use swingbench::{load_grid, Bus, BusId, BusKind, GridNetwork, Line, UnitSystem};

pub fn case_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../cases").join(name)
}

pub fn case(name: &str) -> GridNetwork {
    load_grid(case_path(name)).unwrap()
}

pub fn bus(id: u32, power: f64) -> Bus {
    Bus {
        id: BusId(id),
        kind: if power > 0.0 { BusKind::Generator } else { BusKind::Load },
        power,
        inertia_constant: Some(5.0),
        damping_override: None,
    }
}

pub fn line(from: u32, to: u32, susceptance: f64) -> Line {
    Line {
        from: BusId(from),
        to: BusId(to),
        susceptance,
    }
}

/// Grid in MW units with buses numbered from 1.
pub fn grid(powers: &[f64], lines: &[(u32, u32, f64)]) -> GridNetwork {
    let buses = powers.iter().enumerate().map(|(i, &p)| bus(i as u32 + 1, p)).collect();
    let lines = lines.iter().map(|&(a, b, s)| line(a, b, s)).collect();
    GridNetwork::new(buses, lines, 50.0, UnitSystem::Megawatt).unwrap()
}

pub fn path_grid(powers: &[f64], susceptances: &[f64]) -> GridNetwork {
    let lines: Vec<(u32, u32, f64)> = susceptances
        .iter()
        .enumerate()
        .map(|(i, &b)| (i as u32 + 1, i as u32 + 2, b))
        .collect();
    grid(powers, &lines)
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Least-squares slope of y against x.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}
