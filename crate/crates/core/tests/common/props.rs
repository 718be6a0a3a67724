//! Kernel properties shared by the proptest suites and the acceptance runner.
//! Each check returns `Err` with a description when the property fails.

use ginidb::kernel::{bottom_treatment_pip, gini_weighted, top_code, GiniOptions};
use proptest::prelude::*;

use super::{oracle_gini, rel_err};

const TOL: f64 = 1e-9;

fn gini(values: &[f64], weights: &[f64]) -> Result<f64, String> {
    gini_weighted(values, weights, GiniOptions::default()).map_err(|e| e.to_string())
}

fn unit(n: usize) -> Vec<f64> {
    vec![1.0; n]
}

/// Positive welfare values.
pub fn welfare() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1000.0, 2..50)
}

/// Welfare with matching positive weights; some samples have many ties.
pub fn weighted_sample() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=50, any::<bool>()).prop_flat_map(|(n, ties)| {
        let values = if ties {
            prop::collection::vec((0u32..6).prop_map(f64::from), n).boxed()
        } else {
            prop::collection::vec(0.0f64..1000.0, n).boxed()
        };
        (values, prop::collection::vec(0.05f64..20.0, n))
            .prop_filter("positive total", |(v, _)| v.iter().any(|x| *x > 0.0))
    })
}

/// Relative error of the kernel against the pairwise-difference oracle.
pub fn oracle_error(values: &[f64], weights: &[f64]) -> Result<f64, String> {
    let got = gini(values, weights)?;
    Ok(rel_err(got, oracle_gini(values, weights)))
}

pub fn scale_invariance(values: &[f64], c: f64) -> Result<(), String> {
    let w = unit(values.len());
    let base = gini(values, &w)?;
    let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
    let g = gini(&scaled, &w)?;
    if (g - base).abs() > TOL * base.max(1.0) {
        return Err(format!("G(x) = {base}, G({c}x) = {g}"));
    }
    Ok(())
}

/// Replicating the population k times, or multiplying every weight by k,
/// leaves the Gini unchanged.
pub fn replication_invariance(values: &[f64], k: usize) -> Result<(), String> {
    let w = unit(values.len());
    let base = gini(values, &w)?;
    let replicated: Vec<f64> = values.iter().copied().cycle().take(values.len() * k).collect();
    let g_rep = gini(&replicated, &unit(replicated.len()))?;
    let heavy: Vec<f64> = w.iter().map(|x| x * k as f64).collect();
    let g_weight = gini(values, &heavy)?;
    for g in [g_rep, g_weight] {
        if (g - base).abs() > TOL * base.max(1.0) {
            return Err(format!("G = {base}, replicated {k}x gives {g}"));
        }
    }
    Ok(())
}

/// Moving `frac` of half the gap from a richer to a poorer person lowers
/// the Gini.
pub fn transfer_direction(values: &[f64], a: usize, b: usize, frac: f64) -> Result<(), String> {
    let mut x = values.to_vec();
    x.sort_by(f64::total_cmp);
    let (poor, rich) = (a.min(b) % x.len(), a.max(b) % x.len());
    let gap = x[rich] - x[poor];
    if gap <= 1e-6 * x[x.len() - 1] {
        return Ok(());
    }
    let w = unit(x.len());
    let before = gini(&x, &w)?;
    let delta = frac * gap / 2.0;
    x[rich] -= delta;
    x[poor] += delta;
    let after = gini(&x, &w)?;
    if after < before {
        Ok(())
    } else {
        Err(format!("transfer of {delta} raised G from {before} to {after}"))
    }
}

/// Lower caps never raise the Gini, and capping never raises it above the
/// uncapped value.
pub fn top_coding_monotone(values: &[f64], lo: f64, hi: f64) -> Result<(), String> {
    let max = values.iter().copied().fold(0.0, f64::max);
    let (c1, c2) = (max * lo.min(hi), max * lo.max(hi));
    let w = unit(values.len());
    let g = gini(values, &w)?;
    let g1 = gini(&top_code(values, c1).map_err(|e| e.to_string())?, &w)?;
    let g2 = gini(&top_code(values, c2).map_err(|e| e.to_string())?, &w)?;
    if g1 <= g2 + TOL && g2 <= g + TOL {
        Ok(())
    } else {
        Err(format!("caps {c1} <= {c2}: G = {g1}, {g2}, uncapped {g}"))
    }
}

/// No negatives survive, everything is at least the floor, survivors keep
/// their order, and applying the rule twice changes nothing.
pub fn bottom_floor(values: &[f64], floor: f64) -> Result<(), String> {
    let out = bottom_treatment_pip(values, floor);
    let expected: Vec<f64> = values
        .iter()
        .filter(|v| **v >= 0.0)
        .map(|v| if *v < floor { floor } else { *v })
        .collect();
    if out != expected {
        return Err(format!("{values:?} -> {out:?}"));
    }
    if out.iter().any(|v| *v < floor || *v < 0.0) {
        return Err(format!("value below floor in {out:?}"));
    }
    if bottom_treatment_pip(&out, floor) != out {
        return Err("rule is not idempotent".into());
    }
    Ok(())
}
