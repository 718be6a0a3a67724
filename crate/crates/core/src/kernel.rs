//! Gini coefficients from microdata and grouped Lorenz data, plus the
//! welfare transforms that change measured inequality: equivalence scales,
//! bottom treatment, and top-coding.
//!
//! All results are in Gini points on [0, 100].

use std::io::Read;

use serde::Deserialize;

use crate::error::KernelError;
use crate::model::EqScale;

/// One household or individual welfare record.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct MicroRecord {
    /// Currency units per period; may be negative before bottom treatment.
    pub welfare: f64,
    #[serde(default = "unit_weight")]
    pub weight: f64,
    #[serde(default = "single_person")]
    pub household_size: u32,
    #[serde(default)]
    pub adults: Option<u32>,
    #[serde(default)]
    pub children: Option<u32>,
}

fn unit_weight() -> f64 {
    1.0
}

fn single_person() -> u32 {
    1
}

impl MicroRecord {
    pub fn new(welfare: f64, weight: f64) -> Self {
        MicroRecord {
            welfare,
            weight,
            household_size: 1,
            adults: None,
            children: None,
        }
    }

    pub fn household(welfare: f64, adults: u32, children: u32) -> Self {
        MicroRecord {
            welfare,
            weight: 1.0,
            household_size: adults + children,
            adults: Some(adults),
            children: Some(children),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GiniOptions {
    /// Multiply by n/(n-1). Off by default: published Ginis are uncorrected.
    pub small_sample_correction: bool,
}

/// Weighted Gini of `values`: the mean absolute difference over all ordered
/// pairs divided by twice the mean.
///
/// Computed in one pass over the values sorted ascending, using
/// `Σ wᵢxᵢ(2Cᵢ − wᵢ − W) / (W · Σ wᵢxᵢ)` where `Cᵢ` is the cumulative weight
/// through record `i`. Sorting also fixes the summation order, so the result
/// does not depend on input order.
pub fn gini_weighted(
    values: &[f64],
    weights: &[f64],
    options: GiniOptions,
) -> Result<f64, KernelError> {
    assert_eq!(values.len(), weights.len(), "values and weights differ in length");
    let n = values.len();
    if n < 2 {
        return Err(KernelError::TooFewRecords(n));
    }
    for (i, (&x, &w)) in values.iter().zip(weights).enumerate() {
        if !x.is_finite() {
            return Err(KernelError::NonFiniteWelfare(i));
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(KernelError::InvalidWeight(i));
        }
        if x < 0.0 {
            return Err(KernelError::NegativeWelfare(i));
        }
    }

    let mut pairs: Vec<(f64, f64)> = values.iter().copied().zip(weights.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    let total_weight: f64 = pairs.iter().map(|p| p.1).sum();
    let total_welfare: f64 = pairs.iter().map(|(x, w)| x * w).sum();
    if total_welfare <= 0.0 {
        return Err(KernelError::UndefinedGini(total_welfare / total_weight));
    }

    let mut cumulative = 0.0;
    let mut acc = 0.0;
    for &(x, w) in &pairs {
        cumulative += w;
        acc += w * x * (2.0 * cumulative - w - total_weight);
    }
    let mut g = acc / (total_weight * total_welfare);
    if options.small_sample_correction {
        g *= n as f64 / (n as f64 - 1.0);
    }
    Ok(100.0 * g.max(0.0))
}

/// Weighted Gini of the records' welfare.
pub fn gini_microdata(records: &[MicroRecord]) -> Result<f64, KernelError> {
    gini_microdata_with(records, GiniOptions::default())
}

pub fn gini_microdata_with(
    records: &[MicroRecord],
    options: GiniOptions,
) -> Result<f64, KernelError> {
    let values: Vec<f64> = records.iter().map(|r| r.welfare).collect();
    let weights: Vec<f64> = records.iter().map(|r| r.weight).collect();
    gini_weighted(&values, &weights, options)
}

/// A point on a Lorenz curve: population share `p`, welfare share `l`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorenzPoint {
    pub p: f64,
    pub l: f64,
}

impl LorenzPoint {
    pub fn new(p: f64, l: f64) -> Self {
        LorenzPoint { p, l }
    }
}

const LORENZ_TOL: f64 = 1e-9;

/// Gini from a piecewise-linear Lorenz curve, `1 − Σ (pᵢ − pᵢ₋₁)(Lᵢ + Lᵢ₋₁)`.
///
/// The curve starts implicitly at (0, 0); a leading (0, 0) point is
/// accepted. The last point must be (1, 1). Linear interpolation between
/// points understates the Gini of the underlying distribution, so the value
/// is a lower bound.
pub fn gini_lorenz(points: &[LorenzPoint]) -> Result<f64, KernelError> {
    let bad = |m: String| Err(KernelError::InvalidLorenz(m));
    if points.is_empty() {
        return bad("no points".into());
    }
    let mut prev = LorenzPoint::new(0.0, 0.0);
    let mut area = 0.0;
    for (i, pt) in points.iter().enumerate() {
        if !(pt.p.is_finite() && pt.l.is_finite()) {
            return bad(format!("point {i} is not finite"));
        }
        if i == 0 && pt.p == 0.0 && pt.l == 0.0 {
            continue;
        }
        if !(0.0..=1.0 + LORENZ_TOL).contains(&pt.p) || !(0.0..=1.0 + LORENZ_TOL).contains(&pt.l) {
            return bad(format!("point {i} outside the unit square"));
        }
        if pt.p <= prev.p {
            return bad(format!("p must be strictly increasing (point {i})"));
        }
        if pt.l < prev.l - LORENZ_TOL {
            return bad(format!("L must be non-decreasing (point {i})"));
        }
        if pt.l > pt.p + LORENZ_TOL {
            return bad(format!("L exceeds p at point {i}"));
        }
        area += (pt.p - prev.p) * (pt.l + prev.l);
        prev = *pt;
    }
    if (prev.p - 1.0).abs() > LORENZ_TOL || (prev.l - 1.0).abs() > LORENZ_TOL {
        return bad("curve must end at (1, 1)".into());
    }
    Ok((100.0 * (1.0 - area)).clamp(0.0, 100.0))
}

/// Builds a Lorenz curve from group welfare shares, ordered poorest first.
///
/// `population` gives each group's population share; `None` means equal
/// groups (quintiles, deciles). Both sequences are normalized to sum to one,
/// so percentages and fractions are equally accepted.
pub fn lorenz_from_shares(
    shares: &[f64],
    population: Option<&[f64]>,
) -> Result<Vec<LorenzPoint>, KernelError> {
    if shares.is_empty() {
        return Err(KernelError::InvalidLorenz("no groups".into()));
    }
    let equal = vec![1.0; shares.len()];
    let pop = population.unwrap_or(&equal);
    if pop.len() != shares.len() {
        return Err(KernelError::InvalidLorenz(
            "population and welfare shares differ in length".into(),
        ));
    }
    if shares.iter().chain(pop).any(|s| !s.is_finite() || *s < 0.0) {
        return Err(KernelError::InvalidLorenz("shares must be non-negative".into()));
    }
    let total_share: f64 = shares.iter().sum();
    let total_pop: f64 = pop.iter().sum();
    if total_share <= 0.0 || total_pop <= 0.0 {
        return Err(KernelError::InvalidLorenz("shares sum to zero".into()));
    }
    let n = shares.len();
    let mut cum_p = 0.0;
    let mut cum_l = 0.0;
    let mut points = Vec::with_capacity(n);
    for (i, (s, q)) in shares.iter().zip(pop).enumerate() {
        cum_p += q;
        cum_l += s;
        if i + 1 == n {
            points.push(LorenzPoint::new(1.0, 1.0));
        } else {
            points.push(LorenzPoint::new(cum_p / total_pop, cum_l / total_share));
        }
    }
    Ok(points)
}

/// OECD-modified equivalence factor: 1 for the first adult, 0.5 for each
/// further adult, 0.3 per child.
pub fn oecd_modified_factor(adults: u32, children: u32) -> Result<f64, KernelError> {
    if adults == 0 {
        return Err(KernelError::MissingComposition);
    }
    Ok(1.0 + 0.5 * f64::from(adults - 1) + 0.3 * f64::from(children))
}

/// Household welfare converted to welfare per equivalent person.
pub fn equivalise(record: &MicroRecord, scale: EqScale) -> Result<f64, KernelError> {
    if record.household_size == 0 {
        return Err(KernelError::InvalidHouseholdSize);
    }
    let size = f64::from(record.household_size);
    match scale {
        EqScale::PerCapita => Ok(record.welfare / size),
        EqScale::SquareRoot => Ok(record.welfare / size.sqrt()),
        EqScale::OecdModified => {
            let (adults, children) = match (record.adults, record.children) {
                (Some(a), Some(c)) => (a, c),
                _ => return Err(KernelError::MissingComposition),
            };
            Ok(record.welfare / oecd_modified_factor(adults, children)?)
        }
        other => Err(KernelError::UnsupportedScale(other.to_string())),
    }
}

/// Default floor of the PIP bottom rule, dollars per person per day.
pub const PIP_FLOOR: f64 = 0.28;

/// Drops negative values and raises values in `[0, floor)` to `floor`.
/// Survivors keep their order.
pub fn bottom_treatment_pip(values: &[f64], floor: f64) -> Vec<f64> {
    values
        .iter()
        .filter(|v| **v >= 0.0)
        .map(|v| v.max(floor))
        .collect()
}

/// The PIP bottom rule applied to records: negative-welfare records are
/// removed and the rest floored.
pub fn bottom_treatment_records(
    records: &[MicroRecord],
    floor: f64,
) -> Result<Vec<MicroRecord>, KernelError> {
    if !(floor.is_finite() && floor >= 0.0) {
        return Err(KernelError::InvalidFloor(floor));
    }
    Ok(records
        .iter()
        .filter(|r| r.welfare >= 0.0)
        .map(|r| MicroRecord {
            welfare: r.welfare.max(floor),
            ..*r
        })
        .collect())
}

/// Replaces values above `cap` with `cap`.
pub fn top_code(values: &[f64], cap: f64) -> Result<Vec<f64>, KernelError> {
    if !(cap.is_finite() && cap > 0.0) {
        return Err(KernelError::InvalidCap(cap));
    }
    Ok(values.iter().map(|v| v.min(cap)).collect())
}

/// Welfare transforms applied in the fixed order bottom, equivalise,
/// top-code.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Transforms {
    pub bottom_floor: Option<f64>,
    pub scale: Option<EqScale>,
    pub top_cap: Option<f64>,
}

pub fn apply_transforms(
    records: &[MicroRecord],
    transforms: &Transforms,
) -> Result<Vec<MicroRecord>, KernelError> {
    let mut out = match transforms.bottom_floor {
        Some(floor) => bottom_treatment_records(records, floor)?,
        None => records.to_vec(),
    };
    if let Some(scale) = transforms.scale {
        for r in &mut out {
            r.welfare = equivalise(r, scale)?;
        }
    }
    if let Some(cap) = transforms.top_cap {
        if !(cap.is_finite() && cap > 0.0) {
            return Err(KernelError::InvalidCap(cap));
        }
        for r in &mut out {
            r.welfare = r.welfare.min(cap);
        }
    }
    Ok(out)
}

/// Reads microdata: header with `welfare` and optionally `weight`,
/// `household_size`, `adults`, `children`.
pub fn read_microdata<R: Read>(input: R) -> Result<Vec<MicroRecord>, csv::Error> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    rdr.deserialize().collect()
}

#[derive(Debug, Deserialize)]
struct LorenzRow {
    #[serde(default)]
    p: Option<f64>,
    #[serde(default, alias = "L")]
    l: Option<f64>,
    #[serde(default)]
    share: Option<f64>,
    #[serde(default)]
    population: Option<f64>,
}

/// Reads grouped data. Either cumulative points (`p,l`) or group shares
/// (`share`, optional `population`), poorest group first.
pub fn read_lorenz<R: Read>(input: R) -> Result<Vec<LorenzPoint>, KernelError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let rows: Vec<LorenzRow> = rdr
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| KernelError::InvalidLorenz(e.to_string()))?;
    if rows.iter().all(|r| r.p.is_some() && r.l.is_some()) && !rows.is_empty() {
        return Ok(rows
            .iter()
            .map(|r| LorenzPoint::new(r.p.unwrap_or(0.0), r.l.unwrap_or(0.0)))
            .collect());
    }
    let shares: Option<Vec<f64>> = rows.iter().map(|r| r.share).collect();
    let shares =
        shares.ok_or_else(|| KernelError::InvalidLorenz("expected p,l or share columns".into()))?;
    let population: Option<Vec<f64>> = rows.iter().map(|r| r.population).collect();
    lorenz_from_shares(&shares, population.as_deref())
}
