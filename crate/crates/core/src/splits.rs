//! Train/test designs: random, distance-buffered and regional holdout.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Located;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Great-circle distance between two (lat, lon) points in degrees.
pub fn haversine_km(a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    for (lat, lon) in [a, b] {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::invalid(format!("coordinate ({lat}, {lon}) out of range")));
        }
    }
    Ok(haversine_unchecked(a, b))
}

fn haversine_unchecked(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (p1, p2) = (a.0.to_radians(), b.0.to_radians());
    let dp = p2 - p1;
    let dl = (b.1 - a.1).to_radians();
    let s = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * s.sqrt().min(1.0).asin()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "design", content = "params", rename_all = "snake_case")]
pub enum SplitDesign {
    Random { test_frac: f64 },
    Buffered { d_min_km: f64, test_frac: f64 },
    HoldoutRegion { region: String },
}

impl SplitDesign {
    /// Short label used in report rows.
    pub fn label(&self) -> String {
        match self {
            SplitDesign::Random { .. } => "random".into(),
            SplitDesign::Buffered { d_min_km, .. } => format!("buffered_{d_min_km}km"),
            SplitDesign::HoldoutRegion { region } => format!("holdout_{region}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Train,
    Test,
    Quarantined,
}

/// Serialized as `split.json`: `{design, params, seed, train, test, quarantined}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    #[serde(flatten)]
    pub design: SplitDesign,
    pub seed: u64,
    pub train: Vec<String>,
    pub test: Vec<String>,
    pub quarantined: Vec<String>,
}

impl SplitAssignment {
    pub fn role(&self, id: &str) -> Option<Role> {
        if self.train.iter().any(|x| x == id) {
            Some(Role::Train)
        } else if self.test.iter().any(|x| x == id) {
            Some(Role::Test)
        } else if self.quarantined.iter().any(|x| x == id) {
            Some(Role::Quarantined)
        } else {
            None
        }
    }

    pub fn ids(&self, role: Role) -> &[String] {
        match role {
            Role::Train => &self.train,
            Role::Test => &self.test,
            Role::Quarantined => &self.quarantined,
        }
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut f, self)?;
        writeln!(f)?;
        f.flush()?;
        Ok(())
    }

    pub fn read_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
    }

    /// Smallest great-circle distance between any test and any train sample.
    pub fn min_cross_distance_km<L: Located>(&self, items: &[L]) -> f64 {
        let pos = |id: &str| {
            let it = items.iter().find(|x| x.id() == id).expect("id in manifest");
            (it.lat(), it.lon())
        };
        let train: Vec<_> = self.train.iter().map(|s| pos(s)).collect();
        let mut best = f64::INFINITY;
        for t in &self.test {
            let a = pos(t);
            for &b in &train {
                best = best.min(haversine_unchecked(a, b));
            }
        }
        best
    }
}

fn test_count(n: usize, test_frac: f64) -> Result<usize> {
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::invalid(format!("test_frac {test_frac} must lie in (0, 1)")));
    }
    let k = (test_frac * n as f64).round() as usize;
    if k == 0 || k >= n {
        return Err(Error::Infeasible(format!(
            "test_frac {test_frac} on {n} samples leaves an empty train or test set"
        )));
    }
    Ok(k)
}

fn check_coords<L: Located>(items: &[L]) -> Result<()> {
    if items.is_empty() {
        return Err(Error::invalid("manifest is empty"));
    }
    let mut seen = HashSet::new();
    for it in items {
        if !seen.insert(it.id()) {
            return Err(Error::invalid(format!("duplicate sample id {}", it.id())));
        }
        if !(-90.0..=90.0).contains(&it.lat()) || !(-180.0..=180.0).contains(&it.lon()) {
            return Err(Error::invalid(format!("sample {} has out-of-range coordinates", it.id())));
        }
    }
    Ok(())
}

/// Keeps ids in manifest order.
fn ordered<L: Located>(items: &[L], keep: impl Fn(usize) -> bool) -> Vec<String> {
    items
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .map(|(_, it)| it.id().to_string())
        .collect()
}

/// Seeded shuffle, first `round(test_frac * N)` become test.
pub fn split_random<L: Located>(items: &[L], test_frac: f64, seed: u64) -> Result<SplitAssignment> {
    check_coords(items)?;
    let k = test_count(items.len(), test_frac)?;
    let mut order: Vec<usize> = (0..items.len()).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    let mut is_test = vec![false; items.len()];
    for &i in &order[..k] {
        is_test[i] = true;
    }
    Ok(SplitAssignment {
        design: SplitDesign::Random { test_frac },
        seed,
        train: ordered(items, |i| !is_test[i]),
        test: ordered(items, |i| is_test[i]),
        quarantined: Vec::new(),
    })
}

/// Test set drawn as in [`split_random`]; every remaining sample closer than
/// `d_min_km` to some test sample is quarantined instead of trained on.
pub fn split_buffered<L: Located>(
    items: &[L],
    d_min_km: f64,
    test_frac: f64,
    seed: u64,
) -> Result<SplitAssignment> {
    check_coords(items)?;
    if !(d_min_km.is_finite() && d_min_km >= 0.0) {
        return Err(Error::invalid("d_min_km must be a nonnegative finite distance"));
    }
    let k = test_count(items.len(), test_frac)?;
    let mut order: Vec<usize> = (0..items.len()).collect();
    SplitMix64::new(seed).shuffle(&mut order);
    let test_idx = &order[..k];

    let mut role = vec![Role::Train; items.len()];
    for &i in test_idx {
        role[i] = Role::Test;
    }
    for &i in &order[k..] {
        let p = (items[i].lat(), items[i].lon());
        let near = test_idx
            .iter()
            .any(|&t| haversine_unchecked(p, (items[t].lat(), items[t].lon())) < d_min_km);
        if near {
            role[i] = Role::Quarantined;
        }
    }
    let train = ordered(items, |i| role[i] == Role::Train);
    if train.is_empty() {
        return Err(Error::Infeasible(format!(
            "a {d_min_km} km buffer around {k} test samples leaves no training samples"
        )));
    }
    Ok(SplitAssignment {
        design: SplitDesign::Buffered {
            d_min_km,
            test_frac,
        },
        seed,
        train,
        test: ordered(items, |i| role[i] == Role::Test),
        quarantined: ordered(items, |i| role[i] == Role::Quarantined),
    })
}

/// Every sample tagged `region` is test, the rest train.
pub fn split_holdout_region<L: Located>(items: &[L], region: &str) -> Result<SplitAssignment> {
    check_coords(items)?;
    let test = ordered(items, |i| items[i].region() == region);
    let train = ordered(items, |i| items[i].region() != region);
    if test.is_empty() {
        return Err(Error::Infeasible(format!("no samples in region {region:?}")));
    }
    if train.is_empty() {
        return Err(Error::Infeasible(format!(
            "every sample is in region {region:?}; nothing left to train on"
        )));
    }
    Ok(SplitAssignment {
        design: SplitDesign::HoldoutRegion {
            region: region.to_string(),
        },
        seed: 0,
        train,
        test,
        quarantined: Vec::new(),
    })
}

/// Dispatches on a design value.
pub fn make_split<L: Located>(items: &[L], design: &SplitDesign, seed: u64) -> Result<SplitAssignment> {
    match design {
        SplitDesign::Random { test_frac } => split_random(items, *test_frac, seed),
        SplitDesign::Buffered {
            d_min_km,
            test_frac,
        } => split_buffered(items, *d_min_km, *test_frac, seed),
        SplitDesign::HoldoutRegion { region } => split_holdout_region(items, region),
    }
}
