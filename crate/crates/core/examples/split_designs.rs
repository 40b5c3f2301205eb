//! Random, distance-buffered and regional-holdout splits of one world, with
//! an exhaustive check of the buffer distance.

use landkit::splits::{make_split, SplitDesign};
use landkit::synth::{gen_location, sample_id, WorldConfig};

#[derive(Clone)]
struct Site {
    id: String,
    lat: f64,
    lon: f64,
    region: String,
}

impl landkit::dataset::Located for Site {
    fn id(&self) -> &str {
        &self.id
    }
    fn lat(&self) -> f64 {
        self.lat
    }
    fn lon(&self) -> f64 {
        self.lon
    }
    fn region(&self) -> &str {
        &self.region
    }
}

fn main() -> landkit::Result<()> {
    let cfg = WorldConfig {
        n_samples: 2000,
        ..WorldConfig::default()
    };
    let sites: Vec<Site> = (0..cfg.n_samples)
        .map(|i| {
            let (lat, lon, region) = gen_location(&cfg, i);
            Site {
                id: sample_id(i),
                lat,
                lon,
                region: region.to_string(),
            }
        })
        .collect();

    let designs = [
        SplitDesign::Random { test_frac: 0.2 },
        SplitDesign::Buffered {
            d_min_km: 250.0,
            test_frac: 0.2,
        },
        SplitDesign::HoldoutRegion { region: "west".into() },
    ];
    for d in &designs {
        let s = make_split(&sites, d, 1)?;
        println!(
            "{:<15} train {:>5}  test {:>4}  quarantined {:>4}  min train/test distance {:>8.1} km",
            d.label(),
            s.train.len(),
            s.test.len(),
            s.quarantined.len(),
            s.min_cross_distance_km(&sites)
        );
    }
    Ok(())
}
