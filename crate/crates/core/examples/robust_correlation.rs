//! Biweight midcorrelation against Pearson on data with a single outlier.

use landkit::rng::SplitMix64;
use landkit::stats::{bicor, pearson};

fn main() -> landkit::Result<()> {
    let mut rng = SplitMix64::new(3);
    let x: Vec<f64> = (0..50).map(|_| rng.normal()).collect();
    let y: Vec<f64> = x.iter().map(|v| v + 0.3 * rng.normal()).collect();
    println!("clean:        bicor {:.4}  pearson {:.4}", bicor(&x, &y)?.unwrap(), pearson(&x, &y)?.unwrap());

    let (mut xo, mut yo) = (x.clone(), y.clone());
    xo[0] = 40.0;
    yo[0] = -40.0;
    println!("one outlier:  bicor {:.4}  pearson {:.4}", bicor(&xo, &yo)?.unwrap(), pearson(&xo, &yo)?.unwrap());

    println!("constant:     bicor {:?}", bicor(&[1.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0])?);
    Ok(())
}
