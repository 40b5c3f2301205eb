//! Write a raster stack to an LSCP file, read it back and show what
//! validation reports for a broken stack.

use landkit::raster::{RasterStack, IMAGERY_BANDS};

fn main() -> landkit::Result<()> {
    let (w, h) = (4, 3);
    let bands: Vec<Vec<f32>> = (0..4)
        .map(|b| (0..w * h).map(|i| (b * 100 + i) as f32 / 1000.0).collect())
        .collect();
    let img = RasterStack::from_bands(w, h, &IMAGERY_BANDS, 43.0, bands)?;

    let dir = std::env::temp_dir().join("landkit-lscp-example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("tile.lscp");
    let bytes = img.write_file(&path)?;
    let back = RasterStack::read_file(&path)?;
    println!("wrote {bytes} bytes to {}", path.display());
    println!("round trip identical: {}", back == img);
    println!("channels: {:?}", back.channel_names());
    println!("pixel (row 1, col 2): {:?}", back.pixel(w + 2));

    let mut values = img.values().to_vec();
    values[5] = f32::NAN;
    let broken = RasterStack::from_parts_unchecked(w, h, vec!["red".into(), "red".into()], -1.0, values);
    match broken.validate() {
        Ok(()) => println!("unexpectedly valid"),
        Err(v) => {
            for violation in v {
                println!("violation: {violation}");
            }
        }
    }
    Ok(())
}
