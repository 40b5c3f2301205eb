//! Stateless multi-octave value noise.

use crate::rng::{hash_words, unit_f64};

#[inline]
pub fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

#[inline]
fn lattice(seed: u64, octave: u64, ix: i64, iy: i64) -> f64 {
    unit_f64(hash_words(&[seed, octave, ix as u64, iy as u64]))
}

/// Single-octave value noise at lattice coordinates `(x, y)`, in [0, 1).
pub fn value_noise(seed: u64, octave: u64, x: f64, y: f64) -> f64 {
    let x0 = x.floor();
    let y0 = y.floor();
    let tx = smoothstep(x - x0);
    let ty = smoothstep(y - y0);
    let (ix, iy) = (x0 as i64, y0 as i64);
    let v00 = lattice(seed, octave, ix, iy);
    let v10 = lattice(seed, octave, ix + 1, iy);
    let v01 = lattice(seed, octave, ix, iy + 1);
    let v11 = lattice(seed, octave, ix + 1, iy + 1);
    let top = v00 + (v10 - v00) * tx;
    let bottom = v01 + (v11 - v01) * tx;
    top + (bottom - top) * ty
}

/// Fractal sum over `octaves`: amplitude 0.5^o, frequency 2^o * 4 / width
/// (lattice cells per pixel). Normalized by the amplitude sum, so the
/// result stays in [0, 1).
pub fn fbm(seed: u64, octaves: u32, width: usize, px: f64, py: f64) -> f64 {
    let base = 4.0 / width as f64;
    let mut sum = 0.0;
    let mut norm = 0.0;
    let mut amp = 1.0;
    let mut freq = base;
    for o in 0..octaves.max(1) {
        sum += amp * value_noise(seed, o as u64, px * freq, py * freq);
        norm += amp;
        amp *= 0.5;
        freq *= 2.0;
    }
    sum / norm
}

/// Fills a `width * height` plane, row-major.
pub fn fbm_field(seed: u64, octaves: u32, width: usize, height: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            out.push(fbm(seed, octaves, width, x as f64, y as f64));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_hits_lattice_values_at_integer_points() {
        let v = value_noise(7, 0, 3.0, 5.0);
        assert_eq!(v, lattice(7, 0, 3, 5));
    }

    #[test]
    fn fbm_is_bounded_and_deterministic() {
        let a = fbm_field(99, 4, 32, 32);
        let b = fbm_field(99, 4, 32, 32);
        assert_eq!(a, b);
        assert!(a.iter().all(|v| (0.0..1.0).contains(v)));
        let c = fbm_field(100, 4, 32, 32);
        assert_ne!(a, c);
    }

    #[test]
    fn noise_is_continuous() {
        let a = value_noise(1, 0, 2.999_999, 1.5);
        let b = value_noise(1, 0, 3.0, 1.5);
        assert!((a - b).abs() < 1e-6);
    }
}
