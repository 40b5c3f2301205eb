//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library except to build its input types.
#![allow(dead_code)]

use std::collections::VecDeque;

/// Small xorshift generator, deliberately unrelated to the library's RNG.
pub struct XorShift(u64);

impl XorShift {
    pub fn new(seed: u64) -> Self {
        XorShift(seed.wrapping_mul(0x2545_F491_4F6C_DD1D) | 1)
    }

    pub fn next(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    pub fn unit(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn gauss(&mut self) -> f64 {
        let u1 = self.unit().max(1e-300);
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Random class raster: iid noise, blocks or smooth bands depending on style.
pub fn random_labels(rng: &mut XorShift, w: usize, h: usize, classes: u32) -> Vec<u32> {
    match rng.below(3) {
        0 => (0..w * h).map(|_| rng.below(classes as u64) as u32).collect(),
        1 => {
            let b = 1 + rng.below(4) as usize;
            let bw = w.div_ceil(b);
            let table: Vec<u32> = (0..bw * h.div_ceil(b) + 1).map(|_| rng.below(classes as u64) as u32).collect();
            (0..w * h).map(|i| table[(i / w / b) * bw + (i % w) / b]).collect()
        }
        _ => {
            let (a, c) = (rng.unit() * 0.9, rng.unit() * 0.9);
            (0..w * h)
                .map(|i| {
                    let v = (i % w) as f64 * a + (i / w) as f64 * c + rng.unit() * 0.8;
                    (v as u32) % classes
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefPatch {
    pub class: u32,
    pub cells: Vec<(usize, usize)>,
    pub perimeter: usize,
}

/// Breadth-first flood fill over the raster in scan order.
pub fn flood_fill(w: usize, h: usize, labels: &[u32], eight: bool) -> Vec<RefPatch> {
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let offsets: Vec<(i64, i64)> = if eight {
        vec![(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    } else {
        vec![(-1, 0), (0, -1), (0, 1), (1, 0)]
    };
    for start in 0..w * h {
        if seen[start] {
            continue;
        }
        let class = labels[start];
        let mut cells = Vec::new();
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(i) = queue.pop_front() {
            let (r, c) = (i / w, i % w);
            cells.push((r, c));
            for &(dr, dc) in &offsets {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                if nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64 {
                    continue;
                }
                let j = nr as usize * w + nc as usize;
                if !seen[j] && labels[j] == class {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        let mut perimeter = 0;
        for &(r, c) in &cells {
            for (dr, dc) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                let outside = nr < 0 || nc < 0 || nr >= h as i64 || nc >= w as i64;
                if outside || labels[nr as usize * w + nc as usize] != class {
                    perimeter += 1;
                }
            }
        }
        out.push(RefPatch {
            class,
            cells,
            perimeter,
        });
    }
    out
}

pub fn ref_shdi(labels: &[u32]) -> f64 {
    let max = *labels.iter().max().unwrap() as usize;
    let mut counts = vec![0usize; max + 1];
    for &l in labels {
        counts[l as usize] += 1;
    }
    let n = labels.len() as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

pub fn ref_cohesion(patches: &[RefPatch], total: usize) -> Option<f64> {
    if total <= 1 {
        return None;
    }
    let p: f64 = patches.iter().map(|q| q.perimeter as f64).sum();
    let pa: f64 = patches.iter().map(|q| q.perimeter as f64 * (q.cells.len() as f64).sqrt()).sum();
    let v = 100.0 * (1.0 - p / pa) / (1.0 - 1.0 / (total as f64).sqrt());
    Some(v.clamp(0.0, 100.0))
}

/// Minimum centre distance over all cell pairs, compared in squared form.
pub fn ref_connect(patches: &[RefPatch], threshold: f64) -> Option<f64> {
    let (mut joins, mut pairs) = (0usize, 0usize);
    for i in 0..patches.len() {
        for j in i + 1..patches.len() {
            if patches[i].class != patches[j].class {
                continue;
            }
            pairs += 1;
            let mut best = u64::MAX;
            for &(r1, c1) in &patches[i].cells {
                for &(r2, c2) in &patches[j].cells {
                    let dr = r1 as i64 - r2 as i64;
                    let dc = c1 as i64 - c2 as i64;
                    best = best.min((dr * dr + dc * dc) as u64);
                }
            }
            if (best as f64) <= threshold * threshold {
                joins += 1;
            }
        }
    }
    (pairs > 0).then(|| 100.0 * joins as f64 / pairs as f64)
}

pub fn ref_frac_mn(patches: &[RefPatch], cell: f64) -> Option<f64> {
    let vals: Vec<f64> = patches
        .iter()
        .filter_map(|q| {
            let a = q.cells.len() as f64 * cell * cell;
            let p = q.perimeter as f64 * cell;
            (a.ln() != 0.0).then(|| 2.0 * (0.25 * p).ln() / a.ln())
        })
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

pub fn ref_mesh(patches: &[RefPatch], total: usize, cell: f64) -> f64 {
    let a_total = total as f64 * cell * cell;
    patches
        .iter()
        .map(|q| (q.cells.len() as f64 * cell * cell).powi(2))
        .sum::<f64>()
        / a_total
        / 1e4
}

/// Relative difference; NA must match NA.
pub fn rel_err(a: Option<f64>, b: Option<f64>) -> f64 {
    match (a, b) {
        (None, None) => 0.0,
        (Some(x), Some(y)) if x == y => 0.0,
        (Some(x), Some(y)) => (x - y).abs() / x.abs().max(y.abs()),
        _ => f64::INFINITY,
    }
}

fn sorted_median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 0 {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    } else {
        s[n / 2]
    }
}

/// Two-pass Pearson: means first, then centred moments.
pub fn ref_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    if x.iter().all(|&a| a == x[0]) || y.iter().all(|&b| b == y[0]) || sxx == 0.0 || syy == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Two-pass biweight midcorrelation: robust location and scale first, then
/// the weighted cross-product ratio.
pub fn ref_bicor(x: &[f64], y: &[f64]) -> Option<f64> {
    let mx = sorted_median(x);
    let my = sorted_median(y);
    let madx = sorted_median(&x.iter().map(|v| (v - mx).abs()).collect::<Vec<_>>());
    let mady = sorted_median(&y.iter().map(|v| (v - my).abs()).collect::<Vec<_>>());
    if madx == 0.0 || mady == 0.0 {
        return ref_pearson(x, y);
    }
    let weight = |v: f64, m: f64, mad: f64| {
        let u = (v - m) / (9.0 * mad);
        if u.abs() < 1.0 {
            (1.0 - u * u) * (1.0 - u * u)
        } else {
            0.0
        }
    };
    let (mut num, mut dx, mut dy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let ta = (a - mx) * weight(a, mx, madx);
        let tb = (b - my) * weight(b, my, mady);
        num += ta * tb;
        dx += ta * ta;
        dy += tb * tb;
    }
    if dx == 0.0 || dy == 0.0 {
        return ref_pearson(x, y);
    }
    Some((num / (dx.sqrt() * dy.sqrt())).clamp(-1.0, 1.0))
}

/// Great-circle distance via the vector (chord) formulation.
pub fn ref_distance_km(a: (f64, f64), b: (f64, f64)) -> f64 {
    let to_vec = |(lat, lon): (f64, f64)| {
        let (la, lo) = (lat.to_radians(), lon.to_radians());
        [la.cos() * lo.cos(), la.cos() * lo.sin(), la.sin()]
    };
    let (p, q) = (to_vec(a), to_vec(b));
    let chord = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
    2.0 * 6371.0 * (chord / 2.0).min(1.0).asin()
}

/// Minimal LSCP parser: (width, height, cell size, names, values).
pub fn parse_lscp(bytes: &[u8]) -> (u32, u32, f32, Vec<String>, Vec<f32>) {
    assert_eq!(&bytes[0..4], b"LSCP");
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    assert_eq!(u16_at(4), 1);
    let channels = u16_at(6) as usize;
    let (w, h) = (u32_at(8), u32_at(12));
    let cell = f32::from_le_bytes(bytes[16..20].try_into().unwrap());
    let blob_len = u32_at(20) as usize;
    let names: Vec<String> = std::str::from_utf8(&bytes[24..24 + blob_len])
        .unwrap()
        .split('\n')
        .map(str::to_string)
        .collect();
    assert_eq!(names.len(), channels);
    let start = 24 + blob_len;
    let n = channels * w as usize * h as usize;
    assert_eq!(bytes.len(), start + 4 * n);
    let values = bytes[start..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    (w, h, cell, names, values)
}
