//! Connected-patch extraction from class rasters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::segmentation::ClassRaster;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    pub fn from_int(n: u8) -> Result<Self> {
        match n {
            4 => Ok(Connectivity::Four),
            8 => Ok(Connectivity::Eight),
            _ => Err(Error::invalid(format!("connectivity must be 4 or 8, got {n}"))),
        }
    }

    pub fn as_int(self) -> u8 {
        match self {
            Connectivity::Four => 4,
            Connectivity::Eight => 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub patch_id: usize,
    pub class_id: u32,
    pub area_cells: usize,
    /// Cell edges bordering another class or the raster boundary.
    pub perimeter_edges: usize,
    /// Row-major indices of member cells, ascending.
    pub cells: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchTable {
    pub patches: Vec<Patch>,
    pub width: usize,
    pub height: usize,
    pub total_cells: usize,
    pub cell_size_m: f64,
    /// Patch id of every cell.
    pub patch_of: Vec<u32>,
}

struct DisjointSet {
    parent: Vec<u32>,
}

impl DisjointSet {
    fn new() -> Self {
        DisjointSet { parent: Vec::new() }
    }

    fn make(&mut self) -> u32 {
        let id = self.parent.len() as u32;
        self.parent.push(id);
        id
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        // smaller root wins, keeping the earliest provisional label
        if ra < rb {
            self.parent[rb as usize] = ra;
        } else if rb < ra {
            self.parent[ra as usize] = rb;
        }
    }
}

/// Two-pass union-find labeling. Patches are numbered in raster scan order
/// of their first cell; perimeter edges always use 4-adjacency.
pub fn label_patches(cr: &ClassRaster, connectivity: Connectivity, cell_size_m: f64) -> PatchTable {
    let (w, h) = (cr.width, cr.height);
    let n = w * h;
    let labels = &cr.labels;
    let mut provisional = vec![0u32; n];
    let mut ds = DisjointSet::new();

    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let c = labels[i];
            let mut neighbors = [u32::MAX; 4];
            let mut k = 0;
            if x > 0 && labels[i - 1] == c {
                neighbors[k] = provisional[i - 1];
                k += 1;
            }
            if y > 0 {
                let up = i - w;
                if labels[up] == c {
                    neighbors[k] = provisional[up];
                    k += 1;
                }
                if connectivity == Connectivity::Eight {
                    if x > 0 && labels[up - 1] == c {
                        neighbors[k] = provisional[up - 1];
                        k += 1;
                    }
                    if x + 1 < w && labels[up + 1] == c {
                        neighbors[k] = provisional[up + 1];
                        k += 1;
                    }
                }
            }
            if k == 0 {
                provisional[i] = ds.make();
            } else {
                let first = neighbors[0];
                provisional[i] = first;
                for &other in &neighbors[1..k] {
                    ds.union(first, other);
                }
            }
        }
    }

    // Second pass: resolve roots, renumber in scan order.
    let mut final_id = vec![u32::MAX; ds.parent.len()];
    let mut patches: Vec<Patch> = Vec::new();
    let mut patch_of = vec![0u32; n];
    for i in 0..n {
        let root = ds.find(provisional[i]) as usize;
        if final_id[root] == u32::MAX {
            final_id[root] = patches.len() as u32;
            patches.push(Patch {
                patch_id: patches.len(),
                class_id: labels[i],
                area_cells: 0,
                perimeter_edges: 0,
                cells: Vec::new(),
            });
        }
        let pid = final_id[root];
        patch_of[i] = pid;
        let p = &mut patches[pid as usize];
        p.area_cells += 1;
        p.cells.push(i as u32);

        let (x, y) = (i % w, i / w);
        let c = labels[i];
        let mut edges = 0;
        if x == 0 || labels[i - 1] != c {
            edges += 1;
        }
        if x + 1 == w || labels[i + 1] != c {
            edges += 1;
        }
        if y == 0 || labels[i - w] != c {
            edges += 1;
        }
        if y + 1 == h || labels[i + w] != c {
            edges += 1;
        }
        p.perimeter_edges += edges;
    }

    PatchTable {
        patches,
        width: w,
        height: h,
        total_cells: n,
        cell_size_m,
        patch_of,
    }
}

impl PatchTable {
    /// Cells per class, indexed by class id.
    pub fn class_areas(&self) -> Vec<usize> {
        let max = self.patches.iter().map(|p| p.class_id).max().unwrap_or(0) as usize;
        let mut out = vec![0; max + 1];
        for p in &self.patches {
            out[p.class_id as usize] += p.area_cells;
        }
        out
    }

    /// Cells of patch `p` that touch a cell outside the patch (4-adjacency).
    pub fn boundary_cells(&self, p: &Patch) -> Vec<u32> {
        let (w, h) = (self.width, self.height);
        let pid = p.patch_id as u32;
        p.cells
            .iter()
            .copied()
            .filter(|&c| {
                let c = c as usize;
                let (x, y) = (c % w, c / w);
                x == 0
                    || y == 0
                    || x + 1 == w
                    || y + 1 == h
                    || self.patch_of[c - 1] != pid
                    || self.patch_of[c + 1] != pid
                    || self.patch_of[c - w] != pid
                    || self.patch_of[c + w] != pid
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raster(w: usize, h: usize, labels: &[u32]) -> ClassRaster {
        ClassRaster::new(w, h, labels.to_vec()).unwrap()
    }

    #[test]
    fn diagonal_cells_depend_on_connectivity() {
        let cr = raster(3, 3, &[0, 1, 1, 1, 0, 1, 1, 1, 1]);
        let eight = label_patches(&cr, Connectivity::Eight, 1.0);
        let four = label_patches(&cr, Connectivity::Four, 1.0);
        let count = |t: &PatchTable, c| t.patches.iter().filter(|p| p.class_id == c).count();
        assert_eq!(count(&eight, 0), 1);
        assert_eq!(count(&four, 0), 2);
        assert_eq!(count(&four, 1), 1);
    }

    #[test]
    fn uniform_raster() {
        for n in 1..6 {
            let cr = raster(n, n, &vec![3; n * n]);
            let t = label_patches(&cr, Connectivity::Eight, 43.0);
            assert_eq!(t.patches.len(), 1);
            assert_eq!(t.patches[0].area_cells, n * n);
            assert_eq!(t.patches[0].perimeter_edges, 4 * n);
        }
    }

    #[test]
    fn checkerboard_2x2() {
        let cr = raster(2, 2, &[0, 1, 1, 0]);
        let t = label_patches(&cr, Connectivity::Four, 1.0);
        assert_eq!(t.patches.len(), 4);
        for p in &t.patches {
            assert_eq!((p.area_cells, p.perimeter_edges), (1, 4));
        }
    }

    #[test]
    fn scan_order_numbering() {
        let cr = raster(4, 1, &[2, 0, 0, 2]);
        let t = label_patches(&cr, Connectivity::Eight, 1.0);
        let classes: Vec<u32> = t.patches.iter().map(|p| p.class_id).collect();
        assert_eq!(classes, vec![2, 0, 2]);
        assert_eq!(t.patch_of, vec![0, 1, 1, 2]);
    }

    #[test]
    fn u_shape_merges_late() {
        // Both arms of the U get separate provisional labels and merge on the bottom row.
        let cr = raster(3, 3, &[1, 0, 1, 1, 0, 1, 1, 1, 1]);
        let t = label_patches(&cr, Connectivity::Four, 1.0);
        assert_eq!(t.patches.len(), 2);
        assert_eq!(t.patches[0].area_cells, 7);
        assert_eq!(t.patches[1].area_cells, 2);
    }

    #[test]
    fn boundary_cells_of_a_block() {
        let cr = raster(3, 3, &[0; 9]);
        let t = label_patches(&cr, Connectivity::Four, 1.0);
        assert_eq!(t.boundary_cells(&t.patches[0]).len(), 8);
    }
}
