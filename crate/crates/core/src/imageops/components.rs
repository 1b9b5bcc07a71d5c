use std::collections::VecDeque;

use crate::volgrid::Mask3D;

/// Component labeling result. Label 0 is background; component `i` (1-based)
/// has `sizes[i - 1]` voxels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Components {
    pub labels: Vec<u32>,
    pub sizes: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.sizes.len()
    }
}

/// Labels set voxels under 26-connectivity. Ids follow the linear (x-fastest)
/// order of each component's first voxel.
pub fn connected_components(m: &Mask3D) -> Components {
    let [nx, ny, nz] = m.dims();
    let src = m.data();
    let mut labels = vec![0u32; src.len()];
    let mut sizes = Vec::new();
    let mut queue = VecDeque::new();

    for seed in 0..src.len() {
        if !src[seed] || labels[seed] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        labels[seed] = label;
        queue.push_back(seed);
        let mut size = 0usize;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let x = i % nx;
            let y = (i / nx) % ny;
            let z = i / (nx * ny);
            for zz in z.saturating_sub(1)..=(z + 1).min(nz - 1) {
                for yy in y.saturating_sub(1)..=(y + 1).min(ny - 1) {
                    for xx in x.saturating_sub(1)..=(x + 1).min(nx - 1) {
                        let j = xx + nx * (yy + ny * zz);
                        if src[j] && labels[j] == 0 {
                            labels[j] = label;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        sizes.push(size);
    }
    Components { labels, sizes }
}

/// Clears every component with fewer than `min_size` voxels.
pub fn remove_small_components(m: &Mask3D, min_size: usize) -> Mask3D {
    if min_size <= 1 {
        return m.clone();
    }
    let cc = connected_components(m);
    let keep: Vec<bool> = cc.sizes.iter().map(|&s| s >= min_size).collect();
    let data = cc
        .labels
        .iter()
        .map(|&l| l != 0 && keep[l as usize - 1])
        .collect();
    m.with_data(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_mask_has_no_components() {
        let cc = connected_components(&Mask3D::empty([3, 4, 5]).unwrap());
        assert_eq!(cc.count(), 0);
        assert!(cc.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn solid_blob_is_one_component() {
        let m =
            Mask3D::from_fn([6, 6, 6], |x, y, z| x < 3 && y < 4 && (1..3).contains(&z)).unwrap();
        let cc = connected_components(&m);
        assert_eq!(cc.sizes, vec![24]);
    }

    #[test]
    fn corner_contact_connects() {
        let m = Mask3D::from_fn([3, 3, 3], |x, y, z| {
            (x, y, z) == (0, 0, 0) || (x, y, z) == (1, 1, 1)
        })
        .unwrap();
        assert_eq!(connected_components(&m).sizes, vec![2]);
    }

    #[test]
    fn labels_in_raster_order() {
        // Component B's first voxel (index 2) precedes A's (index 9) in x-fastest order.
        let m = Mask3D::from_fn([4, 4, 1], |x, y, _| {
            (x, y) == (2, 0) || (x, y) == (1, 2) || (x, y) == (1, 3)
        })
        .unwrap();
        let cc = connected_components(&m);
        assert_eq!(cc.sizes, vec![1, 2]);
        assert_eq!(cc.labels[2], 1);
        assert_eq!(cc.labels[1 + 4 * 2], 2);
    }

    #[test]
    fn small_components_removed() {
        // 3-voxel bar and a 20-voxel slab, far apart.
        let m = Mask3D::from_fn([12, 12, 3], |x, y, z| {
            (z == 0 && y == 0 && x < 3) || (z == 2 && (6..11).contains(&x) && (6..10).contains(&y))
        })
        .unwrap();
        assert_eq!(connected_components(&m).sizes, vec![3, 20]);
        let kept = remove_small_components(&m, 8);
        assert_eq!(kept.count(), 20);
        assert!(!kept.get(0, 0, 0));
        assert!(kept.get(6, 6, 2));
        assert_eq!(remove_small_components(&m, 0), m);
        assert_eq!(remove_small_components(&m, 1), m);
        assert_eq!(remove_small_components(&m, 21).count(), 0);
    }
}
