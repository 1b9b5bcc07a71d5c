use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::volgrid::Volume3D;

use super::reflect_index;

fn neighbor_table(n: usize, k: usize) -> Vec<usize> {
    let r = (k / 2) as isize;
    (0..n as isize)
        .flat_map(|i| (-r..=r).map(move |d| reflect_index(i + d, n)))
        .collect()
}

/// Replaces each voxel by the median of its `k×k×k` neighborhood, with
/// half-sample symmetric reflection at the borders.
pub fn median_filter_3d(v: &Volume3D, k: usize) -> Result<Volume3D> {
    if k == 0 || k % 2 == 0 {
        return Err(Error::InvalidMedianKernel(k));
    }
    if k == 1 {
        return Ok(v.clone());
    }
    let [nx, ny, nz] = v.dims();
    let tx = neighbor_table(nx, k);
    let ty = neighbor_table(ny, k);
    let tz = neighbor_table(nz, k);
    let src = v.data();
    let plane = nx * ny;
    let mid = k * k * k / 2;

    let mut out = vec![0.0f32; src.len()];
    out.par_chunks_mut(plane).enumerate().for_each(|(z, dst)| {
        let mut window = Vec::with_capacity(k * k * k);
        let zs = &tz[z * k..(z + 1) * k];
        for y in 0..ny {
            let ys = &ty[y * k..(y + 1) * k];
            for x in 0..nx {
                let xs = &tx[x * k..(x + 1) * k];
                window.clear();
                for &zz in zs {
                    for &yy in ys {
                        let row = &src[plane * zz + nx * yy..];
                        window.extend(xs.iter().map(|&xx| row[xx]));
                    }
                }
                let (_, m, _) = window.select_nth_unstable_by(mid, f32::total_cmp);
                dst[x + nx * y] = *m;
            }
        }
    });
    Ok(Volume3D::from_parts_unchecked(v.dims(), v.spacing(), out))
}
