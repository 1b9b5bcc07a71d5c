use crate::volgrid::Mask3D;

fn erode_once(m: &Mask3D) -> Mask3D {
    let [nx, ny, nz] = m.dims();
    let src = m.data();
    let inside = |x: usize, y: usize, z: usize| {
        x > 0 && y > 0 && z > 0 && x + 1 < nx && y + 1 < ny && z + 1 < nz
    };
    let mut out = vec![false; src.len()];
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = x + nx * (y + ny * z);
                // Outside voxels count as unset, so the border layer never survives.
                if !src[i] || !inside(x, y, z) {
                    continue;
                }
                out[i] = (z - 1..=z + 1).all(|zz| {
                    (y - 1..=y + 1).all(|yy| {
                        let row = nx * (yy + ny * zz);
                        src[row + x - 1] && src[row + x] && src[row + x + 1]
                    })
                });
            }
        }
    }
    m.with_data(out)
}

/// Binary erosion with the full 3×3×3 element and zero padding, repeated
/// `iterations` times.
pub fn erode_mask(m: &Mask3D, iterations: usize) -> Mask3D {
    let mut cur = m.clone();
    for _ in 0..iterations {
        if cur.count() == 0 {
            break;
        }
        cur = erode_once(&cur);
    }
    cur
}
