//! Numeric kernels: Gaussian windows and separable filtering, 3D median
//! filtering, binary erosion and connected-component labeling.

mod components;
mod gaussian;
mod median;
mod morphology;

pub use components::{connected_components, remove_small_components, Components};
pub(crate) use gaussian::filter_plane;
pub use gaussian::{gaussian_filter_2d, gaussian_kernel, kernel_length, GaussianKernel1D};
pub use median::median_filter_3d;
pub use morphology::erode_mask;

/// Half-sample symmetric reflection (`d c b a | a b c d | d c b a`), applied
/// repeatedly so windows wider than the axis stay in bounds.
#[inline]
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    if m < n {
        m as usize
    } else {
        (period - 1 - m) as usize
    }
}
