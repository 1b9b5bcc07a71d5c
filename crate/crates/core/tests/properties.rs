use anomap::imageops::{connected_components, erode_mask, median_filter_3d};
use anomap::mvol::{decode_mask, decode_volume, encode_mask, encode_volume};
use anomap::pipeline::{binarize, PostprocessConfig};
use anomap::scoring::{
    ensemble_from_ssim, ensemble_weights, ssim_map_2d, ssim_stack, SsimConstants,
};
use anomap::{AnomalyMap, Image2D, Mask3D, SigmaSet, Volume3D, WeightMode};
use proptest::prelude::*;

fn dims_strategy(max: usize) -> impl Strategy<Value = [usize; 3]> {
    (1..=max, 1..=max, 1..=max).prop_map(|(a, b, c)| [a, b, c])
}

fn unit_volume(max: usize) -> impl Strategy<Value = Volume3D> {
    dims_strategy(max).prop_flat_map(|dims| {
        let n = dims.iter().product::<usize>();
        prop::collection::vec(0.0f32..=1.0, n)
            .prop_map(move |d| Volume3D::new(dims, [1.0; 3], d).unwrap())
    })
}

fn mask(max: usize) -> impl Strategy<Value = Mask3D> {
    dims_strategy(max).prop_flat_map(|dims| {
        let n = dims.iter().product::<usize>();
        prop::collection::vec(any::<bool>(), n).prop_map(move |d| Mask3D::new(dims, d).unwrap())
    })
}

fn image_pair() -> impl Strategy<Value = (Image2D, Image2D)> {
    (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
        (
            prop::collection::vec(0.0f32..=1.0, w * h),
            prop::collection::vec(0.0f32..=1.0, w * h),
        )
            .prop_map(move |(a, b)| {
                (
                    Image2D::new(w, h, a).unwrap(),
                    Image2D::new(w, h, b).unwrap(),
                )
            })
    })
}

fn sigma() -> impl Strategy<Value = f64> {
    prop::sample::select(vec![0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5, 1.7])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mvol_roundtrip_is_bitwise(v in unit_volume(6), sx in 0.1f32..4.0) {
        let v = Volume3D::new(v.dims(), [sx, 1.0, 2.5], v.into_data()).unwrap();
        let back = decode_volume(&encode_volume(&v)).unwrap();
        prop_assert_eq!(back.spacing(), v.spacing());
        let bits = |v: &Volume3D| v.data().iter().map(|f| f.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back), bits(&v));
    }

    #[test]
    fn mask_roundtrip(m in mask(6)) {
        prop_assert_eq!(decode_mask(&encode_mask(&m)).unwrap(), m);
    }

    #[test]
    fn ssim_symmetric_bounded_identity((x, y) in image_pair(), s in sigma()) {
        let c = SsimConstants::default();
        let xy = ssim_map_2d(&x, &y, s, &c).unwrap();
        let yx = ssim_map_2d(&y, &x, s, &c).unwrap();
        prop_assert_eq!(
            xy.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            yx.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        prop_assert!(xy.data.iter().all(|&v| (-1.0 - 1e-6..=1.0 + 1e-6).contains(&v)));
        let xx = ssim_map_2d(&x, &x, s, &c).unwrap();
        prop_assert!(xx.data.iter().all(|&v| (v - 1.0).abs() <= 1e-6));
    }

    #[test]
    fn softmax_weights_normalized_and_inverse(values in prop::collection::vec(-1.0f64..=1.0, 1..9)) {
        let w = ensemble_weights(&values);
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        for i in 0..values.len() {
            for j in 0..values.len() {
                if values[i] < values[j] {
                    prop_assert!(w[i] > w[j]);
                }
            }
        }
    }

    #[test]
    fn ensemble_in_range_and_bounded_by_max(x in unit_volume(7), seed in any::<u64>()) {
        // Reconstruction: a deterministic perturbation of x within [0, 1].
        let rec_data: Vec<f32> = x.data().iter().enumerate().map(|(i, &v)| {
            let h = (seed ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)).rotate_left(17);
            ((v as f64 + (h % 1000) as f64 / 2000.0 - 0.25).clamp(0.0, 1.0)) as f32
        }).collect();
        let rec = Volume3D::new(x.dims(), [1.0; 3], rec_data).unwrap();
        let stack = ssim_stack(&x, &rec, &SigmaSet::default(), &SsimConstants::default()).unwrap();
        let ens = ensemble_from_ssim(&stack, WeightMode::PerVoxel).unwrap();
        for (i, &e) in ens.data().iter().enumerate() {
            prop_assert!((-1e-6..=2.0 + 1e-6).contains(&e));
            let max = stack.iter().map(|s| s.data()[i]).fold(f32::MIN, f32::max);
            prop_assert!(e as f64 >= 1.0 - max as f64 - 1e-6);
        }
    }

    #[test]
    fn median_commutes_with_shift(v in unit_volume(5), k in prop::sample::select(vec![1usize, 3, 5]), shift in -0.5f32..0.5) {
        let shifted = Volume3D::new(v.dims(), [1.0; 3], v.data().iter().map(|&a| a + shift).collect()).unwrap();
        let a = median_filter_3d(&shifted, k).unwrap();
        let b = median_filter_3d(&v, k).unwrap();
        for (p, q) in a.data().iter().zip(b.data()) {
            prop_assert_eq!(*p, *q + shift);
        }
    }

    #[test]
    fn erosion_antiextensive_and_monotone(m in mask(6), iters in 0usize..3) {
        let e = erode_mask(&m, iters);
        prop_assert!(e.is_subset_of(&m));
        // Any superset erodes to a superset.
        let sup = Mask3D::new(m.dims(), m.data().iter().enumerate().map(|(i, &b)| b || i % 3 == 0).collect()).unwrap();
        prop_assert!(e.is_subset_of(&erode_mask(&sup, iters)));
    }

    #[test]
    fn component_sizes_sum_to_count(m in mask(7)) {
        let cc = connected_components(&m);
        prop_assert_eq!(cc.sizes.iter().sum::<usize>(), m.count());
        prop_assert_eq!(cc.labels.iter().filter(|&&l| l != 0).count(), m.count());
    }

    #[test]
    fn raising_threshold_never_adds_positives(v in unit_volume(6), t1 in 0.0f32..1.0, dt in 0.0f32..0.5) {
        let cfg = PostprocessConfig { min_component_size: 0, ..Default::default() };
        let map = AnomalyMap::new(v);
        let lo = binarize(&map, t1, &cfg).unwrap();
        let hi = binarize(&map, t1 + dt, &cfg).unwrap();
        prop_assert!(hi.is_subset_of(&lo));
    }
}
