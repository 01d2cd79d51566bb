use super::{Image, ImagingError};
use crate::Scalar;

/// Box-filter downsampling; trailing partial blocks are dropped.
pub fn downsample_box<T: Scalar>(img: &Image<T>, factor: usize) -> Result<Image<T>, ImagingError> {
    if factor == 0 {
        return Err(ImagingError::BadParams("factor must be at least 1".into()));
    }
    if factor == 1 {
        return Ok(img.clone());
    }
    let (ow, oh) = (img.width() / factor, img.height() / factor);
    if ow == 0 || oh == 0 {
        return Err(ImagingError::FactorTooLarge { factor });
    }
    let ch = img.channels();
    let area = T::from_usize_lossy(factor * factor);
    let mut data = Vec::with_capacity(ow * oh * ch);
    for oy in 0..oh {
        for ox in 0..ow {
            for c in 0..ch {
                let mut sum = T::zero();
                for y in oy * factor..(oy + 1) * factor {
                    for x in ox * factor..(ox + 1) * factor {
                        sum = sum + img.at(x, y, c);
                    }
                }
                data.push(sum / area);
            }
        }
    }
    Image::from_unclamped(ow, oh, ch, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn block_mean_and_crop() {
        let img = Image::<f64>::new(2, 2, 1, vec![0.0, 0.5, 0.5, 1.0]).unwrap();
        assert_eq!(downsample_box(&img, 2).unwrap().data(), &[0.5]);
        assert_eq!(downsample_box(&img, 1).unwrap(), img);
        let five = Image::<f64>::filled(5, 5, 3, 0.25).unwrap();
        let out = downsample_box(&five, 2).unwrap();
        assert_eq!((out.width(), out.height(), out.channels()), (2, 2, 3));
        assert_eq!(downsample_box(&five, 6), Err(ImagingError::FactorTooLarge { factor: 6 }));
    }

    proptest! {
        #[test]
        fn preserves_mean_on_full_blocks(bw in 1usize..5, bh in 1usize..5, f in 1usize..4, seed in any::<u64>()) {
            let mut s = seed;
            let img = Image::<f64>::from_fn(bw * f, bh * f, 1, |_, _, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                (s >> 11) as f64 / (1u64 << 53) as f64
            }).unwrap();
            let out = downsample_box(&img, f).unwrap();
            let mean_in = img.channel_means()[0];
            let mean_out = out.channel_means()[0];
            prop_assert!((mean_in - mean_out).abs() < 1e-12);
        }
    }
}
