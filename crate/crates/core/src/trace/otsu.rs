use crate::image::{BinaryMask, GrayImage, ImageError};

/// Threshold maximizing between-class variance, first maximum on ties.
/// `None` when no split separates two nonempty classes (constant image).
pub fn otsu_threshold(img: &GrayImage) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &v in &img.data {
        hist[v as usize] += 1;
    }
    let total = img.data.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();

    let mut best: Option<(u8, f64)> = None;
    let (mut w0, mut sum0) = (0.0, 0.0);
    for t in 0..256usize {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let m0 = sum0 / w0;
        let m1 = (sum_all - sum0) / w1;
        let var = w0 * w1 * (m0 - m1) * (m0 - m1);
        if best.is_none_or(|(_, b)| var > b) {
            best = Some((t as u8, var));
        }
    }
    best.map(|(t, _)| t)
}

/// Pixels strictly above the Otsu threshold. A constant image yields an
/// all-false mask.
pub fn otsu_mask(img: &GrayImage) -> BinaryMask {
    match otsu_threshold(img) {
        Some(t) => BinaryMask {
            width: img.width,
            height: img.height,
            bits: img.data.iter().map(|&v| v > t).collect(),
        },
        None => BinaryMask::filled(img.width, img.height, false),
    }
}

/// Pixelwise AND.
pub fn refine_mask(seg: &BinaryMask, aux: &BinaryMask) -> Result<BinaryMask, ImageError> {
    seg.same_dims(aux)?;
    Ok(BinaryMask {
        width: seg.width,
        height: seg.height,
        bits: seg.bits.iter().zip(&aux.bits).map(|(a, b)| *a && *b).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bimodal_halves() {
        let img = GrayImage::new(8, 4, (0..32).map(|i| if i % 8 < 4 { 10 } else { 240 }).collect()).unwrap();
        let m = otsu_mask(&img);
        for y in 0..4 {
            for x in 0..8 {
                assert_eq!(m.get(x, y), x >= 4);
            }
        }
    }

    #[test]
    fn constant_image_is_all_false() {
        let m = otsu_mask(&GrayImage::filled(5, 5, 128));
        assert!(m.is_empty());
    }

    fn brute_force_threshold(data: &[u8]) -> u8 {
        // direct two-class statistics for every candidate threshold
        let mut best = (0u8, -1.0f64);
        for t in 0..=255u8 {
            let lo: Vec<f64> = data.iter().filter(|&&v| v <= t).map(|&v| v as f64).collect();
            let hi: Vec<f64> = data.iter().filter(|&&v| v > t).map(|&v| v as f64).collect();
            if lo.is_empty() || hi.is_empty() {
                continue;
            }
            let n = data.len() as f64;
            let (w0, w1) = (lo.len() as f64 / n, hi.len() as f64 / n);
            let m0 = lo.iter().sum::<f64>() / lo.len() as f64;
            let m1 = hi.iter().sum::<f64>() / hi.len() as f64;
            let v = w0 * w1 * (m0 - m1).powi(2);
            if v > best.1 * (1.0 + 1e-12) {
                best = (t, v);
            }
        }
        best.0
    }

    #[test]
    fn three_level_matches_exhaustive_search() {
        let mut data = vec![0u8; 50];
        data.extend(std::iter::repeat_n(100u8, 30));
        data.extend(std::iter::repeat_n(255u8, 20));
        let img = GrayImage::new(10, 10, data.clone()).unwrap();
        let t = otsu_threshold(&img).unwrap();
        assert_eq!(t, brute_force_threshold(&data));
        // the separating gap is between 100 and 255
        assert_eq!(t, 100);
    }

    #[test]
    fn refine_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = BinaryMask::from_fn(8, 8, |_, _| false);
        let m = BinaryMask::new(8, 8, (0..64).map(|_| rng.gen()).collect()).unwrap();
        let all = BinaryMask::filled(8, 8, true);
        assert_eq!(refine_mask(&all, &m).unwrap(), m);
        assert_eq!(refine_mask(&m, &a).unwrap(), a);
        let n = BinaryMask::new(8, 8, (0..64).map(|_| rng.gen()).collect()).unwrap();
        let r = refine_mask(&m, &n).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(r.get(x, y), m.get(x, y) & n.get(x, y));
            }
        }
        assert!(refine_mask(&m, &BinaryMask::filled(4, 8, true)).is_err());
    }
}
