use crate::error::{Error, Result};
use crate::features::functionals::percentile_sorted;

pub const MIN_LZ_LEN: usize = 64;

/// LZ76 phrase count (Kaspar–Schuster scan).
pub fn lz76_complexity(bits: &[u8]) -> usize {
    let n = bits.len();
    if n < 2 {
        return n;
    }
    let (mut c, mut l, mut i, mut k, mut k_max) = (1usize, 1usize, 0usize, 1usize, 1usize);
    loop {
        if bits[i + k - 1] == bits[l + k - 1] {
            k += 1;
            if l + k > n {
                c += 1;
                break;
            }
        } else {
            k_max = k_max.max(k);
            i += 1;
            if i == l {
                c += 1;
                l += k_max;
                if l + 1 > n {
                    break;
                }
                i = 0;
                k = 1;
                k_max = 1;
            } else {
                k = 1;
            }
        }
    }
    c
}

pub fn binarize_median(series: &[f64]) -> Vec<u8> {
    let mut sorted = series.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let med = percentile_sorted(&sorted, 50.0);
    series.iter().map(|&v| u8::from(v > med)).collect()
}

/// Normalised complexity c(n)·log2(n)/n of a bit sequence; 0 when all bits
/// agree.
pub fn lz_norm_bits(bits: &[u8]) -> f64 {
    if bits.iter().all(|&b| b == bits[0]) {
        return 0.0;
    }
    let n = bits.len() as f64;
    lz76_complexity(bits) as f64 * n.log2() / n
}

pub fn lempel_ziv(series: &[f64]) -> Result<f64> {
    if series.len() < MIN_LZ_LEN {
        return Err(Error::SeriesTooShort { len: series.len(), min: MIN_LZ_LEN });
    }
    Ok(lz_norm_bits(&binarize_median(series)))
}
