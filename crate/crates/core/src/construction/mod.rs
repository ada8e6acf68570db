//! Information-set selection for polar codes.
//!
//! Two constructions are supported: Gaussian-approximation density evolution
//! for the BI-AWGN channel, and the 5G NR reliability sequence truncated to
//! the block length.

mod nr_sequence;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use nr_sequence::NR_RELIABILITY_SEQUENCE;

/// How the synthetic channel reliabilities of a polar code are ranked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Construction {
    /// Gaussian-approximation density evolution at the given channel symbol
    /// SNR Es/N0 in dB. Callers starting from an Eb/N0 target convert with
    /// [`esn0_from_ebn0`].
    GaussianApprox { design_snr_db: f64 },
    /// The 1024-entry 5G NR reliability sequence, filtered to indices < N.
    Sequence5g,
}

/// Converts Eb/N0 to Es/N0 (both in dB) for a code of the given rate.
pub fn esn0_from_ebn0(ebno_db: f64, rate: f64) -> f64 {
    ebno_db + 10.0 * rate.log10()
}

/// Returns all indices `0..block_len` in ascending order of reliability.
pub fn reliability_order(block_len: usize, construction: &Construction) -> Result<Vec<usize>> {
    check_block_len(block_len)?;
    match construction {
        Construction::GaussianApprox { design_snr_db } => {
            if !design_snr_db.is_finite() {
                return Err(Error::invalid("design SNR must be finite"));
            }
            let means = ga_mean_llrs(block_len, *design_snr_db);
            let mut order: Vec<usize> = (0..block_len).collect();
            order.sort_by(|&a, &b| means[a].total_cmp(&means[b]).then(a.cmp(&b)));
            Ok(order)
        }
        Construction::Sequence5g => {
            if block_len > NR_RELIABILITY_SEQUENCE.len() {
                return Err(Error::invalid(format!(
                    "5G sequence supports N <= 1024, got {block_len}"
                )));
            }
            Ok(NR_RELIABILITY_SEQUENCE
                .iter()
                .map(|&q| q as usize)
                .filter(|&q| q < block_len)
                .collect())
        }
    }
}

/// Returns the `k` most reliable synthetic channel indices, ascending.
pub fn construct_info_set(block_len: usize, k: usize, construction: &Construction) -> Result<Vec<usize>> {
    check_block_len(block_len)?;
    if k == 0 || k > block_len {
        return Err(Error::invalid(format!(
            "dimension must satisfy 1 <= k <= N, got k={k}, N={block_len}"
        )));
    }
    let order = reliability_order(block_len, construction)?;
    let mut info: Vec<usize> = order[block_len - k..].to_vec();
    info.sort_unstable();
    Ok(info)
}

fn check_block_len(block_len: usize) -> Result<()> {
    if block_len == 0 || !block_len.is_power_of_two() {
        return Err(Error::invalid(format!(
            "block length must be a power of two, got {block_len}"
        )));
    }
    Ok(())
}

/// Mean LLR of every synthetic channel under the Gaussian approximation.
///
/// Index `i` follows the natural (non bit-reversed) order used by the
/// encoder, so the most significant index bit picks the branch of the
/// channel-level butterfly: the lower index of a pair receives the
/// check-node (worse) channel and the upper index the variable-node one.
pub(crate) fn ga_mean_llrs(block_len: usize, design_snr_db: f64) -> Vec<f64> {
    // Es/N0 = 1 / (2 sigma^2), mean LLR = 2 / sigma^2
    let esn0 = 10f64.powf(design_snr_db / 10.0);
    let mut means = vec![4.0 * esn0; block_len];
    let mut half = block_len / 2;
    while half >= 1 {
        for base in (0..block_len).step_by(2 * half) {
            for j in base..base + half {
                let m = means[j];
                debug_assert_eq!(m, means[j + half]);
                means[j] = check_node_mean(m);
                means[j + half] = 2.0 * m;
            }
        }
        half /= 2;
    }
    means
}

/// phi^{-1}(1 - (1 - phi(m))^2), evaluated in the log domain so that very
/// reliable channels do not underflow.
fn check_node_mean(mean: f64) -> f64 {
    let ln_phi = ln_phi(mean);
    // ln(1 - (1 - p)^2) = ln p + ln(2 - p)
    let target = ln_phi + (2.0 - ln_phi.exp()).ln();
    inv_ln_phi(target)
}

/// Natural log of the phi function of Chung et al.
fn ln_phi(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < 10.0 {
        -0.4527 * x.powf(0.86) + 0.0218
    } else {
        0.5 * (std::f64::consts::PI / x).ln() - x / 4.0 + (1.0 - 10.0 / (7.0 * x)).ln()
    }
}

/// Inverts `ln_phi`. The two branches overlap slightly just above x = 10;
/// values in the overlap map to the lower branch.
fn inv_ln_phi(target: f64) -> f64 {
    if target >= 0.0218 {
        return 0.0;
    }
    if target > ln_phi(10.0 - 1e-9) {
        return ((0.0218 - target) / 0.4527).powf(1.0 / 0.86);
    }
    let mut lo = 10.0;
    let mut hi = 20.0;
    while ln_phi(hi) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_phi(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nr_sequence_is_a_permutation() {
        let mut seen = vec![false; 1024];
        for &q in NR_RELIABILITY_SEQUENCE.iter() {
            assert!(!seen[q as usize]);
            seen[q as usize] = true;
        }
        assert_eq!(&NR_RELIABILITY_SEQUENCE[..8], &[0, 1, 2, 4, 8, 16, 32, 3]);
        assert_eq!(NR_RELIABILITY_SEQUENCE[1023], 1023);
    }

    #[test]
    fn trivial_constructions() {
        let ga = Construction::GaussianApprox { design_snr_db: 2.0 };
        assert_eq!(construct_info_set(2, 1, &ga).unwrap(), vec![1]);
        assert_eq!(construct_info_set(2, 1, &Construction::Sequence5g).unwrap(), vec![1]);
        assert_eq!(construct_info_set(4, 1, &ga).unwrap(), vec![3]);
        // the channel-level butterfly acts on the top index bit
        assert_eq!(construct_info_set(4, 2, &ga).unwrap(), vec![2, 3]);
        assert_eq!(construct_info_set(8, 4, &ga).unwrap(), vec![3, 5, 6, 7]);
    }

    #[test]
    fn five_g_subsequence_for_n64() {
        let info = construct_info_set(64, 38, &Construction::Sequence5g).unwrap();
        let filtered: Vec<usize> = NR_RELIABILITY_SEQUENCE
            .iter()
            .map(|&q| q as usize)
            .filter(|&q| q < 64)
            .collect();
        assert_eq!(filtered.len(), 64);
        let mut expected = filtered[64 - 38..].to_vec();
        expected.sort_unstable();
        assert_eq!(info, expected);
    }

    #[test]
    fn rejects_bad_arguments() {
        let c = Construction::Sequence5g;
        assert!(construct_info_set(64, 65, &c).is_err());
        assert!(construct_info_set(64, 0, &c).is_err());
        assert!(construct_info_set(48, 8, &c).is_err());
        assert!(construct_info_set(2048, 8, &c).is_err());
    }

    #[test]
    fn phi_inverse_round_trips() {
        for &x in &[0.05, 0.7, 3.0, 9.99, 10.5, 42.0, 900.0, 5000.0] {
            let y = inv_ln_phi(ln_phi(x));
            assert!((y - x).abs() < 1e-6 * x.max(1.0), "{x} -> {y}");
        }
    }

    #[test]
    fn ga_means_stay_finite_for_long_codes() {
        let means = ga_mean_llrs(1024, 4.0);
        assert!(means.iter().all(|m| m.is_finite() && *m >= 0.0));
        // the check-node mean never exceeds its input
        assert!(check_node_mean(50.0) < 50.0);
        assert!(check_node_mean(0.3) < 0.3);
    }

    #[test]
    fn ga_ordering_is_nested() {
        let ga = Construction::GaussianApprox { design_snr_db: -0.5 };
        let mut prev: Vec<usize> = Vec::new();
        for k in 1..=256 {
            let info = construct_info_set(256, k, &ga).unwrap();
            assert!(prev.iter().all(|i| info.binary_search(i).is_ok()));
            prev = info;
        }
    }
}
