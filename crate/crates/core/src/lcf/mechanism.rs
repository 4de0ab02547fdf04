//! Local context focus: semantic relative distance (SRD) of each token to the
//! aspect, and the dynamic mask / dynamic weighting derived from it.

use serde::{Deserialize, Serialize};

use crate::corpus::Span;

/// How encoder states outside the local window are treated before pooling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LcfMode {
    /// Context dynamic mask: distant states are zeroed.
    Cdm,
    /// Context dynamic weighting: distant states are scaled down linearly.
    Cdw,
    /// Average of the masked and weighted variants.
    Fusion,
}

impl std::str::FromStr for LcfMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "CDM" => Ok(LcfMode::Cdm),
            "CDW" => Ok(LcfMode::Cdw),
            "FUSION" => Ok(LcfMode::Fusion),
            _ => Err(format!("unknown LCF mode {s:?} (expected CDM, CDW or FUSION)")),
        }
    }
}

impl std::fmt::Display for LcfMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LcfMode::Cdm => "CDM",
            LcfMode::Cdw => "CDW",
            LcfMode::Fusion => "FUSION",
        })
    }
}

/// Distance of token `i` from the aspect span, zero inside the span.
pub fn srd(i: usize, span: Span) -> usize {
    let center = (span.start + span.end) / 2;
    let half = span.len() / 2;
    i.abs_diff(center).saturating_sub(half)
}

pub fn cdm_mask(n: usize, span: Span, alpha: usize) -> Vec<f64> {
    (0..n).map(|i| if srd(i, span) <= alpha { 1.0 } else { 0.0 }).collect()
}

pub fn cdw_weights(n: usize, span: Span, alpha: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let d = srd(i, span);
            if d <= alpha {
                1.0
            } else {
                1.0 - (d - alpha) as f64 / n as f64
            }
        })
        .collect()
}

/// Per-position multiplier applied to encoder states for `mode`.
pub fn lcf_weights(mode: LcfMode, n: usize, span: Span, alpha: usize) -> Vec<f64> {
    match mode {
        LcfMode::Cdm => cdm_mask(n, span, alpha),
        LcfMode::Cdw => cdw_weights(n, span, alpha),
        LcfMode::Fusion => cdm_mask(n, span, alpha)
            .into_iter()
            .zip(cdw_weights(n, span, alpha))
            .map(|(m, w)| 0.5 * (m + w))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn srd_examples() {
        assert_eq!(srd(1, Span::single(1)), 0);
        assert_eq!(srd(5, Span::single(1)), 4);
        assert_eq!(srd(0, Span::new(2, 3)), 1);
    }

    #[test]
    fn srd_matches_enumeration() {
        // distance to the nearest of the center-relative window, enumerated
        let span = Span::single(1);
        let expected = [1, 0, 1, 2, 3, 4, 5, 6, 7, 8];
        for (i, e) in expected.iter().enumerate() {
            assert_eq!(srd(i, span), *e, "i={i}");
        }
    }

    #[test]
    fn cdm_examples() {
        assert_eq!(cdm_mask(3, Span::new(0, 2), 0), vec![1.0; 3]);
        let m = cdm_mask(10, Span::single(1), 3);
        assert_eq!(m, [1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(cdm_mask(6, Span::single(0), 6), vec![1.0; 6]);
    }

    #[test]
    fn cdw_examples() {
        let w = cdw_weights(10, Span::single(1), 3);
        assert_eq!(w[1], 1.0);
        assert_eq!(w[5], 1.0 - 1.0 / 10.0);
        assert_eq!(w[9], 1.0 - 5.0 / 10.0);
    }

    #[test]
    fn unbounded_threshold_is_uniform() {
        for mode in [LcfMode::Cdm, LcfMode::Cdw, LcfMode::Fusion] {
            assert_eq!(lcf_weights(mode, 12, Span::single(0), usize::MAX), vec![1.0; 12]);
        }
    }

    #[test]
    fn fusion_is_mean_of_variants() {
        let f = lcf_weights(LcfMode::Fusion, 10, Span::single(1), 3);
        assert_eq!(f[4], 1.0);
        assert_eq!(f[9], 0.25);
    }

    #[test]
    fn mode_parses_case_insensitively() {
        assert_eq!("cdw".parse::<LcfMode>().unwrap(), LcfMode::Cdw);
        assert_eq!("Fusion".parse::<LcfMode>().unwrap(), LcfMode::Fusion);
        assert!("local".parse::<LcfMode>().is_err());
    }

    proptest! {
        #[test]
        fn srd_symmetric_about_center(start in 0usize..20, len in 1usize..6, k in 0usize..20) {
            let span = Span::new(start, start + len - 1);
            let center = (span.start + span.end) / 2;
            if k <= center {
                prop_assert_eq!(srd(center - k, span), srd(center + k, span));
            }
        }

        #[test]
        fn srd_zero_inside_span(start in 0usize..20, len in 1usize..6) {
            let span = Span::new(start, start + len - 1);
            for i in span.start..=span.end {
                prop_assert_eq!(srd(i, span), 0);
            }
        }
    }
}
