//! Probability that exactly a given coalition quits under a stage profile.

use crate::error::{Error, Result};
use crate::game::{Coalition, MixedProfile, MAX_PLAYERS};

/// `ϱ(p, S) = ∏_{n∈S} p^n · ∏_{m∉S} (1 − p^m)`, multiplied in ascending
/// player order.
pub fn rho(p: &MixedProfile, coalition: Coalition) -> f64 {
    p.probs().iter().enumerate().fold(1.0, |acc, (i, &q)| {
        if coalition.contains(i) {
            acc * q
        } else {
            acc * (1.0 - q)
        }
    })
}

/// Probability that all players continue.
pub fn continue_prob(p: &MixedProfile) -> f64 {
    rho(p, Coalition::EMPTY)
}

/// Distribution of the quitting coalition over all `2^N` subsets.
#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionDistribution {
    mass: Vec<f64>,
}

impl CoalitionDistribution {
    pub fn mass(&self, coalition: Coalition) -> f64 {
        self.mass[coalition.index()]
    }

    /// `(coalition, mass)` pairs in ascending bitset order, `∅` first.
    pub fn iter(&self) -> impl Iterator<Item = (Coalition, f64)> + '_ {
        self.mass
            .iter()
            .enumerate()
            .map(|(i, &m)| (Coalition::from_bits(i as u32), m))
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }
}

pub fn coalition_distribution(p: &MixedProfile) -> Result<CoalitionDistribution> {
    if p.len() > MAX_PLAYERS {
        return Err(Error::TooManyPlayers {
            players: p.len(),
            max: MAX_PLAYERS,
        });
    }
    let mass = Coalition::all(p.len()).map(|s| rho(p, s)).collect();
    Ok(CoalitionDistribution { mass })
}

/// Splits `ϱ(p, S)` along player `i`:
/// `p^i · ϱ((p^{−i}, 1), S)` and `(1 − p^i) · ϱ((p^{−i}, 0), S)`.
pub fn rho_decompose(p: &MixedProfile, coalition: Coalition, player: usize) -> (f64, f64) {
    let q = p.get(player);
    let left = q * rho(&p.with_prob(player, 1.0), coalition);
    let right = (1.0 - q) * rho(&p.with_prob(player, 0.0), coalition);
    (left, right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mp(v: &[f64]) -> MixedProfile {
        MixedProfile::new(v.to_vec()).unwrap()
    }

    #[test]
    fn rho_examples() {
        assert!((rho(&mp(&[0.1, 0.0]), Coalition::EMPTY) - 0.9).abs() < 1e-15);
        assert_eq!(rho(&mp(&[1.0, 1.0, 1.0]), Coalition::full(3)), 1.0);
        let p = mp(&[0.3, 0.7, 0.5]);
        let s = Coalition::from_members([0, 2]);
        assert!((rho(&p, s) - 0.045).abs() < 1e-15);
        let dist = coalition_distribution(&p).unwrap();
        assert!((dist.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn distribution_examples() {
        let d = coalition_distribution(&mp(&[0.0, 0.0])).unwrap();
        assert_eq!(d.mass(Coalition::EMPTY), 1.0);
        assert!(Coalition::nonempty(2).all(|s| d.mass(s) == 0.0));

        let d = coalition_distribution(&mp(&[0.1, 0.0])).unwrap();
        assert!((d.mass(Coalition::EMPTY) - 0.9).abs() < 1e-15);
        assert!((d.mass(Coalition::from_members([0])) - 0.1).abs() < 1e-15);
        assert_eq!(d.mass(Coalition::from_members([1])), 0.0);
        assert_eq!(d.mass(Coalition::full(2)), 0.0);

        let big = MixedProfile::zeros(MAX_PLAYERS + 1);
        assert!(matches!(
            coalition_distribution(&big),
            Err(Error::TooManyPlayers { .. })
        ));
    }

    #[test]
    fn decompose_examples() {
        let p = mp(&[0.5, 0.5]);
        let s = Coalition::from_members([0]);
        let (l, r) = rho_decompose(&p, s, 0);
        assert_eq!((l, r), (0.25, 0.0));
        assert_eq!(l + r, rho(&p, s));

        // player outside S quitting for sure forces zero
        let p = mp(&[1.0, 0.4]);
        let (l, r) = rho_decompose(&p, Coalition::from_members([1]), 0);
        assert_eq!((l, r), (0.0, 0.0));

        // player inside S never quitting forces zero
        let p = mp(&[0.0, 0.4]);
        let (l, r) = rho_decompose(&p, Coalition::from_members([0]), 0);
        assert_eq!((l, r), (0.0, 0.0));
    }

    fn profile(max_n: usize) -> impl Strategy<Value = MixedProfile> {
        (1..=max_n).prop_flat_map(|n| {
            proptest::collection::vec(
                prop_oneof![Just(0.0), Just(1.0), 0.0f64..=1.0, 0.0f64..=1.0],
                n,
            )
            .prop_map(|v| MixedProfile::new(v).unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn normalization(p in profile(6)) {
            let d = coalition_distribution(&p).unwrap();
            prop_assert!((d.total() - 1.0).abs() <= 1e-12);
            prop_assert!(d.iter().all(|(_, m)| (0.0..=1.0).contains(&m)));
        }

        #[test]
        fn decomposition_identity(p in profile(6), bits in any::<u32>(), who in any::<usize>()) {
            let n = p.len();
            let s = Coalition::from_bits(bits & ((1 << n) - 1));
            let (l, r) = rho_decompose(&p, s, who % n);
            prop_assert!((l + r - rho(&p, s)).abs() <= 1e-12);
        }

        #[test]
        fn zero_pattern(p in profile(6), bits in any::<u32>()) {
            let n = p.len();
            let s = Coalition::from_bits(bits & ((1 << n) - 1));
            let forced = (0..n).any(|i| {
                (s.contains(i) && p.get(i) == 0.0) || (!s.contains(i) && p.get(i) == 1.0)
            });
            prop_assert_eq!(rho(&p, s) == 0.0, forced);
        }
    }
}
