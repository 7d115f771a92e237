//! Games, coalitions and strategy profiles.
//!
//! Players are 0-indexed inside the crate and 1-indexed in every external
//! representation (file formats, reports, display). Coalitions are bitsets
//! over the player indices; iterating `0..1 << n` visits them in ascending
//! bitset order, which fixes the summation order everywhere.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest player count accepted anywhere a full `2^N` table is built.
pub const MAX_PLAYERS: usize = 24;

/// A subset of the players, stored as a bitset (bit `i` is player `i + 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Coalition(u32);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn from_bits(bits: u32) -> Self {
        Coalition(bits)
    }

    /// Coalition of all `n` players.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_PLAYERS);
        Coalition(((1u64 << n) - 1) as u32)
    }

    pub fn singleton(player: usize) -> Self {
        Coalition(1 << player)
    }

    /// Builds a coalition from 0-indexed members.
    pub fn from_members<I: IntoIterator<Item = usize>>(members: I) -> Self {
        Coalition(members.into_iter().fold(0, |acc, i| acc | (1 << i)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, player: usize) -> bool {
        self.0 >> player & 1 == 1
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn with(self, player: usize) -> Self {
        Coalition(self.0 | 1 << player)
    }

    pub fn without(self, player: usize) -> Self {
        Coalition(self.0 & !(1 << player))
    }

    /// 0-indexed members in ascending order.
    pub fn members(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |i| bits >> i & 1 == 1)
    }

    /// Every coalition over `n` players, the empty one first.
    pub fn all(n: usize) -> impl Iterator<Item = Coalition> {
        (0..1u32 << n).map(Coalition)
    }

    /// Every nonempty coalition over `n` players.
    pub fn nonempty(n: usize) -> impl Iterator<Item = Coalition> {
        (1..1u32 << n).map(Coalition)
    }

    /// External key: sorted 1-indexed members joined by commas, e.g. `"1,3"`.
    pub fn key(self) -> String {
        self.members()
            .map(|i| (i + 1).to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Parses an external key for a game with `n` players.
    pub fn parse_key(key: &str, n: usize) -> Result<Self> {
        let bad = |reason: &str| Error::BadCoalition {
            key: key.to_string(),
            reason: reason.to_string(),
        };
        let mut bits = 0u32;
        for part in key.split(',') {
            let part = part.trim();
            if part.is_empty() {
                return Err(bad("empty member"));
            }
            let player: usize = part.parse().map_err(|_| bad("member is not an integer"))?;
            if player == 0 || player > n {
                return Err(bad("member out of range"));
            }
            let bit = 1u32 << (player - 1);
            if bits & bit != 0 {
                return Err(bad("duplicate member"));
            }
            bits |= bit;
        }
        Ok(Coalition(bits))
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.key())
    }
}

/// Pure stage action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Action {
    Continue,
    Quit,
}

impl Action {
    pub fn prob(self) -> f64 {
        match self {
            Action::Continue => 0.0,
            Action::Quit => 1.0,
        }
    }

    pub fn as_bit(self) -> u8 {
        match self {
            Action::Continue => 0,
            Action::Quit => 1,
        }
    }
}

/// An N-player quitting game: one payoff vector per nonempty coalition.
#[derive(Debug, Clone, PartialEq)]
pub struct QuittingGame {
    num_players: usize,
    // row-major, 2^N rows of N entries; row 0 is the empty coalition (zeros)
    payoffs: Vec<f64>,
}

impl QuittingGame {
    /// Builds a game from payoff vectors listed for coalitions `1..2^N` in
    /// ascending bitset order.
    pub fn new(num_players: usize, payoffs: Vec<Vec<f64>>) -> Result<Self> {
        if num_players == 0 {
            return Err(Error::NoPlayers);
        }
        if num_players > MAX_PLAYERS {
            return Err(Error::TooManyPlayers {
                players: num_players,
                max: MAX_PLAYERS,
            });
        }
        let rows = 1usize << num_players;
        if payoffs.len() != rows - 1 {
            let missing = Coalition::from_bits(payoffs.len().min(rows - 2) as u32 + 1);
            return Err(Error::MissingCoalition {
                coalition: missing.key(),
            });
        }
        let mut flat = vec![0.0; num_players];
        flat.reserve(rows * num_players);
        for (i, row) in payoffs.iter().enumerate() {
            let coalition = Coalition::from_bits(i as u32 + 1);
            if row.len() != num_players {
                return Err(Error::BadVectorLength {
                    what: format!("payoff of coalition {}", coalition.key()),
                    expected: num_players,
                    found: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteEntry {
                    what: format!("payoff of coalition {}", coalition.key()),
                });
            }
            flat.extend_from_slice(row);
        }
        Ok(QuittingGame {
            num_players,
            payoffs: flat,
        })
    }

    /// Builds a game from a payoff function over nonempty coalitions.
    pub fn from_fn<F>(num_players: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(Coalition) -> Vec<f64>,
    {
        if num_players > MAX_PLAYERS {
            return Err(Error::TooManyPlayers {
                players: num_players,
                max: MAX_PLAYERS,
            });
        }
        let rows = Coalition::nonempty(num_players).map(&mut f).collect();
        QuittingGame::new(num_players, rows)
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    /// Payoff vector `r_S`; the empty coalition yields the zero vector.
    pub fn payoff(&self, coalition: Coalition) -> &[f64] {
        let start = coalition.index() * self.num_players;
        &self.payoffs[start..start + self.num_players]
    }

    /// `max |r_S^n|` over all players and nonempty coalitions.
    pub fn r_max(&self) -> f64 {
        self.payoffs
            .iter()
            .fold(0.0, |acc: f64, x| acc.max(x.abs()))
    }

    pub fn check_player(&self, player: usize) -> Result<()> {
        if player < self.num_players {
            Ok(())
        } else {
            Err(Error::BadPlayer {
                player: player + 1,
                players: self.num_players,
            })
        }
    }

    pub fn check_profile(&self, p: &MixedProfile) -> Result<()> {
        if p.len() != self.num_players {
            return Err(Error::BadVectorLength {
                what: "profile".into(),
                expected: self.num_players,
                found: p.len(),
            });
        }
        Ok(())
    }

    pub fn check_cyclic(&self, pi: &EventuallyCyclicProfile) -> Result<()> {
        if pi.num_players() != self.num_players {
            return Err(Error::BadVectorLength {
                what: "profile stage".into(),
                expected: self.num_players,
                found: pi.num_players(),
            });
        }
        Ok(())
    }
}

/// A quitting game paired with the continuation payoff `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneStepGame {
    game: QuittingGame,
    v: Vec<f64>,
}

impl OneStepGame {
    pub fn new(game: QuittingGame, v: Vec<f64>) -> Result<Self> {
        if v.len() != game.num_players() {
            return Err(Error::BadVectorLength {
                what: "continuation vector v".into(),
                expected: game.num_players(),
                found: v.len(),
            });
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteEntry {
                what: "continuation vector v".into(),
            });
        }
        Ok(OneStepGame { game, v })
    }

    pub fn game(&self) -> &QuittingGame {
        &self.game
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn num_players(&self) -> usize {
        self.game.num_players()
    }

    /// Stage payoff: `v` for the empty coalition, `r_S` otherwise.
    pub fn outcome(&self, coalition: Coalition) -> &[f64] {
        if coalition.is_empty() {
            &self.v
        } else {
            self.game.payoff(coalition)
        }
    }
}

/// One probability of quitting per player for a single stage.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedProfile {
    probs: Vec<f64>,
}

impl MixedProfile {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        for &p in &probs {
            if !p.is_finite() {
                return Err(Error::NonFiniteEntry {
                    what: "profile".into(),
                });
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::BadProbability {
                    what: "profile".into(),
                    value: p,
                });
            }
        }
        Ok(MixedProfile { probs })
    }

    pub fn zeros(n: usize) -> Self {
        MixedProfile {
            probs: vec![0.0; n],
        }
    }

    /// Pure profile in which exactly the members of `quitters` quit.
    pub fn pure(n: usize, quitters: Coalition) -> Self {
        MixedProfile {
            probs: (0..n)
                .map(|i| if quitters.contains(i) { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, player: usize) -> f64 {
        self.probs[player]
    }

    /// `(p^{-n}, q)`: player `n` switched to quit probability `q`.
    pub fn with_prob(&self, player: usize, q: f64) -> MixedProfile {
        debug_assert!((0.0..=1.0).contains(&q));
        let mut probs = self.probs.clone();
        probs[player] = q;
        MixedProfile { probs }
    }

    pub fn with_action(&self, player: usize, action: Action) -> MixedProfile {
        self.with_prob(player, action.prob())
    }

    pub fn is_pure(&self) -> bool {
        self.probs.iter().all(|&p| p == 0.0 || p == 1.0)
    }

    pub fn is_zero(&self) -> bool {
        self.probs.iter().all(|&p| p == 0.0)
    }

    /// Infinity-norm distance to another profile of the same length.
    pub fn distance(&self, other: &MixedProfile) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs()))
    }
}

/// Finite prefix followed by a cycle repeated forever.
#[derive(Debug, Clone, PartialEq)]
pub struct EventuallyCyclicProfile {
    prefix: Vec<MixedProfile>,
    cycle: Vec<MixedProfile>,
}

impl EventuallyCyclicProfile {
    pub fn new(prefix: Vec<MixedProfile>, cycle: Vec<MixedProfile>) -> Result<Self> {
        let Some(first) = cycle.first() else {
            return Err(Error::EmptyCycle);
        };
        let n = first.len();
        for stage in prefix.iter().chain(&cycle) {
            if stage.len() != n {
                return Err(Error::BadVectorLength {
                    what: "profile stage".into(),
                    expected: n,
                    found: stage.len(),
                });
            }
        }
        Ok(EventuallyCyclicProfile { prefix, cycle })
    }

    pub fn stationary(p: MixedProfile) -> Self {
        EventuallyCyclicProfile {
            prefix: Vec::new(),
            cycle: vec![p],
        }
    }

    pub fn prefix(&self) -> &[MixedProfile] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[MixedProfile] {
        &self.cycle
    }

    pub fn num_players(&self) -> usize {
        self.cycle[0].len()
    }

    /// Number of distinct stage classes: prefix stages plus cycle positions.
    pub fn period_span(&self) -> usize {
        self.prefix.len() + self.cycle.len()
    }

    pub fn is_stationary(&self) -> bool {
        self.prefix.is_empty() && self.cycle.len() == 1
    }

    pub fn is_pure(&self) -> bool {
        self.prefix.iter().chain(&self.cycle).all(|p| p.is_pure())
    }

    /// Stage profile at 0-indexed stage `k`.
    pub fn stage(&self, k: usize) -> &MixedProfile {
        if k < self.prefix.len() {
            &self.prefix[k]
        } else {
            &self.cycle[(k - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// The profile `π_j` played from stage `j` on (1-indexed, `j >= 1`):
    /// stage `i` of the result is stage `i + j - 1` of `self`.
    pub fn subgame(&self, j: usize) -> EventuallyCyclicProfile {
        assert!(j >= 1, "subgame stages are 1-indexed");
        let drop = j - 1;
        if drop <= self.prefix.len() {
            return EventuallyCyclicProfile {
                prefix: self.prefix[drop..].to_vec(),
                cycle: self.cycle.clone(),
            };
        }
        let shift = (drop - self.prefix.len()) % self.cycle.len();
        let mut cycle = self.cycle.clone();
        cycle.rotate_left(shift);
        EventuallyCyclicProfile {
            prefix: Vec::new(),
            cycle,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mp(v: &[f64]) -> MixedProfile {
        MixedProfile::new(v.to_vec()).unwrap()
    }

    #[test]
    fn coalition_keys() {
        let s = Coalition::from_members([0, 2]);
        assert_eq!(s.key(), "1,3");
        assert_eq!(Coalition::parse_key("3, 1", 3).unwrap(), s);
        assert!(Coalition::parse_key("1,1", 3).is_err());
        assert!(Coalition::parse_key("4", 3).is_err());
        assert!(Coalition::parse_key("0", 3).is_err());
        assert!(Coalition::parse_key("", 3).is_err());
        assert_eq!(s.to_string(), "{1,3}");
    }

    #[test]
    fn game_validation() {
        let g =
            QuittingGame::new(2, vec![vec![1.0, -1.0], vec![1.0, 1.0], vec![-2.0, -2.0]]).unwrap();
        assert_eq!(g.payoff(Coalition::EMPTY), &[0.0, 0.0]);
        assert_eq!(g.payoff(Coalition::full(2)), &[-2.0, -2.0]);
        assert_eq!(g.r_max(), 2.0);

        let one = QuittingGame::new(1, vec![vec![0.0]]).unwrap();
        assert_eq!(one.num_players(), 1);

        let missing = QuittingGame::new(2, vec![vec![1.0, -1.0], vec![1.0, 1.0]]);
        assert!(
            matches!(missing, Err(Error::MissingCoalition { coalition }) if coalition == "1,2")
        );
        assert_eq!(QuittingGame::new(0, vec![]), Err(Error::NoPlayers));
        assert!(matches!(
            QuittingGame::new(1, vec![vec![0.0, 1.0]]),
            Err(Error::BadVectorLength { .. })
        ));
        assert!(matches!(
            QuittingGame::new(1, vec![vec![f64::NAN]]),
            Err(Error::NonFiniteEntry { .. })
        ));
    }

    #[test]
    fn profile_validation() {
        assert!(MixedProfile::new(vec![0.5, 1.5]).is_err());
        assert!(MixedProfile::new(vec![-0.0, 1.0]).is_ok());
        assert_eq!(
            EventuallyCyclicProfile::new(vec![], vec![]),
            Err(Error::EmptyCycle)
        );
        assert!(EventuallyCyclicProfile::new(vec![mp(&[0.0])], vec![mp(&[0.0, 1.0])]).is_err());
    }

    #[test]
    fn subgame_examples() {
        let (a, b, c) = (mp(&[0.1, 0.0]), mp(&[0.2, 0.0]), mp(&[0.3, 0.0]));
        let st = EventuallyCyclicProfile::stationary(a.clone());
        assert_eq!(st.subgame(5), st);

        let pi = EventuallyCyclicProfile::new(vec![a.clone()], vec![b.clone(), c.clone()]).unwrap();
        assert_eq!(
            pi.subgame(2),
            EventuallyCyclicProfile::new(vec![], vec![b.clone(), c.clone()]).unwrap()
        );

        let cyc = EventuallyCyclicProfile::new(vec![], vec![b.clone(), c.clone()]).unwrap();
        let shifted = cyc.subgame(2);
        assert_eq!(shifted.cycle(), &[c, b]);
        // naive stage-list shift over the first 10 stages
        let naive: Vec<_> = (0..11).map(|k| cyc.stage(k).clone()).collect();
        for i in 0..10 {
            assert_eq!(shifted.stage(i), &naive[i + 1]);
        }
    }
}
