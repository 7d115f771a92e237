//! JSON file formats for games, profiles and one-step inputs.
//!
//! Numeric entries may be JSON numbers or strings holding a decimal or a
//! simple fraction such as `"10/9"`; fractions are divided once, in `f64`.
//!
//! ```text
//! game:     { "players": 2, "payoffs": { "1": [1, -1], "2": [1, 1], "1,2": [-2, -2] } }
//! profile:  { "prefix": [[1, 0]], "cycle": [[0.5, 0], [0, "1/3"]] }
//! one-step: { "v": ["9/10", "10/9"], "p": [0.1, 0] }
//! ```

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::game::{Coalition, EventuallyCyclicProfile, MixedProfile, QuittingGame, MAX_PLAYERS};

/// Parses a decimal (`"-0.25"`, `"1e-3"`) or a fraction (`"10/9"`).
pub fn parse_number(text: &str) -> Result<f64> {
    let text = text.trim();
    let bad = || Error::BadNumber(text.to_string());
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| bad())?;
            let den: f64 = den.trim().parse().map_err(|_| bad())?;
            if den == 0.0 {
                return Err(bad());
            }
            num / den
        }
        None => text.parse().map_err(|_| bad())?,
    };
    if !value.is_finite() {
        return Err(bad());
    }
    Ok(value)
}

/// Parses a comma-separated list of numbers, e.g. `"9/10,10/9"`.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    text.split(',').map(parse_number).collect()
}

fn number_value(value: &Value, what: &str) -> Result<f64> {
    match value {
        Value::Number(n) => n
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::NonFiniteEntry { what: what.into() }),
        Value::String(s) => parse_number(s),
        other => Err(Error::Format(format!(
            "{what}: expected a number, got {other}"
        ))),
    }
}

fn vector_value(value: &Value, what: &str) -> Result<Vec<f64>> {
    match value {
        Value::Array(items) => items.iter().map(|x| number_value(x, what)).collect(),
        other => Err(Error::Format(format!(
            "{what}: expected an array, got {other}"
        ))),
    }
}

fn object<'a>(value: &'a Value, what: &str) -> Result<&'a Map<String, Value>> {
    value
        .as_object()
        .ok_or_else(|| Error::Format(format!("{what} must be a JSON object")))
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))
}

/// Validates a parsed game description into a [`QuittingGame`].
pub fn validate_game(raw: &Value) -> Result<QuittingGame> {
    let obj = object(raw, "game")?;
    let players = obj
        .get("players")
        .ok_or_else(|| Error::Format("game is missing \"players\"".into()))?;
    let n = match players.as_u64() {
        Some(0) => return Err(Error::NoPlayers),
        Some(n) => n as usize,
        None if players.as_i64().is_some_and(|x| x < 1) => return Err(Error::NoPlayers),
        None => {
            return Err(Error::Format(
                "\"players\" must be a positive integer".into(),
            ))
        }
    };
    if n > MAX_PLAYERS {
        return Err(Error::TooManyPlayers {
            players: n,
            max: MAX_PLAYERS,
        });
    }
    let payoffs = object(
        obj.get("payoffs")
            .ok_or_else(|| Error::Format("game is missing \"payoffs\"".into()))?,
        "payoffs",
    )?;

    let mut rows: Vec<Option<Vec<f64>>> = vec![None; (1 << n) - 1];
    for (key, value) in payoffs {
        let coalition = Coalition::parse_key(key, n)?;
        let slot = &mut rows[coalition.index() - 1];
        if slot.is_some() {
            return Err(Error::BadCoalition {
                key: key.clone(),
                reason: "coalition listed twice".into(),
            });
        }
        let what = format!("payoff of coalition {}", coalition.key());
        let row = vector_value(value, &what)?;
        if row.len() != n {
            return Err(Error::BadVectorLength {
                what,
                expected: n,
                found: row.len(),
            });
        }
        *slot = Some(row);
    }
    let rows = rows
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.ok_or_else(|| Error::MissingCoalition {
                coalition: Coalition::from_bits(i as u32 + 1).key(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    QuittingGame::new(n, rows)
}

pub fn parse_game(text: &str) -> Result<QuittingGame> {
    validate_game(&parse_json(text)?)
}

pub fn game_to_json(game: &QuittingGame) -> Value {
    let n = game.num_players();
    let payoffs: Map<String, Value> = Coalition::nonempty(n)
        .map(|s| (s.key(), Value::from(game.payoff(s).to_vec())))
        .collect();
    serde_json::json!({ "players": n, "payoffs": payoffs })
}

fn stages(value: Option<&Value>, what: &str) -> Result<Vec<MixedProfile>> {
    match value {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|stage| MixedProfile::new(vector_value(stage, what)?))
            .collect(),
        Some(other) => Err(Error::Format(format!(
            "{what}: expected an array, got {other}"
        ))),
    }
}

pub fn validate_profile(raw: &Value) -> Result<EventuallyCyclicProfile> {
    let obj = object(raw, "profile")?;
    let prefix = stages(obj.get("prefix"), "prefix stage")?;
    let cycle = stages(obj.get("cycle"), "cycle stage")?;
    EventuallyCyclicProfile::new(prefix, cycle)
}

pub fn parse_profile(text: &str) -> Result<EventuallyCyclicProfile> {
    validate_profile(&parse_json(text)?)
}

pub fn profile_to_json(pi: &EventuallyCyclicProfile) -> Value {
    let list = |ps: &[MixedProfile]| -> Value {
        ps.iter().map(|p| Value::from(p.probs().to_vec())).collect()
    };
    serde_json::json!({ "prefix": list(pi.prefix()), "cycle": list(pi.cycle()) })
}

/// Optional `v` and `p` vectors from a one-step input file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OneStepInput {
    pub v: Option<Vec<f64>>,
    pub p: Option<Vec<f64>>,
}

pub fn parse_one_step_input(text: &str) -> Result<OneStepInput> {
    let raw = parse_json(text)?;
    let obj = object(&raw, "one-step input")?;
    let field = |name: &str| -> Result<Option<Vec<f64>>> {
        obj.get(name).map(|v| vector_value(v, name)).transpose()
    };
    Ok(OneStepInput {
        v: field("v")?,
        p: field("p")?,
    })
}
