//! The JSON file schema for games, profiles and type spaces.
//!
//! Files refer to everything by name; loading resolves names to indices and
//! reports every dangling reference as a [`Violation`] before the model's
//! own invariants are checked.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    beliefs_from_prior, profile_violations, strategy_violations, validate_model, PriorError,
};
use crate::psych::{validate_psych, PsychGame, TypeSpace};
use crate::{
    parse_expr, FiniteDistribution, GameKind, GameModel, Rational, Roster, Strategy, StrategyMode,
};
use crate::{TypeStrategyMap, Violation};

/// The shorthand for reduced-form games, whose states are type profiles.
pub const PRODUCT_OF_TYPES: &str = "product-of-types";

/// Separator between type names in generated state names.
pub const STATE_SEPARATOR: &str = "|";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StatesSpec {
    List(Vec<String>),
    Shorthand(String),
}

/// An action name or a mixture `{action: probability}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategyEntry {
    Action(String),
    Mixture(BTreeMap<String, Rational>),
}

type ByPlayer<T> = BTreeMap<String, T>;
type BeliefTable = ByPlayer<BTreeMap<String, BTreeMap<String, Rational>>>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameFile {
    pub kind: String,
    pub players: Vec<String>,
    pub actions: ByPlayer<Vec<String>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub strategy_mode: ByPlayer<StrategyMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<StatesSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub types: Option<ByPlayer<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signals: Option<ByPlayer<BTreeMap<String, String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beliefs: Option<BeliefTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<BTreeMap<String, Rational>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intentions: Option<ByPlayer<BTreeMap<String, StrategyEntry>>>,
    pub utilities: ByPlayer<String>,
}

/// A type space on its own, for embedding psychological games.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TypeSpaceFile {
    pub states: StatesSpec,
    pub types: ByPlayer<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signals: Option<ByPlayer<BTreeMap<String, String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beliefs: Option<BeliefTable>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior: Option<BTreeMap<String, Rational>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{} violation(s): {}", .0.len(), .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

impl From<serde_json::Error> for FormatError {
    fn from(e: serde_json::Error) -> Self {
        FormatError::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

/// A loaded game file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Loaded {
    Game(GameModel),
    Psych(PsychGame),
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|e| FormatError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn load_path(path: &Path) -> Result<Loaded, FormatError> {
    load_str(&read_text(path)?)
}

pub fn load_str(text: &str) -> Result<Loaded, FormatError> {
    let file: GameFile = serde_json::from_str(text)?;
    from_file(&file).map_err(FormatError::Invalid)
}

/// Loads a file that must describe a game over a type space.
pub fn load_game_str(text: &str) -> Result<GameModel, FormatError> {
    match load_str(text)? {
        Loaded::Game(m) => Ok(m),
        Loaded::Psych(_) => Err(FormatError::Invalid(vec![Violation::new(
            "wrong-kind",
            "expected a game over a type space, found a psychological game",
        )])),
    }
}

/// Loads a file that must describe a psychological game.
pub fn load_psych_str(text: &str) -> Result<PsychGame, FormatError> {
    match load_str(text)? {
        Loaded::Psych(g) => Ok(g),
        Loaded::Game(m) => Err(FormatError::Invalid(vec![Violation::new(
            "wrong-kind",
            format!("expected a psychological game, found a {} game", m.kind),
        )])),
    }
}

/// Resolves a per-player map into player order, reporting unknown and
/// missing players.
fn per_player<'a, T>(
    players: &[String],
    map: &'a ByPlayer<T>,
    field: &str,
    required: bool,
    out: &mut Vec<Violation>,
) -> Vec<Option<&'a T>> {
    for key in map.keys() {
        if !players.contains(key) {
            out.push(Violation::new(
                "unknown-player",
                format!("{field} mentions undeclared player {key:?}"),
            ));
        }
    }
    players
        .iter()
        .map(|p| {
            let v = map.get(p);
            if v.is_none() && required {
                out.push(Violation::new(
                    "shape-mismatch",
                    format!("{field} has no entry for player {p:?}"),
                ));
            }
            v
        })
        .collect()
}

fn index_of(names: &[String], name: &str) -> Option<usize> {
    names.iter().position(|n| n == name)
}

/// Resolves a strategy entry for `player`. Normalization and mode are left
/// to [`strategy_violations`].
pub fn strategy_from_entry<R: Roster + ?Sized>(
    roster: &R,
    player: usize,
    entry: &StrategyEntry,
) -> Result<Strategy, Violation> {
    let pname = &roster.players()[player];
    let action = |a: &str| {
        roster.action_index(player, a).ok_or_else(|| {
            Violation::new(
                "unknown-action",
                format!("player {pname} has no action named {a:?}"),
            )
        })
    };
    match entry {
        StrategyEntry::Action(a) => Ok(Strategy::Pure(action(a)?)),
        StrategyEntry::Mixture(parts) => {
            let masses = parts
                .iter()
                .map(|(a, p)| Ok((action(a)?, p.clone())))
                .collect::<Result<Vec<_>, Violation>>()?;
            FiniteDistribution::new_unchecked(masses)
                .map(Strategy::mixed)
                .map_err(|e| {
                    Violation::new("negative-mass", format!("mixture for player {pname}: {e}"))
                })
        }
    }
}

pub fn strategy_entry<R: Roster + ?Sized>(
    roster: &R,
    player: usize,
    strategy: &Strategy,
) -> StrategyEntry {
    let names = roster.actions(player);
    match strategy {
        Strategy::Pure(a) => StrategyEntry::Action(names[*a].clone()),
        Strategy::Mixed(d) => StrategyEntry::Mixture(
            d.iter()
                .map(|(a, p)| (names[*a].clone(), p.clone()))
                .collect(),
        ),
    }
}

fn rules_from_entries(
    model: &GameModel,
    map: &ByPlayer<BTreeMap<String, StrategyEntry>>,
    what: &str,
    out: &mut Vec<Violation>,
) -> Option<TypeStrategyMap> {
    let before = out.len();
    let rows = per_player(&model.players, map, what, true, out);
    let mut rules = Vec::with_capacity(rows.len());
    for (i, row) in rows.into_iter().enumerate() {
        let Some(row) = row else { continue };
        let pname = &model.players[i];
        for key in row.keys() {
            if model.type_index(i, key).is_none() {
                out.push(Violation::new(
                    "unknown-type",
                    format!("{what} of player {pname} mention undeclared type {key:?}"),
                ));
            }
        }
        let mut strategies = Vec::new();
        for t in &model.types[i] {
            match row.get(t) {
                None => out.push(Violation::new(
                    "intention-missing",
                    format!("{what} of player {pname} give nothing for type {t:?}"),
                )),
                Some(e) => match strategy_from_entry(model, i, e) {
                    Ok(s) => strategies.push(s),
                    Err(v) => out.push(v),
                },
            }
        }
        rules.push(strategies);
    }
    (out.len() == before).then_some(TypeStrategyMap(rules))
}

/// Parses a profile file of behaviour rules or intentions for `model`.
pub fn rules_from_str(
    model: &GameModel,
    text: &str,
    what: &str,
) -> Result<TypeStrategyMap, FormatError> {
    let map: ByPlayer<BTreeMap<String, StrategyEntry>> = serde_json::from_str(text)?;
    let mut out = Vec::new();
    let rules = rules_from_entries(model, &map, what, &mut out);
    match rules {
        Some(r) => {
            let v = profile_violations(model, &r, what);
            if v.is_empty() {
                Ok(r)
            } else {
                Err(FormatError::Invalid(v))
            }
        }
        None => Err(FormatError::Invalid(out)),
    }
}

/// Parses a profile file `{player: strategy}` for a psychological game.
pub fn profile_from_str(game: &PsychGame, text: &str) -> Result<Vec<Strategy>, FormatError> {
    let map: ByPlayer<StrategyEntry> = serde_json::from_str(text)?;
    let mut out = Vec::new();
    let entries = per_player(&game.players, &map, "profile", true, &mut out);
    let mut profile = Vec::new();
    for (i, e) in entries.into_iter().enumerate() {
        let Some(e) = e else { continue };
        match strategy_from_entry(game, i, e) {
            Ok(s) => {
                out.extend(strategy_violations(
                    game,
                    i,
                    &s,
                    &format!("strategy of player {}", game.players[i]),
                ));
                profile.push(s);
            }
            Err(v) => out.push(v),
        }
    }
    if out.is_empty() {
        Ok(profile)
    } else {
        Err(FormatError::Invalid(out))
    }
}

/// Every combination of one type per player, in lexicographic order.
fn type_profiles(types: &[Vec<String>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for ts in types {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                (0..ts.len()).map(move |t| {
                    let mut v = prefix.clone();
                    v.push(t);
                    v
                })
            })
            .collect();
    }
    out
}

struct SpaceParts<'a> {
    states: Option<&'a StatesSpec>,
    types: Option<&'a ByPlayer<Vec<String>>>,
    signals: Option<&'a ByPlayer<BTreeMap<String, String>>>,
    beliefs: Option<&'a BeliefTable>,
    prior: Option<&'a BTreeMap<String, Rational>>,
}

fn build_space(
    players: &[String],
    parts: SpaceParts<'_>,
    out: &mut Vec<Violation>,
) -> Option<TypeSpace> {
    let before = out.len();
    let Some(types_map) = parts.types else {
        out.push(Violation::new("shape-mismatch", "types are missing"));
        return None;
    };
    let types: Vec<Vec<String>> = per_player(players, types_map, "types", true, out)
        .into_iter()
        .map(|t| t.cloned().unwrap_or_default())
        .collect();

    let (states, signals) = match parts.states {
        None => {
            out.push(Violation::new("no-states", "states are missing"));
            return None;
        }
        Some(StatesSpec::Shorthand(s)) if s == PRODUCT_OF_TYPES => {
            if parts.signals.is_some() {
                out.push(Violation::new(
                    "field-not-allowed",
                    "signals are implied by \"product-of-types\" and must be omitted",
                ));
            }
            let profiles = type_profiles(&types);
            let states: Vec<String> = profiles
                .iter()
                .map(|p| {
                    p.iter()
                        .enumerate()
                        .map(|(i, &t)| types[i][t].as_str())
                        .collect::<Vec<_>>()
                        .join(STATE_SEPARATOR)
                })
                .collect();
            let signals = (0..players.len())
                .map(|i| profiles.iter().map(|p| p[i]).collect())
                .collect();
            (states, signals)
        }
        Some(StatesSpec::Shorthand(s)) => {
            out.push(Violation::new(
                "unknown-states-shorthand",
                format!("states must be a list or {PRODUCT_OF_TYPES:?}, got {s:?}"),
            ));
            return None;
        }
        Some(StatesSpec::List(states)) => {
            let empty = BTreeMap::new();
            let table = parts.signals.unwrap_or(&empty);
            let rows = per_player(players, table, "signals", true, out);
            let mut signals = Vec::new();
            for (i, row) in rows.into_iter().enumerate() {
                let row = row.cloned().unwrap_or_default();
                let pname = &players[i];
                for w in row.keys() {
                    if !states.contains(w) {
                        out.push(Violation::new(
                            "unknown-state",
                            format!("signal of player {pname} mentions undeclared state {w:?}"),
                        ));
                    }
                }
                let mut sig = Vec::new();
                for w in states {
                    match row.get(w) {
                        None => out.push(Violation::new(
                            "signal-not-total",
                            format!("signal of player {pname} is undefined at state {w:?}"),
                        )),
                        Some(t) => match index_of(&types[i], t) {
                            Some(t) => sig.push(t),
                            None => out.push(Violation::new(
                                "signal-unknown-type",
                                format!(
                                    "signal of player {pname} maps {w:?} to undeclared type {t:?}"
                                ),
                            )),
                        },
                    }
                }
                signals.push(sig);
            }
            (states.clone(), signals)
        }
    };
    if out.len() > before {
        return None;
    }

    let state_of = |w: &str, ctx: &str, out: &mut Vec<Violation>| {
        let idx = index_of(&states, w);
        if idx.is_none() {
            out.push(Violation::new(
                "unknown-state",
                format!("{ctx} mentions undeclared state {w:?}"),
            ));
        }
        idx
    };
    let dist = |masses: Vec<(usize, Rational)>, ctx: &str, out: &mut Vec<Violation>| {
        FiniteDistribution::new_unchecked(masses)
            .map_err(|e| out.push(Violation::new("negative-mass", format!("{ctx}: {e}"))))
            .ok()
    };

    let beliefs = match (parts.beliefs, parts.prior) {
        (Some(_), Some(_)) => {
            out.push(Violation::new(
                "beliefs-and-prior",
                "give either beliefs or a prior, not both",
            ));
            return None;
        }
        (None, None) => {
            out.push(Violation::new(
                "belief-missing",
                "neither beliefs nor a prior is given",
            ));
            return None;
        }
        (None, Some(prior)) => {
            let mut masses = Vec::new();
            for (w, p) in prior {
                if let Some(w) = state_of(w, "prior", out) {
                    masses.push((w, p.clone()));
                }
            }
            let prior = dist(masses, "prior", out)?;
            if !prior.is_normalized() {
                out.push(Violation::new(
                    "distribution-not-normalized",
                    format!("prior sums to {}", prior.total()),
                ));
                return None;
            }
            match beliefs_from_prior(&prior, &signals, players, &types) {
                Ok(b) => b,
                Err(PriorError::NullType { player, ty }) => {
                    out.push(Violation::new(
                        "null-type",
                        format!("type {ty} of player {player} has prior probability 0"),
                    ));
                    return None;
                }
                Err(e) => {
                    out.push(Violation::new("unknown-state", e.to_string()));
                    return None;
                }
            }
        }
        (Some(table), None) => {
            let rows = per_player(players, table, "beliefs", true, out);
            let mut beliefs = Vec::new();
            for (i, row) in rows.into_iter().enumerate() {
                let row = row.cloned().unwrap_or_default();
                let pname = &players[i];
                for t in row.keys() {
                    if index_of(&types[i], t).is_none() {
                        out.push(Violation::new(
                            "unknown-type",
                            format!("beliefs of player {pname} mention undeclared type {t:?}"),
                        ));
                    }
                }
                let mut per_type = Vec::new();
                for t in &types[i] {
                    let ctx = format!("belief of player {pname}, type {t}");
                    let Some(b) = row.get(t) else {
                        out.push(Violation::new(
                            "belief-missing",
                            format!("{ctx} is missing"),
                        ));
                        continue;
                    };
                    let mut masses = Vec::new();
                    for (w, p) in b {
                        if let Some(w) = state_of(w, &ctx, out) {
                            masses.push((w, p.clone()));
                        }
                    }
                    if let Some(d) = dist(masses, &ctx, out) {
                        per_type.push(d);
                    }
                }
                beliefs.push(per_type);
            }
            beliefs
        }
    };
    (out.len() == before).then_some(TypeSpace {
        states,
        types,
        signals,
        beliefs,
    })
}

/// Parses a type-space file for the given players.
pub fn type_space_from_str(players: &[String], text: &str) -> Result<TypeSpace, FormatError> {
    let file: TypeSpaceFile = serde_json::from_str(text)?;
    let mut out = Vec::new();
    let space = build_space(
        players,
        SpaceParts {
            states: Some(&file.states),
            types: Some(&file.types),
            signals: file.signals.as_ref(),
            beliefs: file.beliefs.as_ref(),
            prior: file.prior.as_ref(),
        },
        &mut out,
    );
    match space {
        Some(s) if out.is_empty() => Ok(s),
        _ => Err(FormatError::Invalid(out)),
    }
}

fn parse_kind(kind: &str) -> Option<Option<GameKind>> {
    match kind {
        "bayesian" => Some(Some(GameKind::Bayesian)),
        "bgii" => Some(Some(GameKind::Bgii)),
        "bgi" => Some(Some(GameKind::Bgi)),
        "psych" => Some(None),
        _ => None,
    }
}

/// Resolves and validates a parsed file. The error lists every violation
/// found.
pub fn from_file(file: &GameFile) -> Result<Loaded, Vec<Violation>> {
    let mut out = Vec::new();
    let Some(kind) = parse_kind(&file.kind) else {
        return Err(vec![Violation::new(
            "unknown-kind",
            format!(
                "kind must be bayesian, bgii, bgi or psych, got {:?}",
                file.kind
            ),
        )]);
    };
    let players = &file.players;
    let actions: Vec<Vec<String>> = per_player(players, &file.actions, "actions", true, &mut out)
        .into_iter()
        .map(|a| a.cloned().unwrap_or_default())
        .collect();
    let strategy_mode: Vec<StrategyMode> = per_player(
        players,
        &file.strategy_mode,
        "strategy_mode",
        false,
        &mut out,
    )
    .into_iter()
    .map(|m| m.copied().unwrap_or_default())
    .collect();
    let mut utilities = Vec::new();
    for (i, u) in per_player(players, &file.utilities, "utilities", true, &mut out)
        .into_iter()
        .enumerate()
    {
        let Some(u) = u else { continue };
        match parse_expr(u) {
            Ok(e) => utilities.push(e),
            Err(e) => out.push(Violation::new(
                "syntax-error",
                format!("utility of player {}: {e}", players[i]),
            )),
        }
    }

    let Some(kind) = kind else {
        for (field, present) in [
            ("states", file.states.is_some()),
            ("types", file.types.is_some()),
            ("signals", file.signals.is_some()),
            ("beliefs", file.beliefs.is_some()),
            ("prior", file.prior.is_some()),
            ("intentions", file.intentions.is_some()),
        ] {
            if present {
                out.push(Violation::new(
                    "field-not-allowed",
                    format!("a psych game has no {field}"),
                ));
            }
        }
        if !out.is_empty() {
            return Err(out);
        }
        let game = PsychGame {
            players: players.clone(),
            actions,
            strategy_mode,
            utilities,
        };
        let v = validate_psych(&game);
        return if v.is_empty() {
            Ok(Loaded::Psych(game))
        } else {
            Err(v)
        };
    };

    let space = build_space(
        players,
        SpaceParts {
            states: file.states.as_ref(),
            types: file.types.as_ref(),
            signals: file.signals.as_ref(),
            beliefs: file.beliefs.as_ref(),
            prior: file.prior.as_ref(),
        },
        &mut out,
    );
    let Some(space) = space else { return Err(out) };
    if !out.is_empty() {
        return Err(out);
    }
    let mut model = GameModel {
        kind,
        players: players.clone(),
        states: space.states,
        actions,
        strategy_mode,
        types: space.types,
        signals: space.signals,
        beliefs: space.beliefs,
        intentions: None,
        utilities,
    };
    if let Some(map) = &file.intentions {
        match rules_from_entries(&model, map, "intentions", &mut out) {
            Some(s) => model.intentions = Some(s),
            None => return Err(out),
        }
    }
    let v = validate_model(&model);
    if v.is_empty() {
        Ok(Loaded::Game(model))
    } else {
        Err(v)
    }
}

fn by_player<T>(players: &[String], values: impl IntoIterator<Item = T>) -> ByPlayer<T> {
    players.iter().cloned().zip(values).collect()
}

/// The file describing `model`, with beliefs spelled out per type.
pub fn to_game_file(model: &GameModel) -> GameFile {
    let players = &model.players;
    let signals = (0..model.num_players()).map(|i| {
        model
            .states
            .iter()
            .enumerate()
            .map(|(w, name)| (name.clone(), model.types[i][model.signal(i, w)].clone()))
            .collect()
    });
    let beliefs = (0..model.num_players()).map(|i| {
        model.types[i]
            .iter()
            .enumerate()
            .map(|(t, tname)| {
                let b = model
                    .belief(i, t)
                    .iter()
                    .map(|(&w, p)| (model.states[w].clone(), p.clone()))
                    .collect();
                (tname.clone(), b)
            })
            .collect()
    });
    let intentions = model.intentions.as_ref().map(|s| {
        by_player(
            players,
            (0..model.num_players()).map(|i| {
                model.types[i]
                    .iter()
                    .enumerate()
                    .map(|(t, tname)| (tname.clone(), strategy_entry(model, i, s.get(i, t))))
                    .collect()
            }),
        )
    });
    GameFile {
        kind: model.kind.to_string(),
        players: players.clone(),
        actions: by_player(players, model.actions.iter().cloned()),
        strategy_mode: by_player(players, model.strategy_mode.iter().copied()),
        states: Some(StatesSpec::List(model.states.clone())),
        types: Some(by_player(players, model.types.iter().cloned())),
        signals: Some(by_player(players, signals)),
        beliefs: Some(by_player(players, beliefs)),
        prior: None,
        intentions,
        utilities: by_player(players, model.utilities.iter().map(ToString::to_string)),
    }
}

pub fn psych_to_game_file(game: &PsychGame) -> GameFile {
    let players = &game.players;
    GameFile {
        kind: "psych".into(),
        players: players.clone(),
        actions: by_player(players, game.actions.iter().cloned()),
        strategy_mode: by_player(players, game.strategy_mode.iter().copied()),
        states: None,
        types: None,
        signals: None,
        beliefs: None,
        prior: None,
        intentions: None,
        utilities: by_player(players, game.utilities.iter().map(ToString::to_string)),
    }
}

/// Pretty JSON with keys in sorted order.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("schema types serialize");
    serde_json::to_string_pretty(&v).expect("values serialize")
}

/// The distinct violation codes.
pub fn codes(violations: &[Violation]) -> BTreeSet<&str> {
    violations.iter().map(|v| v.code.as_str()).collect()
}
