//! Finite Bayesian games, games with instantiated intentions, and games with
//! intentions, all sharing one in-memory shape.
//!
//! Identifiers are kept as names (for expressions and files) and addressed by
//! index everywhere else. Index order is declaration order, which is also the
//! order every search and report uses.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distribution::FiniteDistribution;
use crate::expr::{self, UtilityExpr};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GameKind {
    Bayesian,
    Bgii,
    Bgi,
}

impl fmt::Display for GameKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GameKind::Bayesian => "bayesian",
            GameKind::Bgii => "bgii",
            GameKind::Bgi => "bgi",
        })
    }
}

/// How a player's strategy set and utility treat mixtures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum StrategyMode {
    /// Only the actions themselves.
    #[default]
    #[serde(rename = "pure")]
    Pure,
    /// Mixtures, with utility the weighted average of pure-action utilities.
    #[serde(rename = "mixed-linear")]
    MixedLinear,
    /// Mixtures, with utility evaluated at the mixture itself.
    #[serde(rename = "mixed-direct")]
    MixedDirect,
}

impl StrategyMode {
    pub fn is_mixed(self) -> bool {
        self != StrategyMode::Pure
    }
}

/// A pure or mixed strategy over a player's action indices.
///
/// A mixture that puts all mass on one action is the same strategy as that
/// action: equality, ordering and hashing all see through the difference.
#[derive(Debug, Clone)]
pub enum Strategy {
    Pure(usize),
    Mixed(FiniteDistribution<usize>),
}

#[derive(PartialEq, Eq, PartialOrd, Ord, Hash)]
enum StrategyKey<'a> {
    Pure(usize),
    Mixed(&'a FiniteDistribution<usize>),
}

impl Strategy {
    /// Builds a strategy from a mixture, collapsing point masses.
    pub fn mixed(dist: FiniteDistribution<usize>) -> Strategy {
        match dist.as_point() {
            Some(&a) => Strategy::Pure(a),
            None => Strategy::Mixed(dist),
        }
    }

    fn key(&self) -> StrategyKey<'_> {
        match self {
            Strategy::Pure(a) => StrategyKey::Pure(*a),
            Strategy::Mixed(d) => match d.as_point() {
                Some(&a) => StrategyKey::Pure(a),
                None => StrategyKey::Mixed(d),
            },
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.key(), StrategyKey::Pure(_))
    }

    pub fn pure_action(&self) -> Option<usize> {
        match self.key() {
            StrategyKey::Pure(a) => Some(a),
            StrategyKey::Mixed(_) => None,
        }
    }

    /// Probability the strategy plays `action`.
    pub fn prob_of(&self, action: usize) -> Rational {
        match self {
            Strategy::Pure(a) if *a == action => Rational::one(),
            Strategy::Pure(_) => Rational::zero(),
            Strategy::Mixed(d) => d.mass(&action),
        }
    }

    pub fn to_distribution(&self) -> FiniteDistribution<usize> {
        match self {
            Strategy::Pure(a) => FiniteDistribution::point(*a),
            Strategy::Mixed(d) => d.clone(),
        }
    }

    /// Actions played with positive probability.
    pub fn support(&self) -> Vec<usize> {
        match self {
            Strategy::Pure(a) => vec![*a],
            Strategy::Mixed(d) => d.support().copied().collect(),
        }
    }
}

impl PartialEq for Strategy {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Strategy {}

impl PartialOrd for Strategy {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Strategy {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl Hash for Strategy {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.key().hash(state)
    }
}

/// A strategy for every type of every player: `[player][type]`.
///
/// Serves as both a profile of behaviour rules and a profile of intention
/// functions.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeStrategyMap(pub Vec<Vec<Strategy>>);

impl TypeStrategyMap {
    pub fn get(&self, player: usize, ty: usize) -> &Strategy {
        &self.0[player][ty]
    }

    /// A copy with one entry replaced.
    pub fn with(&self, player: usize, ty: usize, strategy: Strategy) -> TypeStrategyMap {
        let mut out = self.clone();
        out.0[player][ty] = strategy;
        out
    }

    /// The rule that plays `profile[i]` at every type of player `i`.
    pub fn constant(profile: &[Strategy], type_counts: &[usize]) -> TypeStrategyMap {
        TypeStrategyMap(
            profile
                .iter()
                .zip(type_counts)
                .map(|(s, &n)| vec![s.clone(); n])
                .collect(),
        )
    }

    /// The strategy profile if every player's rule is constant.
    pub fn as_constant(&self) -> Option<Vec<Strategy>> {
        self.0
            .iter()
            .map(|row| {
                let first = row.first()?;
                row.iter().all(|s| s == first).then(|| first.clone())
            })
            .collect()
    }
}

/// Player and action naming shared by type-space games and psychological
/// games.
pub trait Roster {
    fn players(&self) -> &[String];
    fn actions(&self, player: usize) -> &[String];
    fn mode(&self, player: usize) -> StrategyMode;

    fn player_index(&self, name: &str) -> Option<usize> {
        self.players().iter().position(|p| p == name)
    }

    fn action_index(&self, player: usize, name: &str) -> Option<usize> {
        self.actions(player).iter().position(|a| a == name)
    }

    /// `a` for pure strategies, `{a: 1/2, b: 1/2}` for mixtures.
    fn strategy_label(&self, player: usize, strategy: &Strategy) -> String {
        let names = self.actions(player);
        let name = |a: usize| names.get(a).cloned().unwrap_or_else(|| format!("#{a}"));
        match strategy.pure_action() {
            Some(a) => name(a),
            None => {
                let parts: Vec<String> = strategy
                    .to_distribution()
                    .iter()
                    .map(|(a, p)| format!("{}: {}", name(*a), p))
                    .collect();
                format!("{{{}}}", parts.join(", "))
            }
        }
    }
}

/// A finite game over a type space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameModel {
    pub kind: GameKind,
    pub players: Vec<String>,
    pub states: Vec<String>,
    /// `[player][action]`
    pub actions: Vec<Vec<String>>,
    pub strategy_mode: Vec<StrategyMode>,
    /// `[player][type]`
    pub types: Vec<Vec<String>>,
    /// `[player][state]` → type index
    pub signals: Vec<Vec<usize>>,
    /// `[player][type]` → belief over state indices
    pub beliefs: Vec<Vec<FiniteDistribution<usize>>>,
    /// Present exactly for [`GameKind::Bgii`].
    pub intentions: Option<TypeStrategyMap>,
    pub utilities: Vec<UtilityExpr>,
}

impl Roster for GameModel {
    fn players(&self) -> &[String] {
        &self.players
    }

    fn actions(&self, player: usize) -> &[String] {
        &self.actions[player]
    }

    fn mode(&self, player: usize) -> StrategyMode {
        self.strategy_mode[player]
    }
}

impl GameModel {
    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn type_counts(&self) -> Vec<usize> {
        self.types.iter().map(Vec::len).collect()
    }

    pub fn type_index(&self, player: usize, name: &str) -> Option<usize> {
        self.types[player].iter().position(|t| t == name)
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    /// `τ_i(ω)`
    pub fn signal(&self, player: usize, state: usize) -> usize {
        self.signals[player][state]
    }

    /// `p_i(t_i)`
    pub fn belief(&self, player: usize, ty: usize) -> &FiniteDistribution<usize> {
        &self.beliefs[player][ty]
    }

    /// `τ_i^{-1}(t_i)`
    pub fn type_event(&self, player: usize, ty: usize) -> BTreeSet<usize> {
        (0..self.states.len())
            .filter(|&w| self.signals[player][w] == ty)
            .collect()
    }

    /// The strategy profile a behaviour rule profile induces at a state.
    pub fn profile_at(&self, rules: &TypeStrategyMap, state: usize) -> Vec<Strategy> {
        (0..self.num_players())
            .map(|j| rules.get(j, self.signal(j, state)).clone())
            .collect()
    }

    /// Labels for a whole behaviour-rule profile, `[player][type]`.
    pub fn rule_labels(&self, rules: &TypeStrategyMap) -> Vec<Vec<String>> {
        rules
            .0
            .iter()
            .enumerate()
            .map(|(i, row)| row.iter().map(|s| self.strategy_label(i, s)).collect())
            .collect()
    }
}

/// One invariant violation, with a stable machine-readable code.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub code: String,
    pub message: String,
}

impl Violation {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Violation {
            code: code.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

pub(crate) fn duplicates<'a>(
    what: &str,
    names: impl IntoIterator<Item = &'a String>,
    out: &mut Vec<Violation>,
) {
    let mut seen = HashSet::new();
    for n in names {
        if !seen.insert(n) {
            out.push(Violation::new(
                "duplicate-identifier",
                format!("{what} {n:?} declared twice"),
            ));
        }
    }
}

/// Checks a single strategy against a player's actions and mode.
pub fn strategy_violations<R: Roster + ?Sized>(
    roster: &R,
    player: usize,
    strategy: &Strategy,
    context: &str,
) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = roster.actions(player).len();
    let pname = &roster.players()[player];
    for a in strategy.support() {
        if a >= n {
            out.push(Violation::new(
                "unknown-action",
                format!("{context}: action #{a} is not an action of player {pname}"),
            ));
        }
    }
    if let Strategy::Mixed(d) = strategy {
        if !d.is_normalized() {
            out.push(Violation::new(
                "distribution-not-normalized",
                format!("{context}: mixture masses sum to {}", d.total()),
            ));
        }
    }
    if !strategy.is_pure() && roster.mode(player) == StrategyMode::Pure {
        out.push(Violation::new(
            "mixed-strategy-in-pure-mode",
            format!("{context}: player {pname} is pure-mode but is assigned a mixture"),
        ));
    }
    out
}

/// Checks that a type-strategy map is total and valid for `model`.
pub fn profile_violations(
    model: &GameModel,
    rules: &TypeStrategyMap,
    what: &str,
) -> Vec<Violation> {
    let mut out = Vec::new();
    if rules.0.len() != model.num_players() {
        out.push(Violation::new(
            "shape-mismatch",
            format!(
                "{what} covers {} players, model has {}",
                rules.0.len(),
                model.num_players()
            ),
        ));
        return out;
    }
    for (i, row) in rules.0.iter().enumerate() {
        let pname = &model.players[i];
        if row.len() != model.types[i].len() {
            out.push(Violation::new(
                "intention-missing",
                format!(
                    "{what} for player {pname} covers {} types, player has {}",
                    row.len(),
                    model.types[i].len()
                ),
            ));
            continue;
        }
        for (t, s) in row.iter().enumerate() {
            let ctx = format!("{what} of player {pname}, type {}", model.types[i][t]);
            out.extend(strategy_violations(model, i, s, &ctx));
        }
    }
    out
}

/// Every invariant violation of `model`; empty iff the model is valid.
pub fn validate_model(model: &GameModel) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = model.num_players();
    if n == 0 {
        out.push(Violation::new("no-players", "the game declares no players"));
    }
    if model.states.is_empty() {
        out.push(Violation::new("no-states", "the game declares no states"));
    }
    duplicates("player", &model.players, &mut out);
    duplicates("state", &model.states, &mut out);
    for (field, len) in [
        ("actions", model.actions.len()),
        ("strategy_mode", model.strategy_mode.len()),
        ("types", model.types.len()),
        ("signals", model.signals.len()),
        ("beliefs", model.beliefs.len()),
        ("utilities", model.utilities.len()),
    ] {
        if len != n {
            out.push(Violation::new(
                "shape-mismatch",
                format!("{field} has {len} entries for {n} players"),
            ));
        }
    }
    if !out.iter().all(|v| v.code == "duplicate-identifier") {
        return out;
    }

    for i in 0..n {
        let pname = &model.players[i];
        if model.actions[i].is_empty() {
            out.push(Violation::new(
                "empty-action-set",
                format!("player {pname} has no actions"),
            ));
        }
        if model.types[i].is_empty() {
            out.push(Violation::new(
                "empty-type-set",
                format!("player {pname} has no types"),
            ));
        }
        duplicates(
            &format!("action of player {pname}"),
            &model.actions[i],
            &mut out,
        );
        duplicates(
            &format!("type of player {pname}"),
            &model.types[i],
            &mut out,
        );

        let n_types = model.types[i].len();
        if model.signals[i].len() != model.states.len() {
            out.push(Violation::new(
                "signal-not-total",
                format!(
                    "signal of player {pname} covers {} of {} states",
                    model.signals[i].len(),
                    model.states.len()
                ),
            ));
        }
        for (w, &t) in model.signals[i].iter().enumerate() {
            if t >= n_types {
                out.push(Violation::new(
                    "signal-unknown-type",
                    format!("signal of player {pname} maps state #{w} to unknown type #{t}"),
                ));
            }
        }

        if model.beliefs[i].len() != n_types {
            out.push(Violation::new(
                "belief-missing",
                format!(
                    "player {pname} has beliefs for {} of {n_types} types",
                    model.beliefs[i].len()
                ),
            ));
            continue;
        }
        for (t, belief) in model.beliefs[i].iter().enumerate() {
            let tname = &model.types[i][t];
            if !belief.is_normalized() {
                out.push(Violation::new(
                    "distribution-not-normalized",
                    format!(
                        "belief of player {pname}, type {tname} sums to {}",
                        belief.total()
                    ),
                ));
            }
            for &w in belief.support() {
                match model.states.get(w) {
                    None => out.push(Violation::new(
                        "belief-unknown-state",
                        format!(
                            "belief of player {pname}, type {tname} charges unknown state #{w}"
                        ),
                    )),
                    Some(wname) => {
                        if model.signals[i].get(w) != Some(&t) {
                            out.push(Violation::new(
                                "belief-support-outside-own-type",
                                format!(
                                    "type {tname} of player {pname} gives mass {} to state {wname}, \
                                     where player {pname} is not of type {tname}",
                                    belief.mass(&w)
                                ),
                            ));
                        }
                    }
                }
            }
        }
    }

    match (&model.kind, &model.intentions) {
        (GameKind::Bgii, None) => out.push(Violation::new(
            "intentions-missing",
            "a bgii game must declare intentions",
        )),
        (GameKind::Bgii, Some(s)) => out.extend(profile_violations(model, s, "intention")),
        (_, Some(_)) => out.push(Violation::new(
            "unexpected-intentions",
            format!("a {} game cannot declare intentions", model.kind),
        )),
        (_, None) => {}
    }

    for (i, u) in model.utilities.iter().enumerate() {
        for mut v in expr::validate_expr(u, model) {
            v.message = format!("utility of player {}: {}", model.players[i], v.message);
            out.push(v);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PriorError {
    #[error("type {ty} of player {player} is null under the prior")]
    NullType { player: String, ty: String },
    #[error("prior charges unknown state #{0}")]
    UnknownState(usize),
}

/// Beliefs obtained by conditioning one prior on each type's event.
///
/// `signals[i][ω]` is player `i`'s type at state `ω`; `types[i]` names
/// player `i`'s types.
pub fn beliefs_from_prior(
    prior: &FiniteDistribution<usize>,
    signals: &[Vec<usize>],
    players: &[String],
    types: &[Vec<String>],
) -> Result<Vec<Vec<FiniteDistribution<usize>>>, PriorError> {
    signals
        .iter()
        .enumerate()
        .map(|(i, sig)| {
            (0..types[i].len())
                .map(|t| {
                    let mut bad = None;
                    let cond = prior.condition(|&w| match sig.get(w) {
                        Some(&tw) => tw == t,
                        None => {
                            bad = Some(w);
                            false
                        }
                    });
                    if let Some(w) = bad {
                        return Err(PriorError::UnknownState(w));
                    }
                    cond.ok_or_else(|| PriorError::NullType {
                        player: players[i].clone(),
                        ty: types[i][t].clone(),
                    })
                })
                .collect()
        })
        .collect()
}
