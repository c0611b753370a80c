//! Expected utilities, best responses, and equilibrium verification and
//! search.
//!
//! A profile of behaviour rules `β` is checked type by type: only `β_i(t_i)`
//! enters `E_{t_i}`, so a deviation is a single-type substitution. In a game
//! with instantiated intentions the intentions stay fixed while actual play
//! deviates; the profile must also coincide with the intentions. A profile is
//! an equilibrium of a game with intentions when it is an equilibrium of the
//! instantiation at itself.
//!
//! Searches enumerate behaviour-rule profiles in lexicographic order over
//! (player, type, menu position) and verify candidates in parallel; results
//! are merged back in enumeration order.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{eval_utility, EvalContext, EvalError};
use crate::model::{
    profile_violations, GameKind, GameModel, Roster, Strategy, StrategyMode, TypeStrategyMap,
};
use crate::rational::Rational;
use crate::{FiniteDistribution, Violation};

/// Default bound on the number of candidate profiles a search will visit.
pub const DEFAULT_SEARCH_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquilibriumError {
    #[error("invalid profile: {}", list(.0))]
    InvalidProfile(Vec<Violation>),
    #[error("operation needs a {expected} game, got {found}")]
    WrongKind {
        expected: &'static str,
        found: GameKind,
    },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("search space has {size} candidates, above the cap of {cap}")]
    SearchSpaceTooLarge { size: String, cap: u64 },
    #[error("grid resolution must be at least 1")]
    ZeroResolution,
}

fn list(vs: &[Violation]) -> String {
    vs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Which alternatives a best-response check tries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviationSpec {
    /// Every action.
    Pure,
    /// Every mixture whose masses are multiples of `1/k`.
    Grid(u32),
}

impl fmt::Display for DeviationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviationSpec::Pure => f.write_str("pure"),
            DeviationSpec::Grid(k) => write!(f, "grid:{k}"),
        }
    }
}

impl FromStr for DeviationSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "pure" {
            return Ok(DeviationSpec::Pure);
        }
        match s.strip_prefix("grid:").and_then(|k| k.parse::<u32>().ok()) {
            Some(k) if k >= 1 => Ok(DeviationSpec::Grid(k)),
            _ => Err(format!(
                "expected \"pure\" or \"grid:k\" with k >= 1, got {s:?}"
            )),
        }
    }
}

/// All mixtures over `n` actions with masses in `{0, 1/k, ..., 1}`, ordered
/// by decreasing weight vector, so the first is the first pure action and
/// vertices precede their neighbours.
pub fn grid_points(n: usize, k: u32) -> Vec<Strategy> {
    fn compositions(n: usize, k: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() + 1 == n {
            prefix.push(k);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for w in (0..=k).rev() {
            prefix.push(w);
            compositions(n, k - w, prefix, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return Vec::new();
    }
    let mut weights = Vec::new();
    compositions(n, k, &mut Vec::new(), &mut weights);
    weights
        .into_iter()
        .map(|w| {
            let masses = w
                .into_iter()
                .enumerate()
                .map(|(a, m)| (a, Rational::new(m as i64, k as i64).expect("k >= 1")));
            Strategy::mixed(FiniteDistribution::new(masses).expect("weights sum to k"))
        })
        .collect()
}

/// The deviations tried for `player`; pure-mode players only ever deviate to
/// actions.
pub fn deviation_set<R: Roster + ?Sized>(
    roster: &R,
    player: usize,
    spec: DeviationSpec,
) -> Vec<Strategy> {
    let n = roster.actions(player).len();
    match (roster.mode(player), spec) {
        (StrategyMode::Pure, _) | (_, DeviationSpec::Pure) => (0..n).map(Strategy::Pure).collect(),
        (_, DeviationSpec::Grid(k)) => grid_points(n, k),
    }
}

/// A profitable deviation for one type. `ty` is `None` for games without
/// types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub player: usize,
    pub ty: Option<usize>,
    pub deviation: Strategy,
    pub gain: Rational,
}

/// The utility a player (type) gets from the checked profile.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeValue {
    pub player: usize,
    pub ty: Option<usize>,
    pub utility: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conditions {
    pub best_response: bool,
    /// `None` where the game has no intentions to match.
    pub intentions_match: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub is_equilibrium: bool,
    pub witnesses: Vec<Witness>,
    pub checked_conditions: Conditions,
    pub values: Vec<TypeValue>,
}

impl Verdict {
    pub(crate) fn from_parts(
        witnesses: Vec<Witness>,
        values: Vec<TypeValue>,
        intentions_match: Option<bool>,
    ) -> Self {
        let best_response = witnesses.is_empty();
        Verdict {
            is_equilibrium: best_response && intentions_match.unwrap_or(true),
            witnesses,
            checked_conditions: Conditions {
                best_response,
                intentions_match,
            },
            values,
        }
    }

    pub fn witness_for(&self, player: usize, ty: Option<usize>) -> Option<&Witness> {
        self.witnesses
            .iter()
            .find(|w| w.player == player && w.ty == ty)
    }
}

/// What a search enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchSpace {
    /// Every pure profile (or the single built-in candidate of a game with
    /// instantiated intentions).
    Pure,
    /// Every profile whose mixtures have masses in multiples of `1/k`.
    Grid { resolution: u32 },
}

impl SearchSpace {
    /// `complete` for pure enumeration; grid results only certify the grid.
    pub fn coverage(&self) -> String {
        match self {
            SearchSpace::Pure => "complete".to_string(),
            SearchSpace::Grid { resolution } => format!("exhaustive-at-resolution-{resolution}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchReport<P> {
    pub equilibria: Vec<P>,
    pub search_space: SearchSpace,
    pub candidates: u64,
    /// True when every candidate in the search space was verified.
    pub exhaustive: bool,
}

fn intentions_for(model: &GameModel) -> Result<Option<&TypeStrategyMap>, EquilibriumError> {
    match model.kind {
        GameKind::Bayesian => Ok(None),
        GameKind::Bgii => Ok(model.intentions.as_ref()),
        GameKind::Bgi => Err(EquilibriumError::WrongKind {
            expected: "bayesian or bgii",
            found: GameKind::Bgi,
        }),
    }
}

fn check_profile(model: &GameModel, rules: &TypeStrategyMap) -> Result<(), EquilibriumError> {
    let v = profile_violations(model, rules, "behaviour rule");
    if v.is_empty() {
        Ok(())
    } else {
        Err(EquilibriumError::InvalidProfile(v))
    }
}

/// Utilities `u_i(ω, actual)` already computed under one fixed intention
/// profile.
type Memo = HashMap<(usize, usize, Vec<Strategy>), Rational>;

/// `E_{t_i}(β)` with the given intention profile in force.
fn expected_with(
    model: &GameModel,
    intentions: Option<&TypeStrategyMap>,
    rules: &TypeStrategyMap,
    player: usize,
    ty: usize,
    memo: &mut Memo,
) -> Result<Rational, EvalError> {
    let u = &model.utilities[player];
    model.belief(player, ty).expectation(|&w| {
        let actual = model.profile_at(rules, w);
        let key = (player, w, actual);
        if let Some(v) = memo.get(&key) {
            return Ok(v.clone());
        }
        let mut ctx = EvalContext::new(model, w, &key.2);
        ctx.intentions = intentions;
        let v = eval_utility(u, &ctx, player)?;
        memo.insert(key, v.clone());
        Ok(v)
    })
}

/// `E_{t_i}(β)`: type `ty` of `player`'s expectation of the induced utility
/// `u_i^β`, for a Bayesian game or a game with instantiated intentions.
pub fn expected_utility(
    model: &GameModel,
    rules: &TypeStrategyMap,
    player: usize,
    ty: usize,
) -> Result<Rational, EquilibriumError> {
    let intentions = intentions_for(model)?;
    check_profile(model, rules)?;
    Ok(expected_with(
        model,
        intentions,
        rules,
        player,
        ty,
        &mut Memo::new(),
    )?)
}

/// Best deviation among `candidates` for one type; ties go to the earliest
/// candidate. Returns the baseline value as well.
#[allow(clippy::too_many_arguments)]
fn best_deviation(
    model: &GameModel,
    intentions: Option<&TypeStrategyMap>,
    rules: &TypeStrategyMap,
    player: usize,
    ty: usize,
    candidates: &[Strategy],
    memo: &mut Memo,
    first_only: bool,
) -> Result<(Rational, Option<(Strategy, Rational)>), EvalError> {
    let base = expected_with(model, intentions, rules, player, ty, memo)?;
    let current = rules.get(player, ty);
    let mut best: Option<(Strategy, Rational)> = None;
    for dev in candidates {
        if dev == current {
            continue;
        }
        let alt = rules.with(player, ty, dev.clone());
        let gain = expected_with(model, intentions, &alt, player, ty, memo)? - &base;
        if gain.is_positive() && best.as_ref().is_none_or(|(_, g)| gain > *g) {
            best = Some((dev.clone(), gain));
            if first_only {
                break;
            }
        }
    }
    Ok((base, best))
}

/// A deviation for type `ty` of `player` that strictly improves `E_{t_i}`,
/// with its gain; the largest gain wins and ties go to the earliest deviation
/// in enumeration order.
pub fn best_response_witness(
    model: &GameModel,
    rules: &TypeStrategyMap,
    player: usize,
    ty: usize,
    deviations: DeviationSpec,
) -> Result<Option<(Strategy, Rational)>, EquilibriumError> {
    let intentions = intentions_for(model)?;
    check_profile(model, rules)?;
    let candidates = deviation_set(model, player, deviations);
    Ok(best_deviation(
        model,
        intentions,
        rules,
        player,
        ty,
        &candidates,
        &mut Memo::new(),
        false,
    )?
    .1)
}

fn verify(
    model: &GameModel,
    intentions: Option<&TypeStrategyMap>,
    rules: &TypeStrategyMap,
    deviations: &[Vec<Strategy>],
    memo: &mut Memo,
) -> Result<(Vec<Witness>, Vec<TypeValue>), EvalError> {
    let mut witnesses = Vec::new();
    let mut values = Vec::new();
    for (i, candidates) in deviations.iter().enumerate() {
        for t in 0..model.types[i].len() {
            let (base, best) =
                best_deviation(model, intentions, rules, i, t, candidates, memo, false)?;
            values.push(TypeValue {
                player: i,
                ty: Some(t),
                utility: base,
            });
            if let Some((deviation, gain)) = best {
                witnesses.push(Witness {
                    player: i,
                    ty: Some(t),
                    deviation,
                    gain,
                });
            }
        }
    }
    Ok((witnesses, values))
}

/// Whether no type has a profitable deviation; stops at the first one found.
fn is_stable(
    model: &GameModel,
    intentions: Option<&TypeStrategyMap>,
    rules: &TypeStrategyMap,
    deviations: &[Vec<Strategy>],
    memo: &mut Memo,
) -> Result<bool, EvalError> {
    for (i, candidates) in deviations.iter().enumerate() {
        for t in 0..model.types[i].len() {
            if best_deviation(model, intentions, rules, i, t, candidates, memo, true)?
                .1
                .is_some()
            {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn all_deviations(model: &GameModel, spec: DeviationSpec) -> Vec<Vec<Strategy>> {
    (0..model.num_players())
        .map(|i| deviation_set(model, i, spec))
        .collect()
}

/// Bayesian Nash equilibrium check: every type best-responds.
pub fn check_bne(
    model: &GameModel,
    rules: &TypeStrategyMap,
    deviations: DeviationSpec,
) -> Result<Verdict, EquilibriumError> {
    if model.kind != GameKind::Bayesian {
        return Err(EquilibriumError::WrongKind {
            expected: "bayesian",
            found: model.kind,
        });
    }
    check_profile(model, rules)?;
    let (w, v) = verify(
        model,
        None,
        rules,
        &all_deviations(model, deviations),
        &mut Memo::new(),
    )?;
    Ok(Verdict::from_parts(w, v, None))
}

/// Equilibrium check for a game with instantiated intentions: best responses
/// against the fixed intentions, and behaviour equal to intentions.
pub fn check_bgii(
    model: &GameModel,
    rules: &TypeStrategyMap,
    deviations: DeviationSpec,
) -> Result<Verdict, EquilibriumError> {
    if model.kind != GameKind::Bgii {
        return Err(EquilibriumError::WrongKind {
            expected: "bgii",
            found: model.kind,
        });
    }
    check_profile(model, rules)?;
    let s = model.intentions.as_ref().ok_or_else(|| {
        EquilibriumError::InvalidProfile(vec![Violation::new(
            "intentions-missing",
            "bgii without intentions",
        )])
    })?;
    let (w, v) = verify(
        model,
        Some(s),
        rules,
        &all_deviations(model, deviations),
        &mut Memo::new(),
    )?;
    Ok(Verdict::from_parts(w, v, Some(rules == s)))
}

/// The game with instantiated intentions `s`.
pub fn instantiate(
    bgi: &GameModel,
    intentions: &TypeStrategyMap,
) -> Result<GameModel, EquilibriumError> {
    if bgi.kind != GameKind::Bgi {
        return Err(EquilibriumError::WrongKind {
            expected: "bgi",
            found: bgi.kind,
        });
    }
    let v = profile_violations(bgi, intentions, "intention");
    if !v.is_empty() {
        return Err(EquilibriumError::InvalidProfile(v));
    }
    Ok(GameModel {
        kind: GameKind::Bgii,
        intentions: Some(intentions.clone()),
        ..bgi.clone()
    })
}

/// Equilibrium check for a game with intentions: `β` must be an equilibrium
/// of the instantiation at `β`.
pub fn check_bgi(
    bgi: &GameModel,
    rules: &TypeStrategyMap,
    deviations: DeviationSpec,
) -> Result<Verdict, EquilibriumError> {
    let inst = instantiate(bgi, rules)?;
    check_bgii(&inst, rules, deviations)
}

/// Dispatches on the model's kind.
pub fn check(
    model: &GameModel,
    rules: &TypeStrategyMap,
    deviations: DeviationSpec,
) -> Result<Verdict, EquilibriumError> {
    match model.kind {
        GameKind::Bayesian => check_bne(model, rules, deviations),
        GameKind::Bgii => check_bgii(model, rules, deviations),
        GameKind::Bgi => check_bgi(model, rules, deviations),
    }
}

/// Decodes a mixed-radix index into one menu choice per slot; the last slot
/// varies fastest.
pub(crate) fn decode(mut index: u64, radices: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; radices.len()];
    for (slot, &r) in radices.iter().enumerate().rev() {
        digits[slot] = (index % r as u64) as usize;
        index /= r as u64;
    }
    digits
}

/// Number of candidates, or an error if it exceeds `cap`.
pub(crate) fn count_candidates(radices: &[usize], cap: u64) -> Result<u64, EquilibriumError> {
    let mut total: u128 = 1;
    for &r in radices {
        total = total.saturating_mul(r as u128);
    }
    if total > cap as u128 {
        return Err(EquilibriumError::SearchSpaceTooLarge {
            size: total.to_string(),
            cap,
        });
    }
    Ok(total as u64)
}

/// Exhaustive search over behaviour-rule profiles built from per-player
/// menus, verifying each candidate against per-player deviation sets.
///
/// For a game with instantiated intentions the only candidate is its own
/// intention profile, whatever the menus.
pub fn search(
    model: &GameModel,
    menus: &[Vec<Strategy>],
    deviations: &[Vec<Strategy>],
    search_space: SearchSpace,
    cap: u64,
) -> Result<SearchReport<TypeStrategyMap>, EquilibriumError> {
    if model.kind == GameKind::Bgii {
        let s = model.intentions.clone().ok_or_else(|| {
            EquilibriumError::InvalidProfile(vec![Violation::new(
                "intentions-missing",
                "bgii without intentions",
            )])
        })?;
        let stable = is_stable(model, Some(&s), &s, deviations, &mut Memo::new())?;
        return Ok(SearchReport {
            equilibria: if stable { vec![s] } else { vec![] },
            search_space,
            candidates: 1,
            exhaustive: true,
        });
    }
    let slots: Vec<usize> = (0..model.num_players())
        .flat_map(|i| std::iter::repeat_n(i, model.types[i].len()))
        .collect();
    let radices: Vec<usize> = slots.iter().map(|&i| menus[i].len()).collect();
    let total = count_candidates(&radices, cap)?;
    let bgi = model.kind == GameKind::Bgi;

    let found: Vec<Option<TypeStrategyMap>> = (0..total)
        .into_par_iter()
        .map_init(Memo::new, |shared, index| {
            let digits = decode(index, &radices);
            let mut rows: Vec<Vec<Strategy>> = vec![Vec::new(); model.num_players()];
            for (&i, d) in slots.iter().zip(digits) {
                rows[i].push(menus[i][d].clone());
            }
            let rules = TypeStrategyMap(rows);
            let stable = if bgi {
                is_stable(model, Some(&rules), &rules, deviations, &mut Memo::new())?
            } else {
                is_stable(model, None, &rules, deviations, shared)?
            };
            Ok(stable.then_some(rules))
        })
        .collect::<Result<_, EvalError>>()?;

    Ok(SearchReport {
        equilibria: found.into_iter().flatten().collect(),
        search_space,
        candidates: total,
        exhaustive: true,
    })
}

/// Every pure behaviour-rule profile, verified against pure deviations.
pub fn solve_pure(
    model: &GameModel,
    cap: u64,
) -> Result<SearchReport<TypeStrategyMap>, EquilibriumError> {
    let menus: Vec<Vec<Strategy>> = (0..model.num_players())
        .map(|i| deviation_set(model, i, DeviationSpec::Pure))
        .collect();
    search(model, &menus, &menus, SearchSpace::Pure, cap)
}

/// Every profile on the resolution-`k` grid. Mixed-linear players are
/// checked against pure deviations (which suffice under linearity),
/// mixed-direct players against the grid itself.
pub fn solve_grid(
    model: &GameModel,
    k: u32,
    cap: u64,
) -> Result<SearchReport<TypeStrategyMap>, EquilibriumError> {
    if k == 0 {
        return Err(EquilibriumError::ZeroResolution);
    }
    let menus: Vec<Vec<Strategy>> = (0..model.num_players())
        .map(|i| deviation_set(model, i, DeviationSpec::Grid(k)))
        .collect();
    let deviations: Vec<Vec<Strategy>> = (0..model.num_players())
        .map(|i| match model.mode(i) {
            StrategyMode::MixedDirect => menus[i].clone(),
            StrategyMode::Pure | StrategyMode::MixedLinear => {
                deviation_set(model, i, DeviationSpec::Pure)
            }
        })
        .collect();
    search(
        model,
        &menus,
        &deviations,
        SearchSpace::Grid { resolution: k },
        cap,
    )
}
