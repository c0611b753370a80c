//! Finite-depth belief hierarchies.
//!
//! A depth-`d` hierarchy of player `i` has `d` levels. Level 1 is a
//! distribution over opponents' intended strategies; level `k > 1` is a
//! distribution over pairs of an opponent strategy profile and the
//! opponents' own depth-`(k - 1)` hierarchies. Hierarchies are extracted
//! from a type space by pushing a type's belief forward, or built directly
//! as common belief in a profile.

use std::collections::HashMap;

use thiserror::Error;

use crate::expr::EvalError;
use crate::model::{GameModel, Strategy, TypeStrategyMap};
use crate::psych::{owner_rooted_violations, value_under_hierarchy, PsychGame};
use crate::rational::Rational;
use crate::{FiniteDistribution, Violation};

/// One outcome of a hierarchy level. Both vectors list opponents in player
/// order; `beliefs` is empty on level 1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HierarchyPoint {
    pub strategies: Vec<Strategy>,
    pub beliefs: Vec<BeliefHierarchy>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BeliefHierarchy {
    pub owner: usize,
    pub levels: Vec<FiniteDistribution<HierarchyPoint>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HierarchyError {
    #[error("depth {0} is outside 1..={max}", max = crate::psych::MAX_HIERARCHY_DEPTH)]
    DepthOutOfRange(usize),
    #[error("invalid intention profile: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    InvalidIntentions(Vec<Violation>),
}

/// Index of opponent `j` in `owner`'s opponent lists.
pub fn opponent_slot(owner: usize, j: usize) -> usize {
    if j < owner {
        j
    } else {
        j - 1
    }
}

fn opponents_of<T: Clone>(owner: usize, xs: &[T]) -> Vec<T> {
    xs.iter()
        .enumerate()
        .filter(|&(j, _)| j != owner)
        .map(|(_, x)| x.clone())
        .collect()
}

impl BeliefHierarchy {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// First-order beliefs: the distribution over opponent profiles.
    pub fn first_order(&self) -> FiniteDistribution<Vec<Strategy>> {
        self.levels[0].map(|pt| pt.strategies.clone())
    }

    /// The first `depth` levels.
    pub fn truncate(&self, depth: usize) -> BeliefHierarchy {
        BeliefHierarchy {
            owner: self.owner,
            levels: self.levels.iter().take(depth).cloned().collect(),
        }
    }

    /// Marginal of level `k` (1-based, `k >= 2`) onto strategy profiles and
    /// depth-`(k - 2)` hierarchies.
    pub fn marginal(&self, k: usize) -> FiniteDistribution<HierarchyPoint> {
        self.levels[k - 1].map(|pt| HierarchyPoint {
            strategies: pt.strategies.clone(),
            beliefs: if k == 2 {
                Vec::new()
            } else {
                pt.beliefs.iter().map(|h| h.truncate(k - 2)).collect()
            },
        })
    }

    /// Levels (with the nesting path) whose marginal disagrees with the level
    /// below, here and in every nested hierarchy.
    pub fn coherency_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_incoherence(&mut String::new(), &mut out);
        out
    }

    pub fn is_coherent(&self) -> bool {
        self.coherency_violations().is_empty()
    }

    fn collect_incoherence(&self, path: &mut String, out: &mut Vec<String>) {
        for k in 2..=self.depth() {
            if self.marginal(k) != self.levels[k - 2] {
                out.push(format!("{path}level {k} of player #{}", self.owner));
            }
        }
        for (k, level) in self.levels.iter().enumerate() {
            for (n, (pt, _)) in level.iter().enumerate() {
                for (j, h) in pt.beliefs.iter().enumerate() {
                    let len = path.len();
                    path.push_str(&format!("L{}:{n}:{j}/", k + 1));
                    h.collect_incoherence(path, out);
                    path.truncate(len);
                }
            }
        }
    }
}

/// `(s_{-i})_* p_i(t_i)`: what type `ty` of `player` believes about the
/// others' intended strategies.
pub fn first_order(
    model: &GameModel,
    intentions: &TypeStrategyMap,
    player: usize,
    ty: usize,
) -> FiniteDistribution<Vec<Strategy>> {
    model
        .belief(player, ty)
        .map(|&w| opponents_of(player, &model.profile_at(intentions, w)))
}

/// Extracts hierarchies from one type space and intention profile,
/// memoizing on (player, type, depth).
pub struct HierarchyBuilder<'a> {
    model: &'a GameModel,
    intentions: &'a TypeStrategyMap,
    memo: HashMap<(usize, usize, usize), BeliefHierarchy>,
}

impl<'a> HierarchyBuilder<'a> {
    pub fn new(
        model: &'a GameModel,
        intentions: &'a TypeStrategyMap,
    ) -> Result<Self, HierarchyError> {
        let v = crate::model::profile_violations(model, intentions, "intention");
        if !v.is_empty() {
            return Err(HierarchyError::InvalidIntentions(v));
        }
        Ok(HierarchyBuilder {
            model,
            intentions,
            memo: HashMap::new(),
        })
    }

    /// `φ_i^d(t_i)`.
    pub fn hierarchy(&mut self, player: usize, ty: usize, depth: usize) -> BeliefHierarchy {
        if let Some(h) = self.memo.get(&(player, ty, depth)) {
            return h.clone();
        }
        let mut levels = if depth > 1 {
            self.hierarchy(player, ty, depth - 1).levels
        } else {
            Vec::new()
        };
        let model = self.model;
        let belief = model.belief(player, ty);
        let mut masses = Vec::with_capacity(belief.len());
        for (&w, p) in belief.iter() {
            let strategies = opponents_of(player, &model.profile_at(self.intentions, w));
            let beliefs = if depth == 1 {
                Vec::new()
            } else {
                (0..model.num_players())
                    .filter(|&j| j != player)
                    .map(|j| self.hierarchy(j, model.signal(j, w), depth - 1))
                    .collect()
            };
            masses.push((
                HierarchyPoint {
                    strategies,
                    beliefs,
                },
                p.clone(),
            ));
        }
        levels.push(FiniteDistribution::new_unchecked(masses).expect("beliefs are nonnegative"));
        let h = BeliefHierarchy {
            owner: player,
            levels,
        };
        self.memo.insert((player, ty, depth), h.clone());
        h
    }
}

/// `φ_i^d(t_i)` for one type; `depth` must be in `1..=MAX_HIERARCHY_DEPTH`.
pub fn hierarchy(
    model: &GameModel,
    intentions: &TypeStrategyMap,
    player: usize,
    ty: usize,
    depth: usize,
) -> Result<BeliefHierarchy, HierarchyError> {
    check_depth(depth)?;
    Ok(HierarchyBuilder::new(model, intentions)?.hierarchy(player, ty, depth))
}

pub(crate) fn check_depth(depth: usize) -> Result<(), HierarchyError> {
    if depth == 0 || depth > crate::psych::MAX_HIERARCHY_DEPTH {
        Err(HierarchyError::DepthOutOfRange(depth))
    } else {
        Ok(())
    }
}

/// `χ_i(σ)` truncated to `depth`: common belief in `profile`. Reads nothing
/// but the profile.
pub fn common_belief_hierarchy(
    profile: &[Strategy],
    player: usize,
    depth: usize,
) -> BeliefHierarchy {
    let mut levels = Vec::with_capacity(depth);
    let strategies = opponents_of(player, profile);
    for k in 1..=depth {
        let beliefs = if k == 1 {
            Vec::new()
        } else {
            (0..profile.len())
                .filter(|&j| j != player)
                .map(|j| common_belief_hierarchy(profile, j, k - 1))
                .collect()
        };
        levels.push(FiniteDistribution::point(HierarchyPoint {
            strategies: strategies.clone(),
            beliefs,
        }));
    }
    BeliefHierarchy {
        owner: player,
        levels,
    }
}

/// A state, intention profile and actual profile at which a game with
/// intentions and a psychological game disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub player: usize,
    pub state: usize,
    pub intentions: TypeStrategyMap,
    pub actual: Vec<Strategy>,
    pub bgi_value: Rational,
    pub psych_value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EquivalenceError {
    #[error(
        "the psychological game reads beliefs {required} deep, above the requested depth {depth}"
    )]
    DepthMismatch { required: usize, depth: usize },
    #[error(transparent)]
    Depth(#[from] HierarchyError),
    #[error("players, actions or modes differ: {0}")]
    RosterMismatch(String),
    #[error("utilities are not functions of the owner's hierarchy: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    NotHierarchyExpressible(Vec<Violation>),
    #[error("empty {0} sample")]
    EmptySample(&'static str),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

fn roster_mismatch(model: &GameModel, psych: &PsychGame) -> Option<String> {
    if model.players != psych.players {
        return Some("players".into());
    }
    for i in 0..model.num_players() {
        if model.actions[i] != psych.actions[i] {
            return Some(format!("actions of player {}", model.players[i]));
        }
        if model.strategy_mode[i] != psych.strategy_mode[i] {
            return Some(format!("strategy mode of player {}", model.players[i]));
        }
    }
    None
}

/// Every pure intention profile and every pure actual profile of `model`.
pub fn exhaustive_pure_samples(model: &GameModel) -> (Vec<TypeStrategyMap>, Vec<Vec<Strategy>>) {
    let slots: Vec<usize> = (0..model.num_players())
        .flat_map(|i| std::iter::repeat_n(i, model.types[i].len()))
        .collect();
    let intentions = product(slots.iter().map(|&i| model.actions[i].len()).collect())
        .into_iter()
        .map(|digits| {
            let mut rows = vec![Vec::new(); model.num_players()];
            for (&i, a) in slots.iter().zip(digits) {
                rows[i].push(Strategy::Pure(a));
            }
            TypeStrategyMap(rows)
        })
        .collect();
    let actual = product(model.actions.iter().map(Vec::len).collect())
        .into_iter()
        .map(|digits| digits.into_iter().map(Strategy::Pure).collect())
        .collect();
    (intentions, actual)
}

fn product(radices: Vec<usize>) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for r in radices {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..r).map(move |a| {
                    let mut v = prefix.clone();
                    v.push(a);
                    v
                })
            })
            .collect();
    }
    out
}

/// Whether `ũ_i(σ, ω, s) = v_i(φ_i(τ_i(ω); s), σ)` for every player, every
/// state, and every sampled `s` and `σ`. Returns the first disagreement in
/// (intentions, actual, player, state) order.
pub fn preference_equivalence_check(
    bgi: &GameModel,
    psych: &PsychGame,
    depth: usize,
    intention_sample: &[TypeStrategyMap],
    actual_sample: &[Vec<Strategy>],
) -> Result<Option<Counterexample>, EquivalenceError> {
    check_depth(depth)?;
    let required = psych.depth();
    if required > depth {
        return Err(EquivalenceError::DepthMismatch { required, depth });
    }
    if let Some(what) = roster_mismatch(bgi, psych) {
        return Err(EquivalenceError::RosterMismatch(what));
    }
    let v = owner_rooted_violations(psych);
    if !v.is_empty() {
        return Err(EquivalenceError::NotHierarchyExpressible(v));
    }
    if intention_sample.is_empty() {
        return Err(EquivalenceError::EmptySample("intention"));
    }
    if actual_sample.is_empty() {
        return Err(EquivalenceError::EmptySample("actual"));
    }
    for s in intention_sample {
        let mut builder = HierarchyBuilder::new(bgi, s).map_err(EquivalenceError::Depth)?;
        for sigma in actual_sample {
            for i in 0..bgi.num_players() {
                for w in 0..bgi.states.len() {
                    let ctx = crate::expr::EvalContext::new(bgi, w, sigma).with_intentions(s);
                    let lhs = crate::expr::eval_utility(&bgi.utilities[i], &ctx, i)?;
                    let h = builder.hierarchy(i, bgi.signal(i, w), depth);
                    let rhs = value_under_hierarchy(psych, i, &h, sigma)?;
                    if lhs != rhs {
                        return Ok(Some(Counterexample {
                            player: i,
                            state: w,
                            intentions: s.clone(),
                            actual: sigma.clone(),
                            bgi_value: lhs,
                            psych_value: rhs,
                        }));
                    }
                }
            }
        }
    }
    Ok(None)
}
