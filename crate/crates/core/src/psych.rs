//! Psychological games: utilities that read belief hierarchies instead of a
//! type space.
//!
//! The same expression language is used. Inside a psychological utility
//! `prob(j, ev)` reads the first level of player `j`'s hierarchy and
//! `expect(j, e)` averages `e` over the top level, moving into the
//! opponents' nested hierarchies. Evaluated against common belief in a
//! profile every belief is a point mass. A utility is a function of its
//! owner's hierarchy alone when it is *owner-rooted*: at the top it only
//! reads the owner's beliefs and never an intention directly.

use rayon::prelude::*;
use thiserror::Error;

use crate::equilibrium::{
    check_bgi, count_candidates, decode, deviation_set, DeviationSpec, EquilibriumError,
    SearchReport, SearchSpace, TypeValue, Verdict, Witness,
};
use crate::expr::{
    action_of, eval_with, event_holds, linear_extension, player_of, Checker, CondExpr, EvalError,
    EventExpr, Frame, IntentionView, UtilityExpr,
};
use crate::hierarchy::{common_belief_hierarchy, opponent_slot, BeliefHierarchy, HierarchyPoint};
use crate::model::{
    duplicates, strategy_violations, validate_model, GameKind, GameModel, Roster, Strategy,
    StrategyMode, TypeStrategyMap,
};
use crate::rational::Rational;
use crate::{FiniteDistribution, Violation};

/// Deepest belief nesting a psychological utility may read.
pub const MAX_HIERARCHY_DEPTH: usize = 6;

/// Hierarchy depth used when none is requested.
pub const DEFAULT_HIERARCHY_DEPTH: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PsychGame {
    pub players: Vec<String>,
    pub actions: Vec<Vec<String>>,
    pub strategy_mode: Vec<StrategyMode>,
    pub utilities: Vec<UtilityExpr>,
}

impl Roster for PsychGame {
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

impl PsychGame {
    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    /// How many levels of beliefs the utilities read.
    pub fn depth(&self) -> usize {
        self.utilities
            .iter()
            .map(UtilityExpr::belief_depth)
            .max()
            .unwrap_or(0)
    }
}

/// Every invariant violation of `game`; empty iff valid.
pub fn validate_psych(game: &PsychGame) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = game.num_players();
    if n == 0 {
        out.push(Violation::new("no-players", "the game declares no players"));
    }
    duplicates("player", &game.players, &mut out);
    for (field, len) in [
        ("actions", game.actions.len()),
        ("strategy_mode", game.strategy_mode.len()),
        ("utilities", game.utilities.len()),
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
        let pname = &game.players[i];
        if game.actions[i].is_empty() {
            out.push(Violation::new(
                "empty-action-set",
                format!("player {pname} has no actions"),
            ));
        }
        duplicates(
            &format!("action of player {pname}"),
            &game.actions[i],
            &mut out,
        );
    }
    for (i, u) in game.utilities.iter().enumerate() {
        let mut checker = Checker::new(game, None);
        checker.utility(u);
        for mut v in checker.out {
            v.message = format!("utility of player {}: {}", game.players[i], v.message);
            out.push(v);
        }
        let depth = u.belief_depth();
        if depth > MAX_HIERARCHY_DEPTH {
            out.push(Violation::new(
                "depth-exceeds-cap",
                format!(
                    "utility of player {} reads beliefs {depth} deep, cap is {MAX_HIERARCHY_DEPTH}",
                    game.players[i]
                ),
            ));
        }
    }
    out
}

/// Places where a utility reads something its owner's hierarchy does not
/// determine: another player's beliefs at the top, or an intention the
/// owner cannot see.
pub fn owner_rooted_violations(game: &PsychGame) -> Vec<Violation> {
    let n = game.num_players();
    let mut out = Vec::new();
    for (i, u) in game.utilities.iter().enumerate() {
        let mut hier = vec![false; n];
        hier[i] = true;
        let mut walk = RootWalk {
            game,
            owner: i,
            out: &mut out,
        };
        walk.utility(u, &hier, &vec![false; n]);
    }
    out
}

struct RootWalk<'a> {
    game: &'a PsychGame,
    owner: usize,
    out: &'a mut Vec<Violation>,
}

impl RootWalk<'_> {
    fn push(&mut self, code: &str, what: String) {
        let msg = format!(
            "utility of player {}: {what}",
            self.game.players[self.owner]
        );
        self.out.push(Violation::new(code, msg));
    }

    fn observer(&mut self, j: &str, hier: &[bool]) -> Option<usize> {
        let k = self.game.player_index(j)?;
        if !hier[k] {
            self.push(
                "belief-outside-hierarchy",
                format!(
                    "reads the beliefs of player {j}, which are not part of the owner's hierarchy"
                ),
            );
        }
        Some(k)
    }

    fn nested(&self, j: usize, intent: &[bool]) -> Vec<bool> {
        (0..intent.len()).map(|k| k != j || intent[k]).collect()
    }

    fn utility(&mut self, e: &UtilityExpr, hier: &[bool], intent: &[bool]) {
        match e {
            UtilityExpr::Const(_) | UtilityExpr::ActualProb { .. } => {}
            UtilityExpr::Binary(_, a, b) => {
                self.utility(a, hier, intent);
                self.utility(b, hier, intent);
            }
            UtilityExpr::Neg(a) => self.utility(a, hier, intent),
            UtilityExpr::If(c, a, b) => {
                self.cond(c, hier, intent);
                self.utility(a, hier, intent);
                self.utility(b, hier, intent);
            }
            UtilityExpr::Prob { observer, event } => {
                if let Some(j) = self.observer(observer, hier) {
                    let seen = self.nested(j, intent);
                    self.event(event, &seen);
                }
            }
            UtilityExpr::Expect { observer, body } => {
                if let Some(j) = self.observer(observer, hier) {
                    let seen = self.nested(j, intent);
                    self.utility(body, &vec![true; hier.len()], &seen);
                }
            }
        }
    }

    fn cond(&mut self, c: &CondExpr, hier: &[bool], intent: &[bool]) {
        match c {
            CondExpr::Compare(_, a, b) => {
                self.utility(a, hier, intent);
                self.utility(b, hier, intent);
            }
            CondExpr::And(a, b) | CondExpr::Or(a, b) => {
                self.cond(a, hier, intent);
                self.cond(b, hier, intent);
            }
            CondExpr::Not(a) => self.cond(a, hier, intent),
            CondExpr::Holds(ev) => self.event(ev, intent),
        }
    }

    fn event(&mut self, ev: &EventExpr, intent: &[bool]) {
        match ev {
            EventExpr::Intends { player, .. } => {
                if let Some(k) = self.game.player_index(player) {
                    if !intent[k] {
                        self.push(
                            "intention-outside-hierarchy",
                            format!("{ev} reads an intention of player {player} directly"),
                        );
                    }
                }
            }
            EventExpr::TypeIs { .. } | EventExpr::StateIn(_) => {}
            EventExpr::And(a, b) | EventExpr::Or(a, b) => {
                self.event(a, intent);
                self.event(b, intent);
            }
            EventExpr::Not(a) => self.event(a, intent),
        }
    }
}

/// What is known at one point of a hierarchy: each player's intended
/// strategy and belief hierarchy, where determined.
#[derive(Clone)]
struct Node<'h> {
    intents: Vec<Option<&'h Strategy>>,
    hiers: Vec<Option<&'h BeliefHierarchy>>,
}

impl<'h> Node<'h> {
    /// The point `pt` of `j`'s hierarchy `h`, seen from inside `j`'s beliefs.
    fn enter(&self, j: usize, h: &'h BeliefHierarchy, pt: &'h HierarchyPoint) -> Node<'h> {
        let n = self.intents.len();
        let mut next = Node {
            intents: Vec::with_capacity(n),
            hiers: Vec::with_capacity(n),
        };
        for k in 0..n {
            if k == j {
                next.intents.push(self.intents[j]);
                next.hiers.push(Some(h));
            } else {
                let slot = opponent_slot(j, k);
                next.intents.push(Some(&pt.strategies[slot]));
                next.hiers.push(pt.beliefs.get(slot));
            }
        }
        next
    }
}

struct NodeView<'a, 'h> {
    game: &'a PsychGame,
    intents: &'a [Option<&'h Strategy>],
}

impl IntentionView for NodeView<'_, '_> {
    fn intention(&self, player: usize) -> Result<&Strategy, EvalError> {
        self.intents[player]
            .ok_or_else(|| EvalError::MissingIntention(self.game.players[player].clone()))
    }

    fn type_of(&self, _: usize) -> Result<usize, EvalError> {
        Err(EvalError::TypeSpaceAtom("type_is".into()))
    }

    fn state(&self) -> Result<usize, EvalError> {
        Err(EvalError::TypeSpaceAtom("state_in".into()))
    }
}

struct HierarchyFrame<'a, 'h> {
    game: &'a PsychGame,
    actual: &'a [Strategy],
    node: &'a Node<'h>,
}

impl<'h> HierarchyFrame<'_, 'h> {
    fn beliefs_of(&self, observer: &str) -> Result<(usize, &'h BeliefHierarchy), EvalError> {
        let j = player_of(self.game, observer)?;
        match self.node.hiers[j] {
            Some(h) if h.depth() > 0 => Ok((j, h)),
            _ => Err(EvalError::MissingBelief(observer.to_string())),
        }
    }
}

impl Frame for HierarchyFrame<'_, '_> {
    fn prob(&self, observer: &str, event: &EventExpr) -> Result<Rational, EvalError> {
        let (j, h) = self.beliefs_of(observer)?;
        let mut total = Rational::zero();
        for (pt, p) in h.levels[0].iter() {
            let inner = self.node.enter(j, h, pt);
            let view = NodeView {
                game: self.game,
                intents: &inner.intents,
            };
            if event_holds(self.game, None, self.actual, event, &view)? {
                total += p;
            }
        }
        Ok(total)
    }

    fn expect(&self, observer: &str, body: &UtilityExpr) -> Result<Rational, EvalError> {
        let (j, h) = self.beliefs_of(observer)?;
        let top = h.levels.last().expect("nonempty hierarchy");
        top.expectation(|pt| {
            let inner = self.node.enter(j, h, pt);
            eval_with(
                body,
                &HierarchyFrame {
                    game: self.game,
                    actual: self.actual,
                    node: &inner,
                },
            )
        })
    }

    fn actual_prob(&self, player: &str, action: &str) -> Result<Rational, EvalError> {
        let i = player_of(self.game, player)?;
        let a = action_of(self.game, i, action)?;
        Ok(self.actual[i].prob_of(a))
    }

    fn holds(&self, event: &EventExpr) -> Result<bool, EvalError> {
        let view = NodeView {
            game: self.game,
            intents: &self.node.intents,
        };
        event_holds(self.game, None, self.actual, event, &view)
    }
}

fn evaluate(
    game: &PsychGame,
    player: usize,
    node: &Node<'_>,
    actual: &[Strategy],
) -> Result<Rational, EvalError> {
    let u = &game.utilities[player];
    let run = |actual: &[Strategy]| eval_with(u, &HierarchyFrame { game, actual, node });
    match game.mode(player) {
        StrategyMode::MixedLinear => linear_extension(&actual[player], actual, player, run),
        StrategyMode::Pure | StrategyMode::MixedDirect => run(actual),
    }
}

/// `v_i(h, σ)` for an owner-rooted utility: only `h` is known, no intention
/// is.
pub fn value_under_hierarchy(
    game: &PsychGame,
    player: usize,
    hierarchy: &BeliefHierarchy,
    actual: &[Strategy],
) -> Result<Rational, EvalError> {
    let n = game.num_players();
    let mut node = Node {
        intents: vec![None; n],
        hiers: vec![None; n],
    };
    node.hiers[player] = Some(hierarchy);
    evaluate(game, player, &node, actual)
}

/// `v_i(χ_i(σ̂), σ)` with common belief in `source` truncated to `depth`.
pub fn psych_eval_at_depth(
    game: &PsychGame,
    player: usize,
    source: &[Strategy],
    actual: &[Strategy],
    depth: usize,
) -> Result<Rational, EvalError> {
    let towers: Vec<BeliefHierarchy> = (0..game.num_players())
        .map(|j| common_belief_hierarchy(source, j, depth))
        .collect();
    let node = Node {
        intents: source.iter().map(Some).collect(),
        hiers: towers.iter().map(Some).collect(),
    };
    evaluate(game, player, &node, actual)
}

/// `v_i(χ_i(σ̂), σ)`, linearized in the player's own actual strategy when
/// the player is mixed-linear.
pub fn psych_eval(
    game: &PsychGame,
    player: usize,
    source: &[Strategy],
    actual: &[Strategy],
) -> Result<Rational, EvalError> {
    psych_eval_at_depth(game, player, source, actual, game.depth().max(1))
}

fn profile_check(game: &PsychGame, profile: &[Strategy]) -> Result<(), EquilibriumError> {
    if profile.len() != game.num_players() {
        return Err(EquilibriumError::InvalidProfile(vec![Violation::new(
            "shape-mismatch",
            format!(
                "profile has {} entries for {} players",
                profile.len(),
                game.num_players()
            ),
        )]));
    }
    let v: Vec<Violation> = profile
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            strategy_violations(
                game,
                i,
                s,
                &format!("strategy of player {}", game.players[i]),
            )
        })
        .collect();
    if v.is_empty() {
        Ok(())
    } else {
        Err(EquilibriumError::InvalidProfile(v))
    }
}

fn verify(
    game: &PsychGame,
    profile: &[Strategy],
    deviations: &[Vec<Strategy>],
) -> Result<(Vec<Witness>, Vec<TypeValue>), EvalError> {
    let depth = game.depth().max(1);
    let mut witnesses = Vec::new();
    let mut values = Vec::new();
    for (i, candidates) in deviations.iter().enumerate() {
        let base = psych_eval_at_depth(game, i, profile, profile, depth)?;
        let mut best: Option<(Strategy, Rational)> = None;
        let mut alt = profile.to_vec();
        for dev in candidates {
            if *dev == profile[i] {
                continue;
            }
            alt[i] = dev.clone();
            let gain = psych_eval_at_depth(game, i, profile, &alt, depth)? - &base;
            if gain.is_positive() && best.as_ref().is_none_or(|(_, g)| gain > *g) {
                best = Some((dev.clone(), gain));
            }
        }
        values.push(TypeValue {
            player: i,
            ty: None,
            utility: base,
        });
        if let Some((deviation, gain)) = best {
            witnesses.push(Witness {
                player: i,
                ty: None,
                deviation,
                gain,
            });
        }
    }
    Ok((witnesses, values))
}

/// Psychological Nash check: with beliefs frozen at common belief in
/// `profile`, no player gains by deviating.
pub fn psych_nash_check(
    game: &PsychGame,
    profile: &[Strategy],
    deviations: DeviationSpec,
) -> Result<Verdict, EquilibriumError> {
    profile_check(game, profile)?;
    let devs: Vec<Vec<Strategy>> = (0..game.num_players())
        .map(|i| deviation_set(game, i, deviations))
        .collect();
    let (w, v) = verify(game, profile, &devs)?;
    Ok(Verdict::from_parts(w, v, None))
}

fn search_space(spec: DeviationSpec) -> SearchSpace {
    match spec {
        DeviationSpec::Pure => SearchSpace::Pure,
        DeviationSpec::Grid(k) => SearchSpace::Grid { resolution: k },
    }
}

fn candidates(menus: &[Vec<Strategy>], cap: u64) -> Result<(Vec<usize>, u64), EquilibriumError> {
    let radices: Vec<usize> = menus.iter().map(Vec::len).collect();
    let total = count_candidates(&radices, cap)?;
    Ok((radices, total))
}

fn pick(menus: &[Vec<Strategy>], digits: Vec<usize>) -> Vec<Strategy> {
    digits
        .into_iter()
        .enumerate()
        .map(|(i, d)| menus[i][d].clone())
        .collect()
}

/// Every profile built from `deviations`' menus (pure actions, or the grid
/// for mixed-mode players), in lexicographic order.
pub fn psych_solve(
    game: &PsychGame,
    deviations: DeviationSpec,
    cap: u64,
) -> Result<SearchReport<Vec<Strategy>>, EquilibriumError> {
    let menus: Vec<Vec<Strategy>> = (0..game.num_players())
        .map(|i| deviation_set(game, i, deviations))
        .collect();
    let (radices, total) = candidates(&menus, cap)?;
    let found: Vec<Option<Vec<Strategy>>> = (0..total)
        .into_par_iter()
        .map(|index| {
            let profile = pick(&menus, decode(index, &radices));
            let (w, _) = verify(game, &profile, &menus)?;
            Ok(w.is_empty().then_some(profile))
        })
        .collect::<Result<_, EvalError>>()?;
    Ok(SearchReport {
        equilibria: found.into_iter().flatten().collect(),
        search_space: search_space(deviations),
        candidates: total,
        exhaustive: true,
    })
}

/// States, types, signals and beliefs, without a game on top.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeSpace {
    pub states: Vec<String>,
    pub types: Vec<Vec<String>>,
    pub signals: Vec<Vec<usize>>,
    pub beliefs: Vec<Vec<FiniteDistribution<usize>>>,
}

impl TypeSpace {
    /// One state and one type per player.
    pub fn minimal(num_players: usize) -> TypeSpace {
        TypeSpace {
            states: vec!["w".into()],
            types: vec![vec!["t".into()]; num_players],
            signals: vec![vec![0]; num_players],
            beliefs: vec![vec![FiniteDistribution::point(0)]; num_players],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EmbedError {
    #[error("utilities read beliefs {depth} deep, cap is {MAX_HIERARCHY_DEPTH}")]
    DepthExceedsCap { depth: usize },
    #[error("invalid psychological game: {}", list(.0))]
    InvalidGame(Vec<Violation>),
    #[error("invalid type space: {}", list(.0))]
    InvalidTypeSpace(Vec<Violation>),
}

fn list(vs: &[Violation]) -> String {
    vs.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// The game with intentions over `space` whose utilities are `game`'s own
/// expressions, now read against the type space and the intention profile.
pub fn embed(game: &PsychGame, space: &TypeSpace) -> Result<GameModel, EmbedError> {
    let depth = game.depth();
    if depth > MAX_HIERARCHY_DEPTH {
        return Err(EmbedError::DepthExceedsCap { depth });
    }
    let v = validate_psych(game);
    if !v.is_empty() {
        return Err(EmbedError::InvalidGame(v));
    }
    let model = GameModel {
        kind: GameKind::Bgi,
        players: game.players.clone(),
        states: space.states.clone(),
        actions: game.actions.clone(),
        strategy_mode: game.strategy_mode.clone(),
        types: space.types.clone(),
        signals: space.signals.clone(),
        beliefs: space.beliefs.clone(),
        intentions: None,
        utilities: game.utilities.clone(),
    };
    let v = validate_model(&model);
    if !v.is_empty() {
        return Err(EmbedError::InvalidTypeSpace(v));
    }
    Ok(model)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TheoremReport {
    pub psych_equilibria: Vec<Vec<Strategy>>,
    pub constant_bgi_equilibria: Vec<Vec<Strategy>>,
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TheoremError {
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
}

/// Compares the psychological equilibria of `game` with the profiles whose
/// constant behaviour rules are equilibria of the embedding over `space`.
pub fn theorem_roundtrip(
    game: &PsychGame,
    space: &TypeSpace,
    deviations: DeviationSpec,
    cap: u64,
) -> Result<TheoremReport, TheoremError> {
    let bgi = embed(game, space)?;
    let psych = psych_solve(game, deviations, cap)?;
    let menus: Vec<Vec<Strategy>> = (0..game.num_players())
        .map(|i| deviation_set(game, i, deviations))
        .collect();
    let (radices, total) = candidates(&menus, cap)?;
    let counts = bgi.type_counts();
    let found: Vec<Option<Vec<Strategy>>> = (0..total)
        .into_par_iter()
        .map(|index| {
            let profile = pick(&menus, decode(index, &radices));
            let rules = TypeStrategyMap::constant(&profile, &counts);
            let verdict = check_bgi(&bgi, &rules, deviations)?;
            Ok(verdict.is_equilibrium.then_some(profile))
        })
        .collect::<Result<_, EquilibriumError>>()?;
    let constant: Vec<Vec<Strategy>> = found.into_iter().flatten().collect();
    Ok(TheoremReport {
        matches: constant == psych.equilibria,
        psych_equilibria: psych.equilibria,
        constant_bgi_equilibria: constant,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn bravery() -> PsychGame {
        let qt = "expect(1, prob(2, intends(1, bold)))";
        PsychGame {
            players: names(&["1", "2"]),
            actions: vec![names(&["bold", "timid"]), names(&["*"])],
            strategy_mode: vec![StrategyMode::Pure; 2],
            utilities: vec![
                parse_expr(&format!(
                    "if(eq(actual_prob(1, bold), 1), sub(2, {qt}), mul(3, sub(1, {qt})))"
                ))
                .unwrap(),
                parse_expr("0").unwrap(),
            ],
        }
    }

    fn profile(a: usize) -> Vec<Strategy> {
        vec![Strategy::Pure(a), Strategy::Pure(0)]
    }

    #[test]
    fn bravery_values() {
        let g = bravery();
        assert!(validate_psych(&g).is_empty());
        assert!(owner_rooted_violations(&g).is_empty());
        assert_eq!(g.depth(), 2);
        assert_eq!(
            psych_eval(&g, 0, &profile(1), &profile(1)).unwrap(),
            Rational::from_integer(3)
        );
        assert_eq!(
            psych_eval(&g, 0, &profile(0), &profile(1)).unwrap(),
            Rational::zero()
        );
        assert_eq!(
            psych_eval(&g, 0, &profile(0), &profile(0)).unwrap(),
            Rational::one()
        );
    }

    #[test]
    fn bravery_equilibria() {
        let g = bravery();
        let report = psych_solve(&g, DeviationSpec::Pure, 100).unwrap();
        assert_eq!(report.equilibria, vec![profile(0), profile(1)]);
    }

    #[test]
    fn non_owner_reads_are_flagged() {
        let mut g = bravery();
        g.utilities[0] = parse_expr("prob(2, intends(1, bold))").unwrap();
        let v = owner_rooted_violations(&g);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].code, "belief-outside-hierarchy");
        g.utilities[0] = parse_expr("prob(1, intends(1, bold))").unwrap();
        assert_eq!(
            owner_rooted_violations(&g)[0].code,
            "intention-outside-hierarchy"
        );
        g.utilities[0] = parse_expr("expect(1, prob(2, intends(1, bold)))").unwrap();
        assert!(owner_rooted_violations(&g).is_empty());
    }

    #[test]
    fn type_space_atoms_are_rejected() {
        let mut g = bravery();
        g.utilities[1] = parse_expr("if(holds(type_is(1, x)), 1, 0)").unwrap();
        let v = validate_psych(&g);
        assert!(v.iter().any(|v| v.code == "type-space-atom-in-psych"));
    }

    #[test]
    fn minimal_space_embeds() {
        let g = bravery();
        let m = embed(&g, &TypeSpace::minimal(2)).unwrap();
        assert_eq!(m.kind, GameKind::Bgi);
        assert!(validate_model(&m).is_empty());
    }
}
