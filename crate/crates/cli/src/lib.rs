//! The `bgi` command-line tool: each subcommand turns its inputs into a
//! [`Report`], a JSON body plus an exit code.
//!
//! Exit codes: 0 for an affirmative answer, 3 for a well-formed negative
//! one, 1 for bad input and 2 for internal failures.

use std::path::{Path, PathBuf};

use bgi_core::equilibrium::{
    check, solve_grid, solve_pure, DeviationSpec, EquilibriumError, SearchReport, Verdict, Witness,
};
use bgi_core::format::{
    load_path, profile_from_str, read_text, rules_from_str, strategy_entry, to_game_file,
    to_json_string, type_space_from_str, FormatError, Loaded,
};
use bgi_core::hierarchy::{
    exhaustive_pure_samples, hierarchy, preference_equivalence_check, BeliefHierarchy,
    EquivalenceError, HierarchyError,
};
use bgi_core::psych::{
    embed, psych_nash_check, psych_solve, EmbedError, PsychGame, TypeSpace,
    DEFAULT_HIERARCHY_DEPTH, MAX_HIERARCHY_DEPTH,
};
use bgi_core::{GameKind, GameModel, Roster, Strategy, StrategyMode, TypeStrategyMap, Violation};
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;
pub const EXIT_NEGATIVE: i32 = 3;

/// What a subcommand prints and how the process exits.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub exit: i32,
    pub body: Value,
}

impl Report {
    fn answer(affirmative: bool, body: Value) -> Self {
        Report {
            exit: if affirmative { EXIT_OK } else { EXIT_NEGATIVE },
            body,
        }
    }

    fn error(code: &str, message: impl Into<String>) -> Self {
        Report {
            exit: EXIT_INPUT,
            body: json!({ "error": code, "message": message.into() }),
        }
    }

    fn invalid(code: &str, violations: &[Violation]) -> Self {
        let mut r = Report::error(code, format!("{} violation(s)", violations.len()));
        r.body["violations"] = violations_json(violations);
        r
    }

    /// Sorted-key, pretty-printed JSON.
    pub fn render(&self) -> String {
        to_json_string(&self.body)
    }
}

type Outcome = Result<Report, Report>;

fn violations_json(vs: &[Violation]) -> Value {
    Value::Array(
        vs.iter()
            .map(|v| json!({ "code": v.code, "message": v.message }))
            .collect(),
    )
}

fn format_error(e: FormatError) -> Report {
    match e {
        FormatError::Io { .. } => Report::error("io", e.to_string()),
        FormatError::Json { .. } => Report::error("json", e.to_string()),
        FormatError::Invalid(vs) => {
            let code = if vs.iter().any(|v| v.code == "depth-exceeds-cap") {
                "depth-exceeds-cap"
            } else {
                "invalid"
            };
            Report::invalid(code, &vs)
        }
    }
}

fn equilibrium_error(e: EquilibriumError) -> Report {
    match e {
        EquilibriumError::InvalidProfile(vs) => Report::invalid("invalid-profile", &vs),
        EquilibriumError::WrongKind { .. } => Report::error("wrong-kind", e.to_string()),
        EquilibriumError::Eval(_) => Report::error("evaluation", e.to_string()),
        EquilibriumError::SearchSpaceTooLarge { .. } => {
            Report::error("search-space-too-large", e.to_string())
        }
        EquilibriumError::ZeroResolution => Report::error("zero-resolution", e.to_string()),
    }
}

fn load(path: &Path) -> Result<Loaded, Report> {
    load_path(path).map_err(format_error)
}

fn strategy_json<R: Roster + ?Sized>(roster: &R, player: usize, s: &Strategy) -> Value {
    serde_json::to_value(strategy_entry(roster, player, s)).expect("strategy entries serialize")
}

fn rules_json(model: &GameModel, rules: &TypeStrategyMap) -> Value {
    let mut out = serde_json::Map::new();
    for (i, p) in model.players.iter().enumerate() {
        let row: serde_json::Map<String, Value> = model.types[i]
            .iter()
            .enumerate()
            .map(|(t, name)| (name.clone(), strategy_json(model, i, rules.get(i, t))))
            .collect();
        out.insert(p.clone(), Value::Object(row));
    }
    Value::Object(out)
}

fn profile_json<R: Roster + ?Sized>(roster: &R, profile: &[Strategy]) -> Value {
    let out: serde_json::Map<String, Value> = profile
        .iter()
        .enumerate()
        .map(|(i, s)| (roster.players()[i].clone(), strategy_json(roster, i, s)))
        .collect();
    Value::Object(out)
}

fn type_name(model: Option<&GameModel>, player: usize, ty: Option<usize>) -> Value {
    match (model, ty) {
        (Some(m), Some(t)) => Value::String(m.types[player][t].clone()),
        _ => Value::Null,
    }
}

fn witness_json<R: Roster + ?Sized>(roster: &R, model: Option<&GameModel>, w: &Witness) -> Value {
    json!({
        "player": roster.players()[w.player],
        "type": type_name(model, w.player, w.ty),
        "deviation": strategy_json(roster, w.player, &w.deviation),
        "gain": w.gain.to_string(),
    })
}

fn verdict_json<R: Roster + ?Sized>(
    roster: &R,
    model: Option<&GameModel>,
    v: &Verdict,
    spec: DeviationSpec,
) -> Value {
    json!({
        "is_equilibrium": v.is_equilibrium,
        "deviations": spec.to_string(),
        "witnesses": v.witnesses.iter().map(|w| witness_json(roster, model, w)).collect::<Vec<_>>(),
        "checked_conditions": {
            "best_response": v.checked_conditions.best_response,
            "intentions_match": v.checked_conditions.intentions_match,
        },
        "values": v.values.iter().map(|tv| json!({
            "player": roster.players()[tv.player],
            "type": type_name(model, tv.player, tv.ty),
            "utility": tv.utility.to_string(),
        })).collect::<Vec<_>>(),
    })
}

fn search_json<P>(report: &SearchReport<P>, equilibria: Vec<Value>) -> Value {
    json!({
        "equilibria": equilibria,
        "search_space": match report.search_space {
            bgi_core::equilibrium::SearchSpace::Pure => "pure".to_string(),
            bgi_core::equilibrium::SearchSpace::Grid { resolution } => format!("grid:{resolution}"),
        },
        "coverage": report.search_space.coverage(),
        "candidates": report.candidates,
        "exhaustive": report.exhaustive,
    })
}

/// `validate`: parse and check every invariant.
pub fn validate(path: &Path) -> Report {
    let text = match read_text(path) {
        Ok(t) => t,
        Err(e) => return format_error(e),
    };
    match bgi_core::format::load_str(&text) {
        Ok(loaded) => {
            let kind = match &loaded {
                Loaded::Game(m) => m.kind.to_string(),
                Loaded::Psych(_) => "psych".to_string(),
            };
            Report::answer(
                true,
                json!({ "valid": true, "kind": kind, "violations": [] }),
            )
        }
        Err(FormatError::Invalid(vs)) => Report {
            exit: EXIT_INPUT,
            body: json!({ "valid": false, "violations": violations_json(&vs) }),
        },
        Err(e) => format_error(e),
    }
}

/// Default deviations for `check`: grid(4) for psychological games, which
/// only affects mixed-mode players, and pure otherwise.
fn default_check_spec(loaded: &Loaded) -> DeviationSpec {
    match loaded {
        Loaded::Psych(_) => DeviationSpec::Grid(4),
        Loaded::Game(_) => DeviationSpec::Pure,
    }
}

/// `check`: verify one profile.
pub fn check_profile(game: &Path, profile: &Path, deviations: Option<DeviationSpec>) -> Report {
    run(|| {
        let loaded = load(game)?;
        let text = read_text(profile).map_err(format_error)?;
        let spec = deviations.unwrap_or_else(|| default_check_spec(&loaded));
        match &loaded {
            Loaded::Game(m) => {
                let rules = rules_from_str(m, &text, "behaviour rule").map_err(format_error)?;
                let v = check(m, &rules, spec).map_err(equilibrium_error)?;
                Ok(Report::answer(
                    v.is_equilibrium,
                    verdict_json(m, Some(m), &v, spec),
                ))
            }
            Loaded::Psych(g) => {
                let p = profile_from_str(g, &text).map_err(format_error)?;
                let v = psych_nash_check(g, &p, spec).map_err(equilibrium_error)?;
                Ok(Report::answer(
                    v.is_equilibrium,
                    verdict_json(g, None, &v, spec),
                ))
            }
        }
    })
}

fn all_pure<R: Roster + ?Sized>(roster: &R) -> bool {
    (0..roster.players().len()).all(|i| roster.mode(i) == StrategyMode::Pure)
}

/// `solve`: exhaustive search. Games over type spaces enumerate pure rules
/// unless a grid is requested; psychological games default to pure when
/// every player is pure-mode and to grid(4) otherwise.
pub fn solve(
    game: &Path,
    deviations: Option<DeviationSpec>,
    grid: Option<u32>,
    cap: u64,
) -> Report {
    run(|| {
        let loaded = load(game)?;
        let requested = match (grid, deviations) {
            (Some(0), _) => return Err(equilibrium_error(EquilibriumError::ZeroResolution)),
            (Some(k), _) => Some(DeviationSpec::Grid(k)),
            (None, d) => d,
        };
        match &loaded {
            Loaded::Game(m) => {
                let report = match requested {
                    None | Some(DeviationSpec::Pure) => solve_pure(m, cap),
                    Some(DeviationSpec::Grid(k)) => solve_grid(m, k, cap),
                }
                .map_err(equilibrium_error)?;
                let eqs = report.equilibria.iter().map(|r| rules_json(m, r)).collect();
                Ok(Report::answer(
                    !report.equilibria.is_empty(),
                    search_json(&report, eqs),
                ))
            }
            Loaded::Psych(g) => {
                let spec = requested.unwrap_or(if all_pure(g) {
                    DeviationSpec::Pure
                } else {
                    DeviationSpec::Grid(4)
                });
                let report = psych_solve(g, spec, cap).map_err(equilibrium_error)?;
                let eqs = report
                    .equilibria
                    .iter()
                    .map(|p| profile_json(g, p))
                    .collect();
                Ok(Report::answer(
                    !report.equilibria.is_empty(),
                    search_json(&report, eqs),
                ))
            }
        }
    })
}

fn hierarchy_json(model: &GameModel, h: &BeliefHierarchy) -> Value {
    let opponents: Vec<usize> = (0..model.num_players()).filter(|&j| j != h.owner).collect();
    let levels: Vec<Value> = h
        .levels
        .iter()
        .map(|level| {
            let entries: Vec<Value> = level
                .iter()
                .map(|(pt, p)| {
                    let strategies: serde_json::Map<String, Value> = opponents
                        .iter()
                        .zip(&pt.strategies)
                        .map(|(&j, s)| (model.players[j].clone(), strategy_json(model, j, s)))
                        .collect();
                    let mut entry =
                        json!({ "strategies": strategies, "probability": p.to_string() });
                    if !pt.beliefs.is_empty() {
                        let beliefs: serde_json::Map<String, Value> = opponents
                            .iter()
                            .zip(&pt.beliefs)
                            .map(|(&j, nested)| {
                                (
                                    model.players[j].clone(),
                                    hierarchy_json(model, nested)["levels"].clone(),
                                )
                            })
                            .collect();
                        entry["beliefs"] = Value::Object(beliefs);
                    }
                    entry
                })
                .collect();
            Value::Array(entries)
        })
        .collect();
    json!({ "owner": model.players[h.owner], "levels": levels })
}

/// `hierarchy`: the depth-`d` belief hierarchy of one type under an
/// intention profile (the model's own for a game with instantiated
/// intentions).
pub fn show_hierarchy(
    game: &Path,
    intentions: Option<&Path>,
    player: &str,
    ty: &str,
    depth: usize,
) -> Report {
    run(|| {
        let m = match load(game)? {
            Loaded::Game(m) => m,
            Loaded::Psych(_) => {
                return Err(Report::error(
                    "wrong-kind",
                    "a psychological game has no type space",
                ));
            }
        };
        let s = match (intentions, &m.intentions) {
            (Some(path), _) => {
                let text = read_text(path).map_err(format_error)?;
                rules_from_str(&m, &text, "intention").map_err(format_error)?
            }
            (None, Some(s)) => s.clone(),
            (None, None) => {
                return Err(Report::error(
                    "intentions-missing",
                    "pass --intentions for a game without them",
                ));
            }
        };
        let i = m.player_index(player).ok_or_else(|| {
            Report::error("unknown-player", format!("no player named {player:?}"))
        })?;
        let t = m.type_index(i, ty).ok_or_else(|| {
            Report::error(
                "unknown-type",
                format!("player {player} has no type {ty:?}"),
            )
        })?;
        let h = hierarchy(&m, &s, i, t, depth).map_err(|e| match e {
            HierarchyError::DepthOutOfRange(_) => {
                Report::error("depth-out-of-range", e.to_string())
            }
            HierarchyError::InvalidIntentions(vs) => Report::invalid("invalid-profile", &vs),
        })?;
        let mut body = hierarchy_json(&m, &h);
        body["type"] = json!(ty);
        body["depth"] = json!(depth);
        body["coherent"] = json!(h.is_coherent());
        Ok(Report::answer(true, body))
    })
}

/// Where `embed` reads its type space from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeSpaceSource {
    /// One state and one type per player.
    Default,
    File(PathBuf),
}

impl std::str::FromStr for TypeSpaceSource {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(if s == "default" {
            TypeSpaceSource::Default
        } else {
            TypeSpaceSource::File(PathBuf::from(s))
        })
    }
}

fn embed_error(e: EmbedError) -> Report {
    match e {
        EmbedError::DepthExceedsCap { .. } => Report::error("depth-exceeds-cap", e.to_string()),
        EmbedError::InvalidGame(vs) => Report::invalid("invalid", &vs),
        EmbedError::InvalidTypeSpace(vs) => Report::invalid("invalid-type-space", &vs),
    }
}

/// `embed`: write the game with intentions built from a psychological game
/// and confirm preference equivalence on every pure intention and actual
/// profile.
pub fn embed_psych(
    game: &Path,
    typespace: &TypeSpaceSource,
    out: &Path,
    depth: Option<usize>,
) -> Report {
    run(|| {
        let g: PsychGame = match load(game)? {
            Loaded::Psych(g) => g,
            Loaded::Game(m) => {
                return Err(Report::error(
                    "wrong-kind",
                    format!("expected a psychological game, found a {} game", m.kind),
                ));
            }
        };
        let space = match typespace {
            TypeSpaceSource::Default => TypeSpace::minimal(g.num_players()),
            TypeSpaceSource::File(p) => {
                let text = read_text(p).map_err(format_error)?;
                type_space_from_str(&g.players, &text).map_err(format_error)?
            }
        };
        let depth = depth.unwrap_or(DEFAULT_HIERARCHY_DEPTH.max(g.depth()));
        if depth == 0 || depth > MAX_HIERARCHY_DEPTH {
            return Err(Report::error(
                "depth-out-of-range",
                HierarchyError::DepthOutOfRange(depth).to_string(),
            ));
        }
        let bgi = embed(&g, &space).map_err(embed_error)?;
        std::fs::write(out, to_json_string(&to_game_file(&bgi)) + "\n")
            .map_err(|e| Report::error("io", format!("cannot write {}: {e}", out.display())))?;

        let (intentions, actual) = exhaustive_pure_samples(&bgi);
        let mut body = json!({
            "output": out.display().to_string(),
            "kind": GameKind::Bgi.to_string(),
            "depth": depth,
            "intention_samples": intentions.len(),
            "actual_samples": actual.len(),
        });
        match preference_equivalence_check(&bgi, &g, depth, &intentions, &actual) {
            Ok(None) => {
                body["preference_equivalent"] = json!(true);
                Ok(Report::answer(true, body))
            }
            Ok(Some(cx)) => {
                body["preference_equivalent"] = json!(false);
                body["counterexample"] = json!({
                    "player": bgi.players[cx.player],
                    "state": bgi.states[cx.state],
                    "intentions": rules_json(&bgi, &cx.intentions),
                    "actual": profile_json(&bgi, &cx.actual),
                    "bgi_value": cx.bgi_value.to_string(),
                    "psych_value": cx.psych_value.to_string(),
                });
                Ok(Report::answer(false, body))
            }
            Err(EquivalenceError::NotHierarchyExpressible(vs)) => {
                body["preference_equivalent"] = json!(false);
                body["violations"] = violations_json(&vs);
                Ok(Report::answer(false, body))
            }
            Err(e @ EquivalenceError::Depth(_)) => {
                Err(Report::error("depth-out-of-range", e.to_string()))
            }
            Err(e) => Err(Report::error("equivalence", e.to_string())),
        }
    })
}

fn run(f: impl FnOnce() -> Outcome) -> Report {
    f().unwrap_or_else(|r| r)
}

pub fn internal_error(message: impl Into<String>) -> Report {
    Report {
        exit: EXIT_INTERNAL,
        body: json!({ "error": "internal", "message": message.into() }),
    }
}
