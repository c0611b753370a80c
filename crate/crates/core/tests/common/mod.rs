#![allow(dead_code)]

use std::path::PathBuf;

use bgi_core::format::{
    load_game_str, load_psych_str, read_text, rules_from_str, type_space_from_str,
};
use bgi_core::psych::{PsychGame, TypeSpace};
use bgi_core::{GameModel, Rational, Strategy, TypeStrategyMap};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

pub fn text(name: &str) -> String {
    read_text(&fixture_path(name)).unwrap()
}

pub fn game(name: &str) -> GameModel {
    load_game_str(&text(name)).unwrap()
}

pub fn psych(name: &str) -> PsychGame {
    load_psych_str(&text(name)).unwrap()
}

pub fn space(players: &[String], name: &str) -> TypeSpace {
    type_space_from_str(players, &text(name)).unwrap()
}

pub fn rules(model: &GameModel, json: &str) -> TypeStrategyMap {
    rules_from_str(model, json, "rule").unwrap()
}

pub fn r(s: &str) -> Rational {
    s.parse().unwrap()
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

pub fn pure(xs: &[usize]) -> Vec<Strategy> {
    xs.iter().map(|&a| Strategy::Pure(a)).collect()
}

pub const GAME_FIXTURES: &[&str] = &[
    "auction.json",
    "embarrassment.json",
    "sp2.json",
    "sp2-bgii.json",
    "bravery.json",
    "bravery-uprime.json",
    "nonexistence-pure.json",
    "nonexistence-mixed.json",
];

pub const PSYCH_FIXTURES: &[&str] = &["bravery-psych.json", "bravery-psych-plus.json"];
