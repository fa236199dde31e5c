//! Random well-formed documents, for round-trip and fuzz checks.

use rand::seq::SliceRandom;
use rand::Rng;

use super::ast::*;
use crate::slh::ModeKind;

fn number<R: Rng>(rng: &mut R) -> f64 {
    if rng.gen_bool(0.5) {
        rng.gen_range(0..1000) as f64
    } else {
        // Nonnegative only: a leading minus sign re-lexes as negation.
        rng.gen_range(0.0..1e6) * 10f64.powi(rng.gen_range(-12..6))
    }
}

fn expr<R: Rng>(rng: &mut R, params: &[String], modes: &[String], depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.35) {
        let mut choice = rng.gen_range(0..4);
        if choice == 2 && params.is_empty() || choice == 3 && modes.is_empty() {
            choice = 0;
        }
        return match choice {
            0 => Expr::Real(number(rng)),
            1 => Expr::Imag(number(rng)),
            2 => Expr::Param(params.choose(rng).unwrap().clone()),
            _ => {
                let m = modes.choose(rng).unwrap().clone();
                if rng.gen_bool(0.5) {
                    Expr::Lower(m)
                } else {
                    Expr::Raise(m)
                }
            }
        };
    }
    match rng.gen_range(0..6) {
        0 => Expr::Sqrt(Box::new(expr(rng, params, modes, depth - 1))),
        1 => Expr::Neg(Box::new(expr(rng, params, modes, depth - 1))),
        k => {
            let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div][k - 2];
            Expr::binary(op, expr(rng, params, modes, depth - 1), expr(rng, params, modes, depth - 1))
        }
    }
}

/// A document that satisfies every static rule of the parser. Its values
/// need not elaborate.
pub fn random_document<R: Rng>(rng: &mut R) -> NetworkDoc {
    let params: Vec<String> = (0..rng.gen_range(0..4)).map(|i| format!("p{i}")).collect();
    let optical: Vec<String> = (0..rng.gen_range(1..3)).map(|i| format!("o{i}")).collect();
    let mech: Vec<String> = (0..rng.gen_range(0..2)).map(|i| format!("m{i}")).collect();
    let all: Vec<String> = optical.iter().chain(&mech).cloned().collect();
    let n_systems = rng.gen_range(1..4);
    let params_decl = (0..params.len())
        .map(|i| ParamDecl {
            name: params[i].clone(),
            value: expr(rng, &params[..i], &[], 3),
        })
        .collect();
    let modes = optical
        .iter()
        .map(|l| (l, ModeKind::Optical))
        .chain(mech.iter().map(|l| (l, ModeKind::Mechanical)))
        .map(|(label, kind)| ModeDecl {
            label: label.clone(),
            kind,
            truncation: rng.gen_range(2..20),
        })
        .collect();
    let systems: Vec<SystemDecl> = (0..n_systems)
        .map(|i| SystemDecl {
            name: format!("G{i}"),
            l: expr(rng, &params, &optical, 3),
            h: expr(rng, &params, &all, 3),
        })
        .collect();
    let mut names: Vec<String> = systems.iter().map(|s| s.name.clone()).collect();
    names.shuffle(rng);
    let connection = if n_systems == 2 && rng.gen_bool(0.5) {
        Some(Connection::Feedback {
            plant: names[0].clone(),
            controller: names[1].clone(),
            return_coupling: expr(rng, &params, &optical, 3),
        })
    } else if n_systems > 1 || rng.gen_bool(0.5) {
        Some(Connection::Series(names))
    } else {
        None
    };
    let drive = DriveDecl {
        mode: optical.choose(rng).unwrap().clone(),
        amplitude: expr(rng, &params, &[], 2),
        frequency: rng.gen_bool(0.5).then(|| expr(rng, &params, &[], 2)),
    };
    let baths = (0..rng.gen_range(0..3))
        .map(|_| BathDecl {
            mode: all.choose(rng).unwrap().clone(),
            rate: expr(rng, &params, &[], 2),
            n_th: rng.gen_bool(0.5).then(|| expr(rng, &params, &[], 2)),
        })
        .collect();
    let sweep_names: Vec<String> = params.iter().cloned().chain(["delta_over_chi".to_string()]).collect();
    let sweeps = (0..rng.gen_range(0..3))
        .map(|_| SweepDecl {
            variable: sweep_names.choose(rng).unwrap().clone(),
            start: expr(rng, &params, &[], 2),
            stop: expr(rng, &params, &[], 2),
            points: rng.gen_range(1..500),
        })
        .collect();
    NetworkDoc {
        version: 1,
        units: "gamma".into(),
        params: params_decl,
        modes,
        systems,
        connection,
        drive,
        baths,
        sweeps,
    }
}

/// `src` with a few random character insertions, deletions and swaps.
pub fn corrupt<R: Rng>(src: &str, rng: &mut R) -> String {
    const ALPHABET: &[char] = &['(', ')', '{', '}', '*', '+', '-', '/', '=', '#', '\n', ' ', 'A', 'i', '0', '.', 'é'];
    let mut chars: Vec<char> = src.chars().collect();
    for _ in 0..rng.gen_range(1..6) {
        let at = rng.gen_range(0..=chars.len());
        match rng.gen_range(0..3) {
            0 => chars.insert(at, *ALPHABET.choose(rng).unwrap()),
            1 if at < chars.len() => {
                chars.remove(at);
            }
            _ if at + 1 < chars.len() => chars.swap(at, at + 1),
            _ => {}
        }
    }
    chars.into_iter().collect()
}
