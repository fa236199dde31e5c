use fbnet_core::netdsl::ast::*;
use fbnet_core::netdsl::{elaborate, elaborate_with, parse, Diagnostic, ElabError, Pos, FIG3_DOCUMENT, MAX_DIAGNOSTICS};
use fbnet_core::network::FeedbackParams;
use fbnet_core::slh::{series, ModeKind, OperatorExpr, SlhError, SlhTriple};
use num_complex::Complex64;
use proptest::prelude::*;

fn errors(src: &str) -> Vec<Diagnostic> {
    parse(src).expect_err("document should be rejected")
}

const HEADER: &str = "param kappa = 1.0\nmode a optical 3\nmode b mechanical 3\n";

#[test]
fn empty_file_has_no_subsystem() {
    let d = errors("");
    assert_eq!(d[0].message, "no subsystem declared");
    assert_eq!(d[0].pos, Pos { line: 1, col: 1 });
}

#[test]
fn unclosed_parenthesis_points_at_opening() {
    let src = format!("{HEADER}system P {{\n    L = sqrt(kappa) * A(a\n    H = 0.0\n}}\ndrive a amplitude 1.0\n");
    let d = errors(&src);
    assert!(d[0].message.starts_with("unclosed `(`"), "{}", d[0]);
    // `A(` starts at column 23 of line 5; the parenthesis is the next column.
    assert_eq!(d[0].pos, Pos { line: 5, col: 24 });
    let rendered = d[0].render(&src);
    let lines: Vec<&str> = rendered.lines().collect();
    assert_eq!(lines[1].trim_start(), "L = sqrt(kappa) * A(a");
    let caret = lines[2].find('^').unwrap();
    assert_eq!(&lines[1][caret..caret + 1], "(");
    assert_eq!(&lines[1][caret - 1..caret], "A");
}

#[test]
fn parser_collects_several_errors() {
    let src = "mode a optical 1\nparam x = y\nsystem P {\n L = A(b)\n H = 0.0\n}\n$\ndrive a amplitude 1.0\n";
    let d = errors(src);
    assert!(d.len() >= 4, "{d:?}");
    let msgs: Vec<&str> = d.iter().map(|d| d.message.as_str()).collect();
    assert!(msgs.iter().any(|m| m.contains("at least 2")));
    assert!(msgs.iter().any(|m| m.contains("undeclared parameter `y`")));
    assert!(msgs.iter().any(|m| m.contains("undeclared mode `b`")));
    assert!(msgs.iter().any(|m| m.contains("unexpected character")));
    assert!(d.windows(2).all(|w| w[0].pos <= w[1].pos));
}

#[test]
fn diagnostics_are_capped() {
    let src: String = (0..100).map(|i| format!("param p{i} = q\n")).collect();
    assert_eq!(errors(&src).len(), MAX_DIAGNOSTICS);
}

#[test]
fn duplicate_and_type_errors() {
    let dup = format!("{HEADER}mode a optical 4\nsystem P {{ L = A(a) H = 0.0 }}\ndrive a amplitude 1.0\n");
    assert!(errors(&dup).iter().any(|d| d.message.contains("duplicate declaration of `a`")));
    let mech = format!("{HEADER}system P {{ L = A(a) + A(b) H = 0.0 }}\ndrive a amplitude 1.0\n");
    let d = errors(&mech);
    assert!(d[0].message.starts_with("type error"), "{}", d[0]);
    let drive = format!("{HEADER}system P {{ L = A(a) H = 0.0 }}\ndrive b amplitude 1.0\n");
    assert!(errors(&drive)[0].message.contains("cannot drive mechanical"));
    let two = format!("{HEADER}system P {{ L = A(a) H = 0.0 }}\ndrive a amplitude 1.0\ndrive a amplitude 2.0\n");
    assert!(errors(&two)[0].message.contains("only one drive"));
    let none = format!("{HEADER}system P {{ L = A(a) H = 0.0 }}\n");
    assert_eq!(errors(&none)[0].message, "no drive statement");
    let reserved = "param sqrt = 1.0\n";
    assert!(errors(reserved).iter().any(|d| d.message.contains("reserved word")));
}

#[test]
fn fig3_document_matches_feedback_loop() {
    let doc = parse(FIG3_DOCUMENT).unwrap();
    let el = elaborate(&doc).unwrap();
    let reference = FeedbackParams::fig5().composed_triple().unwrap();
    assert_eq!(el.triple.l().len(), 1);
    assert!(el.triple.l()[0].approx_eq(&reference.l()[0], 1e-14));
    assert!(el.triple.h().approx_eq(reference.h(), 1e-14));
    assert_eq!(el.chi(), Some(FeedbackParams::fig5().chi()));
    assert_eq!(el.sweeps.len(), 1);
    assert_eq!(el.sweeps[0].spec.values().len(), 301);
    assert_eq!(el.baths.len(), 1);
    assert!((el.baths[0].1 - 0.01).abs() < 1e-15);
}

#[test]
fn fig3_composition_has_expected_terms() {
    let doc = parse(FIG3_DOCUMENT).unwrap();
    let (k, kf, g) = (2.0f64, 0.5f64, 1.0f64);
    let el = elaborate_with(&doc, &[("kappa", k), ("kappa_f", kf)]).unwrap();
    let reg = el.registry.clone();
    let a = OperatorExpr::lower(&reg, "a").unwrap();
    let c = OperatorExpr::lower(&reg, "c").unwrap();
    let want_l = &a.scale_real(k.sqrt() + kf.sqrt()) + &c.scale_real(g.sqrt());
    assert!(el.triple.l()[0].approx_eq(&want_l, 1e-15));
    let coupling = Complex64::new(0.0, 0.5 * ((g * k).sqrt() - (g * kf).sqrt()));
    let h = el.triple.h();
    let ac = h.coefficient(&(&a.dagger() * &c).terms().next().unwrap().0.clone());
    let ca = h.coefficient(&(&c.dagger() * &a).terms().next().unwrap().0.clone());
    assert!((ac - coupling).norm() < 1e-15);
    assert!((ca + coupling).norm() < 1e-15);
}

#[test]
fn detuning_overrides_follow_derived_parameters() {
    let doc = parse(FIG3_DOCUMENT).unwrap();
    let el = elaborate(&doc).unwrap();
    let ov = fbnet_core::netdsl::detuning_overrides(&el, 1.0).unwrap();
    let moved = elaborate_with(&doc, &ov).unwrap();
    let reference = FeedbackParams::fig5().with_detuning(FeedbackParams::fig5().chi()).composed_triple().unwrap();
    assert!(moved.triple.h().approx_eq(reference.h(), 1e-14));
    assert_eq!(
        elaborate_with(&doc, &[("nope", 1.0)]).unwrap_err(),
        ElabError::UnknownOverride("nope".into())
    );
}

#[test]
fn rotating_frame_removes_drive_frequency() {
    let doc = parse(FIG3_DOCUMENT).unwrap();
    let lab = elaborate_with(&doc, &[("omega_d", 1000.0)]).unwrap();
    let frame = elaborate(&doc).unwrap();
    assert!(lab.triple.h().approx_eq(frame.triple.h(), 1e-12));
}

#[test]
fn no_feedback_statement_is_series() {
    let src = format!(
        "{HEADER}mode c optical 3\nsystem P {{ L = A(a) H = Adag(a) * A(a) }}\nsystem Q {{ L = 2.0 * A(c) H = kappa * Adag(c) * A(c) }}\nseries P -> Q\ndrive a amplitude 0.5\n"
    );
    let el = elaborate(&parse(&src).unwrap()).unwrap();
    let reg = el.registry.clone();
    let a = OperatorExpr::lower(&reg, "a").unwrap();
    let c = OperatorExpr::lower(&reg, "c").unwrap();
    let p = SlhTriple::single(a.clone(), &a.dagger() * &a).unwrap();
    let q = SlhTriple::single(c.scale_real(2.0), &c.dagger() * &c).unwrap();
    let s = series(&p, &q).unwrap();
    let drive = (&a + &a.dagger()).scale_real(0.5);
    assert!(el.triple.l()[0].approx_eq(&s.l()[0], 1e-15));
    assert!(el.triple.h().approx_eq(&(s.h() + &drive), 1e-15));
}

#[test]
fn sweep_block_gives_plan() {
    let src = format!("{HEADER}system P {{ L = A(a) H = 0.0 }}\ndrive a amplitude 1.0\nsweep delta_over_chi from 0 to 3 points 301\n");
    let el = elaborate(&parse(&src).unwrap()).unwrap();
    let v = el.sweeps[0].spec.values();
    assert_eq!(v.len(), 301);
    assert_eq!((v[0], v[300]), (0.0, 3.0));
    assert!((v[100] - 1.0).abs() < 1e-15);
}

#[test]
fn return_coupling_on_controller_is_rejected() {
    let src = format!(
        "{HEADER}mode c optical 3\nsystem P {{ L = A(a) H = 0.0 }}\nsystem K {{ L = A(c) H = 0.0 }}\nfeedback P -> K return A(c)\ndrive a amplitude 1.0\n"
    );
    let err = elaborate(&parse(&src).unwrap()).unwrap_err();
    assert!(matches!(err, ElabError::Slh(SlhError::ReturnCouplingOnController(_))), "{err}");
}

#[test]
fn elaboration_math_errors() {
    let bad_sqrt = format!("{HEADER}param m = -1.0\nsystem P {{ L = sqrt(m) * A(a) H = 0.0 }}\ndrive a amplitude 1.0\n");
    assert!(matches!(elaborate(&parse(&bad_sqrt).unwrap()), Err(ElabError::Math(_))));
    let div = format!("{HEADER}system P {{ L = A(a) / A(a) H = 0.0 }}\ndrive a amplitude 1.0\n");
    assert!(matches!(elaborate(&parse(&div).unwrap()), Err(ElabError::Math(_))));
    let cplx = format!("{HEADER}param z = 1.0i\nsystem P {{ L = A(a) H = 0.0 }}\ndrive a amplitude z\n");
    assert!(matches!(elaborate(&parse(&cplx).unwrap()), Err(ElabError::ComplexParameter(_))));
    let non_herm = format!("{HEADER}system P {{ L = A(a) H = A(a) }}\ndrive a amplitude 1.0\n");
    assert!(matches!(elaborate(&parse(&non_herm).unwrap()), Err(ElabError::Slh(SlhError::NonHermitian(_)))));
}

#[test]
fn lindblad_model_from_document() {
    let el = elaborate(&parse(FIG3_DOCUMENT).unwrap()).unwrap();
    let m = el.lindblad_model().unwrap();
    let reference = FeedbackParams::fig5().lindblad_model([4, 8, 12]).unwrap();
    assert_eq!(m.space().dim(), reference.space().dim());
}

#[test]
fn composed_triple_survives_json() {
    let el = elaborate(&parse(FIG3_DOCUMENT).unwrap()).unwrap();
    let g = &el.triple;
    let back = fbnet_core::io::triple_from_json(&fbnet_core::io::triple_to_json(g).unwrap()).unwrap();
    assert_eq!(back.s(), g.s());
    assert_eq!(back.channels(), g.channels());
    for (x, y) in back.l().iter().zip(g.l()) {
        assert!(x.approx_eq(y, 0.0));
    }
    assert!(back.h().approx_eq(g.h(), 0.0));
    assert_eq!(back.registry(), g.registry());
}

// Generated canonical documents.

fn expr_strategy(params: Vec<String>, modes: Vec<String>) -> BoxedStrategy<Expr> {
    let number = prop_oneof![
        (0u32..1000).prop_map(|n| n as f64),
        prop::num::f64::POSITIVE | prop::num::f64::ZERO,
    ];
    let mut leaves: Vec<BoxedStrategy<Expr>> = vec![
        number.clone().prop_map(Expr::Real).boxed(),
        number.prop_map(Expr::Imag).boxed(),
    ];
    if !params.is_empty() {
        leaves.push(prop::sample::select(params).prop_map(Expr::Param).boxed());
    }
    if !modes.is_empty() {
        let m = modes.clone();
        leaves.push(prop::sample::select(modes).prop_map(Expr::Lower).boxed());
        leaves.push(prop::sample::select(m).prop_map(Expr::Raise).boxed());
    }
    let leaf = prop::strategy::Union::new(leaves);
    leaf.prop_recursive(4, 24, 2, |inner| {
        let op = prop_oneof![Just(BinOp::Add), Just(BinOp::Sub), Just(BinOp::Mul), Just(BinOp::Div)];
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Sqrt(Box::new(e))),
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (op, inner.clone(), inner).prop_map(|(op, l, r)| Expr::binary(op, l, r)),
        ]
    })
    .boxed()
}

fn scalar_strategy(params: Vec<String>) -> BoxedStrategy<Expr> {
    expr_strategy(params, Vec::new())
}

fn doc_strategy() -> impl Strategy<Value = NetworkDoc> {
    (0usize..4, 1usize..3, 0usize..2, 1usize..4).prop_flat_map(|(n_params, n_optical, n_mech, n_systems)| {
        let params: Vec<String> = (0..n_params).map(|i| format!("p{i}")).collect();
        let optical: Vec<String> = (0..n_optical).map(|i| format!("o{i}")).collect();
        let mech: Vec<String> = (0..n_mech).map(|i| format!("m{i}")).collect();
        let all: Vec<String> = optical.iter().chain(&mech).cloned().collect();
        let param_values: Vec<BoxedStrategy<Expr>> = (0..n_params).map(|i| scalar_strategy(params[..i].to_vec())).collect();
        let truncs = prop::collection::vec(2usize..20, n_optical + n_mech);
        let systems = prop::collection::vec(
            (expr_strategy(params.clone(), optical.clone()), expr_strategy(params.clone(), all.clone())),
            n_systems,
        );
        let order = Just((0..n_systems).collect::<Vec<_>>()).prop_shuffle();
        let use_feedback = if n_systems == 2 { any::<bool>().boxed() } else { Just(false).boxed() };
        let ret = expr_strategy(params.clone(), optical.clone());
        let drive = (
            prop::sample::select(optical.clone()),
            scalar_strategy(params.clone()),
            prop::option::of(scalar_strategy(params.clone())),
        );
        let baths = prop::collection::vec(
            (prop::sample::select(all.clone()), scalar_strategy(params.clone()), prop::option::of(scalar_strategy(params.clone()))),
            0..3,
        );
        let sweep_names: Vec<String> = params.iter().cloned().chain(["delta_over_chi".to_string()]).collect();
        let sweeps = prop::collection::vec(
            (prop::sample::select(sweep_names), scalar_strategy(params.clone()), scalar_strategy(params.clone()), 1usize..500),
            0..3,
        );
        (param_values, truncs, systems, order, use_feedback, ret, drive, baths, sweeps).prop_map(
            move |(pv, truncs, systems, order, use_feedback, ret, drive, baths, sweeps)| {
                let modes = optical
                    .iter()
                    .map(|l| (l, ModeKind::Optical))
                    .chain(mech.iter().map(|l| (l, ModeKind::Mechanical)))
                    .zip(truncs)
                    .map(|((label, kind), truncation)| ModeDecl {
                        label: label.clone(),
                        kind,
                        truncation,
                    })
                    .collect();
                let systems: Vec<SystemDecl> = systems
                    .into_iter()
                    .enumerate()
                    .map(|(i, (l, h))| SystemDecl {
                        name: format!("G{i}"),
                        l,
                        h,
                    })
                    .collect();
                let names: Vec<String> = order.iter().map(|&i| systems[i].name.clone()).collect();
                let connection = if use_feedback {
                    Some(Connection::Feedback {
                        plant: names[0].clone(),
                        controller: names[1].clone(),
                        return_coupling: ret,
                    })
                } else if names.len() > 1 || order.len() == 1 && pv.len() % 2 == 1 {
                    Some(Connection::Series(names))
                } else {
                    None
                };
                NetworkDoc {
                    version: 1,
                    units: "gamma".into(),
                    params: params
                        .iter()
                        .zip(pv)
                        .map(|(n, v)| ParamDecl {
                            name: n.clone(),
                            value: v,
                        })
                        .collect(),
                    modes,
                    systems,
                    connection,
                    drive: DriveDecl {
                        mode: drive.0,
                        amplitude: drive.1,
                        frequency: drive.2,
                    },
                    baths: baths
                        .into_iter()
                        .map(|(mode, rate, n_th)| BathDecl { mode, rate, n_th })
                        .collect(),
                    sweeps: sweeps
                        .into_iter()
                        .map(|(variable, start, stop, points)| SweepDecl {
                            variable,
                            start,
                            stop,
                            points,
                        })
                        .collect(),
                }
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn print_then_parse_is_identity(doc in doc_strategy()) {
        let text = doc.to_string();
        let back = parse(&text).map_err(|d| TestCaseError::fail(format!("{}\n{text}", fbnet_core::netdsl::render_all(&d, &text))))?;
        prop_assert_eq!(back, doc);
    }

    #[test]
    fn arbitrary_input_never_panics(src in "\\PC{0,200}") {
        if let Err(d) = parse(&src) {
            prop_assert!(!d.is_empty() && d.len() <= MAX_DIAGNOSTICS);
            for diag in &d {
                prop_assert!(diag.pos.line >= 1 && diag.pos.col >= 1);
                let _ = diag.render(&src);
            }
        }
    }

    #[test]
    fn corrupted_documents_never_panic(cut in 0usize..2000, len in 0usize..40, insert in "[-+*/(){}=# a-zA-Z0-9.\n]{0,5}") {
        let src = FIG3_DOCUMENT;
        let start = cut.min(src.len());
        let end = (start + len).min(src.len());
        if src.is_char_boundary(start) && src.is_char_boundary(end) {
            let mutated = format!("{}{}{}", &src[..start], insert, &src[end..]);
            if let Ok(doc) = parse(&mutated) {
                let _ = elaborate(&doc);
            }
        }
    }
}
