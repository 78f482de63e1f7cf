use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use wigner_lab::dsl::{
    parse_scenario, print_document, AmpExpr, Atom, Coef, Collapse, Decl, Document, Ident, ModalityKw, OutcomeDef,
    PredicateExpr, Rational, Span, Spanned, Term, KEYWORDS,
};
use wigner_lab::hilbert::{make_product_space, FactorSpace, Operator, ProductSpace, StateVector};
use wigner_lab::interpretations::{build_kernel, KernelKind};
use wigner_lab::measurement::{
    born_distribution, premeasure, sequential_joint_distribution, JointDistribution, MeasurementStep,
    ObservableBasis, ProtocolStep,
};
use wigner_lab::scenarios::{build_fr_scenario, fr_suite};

fn small_space() -> Arc<ProductSpace> {
    make_product_space(vec![
        FactorSpace::new("coin", ["heads", "tails"]).unwrap(),
        FactorSpace::new("spin", ["down", "up"]).unwrap(),
        FactorSpace::memory("A", ["heads", "tails"]).unwrap(),
        FactorSpace::memory("B", ["down", "up"]).unwrap(),
    ])
    .unwrap()
}

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
        .prop_filter("nonzero", |v: &Vec<Complex64>| v.iter().map(|a| a.norm_sqr()).sum::<f64>() > 1e-3)
}

/// Random state on coin ⊗ spin with both memories blank.
fn blank_memory_state() -> impl Strategy<Value = StateVector> {
    complex_vec(4).prop_map(|c| {
        let space = small_space();
        let mut amps = vec![Complex64::new(0.0, 0.0); space.dimension()];
        for (k, a) in c.into_iter().enumerate() {
            let (coin, spin) = (k / 2, k % 2);
            amps[space.index(&[coin, spin, 0, 0])] = a;
        }
        StateVector::from_amplitudes(space, amps).unwrap()
    })
}

/// Gram-Schmidt on random columns.
fn unitary(n: usize) -> impl Strategy<Value = Operator> {
    prop::collection::vec(complex_vec(n), n)
        .prop_filter_map("independent columns", move |cols| {
            let mut basis: Vec<Vec<Complex64>> = Vec::new();
            for mut c in cols {
                for b in &basis {
                    let ip: Complex64 = b.iter().zip(&c).map(|(x, y)| x.conj() * y).sum();
                    for (ci, bi) in c.iter_mut().zip(b) {
                        *ci -= ip * bi;
                    }
                }
                let norm = c.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                if norm < 1e-3 {
                    return None;
                }
                basis.push(c.into_iter().map(|a| a / norm).collect());
            }
            let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
            for (j, col) in basis.iter().enumerate() {
                for (i, a) in col.iter().enumerate() {
                    entries[i * n + j] = *a;
                }
            }
            Operator::from_complex(n, entries).ok()
        })
}

fn angle_basis(space: &ProductSpace, theta: f64) -> ObservableBasis {
    let (c, s) = (theta.cos(), theta.sin());
    ObservableBasis::new_complex(
        "tilted",
        space,
        &["coin"],
        vec![
            ("heads".into(), vec![Complex64::new(c, 0.0), Complex64::new(s, 0.0)]),
            ("tails".into(), vec![Complex64::new(-s, 0.0), Complex64::new(c, 0.0)]),
        ],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn unitaries_preserve_norm(state in blank_memory_state(), u in unitary(4)) {
        let out = state.apply_unitary(&u, &["coin", "spin"]).unwrap();
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expansion_is_complete(state in blank_memory_state(), theta in 0.0f64..6.3) {
        let space = state.space().clone();
        for basis in [
            angle_basis(&space, theta),
            ObservableBasis::computational(&space, "A").unwrap(),
        ] {
            let parts = state.expand_in_basis(&basis).unwrap();
            let total: f64 = parts.iter().map(|p| p.weight).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            let mut sum = vec![Complex64::new(0.0, 0.0); space.dimension()];
            for p in &parts {
                for (s, a) in sum.iter_mut().zip(p.component.amplitudes()) {
                    *s += a;
                }
            }
            for (s, a) in sum.iter().zip(state.amplitudes()) {
                prop_assert!((s - a).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn born_probabilities_sum_to_one(state in blank_memory_state(), theta in 0.0f64..6.3) {
        let b = angle_basis(state.space(), theta);
        let total: f64 = born_distribution(&state, &b).unwrap().values().map(|p| p.p).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn premeasurement_is_an_isometry(a in blank_memory_state(), b in blank_memory_state(), theta in 0.0f64..6.3) {
        let basis = angle_basis(a.space(), theta);
        let ra = premeasure(&a, &basis, "A").unwrap();
        let rb = premeasure(&b, &basis, "A").unwrap();
        prop_assert!((ra.norm_sqr() - 1.0).abs() < 1e-12);
        let before = a.inner_product(&b).unwrap();
        let after = ra.inner_product(&rb).unwrap();
        prop_assert!((before - after).norm() < 1e-12);
    }

    #[test]
    fn disjoint_measurements_commute(state in blank_memory_state(), theta in 0.0f64..6.3, collapse in any::<bool>()) {
        let space = state.space().clone();
        let mut first = MeasurementStep::new(angle_basis(&space, theta), Some("A"));
        first.collapse = collapse;
        let second = MeasurementStep::new(ObservableBasis::computational(&space, "spin").unwrap(), Some("B"));
        let ab = [ProtocolStep::Measure(first.clone()), ProtocolStep::Measure(second.clone())];
        let ba = [ProtocolStep::Measure(second), ProtocolStep::Measure(first)];
        let x = sequential_joint_distribution(&state, &ab).unwrap().marginal(&["A", "B"]).unwrap();
        let y = sequential_joint_distribution(&state, &ba).unwrap().marginal(&["A", "B"]).unwrap();
        prop_assert!(x.max_abs_diff(&y).unwrap() < 1e-12);
    }

    #[test]
    fn kernels_preserve_marginals(
        p in prop::collection::vec(0.0f64..1.0, 1..12),
        q_seed in prop::collection::vec(0.0f64..1.0, 12),
    ) {
        let n = p.len();
        let norm = |v: &[f64]| -> Option<Vec<f64>> {
            let s: f64 = v.iter().sum();
            (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
        };
        let (Some(p), Some(q)) = (norm(&p), norm(&q_seed[..n])) else { return Ok(()) };
        for kind in [KernelKind::MinimalTransport, KernelKind::IndependentResample] {
            let k = build_kernel(&p, &q, kind).unwrap();
            prop_assert!(k.marginal_error() < 1e-12);
            prop_assert!(k.row_error() < 1e-12);
            for i in 0..n {
                prop_assert!(k.row(i).iter().all(|x| *x >= 0.0));
            }
        }
        // minimal transport keeps as much mass in place as the marginals allow
        let k = build_kernel(&p, &q, KernelKind::MinimalTransport).unwrap();
        let stay: f64 = (0..n).map(|i| p[i] * k.row(i)[i]).sum();
        let bound: f64 = p.iter().zip(&q).map(|(a, b)| a.min(*b)).sum();
        prop_assert!((stay - bound).abs() < 1e-12);
    }
}

fn ident_name() -> impl Strategy<Value = String> {
    "[a-zA-Z_][a-zA-Z0-9_]{0,6}".prop_filter("not a keyword", |s| !KEYWORDS.contains(&s.as_str()))
}

fn ident() -> impl Strategy<Value = Ident> {
    ident_name().prop_map(|name| Ident {
        name,
        span: Span::default(),
    })
}

fn rational() -> impl Strategy<Value = Rational> {
    (0u32..50, prop::option::of(1u32..50)).prop_map(|(n, d)| Rational {
        num: n.into(),
        den: d.map(Into::into),
    })
}

fn coef() -> impl Strategy<Value = Option<Coef>> {
    prop_oneof![
        Just(None),
        rational().prop_map(|q| Some(Coef::Rational(q))),
        (rational(), 1u32..20).prop_map(|(q, n)| Some(Coef::OverSqrt(q, n.into()))),
        rational().prop_map(|q| Some(Coef::Sqrt(q))),
    ]
}

fn amp(width: usize) -> impl Strategy<Value = AmpExpr> {
    prop::collection::vec((any::<bool>(), coef(), prop::collection::vec(ident(), width)), 1..4).prop_map(|terms| {
        AmpExpr {
            terms: terms
                .into_iter()
                .map(|(negative, coef, product)| Term {
                    negative,
                    coef,
                    product,
                    span: Span::default(),
                })
                .collect(),
            span: Span::default(),
        }
    })
}

fn predicate() -> impl Strategy<Value = PredicateExpr> {
    prop::collection::vec((ident(), ident()), 1..3).prop_map(|atoms| PredicateExpr {
        atoms: atoms
            .into_iter()
            .map(|(variable, value)| Atom { variable, value })
            .collect(),
    })
}

fn decl() -> impl Strategy<Value = Decl> {
    let verdict = prop::option::of(prop_oneof![Just("HOLDS"), Just("FAILS"), Just("VACUOUS")]).prop_map(|v| {
        v.map(|s| Ident {
            name: s.into(),
            span: Span::default(),
        })
    });
    prop_oneof![
        (ident(), prop::collection::vec(ident(), 2..4)).prop_map(|(name, labels)| Decl::Factor { name, labels }),
        ident().prop_map(|name| Decl::Agent { name }),
        (1usize..3)
            .prop_flat_map(|w| (
                ident(),
                prop::collection::vec(ident(), w),
                prop::collection::vec((ident(), amp(w)), 1..3)
            ))
            .prop_map(|(name, targets, outs)| Decl::Basis {
                name,
                targets,
                outcomes: outs
                    .into_iter()
                    .map(|(label, amplitude)| OutcomeDef { label, amplitude })
                    .collect(),
            }),
        (1usize..3)
            .prop_flat_map(|w| (prop::collection::vec(ident(), w), amp(w)))
            .prop_map(|(targets, amplitude)| Decl::Prepare { targets, amplitude }),
        (ident(), ident(), prop_oneof![
            Just(Collapse::No),
            Just(Collapse::Yes),
            ident().prop_map(Collapse::Select)
        ])
            .prop_map(|(observable, recorder, collapse)| Decl::Measure {
                observable,
                recorder,
                collapse
            }),
        (ident(), ident(), ident(), prop::collection::vec(ident(), 1..3)).prop_map(
            |(control, label, basis, targets)| Decl::Control {
                control,
                label,
                basis,
                targets
            }
        ),
        (ident(), any::<bool>(), predicate(), prop::option::of(predicate()), verdict).prop_map(
            |(id, certain, event, condition, expect)| Decl::Statement {
                id,
                modality: if certain { ModalityKw::Certain } else { ModalityKw::Possible },
                event,
                condition,
                expect
            }
        ),
        (ident(), prop::collection::vec(ident(), 1..3)).prop_map(|(key, values)| Decl::Option { key, values }),
    ]
}

fn document() -> impl Strategy<Value = Document> {
    prop::collection::vec(decl(), 0..10).prop_map(|decls| Document {
        decls: decls
            .into_iter()
            .map(|node| Spanned {
                node,
                span: Span::default(),
            })
            .collect(),
    })
}

const SNIPPETS: [&str; 24] = [
    "factor", "agent", "basis", "prepare", "measure", "control", "statement", "option", "on", "by",
    "collapse", "apply", "given", "and", "certain", "possible", "expect", "sqrt(", "{", "}", "1/2", "0.5",
    "heads", "⊗",
];

fn token_soup() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            prop::sample::select(SNIPPETS.to_vec()).prop_map(str::to_string),
            "[ -~\n]{0,4}",
        ],
        0..40,
    )
    .prop_map(|parts| parts.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn printing_then_parsing_gives_the_same_tree(doc in document()) {
        let text = print_document(&doc);
        let parsed = parse_scenario(&text);
        prop_assert!(parsed.is_ok(), "{text}\n{:?}", parsed.err());
        let parsed = parsed.unwrap();
        prop_assert_eq!(&parsed.document, &doc);
        prop_assert_eq!(parsed.print(), text);
    }

    #[test]
    fn parser_never_panics_and_reports_within_source(text in prop_oneof![token_soup(), ".{0,200}"]) {
        match parse_scenario(&text) {
            Ok(doc) => {
                if let Err(d) = doc.lower() {
                    prop_assert!(!d.is_empty());
                }
            }
            Err(d) => {
                prop_assert!(!d.is_empty());
                for x in &d {
                    prop_assert!(x.span.start.offset <= text.len());
                    prop_assert!(x.span.end.offset <= text.len());
                    prop_assert!(x.span.start.line >= 1 && x.span.start.col >= 1);
                }
                let again = parse_scenario(&text).unwrap_err();
                prop_assert!(d.iter().zip(&again).all(|(a, b)| a.same_as(b)));
            }
        }
    }

    #[test]
    fn joint_json_decoder_never_panics(text in ".{0,120}") {
        let _ = JointDistribution::from_json(&text);
    }
}

#[test]
fn joint_json_round_trips_on_suite() {
    for (_, options) in fr_suite() {
        let s = build_fr_scenario(&options).unwrap();
        let j = s.run().unwrap().joint;
        let back = JointDistribution::from_json(&j.to_json()).unwrap();
        assert_eq!(back, j);
    }
}
