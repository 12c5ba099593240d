//! Property tests for the expression language: printing and reparsing a
//! random AST must reproduce it structurally, and evaluation must survive
//! the round trip bitwise wherever it is finite.

use proptest::prelude::*;

use phi_bvp::dsl::expr::{parse_expression, BinOp, Expr, Func};

fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        // Positive literals only: the printer renders negative numbers
        // through Neg, never as a signed literal.
        (0.0f64..1e3).prop_map(Expr::Num),
        prop_oneof![Just("t"), Just("x"), Just("y")].prop_map(|v| Expr::Var(v.to_string())),
    ];
    leaf.prop_recursive(5, 64, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (
                prop_oneof![
                    Just(BinOp::Add),
                    Just(BinOp::Sub),
                    Just(BinOp::Mul),
                    Just(BinOp::Div),
                    Just(BinOp::Pow),
                ],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
            (
                prop_oneof![
                    Just(Func::Exp),
                    Just(Func::Sin),
                    Just(Func::Cos),
                    Just(Func::Tanh),
                    Just(Func::Abs),
                    Just(Func::Sign),
                    Just(Func::Ln),
                    Just(Func::Sqrt),
                ],
                inner.clone()
            )
                .prop_map(|(f, a)| Expr::Call(f, vec![a])),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::Call(Func::Pow, vec![a, b])),
        ]
    })
}

proptest! {
    #[test]
    fn print_parse_round_trip(e in arb_expr()) {
        let printed = e.to_string();
        let reparsed = parse_expression(&printed, &["t", "x", "y"])
            .unwrap_or_else(|err| panic!("printed form `{printed}` failed to parse: {err}"));
        prop_assert_eq!(&reparsed, &e, "printed form `{}`", printed);

        let env = [("t", 0.25), ("x", -1.5), ("y", 2.0)];
        let a = e.eval(&env).unwrap();
        let b = reparsed.eval(&env).unwrap();
        prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
    }

    #[test]
    fn parse_never_panics(s in "[-+*/^()a-z0-9., ]{0,64}") {
        let _ = parse_expression(&s, &["t", "x", "y"]);
    }
}
