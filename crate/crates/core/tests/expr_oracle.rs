//! The parser/evaluator against a separately written postfix machine.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use svfix::expr::{parse, MapEnv};

#[derive(Clone, Debug)]
enum T {
    Lit(f64),
    Var(usize),
    Un(&'static str, Box<T>),
    Bin(&'static str, Box<T>, Box<T>),
}

const VARS: [&str; 4] = ["x1", "x2", "l1", "u1"];
const UNARY: [&str; 6] = ["neg", "sqrt", "sin", "cos", "abs", "exp"];
const BINARY: [&str; 7] = ["+", "-", "*", "/", "^", "min", "max"];

fn gen(rng: &mut ChaCha8Rng, depth: u32) -> T {
    if depth == 0 || rng.random_bool(0.25) {
        return if rng.random_bool(0.5) {
            let v: f64 = rng.random_range(-4.0..4.0);
            T::Lit((v * 100.0).round() / 100.0)
        } else {
            T::Var(rng.random_range(0..VARS.len()))
        };
    }
    if rng.random_bool(0.35) {
        let f = UNARY[rng.random_range(0..UNARY.len())];
        T::Un(f, Box::new(gen(rng, depth - 1)))
    } else {
        let op = BINARY[rng.random_range(0..BINARY.len())];
        T::Bin(
            op,
            Box::new(gen(rng, depth - 1)),
            Box::new(gen(rng, depth - 1)),
        )
    }
}

fn render(t: &T) -> String {
    match t {
        T::Lit(v) if *v < 0.0 => format!("( 0 - {} )", -v),
        T::Lit(v) => format!("{v}"),
        T::Var(i) => VARS[*i].to_string(),
        T::Un("neg", a) => format!("-( {} )", render(a)),
        T::Un(f, a) => format!("{f}( {} )", render(a)),
        T::Bin(op @ ("min" | "max"), a, b) => format!("{op}({} ,{})", render(a), render(b)),
        T::Bin(op, a, b) => format!("( {} ){op}( {} )", render(a), render(b)),
    }
}

enum Op {
    Push(f64),
    Load(usize),
    Un(&'static str),
    Bin(&'static str),
}

fn compile(t: &T, out: &mut Vec<Op>) {
    match t {
        T::Lit(v) => {
            // negative literals are rendered as `0 - |v|`
            if *v < 0.0 {
                out.push(Op::Push(0.0));
                out.push(Op::Push(-v));
                out.push(Op::Bin("-"));
            } else {
                out.push(Op::Push(*v));
            }
        }
        T::Var(i) => out.push(Op::Load(*i)),
        T::Un(f, a) => {
            compile(a, out);
            out.push(Op::Un(f));
        }
        T::Bin(op, a, b) => {
            compile(a, out);
            compile(b, out);
            out.push(Op::Bin(op));
        }
    }
}

fn run(prog: &[Op], env: &[f64; 4]) -> Option<f64> {
    let mut stack: Vec<f64> = Vec::new();
    for op in prog {
        let v = match op {
            Op::Push(v) => *v,
            Op::Load(i) => env[*i],
            Op::Un(f) => {
                let a = stack.pop()?;
                match *f {
                    "neg" => -a,
                    "sqrt" if a < -1e-9 => return None,
                    "sqrt" if a < 0.0 => 0.0,
                    "sqrt" => a.sqrt(),
                    "sin" => a.sin(),
                    "cos" => a.cos(),
                    "abs" => a.abs(),
                    _ => a.exp(),
                }
            }
            Op::Bin(op) => {
                let b = stack.pop()?;
                let a = stack.pop()?;
                match *op {
                    "+" => a + b,
                    "-" => a - b,
                    "*" => a * b,
                    "/" if b == 0.0 => return None,
                    "/" => a / b,
                    "^" => a.powf(b),
                    "min" => a.min(b),
                    _ => a.max(b),
                }
            }
        };
        if !v.is_finite() {
            return None;
        }
        stack.push(v);
    }
    stack.pop()
}

#[test]
fn evaluation_matches_postfix_machine_on_ten_thousand_expressions() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut agreed_values = 0;
    for case in 0..10_000 {
        let t = gen(&mut rng, 5);
        let vals: [f64; 4] = std::array::from_fn(|_| rng.random_range(-3.0..3.0));
        let src = render(&t);
        let e = parse(&src).unwrap_or_else(|err| panic!("case {case}: `{src}`: {err}"));
        let env = MapEnv::from_pairs(&[
            (VARS[0], vals[0]),
            (VARS[1], vals[1]),
            (VARS[2], vals[2]),
            (VARS[3], vals[3]),
        ]);
        let mut prog = Vec::new();
        compile(&t, &mut prog);
        match (e.eval(&env), run(&prog, &vals)) {
            (Ok(a), Some(b)) => {
                assert!(
                    (a - b).abs() <= 1e-12 * b.abs().max(1.0),
                    "case {case}: {src}: {a} vs {b}"
                );
                agreed_values += 1;
            }
            (Err(_), None) => {}
            (got, want) => panic!("case {case}: `{src}`: {got:?} vs {want:?}"),
        }
    }
    assert!(
        agreed_values > 5_000,
        "too few finite cases: {agreed_values}"
    );
}

fn arb_source() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u32..1000).prop_map(|v| format!("{}", v as f64 / 8.0)),
        prop::sample::select(VARS.to_vec()).prop_map(str::to_string),
    ];
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            (
                inner.clone(),
                prop::sample::select(vec!["+", "-", "*", "/", "^"]),
                inner.clone()
            )
                .prop_map(|(a, op, b)| format!("{a} {op} {b}")),
            (
                prop::sample::select(vec!["sqrt", "sin", "cos", "abs", "exp"]),
                inner.clone()
            )
                .prop_map(|(f, a)| format!("{f}({a})")),
            (
                prop::sample::select(vec!["min", "max"]),
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(f, a, b)| format!("{f}({a}, {b})")),
            inner.clone().prop_map(|a| format!("-{a}")),
            inner.prop_map(|a| format!("({a})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn print_parse_round_trip(src in arb_source()) {
        let e = parse(&src).unwrap();
        let printed = e.to_string();
        prop_assert_eq!(parse(&printed).unwrap(), e);
    }

    #[test]
    fn arbitrary_text_never_panics(src in "\\PC{0,40}") {
        let _ = parse(&src).map(|e| e.eval(&MapEnv::from_pairs(&[("x1", 1.0)])));
    }

    #[test]
    fn operator_soup_never_panics(src in "[-+*/^(),.0-9xlu e]{0,60}") {
        let _ = parse(&src).map(|e| e.eval(&MapEnv::from_pairs(&[("x1", 0.5), ("l1", -0.5)])));
    }
}
