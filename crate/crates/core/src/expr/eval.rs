use std::collections::BTreeMap;

use super::{BinOp, Expr, ExprError, Func};

/// Arguments of `sqrt` in `[-SQRT_CLAMP, 0)` evaluate as `sqrt(0)`.
pub const SQRT_CLAMP: f64 = 1e-9;

/// Variable bindings for evaluation.
pub trait Env {
    fn lookup(&self, name: &str) -> Option<f64>;
}

/// Name-to-value bindings.
#[derive(Clone, Debug, Default)]
pub struct MapEnv(pub BTreeMap<String, f64>);

impl MapEnv {
    pub fn from_pairs(pairs: &[(&str, f64)]) -> Self {
        Self(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.0.insert(name.to_string(), value);
    }
}

impl Env for MapEnv {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

/// Binds indexed names `prefix1..prefixN` to slices without allocating.
#[derive(Clone, Copy, Debug)]
pub struct SlotEnv<'a, const G: usize> {
    groups: [(&'a str, &'a [f64]); G],
}

impl<'a, const G: usize> SlotEnv<'a, G> {
    pub fn new(groups: &[(&'a str, &'a [f64]); G]) -> Self {
        Self { groups: *groups }
    }
}

impl<const G: usize> Env for SlotEnv<'_, G> {
    fn lookup(&self, name: &str) -> Option<f64> {
        let split = name.find(|c: char| c.is_ascii_digit())?;
        let (prefix, digits) = name.split_at(split);
        let idx: usize = digits.parse().ok()?;
        let (_, vals) = self.groups.iter().find(|(p, _)| *p == prefix)?;
        vals.get(idx.checked_sub(1)?).copied()
    }
}

fn domain(e: &Expr, msg: impl Into<String>) -> ExprError {
    ExprError::Domain {
        expr: e.to_string(),
        msg: msg.into(),
    }
}

pub(super) fn eval(e: &Expr, env: &dyn Env) -> Result<f64, ExprError> {
    let v = match e {
        Expr::Num(v) => *v,
        Expr::Var(name) => env
            .lookup(name)
            .ok_or_else(|| ExprError::UnboundVariable(name.clone()))?,
        Expr::Neg(a) => -eval(a, env)?,
        Expr::Call(f, a) => {
            let x = eval(a, env)?;
            match f {
                Func::Sqrt => {
                    if x >= 0.0 {
                        x.sqrt()
                    } else if x >= -SQRT_CLAMP {
                        0.0
                    } else {
                        return Err(domain(e, format!("sqrt of negative value {x}")));
                    }
                }
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Abs => x.abs(),
                Func::Exp => x.exp(),
            }
        }
        Expr::Binary(op, a, b) => {
            let x = eval(a, env)?;
            let y = eval(b, env)?;
            match op {
                BinOp::Add => x + y,
                BinOp::Sub => x - y,
                BinOp::Mul => x * y,
                BinOp::Div => {
                    if y == 0.0 {
                        return Err(domain(e, "division by zero"));
                    }
                    x / y
                }
                BinOp::Pow => x.powf(y),
                BinOp::Min => x.min(y),
                BinOp::Max => x.max(y),
            }
        }
    };
    if !v.is_finite() {
        return Err(domain(e, format!("non-finite result {v}")));
    }
    Ok(v)
}
